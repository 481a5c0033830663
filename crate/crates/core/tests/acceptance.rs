//! End-to-end acceptance checks, one test per criterion. Each prints a
//! single PASS/FAIL line with the measured values and runtime:
//!
//! `cargo test --release --test acceptance -- --nocapture --test-threads=1`

use std::time::{Duration, Instant};

use ndarray::{array, Array1, Array2};
use qprkit::analysis::{
    cost_sandwich_check, distinguishability, g_exact, g_hat, robustness_factor_mc,
};
use qprkit::crb::fisher_matrix;
use qprkit::harness::{aggregate, crb_sweep, run_trials, ExperimentConfig};
use qprkit::linalg::jacobi_eigen;
use qprkit::measurement::{acquire, GroundTruth, MeasurementEnsemble};
use qprkit::objective::{cost_f, cost_q, grad_f, BinPartition};
use qprkit::rng::{chi2_1, normal_vec, standard_normal, stream_rng, Stream};
use qprkit::solvers::{rank1_project, solve};
use qprkit::specfun::{chi2_1_cdf, chi2_1_inv_cdf, GaussParams};
use qprkit::{LastSymbolRule, LiftedEstimate, Problem, Quantizer, SolverConfig};

fn report(id: u32, ok: bool, detail: String, elapsed: Duration, limit: Duration) {
    let in_time = elapsed <= limit;
    let verdict = if ok && in_time { "PASS" } else { "FAIL" };
    println!(
        "criterion {id:2} {verdict}: {detail} [{:.2} s, limit {} s]",
        elapsed.as_secs_f64(),
        limit.as_secs()
    );
    assert!(ok, "criterion {id}: {detail}");
    assert!(in_time, "criterion {id}: over the time limit");
}

fn eq_half(k: usize) -> Quantizer {
    Quantizer::equiprobable(k, LastSymbolRule::HalfDelta).unwrap()
}

fn eq(k: usize) -> Quantizer {
    Quantizer::equiprobable(k, LastSymbolRule::TwoDelta).unwrap()
}

fn config(pairs: &[(&str, &str)]) -> ExperimentConfig {
    let p: Vec<(String, String)> = pairs.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect();
    ExperimentConfig::from_pairs(&p).unwrap()
}

/// Mean final SNR (dB) per algorithm label, with the failure count.
fn mean_snr(cfg: &ExperimentConfig) -> Vec<(String, f64, usize)> {
    aggregate(&run_trials(cfg).unwrap())
        .into_iter()
        .map(|r| (r.label, r.snr_db_mean, r.n_failed + r.n_exact))
        .collect()
}

#[test]
fn criterion_01_quantizer_design() {
    let t = Instant::now();
    let q = eq(16);
    let delta = q.precision_delta();
    let tau = q.saturation_threshold();
    let c90 = chi2_1_inv_cdf(0.9).unwrap();
    let ok = (delta - 1.1162).abs() < 1e-3 && (tau - 3.4698).abs() < 1e-3 && (c90 - 2.7056).abs() < 1e-3;
    report(
        1,
        ok,
        format!("delta {delta:.5}, tau_15 {tau:.5}, chi2 90% point {c90:.5}"),
        t.elapsed(),
        Duration::from_secs(1),
    );
}

#[test]
fn criterion_02_distinguishability() {
    let t = Instant::now();
    let r = distinguishability(&eq(16), 0.6, 0.01).unwrap();
    let ok = (r.pe_max - 0.9552).abs() < 1e-3 && r.m_min == Some(101);
    report(
        2,
        ok,
        format!("pe_max {:.5}, m_min {:?}", r.pe_max, r.m_min),
        t.elapsed(),
        Duration::from_secs(1),
    );
}

#[test]
fn criterion_03_fit_quality() {
    let t = Instant::now();
    let mut worst = (0.0f64, 0.0f64);
    for i in 0..50 {
        let d = 4.0 * i as f64 / 49.0;
        let dev = (g_exact(d).unwrap() - g_hat(d)).abs();
        if dev > worst.0 {
            worst = (dev, d);
        }
    }
    report(
        3,
        worst.0 < 0.05,
        format!("max |g - g_hat| = {:.5} at d' = {:.4} (need < 0.05)", worst.0, worst.1),
        t.elapsed(),
        Duration::from_secs(5),
    );
}

#[test]
fn criterion_04_quantization_snr() {
    let t = Instant::now();
    let mut rng = stream_rng(2024, Stream::MonteCarlo);
    let b: Vec<f64> = (0..100_000).map(|_| chi2_1(&mut rng)).collect();
    let s8 = eq_half(256).quantization_snr(&b);
    let s2 = eq_half(4).quantization_snr(&b);
    let s8_two = eq(256).quantization_snr(&b);
    report(
        4,
        (s8 - 29.0).abs() <= 1.5 && s2 <= 10.0,
        format!("8-bit {s8:.2} dB, 2-bit {s2:.2} dB (last symbol +2 delta: 8-bit {s8_two:.2} dB)"),
        t.elapsed(),
        Duration::from_secs(5),
    );
}

#[test]
fn criterion_05_noise_robustness() {
    let t = Instant::now();
    let n = 10_000;
    let p = robustness_factor_mc(&eq(2), 0.1, n, 77).unwrap();
    let first = (p - 0.80).abs() <= 0.05;
    let grid = [0.0, 0.01, 0.05, 0.1, 0.2];
    let mut monotone = true;
    let mut rows = Vec::new();
    for k in [2, 8, 32] {
        let q = eq(k);
        let ps: Vec<f64> = grid.iter().map(|&s| robustness_factor_mc(&q, s, n, 77).unwrap()).collect();
        for w in ps.windows(2) {
            let band = 3.0 * ((w[0] * (1.0 - w[0]) + w[1] * (1.0 - w[1])) / n as f64).sqrt();
            monotone &= w[1] <= w[0] + band;
        }
        rows.push(format!("k={k} {:?}", ps.iter().map(|v| (v * 1e4).round() / 1e4).collect::<Vec<_>>()));
    }
    report(
        5,
        first && monotone,
        format!(
            "p_r(k=2, 0.1) = {p:.4} (target 0.80 +- 0.05: {}), non-increasing: {monotone}; {}",
            if first { "ok" } else { "miss" },
            rows.join("; ")
        ),
        t.elapsed(),
        Duration::from_secs(10),
    );
}

#[test]
fn criterion_06_acceleration_gain() {
    let t = Instant::now();
    let cfg = config(&[("n", "32"), ("m", "320"), ("k", "8"), ("trials", "20"), ("iters", "100"), ("algorithms", "qpr,qpr-a")]);
    let r = mean_snr(&cfg);
    let gap = r[1].1 - r[0].1;
    report(
        6,
        (5.0..=11.0).contains(&gap) && r.iter().all(|x| x.2 == 0),
        format!("QPR {:.2} dB, QPR-A {:.2} dB, gap {gap:.2} dB (need [5, 11])", r[0].1, r[1].1),
        t.elapsed(),
        Duration::from_secs(600),
    );
}

#[test]
fn criterion_07_baseline_gap() {
    let t = Instant::now();
    let mut ok = true;
    let mut parts = Vec::new();
    for k in ["4", "8", "16"] {
        let cfg = config(&[("n", "32"), ("k", k), ("trials", "20"), ("algorithms", "qpr-a:eq,pl-a:lmq")]);
        let r = mean_snr(&cfg);
        let gap = r[0].1 - r[1].1;
        ok &= gap >= 5.0 && r.iter().all(|x| x.2 == 0);
        parts.push(format!("k={k}: QPR-A {:.2}, PL-A {:.2}, gap {gap:.2}", r[0].1, r[1].1));
    }
    report(7, ok, parts.join("; "), t.elapsed(), Duration::from_secs(1800));
}

#[test]
fn criterion_08_sparsity_gain() {
    let t = Instant::now();
    let gap = |s: &str| {
        let cfg = config(&[
            ("n", "32"),
            ("k", "4"),
            ("signal", "sparse"),
            ("sparsity", s),
            ("trials", "20"),
            ("algorithms", "qpr-a,sqpr-a"),
        ]);
        let r = mean_snr(&cfg);
        (r[1].1 - r[0].1, r[0].1, r[1].1)
    };
    let (g1, a1, b1) = gap("3");
    let (g3, a3, b3) = gap("10");
    report(
        8,
        g1 >= 8.0 && g3 < g1,
        format!(
            "s=3: QPR-A {a1:.2}, SQPR-A {b1:.2}, gap {g1:.2} dB; s=10: QPR-A {a3:.2}, SQPR-A {b3:.2}, gap {g3:.2} dB"
        ),
        t.elapsed(),
        Duration::from_secs(1200),
    );
}

#[test]
fn criterion_09_crb_tracking() {
    let t = Instant::now();
    let cfg = config(&[
        ("experiment", "crb"),
        ("n", "32"),
        ("k", "8"),
        ("input_snr_db", "25,30,35"),
        ("ensembles", "5"),
        ("noise_draws", "5"),
        ("seed", "500"),
    ]);
    let points = crb_sweep(&cfg).unwrap();
    let mut ok = true;
    let mut parts = Vec::new();
    for p in &points {
        let crb_eq = p.crb.iter().find(|c| c.0.label() == "eq").unwrap().1;
        let mse = p.mse[0].1;
        let gap = 10.0 * (mse / crb_eq).log10();
        ok &= (0.0..=4.0).contains(&gap) && p.mse[0].3 == 0;
        parts.push(format!(
            "{} dB: MSE {:.2}, CRB-EQ {:.2}, gap {gap:.2}",
            p.input_snr_db,
            10.0 * mse.log10(),
            10.0 * crb_eq.log10()
        ));
    }
    report(9, ok, parts.join("; "), t.elapsed(), Duration::from_secs(1800));
}

fn random_symmetric(n: usize, seed: u64) -> Array2<f64> {
    let mut rng = stream_rng(seed, Stream::Custom(99));
    let g = Array2::from_shape_vec((n, n), normal_vec(&mut rng, n * n)).unwrap();
    (&g + &g.t()) * 0.5
}

fn outer(v: &Array1<f64>) -> Array2<f64> {
    let c = v.view().insert_axis(ndarray::Axis(1));
    c.dot(&c.t())
}

fn gradient_check() -> usize {
    let mut bad = 0;
    for seed in 0..100u64 {
        let n = 2 + (seed % 5) as usize;
        let m = 8 + (seed % 11) as usize;
        let e = MeasurementEnsemble::gaussian(m, n, seed).unwrap();
        let x = GroundTruth::unit_sphere(n, seed).unwrap().x_star;
        let q = eq(2 + (seed % 9) as usize);
        let obs = acquire(&e, x.view(), &q, 0.0, seed).unwrap();
        let part = BinPartition::from_observation(&obs);
        let xm = random_symmetric(n, seed);
        let h = random_symmetric(n, seed + 5000);
        let g = grad_f(&part, &e, &q, &xm).unwrap();
        let eps = 1e-6;
        let fd = (cost_f(&part, &e, &q, &(&xm + &(&h * eps))).unwrap()
            - cost_f(&part, &e, &q, &(&xm - &(&h * eps))).unwrap())
            / (2.0 * eps);
        let an: f64 = g.iter().zip(h.iter()).map(|(a, b)| a * b).sum();
        if (fd - an).abs() > 1e-5 * an.abs().max(1.0) {
            bad += 1;
        }
    }
    bad
}

fn descent_check() -> usize {
    let mut bad = 0;
    for seed in 0..50u64 {
        let n = 4 + (seed % 5) as usize;
        let e = MeasurementEnsemble::gaussian(10 * n, n, seed).unwrap();
        let x = GroundTruth::unit_sphere(n, seed).unwrap().x_star;
        let q = eq(2 + (seed % 15) as usize);
        let obs = acquire(&e, x.view(), &q, 0.0, seed).unwrap();
        let part = BinPartition::from_observation(&obs);
        let mut prev = cost_f(&part, &e, &q, &Array2::<f64>::zeros((n, n))).unwrap();
        let tr = solve(&Problem::new(&e, &obs), &SolverConfig::qpr().with_iterations(50)).unwrap();
        for r in &tr.rows {
            if r.cost > prev * (1.0 + 1e-12) + 1e-15 {
                bad += 1;
                break;
            }
            prev = r.cost;
        }
    }
    bad
}

fn projection_check() -> usize {
    let mut bad = 0;
    for seed in 0..100u64 {
        let y = random_symmetric(3, seed);
        // full eigendecomposition via the characteristic cubic
        let q = (y[[0, 0]] + y[[1, 1]] + y[[2, 2]]) / 3.0;
        let p1 = y[[0, 1]].powi(2) + y[[0, 2]].powi(2) + y[[1, 2]].powi(2);
        let p2 = (y[[0, 0]] - q).powi(2) + (y[[1, 1]] - q).powi(2) + (y[[2, 2]] - q).powi(2) + 2.0 * p1;
        let p = (p2 / 6.0).sqrt();
        let b = (&y - &(Array2::<f64>::eye(3) * q)) / p;
        let det = b[[0, 0]] * (b[[1, 1]] * b[[2, 2]] - b[[1, 2]] * b[[2, 1]])
            - b[[0, 1]] * (b[[1, 0]] * b[[2, 2]] - b[[1, 2]] * b[[2, 0]])
            + b[[0, 2]] * (b[[1, 0]] * b[[2, 1]] - b[[1, 1]] * b[[2, 0]]);
        let lam = q + 2.0 * p * ((det / 2.0).clamp(-1.0, 1.0).acos() / 3.0).cos();
        let s = &y - &(Array2::<f64>::eye(3) * lam);
        let (r0, r1, r2) = (s.row(0).to_owned(), s.row(1).to_owned(), s.row(2).to_owned());
        let cross = |a: &Array1<f64>, c: &Array1<f64>| {
            array![a[1] * c[2] - a[2] * c[1], a[2] * c[0] - a[0] * c[2], a[0] * c[1] - a[1] * c[0]]
        };
        let v = [cross(&r0, &r1), cross(&r0, &r2), cross(&r1, &r2)]
            .into_iter()
            .max_by(|a, c| a.dot(a).partial_cmp(&c.dot(c)).unwrap())
            .unwrap();
        let v = &v / v.dot(&v).sqrt();
        let oracle = outer(&v) * lam.max(0.0);
        let got = rank1_project(y.view()).unwrap().to_matrix();
        if (&got - &oracle).iter().any(|d| d.abs() > 1e-8) {
            bad += 1;
        }
    }
    bad
}

fn codebook_check() -> usize {
    let mut bad = 0;
    for seed in 0..20u64 {
        let e = MeasurementEnsemble::gaussian(160, 16, seed).unwrap();
        let x = GroundTruth::unit_sphere(16, seed).unwrap().x_star;
        let q = eq(2 + (seed % 10) as usize);
        let obs = acquire(&e, x.view(), &q, 0.0, seed).unwrap();
        let k = q.levels();
        let other: Vec<f64> = (1..=k)
            .map(|j| if j < k { q.lower(j) + 0.1 * (q.upper(j) - q.lower(j)) } else { q.lower(j) + 5.0 })
            .collect();
        let obs2 = obs.relabel(q.with_symbols(other).unwrap()).unwrap();
        let cfg = SolverConfig::qpr_a().with_iterations(50);
        let a = solve(&Problem::new(&e, &obs), &cfg).unwrap();
        let b = solve(&Problem::new(&e, &obs2), &cfg).unwrap();
        if a.rows != b.rows || a.x_hat != b.x_hat {
            bad += 1;
        }
    }
    bad
}

/// (lower-side violations, conditional violations, bounded count)
fn sandwich_check() -> (usize, usize, usize) {
    let (mut lower, mut cond, mut bounded) = (0, 0, 0);
    for seed in 0..1000u64 {
        let n = 2 + (seed % 7) as usize;
        let m = 10 * n;
        let e = MeasurementEnsemble::gaussian(m, n, seed).unwrap();
        let xs = GroundTruth::unit_sphere(n, seed).unwrap().x_star;
        let q = eq(2 + (seed % 15) as usize);
        let obs = acquire(&e, xs.view(), &q, 0.0, seed).unwrap();
        let p = Problem::new(&e, &obs).with_truth(xs.view());
        let v = GroundTruth::unit_sphere(n, seed + 70_000).unwrap().x_star;
        let x = LiftedEstimate::from_vector(v.view());
        let part = BinPartition::from_observation(&obs);
        // lower side on an arbitrary scaled estimate
        let scaled = LiftedEstimate { lambda: 0.1 + 0.5 * (seed % 7) as f64, v: v.clone() };
        let gap = cost_q(&obs.symbols(), &e, &scaled).unwrap() - cost_f(&part, &e, &q, &scaled).unwrap();
        if gap < -1e-12 {
            lower += 1;
        }
        let d0 = e
            .intensities(v.view())
            .unwrap()
            .into_iter()
            .chain(e.intensities(xs.view()).unwrap())
            .fold(q.saturation_threshold(), f64::max)
            * (1.0 + 1e-12);
        let r = cost_sandwich_check(&p, &x, d0).unwrap();
        if r.bounded_flag {
            bounded += 1;
            let tol = 1e-9 * r.q.max(1.0);
            if r.q_minus_f < -tol
                || r.q_minus_f > r.prop4_upper + tol
                || r.f > r.prop5_upper + tol
                || r.f < r.prop6_lower - tol
            {
                cond += 1;
            }
        }
    }
    (lower, cond, bounded)
}

/// (PSD failures, score-mean failures, covariance failures)
fn fisher_check() -> (usize, usize, usize) {
    let (mut psd, mut mean_bad, mut cov_bad) = (0, 0, 0);
    for inst in 0..10u64 {
        let (m, n) = (10, 3);
        let e = MeasurementEnsemble::gaussian(m, n, 40 + inst).unwrap();
        let x = GroundTruth::unit_sphere(n, 40 + inst).unwrap().x_star;
        let q = eq(2 + (inst % 6) as usize);
        let sigma = 0.25 + 0.05 * inst as f64;
        let g = GaussParams::new(sigma).unwrap();
        let fim = fisher_matrix(&e, x.view(), &q, sigma).unwrap().fim;
        if jacobi_eigen(fim.view()).unwrap().values.iter().any(|l| *l < -1e-10) {
            psd += 1;
        }
        let u = e.project(x.view()).unwrap();
        let mut edges = vec![f64::NEG_INFINITY];
        edges.extend_from_slice(q.thresholds());
        edges.push(f64::INFINITY);
        let draws = 20_000;
        let mut rng = stream_rng(inst, Stream::MonteCarlo);
        let mut s1 = Array1::<f64>::zeros(n);
        let mut s2 = Array1::<f64>::zeros(n);
        let mut c1 = Array2::<f64>::zeros((n, n));
        let mut c2 = Array2::<f64>::zeros((n, n));
        for _ in 0..draws {
            let mut s = Array1::<f64>::zeros(n);
            for i in 0..m {
                let u2 = u[i] * u[i];
                let j = q.encode(u2 + sigma * standard_normal(&mut rng));
                let (lo, hi) = (edges[j - 1] - u2, edges[j] - u2);
                let d = -2.0 * u[i] * (g.pdf(hi) - g.pdf(lo)) / (g.cdf(hi) - g.cdf(lo));
                s.scaled_add(d, &e.row(i));
            }
            s1 += &s;
            s2 += &s.mapv(|v| v * v);
            let o = outer(&s);
            c2 += &o.mapv(|v| v * v);
            c1 += &o;
        }
        let r = draws as f64;
        for a in 0..n {
            let mu = s1[a] / r;
            if mu.abs() > 4.0 * ((s2[a] / r - mu * mu) / r).sqrt() {
                mean_bad += 1;
            }
            for b in 0..n {
                let c = c1[[a, b]] / r;
                if (c - fim[[a, b]]).abs() > 5.0 * ((c2[[a, b]] / r - c * c) / r).sqrt() {
                    cov_bad += 1;
                }
            }
        }
    }
    (psd, mean_bad, cov_bad)
}

/// (lifting mismatches, KS statistic)
fn lifting_check() -> (usize, f64) {
    let mut bad = 0;
    for seed in 0..100u64 {
        let n = 1 + (seed % 8) as usize;
        let e = MeasurementEnsemble::gaussian(20, n, seed).unwrap();
        let x = GroundTruth::unit_sphere(n, seed).unwrap().x_star;
        let t = e.lifted_traces(outer(&x).view()).unwrap();
        let b = e.intensities(x.view()).unwrap();
        if t.iter().zip(&b).any(|(a, c)| (a - c).abs() > 1e-12 * (1.0 + c)) {
            bad += 1;
        }
    }
    let e = MeasurementEnsemble::gaussian(100_000, 5, 1).unwrap();
    let x = GroundTruth::unit_sphere(5, 1).unwrap().x_star;
    let mut b = e.intensities(x.view()).unwrap();
    b.sort_by(|a, c| a.partial_cmp(c).unwrap());
    let m = b.len() as f64;
    let ks = b.iter().enumerate().fold(0.0f64, |acc, (i, &v)| {
        let c = chi2_1_cdf(v).unwrap();
        acc.max((c - i as f64 / m).abs()).max(((i + 1) as f64 / m - c).abs())
    });
    (bad, ks)
}

#[test]
fn criterion_10_property_suites() {
    let t = Instant::now();
    let grad = gradient_check();
    let desc = descent_check();
    let proj = projection_check();
    let code = codebook_check();
    let (lower, cond, bounded) = sandwich_check();
    let (psd, mean_bad, cov_bad) = fisher_check();
    let (lift, ks) = lifting_check();
    let ok = grad == 0
        && desc == 0
        && proj == 0
        && code == 0
        && lower == 0
        && cond == 0
        && psd == 0
        && mean_bad == 0
        && cov_bad == 0
        && lift == 0
        && ks < 0.01;
    report(
        10,
        ok,
        format!(
            "failures: gradient {grad}/100, descent {desc}/50, projection {proj}/100, codebook {code}/20, \
             Q-F>=0 {lower}/1000, conditional {cond}/{bounded}, FIM psd {psd}/10, score mean {mean_bad}/30, \
             score cov {cov_bad}/90, lifting {lift}/100; KS {ks:.4}"
        ),
        t.elapsed(),
        Duration::from_secs(600),
    );
}
