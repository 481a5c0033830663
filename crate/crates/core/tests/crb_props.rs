use ndarray::{Array1, Array2};
use proptest::prelude::*;
use qprkit::crb::{beta_bar, crb, crb_trace, fisher_matrix, input_snr, DEFAULT_CUTOFF};
use qprkit::linalg::jacobi_eigen;
use qprkit::measurement::{acquire, GroundTruth, MeasurementEnsemble};
use qprkit::rng::{standard_normal, stream_rng, Stream};
use qprkit::specfun::GaussParams;
use qprkit::{LastSymbolRule, Quantizer};

fn eq(k: usize) -> Quantizer {
    Quantizer::equiprobable(k, LastSymbolRule::TwoDelta).unwrap()
}

fn edges(q: &Quantizer) -> Vec<f64> {
    let mut e = vec![f64::NEG_INFINITY];
    e.extend_from_slice(q.thresholds());
    e.push(f64::INFINITY);
    e
}

/// d/du log P(bin j | u) with P_j = Phi(tau_j - u^2) - Phi(tau_{j-1} - u^2).
fn score_u(u: f64, j: usize, q: &Quantizer, g: GaussParams) -> f64 {
    let e = edges(q);
    let (lo, hi) = (e[j - 1] - u * u, e[j] - u * u);
    let p = g.cdf(hi) - g.cdf(lo);
    -2.0 * u * (g.pdf(hi) - g.pdf(lo)) / p
}

#[test]
fn beta_bar_matches_score_second_moment() {
    let q = eq(8);
    let sigma = 0.3;
    let g = GaussParams::new(sigma).unwrap();
    let draws = 1_000_000;
    for (idx, u) in [0.4f64, 1.0, 1.7].into_iter().enumerate() {
        let mut rng = stream_rng(idx as u64, Stream::MonteCarlo);
        let (mut s1, mut s2) = (0.0, 0.0);
        for _ in 0..draws {
            let j = q.encode(u * u + sigma * standard_normal(&mut rng));
            let s = score_u(u, j, &q, g).powi(2);
            s1 += s;
            s2 += s * s;
        }
        let mean = s1 / draws as f64;
        let se = ((s2 / draws as f64 - mean * mean) / draws as f64).sqrt();
        let info = -beta_bar(u, &q, sigma).unwrap();
        assert!((mean - info).abs() < 5.0 * se, "u = {u}: {mean} vs {info} (se {se})");
    }
}

#[test]
fn score_mean_and_covariance() {
    for inst in 0..10u64 {
        let (m, n) = (12, 3);
        let e = MeasurementEnsemble::gaussian(m, n, inst).unwrap();
        let x = GroundTruth::unit_sphere(n, inst).unwrap().x_star;
        let q = eq(2 + (inst % 7) as usize);
        let sigma = 0.2 + 0.05 * inst as f64;
        let g = GaussParams::new(sigma).unwrap();
        let fim = fisher_matrix(&e, x.view(), &q, sigma).unwrap().fim;
        let u = e.project(x.view()).unwrap();
        let r = 20_000;
        let mut sum = Array1::<f64>::zeros(n);
        let mut sq = Array1::<f64>::zeros(n);
        let mut outer = Array2::<f64>::zeros((n, n));
        let mut outer_sq = Array2::<f64>::zeros((n, n));
        for d in 0..r {
            let obs = acquire(&e, x.view(), &q, sigma, 1_000_000 * inst + d).unwrap();
            let mut s = Array1::<f64>::zeros(n);
            for i in 0..m {
                s.scaled_add(score_u(u[i], obs.bins[i], &q, g), &e.row(i));
            }
            sum += &s;
            sq += &s.mapv(|v| v * v);
            for a in 0..n {
                for b in 0..n {
                    let p = s[a] * s[b];
                    outer[[a, b]] += p;
                    outer_sq[[a, b]] += p * p;
                }
            }
        }
        let rf = r as f64;
        for a in 0..n {
            let mean = sum[a] / rf;
            let se = ((sq[a] / rf - mean * mean) / rf).sqrt();
            assert!(mean.abs() < 4.0 * se, "instance {inst}: mean {mean} se {se}");
            for b in 0..n {
                let c = outer[[a, b]] / rf;
                let se = ((outer_sq[[a, b]] / rf - c * c) / rf).sqrt();
                assert!((c - fim[[a, b]]).abs() < 5.0 * se, "instance {inst} ({a},{b})");
            }
        }
        let eig = jacobi_eigen(fim.view()).unwrap();
        assert!(eig.values.iter().all(|l| *l >= -1e-10));
    }
}

#[test]
fn bound_tightens_as_noise_falls() {
    let n = 8;
    let e = MeasurementEnsemble::gaussian(80, n, 4).unwrap();
    let x = GroundTruth::two_sinusoid(n).unwrap().x_star;
    for q in [eq(4), eq(8), Quantizer::lloyd_max_default(8).unwrap()] {
        let mut prev = f64::INFINITY;
        for sigma in [1.0, 0.5, 0.3, 0.2, 0.1, 0.05] {
            let c = crb(&e, x.view(), &q, sigma, DEFAULT_CUTOFF).unwrap().crb_trace;
            assert!(c <= prev * (1.0 + 1e-9), "k = {} sigma = {sigma}: {c} > {prev}", q.levels());
            prev = c;
        }
    }
}

#[test]
fn scaled_identity_and_snr() {
    let fim = Array2::<f64>::eye(5) * 4.0;
    assert!((crb_trace(fim.view(), DEFAULT_CUTOFF).unwrap().trace - 1.25).abs() < 1e-12);
    let e = MeasurementEnsemble::from_rows(Array2::from_shape_vec((2, 1), vec![1.0, 2.0]).unwrap()).unwrap();
    let x = ndarray::array![1.0];
    // b = (1, 4): mean b^2 = 8.5
    let s = input_snr(&e, x.view(), 1.0).unwrap();
    assert!((s - 10.0 * 8.5f64.log10()).abs() < 1e-12);
}

proptest! {
    #[test]
    fn beta_bar_is_nonpositive(u in -4.0f64..4.0, sigma in 0.01f64..3.0, k in 2usize..20) {
        let b = beta_bar(u, &eq(k), sigma).unwrap();
        prop_assert!(b <= 0.0 && b.is_finite());
    }
}
