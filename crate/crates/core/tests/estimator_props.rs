mod common;

use branchpde::estimator::{blowup_horizon, estimate, EstimatorOptions, MomentCheckInput};
use branchpde::problems::{diagonal_point, klein_gordon, linear_heat};
use branchpde::Error;
use common::{tail_integral, Stat};
use proptest::prelude::*;

fn input(terms: Vec<(u32, f64)>, r_p: f64, alpha_p: f64) -> MomentCheckInput {
    MomentCheckInput { terms, p: 2.0, r_p, alpha_p, radius: f64::INFINITY }
}

/// Random `H` with a nonzero quadratic or higher term, so the tail integral converges.
fn series() -> impl Strategy<Value = Vec<(u32, f64)>> {
    (prop::collection::vec((0u32..=1, 0.0f64..2.0), 0..3), prop::collection::vec((2u32..=4, 0.2f64..2.0), 1..3))
        .prop_map(|(low, high)| low.into_iter().chain(high).collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn horizon_matches_quadrature_oracle(terms in series(), r in 0.05f64..3.0, alpha in 0.3f64..3.0) {
        let t = blowup_horizon(&input(terms.clone(), r, alpha)).unwrap();
        let oracle = tail_integral(&terms, 2.0, r) / alpha;
        prop_assert!((t - oracle).abs() <= 1e-6 * oracle, "{} vs {}", t, oracle);
    }

    #[test]
    fn horizon_is_antitone(terms in series(), r in 0.05f64..3.0, bump in 1.01f64..2.0, which in 0usize..8) {
        let base = blowup_horizon(&input(terms.clone(), r, 1.0)).unwrap();
        let larger_r = blowup_horizon(&input(terms.clone(), r * bump, 1.0)).unwrap();
        prop_assert!(larger_r <= base);
        let mut bigger = terms.clone();
        let j = which % bigger.len();
        bigger[j].1 *= bump;
        let larger_c = blowup_horizon(&input(bigger, r, 1.0)).unwrap();
        prop_assert!(larger_c <= base * (1.0 + 1e-9));
    }

    #[test]
    fn determinism_for_any_thread_count(seed in any::<u64>(), threads in 1usize..=8, n_paths in 2usize..5000) {
        let problem = klein_gordon(1).unwrap();
        let x = diagonal_point(1, 0.4);
        let one = EstimatorOptions { n_paths, seed, threads: 1, ..Default::default() };
        let many = EstimatorOptions { threads, ..one };
        let a = estimate(&problem, 0.8, &x, &one).unwrap();
        let b = estimate(&problem, 0.8, &x, &many).unwrap();
        prop_assert_eq!(a.mean.re.to_bits(), b.mean.re.to_bits());
        prop_assert_eq!(a.stderr.re.to_bits(), b.stderr.re.to_bits());
        prop_assert_eq!(a, b);
    }
}

#[test]
fn infeasible_when_r_reaches_radius() {
    let err = blowup_horizon(&MomentCheckInput { terms: vec![(2, 1.0)], p: 2.0, r_p: 2.0, alpha_p: 1.0, radius: 1.5 });
    assert!(matches!(err, Err(Error::Infeasible { .. })));
}

#[test]
fn stderr_scales_with_inverse_root_of_paths() {
    let problem = linear_heat(1).unwrap();
    let x = diagonal_point(1, 0.2);
    let mut ratio = Stat::default();
    for rep in 0..40u64 {
        let small = EstimatorOptions { n_paths: 4096, seed: 1000 + rep, ..Default::default() };
        let large = EstimatorOptions { n_paths: 8192, seed: 5000 + rep, ..Default::default() };
        let a = estimate(&problem, 0.5, &x, &small).unwrap();
        let b = estimate(&problem, 0.5, &x, &large).unwrap();
        ratio.push(a.stderr.re / b.stderr.re);
    }
    let root2 = 2f64.sqrt();
    assert!((ratio.mean() - root2).abs() < 3.0 * ratio.se(), "{} ± {}", ratio.mean(), ratio.se());
}

#[test]
fn standardised_error_is_normal() {
    let problem = linear_heat(2).unwrap();
    let x = diagonal_point(2, 0.3);
    let t = 0.4;
    let exact = problem.exact_at(t, &x).unwrap().re;
    let z: Vec<f64> = (0..200u64)
        .map(|rep| {
            let opts = EstimatorOptions { n_paths: 4096, seed: 77 + rep, ..Default::default() };
            let e = estimate(&problem, t, &x, &opts).unwrap();
            (e.mean.re - exact) / e.stderr.re
        })
        .collect();
    let n = z.len() as f64;
    let mean = z.iter().sum::<f64>() / n;
    let central = |k: i32| z.iter().map(|v| (v - mean).powi(k)).sum::<f64>() / n;
    let skew = central(3) / central(2).powf(1.5);
    let kurt = central(4) / central(2).powi(2);
    let jb = n / 6.0 * (skew * skew + 0.25 * (kurt - 3.0).powi(2));
    // χ²₂ quantile at 99%.
    assert!(jb < 9.21, "Jarque–Bera {jb} (skew {skew}, kurtosis {kurt})");
    assert!(mean.abs() < 3.0 / n.sqrt() * central(2).sqrt(), "mean z {mean}");
}
