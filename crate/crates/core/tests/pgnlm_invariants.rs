mod support;

use num_complex::Complex64;
use pgnlm_core::baselines::boxcar_filter;
use pgnlm_core::cov::frobenius_distance;
use pgnlm_core::pgnlm::{pgnlm_filter, predictor_weights};
use pgnlm_core::simulate::{generate_scene, SceneSpec};
use pgnlm_core::{FilterParams, Grid, HermitianCov3, OpticalGrid, SlcGrid};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEEDS: [u64; 5] = [11, 22, 33, 44, 55];

fn random_scene(n: usize, seed: u64) -> (SlcGrid, OpticalGrid) {
    let mut sigma = HermitianCov3::diag(1.5, 0.4, 1.0);
    sigma.c13 = Complex64::new(-0.5, 0.3);
    sigma.c12 = Complex64::new(0.1, -0.05);
    let mut spec = SceneSpec::homogeneous(n, n, sigma, vec![0.2, 0.5, 0.3, 0.6], seed);
    spec.optical_noise_sigma = 0.1;
    let (slc, opt, _) = generate_scene(&spec).unwrap();
    (slc, opt)
}

fn small() -> FilterParams {
    FilterParams {
        search_radius: 5,
        patch_radius: 2,
        ..FilterParams::default()
    }
}

#[test]
fn weights_are_normalised_everywhere() {
    for seed in SEEDS {
        let (slc, opt) = random_scene(16, seed);
        for r in 0..16 {
            for c in 0..16 {
                let preds = predictor_weights(&slc, &opt, (r, c), &small()).unwrap();
                assert!(preds.iter().all(|p| p.weight >= 0.0));
                let sum: f64 = preds.iter().map(|p| p.weight).sum();
                assert!(
                    (sum - 1.0).abs() <= 1e-10,
                    "seed {seed} pixel ({r},{c}) sum {sum}"
                );
                assert!(
                    preds.iter().any(|p| (p.row, p.col) == (r, c)),
                    "centre dropped"
                );
            }
        }
    }
}

#[test]
fn outputs_are_hermitian_psd() {
    for seed in SEEDS {
        let (slc, opt) = random_scene(24, seed);
        let out = pgnlm_filter(&slc, &opt, &small()).unwrap();
        for c in out.data() {
            assert!(c.is_finite());
            assert!(c.min_eigenvalue() >= -1e-9 * c.trace(), "{c:?}");
        }
        out.validate().unwrap();
    }
}

#[test]
fn outputs_lie_in_convex_hull_of_candidates() {
    for seed in SEEDS {
        let (slc, opt) = random_scene(14, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        // an unrelated guide changes weights only
        let other = OpticalGrid::new(
            14,
            14,
            4,
            (0..14 * 14 * 4).map(|_| rng.random::<f64>()).collect(),
        )
        .unwrap();
        for guide in [&opt, &other] {
            let out = pgnlm_filter(&slc, guide, &small()).unwrap();
            for r in 0..14 {
                for c in 0..14 {
                    let preds = predictor_weights(&slc, guide, (r, c), &small()).unwrap();
                    let mut combo = HermitianCov3::ZERO;
                    for p in &preds {
                        assert!(p.row.abs_diff(r) <= 5 && p.col.abs_diff(c) <= 5);
                        combo = combo
                            .add_scaled(&HermitianCov3::outer(slc.get(p.row, p.col)), p.weight);
                    }
                    assert!(
                        frobenius_distance(&combo, out.get(r, c))
                            <= 1e-12 * (1.0 + combo.frobenius_norm())
                    );
                }
            }
        }
    }
}

#[test]
fn constant_scene_fixed_point_default_params() {
    for seed in SEEDS {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let parts: [f64; 6] = core::array::from_fn(|_| rng.random_range(-2.0..2.0));
        let s0 = pgnlm_core::ScatteringVector::from_parts(parts);
        let slc = Grid::filled(24, 24, s0).unwrap();
        let opt = OpticalGrid::constant(24, 24, 4, rng.random()).unwrap();
        let out = pgnlm_filter(&slc, &opt, &FilterParams::default()).unwrap();
        let want = HermitianCov3::outer(&s0);
        assert!(out.data().iter().all(|c| *c == want));
    }
}

#[test]
fn boxcar_is_the_uniform_weight_limit() {
    for seed in SEEDS {
        let (slc, opt) = random_scene(16, seed);
        for radius in [1, 2] {
            let params = FilterParams {
                search_radius: radius,
                patch_radius: 1,
                lambda: 1e-300,
                tau_sar: f64::INFINITY,
                n_min: 1,
                ..FilterParams::default()
            };
            let nlm = pgnlm_filter(&slc, &opt, &params).unwrap();
            let bx = boxcar_filter(&slc, 2 * radius + 1).unwrap();
            for (a, b) in nlm.data().iter().zip(bx.data()) {
                let (a, b) = (a.to_scalars(), b.to_scalars());
                assert!(a.iter().zip(&b).all(|(x, y)| (x - y).abs() <= 1e-12));
            }
        }
    }
}

#[test]
fn pure_sar_weights_ignore_the_guide() {
    let (slc, opt) = random_scene(12, 3);
    // reverse the pixel order of the guide
    let bands = opt.bands();
    let permuted: Vec<f64> = opt.data().chunks(bands).rev().flatten().copied().collect();
    let permuted = OpticalGrid::new(12, 12, bands, permuted).unwrap();
    let params = FilterParams {
        gamma: 1.0,
        ..small()
    };
    for s in [(0, 0), (6, 6), (11, 3)] {
        let a = predictor_weights(&slc, &opt, s, &params).unwrap();
        let b = predictor_weights(&slc, &permuted, s, &params).unwrap();
        assert_eq!(
            a.iter().map(|p| p.weight).collect::<Vec<_>>(),
            b.iter().map(|p| p.weight).collect::<Vec<_>>()
        );
    }
}

#[test]
fn pure_optical_weights_are_uniform_under_constant_guide() {
    let (slc, _) = random_scene(12, 4);
    let flat = OpticalGrid::constant(12, 12, 2, 0.4).unwrap();
    let params = FilterParams {
        gamma: 0.0,
        ..small()
    };
    for s in [(0, 0), (5, 7)] {
        let preds = predictor_weights(&slc, &flat, s, &params).unwrap();
        let w0 = preds[0].weight;
        assert!(preds.iter().all(|p| p.weight == w0));
    }
}

#[test]
fn raw_score_is_monotone() {
    let p = FilterParams::default();
    assert_eq!(p.raw_score(0.0, 0.0), 1.0);
    let mut last = 1.0;
    for k in 1..50 {
        let d = k as f64 * 0.1;
        let sar = p.raw_score(d, 0.3);
        let opt = p.raw_score(0.3, d);
        assert!(sar < last || k == 1);
        assert!(opt <= 1.0 && sar <= 1.0);
        last = sar;
    }
    assert!(p.raw_score(1.0, 2.0) < p.raw_score(1.0, 1.0));
    assert!(p.raw_score(2.0, 1.0) < p.raw_score(1.0, 1.0));
}

#[test]
fn homogeneous_scene_beats_single_look() {
    use pgnlm_core::metrics::mean_frobenius_error;
    let sigma = HermitianCov3::diag(2.0, 1.0, 0.5);
    let spec = SceneSpec::homogeneous(128, 128, sigma, vec![0.3, 0.6], 2024);
    let (slc, opt, truth) = generate_scene(&spec).unwrap();
    let single = mean_frobenius_error(&slc.single_look(), &truth.sigma_field).unwrap();
    let filtered = mean_frobenius_error(
        &pgnlm_filter(&slc, &opt, &FilterParams::default()).unwrap(),
        &truth.sigma_field,
    )
    .unwrap();
    assert!(
        filtered < single,
        "pgnlm {filtered} vs single-look {single}"
    );
}
