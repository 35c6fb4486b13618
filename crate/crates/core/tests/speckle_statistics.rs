use num_complex::Complex64;
use pgnlm_core::baselines::boxcar_filter;
use pgnlm_core::metrics::enl;
use pgnlm_core::rng;
use pgnlm_core::simulate::{generate_scene, sample_scattering, SceneSpec};
use pgnlm_core::HermitianCov3;

fn sigma() -> HermitianCov3 {
    let mut s = HermitianCov3::diag(2.0, 0.5, 1.5);
    s.c13 = Complex64::new(0.6, -0.4);
    s.c12 = Complex64::new(0.1, 0.2);
    s
}

fn multilook_error(n: usize, trial: u64) -> f64 {
    let sig = sigma();
    let mut r = rng::stream(99, 77, trial);
    let mut acc = HermitianCov3::ZERO;
    for _ in 0..n {
        let s = sample_scattering(&sig, &mut r).unwrap();
        acc = acc.add_scaled(&HermitianCov3::outer(&s), 1.0 / n as f64);
    }
    (acc - sig).frobenius_norm() / sig.frobenius_norm()
}

#[test]
fn multilook_error_shrinks_as_inverse_sqrt() {
    // average over trials so the ratio is stable
    let mean_err = |n| (0..40).map(|t| multilook_error(n, t)).sum::<f64>() / 40.0;
    let errs = [mean_err(16), mean_err(256), mean_err(4096)];
    for w in errs.windows(2) {
        let ratio = w[0] / w[1];
        assert!((2.0..=8.0).contains(&ratio), "{errs:?}");
    }
}

#[test]
fn adjacent_pixels_are_uncorrelated() {
    let spec = SceneSpec::homogeneous(256, 256, sigma(), vec![0.5], 5);
    let (slc, _, _) = generate_scene(&spec).unwrap();
    let mut pairs = Vec::new();
    for r in 0..256 {
        for c in 0..255 {
            pairs.push((slc.get(r, c).hh.norm_sqr(), slc.get(r, c + 1).hh.norm_sqr()));
        }
    }
    for r in 0..255 {
        for c in 0..256 {
            pairs.push((slc.get(r, c).hh.norm_sqr(), slc.get(r + 1, c).hh.norm_sqr()));
        }
    }
    let n = pairs.len() as f64;
    let (ma, mb) = pairs
        .iter()
        .fold((0.0, 0.0), |(a, b), p| (a + p.0 / n, b + p.1 / n));
    let (mut cov, mut va, mut vb) = (0.0, 0.0, 0.0);
    for (a, b) in &pairs {
        cov += (a - ma) * (b - mb);
        va += (a - ma) * (a - ma);
        vb += (b - mb) * (b - mb);
    }
    let corr = cov / (va * vb).sqrt();
    assert!(corr.abs() <= 0.05, "correlation {corr}");
}

#[test]
fn sigma_field_follows_labels() {
    let spec = SceneSpec::homogeneous(8, 8, sigma(), vec![0.5], 1);
    let (_, _, truth) = generate_scene(&spec).unwrap();
    assert!(truth.sigma_field.data().iter().all(|s| *s == sigma()));
    assert!(truth
        .labels
        .data()
        .iter()
        .all(|&l| l == spec.regions[0].class_id));
}

#[test]
fn single_look_enl_is_one_and_boxcar_five_is_about_25() {
    let spec = SceneSpec::homogeneous(256, 256, sigma(), vec![0.5], 8);
    let (slc, _, _) = generate_scene(&spec).unwrap();
    let single = enl(slc.data().iter().map(|s| s.hh.norm_sqr())).unwrap();
    assert!((0.9..=1.1).contains(&single), "single-look ENL {single}");
    let bx = boxcar_filter(&slc, 5).unwrap();
    let interior = (2..254).flat_map(|r| (2..254).map(move |c| (r, c)));
    let looks = enl(interior.map(|(r, c)| bx.get(r, c).d11)).unwrap();
    assert!((17.5..=32.5).contains(&looks), "5x5 boxcar ENL {looks}");
}
