//! Estimation-quality metrics against known ground truth.

use crate::cov::{frobenius_distance, HermitianCov3};
use crate::error::Result;
use crate::grid::CovGrid;

/// Mean Frobenius distance between two covariance grids.
pub fn mean_frobenius_error(estimate: &CovGrid, truth: &CovGrid) -> Result<f64> {
    estimate.same_dims(truth)?;
    let sum: f64 = estimate
        .data()
        .iter()
        .zip(truth.data())
        .map(|(a, b)| frobenius_distance(a, b))
        .sum();
    Ok(sum / estimate.len() as f64)
}

/// Equivalent number of looks, `mean² / variance` (population variance).
/// Returns `None` for fewer than two values or zero variance.
pub fn enl<I: IntoIterator<Item = f64>>(values: I) -> Option<f64> {
    let (mut n, mut mean, mut m2) = (0usize, 0.0f64, 0.0f64);
    for x in values {
        n += 1;
        let delta = x - mean;
        mean += delta / n as f64;
        m2 += delta * (x - mean);
    }
    if n < 2 || m2 <= 0.0 {
        return None;
    }
    let var = m2 / n as f64;
    Some(mean * mean / var)
}

/// Per-channel ENL of the diagonal intensities over the pixels selected by `keep(row, col)`.
pub fn channel_enl(cov: &CovGrid, keep: impl Fn(usize, usize) -> bool) -> [Option<f64>; 3] {
    let w = cov.width();
    let pick = |f: fn(&HermitianCov3) -> f64| {
        enl(cov
            .data()
            .iter()
            .enumerate()
            .filter(|(i, _)| keep(i / w, i % w))
            .map(|(_, c)| f(c)))
    };
    [pick(|c| c.d11), pick(|c| c.d22), pick(|c| c.d33)]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;

    #[test]
    fn enl_of_known_sample() {
        // mean 2, population variance 1
        assert_eq!(enl([1.0, 3.0, 1.0, 3.0]), Some(4.0));
        assert_eq!(enl([2.0, 2.0]), None);
        assert_eq!(enl([2.0]), None);
    }

    #[test]
    fn frobenius_error_of_identical_grids() {
        let g = Grid::filled(3, 3, HermitianCov3::diag(1.0, 2.0, 3.0)).unwrap();
        assert_eq!(mean_frobenius_error(&g, &g).unwrap(), 0.0);
        let z = Grid::filled(3, 3, HermitianCov3::ZERO).unwrap();
        assert!((mean_frobenius_error(&g, &z).unwrap() - 14f64.sqrt()).abs() < 1e-15);
        let other = Grid::filled(3, 4, HermitianCov3::ZERO).unwrap();
        assert!(mean_frobenius_error(&g, &other).is_err());
    }
}
