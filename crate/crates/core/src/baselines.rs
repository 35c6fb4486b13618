//! Comparison filters: single-look and boxcar multilooking.

use alloc::vec;

use crate::cov::HermitianCov3;
use crate::error::{Error, Result};
use crate::grid::{CovGrid, Grid, SlcGrid};

/// `ssᴴ` per pixel, no averaging.
pub fn single_look(slc: &SlcGrid) -> Result<CovGrid> {
    slc.validate()?;
    Ok(slc.single_look())
}

/// Uniform average of `s_t s_tᴴ` over a `window x window` neighbourhood,
/// clipped at the borders and divided by the number of pixels actually used.
pub fn boxcar_filter(slc: &SlcGrid, window: usize) -> Result<CovGrid> {
    check_window(window)?;
    slc.validate()?;
    let (h, w) = slc.dims();
    let mut out = vec![HermitianCov3::ZERO; h * w];
    boxcar_rows(slc, window, 0, &mut out);
    Grid::new(h, w, out)
}

pub fn check_window(window: usize) -> Result<()> {
    if window == 0 || window % 2 == 0 {
        return Err(Error::param("window", "window must be odd"));
    }
    Ok(())
}

/// Boxcar estimates for rows `row0 ..` into `out` (whole rows).
pub fn boxcar_rows(slc: &SlcGrid, window: usize, row0: usize, out: &mut [HermitianCov3]) {
    let (h, w) = slc.dims();
    let r = window / 2;
    let outer = |row: usize, col: usize| HermitianCov3::outer(slc.get(row, col));
    for (local, slot) in out.iter_mut().enumerate() {
        let (row, col) = (row0 + local / w, local % w);
        let center = outer(row, col);
        let mut delta = HermitianCov3::ZERO;
        let mut n = 0usize;
        for tr in row.saturating_sub(r)..(row + r + 1).min(h) {
            for tc in col.saturating_sub(r)..(col + r + 1).min(w) {
                delta = delta + (outer(tr, tc) - center);
                n += 1;
            }
        }
        *slot = center.add_scaled(&delta, 1.0 / n as f64);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cov::ScatteringVector;

    fn scene() -> SlcGrid {
        Grid::from_fn(6, 5, |r, c| {
            let x = (r * 5 + c) as f64;
            ScatteringVector::from_parts([x.sin(), 0.5, x.cos(), -x.sin(), 0.1 * x, 1.0])
        })
        .unwrap()
    }

    #[test]
    fn window_one_is_single_look() {
        let slc = scene();
        assert_eq!(boxcar_filter(&slc, 1).unwrap(), single_look(&slc).unwrap());
    }

    #[test]
    fn even_window_rejected() {
        let err = boxcar_filter(&scene(), 4).unwrap_err();
        assert!(alloc::string::ToString::to_string(&err).contains("window must be odd"));
        assert!(boxcar_filter(&scene(), 0).is_err());
    }

    #[test]
    fn constant_scene_is_fixed_point() {
        let s0 = ScatteringVector::from_parts([0.3, -0.7, 1.1, 0.2, -0.4, 0.9]);
        let slc = Grid::filled(7, 7, s0).unwrap();
        let out = boxcar_filter(&slc, 5).unwrap();
        assert!(out.data().iter().all(|c| *c == HermitianCov3::outer(&s0)));
    }

    #[test]
    fn corner_uses_clipped_count() {
        let slc = scene();
        let out = boxcar_filter(&slc, 3).unwrap();
        let mut want = HermitianCov3::ZERO;
        for (r, c) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
            want = want + HermitianCov3::outer(slc.get(r, c));
        }
        let want = want.scaled(0.25);
        assert!(crate::cov::frobenius_distance(out.get(0, 0), &want) < 1e-14);
        assert!(out.data().iter().all(HermitianCov3::is_psd));
    }
}
