//! Per-pixel polarimetric features and NDVI.

use core::f64::consts::PI;

use crate::cov::HermitianCov3;
use crate::error::{Error, Result};
use crate::grid::{Grid, OpticalGrid};

pub const FEATURE_NAMES: [&str; 5] = ["c11", "c22", "c33", "mag_c13", "phase_c13"];

/// HH, HV and VV intensities plus magnitude and phase of the HH-VV correlation.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FeatureVector {
    pub c11: f64,
    pub c22: f64,
    pub c33: f64,
    pub mag_c13: f64,
    /// Principal value in `(-π, π]`; zero when `mag_c13` is zero.
    pub phase_c13: f64,
}

impl FeatureVector {
    pub fn from_cov(c: &HermitianCov3) -> Self {
        let mag = c.c13.norm();
        let phase = if mag == 0.0 {
            0.0
        } else {
            let p = c.c13.im.atan2(c.c13.re);
            if p == -PI {
                PI
            } else {
                p
            }
        };
        Self {
            c11: c.d11,
            c22: c.d22,
            c33: c.d33,
            mag_c13: mag,
            phase_c13: phase,
        }
    }

    pub fn to_array(&self) -> [f64; 5] {
        [self.c11, self.c22, self.c33, self.mag_c13, self.phase_c13]
    }

    /// Intensities and `|C13|` in decibels, floored at `floor` before the log;
    /// phase unchanged.
    pub fn to_db(&self, floor: f64) -> Self {
        let db = |x: f64| 10.0 * x.max(floor).log10();
        Self {
            c11: db(self.c11),
            c22: db(self.c22),
            c33: db(self.c33),
            mag_c13: db(self.mag_c13),
            phase_c13: self.phase_c13,
        }
    }
}

pub fn extract_features(cov: &Grid<HermitianCov3>) -> Grid<FeatureVector> {
    cov.map(FeatureVector::from_cov)
}

/// `(NIR - red) / (NIR + red)` per pixel; 0 where the denominator is 0.
pub fn ndvi(opt: &OpticalGrid, red_band: usize, nir_band: usize) -> Result<Grid<f64>> {
    if red_band >= opt.bands() || nir_band >= opt.bands() {
        return Err(Error::param(
            "band",
            "band index exceeds the optical band count",
        ));
    }
    if red_band == nir_band {
        return Err(Error::param("band", "red and NIR bands must differ"));
    }
    Grid::from_fn(opt.height(), opt.width(), |r, c| {
        let px = opt.pixel(r, c);
        ndvi_value(px[red_band], px[nir_band])
    })
}

pub fn ndvi_value(red: f64, nir: f64) -> f64 {
    let sum = nir + red;
    if sum == 0.0 {
        0.0
    } else {
        (nir - red) / sum
    }
}
