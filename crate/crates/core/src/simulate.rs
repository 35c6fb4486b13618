//! Synthetic fully-developed speckle scenes with known ground truth.
//!
//! A scene is a set of labelled rectangles that tile the grid. Each class
//! carries a true covariance `Σ` and an optical signature. Every pixel draws
//! its scattering vector as `L z` (`L` the Cholesky factor of `Σ`, `z`
//! standard circular complex Gaussian) from its own random stream, and its
//! optical value as signature plus clamped Gaussian noise.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::cov::{lower_mul, HermitianCov3, Matrix3, ScatteringVector};
use crate::error::{Error, Result};
use crate::grid::{CovGrid, Grid, LabelGrid, OpticalGrid, SlcGrid};
use crate::rng::{self, standard_complex_normal};

/// Axis-aligned rectangle of pixels assigned to one class.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Region {
    pub row: usize,
    pub col: usize,
    pub height: usize,
    pub width: usize,
    pub class_id: u32,
}

impl Region {
    fn contains(&self, r: usize, c: usize) -> bool {
        r >= self.row && r < self.row + self.height && c >= self.col && c < self.col + self.width
    }

    fn describe(&self) -> String {
        format!(
            "rows {}..{} x cols {}..{} (class {})",
            self.row,
            self.row + self.height,
            self.col,
            self.col + self.width,
            self.class_id
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassSpec {
    pub id: u32,
    pub sigma: HermitianCov3,
    /// One reflectance per optical band, each in `[0, 1]`.
    pub optical: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneSpec {
    pub height: usize,
    pub width: usize,
    pub regions: Vec<Region>,
    pub classes: Vec<ClassSpec>,
    pub optical_noise_sigma: f64,
    pub seed: u64,
}

/// Per-pixel class labels and true covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub labels: LabelGrid,
    pub sigma_field: CovGrid,
}

/// `L z` with `L Lᴴ = sigma`; `E[s sᴴ] = sigma`.
pub fn sample_scattering<R: Rng + ?Sized>(
    sigma: &HermitianCov3,
    rng: &mut R,
) -> Result<ScatteringVector> {
    let l = sigma.cholesky()?;
    Ok(sample_with_factor(&l, rng))
}

#[inline]
fn sample_with_factor<R: Rng + ?Sized>(l: &Matrix3, rng: &mut R) -> ScatteringVector {
    let z = [
        standard_complex_normal(rng),
        standard_complex_normal(rng),
        standard_complex_normal(rng),
    ];
    lower_mul(l, z)
}

impl SceneSpec {
    /// Single-class scene covering the whole grid.
    pub fn homogeneous(
        height: usize,
        width: usize,
        sigma: HermitianCov3,
        optical: Vec<f64>,
        seed: u64,
    ) -> Self {
        Self {
            height,
            width,
            regions: vec![Region {
                row: 0,
                col: 0,
                height,
                width,
                class_id: 0,
            }],
            classes: vec![ClassSpec {
                id: 0,
                sigma,
                optical,
            }],
            optical_noise_sigma: 0.0,
            seed,
        }
    }

    pub fn bands(&self) -> usize {
        self.classes.first().map_or(0, |c| c.optical.len())
    }

    pub fn class(&self, id: u32) -> Option<&ClassSpec> {
        self.classes.iter().find(|c| c.id == id)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidScene(msg));
        if self.height == 0 || self.width == 0 {
            return bad(format!(
                "grid size {}x{} must be positive",
                self.height, self.width
            ));
        }
        if self.classes.is_empty() {
            return bad("no classes defined".into());
        }
        let bands = self.bands();
        if bands == 0 {
            return bad("optical signatures need at least one band".into());
        }
        if !(self.optical_noise_sigma >= 0.0 && self.optical_noise_sigma.is_finite()) {
            return bad(format!(
                "optical_noise_sigma = {} must be finite and >= 0",
                self.optical_noise_sigma
            ));
        }
        for (i, class) in self.classes.iter().enumerate() {
            if self.classes[..i].iter().any(|c| c.id == class.id) {
                return bad(format!("class {} defined twice", class.id));
            }
            if class.optical.len() != bands {
                return bad(format!(
                    "class {} has {} optical bands, expected {}",
                    class.id,
                    class.optical.len(),
                    bands
                ));
            }
            if class.optical.iter().any(|v| !(0.0..=1.0).contains(v)) {
                return bad(format!(
                    "class {} optical signature outside [0, 1]",
                    class.id
                ));
            }
            if let Err(e) = class.sigma.cholesky() {
                return bad(format!(
                    "class {} sigma is not positive definite: {}",
                    class.id, e
                ));
            }
        }
        for region in &self.regions {
            if region.height == 0 || region.width == 0 {
                return bad(format!("empty region {}", region.describe()));
            }
            if region.row + region.height > self.height || region.col + region.width > self.width {
                return bad(format!(
                    "region {} exceeds the {}x{} grid",
                    region.describe(),
                    self.height,
                    self.width
                ));
            }
            if self.class(region.class_id).is_none() {
                return bad(format!(
                    "region {} references unknown class",
                    region.describe()
                ));
            }
        }
        for (i, a) in self.regions.iter().enumerate() {
            for b in &self.regions[i + 1..] {
                let rows = a.row < b.row + b.height && b.row < a.row + a.height;
                let cols = a.col < b.col + b.width && b.col < a.col + a.width;
                if rows && cols {
                    return bad(format!(
                        "regions overlap: {} and {}",
                        a.describe(),
                        b.describe()
                    ));
                }
            }
        }
        let covered: usize = self.regions.iter().map(|r| r.height * r.width).sum();
        if covered != self.height * self.width {
            let (r, c) = (0..self.height)
                .flat_map(|r| (0..self.width).map(move |c| (r, c)))
                .find(|&(r, c)| !self.regions.iter().any(|g| g.contains(r, c)))
                .unwrap_or((0, 0));
            return bad(format!(
                "regions do not cover the grid (pixel ({}, {}) unassigned)",
                r, c
            ));
        }
        Ok(())
    }
}

/// Validated scene ready for per-pixel sampling.
#[derive(Debug, Clone)]
pub struct SceneGenerator {
    spec: SceneSpec,
    labels: Vec<u32>,
    class_index: Vec<u16>,
    factors: Vec<Matrix3>,
    noise: Option<Normal<f64>>,
}

impl SceneGenerator {
    pub fn new(spec: SceneSpec) -> Result<Self> {
        spec.validate()?;
        let mut labels = vec![0u32; spec.height * spec.width];
        for region in &spec.regions {
            for r in region.row..region.row + region.height {
                let start = r * spec.width + region.col;
                labels[start..start + region.width].fill(region.class_id);
            }
        }
        let class_index = labels
            .iter()
            .map(|id| spec.classes.iter().position(|c| c.id == *id).unwrap_or(0) as u16)
            .collect();
        let factors = spec
            .classes
            .iter()
            .map(|c| c.sigma.cholesky())
            .collect::<Result<Vec<_>>>()?;
        let noise = if spec.optical_noise_sigma > 0.0 {
            Some(
                Normal::new(0.0, spec.optical_noise_sigma)
                    .map_err(|_| Error::param("optical_noise_sigma", "invalid"))?,
            )
        } else {
            None
        };
        Ok(Self {
            spec,
            labels,
            class_index,
            factors,
            noise,
        })
    }

    pub fn spec(&self) -> &SceneSpec {
        &self.spec
    }

    pub fn pixel_count(&self) -> usize {
        self.labels.len()
    }

    /// Scattering vector at a flat pixel index, from that pixel's own stream.
    pub fn scattering_at(&self, index: usize) -> ScatteringVector {
        let mut rng = rng::stream(self.spec.seed, rng::DOMAIN_SPECKLE, index as u64);
        sample_with_factor(&self.factors[self.class_index[index] as usize], &mut rng)
    }

    /// Writes the optical bands of a flat pixel index into `out`.
    pub fn optical_at(&self, index: usize, out: &mut [f64]) {
        let class = &self.spec.classes[self.class_index[index] as usize];
        match &self.noise {
            None => out.copy_from_slice(&class.optical),
            Some(noise) => {
                let mut rng = rng::stream(self.spec.seed, rng::DOMAIN_OPTICAL, index as u64);
                for (o, sig) in out.iter_mut().zip(&class.optical) {
                    *o = (sig + noise.sample(&mut rng)).clamp(0.0, 1.0);
                }
            }
        }
    }

    pub fn ground_truth(&self) -> GroundTruth {
        let (h, w) = (self.spec.height, self.spec.width);
        let sigma = self
            .class_index
            .iter()
            .map(|&k| self.spec.classes[k as usize].sigma)
            .collect();
        GroundTruth {
            labels: Grid::new(h, w, self.labels.clone()).expect("validated dimensions"),
            sigma_field: Grid::new(h, w, sigma).expect("validated dimensions"),
        }
    }

    /// Builds the grids from per-pixel samples, in any order the caller chose.
    pub fn assemble(
        &self,
        slc: Vec<ScatteringVector>,
        optical: Vec<f64>,
    ) -> Result<(SlcGrid, OpticalGrid, GroundTruth)> {
        let (h, w) = (self.spec.height, self.spec.width);
        Ok((
            Grid::new(h, w, slc)?,
            OpticalGrid::new(h, w, self.spec.bands(), optical)?,
            self.ground_truth(),
        ))
    }

    pub fn generate(&self) -> (SlcGrid, OpticalGrid, GroundTruth) {
        let n = self.pixel_count();
        let bands = self.spec.bands();
        let slc = (0..n).map(|i| self.scattering_at(i)).collect();
        let mut optical = vec![0.0; n * bands];
        for (i, px) in optical.chunks_exact_mut(bands).enumerate() {
            self.optical_at(i, px);
        }
        self.assemble(slc, optical).expect("validated scene")
    }
}

/// Validates `spec` and draws the SLC, optical guide and ground truth.
pub fn generate_scene(spec: &SceneSpec) -> Result<(SlcGrid, OpticalGrid, GroundTruth)> {
    Ok(SceneGenerator::new(spec.clone())?.generate())
}
