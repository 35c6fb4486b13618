//! Features, cross-validated accuracy and estimation metrics for a
//! filtered covariance grid.

use pgnlm_core::classify::{group_folds, label_regions, stratified_folds, Dataset};
use pgnlm_core::features::{extract_features, FeatureVector};
use pgnlm_core::metrics::{enl, mean_frobenius_error};
use pgnlm_core::{CovGrid, Grid, LabelGrid, Result};
use rayon::ThreadPool;

use crate::par;

/// Floor applied before the optional dB transform.
pub const DB_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct EvalSettings {
    pub k: usize,
    pub n_trees: usize,
    pub seed: u64,
    pub per_class_cap: Option<usize>,
    pub fold_by_region: bool,
    pub db: bool,
    /// Pixels with this label are left out.
    pub unlabeled: Option<u32>,
}

impl Default for EvalSettings {
    fn default() -> Self {
        Self {
            k: pgnlm_core::classify::DEFAULT_FOLDS,
            n_trees: pgnlm_core::classify::DEFAULT_TREES,
            seed: 0,
            per_class_cap: None,
            fold_by_region: false,
            db: false,
            unlabeled: None,
        }
    }
}

pub fn features(cov: &CovGrid, db: bool) -> Grid<FeatureVector> {
    let f = extract_features(cov);
    if db {
        f.map(|v| v.to_db(DB_FLOOR))
    } else {
        f
    }
}

/// Dataset of labelled pixels with the connected-region id of each row.
pub fn build_dataset(
    features: &Grid<FeatureVector>,
    labels: &LabelGrid,
    unlabeled: Option<u32>,
) -> Result<(Dataset, Vec<u32>)> {
    if features.dims() != labels.dims() {
        let ((h, w), (lh, lw)) = (features.dims(), labels.dims());
        return Err(pgnlm_core::Error::DimensionMismatch(h, w, lh, lw));
    }
    let regions = label_regions(labels);
    let mut rows = Vec::new();
    let mut ys = Vec::new();
    let mut groups = Vec::new();
    for (i, (f, &y)) in features.data().iter().zip(labels.data()).enumerate() {
        if Some(y) == unlabeled {
            continue;
        }
        rows.extend(f.to_array());
        ys.push(y);
        groups.push(regions[i]);
    }
    Ok((Dataset::new(5, rows, ys)?, groups))
}

/// Per-fold held-out accuracy.
pub fn cross_validated_accuracy(
    pool: &ThreadPool,
    cov: &CovGrid,
    labels: &LabelGrid,
    s: &EvalSettings,
) -> Result<Vec<f64>> {
    let (mut data, mut groups) = build_dataset(&features(cov, s.db), labels, s.unlabeled)?;
    if let Some(cap) = s.per_class_cap {
        let keep = data.cap_indices(cap, s.seed);
        data = data.subset(&keep);
        groups = keep.iter().map(|&i| groups[i]).collect();
    }
    let folds = if s.fold_by_region {
        group_folds(data.labels(), &groups, s.k, s.seed)?
    } else {
        stratified_folds(data.labels(), s.k, s.seed)?
    };
    par::cross_validate_forest(pool, &data, &folds, s.k, s.n_trees, s.seed)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassEnl {
    pub class: u32,
    pub pixels: usize,
    /// HH, HV, VV intensity.
    pub enl: [Option<f64>; 3],
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimationMetrics {
    pub mean_frobenius_error: f64,
    pub per_class: Vec<ClassEnl>,
}

/// Mean Frobenius error against `sigma`, and per-class ENL of the diagonal
/// over pixels whose `(2 margin + 1)²` neighbourhood carries a single label.
pub fn estimation_metrics(
    cov: &CovGrid,
    sigma: &CovGrid,
    labels: &LabelGrid,
    margin: usize,
) -> Result<EstimationMetrics> {
    let err = mean_frobenius_error(cov, sigma)?;
    if cov.dims() != labels.dims() {
        let ((h, w), (lh, lw)) = (cov.dims(), labels.dims());
        return Err(pgnlm_core::Error::DimensionMismatch(h, w, lh, lw));
    }
    let (h, w) = labels.dims();
    let interior = |r: usize, c: usize| {
        let l = *labels.get(r, c);
        if r < margin || c < margin || r + margin >= h || c + margin >= w {
            return false;
        }
        (r - margin..=r + margin).all(|i| (c - margin..=c + margin).all(|j| *labels.get(i, j) == l))
    };
    let mut classes: Vec<u32> = labels.data().to_vec();
    classes.sort_unstable();
    classes.dedup();
    let mut per_class = Vec::new();
    for class in classes {
        let pixels: Vec<usize> = (0..h * w)
            .filter(|&i| labels.data()[i] == class && interior(i / w, i % w))
            .collect();
        let chan = |f: fn(&pgnlm_core::HermitianCov3) -> f64| {
            enl(pixels.iter().map(|&i| f(&cov.data()[i])))
        };
        per_class.push(ClassEnl {
            class,
            pixels: pixels.len(),
            enl: [chan(|c| c.d11), chan(|c| c.d22), chan(|c| c.d33)],
        });
    }
    Ok(EstimationMetrics {
        mean_frobenius_error: err,
        per_class,
    })
}

/// `metric,class,value` rows.
pub fn metrics_csv_bytes(m: &EstimationMetrics) -> Vec<u8> {
    let mut wtr = csv::Writer::from_writer(Vec::new());
    wtr.write_record(["metric", "class", "value"]).unwrap();
    wtr.write_record([
        "mean_frobenius_error",
        "all",
        &m.mean_frobenius_error.to_string(),
    ])
    .unwrap();
    for c in &m.per_class {
        for (name, v) in ["enl_hh", "enl_hv", "enl_vv"].iter().zip(c.enl) {
            let v = v.map_or_else(|| "nan".to_string(), |x| x.to_string());
            wtr.write_record([name.to_string(), c.class.to_string(), v])
                .unwrap();
        }
    }
    wtr.into_inner().expect("in-memory writer")
}
