//! Multi-threaded drivers. Every driver splits work along boundaries that
//! the core crate already computes independently (row bands, pixels,
//! trees), so results do not depend on the thread count.

use pgnlm_core::baselines::{boxcar_rows, check_window};
use pgnlm_core::classify::{cross_validate, train_tree, Dataset, DecisionTree, ForestModel};
use pgnlm_core::pgnlm::{PgnlmFilter, BAND_ROWS};
use pgnlm_core::simulate::{GroundTruth, SceneGenerator, SceneSpec};
use pgnlm_core::{CovGrid, FilterParams, Grid, HermitianCov3, OpticalGrid, Result, SlcGrid};
use rayon::prelude::*;
use rayon::ThreadPool;

/// Pool with `threads` workers; 0 picks rayon's default.
pub fn pool(threads: usize) -> ThreadPool {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .expect("thread pool")
}

pub fn pgnlm_filter(
    pool: &ThreadPool,
    slc: &SlcGrid,
    opt: &OpticalGrid,
    params: &FilterParams,
) -> Result<CovGrid> {
    let filter = PgnlmFilter::new(slc, opt, *params)?;
    let (h, w) = filter.dims();
    let mut out = vec![HermitianCov3::ZERO; h * w];
    pool.install(|| {
        out.par_chunks_mut(BAND_ROWS * w)
            .enumerate()
            .for_each(|(i, chunk)| filter.filter_rows(i * BAND_ROWS, chunk));
    });
    Grid::new(h, w, out)
}

pub fn boxcar_filter(pool: &ThreadPool, slc: &SlcGrid, window: usize) -> Result<CovGrid> {
    check_window(window)?;
    let (h, w) = slc.dims();
    let mut out = vec![HermitianCov3::ZERO; h * w];
    pool.install(|| {
        out.par_chunks_mut(BAND_ROWS * w)
            .enumerate()
            .for_each(|(i, chunk)| boxcar_rows(slc, window, i * BAND_ROWS, chunk));
    });
    Grid::new(h, w, out)
}

pub fn generate_scene(
    pool: &ThreadPool,
    spec: &SceneSpec,
) -> Result<(SlcGrid, OpticalGrid, GroundTruth)> {
    let gen = SceneGenerator::new(spec.clone())?;
    let bands = spec.bands();
    let n = gen.pixel_count();
    let (slc, optical) = pool.install(|| {
        let slc = (0..n)
            .into_par_iter()
            .map(|i| gen.scattering_at(i))
            .collect();
        let mut optical = vec![0.0; n * bands];
        optical
            .par_chunks_mut(bands)
            .enumerate()
            .for_each(|(i, px)| gen.optical_at(i, px));
        (slc, optical)
    });
    gen.assemble(slc, optical)
}

pub fn train_forest(
    pool: &ThreadPool,
    data: &Dataset,
    n_trees: usize,
    seed: u64,
) -> Result<ForestModel> {
    data.check_trainable()?;
    let trees: Vec<DecisionTree> = pool.install(|| {
        (0..n_trees)
            .into_par_iter()
            .map(|i| train_tree(data, seed, i))
            .collect()
    });
    ForestModel::from_trees(trees, seed, data.dim())
}

pub fn accuracy(pool: &ThreadPool, model: &ForestModel, data: &Dataset) -> Result<f64> {
    if data.is_empty() {
        return model.accuracy(data);
    }
    let hits = pool.install(|| {
        (0..data.len())
            .into_par_iter()
            .map(|i| {
                model
                    .predict(data.row(i))
                    .map(|p| (p == data.labels()[i]) as usize)
            })
            .try_reduce(|| 0, |a, b| Ok(a + b))
    })?;
    Ok(hits as f64 / data.len() as f64)
}

/// Per-fold held-out accuracy with forests trained in parallel.
pub fn cross_validate_forest(
    pool: &ThreadPool,
    data: &Dataset,
    folds: &[usize],
    k: usize,
    n_trees: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    cross_validate(data, folds, k, seed, |train, s| {
        train_forest(pool, train, n_trees, s)
    })
}
