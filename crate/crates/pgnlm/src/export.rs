//! Inspection outputs: PGM/PNG previews and CSV tables.
//!
//! Features CSV columns: `pixel_row,pixel_col,c11,c22,c33,mag_c13,phase_c13,label`.
//! Accuracy CSV columns: `dataset_name,filter_name,fold,accuracy`, one row
//! per fold followed by a `mean` row.
//! Floats are written in shortest round-trip form.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use pgnlm_core::features::FeatureVector;
use pgnlm_core::{CovGrid, Grid, LabelGrid};

use crate::io::IoError;

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> IoError + '_ {
    move |source| IoError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> IoError + '_ {
    move |e| IoError::Io {
        path: path.to_path_buf(),
        source: e.into(),
    }
}

/// Scales to `0..=255` by the maximum; negative and non-finite values map to 0.
pub fn to_u8_max_normalized(values: &[f64]) -> Vec<u8> {
    let max = values
        .iter()
        .copied()
        .filter(|v| v.is_finite())
        .fold(0.0f64, f64::max);
    values
        .iter()
        .map(|&v| {
            if max > 0.0 && v.is_finite() && v > 0.0 {
                (v / max * 255.0).round().min(255.0) as u8
            } else {
                0
            }
        })
        .collect()
}

/// Binary 8-bit PGM of one channel, max-normalised.
pub fn pgm_bytes(channel: &Grid<f64>) -> Vec<u8> {
    let (h, w) = channel.dims();
    let mut out = format!("P5\n{w} {h}\n255\n").into_bytes();
    out.extend(to_u8_max_normalized(channel.data()));
    out
}

pub fn write_pgm(path: impl AsRef<Path>, channel: &Grid<f64>) -> Result<(), IoError> {
    let path = path.as_ref();
    std::fs::write(path, pgm_bytes(channel)).map_err(io_err(path))
}

/// RGB composite with R = d11, G = d22, B = d33, each max-normalised on its own.
pub fn composite_rgb(cov: &CovGrid) -> image::RgbImage {
    let (h, w) = cov.dims();
    let chan = |f: fn(&pgnlm_core::HermitianCov3) -> f64| {
        to_u8_max_normalized(&cov.data().iter().map(f).collect::<Vec<_>>())
    };
    let (r, g, b) = (chan(|c| c.d11), chan(|c| c.d22), chan(|c| c.d33));
    let mut img = image::RgbImage::new(w as u32, h as u32);
    for (i, px) in img.pixels_mut().enumerate() {
        *px = image::Rgb([r[i], g[i], b[i]]);
    }
    img
}

pub fn write_png_composite(path: impl AsRef<Path>, cov: &CovGrid) -> Result<(), IoError> {
    let path = path.as_ref();
    composite_rgb(cov)
        .save_with_format(path, image::ImageFormat::Png)
        .map_err(|e| IoError::Io {
            path: path.to_path_buf(),
            source: std::io::Error::other(e),
        })
}

pub fn write_features_csv(
    path: impl AsRef<Path>,
    features: &Grid<FeatureVector>,
    labels: &LabelGrid,
) -> Result<(), IoError> {
    let path = path.as_ref();
    let file = File::create(path).map_err(io_err(path))?;
    let mut wtr = csv::Writer::from_writer(BufWriter::new(file));
    wtr.write_record([
        "pixel_row",
        "pixel_col",
        "c11",
        "c22",
        "c33",
        "mag_c13",
        "phase_c13",
        "label",
    ])
    .map_err(csv_err(path))?;
    let (h, w) = features.dims();
    for r in 0..h {
        for c in 0..w {
            let f = features.get(r, c);
            let mut rec = vec![r.to_string(), c.to_string()];
            rec.extend(f.to_array().iter().map(f64::to_string));
            rec.push(labels.get(r, c).to_string());
            wtr.write_record(&rec).map_err(csv_err(path))?;
        }
    }
    wtr.flush().map_err(io_err(path))
}

#[derive(Debug, Clone, PartialEq)]
pub struct AccuracyRow {
    pub dataset_name: String,
    pub filter_name: String,
    /// Fold index, or `mean` for the average row.
    pub fold: String,
    pub accuracy: f64,
}

/// Per-fold rows plus the mean.
pub fn accuracy_rows(dataset: &str, filter: &str, per_fold: &[f64]) -> Vec<AccuracyRow> {
    let row = |fold: String, accuracy| AccuracyRow {
        dataset_name: dataset.to_string(),
        filter_name: filter.to_string(),
        fold,
        accuracy,
    };
    let mut rows: Vec<_> = per_fold
        .iter()
        .enumerate()
        .map(|(i, &a)| row(i.to_string(), a))
        .collect();
    rows.push(row(
        "mean".into(),
        per_fold.iter().sum::<f64>() / per_fold.len() as f64,
    ));
    rows
}

pub fn accuracy_csv_bytes(rows: &[AccuracyRow]) -> Vec<u8> {
    let mut wtr = csv::Writer::from_writer(Vec::new());
    wtr.write_record(["dataset_name", "filter_name", "fold", "accuracy"])
        .unwrap();
    for r in rows {
        wtr.write_record([
            &r.dataset_name,
            &r.filter_name,
            &r.fold,
            &r.accuracy.to_string(),
        ])
        .unwrap();
    }
    wtr.into_inner().expect("in-memory writer")
}

pub fn write_bytes(path: impl AsRef<Path>, bytes: &[u8]) -> Result<(), IoError> {
    let path = path.as_ref();
    let mut f = BufWriter::new(File::create(path).map_err(io_err(path))?);
    f.write_all(bytes).map_err(io_err(path))?;
    f.flush().map_err(io_err(path))
}
