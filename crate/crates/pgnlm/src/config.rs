//! TOML scene descriptions.
//!
//! ```toml
//! height = 128
//! width = 128
//! seed = 1
//! optical_noise_sigma = 0.03   # optional, default 0
//!
//! [[classes]]
//! id = 0
//! name = "live"                # optional
//! optical = [0.04, 0.08, 0.05, 0.40]
//! sigma = { diag = [1.0, 0.6, 1.0], c13 = [0.15, 0.0] }   # c12/c13/c23 as [re, im], default 0
//!
//! [[regions]]
//! row = 0
//! col = 0
//! height = 32
//! width = 32
//! class = 0
//! ```

use std::path::Path;

use pgnlm_core::simulate::{ClassSpec, Region, SceneSpec};
use pgnlm_core::{ComplexSample, HermitianCov3};
use serde::Deserialize;
use toml::Spanned;

/// Built-in live/defoliated two-class scene (also shipped as `configs/two_class.toml`).
pub const TWO_CLASS_TOML: &str = include_str!("../configs/two_class.toml");

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{path}: {message}")]
    Read { path: String, message: String },
    #[error("{0}")]
    Parse(String),
    #[error("line {line}: `{field}`: {message}")]
    Field {
        line: usize,
        field: String,
        message: String,
    },
    #[error(transparent)]
    Scene(#[from] pgnlm_core::Error),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SceneFile {
    height: usize,
    width: usize,
    #[serde(default)]
    seed: u64,
    #[serde(default)]
    optical_noise_sigma: f64,
    classes: Vec<Spanned<ClassFile>>,
    regions: Vec<Spanned<RegionFile>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ClassFile {
    id: u32,
    #[serde(default)]
    name: Option<String>,
    optical: Vec<f64>,
    sigma: SigmaFile,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SigmaFile {
    diag: [f64; 3],
    #[serde(default)]
    c12: [f64; 2],
    #[serde(default)]
    c13: [f64; 2],
    #[serde(default)]
    c23: [f64; 2],
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RegionFile {
    row: usize,
    col: usize,
    height: usize,
    width: usize,
    class: u32,
}

/// Parsed scene plus the optional class names, indexed like `spec.classes`.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneConfig {
    pub spec: SceneSpec,
    pub class_names: Vec<Option<String>>,
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())]
        .bytes()
        .filter(|&b| b == b'\n')
        .count()
        + 1
}

pub fn parse_scene(text: &str) -> Result<SceneConfig, ConfigError> {
    let file: SceneFile = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
    let mut classes = Vec::new();
    let mut names = Vec::new();
    for (i, c) in file.classes.iter().enumerate() {
        let line = line_of(text, c.span().start);
        let c = c.get_ref();
        let s = &c.sigma;
        let mut sigma = HermitianCov3::diag(s.diag[0], s.diag[1], s.diag[2]);
        sigma.c12 = ComplexSample::new(s.c12[0], s.c12[1]);
        sigma.c13 = ComplexSample::new(s.c13[0], s.c13[1]);
        sigma.c23 = ComplexSample::new(s.c23[0], s.c23[1]);
        if let Err(e) = sigma.cholesky() {
            return Err(ConfigError::Field {
                line,
                field: format!("classes[{i}].sigma"),
                message: e.to_string(),
            });
        }
        if let Some(v) = c.optical.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(ConfigError::Field {
                line,
                field: format!("classes[{i}].optical"),
                message: format!("reflectance {v} outside [0, 1]"),
            });
        }
        classes.push(ClassSpec {
            id: c.id,
            sigma,
            optical: c.optical.clone(),
        });
        names.push(c.name.clone());
    }
    let mut regions = Vec::new();
    for (i, r) in file.regions.iter().enumerate() {
        let line = line_of(text, r.span().start);
        let r = r.get_ref();
        if !classes.iter().any(|c| c.id == r.class) {
            return Err(ConfigError::Field {
                line,
                field: format!("regions[{i}].class"),
                message: format!("no class with id {}", r.class),
            });
        }
        regions.push(Region {
            row: r.row,
            col: r.col,
            height: r.height,
            width: r.width,
            class_id: r.class,
        });
    }
    let spec = SceneSpec {
        height: file.height,
        width: file.width,
        regions,
        classes,
        optical_noise_sigma: file.optical_noise_sigma,
        seed: file.seed,
    };
    spec.validate()?;
    Ok(SceneConfig {
        spec,
        class_names: names,
    })
}

pub fn load_scene(path: impl AsRef<Path>) -> Result<SceneConfig, ConfigError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Read {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_scene(&text).map_err(|e| match e {
        ConfigError::Parse(m) => ConfigError::Parse(format!("{}: {m}", path.display())),
        other => other,
    })
}

pub fn two_class_scene() -> SceneConfig {
    parse_scene(TWO_CLASS_TOML).expect("bundled scene is valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = r#"
height = 4
width = 4
seed = 3

[[classes]]
id = 1
optical = [0.5]
sigma = { diag = [1.0, 1.0, 1.0] }

[[regions]]
row = 0
col = 0
height = 4
width = 4
class = 1
"#;

    #[test]
    fn parses_minimal_scene() {
        let cfg = parse_scene(SMALL).unwrap();
        assert_eq!(cfg.spec.seed, 3);
        assert_eq!(cfg.spec.classes[0].sigma, HermitianCov3::identity());
        assert_eq!(cfg.class_names, vec![None]);
    }

    #[test]
    fn bundled_two_class_scene() {
        let cfg = two_class_scene();
        assert_eq!(cfg.spec.classes.len(), 2);
        let dead = &cfg.spec.classes[1].sigma;
        assert!((dead.c13.re + 0.9 * 3f64.sqrt()).abs() < 1e-12);
        for id in [0, 1] {
            assert!(cfg.spec.regions.iter().filter(|r| r.class_id == id).count() >= 5);
        }
    }

    #[test]
    fn unknown_field_reports_line() {
        let text = SMALL.replace("seed = 3", "seed = 3\nsede = 4");
        let msg = parse_scene(&text).unwrap_err().to_string();
        assert!(msg.contains("line 5") && msg.contains("sede"), "{msg}");
    }

    #[test]
    fn bad_sigma_names_class_and_line() {
        let text = SMALL.replace("diag = [1.0, 1.0, 1.0]", "diag = [1.0, -1.0, 1.0]");
        match parse_scene(&text).unwrap_err() {
            ConfigError::Field { line, field, .. } => {
                assert_eq!(line, 6);
                assert_eq!(field, "classes[0].sigma");
            }
            other => panic!("{other}"),
        }
    }

    #[test]
    fn overlap_names_rectangles() {
        let text =
            format!("{SMALL}\n[[regions]]\nrow = 1\ncol = 1\nheight = 2\nwidth = 2\nclass = 1\n");
        let msg = parse_scene(&text).unwrap_err().to_string();
        assert!(
            msg.contains("rows 0..4 x cols 0..4") && msg.contains("rows 1..3 x cols 1..3"),
            "{msg}"
        );
    }

    #[test]
    fn unknown_region_class() {
        let text = SMALL.replace("class = 1", "class = 7");
        assert!(parse_scene(&text)
            .unwrap_err()
            .to_string()
            .contains("regions[0].class"));
    }
}
