//! Run configuration, read from TOML. The repository's `configs/sphere.toml`
//! documents every field with its default.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::acceptance::DEFAULT_SEED;
use crate::error::{Error, Result};
use crate::operator::TruncationPolicy;
use crate::perturb::Contour;
use crate::spectra::{custom_spectrum, log_grid, sphere_spectrum, torus_spectrum, SurfaceSpectrum};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SurfaceConfig {
    Sphere { curvature: f64, l_max: u32 },
    Torus { side: f64, eta_cap: f64 },
    /// `path` is a CSV file with columns `eta,multiplicity`.
    Custom { curvature: f64, path: PathBuf },
}

impl Default for SurfaceConfig {
    fn default() -> Self {
        Self::Sphere { curvature: 1.0, l_max: 2 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum GridConfig {
    Log { log_start: f64, log_end: f64, points: usize },
    Explicit { values: Vec<f64> },
}

impl Default for GridConfig {
    fn default() -> Self {
        Self::Log { log_start: 0.0, log_end: 4.0, points: 101 }
    }
}

impl GridConfig {
    pub fn values(&self) -> Result<Vec<f64>> {
        match self {
            Self::Log { log_start, log_end, points } => log_grid(*log_start, *log_end, *points),
            Self::Explicit { values } => Ok(values.clone()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContourConfig {
    pub radius: f64,
    pub nodes: usize,
}

impl Default for ContourConfig {
    fn default() -> Self {
        Self { radius: 0.5, nodes: 64 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub directory: PathBuf,
    pub formats: BTreeSet<OutputFormat>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            directory: PathBuf::from("kbm-out"),
            formats: [OutputFormat::Csv, OutputFormat::Json].into(),
        }
    }
}

/// Optional diagnostic suites written to `diagnostics.json`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Check {
    Accretivity,
    Casimir,
    SlotZeroBound,
    PerturbationRadius,
    Mixing,
}

impl Check {
    pub const ALL: [Check; 5] = [
        Check::Accretivity,
        Check::Casimir,
        Check::SlotZeroBound,
        Check::PerturbationRadius,
        Check::Mixing,
    ];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub checks: BTreeSet<Check>,
    pub surface: SurfaceConfig,
    pub gamma_grid: GridConfig,
    pub truncation: TruncationPolicy,
    pub contour: ContourConfig,
    pub output: OutputConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: DEFAULT_SEED,
            checks: Check::ALL.into(),
            surface: SurfaceConfig::default(),
            gamma_grid: GridConfig::default(),
            truncation: TruncationPolicy::default(),
            contour: ContourConfig::default(),
            output: OutputConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::InvalidInput(format!("config: {}", e.message())))
    }

    /// Reads a config file. A relative custom spectrum path is resolved
    /// against the directory of the file.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::InvalidInput(format!("cannot read {}: {e}", path.display())))?;
        let mut config = Self::from_toml(&text)?;
        if let SurfaceConfig::Custom { path: spectrum, .. } = &mut config.surface {
            if spectrum.is_relative() {
                if let Some(dir) = path.parent() {
                    *spectrum = dir.join(&*spectrum);
                }
            }
        }
        Ok(config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config is always serializable")
    }

    pub fn validate(&self) -> Result<()> {
        match &self.surface {
            SurfaceConfig::Sphere { curvature, .. } if !(*curvature > 0.0) => {
                return Err(Error::InvalidInput(format!("sphere needs curvature > 0, got {curvature}")))
            }
            SurfaceConfig::Torus { side, .. } if !(*side > 0.0) => {
                return Err(Error::InvalidInput(format!("torus side must be > 0, got {side}")))
            }
            _ => {}
        }
        if let GridConfig::Log { points, .. } = self.gamma_grid {
            if points < 2 {
                return Err(Error::InvalidInput(format!("gamma grid needs >= 2 points, got {points}")));
            }
        }
        let grid = self.gamma_grid.values()?;
        if grid.is_empty() || grid.iter().any(|g| !(*g > 0.0)) || grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput("gamma grid must be positive and strictly ascending".into()));
        }
        if !(self.contour.radius > 0.0 && self.contour.radius < 1.0) {
            return Err(Error::InvalidInput(format!(
                "contour radius must lie in (0, 1), got {}",
                self.contour.radius
            )));
        }
        self.contour_shape()?;
        match self.truncation {
            TruncationPolicy::Fixed { k_max } if k_max < 1 => {
                Err(Error::InvalidInput(format!("k_max must be >= 1, got {k_max}")))
            }
            TruncationPolicy::Adaptive { tol } if !(tol > 0.0) => {
                Err(Error::InvalidInput(format!("adaptive tol must be > 0, got {tol}")))
            }
            _ => Ok(()),
        }?;
        if self.output.formats.is_empty() {
            return Err(Error::InvalidInput("at least one output format is required".into()));
        }
        Ok(())
    }

    pub fn contour_shape(&self) -> Result<Contour> {
        Contour::new(num_complex::Complex64::new(0.0, 0.0), self.contour.radius, self.contour.nodes)
    }

    pub fn spectrum(&self) -> Result<SurfaceSpectrum> {
        match &self.surface {
            SurfaceConfig::Sphere { curvature, l_max } => sphere_spectrum(*curvature, *l_max),
            SurfaceConfig::Torus { side, eta_cap } => torus_spectrum(*side, *eta_cap),
            SurfaceConfig::Custom { curvature, path } => custom_spectrum(*curvature, &read_spectrum_csv(path)?),
        }
    }
}

/// Reads `eta,multiplicity` rows; a header row is allowed.
pub fn read_spectrum_csv(path: &Path) -> Result<Vec<(f64, usize)>> {
    let bad = |msg: String| Error::InvalidInput(format!("{}: {msg}", path.display()));
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| bad(e.to_string()))?;
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| bad(e.to_string()))?;
        if record.len() != 2 {
            return Err(bad(format!("row {} has {} fields, expected 2", i + 1, record.len())));
        }
        match (record[0].parse::<f64>(), record[1].parse::<usize>()) {
            (Ok(eta), Ok(m)) => rows.push((eta, m)),
            _ if i == 0 => continue,
            _ => return Err(bad(format!("row {} is not `eta,multiplicity`", i + 1))),
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let c = RunConfig::default();
        assert_eq!(RunConfig::from_toml(&c.to_toml()).unwrap(), c);
        c.validate().unwrap();
    }

    #[test]
    fn parses_every_section() {
        let c = RunConfig::from_toml(
            r#"
            seed = 7
            checks = ["casimir"]
            [surface]
            kind = "torus"
            side = 6.283185307179586
            eta_cap = 2.5
            [gamma_grid]
            values = [1.0, 10.0, 100.0]
            [truncation]
            mode = "fixed"
            k_max = 48
            [contour]
            radius = 0.4
            nodes = 32
            [output]
            directory = "out"
            formats = ["json"]
            "#,
        )
        .unwrap();
        assert_eq!(c.seed, 7);
        assert_eq!(c.truncation, TruncationPolicy::Fixed { k_max: 48 });
        assert_eq!(c.gamma_grid.values().unwrap(), vec![1.0, 10.0, 100.0]);
        assert_eq!(c.spectrum().unwrap().entries.len(), 3);
        c.validate().unwrap();
    }

    #[test]
    fn shipped_configs_parse() {
        let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
        let sphere = RunConfig::from_file(&dir.join("sphere.toml")).unwrap();
        let mut expected = RunConfig::default();
        expected.output.directory = PathBuf::from("kbm-out");
        assert_eq!(sphere, expected);
        for name in ["hyperbolic.toml", "torus.toml"] {
            let c = RunConfig::from_file(&dir.join(name)).unwrap();
            c.validate().unwrap();
            c.spectrum().unwrap();
        }
    }

    #[test]
    fn rejects_bad_values() {
        let mut c = RunConfig::default();
        c.contour.radius = 1.0;
        assert!(c.validate().is_err());
        let c = RunConfig { surface: SurfaceConfig::Sphere { curvature: -1.0, l_max: 2 }, ..Default::default() };
        assert!(c.validate().is_err());
        let c = RunConfig {
            gamma_grid: GridConfig::Log { log_start: 0.0, log_end: 1.0, points: 1 },
            ..Default::default()
        };
        assert!(c.validate().is_err());
        assert!(RunConfig::from_toml("unknown = 1").is_err());
    }

    #[test]
    fn custom_spectrum_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("eta.csv");
        fs::write(&path, "eta,multiplicity\n0,1\n2.5, 3\n").unwrap();
        assert_eq!(read_spectrum_csv(&path).unwrap(), vec![(0.0, 1), (2.5, 3)]);
        fs::write(&path, "2,1\n").unwrap();
        let c = RunConfig {
            surface: SurfaceConfig::Custom { curvature: -1.0, path: path.clone() },
            ..Default::default()
        };
        assert!(matches!(c.spectrum(), Err(Error::InvalidInput(m)) if m.contains("zero mode")));
    }
}
