//! Run configuration, read from TOML. Command-line flags override file values.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{JetError, Result};
use crate::jet::JetShape;
use crate::nonextension::{BoundaryMapSpec, Sampling, DEFAULT_LIP_RESOLUTION};
use crate::paths::OptimizerOpts;
use crate::poly::Polynomial;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

/// Which boundary pair `(f0, f1)` to use.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum PairConfig {
    /// `f0 = 0`, `f1 = prod (x_i (1 - x_i))^{k+1}`.
    #[default]
    Canonical,
    /// Polynomial JSON files.
    Files { f0: PathBuf, f1: PathBuf },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CertifyConfig {
    /// Relative slack allowed below the certified value before a row counts as a violation.
    pub tolerance: f64,
}

impl Default for CertifyConfig {
    fn default() -> Self {
        CertifyConfig { tolerance: 0.01 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WitnessConfig {
    pub levels: usize,
    /// Boundary grid points per free axis.
    pub per_axis: usize,
    /// Hypothetical Lipschitz constant for the contradiction level.
    pub lambda: f64,
    pub cross_pairs: usize,
    pub within_pairs: usize,
}

impl Default for WitnessConfig {
    fn default() -> Self {
        WitnessConfig { levels: 10, per_axis: 5, lambda: 1.0, cross_pairs: 10_000, within_pairs: 1_000 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FillvolConfig {
    /// Grid points per axis for `lipF_upper`.
    pub lip_resolution: usize,
    pub r_values: Vec<f64>,
}

impl Default for FillvolConfig {
    fn default() -> Self {
        FillvolConfig { lip_resolution: DEFAULT_LIP_RESOLUTION, r_values: (0..=16).map(|i| i as f64 * 0.5).collect() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StokesConfig {
    pub resolutions: Vec<usize>,
}

impl Default for StokesConfig {
    fn default() -> Self {
        StokesConfig { resolutions: vec![8, 16, 32, 64] }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub n: usize,
    pub k: usize,
    pub seed: u64,
    /// Output directory; reports go to stdout only when unset.
    pub out: Option<PathBuf>,
    pub format: OutputFormat,
    /// Dilation scales `L`.
    pub scales: Vec<f64>,
    pub pair: PairConfig,
    pub optimizer: OptimizerOpts,
    pub sampling: Sampling,
    pub certify: CertifyConfig,
    pub witness: WitnessConfig,
    pub fillvol: FillvolConfig,
    pub stokes: StokesConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            n: 1,
            k: 1,
            seed: 0,
            out: None,
            format: OutputFormat::Csv,
            scales: vec![1.0, 2.0, 4.0, 8.0],
            pair: PairConfig::Canonical,
            optimizer: OptimizerOpts::default(),
            sampling: Sampling::default(),
            certify: CertifyConfig::default(),
            witness: WitnessConfig::default(),
            fillvol: FillvolConfig::default(),
            stokes: StokesConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| JetError::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        RunConfig::from_toml(&fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| JetError::Parse(e.to_string()))
    }

    /// Propagates the run seed into the optimizer and sampling sections.
    pub fn set_seed(&mut self, seed: u64) {
        self.seed = seed;
        self.optimizer.seed = seed;
        self.sampling.seed = seed;
    }

    /// Checks ranges and that the jet space fits in memory.
    pub fn validate(&self) -> Result<()> {
        JetShape::new(self.n, self.k)?;
        if self.scales.iter().any(|&l| !(l > 0.0) || !l.is_finite()) {
            return Err(JetError::InvalidArgument("scales must be positive and finite".into()));
        }
        if self.stokes.resolutions.iter().any(|&r| r < 2) {
            return Err(JetError::InvalidArgument("stokes resolutions must be at least 2".into()));
        }
        if let PairConfig::Files { f0, f1 } = &self.pair {
            for p in [f0, f1] {
                read_polynomial(p, self.n)?;
            }
        }
        Ok(())
    }

    /// The boundary pair at scale one.
    pub fn boundary_spec(&self) -> Result<BoundaryMapSpec> {
        match &self.pair {
            PairConfig::Canonical => BoundaryMapSpec::canonical(self.n, self.k, 1.0),
            PairConfig::Files { f0, f1 } => BoundaryMapSpec::new(
                read_polynomial(f0, self.n)?.into(),
                read_polynomial(f1, self.n)?.into(),
                self.k,
                1.0,
            ),
        }
    }

    /// Short description of the pair for reports.
    pub fn pair_label(&self) -> String {
        match &self.pair {
            PairConfig::Canonical => "canonical".into(),
            PairConfig::Files { f0, f1 } => format!("{} / {}", f0.display(), f1.display()),
        }
    }
}

/// Reads a polynomial JSON file, checking its variable count.
pub fn read_polynomial(path: &Path, n: usize) -> Result<Polynomial> {
    let p: Polynomial = serde_json::from_str(&fs::read_to_string(path)?)?;
    if p.n() != n {
        return Err(JetError::DimensionMismatch { expected: n, got: p.n() });
    }
    Ok(p)
}
