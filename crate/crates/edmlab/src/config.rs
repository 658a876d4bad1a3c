//! JSON experiment configs and the experiment registry.

use crate::experiments::{self, Prepared};
use crate::LabError;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use std::path::{Path, PathBuf};

macro_rules! registry {
    ($($variant:ident => $module:ident, $name:literal, $about:literal;)*) => {
        /// Registered experiments; the serialized form is the kebab-case name.
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        pub enum Experiment {
            $(#[serde(rename = $name)] $variant,)*
        }

        impl Experiment {
            pub const ALL: &'static [Experiment] = &[$(Experiment::$variant),*];

            pub fn name(self) -> &'static str {
                match self { $(Experiment::$variant => $name,)* }
            }

            /// One-line description for `edmlab list`.
            pub fn about(self) -> &'static str {
                match self { $(Experiment::$variant => $about,)* }
            }

            pub fn from_name(name: &str) -> Option<Self> {
                Self::ALL.iter().copied().find(|e| e.name() == name)
            }

            pub(crate) fn prepare(self, params: &Value) -> Result<Box<dyn Prepared>, String> {
                match self {
                    $(Experiment::$variant => experiments::prepare::<experiments::$module::Params>(params),)*
                }
            }
        }
    };
}

registry! {
    HopfieldCapacity => hopfield_capacity, "hopfield-capacity",
        "one-step bit-error rate of Hebbian storage against the pattern count";
    ErrorfreeCapacity => errorfree_capacity, "errorfree-capacity",
        "fraction of pattern sets with every pattern a stable OAM equilibrium, per coupling strength";
    DenseamCapacityCurve => denseam_capacity_curve, "denseam-capacity-curve",
        "polynomial DenseAM error-rate crossovers against the capacity formula; exponential retrieval";
    OamStabilityDiagram => oam_stability_diagram, "oam-stability-diagram",
        "linearized OAM stability against numerical Jacobians; stored/corrupted/random spectra";
    OimMaxcut => oim_maxcut, "oim-maxcut",
        "multi-start OIM MaxCut against brute force; signed-Laplacian identities";
    LangevinStationarity => langevin_stationarity, "langevin-stationarity",
        "Langevin histograms against the Gibbs density; OU variance against temperature";
    OjaPca => oja_pca, "oja-pca",
        "Oja's rule on random covariances: weight norm and top-eigenvector alignment";
    EqpropGradcheck => eqprop_gradcheck, "eqprop-gradcheck",
        "equilibrium-propagation gradients against finite differences across nudging strengths";
    LassoEquivalence => lasso_equivalence, "lasso-equivalence",
        "lasso network equilibria against a coordinate-descent solver";
    WtaAndContrast => wta_and_contrast, "wta-and-contrast",
        "E-I winner-take-all predictions and layered contrast amplification";
}

impl std::fmt::Display for Experiment {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Output directory used when neither the config nor the CLI names one.
pub const DEFAULT_OUT_DIR: &str = "edmlab-out";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub seed: u64,
    /// Experiment-specific table; omitted keys take their defaults.
    #[serde(default = "empty_object")]
    pub params: Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
}

fn empty_object() -> Value {
    Value::Object(Default::default())
}

impl ExperimentConfig {
    pub fn new(experiment: Experiment, seed: u64) -> Self {
        ExperimentConfig { experiment, seed, params: empty_object(), out_dir: None }
    }

    pub fn with_params(mut self, params: Value) -> Self {
        self.params = params;
        self
    }

    pub fn with_out_dir(mut self, dir: impl Into<PathBuf>) -> Self {
        self.out_dir = Some(dir.into());
        self
    }

    pub fn from_json(text: &str) -> Result<Self, LabError> {
        serde_json::from_str(text).map_err(|e| LabError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, LabError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| LabError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| match e {
            LabError::Config(m) => LabError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// Parses and checks the parameter table without running anything.
    pub fn validate(&self) -> Result<(), LabError> {
        self.prepare().map(|_| ())
    }

    pub(crate) fn prepare(&self) -> Result<Box<dyn Prepared>, LabError> {
        self.experiment.prepare(&self.params).map_err(|m| LabError::Config(format!("{} params: {m}", self.experiment)))
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out_dir.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
    }

    /// The config with every parameter spelled out, defaults included.
    pub fn resolved(&self) -> Result<ExperimentConfig, LabError> {
        let params = self.prepare()?.echo();
        Ok(ExperimentConfig { params, ..self.clone() })
    }
}
