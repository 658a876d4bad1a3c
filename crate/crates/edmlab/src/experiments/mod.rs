//! Registry entries. Each submodule exposes a `Params` table (every field
//! optional in JSON, unknown keys rejected) and the run itself.

pub mod denseam_capacity_curve;
pub mod eqprop_gradcheck;
pub mod errorfree_capacity;
pub mod hopfield_capacity;
pub mod langevin_stationarity;
pub mod lasso_equivalence;
pub mod oam_stability_diagram;
pub mod oim_maxcut;
pub mod oja_pca;
pub mod wta_and_contrast;

use crate::report::PlotKind;
use crate::table::{Summary, Table};
use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

/// Everything a run produces before anything touches the disk.
#[derive(Debug, Clone, Default)]
pub struct Outcome {
    /// `(metric, table)`, written as `<experiment>_<metric>.csv`.
    pub tables: Vec<(&'static str, Table)>,
    pub summary: Summary,
    pub series: Vec<(PlotKind, Table)>,
}

pub trait ExperimentParams: DeserializeOwned + Serialize + Default + Send + Sync + 'static {
    fn validate(&self) -> Result<(), String>;
    fn run(&self, seed: u64) -> anyhow::Result<Outcome>;
}

pub(crate) trait Prepared: Send + Sync {
    fn run(&self, seed: u64) -> anyhow::Result<Outcome>;
    fn echo(&self) -> Value;
}

impl<P: ExperimentParams> Prepared for P {
    fn run(&self, seed: u64) -> anyhow::Result<Outcome> {
        ExperimentParams::run(self, seed)
    }

    fn echo(&self) -> Value {
        serde_json::to_value(self).expect("params serialize")
    }
}

pub(crate) fn prepare<P: ExperimentParams>(params: &Value) -> Result<Box<dyn Prepared>, String> {
    let value = if params.is_null() { Value::Object(Default::default()) } else { params.clone() };
    let p: P = serde_json::from_value(value).map_err(|e| e.to_string())?;
    p.validate()?;
    Ok(Box::new(p))
}

/// Runs `f(0..n)` on the current rayon pool and returns results in index
/// order, so any later reduction is independent of scheduling.
pub(crate) fn par_map<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Send + Sync,
{
    (0..n).into_par_iter().map(f).collect()
}

/// Like [`par_map`] for fallible trials; the first error in index order wins.
pub(crate) fn par_try_map<T, F>(n: usize, f: F) -> anyhow::Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> anyhow::Result<T> + Send + Sync,
{
    par_map(n, f).into_iter().collect()
}

// Parameter checks shared by the `validate` implementations.

pub(crate) fn require(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

pub(crate) fn positive(name: &str, v: f64) -> Result<(), String> {
    require(v > 0.0 && v.is_finite(), || format!("{name} must be positive and finite, got {v}"))
}

pub(crate) fn nonnegative(name: &str, v: f64) -> Result<(), String> {
    require(v >= 0.0 && v.is_finite(), || format!("{name} must be nonnegative and finite, got {v}"))
}

pub(crate) fn at_least(name: &str, v: usize, min: usize) -> Result<(), String> {
    require(v >= min, || format!("{name} must be at least {min}, got {v}"))
}

pub(crate) fn in_open_unit(name: &str, v: f64) -> Result<(), String> {
    require(v > 0.0 && v < 1.0, || format!("{name} must lie in (0, 1), got {v}"))
}

pub(crate) fn nonempty<T>(name: &str, v: &[T]) -> Result<(), String> {
    require(!v.is_empty(), || format!("{name} must not be empty"))
}
