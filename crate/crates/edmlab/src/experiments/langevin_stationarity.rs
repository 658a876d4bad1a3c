//! Langevin sampling against the Gibbs law.
//!
//! The double well `E = x⁴/4 − x²/2` is sampled with `chains` independent
//! chains, each with the full step budget, and the pooled histogram is
//! compared with trapezoid quadrature of `exp(−E/T)`. The quadratic
//! energy (an Ornstein–Uhlenbeck process) checks that the stationary
//! variance equals `T` for each temperature on the grid.

use super::{at_least, nonempty, par_try_map, positive, require, ExperimentParams, Outcome};
use crate::report::PlotKind;
use crate::row;
use crate::table::Table;
use edm_core::boltzmann::{
    first_coordinate, gibbs_density, langevin_sample, mean_and_variance, tv_distance, uniform_edges, EnergyModel,
    Grid1D, GridND, LangevinConfig, MIN_TV_SAMPLES,
};
use edm_core::flows::{autonomous, integrate_sde, SdeConfig};
use edm_core::mathcore::SeededRng;
use serde::{Deserialize, Serialize};

/// OU chains draw from `OU_STREAM + chain`; double-well chains from `chain`.
const OU_STREAM: u64 = 1 << 32;
const TRAJECTORY_STREAM: u64 = 2 << 32;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Params {
    pub temperature: f64,
    pub dt: f64,
    pub n_steps: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub chains: usize,
    pub bins: usize,
    pub lo: f64,
    pub hi: f64,
    pub quadrature_points: usize,
    pub ou_temperatures: Vec<f64>,
    pub ou_chains: usize,
    /// Length of the recorded sample path for the trajectory series.
    pub trajectory_t_max: f64,
    pub trajectory_stride: usize,
}

impl Default for Params {
    fn default() -> Self {
        Params {
            temperature: 0.5,
            dt: 1e-3,
            n_steps: 1_000_000,
            burn_in: 100_000,
            thin: 10,
            chains: 8,
            bins: 50,
            lo: -3.0,
            hi: 3.0,
            quadrature_points: 4001,
            ou_temperatures: vec![0.5, 1.0, 2.0],
            ou_chains: 16,
            trajectory_t_max: 20.0,
            trajectory_stride: 100,
        }
    }
}

impl Params {
    fn langevin(&self) -> LangevinConfig {
        LangevinConfig { dt: self.dt, n_steps: self.n_steps, burn_in: self.burn_in, thin: self.thin }
    }
}

/// Fraction of samples in each bin `[e_k, e_{k+1})`.
fn empirical_masses(samples: &[f64], edges: &[f64]) -> Vec<f64> {
    let mut counts = vec![0usize; edges.len() - 1];
    for &s in samples {
        if s >= edges[0] && s < edges[edges.len() - 1] {
            counts[edges.partition_point(|&e| e <= s) - 1] += 1;
        }
    }
    counts.iter().map(|&c| c as f64 / samples.len() as f64).collect()
}

impl ExperimentParams for Params {
    fn validate(&self) -> Result<(), String> {
        positive("temperature", self.temperature)?;
        positive("dt", self.dt)?;
        require(self.burn_in < self.n_steps, || {
            format!("burn_in ({}) must be below n_steps ({})", self.burn_in, self.n_steps)
        })?;
        at_least("thin", self.thin, 1)?;
        at_least("chains", self.chains, 1)?;
        require(self.chains * ((self.n_steps - self.burn_in) / self.thin) >= MIN_TV_SAMPLES, || {
            format!("fewer than {MIN_TV_SAMPLES} pooled samples")
        })?;
        at_least("bins", self.bins, 1)?;
        require(self.lo < self.hi, || format!("need lo < hi, got [{}, {}]", self.lo, self.hi))?;
        at_least("quadrature_points", self.quadrature_points, 2)?;
        nonempty("ou_temperatures", &self.ou_temperatures)?;
        for &t in &self.ou_temperatures {
            positive("ou temperature", t)?;
        }
        at_least("ou_chains", self.ou_chains, 1)?;
        require(self.trajectory_t_max >= self.dt, || "trajectory_t_max must be at least dt".into())?;
        at_least("trajectory_stride", self.trajectory_stride, 1)
    }

    fn run(&self, seed: u64) -> anyhow::Result<Outcome> {
        let cfg = self.langevin();
        let model = EnergyModel::double_well(self.temperature)?;
        let chains = par_try_map(self.chains, |c| {
            let mut rng = SeededRng::for_trial(seed, c as u64);
            Ok(first_coordinate(&langevin_sample(&model, &[0.0], &cfg, &mut rng)?))
        })?;
        let samples: Vec<f64> = chains.concat();
        // Quadrature range wide enough that the tails are negligible.
        let reach = self.lo.abs().max(self.hi.abs()) + 2.0;
        let grid = GridND::new(vec![Grid1D::new(-reach, reach, self.quadrature_points)?])?;
        let table = gibbs_density(&model, &grid)?;
        let edges = uniform_edges(self.lo, self.hi, self.bins);
        let tv = tv_distance(&samples, &table, &edges)?;
        let total = table.total_mass();
        let gibbs: Vec<f64> = table.bin_masses(&edges).iter().map(|m| m / total).collect();
        let empirical = empirical_masses(&samples, &edges);
        let mut hist = Table::new(&["bin_lo", "bin_hi", "empirical_mass", "gibbs_mass"]);
        for k in 0..self.bins {
            hist.push(row![edges[k], edges[k + 1], empirical[k], gibbs[k]]);
        }
        let per_chain: Vec<f64> = chains.iter().map(|c| tv_distance(c, &table, &edges)).collect::<Result<_, _>>()?;

        let mut ou = Table::new(&["temperature", "mean", "variance", "variance_over_T"]);
        let mut worst_rel = 0.0f64;
        let mut ratios = Vec::new();
        for (ti, &temp) in self.ou_temperatures.iter().enumerate() {
            let m = EnergyModel::quadratic(1, temp)?;
            let pooled = par_try_map(self.ou_chains, |c| {
                let index = OU_STREAM + (ti * self.ou_chains + c) as u64;
                Ok(first_coordinate(&langevin_sample(&m, &[0.0], &cfg, &mut SeededRng::for_trial(seed, index))?))
            })?
            .concat();
            let (mean, var) = mean_and_variance(&pooled);
            worst_rel = worst_rel.max((var / temp - 1.0).abs());
            ratios.push(var / temp);
            ou.push(row![temp, mean, var, var / temp]);
        }

        let drift = autonomous(1, |x: &[f64]| vec![x[0] - x[0].powi(3)]);
        let energy = |x: &[f64]| model.energy(x);
        let sde = SdeConfig {
            temperature: self.temperature,
            dt: self.dt,
            t_max: self.trajectory_t_max,
            record_stride: self.trajectory_stride,
        };
        let mut rng = SeededRng::for_trial(seed, TRAJECTORY_STREAM);
        let path = integrate_sde(&drift, &[0.0], &sde, &mut rng, Some(&energy))?;
        let trajectory = Table::from_csv(&path.to_csv()).expect("flows CSV is rectangular");

        let mut out = Outcome::default();
        out.summary.put("pooled_samples", samples.len());
        out.summary.put("tv_distance", tv);
        out.summary.put("tv_distance_worst_chain", per_chain.iter().copied().fold(0.0, f64::max));
        out.summary.put(
            "dissipativity_constant",
            model.dissipativity_constant(2.0, 64, &mut SeededRng::for_trial(seed, TRAJECTORY_STREAM + 1)),
        );
        out.summary.put("ou_max_rel_variance_error", worst_rel);
        let spread = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max)
            / ratios.iter().copied().fold(f64::INFINITY, f64::min);
        out.summary.put("ou_variance_ratio_spread", spread);
        out.tables.push(("histogram", hist));
        out.tables.push(("ou_variance", ou));
        out.series.push((PlotKind::Trajectory, trajectory));
        Ok(out)
    }
}
