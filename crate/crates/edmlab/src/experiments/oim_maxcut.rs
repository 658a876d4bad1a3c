//! Oscillator Ising machine on MaxCut, checked three ways:
//!
//! * multi-start OIM solutions against brute-force ground states, on the
//!   instance file named by `instance` or on random `G(N, p)` graphs;
//! * the signed-Laplacian identities `H(σ) = −½ tr L(σ)` (exact) and
//!   `∇²E(φ*(σ)) = L(σ) + 2κI` (finite differences) on random triples;
//! * the slope of the mean Hessian eigenvalue against `H` over a `G(N, p)`
//!   ensemble, expected `−2/N`.
//!
//! Stream layout: instance `i` draws from index `i`, its restarts from
//! `((i + 1) << 32) ⊕ r`, identity triples from `IDENTITY_STREAM + j` and
//! regression draws from `REGRESSION_STREAM + d`.

use super::{at_least, in_open_unit, nonnegative, par_try_map, positive, require, ExperimentParams, Outcome};
use crate::row;
use crate::table::Table;
use anyhow::Context;
use edm_core::mathcore::{fd_hessian, sym_eig, SeededRng};
use edm_core::oscillator::{
    encode_phases, expected_hessian_eigen, oim_solve, signed_laplacian, IsingInstance, KappaSchedule, OscillatorNet,
};
use serde::{Deserialize, Serialize};
use std::path::PathBuf;

const IDENTITY_STREAM: u64 = 1 << 48;
const REGRESSION_STREAM: u64 = 2 << 48;
/// Brute force enumerates `2^N` states.
const BRUTE_FORCE_MAX_N: usize = 24;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Params {
    /// Ising instance file; when set, only this instance is solved.
    pub instance: Option<PathBuf>,
    pub random_instances: usize,
    pub n_min: usize,
    pub n_max: usize,
    pub edge_prob: f64,
    pub restarts: usize,
    pub duration: f64,
    pub kappa_end: f64,
    pub ramp_steps: usize,
    pub dt: f64,
    pub identity_triples: usize,
    pub identity_n_max: usize,
    pub hessian_step: f64,
    pub regression_draws: usize,
    pub regression_n: usize,
    pub regression_kappa: f64,
}

impl Default for Params {
    fn default() -> Self {
        Params {
            instance: None,
            random_instances: 50,
            n_min: 6,
            n_max: 16,
            edge_prob: 0.5,
            restarts: 20,
            duration: 40.0,
            kappa_end: 1.0,
            ramp_steps: 20,
            dt: 0.05,
            identity_triples: 100,
            identity_n_max: 12,
            hessian_step: 1e-4,
            regression_draws: 500,
            regression_n: 12,
            regression_kappa: 0.5,
        }
    }
}

/// Least-squares slope and intercept of `y` on `x`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

struct Solved {
    n: usize,
    edges: usize,
    best_h: f64,
    cut: f64,
    optimum_h: Option<f64>,
    converged: usize,
}

impl Params {
    fn schedule(&self) -> KappaSchedule {
        KappaSchedule::ramp(self.duration, self.kappa_end, self.ramp_steps)
    }

    fn solve(&self, inst: &IsingInstance, solve_seed: u64) -> anyhow::Result<Solved> {
        let sol = oim_solve(inst, &self.schedule(), self.restarts, solve_seed, self.dt)?;
        let optimum_h = if inst.n() <= BRUTE_FORCE_MAX_N { Some(inst.brute_force_ground()?.1) } else { None };
        Ok(Solved {
            n: inst.n(),
            edges: inst.edges().len(),
            best_h: sol.energy,
            cut: inst.cut_value(&sol.sigma)?,
            optimum_h,
            converged: sol.restarts.iter().filter(|r| r.converged).count(),
        })
    }
}

impl ExperimentParams for Params {
    fn validate(&self) -> Result<(), String> {
        at_least("random_instances", self.random_instances, 1)?;
        at_least("n_min", self.n_min, 1)?;
        require(self.n_max >= self.n_min, || format!("n_max ({}) < n_min ({})", self.n_max, self.n_min))?;
        require(self.n_max <= BRUTE_FORCE_MAX_N, || {
            format!("n_max must be <= {BRUTE_FORCE_MAX_N} for brute-force verification")
        })?;
        in_open_unit("edge_prob", self.edge_prob)?;
        at_least("restarts", self.restarts, 1)?;
        positive("duration", self.duration)?;
        nonnegative("kappa_end", self.kappa_end)?;
        at_least("ramp_steps", self.ramp_steps, 1)?;
        positive("dt", self.dt)?;
        at_least("identity_triples", self.identity_triples, 1)?;
        at_least("identity_n_max", self.identity_n_max, 2)?;
        positive("hessian_step", self.hessian_step)?;
        at_least("regression_draws", self.regression_draws, 3)?;
        at_least("regression_n", self.regression_n, 2)?;
        nonnegative("regression_kappa", self.regression_kappa)?;
        self.schedule().validate().map_err(|e| e.to_string())
    }

    fn run(&self, seed: u64) -> anyhow::Result<Outcome> {
        let mut out = Outcome::default();
        let mut results =
            Table::new(&["instance", "N", "edges", "best_H", "optimum_H", "cut", "hit", "converged_restarts"]);
        let solved = match &self.instance {
            Some(path) => {
                let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                let inst = IsingInstance::from_text(&text).with_context(|| format!("parsing {}", path.display()))?;
                vec![self.solve(&inst, seed)?]
            }
            None => par_try_map(self.random_instances, |i| {
                let mut rng = SeededRng::for_trial(seed, i as u64);
                let n = self.n_min + rng.below(self.n_max - self.n_min + 1);
                let inst = IsingInstance::erdos_renyi(n, self.edge_prob, &mut rng);
                self.solve(&inst, seed ^ ((i as u64 + 1) << 32)).with_context(|| format!("instance {i}"))
            })?,
        };
        let mut hits = 0;
        for (i, s) in solved.iter().enumerate() {
            let hit = s.optimum_h.is_some_and(|h| s.best_h == h);
            hits += usize::from(hit);
            let optimum = s.optimum_h.map_or("unknown".to_string(), |h| h.to_string());
            results.push(row![i, s.n, s.edges, s.best_h, optimum, s.cut, u8::from(hit), s.converged]);
        }
        if self.instance.is_some() {
            out.summary.put("best_H", solved[0].best_h);
            out.summary.put("cut", solved[0].cut);
        }
        out.summary.put("optimum_hit_rate", hits as f64 / solved.len() as f64);

        let triples = par_try_map(self.identity_triples, |j| {
            let mut rng = SeededRng::for_trial(seed, IDENTITY_STREAM + j as u64);
            let n = 2 + rng.below(self.identity_n_max - 1);
            let inst = IsingInstance::erdos_renyi(n, self.edge_prob, &mut rng);
            let sigma = rng.spins(n);
            let kappa = rng.uniform();
            let h = inst.energy(&sigma)?;
            let g = signed_laplacian(&inst, &sigma)?;
            let net = OscillatorNet::oim(inst.weight_matrix(), kappa)?;
            let fd =
                fd_hessian(|p| net.energy(p).expect("dimension checked"), &encode_phases(&sigma), self.hessian_step)?;
            Ok((n, kappa, h, -0.5 * g.trace(), fd.max_abs_diff(&g.hessian(kappa))))
        })?;
        let mut identities = Table::new(&["triple", "N", "kappa", "H", "neg_half_trace", "hessian_max_abs_err"]);
        let (mut exact, mut worst) = (0, 0.0f64);
        for (j, &(n, kappa, h, tr, err)) in triples.iter().enumerate() {
            exact += usize::from(h == tr);
            worst = worst.max(err);
            identities.push(row![j, n, kappa, h, tr, err]);
        }
        out.summary.put("trace_identity_exact", format!("{exact}/{}", triples.len()));
        out.summary.put("hessian_max_abs_err", worst);

        let draws = par_try_map(self.regression_draws, |d| {
            let mut rng = SeededRng::for_trial(seed, REGRESSION_STREAM + d as u64);
            let inst = IsingInstance::erdos_renyi(self.regression_n, self.edge_prob, &mut rng);
            let sigma = rng.spins(self.regression_n);
            let h = inst.energy(&sigma)?;
            let eig = sym_eig(&signed_laplacian(&inst, &sigma)?.hessian(self.regression_kappa))?;
            let mean = eig.values.iter().sum::<f64>() / self.regression_n as f64;
            Ok((h, mean))
        })?;
        let mut regression = Table::new(&["draw", "H", "mean_hessian_eigen", "expected"]);
        for (d, &(h, mean)) in draws.iter().enumerate() {
            regression.push(row![d, h, mean, expected_hessian_eigen(h, self.regression_n, self.regression_kappa)?]);
        }
        let hs: Vec<f64> = draws.iter().map(|d| d.0).collect();
        let means: Vec<f64> = draws.iter().map(|d| d.1).collect();
        let (slope, intercept) = linear_fit(&hs, &means);
        out.summary.put("eigen_slope", slope);
        out.summary.put("eigen_slope_expected", -2.0 / self.regression_n as f64);
        out.summary.put("eigen_intercept", intercept);

        out.tables.push(("results", results));
        out.tables.push(("identities", identities));
        out.tables.push(("eigen_regression", regression));
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_fit_recovers_a_line() {
        let x = [0.0, 1.0, 2.0, 3.0];
        let y: Vec<f64> = x.iter().map(|v| 3.0 - 0.5 * v).collect();
        let (s, c) = linear_fit(&x, &y);
        assert!((s + 0.5).abs() < 1e-12 && (c - 3.0).abs() < 1e-12);
    }
}
