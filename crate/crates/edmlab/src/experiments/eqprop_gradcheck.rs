//! Equilibrium propagation on quadratic energies with a squared loss on
//! the last `outputs` neurons. The reference gradient is a central
//! difference of the loss at the directly solved equilibrium; the
//! one-sided estimator's error should shrink linearly in `β`.

use super::{at_least, nonempty, par_try_map, positive, require, ExperimentParams, Outcome};
use crate::row;
use crate::table::Table;
use edm_core::mathcore::{fd_gradient, norm2, SeededRng};
use edm_core::plasticity::{eqprop_gradient, loglog_slope, EqPropConfig, QuadraticEnergy, SquaredOutputLoss};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Params {
    pub instances: usize,
    pub n_min: usize,
    pub n_max: usize,
    pub outputs: usize,
    pub betas: Vec<f64>,
    /// The `β` whose error is reported as the headline number.
    pub check_beta: f64,
    /// Smallest eigenvalue of `I − W`.
    pub margin: f64,
    pub fd_step: f64,
}

impl Default for Params {
    fn default() -> Self {
        Params {
            instances: 20,
            n_min: 4,
            n_max: 10,
            outputs: 2,
            betas: vec![1e-1, 3e-2, 1e-2, 3e-3, 1e-3],
            check_beta: 1e-3,
            margin: 0.3,
            fd_step: 1e-5,
        }
    }
}

impl Params {
    /// The slope grid plus `check_beta`, descending, without duplicates.
    fn all_betas(&self) -> Vec<f64> {
        let mut b = self.betas.clone();
        if !b.contains(&self.check_beta) {
            b.push(self.check_beta);
        }
        b.sort_by(|x, y| y.total_cmp(x));
        b
    }
}

fn rel_error(g: &[f64], oracle: &[f64]) -> f64 {
    let diff: Vec<f64> = g.iter().zip(oracle).map(|(a, b)| a - b).collect();
    norm2(&diff) / norm2(oracle)
}

impl ExperimentParams for Params {
    fn validate(&self) -> Result<(), String> {
        at_least("instances", self.instances, 1)?;
        at_least("n_min", self.n_min, 2)?;
        require(self.n_max >= self.n_min, || format!("n_max ({}) < n_min ({})", self.n_max, self.n_min))?;
        require(self.outputs >= 1 && self.outputs < self.n_min, || {
            format!("outputs must lie in [1, n_min), got {}", self.outputs)
        })?;
        nonempty("betas", &self.betas)?;
        require(self.betas.len() >= 2, || "need at least two betas for a slope".into())?;
        for &b in &self.betas {
            positive("beta", b)?;
        }
        positive("check_beta", self.check_beta)?;
        require(self.margin > 0.0 && self.margin <= 1.0, || format!("margin must lie in (0, 1], got {}", self.margin))?;
        positive("fd_step", self.fd_step)
    }

    fn run(&self, seed: u64) -> anyhow::Result<Outcome> {
        let betas = self.all_betas();
        let rows = par_try_map(self.instances, |i| {
            let mut rng = SeededRng::for_trial(seed, i as u64);
            let n = self.n_min + rng.below(self.n_max - self.n_min + 1);
            let q = QuadraticEnergy { n };
            let theta = q.random_theta(self.margin, &mut rng);
            let u = rng.normal_vec(n);
            let target = rng.normal_vec(self.outputs);
            let loss = SquaredOutputLoss { outputs: (n - self.outputs..n).collect() };
            let oracle = fd_gradient(
                |t| q.objective(&loss, t, &u, &target).expect("I − W is positive definite"),
                &theta,
                self.fd_step,
            )?;
            let mut errs = Vec::with_capacity(betas.len());
            for &b in &betas {
                let est = eqprop_gradient(&q, &loss, &theta, &u, &target, &EqPropConfig::new(b))?;
                errs.push(rel_error(&est.gradient, &oracle));
            }
            Ok((n, errs))
        })?;
        let mut errors = Table::new(&["instance", "N", "beta", "rel_error"]);
        let mut slopes = Table::new(&["instance", "N", "slope"]);
        let slope_idx: Vec<usize> = (0..betas.len()).filter(|&k| self.betas.contains(&betas[k])).collect();
        let slope_betas: Vec<f64> = slope_idx.iter().map(|&k| betas[k]).collect();
        let check = betas.iter().position(|&b| b == self.check_beta).expect("included");
        let (mut worst_check, mut slope_lo, mut slope_hi) = (0.0f64, f64::INFINITY, f64::NEG_INFINITY);
        for (i, (n, errs)) in rows.iter().enumerate() {
            for (b, e) in betas.iter().zip(errs) {
                errors.push(row![i, n, b, e]);
            }
            let ys: Vec<f64> = slope_idx.iter().map(|&k| errs[k]).collect();
            let s = loglog_slope(&slope_betas, &ys);
            slope_lo = slope_lo.min(s);
            slope_hi = slope_hi.max(s);
            worst_check = worst_check.max(errs[check]);
            slopes.push(row![i, n, s]);
        }
        let mut out = Outcome::default();
        out.summary.put("check_beta", self.check_beta);
        out.summary.put("max_rel_error_at_check_beta", worst_check);
        out.summary.put("min_slope", slope_lo);
        out.summary.put("max_slope", slope_hi);
        out.tables.push(("errors", errors));
        out.tables.push(("slopes", slopes));
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn beta_grid_merges_the_check_value() {
        let p = Params { betas: vec![1e-2, 1e-1], check_beta: 1e-3, ..Params::default() };
        assert_eq!(p.all_betas(), vec![1e-1, 1e-2, 1e-3]);
        let p = Params { betas: vec![1e-3, 1e-1], check_beta: 1e-3, ..Params::default() };
        assert_eq!(p.all_betas(), vec![1e-1, 1e-3]);
    }
}
