//! Error-free capacity of the oscillatory associative memory: a pattern set
//! counts as stored when every pattern's phase-locked state is linearly
//! stable, i.e. its transverse margin is below `2κ`.
//!
//! Margins do not depend on `κ`, so each pattern set is drawn once and
//! classified for the whole `κ` grid. `K_max(κ)` is the largest `K` such
//! that every `K' ≤ K` succeeds in at least `success` of the trials; the
//! reference column evaluates `2Nκ²/ln N`, whose constant is not expected
//! to match at this size — only the growth in `κ` is checked.

use super::{at_least, in_open_unit, nonempty, nonnegative, par_try_map, ExperimentParams, Outcome};
use crate::row;
use crate::table::Table;
use anyhow::Context;
use edm_core::mathcore::SeededRng;
use edm_core::oscillator::oam_stability_margin;
use edm_core::plasticity::{hebbian_weights, PatternSet};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Params {
    pub n: usize,
    pub kappas: Vec<f64>,
    pub k_max: usize,
    pub trials: usize,
    /// Fraction of trials that must succeed for a `K` to count.
    pub success: f64,
}

impl Default for Params {
    fn default() -> Self {
        Params { n: 30, kappas: vec![0.0, 0.05, 0.1, 0.2, 0.3, 0.5], k_max: 12, trials: 100, success: 0.9 }
    }
}

/// Largest margin over the stored patterns; all are stable iff `< 2κ`.
pub fn worst_margin(patterns: &PatternSet) -> anyhow::Result<f64> {
    let w = hebbian_weights(patterns);
    let mut worst = f64::NEG_INFINITY;
    for xi in patterns.iter() {
        worst = worst.max(oam_stability_margin(&w, xi)?);
    }
    Ok(worst)
}

/// `K_max` from per-`K` success fractions (index `k − 1`).
pub fn k_max_from_fractions(fractions: &[f64], success: f64) -> usize {
    fractions.iter().take_while(|&&f| f >= success).count()
}

impl ExperimentParams for Params {
    fn validate(&self) -> Result<(), String> {
        at_least("n", self.n, 2)?;
        nonempty("kappas", &self.kappas)?;
        for &k in &self.kappas {
            nonnegative("kappa", k)?;
        }
        at_least("k_max", self.k_max, 1)?;
        at_least("trials", self.trials, 1)?;
        in_open_unit("success", self.success)
    }

    fn run(&self, seed: u64) -> anyhow::Result<Outcome> {
        // margins[k-1][t]
        let mut margins = Vec::with_capacity(self.k_max);
        for k in 1..=self.k_max {
            margins.push(par_try_map(self.trials, |t| {
                let mut rng = SeededRng::for_trial(seed, ((k - 1) * self.trials + t) as u64);
                let p = PatternSet::random(self.n, k, &mut rng)?;
                worst_margin(&p).with_context(|| format!("K = {k}, trial {t}"))
            })?);
        }
        let mut success = Table::new(&["kappa", "K", "success_fraction"]);
        let mut kmax = Table::new(&["kappa", "K_max_empirical", "K_max_formula"]);
        let mut empirical = Vec::new();
        for &kappa in &self.kappas {
            let fractions: Vec<f64> = margins
                .iter()
                .map(|m| m.iter().filter(|&&l| l < 2.0 * kappa).count() as f64 / self.trials as f64)
                .collect();
            for (k, f) in fractions.iter().enumerate() {
                success.push(row![kappa, k + 1, f]);
            }
            let k_emp = k_max_from_fractions(&fractions, self.success);
            let formula = 2.0 * self.n as f64 * kappa * kappa / (self.n as f64).ln();
            kmax.push(row![kappa, k_emp, formula]);
            empirical.push((kappa, k_emp));
        }
        let mut sorted = empirical.clone();
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
        let monotone = sorted.windows(2).all(|w| w[1].1 >= w[0].1);
        let mut out = Outcome::default();
        out.summary.put("monotone_in_kappa", monotone);
        let (lo, hi) = (sorted[0], sorted[sorted.len() - 1]);
        out.summary.put("K_max_at_min_kappa", lo.1);
        out.summary.put("K_max_at_max_kappa", hi.1);
        out.tables.push(("success", success));
        out.tables.push(("kmax", kmax));
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn k_max_uses_the_prefix() {
        assert_eq!(k_max_from_fractions(&[1.0, 0.95, 0.5, 1.0], 0.9), 2);
        assert_eq!(k_max_from_fractions(&[0.1, 1.0], 0.9), 0);
        assert_eq!(k_max_from_fractions(&[1.0, 1.0], 0.9), 2);
    }

    #[test]
    fn one_pattern_is_stable_without_coupling() {
        let p = PatternSet::random(10, 1, &mut SeededRng::new(0)).unwrap();
        assert!(worst_margin(&p).unwrap() < 0.0);
    }
}
