//! Small-error capacity of Hebbian storage: for each `K` in the sweep, store
//! `K` random patterns with the zero-diagonal outer-product rule, update
//! every neuron once from `ξ¹`, and count flipped bits.

use super::{at_least, in_open_unit, par_map, require, ExperimentParams, Outcome};
use crate::row;
use crate::table::Table;
use edm_core::mathcore::{sign, SeededRng};
use edm_core::plasticity::{hebbian_weights, PatternSet};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Params {
    pub n: usize,
    pub k_min: usize,
    pub k_max: usize,
    pub k_step: usize,
    pub trials: usize,
    /// Bit-error rate that defines the capacity.
    pub threshold: f64,
}

impl Default for Params {
    fn default() -> Self {
        Params { n: 200, k_min: 10, k_max: 60, k_step: 5, trials: 200, threshold: 0.01 }
    }
}

impl Params {
    pub fn k_values(&self) -> Vec<usize> {
        (self.k_min..=self.k_max).step_by(self.k_step).collect()
    }
}

/// Flipped bits after one synchronous update of `ξ¹`.
pub fn one_step_flips(patterns: &PatternSet) -> usize {
    let mut w = hebbian_weights(patterns);
    for i in 0..patterns.n() {
        w[(i, i)] = 0.0;
    }
    let probe = patterns.get(0);
    w.matvec(probe).iter().zip(probe).filter(|(h, s)| sign(**h) != **s).count()
}

/// Largest swept `K` before the first rate at or above `threshold`, and
/// the linearly interpolated crossing point. `None` if the first `K`
/// already fails; the crossing is `None` if the rate never reaches it.
pub fn capacity_crossing(ks: &[usize], rates: &[f64], threshold: f64) -> (Option<usize>, Option<f64>) {
    match rates.iter().position(|&r| r >= threshold) {
        None => (ks.last().copied(), None),
        Some(0) => (None, None),
        Some(j) => {
            let (k0, k1) = (ks[j - 1] as f64, ks[j] as f64);
            let (r0, r1) = (rates[j - 1], rates[j]);
            (Some(ks[j - 1]), Some(k0 + (threshold - r0) / (r1 - r0) * (k1 - k0)))
        }
    }
}

impl ExperimentParams for Params {
    fn validate(&self) -> Result<(), String> {
        at_least("n", self.n, 2)?;
        at_least("k_min", self.k_min, 1)?;
        at_least("k_step", self.k_step, 1)?;
        require(self.k_max >= self.k_min, || format!("k_max ({}) < k_min ({})", self.k_max, self.k_min))?;
        at_least("trials", self.trials, 1)?;
        in_open_unit("threshold", self.threshold)
    }

    fn run(&self, seed: u64) -> anyhow::Result<Outcome> {
        let ks = self.k_values();
        let mut table = Table::new(&["K", "bit_error_rate"]);
        let mut rates = Vec::with_capacity(ks.len());
        for (ki, &k) in ks.iter().enumerate() {
            let flips = par_map(self.trials, |t| {
                let mut rng = SeededRng::for_trial(seed, (ki * self.trials + t) as u64);
                let p = PatternSet::random(self.n, k, &mut rng).expect("n, k >= 1");
                one_step_flips(&p)
            });
            let rate = flips.iter().sum::<usize>() as f64 / (self.trials * self.n) as f64;
            table.push(row![k, rate]);
            rates.push(rate);
        }
        let (k_star, crossing) = capacity_crossing(&ks, &rates, self.threshold);
        let mut out = Outcome::default();
        match k_star {
            Some(k) => {
                out.summary.put("K_star", k);
                out.summary.put("K_star_over_N", k as f64 / self.n as f64);
            }
            None => out.summary.put("K_star", "none"),
        }
        match crossing {
            Some(c) => out.summary.put("K_crossing", c),
            None => out.summary.put("K_crossing", "none"),
        }
        out.tables.push(("bit_error", table));
        Ok(out)
    }
}
