//! Polynomial DenseAM capacity against the closed-form bound, plus
//! one-bit-corrupted retrieval with the exponential separation function.
//!
//! For each power `n` the one-step bit-error rate at `ξ¹` is estimated on
//! that power's `K` grid; the empirical capacity is the last `K` before
//! the rate reaches `threshold`. Pattern sets for the retrieval part come
//! from `pattern_file` (the plain-text pattern format) when given.

use super::{at_least, in_open_unit, nonempty, par_map, positive, require, ExperimentParams, Outcome};
use crate::experiments::hopfield_capacity::capacity_crossing;
use crate::report::PlotKind;
use crate::row;
use crate::table::Table;
use anyhow::Context;
use edm_core::denseam::{bit_error_trial, capacity_bound, DenseAmModel, Separation, SweepOrder};
use edm_core::mathcore::tolerances::CAPACITY_ALPHA;
use edm_core::mathcore::SeededRng;
use edm_core::plasticity::PatternSet;
use serde::{Deserialize, Serialize};
use std::path::PathBuf;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub power: u32,
    pub k_values: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Params {
    pub n_neurons: usize,
    pub grids: Vec<Grid>,
    pub trials: usize,
    pub threshold: f64,
    pub alpha: f64,
    /// Network sizes for the `capacity_curve` plot series.
    pub curve_sizes: Vec<usize>,
    /// Empirical and formula capacities must agree within this factor.
    pub bracket_factor: f64,
    pub exp_n: usize,
    pub exp_k: usize,
    pub exp_probes: usize,
    pub exp_max_sweeps: usize,
    pub pattern_file: Option<PathBuf>,
}

impl Default for Params {
    fn default() -> Self {
        Params {
            n_neurons: 100,
            grids: vec![
                Grid { power: 2, k_values: (5..=40).collect() },
                Grid { power: 3, k_values: (100..=1500).step_by(50).collect() },
            ],
            trials: 1000,
            threshold: 0.01,
            alpha: CAPACITY_ALPHA,
            curve_sizes: vec![25, 50, 100, 200, 400],
            bracket_factor: 3.0,
            exp_n: 20,
            exp_k: 100,
            exp_probes: 1000,
            exp_max_sweeps: 20,
            pattern_file: None,
        }
    }
}

/// Stream index reserved for drawing the retrieval pattern set.
const PATTERN_STREAM: u64 = u64::MAX;

impl Params {
    fn retrieval_patterns(&self, seed: u64) -> anyhow::Result<PatternSet> {
        match &self.pattern_file {
            Some(path) => {
                let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                PatternSet::from_text(&text).with_context(|| format!("parsing {}", path.display()))
            }
            None => Ok(PatternSet::random(self.exp_n, self.exp_k, &mut SeededRng::for_trial(seed, PATTERN_STREAM))?),
        }
    }
}

impl ExperimentParams for Params {
    fn validate(&self) -> Result<(), String> {
        at_least("n_neurons", self.n_neurons, 2)?;
        nonempty("grids", &self.grids)?;
        for g in &self.grids {
            Separation::Power(g.power).validate().map_err(|e| e.to_string())?;
            nonempty("k_values", &g.k_values)?;
            require(g.k_values.windows(2).all(|w| w[0] < w[1]) && g.k_values[0] >= 1, || {
                format!("k_values for n = {} must be increasing and positive", g.power)
            })?;
        }
        at_least("trials", self.trials, edm_core::denseam::MIN_BIT_ERROR_TRIALS)?;
        in_open_unit("threshold", self.threshold)?;
        positive("alpha", self.alpha)?;
        require(self.curve_sizes.iter().all(|&n| n >= 2), || "curve_sizes must be >= 2".into())?;
        require(self.bracket_factor >= 1.0, || "bracket_factor must be >= 1".into())?;
        at_least("exp_n", self.exp_n, 1)?;
        at_least("exp_k", self.exp_k, 1)?;
        at_least("exp_probes", self.exp_probes, 1)?;
        at_least("exp_max_sweeps", self.exp_max_sweeps, 1)
    }

    fn run(&self, seed: u64) -> anyhow::Result<Outcome> {
        let mut out = Outcome::default();
        let mut rates_table = Table::new(&["n", "K", "bit_error_rate"]);
        let mut kstar_table = Table::new(&["n", "K_star_empirical", "K_max_formula", "formula_over_empirical"]);
        let mut offset = 0u64;
        let mut kstars = Vec::new();
        for g in &self.grids {
            let sep = Separation::Power(g.power);
            let mut rates = Vec::with_capacity(g.k_values.len());
            for &k in &g.k_values {
                let flips = par_map(self.trials, |t| {
                    bit_error_trial(self.n_neurons, k, sep, &mut SeededRng::for_trial(seed, offset + t as u64))
                });
                offset += self.trials as u64;
                let rate = flips.iter().sum::<usize>() as f64 / (self.trials * self.n_neurons) as f64;
                rates_table.push(row![g.power, k, rate]);
                rates.push(rate);
            }
            let formula = capacity_bound(self.n_neurons, g.power, self.alpha)?;
            let (k_star, _) = capacity_crossing(&g.k_values, &rates, self.threshold);
            let k_star = k_star.unwrap_or(0);
            let ratio = formula / k_star as f64;
            kstar_table.push(row![g.power, k_star, formula, ratio]);
            out.summary.put(&format!("K_star_n{}", g.power), k_star);
            out.summary.put(&format!("K_max_formula_n{}", g.power), formula);
            kstars.push((g.power, k_star, formula));
        }
        let bracketed = kstars
            .iter()
            .all(|&(_, k, f)| k > 0 && f / k as f64 <= self.bracket_factor && k as f64 / f <= self.bracket_factor);
        out.summary.put("formula_brackets_empirical", bracketed);
        if let (Some(a), Some(b)) = (kstars.iter().find(|g| g.0 == 2), kstars.iter().find(|g| g.0 == 3)) {
            out.summary.put("K_star_ratio_n3_over_n2", b.1 as f64 / a.1 as f64);
        }

        let mut curve = Table::new(&["N", "n", "K_max_formula"]);
        for &n in &self.curve_sizes {
            for g in &self.grids {
                curve.push(row![n, g.power, capacity_bound(n, g.power, self.alpha)?]);
            }
        }

        let patterns = self.retrieval_patterns(seed)?;
        let model = DenseAmModel::basic(patterns.clone(), Separation::Exp)?;
        let (n, k) = (patterns.n(), patterns.k());
        let probes = par_map(self.exp_probes, |p| -> anyhow::Result<(usize, usize, bool, usize)> {
            let mut rng = SeededRng::for_trial(seed, offset + p as u64);
            let mu = p % k;
            let bit = rng.below(n);
            let mut probe = patterns.get(mu).to_vec();
            probe[bit] = -probe[bit];
            let r = model.retrieve(&probe, self.exp_max_sweeps, &mut SweepOrder::RandomPermutation(&mut rng))?;
            Ok((mu, bit, r.state == patterns.get(mu), r.sweeps))
        })
        .into_iter()
        .collect::<anyhow::Result<Vec<_>>>()?;
        let mut retrieval = Table::new(&["probe", "pattern", "flipped_bit", "recovered", "sweeps"]);
        for (p, &(mu, bit, ok, sweeps)) in probes.iter().enumerate() {
            retrieval.push(row![p, mu, bit, u8::from(ok), sweeps]);
        }
        let recovered = probes.iter().filter(|p| p.2).count();
        out.summary.put("exp_N", n);
        out.summary.put("exp_K", k);
        out.summary.put("exp_recovered", recovered);
        out.summary.put("exp_recovery_rate", recovered as f64 / self.exp_probes as f64);

        out.tables.push(("bit_error", rates_table));
        out.tables.push(("kstar", kstar_table));
        out.tables.push(("exp_retrieval", retrieval));
        out.series.push((PlotKind::CapacityCurve, curve));
        Ok(out)
    }
}
