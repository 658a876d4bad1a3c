//! Linearized stability of stored OAM patterns.
//!
//! Part one compares the analytic prediction `2κ − λ_max(J) > 0` against
//! the transverse abscissa of a finite-difference Jacobian at the locked
//! state. Part two builds the stored / corrupted / random margin
//! distributions for one network size and tests, with a one-sided Welch
//! t-test, that stored patterns sit deeper than random configurations.

use super::{at_least, in_open_unit, nonempty, nonnegative, par_try_map, positive, require, ExperimentParams, Outcome};
use crate::report::PlotKind;
use crate::row;
use crate::table::Table;
use anyhow::{bail, Context};
use edm_core::mathcore::SeededRng;
use edm_core::oscillator::{encode_phases, numerical_transverse_abscissa, oam_stability_margin, OscillatorNet};
use edm_core::plasticity::{hebbian_weights, PatternSet};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

/// Histogram samples draw from `HIST_STREAM + s`; agreement candidates from `i`.
const HIST_STREAM: u64 = 1 << 32;
/// Give up once this many times `instances` candidates have been drawn.
const MAX_DRAW_FACTOR: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Params {
    pub n: usize,
    pub k_values: Vec<usize>,
    pub kappas: Vec<f64>,
    /// Number of instances outside the margin to compare.
    pub instances: usize,
    /// Instances with `|2κ − λ_max| <` this are left out of the comparison.
    pub margin: f64,
    pub hist_n: usize,
    pub hist_k: usize,
    pub hist_samples: usize,
    pub corrupt_fraction: f64,
}

impl Default for Params {
    fn default() -> Self {
        Params {
            n: 30,
            k_values: vec![1, 2, 3, 4, 5],
            kappas: vec![0.0, 0.05, 0.1, 0.15, 0.2, 0.3, 0.5],
            instances: 200,
            margin: 1e-3,
            hist_n: 50,
            hist_k: 3,
            hist_samples: 200,
            corrupt_fraction: 0.1,
        }
    }
}

/// Welch's t statistic, degrees of freedom and one-sided p-value for
/// `mean(a) < mean(b)`.
pub fn welch_less(a: &[f64], b: &[f64]) -> Option<(f64, f64, f64)> {
    let stats = |x: &[f64]| {
        let n = x.len() as f64;
        let m = x.iter().sum::<f64>() / n;
        let v = x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0);
        (n, m, v)
    };
    if a.len() < 2 || b.len() < 2 {
        return None;
    }
    let (na, ma, va) = stats(a);
    let (nb, mb, vb) = stats(b);
    let (sa, sb) = (va / na, vb / nb);
    let se = (sa + sb).sqrt();
    if !(se > 0.0) {
        return None;
    }
    let t = (ma - mb) / se;
    let df = (sa + sb).powi(2) / (sa * sa / (na - 1.0) + sb * sb / (nb - 1.0));
    let p = StudentsT::new(0.0, 1.0, df).ok()?.cdf(t);
    Some((t, df, p))
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

impl ExperimentParams for Params {
    fn validate(&self) -> Result<(), String> {
        at_least("n", self.n, 2)?;
        nonempty("k_values", &self.k_values)?;
        require(self.k_values.iter().all(|&k| k >= 1), || "k_values must be >= 1".into())?;
        nonempty("kappas", &self.kappas)?;
        for &k in &self.kappas {
            nonnegative("kappa", k)?;
        }
        at_least("instances", self.instances, 1)?;
        positive("margin", self.margin)?;
        at_least("hist_n", self.hist_n, 2)?;
        at_least("hist_k", self.hist_k, 1)?;
        at_least("hist_samples", self.hist_samples, 2)?;
        in_open_unit("corrupt_fraction", self.corrupt_fraction)
    }

    fn run(&self, seed: u64) -> anyhow::Result<Outcome> {
        let candidate = |i: usize| -> anyhow::Result<(usize, f64, f64, f64)> {
            let mut rng = SeededRng::for_trial(seed, i as u64);
            let k = self.k_values[rng.below(self.k_values.len())];
            let kappa = self.kappas[rng.below(self.kappas.len())];
            let p = PatternSet::random(self.n, k, &mut rng)?;
            let w = hebbian_weights(&p);
            let lambda = oam_stability_margin(&w, p.get(0))?;
            let net = OscillatorNet::oam(w, kappa)?;
            let abscissa = numerical_transverse_abscissa(&net, &encode_phases(p.get(0)))
                .with_context(|| format!("instance {i}"))?;
            Ok((k, kappa, lambda, abscissa))
        };
        let mut agreement = Table::new(&[
            "instance",
            "K",
            "kappa",
            "lambda_max",
            "predicted_margin",
            "numerical_abscissa",
            "excluded",
            "agree",
        ]);
        // Candidates are drawn in batches until `instances` of them clear
        // the margin; the table keeps the excluded ones too.
        let (mut included, mut agreed, mut stable, mut drawn) = (0, 0, 0, 0);
        while included < self.instances {
            if drawn >= MAX_DRAW_FACTOR * self.instances {
                bail!("only {included} of {drawn} instances cleared the margin {}", self.margin);
            }
            let batch = par_try_map(self.instances, |j| candidate(drawn + j))?;
            for (k, kappa, lambda, abscissa) in batch {
                if included == self.instances {
                    break;
                }
                let predicted = 2.0 * kappa - lambda;
                let excluded = predicted.abs() < self.margin;
                let agree = (predicted > 0.0) == (abscissa < 0.0);
                if !excluded {
                    included += 1;
                    agreed += usize::from(agree);
                    stable += usize::from(predicted > 0.0);
                }
                agreement.push(row![drawn, k, kappa, lambda, predicted, abscissa, u8::from(excluded), u8::from(agree)]);
                drawn += 1;
            }
        }

        let samples = par_try_map(self.hist_samples, |s| {
            let mut rng = SeededRng::for_trial(seed, HIST_STREAM + s as u64);
            let p = PatternSet::random(self.hist_n, self.hist_k, &mut rng)?;
            let w = hebbian_weights(&p);
            let stored = p.get(0).to_vec();
            let mut corrupted = stored.clone();
            let flips = ((self.corrupt_fraction * self.hist_n as f64).round() as usize).max(1);
            for &j in rng.permutation(self.hist_n).iter().take(flips) {
                corrupted[j] = -corrupted[j];
            }
            let random = rng.spins(self.hist_n);
            Ok([
                oam_stability_margin(&w, &stored)?,
                oam_stability_margin(&w, &corrupted)?,
                oam_stability_margin(&w, &random)?,
            ])
        })?;
        let mut hist = Table::new(&["class", "lambda_max"]);
        let classes = ["stored", "corrupted", "random"];
        for (c, name) in classes.iter().enumerate() {
            for s in &samples {
                hist.push(row![name, s[c]]);
            }
        }
        let column = |c: usize| samples.iter().map(|s| s[c]).collect::<Vec<f64>>();
        let (stored, corrupted, random) = (column(0), column(1), column(2));

        let mut out = Outcome::default();
        out.summary.put("instances_included", included);
        out.summary.put("instances_excluded", drawn - included);
        out.summary.put("predicted_stable", stable);
        out.summary.put("sign_agreement", agreed as f64 / included as f64);
        out.summary.put("mean_lambda_stored", mean(&stored));
        out.summary.put("mean_lambda_corrupted", mean(&corrupted));
        out.summary.put("mean_lambda_random", mean(&random));
        match welch_less(&stored, &random) {
            Some((t, df, p)) => {
                out.summary.put("welch_t", t);
                out.summary.put("welch_df", df);
                out.summary.put("welch_p_stored_below_random", p);
            }
            None => out.summary.put("welch_p_stored_below_random", "undefined"),
        }
        out.tables.push(("agreement", agreement));
        out.series.push((PlotKind::StabilityHistogram, hist));
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn welch_matches_hand_computation() {
        // Means 1 and 3, unit variances, se = √(2/3).
        let (t, df, p) = welch_less(&[0.0, 1.0, 2.0], &[2.0, 3.0, 4.0]).unwrap();
        assert!((t + 2.0 / (2.0f64 / 3.0).sqrt()).abs() < 1e-12);
        assert!((df - 4.0).abs() < 1e-12);
        // scipy.stats.t.cdf(-2.449490, 4)
        assert!((p - 0.035242).abs() < 1e-5, "{p}");
    }

    #[test]
    fn welch_degenerate_inputs() {
        assert!(welch_less(&[1.0], &[2.0, 3.0]).is_none());
        assert!(welch_less(&[1.0, 1.0], &[1.0, 1.0]).is_none());
    }
}
