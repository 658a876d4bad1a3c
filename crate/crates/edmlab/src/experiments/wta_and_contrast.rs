//! Winner-take-all and contrast enhancement in Dale's-law E-I circuits.
//!
//! WTA: on an `E^k-I` motif satisfying the functionality and monostability
//! conditions, stimuli are drawn inside the theorem's region (one `u_i > δ`,
//! all others `< −δ`) and the predicted winner is compared with the argmax
//! of the simulated equilibrium.
//!
//! Contrast: a stack of `E²-I` columns, layer `ℓ+1` driven by
//! `layer_gain · x_E(ℓ)`. The input pair is `b ± ε/2` with `ε = ratio·δ`.
//! The measured factor is the first layer's output contrast over its input
//! contrast (both E neurons stay in the linear regime at the defaults); the
//! layer count comes from the geometric recurrence.

use super::{at_least, in_open_unit, nonnegative, par_try_map, positive, require, ExperimentParams, Outcome};
use crate::row;
use crate::table::Table;
use anyhow::{bail, Context};
use edm_core::flows::IntegratorConfig;
use edm_core::mathcore::SeededRng;
use edm_core::proximal::{
    contrast_layers_needed, simulate_contrast_layers, wta_predict, EiNetwork, EiWeights, WtaPrediction,
};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightSpec {
    pub w_ee: f64,
    pub w_ei: f64,
    pub w_ie: f64,
    pub w_ii: f64,
}

impl From<WeightSpec> for EiWeights {
    fn from(w: WeightSpec) -> Self {
        EiWeights { w_ee: w.w_ee, w_ei: w.w_ei, w_ie: w.w_ie, w_ii: w.w_ii }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Motif {
    /// `k` excitatory neurons sharing one inhibitory interneuron.
    EKI,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkSpec {
    pub motif: Motif,
    pub k: usize,
    pub weights: WeightSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Params {
    pub network: NetworkSpec,
    pub draws: usize,
    /// Stimuli lie within `spread` beyond `±δ`.
    pub spread: f64,
    pub contrast_weights: WeightSpec,
    pub baseline: f64,
    /// Input contrast as a fraction of `δ`.
    pub epsilon_ratio: f64,
    pub layer_gain: f64,
    /// Relative tolerance on the amplification factor.
    pub factor_tolerance: f64,
    pub dt: f64,
    pub t_max: f64,
    pub tol: f64,
}

impl Default for Params {
    fn default() -> Self {
        Params {
            network: NetworkSpec {
                motif: Motif::EKI,
                k: 5,
                weights: WeightSpec { w_ee: 0.4, w_ei: 0.5, w_ie: 1.5, w_ii: 0.3 },
            },
            draws: 100,
            spread: 1.0,
            contrast_weights: WeightSpec { w_ee: 0.25, w_ei: 0.1, w_ie: 1.0, w_ii: 0.0 },
            baseline: 0.2,
            epsilon_ratio: 0.1,
            layer_gain: 1.0,
            factor_tolerance: 0.1,
            dt: 0.05,
            t_max: 5000.0,
            tol: 1e-11,
        }
    }
}

impl Params {
    fn integrator(&self) -> IntegratorConfig {
        IntegratorConfig::rk4(self.dt, self.t_max).with_tol(self.tol)
    }

    fn network(&self) -> anyhow::Result<EiNetwork> {
        match self.network.motif {
            Motif::EKI => Ok(EiNetwork::e_k_i(self.network.k, self.network.weights.into())?),
        }
    }
}

/// First index of the largest value.
fn argmax(x: &[f64]) -> usize {
    (0..x.len()).fold(0, |best, i| if x[i] > x[best] { i } else { best })
}

impl ExperimentParams for Params {
    fn validate(&self) -> Result<(), String> {
        at_least("network.k", self.network.k, 2)?;
        EiWeights::from(self.network.weights).validate().map_err(|e| e.to_string())?;
        EiWeights::from(self.contrast_weights).validate().map_err(|e| e.to_string())?;
        require(self.contrast_weights.w_ee > 0.0 && self.contrast_weights.w_ee < 0.5, || {
            format!("contrast_weights.w_ee must lie in (0, 1/2), got {}", self.contrast_weights.w_ee)
        })?;
        at_least("draws", self.draws, 1)?;
        positive("spread", self.spread)?;
        nonnegative("baseline", self.baseline)?;
        in_open_unit("epsilon_ratio", self.epsilon_ratio)?;
        positive("layer_gain", self.layer_gain)?;
        positive("factor_tolerance", self.factor_tolerance)?;
        self.integrator().validate().map_err(|e| e.to_string())
    }

    fn run(&self, seed: u64) -> anyhow::Result<Outcome> {
        let net = self.network()?;
        let weights = *net.weights();
        let mono = net.monostability_check()?;
        let mut out = Outcome::default();
        out.summary.put("functional", weights.functional());
        out.summary.put("monostable", mono.holds);
        out.summary.put("monostability_slack_e", mono.slack_e);
        out.summary.put("monostability_slack_i", mono.slack_i);
        if !weights.functional() || !mono.holds {
            bail!("network weights violate the functionality or monostability condition");
        }

        let k = self.network.k;
        let delta = weights.delta();
        let cfg = self.integrator();
        let rows = par_try_map(self.draws, |d| {
            let mut rng = SeededRng::for_trial(seed, d as u64);
            let winner = rng.below(k);
            let u: Vec<f64> = (0..k)
                .map(|i| {
                    let depth = self.spread * (1.0 - rng.uniform());
                    if i == winner {
                        delta + depth
                    } else {
                        -delta - depth
                    }
                })
                .collect();
            let predicted = match wta_predict(&net, &u)? {
                WtaPrediction::Winner(i) => i,
                WtaPrediction::NoGuarantee => bail!("draw {d} fell outside the hypothesis region"),
            };
            let stim = net.stimulus(&u)?;
            let x = net.equilibrium(&stim, &cfg).with_context(|| format!("draw {d}"))?;
            let simulated = argmax(&x[..k]);
            let runner_up = (0..k).filter(|&i| i != simulated).map(|i| x[i]).fold(f64::NEG_INFINITY, f64::max);
            Ok((winner, predicted, simulated, x[simulated], runner_up, net.nash_residual(&x, &stim)?))
        })?;
        let mut wta = Table::new(&[
            "draw",
            "stimulated",
            "predicted",
            "simulated",
            "winner_rate",
            "runner_up_rate",
            "nash_residual",
        ]);
        let mut matches = 0;
        let mut worst_nash = 0.0f64;
        for (d, &(w, p, s, top, second, nash)) in rows.iter().enumerate() {
            matches += usize::from(p == s);
            worst_nash = worst_nash.max(nash);
            wta.push(row![d, w, p, s, top, second, nash]);
        }
        out.summary.put("delta", delta);
        out.summary.put("wta_matches", format!("{matches}/{}", self.draws));
        out.summary.put("wta_max_nash_residual", worst_nash);

        let cw: EiWeights = self.contrast_weights.into();
        let c_delta = cw.delta();
        let eps = self.epsilon_ratio * c_delta;
        let target = 1.0 / cw.w_ee - 1.0;
        let (formula_layers, layers) = contrast_layers_needed(cw.w_ee, eps, c_delta)?;
        let u0 = (self.baseline + 0.5 * eps, self.baseline - 0.5 * eps);
        let stack = simulate_contrast_layers(cw, u0, layers, self.layer_gain, &cfg)?;
        let mut contrast = Table::new(&["layer", "x_left", "x_right", "contrast", "ratio_to_previous"]);
        let mut prev = u0.0 - u0.1;
        for (l, &(xl, xr)) in stack.iter().enumerate() {
            contrast.push(row![l + 1, xl, xr, xl - xr, (xl - xr) / prev]);
            prev = xl - xr;
        }
        let (xl, xr) = stack[0];
        let linear = xr > 0.0 && xl < 1.0;
        let measured = (xl - xr) / eps;
        let final_contrast = stack.last().map(|(a, b)| a - b).expect("layers >= 1");
        out.summary.put("contrast_delta", c_delta);
        out.summary.put("contrast_epsilon", eps);
        out.summary.put("factor_expected", target);
        out.summary.put("factor_measured", measured);
        out.summary.put("factor_rel_error", (measured - target).abs() / target);
        out.summary.put("factor_within_tolerance", (measured - target).abs() <= self.factor_tolerance * target);
        out.summary.put("first_layer_linear", linear);
        // Differential gain of one column in the linear regime; inhibition
        // only sees the common mode.
        out.summary.put("factor_linear_theory", 1.0 / (1.0 - cw.w_ee));
        // Per-layer factor if layers were coupled through w_EE synapses.
        out.summary.put("factor_with_w_ee_coupling", cw.w_ee * measured);
        out.summary.put("layers_formula", formula_layers);
        out.summary.put("layers_recurrence", layers);
        out.summary.put("final_contrast", final_contrast);
        out.summary.put("final_contrast_reaches_delta", final_contrast >= c_delta);
        out.tables.push(("wta", wta));
        out.tables.push(("contrast_layers", contrast));
        Ok(out)
    }
}
