//! Proximal operators and the networks built from them: proximal gradient
//! flows, the positive-lasso competitive network, softmax gradient play,
//! and Dale's-law excitatory–inhibitory circuits.

use std::fmt::Write as _;

use log::warn;
use thiserror::Error;

use crate::flows::{autonomous, find_equilibrium, FlowError, IntegratorConfig};
use crate::mathcore::tolerances::{SIMPLEX_TOL, UNIT_COLUMN_TOL};
use crate::mathcore::{dot, norm2, norm_inf, Mat, MathError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProximalError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("column {column} of Θ has norm {norm}; columns must be unit-norm")]
    NonUnitColumn { column: usize, norm: f64 },
    #[error("weights are not on the simplex (sum {sum}, min {min})")]
    OffSimplex { sum: f64, min: f64 },
    #[error("coordinate descent did not converge in {0} sweeps")]
    NotConverged(usize),
    #[error("E-I structure: {0}")]
    Structure(String),
    #[error("theorem hypotheses violated: {0}")]
    Hypothesis(String),
    #[error("lasso file line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error(transparent)]
    Math(#[from] MathError),
}

/// A regularizer `g` with a closed-form proximal map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProxSpec {
    L1 {
        lambda: f64,
    },
    NonnegL1 {
        lambda: f64,
    },
    Box {
        lo: f64,
        hi: f64,
    },
    NonnegIndicator,
    /// Entropic regularization on the simplex; the map is `softmax(x/τ)`.
    NegEntropySimplex {
        tau: f64,
    },
}

impl ProxSpec {
    /// `λ = 0` is allowed for the ℓ1 variants and gives the identity map.
    pub fn validate(&self) -> Result<(), ProximalError> {
        let bad = |m: String| Err(ProximalError::InvalidParameter(m));
        match *self {
            ProxSpec::L1 { lambda } | ProxSpec::NonnegL1 { lambda } if !(lambda >= 0.0 && lambda.is_finite()) => {
                bad(format!("lambda must be >= 0, got {lambda}"))
            }
            ProxSpec::Box { lo, hi } if !(lo < hi) => bad(format!("box needs lo < hi, got [{lo}, {hi}]")),
            ProxSpec::NegEntropySimplex { tau } if !(tau > 0.0 && tau.is_finite()) => {
                bad(format!("tau must be positive, got {tau}"))
            }
            _ => Ok(()),
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        match *self {
            ProxSpec::L1 { lambda } => x.iter().map(|&v| v.signum() * (v.abs() - lambda).max(0.0)).collect(),
            ProxSpec::NonnegL1 { lambda } => x.iter().map(|&v| (v - lambda).max(0.0)).collect(),
            ProxSpec::Box { lo, hi } => x.iter().map(|&v| v.clamp(lo, hi)).collect(),
            ProxSpec::NonnegIndicator => x.iter().map(|&v| v.max(0.0)).collect(),
            ProxSpec::NegEntropySimplex { tau } => softmax(&x.iter().map(|v| v / tau).collect::<Vec<_>>()),
        }
    }
}

/// `prox_g(x)`.
pub fn prox(spec: &ProxSpec, x: &[f64]) -> Result<Vec<f64>, ProximalError> {
    spec.validate()?;
    Ok(spec.apply(x))
}

/// Max-shifted softmax.
pub fn softmax(x: &[f64]) -> Vec<f64> {
    let m = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = x.iter().map(|v| (v - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

/// `ẋ = −x + prox_g(x − ∇f(x, u))`.
pub fn proxgrad_field(
    grad_f: &dyn Fn(&[f64], &[f64]) -> Vec<f64>,
    spec: &ProxSpec,
    x: &[f64],
    u: &[f64],
) -> Result<Vec<f64>, ProximalError> {
    spec.validate()?;
    let g = grad_f(x, u);
    if g.len() != x.len() {
        return Err(ProximalError::Dimension(format!("gradient has length {}, state {}", g.len(), x.len())));
    }
    let y: Vec<f64> = x.iter().zip(&g).map(|(a, b)| a - b).collect();
    Ok(spec.apply(&y).iter().zip(x).map(|(p, a)| p - a).collect())
}

/// `min_{x ≥ 0} ½‖u − Θx‖² + λ‖x‖₁` with unit-norm columns of `Θ`.
#[derive(Debug, Clone, PartialEq)]
pub struct LassoProblem {
    theta: Mat,
    u: Vec<f64>,
    lambda: f64,
}

pub const LASSO_MAX_SWEEPS: usize = 1_000_000;

impl LassoProblem {
    pub fn new(theta: Mat, u: Vec<f64>, lambda: f64) -> Result<Self, ProximalError> {
        if u.len() != theta.rows() {
            return Err(ProximalError::Dimension(format!("Θ has {} rows, u has {}", theta.rows(), u.len())));
        }
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(ProximalError::InvalidParameter(format!("lambda must be positive, got {lambda}")));
        }
        for j in 0..theta.cols() {
            let norm = norm2(&theta.column(j));
            if (norm - 1.0).abs() > UNIT_COLUMN_TOL {
                return Err(ProximalError::NonUnitColumn { column: j, norm });
            }
        }
        Ok(LassoProblem { theta, u, lambda })
    }

    /// Random `M × N` dictionary with normalized Gaussian columns and
    /// Gaussian signal.
    pub fn random(
        m: usize,
        n: usize,
        lambda: f64,
        rng: &mut crate::mathcore::SeededRng,
    ) -> Result<Self, ProximalError> {
        let mut theta = Mat::from_fn(m, n, |_, _| rng.normal());
        for j in 0..n {
            let norm = norm2(&theta.column(j));
            for i in 0..m {
                theta[(i, j)] /= norm;
            }
        }
        let u = rng.normal_vec(m);
        LassoProblem::new(theta, u, lambda)
    }

    pub fn theta(&self) -> &Mat {
        &self.theta
    }

    pub fn u(&self) -> &[f64] {
        &self.u
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn dim(&self) -> usize {
        self.theta.cols()
    }

    fn check(&self, x: &[f64]) -> Result<(), ProximalError> {
        if x.len() == self.dim() {
            Ok(())
        } else {
            Err(ProximalError::Dimension(format!("x has length {}, Θ has {} columns", x.len(), self.dim())))
        }
    }

    /// `½‖u − Θx‖² + λ‖x‖₁`.
    pub fn objective(&self, x: &[f64]) -> Result<f64, ProximalError> {
        self.check(x)?;
        let r: Vec<f64> = self.theta.matvec(x).iter().zip(&self.u).map(|(a, b)| b - a).collect();
        Ok(0.5 * dot(&r, &r) + self.lambda * x.iter().map(|v| v.abs()).sum::<f64>())
    }

    fn field_unchecked(&self, x: &[f64]) -> Vec<f64> {
        let tx = self.theta.matvec(x);
        let resid: Vec<f64> = self.u.iter().zip(&tx).map(|(a, b)| a - b).collect();
        let drive = self.theta.transpose().matvec(&resid);
        x.iter().zip(&drive).map(|(xi, d)| -xi + (xi + d - self.lambda).max(0.0)).collect()
    }

    /// `−x + ReLU((I − ΘᵀΘ)x + Θᵀu − λ1)`.
    pub fn network_field(&self, x: &[f64]) -> Result<Vec<f64>, ProximalError> {
        self.check(x)?;
        if x.iter().any(|&v| v < 0.0) {
            warn!("lasso network evaluated outside the nonnegative orthant");
        }
        Ok(self.field_unchecked(x))
    }

    /// Relaxes the network from the origin.
    pub fn network_equilibrium(&self, cfg: &IntegratorConfig) -> Result<Vec<f64>, ProximalError> {
        let field = autonomous(self.dim(), |x| self.field_unchecked(x));
        Ok(find_equilibrium(&field, &vec![0.0; self.dim()], cfg)?)
    }

    /// Nonnegative coordinate descent, stopped when a sweep lowers the
    /// objective by less than `1e-12`.
    pub fn oracle(&self) -> Result<Vec<f64>, ProximalError> {
        let n = self.dim();
        let cols: Vec<Vec<f64>> = (0..n).map(|j| self.theta.column(j)).collect();
        let mut x = vec![0.0; n];
        let mut r = self.u.clone();
        let mut obj = self.objective(&x)?;
        for _ in 0..LASSO_MAX_SWEEPS {
            for j in 0..n {
                let new = (x[j] + dot(&cols[j], &r) - self.lambda).max(0.0);
                let delta = new - x[j];
                if delta != 0.0 {
                    for (ri, cj) in r.iter_mut().zip(&cols[j]) {
                        *ri -= delta * cj;
                    }
                    x[j] = new;
                }
            }
            let next = self.objective(&x)?;
            if obj - next < 1e-12 {
                return Ok(x);
            }
            obj = next;
        }
        Err(ProximalError::NotConverged(LASSO_MAX_SWEEPS))
    }

    /// `M,N,lambda` header, `M` rows of `Θ`, then `u`.
    pub fn to_csv(&self) -> String {
        let (m, n) = (self.theta.rows(), self.theta.cols());
        let mut s = format!("{m},{n},{}\n", self.lambda);
        let join = |v: &[f64]| v.iter().map(f64::to_string).collect::<Vec<_>>().join(",");
        for i in 0..m {
            let _ = writeln!(s, "{}", join(self.theta.row(i)));
        }
        let _ = writeln!(s, "{}", join(&self.u));
        s
    }

    pub fn from_csv(text: &str) -> Result<Self, ProximalError> {
        let rows: Vec<(usize, &str)> = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()).collect();
        let parse_row = |(ln, line): (usize, &str)| -> Result<Vec<f64>, ProximalError> {
            line.split(',')
                .map(|f| {
                    f.trim()
                        .parse::<f64>()
                        .map_err(|e| ProximalError::Parse { line: ln + 1, msg: format!("`{f}`: {e}") })
                })
                .collect()
        };
        let &first = rows.first().ok_or(ProximalError::Parse { line: 1, msg: "empty file".into() })?;
        let head = parse_row(first)?;
        let [m, n, lambda] = head[..] else {
            return Err(ProximalError::Parse { line: first.0 + 1, msg: "expected `M,N,lambda`".into() });
        };
        let (m, n) = (m as usize, n as usize);
        if rows.len() != m + 2 {
            return Err(ProximalError::Parse {
                line: rows.len(),
                msg: format!("expected {} data rows after the header, found {}", m + 1, rows.len() - 1),
            });
        }
        let mut data = Vec::with_capacity(m * n);
        for &row in &rows[1..=m] {
            let v = parse_row(row)?;
            if v.len() != n {
                return Err(ProximalError::Parse { line: row.0 + 1, msg: format!("expected {n} values") });
            }
            data.extend(v);
        }
        let u = parse_row(rows[m + 1])?;
        LassoProblem::new(Mat::from_vec(m, n, data)?, u, lambda)
    }
}

fn check_simplex(w: &[f64]) -> Result<(), ProximalError> {
    let sum: f64 = w.iter().sum();
    let min = w.iter().copied().fold(f64::INFINITY, f64::min);
    if (sum - 1.0).abs() > SIMPLEX_TOL || min < -SIMPLEX_TOL {
        return Err(ProximalError::OffSimplex { sum, min });
    }
    Ok(())
}

/// `ẇ = −w + softmax(−∇surprise(x, w)/τ)`.
pub fn softmax_play_field(
    grad_surprise: &dyn Fn(&[f64], &[f64]) -> Vec<f64>,
    tau: f64,
    w: &[f64],
    x: &[f64],
) -> Result<Vec<f64>, ProximalError> {
    ProxSpec::NegEntropySimplex { tau }.validate()?;
    check_simplex(w)?;
    let g = grad_surprise(x, w);
    if g.len() != w.len() {
        return Err(ProximalError::Dimension(format!("gradient has length {}, weights {}", g.len(), w.len())));
    }
    let neg: Vec<f64> = g.iter().map(|v| -v).collect();
    Ok(ProxSpec::NegEntropySimplex { tau }.apply(&neg).iter().zip(w).map(|(p, a)| p - a).collect())
}

/// Homogeneous Dale's-law weights; all magnitudes are nonnegative and the
/// inhibitory signs are applied on assembly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EiWeights {
    pub w_ee: f64,
    /// Magnitude of I→E synapses.
    pub w_ei: f64,
    pub w_ie: f64,
    pub w_ii: f64,
}

impl EiWeights {
    pub fn validate(&self) -> Result<(), ProximalError> {
        for (name, v) in [("w_EE", self.w_ee), ("w_EI", self.w_ei), ("w_IE", self.w_ie), ("w_II", self.w_ii)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(ProximalError::InvalidParameter(format!("{name} must be >= 0, got {v}")));
            }
        }
        Ok(())
    }

    /// `δ = 1 − w_EE + w_EI`.
    pub fn delta(&self) -> f64 {
        1.0 - self.w_ee + self.w_ei
    }

    /// `w_IE ≥ 1 + w_II`.
    pub fn functional(&self) -> bool {
        self.w_ie >= 1.0 + self.w_ii
    }
}

/// Linear-threshold network with excitatory and inhibitory populations.
#[derive(Debug, Clone, PartialEq)]
pub struct EiNetwork {
    excitatory: Vec<bool>,
    /// Directed `(from, to)` edges, self-loops allowed.
    edges: Vec<(usize, usize)>,
    weights: EiWeights,
    w: Mat,
    b: Mat,
}

impl EiNetwork {
    pub fn new(excitatory: Vec<bool>, edges: Vec<(usize, usize)>, weights: EiWeights) -> Result<Self, ProximalError> {
        weights.validate()?;
        let n = excitatory.len();
        let mut w = Mat::zeros(n, n);
        for &(from, to) in &edges {
            if from >= n || to >= n {
                return Err(ProximalError::Structure(format!("edge ({from}, {to}) out of range for N = {n}")));
            }
            w[(to, from)] = match (excitatory[from], excitatory[to]) {
                (true, true) => weights.w_ee,
                (true, false) => weights.w_ie,
                (false, true) => -weights.w_ei,
                (false, false) => -weights.w_ii,
            };
        }
        Ok(EiNetwork { excitatory, edges, weights, w, b: Mat::identity(n) })
    }

    /// `k` excitatory neurons (indices `0..k`) around one inhibitory hub
    /// (index `k`), with E and I self-loops.
    pub fn e_k_i(k: usize, weights: EiWeights) -> Result<Self, ProximalError> {
        if k == 0 {
            return Err(ProximalError::InvalidParameter("k must be >= 1".into()));
        }
        let mut edges = vec![(k, k)];
        for e in 0..k {
            edges.extend([(e, e), (e, k), (k, e)]);
        }
        let mut excitatory = vec![true; k];
        excitatory.push(false);
        EiNetwork::new(excitatory, edges, weights)
    }

    pub fn dim(&self) -> usize {
        self.excitatory.len()
    }

    pub fn weights(&self) -> &EiWeights {
        &self.weights
    }

    pub fn weight_matrix(&self) -> &Mat {
        &self.w
    }

    pub fn is_excitatory(&self, i: usize) -> bool {
        self.excitatory[i]
    }

    fn check(&self, x: &[f64], u: &[f64]) -> Result<(), ProximalError> {
        if x.len() != self.dim() || u.len() != self.b.cols() {
            return Err(ProximalError::Dimension(format!(
                "N = {}, got |x| = {}, |u| = {}",
                self.dim(),
                x.len(),
                u.len()
            )));
        }
        Ok(())
    }

    fn drive(&self, x: &[f64], u: &[f64]) -> Vec<f64> {
        let wx = self.w.matvec(x);
        let bu = self.b.matvec(u);
        wx.iter().zip(&bu).map(|(a, b)| a + b).collect()
    }

    /// `−x + clamp_[0,1](Wx + Bu)`.
    pub fn field(&self, x: &[f64], u: &[f64]) -> Result<Vec<f64>, ProximalError> {
        self.check(x, u)?;
        Ok(self.field_unchecked(x, u))
    }

    fn field_unchecked(&self, x: &[f64], u: &[f64]) -> Vec<f64> {
        self.drive(x, u).iter().zip(x).map(|(d, xi)| d.clamp(0.0, 1.0) - xi).collect()
    }

    pub fn equilibrium(&self, u: &[f64], cfg: &IntegratorConfig) -> Result<Vec<f64>, ProximalError> {
        self.check(&vec![0.0; self.dim()], u)?;
        let field = autonomous(self.dim(), |x| self.field_unchecked(x, u));
        Ok(find_equilibrium(&field, &vec![0.0; self.dim()], cfg)?)
    }

    /// Largest per-neuron deviation from `x_i = clamp(row_i(Wx + Bu))`.
    pub fn nash_residual(&self, x: &[f64], u: &[f64]) -> Result<f64, ProximalError> {
        Ok(norm_inf(&self.field(x, u)?))
    }

    /// Stimulus vector for the `e_k_i` layout: `u_e` on the E neurons,
    /// zero on the hub.
    pub fn stimulus(&self, u_e: &[f64]) -> Result<Vec<f64>, ProximalError> {
        let n_e = self.excitatory.iter().filter(|&&e| e).count();
        if u_e.len() != n_e {
            return Err(ProximalError::Dimension(format!("{} stimuli for {n_e} E neurons", u_e.len())));
        }
        let mut it = u_e.iter();
        Ok(self.excitatory.iter().map(|&e| if e { *it.next().expect("counted") } else { 0.0 }).collect())
    }

    fn check_reciprocal(&self) -> Result<(), ProximalError> {
        let set: std::collections::HashSet<_> = self.edges.iter().copied().collect();
        for &(a, b) in &self.edges {
            if self.excitatory[a] != self.excitatory[b] && !set.contains(&(b, a)) {
                return Err(ProximalError::Structure(format!("E-I edge ({a}, {b}) has no reciprocal")));
            }
        }
        Ok(())
    }

    /// Largest `(d_in + d_out)/2` over neurons of one population, counting
    /// only edges within that population.
    fn population_degree(&self, excitatory: bool) -> f64 {
        let n = self.dim();
        let mut din = vec![0usize; n];
        let mut dout = vec![0usize; n];
        for &(a, b) in &self.edges {
            if self.excitatory[a] == excitatory && self.excitatory[b] == excitatory {
                dout[a] += 1;
                din[b] += 1;
            }
        }
        (0..n)
            .filter(|&i| self.excitatory[i] == excitatory)
            .map(|i| (din[i] + dout[i]) as f64 / 2.0)
            .fold(0.0, f64::max)
    }

    pub fn monostability_check(&self) -> Result<Monostability, ProximalError> {
        self.check_reciprocal()?;
        Ok(monostability_from_degrees(
            self.population_degree(true),
            self.population_degree(false),
            self.weights.w_ee,
            self.weights.w_ii,
        ))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Monostability {
    pub holds: bool,
    /// `1 − d_E·w_EE`.
    pub slack_e: f64,
    /// `1 − (d_I − 2)·w_II`.
    pub slack_i: f64,
}

/// Both inequalities with the averaged degrees `d = (d_in + d_out)/2` of
/// the excitatory and inhibitory populations.
pub fn monostability_from_degrees(degree_e: f64, degree_i: f64, w_ee: f64, w_ii: f64) -> Monostability {
    let slack_e = 1.0 - degree_e * w_ee;
    let slack_i = 1.0 - (degree_i - 2.0) * w_ii;
    Monostability { holds: slack_e > 0.0 && slack_i > 0.0, slack_e, slack_i }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WtaPrediction {
    /// Index among the E neurons guaranteed to win.
    Winner(usize),
    /// Stimuli fall outside the theorem's hypothesis region.
    NoGuarantee,
}

/// Winner-take-all guarantee for an `e_k_i` network: `i` wins when
/// `u_i > δ` and every other `u_j < −δ`.
pub fn wta_predict(net: &EiNetwork, u_e: &[f64]) -> Result<WtaPrediction, ProximalError> {
    let w = net.weights();
    if !w.functional() {
        return Err(ProximalError::Hypothesis(format!(
            "functionality needs w_IE >= 1 + w_II, got {} < {}",
            w.w_ie,
            1.0 + w.w_ii
        )));
    }
    let mono = net.monostability_check()?;
    if !mono.holds {
        return Err(ProximalError::Hypothesis(format!(
            "monostability fails (slacks {:.4}, {:.4})",
            mono.slack_e, mono.slack_i
        )));
    }
    net.stimulus(u_e)?;
    let delta = w.delta();
    let winners: Vec<usize> = (0..u_e.len()).filter(|&i| u_e[i] > delta).collect();
    Ok(match winners[..] {
        [i] if u_e.iter().enumerate().all(|(j, &v)| j == i || v < -delta) => WtaPrediction::Winner(i),
        _ => WtaPrediction::NoGuarantee,
    })
}

/// Both layer counts for full contrast enhancement: the closed-form value
/// `1 + ln(ε/δ)/ln(1/w_EE − 1)` and the smallest `ℓ ≥ 1` with
/// `ε·(1/w_EE − 1)^(ℓ−1) ≥ δ`.
pub fn contrast_layers_needed(w_ee: f64, epsilon: f64, delta: f64) -> Result<(f64, usize), ProximalError> {
    if !(w_ee > 0.0 && w_ee < 0.5) {
        return Err(ProximalError::InvalidParameter(format!("w_EE must lie in (0, 1/2), got {w_ee}")));
    }
    if !(epsilon > 0.0 && delta > 0.0) {
        return Err(ProximalError::InvalidParameter("epsilon and delta must be positive".into()));
    }
    let factor = 1.0 / w_ee - 1.0;
    let formula = 1.0 + (epsilon / delta).ln() / factor.ln();
    let mut layers = 1;
    let mut contrast = epsilon;
    while contrast < delta {
        contrast *= factor;
        layers += 1;
    }
    Ok((formula, layers))
}

/// One E²-I column per layer; layer `ℓ+1` receives `gain · x_E(ℓ)` as its
/// stimulus. Returns the `(x_left, x_right)` equilibrium of every layer.
pub fn simulate_contrast_layers(
    weights: EiWeights,
    u0: (f64, f64),
    layers: usize,
    gain: f64,
    cfg: &IntegratorConfig,
) -> Result<Vec<(f64, f64)>, ProximalError> {
    let net = EiNetwork::e_k_i(2, weights)?;
    let mut stim = (u0.0, u0.1);
    let mut out = Vec::with_capacity(layers);
    for _ in 0..layers {
        let x = net.equilibrium(&net.stimulus(&[stim.0, stim.1])?, cfg)?;
        out.push((x[0], x[1]));
        stim = (gain * x[0], gain * x[1]);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flows::integrate_ode;
    use crate::hopfield::{Activation, HopfieldNet};
    use crate::mathcore::{lambda_max_sym, sym_eig, SeededRng};
    use proptest::prelude::*;

    fn eq_cfg() -> IntegratorConfig {
        IntegratorConfig::rk4(0.05, 5000.0).with_tol(1e-11)
    }

    #[test]
    fn prox_examples() {
        assert_eq!(prox(&ProxSpec::Box { lo: 0.0, hi: 1.0 }, &[1.7]).unwrap(), vec![1.0]);
        let l1 = ProxSpec::L1 { lambda: 0.5 };
        let y = prox(&l1, &[1.2, -0.3, -2.0]).unwrap();
        assert!((y[0] - 0.7).abs() < 1e-15 && y[1] == 0.0 && (y[2] + 1.5).abs() < 1e-15);
        assert_eq!(prox(&ProxSpec::NonnegL1 { lambda: 0.5 }, &[1.0, -1.0]).unwrap(), vec![0.5, 0.0]);
        assert_eq!(prox(&ProxSpec::NonnegIndicator, &[-1.0, 2.0]).unwrap(), vec![0.0, 2.0]);
        let s = prox(&ProxSpec::NegEntropySimplex { tau: 0.7 }, &[3.0; 4]).unwrap();
        assert!(s.iter().all(|v| (v - 0.25).abs() < 1e-15));
        assert!(prox(&ProxSpec::Box { lo: 1.0, hi: 1.0 }, &[0.0]).is_err());
        assert!(prox(&ProxSpec::L1 { lambda: -1.0 }, &[0.0]).is_err());
        assert!(prox(&ProxSpec::NegEntropySimplex { tau: 0.0 }, &[0.0]).is_err());
    }

    #[test]
    fn proxgrad_examples() {
        let grad = |x: &[f64], u: &[f64]| x.iter().zip(u).map(|(a, b)| a - b).collect::<Vec<_>>();
        let f = proxgrad_field(&grad, &ProxSpec::Box { lo: 0.0, hi: 1.0 }, &[0.5], &[2.0]).unwrap();
        assert_eq!(f, vec![0.5]);
        // Minimizer of ½(x−u)² + indicator of [0,1] at u = 2 is x = 1.
        assert_eq!(proxgrad_field(&grad, &ProxSpec::Box { lo: 0.0, hi: 1.0 }, &[1.0], &[2.0]).unwrap(), vec![0.0]);
        let mut rng = SeededRng::new(1);
        for _ in 0..20 {
            let x = rng.normal_vec(4);
            let u = rng.normal_vec(4);
            let f = proxgrad_field(&grad, &ProxSpec::L1 { lambda: 0.0 }, &x, &u).unwrap();
            let g = grad(&x, &u);
            assert!(f.iter().zip(&g).all(|(a, b)| (a + b).abs() < 1e-12));
        }
        let bad = |_: &[f64], _: &[f64]| vec![0.0];
        assert!(proxgrad_field(&bad, &ProxSpec::NonnegIndicator, &[0.0, 1.0], &[]).is_err());
    }

    #[test]
    fn frn_equals_proxgrad() {
        let mut rng = SeededRng::new(2);
        for (act, spec) in
            [(Activation::Sat01, ProxSpec::Box { lo: 0.0, hi: 1.0 }), (Activation::ReLU, ProxSpec::NonnegIndicator)]
        {
            let n = 5;
            let w = Mat::from_fn(n, n, |_, _| rng.normal()).symmetric_part();
            let b = Mat::from_fn(n, 2, |_, _| rng.normal());
            let net = HopfieldNet::new(1.0, vec![1.0; n], w.clone(), b.clone(), act).unwrap();
            // f(x, u) = ½xᵀ(I − W)x − xᵀBu.
            let grad = |x: &[f64], u: &[f64]| {
                let wx = w.matvec(x);
                let bu = b.matvec(u);
                (0..n).map(|i| x[i] - wx[i] - bu[i]).collect::<Vec<_>>()
            };
            for _ in 0..50 {
                let x = rng.normal_vec(n);
                let u = rng.normal_vec(2);
                let a = net.frn_field(&x, &u).unwrap();
                let p = proxgrad_field(&grad, &spec, &x, &u).unwrap();
                assert!(a.iter().zip(&p).all(|(s, t)| (s - t).abs() < 1e-12));
            }
        }
    }

    #[test]
    fn lasso_identity_dictionary() {
        let p = LassoProblem::new(Mat::identity(2), vec![1.0, 0.1], 0.3).unwrap();
        let x = p.network_equilibrium(&eq_cfg()).unwrap();
        assert!((x[0] - 0.7).abs() < 1e-8 && x[1].abs() < 1e-8);
        let o = p.oracle().unwrap();
        assert!((o[0] - 0.7).abs() < 1e-12 && o[1] == 0.0);
        let zero = LassoProblem::new(Mat::identity(2), vec![0.0, 0.0], 0.3).unwrap();
        assert_eq!(zero.network_field(&[0.0, 0.0]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn lasso_validation() {
        assert!(matches!(
            LassoProblem::new(Mat::identity(2).scale(2.0), vec![0.0; 2], 0.1),
            Err(ProximalError::NonUnitColumn { column: 0, .. })
        ));
        assert!(LassoProblem::new(Mat::identity(2), vec![0.0; 3], 0.1).is_err());
        assert!(LassoProblem::new(Mat::identity(2), vec![0.0; 2], 0.0).is_err());
    }

    #[test]
    fn lasso_large_lambda_gives_zero() {
        let mut rng = SeededRng::new(3);
        let p = LassoProblem::random(5, 8, 1.0, &mut rng).unwrap();
        let tu = p.theta().transpose().matvec(p.u());
        let big = tu.iter().copied().fold(0.0, f64::max) + 1e-9;
        let p = LassoProblem::new(p.theta().clone(), p.u().to_vec(), big).unwrap();
        assert!(p.oracle().unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn duplicated_atoms_share_mass() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let theta = Mat::from_rows(&[vec![s, s, 1.0], vec![s, s, 0.0]]).unwrap();
        let u = vec![s, s];
        let p = LassoProblem::new(theta.clone(), u.clone(), 0.2).unwrap();
        // Lateral weight between the copies is −Θ₁ᵀΘ₂ = −1.
        assert!((dot(&theta.column(0), &theta.column(1)) - 1.0).abs() < 1e-15);
        let x = p.network_equilibrium(&eq_cfg().with_tol(1e-10)).unwrap();
        let single = LassoProblem::new(Mat::from_rows(&[vec![s], vec![s]]).unwrap(), u, 0.2).unwrap();
        let y = single.oracle().unwrap();
        assert!((x[0] + x[1] - y[0]).abs() < 1e-6, "{x:?} vs {y:?}");
    }

    #[test]
    fn lasso_network_matches_oracle_and_descends() {
        let mut rng = SeededRng::new(4);
        for _ in 0..10 {
            let p = LassoProblem::random(5, 8, 0.2, &mut rng).unwrap();
            let x_net = p.network_equilibrium(&eq_cfg()).unwrap();
            let x_or = p.oracle().unwrap();
            let (a, b) = (p.objective(&x_net).unwrap(), p.objective(&x_or).unwrap());
            assert!((a - b).abs() < 1e-6, "{a} vs {b}");
            assert!(b <= a + 1e-6);

            let field = autonomous(8, |x| p.network_field(x).unwrap());
            let e = |x: &[f64]| p.objective(x).unwrap();
            let x0: Vec<f64> = (0..8).map(|_| rng.uniform()).collect();
            let rec = integrate_ode(&field, &x0, &IntegratorConfig::rk4(0.01, 20.0), Some(&e)).unwrap();
            assert!(rec.max_energy_increase().unwrap() <= 1e-9);
        }
    }

    #[test]
    fn lasso_csv_round_trip() {
        let mut rng = SeededRng::new(5);
        let p = LassoProblem::random(3, 4, 0.25, &mut rng).unwrap();
        let text = p.to_csv();
        let q = LassoProblem::from_csv(&text).unwrap();
        assert_eq!(p, q);
        assert_eq!(q.to_csv(), text);
        assert!(LassoProblem::from_csv("2,2,0.1\n1,0\n").is_err());
        assert!(LassoProblem::from_csv("1,1,0.1\nx\n1\n").is_err());
    }

    #[test]
    fn softmax_play_examples() {
        let zero = |_: &[f64], w: &[f64]| vec![0.0; w.len()];
        let w = vec![0.5, 0.3, 0.2];
        let f = softmax_play_field(&zero, 1.0, &w, &[]).unwrap();
        let third = 1.0 / 3.0;
        assert!(f.iter().zip(&w).all(|(a, b)| (a - (third - b)).abs() < 1e-15));
        let u = vec![third; 3];
        assert!(softmax_play_field(&zero, 1.0, &u, &[]).unwrap().iter().all(|v| v.abs() < 1e-15));

        let g = |_: &[f64], _: &[f64]| vec![0.4, 0.1, 0.7];
        let shifted = |_: &[f64], _: &[f64]| vec![10.4, 10.1, 10.7];
        let a = softmax_play_field(&g, 0.5, &w, &[]).unwrap();
        let b = softmax_play_field(&shifted, 0.5, &w, &[]).unwrap();
        assert!(a.iter().zip(&b).all(|(s, t)| (s - t).abs() < 1e-12));

        // Small τ: the equilibrium is the least-surprise vertex.
        let eq: Vec<f64> = softmax_play_field(&g, 1e-3, &u, &[]).unwrap().iter().zip(&u).map(|(d, w)| d + w).collect();
        assert!((eq[1] - 1.0).abs() < 1e-12 && eq[0] < 1e-12 && eq[2] < 1e-12);

        assert!(matches!(softmax_play_field(&zero, 1.0, &[0.5, 0.6], &[]), Err(ProximalError::OffSimplex { .. })));
        assert!(softmax_play_field(&zero, 1.0, &[1.1, -0.1], &[]).is_err());
    }

    fn weights(w_ee: f64, w_ei: f64) -> EiWeights {
        EiWeights { w_ee, w_ei, w_ie: 1.0, w_ii: 0.0 }
    }

    #[test]
    fn ei_field_examples() {
        let net = EiNetwork::e_k_i(2, weights(0.4, 0.5)).unwrap();
        assert_eq!(net.field(&[0.0; 3], &[0.0; 3]).unwrap(), vec![0.0; 3]);
        let zero = EiNetwork::e_k_i(3, EiWeights { w_ee: 0.0, w_ei: 0.0, w_ie: 0.0, w_ii: 0.0 }).unwrap();
        assert_eq!(zero.field(&[0.0; 4], &[0.5, 2.0, -1.0, 0.2]).unwrap(), vec![0.5, 1.0, 0.0, 0.2]);
        assert!(net.field(&[0.0; 2], &[0.0; 3]).is_err());
        let w = net.weight_matrix();
        assert_eq!((w[(0, 0)], w[(2, 0)], w[(0, 2)], w[(2, 2)]), (0.4, 1.0, -0.5, 0.0));
    }

    #[test]
    fn monostability_examples() {
        let m = monostability_from_degrees(2.0, 2.0, 0.4, 0.3);
        assert!(m.holds && (m.slack_e - 0.2).abs() < 1e-15 && (m.slack_i - 1.0).abs() < 1e-15);
        assert!(!monostability_from_degrees(2.0, 2.0, 0.6, 0.0).holds);
        assert!(monostability_from_degrees(50.0, 80.0, 0.0, 0.0).holds);
        let net = EiNetwork::e_k_i(4, weights(0.9, 0.5)).unwrap();
        assert!(net.monostability_check().unwrap().holds);
        let broken = EiNetwork::new(vec![true, false], vec![(0, 1)], weights(0.1, 0.1)).unwrap();
        assert!(matches!(broken.monostability_check(), Err(ProximalError::Structure(_))));
    }

    #[test]
    fn winner_take_all() {
        let net = EiNetwork::e_k_i(2, weights(0.4, 0.5)).unwrap();
        assert!((net.weights().delta() - 1.1).abs() < 1e-15);
        assert_eq!(wta_predict(&net, &[1.2, -1.2]).unwrap(), WtaPrediction::Winner(0));
        let x = net.equilibrium(&net.stimulus(&[1.2, -1.2]).unwrap(), &eq_cfg()).unwrap();
        assert!(x[0] >= 0.9 && x[1] <= 0.05);
        assert!(net.nash_residual(&x, &net.stimulus(&[1.2, -1.2]).unwrap()).unwrap() < 1e-8);
        assert_eq!(wta_predict(&net, &[-1.2, 1.2]).unwrap(), WtaPrediction::Winner(1));
        let y = net.equilibrium(&net.stimulus(&[-1.2, 1.2]).unwrap(), &eq_cfg()).unwrap();
        assert!(y[1] >= 0.9 && y[0] <= 0.05);
        assert_eq!(wta_predict(&net, &[0.5, -0.5]).unwrap(), WtaPrediction::NoGuarantee);
        let weak = EiNetwork::e_k_i(2, EiWeights { w_ie: 0.5, ..weights(0.4, 0.5) }).unwrap();
        assert!(matches!(wta_predict(&weak, &[1.2, -1.2]), Err(ProximalError::Hypothesis(_))));
        let unstable = EiNetwork::e_k_i(2, weights(1.2, 0.5)).unwrap();
        assert!(matches!(wta_predict(&unstable, &[2.0, -2.0]), Err(ProximalError::Hypothesis(_))));
    }

    #[test]
    fn contrast_layer_counts() {
        let (formula, layers) = contrast_layers_needed(0.25, 0.1, 1.0).unwrap();
        assert_eq!(layers, 4);
        assert!(formula < 0.0);
        assert_eq!(contrast_layers_needed(0.25, 2.0, 1.0).unwrap().1, 1);
        assert!(contrast_layers_needed(0.5, 0.1, 1.0).is_err());
        assert!(contrast_layers_needed(0.25, 0.0, 1.0).is_err());
    }

    #[test]
    fn layered_contrast_linear_regime_gain() {
        // Both E neurons stay unsaturated, so the differential gain per
        // layer is 1/(1 − w_EE) for unit inter-layer gain.
        let w = EiWeights { w_ee: 0.25, w_ei: 0.1, w_ie: 1.0, w_ii: 0.0 };
        let out = simulate_contrast_layers(w, (0.22, 0.18), 2, 1.0, &eq_cfg()).unwrap();
        let ratio = (out[0].0 - out[0].1) / 0.04;
        assert!((ratio - 1.0 / 0.75).abs() < 1e-6, "{ratio}");
    }

    #[test]
    fn contracting_flows_converge_together() {
        let mut rng = SeededRng::new(6);
        let n = 6;
        // Spectral radius 0.8 keeps every clamped Jacobian −I + DW contracting.
        let w = Mat::from_fn(n, n, |_, _| rng.normal()).symmetric_part();
        let eig = sym_eig(&w).unwrap();
        let w = w.scale(0.8 / eig.max().abs().max(eig.min().abs()));
        assert!(lambda_max_sym(&w).unwrap() < 1.0);
        let net = HopfieldNet::new(1.0, vec![1.0; n], w, Mat::zeros(n, 1), Activation::Sat01).unwrap();
        let flow = net.frn_flow(&[0.0]).unwrap();
        let cfg = IntegratorConfig::rk4(0.01, 5.0).with_tol(f64::MIN_POSITIVE);
        let a = integrate_ode(&flow, &rng.normal_vec(n), &cfg, None).unwrap();
        let b = integrate_ode(&flow, &rng.normal_vec(n), &cfg, None).unwrap();
        let dist: Vec<f64> = a
            .states
            .iter()
            .zip(&b.states)
            .map(|(x, y)| norm2(&x.iter().zip(y).map(|(p, q)| p - q).collect::<Vec<_>>()))
            .collect();
        assert!(dist.windows(2).all(|d| d[1] <= d[0]));
        assert!(dist.last().unwrap() < &dist[0]);
    }

    proptest! {
        #[test]
        fn prox_is_nonexpansive(seed in 0u64..1_000_000, kind in 0u8..5) {
            let mut rng = SeededRng::new(seed);
            let spec = match kind {
                0 => ProxSpec::L1 { lambda: rng.uniform() },
                1 => ProxSpec::NonnegL1 { lambda: rng.uniform() },
                2 => ProxSpec::Box { lo: -rng.uniform(), hi: rng.uniform() + 0.01 },
                3 => ProxSpec::NonnegIndicator,
                // Softmax(x/τ) is 1-Lipschitz only for τ ≥ 1/2.
                _ => ProxSpec::NegEntropySimplex { tau: 0.5 + rng.uniform() },
            };
            for _ in 0..50 {
                let x = rng.normal_vec(5).iter().map(|v| 3.0 * v).collect::<Vec<_>>();
                let y = rng.normal_vec(5).iter().map(|v| 3.0 * v).collect::<Vec<_>>();
                let d_in = norm2(&x.iter().zip(&y).map(|(a, b)| a - b).collect::<Vec<_>>());
                let (px, py) = (spec.apply(&x), spec.apply(&y));
                let d_out = norm2(&px.iter().zip(&py).map(|(a, b)| a - b).collect::<Vec<_>>());
                prop_assert!(d_out <= d_in + 1e-12);
            }
        }
    }
}
