//! Continuous-time Hopfield and firing-rate networks.
//!
//! State model `τ ẋ = −D x + W Φ(x) + B u` with the classical energy
//! `E = −½ΦᵀWΦ + (Dx − Bu)ᵀΦ − Σ d_i ∫₀^{x_i} Φ`. For symmetric `W` the
//! flow is a preconditioned gradient flow of `E` and
//! `dE/dt = −τ Σ Φ'(x_i) ẋ_i²`.

use std::fmt::Write as _;

use log::warn;
use thiserror::Error;

use crate::flows::{find_equilibrium, FlowError, IntegratorConfig, TrajectoryRecord, VectorField};
use crate::mathcore::{dot, lambda_max_sym, sign, Mat, MathError, SYMMETRY_TOL};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HopfieldError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("trajectory carries no energies")]
    MissingEnergies,
    #[error("network file: {0}")]
    Parse(String),
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error(transparent)]
    Math(#[from] MathError),
}

/// Monotone, 1-Lipschitz transfer functions with closed-form primitives.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Tanh,
    /// Centered logistic `2/(1+e^{−x}) − 1 = tanh(x/2)`, so `Φ(0) = 0`.
    Sigmoid,
    ReLU,
    /// Saturation to `[0, 1]`.
    Sat01,
    Identity,
}

fn ln_cosh(x: f64) -> f64 {
    let a = x.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}

impl Activation {
    pub fn value(self, x: f64) -> f64 {
        match self {
            Activation::Tanh => x.tanh(),
            Activation::Sigmoid => (0.5 * x).tanh(),
            Activation::ReLU => x.max(0.0),
            Activation::Sat01 => x.clamp(0.0, 1.0),
            Activation::Identity => x,
        }
    }

    /// Derivative; at kinks the right derivative is returned.
    pub fn derivative(self, x: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - x.tanh().powi(2),
            Activation::Sigmoid => 0.5 * (1.0 - (0.5 * x).tanh().powi(2)),
            Activation::ReLU => {
                if x >= 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Sat01 => {
                if (0.0..1.0).contains(&x) {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Identity => 1.0,
        }
    }

    /// `∫₀ˣ Φ(s) ds`.
    pub fn integral(self, x: f64) -> f64 {
        match self {
            Activation::Tanh => ln_cosh(x),
            Activation::Sigmoid => 2.0 * ln_cosh(0.5 * x),
            Activation::ReLU => 0.5 * x.max(0.0).powi(2),
            Activation::Sat01 => {
                if x <= 0.0 {
                    0.0
                } else if x <= 1.0 {
                    0.5 * x * x
                } else {
                    x - 0.5
                }
            }
            Activation::Identity => 0.5 * x * x,
        }
    }

    /// Strictly increasing and differentiable everywhere.
    pub fn is_smooth_strict(self) -> bool {
        matches!(self, Activation::Tanh | Activation::Sigmoid | Activation::Identity)
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Tanh => "tanh",
            Activation::Sigmoid => "sigmoid",
            Activation::ReLU => "relu",
            Activation::Sat01 => "sat01",
            Activation::Identity => "identity",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Some(match s {
            "tanh" => Activation::Tanh,
            "sigmoid" => Activation::Sigmoid,
            "relu" => Activation::ReLU,
            "sat01" => Activation::Sat01,
            "identity" => Activation::Identity,
            _ => return None,
        })
    }

    pub const ALL: [Activation; 5] =
        [Activation::Tanh, Activation::Sigmoid, Activation::ReLU, Activation::Sat01, Activation::Identity];

    pub fn apply(self, x: &[f64]) -> Vec<f64> {
        x.iter().map(|&v| self.value(v)).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HopfieldNet {
    tau: f64,
    d: Vec<f64>,
    w: Mat,
    b: Mat,
    activation: Activation,
}

impl HopfieldNet {
    pub fn new(tau: f64, d: Vec<f64>, w: Mat, b: Mat, activation: Activation) -> Result<Self, HopfieldError> {
        let n = d.len();
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(HopfieldError::InvalidParameter(format!("tau must be positive, got {tau}")));
        }
        if let Some(i) = d.iter().position(|&di| !(di > 0.0 && di.is_finite())) {
            return Err(HopfieldError::InvalidParameter(format!("dissipation d[{i}] = {} must be positive", d[i])));
        }
        if w.rows() != n || w.cols() != n {
            return Err(HopfieldError::Dimension(format!("W is {}x{}, expected {n}x{n}", w.rows(), w.cols())));
        }
        if b.rows() != n {
            return Err(HopfieldError::Dimension(format!("B has {} rows, expected {n}", b.rows())));
        }
        Ok(HopfieldNet { tau, d, w, b, activation })
    }

    /// `τ = 1`, `D = d·I`, no input channel.
    pub fn autonomous(w: Mat, d: f64, activation: Activation) -> Result<Self, HopfieldError> {
        let n = w.rows();
        HopfieldNet::new(1.0, vec![d; n], w, Mat::zeros(n, 1), activation)
    }

    pub fn dim(&self) -> usize {
        self.d.len()
    }

    pub fn input_dim(&self) -> usize {
        self.b.cols()
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn dissipation(&self) -> &[f64] {
        &self.d
    }

    pub fn weights(&self) -> &Mat {
        &self.w
    }

    pub fn input_matrix(&self) -> &Mat {
        &self.b
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn is_symmetric(&self) -> bool {
        self.w.is_symmetric(SYMMETRY_TOL)
    }

    fn check(&self, x: &[f64], u: &[f64]) -> Result<(), HopfieldError> {
        if x.len() != self.dim() {
            return Err(HopfieldError::Dimension(format!(
                "state has length {}, network has {} neurons",
                x.len(),
                self.dim()
            )));
        }
        if u.len() != self.input_dim() {
            return Err(HopfieldError::Dimension(format!(
                "input has length {}, B has {} columns",
                u.len(),
                self.input_dim()
            )));
        }
        Ok(())
    }

    /// `(−Dx + WΦ(x) + Bu)/τ`.
    pub fn field(&self, x: &[f64], u: &[f64]) -> Result<Vec<f64>, HopfieldError> {
        self.check(x, u)?;
        Ok(self.field_unchecked(x, &self.b.matvec(u)))
    }

    fn field_unchecked(&self, x: &[f64], bu: &[f64]) -> Vec<f64> {
        let wphi = self.w.matvec(&self.activation.apply(x));
        (0..self.dim()).map(|i| (-self.d[i] * x[i] + wphi[i] + bu[i]) / self.tau).collect()
    }

    /// The classical Hopfield energy; only a Lyapunov certificate for
    /// symmetric `W` (a warning is logged otherwise).
    pub fn energy(&self, x: &[f64], u: &[f64]) -> Result<f64, HopfieldError> {
        self.check(x, u)?;
        if !self.is_symmetric() {
            warn!("hopfield energy evaluated with asymmetric W; it is not a Lyapunov certificate");
        }
        Ok(self.energy_unchecked(x, &self.b.matvec(u)))
    }

    fn energy_unchecked(&self, x: &[f64], bu: &[f64]) -> f64 {
        let phi = self.activation.apply(x);
        let quad = -0.5 * dot(&phi, &self.w.matvec(&phi));
        let mut lin = 0.0;
        let mut integ = 0.0;
        for i in 0..self.dim() {
            lin += (self.d[i] * x[i] - bu[i]) * phi[i];
            integ += self.d[i] * self.activation.integral(x[i]);
        }
        quad + lin - integ
    }

    /// Analytic `∇E(x) = Φ'(x) ⊙ (Dx − WΦ(x) − Bu)` (symmetric `W`).
    pub fn energy_gradient(&self, x: &[f64], u: &[f64]) -> Result<Vec<f64>, HopfieldError> {
        self.check(x, u)?;
        let f = self.field(x, u)?;
        Ok((0..self.dim()).map(|i| -self.tau * self.activation.derivative(x[i]) * f[i]).collect())
    }

    /// Exact energy dissipation rate `dE/dt = −τ Σ Φ'(x_i) ẋ_i²` for symmetric `W`.
    pub fn energy_rate(&self, x: &[f64], u: &[f64]) -> Result<f64, HopfieldError> {
        let f = self.field(x, u)?;
        Ok(-self.tau * (0..self.dim()).map(|i| self.activation.derivative(x[i]) * f[i] * f[i]).sum::<f64>())
    }

    /// Diagonal of the preconditioner `M(x) = diag(1/Φ'(x_i))/τ` with
    /// `ẋ = −M(x)∇E(x)`; `None` where `Φ' = 0`.
    pub fn preconditioner(&self, x: &[f64]) -> Option<Vec<f64>> {
        x.iter()
            .map(|&xi| {
                let g = self.activation.derivative(xi);
                (g > 0.0).then(|| 1.0 / (g * self.tau))
            })
            .collect()
    }

    /// Firing-rate form `ż = −Dz + Φ(Wz + Bu)`.
    pub fn frn_field(&self, z: &[f64], u: &[f64]) -> Result<Vec<f64>, HopfieldError> {
        self.check(z, u)?;
        let bu = self.b.matvec(u);
        let wz = self.w.matvec(z);
        Ok((0..self.dim()).map(|i| -self.d[i] * z[i] + self.activation.value(wz[i] + bu[i])).collect())
    }

    /// The Hopfield flow for a fixed input, as a [`VectorField`].
    pub fn flow(&self, u: &[f64]) -> Result<HopfieldFlow<'_>, HopfieldError> {
        self.check(&vec![0.0; self.dim()], u)?;
        Ok(HopfieldFlow { net: self, bu: self.b.matvec(u) })
    }

    /// The firing-rate flow for a fixed input.
    pub fn frn_flow(&self, u: &[f64]) -> Result<FrnFlow<'_>, HopfieldError> {
        self.check(&vec![0.0; self.dim()], u)?;
        Ok(FrnFlow { net: self, bu: self.b.matvec(u) })
    }

    /// Relaxes from `x0` and decodes with `sign` (ties to `+1`).
    pub fn retrieve_sign(&self, x0: &[f64], u: &[f64], cfg: &IntegratorConfig) -> Result<Vec<f64>, HopfieldError> {
        self.check(x0, u)?;
        let flow = self.flow(u)?;
        let x = find_equilibrium(&flow, x0, cfg)?;
        Ok(x.into_iter().map(sign).collect())
    }

    /// Serializes as a header line followed by `D`, `W` and `B` blocks.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "hopfield,activation={},tau={},n={},m={}",
            self.activation.name(),
            self.tau,
            self.dim(),
            self.input_dim()
        );
        let row = |out: &mut String, r: &[f64]| {
            let cells: Vec<String> = r.iter().map(|v| v.to_string()).collect();
            let _ = writeln!(out, "{}", cells.join(","));
        };
        out.push_str("D\n");
        row(&mut out, &self.d);
        out.push_str("W\n");
        for i in 0..self.dim() {
            row(&mut out, self.w.row(i));
        }
        out.push_str("B\n");
        for i in 0..self.dim() {
            row(&mut out, self.b.row(i));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self, HopfieldError> {
        let perr = |m: &str| HopfieldError::Parse(m.to_string());
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        let header = lines.next().ok_or_else(|| perr("empty input"))?;
        let mut fields = header.split(',');
        if fields.next() != Some("hopfield") {
            return Err(perr("header must start with `hopfield`"));
        }
        let (mut act, mut tau, mut n, mut m) = (None, None, None, None);
        for kv in fields {
            let (k, v) = kv.split_once('=').ok_or_else(|| perr("header fields must be key=value"))?;
            match k {
                "activation" => act = Some(Activation::from_name(v).ok_or_else(|| perr("unknown activation"))?),
                "tau" => tau = Some(v.parse::<f64>().map_err(|_| perr("bad tau"))?),
                "n" => n = Some(v.parse::<usize>().map_err(|_| perr("bad n"))?),
                "m" => m = Some(v.parse::<usize>().map_err(|_| perr("bad m"))?),
                _ => return Err(perr(&format!("unknown header key `{k}`"))),
            }
        }
        let act = act.ok_or_else(|| perr("missing activation"))?;
        let tau = tau.ok_or_else(|| perr("missing tau"))?;
        let n = n.ok_or_else(|| perr("missing n"))?;
        let m = m.ok_or_else(|| perr("missing m"))?;
        let parse_row = |l: &str, len: usize| -> Result<Vec<f64>, HopfieldError> {
            let r: Result<Vec<f64>, _> = l.split(',').map(|c| c.trim().parse::<f64>()).collect();
            let r = r.map_err(|_| perr(&format!("bad number in row `{l}`")))?;
            if r.len() != len {
                return Err(perr(&format!("row has {} entries, expected {len}", r.len())));
            }
            Ok(r)
        };
        if lines.next() != Some("D") {
            return Err(perr("expected `D` block"));
        }
        let d = parse_row(lines.next().ok_or_else(|| perr("missing D row"))?, n)?;
        let mut block = |tag: &str, cols: usize| -> Result<Mat, HopfieldError> {
            if lines.next() != Some(tag) {
                return Err(perr(&format!("expected `{tag}` block")));
            }
            let mut rows = Vec::with_capacity(n);
            for _ in 0..n {
                rows.push(parse_row(lines.next().ok_or_else(|| perr("truncated block"))?, cols)?);
            }
            Ok(Mat::from_rows(&rows)?)
        };
        let w = block("W", n)?;
        let b = block("B", m)?;
        HopfieldNet::new(tau, d, w, b, act)
    }
}

pub struct HopfieldFlow<'a> {
    net: &'a HopfieldNet,
    bu: Vec<f64>,
}

impl HopfieldFlow<'_> {
    pub fn energy(&self, x: &[f64]) -> f64 {
        self.net.energy_unchecked(x, &self.bu)
    }
}

impl VectorField for HopfieldFlow<'_> {
    fn dim(&self) -> usize {
        self.net.dim()
    }
    fn eval(&self, x: &[f64], _t: f64) -> Vec<f64> {
        self.net.field_unchecked(x, &self.bu)
    }
}

pub struct FrnFlow<'a> {
    net: &'a HopfieldNet,
    bu: Vec<f64>,
}

impl VectorField for FrnFlow<'_> {
    fn dim(&self) -> usize {
        self.net.dim()
    }
    fn eval(&self, z: &[f64], _t: f64) -> Vec<f64> {
        let wz = self.net.w.matvec(z);
        (0..self.net.dim()).map(|i| -self.net.d[i] * z[i] + self.net.activation.value(wz[i] + self.bu[i])).collect()
    }
}

/// Largest energy increase between consecutive recorded states; `0` means
/// the trajectory never went uphill.
pub fn check_lyapunov_decrease(net: &HopfieldNet, traj: &TrajectoryRecord) -> Result<f64, HopfieldError> {
    if !net.is_symmetric() {
        warn!("lyapunov check on asymmetric W: a positive jump is expected, not a bug");
    }
    traj.max_energy_increase().ok_or(HopfieldError::MissingEnergies)
}

/// `λ_max(sym(W − D))`; negative means `W − D` is diagonally stable with
/// the identity as certificate.
pub fn stability_margin(w: &Mat, d: &[f64]) -> Result<f64, HopfieldError> {
    if !w.is_square() || w.rows() != d.len() {
        return Err(HopfieldError::Dimension("W must be square and match D".into()));
    }
    Ok(lambda_max_sym(&w.sub(&Mat::from_diag(d)))?)
}

/// Sufficient test for global stability: `(W−D) + (W−D)ᵀ ≺ 0`. Conservative —
/// a general diagonal certificate would need an LMI solve.
pub fn check_global_stability(w: &Mat, d: &[f64]) -> bool {
    stability_margin(w, d).is_ok_and(|m| m < 0.0)
}

/// `−½ xᵀ W x`.
pub fn quadratic_energy(w: &Mat, x: &[f64]) -> f64 {
    -0.5 * dot(x, &w.matvec(x))
}
