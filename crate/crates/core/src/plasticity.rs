//! Local learning rules: Hebbian storage, Oja's normalized Hebbian rule,
//! contrastive Hebbian learning and equilibrium propagation.

use thiserror::Error;

use crate::flows::{find_equilibrium, FlowError, FnField, IntegratorConfig};
use crate::mathcore::tolerances::OJA_DIVERGENCE_NORM;
use crate::mathcore::{dot, fd_hessian, norm2, sym_eig, Mat, MathError, SeededRng};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlasticityError {
    #[error("pattern set needs at least one pattern")]
    NoPatterns,
    #[error("pattern {index} has entry {value}; entries must be exactly ±1")]
    NotSpin { index: usize, value: f64 },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("{0} sample list is empty")]
    EmptySamples(&'static str),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("initial weight vector is zero; Oja's rule cannot leave the origin")]
    ZeroInit,
    #[error("Oja's rule diverged at step {step} (|w| = {norm:.3e}); reduce the learning rate")]
    OjaDiverged { step: usize, norm: f64 },
    #[error("{phase} phase did not relax: {source}")]
    Relaxation {
        phase: &'static str,
        #[source]
        source: FlowError,
    },
    #[error("pattern file line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Math(#[from] MathError),
}

/// `K ≥ 1` binary patterns of length `N` with entries in `{−1, +1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct PatternSet {
    n: usize,
    patterns: Vec<Vec<f64>>,
}

impl PatternSet {
    pub fn new(patterns: Vec<Vec<f64>>) -> Result<Self, PlasticityError> {
        let n = patterns.first().ok_or(PlasticityError::NoPatterns)?.len();
        if n == 0 {
            return Err(PlasticityError::Dimension("patterns must be non-empty".into()));
        }
        for (mu, p) in patterns.iter().enumerate() {
            if p.len() != n {
                return Err(PlasticityError::Dimension(format!("pattern {mu} has length {}, expected {n}", p.len())));
            }
            if let Some(&v) = p.iter().find(|&&v| v != 1.0 && v != -1.0) {
                return Err(PlasticityError::NotSpin { index: mu, value: v });
            }
        }
        Ok(PatternSet { n, patterns })
    }

    /// `K` patterns with i.i.d. fair ±1 entries.
    pub fn random(n: usize, k: usize, rng: &mut SeededRng) -> Result<Self, PlasticityError> {
        if k == 0 {
            return Err(PlasticityError::NoPatterns);
        }
        PatternSet::new((0..k).map(|_| rng.spins(n)).collect())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.patterns.len()
    }

    pub fn get(&self, mu: usize) -> &[f64] {
        &self.patterns[mu]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.patterns.iter().map(Vec::as_slice)
    }

    /// `K × N` matrix with patterns as rows.
    pub fn as_matrix(&self) -> Mat {
        Mat::from_fn(self.k(), self.n, |mu, i| self.patterns[mu][i])
    }

    /// One pattern per line as `+`/`-` characters.
    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(self.k() * (self.n + 1));
        for p in &self.patterns {
            for &v in p {
                out.push(if v > 0.0 { '+' } else { '-' });
            }
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, PlasticityError> {
        let mut patterns = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.is_empty() {
                continue;
            }
            let row: Result<Vec<f64>, _> = line
                .chars()
                .map(|c| match c {
                    '+' => Ok(1.0),
                    '-' => Ok(-1.0),
                    other => {
                        Err(PlasticityError::Parse { line: i + 1, msg: format!("unexpected character `{other}`") })
                    }
                })
                .collect();
            patterns.push(row?);
        }
        PatternSet::new(patterns)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LearnConfig {
    pub eta: f64,
    pub steps: usize,
    pub beta: f64,
}

impl LearnConfig {
    pub fn validate(&self) -> Result<(), PlasticityError> {
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(PlasticityError::InvalidParameter(format!("eta must be positive, got {}", self.eta)));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(PlasticityError::InvalidParameter(format!("beta must be positive, got {}", self.beta)));
        }
        Ok(())
    }
}

/// Outer-product storage `W = (1/N) Σ_μ ξ^μ ξ^μᵀ`.
pub fn hebbian_weights(patterns: &PatternSet) -> Mat {
    let n = patterns.n();
    let mut w = Mat::zeros(n, n);
    for p in patterns.iter() {
        for i in 0..n {
            for j in 0..n {
                w[(i, j)] += p[i] * p[j];
            }
        }
    }
    w.scale(1.0 / n as f64)
}

/// One online Hebbian increment `η x xᵀ`.
pub fn hebbian_increment(x: &[f64], eta: f64) -> Mat {
    Mat::outer(x, x).scale(eta)
}

/// Runs `w ← w + η (y x − y² w)` with `y = wᵀx` for `cfg.steps` samples.
pub fn oja_train(
    sampler: &mut dyn FnMut() -> Vec<f64>,
    w0: &[f64],
    cfg: &LearnConfig,
) -> Result<Vec<f64>, PlasticityError> {
    if !(cfg.eta > 0.0 && cfg.eta.is_finite()) {
        return Err(PlasticityError::InvalidParameter(format!("eta must be positive, got {}", cfg.eta)));
    }
    if w0.iter().all(|&v| v == 0.0) {
        return Err(PlasticityError::ZeroInit);
    }
    let mut w = w0.to_vec();
    for step in 0..cfg.steps {
        let x = sampler();
        if x.len() != w.len() {
            return Err(PlasticityError::Dimension(format!("sample has length {}, weights have {}", x.len(), w.len())));
        }
        let y = dot(&w, &x);
        for (wi, xi) in w.iter_mut().zip(&x) {
            *wi += cfg.eta * (y * xi - y * y * *wi);
        }
        let norm = norm2(&w);
        if !(norm <= OJA_DIVERGENCE_NORM) {
            return Err(PlasticityError::OjaDiverged { step, norm });
        }
    }
    Ok(w)
}

/// Mean-field rate `d‖w‖²/dt = 2 wᵀCw (1 − ‖w‖²)` of Oja's rule.
pub fn oja_norm_rate(w: &[f64], covariance: &Mat) -> f64 {
    let q = dot(w, &covariance.matvec(w));
    2.0 * q * (1.0 - dot(w, w))
}

fn mean_outer(states: &[Vec<f64>], n: usize) -> Result<Mat, PlasticityError> {
    let mut m = Mat::zeros(n, n);
    for s in states {
        if s.len() != n {
            return Err(PlasticityError::Dimension(format!("state of length {} for {n}x{n} weights", s.len())));
        }
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] += s[i] * s[j];
            }
        }
    }
    Ok(m.scale(1.0 / states.len() as f64))
}

/// Contrastive Hebbian step `W + η(⟨xxᵀ⟩_data − ⟨xxᵀ⟩_model)`.
pub fn chl_update(
    w: &Mat,
    data_states: &[Vec<f64>],
    model_states: &[Vec<f64>],
    eta: f64,
) -> Result<Mat, PlasticityError> {
    if data_states.is_empty() {
        return Err(PlasticityError::EmptySamples("data"));
    }
    if model_states.is_empty() {
        return Err(PlasticityError::EmptySamples("model"));
    }
    if !w.is_square() {
        return Err(PlasticityError::Dimension("W must be square".into()));
    }
    let n = w.rows();
    let data = mean_outer(data_states, n)?;
    let model = mean_outer(model_states, n)?;
    Ok(w.add(&data.sub(&model).scale(eta)))
}

/// An energy `E(x; θ, u)` with gradients in state and parameters.
pub trait ParamEnergy {
    fn dim_x(&self) -> usize;
    fn dim_theta(&self) -> usize;
    fn energy(&self, x: &[f64], theta: &[f64], u: &[f64]) -> f64;
    fn grad_x(&self, x: &[f64], theta: &[f64], u: &[f64]) -> Vec<f64>;
    fn grad_theta(&self, x: &[f64], theta: &[f64], u: &[f64]) -> Vec<f64>;
}

/// Loss `L(H(x), y_t)` composed with the output map.
pub trait StateLoss {
    fn loss(&self, x: &[f64], target: &[f64]) -> f64;
    fn grad_x(&self, x: &[f64], target: &[f64]) -> Vec<f64>;
}

/// `H(x) = x[outputs]`, `L = ½‖H(x) − y_t‖²`.
#[derive(Debug, Clone, PartialEq)]
pub struct SquaredOutputLoss {
    pub outputs: Vec<usize>,
}

impl StateLoss for SquaredOutputLoss {
    fn loss(&self, x: &[f64], target: &[f64]) -> f64 {
        0.5 * self.outputs.iter().zip(target).map(|(&i, t)| (x[i] - t).powi(2)).sum::<f64>()
    }

    fn grad_x(&self, x: &[f64], target: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; x.len()];
        for (&i, t) in self.outputs.iter().zip(target) {
            g[i] += x[i] - t;
        }
        g
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EqPropConfig {
    pub beta: f64,
    /// Nudge with `±β` and take the centered difference (bias `O(β²)`).
    pub symmetric: bool,
    pub relax: IntegratorConfig,
    /// Starting state of the free phase; zeros when `None`.
    pub x_init: Option<Vec<f64>>,
}

impl EqPropConfig {
    pub fn new(beta: f64) -> Self {
        EqPropConfig {
            beta,
            symmetric: false,
            relax: IntegratorConfig::rk4(0.05, 2000.0).with_tol(1e-12),
            x_init: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EqPropEstimate {
    pub gradient: Vec<f64>,
    pub free_state: Vec<f64>,
    pub nudged_state: Vec<f64>,
    /// Equilibrium of the `−β` phase when the symmetric variant is used.
    pub negative_state: Option<Vec<f64>>,
    /// Whether the finite-difference Hessian at the free equilibrium is
    /// positive definite (the nondegeneracy hypothesis).
    pub free_hessian_pd: bool,
}

#[allow(clippy::too_many_arguments)]
fn relax(
    energy: &dyn ParamEnergy,
    loss: &dyn StateLoss,
    theta: &[f64],
    u: &[f64],
    target: &[f64],
    beta: f64,
    x0: &[f64],
    cfg: &IntegratorConfig,
    phase: &'static str,
) -> Result<Vec<f64>, PlasticityError> {
    let field = FnField::new(energy.dim_x(), |x: &[f64], _t: f64| {
        let mut g = energy.grad_x(x, theta, u);
        if beta != 0.0 {
            for (gi, li) in g.iter_mut().zip(loss.grad_x(x, target)) {
                *gi += beta * li;
            }
        }
        g.iter().map(|v| -v).collect()
    });
    find_equilibrium(&field, x0, cfg).map_err(|source| PlasticityError::Relaxation { phase, source })
}

/// Equilibrium-propagation estimate of `∇_θ J` with `J(θ) = L(x*(θ))`:
/// `(∇_θE(x^β) − ∇_θE(x⁰))/β`, with the nudged phase relaxing on
/// `E + βL` from the free equilibrium.
pub fn eqprop_gradient(
    energy: &dyn ParamEnergy,
    loss: &dyn StateLoss,
    theta: &[f64],
    u: &[f64],
    target: &[f64],
    cfg: &EqPropConfig,
) -> Result<EqPropEstimate, PlasticityError> {
    if !(cfg.beta > 0.0 && cfg.beta.is_finite()) {
        return Err(PlasticityError::InvalidParameter(format!("beta must be positive, got {}", cfg.beta)));
    }
    if theta.len() != energy.dim_theta() {
        return Err(PlasticityError::Dimension(format!(
            "theta has length {}, energy expects {}",
            theta.len(),
            energy.dim_theta()
        )));
    }
    let start = cfg.x_init.clone().unwrap_or_else(|| vec![0.0; energy.dim_x()]);
    let free = relax(energy, loss, theta, u, target, 0.0, &start, &cfg.relax, "free")?;
    let nudged = relax(energy, loss, theta, u, target, cfg.beta, &free, &cfg.relax, "nudged")?;
    let g_plus = energy.grad_theta(&nudged, theta, u);
    let (gradient, negative_state) = if cfg.symmetric {
        let neg = relax(energy, loss, theta, u, target, -cfg.beta, &free, &cfg.relax, "negative-nudged")?;
        let g_minus = energy.grad_theta(&neg, theta, u);
        let g = g_plus.iter().zip(&g_minus).map(|(p, m)| (p - m) / (2.0 * cfg.beta)).collect();
        (g, Some(neg))
    } else {
        let g0 = energy.grad_theta(&free, theta, u);
        let g = g_plus.iter().zip(&g0).map(|(p, z)| (p - z) / cfg.beta).collect();
        (g, None)
    };
    let hess = fd_hessian(|x| energy.energy(x, theta, u), &free, 1e-4)?;
    let free_hessian_pd = sym_eig(&hess.symmetric_part()).map(|e| e.min() > 0.0).unwrap_or(false);
    Ok(EqPropEstimate { gradient, free_state: free, nudged_state: nudged, negative_state, free_hessian_pd })
}

/// `E(x) = ½‖x‖² − ½xᵀWx − uᵀx` with `W` symmetric, zero diagonal, and
/// parameters `θ` = the strict upper triangle of `W` in row-major order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticEnergy {
    pub n: usize,
}

impl QuadraticEnergy {
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n).flat_map(move |i| ((i + 1)..self.n).map(move |j| (i, j)))
    }

    pub fn weights(&self, theta: &[f64]) -> Mat {
        let mut w = Mat::zeros(self.n, self.n);
        for ((i, j), &t) in self.pairs().zip(theta) {
            w[(i, j)] = t;
            w[(j, i)] = t;
        }
        w
    }

    pub fn theta_of(&self, w: &Mat) -> Vec<f64> {
        self.pairs().map(|(i, j)| w[(i, j)]).collect()
    }

    /// Free equilibrium `(I − W)⁻¹ u` by direct solve.
    pub fn equilibrium(&self, theta: &[f64], u: &[f64]) -> Result<Vec<f64>, MathError> {
        Mat::identity(self.n).sub(&self.weights(theta)).solve(u)
    }

    /// `J(θ) = L(x*(θ))` through the direct solve — the oracle objective.
    pub fn objective(&self, loss: &dyn StateLoss, theta: &[f64], u: &[f64], target: &[f64]) -> Result<f64, MathError> {
        Ok(loss.loss(&self.equilibrium(theta, u)?, target))
    }

    /// Random instance with `I − W` positive definite (smallest eigenvalue
    /// at least `margin`).
    pub fn random_theta(&self, margin: f64, rng: &mut SeededRng) -> Vec<f64> {
        let raw: Vec<f64> = self.pairs().map(|_| rng.normal()).collect();
        let w = self.weights(&raw);
        let lam = sym_eig(&w).map(|e| e.max()).unwrap_or(0.0).max(1e-12);
        let s = (1.0 - margin) / lam;
        let s = if s > 0.0 { s.min(1.0) } else { 0.0 };
        raw.iter().map(|t| t * s).collect()
    }
}

impl ParamEnergy for QuadraticEnergy {
    fn dim_x(&self) -> usize {
        self.n
    }

    fn dim_theta(&self) -> usize {
        self.n * (self.n - 1) / 2
    }

    fn energy(&self, x: &[f64], theta: &[f64], u: &[f64]) -> f64 {
        let w = self.weights(theta);
        0.5 * dot(x, x) - 0.5 * dot(x, &w.matvec(x)) - dot(u, x)
    }

    fn grad_x(&self, x: &[f64], theta: &[f64], u: &[f64]) -> Vec<f64> {
        let wx = self.weights(theta).matvec(x);
        (0..self.n).map(|i| x[i] - wx[i] - u[i]).collect()
    }

    fn grad_theta(&self, x: &[f64], _theta: &[f64], _u: &[f64]) -> Vec<f64> {
        self.pairs().map(|(i, j)| -x[i] * x[j]).collect()
    }
}

/// Weight updates from one EqProp run on the quadratic energy: the
/// gradient-descent step `−η·estimate` laid out as a matrix, and the
/// contrastive form `(η/β)(x^β x^βᵀ − x⁰x⁰ᵀ)` computed from the same two
/// equilibria (diagonal zeroed, as `W` has no self-coupling).
#[derive(Debug, Clone, PartialEq)]
pub struct ChlEquivalence {
    pub eqprop_dw: Mat,
    pub chl_dw: Mat,
    pub estimate: EqPropEstimate,
}

pub fn eqprop_chl_equivalence(
    energy: &QuadraticEnergy,
    loss: &dyn StateLoss,
    theta: &[f64],
    u: &[f64],
    target: &[f64],
    eta: f64,
    cfg: &EqPropConfig,
) -> Result<ChlEquivalence, PlasticityError> {
    if cfg.symmetric {
        return Err(PlasticityError::InvalidParameter("the contrastive form uses one-sided nudging".into()));
    }
    let est = eqprop_gradient(energy, loss, theta, u, target, cfg)?;
    let step: Vec<f64> = est.gradient.iter().map(|g| -eta * g).collect();
    let eqprop_dw = energy.weights(&step);
    let scale = eta / cfg.beta;
    let (xb, x0) = (&est.nudged_state, &est.free_state);
    let chl_dw =
        Mat::from_fn(energy.n, energy.n, |i, j| if i == j { 0.0 } else { scale * (xb[i] * xb[j] - x0[i] * x0[j]) });
    Ok(ChlEquivalence { eqprop_dw, chl_dw, estimate: est })
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let cov: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let var: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    cov / var
}

/// Writes learned weights in the Hopfield network CSV block format
/// (unit `τ` and dissipation, no input channel).
pub fn weights_to_hopfield_csv(w: &Mat, activation: crate::hopfield::Activation) -> String {
    let n = w.rows();
    crate::hopfield::HopfieldNet::new(1.0, vec![1.0; n], w.clone(), Mat::zeros(n, 1), activation)
        .expect("square weights with unit dissipation are valid")
        .to_csv()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mathcore::fd_gradient;
    use proptest::prelude::*;

    /// `E = ½(x − θ)²`, scalar state and parameter.
    struct Shifted;

    impl ParamEnergy for Shifted {
        fn dim_x(&self) -> usize {
            1
        }
        fn dim_theta(&self) -> usize {
            1
        }
        fn energy(&self, x: &[f64], th: &[f64], _u: &[f64]) -> f64 {
            0.5 * (x[0] - th[0]).powi(2)
        }
        fn grad_x(&self, x: &[f64], th: &[f64], _u: &[f64]) -> Vec<f64> {
            vec![x[0] - th[0]]
        }
        fn grad_theta(&self, x: &[f64], th: &[f64], _u: &[f64]) -> Vec<f64> {
            vec![th[0] - x[0]]
        }
    }

    #[test]
    fn pattern_set_validation_and_io() {
        assert_eq!(PatternSet::new(vec![]), Err(PlasticityError::NoPatterns));
        assert!(matches!(PatternSet::new(vec![vec![1.0, 0.0]]), Err(PlasticityError::NotSpin { .. })));
        assert!(PatternSet::new(vec![vec![1.0], vec![1.0, 1.0]]).is_err());
        let mut rng = SeededRng::new(1);
        let p = PatternSet::random(7, 3, &mut rng).unwrap();
        assert_eq!(PatternSet::from_text(&p.to_text()).unwrap(), p);
        assert!(matches!(PatternSet::from_text("+-x\n"), Err(PlasticityError::Parse { line: 1, .. })));
    }

    #[test]
    fn hebbian_examples() {
        let w = hebbian_weights(&PatternSet::new(vec![vec![1.0, 1.0]]).unwrap());
        assert_eq!(w, Mat::from_fn(2, 2, |_, _| 0.5));
        let p = PatternSet::new(vec![vec![1.0, 1.0, 1.0, 1.0], vec![1.0, -1.0, 1.0, -1.0]]).unwrap();
        let w = hebbian_weights(&p);
        assert_eq!(w[(0, 1)], 0.0);
        assert_eq!(w[(0, 2)], 0.5);
        assert!(w.is_symmetric(0.0));
        assert!(w.diag().iter().all(|&d| d == 2.0 / 4.0));
        assert!(PatternSet::random(4, 0, &mut SeededRng::new(0)).is_err());
    }

    #[test]
    fn online_hebbian_mean_matches_batch() {
        let mut rng = SeededRng::new(5);
        let p = PatternSet::random(6, 3, &mut rng).unwrap();
        let eta = 0.1;
        let draws = 10_000;
        let mut acc = Mat::zeros(6, 6);
        for _ in 0..draws {
            acc = acc.add(&hebbian_increment(p.get(rng.below(p.k())), eta));
        }
        let mean = acc.scale(1.0 / draws as f64);
        let expect = hebbian_weights(&p).scale(eta * p.n() as f64 / p.k() as f64);
        // Entries are η·(±1) averages; one standard error is ≤ 1% of η.
        assert!(mean.max_abs_diff(&expect) < 4.0 * 0.01 * eta);
    }

    #[test]
    fn oja_on_degenerate_line() {
        let mut k = 0usize;
        let s2 = 2f64.sqrt();
        let mut sampler = || {
            k += 1;
            if k.is_multiple_of(2) {
                vec![s2, 0.0]
            } else {
                vec![-s2, 0.0]
            }
        };
        let cfg = LearnConfig { eta: 0.01, steps: 100_000, beta: 1.0 };
        let w = oja_train(&mut sampler, &[0.3, 0.8], &cfg).unwrap();
        assert!(w[0].abs() / norm2(&w) > 0.99);
        assert!((norm2(&w) - 1.0).abs() < 0.02);
    }

    #[test]
    fn oja_on_gaussian_data() {
        let mut rng = SeededRng::new(8);
        let mut data_rng = SeededRng::new(9);
        let mut sampler = || vec![2f64.sqrt() * data_rng.normal(), data_rng.normal()];
        let cfg = LearnConfig { eta: 0.002, steps: 100_000, beta: 1.0 };
        let a = rng.uniform_in(0.0, std::f64::consts::TAU);
        let w = oja_train(&mut sampler, &[a.cos(), a.sin()], &cfg).unwrap();
        assert!(w[0].abs() / norm2(&w) > 0.99, "{w:?}");
    }

    #[test]
    fn oja_edge_cases() {
        let cfg = LearnConfig { eta: 0.1, steps: 100, beta: 1.0 };
        let w = oja_train(&mut || vec![0.0, 0.0], &[0.3, 0.4], &cfg).unwrap();
        assert_eq!(w, vec![0.3, 0.4]);
        assert_eq!(oja_train(&mut || vec![1.0, 0.0], &[0.0, 0.0], &cfg), Err(PlasticityError::ZeroInit));
        let big = LearnConfig { eta: 5.0, steps: 100, beta: 1.0 };
        let err = oja_train(&mut || vec![10.0, 10.0], &[1.0, 1.0], &big).unwrap_err();
        assert!(matches!(err, PlasticityError::OjaDiverged { .. }));
        assert!(err.to_string().contains("reduce the learning rate"));
    }

    #[test]
    fn oja_sphere_is_invariant_and_attracting() {
        let c = Mat::from_diag(&[2.0, 1.0, 0.5]);
        let mut rng = SeededRng::new(4);
        for _ in 0..20 {
            let mut w = rng.normal_vec(3);
            let n = norm2(&w);
            w.iter_mut().for_each(|v| *v /= n);
            assert!(oja_norm_rate(&w, &c).abs() < 1e-12);
        }
        for &r in &[0.5, 2.0] {
            let mut data_rng = SeededRng::new(10);
            let mut sampler =
                || vec![2f64.sqrt() * data_rng.normal(), data_rng.normal(), 0.5f64.sqrt() * data_rng.normal()];
            let cfg = LearnConfig { eta: 0.002, steps: 50_000, beta: 1.0 };
            let w = oja_train(&mut sampler, &[r, 0.0, 0.0], &cfg).unwrap();
            assert!((norm2(&w) - 1.0).abs() < 0.05);
        }
    }

    #[test]
    fn chl_examples() {
        let w = Mat::zeros(2, 2);
        let states = vec![vec![1.0, -1.0], vec![0.5, 2.0]];
        assert_eq!(chl_update(&w, &states, &states, 0.3).unwrap(), w);
        let up = chl_update(&w, &[vec![1.0, -1.0]], &[vec![1.0, 1.0]], 0.1).unwrap();
        assert!((up[(0, 1)] + 0.2).abs() < 1e-15);
        assert_eq!(chl_update(&w, &states, &[], 0.1), Err(PlasticityError::EmptySamples("model")));
        assert!(chl_update(&w, &[vec![1.0]], &states, 0.1).is_err());
    }

    #[test]
    fn eqprop_scalar_closed_form() {
        let loss = SquaredOutputLoss { outputs: vec![0] };
        let est = eqprop_gradient(&Shifted, &loss, &[2.0], &[], &[1.0], &EqPropConfig::new(0.01)).unwrap();
        let expect = (2.0 - 2.01 / 1.01) / 0.01;
        assert!((est.gradient[0] - expect).abs() < 1e-6);
        assert!((est.gradient[0] - 0.9901).abs() < 1e-3);
        assert!(est.free_hessian_pd);

        let zero = eqprop_gradient(&Shifted, &loss, &[2.0], &[], &[2.0], &EqPropConfig::new(0.01)).unwrap();
        assert!(zero.gradient[0].abs() < 1e-9);
    }

    #[test]
    fn eqprop_bias_shrinks_linearly() {
        let loss = SquaredOutputLoss { outputs: vec![0] };
        let oracle = 1.0;
        let betas = [1e-1, 1e-2, 1e-3];
        let errs: Vec<f64> = betas
            .iter()
            .map(|&b| {
                let g = eqprop_gradient(&Shifted, &loss, &[2.0], &[], &[1.0], &EqPropConfig::new(b)).unwrap();
                (g.gradient[0] - oracle).abs()
            })
            .collect();
        let slope = loglog_slope(&betas, &errs);
        assert!((slope - 1.0).abs() < 0.2, "slope {slope}");
    }

    #[test]
    fn symmetric_nudging_reduces_bias() {
        let q = QuadraticEnergy { n: 4 };
        let mut rng = SeededRng::new(3);
        let theta = q.random_theta(0.4, &mut rng);
        let u = rng.normal_vec(4);
        let loss = SquaredOutputLoss { outputs: vec![2, 3] };
        let target = vec![0.5, -0.5];
        let oracle = fd_gradient(|t| q.objective(&loss, t, &u, &target).unwrap(), &theta, 1e-5).unwrap();
        let err = |symmetric| {
            let cfg = EqPropConfig { symmetric, ..EqPropConfig::new(1e-2) };
            let g = eqprop_gradient(&q, &loss, &theta, &u, &target, &cfg).unwrap().gradient;
            norm2(&g.iter().zip(&oracle).map(|(a, b)| a - b).collect::<Vec<_>>())
        };
        assert!(err(true) < 0.1 * err(false));
    }

    #[test]
    fn chl_form_equals_eqprop_update() {
        let q = QuadraticEnergy { n: 3 };
        let mut rng = SeededRng::new(11);
        let theta = q.random_theta(0.3, &mut rng);
        let u = rng.normal_vec(3);
        let loss = SquaredOutputLoss { outputs: vec![2] };
        let target = vec![0.7];
        let eta = 0.05;
        let cfg = EqPropConfig::new(1e-3);
        let r = eqprop_chl_equivalence(&q, &loss, &theta, &u, &target, eta, &cfg).unwrap();
        assert!(r.eqprop_dw.max_abs_diff(&r.chl_dw) < 1e-10);

        let oracle = fd_gradient(|t| q.objective(&loss, t, &u, &target).unwrap(), &theta, 1e-5).unwrap();
        let gd = q.weights(&oracle.iter().map(|g| -eta * g).collect::<Vec<_>>());
        assert!(r.chl_dw.max_abs_diff(&gd) < 10.0 * cfg.beta * eta.max(gd.frobenius_norm()));

        // Doubling β halves the η/β factor applied to the correlation shift.
        let cfg2 = EqPropConfig::new(2e-3);
        let r2 = eqprop_chl_equivalence(&q, &loss, &theta, &u, &target, eta, &cfg2).unwrap();
        let (a, b) = (&r2.estimate.nudged_state, &r2.estimate.free_state);
        let shift = a[0] * a[1] - b[0] * b[1];
        assert!((r2.chl_dw[(0, 1)] - 0.5 * (eta / 1e-3) * shift).abs() < 1e-12);
    }

    #[test]
    fn eqprop_reports_relaxation_phase() {
        // An unstable energy never relaxes.
        struct Saddle;
        impl ParamEnergy for Saddle {
            fn dim_x(&self) -> usize {
                1
            }
            fn dim_theta(&self) -> usize {
                1
            }
            fn energy(&self, x: &[f64], _t: &[f64], _u: &[f64]) -> f64 {
                -0.5 * x[0] * x[0]
            }
            fn grad_x(&self, x: &[f64], _t: &[f64], _u: &[f64]) -> Vec<f64> {
                vec![-x[0]]
            }
            fn grad_theta(&self, _x: &[f64], _t: &[f64], _u: &[f64]) -> Vec<f64> {
                vec![0.0]
            }
        }
        let cfg = EqPropConfig { x_init: Some(vec![0.1]), ..EqPropConfig::new(0.1) };
        let err =
            eqprop_gradient(&Saddle, &SquaredOutputLoss { outputs: vec![0] }, &[0.0], &[], &[0.0], &cfg).unwrap_err();
        assert!(matches!(err, PlasticityError::Relaxation { phase: "free", .. }));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn hebbian_is_symmetric_with_constant_diagonal(seed in 0u64..10_000, n in 1usize..12, k in 1usize..6) {
            let p = PatternSet::random(n, k, &mut SeededRng::new(seed)).unwrap();
            let w = hebbian_weights(&p);
            prop_assert!(w.is_symmetric(0.0));
            for d in w.diag() {
                prop_assert!((d - k as f64 / n as f64).abs() < 1e-12);
            }
        }
    }
}
