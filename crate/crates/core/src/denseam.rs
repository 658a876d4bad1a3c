//! Dense associative memories.
//!
//! Energy `E(σ) = −Q[Σ_μ F(S(ξ^μ, σ))]` over binary states, asynchronous
//! single-spin retrieval, the signal-to-noise capacity law and a Monte
//! Carlo bit-error estimator, plus the two-population continuous-time model.

use thiserror::Error;

use crate::hopfield::Activation;
use crate::mathcore::{double_factorial, sign, Mat, MathError, SeededRng};
use crate::plasticity::{PatternSet, PlasticityError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DenseAmError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("log outer function needs a positive argument, got {0}")]
    NonPositiveLogArgument(f64),
    #[error("state entry {index} is {value}; spins must be ±1")]
    NotSpin { index: usize, value: f64 },
    #[error(transparent)]
    Patterns(#[from] PlasticityError),
    #[error(transparent)]
    Math(#[from] MathError),
}

/// Separation function `F` and its derivative `Φ = F'`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Separation {
    /// `F(x) = xⁿ/n`, `n ≥ 2`.
    Power(u32),
    /// `F(x) = eˣ`.
    Exp,
}

impl Separation {
    pub fn validate(self) -> Result<(), DenseAmError> {
        match self {
            Separation::Power(n) if n < 2 => {
                Err(DenseAmError::InvalidParameter(format!("power separation needs n >= 2, got {n}")))
            }
            _ => Ok(()),
        }
    }

    pub fn f(self, x: f64) -> f64 {
        match self {
            Separation::Power(n) => x.powi(n as i32) / n as f64,
            Separation::Exp => x.exp(),
        }
    }

    pub fn phi(self, x: f64) -> f64 {
        match self {
            Separation::Power(n) => x.powi(n as i32 - 1),
            Separation::Exp => x.exp(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Similarity {
    /// `ξᵀσ`.
    Dot,
    /// `−‖ξ − σ‖²`.
    NegSqEuclidean,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outer {
    Identity,
    Log,
}

/// How a single spin is updated during a sweep of the basic (`Dot`,
/// `Identity`) energy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UpdateRule {
    /// `σ_i ← sign Σ_μ [F(a_μ + ξ_i^μ) − F(a_μ − ξ_i^μ)]` with
    /// `a_μ = Σ_{j≠i} ξ_j^μ σ_j`: the exact energy comparison of the two
    /// values of `σ_i`, hence never increases the energy.
    EnergyDifference,
    /// `σ_i ← sign Σ_μ ξ_i^μ Φ(a_μ)`. Coincides with `EnergyDifference` for
    /// `n = 2` and for `Exp`; for `n ≥ 3` it can raise the energy.
    Simplified,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseAmModel {
    patterns: PatternSet,
    separation: Separation,
    similarity: Similarity,
    outer: Outer,
    rule: UpdateRule,
}

/// Visiting order within a sweep.
pub enum SweepOrder<'a> {
    Cyclic,
    /// A fresh random permutation for every sweep.
    RandomPermutation(&'a mut SeededRng),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Retrieval {
    pub state: Vec<f64>,
    pub sweeps: usize,
    /// A zero-flip sweep was reached within the sweep budget.
    pub converged: bool,
}

fn check_spins(sigma: &[f64]) -> Result<(), DenseAmError> {
    match sigma.iter().position(|&v| v != 1.0 && v != -1.0) {
        Some(index) => Err(DenseAmError::NotSpin { index, value: sigma[index] }),
        None => Ok(()),
    }
}

fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

impl DenseAmModel {
    /// The basic form: `Dot` similarity, `Identity` outer function.
    pub fn basic(patterns: PatternSet, separation: Separation) -> Result<Self, DenseAmError> {
        DenseAmModel::new(patterns, separation, Similarity::Dot, Outer::Identity)
    }

    pub fn new(
        patterns: PatternSet,
        separation: Separation,
        similarity: Similarity,
        outer: Outer,
    ) -> Result<Self, DenseAmError> {
        separation.validate()?;
        Ok(DenseAmModel { patterns, separation, similarity, outer, rule: UpdateRule::EnergyDifference })
    }

    pub fn with_rule(mut self, rule: UpdateRule) -> Self {
        self.rule = rule;
        self
    }

    pub fn patterns(&self) -> &PatternSet {
        &self.patterns
    }

    pub fn separation(&self) -> Separation {
        self.separation
    }

    pub fn n(&self) -> usize {
        self.patterns.n()
    }

    fn is_basic(&self) -> bool {
        self.similarity == Similarity::Dot && self.outer == Outer::Identity
    }

    fn check(&self, sigma: &[f64]) -> Result<(), DenseAmError> {
        if sigma.len() != self.n() {
            return Err(DenseAmError::Dimension(format!(
                "state has length {}, patterns have {}",
                sigma.len(),
                self.n()
            )));
        }
        check_spins(sigma)
    }

    fn similarities(&self, sigma: &[f64]) -> Vec<f64> {
        self.patterns
            .iter()
            .map(|xi| match self.similarity {
                Similarity::Dot => xi.iter().zip(sigma).map(|(a, b)| a * b).sum(),
                Similarity::NegSqEuclidean => -xi.iter().zip(sigma).map(|(a, b)| (a - b).powi(2)).sum::<f64>(),
            })
            .collect()
    }

    /// `−Q[Σ_μ F(S(ξ^μ, σ))]`.
    pub fn energy(&self, sigma: &[f64]) -> Result<f64, DenseAmError> {
        self.check(sigma)?;
        self.energy_unchecked(sigma)
    }

    fn energy_unchecked(&self, sigma: &[f64]) -> Result<f64, DenseAmError> {
        let s = self.similarities(sigma);
        match (self.outer, self.separation) {
            (Outer::Log, Separation::Exp) => Ok(-log_sum_exp(&s)),
            (Outer::Log, sep) => {
                let total: f64 = s.iter().map(|&v| sep.f(v)).sum();
                if total > 0.0 {
                    Ok(-total.ln())
                } else {
                    Err(DenseAmError::NonPositiveLogArgument(total))
                }
            }
            (Outer::Identity, sep) => Ok(-s.iter().map(|&v| sep.f(v)).sum::<f64>()),
        }
    }

    /// One asynchronous pass; returns the number of spins that changed.
    pub fn update_sweep(&self, sigma: &mut [f64], order: &mut SweepOrder<'_>) -> Result<usize, DenseAmError> {
        self.check(sigma)?;
        let visit: Vec<usize> = match order {
            SweepOrder::Cyclic => (0..self.n()).collect(),
            SweepOrder::RandomPermutation(rng) => rng.permutation(self.n()),
        };
        if self.is_basic() {
            Ok(self.sweep_basic(sigma, &visit))
        } else {
            self.sweep_greedy(sigma, &visit)
        }
    }

    fn sweep_basic(&self, sigma: &mut [f64], visit: &[usize]) -> usize {
        let xi = &self.patterns;
        let mut overlap: Vec<f64> = xi.iter().map(|p| p.iter().zip(sigma.iter()).map(|(a, b)| a * b).sum()).collect();
        let mut a = vec![0.0; xi.k()];
        let mut flips = 0;
        for &i in visit {
            for (mu, p) in xi.iter().enumerate() {
                a[mu] = overlap[mu] - p[i] * sigma[i];
            }
            let drive = local_drive(self.separation, self.rule, xi, i, &a);
            let new = sign(drive);
            if new != sigma[i] {
                for (mu, p) in xi.iter().enumerate() {
                    overlap[mu] += p[i] * (new - sigma[i]);
                }
                sigma[i] = new;
                flips += 1;
            }
        }
        flips
    }

    fn sweep_greedy(&self, sigma: &mut [f64], visit: &[usize]) -> Result<usize, DenseAmError> {
        let mut e = self.energy_unchecked(sigma)?;
        let mut flips = 0;
        for &i in visit {
            sigma[i] = -sigma[i];
            match self.energy_unchecked(sigma) {
                Ok(e_new) if e_new < e => {
                    e = e_new;
                    flips += 1;
                }
                _ => sigma[i] = -sigma[i],
            }
        }
        Ok(flips)
    }

    /// Sweeps until a sweep changes nothing or `max_sweeps` is used up.
    pub fn retrieve(
        &self,
        sigma0: &[f64],
        max_sweeps: usize,
        order: &mut SweepOrder<'_>,
    ) -> Result<Retrieval, DenseAmError> {
        if max_sweeps == 0 {
            return Err(DenseAmError::InvalidParameter("max_sweeps must be at least 1".into()));
        }
        let mut state = sigma0.to_vec();
        for sweep in 1..=max_sweeps {
            if self.update_sweep(&mut state, order)? == 0 {
                return Ok(Retrieval { state, sweeps: sweep, converged: true });
            }
        }
        Ok(Retrieval { state, sweeps: max_sweeps, converged: false })
    }

    /// Index of a stored pattern equal to `sigma`, if any.
    pub fn matching_pattern(&self, sigma: &[f64]) -> Option<usize> {
        self.patterns.iter().position(|p| p == sigma)
    }
}

/// The value whose sign decides spin `i` given the overlaps `a_μ` that
/// exclude spin `i`. `Exp` is evaluated relative to `max_μ a_μ`.
fn local_drive(sep: Separation, rule: UpdateRule, xi: &PatternSet, i: usize, a: &[f64]) -> f64 {
    match sep {
        Separation::Exp => {
            let m = a.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            xi.iter().zip(a).map(|(p, &am)| p[i] * (am - m).exp()).sum()
        }
        Separation::Power(_) => match rule {
            UpdateRule::Simplified => xi.iter().zip(a).map(|(p, &am)| p[i] * sep.phi(am)).sum(),
            UpdateRule::EnergyDifference => xi.iter().zip(a).map(|(p, &am)| sep.f(am + p[i]) - sep.f(am - p[i])).sum(),
        },
    }
}

/// `K_max = N^(n−1) / (α² (2n−3)!!)`, not floored.
pub fn capacity_bound(n_neurons: usize, n: u32, alpha: f64) -> Result<f64, DenseAmError> {
    if n < 2 {
        return Err(DenseAmError::InvalidParameter(format!("n must be >= 2, got {n}")));
    }
    if !(alpha > 0.0) {
        return Err(DenseAmError::InvalidParameter(format!("alpha must be positive, got {alpha}")));
    }
    let df = double_factorial(2 * n as i64 - 3)? as f64;
    Ok((n_neurons as f64).powi(n as i32 - 1) / (alpha * alpha * df))
}

pub const MIN_BIT_ERROR_TRIALS: usize = 100;

/// Bit flips among the `N` one-step updates from `ξ¹` for one random
/// pattern set, using `σ_i ← sign Σ_μ ξ_i^μ Φ(Σ_{j≠i} ξ_j^μ ξ_j^1)`.
pub fn bit_error_trial(n: usize, k: usize, sep: Separation, rng: &mut SeededRng) -> usize {
    let patterns: Vec<Vec<f64>> = (0..k).map(|_| rng.spins(n)).collect();
    let probe = &patterns[0];
    let overlap: Vec<f64> = patterns.iter().map(|p| p.iter().zip(probe).map(|(a, b)| a * b).sum()).collect();
    let mut a = vec![0.0; k];
    let mut flips = 0;
    for i in 0..n {
        for (mu, p) in patterns.iter().enumerate() {
            a[mu] = overlap[mu] - p[i] * probe[i];
        }
        let drive: f64 = match sep {
            Separation::Exp => {
                let m = a.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                patterns.iter().zip(&a).map(|(p, &am)| p[i] * (am - m).exp()).sum()
            }
            Separation::Power(_) => patterns.iter().zip(&a).map(|(p, &am)| p[i] * sep.phi(am)).sum(),
        };
        if sign(drive) != probe[i] {
            flips += 1;
        }
    }
    flips
}

/// Monte Carlo estimate of the one-step bit-error probability at `ξ¹`,
/// trial `t` seeded with `seed ⊕ t`.
pub fn estimate_bit_error(n: usize, k: usize, sep: Separation, trials: usize, seed: u64) -> Result<f64, DenseAmError> {
    sep.validate()?;
    if trials < MIN_BIT_ERROR_TRIALS {
        return Err(DenseAmError::InvalidParameter(format!(
            "need at least {MIN_BIT_ERROR_TRIALS} trials, got {trials}"
        )));
    }
    if k == 0 || n == 0 {
        return Err(DenseAmError::InvalidParameter("N and K must be positive".into()));
    }
    let flips: usize = (0..trials).map(|t| bit_error_trial(n, k, sep, &mut SeededRng::for_trial(seed, t as u64))).sum();
    Ok(flips as f64 / (trials * n) as f64)
}

/// Two-population dynamics `τ_v v̇ = ξᵀf(h) − v`, `τ_h ḣ = ξ g(v) − h`
/// with `ξ` of shape `N_h × N_v`.
pub fn ct_denseam_field(
    xi: &Mat,
    f: Activation,
    g: Activation,
    tau_v: f64,
    tau_h: f64,
    v: &[f64],
    h: &[f64],
) -> Result<(Vec<f64>, Vec<f64>), DenseAmError> {
    if !(tau_v > 0.0 && tau_h > 0.0) {
        return Err(DenseAmError::InvalidParameter("time constants must be positive".into()));
    }
    if v.len() != xi.cols() || h.len() != xi.rows() {
        return Err(DenseAmError::Dimension(format!(
            "ξ is {}x{}, got |v| = {}, |h| = {}",
            xi.rows(),
            xi.cols(),
            v.len(),
            h.len()
        )));
    }
    let drive_v = xi.transpose().matvec(&f.apply(h));
    let drive_h = xi.matvec(&g.apply(v));
    let dv = drive_v.iter().zip(v).map(|(d, x)| (d - x) / tau_v).collect();
    let dh = drive_h.iter().zip(h).map(|(d, x)| (d - x) / tau_h).collect();
    Ok((dv, dh))
}
