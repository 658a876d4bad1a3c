//! Fixed-step integrators for deterministic and Langevin-type flows.
//!
//! Convergence is judged on the norm of the derivative, never on state
//! displacement, so a limit cycle shows up as non-convergence.

use std::fmt::Write as _;

use thiserror::Error;

use crate::mathcore::tolerances::{DEFAULT_DT, DEFAULT_T_MAX, DIVERGENCE_BOUND, EQUILIBRIUM_TOL};
use crate::mathcore::{all_finite, norm2, norm_inf, SeededRng};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FlowError {
    #[error("state diverged at t = {time}")]
    Diverged { time: f64 },
    #[error("no equilibrium within t_max (final residual {residual:.3e})")]
    NotConverged { residual: f64, state: Vec<f64> },
    #[error("dimension mismatch: field has {expected}, state has {got}")]
    Dimension { expected: usize, got: usize },
    #[error("invalid integrator config: {0}")]
    Config(String),
}

/// Right-hand side `ẋ = f(x, t)`.
pub trait VectorField {
    fn dim(&self) -> usize;
    fn eval(&self, x: &[f64], t: f64) -> Vec<f64>;
}

/// Wraps a closure as a [`VectorField`].
pub struct FnField<F> {
    dim: usize,
    f: F,
}

impl<F> FnField<F>
where
    F: Fn(&[f64], f64) -> Vec<f64>,
{
    pub fn new(dim: usize, f: F) -> Self {
        FnField { dim, f }
    }
}

impl<F> VectorField for FnField<F>
where
    F: Fn(&[f64], f64) -> Vec<f64>,
{
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval(&self, x: &[f64], t: f64) -> Vec<f64> {
        (self.f)(x, t)
    }
}

/// Autonomous field from a closure of the state only.
pub fn autonomous<F>(dim: usize, f: F) -> FnField<impl Fn(&[f64], f64) -> Vec<f64>>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    FnField::new(dim, move |x: &[f64], _t: f64| f(x))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    ExplicitEuler,
    Rk4,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntegratorConfig {
    pub method: Method,
    pub dt: f64,
    pub t_max: f64,
    pub equilibrium_tol: f64,
    pub record_stride: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            method: Method::Rk4,
            dt: DEFAULT_DT,
            t_max: DEFAULT_T_MAX,
            equilibrium_tol: EQUILIBRIUM_TOL,
            record_stride: 1,
        }
    }
}

impl IntegratorConfig {
    pub fn rk4(dt: f64, t_max: f64) -> Self {
        IntegratorConfig { method: Method::Rk4, dt, t_max, ..Default::default() }
    }

    pub fn euler(dt: f64, t_max: f64) -> Self {
        IntegratorConfig { method: Method::ExplicitEuler, dt, t_max, ..Default::default() }
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.equilibrium_tol = tol;
        self
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.record_stride = stride;
        self
    }

    pub fn validate(&self) -> Result<(), FlowError> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(FlowError::Config(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_max > self.dt && self.t_max.is_finite()) {
            return Err(FlowError::Config(format!("t_max ({}) must exceed dt ({})", self.t_max, self.dt)));
        }
        if !(self.equilibrium_tol > 0.0) {
            return Err(FlowError::Config("equilibrium_tol must be positive".into()));
        }
        if self.record_stride == 0 {
            return Err(FlowError::Config("record_stride must be at least 1".into()));
        }
        Ok(())
    }

    fn n_steps(&self) -> usize {
        (self.t_max / self.dt).round() as usize
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub energies: Option<Vec<f64>>,
    pub converged: bool,
    pub final_residual: f64,
}

impl TrajectoryRecord {
    pub fn final_state(&self) -> &[f64] {
        self.states.last().expect("trajectory has at least the initial state")
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().expect("trajectory has at least the initial time")
    }

    /// Largest increase between consecutive recorded energies (0 if none).
    pub fn max_energy_increase(&self) -> Option<f64> {
        let e = self.energies.as_ref()?;
        Some(e.windows(2).map(|w| w[1] - w[0]).fold(0.0_f64, f64::max))
    }

    /// CSV with header `t,x0..x{N-1}[,energy]`.
    pub fn to_csv(&self) -> String {
        let n = self.states.first().map_or(0, Vec::len);
        let mut out = String::from("t");
        for i in 0..n {
            let _ = write!(out, ",x{i}");
        }
        if self.energies.is_some() {
            out.push_str(",energy");
        }
        out.push('\n');
        for (k, (t, x)) in self.times.iter().zip(&self.states).enumerate() {
            let _ = write!(out, "{t}");
            for v in x {
                let _ = write!(out, ",{v}");
            }
            if let Some(e) = &self.energies {
                let _ = write!(out, ",{}", e[k]);
            }
            out.push('\n');
        }
        out
    }
}

struct Recorder<'a> {
    stride: usize,
    energy: Option<&'a dyn Fn(&[f64]) -> f64>,
    rec: TrajectoryRecord,
}

impl<'a> Recorder<'a> {
    fn new(stride: usize, energy: Option<&'a dyn Fn(&[f64]) -> f64>) -> Self {
        Recorder {
            stride,
            energy,
            rec: TrajectoryRecord {
                times: Vec::new(),
                states: Vec::new(),
                energies: energy.map(|_| Vec::new()),
                converged: false,
                final_residual: f64::NAN,
            },
        }
    }

    fn push(&mut self, t: f64, x: &[f64]) {
        if self.rec.times.last() == Some(&t) {
            return;
        }
        self.rec.times.push(t);
        self.rec.states.push(x.to_vec());
        if let (Some(f), Some(e)) = (self.energy, self.rec.energies.as_mut()) {
            e.push(f(x));
        }
    }

    fn maybe_push(&mut self, step: usize, t: f64, x: &[f64]) {
        if step.is_multiple_of(self.stride) {
            self.push(t, x);
        }
    }
}

fn check_dim(field: &dyn VectorField, x: &[f64]) -> Result<(), FlowError> {
    if field.dim() != x.len() {
        return Err(FlowError::Dimension { expected: field.dim(), got: x.len() });
    }
    Ok(())
}

fn guard(x: &[f64], t: f64) -> Result<(), FlowError> {
    if !all_finite(x) || norm_inf(x) > DIVERGENCE_BOUND {
        return Err(FlowError::Diverged { time: t });
    }
    Ok(())
}

fn axpy(x: &[f64], a: f64, d: &[f64]) -> Vec<f64> {
    x.iter().zip(d).map(|(xi, di)| xi + a * di).collect()
}

/// One step of the chosen scheme. `k1` is the field already evaluated at `x`.
fn step(field: &dyn VectorField, method: Method, x: &[f64], t: f64, dt: f64, k1: &[f64]) -> Vec<f64> {
    match method {
        Method::ExplicitEuler => axpy(x, dt, k1),
        Method::Rk4 => {
            let k2 = field.eval(&axpy(x, 0.5 * dt, k1), t + 0.5 * dt);
            let k3 = field.eval(&axpy(x, 0.5 * dt, &k2), t + 0.5 * dt);
            let k4 = field.eval(&axpy(x, dt, &k3), t + dt);
            x.iter().enumerate().map(|(i, xi)| xi + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])).collect()
        }
    }
}

/// Integrates `ẋ = field(x, t)` from `x0`, stopping early once the
/// derivative norm falls below the equilibrium tolerance.
pub fn integrate_ode(
    field: &dyn VectorField,
    x0: &[f64],
    cfg: &IntegratorConfig,
    energy: Option<&dyn Fn(&[f64]) -> f64>,
) -> Result<TrajectoryRecord, FlowError> {
    cfg.validate()?;
    check_dim(field, x0)?;
    guard(x0, 0.0)?;
    let mut rec = Recorder::new(cfg.record_stride, energy);
    let mut x = x0.to_vec();
    let mut t = 0.0;
    rec.push(t, &x);
    let n_steps = cfg.n_steps();
    for k in 0..=n_steps {
        let fx = field.eval(&x, t);
        if !all_finite(&fx) {
            return Err(FlowError::Diverged { time: t });
        }
        let residual = norm2(&fx);
        if residual < cfg.equilibrium_tol || k == n_steps {
            rec.push(t, &x);
            rec.rec.converged = residual < cfg.equilibrium_tol;
            rec.rec.final_residual = residual;
            return Ok(rec.rec);
        }
        x = step(field, cfg.method, &x, t, cfg.dt, &fx);
        t = (k + 1) as f64 * cfg.dt;
        guard(&x, t)?;
        rec.maybe_push(k + 1, t, &x);
    }
    unreachable!("loop returns at k == n_steps")
}

/// Integrates to `t_max` and returns the state once the derivative norm
/// drops below tolerance.
pub fn find_equilibrium(field: &dyn VectorField, x0: &[f64], cfg: &IntegratorConfig) -> Result<Vec<f64>, FlowError> {
    let sparse = IntegratorConfig { record_stride: usize::MAX, ..cfg.clone() };
    let rec = integrate_ode(field, x0, &sparse, None)?;
    if rec.converged {
        Ok(rec.final_state().to_vec())
    } else {
        Err(FlowError::NotConverged { residual: rec.final_residual, state: rec.final_state().to_vec() })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SdeConfig {
    pub temperature: f64,
    pub dt: f64,
    pub t_max: f64,
    pub record_stride: usize,
}

/// Euler–Maruyama for `dx = drift dt + √(2T) dW`.
///
/// With `T = 0` no normals are drawn and the update is exactly the explicit
/// Euler step, so the result matches [`integrate_ode`] bit for bit (without
/// the early equilibrium exit).
pub fn integrate_sde(
    drift: &dyn VectorField,
    x0: &[f64],
    cfg: &SdeConfig,
    rng: &mut SeededRng,
    energy: Option<&dyn Fn(&[f64]) -> f64>,
) -> Result<TrajectoryRecord, FlowError> {
    if !(cfg.temperature >= 0.0) || !cfg.temperature.is_finite() {
        return Err(FlowError::Config(format!("temperature must be nonnegative, got {}", cfg.temperature)));
    }
    if !(cfg.dt > 0.0 && cfg.dt.is_finite()) || !(cfg.t_max >= cfg.dt && cfg.t_max.is_finite()) {
        return Err(FlowError::Config(format!("need 0 < dt <= t_max, got dt = {}, t_max = {}", cfg.dt, cfg.t_max)));
    }
    if cfg.record_stride == 0 {
        return Err(FlowError::Config("record_stride must be at least 1".into()));
    }
    check_dim(drift, x0)?;
    guard(x0, 0.0)?;
    let noise = (2.0 * cfg.temperature * cfg.dt).sqrt();
    let n_steps = (cfg.t_max / cfg.dt).round() as usize;
    let mut rec = Recorder::new(cfg.record_stride, energy);
    let mut x = x0.to_vec();
    rec.push(0.0, &x);
    let mut t = 0.0;
    for k in 0..n_steps {
        let f = drift.eval(&x, t);
        x = axpy(&x, cfg.dt, &f);
        if cfg.temperature > 0.0 {
            for xi in x.iter_mut() {
                *xi += noise * rng.normal();
            }
        }
        t = (k + 1) as f64 * cfg.dt;
        guard(&x, t)?;
        rec.maybe_push(k + 1, t, &x);
    }
    rec.push(t, &x);
    let f = drift.eval(&x, t);
    rec.rec.final_residual = norm2(&f);
    rec.rec.converged = false;
    Ok(rec.rec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn decay() -> impl VectorField {
        autonomous(1, |x| vec![-x[0]])
    }

    #[test]
    fn rk4_exponential_decay() {
        let cfg = IntegratorConfig::rk4(0.1, 1.0).with_tol(1e-300);
        let rec = integrate_ode(&decay(), &[1.0], &cfg, None).unwrap();
        assert!((rec.final_state()[0] - (-1.0f64).exp()).abs() < 1e-6);
        assert!((rec.final_time() - 1.0).abs() < 1e-12);
        assert!(!rec.converged);
    }

    #[test]
    fn zero_field_converges_immediately() {
        let f = autonomous(3, |_| vec![0.0; 3]);
        let rec = integrate_ode(&f, &[1.0, 2.0, 3.0], &IntegratorConfig::default(), None).unwrap();
        assert!(rec.converged);
        assert_eq!(rec.final_time(), 0.0);
        assert_eq!(rec.final_state(), &[1.0, 2.0, 3.0]);
    }

    #[test]
    fn affine_equilibrium() {
        let f = autonomous(1, |x| vec![1.0 - x[0]]);
        let x = find_equilibrium(&f, &[0.0], &IntegratorConfig::default()).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-7);
    }

    #[test]
    fn quartic_and_double_well_equilibria() {
        let f = autonomous(1, |x| vec![-(x[0] + x[0].powi(3))]);
        let x = find_equilibrium(&f, &[0.1], &IntegratorConfig::default()).unwrap();
        assert!(x[0].abs() < 1e-6);

        let dw = autonomous(1, |x| vec![x[0] - x[0].powi(3)]);
        let p = find_equilibrium(&dw, &[0.1], &IntegratorConfig::default()).unwrap();
        let m = find_equilibrium(&dw, &[-0.1], &IntegratorConfig::default()).unwrap();
        assert!((p[0] - 1.0).abs() < 1e-6);
        assert!((m[0] + 1.0).abs() < 1e-6);
    }

    #[test]
    fn non_convergence_and_divergence() {
        // Harmonic oscillator: a limit set, never an equilibrium.
        let rot = autonomous(2, |x| vec![x[1], -x[0]]);
        let err = find_equilibrium(&rot, &[1.0, 0.0], &IntegratorConfig::rk4(0.01, 10.0)).unwrap_err();
        assert!(matches!(err, FlowError::NotConverged { residual, .. } if residual > 0.5));

        let blow = autonomous(1, |x| vec![x[0] * x[0]]);
        let err = integrate_ode(&blow, &[1.0], &IntegratorConfig::euler(0.1, 100.0), None).unwrap_err();
        assert!(matches!(err, FlowError::Diverged { .. }));
    }

    #[test]
    fn rejects_bad_config_and_dimension() {
        let cfg = IntegratorConfig::rk4(1.0, 0.5);
        assert!(matches!(integrate_ode(&decay(), &[1.0], &cfg, None), Err(FlowError::Config(_))));
        let err = integrate_ode(&decay(), &[1.0, 2.0], &IntegratorConfig::default(), None);
        assert!(matches!(err, Err(FlowError::Dimension { .. })));
    }

    #[test]
    fn rk4_order() {
        let exact = (-1.0f64).exp();
        let err = |dt: f64| {
            let cfg = IntegratorConfig::rk4(dt, 1.0).with_tol(1e-300);
            (integrate_ode(&decay(), &[1.0], &cfg, None).unwrap().final_state()[0] - exact).abs()
        };
        let ratio = err(0.1) / err(0.05);
        assert!(ratio >= 14.0, "ratio {ratio}");
    }

    #[test]
    fn energy_recorded_and_monotone() {
        let e = |x: &[f64]| 0.25 * x[0].powi(4) - 0.5 * x[0] * x[0];
        let f = autonomous(1, |x| vec![x[0] - x[0].powi(3)]);
        let rec = integrate_ode(&f, &[0.05], &IntegratorConfig::default(), Some(&e)).unwrap();
        let energies = rec.energies.as_ref().unwrap();
        assert_eq!(energies.len(), rec.times.len());
        assert!(rec.max_energy_increase().unwrap() <= 1e-9);
        assert!(rec.times.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn csv_header() {
        let e = |x: &[f64]| x[0];
        let f = autonomous(2, |x| vec![-x[0], -x[1]]);
        let rec = integrate_ode(&f, &[1.0, 0.0], &IntegratorConfig::rk4(0.5, 1.0), Some(&e)).unwrap();
        let csv = rec.to_csv();
        assert!(csv.starts_with("t,x0,x1,energy\n"));
        assert_eq!(csv.lines().count(), rec.times.len() + 1);
    }

    #[test]
    fn zero_temperature_matches_euler() {
        let f = autonomous(2, |x| vec![x[1] - x[0], -x[1].powi(3)]);
        let ode = integrate_ode(&f, &[0.3, -1.2], &IntegratorConfig::euler(0.01, 5.0).with_tol(1e-300), None).unwrap();
        let sde_cfg = SdeConfig { temperature: 0.0, dt: 0.01, t_max: 5.0, record_stride: 1 };
        let sde = integrate_sde(&f, &[0.3, -1.2], &sde_cfg, &mut SeededRng::new(1), None).unwrap();
        assert_eq!(ode.states.len(), sde.states.len());
        for (a, b) in ode.states.iter().zip(&sde.states) {
            assert_eq!(a[0].to_bits(), b[0].to_bits());
            assert_eq!(a[1].to_bits(), b[1].to_bits());
        }
    }

    #[test]
    fn single_step_increment_variance() {
        let f = autonomous(1, |_| vec![0.0]);
        let dt = 0.01;
        let cfg = SdeConfig { temperature: 0.5, dt, t_max: dt, record_stride: 1 };
        let mut rng = SeededRng::new(11);
        let n = 100_000;
        let mut sum2 = 0.0;
        for _ in 0..n {
            let rec = integrate_sde(&f, &[0.0], &cfg, &mut rng, None).unwrap();
            sum2 += rec.final_state()[0].powi(2);
        }
        let var = sum2 / n as f64;
        let expect = 2.0 * 0.5 * dt;
        assert!((var / expect - 1.0).abs() < 0.05, "var {var}");
    }

    #[test]
    fn ou_stationary_variance() {
        let f = autonomous(1, |x| vec![-x[0]]);
        let cfg = SdeConfig { temperature: 1.0, dt: 1e-2, t_max: 20_000.0, record_stride: 10 };
        let rec = integrate_sde(&f, &[0.0], &cfg, &mut SeededRng::new(5), None).unwrap();
        let tail: Vec<f64> = rec.states.iter().skip(rec.states.len() / 10).map(|s| s[0]).collect();
        let mean = tail.iter().sum::<f64>() / tail.len() as f64;
        let var = tail.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / tail.len() as f64;
        // Euler–Maruyama at dt inflates the OU variance by 1/(1 − dt/2).
        assert!((var - 1.0).abs() < 0.05, "var {var}");
    }

    #[test]
    fn sde_seeded_determinism() {
        let f = autonomous(1, |x| vec![-x[0]]);
        let cfg = SdeConfig { temperature: 0.7, dt: 1e-2, t_max: 10.0, record_stride: 1 };
        let a = integrate_sde(&f, &[0.0], &cfg, &mut SeededRng::new(3), None).unwrap();
        let b = integrate_sde(&f, &[0.0], &cfg, &mut SeededRng::new(3), None).unwrap();
        assert_eq!(a, b);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        // Gradient flows of random convex quadratics plus a quartic term never
        // increase their energy under RK4 at dt = 0.01.
        #[test]
        fn gradient_flow_energy_nonincreasing(
            a in 0.1f64..3.0, b in -2.0f64..2.0, c in 0.0f64..1.0,
            x0 in proptest::collection::vec(-3.0f64..3.0, 2),
        ) {
            let e = move |x: &[f64]| 0.5 * a * x[0] * x[0] + 0.5 * x[1] * x[1]
                + b * x[0] * x[1] * 0.3 + 0.25 * c * x[0].powi(4);
            let f = autonomous(2, move |x| vec![
                -(a * x[0] + 0.3 * b * x[1] + c * x[0].powi(3)),
                -(x[1] + 0.3 * b * x[0]),
            ]);
            let cfg = IntegratorConfig::rk4(0.01, 20.0);
            let rec = integrate_ode(&f, &x0, &cfg, Some(&e)).unwrap();
            prop_assert!(rec.max_energy_increase().unwrap() <= 1e-9);
        }
    }
}
