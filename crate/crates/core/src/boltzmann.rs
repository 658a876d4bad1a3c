//! Continuous-state Boltzmann machines: overdamped Langevin sampling of
//! `π(x) ∝ exp(−E(x)/T)` and grid quadrature of the same density to check
//! the sampler against.

use std::fmt::Write as _;

use thiserror::Error;

use crate::mathcore::tolerances::DIVERGENCE_BOUND;
use crate::mathcore::{all_finite, dot, fd_gradient, norm2, norm_inf, MathError, SeededRng};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BoltzmannError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("energy is not finite at {0:?}")]
    NonFiniteEnergy(Vec<f64>),
    #[error("chain diverged at step {step}")]
    Diverged { step: usize },
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error(transparent)]
    Math(#[from] MathError),
}

type ScalarFn = Box<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type VectorFn = Box<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// An energy with analytic gradient at a fixed temperature.
pub struct EnergyModel {
    dim: usize,
    energy: ScalarFn,
    gradient: VectorFn,
    temperature: f64,
}

impl std::fmt::Debug for EnergyModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("EnergyModel")
            .field("dim", &self.dim)
            .field("temperature", &self.temperature)
            .finish_non_exhaustive()
    }
}

impl EnergyModel {
    pub fn new<E, G>(dim: usize, energy: E, gradient: G, temperature: f64) -> Result<Self, BoltzmannError>
    where
        E: Fn(&[f64]) -> f64 + Send + Sync + 'static,
        G: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        if dim == 0 {
            return Err(BoltzmannError::InvalidParameter("dimension must be positive".into()));
        }
        if !(temperature > 0.0 && temperature.is_finite()) {
            return Err(BoltzmannError::InvalidParameter(format!("temperature must be positive, got {temperature}")));
        }
        Ok(EnergyModel { dim, energy: Box::new(energy), gradient: Box::new(gradient), temperature })
    }

    /// `E = ½‖x‖²` (Ornstein–Uhlenbeck drift).
    pub fn quadratic(dim: usize, temperature: f64) -> Result<Self, BoltzmannError> {
        EnergyModel::new(dim, |x| 0.5 * dot(x, x), |x| x.to_vec(), temperature)
    }

    /// `E = x⁴/4 − x²/2` in one dimension.
    pub fn double_well(temperature: f64) -> Result<Self, BoltzmannError> {
        EnergyModel::new(1, |x| 0.25 * x[0].powi(4) - 0.5 * x[0] * x[0], |x| vec![x[0].powi(3) - x[0]], temperature)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    pub fn energy(&self, x: &[f64]) -> f64 {
        (self.energy)(x)
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        (self.gradient)(x)
    }

    /// Worst relative disagreement between the analytic gradient and central
    /// differences over `probes` standard-normal points scaled by `radius`.
    pub fn gradient_check(&self, probes: usize, radius: f64, rng: &mut SeededRng) -> Result<f64, BoltzmannError> {
        let mut worst = 0.0_f64;
        for _ in 0..probes {
            let x: Vec<f64> = (0..self.dim).map(|_| radius * rng.normal()).collect();
            let fd = fd_gradient(|y| self.energy(y), &x, 1e-5)?;
            let an = self.gradient(&x);
            for (a, b) in an.iter().zip(&fd) {
                worst = worst.max((a - b).abs() / b.abs().max(1.0));
            }
        }
        Ok(worst)
    }

    /// `min ⟨∇E(x), x⟩/‖x‖²` over `probes` random points on the sphere of
    /// the given radius; positive values document a dissipative energy.
    pub fn dissipativity_constant(&self, radius: f64, probes: usize, rng: &mut SeededRng) -> f64 {
        let mut best = f64::INFINITY;
        for _ in 0..probes.max(1) {
            let mut x: Vec<f64> = (0..self.dim).map(|_| rng.normal()).collect();
            let n = norm2(&x).max(f64::MIN_POSITIVE);
            x.iter_mut().for_each(|v| *v *= radius / n);
            let g = self.gradient(&x);
            best = best.min(dot(&g, &x) / (radius * radius));
        }
        best
    }
}

/// Uniform grid on `[lo, hi]` with `points` nodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

impl Grid1D {
    pub fn new(lo: f64, hi: f64, points: usize) -> Result<Self, BoltzmannError> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) || points < 2 {
            return Err(BoltzmannError::InvalidParameter(format!(
                "grid needs finite lo < hi and >= 2 points, got [{lo}, {hi}] x {points}"
            )));
        }
        Ok(Grid1D { lo, hi, points })
    }

    pub fn step(&self) -> f64 {
        (self.hi - self.lo) / (self.points - 1) as f64
    }

    pub fn node(&self, k: usize) -> f64 {
        if k + 1 == self.points {
            self.hi
        } else {
            self.lo + k as f64 * self.step()
        }
    }

    fn trapezoid_weight(&self, k: usize) -> f64 {
        if k == 0 || k + 1 == self.points {
            0.5 * self.step()
        } else {
            self.step()
        }
    }
}

/// Tensor-product grid; quadrature cost grows as the product of sizes, so
/// this is meant for one or two dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct GridND {
    pub axes: Vec<Grid1D>,
}

impl GridND {
    pub fn new(axes: Vec<Grid1D>) -> Result<Self, BoltzmannError> {
        if axes.is_empty() {
            return Err(BoltzmannError::InvalidParameter("grid needs at least one axis".into()));
        }
        Ok(GridND { axes })
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.points).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.axes.len()];
        for (d, a) in self.axes.iter().enumerate().rev() {
            idx[d] = flat % a.points;
            flat /= a.points;
        }
        idx
    }

    pub fn point(&self, flat: usize) -> Vec<f64> {
        self.multi_index(flat).iter().zip(&self.axes).map(|(&k, a)| a.node(k)).collect()
    }

    fn weight(&self, flat: usize) -> f64 {
        self.multi_index(flat).iter().zip(&self.axes).map(|(&k, a)| a.trapezoid_weight(k)).product()
    }
}

/// Normalized Gibbs density tabulated on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityTable {
    pub grid: GridND,
    /// Density at each node, row-major over the axes.
    pub values: Vec<f64>,
    /// `ln Z` including the energy shift.
    pub log_partition: f64,
}

/// Tabulates `exp(−E/T)/Z` with trapezoid quadrature for `Z`. Energies are
/// shifted by their grid minimum before exponentiating.
pub fn gibbs_density(model: &EnergyModel, grid: &GridND) -> Result<DensityTable, BoltzmannError> {
    if grid.axes.len() != model.dim() {
        return Err(BoltzmannError::Dimension(format!(
            "grid has {} axes, model has dimension {}",
            grid.axes.len(),
            model.dim()
        )));
    }
    let n = grid.len();
    let mut energies = Vec::with_capacity(n);
    for k in 0..n {
        let x = grid.point(k);
        let e = model.energy(&x);
        if !e.is_finite() {
            return Err(BoltzmannError::NonFiniteEnergy(x));
        }
        energies.push(e);
    }
    let e_min = energies.iter().copied().fold(f64::INFINITY, f64::min);
    let t = model.temperature();
    let mut values: Vec<f64> = energies.iter().map(|e| (-(e - e_min) / t).exp()).collect();
    let z: f64 = (0..n).map(|k| grid.weight(k) * values[k]).sum();
    values.iter_mut().for_each(|v| *v /= z);
    Ok(DensityTable { grid: grid.clone(), values, log_partition: z.ln() - e_min / t })
}

impl DensityTable {
    /// Trapezoid integral of the table (≈ 1 by construction).
    pub fn total_mass(&self) -> f64 {
        (0..self.values.len()).map(|k| self.grid.weight(k) * self.values[k]).sum()
    }

    fn axis(&self) -> Grid1D {
        assert_eq!(self.grid.axes.len(), 1, "operation defined for one-dimensional tables");
        self.grid.axes[0]
    }

    /// Piecewise-linear interpolation of a one-dimensional table; zero
    /// outside the grid.
    pub fn interpolate(&self, x: f64) -> f64 {
        let a = self.axis();
        if x < a.lo || x > a.hi {
            return 0.0;
        }
        let h = a.step();
        let k = (((x - a.lo) / h).floor() as usize).min(a.points - 2);
        let s = (x - a.node(k)) / h;
        self.values[k] * (1.0 - s) + self.values[k + 1] * s
    }

    /// Exact integral of the linear interpolant from `lo` to `x`.
    pub fn cdf(&self, x: f64) -> f64 {
        let a = self.axis();
        if x <= a.lo {
            return 0.0;
        }
        let h = a.step();
        let x = x.min(a.hi);
        let k = (((x - a.lo) / h).floor() as usize).min(a.points - 2);
        let mut acc = 0.0;
        for j in 0..k {
            acc += 0.5 * h * (self.values[j] + self.values[j + 1]);
        }
        let s = x - a.node(k);
        let (p0, p1) = (self.values[k], self.values[k + 1]);
        acc + p0 * s + (p1 - p0) * s * s / (2.0 * h)
    }

    /// Mass of each bin `[edges[i], edges[i+1])` under the interpolant.
    pub fn bin_masses(&self, edges: &[f64]) -> Vec<f64> {
        let c: Vec<f64> = edges.iter().map(|&e| self.cdf(e)).collect();
        c.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// Inverse-CDF draw from the interpolated one-dimensional density.
    pub fn sample(&self, rng: &mut SeededRng) -> f64 {
        let a = self.axis();
        let h = a.step();
        let total = self.total_mass();
        let target = rng.uniform() * total;
        let mut acc = 0.0;
        for k in 0..a.points - 1 {
            let (p0, p1) = (self.values[k], self.values[k + 1]);
            let cell = 0.5 * h * (p0 + p1);
            if acc + cell >= target || k + 2 == a.points {
                let r = (target - acc).max(0.0);
                // Solve p0 s + (p1 − p0) s²/(2h) = r for s in [0, h].
                let slope = (p1 - p0) / h;
                let s = if slope.abs() < 1e-14 * p0.max(1e-300) {
                    if p0 > 0.0 {
                        r / p0
                    } else {
                        0.0
                    }
                } else {
                    let disc = (p0 * p0 + 2.0 * slope * r).max(0.0);
                    2.0 * r / (p0 + disc.sqrt())
                };
                return a.node(k) + s.clamp(0.0, h);
            }
            acc += cell;
        }
        a.hi
    }

    /// `x,density` CSV (one-dimensional tables only).
    pub fn to_csv(&self) -> String {
        let a = self.axis();
        let mut out = String::from("x,density\n");
        for k in 0..a.points {
            let _ = writeln!(out, "{},{}", a.node(k), self.values[k]);
        }
        out
    }
}

/// `n+1` equally spaced bin edges over `[lo, hi]`.
pub fn uniform_edges(lo: f64, hi: f64, bins: usize) -> Vec<f64> {
    (0..=bins).map(|i| lo + (hi - lo) * i as f64 / bins as f64).collect()
}

pub const MIN_TV_SAMPLES: usize = 1000;

/// Total-variation distance `½Σ|p̂_b − p_b|` between binned samples and the
/// table's bin masses. Mass outside the edges (for samples and table alike)
/// counts as one extra bin.
pub fn tv_distance(samples: &[f64], table: &DensityTable, edges: &[f64]) -> Result<f64, BoltzmannError> {
    if samples.len() < MIN_TV_SAMPLES {
        return Err(BoltzmannError::TooFewSamples { needed: MIN_TV_SAMPLES, got: samples.len() });
    }
    if edges.len() < 2 || edges.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(BoltzmannError::InvalidParameter("bin edges must be strictly increasing".into()));
    }
    let bins = edges.len() - 1;
    let mut counts = vec![0usize; bins + 1];
    for &s in samples {
        let b = if s < edges[0] || s >= edges[bins] { bins } else { edges.partition_point(|&e| e <= s) - 1 };
        counts[b] += 1;
    }
    let total = table.total_mass();
    let mut q: Vec<f64> = table.bin_masses(edges).iter().map(|m| m / total).collect();
    q.push((1.0 - q.iter().sum::<f64>()).max(0.0));
    let n = samples.len() as f64;
    Ok(0.5 * counts.iter().zip(&q).map(|(&c, &m)| (c as f64 / n - m).abs()).sum::<f64>())
}

#[derive(Debug, Clone, PartialEq)]
pub struct LangevinConfig {
    pub dt: f64,
    pub n_steps: usize,
    pub burn_in: usize,
    pub thin: usize,
}

impl LangevinConfig {
    /// Defaults: burn-in 10% of the steps, keep every 10th state.
    pub fn new(dt: f64, n_steps: usize) -> Self {
        LangevinConfig { dt, n_steps, burn_in: n_steps / 10, thin: 10 }
    }

    fn validate(&self) -> Result<(), BoltzmannError> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(BoltzmannError::InvalidParameter(format!("dt must be positive, got {}", self.dt)));
        }
        if self.burn_in >= self.n_steps {
            return Err(BoltzmannError::InvalidParameter(format!(
                "burn_in ({}) must be below n_steps ({})",
                self.burn_in, self.n_steps
            )));
        }
        if self.thin == 0 {
            return Err(BoltzmannError::InvalidParameter("thin must be at least 1".into()));
        }
        Ok(())
    }
}

/// Euler–Maruyama chain `x ← x − ∇E dt + √(2T dt) ξ`; returns the states
/// after `burn_in` steps, every `thin`-th step.
pub fn langevin_sample(
    model: &EnergyModel,
    x0: &[f64],
    cfg: &LangevinConfig,
    rng: &mut SeededRng,
) -> Result<Vec<Vec<f64>>, BoltzmannError> {
    cfg.validate()?;
    if x0.len() != model.dim() {
        return Err(BoltzmannError::Dimension(format!(
            "x0 has length {}, model has dimension {}",
            x0.len(),
            model.dim()
        )));
    }
    let noise = (2.0 * model.temperature() * cfg.dt).sqrt();
    let mut x = x0.to_vec();
    let mut out = Vec::with_capacity((cfg.n_steps - cfg.burn_in) / cfg.thin + 1);
    for step in 1..=cfg.n_steps {
        let g = model.gradient(&x);
        for (xi, gi) in x.iter_mut().zip(&g) {
            *xi += -gi * cfg.dt + noise * rng.normal();
        }
        if !all_finite(&x) || norm_inf(&x) > DIVERGENCE_BOUND {
            return Err(BoltzmannError::Diverged { step });
        }
        if step > cfg.burn_in && (step - cfg.burn_in).is_multiple_of(cfg.thin) {
            out.push(x.clone());
        }
    }
    Ok(out)
}

/// Independent chains seeded `seed ⊕ c`, samples concatenated in chain order.
pub fn langevin_sample_chains(
    model: &EnergyModel,
    x0: &[f64],
    cfg: &LangevinConfig,
    seed: u64,
    chains: usize,
) -> Result<Vec<Vec<f64>>, BoltzmannError> {
    let mut all = Vec::new();
    for c in 0..chains {
        let mut rng = SeededRng::for_trial(seed, c as u64);
        all.extend(langevin_sample(model, x0, cfg, &mut rng)?);
    }
    Ok(all)
}

/// First coordinate of each sample.
pub fn first_coordinate(samples: &[Vec<f64>]) -> Vec<f64> {
    samples.iter().map(|s| s[0]).collect()
}

/// Single-column CSV of one-dimensional samples.
pub fn samples_to_csv(samples: &[f64]) -> String {
    let mut out = String::from("x\n");
    for s in samples {
        let _ = writeln!(out, "{s}");
    }
    out
}

pub fn mean_and_variance(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var)
}
