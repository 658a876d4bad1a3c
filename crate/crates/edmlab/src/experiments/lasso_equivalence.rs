//! The positive competitive network `ẋ = −x + ReLU((I − ΘᵀΘ)x + Θᵀu − λ)`
//! against a coordinate-descent solver of the nonnegative lasso. Besides
//! random problems with unit-norm dictionary columns, the run includes the
//! orthonormal case `Θ = I`, `u = (1, 0.1)`, `λ = 0.3`, whose minimizer is
//! `max(u − λ, 0) = (0.7, 0)`.

use super::{at_least, nonnegative, par_try_map, positive, require, ExperimentParams, Outcome};
use crate::report::PlotKind;
use crate::row;
use crate::table::Table;
use anyhow::Context;
use edm_core::flows::{autonomous, integrate_ode, IntegratorConfig};
use edm_core::mathcore::{Mat, SeededRng};
use edm_core::proximal::LassoProblem;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Params {
    pub problems: usize,
    pub m: usize,
    pub n: usize,
    pub lambda: f64,
    pub dt: f64,
    pub t_max: f64,
    pub tol: f64,
    pub trajectory_stride: usize,
}

impl Default for Params {
    fn default() -> Self {
        Params { problems: 50, m: 5, n: 8, lambda: 0.2, dt: 0.05, t_max: 5000.0, tol: 1e-11, trajectory_stride: 10 }
    }
}

impl Params {
    fn integrator(&self) -> IntegratorConfig {
        IntegratorConfig::rk4(self.dt, self.t_max).with_tol(self.tol)
    }
}

/// The orthonormal-dictionary check problem.
pub fn identity_problem() -> LassoProblem {
    LassoProblem::new(Mat::identity(2), vec![1.0, 0.1], 0.3).expect("identity columns are unit")
}

impl ExperimentParams for Params {
    fn validate(&self) -> Result<(), String> {
        at_least("problems", self.problems, 1)?;
        at_least("m", self.m, 1)?;
        at_least("n", self.n, 1)?;
        nonnegative("lambda", self.lambda)?;
        positive("dt", self.dt)?;
        require(self.t_max >= self.dt, || "t_max must be at least dt".into())?;
        positive("tol", self.tol)?;
        at_least("trajectory_stride", self.trajectory_stride, 1)?;
        self.integrator().validate().map_err(|e| e.to_string())
    }

    fn run(&self, seed: u64) -> anyhow::Result<Outcome> {
        let cfg = self.integrator();
        let rows = par_try_map(self.problems, |i| {
            let mut rng = SeededRng::for_trial(seed, i as u64);
            let prob = LassoProblem::random(self.m, self.n, self.lambda, &mut rng)?;
            let x_net = prob.network_equilibrium(&cfg).with_context(|| format!("problem {i}"))?;
            let x_ref = prob.oracle().with_context(|| format!("problem {i}"))?;
            let support = x_net.iter().filter(|&&v| v > 0.0).count();
            Ok((prob.objective(&x_net)?, prob.objective(&x_ref)?, support))
        })?;
        let mut table = Table::new(&["problem", "objective_network", "objective_oracle", "abs_diff", "support"]);
        let mut worst = 0.0f64;
        for (i, &(a, b, s)) in rows.iter().enumerate() {
            worst = worst.max((a - b).abs());
            table.push(row![i, a, b, (a - b).abs(), s]);
        }

        let id = identity_problem();
        let x_id = id.network_equilibrium(&cfg)?;
        let id_err = (x_id[0] - 0.7).abs().max(x_id[1].abs());

        // Sample path of the first random problem, energy = lasso objective.
        let prob = LassoProblem::random(self.m, self.n, self.lambda, &mut SeededRng::for_trial(seed, 0))?;
        let field = autonomous(self.n, |x: &[f64]| prob.network_field(x).expect("dimension fixed"));
        let objective = |x: &[f64]| prob.objective(x).expect("dimension fixed");
        let rec = integrate_ode(
            &field,
            &vec![0.0; self.n],
            &cfg.clone().with_stride(self.trajectory_stride),
            Some(&objective),
        )?;
        let trajectory = Table::from_csv(&rec.to_csv()).expect("flows CSV is rectangular");

        let mut out = Outcome::default();
        out.summary.put("max_abs_objective_diff", worst);
        out.summary.put("identity_x1", x_id[0]);
        out.summary.put("identity_x2", x_id[1]);
        out.summary.put("identity_max_abs_err", id_err);
        out.summary.put("trajectory_max_objective_increase", rec.max_energy_increase().unwrap_or(0.0));
        out.tables.push(("objectives", table));
        out.series.push((PlotKind::Trajectory, trajectory));
        Ok(out)
    }
}
