//! Oja's rule as streaming PCA. Each instance draws a random covariance
//! `C = Q Λ Qᵀ` whose top eigengap `λ1/λ2` lies in `[min_gap, max_gap]`,
//! trains on zero-mean Gaussian samples from `C`, and reports the final
//! weight norm and its alignment with the top eigenvector of `C`.

use super::{at_least, par_try_map, positive, require, ExperimentParams, Outcome};
use crate::row;
use crate::table::Table;
use edm_core::mathcore::{dot, norm2, sym_eig, Mat, SeededRng};
use edm_core::plasticity::{oja_train, LearnConfig};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Params {
    pub instances: usize,
    pub dim: usize,
    pub eta: f64,
    pub steps: usize,
    pub min_gap: f64,
    pub max_gap: f64,
    /// Range of the non-leading eigenvalues.
    pub lambda_lo: f64,
    pub lambda_hi: f64,
}

impl Default for Params {
    fn default() -> Self {
        Params {
            instances: 10,
            dim: 5,
            eta: 0.002,
            steps: 200_000,
            min_gap: 1.5,
            max_gap: 2.5,
            lambda_lo: 0.5,
            lambda_hi: 1.0,
        }
    }
}

/// A random orthonormal basis (columns) and the spectrum of the covariance.
fn random_covariance(p: &Params, rng: &mut SeededRng) -> anyhow::Result<(Mat, Vec<f64>)> {
    let d = p.dim;
    let g = Mat::from_fn(d, d, |_, _| rng.normal()).symmetric_part();
    let basis = sym_eig(&g)?;
    let q = Mat::from_fn(d, d, |i, k| basis.vector(k)[i]);
    let mut rest: Vec<f64> = (1..d).map(|_| rng.uniform_in(p.lambda_lo, p.lambda_hi)).collect();
    rest.sort_by(|a, b| b.total_cmp(a));
    let lead = rest.first().copied().unwrap_or(p.lambda_hi) * rng.uniform_in(p.min_gap, p.max_gap);
    let mut spectrum = vec![lead];
    spectrum.extend(rest);
    Ok((q, spectrum))
}

impl ExperimentParams for Params {
    fn validate(&self) -> Result<(), String> {
        at_least("instances", self.instances, 1)?;
        at_least("dim", self.dim, 2)?;
        positive("eta", self.eta)?;
        at_least("steps", self.steps, 1)?;
        require(self.min_gap > 1.0 && self.max_gap >= self.min_gap, || {
            format!("need 1 < min_gap <= max_gap, got {} and {}", self.min_gap, self.max_gap)
        })?;
        positive("lambda_lo", self.lambda_lo)?;
        require(self.lambda_hi >= self.lambda_lo, || "lambda_hi must be >= lambda_lo".into())
    }

    fn run(&self, seed: u64) -> anyhow::Result<Outcome> {
        let rows = par_try_map(self.instances, |i| {
            let mut rng = SeededRng::for_trial(seed, i as u64);
            let (q, spectrum) = random_covariance(self, &mut rng)?;
            let d = self.dim;
            let scale: Vec<f64> = spectrum.iter().map(|l| l.sqrt()).collect();
            let cov = Mat::from_fn(d, d, |a, b| (0..d).map(|k| q[(a, k)] * spectrum[k] * q[(b, k)]).sum());
            // Oracle direction from the assembled covariance, not from `q`.
            let eig = sym_eig(&cov)?;
            let top = (0..d).max_by(|&a, &b| eig.values[a].total_cmp(&eig.values[b])).expect("d >= 2");
            let v1 = eig.vector(top);
            let mut sorted = eig.values.clone();
            sorted.sort_by(|a, b| b.total_cmp(a));
            let w0 = rng.normal_vec(d);
            let mut sampler = || {
                let z: Vec<f64> = scale.iter().map(|s| s * rng.normal()).collect();
                q.matvec(&z)
            };
            let cfg = LearnConfig { eta: self.eta, steps: self.steps, beta: 1.0 };
            let w = oja_train(&mut sampler, &w0, &cfg)?;
            let norm = norm2(&w);
            Ok((sorted[0], sorted[1], norm, dot(&w, &v1).abs() / norm))
        })?;
        let mut table = Table::new(&["instance", "lambda1", "lambda2", "final_norm", "alignment"]);
        let (mut worst_norm, mut worst_align) = (0.0f64, f64::INFINITY);
        for (i, &(l1, l2, norm, align)) in rows.iter().enumerate() {
            worst_norm = worst_norm.max((norm - 1.0).abs());
            worst_align = worst_align.min(align);
            table.push(row![i, l1, l2, norm, align]);
        }
        let mut out = Outcome::default();
        out.summary.put("max_norm_deviation", worst_norm);
        out.summary.put("min_alignment", worst_align);
        out.summary.put("min_eigengap", rows.iter().map(|r| r.0 / r.1).fold(f64::INFINITY, f64::min));
        out.tables.push(("instances", table));
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn covariance_spectrum_respects_the_gap() {
        let p = Params::default();
        let mut rng = SeededRng::new(5);
        for _ in 0..20 {
            let (q, s) = random_covariance(&p, &mut rng).unwrap();
            assert!(s[0] / s[1] >= p.min_gap && s[0] / s[1] <= p.max_gap);
            assert!(q.transpose().matmul(&q).max_abs_diff(&Mat::identity(p.dim)) < 1e-10);
        }
    }
}
