//! Second-moment panel of the rescaled walk and the Levy-area variance under
//! substep refinement.

use serde::Serialize;

use crate::error::Result;
use crate::estimators::EstimateRow;
use crate::rng::SeedPlan;
use crate::sampler::{endpoint_bank, walk_bank, PathConfig};
use crate::stats::{mean_estimate, McEstimate};

/// `E X^2, E Y^2, E Z^2, E XZ` of `S_n`. All coordinates are centred, so
/// these are the variances and the `X`-`Z` covariance.
#[derive(Debug, Clone, Serialize)]
pub struct MomentPanel {
    pub n: usize,
    pub beta: f64,
    pub xx: McEstimate,
    pub yy: McEstimate,
    pub zz: McEstimate,
    pub xz: McEstimate,
}

impl MomentPanel {
    pub fn estimates(&self) -> [&McEstimate; 4] {
        [&self.xx, &self.yy, &self.zz, &self.xz]
    }

    /// Limits as `n -> infinity`: `(1, 1, beta^2 + 1/4, 0)`.
    pub fn limit(&self) -> [f64; 4] {
        [1.0, 1.0, self.beta * self.beta + 0.25, 0.0]
    }

    /// Exact values at finite `n`; the area variance is `(1 - 1/n) / 4`.
    pub fn exact(&self) -> [f64; 4] {
        let n = self.n as f64;
        [1.0, 1.0, self.beta * self.beta + 0.25 * (1.0 - 1.0 / n), 0.0]
    }

    /// Largest `|estimate - target| / se` over the four moments.
    pub fn max_sigma(&self, target: [f64; 4]) -> f64 {
        self.estimates()
            .iter()
            .zip(target)
            .map(|(e, t)| (e.value - t).abs() / e.se().max(f64::MIN_POSITIVE))
            .fold(0.0, f64::max)
    }

    pub fn rows(&self) -> Vec<EstimateRow> {
        let p = format!("n={};beta={}", self.n, self.beta);
        ["var_x", "var_y", "var_z", "cov_xz"]
            .iter()
            .zip(self.estimates())
            .map(|(name, e)| EstimateRow::new(*name, p.clone(), e))
            .collect()
    }
}

pub fn moment_panel(n: usize, beta: f64, count: usize, plan: SeedPlan) -> Result<MomentPanel> {
    let pts = walk_bank(n, beta, count, plan)?;
    let col = |f: &dyn Fn(&crate::GroupPoint) -> f64| {
        let v: Vec<f64> = pts.iter().map(f).collect();
        mean_estimate(&v, plan.master_seed)
    };
    Ok(MomentPanel {
        n,
        beta,
        xx: col(&|p| p.x * p.x),
        yy: col(&|p| p.y * p.y),
        zz: col(&|p| p.z * p.z),
        xz: col(&|p| p.x * p.z),
    })
}

/// `Var(A_1)` from one-cell paths with `substeps` fine steps.
#[derive(Debug, Clone, Serialize)]
pub struct AreaVariance {
    pub substeps: usize,
    pub variance: McEstimate,
    /// `|variance - 1/4|`.
    pub error: f64,
    /// The exact discretisation error `1 / (4 substeps)`.
    pub expected_error: f64,
}

pub fn area_variance_study(substeps: &[usize], count: usize, plan: SeedPlan) -> Result<Vec<AreaVariance>> {
    substeps
        .iter()
        .map(|&s| {
            let cfg = PathConfig::new(1, s, 0.0)?;
            let sq: Vec<f64> = endpoint_bank(&cfg, count, plan)?.iter().map(|p| p.z * p.z).collect();
            let variance = mean_estimate(&sq, plan.master_seed);
            Ok(AreaVariance {
                substeps: s,
                error: (variance.value - 0.25).abs(),
                expected_error: 0.25 / s as f64,
                variance,
            })
        })
        .collect()
}

pub fn errors_decrease(study: &[AreaVariance]) -> bool {
    study.windows(2).all(|w| w[1].error < w[0].error)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_panel_is_near_exact() {
        let p = moment_panel(8, 1.0, 20_000, SeedPlan::new(5)).unwrap();
        assert!(p.max_sigma(p.exact()) < 4.5, "{p:?}");
        assert_eq!(p.rows().len(), 4);
        assert_eq!(p.exact()[2], 1.0 + 0.25 * 7.0 / 8.0);
    }

    #[test]
    fn single_step_has_no_area() {
        let s = area_variance_study(&[1], 100, SeedPlan::new(1)).unwrap();
        assert_eq!(s[0].variance.value, 0.0);
        assert_eq!(s[0].error, 0.25);
    }
}
