//! Three-way agreement checks between the engines over a scenario grid.

use crate::analytic::{sop_closed_form, SopResult};
use crate::error::{Result, SopError};
use crate::exec::Execution;
use crate::montecarlo::{derive_seed, estimate_sop_with, McEstimate};
use crate::quadrature::sop_quadrature;
use crate::scenario::{default_scenario, Scenario, SecrecyTarget};

#[derive(Debug, Clone)]
pub struct GridPoint {
    pub es_db: f64,
    pub esi_db: f64,
    pub r_s: f64,
    pub alpha: f64,
}

impl GridPoint {
    pub fn scenario(&self) -> Result<Scenario> {
        default_scenario(self.alpha, self.es_db, self.esi_db)
    }

    pub fn target(&self) -> Result<SecrecyTarget> {
        SecrecyTarget::new(self.r_s)
    }

    pub fn label(&self) -> String {
        format!(
            "es_db={} esi_db={} r_s={} alpha={}",
            self.es_db, self.esi_db, self.r_s, self.alpha
        )
    }
}

/// Cartesian grid over the reference geometry.
pub fn grid(es_db: &[f64], esi_db: &[f64], r_s: &[f64], alpha: &[f64]) -> Vec<GridPoint> {
    let mut out = Vec::new();
    for &es in es_db {
        for &esi in esi_db {
            for &r in r_s {
                for &a in alpha {
                    out.push(GridPoint {
                        es_db: es,
                        esi_db: esi,
                        r_s: r,
                        alpha: a,
                    });
                }
            }
        }
    }
    out
}

/// Grid run by the `validate` command.
pub fn default_grid() -> Vec<GridPoint> {
    grid(
        &[0.0, 10.0, 20.0, 30.0, 40.0, 50.0],
        &[0.0, 15.0, 35.0],
        &[0.1, 1.0, 3.0],
        &[2.0, 3.0, 4.0],
    )
}

#[derive(Debug, Clone)]
pub struct CrossCheck {
    pub point: GridPoint,
    pub closed: SopResult,
    pub quadrature: SopResult,
    pub monte_carlo: Option<McEstimate>,
}

impl CrossCheck {
    pub fn closed_vs_quadrature(&self) -> f64 {
        (self.closed.value - self.quadrature.value).abs()
    }

    /// Standard error of a `trials`-sample estimate of the closed-form value.
    pub fn mc_sigma(&self) -> Option<f64> {
        let p = self.closed.value;
        self.monte_carlo
            .map(|m| (p * (1.0 - p) / m.trials as f64).sqrt())
    }

    /// `|mc - closed|` in units of [`Self::mc_sigma`].
    pub fn mc_z(&self) -> Option<f64> {
        let m = self.monte_carlo?;
        let sigma = self.mc_sigma()?;
        let d = (m.sop_hat - self.closed.value).abs();
        Some(if sigma > 0.0 {
            d / sigma
        } else if d == 0.0 {
            0.0
        } else {
            f64::INFINITY
        })
    }

    pub fn is_fallback(&self) -> bool {
        !self.closed.fallback_pairs.is_empty()
    }
}

/// Runs every engine on every point. `trials == 0` skips Monte Carlo.
pub fn cross_validate(
    points: &[GridPoint],
    trials: u64,
    seed: u64,
    exec: Execution,
) -> Result<Vec<CrossCheck>> {
    exec.try_map(points.len(), |k| {
        let p = &points[k];
        let wrap = |e: SopError| SopError::Sweep {
            point: p.label(),
            source: Box::new(e),
        };
        let s = p.scenario().map_err(wrap)?;
        let t = p.target().map_err(wrap)?;
        let closed = sop_closed_form(&s, &t).map_err(wrap)?;
        let quadrature = sop_quadrature(&s, &t).map_err(wrap)?;
        let monte_carlo = (trials > 0)
            .then(|| estimate_sop_with(&s, &t, trials, derive_seed(seed, k as u64), exec));
        Ok(CrossCheck {
            point: p.clone(),
            closed,
            quadrature,
            monte_carlo,
        })
    })
}
