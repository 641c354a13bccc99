//! Numerical oracle for the outage probability.
//!
//! Works from the SINR distribution functions rather than from the closed
//! form: the CDF of `gamma_X` for a hypoexponential interference sum, the
//! density of `Y = gamma_E + 1`, and the outage integral
//! `P = int_1^inf F_X(2^r x) f_Y(x) dx` with `X = gamma_B + 1`.
//! It also evaluates the two auxiliary integrals
//!
//! ```text
//! I1 = int_1^inf e^{-K y} / ((L_b + y) (L_e + y)^2) dy
//! I2 = int_1^inf e^{-K y} / ((L_b + y) (L_e + y))   dy
//! ```
//!
//! directly; the closed-form engine falls back to them for near-coincident
//! poles.

use crate::analytic::{interference_poles, Method, SopResult};
use crate::error::{Result, SopError};
use crate::integrate::{decade_anchors, integrate_semi_infinite, QuadConfig};
use crate::scenario::{Scenario, SecrecyTarget, Side};
use crate::special::XiCoefficients;

/// Default absolute tolerance of the outage integral.
pub const SOP_ABS_TOL: f64 = 1e-9;

/// SINR distribution at one receiver.
#[derive(Debug, Clone)]
pub struct SinrDistribution {
    es: f64,
    n0: f64,
    loss: f64,
    b: Vec<f64>,
    xi: XiCoefficients,
}

impl SinrDistribution {
    pub fn new(s: &Scenario, side: Side) -> Result<Self> {
        let (b, xi, _) = interference_poles(s, side)?;
        Ok(Self {
            es: s.es_lin(),
            n0: s.n0(),
            loss: s.main_path_loss(side),
            b,
            xi,
        })
    }

    /// `1 - sum_i xi_i E_s e^{-c N0 x / E_s} / (E_s + c b_i x)` with `c = 1 + d^alpha`.
    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        let decay = (-self.loss * self.n0 * x / self.es).exp();
        let tail: f64 = self
            .b
            .iter()
            .zip(self.xi.as_slice())
            .map(|(&b, &xi)| xi * self.es / (self.es + self.loss * b * x))
            .sum();
        1.0 - decay * tail
    }

    /// Density of the SINR, the derivative of [`Self::cdf`].
    pub fn pdf(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        let decay = (-self.loss * self.n0 * x / self.es).exp();
        if decay == 0.0 {
            return 0.0;
        }
        let sum: f64 = self
            .b
            .iter()
            .zip(self.xi.as_slice())
            .map(|(&b, &xi)| {
                let den = self.es + b * self.loss * x;
                xi * (self.es * b / (den * den) + self.n0 / den)
            })
            .sum();
        self.loss * decay * sum
    }

    /// Characteristic scales of the distribution, used to seed quadrature panels.
    fn scales(&self) -> Vec<f64> {
        let mut s = vec![self.es / (self.loss * self.n0)];
        s.extend(self.b.iter().map(|&b| self.es / (self.loss * b)));
        s
    }
}

/// CDF of the SINR at `side` evaluated at `x >= 0`.
pub fn cdf_sinr(s: &Scenario, side: Side, x: f64) -> Result<f64> {
    Ok(SinrDistribution::new(s, side)?.cdf(x))
}

/// Density of `Y = gamma_E + 1` at `x >= 1`.
pub fn pdf_y(s: &Scenario, x: f64) -> Result<f64> {
    if x < 1.0 {
        return Ok(0.0);
    }
    Ok(SinrDistribution::new(s, Side::Eve)?.pdf(x - 1.0))
}

fn anchors(bob: &SinrDistribution, eve: &SinrDistribution, rate: f64) -> Vec<f64> {
    let mut a = Vec::new();
    for sc in eve.scales() {
        a.extend(decade_anchors(sc, 3));
    }
    for sc in bob.scales() {
        a.extend(decade_anchors(sc / rate, 2));
    }
    a
}

/// Outage probability by adaptive quadrature of the outage integral.
pub fn sop_quadrature(s: &Scenario, t: &SecrecyTarget) -> Result<SopResult> {
    sop_quadrature_with(
        s,
        t,
        &QuadConfig {
            abs_tol: SOP_ABS_TOL,
            rel_tol: 0.0,
            max_subdivisions: 20_000,
        },
    )
}

pub fn sop_quadrature_with(s: &Scenario, t: &SecrecyTarget, cfg: &QuadConfig) -> Result<SopResult> {
    if s.m() == 0 {
        return Err(SopError::NoInterferers);
    }
    let bob = SinrDistribution::new(s, Side::Bob)?;
    let eve = SinrDistribution::new(s, Side::Eve)?;
    let rate = t.rate_factor();
    let est = integrate_semi_infinite(
        |x| bob.cdf(rate * x - 1.0) * eve.pdf(x - 1.0),
        1.0,
        &anchors(&bob, &eve, rate),
        cfg,
    )?;
    let value = crate::analytic::checked_probability(est.value)?;
    Ok(SopResult {
        value,
        method: Method::Quadrature,
        fallback_pairs: Vec::new(),
        uncertainty: Some(est.error),
    })
}

/// Outage probability through the complementary event `X > 2^r Y`.
///
/// `1 - int_{2^r}^inf f_X(x) F_Y(x / 2^r) dx`; shares no integrand with
/// [`sop_quadrature`].
pub fn sop_quadrature_complement(s: &Scenario, t: &SecrecyTarget) -> Result<f64> {
    if s.m() == 0 {
        return Err(SopError::NoInterferers);
    }
    let bob = SinrDistribution::new(s, Side::Bob)?;
    let eve = SinrDistribution::new(s, Side::Eve)?;
    let rate = t.rate_factor();
    let mut a = Vec::new();
    for sc in bob.scales() {
        a.extend(decade_anchors(sc, 3));
    }
    for sc in eve.scales() {
        a.extend(decade_anchors(sc * rate, 2));
    }
    let cfg = QuadConfig {
        abs_tol: SOP_ABS_TOL,
        rel_tol: 0.0,
        max_subdivisions: 20_000,
    };
    let est = integrate_semi_infinite(
        |x| bob.pdf(x - 1.0) * eve.cdf(x / rate - 1.0),
        rate,
        &a,
        &cfg,
    )?;
    Ok(1.0 - est.value)
}

fn check_aux_args(l_b: f64, l_e: f64, k: f64) -> Result<()> {
    if !(k > 0.0 && k.is_finite()) {
        return Err(SopError::Domain {
            func: "I1/I2 (K)",
            x: k,
        });
    }
    if !(l_b + 1.0 > 0.0) {
        return Err(SopError::Domain {
            func: "I1/I2 (L_b + 1)",
            x: l_b,
        });
    }
    if !(l_e + 1.0 > 0.0) {
        return Err(SopError::Domain {
            func: "I1/I2 (L_e + 1)",
            x: l_e,
        });
    }
    Ok(())
}

fn aux_config() -> QuadConfig {
    QuadConfig {
        abs_tol: 1e-300,
        rel_tol: 1e-13,
        max_subdivisions: 5_000,
    }
}

fn aux_integral(l_b: f64, l_e: f64, k: f64, e_power: i32) -> Result<f64> {
    check_aux_args(l_b, l_e, k)?;
    let mut a = decade_anchors(1.0 / k, 2);
    a.extend(decade_anchors(1.0 + l_b, 1));
    a.extend(decade_anchors(1.0 + l_e, 1));
    let est = integrate_semi_infinite(
        |y| (-k * (y - 1.0)).exp() / ((l_b + y) * (l_e + y).powi(e_power)),
        1.0,
        &a,
        &aux_config(),
    )?;
    Ok(est.value)
}

/// `e^K I1`, finite for any admissible arguments.
pub fn integral_i1_scaled(l_b: f64, l_e: f64, k: f64) -> Result<f64> {
    aux_integral(l_b, l_e, k, 2)
}

/// `e^K I2`.
pub fn integral_i2_scaled(l_b: f64, l_e: f64, k: f64) -> Result<f64> {
    aux_integral(l_b, l_e, k, 1)
}

pub fn integral_i1(l_b: f64, l_e: f64, k: f64) -> Result<f64> {
    Ok((-k).exp() * integral_i1_scaled(l_b, l_e, k)?)
}

pub fn integral_i2(l_b: f64, l_e: f64, k: f64) -> Result<f64> {
    Ok((-k).exp() * integral_i2_scaled(l_b, l_e, k)?)
}
