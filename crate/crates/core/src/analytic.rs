//! Closed-form secrecy outage probability.
//!
//! With `X = gamma_B + 1`, `Y = gamma_E + 1` and `rho = 2^{r_s}`,
//!
//! ```text
//! P_o = 1 - e^{1/g_B + 1/g_E} sum_{i,j} Xi_B(i) Xi_E(j) (L_Bi + 1/rho) (L_Ej + 1)
//!              * (I1(L_Bi, L_Ej, K) + I2(L_Bi, L_Ej, K) / g_E)
//! K    = rho / g_B + 1 / g_E
//! L_Bi = (E_s - (1 + d_B^a) b_Bi) / ((1 + d_B^a) rho b_Bi)
//! L_Ej = (E_s - (1 + d_E^a) b_Ej) / ((1 + d_E^a) b_Ej)
//! ```
//!
//! where `g_X` is the interference-free average SNR and `b_Xi` the mean
//! interference energy of interferer `i` at receiver `X`. The two integrals
//! reduce by partial fractions to
//!
//! ```text
//! J1(L) = e^{KL} E1(K (1 + L)),  J2(L) = e^{KL} E2(K (1 + L)) / (1 + L)
//! I2 = (J1(L_B) - J1(L_E)) / (L_E - L_B)
//! I1 = (I2 - J2(L_E)) / (L_E - L_B)
//! ```
//!
//! For close poles the differences cancel, so once `|L_B - L_E|` drops
//! below [`NEAR_POLE_SERIES`] times `1 + L_E` the integrals are summed as a
//! series in `h = L_B - L_E` instead:
//!
//! ```text
//! e^K I2 = sum_n (-h)^n J_{n+2},  e^K I1 = sum_n (-h)^n J_{n+3}
//! J_m    = e^z E_m(z) / (1 + L_E)^{m-1},  z = K (1 + L_E)
//! ```
//!
//! All `e^{...}` factors are fused: every term carries `e^{-K}` and the
//! prefactor `e^{1/g_B + 1/g_E}`, whose product is `e^{-(rho - 1)/g_B} <= 1`.
//! `J1` and `J2` are then evaluated through the scaled `e^z E_n(z)`.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SopError};
use crate::quadrature::{integral_i1_scaled, integral_i2_scaled};
use crate::scenario::{Scenario, SecrecyTarget, Side};
use crate::special::{
    expint_e1_scaled, expint_e2_scaled, expint_en_scaled, hypoexp_coefficients, separate_poles,
    XiCoefficients,
};

/// Band outside `[0, 1]` tolerated before a raw probability is treated as a bug.
pub const RANGE_SANITY_BAND: f64 = 1e-9;

/// Largest rounding error bound accepted from the double sum.
pub const CONDITION_LIMIT: f64 = 1e-7;

/// Default relative distance under which a pole pair `(L_Bi, L_Ej)` is
/// integrated numerically.
pub const DEFAULT_PAIR_TOLERANCE: f64 = 1e-7;

/// Relative pole gap `|L_B - L_E| / (1 + L_E)` below which the auxiliary
/// integrals switch from differences to the series in the gap.
pub const NEAR_POLE_SERIES: f64 = 0.2;

/// How an outage probability was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ClosedForm,
    ClosedFormWithFallback,
    Quadrature,
    MonteCarlo,
    BaselineNoInterference,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::ClosedForm => "closed_form",
            Method::ClosedFormWithFallback => "closed_form_with_fallback",
            Method::Quadrature => "quadrature",
            Method::MonteCarlo => "monte_carlo",
            Method::BaselineNoInterference => "baseline_no_interference",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SopResult {
    pub value: f64,
    pub method: Method,
    /// `(i, j)` pairs integrated numerically instead of in closed form.
    pub fallback_pairs: Vec<(usize, usize)>,
    /// Confidence half-width (Monte Carlo) or quadrature error estimate.
    pub uncertainty: Option<f64>,
}

/// Clamps `raw` into `[0, 1]`, refusing values beyond [`RANGE_SANITY_BAND`].
pub fn checked_probability(raw: f64) -> Result<f64> {
    if !(-RANGE_SANITY_BAND..=1.0 + RANGE_SANITY_BAND).contains(&raw) {
        return Err(SopError::OutOfRange { raw });
    }
    Ok(raw.clamp(0.0, 1.0))
}

/// Mean interference energies at `side`, separated if they coincide, with
/// their hypoexponential weights. The flag reports whether jitter was applied.
pub fn interference_poles(s: &Scenario, side: Side) -> Result<(Vec<f64>, XiCoefficients, bool)> {
    if s.m() == 0 {
        return Err(SopError::NoInterferers);
    }
    let mut b = s.interference_means(side);
    let jittered = separate_poles(&mut b);
    let xi = hypoexp_coefficients(&b)?;
    Ok((b, xi, jittered))
}

#[derive(Debug, Clone)]
pub struct ClosedFormTerms {
    pub gamma_tilde_b: f64,
    pub gamma_tilde_e: f64,
    pub k_const: f64,
    /// `2^{r_s}`.
    pub rate_factor: f64,
    pub b_b: Vec<f64>,
    pub b_e: Vec<f64>,
    pub l_b: Vec<f64>,
    pub l_e: Vec<f64>,
    pub xi_b: XiCoefficients,
    pub xi_e: XiCoefficients,
    pub jittered: bool,
}

pub fn build_terms(s: &Scenario, t: &SecrecyTarget) -> Result<ClosedFormTerms> {
    let (b_b, xi_b, jb) = interference_poles(s, Side::Bob)?;
    let (b_e, xi_e, je) = interference_poles(s, Side::Eve)?;
    let es = s.es_lin();
    let loss_b = s.main_path_loss(Side::Bob);
    let loss_e = s.main_path_loss(Side::Eve);
    let rate = t.rate_factor();
    let gamma_tilde_b = s.gamma_tilde(Side::Bob);
    let gamma_tilde_e = s.gamma_tilde(Side::Eve);
    let k_const = rate / gamma_tilde_b + 1.0 / gamma_tilde_e;
    // written as ratio minus one so L + 1 > 0 survives rounding
    let l_b: Vec<f64> = b_b
        .iter()
        .map(|&b| (es / (loss_b * b) - 1.0) / rate)
        .collect();
    let l_e: Vec<f64> = b_e.iter().map(|&b| es / (loss_e * b) - 1.0).collect();
    debug_assert!(l_b.iter().chain(&l_e).all(|l| l + 1.0 > 0.0));
    if !(k_const > 0.0 && k_const.is_finite()) {
        return Err(SopError::NumericalBreakdown {
            i: 0,
            j: 0,
            detail: format!("K = {k_const}"),
        });
    }
    Ok(ClosedFormTerms {
        gamma_tilde_b,
        gamma_tilde_e,
        k_const,
        rate_factor: rate,
        b_b,
        b_e,
        l_b,
        l_e,
        xi_b,
        xi_e,
        jittered: jb || je,
    })
}

#[derive(Debug, Clone, Copy)]
pub struct ClosedFormOptions {
    /// Pairs with `|L_Bi - L_Ej| < pair_tolerance * max(1, |L_Bi|)` are
    /// integrated numerically.
    pub pair_tolerance: f64,
}

impl Default for ClosedFormOptions {
    fn default() -> Self {
        Self {
            pair_tolerance: DEFAULT_PAIR_TOLERANCE,
        }
    }
}

/// `e^K I1` and `e^K I2` in closed form.
pub fn aux_integrals_closed(l_b: f64, l_e: f64, k: f64) -> Result<(f64, f64)> {
    let gap = l_e - l_b;
    if gap.abs() < NEAR_POLE_SERIES * (1.0 + l_e) {
        return aux_integrals_series(l_b, l_e, k);
    }
    let z_b = k * (1.0 + l_b);
    let z_e = k * (1.0 + l_e);
    let j1_b = expint_e1_scaled(z_b)?;
    let j1_e = expint_e1_scaled(z_e)?;
    let j2_e = expint_e2_scaled(z_e)? / (1.0 + l_e);
    let i2 = (j1_b - j1_e) / gap;
    let i1 = (i2 - j2_e) / gap;
    Ok((i1, i2))
}

fn aux_integrals_series(l_b: f64, l_e: f64, k: f64) -> Result<(f64, f64)> {
    let scale = 1.0 + l_e;
    let z = k * scale;
    let q = (l_e - l_b) / scale;
    let (mut i1, mut i2) = (0.0, 0.0);
    let mut qn = 1.0;
    let mut e_next = expint_en_scaled(2, z)?;
    for n in 0..200u32 {
        let e2 = e_next;
        e_next = expint_en_scaled(n + 3, z)?;
        let (t1, t2) = (qn * e_next, qn * e2);
        i1 += t1;
        i2 += t2;
        if t1.abs() <= f64::EPSILON * 0.25 * i1.abs() && t2.abs() <= f64::EPSILON * 0.25 * i2.abs()
        {
            break;
        }
        qn *= q;
    }
    Ok((i1 / (scale * scale), i2 / scale))
}

impl ClosedFormTerms {
    pub fn m(&self) -> usize {
        self.l_b.len()
    }

    fn near_pair(&self, i: usize, j: usize, opts: &ClosedFormOptions) -> bool {
        let (a, c) = (self.l_b[i], self.l_e[j]);
        (a - c).abs() < opts.pair_tolerance * 1f64.max(a.abs())
    }

    /// Contribution of pair `(i, j)` to the double sum and whether it was integrated numerically.
    fn pair_term(&self, i: usize, j: usize, opts: &ClosedFormOptions) -> Result<(f64, bool)> {
        let (a, c, k) = (self.l_b[i], self.l_e[j], self.k_const);
        for (l, which) in [(a, "L_B"), (c, "L_E")] {
            if !(k * (1.0 + l) > 0.0) {
                return Err(SopError::NumericalBreakdown {
                    i,
                    j,
                    detail: format!(
                        "non-negative Ei argument: -K(1+{which}) with K={k}, {which}={l}"
                    ),
                });
            }
        }
        let fallback = self.near_pair(i, j, opts);
        let (i1, i2) = if fallback {
            (integral_i1_scaled(a, c, k)?, integral_i2_scaled(a, c, k)?)
        } else {
            aux_integrals_closed(a, c, k)?
        };
        let weight = self.xi_b[i] * self.xi_e[j] * (a + 1.0 / self.rate_factor) * (c + 1.0);
        let term = weight * (i1 + i2 / self.gamma_tilde_e);
        if !term.is_finite() {
            return Err(SopError::NumericalBreakdown {
                i,
                j,
                detail: format!(
                    "term {term} from K={k}, L_B={a}, L_E={c}, e^K I1={i1}, e^K I2={i2}"
                ),
            });
        }
        Ok((term, fallback))
    }

    /// Unclamped outage probability plus the pairs that used quadrature.
    pub fn evaluate_raw(&self, opts: &ClosedFormOptions) -> Result<(f64, Vec<(usize, usize)>)> {
        let mut sum = 0.0;
        let mut magnitude = 0.0;
        let mut fallbacks = Vec::new();
        for i in 0..self.m() {
            for j in 0..self.m() {
                let (term, fb) = self.pair_term(i, j, opts)?;
                sum += term;
                magnitude += term.abs();
                if fb {
                    fallbacks.push((i, j));
                }
            }
        }
        let envelope = (-(self.rate_factor - 1.0) / self.gamma_tilde_b).exp();
        // Xi weights of nearly coincident means are huge and alternate in sign
        let error_bound = 16.0 * (self.m() * self.m()) as f64 * f64::EPSILON * envelope * magnitude;
        if error_bound > CONDITION_LIMIT {
            return Err(SopError::IllConditioned {
                magnitude: envelope * magnitude,
                error_bound,
            });
        }
        Ok((1.0 - envelope * sum, fallbacks))
    }
}

/// Outage probability from the closed form. Scenarios without interferers
/// go to [`sop_no_interference`].
pub fn sop_closed_form(s: &Scenario, t: &SecrecyTarget) -> Result<SopResult> {
    sop_closed_form_with(s, t, &ClosedFormOptions::default())
}

pub fn sop_closed_form_with(
    s: &Scenario,
    t: &SecrecyTarget,
    opts: &ClosedFormOptions,
) -> Result<SopResult> {
    if s.m() == 0 {
        return sop_no_interference(s.gamma_tilde(Side::Bob), s.gamma_tilde(Side::Eve), t);
    }
    let terms = build_terms(s, t)?;
    let (raw, fallback_pairs) = terms.evaluate_raw(opts)?;
    let method = if fallback_pairs.is_empty() {
        Method::ClosedForm
    } else {
        Method::ClosedFormWithFallback
    };
    Ok(SopResult {
        value: checked_probability(raw)?,
        method,
        fallback_pairs,
        uncertainty: None,
    })
}

/// Rayleigh wiretap outage probability without interference.
pub fn sop_no_interference(
    gamma_tilde_b: f64,
    gamma_tilde_e: f64,
    t: &SecrecyTarget,
) -> Result<SopResult> {
    if !(gamma_tilde_b > 0.0 && gamma_tilde_e >= 0.0) {
        return Err(SopError::InvalidScenario(format!(
            "average SNRs must be positive, got {gamma_tilde_b} and {gamma_tilde_e}"
        )));
    }
    let rate = t.rate_factor();
    let raw = 1.0
        - gamma_tilde_b / (gamma_tilde_b + rate * gamma_tilde_e)
            * (-(rate - 1.0) / gamma_tilde_b).exp();
    Ok(SopResult {
        value: checked_probability(raw)?,
        method: Method::BaselineNoInterference,
        fallback_pairs: Vec::new(),
        uncertainty: None,
    })
}
