//! Exponential integrals and hypoexponential partial-fraction weights.
//!
//! `E1` is evaluated by its power series for `x <= 1` and by the modified
//! Lentz continued fraction for `x > 1`. The continued fraction directly
//! yields `e^x E_n(x)`, which is what the closed-form engine consumes: the
//! products `e^{LK} Ei(-(L+1)K)` are always formed as `e^{-K} e^{z} E1(z)`.

use crate::error::{Result, SopError};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const SERIES_LIMIT: f64 = 1.0;
const MAX_ITER: usize = 10_000;

/// Minimum pairwise relative separation accepted by [`hypoexp_coefficients`].
pub const XI_SEPARATION: f64 = 1e-9;

/// Relative jitter applied by [`separate_poles`] to coincident means.
pub const POLE_JITTER: f64 = 1e-6;

/// `sum_{k>=1} (-1)^{k+1} x^k / (k k!)`, so that `E1(x) = -gamma - ln x + S(x)`.
fn e1_series_tail(x: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 0.0;
    for k in 1..MAX_ITER {
        let kf = k as f64;
        term *= -x / kf;
        let contrib = -term / kf;
        sum += contrib;
        if contrib.abs() <= f64::EPSILON * 0.25 * sum.abs() {
            break;
        }
    }
    sum
}

/// `e^x E_n(x)` by continued fraction, valid for `x > 1` (n >= 1).
fn en_scaled_cf(n: u32, x: f64) -> f64 {
    let nm1 = f64::from(n - 1);
    let tiny = f64::MIN_POSITIVE / f64::EPSILON;
    let mut b = x + f64::from(n);
    let mut c = 1.0 / tiny;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..MAX_ITER {
        let fi = i as f64;
        let a = -fi * (nm1 + fi);
        b += 2.0;
        d = 1.0 / (a * d + b);
        c = b + a / c;
        let del = c * d;
        h *= del;
        if (del - 1.0).abs() <= f64::EPSILON {
            break;
        }
    }
    h
}

/// Exponential integral `E1(x)` for `x > 0`.
pub fn expint_e1(x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(SopError::Domain { func: "E1", x });
    }
    if x <= SERIES_LIMIT {
        Ok(-EULER_GAMMA - x.ln() + e1_series_tail(x))
    } else {
        Ok(en_scaled_cf(1, x) * (-x).exp())
    }
}

/// Exponentially scaled `e^x E1(x)` for `x > 0`; finite up to `f64::MAX`.
pub fn expint_e1_scaled(x: f64) -> Result<f64> {
    if !(x > 0.0) || x.is_nan() {
        return Err(SopError::Domain {
            func: "scaled E1",
            x,
        });
    }
    if x <= SERIES_LIMIT {
        Ok(x.exp() * (-EULER_GAMMA - x.ln() + e1_series_tail(x)))
    } else if x > 1e150 {
        // continued fraction squares b; use the asymptotic series instead
        Ok((1.0 - 1.0 / x + 2.0 / (x * x)) / x)
    } else {
        Ok(en_scaled_cf(1, x))
    }
}

/// Exponentially scaled `e^x E2(x)` for `x > 0`.
///
/// For small arguments this uses `E2(x) = e^{-x} - x E1(x)`; above the
/// switchover the continued fraction avoids the cancellation that identity
/// suffers for large `x`.
pub fn expint_e2_scaled(x: f64) -> Result<f64> {
    if !(x > 0.0) || x.is_nan() {
        return Err(SopError::Domain {
            func: "scaled E2",
            x,
        });
    }
    if x <= SERIES_LIMIT {
        Ok(1.0 - x * expint_e1_scaled(x)?)
    } else if x > 1e150 {
        Ok((1.0 - 2.0 / x + 6.0 / (x * x)) / x)
    } else {
        Ok(en_scaled_cf(2, x))
    }
}

/// Exponentially scaled `e^x E_n(x)` for `n >= 1` and `x > 0`.
pub fn expint_en_scaled(n: u32, x: f64) -> Result<f64> {
    match n {
        0 => {
            return Err(SopError::Domain {
                func: "scaled E_n (n)",
                x: 0.0,
            })
        }
        1 => return expint_e1_scaled(x),
        2 => return expint_e2_scaled(x),
        _ => {}
    }
    if !(x > 0.0) || x.is_nan() {
        return Err(SopError::Domain {
            func: "scaled E_n",
            x,
        });
    }
    let nf = f64::from(n);
    if x <= SERIES_LIMIT {
        let nm1 = n - 1;
        let mut sum = 1.0 / f64::from(nm1);
        let mut fact = 1.0;
        for i in 1..MAX_ITER {
            fact *= -x / i as f64;
            let del = if i as u32 == nm1 {
                let psi = -EULER_GAMMA + (1..=nm1).map(|k| 1.0 / f64::from(k)).sum::<f64>();
                fact * (-x.ln() + psi)
            } else {
                -fact / (i as f64 - f64::from(nm1))
            };
            sum += del;
            if i as u32 > nm1 && del.abs() <= f64::EPSILON * 0.25 * sum.abs() {
                break;
            }
        }
        Ok(x.exp() * sum)
    } else if x > 1e150 {
        Ok((1.0 - nf / x + nf * (nf + 1.0) / (x * x)) / x)
    } else {
        Ok(en_scaled_cf(n, x))
    }
}

/// Exponential integral `Ei(x)` for negative arguments, `Ei(x) = -E1(-x)`.
pub fn expint_ei(x: f64) -> Result<f64> {
    if !(x < 0.0) {
        return Err(SopError::Domain { func: "Ei", x });
    }
    Ok(-expint_e1(-x)?)
}

/// Partial-fraction weights of a hypoexponential density.
///
/// The density of `sum_i w_i`, with `w_i` independent exponentials of mean
/// `b_i`, is `sum_i xi_i / b_i * exp(-x / b_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct XiCoefficients {
    xi: Vec<f64>,
}

impl XiCoefficients {
    pub fn as_slice(&self) -> &[f64] {
        &self.xi
    }

    pub fn len(&self) -> usize {
        self.xi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xi.is_empty()
    }

    pub fn sum(&self) -> f64 {
        self.xi.iter().sum()
    }
}

impl std::ops::Index<usize> for XiCoefficients {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.xi[i]
    }
}

/// `xi_i = prod_{j != i} b_i / (b_i - b_j)` for pairwise distinct positive means.
pub fn hypoexp_coefficients(b: &[f64]) -> Result<XiCoefficients> {
    if b.is_empty() {
        return Err(SopError::NoInterferers);
    }
    if let Some(&bad) = b.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
        return Err(SopError::InvalidScenario(format!(
            "hypoexponential mean must be > 0, got {bad}"
        )));
    }
    for i in 0..b.len() {
        for j in (i + 1)..b.len() {
            if (b[i] - b[j]).abs() <= XI_SEPARATION * b[i].max(b[j]) {
                return Err(SopError::DegenerateCoefficients {
                    i,
                    j,
                    b_i: b[i],
                    b_j: b[j],
                });
            }
        }
    }
    let xi = (0..b.len())
        .map(|i| {
            b.iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, &bj)| b[i] / (b[i] - bj))
                .product()
        })
        .collect();
    Ok(XiCoefficients { xi })
}

/// Spreads coincident means apart so [`hypoexp_coefficients`] accepts them.
///
/// Each mean that sits within [`POLE_JITTER`] (relative) of an earlier one is
/// scaled by `1 + k * POLE_JITTER`, `k` being the number of earlier clashes.
/// Returns `true` when anything moved.
pub fn separate_poles(b: &mut [f64]) -> bool {
    let mut moved = false;
    for i in 1..b.len() {
        let mut k = 0u32;
        while (0..i).any(|j| (b[i] - b[j]).abs() <= 0.5 * POLE_JITTER * b[i].max(b[j])) {
            k += 1;
            b[i] *= 1.0 + POLE_JITTER;
            moved = true;
            if k > 1_000 {
                break;
            }
        }
    }
    if moved {
        log::warn!("interference means coincide; applied relative jitter of {POLE_JITTER:e}");
    }
    moved
}
