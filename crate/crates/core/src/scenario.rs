//! Physical description of the downlink wiretap system.
//!
//! A base station (Alice) serves a legitimate receiver (Bob) while an
//! eavesdropper (Eve) listens, and `M` co-channel base stations interfere
//! with both receivers. Every link experiences Rayleigh fading and a
//! distance-dependent gain `1 / (1 + d^alpha)`.
//!
//! Energies are stored on a linear scale. The usual entry point is
//! [`Scenario::from_db`], which takes energies as dB over the noise level
//! and fixes `n0 = 1`.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SopError};

/// Converts a dB ratio to a linear ratio.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Converts a linear ratio to dB.
pub fn linear_to_db(lin: f64) -> f64 {
    10.0 * lin.log10()
}

/// Large-scale gain `1 + d^alpha` dividing the received energy over a link of length `d`.
#[inline]
pub fn path_loss(d: f64, alpha: f64) -> f64 {
    1.0 + d.powf(alpha)
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(SopError::InvalidScenario(format!(
            "{name} must be finite and > 0, got {v}"
        )))
    }
}

/// One co-channel interferer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interferer {
    esi_lin: f64,
    d_bi: f64,
    d_ei: f64,
}

impl Interferer {
    pub fn new(esi_lin: f64, d_bi: f64, d_ei: f64) -> Result<Self> {
        check_positive("interferer energy", esi_lin)?;
        check_positive("interferer-Bob distance", d_bi)?;
        check_positive("interferer-Eve distance", d_ei)?;
        Ok(Self {
            esi_lin,
            d_bi,
            d_ei,
        })
    }

    pub fn esi_lin(&self) -> f64 {
        self.esi_lin
    }

    pub fn d_bi(&self) -> f64 {
        self.d_bi
    }

    pub fn d_ei(&self) -> f64 {
        self.d_ei
    }
}

/// Receiver selector shared by the engines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    Bob,
    Eve,
}

/// Distances of one interferer to Bob and to Eve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterfererLink {
    pub d_bi: f64,
    pub d_ei: f64,
}

/// Node placement without any power information.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Geometry {
    pub d_b: f64,
    pub d_e: f64,
    pub links: Vec<InterfererLink>,
}

impl Geometry {
    pub fn new(d_b: f64, d_e: f64, links: Vec<InterfererLink>) -> Result<Self> {
        check_positive("d_b", d_b)?;
        check_positive("d_e", d_e)?;
        for (k, l) in links.iter().enumerate() {
            check_positive(&format!("interferer {} distance to Bob", k + 1), l.d_bi)?;
            check_positive(&format!("interferer {} distance to Eve", k + 1), l.d_ei)?;
        }
        Ok(Self { d_b, d_e, links })
    }

    /// Reference placement: Bob at 2.5, Eve at 25, three interferers at
    /// distances (10, 20, 25) from Bob and (15, 10, 5) from Eve.
    pub fn reference() -> Self {
        let links = [(10.0, 15.0), (20.0, 10.0), (25.0, 5.0)]
            .into_iter()
            .map(|(d_bi, d_ei)| InterfererLink { d_bi, d_ei })
            .collect();
        Self {
            d_b: 2.5,
            d_e: 25.0,
            links,
        }
    }

    /// All nodes on one ray leaving Alice. Interferer `k` (1-based) sits at
    /// `first - (k - 1) * step` from Alice.
    pub fn collinear(d_b: f64, d_e: f64, m: usize, first: f64, step: f64) -> Result<Self> {
        if !first.is_finite() || !step.is_finite() {
            return Err(SopError::InvalidScenario(format!(
                "collinear placement needs finite first/step, got {first}/{step}"
            )));
        }
        let links = (0..m)
            .map(|k| {
                let a = first - k as f64 * step;
                InterfererLink {
                    d_bi: (a - d_b).abs(),
                    d_ei: (a - d_e).abs(),
                }
            })
            .collect();
        Self::new(d_b, d_e, links)
    }

    pub fn m(&self) -> usize {
        self.links.len()
    }
}

/// Full system description consumed by every engine.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    es_lin: f64,
    n0: f64,
    alpha: f64,
    d_b: f64,
    d_e: f64,
    interferers: Vec<Interferer>,
}

impl Scenario {
    pub fn new(
        es_lin: f64,
        n0: f64,
        alpha: f64,
        d_b: f64,
        d_e: f64,
        interferers: Vec<Interferer>,
    ) -> Result<Self> {
        check_positive("es_lin", es_lin)?;
        check_positive("n0", n0)?;
        check_positive("d_b", d_b)?;
        check_positive("d_e", d_e)?;
        if !(alpha.is_finite() && alpha >= 0.0) {
            return Err(SopError::InvalidScenario(format!(
                "alpha must be finite and >= 0, got {alpha}"
            )));
        }
        Ok(Self {
            es_lin,
            n0,
            alpha,
            d_b,
            d_e,
            interferers,
        })
    }

    /// Builds a scenario from energies in dB over `n0 = 1`.
    ///
    /// `esi_db` holds either a single value shared by every interferer or one
    /// value per interferer, in geometry order.
    pub fn from_db(es_db: f64, esi_db: &[f64], alpha: f64, geometry: &Geometry) -> Result<Self> {
        Self::from_db_with_n0(es_db, esi_db, alpha, geometry, 1.0)
    }

    pub fn from_db_with_n0(
        es_db: f64,
        esi_db: &[f64],
        alpha: f64,
        geometry: &Geometry,
        n0: f64,
    ) -> Result<Self> {
        if !es_db.is_finite() {
            return Err(SopError::InvalidScenario(format!(
                "es_db must be finite, got {es_db}"
            )));
        }
        if let Some(bad) = esi_db.iter().find(|v| !v.is_finite()) {
            return Err(SopError::InvalidScenario(format!(
                "esi_db must be finite, got {bad}"
            )));
        }
        let m = geometry.m();
        let per_interferer: Vec<f64> = match esi_db.len() {
            1 => vec![esi_db[0]; m],
            n if n == m => esi_db.to_vec(),
            0 if m == 0 => Vec::new(),
            n => {
                return Err(SopError::InvalidScenario(format!(
                    "esi_db has {n} entries but the geometry has {m} interferers"
                )))
            }
        };
        let interferers = geometry
            .links
            .iter()
            .zip(&per_interferer)
            .map(|(l, &db)| Interferer::new(db_to_linear(db) * n0, l.d_bi, l.d_ei))
            .collect::<Result<Vec<_>>>()?;
        Self::new(
            db_to_linear(es_db) * n0,
            n0,
            alpha,
            geometry.d_b,
            geometry.d_e,
            interferers,
        )
    }

    pub fn es_lin(&self) -> f64 {
        self.es_lin
    }

    pub fn n0(&self) -> f64 {
        self.n0
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn d_b(&self) -> f64 {
        self.d_b
    }

    pub fn d_e(&self) -> f64 {
        self.d_e
    }

    pub fn interferers(&self) -> &[Interferer] {
        &self.interferers
    }

    pub fn m(&self) -> usize {
        self.interferers.len()
    }

    /// `E_s / N0` in dB.
    pub fn es_db(&self) -> f64 {
        linear_to_db(self.es_lin / self.n0)
    }

    pub fn esi_db(&self) -> Vec<f64> {
        self.interferers
            .iter()
            .map(|i| linear_to_db(i.esi_lin / self.n0))
            .collect()
    }

    /// `1 + d_X^alpha` for the Alice link to `side`.
    pub fn main_path_loss(&self, side: Side) -> f64 {
        match side {
            Side::Bob => path_loss(self.d_b, self.alpha),
            Side::Eve => path_loss(self.d_e, self.alpha),
        }
    }

    /// Average SNR of the Alice link to `side` without interference.
    pub fn gamma_tilde(&self, side: Side) -> f64 {
        self.es_lin / (self.main_path_loss(side) * self.n0)
    }

    /// Mean received interference energy of each interferer at `side`.
    pub fn interference_means(&self, side: Side) -> Vec<f64> {
        self.interferers
            .iter()
            .map(|i| {
                let d = match side {
                    Side::Bob => i.d_bi,
                    Side::Eve => i.d_ei,
                };
                i.esi_lin / path_loss(d, self.alpha)
            })
            .collect()
    }

    pub fn geometry(&self) -> Geometry {
        Geometry {
            d_b: self.d_b,
            d_e: self.d_e,
            links: self
                .interferers
                .iter()
                .map(|i| InterfererLink {
                    d_bi: i.d_bi,
                    d_ei: i.d_ei,
                })
                .collect(),
        }
    }
}

/// Reference placement with the caller's path-loss exponent and energies.
pub fn default_scenario(alpha: f64, es_db: f64, esi_db: f64) -> Result<Scenario> {
    Scenario::from_db(es_db, &[esi_db], alpha, &Geometry::reference())
}

/// Collinear placement with equal interferer energies.
#[allow(clippy::too_many_arguments)]
pub fn collinear_scenario(
    d_b: f64,
    d_e: f64,
    m: usize,
    first_interferer_dist: f64,
    step: f64,
    alpha: f64,
    es_db: f64,
    esi_db: f64,
) -> Result<Scenario> {
    let g = Geometry::collinear(d_b, d_e, m, first_interferer_dist, step)?;
    Scenario::from_db(es_db, &[esi_db], alpha, &g)
}

/// Target secrecy rate in bit/s/Hz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SecrecyTarget {
    r_s: f64,
}

impl SecrecyTarget {
    pub fn new(r_s: f64) -> Result<Self> {
        if r_s.is_finite() && r_s >= 0.0 {
            Ok(Self { r_s })
        } else {
            Err(SopError::InvalidTarget(r_s))
        }
    }

    pub fn r_s(&self) -> f64 {
        self.r_s
    }

    /// `2^r_s`, the SINR-ratio threshold.
    pub fn rate_factor(&self) -> f64 {
        self.r_s.exp2()
    }
}
