//! TOML scenario and sweep files.
//!
//! Scenario file:
//!
//! ```toml
//! es_db = 40.0            # E_s / N0 in dB
//! esi_db = 15.0           # shared E_si / N0 in dB, or one value per interferer
//! alpha = 3.0
//! n0_mode = "normalized"  # or "explicit" together with `n0 = <value>`
//! d_b = 2.5
//! d_e = 25.0
//! r_s = [0.5, 1.0, 2.0]   # scalar or list, bit/s/Hz
//!
//! # interferer geometry: explicit (distance to Bob, distance to Eve) pairs ...
//! interferers = [[10.0, 15.0], [20.0, 10.0], [25.0, 5.0]]
//! # ... or a collinear block
//! # [collinear]
//! # m = 3
//! # first = 15.0
//! # step = 1.0
//! ```
//!
//! Sweep file:
//!
//! ```toml
//! methods = ["closed_form", "quadrature"]
//! trials = 100000
//! seed = 42
//! pair_tolerance = 1e-7
//!
//! [scenario]
//! # scenario keys as above; the first r_s is the base value
//!
//! [axis]
//! param = "es_db"         # es_db | esi_db | alpha | r_s | d_e | m_count
//! start = 0.0
//! stop = 50.0
//! step = 2.0
//!
//! [curves]                # optional, one list per parameter
//! r_s = [0.5, 1.0]
//! esi_db = [5.0, 35.0]
//! ```
//!
//! Unknown keys are rejected everywhere.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;

use crate::analytic::DEFAULT_PAIR_TOLERANCE;
use crate::error::{Result, SopError};
use crate::scenario::{Geometry, InterfererLink, Scenario, SecrecyTarget};
use crate::sweep::{AxisRange, CurveGrid, GeometrySpec, MethodKind, Param, PointParams, SweepSpec};

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany {
    One(f64),
    Many(Vec<f64>),
}

impl OneOrMany {
    pub fn to_vec(&self) -> Vec<f64> {
        match self {
            OneOrMany::One(v) => vec![*v],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum N0Mode {
    #[default]
    Normalized,
    Explicit,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CollinearConfig {
    pub m: usize,
    pub first: f64,
    pub step: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub es_db: f64,
    pub esi_db: Option<OneOrMany>,
    pub alpha: f64,
    #[serde(default)]
    pub n0_mode: N0Mode,
    pub n0: Option<f64>,
    pub d_b: f64,
    pub d_e: f64,
    pub interferers: Option<Vec<[f64; 2]>>,
    pub collinear: Option<CollinearConfig>,
    pub r_s: Option<OneOrMany>,
}

impl ScenarioConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| SopError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&read(path)?)
    }

    fn n0(&self) -> Result<f64> {
        match (self.n0_mode, self.n0) {
            (N0Mode::Normalized, None) => Ok(1.0),
            (N0Mode::Normalized, Some(_)) => Err(SopError::Config(
                "`n0` requires n0_mode = \"explicit\"".into(),
            )),
            (N0Mode::Explicit, Some(v)) => Ok(v),
            (N0Mode::Explicit, None) => Err(SopError::Config(
                "n0_mode = \"explicit\" requires `n0`".into(),
            )),
        }
    }

    pub fn geometry_spec(&self) -> Result<GeometrySpec> {
        match (&self.interferers, &self.collinear) {
            (Some(_), Some(_)) => Err(SopError::Config(
                "give either `interferers` or `[collinear]`, not both".into(),
            )),
            (None, Some(c)) => Ok(GeometrySpec::Collinear {
                d_b: self.d_b,
                d_e: self.d_e,
                m: c.m,
                first: c.first,
                step: c.step,
            }),
            (pairs, None) => {
                let links = pairs
                    .iter()
                    .flatten()
                    .map(|&[d_bi, d_ei]| InterfererLink { d_bi, d_ei })
                    .collect();
                Ok(GeometrySpec::Explicit(Geometry::new(
                    self.d_b, self.d_e, links,
                )?))
            }
        }
    }

    pub fn targets(&self) -> Result<Vec<SecrecyTarget>> {
        let list = self
            .r_s
            .as_ref()
            .map(OneOrMany::to_vec)
            .unwrap_or_else(|| vec![1.0]);
        if list.is_empty() {
            return Err(SopError::Config("`r_s` list is empty".into()));
        }
        list.into_iter().map(SecrecyTarget::new).collect()
    }

    /// Parameters of the first secrecy target.
    pub fn point_params(&self) -> Result<PointParams> {
        let esi_db = self
            .esi_db
            .as_ref()
            .map(OneOrMany::to_vec)
            .unwrap_or_default();
        Ok(PointParams {
            es_db: self.es_db,
            esi_db,
            alpha: self.alpha,
            r_s: self.targets()?[0].r_s(),
            n0: self.n0()?,
            geometry: self.geometry_spec()?,
        })
    }

    pub fn scenario(&self) -> Result<Scenario> {
        let p = self.point_params()?;
        if p.esi_db.is_empty() && p.geometry.resolve()?.m() > 0 {
            return Err(SopError::Config(
                "`esi_db` is required when interferers are present".into(),
            ));
        }
        p.scenario()
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisConfig {
    pub param: String,
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub methods: Vec<String>,
    pub trials: Option<u64>,
    pub seed: Option<u64>,
    pub pair_tolerance: Option<f64>,
    pub scenario: ScenarioConfig,
    pub axis: AxisConfig,
    #[serde(default)]
    pub curves: BTreeMap<String, OneOrMany>,
}

impl SweepConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| SopError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&read(path)?)
    }

    pub fn to_spec(&self, name: &str) -> Result<SweepSpec> {
        let methods = self
            .methods
            .iter()
            .map(|m| MethodKind::parse(m))
            .collect::<Result<Vec<_>>>()?;
        let mut curves = CurveGrid::default();
        for (k, v) in &self.curves {
            curves.set(Param::parse(k)?, v.to_vec());
        }
        let spec = SweepSpec {
            name: name.to_string(),
            base: self.scenario.point_params()?,
            axis: Param::parse(&self.axis.param)?,
            range: AxisRange::new(self.axis.start, self.axis.stop, self.axis.step),
            curves,
            methods,
            mc_trials: self.trials.unwrap_or(100_000),
            seed: self.seed.unwrap_or(0),
            pair_tolerance: self.pair_tolerance.unwrap_or(DEFAULT_PAIR_TOLERANCE),
        };
        spec.validate()?;
        Ok(spec)
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| SopError::Io {
        path: path.to_path_buf(),
        source,
    })
}
