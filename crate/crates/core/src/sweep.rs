//! Parameter sweeps and the figure presets.
//!
//! A sweep varies one parameter along an axis for every curve of a curve
//! grid (the cartesian product of a few parameter lists), evaluates each
//! point with the requested engines and returns rows ordered by axis value,
//! then curve, then method.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::analytic::{
    sop_closed_form_with, sop_no_interference, ClosedFormOptions, SopResult, DEFAULT_PAIR_TOLERANCE,
};
use crate::error::{Result, SopError};
use crate::exec::Execution;
use crate::montecarlo::{derive_seed, estimate_sop_with};
use crate::quadrature::sop_quadrature;
use crate::scenario::{Geometry, Scenario, SecrecyTarget, Side};

/// Closed form vs quadrature disagreement that counts as a regression.
pub const REGRESSION_THRESHOLD: f64 = 1e-5;

/// Largest interferer count of the `fig5` preset: interferer 6 would sit on Eve.
pub const FIG5_MAX_M: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Param {
    EsDb,
    EsiDb,
    Alpha,
    #[serde(rename = "r_s")]
    Rs,
    #[serde(rename = "d_e")]
    De,
    #[serde(rename = "m_count", alias = "m")]
    M,
}

impl Param {
    pub fn name(self) -> &'static str {
        match self {
            Param::EsDb => "es_db",
            Param::EsiDb => "esi_db",
            Param::Alpha => "alpha",
            Param::Rs => "r_s",
            Param::De => "d_e",
            Param::M => "m_count",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "es_db" => Ok(Param::EsDb),
            "esi_db" => Ok(Param::EsiDb),
            "alpha" => Ok(Param::Alpha),
            "r_s" | "rs" => Ok(Param::Rs),
            "d_e" => Ok(Param::De),
            "m_count" | "m" => Ok(Param::M),
            other => Err(SopError::Config(format!(
                "unknown sweep parameter `{other}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodKind {
    ClosedForm,
    Quadrature,
    MonteCarlo,
}

impl MethodKind {
    pub fn name(self) -> &'static str {
        match self {
            MethodKind::ClosedForm => "closed_form",
            MethodKind::Quadrature => "quadrature",
            MethodKind::MonteCarlo => "monte_carlo",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "closed_form" | "closed" => Ok(MethodKind::ClosedForm),
            "quadrature" | "quad" => Ok(MethodKind::Quadrature),
            "monte_carlo" | "mc" => Ok(MethodKind::MonteCarlo),
            other => Err(SopError::Config(format!("unknown method `{other}`"))),
        }
    }
}

/// Interferer placement of a sweep point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum GeometrySpec {
    Explicit(Geometry),
    Collinear {
        d_b: f64,
        d_e: f64,
        m: usize,
        first: f64,
        step: f64,
    },
}

impl GeometrySpec {
    pub fn resolve(&self) -> Result<Geometry> {
        match *self {
            GeometrySpec::Explicit(ref g) => Geometry::new(g.d_b, g.d_e, g.links.clone()),
            GeometrySpec::Collinear {
                d_b,
                d_e,
                m,
                first,
                step,
            } => Geometry::collinear(d_b, d_e, m, first, step),
        }
    }
}

/// Every input of one evaluation, in the units the figures use.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointParams {
    pub es_db: f64,
    /// One shared value or one per interferer.
    pub esi_db: Vec<f64>,
    pub alpha: f64,
    pub r_s: f64,
    pub n0: f64,
    pub geometry: GeometrySpec,
}

impl PointParams {
    pub fn set(&mut self, param: Param, value: f64) -> Result<()> {
        match param {
            Param::EsDb => self.es_db = value,
            Param::EsiDb => self.esi_db = vec![value],
            Param::Alpha => self.alpha = value,
            Param::Rs => self.r_s = value,
            Param::De => match &mut self.geometry {
                GeometrySpec::Explicit(g) => g.d_e = value,
                GeometrySpec::Collinear { d_e, .. } => *d_e = value,
            },
            Param::M => {
                if !(value >= 0.0 && value.fract() == 0.0) {
                    return Err(SopError::Config(format!(
                        "interferer count must be a whole number, got {value}"
                    )));
                }
                match &mut self.geometry {
                    GeometrySpec::Collinear { m, .. } => *m = value as usize,
                    GeometrySpec::Explicit(_) => {
                        return Err(SopError::Config(
                            "varying the interferer count needs a collinear geometry".into(),
                        ))
                    }
                }
            }
        }
        Ok(())
    }

    pub fn scenario(&self) -> Result<Scenario> {
        let g = self.geometry.resolve()?;
        Scenario::from_db_with_n0(self.es_db, &self.esi_db, self.alpha, &g, self.n0)
    }

    pub fn target(&self) -> Result<SecrecyTarget> {
        SecrecyTarget::new(self.r_s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisRange {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl AxisRange {
    pub fn new(start: f64, stop: f64, step: f64) -> Self {
        Self { start, stop, step }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.start.is_finite() && self.stop.is_finite() && self.step.is_finite()) {
            return Err(SopError::Config("axis range must be finite".into()));
        }
        if !(self.step > 0.0) {
            return Err(SopError::Config(format!(
                "axis step must be > 0, got {}",
                self.step
            )));
        }
        if self.stop < self.start {
            return Err(SopError::Config(format!(
                "empty axis range {}..{}",
                self.start, self.stop
            )));
        }
        Ok(())
    }

    /// `start + k step` up to `stop`, inclusive of an endpoint within rounding.
    pub fn values(&self) -> Vec<f64> {
        let n = ((self.stop - self.start) / self.step + 1e-9).floor() as usize;
        (0..=n).map(|k| self.start + k as f64 * self.step).collect()
    }
}

/// Curves as the cartesian product of per-parameter value lists.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CurveGrid {
    pub dims: Vec<(Param, Vec<f64>)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    pub id: String,
    pub settings: Vec<(Param, f64)>,
}

impl CurveGrid {
    pub fn new(dims: Vec<(Param, Vec<f64>)>) -> Self {
        Self { dims }
    }

    /// Replaces the list of `param`, or appends it as a new dimension.
    pub fn set(&mut self, param: Param, values: Vec<f64>) {
        match self.dims.iter_mut().find(|(p, _)| *p == param) {
            Some(d) => d.1 = values,
            None => self.dims.push((param, values)),
        }
    }

    pub fn curves(&self) -> Vec<Curve> {
        let mut out = vec![Vec::new()];
        for (param, values) in &self.dims {
            out = out
                .into_iter()
                .flat_map(|prefix: Vec<(Param, f64)>| {
                    values.iter().map(move |&v| {
                        let mut c = prefix.clone();
                        c.push((*param, v));
                        c
                    })
                })
                .collect();
        }
        out.into_iter()
            .map(|settings| {
                let id = if settings.is_empty() {
                    "base".to_string()
                } else {
                    settings
                        .iter()
                        .map(|(p, v)| format!("{}={}", p.name(), v))
                        .collect::<Vec<_>>()
                        .join(";")
                };
                Curve { id, settings }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub name: String,
    pub base: PointParams,
    pub axis: Param,
    pub range: AxisRange,
    pub curves: CurveGrid,
    pub methods: Vec<MethodKind>,
    pub mc_trials: u64,
    pub seed: u64,
    pub pair_tolerance: f64,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        self.range.validate()?;
        if self.methods.is_empty() {
            return Err(SopError::Config("a sweep needs at least one method".into()));
        }
        if self.methods.contains(&MethodKind::MonteCarlo) && self.mc_trials == 0 {
            return Err(SopError::Config(
                "Monte Carlo needs at least one trial".into(),
            ));
        }
        if self
            .curves
            .dims
            .iter()
            .any(|(p, v)| v.is_empty() || *p == self.axis)
        {
            return Err(SopError::Config(
                "curve lists must be nonempty and must not repeat the axis".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub axis_value: f64,
    pub curve: String,
    pub method: MethodKind,
    pub sop: f64,
    pub uncertainty: Option<f64>,
    pub fallbacks: usize,
}

/// Cross-method agreement at one sweep point.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCheck {
    pub axis_value: f64,
    pub curve: String,
    pub max_discrepancy: f64,
    pub closed_vs_quadrature: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub axis: Param,
    pub rows: Vec<SweepRow>,
    pub checks: Vec<PointCheck>,
}

impl SweepTable {
    /// First point whose closed form and quadrature differ by more than `threshold`.
    pub fn regression(&self, threshold: f64) -> Option<&PointCheck> {
        self.checks
            .iter()
            .find(|c| c.closed_vs_quadrature.is_some_and(|d| d > threshold))
    }

    /// Values of one `(curve, method)` series in axis order.
    pub fn series(&self, curve: &str, method: MethodKind) -> Vec<(f64, f64)> {
        self.rows
            .iter()
            .filter(|r| r.curve == curve && r.method == method)
            .map(|r| (r.axis_value, r.sop))
            .collect()
    }

    pub fn curve_ids(&self) -> Vec<String> {
        let mut ids: Vec<String> = Vec::new();
        for r in &self.rows {
            if !ids.contains(&r.curve) {
                ids.push(r.curve.clone());
            }
        }
        ids
    }
}

/// Evaluates one point with one engine. Quadrature without interferers
/// falls back to the interference-free expression.
pub fn evaluate_method(
    method: MethodKind,
    s: &Scenario,
    t: &SecrecyTarget,
    pair_tolerance: f64,
    mc_trials: u64,
    mc_seed: u64,
    exec: Execution,
) -> Result<SopResult> {
    match method {
        MethodKind::ClosedForm => sop_closed_form_with(s, t, &ClosedFormOptions { pair_tolerance }),
        MethodKind::Quadrature if s.m() == 0 => {
            sop_no_interference(s.gamma_tilde(Side::Bob), s.gamma_tilde(Side::Eve), t)
        }
        MethodKind::Quadrature => sop_quadrature(s, t),
        MethodKind::MonteCarlo => {
            if mc_trials == 0 {
                return Err(SopError::Config(
                    "Monte Carlo needs at least one trial".into(),
                ));
            }
            Ok(estimate_sop_with(s, t, mc_trials, mc_seed, exec).to_result())
        }
    }
}

pub fn run_sweep(spec: &SweepSpec, exec: Execution) -> Result<SweepTable> {
    spec.validate()?;
    let axis_values = spec.range.values();
    let curves = spec.curves.curves();
    let n_jobs = axis_values.len() * curves.len();
    let points = exec.try_map(n_jobs, |job| {
        let (ai, ci) = (job / curves.len(), job % curves.len());
        let (x, curve) = (axis_values[ai], &curves[ci]);
        let at = || format!("{}={} curve {}", spec.axis.name(), x, curve.id);
        let wrap = |e: SopError| SopError::Sweep {
            point: at(),
            source: Box::new(e),
        };
        let mut p = spec.base.clone();
        for &(param, v) in &curve.settings {
            p.set(param, v).map_err(wrap)?;
        }
        p.set(spec.axis, x).map_err(wrap)?;
        let s = p.scenario().map_err(wrap)?;
        let t = p.target().map_err(wrap)?;
        spec.methods
            .iter()
            .map(|&m| {
                evaluate_method(
                    m,
                    &s,
                    &t,
                    spec.pair_tolerance,
                    spec.mc_trials,
                    derive_seed(spec.seed, job as u64),
                    exec,
                )
                .map(|r| (m, r))
                .map_err(wrap)
            })
            .collect::<Result<Vec<_>>>()
    })?;

    let mut rows = Vec::with_capacity(n_jobs * spec.methods.len());
    let mut checks = Vec::new();
    for (job, results) in points.into_iter().enumerate() {
        let x = axis_values[job / curves.len()];
        let curve = &curves[job % curves.len()].id;
        if results.len() >= 2 {
            let mut max_d = 0.0f64;
            for (a, ra) in results.iter().enumerate() {
                for rb in &results[a + 1..] {
                    max_d = max_d.max((ra.1.value - rb.1.value).abs());
                }
            }
            let find = |k: MethodKind| results.iter().find(|(m, _)| *m == k).map(|(_, r)| r.value);
            let cq = find(MethodKind::ClosedForm)
                .zip(find(MethodKind::Quadrature))
                .map(|(a, b)| (a - b).abs());
            checks.push(PointCheck {
                axis_value: x,
                curve: curve.clone(),
                max_discrepancy: max_d,
                closed_vs_quadrature: cq,
            });
        }
        for (m, r) in results {
            rows.push(SweepRow {
                axis_value: x,
                curve: curve.clone(),
                method: m,
                sop: r.value,
                uncertainty: r.uncertainty,
                fallbacks: r.fallback_pairs.len(),
            });
        }
    }
    Ok(SweepTable {
        axis: spec.axis,
        rows,
        checks,
    })
}

/// Twelve significant digits.
pub fn fmt_sig(v: f64) -> String {
    format!("{v:.11e}")
}

pub const CSV_HEADER: &str = "axis,curve,method,sop,uncertainty,fallbacks";

pub fn csv_string(table: &SweepTable) -> String {
    let mut out = String::new();
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in &table.rows {
        let unc = r.uncertainty.map(fmt_sig).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            fmt_sig(r.axis_value),
            r.curve,
            r.method.name(),
            fmt_sig(r.sop),
            unc,
            r.fallbacks
        );
    }
    out
}

pub fn emit_csv<W: Write>(table: &SweepTable, mut w: W) -> std::io::Result<()> {
    if table.rows.is_empty() {
        return Err(std::io::Error::new(
            std::io::ErrorKind::InvalidInput,
            "empty sweep table",
        ));
    }
    w.write_all(csv_string(table).as_bytes())?;
    w.flush()
}

pub fn emit_csv_file(table: &SweepTable, path: &Path) -> Result<()> {
    let io = |source| SopError::Io {
        path: path.to_path_buf(),
        source,
    };
    let f = std::fs::File::create(path).map_err(io)?;
    emit_csv(table, std::io::BufWriter::new(f)).map_err(io)
}

pub fn checks_csv_string(table: &SweepTable) -> String {
    let mut out = String::from("axis,curve,max_discrepancy,closed_vs_quadrature\n");
    for c in &table.checks {
        let cq = c.closed_vs_quadrature.map(fmt_sig).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{}",
            fmt_sig(c.axis_value),
            c.curve,
            fmt_sig(c.max_discrepancy),
            cq
        );
    }
    out
}

/// One gnuplot data block per `(curve, method)`, separated by two blank
/// lines so `index` selects them.
pub fn gnuplot_string(table: &SweepTable) -> String {
    let mut out = String::new();
    let mut first = true;
    for curve in table.curve_ids() {
        let mut methods: Vec<MethodKind> = Vec::new();
        for r in table.rows.iter().filter(|r| r.curve == curve) {
            if !methods.contains(&r.method) {
                methods.push(r.method);
            }
        }
        for m in methods {
            if !first {
                out.push_str("\n\n");
            }
            first = false;
            let _ = writeln!(out, "# curve={} method={}", curve, m.name());
            let _ = writeln!(out, "# {} sop uncertainty", table.axis.name());
            for r in table
                .rows
                .iter()
                .filter(|r| r.curve == curve && r.method == m)
            {
                let _ = writeln!(
                    out,
                    "{} {} {}",
                    fmt_sig(r.axis_value),
                    fmt_sig(r.sop),
                    fmt_sig(r.uncertainty.unwrap_or(0.0))
                );
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FigureId {
    Fig1,
    Fig2,
    Fig3,
    Fig4,
    Fig5,
}

impl std::str::FromStr for FigureId {
    type Err = SopError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fig1" | "1" => Ok(FigureId::Fig1),
            "fig2" | "2" => Ok(FigureId::Fig2),
            "fig3" | "3" => Ok(FigureId::Fig3),
            "fig4" | "4" => Ok(FigureId::Fig4),
            "fig5" | "5" => Ok(FigureId::Fig5),
            other => Err(SopError::Config(format!(
                "unknown figure `{other}` (expected fig1..fig5)"
            ))),
        }
    }
}

impl FigureId {
    pub fn name(self) -> &'static str {
        match self {
            FigureId::Fig1 => "fig1",
            FigureId::Fig2 => "fig2",
            FigureId::Fig3 => "fig3",
            FigureId::Fig4 => "fig4",
            FigureId::Fig5 => "fig5",
        }
    }
}

fn reference_base(alpha: f64, esi_db: f64) -> PointParams {
    PointParams {
        es_db: 30.0,
        esi_db: vec![esi_db],
        alpha,
        r_s: 1.0,
        n0: 1.0,
        geometry: GeometrySpec::Explicit(Geometry::reference()),
    }
}

/// Sweep configuration of each figure.
///
/// Curve lists not pinned down by the figure captions are best guesses and
/// can be replaced through [`CurveGrid::set`]:
///
/// | id   | axis              | curves                                  | fixed                         |
/// |------|-------------------|-----------------------------------------|-------------------------------|
/// | fig1 | es_db 0..50 / 2   | r_s {0.5,1,2} x esi_db {5,35}           | alpha 3                       |
/// | fig2 | r_s 0..5 / 0.25   | alpha {2,3,4} x es_db {20,30,40}        | esi_db 15                     |
/// | fig3 | esi_db -10..60 / 2.5 | r_s {0.5,1,2} x es_db {20,30,40}     | alpha 3                       |
/// | fig4 | d_e 1..20 / 1     | r_s {0.5,1,2} x es_db {20,30,40}        | esi_db 35, alpha 3            |
/// | fig5 | es_db 0..50 / 2   | m {1,2,3,4} x r_s {1,2}                 | esi_db 25, alpha 3, collinear |
///
/// fig1 to fig4 use the reference geometry; fig4 moves only Eve and keeps
/// the interferer distances. fig5 places everything on one ray with Bob at
/// 1 m, Eve at 10 m and interferers from 15 m inward in 1 m steps.
pub fn figure_preset(id: FigureId) -> SweepSpec {
    let all = vec![
        MethodKind::ClosedForm,
        MethodKind::Quadrature,
        MethodKind::MonteCarlo,
    ];
    let (base, axis, range, curves) = match id {
        FigureId::Fig1 => (
            reference_base(3.0, 15.0),
            Param::EsDb,
            AxisRange::new(0.0, 50.0, 2.0),
            CurveGrid::new(vec![
                (Param::Rs, vec![0.5, 1.0, 2.0]),
                (Param::EsiDb, vec![5.0, 35.0]),
            ]),
        ),
        FigureId::Fig2 => (
            reference_base(3.0, 15.0),
            Param::Rs,
            AxisRange::new(0.0, 5.0, 0.25),
            CurveGrid::new(vec![
                (Param::Alpha, vec![2.0, 3.0, 4.0]),
                (Param::EsDb, vec![20.0, 30.0, 40.0]),
            ]),
        ),
        FigureId::Fig3 => (
            reference_base(3.0, 15.0),
            Param::EsiDb,
            AxisRange::new(-10.0, 60.0, 2.5),
            CurveGrid::new(vec![
                (Param::Rs, vec![0.5, 1.0, 2.0]),
                (Param::EsDb, vec![20.0, 30.0, 40.0]),
            ]),
        ),
        FigureId::Fig4 => (
            reference_base(3.0, 35.0),
            Param::De,
            AxisRange::new(1.0, 20.0, 1.0),
            CurveGrid::new(vec![
                (Param::Rs, vec![0.5, 1.0, 2.0]),
                (Param::EsDb, vec![20.0, 30.0, 40.0]),
            ]),
        ),
        FigureId::Fig5 => (
            PointParams {
                es_db: 30.0,
                esi_db: vec![25.0],
                alpha: 3.0,
                r_s: 1.0,
                n0: 1.0,
                geometry: GeometrySpec::Collinear {
                    d_b: 1.0,
                    d_e: 10.0,
                    m: 1,
                    first: 15.0,
                    step: 1.0,
                },
            },
            Param::EsDb,
            AxisRange::new(0.0, 50.0, 2.0),
            CurveGrid::new(vec![
                (Param::M, vec![1.0, 2.0, 3.0, 4.0]),
                (Param::Rs, vec![1.0, 2.0]),
            ]),
        ),
    };
    SweepSpec {
        name: id.name().to_string(),
        base,
        axis,
        range,
        curves,
        methods: all,
        mc_trials: 100_000,
        seed: 0,
        pair_tolerance: DEFAULT_PAIR_TOLERANCE,
    }
}
