//! Parameter sweeps: throughput curves, BEP surfaces, iso-BEP contours,
//! and BEP-difference series.
//!
//! Surfaces are evaluated only on their grid. Cells are stored row-major
//! with the x axis as the outer index: cell `(i, j)` lives at
//! `values[i * y_points.len() + j]`.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calibration::{CalibrationSet, RatioSet};
use crate::error::{domain, Error, Result};
use crate::model::{csd_array_time, ssd_array_time, throughput, CsdProfile, HostProfile, SlowdownFactors};
use crate::solver::{bep_closed_form, s_normal, s_overload};

/// Points closer than this to `stop` are snapped onto it.
const AXIS_STOP_TOLERANCE: f64 = 1e-9;

pub const MAX_AXIS_POINTS: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AxisParameter {
    #[serde(alias = "r_tx")]
    RTxMultiplier,
    #[serde(alias = "r_comp")]
    RCompMultiplier,
    SdTx,
    SdComp,
    Cores,
    KLimit,
}

impl AxisParameter {
    pub fn as_str(&self) -> &'static str {
        match self {
            AxisParameter::RTxMultiplier => "r_tx_multiplier",
            AxisParameter::RCompMultiplier => "r_comp_multiplier",
            AxisParameter::SdTx => "sd_tx",
            AxisParameter::SdComp => "sd_comp",
            AxisParameter::Cores => "cores",
            AxisParameter::KLimit => "k_limit",
        }
    }

    fn is_integral(&self) -> bool {
        matches!(self, AxisParameter::Cores | AxisParameter::KLimit)
    }
}

impl fmt::Display for AxisParameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AxisParameter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "r_tx" | "r_tx_multiplier" => AxisParameter::RTxMultiplier,
            "r_comp" | "r_comp_multiplier" => AxisParameter::RCompMultiplier,
            "sd_tx" => AxisParameter::SdTx,
            "sd_comp" => AxisParameter::SdComp,
            "cores" => AxisParameter::Cores,
            "k_limit" => AxisParameter::KLimit,
            other => return Err(domain(format!("unknown axis parameter \"{other}\""))),
        })
    }
}

/// One sweep axis: a stepped range or an explicit list of values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawAxis", into = "RawAxis")]
pub struct AxisSpec {
    parameter: AxisParameter,
    range: AxisRange,
}

#[derive(Debug, Clone, PartialEq)]
enum AxisRange {
    Stepped { start: f64, stop: f64, step: f64 },
    Values(Vec<f64>),
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAxis {
    parameter: AxisParameter,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    start: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    stop: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    step: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    values: Option<Vec<f64>>,
}

impl TryFrom<RawAxis> for AxisSpec {
    type Error = Error;

    fn try_from(raw: RawAxis) -> Result<Self> {
        match (raw.start, raw.stop, raw.step, raw.values) {
            (Some(start), Some(stop), Some(step), None) => Self::stepped(raw.parameter, start, stop, step),
            (None, None, None, Some(values)) => Self::values(raw.parameter, values),
            _ => Err(domain(format!(
                "axis {}: give either start/stop/step or values",
                raw.parameter
            ))),
        }
    }
}

impl From<AxisSpec> for RawAxis {
    fn from(a: AxisSpec) -> Self {
        match a.range {
            AxisRange::Stepped { start, stop, step } => RawAxis {
                parameter: a.parameter,
                start: Some(start),
                stop: Some(stop),
                step: Some(step),
                values: None,
            },
            AxisRange::Values(values) => RawAxis {
                parameter: a.parameter,
                start: None,
                stop: None,
                step: None,
                values: Some(values),
            },
        }
    }
}

impl AxisSpec {
    pub fn stepped(parameter: AxisParameter, start: f64, stop: f64, step: f64) -> Result<Self> {
        if !(start.is_finite() && stop.is_finite() && step.is_finite()) {
            return Err(domain(format!("axis {parameter}: bounds must be finite")));
        }
        if start > stop {
            return Err(domain(format!("axis {parameter}: start {start} > stop {stop}")));
        }
        if !(step > 0.0) {
            return Err(domain(format!("axis {parameter}: step must be > 0, got {step}")));
        }
        let spec = Self {
            parameter,
            range: AxisRange::Stepped { start, stop, step },
        };
        if spec.len() > MAX_AXIS_POINTS {
            return Err(domain(format!(
                "axis {parameter}: {} points exceeds the limit of {MAX_AXIS_POINTS}",
                spec.len()
            )));
        }
        spec.check_values(&spec.points())?;
        Ok(spec)
    }

    pub fn values(parameter: AxisParameter, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(domain(format!("axis {parameter}: value list is empty")));
        }
        let spec = Self {
            parameter,
            range: AxisRange::Values(values),
        };
        spec.check_values(&spec.points())?;
        Ok(spec)
    }

    fn check_values(&self, pts: &[f64]) -> Result<()> {
        for &v in pts {
            if !v.is_finite() {
                return Err(domain(format!("axis {}: non-finite value", self.parameter)));
            }
            if self.parameter.is_integral() && (v < 1.0 || v.fract() != 0.0) {
                return Err(domain(format!(
                    "axis {}: value {v} must be a positive integer",
                    self.parameter
                )));
            }
        }
        Ok(())
    }

    pub fn parameter(&self) -> AxisParameter {
        self.parameter
    }

    /// Grid points in order; a stepped range includes `stop` when it lands
    /// within tolerance.
    pub fn points(&self) -> Vec<f64> {
        match &self.range {
            AxisRange::Values(v) => v.clone(),
            AxisRange::Stepped { start, stop, step } => (0..self.len())
                .map(|k| {
                    let v = start + (k as f64) * step;
                    if (v - stop).abs() <= AXIS_STOP_TOLERANCE {
                        *stop
                    } else {
                        v
                    }
                })
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        match &self.range {
            AxisRange::Values(v) => v.len(),
            AxisRange::Stepped { start, stop, step } => {
                ((stop - start + AXIS_STOP_TOLERANCE) / step).floor() as usize + 1
            }
        }
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Compact form `parameter:start:stop:step`, e.g. `r_tx:0.25:4.0:0.25`.
impl FromStr for AxisSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let [param, start, stop, step] = parts.as_slice() else {
            return Err(domain(format!(
                "axis \"{s}\" must have the form parameter:start:stop:step"
            )));
        };
        let num = |t: &str| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| domain(format!("axis \"{s}\": \"{t}\" is not a number")))
        };
        Self::stepped(param.trim().parse()?, num(start)?, num(stop)?, num(step)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepMode {
    /// CSD bandwidth / compute multipliers (and host cores) on the ratio form.
    Hardware,
    /// Host slow-down factors on the ratio form.
    Overload,
    /// Time-form solver over host cores, `k_limit`, and slow-down.
    System,
}

impl SweepMode {
    pub fn allowed(&self) -> &'static [AxisParameter] {
        use AxisParameter::*;
        match self {
            SweepMode::Hardware => &[RTxMultiplier, RCompMultiplier, Cores],
            SweepMode::Overload => &[SdTx, SdComp],
            SweepMode::System => &[Cores, KLimit, SdTx, SdComp],
        }
    }
}

impl FromStr for SweepMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hardware" => Ok(SweepMode::Hardware),
            "overload" => Ok(SweepMode::Overload),
            "system" => Ok(SweepMode::System),
            other => Err(domain(format!("unknown sweep mode \"{other}\""))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SurfaceBase {
    pub ratios: RatioSet,
    pub sd: SlowdownFactors,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BepSurface {
    pub mode: SweepMode,
    pub x_axis: AxisSpec,
    pub y_axis: AxisSpec,
    pub x_points: Vec<f64>,
    pub y_points: Vec<f64>,
    pub values: Vec<u32>,
    pub base: SurfaceBase,
}

impl BepSurface {
    pub fn get(&self, i: usize, j: usize) -> u32 {
        self.values[i * self.y_points.len() + j]
    }

    pub fn cells(&self) -> impl Iterator<Item = (f64, f64, u32)> + '_ {
        let ny = self.y_points.len();
        self.values
            .iter()
            .enumerate()
            .map(move |(k, &v)| (self.x_points[k / ny], self.y_points[k % ny], v))
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,y,bep\n");
        for (x, y, v) in self.cells() {
            let _ = writeln!(out, "{x},{y},{v}");
        }
        out
    }
}

/// Number of cells a sweep over these axes would produce.
pub fn grid_cells(x: &AxisSpec, y: &AxisSpec) -> usize {
    x.len().saturating_mul(y.len())
}

fn check_axes(mode: SweepMode, x: &AxisSpec, y: &AxisSpec) -> Result<()> {
    for a in [x, y] {
        if !mode.allowed().contains(&a.parameter) {
            let allowed: Vec<_> = mode.allowed().iter().map(|p| p.as_str()).collect();
            return Err(domain(format!(
                "axis parameter {} is not valid for {mode:?} sweeps (allowed: {})",
                a.parameter,
                allowed.join(", ")
            )));
        }
    }
    if x.parameter == y.parameter {
        return Err(domain(format!("both axes sweep {}", x.parameter)));
    }
    Ok(())
}

/// Evaluate `f` on every cell, rows in parallel, merged in row-major order.
fn evaluate_grid<F>(x_points: &[f64], y_points: &[f64], f: F) -> Result<Vec<u32>>
where
    F: Fn(f64, f64) -> Result<u32> + Sync,
{
    let rows: Vec<Vec<u32>> = x_points
        .par_iter()
        .map(|&x| {
            y_points
                .iter()
                .map(|&y| f(x, y).map_err(|e| domain(format!("cell (x={x}, y={y}): {e}"))))
                .collect::<Result<Vec<u32>>>()
        })
        .collect::<Result<_>>()?;
    Ok(rows.into_iter().flatten().collect())
}

#[derive(Debug, Clone, Copy)]
struct CellParams {
    r_tx_mult: f64,
    r_comp_mult: f64,
    cores: Option<u32>,
    k_limit: Option<u32>,
    sd_tx: Option<f64>,
    sd_comp: Option<f64>,
}

impl CellParams {
    fn at(x: (AxisParameter, f64), y: (AxisParameter, f64)) -> Self {
        let mut p = CellParams {
            r_tx_mult: 1.0,
            r_comp_mult: 1.0,
            cores: None,
            k_limit: None,
            sd_tx: None,
            sd_comp: None,
        };
        for (param, v) in [x, y] {
            match param {
                AxisParameter::RTxMultiplier => p.r_tx_mult = v,
                AxisParameter::RCompMultiplier => p.r_comp_mult = v,
                AxisParameter::Cores => p.cores = Some(v as u32),
                AxisParameter::KLimit => p.k_limit = Some(v as u32),
                AxisParameter::SdTx => p.sd_tx = Some(v),
                AxisParameter::SdComp => p.sd_comp = Some(v),
            }
        }
        p
    }

    fn sd(&self, base: SlowdownFactors) -> Result<SlowdownFactors> {
        SlowdownFactors::new(
            self.sd_tx.unwrap_or(base.sd_tx()),
            self.sd_comp.unwrap_or(base.sd_comp()),
        )
    }
}

/// BEP over CSD hardware multipliers; each cell is `s_normal` of the
/// scaled base ratios.
pub fn sweep_bep_hardware(ratios: &RatioSet, x: &AxisSpec, y: &AxisSpec) -> Result<BepSurface> {
    check_axes(SweepMode::Hardware, x, y)?;
    let (xp, yp) = (x.points(), y.points());
    let values = evaluate_grid(&xp, &yp, |xv, yv| {
        let p = CellParams::at((x.parameter, xv), (y.parameter, yv));
        let r = match p.cores {
            Some(n) => ratios.at_cores(n)?,
            None => *ratios,
        };
        s_normal(&r.scaled(p.r_tx_mult, p.r_comp_mult)?)
    })?;
    Ok(BepSurface {
        mode: SweepMode::Hardware,
        x_axis: x.clone(),
        y_axis: y.clone(),
        x_points: xp,
        y_points: yp,
        values,
        base: SurfaceBase {
            ratios: *ratios,
            sd: SlowdownFactors::NORMAL,
        },
    })
}

/// BEP over host slow-down factors; each cell is `s_overload`.
pub fn sweep_bep_overload(ratios: &RatioSet, x: &AxisSpec, y: &AxisSpec) -> Result<BepSurface> {
    check_axes(SweepMode::Overload, x, y)?;
    let (xp, yp) = (x.points(), y.points());
    for (axis, pts) in [(x, &xp), (y, &yp)] {
        if let Some(v) = pts.iter().find(|v| **v < 1.0) {
            return Err(domain(format!("axis {}: value {v} violates slow-down >= 1", axis.parameter)));
        }
    }
    let values = evaluate_grid(&xp, &yp, |xv, yv| {
        let p = CellParams::at((x.parameter, xv), (y.parameter, yv));
        s_overload(ratios, p.sd(SlowdownFactors::NORMAL)?)
    })?;
    Ok(BepSurface {
        mode: SweepMode::Overload,
        x_axis: x.clone(),
        y_axis: y.clone(),
        x_points: xp,
        y_points: yp,
        values,
        base: SurfaceBase {
            ratios: *ratios,
            sd: SlowdownFactors::NORMAL,
        },
    })
}

/// BEP from the time-form solver over host-side parameters, including
/// `k_limit`, which the ratio form does not see.
pub fn sweep_bep_system(
    host: &HostProfile,
    csd: &CsdProfile,
    cores: u32,
    sd: SlowdownFactors,
    x: &AxisSpec,
    y: &AxisSpec,
) -> Result<BepSurface> {
    check_axes(SweepMode::System, x, y)?;
    let ratios = RatioSet::from_profiles(host, csd, cores)?;
    let (xp, yp) = (x.points(), y.points());
    let values = evaluate_grid(&xp, &yp, |xv, yv| {
        let p = CellParams::at((x.parameter, xv), (y.parameter, yv));
        let h = match p.k_limit {
            Some(k) => host.with_k_limit(k)?,
            None => *host,
        };
        let r = bep_closed_form(&h, csd, p.cores.unwrap_or(cores), p.sd(sd)?)?;
        r.bep.ok_or_else(|| domain("no break-even point"))
    })?;
    Ok(BepSurface {
        mode: SweepMode::System,
        x_axis: x.clone(),
        y_axis: y.clone(),
        x_points: xp,
        y_points: yp,
        values,
        base: SurfaceBase { ratios, sd },
    })
}

/// Grid points whose BEP equals `c`, row-major.
pub fn iso_bep_contour(surface: &BepSurface, c: u32) -> Vec<(f64, f64)> {
    surface
        .cells()
        .filter(|&(_, _, v)| v == c)
        .map(|(x, y, _)| (x, y))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DiffPoint {
    pub sd_comp: f64,
    pub bep: u32,
    pub diff_from_base: i64,
}

/// BEP as the host CPU slows down, with the reduction from the normal BEP.
pub fn bep_diff_series(ratios: &RatioSet, sd_comp_values: &[f64]) -> Result<Vec<DiffPoint>> {
    let base = s_normal(ratios)?;
    sd_comp_values
        .iter()
        .map(|&v| {
            let bep = s_overload(ratios, SlowdownFactors::new(1.0, v)?)?;
            Ok(DiffPoint {
                sd_comp: v,
                bep,
                diff_from_base: i64::from(base) - i64::from(bep),
            })
        })
        .collect()
}

/// A system whose throughput is plotted against device count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SystemDescriptor {
    Host {
        host: String,
        #[serde(default = "one_core")]
        cores: u32,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        k_limit: Option<u32>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        sd: Option<SlowdownFactors>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        label: Option<String>,
    },
    Csd {
        csd: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        label: Option<String>,
    },
}

fn one_core() -> u32 {
    1
}

impl SystemDescriptor {
    pub fn label(&self) -> String {
        match self {
            SystemDescriptor::Host {
                label: Some(l), ..
            }
            | SystemDescriptor::Csd { label: Some(l), .. } => l.clone(),
            SystemDescriptor::Host {
                host, cores, k_limit, ..
            } => match k_limit {
                Some(k) => format!("{host}({cores}) k_limit({k})"),
                None => format!("{host}({cores})"),
            },
            SystemDescriptor::Csd { csd, .. } => csd.clone(),
        }
    }

    fn time_at(&self, cal: &CalibrationSet, workload: &str, m: u32) -> Result<crate::model::SystemTime> {
        match self {
            SystemDescriptor::Host {
                host, cores, k_limit, sd, ..
            } => {
                let mut h = cal.host_profile(workload, host)?;
                if let Some(k) = k_limit {
                    h = h.with_k_limit(*k)?;
                }
                ssd_array_time(&h, *cores, m, sd.unwrap_or_default())
            }
            SystemDescriptor::Csd { csd, .. } => csd_array_time(&cal.csd_profile(workload, csd)?, m),
        }
    }
}

/// Compact form: `host:NAME:CORES[:K_LIMIT]` or `csd:NAME`.
impl FromStr for SystemDescriptor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let int = |t: &str| {
            t.parse::<u32>()
                .map_err(|_| domain(format!("system \"{s}\": \"{t}\" is not a count")))
        };
        match parts.as_slice() {
            ["csd", name] => Ok(SystemDescriptor::Csd {
                csd: (*name).to_string(),
                label: None,
            }),
            ["host", name, cores] | ["host", name, cores, ..] if parts.len() <= 4 => Ok(SystemDescriptor::Host {
                host: (*name).to_string(),
                cores: int(cores)?,
                k_limit: parts.get(3).map(|k| int(k)).transpose()?,
                sd: None,
                label: None,
            }),
            _ => Err(domain(format!(
                "system \"{s}\" must be host:NAME:CORES[:K_LIMIT] or csd:NAME"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvePoint {
    pub devices: u32,
    pub throughput_norm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Series {
    pub label: String,
    pub points: Vec<CurvePoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveSet {
    pub series: Vec<Series>,
    pub normalization_reference: String,
}

impl CurveSet {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("series,devices,throughput_norm\n");
        for s in &self.series {
            for p in &s.points {
                let label = if s.label.contains([',', '"']) {
                    format!("\"{}\"", s.label.replace('"', "\"\""))
                } else {
                    s.label.clone()
                };
                let _ = writeln!(out, "{label},{},{}", p.devices, p.throughput_norm);
            }
        }
        out
    }
}

/// Throughput of each configuration for 1..=m_max devices, normalized to
/// `normalization` with one device.
pub fn throughput_curves(
    cal: &CalibrationSet,
    workload: &str,
    configs: &[SystemDescriptor],
    m_max: u32,
    normalization: &SystemDescriptor,
) -> Result<CurveSet> {
    if m_max < 1 {
        return Err(domain("m_max must be >= 1"));
    }
    let w = cal.workload(workload)?;
    let reference = throughput(w, &normalization.time_at(cal, workload, 1)?)?;
    let series = configs
        .iter()
        .map(|cfg| {
            let points = (1..=m_max)
                .map(|m| {
                    let t = throughput(w, &cfg.time_at(cal, workload, m)?)?;
                    Ok(CurvePoint {
                        devices: m,
                        throughput_norm: t / reference,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(Series {
                label: cfg.label(),
                points,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CurveSet {
        series,
        normalization_reference: normalization.label(),
    })
}
