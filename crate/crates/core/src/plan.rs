//! Scenario-level requests resolved against a calibration set.
//!
//! The CLI and the HTTP service both go through these functions, so the
//! two front ends cannot drift apart numerically.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::calibration::{classify_workload, derive_ratios, CalibrationSet, CsdSpec, HostSpec, WorkloadClass};
use crate::error::{domain, Error, Result};
use crate::model::SlowdownFactors;
use crate::solver::{bep_bruteforce, bep_closed_form, default_m_max, s_normal, BepResult};
use crate::tco::{candidate_from_bep, compare_tco, BaselineSystem, CandidateSystem, CostModel, TcoReport};
use crate::whatif::{
    bep_diff_series, iso_bep_contour, sweep_bep_hardware, sweep_bep_overload, sweep_bep_system, throughput_curves,
    AxisSpec, BepSurface, CurveSet, DiffPoint, SweepMode, SystemDescriptor,
};

fn one() -> u32 {
    1
}

fn slowdown(sd_tx: Option<f64>, sd_comp: Option<f64>) -> Result<SlowdownFactors> {
    SlowdownFactors::new(sd_tx.unwrap_or(1.0), sd_comp.unwrap_or(1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveRequest {
    pub workload: String,
    pub host: String,
    pub csd: String,
    #[serde(default = "one")]
    pub cores: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sd_tx: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sd_comp: Option<f64>,
    /// Use slow-down factors fitted from the host's overloaded measurement
    /// at this much available memory.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub available_memory_bytes: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_limit: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m_max: Option<u32>,
}

impl SolveRequest {
    pub fn new(workload: &str, host: &str, csd: &str, cores: u32) -> Self {
        Self {
            workload: workload.into(),
            host: host.into(),
            csd: csd.into(),
            cores,
            sd_tx: None,
            sd_comp: None,
            available_memory_bytes: None,
            k_limit: None,
            m_max: None,
        }
    }

    fn slowdown(&self, cal: &CalibrationSet) -> Result<SlowdownFactors> {
        match self.available_memory_bytes {
            Some(mem) => {
                if self.sd_tx.is_some() || self.sd_comp.is_some() {
                    return Err(domain("give either explicit sd_tx/sd_comp or available_memory_bytes, not both"));
                }
                Ok(cal.fitted_slowdown(&self.workload, &self.host, mem)?.factors)
            }
            None => slowdown(self.sd_tx, self.sd_comp),
        }
    }
}

/// Run the closed form and the enumeration oracle and insist they agree.
///
/// The closed-form result is returned. When the oracle finds nothing up to
/// its bound the result is marked infeasible instead.
pub fn solve(cal: &CalibrationSet, req: &SolveRequest) -> Result<BepResult> {
    let mut host = cal.host_profile(&req.workload, &req.host)?;
    if let Some(k) = req.k_limit {
        host = host.with_k_limit(k)?;
    }
    let csd = cal.csd_profile(&req.workload, &req.csd)?;
    let sd = req.slowdown(cal)?;
    let m_max = req.m_max.unwrap_or_else(|| default_m_max(host.k_limit()));

    let mut closed = bep_closed_form(&host, &csd, req.cores, sd)?;
    let oracle = bep_bruteforce(&host, &csd, req.cores, sd, m_max)?;
    let closed_bep = closed.bep.expect("closed form always yields a count");
    match oracle.bep {
        Some(b) if b == closed_bep => Ok(closed),
        None if closed_bep > m_max => {
            closed.bep = None;
            closed.infeasible = true;
            closed.searched_bound = Some(m_max);
            Ok(closed)
        }
        other => Err(Error::Inconsistent(format!(
            "closed form gives {closed_bep} ({:?}) but enumeration up to {m_max} gives {}",
            closed.method,
            other.map_or_else(|| "no break-even".to_string(), |b| b.to_string())
        ))),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepRequest {
    pub workload: String,
    pub host: String,
    pub csd: String,
    #[serde(default = "one")]
    pub cores: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sd_tx: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sd_comp: Option<f64>,
    pub mode: SweepMode,
    pub axis_x: AxisSpec,
    pub axis_y: AxisSpec,
}

pub fn sweep(cal: &CalibrationSet, req: &SweepRequest) -> Result<BepSurface> {
    let sd = slowdown(req.sd_tx, req.sd_comp)?;
    match req.mode {
        SweepMode::Hardware | SweepMode::Overload => {
            if !sd.is_normal() {
                return Err(domain("base sd_tx/sd_comp apply only to system sweeps"));
            }
            let ratios = derive_ratios(cal, &req.workload, &req.host, &req.csd, req.cores)?;
            if req.mode == SweepMode::Hardware {
                sweep_bep_hardware(&ratios, &req.axis_x, &req.axis_y)
            } else {
                sweep_bep_overload(&ratios, &req.axis_x, &req.axis_y)
            }
        }
        SweepMode::System => {
            let host = cal.host_profile(&req.workload, &req.host)?;
            let csd = cal.csd_profile(&req.workload, &req.csd)?;
            sweep_bep_system(&host, &csd, req.cores, sd, &req.axis_x, &req.axis_y)
        }
    }
}

/// A sweep plus the BEP value whose contour is wanted. On the wire the
/// sweep fields and `c` share one object.
#[derive(Debug, Clone, PartialEq)]
pub struct IsoRequest {
    pub sweep: SweepRequest,
    pub c: u32,
}

impl<'de> Deserialize<'de> for IsoRequest {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let mut v = serde_json::Map::<String, serde_json::Value>::deserialize(d)?;
        let c = v.remove("c").ok_or_else(|| D::Error::missing_field("c"))?;
        let c = u32::deserialize(c).map_err(D::Error::custom)?;
        let sweep = SweepRequest::deserialize(serde_json::Value::Object(v)).map_err(D::Error::custom)?;
        Ok(IsoRequest { sweep, c })
    }
}

impl Serialize for IsoRequest {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::Error as _;
        let mut v = serde_json::to_value(&self.sweep).map_err(S::Error::custom)?;
        v.as_object_mut()
            .expect("sweep serializes to an object")
            .insert("c".into(), self.c.into());
        v.serialize(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IsoResponse {
    pub c: u32,
    pub points: Vec<(f64, f64)>,
}

pub fn iso(cal: &CalibrationSet, req: &IsoRequest) -> Result<IsoResponse> {
    if req.c < 1 {
        return Err(domain("contour value c must be >= 1"));
    }
    let surface = sweep(cal, &req.sweep)?;
    Ok(IsoResponse {
        c: req.c,
        points: iso_bep_contour(&surface, req.c),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurvesRequest {
    pub workload: String,
    pub configs: Vec<SystemDescriptor>,
    pub m_max: u32,
    pub normalize_to: SystemDescriptor,
}

pub fn curves(cal: &CalibrationSet, req: &CurvesRequest) -> Result<CurveSet> {
    throughput_curves(cal, &req.workload, &req.configs, req.m_max, &req.normalize_to)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiffRequest {
    pub workload: String,
    pub host: String,
    pub csd: String,
    #[serde(default = "one")]
    pub cores: u32,
    pub sd_comp_values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiffResponse {
    pub base_bep: u32,
    pub series: Vec<DiffPoint>,
}

pub fn diff(cal: &CalibrationSet, req: &DiffRequest) -> Result<DiffResponse> {
    let ratios = derive_ratios(cal, &req.workload, &req.host, &req.csd, req.cores)?;
    Ok(DiffResponse {
        base_bep: s_normal(&ratios)?,
        series: bep_diff_series(&ratios, &req.sd_comp_values)?,
    })
}

/// Workload/host/CSD triple used to size candidates automatically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub workload: String,
    pub host: String,
    pub csd: String,
    #[serde(default = "one")]
    pub cores: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TcoCandidate {
    pub cpu: String,
    /// When absent, sized from the scenario's BEP and the CPU's slow-down.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csd_count: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TcoRequest {
    pub baseline: BaselineSystem,
    pub candidates: Vec<TcoCandidate>,
    pub cost_model: CostModel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<Scenario>,
}

/// Table of costs. `cal` is needed only when some candidate has no
/// explicit CSD count.
pub fn tco(cal: Option<&CalibrationSet>, req: &TcoRequest) -> Result<TcoReport> {
    let mut sized = Vec::with_capacity(req.candidates.len());
    for c in &req.candidates {
        let csd_count = match c.csd_count {
            Some(n) => n,
            None => {
                let (Some(cal), Some(s)) = (cal, req.scenario.as_ref()) else {
                    return Err(domain(format!(
                        "candidate \"{}\" has no csd_count and no calibration scenario to size it from",
                        c.cpu
                    )));
                };
                let ratios = derive_ratios(cal, &s.workload, &s.host, &s.csd, s.cores)?;
                let base = s_normal(&ratios)?;
                let cpu = req.cost_model.cpu(&c.cpu)?;
                candidate_from_bep(&ratios, cpu.slowdown_vs_baseline, base)?.csd_count
            }
        };
        sized.push(CandidateSystem {
            cpu: c.cpu.clone(),
            csd_count,
            name: c.name.clone(),
        });
    }
    compare_tco(&req.baseline, &sized, &req.cost_model)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WorkloadSummary {
    pub name: String,
    pub working_set_bytes: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    /// CTR class on each host with a normal measurement.
    pub classes: BTreeMap<String, WorkloadClass>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CalibrationSummary {
    pub schema_version: u32,
    pub workloads: Vec<WorkloadSummary>,
    pub hosts: Vec<HostSpec>,
    pub csds: Vec<CsdSpec>,
}

pub fn summarize(cal: &CalibrationSet) -> CalibrationSummary {
    let workloads = cal
        .workloads()
        .iter()
        .map(|w| WorkloadSummary {
            name: w.name.clone(),
            working_set_bytes: w.working_set_bytes,
            description: w.description.clone(),
            classes: cal
                .hosts()
                .iter()
                .filter_map(|h| {
                    classify_workload(cal, &w.name, &h.name)
                        .ok()
                        .map(|c| (h.name.clone(), c))
                })
                .collect(),
        })
        .collect();
    CalibrationSummary {
        schema_version: cal.file().schema_version,
        workloads,
        hosts: cal.hosts().to_vec(),
        csds: cal.csds().to_vec(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn iso_request_wire_form() {
        let text = r#"{"workload":"w","host":"h","csd":"c","mode":"hardware",
            "axis_x":{"parameter":"r_tx","start":1,"stop":2,"step":1},
            "axis_y":{"parameter":"r_comp","values":[1,2]},"c":4}"#;
        let r: IsoRequest = serde_json::from_str(text).unwrap();
        assert_eq!(r.c, 4);
        assert_eq!(r.sweep.cores, 1);
        let back: IsoRequest = serde_json::from_str(&serde_json::to_string(&r).unwrap()).unwrap();
        assert_eq!(back, r);
        assert!(serde_json::from_str::<IsoRequest>(&text.replace(r#","c":4"#, "")).is_err());
        assert!(serde_json::from_str::<IsoRequest>(&text.replace(r#""c":4"#, r#""c":4,"zz":1"#)).is_err());
    }
}
