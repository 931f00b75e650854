//! Measured characterization data: loading, validation, ratio derivation,
//! workload classification, and slow-down fitting.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{domain, lookup, Error, Result, Violation};
use crate::model::{CsdProfile, HostProfile, SlowdownFactors, WorkloadProfile};

pub const SCHEMA_VERSION: u32 = 1;

/// Relative tolerance between the bandwidth form and the time form of `r_tx`.
pub const BANDWIDTH_CONSISTENCY_TOLERANCE: f64 = 0.10;

/// Workloads with a host CTR below this are I/O-intensive.
pub const CTR_IO_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HostSpec {
    pub name: String,
    pub max_cores: u32,
    pub k_limit: u32,
}

/// How the CSD computation time in the measurements was obtained.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComputeConfig {
    /// Best parallel configuration of the device (all CUs / threads).
    #[default]
    BestParallel,
    SingleUnit,
}

impl ComputeConfig {
    fn is_default(&self) -> bool {
        *self == ComputeConfig::BestParallel
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CsdSpec {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bw_internal_bps: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bw_external_bps: Option<f64>,
    #[serde(default, skip_serializing_if = "ComputeConfig::is_default")]
    pub compute_config: ComputeConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    Normal,
    Overloaded { available_memory_bytes: u64 },
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Condition::Normal => f.write_str("normal"),
            Condition::Overloaded {
                available_memory_bytes,
            } => write!(f, "overloaded({available_memory_bytes} B)"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasurementRecord {
    pub workload: String,
    /// Host name or CSD name.
    pub target: String,
    pub condition: Condition,
    #[serde(rename = "t_tx_s")]
    pub t_tx: f64,
    /// For host targets: single-core computation time.
    #[serde(rename = "t_comp_s")]
    pub t_comp: f64,
}

/// The on-disk layout. Not validated; see [`CalibrationSet`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationFile {
    pub schema_version: u32,
    pub workloads: Vec<WorkloadProfile>,
    pub hosts: Vec<HostSpec>,
    pub csds: Vec<CsdSpec>,
    pub measurements: Vec<MeasurementRecord>,
}

/// A validated, immutable set of calibration data.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationSet {
    file: CalibrationFile,
}

pub fn load_calibration<R: Read>(mut source: R) -> Result<CalibrationSet> {
    let mut text = String::new();
    source.read_to_string(&mut text).map_err(|e| {
        if e.kind() == std::io::ErrorKind::InvalidData {
            Error::Parse {
                line: 0,
                column: 0,
                message: "calibration is not valid UTF-8".into(),
            }
        } else {
            Error::Io(e)
        }
    })?;
    CalibrationSet::from_json_str(&text)
}

impl CalibrationSet {
    pub fn from_json_str(text: &str) -> Result<Self> {
        let file: CalibrationFile = serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        Self::from_file(file)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let f = std::fs::File::open(path.as_ref())?;
        load_calibration(std::io::BufReader::new(f))
    }

    pub fn from_file(file: CalibrationFile) -> Result<Self> {
        let violations = validate(&file);
        if violations.is_empty() {
            Ok(Self { file })
        } else {
            Err(Error::Validation(violations))
        }
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&self.file).expect("calibration serializes")
    }

    pub fn file(&self) -> &CalibrationFile {
        &self.file
    }

    pub fn workloads(&self) -> &[WorkloadProfile] {
        &self.file.workloads
    }

    pub fn hosts(&self) -> &[HostSpec] {
        &self.file.hosts
    }

    pub fn csds(&self) -> &[CsdSpec] {
        &self.file.csds
    }

    pub fn measurements(&self) -> &[MeasurementRecord] {
        &self.file.measurements
    }

    pub fn workload(&self, name: &str) -> Result<&WorkloadProfile> {
        self.file
            .workloads
            .iter()
            .find(|w| w.name == name)
            .ok_or_else(|| lookup(format!("unknown workload \"{name}\"")))
    }

    pub fn host_spec(&self, name: &str) -> Result<&HostSpec> {
        self.file
            .hosts
            .iter()
            .find(|h| h.name == name)
            .ok_or_else(|| lookup(format!("unknown host \"{name}\"")))
    }

    pub fn csd_spec(&self, name: &str) -> Result<&CsdSpec> {
        self.file
            .csds
            .iter()
            .find(|c| c.name == name)
            .ok_or_else(|| lookup(format!("unknown csd \"{name}\"")))
    }

    pub fn measurement(&self, workload: &str, target: &str, condition: Condition) -> Option<&MeasurementRecord> {
        self.file
            .measurements
            .iter()
            .find(|m| m.workload == workload && m.target == target && m.condition == condition)
    }

    fn require_measurement(&self, workload: &str, target: &str, condition: Condition) -> Result<&MeasurementRecord> {
        self.workload(workload)?;
        self.measurement(workload, target, condition).ok_or_else(|| {
            lookup(format!(
                "no {condition} measurement for (workload \"{workload}\", target \"{target}\")"
            ))
        })
    }

    /// Host timings for `workload` under normal conditions.
    pub fn host_profile(&self, workload: &str, host: &str) -> Result<HostProfile> {
        let spec = self.host_spec(host)?;
        let m = self.require_measurement(workload, host, Condition::Normal)?;
        HostProfile::new(m.t_tx, m.t_comp, spec.max_cores, spec.k_limit)
    }

    pub fn csd_profile(&self, workload: &str, csd: &str) -> Result<CsdProfile> {
        let spec = self.csd_spec(csd)?;
        let m = self.require_measurement(workload, csd, Condition::Normal)?;
        Ok(CsdProfile::new(csd, m.t_tx, m.t_comp)?.with_bandwidths(spec.bw_internal_bps, spec.bw_external_bps))
    }

    /// Slow-down factors fitted from the host's measurement at the given
    /// available memory.
    pub fn fitted_slowdown(&self, workload: &str, host: &str, available_memory_bytes: u64) -> Result<FittedSlowdown> {
        self.host_spec(host)?;
        let normal = self.require_measurement(workload, host, Condition::Normal)?;
        let over = self.require_measurement(
            workload,
            host,
            Condition::Overloaded {
                available_memory_bytes,
            },
        )?;
        fit_slowdown(normal, over)
    }
}

fn validate(file: &CalibrationFile) -> Vec<Violation> {
    let mut out = Vec::new();
    if file.schema_version != SCHEMA_VERSION {
        out.push(Violation::new(
            "schema_version",
            format!("unsupported schema version {} (expected {SCHEMA_VERSION})", file.schema_version),
        ));
    }

    let mut workload_names = HashSet::new();
    for (i, w) in file.workloads.iter().enumerate() {
        if !workload_names.insert(w.name.as_str()) {
            out.push(Violation::new(format!("workloads[{i}].name"), format!("duplicate workload \"{}\"", w.name)));
        }
        if w.working_set_bytes == 0 {
            out.push(Violation::new(
                format!("workloads[{i}].working_set_bytes"),
                format!("workload \"{}\" must have working_set_bytes > 0", w.name),
            ));
        }
    }

    let mut target_kinds: HashMap<&str, &'static str> = HashMap::new();
    for (i, h) in file.hosts.iter().enumerate() {
        if target_kinds.insert(h.name.as_str(), "host").is_some() {
            out.push(Violation::new(format!("hosts[{i}].name"), format!("duplicate target name \"{}\"", h.name)));
        }
        if h.max_cores < 1 {
            out.push(Violation::new(format!("hosts[{i}].max_cores"), format!("host \"{}\" must have max_cores >= 1", h.name)));
        }
        if h.k_limit < 1 {
            out.push(Violation::new(format!("hosts[{i}].k_limit"), format!("host \"{}\" must have k_limit >= 1", h.name)));
        }
    }
    for (i, c) in file.csds.iter().enumerate() {
        if target_kinds.insert(c.name.as_str(), "csd").is_some() {
            out.push(Violation::new(format!("csds[{i}].name"), format!("duplicate target name \"{}\"", c.name)));
        }
        for (field, v) in [("bw_internal_bps", c.bw_internal_bps), ("bw_external_bps", c.bw_external_bps)] {
            if let Some(v) = v {
                if !(v.is_finite() && v > 0.0) {
                    out.push(Violation::new(
                        format!("csds[{i}].{field}"),
                        format!("csd \"{}\" {field} must be finite and > 0, got {v}", c.name),
                    ));
                }
            }
        }
    }

    let mut seen = HashSet::new();
    for (i, m) in file.measurements.iter().enumerate() {
        let at = |field: &str| format!("measurements[{i}].{field}");
        let who = format!("(workload \"{}\", target \"{}\", {})", m.workload, m.target, m.condition);
        if !workload_names.contains(m.workload.as_str()) {
            out.push(Violation::new(at("workload"), format!("unknown workload \"{}\"", m.workload)));
        }
        if !target_kinds.contains_key(m.target.as_str()) {
            out.push(Violation::new(at("target"), format!("unknown target \"{}\"", m.target)));
        }
        for (field, v) in [("t_tx_s", m.t_tx), ("t_comp_s", m.t_comp)] {
            if !(v.is_finite() && v >= 0.0) {
                out.push(Violation::new(at(field), format!("{who}: {field} must be finite and >= 0, got {v}")));
            }
        }
        if m.t_tx.is_finite() && m.t_comp.is_finite() && m.t_tx >= 0.0 && m.t_comp >= 0.0 {
            if m.t_tx + m.t_comp <= 0.0 {
                out.push(Violation::new(at("t_comp_s"), format!("{who}: t_tx_s + t_comp_s must be > 0")));
            } else if m.condition == Condition::Normal && m.t_comp <= 0.0 {
                out.push(Violation::new(
                    at("t_comp_s"),
                    format!("{who}: normal-condition t_comp_s must be > 0"),
                ));
            }
        }
        if matches!(m.condition, Condition::Overloaded { .. }) && target_kinds.get(m.target.as_str()) == Some(&"csd") {
            out.push(Violation::new(
                at("condition"),
                format!("{who}: overloaded measurements apply to hosts only"),
            ));
        }
        if !seen.insert((m.workload.as_str(), m.target.as_str(), m.condition)) {
            out.push(Violation::new(at("condition"), format!("{who}: duplicate measurement")));
        }
    }

    // Bandwidth-form r_tx must agree with the time-form r_tx of every
    // (host, csd) pair measured on the same workload.
    for c in &file.csds {
        let (Some(bi), Some(be)) = (c.bw_internal_bps, c.bw_external_bps) else {
            continue;
        };
        if !(bi > 0.0 && be > 0.0) {
            continue;
        }
        let bw_ratio = bi / be;
        for m_csd in file
            .measurements
            .iter()
            .filter(|m| m.target == c.name && m.condition == Condition::Normal && m.t_tx > 0.0)
        {
            for h in &file.hosts {
                let Some(m_host) = file.measurements.iter().find(|m| {
                    m.target == h.name && m.workload == m_csd.workload && m.condition == Condition::Normal
                }) else {
                    continue;
                };
                if !(m_host.t_tx > 0.0) {
                    continue;
                }
                let time_ratio = m_host.t_tx / m_csd.t_tx;
                if ((bw_ratio - time_ratio) / time_ratio).abs() > BANDWIDTH_CONSISTENCY_TOLERANCE {
                    out.push(Violation::new(
                        format!("csds.{}", c.name),
                        format!(
                            "bandwidth ratio {bw_ratio:.4} disagrees with time ratio {time_ratio:.4} \
                             (host \"{}\", workload \"{}\") by more than {:.0}%",
                            h.name,
                            m_csd.workload,
                            BANDWIDTH_CONSISTENCY_TOLERANCE * 100.0
                        ),
                    ));
                }
            }
        }
    }
    out
}

/// Dimensionless ratios that parameterize the closed-form BEP functions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawRatios")]
pub struct RatioSet {
    /// Internal/external bandwidth ratio, `t_ssd_tx / t_csd_tx`.
    r_tx: f64,
    /// Host `n`-core compute time over CSD compute time.
    r_comp: f64,
    /// Host transfer time over host `n`-core compute time.
    r_ssd: f64,
    cores: u32,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRatios {
    r_tx: f64,
    r_comp: f64,
    r_ssd: f64,
    #[serde(default = "one")]
    cores: u32,
}

fn one() -> u32 {
    1
}

impl TryFrom<RawRatios> for RatioSet {
    type Error = Error;

    fn try_from(r: RawRatios) -> Result<Self> {
        Self::new(r.r_tx, r.r_comp, r.r_ssd, r.cores)
    }
}

impl RatioSet {
    pub fn new(r_tx: f64, r_comp: f64, r_ssd: f64, cores: u32) -> Result<Self> {
        for (name, v) in [("r_tx", r_tx), ("r_comp", r_comp), ("r_ssd", r_ssd)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(domain(format!("{name} must be finite and > 0, got {v}")));
            }
        }
        if cores < 1 {
            return Err(domain("ratio set cores must be >= 1"));
        }
        Ok(Self {
            r_tx,
            r_comp,
            r_ssd,
            cores,
        })
    }

    pub fn from_profiles(host: &HostProfile, csd: &CsdProfile, cores: u32) -> Result<Self> {
        let comp_n = host.t_ssd_comp(cores)?;
        Self::new(
            host.t_ssd_tx() / csd.t_csd_tx(),
            comp_n / csd.t_csd_comp(),
            host.t_ssd_tx() / comp_n,
            cores,
        )
    }

    pub fn r_tx(&self) -> f64 {
        self.r_tx
    }

    pub fn r_comp(&self) -> f64 {
        self.r_comp
    }

    pub fn r_ssd(&self) -> f64 {
        self.r_ssd
    }

    pub fn cores(&self) -> u32 {
        self.cores
    }

    /// Scale CSD bandwidth and compute power. The host is unchanged, so
    /// `r_ssd` stays fixed.
    pub fn scaled(&self, r_tx_multiplier: f64, r_comp_multiplier: f64) -> Result<Self> {
        Self::new(
            self.r_tx * r_tx_multiplier,
            self.r_comp * r_comp_multiplier,
            self.r_ssd,
            self.cores,
        )
        .map_err(|e| domain(format!("scaled ratios (x{r_tx_multiplier}, x{r_comp_multiplier}): {e}")))
    }

    /// The same calibration viewed at a different host core count. The
    /// host compute term scales as `1/n`, so `r_comp` falls and `r_ssd`
    /// rises with `n`.
    pub fn at_cores(&self, cores: u32) -> Result<Self> {
        if cores < 1 {
            return Err(domain("cores must be >= 1"));
        }
        let k = f64::from(self.cores) / f64::from(cores);
        Self::new(self.r_tx, self.r_comp * k, self.r_ssd / k, cores)
    }
}

pub fn derive_ratios(cal: &CalibrationSet, workload: &str, host: &str, csd: &str, cores: u32) -> Result<RatioSet> {
    let h = cal.host_profile(workload, host)?;
    let c = cal.csd_profile(workload, csd)?;
    RatioSet::from_profiles(&h, &c, cores)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WorkloadKind {
    IoIntensive,
    ComputeIntensive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WorkloadClass {
    pub ctr: f64,
    pub class: WorkloadKind,
}

impl WorkloadClass {
    pub fn from_times(t_tx: f64, t_comp: f64) -> Result<Self> {
        let total = t_tx + t_comp;
        if !(t_tx >= 0.0 && t_comp >= 0.0 && total > 0.0) {
            return Err(domain(format!("cannot classify times t_tx={t_tx}, t_comp={t_comp}")));
        }
        let ctr = t_comp / total;
        let class = if ctr < CTR_IO_THRESHOLD {
            WorkloadKind::IoIntensive
        } else {
            WorkloadKind::ComputeIntensive
        };
        Ok(Self { ctr, class })
    }
}

/// CTR of `workload` on `host_ref` at one core, normal conditions.
pub fn classify_workload(cal: &CalibrationSet, workload: &str, host_ref: &str) -> Result<WorkloadClass> {
    cal.host_spec(host_ref)?;
    let m = cal.require_measurement(workload, host_ref, Condition::Normal)?;
    WorkloadClass::from_times(m.t_tx, m.t_comp)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FittedSlowdown {
    pub factors: SlowdownFactors,
    /// Terms whose raw ratio fell below 1 and were clamped.
    pub clamped: Vec<&'static str>,
}

/// Per-term ratio of overloaded to normal time, clamped below at 1.
pub fn fit_slowdown(normal: &MeasurementRecord, overloaded: &MeasurementRecord) -> Result<FittedSlowdown> {
    if normal.workload != overloaded.workload || normal.target != overloaded.target {
        return Err(domain(format!(
            "slow-down fit needs matching records, got ({}, {}) vs ({}, {})",
            normal.workload, normal.target, overloaded.workload, overloaded.target
        )));
    }
    if normal.condition != Condition::Normal {
        return Err(domain("first record of a slow-down fit must be a normal-condition measurement"));
    }
    if !(normal.t_tx > 0.0 && normal.t_comp > 0.0) {
        return Err(domain(format!(
            "normal record for ({}, {}) needs t_tx > 0 and t_comp > 0",
            normal.workload, normal.target
        )));
    }
    let mut clamped = Vec::new();
    let mut ratio = |name: &'static str, over: f64, base: f64| {
        let r = over / base;
        if r < 1.0 {
            log::warn!(
                "{name} for ({}, {}) measured {r:.4} < 1; clamping to 1",
                normal.workload,
                normal.target
            );
            clamped.push(name);
            1.0
        } else {
            r
        }
    };
    let sd_tx = ratio("sd_tx", overloaded.t_tx, normal.t_tx);
    let sd_comp = ratio("sd_comp", overloaded.t_comp, normal.t_comp);
    Ok(FittedSlowdown {
        factors: SlowdownFactors::new(sd_tx, sd_comp)?,
        clamped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(workload: &str, target: &str, condition: Condition, t_tx: f64, t_comp: f64) -> MeasurementRecord {
        MeasurementRecord {
            workload: workload.into(),
            target: target.into(),
            condition,
            t_tx,
            t_comp,
        }
    }

    const SMALL: &str = r#"{
      "schema_version": 1,
      "workloads": [{"name": "w", "working_set_bytes": 1000}],
      "hosts": [{"name": "h", "max_cores": 4, "k_limit": 8}],
      "csds": [{"name": "c"}],
      "measurements": [
        {"workload": "w", "target": "h", "condition": "normal", "t_tx_s": 10, "t_comp_s": 20},
        {"workload": "w", "target": "c", "condition": "normal", "t_tx_s": 20, "t_comp_s": 40},
        {"workload": "w", "target": "h", "condition": {"overloaded": {"available_memory_bytes": 2000}},
         "t_tx_s": 40, "t_comp_s": 30}
      ]
    }"#;

    #[test]
    fn loads_small_file() {
        let cal = load_calibration(SMALL.as_bytes()).unwrap();
        assert_eq!(cal.workloads().len(), 1);
        assert_eq!(cal.measurements().len(), 3);
    }

    #[test]
    fn dangling_target_is_named() {
        let text = SMALL.replace(r#""target": "c""#, r#""target": "foo""#);
        let err = CalibrationSet::from_json_str(&text).unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
        assert!(err.to_string().contains("\"foo\""), "{err}");
    }

    #[test]
    fn negative_time_names_record_and_field() {
        let text = SMALL.replace(r#""t_tx_s": 20, "t_comp_s": 40"#, r#""t_tx_s": 20, "t_comp_s": -1"#);
        let err = CalibrationSet::from_json_str(&text).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("measurements[1].t_comp_s"), "{msg}");
        assert!(msg.contains("target \"c\""), "{msg}");
    }

    #[test]
    fn all_violations_reported() {
        let text = SMALL
            .replace(r#""target": "c""#, r#""target": "foo""#)
            .replace(r#""working_set_bytes": 1000"#, r#""working_set_bytes": 0"#)
            .replace(r#""k_limit": 8"#, r#""k_limit": 0"#);
        let Error::Validation(v) = CalibrationSet::from_json_str(&text).unwrap_err() else {
            panic!("expected validation error");
        };
        assert_eq!(v.len(), 3, "{v:?}");
    }

    #[test]
    fn parse_error_carries_locus() {
        let text = SMALL.replace(r#""k_limit": 8"#, r#""k_limit": 8, "bogus": 1"#);
        let err = CalibrationSet::from_json_str(&text).unwrap_err();
        match err {
            Error::Parse { line, message, .. } => {
                assert_eq!(line, 4);
                assert!(message.contains("bogus"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn duplicate_measurement_rejected() {
        let text = SMALL.replace(
            r#""t_tx_s": 40, "t_comp_s": 30}"#,
            r#""t_tx_s": 40, "t_comp_s": 30},
            {"workload": "w", "target": "c", "condition": "normal", "t_tx_s": 1, "t_comp_s": 1}"#,
        );
        let err = CalibrationSet::from_json_str(&text).unwrap_err();
        assert!(err.to_string().contains("duplicate measurement"), "{err}");
    }

    #[test]
    fn bandwidth_mismatch_rejected() {
        let ok = SMALL.replace(r#"{"name": "c"}"#, r#"{"name": "c", "bw_internal_bps": 1.0, "bw_external_bps": 2.0}"#);
        CalibrationSet::from_json_str(&ok).unwrap();
        let bad = SMALL.replace(r#"{"name": "c"}"#, r#"{"name": "c", "bw_internal_bps": 1.0, "bw_external_bps": 1.0}"#);
        let err = CalibrationSet::from_json_str(&bad).unwrap_err();
        assert!(err.to_string().contains("bandwidth ratio"), "{err}");
    }

    #[test]
    fn derive_ratios_hand_example() {
        let cal = load_calibration(SMALL.as_bytes()).unwrap();
        let r = derive_ratios(&cal, "w", "h", "c", 2).unwrap();
        assert_eq!((r.r_tx(), r.r_comp(), r.r_ssd()), (0.5, 0.25, 1.0));
        let err = derive_ratios(&cal, "w", "h", "nope", 1).unwrap_err();
        assert!(matches!(err, Error::Lookup(_)));
        let err = derive_ratios(&cal, "w", "h", "c", 5).unwrap_err();
        assert!(matches!(err, Error::Domain(_)));
    }

    #[test]
    fn missing_measurement_names_triple() {
        let text = SMALL.replace(
            r#""workloads": [{"name": "w", "working_set_bytes": 1000}]"#,
            r#""workloads": [{"name": "w", "working_set_bytes": 1000}, {"name": "v", "working_set_bytes": 1}]"#,
        );
        let cal = CalibrationSet::from_json_str(&text).unwrap();
        let err = derive_ratios(&cal, "v", "h", "c", 1).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("\"v\"") && msg.contains("\"h\"") && msg.contains("normal"), "{msg}");
    }

    #[test]
    fn classify_boundaries() {
        assert_eq!(WorkloadClass::from_times(10.0, 10.0).unwrap().class, WorkloadKind::ComputeIntensive);
        let c = WorkloadClass::from_times(30.0, 10.0).unwrap();
        assert_eq!(c.ctr, 0.25);
        assert_eq!(c.class, WorkloadKind::IoIntensive);
    }

    #[test]
    fn fit_slowdown_examples() {
        let n = rec("w", "h", Condition::Normal, 10.0, 20.0);
        let over = Condition::Overloaded {
            available_memory_bytes: 1,
        };
        let same = rec("w", "h", over, 10.0, 20.0);
        assert_eq!(fit_slowdown(&n, &same).unwrap().factors, SlowdownFactors::NORMAL);

        let o = rec("w", "h", over, 40.0, 30.0);
        let f = fit_slowdown(&n, &o).unwrap();
        assert_eq!((f.factors.sd_tx(), f.factors.sd_comp()), (4.0, 1.5));
        assert!(f.clamped.is_empty());

        let noisy = rec("w", "h", over, 9.9, 21.0);
        let f = fit_slowdown(&n, &noisy).unwrap();
        assert_eq!(f.factors.sd_tx(), 1.0);
        assert_eq!(f.clamped, vec!["sd_tx"]);

        let other = rec("v", "h", over, 40.0, 30.0);
        assert!(matches!(fit_slowdown(&n, &other), Err(Error::Domain(_))));
    }

    #[test]
    fn fitted_slowdown_lookup() {
        let cal = load_calibration(SMALL.as_bytes()).unwrap();
        let f = cal.fitted_slowdown("w", "h", 2000).unwrap();
        assert_eq!((f.factors.sd_tx(), f.factors.sd_comp()), (4.0, 1.5));
        assert!(cal.fitted_slowdown("w", "h", 1).is_err());
    }

    #[test]
    fn round_trip_is_equal() {
        let cal = load_calibration(SMALL.as_bytes()).unwrap();
        let again = CalibrationSet::from_json_str(&cal.to_json_string()).unwrap();
        assert_eq!(cal, again);
    }

    #[test]
    fn at_cores_rescales() {
        let r1 = RatioSet::new(0.5, 0.2, 3.0, 1).unwrap();
        let r4 = r1.at_cores(4).unwrap();
        assert_eq!(r4.r_comp(), 0.05);
        assert_eq!(r4.r_ssd(), 12.0);
        assert_eq!(r4.at_cores(1).unwrap(), r1);
    }
}
