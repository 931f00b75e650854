//! Total cost of ownership at throughput parity.
//!
//! Only the up-front CPU and storage prices are counted. Money is held in
//! integer cents so totals and differences are exact.

use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize, Serializer};

use crate::calibration::RatioSet;
use crate::error::{domain, lookup, Result};
use crate::model::SlowdownFactors;
use crate::solver::s_overload;

/// An amount of money in cents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Cents(pub i64);

impl Cents {
    pub fn from_dollars(d: f64) -> Result<Self> {
        if !d.is_finite() {
            return Err(domain(format!("price {d} is not finite")));
        }
        Ok(Cents((d * 100.0).round() as i64))
    }

    pub fn dollars(self) -> f64 {
        self.0 as f64 / 100.0
    }
}

impl fmt::Display for Cents {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.0 < 0 { "-" } else { "" };
        let a = self.0.unsigned_abs();
        write!(f, "{sign}{}.{:02}", a / 100, a % 100)
    }
}

impl Serialize for Cents {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_f64(self.dollars())
    }
}

impl<'de> Deserialize<'de> for Cents {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = f64::deserialize(d)?;
        Cents::from_dollars(v).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CpuEntry {
    pub name: String,
    pub benchmark_mark: f64,
    pub price: Cents,
    /// Computation slow-down relative to the baseline CPU.
    pub slowdown_vs_baseline: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CostModel {
    pub ssd_unit_price: Cents,
    pub csd_unit_price: Cents,
    pub cpu_catalog: Vec<CpuEntry>,
}

impl CostModel {
    pub fn from_json_str(text: &str) -> Result<Self> {
        let m: CostModel = serde_json::from_str(text).map_err(|e| crate::Error::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if self.ssd_unit_price.0 <= 0 || self.csd_unit_price.0 <= 0 {
            return Err(domain("unit prices must be > 0"));
        }
        for c in &self.cpu_catalog {
            if c.price.0 <= 0 {
                return Err(domain(format!("cpu \"{}\" price must be > 0", c.name)));
            }
            if !(c.benchmark_mark.is_finite() && c.benchmark_mark > 0.0) {
                return Err(domain(format!("cpu \"{}\" benchmark_mark must be > 0", c.name)));
            }
            if !(c.slowdown_vs_baseline.is_finite() && c.slowdown_vs_baseline >= 1.0) {
                return Err(domain(format!("cpu \"{}\" slowdown_vs_baseline must be >= 1", c.name)));
            }
        }
        Ok(())
    }

    pub fn cpu(&self, name: &str) -> Result<&CpuEntry> {
        self.cpu_catalog
            .iter()
            .find(|c| c.name == name)
            .ok_or_else(|| lookup(format!("unknown cpu \"{name}\"")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaselineSystem {
    pub cpu: String,
    pub ssd_count: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CandidateSystem {
    pub cpu: String,
    pub csd_count: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeviceKind {
    Ssd,
    Csd,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TcoRow {
    pub system_name: String,
    pub cpu_name: String,
    pub cpu_cost: Cents,
    pub device_count: u32,
    pub device_kind: DeviceKind,
    pub storage_cost: Cents,
    pub total_cost: Cents,
    pub mark_per_dollar: f64,
    pub saved_vs_baseline_percent: f64,
}

impl TcoRow {
    pub fn saved_percent_rounded(&self) -> i64 {
        self.saved_vs_baseline_percent.round() as i64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TcoReport {
    pub rows: Vec<TcoRow>,
}

impl TcoReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "system_name,cpu_name,cpu_cost,device_count,device_kind,storage_cost,total_cost,mark_per_dollar,saved_vs_baseline_percent\n",
        );
        for r in &self.rows {
            let kind = match r.device_kind {
                DeviceKind::Ssd => "ssd",
                DeviceKind::Csd => "csd",
            };
            let _ = writeln!(
                out,
                "{},{},{},{},{kind},{},{},{:.1},{}",
                quote(&r.system_name),
                quote(&r.cpu_name),
                r.cpu_cost,
                r.device_count,
                r.storage_cost,
                r.total_cost,
                r.mark_per_dollar,
                r.saved_percent_rounded()
            );
        }
        out
    }
}

fn quote(s: &str) -> String {
    if s.contains([',', '"']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn candidate_name(i: usize) -> String {
    let letter = (b'A' + (i % 26) as u8) as char;
    format!("CSD-system ({letter})")
}

/// Cost of the baseline and each candidate. Every row's mark-per-dollar
/// uses the baseline CPU's mark, since candidates are sized to deliver
/// the baseline's throughput.
pub fn compare_tco(baseline: &BaselineSystem, candidates: &[CandidateSystem], costs: &CostModel) -> Result<TcoReport> {
    costs.validate()?;
    let base_cpu = costs.cpu(&baseline.cpu)?;
    if base_cpu.slowdown_vs_baseline != 1.0 {
        return Err(domain(format!(
            "baseline cpu \"{}\" must have slowdown_vs_baseline = 1, got {}",
            base_cpu.name, base_cpu.slowdown_vs_baseline
        )));
    }
    if baseline.ssd_count < 1 {
        return Err(domain("baseline ssd_count must be >= 1"));
    }
    let base_storage = Cents(costs.ssd_unit_price.0 * i64::from(baseline.ssd_count));
    let base_total = Cents(base_cpu.price.0 + base_storage.0);
    let mark = base_cpu.benchmark_mark;

    let mut rows = vec![TcoRow {
        system_name: "SSD-system".into(),
        cpu_name: base_cpu.name.clone(),
        cpu_cost: base_cpu.price,
        device_count: baseline.ssd_count,
        device_kind: DeviceKind::Ssd,
        storage_cost: base_storage,
        total_cost: base_total,
        mark_per_dollar: mark / base_total.dollars(),
        saved_vs_baseline_percent: 0.0,
    }];
    for (i, c) in candidates.iter().enumerate() {
        let cpu = costs.cpu(&c.cpu)?;
        if c.csd_count < 1 {
            return Err(domain(format!("candidate {} csd_count must be >= 1", i + 1)));
        }
        let storage = Cents(costs.csd_unit_price.0 * i64::from(c.csd_count));
        let total = Cents(cpu.price.0 + storage.0);
        rows.push(TcoRow {
            system_name: c.name.clone().unwrap_or_else(|| candidate_name(i)),
            cpu_name: cpu.name.clone(),
            cpu_cost: cpu.price,
            device_count: c.csd_count,
            device_kind: DeviceKind::Csd,
            storage_cost: storage,
            total_cost: total,
            mark_per_dollar: mark / total.dollars(),
            saved_vs_baseline_percent: (1.0 - total.0 as f64 / base_total.0 as f64) * 100.0,
        });
    }
    Ok(TcoReport { rows })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CandidateCount {
    pub csd_count: u32,
    pub diff: i64,
}

/// CSDs needed when the host CPU is `cpu_slowdown` times slower than the
/// one the ratios were measured on.
pub fn candidate_from_bep(ratios: &RatioSet, cpu_slowdown: f64, base_bep: u32) -> Result<CandidateCount> {
    let csd_count = s_overload(ratios, SlowdownFactors::new(1.0, cpu_slowdown)?)?;
    Ok(CandidateCount {
        csd_count,
        diff: i64::from(base_bep) - i64::from(csd_count),
    })
}
