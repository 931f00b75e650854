//! Execution-time models for single-device and array systems.
//!
//! An SSD system runs the kernel on `n` host cores; its transfer time is
//! fixed and its computation time scales as `1/n`. An SSD array divides
//! the transfer time by the number of SSDs until the host interconnect
//! saturates at `k_limit` devices. A CSD array divides both transfer and
//! computation by the number of devices with no cap, and is never affected
//! by host slow-down.
//!
//! All times are seconds in `f64`.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// A kernel and the size of the data it processes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkloadProfile {
    pub name: String,
    pub working_set_bytes: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
}

/// Host-side timings of one workload, plus the host's scaling limits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HostProfile {
    t_ssd_tx: f64,
    t_ssd_comp_single: f64,
    max_cores: u32,
    k_limit: u32,
}

impl HostProfile {
    pub fn new(t_ssd_tx: f64, t_ssd_comp_single: f64, max_cores: u32, k_limit: u32) -> Result<Self> {
        if !(t_ssd_tx.is_finite() && t_ssd_tx >= 0.0) {
            return Err(domain(format!("host t_ssd_tx must be finite and >= 0, got {t_ssd_tx}")));
        }
        if !(t_ssd_comp_single.is_finite() && t_ssd_comp_single > 0.0) {
            return Err(domain(format!(
                "host t_ssd_comp_single must be finite and > 0, got {t_ssd_comp_single}"
            )));
        }
        if max_cores < 1 {
            return Err(domain("host max_cores must be >= 1"));
        }
        if k_limit < 1 {
            return Err(domain("host k_limit must be >= 1"));
        }
        Ok(Self {
            t_ssd_tx,
            t_ssd_comp_single,
            max_cores,
            k_limit,
        })
    }

    pub fn t_ssd_tx(&self) -> f64 {
        self.t_ssd_tx
    }

    pub fn t_ssd_comp_single(&self) -> f64 {
        self.t_ssd_comp_single
    }

    pub fn max_cores(&self) -> u32 {
        self.max_cores
    }

    pub fn k_limit(&self) -> u32 {
        self.k_limit
    }

    /// Same host with a different saturation point.
    pub fn with_k_limit(self, k_limit: u32) -> Result<Self> {
        Self::new(self.t_ssd_tx, self.t_ssd_comp_single, self.max_cores, k_limit)
    }

    pub fn check_cores(&self, cores: u32) -> Result<()> {
        if cores < 1 {
            return Err(domain(format!("cores = {cores} violates lower bound cores >= 1")));
        }
        if cores > self.max_cores {
            return Err(domain(format!(
                "cores = {cores} violates upper bound cores <= max_cores = {}",
                self.max_cores
            )));
        }
        Ok(())
    }

    /// Computation time on `cores` cores under normal conditions.
    pub fn t_ssd_comp(&self, cores: u32) -> Result<f64> {
        self.check_cores(cores)?;
        Ok(self.t_ssd_comp_single / f64::from(cores))
    }
}

/// Device-side timings of one workload on a CSD.
///
/// `t_csd_comp` is measured at the device's best parallel configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CsdProfile {
    name: String,
    t_csd_tx: f64,
    t_csd_comp: f64,
    bw_internal: Option<f64>,
    bw_external: Option<f64>,
}

impl CsdProfile {
    pub fn new(name: impl Into<String>, t_csd_tx: f64, t_csd_comp: f64) -> Result<Self> {
        let name = name.into();
        if !(t_csd_tx.is_finite() && t_csd_tx >= 0.0) {
            return Err(domain(format!("csd {name}: t_csd_tx must be finite and >= 0, got {t_csd_tx}")));
        }
        if !(t_csd_comp.is_finite() && t_csd_comp > 0.0) {
            return Err(domain(format!("csd {name}: t_csd_comp must be finite and > 0, got {t_csd_comp}")));
        }
        Ok(Self {
            name,
            t_csd_tx,
            t_csd_comp,
            bw_internal: None,
            bw_external: None,
        })
    }

    pub fn with_bandwidths(mut self, internal: Option<f64>, external: Option<f64>) -> Self {
        self.bw_internal = internal;
        self.bw_external = external;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn t_csd_tx(&self) -> f64 {
        self.t_csd_tx
    }

    pub fn t_csd_comp(&self) -> f64 {
        self.t_csd_comp
    }

    pub fn bw_internal(&self) -> Option<f64> {
        self.bw_internal
    }

    pub fn bw_external(&self) -> Option<f64> {
        self.bw_external
    }

    /// Internal/external bandwidth ratio, when both bandwidths are known.
    pub fn bandwidth_ratio(&self) -> Option<f64> {
        match (self.bw_internal, self.bw_external) {
            (Some(i), Some(e)) if e > 0.0 => Some(i / e),
            _ => None,
        }
    }
}

/// Multiplicative degradation of host transfer and compute time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSlowdown")]
pub struct SlowdownFactors {
    sd_tx: f64,
    sd_comp: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSlowdown {
    sd_tx: f64,
    sd_comp: f64,
}

impl TryFrom<RawSlowdown> for SlowdownFactors {
    type Error = Error;

    fn try_from(raw: RawSlowdown) -> Result<Self> {
        Self::new(raw.sd_tx, raw.sd_comp)
    }
}

impl SlowdownFactors {
    pub const NORMAL: Self = Self {
        sd_tx: 1.0,
        sd_comp: 1.0,
    };

    pub fn new(sd_tx: f64, sd_comp: f64) -> Result<Self> {
        if !(sd_tx.is_finite() && sd_tx >= 1.0) {
            return Err(domain(format!("sd_tx = {sd_tx} violates sd_tx >= 1")));
        }
        if !(sd_comp.is_finite() && sd_comp >= 1.0) {
            return Err(domain(format!("sd_comp = {sd_comp} violates sd_comp >= 1")));
        }
        Ok(Self { sd_tx, sd_comp })
    }

    pub fn sd_tx(&self) -> f64 {
        self.sd_tx
    }

    pub fn sd_comp(&self) -> f64 {
        self.sd_comp
    }

    pub fn is_normal(&self) -> bool {
        self.sd_tx == 1.0 && self.sd_comp == 1.0
    }
}

impl Default for SlowdownFactors {
    fn default() -> Self {
        Self::NORMAL
    }
}

/// Execution time split into its transfer and computation terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SystemTime {
    pub transfer: f64,
    pub compute: f64,
    pub total: f64,
}

impl SystemTime {
    fn new(transfer: f64, compute: f64) -> Self {
        Self {
            transfer,
            compute,
            total: transfer + compute,
        }
    }
}

/// Single-SSD host system on `cores` cores.
pub fn ssd_system_time(host: &HostProfile, cores: u32, sd: SlowdownFactors) -> Result<SystemTime> {
    let comp = host.t_ssd_comp(cores)?;
    Ok(SystemTime::new(sd.sd_tx * host.t_ssd_tx, sd.sd_comp * comp))
}

/// Number of SSDs that actually contribute transfer bandwidth.
pub fn effective_ssd_count(m: u32, k_limit: u32) -> u32 {
    if m < k_limit {
        m
    } else {
        k_limit
    }
}

/// Host system reading from an array of `m` SSDs.
pub fn ssd_array_time(host: &HostProfile, cores: u32, m: u32, sd: SlowdownFactors) -> Result<SystemTime> {
    if m < 1 {
        return Err(domain("device count m must be >= 1"));
    }
    let comp = host.t_ssd_comp(cores)?;
    let effective = effective_ssd_count(m, host.k_limit);
    Ok(SystemTime::new(
        sd.sd_tx * host.t_ssd_tx / f64::from(effective),
        sd.sd_comp * comp,
    ))
}

/// Array of `m` CSDs, each processing its own shard.
pub fn csd_array_time(csd: &CsdProfile, m: u32) -> Result<SystemTime> {
    if m < 1 {
        return Err(domain("device count m must be >= 1"));
    }
    let m = f64::from(m);
    Ok(SystemTime::new(csd.t_csd_tx / m, csd.t_csd_comp / m))
}

/// Bytes per second for processing the workload's working set.
pub fn throughput(workload: &WorkloadProfile, time: &SystemTime) -> Result<f64> {
    if !(time.total > 0.0) {
        return Err(domain(format!(
            "throughput needs a positive total time, got {}",
            time.total
        )));
    }
    Ok(workload.working_set_bytes as f64 / time.total)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn host(tx: f64, comp: f64) -> HostProfile {
        HostProfile::new(tx, comp, 64, 8).unwrap()
    }

    #[test]
    fn ssd_system_examples() {
        let h = host(10.0, 20.0);
        assert_eq!(ssd_system_time(&h, 1, SlowdownFactors::NORMAL).unwrap().total, 30.0);
        assert_eq!(ssd_system_time(&h, 4, SlowdownFactors::NORMAL).unwrap().total, 15.0);
        let sd = SlowdownFactors::new(2.0, 3.0).unwrap();
        assert_eq!(ssd_system_time(&h, 2, sd).unwrap().total, 50.0);
    }

    #[test]
    fn cores_out_of_range_names_bound() {
        let h = HostProfile::new(10.0, 20.0, 4, 8).unwrap();
        let err = ssd_system_time(&h, 5, SlowdownFactors::NORMAL).unwrap_err();
        assert!(err.to_string().contains("max_cores = 4"), "{err}");
        let err = ssd_system_time(&h, 0, SlowdownFactors::NORMAL).unwrap_err();
        assert!(err.to_string().contains("cores >= 1"), "{err}");
    }

    #[test]
    fn effective_count_caps_at_k_limit() {
        assert_eq!(effective_ssd_count(5, 8), 5);
        assert_eq!(effective_ssd_count(12, 8), 8);
        assert_eq!(effective_ssd_count(8, 8), 8);
    }

    #[test]
    fn ssd_array_examples() {
        let h = host(10.0, 20.0);
        let n = SlowdownFactors::NORMAL;
        assert_eq!(ssd_array_time(&h, 4, 2, n).unwrap().total, 10.0);
        assert_eq!(ssd_array_time(&h, 4, 16, n).unwrap().total, 6.25);
        assert_eq!(ssd_array_time(&h, 1, 1, n).unwrap().total, 30.0);
    }

    #[test]
    fn csd_array_examples() {
        let c = CsdProfile::new("c", 12.0, 30.0).unwrap();
        assert_eq!(csd_array_time(&c, 1).unwrap().total, 42.0);
        assert_eq!(csd_array_time(&c, 3).unwrap().total, 14.0);
        let c = CsdProfile::new("c", 20.0, 60.0).unwrap();
        assert_eq!(csd_array_time(&c, 4).unwrap().total, 20.0);
    }

    #[test]
    fn throughput_examples() {
        let w = WorkloadProfile {
            name: "count".into(),
            working_set_bytes: 4_800_000_000,
            description: None,
        };
        let t = SystemTime::new(10.0, 20.0);
        assert!((throughput(&w, &t).unwrap() - 0.16e9).abs() < 1.0);

        let c = CsdProfile::new("c", 12.0, 30.0).unwrap();
        let t1 = throughput(&w, &csd_array_time(&c, 3).unwrap()).unwrap();
        let t2 = throughput(&w, &csd_array_time(&c, 6).unwrap()).unwrap();
        assert_eq!(t2, 2.0 * t1);

        assert!(throughput(&w, &SystemTime::new(0.0, 0.0)).is_err());
    }

    #[test]
    fn slowdown_rejects_below_one() {
        assert!(SlowdownFactors::new(0.99, 1.0).is_err());
        assert!(SlowdownFactors::new(1.0, f64::NAN).is_err());
        assert!(serde_json::from_str::<SlowdownFactors>(r#"{"sd_tx":0.5,"sd_comp":1}"#).is_err());
    }

    #[test]
    fn host_rejects_bad_fields() {
        assert!(HostProfile::new(-1.0, 1.0, 1, 1).is_err());
        assert!(HostProfile::new(1.0, 0.0, 1, 1).is_err());
        assert!(HostProfile::new(1.0, 1.0, 0, 1).is_err());
        assert!(HostProfile::new(1.0, 1.0, 1, 0).is_err());
    }
}
