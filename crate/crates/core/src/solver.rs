//! Break-even device counts.
//!
//! Three routes are provided:
//!
//! * [`bep_closed_form`] works on measured times and covers both the
//!   regime where the SSD array is still scaling and the regime where the
//!   host interconnect has saturated at `k_limit`.
//! * [`bep_bruteforce`] enumerates device counts and compares the two
//!   array models directly. It shares no arithmetic with the closed form
//!   beyond the model functions themselves.
//! * [`s_normal`] / [`s_overload`] evaluate the ratio form used by the
//!   what-if sweeps.
//!
//! "Break even" means the CSD array is strictly faster. The closed form
//! follows that rule exactly: an integral pre-ceiling value `q` yields
//! `q + 1`, which is what the enumeration finds. The ratio functions apply
//! a plain ceiling, so on an exactly integral value they report `q`.

use serde::Serialize;

use crate::calibration::RatioSet;
use crate::error::{domain, Error, Result};
use crate::model::{csd_array_time, ssd_array_time, CsdProfile, HostProfile, SlowdownFactors};

/// Values this close to an integer are treated as that integer before
/// taking a ceiling. Relative for magnitudes above 1.
pub const SNAP_TOLERANCE: f64 = 1e-9;

/// Default search bound for the enumeration oracle.
pub fn default_m_max(k_limit: u32) -> u32 {
    k_limit.saturating_mul(4).saturating_add(64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ClosedForm,
    ClosedFormSaturated,
    BruteForce,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Intermediates {
    /// `t_csd_tx + t_csd_comp - sd_tx * t_ssd_tx`
    pub numerator: f64,
    /// `sd_comp * t_ssd_comp(n)`
    pub denominator: f64,
    /// `numerator / denominator`, before any ceiling.
    pub real_value: f64,
    /// Host time once transfer is capped at `k_limit` (saturated only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub saturated_floor: Option<f64>,
    /// `(t_csd_tx + t_csd_comp) / saturated_floor` (saturated only).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub saturated_real_value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BepResult {
    /// `None` only when `infeasible` is set.
    pub bep: Option<u32>,
    pub method: Method,
    /// The host transfer term is capped by `k_limit` at the break-even point.
    pub saturated: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub intermediates: Option<Intermediates>,
    pub infeasible: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub searched_bound: Option<u32>,
}

fn snap(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() <= SNAP_TOLERANCE * x.abs().max(1.0) {
        r
    } else {
        x
    }
}

/// Ceiling after snapping.
pub fn snapped_ceil(x: f64) -> f64 {
    snap(x).ceil()
}

/// Smallest integer strictly greater than `x` (after snapping).
pub fn strict_ceil(x: f64) -> f64 {
    let s = snap(x);
    if s == s.floor() {
        s + 1.0
    } else {
        s.ceil()
    }
}

fn to_count(v: f64) -> Result<u32> {
    let v = v.max(1.0);
    if !v.is_finite() || v > f64::from(u32::MAX) {
        return Err(domain(format!("break-even count {v} exceeds the representable range")));
    }
    Ok(v as u32)
}

pub fn bep_closed_form(host: &HostProfile, csd: &CsdProfile, cores: u32, sd: SlowdownFactors) -> Result<BepResult> {
    let comp_n = host.t_ssd_comp(cores)?;
    let csd_total = csd.t_csd_tx() + csd.t_csd_comp();
    let host_tx = sd.sd_tx() * host.t_ssd_tx();
    let numerator = csd_total - host_tx;
    let denominator = sd.sd_comp() * comp_n;
    if !(denominator > 0.0 && denominator.is_finite()) {
        return Err(domain(format!(
            "host computation term sd_comp * t_ssd_comp(n) = {denominator} must be > 0"
        )));
    }
    let real_value = numerator / denominator;
    let mut intermediates = Intermediates {
        numerator,
        denominator,
        real_value,
        saturated_floor: None,
        saturated_real_value: None,
    };

    let unsaturated = strict_ceil(real_value).max(1.0);
    let k_limit = host.k_limit();
    if unsaturated <= f64::from(k_limit) {
        return Ok(BepResult {
            bep: Some(to_count(unsaturated)?),
            method: Method::ClosedForm,
            saturated: false,
            intermediates: Some(intermediates),
            infeasible: false,
            searched_bound: None,
        });
    }

    // Past k_limit the SSD array time is constant, so the CSD array must
    // beat that floor instead.
    let floor = host_tx / f64::from(k_limit) + denominator;
    let q = csd_total / floor;
    intermediates.saturated_floor = Some(floor);
    intermediates.saturated_real_value = Some(q);
    let bep = strict_ceil(q).max(f64::from(k_limit) + 1.0);
    Ok(BepResult {
        bep: Some(to_count(bep)?),
        method: Method::ClosedFormSaturated,
        saturated: true,
        intermediates: Some(intermediates),
        infeasible: false,
        searched_bound: None,
    })
}

pub fn bep_bruteforce(
    host: &HostProfile,
    csd: &CsdProfile,
    cores: u32,
    sd: SlowdownFactors,
    m_max: u32,
) -> Result<BepResult> {
    if m_max < 1 {
        return Err(domain("m_max must be >= 1"));
    }
    host.check_cores(cores)?;
    for m in 1..=m_max {
        let ssd = ssd_array_time(host, cores, m, sd)?;
        let csd_t = csd_array_time(csd, m)?;
        if ssd.total > csd_t.total {
            return Ok(BepResult {
                bep: Some(m),
                method: Method::BruteForce,
                saturated: m > host.k_limit(),
                intermediates: None,
                infeasible: false,
                searched_bound: Some(m_max),
            });
        }
    }
    Ok(BepResult {
        bep: None,
        method: Method::BruteForce,
        saturated: false,
        intermediates: None,
        infeasible: true,
        searched_bound: Some(m_max),
    })
}

fn check_ratios(r: &RatioSet) -> Result<()> {
    for (name, v) in [("r_tx", r.r_tx()), ("r_comp", r.r_comp()), ("r_ssd", r.r_ssd())] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::Domain(format!("{name} must be > 0, got {v}")));
        }
    }
    Ok(())
}

/// Pre-ceiling value of the overload function.
pub fn overload_real(ratios: &RatioSet, sd: SlowdownFactors) -> Result<f64> {
    check_ratios(ratios)?;
    let inner = (ratios.r_tx().recip() - sd.sd_tx()) * ratios.r_ssd() + ratios.r_comp().recip();
    Ok(inner / sd.sd_comp())
}

/// Break-even count from ratios under normal host conditions.
pub fn s_normal(ratios: &RatioSet) -> Result<u32> {
    s_overload(ratios, SlowdownFactors::NORMAL)
}

/// Break-even count from ratios with host slow-down applied.
pub fn s_overload(ratios: &RatioSet, sd: SlowdownFactors) -> Result<u32> {
    to_count(snapped_ceil(overload_real(ratios, sd)?))
}
