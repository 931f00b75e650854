//! Capacity planning for computational-storage (CSD) arrays.
//!
//! Given measured timings of a host with block SSDs and of one or more
//! CSDs, this crate finds the break-even point (BEP): the smallest number
//! of CSDs at which a CSD array is strictly faster than an SSD array
//! driven by the host. It also sweeps what-if parameter spaces and
//! compares total cost of ownership.
//!
//! ```
//! use csdplan_core::{bep_closed_form, CsdProfile, HostProfile, SlowdownFactors};
//!
//! let host = HostProfile::new(10.0, 20.0, 64, 8).unwrap();
//! let csd = CsdProfile::new("newport", 20.0, 60.0).unwrap();
//! let r = bep_closed_form(&host, &csd, 1, SlowdownFactors::NORMAL).unwrap();
//! assert_eq!(r.bep, Some(4));
//! ```

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calibration;
pub mod error;
pub mod model;
pub mod plan;
pub mod solver;
pub mod tco;
pub mod whatif;

pub use calibration::{
    classify_workload, derive_ratios, fit_slowdown, load_calibration, CalibrationSet, Condition, MeasurementRecord,
    RatioSet, WorkloadClass, WorkloadKind,
};
pub use error::{Error, Result, Violation};
pub use model::{
    csd_array_time, effective_ssd_count, ssd_array_time, ssd_system_time, throughput, CsdProfile, HostProfile,
    SlowdownFactors, SystemTime, WorkloadProfile,
};
pub use solver::{bep_bruteforce, bep_closed_form, default_m_max, s_normal, s_overload, BepResult, Method};
pub use tco::{candidate_from_bep, compare_tco, CostModel, TcoReport};
pub use whatif::{
    bep_diff_series, iso_bep_contour, sweep_bep_hardware, sweep_bep_overload, sweep_bep_system, throughput_curves,
    AxisParameter, AxisSpec, BepSurface, CurveSet, SweepMode, SystemDescriptor,
};
