use csdplan_core::solver::overload_real;
use csdplan_core::*;
use proptest::prelude::*;

#[allow(clippy::too_many_arguments)]
/// Host and CSD totals computed straight from the array formulas, so the
/// search below shares no code with the library.
fn reference_bep(tx: f64, comp1: f64, n: u32, k: u32, ctx: f64, ccomp: f64, sd: (f64, f64), m_max: u32) -> Option<u32> {
    (1..=m_max).find(|&m| {
        let ssd = sd.0 * tx / f64::from(m.min(k)) + sd.1 * comp1 / f64::from(n);
        let csd = ctx / f64::from(m) + ccomp / f64::from(m);
        ssd > csd
    })
}

fn log_uniform(lo: f64, hi: f64) -> impl Strategy<Value = f64> {
    (lo.ln()..hi.ln()).prop_map(f64::exp)
}

#[derive(Debug, Clone)]
struct Case {
    tx: f64,
    comp1: f64,
    ctx: f64,
    ccomp: f64,
    cores: u32,
    k: u32,
    sd: (f64, f64),
}

impl Case {
    fn host(&self) -> HostProfile {
        HostProfile::new(self.tx, self.comp1, 64, self.k).unwrap()
    }

    fn csd(&self) -> CsdProfile {
        CsdProfile::new("c", self.ctx, self.ccomp).unwrap()
    }

    fn sd(&self) -> SlowdownFactors {
        SlowdownFactors::new(self.sd.0, self.sd.1).unwrap()
    }
}

fn case() -> impl Strategy<Value = Case> {
    (
        log_uniform(0.01, 1000.0),
        log_uniform(0.01, 1000.0),
        log_uniform(0.01, 1000.0),
        log_uniform(0.01, 1000.0),
        1u32..=64,
        1u32..=32,
        1.0f64..16.0,
        1.0f64..16.0,
    )
        .prop_map(|(tx, comp1, ctx, ccomp, cores, k, a, b)| Case {
            tx,
            comp1,
            ctx,
            ccomp,
            cores,
            k,
            sd: (a, b),
        })
}

fn ratios() -> impl Strategy<Value = RatioSet> {
    (log_uniform(0.01, 100.0), log_uniform(0.01, 100.0), log_uniform(0.001, 1000.0))
        .prop_map(|(a, b, c)| RatioSet::new(a, b, c, 1).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn closed_form_matches_enumeration(c in case()) {
        let m_max = 4000;
        let expect = reference_bep(c.tx, c.comp1, c.cores, c.k, c.ctx, c.ccomp, c.sd, m_max);
        let closed = bep_closed_form(&c.host(), &c.csd(), c.cores, c.sd()).unwrap();
        if let Some(e) = expect {
            prop_assert_eq!(closed.bep, Some(e), "{:?} {:?}", c, closed);
            prop_assert_eq!(closed.saturated, e > c.k);
        } else {
            prop_assert!(closed.bep.unwrap() > m_max);
        }
        let oracle = bep_bruteforce(&c.host(), &c.csd(), c.cores, c.sd(), m_max).unwrap();
        prop_assert_eq!(oracle.bep, expect);
        prop_assert_eq!(oracle.infeasible, expect.is_none());
    }

    #[test]
    fn ratio_form_matches_time_form_when_unsaturated(c in case()) {
        let closed = bep_closed_form(&c.host(), &c.csd(), c.cores, c.sd()).unwrap();
        if closed.method != Method::ClosedForm {
            return Ok(());
        }
        let r = RatioSet::from_profiles(&c.host(), &c.csd(), c.cores).unwrap();
        let real = overload_real(&r, c.sd()).unwrap();
        // The two ceilings differ only on an exactly integral quotient.
        if real >= 1.0 && (real - real.round()).abs() <= 1e-6 * real {
            return Ok(());
        }
        prop_assert_eq!(Some(s_overload(&r, c.sd()).unwrap()), closed.bep);
        if c.sd == (1.0, 1.0) {
            prop_assert_eq!(Some(s_normal(&r).unwrap()), closed.bep);
        }
    }

    #[test]
    fn bep_never_below_one(c in case()) {
        let closed = bep_closed_form(&c.host(), &c.csd(), c.cores, c.sd()).unwrap();
        prop_assert!(closed.bep.unwrap() >= 1);
    }

    #[test]
    fn s_normal_non_increasing_in_hardware(r in ratios(), f in 1.0f64..8.0) {
        let base = s_normal(&r).unwrap();
        prop_assert!(base >= 1);
        prop_assert!(s_normal(&r.scaled(f, 1.0).unwrap()).unwrap() <= base);
        prop_assert!(s_normal(&r.scaled(1.0, f).unwrap()).unwrap() <= base);
    }

    #[test]
    fn s_overload_non_increasing_in_slowdown(r in ratios(), a in 1.0f64..16.0, b in 1.0f64..16.0, f in 1.0f64..4.0) {
        let sd = SlowdownFactors::new(a, b).unwrap();
        let v = s_overload(&r, sd).unwrap();
        prop_assert!(v >= 1);
        prop_assert!(s_overload(&r, SlowdownFactors::new(a * f, b).unwrap()).unwrap() <= v);
        prop_assert!(s_overload(&r, SlowdownFactors::new(a, b * f).unwrap()).unwrap() <= v);
        prop_assert_eq!(s_overload(&r, SlowdownFactors::NORMAL).unwrap(), s_normal(&r).unwrap());
    }

    #[test]
    fn single_device_is_the_plain_system(c in case()) {
        let one = ssd_array_time(&c.host(), c.cores, 1, c.sd()).unwrap();
        let sys = ssd_system_time(&c.host(), c.cores, c.sd()).unwrap();
        prop_assert_eq!(one, sys);
        let csd = csd_array_time(&c.csd(), 1).unwrap();
        prop_assert_eq!(csd.total, c.ctx + c.ccomp);
    }

    #[test]
    fn host_plateaus_at_k_limit(c in case(), extra in 0u32..64) {
        let at_k = ssd_array_time(&c.host(), c.cores, c.k, c.sd()).unwrap();
        let beyond = ssd_array_time(&c.host(), c.cores, c.k + extra, c.sd()).unwrap();
        prop_assert_eq!(at_k, beyond);
    }

    #[test]
    fn csd_time_ignores_host_slowdown(c in case(), m in 1u32..200) {
        let before = csd_array_time(&c.csd(), m).unwrap();
        let _ = ssd_array_time(&c.host(), c.cores, m, c.sd()).unwrap();
        prop_assert_eq!(csd_array_time(&c.csd(), m).unwrap(), before);
    }

    #[test]
    fn ratios_rescale_with_cores(c in case()) {
        let base = RatioSet::from_profiles(&c.host(), &c.csd(), 1).unwrap();
        let direct = RatioSet::from_profiles(&c.host(), &c.csd(), c.cores).unwrap();
        let scaled = base.at_cores(c.cores).unwrap();
        let n = f64::from(c.cores);
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs());
        prop_assert!(close(direct.r_comp(), base.r_comp() / n));
        prop_assert!(close(direct.r_ssd(), base.r_ssd() * n));
        prop_assert!(close(scaled.r_comp(), direct.r_comp()));
        prop_assert!(close(scaled.r_ssd(), direct.r_ssd()));
        prop_assert_eq!(direct.r_tx(), base.r_tx());
    }

    #[test]
    fn ratio_quotient_agrees_with_time_quotient(c in case()) {
        let r = RatioSet::from_profiles(&c.host(), &c.csd(), c.cores).unwrap();
        let closed = bep_closed_form(&c.host(), &c.csd(), c.cores, c.sd()).unwrap();
        let time_real = closed.intermediates.unwrap().real_value;
        let ratio_real = overload_real(&r, c.sd()).unwrap();
        prop_assert!((time_real - ratio_real).abs() <= 1e-9 * time_real.abs().max(1.0), "{} vs {}", time_real, ratio_real);
    }

    #[test]
    fn hardware_surface_cells_match_solver(r in ratios()) {
        let x = AxisSpec::stepped(AxisParameter::RTxMultiplier, 0.5, 4.0, 0.5).unwrap();
        let y = AxisSpec::stepped(AxisParameter::RCompMultiplier, 0.5, 4.0, 0.5).unwrap();
        let s = sweep_bep_hardware(&r, &x, &y).unwrap();
        for (xv, yv, v) in s.cells() {
            prop_assert_eq!(v, s_normal(&r.scaled(xv, yv).unwrap()).unwrap());
        }
        prop_assert_eq!(&sweep_bep_hardware(&r, &x, &y).unwrap(), &s);
        for c in 1..=4 {
            let contour = iso_bep_contour(&s, c);
            let expected: Vec<_> = s.cells().filter(|p| p.2 == c).map(|p| (p.0, p.1)).collect();
            prop_assert_eq!(contour, expected);
        }
    }

    #[test]
    fn system_surface_cells_match_solver(c in case()) {
        let x = AxisSpec::stepped(AxisParameter::KLimit, 1.0, 12.0, 1.0).unwrap();
        let y = AxisSpec::stepped(AxisParameter::SdComp, 1.0, 4.0, 0.5).unwrap();
        let s = sweep_bep_system(&c.host(), &c.csd(), c.cores, c.sd(), &x, &y);
        let Ok(s) = s else { return Ok(()); };
        for (xv, yv, v) in s.cells() {
            let h = c.host().with_k_limit(xv as u32).unwrap();
            let sd = SlowdownFactors::new(c.sd.0, yv).unwrap();
            prop_assert_eq!(Some(v), bep_closed_form(&h, &c.csd(), c.cores, sd).unwrap().bep);
        }
    }

    #[test]
    fn diff_series_is_monotone(r in ratios(), mut sds in prop::collection::vec(1.0f64..16.0, 1..8)) {
        sds.sort_by(f64::total_cmp);
        let series = bep_diff_series(&r, &sds).unwrap();
        for w in series.windows(2) {
            prop_assert!(w[1].diff_from_base >= w[0].diff_from_base);
        }
        prop_assert!(series.iter().all(|p| p.diff_from_base >= 0));
    }
}

#[test]
fn identical_systems_break_even_at_two() {
    let host = HostProfile::new(10.0, 20.0, 8, 8).unwrap();
    let csd = CsdProfile::new("twin", 10.0, 20.0).unwrap();
    let r = bep_closed_form(&host, &csd, 1, SlowdownFactors::NORMAL).unwrap();
    assert_eq!(r.bep, reference_bep(10.0, 20.0, 1, 8, 10.0, 20.0, (1.0, 1.0), 100));
    assert_eq!(r.bep, Some(2));
}
