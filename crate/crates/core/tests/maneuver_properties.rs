mod common;

use approx::assert_abs_diff_eq;
use proptest::prelude::*;

use common::{integrate_catch_up, Case};
use pass_core::baseline::{baseline_instant, BaselineConfig};
use pass_core::maneuver::{catch_up_maneuver, v_proj_multi, ManeuverPhase};
use pass_core::metric::{bracket, pass_instant, utilization, PassConfig};
use pass_core::traj::{LaneContext, SceneSnapshot};

fn cfg() -> PassConfig {
    PassConfig::default()
}

fn snapshot(v0: f64, lanes: Vec<LaneContext>, v_limit: f64) -> SceneSnapshot {
    SceneSnapshot {
        time: 0.0,
        ego_speed: v0,
        ego_lane: 0,
        lanes,
        speed_limit: v_limit,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn closed_form_matches_integration(
        v_limit in 5.0f64..40.0,
        v0_frac in 0.0f64..=1.0,
        vl_frac in 0.0f64..1.2,
        d in 0.0f64..500.0,
    ) {
        let c = Case {
            v0: v0_frac * v_limit,
            v_lead: vl_frac * v_limit,
            d,
            a1: 1.5,
            a2: -1.5,
            v_limit,
            free_horizon: 30.0,
        };
        let closed = catch_up_maneuver(c.v0, c.v_lead, c.d, &cfg(), v_limit).unwrap();
        let oracle = integrate_catch_up(&c);
        prop_assert!((closed.v_proj - oracle.v_proj).abs() < 1e-3,
            "closed {} vs integrated {} ({:?})", closed.v_proj, oracle.v_proj, closed.phase);
    }

    #[test]
    fn projected_speed_is_at_least_leader_speed(
        v_limit in 5.0f64..40.0,
        v0_frac in 0.0f64..=1.0,
        vl_frac in 0.0f64..1.0,
        d in 0.0f64..500.0,
    ) {
        let (v0, vl) = (v0_frac * v_limit, vl_frac * v_limit);
        let m = catch_up_maneuver(v0, vl, d, &cfg(), v_limit).unwrap();
        prop_assert!(m.v_proj >= vl - 1e-12);
        if d > 0.0 && m.duration > 0.0 {
            prop_assert!(m.v_proj > vl);
        }
        if matches!(m.phase, ManeuverPhase::TwoPhase | ManeuverPhase::LimitCapped) {
            prop_assert!(m.v_proj <= v_limit + 1e-9);
        }
    }

    #[test]
    fn two_phase_speed_increases_with_gap_and_leader_speed(
        v0 in 0.0f64..10.0,
        vl in 0.0f64..10.0,
        d in 0.5f64..20.0,
        bump in 0.01f64..1.0,
    ) {
        // A high limit keeps every variant in the two-phase branch.
        let v_limit = 200.0;
        let at = |vl: f64, d: f64| catch_up_maneuver(v0, vl, d, &cfg(), v_limit).unwrap();
        let base = at(vl, d);
        prop_assume!(base.phase == ManeuverPhase::TwoPhase);
        let wider = at(vl, d + bump);
        let faster = at(vl + bump, d);
        prop_assume!(wider.phase == ManeuverPhase::TwoPhase && faster.phase == ManeuverPhase::TwoPhase);
        prop_assert!(wider.v_proj > base.v_proj);
        prop_assert!(faster.v_proj > base.v_proj);
    }

    #[test]
    fn bracket_and_sign(a in -9.0f64..9.0, prev in -9.0f64..9.0, k1 in -1.0f64..-0.01, k2 in 0.01f64..1.0) {
        // |scaled change| <= 18 here; beyond ~19 the factor rounds to 2 in f64.
        let x = utilization(a, prev, k1, k2);
        let b = bracket(x);
        prop_assert!(b > 0.0 && b < 2.0);
        let p = pass_instant(a, x);
        prop_assert!(p.abs() <= 2.0 * a.abs());
        prop_assert_eq!(p == 0.0, a == 0.0);
        prop_assert!(a == 0.0 || p.signum() == a.signum());
    }

    #[test]
    fn pass_is_nondecreasing_in_the_change_of_space(
        a in prop_oneof![-30.0f64..-0.01, 0.01f64..30.0],
        d1 in -5.0f64..5.0,
        d2 in -5.0f64..5.0,
        k1 in -1.0f64..-0.01,
        k2 in 0.01f64..1.0,
    ) {
        let (lo, hi) = if d1 <= d2 { (d1, d2) } else { (d2, d1) };
        // Same current value, different previous value: only the change differs.
        let p_lo = pass_instant(a, utilization(a, a - lo, k1, k2));
        let p_hi = pass_instant(a, utilization(a, a - hi, k1, k2));
        prop_assert!(p_hi >= p_lo - 1e-12, "A = {a}: PASS({lo}) = {p_lo} > PASS({hi}) = {p_hi}");
    }

    #[test]
    fn one_lane_reduces_to_its_own_maneuver(v0 in 0.0f64..30.0, vl in 0.0f64..30.0, d in 0.0f64..200.0) {
        let v_limit = 30.0;
        let lane = LaneContext::with_leader(0, vl, d);
        let multi = v_proj_multi(&snapshot(v0, vec![lane], v_limit), &cfg()).unwrap();
        let single = catch_up_maneuver(v0, vl, d, &cfg(), v_limit).unwrap();
        prop_assert_eq!(multi.v_proj.to_bits(), single.v_proj.to_bits());
        prop_assert_eq!(multi.chosen_lane, 0);
    }

    #[test]
    fn baseline_bounds_and_monotonicity(
        vl in 0.0f64..30.0,
        d in 0.0f64..200.0,
        more in 0.0f64..50.0,
        slower in 0.0f64..10.0,
    ) {
        let cfg = BaselineConfig::default();
        let v_limit = 25.0;
        let b = |lane: LaneContext| baseline_instant(&snapshot(10.0, vec![lane], v_limit), &cfg);
        let here = b(LaneContext::with_leader(0, vl, d));
        prop_assert!((0.0..=1.0).contains(&here));
        prop_assert!(b(LaneContext::with_leader(0, vl, d + more)) <= here);
        prop_assert!(b(LaneContext::with_leader(0, (vl - slower).max(0.0), d)) >= here);
        prop_assert!(b(LaneContext::free(0).with_obstacle(d)) >= here);
    }
}

#[test]
fn multi_lane_can_lose_to_the_ego_lane_alone() {
    // Every lane is averaged over the longest maneuver, so a lane with a
    // long, slow maneuver pulls the others' averages down.
    let v_limit = 25.0;
    let ego_only = v_proj_multi(&snapshot(10.0, vec![LaneContext::with_leader(0, 10.0, 50.0)], v_limit), &cfg())
        .unwrap()
        .v_proj;
    let with_neighbor = v_proj_multi(
        &snapshot(
            10.0,
            vec![LaneContext::with_leader(0, 10.0, 50.0), LaneContext::with_leader(1, 0.0, 100.0)],
            v_limit,
        ),
        &cfg(),
    )
    .unwrap()
    .v_proj;
    assert!(with_neighbor < ego_only, "{with_neighbor} vs {ego_only}");
}

#[test]
fn decel_only_is_the_midpoint_speed() {
    let m = catch_up_maneuver(20.0, 10.0, 20.0, &cfg(), 30.0).unwrap();
    assert_eq!(m.phase, ManeuverPhase::DecelOnly);
    assert_abs_diff_eq!(m.v_proj, 15.0, epsilon = 1e-12);
    assert_abs_diff_eq!(m.duration, 4.0, epsilon = 1e-12);
}

#[test]
fn bracket_saturates_only_in_floating_point() {
    assert!(bracket(18.0) < 2.0);
    assert_eq!(bracket(20.0), 2.0);
    assert!(bracket(-300.0) > 0.0);
}
