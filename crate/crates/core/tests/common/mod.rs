//! Independent reference implementations shared by the integration tests.
//! Nothing here calls the closed forms under test.

#![allow(dead_code)]

use rand::Rng;

/// Step of the reference integrator, s.
pub const ORACLE_DT: f64 = 1e-4;

/// One randomly drawn catch-up problem.
#[derive(Debug, Clone, Copy)]
pub struct Case {
    pub v0: f64,
    pub v_lead: f64,
    pub d: f64,
    pub a1: f64,
    /// Braking rate, negative.
    pub a2: f64,
    pub v_limit: f64,
    pub free_horizon: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OracleBranch {
    Matched,
    DecelOnly,
    AccelDecel,
    Cruise,
    FreeLane,
}

#[derive(Debug, Clone, Copy)]
pub struct OracleResult {
    pub v_proj: f64,
    pub duration: f64,
    pub branch: OracleBranch,
}

/// Draws a case with `v0 <= v_limit <= 40` and `d <= 500`. Half the cases
/// use the default rates (1.5 / -1.5), half random ones. A few land exactly
/// on the leader or behind a leader at or above the limit so every outcome
/// is exercised.
pub fn random_case(rng: &mut impl Rng) -> Case {
    let v_limit = rng.gen_range(5.0..=40.0);
    let (a1, a2): (f64, f64) = if rng.gen_bool(0.5) {
        (1.5, -1.5)
    } else {
        (rng.gen_range(0.5..3.0), -rng.gen_range(0.5..4.0))
    };
    let v0 = rng.gen_range(0.0..=v_limit);
    let roll: f64 = rng.gen();
    let (v_lead, d) = if roll < 0.01 {
        (v0, 0.0)
    } else if roll < 0.08 {
        (rng.gen_range(v_limit..1.3 * v_limit), rng.gen_range(0.0..=500.0))
    } else {
        (rng.gen_range(0.0..v_limit), rng.gen_range(0.0..=500.0))
    };
    Case {
        v0,
        v_lead,
        d,
        a1,
        a2,
        v_limit,
        free_horizon: 30.0,
    }
}

/// Integrates the ego's speed profile in fixed steps of [`ORACLE_DT`].
///
/// Each step applies a constant acceleration and is therefore exact; the
/// instants where the profile switches (start braking, reach the limit,
/// match the leader) are located inside their step by bisection so the
/// switching error does not accumulate. The mean speed is total distance
/// over total time.
pub fn integrate_catch_up(c: &Case) -> OracleResult {
    let brake = c.a2.abs();
    let w0 = c.v0 - c.v_lead;
    if c.d <= 0.01 && w0.abs() <= 0.01 {
        return OracleResult {
            v_proj: c.v_lead,
            duration: 0.0,
            branch: OracleBranch::Matched,
        };
    }
    if w0 > 0.0 && w0 * w0 / (2.0 * brake) >= c.d {
        // Even full braking overshoots: brake harder, uniformly, to land on the leader.
        let a = -w0 * w0 / (2.0 * c.d);
        return integrate_uniform_brake(c, a);
    }
    if c.v_lead >= c.v_limit {
        return integrate_free(c);
    }

    let h = 0.5 / brake;
    let vl = c.v_lead;
    // Braking must start once the stopping distance relative to the leader
    // covers the remaining gap.
    let must_brake = |v: f64, gap: f64| {
        let w = v - vl;
        w > 0.0 && w * w * h >= gap
    };
    // State after a constant-acceleration piece of length `tau`.
    let piece = |v: f64, gap: f64, a: f64, tau: f64| {
        let ds = v * tau + 0.5 * a * tau * tau;
        (v + a * tau, ds, gap - ds + vl * tau)
    };
    // Earliest instant within `tau` at which braking must start.
    let locate = |v: f64, gap: f64, a: f64, tau: f64| {
        let (mut lo, mut hi) = (0.0, tau);
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            let (vm, _, gm) = piece(v, gap, a, mid);
            if must_brake(vm, gm) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    };

    let dt = ORACLE_DT;
    let (mut steps, mut t_extra) = (0u64, 0.0_f64);
    let (mut v, mut gap, mut dist) = (c.v0, c.d, 0.0_f64);
    let mut cruised = false;
    let mut braking = must_brake(v, gap);

    // Accelerate.
    let a = c.a1;
    while !braking {
        let v1 = v + a * dt;
        if v1 >= c.v_limit {
            // Partial step up to the limit, unless braking comes first.
            let mut tau = (c.v_limit - v) / a;
            let (_, _, g_end) = piece(v, gap, a, tau);
            if must_brake(c.v_limit, g_end) {
                tau = locate(v, gap, a, tau);
                braking = true;
            }
            let (v_end, ds, g_end) = piece(v, gap, a, tau);
            t_extra += tau;
            dist += ds;
            gap = g_end;
            v = if braking { v_end } else { c.v_limit };
            break;
        }
        let ds = (v + v1) * 0.5 * dt;
        let g1 = gap - ds + vl * dt;
        if must_brake(v1, g1) {
            let tau = locate(v, gap, a, dt);
            let (v_end, ds, g_end) = piece(v, gap, a, tau);
            t_extra += tau;
            dist += ds;
            gap = g_end;
            v = v_end;
            braking = true;
            break;
        }
        v = v1;
        gap = g1;
        dist += ds;
        steps += 1;
    }
    // Cruise at the limit.
    if !braking {
        let w = v - vl;
        let brake_gap = w * w * h;
        let (ds, closing) = (v * dt, w * dt);
        while gap - closing > brake_gap {
            gap -= closing;
            dist += ds;
            steps += 1;
            cruised = true;
        }
        if gap > brake_gap {
            let tau = (gap - brake_gap) / w;
            dist += v * tau;
            t_extra += tau;
            cruised = true;
        }
    }
    // Brake onto the leader's speed.
    loop {
        let v1 = v - brake * dt;
        if v1 <= vl {
            let tau = (v - vl) / brake;
            dist += v * tau - 0.5 * brake * tau * tau;
            t_extra += tau;
            break;
        }
        dist += (v + v1) * 0.5 * dt;
        v = v1;
        steps += 1;
    }
    let t = steps as f64 * dt + t_extra;
    let branch = if cruised {
        OracleBranch::Cruise
    } else {
        OracleBranch::AccelDecel
    };
    OracleResult {
        v_proj: if t > 0.0 { dist / t } else { vl },
        duration: t,
        branch,
    }
}

fn integrate_uniform_brake(c: &Case, a: f64) -> OracleResult {
    let (mut t, mut v, mut dist) = (0.0_f64, c.v0, 0.0_f64);
    loop {
        let mut tau = ORACLE_DT;
        let done = v + a * tau <= c.v_lead;
        if done {
            tau = (c.v_lead - v) / a;
        }
        dist += v * tau + 0.5 * a * tau * tau;
        t += tau;
        v += a * tau;
        if done {
            break;
        }
    }
    OracleResult {
        v_proj: dist / t,
        duration: t,
        branch: OracleBranch::DecelOnly,
    }
}

/// Accelerate to the limit and hold it; averaged over at least the free horizon.
fn integrate_free(c: &Case) -> OracleResult {
    let (mut t, mut v, mut dist) = (0.0_f64, c.v0, 0.0_f64);
    let mut accel_end = 0.0;
    while v < c.v_limit {
        let mut tau = ORACLE_DT;
        if v + c.a1 * tau >= c.v_limit {
            tau = (c.v_limit - v) / c.a1;
        }
        dist += v * tau + 0.5 * c.a1 * tau * tau;
        t += tau;
        v += c.a1 * tau;
        accel_end = t;
    }
    let horizon = accel_end.max(c.free_horizon);
    while t < horizon {
        let tau = ORACLE_DT.min(horizon - t);
        dist += c.v_limit * tau;
        t += tau;
    }
    OracleResult {
        v_proj: dist / t,
        duration: accel_end,
        branch: OracleBranch::FreeLane,
    }
}

/// Average ranks, written out longhand: each value's rank is one plus the
/// number of smaller values plus half the number of other equal values.
pub fn naive_ranks(values: &[f64]) -> Vec<f64> {
    values
        .iter()
        .map(|&x| {
            let below = values.iter().filter(|&&y| y < x).count() as f64;
            let equal = values.iter().filter(|&&y| y == x).count() as f64;
            below + (equal + 1.0) / 2.0
        })
        .collect()
}

pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    sxy / (sxx * syy).sqrt()
}

pub fn rank_pearson(x: &[f64], y: &[f64]) -> f64 {
    pearson(&naive_ranks(x), &naive_ranks(y))
}

/// The composite event loss, evaluated term by term.
pub fn loss_by_hand(r: f64) -> f64 {
    let r2 = r * r;
    let mut loss = 1.0 - r2;
    if r < 0.0 {
        loss += 10.0 * r.abs();
    }
    if r2 < 0.8 {
        loss += 10.0 * (0.8 - r2) * (0.8 - r2);
    }
    loss
}
