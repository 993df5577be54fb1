//! Closed-form cycle-failure probabilities for the star information
//! topology: one-, two- and three-hop, downlink and uplink, fixed and
//! adaptive schedules, combined by union bound into a cycle failure
//! probability.
//!
//! Both multi-hop engines take the retransmission-phase probabilities
//! as functions of the Phase I success count `a`, so a fixed schedule
//! is just the constant family and a dead phase is the `certain()`
//! family. That single parameterization gives the collapse identities
//! (3-hop with a dead third phase = 2-hop = ... ) exactly.
//!
//! Success semantics (one cycle, fades persist across phases):
//!
//! * downlink: the controller broadcasts in Phase I at R1; Phase I
//!   receivers and the controller rebroadcast in Phase II at R2; all
//!   holders rebroadcast in Phase III at R3. Simultaneous transmitters
//!   give each receiver one independent try per transmitter.
//! * uplink, for a node u that missed Phase I (its controller link is
//!   below R1): u succeeds iff its controller link clears R2 or R3, or
//!   some w that can deliver in Phase II (controller link >= R2) heard
//!   u at R1, or some w with controller link >= R3 heard u at R1 or
//!   R2, or a chain u -(R1)-> w -(R2)-> x with x's controller link
//!   >= R3 exists.
//!
//! The uplink sum below enumerates node classes so that every
//! conditional factor is exact; it matches exhaustive enumeration over
//! joint link states bit-for-bit at small n (see tests/brute_force.rs).

use crate::fading::{
    at_least_one_fails, at_least_one_fails_ln, binom_pmf, cond_fail_given_fail,
    link_failure_prob, ln_choose, LinkProb,
};
use crate::num::{self, Kahan};
use crate::scenario::{ChannelParams, PhaseRates, ScenarioConfig};

/// Union-bound decomposition of a star cycle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StarBreakdown {
    pub p_downlink: f64,
    pub p_uplink: f64,
    pub p_scheduling: f64,
    pub p_cycle_bound: f64,
}

/// p^k in the log domain; k = 0 gives ln 1 = 0 even for p = 0.
#[inline]
fn ln_pow(p_ln: f64, k: u32) -> f64 {
    if k == 0 {
        0.0
    } else {
        k as f64 * p_ln
    }
}

#[inline]
fn ln_of(p: f64) -> f64 {
    if p > 0.0 {
        num::ln(p)
    } else {
        f64::NEG_INFINITY
    }
}

pub fn one_hop_downlink(n: u32, p_d: f64) -> f64 {
    at_least_one_fails(n, p_d)
}

pub fn one_hop_uplink(n: u32, p_u: f64) -> f64 {
    at_least_one_fails(n, p_u)
}

/// Two-hop downlink, adaptive retransmission rate family. A node that
/// missed Phase I fails iff it misses the controller again at R2(a)
/// (probability p_c, conditioned on the persistent fade) and all `a`
/// Phase I winners at R2(a).
pub fn two_hop_adaptive_downlink(
    n: u32,
    p1: &LinkProb,
    p2_of_a: &dyn Fn(u32) -> LinkProb,
) -> f64 {
    if p1.p_fail == 0.0 || n == 0 {
        return 0.0;
    }
    let mut total = Kahan::new();
    for a in 0..n {
        let w_a = binom_pmf(n, a, p1.p_fail);
        if w_a == 0.0 {
            continue;
        }
        let p2 = p2_of_a(a);
        let p_c = cond_fail_given_fail(p1.p_fail, p2.p_fail);
        let ln_pi = ln_pow(p2.log_p_fail, a) + ln_of(p_c);
        total.add(w_a * at_least_one_fails_ln(n - a, ln_pi));
    }
    num::clamp01(total.value())
}

pub fn two_hop_fixed_downlink(n: u32, p1: &LinkProb, p2: &LinkProb) -> f64 {
    let p2 = *p2;
    two_hop_adaptive_downlink(n, p1, &move |_| p2)
}

/// Three-hop downlink (fixed = constant families). With `a` Phase I
/// winners and `b` Phase II winners, a remaining node fails iff it
/// misses the b Phase II winners at R3 (fresh links), the a Phase I
/// winners at R3 given it missed them at R2, and the controller at R3
/// given its fade was already below min(R1, R2).
pub fn three_hop_downlink(
    n: u32,
    p1: &LinkProb,
    p2_of_a: &dyn Fn(u32) -> LinkProb,
    p3_of_a: &dyn Fn(u32) -> LinkProb,
) -> f64 {
    if p1.p_fail == 0.0 || n == 0 {
        return 0.0;
    }
    let mut total = Kahan::new();
    for a in 0..n {
        let w_a = binom_pmf(n, a, p1.p_fail);
        if w_a == 0.0 {
            continue;
        }
        let m_pool = n - a;
        let p2 = p2_of_a(a);
        let p3 = p3_of_a(a);
        let q21 = cond_fail_given_fail(p1.p_fail, p2.p_fail);
        let q32 = cond_fail_given_fail(p2.p_fail, p3.p_fail);
        let q321 = cond_fail_given_fail(p1.p_fail.min(p2.p_fail), p3.p_fail);
        // Probability a node fails Phase II: misses the controller at
        // R2 given < R1, and all a winners at R2.
        let pi_b = num::exp(ln_pow(p2.log_p_fail, a) + ln_of(q21));
        let mut side = Kahan::new();
        for b in 0..=m_pool {
            let w_b = binom_pmf(m_pool, b, pi_b);
            if w_b == 0.0 {
                continue;
            }
            let ln_pi_f = ln_pow(p3.log_p_fail, b) + ln_pow(ln_of(q32), a) + ln_of(q321);
            side.add(w_b * at_least_one_fails_ln(m_pool - b, ln_pi_f));
        }
        total.add(w_a * side.value());
    }
    num::clamp01(total.value())
}

#[inline]
fn pow_int(p: f64, k: u32) -> f64 {
    if k == 0 {
        1.0
    } else if p == 0.0 {
        0.0
    } else {
        num::exp(k as f64 * num::ln(p))
    }
}

/// Exact uplink failure probability for one value of the Phase I
/// success count, given the three per-link failure probabilities at
/// the realized rates. `a_count` nodes hold links >= R1 to the
/// controller; `m_count = n - a_count` do not.
///
/// Every node falls into one of three roles determined by its
/// controller link (conditioned on its Phase I side):
///
/// * D3 member — controller link >= R3, so it can deliver any packet
///   it holds in the final phase;
/// * potential exit — it can start a path that ends at the controller
///   for a packet it hears at R1: either its controller link clears R2
///   but not R3 ("hear at R1, deliver in Phase II"), or it is outside
///   D2 and D3 but some link into D3 clears R2 ("hear at R1, relay at
///   R2, D3 delivers");
/// * inert — everything else.
///
/// A Phase I loser u fails iff its own controller link clears no
/// retransmission rate, it misses every D3 member at min(R1, R2)
/// (which also removes direct-to-D3 chains), and it misses every exit
/// at R1. Whether an outside-D2/D3 node is an exit depends only on its
/// links into D3 — independent of u's links — so conditioning on the
/// D3 counts first makes everything downstream binomial: exits among
/// the remaining winners and losers, and a closed-form sum over the
/// failure candidates (their exit links are disjoint across
/// candidates). This collapse was checked term-for-term against
/// exhaustive enumeration in exact rational arithmetic.
fn uplink_inner(a_count: u32, m_count: u32, p1: f64, p2: f64, p3: f64) -> f64 {
    // Winner classes, conditioned on the controller link >= R1.
    let (pa_d3, pa_d2o) = if a_count > 0 {
        let den = 1.0 - p1;
        (
            (1.0 - p1.max(p3)) / den,
            (p3 - p1.max(p2)).max(0.0) / den,
        )
    } else {
        (0.0, 0.0)
    };
    let pa_00 = num::clamp01(1.0 - pa_d3 - pa_d2o);
    // Loser classes, conditioned on the controller link < R1.
    let pm_d3 = (p1 - p3).max(0.0) / p1;
    let pm_d2o = (p1.min(p3) - p2).max(0.0) / p1;
    let pm_00 = num::clamp01(1.0 - pm_d3 - pm_d2o);
    let ln_p1 = ln_of(p1);
    let pmin12 = p1.min(p2);

    let mut row_a: alloc::vec::Vec<f64> = alloc::vec::Vec::new();
    let mut row_m: alloc::vec::Vec<f64> = alloc::vec::Vec::new();
    let mut total = Kahan::new();
    for a_d3 in 0..=a_count {
        let w1 = if a_count == 0 { 1.0 } else { binom_pmf(a_count, a_d3, 1.0 - pa_d3) };
        if w1 == 0.0 {
            continue;
        }
        for m_d3 in 0..=m_count {
            let w2 = binom_pmf(m_count, m_d3, 1.0 - pm_d3);
            if w2 == 0.0 {
                continue;
            }
            let m_rest = m_count - m_d3;
            if m_rest == 0 {
                continue; // everyone reaches the controller unaided
            }
            let n3 = a_d3 + m_d3;
            let q_no_relay = pow_int(p2, n3); // no R2 link into D3
            let q_miss_d3 = pow_int(pmin12, n3);
            let rem_m = 1.0 - pm_d3;
            if rem_m <= 0.0 {
                continue;
            }
            let cand = pm_00 * q_miss_d3 / rem_m;
            if cand == 0.0 {
                continue;
            }
            let exit_m = num::clamp01((pm_d2o + pm_00 * (1.0 - q_no_relay)) / rem_m);
            if exit_m >= 1.0 {
                continue;
            }
            // Candidate probability among the non-exit remainder.
            let ln_cand = num::ln(cand) - num::ln_1p(-exit_m);
            let a_rest = a_count - a_d3;
            let rem_a = 1.0 - pa_d3;
            let exit_a = if a_rest > 0 && rem_a > 0.0 {
                num::clamp01((pa_d2o + pa_00 * (1.0 - q_no_relay)) / rem_a)
            } else {
                0.0
            };
            binom_row(&mut row_a, a_rest, 1.0 - exit_a);
            binom_row(&mut row_m, m_rest, 1.0 - exit_m);
            let mut side = Kahan::new();
            for xa in 0..=a_rest {
                let w3 = row_a[xa as usize];
                if w3 == 0.0 {
                    continue;
                }
                for xm in 0..=m_rest {
                    let w4 = row_m[xm as usize];
                    if w4 == 0.0 {
                        continue;
                    }
                    // At least one candidate misses all xa + xm exits.
                    let f = at_least_one_fails_ln(
                        m_rest - xm,
                        ln_cand + ln_pow(ln_p1, xa + xm),
                    );
                    side.add(w3 * w4 * f);
                }
            }
            total.add(w1 * w2 * side.value());
        }
    }
    total.value()
}

/// Fill `row[m] = B(n, m, p_fail)` for m = 0..=n.
fn binom_row(row: &mut alloc::vec::Vec<f64>, n: u32, p_fail: f64) {
    row.clear();
    for m in 0..=n {
        row.push(binom_pmf(n, m, p_fail));
    }
}

/// Uplink failure probability with retransmission-rate families of the
/// Phase I success count. Two-hop = `certain()` third family.
pub fn uplink_engine(
    n: u32,
    p1: &LinkProb,
    p2_of_a: &dyn Fn(u32) -> LinkProb,
    p3_of_a: &dyn Fn(u32) -> LinkProb,
) -> f64 {
    if p1.p_fail == 0.0 || n == 0 {
        return 0.0;
    }
    let mut total = Kahan::new();
    for a in 0..n {
        let w = binom_pmf(n, a, p1.p_fail);
        if w == 0.0 {
            continue;
        }
        let p2 = p2_of_a(a).p_fail;
        let p3 = p3_of_a(a).p_fail;
        total.add(w * uplink_inner(a, n - a, p1.p_fail, p2, p3));
    }
    num::clamp01(total.value())
}

pub fn two_hop_uplink(n: u32, rates: &PhaseRates, channel: &ChannelParams) -> f64 {
    let p1 = link_failure_prob(rates.r_u1(), channel);
    uplink_engine(
        n,
        &p1,
        &|a| link_failure_prob(rates.r_u2(a), channel),
        &|_| LinkProb::certain(),
    )
}

pub fn three_hop_uplink(n: u32, rates: &PhaseRates, channel: &ChannelParams) -> f64 {
    let p1 = link_failure_prob(rates.r_u1(), channel);
    uplink_engine(
        n,
        &p1,
        &|a| link_failure_prob(rates.r_u2(a), channel),
        &|a| link_failure_prob(rates.r_u3(a), channel),
    )
}

/// Cycle failure bound for a star scheme: downlink + uplink (+ ACK
/// dissemination for adaptive schedules with a positive scheduling
/// slice; a zero slice models free scheduling).
pub fn star_cycle_failure(config: &ScenarioConfig) -> StarBreakdown {
    assert!(
        config.protocol.is_star_scheme(),
        "star_cycle_failure requires a star scheme, got {:?}",
        config.protocol
    );
    let rates = PhaseRates::new(config);
    let ch = &config.channel;
    let n = config.topology.n_nodes;
    let hops = rates.hops;

    let (p_downlink, p_uplink) = if hops == 1 {
        (
            one_hop_downlink(n, link_failure_prob(rates.r_d1(), ch).p_fail),
            one_hop_uplink(n, link_failure_prob(rates.r_u1(), ch).p_fail),
        )
    } else {
        let p_d1 = link_failure_prob(rates.r_d1(), ch);
        let p_d = three_hop_downlink(
            n,
            &p_d1,
            &|a| link_failure_prob(rates.r_d2(a), ch),
            &|a| {
                if hops == 3 {
                    link_failure_prob(rates.r_d3(a), ch)
                } else {
                    LinkProb::certain()
                }
            },
        );
        let p_u1 = link_failure_prob(rates.r_u1(), ch);
        let p_u = uplink_engine(
            n,
            &p_u1,
            &|a| link_failure_prob(rates.r_u2(a), ch),
            &|a| {
                if hops == 3 {
                    link_failure_prob(rates.r_u3(a), ch)
                } else {
                    LinkProb::certain()
                }
            },
        );
        (p_d, p_u)
    };

    // ACK dissemination: n ACK streams, n-1 subscribers each, relayed
    // through the n+1 star participants at the scheduling rate.
    let p_scheduling = if config.protocol.adaptive() && rates.t_s > 0.0 {
        let p_s = link_failure_prob(rates.r_s(), ch).p_fail;
        if hops == 3 {
            crate::analytic_generic::union_bound_3hop(n + 1, n, n - 1, p_s)
        } else {
            crate::analytic_generic::union_bound_2hop(n + 1, n, n - 1, p_s)
        }
    } else {
        0.0
    };

    StarBreakdown {
        p_downlink,
        p_uplink,
        p_scheduling,
        p_cycle_bound: num::clamp01(p_downlink + p_uplink + p_scheduling),
    }
}

// Re-exported for the brute-force oracle in the test suite.
#[doc(hidden)]
pub fn _ln_choose(n: u32, m: u32) -> f64 {
    ln_choose(n, m)
}
