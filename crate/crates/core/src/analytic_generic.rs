//! Failure bounds for generic information topologies, where any node
//! pair may be a message source and destination: union bounds over
//! stream-destination pairs for 2- and 3-hop simultaneous relaying,
//! plus the three baseline schemes (non-simultaneous relaying,
//! frequency hopping, duty-cycled relaying) and the duty-cycle power
//! trade-off curve.
//!
//! All transmissions in these schemes run at one uniform rate, so a
//! single link failure probability `p` describes every link.

use alloc::vec::Vec;

use crate::fading::{at_least_one_fails_ln, binom_pmf, link_failure_prob};
use crate::num::{self, Kahan};
use crate::scenario::{linear_to_db, ChannelParams, ScenarioConfig};

/// Uniform link rate of a k-hop generic scheme moving `s` streams of
/// `m` bits each through `k` transmission rounds per cycle.
#[inline]
pub fn generic_rate(k: u32, s: u32, message_bits: u32, cycle_time_s: f64) -> f64 {
    k as f64 * s as f64 * message_bits as f64 / cycle_time_s
}

/// Failure probability of one stream-destination pair under 2-hop
/// simultaneous relaying with `r` potential relays: the direct link
/// fails and each relay either missed the first round or fails the
/// second, i.e. p·(p + (1−p)·p)^r.
#[inline]
fn pair_fail_2hop(r: u32, p: f64) -> f64 {
    if p == 0.0 {
        return 0.0;
    }
    num::exp(num::ln(p) + r as f64 * num::ln(p * (2.0 - p)))
}

/// 3-hop analogue: condition on `i` relays holding the message after
/// round one; the destination misses all of them, and each remaining
/// relay either never obtains the message by round two (missing all i
/// holders, probability p^i) or obtains it and fails the final link.
fn pair_fail_3hop(r: u32, p: f64) -> f64 {
    if p == 0.0 {
        return 0.0;
    }
    let ln_p = num::ln(p);
    let mut sum = Kahan::new();
    for i in 0..=r {
        let w = binom_pmf(r, i, p);
        if w == 0.0 {
            continue;
        }
        let p_i = num::exp(i as f64 * ln_p);
        let late = p_i + p * (1.0 - p_i);
        let ln_term = i as f64 * ln_p
            + if r == i { 0.0 } else { (r - i) as f64 * num::ln(late) };
        sum.add(w * num::exp(ln_term));
    }
    num::clamp01(p * sum.value())
}

/// Union bound over s streams × d destinations, 2-hop relaying across
/// the other n−2 nodes.
pub fn union_bound_2hop(n: u32, s: u32, d: u32, p: f64) -> f64 {
    debug_assert!(n >= 2);
    num::clamp01(s as f64 * d as f64 * pair_fail_2hop(n - 2, p))
}

/// Union bound with a third relaying round.
pub fn union_bound_3hop(n: u32, s: u32, d: u32, p: f64) -> f64 {
    debug_assert!(n >= 2);
    num::clamp01(s as f64 * d as f64 * pair_fail_3hop(n - 2, p))
}

/// Non-simultaneous relaying: `r` pre-designated relays per stream
/// each get their own slot, so the slot count (and hence the uniform
/// rate) grows with r while the diversity order does too.
pub fn nonsim_relay_rate(s: u32, message_bits: u32, cycle_time_s: f64, k: u32, r: u32) -> f64 {
    s as f64 * message_bits as f64 * (1.0 + (k - 1) as f64 * r as f64) / cycle_time_s
}

pub fn nonsim_relay_failure(
    n: u32,
    s: u32,
    d: u32,
    message_bits: u32,
    cycle_time_s: f64,
    k: u32,
    r: u32,
    channel: &ChannelParams,
) -> f64 {
    debug_assert!(r <= n.saturating_sub(2) && (k == 2 || k == 3));
    let rate = nonsim_relay_rate(s, message_bits, cycle_time_s, k, r);
    let p = link_failure_prob(rate, channel).p_fail;
    let pair = if k == 3 {
        pair_fail_3hop(r, p)
    } else {
        pair_fail_2hop(r, p)
    };
    num::clamp01(s as f64 * d as f64 * pair)
}

/// Frequency-hopping repetition: the packet rides each of `k_fh`
/// sub-channels at spectral efficiency k_fh·R/W; a stream fails only
/// if every sub-channel fades out.
pub fn freq_hop_failure(s: u32, k_fh: u32, base_rate: f64, channel: &ChannelParams) -> f64 {
    debug_assert!(k_fh >= 1);
    let p_sc = link_failure_prob(k_fh as f64 * base_rate, channel);
    at_least_one_fails_ln(s, k_fh as f64 * p_sc.log_p_fail)
}

/// Awake relay count at duty percentage `x`.
#[inline]
pub fn duty_relay_count(n: u32, duty_pct: f64) -> u32 {
    num::ceil(duty_pct * (n - 2) as f64 / 100.0) as u32
}

/// Duty-cycled 2-hop relaying: only r = ceil(x·(n−2)/100) potential
/// relays are awake. x = 100 recovers `union_bound_2hop` exactly.
pub fn duty_cycle_failure(n: u32, s: u32, d: u32, p: f64, duty_pct: f64) -> f64 {
    debug_assert!((0.0..=100.0).contains(&duty_pct));
    num::clamp01(s as f64 * d as f64 * pair_fail_2hop(duty_relay_count(n, duty_pct), p))
}

/// One row of the duty-cycle power trade-off.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PowerPoint {
    pub duty_pct: f64,
    pub awake_tx_snr_db: f64,
    pub avg_tx_power_db: f64,
    pub avg_total_power_db: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InfeasibleDuty {
    pub duty_pct: f64,
}

impl core::fmt::Display for InfeasibleDuty {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(
            f,
            "no SNR in the search bracket meets the target at duty {}%",
            self.duty_pct
        )
    }
}

/// Sweep duty percentage: at each point find the minimum awake
/// transmit SNR meeting `target`, then average transmit and total
/// power (transmit + background while awake) over the cycle. Power
/// bookkeeping is linear, SNR-referenced; output is dB.
pub fn power_curve(
    config: &ScenarioConfig,
    duty_grid: &[f64],
    background_power_db: f64,
    target: f64,
    bracket_db: (f64, f64),
    tol_db: f64,
) -> Result<Vec<PowerPoint>, InfeasibleDuty> {
    let (n, s, d) = (
        config.topology.n_nodes,
        config.topology.n_streams,
        config.topology.avg_subscribers,
    );
    let rate = generic_rate(2, s, config.message_bits, config.cycle_time_s);
    let background = if background_power_db == f64::NEG_INFINITY {
        0.0
    } else {
        num::pow(10.0, background_power_db / 10.0)
    };
    let failure_at = |duty: f64, snr_db: f64| {
        let ch = ChannelParams::from_db(snr_db, config.channel.bandwidth_hz);
        duty_cycle_failure(n, s, d, link_failure_prob(rate, &ch).p_fail, duty)
    };
    let mut out = Vec::with_capacity(duty_grid.len());
    for &duty in duty_grid {
        let (mut lo, mut hi) = bracket_db;
        if failure_at(duty, hi) > target {
            return Err(InfeasibleDuty { duty_pct: duty });
        }
        if failure_at(duty, lo) > target {
            while hi - lo > tol_db {
                let mid = 0.5 * (lo + hi);
                if failure_at(duty, mid) > target {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
        } else {
            hi = lo;
        }
        let awake = num::pow(10.0, hi / 10.0);
        let frac = duty / 100.0;
        out.push(PowerPoint {
            duty_pct: duty,
            awake_tx_snr_db: hi,
            avg_tx_power_db: linear_to_db(awake * frac),
            avg_total_power_db: linear_to_db(frac * (awake + background)),
        });
    }
    Ok(out)
}
