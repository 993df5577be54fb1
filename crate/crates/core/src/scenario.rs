//! Canonical configuration and result types shared by every engine,
//! plus validation and the per-phase rate formulas.
//!
//! Conventions: all times in seconds, bandwidth in Hz, SNR carried as a
//! linear power ratio (dB only at the edges). A cycle of length `T`
//! splits into a downlink budget, an uplink budget and a scheduling
//! slice `f_s * T`; each side then splits into up to three phases by
//! the side's fractions. `f_s = 0` models ideal (free) schedule
//! dissemination.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::num;

pub const DB_LN10_OVER_10: f64 = core::f64::consts::LN_10 / 10.0;

/// Nominal SNR and bandwidth: the two inputs of the link outage model.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChannelParams {
    /// Linear (not dB) power ratio.
    pub snr_linear: f64,
    pub bandwidth_hz: f64,
}

impl ChannelParams {
    pub fn new(snr_linear: f64, bandwidth_hz: f64) -> Self {
        Self { snr_linear, bandwidth_hz }
    }

    pub fn from_db(snr_db: f64, bandwidth_hz: f64) -> Self {
        Self { snr_linear: db_to_linear(snr_db), bandwidth_hz }
    }

    pub fn snr_db(&self) -> f64 {
        linear_to_db(self.snr_linear)
    }

    pub fn with_snr_linear(&self, snr_linear: f64) -> Self {
        Self { snr_linear, ..*self }
    }
}

#[inline]
pub fn db_to_linear(db: f64) -> f64 {
    num::exp(db * DB_LN10_OVER_10)
}

#[inline]
pub fn linear_to_db(linear: f64) -> f64 {
    10.0 * num::log10(linear)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TopologyKind {
    Star,
    Generic,
}

/// Who talks to whom: `n_nodes` non-controller nodes for a star,
/// total nodes for a generic topology.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TopologySpec {
    pub kind: TopologyKind,
    pub n_nodes: u32,
    /// Message streams per cycle (a star has n downlink + n uplink).
    pub n_streams: u32,
    /// Subscribers per stream (1 for the star's point-to-point pairs).
    pub avg_subscribers: u32,
}

impl TopologySpec {
    pub fn star(n_nodes: u32) -> Self {
        Self { kind: TopologyKind::Star, n_nodes, n_streams: 2 * n_nodes, avg_subscribers: 1 }
    }

    pub fn generic(n_nodes: u32, n_streams: u32, avg_subscribers: u32) -> Self {
        Self { kind: TopologyKind::Generic, n_nodes, n_streams, avg_subscribers }
    }
}

/// Per-phase time fractions. Downlink/uplink fractions each sum to 1
/// over that side's budget; unused phases carry fraction 0.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhasePlan {
    pub f_d: [f64; 3],
    pub f_u: [f64; 3],
    pub f_s: f64,
    pub downlink_budget_s: f64,
    pub uplink_budget_s: f64,
}

impl PhasePlan {
    /// Even split among the first `hops` phases of each side, with the
    /// non-scheduling time divided equally between downlink and uplink.
    pub fn even(hops: u32, f_s: f64, cycle_time_s: f64) -> Self {
        let mut f = [0.0; 3];
        for slot in f.iter_mut().take(hops as usize) {
            *slot = 1.0 / hops as f64;
        }
        let side = (1.0 - f_s) * cycle_time_s / 2.0;
        Self { f_d: f, f_u: f, f_s, downlink_budget_s: side, uplink_budget_s: side }
    }

    pub fn with_fractions(f_d: [f64; 3], f_u: [f64; 3], f_s: f64, cycle_time_s: f64) -> Self {
        let side = (1.0 - f_s) * cycle_time_s / 2.0;
        Self { f_d, f_u, f_s, downlink_budget_s: side, uplink_budget_s: side }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Protocol {
    OneHop,
    Fixed2Hop,
    Adaptive2Hop,
    Fixed3Hop,
    Adaptive3Hop,
    NonsimRelay,
    FreqHop,
    DutyCycled,
}

impl Protocol {
    /// Hop count of the star schemes; generic/baseline schemes take
    /// theirs from the `hop_count` knob.
    pub fn hops(&self) -> Option<u32> {
        match self {
            Protocol::OneHop => Some(1),
            Protocol::Fixed2Hop | Protocol::Adaptive2Hop => Some(2),
            Protocol::Fixed3Hop | Protocol::Adaptive3Hop => Some(3),
            _ => None,
        }
    }

    pub fn adaptive(&self) -> bool {
        matches!(self, Protocol::Adaptive2Hop | Protocol::Adaptive3Hop)
    }

    pub fn is_star_scheme(&self) -> bool {
        self.hops().is_some()
    }

    pub fn name(&self) -> &'static str {
        match self {
            Protocol::OneHop => "one_hop",
            Protocol::Fixed2Hop => "fixed_2hop",
            Protocol::Adaptive2Hop => "adaptive_2hop",
            Protocol::Fixed3Hop => "fixed_3hop",
            Protocol::Adaptive3Hop => "adaptive_3hop",
            Protocol::NonsimRelay => "nonsim_relay",
            Protocol::FreqHop => "freq_hop",
            Protocol::DutyCycled => "duty_cycled",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Some(match s {
            "one_hop" => Protocol::OneHop,
            "fixed_2hop" => Protocol::Fixed2Hop,
            "adaptive_2hop" => Protocol::Adaptive2Hop,
            "fixed_3hop" => Protocol::Fixed3Hop,
            "adaptive_3hop" => Protocol::Adaptive3Hop,
            "nonsim_relay" => Protocol::NonsimRelay,
            "freq_hop" => Protocol::FreqHop,
            "duty_cycled" => Protocol::DutyCycled,
            _ => return None,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioConfig {
    pub topology: TopologySpec,
    pub channel: ChannelParams,
    pub message_bits: u32,
    pub cycle_time_s: f64,
    pub protocol: Protocol,
    pub phase_plan: PhasePlan,
    /// Nominated relays per stream (non-simultaneous / duty variants).
    pub relay_count: Option<u32>,
    /// Hop count for generic/baseline schemes (2 or 3).
    pub hop_count: Option<u32>,
    /// Sub-channel count for frequency hopping.
    pub subchannel_count: Option<u32>,
    /// Awake percentage for duty cycling.
    pub duty_pct: Option<f64>,
    /// Add the 2n-bit schedule summary to adaptive downlink
    /// retransmission rates.
    pub scheduling_overhead: bool,
    /// Carry one ACK bit in each adaptive uplink Phase I packet.
    pub ack_bit: bool,
}

impl ScenarioConfig {
    /// A star scenario with an even phase split and the detailed-form
    /// overhead toggles on.
    pub fn star(
        n_nodes: u32,
        message_bits: u32,
        cycle_time_s: f64,
        channel: ChannelParams,
        protocol: Protocol,
    ) -> Self {
        let hops = protocol.hops().unwrap_or(2);
        Self {
            topology: TopologySpec::star(n_nodes),
            channel,
            message_bits,
            cycle_time_s,
            protocol,
            phase_plan: PhasePlan::even(hops, 0.0, cycle_time_s),
            relay_count: None,
            hop_count: None,
            subchannel_count: None,
            duty_pct: None,
            scheduling_overhead: true,
            ack_bit: true,
        }
    }

    pub fn with_snr_linear(&self, snr_linear: f64) -> Self {
        Self { channel: self.channel.with_snr_linear(snr_linear), ..self.clone() }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ValidationError {
    NonPositiveField { field: &'static str },
    FractionSumMismatch { side: &'static str, sum: f64 },
    MissingProtocolKnob { knob: &'static str },
    InvalidField { field: &'static str, reason: String },
}

impl core::fmt::Display for ValidationError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            ValidationError::NonPositiveField { field } => {
                write!(f, "field `{field}` must be positive")
            }
            ValidationError::FractionSumMismatch { side, sum } => {
                write!(f, "{side} phase fractions sum to {sum}, expected 1")
            }
            ValidationError::MissingProtocolKnob { knob } => {
                write!(f, "protocol requires knob `{knob}`")
            }
            ValidationError::InvalidField { field, reason } => {
                write!(f, "field `{field}`: {reason}")
            }
        }
    }
}

fn check_positive(errors: &mut Vec<ValidationError>, field: &'static str, value: f64) {
    if !(value > 0.0) {
        errors.push(ValidationError::NonPositiveField { field });
    }
}

/// Check every invariant and return the config unchanged if they all
/// hold; otherwise report the full violation list.
pub fn validate(config: ScenarioConfig) -> Result<ScenarioConfig, Vec<ValidationError>> {
    let mut errors = Vec::new();
    let t = &config.topology;
    if t.n_nodes == 0 {
        errors.push(ValidationError::NonPositiveField { field: "n_nodes" });
    }
    match t.kind {
        TopologyKind::Star => {
            if t.n_streams != 2 * t.n_nodes {
                errors.push(ValidationError::InvalidField {
                    field: "n_streams",
                    reason: format!("star topology requires n_streams = 2*n_nodes, got {}", t.n_streams),
                });
            }
            if t.avg_subscribers != 1 {
                errors.push(ValidationError::InvalidField {
                    field: "avg_subscribers",
                    reason: String::from("star topology requires avg_subscribers = 1"),
                });
            }
        }
        TopologyKind::Generic => {
            if t.n_streams == 0 {
                errors.push(ValidationError::NonPositiveField { field: "n_streams" });
            }
            if t.avg_subscribers < 1 || t.avg_subscribers + 1 > t.n_nodes {
                errors.push(ValidationError::InvalidField {
                    field: "avg_subscribers",
                    reason: format!(
                        "generic topology requires 1 <= avg_subscribers <= n_nodes - 1, got {}",
                        t.avg_subscribers
                    ),
                });
            }
        }
    }
    check_positive(&mut errors, "snr_linear", config.channel.snr_linear);
    check_positive(&mut errors, "bandwidth_hz", config.channel.bandwidth_hz);
    if config.message_bits == 0 {
        errors.push(ValidationError::NonPositiveField { field: "message_bits" });
    }
    check_positive(&mut errors, "cycle_time_s", config.cycle_time_s);

    let plan = &config.phase_plan;
    if config.protocol.is_star_scheme() {
        let hops = config.protocol.hops().unwrap() as usize;
        for (side, f) in [("downlink", &plan.f_d), ("uplink", &plan.f_u)] {
            if f.iter().any(|&x| x < 0.0) {
                errors.push(ValidationError::InvalidField {
                    field: "phase fractions",
                    reason: format!("{side} fraction is negative"),
                });
            }
            let sum: f64 = f.iter().sum();
            if num::fabs(sum - 1.0) > 1e-9 {
                errors.push(ValidationError::FractionSumMismatch { side, sum });
            }
            for (i, &x) in f.iter().enumerate().skip(hops) {
                if x != 0.0 {
                    errors.push(ValidationError::InvalidField {
                        field: "phase fractions",
                        reason: format!("{side} phase {} must be 0 for a {hops}-hop plan", i + 1),
                    });
                }
            }
        }
        if !(0.0..1.0).contains(&plan.f_s) {
            errors.push(ValidationError::InvalidField {
                field: "f_s",
                reason: String::from("scheduling fraction must lie in [0, 1)"),
            });
        }
        check_positive(&mut errors, "downlink_budget_s", plan.downlink_budget_s);
        check_positive(&mut errors, "uplink_budget_s", plan.uplink_budget_s);
        let total = plan.downlink_budget_s + plan.uplink_budget_s + plan.f_s * config.cycle_time_s;
        if num::fabs(total - config.cycle_time_s) > 1e-9 * config.cycle_time_s {
            errors.push(ValidationError::InvalidField {
                field: "budgets",
                reason: format!(
                    "downlink + uplink + scheduling time = {total}, expected cycle_time_s = {}",
                    config.cycle_time_s
                ),
            });
        }
    }

    match config.protocol {
        Protocol::NonsimRelay => {
            if config.relay_count.is_none() {
                errors.push(ValidationError::MissingProtocolKnob { knob: "relay_count" });
            }
            if config.hop_count.is_none() {
                errors.push(ValidationError::MissingProtocolKnob { knob: "hop_count" });
            }
        }
        Protocol::FreqHop => {
            if config.subchannel_count.is_none() {
                errors.push(ValidationError::MissingProtocolKnob { knob: "subchannel_count" });
            }
        }
        Protocol::DutyCycled => {
            if config.duty_pct.is_none() {
                errors.push(ValidationError::MissingProtocolKnob { knob: "duty_pct" });
            }
        }
        _ => {}
    }
    if let Some(r) = config.relay_count {
        if t.n_nodes >= 2 && r > t.n_nodes - 2 {
            errors.push(ValidationError::InvalidField {
                field: "relay_count",
                reason: format!("at most n_nodes - 2 = {} relays available", t.n_nodes - 2),
            });
        }
    }
    if let Some(k) = config.hop_count {
        if !(k == 2 || k == 3) {
            errors.push(ValidationError::InvalidField {
                field: "hop_count",
                reason: String::from("hop_count must be 2 or 3"),
            });
        }
    }
    if let Some(k) = config.subchannel_count {
        if k == 0 {
            errors.push(ValidationError::NonPositiveField { field: "subchannel_count" });
        }
    }
    if let Some(x) = config.duty_pct {
        if !(0.0..=100.0).contains(&x) {
            errors.push(ValidationError::InvalidField {
                field: "duty_pct",
                reason: String::from("duty_pct must lie in [0, 100]"),
            });
        }
    }

    if errors.is_empty() {
        Ok(config)
    } else {
        Err(errors)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ZeroPhaseTime {
    pub phase: &'static str,
}

impl core::fmt::Display for ZeroPhaseTime {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "phase `{}` has zero time but a rate was requested", self.phase)
    }
}

/// Per-phase transmission rates of a star scheme.
///
/// The unchecked accessors return `f64::INFINITY` when a phase with a
/// positive payload has zero time: downstream this yields a link
/// failure probability of exactly 1, which is the correct degenerate
/// limit and is what makes the collapse identities (dead third phase =
/// 2-hop, ...) hold without special-casing. The `checked_*` variants
/// surface `ZeroPhaseTime` instead, for callers that treat a dead
/// phase as a configuration error.
#[derive(Clone, Copy, Debug)]
pub struct PhaseRates {
    pub n: u32,
    pub message_bits: u32,
    pub hops: u32,
    pub adaptive: bool,
    pub scheduling_overhead: bool,
    pub ack_bit: bool,
    pub t_d: [f64; 3],
    pub t_u: [f64; 3],
    pub t_s: f64,
}

#[inline]
fn rate(bits: f64, time_s: f64) -> f64 {
    if bits <= 0.0 {
        0.0
    } else if time_s <= 0.0 {
        f64::INFINITY
    } else {
        bits / time_s
    }
}

impl PhaseRates {
    pub fn new(config: &ScenarioConfig) -> Self {
        let plan = &config.phase_plan;
        let hops = config.protocol.hops().unwrap_or(2);
        let t_d = [
            plan.f_d[0] * plan.downlink_budget_s,
            plan.f_d[1] * plan.downlink_budget_s,
            plan.f_d[2] * plan.downlink_budget_s,
        ];
        let t_u = [
            plan.f_u[0] * plan.uplink_budget_s,
            plan.f_u[1] * plan.uplink_budget_s,
            plan.f_u[2] * plan.uplink_budget_s,
        ];
        Self {
            n: config.topology.n_nodes,
            message_bits: config.message_bits,
            hops,
            adaptive: config.protocol.adaptive(),
            scheduling_overhead: config.scheduling_overhead,
            ack_bit: config.ack_bit,
            t_d,
            t_u,
            t_s: plan.f_s * config.cycle_time_s,
        }
    }

    fn nm(&self) -> f64 {
        self.message_bits as f64 * self.n as f64
    }

    /// Retransmission payload: everything again under a fixed schedule,
    /// only the `n - a` failed messages under an adaptive one (plus the
    /// 2n-bit schedule summary when the overhead toggle is on).
    fn downlink_retx_bits(&self, a: u32) -> f64 {
        if self.adaptive {
            let payload = self.message_bits as f64 * (self.n - a.min(self.n)) as f64;
            let overhead = if self.scheduling_overhead { 2.0 * self.n as f64 } else { 0.0 };
            payload + overhead
        } else {
            self.nm()
        }
    }

    fn uplink_retx_bits(&self, a: u32) -> f64 {
        if self.adaptive {
            self.message_bits as f64 * (self.n - a.min(self.n)) as f64
        } else {
            self.nm()
        }
    }

    pub fn r_d1(&self) -> f64 {
        rate(self.nm(), self.t_d[0])
    }

    pub fn r_d2(&self, a: u32) -> f64 {
        rate(self.downlink_retx_bits(a), self.t_d[1])
    }

    pub fn r_d3(&self, a: u32) -> f64 {
        rate(self.downlink_retx_bits(a), self.t_d[2])
    }

    pub fn r_u1(&self) -> f64 {
        let per_msg =
            if self.adaptive && self.ack_bit { self.message_bits as f64 + 1.0 } else { self.message_bits as f64 };
        rate(per_msg * self.n as f64, self.t_u[0])
    }

    pub fn r_u2(&self, a: u32) -> f64 {
        rate(self.uplink_retx_bits(a), self.t_u[1])
    }

    pub fn r_u3(&self, a: u32) -> f64 {
        rate(self.uplink_retx_bits(a), self.t_u[2])
    }

    /// Schedule-dissemination rate: each of `hops` scheduling phases
    /// carries the 2n ACK bits of all n+1 participants.
    pub fn r_s(&self) -> f64 {
        rate(2.0 * self.n as f64 * (self.n as f64 + 1.0) * self.hops as f64, self.t_s)
    }

    pub fn checked_r_d1(&self) -> Result<f64, ZeroPhaseTime> {
        Self::checked(self.r_d1(), "downlink phase 1")
    }

    pub fn checked_r_d2(&self, a: u32) -> Result<f64, ZeroPhaseTime> {
        Self::checked(self.r_d2(a), "downlink phase 2")
    }

    pub fn checked_r_u1(&self) -> Result<f64, ZeroPhaseTime> {
        Self::checked(self.r_u1(), "uplink phase 1")
    }

    pub fn checked_r_s(&self) -> Result<f64, ZeroPhaseTime> {
        Self::checked(self.r_s(), "scheduling")
    }

    fn checked(r: f64, phase: &'static str) -> Result<f64, ZeroPhaseTime> {
        if r.is_infinite() {
            Err(ZeroPhaseTime { phase })
        } else {
            Ok(r)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Source {
    Analytic,
    MonteCarlo,
}

/// A probability carried in linear and log form, with provenance.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FailureProbability {
    pub p: f64,
    pub log_p: f64,
    pub source: Source,
    pub ci_halfwidth: Option<f64>,
}

impl FailureProbability {
    pub fn analytic(p: f64) -> Self {
        let p = num::clamp01(p);
        Self { p, log_p: num::ln(p), source: Source::Analytic, ci_halfwidth: None }
    }

    pub fn monte_carlo(p: f64, ci_halfwidth: f64) -> Self {
        let p = num::clamp01(p);
        Self { p, log_p: num::ln(p), source: Source::MonteCarlo, ci_halfwidth: Some(ci_halfwidth) }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn headline_config() -> ScenarioConfig {
        ScenarioConfig::star(30, 160, 2e-3, ChannelParams::from_db(10.0, 2e7), Protocol::Fixed2Hop)
    }

    #[test]
    fn db_roundtrip() {
        for db in [-20.0, -3.3, 0.0, 5.0, 17.25, 60.0] {
            let ch = ChannelParams::from_db(db, 2e7);
            assert!(num::fabs(ch.snr_db() - db) < 1e-12 * num::fabs(db).max(1.0));
        }
    }

    #[test]
    fn headline_star_is_valid() {
        assert!(validate(headline_config()).is_ok());
    }

    #[test]
    fn fraction_sum_mismatch_reported() {
        let mut config = headline_config();
        config.phase_plan.f_d = [0.6, 0.6, 0.0];
        let errs = validate(config).unwrap_err();
        assert!(errs
            .iter()
            .any(|e| matches!(e, ValidationError::FractionSumMismatch { side: "downlink", .. })));
    }

    #[test]
    fn missing_relay_knob_reported() {
        let mut config = headline_config();
        config.protocol = Protocol::NonsimRelay;
        config.topology = TopologySpec::generic(30, 60, 1);
        config.hop_count = Some(2);
        let errs = validate(config).unwrap_err();
        assert!(errs
            .iter()
            .any(|e| matches!(e, ValidationError::MissingProtocolKnob { knob: "relay_count" })));
    }

    #[test]
    fn rate_formulas() {
        // n=30, m=160, T_D1 = 0.5 ms -> R_D1 = 160*30/5e-4 = 9.6e6 bit/s.
        let mut config = headline_config();
        config.phase_plan = PhasePlan::with_fractions([0.5, 0.5, 0.0], [0.5, 0.5, 0.0], 0.0, 2e-3);
        let rates = PhaseRates::new(&config);
        assert!(num::fabs(rates.r_d1() - 9.6e6) < 1e-3);
        // Fixed schedule: retransmission carries the full payload.
        assert_eq!(rates.r_d2(7), rates.r_d1());

        let mut adap = config.clone();
        adap.protocol = Protocol::Adaptive3Hop;
        adap.phase_plan = PhasePlan::even(3, 0.1, 2e-3);
        let rates = PhaseRates::new(&adap);
        // a = n: only the 2n-bit overhead is left.
        let t_d2 = adap.phase_plan.f_d[1] * adap.phase_plan.downlink_budget_s;
        assert!(num::fabs(rates.r_d2(30) - 60.0 / t_d2) < 1e-6);
        // Ack bit: (m+1) bits per uplink message in phase 1.
        let t_u1 = adap.phase_plan.f_u[0] * adap.phase_plan.uplink_budget_s;
        assert!(num::fabs(rates.r_u1() - 161.0 * 30.0 / t_u1) < 1e-6);
        // R_S = 6 n (n+1) / T_S at 3 hops.
        assert!(num::fabs(rates.r_s() - 6.0 * 30.0 * 31.0 / (0.1 * 2e-3)) < 1e-6);
    }

    #[test]
    fn aggregate_goodput_check() {
        // 2*30*160/2e-3 = 4.8e6 bit/s, i.e. 0.24 bit/s/Hz at 20 MHz.
        let config = headline_config();
        let goodput = 2.0 * config.topology.n_nodes as f64 * config.message_bits as f64
            / config.cycle_time_s;
        assert!(num::fabs(goodput - 4.8e6) < 1e-9);
        assert!(num::fabs(goodput / config.channel.bandwidth_hz - 0.24) < 1e-12);
    }

    #[test]
    fn zero_phase_time_checked() {
        let mut config = headline_config();
        config.phase_plan = PhasePlan::with_fractions([1.0, 0.0, 0.0], [1.0, 0.0, 0.0], 0.0, 2e-3);
        let rates = PhaseRates::new(&config);
        assert!(rates.r_d2(0).is_infinite());
        assert!(rates.checked_r_d2(0).is_err());
        assert!(rates.checked_r_d1().is_ok());
    }
}
