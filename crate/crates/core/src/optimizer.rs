//! Search layers over the analytic engines: minimum-SNR bisection,
//! phase-allocation brute force, relay-count / hop-count / sub-channel
//! selection, and the destination sweep.
//!
//! Everything here is plain brute force plus bisection. Bisection uses
//! a fixed bracket, so the sequence of probed SNRs — and therefore the
//! returned value — depends only on the engine's comparisons against
//! the target, never on enumeration order; grid searches report exact
//! float ties and break them deterministically. Monotonicity of the
//! failure probability in SNR is assumed, guarded by an optional 1 dB
//! pre-scan that fails loudly on an inversion.

use alloc::vec::Vec;

use crate::analytic_generic::{
    duty_cycle_failure, freq_hop_failure, generic_rate, nonsim_relay_failure, union_bound_3hop,
};
use crate::analytic_star::star_cycle_failure;
use crate::fading::{at_least_one_fails, link_failure_prob};
use crate::scenario::{
    db_to_linear, PhasePlan, Protocol, ScenarioConfig, TopologySpec,
};

/// Parameters of the minimum-SNR search.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SnrSearchSpec {
    pub target_failure: f64,
    pub bracket_db: (f64, f64),
    pub tolerance_db: f64,
    /// Walk the bracket in 1 dB steps before bisecting and error out
    /// on a non-monotone engine. Off for inner loops whose engines are
    /// re-verified by the postcondition check anyway.
    pub prescan: bool,
}

impl Default for SnrSearchSpec {
    fn default() -> Self {
        Self {
            target_failure: 1e-9,
            bracket_db: (-20.0, 60.0),
            tolerance_db: 0.05,
            prescan: true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SearchError {
    /// The target is not met even at the top of the bracket.
    InfeasibleBracket { high_db: f64 },
    /// The failure probability increased with SNR beyond numerical
    /// noise, so bisection would be meaningless.
    NonMonotoneScan { at_db: f64 },
}

impl core::fmt::Display for SearchError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            SearchError::InfeasibleBracket { high_db } => {
                write!(f, "target failure probability not met at {high_db} dB")
            }
            SearchError::NonMonotoneScan { at_db } => {
                write!(f, "failure probability increases with SNR near {at_db} dB")
            }
        }
    }
}

/// Cycle-failure probability of `config`'s scheme with the nominal SNR
/// overridden to `snr_db`. This is the engine dispatch used by every
/// search below.
pub fn failure_at_snr(config: &ScenarioConfig, snr_db: f64) -> f64 {
    let cfg = config.with_snr_linear(db_to_linear(snr_db));
    let t = &cfg.topology;
    match cfg.protocol {
        p if p.is_star_scheme() => star_cycle_failure(&cfg).p_cycle_bound,
        Protocol::NonsimRelay => nonsim_relay_failure(
            t.n_nodes,
            t.n_streams,
            t.avg_subscribers,
            cfg.message_bits,
            cfg.cycle_time_s,
            cfg.hop_count.unwrap_or(2),
            cfg.relay_count.expect("nonsim_relay requires relay_count"),
            &cfg.channel,
        ),
        Protocol::FreqHop => freq_hop_failure(
            t.n_streams,
            cfg.subchannel_count.expect("freq_hop requires subchannel_count"),
            generic_rate(1, t.n_streams, cfg.message_bits, cfg.cycle_time_s),
            &cfg.channel,
        ),
        Protocol::DutyCycled => {
            let k = cfg.hop_count.unwrap_or(2);
            let rate = generic_rate(k, t.n_streams, cfg.message_bits, cfg.cycle_time_s);
            let p = link_failure_prob(rate, &cfg.channel).p_fail;
            if k == 3 {
                // Three-hop relaying keeps the whole pool awake.
                union_bound_3hop(t.n_nodes, t.n_streams, t.avg_subscribers, p)
            } else {
                let duty = cfg.duty_pct.unwrap_or(100.0);
                duty_cycle_failure(t.n_nodes, t.n_streams, t.avg_subscribers, p, duty)
            }
        }
        p => unreachable!("no analytic engine for {:?}", p),
    }
}

/// Smallest SNR in the bracket meeting the target, per the scheme's
/// own engine.
pub fn min_snr(config: &ScenarioConfig, spec: &SnrSearchSpec) -> Result<f64, SearchError> {
    min_snr_with(config, spec, &failure_at_snr)
}

/// Generalized minimum-SNR search against an arbitrary engine
/// `f(config, snr_db) -> failure probability`. Postcondition (both
/// re-verified after the search): f(s*) ≤ target and, unless s* is the
/// bracket's low edge, f(s* − tolerance) > target.
pub fn min_snr_with(
    config: &ScenarioConfig,
    spec: &SnrSearchSpec,
    engine: &dyn Fn(&ScenarioConfig, f64) -> f64,
) -> Result<f64, SearchError> {
    let (lo0, hi0) = spec.bracket_db;
    assert!(lo0 < hi0 && spec.tolerance_db > 0.0);
    assert!(spec.target_failure > 0.0 && spec.target_failure < 1.0);
    let f = |snr_db: f64| engine(config, snr_db);
    let target = spec.target_failure;

    if f(hi0) > target {
        return Err(SearchError::InfeasibleBracket { high_db: hi0 });
    }
    if spec.prescan {
        let mut prev = f(lo0);
        let mut snr = lo0 + 1.0;
        while snr < hi0 {
            let cur = f(snr);
            if cur > prev * (1.0 + 1e-6) {
                return Err(SearchError::NonMonotoneScan { at_db: snr });
            }
            prev = cur;
            snr += 1.0;
        }
    }
    if f(lo0) <= target {
        return Ok(lo0);
    }
    let (mut lo, mut hi) = (lo0, hi0);
    while hi - lo > spec.tolerance_db {
        let mid = 0.5 * (lo + hi);
        if f(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if f(hi) > target || f(hi - spec.tolerance_db) <= target {
        return Err(SearchError::NonMonotoneScan { at_db: hi });
    }
    Ok(hi)
}

/// Simplex grid for the per-side phase fractions.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AllocationGrid {
    pub step: f64,
}

impl Default for AllocationGrid {
    fn default() -> Self {
        Self { step: 0.02 }
    }
}

impl AllocationGrid {
    /// Number of steps per unit; `step` must divide 1 exactly.
    pub fn steps(&self) -> u32 {
        let n = crate::num::ceil(1.0 / self.step - 0.5) as u32;
        assert!(
            n >= 1 && crate::num::fabs(n as f64 * self.step - 1.0) <= 1e-12,
            "grid step {} does not divide 1",
            self.step
        );
        n
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Downlink,
    Uplink,
}

/// Best per-side fractions and the side's minimum SNR.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhaseOptimum {
    pub fractions: [f64; 3],
    pub min_snr_db: f64,
}

fn with_side_fractions(config: &ScenarioConfig, side: Side, f: [f64; 3]) -> ScenarioConfig {
    let plan = &config.phase_plan;
    let (f_d, f_u) = match side {
        Side::Downlink => (f, plan.f_u),
        Side::Uplink => (plan.f_d, f),
    };
    let mut cfg = config.clone();
    cfg.phase_plan = PhasePlan::with_fractions(f_d, f_u, plan.f_s, config.cycle_time_s);
    cfg
}

fn side_failure(config: &ScenarioConfig, snr_db: f64, side: Side) -> f64 {
    let b = star_cycle_failure(&config.with_snr_linear(db_to_linear(snr_db)));
    match side {
        Side::Downlink => b.p_downlink,
        Side::Uplink => b.p_uplink,
    }
}

#[inline]
fn evenness(f: [f64; 3]) -> f64 {
    f.iter().map(|x| (x - 1.0 / 3.0) * (x - 1.0 / 3.0)).sum()
}

/// Brute-force search over one side's simplex of phase fractions for
/// the allocation minimizing that side's minimum SNR at the target.
/// Zero-length phases are allowed (their rate is unsupportable, so the
/// engine collapses to fewer hops). Exact SNR ties — bisection on a
/// fixed bracket quantizes results, so ties are exact — go to the most
/// even allocation.
pub fn optimize_phase_allocation(
    config: &ScenarioConfig,
    grid: &AllocationGrid,
    side: Side,
    spec: &SnrSearchSpec,
) -> Result<PhaseOptimum, SearchError> {
    assert_eq!(
        config.protocol,
        Protocol::Adaptive3Hop,
        "phase allocation is searched for the adaptive 3-hop scheme"
    );
    let steps = grid.steps();
    let inner = SnrSearchSpec { prescan: false, ..*spec };
    let mut best: Option<PhaseOptimum> = None;
    for k1 in 0..=steps {
        for k2 in 0..=(steps - k1) {
            let f1 = k1 as f64 * grid.step;
            let f2 = k2 as f64 * grid.step;
            let f = [f1, f2, (1.0 - f1 - f2).max(0.0)];
            let cfg = with_side_fractions(config, side, f);
            if let Some(b) = &best {
                // Cannot beat or tie the incumbent: skip the bisection.
                if side_failure(&cfg, b.min_snr_db, side) > spec.target_failure {
                    continue;
                }
            }
            let s = match min_snr_with(&cfg, &inner, &|c, snr| side_failure(c, snr, side)) {
                Ok(s) => s,
                Err(SearchError::InfeasibleBracket { .. }) => continue,
                Err(e) => return Err(e),
            };
            let better = match &best {
                None => true,
                Some(b) => {
                    s < b.min_snr_db
                        || (s == b.min_snr_db && evenness(f) < evenness(b.fractions))
                }
            };
            if better {
                best = Some(PhaseOptimum { fractions: f, min_snr_db: s });
            }
        }
    }
    best.ok_or(SearchError::InfeasibleBracket { high_db: spec.bracket_db.1 })
}

/// Jointly optimized adaptive 3-hop star: each side's fractions are
/// searched at half the target (the cycle bound is the sum of the two
/// sides), then the combined plan's minimum SNR is re-searched against
/// the full cycle bound.
#[derive(Clone, Debug, PartialEq)]
pub struct StarOptimum {
    pub f_d: [f64; 3],
    pub f_u: [f64; 3],
    pub min_snr_db: f64,
    pub config: ScenarioConfig,
}

pub fn optimize_star_3hop(
    config: &ScenarioConfig,
    grid: &AllocationGrid,
    spec: &SnrSearchSpec,
) -> Result<StarOptimum, SearchError> {
    let half = SnrSearchSpec { target_failure: spec.target_failure / 2.0, ..*spec };
    let down = optimize_phase_allocation(config, grid, Side::Downlink, &half)?;
    let up = optimize_phase_allocation(config, grid, Side::Uplink, &half)?;
    let mut cfg = config.clone();
    cfg.phase_plan = PhasePlan::with_fractions(
        down.fractions,
        up.fractions,
        config.phase_plan.f_s,
        config.cycle_time_s,
    );
    let s = min_snr(&cfg, spec)?;
    Ok(StarOptimum { f_d: down.fractions, f_u: up.fractions, min_snr_db: s, config: cfg })
}

/// Best relay count for the non-simultaneous scheme over `r_range`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RelayOptimum {
    pub best_r: u32,
    pub min_snr_db: f64,
    /// The minimum sits on an edge of the searched range, so it may
    /// not be an interior optimum.
    pub at_boundary: bool,
}

pub fn optimize_relay_count(
    config: &ScenarioConfig,
    r_range: core::ops::RangeInclusive<u32>,
    spec: &SnrSearchSpec,
) -> Result<RelayOptimum, SearchError> {
    let mut best: Option<(u32, f64)> = None;
    for r in r_range.clone() {
        let mut cfg = config.clone();
        cfg.protocol = Protocol::NonsimRelay;
        cfg.relay_count = Some(r);
        let s = match min_snr(&cfg, spec) {
            Ok(s) => s,
            Err(SearchError::InfeasibleBracket { .. }) => continue,
            Err(e) => return Err(e),
        };
        if best.map_or(true, |(_, b)| s < b) {
            best = Some((r, s));
        }
    }
    let (best_r, min_snr_db) =
        best.ok_or(SearchError::InfeasibleBracket { high_db: spec.bracket_db.1 })?;
    Ok(RelayOptimum {
        best_r,
        min_snr_db,
        at_boundary: best_r == *r_range.start() || best_r == *r_range.end(),
    })
}

/// Hop-count decision over the unoptimized even splits (scheduling
/// time excluded, matching the idealized comparison).
#[derive(Clone, Debug, PartialEq)]
pub struct HopChoice {
    pub best_hops: u32,
    pub min_snr_db: f64,
    /// (hops, min SNR) per candidate; infeasible candidates carry
    /// `f64::INFINITY`.
    pub candidates: Vec<(u32, f64)>,
}

pub fn choose_hops(
    config: &ScenarioConfig,
    spec: &SnrSearchSpec,
) -> Result<HopChoice, SearchError> {
    let schemes = [
        (1u32, Protocol::OneHop),
        (2, Protocol::Adaptive2Hop),
        (3, Protocol::Adaptive3Hop),
    ];
    let mut candidates = Vec::with_capacity(schemes.len());
    for (hops, proto) in schemes {
        let mut cfg = config.clone();
        cfg.protocol = proto;
        cfg.phase_plan = PhasePlan::even(hops, 0.0, cfg.cycle_time_s);
        let s = match min_snr(&cfg, spec) {
            Ok(s) => s,
            Err(SearchError::InfeasibleBracket { .. }) => f64::INFINITY,
            Err(e) => return Err(e),
        };
        candidates.push((hops, s));
    }
    let &(best_hops, min_snr_db) = candidates
        .iter()
        .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
        .unwrap();
    if min_snr_db.is_infinite() {
        return Err(SearchError::InfeasibleBracket { high_db: spec.bracket_db.1 });
    }
    Ok(HopChoice { best_hops, min_snr_db, candidates })
}

/// One row of the destination sweep.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DestPoint {
    pub destinations: u32,
    pub min_snr_db: f64,
}

/// Minimum SNR of the generic two-hop union bound as the subscriber
/// count d grows from 1 to n−1, with every node sourcing one stream.
/// The d = 0 row is the star reference (fixed 2-hop, even split).
pub fn dest_sweep(
    config: &ScenarioConfig,
    spec: &SnrSearchSpec,
) -> Result<Vec<DestPoint>, SearchError> {
    let n = config.topology.n_nodes;
    let mut out = Vec::with_capacity(n as usize);
    let mut star = config.clone();
    star.topology = TopologySpec::star(n);
    star.protocol = Protocol::Fixed2Hop;
    star.phase_plan = PhasePlan::even(2, config.phase_plan.f_s, config.cycle_time_s);
    out.push(DestPoint { destinations: 0, min_snr_db: min_snr(&star, spec)? });
    for d in 1..n {
        let mut cfg = config.clone();
        cfg.topology = TopologySpec::generic(n, n, d);
        cfg.protocol = Protocol::DutyCycled;
        cfg.duty_pct = Some(100.0);
        cfg.hop_count = Some(2);
        out.push(DestPoint { destinations: d, min_snr_db: min_snr(&cfg, spec)? });
    }
    Ok(out)
}

/// Schemes of the network-size sweep.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepScheme {
    OneHop,
    /// One full-cycle slot per message on a single link — the
    /// repetition/HARQ-style reference without cooperation.
    HarqSingleLink,
    Fixed2Hop,
    Adaptive2Hop,
    Adaptive3Hop,
    Adaptive3HopOptimized,
    /// Non-simultaneous relaying, best relay count per point.
    NonsimBestR,
    /// Frequency hopping, best sub-channel count per point.
    FreqHopBestK,
}

impl SweepScheme {
    pub fn name(&self) -> &'static str {
        match self {
            SweepScheme::OneHop => "one_hop",
            SweepScheme::HarqSingleLink => "harq",
            SweepScheme::Fixed2Hop => "fixed_2hop",
            SweepScheme::Adaptive2Hop => "adaptive_2hop",
            SweepScheme::Adaptive3Hop => "adaptive_3hop",
            SweepScheme::Adaptive3HopOptimized => "adaptive_3hop_opt",
            SweepScheme::NonsimBestR => "nonsim_relay",
            SweepScheme::FreqHopBestK => "freq_hop",
        }
    }

    pub const ALL: [SweepScheme; 8] = [
        SweepScheme::OneHop,
        SweepScheme::HarqSingleLink,
        SweepScheme::Fixed2Hop,
        SweepScheme::Adaptive2Hop,
        SweepScheme::Adaptive3Hop,
        SweepScheme::Adaptive3HopOptimized,
        SweepScheme::NonsimBestR,
        SweepScheme::FreqHopBestK,
    ];
}

/// One row of the sweep table.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepPoint {
    pub scheme: SweepScheme,
    pub n: u32,
    /// `f64::INFINITY` when the bracket cannot meet the target.
    pub min_snr_db: f64,
    /// Best r (non-simultaneous) or best k (frequency hopping).
    pub inner_param: Option<u32>,
}

fn star_variant(template: &ScenarioConfig, n: u32, protocol: Protocol) -> ScenarioConfig {
    let mut cfg = template.clone();
    cfg.topology = TopologySpec::star(n);
    cfg.protocol = protocol;
    cfg.phase_plan = PhasePlan::even(
        protocol.hops().unwrap_or(2),
        template.phase_plan.f_s,
        cfg.cycle_time_s,
    );
    cfg
}

fn sweep_point(
    template: &ScenarioConfig,
    scheme: SweepScheme,
    n: u32,
    grid: &AllocationGrid,
    spec: &SnrSearchSpec,
) -> Result<SweepPoint, SearchError> {
    let feasible = |r: Result<f64, SearchError>| match r {
        Ok(s) => Ok((s, true)),
        Err(SearchError::InfeasibleBracket { .. }) => Ok((f64::INFINITY, false)),
        Err(e) => Err(e),
    };
    let (min_snr_db, inner_param) = match scheme {
        SweepScheme::OneHop => {
            let cfg = star_variant(template, n, Protocol::OneHop);
            (feasible(min_snr(&cfg, spec))?.0, None)
        }
        SweepScheme::HarqSingleLink => {
            let cfg = star_variant(template, n, Protocol::OneHop);
            let engine = |c: &ScenarioConfig, snr_db: f64| {
                let ch = c.channel.with_snr_linear(db_to_linear(snr_db));
                let p = link_failure_prob(
                    c.message_bits as f64 / c.cycle_time_s,
                    &ch,
                );
                at_least_one_fails(c.topology.n_streams, p.p_fail)
            };
            (feasible(min_snr_with(&cfg, spec, &engine))?.0, None)
        }
        SweepScheme::Fixed2Hop => {
            let cfg = star_variant(template, n, Protocol::Fixed2Hop);
            (feasible(min_snr(&cfg, spec))?.0, None)
        }
        SweepScheme::Adaptive2Hop => {
            let cfg = star_variant(template, n, Protocol::Adaptive2Hop);
            (feasible(min_snr(&cfg, spec))?.0, None)
        }
        SweepScheme::Adaptive3Hop => {
            let cfg = star_variant(template, n, Protocol::Adaptive3Hop);
            (feasible(min_snr(&cfg, spec))?.0, None)
        }
        SweepScheme::Adaptive3HopOptimized => {
            let cfg = star_variant(template, n, Protocol::Adaptive3Hop);
            match optimize_star_3hop(&cfg, grid, spec) {
                Ok(opt) => (opt.min_snr_db, None),
                Err(SearchError::InfeasibleBracket { .. }) => (f64::INFINITY, None),
                Err(e) => return Err(e),
            }
        }
        SweepScheme::NonsimBestR => {
            // Star cast as a generic network: n + 1 participants
            // (controller included), 2n streams, one subscriber each,
            // so up to n − 1 dedicated relays per stream.
            let mut cfg = template.clone();
            cfg.topology = TopologySpec::generic(n + 1, 2 * n, 1);
            cfg.hop_count = Some(cfg.hop_count.unwrap_or(2));
            match optimize_relay_count(&cfg, 1..=n.saturating_sub(1).max(1), spec) {
                Ok(opt) => (opt.min_snr_db, Some(opt.best_r)),
                Err(SearchError::InfeasibleBracket { .. }) => (f64::INFINITY, None),
                Err(e) => return Err(e),
            }
        }
        SweepScheme::FreqHopBestK => {
            let mut best: Option<(u32, f64)> = None;
            for k in 1..=64 {
                let mut cfg = template.clone();
                cfg.topology = TopologySpec::star(n);
                cfg.protocol = Protocol::FreqHop;
                cfg.subchannel_count = Some(k);
                match min_snr(&cfg, spec) {
                    Ok(s) if best.map_or(true, |(_, b)| s < b) => best = Some((k, s)),
                    Ok(_) => {}
                    Err(SearchError::InfeasibleBracket { .. }) => {}
                    Err(e) => return Err(e),
                }
            }
            match best {
                Some((k, s)) => (s, Some(k)),
                None => (f64::INFINITY, None),
            }
        }
    };
    Ok(SweepPoint { scheme, n, min_snr_db, inner_param })
}

/// Minimum SNR per (scheme, network size). Infeasible points carry
/// `f64::INFINITY` rather than aborting the table; genuine engine
/// pathologies (non-monotone scans) still propagate.
pub fn sweep_min_snr(
    template: &ScenarioConfig,
    n_values: &[u32],
    schemes: &[SweepScheme],
    grid: &AllocationGrid,
    spec: &SnrSearchSpec,
) -> Result<Vec<SweepPoint>, SearchError> {
    let mut out = Vec::with_capacity(n_values.len() * schemes.len());
    for &scheme in schemes {
        for &n in n_values {
            out.push(sweep_point(template, scheme, n, grid, spec)?);
        }
    }
    Ok(out)
}
