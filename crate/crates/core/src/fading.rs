//! Outage probabilities under the single-tap Rayleigh
//! delay-limited-capacity model, the conditional persistence terms that
//! arise because fades hold for a whole cycle, and the binomial
//! combinators the closed-form engines are built from.
//!
//! A link with gain |h|^2 ~ Exp(1) supports rate R iff
//! R <= W log2(1 + |h|^2 SNR), so
//! P(fail) = 1 - exp(-(2^{R/W} - 1)/SNR). Everything here goes through
//! expm1/log1p so the sub-1e-12 tail keeps full relative accuracy.

use crate::num;
use crate::scenario::ChannelParams;

/// A link failure probability with both log views kept alongside, so
/// that downstream powers and complements never lose the tail.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinkProb {
    pub p_fail: f64,
    pub log_p_fail: f64,
    pub log1m_p_fail: f64,
}

impl LinkProb {
    pub fn from_p(p: f64) -> Self {
        debug_assert!((0.0..=1.0).contains(&p));
        Self {
            p_fail: p,
            log_p_fail: if p > 0.0 { num::ln(p) } else { f64::NEG_INFINITY },
            log1m_p_fail: num::ln_1p(-p),
        }
    }

    /// The link always fails (e.g. a zero-time phase).
    pub fn certain() -> Self {
        Self { p_fail: 1.0, log_p_fail: 0.0, log1m_p_fail: f64::NEG_INFINITY }
    }

    pub fn never() -> Self {
        Self { p_fail: 0.0, log_p_fail: f64::NEG_INFINITY, log1m_p_fail: 0.0 }
    }
}

/// Outage probability of a single link at `rate_bps`.
pub fn link_failure_prob(rate_bps: f64, channel: &ChannelParams) -> LinkProb {
    debug_assert!(rate_bps >= 0.0);
    // x = (2^{R/W} - 1) / SNR
    let x = num::expm1(rate_bps / channel.bandwidth_hz * core::f64::consts::LN_2)
        / channel.snr_linear;
    if !x.is_finite() {
        return LinkProb::certain();
    }
    let p = -num::expm1(-x);
    LinkProb {
        p_fail: p,
        log_p_fail: if p > 0.0 { num::ln(p) } else { f64::NEG_INFINITY },
        // ln(1 - p) = -x exactly.
        log1m_p_fail: -x,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DegenerateConditioning {
    pub context: &'static str,
}

impl core::fmt::Display for DegenerateConditioning {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "conditioning event has probability zero in {}", self.context)
    }
}

/// P(C < R_hi | C < R_lo) = min(p_hi/p_lo, 1).
///
/// p_lo = 0 makes the conditioning event impossible; every formula
/// multiplies the result by a zero-probability state, so any finite
/// value works — we return p_hi to avoid NaN propagation.
pub fn cond_fail_given_fail(p_lo: f64, p_hi: f64) -> f64 {
    if p_lo == 0.0 {
        p_hi
    } else {
        num::clamp01(p_hi / p_lo)
    }
}

/// P(C < R_hi | C > R_lo) = (p_hi - p_lo) / (1 - p_lo).
pub fn cond_fail_given_success(p_lo: f64, p_hi: f64) -> Result<f64, DegenerateConditioning> {
    if p_lo >= 1.0 {
        return Err(DegenerateConditioning { context: "cond_fail_given_success" });
    }
    Ok(num::clamp01((p_hi - p_lo) / (1.0 - p_lo)))
}

/// P(C < R3 | R1 < C < R2) = (p3 - p1) / (p2 - p1).
pub fn cond_fail_between(p1: f64, p2: f64, p3: f64) -> Result<f64, DegenerateConditioning> {
    if !(p2 > p1) {
        return Err(DegenerateConditioning { context: "cond_fail_between" });
    }
    Ok(num::clamp01((p3 - p1) / (p2 - p1)))
}

/// s_{ij}[f, g] = (1 - p_i^f) / (1 - p_j^g).
pub fn ratio_term(p_i: f64, f: u32, p_j: f64, g: u32) -> Result<f64, DegenerateConditioning> {
    let den = one_minus_pow(p_j, g);
    if den == 0.0 {
        return Err(DegenerateConditioning { context: "ratio_term" });
    }
    Ok(num::clamp01(one_minus_pow(p_i, f) / den))
}

/// 1 - p^k, stable for tiny and near-one p.
#[inline]
pub fn one_minus_pow(p: f64, k: u32) -> f64 {
    if k == 0 {
        0.0
    } else if p == 0.0 {
        1.0
    } else {
        -num::expm1(k as f64 * num::ln(p))
    }
}

/// ln C(n, m) through log-gamma.
#[inline]
pub fn ln_choose(n: u32, m: u32) -> f64 {
    debug_assert!(m <= n);
    num::ln_gamma(n as f64 + 1.0) - num::ln_gamma(m as f64 + 1.0)
        - num::ln_gamma((n - m) as f64 + 1.0)
}

/// B(n, m, p): probability of exactly m successes out of n independent
/// trials that each fail with probability p.
pub fn binom_pmf(n: u32, m: u32, p_fail: f64) -> f64 {
    debug_assert!(m <= n);
    if p_fail == 0.0 {
        return if m == n { 1.0 } else { 0.0 };
    }
    if p_fail == 1.0 {
        return if m == 0 { 1.0 } else { 0.0 };
    }
    num::exp(ln_binom_pmf(n, m, num::ln_1p(-p_fail), num::ln(p_fail)))
}

/// ln B(n, m, p) from the two log views of p. Callers must handle the
/// degenerate p = 0 / p = 1 endpoints (where one view is -inf).
#[inline]
pub fn ln_binom_pmf(n: u32, m: u32, ln_success: f64, ln_fail: f64) -> f64 {
    let mut acc = ln_choose(n, m);
    if m > 0 {
        acc += m as f64 * ln_success;
    }
    if n > m {
        acc += (n - m) as f64 * ln_fail;
    }
    acc
}

/// F(n, p) = 1 - (1 - p)^n: at least one of n independent trials fails.
pub fn at_least_one_fails(n: u32, p_fail: f64) -> f64 {
    if n == 0 || p_fail == 0.0 {
        return 0.0;
    }
    if p_fail >= 1.0 {
        return 1.0;
    }
    -num::expm1(n as f64 * num::ln_1p(-p_fail))
}

/// F(n, p) with p supplied as ln(p); keeps accuracy when p underflows
/// the linear domain.
pub fn at_least_one_fails_ln(n: u32, ln_p: f64) -> f64 {
    if n == 0 || ln_p == f64::NEG_INFINITY {
        return 0.0;
    }
    if ln_p >= 0.0 {
        return 1.0;
    }
    if ln_p < -700.0 {
        // (1-p)^n ~ 1 - n p: return n*p without forming p first.
        return num::exp(ln_p + num::ln(n as f64));
    }
    at_least_one_fails(n, num::exp(ln_p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::fabs;
    use proptest::prelude::*;

    #[test]
    fn outage_examples() {
        let ch = ChannelParams::new(1.0, 1.0);
        assert_eq!(link_failure_prob(0.0, &ch).p_fail, 0.0);
        // R/W = 1, SNR = 1: p = 1 - e^{-1}.
        let p = link_failure_prob(1.0, &ch).p_fail;
        assert!(fabs(p - 0.6321205588285577) < 1e-15);
        // SNR -> inf at fixed rate: p -> 0.
        let ch_hi = ChannelParams::new(1e30, 1.0);
        assert!(link_failure_prob(1.0, &ch_hi).p_fail < 1e-29);
        // Exponent overflow saturates to a certain failure.
        let ch_narrow = ChannelParams::new(1.0, 1.0);
        assert_eq!(link_failure_prob(5000.0, &ch_narrow).p_fail, 1.0);
    }

    #[test]
    fn outage_tail_first_order() {
        // For p < 1e-8 the stable path must match (2^{R/W}-1)/SNR to
        // 1e-6 relative.
        for (r_over_w, snr_db) in [(0.1, 80.0), (0.24, 95.0), (1.0, 101.0), (2.0, 120.0)] {
            let snr = crate::scenario::db_to_linear(snr_db);
            let ch = ChannelParams::new(snr, 1.0);
            let p = link_failure_prob(r_over_w, &ch).p_fail;
            let first_order = num::expm1(r_over_w * core::f64::consts::LN_2) / snr;
            assert!(p < 1e-8, "test premise: tiny p, got {p}");
            assert!(fabs(p - first_order) / p < 1e-6);
        }
    }

    #[test]
    fn conditional_examples() {
        assert_eq!(cond_fail_given_fail(0.5, 0.25), 0.5);
        assert_eq!(cond_fail_given_fail(0.3, 0.3), 1.0);
        assert_eq!(cond_fail_given_fail(0.2, 0.9), 1.0);
        assert_eq!(cond_fail_given_fail(0.0, 0.7), 0.7);

        assert_eq!(cond_fail_given_success(0.5, 0.75).unwrap(), 0.5);
        assert_eq!(cond_fail_given_success(0.3, 0.3).unwrap(), 0.0);
        assert_eq!(cond_fail_given_success(0.0, 0.4).unwrap(), 0.4);
        assert!(cond_fail_given_success(1.0, 0.5).is_err());

        assert!(fabs(cond_fail_between(0.2, 0.6, 0.4).unwrap() - 0.5) < 1e-15);
        assert_eq!(cond_fail_between(0.2, 0.6, 0.1).unwrap(), 0.0);
        assert_eq!(cond_fail_between(0.2, 0.6, 0.9).unwrap(), 1.0);
        assert!(cond_fail_between(0.6, 0.6, 0.5).is_err());
    }

    #[test]
    fn ratio_term_examples() {
        assert_eq!(ratio_term(0.5, 2, 0.5, 2).unwrap(), 1.0);
        assert_eq!(ratio_term(0.5, 0, 0.5, 2).unwrap(), 0.0);
        let v = ratio_term(0.5, 1, 0.5, 2).unwrap();
        assert!(fabs(v - 0.5 / 0.75) < 1e-15);
        assert!(ratio_term(0.5, 1, 1.0, 3).is_err());
    }

    #[test]
    fn binom_examples() {
        assert_eq!(binom_pmf(7, 7, 0.0), 1.0);
        assert!(fabs(binom_pmf(2, 1, 0.5) - 0.5) < 1e-15);
        assert!(fabs(binom_pmf(30, 0, 0.25) - num::pow(0.25, 30.0)) < 1e-22);
    }

    #[test]
    fn binom_sums_to_one() {
        for &p in &[1e-12, 1e-6, 0.5, 1.0 - 1e-6] {
            for &n in &[1u32, 7, 30, 200] {
                let mut k = num::Kahan::new();
                for m in 0..=n {
                    k.add(binom_pmf(n, m, p));
                }
                assert!(fabs(k.value() - 1.0) < 1e-10, "n={n} p={p} sum={}", k.value());
            }
        }
    }

    #[test]
    fn f_examples() {
        assert_eq!(at_least_one_fails(9, 0.0), 0.0);
        assert_eq!(at_least_one_fails(1, 0.37), 0.37);
        assert!(fabs(at_least_one_fails(2, 0.5) - 0.75) < 1e-15);
        // F(30, 1e-10) ~ 3e-9.
        let f = at_least_one_fails(30, 1e-10);
        assert!(fabs(f - 3e-9) / 3e-9 < 1e-7);
        // Deep tail through the log view.
        let f = at_least_one_fails_ln(30, -720.0);
        assert!(fabs(num::ln(f) - (-720.0 + num::ln(30.0))) < 1e-9);
    }

    proptest! {
        #[test]
        fn outage_monotone(r1 in 0.0..4.0f64, r2 in 0.0..4.0f64,
                           s1 in -30.0..60.0f64, s2 in -30.0..60.0f64) {
            let (r_lo, r_hi) = if r1 <= r2 { (r1, r2) } else { (r2, r1) };
            let (s_lo, s_hi) = if s1 <= s2 { (s1, s2) } else { (s2, s1) };
            let ch = |db: f64| ChannelParams::from_db(db, 1.0);
            // Nondecreasing in rate.
            prop_assert!(link_failure_prob(r_lo, &ch(s1)).p_fail
                <= link_failure_prob(r_hi, &ch(s1)).p_fail);
            // Nonincreasing in SNR.
            prop_assert!(link_failure_prob(r1, &ch(s_hi)).p_fail
                <= link_failure_prob(r1, &ch(s_lo)).p_fail);
        }

        #[test]
        fn conditionals_stay_in_unit_interval(a in 0.0..1.0f64, b in 0.0..1.0f64, c in 0.0..1.0f64) {
            let v = cond_fail_given_fail(a, b);
            prop_assert!((0.0..=1.0).contains(&v));
            if a < 1.0 {
                let v = cond_fail_given_success(a, b).unwrap();
                prop_assert!((0.0..=1.0).contains(&v));
            }
            if b > a {
                let v = cond_fail_between(a, b, c).unwrap();
                prop_assert!((0.0..=1.0).contains(&v));
            }
        }

        #[test]
        fn f_below_union_bound(n in 1u32..500, p in 0.0..1.0f64) {
            let f = at_least_one_fails(n, p);
            prop_assert!(f <= n as f64 * p + 1e-15);
            prop_assert!((0.0..=1.0).contains(&f));
        }
    }
}
