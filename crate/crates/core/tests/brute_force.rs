//! Exhaustive-enumeration oracle for the star engines.
//!
//! Every link's persistent fade is reduced to the interval of its CDF
//! value between the phase thresholds {0, p1, p2, p3, 1}; enumerating
//! the joint interval assignment over all n controller links and
//! C(n,2) pair links and replaying the protocol on each assignment
//! gives the failure probability exactly (up to float summation). The
//! closed-form engines must agree within 1e-9 absolute for n <= 4.

use cyclerel_core::analytic_star::{
    one_hop_downlink, one_hop_uplink, three_hop_downlink, two_hop_fixed_downlink,
    uplink_engine,
};
use cyclerel_core::fading::LinkProb;

struct Links {
    n: usize,
    pair_index: Vec<Vec<usize>>,
}

impl Links {
    fn new(n: usize) -> Self {
        let mut pair_index = vec![vec![usize::MAX; n + 1]; n + 1];
        let mut next = n; // controller links occupy 0..n
        for i in 1..=n {
            for j in (i + 1)..=n {
                pair_index[i][j] = next;
                pair_index[j][i] = next;
                next += 1;
            }
        }
        Self { n, pair_index }
    }

    fn count(&self) -> usize {
        self.n + self.n * (self.n - 1) / 2
    }

    fn ctrl(&self, i: usize) -> usize {
        i - 1
    }

    fn pair(&self, i: usize, j: usize) -> usize {
        self.pair_index[i][j]
    }
}

/// Exact (p_downlink, p_uplink) for the 3-hop star at constant
/// per-phase failure probabilities, by exhaustive enumeration.
fn brute_force(n: usize, p1: f64, p2: f64, p3: f64) -> (f64, f64) {
    let mut cuts = vec![0.0, p1, p2, p3, 1.0];
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cuts.dedup();
    let n_int = cuts.len() - 1;
    let links = Links::new(n);
    let n_links = links.count();

    let mut idx = vec![0usize; n_links];
    let mut p_down = 0.0;
    let mut p_up = 0.0;
    let mut have = vec![false; n + 1];
    let mut snapshot = vec![false; n + 1];
    'outer: loop {
        let mut w = 1.0;
        for &k in &idx {
            w *= cuts[k + 1] - cuts[k];
        }
        if w > 0.0 {
            // Link `l` supports the rate whose failure probability is
            // `p` iff its CDF value is at least p.
            let ok = |l: usize, p: f64| cuts[idx[l]] >= p;

            // Downlink: controller broadcast, then holders rebroadcast.
            for i in 1..=n {
                have[i] = ok(links.ctrl(i), p1);
            }
            for &p_phase in &[p2, p3] {
                snapshot.copy_from_slice(&have);
                for j in 1..=n {
                    if !snapshot[j] {
                        let direct = ok(links.ctrl(j), p_phase);
                        let relayed = (1..=n)
                            .any(|i| i != j && snapshot[i] && ok(links.pair(i, j), p_phase));
                        if direct || relayed {
                            have[j] = true;
                        }
                    }
                }
            }
            if (1..=n).any(|j| !have[j]) {
                p_down += w;
            }

            // Uplink: each node's own message must reach the controller.
            let mut up_failed = false;
            'nodes: for u in 1..=n {
                let cu = links.ctrl(u);
                if ok(cu, p1) || ok(cu, p2) || ok(cu, p3) {
                    continue;
                }
                for v in 1..=n {
                    if v == u {
                        continue;
                    }
                    let heard1 = ok(links.pair(u, v), p1);
                    let heard2 = ok(links.pair(u, v), p2);
                    let cv = links.ctrl(v);
                    // Phase 1 holders deliver in phase 2 or 3; a node
                    // that only heard the phase 2 retry needs phase 3.
                    if (heard1 && (ok(cv, p2) || ok(cv, p3))) || (heard2 && ok(cv, p3)) {
                        continue 'nodes;
                    }
                    if heard1 {
                        // Chain: v relays at the phase 2 rate to some x
                        // whose controller link clears phase 3.
                        for x in 1..=n {
                            if x != u
                                && x != v
                                && ok(links.pair(v, x), p2)
                                && ok(links.ctrl(x), p3)
                            {
                                continue 'nodes;
                            }
                        }
                    }
                }
                up_failed = true;
                break;
            }
            if up_failed {
                p_up += w;
            }
        }

        let mut l = 0;
        loop {
            idx[l] += 1;
            if idx[l] < n_int {
                break;
            }
            idx[l] = 0;
            l += 1;
            if l == n_links {
                break 'outer;
            }
        }
    }
    (p_down, p_up)
}

fn check(n: usize, p1: f64, p2: f64, p3: f64) {
    let (down, up) = brute_force(n, p1, p2, p3);
    let lp = |p: f64| {
        if p >= 1.0 {
            LinkProb::certain()
        } else {
            LinkProb::from_p(p)
        }
    };
    let (l1, l2, l3) = (lp(p1), lp(p2), lp(p3));
    let a_down = three_hop_downlink(n as u32, &l1, &|_| l2, &|_| l3);
    let a_up = uplink_engine(n as u32, &l1, &|_| l2, &|_| l3);
    assert!(
        (a_down - down).abs() < 1e-9,
        "downlink n={n} ({p1},{p2},{p3}): engine {a_down} vs brute {down}"
    );
    assert!(
        (a_up - up).abs() < 1e-9,
        "uplink n={n} ({p1},{p2},{p3}): engine {a_up} vs brute {up}"
    );
    // Collapsed variants ride the same oracle.
    if p3 >= 1.0 {
        let two = two_hop_fixed_downlink(n as u32, &l1, &l2);
        assert!((two - down).abs() < 1e-9, "2-hop downlink n={n}");
        if p2 >= 1.0 {
            assert!((one_hop_downlink(n as u32, p1) - down).abs() < 1e-9);
            assert!((one_hop_uplink(n as u32, p1) - up).abs() < 1e-9);
        }
    }
}

#[test]
fn engines_match_enumeration_small_n() {
    for n in 1..=3 {
        check(n, 0.5, 0.3, 0.15); // descending: the common regime
        check(n, 0.15, 0.3, 0.5); // ascending: later phases are worse
        check(n, 0.3, 0.5, 0.15); // non-monotone ordering
        check(n, 0.5, 0.5, 0.5); // full tie
        check(n, 0.5, 0.15, 0.15); // tied retransmission phases
    }
}

#[test]
fn engines_match_enumeration_degenerate_probs() {
    for n in 1..=3 {
        check(n, 0.5, 0.3, 1.0); // dead third phase = 2-hop
        check(n, 0.5, 1.0, 1.0); // dead both = 1-hop
        check(n, 1.0, 0.5, 0.3); // phase 1 never delivers
        check(n, 0.5, 0.0, 0.3); // phase 2 always delivers
        check(n, 0.0, 0.3, 0.5); // phase 1 always delivers
        check(n, 1.0, 1.0, 0.5); // only the third phase works
    }
}

#[test]
fn engines_match_enumeration_n4() {
    check(4, 0.5, 0.3, 0.15);
    check(4, 0.15, 0.3, 0.5);
    check(4, 0.5, 0.5, 0.5);
    check(4, 0.6, 0.2, 1.0);
    check(4, 0.85, 0.4, 0.1);
}
