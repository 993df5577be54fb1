//! Flat key=value scenario files. Keys mirror the configuration
//! struct's field names; unknown keys are hard errors so typos cannot
//! silently fall back to defaults. `#` starts a comment; blank lines
//! are ignored.

use std::collections::BTreeMap;

use cyclerel_core::scenario::{
    validate, ChannelParams, PhasePlan, Protocol, ScenarioConfig, TopologyKind, TopologySpec,
};

pub const KNOWN_KEYS: &[&str] = &[
    "kind",
    "n_nodes",
    "n_streams",
    "avg_subscribers",
    "snr_db",
    "bandwidth_hz",
    "message_bits",
    "cycle_time_s",
    "protocol",
    "f_d1",
    "f_d2",
    "f_d3",
    "f_u1",
    "f_u2",
    "f_u3",
    "f_s",
    "relay_count",
    "hop_count",
    "subchannel_count",
    "duty_pct",
    "scheduling_overhead",
    "ack_bit",
];

fn parse_kv(text: &str) -> Result<BTreeMap<String, String>, String> {
    let mut map = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("line {}: expected key=value, got `{line}`", lineno + 1))?;
        let key = key.trim();
        if !KNOWN_KEYS.contains(&key) {
            return Err(format!("line {}: unknown key `{key}`", lineno + 1));
        }
        if map.insert(key.to_string(), value.trim().to_string()).is_some() {
            return Err(format!("line {}: duplicate key `{key}`", lineno + 1));
        }
    }
    Ok(map)
}

struct Fields {
    map: BTreeMap<String, String>,
}

impl Fields {
    fn get<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, String> {
        match self.map.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse::<T>()
                .map(Some)
                .map_err(|_| format!("key `{key}`: cannot parse `{v}`")),
        }
    }

    fn require<T: std::str::FromStr>(&self, key: &str) -> Result<T, String> {
        self.get(key)?.ok_or_else(|| format!("missing required key `{key}`"))
    }
}

pub fn parse_scenario(text: &str) -> Result<ScenarioConfig, String> {
    let f = Fields { map: parse_kv(text)? };

    let kind: String = f.require("kind")?;
    let n_nodes: u32 = f.require("n_nodes")?;
    let topology = match kind.as_str() {
        "star" => {
            for key in ["n_streams", "avg_subscribers"] {
                if f.map.contains_key(key) {
                    return Err(format!("key `{key}` is derived for kind=star; remove it"));
                }
            }
            TopologySpec::star(n_nodes)
        }
        "generic" => TopologySpec::generic(
            n_nodes,
            f.require("n_streams")?,
            f.require("avg_subscribers")?,
        ),
        other => return Err(format!("key `kind`: expected star or generic, got `{other}`")),
    };

    let protocol_name: String = f.require("protocol")?;
    let protocol = Protocol::from_name(&protocol_name)
        .ok_or_else(|| format!("key `protocol`: unknown scheme `{protocol_name}`"))?;

    let snr_db: f64 = f.require("snr_db")?;
    let bandwidth_hz: f64 = f.require("bandwidth_hz")?;
    let message_bits: u32 = f.require("message_bits")?;
    let cycle_time_s: f64 = f.require("cycle_time_s")?;

    let f_s: f64 = f.get("f_s")?.unwrap_or(0.0);
    let hops = protocol.hops().or(f.get("hop_count")?).unwrap_or(2);
    let even = PhasePlan::even(hops, f_s, cycle_time_s);
    let side = |keys: [&str; 3], default: [f64; 3]| -> Result<[f64; 3], String> {
        let mut out = default;
        let given = keys.iter().any(|k| f.map.contains_key(*k));
        if given {
            for (slot, key) in out.iter_mut().zip(keys) {
                *slot = f.get(key)?.unwrap_or(0.0);
            }
        }
        Ok(out)
    };
    let f_d = side(["f_d1", "f_d2", "f_d3"], even.f_d)?;
    let f_u = side(["f_u1", "f_u2", "f_u3"], even.f_u)?;

    let config = ScenarioConfig {
        topology,
        channel: ChannelParams::from_db(snr_db, bandwidth_hz),
        message_bits,
        cycle_time_s,
        protocol,
        phase_plan: PhasePlan::with_fractions(f_d, f_u, f_s, cycle_time_s),
        relay_count: f.get("relay_count")?,
        hop_count: f.get("hop_count")?,
        subchannel_count: f.get("subchannel_count")?,
        duty_pct: f.get("duty_pct")?,
        scheduling_overhead: f.get("scheduling_overhead")?.unwrap_or(true),
        ack_bit: f.get("ack_bit")?.unwrap_or(true),
    };
    validate(config).map_err(|errors| {
        errors
            .iter()
            .map(|e| e.to_string())
            .collect::<Vec<_>>()
            .join("; ")
    })
}

/// The fully resolved key=value pairs, suitable for the output header:
/// re-running with exactly these keys reproduces the run.
pub fn resolved_pairs(config: &ScenarioConfig) -> Vec<(&'static str, String)> {
    let t = &config.topology;
    let mut out = vec![
        (
            "kind",
            match t.kind {
                TopologyKind::Star => "star".to_string(),
                TopologyKind::Generic => "generic".to_string(),
            },
        ),
        ("n_nodes", t.n_nodes.to_string()),
    ];
    if t.kind == TopologyKind::Generic {
        out.push(("n_streams", t.n_streams.to_string()));
        out.push(("avg_subscribers", t.avg_subscribers.to_string()));
    }
    out.push(("snr_db", format!("{}", config.channel.snr_db())));
    out.push(("bandwidth_hz", format!("{}", config.channel.bandwidth_hz)));
    out.push(("message_bits", config.message_bits.to_string()));
    out.push(("cycle_time_s", format!("{}", config.cycle_time_s)));
    out.push(("protocol", config.protocol.name().to_string()));
    let plan = &config.phase_plan;
    for (key, value) in [
        ("f_d1", plan.f_d[0]),
        ("f_d2", plan.f_d[1]),
        ("f_d3", plan.f_d[2]),
        ("f_u1", plan.f_u[0]),
        ("f_u2", plan.f_u[1]),
        ("f_u3", plan.f_u[2]),
        ("f_s", plan.f_s),
    ] {
        out.push((key, format!("{value}")));
    }
    if let Some(r) = config.relay_count {
        out.push(("relay_count", r.to_string()));
    }
    if let Some(k) = config.hop_count {
        out.push(("hop_count", k.to_string()));
    }
    if let Some(k) = config.subchannel_count {
        out.push(("subchannel_count", k.to_string()));
    }
    if let Some(x) = config.duty_pct {
        out.push(("duty_pct", format!("{x}")));
    }
    out.push(("scheduling_overhead", config.scheduling_overhead.to_string()));
    out.push(("ack_bit", config.ack_bit.to_string()));
    out
}
