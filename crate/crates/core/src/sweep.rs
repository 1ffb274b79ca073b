//! Rate-memory sweeps rendered as CSV.

use std::io::Write;

use rayon::prelude::*;

use crate::bounds::{lower_bound, multicast_lower, multicast_upper};
use crate::centralized::{
    self, centralized_envelope, corner_points, envelope, measured_rate, minimum_memory, t_from_memory, EnvelopeError,
    SystemParams,
};
use crate::decentralized::{self, corner_points_dec, memory_dec, DecentralizedParams};
use crate::model::{worst_case_demands, Tamper};
use crate::rational::{render, to_f64, Rational};

/// Largest K for which corner points are also simulated.
pub const SIMULATION_MAX_USERS: u32 = 8;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SweepSpec {
    pub users: u32,
    pub files: u32,
    /// Decentralized slot counts, one curve each.
    pub slots: Vec<u32>,
    /// Explicit memory grid; corner points of every curve when `None`.
    pub grid: Option<Vec<Rational>>,
    pub simulate: bool,
}

impl SweepSpec {
    pub fn new(users: u32, files: u32) -> Self {
        SweepSpec {
            users,
            files,
            slots: Vec::new(),
            grid: None,
            simulate: users <= SIMULATION_MAX_USERS,
        }
    }

    pub fn with_slots(mut self, slots: Vec<u32>) -> Self {
        self.slots = slots;
        self
    }

    pub fn with_grid(mut self, grid: Vec<Rational>) -> Self {
        self.grid = Some(grid);
        self
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.users < 2 || self.files < self.users {
            return Err(format!("need K >= 2 and N >= K, got K={}, N={}", self.users, self.files));
        }
        if let Some(l) = self.slots.iter().find(|&&l| l < 2 || l > self.users) {
            return Err(format!("L={l} outside 2..={}", self.users));
        }
        Ok(())
    }

    /// Union of all corner memories, ascending.
    pub fn memory_grid(&self) -> Vec<Rational> {
        if let Some(g) = &self.grid {
            let mut g = g.clone();
            g.sort();
            g.dedup();
            return g;
        }
        let mut g: Vec<Rational> = corner_points(self.users, self.files).into_iter().map(|c| c.memory).collect();
        for &l in &self.slots {
            g.extend((1..l).map(|t| memory_dec(l, self.files, t)));
        }
        g.sort();
        g.dedup();
        g
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub memory: Rational,
    /// Below the smallest centralized corner.
    pub infeasible: bool,
    pub corner_t: Option<u32>,
    pub centralized: Option<Rational>,
    /// One entry per requested L.
    pub decentralized: Vec<Option<Rational>>,
    pub lower: Rational,
    pub lower_argmax: Option<u32>,
    pub multicast_upper: Rational,
    pub multicast_lower: Rational,
    pub ratio_lower: Option<Rational>,
    pub ratio_multicast: Option<Rational>,
    pub simulated_centralized: Option<Rational>,
    pub simulated_decentralized: Vec<Option<Rational>>,
}

pub fn decentralized_envelope(
    users: u32,
    slots: u32,
    files: u32,
    memory: &Rational,
) -> Result<Rational, EnvelopeError> {
    let pts: Vec<_> = corner_points_dec(users, slots, files)
        .into_iter()
        .map(|c| (c.memory, c.measured))
        .collect();
    envelope(&pts, memory)
}

fn simulate_centralized(users: u32, files: u32, t: u32) -> Option<Rational> {
    let p = SystemParams::new(users, files, t).ok()?;
    let d = centralized::place(&p, 0).ok()?;
    let r = centralized::deliver(&d, &worst_case_demands(users), Tamper::None).ok()?;
    Some(measured_rate(&d.geometry, &r))
}

fn simulate_decentralized(users: u32, slots: u32, files: u32, t: u32) -> Option<Rational> {
    let p = DecentralizedParams::new(users, slots, t, files).ok()?;
    let d = decentralized::place_dec(&p, 0).ok()?;
    let r = decentralized::deliver_dec(&d, &worst_case_demands(users), Tamper::None).ok()?;
    Some(measured_rate(&d.geometry, &r))
}

fn row(spec: &SweepSpec, memory: Rational) -> SweepRow {
    let (k, n) = (spec.users, spec.files);
    let infeasible = memory < minimum_memory(k, n);
    let corner_t = t_from_memory(k, n, &memory);
    let centralized = centralized_envelope(k, n, &memory).ok();
    let decentralized = spec
        .slots
        .iter()
        .map(|&l| decentralized_envelope(k, l, n, &memory).ok())
        .collect();
    let lb = lower_bound(k, n, &memory);
    let mu = multicast_upper(k, n, &memory);
    let ratio_lower = centralized
        .as_ref()
        .filter(|_| lb.value != Rational::from_integer(0.into()))
        .map(|c| c / &lb.value);
    let ratio_multicast = centralized.as_ref().map(|c| c / &mu);
    let simulated_centralized = corner_t
        .filter(|_| spec.simulate)
        .and_then(|t| simulate_centralized(k, n, t));
    let simulated_decentralized = spec
        .slots
        .iter()
        .map(|&l| {
            let t = (1..l).find(|&t| memory_dec(l, n, t) == memory)?;
            spec.simulate.then(|| simulate_decentralized(k, l, n, t)).flatten()
        })
        .collect();
    SweepRow {
        infeasible,
        corner_t,
        centralized,
        decentralized,
        lower: lb.value,
        lower_argmax: lb.argmax,
        multicast_upper: mu,
        multicast_lower: multicast_lower(k, n, &memory),
        ratio_lower,
        ratio_multicast,
        simulated_centralized,
        simulated_decentralized,
        memory,
    }
}

/// One row per memory value, in ascending memory order.
pub fn sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>, String> {
    spec.validate()?;
    Ok(spec.memory_grid().into_par_iter().map(|m| row(spec, m)).collect())
}

fn exact_pair(v: &Option<Rational>) -> [String; 2] {
    match v {
        Some(r) => [render(r), format!("{:.6}", to_f64(r))],
        None => [String::new(), String::new()],
    }
}

pub fn header(spec: &SweepSpec) -> Vec<String> {
    let mut h: Vec<String> = ["M", "M_f64", "infeasible", "corner_t", "centralized", "centralized_f64"]
        .map(String::from)
        .to_vec();
    for l in &spec.slots {
        h.push(format!("decentralized_L{l}"));
        h.push(format!("decentralized_L{l}_f64"));
    }
    for name in [
        "cutset_lower",
        "cutset_lower_f64",
        "cutset_argmax_s",
        "multicast_upper",
        "multicast_upper_f64",
        "multicast_lower",
        "multicast_lower_f64",
        "gap_ratio_lower",
        "gap_ratio_lower_f64",
        "gap_ratio_multicast",
        "gap_ratio_multicast_f64",
        "simulated_centralized",
        "simulated_centralized_f64",
    ] {
        h.push(name.into());
    }
    for l in &spec.slots {
        h.push(format!("simulated_decentralized_L{l}"));
        h.push(format!("simulated_decentralized_L{l}_f64"));
    }
    h
}

pub fn record(r: &SweepRow) -> Vec<String> {
    let mut out = Vec::new();
    out.extend(exact_pair(&Some(r.memory.clone())));
    out.push(r.infeasible.to_string());
    out.push(r.corner_t.map(|t| t.to_string()).unwrap_or_default());
    out.extend(exact_pair(&r.centralized));
    for d in &r.decentralized {
        out.extend(exact_pair(d));
    }
    out.extend(exact_pair(&Some(r.lower.clone())));
    out.push(r.lower_argmax.map(|s| s.to_string()).unwrap_or_default());
    out.extend(exact_pair(&Some(r.multicast_upper.clone())));
    out.extend(exact_pair(&Some(r.multicast_lower.clone())));
    out.extend(exact_pair(&r.ratio_lower));
    out.extend(exact_pair(&r.ratio_multicast));
    out.extend(exact_pair(&r.simulated_centralized));
    for s in &r.simulated_decentralized {
        out.extend(exact_pair(s));
    }
    out
}

pub fn write_csv<W: Write>(spec: &SweepSpec, rows: &[SweepRow], out: W) -> csv::Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(header(spec))?;
    for r in rows {
        w.write_record(record(r))?;
    }
    w.flush()?;
    Ok(())
}
