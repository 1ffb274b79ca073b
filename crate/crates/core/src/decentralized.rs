//! Grouping-based decentralized scheme.
//!
//! Caches are designed for `L` slots; user `k` takes slot `((k-1) mod L) + 1`,
//! so arrivals form groups of `L`. Every full group is served by a coded round
//! over the slots with its own key family. A partial last group of `p` users
//! borrows the group-1 users of slots `p+1..L` as helpers and is served with a
//! dedicated key family.

use std::collections::VecDeque;

use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::gf::{FieldSpec, DEFAULT_BITS};
use crate::model::{
    build_deployment, coded_round, compose, Assignment, Deployment, Geometry, KeyGroup, Label,
    SchemeError, SchemeKind, Subset, Tamper, TransmissionRecord,
};
use crate::ramp::{min_field_bits, RampError};
use crate::rational::{binom, from_big, int, rat, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupLayout {
    pub users: u32,
    pub slots: u32,
    pub groups: u32,
    /// Size of the last group.
    pub p: u32,
}

impl GroupLayout {
    pub fn new(users: u32, slots: u32) -> Result<Self, SchemeError> {
        if slots < 2 {
            return Err(SchemeError::InvalidParams(format!("need L >= 2, got {slots}")));
        }
        if users < slots {
            return Err(SchemeError::InvalidParams(format!("need K >= L, got K={users}, L={slots}")));
        }
        let groups = users.div_ceil(slots);
        Ok(GroupLayout {
            users,
            slots,
            groups,
            p: users - (groups - 1) * slots,
        })
    }

    pub fn slot(&self, user: u32) -> u32 {
        (user - 1) % self.slots + 1
    }

    pub fn group(&self, user: u32) -> u32 {
        (user - 1) / self.slots + 1
    }

    pub fn user_at(&self, group: u32, slot: u32) -> u32 {
        (group - 1) * self.slots + slot
    }

    /// Member of the last stage occupying `slot`: the last-group user for
    /// slots `1..=p`, otherwise the group-1 helper.
    pub fn last_stage_member(&self, slot: u32) -> u32 {
        if slot <= self.p {
            self.user_at(self.groups, slot)
        } else {
            slot
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecentralizedParams {
    pub users: u32,
    pub slots: u32,
    pub t: u32,
    pub files: u32,
    pub blocks: u32,
    pub field: FieldSpec,
}

impl DecentralizedParams {
    pub fn new(users: u32, slots: u32, t: u32, files: u32) -> Result<Self, SchemeError> {
        Self::with_field(users, slots, t, files, 1, FieldSpec::new(DEFAULT_BITS)?)
    }

    pub fn with_field(
        users: u32,
        slots: u32,
        t: u32,
        files: u32,
        blocks: u32,
        field: FieldSpec,
    ) -> Result<Self, SchemeError> {
        GroupLayout::new(users, slots)?;
        if t < 1 || t >= slots {
            return Err(SchemeError::InvalidParams(format!("t={t} outside 1..={}", slots - 1)));
        }
        if files < users {
            return Err(SchemeError::InvalidParams(format!("need N >= K, got N={files}, K={users}")));
        }
        if blocks < 1 {
            return Err(SchemeError::InvalidParams("need at least one block per file".into()));
        }
        let (_, n) = crate::centralized::ramp_sizes(slots, t);
        if n as u64 > field.order() as u64 - 1 {
            return Err(RampError::FieldTooSmall {
                n,
                bits: field.bits,
                min_bits: min_field_bits(n),
            }
            .into());
        }
        Ok(DecentralizedParams { users, slots, t, files, blocks, field })
    }

    pub fn layout(&self) -> GroupLayout {
        GroupLayout::new(self.users, self.slots).expect("validated")
    }

    pub fn geometry(&self) -> Geometry {
        let (m, n) = crate::centralized::ramp_sizes(self.slots, self.t);
        Geometry {
            scheme: SchemeKind::Decentralized,
            users: self.users,
            files: self.files,
            t: self.t,
            universe: self.slots,
            blocks: self.blocks,
            field: self.field,
            ramp_m: m,
            ramp_n: n,
        }
    }
}

/// Normalized memory at a corner: `Nt/(L-t) + 2/t + 1`.
pub fn memory_dec(slots: u32, files: u32, t: u32) -> Rational {
    let (l, n, t) = (slots as i64, files as i64, t as i64);
    rat(n * t, l - t) + rat(2, t) + int(1)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecCorner {
    pub t: u32,
    #[serde(with = "crate::rational::serde_str")]
    pub memory: Rational,
    /// Rate of the schedule actually produced.
    #[serde(with = "crate::rational::serde_str")]
    pub measured: Rational,
    /// Rate from the literal closed-form sum.
    #[serde(with = "crate::rational::serde_str")]
    pub formula: Rational,
}

pub fn corner_points_dec(users: u32, slots: u32, files: u32) -> Vec<DecCorner> {
    (1..slots)
        .map(|t| DecCorner {
            t,
            memory: memory_dec(slots, files, t),
            measured: rate_dec_enumerated(users, slots, t),
            formula: rate_dec_formula(users, slots, t),
        })
        .collect()
}

/// Symbols per file block in units of one share: `(L-t) C(L-1, t-1)`.
fn stage_norm(slots: u32, t: u32) -> Rational {
    from_big(binom(slots as u64 - 1, t as u64 - 1) * (slots - t))
}

/// Number of last-stage signals per block, by direct enumeration of the
/// admissible transmission sets.
pub fn last_stage_signals(slots: u32, p: u32, t: u32) -> u64 {
    let mut total = 0u64;
    for a in 1..=p.min(t + 1) {
        let sets = binom(p as u64, a as u64) * binom((slots - p) as u64, (t + 1 - a) as u64);
        let per = if a == 1 { t } else { t + 1 };
        total += sets.to_u64().expect("small count") * per as u64;
    }
    total
}

/// Measured-rate ground truth for the produced schedule.
pub fn rate_dec_enumerated(users: u32, slots: u32, t: u32) -> Rational {
    let g = GroupLayout::new(users, slots).expect("valid layout");
    let regular = rat(slots as i64, t as i64);
    if g.groups == 1 {
        return regular;
    }
    let last = Rational::from_integer(last_stage_signals(slots, g.p, t).into()) / stage_norm(slots, t);
    regular * int(g.groups as i64 - 1) + last
}

/// Literal last-stage load: `[p t <C(L-p,t)> + sum_{u=2}^{min(p,t)} (t+1) <C(L-p,t-u+1)>] / ((L-t) C(L-1,t-1))`.
pub fn last_stage_formula(slots: u32, p: u32, t: u32) -> Rational {
    let guarded = |h: i64, r: i64| {
        if r < 0 || h < r {
            num_bigint::BigInt::from(0)
        } else {
            binom(h as u64, r as u64)
        }
    };
    let (l, p, t) = (slots as i64, p as i64, t as i64);
    let mut num = guarded(l - p, t) * (p * t);
    for u in 2..=p.min(t) {
        num += guarded(l - p, t - u + 1) * (t + 1);
    }
    from_big(num) / stage_norm(slots, t as u32)
}

/// Total rate with the literal last-stage sum and `L/t` per regular stage.
pub fn rate_dec_formula(users: u32, slots: u32, t: u32) -> Rational {
    let g = GroupLayout::new(users, slots).expect("valid layout");
    let regular = rat(slots as i64, t as i64);
    if g.groups == 1 {
        return regular;
    }
    regular * int(g.groups as i64 - 1) + last_stage_formula(slots, g.p, t)
}

/// The closed-form bound evaluated in floating point, with the
/// regular-stage term written as `2L(N+M-1) / (2 + (M-1)L + sqrt((2-(M-1)L)^2 - 8LN))`.
pub fn closed_form_bound(users: u32, slots: u32, files: u32, t: u32) -> f64 {
    let g = GroupLayout::new(users, slots).expect("valid layout");
    let (l, n) = (slots as f64, files as f64);
    let m = crate::rational::to_f64(&memory_dec(slots, files, t));
    let radicand = (2.0 - (m - 1.0) * l).powi(2) - 8.0 * l * n;
    let per_stage = 2.0 * l * (n + m - 1.0) / (2.0 + (m - 1.0) * l + radicand.max(0.0).sqrt());
    per_stage * (g.groups as f64 - 1.0) + crate::rational::to_f64(&last_stage_formula(slots, g.p, t))
}

fn key_families(layout: &GroupLayout, t: u32) -> Vec<(KeyGroup, Subset, u32)> {
    let sets = Subset::all(layout.slots, t as usize + 1);
    let mut groups: Vec<KeyGroup> = (1..layout.groups.max(2)).map(KeyGroup::Group).collect();
    groups.push(KeyGroup::Last);
    groups
        .into_iter()
        .flat_map(|g| {
            sets.iter()
                .flat_map(move |s| (1..=t + 1).map(move |i| (g, s.clone(), i)))
        })
        .collect()
}

fn key_allocation(layout: &GroupLayout, t: u32, user: u32) -> Vec<(KeyGroup, Subset, u32)> {
    let slot = layout.slot(user);
    let group = layout.group(user);
    let sets: Vec<Subset> = Subset::all(layout.slots, t as usize + 1)
        .into_iter()
        .filter(|s| s.contains(slot))
        .collect();
    let full = |g: KeyGroup| -> Vec<(KeyGroup, Subset, u32)> {
        sets.iter()
            .flat_map(|s| (1..=t + 1).map(move |i| (g, s.clone(), i)))
            .collect()
    };
    if group == 1 {
        let mut keys = full(KeyGroup::Group(1));
        keys.extend(
            sets.iter()
                .map(|s| (KeyGroup::Last, s.clone(), s.rank_of(slot).unwrap())),
        );
        keys
    } else if group < layout.groups {
        full(KeyGroup::Group(group))
    } else {
        full(KeyGroup::Last)
    }
}

pub fn place_dec(params: &DecentralizedParams, seed: u64) -> Result<Deployment, SchemeError> {
    let devices: Vec<u32> = (1..=params.users).collect();
    place_dec_with_devices(params, &devices, seed)
}

/// Placement where position `k` is occupied by `devices[k-1]`.
pub fn place_dec_with_devices(params: &DecentralizedParams, devices: &[u32], seed: u64) -> Result<Deployment, SchemeError> {
    if devices.len() != params.users as usize {
        return Err(SchemeError::InvalidParams(format!(
            "{} devices for {} positions",
            devices.len(),
            params.users
        )));
    }
    let layout = params.layout();
    let families = key_families(&layout, params.t);
    let assignments = (1..=params.users)
        .map(|k| Assignment {
            user: k,
            device: devices[k as usize - 1],
            slot: layout.slot(k),
            group: layout.group(k),
            keys: key_allocation(&layout, params.t, k),
        })
        .collect();
    build_deployment(params.geometry(), &families, assignments, seed)
}

pub fn deliver_dec(deployment: &Deployment, demands: &[u32], tamper: Tamper) -> Result<Vec<TransmissionRecord>, SchemeError> {
    let g = &deployment.geometry;
    g.validate_demands(demands)?;
    let layout = GroupLayout::new(g.users, g.universe)?;
    let t = g.t;
    let sets = Subset::all(layout.slots, t as usize + 1);
    let mut out = Vec::new();

    if layout.groups == 1 {
        return coded_round(deployment, 1, &sets, &|l| l, demands, Some(KeyGroup::Group(1)), tamper);
    }
    for u in 1..layout.groups {
        let member = move |l: u32| layout.user_at(u, l);
        out.extend(coded_round(deployment, u, &sets, &member, demands, Some(KeyGroup::Group(u)), tamper)?);
    }

    let stage = layout.groups;
    let last_slots = Subset::new((1..=layout.p).collect());
    for set in sets.iter().filter(|s| !s.intersect(&last_slots).is_empty()) {
        let served = set.intersect(&last_slots);
        let senders: Vec<u32> = if served.len() == 1 {
            set.without(served.members()[0]).members().to_vec()
        } else {
            set.members().to_vec()
        };
        for &l in &senders {
            let sender = layout.last_stage_member(l);
            let cache = deployment.cache(sender).expect("member exists");
            for block in 0..g.blocks {
                let mut comp = Vec::new();
                for &v in served.members().iter().filter(|&&v| v != l) {
                    let alloc = set.without(v);
                    let j = alloc.rank_of(l).expect("l in S minus v");
                    comp.push(Label::share(demands[layout.last_stage_member(v) as usize - 1], alloc, j, block));
                }
                if tamper == Tamper::None {
                    comp.push(Label::key(KeyGroup::Last, set.clone(), set.rank_of(l).unwrap(), block));
                }
                out.push(compose(cache, stage, set.clone(), block, comp)?);
            }
        }
    }
    Ok(out)
}

/// Measured load of each stage, in stage order.
pub fn stage_rates(geometry: &Geometry, records: &[TransmissionRecord]) -> Vec<(u32, Rational)> {
    let mut counts: std::collections::BTreeMap<u32, i64> = std::collections::BTreeMap::new();
    for r in records {
        *counts.entry(r.stage).or_default() += 1;
    }
    counts
        .into_iter()
        .map(|(s, c)| (s, rat(c, geometry.symbols_per_file() as i64)))
        .collect()
}

pub fn rate_dec_measured(geometry: &Geometry, records: &[TransmissionRecord]) -> Rational {
    crate::centralized::measured_rate(geometry, records)
}

/// Arrival/departure bookkeeping while placement is open.
///
/// Positions are join-order indices; a cache is a function of its position,
/// so handing a cache to another device means moving that device into the
/// vacated position.
#[derive(Debug, Clone)]
pub struct PlacementSession {
    slots: u32,
    t: u32,
    files: u32,
    blocks: u32,
    field: FieldSpec,
    positions: Vec<Option<u32>>,
    vacancies: VecDeque<usize>,
    next_device: u32,
    closed: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Arrival {
    pub device: u32,
    pub position: u32,
    /// True when the position was vacated by an earlier departure.
    pub inherited: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Reassignment {
    pub position: u32,
    /// Device that now holds the departed cache, if any.
    pub device: Option<u32>,
}

impl PlacementSession {
    pub fn new(slots: u32, t: u32, files: u32, blocks: u32, field: FieldSpec) -> Self {
        PlacementSession {
            slots,
            t,
            files,
            blocks,
            field,
            positions: Vec::new(),
            vacancies: VecDeque::new(),
            next_device: 1,
            closed: false,
        }
    }

    fn open(&self) -> Result<(), SchemeError> {
        if self.closed {
            Err(SchemeError::UnsupportedPhase)
        } else {
            Ok(())
        }
    }

    pub fn join(&mut self) -> Result<Arrival, SchemeError> {
        self.open()?;
        let device = self.next_device;
        self.next_device += 1;
        if let Some(pos) = self.vacancies.pop_front() {
            self.positions[pos] = Some(device);
            return Ok(Arrival { device, position: pos as u32 + 1, inherited: true });
        }
        self.positions.push(Some(device));
        Ok(Arrival { device, position: self.positions.len() as u32, inherited: false })
    }

    pub fn depart(&mut self, device: u32) -> Result<u32, SchemeError> {
        self.open()?;
        let pos = self
            .positions
            .iter()
            .position(|d| *d == Some(device))
            .ok_or(SchemeError::UnknownDevice(device))?;
        self.positions[pos] = None;
        self.vacancies.push_back(pos);
        Ok(pos as u32 + 1)
    }

    /// Move the most recent joiner into each vacated position.
    pub fn fill_vacancies(&mut self) -> Result<Vec<Reassignment>, SchemeError> {
        self.open()?;
        let mut moves = Vec::new();
        loop {
            while matches!(self.positions.last(), Some(None)) {
                let last = self.positions.len() - 1;
                self.positions.pop();
                self.vacancies.retain(|&v| v != last);
            }
            let Some(pos) = self.vacancies.pop_front() else { break };
            let mover = self.positions.pop().flatten().expect("trailing vacancies were trimmed");
            self.positions[pos] = Some(mover);
            moves.push(Reassignment { position: pos as u32 + 1, device: Some(mover) });
        }
        Ok(moves)
    }

    /// Departure followed either by a fresh arrival or by the last joiner
    /// taking over the departed cache.
    pub fn reassign_on_departure(&mut self, departing: u32, arrival: bool) -> Result<Reassignment, SchemeError> {
        let position = self.depart(departing)?;
        if arrival {
            let a = self.join()?;
            debug_assert_eq!(a.position, position);
            return Ok(Reassignment { position, device: Some(a.device) });
        }
        let moves = self.fill_vacancies()?;
        Ok(moves.into_iter().next().unwrap_or(Reassignment { position, device: None }))
    }

    pub fn close(&mut self) -> Result<(), SchemeError> {
        self.fill_vacancies()?;
        self.closed = true;
        Ok(())
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    /// Devices in position order.
    pub fn roster(&self) -> Vec<u32> {
        self.positions.iter().flatten().copied().collect()
    }

    pub fn params(&self) -> Result<DecentralizedParams, SchemeError> {
        DecentralizedParams::with_field(
            self.roster().len() as u32,
            self.slots,
            self.t,
            self.files,
            self.blocks,
            self.field,
        )
    }

    /// Caches for the current roster; every vacancy must be resolved.
    pub fn place(&self, seed: u64) -> Result<Deployment, SchemeError> {
        if !self.vacancies.is_empty() {
            return Err(SchemeError::InvalidParams("unresolved vacancies".into()));
        }
        place_dec_with_devices(&self.params()?, &self.roster(), seed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decode::decode_all;
    use crate::model::worst_case_demands;
    use std::collections::BTreeSet;

    fn gf16() -> FieldSpec {
        FieldSpec::new(16).unwrap()
    }

    #[test]
    fn group_layout() {
        let g = GroupLayout::new(13, 5).unwrap();
        assert_eq!((g.groups, g.p), (3, 3));
        assert_eq!(g.slot(11), 1);
        assert_eq!(g.group(11), 3);
        assert_eq!(g.last_stage_member(2), 12);
        assert_eq!(g.last_stage_member(4), 4);
        let g = GroupLayout::new(8, 4).unwrap();
        assert_eq!((g.groups, g.p), (2, 4));
        assert!(GroupLayout::new(3, 4).is_err());
    }

    #[test]
    fn corner_memory() {
        assert_eq!(memory_dec(4, 4, 2), int(6));
        assert_eq!(memory_dec(2, 4, 1), int(7));
        for t in 1..4 {
            assert_eq!(
                memory_dec(4, 4, t) - crate::centralized::memory_at(4, 4, t),
                rat(1, t as i64)
            );
        }
    }

    #[test]
    fn rates_against_enumeration() {
        assert_eq!(last_stage_signals(4, 2, 2), 10);
        assert_eq!(rate_dec_enumerated(6, 4, 2), int(2) + rat(5, 3));
        assert_eq!(rate_dec_formula(6, 4, 2), int(2) + rat(5, 3));
        assert_eq!(last_stage_signals(5, 3, 2), 27);
        assert_eq!(rate_dec_enumerated(13, 5, 2), rat(5, 1) + rat(27, 12));
        assert_eq!(last_stage_formula(5, 3, 2), int(1));
        assert_eq!(rate_dec_enumerated(8, 4, 2), int(4));
        assert_eq!(rate_dec_enumerated(4, 4, 3), rat(4, 3));
    }

    #[test]
    fn closed_form_regular_term() {
        // the regular-stage term reduces to L/t except at t = 1
        for l in 3..=8u32 {
            for t in 2..l {
                let single = closed_form_bound(2 * l, l, 2 * l, t) - crate::rational::to_f64(&last_stage_formula(l, l, t));
                assert!((single - l as f64 / t as f64).abs() < 1e-9, "L={l} t={t}");
            }
        }
        let r = closed_form_bound(8, 4, 4, 1) - crate::rational::to_f64(&last_stage_formula(4, 4, 1));
        assert!((r - 11.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn slot_sharing_users_hold_identical_shares() {
        let p = DecentralizedParams::with_field(8, 4, 2, 8, 1, gf16()).unwrap();
        let d = place_dec(&p, 0).unwrap();
        for k in 1..=4 {
            let a: BTreeSet<_> = d.cache(k).unwrap().shares().cloned().collect();
            let b: BTreeSet<_> = d.cache(k + 4).unwrap().shares().cloned().collect();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn key_counts_and_memory() {
        let p = DecentralizedParams::with_field(13, 5, 2, 13, 1, gf16()).unwrap();
        let d = place_dec(&p, 0).unwrap();
        let g = &d.geometry;
        let m = memory_dec(5, 13, 2);
        for c in &d.caches {
            let mem = crate::centralized::measured_memory(g, c);
            if c.group == 1 {
                assert_eq!(c.key_count(), 4 * 6);
                assert_eq!(mem, m);
            } else {
                assert!(mem <= m);
            }
            if c.user >= 11 {
                assert!(c.items.keys().all(|l| match l {
                    Label::Key(k) => k.group == KeyGroup::Last,
                    _ => true,
                }));
                assert_eq!(c.key_count(), 3 * 6);
            }
        }
    }

    #[test]
    fn k13_schedule_and_decode() {
        let p = DecentralizedParams::with_field(13, 5, 2, 13, 1, gf16()).unwrap();
        let d = place_dec(&p, 1).unwrap();
        let dem = worst_case_demands(13);
        let recs = deliver_dec(&d, &dem, Tamper::None).unwrap();
        let stages = stage_rates(&d.geometry, &recs);
        assert_eq!(stages, vec![(1, rat(5, 2)), (2, rat(5, 2)), (3, rat(27, 12))]);
        assert_eq!(rate_dec_measured(&d.geometry, &recs), rate_dec_enumerated(13, 5, 2));
        assert!(decode_all(&d, &recs, &dem).unwrap().iter().all(|e| e.bit_exact));
        let mut seen = BTreeSet::new();
        for r in &recs {
            for l in r.composition.iter().filter(|l| matches!(l, Label::Key(_))) {
                assert!(seen.insert(l.clone()), "key reused: {l}");
            }
        }
    }

    #[test]
    fn various_layouts_decode() {
        for (k, l, t) in [(6, 4, 2), (8, 4, 2), (4, 4, 1), (13, 5, 1), (13, 5, 3), (7, 3, 1), (9, 4, 3)] {
            let p = DecentralizedParams::with_field(k, l, t, k, 1, gf16()).unwrap();
            let d = place_dec(&p, 5).unwrap();
            let dem = worst_case_demands(k);
            let recs = deliver_dec(&d, &dem, Tamper::None).unwrap();
            assert_eq!(rate_dec_measured(&d.geometry, &recs), rate_dec_enumerated(k, l, t), "K={k} L={l} t={t}");
            for e in decode_all(&d, &recs, &dem).unwrap() {
                assert!(e.bit_exact, "K={k} L={l} t={t}: {e:?}");
            }
        }
    }

    #[test]
    fn single_group_matches_centralized_schedule() {
        let p = DecentralizedParams::with_field(4, 4, 2, 4, 1, gf16()).unwrap();
        let d = place_dec(&p, 0).unwrap();
        let dem = worst_case_demands(4);
        let dec: Vec<_> = deliver_dec(&d, &dem, Tamper::None)
            .unwrap()
            .into_iter()
            .map(|r| (r.sender, r.set))
            .collect();
        let c = crate::centralized::place(&crate::centralized::SystemParams::new(4, 4, 2).unwrap(), 0).unwrap();
        let cen: Vec<_> = crate::centralized::deliver(&c, &dem, Tamper::None)
            .unwrap()
            .into_iter()
            .map(|r| (r.sender, r.set))
            .collect();
        assert_eq!(dec, cen);
    }

    #[test]
    fn session_transfers_cache_to_next_arrival() {
        let mut s = PlacementSession::new(4, 2, 8, 1, gf16());
        for _ in 0..8 {
            s.join().unwrap();
        }
        let before = s.place(3).unwrap();
        assert_eq!(s.depart(3).unwrap(), 3);
        let a = s.join().unwrap();
        assert_eq!(a, Arrival { device: 9, position: 3, inherited: true });
        s.close().unwrap();
        let after = s.place(3).unwrap();
        let old = &before.caches[2];
        let new = &after.caches[after.user_of_device(9).unwrap() as usize - 1];
        assert_eq!(old.items, new.items);
        assert!(matches!(s.depart(1), Err(SchemeError::UnsupportedPhase)));
        assert!(matches!(s.join(), Err(SchemeError::UnsupportedPhase)));
    }

    #[test]
    fn session_moves_last_joiner_without_arrival() {
        let mut s = PlacementSession::new(4, 2, 8, 1, gf16());
        for _ in 0..8 {
            s.join().unwrap();
        }
        let r = s.reassign_on_departure(3, false).unwrap();
        assert_eq!(r, Reassignment { position: 3, device: Some(8) });
        assert_eq!(s.roster(), vec![1, 2, 8, 4, 5, 6, 7]);
        s.close().unwrap();
        let d = s.place(1).unwrap();
        assert_eq!(d.user_of_device(8), Some(3));
        let dem = worst_case_demands(7);
        let recs = deliver_dec(&d, &dem, Tamper::None).unwrap();
        assert!(decode_all(&d, &recs, &dem).unwrap().iter().all(|e| e.bit_exact));
        let full = place_dec(&DecentralizedParams::with_field(7, 4, 2, 8, 1, gf16()).unwrap(), 1).unwrap();
        assert_eq!(full.caches[2].items, d.caches[2].items);
    }

    #[test]
    fn session_departure_of_last_joiner_just_shrinks() {
        let mut s = PlacementSession::new(4, 1, 8, 1, gf16());
        for _ in 0..6 {
            s.join().unwrap();
        }
        let r = s.reassign_on_departure(6, false).unwrap();
        assert_eq!(r, Reassignment { position: 6, device: None });
        assert_eq!(s.roster(), vec![1, 2, 3, 4, 5]);
        assert!(matches!(s.depart(42), Err(SchemeError::UnknownDevice(42))));
    }
}
