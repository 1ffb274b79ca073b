//! Brute-force secrecy check by exact enumeration of view distributions.
//!
//! For several fixed values of the protected files, the distribution of the
//! observed symbols (over uniform randomness and uniform free files) is
//! computed exactly and compared. Independent of the rank machinery.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gf::Symbol;
use crate::model::{Deployment, Geometry, KeyLabel, Label, SchemeError, TransmissionRecord};
use crate::ramp::RampScheme;
use crate::rational::gcd_u128;

use super::{observer_rows, AuditError, Observer};

pub const DEFAULT_BUDGET: u64 = 1 << 24;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("instance needs about {needed} evaluations per realization, budget is {budget}")]
    InstanceTooLarge { needed: u64, budget: u64 },
    #[error("label {0} does not exist in this system")]
    UnknownLabel(String),
    #[error("probability mass overflowed 128 bits")]
    Overflow,
    #[error(transparent)]
    Audit(#[from] AuditError),
    #[error(transparent)]
    Scheme(#[from] SchemeError),
}

#[derive(Debug, Clone, Copy)]
pub struct OracleConfig {
    pub budget: u64,
    pub realizations: usize,
    pub seed: u64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            budget: DEFAULT_BUDGET,
            realizations: 16,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleVerdict {
    pub pass: bool,
    pub realizations: usize,
    pub components: usize,
    pub protected_components: usize,
    pub evaluations: u64,
    /// Index of the first realization whose distribution differs from the first.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub first_difference: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
enum Family {
    Share { file: u32, block: u32 },
    Key(KeyLabel),
}

/// Support of a joint distribution with integer weights.
type Dist = Vec<(Vec<Symbol>, u128)>;

struct Component {
    families: Vec<usize>,
    /// Per row: (index into `families`, atom position within that family).
    rows: Vec<Vec<(usize, usize)>>,
}

/// Calls `f` on every vector in `F_q^len`.
fn for_each_vector(len: usize, q: u32, mut f: impl FnMut(&[Symbol])) {
    let mut v = vec![0 as Symbol; len];
    loop {
        f(&v);
        let mut i = 0;
        loop {
            if i == len {
                return;
            }
            if (v[i] as u32) + 1 < q {
                v[i] += 1;
                break;
            }
            v[i] = 0;
            i += 1;
        }
    }
}

fn sat_pow(q: u32, e: usize) -> u64 {
    (q as u64).checked_pow(e as u32).unwrap_or(u64::MAX)
}

fn normalize(map: HashMap<Vec<Symbol>, u128>) -> Dist {
    let g = map.values().fold(0u128, |g, &c| gcd_u128(g, c)).max(1);
    let mut d: Dist = map.into_iter().map(|(k, c)| (k, c / g)).collect();
    d.sort_unstable();
    d
}

/// Remove atoms that appear alone in some row from every other row, repeat,
/// then drop empty and duplicate rows.
fn peel(rows: &[Vec<Label>]) -> Vec<BTreeSet<Label>> {
    let mut sets: Vec<BTreeSet<Label>> = rows
        .iter()
        .map(|r| {
            let mut s = BTreeSet::new();
            for l in r {
                if !s.remove(l) {
                    s.insert(l.clone());
                }
            }
            s
        })
        .collect();
    loop {
        let singles: BTreeSet<Label> = sets
            .iter()
            .filter(|s| s.len() == 1)
            .flat_map(|s| s.iter().cloned())
            .collect();
        let mut changed = false;
        for s in sets.iter_mut().filter(|s| s.len() > 1) {
            let before = s.len();
            s.retain(|l| !singles.contains(l));
            changed |= s.len() != before;
        }
        if !changed {
            break;
        }
    }
    let unique: BTreeSet<BTreeSet<Label>> = sets.into_iter().filter(|s| !s.is_empty()).collect();
    unique.into_iter().collect()
}

struct Prepared {
    ramp: RampScheme,
    q: u32,
    families: Vec<Family>,
    /// Share indices (or a single 0 for keys) visible per family.
    atoms: Vec<Vec<usize>>,
    components: Vec<Component>,
}

fn prepare(geometry: &Geometry, rows: &[Vec<Label>]) -> Result<Prepared, OracleError> {
    let field = geometry.field().map_err(SchemeError::from)?;
    let ramp = RampScheme::new(geometry.ramp_m, geometry.ramp_n, &field).map_err(SchemeError::from)?;
    let layout = geometry.layout();
    let peeled = peel(rows);

    let mut family_ids: BTreeMap<Family, usize> = BTreeMap::new();
    let mut families = Vec::new();
    let mut atom_sets: Vec<BTreeSet<usize>> = Vec::new();
    let mut resolved: Vec<Vec<(usize, usize)>> = Vec::new();
    for row in &peeled {
        let mut out = Vec::new();
        for l in row {
            let (fam, atom) = match l {
                Label::Share(s) => {
                    let idx = layout
                        .share_index(&s.set, s.replica)
                        .filter(|_| s.file >= 1 && s.file <= geometry.files && s.block < geometry.blocks)
                        .ok_or_else(|| OracleError::UnknownLabel(l.to_string()))?;
                    (Family::Share { file: s.file, block: s.block }, idx)
                }
                Label::Key(k) => (Family::Key(k.clone()), 0),
            };
            let id = *family_ids.entry(fam.clone()).or_insert_with(|| {
                families.push(fam);
                atom_sets.push(BTreeSet::new());
                families.len() - 1
            });
            atom_sets[id].insert(atom);
            out.push((id, atom));
        }
        resolved.push(out);
    }
    let atoms: Vec<Vec<usize>> = atom_sets.into_iter().map(|s| s.into_iter().collect()).collect();

    let mut parent: Vec<usize> = (0..families.len()).collect();
    fn find(p: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while p[r] != r {
            r = p[r];
        }
        let mut y = x;
        while p[y] != r {
            let n = p[y];
            p[y] = r;
            y = n;
        }
        r
    }
    for row in &resolved {
        for w in row.windows(2) {
            let (a, b) = (find(&mut parent, w[0].0), find(&mut parent, w[1].0));
            parent[a] = b;
        }
    }
    let mut by_root: BTreeMap<usize, Component> = BTreeMap::new();
    for f in 0..families.len() {
        let r = find(&mut parent, f);
        by_root
            .entry(r)
            .or_insert_with(|| Component { families: Vec::new(), rows: Vec::new() })
            .families
            .push(f);
    }
    for row in resolved {
        let r = find(&mut parent, row[0].0);
        let comp = by_root.get_mut(&r).expect("root exists");
        let local = row
            .into_iter()
            .map(|(f, a)| {
                let lf = comp.families.iter().position(|&x| x == f).expect("family in component");
                let pos = atoms[f].binary_search(&a).expect("atom registered");
                (lf, pos)
            })
            .collect();
        comp.rows.push(local);
    }
    Ok(Prepared {
        ramp,
        q: field.order(),
        families,
        atoms,
        components: by_root.into_values().collect(),
    })
}

impl Prepared {
    fn is_protected(&self, f: usize, protected: &BTreeSet<u32>) -> bool {
        matches!(self.families[f], Family::Share { file, .. } if protected.contains(&file))
    }

    fn family_cost(&self, f: usize, protected: &BTreeSet<u32>) -> u64 {
        match self.families[f] {
            Family::Key(_) => self.q as u64,
            Family::Share { .. } if self.is_protected(f, protected) => sat_pow(self.q, self.ramp.m()),
            Family::Share { .. } => sat_pow(self.q, self.ramp.n()),
        }
    }

    fn component_cost(&self, c: &Component, protected: &BTreeSet<u32>) -> u64 {
        let own: u64 = c
            .families
            .iter()
            .fold(0u64, |acc, &f| acc.saturating_add(self.family_cost(f, protected)));
        let joint = c.families.iter().fold(1u64, |acc, &f| {
            let support = self.family_cost(f, protected).min(sat_pow(self.q, self.atoms[f].len()));
            acc.saturating_mul(support)
        });
        own.saturating_add(joint)
    }

    fn family_dist(&self, f: usize, secret: Option<&[Symbol]>) -> Dist {
        let atoms = &self.atoms[f];
        let mut map: HashMap<Vec<Symbol>, u128> = HashMap::new();
        match (&self.families[f], secret) {
            (Family::Key(_), _) => {
                for v in 0..self.q {
                    map.insert(vec![v as Symbol], 1);
                }
            }
            (Family::Share { .. }, Some(s)) => {
                for_each_vector(self.ramp.m(), self.q, |r| {
                    let shares = self.ramp.share_block(s, r).expect("arity checked");
                    *map.entry(atoms.iter().map(|&i| shares[i]).collect()).or_default() += 1;
                });
            }
            (Family::Share { .. }, None) => {
                let m = self.ramp.m();
                for_each_vector(self.ramp.n(), self.q, |c| {
                    let shares = self.ramp.share_block(&c[m..], &c[..m]).expect("arity checked");
                    *map.entry(atoms.iter().map(|&i| shares[i]).collect()).or_default() += 1;
                });
            }
        }
        normalize(map)
    }

    fn component_dist(&self, c: &Component, dists: &[&Dist]) -> Result<Dist, OracleError> {
        let mut map: HashMap<Vec<Symbol>, u128> = HashMap::new();
        let mut idx = vec![0usize; dists.len()];
        loop {
            let mut weight = 1u128;
            for (d, &i) in dists.iter().zip(&idx) {
                weight = weight.checked_mul(d[i].1).ok_or(OracleError::Overflow)?;
            }
            let key: Vec<Symbol> = c
                .rows
                .iter()
                .map(|row| row.iter().fold(0, |acc, &(f, a)| acc ^ dists[f][idx[f]].0[a]))
                .collect();
            let e = map.entry(key).or_default();
            *e = e.checked_add(weight).ok_or(OracleError::Overflow)?;
            let mut k = 0;
            loop {
                if k == idx.len() {
                    return Ok(normalize(map));
                }
                idx[k] += 1;
                if idx[k] < dists[k].len() {
                    break;
                }
                idx[k] = 0;
                k += 1;
            }
        }
    }
}

/// Checks that the observed rows are independent of the `protected` files.
pub fn exhaustive_secrecy(
    geometry: &Geometry,
    rows: &[Vec<Label>],
    protected: &BTreeSet<u32>,
    config: &OracleConfig,
) -> Result<OracleVerdict, OracleError> {
    let p = prepare(geometry, rows)?;
    let needed = p
        .components
        .iter()
        .fold(0u64, |acc, c| acc.saturating_add(p.component_cost(c, protected)));
    if needed > config.budget {
        return Err(OracleError::InstanceTooLarge { needed, budget: config.budget });
    }

    let secret_len = p.ramp.secret_len();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let protected_families: Vec<usize> = (0..p.families.len()).filter(|&f| p.is_protected(f, protected)).collect();
    let fixed: Vec<Dist> = (0..p.families.len())
        .map(|f| if p.is_protected(f, protected) { Vec::new() } else { p.family_dist(f, None) })
        .collect();
    let touched: Vec<bool> = p
        .components
        .iter()
        .map(|c| c.families.iter().any(|&f| p.is_protected(f, protected)))
        .collect();

    let realizations = config.realizations.max(1);
    let mut baseline: Vec<Option<Dist>> = vec![None; p.components.len()];
    let mut first_difference = None;
    for r in 0..realizations {
        let mut dists = fixed.clone();
        for &f in &protected_families {
            let secret: Vec<Symbol> = if r == 0 {
                vec![0; secret_len]
            } else {
                (0..secret_len).map(|_| rng.gen_range(0..p.q) as Symbol).collect()
            };
            dists[f] = p.family_dist(f, Some(&secret));
        }
        for (ci, c) in p.components.iter().enumerate() {
            if r > 0 && !touched[ci] {
                continue;
            }
            let parts: Vec<&Dist> = c.families.iter().map(|&f| &dists[f]).collect();
            let d = p.component_dist(c, &parts)?;
            match &baseline[ci] {
                None => baseline[ci] = Some(d),
                Some(b) if *b != d => {
                    first_difference = Some(r);
                    break;
                }
                Some(_) => {}
            }
        }
        if first_difference.is_some() {
            break;
        }
    }
    Ok(OracleVerdict {
        pass: first_difference.is_none(),
        realizations,
        components: p.components.len(),
        protected_components: touched.iter().filter(|&&t| t).count(),
        evaluations: needed,
        first_difference,
    })
}

/// Oracle counterpart of the caching check (protects every file but the
/// demand) or the delivery check (protects every file).
pub fn oracle_for_observer(
    deployment: &Deployment,
    records: &[TransmissionRecord],
    observer: Observer,
    demand: Option<u32>,
    config: &OracleConfig,
) -> Result<OracleVerdict, OracleError> {
    let rows: Vec<Vec<Label>> = observer_rows(deployment, records, observer)?
        .into_iter()
        .map(|r| r.composition)
        .collect();
    let protected: BTreeSet<u32> = (1..=deployment.geometry.files)
        .filter(|&f| Some(f) != demand)
        .collect();
    exhaustive_secrecy(&deployment.geometry, &rows, &protected, config)
}
