//! Labels, cache contents, transmission records and the placement artefact
//! shared by every scheme.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use itertools::Itertools;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::gf::{Field, FieldError, FieldSpec, Symbol};
use crate::ramp::{RampError, RampScheme};

#[derive(Debug, Error)]
pub enum SchemeError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Ramp(#[from] RampError),
    #[error("demand vector has {got} entries, expected {expected}")]
    DemandLength { expected: usize, got: usize },
    #[error("user {user} demands file {file}, outside 1..={files}")]
    DemandOutOfRange { user: u32, file: u32, files: u32 },
    #[error("user {sender} cannot compose a signal: {label} is not in its cache")]
    SenderInfeasible { sender: u32, label: Label },
    #[error("operation not supported after placement has closed")]
    UnsupportedPhase,
    #[error("unknown device {0}")]
    UnknownDevice(u32),
}

/// A sorted set of 1-based user or slot indices.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Subset(Vec<u32>);

impl Subset {
    pub fn new(mut members: Vec<u32>) -> Self {
        members.sort_unstable();
        members.dedup();
        Subset(members)
    }

    pub fn members(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, x: u32) -> bool {
        self.0.binary_search(&x).is_ok()
    }

    /// 1-based position of `x` in ascending order.
    pub fn rank_of(&self, x: u32) -> Option<u32> {
        self.0.binary_search(&x).ok().map(|p| p as u32 + 1)
    }

    pub fn without(&self, x: u32) -> Subset {
        Subset(self.0.iter().copied().filter(|&v| v != x).collect())
    }

    pub fn with(&self, x: u32) -> Subset {
        let mut v = self.0.clone();
        v.push(x);
        Subset::new(v)
    }

    pub fn intersect(&self, other: &Subset) -> Subset {
        Subset(self.0.iter().copied().filter(|&v| other.contains(v)).collect())
    }

    /// All `size`-subsets of `{1..=universe}` in lexicographic order.
    pub fn all(universe: u32, size: usize) -> Vec<Subset> {
        (1..=universe).combinations(size).map(Subset).collect()
    }
}

impl fmt::Display for Subset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.iter().all(|&v| v < 10) {
            for v in &self.0 {
                write!(f, "{v}")?;
            }
            Ok(())
        } else {
            write!(f, "{{{}}}", self.0.iter().join(","))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KeyGroup {
    Centralized,
    Group(u32),
    Last,
}

impl fmt::Display for KeyGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KeyGroup::Centralized => Ok(()),
            KeyGroup::Group(u) => write!(f, "{u},"),
            KeyGroup::Last => write!(f, "*,"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ShareLabel {
    pub file: u32,
    pub set: Subset,
    pub replica: u32,
    pub block: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct KeyLabel {
    pub group: KeyGroup,
    pub set: Subset,
    pub index: u32,
    pub block: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Label {
    Share(ShareLabel),
    Key(KeyLabel),
}

impl Label {
    pub fn share(file: u32, set: Subset, replica: u32, block: u32) -> Label {
        Label::Share(ShareLabel { file, set, replica, block })
    }

    pub fn key(group: KeyGroup, set: Subset, index: u32, block: u32) -> Label {
        Label::Key(KeyLabel { group, set, index, block })
    }

    pub fn block(&self) -> u32 {
        match self {
            Label::Share(s) => s.block,
            Label::Key(k) => k.block,
        }
    }

    pub fn as_share(&self) -> Option<&ShareLabel> {
        match self {
            Label::Share(s) => Some(s),
            Label::Key(_) => None,
        }
    }
}

/// Compact notation: `S^j_{n,T}#b` and `K^i_{g,T}#b`.
impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Share(s) => write!(f, "S^{}_{{{},{}}}#{}", s.replica, s.file, s.set, s.block),
            Label::Key(k) => k.fmt(f),
        }
    }
}

impl fmt::Display for KeyLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "K^{}_{{{}{}}}#{}", self.index, self.group, self.set, self.block)
    }
}

pub mod symbol_hex {
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    use crate::gf::Symbol;

    pub fn encode(v: Symbol) -> String {
        hex::encode(v.to_be_bytes())
    }

    pub fn decode(s: &str) -> Result<Symbol, String> {
        let bytes = hex::decode(s).map_err(|e| e.to_string())?;
        let arr: [u8; 2] = bytes
            .try_into()
            .map_err(|_| format!("symbol hex {s:?} is not two bytes"))?;
        Ok(Symbol::from_be_bytes(arr))
    }

    pub fn serialize<S: Serializer>(v: &Symbol, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&encode(*v))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Symbol, D::Error> {
        let s = String::deserialize(d)?;
        decode(&s).map_err(D::Error::custom)
    }
}

pub use symbol_hex::{decode as decode_symbol, encode as encode_symbol};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheItem {
    pub label: Label,
    #[serde(with = "symbol_hex")]
    pub payload: Symbol,
}

/// Everything one user stores after placement.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "CacheListing", from = "CacheListing")]
pub struct CacheContent {
    /// Position in join order (the user index of the schemes).
    pub user: u32,
    /// Identity of the device occupying that position.
    pub device: u32,
    pub slot: u32,
    pub group: u32,
    pub items: BTreeMap<Label, Symbol>,
}

#[derive(Serialize, Deserialize)]
struct CacheListing {
    user: u32,
    device: u32,
    slot: u32,
    group: u32,
    items: Vec<CacheItem>,
}

impl From<CacheContent> for CacheListing {
    fn from(c: CacheContent) -> Self {
        CacheListing {
            user: c.user,
            device: c.device,
            slot: c.slot,
            group: c.group,
            items: c
                .items
                .into_iter()
                .map(|(label, payload)| CacheItem { label, payload })
                .collect(),
        }
    }
}

impl From<CacheListing> for CacheContent {
    fn from(c: CacheListing) -> Self {
        CacheContent {
            user: c.user,
            device: c.device,
            slot: c.slot,
            group: c.group,
            items: c.items.into_iter().map(|i| (i.label, i.payload)).collect(),
        }
    }
}

impl CacheContent {
    pub fn share_count(&self) -> usize {
        self.items.keys().filter(|l| matches!(l, Label::Share(_))).count()
    }

    pub fn key_count(&self) -> usize {
        self.items.len() - self.share_count()
    }

    pub fn symbol_count(&self) -> usize {
        self.items.len()
    }

    pub fn shares(&self) -> impl Iterator<Item = &ShareLabel> {
        self.items.keys().filter_map(Label::as_share)
    }
}

/// One multicast signal: the XOR of the labelled components.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransmissionRecord {
    pub stage: u32,
    pub sender: u32,
    pub set: Subset,
    pub block: u32,
    pub composition: Vec<Label>,
    #[serde(with = "symbol_hex")]
    pub payload: Symbol,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SchemeKind {
    #[default]
    Centralized,
    Keyless,
    Decentralized,
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SchemeKind::Centralized => "centralized",
            SchemeKind::Keyless => "keyless",
            SchemeKind::Decentralized => "decentralized",
        })
    }
}

impl FromStr for SchemeKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "centralized" => Ok(SchemeKind::Centralized),
            "keyless" => Ok(SchemeKind::Keyless),
            "decentralized" => Ok(SchemeKind::Decentralized),
            other => Err(format!("unknown scheme {other:?}")),
        }
    }
}

/// Allocation sets in lexicographic order, with share numbering
/// `index(T) * t + (replica - 1)`.
#[derive(Debug, Clone)]
pub struct ShareLayout {
    pub universe: u32,
    pub t: u32,
    sets: Vec<Subset>,
    index: BTreeMap<Subset, usize>,
}

impl ShareLayout {
    pub fn new(universe: u32, t: u32) -> Self {
        let sets = Subset::all(universe, t as usize);
        let index = sets.iter().cloned().enumerate().map(|(i, s)| (s, i)).collect();
        ShareLayout { universe, t, sets, index }
    }

    pub fn sets(&self) -> &[Subset] {
        &self.sets
    }

    pub fn share_count(&self) -> usize {
        self.sets.len() * self.t as usize
    }

    pub fn share_index(&self, set: &Subset, replica: u32) -> Option<usize> {
        if replica < 1 || replica > self.t {
            return None;
        }
        self.index
            .get(set)
            .map(|&i| i * self.t as usize + (replica as usize - 1))
    }

    pub fn set_of_index(&self, idx: usize) -> (&Subset, u32) {
        let t = self.t as usize;
        (&self.sets[idx / t], (idx % t) as u32 + 1)
    }
}

/// Shape of a placed system.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Geometry {
    pub scheme: SchemeKind,
    /// Active users K.
    pub users: u32,
    /// Library size N.
    pub files: u32,
    pub t: u32,
    /// Slot universe: K for the centralized schemes, L for the decentralized one.
    pub universe: u32,
    pub blocks: u32,
    pub field: FieldSpec,
    pub ramp_m: usize,
    pub ramp_n: usize,
}

impl Geometry {
    pub fn secret_len(&self) -> usize {
        self.ramp_n - self.ramp_m
    }

    pub fn symbols_per_file(&self) -> usize {
        self.blocks as usize * self.secret_len()
    }

    pub fn layout(&self) -> ShareLayout {
        ShareLayout::new(self.universe, self.t)
    }

    pub fn field(&self) -> Result<Field, FieldError> {
        Field::new(self.field)
    }

    pub fn ramp(&self) -> Result<RampScheme, SchemeError> {
        Ok(RampScheme::new(self.ramp_m, self.ramp_n, &self.field()?)?)
    }

    pub fn groups(&self) -> u32 {
        self.users.div_ceil(self.universe)
    }

    /// Users in the last group.
    pub fn last_group_size(&self) -> u32 {
        self.users - (self.groups() - 1) * self.universe
    }

    pub fn validate_demands(&self, demands: &[u32]) -> Result<(), SchemeError> {
        if demands.len() != self.users as usize {
            return Err(SchemeError::DemandLength {
                expected: self.users as usize,
                got: demands.len(),
            });
        }
        for (i, &d) in demands.iter().enumerate() {
            if d < 1 || d > self.files {
                return Err(SchemeError::DemandOutOfRange {
                    user: i as u32 + 1,
                    file: d,
                    files: self.files,
                });
            }
        }
        Ok(())
    }
}

/// Worst-case demand vector `(1, 2, ..., K)`.
pub fn worst_case_demands(users: u32) -> Vec<u32> {
    (1..=users).collect()
}

/// File contents, `files[n-1]` holding all blocks of file `n` back to back.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Library {
    pub secret_len: usize,
    pub files: Vec<Vec<Symbol>>,
}

impl Library {
    pub fn random(geometry: &Geometry, rng: &mut ChaCha8Rng) -> Library {
        let q = geometry.field.order();
        let files = (0..geometry.files)
            .map(|_| {
                (0..geometry.symbols_per_file())
                    .map(|_| rng.gen_range(0..q) as Symbol)
                    .collect()
            })
            .collect();
        Library { secret_len: geometry.secret_len(), files }
    }

    pub fn block(&self, file: u32, block: u32) -> &[Symbol] {
        let start = block as usize * self.secret_len;
        &self.files[file as usize - 1][start..start + self.secret_len]
    }

    pub fn to_hex(&self) -> Vec<String> {
        self.files
            .iter()
            .map(|f| f.iter().map(|&s| encode_symbol(s)).collect())
            .collect()
    }

    pub fn from_hex(secret_len: usize, files: &[String]) -> Result<Library, String> {
        let files = files
            .iter()
            .map(|h| {
                if h.len() % 4 != 0 {
                    return Err("file hex length is not a multiple of 4".to_string());
                }
                (0..h.len() / 4).map(|i| decode_symbol(&h[4 * i..4 * i + 4])).collect()
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Library { secret_len, files })
    }
}

/// Every uniform symbol drawn during placement.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Randomness {
    pub ramp_m: usize,
    pub blocks: u32,
    /// Sharing coefficients, indexed by `(file - 1) * blocks + block`.
    pub sharing: Vec<Vec<Symbol>>,
    pub keys: BTreeMap<KeyLabel, Symbol>,
}

impl Randomness {
    pub fn draw(geometry: &Geometry, key_labels: &[KeyLabel], rngs: &mut SeedStreams) -> Randomness {
        let q = geometry.field.order();
        let sharing = (0..geometry.files as usize * geometry.blocks as usize)
            .map(|_| {
                (0..geometry.ramp_m)
                    .map(|_| rngs.sharing.gen_range(0..q) as Symbol)
                    .collect()
            })
            .collect();
        let keys = key_labels
            .iter()
            .map(|k| (k.clone(), rngs.keys.gen_range(0..q) as Symbol))
            .collect();
        Randomness {
            ramp_m: geometry.ramp_m,
            blocks: geometry.blocks,
            sharing,
            keys,
        }
    }

    pub fn sharing_for(&self, file: u32, block: u32) -> &[Symbol] {
        &self.sharing[(file as usize - 1) * self.blocks as usize + block as usize]
    }

    /// SHA-256 over all symbols in canonical order.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        for row in &self.sharing {
            for s in row {
                h.update(s.to_be_bytes());
            }
        }
        for (label, v) in &self.keys {
            h.update(label.to_string().as_bytes());
            h.update(v.to_be_bytes());
        }
        hex::encode(h.finalize())
    }
}

/// Independent generator streams derived from one seed.
pub struct SeedStreams {
    pub library: ChaCha8Rng,
    pub sharing: ChaCha8Rng,
    pub keys: ChaCha8Rng,
}

impl SeedStreams {
    pub fn new(seed: u64) -> Self {
        let stream = |s: u64| {
            let mut r = ChaCha8Rng::seed_from_u64(seed);
            r.set_stream(s);
            r
        };
        SeedStreams {
            library: stream(0),
            sharing: stream(1),
            keys: stream(2),
        }
    }
}

/// A placed system: geometry, library and every user's cache.
#[derive(Debug, Clone)]
pub struct Deployment {
    pub geometry: Geometry,
    pub library: Library,
    pub caches: Vec<CacheContent>,
    pub randomness_digest: String,
    /// Present only for in-process placements; traces carry the digest alone.
    pub randomness: Option<Randomness>,
}

impl Deployment {
    pub fn cache(&self, user: u32) -> Option<&CacheContent> {
        self.caches.get(user as usize - 1).filter(|c| c.user == user)
    }

    pub fn user_of_device(&self, device: u32) -> Option<u32> {
        self.caches.iter().find(|c| c.device == device).map(|c| c.user)
    }
}

/// Per-user placement instruction consumed by [`build_deployment`].
pub(crate) struct Assignment {
    pub user: u32,
    pub device: u32,
    pub slot: u32,
    pub group: u32,
    /// Keys for block 0; replicated across blocks.
    pub keys: Vec<(KeyGroup, Subset, u32)>,
}

/// Draw the library and randomness, share every file block and fill caches.
pub(crate) fn build_deployment(
    geometry: Geometry,
    key_families: &[(KeyGroup, Subset, u32)],
    assignments: Vec<Assignment>,
    seed: u64,
) -> Result<Deployment, SchemeError> {
    let ramp = geometry.ramp()?;
    let layout = geometry.layout();
    let mut rngs = SeedStreams::new(seed);
    let library = Library::random(&geometry, &mut rngs.library);
    let key_labels: Vec<KeyLabel> = key_families
        .iter()
        .flat_map(|(g, s, i)| {
            (0..geometry.blocks).map(move |b| KeyLabel {
                group: *g,
                set: s.clone(),
                index: *i,
                block: b,
            })
        })
        .collect();
    let randomness = Randomness::draw(&geometry, &key_labels, &mut rngs);

    let mut shares: BTreeMap<(u32, u32), Vec<Symbol>> = BTreeMap::new();
    for file in 1..=geometry.files {
        for block in 0..geometry.blocks {
            let v = ramp.share_block(library.block(file, block), randomness.sharing_for(file, block))?;
            shares.insert((file, block), v);
        }
    }

    let caches = assignments
        .into_iter()
        .map(|a| {
            let mut items = BTreeMap::new();
            for set in layout.sets().iter().filter(|s| s.contains(a.slot)) {
                for file in 1..=geometry.files {
                    for block in 0..geometry.blocks {
                        for replica in 1..=geometry.t {
                            let idx = layout.share_index(set, replica).expect("layout set");
                            items.insert(
                                Label::share(file, set.clone(), replica, block),
                                shares[&(file, block)][idx],
                            );
                        }
                    }
                }
            }
            for (group, set, index) in &a.keys {
                for block in 0..geometry.blocks {
                    let label = KeyLabel {
                        group: *group,
                        set: set.clone(),
                        index: *index,
                        block,
                    };
                    let v = randomness.keys[&label];
                    items.insert(Label::Key(label), v);
                }
            }
            CacheContent {
                user: a.user,
                device: a.device,
                slot: a.slot,
                group: a.group,
                items,
            }
        })
        .collect();

    Ok(Deployment {
        geometry,
        library,
        caches,
        randomness_digest: randomness.digest(),
        randomness: Some(randomness),
    })
}

/// XOR the sender's cached payloads into one signal.
pub(crate) fn compose(
    cache: &CacheContent,
    stage: u32,
    set: Subset,
    block: u32,
    composition: Vec<Label>,
) -> Result<TransmissionRecord, SchemeError> {
    let mut payload = 0;
    for label in &composition {
        match cache.items.get(label) {
            Some(v) => payload ^= v,
            None => {
                return Err(SchemeError::SenderInfeasible {
                    sender: cache.user,
                    label: label.clone(),
                })
            }
        }
    }
    Ok(TransmissionRecord {
        stage,
        sender: cache.user,
        set,
        block,
        composition,
        payload,
    })
}

/// Delivery variants used for sabotage experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tamper {
    #[default]
    None,
    /// Send every signal without its one-time pad.
    ZeroKeys,
}

/// Signals exchanged in one coded round over the slot universe.
///
/// For every (t+1)-subset `S` of slots and every member slot `k`, the user
/// occupying `k` sends the XOR of `S^j_{d_l, S\{l}}` over `l in S\{k}` and of
/// the key `K^i_S`, where `i` is the rank of `k` in `S` and `j` the rank of `k`
/// in `S\{l}`.
pub(crate) fn coded_round(
    deployment: &Deployment,
    stage: u32,
    sets: &[Subset],
    member: &dyn Fn(u32) -> u32,
    demands: &[u32],
    key_group: Option<KeyGroup>,
    tamper: Tamper,
) -> Result<Vec<TransmissionRecord>, SchemeError> {
    let mut out = Vec::new();
    for set in sets {
        for &k in set.members() {
            let sender = member(k);
            let cache = deployment.cache(sender).expect("member user exists");
            for block in 0..deployment.geometry.blocks {
                let mut comp = Vec::with_capacity(set.len());
                for &l in set.members().iter().filter(|&&l| l != k) {
                    let alloc = set.without(l);
                    let j = alloc.rank_of(k).expect("k in S minus l");
                    comp.push(Label::share(demands[member(l) as usize - 1], alloc, j, block));
                }
                if let (Some(group), Tamper::None) = (key_group, tamper) {
                    comp.push(Label::key(group, set.clone(), set.rank_of(k).unwrap(), block));
                }
                out.push(compose(cache, stage, set.clone(), block, comp)?);
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn subset_ranks_and_display() {
        let s = Subset::new(vec![4, 1, 3]);
        assert_eq!(s.members(), &[1, 3, 4]);
        assert_eq!(s.rank_of(3), Some(2));
        assert_eq!(s.rank_of(2), None);
        assert_eq!(s.without(3), Subset::new(vec![1, 4]));
        assert_eq!(s.to_string(), "134");
        assert_eq!(Subset::new(vec![2, 11]).to_string(), "{2,11}");
        assert_eq!(Subset::all(4, 2).len(), 6);
        assert_eq!(Subset::all(4, 2)[0], Subset::new(vec![1, 2]));
    }

    #[test]
    fn share_layout_numbering() {
        let layout = ShareLayout::new(4, 2);
        assert_eq!(layout.share_count(), 12);
        assert_eq!(layout.share_index(&Subset::new(vec![1, 2]), 1), Some(0));
        assert_eq!(layout.share_index(&Subset::new(vec![1, 3]), 2), Some(3));
        assert_eq!(layout.share_index(&Subset::new(vec![3, 4]), 2), Some(11));
        assert_eq!(layout.share_index(&Subset::new(vec![3, 4]), 3), None);
        for idx in 0..12 {
            let (set, j) = layout.set_of_index(idx);
            assert_eq!(layout.share_index(set, j), Some(idx));
        }
    }

    #[test]
    fn label_display_and_json() {
        let s = Label::share(2, Subset::new(vec![1, 3]), 1, 0);
        assert_eq!(s.to_string(), "S^1_{2,13}#0");
        let k = Label::key(KeyGroup::Last, Subset::new(vec![1, 2, 3]), 2, 1);
        assert_eq!(k.to_string(), "K^2_{*,123}#1");
        let json = serde_json::to_string(&s).unwrap();
        assert_eq!(json, r#"{"kind":"share","file":2,"set":[1,3],"replica":1,"block":0}"#);
        let back: Label = serde_json::from_str(&json).unwrap();
        assert_eq!(back, s);
        let kj = serde_json::to_string(&k).unwrap();
        assert_eq!(serde_json::from_str::<Label>(&kj).unwrap(), k);
        let g = serde_json::to_string(&KeyGroup::Group(3)).unwrap();
        assert_eq!(g, r#"{"group":3}"#);
    }

    #[test]
    fn symbol_hex_round_trip() {
        for v in [0u16, 1, 0x1b, 0xabcd, 0xffff] {
            assert_eq!(decode_symbol(&encode_symbol(v)).unwrap(), v);
        }
        assert_eq!(encode_symbol(0x01ab), "01ab");
        assert!(decode_symbol("abc").is_err());
    }

    #[test]
    fn seed_streams_are_distinct_and_reproducible() {
        let mut a = SeedStreams::new(7);
        let mut b = SeedStreams::new(7);
        let x: u64 = a.library.gen();
        assert_eq!(x, b.library.gen::<u64>());
        let y: u64 = a.sharing.gen();
        let z: u64 = a.keys.gen();
        assert!(x != y && y != z);
    }

    #[test]
    fn cache_content_json_round_trip() {
        let mut items = BTreeMap::new();
        items.insert(Label::share(1, Subset::new(vec![1]), 1, 0), 0x1234);
        items.insert(Label::key(KeyGroup::Centralized, Subset::new(vec![1, 2]), 1, 0), 7);
        let c = CacheContent { user: 1, device: 1, slot: 1, group: 1, items };
        let json = serde_json::to_string(&c).unwrap();
        assert!(json.contains("\"payload\":\"1234\""));
        let back: CacheContent = serde_json::from_str(&json).unwrap();
        assert_eq!(back, c);
        assert_eq!((c.share_count(), c.key_count()), (1, 1));
    }
}
