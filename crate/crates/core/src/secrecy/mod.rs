//! Exact secrecy verdicts from an observer's linear view.
//!
//! Every observed symbol is a linear function `y = A w + B r` of the file
//! symbols `w` and the uniform randomness `r` (sharing coefficients and key
//! payloads). With uniform independent inputs, the view reveals nothing about
//! a set of files exactly when adding their columns does not raise the rank.

pub mod oracle;

use std::collections::BTreeMap;
use std::ops::Range;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gf::{Field, Symbol};
use crate::matrix::SymbolMatrix;
use crate::model::{Deployment, Geometry, KeyLabel, Label, Randomness, SchemeError, ShareLayout, TransmissionRecord};
use crate::ramp::RampScheme;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Observer {
    User(u32),
    Eavesdropper,
}

#[derive(Debug, Error)]
pub enum AuditError {
    #[error("record {index} (sender {sender}) carries no composition metadata")]
    MissingComposition { index: usize, sender: u32 },
    #[error("label {label} does not exist in this system")]
    UnknownLabel { label: String },
    #[error("unknown user {0}")]
    UnknownUser(u32),
    #[error(transparent)]
    Scheme(#[from] SchemeError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowOrigin {
    Cache(Label),
    Signal(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ViewRow {
    pub origin: RowOrigin,
    pub composition: Vec<Label>,
    pub payload: Symbol,
}

/// Cached symbols plus other users' signals, or all signals for an eavesdropper.
pub fn observer_rows(
    deployment: &Deployment,
    records: &[TransmissionRecord],
    observer: Observer,
) -> Result<Vec<ViewRow>, AuditError> {
    let mut rows = Vec::new();
    let own = match observer {
        Observer::User(k) => {
            let cache = deployment.cache(k).ok_or(AuditError::UnknownUser(k))?;
            rows.extend(cache.items.iter().map(|(l, &v)| ViewRow {
                origin: RowOrigin::Cache(l.clone()),
                composition: vec![l.clone()],
                payload: v,
            }));
            Some(k)
        }
        Observer::Eavesdropper => None,
    };
    for (index, r) in records.iter().enumerate() {
        if r.composition.is_empty() {
            return Err(AuditError::MissingComposition { index, sender: r.sender });
        }
        if Some(r.sender) == own {
            continue;
        }
        rows.push(ViewRow {
            origin: RowOrigin::Signal(index),
            composition: r.composition.clone(),
            payload: r.payload,
        });
    }
    Ok(rows)
}

/// Column order for all independent uniform symbols of a system.
#[derive(Debug, Clone)]
pub struct RandomnessRegistry {
    files: u32,
    blocks: u32,
    ramp_m: usize,
    keys: Vec<KeyLabel>,
    key_index: BTreeMap<KeyLabel, usize>,
}

impl RandomnessRegistry {
    /// Sharing coefficients for every file block, then every key that is
    /// cached or transmitted anywhere.
    pub fn new(deployment: &Deployment, records: &[TransmissionRecord]) -> Self {
        let mut keys: Vec<KeyLabel> = deployment
            .caches
            .iter()
            .flat_map(|c| c.items.keys())
            .chain(records.iter().flat_map(|r| r.composition.iter()))
            .filter_map(|l| match l {
                Label::Key(k) => Some(k.clone()),
                Label::Share(_) => None,
            })
            .collect();
        keys.sort();
        keys.dedup();
        let key_index = keys.iter().cloned().enumerate().map(|(i, k)| (k, i)).collect();
        let g = &deployment.geometry;
        RandomnessRegistry {
            files: g.files,
            blocks: g.blocks,
            ramp_m: g.ramp_m,
            keys,
            key_index,
        }
    }

    pub fn sharing_columns(&self) -> usize {
        self.files as usize * self.blocks as usize * self.ramp_m
    }

    pub fn len(&self) -> usize {
        self.sharing_columns() + self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn keys(&self) -> &[KeyLabel] {
        &self.keys
    }

    fn sharing_column(&self, file: u32, block: u32, r: usize) -> usize {
        ((file as usize - 1) * self.blocks as usize + block as usize) * self.ramp_m + r
    }

    fn key_column(&self, key: &KeyLabel) -> Option<usize> {
        self.key_index.get(key).map(|i| self.sharing_columns() + i)
    }

    /// Actual randomness values in column order.
    pub fn values(&self, randomness: &Randomness) -> Vec<Symbol> {
        let mut v: Vec<Symbol> = randomness.sharing.iter().flatten().copied().collect();
        v.extend(self.keys.iter().map(|k| randomness.keys.get(k).copied().unwrap_or(0)));
        v
    }
}

#[derive(Debug, Clone)]
pub struct LinearView {
    pub observer: Observer,
    pub row_origins: Vec<RowOrigin>,
    pub payloads: Vec<Symbol>,
    /// Observed symbols by file symbols, grouped by file.
    pub a: SymbolMatrix,
    /// Observed symbols by randomness symbols.
    pub b: SymbolMatrix,
    pub field: Field,
    files: u32,
    cols_per_file: usize,
}

impl LinearView {
    pub fn file_columns(&self, file: u32) -> Range<usize> {
        let start = (file as usize - 1) * self.cols_per_file;
        start..start + self.cols_per_file
    }

    pub fn files(&self) -> u32 {
        self.files
    }

    fn a_for(&self, files: &[u32]) -> SymbolMatrix {
        let cols: Vec<usize> = files.iter().flat_map(|&f| self.file_columns(f)).collect();
        self.a.select_cols(&cols)
    }

    fn rank_with(&self, files: &[u32]) -> usize {
        self.a_for(files)
            .hstack(&self.b)
            .expect("row counts agree")
            .rank(&self.field)
    }

    pub fn rank_all(&self) -> usize {
        self.a.hstack(&self.b).expect("row counts agree").rank(&self.field)
    }
}

struct RowBuilder<'a> {
    layout: ShareLayout,
    a_secret: SymbolMatrix,
    b_random: SymbolMatrix,
    registry: &'a RandomnessRegistry,
    geometry: &'a Geometry,
}

impl RowBuilder<'_> {
    fn add_label(&self, label: &Label, a_row: &mut [Symbol], b_row: &mut [Symbol]) -> Result<(), AuditError> {
        let unknown = || AuditError::UnknownLabel { label: label.to_string() };
        match label {
            Label::Share(s) => {
                if s.file < 1 || s.file > self.geometry.files || s.block >= self.geometry.blocks {
                    return Err(unknown());
                }
                let idx = self.layout.share_index(&s.set, s.replica).ok_or_else(unknown)?;
                let secret_len = self.geometry.secret_len();
                let base = ((s.file as usize - 1) * self.geometry.blocks as usize + s.block as usize) * secret_len;
                for (c, v) in self.a_secret.row(idx).iter().enumerate() {
                    a_row[base + c] ^= v;
                }
                for (r, v) in self.b_random.row(idx).iter().enumerate() {
                    b_row[self.registry.sharing_column(s.file, s.block, r)] ^= v;
                }
            }
            Label::Key(k) => {
                let col = self.registry.key_column(k).ok_or_else(unknown)?;
                b_row[col] ^= 1;
            }
        }
        Ok(())
    }
}

pub fn build_view_from_rows(
    geometry: &Geometry,
    registry: &RandomnessRegistry,
    rows: &[ViewRow],
    observer: Observer,
) -> Result<LinearView, AuditError> {
    let field = geometry.field().map_err(SchemeError::from)?;
    let ramp = RampScheme::new(geometry.ramp_m, geometry.ramp_n, &field).map_err(SchemeError::from)?;
    let (a_secret, b_random) = ramp.sharing_matrix();
    let builder = RowBuilder {
        layout: geometry.layout(),
        a_secret,
        b_random,
        registry,
        geometry,
    };
    let a_cols = geometry.files as usize * geometry.symbols_per_file();
    let b_cols = registry.len();
    let mut a = SymbolMatrix::zeros(0, a_cols);
    let mut b = SymbolMatrix::zeros(0, b_cols);
    for row in rows {
        let mut a_row = vec![0; a_cols];
        let mut b_row = vec![0; b_cols];
        for label in &row.composition {
            builder.add_label(label, &mut a_row, &mut b_row)?;
        }
        a.push_row(&a_row);
        b.push_row(&b_row);
    }
    Ok(LinearView {
        observer,
        row_origins: rows.iter().map(|r| r.origin.clone()).collect(),
        payloads: rows.iter().map(|r| r.payload).collect(),
        a,
        b,
        field,
        files: geometry.files,
        cols_per_file: geometry.symbols_per_file(),
    })
}

pub fn build_view(
    deployment: &Deployment,
    records: &[TransmissionRecord],
    observer: Observer,
) -> Result<LinearView, AuditError> {
    let registry = RandomnessRegistry::new(deployment, records);
    let rows = observer_rows(deployment, records, observer)?;
    build_view_from_rows(&deployment.geometry, &registry, &rows, observer)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CachingVerdict {
    pub user: u32,
    pub demand: u32,
    pub pass: bool,
    pub rank_demanded: usize,
    pub rank_all: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub witness_file: Option<u32>,
}

/// PASS iff `rank([A_d | B]) = rank([A | B])`.
pub fn check_secure_caching(view: &LinearView, demand: u32) -> CachingVerdict {
    caching_verdict(view, demand, view.rank_all())
}

fn caching_verdict(view: &LinearView, demand: u32, rank_all: usize) -> CachingVerdict {
    let rank_demanded = view.rank_with(&[demand]);
    let pass = rank_demanded == rank_all;
    let witness_file = if pass {
        None
    } else {
        (1..=view.files)
            .filter(|&f| f != demand)
            .find(|&f| view.rank_with(&[demand, f]) > rank_demanded)
    };
    CachingVerdict {
        user: match view.observer {
            Observer::User(k) => k,
            Observer::Eavesdropper => 0,
        },
        demand,
        pass,
        rank_demanded,
        rank_all,
        witness_file,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeliveryVerdict {
    pub pass: bool,
    pub rank_randomness: usize,
    pub rank_all: usize,
    pub observed: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub witness_file: Option<u32>,
}

/// PASS iff `rank(B) = rank([A | B])`.
pub fn check_secure_delivery(view: &LinearView) -> DeliveryVerdict {
    let rank_randomness = view.b.rank(&view.field);
    let rank_all = view.rank_all();
    let pass = rank_randomness == rank_all;
    let witness_file = if pass {
        None
    } else {
        (1..=view.files).find(|&f| view.rank_with(&[f]) > rank_randomness)
    };
    DeliveryVerdict {
        pass,
        rank_randomness,
        rank_all,
        observed: view.a.rows(),
        witness_file,
    }
}

/// True when every symbol of `file` is a linear combination of observed rows.
pub fn decodable(view: &LinearView, file: u32) -> bool {
    decodable_with_rank(view, file, view.rank_all())
}

fn decodable_with_rank(view: &LinearView, file: u32, base: usize) -> bool {
    let mut extended = view.a.hstack(&view.b).expect("row counts agree");
    for c in view.file_columns(file) {
        let mut row = vec![0; extended.cols()];
        row[c] = 1;
        extended.push_row(&row);
    }
    extended.rank(&view.field) == base
}

/// Check `A w + B r` against every observed payload.
pub fn replay(view: &LinearView, files: &[Vec<Symbol>], randomness: &[Symbol]) -> bool {
    let w: Vec<Symbol> = files.iter().flatten().copied().collect();
    let (Ok(aw), Ok(br)) = (view.a.mul_vec(&view.field, &w), view.b.mul_vec(&view.field, randomness)) else {
        return false;
    };
    aw.iter()
        .zip(&br)
        .zip(&view.payloads)
        .all(|((x, y), p)| x ^ y == *p)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SecrecyReport {
    pub caching: Vec<CachingVerdict>,
    pub delivery: DeliveryVerdict,
    /// Users whose view determines their demanded file.
    pub decodable: Vec<bool>,
}

impl SecrecyReport {
    pub fn all_caching_pass(&self) -> bool {
        self.caching.iter().all(|v| v.pass)
    }
}

pub fn verify_secrecy(
    deployment: &Deployment,
    records: &[TransmissionRecord],
    demands: &[u32],
) -> Result<SecrecyReport, AuditError> {
    deployment.geometry.validate_demands(demands)?;
    let registry = RandomnessRegistry::new(deployment, records);
    let per_user: Vec<Result<(CachingVerdict, bool), AuditError>> = deployment
        .caches
        .par_iter()
        .map(|c| {
            let rows = observer_rows(deployment, records, Observer::User(c.user))?;
            let view = build_view_from_rows(&deployment.geometry, &registry, &rows, Observer::User(c.user))?;
            let demand = demands[c.user as usize - 1];
            let rank_all = view.rank_all();
            Ok((
                caching_verdict(&view, demand, rank_all),
                decodable_with_rank(&view, demand, rank_all),
            ))
        })
        .collect();
    let mut caching = Vec::new();
    let mut dec = Vec::new();
    for r in per_user {
        let (v, d) = r?;
        caching.push(v);
        dec.push(d);
    }
    let rows = observer_rows(deployment, records, Observer::Eavesdropper)?;
    let view = build_view_from_rows(&deployment.geometry, &registry, &rows, Observer::Eavesdropper)?;
    Ok(SecrecyReport {
        caching,
        delivery: check_secure_delivery(&view),
        decodable: dec,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::centralized::{deliver, place, SystemParams};
    use crate::gf::FieldSpec;
    use crate::model::{worst_case_demands, Tamper};

    fn golden() -> (Deployment, Vec<TransmissionRecord>) {
        let d = place(&SystemParams::new(4, 4, 2).unwrap(), 0).unwrap();
        let r = deliver(&d, &worst_case_demands(4), Tamper::None).unwrap();
        (d, r)
    }

    #[test]
    fn empty_observer_has_no_rows() {
        let d = place(&SystemParams::new(3, 3, 1).unwrap(), 0).unwrap();
        let v = build_view(&d, &[], Observer::Eavesdropper).unwrap();
        assert_eq!(v.a.rows(), 0);
        assert_eq!(v.b.rows(), 0);
        assert!(check_secure_delivery(&v).pass);
    }

    #[test]
    fn eavesdropper_rows_equal_schedule_size() {
        let (d, r) = golden();
        let v = build_view(&d, &r, Observer::Eavesdropper).unwrap();
        assert_eq!(v.a.rows(), r.len());
        let u = build_view(&d, &r, Observer::User(1)).unwrap();
        assert_eq!(u.a.rows(), d.caches[0].items.len() + 9);
    }

    #[test]
    fn replay_reproduces_payloads() {
        let (d, r) = golden();
        let registry = RandomnessRegistry::new(&d, &r);
        let values = registry.values(d.randomness.as_ref().unwrap());
        for obs in [Observer::User(1), Observer::User(4), Observer::Eavesdropper] {
            let v = build_view(&d, &r, obs).unwrap();
            assert!(replay(&v, &d.library.files, &values));
            let mut bad = values.clone();
            bad[0] ^= 1;
            if obs != Observer::Eavesdropper {
                assert!(!replay(&v, &d.library.files, &bad));
            }
        }
    }

    #[test]
    fn golden_verdicts() {
        let (d, r) = golden();
        let rep = verify_secrecy(&d, &r, &worst_case_demands(4)).unwrap();
        assert!(rep.all_caching_pass());
        assert!(rep.delivery.pass);
        assert!(rep.decodable.iter().all(|&x| x));
    }

    #[test]
    fn zeroed_keys_leak() {
        let d = place(&SystemParams::new(3, 3, 1).unwrap(), 0).unwrap();
        let r = deliver(&d, &[1, 2, 3], Tamper::ZeroKeys).unwrap();
        let rep = verify_secrecy(&d, &r, &[1, 2, 3]).unwrap();
        assert!(!rep.all_caching_pass());
        let bad = rep.caching.iter().find(|v| !v.pass).unwrap();
        assert!(bad.witness_file.is_some());
        assert!(!rep.delivery.pass);
        assert!(rep.delivery.witness_file.is_some());
    }

    #[test]
    fn missing_composition_is_an_audit_error() {
        let (d, mut r) = golden();
        r[5].composition.clear();
        let e = build_view(&d, &r, Observer::Eavesdropper).unwrap_err();
        assert!(matches!(e, AuditError::MissingComposition { index: 5, .. }));
    }

    #[test]
    fn verdicts_ignore_payload_values() {
        let p = SystemParams::with_field(3, 3, 1, 2, FieldSpec::new(8).unwrap()).unwrap();
        let a = place(&p, 1).unwrap();
        let b = place(&p, 2).unwrap();
        let dem = [3, 1, 2];
        let ra = deliver(&a, &dem, Tamper::None).unwrap();
        let rb = deliver(&b, &dem, Tamper::None).unwrap();
        assert_eq!(verify_secrecy(&a, &ra, &dem).unwrap(), verify_secrecy(&b, &rb, &dem).unwrap());
    }
}
