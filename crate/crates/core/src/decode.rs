//! Peeling decoder shared by all schemes.
//!
//! A user starts from its cache, repeatedly takes any received signal with a
//! single unknown share label, XORs the known parts away, and finally
//! reconstructs each block of its demanded file from all `n` shares.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gf::Symbol;
use crate::model::{CacheContent, Deployment, Geometry, Label, ShareLayout, Subset, TransmissionRecord};
use crate::ramp::RampScheme;

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
#[error("user {user} cannot decode file {file}: {missing_shares} shares missing, allocation sets {missing_sets:?}")]
pub struct DecodeFailure {
    pub user: u32,
    pub file: u32,
    pub missing_shares: usize,
    pub missing_sets: Vec<Subset>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Decoded {
    pub user: u32,
    pub file: u32,
    pub payload: Vec<Symbol>,
    /// Share labels of the demanded file learned from signals.
    pub new_shares: usize,
}

pub fn decode_user(
    geometry: &Geometry,
    layout: &ShareLayout,
    ramp: &RampScheme,
    cache: &CacheContent,
    records: &[TransmissionRecord],
    demand: u32,
) -> Result<Decoded, DecodeFailure> {
    let mut known: BTreeMap<Label, Symbol> = cache.items.clone();
    let mut pending: Vec<&TransmissionRecord> = records.iter().filter(|r| r.sender != cache.user).collect();
    let mut new_shares = 0;
    loop {
        let mut progress = false;
        pending.retain(|rec| {
            let mut unknown = None;
            let mut unknown_count = 0;
            let mut acc = rec.payload;
            for label in &rec.composition {
                match known.get(label) {
                    Some(v) => acc ^= v,
                    None => {
                        unknown_count += 1;
                        unknown = Some(label);
                    }
                }
            }
            match (unknown_count, unknown) {
                (0, _) => false,
                (1, Some(label @ Label::Share(s))) => {
                    if s.file == demand {
                        new_shares += 1;
                    }
                    known.insert(label.clone(), acc);
                    progress = true;
                    false
                }
                _ => true,
            }
        });
        if !progress {
            break;
        }
    }

    let mut payload = Vec::with_capacity(geometry.symbols_per_file());
    let mut missing_sets = BTreeSet::new();
    let mut missing = 0;
    let mut per_block = Vec::new();
    for block in 0..geometry.blocks {
        let mut shares = Vec::with_capacity(layout.share_count());
        for idx in 0..layout.share_count() {
            let (set, replica) = layout.set_of_index(idx);
            match known.get(&Label::share(demand, set.clone(), replica, block)) {
                Some(&v) => shares.push(v),
                None => {
                    missing += 1;
                    missing_sets.insert(set.clone());
                }
            }
        }
        per_block.push(shares);
    }
    if missing > 0 {
        return Err(DecodeFailure {
            user: cache.user,
            file: demand,
            missing_shares: missing,
            missing_sets: missing_sets.into_iter().collect(),
        });
    }
    for shares in per_block {
        payload.extend(ramp.reconstruct(&shares).expect("complete share set"));
    }
    Ok(Decoded {
        user: cache.user,
        file: demand,
        payload,
        new_shares,
    })
}

/// Per-user decode verdict against the library.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecodeEntry {
    pub user: u32,
    pub file: u32,
    pub bit_exact: bool,
    pub new_shares: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
}

pub fn decode_all(
    deployment: &Deployment,
    records: &[TransmissionRecord],
    demands: &[u32],
) -> Result<Vec<DecodeEntry>, crate::model::SchemeError> {
    let geometry = &deployment.geometry;
    geometry.validate_demands(demands)?;
    let ramp = geometry.ramp()?;
    let layout = geometry.layout();
    Ok(deployment
        .caches
        .iter()
        .map(|cache| {
            let demand = demands[cache.user as usize - 1];
            match decode_user(geometry, &layout, &ramp, cache, records, demand) {
                Ok(d) => DecodeEntry {
                    user: cache.user,
                    file: demand,
                    bit_exact: d.payload == deployment.library.files[demand as usize - 1],
                    new_shares: d.new_shares,
                    error: None,
                },
                Err(e) => DecodeEntry {
                    user: cache.user,
                    file: demand,
                    bit_exact: false,
                    new_shares: 0,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect())
}
