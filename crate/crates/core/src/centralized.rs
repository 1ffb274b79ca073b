//! Centralized secure D2D coded caching and its keyless special case.

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::decode::{decode_user, DecodeFailure, Decoded};
use crate::gf::{FieldSpec, DEFAULT_BITS};
use crate::model::{
    build_deployment, coded_round, Assignment, CacheContent, Deployment, Geometry, KeyGroup,
    SchemeError, SchemeKind, Subset, Tamper, TransmissionRecord,
};
use crate::ramp::{min_field_bits, RampError};
use crate::rational::{binom_usize, int, rat, Rational};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SystemParams {
    pub users: u32,
    pub files: u32,
    pub t: u32,
    pub blocks: u32,
    pub field: FieldSpec,
}

impl SystemParams {
    pub fn new(users: u32, files: u32, t: u32) -> Result<Self, SchemeError> {
        Self::with_field(users, files, t, 1, FieldSpec::new(DEFAULT_BITS)?)
    }

    pub fn with_field(users: u32, files: u32, t: u32, blocks: u32, field: FieldSpec) -> Result<Self, SchemeError> {
        let p = SystemParams { users, files, t, blocks, field };
        p.validate()?;
        Ok(p)
    }

    fn validate(&self) -> Result<(), SchemeError> {
        let (k, n, t) = (self.users, self.files, self.t);
        if k < 2 {
            return Err(SchemeError::InvalidParams(format!("need at least 2 users, got {k}")));
        }
        if n < k {
            return Err(SchemeError::InvalidParams(format!("need N >= K, got N={n}, K={k}")));
        }
        if t < 1 || t >= k {
            return Err(SchemeError::InvalidParams(format!("t={t} outside 1..={}", k - 1)));
        }
        if self.blocks < 1 {
            return Err(SchemeError::InvalidParams("need at least one block per file".into()));
        }
        let (_, shares) = ramp_sizes(k, t);
        if shares as u64 > self.field.order() as u64 - 1 {
            return Err(RampError::FieldTooSmall {
                n: shares,
                bits: self.field.bits,
                min_bits: min_field_bits(shares),
            }
            .into());
        }
        Ok(())
    }

    pub fn geometry(&self) -> Geometry {
        let (m, n) = ramp_sizes(self.users, self.t);
        Geometry {
            scheme: SchemeKind::Centralized,
            users: self.users,
            files: self.files,
            t: self.t,
            universe: self.users,
            blocks: self.blocks,
            field: self.field,
            ramp_m: m,
            ramp_n: n,
        }
    }
}

/// `(t * C(K-1, t-1), t * C(K, t))`.
pub fn ramp_sizes(users: u32, t: u32) -> (usize, usize) {
    let (k, t) = (users as usize, t as usize);
    (t * binom_usize(k - 1, t - 1), t * binom_usize(k, t))
}

/// Normalized memory at a corner: `Nt/(K-t) + 1/t + 1`.
pub fn memory_at(users: u32, files: u32, t: u32) -> Rational {
    let (k, n, t) = (users as i64, files as i64, t as i64);
    rat(n * t, k - t) + rat(1, t) + int(1)
}

pub fn rate_centralized(users: u32, t: u32) -> Rational {
    rat(users as i64, t as i64)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CornerPoint {
    pub t: u32,
    #[serde(with = "crate::rational::serde_str")]
    pub memory: Rational,
    #[serde(with = "crate::rational::serde_str")]
    pub rate: Rational,
}

pub fn corner_points(users: u32, files: u32) -> Vec<CornerPoint> {
    (1..users)
        .map(|t| CornerPoint {
            t,
            memory: memory_at(users, files, t),
            rate: rate_centralized(users, t),
        })
        .collect()
}

/// Smallest feasible memory `2 + N/(K-1)`.
pub fn minimum_memory(users: u32, files: u32) -> Rational {
    int(2) + rat(files as i64, users as i64 - 1)
}

/// The corner `t` whose memory equals `memory` exactly.
pub fn t_from_memory(users: u32, files: u32, memory: &Rational) -> Option<u32> {
    (1..users).find(|&t| &memory_at(users, files, t) == memory)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EnvelopeError {
    #[error("memory {query} is below the smallest feasible value {minimum}")]
    InfeasibleMemory { query: String, minimum: String },
    #[error("no corner points supplied")]
    Empty,
}

/// Piecewise-linear interpolation between corner points sorted by memory.
/// Flat beyond the largest corner.
pub fn envelope(points: &[(Rational, Rational)], query: &Rational) -> Result<Rational, EnvelopeError> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.0.cmp(&b.0));
    let first = pts.first().ok_or(EnvelopeError::Empty)?;
    if query < &first.0 {
        return Err(EnvelopeError::InfeasibleMemory {
            query: crate::rational::render(query),
            minimum: crate::rational::render(&first.0),
        });
    }
    for w in pts.windows(2) {
        let ((m1, r1), (m2, r2)) = (&w[0], &w[1]);
        if query >= m1 && query <= m2 {
            if m1 == m2 {
                return Ok(r1.clone().min(r2.clone()));
            }
            let alpha = (m2 - query) / (m2 - m1);
            return Ok(&alpha * r1 + (Rational::one() - &alpha) * r2);
        }
    }
    Ok(pts.last().unwrap().1.clone())
}

/// Centralized rate at any feasible memory via memory sharing.
pub fn centralized_envelope(users: u32, files: u32, memory: &Rational) -> Result<Rational, EnvelopeError> {
    let pts: Vec<_> = corner_points(users, files)
        .into_iter()
        .map(|c| (c.memory, c.rate))
        .collect();
    envelope(&pts, memory)
}

/// Closed-form rate `2K(N+M-1) / (1 + (M-1)K + sqrt((1-(M-1)K)^2 - 4KN))`.
pub fn closed_form_rate(users: u32, files: u32, memory: f64) -> f64 {
    let (k, n, m) = (users as f64, files as f64, memory);
    let radicand = (1.0 - (m - 1.0) * k).powi(2) - 4.0 * k * n;
    2.0 * k * (n + m - 1.0) / (1.0 + (m - 1.0) * k + radicand.max(0.0).sqrt())
}

pub fn place(params: &SystemParams, seed: u64) -> Result<Deployment, SchemeError> {
    let geometry = params.geometry();
    let key_sets = Subset::all(params.users, params.t as usize + 1);
    let families: Vec<_> = key_sets
        .iter()
        .flat_map(|s| (1..=params.t + 1).map(move |i| (KeyGroup::Centralized, s.clone(), i)))
        .collect();
    let assignments = (1..=params.users)
        .map(|k| Assignment {
            user: k,
            device: k,
            slot: k,
            group: 1,
            keys: families.iter().filter(|(_, s, _)| s.contains(k)).cloned().collect(),
        })
        .collect();
    build_deployment(geometry, &families, assignments, seed)
}

pub fn deliver(deployment: &Deployment, demands: &[u32], tamper: Tamper) -> Result<Vec<TransmissionRecord>, SchemeError> {
    let g = &deployment.geometry;
    g.validate_demands(demands)?;
    let sets = Subset::all(g.universe, g.t as usize + 1);
    let key_group = match g.scheme {
        SchemeKind::Keyless => None,
        _ => Some(KeyGroup::Centralized),
    };
    coded_round(deployment, 1, &sets, &|k| k, demands, key_group, tamper)
}

pub fn decode(
    deployment: &Deployment,
    user: u32,
    records: &[TransmissionRecord],
    demands: &[u32],
) -> Result<Decoded, DecodeFailure> {
    let g = &deployment.geometry;
    let cache: &CacheContent = deployment.cache(user).expect("user exists");
    let ramp = g.ramp().expect("geometry was validated at placement");
    decode_user(g, &g.layout(), &ramp, cache, records, demands[user as usize - 1])
}

/// Keyless scheme: shares only, `((K-1)^2, K(K-1))` sharing, `M = N(K-1)`.
pub fn keyless_params(users: u32, files: u32, blocks: u32, field: FieldSpec) -> Result<SystemParams, SchemeError> {
    SystemParams::with_field(users, files, users - 1, blocks, field)
}

pub fn place_keyless(params: &SystemParams, seed: u64) -> Result<Deployment, SchemeError> {
    if params.t != params.users - 1 {
        return Err(SchemeError::InvalidParams("the keyless scheme runs at t = K-1".into()));
    }
    let mut geometry = params.geometry();
    geometry.scheme = SchemeKind::Keyless;
    let assignments = (1..=params.users)
        .map(|k| Assignment {
            user: k,
            device: k,
            slot: k,
            group: 1,
            keys: Vec::new(),
        })
        .collect();
    build_deployment(geometry, &[], assignments, seed)
}

pub fn deliver_keyless(deployment: &Deployment, demands: &[u32]) -> Result<Vec<TransmissionRecord>, SchemeError> {
    deliver(deployment, demands, Tamper::None)
}

pub fn memory_keyless(users: u32, files: u32) -> Rational {
    int(files as i64 * (users as i64 - 1))
}

pub fn rate_keyless(users: u32) -> Rational {
    rat(users as i64, users as i64 - 1)
}

/// Transmitted symbols divided by file symbols.
pub fn measured_rate(geometry: &Geometry, records: &[TransmissionRecord]) -> Rational {
    if geometry.symbols_per_file() == 0 {
        return Rational::zero();
    }
    rat(records.len() as i64, geometry.symbols_per_file() as i64)
}

/// Stored symbols divided by file symbols.
pub fn measured_memory(geometry: &Geometry, cache: &CacheContent) -> Rational {
    rat(cache.symbol_count() as i64, geometry.symbols_per_file() as i64)
}
