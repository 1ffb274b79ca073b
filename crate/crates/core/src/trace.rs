//! JSON documents exchanged between runs and the auditor.

use serde::{Deserialize, Serialize};

use crate::centralized::{measured_memory, measured_rate, memory_at, memory_keyless, rate_centralized, rate_keyless};
use crate::decentralized::{memory_dec, rate_dec_enumerated, rate_dec_formula, stage_rates};
use crate::decode::DecodeEntry;
use crate::harness::ExperimentConfig;
use crate::model::{CacheContent, Deployment, Geometry, Library, SchemeKind, TransmissionRecord};
use crate::rational::{int, rat, Rational};
use crate::secrecy::SecrecyReport;

pub const SCHEMA_VERSION: u32 = 1;

/// Output of the placement phase alone.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlacementDocument {
    pub schema_version: u32,
    pub config: ExperimentConfig,
    pub geometry: Geometry,
    /// One hex string per file, blocks back to back.
    pub library: Vec<String>,
    pub randomness_digest: String,
    pub caches: Vec<CacheContent>,
}

impl PlacementDocument {
    pub fn new(config: &ExperimentConfig, deployment: &Deployment) -> Self {
        PlacementDocument {
            schema_version: SCHEMA_VERSION,
            config: config.clone(),
            geometry: deployment.geometry.clone(),
            library: deployment.library.to_hex(),
            randomness_digest: deployment.randomness_digest.clone(),
            caches: deployment.caches.clone(),
        }
    }

    pub fn deployment(&self) -> Result<Deployment, String> {
        deployment_from_parts(&self.geometry, &self.library, &self.randomness_digest, &self.caches)
    }
}

fn deployment_from_parts(
    geometry: &Geometry,
    library: &[String],
    digest: &str,
    caches: &[CacheContent],
) -> Result<Deployment, String> {
    let library = Library::from_hex(geometry.secret_len(), library)?;
    if library.files.len() != geometry.files as usize {
        return Err(format!("library lists {} files, geometry has {}", library.files.len(), geometry.files));
    }
    if let Some(f) = library.files.iter().position(|f| f.len() != geometry.symbols_per_file()) {
        return Err(format!("file {} has the wrong number of symbols", f + 1));
    }
    for (i, c) in caches.iter().enumerate() {
        if c.user as usize != i + 1 {
            return Err(format!("cache listing {i} belongs to user {}", c.user));
        }
    }
    Ok(Deployment {
        geometry: geometry.clone(),
        library,
        caches: caches.to_vec(),
        randomness_digest: digest.to_string(),
        randomness: None,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageRate {
    pub stage: u32,
    #[serde(with = "crate::rational::serde_str")]
    pub measured: Rational,
    #[serde(with = "crate::rational::serde_str")]
    pub formula: Rational,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateSummary {
    #[serde(with = "crate::rational::serde_str")]
    pub measured: Rational,
    pub measured_f64: f64,
    /// Exact rate of the scheme at this corner.
    #[serde(with = "crate::rational::serde_str")]
    pub formula: Rational,
    /// Literal closed-form sum, where it differs in form from `formula`.
    #[serde(with = "crate::rational::serde_opt_str", default)]
    pub closed_form_literal: Option<Rational>,
    /// `measured - closed_form_literal` when nonzero.
    #[serde(with = "crate::rational::serde_opt_str", default)]
    pub literal_discrepancy: Option<Rational>,
    pub stages: Vec<StageRate>,
    #[serde(with = "crate::rational::serde_str")]
    pub memory_formula: Rational,
    /// Largest per-user storage, normalized by file size.
    #[serde(with = "crate::rational::serde_str")]
    pub memory_measured: Rational,
}

impl RateSummary {
    pub fn compute(geometry: &Geometry, caches: &[CacheContent], records: &[TransmissionRecord]) -> Self {
        let (k, n, t) = (geometry.users, geometry.files, geometry.t);
        let measured = measured_rate(geometry, records);
        let memory_measured = caches
            .iter()
            .map(|c| measured_memory(geometry, c))
            .max()
            .unwrap_or_else(|| int(0));
        let per_stage = stage_rates(geometry, records);
        let (formula, literal, memory_formula, stage_formula): (_, _, _, Box<dyn Fn(u32) -> Rational>) =
            match geometry.scheme {
                SchemeKind::Centralized => {
                    let r = rate_centralized(k, t);
                    (r.clone(), None, memory_at(k, n, t), Box::new(move |_| r.clone()))
                }
                SchemeKind::Keyless => {
                    let r = rate_keyless(k);
                    (r.clone(), None, memory_keyless(k, n), Box::new(move |_| r.clone()))
                }
                SchemeKind::Decentralized => {
                    let l = geometry.universe;
                    let groups = geometry.groups();
                    let total = rate_dec_enumerated(k, l, t);
                    let regular = rat(l as i64, t as i64);
                    let last = &total - &regular * int(groups as i64 - 1);
                    (
                        total,
                        Some(rate_dec_formula(k, l, t)),
                        memory_dec(l, n, t),
                        Box::new(move |s| if s < groups { regular.clone() } else { last.clone() }),
                    )
                }
            };
        let literal_discrepancy = literal.as_ref().map(|l| &measured - l).filter(|d| d != &int(0));
        RateSummary {
            measured_f64: crate::rational::to_f64(&measured),
            measured,
            formula,
            closed_form_literal: literal,
            literal_discrepancy,
            stages: per_stage
                .into_iter()
                .map(|(stage, measured)| StageRate { stage, measured, formula: stage_formula(stage) })
                .collect(),
            memory_formula,
            memory_measured,
        }
    }

    /// Rates that must hold exactly: the total for corner schemes and every
    /// regular stage for the decentralized scheme.
    pub fn authoritative_mismatches(&self, geometry: &Geometry) -> Vec<String> {
        let mut out = Vec::new();
        match geometry.scheme {
            SchemeKind::Centralized | SchemeKind::Keyless => {
                if self.measured != self.formula {
                    out.push(format!(
                        "measured rate {} differs from {}",
                        crate::rational::render(&self.measured),
                        crate::rational::render(&self.formula)
                    ));
                }
            }
            SchemeKind::Decentralized => {
                for s in self.stages.iter().filter(|s| s.stage < geometry.groups()) {
                    if s.measured != s.formula {
                        out.push(format!(
                            "stage {} measured {} instead of {}",
                            s.stage,
                            crate::rational::render(&s.measured),
                            crate::rational::render(&s.formula)
                        ));
                    }
                }
            }
        }
        out
    }
}

/// Complete record of one run, sufficient for an independent audit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceDocument {
    pub schema_version: u32,
    pub config: ExperimentConfig,
    pub geometry: Geometry,
    pub demands: Vec<u32>,
    pub library: Vec<String>,
    pub randomness_digest: String,
    pub caches: Vec<CacheContent>,
    pub transmissions: Vec<TransmissionRecord>,
    pub decode: Vec<DecodeEntry>,
    pub secrecy: SecrecyReport,
    pub rates: RateSummary,
    /// Verdicts allowed to fail for this scheme.
    pub expected_failures: Vec<String>,
    pub failures: Vec<String>,
    pub success: bool,
}

impl TraceDocument {
    pub fn deployment(&self) -> Result<Deployment, String> {
        deployment_from_parts(&self.geometry, &self.library, &self.randomness_digest, &self.caches)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("trace serializes") + "\n"
    }
}
