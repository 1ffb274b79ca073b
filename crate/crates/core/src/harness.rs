//! Seeded end-to-end runs and independent trace audits.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::centralized::{self, keyless_params, memory_keyless, t_from_memory, SystemParams};
use crate::decentralized::{self, memory_dec, DecentralizedParams};
use crate::decode::{decode_all, DecodeEntry};
use crate::gf::{FieldSpec, Symbol};
use crate::model::{
    symbol_hex, worst_case_demands, Deployment, Geometry, Label, SchemeError, SchemeKind, Tamper,
    TransmissionRecord,
};
use crate::rational::{render, Rational};
use crate::secrecy::{verify_secrecy, AuditError, SecrecyReport};
use crate::trace::{RateSummary, TraceDocument, SCHEMA_VERSION};

pub const DEFAULT_FIELD_BITS: u32 = 16;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{stage} failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: SchemeError,
    },
    #[error("secrecy audit failed: {0}")]
    Audit(#[from] AuditError),
    #[error("malformed document: {0}")]
    Document(String),
}

fn stage(stage: &'static str) -> impl FnOnce(SchemeError) -> HarnessError {
    move |source| HarnessError::Stage { stage, source }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DemandMode {
    #[default]
    WorstCase,
    Explicit(Vec<u32>),
}

impl FromStr for DemandMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "worst-case" | "worst_case" => Ok(DemandMode::WorstCase),
            list => list
                .split(',')
                .map(|x| x.trim().parse::<u32>().map_err(|e| format!("bad demand {x:?}: {e}")))
                .collect::<Result<Vec<_>, _>>()
                .map(DemandMode::Explicit),
        }
    }
}

impl fmt::Display for DemandMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DemandMode::WorstCase => f.write_str("worst-case"),
            DemandMode::Explicit(v) => {
                let parts: Vec<String> = v.iter().map(u32::to_string).collect();
                f.write_str(&parts.join(","))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub scheme: SchemeKind,
    pub users: u32,
    pub files: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<u32>,
    #[serde(
        with = "crate::rational::serde_opt_str",
        default,
        skip_serializing_if = "Option::is_none"
    )]
    pub memory: Option<Rational>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slots: Option<u32>,
    pub field_bits: u32,
    pub blocks: u32,
    pub seed: u64,
    pub demands: DemandMode,
}

/// A configuration checked against every scheme precondition.
#[derive(Debug, Clone)]
pub enum ValidatedConfig {
    Centralized(SystemParams),
    Keyless(SystemParams),
    Decentralized(DecentralizedParams),
}

impl ValidatedConfig {
    pub fn geometry(&self) -> Geometry {
        match self {
            ValidatedConfig::Centralized(p) => p.geometry(),
            ValidatedConfig::Keyless(p) => {
                let mut g = p.geometry();
                g.scheme = SchemeKind::Keyless;
                g
            }
            ValidatedConfig::Decentralized(p) => p.geometry(),
        }
    }
}

impl ExperimentConfig {
    fn base(scheme: SchemeKind, users: u32, files: u32) -> Self {
        ExperimentConfig {
            scheme,
            users,
            files,
            t: None,
            memory: None,
            slots: None,
            field_bits: DEFAULT_FIELD_BITS,
            blocks: 1,
            seed: 0,
            demands: DemandMode::WorstCase,
        }
    }

    pub fn centralized(users: u32, files: u32, t: u32) -> Self {
        ExperimentConfig { t: Some(t), ..Self::base(SchemeKind::Centralized, users, files) }
    }

    pub fn keyless(users: u32, files: u32) -> Self {
        Self::base(SchemeKind::Keyless, users, files)
    }

    pub fn decentralized(users: u32, slots: u32, t: u32, files: u32) -> Self {
        ExperimentConfig {
            t: Some(t),
            slots: Some(slots),
            ..Self::base(SchemeKind::Decentralized, users, files)
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_field_bits(mut self, bits: u32) -> Self {
        self.field_bits = bits;
        self
    }

    pub fn with_blocks(mut self, blocks: u32) -> Self {
        self.blocks = blocks;
        self
    }

    pub fn with_demands(mut self, demands: DemandMode) -> Self {
        self.demands = demands;
        self
    }

    fn resolve_t(&self, from_memory: impl Fn(&Rational) -> Option<u32>, corners: &str) -> Result<u32, HarnessError> {
        match (self.t, &self.memory) {
            (Some(t), None) => Ok(t),
            (None, Some(m)) => from_memory(m).ok_or_else(|| {
                HarnessError::Config(format!("M={} is not a corner point ({corners})", render(m)))
            }),
            (Some(t), Some(m)) => match from_memory(m) {
                Some(tm) if tm == t => Ok(t),
                _ => Err(HarnessError::Config(format!("t={t} and M={} disagree", render(m)))),
            },
            (None, None) => Err(HarnessError::Config("one of t or M is required".into())),
        }
    }

    pub fn validate(&self) -> Result<ValidatedConfig, HarnessError> {
        let field = FieldSpec::new(self.field_bits).map_err(|e| HarnessError::Config(e.to_string()))?;
        let (k, n) = (self.users, self.files);
        if self.slots.is_some() && self.scheme != SchemeKind::Decentralized {
            return Err(HarnessError::Config("L applies to the decentralized scheme only".into()));
        }
        let validated = match self.scheme {
            SchemeKind::Centralized => {
                let t = self.resolve_t(
                    |m| t_from_memory(k, n, m),
                    "corners are Nt/(K-t) + 1/t + 1 for t in 1..K",
                )?;
                ValidatedConfig::Centralized(
                    SystemParams::with_field(k, n, t, self.blocks, field).map_err(stage("configuration"))?,
                )
            }
            SchemeKind::Keyless => {
                if k < 2 {
                    return Err(HarnessError::Config("need at least 2 users".into()));
                }
                if self.t.is_some_and(|t| t != k - 1) {
                    return Err(HarnessError::Config("the keyless scheme runs at t = K-1".into()));
                }
                if let Some(m) = &self.memory {
                    if m != &memory_keyless(k, n) {
                        return Err(HarnessError::Config(format!(
                            "the keyless scheme stores M = N(K-1) = {}",
                            render(&memory_keyless(k, n))
                        )));
                    }
                }
                ValidatedConfig::Keyless(keyless_params(k, n, self.blocks, field).map_err(stage("configuration"))?)
            }
            SchemeKind::Decentralized => {
                let l = self
                    .slots
                    .ok_or_else(|| HarnessError::Config("the decentralized scheme needs L".into()))?;
                let t = self.resolve_t(
                    |m| (1..l).find(|&t| &memory_dec(l, n, t) == m),
                    "corners are Nt/(L-t) + 2/t + 1 for t in 1..L",
                )?;
                ValidatedConfig::Decentralized(
                    DecentralizedParams::with_field(k, l, t, n, self.blocks, field)
                        .map_err(stage("configuration"))?,
                )
            }
        };
        let demands = self.demand_vector();
        validated
            .geometry()
            .validate_demands(&demands)
            .map_err(stage("configuration"))?;
        Ok(validated)
    }

    pub fn demand_vector(&self) -> Vec<u32> {
        match &self.demands {
            DemandMode::WorstCase => worst_case_demands(self.users),
            DemandMode::Explicit(v) => v.clone(),
        }
    }
}

pub fn place(config: &ExperimentConfig) -> Result<Deployment, HarnessError> {
    match config.validate()? {
        ValidatedConfig::Centralized(p) => centralized::place(&p, config.seed),
        ValidatedConfig::Keyless(p) => centralized::place_keyless(&p, config.seed),
        ValidatedConfig::Decentralized(p) => decentralized::place_dec(&p, config.seed),
    }
    .map_err(stage("placement"))
}

pub fn deliver(
    deployment: &Deployment,
    demands: &[u32],
    tamper: Tamper,
) -> Result<Vec<TransmissionRecord>, HarnessError> {
    match deployment.geometry.scheme {
        SchemeKind::Centralized | SchemeKind::Keyless => centralized::deliver(deployment, demands, tamper),
        SchemeKind::Decentralized => decentralized::deliver_dec(deployment, demands, tamper),
    }
    .map_err(stage("delivery"))
}

/// Verdicts that do not count against a run of this scheme.
pub fn expected_failures(scheme: SchemeKind) -> Vec<String> {
    match scheme {
        SchemeKind::Keyless => vec!["secure_delivery".to_string()],
        _ => Vec::new(),
    }
}

fn evaluate(
    geometry: &Geometry,
    decode: &[DecodeEntry],
    secrecy: &SecrecyReport,
    rates: &RateSummary,
) -> Vec<String> {
    let mut failures = Vec::new();
    for d in decode.iter().filter(|d| !d.bit_exact) {
        let why = d.error.as_deref().unwrap_or("payload differs from the library");
        failures.push(format!("user {} did not decode file {}: {why}", d.user, d.file));
    }
    for v in secrecy.caching.iter().filter(|v| !v.pass) {
        let witness = v.witness_file.map(|f| format!(" (witness file {f})")).unwrap_or_default();
        failures.push(format!("secure caching FAIL for user {}{witness}", v.user));
    }
    if !secrecy.delivery.pass && !expected_failures(geometry.scheme).iter().any(|e| e == "secure_delivery") {
        let witness = secrecy
            .delivery
            .witness_file
            .map(|f| format!(" (witness file {f})"))
            .unwrap_or_default();
        failures.push(format!("secure delivery FAIL{witness}"));
    }
    failures.extend(rates.authoritative_mismatches(geometry));
    failures
}

/// Decode, audit and measure a delivered schedule.
pub fn assemble(
    config: &ExperimentConfig,
    deployment: &Deployment,
    demands: &[u32],
    records: Vec<TransmissionRecord>,
) -> Result<TraceDocument, HarnessError> {
    let decode = decode_all(deployment, &records, demands).map_err(stage("decoding"))?;
    let secrecy = verify_secrecy(deployment, &records, demands)?;
    let rates = RateSummary::compute(&deployment.geometry, &deployment.caches, &records);
    let failures = evaluate(&deployment.geometry, &decode, &secrecy, &rates);
    Ok(TraceDocument {
        schema_version: SCHEMA_VERSION,
        config: config.clone(),
        geometry: deployment.geometry.clone(),
        demands: demands.to_vec(),
        library: deployment.library.to_hex(),
        randomness_digest: deployment.randomness_digest.clone(),
        caches: deployment.caches.clone(),
        transmissions: records,
        decode,
        secrecy,
        rates,
        expected_failures: expected_failures(deployment.geometry.scheme),
        success: failures.is_empty(),
        failures,
    })
}

pub fn run_with_tamper(config: &ExperimentConfig, tamper: Tamper) -> Result<TraceDocument, HarnessError> {
    let deployment = place(config)?;
    let demands = config.demand_vector();
    let records = deliver(&deployment, &demands, tamper)?;
    assemble(config, &deployment, &demands, records)
}

pub fn run_e2e(config: &ExperimentConfig) -> Result<TraceDocument, HarnessError> {
    run_with_tamper(config, Tamper::None)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditIssue {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub record: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub user: Option<u32>,
    pub message: String,
}

impl fmt::Display for AuditIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(r) = self.record {
            write!(f, "record {r}: ")?;
        } else if let Some(u) = self.user {
            write!(f, "user {u}: ")?;
        }
        f.write_str(&self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub first_inconsistent_record: Option<usize>,
    pub issues: Vec<AuditIssue>,
    pub decode: Vec<DecodeEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub secrecy: Option<SecrecyReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rates: Option<RateSummary>,
    /// Success status recomputed from scratch.
    pub run_success: bool,
}

#[derive(Default)]
struct Issues(Vec<AuditIssue>);

impl Issues {
    fn record(&mut self, record: usize, message: String) {
        self.0.push(AuditIssue { record: Some(record), user: None, message });
    }

    fn user(&mut self, user: u32, message: String) {
        self.0.push(AuditIssue { record: None, user: Some(user), message });
    }

    fn general(&mut self, message: String) {
        self.0.push(AuditIssue { record: None, user: None, message });
    }
}

fn check_caches(deployment: &Deployment, issues: &mut Issues) {
    let g = &deployment.geometry;
    let layout = g.layout();
    let mut seen: BTreeMap<&Label, (u32, Symbol)> = BTreeMap::new();
    for c in &deployment.caches {
        for (label, &v) in &c.items {
            if let Label::Share(s) = label {
                let valid = s.file >= 1
                    && s.file <= g.files
                    && s.block < g.blocks
                    && layout.share_index(&s.set, s.replica).is_some();
                if !valid {
                    issues.user(c.user, format!("cache holds unknown label {label}"));
                    continue;
                }
            }
            match seen.get(label) {
                Some(&(u, w)) if w != v => issues.user(
                    c.user,
                    format!(
                        "{label} is {} here but {} in user {u}'s cache",
                        symbol_hex::encode(v),
                        symbol_hex::encode(w)
                    ),
                ),
                Some(_) => {}
                None => {
                    seen.insert(label, (c.user, v));
                }
            }
        }
    }
    let Ok(ramp) = g.ramp() else {
        issues.general("geometry does not describe a valid ramp scheme".into());
        return;
    };
    for file in 1..=g.files {
        for block in 0..g.blocks {
            let mut shares = Vec::with_capacity(g.ramp_n);
            for idx in 0..layout.share_count() {
                let (set, replica) = layout.set_of_index(idx);
                let label = Label::share(file, set.clone(), replica, block);
                match seen.get(&label) {
                    Some(&(_, v)) => shares.push(v),
                    None => {
                        issues.general(format!("{label} is cached by no user"));
                        break;
                    }
                }
            }
            if shares.len() == g.ramp_n
                && ramp.reconstruct(&shares).ok().as_deref() != Some(deployment.library.block(file, block))
            {
                issues.general(format!("cached shares of file {file} block {block} do not match the library"));
            }
        }
    }
}

fn check_records(deployment: &Deployment, records: &[TransmissionRecord], issues: &mut Issues) {
    for (i, r) in records.iter().enumerate() {
        let Some(cache) = deployment.cache(r.sender) else {
            issues.record(i, format!("unknown sender {}", r.sender));
            continue;
        };
        if r.composition.is_empty() {
            issues.record(i, "no composition metadata".into());
            continue;
        }
        let mut acc: Symbol = 0;
        let mut feasible = true;
        for label in &r.composition {
            match cache.items.get(label) {
                Some(v) => acc ^= v,
                None => {
                    issues.record(i, format!("sender {} does not hold {label}", r.sender));
                    feasible = false;
                    break;
                }
            }
        }
        if feasible && acc != r.payload {
            issues.record(
                i,
                format!(
                    "payload {} differs from the XOR {} of its composition",
                    symbol_hex::encode(r.payload),
                    symbol_hex::encode(acc)
                ),
            );
        }
    }
}

/// Re-derive every verdict of a trace from its contents alone.
pub fn verify_trace(doc: &TraceDocument) -> AuditReport {
    let mut issues = Issues::default();
    let fail = |issues: Issues| AuditReport {
        pass: false,
        first_inconsistent_record: issues.0.iter().filter_map(|i| i.record).min(),
        issues: issues.0,
        decode: Vec::new(),
        secrecy: None,
        rates: None,
        run_success: false,
    };
    if doc.schema_version != SCHEMA_VERSION {
        issues.general(format!("unsupported schema version {}", doc.schema_version));
        return fail(issues);
    }
    match doc.config.validate() {
        Ok(v) if v.geometry() == doc.geometry => {}
        Ok(_) => issues.general("geometry does not match the configuration".into()),
        Err(e) => issues.general(e.to_string()),
    }
    if doc.demands != doc.config.demand_vector() {
        issues.general("demands do not match the configuration".into());
    }
    let deployment = match doc.deployment() {
        Ok(d) => d,
        Err(e) => {
            issues.general(e);
            return fail(issues);
        }
    };
    if deployment.caches.len() != doc.geometry.users as usize {
        issues.general(format!("{} cache listings for {} users", deployment.caches.len(), doc.geometry.users));
        return fail(issues);
    }
    check_caches(&deployment, &mut issues);
    check_records(&deployment, &doc.transmissions, &mut issues);

    let decode = match decode_all(&deployment, &doc.transmissions, &doc.demands) {
        Ok(d) => d,
        Err(e) => {
            issues.general(format!("decoding: {e}"));
            return fail(issues);
        }
    };
    if decode != doc.decode {
        issues.general("recorded decode results differ from a fresh decode".into());
    }
    let secrecy = match verify_secrecy(&deployment, &doc.transmissions, &doc.demands) {
        Ok(s) => s,
        Err(e) => {
            let index = match e {
                AuditError::MissingComposition { index, .. } => Some(index),
                _ => None,
            };
            issues.0.push(AuditIssue { record: index, user: None, message: e.to_string() });
            return fail(issues);
        }
    };
    if secrecy != doc.secrecy {
        issues.general("recorded secrecy verdicts differ from a fresh audit".into());
    }
    let rates = RateSummary::compute(&deployment.geometry, &deployment.caches, &doc.transmissions);
    if rates != doc.rates {
        issues.general("recorded rates differ from the schedule".into());
    }
    let failures = evaluate(&deployment.geometry, &decode, &secrecy, &rates);
    if failures != doc.failures || doc.success != failures.is_empty() {
        issues.general("recorded success status differs from the recomputed one".into());
    }
    AuditReport {
        pass: issues.0.is_empty(),
        first_inconsistent_record: issues.0.iter().filter_map(|i| i.record).min(),
        issues: issues.0,
        decode,
        secrecy: Some(secrecy),
        rates: Some(rates),
        run_success: failures.is_empty(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, rat};

    #[test]
    fn golden_run_succeeds() {
        let doc = run_e2e(&ExperimentConfig::centralized(4, 4, 2)).unwrap();
        assert!(doc.success, "{:?}", doc.failures);
        assert_eq!(doc.rates.measured, int(2));
        assert_eq!(doc.rates.memory_measured, rat(11, 2));
        assert!(verify_trace(&doc).pass);
    }

    #[test]
    fn memory_selects_the_corner() {
        let mut c = ExperimentConfig::centralized(4, 4, 2);
        c.t = None;
        c.memory = Some(rat(11, 2));
        assert!(matches!(c.validate().unwrap(), ValidatedConfig::Centralized(p) if p.t == 2));
        c.memory = Some(int(5));
        assert!(matches!(c.validate(), Err(HarnessError::Config(_))));
    }

    #[test]
    fn invalid_configs_are_rejected() {
        assert!(ExperimentConfig::centralized(4, 3, 2).validate().is_err());
        assert!(ExperimentConfig::centralized(4, 4, 4).validate().is_err());
        assert!(ExperimentConfig::centralized(4, 4, 2).with_field_bits(2).validate().is_err());
        assert!(ExperimentConfig::centralized(4, 4, 2).with_field_bits(17).validate().is_err());
        assert!(ExperimentConfig::centralized(4, 4, 2)
            .with_demands(DemandMode::Explicit(vec![1, 2, 5, 1]))
            .validate()
            .is_err());
        let mut k = ExperimentConfig::keyless(4, 4);
        k.t = Some(2);
        assert!(k.validate().is_err());
        let mut d = ExperimentConfig::decentralized(13, 5, 2, 13);
        d.slots = None;
        assert!(d.validate().is_err());
    }

    #[test]
    fn keyless_delivery_is_annotated_not_fatal() {
        let doc = run_e2e(&ExperimentConfig::keyless(3, 3).with_field_bits(8)).unwrap();
        assert_eq!(doc.expected_failures, vec!["secure_delivery".to_string()]);
        assert!(doc.success, "{:?}", doc.failures);
    }

    #[test]
    fn sabotage_fails_the_run() {
        let cfg = ExperimentConfig::centralized(3, 3, 1).with_field_bits(8);
        let doc = run_with_tamper(&cfg, Tamper::ZeroKeys).unwrap();
        assert!(!doc.success);
        assert!(doc.failures.iter().any(|f| f.contains("secure caching FAIL")));
    }

    #[test]
    fn demand_mode_parsing() {
        assert_eq!("worst-case".parse::<DemandMode>().unwrap(), DemandMode::WorstCase);
        assert_eq!("1, 1,2".parse::<DemandMode>().unwrap(), DemandMode::Explicit(vec![1, 1, 2]));
        assert!("1,x".parse::<DemandMode>().is_err());
        assert_eq!(DemandMode::Explicit(vec![3, 1]).to_string(), "3,1");
    }
}
