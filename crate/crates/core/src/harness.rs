//! Inclusion and equality laws between the summability methods, checked per
//! (modulus, theta, sequence) instance at finite horizons.

use std::collections::HashMap;
use std::fmt;
use std::hash::Hash;
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex, OnceLock};

use serde::Serialize;

use crate::catalog::{parse_blocks, Catalog, ResolvedSequence, SequenceEntry, SequenceFamily};
use crate::convergence::{
    cesaro_from_blocks, lacunary_block_sums, statistical_from_blocks, test_statistical_with,
    test_strong_cesaro_with, test_uniform_integrability_with, BlockResidual, Normalization,
};
use crate::counterexamples::{CounterexampleKind, WitnessedSequence};
use crate::error::{Error, Result};
use crate::estimate::{Evidence, LimitEstimate, Method, Status, Thresholds, Verdict};
use crate::format::fmt_num;
use crate::lacunary::LacunaryTheta;
use crate::modulus::{classify_compatibility, default_eps_grid, Compatibility, ModulusSpec};

pub const REPORT_HEADER: &str =
    "Per-instance finite-horizon checks. A Consistent table is evidence, not proof: \
     each law is tested on the listed instances only, at the listed horizons.";

/// Horizon for compatibility classification and witness searches.
pub const CLASSIFY_HORIZON: u64 = 1_000_000;
const RATIO_BLOCKS: usize = 1000;
const LIMINF_ABOVE_ONE: f64 = 1.05;
const LIMINF_AT_ONE: f64 = 1.01;
const UI_GRID: [f64; 4] = [1.0, 10.0, 100.0, 1000.0];
const UI_MIN_BLOCKS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum LawId {
    #[serde(rename = "N_theta_f_subset_N_theta")]
    NThetaFSubsetNTheta,
    #[serde(rename = "S_theta_eq_S_theta_f")]
    SThetaEqSThetaF,
    #[serde(rename = "N_theta_f_eq_N_theta")]
    NThetaFEqNTheta,
    #[serde(rename = "converse_theta_compat_stat")]
    ConverseThetaCompatStat,
    #[serde(rename = "converse_theta_compat_cesaro")]
    ConverseThetaCompatCesaro,
    #[serde(rename = "N_theta_f_subset_S_theta_f")]
    NThetaFSubsetSThetaF,
    #[serde(rename = "KhanOrhan_forward")]
    IntegrableForward,
    #[serde(rename = "KhanOrhan_converse")]
    IntegrableConverse,
    #[serde(rename = "P5_liminf_forward")]
    LiminfForward,
    #[serde(rename = "P5_liminf_converse")]
    LiminfConverse,
    #[serde(rename = "P5_limsup_forward")]
    LimsupForward,
    #[serde(rename = "P5_limsup_converse")]
    LimsupConverse,
    #[serde(rename = "Corollary_ratio_iff")]
    CorollaryRatioIff,
}

impl LawId {
    pub const ALL: [LawId; 13] = [
        LawId::NThetaFSubsetNTheta,
        LawId::SThetaEqSThetaF,
        LawId::NThetaFEqNTheta,
        LawId::ConverseThetaCompatStat,
        LawId::ConverseThetaCompatCesaro,
        LawId::NThetaFSubsetSThetaF,
        LawId::IntegrableForward,
        LawId::IntegrableConverse,
        LawId::LiminfForward,
        LawId::LiminfConverse,
        LawId::LimsupForward,
        LawId::LimsupConverse,
        LawId::CorollaryRatioIff,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            LawId::NThetaFSubsetNTheta => "N_theta_f_subset_N_theta",
            LawId::SThetaEqSThetaF => "S_theta_eq_S_theta_f",
            LawId::NThetaFEqNTheta => "N_theta_f_eq_N_theta",
            LawId::ConverseThetaCompatStat => "converse_theta_compat_stat",
            LawId::ConverseThetaCompatCesaro => "converse_theta_compat_cesaro",
            LawId::NThetaFSubsetSThetaF => "N_theta_f_subset_S_theta_f",
            LawId::IntegrableForward => "KhanOrhan_forward",
            LawId::IntegrableConverse => "KhanOrhan_converse",
            LawId::LiminfForward => "P5_liminf_forward",
            LawId::LiminfConverse => "P5_liminf_converse",
            LawId::LimsupForward => "P5_limsup_forward",
            LawId::LimsupConverse => "P5_limsup_converse",
            LawId::CorollaryRatioIff => "Corollary_ratio_iff",
        }
    }

    /// Laws exercised by a dedicated separating construction.
    pub fn paired_construction(&self) -> Option<CounterexampleKind> {
        match self {
            LawId::ConverseThetaCompatStat | LawId::ConverseThetaCompatCesaro => {
                Some(CounterexampleKind::Reciproco)
            }
            LawId::IntegrableConverse => Some(CounterexampleKind::Th3),
            LawId::LiminfConverse => Some(CounterexampleKind::SparseBlocks),
            LawId::LimsupConverse => Some(CounterexampleKind::Gap),
            _ => None,
        }
    }

    /// Hypothesis on (f, theta), as text.
    pub fn hypothesis(&self) -> &'static str {
        match self {
            LawId::NThetaFSubsetNTheta | LawId::NThetaFSubsetSThetaF => "none",
            LawId::SThetaEqSThetaF | LawId::NThetaFEqNTheta | LawId::IntegrableForward => {
                "f theta-compatible"
            }
            LawId::ConverseThetaCompatStat
            | LawId::ConverseThetaCompatCesaro
            | LawId::IntegrableConverse => "f not theta-compatible",
            LawId::LiminfForward => "liminf q_r > 1",
            LawId::LiminfConverse => "f compatible and liminf q_r = 1",
            LawId::LimsupForward => "f compatible and limsup q_r < inf",
            LawId::LimsupConverse => "f theta-compatible and limsup q_r = inf",
            LawId::CorollaryRatioIff => "f compatible",
        }
    }

    pub fn claim(&self) -> &'static str {
        match self {
            LawId::NThetaFSubsetNTheta => "N_theta^f => N_theta",
            LawId::SThetaEqSThetaF => "S_theta <=> S_theta^f",
            LawId::NThetaFEqNTheta => "N_theta^f <=> N_theta",
            LawId::ConverseThetaCompatStat => "some x in S_theta \\ S_theta^f",
            LawId::ConverseThetaCompatCesaro => "some x in N_theta \\ N_theta^f",
            LawId::NThetaFSubsetSThetaF => "N_theta^f => S_theta^f",
            LawId::IntegrableForward => "S_theta^f and I_theta => N_theta^f",
            LawId::IntegrableConverse => "some x in S_theta^f and I_theta, not in N_theta^f",
            LawId::LiminfForward => "N^f => N_theta^f",
            LawId::LiminfConverse => "some x in N^f \\ N_theta^f",
            LawId::LimsupForward => "N_theta^f => N^f",
            LawId::LimsupConverse => "some x in N_theta^f \\ N^f",
            LawId::CorollaryRatioIff => "N_theta^f <=> N^f iff 1 < liminf q_r <= limsup q_r < inf",
        }
    }

    /// Laws of the form A => B, whose consequent can be swapped for a self-test.
    pub fn swappable(&self) -> bool {
        matches!(
            self,
            LawId::NThetaFSubsetNTheta
                | LawId::NThetaFSubsetSThetaF
                | LawId::IntegrableForward
                | LawId::LiminfForward
                | LawId::LimsupForward
        )
    }
}

impl fmt::Display for LawId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LawId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        LawId::ALL
            .iter()
            .copied()
            .find(|l| l.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::UnknownLaw(s.trim().to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct InclusionLaw {
    pub id: LawId,
    /// Antecedent and consequent swapped.
    pub corrupted: bool,
}

impl InclusionLaw {
    pub fn new(id: LawId) -> Self {
        Self {
            id,
            corrupted: false,
        }
    }

    pub fn corrupted(id: LawId) -> Result<Self> {
        if !id.swappable() {
            return Err(Error::BadConfig(format!(
                "law {id} has no consequent to swap"
            )));
        }
        Ok(Self {
            id,
            corrupted: true,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Truth {
    True,
    False,
    Unknown,
}

impl Truth {
    fn and(self, o: Truth) -> Truth {
        match (self, o) {
            (Truth::False, _) | (_, Truth::False) => Truth::False,
            (Truth::True, Truth::True) => Truth::True,
            _ => Truth::Unknown,
        }
    }

    fn not(self) -> Truth {
        match self {
            Truth::True => Truth::False,
            Truth::False => Truth::True,
            Truth::Unknown => Truth::Unknown,
        }
    }

    fn from_compat(c: Compatibility) -> Truth {
        match c {
            Compatibility::Compatible => Truth::True,
            Compatibility::Incompatible => Truth::False,
            Compatibility::Unknown => Truth::Unknown,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum LawStatus {
    Consistent,
    Violated,
    Inconclusive,
}

impl fmt::Display for LawStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LawStatus::Consistent => "Consistent",
            LawStatus::Violated => "Violated",
            LawStatus::Inconclusive => "Inconclusive",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComponentSummary {
    pub label: String,
    pub status: Status,
    pub certified: bool,
    pub value: f64,
    pub prior: f64,
    pub limsup_prior: f64,
    pub plateau: bool,
    pub horizon: u64,
}

impl ComponentSummary {
    fn of(label: &str, v: &Verdict) -> Self {
        let e = headline(v);
        Self {
            label: label.to_string(),
            status: v.status,
            certified: v.certified,
            value: e.value,
            prior: e.prior,
            limsup_prior: e.limsup_prior,
            plateau: e.plateau,
            horizon: e.horizon,
        }
    }
}

/// The evidence entry with the largest estimate (first on ties).
fn headline(v: &Verdict) -> &LimitEstimate {
    let mut best = &v.evidence[0].estimate;
    for e in &v.evidence[1..] {
        if e.estimate.value > best.value {
            best = &e.estimate;
        }
    }
    best
}

#[derive(Debug, Clone, Serialize)]
pub struct TheoremVerdict {
    pub law: LawId,
    pub corrupted: bool,
    pub modulus: String,
    pub theta: String,
    pub sequence: String,
    pub horizon: u64,
    pub hypothesis: Truth,
    pub status: LawStatus,
    pub note: String,
    pub evidence: Vec<ComponentSummary>,
    #[serde(skip)]
    pub verdicts: Vec<(String, Arc<Verdict>)>,
}

type Shared<V> = Arc<OnceLock<V>>;

struct Memo<K, V> {
    map: Mutex<HashMap<K, Shared<V>>>,
}

impl<K: Eq + Hash, V: Clone> Memo<K, V> {
    fn new() -> Self {
        Self {
            map: Mutex::new(HashMap::new()),
        }
    }

    fn get(&self, key: K, init: impl FnOnce() -> V) -> V {
        let cell = {
            let mut m = self.map.lock().unwrap_or_else(|e| e.into_inner());
            m.entry(key).or_default().clone()
        };
        cell.get_or_init(init).clone()
    }
}

type VerdictKey = (String, String, Method, Option<String>, u64);

/// Caches shared between law checks: block scans, verdicts, hypotheses and
/// constructions are computed once per key.
pub struct Lab {
    th: Thresholds,
    blocks: Memo<(String, String, u64), Arc<Vec<BlockResidual>>>,
    verdicts: Memo<VerdictKey, Arc<Verdict>>,
    integrability: Memo<(String, String, u64), Arc<Verdict>>,
    compat: Memo<(String, Option<String>), Compatibility>,
    constructions: Memo<(String, String, String), std::result::Result<ResolvedSequence, String>>,
}

fn seq_key(s: &ResolvedSequence) -> String {
    format!("{}|L={}", s.seq.name(), s.seq.limit())
}

impl Lab {
    pub fn new(th: Thresholds) -> Result<Self> {
        th.validate()?;
        Ok(Self {
            th,
            blocks: Memo::new(),
            verdicts: Memo::new(),
            integrability: Memo::new(),
            compat: Memo::new(),
            constructions: Memo::new(),
        })
    }

    pub fn thresholds(&self) -> &Thresholds {
        &self.th
    }

    fn block_sums(
        &self,
        s: &ResolvedSequence,
        theta: &LacunaryTheta,
        h: u64,
    ) -> Arc<Vec<BlockResidual>> {
        self.blocks
            .get((seq_key(s), theta.name().to_string(), h), || {
                Arc::new(lacunary_block_sums(&s.seq, theta, h))
            })
    }

    fn verdict(
        &self,
        s: &ResolvedSequence,
        f: &ModulusSpec,
        method: Method,
        theta: Option<&LacunaryTheta>,
        h: u64,
    ) -> Arc<Verdict> {
        let key = (
            seq_key(s),
            f.name().to_string(),
            method,
            theta.map(|t| t.name().to_string()),
            h,
        );
        self.verdicts.get(key, || {
            Arc::new(match (theta, method) {
                (Some(t), Method::Statistical) => {
                    statistical_from_blocks(&self.block_sums(s, t, h), f, h, &self.th)
                }
                (Some(t), Method::StrongCesaro) => {
                    cesaro_from_blocks(&self.block_sums(s, t, h), f, h, &self.th)
                }
                (None, Method::Statistical) => test_statistical_with(&s.seq, f, None, h, &self.th),
                (None, Method::StrongCesaro) => {
                    test_strong_cesaro_with(&s.seq, f, None, h, &self.th)
                }
            })
        })
    }

    /// Lacunary uniform integrability over the complete blocks within `h`.
    fn integrability(&self, s: &ResolvedSequence, theta: &LacunaryTheta, h: u64) -> Arc<Verdict> {
        self.integrability
            .get((seq_key(s), theta.name().to_string(), h), || {
                let blocks = theta.complete_blocks(h);
                let label = "I_theta".to_string();
                let report = if blocks >= UI_MIN_BLOCKS {
                    test_uniform_integrability_with(
                        &s.seq,
                        theta,
                        &UI_GRID,
                        blocks,
                        Normalization::PerBlockLength,
                        &self.th,
                    )
                    .ok()
                } else {
                    None
                };
                let (status, certified, values) = match &report {
                    Some(r) => (r.status, true, r.values.clone()),
                    None => (Status::Inconclusive, false, vec![f64::NAN; UI_GRID.len()]),
                };
                let n = values.len();
                let estimate = LimitEstimate {
                    value: values[n - 1],
                    prior: values[n - 2],
                    limsup: values.iter().copied().fold(0.0, f64::max),
                    limsup_prior: values[n - 2],
                    plateau: (values[n - 1] - values[n - 2]).abs() <= self.th.plateau_tol,
                    horizon: theta.term(blocks).unwrap_or(0),
                    samples: report.as_ref().map_or(0, |r| r.blocks),
                    trajectory: UI_GRID
                        .iter()
                        .zip(&values)
                        .map(|(&m, &v)| (m as u64, v))
                        .collect(),
                };
                Arc::new(Verdict {
                    method: label.clone(),
                    status,
                    certified,
                    thresholds: self.th,
                    evidence: vec![Evidence {
                        label,
                        epsilon: None,
                        status,
                        estimate,
                    }],
                })
            })
    }

    fn compatibility(&self, f: &ModulusSpec, theta: Option<&LacunaryTheta>) -> Compatibility {
        self.compat.get(
            (f.name().to_string(), theta.map(|t| t.name().to_string())),
            || {
                classify_compatibility(f, &default_eps_grid(), CLASSIFY_HORIZON, theta)
                    .map(|c| c.verdict)
                    .unwrap_or(Compatibility::Unknown)
            },
        )
    }

    fn resolve(
        &self,
        catalog: &Catalog,
        entry: &SequenceEntry,
        f: &ModulusSpec,
        theta: &LacunaryTheta,
    ) -> std::result::Result<ResolvedSequence, String> {
        match entry.family {
            SequenceFamily::Construction { .. } => self.constructions.get(
                (
                    entry.name.clone(),
                    f.name().to_string(),
                    theta.name().to_string(),
                ),
                || {
                    catalog
                        .resolve(entry, Some(f), Some(theta))
                        .map_err(|e| e.to_string())
                },
            ),
            _ => catalog
                .resolve(entry, Some(f), Some(theta))
                .map_err(|e| e.to_string()),
        }
    }
}

/// Ratio conditions on theta: (1 < liminf q_r, limsup q_r < inf).
pub fn ratio_conditions(theta: &LacunaryTheta) -> (Truth, Truth) {
    match theta.ratio_profile(RATIO_BLOCKS) {
        Ok(p) => {
            let liminf = if p.liminf_est > LIMINF_ABOVE_ONE {
                Truth::True
            } else if p.liminf_est <= LIMINF_AT_ONE {
                Truth::False
            } else {
                Truth::Unknown
            };
            let limsup = if p.unbounded_flag {
                Truth::False
            } else {
                Truth::True
            };
            (liminf, limsup)
        }
        Err(_) => (Truth::Unknown, Truth::Unknown),
    }
}

/// 10^6 indices or 40 complete blocks, whichever is larger, capped at 10^7.
pub fn default_horizon(theta: &LacunaryTheta) -> u64 {
    const LO: u64 = 1_000_000;
    const HI: u64 = 10_000_000;
    theta.term(40).map_or(HI, |k| k.clamp(LO, HI))
}

struct Ctx<'a> {
    lab: &'a Lab,
    f: &'a ModulusSpec,
    theta: &'a LacunaryTheta,
    h: u64,
    parts: Vec<(String, Arc<Verdict>)>,
}

impl Ctx<'_> {
    fn run(
        &mut self,
        label: &str,
        s: &ResolvedSequence,
        f: &ModulusSpec,
        m: Method,
        lac: bool,
        h: u64,
    ) -> Status {
        let v = self.lab.verdict(s, f, m, lac.then_some(self.theta), h);
        let st = v.status;
        self.parts.push((label.to_string(), v));
        st
    }

    fn plain(&mut self, s: &ResolvedSequence, m: Method, lac: bool, h: u64) -> Status {
        let id = ModulusSpec::identity();
        let label = crate::estimate::method_label(m, false, lac);
        self.run(&label, s, &id, m, lac, h)
    }

    fn modulated(&mut self, s: &ResolvedSequence, m: Method, lac: bool, h: u64) -> Status {
        let f = self.f.clone();
        let label = crate::estimate::method_label(m, true, lac);
        self.run(&label, s, &f, m, lac, h)
    }

    fn integrable(&mut self, s: &ResolvedSequence, h: u64) -> Status {
        let v = self.lab.integrability(s, self.theta, h);
        let st = v.status;
        self.parts.push(("I_theta".into(), v));
        st
    }

    fn witness(
        &mut self,
        w: &WitnessedSequence,
        m: Method,
        modulated: bool,
        within: u64,
    ) -> Status {
        let v = Arc::new(w.witness_verdict_within(m, modulated, &self.lab.th, within));
        let st = v.status;
        self.parts.push((v.method.clone(), v));
        st
    }
}

/// A => B on one instance.
fn implication(a: Status, b: Status) -> (LawStatus, &'static str) {
    match (a, b) {
        (Status::Holds, Status::Fails) => {
            (LawStatus::Violated, "antecedent Holds, consequent Fails")
        }
        (_, Status::Holds) => (LawStatus::Consistent, "consequent Holds"),
        (Status::Fails, _) => (LawStatus::Consistent, "antecedent Fails"),
        _ => (
            LawStatus::Inconclusive,
            "antecedent or consequent undetermined",
        ),
    }
}

fn equivalence(a: Status, b: Status) -> (LawStatus, &'static str) {
    match (a, b) {
        (Status::Holds, Status::Holds) => (LawStatus::Consistent, "both Hold"),
        (Status::Fails, Status::Fails) => (LawStatus::Consistent, "both Fail"),
        (Status::Holds, Status::Fails) | (Status::Fails, Status::Holds) => {
            (LawStatus::Violated, "one side Holds, the other Fails")
        }
        _ => (LawStatus::Inconclusive, "a side is undetermined"),
    }
}

fn both(a: Status, b: Status) -> Status {
    match (a, b) {
        (Status::Holds, Status::Holds) => Status::Holds,
        (Status::Fails, _) | (_, Status::Fails) => Status::Fails,
        _ => Status::Inconclusive,
    }
}

fn separation(ok: bool) -> (LawStatus, &'static str) {
    if ok {
        (LawStatus::Consistent, "separation exhibited")
    } else {
        (
            LawStatus::Inconclusive,
            "separation not exhibited at this horizon",
        )
    }
}

/// Which side of a law an instance exercises.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Side {
    Direct,
    Converse,
}

fn side(law: LawId, seq: &SequenceEntry) -> Side {
    match law {
        LawId::CorollaryRatioIff if seq.is_construction() => Side::Converse,
        l if l.paired_construction().is_some() => Side::Converse,
        _ => Side::Direct,
    }
}

/// The construction used by the corollary's converse on `theta`.
fn corollary_construction(theta: &LacunaryTheta) -> Option<CounterexampleKind> {
    match ratio_conditions(theta) {
        (Truth::False, _) => Some(CounterexampleKind::SparseBlocks),
        (_, Truth::False) => Some(CounterexampleKind::Gap),
        _ => None,
    }
}

/// Checks one law on one instance. `horizon` overrides the default horizon
/// (and caps construction desk horizons).
pub fn run_inclusion_check(
    lab: &Lab,
    catalog: &Catalog,
    law: InclusionLaw,
    f: &ModulusSpec,
    theta: &LacunaryTheta,
    seq: &SequenceEntry,
    horizon: Option<u64>,
) -> TheoremVerdict {
    let h = horizon.unwrap_or_else(|| default_horizon(theta));
    let mut out = TheoremVerdict {
        law: law.id,
        corrupted: law.corrupted,
        modulus: f.name().to_string(),
        theta: theta.name().to_string(),
        sequence: seq.name.clone(),
        horizon: h,
        hypothesis: Truth::Unknown,
        status: LawStatus::Inconclusive,
        note: String::new(),
        evidence: Vec::new(),
        verdicts: Vec::new(),
    };
    let mut ctx = Ctx {
        lab,
        f,
        theta,
        h,
        parts: Vec::new(),
    };
    let (status, note) = check(&mut ctx, catalog, law, seq, horizon, &mut out.hypothesis);
    out.status = status;
    out.note = note;
    out.horizon = ctx.h;
    out.evidence = ctx
        .parts
        .iter()
        .map(|(l, v)| ComponentSummary::of(l, v))
        .collect();
    out.verdicts = ctx.parts;
    debug_assert!(
        out.status != LawStatus::Violated || out.verdicts.iter().all(|(_, v)| v.certified)
    );
    out
}

fn check(
    ctx: &mut Ctx<'_>,
    catalog: &Catalog,
    law: InclusionLaw,
    entry: &SequenceEntry,
    override_h: Option<u64>,
    hyp_out: &mut Truth,
) -> (LawStatus, String) {
    use LawId::*;
    let (lab, f, theta) = (ctx.lab, ctx.f, ctx.theta);
    let theta_compat = || Truth::from_compat(lab.compatibility(f, Some(theta)));
    let compat = || Truth::from_compat(lab.compatibility(f, None));
    let (liminf, limsup) = ratio_conditions(theta);
    let side = side(law.id, entry);

    let hyp = match (law.id, side) {
        (NThetaFSubsetNTheta | NThetaFSubsetSThetaF, _) => Truth::True,
        (SThetaEqSThetaF | NThetaFEqNTheta | IntegrableForward, _) => theta_compat(),
        (ConverseThetaCompatStat | ConverseThetaCompatCesaro | IntegrableConverse, _) => {
            theta_compat().not()
        }
        (LiminfForward, _) => liminf,
        (LiminfConverse, _) => compat().and(liminf.not()),
        (LimsupForward, _) => compat().and(limsup),
        (LimsupConverse, _) => theta_compat().and(limsup.not()),
        (CorollaryRatioIff, Side::Direct) => compat().and(liminf).and(limsup),
        (CorollaryRatioIff, Side::Converse) => compat().and(liminf.and(limsup).not()),
    };
    *hyp_out = hyp;
    if override_h.is_some_and(|h| h < lab.th.min_horizon) {
        return (
            LawStatus::Inconclusive,
            "horizon below the certification floor".into(),
        );
    }
    match hyp {
        Truth::False => {
            return (
                LawStatus::Consistent,
                "hypothesis false on this instance; holds vacuously".into(),
            )
        }
        Truth::Unknown => return (LawStatus::Inconclusive, "hypothesis undetermined".into()),
        Truth::True => {}
    }

    let s = match lab.resolve(catalog, entry, f, theta) {
        Ok(s) => s,
        Err(e) => {
            return (
                LawStatus::Inconclusive,
                format!("construction unavailable: {e}"),
            )
        }
    };
    if side == Side::Direct {
        let h = ctx.h;
        let (mut a, mut b) = match law.id {
            NThetaFSubsetNTheta => (
                ctx.modulated(&s, Method::StrongCesaro, true, h),
                ctx.plain(&s, Method::StrongCesaro, true, h),
            ),
            NThetaFSubsetSThetaF => (
                ctx.modulated(&s, Method::StrongCesaro, true, h),
                ctx.modulated(&s, Method::Statistical, true, h),
            ),
            IntegrableForward => {
                let st = ctx.modulated(&s, Method::Statistical, true, h);
                let ui = ctx.integrable(&s, h);
                (
                    both(st, ui),
                    ctx.modulated(&s, Method::StrongCesaro, true, h),
                )
            }
            LiminfForward => (
                ctx.modulated(&s, Method::StrongCesaro, false, h),
                ctx.modulated(&s, Method::StrongCesaro, true, h),
            ),
            LimsupForward => (
                ctx.modulated(&s, Method::StrongCesaro, true, h),
                ctx.modulated(&s, Method::StrongCesaro, false, h),
            ),
            SThetaEqSThetaF => {
                let a = ctx.plain(&s, Method::Statistical, true, h);
                let b = ctx.modulated(&s, Method::Statistical, true, h);
                let (st, n) = equivalence(a, b);
                return (st, n.into());
            }
            NThetaFEqNTheta => {
                let a = ctx.plain(&s, Method::StrongCesaro, true, h);
                let b = ctx.modulated(&s, Method::StrongCesaro, true, h);
                let (st, n) = equivalence(a, b);
                return (st, n.into());
            }
            CorollaryRatioIff => {
                let a = ctx.modulated(&s, Method::StrongCesaro, true, h);
                let b = ctx.modulated(&s, Method::StrongCesaro, false, h);
                let (st, n) = equivalence(a, b);
                return (st, n.into());
            }
            _ => unreachable!("converse laws are paired with constructions"),
        };
        if law.corrupted {
            std::mem::swap(&mut a, &mut b);
        }
        let (st, n) = implication(a, b);
        return (st, n.into());
    }

    // Converse side: the resolved sequence is a separating construction.
    let Some(w) = s.witnessed.clone() else {
        return (
            LawStatus::Inconclusive,
            format!("sequence `{}` is not a separating construction", entry.name),
        );
    };
    let desk = override_h.map_or(w.desk_horizon, |o| o.min(w.desk_horizon));
    ctx.h = desk;
    let expected = match law.id {
        CorollaryRatioIff => corollary_construction(theta),
        l => l.paired_construction(),
    };
    if expected != Some(w.kind) {
        return (
            LawStatus::Inconclusive,
            format!(
                "construction `{}` does not separate the spaces of this law",
                w.kind.as_str()
            ),
        );
    }
    let (st, n) = match w.kind {
        CounterexampleKind::Reciproco => {
            let m = if law.id == ConverseThetaCompatStat {
                Method::Statistical
            } else {
                Method::StrongCesaro
            };
            let plain = ctx.plain(&s, m, true, desk);
            let sep = ctx.witness(&w, m, true, desk);
            separation(plain == Status::Holds && sep == Status::Fails)
        }
        CounterexampleKind::Th3 => {
            let st = ctx.modulated(&s, Method::Statistical, true, desk);
            let ui = ctx.integrable(&s, desk);
            let sep = ctx.witness(&w, Method::StrongCesaro, true, desk);
            separation(st == Status::Holds && ui == Status::Holds && sep == Status::Fails)
        }
        CounterexampleKind::SparseBlocks => {
            let prefix = ctx.modulated(&s, Method::StrongCesaro, false, desk);
            let lac = ctx.modulated(&s, Method::StrongCesaro, true, desk);
            separation(prefix == Status::Holds && lac == Status::Fails)
        }
        CounterexampleKind::Gap => {
            let lac = ctx.modulated(&s, Method::StrongCesaro, true, desk);
            let zero = ctx.modulated(&s, Method::StrongCesaro, false, desk);
            let x0 = w.support.first().map_or(1.0, |r| r.2);
            let shifted = ResolvedSequence {
                seq: s.seq.clone().with_limit(x0),
                witnessed: None,
            };
            let at_x0 = ctx.modulated(&shifted, Method::StrongCesaro, false, desk);
            if let Some(last) = ctx.parts.last_mut() {
                last.0 = format!("{} (L=x0)", last.0);
            }
            separation(lac == Status::Holds && zero == Status::Fails && at_x0 == Status::Fails)
        }
    };
    (st, n.into())
}

// ------------------------------------------------------------------ suite

#[derive(Debug, Clone, PartialEq)]
pub enum Selector {
    All,
    Names(Vec<String>),
}

impl Selector {
    fn parse(s: Option<&String>) -> Selector {
        match s.map(|s| s.trim()) {
            None | Some("*") | Some("") => Selector::All,
            Some(list) => Selector::Names(list.split(',').map(|x| x.trim().to_string()).collect()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteEntry {
    pub laws: Vec<LawId>,
    pub corrupt: bool,
    pub moduli: Selector,
    pub thetas: Selector,
    pub sequences: Selector,
    pub horizon: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SuiteConfig {
    pub entries: Vec<SuiteEntry>,
}

fn parse_horizon(s: &str) -> Result<u64> {
    let x: f64 = s
        .trim()
        .parse()
        .map_err(|_| Error::BadConfig(format!("bad horizon `{s}`")))?;
    if !(x >= 1.0 && x.fract() == 0.0 && x <= 1e15) {
        return Err(Error::BadConfig(format!(
            "horizon `{s}` must be a positive integer"
        )));
    }
    Ok(x as u64)
}

impl SuiteConfig {
    /// Every law over the whole catalog at default horizons.
    pub fn default_suite() -> Self {
        SuiteConfig {
            entries: vec![SuiteEntry {
                laws: LawId::ALL.to_vec(),
                corrupt: false,
                moduli: Selector::All,
                thetas: Selector::All,
                sequences: Selector::All,
                horizon: None,
            }],
        }
    }

    /// Blocks of `law=`, `modulus=`, `theta=`, `sequence=` (comma lists or `*`),
    /// optional `horizon=` and `corrupt=swap`.
    pub fn parse(text: &str) -> Result<Self> {
        let blocks = parse_blocks(text).map_err(|e| Error::BadConfig(e.to_string()))?;
        let mut entries = Vec::new();
        for b in blocks {
            for k in b.keys() {
                if !["law", "modulus", "theta", "sequence", "horizon", "corrupt"]
                    .contains(&k.as_str())
                {
                    return Err(Error::BadConfig(format!("unknown key `{k}`")));
                }
            }
            let law = b
                .get("law")
                .ok_or_else(|| Error::BadConfig("entry is missing `law`".into()))?;
            let laws = match Selector::parse(Some(law)) {
                Selector::All => LawId::ALL.to_vec(),
                Selector::Names(n) => n
                    .iter()
                    .map(|s| {
                        s.parse::<LawId>()
                            .map_err(|e| Error::BadConfig(e.to_string()))
                    })
                    .collect::<Result<Vec<_>>>()?,
            };
            let corrupt = match b.get("corrupt").map(|s| s.trim()) {
                None | Some("none") | Some("false") => false,
                Some("swap") => true,
                Some(o) => return Err(Error::BadConfig(format!("unknown corruption `{o}`"))),
            };
            if corrupt {
                for l in &laws {
                    InclusionLaw::corrupted(*l)?;
                }
            }
            entries.push(SuiteEntry {
                laws,
                corrupt,
                moduli: Selector::parse(b.get("modulus")),
                thetas: Selector::parse(b.get("theta")),
                sequences: Selector::parse(b.get("sequence")),
                horizon: b.get("horizon").map(|s| parse_horizon(s)).transpose()?,
            });
        }
        Ok(SuiteConfig { entries })
    }
}

#[derive(Debug, Clone)]
pub struct Instance {
    pub law: InclusionLaw,
    pub modulus: ModulusSpec,
    pub theta: LacunaryTheta,
    pub sequence: SequenceEntry,
    pub horizon: Option<u64>,
}

fn pick<'a, T>(
    items: &'a [T],
    sel: &Selector,
    name: impl Fn(&T) -> &str,
    what: &str,
) -> Result<Vec<&'a T>> {
    match sel {
        Selector::All => Ok(items.iter().collect()),
        Selector::Names(names) => names
            .iter()
            .map(|n| {
                items.iter().find(|x| name(x) == n).ok_or_else(|| {
                    Error::BadConfig(format!("no {what} named `{n}` in the catalog"))
                })
            })
            .collect(),
    }
}

fn construction_kind(e: &SequenceEntry) -> Option<CounterexampleKind> {
    match &e.family {
        SequenceFamily::Construction { kind, .. } => Some(*kind),
        _ => None,
    }
}

/// Expands a config into instances in (entry, law, modulus, theta, sequence) order.
pub fn expand(config: &SuiteConfig, catalog: &Catalog) -> Result<Vec<Instance>> {
    let mut out = Vec::new();
    for e in &config.entries {
        let moduli = pick(&catalog.moduli, &e.moduli, |m| m.name(), "modulus")?;
        let thetas = pick(&catalog.thetas, &e.thetas, |t| t.name(), "theta")?;
        let seqs = pick(
            &catalog.sequences,
            &e.sequences,
            |s| s.name.as_str(),
            "sequence",
        )?;
        let explicit = matches!(e.sequences, Selector::Names(_));
        for &law in &e.laws {
            let il = if e.corrupt {
                InclusionLaw::corrupted(law)?
            } else {
                InclusionLaw::new(law)
            };
            for f in &moduli {
                for theta in &thetas {
                    let wanted: Option<CounterexampleKind> = match law {
                        LawId::CorollaryRatioIff => corollary_construction(theta),
                        l => l.paired_construction(),
                    };
                    for s in &seqs {
                        let kind = construction_kind(s);
                        let take = match (wanted, kind) {
                            // converse side: only the paired construction
                            (Some(w), Some(k)) => w == k,
                            (Some(_), None) => false,
                            // direct side: fixed families, plus constructions named explicitly
                            (None, Some(_)) => explicit,
                            (None, None) => true,
                        };
                        if take {
                            out.push(Instance {
                                law: il,
                                modulus: (*f).clone(),
                                theta: (*theta).clone(),
                                sequence: (*s).clone(),
                                horizon: e.horizon,
                            });
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct SuiteCounts {
    pub instances: usize,
    pub consistent: usize,
    pub violated: usize,
    pub inconclusive: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub header: String,
    pub thresholds: Thresholds,
    pub counts: SuiteCounts,
    pub verdicts: Vec<TheoremVerdict>,
}

impl SuiteReport {
    pub fn any_violated(&self) -> bool {
        self.counts.violated > 0
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from(
            "law,corrupted,modulus,theta,sequence,horizon,hypothesis,status,components,note\n",
        );
        for v in &self.verdicts {
            let comps: Vec<String> = v
                .evidence
                .iter()
                .map(|c| format!("{}={:?}@{}", c.label, c.status, fmt_num(c.value)))
                .collect();
            s.push_str(&format!(
                "{},{},{},{},{},{},{:?},{},{},{}\n",
                v.law,
                v.corrupted,
                v.modulus,
                v.theta,
                v.sequence,
                v.horizon,
                v.hypothesis,
                v.status,
                comps.join(";"),
                v.note.replace(',', ";"),
            ));
        }
        s
    }

    /// (file name, CSV) per instance: the headline trajectory of each component.
    pub fn trajectories(&self) -> Vec<(String, String)> {
        self.verdicts
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let name = format!(
                    "traj_{:05}_{}_{}_{}_{}.csv",
                    i, v.law, v.modulus, v.theta, v.sequence
                )
                .replace(['/', ' '], "_");
                let mut csv = String::from("component,checkpoint,value\n");
                for (label, verdict) in &v.verdicts {
                    for &(c, x) in &headline(verdict).trajectory {
                        csv.push_str(&format!("{label},{c},{}\n", fmt_num(x)));
                    }
                }
                (name, csv)
            })
            .collect()
    }
}

/// Runs every instance of `config` on up to `threads` workers; the report is
/// in instance order regardless of scheduling.
pub fn run_suite(
    config: &SuiteConfig,
    catalog: &Catalog,
    th: &Thresholds,
    threads: usize,
) -> Result<SuiteReport> {
    let instances = expand(config, catalog)?;
    let lab = Lab::new(*th)?;
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<TheoremVerdict>>> =
        instances.iter().map(|_| Mutex::new(None)).collect();
    let work = || loop {
        let i = next.fetch_add(1, Ordering::Relaxed);
        let Some(inst) = instances.get(i) else { break };
        let v = run_inclusion_check(
            &lab,
            catalog,
            inst.law,
            &inst.modulus,
            &inst.theta,
            &inst.sequence,
            inst.horizon,
        );
        *slots[i].lock().unwrap_or_else(|e| e.into_inner()) = Some(v);
    };
    let threads = threads.clamp(1, instances.len().max(1));
    if threads == 1 {
        work();
    } else {
        std::thread::scope(|sc| {
            for _ in 0..threads {
                sc.spawn(work);
            }
        });
    }
    let verdicts: Vec<TheoremVerdict> = slots
        .into_iter()
        .map(|m| {
            m.into_inner()
                .unwrap_or_else(|e| e.into_inner())
                .expect("every slot is filled")
        })
        .collect();
    let mut counts = SuiteCounts {
        instances: verdicts.len(),
        ..Default::default()
    };
    for v in &verdicts {
        match v.status {
            LawStatus::Consistent => counts.consistent += 1,
            LawStatus::Violated => counts.violated += 1,
            LawStatus::Inconclusive => counts.inconclusive += 1,
        }
    }
    Ok(SuiteReport {
        header: REPORT_HEADER.into(),
        thresholds: *th,
        counts,
        verdicts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::builtin_catalog;

    fn one(law: &str, f: &str, theta: &str, seq: &str, h: Option<u64>) -> TheoremVerdict {
        let c = builtin_catalog();
        let lab = Lab::new(Thresholds::default()).unwrap();
        run_inclusion_check(
            &lab,
            &c,
            InclusionLaw::new(law.parse().unwrap()),
            c.modulus(f).unwrap(),
            c.theta(theta).unwrap(),
            c.sequence(seq).unwrap(),
            h,
        )
    }

    #[test]
    fn law_ids_round_trip() {
        for l in LawId::ALL {
            assert_eq!(l.as_str().parse::<LawId>().unwrap(), l);
            assert_eq!(
                serde_json::to_string(&l).unwrap(),
                format!("\"{}\"", l.as_str())
            );
        }
        assert!(matches!(
            "no_such_law".parse::<LawId>(),
            Err(Error::UnknownLaw(_))
        ));
    }

    #[test]
    fn subset_law_summable_log1p() {
        let v = one(
            "N_theta_f_subset_S_theta_f",
            "log1p",
            "geo2",
            "inv_square",
            Some(1_000_000),
        );
        assert_eq!(v.status, LawStatus::Consistent, "{v:?}");
        assert!(v.evidence.iter().all(|c| c.status == Status::Holds));
    }

    #[test]
    fn equality_law_identity_evens_both_fail() {
        let v = one(
            "S_theta_eq_S_theta_f",
            "identity",
            "geo2",
            "evens",
            Some(1_000_000),
        );
        assert_eq!(v.status, LawStatus::Consistent);
        assert!(v.evidence.iter().all(|c| c.status == Status::Fails));
    }

    #[test]
    fn short_horizon_is_inconclusive() {
        let v = one(
            "N_theta_f_subset_N_theta",
            "identity",
            "geo2",
            "evens",
            Some(100),
        );
        assert_eq!(v.status, LawStatus::Inconclusive);
    }

    #[test]
    fn config_parsing() {
        let cfg = SuiteConfig::parse(
            "law=P5_liminf_forward,N_theta_f_subset_N_theta\ntheta=geo2\nhorizon=1e5\n\nlaw=*\n",
        )
        .unwrap();
        assert_eq!(cfg.entries.len(), 2);
        assert_eq!(cfg.entries[0].horizon, Some(100_000));
        assert_eq!(cfg.entries[1].laws.len(), 13);
        assert!(matches!(
            SuiteConfig::parse("law=bogus\n"),
            Err(Error::BadConfig(_))
        ));
        assert!(matches!(
            SuiteConfig::parse("law=S_theta_eq_S_theta_f\ncorrupt=swap\n"),
            Err(Error::BadConfig(_))
        ));
        assert!(matches!(
            SuiteConfig::parse("law=*\ncolour=red\n"),
            Err(Error::BadConfig(_))
        ));
        assert!(SuiteConfig::parse("").unwrap().entries.is_empty());
    }

    #[test]
    fn empty_config_gives_empty_report() {
        let r = run_suite(
            &SuiteConfig::default(),
            &builtin_catalog(),
            &Thresholds::default(),
            2,
        )
        .unwrap();
        assert_eq!(r.counts, SuiteCounts::default());
        assert!(!r.any_violated());
    }

    #[test]
    fn short_horizons_decide_nothing() {
        let cfg = SuiteConfig::parse(
            "law=P5_liminf_forward\nmodulus=identity\ntheta=poly2\nhorizon=100\n",
        )
        .unwrap();
        let r = run_suite(&cfg, &builtin_catalog(), &Thresholds::default(), 1).unwrap();
        assert!(r.counts.instances > 0);
        assert_eq!(r.counts.inconclusive, r.counts.instances);
    }

    #[test]
    fn unknown_names_are_bad_config() {
        let cfg = SuiteConfig::parse("law=*\ntheta=nope\n").unwrap();
        assert!(matches!(
            expand(&cfg, &builtin_catalog()),
            Err(Error::BadConfig(_))
        ));
    }

    #[test]
    fn default_horizons() {
        let c = builtin_catalog();
        assert_eq!(default_horizon(c.theta("poly2").unwrap()), 1_000_000);
        assert_eq!(default_horizon(c.theta("geo2").unwrap()), 10_000_000);
        assert_eq!(default_horizon(c.theta("sgeo").unwrap()), 10_000_000);
    }

    #[test]
    fn ratio_conditions_of_builtins() {
        let c = builtin_catalog();
        assert_eq!(
            ratio_conditions(c.theta("geo2").unwrap()),
            (Truth::True, Truth::True)
        );
        assert_eq!(ratio_conditions(c.theta("poly2").unwrap()).0, Truth::False);
        assert_eq!(ratio_conditions(c.theta("sgeo").unwrap()).1, Truth::False);
    }
}
