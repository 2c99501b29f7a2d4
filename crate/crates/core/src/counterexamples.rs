//! Separating sequences for the converse inclusions.
//!
//! * `reciproco`: indicator of short runs ending at witness block ends; in
//!   S_theta and N_theta but not in S_theta^f / N_theta^f when f is not
//!   theta-compatible.
//! * `th3`: bounded, x = eps_k on whole witness blocks; in S_theta^f and
//!   I_theta but not in N_theta^f.
//! * gap: x0 right after k_{r(j)-1} for blocks with q_{r(j)} > j;
//!   in N_theta^f but not in N^f.
//! * `sparse`: x = 1 on one short block per doubling of scale over a
//!   theta with q_r -> 1; in N^f but not in N_theta^f.
//!
//! Sequences are finite constructions; `desk_horizon` is where the plain
//! method is read, witness blocks are where the separation is read.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimate::{method_label, Evidence, Method, ScaleTracker, Status, Thresholds, Verdict};
use crate::lacunary::LacunaryTheta;
use crate::modulus::{
    classify_compatibility, default_eps_grid, phi_estimate, Compatibility, ModulusSpec,
};
use crate::sequence::{IntervalValues, SequenceKind, SequenceSpec};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum EpsSchedule {
    /// 1/k
    InvK,
    /// 1/k^2
    InvKSquared,
    Explicit(Vec<f64>),
}

impl EpsSchedule {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "inv_k" => Ok(Self::InvK),
            "inv_k2" => Ok(Self::InvKSquared),
            other => other
                .split(',')
                .map(|t| t.trim().parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map(Self::Explicit)
                .map_err(|_| Error::InvalidArgument(format!("bad eps schedule `{other}`"))),
        }
    }

    /// eps_1, eps_2, ... (first `count` values).
    pub fn values(&self, count: usize) -> Vec<f64> {
        match self {
            Self::InvK => (1..=count).map(|k| 1.0 / k as f64).collect(),
            Self::InvKSquared => (1..=count).map(|k| 1.0 / (k * k) as f64).collect(),
            Self::Explicit(v) => v.iter().copied().take(count).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CounterexampleKind {
    Reciproco,
    Th3,
    Gap,
    SparseBlocks,
}

impl CounterexampleKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Reciproco => "reciproco",
            Self::Th3 => "th3",
            Self::Gap => "sember",
            Self::SparseBlocks => "sparse",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    pub k: usize,
    pub block: usize,
    pub h: u64,
    /// k_{r-1}
    pub block_start: u64,
    /// k_r
    pub block_end: u64,
    pub epsilon: Option<f64>,
    /// n_k for reciproco, support size otherwise
    pub size: u64,
    /// residual sum over the witness block divided by h
    pub plain_ratio: f64,
    /// f(residual mass over the block) / f(h)
    pub modulated_ratio: f64,
    /// f(h eps)/f(h) at the chosen block, when an epsilon applies
    pub f_ratio: Option<f64>,
    pub c_target: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct WitnessedSequence {
    pub kind: CounterexampleKind,
    #[serde(skip_serializing)]
    pub seq: SequenceSpec,
    pub sequence: String,
    pub modulus: Option<String>,
    pub theta: String,
    pub witnesses: Vec<Witness>,
    pub witness_blocks: Vec<usize>,
    pub witness_sizes: Vec<u64>,
    pub separation_c: f64,
    pub eps_seq: Vec<f64>,
    pub desk_horizon: u64,
    /// Inclusive support ranges of the sequence.
    pub support: Vec<(u64, u64, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WitnessSearch {
    /// Block lengths up to this are searched, and phi_theta is estimated here.
    pub search_horizon: u64,
    /// c_target = c_fraction * phi_theta tail estimate
    pub c_fraction: f64,
    /// Smallest accepted separation f(h eps)/f(h).
    pub min_separation: f64,
}

impl Default for WitnessSearch {
    fn default() -> Self {
        Self {
            search_horizon: 1_000_000,
            c_fraction: 0.9,
            min_separation: Thresholds::default().fails,
        }
    }
}

const DESK_MIN: u64 = 10_000;
const DESK_FACTOR: u64 = 100;

/// Smallest k_t >= max(DESK_MIN, DESK_FACTOR * after) with enough blocks behind it.
fn desk_after(theta: &LacunaryTheta, after: u64) -> u64 {
    let target = after.saturating_mul(DESK_FACTOR).max(DESK_MIN);
    let mut last = after;
    for b in theta.blocks() {
        last = b.end;
        if b.end >= target && b.index >= Thresholds::default().min_blocks {
            return b.end;
        }
    }
    last
}

fn validated_eps(eps: &[f64], k: usize) -> Result<()> {
    if k < 3 {
        return Err(Error::InvalidArgument(format!(
            "K = {k} must be at least 3"
        )));
    }
    if eps.len() < k {
        return Err(Error::InvalidArgument(format!(
            "eps schedule yields {} usable values, need {k}",
            eps.len()
        )));
    }
    if eps.iter().any(|e| !(*e > 0.0)) || eps.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidArgument(
            "eps schedule must be positive and strictly decreasing".into(),
        ));
    }
    Ok(())
}

fn require_incompatible(
    f: &ModulusSpec,
    theta: &LacunaryTheta,
    search: &WitnessSearch,
) -> Result<()> {
    let c = classify_compatibility(f, &default_eps_grid(), search.search_horizon, Some(theta))?;
    if c.verdict == Compatibility::Compatible {
        return Err(Error::CompatibleModulus(format!(
            "{} is theta-compatible on {}",
            f.name(),
            theta.name()
        )));
    }
    Ok(())
}

struct Found {
    block: crate::lacunary::BlockStats,
    c_target: f64,
    f_ratio: f64,
}

/// First block after `after` with f(h eps) >= c_target f(h), honouring `needs_gap`.
fn find_witness(
    f: &ModulusSpec,
    theta: &LacunaryTheta,
    eps: f64,
    after: usize,
    k: usize,
    search: &WitnessSearch,
    needs_gap: bool,
) -> Result<Found> {
    let tail = phi_estimate(f, eps, search.search_horizon, Some(theta))?.tail_max;
    let c_target = search.c_fraction * tail;
    let mut ratio_met = false;
    for b in theta.blocks().skip(after) {
        if b.len > search.search_horizon {
            break;
        }
        let h = b.len as f64;
        let f_ratio = f.value(h * eps) / f.value(h);
        if f_ratio < c_target {
            continue;
        }
        ratio_met = true;
        if needs_gap && !(h * (1.0 - eps) - 1.0 > 0.0) {
            continue;
        }
        if f_ratio < search.min_separation {
            return Err(Error::CompatibleModulus(format!(
                "witness {k}: separation {f_ratio:.4} below {}",
                search.min_separation
            )));
        }
        return Ok(Found {
            block: b,
            c_target,
            f_ratio,
        });
    }
    if ratio_met {
        Err(Error::InequalityViolated {
            k,
            detail: format!("no block with h(1-eps)-1 > 0 for eps = {eps}"),
        })
    } else {
        Err(Error::CompatibleModulus(format!(
            "witness {k}: no block with f(h eps) >= {c_target:.4} f(h) up to h = {}",
            search.search_horizon
        )))
    }
}

pub fn build_reciproco_sequence(
    f: &ModulusSpec,
    theta: &LacunaryTheta,
    eps: &EpsSchedule,
    k: usize,
) -> Result<WitnessedSequence> {
    build_reciproco_with(f, theta, eps, k, &WitnessSearch::default())
}

pub fn build_reciproco_with(
    f: &ModulusSpec,
    theta: &LacunaryTheta,
    eps: &EpsSchedule,
    k: usize,
    search: &WitnessSearch,
) -> Result<WitnessedSequence> {
    // eps >= 1 can never satisfy h(1-eps)-1 > 0
    let usable: Vec<f64> = eps
        .values(k + 64)
        .into_iter()
        .filter(|&e| e < 1.0)
        .take(k)
        .collect();
    validated_eps(&usable, k)?;
    require_incompatible(f, theta, search)?;
    let mut witnesses = Vec::with_capacity(k);
    let mut ranges = Vec::with_capacity(k);
    let mut after = 0usize;
    for (i, &e) in usable.iter().enumerate() {
        let found = find_witness(f, theta, e, after, i + 1, search, true)?;
        let b = found.block;
        let n_k = (b.len as f64 * e).floor() as u64 + 1;
        // A_k = [k_r - n_k, k_r], inside I_r because h > n_k
        let lo = b.end - n_k;
        debug_assert!(lo > b.start);
        let count = n_k + 1;
        ranges.push((lo, b.end, 1.0));
        witnesses.push(Witness {
            k: i + 1,
            block: b.index,
            h: b.len,
            block_start: b.start,
            block_end: b.end,
            epsilon: Some(e),
            size: n_k,
            plain_ratio: count as f64 / b.len as f64,
            modulated_ratio: f.value(count as f64) / f.value(b.len as f64),
            f_ratio: Some(found.f_ratio),
            c_target: Some(found.c_target),
        });
        after = b.index;
    }
    let last_end = witnesses.last().map_or(0, |w| w.block_end);
    finish(
        CounterexampleKind::Reciproco,
        Some(f),
        theta,
        witnesses,
        ranges,
        usable,
        0.0,
        desk_after(theta, last_end),
    )
}

pub fn build_th3_sequence(
    f: &ModulusSpec,
    theta: &LacunaryTheta,
    eps: &EpsSchedule,
    k: usize,
) -> Result<WitnessedSequence> {
    build_th3_with(f, theta, eps, k, &WitnessSearch::default())
}

pub fn build_th3_with(
    f: &ModulusSpec,
    theta: &LacunaryTheta,
    eps: &EpsSchedule,
    k: usize,
    search: &WitnessSearch,
) -> Result<WitnessedSequence> {
    let eps_vals = eps.values(k);
    validated_eps(&eps_vals, k)?;
    require_incompatible(f, theta, search)?;
    let mut witnesses = Vec::with_capacity(k);
    let mut ranges = Vec::with_capacity(k);
    let mut after = 0usize;
    for (i, &e) in eps_vals.iter().enumerate() {
        let found = find_witness(f, theta, e, after, i + 1, search, false)?;
        let b = found.block;
        ranges.push((b.start + 1, b.end, e));
        let mass = b.len as f64 * e;
        witnesses.push(Witness {
            k: i + 1,
            block: b.index,
            h: b.len,
            block_start: b.start,
            block_end: b.end,
            epsilon: Some(e),
            size: b.len,
            plain_ratio: e,
            modulated_ratio: f.value(mass) / f.value(b.len as f64),
            f_ratio: Some(found.f_ratio),
            c_target: Some(found.c_target),
        });
        after = b.index;
    }
    let last_end = witnesses.last().map_or(0, |w| w.block_end);
    finish(
        CounterexampleKind::Th3,
        Some(f),
        theta,
        witnesses,
        ranges,
        eps_vals,
        0.0,
        desk_after(theta, last_end),
    )
}

const RATIO_PROFILE_BLOCKS: usize = 40;

pub fn build_gap_sequence(
    theta: &LacunaryTheta,
    x0: f64,
    j_count: usize,
) -> Result<WitnessedSequence> {
    if !(x0 != 0.0 && x0.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "x0 = {x0} must be finite and nonzero"
        )));
    }
    if j_count < 3 {
        return Err(Error::InvalidArgument(format!(
            "J = {j_count} must be at least 3"
        )));
    }
    let profile = theta.ratio_profile(RATIO_PROFILE_BLOCKS)?;
    if !profile.unbounded_flag {
        return Err(Error::BoundedRatios(format!(
            "{}: q_r tail max {} is not growing",
            theta.name(),
            profile.limsup_est
        )));
    }
    let mut witnesses = Vec::with_capacity(j_count);
    let mut ranges = Vec::with_capacity(j_count);
    let mut r = 1usize;
    for j in 1..=j_count {
        // q_{r(j)} > j, and > 2 so the support stays inside I_{r(j)}
        let need = (j as f64).max(2.0);
        loop {
            r += 1;
            match theta.block_stats(r) {
                Some(b) if b.start >= 1 && b.ratio > need => break,
                Some(_) => continue,
                None => {
                    return Err(Error::BoundedRatios(format!(
                        "{}: no block with q_r > {need} among the known terms (j = {j})",
                        theta.name()
                    )))
                }
            }
        }
        let b = theta.block_stats(r).expect("checked above");
        let (lo, hi) = (b.start + 1, 2 * b.start - 1);
        let size = hi + 1 - lo;
        if size > 0 {
            ranges.push((lo, hi, x0));
        }
        witnesses.push(Witness {
            k: j,
            block: r,
            h: b.len,
            block_start: b.start,
            block_end: b.end,
            epsilon: None,
            size,
            plain_ratio: size as f64 * x0.abs() / b.len as f64,
            modulated_ratio: size as f64 * x0.abs() / b.len as f64,
            f_ratio: None,
            c_target: None,
        });
    }
    let desk = 2 * witnesses.last().expect("J >= 3").block_start;
    finish(
        CounterexampleKind::Gap,
        None,
        theta,
        witnesses,
        ranges,
        Vec::new(),
        x0.abs() / 2.0,
        desk,
    )
}

const SPARSE_FIRST_SCALE: u64 = 1024;
const SPARSE_MAX_LIMINF: f64 = 1.05;

/// x = 1 on the block containing each 2^j in [1024, horizon].
pub fn build_sparse_block_sequence(
    theta: &LacunaryTheta,
    horizon: u64,
) -> Result<WitnessedSequence> {
    let profile = theta.ratio_profile(1000)?;
    if profile.liminf_est > SPARSE_MAX_LIMINF {
        return Err(Error::RatiosAwayFromOne(format!(
            "{}: liminf q_r estimate {} exceeds {SPARSE_MAX_LIMINF}",
            theta.name(),
            profile.liminf_est
        )));
    }
    let mut witnesses = Vec::new();
    let mut ranges = Vec::new();
    let mut p = SPARSE_FIRST_SCALE;
    let mut prev_block = 0usize;
    while p <= horizon {
        if let Some(r) = theta.block_of(p) {
            let b = theta.block_stats(r).expect("block_of returns known blocks");
            if r > prev_block && b.end <= horizon {
                ranges.push((b.start + 1, b.end, 1.0));
                witnesses.push(Witness {
                    k: witnesses.len() + 1,
                    block: r,
                    h: b.len,
                    block_start: b.start,
                    block_end: b.end,
                    epsilon: None,
                    size: b.len,
                    plain_ratio: 1.0,
                    modulated_ratio: 1.0,
                    f_ratio: None,
                    c_target: None,
                });
                prev_block = r;
            }
        }
        p = match p.checked_mul(2) {
            Some(v) => v,
            None => break,
        };
    }
    if witnesses.len() < 3 {
        return Err(Error::InvalidArgument(format!(
            "horizon {horizon} leaves fewer than 3 sparse blocks"
        )));
    }
    finish(
        CounterexampleKind::SparseBlocks,
        None,
        theta,
        witnesses,
        ranges,
        Vec::new(),
        1.0,
        horizon,
    )
}

#[allow(clippy::too_many_arguments)]
fn finish(
    kind: CounterexampleKind,
    f: Option<&ModulusSpec>,
    theta: &LacunaryTheta,
    witnesses: Vec<Witness>,
    ranges: Vec<(u64, u64, f64)>,
    eps_seq: Vec<f64>,
    default_c: f64,
    desk_horizon: u64,
) -> Result<WitnessedSequence> {
    let name = match f {
        Some(f) => format!("{}_{}_{}", kind.as_str(), f.name(), theta.name()),
        None => format!("{}_{}", kind.as_str(), theta.name()),
    };
    let values = IntervalValues::new(ranges);
    let support = values.ranges().to_vec();
    let seq = SequenceSpec::new(name.clone(), SequenceKind::Intervals(Arc::new(values)), 0.0);
    let separation_c = witnesses
        .iter()
        .filter_map(|w| w.f_ratio)
        .fold(None, |acc: Option<f64>, r| {
            Some(acc.map_or(r, |a| a.min(r)))
        })
        .unwrap_or(default_c);
    Ok(WitnessedSequence {
        kind,
        seq,
        sequence: name,
        modulus: f.map(|f| f.name().to_string()),
        theta: theta.name().to_string(),
        witness_blocks: witnesses.iter().map(|w| w.block).collect(),
        witness_sizes: witnesses.iter().map(|w| w.size).collect(),
        witnesses,
        separation_c,
        eps_seq,
        desk_horizon,
        support,
    })
}

impl WitnessedSequence {
    /// Verdict read along the witness blocks only: `modulated` selects the
    /// f-ratio, `method` the label. Certified once three witnesses exist.
    pub fn witness_verdict(&self, method: Method, modulated: bool, th: &Thresholds) -> Verdict {
        self.witness_verdict_within(method, modulated, th, u64::MAX)
    }

    /// As `witness_verdict`, using only witness blocks ending at or before `horizon`.
    pub fn witness_verdict_within(
        &self,
        method: Method,
        modulated: bool,
        th: &Thresholds,
        horizon: u64,
    ) -> Verdict {
        let seen: Vec<&Witness> = self
            .witnesses
            .iter()
            .filter(|w| w.block_end <= horizon)
            .collect();
        let horizon = seen.last().map_or(1, |w| w.block_end);
        let mut tracker = ScaleTracker::new(horizon, 1);
        for w in &seen {
            let v = if modulated {
                w.modulated_ratio
            } else {
                w.plain_ratio
            };
            tracker.observe(w.block_end, 0, &[v]);
        }
        let est = tracker.finish(th.plateau_tol).pop().expect("one series");
        let certified = seen.len() >= 3;
        let status = est.status(th, certified);
        let label = format!("{}@witness", method_label(method, modulated, true));
        Verdict {
            method: label.clone(),
            status,
            certified,
            thresholds: *th,
            evidence: vec![Evidence {
                label,
                epsilon: None,
                status,
                estimate: est,
            }],
        }
    }

    pub fn sup_abs(&self) -> f64 {
        self.support.iter().map(|r| r.2.abs()).fold(0.0, f64::max)
    }

    /// First `count` values (n, x_n), n from 1.
    pub fn sample_prefix(&self, count: u64) -> Vec<(u64, f64)> {
        (1..=count).map(|n| (n, self.seq.value(n))).collect()
    }

    /// (n, x_n) at every support point up to `max_points`, plus the range ends.
    pub fn support_points(&self, max_points: usize) -> Vec<(u64, f64)> {
        let mut out = Vec::new();
        for &(lo, hi, v) in &self.support {
            for n in lo..=hi {
                if out.len() >= max_points {
                    return out;
                }
                out.push((n, v));
            }
        }
        out
    }
}

pub fn separation_status(plain: &Verdict, modulated: &Verdict) -> Status {
    match (plain.status, modulated.status) {
        (Status::Holds, Status::Fails) => Status::Holds,
        _ => Status::Inconclusive,
    }
}
