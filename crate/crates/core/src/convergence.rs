//! Residual sums, f-densities and finite-horizon verdicts for
//! S, S^f, S_theta, S_theta^f (statistical), N, N^f, N_theta, N_theta^f
//! (strong Cesaro) and lacunary uniform integrability.
//!
//! Prefix-mode scans evaluate f(acc_n)/f(n) only where it can attain a
//! window maximum: acc_n is a step function and f(n) increases, so between
//! changes of acc the ratio decreases. Events are emitted at changes and at
//! window starts.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimate::{
    method_label, Evidence, LimitEstimate, Method, ScaleTracker, Status, Thresholds, Verdict,
};
use crate::lacunary::LacunaryTheta;
use crate::modulus::{checkpoints_125, ModulusSpec};
use crate::sequence::{IndexSet, SequenceSpec};
use crate::sum::NeumaierSum;

pub const EPS_GRID_LEN: usize = 21;
const CHUNK: usize = 1 << 14;

const fn pow2_neg_table() -> [f64; EPS_GRID_LEN] {
    let mut t = [0.0; EPS_GRID_LEN];
    let mut v = 1.0;
    let mut j = 0;
    while j < EPS_GRID_LEN {
        t[j] = v;
        v *= 0.5;
        j += 1;
    }
    t
}

/// epsilon_j = 2^-j, j = 0..=20
pub const EPS_GRID: [f64; EPS_GRID_LEN] = pow2_neg_table();

pub fn eps_grid() -> [f64; EPS_GRID_LEN] {
    EPS_GRID
}

/// Smallest j with 2^-j < r, or `EPS_GRID_LEN` if r exceeds no grid value.
#[inline]
pub fn first_exceeded(r: f64) -> usize {
    if !(r > EPS_GRID[EPS_GRID_LEN - 1]) {
        return EPS_GRID_LEN;
    }
    if r > 1.0 {
        return 0;
    }
    let mut j = ((-r.log2()).floor() as usize).min(EPS_GRID_LEN - 1);
    while j > 0 && EPS_GRID[j - 1] < r {
        j -= 1;
    }
    while EPS_GRID[j] >= r {
        j += 1;
    }
    j
}

#[derive(Debug, Clone, Copy, Default)]
struct CountBuckets([u64; EPS_GRID_LEN]);

impl CountBuckets {
    #[inline]
    fn bump(&mut self, r: f64) {
        let j = first_exceeded(r);
        if j < EPS_GRID_LEN {
            self.0[j] += 1;
        }
    }

    fn counts(&self) -> [u64; EPS_GRID_LEN] {
        let mut out = [0u64; EPS_GRID_LEN];
        let mut acc = 0;
        for (o, b) in out.iter_mut().zip(self.0) {
            acc += b;
            *o = acc;
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlockResidual {
    pub index: usize,
    pub start: u64,
    pub end: u64,
    pub len: u64,
    /// sum over I_t of |x_k - L|
    pub sum: f64,
    /// counts[j] = #{k in I_t : |x_k - L| > 2^-j}
    pub counts: [u64; EPS_GRID_LEN],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PrefixCheckpoint {
    pub n: u64,
    pub sum: f64,
    pub counts: [u64; EPS_GRID_LEN],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum ResidualSums {
    Blocks(Vec<BlockResidual>),
    Prefix(Vec<PrefixCheckpoint>),
}

/// Walks `seq` residuals over 1..=end in chunks.
fn for_each_residual(seq: &SequenceSpec, from: u64, to: u64, mut f: impl FnMut(u64, f64)) {
    let mut buf = vec![0.0; CHUNK];
    let mut n = from;
    while n <= to {
        let len = ((to - n + 1) as usize).min(CHUNK);
        seq.fill_residuals(n, &mut buf[..len]);
        for (i, &r) in buf[..len].iter().enumerate() {
            f(n + i as u64, r);
        }
        n += len as u64;
    }
}

/// Complete blocks within `horizon`, with per-block truncated sums for `m_grid`.
fn scan_blocks(
    seq: &SequenceSpec,
    theta: &LacunaryTheta,
    horizon: u64,
    m_grid: &[f64],
) -> (Vec<BlockResidual>, Vec<Vec<f64>>) {
    let mut blocks = Vec::new();
    let mut truncated = Vec::new();
    for b in theta.blocks_within(horizon) {
        let mut sum = NeumaierSum::new();
        let mut buckets = CountBuckets::default();
        let mut above = vec![NeumaierSum::new(); m_grid.len() + 1];
        for_each_residual(seq, b.start + 1, b.end, |_, r| {
            if r != 0.0 {
                sum.add(r);
                buckets.bump(r);
                if !m_grid.is_empty() {
                    above[m_grid.partition_point(|&m| m <= r)].add(r);
                }
            }
        });
        if !m_grid.is_empty() {
            // truncated[i] = sum of residuals >= m_grid[i]
            let mut t = vec![0.0; m_grid.len()];
            let mut acc = NeumaierSum::new();
            for i in (0..m_grid.len()).rev() {
                acc.add(above[i + 1].value());
                t[i] = acc.value();
            }
            truncated.push(t);
        }
        blocks.push(BlockResidual {
            index: b.index,
            start: b.start,
            end: b.end,
            len: b.len,
            sum: sum.value(),
            counts: buckets.counts(),
        });
    }
    (blocks, truncated)
}

pub fn lacunary_block_sums(
    seq: &SequenceSpec,
    theta: &LacunaryTheta,
    horizon: u64,
) -> Vec<BlockResidual> {
    scan_blocks(seq, theta, horizon, &[]).0
}

pub fn residual_block_sums(
    seq: &SequenceSpec,
    theta: Option<&LacunaryTheta>,
    horizon: u64,
) -> ResidualSums {
    if let Some(t) = theta {
        return ResidualSums::Blocks(lacunary_block_sums(seq, t, horizon));
    }
    let cps = checkpoints_125(horizon);
    let mut out = Vec::with_capacity(cps.len());
    let mut sum = NeumaierSum::new();
    let mut buckets = CountBuckets::default();
    let mut ci = 0;
    for_each_residual(seq, 1, horizon, |n, r| {
        if r != 0.0 {
            sum.add(r);
            buckets.bump(r);
        }
        if ci < cps.len() && cps[ci] == n {
            out.push(PrefixCheckpoint {
                n,
                sum: sum.value(),
                counts: buckets.counts(),
            });
            ci += 1;
        }
    });
    ResidualSums::Prefix(out)
}

// --------------------------------------------------------- scan engines

/// f(acc_n)/f(n) over n = 1..=horizon where acc is the running sum of `fill`.
fn prefix_single(
    f: &ModulusSpec,
    horizon: u64,
    tol: f64,
    fill: impl Fn(u64, &mut [f64]),
) -> LimitEstimate {
    let mut tracker = ScaleTracker::new(horizon, 1);
    let forced = tracker.window_starts();
    let mut fi = 0;
    let mut acc = NeumaierSum::new();
    let mut buf = vec![0.0; CHUNK];
    let mut n = 1u64;
    while n <= horizon {
        let len = ((horizon - n + 1) as usize).min(CHUNK);
        fill(n, &mut buf[..len]);
        for (i, &x) in buf[..len].iter().enumerate() {
            let m = n + i as u64;
            let at_start = fi < forced.len() && forced[fi] == m;
            if at_start {
                fi += 1;
            }
            if x != 0.0 {
                acc.add(x);
            }
            if x != 0.0 || at_start {
                tracker.observe(m, 0, &[f.value(acc.value()) / f.value(m as f64)]);
            }
        }
        n += len as u64;
    }
    tracker.finish(tol).pop().expect("one series")
}

/// Per-epsilon f(count_j(n))/f(n) for the prefix statistical methods.
fn prefix_statistical(
    seq: &SequenceSpec,
    f: &ModulusSpec,
    horizon: u64,
    tol: f64,
) -> Vec<LimitEstimate> {
    let mut tracker = ScaleTracker::new(horizon, EPS_GRID_LEN);
    let forced = tracker.window_starts();
    let mut fi = 0;
    let mut counts = [0u64; EPS_GRID_LEN];
    let mut vals = [0.0f64; EPS_GRID_LEN];
    for_each_residual(seq, 1, horizon, |n, r| {
        let j0 = first_exceeded(r);
        for c in &mut counts[j0.min(EPS_GRID_LEN)..] {
            *c += 1;
        }
        let at_start = fi < forced.len() && forced[fi] == n;
        if at_start {
            fi += 1;
        }
        let from = if at_start { 0 } else { j0 };
        if from < EPS_GRID_LEN {
            let fnv = f.value(n as f64);
            let mut prev: Option<(u64, f64)> = None;
            for j in from..EPS_GRID_LEN {
                let c = counts[j];
                let v = match prev {
                    Some((pc, pv)) if pc == c => pv,
                    _ => f.value(c as f64) / fnv,
                };
                vals[j] = v;
                prev = Some((c, v));
            }
            tracker.observe(n, from, &vals[from..]);
        }
    });
    tracker.finish(tol)
}

fn certified_prefix(horizon: u64, th: &Thresholds) -> bool {
    horizon >= th.min_horizon
}

fn certified_blocks(horizon: u64, blocks: usize, th: &Thresholds) -> bool {
    horizon >= th.min_horizon && blocks >= th.min_blocks
}

fn statistical_verdict(
    label: String,
    estimates: Vec<LimitEstimate>,
    certified: bool,
    th: &Thresholds,
) -> Verdict {
    let evidence: Vec<Evidence> = estimates
        .into_iter()
        .enumerate()
        .map(|(j, estimate)| Evidence {
            label: format!("eps=2^-{j}"),
            epsilon: Some(EPS_GRID[j]),
            status: estimate.status(th, certified),
            estimate,
        })
        .collect();
    let status = if evidence.iter().all(|e| e.status == Status::Holds) {
        Status::Holds
    } else if evidence
        .iter()
        .any(|e| e.status == Status::Fails && e.epsilon.unwrap_or(0.0) >= th.fail_eps_floor)
    {
        Status::Fails
    } else {
        Status::Inconclusive
    };
    Verdict {
        method: label,
        status,
        certified,
        thresholds: *th,
        evidence,
    }
}

fn single_verdict(
    label: String,
    estimate: LimitEstimate,
    certified: bool,
    th: &Thresholds,
) -> Verdict {
    let status = estimate.status(th, certified);
    Verdict {
        method: label.clone(),
        status,
        certified,
        thresholds: *th,
        evidence: vec![Evidence {
            label,
            epsilon: None,
            status,
            estimate,
        }],
    }
}

/// Lacunary per-block ratios f(count_j)/f(h_t) for every grid epsilon.
pub fn statistical_from_blocks(
    blocks: &[BlockResidual],
    f: &ModulusSpec,
    horizon: u64,
    th: &Thresholds,
) -> Verdict {
    let mut tracker = ScaleTracker::new(horizon, EPS_GRID_LEN);
    let mut vals = [0.0f64; EPS_GRID_LEN];
    for b in blocks {
        let fh = f.value(b.len as f64);
        let mut prev: Option<(u64, f64)> = None;
        for j in 0..EPS_GRID_LEN {
            let c = b.counts[j];
            let v = match prev {
                Some((pc, pv)) if pc == c => pv,
                _ => f.value(c as f64) / fh,
            };
            vals[j] = v;
            prev = Some((c, v));
        }
        tracker.observe(b.end, 0, &vals);
    }
    let label = method_label(Method::Statistical, !f.is_identity(), true);
    statistical_verdict(
        label,
        tracker.finish(th.plateau_tol),
        certified_blocks(horizon, blocks.len(), th),
        th,
    )
}

/// Lacunary per-block ratios f(sum_t)/f(h_t).
pub fn cesaro_from_blocks(
    blocks: &[BlockResidual],
    f: &ModulusSpec,
    horizon: u64,
    th: &Thresholds,
) -> Verdict {
    let mut tracker = ScaleTracker::new(horizon, 1);
    for b in blocks {
        tracker.observe(b.end, 0, &[f.value(b.sum) / f.value(b.len as f64)]);
    }
    let est = tracker.finish(th.plateau_tol).pop().expect("one series");
    let label = method_label(Method::StrongCesaro, !f.is_identity(), true);
    single_verdict(label, est, certified_blocks(horizon, blocks.len(), th), th)
}

// ------------------------------------------------------------ public ops

pub fn f_density(
    f: &ModulusSpec,
    set: &IndexSet,
    horizon: u64,
    theta: Option<&LacunaryTheta>,
) -> LimitEstimate {
    f_density_with(f, set, horizon, theta, &Thresholds::default())
}

pub fn f_density_with(
    f: &ModulusSpec,
    set: &IndexSet,
    horizon: u64,
    theta: Option<&LacunaryTheta>,
    th: &Thresholds,
) -> LimitEstimate {
    match theta {
        None => prefix_single(f, horizon, th.plateau_tol, |n, out| set.fill(n, out)),
        Some(t) => {
            let mut tracker = ScaleTracker::new(horizon, 1);
            let mut buf = vec![0.0; CHUNK];
            for b in t.blocks_within(horizon) {
                let mut count = 0u64;
                let mut n = b.start + 1;
                while n <= b.end {
                    let len = ((b.end - n + 1) as usize).min(CHUNK);
                    set.fill(n, &mut buf[..len]);
                    count += buf[..len].iter().filter(|&&x| x != 0.0).count() as u64;
                    n += len as u64;
                }
                tracker.observe(b.end, 0, &[f.value(count as f64) / f.value(b.len as f64)]);
            }
            tracker.finish(th.plateau_tol).pop().expect("one series")
        }
    }
}

pub fn test_statistical(
    seq: &SequenceSpec,
    f: &ModulusSpec,
    theta: Option<&LacunaryTheta>,
    horizon: u64,
) -> Verdict {
    test_statistical_with(seq, f, theta, horizon, &Thresholds::default())
}

pub fn test_statistical_with(
    seq: &SequenceSpec,
    f: &ModulusSpec,
    theta: Option<&LacunaryTheta>,
    horizon: u64,
    th: &Thresholds,
) -> Verdict {
    match theta {
        Some(t) => statistical_from_blocks(&lacunary_block_sums(seq, t, horizon), f, horizon, th),
        None => {
            let est = prefix_statistical(seq, f, horizon, th.plateau_tol);
            let label = method_label(Method::Statistical, !f.is_identity(), false);
            statistical_verdict(label, est, certified_prefix(horizon, th), th)
        }
    }
}

pub fn test_strong_cesaro(
    seq: &SequenceSpec,
    f: &ModulusSpec,
    theta: Option<&LacunaryTheta>,
    horizon: u64,
) -> Verdict {
    test_strong_cesaro_with(seq, f, theta, horizon, &Thresholds::default())
}

pub fn test_strong_cesaro_with(
    seq: &SequenceSpec,
    f: &ModulusSpec,
    theta: Option<&LacunaryTheta>,
    horizon: u64,
    th: &Thresholds,
) -> Verdict {
    match theta {
        Some(t) => cesaro_from_blocks(&lacunary_block_sums(seq, t, horizon), f, horizon, th),
        None => {
            let est = prefix_single(f, horizon, th.plateau_tol, |n, out| {
                seq.fill_residuals(n, out)
            });
            let label = method_label(Method::StrongCesaro, !f.is_identity(), false);
            single_verdict(label, est, certified_prefix(horizon, th), th)
        }
    }
}

// ------------------------------------------------- uniform integrability

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Normalization {
    /// (1/h_t) * truncated block sum
    PerBlockLength,
    /// truncated block sum as is
    Unnormalized,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntegrabilityReport {
    pub m_grid: Vec<f64>,
    /// values[i] = sup over blocks of the truncated mass at cutoff m_grid[i]
    pub values: Vec<f64>,
    pub blocks: usize,
    pub normalization: Normalization,
    pub status: Status,
    pub thresholds: Thresholds,
}

pub fn test_uniform_integrability(
    seq: &SequenceSpec,
    theta: &LacunaryTheta,
    m_grid: &[f64],
    blocks: usize,
) -> Result<IntegrabilityReport> {
    test_uniform_integrability_with(
        seq,
        theta,
        m_grid,
        blocks,
        Normalization::PerBlockLength,
        &Thresholds::default(),
    )
}

pub fn test_uniform_integrability_with(
    seq: &SequenceSpec,
    theta: &LacunaryTheta,
    m_grid: &[f64],
    blocks: usize,
    normalization: Normalization,
    th: &Thresholds,
) -> Result<IntegrabilityReport> {
    if blocks < 10 {
        return Err(Error::InvalidArgument(format!(
            "need at least 10 blocks, got {blocks}"
        )));
    }
    if m_grid.is_empty()
        || m_grid.windows(2).any(|w| w[1] <= w[0])
        || m_grid.iter().any(|m| !m.is_finite())
    {
        return Err(Error::InvalidArgument(
            "M grid must be nonempty, finite and strictly increasing".into(),
        ));
    }
    let horizon = theta.term(blocks).ok_or_else(|| {
        Error::InvalidArgument(format!("theta `{}` has no block {blocks}", theta.name()))
    })?;
    let (scanned, truncated) = scan_blocks(seq, theta, horizon, m_grid);
    let mut values = vec![0.0f64; m_grid.len()];
    for (b, t) in scanned.iter().zip(&truncated) {
        let scale = match normalization {
            Normalization::PerBlockLength => 1.0 / b.len as f64,
            Normalization::Unnormalized => 1.0,
        };
        for (v, &x) in values.iter_mut().zip(t) {
            *v = v.max(x * scale);
        }
    }
    let last = *values.last().unwrap();
    let status = if last < th.holds {
        Status::Holds
    } else if last >= th.fails {
        Status::Fails
    } else {
        Status::Inconclusive
    };
    Ok(IntegrabilityReport {
        m_grid: m_grid.to_vec(),
        values,
        blocks: scanned.len(),
        normalization,
        status,
        thresholds: *th,
    })
}
