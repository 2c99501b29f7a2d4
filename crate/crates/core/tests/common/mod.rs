//! Naive reference implementations shared by the integration tests. Nothing
//! here goes through the scan engines or the window tracker.

#![allow(dead_code)]

use summa_core::catalog::{builtin_catalog, Catalog, SequenceFamily};
use summa_core::convergence::EPS_GRID;
use summa_core::estimate::{horizon_checkpoints, Status, Thresholds};
use summa_core::lacunary::LacunaryTheta;
use summa_core::sequence::SequenceSpec;

/// Textbook Neumaier summation in input order.
pub fn neumaier(xs: impl IntoIterator<Item = f64>) -> f64 {
    let (mut s, mut c) = (0.0f64, 0.0f64);
    for x in xs {
        let t = s + x;
        c += if s.abs() >= x.abs() {
            (s - t) + x
        } else {
            (x - t) + s
        };
        s = t;
    }
    s + c
}

pub fn counts_above(rs: &[f64]) -> [u64; 21] {
    let mut out = [0u64; 21];
    for (j, &e) in EPS_GRID.iter().enumerate() {
        out[j] = rs.iter().filter(|&&r| r > e).count() as u64;
    }
    out
}

pub struct NaiveBlock {
    pub start: u64,
    pub end: u64,
    pub len: u64,
    pub sum: f64,
    pub counts: [u64; 21],
}

pub fn residuals(seq: &SequenceSpec, from: u64, to: u64) -> Vec<f64> {
    (from..=to)
        .map(|n| (seq.value(n) - seq.limit()).abs())
        .collect()
}

pub fn naive_blocks(seq: &SequenceSpec, theta: &LacunaryTheta, h: u64) -> Vec<NaiveBlock> {
    let mut out = Vec::new();
    let mut r = 1;
    while let (Some(a), Some(b)) = (theta.term(r - 1), theta.term(r)) {
        if b > h {
            break;
        }
        let rs = residuals(seq, a + 1, b);
        out.push(NaiveBlock {
            start: a,
            end: b,
            len: b - a,
            sum: neumaier(rs.iter().copied()),
            counts: counts_above(&rs),
        });
        r += 1;
    }
    out
}

/// Window summaries over (scale, value) events sorted by scale.
pub struct Naive {
    pub value: f64,
    pub prior: f64,
    pub limsup: f64,
    pub limsup_prior: f64,
    pub plateau: bool,
    pub trajectory: Vec<(u64, f64)>,
}

/// Max over events with scale in [lo, hi]; else the last value below lo; else 0.
pub fn window(events: &[(u64, f64)], lo: u64, hi: u64) -> f64 {
    let inside: Vec<f64> = events
        .iter()
        .filter(|e| e.0 >= lo && e.0 <= hi)
        .map(|e| e.1)
        .collect();
    if let Some(m) = inside.iter().copied().reduce(f64::max) {
        return m;
    }
    events.iter().rfind(|e| e.0 < lo).map_or(0.0, |e| e.1)
}

fn isqrt_ceil(c: u64) -> u64 {
    ((c as f64).sqrt().ceil() as u64).max(1)
}

pub fn summarise(events: &[(u64, f64)], h: u64, tol: f64) -> Naive {
    let recent = |c: u64| window(events, (c / 2 + 1).max(1), c);
    let cps = horizon_checkpoints(h);
    let trajectory: Vec<(u64, f64)> = cps.iter().map(|&c| (c, recent(c))).collect();
    let value = recent(h);
    let has_prior = cps.contains(&(h / 10));
    let prior = if has_prior { recent(h / 10) } else { value };
    Naive {
        value,
        prior,
        limsup: window(events, isqrt_ceil(h), h),
        limsup_prior: window(events, isqrt_ceil(h / 10), (h / 10).max(1)),
        plateau: has_prior && (value - prior).abs() <= tol * value.abs().max(1.0),
        trajectory,
    }
}

pub fn status(n: &Naive, th: &Thresholds, certified: bool) -> Status {
    if !certified {
        Status::Inconclusive
    } else if n.value < th.holds && n.plateau {
        Status::Holds
    } else if n.value >= th.fails && n.limsup_prior >= th.fails {
        Status::Fails
    } else {
        Status::Inconclusive
    }
}

/// The builtin fixed families plus spikes on `theta`.
pub fn fixed_sequences(cat: &Catalog, theta: &LacunaryTheta) -> Vec<SequenceSpec> {
    cat.sequences
        .iter()
        .filter(|e| !matches!(e.family, SequenceFamily::Construction { .. }))
        .map(|e| cat.resolve(e, None, Some(theta)).unwrap().seq)
        .collect()
}

pub mod checks;

pub fn catalog() -> Catalog {
    builtin_catalog()
}
