//! Deterministic lazy real sequences x_1, x_2, ... with a candidate limit L.

use std::fmt;
use std::sync::Arc;

use crate::lacunary::LacunaryTheta;

pub type SequenceFn = Arc<dyn Fn(u64) -> f64 + Send + Sync>;
pub type IndexPredicate = Arc<dyn Fn(u64) -> bool + Send + Sync>;

/// A set of positive integers given by a membership test.
#[derive(Clone)]
pub enum IndexSet {
    Evens,
    Odds,
    Squares,
    PowersOfTwo,
    /// Positive multiples of m.
    Multiples(u64),
    Custom(IndexPredicate),
}

impl fmt::Debug for IndexSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IndexSet::Evens => f.write_str("Evens"),
            IndexSet::Odds => f.write_str("Odds"),
            IndexSet::Squares => f.write_str("Squares"),
            IndexSet::PowersOfTwo => f.write_str("PowersOfTwo"),
            IndexSet::Multiples(m) => write!(f, "Multiples({m})"),
            IndexSet::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

impl IndexSet {
    #[inline]
    pub fn contains(&self, n: u64) -> bool {
        match self {
            IndexSet::Evens => n.is_multiple_of(2),
            IndexSet::Odds => n % 2 == 1,
            IndexSet::Squares => {
                let r = n.isqrt();
                r * r == n
            }
            IndexSet::PowersOfTwo => n.is_power_of_two(),
            IndexSet::Multiples(m) => *m != 0 && n.is_multiple_of(*m),
            IndexSet::Custom(p) => p(n),
        }
    }

    /// Writes 1.0 / 0.0 membership for start, start+1, ...
    pub fn fill(&self, start: u64, out: &mut [f64]) {
        match self {
            IndexSet::Squares => {
                let mut r = start.isqrt();
                if r * r < start {
                    r += 1;
                }
                let mut next_sq = r * r;
                for (i, o) in out.iter_mut().enumerate() {
                    let n = start + i as u64;
                    if n == next_sq {
                        *o = 1.0;
                        r += 1;
                        next_sq = r * r;
                    } else {
                        *o = 0.0;
                    }
                }
            }
            _ => {
                for (i, o) in out.iter_mut().enumerate() {
                    *o = if self.contains(start + i as u64) {
                        1.0
                    } else {
                        0.0
                    };
                }
            }
        }
    }
}

/// Piecewise-constant sequence: `value` on each inclusive range, 0 elsewhere.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalValues {
    ranges: Vec<(u64, u64, f64)>,
}

impl IntervalValues {
    /// Ranges must be nonempty, sorted and pairwise disjoint.
    pub fn new(mut ranges: Vec<(u64, u64, f64)>) -> Self {
        ranges.retain(|r| r.0 <= r.1);
        ranges.sort_by_key(|r| r.0);
        debug_assert!(ranges.windows(2).all(|w| w[0].1 < w[1].0));
        Self { ranges }
    }

    pub fn ranges(&self) -> &[(u64, u64, f64)] {
        &self.ranges
    }

    pub fn value(&self, n: u64) -> f64 {
        let i = self.ranges.partition_point(|r| r.1 < n);
        match self.ranges.get(i) {
            Some(&(lo, _, v)) if lo <= n => v,
            _ => 0.0,
        }
    }

    pub fn support_size(&self) -> u64 {
        self.ranges.iter().map(|r| r.1 - r.0 + 1).sum()
    }

    fn fill(&self, start: u64, out: &mut [f64]) {
        let mut i = self.ranges.partition_point(|r| r.1 < start);
        for (k, o) in out.iter_mut().enumerate() {
            let n = start + k as u64;
            while i < self.ranges.len() && self.ranges[i].1 < n {
                i += 1;
            }
            *o = match self.ranges.get(i) {
                Some(&(lo, _, v)) if lo <= n => v,
                _ => 0.0,
            };
        }
    }
}

#[derive(Clone)]
pub enum SequenceKind {
    Zero,
    Constant(f64),
    /// 1/n^2
    InverseSquare,
    /// 1/n
    Harmonic,
    /// 1/sqrt(n)
    InverseSqrt,
    /// 1/ln(n + 1)
    InverseLog,
    /// (-1)^n
    Alternating,
    Indicator(IndexSet),
    /// x_n = n at the block ends n = k_r, 0 elsewhere.
    BlockEndSpikes(LacunaryTheta),
    Intervals(Arc<IntervalValues>),
    Custom(SequenceFn),
}

impl fmt::Debug for SequenceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SequenceKind::Zero => f.write_str("Zero"),
            SequenceKind::Constant(c) => write!(f, "Constant({c})"),
            SequenceKind::InverseSquare => f.write_str("InverseSquare"),
            SequenceKind::Harmonic => f.write_str("Harmonic"),
            SequenceKind::InverseSqrt => f.write_str("InverseSqrt"),
            SequenceKind::InverseLog => f.write_str("InverseLog"),
            SequenceKind::Alternating => f.write_str("Alternating"),
            SequenceKind::Indicator(s) => write!(f, "Indicator({s:?})"),
            SequenceKind::BlockEndSpikes(t) => write!(f, "BlockEndSpikes({})", t.name()),
            SequenceKind::Intervals(iv) => write!(f, "Intervals({} ranges)", iv.ranges.len()),
            SequenceKind::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SequenceSpec {
    name: String,
    kind: SequenceKind,
    limit: f64,
}

impl SequenceSpec {
    pub fn new(name: impl Into<String>, kind: SequenceKind, limit: f64) -> Self {
        Self {
            name: name.into(),
            kind,
            limit,
        }
    }

    pub fn custom(
        name: impl Into<String>,
        limit: f64,
        f: impl Fn(u64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self::new(name, SequenceKind::Custom(Arc::new(f)), limit)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> &SequenceKind {
        &self.kind
    }

    pub fn limit(&self) -> f64 {
        self.limit
    }

    pub fn with_limit(mut self, limit: f64) -> Self {
        self.limit = limit;
        self
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// x_n for n >= 1.
    pub fn value(&self, n: u64) -> f64 {
        let x = n as f64;
        match &self.kind {
            SequenceKind::Zero => 0.0,
            SequenceKind::Constant(c) => *c,
            SequenceKind::InverseSquare => 1.0 / (x * x),
            SequenceKind::Harmonic => 1.0 / x,
            SequenceKind::InverseSqrt => 1.0 / x.sqrt(),
            SequenceKind::InverseLog => 1.0 / x.ln_1p(),
            SequenceKind::Alternating => {
                if n.is_multiple_of(2) {
                    1.0
                } else {
                    -1.0
                }
            }
            SequenceKind::Indicator(s) => {
                if s.contains(n) {
                    1.0
                } else {
                    0.0
                }
            }
            SequenceKind::BlockEndSpikes(t) => match t.block_of(n) {
                Some(r) if t.term(r) == Some(n) => x,
                _ => 0.0,
            },
            SequenceKind::Intervals(iv) => iv.value(n),
            SequenceKind::Custom(f) => f(n),
        }
    }

    pub fn residual(&self, n: u64) -> f64 {
        (self.value(n) - self.limit).abs()
    }

    /// Writes |x_n - L| for n = start, start+1, ... into `out`.
    pub fn fill_residuals(&self, start: u64, out: &mut [f64]) {
        match &self.kind {
            SequenceKind::Zero => out.fill(0.0),
            SequenceKind::Indicator(s) => s.fill(start, out),
            SequenceKind::Intervals(iv) => iv.fill(start, out),
            SequenceKind::BlockEndSpikes(t) => {
                out.fill(0.0);
                let end = start + out.len() as u64 - 1;
                if let Some(mut r) = t.block_of(start) {
                    while let Some(k) = t.term(r) {
                        if k > end {
                            break;
                        }
                        out[(k - start) as usize] = k as f64;
                        r += 1;
                    }
                }
            }
            _ => {
                for (i, o) in out.iter_mut().enumerate() {
                    *o = self.value(start + i as u64);
                }
            }
        }
        let l = self.limit;
        for o in out.iter_mut() {
            *o = (*o - l).abs();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lacunary::{build_lacunary, ThetaKind};

    fn check_fill(seq: &SequenceSpec, start: u64, len: usize) {
        let mut buf = vec![f64::NAN; len];
        seq.fill_residuals(start, &mut buf);
        for (i, &b) in buf.iter().enumerate() {
            assert_eq!(
                b,
                seq.residual(start + i as u64),
                "{} n={}",
                seq.name(),
                start + i as u64
            );
        }
    }

    #[test]
    fn chunked_fill_matches_pointwise() {
        let geo2 = build_lacunary(ThetaKind::Geometric { ratio: 2.0 }).unwrap();
        let seqs = [
            SequenceSpec::new("sq", SequenceKind::Indicator(IndexSet::Squares), 0.0),
            SequenceSpec::new("sq_shift", SequenceKind::Indicator(IndexSet::Squares), 0.25),
            SequenceSpec::new("spikes", SequenceKind::BlockEndSpikes(geo2), 0.0),
            SequenceSpec::new("harm", SequenceKind::Harmonic, 0.0),
            SequenceSpec::new("alt", SequenceKind::Alternating, 1.0),
            SequenceSpec::new(
                "iv",
                SequenceKind::Intervals(Arc::new(IntervalValues::new(vec![
                    (3, 3, 1.0),
                    (10, 40, 2.0),
                    (90, 95, -1.0),
                ]))),
                0.0,
            ),
        ];
        for s in &seqs {
            for start in [1, 2, 7, 33, 1000] {
                check_fill(s, start, 200);
            }
        }
    }

    #[test]
    fn index_sets() {
        let count = |s: IndexSet| (1..=10_000u64).filter(|&n| s.contains(n)).count();
        assert_eq!(count(IndexSet::Squares), 100);
        assert_eq!(count(IndexSet::Evens), 5000);
        assert_eq!(count(IndexSet::PowersOfTwo), 14);
        assert_eq!(count(IndexSet::Multiples(3)), 3333);
    }
}
