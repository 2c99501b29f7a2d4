//! Finite-horizon limit estimates and the Holds / Fails / Inconclusive rules.
//!
//! A scan feeds `(scale, value)` events in increasing scale order. Values are
//! summarised over windows: `recent(c)` is the largest value with scale in
//! (c/2, c] (falling back to the last value before the window), and
//! `limsup(c)` is the largest value over [sqrt(c), c].

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Thresholds {
    /// Estimate strictly below this (with plateau) counts as zero.
    pub holds: f64,
    /// Estimate at or above this, persistently, counts as bounded away from zero.
    pub fails: f64,
    pub plateau_tol: f64,
    /// No verdict other than Inconclusive below this horizon.
    pub min_horizon: u64,
    /// Lacunary verdicts need this many complete blocks.
    pub min_blocks: usize,
    /// Grid epsilons below this cannot produce a statistical Fails.
    pub fail_eps_floor: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            holds: 0.02,
            fails: 0.2,
            plateau_tol: 1e-2,
            min_horizon: 10_000,
            min_blocks: 4,
            fail_eps_floor: 1.0 / 64.0,
        }
    }
}

impl Thresholds {
    pub fn validate(&self) -> Result<()> {
        if !(self.holds > 0.0 && self.holds < self.fails) {
            return Err(Error::InvalidArgument(format!(
                "holds threshold {} must be positive and below fails threshold {}",
                self.holds, self.fails
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Status {
    Holds,
    Fails,
    Inconclusive,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Holds => "Holds",
            Status::Fails => "Fails",
            Status::Inconclusive => "Inconclusive",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LimitEstimate {
    pub value: f64,
    /// recent(H/10)
    pub prior: f64,
    /// limsup(H)
    pub limsup: f64,
    /// limsup(H/10)
    pub limsup_prior: f64,
    pub plateau: bool,
    pub horizon: u64,
    /// Number of events the scan produced.
    pub samples: usize,
    /// (checkpoint, recent(checkpoint))
    pub trajectory: Vec<(u64, f64)>,
}

impl LimitEstimate {
    pub fn status(&self, th: &Thresholds, certified: bool) -> Status {
        if !certified || self.samples == 0 {
            Status::Inconclusive
        } else if self.value < th.holds && self.plateau {
            Status::Holds
        } else if self.value >= th.fails && self.limsup_prior >= th.fails {
            Status::Fails
        } else {
            Status::Inconclusive
        }
    }
}

/// H/d for d in 1, 2, 5, 10, 20, 50, ... while H/d >= 10 (always including H).
pub fn horizon_checkpoints(horizon: u64) -> Vec<u64> {
    let mut out = vec![horizon];
    let mut d = 1u64;
    'outer: loop {
        for m in [2u64, 5, 10] {
            let Some(div) = d.checked_mul(m) else {
                break 'outer;
            };
            let c = horizon / div;
            if c < 10 {
                break 'outer;
            }
            out.push(c);
        }
        d = match d.checked_mul(10) {
            Some(v) => v,
            None => break,
        };
    }
    out.sort_unstable();
    out.dedup();
    out
}

#[derive(Debug, Clone)]
struct Window {
    lo: u64,
    hi: u64,
    max: Vec<f64>,
    before: Vec<f64>,
    activated: bool,
}

const NONE: f64 = f64::NEG_INFINITY;

/// Streaming window summaries for `width` parallel series sharing scales.
#[derive(Debug, Clone)]
pub struct ScaleTracker {
    horizon: u64,
    width: usize,
    checkpoints: Vec<u64>,
    /// recent windows first (one per checkpoint), then limsup(H), limsup(H/10).
    windows: Vec<Window>,
    by_lo: Vec<usize>,
    next: usize,
    active: Vec<usize>,
    last: Vec<f64>,
    samples: usize,
}

impl ScaleTracker {
    pub fn new(horizon: u64, width: usize) -> Self {
        let checkpoints = horizon_checkpoints(horizon);
        let mk = |lo: u64, hi: u64| Window {
            lo: lo.max(1),
            hi,
            max: vec![NONE; width],
            before: vec![NONE; width],
            activated: false,
        };
        let mut windows: Vec<Window> = checkpoints.iter().map(|&c| mk(c / 2 + 1, c)).collect();
        let wide = |c: u64| ((c as f64).sqrt().ceil() as u64).max(1);
        windows.push(mk(wide(horizon), horizon));
        windows.push(mk(wide(horizon / 10), (horizon / 10).max(1)));
        let mut by_lo: Vec<usize> = (0..windows.len()).collect();
        by_lo.sort_by_key(|&i| windows[i].lo);
        Self {
            horizon,
            width,
            checkpoints,
            windows,
            by_lo,
            next: 0,
            active: Vec::new(),
            last: vec![NONE; width],
            samples: 0,
        }
    }

    /// Sorted distinct window starts; prefix scans must emit events there.
    pub fn window_starts(&self) -> Vec<u64> {
        let mut v: Vec<u64> = self.windows.iter().map(|w| w.lo).collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    /// Records values for series `from..width` at `scale`; scales must not decrease.
    pub fn observe(&mut self, scale: u64, from: usize, values: &[f64]) {
        debug_assert_eq!(values.len(), self.width - from);
        self.samples += 1;
        while self.next < self.by_lo.len() && self.windows[self.by_lo[self.next]].lo <= scale {
            let idx = self.by_lo[self.next];
            let w = &mut self.windows[idx];
            w.before.copy_from_slice(&self.last);
            w.activated = true;
            self.active.push(idx);
            self.next += 1;
        }
        let windows = &mut self.windows;
        self.active.retain(|&idx| {
            let w = &mut windows[idx];
            if scale > w.hi {
                return false;
            }
            for (m, &v) in w.max[from..].iter_mut().zip(values) {
                if v > *m {
                    *m = v;
                }
            }
            true
        });
        self.last[from..].copy_from_slice(values);
    }

    fn window_value(&self, idx: usize, j: usize) -> f64 {
        let w = &self.windows[idx];
        let v = if w.max[j] != NONE {
            w.max[j]
        } else if w.activated {
            w.before[j]
        } else {
            // every event fell below the window
            self.last[j]
        };
        if v == NONE {
            0.0
        } else {
            v
        }
    }

    pub fn finish(&self, tol: f64) -> Vec<LimitEstimate> {
        let n_cp = self.checkpoints.len();
        let h10 = self.horizon / 10;
        let prior_idx = self.checkpoints.iter().position(|&c| c == h10);
        (0..self.width)
            .map(|j| {
                let trajectory: Vec<(u64, f64)> = self
                    .checkpoints
                    .iter()
                    .enumerate()
                    .map(|(i, &c)| (c, self.window_value(i, j)))
                    .collect();
                let value = trajectory.last().map_or(0.0, |p| p.1);
                let prior = prior_idx.map_or(value, |i| trajectory[i].1);
                let limsup = self.window_value(n_cp, j);
                let limsup_prior = self.window_value(n_cp + 1, j);
                let plateau =
                    prior_idx.is_some() && (value - prior).abs() <= tol * value.abs().max(1.0);
                LimitEstimate {
                    value,
                    prior,
                    limsup,
                    limsup_prior,
                    plateau,
                    horizon: self.horizon,
                    samples: self.samples,
                    trajectory,
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Method {
    Statistical,
    StrongCesaro,
}

/// S, S^f, S_theta, S_theta^f, N, ... for a method and its arguments.
pub fn method_label(method: Method, modulated: bool, lacunary: bool) -> String {
    let base = match method {
        Method::Statistical => "S",
        Method::StrongCesaro => "N",
    };
    format!(
        "{base}{}{}",
        if lacunary { "_theta" } else { "" },
        if modulated { "^f" } else { "" }
    )
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Evidence {
    pub label: String,
    pub epsilon: Option<f64>,
    pub status: Status,
    pub estimate: LimitEstimate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub method: String,
    pub status: Status,
    /// Horizon and block count were large enough to certify anything.
    pub certified: bool,
    pub thresholds: Thresholds,
    pub evidence: Vec<Evidence>,
}

impl Verdict {
    pub fn holds(&self) -> bool {
        self.status == Status::Holds
    }

    pub fn fails(&self) -> bool {
        self.status == Status::Fails
    }

    /// The headline estimate: the single estimate, or the worst epsilon.
    pub fn headline(&self) -> f64 {
        self.evidence
            .iter()
            .map(|e| e.estimate.value)
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn checkpoints_descend_from_horizon() {
        assert_eq!(
            horizon_checkpoints(1000),
            vec![10, 20, 50, 100, 200, 500, 1000]
        );
        assert_eq!(horizon_checkpoints(100), vec![10, 20, 50, 100]);
        assert!(horizon_checkpoints(1_000_000).contains(&100_000));
    }

    fn feed(h: u64, f: impl Fn(u64) -> f64) -> LimitEstimate {
        let mut t = ScaleTracker::new(h, 1);
        for n in 1..=h {
            t.observe(n, 0, &[f(n)]);
        }
        t.finish(1e-2).pop().unwrap()
    }

    #[test]
    fn decaying_sequence_holds() {
        let e = feed(100_000, |n| 1.0 / n as f64);
        assert!(e.value <= 2.0 / 100_000.0);
        assert!(e.plateau);
        assert_eq!(e.status(&Thresholds::default(), true), Status::Holds);
        assert_eq!(
            e.status(&Thresholds::default(), false),
            Status::Inconclusive
        );
    }

    #[test]
    fn constant_sequence_fails() {
        let e = feed(100_000, |_| 0.5);
        assert_eq!(e.status(&Thresholds::default(), true), Status::Fails);
        assert_eq!(e.trajectory.last().unwrap().1, e.value);
    }

    #[test]
    fn sparse_events_fall_back_to_last_value() {
        let mut t = ScaleTracker::new(1_000_000, 1);
        for k in 1..=19 {
            t.observe(1 << k, 0, &[0.25]);
        }
        let e = t.finish(1e-2).pop().unwrap();
        assert_eq!(e.value, 0.25);
        assert!(e.trajectory.iter().all(|p| p.1 == 0.25));
    }

    #[test]
    fn thresholds_validate() {
        assert!(Thresholds::default().validate().is_ok());
        let bad = Thresholds {
            holds: 0.3,
            ..Thresholds::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn labels() {
        assert_eq!(method_label(Method::Statistical, true, true), "S_theta^f");
        assert_eq!(method_label(Method::StrongCesaro, false, false), "N");
    }
}
