//! Modulus functions, their axioms, and the compatibility functionals
//! φ(ε) = limsup f(nε)/f(n) and φ_θ(ε) = limsup f(h_t ε)/f(h_t).

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lacunary::LacunaryTheta;

pub type ModulusFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

const LAMBERT_MAX_ITER: usize = 50;
const LAMBERT_TOL: f64 = 1e-12;
const AXIOM_SEED: u64 = 0x5eed_f00d;

#[derive(Clone)]
pub enum ModulusKind {
    /// x^p + x^q
    PowerSum {
        p: f64,
        q: f64,
    },
    /// x^p + ln(1 + x)
    PowerPlusLog {
        p: f64,
    },
    /// x + x/(x + 1)
    XPlusRatio,
    Log1p,
    /// principal branch W_0
    LambertW,
    Identity,
    Custom(ModulusFn),
}

impl fmt::Debug for ModulusKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModulusKind::PowerSum { p, q } => write!(f, "PowerSum({p}, {q})"),
            ModulusKind::PowerPlusLog { p } => write!(f, "PowerPlusLog({p})"),
            ModulusKind::XPlusRatio => f.write_str("XPlusRatio"),
            ModulusKind::Log1p => f.write_str("Log1p"),
            ModulusKind::LambertW => f.write_str("LambertW"),
            ModulusKind::Identity => f.write_str("Identity"),
            ModulusKind::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Compatibility {
    Compatible,
    Incompatible,
    Unknown,
}

impl fmt::Display for Compatibility {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Compatibility::Compatible => "Compatible",
            Compatibility::Incompatible => "Incompatible",
            Compatibility::Unknown => "Unknown",
        })
    }
}

#[derive(Debug, Clone)]
pub struct ModulusSpec {
    name: String,
    kind: ModulusKind,
    declared: Compatibility,
}

fn check_exponent(label: &str, p: f64) -> Result<()> {
    if p.is_finite() && p > 0.0 && p <= 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParams(format!(
            "{label} = {p} must lie in (0, 1]"
        )))
    }
}

impl ModulusSpec {
    pub fn new(
        name: impl Into<String>,
        kind: ModulusKind,
        declared: Compatibility,
    ) -> Result<Self> {
        match &kind {
            ModulusKind::PowerSum { p, q } => {
                check_exponent("p", *p)?;
                check_exponent("q", *q)?;
            }
            ModulusKind::PowerPlusLog { p } => check_exponent("p", *p)?,
            _ => {}
        }
        Ok(Self {
            name: name.into(),
            kind,
            declared,
        })
    }

    pub fn identity() -> Self {
        Self {
            name: "identity".into(),
            kind: ModulusKind::Identity,
            declared: Compatibility::Compatible,
        }
    }

    pub fn log1p() -> Self {
        Self {
            name: "log1p".into(),
            kind: ModulusKind::Log1p,
            declared: Compatibility::Incompatible,
        }
    }

    pub fn lambert_w() -> Self {
        Self {
            name: "lambertw".into(),
            kind: ModulusKind::LambertW,
            declared: Compatibility::Incompatible,
        }
    }

    pub fn x_plus_ratio() -> Self {
        Self {
            name: "xratio".into(),
            kind: ModulusKind::XPlusRatio,
            declared: Compatibility::Compatible,
        }
    }

    pub fn power_sum(p: f64, q: f64) -> Result<Self> {
        Self::new(
            "powsum",
            ModulusKind::PowerSum { p, q },
            Compatibility::Compatible,
        )
    }

    pub fn power_plus_log(p: f64) -> Result<Self> {
        Self::new(
            "powlog",
            ModulusKind::PowerPlusLog { p },
            Compatibility::Compatible,
        )
    }

    pub fn custom(name: impl Into<String>, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            name: name.into(),
            kind: ModulusKind::Custom(Arc::new(f)),
            declared: Compatibility::Unknown,
        }
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> &ModulusKind {
        &self.kind
    }

    pub fn declared(&self) -> Compatibility {
        self.declared
    }

    pub fn is_identity(&self) -> bool {
        matches!(self.kind, ModulusKind::Identity)
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        if !(x >= 0.0) {
            return Err(Error::NegativeInput(x));
        }
        Ok(self.value(x))
    }

    /// Unchecked evaluation for hot loops; `x` must be nonnegative.
    #[inline]
    pub fn value(&self, x: f64) -> f64 {
        match &self.kind {
            ModulusKind::Identity => x,
            ModulusKind::Log1p => x.ln_1p(),
            ModulusKind::XPlusRatio => x + x / (x + 1.0),
            ModulusKind::PowerSum { p, q } => x.powf(*p) + x.powf(*q),
            ModulusKind::PowerPlusLog { p } => x.powf(*p) + x.ln_1p(),
            ModulusKind::LambertW => lambert_w0(x),
            ModulusKind::Custom(f) => f(x),
        }
    }
}

pub fn eval_modulus(spec: &ModulusSpec, x: f64) -> Result<f64> {
    spec.eval(x)
}

/// W_0(x) for x >= 0 by Newton iteration seeded at ln(1 + x).
pub fn lambert_w0(x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    let tol = LAMBERT_TOL * x.max(1.0);
    let mut w = x.ln_1p();
    for _ in 0..LAMBERT_MAX_ITER {
        let ew = w.exp();
        let resid = w * ew - x;
        if resid.abs() <= tol {
            break;
        }
        w -= resid / (ew * (w + 1.0));
    }
    w
}

// ---------------------------------------------------------------- axioms

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Axiom {
    ZeroOnlyAtZero,
    Subadditive,
    Increasing,
    RightContinuousAtZero,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AxiomCheck {
    pub axiom: Axiom,
    pub passed: bool,
    /// Offending inputs, e.g. the pair (x, y) for subadditivity.
    pub witness: Option<Vec<f64>>,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AxiomReport {
    pub name: String,
    pub checks: Vec<AxiomCheck>,
}

impl AxiomReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, axiom: Axiom) -> Option<&AxiomCheck> {
        self.checks.iter().find(|c| c.axiom == axiom)
    }
}

fn log_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..points)
        .map(|i| (a + (b - a) * i as f64 / (points - 1) as f64).exp())
        .collect()
}

fn verdict(
    axiom: Axiom,
    witness: Option<Vec<f64>>,
    ok_detail: &str,
    fail_detail: String,
) -> AxiomCheck {
    match witness {
        None => AxiomCheck {
            axiom,
            passed: true,
            witness: None,
            detail: ok_detail.to_string(),
        },
        Some(w) => AxiomCheck {
            axiom,
            passed: false,
            witness: Some(w),
            detail: fail_detail,
        },
    }
}

pub fn check_modulus_axioms(
    spec: &ModulusSpec,
    grid_max: f64,
    grid_points: usize,
) -> Result<AxiomReport> {
    if grid_points < 2 {
        return Err(Error::InvalidArgument(format!(
            "grid_points = {grid_points} must be >= 2"
        )));
    }
    if !(grid_max.is_finite() && grid_max > 1e-3) {
        return Err(Error::InvalidArgument(format!(
            "grid_max = {grid_max} must exceed 1e-3"
        )));
    }
    let f = |x: f64| spec.value(x);
    let grid = log_grid(1e-3, grid_max, grid_points);
    let tol = |v: f64| 1e-12 * v.abs().max(1.0);

    let zero = {
        let at_zero = f(0.0);
        let bad = if at_zero != 0.0 {
            Some(vec![0.0])
        } else {
            grid.iter().find(|&&x| !(f(x) > 0.0)).map(|&x| vec![x])
        };
        verdict(
            Axiom::ZeroOnlyAtZero,
            bad,
            "f(0) = 0 and f > 0 on grid",
            "f vanishes off zero or f(0) != 0".into(),
        )
    };

    let subadd = {
        let mut rng = ChaCha8Rng::seed_from_u64(AXIOM_SEED);
        let mut bad = None;
        'outer: for (i, &x) in grid.iter().enumerate() {
            for &y in &grid[i..] {
                if f(x + y) > f(x) + f(y) + tol(f(x + y)) {
                    bad = Some(vec![x, y]);
                    break 'outer;
                }
            }
        }
        if bad.is_none() {
            for _ in 0..grid_points.max(100) {
                let (x, y) = (rng.gen_range(0.0..grid_max), rng.gen_range(0.0..grid_max));
                if f(x + y) > f(x) + f(y) + tol(f(x + y)) {
                    bad = Some(vec![x, y]);
                    break;
                }
            }
        }
        let detail = bad
            .as_ref()
            .map(|w| format!("f({} + {}) > f({}) + f({})", w[0], w[1], w[0], w[1]))
            .unwrap_or_default();
        verdict(
            Axiom::Subadditive,
            bad,
            "no violating pair on grid or random pairs",
            detail,
        )
    };

    let increasing = {
        let bad = grid
            .windows(2)
            .find(|w| f(w[1]) + tol(f(w[1])) < f(w[0]))
            .map(|w| w.to_vec());
        verdict(
            Axiom::Increasing,
            bad,
            "nondecreasing on grid",
            "decrease between consecutive grid points".into(),
        )
    };

    let right_cont = {
        let vals: Vec<f64> = (1..=12).map(|k| f(10f64.powi(-k))).collect();
        let monotone = vals.windows(2).all(|w| w[1] < w[0]);
        let small = *vals.last().unwrap() < 1e-3 * f(1.0);
        let bad = (!(monotone && small)).then(|| vec![1e-12, *vals.last().unwrap()]);
        verdict(
            Axiom::RightContinuousAtZero,
            bad,
            "f(10^-k) decreases towards 0",
            "f(10^-k) does not decay to 0".into(),
        )
    };

    let unbounded = {
        let top = grid_max.log10().floor().max(1.0) as i32;
        let vals: Vec<f64> = (0..=top).map(|k| f(10f64.powi(k))).collect();
        let growing = vals.windows(2).all(|w| w[1] > w[0]);
        let last_step =
            (vals[vals.len() - 1] - vals[vals.len() - 2]) / vals[vals.len() - 1].abs().max(1e-300);
        let bad = (!(growing && last_step > 1e-3)).then(|| vec![10f64.powi(top)]);
        verdict(
            Axiom::Unbounded,
            bad,
            "f(10^k) keeps growing",
            "f(10^k) plateaus on the grid".into(),
        )
    };

    Ok(AxiomReport {
        name: spec.name.clone(),
        checks: vec![zero, subadd, increasing, right_cont, unbounded],
    })
}

// ------------------------------------------------------------------- phi

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum PhiMode {
    Global,
    Lacunary { theta: String },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhiEstimate {
    pub epsilon: f64,
    /// max(tail_max, extrapolated)
    pub value: f64,
    /// Largest ratio over scales in (H/2, H].
    pub tail_max: f64,
    /// Limit of the ratio extrapolated linearly in 1/ln(scale), clamped.
    pub extrapolated: Option<f64>,
    /// The same estimate one decade earlier (horizon H/10).
    pub prior_value: f64,
    pub plateau: bool,
    pub horizon: u64,
    /// (scale, ratio) at the checkpoints 1, 2, 5, 10, ... <= H
    pub trajectory: Vec<(u64, f64)>,
    pub mode: PhiMode,
}

pub const PHI_PLATEAU_TOL: f64 = 1e-2;

/// 1, 2, 5, 10, 20, 50, ... up to and including `h`.
pub fn checkpoints_125(h: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut decade = 1u64;
    'outer: loop {
        for m in [1u64, 2, 5] {
            let Some(c) = decade.checked_mul(m) else {
                break 'outer;
            };
            if c > h {
                break 'outer;
            }
            out.push(c);
        }
        let Some(d) = decade.checked_mul(10) else {
            break;
        };
        decade = d;
    }
    if out.last() != Some(&h) {
        out.push(h);
    }
    out
}

fn richardson(s1: u64, r1: f64, s2: u64, r2: f64) -> Option<f64> {
    if s1 < 2 || s2 <= s1 {
        return None;
    }
    let (t1, t2) = (1.0 / (s1 as f64).ln(), 1.0 / (s2 as f64).ln());
    let l = (t1 * r2 - t2 * r1) / (t1 - t2);
    l.is_finite().then_some(l)
}

fn clamp_limit(eps: f64, l: f64) -> f64 {
    let cap = if eps <= 1.0 { 1.0 } else { eps.ceil() };
    l.clamp(0.0, cap)
}

/// Ratio samples on some scale set, with the summaries phi needs.
struct RatioScan {
    tail: Option<f64>,
    prior_tail: Option<f64>,
    /// last sample at scale <= H, H/10, H/100
    at_h: Option<(u64, f64)>,
    at_h10: Option<(u64, f64)>,
    at_h100: Option<(u64, f64)>,
    trajectory: Vec<(u64, f64)>,
}

impl RatioScan {
    fn new() -> Self {
        Self {
            tail: None,
            prior_tail: None,
            at_h: None,
            at_h10: None,
            at_h100: None,
            trajectory: Vec::new(),
        }
    }

    /// Feed samples in increasing scale order.
    fn observe(&mut self, horizon: u64, s: u64, r: f64, cps: &[u64], cp_idx: &mut usize) {
        while *cp_idx < cps.len() && cps[*cp_idx] < s {
            if let Some(last) = self.at_h {
                self.trajectory.push((cps[*cp_idx], last.1));
            }
            *cp_idx += 1;
        }
        if *cp_idx < cps.len() && cps[*cp_idx] == s {
            self.trajectory.push((s, r));
            *cp_idx += 1;
        }
        if s > horizon / 2 {
            self.tail = Some(self.tail.map_or(r, |t: f64| t.max(r)));
        }
        if s > horizon / 20 && s <= horizon / 10 {
            self.prior_tail = Some(self.prior_tail.map_or(r, |t: f64| t.max(r)));
        }
        if s <= horizon / 100 {
            self.at_h100 = Some((s, r));
        }
        if s <= horizon / 10 {
            self.at_h10 = Some((s, r));
        }
        self.at_h = Some((s, r));
    }

    fn finish(
        mut self,
        eps: f64,
        cps: &[u64],
        mut cp_idx: usize,
    ) -> (f64, f64, Option<f64>, f64, Vec<(u64, f64)>) {
        while cp_idx < cps.len() {
            if let Some(last) = self.at_h {
                self.trajectory.push((cps[cp_idx], last.1));
            }
            cp_idx += 1;
        }
        let last = self.at_h.map_or(0.0, |x| x.1);
        let tail = self.tail.unwrap_or(last);
        let prior_tail = self.prior_tail.or(self.at_h10.map(|x| x.1)).unwrap_or(tail);
        let extrap = match (self.at_h10, self.at_h) {
            (Some((s1, r1)), Some((s2, r2))) => {
                richardson(s1, r1, s2, r2).map(|l| clamp_limit(eps, l))
            }
            _ => None,
        };
        let prior_extrap = match (self.at_h100, self.at_h10) {
            (Some((s1, r1)), Some((s2, r2))) => {
                richardson(s1, r1, s2, r2).map(|l| clamp_limit(eps, l))
            }
            _ => None,
        };
        let value = extrap.map_or(tail, |e| e.max(tail));
        let prior = prior_extrap.map_or(prior_tail, |e| e.max(prior_tail));
        (value, tail, extrap, prior, self.trajectory)
    }
}

pub fn phi_estimate(
    spec: &ModulusSpec,
    epsilon: f64,
    horizon: u64,
    theta: Option<&LacunaryTheta>,
) -> Result<PhiEstimate> {
    if horizon < 100 {
        return Err(Error::InvalidHorizon {
            got: horizon,
            min: 100,
        });
    }
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "epsilon = {epsilon} must be positive"
        )));
    }
    let ratio = |s: u64| {
        let x = s as f64;
        spec.value(x * epsilon) / spec.value(x)
    };
    let cps = checkpoints_125(horizon);
    let mut scan = RatioScan::new();
    let mut cp_idx = 0usize;
    let mode = match theta {
        None => {
            // sparse below H/20: only the points the summaries can need
            let lo = horizon / 20;
            let mut early: Vec<u64> = cps.iter().copied().filter(|&c| c <= lo).collect();
            early.extend([horizon / 100, lo]);
            early.retain(|&c| c >= 1);
            early.sort_unstable();
            early.dedup();
            for s in early {
                scan.observe(horizon, s, ratio(s), &cps, &mut cp_idx);
            }
            for s in lo + 1..=horizon {
                scan.observe(horizon, s, ratio(s), &cps, &mut cp_idx);
            }
            PhiMode::Global
        }
        Some(t) => {
            // block lengths are only eventually monotone: keep a running order
            let mut samples: Vec<(u64, f64)> = Vec::new();
            let mut run_max = 0u64;
            for b in t.blocks() {
                if b.len > horizon {
                    break;
                }
                if b.len > run_max {
                    run_max = b.len;
                    samples.push((b.len, ratio(b.len)));
                }
            }
            for (s, r) in samples {
                scan.observe(horizon, s, r, &cps, &mut cp_idx);
            }
            PhiMode::Lacunary {
                theta: t.name().to_string(),
            }
        }
    };
    let (value, tail_max, extrapolated, prior_value, trajectory) =
        scan.finish(epsilon, &cps, cp_idx);
    let plateau =
        (value - prior_value).abs() <= PHI_PLATEAU_TOL * value.abs().max(f64::MIN_POSITIVE);
    Ok(PhiEstimate {
        epsilon,
        value,
        tail_max,
        extrapolated,
        prior_value,
        plateau,
        horizon,
        trajectory,
        mode,
    })
}

// -------------------------------------------------------- classification

pub const COMPATIBLE_BELOW: f64 = 0.05;
pub const INCOMPATIBLE_ABOVE: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Classification {
    pub name: String,
    pub verdict: Compatibility,
    pub declared: Compatibility,
    pub estimates: Vec<PhiEstimate>,
    /// Set when a declared status disagrees with a definite numeric verdict.
    pub conflict: Option<String>,
}

pub fn default_eps_grid() -> Vec<f64> {
    vec![0.1, 0.01, 0.001, 0.0001]
}

pub fn classify_compatibility(
    spec: &ModulusSpec,
    eps_grid: &[f64],
    horizon: u64,
    theta: Option<&LacunaryTheta>,
) -> Result<Classification> {
    if eps_grid.len() < 4 {
        return Err(Error::GridTooCoarse(format!(
            "{} points, need at least 4",
            eps_grid.len()
        )));
    }
    if eps_grid.iter().any(|e| !(*e > 0.0)) || eps_grid.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::GridTooCoarse(
            "grid must be strictly decreasing and positive".into(),
        ));
    }
    let estimates = eps_grid
        .iter()
        .map(|&e| phi_estimate(spec, e, horizon, theta))
        .collect::<Result<Vec<_>>>()?;
    let finest = estimates.last().unwrap();
    let nonincreasing = estimates
        .windows(2)
        .all(|w| w[1].value <= w[0].value + 1e-12);
    let verdict = if finest.value < COMPATIBLE_BELOW
        && finest.prior_value < COMPATIBLE_BELOW
        && nonincreasing
    {
        Compatibility::Compatible
    } else if estimates
        .iter()
        .all(|e| e.value >= INCOMPATIBLE_ABOVE && e.prior_value >= INCOMPATIBLE_ABOVE)
    {
        Compatibility::Incompatible
    } else {
        Compatibility::Unknown
    };
    let declared = spec.declared();
    let conflict = match (declared, verdict) {
        (Compatibility::Unknown, _) | (_, Compatibility::Unknown) => None,
        (d, v) if d == v => None,
        (d, v) => Some(format!("declared {d} but numerics say {v}")),
    };
    Ok(Classification {
        name: spec.name().to_string(),
        verdict,
        declared,
        estimates,
        conflict,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lacunary::{build_lacunary, ThetaKind};

    #[test]
    fn closed_form_values() {
        assert_eq!(ModulusSpec::identity().eval(7.5).unwrap(), 7.5);
        assert_eq!(ModulusSpec::log1p().eval(0.0).unwrap(), 0.0);
        assert_eq!(ModulusSpec::x_plus_ratio().eval(1.0).unwrap(), 1.5);
        assert!(matches!(
            ModulusSpec::log1p().eval(-1.0),
            Err(Error::NegativeInput(_))
        ));
        assert!(matches!(
            ModulusSpec::power_sum(0.5, 1.5),
            Err(Error::InvalidParams(_))
        ));
        assert!(matches!(
            ModulusSpec::power_plus_log(0.0),
            Err(Error::InvalidParams(_))
        ));
    }

    fn bisect_w(x: f64) -> f64 {
        let (mut lo, mut hi) = (0.0f64, x.max(1.0));
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid * mid.exp() < x {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn lambert_w_against_bisection() {
        let e = std::f64::consts::E;
        assert!((lambert_w0(e) - 1.0).abs() < 1e-14);
        for &x in &[1e-9, 0.3, 1.0, 10.0, 1e3, 1e7, 1e15] {
            let w = lambert_w0(x);
            assert!((w * w.exp() - x).abs() <= 1e-12 * x.max(1.0), "x={x}");
            assert!((w - bisect_w(x)).abs() <= 1e-12 * w.max(1.0), "x={x}");
        }
    }

    #[test]
    fn catalog_moduli_satisfy_axioms() {
        for spec in [
            ModulusSpec::identity(),
            ModulusSpec::log1p(),
            ModulusSpec::lambert_w(),
            ModulusSpec::x_plus_ratio(),
            ModulusSpec::power_sum(0.5, 0.5).unwrap(),
            ModulusSpec::power_plus_log(0.5).unwrap(),
        ] {
            let rep = check_modulus_axioms(&spec, 1e6, 300).unwrap();
            assert!(rep.all_passed(), "{}: {:?}", spec.name(), rep);
        }
    }

    #[test]
    fn square_is_not_subadditive() {
        let rep = check_modulus_axioms(&ModulusSpec::custom("sq", |x| x * x), 100.0, 50).unwrap();
        let c = rep.check(Axiom::Subadditive).unwrap();
        assert!(!c.passed);
        let w = c.witness.as_ref().unwrap();
        assert!((w[0] + w[1]).powi(2) > w[0] * w[0] + w[1] * w[1]);
    }

    #[test]
    fn bounded_function_flagged() {
        let rep =
            check_modulus_axioms(&ModulusSpec::custom("sat", |x| x / (1.0 + x)), 1e6, 100).unwrap();
        assert!(!rep.check(Axiom::Unbounded).unwrap().passed);
    }

    #[test]
    fn phi_identity_is_epsilon() {
        for eps in [0.5, 0.25, 0.1] {
            let est = phi_estimate(&ModulusSpec::identity(), eps, 10_000, None).unwrap();
            assert!((est.value - eps).abs() < 1e-12);
            assert!((est.tail_max - eps).abs() < 1e-15);
            assert!(est.plateau);
        }
    }

    #[test]
    fn phi_power_sum_is_sqrt_eps() {
        let est = phi_estimate(
            &ModulusSpec::power_sum(0.5, 0.5).unwrap(),
            0.04,
            100_000,
            None,
        )
        .unwrap();
        assert!((est.value - 0.2).abs() < 1e-9, "{}", est.value);
    }

    #[test]
    fn phi_log1p_near_one() {
        let est = phi_estimate(&ModulusSpec::log1p(), 0.01, 1_000_000, None).unwrap();
        assert!(est.value >= 0.95 && est.value <= 1.0, "{}", est.value);
        assert!(est.tail_max < est.value);
        assert!(est.plateau);
    }

    #[test]
    fn phi_trajectory_on_checkpoints() {
        let est = phi_estimate(&ModulusSpec::log1p(), 0.1, 1000, None).unwrap();
        let scales: Vec<u64> = est.trajectory.iter().map(|p| p.0).collect();
        assert_eq!(scales, checkpoints_125(1000));
        assert!(est
            .trajectory
            .iter()
            .filter(|p| p.0 > 500)
            .all(|p| p.1 <= est.tail_max));
    }

    #[test]
    fn phi_theta_identity() {
        let t = build_lacunary(ThetaKind::Polynomial { degree: 2 }).unwrap();
        let est = phi_estimate(&ModulusSpec::identity(), 0.3, 100_000, Some(&t)).unwrap();
        assert!((est.value - 0.3).abs() < 1e-12);
        assert_eq!(
            est.mode,
            PhiMode::Lacunary {
                theta: "poly2".into()
            }
        );
    }

    #[test]
    fn classification_examples() {
        let grid = default_eps_grid();
        let c = classify_compatibility(&ModulusSpec::identity(), &grid, 10_000, None).unwrap();
        assert_eq!(c.verdict, Compatibility::Compatible);
        let c = classify_compatibility(&ModulusSpec::x_plus_ratio(), &grid, 100_000, None).unwrap();
        assert_eq!(c.verdict, Compatibility::Compatible);
        assert!(c.conflict.is_none());
        let c = classify_compatibility(&ModulusSpec::log1p(), &grid, 1_000_000, None).unwrap();
        assert_eq!(c.verdict, Compatibility::Incompatible);
        assert!(matches!(
            classify_compatibility(&ModulusSpec::identity(), &grid[..3], 1000, None),
            Err(Error::GridTooCoarse(_))
        ));
        assert!(matches!(
            classify_compatibility(
                &ModulusSpec::identity(),
                &[0.1, 0.2, 0.01, 0.001],
                1000,
                None
            ),
            Err(Error::GridTooCoarse(_))
        ));
    }

    #[test]
    fn checkpoint_ladder() {
        assert_eq!(checkpoints_125(100), vec![1, 2, 5, 10, 20, 50, 100]);
        assert_eq!(checkpoints_125(30), vec![1, 2, 5, 10, 20, 30]);
    }
}
