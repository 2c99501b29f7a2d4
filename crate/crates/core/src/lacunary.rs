//! Lacunary sequences θ = (k_r) with k_0 = 0 and their block arithmetic.
//!
//! Block r is the half-open interval I_r = (k_{r-1}, k_r] of length
//! h_r = k_r - k_{r-1}; q_r = k_r / k_{r-1}.

use std::fmt;
use std::sync::{Arc, RwLock};

use serde::Serialize;

use crate::error::{Error, Result};

/// Generator for `ThetaKind::Custom`: maps r >= 1 to k_r.
pub type ThetaGenerator = Arc<dyn Fn(usize) -> u64 + Send + Sync>;

/// Geometric terms are kept exact only while f64 represents every integer.
const EXACT_F64_LIMIT: u64 = 1 << 53;
const LACUNARITY_PROBE_BLOCKS: usize = 200;
const LACUNARITY_MIN_LENGTH: u64 = 10;

#[derive(Clone)]
pub enum ThetaKind {
    Geometric {
        ratio: f64,
    },
    Polynomial {
        degree: u32,
    },
    /// k_1, k_2, ... (k_0 = 0 is implicit).
    Explicit(Vec<u64>),
    Custom(ThetaGenerator),
}

impl fmt::Debug for ThetaKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ThetaKind::Geometric { ratio } => write!(f, "Geometric({ratio})"),
            ThetaKind::Polynomial { degree } => write!(f, "Polynomial({degree})"),
            ThetaKind::Explicit(v) => write!(f, "Explicit({} terms)", v.len()),
            ThetaKind::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BlockStats {
    pub index: usize,
    /// k_{r-1}
    pub start: u64,
    /// k_r
    pub end: u64,
    /// h_r
    pub len: u64,
    /// q_r, with k_0 = 0 replaced by 1.
    pub ratio: f64,
}

impl BlockStats {
    pub fn contains(&self, n: u64) -> bool {
        self.start < n && n <= self.end
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatioProfile {
    pub blocks: usize,
    pub h_tail: Option<f64>,
    pub liminf_est: f64,
    pub limsup_est: f64,
    pub unbounded_flag: bool,
}

#[derive(Clone)]
enum Terms {
    /// Fully materialised prefix, index 0 holds k_0 = 0.
    Fixed(Arc<Vec<u64>>),
    Polynomial(u32),
    Lazy {
        gen: ThetaGenerator,
        cache: Arc<RwLock<Vec<u64>>>,
    },
}

#[derive(Clone)]
pub struct LacunaryTheta {
    name: String,
    kind: ThetaKind,
    terms: Terms,
}

impl fmt::Debug for LacunaryTheta {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LacunaryTheta")
            .field("name", &self.name)
            .field("kind", &self.kind)
            .finish()
    }
}

/// Builds and validates θ, naming it after its kind.
pub fn build_lacunary(kind: ThetaKind) -> Result<LacunaryTheta> {
    let name = match &kind {
        ThetaKind::Geometric { ratio } => format!("geo{ratio}"),
        ThetaKind::Polynomial { degree } => format!("poly{degree}"),
        ThetaKind::Explicit(_) => "explicit".to_string(),
        ThetaKind::Custom(_) => "custom".to_string(),
    };
    LacunaryTheta::new(name, kind)
}

fn geometric_terms(ratio: f64) -> Vec<u64> {
    let mut out = vec![0u64];
    let mut e = 1i32;
    loop {
        let v = ratio.powi(e).ceil();
        if !v.is_finite() || v >= EXACT_F64_LIMIT as f64 {
            break;
        }
        let v = v as u64;
        if v > *out.last().unwrap() {
            out.push(v);
        }
        e += 1;
    }
    out
}

impl LacunaryTheta {
    pub fn new(name: impl Into<String>, kind: ThetaKind) -> Result<Self> {
        let terms = match &kind {
            ThetaKind::Geometric { ratio } => {
                if !(ratio.is_finite() && *ratio > 1.0) {
                    return Err(Error::BadParams(format!(
                        "geometric ratio {ratio} must exceed 1"
                    )));
                }
                Terms::Fixed(Arc::new(geometric_terms(*ratio)))
            }
            ThetaKind::Polynomial { degree } => {
                if *degree < 2 {
                    return Err(Error::BadParams(format!(
                        "polynomial degree {degree} must be >= 2"
                    )));
                }
                Terms::Polynomial(*degree)
            }
            ThetaKind::Explicit(list) => {
                if list.is_empty() {
                    return Err(Error::BadParams("explicit list is empty".into()));
                }
                let mut prev = 0u64;
                for (i, &k) in list.iter().enumerate() {
                    if k <= prev {
                        return Err(Error::NotIncreasing(i + 1));
                    }
                    prev = k;
                }
                let mut v = Vec::with_capacity(list.len() + 1);
                v.push(0);
                v.extend_from_slice(list);
                Terms::Fixed(Arc::new(v))
            }
            ThetaKind::Custom(gen) => Terms::Lazy {
                gen: gen.clone(),
                cache: Arc::new(RwLock::new(vec![0])),
            },
        };
        let theta = Self {
            name: name.into(),
            kind,
            terms,
        };
        theta.validate()?;
        Ok(theta)
    }

    fn validate(&self) -> Result<()> {
        let mut prev = 0u64;
        let mut reached = false;
        for r in 1..=LACUNARITY_PROBE_BLOCKS {
            let Some(k) = self.term(r) else { break };
            if k <= prev {
                return Err(Error::NotIncreasing(r));
            }
            if k - prev >= LACUNARITY_MIN_LENGTH {
                reached = true;
                break;
            }
            prev = k;
        }
        if reached {
            Ok(())
        } else {
            Err(Error::NotLacunary(format!(
                "block lengths stay below {LACUNARITY_MIN_LENGTH} over the first {LACUNARITY_PROBE_BLOCKS} blocks"
            )))
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> &ThetaKind {
        &self.kind
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Exact k_r, or `None` past the representable or listed range.
    pub fn term(&self, r: usize) -> Option<u64> {
        if r == 0 {
            return Some(0);
        }
        match &self.terms {
            Terms::Fixed(v) => v.get(r).copied(),
            Terms::Polynomial(d) => (r as u64).checked_pow(*d),
            Terms::Lazy { gen, cache } => {
                if let Some(&k) = cache.read().expect("theta cache poisoned").get(r) {
                    return Some(k);
                }
                let mut c = cache.write().expect("theta cache poisoned");
                let target = (r + 1).max(2 * c.len());
                while c.len() < target {
                    let next = c.len();
                    c.push(gen(next));
                }
                Some(c[r])
            }
        }
    }

    /// k_r as a float; continues analytically where exact terms run out.
    pub fn term_f64(&self, r: usize) -> Option<f64> {
        if let Some(k) = self.term(r) {
            return Some(k as f64);
        }
        match &self.kind {
            ThetaKind::Geometric { ratio } => Some(ratio.powf(r as f64).ceil()),
            ThetaKind::Polynomial { degree } => Some((r as f64).powi(*degree as i32)),
            _ => None,
        }
    }

    pub fn block_stats(&self, r: usize) -> Option<BlockStats> {
        if r == 0 {
            return None;
        }
        let start = self.term(r - 1)?;
        let end = self.term(r)?;
        Some(BlockStats {
            index: r,
            start,
            end,
            len: end - start,
            ratio: end as f64 / start.max(1) as f64,
        })
    }

    /// q_r; beyond the exact range falls back to the closed form.
    pub fn ratio(&self, r: usize) -> Option<f64> {
        if r == 0 {
            return None;
        }
        if let Some(b) = self.block_stats(r) {
            return Some(b.ratio);
        }
        match &self.kind {
            ThetaKind::Geometric { ratio } => Some(*ratio),
            ThetaKind::Polynomial { degree } if r >= 2 => {
                Some((r as f64 / (r - 1) as f64).powi(*degree as i32))
            }
            _ => None,
        }
    }

    /// Index r with n in I_r, for n >= 1.
    pub fn block_of(&self, n: u64) -> Option<usize> {
        if n == 0 {
            return None;
        }
        // smallest r with k_r >= n; missing terms count as +inf
        let at_least = |r: usize| self.term(r).is_none_or(|k| k >= n);
        let mut lo = 0usize;
        let mut hi = 1usize;
        while !at_least(hi) {
            lo = hi;
            hi = hi.checked_mul(2)?;
        }
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if at_least(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        self.term(hi).map(|_| hi)
    }

    pub fn blocks(&self) -> impl Iterator<Item = BlockStats> + '_ {
        (1..).map_while(move |r| self.block_stats(r))
    }

    /// Complete blocks I_r with k_r <= horizon, in order.
    pub fn blocks_within(&self, horizon: u64) -> impl Iterator<Item = BlockStats> + '_ {
        self.blocks().take_while(move |b| b.end <= horizon)
    }

    pub fn complete_blocks(&self, horizon: u64) -> usize {
        self.blocks_within(horizon).count()
    }

    /// Largest index for which q_r is known, capped at `max`.
    fn ratio_span(&self, max: usize) -> usize {
        match &self.terms {
            Terms::Fixed(v) if !matches!(self.kind, ThetaKind::Geometric { .. }) => {
                max.min(v.len() - 1)
            }
            _ => max,
        }
    }

    pub fn ratio_profile(&self, blocks: usize) -> Result<RatioProfile> {
        if blocks < 10 {
            return Err(Error::InvalidArgument(format!(
                "ratio profile needs at least 10 blocks, got {blocks}"
            )));
        }
        let r_max = self.ratio_span(blocks);
        if r_max < 2 {
            return Err(Error::InvalidArgument("too few known ratios".into()));
        }
        let fold = |lo: usize, hi: usize| {
            (lo.max(2)..=hi.max(2))
                .filter_map(|r| self.ratio(r))
                .fold((f64::INFINITY, 0.0f64), |(mn, mx), q| {
                    (mn.min(q), mx.max(q))
                })
        };
        let (liminf_est, limsup_est) = fold(r_max.div_ceil(2), r_max);
        let (_, early_max) = fold(r_max / 4, r_max / 2);
        let h_tail = match (self.term_f64(r_max), self.term_f64(r_max - 1)) {
            (Some(a), Some(b)) => Some(a - b),
            _ => None,
        };
        Ok(RatioProfile {
            blocks: r_max,
            h_tail,
            liminf_est,
            limsup_est,
            unbounded_flag: limsup_est >= 1.5 * early_max,
        })
    }
}
