//! Named moduli, thetas and sequence families, built in or loaded from
//! `key=value` blocks separated by blank lines:
//!
//! ```text
//! name=log1p
//! kind=log1p
//! declared_compatibility=incompatible
//!
//! name=geo3
//! kind=geometric
//! params=3
//! ```
//!
//! The entry type follows from `kind` (or an explicit `type=modulus|theta|sequence`).

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::counterexamples::{
    build_gap_sequence, build_reciproco_sequence, build_sparse_block_sequence, build_th3_sequence,
    CounterexampleKind, EpsSchedule, WitnessedSequence,
};
use crate::error::{Error, Result};
use crate::lacunary::{LacunaryTheta, ThetaKind};
use crate::modulus::{Compatibility, ModulusKind, ModulusSpec};
use crate::sequence::{IndexSet, SequenceKind, SequenceSpec};

pub type Block = BTreeMap<String, String>;

/// Parses blank-line separated `key=value` blocks; `#` starts a comment line.
pub fn parse_blocks(text: &str) -> Result<Vec<Block>> {
    let mut blocks = Vec::new();
    let mut cur = Block::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.starts_with('#') {
            continue;
        }
        if line.is_empty() {
            if !cur.is_empty() {
                blocks.push(std::mem::take(&mut cur));
            }
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            Error::Catalog(format!("line {}: expected key=value, got `{line}`", i + 1))
        })?;
        let key = k.trim().to_ascii_lowercase();
        if cur.insert(key.clone(), v.trim().to_string()).is_some() {
            return Err(Error::Catalog(format!(
                "line {}: duplicate key `{key}`",
                i + 1
            )));
        }
    }
    if !cur.is_empty() {
        blocks.push(cur);
    }
    Ok(blocks)
}

pub fn parse_f64_list(s: &str) -> Result<Vec<f64>> {
    if s.trim().is_empty() {
        return Ok(Vec::new());
    }
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::Catalog(format!("bad number `{}`", t.trim())))
        })
        .collect()
}

fn parse_u64_list(s: &str) -> Result<Vec<u64>> {
    parse_f64_list(s)?
        .into_iter()
        .map(|x| {
            if x >= 0.0 && x.fract() == 0.0 && x < 1.8e19 {
                Ok(x as u64)
            } else {
                Err(Error::Catalog(format!("`{x}` is not a natural number")))
            }
        })
        .collect()
}

/// Sequence entries: fixed generators, or families resolved against (f, theta).
#[derive(Debug, Clone)]
pub enum SequenceFamily {
    Fixed(SequenceSpec),
    /// x_n = n at the block ends of the instance theta.
    Spikes,
    Construction {
        kind: CounterexampleKind,
        params: ConstructionParams,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstructionParams {
    pub eps: EpsSchedule,
    pub witnesses: usize,
    pub x0: f64,
    /// Desk horizon for the sparse-block family.
    pub horizon: u64,
}

impl Default for ConstructionParams {
    fn default() -> Self {
        Self {
            eps: EpsSchedule::InvK,
            witnesses: 5,
            x0: 1.0,
            horizon: 10_000_000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SequenceEntry {
    pub name: String,
    pub family: SequenceFamily,
    /// Overrides the candidate limit of the resolved sequence.
    pub limit: Option<f64>,
}

impl SequenceEntry {
    pub fn is_construction(&self) -> bool {
        matches!(self.family, SequenceFamily::Construction { .. })
    }
}

#[derive(Debug, Clone)]
pub struct ResolvedSequence {
    pub seq: SequenceSpec,
    pub witnessed: Option<Arc<WitnessedSequence>>,
}

#[derive(Debug, Clone, Default)]
pub struct Catalog {
    pub moduli: Vec<ModulusSpec>,
    pub thetas: Vec<LacunaryTheta>,
    pub sequences: Vec<SequenceEntry>,
}

/// k_r = 2^(r^2), r = 1..=7
pub fn super_geometric_terms() -> Vec<u64> {
    (1..=7u32).map(|r| 1u64 << (r * r)).collect()
}

pub fn builtin_catalog() -> Catalog {
    let moduli = vec![
        ModulusSpec::identity(),
        ModulusSpec::power_sum(0.5, 0.5).expect("valid"),
        ModulusSpec::power_plus_log(0.5).expect("valid"),
        ModulusSpec::power_plus_log(1.0)
            .expect("valid")
            .with_name("xpluslog"),
        ModulusSpec::x_plus_ratio(),
        ModulusSpec::log1p(),
        ModulusSpec::lambert_w(),
    ];
    let thetas = vec![
        LacunaryTheta::new("geo2", ThetaKind::Geometric { ratio: 2.0 }).expect("valid"),
        LacunaryTheta::new("geo1.5", ThetaKind::Geometric { ratio: 1.5 }).expect("valid"),
        LacunaryTheta::new("poly2", ThetaKind::Polynomial { degree: 2 }).expect("valid"),
        LacunaryTheta::new("sgeo", ThetaKind::Explicit(super_geometric_terms())).expect("valid"),
    ];
    let fixed = |name: &str, kind: SequenceKind| SequenceEntry {
        name: name.into(),
        family: SequenceFamily::Fixed(SequenceSpec::new(name, kind, 0.0)),
        limit: None,
    };
    let construction = |name: &str, kind: CounterexampleKind| SequenceEntry {
        name: name.into(),
        family: SequenceFamily::Construction {
            kind,
            params: ConstructionParams::default(),
        },
        limit: None,
    };
    let sequences = vec![
        fixed("zero", SequenceKind::Zero),
        fixed("inv_square", SequenceKind::InverseSquare),
        fixed("harmonic", SequenceKind::Harmonic),
        fixed("inv_sqrt", SequenceKind::InverseSqrt),
        fixed("inv_log", SequenceKind::InverseLog),
        fixed("squares", SequenceKind::Indicator(IndexSet::Squares)),
        fixed("pow2", SequenceKind::Indicator(IndexSet::PowersOfTwo)),
        fixed("evens", SequenceKind::Indicator(IndexSet::Evens)),
        fixed("alternating", SequenceKind::Alternating),
        SequenceEntry {
            name: "spikes".into(),
            family: SequenceFamily::Spikes,
            limit: None,
        },
        construction("reciproco", CounterexampleKind::Reciproco),
        construction("th3", CounterexampleKind::Th3),
        construction("sember", CounterexampleKind::Gap),
        construction("sparse", CounterexampleKind::SparseBlocks),
    ];
    Catalog {
        moduli,
        thetas,
        sequences,
    }
}

fn compat_from(s: Option<&String>) -> Result<Compatibility> {
    match s.map(|s| s.to_ascii_lowercase()).as_deref() {
        None | Some("unknown") | Some("") => Ok(Compatibility::Unknown),
        Some("compatible") => Ok(Compatibility::Compatible),
        Some("incompatible") => Ok(Compatibility::Incompatible),
        Some(o) => Err(Error::Catalog(format!("unknown compatibility `{o}`"))),
    }
}

const MODULUS_KINDS: &[&str] = &[
    "identity",
    "powersum",
    "powerpluslog",
    "xplusratio",
    "log1p",
    "lambertw",
];
const THETA_KINDS: &[&str] = &["geometric", "polynomial", "explicit"];
const SEQUENCE_KINDS: &[&str] = &[
    "zero",
    "constant",
    "inv_square",
    "harmonic",
    "inv_sqrt",
    "inv_log",
    "alternating",
    "indicator",
    "spikes",
    "reciproco",
    "th3",
    "sember",
    "sparse",
];

fn need<'a>(b: &'a Block, key: &str) -> Result<&'a String> {
    b.get(key)
        .ok_or_else(|| Error::Catalog(format!("entry is missing `{key}`")))
}

fn check_keys(b: &Block, allowed: &[&str]) -> Result<()> {
    for k in b.keys() {
        if !allowed.contains(&k.as_str()) {
            return Err(Error::Catalog(format!("unknown key `{k}`")));
        }
    }
    Ok(())
}

fn modulus_from(b: &Block) -> Result<ModulusSpec> {
    check_keys(
        b,
        &["type", "name", "kind", "params", "declared_compatibility"],
    )?;
    let name = need(b, "name")?;
    let kind = need(b, "kind")?.to_ascii_lowercase();
    let params = parse_f64_list(b.get("params").map(String::as_str).unwrap_or(""))?;
    let p = |i: usize| {
        params
            .get(i)
            .copied()
            .ok_or_else(|| Error::Catalog(format!("{name}: kind {kind} needs {} params", i + 1)))
    };
    let k = match kind.as_str() {
        "identity" => ModulusKind::Identity,
        "powersum" => ModulusKind::PowerSum { p: p(0)?, q: p(1)? },
        "powerpluslog" => ModulusKind::PowerPlusLog { p: p(0)? },
        "xplusratio" => ModulusKind::XPlusRatio,
        "log1p" => ModulusKind::Log1p,
        "lambertw" => ModulusKind::LambertW,
        o => return Err(Error::Catalog(format!("unknown modulus kind `{o}`"))),
    };
    ModulusSpec::new(
        name.clone(),
        k,
        compat_from(b.get("declared_compatibility"))?,
    )
}

fn theta_from(b: &Block) -> Result<LacunaryTheta> {
    check_keys(b, &["type", "name", "kind", "params"])?;
    let name = need(b, "name")?;
    let kind = need(b, "kind")?.to_ascii_lowercase();
    let params = b.get("params").map(String::as_str).unwrap_or("");
    let k = match kind.as_str() {
        "geometric" => ThetaKind::Geometric {
            ratio: *parse_f64_list(params)?
                .first()
                .ok_or_else(|| Error::Catalog("geometric needs a ratio".into()))?,
        },
        "polynomial" => {
            let d = *parse_u64_list(params)?
                .first()
                .ok_or_else(|| Error::Catalog("polynomial needs a degree".into()))?;
            ThetaKind::Polynomial {
                degree: u32::try_from(d).map_err(|_| Error::Catalog("degree too large".into()))?,
            }
        }
        "explicit" => ThetaKind::Explicit(parse_u64_list(params)?),
        o => return Err(Error::Catalog(format!("unknown theta kind `{o}`"))),
    };
    LacunaryTheta::new(name.clone(), k)
}

fn index_set_from(s: &str) -> Result<IndexSet> {
    let s = s.trim().to_ascii_lowercase();
    match s.as_str() {
        "evens" => Ok(IndexSet::Evens),
        "odds" => Ok(IndexSet::Odds),
        "squares" => Ok(IndexSet::Squares),
        "pow2" => Ok(IndexSet::PowersOfTwo),
        _ => match s.strip_prefix("multiples:").map(str::parse::<u64>) {
            Some(Ok(m)) if m > 0 => Ok(IndexSet::Multiples(m)),
            _ => Err(Error::Catalog(format!("unknown index set `{s}`"))),
        },
    }
}

/// Index sets by name, for density queries.
pub fn index_set(name: &str) -> Result<IndexSet> {
    index_set_from(name)
}

fn sequence_from(b: &Block) -> Result<SequenceEntry> {
    check_keys(b, &["type", "name", "kind", "params", "limit"])?;
    let name = need(b, "name")?.clone();
    let kind = need(b, "kind")?.to_ascii_lowercase();
    let params = b.get("params").cloned().unwrap_or_default();
    let limit = b
        .get("limit")
        .map(|s| {
            s.parse::<f64>()
                .map_err(|_| Error::Catalog(format!("bad limit `{s}`")))
        })
        .transpose()?;
    let fixed = |k: SequenceKind| SequenceFamily::Fixed(SequenceSpec::new(name.clone(), k, 0.0));
    let nums = || parse_f64_list(&params);
    let family = match kind.as_str() {
        "zero" => fixed(SequenceKind::Zero),
        "constant" => {
            fixed(SequenceKind::Constant(*nums()?.first().ok_or_else(
                || Error::Catalog("constant needs a value".into()),
            )?))
        }
        "inv_square" => fixed(SequenceKind::InverseSquare),
        "harmonic" => fixed(SequenceKind::Harmonic),
        "inv_sqrt" => fixed(SequenceKind::InverseSqrt),
        "inv_log" => fixed(SequenceKind::InverseLog),
        "alternating" => fixed(SequenceKind::Alternating),
        "indicator" => fixed(SequenceKind::Indicator(index_set_from(&params)?)),
        "spikes" => SequenceFamily::Spikes,
        "reciproco" | "th3" => {
            let mut p = ConstructionParams::default();
            for part in params.split(';').map(str::trim).filter(|s| !s.is_empty()) {
                match part.split_once(':') {
                    Some(("eps", v)) => p.eps = EpsSchedule::parse(v.trim())?,
                    Some(("k", v)) => {
                        p.witnesses = v
                            .trim()
                            .parse()
                            .map_err(|_| Error::Catalog(format!("bad K `{v}`")))?
                    }
                    _ => return Err(Error::Catalog(format!("bad construction param `{part}`"))),
                }
            }
            let kind = if kind == "th3" {
                CounterexampleKind::Th3
            } else {
                CounterexampleKind::Reciproco
            };
            SequenceFamily::Construction { kind, params: p }
        }
        "sember" => {
            let v = nums()?;
            let mut p = ConstructionParams::default();
            if let Some(&x0) = v.first() {
                p.x0 = x0;
            }
            if let Some(&j) = v.get(1) {
                p.witnesses = j as usize;
            }
            SequenceFamily::Construction {
                kind: CounterexampleKind::Gap,
                params: p,
            }
        }
        "sparse" => {
            let mut p = ConstructionParams::default();
            if let Some(&h) = nums()?.first() {
                p.horizon = h as u64;
            }
            SequenceFamily::Construction {
                kind: CounterexampleKind::SparseBlocks,
                params: p,
            }
        }
        o => return Err(Error::Catalog(format!("unknown sequence kind `{o}`"))),
    };
    Ok(SequenceEntry {
        name,
        family,
        limit,
    })
}

impl Catalog {
    /// Adds entries from catalog text; same-named entries replace earlier ones.
    pub fn merge_text(&mut self, text: &str) -> Result<()> {
        for b in parse_blocks(text)? {
            let kind = need(&b, "kind")?.to_ascii_lowercase();
            let ty = match b.get("type").map(|s| s.to_ascii_lowercase()) {
                Some(t) => t,
                None if MODULUS_KINDS.contains(&kind.as_str()) => "modulus".into(),
                None if THETA_KINDS.contains(&kind.as_str()) => "theta".into(),
                None if SEQUENCE_KINDS.contains(&kind.as_str()) => "sequence".into(),
                None => return Err(Error::Catalog(format!("unknown kind `{kind}`"))),
            };
            match ty.as_str() {
                "modulus" => {
                    let m = modulus_from(&b)?;
                    self.moduli.retain(|x| x.name() != m.name());
                    self.moduli.push(m);
                }
                "theta" => {
                    let t = theta_from(&b)?;
                    self.thetas.retain(|x| x.name() != t.name());
                    self.thetas.push(t);
                }
                "sequence" => {
                    let s = sequence_from(&b)?;
                    self.sequences.retain(|x| x.name != s.name);
                    self.sequences.push(s);
                }
                o => return Err(Error::Catalog(format!("unknown entry type `{o}`"))),
            }
        }
        Ok(())
    }

    pub fn modulus(&self, name: &str) -> Result<&ModulusSpec> {
        self.moduli
            .iter()
            .find(|m| m.name() == name)
            .ok_or_else(|| Error::Catalog(format!("no modulus named `{name}`")))
    }

    pub fn theta(&self, name: &str) -> Result<&LacunaryTheta> {
        self.thetas
            .iter()
            .find(|t| t.name() == name)
            .ok_or_else(|| Error::Catalog(format!("no theta named `{name}`")))
    }

    pub fn sequence(&self, name: &str) -> Result<&SequenceEntry> {
        self.sequences
            .iter()
            .find(|s| s.name == name)
            .ok_or_else(|| Error::Catalog(format!("no sequence named `{name}`")))
    }

    /// Builds the concrete sequence for an entry given the instance context.
    pub fn resolve(
        &self,
        entry: &SequenceEntry,
        f: Option<&ModulusSpec>,
        theta: Option<&LacunaryTheta>,
    ) -> Result<ResolvedSequence> {
        let need_theta = || {
            theta.ok_or_else(|| {
                Error::InvalidArgument(format!("sequence `{}` needs a theta", entry.name))
            })
        };
        let need_f = || {
            f.ok_or_else(|| {
                Error::InvalidArgument(format!("sequence `{}` needs a modulus", entry.name))
            })
        };
        let mut out = match &entry.family {
            SequenceFamily::Fixed(s) => ResolvedSequence {
                seq: s.clone(),
                witnessed: None,
            },
            SequenceFamily::Spikes => {
                let t = need_theta()?;
                ResolvedSequence {
                    seq: SequenceSpec::new(
                        format!("{}_{}", entry.name, t.name()),
                        SequenceKind::BlockEndSpikes(t.clone()),
                        0.0,
                    ),
                    witnessed: None,
                }
            }
            SequenceFamily::Construction { kind, params } => {
                let w = match kind {
                    CounterexampleKind::Reciproco => build_reciproco_sequence(
                        need_f()?,
                        need_theta()?,
                        &params.eps,
                        params.witnesses,
                    )?,
                    CounterexampleKind::Th3 => {
                        build_th3_sequence(need_f()?, need_theta()?, &params.eps, params.witnesses)?
                    }
                    CounterexampleKind::Gap => {
                        build_gap_sequence(need_theta()?, params.x0, params.witnesses)?
                    }
                    CounterexampleKind::SparseBlocks => {
                        build_sparse_block_sequence(need_theta()?, params.horizon)?
                    }
                };
                ResolvedSequence {
                    seq: w.seq.clone(),
                    witnessed: Some(Arc::new(w)),
                }
            }
        };
        if let Some(l) = entry.limit {
            out.seq = out.seq.with_limit(l);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_contents() {
        let c = builtin_catalog();
        assert_eq!(
            c.modulus("log1p").unwrap().declared(),
            Compatibility::Incompatible
        );
        assert_eq!(
            c.modulus("xratio").unwrap().declared(),
            Compatibility::Compatible
        );
        assert_eq!(c.thetas.len(), 4);
        let p = c.theta("geo2").unwrap().ratio_profile(100).unwrap();
        assert_eq!((p.liminf_est, p.limsup_est), (2.0, 2.0));
    }

    #[test]
    fn parses_and_merges_blocks() {
        let text = "# extra entries\nname=geo3\nkind=geometric\nparams=3\n\nname=w\nkind=lambertw\ndeclared_compatibility=incompatible\n\n\nname=m3\nkind=indicator\nparams=multiples:3\nlimit=0\n";
        let mut c = builtin_catalog();
        c.merge_text(text).unwrap();
        assert_eq!(c.theta("geo3").unwrap().term(2), Some(9));
        assert_eq!(
            c.modulus("w").unwrap().declared(),
            Compatibility::Incompatible
        );
        let e = c.sequence("m3").unwrap();
        let r = c.resolve(e, None, None).unwrap();
        assert_eq!(r.seq.value(6), 1.0);
    }

    #[test]
    fn rejects_malformed_text() {
        let mut c = Catalog::default();
        assert!(c.merge_text("name=a\nkind=nope\n").is_err());
        assert!(c.merge_text("name=a\nname=b\nkind=log1p\n").is_err());
        assert!(c.merge_text("just words\n").is_err());
        assert!(c.merge_text("name=a\nkind=log1p\ncolour=red\n").is_err());
        assert!(c.merge_text("name=a\nkind=powersum\nparams=0.5\n").is_err());
        assert!(c
            .merge_text("name=a\nkind=explicit\nparams=3,4,5\n")
            .is_err());
    }

    #[test]
    fn scientific_notation_accepted() {
        assert_eq!(parse_f64_list("1e3, 2.5E-1").unwrap(), vec![1000.0, 0.25]);
    }
}
