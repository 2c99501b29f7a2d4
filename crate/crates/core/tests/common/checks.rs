//! One function per acceptance criterion. Each returns a one-line detail on
//! success and a reason on failure.

#![allow(dead_code)]

use std::time::{Duration, Instant};

use summa_core::catalog::{index_set, SequenceFamily};
use summa_core::convergence::{
    f_density, lacunary_block_sums, residual_block_sums, test_statistical, test_strong_cesaro,
    test_uniform_integrability, ResidualSums, EPS_GRID,
};
use summa_core::counterexamples::{
    build_gap_sequence, build_reciproco_sequence, build_th3_sequence, EpsSchedule,
};
use summa_core::estimate::{LimitEstimate, Status, Thresholds, Verdict};
use summa_core::harness::{run_suite, SuiteConfig};
use summa_core::lacunary::LacunaryTheta;
use summa_core::modulus::{phi_estimate, ModulusSpec};
use summa_core::sequence::SequenceSpec;

use super::*;

pub type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn timed<T>(limit: Duration, what: &str, f: impl FnOnce() -> T) -> Result<(T, Duration), String> {
    let t = Instant::now();
    let out = f();
    let el = t.elapsed();
    ensure(el <= limit, || format!("{what} took {el:?} > {limit:?}"))?;
    Ok((out, el))
}

pub fn repo_file(rel: &str) -> String {
    let p = std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../..")
        .join(rel);
    std::fs::read_to_string(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

// ------------------------------------------------------------ criterion 1

pub fn phi_accuracy() -> Check {
    let limit = Duration::from_secs(30);
    let id = ModulusSpec::identity();
    for eps in [0.5, 0.25, 0.1] {
        let (e, _) = timed(limit, "identity phi", || {
            phi_estimate(&id, eps, 1_000_000, None).unwrap()
        })?;
        ensure((e.value - eps).abs() <= 1e-12, || {
            format!("identity phi({eps}) = {}", e.value)
        })?;
    }
    let (l, tl) = timed(limit, "log1p phi", || {
        phi_estimate(&ModulusSpec::log1p(), 0.01, 10_000_000, None).unwrap()
    })?;
    ensure((0.95..=1.0).contains(&l.value), || {
        format!("log1p phi(0.01) = {} outside [0.95, 1]", l.value)
    })?;
    let ps = ModulusSpec::power_sum(0.5, 0.5).unwrap();
    let (p, tp) = timed(limit, "powsum phi", || {
        phi_estimate(&ps, 0.04, 1_000_000, None).unwrap()
    })?;
    // direct ratio f(n eps)/f(n), independent of the estimator
    let oracle = {
        let n = 1.0e7;
        let f = |x: f64| x.sqrt() + x.sqrt();
        f(n * 0.04) / f(n)
    };
    ensure((oracle - 0.2).abs() < 1e-12, || {
        format!("direct ratio oracle {oracle}")
    })?;
    ensure((p.value - oracle).abs() <= 5e-3, || {
        format!("powsum phi(0.04) = {} vs oracle {oracle}", p.value)
    })?;
    Ok(format!(
        "identity exact; log1p(0.01)@1e7 = {:.6} in {:.1?}; powsum(0.04) = {:.6} (oracle {oracle}) in {:.1?}",
        l.value, tl, p.value, tp
    ))
}

// ------------------------------------------------------------ criterion 2

fn compare_estimate(e: &LimitEstimate, n: &Naive, what: &str) -> Result<(), String> {
    ensure(
        e.value == n.value
            && e.prior == n.prior
            && e.limsup == n.limsup
            && e.limsup_prior == n.limsup_prior
            && e.plateau == n.plateau
            && e.trajectory == n.trajectory,
        || {
            format!(
                "{what}: engine (v={}, p={}, ls={}, lsp={}, plateau={}) vs classical (v={}, p={}, ls={}, lsp={}, plateau={})",
                e.value, e.prior, e.limsup, e.limsup_prior, e.plateau, n.value, n.prior, n.limsup, n.limsup_prior, n.plateau
            )
        },
    )
}

fn classical_statistical(per_eps: &[Naive], th: &Thresholds, certified: bool) -> Status {
    let st: Vec<Status> = per_eps.iter().map(|n| status(n, th, certified)).collect();
    if st.iter().all(|s| *s == Status::Holds) {
        Status::Holds
    } else if st
        .iter()
        .zip(EPS_GRID)
        .any(|(s, e)| *s == Status::Fails && e >= th.fail_eps_floor)
    {
        Status::Fails
    } else {
        Status::Inconclusive
    }
}

fn compare_verdict(
    v: &Verdict,
    classical: &[Naive],
    status: Status,
    what: &str,
) -> Result<(), String> {
    ensure(v.status == status, || {
        format!("{what}: engine {:?} vs classical {status:?}", v.status)
    })?;
    ensure(v.evidence.len() == classical.len(), || {
        format!("{what}: evidence count")
    })?;
    for (e, n) in v.evidence.iter().zip(classical) {
        compare_estimate(&e.estimate, n, &format!("{what} [{}]", e.label))?;
    }
    Ok(())
}

/// Classical (unmodulated) S_theta, N_theta, S, N against the engine with f = identity.
pub fn identity_equivalence(lac_h: u64, prefix_h: u64) -> Check {
    let t0 = Instant::now();
    let th = Thresholds::default();
    let cat = catalog();
    let id = ModulusSpec::identity();
    let mut n_checks = 0usize;
    let thetas: Vec<LacunaryTheta> = ["geo2", "geo1.5", "poly2"]
        .iter()
        .map(|t| cat.theta(t).unwrap().clone())
        .collect();
    for theta in &thetas {
        let seqs = fixed_sequences(&cat, theta);
        ensure(seqs.len() == 10, || {
            format!("expected 10 fixed families, got {}", seqs.len())
        })?;
        for seq in &seqs {
            let what = format!("{} on {}", seq.name(), theta.name());
            // lacunary
            let blocks = naive_blocks(seq, theta, lac_h);
            let engine_blocks = lacunary_block_sums(seq, theta, lac_h);
            ensure(engine_blocks.len() == blocks.len(), || {
                format!("{what}: block count")
            })?;
            for (a, b) in engine_blocks.iter().zip(&blocks) {
                ensure(
                    a.sum.to_bits() == b.sum.to_bits() && a.counts == b.counts,
                    || format!("{what}: block {} sum {} vs {}", a.index, a.sum, b.sum),
                )?;
            }
            let certified = lac_h >= th.min_horizon && blocks.len() >= th.min_blocks;
            let per_eps: Vec<Naive> = (0..21)
                .map(|j| {
                    let ev: Vec<(u64, f64)> = blocks
                        .iter()
                        .map(|b| (b.end, b.counts[j] as f64 / b.len as f64))
                        .collect();
                    summarise(&ev, lac_h, th.plateau_tol)
                })
                .collect();
            let st = classical_statistical(&per_eps, &th, certified);
            compare_verdict(
                &test_statistical(seq, &id, Some(theta), lac_h),
                &per_eps,
                st,
                &format!("S_theta {what}"),
            )?;
            let ev: Vec<(u64, f64)> = blocks
                .iter()
                .map(|b| (b.end, b.sum / b.len as f64))
                .collect();
            let n = summarise(&ev, lac_h, th.plateau_tol);
            let st = status(&n, &th, certified);
            compare_verdict(
                &test_strong_cesaro(seq, &id, Some(theta), lac_h),
                std::slice::from_ref(&n),
                st,
                &format!("N_theta {what}"),
            )?;
            // prefix
            let rs = residuals(seq, 1, prefix_h);
            let mut counts = [0u64; 21];
            let mut per_eps_ev: Vec<Vec<(u64, f64)>> =
                (0..21).map(|_| Vec::with_capacity(rs.len())).collect();
            let mut mean_ev = Vec::with_capacity(rs.len());
            let (mut s, mut c) = (0.0f64, 0.0f64);
            for (i, &r) in rs.iter().enumerate() {
                let nn = i as u64 + 1;
                for (j, &e) in EPS_GRID.iter().enumerate() {
                    if r > e {
                        counts[j] += 1;
                    }
                    per_eps_ev[j].push((nn, counts[j] as f64 / nn as f64));
                }
                let t = s + r;
                c += if s.abs() >= r.abs() {
                    (s - t) + r
                } else {
                    (r - t) + s
                };
                s = t;
                mean_ev.push((nn, (s + c) / nn as f64));
            }
            let certified = prefix_h >= th.min_horizon;
            let per_eps: Vec<Naive> = per_eps_ev
                .iter()
                .map(|ev| summarise(ev, prefix_h, th.plateau_tol))
                .collect();
            let st = classical_statistical(&per_eps, &th, certified);
            compare_verdict(
                &test_statistical(seq, &id, None, prefix_h),
                &per_eps,
                st,
                &format!("S {what}"),
            )?;
            let n = summarise(&mean_ev, prefix_h, th.plateau_tol);
            let st = status(&n, &th, certified);
            compare_verdict(
                &test_strong_cesaro(seq, &id, None, prefix_h),
                std::slice::from_ref(&n),
                st,
                &format!("N {what}"),
            )?;
            n_checks += 4;
        }
    }
    let el = t0.elapsed();
    ensure(el <= Duration::from_secs(60), || format!("took {el:?}"))?;
    Ok(format!("{n_checks} identity verdicts equal the classical computation, block sums bit-equal ({el:.1?})"))
}

// ------------------------------------------------------------ criterion 6

/// Every catalog sequence resolvable on `theta`, constructions included.
fn all_sequences(theta: &LacunaryTheta) -> Vec<SequenceSpec> {
    let cat = catalog();
    let log1p = cat.modulus("log1p").unwrap();
    cat.sequences
        .iter()
        .filter_map(|e| match e.family {
            SequenceFamily::Construction { .. } => {
                cat.resolve(e, Some(log1p), Some(theta)).ok().map(|r| r.seq)
            }
            _ => Some(cat.resolve(e, None, Some(theta)).unwrap().seq),
        })
        .collect()
}

pub fn oracle_equivalence(horizons: &[u64]) -> Check {
    let cat = catalog();
    let mut compared = 0usize;
    for &h in horizons {
        ensure(h <= 100_000, || "oracle horizons are capped at 1e5".into())?;
        for theta in &cat.thetas {
            for seq in all_sequences(theta) {
                let what = format!("{} on {} @ {h}", seq.name(), theta.name());
                let naive = naive_blocks(&seq, theta, h);
                let eng = lacunary_block_sums(&seq, theta, h);
                ensure(eng.len() == naive.len(), || {
                    format!("{what}: block count {} vs {}", eng.len(), naive.len())
                })?;
                for (a, b) in eng.iter().zip(&naive) {
                    ensure(
                        (a.start, a.end, a.len) == (b.start, b.end, b.len)
                            && a.sum.to_bits() == b.sum.to_bits()
                            && a.counts == b.counts,
                        || format!("{what}: block {} differs", a.index),
                    )?;
                    compared += 1;
                }
                let ResidualSums::Prefix(cps) = residual_block_sums(&seq, None, h) else {
                    return Err("prefix sums expected".into());
                };
                let rs = residuals(&seq, 1, h);
                for cp in &cps {
                    let upto = &rs[..cp.n as usize];
                    ensure(
                        cp.sum.to_bits() == neumaier(upto.iter().copied()).to_bits()
                            && cp.counts == counts_above(upto),
                        || format!("{what}: prefix checkpoint {}", cp.n),
                    )?;
                    compared += 1;
                }
            }
        }
        for set_name in ["evens", "odds", "squares", "pow2", "multiples:3"] {
            let set = index_set(set_name).unwrap();
            let member: Vec<bool> = (1..=h).map(|n| set.contains(n)).collect();
            for f in &cat.moduli {
                let mut count = 0u64;
                let prefix_ev: Vec<(u64, f64)> = member
                    .iter()
                    .enumerate()
                    .map(|(i, &m)| {
                        count += m as u64;
                        let n = i as u64 + 1;
                        (n, f.value(count as f64) / f.value(n as f64))
                    })
                    .collect();
                let th = Thresholds::default();
                let e = f_density(f, &set, h, None);
                compare_estimate(
                    &e,
                    &summarise(&prefix_ev, h, th.plateau_tol),
                    &format!("d_f {set_name} {} @ {h}", f.name()),
                )?;
                for theta in &cat.thetas {
                    let ev: Vec<(u64, f64)> = theta
                        .blocks_within(h)
                        .map(|b| {
                            let c = member[b.start as usize..b.end as usize]
                                .iter()
                                .filter(|&&m| m)
                                .count();
                            (b.end, f.value(c as f64) / f.value(b.len as f64))
                        })
                        .collect();
                    let e = f_density(f, &set, h, Some(theta));
                    compare_estimate(
                        &e,
                        &summarise(&ev, h, th.plateau_tol),
                        &format!("d_f,theta {set_name} {} {} @ {h}", f.name(), theta.name()),
                    )?;
                    compared += 1;
                }
                compared += 1;
            }
        }
    }
    Ok(format!(
        "{compared} block sums, prefix checkpoints and density trajectories match enumeration"
    ))
}

// ------------------------------------------------------------ criterion 3

pub fn theorem_suite() -> Check {
    let cat = catalog();
    let (r, el) = timed(Duration::from_secs(300), "default suite", || {
        run_suite(
            &SuiteConfig::parse(&repo_file("configs/default.conf")).unwrap(),
            &cat,
            &Thresholds::default(),
            1,
        )
        .unwrap()
    })?;
    ensure(r.counts.instances > 0, || "no instances".into())?;
    ensure(r.counts.violated == 0, || {
        let v: Vec<String> = r
            .verdicts
            .iter()
            .filter(|v| v.status == summa_core::harness::LawStatus::Violated)
            .map(|v| format!("{} {} {} {}", v.law, v.modulus, v.theta, v.sequence))
            .collect();
        format!("{} Violated: {}", r.counts.violated, v.join("; "))
    })?;
    let laws: std::collections::BTreeSet<_> = r.verdicts.iter().map(|v| v.law).collect();
    ensure(laws.len() == 13, || {
        format!("only {} laws exercised", laws.len())
    })?;
    Ok(format!(
        "{} instances: {} Consistent, 0 Violated, {} Inconclusive in {el:.1?} on one thread",
        r.counts.instances, r.counts.consistent, r.counts.inconclusive
    ))
}

// ------------------------------------------------------------ criterion 4

pub struct SeparationOutcome {
    /// Everything except the last-witness plain ratio bound.
    pub core: Check,
    /// max n_k/h at the last witness < 0.05
    pub last_ratio_below: (bool, f64),
}

pub fn counterexample_separations() -> SeparationOutcome {
    let mut last = (false, f64::NAN);
    let core = (|| -> Check {
        let t0 = Instant::now();
        let cat = catalog();
        let f = cat.modulus("log1p").unwrap();
        let theta = cat.theta("geo2").unwrap();
        let id = ModulusSpec::identity();
        let w =
            build_reciproco_sequence(f, theta, &EpsSchedule::InvK, 5).map_err(|e| e.to_string())?;
        ensure(w.witnesses.len() == 5, || "five witnesses".into())?;
        let s_theta = test_statistical(&w.seq, &id, Some(theta), w.desk_horizon);
        ensure(s_theta.status == Status::Holds, || {
            format!("S_theta at desk {}: {:?}", w.desk_horizon, s_theta.status)
        })?;
        for x in &w.witnesses {
            let eps = x.epsilon.unwrap();
            let h = x.h as f64;
            let c = (1.0 + h * eps).ln() / (1.0 + h).ln();
            // enumerate the witness block
            let mass: f64 = (x.block_start + 1..=x.block_end)
                .map(|n| w.seq.value(n))
                .sum();
            let ratio = (1.0 + mass).ln() / (1.0 + h).ln();
            ensure(ratio == x.modulated_ratio, || {
                format!("witness {}: enumerated ratio {ratio}", x.k)
            })?;
            ensure(ratio >= 0.9 * c, || {
                format!("witness {}: f-ratio {ratio} < 0.9 c = {}", x.k, 0.9 * c)
            })?;
        }
        let lw = w.witnesses.last().unwrap();
        last = (lw.plain_ratio < 0.05, lw.plain_ratio);

        let t = build_th3_sequence(f, theta, &EpsSchedule::InvK, 5).map_err(|e| e.to_string())?;
        ensure(t.sup_abs() <= 1.0, || {
            format!("th3 sup |x| = {}", t.sup_abs())
        })?;
        let blocks = theta.complete_blocks(t.desk_horizon);
        let ui = test_uniform_integrability(&t.seq, theta, &[1.0, 2.0, 4.0], blocks)
            .map_err(|e| e.to_string())?;
        ensure(ui.status == Status::Holds, || {
            format!("th3 integrability {:?}", ui.status)
        })?;
        let st = test_statistical(&t.seq, f, Some(theta), t.desk_horizon);
        ensure(st.status == Status::Holds, || {
            format!("th3 S_theta^f at desk: {:?}", st.status)
        })?;
        for x in &t.witnesses {
            let h = x.h as f64;
            let c = (1.0 + h * x.epsilon.unwrap()).ln() / (1.0 + h).ln();
            ensure(x.modulated_ratio >= 0.9 * c, || {
                format!("th3 witness {}: {} < 0.9 c", x.k, x.modulated_ratio)
            })?;
        }
        let el = t0.elapsed();
        ensure(el <= Duration::from_secs(60), || format!("took {el:?}"))?;
        Ok(format!(
            "reciproco S_theta Holds @ {}, f-ratios >= 0.9c; th3 bounded, I_theta Holds, S_theta^f Holds @ {}, f-ratios >= 0.9c ({el:.1?})",
            w.desk_horizon, t.desk_horizon
        ))
    })();
    SeparationOutcome {
        core,
        last_ratio_below: last,
    }
}

// ------------------------------------------------------------ criterion 5

pub fn gap_sequence() -> Check {
    let t0 = Instant::now();
    let cat = catalog();
    let theta = cat.theta("sgeo").unwrap();
    let x0 = 1.0;
    let w = build_gap_sequence(theta, x0, 5).map_err(|e| e.to_string())?;
    let desk = w.desk_horizon;
    for f in [ModulusSpec::identity(), ModulusSpec::x_plus_ratio()] {
        let lac = test_strong_cesaro(&w.seq, &f, Some(theta), desk);
        ensure(lac.status == Status::Holds, || {
            format!("N_theta^{} at {desk}: {:?}", f.name(), lac.status)
        })?;
        for limit in [0.0, x0] {
            let s = w.seq.clone().with_limit(limit);
            let p = test_strong_cesaro(&s, &f, None, desk);
            ensure(p.status == Status::Fails, || {
                format!("N^{} (L={limit}) at {desk}: {:?}", f.name(), p.status)
            })?;
        }
    }
    // prefix means at the witness prefixes; enumerated up to the desk horizon
    let mut checked = 0;
    for (j, x) in w.witnesses.iter().enumerate().map(|(i, x)| (i + 1, x)) {
        let k_prev = x.block_start;
        let n0 = 2 * k_prev;
        let mean0 = (1..=n0).map(|n| w.seq.value(n).abs()).sum::<f64>() / n0 as f64;
        // the first support has k_prev - 1 points and no predecessor
        if j >= 2 {
            ensure(mean0 >= x0.abs() / 2.0, || {
                format!("j={j}: mean |x| over 1..{n0} = {mean0} < |x0|/2")
            })?;
            checked += 1;
        }
        let n1 = x.block_end;
        // x takes only the values x0 and 0, so the mean follows from the support count
        ensure(w.support.iter().all(|r| r.2 == x0), || {
            "support values differ from x0".into()
        })?;
        let on: u64 = w
            .support
            .iter()
            .filter(|r| r.0 <= n1)
            .map(|r| r.1.min(n1) - r.0 + 1)
            .sum();
        let mean1 = (n1 - on) as f64 * x0.abs() / n1 as f64;
        if n1 <= desk {
            let enumerated = (1..=n1).map(|n| (w.seq.value(n) - x0).abs()).sum::<f64>() / n1 as f64;
            ensure(enumerated == mean1, || {
                format!("j={j}: enumerated mean {enumerated} vs count {mean1}")
            })?;
        }
        let bound = (1.0 - 2.0 / j as f64) * x0.abs();
        ensure(mean1 >= bound, || {
            format!("j={j}: mean |x - x0| over 1..{n1} = {mean1} < {bound}")
        })?;
        checked += 1;
    }
    let el = t0.elapsed();
    ensure(el <= Duration::from_secs(60), || format!("took {el:?}"))?;
    Ok(format!("N_theta Holds, N Fails for L in {{0, x0}} at {desk}; {checked} prefix-mean bounds checked ({el:.1?})"))
}

// ------------------------------------------------------------ criterion 7

pub fn harness_self_test() -> Check {
    let cat = catalog();
    let th = Thresholds::default();
    let bad = run_suite(
        &SuiteConfig::parse(&repo_file("configs/corrupted.conf")).unwrap(),
        &cat,
        &th,
        1,
    )
    .unwrap();
    ensure(bad.counts.violated >= 1, || {
        "corrupted law produced no Violated".into()
    })?;
    let short = run_suite(
        &SuiteConfig::parse(&repo_file("configs/short.conf")).unwrap(),
        &cat,
        &th,
        1,
    )
    .unwrap();
    ensure(short.counts.violated == 0, || {
        format!("short horizon: {} Violated", short.counts.violated)
    })?;
    ensure(short.counts.inconclusive == short.counts.instances, || {
        format!(
            "short horizon: {} of {} instances decided",
            short.counts.instances - short.counts.inconclusive,
            short.counts.instances
        )
    })?;
    Ok(format!(
        "corrupted: {} Violated; short horizon: 0 Violated, all {} instances Inconclusive",
        bad.counts.violated, short.counts.instances
    ))
}
