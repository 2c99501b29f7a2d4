use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use summa_core::catalog::{builtin_catalog, index_set, Catalog};
use summa_core::convergence::{
    f_density_with, test_statistical_with, test_strong_cesaro_with,
    test_uniform_integrability_with, Normalization,
};
use summa_core::counterexamples::{
    build_gap_sequence, build_reciproco_sequence, build_sparse_block_sequence, build_th3_sequence,
    EpsSchedule, WitnessedSequence,
};
use summa_core::estimate::{Status, Thresholds};
use summa_core::format::{fmt_num, to_json};
use summa_core::harness::{run_suite, SuiteConfig};
use summa_core::modulus::{
    check_modulus_axioms, classify_compatibility, default_eps_grid, phi_estimate,
};
use summa_core::Error;

#[derive(Parser)]
#[command(
    name = "summa",
    version,
    about = "Modulated statistical and strong Cesaro convergence laboratory"
)]
struct Cli {
    /// Extra catalog file(s) of key=value blocks; entries replace built-ins by name.
    #[arg(long, global = true)]
    catalog: Vec<PathBuf>,
    /// Worker thread cap.
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(1..))]
    threads: Option<u64>,
    /// Holds threshold override.
    #[arg(long, global = true, value_parser = parse_real)]
    holds: Option<f64>,
    /// Fails threshold override.
    #[arg(long, global = true, value_parser = parse_real)]
    fails: Option<f64>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Modulus axioms, phi estimates and compatibility classification.
    #[command(subcommand)]
    Modulus(ModulusCmd),
    /// Lacunary sequence information.
    #[command(subcommand)]
    Lacunary(LacunaryCmd),
    /// f-density of an index set, plain or lacunary.
    Density(DensityArgs),
    /// Statistical or strong Cesaro verdict for a sequence.
    Converge(ConvergeArgs),
    /// Lacunary uniform integrability.
    Integrable(IntegrableArgs),
    /// Build a separating sequence and write it as CSV.
    Counterexample(CounterexampleArgs),
    /// Law suite.
    #[command(subcommand)]
    Harness(HarnessCmd),
}

#[derive(Subcommand)]
enum ModulusCmd {
    /// Check the modulus axioms on a log grid
    Check {
        #[arg(long, alias = "modulus")]
        name: String,
        #[arg(long, default_value = "1e6", value_parser = parse_real)]
        grid_max: f64,
        #[arg(long, default_value_t = 200)]
        grid_points: usize,
    },
    /// Estimate phi(eps) = limsup f(n eps)/f(n)
    Phi {
        #[arg(long, alias = "modulus")]
        name: String,
        #[arg(long, value_parser = parse_real)]
        eps: f64,
        #[arg(long)]
        theta: Option<String>,
        #[arg(long, default_value = "1e6", value_parser = parse_count)]
        horizon: u64,
    },
    /// Compatible, Incompatible or Unknown from phi over an epsilon grid
    Classify {
        #[arg(long, alias = "modulus")]
        name: String,
        #[arg(long)]
        theta: Option<String>,
        #[arg(long, default_value = "1e6", value_parser = parse_count)]
        horizon: u64,
        /// Decreasing epsilon grid, at least four points.
        #[arg(long, value_delimiter = ',', value_parser = parse_real)]
        eps_grid: Option<Vec<f64>>,
    },
}

#[derive(Subcommand)]
enum LacunaryCmd {
    /// Terms, block lengths and ratio bounds
    Info {
        #[arg(long)]
        theta: String,
        #[arg(long, default_value_t = 100)]
        blocks: usize,
    },
}

#[derive(Args)]
struct DensityArgs {
    /// evens, odds, squares, pow2 or multiples:k
    #[arg(long)]
    set: String,
    #[arg(long, default_value = "identity")]
    modulus: String,
    #[arg(long)]
    theta: Option<String>,
    #[arg(long, value_parser = parse_count)]
    horizon: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Stat,
    Cesaro,
}

#[derive(Args)]
struct ConvergeArgs {
    #[arg(long)]
    seq: String,
    #[arg(long, value_enum)]
    method: MethodArg,
    #[arg(long, default_value = "identity")]
    modulus: String,
    #[arg(long)]
    theta: Option<String>,
    #[arg(long, value_parser = parse_count)]
    horizon: u64,
    #[arg(long, value_parser = parse_real)]
    limit: Option<f64>,
}

#[derive(Args)]
struct IntegrableArgs {
    #[arg(long)]
    seq: String,
    #[arg(long)]
    theta: String,
    #[arg(long, value_delimiter = ',', value_parser = parse_real)]
    mgrid: Vec<f64>,
    #[arg(long)]
    blocks: usize,
    /// Modulus used to resolve constructions that need one.
    #[arg(long, default_value = "identity")]
    modulus: String,
    #[arg(long)]
    unnormalized: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Reciproco,
    Th3,
    #[value(name = "sember", alias = "gap")]
    Gap,
    Sparse,
}

#[derive(Args)]
struct CounterexampleArgs {
    #[arg(long, value_enum)]
    kind: KindArg,
    #[arg(long, default_value = "identity")]
    modulus: String,
    #[arg(long)]
    theta: String,
    /// inv_k, inv_k2 or an explicit decreasing list.
    #[arg(long, default_value = "inv_k")]
    epsk: String,
    /// Witness count K (J for the gap construction).
    #[arg(long, default_value_t = 5)]
    k: usize,
    #[arg(long, default_value = "1", value_parser = parse_real)]
    x0: f64,
    /// Horizon for the sparse-block construction.
    #[arg(long, default_value = "1e7", value_parser = parse_count)]
    horizon: u64,
    /// Leading prefix length included in the CSV.
    #[arg(long, default_value_t = 1000)]
    prefix: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum HarnessCmd {
    /// Run a law suite and write report.json, report.csv and trajectories/
    Run {
        /// Suite config; the default suite when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn parse_real(s: &str) -> Result<f64, String> {
    let x: f64 = s
        .trim()
        .parse()
        .map_err(|_| format!("`{s}` is not a number"))?;
    if x.is_finite() {
        Ok(x)
    } else {
        Err(format!("`{s}` is not finite"))
    }
}

fn parse_count(s: &str) -> Result<u64, String> {
    let x = parse_real(s)?;
    if x >= 1.0 && x.fract() == 0.0 && x <= 9.0e15 {
        Ok(x as u64)
    } else {
        Err(format!("`{s}` is not a positive integer"))
    }
}

enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::CompatibleModulus(_)
            | Error::InequalityViolated { .. }
            | Error::BoundedRatios(_)
            | Error::RatiosAwayFromOne(_) => Failure::Runtime(e.to_string()),
            _ => Failure::Usage(e.to_string()),
        }
    }
}

type Outcome = Result<u8, Failure>;

fn io_err(path: &Path, e: std::io::Error) -> Failure {
    Failure::Runtime(format!("{}: {e}", path.display()))
}

fn emit(v: &serde_json::Value) {
    use std::io::Write as _;
    let _ = writeln!(std::io::stdout().lock(), "{}", to_json(v));
}

fn exit_for(status: Status) -> u8 {
    if status == Status::Fails {
        1
    } else {
        0
    }
}

fn load_catalog(paths: &[PathBuf]) -> Result<Catalog, Failure> {
    let mut c = builtin_catalog();
    for p in paths {
        let text =
            fs::read_to_string(p).map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))?;
        c.merge_text(&text)?;
    }
    Ok(c)
}

fn thresholds(cli: &Cli) -> Result<Thresholds, Failure> {
    let mut th = Thresholds::default();
    if let Some(h) = cli.holds {
        th.holds = h;
    }
    if let Some(f) = cli.fails {
        th.fails = f;
    }
    th.validate()?;
    Ok(th)
}

fn run(cli: &Cli) -> Outcome {
    let th = thresholds(cli)?;
    let cat = load_catalog(&cli.catalog)?;
    match &cli.cmd {
        Cmd::Modulus(ModulusCmd::Check {
            name,
            grid_max,
            grid_points,
        }) => {
            let r = check_modulus_axioms(cat.modulus(name)?, *grid_max, *grid_points)?;
            emit(&json!({ "name": r.name, "all_passed": r.all_passed(), "checks": r.checks }));
            Ok(if r.all_passed() { 0 } else { 1 })
        }
        Cmd::Modulus(ModulusCmd::Phi {
            name,
            eps,
            theta,
            horizon,
        }) => {
            let t = theta.as_deref().map(|t| cat.theta(t)).transpose()?;
            let e = phi_estimate(cat.modulus(name)?, *eps, *horizon, t)?;
            emit(&json!({
                "name": name,
                "epsilon": e.epsilon,
                "value": e.value,
                "plateau": e.plateau,
                "tail_max": e.tail_max,
                "extrapolated": e.extrapolated,
                "prior_value": e.prior_value,
                "horizon": e.horizon,
                "mode": e.mode,
                "trajectory": e.trajectory,
            }));
            Ok(0)
        }
        Cmd::Modulus(ModulusCmd::Classify {
            name,
            theta,
            horizon,
            eps_grid,
        }) => {
            let t = theta.as_deref().map(|t| cat.theta(t)).transpose()?;
            let grid = eps_grid.clone().unwrap_or_else(default_eps_grid);
            let c = classify_compatibility(cat.modulus(name)?, &grid, *horizon, t)?;
            emit(&json!({
                "name": c.name,
                "verdict": c.verdict,
                "declared": c.declared,
                "conflict": c.conflict,
                "estimates": c.estimates.iter().map(|e| json!({
                    "epsilon": e.epsilon,
                    "value": e.value,
                    "prior_value": e.prior_value,
                    "plateau": e.plateau,
                })).collect::<Vec<_>>(),
            }));
            Ok(0)
        }
        Cmd::Lacunary(LacunaryCmd::Info { theta, blocks }) => {
            let t = cat.theta(theta)?;
            let p = t.ratio_profile(*blocks)?;
            let first: Vec<_> = t.blocks().take((*blocks).min(10)).collect();
            emit(&json!({
                "theta": t.name(),
                "blocks": p.blocks,
                "h_tail": p.h_tail,
                "liminf_est": p.liminf_est,
                "limsup_est": p.limsup_est,
                "unbounded_flag": p.unbounded_flag,
                "first_blocks": first,
            }));
            Ok(0)
        }
        Cmd::Density(a) => {
            let set = index_set(&a.set)?;
            let t = a.theta.as_deref().map(|t| cat.theta(t)).transpose()?;
            let f = cat.modulus(&a.modulus)?;
            let e = f_density_with(f, &set, a.horizon, t, &th);
            let certified = a.horizon >= th.min_horizon
                && t.is_none_or(|t| t.complete_blocks(a.horizon) >= th.min_blocks);
            emit(&json!({
                "set": a.set,
                "modulus": f.name(),
                "theta": a.theta,
                "horizon": a.horizon,
                "value": e.value,
                "plateau": e.plateau,
                "zero_density": e.status(&th, certified),
                "estimate": e,
            }));
            Ok(0)
        }
        Cmd::Converge(a) => {
            let t = a.theta.as_deref().map(|t| cat.theta(t)).transpose()?;
            let f = cat.modulus(&a.modulus)?;
            let entry = cat.sequence(&a.seq)?;
            let mut s = cat.resolve(entry, Some(f), t)?.seq;
            if let Some(l) = a.limit {
                s = s.with_limit(l);
            }
            let v = match a.method {
                MethodArg::Stat => test_statistical_with(&s, f, t, a.horizon, &th),
                MethodArg::Cesaro => test_strong_cesaro_with(&s, f, t, a.horizon, &th),
            };
            emit(&json!({
                "sequence": s.name(),
                "limit": s.limit(),
                "modulus": f.name(),
                "theta": a.theta,
                "horizon": a.horizon,
                "verdict": v,
            }));
            Ok(exit_for(v.status))
        }
        Cmd::Integrable(a) => {
            let t = cat.theta(&a.theta)?;
            let f = cat.modulus(&a.modulus)?;
            let s = cat.resolve(cat.sequence(&a.seq)?, Some(f), Some(t))?.seq;
            let norm = if a.unnormalized {
                Normalization::Unnormalized
            } else {
                Normalization::PerBlockLength
            };
            let r = test_uniform_integrability_with(&s, t, &a.mgrid, a.blocks, norm, &th)?;
            emit(&json!({ "sequence": s.name(), "theta": t.name(), "report": r }));
            Ok(exit_for(r.status))
        }
        Cmd::Counterexample(a) => {
            let t = cat.theta(&a.theta)?;
            let w = match a.kind {
                KindArg::Reciproco => build_reciproco_sequence(
                    cat.modulus(&a.modulus)?,
                    t,
                    &EpsSchedule::parse(&a.epsk)?,
                    a.k,
                )?,
                KindArg::Th3 => build_th3_sequence(
                    cat.modulus(&a.modulus)?,
                    t,
                    &EpsSchedule::parse(&a.epsk)?,
                    a.k,
                )?,
                KindArg::Gap => build_gap_sequence(t, a.x0, a.k)?,
                KindArg::Sparse => build_sparse_block_sequence(t, a.horizon)?,
            };
            fs::write(&a.out, counterexample_csv(&w, a.prefix)).map_err(|e| io_err(&a.out, e))?;
            emit(&json!({
                "kind": w.kind.as_str(),
                "sequence": w.sequence,
                "modulus": w.modulus,
                "theta": w.theta,
                "witness_blocks": w.witness_blocks,
                "witness_sizes": w.witness_sizes,
                "separation_c": w.separation_c,
                "eps_seq": w.eps_seq,
                "desk_horizon": w.desk_horizon,
                "sup_abs": w.sup_abs(),
                "witnesses": w.witnesses,
                "out": a.out.display().to_string(),
            }));
            Ok(0)
        }
        Cmd::Harness(HarnessCmd::Run { config, out }) => {
            let cfg = match config {
                Some(p) => {
                    let text = fs::read_to_string(p)
                        .map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))?;
                    SuiteConfig::parse(&text)?
                }
                None => SuiteConfig::default_suite(),
            };
            let threads = cli
                .threads
                .map(|t| t as usize)
                .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
                .max(1);
            let report = run_suite(&cfg, &cat, &th, threads)?;
            fs::create_dir_all(out).map_err(|e| io_err(out, e))?;
            let p = out.join("report.json");
            fs::write(&p, to_json(&report) + "\n").map_err(|e| io_err(&p, e))?;
            let p = out.join("report.csv");
            fs::write(&p, report.to_csv()).map_err(|e| io_err(&p, e))?;
            let traj = out.join("trajectories");
            fs::create_dir_all(&traj).map_err(|e| io_err(&traj, e))?;
            for (name, csv) in report.trajectories() {
                let p = traj.join(name);
                fs::write(&p, csv).map_err(|e| io_err(&p, e))?;
            }
            emit(
                &json!({ "header": report.header, "counts": report.counts, "out": out.display().to_string() }),
            );
            Ok(if report.any_violated() { 1 } else { 0 })
        }
    }
}

/// Witness rows as `#` comments, then (n, x_n) over the leading prefix and
/// around every support range.
fn counterexample_csv(w: &WitnessedSequence, prefix: u64) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# kind={}", w.kind.as_str());
    let _ = writeln!(s, "# sequence={}", w.sequence);
    let _ = writeln!(s, "# desk_horizon={}", w.desk_horizon);
    let _ = writeln!(s, "# separation_c={}", fmt_num(w.separation_c));
    let _ = writeln!(
        s,
        "# witness,k,block,h,block_start,block_end,epsilon,size,plain_ratio,modulated_ratio"
    );
    for x in &w.witnesses {
        let _ = writeln!(
            s,
            "# witness,{},{},{},{},{},{},{},{},{}",
            x.k,
            x.block,
            x.h,
            x.block_start,
            x.block_end,
            x.epsilon.map_or(String::new(), fmt_num),
            x.size,
            fmt_num(x.plain_ratio),
            fmt_num(x.modulated_ratio),
        );
    }
    let mut ns: Vec<u64> = (1..=prefix).collect();
    for &(lo, hi, _) in &w.support {
        ns.extend([lo.saturating_sub(1).max(1), lo, hi, hi + 1]);
    }
    ns.sort_unstable();
    ns.dedup();
    s.push_str("n,x_n\n");
    for n in ns {
        let _ = writeln!(s, "{n},{}", fmt_num(w.seq.value(n)));
    }
    s
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}
