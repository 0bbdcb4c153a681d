use std::fs::{self, File};
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use geodenoise::io::{read_graph, write_bridge_set};
use geodenoise::rules::{detect, NpdrMode};
use geodenoise::swissroll::{run_benchmark, BenchmarkConfig, Estimator};
use geodenoise::tomography::{run_tomography_with, TomoConfig, TomoReport};
use geodenoise::{Epsilon, Error, Rule, RuleConfig};

#[derive(Parser)]
#[command(name = "geodenoise", version, about = "Bridge detection on noisy nearest-neighbor graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Flag bridge edges in a graph file and write the bridge set.
    Denoise(DenoiseArgs),
    /// Mean geodesic error on the noisy Swiss roll.
    Swissroll(SwissrollArgs),
    /// Blind-angle tomography with graph pruning.
    Tomo(TomoArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Auto,
    Dense,
    Lowrank,
}

#[derive(Args)]
struct RuleArgs {
    /// NPDR stop probability.
    #[arg(long, default_value_t = 0.01)]
    p: f64,
    /// Kernel scale: a number, `inf` or `median-half`.
    #[arg(long, default_value = "median-half")]
    epsilon: Epsilon,
    /// ECDR rounds.
    #[arg(long = "K", default_value_t = 15)]
    rounds: usize,
    /// NPDR low-rank terms (default min(n, 50)).
    #[arg(long = "J")]
    rank: Option<usize>,
    /// NPDR evaluation of N.
    #[arg(long, value_enum, default_value = "auto")]
    mode: ModeArg,
}

impl RuleArgs {
    fn config(&self, q: f64) -> RuleConfig {
        RuleConfig {
            q,
            p: self.p,
            epsilon: self.epsilon,
            rounds: self.rounds,
            rank: self.rank,
            mode: match self.mode {
                ModeArg::Auto => NpdrMode::Auto,
                ModeArg::Dense => NpdrMode::Dense,
                ModeArg::Lowrank => NpdrMode::LowRank,
            },
            ..RuleConfig::default()
        }
    }
}

#[derive(Args)]
struct DenoiseArgs {
    /// Graph file: header `n m`, then `i j d_e` per edge.
    graph: PathBuf,
    #[arg(long)]
    rule: Rule,
    /// Good-edge fraction in (0, 1).
    #[arg(long, default_value_t = 0.99)]
    q: f64,
    #[command(flatten)]
    rule_args: RuleArgs,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct SwissrollArgs {
    #[arg(long, default_value_t = 500)]
    n: usize,
    /// Ball radius of the neighbor graph.
    #[arg(long, default_value_t = 4.0)]
    delta: f64,
    /// Noise levels (comma separated).
    #[arg(long, value_delimiter = ',', default_values_t = [0.10, 1.44, 1.54, 1.64, 1.74, 1.85])]
    mu: Vec<f64>,
    #[arg(long, default_value_t = 20)]
    trials: usize,
    /// Rules to compare with plain shortest paths; default LDR, ECDR, NPDR.
    #[arg(long, value_delimiter = ',')]
    rule: Vec<Rule>,
    /// Quantile grid; default 0.92, 0.95, 0.99 (LDR at 0.92 only).
    #[arg(long, value_delimiter = ',')]
    q: Vec<f64>,
    #[command(flatten)]
    rule_args: RuleArgs,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Print the mean-error table.
    #[arg(long = "table")]
    mean_error_table: bool,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct TomoArgs {
    /// Phantom side in pixels.
    #[arg(long, default_value_t = 128)]
    side: usize,
    /// Projections.
    #[arg(long, default_value_t = 256)]
    n: usize,
    /// Detector bins.
    #[arg(long, default_value_t = 128)]
    r: usize,
    /// Neighbors per projection.
    #[arg(long, default_value_t = 32)]
    k: usize,
    /// Signal-to-noise ratio in dB; `inf` for none.
    #[arg(long, default_value_t = -2.0, allow_negative_numbers = true)]
    snr_db: f64,
    /// Pruning rules; `none` runs only the unpruned ordering.
    #[arg(long, value_delimiter = ',', default_values = ["jdr", "npdr"])]
    rule: Vec<String>,
    /// JDR quantile grid; the best by rho is reported.
    #[arg(long, value_delimiter = ',', default_values_t = [0.70, 0.74, 0.78, 0.82])]
    jdr_q: Vec<f64>,
    /// Quantile for rules other than JDR.
    #[arg(long, default_value_t = 0.8)]
    q: f64,
    #[arg(long, default_value_t = 0.01)]
    p: f64,
    #[arg(long, default_value = "inf")]
    epsilon: Epsilon,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Debug)]
enum Failure {
    Input(String),
    Numerical(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Parse { .. } | Error::InvalidParameter(_) | Error::InvalidGraph(_) | Error::Io(_) => {
                Failure::Input(e.to_string())
            }
            _ => Failure::Numerical(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Input(e.to_string())
    }
}

type CliResult<T> = Result<T, Failure>;

/// Writes `contents` to `dir/name` through a temporary file and a rename.
fn write_atomic(dir: &Path, name: &str, contents: &[u8]) -> CliResult<PathBuf> {
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents)?;
    let path = dir.join(name);
    tmp.persist(&path).map_err(|e| Failure::Input(e.to_string()))?;
    Ok(path)
}

fn prepare_out(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| Failure::Input(format!("{}: {e}", dir.display())))
}

fn denoise(args: &DenoiseArgs) -> CliResult<()> {
    let file = File::open(&args.graph).map_err(|e| Failure::Input(format!("{}: {e}", args.graph.display())))?;
    let graph = read_graph(BufReader::new(file)).map_err(|e| match e {
        Error::Parse { .. } => Failure::Input(format!("{}: {e}", args.graph.display())),
        other => other.into(),
    })?;
    let cfg = args.rule_args.config(args.q);
    let start = Instant::now();
    let bridges = detect(args.rule, &graph, &cfg)?;
    let elapsed = start.elapsed().as_secs_f64();
    prepare_out(&args.out)?;
    let mut buf = Vec::new();
    let extra = [
        ("n", graph.node_count().to_string()),
        ("edges", graph.edge_count().to_string()),
        ("p", cfg.p.to_string()),
        ("epsilon", cfg.epsilon.to_string()),
        ("K", cfg.rounds.to_string()),
        ("source", args.graph.display().to_string()),
    ];
    write_bridge_set(&mut buf, &bridges, &extra)?;
    let path = write_atomic(&args.out, "bridges.txt", &buf)?;
    println!(
        "edges={} bridges={} rule={} q={} elapsed={elapsed:.3}s out={}",
        graph.edge_count(),
        bridges.len(),
        args.rule,
        args.q,
        path.display()
    );
    Ok(())
}

fn estimators(rules: &[Rule], qs: &[f64]) -> Vec<Estimator> {
    if rules.is_empty() && qs.is_empty() {
        return BenchmarkConfig::default().estimators;
    }
    let rules = if rules.is_empty() {
        vec![Rule::Ldr, Rule::Ecdr, Rule::Npdr]
    } else {
        rules.to_vec()
    };
    let qs = if qs.is_empty() { vec![0.92, 0.95, 0.99] } else { qs.to_vec() };
    let mut out = vec![Estimator::ShortestPath];
    for &rule in &rules {
        for &q in &qs {
            out.push(Estimator::Rule { rule, q });
        }
    }
    out
}

fn swissroll(args: &SwissrollArgs) -> CliResult<()> {
    let cfg = BenchmarkConfig {
        n: args.n,
        delta: args.delta,
        mus: args.mu.clone(),
        estimators: estimators(&args.rule, &args.q),
        trials: args.trials,
        seed: args.seed,
        rule: args.rule_args.config(0.99),
        ..BenchmarkConfig::default()
    };
    let report = run_benchmark(&cfg)?;
    prepare_out(&args.out)?;
    let header = report.header();
    write_atomic(&args.out, "trials.csv", format!("{header}{}", report.trials_csv()).as_bytes())?;
    write_atomic(&args.out, "aggregate.csv", format!("{header}{}", report.aggregate_csv()).as_bytes())?;
    write_atomic(&args.out, "profiles.dat", format!("{header}{}", report.profiles_dat()).as_bytes())?;
    if args.mean_error_table {
        let table = report.mean_error_table();
        write_atomic(&args.out, "table.txt", table.as_bytes())?;
        print!("{table}");
    } else {
        print!("{}", report.aggregate_csv());
    }
    Ok(())
}

fn tomo_rules(names: &[String]) -> CliResult<Vec<Rule>> {
    let mut rules = Vec::new();
    for name in names {
        if name == "none" {
            continue;
        }
        let rule: Rule = name.parse().map_err(|e: Error| Failure::Input(e.to_string()))?;
        if !rules.contains(&rule) {
            rules.push(rule);
        }
    }
    Ok(rules)
}

fn ordering_csv(report: &TomoReport) -> String {
    let mut s = String::from("method,rank,row,theta_hat,theta_true\n");
    for o in &report.outcomes {
        for (rank, (&row, &t)) in o.ordering.order.iter().zip(&o.ordering.theta_hat).enumerate() {
            s += &format!(
                "{},{rank},{row},{t:.6},{:.6}\n",
                o.label(),
                report.sinogram.angles[row]
            );
        }
    }
    s
}

fn tomo(args: &TomoArgs) -> CliResult<()> {
    let rules = tomo_rules(&args.rule)?;
    let cfg = TomoConfig {
        side: args.side,
        n: args.n,
        r: args.r,
        k: args.k,
        snr_db: args.snr_db,
        seed: args.seed,
        jdr_grid: args.jdr_q.clone(),
        npdr: RuleConfig {
            q: args.q,
            p: args.p,
            epsilon: args.epsilon,
            ..RuleConfig::default()
        },
    };
    let report = run_tomography_with(&cfg, &rules)?;
    prepare_out(&args.out)?;
    let header = report.header();
    write_atomic(&args.out, "metrics.csv", format!("{header}{}", report.csv()).as_bytes())?;
    write_atomic(&args.out, "ordering.csv", format!("{header}{}", ordering_csv(&report)).as_bytes())?;
    let mut buf = Vec::new();
    report.sinogram.write_to(&mut buf)?;
    write_atomic(&args.out, "sinogram.bin", &buf)?;
    buf.clear();
    report.phantom.write_pgm(&mut buf)?;
    write_atomic(&args.out, "phantom.pgm", &buf)?;
    for o in &report.outcomes {
        buf.clear();
        o.image.write_pgm(&mut buf)?;
        write_atomic(&args.out, &format!("recon_{}.pgm", o.label()), &buf)?;
    }
    for o in &report.outcomes {
        let q = o.q.map(|q| format!(" q={q}")).unwrap_or_default();
        println!(
            "{}{q}: rho={:.4} kendall={:.4} disconnected={} flagged={}",
            o.label(),
            o.rho,
            o.kendall,
            o.disconnected,
            o.flagged
        );
    }
    println!("true-angles: rho={:.4}", report.true_angles_rho);
    Ok(())
}

fn configure_threads() -> CliResult<()> {
    let Ok(value) = std::env::var("GD_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| Failure::Input(format!("GD_THREADS must be a positive integer (got '{value}')")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Failure::Input(e.to_string()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads().and_then(|()| match &cli.command {
        Command::Denoise(a) => denoise(a),
        Command::Swissroll(a) => swissroll(a),
        Command::Tomo(a) => tomo(a),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
