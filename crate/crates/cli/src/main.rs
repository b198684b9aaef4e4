//! `balancer`: run online balancing experiments from the command line.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use balancer_core::harness::baselines::{linf, offline_oracle, ORACLE_MAX_LEN};
use balancer_core::harness::config::{ConfigMap, RunConfig};
use balancer_core::harness::inputs::{InputSampler, InputSpec};
use balancer_core::harness::metrics::slope_fit;
use balancer_core::harness::runs::{default_run_dir, run, run_batch, RunOutput, VectorRunner, VectorSetup};
use balancer_core::harness::trace::read_metrics_csv;
use balancer_core::Error;
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "balancer", version, about = "Online stochastic vector balancing experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Signs with an l-infinity target.
    Komlos(RunArgs),
    /// Signs against random test directions.
    Testset(RunArgs),
    /// Signs against a convex-body norm.
    Banaszczyk(RunArgs),
    /// Colors points in the unit cube against boxes.
    Tusnady(RunArgs),
    /// Weighted multi-color assignment.
    Multicolor(RunArgs),
    /// Exhaustive offline optimum of a small instance.
    Oracle(OracleArgs),
    /// Slope table for metric CSVs.
    Report(ReportArgs),
}

#[derive(Args, Default)]
struct RunArgs {
    /// Config file (JSON or key = value lines); flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long = "T")]
    horizon: Option<usize>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    dist: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated seeds run in parallel (overrides --seed).
    #[arg(long, value_delimiter = ',')]
    seeds: Vec<u64>,
    #[arg(long)]
    algorithm: Option<String>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    kappa: Option<usize>,
    /// Comma-separated color weights.
    #[arg(long)]
    weights: Option<String>,
    #[arg(long)]
    body: Option<String>,
    /// Output directory of the run (default `runs/<setting>-<algorithm>-seed<seed>`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Extra `key=value` settings.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Args)]
struct OracleArgs {
    /// File with one vector per line; otherwise a random instance.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long, default_value_t = 4)]
    n: usize,
    #[arg(long = "T", default_value_t = 12)]
    horizon: usize,
    #[arg(long, default_value = "sparse:2")]
    dist: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct ReportArgs {
    /// Metric CSVs to compare.
    #[arg(long, num_args = 1.., required = true)]
    compare: Vec<PathBuf>,
    /// Column to fit; every column when omitted.
    #[arg(long)]
    column: Option<String>,
}

impl RunArgs {
    fn config_map(&self, setting: &str) -> Result<ConfigMap, Error> {
        let mut map = match &self.config {
            Some(p) => ConfigMap::load(p)?,
            None => ConfigMap::new(),
        };
        let mut flags = ConfigMap::new();
        if !map.contains("setting") || self.config.is_none() {
            flags.set("setting", setting);
        }
        let pairs: [(&str, Option<String>); 10] = [
            ("n", self.n.map(|v| v.to_string())),
            ("T", self.horizon.map(|v| v.to_string())),
            ("d", self.d.map(|v| v.to_string())),
            ("dist", self.dist.clone()),
            ("seed", self.seed.map(|v| v.to_string())),
            ("algorithm", self.algorithm.clone()),
            ("lambda", self.lambda.map(|v| v.to_string())),
            ("kappa", self.kappa.map(|v| v.to_string())),
            ("weights", self.weights.clone()),
            ("body", self.body.clone()),
        ];
        for (k, v) in pairs {
            if let Some(v) = v {
                flags.set(k, &v);
            }
        }
        for kv in &self.set {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("`--set {kv}` is not KEY=VALUE")))?;
            flags.set(k.trim(), v.trim());
        }
        map.merge(&flags);
        Ok(map)
    }
}

fn run_command(setting: &str, args: &RunArgs) -> Result<(), Error> {
    let map = args.config_map(setting)?;
    let base = map.to_config()?;
    if base.setting.name() != setting {
        return Err(Error::Config(format!(
            "config file is for `{}`, not `{setting}`",
            base.setting.name()
        )));
    }
    let configs: Vec<RunConfig> = if args.seeds.is_empty() {
        vec![base]
    } else {
        args.seeds
            .iter()
            .map(|&s| {
                let mut m = map.clone();
                m.set("seed", &s.to_string());
                m.to_config()
            })
            .collect::<Result<_, _>>()?
    };
    let outputs = if configs.len() == 1 { vec![run(&configs[0])] } else { run_batch(&configs) };
    let single = configs.len() == 1;
    for (cfg, out) in configs.iter().zip(outputs) {
        let out = out?;
        let dir = match (&args.out, single) {
            (Some(d), true) => d.clone(),
            (Some(d), false) => default_run_dir(d, cfg),
            (None, _) => match &cfg.out {
                Some(d) if single => d.clone(),
                Some(d) => default_run_dir(d, cfg),
                None => default_run_dir(Path::new("runs"), cfg),
            },
        };
        out.write(&dir)?;
        print_summary(&out, &dir)?;
    }
    Ok(())
}

fn print_summary(out: &RunOutput, dir: &Path) -> Result<(), Error> {
    let mut value = serde_json::to_value(&out.summary)?;
    if let Some(obj) = value.as_object_mut() {
        // Keep stdout deterministic.
        obj.remove("wall_seconds");
        obj.insert("dir".into(), serde_json::Value::from(dir.display().to_string()));
    }
    println!("{}", serde_json::to_string(&value)?);
    Ok(())
}

fn read_vectors(path: &Path) -> anyhow::Result<Vec<Vec<f64>>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    text.lines()
        .filter(|l| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
        .map(|l| {
            l.split(|c: char| c == ',' || c.is_whitespace())
                .filter(|c| !c.is_empty())
                .map(|c| c.parse::<f64>().with_context(|| format!("bad number `{c}`")))
                .collect()
        })
        .collect()
}

fn oracle_command(args: &OracleArgs) -> anyhow::Result<()> {
    let vectors = match &args.input {
        Some(p) => read_vectors(p)?,
        None => {
            let spec = InputSpec::parse(&args.dist, args.n)?;
            InputSampler::new(spec, args.n, args.seed).take(args.horizon).collect()
        }
    };
    anyhow::ensure!(!vectors.is_empty(), "no vectors");
    anyhow::ensure!(vectors.len() <= ORACLE_MAX_LEN, "at most {ORACLE_MAX_LEN} vectors");
    let n = vectors[0].len();
    let (opt, signs) = offline_oracle(&vectors, linf)?;
    // The online run knows the instance as its input distribution.
    let online = online_value(&vectors, args.seed)?;
    let out = serde_json::json!({
        "n": n,
        "T": vectors.len(),
        "optimum": opt,
        "signs": signs.iter().map(|s| s.as_i8()).collect::<Vec<_>>(),
        "online": online,
        "dominates": opt <= online + 1e-12,
    });
    println!("{out}");
    Ok(())
}

fn online_value(vectors: &[Vec<f64>], seed: u64) -> anyhow::Result<f64> {
    let n = vectors[0].len();
    let mut map = ConfigMap::new();
    map.set("setting", "komlos");
    map.set("n", &n.to_string());
    map.set("T", &vectors.len().to_string());
    map.set("dist", "e1");
    map.set("seed", &seed.to_string());
    let cfg = map.to_config()?;
    let setup = VectorSetup::with_spec(&cfg, InputSpec::finite(vectors.to_vec(), n)?)?;
    let setup = std::sync::Arc::new(setup);
    let mut runner = VectorRunner::new(setup, &cfg)?;
    let mut best: f64 = 0.0;
    for v in vectors {
        runner.step_with(v)?;
        best = best.max(linf(runner.d()));
    }
    Ok(best)
}

fn report_command(args: &ReportArgs) -> anyhow::Result<()> {
    println!("{:<40} {:<12} {:>10} {:>10} {:>6}", "file", "column", "slope", "stderr", "pts");
    for path in &args.compare {
        let (columns, rows) = read_metrics_csv(path).with_context(|| format!("reading {}", path.display()))?;
        let horizon = rows.last().map(|r| r.0).unwrap_or(0) as f64;
        for (i, col) in columns.iter().enumerate() {
            if args.column.as_deref().is_some_and(|c| c != col) || col == "phi" || col == "psi" {
                continue;
            }
            let series: Vec<(f64, f64)> = rows.iter().map(|(t, r)| (*t as f64, r[i])).collect();
            match slope_fit(&series, horizon / 100.0, horizon) {
                Some(fit) => println!(
                    "{:<40} {:<12} {:>10.4} {:>10.4} {:>6}",
                    path.display(),
                    col,
                    fit.slope,
                    fit.stderr,
                    fit.points
                ),
                None => println!("{:<40} {:<12} {:>10} {:>10} {:>6}", path.display(), col, "-", "-", 0),
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result: anyhow::Result<()> = match &cli.command {
        Command::Komlos(a) => run_command("komlos", a).map_err(Into::into),
        Command::Testset(a) => run_command("testset", a).map_err(Into::into),
        Command::Banaszczyk(a) => run_command("banaszczyk", a).map_err(Into::into),
        Command::Tusnady(a) => run_command("tusnady", a).map_err(Into::into),
        Command::Multicolor(a) => run_command("multicolor", a).map_err(Into::into),
        Command::Oracle(a) => oracle_command(a),
        Command::Report(a) => report_command(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let code = e.downcast_ref::<Error>().map_or(1, Error::exit_code);
            ExitCode::from(code as u8)
        }
    }
}
