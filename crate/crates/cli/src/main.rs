use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use majorant::dyadic::{parse_rational, DyadicSquare, Square};
use majorant::function::{Recipe, Status};
use majorant::report::VerificationReport;
use majorant::scenario::{run, Command, Output, Scenario};

/// Environment variable holding the worker thread count.
const THREADS_VAR: &str = "MAJORANT_THREADS";

#[derive(Parser)]
#[command(name = "majorant", version, about = "Build and verify dyadic majorants")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Build a truncated tail and check its tiling.
    Tails(RunArgs),
    /// Build a local majorant on a square and certify it.
    Local(RunArgs),
    /// Build the global majorant of a plane function and verify it.
    Global(RunArgs),
    /// Draw a tail or a regularized family as SVG.
    Render(RunArgs),
    /// Rebuild a stored report and compare.
    Verify {
        /// Report produced by `local`, `global`, `tails` or `render`.
        report: PathBuf,
        #[command(flatten)]
        flags: Flags,
    },
    /// Summarize a stored report.
    Report { report: PathBuf },
}

#[derive(Args)]
struct RunArgs {
    /// Scenario file (TOML).
    scenario: Option<PathBuf>,
    /// Function recipe: inline JSON, or a path to a JSON or TOML file.
    #[arg(long)]
    function: Option<String>,
    /// Working square as `cx,cy,side` with exact fractions.
    #[arg(long)]
    square: Option<String>,
    /// Tail seed as `depth,col,row`.
    #[arg(long = "seed-square")]
    seed_square: Option<String>,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Args)]
struct Flags {
    #[arg(long)]
    lambda: Option<String>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    kappa: Option<f64>,
    #[arg(long = "depth-max")]
    depth_max: Option<i32>,
    #[arg(long)]
    pmax: Option<u32>,
    #[arg(long)]
    kmax: Option<u32>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    probes: Option<usize>,
    /// Output directory for `report.json` and renders.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Flags {
    fn apply(&self, sc: &mut Scenario) {
        let p = &mut sc.params;
        if let Some(v) = &self.lambda {
            p.lambda = v.clone();
        }
        if let Some(v) = self.epsilon {
            p.epsilon = v;
        }
        if let Some(v) = self.delta {
            p.delta = v;
        }
        if self.kappa.is_some() {
            p.kappa = self.kappa;
        }
        if let Some(v) = self.depth_max {
            p.depth_max = v;
        }
        if self.pmax.is_some() {
            p.p_max = self.pmax;
        }
        if let Some(v) = self.kmax {
            p.k_max = v;
        }
        if self.seed.is_some() {
            p.seed = self.seed;
        }
        if let Some(v) = self.tol {
            p.tol = v;
        }
        if self.probes.is_some() {
            p.probes = self.probes;
        }
        if let Some(dir) = &self.out {
            sc.output = Output::in_dir(dir, sc.command);
        }
    }
}

fn parse_recipe(s: &str) -> Result<Recipe> {
    let t = s.trim_start();
    if t.starts_with('{') {
        return serde_json::from_str(t).context("parsing inline recipe");
    }
    let text = std::fs::read_to_string(s).with_context(|| format!("reading {s}"))?;
    if Path::new(s).extension().is_some_and(|e| e == "json") {
        serde_json::from_str(&text).context("parsing recipe")
    } else {
        toml::from_str(&text).context("parsing recipe")
    }
}

fn parse_triple(s: &str) -> Result<[&str; 3]> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    match parts.as_slice() {
        [a, b, c] => Ok([a, b, c]),
        _ => bail!("expected three comma-separated values, got {s:?}"),
    }
}

fn scenario(command: Command, args: &RunArgs) -> Result<Scenario> {
    let mut sc = match &args.scenario {
        Some(p) => Scenario::load(p).with_context(|| format!("loading {}", p.display()))?,
        None => Scenario::new(command),
    };
    if args.scenario.is_some() && sc.command != command {
        bail!("scenario is for `{}`, not `{}`", sc.command.name(), command.name());
    }
    if let Some(f) = &args.function {
        sc.function = Some(parse_recipe(f)?);
    }
    if let Some(s) = &args.square {
        let [cx, cy, side] = parse_triple(s)?;
        sc.square = Some(Square::new((parse_rational(cx)?, parse_rational(cy)?), parse_rational(side)?)?);
    }
    if let Some(s) = &args.seed_square {
        let [k, m, n] = parse_triple(s)?;
        sc.seed_square = Some(DyadicSquare::new(k.parse()?, m.parse()?, n.parse()?));
    }
    args.flags.apply(&mut sc);
    Ok(sc)
}

fn summarize(r: &VerificationReport) -> String {
    let mut s = String::new();
    for c in &r.checks {
        let status = match c.status {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::NotApplicable => "N/A ",
        };
        let value = c.value.map(|v| format!(" value={v:.6e}")).unwrap_or_default();
        s.push_str(&format!("{status} {:<22} {}{value}\n", c.name, c.anchor));
    }
    s.push_str(if r.passed { "overall PASS\n" } else { "overall FAIL\n" });
    s
}

fn execute(sc: Scenario) -> Result<bool> {
    let out = run(&sc)?;
    out.write(&sc.output)?;
    if sc.output.report.is_none() {
        print!("{}", out.report.to_json());
        eprint!("{}", summarize(&out.report));
    } else {
        print!("{}", summarize(&out.report));
    }
    if let Some(r) = &out.replay {
        if r.identical() {
            eprintln!("replay of {} is identical", r.source.display());
        } else {
            eprintln!("replay of {} differs in {} places:", r.source.display(), r.differences.len());
            for d in r.differences.iter().take(20) {
                eprintln!("  {d}");
            }
        }
    }
    Ok(out.passed())
}

fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var(THREADS_VAR) {
        let n: usize = v.parse().with_context(|| format!("{THREADS_VAR}={v:?}"))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn main_inner() -> Result<bool> {
    let cli = Cli::parse();
    configure_threads()?;
    match cli.command {
        Cmd::Tails(a) => execute(scenario(Command::Tails, &a)?),
        Cmd::Local(a) => execute(scenario(Command::Local, &a)?),
        Cmd::Global(a) => execute(scenario(Command::Global, &a)?),
        Cmd::Render(a) => execute(scenario(Command::Render, &a)?),
        Cmd::Verify { report, flags } => {
            let mut sc = Scenario::new(Command::Verify);
            sc.input = Some(report);
            flags.apply(&mut sc);
            execute(sc)
        }
        Cmd::Report { report } => {
            let text = std::fs::read_to_string(&report).with_context(|| format!("reading {}", report.display()))?;
            let r = VerificationReport::from_json(&text)?;
            print!("{}", summarize(&r));
            Ok(r.passed)
        }
    }
}

fn main() -> ExitCode {
    match main_inner() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
