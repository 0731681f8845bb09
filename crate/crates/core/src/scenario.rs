//! Declarative scenarios and the pipeline runner behind the command line.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::dyadic::{parse_rational, DyadicSquare, Square};
use crate::error::{Error, Result};
use crate::function::{FunctionOracle, Recipe, Status};
use crate::global::{build_global, verify_global, GlobalParams, VerifyOptions};
use crate::local::{build_local, LocalParams, RieszCheckOptions};
use crate::regularize::{regularize, RegularizeOptions};
use crate::render::{render_family, render_tail, Style};
use crate::report::{global_checks, local_checks, tail_checks, write_atomic, Check, VerificationReport};
use crate::tail::{tail, TailParameters};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Tails,
    Local,
    Global,
    Verify,
    Render,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Tails => "tails",
            Command::Local => "local",
            Command::Global => "global",
            Command::Verify => "verify",
            Command::Render => "render",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Params {
    /// Tail ratio as an exact fraction.
    pub lambda: String,
    pub epsilon: f64,
    pub delta: f64,
    /// Lipschitz constant; defaults to the one declared by the recipe.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    pub depth_max: i32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_max: Option<u32>,
    pub k_max: u32,
    /// Relative tolerance when replaying a stored report.
    pub tol: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub probes: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Side of the domination grid of local builds.
    pub grid: usize,
    /// Domination samples of global verification.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    pub riesz: bool,
    pub separation: bool,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            lambda: "5/2".into(),
            epsilon: 0.1,
            delta: 1.0,
            kappa: None,
            depth_max: 12,
            p_max: None,
            k_max: 6,
            tol: 0.0,
            probes: None,
            seed: None,
            grid: 512,
            samples: None,
            riesz: true,
            separation: false,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Output {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub svg: Option<PathBuf>,
}

impl Output {
    fn is_empty(&self) -> bool {
        self.report.is_none() && self.svg.is_none()
    }

    /// `report.json` and `<command>.svg` inside `dir`.
    pub fn in_dir(dir: &Path, command: Command) -> Self {
        Self {
            report: Some(dir.join("report.json")),
            svg: match command {
                Command::Tails | Command::Render | Command::Local => Some(dir.join(format!("{}.svg", command.name()))),
                Command::Global | Command::Verify => None,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub command: Command,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub function: Option<Recipe>,
    /// Working square `[center_x, center_y, side]` of a local build.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub square: Option<Square>,
    /// Seed square `[depth, col, row]` of a tail.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed_square: Option<DyadicSquare>,
    /// Seeds of a regularized family to render.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub seeds: Vec<DyadicSquare>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub root: Option<DyadicSquare>,
    /// Stored report replayed by `verify`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
    #[serde(default)]
    pub params: Params,
    #[serde(default, skip_serializing_if = "Output::is_empty")]
    pub output: Output,
}

impl Scenario {
    pub fn new(command: Command) -> Self {
        Self {
            command,
            function: None,
            square: None,
            seed_square: None,
            seeds: Vec::new(),
            root: None,
            input: None,
            params: Params::default(),
            output: Output::default(),
        }
    }

    pub fn from_toml(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Format(e.to_string()))
    }

    /// The scenario as recorded in reports: output locations are not part of it.
    pub fn echo(&self) -> Value {
        let mut s = self.clone();
        s.output = Output::default();
        json!(s)
    }

    fn tail_parameters(&self) -> Result<TailParameters> {
        TailParameters::new(parse_rational(&self.params.lambda)?)
    }

    fn oracle(&self) -> Result<FunctionOracle> {
        let recipe = self
            .function
            .clone()
            .ok_or_else(|| Error::InvalidArgument(format!("`{}` needs a function recipe", self.command.name())))?;
        FunctionOracle::new(recipe)
    }

    fn local_params(&self) -> Result<LocalParams> {
        let p = &self.params;
        let riesz = p.riesz.then(|| {
            let mut o = RieszCheckOptions::default();
            if let Some(n) = p.probes {
                o.samples = n;
            }
            if let Some(s) = p.seed {
                o.seed = s;
            }
            o
        });
        Ok(LocalParams {
            tail: self.tail_parameters()?,
            depth_max: p.depth_max,
            regularize: RegularizeOptions {
                p_max: p.p_max,
                ..RegularizeOptions::default()
            },
            grid: p.grid,
            riesz,
            separation: p.separation,
        })
    }
}

/// Result of replaying a stored report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Replay {
    pub source: PathBuf,
    pub differences: Vec<String>,
}

impl Replay {
    pub fn identical(&self) -> bool {
        self.differences.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub report: VerificationReport,
    pub svg: Option<String>,
    pub replay: Option<Replay>,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.report.passed && self.replay.as_ref().map_or(true, Replay::identical)
    }

    pub fn write(&self, out: &Output) -> Result<()> {
        if let Some(p) = &out.report {
            write_atomic(p, &self.report.to_json())?;
        }
        if let (Some(p), Some(svg)) = (&out.svg, &self.svg) {
            write_atomic(p, svg)?;
        }
        Ok(())
    }
}

fn check_params(p: &Params) -> Result<()> {
    let positive = |name: &str, v: f64| {
        if v.is_finite() && v > 0.0 {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")))
        }
    };
    positive("epsilon", p.epsilon)?;
    positive("delta", p.delta)?;
    if let Some(k) = p.kappa {
        positive("kappa", k)?;
    }
    if !(p.tol.is_finite() && p.tol >= 0.0) {
        return Err(Error::InvalidArgument(format!("tol must be nonnegative, got {}", p.tol)));
    }
    Ok(())
}

/// Runs the pipeline named by the scenario.
pub fn run(sc: &Scenario) -> Result<Outcome> {
    check_params(&sc.params)?;
    let mut report = VerificationReport::new(sc.command.name(), sc.echo());
    let mut svg = None;
    let mut replay = None;
    let style = Style::default();
    match sc.command {
        Command::Tails => {
            let t = tail(
                &sc.seed_square.unwrap_or(DyadicSquare::new(0, 0, 0)),
                sc.params.p_max.unwrap_or(2),
                &sc.tail_parameters()?,
            );
            report.extend(tail_checks(&t));
            report.artifacts.insert("tail".into(), json!(t));
            svg = Some(render_tail(&t, &style));
        }
        Command::Render => {
            if sc.seeds.is_empty() {
                let t = tail(
                    &sc.seed_square.unwrap_or(DyadicSquare::new(0, 0, 0)),
                    sc.params.p_max.unwrap_or(1),
                    &sc.tail_parameters()?,
                );
                report.extend(tail_checks(&t));
                svg = Some(render_tail(&t, &style));
            } else {
                let root = sc.root.unwrap_or(DyadicSquare::new(0, 0, 0));
                let opts = RegularizeOptions {
                    p_max: sc.params.p_max,
                    ..RegularizeOptions::default()
                };
                let f = regularize(&sc.seeds, &root, &sc.tail_parameters()?, opts)?;
                report.extend([Check::new("family", "tau is built from the seeds and their tails", Status::Pass)
                    .value(f.tau.len() as f64)
                    .details(json!({ "seeds": f.seeds.len(), "p_max": f.p_max }))]);
                report.artifacts.insert("family".into(), json!(f));
                svg = Some(render_family(&f, &style));
            }
        }
        Command::Local => {
            let f = sc.oracle()?;
            let q = sc.square.clone().unwrap_or_else(|| DyadicSquare::new(0, 0, 0).to_square());
            let kappa = sc.params.kappa.unwrap_or(f.kappa);
            let b = build_local(&f, &q, sc.params.delta, kappa, &sc.local_params()?)?;
            report.extend(local_checks(&b));
            report.artifacts.insert("majorant".into(), json!(b.majorant));
            report.artifacts.insert(
                "family".into(),
                json!({ "tau": b.family.tau.len(), "p_max": b.family.p_max, "essential": b.essential.squares.len() }),
            );
            svg = Some(render_family(&b.family, &style));
        }
        Command::Global => {
            let f = sc.oracle()?;
            let mut local = sc.local_params()?;
            local.riesz = None;
            let params = GlobalParams {
                k_max: sc.params.k_max,
                local,
            };
            let g = build_global(&f, sc.params.epsilon, &params)?;
            let mut opts = VerifyOptions::default();
            if let Some(n) = sc.params.samples {
                opts.samples = n;
            }
            if let Some(n) = sc.params.probes {
                opts.probes = n;
            }
            if let Some(s) = sc.params.seed {
                opts.seed = s;
            }
            let r = verify_global(&g, &f, &opts);
            report.extend(global_checks(&g, &r));
            let cells: Vec<Value> = g
                .cells
                .iter()
                .map(|c| json!({ "cell": [c.cell.i, c.cell.j, c.cell.k], "terms": c.build.majorant.terms.len() }))
                .collect();
            report.artifacts.insert("cells".into(), json!(cells));
            report.artifacts.insert("majorant".into(), json!(g.sum));
        }
        Command::Verify => {
            let path = sc
                .input
                .clone()
                .ok_or_else(|| Error::InvalidArgument("`verify` needs an input report".into()))?;
            let stored = VerificationReport::from_json(&std::fs::read_to_string(&path)?)?;
            let mut original: Scenario = serde_json::from_value(stored.scenario.clone())?;
            if original.command == Command::Verify {
                return Err(Error::InvalidArgument("cannot replay a verify report".into()));
            }
            original.output = Output::default();
            let again = run(&original)?;
            let mut differences = Vec::new();
            compare(
                &json!([&stored.checks, &stored.artifacts, stored.passed]),
                &json!([&again.report.checks, &again.report.artifacts, again.report.passed]),
                sc.params.tol,
                "",
                &mut differences,
            );
            replay = Some(Replay { source: path, differences });
            return Ok(Outcome {
                report: again.report,
                svg: again.svg,
                replay,
            });
        }
    }
    Ok(Outcome {
        report: report.finish(),
        svg,
        replay,
    })
}

/// Structural comparison; numbers may differ by `tol` relative to their magnitude.
fn compare(a: &Value, b: &Value, tol: f64, path: &str, out: &mut Vec<String>) {
    match (a, b) {
        (Value::Number(x), Value::Number(y)) => {
            let (x, y) = (x.as_f64().unwrap_or(f64::NAN), y.as_f64().unwrap_or(f64::NAN));
            if x != y && !((x - y).abs() <= tol * x.abs().max(y.abs())) {
                out.push(format!("{path}: {x} != {y}"));
            }
        }
        (Value::Array(x), Value::Array(y)) if x.len() == y.len() => {
            for (i, (u, v)) in x.iter().zip(y).enumerate() {
                compare(u, v, tol, &format!("{path}/{i}"), out);
            }
        }
        (Value::Object(x), Value::Object(y)) if x.len() == y.len() => {
            for (k, u) in x {
                match y.get(k) {
                    Some(v) => compare(u, v, tol, &format!("{path}/{k}"), out),
                    None => out.push(format!("{path}/{k}: missing")),
                }
            }
        }
        _ if a == b => {}
        _ => out.push(format!("{path}: {a} != {b}")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_round_trip() {
        let s = r#"
            command = "local"
            square = ["1/2", "1/2", "1"]
            [function]
            kind = "cone"
            apex = [0.5, 0.5]
            height = 0.3
            slope = 1.0
            [params]
            lambda = "5/2"
            delta = 1.0
            riesz = false
        "#;
        let sc = Scenario::from_toml(s).unwrap();
        assert_eq!(sc.command, Command::Local);
        assert!(!sc.params.riesz);
        assert_eq!(sc.params.grid, 512);
        let back = Scenario::from_toml(&sc.to_toml().unwrap()).unwrap();
        assert_eq!(back, sc);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(Scenario::from_toml("command = \"tails\"\nbogus = 1\n").is_err());
        assert!(Scenario::from_toml("command = \"nope\"\n").is_err());
        assert!(Scenario::from_toml("command = \"tails\"\n[params]\nlamda = \"5/2\"\n").is_err());
    }

    #[test]
    fn tails_run_counts_cells() {
        let mut sc = Scenario::new(Command::Tails);
        sc.params.p_max = Some(2);
        let out = run(&sc).unwrap();
        assert!(out.passed());
        assert_eq!(out.report.checks[0].value, Some(465.0));
        assert_eq!(crate::render::rect_count(out.svg.as_deref().unwrap()), 465);
    }

    #[test]
    fn bad_parameters_are_errors() {
        let mut sc = Scenario::new(Command::Tails);
        sc.params.lambda = "2".into();
        assert!(run(&sc).is_err());
        let mut sc = Scenario::new(Command::Local);
        assert!(run(&sc).is_err());
        sc.function = Some(Recipe::Cone {
            apex: (0.5, 0.5),
            height: 0.3,
            slope: 1.0,
        });
        sc.params.delta = -1.0;
        assert!(run(&sc).is_err());
    }

    #[test]
    fn compare_respects_tolerance() {
        let mut d = Vec::new();
        compare(&json!({"a": [1.0, 2.0]}), &json!({"a": [1.0, 2.0 + 1e-9]}), 1e-6, "", &mut d);
        assert!(d.is_empty());
        compare(&json!({"a": [1.0, 2.0]}), &json!({"a": [1.0, 2.1]}), 1e-6, "", &mut d);
        assert_eq!(d, vec!["/a/1: 2 != 2.1".to_string()]);
    }
}
