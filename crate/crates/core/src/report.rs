//! Machine-readable verification reports.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::Result;
use crate::function::Status;
use crate::global::{GlobalMajorant, GlobalReport};
use crate::local::LocalBuild;
use crate::tail::{tiling_check, TailFamily};

pub const SCHEMA: &str = "majorant-report/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    /// The statement being checked.
    pub anchor: String,
    pub status: Status,
    /// Measured constant.
    pub value: Option<f64>,
    pub tolerance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub runtime_ms: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<Value>,
    #[serde(default, skip_serializing_if = "Value::is_null")]
    pub details: Value,
}

impl Check {
    pub fn new(name: &str, anchor: &str, status: Status) -> Self {
        Self {
            name: name.into(),
            anchor: anchor.into(),
            status,
            value: None,
            tolerance: None,
            runtime_ms: None,
            witness: None,
            details: Value::Null,
        }
    }

    pub fn value(mut self, v: f64) -> Self {
        self.value = Some(v);
        self
    }

    pub fn tolerance(mut self, t: f64) -> Self {
        self.tolerance = Some(t);
        self
    }

    pub fn witness(mut self, w: impl Serialize) -> Self {
        self.witness = Some(json!(w));
        self
    }

    pub fn details(mut self, d: impl Serialize) -> Self {
        self.details = json!(d);
        self
    }
}

fn pass(ok: bool) -> Status {
    if ok {
        Status::Pass
    } else {
        Status::Fail
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub package: String,
    pub version: String,
    pub os: String,
    pub arch: String,
    pub threads: usize,
}

impl Environment {
    pub fn current() -> Self {
        Self {
            package: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            os: std::env::consts::OS.into(),
            arch: std::env::consts::ARCH.into(),
            threads: rayon::current_num_threads(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub schema: String,
    pub command: String,
    pub scenario: Value,
    pub environment: Environment,
    pub checks: Vec<Check>,
    pub artifacts: BTreeMap<String, Value>,
    pub passed: bool,
}

impl VerificationReport {
    pub fn new(command: &str, scenario: impl Serialize) -> Self {
        Self {
            schema: SCHEMA.into(),
            command: command.into(),
            scenario: json!(scenario),
            environment: Environment::current(),
            checks: Vec::new(),
            artifacts: BTreeMap::new(),
            passed: true,
        }
    }

    pub fn extend(&mut self, checks: impl IntoIterator<Item = Check>) {
        self.checks.extend(checks);
    }

    /// Fills missing witnesses of failed checks from their details and sets `passed`.
    pub fn finish(mut self) -> Self {
        for c in &mut self.checks {
            if c.status == Status::Fail && c.witness.is_none() {
                c.witness = Some(if c.details.is_null() { json!({ "value": c.value }) } else { c.details.clone() });
            }
        }
        self.passed = self.checks.iter().all(|c| c.status != Status::Fail);
        self
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let r: Self = serde_json::from_str(s)?;
        if r.schema != SCHEMA {
            return Err(crate::Error::Format(format!("unsupported report schema {:?}", r.schema)));
        }
        Ok(r)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| c.status == Status::Fail)
    }
}

/// Writes `contents` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let tmp = path.with_extension(format!(
        "{}.tmp",
        path.extension().and_then(|e| e.to_str()).unwrap_or("out")
    ));
    std::fs::write(&tmp, contents)?;
    std::fs::rename(&tmp, path)?;
    Ok(())
}

pub fn tail_checks(t: &TailFamily) -> Vec<Check> {
    let tiling = tiling_check(t);
    let expected: Vec<usize> = (0..t.layers.len() as u32)
        .map(|p| t.parameters.layer_count(p) as usize)
        .collect();
    let counts_ok = expected == tiling.layer_counts;
    vec![
        Check::new("tail-tiling", "tail layers tile the outer square exactly", pass(tiling.exact()))
            .value(tiling.cells as f64)
            .tolerance(0.0)
            .details(&tiling),
        Check::new("tail-layer-counts", "#t_p(a) = 4 mu_p (alpha_p - beta_p)", pass(counts_ok))
            .details(json!({ "measured": tiling.layer_counts, "expected": expected })),
    ]
}

pub fn local_checks(b: &LocalBuild) -> Vec<Check> {
    let c = &b.certificates;
    let mut out = vec![
        Check::new("support", "F = 0 outside 3/2 Q", c.support.status).details(&c.support),
        Check::new("domination", "F >= f on Q", c.domination.status)
            .value(c.domination.min_gap)
            .tolerance(c.domination.floor)
            .details(json!({
                "grid": c.domination.grid,
                "violations": c.domination.violations,
                "margin": c.domination.margin,
            }))
            .witness_opt(c.domination.witness),
        Check::new("cell-bounds", "every a in tau has |f|_inf(a) <= l(a)", c.cells.status)
            .value(c.cells.max_ratio)
            .details(json!({ "cells": c.cells.cells, "violations": c.cells.violations }))
            .witness_opt(c.cells.witness),
        Check::new("integral", "(delta/kappa)^2 int F <= C int_Q f", c.integral.status)
            .value(c.integral.ratio)
            .details(&c.integral),
        Check::new("tail-chain", "sum over t(c) of l(b)^3 <= C l(c)^3", c.tail_chain.status)
            .value(c.tail_chain.max_ratio)
            .tolerance(c.tail_chain.bound),
    ];
    let worst = c
        .cut_cone
        .reports
        .iter()
        .zip(&b.essential.squares)
        .filter(|(r, _)| r.status == Status::Fail)
        .map(|(_, a)| *a)
        .next();
    out.push(
        Check::new("cut-cone", "int_a f >= (pi/12) |f|^3 / kappa^2 on essential squares", c.cut_cone.status)
            .value(c.cut_cone.min_ratio)
            .tolerance(crate::function::CUT_CONE_TOL)
            .details(json!({ "squares": c.cut_cone.reports.len(), "failures": c.cut_cone.failures }))
            .witness_opt(worst),
    );
    if let Some(r) = &c.riesz {
        out.push(
            Check::new("riesz-lipschitz", "|grad R_j F| <= C delta", r.status)
                .value(r.constant)
                .tolerance(r.lip[0].allowance)
                .details(json!({
                    "grad_sup": [r.lip[0].grad_sup, r.lip[1].grad_sup],
                    "pair_sup": [r.lip[0].pair_sup, r.lip[1].pair_sup],
                    "argmax": [r.lip[0].grad_argmax, r.lip[1].grad_argmax],
                    "split": r.parts,
                    "probes": r.probes,
                    "consistent": r.consistent,
                })),
        );
    }
    if let Some(s) = &c.separation {
        out.push(
            Check::new("separation", "non-neighbors of tau are separated", pass(s.separation_passed()))
                .details(json!({
                    "comparable": s.comparable,
                    "larger": s.larger,
                    "smaller": s.smaller,
                })),
        );
        out.push(
            Check::new("multiplicity", "overlap of doubled squares implies neighborhood", pass(s.overlap_passed()))
                .value(s.max_multiplicity as f64)
                .details(json!({
                    "overlap_non_neighbors": s.overlap_non_neighbors,
                    "overlap_non_neighbors_symmetric": s.overlap_non_neighbors_symmetric,
                    "max_neighborhood": s.max_neighborhood,
                }))
                .witness_opt(s.overlap_witness.clone()),
        );
    }
    out
}

pub fn global_checks(g: &GlobalMajorant, r: &GlobalReport) -> Vec<Check> {
    vec![
        Check::new("preprocess", "flattened input vanishes near the origin and grows at most 2 mu |x|", r.preprocess)
            .value(g.record.c_ky)
            .details(&g.record),
        Check::new("global-domination", "Omega <= Omega_1", r.domination.status)
            .value(r.domination.min_gap)
            .tolerance(r.domination.tolerance)
            .details(json!({ "samples": r.domination.samples, "violations": r.domination.violations }))
            .witness_opt(r.domination.witness),
        Check::new("global-integrability", "int Omega_1 dP <= C eps^-2 int Omega dP", r.integrability.status)
            .value(r.integrability.ratio)
            .details(&r.integrability),
        Check::new("global-regularity", "|grad R_j Omega_1| <= C eps", r.regularity.status)
            .value(r.regularity.constant[0].max(r.regularity.constant[1]))
            .details(&r.regularity)
            .witness_opt(r.regularity.witness),
        Check::new("cover-overlap", "cover overlaps carry no mass of the flattened input", r.overlap.status)
            .value(r.overlap.max_multiplicity as f64)
            .details(&r.overlap)
            .witness_opt(r.overlap.witness),
        Check::new("local-builds", "every cell build passes its certificates", pass(r.local_failures == 0))
            .value(r.cells as f64)
            .details(json!({ "failures": r.local_failures, "empty_cells": g.empty_cells })),
    ]
}

trait WitnessOpt {
    fn witness_opt<T: Serialize>(self, w: Option<T>) -> Self;
}

impl WitnessOpt for Check {
    fn witness_opt<T: Serialize>(self, w: Option<T>) -> Self {
        match w {
            Some(w) => self.witness(w),
            None => self,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dyadic::DyadicSquare;
    use crate::tail::{tail, TailParameters};

    #[test]
    fn tail_report_round_trips() {
        let t = tail(&DyadicSquare::new(0, 0, 0), 2, &TailParameters::default_ratio());
        let mut r = VerificationReport::new("tails", json!({ "p_max": 2 }));
        r.extend(tail_checks(&t));
        let r = r.finish();
        assert!(r.passed);
        assert_eq!(r.checks[0].value, Some(465.0));
        let s = r.to_json();
        let back = VerificationReport::from_json(&s).unwrap();
        assert_eq!(back, r);
        assert_eq!(back.to_json(), s);
    }

    #[test]
    fn failures_carry_witnesses() {
        let mut r = VerificationReport::new("x", Value::Null);
        r.extend([Check::new("a", "b", Status::Fail).value(2.0), Check::new("c", "d", Status::Pass)]);
        let r = r.finish();
        assert!(!r.passed);
        assert_eq!(r.failures().count(), 1);
        assert!(r.failures().all(|c| c.witness.is_some()));
    }

    #[test]
    fn published_schema_matches_fields() {
        let schema: Value = serde_json::from_str(include_str!("../schema/report-1.schema.json")).unwrap();
        assert_eq!(schema["$id"], SCHEMA);
        let keys = |v: &Value| {
            let mut k: Vec<String> = v.as_object().unwrap().keys().cloned().collect();
            k.sort();
            k
        };
        let mut r = VerificationReport::new("tails", json!({}));
        let mut full = Check::new("a", "b", Status::Fail).value(1.0).tolerance(0.0).witness(0).details(1);
        full.runtime_ms = Some(1.0);
        r.extend([full]);
        let v = json!(r.finish());
        assert_eq!(keys(&v), keys(&schema["properties"]));
        assert_eq!(keys(&v["environment"]), keys(&schema["properties"]["environment"]["properties"]));
        assert_eq!(keys(&v["checks"][0]), keys(&schema["properties"]["checks"]["items"]["properties"]));
        assert_eq!(v["checks"][0]["status"], "fail");
    }

    #[test]
    fn unknown_schema_is_rejected() {
        let r = VerificationReport::new("x", Value::Null).finish();
        let s = r.to_json().replace(SCHEMA, "other/9");
        assert!(VerificationReport::from_json(&s).is_err());
    }
}
