// SPDX-License-Identifier: Apache-2.0
//! Machine-readable summaries of schedule runs.
//!
//! ```toml
//! kind = "report"
//!
//! [report]
//! schedule = "first_match"
//! effect = "maybe"
//! mode = "sample"
//! seed = 0
//! fuel = 100000
//! branch_cap_hit = false
//! exception_weight = 0.0
//!
//! [[report.branches]]
//! id = 0
//! weight = 1.0
//! port = 0
//! fuel_used = 7
//! parts = { V = 1, Sheep = 4 }
//! ```
//!
//! An exceptional branch has no `port` and no `parts`. With logging on,
//! each branch also lists `[[report.branches.log]]` entries: the box, the
//! port it left by, the part counts after the step and the branch weight.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::effect::EffectKind;
use crate::format::{de, expect_kind, ser, FormatError};
use crate::scheduler::{RunMode, RunOptions, RunResult, Schedule};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepRecord {
    #[serde(rename = "box")]
    pub box_name: String,
    /// Missing when the step raised an exception.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub port: Option<usize>,
    /// Part counts of the world after the step, in schema table order.
    pub parts: Vec<usize>,
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BranchReport {
    pub id: usize,
    pub weight: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub port: Option<usize>,
    pub fuel_used: u64,
    /// Part counts of the final world, by table.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub parts: BTreeMap<String, usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub log: Vec<StepRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunReport {
    pub schedule: String,
    pub effect: String,
    pub mode: String,
    pub seed: u64,
    pub fuel: u64,
    pub branch_cap_hit: bool,
    pub exception_weight: f64,
    #[serde(default)]
    pub branches: Vec<BranchReport>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ReportFile {
    kind: String,
    report: RunReport,
}

fn mode_name(m: RunMode) -> &'static str {
    match m {
        RunMode::Exact => "exact",
        RunMode::Sample => "sample",
    }
}

impl RunReport {
    /// Summarises `res`; step logs are kept only when `with_log` is set.
    pub fn new(s: &Schedule, opts: &RunOptions, res: &RunResult, with_log: bool) -> RunReport {
        let branches = res
            .branches
            .iter()
            .enumerate()
            .map(|(id, b)| BranchReport {
                id,
                weight: b.weight,
                port: b.outcome.as_ref().map(|(p, _)| *p),
                fuel_used: b.fuel_used,
                parts: b
                    .outcome
                    .as_ref()
                    .map(|(_, t)| {
                        let w = t.last();
                        w.schema()
                            .tables()
                            .iter()
                            .enumerate()
                            .map(|(i, n)| (n.clone(), w.nparts(i)))
                            .collect()
                    })
                    .unwrap_or_default(),
                log: if with_log {
                    b.log
                        .iter()
                        .map(|e| StepRecord {
                            box_name: e.box_name.clone(),
                            port: e.port,
                            parts: e.part_counts.clone(),
                            weight: e.weight,
                        })
                        .collect()
                } else {
                    Vec::new()
                },
            })
            .collect();
        RunReport {
            schedule: s.name.clone(),
            effect: opts.kind.to_string(),
            mode: mode_name(opts.mode).to_string(),
            seed: opts.seed,
            fuel: opts.fuel,
            branch_cap_hit: res.branch_cap_hit,
            exception_weight: res.exception_weight(),
            branches,
        }
    }

    pub fn to_toml(&self) -> String {
        ser(&ReportFile {
            kind: "report".into(),
            report: self.clone(),
        })
    }
}

pub fn parse_report(src: &str) -> Result<RunReport, FormatError> {
    let f: ReportFile = de(src)?;
    expect_kind(src, &f.kind, "report")?;
    let r = f.report;
    r.effect
        .parse::<EffectKind>()
        .map_err(|e| FormatError::plain(e.to_string()))?;
    if r.mode != "exact" && r.mode != "sample" {
        return Err(FormatError::plain(format!("unknown run mode `{}`", r.mode)));
    }
    let bad = |w: f64| !w.is_finite() || w < 0.0;
    let bad_step = |b: &BranchReport| b.log.iter().any(|s| bad(s.weight));
    if bad(r.exception_weight) || r.branches.iter().any(|b| bad(b.weight) || bad_step(b)) {
        return Err(FormatError::plain(
            "weights must be finite and non-negative",
        ));
    }
    if r.branches
        .iter()
        .any(|b| b.port.is_none() && !b.parts.is_empty())
    {
        return Err(FormatError::plain(
            "an exceptional branch has no final world",
        ));
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::wolf_sheep::{Model, Params};
    use crate::scheduler::run;
    use crate::trajectory::Trajectory;

    #[test]
    fn report_round_trips() {
        let m = Model::new(Params::default());
        let w = m.initial_world(&mut crate::effect::rng_from_seed(1));
        let mut opts = RunOptions::new(EffectKind::Maybe, RunMode::Sample);
        opts.seed = 9;
        let res = run(&m.step, &Trajectory::start(&w).unwrap(), &opts).unwrap();
        let rep = RunReport::new(&m.step, &opts, &res, true);
        assert_eq!(rep.branches[0].parts["V"], 100);
        let text = rep.to_toml();
        assert_eq!(parse_report(&text).unwrap(), rep);
    }

    #[test]
    fn rejects_bad_reports() {
        let base = "kind = \"report\"\n[report]\nschedule = \"s\"\neffect = \"maybe\"\nmode = \"sample\"\nseed = 0\nfuel = 1\nbranch_cap_hit = false\nexception_weight = 0.0\n";
        assert!(parse_report(base).is_ok());
        assert!(parse_report(&base.replace("maybe", "set")).is_err());
        assert!(parse_report(&base.replace("\"sample\"", "\"lazy\"")).is_err());
        let e = parse_report(&format!("{base}extra = 1\n")).unwrap_err();
        assert!(e.line.is_some(), "{e}");
        assert!(parse_report(&base.replace("\"report\"\n", "\"rule\"\n")).is_err());
    }
}
