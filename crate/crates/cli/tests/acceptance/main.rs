// SPDX-License-Identifier: Apache-2.0
//! End-to-end acceptance checks. Each criterion prints one line; the process
//! exits nonzero if any of them fails.

mod effects;
mod graphs;
mod machines;
mod programs;

use std::process::ExitCode;
use std::time::{Duration, Instant};

pub struct Outcome {
    pub ok: bool,
    pub detail: String,
}

impl Outcome {
    pub fn new(ok: bool, detail: impl Into<String>) -> Self {
        Outcome {
            ok,
            detail: detail.into(),
        }
    }
}

type Criterion = (&'static str, Option<Duration>, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        (
            "1 trap fidelity",
            Some(Duration::from_secs(1)),
            machines::trap_fidelity,
        ),
        (
            "2 trap2 composite",
            Some(Duration::from_secs(1)),
            machines::trap2_composite,
        ),
        (
            "3 homomorphism oracle",
            Some(Duration::from_secs(60)),
            graphs::hom_oracle,
        ),
        (
            "4 pushout/dpo oracle",
            Some(Duration::from_secs(60)),
            graphs::pushout_oracle,
        ),
        ("5 category/coproduct laws", None, machines::category_laws),
        ("6 traced-axiom probes", None, machines::traced_probes),
        (
            "7 query semantics",
            Some(Duration::from_secs(1)),
            programs::query_semantics,
        ),
        (
            "8 first-match program",
            Some(Duration::from_secs(1)),
            programs::first_match_program,
        ),
        (
            "9 interpreter/denotation agreement",
            None,
            programs::compile_agreement,
        ),
        ("10 wolf-sheep end-to-end", None, programs::wolf_sheep),
        ("11 effect laws", None, effects::effect_laws),
    ];
    let mut failed = 0;
    for (name, limit, check) in criteria {
        let t = Instant::now();
        let mut out = check();
        let took = t.elapsed();
        if let Some(limit) = limit {
            if took > limit {
                out.ok = false;
                out.detail = format!("{} (over the {:?} limit)", out.detail, limit);
            }
        }
        if !out.ok {
            failed += 1;
        }
        println!(
            "{} {name}: {} [{:.2}s]",
            if out.ok { "PASS" } else { "FAIL" },
            out.detail,
            took.as_secs_f64()
        );
    }
    println!("{} of 11 criteria passed", 11 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
