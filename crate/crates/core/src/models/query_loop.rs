// SPDX-License-Identifier: Apache-2.0
//! Apply a rule once, at the first agent satisfying a predicate.
//!
//! The program has the empty shape on both ends. A [`Query`] box walks the
//! agents of the rule's input shape; each one is tested with the predicate
//! and, if it passes, the rule is tried there. The first successful rewrite
//! drops the focus to the empty agent and leaves. If every candidate is
//! exhausted the query box exits and the world is left as it was.
//!
//! [`Query`]: crate::scheduler::Generator::Query

use std::sync::Arc;

use crate::acset::ACSet;
use crate::expr::AttrExpr;
use crate::morphism::ACSetMorphism;
use crate::rewrite::RewriteRule;
use crate::scheduler::{Choice, Generator, Schedule, Source, Target};

/// Box indices of [`first_match`], for inspecting run logs.
pub const QUERY: usize = 0;
pub const TEST: usize = 1;
pub const REWRITE: usize = 2;
pub const DONE: usize = 3;
pub const NEXT: usize = 4;

pub fn first_match(rule: &RewriteRule, phi: AttrExpr) -> Schedule {
    let a = Arc::clone(rule.in_shape());
    let b = Arc::clone(rule.out_shape());
    let zero = Arc::new(ACSet::empty_unchecked(Arc::clone(a.schema())));
    let mut s = Schedule::new(
        "first_match",
        vec![Arc::clone(&zero)],
        vec![Arc::clone(&zero)],
    );
    let q = s.add_box(
        "query",
        Generator::Query {
            a: Arc::clone(&zero),
            b: Arc::clone(&a),
            c: Arc::clone(&zero),
        },
    );
    let test = s.add_box(
        "test",
        Generator::ControlFlow {
            shape: Arc::clone(&a),
            choice: Choice::Expr {
                arity: 2,
                expr: phi,
            },
        },
    );
    let rw = s.add_box(
        "rewrite",
        Generator::Rewrite {
            rule: Arc::new(rule.clone()),
        },
    );
    let done = s.add_box(
        "done",
        Generator::Weaken {
            f: ACSetMorphism::from_initial(&b),
        },
    );
    let next = s.add_box(
        "next",
        Generator::Weaken {
            f: ACSetMorphism::from_initial(&a),
        },
    );
    debug_assert_eq!(
        (q, test, rw, done, next),
        (QUERY, TEST, REWRITE, DONE, NEXT)
    );
    s.wire(Source::Input(0), Target::Box { index: q, port: 0 });
    s.connect((q, 1), (test, 0));
    s.connect((test, 0), (rw, 0));
    s.connect((test, 1), (next, 0));
    s.connect((rw, 0), (done, 0));
    s.connect((rw, 1), (next, 0));
    s.connect((next, 0), (q, 1));
    for src in [
        Source::Box { index: q, port: 0 },
        Source::Box { index: q, port: 2 },
        Source::Box {
            index: done,
            port: 0,
        },
    ] {
        s.wire(src, Target::Output(0));
    }
    s
}
