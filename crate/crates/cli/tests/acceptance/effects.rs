// SPDX-License-Identifier: Apache-2.0
//! Monad laws for the three exceptional monads, on random values and random
//! Kleisli arrows over a small carrier.

use rand::Rng;
use rewire::effect::{rng_from_seed, SimRng};
use rewire::{Effect, EffectKind};

use crate::Outcome;

const CARRIER: i64 = 6;
const TOL: f64 = 1e-9;

fn random_effect(kind: EffectKind, rng: &mut SimRng, throw_p: f64) -> Effect<i64> {
    if rng.gen_bool(throw_p) {
        return Effect::Exception;
    }
    match kind {
        EffectKind::Maybe => Effect::Just(rng.gen_range(0..CARRIER)),
        EffectKind::ListE => {
            let n = rng.gen_range(0..4);
            Effect::List((0..n).map(|_| rng.gen_range(0..CARRIER)).collect())
        }
        EffectKind::DistE => {
            let n = rng.gen_range(1..4);
            let ws = (0..n)
                .map(|_| (rng.gen_range(0.01..1.0), rng.gen_range(0..CARRIER)))
                .collect();
            Effect::dist(ws).expect("positive weights")
        }
    }
}

/// A Kleisli arrow as a lookup table over the carrier.
fn random_arrow(kind: EffectKind, rng: &mut SimRng) -> Vec<Effect<i64>> {
    let throw_p = if rng.gen_bool(0.3) { 0.15 } else { 0.0 };
    (0..CARRIER)
        .map(|_| random_effect(kind, rng, throw_p))
        .collect()
}

fn apply(f: &[Effect<i64>], x: i64) -> Effect<i64> {
    f[x as usize].clone()
}

fn same(a: &Effect<i64>, b: &Effect<i64>) -> bool {
    a.approx_eq(b, TOL, &|x, y| x == y)
}

fn normalized(e: &Effect<i64>) -> bool {
    match e {
        Effect::Dist(ws) => {
            (ws.iter().map(|(w, _)| w).sum::<f64>() - 1.0).abs() <= TOL
                && ws.iter().all(|(w, _)| *w > 0.0)
        }
        _ => true,
    }
}

/// Exception absorption, checked against an independent reading: the bind
/// is exceptional iff `m` is, or `f` throws on some value `m` can produce.
fn absorbs(kind: EffectKind, m: &Effect<i64>, f: &[Effect<i64>]) -> bool {
    let bound = m.clone().bind(|x| apply(f, x));
    let expect_throw = m.is_exception()
        || m.branches()
            .iter()
            .any(|(_, &x)| apply(f, x).is_exception());
    let thrown = bound.is_exception();
    let lifted = Effect::<i64>::throw(kind)
        .bind(|x| apply(f, x))
        .is_exception();
    thrown == expect_throw && lifted
}

pub fn effect_laws() -> Outcome {
    let mut failures = Vec::new();
    for kind in EffectKind::ALL {
        let mut rng = rng_from_seed(0xEFFE_C7 ^ kind as u64);
        for case in 0..1000 {
            let a = rng.gen_range(0..CARRIER);
            let m = random_effect(kind, &mut rng, 0.1);
            let f = random_arrow(kind, &mut rng);
            let g = random_arrow(kind, &mut rng);

            let left = Effect::pure(kind, a).bind(|x| apply(&f, x));
            let right = m.clone().bind(|x| Effect::pure(kind, x));
            let assoc_l = m.clone().bind(|x| apply(&f, x)).bind(|y| apply(&g, y));
            let assoc_r = m.clone().bind(|x| apply(&f, x).bind(|y| apply(&g, y)));

            let checks = [
                ("left identity", same(&left, &apply(&f, a))),
                ("right identity", same(&right, &m)),
                ("associativity", same(&assoc_l, &assoc_r)),
                ("exception absorption", absorbs(kind, &m, &f)),
                (
                    "normalization",
                    [&m, &left, &right, &assoc_l, &assoc_r]
                        .iter()
                        .all(|e| normalized(e)),
                ),
            ];
            for (law, ok) in checks {
                if !ok {
                    failures.push(format!("{kind} case {case}: {law}"));
                }
            }
        }
    }
    match failures.first() {
        None => Outcome::new(true, "3000 cases, all laws hold"),
        Some(first) => Outcome::new(
            false,
            format!("{} failures, first: {first}", failures.len()),
        ),
    }
}
