// SPDX-License-Identifier: Apache-2.0
//! Program-level criteria: query semantics, the first-match program, the
//! interpreter against compiled machines, and the bundled wolf-sheep model.

use std::process::Command;
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::Rng;
use rewire::acset::{ACSet, AttrValue, Scalar};
use rewire::effect::{rng_from_seed, SimRng};
use rewire::expr::parse_attr_expr;
use rewire::mealy::Msg;
use rewire::models::query_loop::{first_match, REWRITE};
use rewire::models::wolf_sheep::{
    animal_rules, migrate_rules, schema as ws_schema, swap, Params, SHEEP, WOLF,
};
use rewire::scheduler::compile_to_mealy;
use rewire::scheduler::{Choice, FailMode, NamedPredicate, Source, Target};
use rewire::{
    is_isomorphic, run, typecheck, ACSetMorphism, EffectKind, Generator, RewriteRule, RuleOptions,
    RunMode, RunOptions, ScalarKind, Schedule, Schema, Trajectory,
};

use crate::Outcome;

fn labelled_schema() -> Arc<Schema> {
    Arc::new(
        Schema::build(
            &["V"],
            &[("Label", ScalarKind::Int)],
            &[],
            &[("label", "V", "Label")],
        )
        .expect("schema"),
    )
}

fn vertices(s: &Arc<Schema>, labels: &[AttrValue]) -> Arc<ACSet> {
    let mut x = ACSet::new(Arc::clone(s)).expect("schema");
    for l in labels {
        x.add_part("V", &[], &[("label", l.clone())]).expect("part");
    }
    Arc::new(x)
}

fn hom(a: &Arc<ACSet>, b: &Arc<ACSet>, comps: Vec<Vec<usize>>) -> ACSetMorphism {
    ACSetMorphism::inferred(Arc::clone(a), Arc::clone(b), comps).expect("natural")
}

fn label_of(t: &Trajectory) -> i64 {
    match t.last().attr(0, t.agent().apply(0, 0)) {
        AttrValue::Concrete(Scalar::Int(i)) => *i,
        v => panic!("unlabelled vertex {v:?}"),
    }
}

type Log = Arc<Mutex<Vec<String>>>;

fn recorder(log: &Log, shape: &Arc<ACSet>, tag: &'static str) -> Generator {
    let log = Arc::clone(log);
    Generator::ControlFlow {
        shape: Arc::clone(shape),
        choice: Choice::Custom {
            arity: 1,
            pred: NamedPredicate {
                name: format!("record_{tag}"),
                f: Arc::new(move |t: &Trajectory| {
                    let entry = if t.agent().dom().total_parts() == 0 {
                        tag.to_string()
                    } else {
                        format!("{tag}{}", label_of(t))
                    };
                    log.lock().expect("log").push(entry);
                    0
                }),
            },
        },
    }
}

/// A query over single vertices whose subroutine applies `rule` when the
/// queued vertex carries label `trigger`.
fn query_program(rule: RewriteRule, trigger: i64, log: &Log) -> Schedule {
    let s = labelled_schema();
    let v = vertices(&s, &[AttrValue::Var(0)]);
    let z = vertices(&s, &[]);
    let mut p = Schedule::new(
        "query_probe",
        vec![Arc::clone(&v)],
        vec![Arc::clone(&v), Arc::clone(&z)],
    );
    let q = p.add_box(
        "query",
        Generator::Query {
            a: Arc::clone(&v),
            b: Arc::clone(&v),
            c: Arc::clone(&z),
        },
    );
    let rec_b = p.add_box("record_b", recorder(log, &v, "B"));
    let test = p.add_box(
        "test",
        Generator::ControlFlow {
            shape: Arc::clone(&v),
            choice: Choice::Expr {
                arity: 2,
                expr: parse_attr_expr(&format!("$0 == {trigger}")).expect("expr"),
            },
        },
    );
    let drops_focus = rule.out_shape().total_parts() == 0;
    let rw = p.add_box(
        "rewrite",
        Generator::Rewrite {
            rule: Arc::new(rule),
        },
    );
    let next = p.add_box(
        "next",
        Generator::Weaken {
            f: ACSetMorphism::from_initial(&v),
        },
    );
    let rec_a = p.add_box("record_a", recorder(log, &v, "A"));
    let rec_z = p.add_box("record_zero", recorder(log, &z, "zero"));
    p.wire(Source::Input(0), Target::Box { index: q, port: 0 });
    p.connect((q, 1), (rec_b, 0));
    p.connect((rec_b, 0), (test, 0));
    p.connect((test, 0), (rw, 0));
    p.connect((test, 1), (next, 0));
    p.connect((rw, 0), if drops_focus { (q, 1) } else { (next, 0) });
    p.connect((rw, 1), (next, 0));
    p.connect((next, 0), (q, 1));
    p.connect((q, 0), (rec_a, 0));
    p.connect((q, 2), (rec_z, 0));
    p.wire(
        Source::Box {
            index: rec_a,
            port: 0,
        },
        Target::Output(0),
    );
    p.wire(
        Source::Box {
            index: rec_z,
            port: 0,
        },
        Target::Output(1),
    );
    p
}

/// Deletes the vertex labelled 1, keeping the focus.
fn delete_labelled_one(s: &Arc<Schema>) -> RewriteRule {
    let k = vertices(s, &[AttrValue::Var(0)]);
    let l = vertices(s, &[AttrValue::Var(0), AttrValue::int(1)]);
    let kl = hom(&k, &l, vec![vec![0]]);
    let id = ACSetMorphism::identity(&k);
    RewriteRule::new(
        "delete_one",
        kl.clone(),
        id.clone(),
        kl,
        id,
        RuleOptions {
            monic: true,
            ..RuleOptions::default()
        },
    )
    .expect("rule")
}

/// Deletes the focused vertex.
fn delete_focus(s: &Arc<Schema>) -> RewriteRule {
    let l = vertices(s, &[AttrValue::Var(0)]);
    let z = vertices(s, &[]);
    let zl = ACSetMorphism::from_initial(&l);
    let zz = ACSetMorphism::identity(&z);
    RewriteRule::new(
        "delete_focus",
        zl,
        zz.clone(),
        ACSetMorphism::identity(&l),
        zz,
        RuleOptions::default(),
    )
    .expect("rule")
}

/// The query listing executed by hand over vertex labels: queue every
/// vertex, emit the head, run the subroutine, drop the head and anything
/// deleted, and finally report on the original agent.
fn listing(mut world: Vec<i64>, agent: i64, sub: impl Fn(i64, &mut Vec<i64>)) -> Vec<String> {
    let mut out = Vec::new();
    let mut queue = world.clone();
    while let Some(&head) = queue.first() {
        out.push(format!("B{head}"));
        sub(head, &mut world);
        queue = queue[1..]
            .iter()
            .copied()
            .filter(|b| world.contains(b))
            .collect();
    }
    out.push(if world.contains(&agent) {
        format!("A{agent}")
    } else {
        "zero".into()
    });
    out
}

pub fn query_semantics() -> Outcome {
    let s = labelled_schema();
    let world = vertices(
        &s,
        &[AttrValue::int(0), AttrValue::int(1), AttrValue::int(2)],
    );
    let v = vertices(&s, &[AttrValue::Var(0)]);
    let scenarios: [(
        &str,
        RewriteRule,
        i64,
        i64,
        Vec<&str>,
        Box<dyn Fn(i64, &mut Vec<i64>)>,
    ); 2] = [
        (
            "neighbour deleted",
            delete_labelled_one(&s),
            0,
            0,
            vec!["B0", "B2", "A0"],
            Box::new(|b, w: &mut Vec<i64>| {
                if b == 0 {
                    w.retain(|&x| x != 1)
                }
            }),
        ),
        (
            "original deleted",
            delete_focus(&s),
            2,
            2,
            vec!["B0", "B1", "B2", "zero"],
            Box::new(|b, w: &mut Vec<i64>| {
                if b == 2 {
                    w.retain(|&x| x != 2)
                }
            }),
        ),
    ];
    let mut notes = Vec::new();
    let mut ok = true;
    for (name, rule, trigger, agent, expected, sub) in scenarios {
        let log: Log = Arc::default();
        let p = query_program(rule, trigger, &log);
        let errs = typecheck(&p);
        if !errs.is_empty() {
            return Outcome::new(false, format!("{name}: {}", errs.join("; ")));
        }
        let t0 = Trajectory::new(hom(&v, &world, vec![vec![agent as usize]])).expect("ground");
        let res = run(&p, &t0, &RunOptions::new(EffectKind::Maybe, RunMode::Exact));
        let exit = res
            .ok()
            .and_then(|r| r.branches[0].outcome.as_ref().map(|(port, _)| *port));
        let got = log.lock().expect("log").clone();
        let oracle = listing(vec![0, 1, 2], agent, sub);
        let want_port = if expected.last() == Some(&"zero") {
            1
        } else {
            0
        };
        let pass = got == expected && oracle == expected && exit == Some(want_port);
        ok &= pass;
        notes.push(format!("{name} {got:?}"));
    }
    Outcome::new(ok, notes.join(", "))
}

fn weighted_graph() -> Arc<Schema> {
    Arc::new(
        Schema::build(
            &["V", "E"],
            &[("W", ScalarKind::Int)],
            &[("src", "E", "V"), ("tgt", "E", "V")],
            &[("weight", "V", "W")],
        )
        .expect("schema"),
    )
}

fn weighted(s: &Arc<Schema>, weights: &[i64], edges: &[(usize, usize)]) -> Arc<ACSet> {
    let mut x = ACSet::new(Arc::clone(s)).expect("schema");
    for &w in weights {
        x.add_part("V", &[], &[("weight", AttrValue::int(w))])
            .expect("vertex");
    }
    for &(a, b) in edges {
        x.add_part("E", &[("src", a), ("tgt", b)], &[])
            .expect("edge");
    }
    Arc::new(x)
}

pub fn first_match_program() -> Outcome {
    let s = weighted_graph();
    let l = {
        let mut x = ACSet::new(Arc::clone(&s)).expect("schema");
        x.add_part("V", &[], &[("weight", AttrValue::Var(0))])
            .expect("vertex");
        Arc::new(x)
    };
    let z = Arc::new(ACSet::new(Arc::clone(&s)).expect("schema"));
    let zz = ACSetMorphism::identity(&z);
    let rule = RewriteRule::new(
        "delete_vertex",
        ACSetMorphism::from_initial(&l),
        zz.clone(),
        ACSetMorphism::identity(&l),
        zz,
        RuleOptions::default(),
    )
    .expect("rule");
    let p = first_match(&rule, parse_attr_expr("$0 > 5").expect("expr"));
    let go = |world: &Arc<ACSet>| {
        let res = run(
            &p,
            &Trajectory::start(world).expect("ground"),
            &RunOptions::new(EffectKind::Maybe, RunMode::Exact),
        )
        .expect("runs");
        let b = &res.branches[0];
        let rewrites = b
            .log
            .iter()
            .filter(|e| e.box_index == REWRITE && e.port == Some(0))
            .count();
        let (port, t) = b.outcome.clone().expect("no exception");
        (rewrites, port, t)
    };
    // Vertex 0 passes the test but has an edge; vertex 2 is the one match.
    let one = weighted(&s, &[7, 1, 9, 2], &[(0, 1)]);
    let (n1, port1, t1) = go(&one);
    let expect_after = weighted(&s, &[7, 1, 2], &[(0, 1)]);
    let ok1 = n1 == 1
        && port1 == 0
        && t1.agent().dom().total_parts() == 0
        && is_isomorphic(t1.last(), &expect_after);
    let none = weighted(&s, &[7, 1, 3], &[(0, 1)]);
    let (n0, port0, t0) = go(&none);
    let ok0 = n0 == 0 && port0 == 0 && is_isomorphic(t0.last(), &none);
    Outcome::new(
        ok1 && ok0,
        format!("one match: {n1} rewrite(s), exit agent {} parts; no match: {n0} rewrites, world unchanged {}", t1.agent().dom().total_parts(), ok0),
    )
}

/// Building blocks for random schedules over plain graphs.
struct Kit {
    z: Arc<ACSet>,
    v: Arc<ACSet>,
    rules_v: Vec<Arc<RewriteRule>>,
    rules_z: Vec<Arc<RewriteRule>>,
}

fn graph(s: &Arc<Schema>, nv: usize, edges: &[(usize, usize)]) -> Arc<ACSet> {
    let mut x = ACSet::new(Arc::clone(s)).expect("schema");
    for _ in 0..nv {
        x.add_part("V", &[], &[]).expect("vertex");
    }
    for &(a, b) in edges {
        x.add_part("E", &[("src", a), ("tgt", b)], &[])
            .expect("edge");
    }
    Arc::new(x)
}

fn kit() -> Kit {
    let s = Arc::new(
        Schema::build(
            &["V", "E"],
            &[],
            &[("src", "E", "V"), ("tgt", "E", "V")],
            &[],
        )
        .expect("schema"),
    );
    let z = graph(&s, 0, &[]);
    let v = graph(&s, 1, &[]);
    let looped = graph(&s, 1, &[(0, 0)]);
    let sprout = graph(&s, 2, &[(0, 1)]);
    let idv = ACSetMorphism::identity(&v);
    let idz = ACSetMorphism::identity(&z);
    let zv = ACSetMorphism::from_initial(&v);
    let opts = RuleOptions::default;
    let rule =
        |name: &str, l: ACSetMorphism, r: ACSetMorphism, a: ACSetMorphism, b: ACSetMorphism| {
            Arc::new(RewriteRule::new(name, l, r, a, b, opts()).expect("rule"))
        };
    let v_loop = hom(&v, &looped, vec![vec![0], vec![]]);
    let v_sprout = hom(&v, &sprout, vec![vec![0], vec![]]);
    let v_tip = hom(&v, &sprout, vec![vec![1], vec![]]);
    let rules_v = vec![
        rule(
            "add_loop",
            idv.clone(),
            v_loop.clone(),
            idv.clone(),
            v_loop.clone(),
        ),
        rule("delete", zv.clone(), idz.clone(), idv.clone(), idz.clone()),
        rule("sprout", idv.clone(), v_sprout, idv.clone(), v_tip),
    ];
    let rules_z = vec![
        rule(
            "add_vertex",
            idz.clone(),
            zv.clone(),
            idz.clone(),
            idv.clone(),
        ),
        rule("mark_any", idv.clone(), v_loop.clone(), zv.clone(), v_loop),
    ];
    Kit {
        z,
        v,
        rules_v,
        rules_z,
    }
}

fn loops_at_focus(t: &Trajectory) -> usize {
    let x = t.last();
    if t.agent().dom().nparts(0) == 0 {
        return x.nparts(1) % 2;
    }
    let at = t.agent().apply(0, 0);
    (0..x.nparts(1))
        .filter(|&e| x.hom(0, e) == at && x.hom(1, e) == at)
        .count()
        % 2
}

fn random_generator(k: &Kit, rng: &mut SimRng, on_vertex: bool) -> Generator {
    let shape = if on_vertex { &k.v } else { &k.z };
    match rng.gen_range(0..20) {
        0 => Generator::Fail {
            shape: Arc::clone(shape),
            mode: FailMode::Exception,
        },
        1..=6 => {
            let rules = if on_vertex { &k.rules_v } else { &k.rules_z };
            Generator::Rewrite {
                rule: Arc::clone(rules.choose(rng).expect("rules")),
            }
        }
        7..=9 => {
            let n = rng.gen_range(2..=3);
            Generator::ControlFlow {
                shape: Arc::clone(shape),
                choice: Choice::Weights((0..n).map(|_| rng.gen_range(0..4) as f64 + 0.5).collect()),
            }
        }
        10..=11 => Generator::ControlFlow {
            shape: Arc::clone(shape),
            choice: Choice::Custom {
                arity: 2,
                pred: NamedPredicate {
                    name: "loop_parity".into(),
                    f: Arc::new(loops_at_focus),
                },
            },
        },
        12..=14 => Generator::Query {
            a: Arc::clone(shape),
            b: Arc::clone(&k.v),
            c: Arc::clone(&k.z),
        },
        _ if on_vertex => Generator::Weaken {
            f: ACSetMorphism::from_initial(&k.v),
        },
        _ => Generator::Strengthen {
            f: ACSetMorphism::from_initial(&k.v),
        },
    }
}

/// A random loop-free schedule from `Z` to `Z + V`: boxes are added one at
/// a time, each fed by one or two still-dangling wires of its input shape.
fn random_schedule(k: &Kit, rng: &mut SimRng) -> Schedule {
    let mut s = Schedule::new(
        "random",
        vec![Arc::clone(&k.z)],
        vec![Arc::clone(&k.z), Arc::clone(&k.v)],
    );
    let mut open: Vec<(Source, bool)> = vec![(Source::Input(0), false)];
    for _ in 0..rng.gen_range(1..=6) {
        if open.is_empty() {
            break;
        }
        let i = rng.gen_range(0..open.len());
        let (src, on_vertex) = open.swap_remove(i);
        let g = random_generator(k, rng, on_vertex);
        let outs = g.out_shapes();
        let b = s.add_box(format!("b{}", s.boxes.len()), g);
        s.wire(src, Target::Box { index: b, port: 0 });
        if let Some(j) = open.iter().position(|&(_, ov)| ov == on_vertex) {
            if rng.gen_bool(0.3) {
                let (other, _) = open.swap_remove(j);
                s.wire(other, Target::Box { index: b, port: 0 });
            }
        }
        for (port, shape) in outs.iter().enumerate() {
            open.push((Source::Box { index: b, port }, shape.total_parts() > 0));
        }
    }
    for (src, on_vertex) in open {
        s.wire(src, Target::Output(usize::from(on_vertex)));
    }
    s
}

pub fn compile_agreement() -> Outcome {
    let k = kit();
    let mut rng = rng_from_seed(0xC0);
    let world = graph(k.z.schema(), 3, &[(0, 1), (1, 1)]);
    let t0 = Trajectory::start(&world).expect("ground");
    let mut bad = Vec::new();
    let mut boxes = 0;
    let mut valued = 0;
    for case in 0..50 {
        let s = random_schedule(&k, &mut rng);
        boxes += s.boxes.len();
        let errs = typecheck(&s);
        if !errs.is_empty() {
            bad.push(format!("case {case}: {}", errs.join("; ")));
            continue;
        }
        for kind in EffectKind::ALL {
            let seed = rng.gen();
            let m = match compile_to_mealy(&s, kind, seed) {
                Ok(m) => m,
                Err(e) => {
                    bad.push(format!("case {case} {kind}: {e}"));
                    continue;
                }
            };
            let step = m
                .step(m.init(), Msg::new(0, t0.clone()))
                .map(|(_, y)| (y.port, y.value));
            let mut opts = RunOptions::new(kind, RunMode::Exact);
            opts.seed = seed;
            let ran = run(&s, &t0, &opts).map(|r| r.effect(kind));
            match ran {
                Ok(e) if step.approx_eq(&e, 1e-9, &|a, b| a == b) => {
                    valued += usize::from(!e.is_exception())
                }
                other => bad.push(format!(
                    "case {case} {kind}: machine {} vs run {}",
                    summary(&step),
                    match other {
                        Ok(e) => summary(&e),
                        Err(e) => e.to_string(),
                    }
                )),
            }
        }
    }
    Outcome::new(
        bad.is_empty(),
        match bad.first() {
            None => format!("50 schedules ({boxes} boxes) agree under all three monads, {valued}/150 runs without exception"),
            Some(b) => format!("{} disagreements, first {b}", bad.len()),
        },
    )
}

fn summary(e: &rewire::Effect<(usize, Trajectory)>) -> String {
    if e.is_exception() {
        return "exception".into();
    }
    let ports: Vec<String> = e
        .branches()
        .iter()
        .map(|(w, (p, t))| format!("{w:.3}@{p}/len{}", t.len()))
        .collect();
    ports.join(" ")
}

const GOLDEN: &str = include_str!("../data/wolf_sheep_50_seed1.txt");

fn wolf_sheep_cli(steps: usize) -> (bool, Vec<u8>, Duration) {
    let t = Instant::now();
    let out = Command::new(env!("CARGO_BIN_EXE_rewire"))
        .args([
            "example",
            "wolf-sheep",
            "--steps",
            &steps.to_string(),
            "--seed",
            "1",
        ])
        .output()
        .expect("binary runs");
    (out.status.success(), out.stdout, t.elapsed())
}

pub fn wolf_sheep() -> Outcome {
    let (ok_a, out_a, took_a) = wolf_sheep_cli(100);
    let (ok_b, out_b, took_b) = wolf_sheep_cli(100);
    let limit = Duration::from_secs(30);
    let fast = took_a < limit && took_b < limit;
    let same = out_a == out_b;
    let (ok_g, golden, _) = wolf_sheep_cli(50);
    let golden_ok = ok_g && golden == GOLDEN.as_bytes();

    let s = ws_schema();
    let p = Params::default();
    let sheep = animal_rules(&s, SHEEP, &p);
    let wolf = animal_rules(&s, WOLF, &p);
    let swapped = migrate_rules(&swap(&s), &sheep, SHEEP, WOLF).expect("migrates");
    let structural = swapped
        .all()
        .iter()
        .zip(wolf.all())
        .all(|(a, b)| a.name == b.name && a.same_structure(b));
    Outcome::new(
        ok_a && ok_b && fast && same && golden_ok && structural,
        format!(
            "100 steps in {:.2}s/{:.2}s, identical output {same}, 50-step golden {golden_ok}, swapped rules match {structural}",
            took_a.as_secs_f64(),
            took_b.as_secs_f64()
        ),
    )
}
