// SPDX-License-Identifier: Apache-2.0
//! A predator-prey model on a toroidal grid.
//!
//! Vertices carry a grass counter (0 means grown, otherwise the number of
//! steps until it regrows). Each vertex has four outgoing edges labelled
//! `N`, `S`, `E`, `W`. Sheep and wolves sit on vertices, face a direction and
//! carry an energy level.
//!
//! One time step runs every sheep, then every wolf, then every vertex. An
//! animal turns left, turns right or keeps its heading (uniformly), moves
//! one edge forward paying energy, eats, starves at zero energy, and
//! otherwise reproduces with a fixed probability, splitting its energy
//! between parent and child.
//!
//! The wolf rules for turning, moving, starving and reproducing are not
//! written separately: they are the sheep rules pulled back along the
//! schema functor [`swap`] that exchanges the two animal tables.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::sync::Arc;

use rand::{Rng, RngCore};

use crate::acset::{ACSet, AttrValue, Scalar};
use crate::effect::{rng_from_seed, EffectKind};
use crate::expr::parse_attr_expr;
use crate::migration::{MigrationError, SchemaFunctor};
use crate::morphism::ACSetMorphism;
use crate::rewrite::{RewriteRule, RuleOptions};
use crate::scheduler::{
    run, Choice, Generator, RunError, RunMode, RunOptions, Schedule, Source, Target,
};
use crate::schema::{ScalarKind, Schema};
use crate::trajectory::Trajectory;

pub const DIRS: [&str; 4] = ["N", "E", "S", "W"];

/// Model parameters. The energy and probability defaults follow the
/// classic NetLogo wolf-sheep predation model; the grid size and initial
/// populations are local choices. On a 10x10 torus grass regrows too slowly
/// to sustain both species for long, so runs usually end with few animals.
#[derive(Clone, Debug, PartialEq)]
pub struct Params {
    /// Side length of the torus.
    pub size: usize,
    pub sheep: usize,
    pub wolves: usize,
    pub move_cost: i64,
    pub sheep_gain: i64,
    pub wolf_gain: i64,
    pub sheep_reproduce: f64,
    pub wolf_reproduce: f64,
    /// Steps for eaten grass to grow back.
    pub regrow: i64,
    /// Fuel for a single time step.
    pub fuel: u64,
}

impl Default for Params {
    fn default() -> Self {
        Params {
            size: 10,
            sheep: 50,
            wolves: 4,
            move_cost: 1,
            sheep_gain: 4,
            wolf_gain: 20,
            sheep_reproduce: 0.04,
            wolf_reproduce: 0.05,
            regrow: 30,
            fuel: 1_000_000,
        }
    }
}

/// Column names of one animal table.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Animal {
    pub name: &'static str,
    pub table: &'static str,
    pub pos: &'static str,
    pub dir: &'static str,
    pub eng: &'static str,
}

pub const SHEEP: Animal = Animal {
    name: "sheep",
    table: "Sheep",
    pos: "s_pos",
    dir: "s_dir",
    eng: "s_eng",
};

pub const WOLF: Animal = Animal {
    name: "wolf",
    table: "Wolf",
    pos: "w_pos",
    dir: "w_dir",
    eng: "w_eng",
};

const V: usize = 0;
const E: usize = 1;
const WOLF_T: usize = 2;
const SHEEP_T: usize = 3;

pub fn schema() -> Arc<Schema> {
    let s = Schema::build(
        &["V", "E", "Wolf", "Sheep"],
        &[("Dir", ScalarKind::String), ("Nat", ScalarKind::Int)],
        &[
            ("src", "E", "V"),
            ("tgt", "E", "V"),
            ("w_pos", "Wolf", "V"),
            ("s_pos", "Sheep", "V"),
        ],
        &[
            ("dir", "E", "Dir"),
            ("grass", "V", "Nat"),
            ("w_dir", "Wolf", "Dir"),
            ("s_dir", "Sheep", "Dir"),
            ("w_eng", "Wolf", "Nat"),
            ("s_eng", "Sheep", "Nat"),
        ],
    );
    Arc::new(s.expect("model schema is valid"))
}

/// The involution exchanging wolves and sheep.
pub fn swap(s: &Arc<Schema>) -> SchemaFunctor {
    let m = |pairs: &[(&str, &str)]| {
        pairs
            .iter()
            .map(|(a, b)| (a.to_string(), b.to_string()))
            .collect::<BTreeMap<_, _>>()
    };
    SchemaFunctor::new(
        "swap",
        Arc::clone(s),
        Arc::clone(s),
        m(&[("V", "V"), ("E", "E"), ("Wolf", "Sheep"), ("Sheep", "Wolf")]),
        m(&[("Dir", "Dir"), ("Nat", "Nat")]),
        m(&[
            ("src", "src"),
            ("tgt", "tgt"),
            ("w_pos", "s_pos"),
            ("s_pos", "w_pos"),
        ]),
        m(&[
            ("dir", "dir"),
            ("grass", "grass"),
            ("w_dir", "s_dir"),
            ("s_dir", "w_dir"),
            ("w_eng", "s_eng"),
            ("s_eng", "w_eng"),
        ]),
    )
    .expect("swap is a functor")
}

fn var(n: u32) -> AttrValue {
    AttrValue::Var(n)
}

/// Small builder for the fixed patterns below.
struct Pat(ACSet);

impl Pat {
    fn new(s: &Arc<Schema>) -> Self {
        Pat(ACSet::new(Arc::clone(s)).expect("valid schema"))
    }

    fn v(&mut self, grass: AttrValue) -> usize {
        self.0
            .add_part("V", &[], &[("grass", grass)])
            .expect("vertex")
    }

    fn e(&mut self, src: usize, tgt: usize, dir: AttrValue) -> usize {
        self.0
            .add_part("E", &[("src", src), ("tgt", tgt)], &[("dir", dir)])
            .expect("edge")
    }

    fn animal(&mut self, a: Animal, pos: usize, dir: AttrValue, eng: AttrValue) -> usize {
        self.0
            .add_part(a.table, &[(a.pos, pos)], &[(a.dir, dir), (a.eng, eng)])
            .expect("animal")
    }

    fn done(self) -> Arc<ACSet> {
        Arc::new(self.0)
    }
}

/// Components listing vertices, edges, wolves and sheep.
fn comps(v: &[usize], e: &[usize], w: &[usize], s: &[usize]) -> Vec<Vec<usize>> {
    vec![v.to_vec(), e.to_vec(), w.to_vec(), s.to_vec()]
}

/// Components for a single animal kind.
fn acomps(a: Animal, v: &[usize], e: &[usize], xs: &[usize]) -> Vec<Vec<usize>> {
    if a.table == "Wolf" {
        comps(v, e, xs, &[])
    } else {
        comps(v, e, &[], xs)
    }
}

fn hom(dom: &Arc<ACSet>, cod: &Arc<ACSet>, c: Vec<Vec<usize>>) -> ACSetMorphism {
    ACSetMorphism::inferred(Arc::clone(dom), Arc::clone(cod), c).expect("pattern morphism")
}

fn exprs(pairs: &[(u32, &str)]) -> RuleOptions {
    RuleOptions {
        exprs: pairs
            .iter()
            .map(|(k, src)| (*k, parse_attr_expr(src).expect("model expression")))
            .collect(),
        ..RuleOptions::default()
    }
}

/// The agent shape of an animal: its vertex (grass `$0`) and itself
/// (direction `$1`, energy `$2`).
pub fn animal_shape(s: &Arc<Schema>, a: Animal) -> Arc<ACSet> {
    let mut p = Pat::new(s);
    let v = p.v(var(0));
    p.animal(a, v, var(1), var(2));
    p.done()
}

/// The agent shape of a vertex.
pub fn vertex_shape(s: &Arc<Schema>) -> Arc<ACSet> {
    let mut p = Pat::new(s);
    p.v(var(0));
    p.done()
}

pub fn empty_shape(s: &Arc<Schema>) -> Arc<ACSet> {
    Arc::new(ACSet::new(Arc::clone(s)).expect("valid schema"))
}

/// Rules that only touch one animal kind.
#[derive(Clone, Debug)]
pub struct AnimalRules {
    pub rotate_left: RewriteRule,
    pub rotate_right: RewriteRule,
    pub forward: RewriteRule,
    pub starve: RewriteRule,
    pub reproduce: RewriteRule,
}

impl AnimalRules {
    pub fn all(&self) -> [&RewriteRule; 5] {
        [
            &self.rotate_left,
            &self.rotate_right,
            &self.forward,
            &self.starve,
            &self.reproduce,
        ]
    }
}

fn relabel(dir: &str) -> String {
    let turn = |to: [&str; 4]| {
        format!(
            "if($1 == \"N\", \"{}\", if($1 == \"E\", \"{}\", if($1 == \"S\", \"{}\", \"{}\")))",
            to[0], to[1], to[2], to[3]
        )
    };
    match dir {
        "left" => turn(["W", "N", "E", "S"]),
        _ => turn(["E", "S", "W", "N"]),
    }
}

/// Writes the per-animal rules directly over the given animal table.
pub fn animal_rules(s: &Arc<Schema>, a: Animal, p: &Params) -> AnimalRules {
    let shape = animal_shape(s, a);
    let id = ACSetMorphism::identity(&shape);
    let rotate = |side: &str| {
        let opts = exprs(&[(1, &relabel(side))]);
        RewriteRule::new(
            format!("{}_rotate_{side}", a.name),
            id.clone(),
            id.clone(),
            id.clone(),
            id.clone(),
            opts,
        )
        .expect("rotate rule")
    };

    // L: the animal at v0 facing along an edge v0 -> v1.
    let mut lp = Pat::new(s);
    let v0 = lp.v(var(0));
    let v1 = lp.v(var(3));
    let e = lp.e(v0, v1, var(1));
    lp.animal(a, v0, var(1), var(2));
    let l = lp.done();
    let mut kp = Pat::new(s);
    kp.v(var(0));
    kp.v(var(3));
    kp.e(0, 1, var(1));
    let k = kp.done();
    let mut rp = Pat::new(s);
    rp.v(var(0));
    rp.v(var(3));
    rp.e(0, 1, var(1));
    rp.animal(a, 1, var(1), var(4));
    let r = rp.done();
    let forward = RewriteRule::new(
        format!("{}_forward", a.name),
        hom(&k, &l, acomps(a, &[0, 1], &[e], &[])),
        hom(&k, &r, acomps(a, &[0, 1], &[0], &[])),
        hom(&shape, &l, acomps(a, &[0], &[], &[0])),
        hom(&shape, &r, acomps(a, &[1], &[], &[0])),
        exprs(&[(4, &format!("max($2 - {}, 0)", p.move_cost))]),
    )
    .expect("forward rule");

    let mut lp = Pat::new(s);
    let v = lp.v(var(0));
    lp.animal(a, v, var(1), AttrValue::int(0));
    let l = lp.done();
    let k = vertex_shape(s);
    let starve = RewriteRule::new(
        format!("{}_starve", a.name),
        hom(&k, &l, acomps(a, &[0], &[], &[])),
        ACSetMorphism::identity(&k),
        hom(&shape, &l, acomps(a, &[0], &[], &[0])),
        ACSetMorphism::from_initial(&k),
        RuleOptions::default(),
    )
    .expect("starve rule");

    let mut rp = Pat::new(s);
    let v = rp.v(var(0));
    rp.animal(a, v, var(1), var(5));
    rp.animal(a, v, var(1), var(6));
    let r = rp.done();
    let reproduce = RewriteRule::new(
        format!("{}_reproduce", a.name),
        id.clone(),
        hom(&shape, &r, acomps(a, &[0], &[], &[0])),
        id.clone(),
        hom(&shape, &r, acomps(a, &[0], &[], &[0])),
        exprs(&[(5, "$2 / 2"), (6, "$2 / 2")]),
    )
    .expect("reproduce rule");

    AnimalRules {
        rotate_left: rotate("left"),
        rotate_right: rotate("right"),
        forward,
        starve,
        reproduce,
    }
}

/// Migrates every rule along `f`, renaming the animal prefix.
pub fn migrate_rules(
    f: &SchemaFunctor,
    rules: &AnimalRules,
    from: Animal,
    to: Animal,
) -> Result<AnimalRules, MigrationError> {
    let m = |r: &RewriteRule| -> Result<RewriteRule, MigrationError> {
        let mut out = f.migrate_rule(r)?;
        out.name = out.name.replacen(from.name, to.name, 1);
        Ok(out)
    };
    Ok(AnimalRules {
        rotate_left: m(&rules.rotate_left)?,
        rotate_right: m(&rules.rotate_right)?,
        forward: m(&rules.forward)?,
        starve: m(&rules.starve)?,
        reproduce: m(&rules.reproduce)?,
    })
}

/// A sheep on grown grass eats it.
pub fn sheep_eat(s: &Arc<Schema>, p: &Params) -> RewriteRule {
    let shape = animal_shape(s, SHEEP);
    let mut lp = Pat::new(s);
    let v = lp.v(AttrValue::int(0));
    lp.animal(SHEEP, v, var(1), var(2));
    let l = lp.done();
    let c = comps(&[0], &[], &[], &[0]);
    RewriteRule::new(
        "sheep_eat",
        hom(&shape, &l, c.clone()),
        ACSetMorphism::identity(&shape),
        hom(&shape, &l, c),
        ACSetMorphism::identity(&shape),
        exprs(&[
            (0, &p.regrow.to_string()),
            (2, &format!("$2 + {}", p.sheep_gain)),
        ]),
    )
    .expect("sheep eat rule")
}

/// A wolf eats one sheep on its vertex.
pub fn wolf_eat(s: &Arc<Schema>, p: &Params) -> RewriteRule {
    let shape = animal_shape(s, WOLF);
    let mut lp = Pat::new(s);
    let v = lp.v(var(0));
    lp.animal(WOLF, v, var(1), var(2));
    lp.animal(SHEEP, v, var(3), var(4));
    let l = lp.done();
    let c = comps(&[0], &[], &[0], &[]);
    RewriteRule::new(
        "wolf_eat",
        hom(&shape, &l, c.clone()),
        ACSetMorphism::identity(&shape),
        hom(&shape, &l, c),
        ACSetMorphism::identity(&shape),
        exprs(&[(2, &format!("$2 + {}", p.wolf_gain))]),
    )
    .expect("wolf eat rule")
}

pub fn grass_grow(s: &Arc<Schema>) -> RewriteRule {
    let g = vertex_shape(s);
    let id = ACSetMorphism::identity(&g);
    RewriteRule::new(
        "grass_grow",
        id.clone(),
        id.clone(),
        id.clone(),
        id,
        exprs(&[(0, "$0 - 1")]),
    )
    .expect("grass rule")
}

fn rw(rule: &RewriteRule) -> Generator {
    Generator::Rewrite {
        rule: Arc::new(rule.clone()),
    }
}

/// Adds the loop over all animals of one kind; returns the query box.
fn add_animal_loop(
    s: &mut Schedule,
    rules: &AnimalRules,
    eat: &RewriteRule,
    reproduce_p: f64,
    name: &str,
) -> usize {
    let sch = Arc::clone(eat.in_shape().schema());
    let shape = Arc::clone(rules.forward.in_shape());
    let z = empty_shape(&sch);
    let q = s.add_box(
        format!("{name}_each"),
        Generator::Query {
            a: Arc::clone(&z),
            b: Arc::clone(&shape),
            c: Arc::clone(&z),
        },
    );
    let turn = s.add_box(
        format!("{name}_turn"),
        Generator::ControlFlow {
            shape: Arc::clone(&shape),
            choice: Choice::Weights(vec![1.0, 1.0, 1.0]),
        },
    );
    let left = s.add_box(rules.rotate_left.name.clone(), rw(&rules.rotate_left));
    let right = s.add_box(rules.rotate_right.name.clone(), rw(&rules.rotate_right));
    let fwd = s.add_box(rules.forward.name.clone(), rw(&rules.forward));
    let eat_b = s.add_box(eat.name.clone(), rw(eat));
    let starve = s.add_box(rules.starve.name.clone(), rw(&rules.starve));
    let coin = s.add_box(
        format!("{name}_coin"),
        Generator::ControlFlow {
            shape: Arc::clone(&shape),
            choice: Choice::Weights(vec![reproduce_p, 1.0 - reproduce_p]),
        },
    );
    let repro = s.add_box(rules.reproduce.name.clone(), rw(&rules.reproduce));
    let done = s.add_box(
        format!("{name}_done"),
        Generator::Weaken {
            f: ACSetMorphism::from_initial(&shape),
        },
    );
    s.connect((q, 1), (turn, 0));
    s.connect((turn, 0), (left, 0));
    s.connect((turn, 1), (right, 0));
    s.connect((turn, 2), (fwd, 0));
    for b in [left, right] {
        s.connect((b, 0), (fwd, 0));
        s.connect((b, 1), (fwd, 0));
    }
    s.connect((fwd, 0), (eat_b, 0));
    s.connect((fwd, 1), (eat_b, 0));
    s.connect((eat_b, 0), (starve, 0));
    s.connect((eat_b, 1), (starve, 0));
    s.connect((starve, 0), (q, 1));
    s.connect((starve, 1), (coin, 0));
    s.connect((coin, 0), (repro, 0));
    s.connect((coin, 1), (done, 0));
    s.connect((repro, 0), (done, 0));
    s.connect((repro, 1), (done, 0));
    s.connect((done, 0), (q, 1));
    q
}

fn add_grass_loop(s: &mut Schedule, sch: &Arc<Schema>) -> usize {
    let g = vertex_shape(sch);
    let z = empty_shape(sch);
    let q = s.add_box(
        "grass_each",
        Generator::Query {
            a: Arc::clone(&z),
            b: Arc::clone(&g),
            c: z,
        },
    );
    let growing = s.add_box(
        "grass_growing",
        Generator::ControlFlow {
            shape: Arc::clone(&g),
            choice: Choice::Expr {
                arity: 2,
                expr: parse_attr_expr("$0 > 0").expect("grass predicate"),
            },
        },
    );
    let grow = s.add_box("grass_grow", rw(&grass_grow(sch)));
    let next = s.add_box(
        "grass_next",
        Generator::Weaken {
            f: ACSetMorphism::from_initial(&g),
        },
    );
    s.connect((q, 1), (growing, 0));
    s.connect((growing, 0), (grow, 0));
    s.connect((growing, 1), (next, 0));
    s.connect((grow, 0), (next, 0));
    s.connect((grow, 1), (next, 0));
    s.connect((next, 0), (q, 1));
    q
}

/// Everything needed to run the model.
#[derive(Clone, Debug)]
pub struct Model {
    pub params: Params,
    pub schema: Arc<Schema>,
    pub sheep_rules: AnimalRules,
    pub wolf_rules: AnimalRules,
    pub sheep_eat: RewriteRule,
    pub wolf_eat: RewriteRule,
    pub step: Schedule,
}

impl Model {
    pub fn new(params: Params) -> Model {
        let sch = schema();
        let sheep_rules = animal_rules(&sch, SHEEP, &params);
        let wolf_rules = migrate_rules(&swap(&sch), &sheep_rules, SHEEP, WOLF)
            .expect("swap migrates the sheep rules");
        let se = sheep_eat(&sch, &params);
        let we = wolf_eat(&sch, &params);
        let z = empty_shape(&sch);
        let mut step = Schedule::new("wolf_sheep_step", vec![Arc::clone(&z)], vec![z]);
        let qs = add_animal_loop(
            &mut step,
            &sheep_rules,
            &se,
            params.sheep_reproduce,
            "sheep",
        );
        let qw = add_animal_loop(&mut step, &wolf_rules, &we, params.wolf_reproduce, "wolf");
        let qg = add_grass_loop(&mut step, &sch);
        step.wire(Source::Input(0), Target::Box { index: qs, port: 0 });
        for (from, to) in [
            (qs, Target::Box { index: qw, port: 0 }),
            (qw, Target::Box { index: qg, port: 0 }),
            (qg, Target::Output(0)),
        ] {
            for port in [0, 2] {
                step.wire(Source::Box { index: from, port }, to);
            }
        }
        Model {
            params,
            schema: sch,
            sheep_rules,
            wolf_rules,
            sheep_eat: se,
            wolf_eat: we,
            step,
        }
    }

    /// A random world: grass half grown, animals on random vertices.
    pub fn initial_world(&self, rng: &mut impl Rng) -> Arc<ACSet> {
        let p = &self.params;
        let n = p.size;
        let mut w = Pat::new(&self.schema);
        for _ in 0..n * n {
            let g = if rng.gen_bool(0.5) {
                0
            } else {
                rng.gen_range(1..=p.regrow)
            };
            w.v(AttrValue::int(g));
        }
        for r in 0..n {
            for c in 0..n {
                let here = r * n + c;
                let up = ((r + n - 1) % n) * n + c;
                let down = ((r + 1) % n) * n + c;
                let east = r * n + (c + 1) % n;
                let west = r * n + (c + n - 1) % n;
                for (d, to) in DIRS.iter().zip([up, east, down, west]) {
                    w.e(here, to, AttrValue::str(d));
                }
            }
        }
        for (a, count, gain) in [
            (SHEEP, p.sheep, p.sheep_gain),
            (WOLF, p.wolves, p.wolf_gain),
        ] {
            for _ in 0..count {
                let v = rng.gen_range(0..n * n);
                let d = DIRS[rng.gen_range(0..4)];
                let e = rng.gen_range(1..=2 * gain);
                w.animal(a, v, AttrValue::str(d), AttrValue::int(e));
            }
        }
        w.done()
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error("step {step}: {source}")]
    Run { step: usize, source: RunError },
    #[error("step {step}: the step program raised an exception")]
    Exception { step: usize },
    #[error("step {step}: invariant violated: {message}")]
    Invariant { step: usize, message: String },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StepSummary {
    pub step: usize,
    pub sheep: usize,
    pub wolves: usize,
    /// Vertices with grown grass.
    pub grass: usize,
    /// Successful rewrites per rule name.
    pub events: BTreeMap<String, usize>,
    pub fuel_used: u64,
}

#[derive(Clone, Debug)]
pub struct Simulation {
    pub initial: StepSummary,
    pub steps: Vec<StepSummary>,
    pub world: Arc<ACSet>,
}

fn int_column(w: &ACSet, attr: &str) -> Vec<i64> {
    let a = w.schema().attr_index(attr).expect("model attribute");
    w.attr_column(a)
        .iter()
        .map(|v| match v {
            AttrValue::Concrete(Scalar::Int(i)) => *i,
            _ => -1,
        })
        .collect()
}

/// Checks the world-level invariants: a ground, valid instance with
/// non-negative energies and grass counters.
pub fn check_world(w: &ACSet) -> Result<(), String> {
    w.validate().map_err(|e| e.to_string())?;
    if !w.is_ground() {
        return Err("world has variables".into());
    }
    for attr in ["grass", "s_eng", "w_eng"] {
        if let Some(i) = int_column(w, attr).iter().position(|&x| x < 0) {
            return Err(format!("{attr} of part {i} is negative"));
        }
    }
    if w.nparts(E) != 4 * w.nparts(V) {
        return Err("edges were created or deleted".into());
    }
    Ok(())
}

fn census(step: usize, w: &ACSet) -> StepSummary {
    StepSummary {
        step,
        sheep: w.nparts(SHEEP_T),
        wolves: w.nparts(WOLF_T),
        grass: int_column(w, "grass").iter().filter(|&&g| g == 0).count(),
        events: BTreeMap::new(),
        fuel_used: 0,
    }
}

/// Runs `steps` time steps from a world drawn with `seed`.
pub fn simulate(model: &Model, steps: usize, seed: u64) -> Result<Simulation, SimError> {
    let mut rng = rng_from_seed(seed);
    let mut world = model.initial_world(&mut rng);
    check_world(&world).map_err(|message| SimError::Invariant { step: 0, message })?;
    let initial = census(0, &world);
    let rewrite_boxes: Vec<bool> = model
        .step
        .boxes
        .iter()
        .map(|b| matches!(b.generator, Generator::Rewrite { .. }))
        .collect();
    let mut out = Vec::with_capacity(steps);
    let mut prev = initial.clone();
    for step in 1..=steps {
        let mut opts = RunOptions::new(EffectKind::Maybe, RunMode::Sample);
        opts.seed = rng.next_u64();
        opts.fuel = model.params.fuel;
        let t0 = Trajectory::start(&world).expect("ground world");
        let res = run(&model.step, &t0, &opts).map_err(|source| SimError::Run { step, source })?;
        let branch = &res.branches[0];
        let Some((_, t)) = &branch.outcome else {
            return Err(SimError::Exception { step });
        };
        world = Arc::clone(t.last());
        check_world(&world).map_err(|message| SimError::Invariant { step, message })?;
        let mut cur = census(step, &world);
        for entry in &branch.log {
            if rewrite_boxes[entry.box_index] && entry.port == Some(0) {
                *cur.events.entry(entry.box_name.clone()).or_default() += 1;
            }
        }
        cur.fuel_used = branch.fuel_used;
        let ev = |k: &str| cur.events.get(k).copied().unwrap_or(0) as i64;
        let d_sheep = cur.sheep as i64 - prev.sheep as i64;
        let d_wolves = cur.wolves as i64 - prev.wolves as i64;
        if d_sheep != ev("sheep_reproduce") - ev("sheep_starve") - ev("wolf_eat") {
            return Err(SimError::Invariant {
                step,
                message: format!(
                    "sheep count changed by {d_sheep}, which the logged rewrites do not explain"
                ),
            });
        }
        if d_wolves != ev("wolf_reproduce") - ev("wolf_starve") {
            return Err(SimError::Invariant {
                step,
                message: format!(
                    "wolf count changed by {d_wolves}, which the logged rewrites do not explain"
                ),
            });
        }
        prev = cur.clone();
        out.push(cur);
    }
    Ok(Simulation {
        initial,
        steps: out,
        world,
    })
}

impl Simulation {
    /// One line per step; identical for identical seeds and parameters.
    pub fn table(&self) -> String {
        let mut s = String::from("step sheep wolves grass fuel\n");
        for r in std::iter::once(&self.initial).chain(&self.steps) {
            let _ = writeln!(
                s,
                "{} {} {} {} {}",
                r.step, r.sheep, r.wolves, r.grass, r.fuel_used
            );
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn swapped_sheep_rules_are_the_wolf_rules() {
        let p = Params::default();
        let s = schema();
        let by_hand = animal_rules(&s, WOLF, &p);
        let model = Model::new(p);
        for (a, b) in by_hand.all().into_iter().zip(model.wolf_rules.all()) {
            assert!(a.same_structure(b), "{}", a.name);
            assert_eq!(a.name, b.name);
        }
    }

    #[test]
    fn step_schedule_typechecks() {
        let m = Model::new(Params::default());
        assert_eq!(crate::scheduler::typecheck(&m.step), Vec::<String>::new());
    }

    #[test]
    fn initial_world_is_a_torus() {
        let m = Model::new(Params::default());
        let w = m.initial_world(&mut rng_from_seed(3));
        check_world(&w).unwrap();
        assert_eq!(w.count("V"), 100);
        assert_eq!(w.count("E"), 400);
        let src = w.hom_column(0);
        for v in 0..100 {
            assert_eq!(src.iter().filter(|&&x| x == v).count(), 4);
        }
    }

    #[test]
    fn short_run_is_reproducible() {
        let m = Model::new(Params::default());
        let a = simulate(&m, 5, 7).unwrap();
        let b = simulate(&m, 5, 7).unwrap();
        assert_eq!(a.table(), b.table());
        assert_eq!(a.steps.len(), 5);
    }
}
