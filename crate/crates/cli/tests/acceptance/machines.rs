// SPDX-License-Identifier: Apache-2.0
//! Mealy machine criteria: the trap examples, the category and coproduct
//! laws, and the traced-axiom probes.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rewire::effect::{rng_from_seed, SimRng};
use rewire::mealy::{behavior_tree, trap, trap2, unit_probes, BehaviorTree, Msg, State};
use rewire::{Effect, EffectKind, Mealy};

use crate::Outcome;

type M = Mealy<u8, ()>;

fn step(m: &Mealy<char, ()>, s: &State<char>, port: usize) -> Option<(State<char>, usize)> {
    match m.step(s, Msg::new(port, ())) {
        Effect::Just((s2, y)) => Some((s2, y.port)),
        _ => None,
    }
}

fn node(children: Vec<(usize, BehaviorTree<()>)>) -> BehaviorTree<()> {
    BehaviorTree {
        children: children
            .into_iter()
            .map(|(out, t)| Effect::Just((Msg::new(out, ()), t)))
            .collect(),
    }
}

pub fn trap_fidelity() -> Outcome {
    const U: usize = 0;
    const A: usize = 1;
    const C: usize = 2;
    let m = trap(EffectKind::Maybe);
    let (t, n) = (State::Leaf('T'), State::Leaf('N'));
    let expected = [
        (&t, U, C, &t),
        (&t, A, A, &n),
        (&n, U, U, &t),
        (&n, A, U, &n),
    ];
    let mut wrong = Vec::new();
    for (s, x, y, s2) in expected {
        if step(&m, s, x) != Some((s2.clone(), y)) {
            wrong.push(format!("{s:?}/{x}"));
        }
    }
    // From T: U is captured and the trap stays; A stays alert and disarms it.
    let leaf = BehaviorTree::leaf;
    let at_t = || node(vec![(C, leaf()), (A, leaf())]);
    let at_n = || node(vec![(U, leaf()), (U, leaf())]);
    let want = node(vec![(C, at_t()), (A, at_n())]);
    let got = behavior_tree(&m, 2, &unit_probes(&m));
    let tree_ok = got == want;
    Outcome::new(
        wrong.is_empty() && tree_ok,
        format!(
            "{}/4 transitions, depth-2 tree {}",
            4 - wrong.len(),
            if tree_ok { "matches" } else { "differs" }
        ),
    )
}

pub fn trap2_composite() -> Outcome {
    let m = trap2(EffectKind::Maybe);
    let size = m.state_space().map_or(0, |s| s.len());
    let init: Vec<char> = m.init().leaves().into_iter().copied().collect();
    let after = step(&m, m.init(), 1);
    let second_untouched = after.as_ref().is_some_and(|(s, y)| {
        *y == 1 && s.leaves().last() == m.init().leaves().last() && s.leaves()[0] == &'N'
    });
    Outcome::new(
        size == 4 && init == ['T', 'T'] && second_untouched,
        format!(
            "state space {size}, init {init:?}, A at (T,T) exits on port {:?} in state {:?}",
            after.as_ref().map(|a| a.1),
            after.as_ref().map(|a| a.0.leaves())
        ),
    )
}

/// A random finite machine, kept as data so failures can be printed.
#[derive(Clone)]
struct Table {
    inputs: Vec<String>,
    outputs: Vec<String>,
    /// `table[state][inport]`, each branch a weight, next state and outport.
    table: Vec<Vec<Option<Vec<(f64, u8, usize)>>>>,
}

impl fmt::Debug for Table {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?} -> {:?}", self.inputs, self.outputs)?;
        for (s, row) in self.table.iter().enumerate() {
            for (x, e) in row.iter().enumerate() {
                match e {
                    None => write!(f, "; {s}/{x}: throw")?,
                    Some(bs) => {
                        let bs: Vec<String> = bs
                            .iter()
                            .map(|(w, s2, y)| format!("{w:.2}:{s2}/{y}"))
                            .collect();
                        write!(f, "; {s}/{x}: {}", bs.join(" "))?
                    }
                }
            }
        }
        Ok(())
    }
}

impl Table {
    fn size(&self) -> usize {
        self.table.len() * (self.inputs.len() + self.outputs.len())
    }

    fn machine(&self, kind: EffectKind) -> M {
        let table = Arc::new(self.table.clone());
        Mealy::new(
            kind,
            self.inputs.clone(),
            self.outputs.clone(),
            State::Leaf(0),
            move |s, x| {
                let State::Leaf(k) = s else {
                    unreachable!("leaf machine")
                };
                let Some(bs) = &table[*k as usize][x.port] else {
                    return Effect::Exception;
                };
                let out = |&(_, s2, y): &(f64, u8, usize)| (State::Leaf(s2), Msg::new(y, ()));
                match kind {
                    EffectKind::Maybe => Effect::Just(out(&bs[0])),
                    EffectKind::ListE => Effect::List(bs.iter().map(out).collect()),
                    EffectKind::DistE => Effect::dist(bs.iter().map(|b| (b.0, out(b))).collect())
                        .expect("positive weights"),
                }
            },
        )
    }
}

fn ports(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i}")).collect()
}

/// `feedback` trailing outports lie on a loop. At most one branch of any
/// transition may use them, and `single` forbids branching altogether, so
/// traced runs grow linearly with fuel.
fn random_spec(
    rng: &mut SimRng,
    kind: EffectKind,
    inputs: Vec<String>,
    outputs: Vec<String>,
    feedback: usize,
    single: bool,
) -> Table {
    let states = rng.gen_range(1..=3u8);
    let no = outputs.len();
    let table = (0..states)
        .map(|_| {
            (0..inputs.len())
                .map(|_| {
                    if rng.gen_bool(0.04) {
                        return None;
                    }
                    let n = match kind {
                        EffectKind::Maybe => 1,
                        _ if single => 1,
                        _ if rng.gen_bool(0.15) => 2,
                        EffectKind::ListE if rng.gen_bool(0.05) => 0,
                        _ => 1,
                    };
                    let mut looped = false;
                    let mut bs = Vec::new();
                    for _ in 0..n {
                        let mut y = rng.gen_range(0..no);
                        if y >= no - feedback {
                            if looped {
                                y = rng.gen_range(0..no - feedback);
                            }
                            looped = true;
                        }
                        bs.push((rng.gen_range(0.05..1.0), rng.gen_range(0..states), y));
                    }
                    Some(bs)
                })
                .collect()
        })
        .collect();
    Table {
        inputs,
        outputs,
        table,
    }
}

fn first_diff(a: &M, b: &M, max_depth: usize) -> Option<usize> {
    let probes = unit_probes(a);
    if behavior_tree(a, max_depth, &probes).approx_eq(&behavior_tree(b, max_depth, &probes), 1e-9) {
        return None;
    }
    (1..=max_depth)
        .find(|&d| !behavior_tree(a, d, &probes).approx_eq(&behavior_tree(b, d, &probes), 1e-9))
}

fn width(rng: &mut SimRng) -> usize {
    rng.gen_range(1..=2)
}

type Law = fn(EffectKind, &mut SimRng) -> (Vec<Table>, M, M);

fn law_assoc(kind: EffectKind, rng: &mut SimRng) -> (Vec<Table>, M, M) {
    let (a, b, c, d) = (width(rng), width(rng), width(rng), width(rng));
    let f = random_spec(rng, kind, ports("a", a), ports("b", b), 0, false);
    let g = random_spec(rng, kind, ports("b", b), ports("c", c), 0, false);
    let h = random_spec(rng, kind, ports("c", c), ports("d", d), 0, false);
    let (fm, gm, hm) = (f.machine(kind), g.machine(kind), h.machine(kind));
    let l = fm.compose(&gm).and_then(|x| x.compose(&hm)).unwrap();
    let r = fm.compose(&gm.compose(&hm).unwrap()).unwrap();
    (vec![f, g, h], l, r)
}

fn law_unit(kind: EffectKind, rng: &mut SimRng) -> (Vec<Table>, M, M) {
    let (a, b) = (width(rng), width(rng));
    let f = random_spec(rng, kind, ports("a", a), ports("b", b), 0, false);
    let fm = f.machine(kind);
    let wrapped = Mealy::identity(kind, ports("a", a))
        .compose(&fm)
        .and_then(|x| x.compose(&Mealy::identity(kind, ports("b", b))))
        .unwrap();
    (vec![f], wrapped, fm)
}

fn law_tensor(kind: EffectKind, rng: &mut SimRng) -> (Vec<Table>, M, M) {
    let w: Vec<usize> = (0..6).map(|_| width(rng)).collect();
    let f = random_spec(rng, kind, ports("a", w[0]), ports("b", w[1]), 0, false);
    let g = random_spec(rng, kind, ports("b", w[1]), ports("c", w[2]), 0, false);
    let h = random_spec(rng, kind, ports("d", w[3]), ports("e", w[4]), 0, false);
    let k = random_spec(rng, kind, ports("e", w[4]), ports("f", w[5]), 0, false);
    let [fm, gm, hm, km] = [&f, &g, &h, &k].map(|s| s.machine(kind));
    let l = fm
        .compose(&gm)
        .unwrap()
        .tensor(&hm.compose(&km).unwrap())
        .unwrap();
    let r = fm
        .tensor(&hm)
        .unwrap()
        .compose(&gm.tensor(&km).unwrap())
        .unwrap();
    (vec![f, g, h, k], l, r)
}

fn law_tensor_unit(kind: EffectKind, rng: &mut SimRng) -> (Vec<Table>, M, M) {
    let (a, b) = (width(rng), width(rng));
    let ids = Mealy::identity(kind, ports("a", a))
        .tensor(&Mealy::identity(kind, ports("b", b)))
        .unwrap();
    let id = Mealy::identity(kind, [ports("a", a), ports("b", b)].concat());
    (Vec::new(), ids, id)
}

fn copair_case(kind: EffectKind, rng: &mut SimRng, right: bool) -> (Vec<Table>, M, M) {
    let (a, b, z) = (width(rng), width(rng), width(rng));
    let f = random_spec(rng, kind, ports("a", a), ports("z", z), 0, false);
    let g = random_spec(rng, kind, ports("b", b), ports("z", z), 0, false);
    let (fm, gm) = (f.machine(kind), g.machine(kind));
    let inj = Mealy::injection(kind, ports("a", a), ports("b", b), right);
    let l = inj.compose(&fm.copair(&gm).unwrap()).unwrap();
    (vec![f, g], l, if right { gm } else { fm })
}

fn law_copair_left(kind: EffectKind, rng: &mut SimRng) -> (Vec<Table>, M, M) {
    copair_case(kind, rng, false)
}

fn law_copair_right(kind: EffectKind, rng: &mut SimRng) -> (Vec<Table>, M, M) {
    copair_case(kind, rng, true)
}

const FUEL: u64 = 50;

fn law_yanking(kind: EffectKind, rng: &mut SimRng) -> (Vec<Table>, M, M) {
    let u = ports("u", width(rng));
    let l = Mealy::symmetry(kind, u.clone(), u.clone())
        .trace(u.len(), FUEL)
        .unwrap();
    (Vec::new(), l, Mealy::identity(kind, u))
}

fn law_tightening(kind: EffectKind, rng: &mut SimRng) -> (Vec<Table>, M, M) {
    let (a0, a, b, b0, u) = (width(rng), width(rng), width(rng), width(rng), width(rng));
    let f = random_spec(
        rng,
        kind,
        [ports("a", a), ports("u", u)].concat(),
        [ports("b", b), ports("u", u)].concat(),
        u,
        false,
    );
    let g = random_spec(rng, kind, ports("x", a0), ports("a", a), 0, false);
    let h = random_spec(rng, kind, ports("b", b), ports("y", b0), 0, false);
    let [fm, gm, hm] = [&f, &g, &h].map(|s| s.machine(kind));
    let id_u = Mealy::identity(kind, ports("u", u));
    let l = gm
        .tensor(&id_u)
        .and_then(|x| x.compose(&fm))
        .and_then(|x| x.compose(&hm.tensor(&id_u)?))
        .and_then(|x| x.trace(u, FUEL))
        .unwrap();
    let r = gm
        .compose(&fm.trace(u, FUEL).unwrap())
        .and_then(|x| x.compose(&hm))
        .unwrap();
    (vec![f, g, h], l, r)
}

fn law_sliding(kind: EffectKind, rng: &mut SimRng) -> (Vec<Table>, M, M) {
    let (a, b, u, v) = (width(rng), width(rng), width(rng), width(rng));
    let f = random_spec(
        rng,
        kind,
        [ports("a", a), ports("u", u)].concat(),
        [ports("b", b), ports("v", v)].concat(),
        v,
        false,
    );
    let k = random_spec(rng, kind, ports("v", v), ports("u", u), 0, true);
    let (fm, km) = (f.machine(kind), k.machine(kind));
    let l = fm
        .compose(&Mealy::identity(kind, ports("b", b)).tensor(&km).unwrap())
        .and_then(|x| x.trace(u, FUEL))
        .unwrap();
    let r = Mealy::identity(kind, ports("a", a))
        .tensor(&km)
        .and_then(|x| x.compose(&fm))
        .and_then(|x| x.trace(v, FUEL))
        .unwrap();
    (vec![f, k], l, r)
}

fn law_vanishing(kind: EffectKind, rng: &mut SimRng) -> (Vec<Table>, M, M) {
    let (a, b, u, v) = (width(rng), width(rng), width(rng), width(rng));
    let ins = [ports("a", a), ports("u", u), ports("v", v)].concat();
    let outs = [ports("b", b), ports("u", u), ports("v", v)].concat();
    let f = random_spec(rng, kind, ins, outs, u + v, false);
    let fm = f.machine(kind);
    let l = fm.trace(u + v, FUEL).unwrap();
    let r = fm.trace(v, FUEL).and_then(|x| x.trace(u, FUEL)).unwrap();
    (vec![f], l, r)
}

fn law_vanishing_zero(kind: EffectKind, rng: &mut SimRng) -> (Vec<Table>, M, M) {
    let (a, b) = (width(rng), width(rng));
    let f = random_spec(rng, kind, ports("a", a), ports("b", b), 0, false);
    let fm = f.machine(kind);
    (vec![f], fm.trace(0, FUEL).unwrap(), fm)
}

fn law_superposing(kind: EffectKind, rng: &mut SimRng) -> (Vec<Table>, M, M) {
    let (a, b, c, d, u) = (width(rng), width(rng), width(rng), width(rng), width(rng));
    let f = random_spec(
        rng,
        kind,
        [ports("a", a), ports("u", u)].concat(),
        [ports("b", b), ports("u", u)].concat(),
        u,
        false,
    );
    let g = random_spec(rng, kind, ports("c", c), ports("d", d), 0, false);
    let (fm, gm) = (f.machine(kind), g.machine(kind));
    let l = fm.trace(u, FUEL).unwrap().tensor(&gm).unwrap();
    let p_in = Mealy::port_map(
        kind,
        [ports("a", a), ports("c", c), ports("u", u)].concat(),
        [ports("a", a), ports("u", u), ports("c", c)].concat(),
        (0..a)
            .chain((0..c).map(|i| a + u + i))
            .chain((0..u).map(|i| a + i))
            .collect(),
    )
    .unwrap();
    let p_out = Mealy::port_map(
        kind,
        [ports("b", b), ports("u", u), ports("d", d)].concat(),
        [ports("b", b), ports("d", d), ports("u", u)].concat(),
        (0..b)
            .chain((0..u).map(|i| b + d + i))
            .chain((0..d).map(|i| b + i))
            .collect(),
    )
    .unwrap();
    let r = p_in
        .compose(&fm.tensor(&gm).unwrap())
        .and_then(|x| x.compose(&p_out))
        .and_then(|x| x.trace(u, FUEL))
        .unwrap();
    (vec![f, g], l, r)
}

struct Tally {
    law: &'static str,
    passed: [usize; 3],
    worst: Option<(EffectKind, usize, Vec<Table>)>,
}

fn check_laws(laws: &[(&'static str, Law)], depth: usize, cases: usize, salt: u64) -> Vec<Tally> {
    let mut out = Vec::new();
    for (li, (law, f)) in laws.iter().enumerate() {
        let mut tally = Tally {
            law,
            passed: [0; 3],
            worst: None,
        };
        for (ki, kind) in EffectKind::ALL.into_iter().enumerate() {
            for case in 0..cases {
                let mut rng =
                    rng_from_seed(salt ^ ((li as u64) << 32) ^ ((ki as u64) << 24) ^ case as u64);
                let (specs, l, r) = f(kind, &mut rng);
                match first_diff(&l, &r, depth) {
                    None => tally.passed[ki] += 1,
                    Some(d) => {
                        let size: usize = specs.iter().map(Table::size).sum();
                        let smaller = tally.worst.as_ref().is_none_or(|(_, wd, ws)| {
                            (d, size) < (*wd, ws.iter().map(Table::size).sum())
                        });
                        if smaller {
                            tally.worst = Some((kind, d, specs));
                        }
                    }
                }
            }
        }
        out.push(tally);
    }
    out
}

fn report(tallies: &[Tally], cases: usize) {
    println!(
        "    {:<18} {:>6} {:>6} {:>6}",
        "law", "maybe", "list", "dist"
    );
    for t in tallies {
        println!(
            "    {:<18} {:>6} {:>6} {:>6}",
            t.law,
            format!("{}/{cases}", t.passed[0]),
            format!("{}/{cases}", t.passed[1]),
            format!("{}/{cases}", t.passed[2])
        );
    }
    for t in tallies {
        if let Some((kind, depth, specs)) = &t.worst {
            println!(
                "    {} counterexample under {kind}, first differs at depth {depth}:",
                t.law
            );
            for s in specs {
                println!("      {s:?}");
            }
        }
    }
}

pub fn category_laws() -> Outcome {
    let laws: [(&str, Law); 6] = [
        ("associativity", law_assoc),
        ("unit", law_unit),
        ("tensor functorial", law_tensor),
        ("tensor identity", law_tensor_unit),
        ("copair left", law_copair_left),
        ("copair right", law_copair_right),
    ];
    let tallies = check_laws(&laws, 6, 100, 0xCA7);
    let failures: usize = tallies
        .iter()
        .map(|t| 300 - t.passed.iter().sum::<usize>())
        .sum();
    if failures > 0 {
        report(&tallies, 100);
    }
    Outcome::new(
        failures == 0,
        format!(
            "{} laws x 3 kinds x 100 machines, {failures} failures",
            laws.len()
        ),
    )
}

pub fn traced_probes() -> Outcome {
    let laws: [(&str, Law); 6] = [
        ("yanking", law_yanking),
        ("tightening", law_tightening),
        ("sliding", law_sliding),
        ("vanishing", law_vanishing),
        ("vanishing (zero)", law_vanishing_zero),
        ("superposing", law_superposing),
    ];
    let tallies = check_laws(&laws, 5, 100, 0x7ACE);
    report(&tallies, 100);
    let yanking = tallies[0].passed == [100; 3];
    let failing: Vec<&str> = tallies
        .iter()
        .filter(|t| t.passed != [100; 3])
        .map(|t| t.law)
        .collect();
    Outcome::new(
        yanking,
        if failing.is_empty() {
            "all probes hold".to_string()
        } else {
            format!("probes with failures: {}", failing.join(", "))
        },
    )
}
