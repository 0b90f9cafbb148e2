// SPDX-License-Identifier: Apache-2.0
//! Loop-free schedules as composite Mealy machines.

use std::collections::BTreeSet;

use crate::effect::{rng_from_seed, Effect, EffectKind};
use crate::mealy::{Mealy, MealyError, Msg, State};
use crate::trajectory::Trajectory;

use super::step::{generator_step, LocalState};
use super::{shape_label, typecheck, Choice, Generator, Schedule, Source, Target};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CompileError {
    #[error("schedule does not typecheck: {}", .0.join("; "))]
    Typecheck(Vec<String>),
    #[error("schedule has a feedback loop through box {0}")]
    Cyclic(String),
    #[error(transparent)]
    Mealy(#[from] MealyError),
}

/// Initial local state of every box. Weighted choice boxes get their own
/// generator, seeded from `seed` and the box index.
pub fn initial_states(s: &Schedule, seed: u64) -> Vec<LocalState> {
    s.boxes
        .iter()
        .enumerate()
        .map(|(i, b)| match &b.generator {
            Generator::Query { .. } => LocalState::Query(None),
            Generator::ControlFlow {
                choice: Choice::Weights(_),
                ..
            } => LocalState::Rng(rng_from_seed(
                seed ^ (i as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15),
            )),
            _ => LocalState::Stateless,
        })
        .collect()
}

type Machine = Mealy<LocalState, Trajectory>;

fn box_machine(g: &Generator, init: LocalState, kind: EffectKind) -> Machine {
    let inputs = g.in_shapes().iter().map(|x| shape_label(x)).collect();
    let outputs = g.out_shapes().iter().map(|x| shape_label(x)).collect();
    let g = g.clone();
    Mealy::new(kind, inputs, outputs, State::Leaf(init), move |st, x| {
        let State::Leaf(ls) = st else {
            return Effect::Exception;
        };
        match generator_step(&g, ls, x.port, &x.value, kind) {
            Ok(e) => e.map(|(ls2, p, t)| (State::Leaf(ls2), Msg::new(p, t))),
            Err(_) => Effect::Exception,
        }
    })
}

/// Boxes in dependency order, smallest index first among the ready ones.
fn topo_order(s: &Schedule) -> Result<Vec<usize>, CompileError> {
    let n = s.boxes.len();
    let mut indeg = vec![0usize; n];
    let mut edges: Vec<Vec<usize>> = vec![Vec::new(); n];
    for w in &s.wires {
        if let (Source::Box { index: a, .. }, Target::Box { index: b, .. }) = (w.src, w.tgt) {
            edges[a].push(b);
            indeg[b] += 1;
        }
    }
    let mut ready: BTreeSet<usize> = (0..n).filter(|&i| indeg[i] == 0).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(i) = ready.pop_first() {
        order.push(i);
        for &j in &edges[i] {
            indeg[j] -= 1;
            if indeg[j] == 0 {
                ready.insert(j);
            }
        }
    }
    if let Some(i) = (0..n).find(|&i| indeg[i] > 0) {
        return Err(CompileError::Cyclic(s.boxes[i].name.clone()));
    }
    Ok(order)
}

/// Builds the machine of a loop-free schedule. Boxes are added in
/// dependency order: at each stage the live wires are routed (merging
/// where several feed one inport) into the next box tensored with
/// identities on the wires that pass it by.
pub fn compile_to_mealy(
    s: &Schedule,
    kind: EffectKind,
    seed: u64,
) -> Result<Machine, CompileError> {
    let errs = typecheck(s);
    if !errs.is_empty() {
        return Err(CompileError::Typecheck(errs));
    }
    let order = topo_order(s)?;
    let states = initial_states(s, seed);
    let label = |src: Source| shape_label(&s.source_shape(src).expect("typechecked"));
    let mut bundle: Vec<Source> = (0..s.inputs.len()).map(Source::Input).collect();
    let mut machine: Machine = Mealy::identity(kind, bundle.iter().map(|&x| label(x)).collect());
    for i in order {
        let g = &s.boxes[i].generator;
        let n_in = g.in_shapes().len();
        let others: Vec<Source> = bundle
            .iter()
            .copied()
            .filter(|&x| !matches!(s.target_of(x), Some(Target::Box { index, .. }) if index == i))
            .collect();
        let map = bundle
            .iter()
            .map(|&x| match s.target_of(x) {
                Some(Target::Box { index, port }) if index == i => port,
                _ => n_in + others.iter().position(|&o| o == x).expect("listed"),
            })
            .collect();
        let in_labels: Vec<String> = g.in_shapes().iter().map(|x| shape_label(x)).collect();
        let other_labels: Vec<String> = others.iter().map(|&x| label(x)).collect();
        let route = Mealy::port_map(
            kind,
            bundle.iter().map(|&x| label(x)).collect(),
            [in_labels, other_labels.clone()].concat(),
            map,
        )?;
        let stage =
            box_machine(g, states[i].clone(), kind).tensor(&Mealy::identity(kind, other_labels))?;
        machine = machine.compose(&route)?.compose(&stage)?;
        bundle = (0..g.out_shapes().len())
            .map(|port| Source::Box { index: i, port })
            .chain(others)
            .collect();
    }
    let map = bundle
        .iter()
        .map(|&x| match s.target_of(x) {
            Some(Target::Output(p)) => p,
            _ => unreachable!("every remaining source feeds an outer output"),
        })
        .collect();
    let exit = Mealy::port_map(
        kind,
        bundle.iter().map(|&x| label(x)).collect(),
        s.outputs.iter().map(|x| shape_label(x)).collect(),
        map,
    )?;
    Ok(machine.compose(&exit)?)
}
