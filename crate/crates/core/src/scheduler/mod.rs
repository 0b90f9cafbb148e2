// SPDX-License-Identifier: Apache-2.0
//! Schedules: wiring diagrams of generator boxes.
//!
//! Every port carries an agent shape. A wire runs from a source (an outer
//! input or a box outport) to a target (a box inport or an outer output).
//! Each source feeds exactly one target; several sources may feed the same
//! target. Feedback loops are allowed.
//!
//! [`run`] executes a schedule by passing a single token through the
//! diagram. [`compile_to_mealy`] builds the composite machine of a
//! loop-free schedule from the machine combinators.

mod compile;
mod run;
mod step;

use std::fmt;
use std::sync::Arc;

use crate::acset::ACSet;
use crate::expr::AttrExpr;
use crate::morphism::{is_natural, ACSetMorphism};
use crate::rewrite::RewriteRule;
use crate::schema::ScalarKind;
use crate::trajectory::Trajectory;

pub use compile::{compile_to_mealy, initial_states, CompileError};
pub use run::{run, Branch, LogEntry, RunError, RunMode, RunOptions, RunResult};
pub use step::{
    generator_step, query_readout, query_update_a, query_update_c, LocalState, QueryState,
    StepError,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FailMode {
    Exception,
    /// The empty list; only meaningful under `List + 1`.
    Empty,
}

/// A trajectory predicate choosing an outport, identified by name.
#[derive(Clone)]
pub struct NamedPredicate {
    pub name: String,
    pub f: Arc<dyn Fn(&Trajectory) -> usize + Send + Sync>,
}

impl PartialEq for NamedPredicate {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && Arc::ptr_eq(&self.f, &other.f)
    }
}

impl fmt::Debug for NamedPredicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "NamedPredicate({})", self.name)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Choice {
    /// Non-negative weights, one per outport.
    Weights(Vec<f64>),
    /// An expression over the current agent's variables. `true` selects
    /// port 0 and `false` port 1; an integer selects that port.
    Expr {
        arity: usize,
        expr: AttrExpr,
    },
    Custom {
        arity: usize,
        pred: NamedPredicate,
    },
}

impl Choice {
    pub fn arity(&self) -> usize {
        match self {
            Choice::Weights(w) => w.len(),
            Choice::Expr { arity, .. } | Choice::Custom { arity, .. } => *arity,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Generator {
    /// In `A`; out `B` on success, `A` when nothing was rewritten.
    Rewrite {
        rule: Arc<RewriteRule>,
    },
    /// `f: B -> A`. In `A`, out `B`; the new agent is `f ; agent`.
    Weaken {
        f: ACSetMorphism,
    },
    /// `f: A -> B`. In `A`, out `B`; the world is glued along `f`.
    Strengthen {
        f: ACSetMorphism,
    },
    /// Replaces the world. In `input`, out the domain of `agent`.
    Init {
        input: Arc<ACSet>,
        agent: ACSetMorphism,
    },
    Fail {
        shape: Arc<ACSet>,
        mode: FailMode,
    },
    ControlFlow {
        shape: Arc<ACSet>,
        choice: Choice,
    },
    /// Ins `(A, C)`, outs `(A, B, 0)`.
    Query {
        a: Arc<ACSet>,
        b: Arc<ACSet>,
        c: Arc<ACSet>,
    },
}

impl Generator {
    pub fn type_name(&self) -> &'static str {
        match self {
            Generator::Rewrite { .. } => "rewrite",
            Generator::Weaken { .. } => "weaken",
            Generator::Strengthen { .. } => "strengthen",
            Generator::Init { .. } => "init",
            Generator::Fail { .. } => "fail",
            Generator::ControlFlow { .. } => "control_flow",
            Generator::Query { .. } => "query",
        }
    }

    pub fn in_shapes(&self) -> Vec<Arc<ACSet>> {
        match self {
            Generator::Rewrite { rule } => vec![Arc::clone(rule.in_shape())],
            Generator::Weaken { f } => vec![Arc::clone(f.cod())],
            Generator::Strengthen { f } => vec![Arc::clone(f.dom())],
            Generator::Init { input, .. } => vec![Arc::clone(input)],
            Generator::Fail { shape, .. } | Generator::ControlFlow { shape, .. } => {
                vec![Arc::clone(shape)]
            }
            Generator::Query { a, c, .. } => vec![Arc::clone(a), Arc::clone(c)],
        }
    }

    pub fn out_shapes(&self) -> Vec<Arc<ACSet>> {
        match self {
            Generator::Rewrite { rule } => {
                vec![Arc::clone(rule.out_shape()), Arc::clone(rule.in_shape())]
            }
            Generator::Weaken { f } => vec![Arc::clone(f.dom())],
            Generator::Strengthen { f } => vec![Arc::clone(f.cod())],
            Generator::Init { agent, .. } => vec![Arc::clone(agent.dom())],
            Generator::Fail { .. } => Vec::new(),
            Generator::ControlFlow { shape, choice } => vec![Arc::clone(shape); choice.arity()],
            Generator::Query { a, b, .. } => vec![
                Arc::clone(a),
                Arc::clone(b),
                Arc::new(ACSet::empty_unchecked(Arc::clone(a.schema()))),
            ],
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoxSpec {
    pub name: String,
    pub generator: Generator,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Source {
    Input(usize),
    Box { index: usize, port: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Target {
    Output(usize),
    Box { index: usize, port: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Wire {
    pub src: Source,
    pub tgt: Target,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Schedule {
    pub name: String,
    pub inputs: Vec<Arc<ACSet>>,
    pub outputs: Vec<Arc<ACSet>>,
    pub boxes: Vec<BoxSpec>,
    pub wires: Vec<Wire>,
}

/// Port label used in machine alphabets.
pub(crate) fn shape_label(x: &ACSet) -> String {
    x.to_string()
}

impl Schedule {
    pub fn new(name: impl Into<String>, inputs: Vec<Arc<ACSet>>, outputs: Vec<Arc<ACSet>>) -> Self {
        Schedule {
            name: name.into(),
            inputs,
            outputs,
            boxes: Vec::new(),
            wires: Vec::new(),
        }
    }

    pub fn add_box(&mut self, name: impl Into<String>, generator: Generator) -> usize {
        self.boxes.push(BoxSpec {
            name: name.into(),
            generator,
        });
        self.boxes.len() - 1
    }

    pub fn wire(&mut self, src: Source, tgt: Target) {
        self.wires.push(Wire { src, tgt });
    }

    /// `box.port -> box'.port'`.
    pub fn connect(&mut self, from: (usize, usize), to: (usize, usize)) {
        self.wire(
            Source::Box {
                index: from.0,
                port: from.1,
            },
            Target::Box {
                index: to.0,
                port: to.1,
            },
        );
    }

    pub fn source_shape(&self, s: Source) -> Option<Arc<ACSet>> {
        match s {
            Source::Input(i) => self.inputs.get(i).cloned(),
            Source::Box { index, port } => self
                .boxes
                .get(index)?
                .generator
                .out_shapes()
                .get(port)
                .cloned(),
        }
    }

    pub fn target_shape(&self, t: Target) -> Option<Arc<ACSet>> {
        match t {
            Target::Output(i) => self.outputs.get(i).cloned(),
            Target::Box { index, port } => self
                .boxes
                .get(index)?
                .generator
                .in_shapes()
                .get(port)
                .cloned(),
        }
    }

    /// Every source of the diagram, in a fixed order.
    pub fn sources(&self) -> Vec<Source> {
        let mut out: Vec<Source> = (0..self.inputs.len()).map(Source::Input).collect();
        for (index, b) in self.boxes.iter().enumerate() {
            for port in 0..b.generator.out_shapes().len() {
                out.push(Source::Box { index, port });
            }
        }
        out
    }

    /// The target fed by `s`, if wired.
    pub fn target_of(&self, s: Source) -> Option<Target> {
        self.wires.iter().find(|w| w.src == s).map(|w| w.tgt)
    }
}

fn describe_source(s: &Schedule, src: Source) -> String {
    match src {
        Source::Input(i) => format!("input {i}"),
        Source::Box { index, port } => match s.boxes.get(index) {
            Some(b) => format!("{}.out{port}", b.name),
            None => format!("box #{index}.out{port}"),
        },
    }
}

fn describe_target(s: &Schedule, tgt: Target) -> String {
    match tgt {
        Target::Output(i) => format!("output {i}"),
        Target::Box { index, port } => match s.boxes.get(index) {
            Some(b) => format!("{}.in{port}", b.name),
            None => format!("box #{index}.in{port}"),
        },
    }
}

/// Violations of the well-typedness conditions; empty when the schedule
/// can run.
pub fn typecheck(s: &Schedule) -> Vec<String> {
    let mut out = Vec::new();
    let schema = s
        .inputs
        .first()
        .or(s.outputs.first())
        .map(|x| Arc::clone(x.schema()));
    for (i, b) in s.boxes.iter().enumerate() {
        let shapes = b
            .generator
            .in_shapes()
            .into_iter()
            .chain(b.generator.out_shapes());
        for x in shapes {
            if let Some(sc) = &schema {
                if !Arc::ptr_eq(sc, x.schema()) && **sc != **x.schema() {
                    out.push(format!("box {} ({i}) uses a different schema", b.name));
                    break;
                }
            }
        }
        match &b.generator {
            Generator::Weaken { f } | Generator::Strengthen { f } => {
                if !matches!(is_natural(f), Ok(true)) {
                    out.push(format!("box {}: morphism is not natural", b.name));
                }
            }
            Generator::Init { agent, .. } => {
                if !agent.cod().is_ground() {
                    out.push(format!("box {}: initial world is not ground", b.name));
                }
                if !matches!(is_natural(agent), Ok(true)) {
                    out.push(format!("box {}: initial agent is not natural", b.name));
                }
            }
            Generator::ControlFlow { shape, choice } => {
                if choice.arity() == 0 {
                    out.push(format!(
                        "box {}: control flow needs at least one outport",
                        b.name
                    ));
                }
                match choice {
                    Choice::Weights(ws) => {
                        if ws.iter().any(|w| !w.is_finite() || *w < 0.0)
                            || ws.iter().sum::<f64>() <= 0.0
                        {
                            out.push(format!(
                                "box {}: weights must be non-negative with a positive sum",
                                b.name
                            ));
                        }
                    }
                    Choice::Expr { expr, .. } => {
                        let vars = shape.vars();
                        let kind_of = |v: u32| {
                            if !vars.contains(&v) {
                                return None;
                            }
                            let sc = shape.schema();
                            (0..sc.attrs().len())
                                .find(|&a| {
                                    shape
                                        .attr_column(a)
                                        .contains(&crate::acset::AttrValue::Var(v))
                                })
                                .map(|a| sc.attr_kind(a))
                        };
                        match expr.infer_kind(&kind_of) {
                            Ok(ScalarKind::Bool) | Ok(ScalarKind::Int) => {}
                            Ok(k) => out.push(format!(
                                "box {}: predicate has kind {k}, expected bool or int",
                                b.name
                            )),
                            Err(e) => out.push(format!("box {}: predicate: {e}", b.name)),
                        }
                    }
                    Choice::Custom { .. } => {}
                }
            }
            _ => {}
        }
    }
    for w in &s.wires {
        let (src, tgt) = (s.source_shape(w.src), s.target_shape(w.tgt));
        match (src, tgt) {
            (None, _) => out.push(format!("wire from unknown {}", describe_source(s, w.src))),
            (_, None) => out.push(format!("wire to unknown {}", describe_target(s, w.tgt))),
            (Some(a), Some(b)) => {
                if a != b {
                    out.push(format!(
                        "wire {} -> {} joins different agent shapes {} and {}",
                        describe_source(s, w.src),
                        describe_target(s, w.tgt),
                        a,
                        b
                    ));
                }
            }
        }
    }
    for src in s.sources() {
        let n = s.wires.iter().filter(|w| w.src == src).count();
        if n != 1 {
            out.push(format!(
                "{} feeds {n} targets, expected exactly one",
                describe_source(s, src)
            ));
        }
    }
    out
}
