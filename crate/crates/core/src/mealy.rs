// SPDX-License-Identifier: Apache-2.0
//! Effectful Mealy machines over port-labelled alphabets.
//!
//! An alphabet is a finite coproduct of ports; a message is a port index
//! together with a payload. A machine has an initial state and a step
//! function `(state, message) -> Effect<(state, message)>`. Machines
//! compose sequentially, in parallel ([`Mealy::tensor`]), by copairing,
//! and with feedback ([`Mealy::trace`]). Feedback that fails to leave the
//! loop within the fuel bound is an exception.
//!
//! Behavior is compared through finite-depth unrollings
//! ([`behavior_tree`], [`behaviorally_equal`]).

use std::fmt;
use std::sync::Arc;

use crate::effect::{merge, Effect, EffectKind, WEIGHT_TOL};

/// Default number of feedback iterations allowed per trace step.
pub const DEFAULT_FUEL: u64 = 10_000;
/// Default cap on pending branches inside one trace step.
pub const DEFAULT_BRANCH_CAP: usize = 10_000;

/// Bounds for state leaves and message payloads.
pub trait Value: Clone + PartialEq + fmt::Debug + Send + Sync + 'static {}
impl<T: Clone + PartialEq + fmt::Debug + Send + Sync + 'static> Value for T {}

#[derive(Clone, Debug, PartialEq)]
pub struct Msg<V> {
    pub port: usize,
    pub value: V,
}

impl<V> Msg<V> {
    pub fn new(port: usize, value: V) -> Self {
        Msg { port, value }
    }
}

/// Machine states. Composites hold pairs of their components' states.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum State<S> {
    Unit,
    Leaf(S),
    Pair(Box<State<S>>, Box<State<S>>),
}

impl<S> State<S> {
    pub fn pair(a: State<S>, b: State<S>) -> Self {
        State::Pair(Box::new(a), Box::new(b))
    }

    /// The components of a pair.
    ///
    /// # Panics
    ///
    /// If the state is not a pair.
    pub fn split(&self) -> (&State<S>, &State<S>) {
        match self {
            State::Pair(a, b) => (a, b),
            _ => panic!("expected a pair state"),
        }
    }

    /// Leaf values, left to right.
    pub fn leaves(&self) -> Vec<&S> {
        let mut out = Vec::new();
        fn walk<'a, S>(s: &'a State<S>, out: &mut Vec<&'a S>) {
            match s {
                State::Unit => {}
                State::Leaf(x) => out.push(x),
                State::Pair(a, b) => {
                    walk(a, out);
                    walk(b, out);
                }
            }
        }
        walk(self, &mut out);
        out
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MealyError {
    #[error("alphabet mismatch: {left:?} vs {right:?}")]
    Alphabet {
        left: Vec<String>,
        right: Vec<String>,
    },
    #[error("machines use different monads ({0} and {1})")]
    Kind(EffectKind, EffectKind),
    #[error("port map sends input {input} to output {output}, out of range")]
    PortMap { input: usize, output: usize },
    #[error("cannot trace over {0} ports")]
    TraceWidth(usize),
    #[error("fuel must be positive")]
    NoFuel,
}

type StepFn<S, V> = dyn Fn(&State<S>, Msg<V>) -> Effect<(State<S>, Msg<V>)> + Send + Sync;

#[derive(Clone)]
pub struct Mealy<S, V> {
    kind: EffectKind,
    inputs: Vec<String>,
    outputs: Vec<String>,
    init: State<S>,
    states: Option<Vec<State<S>>>,
    step: Arc<StepFn<S, V>>,
}

impl<S: fmt::Debug, V> fmt::Debug for Mealy<S, V> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Mealy")
            .field("kind", &self.kind)
            .field("inputs", &self.inputs)
            .field("outputs", &self.outputs)
            .field("init", &self.init)
            .finish_non_exhaustive()
    }
}

fn labels(xs: &[&str]) -> Vec<String> {
    xs.iter().map(|s| s.to_string()).collect()
}

impl<S: Value, V: Value> Mealy<S, V> {
    pub fn new(
        kind: EffectKind,
        inputs: Vec<String>,
        outputs: Vec<String>,
        init: State<S>,
        step: impl Fn(&State<S>, Msg<V>) -> Effect<(State<S>, Msg<V>)> + Send + Sync + 'static,
    ) -> Self {
        Mealy {
            kind,
            inputs,
            outputs,
            init,
            states: None,
            step: Arc::new(step),
        }
    }

    /// A machine whose step is a plain function.
    pub fn pure_fn(
        kind: EffectKind,
        inputs: Vec<String>,
        outputs: Vec<String>,
        init: State<S>,
        f: impl Fn(&State<S>, Msg<V>) -> (State<S>, Msg<V>) + Send + Sync + 'static,
    ) -> Self {
        Mealy::new(kind, inputs, outputs, init, move |s, x| {
            Effect::pure(kind, f(s, x))
        })
    }

    /// Declares the (finite) state set.
    pub fn with_states(mut self, states: Vec<State<S>>) -> Self {
        self.states = Some(states);
        self
    }

    pub fn kind(&self) -> EffectKind {
        self.kind
    }

    pub fn inputs(&self) -> &[String] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[String] {
        &self.outputs
    }

    pub fn init(&self) -> &State<S> {
        &self.init
    }

    pub fn state_space(&self) -> Option<&[State<S>]> {
        self.states.as_deref()
    }

    pub fn step(&self, state: &State<S>, msg: Msg<V>) -> Effect<(State<S>, Msg<V>)> {
        assert!(
            msg.port < self.inputs.len(),
            "input port {} out of range",
            msg.port
        );
        (self.step)(state, msg)
    }

    /// Stateless pure machine sending input port `i` to output `map[i]`.
    /// Identities, symmetries, codiagonals and injections are all of this
    /// form.
    pub fn port_map(
        kind: EffectKind,
        inputs: Vec<String>,
        outputs: Vec<String>,
        map: Vec<usize>,
    ) -> Result<Self, MealyError> {
        if map.len() != inputs.len() {
            return Err(MealyError::PortMap {
                input: map.len(),
                output: inputs.len(),
            });
        }
        for (i, &o) in map.iter().enumerate() {
            if o >= outputs.len() {
                return Err(MealyError::PortMap {
                    input: i,
                    output: o,
                });
            }
        }
        let m = Mealy::pure_fn(kind, inputs, outputs, State::Unit, move |s, x| {
            (s.clone(), Msg::new(map[x.port], x.value))
        });
        Ok(m.with_states(vec![State::Unit]))
    }

    pub fn identity(kind: EffectKind, ports: Vec<String>) -> Self {
        let map = (0..ports.len()).collect();
        Mealy::port_map(kind, ports.clone(), ports, map).expect("identity map")
    }

    /// `A + B -> B + A`.
    pub fn symmetry(kind: EffectKind, a: Vec<String>, b: Vec<String>) -> Self {
        let (na, nb) = (a.len(), b.len());
        let inputs = [a.clone(), b.clone()].concat();
        let outputs = [b, a].concat();
        let map = (0..na).map(|i| nb + i).chain(0..nb).collect();
        Mealy::port_map(kind, inputs, outputs, map).expect("symmetry map")
    }

    /// `X + X -> X`.
    pub fn codiagonal(kind: EffectKind, x: Vec<String>) -> Self {
        let n = x.len();
        let map = (0..n).chain(0..n).collect();
        Mealy::port_map(kind, [x.clone(), x.clone()].concat(), x, map).expect("codiagonal map")
    }

    /// `A -> A + B` (left) or `B -> A + B` (right).
    pub fn injection(kind: EffectKind, a: Vec<String>, b: Vec<String>, right: bool) -> Self {
        let outputs = [a.clone(), b.clone()].concat();
        let (inputs, map) = if right {
            (b.clone(), (a.len()..a.len() + b.len()).collect())
        } else {
            (a.clone(), (0..a.len()).collect())
        };
        Mealy::port_map(kind, inputs, outputs, map).expect("injection map")
    }

    /// The machine on empty alphabets, unit for [`Mealy::tensor`].
    pub fn empty(kind: EffectKind) -> Self {
        Mealy::port_map(kind, Vec::new(), Vec::new(), Vec::new()).expect("empty map")
    }

    fn same_kind(&self, other: &Mealy<S, V>) -> Result<(), MealyError> {
        if self.kind != other.kind {
            return Err(MealyError::Kind(self.kind, other.kind));
        }
        Ok(())
    }

    fn product_states(&self, other: &Mealy<S, V>) -> Option<Vec<State<S>>> {
        let (a, b) = (self.states.as_ref()?, other.states.as_ref()?);
        Some(
            a.iter()
                .flat_map(|x| b.iter().map(move |y| State::pair(x.clone(), y.clone())))
                .collect(),
        )
    }

    /// Sequential composite `self ; next`.
    pub fn compose(&self, next: &Mealy<S, V>) -> Result<Mealy<S, V>, MealyError> {
        self.same_kind(next)?;
        if self.outputs != next.inputs {
            return Err(MealyError::Alphabet {
                left: self.outputs.clone(),
                right: next.inputs.clone(),
            });
        }
        let (f, g) = (Arc::clone(&self.step), Arc::clone(&next.step));
        let kind = self.kind;
        let mut m = Mealy::new(
            kind,
            self.inputs.clone(),
            next.outputs.clone(),
            State::pair(self.init.clone(), next.init.clone()),
            move |st, a| {
                let (s, t) = st.split();
                f(s, a).bind(|(s2, b)| {
                    g(t, b).bind(|(t2, c)| Effect::pure(kind, (State::pair(s2.clone(), t2), c)))
                })
            },
        );
        m.states = self.product_states(next);
        Ok(m)
    }

    /// Parallel composite on `A + C -> B + D`; only the addressed component
    /// steps.
    pub fn tensor(&self, other: &Mealy<S, V>) -> Result<Mealy<S, V>, MealyError> {
        self.same_kind(other)?;
        let (f, g) = (Arc::clone(&self.step), Arc::clone(&other.step));
        let (ni, no) = (self.inputs.len(), self.outputs.len());
        let mut m = Mealy::new(
            self.kind,
            [self.inputs.clone(), other.inputs.clone()].concat(),
            [self.outputs.clone(), other.outputs.clone()].concat(),
            State::pair(self.init.clone(), other.init.clone()),
            move |st, x| {
                let (s, t) = st.split();
                if x.port < ni {
                    f(s, x).map(|(s2, y)| (State::pair(s2, t.clone()), y))
                } else {
                    g(t, Msg::new(x.port - ni, x.value))
                        .map(|(t2, y)| (State::pair(s.clone(), t2), Msg::new(y.port + no, y.value)))
                }
            },
        );
        m.states = self.product_states(other);
        Ok(m)
    }

    /// `[f, g]: A + B -> Z` with a pair of states.
    pub fn copair(&self, other: &Mealy<S, V>) -> Result<Mealy<S, V>, MealyError> {
        self.same_kind(other)?;
        if self.outputs != other.outputs {
            return Err(MealyError::Alphabet {
                left: self.outputs.clone(),
                right: other.outputs.clone(),
            });
        }
        let (f, g) = (Arc::clone(&self.step), Arc::clone(&other.step));
        let ni = self.inputs.len();
        let mut m = Mealy::new(
            self.kind,
            [self.inputs.clone(), other.inputs.clone()].concat(),
            self.outputs.clone(),
            State::pair(self.init.clone(), other.init.clone()),
            move |st, x| {
                let (s, t) = st.split();
                if x.port < ni {
                    f(s, x).map(|(s2, y)| (State::pair(s2, t.clone()), y))
                } else {
                    g(t, Msg::new(x.port - ni, x.value))
                        .map(|(t2, y)| (State::pair(s.clone(), t2), y))
                }
            },
        );
        m.states = self.product_states(other);
        Ok(m)
    }

    /// Feeds the last `width` output ports back into the last `width` input
    /// ports. Each feedback consumes one unit of fuel; running out is an
    /// exception, as is exceeding `branch_cap` pending branches.
    pub fn trace_with(
        &self,
        width: usize,
        fuel: u64,
        branch_cap: usize,
    ) -> Result<Mealy<S, V>, MealyError> {
        if fuel == 0 {
            return Err(MealyError::NoFuel);
        }
        let (ni, no) = (self.inputs.len(), self.outputs.len());
        if width > ni || width > no || self.inputs[ni - width..] != self.outputs[no - width..] {
            return Err(MealyError::TraceWidth(width));
        }
        let (na, nb) = (ni - width, no - width);
        let f = Arc::clone(&self.step);
        let kind = self.kind;
        let mut m = Mealy::new(
            kind,
            self.inputs[..na].to_vec(),
            self.outputs[..nb].to_vec(),
            self.init.clone(),
            move |s, x| run_feedback(&*f, kind, na, nb, s, x, fuel, branch_cap),
        );
        m.states = self.states.clone();
        Ok(m)
    }

    pub fn trace(&self, width: usize, fuel: u64) -> Result<Mealy<S, V>, MealyError> {
        self.trace_with(width, fuel, DEFAULT_BRANCH_CAP)
    }
}

enum Frame<S, V> {
    Todo(f64, State<S>, Msg<V>, u64),
    Done(f64, State<S>, Msg<V>),
}

/// One traced step, depth-first so that branch order matches nested binds.
#[allow(clippy::too_many_arguments)]
fn run_feedback<S: Value, V: Value>(
    f: &StepFn<S, V>,
    kind: EffectKind,
    na: usize,
    nb: usize,
    s: &State<S>,
    x: Msg<V>,
    fuel: u64,
    cap: usize,
) -> Effect<(State<S>, Msg<V>)> {
    let mut stack = vec![Frame::Todo(1.0, s.clone(), x, fuel)];
    let mut done: Vec<(f64, (State<S>, Msg<V>))> = Vec::new();
    while let Some(frame) = stack.pop() {
        match frame {
            Frame::Done(w, s, y) => done.push((w, (s, y))),
            Frame::Todo(w, s, x, left) => {
                let e = f(&s, x);
                if e.is_exception() {
                    return Effect::Exception;
                }
                let mut next = Vec::new();
                for (v, (s2, y)) in e.into_branches() {
                    if y.port >= nb {
                        if left == 0 {
                            return Effect::Exception;
                        }
                        next.push(Frame::Todo(
                            w * v,
                            s2,
                            Msg::new(na + y.port - nb, y.value),
                            left - 1,
                        ));
                    } else {
                        next.push(Frame::Done(w * v, s2, y));
                    }
                }
                stack.extend(next.into_iter().rev());
                if stack.len() > cap {
                    return Effect::Exception;
                }
            }
        }
    }
    match kind {
        EffectKind::Maybe => {
            let (_, out) = done.pop().expect("maybe step yields one branch");
            Effect::Just(out)
        }
        EffectKind::ListE => Effect::List(done.into_iter().map(|(_, o)| o).collect()),
        EffectKind::DistE => {
            let mut out = Vec::new();
            for (w, o) in done {
                merge(&mut out, w, o);
            }
            Effect::Dist(out)
        }
    }
}

/// Finite unrolling: for each probe input, the effect of stepping, paired
/// with the output and the subtree at the next state.
#[derive(Clone, Debug, PartialEq)]
pub struct BehaviorTree<V> {
    pub children: Vec<Effect<(Msg<V>, BehaviorTree<V>)>>,
}

impl<V> BehaviorTree<V> {
    pub fn leaf() -> Self {
        BehaviorTree {
            children: Vec::new(),
        }
    }

    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }

    /// Structural equality with weights up to `tol`.
    pub fn approx_eq(&self, other: &BehaviorTree<V>, tol: f64) -> bool
    where
        V: PartialEq,
    {
        self.children.len() == other.children.len()
            && self.children.iter().zip(&other.children).all(|(a, b)| {
                a.approx_eq(b, tol, &|(x, s): &(Msg<V>, BehaviorTree<V>), (y, t)| {
                    x == y && s.approx_eq(t, tol)
                })
            })
    }
}

pub fn behavior_tree<S: Value, V: Value>(
    m: &Mealy<S, V>,
    depth: usize,
    probes: &[Msg<V>],
) -> BehaviorTree<V> {
    tree_from(m, &m.init, depth, probes)
}

/// The unrolling from an arbitrary state.
pub fn tree_from<S: Value, V: Value>(
    m: &Mealy<S, V>,
    state: &State<S>,
    depth: usize,
    probes: &[Msg<V>],
) -> BehaviorTree<V> {
    if depth == 0 {
        return BehaviorTree::leaf();
    }
    let children = probes
        .iter()
        .map(|x| {
            m.step(state, x.clone())
                .map(|(s2, y)| (y, tree_from(m, &s2, depth - 1, probes)))
        })
        .collect();
    BehaviorTree { children }
}

/// Every port with a unit payload.
pub fn unit_probes(m: &Mealy<impl Value, ()>) -> Vec<Msg<()>> {
    (0..m.inputs().len()).map(|p| Msg::new(p, ())).collect()
}

pub fn behaviorally_equal<S: Value, T: Value, V: Value>(
    a: &Mealy<S, V>,
    b: &Mealy<T, V>,
    depth: usize,
    probes: &[Msg<V>],
) -> Result<bool, MealyError> {
    if a.inputs != b.inputs {
        return Err(MealyError::Alphabet {
            left: a.inputs.clone(),
            right: b.inputs.clone(),
        });
    }
    if a.outputs != b.outputs {
        return Err(MealyError::Alphabet {
            left: a.outputs.clone(),
            right: b.outputs.clone(),
        });
    }
    Ok(behavior_tree(a, depth, probes).approx_eq(&behavior_tree(b, depth, probes), WEIGHT_TOL))
}

/// The trap toy machine on `{U, A} -> {U, A, C}` with states `T` (trap
/// set) and `N` (no trap), starting in `T`.
pub fn trap(kind: EffectKind) -> Mealy<char, ()> {
    Mealy::pure_fn(
        kind,
        labels(&["U", "A"]),
        labels(&["U", "A", "C"]),
        State::Leaf('T'),
        |s, x| {
            let (next, out) = match (s, x.port) {
                (State::Leaf('T'), 0) => ('T', 2),
                (State::Leaf('T'), _) => ('N', 1),
                (_, 0) => ('T', 0),
                (_, _) => ('N', 0),
            };
            (State::Leaf(next), Msg::new(out, ()))
        },
    )
    .with_states(vec![State::Leaf('T'), State::Leaf('N')])
}

/// Two traps in sequence; alert pieces leaving the first skip the second,
/// and captured pieces from both are merged.
pub fn trap2(kind: EffectKind) -> Mealy<char, ()> {
    let l = |xs: &[&str]| labels(xs);
    let route = Mealy::port_map(
        kind,
        l(&["U", "A", "C"]),
        l(&["U", "A", "A", "C"]),
        vec![0, 2, 3],
    )
    .expect("route");
    let middle = trap(kind)
        .tensor(&Mealy::identity(kind, l(&["A"])))
        .and_then(|m| m.tensor(&Mealy::identity(kind, l(&["C"]))))
        .expect("middle");
    let merge = Mealy::port_map(
        kind,
        l(&["U", "A", "C", "A", "C"]),
        l(&["U", "A", "C"]),
        vec![0, 1, 2, 1, 2],
    )
    .expect("merge");
    trap(kind)
        .compose(&route)
        .and_then(|m| m.compose(&middle))
        .and_then(|m| m.compose(&merge))
        .expect("trap2 wiring")
}
