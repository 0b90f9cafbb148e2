// SPDX-License-Identifier: Apache-2.0
//! One step of a single generator box.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::acset::{ACSet, AttrValue, Scalar};
use crate::colimit::pushout;
use crate::effect::{sample_index, Effect, EffectKind, SimRng};
use crate::expr::eval_attr_expr;
use crate::homsearch::{homomorphisms, HomOptions};
use crate::morphism::ACSetMorphism;
use crate::partial::PartialMap;
use crate::rewrite::{apply_rule, find_matches};
use crate::trajectory::Trajectory;

use super::{Choice, FailMode, Generator};

/// Queued agents and the snapshot index the box was entered at. Queued
/// agents are kept pushed forward to snapshot `at`.
#[derive(Clone, Debug, PartialEq)]
pub struct QueryState {
    pub queue: Vec<ACSetMorphism>,
    pub entry: usize,
    pub at: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub enum LocalState {
    Stateless,
    /// `None` until the box is first entered through its `A` port.
    Query(Option<QueryState>),
    /// Generator for weighted choices under `Maybe`.
    Rng(SimRng),
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StepError {
    #[error("query box entered through C with no queued agents")]
    EmptyQueue,
    #[error("empty failure requires the list monad, not {0}")]
    EmptyFail(EffectKind),
    #[error("inport {0} out of range")]
    Port(usize),
    #[error("box state does not fit its generator")]
    State,
}

/// Entering through `A`: queue every `B -> last(traj)`, stamped with the
/// current length.
pub fn query_update_a(b: &Arc<ACSet>, traj: &Trajectory) -> QueryState {
    let queue = homomorphisms(b, traj.last(), &HomOptions::default()).unwrap_or_default();
    QueryState {
        queue,
        entry: traj.len(),
        at: traj.len(),
    }
}

/// Entering through `C`: drop the head, push the rest forward to the
/// current snapshot and discard those that no longer exist.
pub fn query_update_c(state: &QueryState, traj: &Trajectory) -> Result<QueryState, StepError> {
    let Some((_, rest)) = state.queue.split_first() else {
        return Err(StepError::EmptyQueue);
    };
    let queue = rest
        .iter()
        .filter_map(|b| traj.postcompose(b, state.at).ok().flatten())
        .collect();
    Ok(QueryState {
        queue,
        entry: state.entry,
        at: traj.len(),
    })
}

/// Exit port (0 = `A`, 1 = `B`, 2 = `0`) and extended trajectory. `None`
/// when a trajectory operation fails.
pub fn query_readout(state: &QueryState, traj: &Trajectory) -> Option<(usize, Trajectory)> {
    if let Some(head) = state.queue.first() {
        let b = traj.postcompose(head, state.at).ok()??;
        return Some((1, traj.extend(b).ok()?));
    }
    let original = traj.get(state.entry).ok()?;
    match traj.postcompose(original, state.entry).ok()? {
        Some(a) => Some((0, traj.extend(a).ok()?)),
        None => Some((
            2,
            traj.extend(ACSetMorphism::from_initial(traj.last())).ok()?,
        )),
    }
}

type Out = Effect<(LocalState, usize, Trajectory)>;

/// Steps generator `g` on a trajectory arriving at `inport`. Failures of
/// the rewriting machinery surface as exceptions; only misuse of the
/// schedule is an error.
pub fn generator_step(
    g: &Generator,
    state: &LocalState,
    inport: usize,
    traj: &Trajectory,
    kind: EffectKind,
) -> Result<Out, StepError> {
    let n_in = g.in_shapes().len();
    if inport >= n_in {
        return Err(StepError::Port(inport));
    }
    let pure = |st: LocalState, port: usize, t: Trajectory| Effect::pure(kind, (st, port, t));
    Ok(match g {
        Generator::Rewrite { rule } => {
            let Ok(ms) = find_matches(rule, traj.last(), traj.agent()) else {
                return Ok(Effect::Exception);
            };
            if ms.is_empty() {
                return Ok(match traj.extend(traj.agent().clone()) {
                    Ok(t) => pure(state.clone(), 1, t),
                    Err(_) => Effect::Exception,
                });
            }
            let apply = |m: &ACSetMorphism| -> Option<Trajectory> {
                let out = apply_rule(rule, m).ok()?;
                traj.extend_with(out.map, out.agent).ok()
            };
            let chosen: Vec<&ACSetMorphism> = match kind {
                EffectKind::Maybe => vec![&ms[0]],
                _ => ms.iter().collect(),
            };
            let mut results = Vec::with_capacity(chosen.len());
            for m in chosen {
                match apply(m) {
                    Some(t) => results.push((state.clone(), 0, t)),
                    None => return Ok(Effect::Exception),
                }
            }
            match kind {
                EffectKind::Maybe => Effect::Just(results.pop().expect("one result")),
                EffectKind::ListE => Effect::List(results),
                EffectKind::DistE => {
                    let w = 1.0 / results.len() as f64;
                    Effect::dist(results.into_iter().map(|r| (w, r)).collect())
                        .expect("uniform weights")
                }
            }
        }
        Generator::Weaken { f } => match f
            .compose(traj.agent())
            .ok()
            .and_then(|a| traj.extend(a).ok())
        {
            Some(t) => pure(state.clone(), 0, t),
            None => Effect::Exception,
        },
        Generator::Strengthen { f } => {
            let extended = pushout(f, traj.agent()).ok().and_then(|po| {
                let pm = PartialMap::from_morphism(&po.right);
                traj.extend_with(pm, po.left).ok()
            });
            match extended {
                Some(t) => pure(state.clone(), 0, t),
                None => Effect::Exception,
            }
        }
        Generator::Init { agent, .. } => {
            let pm = PartialMap::empty(traj.last(), agent.cod());
            match traj.extend_with(pm, agent.clone()) {
                Ok(t) => pure(state.clone(), 0, t),
                Err(_) => Effect::Exception,
            }
        }
        Generator::Fail { mode, .. } => match mode {
            FailMode::Exception => Effect::Exception,
            FailMode::Empty => Effect::empty(kind).map_err(|_| StepError::EmptyFail(kind))?,
        },
        Generator::ControlFlow { choice, .. } => control_flow(choice, state, traj, kind)?,
        Generator::Query { b, .. } => {
            let LocalState::Query(qs) = state else {
                return Err(StepError::State);
            };
            let next = if inport == 0 {
                query_update_a(b, traj)
            } else {
                query_update_c(qs.as_ref().ok_or(StepError::EmptyQueue)?, traj)?
            };
            match query_readout(&next, traj) {
                Some((port, t)) => pure(LocalState::Query(Some(next)), port, t),
                None => Effect::Exception,
            }
        }
    })
}

fn control_flow(
    choice: &Choice,
    state: &LocalState,
    traj: &Trajectory,
    kind: EffectKind,
) -> Result<Out, StepError> {
    let pure = |st: LocalState, port: usize| Effect::pure(kind, (st, port, traj.clone()));
    Ok(match choice {
        Choice::Weights(ws) => match kind {
            EffectKind::Maybe => {
                let LocalState::Rng(rng) = state else {
                    return Err(StepError::State);
                };
                let mut rng = rng.clone();
                let port = sample_index(ws.iter().copied(), &mut rng);
                pure(LocalState::Rng(rng), port)
            }
            EffectKind::ListE => Effect::List(
                ws.iter()
                    .enumerate()
                    .filter(|(_, &w)| w > 0.0)
                    .map(|(p, _)| (state.clone(), p, traj.clone()))
                    .collect(),
            ),
            EffectKind::DistE => Effect::dist(
                ws.iter()
                    .enumerate()
                    .map(|(p, &w)| (w, (state.clone(), p, traj.clone())))
                    .collect(),
            )
            .unwrap_or(Effect::Exception),
        },
        Choice::Expr { arity, expr } => {
            let binding: BTreeMap<u32, Scalar> = traj
                .agent()
                .var_assignment()
                .iter()
                .filter_map(|(&v, val)| match val {
                    AttrValue::Concrete(c) => Some((v, c.clone())),
                    AttrValue::Var(_) => None,
                })
                .collect();
            let port = match eval_attr_expr(expr, &binding) {
                Ok(Scalar::Bool(true)) => Some(0),
                Ok(Scalar::Bool(false)) => Some(1),
                Ok(Scalar::Int(k)) => usize::try_from(k).ok(),
                _ => None,
            };
            match port {
                Some(p) if p < *arity => pure(state.clone(), p),
                _ => Effect::Exception,
            }
        }
        Choice::Custom { arity, pred } => {
            let p = (pred.f)(traj);
            if p < *arity {
                pure(state.clone(), p)
            } else {
                Effect::Exception
            }
        }
    })
}
