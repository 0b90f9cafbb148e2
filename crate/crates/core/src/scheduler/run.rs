// SPDX-License-Identifier: Apache-2.0
//! Token-passing interpreter.
//!
//! A configuration is the local state of every box, the target the token
//! is heading to, and the trajectory it carries. Each box step costs one
//! unit of fuel. Under branching effects the whole configuration forks.
//! Exact mode explores every branch depth-first in creation order; sample
//! mode follows one path, drawing from distributions with a generator
//! seeded from the run seed.

use crate::effect::{merge, rng_from_seed, sample_index, Effect, EffectKind};
use crate::mealy::{DEFAULT_BRANCH_CAP, DEFAULT_FUEL};
use crate::trajectory::Trajectory;

use super::step::{generator_step, LocalState, StepError};
use super::{compile::initial_states, typecheck, FailMode, Generator, Schedule, Source, Target};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RunMode {
    Exact,
    Sample,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunOptions {
    pub kind: EffectKind,
    pub mode: RunMode,
    pub seed: u64,
    /// Box steps allowed per branch.
    pub fuel: u64,
    /// Pending branches allowed in exact mode.
    pub branch_cap: usize,
    /// Outer input port the trajectory enters through.
    pub input: usize,
}

impl RunOptions {
    pub fn new(kind: EffectKind, mode: RunMode) -> Self {
        RunOptions {
            kind,
            mode,
            seed: 0,
            fuel: DEFAULT_FUEL,
            branch_cap: DEFAULT_BRANCH_CAP,
            input: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LogEntry {
    pub box_index: usize,
    pub box_name: String,
    /// `None` when the step raised an exception.
    pub port: Option<usize>,
    /// Part counts of the world after the step.
    pub part_counts: Vec<usize>,
    /// Weight of the branch taken at this step.
    pub weight: f64,
}

#[derive(Clone, Debug)]
pub struct Branch {
    pub weight: f64,
    /// Outer output port and final trajectory; `None` for an exception.
    pub outcome: Option<(usize, Trajectory)>,
    pub log: Vec<LogEntry>,
    pub fuel_used: u64,
}

#[derive(Clone, Debug)]
pub struct RunResult {
    pub branches: Vec<Branch>,
    /// Set when exact mode exceeded its branch cap.
    pub branch_cap_hit: bool,
}

impl RunResult {
    /// The monadic value of the run. Any exceptional branch makes the whole
    /// value exceptional.
    pub fn effect(&self, kind: EffectKind) -> Effect<(usize, Trajectory)> {
        if self.branch_cap_hit || self.branches.iter().any(|b| b.outcome.is_none()) {
            return Effect::Exception;
        }
        let outs = self
            .branches
            .iter()
            .map(|b| (b.weight, b.outcome.clone().expect("checked")));
        match kind {
            EffectKind::Maybe => match self.branches.len() {
                1 => Effect::Just(outs.map(|(_, o)| o).next().expect("one branch")),
                _ => Effect::Exception,
            },
            EffectKind::ListE => Effect::List(outs.map(|(_, o)| o).collect()),
            EffectKind::DistE => {
                let mut ws = Vec::new();
                for (w, o) in outs {
                    merge(&mut ws, w, o);
                }
                Effect::Dist(ws)
            }
        }
    }

    /// Total weight of exceptional branches.
    pub fn exception_weight(&self) -> f64 {
        self.branches
            .iter()
            .filter(|b| b.outcome.is_none())
            .fold(0.0, |acc, b| acc + b.weight)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RunError {
    #[error("schedule does not typecheck: {}", .0.join("; "))]
    Typecheck(Vec<String>),
    #[error("no outer input {0}")]
    NoInput(usize),
    #[error("trajectory agent shape does not match the outer input")]
    InputShape,
    #[error("the list monad can only be run in exact mode")]
    ListSample,
    #[error(transparent)]
    Step(#[from] StepError),
}

struct Config {
    weight: f64,
    states: Vec<LocalState>,
    at: Target,
    traj: Trajectory,
    fuel_left: u64,
    log: Vec<LogEntry>,
}

pub fn run(s: &Schedule, t0: &Trajectory, opts: &RunOptions) -> Result<RunResult, RunError> {
    let errs = typecheck(s);
    if !errs.is_empty() {
        return Err(RunError::Typecheck(errs));
    }
    let shape = s
        .inputs
        .get(opts.input)
        .ok_or(RunError::NoInput(opts.input))?;
    if t0.agent().dom() != shape {
        return Err(RunError::InputShape);
    }
    if opts.kind == EffectKind::ListE && opts.mode == RunMode::Sample {
        return Err(RunError::ListSample);
    }
    if opts.kind != EffectKind::ListE
        && s.boxes.iter().any(|b| {
            matches!(
                b.generator,
                Generator::Fail {
                    mode: FailMode::Empty,
                    ..
                }
            )
        })
    {
        return Err(StepError::EmptyFail(opts.kind).into());
    }
    let start = Config {
        weight: 1.0,
        states: initial_states(s, opts.seed),
        at: s.target_of(Source::Input(opts.input)).expect("typechecked"),
        traj: t0.clone(),
        fuel_left: opts.fuel,
        log: Vec::new(),
    };
    let mut rng = rng_from_seed(opts.seed);
    let mut stack = vec![start];
    let mut branches = Vec::new();
    while let Some(cfg) = stack.pop() {
        let finish = |cfg: Config, outcome| Branch {
            weight: cfg.weight,
            outcome,
            fuel_used: opts.fuel - cfg.fuel_left,
            log: cfg.log,
        };
        let (index, port) = match cfg.at {
            Target::Output(p) => {
                let traj = cfg.traj.clone();
                branches.push(finish(cfg, Some((p, traj))));
                continue;
            }
            Target::Box { index, port } => (index, port),
        };
        if cfg.fuel_left == 0 {
            branches.push(finish(cfg, None));
            continue;
        }
        let b = &s.boxes[index];
        let eff = generator_step(&b.generator, &cfg.states[index], port, &cfg.traj, opts.kind)?;
        let mut taken = match eff {
            Effect::Exception => {
                let mut cfg = cfg;
                cfg.fuel_left -= 1;
                cfg.log.push(LogEntry {
                    box_index: index,
                    box_name: b.name.clone(),
                    port: None,
                    part_counts: cfg.traj.last().part_counts().to_vec(),
                    weight: 1.0,
                });
                branches.push(finish(cfg, None));
                continue;
            }
            e => e.into_branches(),
        };
        if opts.mode == RunMode::Sample && taken.len() > 1 {
            let i = sample_index(taken.iter().map(|(w, _)| *w), &mut rng);
            taken = vec![taken.swap_remove(i)];
        }
        // The last child takes over the parent's state and log; the others
        // get copies.
        let n = taken.len();
        let Config {
            weight: parent_weight,
            mut states,
            fuel_left,
            mut log,
            ..
        } = cfg;
        let mut children = Vec::with_capacity(n);
        for (k, (w, (st, out, traj))) in taken.into_iter().enumerate() {
            let (mut states, mut log) = if k + 1 == n {
                (std::mem::take(&mut states), std::mem::take(&mut log))
            } else {
                (states.clone(), log.clone())
            };
            states[index] = st;
            log.push(LogEntry {
                box_index: index,
                box_name: b.name.clone(),
                port: Some(out),
                part_counts: traj.last().part_counts().to_vec(),
                weight: w,
            });
            let weight = if opts.mode == RunMode::Sample {
                parent_weight
            } else {
                parent_weight * w
            };
            children.push(Config {
                weight,
                states,
                at: s
                    .target_of(Source::Box { index, port: out })
                    .expect("typechecked"),
                traj,
                fuel_left: fuel_left - 1,
                log,
            });
        }
        stack.extend(children.into_iter().rev());
        if stack.len() > opts.branch_cap {
            return Ok(RunResult {
                branches: vec![Branch {
                    weight: 1.0,
                    outcome: None,
                    log: Vec::new(),
                    fuel_used: 0,
                }],
                branch_cap_hit: true,
            });
        }
    }
    Ok(RunResult {
        branches,
        branch_cap_hit: false,
    })
}
