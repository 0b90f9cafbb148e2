// SPDX-License-Identifier: Apache-2.0
//! `rewire`: check, inspect and run rewriting programs stored as TOML.
//!
//! Exit status is 0 on success, 1 when the command line or an input
//! document is invalid, and 2 when a rewrite or run ends in an exception.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use rewire::dot::{instance_to_dot, schedule_to_dot};
use rewire::format::{
    document_kind, instance_to_toml, parse_functor, parse_instance, parse_morphism, parse_rule,
    parse_schedule, parse_schema, FormatError,
};
use rewire::models::wolf_sheep::{simulate, Model, Params};
use rewire::report::{parse_report, RunReport};
use rewire::rewrite::rewrite_at;
use rewire::{
    homomorphisms, typecheck, ACSet, ACSetMorphism, AttrValue, EffectKind, HomOptions, PartialMap,
    RewriteRule, RuleOptions, RunMode, RunOptions, Scalar, Semantics, Trajectory,
};

const DEFAULT_FUEL: u64 = 100_000;

#[derive(Parser)]
#[command(
    name = "rewire",
    version,
    about = "Run graph-rewriting programs over attributed C-sets"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Parse and check documents of any kind.
    Validate {
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
    /// List homomorphisms from one instance into another.
    Homs {
        #[arg(long)]
        pattern: PathBuf,
        #[arg(long)]
        target: PathBuf,
        #[arg(long)]
        monic: bool,
    },
    /// Apply a rule once and print the resulting instance.
    Rewrite {
        #[arg(long)]
        rule: PathBuf,
        #[arg(long)]
        world: PathBuf,
        /// Morphism from the rule's input shape into the world.
        #[arg(long)]
        agent: Option<PathBuf>,
        /// Which match to use, in search order.
        #[arg(long = "match", default_value_t = 0)]
        index: usize,
        /// Override the rule's own semantics.
        #[arg(long, value_enum)]
        semantics: Option<Sem>,
    },
    /// Run a schedule and write a report.
    Run {
        #[arg(long)]
        schedule: PathBuf,
        #[arg(long)]
        world: PathBuf,
        #[arg(long)]
        agent: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Monad::Maybe)]
        monad: Monad,
        #[arg(long, value_enum, default_value_t = Mode::Sample)]
        mode: Mode,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, env = "REWIRE_FUEL", default_value_t = DEFAULT_FUEL)]
        fuel: u64,
        /// Report destination; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write the final world of the first branch here.
        #[arg(long)]
        world_out: Option<PathBuf>,
    },
    /// Print a schedule or instance in Graphviz format.
    ExportDot { file: PathBuf },
    /// Run a bundled model.
    #[command(subcommand)]
    Example(Example),
}

#[derive(Subcommand)]
enum Example {
    /// Wolves and sheep on a 10x10 torus; prints one census line per step.
    WolfSheep {
        #[arg(long, default_value_t = 100)]
        steps: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Monad {
    Maybe,
    List,
    Dist,
}

impl From<Monad> for EffectKind {
    fn from(e: Monad) -> Self {
        match e {
            Monad::Maybe => EffectKind::Maybe,
            Monad::List => EffectKind::ListE,
            Monad::Dist => EffectKind::DistE,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Sample,
    Exact,
}

#[derive(Clone, Copy, ValueEnum)]
enum Sem {
    Dpo,
    Spo,
}

/// A failure reported on stderr. Invalid input exits with 1 and a run that
/// ends in an exception with 2.
struct Failure(String, u8);

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure(e.to_string(), 1)
    }
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure(msg.into(), 1)
}

fn exception(msg: impl Into<String>) -> Failure {
    Failure(msg.into(), 2)
}

type Res = Result<(), Failure>;

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| invalid(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| invalid(format!("{}: {e}", path.display())))
}

fn scalar(v: &AttrValue) -> toml::Value {
    match v {
        AttrValue::Concrete(Scalar::Int(i)) => toml::Value::Integer(*i),
        AttrValue::Concrete(Scalar::Float(x)) => toml::Value::Float(*x),
        AttrValue::Concrete(Scalar::Str(s)) => toml::Value::String(s.to_string()),
        AttrValue::Concrete(Scalar::Bool(b)) => toml::Value::Boolean(*b),
        AttrValue::Var(n) => toml::Value::String(format!("${n}")),
    }
}

/// `count` followed by one `[[homs]]` table per morphism, holding its
/// non-empty components and its variable assignment.
fn homs_to_toml(hs: &[ACSetMorphism]) -> String {
    let mut doc = toml::Table::new();
    doc.insert("count".into(), toml::Value::Integer(hs.len() as i64));
    let list = hs
        .iter()
        .map(|h| {
            let mut comps = toml::Table::new();
            for (i, name) in h.dom().schema().tables().iter().enumerate() {
                if !h.component(i).is_empty() {
                    let parts = h
                        .component(i)
                        .iter()
                        .map(|&p| toml::Value::Integer(p as i64))
                        .collect();
                    comps.insert(name.clone(), toml::Value::Array(parts));
                }
            }
            let mut entry = toml::Table::new();
            entry.insert("components".into(), toml::Value::Table(comps));
            if !h.var_assignment().is_empty() {
                let vars = h
                    .var_assignment()
                    .iter()
                    .map(|(k, v)| (format!("${k}"), scalar(v)))
                    .collect();
                entry.insert("vars".into(), toml::Value::Table(vars));
            }
            toml::Value::Table(entry)
        })
        .collect();
    doc.insert("homs".into(), toml::Value::Array(list));
    toml::to_string(&doc).expect("plain tables serialize")
}

/// The partial map of a rewrite as TOML comments, `-` marking deleted parts.
fn map_comment(m: &PartialMap) -> String {
    let mut out = String::from("\n# partial map from the old world\n");
    for (name, comp) in m.dom().schema().tables().iter().zip(m.components()) {
        let cells: Vec<String> = comp
            .iter()
            .enumerate()
            .map(|(i, t)| match t {
                Some(j) => format!("{i}->{j}"),
                None => format!("{i}->-"),
            })
            .collect();
        out.push_str(&format!("# {name}: {}\n", cells.join(" ")));
    }
    out
}

fn load<T>(path: &Path, parse: impl Fn(&str) -> Result<T, FormatError>) -> Result<T, Failure> {
    let src = read(path)?;
    parse(&src).map_err(|e| invalid(format!("{}: {e}", path.display())))
}

fn agent_for(
    shape: &Arc<ACSet>,
    world: &Arc<ACSet>,
    path: Option<&PathBuf>,
) -> Result<ACSetMorphism, Failure> {
    match path {
        Some(p) => {
            let a = load(p, parse_morphism)?;
            if a.dom() != shape || a.cod() != world {
                return Err(invalid(format!(
                    "{}: agent must map the input shape into the world",
                    p.display()
                )));
            }
            Ok(ACSetMorphism::new(
                Arc::clone(shape),
                Arc::clone(world),
                a.components().to_vec(),
                a.var_assignment().clone(),
            )?)
        }
        None if shape.total_parts() == 0 => Ok(ACSetMorphism::from_initial(world)),
        None => Err(invalid("the input shape is not empty; pass --agent")),
    }
}

fn validate_one(path: &Path) -> Result<String, Failure> {
    let src = read(path)?;
    let at = |e: FormatError| invalid(format!("{}: {e}", path.display()));
    let kind = document_kind(&src).map_err(at)?;
    match kind.as_str() {
        "schema" => drop(parse_schema(&src).map_err(at)?),
        "instance" => drop(parse_instance(&src).map_err(at)?),
        "morphism" => drop(parse_morphism(&src).map_err(at)?),
        "rule" => drop(parse_rule(&src).map_err(at)?),
        "schedule" => {
            let s = parse_schedule(&src).map_err(at)?;
            let errs = typecheck(&s);
            if !errs.is_empty() {
                return Err(invalid(format!("{}: {}", path.display(), errs.join("; "))));
            }
        }
        "functor" => drop(parse_functor(&src).map_err(at)?),
        "report" => drop(parse_report(&src).map_err(at)?),
        _ => unreachable!("document_kind only returns known kinds"),
    }
    Ok(kind)
}

fn execute(cmd: Cmd) -> Res {
    match cmd {
        Cmd::Validate { files } => {
            let mut bad = 0;
            for f in &files {
                match validate_one(f) {
                    Ok(kind) => println!("{}: ok ({kind})", f.display()),
                    Err(Failure(msg, _)) => {
                        eprintln!("{msg}");
                        bad += 1;
                    }
                }
            }
            if bad > 0 {
                return Err(invalid(format!(
                    "{bad} of {} documents invalid",
                    files.len()
                )));
            }
        }
        Cmd::Homs {
            pattern,
            target,
            monic,
        } => {
            let p = load(&pattern, parse_instance)?;
            let t = load(&target, parse_instance)?;
            let opts = HomOptions {
                monic,
                ..HomOptions::default()
            };
            let hs = homomorphisms(&p, &t, &opts)?;
            print!("{}", homs_to_toml(&hs));
        }
        Cmd::Rewrite {
            rule,
            world,
            agent,
            index,
            semantics,
        } => {
            let mut r = load(&rule, parse_rule)?;
            if let Some(sem) = semantics {
                let opts = RuleOptions {
                    semantics: match sem {
                        Sem::Dpo => Semantics::Dpo,
                        Sem::Spo => Semantics::Spo,
                    },
                    ..r.options().clone()
                };
                r = RewriteRule::new(
                    r.name.clone(),
                    r.l().clone(),
                    r.r().clone(),
                    r.agent_in().clone(),
                    r.agent_out().clone(),
                    opts,
                )?;
            }
            let w = load(&world, parse_instance)?;
            let a = agent_for(r.in_shape(), &w, agent.as_ref())?;
            let out = rewrite_at(&r, &w, &a, index).map_err(|e| exception(e.to_string()))?;
            print!("{}", instance_to_toml(&out.world));
            print!("{}", map_comment(&out.map));
        }
        Cmd::Run {
            schedule,
            world,
            agent,
            monad,
            mode,
            seed,
            fuel,
            out,
            world_out,
        } => {
            let s = load(&schedule, parse_schedule)?;
            let w = load(&world, parse_instance)?;
            let shape = s
                .inputs
                .first()
                .ok_or_else(|| invalid("schedule has no inputs"))?;
            let a = agent_for(shape, &w, agent.as_ref())?;
            let mode = match mode {
                Mode::Sample => RunMode::Sample,
                Mode::Exact => RunMode::Exact,
            };
            let mut opts = RunOptions::new(monad.into(), mode);
            opts.seed = seed;
            opts.fuel = fuel;
            let res = rewire::run(&s, &Trajectory::new(a)?, &opts)?;
            let text = RunReport::new(&s, &opts, &res, true).to_toml();
            match out {
                Some(path) => write(&path, &text)?,
                None => print!("{text}"),
            }
            if let Some(path) = world_out {
                if let Some((_, t)) = res.branches.first().and_then(|b| b.outcome.as_ref()) {
                    write(&path, &instance_to_toml(t.last()))?;
                }
            }
            if res.exception_weight() > 0.0 || res.branch_cap_hit {
                return Err(exception("the run raised an exception"));
            }
        }
        Cmd::ExportDot { file } => {
            let src = read(&file)?;
            let at = |e: FormatError| invalid(format!("{}: {e}", file.display()));
            match document_kind(&src).map_err(at)?.as_str() {
                "schedule" => print!("{}", schedule_to_dot(&parse_schedule(&src).map_err(at)?)),
                "instance" => print!("{}", instance_to_dot(&*parse_instance(&src).map_err(at)?)),
                k => {
                    return Err(invalid(format!(
                        "{}: cannot draw a {k} document",
                        file.display()
                    )))
                }
            }
        }
        Cmd::Example(Example::WolfSheep { steps, seed }) => {
            let model = Model::new(Params::default());
            let sim = simulate(&model, steps, seed)?;
            print!("{}", sim.table());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match execute(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure(msg, code)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}
