// SPDX-License-Identifier: Apache-2.0
//! Graph-rewriting programs over attributed C-sets.
//!
//! World states are [`ACSet`]s: database instances over a free schema of
//! tables, foreign keys and typed attribute columns. Rewrite rules act on
//! them by double- or single-pushout rewriting. Programs are wiring diagrams
//! of generator boxes ([`scheduler::Schedule`]) whose wires carry
//! [`Trajectory`] values and whose semantics is an effectful Mealy machine
//! over one of three exceptional monads ([`EffectKind`]).

pub mod acset;
pub mod colimit;
pub mod dot;
pub mod effect;
pub mod expr;
pub mod format;
pub mod homsearch;
pub mod mealy;
pub mod migration;
pub mod models;
pub mod morphism;
pub mod partial;
pub mod report;
pub mod rewrite;
pub mod scheduler;
pub mod schema;
pub mod trajectory;

pub use acset::{ACSet, AcsetError, AttrValue, Scalar};
pub use colimit::{
    coproduct, initial_acset, pushout, pushout_complement, verify_pushout, ColimitError, GluingKind,
};
pub use effect::{Effect, EffectKind};
pub use homsearch::{homomorphisms, is_isomorphic, HomOptions};
pub use mealy::Mealy;
pub use migration::SchemaFunctor;
pub use morphism::{is_natural, morphism_predicates, ACSetMorphism, MorphismPredicates};
pub use partial::{compose_partial, PartialMap};
pub use rewrite::{RewriteRule, RuleOptions, Semantics};
pub use scheduler::{run, typecheck, Generator, RunMode, RunOptions, Schedule};
pub use schema::{validate_schema, ScalarKind, Schema};
pub use trajectory::Trajectory;
