// SPDX-License-Identifier: Apache-2.0
//! Delta migration: pulling data back along a schema functor.
//!
//! A [`SchemaFunctor`] `F: S -> T` sends every table, attribute type, hom
//! and attribute of `S` to one generator of `T` of the same sort. Migrating
//! a `T`-instance `X` gives the `S`-instance `X ∘ F`: table `t` gets the
//! parts of `F(t)`, hom `h` reads the column of `F(h)`, and so on. The same
//! recipe applies componentwise to morphisms, rules and schedules.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::acset::{ACSet, AttrValue};
use crate::morphism::{ACSetMorphism, MorphismError};
use crate::rewrite::{RewriteRule, RuleError, RuleOptions};
use crate::scheduler::{BoxSpec, Choice, Generator, Schedule};
use crate::schema::{validate_schema, Schema};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MigrationError {
    #[error("invalid functor: {}", .0.join("; "))]
    Functor(Vec<String>),
    #[error("instance is not over the functor's target schema")]
    Schema,
    #[error(transparent)]
    Morphism(#[from] MorphismError),
    #[error(transparent)]
    Rule(#[from] RuleError),
    #[error("box {0} uses a custom predicate, which cannot be migrated")]
    CustomPredicate(String),
}

/// A functor between free schemas, given on generators.
///
/// Maps are keyed by name in the source schema and valued by name in the
/// target schema.
#[derive(Clone, Debug, PartialEq)]
pub struct SchemaFunctor {
    pub name: String,
    src: Arc<Schema>,
    tgt: Arc<Schema>,
    tables: Vec<usize>,
    homs: Vec<usize>,
    attrs: Vec<usize>,
    pub table_map: BTreeMap<String, String>,
    pub attr_type_map: BTreeMap<String, String>,
    pub hom_map: BTreeMap<String, String>,
    pub attr_map: BTreeMap<String, String>,
}

type NameMap = BTreeMap<String, String>;

impl SchemaFunctor {
    /// Checks that every generator of `src` is mapped, kinds agree and
    /// endpoints commute with the object map.
    pub fn new(
        name: impl Into<String>,
        src: Arc<Schema>,
        tgt: Arc<Schema>,
        table_map: NameMap,
        attr_type_map: NameMap,
        hom_map: NameMap,
        attr_map: NameMap,
    ) -> Result<Self, MigrationError> {
        let errs = functor_violations(&src, &tgt, &table_map, &attr_type_map, &hom_map, &attr_map);
        if !errs.is_empty() {
            return Err(MigrationError::Functor(errs));
        }
        let tables = src
            .tables()
            .iter()
            .map(|t| tgt.table_index(&table_map[t]).expect("checked"))
            .collect();
        let homs = src
            .homs()
            .iter()
            .map(|h| tgt.hom_index(&hom_map[&h.name]).expect("checked"))
            .collect();
        let attrs = src
            .attrs()
            .iter()
            .map(|a| tgt.attr_index(&attr_map[&a.name]).expect("checked"))
            .collect();
        Ok(SchemaFunctor {
            name: name.into(),
            src,
            tgt,
            tables,
            homs,
            attrs,
            table_map,
            attr_type_map,
            hom_map,
            attr_map,
        })
    }

    pub fn identity(s: &Arc<Schema>) -> Self {
        let id = |names: Vec<String>| {
            names
                .into_iter()
                .map(|n| (n.clone(), n))
                .collect::<NameMap>()
        };
        SchemaFunctor::new(
            "id",
            Arc::clone(s),
            Arc::clone(s),
            id(s.tables().to_vec()),
            id(s.attr_types().iter().map(|a| a.name.clone()).collect()),
            id(s.homs().iter().map(|h| h.name.clone()).collect()),
            id(s.attrs().iter().map(|a| a.name.clone()).collect()),
        )
        .expect("identity functor is valid")
    }

    pub fn src(&self) -> &Arc<Schema> {
        &self.src
    }

    pub fn tgt(&self) -> &Arc<Schema> {
        &self.tgt
    }

    /// `self ; g`, first `self` then `g`.
    pub fn then(&self, g: &SchemaFunctor) -> Result<SchemaFunctor, MigrationError> {
        if *self.tgt != *g.src {
            return Err(MigrationError::Schema);
        }
        let comp = |a: &NameMap, b: &NameMap| {
            a.iter()
                .map(|(k, v)| (k.clone(), b[v].clone()))
                .collect::<NameMap>()
        };
        SchemaFunctor::new(
            format!("{};{}", self.name, g.name),
            Arc::clone(&self.src),
            Arc::clone(&g.tgt),
            comp(&self.table_map, &g.table_map),
            comp(&self.attr_type_map, &g.attr_type_map),
            comp(&self.hom_map, &g.hom_map),
            comp(&self.attr_map, &g.attr_map),
        )
    }

    /// `X ∘ F`.
    pub fn migrate(&self, x: &ACSet) -> Result<ACSet, MigrationError> {
        if **x.schema() != *self.tgt {
            return Err(MigrationError::Schema);
        }
        let parts = self.tables.iter().map(|&t| x.nparts(t)).collect();
        let homs = self
            .homs
            .iter()
            .map(|&h| x.hom_column(h).to_vec())
            .collect();
        let attrs = self
            .attrs
            .iter()
            .map(|&a| x.attr_column(a).to_vec())
            .collect();
        Ok(ACSet::from_columns_unchecked(
            Arc::clone(&self.src),
            parts,
            homs,
            attrs,
        ))
    }

    /// Migrates both ends and restricts the variable assignment to the
    /// variables that remain in the new domain.
    pub fn migrate_morphism(&self, f: &ACSetMorphism) -> Result<ACSetMorphism, MigrationError> {
        let dom = Arc::new(self.migrate(f.dom())?);
        let cod = Arc::new(self.migrate(f.cod())?);
        self.migrate_between(f, dom, cod)
    }

    fn migrate_between(
        &self,
        f: &ACSetMorphism,
        dom: Arc<ACSet>,
        cod: Arc<ACSet>,
    ) -> Result<ACSetMorphism, MigrationError> {
        let comps = self
            .tables
            .iter()
            .map(|&t| f.component(t).to_vec())
            .collect();
        let live = dom.vars();
        let vars: BTreeMap<u32, AttrValue> = f
            .var_assignment()
            .iter()
            .filter(|(v, _)| live.contains(v))
            .map(|(&v, x)| (v, x.clone()))
            .collect();
        Ok(ACSetMorphism::new(dom, cod, comps, vars)?)
    }

    /// Migrates `L <- K -> R` and both agents. Expressions are over
    /// variable ids and carry over unchanged; those whose target variable
    /// disappears are dropped.
    pub fn migrate_rule(&self, r: &RewriteRule) -> Result<RewriteRule, MigrationError> {
        let mut cache = Cache::default();
        let lhs = cache.get(self, r.lhs())?;
        let k = cache.get(self, r.interface())?;
        let rhs = cache.get(self, r.rhs())?;
        let a = cache.get(self, r.in_shape())?;
        let b = cache.get(self, r.out_shape())?;
        let l = self.migrate_between(r.l(), Arc::clone(&k), Arc::clone(&lhs))?;
        let rr = self.migrate_between(r.r(), k, Arc::clone(&rhs))?;
        let ai = self.migrate_between(r.agent_in(), a, lhs)?;
        let bo = self.migrate_between(r.agent_out(), b, Arc::clone(&rhs))?;
        let live = rhs.vars();
        let opts = RuleOptions {
            exprs: r
                .exprs()
                .iter()
                .filter(|(v, _)| live.contains(v))
                .map(|(&v, e)| (v, e.clone()))
                .collect(),
            ..r.options().clone()
        };
        Ok(RewriteRule::new(r.name.clone(), l, rr, ai, bo, opts)?)
    }

    pub fn migrate_generator(
        &self,
        name: &str,
        g: &Generator,
    ) -> Result<Generator, MigrationError> {
        let shape = |x: &Arc<ACSet>| self.migrate(x).map(Arc::new);
        Ok(match g {
            Generator::Rewrite { rule } => Generator::Rewrite {
                rule: Arc::new(self.migrate_rule(rule)?),
            },
            Generator::Weaken { f } => Generator::Weaken {
                f: self.migrate_morphism(f)?,
            },
            Generator::Strengthen { f } => Generator::Strengthen {
                f: self.migrate_morphism(f)?,
            },
            Generator::Init { input, agent } => Generator::Init {
                input: shape(input)?,
                agent: self.migrate_morphism(agent)?,
            },
            Generator::Fail { shape: s, mode } => Generator::Fail {
                shape: shape(s)?,
                mode: *mode,
            },
            Generator::ControlFlow { shape: s, choice } => {
                if matches!(choice, Choice::Custom { .. }) {
                    return Err(MigrationError::CustomPredicate(name.to_string()));
                }
                Generator::ControlFlow {
                    shape: shape(s)?,
                    choice: choice.clone(),
                }
            }
            Generator::Query { a, b, c } => Generator::Query {
                a: shape(a)?,
                b: shape(b)?,
                c: shape(c)?,
            },
        })
    }

    /// Migrates every box parameter and port label; the wiring is kept.
    pub fn migrate_schedule(&self, s: &Schedule) -> Result<Schedule, MigrationError> {
        let shapes = |xs: &[Arc<ACSet>]| {
            xs.iter()
                .map(|x| self.migrate(x).map(Arc::new))
                .collect::<Result<Vec<_>, _>>()
        };
        let boxes = s
            .boxes
            .iter()
            .map(|b| {
                Ok(BoxSpec {
                    name: b.name.clone(),
                    generator: self.migrate_generator(&b.name, &b.generator)?,
                })
            })
            .collect::<Result<_, MigrationError>>()?;
        Ok(Schedule {
            name: s.name.clone(),
            inputs: shapes(&s.inputs)?,
            outputs: shapes(&s.outputs)?,
            boxes,
            wires: s.wires.clone(),
        })
    }
}

/// Shares one migrated copy per distinct instance so rule legs compose.
#[derive(Default)]
struct Cache(Vec<(Arc<ACSet>, Arc<ACSet>)>);

impl Cache {
    fn get(&mut self, f: &SchemaFunctor, x: &Arc<ACSet>) -> Result<Arc<ACSet>, MigrationError> {
        if let Some((_, y)) = self.0.iter().find(|(k, _)| Arc::ptr_eq(k, x) || **k == **x) {
            return Ok(Arc::clone(y));
        }
        let y = Arc::new(f.migrate(x)?);
        self.0.push((Arc::clone(x), Arc::clone(&y)));
        Ok(y)
    }
}

/// Every reason the maps fail to define a functor `src -> tgt`.
pub fn functor_violations(
    src: &Schema,
    tgt: &Schema,
    table_map: &NameMap,
    attr_type_map: &NameMap,
    hom_map: &NameMap,
    attr_map: &NameMap,
) -> Vec<String> {
    let mut errs = Vec::new();
    for s in [src, tgt] {
        errs.extend(validate_schema(s).into_iter().map(|v| v.to_string()));
    }
    if !errs.is_empty() {
        return errs;
    }
    let extra = |m: &NameMap, known: &dyn Fn(&str) -> bool, what: &str, errs: &mut Vec<String>| {
        for k in m.keys().filter(|k| !known(k)) {
            errs.push(format!("{what} {k} is not in the source schema"));
        }
    };
    extra(
        table_map,
        &|k| src.table_index(k).is_some(),
        "table",
        &mut errs,
    );
    extra(
        attr_type_map,
        &|k| src.attr_type_index(k).is_some(),
        "attribute type",
        &mut errs,
    );
    extra(hom_map, &|k| src.hom_index(k).is_some(), "hom", &mut errs);
    extra(
        attr_map,
        &|k| src.attr_index(k).is_some(),
        "attribute",
        &mut errs,
    );
    for t in src.tables() {
        match table_map.get(t) {
            None => errs.push(format!("table {t} is not mapped")),
            Some(u) if tgt.table_index(u).is_none() => {
                errs.push(format!("table {t} maps to unknown table {u}"))
            }
            _ => {}
        }
    }
    for at in src.attr_types() {
        match attr_type_map
            .get(&at.name)
            .and_then(|u| tgt.attr_type_index(u).map(|i| &tgt.attr_types()[i]))
        {
            None => errs.push(format!(
                "attribute type {} is not mapped to a target attribute type",
                at.name
            )),
            Some(u) if u.kind != at.kind => errs.push(format!(
                "attribute type {} has kind {} but maps to {} of kind {}",
                at.name, at.kind, u.name, u.kind
            )),
            _ => {}
        }
    }
    for h in src.homs() {
        let Some(i) = hom_map.get(&h.name).and_then(|u| tgt.hom_index(u)) else {
            errs.push(format!("hom {} is not mapped to a target hom", h.name));
            continue;
        };
        let u = &tgt.homs()[i];
        if table_map.get(&h.src) != Some(&u.src) || table_map.get(&h.tgt) != Some(&u.tgt) {
            errs.push(format!(
                "hom {} maps to {} but endpoints do not commute",
                h.name, u.name
            ));
        }
    }
    for a in src.attrs() {
        let Some(i) = attr_map.get(&a.name).and_then(|u| tgt.attr_index(u)) else {
            errs.push(format!(
                "attribute {} is not mapped to a target attribute",
                a.name
            ));
            continue;
        };
        let u = &tgt.attrs()[i];
        if table_map.get(&a.src) != Some(&u.src) || attr_type_map.get(&a.tgt) != Some(&u.tgt) {
            errs.push(format!(
                "attribute {} maps to {} but endpoints do not commute",
                a.name, u.name
            ));
        }
    }
    errs
}
