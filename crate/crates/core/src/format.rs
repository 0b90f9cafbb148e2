// SPDX-License-Identifier: Apache-2.0
//! TOML documents for schemas, instances, morphisms, rules, schedules and
//! functors.
//!
//! Every document has a top-level `kind`. All documents except functors
//! carry one `[schema]` table, and morphisms, rules and schedules name the
//! instances they use under `[instances.NAME]`. Unknown fields are rejected.
//!
//! ```toml
//! kind = "instance"
//!
//! [schema]
//! tables = ["V", "E"]
//! attr_types = [["Nat", "int"]]
//! homs = [["src", "E", "V"], ["tgt", "E", "V"]]
//! attrs = [["w", "E", "Nat"]]
//!
//! [instance]
//! V = 2
//! E = [{ src = 0, tgt = 1, w = 5 }]
//! ```
//!
//! A table without homs or attributes may be given as a part count. An
//! attribute cell holding a variable is written `{ var = 3 }`. Morphisms
//! list one component per table (missing tables are empty) and may omit
//! `vars`, in which case the assignment is read off the attribute cells.
//!
//! Schedules list boxes as `[[boxes]]` with a `type` of `rewrite`,
//! `weaken`, `strengthen`, `init`, `fail`, `control_flow` or `query`, and
//! wires as `["source", "target"]` pairs where an endpoint is `input.I`,
//! `output.I` or `BOX.PORT`.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::Range;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use toml::Spanned;

use crate::acset::{ACSet, AttrValue, Scalar};
use crate::expr::parse_attr_expr;
use crate::migration::SchemaFunctor;
use crate::morphism::ACSetMorphism;
use crate::rewrite::{RewriteRule, RuleOptions, Semantics};
use crate::scheduler::{Choice, FailMode, Generator, Schedule, Source, Target, Wire};
use crate::schema::{AttrDecl, AttrTypeDecl, HomDecl, ScalarKind, Schema};

/// A malformed document, with the position of the offending item when
/// known.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FormatError {
    pub line: Option<usize>,
    pub column: Option<usize>,
    pub message: String,
}

impl fmt::Display for FormatError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.line, self.column) {
            (Some(l), Some(c)) => write!(f, "line {l}, column {c}: {}", self.message),
            (Some(l), None) => write!(f, "line {l}: {}", self.message),
            _ => f.write_str(&self.message),
        }
    }
}

impl std::error::Error for FormatError {}

impl FormatError {
    pub(crate) fn plain(message: impl Into<String>) -> Self {
        FormatError {
            line: None,
            column: None,
            message: message.into(),
        }
    }

    fn at(src: &str, span: Range<usize>, message: impl Into<String>) -> Self {
        let (line, column) = line_col(src, span.start);
        FormatError {
            line: Some(line),
            column: Some(column),
            message: message.into(),
        }
    }
}

/// 1-based line and column of byte offset `pos`.
fn line_col(src: &str, pos: usize) -> (usize, usize) {
    let pos = pos.min(src.len());
    let before = &src.as_bytes()[..pos];
    let line = before.iter().filter(|&&b| b == b'\n').count() + 1;
    let start = before
        .iter()
        .rposition(|&b| b == b'\n')
        .map_or(0, |i| i + 1);
    (
        line,
        String::from_utf8_lossy(&before[start..]).chars().count() + 1,
    )
}

pub(crate) fn de<'a, T: Deserialize<'a>>(src: &'a str) -> Result<T, FormatError> {
    toml::from_str(src).map_err(|e| match e.span() {
        Some(span) => FormatError::at(src, span, e.message().trim_end()),
        None => FormatError::plain(e.message().trim_end()),
    })
}

pub(crate) fn ser<T: Serialize>(doc: &T) -> String {
    toml::to_string(doc).expect("documents serialize")
}

// ---------------------------------------------------------------------------
// Document shapes

#[derive(Serialize, Deserialize, Clone, Debug, PartialEq)]
#[serde(deny_unknown_fields)]
struct SchemaDoc {
    tables: Vec<String>,
    #[serde(default)]
    attr_types: Vec<(String, ScalarKind)>,
    #[serde(default)]
    homs: Vec<(String, String, String)>,
    #[serde(default)]
    attrs: Vec<(String, String, String)>,
}

#[derive(Serialize, Deserialize, Clone, Debug, PartialEq)]
#[serde(untagged)]
enum Cell {
    Int(i64),
    Float(f64),
    Str(String),
    Bool(bool),
    Var { var: u32 },
}

#[derive(Serialize, Deserialize, Clone, Debug, PartialEq)]
#[serde(untagged)]
enum TableData {
    Count(usize),
    Rows(Vec<BTreeMap<String, Cell>>),
}

type Parts = BTreeMap<String, TableData>;
type Instances = BTreeMap<String, Spanned<Parts>>;

#[derive(Serialize, Deserialize, Clone, Debug, PartialEq)]
#[serde(deny_unknown_fields)]
struct MorphismBody {
    dom: String,
    cod: String,
    #[serde(default)]
    components: BTreeMap<String, Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    vars: Option<BTreeMap<String, Cell>>,
}

#[derive(Serialize, Deserialize, Clone, Debug, PartialEq)]
#[serde(deny_unknown_fields)]
struct RuleBody {
    name: String,
    #[serde(default = "default_semantics")]
    semantics: String,
    #[serde(default)]
    monic: bool,
    l: MorphismBody,
    r: MorphismBody,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    agent_in: Option<MorphismBody>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    agent_out: Option<MorphismBody>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    exprs: BTreeMap<String, String>,
}

fn default_semantics() -> String {
    "dpo".into()
}

#[derive(Serialize, Deserialize, Clone, Debug, PartialEq)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
enum BoxDoc {
    Rewrite {
        name: String,
        rule: RuleBody,
    },
    Weaken {
        name: String,
        f: MorphismBody,
    },
    Strengthen {
        name: String,
        f: MorphismBody,
    },
    Init {
        name: String,
        input: String,
        agent: MorphismBody,
    },
    Fail {
        name: String,
        shape: String,
        #[serde(default = "default_fail")]
        mode: String,
    },
    ControlFlow {
        name: String,
        shape: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        weights: Option<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        expr: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        arity: Option<usize>,
    },
    Query {
        name: String,
        a: String,
        b: String,
        c: String,
    },
}

fn default_fail() -> String {
    "exception".into()
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SchemaFile {
    kind: String,
    schema: SchemaDoc,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceFile {
    kind: String,
    schema: SchemaDoc,
    instance: Spanned<Parts>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MorphismFile {
    kind: String,
    schema: SchemaDoc,
    instances: Instances,
    morphism: Spanned<MorphismBody>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RuleFile {
    kind: String,
    schema: SchemaDoc,
    instances: Instances,
    rule: Spanned<RuleBody>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScheduleFile {
    kind: String,
    name: String,
    schema: SchemaDoc,
    instances: Instances,
    inputs: Vec<String>,
    outputs: Vec<String>,
    #[serde(default)]
    boxes: Vec<Spanned<BoxDoc>>,
    #[serde(default)]
    wires: Vec<Spanned<(String, String)>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FunctorFile {
    kind: String,
    name: String,
    source: SchemaDoc,
    target: SchemaDoc,
    #[serde(default)]
    tables: BTreeMap<String, String>,
    #[serde(default)]
    attr_types: BTreeMap<String, String>,
    #[serde(default)]
    homs: BTreeMap<String, String>,
    #[serde(default)]
    attrs: BTreeMap<String, String>,
}

#[derive(Deserialize)]
struct KindOnly {
    kind: Option<String>,
}

/// Kinds of document this module reads.
pub const KINDS: [&str; 7] = [
    "schema", "instance", "morphism", "rule", "schedule", "functor", "report",
];

/// The `kind` field of a document.
pub fn document_kind(src: &str) -> Result<String, FormatError> {
    let k: KindOnly = de::<KindOnly>(src)?;
    let kind = k
        .kind
        .ok_or_else(|| FormatError::plain("missing field `kind`"))?;
    if !KINDS.contains(&kind.as_str()) {
        return Err(FormatError::plain(format!(
            "unknown document kind `{kind}`"
        )));
    }
    Ok(kind)
}

pub(crate) fn expect_kind(src: &str, got: &str, want: &str) -> Result<(), FormatError> {
    if got == want {
        Ok(())
    } else {
        let span = src.find("kind").map_or(0..0, |i| i..i);
        Err(FormatError::at(
            src,
            span,
            format!("expected a {want} document, found `{got}`"),
        ))
    }
}

// ---------------------------------------------------------------------------
// Schemas

fn schema_from_doc(d: &SchemaDoc) -> Result<Arc<Schema>, FormatError> {
    let s = Schema::checked(
        d.tables.clone(),
        d.attr_types
            .iter()
            .map(|(name, kind)| AttrTypeDecl {
                name: name.clone(),
                kind: *kind,
            })
            .collect(),
        d.homs
            .iter()
            .map(|(name, src, tgt)| HomDecl {
                name: name.clone(),
                src: src.clone(),
                tgt: tgt.clone(),
            })
            .collect(),
        d.attrs
            .iter()
            .map(|(name, src, tgt)| AttrDecl {
                name: name.clone(),
                src: src.clone(),
                tgt: tgt.clone(),
            })
            .collect(),
    )
    .map_err(|e| FormatError::plain(e.to_string()))?;
    Ok(Arc::new(s))
}

fn schema_to_doc(s: &Schema) -> SchemaDoc {
    SchemaDoc {
        tables: s.tables().to_vec(),
        attr_types: s
            .attr_types()
            .iter()
            .map(|a| (a.name.clone(), a.kind))
            .collect(),
        homs: s
            .homs()
            .iter()
            .map(|h| (h.name.clone(), h.src.clone(), h.tgt.clone()))
            .collect(),
        attrs: s
            .attrs()
            .iter()
            .map(|a| (a.name.clone(), a.src.clone(), a.tgt.clone()))
            .collect(),
    }
}

pub fn parse_schema(src: &str) -> Result<Arc<Schema>, FormatError> {
    let f: SchemaFile = de(src)?;
    expect_kind(src, &f.kind, "schema")?;
    schema_from_doc(&f.schema)
}

pub fn schema_to_toml(s: &Schema) -> String {
    ser(&SchemaFile {
        kind: "schema".into(),
        schema: schema_to_doc(s),
    })
}

// ---------------------------------------------------------------------------
// Instances

fn cell_value(c: &Cell, kind: ScalarKind) -> Result<AttrValue, String> {
    Ok(match (c, kind) {
        (Cell::Var { var }, _) => AttrValue::Var(*var),
        (Cell::Int(v), ScalarKind::Int) => AttrValue::int(*v),
        (Cell::Int(v), ScalarKind::Float) => AttrValue::float(*v as f64),
        (Cell::Float(v), ScalarKind::Float) => AttrValue::float(*v),
        (Cell::Str(v), ScalarKind::String) => AttrValue::str(v),
        (Cell::Bool(v), ScalarKind::Bool) => AttrValue::bool(*v),
        _ => return Err(format!("expected a value of kind {kind}")),
    })
}

fn cell_of(v: &AttrValue) -> Cell {
    match v {
        AttrValue::Var(var) => Cell::Var { var: *var },
        AttrValue::Concrete(Scalar::Int(v)) => Cell::Int(*v),
        AttrValue::Concrete(Scalar::Float(v)) => Cell::Float(*v),
        AttrValue::Concrete(Scalar::Str(v)) => Cell::Str(v.to_string()),
        AttrValue::Concrete(Scalar::Bool(v)) => Cell::Bool(*v),
    }
}

fn build_instance(schema: &Arc<Schema>, parts: &Parts) -> Result<ACSet, String> {
    let s = &**schema;
    if let Some(t) = parts.keys().find(|t| s.table_index(t).is_none()) {
        return Err(format!("unknown table `{t}`"));
    }
    let mut counts = vec![0; s.tables().len()];
    let mut homs = vec![Vec::new(); s.homs().len()];
    let mut attrs = vec![Vec::new(); s.attrs().len()];
    for (t, name) in s.tables().iter().enumerate() {
        let hs: Vec<usize> = s.homs_from(t).collect();
        let as_: Vec<usize> = s.attrs_from(t).collect();
        match parts.get(name) {
            None => {}
            Some(TableData::Count(n)) => {
                if !hs.is_empty() || !as_.is_empty() {
                    return Err(format!("table `{name}` has columns and must list its rows"));
                }
                counts[t] = *n;
            }
            Some(TableData::Rows(rows)) => {
                counts[t] = rows.len();
                for (p, row) in rows.iter().enumerate() {
                    if let Some(k) = row.keys().find(|k| {
                        !hs.iter().any(|&h| s.homs()[h].name == **k)
                            && !as_.iter().any(|&a| s.attrs()[a].name == **k)
                    }) {
                        return Err(format!("{name}[{p}]: unknown column `{k}`"));
                    }
                    for &h in &hs {
                        let col = &s.homs()[h].name;
                        match row.get(col) {
                            Some(Cell::Int(v)) if *v >= 0 => homs[h].push(*v as usize),
                            Some(_) => {
                                return Err(format!("{name}[{p}].{col}: expected a part id"))
                            }
                            None => return Err(format!("{name}[{p}]: missing column `{col}`")),
                        }
                    }
                    for &a in &as_ {
                        let col = &s.attrs()[a].name;
                        let c = row
                            .get(col)
                            .ok_or_else(|| format!("{name}[{p}]: missing column `{col}`"))?;
                        attrs[a].push(
                            cell_value(c, s.attr_kind(a))
                                .map_err(|e| format!("{name}[{p}].{col}: {e}"))?,
                        );
                    }
                }
            }
        }
    }
    ACSet::from_columns(Arc::clone(schema), counts, homs, attrs).map_err(|e| e.to_string())
}

fn parts_of(x: &ACSet) -> Parts {
    let s = x.schema();
    let mut out = Parts::new();
    for (t, name) in s.tables().iter().enumerate() {
        let hs: Vec<usize> = s.homs_from(t).collect();
        let as_: Vec<usize> = s.attrs_from(t).collect();
        if hs.is_empty() && as_.is_empty() {
            if x.nparts(t) > 0 {
                out.insert(name.clone(), TableData::Count(x.nparts(t)));
            }
            continue;
        }
        if x.nparts(t) == 0 {
            continue;
        }
        let rows = (0..x.nparts(t))
            .map(|p| {
                let mut row = BTreeMap::new();
                for &h in &hs {
                    row.insert(s.homs()[h].name.clone(), Cell::Int(x.hom(h, p) as i64));
                }
                for &a in &as_ {
                    row.insert(s.attrs()[a].name.clone(), cell_of(x.attr(a, p)));
                }
                row
            })
            .collect();
        out.insert(name.clone(), TableData::Rows(rows));
    }
    out
}

pub fn parse_instance(src: &str) -> Result<Arc<ACSet>, FormatError> {
    let f: InstanceFile = de(src)?;
    expect_kind(src, &f.kind, "instance")?;
    let schema = schema_from_doc(&f.schema)?;
    build_instance(&schema, f.instance.get_ref())
        .map(Arc::new)
        .map_err(|e| FormatError::at(src, f.instance.span(), e))
}

pub fn instance_to_toml(x: &ACSet) -> String {
    ser(&InstanceFile {
        kind: "instance".into(),
        schema: schema_to_doc(x.schema()),
        instance: Spanned::new(0..0, parts_of(x)),
    })
}

// ---------------------------------------------------------------------------
// Named instances and morphisms

struct Env<'s> {
    src: &'s str,
    schema: Arc<Schema>,
    named: BTreeMap<String, Arc<ACSet>>,
}

impl<'s> Env<'s> {
    fn new(src: &'s str, schema: Arc<Schema>, instances: &Instances) -> Result<Self, FormatError> {
        let mut named = BTreeMap::new();
        for (name, parts) in instances {
            let x = build_instance(&schema, parts.get_ref()).map_err(|e| {
                FormatError::at(src, parts.span(), format!("instance `{name}`: {e}"))
            })?;
            named.insert(name.clone(), Arc::new(x));
        }
        Ok(Env { src, schema, named })
    }

    fn get(&self, name: &str) -> Result<&Arc<ACSet>, String> {
        self.named
            .get(name)
            .ok_or_else(|| format!("unknown instance `{name}`"))
    }

    fn morphism(&self, m: &MorphismBody) -> Result<ACSetMorphism, String> {
        let dom = self.get(&m.dom)?;
        let cod = self.get(&m.cod)?;
        morphism_between(&self.schema, dom, cod, m)
    }

    fn err(&self, span: Range<usize>, msg: impl Into<String>) -> FormatError {
        FormatError::at(self.src, span, msg)
    }
}

fn morphism_between(
    schema: &Schema,
    dom: &Arc<ACSet>,
    cod: &Arc<ACSet>,
    m: &MorphismBody,
) -> Result<ACSetMorphism, String> {
    if let Some(t) = m
        .components
        .keys()
        .find(|t| schema.table_index(t).is_none())
    {
        return Err(format!("unknown table `{t}` in components"));
    }
    let comps: Vec<Vec<usize>> = schema
        .tables()
        .iter()
        .map(|t| m.components.get(t).cloned().unwrap_or_default())
        .collect();
    let vars = match &m.vars {
        Some(vs) => {
            let mut out = BTreeMap::new();
            for (k, c) in vs {
                let v = parse_var(k).ok_or_else(|| format!("bad variable name `{k}`"))?;
                let val = match c {
                    Cell::Var { var } => AttrValue::Var(*var),
                    Cell::Int(x) => AttrValue::int(*x),
                    Cell::Float(x) => AttrValue::float(*x),
                    Cell::Str(x) => AttrValue::str(x),
                    Cell::Bool(x) => AttrValue::bool(*x),
                };
                out.insert(v, val);
            }
            out
        }
        None => {
            return ACSetMorphism::inferred(Arc::clone(dom), Arc::clone(cod), comps)
                .map_err(|e| format!("{} -> {}: {e}", m.dom, m.cod))
        }
    };
    ACSetMorphism::new(Arc::clone(dom), Arc::clone(cod), comps, vars)
        .map_err(|e| format!("{} -> {}: {e}", m.dom, m.cod))
}

fn parse_var(k: &str) -> Option<u32> {
    k.strip_prefix('$').unwrap_or(k).parse().ok()
}

fn body_of(f: &ACSetMorphism, dom: &str, cod: &str) -> MorphismBody {
    let s = f.dom().schema();
    MorphismBody {
        dom: dom.into(),
        cod: cod.into(),
        components: s
            .tables()
            .iter()
            .enumerate()
            .filter(|(t, _)| !f.component(*t).is_empty())
            .map(|(t, name)| (name.clone(), f.component(t).to_vec()))
            .collect(),
        vars: Some(
            f.var_assignment()
                .iter()
                .map(|(v, x)| (format!("${v}"), cell_of(x)))
                .collect(),
        ),
    }
}

/// Names distinct instances (by value) in order of first appearance.
#[derive(Default)]
struct Pool {
    items: Vec<(String, Arc<ACSet>)>,
}

impl Pool {
    fn name(&mut self, x: &Arc<ACSet>, hint: &str) -> String {
        if let Some((n, _)) = self
            .items
            .iter()
            .find(|(_, y)| Arc::ptr_eq(x, y) || **x == **y)
        {
            return n.clone();
        }
        let mut name = hint.to_string();
        let mut i = 1;
        while self.items.iter().any(|(n, _)| *n == name) {
            i += 1;
            name = format!("{hint}{i}");
        }
        self.items.push((name.clone(), Arc::clone(x)));
        name
    }

    fn morphism(&mut self, f: &ACSetMorphism, dom: &str, cod: &str) -> MorphismBody {
        let d = self.name(f.dom(), dom);
        let c = self.name(f.cod(), cod);
        body_of(f, &d, &c)
    }

    fn instances(&self) -> Instances {
        self.items
            .iter()
            .map(|(n, x)| (n.clone(), Spanned::new(0..0, parts_of(x))))
            .collect()
    }
}

pub fn parse_morphism(src: &str) -> Result<ACSetMorphism, FormatError> {
    let f: MorphismFile = de(src)?;
    expect_kind(src, &f.kind, "morphism")?;
    let env = Env::new(src, schema_from_doc(&f.schema)?, &f.instances)?;
    env.morphism(f.morphism.get_ref())
        .map_err(|e| env.err(f.morphism.span(), e))
}

pub fn morphism_to_toml(f: &ACSetMorphism) -> String {
    let mut pool = Pool::default();
    let body = pool.morphism(f, "dom", "cod");
    ser(&MorphismFile {
        kind: "morphism".into(),
        schema: schema_to_doc(f.dom().schema()),
        instances: pool.instances(),
        morphism: Spanned::new(0..0, body),
    })
}

// ---------------------------------------------------------------------------
// Rules

fn rule_from_body(env: &Env<'_>, b: &RuleBody) -> Result<RewriteRule, String> {
    let l = env.morphism(&b.l).map_err(|e| format!("l: {e}"))?;
    let r = env.morphism(&b.r).map_err(|e| format!("r: {e}"))?;
    let a = match &b.agent_in {
        Some(m) => env.morphism(m).map_err(|e| format!("agent_in: {e}"))?,
        None => ACSetMorphism::from_initial(l.cod()),
    };
    let bo = match &b.agent_out {
        Some(m) => env.morphism(m).map_err(|e| format!("agent_out: {e}"))?,
        None => ACSetMorphism::from_initial(r.cod()),
    };
    let mut exprs = BTreeMap::new();
    for (k, e) in &b.exprs {
        let v = parse_var(k).ok_or_else(|| format!("bad variable name `{k}`"))?;
        exprs.insert(
            v,
            parse_attr_expr(e).map_err(|err| format!("expression for ${v}: {err}"))?,
        );
    }
    let opts = RuleOptions {
        semantics: Semantics::from_str(&b.semantics).map_err(|e| e.to_string())?,
        exprs,
        monic: b.monic,
    };
    RewriteRule::new(b.name.clone(), l, r, a, bo, opts).map_err(|e| format!("rule {}: {e}", b.name))
}

fn rule_to_body(pool: &mut Pool, rule: &RewriteRule, prefix: &str) -> RuleBody {
    let n = |s: &str| format!("{prefix}{s}");
    let l = pool.morphism(rule.l(), &n("K"), &n("L"));
    let r = pool.morphism(rule.r(), &n("K"), &n("R"));
    let empty = |f: &ACSetMorphism| f.dom().total_parts() == 0;
    let agent_in =
        (!empty(rule.agent_in())).then(|| pool.morphism(rule.agent_in(), &n("A"), &n("L")));
    let agent_out =
        (!empty(rule.agent_out())).then(|| pool.morphism(rule.agent_out(), &n("B"), &n("R")));
    RuleBody {
        name: rule.name.clone(),
        semantics: rule.semantics().to_string(),
        monic: rule.monic(),
        l,
        r,
        agent_in,
        agent_out,
        exprs: rule
            .exprs()
            .iter()
            .map(|(v, e)| (format!("${v}"), e.to_string()))
            .collect(),
    }
}

pub fn parse_rule(src: &str) -> Result<RewriteRule, FormatError> {
    let f: RuleFile = de(src)?;
    expect_kind(src, &f.kind, "rule")?;
    let env = Env::new(src, schema_from_doc(&f.schema)?, &f.instances)?;
    rule_from_body(&env, f.rule.get_ref()).map_err(|e| env.err(f.rule.span(), e))
}

pub fn rule_to_toml(rule: &RewriteRule) -> String {
    let mut pool = Pool::default();
    let body = rule_to_body(&mut pool, rule, "");
    ser(&RuleFile {
        kind: "rule".into(),
        schema: schema_to_doc(rule.lhs().schema()),
        instances: pool.instances(),
        rule: Spanned::new(0..0, body),
    })
}

// ---------------------------------------------------------------------------
// Schedules

fn generator_of(env: &Env<'_>, b: &BoxDoc) -> Result<(String, Generator), String> {
    let shape = |n: &str| env.get(n).cloned();
    Ok(match b {
        BoxDoc::Rewrite { name, rule } => (
            name.clone(),
            Generator::Rewrite {
                rule: Arc::new(rule_from_body(env, rule)?),
            },
        ),
        BoxDoc::Weaken { name, f } => (
            name.clone(),
            Generator::Weaken {
                f: env.morphism(f)?,
            },
        ),
        BoxDoc::Strengthen { name, f } => (
            name.clone(),
            Generator::Strengthen {
                f: env.morphism(f)?,
            },
        ),
        BoxDoc::Init { name, input, agent } => (
            name.clone(),
            Generator::Init {
                input: shape(input)?,
                agent: env.morphism(agent)?,
            },
        ),
        BoxDoc::Fail {
            name,
            shape: s,
            mode,
        } => {
            let mode = match mode.as_str() {
                "exception" => FailMode::Exception,
                "empty" => FailMode::Empty,
                m => return Err(format!("unknown fail mode `{m}`")),
            };
            (
                name.clone(),
                Generator::Fail {
                    shape: shape(s)?,
                    mode,
                },
            )
        }
        BoxDoc::ControlFlow {
            name,
            shape: s,
            weights,
            expr,
            arity,
        } => {
            let choice = match (weights, expr) {
                (Some(w), None) => {
                    if arity.is_some_and(|a| a != w.len()) {
                        return Err("arity does not match the number of weights".into());
                    }
                    Choice::Weights(w.clone())
                }
                (None, Some(e)) => Choice::Expr {
                    arity: arity.unwrap_or(2),
                    expr: parse_attr_expr(e).map_err(|err| err.to_string())?,
                },
                _ => return Err("control flow needs exactly one of `weights` and `expr`".into()),
            };
            (
                name.clone(),
                Generator::ControlFlow {
                    shape: shape(s)?,
                    choice,
                },
            )
        }
        BoxDoc::Query { name, a, b, c } => (
            name.clone(),
            Generator::Query {
                a: shape(a)?,
                b: shape(b)?,
                c: shape(c)?,
            },
        ),
    })
}

fn endpoint(s: &str, boxes: &BTreeMap<&str, usize>) -> Result<(Option<usize>, usize), String> {
    let (head, port) = s
        .rsplit_once('.')
        .ok_or_else(|| format!("endpoint `{s}` is not of the form NAME.PORT"))?;
    let port: usize = port.parse().map_err(|_| format!("bad port in `{s}`"))?;
    match head {
        "input" | "output" => Ok((None, port)),
        b => boxes
            .get(b)
            .map(|&i| (Some(i), port))
            .ok_or_else(|| format!("unknown box `{b}`")),
    }
}

pub fn parse_schedule(src: &str) -> Result<Schedule, FormatError> {
    let f: ScheduleFile = de(src)?;
    expect_kind(src, &f.kind, "schedule")?;
    let env = Env::new(src, schema_from_doc(&f.schema)?, &f.instances)?;
    let shapes = |names: &[String]| {
        names
            .iter()
            .map(|n| env.get(n).cloned().map_err(FormatError::plain))
            .collect::<Result<Vec<_>, _>>()
    };
    let mut s = Schedule::new(f.name.clone(), shapes(&f.inputs)?, shapes(&f.outputs)?);
    for b in &f.boxes {
        let (name, g) = generator_of(&env, b.get_ref()).map_err(|e| env.err(b.span(), e))?;
        if name == "input" || name == "output" || s.boxes.iter().any(|x| x.name == name) {
            return Err(env.err(
                b.span(),
                format!("box name `{name}` is reserved or repeated"),
            ));
        }
        s.add_box(name, g);
    }
    let index: BTreeMap<&str, usize> = s
        .boxes
        .iter()
        .enumerate()
        .map(|(i, b)| (b.name.as_str(), i))
        .collect();
    let mut wires = Vec::new();
    for w in &f.wires {
        let (a, b) = w.get_ref();
        let bad = |e: String| env.err(w.span(), e);
        let src_ep = match endpoint(a, &index).map_err(bad)? {
            (None, p) if a.starts_with("input.") => Source::Input(p),
            (Some(i), p) => Source::Box { index: i, port: p },
            _ => return Err(env.err(w.span(), format!("`{a}` cannot be a wire source"))),
        };
        let tgt_ep = match endpoint(b, &index).map_err(bad)? {
            (None, p) if b.starts_with("output.") => Target::Output(p),
            (Some(i), p) => Target::Box { index: i, port: p },
            _ => return Err(env.err(w.span(), format!("`{b}` cannot be a wire target"))),
        };
        wires.push(Wire {
            src: src_ep,
            tgt: tgt_ep,
        });
    }
    s.wires = wires;
    Ok(s)
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ExportError {
    #[error("box {0} uses a custom predicate, which has no text form")]
    CustomPredicate(String),
    #[error("box name `{0}` is reserved or repeated")]
    BoxName(String),
}

pub fn schedule_to_toml(s: &Schedule) -> Result<String, ExportError> {
    let mut pool = Pool::default();
    let inputs = s
        .inputs
        .iter()
        .enumerate()
        .map(|(i, x)| pool.name(x, &format!("in{i}")))
        .collect();
    let outputs = s
        .outputs
        .iter()
        .enumerate()
        .map(|(i, x)| pool.name(x, &format!("out{i}")))
        .collect();
    let mut boxes = Vec::new();
    for (i, b) in s.boxes.iter().enumerate() {
        let name = b.name.clone();
        if name == "input"
            || name == "output"
            || s.boxes[..i].iter().any(|x| x.name == name)
            || name.contains('.')
        {
            return Err(ExportError::BoxName(name));
        }
        let p = format!("{name}_");
        let doc = match &b.generator {
            Generator::Rewrite { rule } => BoxDoc::Rewrite {
                name,
                rule: rule_to_body(&mut pool, rule, &p),
            },
            Generator::Weaken { f } => BoxDoc::Weaken {
                name,
                f: pool.morphism(f, &format!("{p}B"), &format!("{p}A")),
            },
            Generator::Strengthen { f } => BoxDoc::Strengthen {
                name,
                f: pool.morphism(f, &format!("{p}A"), &format!("{p}B")),
            },
            Generator::Init { input, agent } => BoxDoc::Init {
                input: pool.name(input, &format!("{p}in")),
                agent: pool.morphism(agent, &format!("{p}A"), &format!("{p}X")),
                name,
            },
            Generator::Fail { shape, mode } => BoxDoc::Fail {
                shape: pool.name(shape, &format!("{p}A")),
                mode: match mode {
                    FailMode::Exception => "exception".into(),
                    FailMode::Empty => "empty".into(),
                },
                name,
            },
            Generator::ControlFlow { shape, choice } => {
                let shape = pool.name(shape, &format!("{p}A"));
                match choice {
                    Choice::Weights(w) => BoxDoc::ControlFlow {
                        name,
                        shape,
                        weights: Some(w.clone()),
                        expr: None,
                        arity: None,
                    },
                    Choice::Expr { arity, expr } => BoxDoc::ControlFlow {
                        name,
                        shape,
                        weights: None,
                        expr: Some(expr.to_string()),
                        arity: Some(*arity),
                    },
                    Choice::Custom { .. } => return Err(ExportError::CustomPredicate(name)),
                }
            }
            Generator::Query { a, b: bb, c } => BoxDoc::Query {
                a: pool.name(a, &format!("{p}A")),
                b: pool.name(bb, &format!("{p}B")),
                c: pool.name(c, &format!("{p}C")),
                name,
            },
        };
        boxes.push(Spanned::new(0..0, doc));
    }
    let src_name = |x: Source| match x {
        Source::Input(i) => format!("input.{i}"),
        Source::Box { index, port } => format!("{}.{port}", s.boxes[index].name),
    };
    let tgt_name = |x: Target| match x {
        Target::Output(i) => format!("output.{i}"),
        Target::Box { index, port } => format!("{}.{port}", s.boxes[index].name),
    };
    let wires = s
        .wires
        .iter()
        .map(|w| Spanned::new(0..0, (src_name(w.src), tgt_name(w.tgt))))
        .collect();
    let schema = s
        .inputs
        .first()
        .or(s.outputs.first())
        .map(|x| schema_to_doc(x.schema()))
        .unwrap_or(SchemaDoc {
            tables: Vec::new(),
            attr_types: Vec::new(),
            homs: Vec::new(),
            attrs: Vec::new(),
        });
    Ok(ser(&ScheduleFile {
        kind: "schedule".into(),
        name: s.name.clone(),
        schema,
        instances: pool.instances(),
        inputs,
        outputs,
        boxes,
        wires,
    }))
}

// ---------------------------------------------------------------------------
// Functors

pub fn parse_functor(src: &str) -> Result<SchemaFunctor, FormatError> {
    let f: FunctorFile = de(src)?;
    expect_kind(src, &f.kind, "functor")?;
    SchemaFunctor::new(
        f.name,
        schema_from_doc(&f.source)?,
        schema_from_doc(&f.target)?,
        f.tables,
        f.attr_types,
        f.homs,
        f.attrs,
    )
    .map_err(|e| FormatError::plain(e.to_string()))
}

pub fn functor_to_toml(f: &SchemaFunctor) -> String {
    ser(&FunctorFile {
        kind: "functor".into(),
        name: f.name.clone(),
        source: schema_to_doc(f.src()),
        target: schema_to_doc(f.tgt()),
        tables: f.table_map.clone(),
        attr_types: f.attr_type_map.clone(),
        homs: f.hom_map.clone(),
        attrs: f.attr_map.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const GRAPH: &str = r#"
kind = "instance"

[schema]
tables = ["V", "E"]
attr_types = [["Nat", "int"]]
homs = [["src", "E", "V"], ["tgt", "E", "V"]]
attrs = [["w", "E", "Nat"]]

[instance]
V = 2
E = [{ src = 0, tgt = 1, w = 5 }, { src = 1, tgt = 1, w = { var = 2 } }]
"#;

    #[test]
    fn instance_round_trip() {
        let x = parse_instance(GRAPH).unwrap();
        assert_eq!(x.part_counts(), &[2, 2]);
        assert_eq!(x.attr_by_name("w", 1), Some(&AttrValue::Var(2)));
        let text = instance_to_toml(&x);
        assert_eq!(parse_instance(&text).unwrap(), x);
        assert_eq!(document_kind(&text).unwrap(), "instance");
    }

    #[test]
    fn errors_carry_lines() {
        let bad = GRAPH.replace("V = 2", "V = 2\nQ = 1");
        let e = parse_instance(&bad).unwrap_err();
        assert!(e.message.contains("unknown table `Q`"), "{e}");
        assert!(e.line.is_some());
        let bad = GRAPH.replace("tables =", "tabels =");
        let e = parse_instance(&bad).unwrap_err();
        assert_eq!(e.line, Some(5), "{e}");
        let bad = GRAPH.replace("tgt = 1, w = 5", "tgt = 7, w = 5");
        assert!(parse_instance(&bad)
            .unwrap_err()
            .message
            .contains("out of range"));
        let bad = GRAPH.replace("w = 5", "w = 5, z = 1");
        assert!(parse_instance(&bad)
            .unwrap_err()
            .message
            .contains("unknown column `z`"));
    }

    #[test]
    fn schema_round_trip() {
        let s = parse_instance(GRAPH).unwrap().schema().clone();
        let text = schema_to_toml(&s);
        assert_eq!(*parse_schema(&text).unwrap(), *s);
        assert!(parse_schema(GRAPH).is_err());
    }

    #[test]
    fn morphism_vars_are_inferred() {
        let text = r#"
kind = "morphism"

[schema]
tables = ["V"]
attr_types = [["Nat", "int"]]
attrs = [["n", "V", "Nat"]]

[instances.A]
V = [{ n = { var = 0 } }]

[instances.X]
V = [{ n = 3 }, { n = 4 }]

[morphism]
dom = "A"
cod = "X"
components = { V = [1] }
"#;
        let f = parse_morphism(text).unwrap();
        assert_eq!(f.var_assignment()[&0], AttrValue::int(4));
        let again = parse_morphism(&morphism_to_toml(&f)).unwrap();
        assert_eq!(again, f);
        let bad = text.replace("V = [1]", "V = [5]");
        assert!(parse_morphism(&bad).is_err());
    }

    #[test]
    fn functor_round_trip() {
        let s = parse_instance(GRAPH).unwrap().schema().clone();
        let f = SchemaFunctor::identity(&s);
        let text = functor_to_toml(&f);
        assert_eq!(parse_functor(&text).unwrap(), f);
    }
}
