// SPDX-License-Identifier: Apache-2.0
//! Schemas for attributed C-sets.
//!
//! A schema is a finitely presented *free* category whose objects are split
//! into tables and attribute types. Generating arrows between tables are
//! foreign keys ([`HomDecl`]); arrows from a table to an attribute type are
//! typed attribute columns ([`AttrDecl`]). There are no path equations.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

/// The scalar domain of an attribute type.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScalarKind {
    Int,
    Float,
    String,
    Bool,
}

impl fmt::Display for ScalarKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ScalarKind::Int => "int",
            ScalarKind::Float => "float",
            ScalarKind::String => "string",
            ScalarKind::Bool => "bool",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AttrTypeDecl {
    pub name: String,
    pub kind: ScalarKind,
}

/// A foreign key `name: src -> tgt` between two tables.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HomDecl {
    pub name: String,
    pub src: String,
    pub tgt: String,
}

/// An attribute column `name: src -> tgt` from a table to an attribute type.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AttrDecl {
    pub name: String,
    pub src: String,
    pub tgt: String,
}

/// A schema declaration together with resolved endpoint indices.
///
/// Construction never fails; use [`validate_schema`] (or [`Schema::checked`])
/// to find out whether the declaration is well formed. Instances can only be
/// built over schemas that validate.
#[derive(Clone, Debug)]
pub struct Schema {
    tables: Vec<String>,
    attr_types: Vec<AttrTypeDecl>,
    homs: Vec<HomDecl>,
    attrs: Vec<AttrDecl>,
    hom_ends: Vec<(Option<usize>, Option<usize>)>,
    attr_ends: Vec<(Option<usize>, Option<usize>)>,
}

impl PartialEq for Schema {
    fn eq(&self, other: &Self) -> bool {
        self.tables == other.tables
            && self.attr_types == other.attr_types
            && self.homs == other.homs
            && self.attrs == other.attrs
    }
}

impl Eq for Schema {}

/// One broken schema invariant, naming the offending element.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SchemaViolation {
    pub element: String,
    pub message: String,
}

impl fmt::Display for SchemaViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.element, self.message)
    }
}

#[derive(Debug, thiserror::Error)]
#[error("invalid schema: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
pub struct InvalidSchema(pub Vec<SchemaViolation>);

impl Schema {
    pub fn new(
        tables: Vec<String>,
        attr_types: Vec<AttrTypeDecl>,
        homs: Vec<HomDecl>,
        attrs: Vec<AttrDecl>,
    ) -> Schema {
        let find_table = |n: &str| tables.iter().position(|t| t == n);
        let find_type = |n: &str| attr_types.iter().position(|t| t.name == n);
        let hom_ends = homs
            .iter()
            .map(|h| (find_table(&h.src), find_table(&h.tgt)))
            .collect();
        let attr_ends = attrs
            .iter()
            .map(|a| (find_table(&a.src), find_type(&a.tgt)))
            .collect();
        Schema {
            tables,
            attr_types,
            homs,
            attrs,
            hom_ends,
            attr_ends,
        }
    }

    /// Builds a schema and rejects it unless it validates.
    pub fn checked(
        tables: Vec<String>,
        attr_types: Vec<AttrTypeDecl>,
        homs: Vec<HomDecl>,
        attrs: Vec<AttrDecl>,
    ) -> Result<Schema, InvalidSchema> {
        let s = Schema::new(tables, attr_types, homs, attrs);
        let v = validate_schema(&s);
        if v.is_empty() {
            Ok(s)
        } else {
            Err(InvalidSchema(v))
        }
    }

    /// Shorthand builder used heavily in tests and bundled models.
    ///
    /// `homs` and `attrs` are `(name, src, tgt)` triples.
    pub fn build(
        tables: &[&str],
        attr_types: &[(&str, ScalarKind)],
        homs: &[(&str, &str, &str)],
        attrs: &[(&str, &str, &str)],
    ) -> Result<Schema, InvalidSchema> {
        Schema::checked(
            tables.iter().map(|s| s.to_string()).collect(),
            attr_types
                .iter()
                .map(|(n, k)| AttrTypeDecl {
                    name: n.to_string(),
                    kind: *k,
                })
                .collect(),
            homs.iter()
                .map(|(n, s, t)| HomDecl {
                    name: n.to_string(),
                    src: s.to_string(),
                    tgt: t.to_string(),
                })
                .collect(),
            attrs
                .iter()
                .map(|(n, s, t)| AttrDecl {
                    name: n.to_string(),
                    src: s.to_string(),
                    tgt: t.to_string(),
                })
                .collect(),
        )
    }

    pub fn tables(&self) -> &[String] {
        &self.tables
    }

    pub fn attr_types(&self) -> &[AttrTypeDecl] {
        &self.attr_types
    }

    pub fn homs(&self) -> &[HomDecl] {
        &self.homs
    }

    pub fn attrs(&self) -> &[AttrDecl] {
        &self.attrs
    }

    pub fn table_index(&self, name: &str) -> Option<usize> {
        self.tables.iter().position(|t| t == name)
    }

    pub fn attr_type_index(&self, name: &str) -> Option<usize> {
        self.attr_types.iter().position(|t| t.name == name)
    }

    pub fn hom_index(&self, name: &str) -> Option<usize> {
        self.homs.iter().position(|h| h.name == name)
    }

    pub fn attr_index(&self, name: &str) -> Option<usize> {
        self.attrs.iter().position(|a| a.name == name)
    }

    /// Source table of hom `h`. Panics on an unvalidated schema.
    pub fn hom_src(&self, h: usize) -> usize {
        self.hom_ends[h].0.expect("hom source resolved")
    }

    pub fn hom_tgt(&self, h: usize) -> usize {
        self.hom_ends[h].1.expect("hom target resolved")
    }

    pub fn attr_src(&self, a: usize) -> usize {
        self.attr_ends[a].0.expect("attr source resolved")
    }

    /// The scalar kind stored in attribute column `a`.
    pub fn attr_kind(&self, a: usize) -> ScalarKind {
        self.attr_types[self.attr_ends[a].1.expect("attr type resolved")].kind
    }

    /// Indices of homs whose source is table `t`.
    pub fn homs_from(&self, t: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.homs.len()).filter(move |&h| self.hom_ends[h].0 == Some(t))
    }

    pub fn attrs_from(&self, t: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.attrs.len()).filter(move |&a| self.attr_ends[a].0 == Some(t))
    }
}

/// Lists every violated schema invariant. An empty list means the schema is
/// well formed.
pub fn validate_schema(s: &Schema) -> Vec<SchemaViolation> {
    let mut out = Vec::new();
    let mut push =
        |element: String, message: String| out.push(SchemaViolation { element, message });

    let mut seen = HashSet::new();
    for t in &s.tables {
        if !seen.insert(t.as_str()) {
            push(format!("table {t}"), "duplicate table name".into());
        }
    }
    let mut seen_types = HashSet::new();
    for t in &s.attr_types {
        if !seen_types.insert(t.name.as_str()) {
            push(
                format!("attr_type {}", t.name),
                "duplicate attribute type name".into(),
            );
        }
        if seen.contains(t.name.as_str()) {
            push(
                format!("attr_type {}", t.name),
                "name is used by both a table and an attribute type".into(),
            );
        }
    }
    let mut seen_homs = HashSet::new();
    for (i, h) in s.homs.iter().enumerate() {
        if !seen_homs.insert(h.name.as_str()) {
            push(format!("hom {}", h.name), "duplicate hom name".into());
        }
        let (src, tgt) = s.hom_ends[i];
        if src.is_none() {
            push(
                format!("hom {}", h.name),
                format!("source {} is not a table", h.src),
            );
        }
        if tgt.is_none() {
            let msg = if s.attr_type_index(&h.tgt).is_some() {
                format!(
                    "target {} is an attribute type; homs must target tables",
                    h.tgt
                )
            } else {
                format!("target {} is not a table", h.tgt)
            };
            push(format!("hom {}", h.name), msg);
        }
    }
    let mut seen_attrs = HashSet::new();
    for (i, a) in s.attrs.iter().enumerate() {
        if !seen_attrs.insert(a.name.as_str()) {
            push(
                format!("attr {}", a.name),
                "duplicate attribute name".into(),
            );
        }
        if seen_homs.contains(a.name.as_str()) {
            push(
                format!("attr {}", a.name),
                "name is used by both a hom and an attribute".into(),
            );
        }
        let (src, tgt) = s.attr_ends[i];
        if src.is_none() {
            push(
                format!("attr {}", a.name),
                format!("source {} is not a table", a.src),
            );
        }
        if tgt.is_none() {
            let msg = if s.table_index(&a.tgt).is_some() {
                format!(
                    "target {} is a table; attributes must target attribute types",
                    a.tgt
                )
            } else {
                format!("target {} is not an attribute type", a.tgt)
            };
            push(format!("attr {}", a.name), msg);
        }
    }
    out
}
