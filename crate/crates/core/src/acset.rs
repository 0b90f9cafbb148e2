// SPDX-License-Identifier: Apache-2.0
//! Instances of a schema: tables of dense parts, foreign-key columns and
//! typed attribute columns.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use crate::schema::{validate_schema, InvalidSchema, ScalarKind, Schema};

/// A concrete attribute value.
#[derive(Clone, Debug)]
pub enum Scalar {
    Int(i64),
    Float(f64),
    Str(Arc<str>),
    Bool(bool),
}

impl Scalar {
    pub fn kind(&self) -> ScalarKind {
        match self {
            Scalar::Int(_) => ScalarKind::Int,
            Scalar::Float(_) => ScalarKind::Float,
            Scalar::Str(_) => ScalarKind::String,
            Scalar::Bool(_) => ScalarKind::Bool,
        }
    }

    fn rank(&self) -> u8 {
        match self {
            Scalar::Int(_) => 0,
            Scalar::Float(_) => 1,
            Scalar::Str(_) => 2,
            Scalar::Bool(_) => 3,
        }
    }
}

// Floats compare by bit pattern so that scalars can be keys.
impl PartialEq for Scalar {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Scalar::Int(a), Scalar::Int(b)) => a == b,
            (Scalar::Float(a), Scalar::Float(b)) => a.to_bits() == b.to_bits(),
            (Scalar::Str(a), Scalar::Str(b)) => a == b,
            (Scalar::Bool(a), Scalar::Bool(b)) => a == b,
            _ => false,
        }
    }
}

impl Eq for Scalar {}

impl Hash for Scalar {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.rank().hash(state);
        match self {
            Scalar::Int(v) => v.hash(state),
            Scalar::Float(v) => v.to_bits().hash(state),
            Scalar::Str(v) => v.hash(state),
            Scalar::Bool(v) => v.hash(state),
        }
    }
}

impl Ord for Scalar {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Scalar::Int(a), Scalar::Int(b)) => a.cmp(b),
            (Scalar::Float(a), Scalar::Float(b)) => a.total_cmp(b),
            (Scalar::Str(a), Scalar::Str(b)) => a.cmp(b),
            (Scalar::Bool(a), Scalar::Bool(b)) => a.cmp(b),
            _ => self.rank().cmp(&other.rank()),
        }
    }
}

impl PartialOrd for Scalar {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Int(v) => write!(f, "{v}"),
            Scalar::Float(v) => write!(f, "{v:?}"),
            Scalar::Str(v) => write!(f, "{v:?}"),
            Scalar::Bool(v) => write!(f, "{v}"),
        }
    }
}

/// The content of one attribute cell: a concrete scalar, or a pattern
/// variable that a morphism out of this instance must bind.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AttrValue {
    Concrete(Scalar),
    Var(u32),
}

impl AttrValue {
    pub fn int(v: i64) -> Self {
        AttrValue::Concrete(Scalar::Int(v))
    }

    pub fn float(v: f64) -> Self {
        AttrValue::Concrete(Scalar::Float(v))
    }

    pub fn str(v: &str) -> Self {
        AttrValue::Concrete(Scalar::Str(Arc::from(v)))
    }

    pub fn bool(v: bool) -> Self {
        AttrValue::Concrete(Scalar::Bool(v))
    }

    pub fn as_concrete(&self) -> Option<&Scalar> {
        match self {
            AttrValue::Concrete(s) => Some(s),
            AttrValue::Var(_) => None,
        }
    }
}

impl fmt::Display for AttrValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AttrValue::Concrete(s) => write!(f, "{s}"),
            AttrValue::Var(v) => write!(f, "${v}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AcsetError {
    #[error("{0}")]
    InvalidSchema(String),
    #[error("schemas differ")]
    SchemaMismatch,
    #[error("unknown table {0}")]
    UnknownTable(String),
    #[error("unknown hom {0}")]
    UnknownHom(String),
    #[error("unknown attribute {0}")]
    UnknownAttr(String),
    #[error("hom {0} is not defined on table {1}")]
    HomNotOnTable(String, String),
    #[error("attribute {0} is not defined on table {1}")]
    AttrNotOnTable(String, String),
    #[error("missing value for {0}")]
    MissingValue(String),
    #[error("column {column} has length {got}, expected {expected}")]
    ColumnLength {
        column: String,
        expected: usize,
        got: usize,
    },
    #[error("{hom}[{part}] = {value} is out of range for table {table} ({count} parts)")]
    HomOutOfRange {
        hom: String,
        part: usize,
        value: usize,
        table: String,
        count: usize,
    },
    #[error("{attr}[{part}] has kind {got}, expected {expected}")]
    KindMismatch {
        attr: String,
        part: usize,
        expected: ScalarKind,
        got: ScalarKind,
    },
    #[error("part {part} of table {table} out of range")]
    PartOutOfRange { table: String, part: usize },
    #[error("{0}")]
    Invalid(String),
}

impl From<InvalidSchema> for AcsetError {
    fn from(e: InvalidSchema) -> Self {
        AcsetError::InvalidSchema(e.to_string())
    }
}

/// A database instance over a [`Schema`].
///
/// Parts of table `t` are the ids `0..nparts(t)`. Every hom column is a total
/// function into the target table and every attribute column a total
/// function into [`AttrValue`]s of the declared kind.
#[derive(Clone, Debug)]
pub struct ACSet {
    schema: Arc<Schema>,
    parts: Vec<usize>,
    homs: Vec<Vec<usize>>,
    attrs: Vec<Vec<AttrValue>>,
}

impl PartialEq for ACSet {
    fn eq(&self, other: &Self) -> bool {
        (Arc::ptr_eq(&self.schema, &other.schema) || self.schema == other.schema)
            && self.parts == other.parts
            && self.homs == other.homs
            && self.attrs == other.attrs
    }
}

impl Eq for ACSet {}

impl ACSet {
    /// The empty instance (the initial object) over a valid schema.
    pub fn new(schema: Arc<Schema>) -> Result<ACSet, AcsetError> {
        let v = validate_schema(&schema);
        if !v.is_empty() {
            return Err(InvalidSchema(v).into());
        }
        Ok(ACSet::empty_unchecked(schema))
    }

    pub(crate) fn empty_unchecked(schema: Arc<Schema>) -> ACSet {
        ACSet {
            parts: vec![0; schema.tables().len()],
            homs: vec![Vec::new(); schema.homs().len()],
            attrs: vec![Vec::new(); schema.attrs().len()],
            schema,
        }
    }

    /// Assembles an instance from raw columns, checking every invariant.
    pub fn from_columns(
        schema: Arc<Schema>,
        parts: Vec<usize>,
        homs: Vec<Vec<usize>>,
        attrs: Vec<Vec<AttrValue>>,
    ) -> Result<ACSet, AcsetError> {
        let v = validate_schema(&schema);
        if !v.is_empty() {
            return Err(InvalidSchema(v).into());
        }
        if parts.len() != schema.tables().len()
            || homs.len() != schema.homs().len()
            || attrs.len() != schema.attrs().len()
        {
            return Err(AcsetError::Invalid(
                "column count does not match schema".into(),
            ));
        }
        let x = ACSet {
            schema,
            parts,
            homs,
            attrs,
        };
        x.validate()?;
        Ok(x)
    }

    pub(crate) fn from_columns_unchecked(
        schema: Arc<Schema>,
        parts: Vec<usize>,
        homs: Vec<Vec<usize>>,
        attrs: Vec<Vec<AttrValue>>,
    ) -> ACSet {
        let x = ACSet {
            schema,
            parts,
            homs,
            attrs,
        };
        debug_assert!(x.validate().is_ok(), "{:?}", x.validate());
        x
    }

    /// Checks column lengths, hom ranges and attribute kinds.
    pub fn validate(&self) -> Result<(), AcsetError> {
        let s = &*self.schema;
        for (h, col) in self.homs.iter().enumerate() {
            let src = s.hom_src(h);
            let tgt = s.hom_tgt(h);
            if col.len() != self.parts[src] {
                return Err(AcsetError::ColumnLength {
                    column: s.homs()[h].name.clone(),
                    expected: self.parts[src],
                    got: col.len(),
                });
            }
            for (p, &v) in col.iter().enumerate() {
                if v >= self.parts[tgt] {
                    return Err(AcsetError::HomOutOfRange {
                        hom: s.homs()[h].name.clone(),
                        part: p,
                        value: v,
                        table: s.tables()[tgt].clone(),
                        count: self.parts[tgt],
                    });
                }
            }
        }
        for (a, col) in self.attrs.iter().enumerate() {
            let src = s.attr_src(a);
            if col.len() != self.parts[src] {
                return Err(AcsetError::ColumnLength {
                    column: s.attrs()[a].name.clone(),
                    expected: self.parts[src],
                    got: col.len(),
                });
            }
            let kind = s.attr_kind(a);
            for (p, v) in col.iter().enumerate() {
                if let AttrValue::Concrete(c) = v {
                    if c.kind() != kind {
                        return Err(AcsetError::KindMismatch {
                            attr: s.attrs()[a].name.clone(),
                            part: p,
                            expected: kind,
                            got: c.kind(),
                        });
                    }
                }
            }
        }
        Ok(())
    }

    pub fn schema(&self) -> &Arc<Schema> {
        &self.schema
    }

    pub fn same_schema(&self, other: &ACSet) -> bool {
        Arc::ptr_eq(&self.schema, &other.schema) || *self.schema == *other.schema
    }

    pub fn nparts(&self, table: usize) -> usize {
        self.parts[table]
    }

    pub fn part_counts(&self) -> &[usize] {
        &self.parts
    }

    pub fn total_parts(&self) -> usize {
        self.parts.iter().sum()
    }

    /// Part count by table name; unknown names count as zero.
    pub fn count(&self, table: &str) -> usize {
        self.schema.table_index(table).map_or(0, |t| self.parts[t])
    }

    pub fn hom(&self, h: usize, part: usize) -> usize {
        self.homs[h][part]
    }

    pub fn hom_column(&self, h: usize) -> &[usize] {
        &self.homs[h]
    }

    pub fn attr(&self, a: usize, part: usize) -> &AttrValue {
        &self.attrs[a][part]
    }

    pub fn attr_column(&self, a: usize) -> &[AttrValue] {
        &self.attrs[a]
    }

    /// Looks up a hom value by name.
    pub fn hom_by_name(&self, hom: &str, part: usize) -> Option<usize> {
        let h = self.schema.hom_index(hom)?;
        self.homs[h].get(part).copied()
    }

    pub fn attr_by_name(&self, attr: &str, part: usize) -> Option<&AttrValue> {
        let a = self.schema.attr_index(attr)?;
        self.attrs[a].get(part)
    }

    /// Appends a part to `table`. Every hom and attribute out of the table
    /// must be given exactly once.
    pub fn add_part(
        &mut self,
        table: &str,
        homs: &[(&str, usize)],
        attrs: &[(&str, AttrValue)],
    ) -> Result<usize, AcsetError> {
        let s = Arc::clone(&self.schema);
        let t = s
            .table_index(table)
            .ok_or_else(|| AcsetError::UnknownTable(table.into()))?;
        for (name, _) in homs {
            let h = s
                .hom_index(name)
                .ok_or_else(|| AcsetError::UnknownHom((*name).into()))?;
            if s.hom_src(h) != t {
                return Err(AcsetError::HomNotOnTable((*name).into(), table.into()));
            }
        }
        for (name, _) in attrs {
            let a = s
                .attr_index(name)
                .ok_or_else(|| AcsetError::UnknownAttr((*name).into()))?;
            if s.attr_src(a) != t {
                return Err(AcsetError::AttrNotOnTable((*name).into(), table.into()));
            }
        }
        let mut hom_vals = Vec::new();
        for h in s.homs_from(t) {
            let name = &s.homs()[h].name;
            let v = homs
                .iter()
                .find(|(n, _)| n == name)
                .map(|(_, v)| *v)
                .ok_or_else(|| AcsetError::MissingValue(name.clone()))?;
            let tgt = s.hom_tgt(h);
            if v >= self.parts[tgt] {
                return Err(AcsetError::HomOutOfRange {
                    hom: name.clone(),
                    part: self.parts[t],
                    value: v,
                    table: s.tables()[tgt].clone(),
                    count: self.parts[tgt],
                });
            }
            hom_vals.push((h, v));
        }
        let mut attr_vals = Vec::new();
        for a in s.attrs_from(t) {
            let name = &s.attrs()[a].name;
            let v = attrs
                .iter()
                .find(|(n, _)| n == name)
                .map(|(_, v)| v.clone())
                .ok_or_else(|| AcsetError::MissingValue(name.clone()))?;
            if let AttrValue::Concrete(c) = &v {
                if c.kind() != s.attr_kind(a) {
                    return Err(AcsetError::KindMismatch {
                        attr: name.clone(),
                        part: self.parts[t],
                        expected: s.attr_kind(a),
                        got: c.kind(),
                    });
                }
            }
            attr_vals.push((a, v));
        }
        for (h, v) in hom_vals {
            self.homs[h].push(v);
        }
        for (a, v) in attr_vals {
            self.attrs[a].push(v);
        }
        self.parts[t] += 1;
        Ok(self.parts[t] - 1)
    }

    /// Overwrites one attribute cell.
    pub fn set_attr(
        &mut self,
        attr: &str,
        part: usize,
        value: AttrValue,
    ) -> Result<(), AcsetError> {
        let a = self
            .schema
            .attr_index(attr)
            .ok_or_else(|| AcsetError::UnknownAttr(attr.into()))?;
        let kind = self.schema.attr_kind(a);
        if let AttrValue::Concrete(c) = &value {
            if c.kind() != kind {
                return Err(AcsetError::KindMismatch {
                    attr: attr.into(),
                    part,
                    expected: kind,
                    got: c.kind(),
                });
            }
        }
        let cell = self.attrs[a]
            .get_mut(part)
            .ok_or_else(|| AcsetError::PartOutOfRange {
                table: self.schema.attrs()[a].src.clone(),
                part,
            })?;
        *cell = value;
        Ok(())
    }

    /// True when no attribute cell holds a variable.
    pub fn is_ground(&self) -> bool {
        self.attrs
            .iter()
            .all(|c| c.iter().all(|v| matches!(v, AttrValue::Concrete(_))))
    }

    pub fn vars(&self) -> BTreeSet<u32> {
        self.attrs
            .iter()
            .flatten()
            .filter_map(|v| match v {
                AttrValue::Var(x) => Some(*x),
                _ => None,
            })
            .collect()
    }

    /// Replaces variables by the values `f` gives them; unmapped variables
    /// stay as they are.
    pub fn substitute(&self, f: impl Fn(u32) -> Option<AttrValue>) -> ACSet {
        let attrs = self
            .attrs
            .iter()
            .map(|col| {
                col.iter()
                    .map(|v| match v {
                        AttrValue::Var(x) => f(*x).unwrap_or_else(|| v.clone()),
                        c => c.clone(),
                    })
                    .collect()
            })
            .collect();
        ACSet {
            schema: Arc::clone(&self.schema),
            parts: self.parts.clone(),
            homs: self.homs.clone(),
            attrs,
        }
    }

    /// The sub-instance on the parts marked in `keep`, renumbered in order,
    /// together with the old id of every kept part. `keep` must be closed
    /// under homs.
    pub fn induced(&self, keep: &[Vec<bool>]) -> (ACSet, Vec<Vec<usize>>) {
        let s = &self.schema;
        let nt = s.tables().len();
        let mut new_id = Vec::with_capacity(nt);
        let mut old_id: Vec<Vec<usize>> = Vec::with_capacity(nt);
        for t in 0..nt {
            let mut ids = vec![usize::MAX; self.parts[t]];
            let mut olds = Vec::new();
            for p in 0..self.parts[t] {
                if keep[t][p] {
                    ids[p] = olds.len();
                    olds.push(p);
                }
            }
            new_id.push(ids);
            old_id.push(olds);
        }
        let homs = (0..s.homs().len())
            .map(|h| {
                let (src, tgt) = (s.hom_src(h), s.hom_tgt(h));
                old_id[src]
                    .iter()
                    .map(|&p| {
                        let v = new_id[tgt][self.homs[h][p]];
                        assert!(v != usize::MAX, "kept part points at a dropped part");
                        v
                    })
                    .collect()
            })
            .collect();
        let attrs = (0..s.attrs().len())
            .map(|a| {
                old_id[s.attr_src(a)]
                    .iter()
                    .map(|&p| self.attrs[a][p].clone())
                    .collect()
            })
            .collect();
        let sub = ACSet {
            schema: Arc::clone(s),
            parts: old_id.iter().map(Vec::len).collect(),
            homs,
            attrs,
        };
        (sub, old_id)
    }

    /// Parts of table `t` that some hom points at `part` from, as
    /// `(hom, source part)` pairs.
    pub fn incident(&self, table: usize, part: usize) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (h, col) in self.homs.iter().enumerate() {
            if self.schema.hom_tgt(h) != table {
                continue;
            }
            for (p, &v) in col.iter().enumerate() {
                if v == part {
                    out.push((h, p));
                }
            }
        }
        out
    }
}

impl fmt::Display for ACSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = &*self.schema;
        write!(f, "{{")?;
        let mut first = true;
        for (t, name) in s.tables().iter().enumerate() {
            if self.parts[t] == 0 {
                continue;
            }
            if !first {
                write!(f, "; ")?;
            }
            first = false;
            write!(f, "{name}:{}", self.parts[t])?;
            for h in s.homs_from(t) {
                write!(f, " {}={:?}", s.homs()[h].name, self.homs[h])?;
            }
            for a in s.attrs_from(t) {
                let vals: Vec<String> = self.attrs[a].iter().map(ToString::to_string).collect();
                write!(f, " {}=[{}]", s.attrs()[a].name, vals.join(","))?;
            }
        }
        write!(f, "}}")
    }
}
