// SPDX-License-Identifier: Apache-2.0
//! Backtracking homomorphism search between attributed C-sets.
//!
//! Parts of the pattern are visited table by table, with tables that are
//! only hom *sources* first, so that assigning a part immediately fixes the
//! images of everything it points at. Each assignment propagates along the
//! pattern's homs and checks attribute cells, binding pattern variables on
//! first use. The final list is sorted lexicographically by components so
//! the output order does not depend on the visiting order.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::acset::{ACSet, AttrValue};
use crate::morphism::{morphism_predicates, ACSetMorphism};

#[derive(Clone, Debug, Default)]
pub struct HomOptions {
    pub monic: bool,
    /// `(table, pattern part, target part)` triples the result must extend.
    pub forced: Vec<(usize, usize, usize)>,
}

impl HomOptions {
    pub fn monic() -> Self {
        HomOptions {
            monic: true,
            forced: Vec::new(),
        }
    }

    pub fn force(mut self, table: usize, part: usize, value: usize) -> Self {
        self.forced.push((table, part, value));
        self
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum HomSearchError {
    #[error("pattern and target have different schemas")]
    SchemaMismatch,
    #[error("forced assignment ({table}, {part}) -> {value} is out of range")]
    ForcedOutOfRange {
        table: usize,
        part: usize,
        value: usize,
    },
}

enum Undo {
    Part(usize, usize),
    Var(u32),
}

struct Search<'a> {
    pat: &'a ACSet,
    tgt: &'a ACSet,
    monic: bool,
    assign: Vec<Vec<Option<usize>>>,
    used: Vec<Vec<bool>>,
    binding: BTreeMap<u32, AttrValue>,
    trail: Vec<Undo>,
}

impl<'a> Search<'a> {
    fn new(pat: &'a ACSet, tgt: &'a ACSet, monic: bool) -> Self {
        let n = pat.schema().tables().len();
        Search {
            pat,
            tgt,
            monic,
            assign: (0..n).map(|t| vec![None; pat.nparts(t)]).collect(),
            used: (0..n).map(|t| vec![false; tgt.nparts(t)]).collect(),
            binding: BTreeMap::new(),
            trail: Vec::new(),
        }
    }

    /// Assigns `part -> value` in `table` and propagates along homs.
    /// On `false` the caller must roll the trail back.
    fn assign(&mut self, table: usize, part: usize, value: usize) -> bool {
        if let Some(v) = self.assign[table][part] {
            return v == value;
        }
        if self.monic && self.used[table][value] {
            return false;
        }
        let schema = Arc::clone(self.pat.schema());
        for a in schema.attrs_from(table) {
            let want = self.tgt.attr(a, value);
            match self.pat.attr(a, part) {
                AttrValue::Concrete(_) => {
                    if self.pat.attr(a, part) != want {
                        return false;
                    }
                }
                AttrValue::Var(x) => match self.binding.get(x) {
                    Some(b) => {
                        if b != want {
                            return false;
                        }
                    }
                    None => {
                        self.binding.insert(*x, want.clone());
                        self.trail.push(Undo::Var(*x));
                    }
                },
            }
        }
        self.assign[table][part] = Some(value);
        self.used[table][value] = true;
        self.trail.push(Undo::Part(table, part));
        for h in schema.homs_from(table) {
            let t2 = schema.hom_tgt(h);
            let (p2, v2) = (self.pat.hom(h, part), self.tgt.hom(h, value));
            if !self.assign(t2, p2, v2) {
                return false;
            }
        }
        true
    }

    fn rollback(&mut self, mark: usize) {
        while self.trail.len() > mark {
            match self.trail.pop().unwrap() {
                Undo::Part(t, p) => {
                    let v = self.assign[t][p].take().unwrap();
                    self.used[t][v] = false;
                }
                Undo::Var(x) => {
                    self.binding.remove(&x);
                }
            }
        }
    }

    fn run(
        &mut self,
        order: &[(usize, usize)],
        out: &mut Vec<(Vec<Vec<usize>>, BTreeMap<u32, AttrValue>)>,
    ) {
        let Some((&(t, p), rest)) = order.split_first() else {
            let comps = self
                .assign
                .iter()
                .map(|c| c.iter().map(|v| v.expect("complete assignment")).collect())
                .collect();
            out.push((comps, self.binding.clone()));
            return;
        };
        if self.assign[t][p].is_some() {
            self.run(rest, out);
            return;
        }
        for v in 0..self.tgt.nparts(t) {
            let mark = self.trail.len();
            if self.assign(t, p, v) {
                self.run(rest, out);
            }
            self.rollback(mark);
        }
    }
}

/// Tables ordered so that hom sources come before hom targets where the
/// hom graph allows it; cycles fall back to schema order.
fn visit_order(pat: &ACSet) -> Vec<usize> {
    let s = pat.schema();
    let n = s.tables().len();
    let mut indeg = vec![0usize; n];
    for h in 0..s.homs().len() {
        if s.hom_src(h) != s.hom_tgt(h) {
            indeg[s.hom_tgt(h)] += 1;
        }
    }
    let mut order = Vec::with_capacity(n);
    let mut done = vec![false; n];
    loop {
        let Some(t) = (0..n).find(|&t| !done[t] && indeg[t] == 0) else {
            break;
        };
        done[t] = true;
        order.push(t);
        for h in s.homs_from(t) {
            if s.hom_tgt(h) != t {
                indeg[s.hom_tgt(h)] -= 1;
            }
        }
    }
    order.extend((0..n).filter(|&t| !done[t]));
    order
}

/// All natural morphisms `pattern -> target` extending `opts.forced`, in
/// lexicographic order of their components (table order, then part id).
pub fn homomorphisms(
    pattern: &Arc<ACSet>,
    target: &Arc<ACSet>,
    opts: &HomOptions,
) -> Result<Vec<ACSetMorphism>, HomSearchError> {
    if !pattern.same_schema(target) {
        return Err(HomSearchError::SchemaMismatch);
    }
    for &(table, part, value) in &opts.forced {
        let n = pattern.schema().tables().len();
        if table >= n || part >= pattern.nparts(table) || value >= target.nparts(table) {
            return Err(HomSearchError::ForcedOutOfRange { table, part, value });
        }
    }
    let mut search = Search::new(pattern, target, opts.monic);
    for &(table, part, value) in &opts.forced {
        if !search.assign(table, part, value) {
            return Ok(Vec::new());
        }
    }
    let order: Vec<(usize, usize)> = visit_order(pattern)
        .into_iter()
        .flat_map(|t| (0..pattern.nparts(t)).map(move |p| (t, p)))
        .collect();
    let mut raw = Vec::new();
    search.run(&order, &mut raw);
    raw.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(raw
        .into_iter()
        .map(|(comps, vars)| {
            ACSetMorphism::new_unchecked(Arc::clone(pattern), Arc::clone(target), comps, vars)
        })
        .collect())
}

/// Some isomorphism `a -> b`, if one exists.
pub fn find_isomorphism(a: &Arc<ACSet>, b: &Arc<ACSet>) -> Option<ACSetMorphism> {
    if !a.same_schema(b) || a.part_counts() != b.part_counts() || a.vars().len() != b.vars().len() {
        return None;
    }
    homomorphisms(a, b, &HomOptions::monic())
        .ok()?
        .into_iter()
        .find(|f| morphism_predicates(f).iso)
}

pub fn is_isomorphic(a: &Arc<ACSet>, b: &Arc<ACSet>) -> bool {
    find_isomorphism(a, b).is_some()
}
