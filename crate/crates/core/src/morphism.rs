// SPDX-License-Identifier: Apache-2.0
//! Morphisms of attributed C-sets.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::acset::{ACSet, AttrValue};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MorphismError {
    #[error("domain and codomain have different schemas")]
    SchemaMismatch,
    #[error("component for table {table} has length {got}, expected {expected}")]
    ComponentLength {
        table: String,
        expected: usize,
        got: usize,
    },
    #[error("component {table}[{part}] = {value} is out of range")]
    OutOfRange {
        table: String,
        part: usize,
        value: usize,
    },
    #[error("morphism is not natural")]
    NotNatural,
    #[error("cannot compose: codomain of the first map is not the domain of the second")]
    NotComposable,
    #[error("variable ${0} has no assignment")]
    UnassignedVar(u32),
}

/// A natural transformation `dom -> cod` between instances of one schema:
/// one function per table plus an assignment of the domain's attribute
/// variables to values of the codomain.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ACSetMorphism {
    dom: Arc<ACSet>,
    cod: Arc<ACSet>,
    components: Vec<Vec<usize>>,
    vars: BTreeMap<u32, AttrValue>,
}

/// Structural predicates of a morphism.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MorphismPredicates {
    pub mono: bool,
    pub iso: bool,
    /// Every domain variable is bound to a concrete value.
    pub total_ground: bool,
}

impl ACSetMorphism {
    /// Checks shapes and ranges but not naturality; see [`is_natural`].
    pub fn raw(
        dom: Arc<ACSet>,
        cod: Arc<ACSet>,
        components: Vec<Vec<usize>>,
        vars: BTreeMap<u32, AttrValue>,
    ) -> Result<Self, MorphismError> {
        if !dom.same_schema(&cod) {
            return Err(MorphismError::SchemaMismatch);
        }
        let tables = dom.schema().tables();
        if components.len() != tables.len() {
            return Err(MorphismError::ComponentLength {
                table: "<all>".into(),
                expected: tables.len(),
                got: components.len(),
            });
        }
        for (t, comp) in components.iter().enumerate() {
            if comp.len() != dom.nparts(t) {
                return Err(MorphismError::ComponentLength {
                    table: tables[t].clone(),
                    expected: dom.nparts(t),
                    got: comp.len(),
                });
            }
            if let Some((p, &v)) = comp.iter().enumerate().find(|(_, &v)| v >= cod.nparts(t)) {
                return Err(MorphismError::OutOfRange {
                    table: tables[t].clone(),
                    part: p,
                    value: v,
                });
            }
        }
        Ok(ACSetMorphism {
            dom,
            cod,
            components,
            vars,
        })
    }

    /// Builds a morphism and requires it to be natural.
    pub fn new(
        dom: Arc<ACSet>,
        cod: Arc<ACSet>,
        components: Vec<Vec<usize>>,
        vars: BTreeMap<u32, AttrValue>,
    ) -> Result<Self, MorphismError> {
        let f = Self::raw(dom, cod, components, vars)?;
        if is_natural(&f)? {
            Ok(f)
        } else {
            Err(MorphismError::NotNatural)
        }
    }

    /// Builds a natural morphism from its components, binding every
    /// variable of `dom` to the cell it lands on.
    pub fn inferred(
        dom: Arc<ACSet>,
        cod: Arc<ACSet>,
        components: Vec<Vec<usize>>,
    ) -> Result<Self, MorphismError> {
        let f = Self::raw(dom, cod, components, BTreeMap::new())?;
        let s = f.dom.schema();
        let mut vars = BTreeMap::new();
        for a in 0..s.attrs().len() {
            let t = s.attr_src(a);
            for p in 0..f.dom.nparts(t) {
                if let AttrValue::Var(v) = f.dom.attr(a, p) {
                    let val = f.cod.attr(a, f.components[t][p]);
                    if vars.insert(*v, val.clone()).is_some_and(|old| old != *val) {
                        return Err(MorphismError::NotNatural);
                    }
                }
            }
        }
        Self::new(f.dom, f.cod, f.components, vars)
    }

    pub(crate) fn new_unchecked(
        dom: Arc<ACSet>,
        cod: Arc<ACSet>,
        components: Vec<Vec<usize>>,
        vars: BTreeMap<u32, AttrValue>,
    ) -> Self {
        let f = ACSetMorphism {
            dom,
            cod,
            components,
            vars,
        };
        debug_assert!(
            is_natural(&f).unwrap_or(false),
            "unnatural morphism built internally"
        );
        f
    }

    pub fn identity(x: &Arc<ACSet>) -> Self {
        let components = (0..x.schema().tables().len())
            .map(|t| (0..x.nparts(t)).collect())
            .collect();
        let vars = x
            .vars()
            .into_iter()
            .map(|v| (v, AttrValue::Var(v)))
            .collect();
        ACSetMorphism {
            dom: Arc::clone(x),
            cod: Arc::clone(x),
            components,
            vars,
        }
    }

    /// The unique morphism out of the empty instance.
    pub fn from_initial(x: &Arc<ACSet>) -> Self {
        let empty = Arc::new(ACSet::empty_unchecked(Arc::clone(x.schema())));
        ACSetMorphism {
            components: vec![Vec::new(); x.schema().tables().len()],
            dom: empty,
            cod: Arc::clone(x),
            vars: BTreeMap::new(),
        }
    }

    pub fn dom(&self) -> &Arc<ACSet> {
        &self.dom
    }

    pub fn cod(&self) -> &Arc<ACSet> {
        &self.cod
    }

    pub fn components(&self) -> &[Vec<usize>] {
        &self.components
    }

    pub fn component(&self, table: usize) -> &[usize] {
        &self.components[table]
    }

    pub fn apply(&self, table: usize, part: usize) -> usize {
        self.components[table][part]
    }

    pub fn var_assignment(&self) -> &BTreeMap<u32, AttrValue> {
        &self.vars
    }

    /// Pushes a domain attribute value along the variable assignment.
    pub fn subst(&self, v: &AttrValue) -> Option<AttrValue> {
        match v {
            AttrValue::Concrete(_) => Some(v.clone()),
            AttrValue::Var(x) => self.vars.get(x).cloned(),
        }
    }

    /// Diagrammatic composite `self ; g`.
    pub fn compose(&self, g: &ACSetMorphism) -> Result<ACSetMorphism, MorphismError> {
        if !(Arc::ptr_eq(&self.cod, &g.dom) || self.cod == g.dom) {
            return Err(MorphismError::NotComposable);
        }
        let components = self
            .components
            .iter()
            .enumerate()
            .map(|(t, c)| c.iter().map(|&p| g.components[t][p]).collect())
            .collect();
        let mut vars = BTreeMap::new();
        for (&v, val) in &self.vars {
            let out = g.subst(val).ok_or(match val {
                AttrValue::Var(w) => MorphismError::UnassignedVar(*w),
                AttrValue::Concrete(_) => unreachable!(),
            })?;
            vars.insert(v, out);
        }
        Ok(ACSetMorphism {
            dom: Arc::clone(&self.dom),
            cod: Arc::clone(&g.cod),
            components,
            vars,
        })
    }
}

/// True iff every hom square commutes and every attribute cell is carried
/// to the matching cell by the variable assignment.
pub fn is_natural(f: &ACSetMorphism) -> Result<bool, MorphismError> {
    let (dom, cod) = (&*f.dom, &*f.cod);
    if !dom.same_schema(cod) {
        return Err(MorphismError::SchemaMismatch);
    }
    let s = dom.schema();
    for h in 0..s.homs().len() {
        let (src, tgt) = (s.hom_src(h), s.hom_tgt(h));
        for p in 0..dom.nparts(src) {
            if f.components[tgt][dom.hom(h, p)] != cod.hom(h, f.components[src][p]) {
                return Ok(false);
            }
        }
    }
    for a in 0..s.attrs().len() {
        let src = s.attr_src(a);
        for p in 0..dom.nparts(src) {
            match f.subst(dom.attr(a, p)) {
                Some(v) if &v == cod.attr(a, f.components[src][p]) => {}
                _ => return Ok(false),
            }
        }
    }
    Ok(true)
}

pub fn morphism_predicates(f: &ACSetMorphism) -> MorphismPredicates {
    let mut mono = true;
    let mut bijective = true;
    for (t, comp) in f.components.iter().enumerate() {
        let mut seen = vec![false; f.cod.nparts(t)];
        for &v in comp {
            if std::mem::replace(&mut seen[v], true) {
                mono = false;
            }
        }
        if !seen.iter().all(|&b| b) {
            bijective = false;
        }
    }
    bijective &= mono;
    let total_ground = f
        .dom
        .vars()
        .iter()
        .all(|v| matches!(f.vars.get(v), Some(AttrValue::Concrete(_))));
    // Invertible on values: domain variables go bijectively onto codomain
    // variables, and nothing else needs inverting.
    let dom_vars = f.dom.vars();
    let cod_vars = f.cod.vars();
    let mut image = std::collections::BTreeSet::new();
    let mut vars_invertible = true;
    for v in &dom_vars {
        match f.vars.get(v) {
            Some(AttrValue::Var(w)) => {
                if !image.insert(*w) {
                    vars_invertible = false;
                }
            }
            _ => vars_invertible = false,
        }
    }
    vars_invertible &= image == cod_vars;
    MorphismPredicates {
        mono,
        iso: bijective && vars_invertible,
        total_ground,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schema::{ScalarKind, Schema};

    fn graph() -> Arc<crate::schema::Schema> {
        Arc::new(
            Schema::build(
                &["V", "E"],
                &[],
                &[("src", "E", "V"), ("tgt", "E", "V")],
                &[],
            )
            .unwrap(),
        )
    }

    fn cycle(n: usize) -> Arc<ACSet> {
        let mut g = ACSet::new(graph()).unwrap();
        for _ in 0..n {
            g.add_part("V", &[], &[]).unwrap();
        }
        for i in 0..n {
            g.add_part("E", &[("src", i), ("tgt", (i + 1) % n)], &[])
                .unwrap();
        }
        Arc::new(g)
    }

    #[test]
    fn identity_is_natural_and_iso() {
        let c = cycle(3);
        let id = ACSetMorphism::identity(&c);
        assert!(is_natural(&id).unwrap());
        let p = morphism_predicates(&id);
        assert!(p.mono && p.iso);
    }

    #[test]
    fn edge_collapse_breaking_src_is_unnatural() {
        // One edge 0 -> 1 mapped into a 2-vertex graph with a single edge
        // 0 -> 1, but sending both vertices to vertex 1.
        let mut e = ACSet::new(graph()).unwrap();
        e.add_part("V", &[], &[]).unwrap();
        e.add_part("V", &[], &[]).unwrap();
        e.add_part("E", &[("src", 0), ("tgt", 1)], &[]).unwrap();
        let e = Arc::new(e);
        let f = ACSetMorphism::raw(
            e.clone(),
            e.clone(),
            vec![vec![1, 1], vec![0]],
            BTreeMap::new(),
        )
        .unwrap();
        // src square: f_V(src(e0)) = 1 but src(f_E(e0)) = 0.
        assert!(!is_natural(&f).unwrap());
    }

    #[test]
    fn vertex_into_cycle_is_mono_not_iso() {
        let mut v = ACSet::new(graph()).unwrap();
        v.add_part("V", &[], &[]).unwrap();
        let v = Arc::new(v);
        let f = ACSetMorphism::new(v, cycle(3), vec![vec![2], vec![]], BTreeMap::new()).unwrap();
        let p = morphism_predicates(&f);
        assert!(p.mono && !p.iso);
    }

    #[test]
    fn collapse_is_not_mono() {
        let mut two = ACSet::new(graph()).unwrap();
        two.add_part("V", &[], &[]).unwrap();
        two.add_part("V", &[], &[]).unwrap();
        let mut one = ACSet::new(graph()).unwrap();
        one.add_part("V", &[], &[]).unwrap();
        let f = ACSetMorphism::new(
            Arc::new(two),
            Arc::new(one),
            vec![vec![0, 0], vec![]],
            BTreeMap::new(),
        )
        .unwrap();
        assert!(!morphism_predicates(&f).mono);
    }

    #[test]
    fn wolf_shape_into_world() {
        let s = Arc::new(
            Schema::build(
                &["V", "Wolf"],
                &[("Nat", ScalarKind::Int)],
                &[("w_pos", "Wolf", "V")],
                &[("w_eng", "Wolf", "Nat")],
            )
            .unwrap(),
        );
        let mut shape = ACSet::new(s.clone()).unwrap();
        shape.add_part("V", &[], &[]).unwrap();
        shape
            .add_part("Wolf", &[("w_pos", 0)], &[("w_eng", AttrValue::Var(0))])
            .unwrap();
        let mut world = ACSet::new(s).unwrap();
        world.add_part("V", &[], &[]).unwrap();
        world.add_part("V", &[], &[]).unwrap();
        world
            .add_part("Wolf", &[("w_pos", 1)], &[("w_eng", AttrValue::int(7))])
            .unwrap();
        let vars = BTreeMap::from([(0, AttrValue::int(7))]);
        let f = ACSetMorphism::new(
            Arc::new(shape),
            Arc::new(world),
            vec![vec![1], vec![0]],
            vars,
        )
        .unwrap();
        assert!(morphism_predicates(&f).total_ground);
    }

    #[test]
    fn composition_pushes_variables_through() {
        let c = cycle(3);
        let id = ACSetMorphism::identity(&c);
        assert_eq!(id.compose(&id).unwrap(), id);
    }
}
