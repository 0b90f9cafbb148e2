// SPDX-License-Identifier: Apache-2.0
//! Partial maps between instances.
//!
//! A partial map is defined on a sub-instance of its domain: whenever a part
//! is defined, so is every part it points at. On that sub-instance it is an
//! ordinary natural morphism on the foreign keys. Attribute values are not
//! tracked: a rewriting step may change them, so a partial map records
//! only which part became which. Consecutive world states are related by
//! such maps, undefined exactly on deleted parts.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::acset::{ACSet, AttrValue};
use crate::morphism::ACSetMorphism;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PartialMapError {
    #[error("domain and codomain have different schemas")]
    SchemaMismatch,
    #[error("component shape does not match the domain")]
    Shape,
    #[error("{table}[{part}] maps to {value}, out of range")]
    OutOfRange {
        table: String,
        part: usize,
        value: usize,
    },
    #[error("{table}[{part}] is defined but its {hom} target is not")]
    NotClosed {
        table: String,
        part: usize,
        hom: String,
    },
    #[error("restriction to the defined parts is not natural")]
    NotNatural,
    #[error("codomain of the first map is not the domain of the second")]
    NotComposable,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartialMap {
    dom: Arc<ACSet>,
    cod: Arc<ACSet>,
    components: Vec<Vec<Option<usize>>>,
}

fn same(a: &Arc<ACSet>, b: &Arc<ACSet>) -> bool {
    Arc::ptr_eq(a, b) || a == b
}

impl PartialMap {
    /// Builds a partial map, checking closure and naturality of the
    /// restriction on foreign keys.
    pub fn new(
        dom: Arc<ACSet>,
        cod: Arc<ACSet>,
        components: Vec<Vec<Option<usize>>>,
    ) -> Result<Self, PartialMapError> {
        let pm = PartialMap {
            dom,
            cod,
            components,
        };
        pm.check()?;
        Ok(pm)
    }

    pub(crate) fn new_unchecked(
        dom: Arc<ACSet>,
        cod: Arc<ACSet>,
        components: Vec<Vec<Option<usize>>>,
    ) -> Self {
        let pm = PartialMap {
            dom,
            cod,
            components,
        };
        debug_assert_eq!(pm.check(), Ok(()));
        pm
    }

    /// Verifies the closure invariant and naturality on the defined parts.
    pub fn check(&self) -> Result<(), PartialMapError> {
        let (dom, cod) = (&*self.dom, &*self.cod);
        if !dom.same_schema(cod) {
            return Err(PartialMapError::SchemaMismatch);
        }
        let s = dom.schema();
        if self.components.len() != s.tables().len() {
            return Err(PartialMapError::Shape);
        }
        for (t, comp) in self.components.iter().enumerate() {
            if comp.len() != dom.nparts(t) {
                return Err(PartialMapError::Shape);
            }
            for (p, v) in comp.iter().enumerate() {
                if let Some(v) = *v {
                    if v >= cod.nparts(t) {
                        return Err(PartialMapError::OutOfRange {
                            table: s.tables()[t].clone(),
                            part: p,
                            value: v,
                        });
                    }
                }
            }
        }
        for h in 0..s.homs().len() {
            let (src, tgt) = (s.hom_src(h), s.hom_tgt(h));
            for p in 0..dom.nparts(src) {
                let Some(img) = self.components[src][p] else {
                    continue;
                };
                match self.components[tgt][dom.hom(h, p)] {
                    None => {
                        return Err(PartialMapError::NotClosed {
                            table: s.tables()[src].clone(),
                            part: p,
                            hom: s.homs()[h].name.clone(),
                        })
                    }
                    Some(q) if q != cod.hom(h, img) => return Err(PartialMapError::NotNatural),
                    Some(_) => {}
                }
            }
        }
        Ok(())
    }

    pub fn identity(x: &Arc<ACSet>) -> Self {
        PartialMap::from_morphism(&ACSetMorphism::identity(x))
    }

    /// The everywhere-undefined map `dom ⇀ cod`.
    pub fn empty(dom: &Arc<ACSet>, cod: &Arc<ACSet>) -> Self {
        PartialMap {
            components: (0..dom.schema().tables().len())
                .map(|t| vec![None; dom.nparts(t)])
                .collect(),
            dom: Arc::clone(dom),
            cod: Arc::clone(cod),
        }
    }

    pub fn from_morphism(f: &ACSetMorphism) -> Self {
        PartialMap {
            dom: Arc::clone(f.dom()),
            cod: Arc::clone(f.cod()),
            components: f
                .components()
                .iter()
                .map(|c| c.iter().map(|&v| Some(v)).collect())
                .collect(),
        }
    }

    pub fn dom(&self) -> &Arc<ACSet> {
        &self.dom
    }

    pub fn cod(&self) -> &Arc<ACSet> {
        &self.cod
    }

    pub fn components(&self) -> &[Vec<Option<usize>>] {
        &self.components
    }

    pub fn apply(&self, table: usize, part: usize) -> Option<usize> {
        self.components[table][part]
    }

    pub fn is_total(&self) -> bool {
        self.components
            .iter()
            .all(|c| c.iter().all(Option::is_some))
    }

    /// Number of defined parts, summed over tables.
    pub fn defined_count(&self) -> usize {
        self.components
            .iter()
            .flatten()
            .filter(|v| v.is_some())
            .count()
    }

    /// `f ; self` if every part in the image of `f` is defined and the
    /// attribute cells of `f`'s domain still agree with the codomain. Free
    /// variables of the domain are rebound to the current values.
    pub fn postcompose(&self, f: &ACSetMorphism) -> Result<Option<ACSetMorphism>, PartialMapError> {
        if !same(f.cod(), &self.dom) {
            return Err(PartialMapError::NotComposable);
        }
        let mut comps = Vec::with_capacity(self.components.len());
        for (t, c) in f.components().iter().enumerate() {
            let mut out = Vec::with_capacity(c.len());
            for &p in c {
                match self.components[t][p] {
                    Some(v) => out.push(v),
                    None => return Ok(None),
                }
            }
            comps.push(out);
        }
        Ok(rebind(f.dom(), &self.cod, comps))
    }
}

/// The morphism `dom -> cod` with the given part components, binding each
/// variable of `dom` to the value it lands on. `None` if the attribute
/// cells do not line up.
pub(crate) fn rebind(
    dom: &Arc<ACSet>,
    cod: &Arc<ACSet>,
    comps: Vec<Vec<usize>>,
) -> Option<ACSetMorphism> {
    let s = dom.schema();
    let mut vars: BTreeMap<u32, AttrValue> = BTreeMap::new();
    for a in 0..s.attrs().len() {
        let src = s.attr_src(a);
        for p in 0..dom.nparts(src) {
            let target = cod.attr(a, comps[src][p]);
            match dom.attr(a, p) {
                AttrValue::Var(v) => match vars.get(v) {
                    Some(prev) if prev != target => return None,
                    Some(_) => {}
                    None => {
                        vars.insert(*v, target.clone());
                    }
                },
                c if c != target => return None,
                _ => {}
            }
        }
    }
    Some(ACSetMorphism::new_unchecked(
        Arc::clone(dom),
        Arc::clone(cod),
        comps,
        vars,
    ))
}

/// Diagrammatic composite `p ; q`, defined where both steps are.
pub fn compose_partial(p: &PartialMap, q: &PartialMap) -> Result<PartialMap, PartialMapError> {
    if !same(&p.cod, &q.dom) {
        return Err(PartialMapError::NotComposable);
    }
    let components = p
        .components
        .iter()
        .enumerate()
        .map(|(t, c)| {
            c.iter()
                .map(|v| v.and_then(|y| q.components[t][y]))
                .collect()
        })
        .collect();
    Ok(PartialMap::new_unchecked(
        Arc::clone(&p.dom),
        Arc::clone(&q.cod),
        components,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schema::Schema;

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

    fn g(nv: usize, edges: &[(usize, usize)]) -> Arc<ACSet> {
        let mut x = ACSet::new(graph()).unwrap();
        for _ in 0..nv {
            x.add_part("V", &[], &[]).unwrap();
        }
        for &(s, t) in edges {
            x.add_part("E", &[("src", s), ("tgt", t)], &[]).unwrap();
        }
        Arc::new(x)
    }

    #[test]
    fn identities_compose() {
        let x = g(2, &[(0, 1)]);
        let id = PartialMap::identity(&x);
        assert_eq!(compose_partial(&id, &id).unwrap(), id);
    }

    #[test]
    fn undefined_on_image_gives_empty() {
        let a = g(1, &[]);
        let b = g(1, &[]);
        let c = g(1, &[]);
        let p = PartialMap::identity(&a);
        let p = PartialMap::new(Arc::clone(&a), Arc::clone(&b), p.components.clone()).unwrap();
        let q = PartialMap::empty(&b, &c);
        let pq = compose_partial(&p, &q).unwrap();
        assert_eq!(pq.defined_count(), 0);
    }

    #[test]
    fn closure_enforced() {
        let x = g(2, &[(0, 1)]);
        let err = PartialMap::new(
            Arc::clone(&x),
            Arc::clone(&x),
            vec![vec![Some(0), None], vec![Some(0)]],
        )
        .unwrap_err();
        assert!(matches!(err, PartialMapError::NotClosed { .. }));
        // Dropping a vertex and its edge is fine.
        PartialMap::new(
            Arc::clone(&x),
            Arc::clone(&x),
            vec![vec![Some(0), None], vec![None]],
        )
        .unwrap();
    }

    #[test]
    fn postcompose_through_deletion() {
        let x = g(2, &[(0, 1)]);
        let y = g(1, &[]);
        let pm = PartialMap::new(
            Arc::clone(&x),
            Arc::clone(&y),
            vec![vec![None, Some(0)], vec![None]],
        )
        .unwrap();
        let v = g(1, &[]);
        let at1 = ACSetMorphism::new(
            Arc::clone(&v),
            Arc::clone(&x),
            vec![vec![1], vec![]],
            BTreeMap::new(),
        )
        .unwrap();
        let at0 = ACSetMorphism::new(
            Arc::clone(&v),
            Arc::clone(&x),
            vec![vec![0], vec![]],
            BTreeMap::new(),
        )
        .unwrap();
        assert_eq!(pm.postcompose(&at1).unwrap().unwrap().component(0), &[0]);
        assert!(pm.postcompose(&at0).unwrap().is_none());
    }
}
