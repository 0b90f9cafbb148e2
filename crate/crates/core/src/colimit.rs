// SPDX-License-Identifier: Apache-2.0
//! Colimits of attributed C-sets: the initial instance, coproducts,
//! pushouts, and pushout complements along monomorphisms.
//!
//! Attribute variables behave as unification variables when parts are
//! glued. A variable identified with a concrete value takes that value; two
//! distinct concrete values meeting in one cell is an error.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use petgraph::unionfind::UnionFind;

use crate::acset::{ACSet, AcsetError, AttrValue, Scalar};
use crate::homsearch::{homomorphisms, HomOptions};
use crate::morphism::{morphism_predicates, ACSetMorphism, MorphismError};
use crate::schema::{ScalarKind, Schema};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GluingKind {
    /// A surviving part points at a deleted one.
    Dangling,
    /// The match identifies a deleted part with another part.
    Identification,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ColimitError {
    #[error("instances have different schemas")]
    SchemaMismatch,
    #[error("the two legs do not share a domain")]
    DomainMismatch,
    #[error("the two morphisms are not composable")]
    NotComposable,
    #[error("attribute {attr}: cannot identify {left} with {right}")]
    AttributeConflict {
        attr: String,
        left: Scalar,
        right: Scalar,
    },
    #[error("left leg of the rule is not a monomorphism")]
    NonMonic,
    #[error("gluing condition fails ({kind:?}) at {table}[{part}]")]
    GluingViolation {
        kind: GluingKind,
        table: String,
        part: usize,
    },
    #[error("instance too large for exhaustive check: {size} parts > budget {budget}")]
    BudgetExceeded { size: usize, budget: usize },
    #[error("exhaustive pushout check only supports ground instances")]
    NotGround,
    #[error(transparent)]
    Morphism(#[from] MorphismError),
}

/// A pushout square's apex together with its two legs.
#[derive(Clone, Debug)]
pub struct Pushout {
    pub apex: Arc<ACSet>,
    /// `X -> P`
    pub left: ACSetMorphism,
    /// `Y -> P`
    pub right: ACSetMorphism,
}

/// A pushout complement `K -> D -> X` of `K -> L -> X`.
#[derive(Clone, Debug)]
pub struct PushoutComplement {
    pub object: Arc<ACSet>,
    /// `K -> D`
    pub k: ACSetMorphism,
    /// `D -> X`, a monomorphism.
    pub d: ACSetMorphism,
}

pub fn initial_acset(schema: Arc<Schema>) -> Result<ACSet, AcsetError> {
    ACSet::new(schema)
}

fn same(a: &Arc<ACSet>, b: &Arc<ACSet>) -> bool {
    Arc::ptr_eq(a, b) || a == b
}

/// Coproduct `X + Y` with its injections. Variables of `Y` are renumbered
/// after those of `X`.
pub fn coproduct(x: &Arc<ACSet>, y: &Arc<ACSet>) -> Result<Pushout, ColimitError> {
    if !x.same_schema(y) {
        return Err(ColimitError::SchemaMismatch);
    }
    let f = ACSetMorphism::from_initial(x);
    let g = ACSetMorphism::from_initial(y);
    pushout(&f, &g)
}

#[derive(Clone, Copy)]
enum Term<'a> {
    Lit(&'a Scalar),
    Node(usize),
}

/// Union-find over attribute variables, each class optionally bound to a
/// concrete value.
struct Unifier {
    uf: UnionFind<usize>,
    bound: Vec<Option<Scalar>>,
}

impl Unifier {
    fn new(n: usize) -> Self {
        Unifier {
            uf: UnionFind::new(n),
            bound: vec![None; n],
        }
    }

    fn unify(&mut self, a: Term, b: Term) -> Result<(), (Scalar, Scalar)> {
        match (a, b) {
            (Term::Lit(x), Term::Lit(y)) => {
                if x == y {
                    Ok(())
                } else {
                    Err((x.clone(), y.clone()))
                }
            }
            (Term::Node(n), Term::Lit(c)) | (Term::Lit(c), Term::Node(n)) => {
                let r = self.uf.find(n);
                match &self.bound[r] {
                    Some(b) if b != c => Err((b.clone(), c.clone())),
                    Some(_) => Ok(()),
                    None => {
                        self.bound[r] = Some(c.clone());
                        Ok(())
                    }
                }
            }
            (Term::Node(n), Term::Node(m)) => {
                let (rn, rm) = (self.uf.find(n), self.uf.find(m));
                if rn == rm {
                    return Ok(());
                }
                let (bn, bm) = (self.bound[rn].take(), self.bound[rm].take());
                let merged = match (bn, bm) {
                    (Some(x), Some(y)) if x != y => return Err((x, y)),
                    (Some(x), _) | (None, Some(x)) => Some(x),
                    (None, None) => None,
                };
                self.uf.union(rn, rm);
                let r = self.uf.find(rn);
                self.bound[r] = merged;
                Ok(())
            }
        }
    }
}

/// Pushout of the span `X <-f- K -g-> Y`.
///
/// Parts of `P` are the classes of `X + Y` under the relation generated by
/// `f(k) ~ g(k)`, numbered by first appearance (all of `X`, then `Y`).
pub fn pushout(f: &ACSetMorphism, g: &ACSetMorphism) -> Result<Pushout, ColimitError> {
    let (x, y, k) = (f.cod(), g.cod(), f.dom());
    if !x.same_schema(y) || !x.same_schema(k) || !g.dom().same_schema(k) {
        return Err(ColimitError::SchemaMismatch);
    }
    if !same(k, g.dom()) {
        return Err(ColimitError::DomainMismatch);
    }
    let schema = Arc::clone(x.schema());
    let nt = schema.tables().len();

    // Parts.
    let mut class_of: Vec<Vec<usize>> = Vec::with_capacity(nt);
    let mut reps: Vec<Vec<usize>> = Vec::with_capacity(nt);
    for t in 0..nt {
        let nx = x.nparts(t);
        let n = nx + y.nparts(t);
        let mut uf = UnionFind::<usize>::new(n);
        for p in 0..k.nparts(t) {
            uf.union(f.apply(t, p), nx + g.apply(t, p));
        }
        let mut label = vec![usize::MAX; n];
        let mut cls = Vec::with_capacity(n);
        let mut rep = Vec::new();
        for i in 0..n {
            let r = uf.find(i);
            if label[r] == usize::MAX {
                label[r] = rep.len();
                rep.push(i);
            }
            cls.push(label[r]);
        }
        class_of.push(cls);
        reps.push(rep);
    }
    let counts: Vec<usize> = reps.iter().map(Vec::len).collect();

    let homs = (0..schema.homs().len())
        .map(|h| {
            let (src, tgt) = (schema.hom_src(h), schema.hom_tgt(h));
            let nx_src = x.nparts(src);
            let nx_tgt = x.nparts(tgt);
            reps[src]
                .iter()
                .map(|&i| {
                    if i < nx_src {
                        class_of[tgt][x.hom(h, i)]
                    } else {
                        class_of[tgt][nx_tgt + y.hom(h, i - nx_src)]
                    }
                })
                .collect()
        })
        .collect();

    // Attributes.
    let xvars: Vec<u32> = x.vars().into_iter().collect();
    let yvars: Vec<u32> = y.vars().into_iter().collect();
    let xnode: HashMap<u32, usize> = xvars.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let ynode: HashMap<u32, usize> = yvars
        .iter()
        .enumerate()
        .map(|(i, &v)| (v, xvars.len() + i))
        .collect();
    fn term<'a>(v: &'a AttrValue, nodes: &HashMap<u32, usize>) -> Term<'a> {
        match v {
            AttrValue::Concrete(c) => Term::Lit(c),
            AttrValue::Var(n) => Term::Node(nodes[n]),
        }
    }
    let tx = |v| term(v, &xnode);
    let ty = |v| term(v, &ynode);
    let mut un = Unifier::new(xvars.len() + yvars.len());
    let fvals: Vec<(AttrValue, AttrValue)> = k
        .vars()
        .into_iter()
        .map(|v| {
            let a = f
                .subst(&AttrValue::Var(v))
                .ok_or(MorphismError::UnassignedVar(v))?;
            let b = g
                .subst(&AttrValue::Var(v))
                .ok_or(MorphismError::UnassignedVar(v))?;
            Ok((a, b))
        })
        .collect::<Result<_, MorphismError>>()?;
    let conflict = |a: usize, (left, right): (Scalar, Scalar)| ColimitError::AttributeConflict {
        attr: schema.attrs()[a].name.clone(),
        left,
        right,
    };
    // Variable assignments of f and g are attached to some K cell; report
    // conflicts under the first attribute that mentions the variable.
    for (kv, (a, b)) in k.vars().into_iter().zip(&fvals) {
        if let Err(e) = un.unify(tx(a), ty(b)) {
            let attr = (0..schema.attrs().len())
                .find(|&at| k.attr_column(at).contains(&AttrValue::Var(kv)))
                .unwrap_or(0);
            return Err(conflict(attr, e));
        }
    }
    for a in 0..schema.attrs().len() {
        let src = schema.attr_src(a);
        let nx = x.nparts(src);
        let cell = |i: usize| {
            if i < nx {
                tx(x.attr(a, i))
            } else {
                ty(y.attr(a, i - nx))
            }
        };
        for i in 0..class_of[src].len() {
            let r = reps[src][class_of[src][i]];
            if r != i {
                un.unify(cell(i), cell(r)).map_err(|e| conflict(a, e))?;
            }
        }
    }
    let nnodes = xvars.len() + yvars.len();
    let mut fresh: HashMap<usize, u32> = HashMap::new();
    for n in 0..nnodes {
        let r = un.uf.find(n);
        if un.bound[r].is_none() && !fresh.contains_key(&r) {
            let id = fresh.len() as u32;
            fresh.insert(r, id);
        }
    }
    let resolve = |t: Term| -> AttrValue {
        match t {
            Term::Lit(c) => AttrValue::Concrete(c.clone()),
            Term::Node(n) => {
                let r = un.uf.find(n);
                match &un.bound[r] {
                    Some(c) => AttrValue::Concrete(c.clone()),
                    None => AttrValue::Var(fresh[&r]),
                }
            }
        }
    };
    let attrs = (0..schema.attrs().len())
        .map(|a| {
            let src = schema.attr_src(a);
            let nx = x.nparts(src);
            reps[src]
                .iter()
                .map(|&i| {
                    if i < nx {
                        resolve(tx(x.attr(a, i)))
                    } else {
                        resolve(ty(y.attr(a, i - nx)))
                    }
                })
                .collect()
        })
        .collect();

    let apex = Arc::new(ACSet::from_columns_unchecked(
        Arc::clone(&schema),
        counts,
        homs,
        attrs,
    ));
    let left_comps = (0..nt)
        .map(|t| class_of[t][..x.nparts(t)].to_vec())
        .collect();
    let right_comps = (0..nt)
        .map(|t| class_of[t][x.nparts(t)..].to_vec())
        .collect();
    let left_vars = xvars
        .iter()
        .map(|&v| (v, resolve(Term::Node(xnode[&v]))))
        .collect();
    let right_vars = yvars
        .iter()
        .map(|&v| (v, resolve(Term::Node(ynode[&v]))))
        .collect();
    Ok(Pushout {
        left: ACSetMorphism::new_unchecked(Arc::clone(x), Arc::clone(&apex), left_comps, left_vars),
        right: ACSetMorphism::new_unchecked(
            Arc::clone(y),
            Arc::clone(&apex),
            right_comps,
            right_vars,
        ),
        apex,
    })
}

/// Checks the gluing condition for `K -l-> L -m-> X` and returns, per
/// table, which parts of `X` the rewrite deletes.
pub fn gluing_check(l: &ACSetMorphism, m: &ACSetMorphism) -> Result<Vec<Vec<bool>>, ColimitError> {
    let (k, lhs, x) = (l.dom(), l.cod(), m.cod());
    if !k.same_schema(x) || !lhs.same_schema(x) {
        return Err(ColimitError::SchemaMismatch);
    }
    if !same(lhs, m.dom()) {
        return Err(ColimitError::NotComposable);
    }
    if !morphism_predicates(l).mono {
        return Err(ColimitError::NonMonic);
    }
    let schema = Arc::clone(x.schema());
    let nt = schema.tables().len();
    let mut in_k: Vec<Vec<bool>> = (0..nt).map(|t| vec![false; lhs.nparts(t)]).collect();
    for (t, comp) in l.components().iter().enumerate() {
        for &p in comp {
            in_k[t][p] = true;
        }
    }
    let mut deleted: Vec<Vec<bool>> = (0..nt).map(|t| vec![false; x.nparts(t)]).collect();
    for t in 0..nt {
        let mut preimage: HashMap<usize, usize> = HashMap::new();
        for p in 0..lhs.nparts(t) {
            let q = m.apply(t, p);
            if !in_k[t][p] {
                deleted[t][q] = true;
            }
            if let Some(&p0) = preimage.get(&q) {
                if !(in_k[t][p0] && in_k[t][p]) {
                    return Err(ColimitError::GluingViolation {
                        kind: GluingKind::Identification,
                        table: schema.tables()[t].clone(),
                        part: q,
                    });
                }
            } else {
                preimage.insert(q, p);
            }
        }
    }
    for h in 0..schema.homs().len() {
        let (src, tgt) = (schema.hom_src(h), schema.hom_tgt(h));
        for q in 0..x.nparts(src) {
            if !deleted[src][q] && deleted[tgt][x.hom(h, q)] {
                return Err(ColimitError::GluingViolation {
                    kind: GluingKind::Dangling,
                    table: schema.tables()[src].clone(),
                    part: q,
                });
            }
        }
    }
    Ok(deleted)
}

/// Pushout complement of `K -l-> L -m-> X` for monic `l`.
///
/// `D` is `X` with `m(L \ l(K))` removed, surviving parts renumbered in
/// order. Cells of `D` that a variable of `K` maps onto become variables of
/// `D` (so that a later pushout may overwrite them); all other cells are
/// copied from `X`.
pub fn pushout_complement(
    l: &ACSetMorphism,
    m: &ACSetMorphism,
) -> Result<PushoutComplement, ColimitError> {
    let deleted = gluing_check(l, m)?;
    Ok(complement_given(l, m, &deleted))
}

/// Builds the complement for a precomputed deletion set. The set must be
/// closed under homs and must not contain any part of `m(l(K))`.
pub(crate) fn complement_given(
    l: &ACSetMorphism,
    m: &ACSetMorphism,
    deleted: &[Vec<bool>],
) -> PushoutComplement {
    let (k, x) = (l.dom(), m.cod());
    let schema = Arc::clone(x.schema());
    let nt = schema.tables().len();
    let mut new_id: Vec<Vec<Option<usize>>> = Vec::with_capacity(nt);
    let mut old_id: Vec<Vec<usize>> = Vec::with_capacity(nt);
    for t in 0..nt {
        let mut ids = vec![None; x.nparts(t)];
        let mut olds = Vec::new();
        for q in 0..x.nparts(t) {
            if !deleted[t][q] {
                ids[q] = Some(olds.len());
                olds.push(q);
            }
        }
        new_id.push(ids);
        old_id.push(olds);
    }
    let counts: Vec<usize> = old_id.iter().map(Vec::len).collect();
    let homs = (0..schema.homs().len())
        .map(|h| {
            let (src, tgt) = (schema.hom_src(h), schema.hom_tgt(h));
            old_id[src]
                .iter()
                .map(|&q| new_id[tgt][x.hom(h, q)].expect("dangling checked"))
                .collect()
        })
        .collect();
    let mut attrs: Vec<Vec<AttrValue>> = (0..schema.attrs().len())
        .map(|a| {
            let src = schema.attr_src(a);
            old_id[src].iter().map(|&q| x.attr(a, q).clone()).collect()
        })
        .collect();

    // Variables of K claim their cells in D; two K variables landing on one
    // cell are merged.
    let kvars: Vec<u32> = k.vars().into_iter().collect();
    let kidx: HashMap<u32, usize> = kvars.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let mut uf = UnionFind::<usize>::new(kvars.len());
    let mut claimed: HashMap<(usize, usize), usize> = HashMap::new();
    for a in 0..schema.attrs().len() {
        let src = schema.attr_src(a);
        for kp in 0..k.nparts(src) {
            if let AttrValue::Var(v) = k.attr(a, kp) {
                let dp = new_id[src][m.apply(src, l.apply(src, kp))].expect("kept part");
                let i = kidx[v];
                match claimed.get(&(a, dp)) {
                    Some(&j) => {
                        uf.union(i, j);
                    }
                    None => {
                        claimed.insert((a, dp), i);
                    }
                }
            }
        }
    }
    let mut label: HashMap<usize, u32> = HashMap::new();
    for i in 0..kvars.len() {
        let r = uf.find(i);
        let n = label.len() as u32;
        label.entry(r).or_insert(n);
    }
    let dvar = |i: usize| label[&uf.find(i)];
    let mut d_vars: BTreeMap<u32, AttrValue> = BTreeMap::new();
    for (&(a, dp), &i) in &claimed {
        let id = dvar(i);
        let src = schema.attr_src(a);
        d_vars.insert(id, x.attr(a, old_id[src][dp]).clone());
        attrs[a][dp] = AttrValue::Var(id);
    }

    let dobj = Arc::new(ACSet::from_columns_unchecked(
        Arc::clone(&schema),
        counts,
        homs,
        attrs,
    ));
    let k_comps = (0..nt)
        .map(|t| {
            (0..k.nparts(t))
                .map(|kp| new_id[t][m.apply(t, l.apply(t, kp))].expect("kept part"))
                .collect()
        })
        .collect();
    let k_vars = kvars
        .iter()
        .enumerate()
        .map(|(i, &v)| (v, AttrValue::Var(dvar(i))))
        .collect();
    PushoutComplement {
        k: ACSetMorphism::new_unchecked(Arc::clone(k), Arc::clone(&dobj), k_comps, k_vars),
        d: ACSetMorphism::new_unchecked(Arc::clone(&dobj), Arc::clone(x), old_id, d_vars),
        object: dobj,
    }
}

/// Parts of `X` removed by deleting `m(L \ l(K))` and, transitively, every
/// part that points at a removed part. This is the deletion used by
/// single-pushout rewriting.
pub fn deletion_closure(l: &ACSetMorphism, m: &ACSetMorphism) -> Vec<Vec<bool>> {
    let x = m.cod();
    let schema = x.schema();
    let nt = schema.tables().len();
    let mut in_k: Vec<Vec<bool>> = (0..nt).map(|t| vec![false; l.cod().nparts(t)]).collect();
    for (t, comp) in l.components().iter().enumerate() {
        for &p in comp {
            in_k[t][p] = true;
        }
    }
    let mut deleted: Vec<Vec<bool>> = (0..nt).map(|t| vec![false; x.nparts(t)]).collect();
    for t in 0..nt {
        for p in 0..l.cod().nparts(t) {
            if !in_k[t][p] {
                deleted[t][m.apply(t, p)] = true;
            }
        }
    }
    loop {
        let mut changed = false;
        for h in 0..schema.homs().len() {
            let (src, tgt) = (schema.hom_src(h), schema.hom_tgt(h));
            for q in 0..x.nparts(src) {
                if !deleted[src][q] && deleted[tgt][x.hom(h, q)] {
                    deleted[src][q] = true;
                    changed = true;
                }
            }
        }
        if !changed {
            return deleted;
        }
    }
}

/// Exhaustively checks that `(p, px, py)` is a pushout of `(f, g)`.
///
/// The square must commute, and for every ground instance `Q` with no more
/// parts per table than `P` (attribute values drawn from those occurring in
/// `X`, `Y`, `P` plus one fresh value per kind) and every cocone
/// `X -> Q <- Y` there must be exactly one mediating map `P -> Q`.
pub fn verify_pushout(
    f: &ACSetMorphism,
    g: &ACSetMorphism,
    px: &ACSetMorphism,
    py: &ACSetMorphism,
    budget: usize,
) -> Result<bool, ColimitError> {
    let p = px.cod();
    let size = p.total_parts();
    if size > budget {
        return Err(ColimitError::BudgetExceeded { size, budget });
    }
    let (x, y) = (f.cod(), g.cod());
    if !x.is_ground() || !y.is_ground() || !p.is_ground() || !f.dom().is_ground() {
        return Err(ColimitError::NotGround);
    }
    if !same(px.dom(), x) || !same(py.dom(), y) || !same(py.cod(), p) || !same(f.dom(), g.dom()) {
        return Err(ColimitError::NotComposable);
    }
    if f.compose(px)?.components() != g.compose(py)?.components() {
        return Ok(false);
    }
    let schema = Arc::clone(p.schema());
    let mut pools: BTreeMap<ScalarKind, Vec<Scalar>> = BTreeMap::new();
    for inst in [x, y, p] {
        for col in (0..schema.attrs().len()).map(|a| inst.attr_column(a)) {
            for v in col {
                if let AttrValue::Concrete(c) = v {
                    let pool = pools.entry(c.kind()).or_default();
                    if !pool.contains(c) {
                        pool.push(c.clone());
                    }
                }
            }
        }
    }
    for a in 0..schema.attrs().len() {
        let kind = schema.attr_kind(a);
        let pool = pools.entry(kind).or_default();
        let fresh = match kind {
            ScalarKind::Int => Scalar::Int(
                pool.iter()
                    .filter_map(|s| match s {
                        Scalar::Int(i) => Some(*i),
                        _ => None,
                    })
                    .max()
                    .unwrap_or(0)
                    .wrapping_add(1),
            ),
            ScalarKind::Float => Scalar::Float(-12345.5),
            ScalarKind::String => Scalar::Str("\u{1}fresh".into()),
            ScalarKind::Bool => Scalar::Bool(!pool.contains(&Scalar::Bool(true))),
        };
        if !pool.contains(&fresh) {
            pool.push(fresh);
        }
    }

    let mut ok = true;
    enumerate_instances(&schema, p.part_counts(), &pools, &mut |q| {
        let q = Arc::new(q);
        let qxs = homomorphisms(x, &q, &HomOptions::default()).expect("same schema");
        let qys = homomorphisms(y, &q, &HomOptions::default()).expect("same schema");
        for qx in &qxs {
            let fq = f.compose(qx).expect("composable").components().to_vec();
            for qy in &qys {
                if g.compose(qy).expect("composable").components() != fq.as_slice() {
                    continue;
                }
                let mut opts = HomOptions::default();
                let mut consistent = true;
                let mut forced: HashMap<(usize, usize), usize> = HashMap::new();
                for (leg, cocone) in [(px, qx), (py, qy)] {
                    for t in 0..schema.tables().len() {
                        for (i, &pp) in leg.component(t).iter().enumerate() {
                            let want = cocone.apply(t, i);
                            match forced.insert((t, pp), want) {
                                Some(prev) if prev != want => consistent = false,
                                Some(_) => {}
                                None => opts.forced.push((t, pp, want)),
                            }
                        }
                    }
                }
                let n = if consistent {
                    homomorphisms(p, &q, &opts).expect("in range").len()
                } else {
                    0
                };
                if n != 1 {
                    ok = false;
                    return false;
                }
            }
        }
        true
    });
    Ok(ok)
}

/// Calls `visit` on every ground instance with at most `max[t]` parts in
/// table `t`, stopping early when it returns false.
fn enumerate_instances(
    schema: &Arc<Schema>,
    max: &[usize],
    pools: &BTreeMap<ScalarKind, Vec<Scalar>>,
    visit: &mut dyn FnMut(ACSet) -> bool,
) -> bool {
    let nt = schema.tables().len();
    let mut counts = vec![0usize; nt];
    loop {
        if !enumerate_columns(schema, &counts, pools, visit) {
            return false;
        }
        let mut t = 0;
        loop {
            if t == nt {
                return true;
            }
            if counts[t] < max[t] {
                counts[t] += 1;
                break;
            }
            counts[t] = 0;
            t += 1;
        }
    }
}

fn enumerate_columns(
    schema: &Arc<Schema>,
    counts: &[usize],
    pools: &BTreeMap<ScalarKind, Vec<Scalar>>,
    visit: &mut dyn FnMut(ACSet) -> bool,
) -> bool {
    // Every hom cell and attribute cell is one odometer digit.
    let mut radix = Vec::new();
    for h in 0..schema.homs().len() {
        for _ in 0..counts[schema.hom_src(h)] {
            radix.push(counts[schema.hom_tgt(h)]);
        }
    }
    let nhom_cells = radix.len();
    for a in 0..schema.attrs().len() {
        for _ in 0..counts[schema.attr_src(a)] {
            radix.push(pools[&schema.attr_kind(a)].len());
        }
    }
    if radix.iter().any(|&r| r == 0) {
        return true;
    }
    let mut digits = vec![0usize; radix.len()];
    loop {
        let mut i = 0;
        let homs = (0..schema.homs().len())
            .map(|h| {
                let n = counts[schema.hom_src(h)];
                let col = digits[i..i + n].to_vec();
                i += n;
                col
            })
            .collect();
        debug_assert_eq!(i, nhom_cells);
        let attrs = (0..schema.attrs().len())
            .map(|a| {
                let n = counts[schema.attr_src(a)];
                let pool = &pools[&schema.attr_kind(a)];
                let col = digits[i..i + n]
                    .iter()
                    .map(|&d| AttrValue::Concrete(pool[d].clone()))
                    .collect();
                i += n;
                col
            })
            .collect();
        if !visit(ACSet::from_columns_unchecked(
            Arc::clone(schema),
            counts.to_vec(),
            homs,
            attrs,
        )) {
            return false;
        }
        let mut j = 0;
        loop {
            if j == digits.len() {
                return true;
            }
            digits[j] += 1;
            if digits[j] < radix[j] {
                break;
            }
            digits[j] = 0;
            j += 1;
        }
    }
}
