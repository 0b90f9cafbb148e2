// SPDX-License-Identifier: Apache-2.0
//! Rewrite rules with agent shapes, agent-constrained matching, and
//! double- and single-pushout application.
//!
//! A rule is a span `L <-l- K -r-> R` with `l` monic, an input agent
//! `a: A -> L` and an output agent `b: B -> R`. Matching is constrained so
//! that the triangle `a ; m = agent` commutes. Attribute variables of `R`
//! that do not come from `K` are computed from the match by
//! [`AttrExpr`]s.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::acset::{ACSet, AttrValue, Scalar};
use crate::colimit::{complement_given, gluing_check, pushout, ColimitError};
use crate::expr::{eval_attr_expr, AttrExpr, ExprError};
use crate::homsearch::{homomorphisms, HomOptions, HomSearchError};
use crate::morphism::{is_natural, morphism_predicates, ACSetMorphism, MorphismError};
use crate::partial::PartialMap;
use crate::schema::ScalarKind;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Semantics {
    Dpo,
    Spo,
}

impl fmt::Display for Semantics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Semantics::Dpo => "dpo",
            Semantics::Spo => "spo",
        })
    }
}

impl FromStr for Semantics {
    type Err = RuleError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "dpo" => Ok(Semantics::Dpo),
            "spo" => Ok(Semantics::Spo),
            "sqpo" | "pbpo" | "pbpo+" => Err(RuleError::UnsupportedSemantics(s.to_string())),
            _ => Err(RuleError::UnknownSemantics(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RuleError {
    #[error("{0} rewriting is not supported (only dpo and spo)")]
    UnsupportedSemantics(String),
    #[error("unknown rewriting semantics `{0}`")]
    UnknownSemantics(String),
    #[error("rule legs l and r must share the interface K")]
    LegsDomain,
    #[error("input agent must map into L")]
    AgentIn,
    #[error("output agent must map into R")]
    AgentOut,
    #[error("leg {0} is not natural")]
    NotNatural(&'static str),
    #[error("l is not a monomorphism")]
    NotMonic,
    #[error("expression target ${0} is not a variable of R")]
    UnknownExprTarget(u32),
    #[error("expression for ${target}: {error}")]
    Expr { target: u32, error: ExprError },
    #[error("variable ${0} of R neither comes from K nor has an expression")]
    UnresolvedRVar(u32),
    #[error(transparent)]
    Morphism(#[from] MorphismError),
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RewriteError {
    #[error("agent shape does not match the rule's input agent shape")]
    AgentShape,
    #[error("world state is not ground")]
    NonGroundWorld,
    #[error("match index {index} out of range ({count} matches)")]
    MatchIndex { index: usize, count: usize },
    #[error("output agent refers to a part removed by single-pushout deletion")]
    AgentDeleted,
    #[error("evaluating expression for ${target}: {error}")]
    Expr { target: u32, error: ExprError },
    #[error("match does not target the rule's pattern")]
    MatchDomain,
    #[error(transparent)]
    Colimit(#[from] ColimitError),
    #[error(transparent)]
    Morphism(#[from] MorphismError),
    #[error(transparent)]
    Search(#[from] HomSearchError),
}

#[derive(Clone, Debug, PartialEq)]
pub struct RuleOptions {
    pub semantics: Semantics,
    /// Expressions for variables of `R`, over variables of `L`.
    pub exprs: BTreeMap<u32, AttrExpr>,
    pub monic: bool,
}

impl Default for RuleOptions {
    fn default() -> Self {
        RuleOptions {
            semantics: Semantics::Dpo,
            exprs: BTreeMap::new(),
            monic: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RewriteRule {
    pub name: String,
    l: ACSetMorphism,
    r: ACSetMorphism,
    agent_in: ACSetMorphism,
    agent_out: ACSetMorphism,
    opts: RuleOptions,
}

/// Kind of the attribute column holding variable `v` in `x`, if any.
fn var_kind(x: &ACSet, v: u32) -> Option<ScalarKind> {
    let s = x.schema();
    (0..s.attrs().len())
        .find(|&a| x.attr_column(a).contains(&AttrValue::Var(v)))
        .map(|a| s.attr_kind(a))
}

impl RewriteRule {
    pub fn new(
        name: impl Into<String>,
        l: ACSetMorphism,
        r: ACSetMorphism,
        agent_in: ACSetMorphism,
        agent_out: ACSetMorphism,
        opts: RuleOptions,
    ) -> Result<Self, RuleError> {
        let rule = RewriteRule {
            name: name.into(),
            l,
            r,
            agent_in,
            agent_out,
            opts,
        };
        rule.validate()?;
        Ok(rule)
    }

    /// A rule with empty agent shapes on both sides.
    pub fn span(
        name: impl Into<String>,
        l: ACSetMorphism,
        r: ACSetMorphism,
        opts: RuleOptions,
    ) -> Result<Self, RuleError> {
        let a = ACSetMorphism::from_initial(l.cod());
        let b = ACSetMorphism::from_initial(r.cod());
        RewriteRule::new(name, l, r, a, b, opts)
    }

    fn validate(&self) -> Result<(), RuleError> {
        let same = |a: &Arc<ACSet>, b: &Arc<ACSet>| Arc::ptr_eq(a, b) || a == b;
        if !same(self.l.dom(), self.r.dom()) {
            return Err(RuleError::LegsDomain);
        }
        if !same(self.agent_in.cod(), self.l.cod()) {
            return Err(RuleError::AgentIn);
        }
        if !same(self.agent_out.cod(), self.r.cod()) {
            return Err(RuleError::AgentOut);
        }
        for (name, f) in [
            ("l", &self.l),
            ("r", &self.r),
            ("a", &self.agent_in),
            ("b", &self.agent_out),
        ] {
            if !is_natural(f)? {
                return Err(RuleError::NotNatural(name));
            }
        }
        if !morphism_predicates(&self.l).mono {
            return Err(RuleError::NotMonic);
        }
        let (lhs, rhs) = (self.lhs(), self.rhs());
        let rvars = rhs.vars();
        for (&target, e) in &self.opts.exprs {
            if !rvars.contains(&target) {
                return Err(RuleError::UnknownExprTarget(target));
            }
            let kind = e
                .infer_kind(&|v| var_kind(lhs, v))
                .map_err(|error| RuleError::Expr { target, error })?;
            let want = var_kind(rhs, target).expect("R variable occurs in a cell");
            if kind != want {
                return Err(RuleError::Expr {
                    target,
                    error: ExprError::KindMismatch {
                        op: "=",
                        left: want,
                        right: Some(kind),
                    },
                });
            }
        }
        let from_k: BTreeSet<u32> = self
            .r
            .var_assignment()
            .values()
            .filter_map(|v| match v {
                AttrValue::Var(x) => Some(*x),
                _ => None,
            })
            .collect();
        if let Some(&v) = rvars
            .iter()
            .find(|v| !from_k.contains(v) && !self.opts.exprs.contains_key(v))
        {
            return Err(RuleError::UnresolvedRVar(v));
        }
        Ok(())
    }

    pub fn lhs(&self) -> &Arc<ACSet> {
        self.l.cod()
    }

    pub fn interface(&self) -> &Arc<ACSet> {
        self.l.dom()
    }

    pub fn rhs(&self) -> &Arc<ACSet> {
        self.r.cod()
    }

    pub fn l(&self) -> &ACSetMorphism {
        &self.l
    }

    pub fn r(&self) -> &ACSetMorphism {
        &self.r
    }

    pub fn agent_in(&self) -> &ACSetMorphism {
        &self.agent_in
    }

    pub fn agent_out(&self) -> &ACSetMorphism {
        &self.agent_out
    }

    /// Input agent shape `A`.
    pub fn in_shape(&self) -> &Arc<ACSet> {
        self.agent_in.dom()
    }

    /// Output agent shape `B`.
    pub fn out_shape(&self) -> &Arc<ACSet> {
        self.agent_out.dom()
    }

    pub fn semantics(&self) -> Semantics {
        self.opts.semantics
    }

    pub fn exprs(&self) -> &BTreeMap<u32, AttrExpr> {
        &self.opts.exprs
    }

    pub fn monic(&self) -> bool {
        self.opts.monic
    }

    pub fn options(&self) -> &RuleOptions {
        &self.opts
    }

    /// Equality ignoring the rule's name.
    pub fn same_structure(&self, other: &RewriteRule) -> bool {
        self.l == other.l
            && self.r == other.r
            && self.agent_in == other.agent_in
            && self.agent_out == other.agent_out
            && self.opts == other.opts
    }

    /// `R <- K -> L` with the agents swapped. Only meaningful for rules
    /// without expressions.
    pub fn reversed(&self) -> Result<RewriteRule, RuleError> {
        RewriteRule::new(
            format!("{}_rev", self.name),
            self.r.clone(),
            self.l.clone(),
            self.agent_out.clone(),
            self.agent_in.clone(),
            RuleOptions {
                semantics: self.opts.semantics,
                exprs: BTreeMap::new(),
                monic: self.opts.monic,
            },
        )
    }
}

/// The result of applying a rule at a match.
#[derive(Clone, Debug)]
pub struct RewriteOutcome {
    pub world: Arc<ACSet>,
    /// `world ⇀ world'`, undefined exactly on deleted parts.
    pub map: PartialMap,
    /// `B -> world'`
    pub agent: ACSetMorphism,
    /// `R -> world'` when every part of `R` survives.
    pub comatch: Option<ACSetMorphism>,
}

/// All matches `m: L -> world` with `a ; m = agent`, in deterministic order.
/// Under DPO, matches violating the gluing condition are dropped.
pub fn find_matches(
    rule: &RewriteRule,
    world: &Arc<ACSet>,
    agent: &ACSetMorphism,
) -> Result<Vec<ACSetMorphism>, RewriteError> {
    let a = &rule.agent_in;
    if !(Arc::ptr_eq(agent.dom(), a.dom()) || agent.dom() == a.dom()) {
        return Err(RewriteError::AgentShape);
    }
    if !(Arc::ptr_eq(agent.cod(), world) || agent.cod() == world) {
        return Err(RewriteError::AgentShape);
    }
    let mut opts = HomOptions {
        monic: rule.opts.monic,
        forced: Vec::new(),
    };
    for t in 0..world.schema().tables().len() {
        for (p, &lp) in a.component(t).iter().enumerate() {
            opts.forced.push((t, lp, agent.apply(t, p)));
        }
    }
    let candidates = homomorphisms(rule.lhs(), world, &opts)?;
    let mut out = Vec::with_capacity(candidates.len());
    'next: for m in candidates {
        for v in a.dom().vars() {
            let via = a.subst(&AttrValue::Var(v)).and_then(|x| m.subst(&x));
            if via != agent.subst(&AttrValue::Var(v)) {
                continue 'next;
            }
        }
        if rule.opts.semantics == Semantics::Dpo && gluing_check(&rule.l, &m).is_err() {
            continue;
        }
        out.push(m);
    }
    Ok(out)
}

/// Applies the rule at `m` under the rule's own semantics.
pub fn apply_rule(rule: &RewriteRule, m: &ACSetMorphism) -> Result<RewriteOutcome, RewriteError> {
    match rule.opts.semantics {
        Semantics::Dpo => apply_dpo(rule, m),
        Semantics::Spo => apply_spo(rule, m),
    }
}

/// Finds matches and applies the rule at the `index`-th one.
pub fn rewrite_at(
    rule: &RewriteRule,
    world: &Arc<ACSet>,
    agent: &ACSetMorphism,
    index: usize,
) -> Result<RewriteOutcome, RewriteError> {
    let ms = find_matches(rule, world, agent)?;
    let m = ms.get(index).ok_or(RewriteError::MatchIndex {
        index,
        count: ms.len(),
    })?;
    apply_rule(rule, m)
}

pub fn apply_dpo(rule: &RewriteRule, m: &ACSetMorphism) -> Result<RewriteOutcome, RewriteError> {
    check_match(rule, m)?;
    let deleted = gluing_check(&rule.l, m)?;
    let k = rule.interface();
    let all: Vec<Vec<bool>> = (0..k.schema().tables().len())
        .map(|t| vec![true; k.nparts(t)])
        .collect();
    rewrite_with(rule, m, &deleted, &all)
}

/// Single-pushout application: deleting a part also deletes everything
/// that points at it, and deletion wins over preservation where the match
/// identifies parts.
pub fn apply_spo(rule: &RewriteRule, m: &ACSetMorphism) -> Result<RewriteOutcome, RewriteError> {
    check_match(rule, m)?;
    let (l, r, x) = (&rule.l, &rule.r, m.cod());
    let k = rule.interface();
    let rhs = rule.rhs();
    let s = x.schema();
    let nt = s.tables().len();
    let mut deleted: Vec<Vec<bool>> = (0..nt).map(|t| vec![false; x.nparts(t)]).collect();
    let mut in_k: Vec<Vec<bool>> = (0..nt).map(|t| vec![false; rule.lhs().nparts(t)]).collect();
    for t in 0..nt {
        for &p in l.component(t) {
            in_k[t][p] = true;
        }
        for p in 0..rule.lhs().nparts(t) {
            if !in_k[t][p] {
                deleted[t][m.apply(t, p)] = true;
            }
        }
    }
    let mut k_live: Vec<Vec<bool>>;
    loop {
        close_under_homs(x, &mut deleted);
        k_live = (0..nt)
            .map(|t| {
                (0..k.nparts(t))
                    .map(|kp| !deleted[t][m.apply(t, l.apply(t, kp))])
                    .collect()
            })
            .collect();
        let r_live = live_in_rhs(r, rhs, &k_live);
        let mut changed = false;
        for t in 0..nt {
            for kp in 0..k.nparts(t) {
                if k_live[t][kp] && !r_live[t][r.apply(t, kp)] {
                    deleted[t][m.apply(t, l.apply(t, kp))] = true;
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    rewrite_with(rule, m, &deleted, &k_live)
}

fn check_match(rule: &RewriteRule, m: &ACSetMorphism) -> Result<(), RewriteError> {
    if !(Arc::ptr_eq(m.dom(), rule.lhs()) || m.dom() == rule.lhs()) {
        return Err(RewriteError::MatchDomain);
    }
    if !m.cod().is_ground() {
        return Err(RewriteError::NonGroundWorld);
    }
    Ok(())
}

/// Marks every part pointing (transitively) at a marked part.
fn close_under_homs(x: &ACSet, marked: &mut [Vec<bool>]) {
    let s = x.schema();
    loop {
        let mut changed = false;
        for h in 0..s.homs().len() {
            let (src, tgt) = (s.hom_src(h), s.hom_tgt(h));
            for q in 0..x.nparts(src) {
                if !marked[src][q] && marked[tgt][x.hom(h, q)] {
                    marked[src][q] = true;
                    changed = true;
                }
            }
        }
        if !changed {
            return;
        }
    }
}

/// Parts of `R` that survive when the dead parts of `K` are removed.
fn live_in_rhs(r: &ACSetMorphism, rhs: &ACSet, k_live: &[Vec<bool>]) -> Vec<Vec<bool>> {
    let nt = rhs.schema().tables().len();
    let mut dead: Vec<Vec<bool>> = (0..nt).map(|t| vec![false; rhs.nparts(t)]).collect();
    for t in 0..nt {
        for (kp, &alive) in k_live[t].iter().enumerate() {
            if !alive {
                dead[t][r.apply(t, kp)] = true;
            }
        }
    }
    close_under_homs(rhs, &mut dead);
    dead.into_iter()
        .map(|c| c.into_iter().map(|d| !d).collect())
        .collect()
}

fn scalar_of(v: &AttrValue) -> Result<Scalar, RewriteError> {
    v.as_concrete().cloned().ok_or(RewriteError::NonGroundWorld)
}

/// Shared tail of DPO and SPO: instantiate `R` under the match, restrict
/// the rule to the surviving interface, build the complement and glue.
fn rewrite_with(
    rule: &RewriteRule,
    m: &ACSetMorphism,
    deleted: &[Vec<bool>],
    k_live: &[Vec<bool>],
) -> Result<RewriteOutcome, RewriteError> {
    let (l, r, x) = (&rule.l, &rule.r, m.cod());
    let (k, rhs) = (rule.interface(), rule.rhs());
    let s = Arc::clone(x.schema());
    let nt = s.tables().len();

    // Values of the variables of L, K and R under this match.
    let beta: BTreeMap<u32, Scalar> = m
        .var_assignment()
        .iter()
        .map(|(&v, val)| Ok((v, scalar_of(val)?)))
        .collect::<Result<_, RewriteError>>()?;
    let kappa = |kv: u32| -> Result<Scalar, RewriteError> {
        match l.subst(&AttrValue::Var(kv)) {
            Some(AttrValue::Concrete(c)) => Ok(c),
            Some(AttrValue::Var(lv)) => beta.get(&lv).cloned().ok_or(RewriteError::NonGroundWorld),
            None => Err(MorphismError::UnassignedVar(kv).into()),
        }
    };
    let mut rho: BTreeMap<u32, Scalar> = BTreeMap::new();
    for rv in rhs.vars() {
        let val = if let Some(e) = rule.opts.exprs.get(&rv) {
            eval_attr_expr(e, &beta).map_err(|error| RewriteError::Expr { target: rv, error })?
        } else {
            let kv = r
                .var_assignment()
                .iter()
                .find(|(_, val)| **val == AttrValue::Var(rv))
                .map(|(&kv, _)| kv)
                .expect("validated rule");
            kappa(kv)?
        };
        let want = var_kind(rhs, rv).expect("R variable occurs in a cell");
        if val.kind() != want {
            return Err(RewriteError::Expr {
                target: rv,
                error: ExprError::KindMismatch {
                    op: "=",
                    left: want,
                    right: Some(val.kind()),
                },
            });
        }
        rho.insert(rv, val);
    }
    let r_inst = Arc::new(rhs.substitute(|v| rho.get(&v).cloned().map(AttrValue::Concrete)));
    let resolve_r = |v: &AttrValue| match v {
        AttrValue::Var(rv) => AttrValue::Concrete(rho[rv].clone()),
        c => c.clone(),
    };

    // Restrict to the live part of the interface and of R.
    let r_live = live_in_rhs(r, rhs, k_live);
    let (k_sub, k_old) = k.induced(k_live);
    let (r_sub, r_old) = r_inst.induced(&r_live);
    let (k_sub, r_sub) = (Arc::new(k_sub), Arc::new(r_sub));
    let mut r_new: Vec<Vec<Option<usize>>> = (0..nt).map(|t| vec![None; rhs.nparts(t)]).collect();
    for t in 0..nt {
        for (i, &old) in r_old[t].iter().enumerate() {
            r_new[t][old] = Some(i);
        }
    }
    let k_vars = k_sub.vars();
    let l_sub = ACSetMorphism::new_unchecked(
        Arc::clone(&k_sub),
        Arc::clone(rule.lhs()),
        (0..nt)
            .map(|t| k_old[t].iter().map(|&kp| l.apply(t, kp)).collect())
            .collect(),
        l.var_assignment()
            .iter()
            .filter(|(v, _)| k_vars.contains(v))
            .map(|(&v, val)| (v, val.clone()))
            .collect(),
    );
    let r_sub_leg = ACSetMorphism::new_unchecked(
        Arc::clone(&k_sub),
        Arc::clone(&r_sub),
        (0..nt)
            .map(|t| {
                k_old[t]
                    .iter()
                    .map(|&kp| r_new[t][r.apply(t, kp)].expect("live"))
                    .collect()
            })
            .collect(),
        r.var_assignment()
            .iter()
            .filter(|(v, _)| k_vars.contains(v))
            .map(|(&v, val)| (v, resolve_r(val)))
            .collect(),
    );

    let pc = complement_given(&l_sub, m, deleted);
    let po = pushout(&pc.k, &r_sub_leg)?;
    let world = Arc::clone(&po.apex);

    let mut comps: Vec<Vec<Option<usize>>> = (0..nt).map(|t| vec![None; x.nparts(t)]).collect();
    for t in 0..nt {
        for (dp, &xq) in pc.d.component(t).iter().enumerate() {
            comps[t][xq] = Some(po.left.apply(t, dp));
        }
    }
    let map = PartialMap::new_unchecked(Arc::clone(x), Arc::clone(&world), comps);

    let b = &rule.agent_out;
    let mut agent_comps = Vec::with_capacity(nt);
    for t in 0..nt {
        let mut c = Vec::with_capacity(b.dom().nparts(t));
        for &rp in b.component(t) {
            let np = r_new[t][rp].ok_or(RewriteError::AgentDeleted)?;
            c.push(po.right.apply(t, np));
        }
        agent_comps.push(c);
    }
    let agent_vars = b
        .var_assignment()
        .iter()
        .map(|(&v, val)| (v, resolve_r(val)))
        .collect();
    let agent = ACSetMorphism::new_unchecked(
        Arc::clone(b.dom()),
        Arc::clone(&world),
        agent_comps,
        agent_vars,
    );

    let comatch = if r_live.iter().all(|c| c.iter().all(|&b| b)) {
        Some(ACSetMorphism::new_unchecked(
            Arc::clone(rhs),
            Arc::clone(&world),
            po.right.components().to_vec(),
            rho.iter()
                .map(|(&v, c)| (v, AttrValue::Concrete(c.clone())))
                .collect(),
        ))
    } else {
        None
    };
    Ok(RewriteOutcome {
        world,
        map,
        agent,
        comatch,
    })
}
