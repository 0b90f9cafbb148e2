// SPDX-License-Identifier: Apache-2.0
//! Homomorphism search and pushout criteria, each against a brute-force
//! oracle written independently of the library's search.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;
use rewire::acset::{ACSet, AttrValue};
use rewire::effect::{rng_from_seed, SimRng};
use rewire::{
    homomorphisms, is_isomorphic, pushout, pushout_complement, verify_pushout, ACSetMorphism,
    HomOptions, ScalarKind, Schema,
};

use crate::Outcome;

fn random_schema(rng: &mut SimRng) -> Arc<Schema> {
    let names = ["T0", "T1", "T2", "T3"];
    let nt = rng.gen_range(1..=4);
    let tables = &names[..nt];
    let nh = rng.gen_range(0..=4);
    let hom_names: Vec<String> = (0..nh).map(|i| format!("h{i}")).collect();
    let homs: Vec<(&str, &str, &str)> = hom_names
        .iter()
        .map(|h| {
            (
                h.as_str(),
                tables[rng.gen_range(0..nt)],
                tables[rng.gen_range(0..nt)],
            )
        })
        .collect();
    let on = tables[rng.gen_range(0..nt)];
    Arc::new(
        Schema::build(
            tables,
            &[("Val", ScalarKind::Int)],
            &homs,
            &[("val", on, "Val")],
        )
        .expect("valid schema"),
    )
}

/// Raises counts until every hom out of a nonempty table has somewhere to
/// land.
fn fix_counts(s: &Schema, counts: &mut [usize]) {
    loop {
        let mut changed = false;
        for h in 0..s.homs().len() {
            let (a, b) = (s.hom_src(h), s.hom_tgt(h));
            if counts[a] > 0 && counts[b] == 0 {
                counts[b] = 1;
                changed = true;
            }
        }
        if !changed {
            return;
        }
    }
}

fn random_instance(
    rng: &mut SimRng,
    s: &Arc<Schema>,
    counts: Vec<usize>,
    value: &mut dyn FnMut(&mut SimRng) -> AttrValue,
) -> Arc<ACSet> {
    let homs = (0..s.homs().len())
        .map(|h| {
            (0..counts[s.hom_src(h)])
                .map(|_| rng.gen_range(0..counts[s.hom_tgt(h)]))
                .collect()
        })
        .collect();
    let attrs = (0..s.attrs().len())
        .map(|a| (0..counts[s.attr_src(a)]).map(|_| value(rng)).collect())
        .collect();
    Arc::new(ACSet::from_columns(Arc::clone(s), counts, homs, attrs).expect("valid instance"))
}

fn ground_int(rng: &mut SimRng) -> AttrValue {
    AttrValue::int(rng.gen_range(0..2))
}

/// Every component assignment, filtered by naturality and (optionally)
/// injectivity.
fn brute_force_homs(p: &ACSet, x: &ACSet, monic: bool) -> Vec<Vec<Vec<usize>>> {
    let s = p.schema();
    let nt = s.tables().len();
    let cells: Vec<(usize, usize)> = (0..nt)
        .flat_map(|t| (0..p.nparts(t)).map(move |i| (t, i)))
        .collect();
    if cells.iter().any(|&(t, _)| x.nparts(t) == 0) {
        return Vec::new();
    }
    let mut digits = vec![0usize; cells.len()];
    let mut out = Vec::new();
    loop {
        let mut comp: Vec<Vec<usize>> = (0..nt).map(|t| vec![0; p.nparts(t)]).collect();
        for (&(t, i), &d) in cells.iter().zip(&digits) {
            comp[t][i] = d;
        }
        if natural(p, x, &comp) && (!monic || injective(&comp)) {
            out.push(comp);
        }
        let mut j = 0;
        loop {
            if j == cells.len() {
                out.sort();
                return out;
            }
            digits[j] += 1;
            if digits[j] < x.nparts(cells[j].0) {
                break;
            }
            digits[j] = 0;
            j += 1;
        }
    }
}

fn natural(p: &ACSet, x: &ACSet, comp: &[Vec<usize>]) -> bool {
    let s = p.schema();
    for h in 0..s.homs().len() {
        let (a, b) = (s.hom_src(h), s.hom_tgt(h));
        for i in 0..p.nparts(a) {
            if comp[b][p.hom(h, i)] != x.hom(h, comp[a][i]) {
                return false;
            }
        }
    }
    let mut binding: BTreeMap<u32, AttrValue> = BTreeMap::new();
    for a in 0..s.attrs().len() {
        for i in 0..p.nparts(s.attr_src(a)) {
            let there = x.attr(a, comp[s.attr_src(a)][i]);
            match p.attr(a, i) {
                AttrValue::Var(v) => {
                    if binding.entry(*v).or_insert_with(|| there.clone()) != there {
                        return false;
                    }
                }
                c => {
                    if c != there {
                        return false;
                    }
                }
            }
        }
    }
    true
}

fn injective(comp: &[Vec<usize>]) -> bool {
    comp.iter().all(|col| {
        let mut seen = col.clone();
        seen.sort_unstable();
        seen.windows(2).all(|w| w[0] != w[1])
    })
}

pub fn hom_oracle() -> Outcome {
    let mut rng = rng_from_seed(0x4035);
    let mut disagreements = Vec::new();
    let mut total_homs = 0;
    for case in 0..200 {
        let s = random_schema(&mut rng);
        let nt = s.tables().len();
        let pattern = loop {
            let mut counts: Vec<usize> = (0..nt).map(|_| rng.gen_range(0..=2)).collect();
            fix_counts(&s, &mut counts);
            if counts.iter().sum::<usize>() <= 6 {
                break random_instance(&mut rng, &s, counts, &mut |r| {
                    if r.gen_bool(0.5) {
                        AttrValue::Var(r.gen_range(0..3))
                    } else {
                        ground_int(r)
                    }
                });
            }
        };
        let mut counts: Vec<usize> = (0..nt).map(|_| rng.gen_range(0..=4)).collect();
        fix_counts(&s, &mut counts);
        let target = random_instance(&mut rng, &s, counts, &mut ground_int);
        let monic = case % 2 == 1;
        let opts = if monic {
            HomOptions::monic()
        } else {
            HomOptions::default()
        };
        let mut ours: Vec<Vec<Vec<usize>>> = homomorphisms(&pattern, &target, &opts)
            .expect("same schema")
            .iter()
            .map(|f| f.components().to_vec())
            .collect();
        ours.sort();
        let oracle = brute_force_homs(&pattern, &target, monic);
        total_homs += oracle.len();
        if ours != oracle {
            disagreements.push(format!(
                "case {case}: {} vs {} homs",
                ours.len(),
                oracle.len()
            ));
        }
    }
    Outcome::new(
        disagreements.is_empty(),
        match disagreements.first() {
            None => format!("200/200 agree ({total_homs} homomorphisms in total)"),
            Some(d) => format!("{} disagreements, first {d}", disagreements.len()),
        },
    )
}

fn graph_schema() -> Arc<Schema> {
    Arc::new(
        Schema::build(
            &["V", "E"],
            &[("Mark", ScalarKind::Int)],
            &[("src", "E", "V"), ("tgt", "E", "V")],
            &[("mark", "V", "Mark")],
        )
        .expect("graph schema"),
    )
}

fn random_graph(
    rng: &mut SimRng,
    s: &Arc<Schema>,
    nv: (usize, usize),
    ne: (usize, usize),
) -> Arc<ACSet> {
    let v = rng.gen_range(nv.0..=nv.1);
    let e = if v == 0 {
        0
    } else {
        rng.gen_range(ne.0..=ne.1)
    };
    random_instance(rng, s, vec![v, e], &mut ground_int)
}

fn random_hom(
    rng: &mut SimRng,
    a: &Arc<ACSet>,
    b: &Arc<ACSet>,
    monic: bool,
) -> Option<ACSetMorphism> {
    let opts = if monic {
        HomOptions::monic()
    } else {
        HomOptions::default()
    };
    homomorphisms(a, b, &opts).ok()?.choose(rng).cloned()
}

/// Is the square `K -l-> L -m-> X`, `K -> D ⊆ X` a pushout? With `l` monic
/// this holds per table exactly when `m` sends `L \ l(K)` injectively onto
/// the complement of `D`.
fn is_pushout_square(l: &ACSetMorphism, m: &ACSetMorphism, keep: &[Vec<bool>]) -> bool {
    let (lhs, x) = (l.cod(), m.cod());
    for t in 0..2 {
        let mut hit = vec![false; x.nparts(t)];
        for i in 0..lhs.nparts(t) {
            if l.component(t).contains(&i) {
                continue;
            }
            let y = m.apply(t, i);
            if keep[t][y] || hit[y] {
                return false;
            }
            hit[y] = true;
        }
        if (0..x.nparts(t)).any(|y| !keep[t][y] && !hit[y]) {
            return false;
        }
    }
    true
}

/// Searches every subobject of `X` containing `m(l(K))` for one that
/// completes the square to a pushout.
fn brute_force_complement(l: &ACSetMorphism, m: &ACSetMorphism) -> Option<Arc<ACSet>> {
    let x = m.cod();
    let s = x.schema();
    let cells: Vec<(usize, usize)> = (0..2)
        .flat_map(|t| (0..x.nparts(t)).map(move |i| (t, i)))
        .collect();
    for mask in 0u32..(1 << cells.len()) {
        let mut keep: Vec<Vec<bool>> = (0..2).map(|t| vec![false; x.nparts(t)]).collect();
        for (j, &(t, i)) in cells.iter().enumerate() {
            keep[t][i] = mask & (1 << j) != 0;
        }
        let closed = (0..s.homs().len())
            .all(|h| (0..x.nparts(1)).all(|e| !keep[1][e] || keep[0][x.hom(h, e)]));
        let contains_k =
            (0..2).all(|t| (0..l.dom().nparts(t)).all(|c| keep[t][m.apply(t, l.apply(t, c))]));
        if closed && contains_k && is_pushout_square(l, m, &keep) {
            return Some(Arc::new(x.induced(&keep).0));
        }
    }
    None
}

pub fn pushout_oracle() -> Outcome {
    let s = graph_schema();
    let mut rng = rng_from_seed(0xD0);
    let mut bad = Vec::new();
    let (mut verified, mut rebuilt, mut exists, mut rejected) = (0, 0, 0, 0);
    let mut case = 0;
    while case < 100 {
        // A pushout of a monic leg, then its complement.
        let k = random_graph(&mut rng, &s, (0, 2), (0, 1));
        let x = random_graph(&mut rng, &s, (1, 2), (0, 2));
        let y = random_graph(&mut rng, &s, (1, 2), (0, 1));
        let (Some(f), Some(g)) = (
            random_hom(&mut rng, &k, &x, true),
            random_hom(&mut rng, &k, &y, false),
        ) else {
            continue;
        };
        let po = pushout(&f, &g).expect("ground pushout");
        if po.apex.total_parts() > 6 {
            continue;
        }
        case += 1;
        match verify_pushout(&f, &g, &po.left, &po.right, 6) {
            Ok(true) => verified += 1,
            other => bad.push(format!("case {case}: verify_pushout gave {other:?}")),
        }
        match pushout_complement(&f, &po.left) {
            Ok(pc) if is_isomorphic(&pc.object, &y) => rebuilt += 1,
            Ok(_) => bad.push(format!(
                "case {case}: complement not isomorphic to the glued leg"
            )),
            Err(e) => bad.push(format!("case {case}: complement failed: {e}")),
        }
    }
    // Random monic rule legs and arbitrary matches, against brute force.
    let mut case = 0;
    while case < 100 {
        let kk = random_graph(&mut rng, &s, (0, 2), (0, 1));
        let ll = random_graph(&mut rng, &s, (1, 3), (0, 2));
        let xx = random_graph(&mut rng, &s, (1, 3), (0, 3));
        let Some(l) = random_hom(&mut rng, &kk, &ll, true) else {
            continue;
        };
        let Some(m) = random_hom(&mut rng, &ll, &xx, false) else {
            continue;
        };
        case += 1;
        let ours = pushout_complement(&l, &m);
        let oracle = brute_force_complement(&l, &m);
        match (ours, oracle) {
            (Ok(pc), Some(d)) => {
                let commutes = l.compose(&m).map(|a| a.components().to_vec())
                    == pc.k.compose(&pc.d).map(|b| b.components().to_vec());
                if is_isomorphic(&pc.object, &d) && commutes {
                    exists += 1;
                } else {
                    bad.push(format!("case {case}: complements differ"));
                }
            }
            (Err(_), None) => rejected += 1,
            (Ok(_), None) => bad.push(format!("case {case}: accepted a match with no complement")),
            (Err(e), Some(_)) => bad.push(format!(
                "case {case}: rejected ({e}) though a complement exists"
            )),
        }
    }
    Outcome::new(
        bad.is_empty(),
        match bad.first() {
            None => format!(
                "{verified}/100 verified, {rebuilt}/100 rebuilt, gluing agrees on {} ({exists} exist, {rejected} rejected)",
                exists + rejected
            ),
            Some(b) => format!("{} problems, first {b}", bad.len()),
        },
    )
}
