// SPDX-License-Identifier: Apache-2.0
//! Graphviz output for schedules and instances.

use std::fmt::Write as _;

use crate::acset::{ACSet, AttrValue, Scalar};
use crate::scheduler::{Schedule, Source, Target};

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' | '\\' => {
                out.push('\\');
                out.push(c);
            }
            '\n' => out.push_str("\\n"),
            _ => out.push(c),
        }
    }
    out.push('"');
    out
}

fn cell(v: &AttrValue) -> String {
    match v {
        AttrValue::Var(n) => format!("${n}"),
        AttrValue::Concrete(Scalar::Str(s)) => s.to_string(),
        AttrValue::Concrete(c) => c.to_string(),
    }
}

/// Boxes become nodes labelled with their generator type; wires are edges
/// labelled with the ports they join.
pub fn schedule_to_dot(s: &Schedule) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "digraph {} {{", quote(&s.name));
    out.push_str("  rankdir=LR;\n");
    for i in 0..s.inputs.len() {
        let _ = writeln!(
            out,
            "  in{i} [shape=point, xlabel={}];",
            quote(&format!("input.{i}"))
        );
    }
    for i in 0..s.outputs.len() {
        let _ = writeln!(
            out,
            "  out{i} [shape=point, xlabel={}];",
            quote(&format!("output.{i}"))
        );
    }
    for (i, b) in s.boxes.iter().enumerate() {
        let label = format!("{}\n{}", b.name, b.generator.type_name());
        let _ = writeln!(out, "  b{i} [shape=box, label={}];", quote(&label));
    }
    for w in &s.wires {
        let (from, fp) = match w.src {
            Source::Input(i) => (format!("in{i}"), None),
            Source::Box { index, port } => (format!("b{index}"), Some(port)),
        };
        let (to, tp) = match w.tgt {
            Target::Output(i) => (format!("out{i}"), None),
            Target::Box { index, port } => (format!("b{index}"), Some(port)),
        };
        let label = match (fp, tp) {
            (Some(a), Some(b)) => format!("{a}→{b}"),
            (Some(a), None) => format!("{a}→"),
            (None, Some(b)) => format!("→{b}"),
            (None, None) => String::new(),
        };
        let _ = writeln!(out, "  {from} -> {to} [label={}];", quote(&label));
    }
    out.push_str("}\n");
    out
}

/// One node per part, labelled `Table#i` plus its attribute values; one
/// edge per hom value.
pub fn instance_to_dot(x: &ACSet) -> String {
    let s = x.schema();
    let mut out = String::from("digraph instance {\n");
    for (t, name) in s.tables().iter().enumerate() {
        for p in 0..x.nparts(t) {
            let mut label = format!("{name}#{p}");
            for a in s.attrs_from(t) {
                let _ = write!(label, "\n{}={}", s.attrs()[a].name, cell(x.attr(a, p)));
            }
            let _ = writeln!(
                out,
                "  {} [label={}];",
                quote(&format!("{name}#{p}")),
                quote(&label)
            );
        }
    }
    for (h, d) in s.homs().iter().enumerate() {
        for p in 0..x.nparts(s.hom_src(h)) {
            let _ = writeln!(
                out,
                "  {} -> {} [label={}];",
                quote(&format!("{}#{p}", d.src)),
                quote(&format!("{}#{}", d.tgt, x.hom(h, p))),
                quote(&d.name)
            );
        }
    }
    out.push_str("}\n");
    out
}
