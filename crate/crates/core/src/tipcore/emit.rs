use std::fmt::Write;

use std::collections::BTreeSet;

use super::{MatchTree, TipFun, TipProblem};
use crate::instantiate::Equation;
use crate::syntax::{DataDecl, Term, Type};

pub(super) fn ty(t: &Type) -> String {
    match t {
        Type::Var(v) => v.to_string(),
        Type::Con(n, args) if args.is_empty() => n.to_string(),
        Type::Con(n, args) => format!("({n} {})", args.iter().map(ty).collect::<Vec<_>>().join(" ")),
        Type::Arrow(a, b) => format!("(=> {} {})", ty(a), ty(b)),
    }
}

pub(super) fn term(t: &Term) -> String {
    match t {
        Term::Var(v) => v.to_string(),
        Term::App(h, args) if args.is_empty() => h.to_string(),
        Term::App(h, args) => format!("({h} {})", args.iter().map(term).collect::<Vec<_>>().join(" ")),
    }
}

fn datatype(d: &DataDecl) -> String {
    let ctors: Vec<String> = d
        .ctors
        .iter()
        .map(|c| {
            let mut s = format!("({}", c.name);
            for (i, a) in c.args.iter().enumerate() {
                write!(s, " ({}_{i} {})", c.name, ty(a)).unwrap();
            }
            s.push(')');
            s
        })
        .collect();
    let body = format!("({})", ctors.join(" "));
    if d.params.is_empty() {
        format!("(declare-datatype {} {body})", d.name)
    } else {
        let ps: Vec<&str> = d.params.iter().map(|p| p.as_str()).collect();
        format!("(declare-datatype {} (par ({}) {body}))", d.name, ps.join(" "))
    }
}

fn equation(e: &Equation) -> String {
    let eq = format!("(= {} {})", term(&e.lhs), term(&e.rhs));
    if e.universals.is_empty() {
        return eq;
    }
    let binders: Vec<String> = e.universals.iter().map(|(v, t)| format!("({v} {})", ty(t))).collect();
    format!("(forall ({}) {eq})", binders.join(" "))
}

fn tree(t: &MatchTree, indent: usize, out: &mut String) {
    match t {
        MatchTree::Leaf(x) => out.push_str(&term(x)),
        MatchTree::Match { scrutinee, cases } => {
            write!(out, "(match {scrutinee}").unwrap();
            for c in cases {
                let pat = if c.vars.is_empty() {
                    c.ctor.to_string()
                } else {
                    let vs: Vec<&str> = c.vars.iter().map(|v| v.as_str()).collect();
                    format!("({} {})", c.ctor, vs.join(" "))
                };
                write!(out, "\n{}(case {pat}", " ".repeat(indent + 2)).unwrap();
                if let MatchTree::Match { .. } = c.body {
                    write!(out, "\n{}", " ".repeat(indent + 4)).unwrap();
                    tree(&c.body, indent + 4, out);
                } else {
                    out.push(' ');
                    tree(&c.body, indent + 2, out);
                }
                out.push(')');
            }
            out.push(')');
        }
    }
}

/// Renders a problem: metadata, sorts and datatypes, declarations, definitions,
/// axioms, and finally the goal. Forms are separated by blank lines.
pub fn emit_tip(p: &TipProblem) -> String {
    let mut forms = vec![format!("(set-info :lawkeeper-task {})", p.name)];
    if p.higher_order {
        forms.push("(set-info :higher-order true)".to_string());
    }
    for s in &p.sorts {
        forms.push(format!("(declare-sort {s} 0)"));
    }
    forms.extend(p.datatypes.iter().map(datatype));
    for d in &p.declared {
        let args: Vec<String> = d.args.iter().map(ty).collect();
        forms.push(format!("(declare-fun {} ({}) {})", d.name, args.join(" "), ty(&d.ret)));
    }
    for d in &p.unspecified {
        forms.push(format!("(declare-const {} {})", d.name, ty(&d.ret)));
    }
    for group in recursive_groups(&p.functions) {
        let sig = |f: &TipFun| {
            let params: Vec<String> = f.params.iter().map(|(v, t)| format!("({v} {})", ty(t))).collect();
            format!("{} ({}) {}", f.name, params.join(" "), ty(&f.ret))
        };
        let mut s;
        if let [i] = group[..] {
            let f = &p.functions[i];
            s = format!("(define-fun-rec {}\n  ", sig(f));
            tree(&f.body, 2, &mut s);
        } else {
            let sigs: Vec<String> = group.iter().map(|&i| format!("({})", sig(&p.functions[i]))).collect();
            s = format!("(define-funs-rec\n  ({})\n  (", sigs.join("\n   "));
            for (k, &i) in group.iter().enumerate() {
                if k > 0 {
                    s.push_str("\n   ");
                }
                tree(&p.functions[i].body, 3, &mut s);
            }
            s.push(')');
        }
        s.push(')');
        forms.push(s);
    }
    for a in &p.axioms {
        forms.push(format!("(assert (! {} :named {}))", equation(a), a.name));
    }
    forms.push(format!("(assert-not {})", equation(&p.goal)));
    let mut out = forms.join("\n\n");
    out.push('\n');
    out
}

/// Splits functions into mutually recursive groups, each emitted where its
/// last member stood. Callees come first, so every group still follows the
/// functions it calls.
fn recursive_groups(funs: &[TipFun]) -> Vec<Vec<usize>> {
    let calls: Vec<BTreeSet<usize>> = funs
        .iter()
        .map(|f| {
            let mut heads = BTreeSet::new();
            f.body.leaves().into_iter().for_each(|t| t.heads(&mut heads));
            (0..funs.len()).filter(|&j| heads.contains(&funs[j].name)).collect()
        })
        .collect();
    let reach: Vec<BTreeSet<usize>> = (0..funs.len())
        .map(|i| {
            let mut seen = BTreeSet::new();
            let mut todo = vec![i];
            while let Some(k) = todo.pop() {
                for &j in &calls[k] {
                    if seen.insert(j) {
                        todo.push(j);
                    }
                }
            }
            seen
        })
        .collect();
    let mut groups = Vec::new();
    for i in 0..funs.len() {
        let group: Vec<usize> = (0..funs.len()).filter(|&j| j == i || (reach[i].contains(&j) && reach[j].contains(&i))).collect();
        if group.last() == Some(&i) {
            groups.push(group);
        }
    }
    groups
}
