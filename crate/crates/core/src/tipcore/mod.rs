//! TIP-style S-expression problems: lowering from proof tasks, a bit-stable
//! printer and a reader for the emitted dialect.

mod emit;
mod matchtree;
mod parse;
mod sexpr;

use std::collections::{BTreeSet, HashMap};

use thiserror::Error;

use crate::instantiate::{Equation, ProofTask};
use crate::syntax::{DataDecl, FunDecl, Symbol, Term, Type};

pub use emit::emit_tip;
pub use matchtree::{Case, Compiler, MatchTree};
pub use parse::parse_tip;
pub use sexpr::{parse_sexprs, SExpr};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TipError {
    #[error("{line}:{col}: {message}")]
    SExpr { line: usize, col: usize, message: String },
    #[error("{line}:{col}: unknown keyword `{keyword}`")]
    UnknownKeyword { line: usize, col: usize, keyword: String },
    #[error("{line}:{col}: `{name}` is used before it is declared")]
    DeclarationOrder { line: usize, col: usize, name: String },
    #[error("{line}:{col}: {message}")]
    Malformed { line: usize, col: usize, message: String },
}

/// A defined function with its body compiled to a match tree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TipFun {
    pub name: Symbol,
    pub params: Vec<(Symbol, Type)>,
    pub ret: Type,
    pub body: MatchTree,
}

/// A declared but undefined symbol: an assumed operation, or the constant
/// standing for the result of a non-exhaustive match.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TipDecl {
    pub name: Symbol,
    pub args: Vec<Type>,
    pub ret: Type,
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct TipProblem {
    pub name: String,
    pub higher_order: bool,
    pub datatypes: Vec<DataDecl>,
    pub sorts: Vec<Symbol>,
    pub declared: Vec<TipDecl>,
    /// Constants returned by uncovered match branches.
    pub unspecified: Vec<TipDecl>,
    pub functions: Vec<TipFun>,
    pub axioms: Vec<Equation>,
    pub goal: Equation,
}

impl TipProblem {
    pub fn function(&self, name: &str) -> Option<&TipFun> {
        self.functions.iter().find(|f| f.name == name)
    }

    pub fn is_unspecified(&self, name: &str) -> bool {
        self.unspecified.iter().any(|d| d.name == name)
    }
}

fn type_names(t: &Type, out: &mut BTreeSet<Symbol>) {
    match t {
        Type::Var(_) => {}
        Type::Con(n, args) => {
            out.insert(n.clone());
            args.iter().for_each(|a| type_names(a, out));
        }
        Type::Arrow(a, b) => {
            type_names(a, out);
            type_names(b, out);
        }
    }
}

/// Orders items so that each comes after the items it depends on, keeping the
/// original order otherwise; members of a cycle keep their original order.
fn dependency_order<T>(items: Vec<T>, name: impl Fn(&T) -> Symbol, deps: impl Fn(&T) -> BTreeSet<Symbol>) -> Vec<T> {
    let names: Vec<Symbol> = items.iter().map(&name).collect();
    let deps: Vec<BTreeSet<Symbol>> = items.iter().map(&deps).collect();
    let mut placed = vec![false; items.len()];
    let mut order = Vec::new();
    fn visit(i: usize, names: &[Symbol], deps: &[BTreeSet<Symbol>], placed: &mut [bool], stack: &mut Vec<usize>, order: &mut Vec<usize>) {
        if placed[i] || stack.contains(&i) {
            return;
        }
        stack.push(i);
        for d in &deps[i] {
            if let Some(j) = names.iter().position(|n| n == d) {
                visit(j, names, deps, placed, stack, order);
            }
        }
        stack.pop();
        if !placed[i] {
            placed[i] = true;
            order.push(i);
        }
    }
    for i in 0..items.len() {
        visit(i, &names, &deps, &mut placed, &mut Vec::new(), &mut order);
    }
    let mut slots: Vec<Option<T>> = items.into_iter().map(Some).collect();
    order.into_iter().map(|i| slots[i].take().expect("each item placed once")).collect()
}

fn lower_fun(f: &FunDecl, datatypes: &[DataDecl], unspecified: &mut Vec<TipDecl>) -> TipFun {
    let (args, ret) = f.signature.body.split_arrows();
    // Parameters beyond the equations' patterns stay part of the result type.
    let n = f.equations.first().map(|e| e.patterns.len()).unwrap_or(args.len());
    let arg_types: Vec<Type> = args.iter().take(n).map(|t| (*t).clone()).collect();
    let ret = Type::arrows(args.iter().skip(n).map(|t| (*t).clone()), ret.clone());
    let undef = Symbol::from(format!("{}_unspecified", f.name));
    let mut c = Compiler::new(datatypes, undef.clone());
    let (params, body) = c.compile(&f.equations, &arg_types);
    if c.partial {
        unspecified.push(TipDecl { name: undef, args: vec![], ret: ret.clone() });
    }
    TipFun { name: f.name.clone(), params: params.into_iter().zip(arg_types).collect(), ret, body }
}

/// Lowers a task: datatypes before their users, functions in call order, and
/// every equation with explicit typed binders.
pub fn lower_task(task: &ProofTask) -> TipProblem {
    let datatypes = dependency_order(task.datatypes.clone(), |d| d.name.clone(), |d| {
        let mut s = BTreeSet::new();
        d.ctors.iter().flat_map(|c| &c.args).for_each(|t| type_names(t, &mut s));
        s
    });
    let mut unspecified = Vec::new();
    let funs: Vec<TipFun> = task.definitions.iter().map(|f| lower_fun(f, &datatypes, &mut unspecified)).collect();
    let functions = dependency_order(funs, |f| f.name.clone(), |f| {
        let mut s = BTreeSet::new();
        f.body.leaves().iter().for_each(|t| t.heads(&mut s));
        s
    });
    let declared = task
        .dummy_sorts
        .iter()
        .flat_map(|d| &d.assumed_ops)
        .map(|(name, ty)| {
            let (args, ret) = ty.split_arrows();
            TipDecl { name: name.clone(), args: args.into_iter().cloned().collect(), ret: ret.clone() }
        })
        .collect();
    TipProblem {
        name: task.id.clone(),
        higher_order: task.higher_order,
        datatypes,
        sorts: task.dummy_sorts.iter().map(|d| d.name.clone()).collect(),
        declared,
        unspecified,
        functions,
        axioms: task.axioms.clone(),
        goal: task.goal.clone(),
    }
}

/// Symbols the problem references without declaring; empty for well-formed output.
pub fn undeclared_symbols(problem: &TipProblem) -> BTreeSet<Symbol> {
    let mut declared: BTreeSet<Symbol> = BTreeSet::new();
    for d in &problem.datatypes {
        declared.insert(d.name.clone());
        declared.extend(d.ctors.iter().map(|c| c.name.clone()));
    }
    declared.extend(problem.sorts.iter().cloned());
    declared.extend(problem.declared.iter().chain(&problem.unspecified).map(|d| d.name.clone()));
    declared.extend(problem.functions.iter().map(|f| f.name.clone()));
    let mut missing = BTreeSet::new();
    let check_term = |t: &Term, bound: &dyn Fn(&str) -> bool, missing: &mut BTreeSet<Symbol>| {
        let mut hs = BTreeSet::new();
        t.heads(&mut hs);
        let mut vs = Vec::new();
        t.vars(&mut vs);
        for h in hs.into_iter().chain(vs) {
            if !bound(&h) && !declared.contains(&h) {
                missing.insert(h);
            }
        }
    };
    for e in problem.axioms.iter().chain(std::iter::once(&problem.goal)) {
        let vars: HashMap<&str, ()> = e.universals.iter().map(|(v, _)| (v.as_str(), ())).collect();
        check_term(&e.lhs, &|s| vars.contains_key(s), &mut missing);
        check_term(&e.rhs, &|s| vars.contains_key(s), &mut missing);
    }
    for f in &problem.functions {
        let mut bound: BTreeSet<Symbol> = f.params.iter().map(|(p, _)| p.clone()).collect();
        collect_binders(&f.body, &mut bound);
        for leaf in f.body.leaves() {
            check_term(leaf, &|s| bound.contains(s), &mut missing);
        }
    }
    missing
}

fn collect_binders(t: &MatchTree, out: &mut BTreeSet<Symbol>) {
    if let MatchTree::Match { cases, .. } = t {
        for c in cases {
            out.extend(c.vars.iter().cloned());
            collect_binders(&c.body, out);
        }
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::frontend::parse_program;
    use crate::instantiate::build_tasks;
    use crate::typecheck::check_program;

    pub(crate) const PLUS_COMM: &str = "data Nat = Zero | Succ Nat
plus :: Nat -> Nat -> Nat
plus Zero a = a
plus (Succ a) b = Succ (plus a b)
law plusComm :: Nat -> Nat -> Equality Nat
law plusComm x y = plus x y === plus y x
";

    pub(crate) fn tasks(src: &str) -> Vec<ProofTask> {
        let (p, t) = check_program(&parse_program(src).unwrap()).unwrap();
        build_tasks(&p, &t).unwrap()
    }

    pub(crate) fn problems(src: &str) -> Vec<TipProblem> {
        tasks(src).iter().map(lower_task).collect()
    }

    #[test]
    fn plus_comm_goal_line() {
        let text = emit_tip(&problems(PLUS_COMM)[0]);
        assert!(text.lines().any(|l| l == "(assert-not (forall ((x Nat) (y Nat)) (= (plus x y) (plus y x))))"), "{text}");
        assert!(text.trim_end().ends_with("(assert-not (forall ((x Nat) (y Nat)) (= (plus x y) (plus y x))))"));
    }

    #[test]
    fn round_trip_and_closure() {
        let p = &problems(PLUS_COMM)[0];
        assert!(undeclared_symbols(p).is_empty());
        let text = emit_tip(p);
        assert_eq!(&parse_tip(&text).unwrap(), p);
        assert_eq!(emit_tip(&parse_tip(&text).unwrap()), text);
    }

    #[test]
    fn minimal_problem_has_only_the_goal_assertion() {
        let text = emit_tip(&problems(PLUS_COMM)[0]);
        assert_eq!(text.matches("(assert").count(), 1);
    }

    #[test]
    fn goal_must_be_an_equation() {
        assert!(matches!(parse_tip("(assert-not true)"), Err(TipError::Malformed { .. } | TipError::UnknownKeyword { .. })));
    }

    #[test]
    fn datatype_after_use_is_rejected() {
        let text = "(declare-fun f (Nat) Nat)\n(declare-datatype Nat ((Zero) (Succ (Succ_0 Nat))))\n(assert-not (forall ((x Nat)) (= (f x) x)))\n";
        assert!(matches!(parse_tip(text), Err(TipError::DeclarationOrder { .. })), "{:?}", parse_tip(text));
    }

    #[test]
    fn unknown_form_rejected() {
        assert!(matches!(parse_tip("(push 1)"), Err(TipError::UnknownKeyword { .. })));
    }
}
