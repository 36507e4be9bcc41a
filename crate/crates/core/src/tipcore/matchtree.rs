//! Compilation of first-match equation lists into a single case tree.

use std::collections::{HashMap, HashSet};

use crate::syntax::{DataDecl, Equation, Pattern, Symbol, Term, Type};

/// Body of a lowered function: nested matches on variables ending in terms.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MatchTree {
    Leaf(Term),
    Match { scrutinee: Symbol, cases: Vec<Case> },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Case {
    pub ctor: Symbol,
    pub vars: Vec<Symbol>,
    pub body: MatchTree,
}

impl MatchTree {
    /// One `(argument patterns, result)` pair per leaf, with matched variables
    /// replaced by the constructor patterns leading to that leaf.
    pub fn paths(&self, params: &[Symbol]) -> Vec<(Vec<Term>, Term)> {
        let mut out = Vec::new();
        let start: HashMap<Symbol, Term> = HashMap::new();
        self.collect(params, &start, &mut out);
        out
    }

    fn collect(&self, params: &[Symbol], s: &HashMap<Symbol, Term>, out: &mut Vec<(Vec<Term>, Term)>) {
        match self {
            MatchTree::Leaf(t) => {
                let resolve = |v: &Symbol| resolve_var(v, s);
                let args = params.iter().map(resolve).collect();
                out.push((args, t.subst(&|v| s.contains_key(v).then(|| resolve_var(v, s)))));
            }
            MatchTree::Match { scrutinee, cases } => {
                for c in cases {
                    let mut s = s.clone();
                    let pat = Term::App(c.ctor.clone(), c.vars.iter().map(|v| Term::Var(v.clone())).collect());
                    s.insert(scrutinee.clone(), pat);
                    c.body.collect(params, &s, out);
                }
            }
        }
    }

    pub fn leaves(&self) -> Vec<&Term> {
        match self {
            MatchTree::Leaf(t) => vec![t],
            MatchTree::Match { cases, .. } => cases.iter().flat_map(|c| c.body.leaves()).collect(),
        }
    }
}

fn resolve_var(v: &Symbol, s: &HashMap<Symbol, Term>) -> Term {
    match s.get(v) {
        None => Term::Var(v.clone()),
        Some(t) => t.subst(&|x| s.contains_key(x).then(|| resolve_var(x, s))),
    }
}

struct Row {
    patterns: Vec<Pattern>,
    binds: HashMap<Symbol, Symbol>,
    rhs: Term,
}

/// Compiles equations over `param_types` into a tree; uncovered inputs reach
/// `App(unspecified, [])`. Returns parameter names and the tree.
pub struct Compiler<'d> {
    datatypes: &'d [DataDecl],
    used: HashSet<Symbol>,
    unspecified: Symbol,
    pub partial: bool,
}

impl<'d> Compiler<'d> {
    pub fn new(datatypes: &'d [DataDecl], unspecified: Symbol) -> Self {
        Compiler { datatypes, used: HashSet::new(), unspecified, partial: false }
    }

    fn fresh(&mut self, hint: Option<&Symbol>) -> Symbol {
        let base = hint.map(|h| h.to_string()).unwrap_or_else(|| "x".to_string());
        if self.used.insert(Symbol::from(base.clone())) {
            return Symbol::from(base);
        }
        let mut k = 1;
        loop {
            let cand = Symbol::from(format!("{base}{k}"));
            if self.used.insert(cand.clone()) {
                return cand;
            }
            k += 1;
        }
    }

    pub fn compile(&mut self, equations: &[Equation], param_types: &[Type]) -> (Vec<Symbol>, MatchTree) {
        let params: Vec<Symbol> = (0..param_types.len())
            .map(|i| {
                let hint = equations.iter().find_map(|e| match e.patterns.get(i) {
                    Some(Pattern::Var(v)) => Some(v.clone()),
                    _ => None,
                });
                self.fresh(hint.as_ref())
            })
            .collect();
        let rows = equations
            .iter()
            .map(|e| Row { patterns: e.patterns.clone(), binds: HashMap::new(), rhs: e.rhs.clone() })
            .collect();
        let occ: Vec<(Symbol, Type)> = params.iter().cloned().zip(param_types.iter().cloned()).collect();
        let tree = self.rows(rows, occ);
        (params, tree)
    }

    fn rows(&mut self, mut rows: Vec<Row>, occ: Vec<(Symbol, Type)>) -> MatchTree {
        if rows.is_empty() {
            self.partial = true;
            return MatchTree::Leaf(Term::App(self.unspecified.clone(), vec![]));
        }
        // Bind variables in the first row; split on its first constructor column.
        let first = &rows[0];
        let Some(col) = first.patterns.iter().position(|p| matches!(p, Pattern::Ctor(..))) else {
            let mut row = rows.swap_remove(0);
            for (p, (o, _)) in row.patterns.iter().zip(&occ) {
                if let Pattern::Var(v) = p {
                    row.binds.insert(v.clone(), o.clone());
                }
            }
            let binds = row.binds;
            return MatchTree::Leaf(row.rhs.subst(&|v| binds.get(v).map(|o| Term::Var(o.clone()))));
        };
        let (scrut, ty) = occ[col].clone();
        let Type::Con(tname, targs) = &ty else { unreachable!("constructor patterns only occur at datatypes") };
        let data = self.datatypes.iter().find(|d| &d.name == tname).expect("pattern datatype is in scope").clone();
        let mut cases = Vec::new();
        for ctor in &data.ctors {
            let field_types = data.ctor_arg_types(ctor, targs);
            let hints: Vec<Option<Symbol>> = (0..ctor.args.len())
                .map(|j| {
                    rows.iter().find_map(|r| match &r.patterns[col] {
                        Pattern::Ctor(c, ps) if c == &ctor.name => match &ps[j] {
                            Pattern::Var(v) => Some(v.clone()),
                            _ => None,
                        },
                        _ => None,
                    })
                })
                .collect();
            let vars: Vec<Symbol> = hints.iter().map(|h| self.fresh(h.as_ref())).collect();
            let mut sub_rows = Vec::new();
            for r in &rows {
                let fields = match &r.patterns[col] {
                    Pattern::Ctor(c, ps) if c == &ctor.name => ps.clone(),
                    Pattern::Ctor(..) => continue,
                    Pattern::Var(_) | Pattern::Wildcard => vec![Pattern::Wildcard; ctor.args.len()],
                };
                let mut binds = r.binds.clone();
                if let Pattern::Var(v) = &r.patterns[col] {
                    binds.insert(v.clone(), scrut.clone());
                }
                let mut patterns = r.patterns.clone();
                patterns.splice(col..=col, fields);
                sub_rows.push(Row { patterns, binds, rhs: r.rhs.clone() });
            }
            let mut sub_occ = occ.clone();
            sub_occ.splice(col..=col, vars.iter().cloned().zip(field_types));
            let body = self.rows(sub_rows, sub_occ);
            cases.push(Case { ctor: ctor.name.clone(), vars, body });
        }
        MatchTree::Match { scrutinee: scrut, cases }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse_program;
    use crate::syntax::Decl;

    fn compile(src: &str, f: &str) -> (Vec<Symbol>, MatchTree, bool) {
        let p = parse_program(src).unwrap();
        let datas: Vec<DataDecl> = p.datatypes().cloned().collect();
        let fun = p.functions().find(|x| x.name == f).unwrap().clone();
        let (args, _) = fun.signature.body.split_arrows();
        let args: Vec<Type> = args.into_iter().cloned().collect();
        let mut c = Compiler::new(&datas, Symbol::new("undef"));
        let (ps, t) = c.compile(&fun.equations, &args);
        let _ = Decl::Fun(fun);
        (ps, t, c.partial)
    }

    const SRC: &str = "data Nat = Zero | Succ Nat
data Bool = False | True
plus :: Nat -> Nat -> Nat
plus Zero a = a
plus (Succ a) b = Succ (plus a b)
eq :: Nat -> Nat -> Bool
eq Zero Zero = True
eq (Succ a) (Succ b) = eq a b
eq x y = False
pred :: Nat -> Nat
pred (Succ n) = n
";

    #[test]
    fn plus_tree_paths_match_equations() {
        let (ps, t, partial) = compile(SRC, "plus");
        assert!(!partial);
        let paths = t.paths(&ps);
        let shown: Vec<String> = paths
            .iter()
            .map(|(a, r)| format!("{} -> {r}", a.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")))
            .collect();
        assert_eq!(shown, vec!["Zero, a -> a", "Succ a1, a -> Succ (plus a1 a)"]);
    }

    #[test]
    fn fallthrough_rows_fill_remaining_cases() {
        let (ps, t, partial) = compile(SRC, "eq");
        assert!(!partial);
        let paths = t.paths(&ps);
        assert_eq!(paths.len(), 4);
        assert_eq!(paths[0].1.to_string(), "True");
        assert_eq!(paths[1].1.to_string(), "False");
        assert_eq!(paths[3].1.to_string(), "eq a b");
    }

    #[test]
    fn missing_case_is_unspecified() {
        let (ps, t, partial) = compile(SRC, "pred");
        assert!(partial);
        let paths = t.paths(&ps);
        assert_eq!(paths[0].1, Term::constant("undef"));
    }
}
