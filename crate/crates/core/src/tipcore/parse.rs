use std::collections::{BTreeSet, HashSet};

use super::sexpr::{parse_sexprs, SExpr};
use super::{undeclared_symbols, Case, MatchTree, TipDecl, TipError, TipFun, TipProblem};
use crate::instantiate::Equation;
use crate::syntax::{CtorDecl, DataDecl, Symbol, Term, Type};

fn malformed(e: &SExpr, message: impl Into<String>) -> TipError {
    let (line, col) = e.pos();
    TipError::Malformed { line, col, message: message.into() }
}

fn atom<'a>(e: &'a SExpr, what: &str) -> Result<&'a str, TipError> {
    e.atom().ok_or_else(|| malformed(e, format!("expected {what}")))
}

fn list<'a>(e: &'a SExpr, what: &str) -> Result<&'a [SExpr], TipError> {
    e.list().ok_or_else(|| malformed(e, format!("expected {what}")))
}

struct Reader {
    sorts: HashSet<Symbol>,
    problem: TipProblem,
    goal_seen: bool,
}

impl Reader {
    fn ty(&self, e: &SExpr, params: &[Symbol], current: Option<&Symbol>) -> Result<Type, TipError> {
        match e {
            SExpr::Atom { text, line, col } => {
                let s = Symbol::new(text);
                if params.contains(&s) {
                    return Ok(Type::Var(s));
                }
                self.known_sort(&s, current, *line, *col)?;
                Ok(Type::Con(s, vec![]))
            }
            SExpr::List { items, .. } => {
                let head = atom(items.first().ok_or_else(|| malformed(e, "empty type"))?, "type constructor")?;
                let args = items[1..].iter().map(|a| self.ty(a, params, current)).collect::<Result<Vec<_>, _>>()?;
                if head == "=>" {
                    if args.len() != 2 {
                        return Err(malformed(e, "`=>` takes two types"));
                    }
                    let mut it = args.into_iter();
                    return Ok(Type::arrow(it.next().unwrap(), it.next().unwrap()));
                }
                let (line, col) = items[0].pos();
                let s = Symbol::new(head);
                self.known_sort(&s, current, line, col)?;
                Ok(Type::Con(s, args))
            }
        }
    }

    fn known_sort(&self, s: &Symbol, current: Option<&Symbol>, line: usize, col: usize) -> Result<(), TipError> {
        if self.sorts.contains(s) || current == Some(s) {
            Ok(())
        } else {
            Err(TipError::DeclarationOrder { line, col, name: s.to_string() })
        }
    }

    fn term(&self, e: &SExpr, bound: &BTreeSet<Symbol>) -> Result<Term, TipError> {
        match e {
            SExpr::Atom { text, .. } => {
                let s = Symbol::new(text);
                Ok(if bound.contains(&s) { Term::Var(s) } else { Term::App(s, vec![]) })
            }
            SExpr::List { items, .. } => {
                let head = atom(items.first().ok_or_else(|| malformed(e, "empty application"))?, "function symbol")?;
                let args = items[1..].iter().map(|a| self.term(a, bound)).collect::<Result<Vec<_>, _>>()?;
                Ok(Term::App(Symbol::new(head), args))
            }
        }
    }

    fn equation(&self, e: &SExpr, name: Symbol) -> Result<Equation, TipError> {
        let items = list(e, "an equation")?;
        match items.first().and_then(SExpr::atom) {
            Some("forall") if items.len() == 3 => {
                let mut universals = Vec::new();
                for b in list(&items[1], "binders")? {
                    let pair = list(b, "a binder")?;
                    if pair.len() != 2 {
                        return Err(malformed(b, "binder must be `(var Type)`"));
                    }
                    universals.push((Symbol::new(atom(&pair[0], "variable")?), self.ty(&pair[1], &[], None)?));
                }
                let mut eq = self.equation(&items[2], name)?;
                if !eq.universals.is_empty() {
                    return Err(malformed(&items[2], "nested quantifier"));
                }
                let bound: BTreeSet<Symbol> = universals.iter().map(|(v, _)| v.clone()).collect();
                eq.lhs = requalify(&eq.lhs, &bound);
                eq.rhs = requalify(&eq.rhs, &bound);
                eq.universals = universals;
                Ok(eq)
            }
            Some("=") if items.len() == 3 => {
                let none = BTreeSet::new();
                Ok(Equation { name, universals: vec![], lhs: self.term(&items[1], &none)?, rhs: self.term(&items[2], &none)? })
            }
            _ => Err(malformed(e, "expected `(forall (..) (= l r))` or `(= l r)`")),
        }
    }

    /// `sig` is `name (params) result`.
    fn function(&mut self, sig: &[SExpr], body: &SExpr) -> Result<(), TipError> {
        let mut params = Vec::new();
        for p in list(&sig[1], "parameters")? {
            let pair = list(p, "a parameter")?;
            if pair.len() != 2 {
                return Err(malformed(p, "parameter must be `(var Type)`"));
            }
            params.push((Symbol::new(atom(&pair[0], "parameter")?), self.ty(&pair[1], &[], None)?));
        }
        let ret = self.ty(&sig[2], &[], None)?;
        let bound = params.iter().map(|(p, _)| p.clone()).collect();
        let body = self.tree(body, &bound)?;
        self.problem.functions.push(TipFun { name: Symbol::new(atom(&sig[0], "function name")?), params, ret, body });
        Ok(())
    }

    fn tree(&self, e: &SExpr, bound: &BTreeSet<Symbol>) -> Result<MatchTree, TipError> {
        let Some(items) = e.list() else { return Ok(MatchTree::Leaf(self.term(e, bound)?)) };
        if items.first().and_then(SExpr::atom) != Some("match") {
            return Ok(MatchTree::Leaf(self.term(e, bound)?));
        }
        if items.len() < 3 {
            return Err(malformed(e, "match needs a scrutinee and cases"));
        }
        let scrutinee = Symbol::new(atom(&items[1], "scrutinee variable")?);
        let mut cases = Vec::new();
        for c in &items[2..] {
            let parts = list(c, "a case")?;
            if parts.len() != 3 || parts[0].atom() != Some("case") {
                return Err(malformed(c, "case must be `(case pattern body)`"));
            }
            let (ctor, vars) = match &parts[1] {
                SExpr::Atom { text, .. } => (Symbol::new(text), vec![]),
                SExpr::List { items, .. } => {
                    let ctor = Symbol::new(atom(items.first().ok_or_else(|| malformed(&parts[1], "empty pattern"))?, "constructor")?);
                    let vars = items[1..].iter().map(|v| atom(v, "pattern variable").map(Symbol::new)).collect::<Result<Vec<_>, _>>()?;
                    (ctor, vars)
                }
            };
            let mut inner = bound.clone();
            inner.extend(vars.iter().cloned());
            cases.push(Case { ctor, vars, body: self.tree(&parts[2], &inner)? });
        }
        Ok(MatchTree::Match { scrutinee, cases })
    }

    fn form(&mut self, e: &SExpr) -> Result<(), TipError> {
        let items = list(e, "a top-level form")?;
        let kw = atom(items.first().ok_or_else(|| malformed(e, "empty form"))?, "keyword")?;
        if self.goal_seen {
            return Err(malformed(e, "`assert-not` must be the last form"));
        }
        let (line, col) = items[0].pos();
        match kw {
            "set-info" => {
                match (items.get(1).and_then(SExpr::atom), items.get(2).and_then(SExpr::atom)) {
                    (Some(":lawkeeper-task"), Some(v)) => self.problem.name = v.to_string(),
                    (Some(":higher-order"), Some(v)) => self.problem.higher_order = v == "true",
                    _ => {}
                }
                Ok(())
            }
            "declare-sort" => {
                let name = Symbol::new(atom(items.get(1).ok_or_else(|| malformed(e, "missing sort name"))?, "sort name")?);
                self.sorts.insert(name.clone());
                self.problem.sorts.push(name);
                Ok(())
            }
            "declare-datatype" => {
                if items.len() != 3 {
                    return Err(malformed(e, "expected `(declare-datatype Name body)`"));
                }
                let name = Symbol::new(atom(&items[1], "datatype name")?);
                let (params, body) = match items[2].list() {
                    Some([SExpr::Atom { text, .. }, ps, body]) if text == "par" => {
                        let ps = list(ps, "type parameters")?
                            .iter()
                            .map(|p| atom(p, "type parameter").map(Symbol::new))
                            .collect::<Result<Vec<_>, _>>()?;
                        (ps, body)
                    }
                    _ => (vec![], &items[2]),
                };
                let mut ctors = Vec::new();
                for c in list(body, "constructor list")? {
                    let parts = list(c, "a constructor")?;
                    let cname = Symbol::new(atom(parts.first().ok_or_else(|| malformed(c, "empty constructor"))?, "constructor name")?);
                    let mut args = Vec::new();
                    for sel in &parts[1..] {
                        let sp = list(sel, "a selector")?;
                        if sp.len() != 2 {
                            return Err(malformed(sel, "selector must be `(name Type)`"));
                        }
                        args.push(self.ty(&sp[1], &params, Some(&name))?);
                    }
                    ctors.push(CtorDecl { name: cname, args });
                }
                self.sorts.insert(name.clone());
                self.problem.datatypes.push(DataDecl { name, params, ctors });
                Ok(())
            }
            "declare-fun" => {
                if items.len() != 4 {
                    return Err(malformed(e, "expected `(declare-fun name (args) result)`"));
                }
                let args = list(&items[2], "argument sorts")?.iter().map(|a| self.ty(a, &[], None)).collect::<Result<Vec<_>, _>>()?;
                self.problem.declared.push(TipDecl { name: Symbol::new(atom(&items[1], "name")?), args, ret: self.ty(&items[3], &[], None)? });
                Ok(())
            }
            "declare-const" => {
                if items.len() != 3 {
                    return Err(malformed(e, "expected `(declare-const name Sort)`"));
                }
                self.problem.unspecified.push(TipDecl { name: Symbol::new(atom(&items[1], "name")?), args: vec![], ret: self.ty(&items[2], &[], None)? });
                Ok(())
            }
            "define-fun-rec" => {
                if items.len() != 5 {
                    return Err(malformed(e, "expected `(define-fun-rec name (params) result body)`"));
                }
                self.function(&items[1..4], &items[4])
            }
            "define-funs-rec" => {
                let (sigs, bodies) = match &items[1..] {
                    [sigs, bodies] => (list(sigs, "signatures")?, list(bodies, "bodies")?),
                    _ => return Err(malformed(e, "expected `(define-funs-rec (signatures) (bodies))`")),
                };
                if sigs.len() != bodies.len() || sigs.is_empty() {
                    return Err(malformed(e, "signature and body counts differ"));
                }
                for (sig, body) in sigs.iter().zip(bodies) {
                    let sig = list(sig, "a signature")?;
                    if sig.len() != 3 {
                        return Err(malformed(e, "signature must be `(name (params) result)`"));
                    }
                    self.function(sig, body)?;
                }
                Ok(())
            }
            "assert" => {
                let body = items.get(1).ok_or_else(|| malformed(e, "empty assert"))?;
                let eq = match body.list() {
                    Some([SExpr::Atom { text, .. }, eq, SExpr::Atom { text: key, .. }, SExpr::Atom { text: name, .. }])
                        if text == "!" && key == ":named" =>
                    {
                        self.equation(eq, Symbol::new(name))?
                    }
                    _ => {
                        let name = Symbol::from(format!("axiom{}", self.problem.axioms.len() + 1));
                        self.equation(body, name)?
                    }
                };
                self.problem.axioms.push(eq);
                Ok(())
            }
            "assert-not" => {
                let body = items.get(1).ok_or_else(|| malformed(e, "empty assert-not"))?;
                self.problem.goal = self.equation(body, Symbol::new(""))?;
                self.goal_seen = true;
                Ok(())
            }
            other => Err(TipError::UnknownKeyword { line, col, keyword: other.to_string() }),
        }
    }
}

/// Re-binds atoms that name quantified variables.
fn requalify(t: &Term, bound: &BTreeSet<Symbol>) -> Term {
    match t {
        Term::App(h, args) if args.is_empty() && bound.contains(h) => Term::Var(h.clone()),
        Term::App(h, args) => Term::App(h.clone(), args.iter().map(|a| requalify(a, bound)).collect()),
        Term::Var(v) => Term::Var(v.clone()),
    }
}

/// Reads a problem in the emitted dialect.
pub fn parse_tip(src: &str) -> Result<TipProblem, TipError> {
    let forms = parse_sexprs(src)?;
    let mut r = Reader { sorts: HashSet::new(), problem: TipProblem::default(), goal_seen: false };
    for f in &forms {
        r.form(f)?;
    }
    if !r.goal_seen {
        return Err(TipError::Malformed { line: 1, col: 1, message: "missing `assert-not` goal".into() });
    }
    r.problem.goal.name = Symbol::from(r.problem.name.clone());
    let missing = undeclared_symbols(&r.problem);
    if let Some(m) = missing.first() {
        return Err(TipError::Malformed { line: 1, col: 1, message: format!("undeclared symbol `{m}`") });
    }
    Ok(r.problem)
}
