//! Replays a proof trace against the task it claims to prove.
//!
//! Shares no code with the search: definitional steps are justified from the
//! source equations by symbolic first-match, hypotheses are recomputed from
//! the induction nodes, and every leaf must close by syntactic identity.

use std::collections::{HashMap, HashSet};

use thiserror::Error;

use super::rewrite::{instantiate, match_term};
use super::trace::{Lemma, ProofTrace, RuleRef, Side, Step};
use crate::instantiate::{Equation, ProofTask};
use crate::syntax::{Pattern, Symbol, Term, Type};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CheckError {
    #[error("step on {side:?} at {path:?} is invalid: {reason}")]
    BadStep { side: Side, path: Vec<usize>, reason: String },
    #[error("leaf does not close: `{lhs}` vs `{rhs}`")]
    NotClosed { lhs: Term, rhs: Term },
    #[error("congruence on `{0}` does not fit the goal")]
    BadCongruence(Symbol),
    #[error("induction on `{variable}` is invalid: {reason}")]
    BadInduction { variable: Symbol, reason: String },
    #[error("lemma `{0}` is used before it is proved")]
    LemmaOrder(Symbol),
}

struct Hyp {
    vars: HashSet<Symbol>,
    lhs: Term,
    rhs: Term,
}

enum Fit {
    Yes,
    No,
    Unknown,
}

struct Checker<'a> {
    task: &'a ProofTask,
    lemmas: &'a [Lemma],
}

fn pmatch(p: &Pattern, t: &Term, ctor: &dyn Fn(&str) -> bool, s: &mut HashMap<Symbol, Term>) -> Fit {
    match p {
        Pattern::Wildcard => Fit::Yes,
        Pattern::Var(x) => {
            s.insert(x.clone(), t.clone());
            Fit::Yes
        }
        Pattern::Ctor(c, ps) => match t {
            Term::App(g, ts) if ctor(g) => {
                if g != c || ps.len() != ts.len() {
                    return Fit::No;
                }
                pmatch_all(ps, ts, ctor, s)
            }
            _ => Fit::Unknown,
        },
    }
}

fn pmatch_all(ps: &[Pattern], ts: &[Term], ctor: &dyn Fn(&str) -> bool, s: &mut HashMap<Symbol, Term>) -> Fit {
    let mut unknown = false;
    for (p, t) in ps.iter().zip(ts) {
        match pmatch(p, t, ctor, s) {
            Fit::No => return Fit::No,
            Fit::Unknown => unknown = true,
            Fit::Yes => {}
        }
    }
    if unknown {
        Fit::Unknown
    } else {
        Fit::Yes
    }
}

impl Checker<'_> {
    fn is_ctor(&self, name: &str) -> bool {
        self.task.datatypes.iter().any(|d| d.ctor(name).is_some())
    }

    fn definition_step(&self, f: &Symbol, t: &Term) -> Result<Term, String> {
        let Term::App(g, args) = t else { return Err("not an application".into()) };
        if g != f {
            return Err(format!("expected a call of `{f}`, found `{g}`"));
        }
        let def = self.task.definition(f).ok_or_else(|| format!("`{f}` has no definition"))?;
        for eq in &def.equations {
            if eq.patterns.len() != args.len() {
                return Err("arity mismatch".into());
            }
            let mut s = HashMap::new();
            match pmatch_all(&eq.patterns, args, &|c| self.is_ctor(c), &mut s) {
                Fit::Yes => return Ok(instantiate(&eq.rhs, &s)),
                Fit::No => continue,
                Fit::Unknown => return Err("an earlier equation may match".into()),
            }
        }
        Err("no equation matches".into())
    }

    fn equation(&self, rule: &RuleRef) -> Result<&Equation, String> {
        match rule {
            RuleRef::Axiom(n) => self.task.axioms.iter().find(|a| &a.name == n).ok_or_else(|| format!("unknown axiom `{n}`")),
            RuleRef::Lemma(n) => self.lemmas.iter().map(|l| &l.equation).find(|e| &e.name == n).ok_or_else(|| format!("unknown lemma `{n}`")),
            RuleRef::Definition(_) => unreachable!("definitions are handled separately"),
        }
    }

    fn apply(&self, step: &Step, lhs: &mut Term, rhs: &mut Term, hyps: &[Hyp]) -> Result<(), CheckError> {
        let (side, path) = match step {
            Step::Rewrite { side, path, .. } | Step::HypothesisUse { side, path, .. } => (*side, path),
        };
        let bad = |reason: String| CheckError::BadStep { side, path: path.clone(), reason };
        let target = match side {
            Side::Lhs => lhs,
            Side::Rhs => rhs,
        };
        let sub = target.at(path).ok_or_else(|| bad("no subterm at path".into()))?;
        let new = match step {
            Step::Rewrite { rule: RuleRef::Definition(f), backwards: false, .. } => self.definition_step(f, sub).map_err(bad)?,
            Step::Rewrite { rule: RuleRef::Definition(_), backwards: true, .. } => return Err(bad("definitions are only used left to right".into())),
            Step::Rewrite { rule, backwards, .. } => {
                let eq = self.equation(rule).map_err(bad)?;
                let vars = eq.universals.iter().map(|(v, _)| v.clone()).collect();
                rewrite_with(&eq.lhs, &eq.rhs, &vars, *backwards, sub).map_err(bad)?
            }
            Step::HypothesisUse { hypothesis, backwards, .. } => {
                let h = hyps.get(*hypothesis).ok_or_else(|| bad(format!("no hypothesis {hypothesis} in scope")))?;
                rewrite_with(&h.lhs, &h.rhs, &h.vars, *backwards, sub).map_err(bad)?
            }
        };
        *target = target.replace_at(path, new).ok_or_else(|| bad("no subterm at path".into()))?;
        Ok(())
    }

    fn node(&self, mut lhs: Term, mut rhs: Term, universals: &[(Symbol, Type)], hyps: &mut Vec<Hyp>, trace: &ProofTrace) -> Result<(), CheckError> {
        for s in trace.steps() {
            self.apply(s, &mut lhs, &mut rhs, hyps)?;
        }
        match trace {
            ProofTrace::Refl { .. } => {
                if lhs == rhs {
                    Ok(())
                } else {
                    Err(CheckError::NotClosed { lhs, rhs })
                }
            }
            ProofTrace::Congruence { ctor, args, .. } => match (&lhs, &rhs) {
                (Term::App(f, ls), Term::App(g, rs)) if f == ctor && g == ctor && ls.len() == args.len() && rs.len() == args.len() => {
                    for ((l, r), t) in ls.iter().zip(rs).zip(args) {
                        self.node(l.clone(), r.clone(), universals, hyps, t)?;
                    }
                    Ok(())
                }
                _ => Err(CheckError::BadCongruence(ctor.clone())),
            },
            ProofTrace::Induction { variable, cases, .. } => self.induction(&lhs, &rhs, universals, hyps, variable, cases),
        }
    }

    fn induction(
        &self,
        lhs: &Term,
        rhs: &Term,
        universals: &[(Symbol, Type)],
        hyps: &mut Vec<Hyp>,
        variable: &Symbol,
        cases: &[super::trace::InductionCase],
    ) -> Result<(), CheckError> {
        let bad = |reason: &str| CheckError::BadInduction { variable: variable.clone(), reason: reason.into() };
        let ty = universals.iter().find(|(v, _)| v == variable).map(|(_, t)| t).ok_or_else(|| bad("not a universal"))?;
        let Type::Con(name, targs) = ty else { return Err(bad("not a datatype")) };
        let data = self.task.datatypes.iter().find(|d| &d.name == name).ok_or_else(|| bad("not a datatype"))?;
        if data.ctors.len() != cases.len() || data.ctors.iter().zip(cases).any(|(c, k)| c.name != k.ctor) {
            return Err(bad("cases do not list the constructors in order"));
        }
        let others: Vec<(Symbol, Type)> = universals.iter().filter(|(v, _)| v != variable).cloned().collect();
        let mut taken: HashSet<Symbol> = universals.iter().map(|(v, _)| v.clone()).collect();
        taken.extend(lhs.var_list());
        taken.extend(rhs.var_list());
        for h in hyps.iter() {
            taken.extend(h.lhs.var_list());
            taken.extend(h.rhs.var_list());
        }
        for (ctor, case) in data.ctors.iter().zip(cases) {
            let fields = data.ctor_arg_types(ctor, targs);
            if case.vars.len() != fields.len() {
                return Err(bad("wrong number of case variables"));
            }
            let fresh: HashSet<&Symbol> = case.vars.iter().collect();
            if fresh.len() != case.vars.len() || case.vars.iter().any(|v| taken.contains(v)) {
                return Err(bad("case variables are not fresh"));
            }
            let pat = Term::App(ctor.name.clone(), case.vars.iter().cloned().map(Term::Var).collect());
            let at = |t: &Term, with: &Term| t.subst(&|v| (v == variable).then(|| with.clone()));
            let mark = hyps.len();
            let other_vars: HashSet<Symbol> = others.iter().map(|(v, _)| v.clone()).collect();
            for (v, fty) in case.vars.iter().zip(&fields) {
                if fty == ty {
                    let x = Term::Var(v.clone());
                    hyps.push(Hyp { vars: other_vars.clone(), lhs: at(lhs, &x), rhs: at(rhs, &x) });
                }
            }
            let mut sub_universals = others.clone();
            sub_universals.extend(case.vars.iter().cloned().zip(fields.iter().cloned()));
            let r = self.node(at(lhs, &pat), at(rhs, &pat), &sub_universals, hyps, &case.proof);
            hyps.truncate(mark);
            r?;
        }
        Ok(())
    }
}

fn rewrite_with(l: &Term, r: &Term, vars: &HashSet<Symbol>, backwards: bool, sub: &Term) -> Result<Term, String> {
    let (from, to) = if backwards { (r, l) } else { (l, r) };
    let mut s = HashMap::new();
    if !match_term(from, sub, vars, &mut s) {
        return Err(format!("`{from}` does not match `{sub}`"));
    }
    if to.var_list().iter().any(|v| vars.contains(v) && !s.contains_key(v)) {
        return Err("result has unbound variables".into());
    }
    Ok(instantiate(to, &s))
}

/// Checks `lemmas` in order, each using only earlier ones, and then `trace`
/// as a proof of `goal`.
pub fn check_proof(task: &ProofTask, goal: &Equation, trace: &ProofTrace, lemmas: &[Lemma]) -> Result<(), CheckError> {
    for (i, l) in lemmas.iter().enumerate() {
        let mut used = Vec::new();
        l.trace.rules(&mut used);
        for r in &used {
            if let RuleRef::Lemma(n) = r {
                if !lemmas[..i].iter().any(|x| &x.equation.name == n) {
                    return Err(CheckError::LemmaOrder(n.clone()));
                }
            }
        }
        let c = Checker { task, lemmas: &lemmas[..i] };
        c.node(l.equation.lhs.clone(), l.equation.rhs.clone(), &l.equation.universals, &mut Vec::new(), &l.trace)?;
    }
    let c = Checker { task, lemmas };
    c.node(goal.lhs.clone(), goal.rhs.clone(), &goal.universals, &mut Vec::new(), trace)
}
