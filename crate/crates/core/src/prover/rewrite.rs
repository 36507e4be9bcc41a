//! Rewrite rules and innermost normalisation with ordered rewriting.

use std::collections::{HashMap, HashSet};
use std::time::Instant;

use super::order::Precedence;
use super::trace::{RuleRef, Side, Step};
use crate::syntax::{Symbol, Term};
use crate::tipcore::TipProblem;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Origin {
    Rule(RuleRef, bool),
    Hypothesis(usize, bool),
}

impl Origin {
    fn step(&self, side: Side, path: Vec<usize>) -> Step {
        match self {
            Origin::Rule(rule, backwards) => Step::Rewrite { side, path, rule: rule.clone(), backwards: *backwards },
            Origin::Hypothesis(h, backwards) => Step::HypothesisUse { side, path, hypothesis: *h, backwards: *backwards },
        }
    }
}

/// `lhs -> rhs`; variables outside `vars` only match themselves. An ordered
/// rule fires only when the instance decreases in the term order.
#[derive(Clone, Debug)]
pub struct RewriteRule {
    pub lhs: Term,
    pub rhs: Term,
    pub vars: HashSet<Symbol>,
    pub ordered: bool,
    pub origin: Origin,
}

#[derive(Clone, Debug, Default)]
pub struct RuleSet {
    rules: Vec<RewriteRule>,
    by_head: HashMap<Symbol, Vec<usize>>,
}

fn free_in(t: &Term, vars: &HashSet<Symbol>) -> HashSet<Symbol> {
    t.var_list().into_iter().filter(|v| vars.contains(v)).collect()
}

impl RuleSet {
    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn rules(&self) -> &[RewriteRule] {
        &self.rules
    }

    pub fn push(&mut self, rule: RewriteRule) {
        let Term::App(h, _) = &rule.lhs else { return };
        self.by_head.entry(h.clone()).or_default().push(self.rules.len());
        self.rules.push(rule);
    }

    /// Drops every rule added after the set had `n` rules.
    pub fn truncate(&mut self, n: usize) {
        for r in &self.rules[n.min(self.rules.len())..] {
            if let Term::App(h, _) = &r.lhs {
                if let Some(v) = self.by_head.get_mut(h) {
                    v.retain(|&i| i < n);
                }
            }
        }
        self.rules.truncate(n);
    }

    /// Adds an equation, oriented when the order allows and as a pair of
    /// ordered rules otherwise. Returns how many rules were added.
    pub fn add_equation(&mut self, prec: &Precedence, lhs: &Term, rhs: &Term, vars: &HashSet<Symbol>, origin: impl Fn(bool) -> Origin) -> usize {
        let is_var = |s: &Symbol| vars.contains(s);
        let usable = |l: &Term, r: &Term| matches!(l, Term::App(..)) && free_in(r, vars).is_subset(&free_in(l, vars));
        let before = self.len();
        if lhs == rhs {
            return 0;
        }
        if usable(lhs, rhs) && prec.gt(lhs, rhs, &is_var) {
            self.push(RewriteRule { lhs: lhs.clone(), rhs: rhs.clone(), vars: vars.clone(), ordered: false, origin: origin(false) });
        } else if usable(rhs, lhs) && prec.gt(rhs, lhs, &is_var) {
            self.push(RewriteRule { lhs: rhs.clone(), rhs: lhs.clone(), vars: vars.clone(), ordered: false, origin: origin(true) });
        } else {
            if usable(lhs, rhs) {
                self.push(RewriteRule { lhs: lhs.clone(), rhs: rhs.clone(), vars: vars.clone(), ordered: true, origin: origin(false) });
            }
            if usable(rhs, lhs) {
                self.push(RewriteRule { lhs: rhs.clone(), rhs: lhs.clone(), vars: vars.clone(), ordered: true, origin: origin(true) });
            }
        }
        self.len() - before
    }

    /// One rule per path through each function's match tree, skipping
    /// branches that end in an unspecified constant.
    pub fn definitions(problem: &TipProblem) -> RuleSet {
        let mut set = RuleSet::default();
        for f in &problem.functions {
            let params: Vec<Symbol> = f.params.iter().map(|(p, _)| p.clone()).collect();
            for (args, rhs) in f.body.paths(&params) {
                if matches!(&rhs, Term::App(h, a) if a.is_empty() && problem.is_unspecified(h)) {
                    continue;
                }
                let lhs = Term::App(f.name.clone(), args);
                let vars = lhs.var_list().into_iter().collect();
                set.push(RewriteRule { lhs, rhs, vars, ordered: false, origin: Origin::Rule(RuleRef::Definition(f.name.clone()), false) });
            }
        }
        set
    }
}

pub(crate) fn match_term(p: &Term, t: &Term, vars: &HashSet<Symbol>, s: &mut HashMap<Symbol, Term>) -> bool {
    match p {
        Term::Var(x) if vars.contains(x) => match s.get(x) {
            Some(b) => b == t,
            None => {
                s.insert(x.clone(), t.clone());
                true
            }
        },
        Term::Var(_) => p == t,
        Term::App(f, ps) => match t {
            Term::App(g, ts) => f == g && ps.len() == ts.len() && ps.iter().zip(ts).all(|(p, t)| match_term(p, t, vars, s)),
            Term::Var(_) => false,
        },
    }
}

pub(crate) fn instantiate(t: &Term, s: &HashMap<Symbol, Term>) -> Term {
    t.subst(&|v| s.get(v).cloned())
}

/// Normalises terms with a rule set, recording every step.
pub struct Rewriter<'a> {
    pub prec: &'a Precedence,
    pub rules: &'a RuleSet,
    pub fuel: usize,
    pub exhausted: bool,
    pub deadline: Option<Instant>,
    pub late: bool,
}

impl<'a> Rewriter<'a> {
    pub fn new(prec: &'a Precedence, rules: &'a RuleSet, fuel: usize) -> Self {
        Rewriter { prec, rules, fuel, exhausted: false, deadline: None, late: false }
    }

    pub fn with_deadline(mut self, deadline: Instant) -> Self {
        self.deadline = Some(deadline);
        self
    }

    /// Rewrites `t` at its root with the first applicable rule.
    pub fn rewrite_root(&self, t: &Term) -> Option<(&'a RewriteRule, Term)> {
        let Term::App(h, _) = t else { return None };
        let rules = self.rules;
        for &i in rules.by_head.get(h)? {
            let r = &rules.rules[i];
            let mut s = HashMap::new();
            if !match_term(&r.lhs, t, &r.vars, &mut s) {
                continue;
            }
            let out = instantiate(&r.rhs, &s);
            if r.ordered && !self.prec.gt_ground(t, &out) {
                continue;
            }
            return Some((r, out));
        }
        None
    }

    pub fn normalize(&mut self, t: &Term, side: Side, steps: &mut Vec<Step>) -> Term {
        let mut path = Vec::new();
        self.norm(t, side, &mut path, steps)
    }

    fn norm(&mut self, t: &Term, side: Side, path: &mut Vec<usize>, steps: &mut Vec<Step>) -> Term {
        let Term::App(h, args) = t else { return t.clone() };
        let mut new_args = Vec::with_capacity(args.len());
        for (i, a) in args.iter().enumerate() {
            path.push(i);
            new_args.push(self.norm(a, side, path, steps));
            path.pop();
        }
        let cur = Term::App(h.clone(), new_args);
        if self.fuel == 0 {
            self.exhausted = true;
            return cur;
        }
        if self.late || (self.fuel.is_multiple_of(64) && self.deadline.is_some_and(|d| Instant::now() >= d)) {
            self.late = true;
            return cur;
        }
        match self.rewrite_root(&cur) {
            Some((rule, next)) => {
                self.fuel -= 1;
                steps.push(rule.origin.step(side, path.clone()));
                self.norm(&next, side, path, steps)
            }
            None => cur,
        }
    }
}
