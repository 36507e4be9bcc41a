//! Automated proof of instantiated laws: counterexample search, rewriting
//! with definitions, structural induction and lemmas discovered by testing.

mod check;
mod explore;
mod order;
mod refute;
mod rewrite;
mod trace;

use std::collections::{BTreeSet, HashSet};
use std::time::{Duration, Instant};

use crate::instantiate::{Equation, ProofTask};
use crate::syntax::{Symbol, Term, Type};
use crate::tipcore::lower_task;

pub use check::{check_proof, CheckError};
pub use explore::{signature, stages, Explorer, SigSymbol, Signature};
pub use order::Precedence;
pub use refute::{refute, Counterexample, ATOMS_PER_SORT};
pub use rewrite::{Origin, RewriteRule, Rewriter, RuleSet};
pub use trace::{render_trace, InductionCase, Lemma, ProofTrace, RuleRef, Side, Step};

/// Evaluations spent looking for a counterexample before giving up.
pub const REFUTE_LIMIT: usize = 200_000;
/// Time one explored conjecture may take in the first round; doubles each
/// round up to `CONJECTURE_BUDGET`.
const FIRST_ROUND_BUDGET: Duration = Duration::from_millis(100);
const CONJECTURE_BUDGET: Duration = Duration::from_secs(2);
/// The goal is retried after this many new lemmas, with this budget.
const GOAL_RETRY_EVERY: usize = 8;
const GOAL_RETRY_BUDGET: Duration = Duration::from_millis(500);
/// Refutation gets this fraction of the timeout.
const REFUTE_SHARE: u32 = 4;
const EXPLORE_ROUNDS: usize = 12;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProverConfig {
    pub timeout: Duration,
    /// Nesting limit for splits on recursive datatypes.
    pub induction_depth: usize,
    pub explore_max_term_size: usize,
    pub explore_test_depth: usize,
    pub refute_depth: usize,
    /// Rewrite steps allowed per normalisation.
    pub rewrite_fuel: usize,
    pub explore_enabled: bool,
}

impl Default for ProverConfig {
    fn default() -> Self {
        ProverConfig {
            timeout: Duration::from_secs(60),
            induction_depth: 2,
            explore_max_term_size: 7,
            explore_test_depth: 3,
            refute_depth: 3,
            rewrite_fuel: 10_000,
            explore_enabled: true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum UnknownReason {
    Timeout,
    Fuel,
    HigherOrder,
    Stuck,
}

impl std::fmt::Display for UnknownReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            UnknownReason::Timeout => "timeout",
            UnknownReason::Fuel => "fuel",
            UnknownReason::HigherOrder => "higher-order",
            UnknownReason::Stuck => "stuck",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ProofOutcome {
    /// `lemmas` are the explored lemmas the trace depends on, in proof order.
    Proved { trace: ProofTrace, lemmas: Vec<Lemma> },
    Refuted(Counterexample),
    Unknown(UnknownReason),
}

impl ProofOutcome {
    pub fn label(&self) -> &'static str {
        match self {
            ProofOutcome::Proved { .. } => "proved",
            ProofOutcome::Refuted(_) => "refuted",
            ProofOutcome::Unknown(_) => "unknown",
        }
    }
}

struct Blocked {
    equation: Equation,
    deps: BTreeSet<usize>,
}

/// Proof search state for one task.
pub struct Prover<'t> {
    task: &'t ProofTask,
    config: ProverConfig,
    prec: Precedence,
    rules: RuleSet,
    lemmas: Vec<Lemma>,
    /// Induction hypotheses in scope, outermost first.
    hyps: Vec<(Term, Term)>,
    ctors: HashSet<Symbol>,
    used_names: HashSet<Symbol>,
    deadline: Instant,
    pub timed_out: bool,
    pub out_of_fuel: bool,
}

impl<'t> Prover<'t> {
    pub fn new(task: &'t ProofTask, config: ProverConfig) -> Self {
        let problem = lower_task(task);
        let opaque: Vec<Symbol> = task.dummy_sorts.iter().flat_map(|d| d.assumed_ops.iter().map(|(n, _)| n.clone())).collect();
        let prec = Precedence::new(&task.datatypes, &task.definitions, &opaque);
        let mut rules = RuleSet::definitions(&problem);
        for a in &task.axioms {
            if a.universals.iter().any(|(_, t)| t.contains_arrow()) {
                continue;
            }
            let vars = a.universals.iter().map(|(v, _)| v.clone()).collect();
            let name = a.name.clone();
            rules.add_equation(&prec, &a.lhs, &a.rhs, &vars, |b| Origin::Rule(RuleRef::Axiom(name.clone()), b));
        }
        let mut used_names: HashSet<Symbol> = task.goal.universals.iter().map(|(v, _)| v.clone()).collect();
        used_names.extend(task.goal.lhs.var_list());
        used_names.extend(task.goal.rhs.var_list());
        let ctors = task.datatypes.iter().flat_map(|d| d.ctors.iter().map(|c| c.name.clone())).collect();
        let deadline = Instant::now() + config.timeout;
        Prover { task, config, prec, rules, lemmas: Vec::new(), hyps: Vec::new(), ctors, used_names, deadline, timed_out: false, out_of_fuel: false }
    }

    pub fn lemmas(&self) -> &[Lemma] {
        &self.lemmas
    }

    fn expired(&mut self) -> bool {
        if Instant::now() >= self.deadline {
            self.timed_out = true;
        }
        self.timed_out
    }

    /// Normal form of `t` under definitions, axioms, lemmas and hypotheses in scope.
    pub fn simplify(&mut self, t: &Term, side: Side, steps: &mut Vec<Step>) -> Term {
        let mut rw = Rewriter::new(&self.prec, &self.rules, self.config.rewrite_fuel).with_deadline(self.deadline);
        let out = rw.normalize(t, side, steps);
        if rw.exhausted {
            self.out_of_fuel = true;
        }
        if rw.late {
            self.timed_out = true;
        }
        out
    }

    /// Adds a proved equation as a lemma usable by later proofs.
    pub fn add_lemma(&mut self, mut equation: Equation, trace: ProofTrace) -> Symbol {
        let name = Symbol::from(format!("lemma{}", self.lemmas.len() + 1));
        equation.name = name.clone();
        let vars = equation.universals.iter().map(|(v, _)| v.clone()).collect();
        let n = name.clone();
        self.rules.add_equation(&self.prec, &equation.lhs, &equation.rhs, &vars, |b| Origin::Rule(RuleRef::Lemma(n.clone()), b));
        self.lemmas.push(Lemma { equation, trace });
        name
    }

    fn fresh(&mut self, base: &Symbol) -> Symbol {
        let stem = base.trim_end_matches(|c: char| c.is_ascii_digit());
        let stem = if stem.is_empty() { "v" } else { stem };
        let mut k = 1;
        loop {
            let cand = Symbol::from(format!("{stem}{k}"));
            if self.used_names.insert(cand.clone()) {
                return cand;
            }
            k += 1;
        }
    }

    fn split_cost(&self, ty: &Type) -> Option<usize> {
        let Type::Con(n, _) = ty else { return None };
        let d = self.task.datatypes.iter().find(|d| &d.name == n)?;
        Some(usize::from(d.is_recursive()))
    }

    /// Proves `lhs = rhs` for all values of `universals`, splitting at most
    /// `depth` times on recursive types along any branch.
    pub fn prove_equation(&mut self, lhs: &Term, rhs: &Term, universals: &[(Symbol, Type)], depth: usize) -> Option<ProofTrace> {
        if self.expired() {
            return None;
        }
        let mut steps = Vec::new();
        let l = self.simplify(lhs, Side::Lhs, &mut steps);
        let r = self.simplify(rhs, Side::Rhs, &mut steps);
        if l == r {
            return Some(ProofTrace::Refl { steps });
        }
        if let (Term::App(f, ls), Term::App(g, rs)) = (&l, &r) {
            if self.ctors.contains(f) && self.ctors.contains(g) {
                if f != g {
                    return None;
                }
                let mut args = Vec::new();
                for (a, b) in ls.iter().zip(rs) {
                    match self.prove_equation(a, b, universals, depth) {
                        Some(t) => args.push(t),
                        None => break,
                    }
                }
                if args.len() == ls.len() {
                    return Some(ProofTrace::Congruence { steps, ctor: f.clone(), args });
                }
            }
        }
        let mut candidates: Vec<Symbol> = l.var_list();
        for v in r.var_list() {
            if !candidates.contains(&v) {
                candidates.push(v);
            }
        }
        // Case splits on non-recursive types come before induction.
        let mut splits: Vec<(usize, Symbol)> = candidates
            .into_iter()
            .filter_map(|v| {
                let ty = universals.iter().find(|(x, _)| x == &v).map(|(_, t)| t)?;
                Some((self.split_cost(ty)?, v))
            })
            .filter(|(cost, _)| *cost <= depth)
            .collect();
        splits.sort_by_key(|(cost, _)| *cost);
        for (cost, v) in splits {
            if let Some(cases) = self.induct_on(&l, &r, universals, &v, depth - cost) {
                return Some(ProofTrace::Induction { steps, variable: v, cases });
            }
            if self.expired() {
                return None;
            }
        }
        None
    }

    /// Splits on `var`, proving each constructor case with hypotheses for
    /// fields of the same type, quantified over the other universals.
    pub fn induct_on(&mut self, lhs: &Term, rhs: &Term, universals: &[(Symbol, Type)], var: &Symbol, depth: usize) -> Option<Vec<InductionCase>> {
        let ty = universals.iter().find(|(x, _)| x == var).map(|(_, t)| t.clone())?;
        let Type::Con(name, targs) = &ty else { return None };
        let data = self.task.datatypes.iter().find(|d| &d.name == name)?.clone();
        let others: Vec<(Symbol, Type)> = universals.iter().filter(|(x, _)| x != var).cloned().collect();
        let other_vars: HashSet<Symbol> = others.iter().map(|(v, _)| v.clone()).collect();
        let mut cases = Vec::new();
        for ctor in &data.ctors {
            let fields = data.ctor_arg_types(ctor, targs);
            let vars: Vec<Symbol> = fields.iter().map(|_| self.fresh(var)).collect();
            let pat = Term::App(ctor.name.clone(), vars.iter().cloned().map(Term::Var).collect());
            let at = |t: &Term, with: &Term| t.subst(&|v| (v == var).then(|| with.clone()));
            let (rule_mark, hyp_mark) = (self.rules.len(), self.hyps.len());
            for (v, fty) in vars.iter().zip(&fields) {
                if fty == &ty {
                    let x = Term::Var(v.clone());
                    let (hl, hr) = (at(lhs, &x), at(rhs, &x));
                    let idx = self.hyps.len();
                    self.rules.add_equation(&self.prec, &hl, &hr, &other_vars, |b| Origin::Hypothesis(idx, b));
                    self.hyps.push((hl, hr));
                }
            }
            let mut sub_universals = others.clone();
            sub_universals.extend(vars.iter().cloned().zip(fields.iter().cloned()));
            let proof = self.prove_equation(&at(lhs, &pat), &at(rhs, &pat), &sub_universals, depth);
            self.rules.truncate(rule_mark);
            self.hyps.truncate(hyp_mark);
            cases.push(InductionCase { ctor: ctor.name.clone(), vars, proof: proof? });
        }
        Some(cases)
    }

    /// Rewrites both sides with the proved rules, keeping the universals
    /// that still occur. Lemma rules only fire on normal forms, so they are
    /// stored normalised.
    fn normalize_equation(&mut self, eq: &Equation) -> Equation {
        let mut steps = Vec::new();
        let lhs = self.simplify(&eq.lhs, Side::Lhs, &mut steps);
        let rhs = self.simplify(&eq.rhs, Side::Rhs, &mut steps);
        let mut vars = lhs.var_list();
        vars.extend(rhs.var_list());
        let universals = eq.universals.iter().filter(|(v, _)| vars.contains(v)).cloned().collect();
        Equation { name: eq.name.clone(), universals, lhs, rhs }
    }

    /// Splits conjectures into those worth proving and those that follow by
    /// rewriting from known rules and the conjectures kept before them.
    /// Conjectures that need a kept one are returned with the ids it depends
    /// on, so they can be retried if it fails. Ids start at `first_id`.
    fn prune(&mut self, conjectures: Vec<Equation>, first_id: usize, seen: &mut HashSet<String>) -> (Vec<Equation>, Vec<Blocked>) {
        let mut pruner = self.rules.clone();
        let mut kept = Vec::new();
        let mut blocked = Vec::new();
        for c in conjectures {
            if self.expired() {
                break;
            }
            let c = self.normalize_equation(&c);
            if c.lhs == c.rhs || seen.contains(&canonical(&c)) {
                continue;
            }
            let mut rw = Rewriter::new(&self.prec, &pruner, self.config.rewrite_fuel).with_deadline(self.deadline);
            let mut steps = Vec::new();
            if rw.normalize(&c.lhs, Side::Lhs, &mut steps) == rw.normalize(&c.rhs, Side::Rhs, &mut steps) {
                let deps: BTreeSet<usize> = steps
                    .iter()
                    .filter_map(|s| match s {
                        Step::Rewrite { rule: RuleRef::Lemma(n), .. } => n.strip_prefix('#').and_then(|k| k.parse().ok()),
                        _ => None,
                    })
                    .collect();
                if !deps.is_empty() {
                    blocked.push(Blocked { equation: c, deps });
                }
                continue;
            }
            seen.insert(canonical(&c));
            let vars = c.universals.iter().map(|(v, _)| v.clone()).collect();
            let tag = Symbol::from(format!("#{}", first_id + kept.len()));
            pruner.add_equation(&self.prec, &c.lhs, &c.rhs, &vars, |b| Origin::Rule(RuleRef::Lemma(tag.clone()), b));
            kept.push(c);
        }
        (kept, blocked)
    }

    /// Attempts `goal` within `budget`, leaving the overall deadline in place.
    fn attempt(&mut self, goal: &Equation, budget: Duration) -> Option<ProofTrace> {
        let deadline = self.deadline;
        self.used_names.extend(goal.universals.iter().map(|(v, _)| v.clone()));
        self.deadline = deadline.min(Instant::now() + budget);
        let proof = self.prove_equation(&goal.lhs, &goal.rhs, &goal.universals, self.config.induction_depth);
        self.deadline = deadline;
        self.timed_out = Instant::now() >= deadline;
        proof
    }

    /// Generates conjectures by testing and proves as many as possible,
    /// retrying failed ones while new lemmas keep appearing. When a
    /// conjecture fails, the ones pruned because of it are reconsidered.
    /// With a `goal`, it is retried as lemmas accumulate and its proof is
    /// returned as soon as one is found.
    pub fn explore(&mut self, goal: Option<&Equation>) -> Option<ProofTrace> {
        let sig = signature(self.task);
        let mut seen = HashSet::new();
        let mut tried_at = self.lemmas.len();
        for stage in stages(&sig, self.task) {
            if self.expired() {
                break;
            }
            if let Some(t) = self.explore_stage(stage, goal, &mut seen, &mut tried_at) {
                return Some(t);
            }
        }
        None
    }

    fn explore_stage(&mut self, sig: Signature, goal: Option<&Equation>, seen: &mut HashSet<String>, tried_at: &mut usize) -> Option<ProofTrace> {
        let mut ex = Explorer::new(self.task, sig, self.config.explore_test_depth);
        let deadline = self.deadline;
        let found = ex.conjectures(self.config.explore_max_term_size, Some(deadline));
        let (kept, mut blocked) = self.prune(found, 0, seen);
        let mut next_id = kept.len();
        let mut pending: Vec<(usize, Equation)> = kept.into_iter().enumerate().collect();
        let mut failed_ids = HashSet::new();
        for round in 0..EXPLORE_ROUNDS {
            let budget = CONJECTURE_BUDGET.min(FIRST_ROUND_BUDGET * (1 << round.min(8)));
            let mut progress = false;
            let mut failed = Vec::new();
            for (id, c) in std::mem::take(&mut pending) {
                if self.expired() {
                    break;
                }
                let c = self.normalize_equation(&c);
                if c.lhs == c.rhs {
                    continue;
                }
                match self.attempt(&c, budget) {
                    Some(trace) => {
                        self.add_lemma(c, trace);
                        progress = true;
                    }
                    None => {
                        failed_ids.insert(id);
                        failed.push((id, c));
                    }
                }
                if let Some(g) = goal {
                    if self.lemmas.len() >= *tried_at + GOAL_RETRY_EVERY {
                        *tried_at = self.lemmas.len();
                        if let Some(t) = self.attempt(g, GOAL_RETRY_BUDGET) {
                            return Some(t);
                        }
                    }
                }
            }
            if let Some(g) = goal {
                if self.lemmas.len() > *tried_at && !self.expired() {
                    *tried_at = self.lemmas.len();
                    if let Some(t) = self.attempt(g, GOAL_RETRY_BUDGET) {
                        return Some(t);
                    }
                }
            }
            if self.expired() {
                break;
            }
            let (released, still): (Vec<Blocked>, Vec<Blocked>) = blocked.into_iter().partition(|b| b.deps.iter().any(|d| failed_ids.contains(d)));
            blocked = still;
            let (fresh, more) = self.prune(released.into_iter().map(|b| b.equation).collect(), next_id, seen);
            blocked.extend(more);
            let released_any = !fresh.is_empty();
            pending = fresh.into_iter().enumerate().map(|(i, c)| (next_id + i, c)).collect();
            next_id += pending.len();
            pending.extend(failed);
            if !(progress || released_any || budget < CONJECTURE_BUDGET) || pending.is_empty() {
                break;
            }
        }
        None
    }

    /// The lemmas `trace` depends on, directly or through other lemmas, in proof order.
    pub fn used_lemmas(&self, trace: &ProofTrace) -> Vec<Lemma> {
        let mut needed: BTreeSet<Symbol> = BTreeSet::new();
        let mut todo = Vec::new();
        trace.rules(&mut todo);
        while let Some(r) = todo.pop() {
            if let RuleRef::Lemma(n) = r {
                if needed.insert(n.clone()) {
                    if let Some(l) = self.lemmas.iter().find(|l| l.equation.name == n) {
                        l.trace.rules(&mut todo);
                    }
                }
            }
        }
        self.lemmas.iter().filter(|l| needed.contains(&l.equation.name)).cloned().collect()
    }
}

/// A key equal for equations that differ only in variable names or orientation.
fn canonical(eq: &Equation) -> String {
    let key = |l: &Term, r: &Term| {
        let mut order = l.var_list();
        for v in r.var_list() {
            if !order.contains(&v) {
                order.push(v);
            }
        }
        let map = |v: &Symbol| order.iter().position(|x| x == v).map(|i| Term::Var(Symbol::from(format!("_{i}"))));
        format!("{} = {}", l.subst(&map), r.subst(&map))
    };
    key(&eq.lhs, &eq.rhs).min(key(&eq.rhs, &eq.lhs))
}

/// Runs explored lemma discovery on its own and returns every proved lemma.
pub fn explore_lemmas(task: &ProofTask, config: &ProverConfig) -> Vec<Lemma> {
    let mut p = Prover::new(task, config.clone());
    p.explore(None);
    p.lemmas
}

/// Refutation first, then rewriting and induction, then exploration and a
/// second attempt. A proof is only reported once the trace checker accepts it.
pub fn prove(task: &ProofTask, config: &ProverConfig) -> ProofOutcome {
    if task.higher_order {
        return ProofOutcome::Unknown(UnknownReason::HigherOrder);
    }
    let start = Instant::now();
    if let Some(cex) = refute(task, config.refute_depth, REFUTE_LIMIT, Some(start + config.timeout / REFUTE_SHARE)) {
        return ProofOutcome::Refuted(cex);
    }
    let remaining = ProverConfig { timeout: config.timeout.saturating_sub(start.elapsed()), ..config.clone() };
    let mut p = Prover::new(task, remaining);
    let goal = &task.goal;
    let mut trace = p.prove_equation(&goal.lhs, &goal.rhs, &goal.universals, config.induction_depth);
    if trace.is_none() && config.explore_enabled && !p.expired() {
        p.timed_out = false;
        trace = p.explore(Some(goal));
        if trace.is_none() && !p.expired() {
            trace = p.prove_equation(&goal.lhs, &goal.rhs, &goal.universals, config.induction_depth);
        }
    }
    match trace {
        Some(trace) => {
            let lemmas = p.used_lemmas(&trace);
            match check_proof(task, goal, &trace, &lemmas) {
                Ok(()) => ProofOutcome::Proved { trace, lemmas },
                Err(_) => ProofOutcome::Unknown(UnknownReason::Stuck),
            }
        }
        None if p.timed_out => ProofOutcome::Unknown(UnknownReason::Timeout),
        None if p.out_of_fuel => ProofOutcome::Unknown(UnknownReason::Fuel),
        None => ProofOutcome::Unknown(UnknownReason::Stuck),
    }
}

#[cfg(test)]
mod tests;
