//! Proof traces: the certificate the prover emits and the checker replays.

use std::fmt::{self, Write};

use crate::instantiate::Equation;
use crate::syntax::Symbol;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Side {
    Lhs,
    Rhs,
}

/// The equation a rewrite step instantiates.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum RuleRef {
    /// First-match use of a function's defining equations.
    Definition(Symbol),
    Axiom(Symbol),
    Lemma(Symbol),
}

impl fmt::Display for RuleRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RuleRef::Definition(s) => write!(f, "def {s}"),
            RuleRef::Axiom(s) => write!(f, "axiom {s}"),
            RuleRef::Lemma(s) => write!(f, "lemma {s}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Step {
    Rewrite { side: Side, path: Vec<usize>, rule: RuleRef, backwards: bool },
    /// Rewrite with an induction hypothesis, numbered outermost first.
    HypothesisUse { side: Side, path: Vec<usize>, hypothesis: usize, backwards: bool },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InductionCase {
    pub ctor: Symbol,
    pub vars: Vec<Symbol>,
    pub proof: ProofTrace,
}

/// Each node first rewrites the current equation with `steps`, then closes it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ProofTrace {
    /// Both sides are now identical.
    Refl { steps: Vec<Step> },
    /// Both sides apply the same constructor; each argument pair is proved separately.
    Congruence { steps: Vec<Step>, ctor: Symbol, args: Vec<ProofTrace> },
    /// Case split on a universal, with hypotheses for recursive fields.
    Induction { steps: Vec<Step>, variable: Symbol, cases: Vec<InductionCase> },
}

impl ProofTrace {
    pub fn steps(&self) -> &[Step] {
        match self {
            ProofTrace::Refl { steps } | ProofTrace::Congruence { steps, .. } | ProofTrace::Induction { steps, .. } => steps,
        }
    }

    /// Rules referenced anywhere in the trace.
    pub fn rules(&self, out: &mut Vec<RuleRef>) {
        for s in self.steps() {
            if let Step::Rewrite { rule, .. } = s {
                if !out.contains(rule) {
                    out.push(rule.clone());
                }
            }
        }
        match self {
            ProofTrace::Refl { .. } => {}
            ProofTrace::Congruence { args, .. } => args.iter().for_each(|a| a.rules(out)),
            ProofTrace::Induction { cases, .. } => cases.iter().for_each(|c| c.proof.rules(out)),
        }
    }

    /// Number of rewrite and hypothesis steps.
    pub fn size(&self) -> usize {
        self.steps().len()
            + match self {
                ProofTrace::Refl { .. } => 0,
                ProofTrace::Congruence { args, .. } => args.iter().map(ProofTrace::size).sum(),
                ProofTrace::Induction { cases, .. } => cases.iter().map(|c| c.proof.size()).sum(),
            }
    }

    pub fn induction_depth(&self) -> usize {
        match self {
            ProofTrace::Refl { .. } => 0,
            ProofTrace::Congruence { args, .. } => args.iter().map(ProofTrace::induction_depth).max().unwrap_or(0),
            ProofTrace::Induction { cases, .. } => 1 + cases.iter().map(|c| c.proof.induction_depth()).max().unwrap_or(0),
        }
    }
}

/// An auxiliary equation proved on the way, with its own trace.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Lemma {
    pub equation: Equation,
    pub trace: ProofTrace,
}

fn path(p: &[usize]) -> String {
    if p.is_empty() {
        "root".into()
    } else {
        p.iter().map(|i| i.to_string()).collect::<Vec<_>>().join(".")
    }
}

fn render_steps(steps: &[Step], indent: usize, out: &mut String) {
    let pad = " ".repeat(indent);
    for s in steps {
        match s {
            Step::Rewrite { side, path: p, rule, backwards } => {
                let dir = if *backwards { " (right to left)" } else { "" };
                writeln!(out, "{pad}rewrite {side:?} at {} by {rule}{dir}", path(p)).unwrap();
            }
            Step::HypothesisUse { side, path: p, hypothesis, backwards } => {
                let dir = if *backwards { " (right to left)" } else { "" };
                writeln!(out, "{pad}rewrite {side:?} at {} by hypothesis {hypothesis}{dir}", path(p)).unwrap();
            }
        }
    }
}

fn render(t: &ProofTrace, indent: usize, out: &mut String) {
    render_steps(t.steps(), indent, out);
    let pad = " ".repeat(indent);
    match t {
        ProofTrace::Refl { .. } => writeln!(out, "{pad}reflexivity").unwrap(),
        ProofTrace::Congruence { ctor, args, .. } => {
            writeln!(out, "{pad}congruence on {ctor}").unwrap();
            for (i, a) in args.iter().enumerate() {
                writeln!(out, "{pad}  argument {i}:").unwrap();
                render(a, indent + 4, out);
            }
        }
        ProofTrace::Induction { variable, cases, .. } => {
            writeln!(out, "{pad}induction on {variable}").unwrap();
            for c in cases {
                let mut head = c.ctor.to_string();
                for v in &c.vars {
                    head.push(' ');
                    head.push_str(v.as_str());
                }
                writeln!(out, "{pad}  case {head}:").unwrap();
                render(&c.proof, indent + 4, out);
            }
        }
    }
}

/// Indented, line-per-step rendering of a proof and the lemmas it relies on.
pub fn render_trace(goal: &Equation, trace: &ProofTrace, lemmas: &[Lemma]) -> String {
    let mut out = String::new();
    for l in lemmas {
        writeln!(out, "lemma {}: {}", l.equation.name, l.equation).unwrap();
        render(&l.trace, 2, &mut out);
    }
    writeln!(out, "goal {}: {}", goal.name, goal).unwrap();
    render(trace, 2, &mut out);
    out
}
