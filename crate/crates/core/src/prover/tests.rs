use super::*;
use crate::frontend::{parse_program, parse_term};
use crate::instantiate::build_tasks;
use crate::typecheck::check_program;

const NAT: &str = "data Nat = Zero | Succ Nat
plus :: Nat -> Nat -> Nat
plus Zero a = a
plus (Succ a) b = Succ (plus a b)
law plusComm :: Nat -> Nat -> Equality Nat
law plusComm x y = plus x y === plus y x
law plusZero :: Nat -> Equality Nat
law plusZero x = plus Zero x === x
law plusRightZero :: Nat -> Equality Nat
law plusRightZero x = plus x Zero === x
law bad :: Nat -> Nat -> Equality Nat
law bad x y = plus x y === x
";

const LIST: &str = "data List a = Nil | Cons a (List a)
append :: List a -> List a -> List a
append Nil ys = ys
append (Cons x xs) ys = Cons x (append xs ys)
rev :: List a -> List a
rev Nil = Nil
rev (Cons x xs) = append (rev xs) (Cons x Nil)
qrevAcc :: List a -> List a -> List a
qrevAcc Nil acc = acc
qrevAcc (Cons x xs) acc = qrevAcc xs (Cons x acc)
qrev :: List a -> List a
qrev xs = qrevAcc xs Nil
law revRev :: List a -> Equality (List a)
law revRev xs = rev (rev xs) === xs
law qrevQrev :: List a -> Equality (List a)
law qrevQrev xs = qrev (qrev xs) === xs
";

fn task(src: &str, law: &str) -> ProofTask {
    let (p, t) = check_program(&parse_program(src).unwrap()).unwrap();
    build_tasks(&p, &t).unwrap().into_iter().find(|k| k.law == law).unwrap()
}

fn quick() -> ProverConfig {
    ProverConfig { timeout: Duration::from_secs(20), ..ProverConfig::default() }
}

fn proved(src: &str, law: &str) -> (ProofTask, ProofTrace, Vec<Lemma>) {
    let t = task(src, law);
    match prove(&t, &quick()) {
        ProofOutcome::Proved { trace, lemmas } => (t, trace, lemmas),
        other => panic!("{law}: {other:?}"),
    }
}

#[test]
fn left_identity_by_rewriting_alone() {
    let (_, trace, lemmas) = proved(NAT, "plusZero");
    assert!(matches!(trace, ProofTrace::Refl { .. }));
    assert!(lemmas.is_empty());
}

#[test]
fn right_identity_by_induction() {
    let (t, trace, _) = proved(NAT, "plusRightZero");
    assert_eq!(trace.induction_depth(), 1);
    assert!(check_proof(&t, &t.goal, &trace, &[]).is_ok());
}

#[test]
fn commutativity_is_proved_and_checks() {
    let (t, trace, lemmas) = proved(NAT, "plusComm");
    check_proof(&t, &t.goal, &trace, &lemmas).unwrap();
    let text = render_trace(&t.goal, &trace, &lemmas);
    assert!(text.contains("induction on"), "{text}");
}

#[test]
fn false_law_has_first_witness() {
    let t = task(NAT, "bad");
    let ProofOutcome::Refuted(cex) = prove(&t, &quick()) else { panic!() };
    let shown: Vec<String> = cex.assignment.iter().map(|(v, x)| format!("{v}={x}")).collect();
    assert_eq!(shown, vec!["x=Zero", "y=Succ Zero"]);
}

#[test]
fn checker_rejects_unjustified_closure() {
    let t = task(NAT, "plusComm");
    let fake = ProofTrace::Refl { steps: vec![] };
    assert!(matches!(check_proof(&t, &t.goal, &fake, &[]), Err(CheckError::NotClosed { .. })));
    let bogus = ProofTrace::Refl {
        steps: vec![Step::Rewrite { side: Side::Lhs, path: vec![], rule: RuleRef::Definition(Symbol::new("plus")), backwards: false }],
    };
    assert!(matches!(check_proof(&t, &t.goal, &bogus, &[]), Err(CheckError::BadStep { .. })));
}

#[test]
fn checker_rejects_missing_induction_case() {
    let t = task(NAT, "plusRightZero");
    let trace = ProofTrace::Induction {
        steps: vec![],
        variable: Symbol::new("x"),
        cases: vec![InductionCase { ctor: Symbol::new("Zero"), vars: vec![], proof: ProofTrace::Refl { steps: vec![] } }],
    };
    assert!(matches!(check_proof(&t, &t.goal, &trace, &[]), Err(CheckError::BadInduction { .. })));
}

#[test]
fn explored_lemmas_include_commutativity_and_rotation() {
    let t = task(NAT, "plusComm");
    let lemmas = explore_lemmas(&t, &quick());
    let has = |l: &str, r: &str| {
        let (l, r) = (parse_term(l).unwrap(), parse_term(r).unwrap());
        lemmas.iter().any(|x| crate::prover::tests::alpha_eq(&x.equation, &l, &r))
    };
    assert!(has("plus x y", "plus y x"), "{:#?}", lemmas.iter().map(|l| l.equation.to_string()).collect::<Vec<_>>());
    assert!(has("plus m (plus n o)", "plus n (plus m o)"), "{:#?}", lemmas.iter().map(|l| l.equation.to_string()).collect::<Vec<_>>());
}

/// Equality up to consistent variable renaming, in either orientation.
pub(crate) fn alpha_eq(e: &Equation, l: &Term, r: &Term) -> bool {
    fn go(a: &Term, b: &Term, m: &mut Vec<(Symbol, Symbol)>) -> bool {
        match (a, b) {
            (Term::Var(x), Term::Var(y)) => match m.iter().find(|(p, q)| p == x || q == y) {
                Some((p, q)) => p == x && q == y,
                None => {
                    m.push((x.clone(), y.clone()));
                    true
                }
            },
            (Term::App(f, xs), Term::App(g, ys)) => f == g && xs.len() == ys.len() && xs.iter().zip(ys).all(|(x, y)| go(x, y, m)),
            _ => false,
        }
    }
    let pair = |a: &Term, b: &Term| {
        let mut m = Vec::new();
        go(&e.lhs, a, &mut m) && go(&e.rhs, b, &mut m)
    };
    pair(l, r) || pair(r, l)
}

#[test]
fn rev_rev_is_proved() {
    let (t, trace, lemmas) = proved(LIST, "revRev");
    check_proof(&t, &t.goal, &trace, &lemmas).unwrap();
}

#[test]
fn qrev_needs_an_explored_lemma() {
    let (t, trace, lemmas) = proved(LIST, "qrevQrev");
    assert!(!lemmas.is_empty());
    check_proof(&t, &t.goal, &trace, &lemmas).unwrap();
}

