mod common;

use lawkeeper::tipcore::{emit_tip, lower_task, parse_sexprs, parse_tip, undeclared_symbols, SExpr};
use proptest::prelude::*;

fn top_level_heads(src: &str) -> Vec<String> {
    parse_sexprs(src)
        .unwrap()
        .iter()
        .filter_map(|e| e.list().and_then(|items| items.first()).and_then(SExpr::atom).map(str::to_string))
        .collect()
}

fn count(src: &str, head: &str) -> usize {
    top_level_heads(src).iter().filter(|h| *h == head).count()
}

#[test]
fn every_task_survives_emit_parse_emit() {
    for name in common::FIXTURES {
        for task in common::tasks(name) {
            let problem = lower_task(&task);
            let text = emit_tip(&problem);
            let back = parse_tip(&text).unwrap_or_else(|e| panic!("{}: {e}\n{text}", task.id));
            assert_eq!(back, problem, "{}", task.id);
            assert_eq!(emit_tip(&back), text, "{}", task.id);
        }
    }
}

#[test]
fn emitted_problems_declare_everything_they_use() {
    for name in common::FIXTURES {
        for task in common::tasks(name) {
            let missing = undeclared_symbols(&lower_task(&task));
            assert!(missing.is_empty(), "{}: {missing:?}", task.id);
        }
    }
}

#[test]
fn every_problem_ends_with_one_negated_goal() {
    for task in common::tasks("semiring") {
        let heads = top_level_heads(&emit_tip(&lower_task(&task)));
        assert_eq!(heads.last().map(String::as_str), Some("assert-not"), "{}", task.id);
        assert_eq!(heads.iter().filter(|h| *h == "assert-not").count(), 1);
    }
}

#[test]
fn maybe_monoid_abstracts_its_element() {
    let text = emit_tip(&lower_task(&common::task("monoid", "mappendAssoc_MonoidMaybeElemA")));
    assert_eq!(count(&text, "declare-sort"), 1);
    assert!(text.contains("(declare-sort ElemA 0)"));
    assert_eq!(count(&text, "assert"), 3);
    assert_eq!(count(&text, "declare-fun"), 2);
}

#[test]
fn commutative_semiring_problems_assume_the_semiring_laws() {
    let tasks: Vec<_> = common::tasks("commutative_semiring").into_iter().filter(|t| t.law == "timesComm").collect();
    assert_eq!(tasks.len(), 4);
    for task in tasks {
        let text = emit_tip(&lower_task(&task));
        assert_eq!(count(&text, "assert"), 8, "{}", task.id);
    }
}

#[test]
fn plain_instances_need_no_axioms() {
    let text = emit_tip(&lower_task(&common::task("plus_comm", "plusComm")));
    assert_eq!(count(&text, "assert"), 0);
    assert_eq!(count(&text, "define-fun-rec"), 1);
    assert_eq!(count(&text, "declare-datatype"), 1);
}

#[test]
fn malformed_input_is_rejected_with_a_position() {
    let err = parse_tip("(declare-datatype Nat ((Zero)))\n(frobnicate x)").unwrap_err();
    assert_eq!(err.to_string(), "2:2: unknown keyword `frobnicate`");
    assert!(parse_sexprs("(a (b)").is_err());
    assert!(parse_sexprs("a)").is_err());
}

fn strip(e: &SExpr) -> String {
    match e {
        SExpr::Atom { text, .. } => text.clone(),
        SExpr::List { items, .. } => format!("({})", items.iter().map(strip).collect::<Vec<_>>().join(" ")),
    }
}

#[derive(Clone, Debug)]
enum Tree {
    Atom(String),
    List(Vec<Tree>),
}

fn render(t: &Tree, pretty: bool) -> String {
    match t {
        Tree::Atom(a) => a.clone(),
        Tree::List(items) => {
            let sep = if pretty { "\n  " } else { " " };
            format!("({})", items.iter().map(|i| render(i, pretty)).collect::<Vec<_>>().join(sep))
        }
    }
}

fn arb_tree() -> impl Strategy<Value = Tree> {
    let atom = "[a-zA-Z_=@!:+*<>-][a-zA-Z0-9_=@!:+*<>-]{0,6}".prop_map(Tree::Atom);
    atom.prop_recursive(4, 32, 5, |inner| proptest::collection::vec(inner, 0..5).prop_map(Tree::List))
}

proptest! {
    #[test]
    fn sexprs_read_back_what_was_written(trees in proptest::collection::vec(arb_tree(), 0..4), pretty: bool) {
        let text = trees.iter().map(|t| render(t, pretty)).collect::<Vec<_>>().join("\n; comment\n");
        let parsed = parse_sexprs(&text).unwrap();
        let flat: Vec<String> = parsed.iter().map(strip).collect();
        let expected: Vec<String> = trees.iter().map(|t| render(t, false)).collect();
        prop_assert_eq!(flat, expected);
    }
}

#[test]
fn mutually_recursive_functions_share_one_definition() {
    let src = "data Nat = Zero | Succ Nat
data Bool = False | True
even :: Nat -> Bool
even Zero = True
even (Succ n) = odd n
odd :: Nat -> Bool
odd Zero = False
odd (Succ n) = even n
half :: Nat -> Nat
half Zero = Zero
half (Succ Zero) = Zero
half (Succ (Succ n)) = Succ (half n)
law evenHalf :: Nat -> Equality Bool
law evenHalf x = even (half x) === even (half x)
";
    let (p, t) = lawkeeper::typecheck::check_program(&lawkeeper::frontend::parse_program(src).unwrap()).unwrap();
    let task = lawkeeper::instantiate::build_tasks(&p, &t).unwrap().remove(0);
    let problem = lower_task(&task);
    let text = emit_tip(&problem);
    assert_eq!(count(&text, "define-funs-rec"), 1, "{text}");
    assert_eq!(count(&text, "define-fun-rec"), 1, "{text}");
    let back = parse_tip(&text).unwrap();
    assert_eq!(back, problem);
    assert_eq!(emit_tip(&back), text);
}

#[test]
fn mismatched_define_funs_rec_is_rejected() {
    let src = "(declare-datatype Nat ((Zero) (Succ (p Nat))))\n(define-funs-rec ((f ((x Nat)) Nat)) ())\n(assert-not (= Zero Zero))\n";
    let err = parse_tip(src).unwrap_err().to_string();
    assert!(err.contains("signature and body counts differ"), "{err}");
}
