//! Lexing, parsing, structural validation and pretty-printing of `.lhc` sources.

mod lexer;
mod parser;
mod pretty;

use thiserror::Error;

use crate::diagnostic::Diagnostic;
use crate::syntax::{Pos, SourceProgram, Symbol, Term};

pub use parser::{Assoc, OPERATORS};
pub use pretty::pretty_print;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FrontendError {
    #[error("{line}:{col}: {message}")]
    Lex { line: usize, col: usize, message: String },
    #[error("{line}:{col}: expected {}, found {found}", expected.join(" or "))]
    Parse {
        line: usize,
        col: usize,
        expected: Vec<String>,
        found: String,
    },
    #[error("duplicate name `{name}` (first defined at {first}, again at {second})")]
    DuplicateName { name: String, first: Pos, second: Pos },
    #[error("{line}:{col}: {message}")]
    Structure { line: usize, col: usize, message: String },
}

impl FrontendError {
    pub fn diagnostic(&self, file: Option<&str>) -> Diagnostic {
        let at = |line: usize, col: usize| Pos { file: file.map(Symbol::new), line, col };
        match self {
            FrontendError::Lex { line, col, message } | FrontendError::Structure { line, col, message } => {
                Diagnostic::new(at(*line, *col), message.clone())
            }
            FrontendError::Parse { line, col, expected, found } => Diagnostic::new(
                at(*line, *col),
                format!("expected {}, found {found}", expected.join(" or ")),
            ),
            FrontendError::DuplicateName { name, first, second } => {
                let mut pos = second.clone();
                if pos.file.is_none() {
                    pos.file = file.map(Symbol::new);
                }
                let at = match &first.file {
                    Some(f) if pos.file.as_ref() != Some(f) => format!("{first}"),
                    _ => format!("{}:{}", first.line, first.col),
                };
                Diagnostic::new(pos, format!("duplicate name `{name}` (first defined at {at})"))
            }
        }
    }
}

/// Parses one source file.
pub fn parse_program(source: &str) -> Result<SourceProgram, FrontendError> {
    parse_program_named(source, None)
}

/// Parses one source file, recording `file` in every declaration position.
pub fn parse_program_named(source: &str, file: Option<&str>) -> Result<SourceProgram, FrontendError> {
    let tokens = lexer::lex(source)?;
    parser::parse_tokens(&tokens, file.map(Symbol::new).as_ref())
}

/// Parses a term in surface syntax; lowercase identifiers without arguments
/// become variables.
pub fn parse_term(source: &str) -> Result<Term, FrontendError> {
    parser::parse_term_tokens(&lexer::lex(source)?)
}

/// Re-runs the structural checks on a program assembled from several files.
pub fn validate_program(program: &SourceProgram) -> Result<(), FrontendError> {
    parser::validate(program)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::*;

    #[test]
    fn parses_nat_datatype() {
        let p = parse_program("data Nat = Zero | Succ Nat").unwrap();
        assert_eq!(
            p.decls,
            vec![Decl::Data(DataDecl {
                name: "Nat".into(),
                params: vec![],
                ctors: vec![
                    CtorDecl { name: "Zero".into(), args: vec![] },
                    CtorDecl { name: "Succ".into(), args: vec![Type::con("Nat", vec![])] },
                ],
            })]
        );
    }

    #[test]
    fn empty_file_has_no_declarations() {
        assert!(parse_program("").unwrap().decls.is_empty());
        assert!(parse_program("-- only a comment\n\n").unwrap().decls.is_empty());
    }

    #[test]
    fn parses_associativity_law() {
        let src = "law assoc :: Monoid a => a -> a -> a -> Equality a\nlaw assoc x y z = mappend x (mappend y z) === mappend (mappend x y) z";
        let p = parse_program(src).unwrap();
        let Decl::Law(l) = &p.decls[0] else { panic!("expected a law") };
        assert_eq!(l.name, "assoc");
        assert_eq!(
            l.signature.constraints,
            vec![Constraint { class: "Monoid".into(), arg: Type::var("a") }]
        );
        assert_eq!(l.params, vec![Symbol::new("x"), Symbol::new("y"), Symbol::new("z")]);
        assert_eq!(l.lhs.to_string(), "mappend x (mappend y z)");
        assert_eq!(l.rhs.to_string(), "mappend (mappend x y) z");
        assert_eq!(l.equality_type(), Some(&Type::var("a")));
    }

    #[test]
    fn infix_equations_desugar_to_prefix() {
        let src = "data Nat = Zero | Succ Nat\n(+) :: Nat -> Nat -> Nat\nZero + a = a\n(Succ a) + b = Succ (a + b)";
        let p = parse_program(src).unwrap();
        let Decl::Fun(f) = &p.decls[1] else { panic!() };
        assert_eq!(f.name, "plus");
        assert_eq!(f.equations[1].rhs.to_string(), "Succ (plus a b)");
    }

    #[test]
    fn operator_precedence() {
        let src = "f :: Nat -> Nat -> Nat -> Nat\nf a b c = a + b * c + a";
        let p = parse_program(src).unwrap();
        let Decl::Fun(f) = &p.decls[0] else { panic!() };
        assert_eq!(f.equations[0].rhs.to_string(), "plus (plus a (times b c)) a");
    }

    #[test]
    fn braces_and_layout_instances_agree() {
        let a = parse_program("instance Monoid Nat { mempty = Zero; mappend = plus }").unwrap();
        let b = parse_program("instance Monoid Nat where\n  mempty = Zero\n  mappend = plus\n").unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn class_with_superclass_and_no_body() {
        let p = parse_program("class Semiring a => CommutativeSemiring a").unwrap();
        let Decl::Class(c) = &p.decls[0] else { panic!() };
        assert_eq!(c.superclasses, vec![Symbol::new("Semiring")]);
        assert!(c.methods.is_empty());
    }

    #[test]
    fn constrained_instance_head() {
        let p = parse_program("instance Monoid a => Monoid (Maybe a) where\n  mempty = Nothing\n  mappend = maybeAppend").unwrap();
        let Decl::Instance(i) = &p.decls[0] else { panic!() };
        assert_eq!(i.context.len(), 1);
        assert_eq!(i.head.to_string(), "Maybe a");
    }

    #[test]
    fn parse_error_reports_position_and_expected() {
        let err = parse_program("data Nat = Zero |").unwrap_err();
        match err {
            FrontendError::Parse { line, expected, .. } => {
                assert_eq!(line, 1);
                assert_eq!(expected, vec!["constructor".to_string()]);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn duplicate_constructor_reports_both_positions() {
        let err = parse_program("data A = X\ndata B = X").unwrap_err();
        match err {
            FrontendError::DuplicateName { name, first, second } => {
                assert_eq!(name, "X");
                assert_eq!((first.line, second.line), (1, 2));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn non_linear_pattern_rejected() {
        let err = parse_program("data B = T | F\neq :: B -> B -> B\neq x x = T").unwrap_err();
        assert!(matches!(err, FrontendError::Structure { .. }), "{err:?}");
    }

    #[test]
    fn diagnostic_format() {
        let err = parse_program("data = X").unwrap_err();
        assert_eq!(
            err.diagnostic(Some("a.lhc")).to_string(),
            "a.lhc:1:6: error: expected constructor, found `=`"
        );
    }
}
