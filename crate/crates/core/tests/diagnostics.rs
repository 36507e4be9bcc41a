mod common;

use lawkeeper::cli::{load_tasks, CliError};

fn expectation(path: &std::path::Path) -> String {
    let src = std::fs::read_to_string(path).unwrap();
    let first = src.lines().next().unwrap_or_default();
    first.strip_prefix("-- expect: ").unwrap_or_else(|| panic!("{} has no expectation line", path.display())).to_string()
}

#[test]
fn every_bad_program_reports_its_diagnostic() {
    let files = common::bad_fixtures();
    assert!(files.len() >= 13);
    for path in files {
        let expected = expectation(&path);
        let err = match load_tasks(std::slice::from_ref(&path)) {
            Ok(_) => panic!("{} was accepted", path.display()),
            Err(e) => e,
        };
        assert!(matches!(err, CliError::Diagnostic(_)), "{}: {err:?}", path.display());
        let msg = err.to_string();
        assert!(msg.contains(&expected), "{}: `{msg}` lacks `{expected}`", path.display());
        let name = path.file_name().unwrap().to_string_lossy();
        assert!(msg.contains(name.as_ref()), "{}: `{msg}` has no location", path.display());
    }
}

#[test]
fn diagnostics_carry_file_line_and_column() {
    let path = common::fixture("bad/unbound_name");
    let msg = load_tasks(&[path]).unwrap_err().to_string();
    assert!(msg.contains("unbound_name.lhc:4:"), "{msg}");
}

#[test]
fn good_fixtures_load() {
    for name in common::FIXTURES {
        assert!(!common::tasks(name).is_empty(), "{name}");
    }
}

#[test]
fn definitions_may_span_several_files() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.lhc");
    let b = dir.path().join("b.lhc");
    std::fs::write(&a, "data Nat = Zero | Succ Nat\n\nplus :: Nat -> Nat -> Nat\nplus Zero n = n\nplus (Succ m) n = Succ (plus m n)\n").unwrap();
    std::fs::write(&b, "law plusZero :: Nat -> Equality Nat\nlaw plusZero x = plus Zero x === x\n").unwrap();
    let tasks = load_tasks(&[a.clone(), b.clone()]).unwrap();
    assert_eq!(tasks.len(), 1);
    std::fs::write(&b, "data Nat = Z\n").unwrap();
    let msg = load_tasks(&[a, b]).unwrap_err().to_string();
    assert!(msg.contains("duplicate name `Nat`"), "{msg}");
}
