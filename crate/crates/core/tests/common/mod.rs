#![allow(dead_code)]

use std::path::PathBuf;

use lawkeeper::cli::load_tasks;
use lawkeeper::eval::{Assignment, Defs, Enumerator};
use lawkeeper::instantiate::{Equation, ProofTask};
use lawkeeper::syntax::{Symbol, Term};

pub const FIXTURES: [&str; 7] = ["plus_comm", "monoid", "semiring", "commutative_semiring", "reversible", "mconcat", "chain"];

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(format!("{name}.lhc"))
}

pub fn source(name: &str) -> String {
    std::fs::read_to_string(fixture(name)).unwrap()
}

pub fn tasks(name: &str) -> Vec<ProofTask> {
    load_tasks(&[fixture(name)]).unwrap()
}

pub fn task(name: &str, id: &str) -> ProofTask {
    tasks(name).into_iter().find(|t| t.id == id).unwrap_or_else(|| panic!("no task {id} in {name}"))
}

pub fn bad_fixtures() -> Vec<PathBuf> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join("bad");
    let mut out: Vec<PathBuf> = std::fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
    out.sort();
    out
}

/// Canonical text of an equation with variables numbered by first
/// occurrence, taking the smaller of the two orientations.
pub fn canonical(l: &Term, r: &Term) -> String {
    let key = |a: &Term, b: &Term| {
        let mut order = a.var_list();
        for v in b.var_list() {
            if !order.contains(&v) {
                order.push(v);
            }
        }
        let map = |v: &Symbol| order.iter().position(|x| x == v).map(|i| Term::var(&format!("v{i}")));
        format!("{} = {}", a.subst(&map), b.subst(&map))
    };
    key(l, r).min(key(r, l))
}

pub fn defs(task: &ProofTask) -> Defs {
    let opaque = task.dummy_sorts.iter().flat_map(|d| d.assumed_ops.iter().map(|(n, _)| n.clone()));
    Defs::new(&task.datatypes, &task.definitions, opaque)
}

/// Every assignment of values up to `depth`, thinned to at most `cap`.
pub fn assignments(task: &ProofTask, eq: &Equation, depth: usize, cap: usize) -> Vec<Assignment> {
    let mut en = Enumerator::new(&task.datatypes);
    for d in &task.dummy_sorts {
        en = en.with_atoms(d.name.clone(), 2);
    }
    let mut out = vec![Assignment::new()];
    for (v, t) in &eq.universals {
        let values = en.values(t, depth).unwrap();
        out = out
            .iter()
            .flat_map(|a| {
                values.iter().map(move |x| {
                    let mut a = a.clone();
                    a.insert(v.clone(), x.clone());
                    a
                })
            })
            .collect();
        if out.len() > cap {
            let stride = out.len().div_ceil(cap);
            out = out.into_iter().step_by(stride).collect();
        }
    }
    out
}
