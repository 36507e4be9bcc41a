//! Counterexample search over small values.

use std::time::Instant;

use crate::eval::{eval_term, Assignment, Defs, Enumerator, Value};
use crate::instantiate::ProofTask;
use crate::syntax::Symbol;

/// Opaque values supplied for each abstract sort.
pub const ATOMS_PER_SORT: usize = 2;

const FUEL_PER_SIDE: u64 = 100_000;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Counterexample {
    pub assignment: Vec<(Symbol, Value)>,
    pub lhs: Value,
    pub rhs: Value,
}

impl std::fmt::Display for Counterexample {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let xs: Vec<String> = self.assignment.iter().map(|(v, x)| format!("{v} := {x}")).collect();
        write!(f, "{}; lhs = {}, rhs = {}", xs.join(", "), self.lhs, self.rhs)
    }
}

pub(crate) fn task_defs(task: &ProofTask) -> Defs {
    let ops = task.dummy_sorts.iter().flat_map(|d| d.assumed_ops.iter().map(|(n, _)| n.clone()));
    Defs::new(&task.datatypes, &task.definitions, ops)
}

pub(crate) fn task_enumerator(task: &ProofTask) -> Enumerator<'_> {
    let mut e = Enumerator::new(&task.datatypes);
    for d in &task.dummy_sorts {
        e = e.with_atoms(d.name.clone(), ATOMS_PER_SORT);
    }
    e
}

/// Tests assignments of values up to `depth`, shallowest first and in
/// lexicographic order within a depth, stopping after `limit` evaluations.
/// Assignments whose evaluation fails (for instance by reaching an assumed
/// operation) are skipped.
pub fn refute(task: &ProofTask, depth: usize, limit: usize, deadline: Option<Instant>) -> Option<Counterexample> {
    let defs = task_defs(task);
    let mut en = task_enumerator(task);
    let goal = &task.goal;
    let mut pools = Vec::new();
    for (_, ty) in &goal.universals {
        pools.push(en.values(ty, depth).ok()?);
    }
    if pools.iter().any(Vec::is_empty) {
        return None;
    }
    let mut tried = 0usize;
    for d in 0..=depth {
        let sizes: Vec<usize> = pools.iter().map(|p| p.iter().take_while(|v| v.depth() <= d).count()).collect();
        if sizes.contains(&0) {
            continue;
        }
        let mut idx = vec![0usize; pools.len()];
        loop {
            let vals: Vec<&Value> = idx.iter().zip(&pools).map(|(&i, p)| &p[i]).collect();
            if vals.iter().any(|v| v.depth() == d) || (d == 0 && vals.is_empty()) {
                tried += 1;
                if tried > limit || (tried.is_multiple_of(256) && deadline.is_some_and(|t| Instant::now() >= t)) {
                    return None;
                }
                let env: Assignment = goal.universals.iter().map(|(v, _)| v.clone()).zip(vals.iter().map(|v| (*v).clone())).collect();
                if let (Ok(l), Ok(r)) = (eval_term(&goal.lhs, &env, &defs, FUEL_PER_SIDE), eval_term(&goal.rhs, &env, &defs, FUEL_PER_SIDE)) {
                    if l != r {
                        let assignment = goal.universals.iter().map(|(v, _)| (v.clone(), env[v].clone())).collect();
                        return Some(Counterexample { assignment, lhs: l, rhs: r });
                    }
                }
            }
            // Odometer with the last variable varying fastest.
            let mut k = idx.len();
            loop {
                if k == 0 {
                    break;
                }
                k -= 1;
                idx[k] += 1;
                if idx[k] < sizes[k] {
                    break;
                }
                idx[k] = 0;
                if k == 0 {
                    k = usize::MAX;
                    break;
                }
            }
            if k == usize::MAX || idx.is_empty() {
                break;
            }
        }
    }
    None
}
