//! Conjecture generation by testing: enumerate small terms, group them by
//! their values on a fixed set of test assignments, and propose an equation
//! whenever a new term falls into an existing class.

use std::collections::{BTreeSet, HashMap};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::refute::{task_defs, task_enumerator};
use crate::eval::{apply, Defs, Value};
use crate::instantiate::{Equation, ProofTask};
use crate::syntax::{FunDecl, Symbol, Term, Type};

/// Test assignments used when the full product of small values is larger.
pub const MAX_TESTS: usize = 120;
/// Candidate terms considered before exploration stops.
pub const MAX_CANDIDATES: usize = 40_000;
const VARS_PER_TYPE: usize = 3;
const FUEL: u64 = 20_000;
const SEED: u64 = 0x1a3;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SigSymbol {
    pub name: Symbol,
    pub args: Vec<Type>,
    pub ret: Type,
}

/// Function and constructor symbols plus variables to build terms from.
#[derive(Clone, Debug, Default)]
pub struct Signature {
    pub symbols: Vec<SigSymbol>,
    pub vars: Vec<(Symbol, Type)>,
}

fn enumerable(t: &Type, task: &ProofTask) -> bool {
    match t {
        Type::Con(n, args) => {
            (task.is_dummy_sort(n) && args.is_empty())
                || (task.datatypes.iter().any(|d| &d.name == n) && args.iter().all(|a| enumerable(a, task)))
        }
        _ => false,
    }
}

/// Whether evaluating `f` can only reach defined functions and constructors.
fn evaluable(f: &FunDecl, task: &ProofTask, seen: &mut BTreeSet<Symbol>) -> bool {
    if !seen.insert(f.name.clone()) {
        return true;
    }
    let (args, _) = f.signature.body.split_arrows();
    if f.equations.iter().any(|e| e.patterns.len() != args.len()) {
        return false;
    }
    let mut heads = BTreeSet::new();
    for e in &f.equations {
        e.rhs.heads(&mut heads);
        let mut bound = Vec::new();
        e.patterns.iter().for_each(|p| p.vars(&mut bound));
        if bound.iter().any(|v| heads.contains(v)) {
            return false;
        }
    }
    heads.iter().all(|h| {
        if task.datatypes.iter().any(|d| d.ctor(h).is_some()) {
            return true;
        }
        match task.definition(h) {
            Some(g) => evaluable(g, task, seen),
            None => false,
        }
    })
}

const NAMES: [[&str; 3]; 3] = [["x", "y", "z"], ["xs", "ys", "zs"], ["a", "b", "c"]];

fn var_names(t: &Type, task: &ProofTask, k: usize) -> [String; 3] {
    let family = match t {
        Type::Con(n, _) if task.is_dummy_sort(n) => 2,
        Type::Con(_, args) if !args.is_empty() => 1,
        _ => 0,
    };
    NAMES[family].map(|n| if k == 0 { n.to_string() } else { format!("{n}{k}") })
}

/// Symbols for the evaluable first-order definitions of `task` and the
/// constructors of every type they mention, with variables for each type.
pub fn signature(task: &ProofTask) -> Signature {
    let mut sig = Signature::default();
    let mut types: Vec<Type> = Vec::new();
    let add_type = |t: &Type, types: &mut Vec<Type>| {
        if enumerable(t, task) && !types.contains(t) {
            types.push(t.clone());
        }
    };
    for (_, t) in &task.goal.universals {
        add_type(t, &mut types);
    }
    for f in &task.definitions {
        let (args, ret) = f.signature.body.split_arrows();
        if !f.signature.constraints.is_empty() || args.iter().chain([&ret]).any(|t| !enumerable(t, task)) {
            continue;
        }
        if !evaluable(f, task, &mut BTreeSet::new()) {
            continue;
        }
        args.iter().for_each(|t| add_type(t, &mut types));
        add_type(ret, &mut types);
        sig.symbols.push(SigSymbol { name: f.name.clone(), args: args.into_iter().cloned().collect(), ret: ret.clone() });
    }
    // Close over constructor fields.
    let mut i = 0;
    while i < types.len() && types.len() < 16 {
        if let Type::Con(n, targs) = types[i].clone() {
            if let Some(d) = task.datatypes.iter().find(|d| d.name == n) {
                for c in &d.ctors {
                    for a in d.ctor_arg_types(c, &targs) {
                        add_type(&a, &mut types);
                    }
                }
            }
        }
        i += 1;
    }
    for t in &types {
        if let Type::Con(n, targs) = t {
            if let Some(d) = task.datatypes.iter().find(|d| &d.name == n) {
                for c in &d.ctors {
                    sig.symbols.push(SigSymbol { name: c.name.clone(), args: d.ctor_arg_types(c, targs), ret: t.clone() });
                }
            }
        }
    }
    let mut taken: BTreeSet<String> = sig.symbols.iter().map(|s| s.name.to_string()).collect();
    for t in &types {
        let mut k = 0;
        let names = loop {
            let names = var_names(t, task, k);
            if names.iter().all(|n| !taken.contains(n)) {
                break names;
            }
            k += 1;
        };
        for n in names.into_iter().take(VARS_PER_TYPE) {
            taken.insert(n.clone());
            sig.vars.push((Symbol::from(n), t.clone()));
        }
    }
    sig
}

fn type_level(t: &Type, task: &ProofTask, seen: &mut Vec<Type>) -> usize {
    let Type::Con(n, targs) = t else { return 0 };
    if seen.contains(t) {
        return 0;
    }
    seen.push(t.clone());
    let mut level = targs.iter().map(|a| type_level(a, task, seen) + 1).max().unwrap_or(0);
    if let Some(d) = task.datatypes.iter().find(|d| &d.name == n) {
        for c in &d.ctors {
            for f in d.ctor_arg_types(c, targs) {
                if &f != t {
                    level = level.max(type_level(&f, task, seen) + 1);
                }
            }
        }
    }
    seen.pop();
    level
}

/// Nested sub-signatures, smallest first and ending with `sig` itself. Each
/// adds the types one level further up the datatype nesting, so lemmas about
/// the building blocks are found before the terms built from them.
pub fn stages(sig: &Signature, task: &ProofTask) -> Vec<Signature> {
    let level = |t: &Type| type_level(t, task, &mut Vec::new());
    let sym_level = |s: &SigSymbol| s.args.iter().chain([&s.ret]).map(level).max().unwrap_or(0);
    let mut levels: Vec<usize> = sig.symbols.iter().map(sym_level).collect();
    levels.sort();
    levels.dedup();
    let mut out: Vec<Signature> = Vec::new();
    for l in levels {
        let symbols: Vec<SigSymbol> = sig.symbols.iter().filter(|s| sym_level(s) <= l).cloned().collect();
        // A stage without a function symbol finds nothing.
        if symbols.iter().all(|s| task.definition(&s.name).is_none()) {
            continue;
        }
        let vars = sig.vars.iter().filter(|(_, t)| level(t) <= l).cloned().collect();
        out.push(Signature { symbols, vars });
    }
    if out.last().is_none_or(|s| s.symbols.len() != sig.symbols.len() || s.vars.len() != sig.vars.len()) {
        out.push(sig.clone());
    }
    out
}

struct Rep {
    term: Term,
    fp: Vec<u32>,
}

/// Hash-consed values, so fingerprints are vectors of small ids.
#[derive(Default)]
struct Interner {
    values: Vec<Value>,
    ids: HashMap<Value, u32>,
}

impl Interner {
    fn id(&mut self, v: Value) -> u32 {
        if let Some(&i) = self.ids.get(&v) {
            return i;
        }
        let i = self.values.len() as u32;
        self.values.push(v.clone());
        self.ids.insert(v, i);
        i
    }
}

/// Enumerates terms by size and returns the conjectures in discovery order.
pub struct Explorer {
    sig: Signature,
    defs: Defs,
    tests: Vec<Vec<u32>>,
    values: Interner,
    applied: HashMap<(Symbol, Vec<u32>), Option<u32>>,
    reps: Vec<Rep>,
    by_type_size: HashMap<(Type, usize), Vec<usize>>,
    classes: HashMap<(Type, Vec<u32>), usize>,
    pub candidates: usize,
}

impl Explorer {
    pub fn new(task: &ProofTask, sig: Signature, test_depth: usize) -> Self {
        let mut en = task_enumerator(task);
        let pools: Vec<Vec<Value>> = sig.vars.iter().map(|(_, t)| en.values(t, test_depth).unwrap_or_default()).collect();
        let total = pools.iter().try_fold(1usize, |acc, p| acc.checked_mul(p.len()));
        let mut tests: Vec<Vec<Value>> = Vec::new();
        if pools.iter().all(|p| !p.is_empty()) {
            match total {
                Some(n) if n <= MAX_TESTS => {
                    for mut k in 0..n {
                        let mut row = Vec::with_capacity(pools.len());
                        for p in pools.iter().rev() {
                            row.push(p[k % p.len()].clone());
                            k /= p.len();
                        }
                        row.reverse();
                        tests.push(row);
                    }
                }
                _ => {
                    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
                    for _ in 0..MAX_TESTS {
                        tests.push(pools.iter().map(|p| p[rng.gen_range(0..p.len())].clone()).collect());
                    }
                }
            }
        }
        let mut values = Interner::default();
        let tests = tests.into_iter().map(|row| row.into_iter().map(|v| values.id(v)).collect()).collect();
        Explorer {
            sig,
            defs: task_defs(task),
            tests,
            values,
            applied: HashMap::new(),
            reps: Vec::new(),
            by_type_size: HashMap::new(),
            classes: HashMap::new(),
            candidates: 0,
        }
    }

    pub fn test_count(&self) -> usize {
        self.tests.len()
    }

    /// Runs the enumeration up to `max_size`.
    pub fn conjectures(&mut self, max_size: usize, deadline: Option<Instant>) -> Vec<Equation> {
        let mut out = Vec::new();
        if self.tests.is_empty() {
            return out;
        }
        for size in 1..=max_size {
            if size == 1 {
                for (i, (v, t)) in self.sig.vars.clone().into_iter().enumerate() {
                    let fp = self.tests.iter().map(|row| row[i]).collect();
                    self.consider(Term::Var(v), t, 1, fp, &mut out);
                }
            }
            for s in self.sig.symbols.clone() {
                if s.args.is_empty() {
                    if size == 1 {
                        if let Some(fp) = self.fingerprint(&s.name, &[]) {
                            self.consider(Term::App(s.name.clone(), vec![]), s.ret.clone(), 1, fp, &mut out);
                        }
                    }
                    continue;
                }
                if size < 1 + s.args.len() {
                    continue;
                }
                let mut combos = Vec::new();
                self.combos(&s.args, size - 1, &mut Vec::new(), &mut combos);
                for args in combos {
                    self.candidates += 1;
                    if self.candidates > MAX_CANDIDATES || (self.candidates.is_multiple_of(64) && deadline.is_some_and(|d| Instant::now() >= d)) {
                        return out;
                    }
                    if let Some(fp) = self.fingerprint(&s.name, &args) {
                        let term = Term::App(s.name.clone(), args.iter().map(|&i| self.reps[i].term.clone()).collect());
                        self.consider(term, s.ret.clone(), size, fp, &mut out);
                    }
                }
            }
        }
        out
    }

    fn combos(&self, types: &[Type], budget: usize, acc: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        let Some((t, rest)) = types.split_first() else {
            if budget == 0 {
                out.push(acc.clone());
            }
            return;
        };
        for s in 1..=budget.saturating_sub(rest.len()) {
            if rest.is_empty() && s != budget {
                continue;
            }
            if let Some(ids) = self.by_type_size.get(&(t.clone(), s)) {
                for &i in ids {
                    acc.push(i);
                    self.combos(rest, budget - s, acc, out);
                    acc.pop();
                }
            }
        }
    }

    fn fingerprint(&mut self, f: &Symbol, args: &[usize]) -> Option<Vec<u32>> {
        (0..self.tests.len())
            .map(|k| {
                let ids: Vec<u32> = args.iter().map(|&i| self.reps[i].fp[k]).collect();
                if let Some(r) = self.applied.get(&(f.clone(), ids.clone())) {
                    return *r;
                }
                let vals = ids.iter().map(|&i| self.values.values[i as usize].clone()).collect();
                let r = apply(f, vals, &self.defs, FUEL).ok().map(|v| self.values.id(v));
                self.applied.insert((f.clone(), ids), r);
                r
            })
            .collect()
    }

    fn consider(&mut self, term: Term, ty: Type, size: usize, fp: Vec<u32>, out: &mut Vec<Equation>) {
        let key = (ty.clone(), fp);
        if let Some(&rep) = self.classes.get(&key) {
            out.push(self.equation(term, self.reps[rep].term.clone()));
            return;
        }
        let id = self.reps.len();
        self.reps.push(Rep { term, fp: key.1.clone() });
        self.by_type_size.entry((ty, size)).or_default().push(id);
        self.classes.insert(key, id);
    }

    fn equation(&self, lhs: Term, rhs: Term) -> Equation {
        let mut vs = lhs.var_list();
        for v in rhs.var_list() {
            if !vs.contains(&v) {
                vs.push(v);
            }
        }
        let universals = vs
            .into_iter()
            .map(|v| {
                let t = self.sig.vars.iter().find(|(x, _)| x == &v).map(|(_, t)| t.clone()).expect("variables come from the signature");
                (v, t)
            })
            .collect();
        Equation { name: Symbol::new(""), universals, lhs, rhs }
    }
}
