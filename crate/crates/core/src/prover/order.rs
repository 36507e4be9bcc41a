//! Lexicographic path order over terms.
//!
//! Goal variables act as the smallest constants, ordered by name; constructors
//! sit below defined functions, and a function sits above everything it calls.

use std::cmp::Ordering;
use std::collections::{BTreeSet, HashMap, HashSet};

use crate::syntax::{DataDecl, FunDecl, Symbol, Term};

#[derive(Clone, Debug, Default)]
pub struct Precedence {
    rank: HashMap<Symbol, (u8, usize)>,
}

impl Precedence {
    /// Builds a total precedence from constructors and the call graph of `functions`.
    pub fn new<'a>(datatypes: impl IntoIterator<Item = &'a DataDecl>, functions: &[FunDecl], opaque: &[Symbol]) -> Self {
        let mut rank = HashMap::new();
        for (i, c) in datatypes.into_iter().flat_map(|d| &d.ctors).enumerate() {
            rank.insert(c.name.clone(), (2, i));
        }
        let mut next = 0;
        for o in opaque {
            rank.insert(o.clone(), (3, next));
            next += 1;
        }
        let calls: HashMap<&Symbol, BTreeSet<Symbol>> = functions
            .iter()
            .map(|f| {
                let mut s = BTreeSet::new();
                f.equations.iter().for_each(|e| e.rhs.heads(&mut s));
                (&f.name, s)
            })
            .collect();
        let mut names: Vec<&Symbol> = functions.iter().map(|f| &f.name).collect();
        names.sort();
        let mut seen = HashSet::new();
        fn visit<'a>(
            f: &'a Symbol,
            calls: &'a HashMap<&Symbol, BTreeSet<Symbol>>,
            seen: &mut HashSet<&'a Symbol>,
            rank: &mut HashMap<Symbol, (u8, usize)>,
            next: &mut usize,
        ) {
            if !seen.insert(f) {
                return;
            }
            if let Some(cs) = calls.get(f) {
                for c in cs {
                    if let Some((k, _)) = calls.get_key_value(c) {
                        visit(k, calls, seen, rank, next);
                    }
                }
            }
            rank.insert(f.clone(), (3, *next));
            *next += 1;
        }
        for n in names {
            visit(n, &calls, &mut seen, &mut rank, &mut next);
        }
        Precedence { rank }
    }

    fn key(&self, s: &Symbol, is_var: bool) -> (u8, usize) {
        if is_var {
            return (0, 0);
        }
        self.rank.get(s).copied().unwrap_or((1, 0))
    }

    fn cmp_symbols(&self, a: (&Symbol, bool), b: (&Symbol, bool)) -> Ordering {
        self.key(a.0, a.1).cmp(&self.key(b.0, b.1)).then_with(|| a.0.cmp(b.0))
    }

    /// `s > t` where every variable is a constant.
    pub fn gt_ground(&self, s: &Term, t: &Term) -> bool {
        self.gt(s, t, &|_| false)
    }

    /// `s > t` where variables accepted by `is_var` are genuine variables and
    /// the rest are constants.
    pub fn gt(&self, s: &Term, t: &Term, is_var: &dyn Fn(&Symbol) -> bool) -> bool {
        self.gt_memo(s, t, is_var, &mut HashMap::new())
    }

    // Subterm comparisons repeat a lot on large terms, so results are cached
    // by address for the duration of one top-level call.
    fn gt_memo(&self, s: &Term, t: &Term, is_var: &dyn Fn(&Symbol) -> bool, memo: &mut HashMap<(usize, usize), bool>) -> bool {
        let key = (s as *const Term as usize, t as *const Term as usize);
        if let Some(&r) = memo.get(&key) {
            return r;
        }
        let r = self.gt_uncached(s, t, is_var, memo);
        memo.insert(key, r);
        r
    }

    fn gt_uncached(&self, s: &Term, t: &Term, is_var: &dyn Fn(&Symbol) -> bool, memo: &mut HashMap<(usize, usize), bool>) -> bool {
        if let Term::Var(x) = t {
            if is_var(x) {
                return s != t && occurs(x, s);
            }
        }
        let (f, ss, f_var) = match s {
            Term::Var(x) if is_var(x) => return false,
            Term::Var(x) => (x, &[][..], true),
            Term::App(h, args) => (h, args.as_slice(), false),
        };
        if ss.iter().any(|si| si == t || self.gt_memo(si, t, is_var, memo)) {
            return true;
        }
        let (g, ts, g_var) = match t {
            Term::Var(x) => (x, &[][..], true),
            Term::App(h, args) => (h, args.as_slice(), false),
        };
        let same = f == g && f_var == g_var && ss.len() == ts.len();
        if same {
            if !ts.iter().all(|tj| self.gt_memo(s, tj, is_var, memo)) {
                return false;
            }
            for (a, b) in ss.iter().zip(ts) {
                if a != b {
                    return self.gt_memo(a, b, is_var, memo);
                }
            }
            return false;
        }
        match self.cmp_symbols((f, f_var), (g, g_var)) {
            Ordering::Greater => ts.iter().all(|tj| self.gt_memo(s, tj, is_var, memo)),
            _ => false,
        }
    }
}

fn occurs(x: &Symbol, t: &Term) -> bool {
    match t {
        Term::Var(v) => v == x,
        Term::App(_, args) => args.iter().any(|a| occurs(x, a)),
    }
}
