//! Call-by-value evaluation of ground terms and bounded enumeration of values.

use std::collections::{HashMap, HashSet};
use std::fmt;

use thiserror::Error;

use crate::syntax::*;

/// Reduction steps allowed per evaluation unless the caller says otherwise.
pub const DEFAULT_FUEL: u64 = 1_000_000;

/// Nested calls allowed before evaluation gives up; keeps runaway recursion off the native stack.
const MAX_CALL_DEPTH: usize = 400;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("evaluation ran out of fuel")]
    FuelExhausted,
    #[error("no equation of `{0}` matches its arguments")]
    NoMatchingEquation(Symbol),
    #[error("`{0}` is uninterpreted")]
    UninterpretedCall(Symbol),
    #[error("`{0}` is not defined")]
    Undefined(Symbol),
    #[error("variable `{0}` has no value")]
    Unassigned(Symbol),
    #[error("`{0}` is used at a function type")]
    HigherOrder(Symbol),
    #[error("type `{0}` cannot be enumerated")]
    NotEnumerable(Type),
}

/// A constructor applied to values. Values of abstract sorts are nullary
/// atoms whose names start with `#`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Value {
    pub ctor: Symbol,
    pub args: Vec<Value>,
}

impl Value {
    pub fn new(ctor: impl Into<Symbol>, args: Vec<Value>) -> Self {
        Value { ctor: ctor.into(), args }
    }

    pub fn atom(sort: &str, index: usize) -> Self {
        Value::new(Symbol::from(format!("#{sort}{index}")), vec![])
    }

    pub fn is_atom(&self) -> bool {
        self.ctor.starts_with('#')
    }

    /// Constructor nesting depth; nullary constructors have depth 0.
    pub fn depth(&self) -> usize {
        self.args.iter().map(|a| a.depth() + 1).max().unwrap_or(0)
    }

    pub fn to_term(&self) -> Term {
        Term::App(self.ctor.clone(), self.args.iter().map(Value::to_term).collect())
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.to_term().fmt(f)
    }
}

pub type Assignment = HashMap<Symbol, Value>;

pub fn equal_value(a: &Value, b: &Value) -> bool {
    a == b
}

/// Executable view of a set of function definitions.
#[derive(Clone, Debug, Default)]
pub struct Defs {
    funcs: HashMap<Symbol, Vec<Equation>>,
    ctors: HashSet<Symbol>,
    uninterpreted: HashSet<Symbol>,
}

impl Defs {
    pub fn new<'a>(
        datatypes: impl IntoIterator<Item = &'a DataDecl>,
        functions: impl IntoIterator<Item = &'a FunDecl>,
        uninterpreted: impl IntoIterator<Item = Symbol>,
    ) -> Self {
        Defs {
            ctors: datatypes.into_iter().flat_map(|d| d.ctors.iter().map(|c| c.name.clone())).collect(),
            funcs: functions.into_iter().map(|f| (f.name.clone(), f.equations.clone())).collect(),
            uninterpreted: uninterpreted.into_iter().collect(),
        }
    }

    pub fn is_ctor(&self, name: &str) -> bool {
        self.ctors.contains(name)
    }

    pub fn is_uninterpreted(&self, name: &str) -> bool {
        self.uninterpreted.contains(name)
    }

    pub fn equations(&self, name: &str) -> Option<&[Equation]> {
        self.funcs.get(name).map(Vec::as_slice)
    }
}

/// Evaluates `term` under `env`, spending at most `fuel` function reductions.
pub fn eval_term(term: &Term, env: &Assignment, defs: &Defs, fuel: u64) -> Result<Value, EvalError> {
    let mut ev = Evaluator { defs, fuel, depth: 0 };
    ev.eval(term, env)
}

/// Applies a function or constructor to already evaluated arguments.
pub fn apply(f: &Symbol, args: Vec<Value>, defs: &Defs, fuel: u64) -> Result<Value, EvalError> {
    if defs.is_ctor(f) {
        return Ok(Value::new(f.clone(), args));
    }
    let mut ev = Evaluator { defs, fuel, depth: 0 };
    ev.call(f, args, &Term::App(f.clone(), vec![]))
}

struct Evaluator<'d> {
    defs: &'d Defs,
    fuel: u64,
    depth: usize,
}

impl Evaluator<'_> {
    fn eval(&mut self, term: &Term, env: &Assignment) -> Result<Value, EvalError> {
        let (head, args) = match term {
            Term::Var(v) => {
                if let Some(val) = env.get(v) {
                    return Ok(val.clone());
                }
                (v, &[][..])
            }
            Term::App(h, args) => {
                if env.contains_key(h) {
                    return Err(EvalError::HigherOrder(h.clone()));
                }
                (h, args.as_slice())
            }
        };
        let vals = args.iter().map(|a| self.eval(a, env)).collect::<Result<Vec<_>, _>>()?;
        if self.defs.is_ctor(head) {
            return Ok(Value::new(head.clone(), vals));
        }
        self.call(head, vals, term)
    }

    fn call(&mut self, f: &Symbol, args: Vec<Value>, term: &Term) -> Result<Value, EvalError> {
        if self.defs.is_uninterpreted(f) {
            return Err(EvalError::UninterpretedCall(f.clone()));
        }
        let Some(eqs) = self.defs.funcs.get(f) else {
            return Err(match term {
                Term::Var(v) => EvalError::Unassigned(v.clone()),
                _ => EvalError::Undefined(f.clone()),
            });
        };
        if eqs.first().is_some_and(|e| e.patterns.len() != args.len()) {
            return Err(EvalError::HigherOrder(f.clone()));
        }
        if self.fuel == 0 || self.depth >= MAX_CALL_DEPTH {
            return Err(EvalError::FuelExhausted);
        }
        self.fuel -= 1;
        for eq in eqs {
            let mut env = Assignment::new();
            if eq.patterns.iter().zip(&args).all(|(p, v)| match_pattern(p, v, &mut env)) {
                self.depth += 1;
                let r = self.eval(&eq.rhs, &env);
                self.depth -= 1;
                return r;
            }
        }
        Err(EvalError::NoMatchingEquation(f.clone()))
    }
}

/// First-order matching of a value against a pattern, extending `env`.
pub fn match_pattern(p: &Pattern, v: &Value, env: &mut Assignment) -> bool {
    match p {
        Pattern::Wildcard => true,
        Pattern::Var(x) => {
            env.insert(x.clone(), v.clone());
            true
        }
        Pattern::Ctor(c, ps) => {
            c == &v.ctor && ps.len() == v.args.len() && ps.iter().zip(&v.args).all(|(p, v)| match_pattern(p, v, env))
        }
    }
}

/// Enumerates datatype values by depth, optionally with opaque atoms for abstract sorts.
pub struct Enumerator<'d> {
    datatypes: HashMap<Symbol, &'d DataDecl>,
    atoms: HashMap<Symbol, usize>,
    cache: HashMap<(Type, usize), Vec<Value>>,
}

impl<'d> Enumerator<'d> {
    pub fn new(datatypes: impl IntoIterator<Item = &'d DataDecl>) -> Self {
        Enumerator {
            datatypes: datatypes.into_iter().map(|d| (d.name.clone(), d)).collect(),
            atoms: HashMap::new(),
            cache: HashMap::new(),
        }
    }

    /// Treats `sort` as inhabited by `count` distinct atoms of depth 0.
    pub fn with_atoms(mut self, sort: Symbol, count: usize) -> Self {
        self.atoms.insert(sort, count);
        self
    }

    /// All values of depth at most `depth`, ordered by depth, then constructor, then arguments.
    pub fn values(&mut self, ty: &Type, depth: usize) -> Result<Vec<Value>, EvalError> {
        let mut out = Vec::new();
        for d in 0..=depth {
            out.extend(self.exact(ty, d)?);
        }
        Ok(out)
    }

    fn exact(&mut self, ty: &Type, d: usize) -> Result<Vec<Value>, EvalError> {
        if let Some(v) = self.cache.get(&(ty.clone(), d)) {
            return Ok(v.clone());
        }
        let Type::Con(name, targs) = ty else {
            return Err(EvalError::NotEnumerable(ty.clone()));
        };
        if let Some(&n) = self.atoms.get(name) {
            return Ok(if d == 0 { (0..n).map(|i| Value::atom(name, i)).collect() } else { vec![] });
        }
        let Some(data) = self.datatypes.get(name).copied() else {
            return Err(EvalError::NotEnumerable(ty.clone()));
        };
        let mut out = Vec::new();
        for c in &data.ctors {
            if c.args.is_empty() {
                if d == 0 {
                    out.push(Value::new(c.name.clone(), vec![]));
                }
                continue;
            }
            if d == 0 {
                continue;
            }
            let arg_tys = data.ctor_arg_types(c, targs);
            let pools = arg_tys.iter().map(|t| self.values(t, d - 1)).collect::<Result<Vec<_>, _>>()?;
            // Lexicographic product, keeping tuples whose deepest argument sits at d - 1.
            let mut idx = vec![0usize; pools.len()];
            if pools.iter().any(|p| p.is_empty()) {
                continue;
            }
            loop {
                let args: Vec<Value> = idx.iter().zip(&pools).map(|(&i, p)| p[i].clone()).collect();
                if args.iter().any(|a| a.depth() == d - 1) {
                    out.push(Value::new(c.name.clone(), args));
                }
                let mut k = pools.len();
                loop {
                    if k == 0 {
                        break;
                    }
                    k -= 1;
                    idx[k] += 1;
                    if idx[k] < pools[k].len() {
                        break;
                    }
                    idx[k] = 0;
                    if k == 0 {
                        k = usize::MAX;
                        break;
                    }
                }
                if k == usize::MAX {
                    break;
                }
            }
        }
        self.cache.insert((ty.clone(), d), out.clone());
        Ok(out)
    }
}

/// All values of a datatype up to `depth`.
pub fn enumerate_values(ty: &Type, depth: usize, datatypes: &[DataDecl]) -> Result<Vec<Value>, EvalError> {
    Enumerator::new(datatypes).values(ty, depth)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse_program;

    fn program(src: &str) -> (Vec<DataDecl>, Vec<FunDecl>) {
        let p = parse_program(src).unwrap();
        let datas = p.decls.iter().filter_map(|d| if let Decl::Data(d) = d { Some(d.clone()) } else { None }).collect();
        let funs = p.decls.iter().filter_map(|d| if let Decl::Fun(f) = d { Some(f.clone()) } else { None }).collect();
        (datas, funs)
    }

    const NAT: &str = "data Nat = Zero | Succ Nat
data Bool = False | True
data List a = Nil | Cons a (List a)
plus :: Nat -> Nat -> Nat
plus Zero a = a
plus (Succ a) b = Succ (plus a b)
times :: Nat -> Nat -> Nat
times Zero m = Zero
times (Succ n) m = plus m (times n m)
loop :: Nat -> Nat
loop x = loop x
pred :: Nat -> Nat
pred (Succ n) = n
";

    fn nat(n: usize) -> Value {
        (0..n).fold(Value::new("Zero", vec![]), |v, _| Value::new("Succ", vec![v]))
    }

    #[test]
    fn one_plus_one() {
        let (d, f) = program(NAT);
        let defs = Defs::new(&d, &f, []);
        let t = Term::app("plus", vec![nat(1).to_term(), nat(1).to_term()]);
        assert_eq!(eval_term(&t, &Assignment::new(), &defs, DEFAULT_FUEL).unwrap(), nat(2));
    }

    #[test]
    fn times_zero() {
        let (d, f) = program(NAT);
        let defs = Defs::new(&d, &f, []);
        let env: Assignment = [(Symbol::new("m"), nat(1))].into_iter().collect();
        let t = Term::app("times", vec![Term::app("Zero", vec![]), Term::var("m")]);
        assert_eq!(eval_term(&t, &env, &defs, DEFAULT_FUEL).unwrap(), nat(0));
    }

    #[test]
    fn errors_are_classified() {
        let (d, f) = program(NAT);
        let defs = Defs::new(&d, &f, [Symbol::new("opaque")]);
        let env = Assignment::new();
        let z = Term::app("Zero", vec![]);
        assert_eq!(eval_term(&Term::app("loop", vec![z.clone()]), &env, &defs, 100), Err(EvalError::FuelExhausted));
        assert_eq!(eval_term(&Term::app("loop", vec![z.clone()]), &env, &defs, DEFAULT_FUEL), Err(EvalError::FuelExhausted));
        assert!(matches!(eval_term(&Term::app("pred", vec![z.clone()]), &env, &defs, 100), Err(EvalError::NoMatchingEquation(_))));
        assert!(matches!(eval_term(&Term::app("opaque", vec![z]), &env, &defs, 100), Err(EvalError::UninterpretedCall(_))));
    }

    #[test]
    fn enumeration_counts() {
        let (d, _) = program(NAT);
        let nat_ty = Type::con("Nat", vec![]);
        assert_eq!(enumerate_values(&nat_ty, 2, &d).unwrap(), vec![nat(0), nat(1), nat(2)]);
        let b = enumerate_values(&Type::con("Bool", vec![]), 3, &d).unwrap();
        assert_eq!(b, vec![Value::new("False", vec![]), Value::new("True", vec![])]);
        let lb = Type::con("List", vec![Type::con("Bool", vec![])]);
        assert_eq!(enumerate_values(&lb, 3, &d).unwrap().len(), 15);
    }

    #[test]
    fn abstract_sorts_need_atoms() {
        let (d, _) = program(NAT);
        let e = Type::con("ElemA", vec![]);
        assert!(matches!(enumerate_values(&e, 2, &d), Err(EvalError::NotEnumerable(_))));
        let mut en = Enumerator::new(&d).with_atoms("ElemA".into(), 2);
        let l = en.values(&Type::con("List", vec![e]), 1).unwrap();
        assert_eq!(l.len(), 3);
        assert!(l[1].args[0].is_atom());
    }
}
