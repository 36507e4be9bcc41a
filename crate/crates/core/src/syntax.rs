//! Surface syntax shared by every pipeline stage: names, types, terms,
//! patterns and the declaration forms of a source program.

use std::borrow::Borrow;
use std::collections::BTreeSet;
use std::fmt;
use std::ops::Deref;
use std::sync::Arc;

/// Cheaply clonable identifier.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Symbol(Arc<str>);

impl Symbol {
    pub fn new(s: &str) -> Self {
        Symbol(Arc::from(s))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl Deref for Symbol {
    type Target = str;
    fn deref(&self) -> &str {
        &self.0
    }
}

impl Borrow<str> for Symbol {
    fn borrow(&self) -> &str {
        &self.0
    }
}

impl From<&str> for Symbol {
    fn from(s: &str) -> Self {
        Symbol::new(s)
    }
}

impl From<String> for Symbol {
    fn from(s: String) -> Self {
        Symbol(Arc::from(s))
    }
}

impl PartialEq<str> for Symbol {
    fn eq(&self, other: &str) -> bool {
        &*self.0 == other
    }
}

impl PartialEq<&str> for Symbol {
    fn eq(&self, other: &&str) -> bool {
        &*self.0 == *other
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", &*self.0)
    }
}

/// Source position, 1-based.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Pos {
    pub file: Option<Symbol>,
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.file {
            Some(file) => write!(f, "{}:{}:{}", file, self.line, self.col),
            None => write!(f, "<input>:{}:{}", self.line, self.col),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Type {
    Var(Symbol),
    Con(Symbol, Vec<Type>),
    Arrow(Box<Type>, Box<Type>),
}

impl Type {
    pub fn con(name: &str, args: Vec<Type>) -> Type {
        Type::Con(Symbol::new(name), args)
    }

    pub fn var(name: &str) -> Type {
        Type::Var(Symbol::new(name))
    }

    pub fn arrow(from: Type, to: Type) -> Type {
        Type::Arrow(Box::new(from), Box::new(to))
    }

    /// Builds `a1 -> a2 -> ... -> ret`.
    pub fn arrows(args: impl IntoIterator<Item = Type>, ret: Type) -> Type {
        let args: Vec<Type> = args.into_iter().collect();
        args.into_iter().rev().fold(ret, |acc, a| Type::arrow(a, acc))
    }

    /// Splits an arrow chain into argument types and final result.
    pub fn split_arrows(&self) -> (Vec<&Type>, &Type) {
        let mut args = Vec::new();
        let mut cur = self;
        while let Type::Arrow(a, b) = cur {
            args.push(&**a);
            cur = b;
        }
        (args, cur)
    }

    pub fn arity(&self) -> usize {
        self.split_arrows().0.len()
    }

    pub fn is_arrow(&self) -> bool {
        matches!(self, Type::Arrow(..))
    }

    pub fn contains_arrow(&self) -> bool {
        match self {
            Type::Var(_) => false,
            Type::Con(_, args) => args.iter().any(Type::contains_arrow),
            Type::Arrow(..) => true,
        }
    }

    pub fn free_vars(&self, out: &mut BTreeSet<Symbol>) {
        match self {
            Type::Var(v) => {
                out.insert(v.clone());
            }
            Type::Con(_, args) => args.iter().for_each(|a| a.free_vars(out)),
            Type::Arrow(a, b) => {
                a.free_vars(out);
                b.free_vars(out);
            }
        }
    }

    /// Type variables in order of first occurrence.
    pub fn vars_in_order(&self, out: &mut Vec<Symbol>) {
        match self {
            Type::Var(v) => {
                if !out.contains(v) {
                    out.push(v.clone());
                }
            }
            Type::Con(_, args) => args.iter().for_each(|a| a.vars_in_order(out)),
            Type::Arrow(a, b) => {
                a.vars_in_order(out);
                b.vars_in_order(out);
            }
        }
    }

    pub fn subst(&self, map: &dyn Fn(&Symbol) -> Option<Type>) -> Type {
        match self {
            Type::Var(v) => map(v).unwrap_or_else(|| self.clone()),
            Type::Con(n, args) => Type::Con(n.clone(), args.iter().map(|a| a.subst(map)).collect()),
            Type::Arrow(a, b) => Type::arrow(a.subst(map), b.subst(map)),
        }
    }

    /// Flat alphanumeric rendering used in mangled names: `Maybe ElemA` becomes `MaybeElemA`.
    pub fn flatten(&self) -> String {
        let mut s = String::new();
        self.flatten_into(&mut s);
        s
    }

    fn flatten_into(&self, s: &mut String) {
        match self {
            Type::Var(v) => s.push_str(v),
            Type::Con(n, args) => {
                s.push_str(n);
                for a in args {
                    a.flatten_into(s);
                }
            }
            Type::Arrow(a, b) => {
                s.push_str("Fun");
                a.flatten_into(s);
                b.flatten_into(s);
            }
        }
    }

    pub fn head(&self) -> Option<&Symbol> {
        match self {
            Type::Con(n, _) => Some(n),
            _ => None,
        }
    }

    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, prec: u8) -> fmt::Result {
        match self {
            Type::Var(v) => write!(f, "{v}"),
            Type::Con(n, args) if args.is_empty() => write!(f, "{n}"),
            Type::Con(n, args) => {
                if prec >= 2 {
                    write!(f, "(")?;
                }
                write!(f, "{n}")?;
                for a in args {
                    write!(f, " ")?;
                    a.fmt_prec(f, 2)?;
                }
                if prec >= 2 {
                    write!(f, ")")?;
                }
                Ok(())
            }
            Type::Arrow(a, b) => {
                if prec >= 1 {
                    write!(f, "(")?;
                }
                a.fmt_prec(f, 1)?;
                write!(f, " -> ")?;
                b.fmt_prec(f, 0)?;
                if prec >= 1 {
                    write!(f, ")")?;
                }
                Ok(())
            }
        }
    }
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Constraint {
    pub class: Symbol,
    pub arg: Type,
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.arg {
            Type::Var(_) => write!(f, "{} {}", self.class, self.arg),
            Type::Con(_, args) if args.is_empty() => write!(f, "{} {}", self.class, self.arg),
            _ => write!(f, "{} ({})", self.class, self.arg),
        }
    }
}

/// Constraints plus a body type; every free type variable is implicitly quantified.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TypeScheme {
    pub quantified: Vec<Symbol>,
    pub constraints: Vec<Constraint>,
    pub body: Type,
}

impl TypeScheme {
    pub fn new(constraints: Vec<Constraint>, body: Type) -> Self {
        let mut quantified = Vec::new();
        for c in &constraints {
            c.arg.vars_in_order(&mut quantified);
        }
        body.vars_in_order(&mut quantified);
        TypeScheme { quantified, constraints, body }
    }

    pub fn mono(body: Type) -> Self {
        TypeScheme::new(Vec::new(), body)
    }
}

impl fmt::Display for TypeScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_context(f, &self.constraints)?;
        write!(f, "{}", self.body)
    }
}

pub(crate) fn fmt_context(f: &mut fmt::Formatter<'_>, cs: &[Constraint]) -> fmt::Result {
    match cs {
        [] => Ok(()),
        [c] => write!(f, "{c} => "),
        _ => {
            write!(f, "(")?;
            for (i, c) in cs.iter().enumerate() {
                if i > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{c}")?;
            }
            write!(f, ") => ")
        }
    }
}

/// First-order applicative term. The head of an `App` is a constructor,
/// function, class method, or (only in higher-order positions) a variable.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Var(Symbol),
    App(Symbol, Vec<Term>),
}

impl Term {
    pub fn var(name: &str) -> Term {
        Term::Var(Symbol::new(name))
    }

    pub fn app(head: &str, args: Vec<Term>) -> Term {
        Term::App(Symbol::new(head), args)
    }

    pub fn constant(head: &str) -> Term {
        Term::App(Symbol::new(head), Vec::new())
    }

    pub fn size(&self) -> usize {
        match self {
            Term::Var(_) => 1,
            Term::App(_, args) => 1 + args.iter().map(Term::size).sum::<usize>(),
        }
    }

    pub fn vars(&self, out: &mut Vec<Symbol>) {
        match self {
            Term::Var(v) => {
                if !out.contains(v) {
                    out.push(v.clone());
                }
            }
            Term::App(_, args) => args.iter().for_each(|a| a.vars(out)),
        }
    }

    pub fn var_list(&self) -> Vec<Symbol> {
        let mut v = Vec::new();
        self.vars(&mut v);
        v
    }

    pub fn mentions_var(&self, x: &str) -> bool {
        match self {
            Term::Var(v) => v == x,
            Term::App(_, args) => args.iter().any(|a| a.mentions_var(x)),
        }
    }

    pub fn heads(&self, out: &mut BTreeSet<Symbol>) {
        if let Term::App(h, args) = self {
            out.insert(h.clone());
            args.iter().for_each(|a| a.heads(out));
        }
    }

    pub fn subst(&self, map: &dyn Fn(&Symbol) -> Option<Term>) -> Term {
        match self {
            Term::Var(v) => map(v).unwrap_or_else(|| self.clone()),
            Term::App(h, args) => Term::App(h.clone(), args.iter().map(|a| a.subst(map)).collect()),
        }
    }

    pub fn rename_heads(&self, map: &dyn Fn(&Symbol) -> Option<Symbol>) -> Term {
        match self {
            Term::Var(_) => self.clone(),
            Term::App(h, args) => Term::App(
                map(h).unwrap_or_else(|| h.clone()),
                args.iter().map(|a| a.rename_heads(map)).collect(),
            ),
        }
    }

    pub fn at(&self, path: &[usize]) -> Option<&Term> {
        match path.split_first() {
            None => Some(self),
            Some((&i, rest)) => match self {
                Term::App(_, args) => args.get(i)?.at(rest),
                Term::Var(_) => None,
            },
        }
    }

    pub fn replace_at(&self, path: &[usize], new: Term) -> Option<Term> {
        match path.split_first() {
            None => Some(new),
            Some((&i, rest)) => match self {
                Term::App(h, args) if i < args.len() => {
                    let mut args = args.clone();
                    args[i] = args[i].replace_at(rest, new)?;
                    Some(Term::App(h.clone(), args))
                }
                _ => None,
            },
        }
    }

    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, nested: bool) -> fmt::Result {
        match self {
            Term::Var(v) => write!(f, "{v}"),
            Term::App(h, args) if args.is_empty() => write!(f, "{h}"),
            Term::App(h, args) => {
                if nested {
                    write!(f, "(")?;
                }
                write!(f, "{h}")?;
                for a in args {
                    write!(f, " ")?;
                    a.fmt_prec(f, true)?;
                }
                if nested {
                    write!(f, ")")?;
                }
                Ok(())
            }
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, false)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Pattern {
    Var(Symbol),
    Wildcard,
    Ctor(Symbol, Vec<Pattern>),
}

impl Pattern {
    pub fn vars(&self, out: &mut Vec<Symbol>) {
        match self {
            Pattern::Var(v) => out.push(v.clone()),
            Pattern::Wildcard => {}
            Pattern::Ctor(_, ps) => ps.iter().for_each(|p| p.vars(out)),
        }
    }

    pub fn is_irrefutable(&self) -> bool {
        matches!(self, Pattern::Var(_) | Pattern::Wildcard)
    }

    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, nested: bool) -> fmt::Result {
        match self {
            Pattern::Var(v) => write!(f, "{v}"),
            Pattern::Wildcard => write!(f, "_"),
            Pattern::Ctor(c, ps) if ps.is_empty() => write!(f, "{c}"),
            Pattern::Ctor(c, ps) => {
                if nested {
                    write!(f, "(")?;
                }
                write!(f, "{c}")?;
                for p in ps {
                    write!(f, " ")?;
                    p.fmt_prec(f, true)?;
                }
                if nested {
                    write!(f, ")")?;
                }
                Ok(())
            }
        }
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, true)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CtorDecl {
    pub name: Symbol,
    pub args: Vec<Type>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DataDecl {
    pub name: Symbol,
    pub params: Vec<Symbol>,
    pub ctors: Vec<CtorDecl>,
}

impl DataDecl {
    /// Constructor argument types with the datatype's parameters replaced by `args`.
    pub fn ctor_arg_types(&self, ctor: &CtorDecl, args: &[Type]) -> Vec<Type> {
        let map = |v: &Symbol| {
            self.params
                .iter()
                .position(|p| p == v)
                .and_then(|i| args.get(i).cloned())
        };
        ctor.args.iter().map(|t| t.subst(&map)).collect()
    }

    pub fn ctor(&self, name: &str) -> Option<&CtorDecl> {
        self.ctors.iter().find(|c| c.name == name)
    }

    pub fn is_recursive(&self) -> bool {
        fn mentions(t: &Type, name: &str) -> bool {
            match t {
                Type::Var(_) => false,
                Type::Con(n, args) => n == name || args.iter().any(|a| mentions(a, name)),
                Type::Arrow(a, b) => mentions(a, name) || mentions(b, name),
            }
        }
        self.ctors.iter().any(|c| c.args.iter().any(|a| mentions(a, &self.name)))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Equation {
    pub patterns: Vec<Pattern>,
    pub rhs: Term,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FunDecl {
    pub name: Symbol,
    pub signature: TypeScheme,
    pub equations: Vec<Equation>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MethodSig {
    pub name: Symbol,
    pub ty: Type,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClassDecl {
    pub name: Symbol,
    pub param: Symbol,
    pub superclasses: Vec<Symbol>,
    pub methods: Vec<MethodSig>,
}

impl ClassDecl {
    pub fn method(&self, name: &str) -> Option<&MethodSig> {
        self.methods.iter().find(|m| m.name == name)
    }
}

/// `method p1 .. pn = body`; with no params and a bare function body this is an alias.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MethodBinding {
    pub method: Symbol,
    pub params: Vec<Symbol>,
    pub body: Term,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InstanceDecl {
    pub context: Vec<Constraint>,
    pub class: Symbol,
    pub head: Type,
    pub bindings: Vec<MethodBinding>,
}

impl InstanceDecl {
    pub fn head_name(&self) -> &Symbol {
        self.head.head().expect("instance heads are type constructors")
    }

    pub fn binding(&self, method: &str) -> Option<&MethodBinding> {
        self.bindings.iter().find(|b| b.method == method)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LawDecl {
    pub name: Symbol,
    /// Body type is `a1 -> .. -> an -> Equality t`.
    pub signature: TypeScheme,
    pub params: Vec<Symbol>,
    pub lhs: Term,
    pub rhs: Term,
}

impl LawDecl {
    /// The `t` in `Equality t`.
    pub fn equality_type(&self) -> Option<&Type> {
        match self.signature.body.split_arrows().1 {
            Type::Con(n, args) if n == "Equality" && args.len() == 1 => Some(&args[0]),
            _ => None,
        }
    }

    /// Class of the first constraint, which files the law under that class.
    pub fn class(&self) -> Option<&Symbol> {
        self.signature.constraints.first().map(|c| &c.class)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Decl {
    Data(DataDecl),
    Fun(FunDecl),
    Class(ClassDecl),
    Instance(InstanceDecl),
    Law(LawDecl),
}

impl Decl {
    pub fn name(&self) -> Option<&Symbol> {
        match self {
            Decl::Data(d) => Some(&d.name),
            Decl::Fun(f) => Some(&f.name),
            Decl::Class(c) => Some(&c.name),
            Decl::Law(l) => Some(&l.name),
            Decl::Instance(_) => None,
        }
    }
}

/// A parsed program. Equality is structural and ignores positions.
#[derive(Clone, Debug, Default)]
pub struct SourceProgram {
    pub decls: Vec<Decl>,
    pub positions: Vec<Pos>,
}

impl PartialEq for SourceProgram {
    fn eq(&self, other: &Self) -> bool {
        self.decls == other.decls
    }
}

impl Eq for SourceProgram {}

impl SourceProgram {
    pub fn pos(&self, index: usize) -> Pos {
        self.positions.get(index).cloned().unwrap_or_default()
    }

    pub fn extend(&mut self, other: SourceProgram) {
        let n = other.decls.len();
        self.decls.extend(other.decls);
        let mut pos = other.positions;
        pos.resize(n, Pos::default());
        self.positions.extend(pos);
    }

    pub fn datatypes(&self) -> impl Iterator<Item = &DataDecl> {
        self.decls.iter().filter_map(|d| match d {
            Decl::Data(d) => Some(d),
            _ => None,
        })
    }

    pub fn functions(&self) -> impl Iterator<Item = &FunDecl> {
        self.decls.iter().filter_map(|d| match d {
            Decl::Fun(f) => Some(f),
            _ => None,
        })
    }

    pub fn classes(&self) -> impl Iterator<Item = &ClassDecl> {
        self.decls.iter().filter_map(|d| match d {
            Decl::Class(c) => Some(c),
            _ => None,
        })
    }

    pub fn instances(&self) -> impl Iterator<Item = &InstanceDecl> {
        self.decls.iter().filter_map(|d| match d {
            Decl::Instance(i) => Some(i),
            _ => None,
        })
    }

    pub fn laws(&self) -> impl Iterator<Item = &LawDecl> {
        self.decls.iter().filter_map(|d| match d {
            Decl::Law(l) => Some(l),
            _ => None,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flatten_nested_head() {
        let t = Type::con("Maybe", vec![Type::con("ElemA", vec![])]);
        assert_eq!(t.flatten(), "MaybeElemA");
        assert_eq!(t.to_string(), "Maybe ElemA");
    }

    #[test]
    fn arrows_round_trip() {
        let nat = Type::con("Nat", vec![]);
        let t = Type::arrows(vec![nat.clone(), nat.clone()], nat.clone());
        assert_eq!(t.arity(), 2);
        assert_eq!(t.to_string(), "Nat -> Nat -> Nat");
        let hof = Type::arrow(Type::arrow(nat.clone(), nat.clone()), nat);
        assert_eq!(hof.to_string(), "(Nat -> Nat) -> Nat");
    }

    #[test]
    fn replace_at_path() {
        let t = Term::app("plus", vec![Term::var("x"), Term::app("Succ", vec![Term::var("y")])]);
        let r = t.replace_at(&[1, 0], Term::constant("Zero")).unwrap();
        assert_eq!(r.to_string(), "plus x (Succ Zero)");
        assert!(t.replace_at(&[0, 0], Term::var("z")).is_none());
    }
}
