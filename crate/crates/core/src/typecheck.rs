//! Signature-directed type checking, class/superclass resolution and the
//! instance table consumed by law instantiation.
//!
//! Every top-level function and law carries an explicit signature. Bodies are
//! checked by local unification: each constructor, function or method
//! occurrence is instantiated with fresh unknowns which are solved against the
//! signature. Method occurrences are then resolved either against a given
//! constraint on a signature variable or against an instance at a concrete
//! head type.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use thiserror::Error;

use crate::diagnostic::Diagnostic;
use crate::syntax::*;

/// Result type of laws; a pseudo-datatype of arity one.
pub const EQUALITY: &str = "Equality";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TypeError {
    #[error("{pos}: type mismatch in {context}: expected `{expected}`, found `{found}`")]
    TypeMismatch { expected: Type, found: Type, context: String, pos: Pos },
    #[error("{pos}: unbound name `{name}`")]
    UnboundName { name: Symbol, pos: Pos },
    #[error("{pos}: unknown type `{name}`")]
    UnknownType { name: Symbol, pos: Pos },
    #[error("unknown class `{name}`")]
    UnknownClass { name: Symbol, pos: Pos },
    #[error("{pos}: instance {class} {head} is missing method `{method}`")]
    MissingInstanceMethod { class: Symbol, head: Type, method: Symbol, pos: Pos },
    #[error("{pos}: instance {class} {head} requires an instance {superclass} {head}")]
    SuperclassInstanceMissing { class: Symbol, superclass: Symbol, head: Type, pos: Pos },
    #[error("{pos}: superclass cycle through `{class}`")]
    CyclicSuperclass { class: Symbol, pos: Pos },
    #[error("{pos}: no instance {class} {ty}")]
    NoInstance { class: Symbol, ty: Type, pos: Pos },
    #[error("{pos}: {message}")]
    Invalid { message: String, pos: Pos },
}

impl TypeError {
    pub fn pos(&self) -> &Pos {
        match self {
            TypeError::TypeMismatch { pos, .. }
            | TypeError::UnboundName { pos, .. }
            | TypeError::UnknownType { pos, .. }
            | TypeError::UnknownClass { pos, .. }
            | TypeError::MissingInstanceMethod { pos, .. }
            | TypeError::SuperclassInstanceMissing { pos, .. }
            | TypeError::CyclicSuperclass { pos, .. }
            | TypeError::NoInstance { pos, .. }
            | TypeError::Invalid { pos, .. } => pos,
        }
    }

    pub fn diagnostic(&self) -> Diagnostic {
        let full = self.to_string();
        let prefix = format!("{}: ", self.pos());
        let message = full.strip_prefix(&prefix).unwrap_or(&full).to_string();
        Diagnostic::new(self.pos().clone(), message)
    }
}

/// A term annotated with its type and with every name occurrence classified.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TypedTerm {
    pub kind: TermKind,
    pub ty: Type,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TermKind {
    Var(Symbol),
    /// Application of a function-typed local variable.
    VarApp(Symbol, Vec<TypedTerm>),
    Ctor(Symbol, Vec<TypedTerm>),
    /// Call of a top-level function; `type_args` instantiate its quantified
    /// variables in order. Fewer arguments than the arity is a partial application.
    Call { name: Symbol, type_args: Vec<Type>, args: Vec<TypedTerm> },
    /// Class method used at class argument `at`.
    Method { class: Symbol, method: Symbol, at: Type, args: Vec<TypedTerm> },
}

impl TypedTerm {
    /// Drops annotations, producing the first-order term used downstream.
    pub fn erase(&self) -> Term {
        match &self.kind {
            TermKind::Var(v) => Term::Var(v.clone()),
            TermKind::VarApp(h, args)
            | TermKind::Ctor(h, args)
            | TermKind::Call { name: h, args, .. }
            | TermKind::Method { method: h, args, .. } => Term::App(h.clone(), args.iter().map(TypedTerm::erase).collect()),
        }
    }

    pub fn children(&self) -> &[TypedTerm] {
        match &self.kind {
            TermKind::Var(_) => &[],
            TermKind::VarApp(_, a) | TermKind::Ctor(_, a) | TermKind::Call { args: a, .. } | TermKind::Method { args: a, .. } => a,
        }
    }

    pub fn walk(&self, f: &mut dyn FnMut(&TypedTerm)) {
        f(self);
        for c in self.children() {
            c.walk(f);
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TypedEquation {
    pub patterns: Vec<Pattern>,
    pub bindings: Vec<(Symbol, Type)>,
    pub rhs: TypedTerm,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TypedFunction {
    pub decl: FunDecl,
    pub arg_types: Vec<Type>,
    pub ret: Type,
    pub equations: Vec<TypedEquation>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TypedMethod {
    pub method: Symbol,
    /// Method type with the class parameter replaced by the instance head.
    pub ty: Type,
    pub params: Vec<(Symbol, Type)>,
    pub body: TypedTerm,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TypedInstance {
    pub decl: InstanceDecl,
    /// Position among instances of the same class at the same head constructor.
    pub index_at_head: usize,
    pub methods: Vec<TypedMethod>,
    /// Instance (index into `TypedProgram::instances`) chosen for each direct superclass.
    pub superinstances: Vec<(Symbol, usize)>,
}

impl TypedInstance {
    pub fn method(&self, name: &str) -> Option<&TypedMethod> {
        self.methods.iter().find(|m| m.method == name)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TypedLaw {
    pub decl: LawDecl,
    pub param_types: Vec<Type>,
    pub ty: Type,
    pub lhs: TypedTerm,
    pub rhs: TypedTerm,
}

/// Checked program; each list preserves declaration order.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct TypedProgram {
    pub datatypes: Vec<DataDecl>,
    pub functions: Vec<TypedFunction>,
    pub classes: Vec<ClassDecl>,
    pub instances: Vec<TypedInstance>,
    pub laws: Vec<TypedLaw>,
}

impl TypedProgram {
    pub fn datatype(&self, name: &str) -> Option<&DataDecl> {
        self.datatypes.iter().find(|d| d.name == name)
    }

    pub fn function(&self, name: &str) -> Option<&TypedFunction> {
        self.functions.iter().find(|f| f.decl.name == name)
    }

    pub fn law(&self, name: &str) -> Option<&TypedLaw> {
        self.laws.iter().find(|l| l.decl.name == name)
    }

    /// Datatype and declaration of a constructor.
    pub fn constructor(&self, name: &str) -> Option<(&DataDecl, &CtorDecl)> {
        self.datatypes.iter().find_map(|d| d.ctor(name).map(|c| (d, c)))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct ClassTable {
    pub classes: BTreeMap<Symbol, ClassDecl>,
    /// Instances per class, in declaration order.
    pub instances: BTreeMap<Symbol, Vec<InstanceDecl>>,
    /// Index into `TypedProgram::instances` for each entry of `instances`.
    pub instance_ids: BTreeMap<Symbol, Vec<usize>>,
    /// Transitive superclasses (excluding the class itself), in declaration order.
    pub superclosure: BTreeMap<Symbol, Vec<Symbol>>,
    /// Laws filed under the class of their first constraint, in declaration order.
    pub laws: BTreeMap<Symbol, Vec<LawDecl>>,
    /// Owning class of each method.
    pub method_class: BTreeMap<Symbol, Symbol>,
    class_order: Vec<Symbol>,
    law_order: Vec<Symbol>,
}

impl ClassTable {
    fn unknown(name: &str) -> TypeError {
        TypeError::UnknownClass { name: Symbol::new(name), pos: Pos::default() }
    }

    pub fn class(&self, name: &str) -> Result<&ClassDecl, TypeError> {
        self.classes.get(name).ok_or_else(|| Self::unknown(name))
    }

    /// `name` together with all its transitive superclasses.
    pub fn class_and_supers(&self, name: &str) -> Vec<Symbol> {
        let mut v = vec![Symbol::new(name)];
        if let Some(s) = self.superclosure.get(name) {
            v.extend(s.iter().cloned());
        }
        v
    }

    /// Instance of `class` whose head constructor is `head`, preferring position `index`.
    pub fn instance_at(&self, class: &str, head: &str, index: usize) -> Option<usize> {
        let ids = self.instance_ids.get(class)?;
        let decls = self.instances.get(class)?;
        let matching: Vec<usize> = decls
            .iter()
            .zip(ids)
            .filter(|(d, _)| d.head_name() == head)
            .map(|(_, id)| *id)
            .collect();
        matching.get(index).or(matching.last()).copied()
    }
}

/// All instances of a class in declaration order.
pub fn instances_of<'t>(table: &'t ClassTable, class: &str) -> Result<&'t [InstanceDecl], TypeError> {
    table.class(class)?;
    Ok(table.instances.get(class).map(Vec::as_slice).unwrap_or(&[]))
}

/// Laws of every transitive superclass of `class`, deduplicated, in declaration order.
pub fn super_laws(table: &ClassTable, class: &str) -> Result<Vec<LawDecl>, TypeError> {
    table.class(class)?;
    let supers: BTreeSet<&Symbol> = table.superclosure.get(class).map(|s| s.iter().collect()).unwrap_or_default();
    let mut out = Vec::new();
    for name in &table.law_order {
        for (cls, laws) in &table.laws {
            if !supers.contains(cls) {
                continue;
            }
            if let Some(l) = laws.iter().find(|l| &l.name == name) {
                if !out.iter().any(|o: &LawDecl| o.name == l.name) {
                    out.push(l.clone());
                }
            }
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Unification machinery
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Eq)]
enum Ty {
    Rigid(Symbol),
    Con(Symbol, Vec<Ty>),
    Arrow(Box<Ty>, Box<Ty>),
    Meta(usize),
}

impl Ty {
    fn from_type(t: &Type, vars: &HashMap<Symbol, Ty>) -> Ty {
        match t {
            Type::Var(v) => vars.get(v).cloned().unwrap_or_else(|| Ty::Rigid(v.clone())),
            Type::Con(n, args) => Ty::Con(n.clone(), args.iter().map(|a| Ty::from_type(a, vars)).collect()),
            Type::Arrow(a, b) => Ty::Arrow(Box::new(Ty::from_type(a, vars)), Box::new(Ty::from_type(b, vars))),
        }
    }
}

/// Method or constrained-function occurrence awaiting resolution.
struct Obligation {
    class: Symbol,
    ty: Ty,
    name: Symbol,
}

struct Infer<'e> {
    env: &'e Env,
    metas: Vec<Option<Ty>>,
    obligations: Vec<Obligation>,
    pos: Pos,
}

enum PreKind {
    Var(Symbol),
    VarApp(Symbol, Vec<Pre>),
    Ctor(Symbol, Vec<Pre>),
    Call(Symbol, Vec<Ty>, Vec<Pre>),
    Method(Symbol, Symbol, Ty, Vec<Pre>),
}

struct Pre {
    kind: PreKind,
    ty: Ty,
}

impl<'e> Infer<'e> {
    fn new(env: &'e Env, pos: Pos) -> Self {
        Infer { env, metas: Vec::new(), obligations: Vec::new(), pos }
    }

    fn fresh(&mut self) -> Ty {
        self.metas.push(None);
        Ty::Meta(self.metas.len() - 1)
    }

    fn shallow(&self, t: &Ty) -> Ty {
        let mut t = t.clone();
        while let Ty::Meta(m) = t {
            match &self.metas[m] {
                Some(u) => t = u.clone(),
                None => break,
            }
        }
        t
    }

    fn zonk(&self, t: &Ty) -> Ty {
        match self.shallow(t) {
            Ty::Con(n, args) => Ty::Con(n, args.iter().map(|a| self.zonk(a)).collect()),
            Ty::Arrow(a, b) => Ty::Arrow(Box::new(self.zonk(&a)), Box::new(self.zonk(&b))),
            other => other,
        }
    }

    fn to_type(&self, t: &Ty) -> Option<Type> {
        Some(match self.zonk(t) {
            Ty::Rigid(v) => Type::Var(v),
            Ty::Con(n, args) => Type::Con(n, args.iter().map(|a| self.to_type(a)).collect::<Option<_>>()?),
            Ty::Arrow(a, b) => Type::arrow(self.to_type(&a)?, self.to_type(&b)?),
            Ty::Meta(_) => return None,
        })
    }

    fn display(&self, t: &Ty) -> Type {
        fn go(t: &Ty) -> Type {
            match t {
                Ty::Rigid(v) => Type::Var(v.clone()),
                Ty::Con(n, args) => Type::Con(n.clone(), args.iter().map(go).collect()),
                Ty::Arrow(a, b) => Type::arrow(go(a), go(b)),
                Ty::Meta(m) => Type::Var(Symbol::from(format!("t{m}"))),
            }
        }
        go(&self.zonk(t))
    }

    fn occurs(&self, m: usize, t: &Ty) -> bool {
        match self.shallow(t) {
            Ty::Meta(n) => n == m,
            Ty::Con(_, args) => args.iter().any(|a| self.occurs(m, a)),
            Ty::Arrow(a, b) => self.occurs(m, &a) || self.occurs(m, &b),
            Ty::Rigid(_) => false,
        }
    }

    fn unify(&mut self, expected: &Ty, found: &Ty, context: &str) -> Result<(), TypeError> {
        let (a, b) = (self.shallow(expected), self.shallow(found));
        let ok = match (&a, &b) {
            (Ty::Meta(m), Ty::Meta(n)) if m == n => true,
            (Ty::Meta(m), other) | (other, Ty::Meta(m)) => {
                if self.occurs(*m, other) {
                    false
                } else {
                    self.metas[*m] = Some(other.clone());
                    true
                }
            }
            (Ty::Rigid(x), Ty::Rigid(y)) => x == y,
            (Ty::Con(n, xs), Ty::Con(m, ys)) if n == m && xs.len() == ys.len() => {
                for (x, y) in xs.iter().zip(ys) {
                    self.unify(x, y, context)?;
                }
                true
            }
            (Ty::Arrow(a1, b1), Ty::Arrow(a2, b2)) => {
                self.unify(a1, a2, context)?;
                self.unify(b1, b2, context)?;
                true
            }
            _ => false,
        };
        if ok {
            Ok(())
        } else {
            Err(TypeError::TypeMismatch {
                expected: self.display(expected),
                found: self.display(found),
                context: context.to_string(),
                pos: self.pos.clone(),
            })
        }
    }

    fn instantiate(&mut self, quantified: &[Symbol]) -> (HashMap<Symbol, Ty>, Vec<Ty>) {
        let metas: Vec<Ty> = quantified.iter().map(|_| self.fresh()).collect();
        let map = quantified.iter().cloned().zip(metas.iter().cloned()).collect();
        (map, metas)
    }

    fn apply_args(
        &mut self,
        head: &Symbol,
        mut fty: Ty,
        args: &[Term],
        locals: &HashMap<Symbol, Ty>,
    ) -> Result<(Vec<Pre>, Ty), TypeError> {
        let mut out = Vec::new();
        for a in args {
            match self.shallow(&fty) {
                Ty::Arrow(dom, cod) => {
                    out.push(self.check(a, &dom, locals)?);
                    fty = *cod;
                }
                _ => {
                    return Err(TypeError::Invalid {
                        message: format!("`{head}` is applied to too many arguments"),
                        pos: self.pos.clone(),
                    })
                }
            }
        }
        Ok((out, fty))
    }

    fn check(&mut self, term: &Term, expected: &Ty, locals: &HashMap<Symbol, Ty>) -> Result<Pre, TypeError> {
        let pre = self.infer(term, locals)?;
        self.unify(expected, &pre.ty, &format!("`{term}`"))?;
        Ok(pre)
    }

    fn infer(&mut self, term: &Term, locals: &HashMap<Symbol, Ty>) -> Result<Pre, TypeError> {
        let (head, args): (&Symbol, &[Term]) = match term {
            Term::Var(v) => (v, &[]),
            Term::App(h, args) => (h, args.as_slice()),
        };
        if let Some(t) = locals.get(head) {
            if args.is_empty() {
                return Ok(Pre { kind: PreKind::Var(head.clone()), ty: t.clone() });
            }
            let (args, ty) = self.apply_args(head, t.clone(), args, locals)?;
            return Ok(Pre { kind: PreKind::VarApp(head.clone(), args), ty });
        }
        let env = self.env;
        if let Some((data, ctor)) = env.ctors.get(head) {
            if args.len() != ctor.args.len() {
                return Err(TypeError::Invalid {
                    message: format!("constructor `{head}` expects {} arguments, given {}", ctor.args.len(), args.len()),
                    pos: self.pos.clone(),
                });
            }
            let (map, metas) = self.instantiate(&data.params);
            let result = Ty::Con(data.name.clone(), metas);
            let mut out = Vec::new();
            for (a, at) in args.iter().zip(&ctor.args) {
                out.push(self.check(a, &Ty::from_type(at, &map), locals)?);
            }
            return Ok(Pre { kind: PreKind::Ctor(head.clone(), out), ty: result });
        }
        if let Some(scheme) = env.functions.get(head) {
            let (map, metas) = self.instantiate(&scheme.quantified);
            for c in &scheme.constraints {
                let ty = Ty::from_type(&c.arg, &map);
                self.obligations.push(Obligation { class: c.class.clone(), ty, name: head.clone() });
            }
            let fty = Ty::from_type(&scheme.body, &map);
            let (args, ty) = self.apply_args(head, fty, args, locals)?;
            return Ok(Pre { kind: PreKind::Call(head.clone(), metas, args), ty });
        }
        if let Some((class, param, mty)) = env.methods.get(head) {
            let at = self.fresh();
            let map: HashMap<Symbol, Ty> = [(param.clone(), at.clone())].into_iter().collect();
            self.obligations.push(Obligation { class: class.clone(), ty: at.clone(), name: head.clone() });
            let (args, ty) = self.apply_args(head, Ty::from_type(mty, &map), args, locals)?;
            return Ok(Pre { kind: PreKind::Method(class.clone(), head.clone(), at, args), ty });
        }
        Err(TypeError::UnboundName { name: head.clone(), pos: self.pos.clone() })
    }

    fn pattern(&mut self, p: &Pattern, expected: &Ty, binds: &mut Vec<(Symbol, Ty)>) -> Result<(), TypeError> {
        match p {
            Pattern::Var(v) => {
                binds.push((v.clone(), expected.clone()));
                Ok(())
            }
            Pattern::Wildcard => Ok(()),
            Pattern::Ctor(c, args) => {
                let Some((data, ctor)) = self.env.ctors.get(c) else {
                    return Err(TypeError::UnboundName { name: c.clone(), pos: self.pos.clone() });
                };
                if args.len() != ctor.args.len() {
                    return Err(TypeError::Invalid {
                        message: format!("constructor `{c}` expects {} arguments in pattern, given {}", ctor.args.len(), args.len()),
                        pos: self.pos.clone(),
                    });
                }
                let (map, metas) = self.instantiate(&data.params);
                self.unify(expected, &Ty::Con(data.name.clone(), metas), &format!("pattern `{p}`"))?;
                for (a, at) in args.iter().zip(&ctor.args) {
                    self.pattern(a, &Ty::from_type(at, &map), binds)?;
                }
                Ok(())
            }
        }
    }

    /// Resolves method/constraint obligations against `given` constraints on rigid variables.
    fn discharge(&mut self, given: &[Constraint], table: &ClassTable) -> Result<(), TypeError> {
        for ob in std::mem::take(&mut self.obligations) {
            match self.zonk(&ob.ty) {
                Ty::Rigid(v) => {
                    let ok = given.iter().any(|c| {
                        c.arg == Type::Var(v.clone()) && table.class_and_supers(&c.class).contains(&ob.class)
                    });
                    if !ok {
                        return Err(TypeError::UnboundName { name: ob.name, pos: self.pos.clone() });
                    }
                }
                Ty::Con(head, _) => {
                    if table.instance_at(&ob.class, &head, 0).is_none() {
                        return Err(TypeError::NoInstance {
                            class: ob.class,
                            ty: self.display(&ob.ty),
                            pos: self.pos.clone(),
                        });
                    }
                }
                other => {
                    return Err(TypeError::Invalid {
                        message: format!("ambiguous type `{}` for `{}`", self.display(&other), ob.name),
                        pos: self.pos.clone(),
                    })
                }
            }
        }
        Ok(())
    }

    fn finish(&self, pre: Pre) -> Result<TypedTerm, TypeError> {
        let ambiguous = || TypeError::Invalid {
            message: "ambiguous type; add an annotation through the signature".into(),
            pos: self.pos.clone(),
        };
        let ty = self.to_type(&pre.ty).ok_or_else(ambiguous)?;
        let kids = |args: Vec<Pre>| args.into_iter().map(|a| self.finish(a)).collect::<Result<Vec<_>, _>>();
        let kind = match pre.kind {
            PreKind::Var(v) => TermKind::Var(v),
            PreKind::VarApp(h, a) => TermKind::VarApp(h, kids(a)?),
            PreKind::Ctor(h, a) => TermKind::Ctor(h, kids(a)?),
            PreKind::Call(name, targs, a) => TermKind::Call {
                name,
                type_args: targs.iter().map(|t| self.to_type(t)).collect::<Option<_>>().ok_or_else(ambiguous)?,
                args: kids(a)?,
            },
            PreKind::Method(class, method, at, a) => TermKind::Method {
                class,
                method,
                at: self.to_type(&at).ok_or_else(ambiguous)?,
                args: kids(a)?,
            },
        };
        Ok(TypedTerm { kind, ty })
    }
}

struct Env {
    datatypes: HashMap<Symbol, DataDecl>,
    ctors: HashMap<Symbol, (DataDecl, CtorDecl)>,
    functions: HashMap<Symbol, TypeScheme>,
    /// method -> (class, class parameter, method type)
    methods: HashMap<Symbol, (Symbol, Symbol, Type)>,
}

impl Env {
    fn check_type(&self, t: &Type, pos: &Pos, allow_equality: bool) -> Result<(), TypeError> {
        match t {
            Type::Var(_) => Ok(()),
            Type::Arrow(a, b) => {
                self.check_type(a, pos, false)?;
                self.check_type(b, pos, allow_equality)
            }
            Type::Con(n, args) => {
                let arity = if allow_equality && n == EQUALITY {
                    1
                } else {
                    match self.datatypes.get(n) {
                        Some(d) => d.params.len(),
                        None => return Err(TypeError::UnknownType { name: n.clone(), pos: pos.clone() }),
                    }
                };
                if args.len() != arity {
                    return Err(TypeError::Invalid {
                        message: format!("type `{n}` expects {arity} arguments, given {}", args.len()),
                        pos: pos.clone(),
                    });
                }
                args.iter().try_for_each(|a| self.check_type(a, pos, false))
            }
        }
    }
}

fn rigid_map(vars: &[Symbol]) -> HashMap<Symbol, Ty> {
    vars.iter().map(|v| (v.clone(), Ty::Rigid(v.clone()))).collect()
}

/// Checks a parsed program, producing its elaborated form and class table.
pub fn check_program(program: &SourceProgram) -> Result<(TypedProgram, ClassTable), TypeError> {
    crate::frontend::validate_program(program).map_err(|e| TypeError::Invalid {
        message: e.to_string(),
        pos: Pos::default(),
    })?;
    let mut env = Env {
        datatypes: HashMap::new(),
        ctors: HashMap::new(),
        functions: HashMap::new(),
        methods: HashMap::new(),
    };
    let mut table = ClassTable::default();
    let mut out = TypedProgram::default();
    let pos_of = |i: usize| program.pos(i);

    // Pass 1: collect names.
    let mut class_pos = HashMap::new();
    for (i, d) in program.decls.iter().enumerate() {
        match d {
            Decl::Data(d) => {
                env.datatypes.insert(d.name.clone(), d.clone());
                for c in &d.ctors {
                    env.ctors.insert(c.name.clone(), (d.clone(), c.clone()));
                }
                out.datatypes.push(d.clone());
            }
            Decl::Fun(f) => {
                env.functions.insert(f.name.clone(), f.signature.clone());
            }
            Decl::Class(c) => {
                for m in &c.methods {
                    env.methods.insert(m.name.clone(), (c.name.clone(), c.param.clone(), m.ty.clone()));
                    table.method_class.insert(m.name.clone(), c.name.clone());
                }
                table.classes.insert(c.name.clone(), c.clone());
                table.class_order.push(c.name.clone());
                class_pos.insert(c.name.clone(), pos_of(i));
                out.classes.push(c.clone());
            }
            Decl::Law(l) => table.law_order.push(l.name.clone()),
            Decl::Instance(_) => {}
        }
    }

    // Pass 2: well-formed types and class hierarchy.
    for (i, d) in program.decls.iter().enumerate() {
        let pos = pos_of(i);
        match d {
            Decl::Data(d) => {
                for c in &d.ctors {
                    c.args.iter().try_for_each(|a| env.check_type(a, &pos, false))?;
                }
            }
            Decl::Fun(f) => check_scheme(&env, &table, &f.signature, &pos, false)?,
            Decl::Law(l) => check_scheme(&env, &table, &l.signature, &pos, true)?,
            Decl::Class(c) => {
                for s in &c.superclasses {
                    if !table.classes.contains_key(s) {
                        return Err(TypeError::UnknownClass { name: s.clone(), pos });
                    }
                }
                for m in &c.methods {
                    env.check_type(&m.ty, &pos, false)?;
                }
            }
            Decl::Instance(_) => {}
        }
    }
    for name in table.class_order.clone() {
        let closure = superclosure(&table, &name).map_err(|class| TypeError::CyclicSuperclass {
            pos: class_pos.get(&class).cloned().unwrap_or_default(),
            class,
        })?;
        table.superclosure.insert(name, closure);
    }

    // Pass 3: instances are indexed before bodies so method resolution can see them.
    let mut head_counts: HashMap<(Symbol, Symbol), usize> = HashMap::new();
    let mut instance_positions = Vec::new();
    for (i, d) in program.decls.iter().enumerate() {
        let Decl::Instance(inst) = d else { continue };
        let pos = pos_of(i);
        let class = table.class(&inst.class).map_err(|_| TypeError::UnknownClass { name: inst.class.clone(), pos: pos.clone() })?.clone();
        env.check_type(&inst.head, &pos, false)?;
        for c in &inst.context {
            if !table.classes.contains_key(&c.class) {
                return Err(TypeError::UnknownClass { name: c.class.clone(), pos: pos.clone() });
            }
        }
        for m in &class.methods {
            if inst.binding(&m.name).is_none() {
                return Err(TypeError::MissingInstanceMethod {
                    class: class.name.clone(),
                    head: inst.head.clone(),
                    method: m.name.clone(),
                    pos,
                });
            }
        }
        if let Some(b) = inst.bindings.iter().find(|b| class.method(&b.method).is_none()) {
            return Err(TypeError::Invalid {
                message: format!("`{}` is not a method of class `{}`", b.method, class.name),
                pos,
            });
        }
        let key = (inst.class.clone(), inst.head_name().clone());
        let index_at_head = *head_counts.entry(key.clone()).and_modify(|n| *n += 1).or_insert(0);
        let id = out.instances.len();
        table.instances.entry(inst.class.clone()).or_default().push(inst.clone());
        table.instance_ids.entry(inst.class.clone()).or_default().push(id);
        out.instances.push(TypedInstance {
            decl: inst.clone(),
            index_at_head,
            methods: Vec::new(),
            superinstances: Vec::new(),
        });
        instance_positions.push(pos);
    }

    // Superclass instances: the k-th instance of C at T pairs with the k-th of S at T.
    for (id, pos) in instance_positions.iter().enumerate() {
        let inst = out.instances[id].decl.clone();
        let class = table.classes[&inst.class].clone();
        let mut supers = Vec::new();
        for s in &class.superclasses {
            let Some(sid) = table.instance_at(s, inst.head_name(), out.instances[id].index_at_head) else {
                return Err(TypeError::SuperclassInstanceMissing {
                    class: inst.class.clone(),
                    superclass: s.clone(),
                    head: inst.head.clone(),
                    pos: pos.clone(),
                });
            };
            let sup = &out.instances[sid].decl;
            // Every context constraint of the superclass instance must follow from ours.
            for c in &sup.context {
                let Type::Var(v) = &c.arg else { continue };
                let Some(k) = head_var_index(&sup.head, v) else { continue };
                let Some(Type::Var(ours)) = head_var(&inst.head, k) else { continue };
                let entailed = inst.context.iter().any(|o| {
                    o.arg == Type::Var(ours.clone()) && table.class_and_supers(&o.class).contains(&c.class)
                });
                if !entailed {
                    return Err(TypeError::SuperclassInstanceMissing {
                        class: inst.class.clone(),
                        superclass: s.clone(),
                        head: inst.head.clone(),
                        pos: pos.clone(),
                    });
                }
            }
            supers.push((s.clone(), sid));
        }
        out.instances[id].superinstances = supers;
    }

    // Pass 4: bodies.
    for (i, d) in program.decls.iter().enumerate() {
        let pos = pos_of(i);
        match d {
            Decl::Fun(f) => out.functions.push(check_function(&env, &table, f, pos)?),
            Decl::Law(l) => out.laws.push(check_law(&env, &table, l, pos)?),
            _ => {}
        }
    }
    for (id, pos) in instance_positions.iter().enumerate() {
        let inst = out.instances[id].decl.clone();
        let class = table.classes[&inst.class].clone();
        let mut methods = Vec::new();
        for m in &class.methods {
            let b = inst.binding(&m.name).expect("coverage checked above");
            methods.push(check_binding(&env, &table, &inst, &class, m, b, pos.clone())?);
        }
        out.instances[id].methods = methods;
    }

    for l in &out.laws {
        if let Some(class) = l.decl.class() {
            table.laws.entry(class.clone()).or_default().push(l.decl.clone());
        }
    }
    Ok((out, table))
}

fn head_var_index(head: &Type, v: &Symbol) -> Option<usize> {
    match head {
        Type::Con(_, args) => args.iter().position(|a| a == &Type::Var(v.clone())),
        _ => None,
    }
}

fn head_var(head: &Type, k: usize) -> Option<&Type> {
    match head {
        Type::Con(_, args) => args.get(k),
        _ => None,
    }
}

/// Transitive superclasses in declaration order; `Err(class)` on a cycle.
fn superclosure(table: &ClassTable, root: &Symbol) -> Result<Vec<Symbol>, Symbol> {
    let mut seen = BTreeSet::new();
    let mut stack = vec![(root.clone(), vec![root.clone()])];
    while let Some((c, path)) = stack.pop() {
        for s in &table.classes[&c].superclasses {
            if path.contains(s) {
                return Err(s.clone());
            }
            if seen.insert(s.clone()) {
                let mut p = path.clone();
                p.push(s.clone());
                stack.push((s.clone(), p));
            } else if s == root {
                return Err(s.clone());
            }
        }
    }
    if seen.contains(root) {
        return Err(root.clone());
    }
    Ok(table.class_order.iter().filter(|c| seen.contains(*c)).cloned().collect())
}

fn check_scheme(env: &Env, table: &ClassTable, s: &TypeScheme, pos: &Pos, law: bool) -> Result<(), TypeError> {
    for c in &s.constraints {
        if !table.classes.contains_key(&c.class) {
            return Err(TypeError::UnknownClass { name: c.class.clone(), pos: pos.clone() });
        }
        if !matches!(c.arg, Type::Var(_)) {
            return Err(TypeError::Invalid {
                message: format!("constraint `{c}` must apply to a type variable"),
                pos: pos.clone(),
            });
        }
    }
    let (args, ret) = s.body.split_arrows();
    for a in args {
        env.check_type(a, pos, false)?;
    }
    if law {
        match ret {
            Type::Con(n, a) if n == EQUALITY && a.len() == 1 => env.check_type(&a[0], pos, false),
            _ => Err(TypeError::Invalid { message: "law result must be `Equality t`".into(), pos: pos.clone() }),
        }
    } else {
        env.check_type(ret, pos, false)
    }
}

fn check_function(env: &Env, table: &ClassTable, f: &FunDecl, pos: Pos) -> Result<TypedFunction, TypeError> {
    let rigid = rigid_map(&f.signature.quantified);
    let (args, ret) = f.signature.body.split_arrows();
    let arg_types: Vec<Type> = args.into_iter().cloned().collect();
    let ret = ret.clone();
    let mut equations = Vec::new();
    for e in &f.equations {
        let mut inf = Infer::new(env, pos.clone());
        let mut binds = Vec::new();
        for (p, t) in e.patterns.iter().zip(&arg_types) {
            inf.pattern(p, &Ty::from_type(t, &rigid), &mut binds)?;
        }
        let locals: HashMap<Symbol, Ty> = binds.iter().cloned().collect();
        let rhs = inf.check(&e.rhs, &Ty::from_type(&ret, &rigid), &locals)?;
        inf.discharge(&f.signature.constraints, table)?;
        let bindings = binds
            .iter()
            .map(|(v, t)| inf.to_type(t).map(|t| (v.clone(), t)))
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| TypeError::Invalid { message: "ambiguous pattern type".into(), pos: pos.clone() })?;
        equations.push(TypedEquation { patterns: e.patterns.clone(), bindings, rhs: inf.finish(rhs)? });
    }
    Ok(TypedFunction { decl: f.clone(), arg_types, ret, equations })
}

fn check_law(env: &Env, table: &ClassTable, l: &LawDecl, pos: Pos) -> Result<TypedLaw, TypeError> {
    let rigid = rigid_map(&l.signature.quantified);
    let (args, _) = l.signature.body.split_arrows();
    let param_types: Vec<Type> = args.into_iter().cloned().collect();
    let ty = l.equality_type().cloned().ok_or_else(|| TypeError::Invalid {
        message: "law result must be `Equality t`".into(),
        pos: pos.clone(),
    })?;
    let mut inf = Infer::new(env, pos.clone());
    let locals: HashMap<Symbol, Ty> = l
        .params
        .iter()
        .cloned()
        .zip(param_types.iter().map(|t| Ty::from_type(t, &rigid)))
        .collect();
    let expected = Ty::from_type(&ty, &rigid);
    let lhs = inf.check(&l.lhs, &expected, &locals)?;
    let rhs = inf.check(&l.rhs, &expected, &locals)?;
    inf.discharge(&l.signature.constraints, table)?;
    Ok(TypedLaw {
        decl: l.clone(),
        param_types,
        ty,
        lhs: inf.finish(lhs)?,
        rhs: inf.finish(rhs)?,
    })
}

fn check_binding(
    env: &Env,
    table: &ClassTable,
    inst: &InstanceDecl,
    class: &ClassDecl,
    method: &MethodSig,
    b: &MethodBinding,
    pos: Pos,
) -> Result<TypedMethod, TypeError> {
    let ty = method.ty.subst(&|v| (v == &class.param).then(|| inst.head.clone()));
    let mut head_vars = Vec::new();
    inst.head.vars_in_order(&mut head_vars);
    let rigid = rigid_map(&head_vars);
    let (args, _) = ty.split_arrows();
    if b.params.len() > args.len() {
        return Err(TypeError::Invalid {
            message: format!("method `{}` takes {} arguments, binding has {}", b.method, args.len(), b.params.len()),
            pos,
        });
    }
    let params: Vec<(Symbol, Type)> = b.params.iter().cloned().zip(args.iter().map(|t| (*t).clone())).collect();
    let mut rest = &ty;
    for _ in 0..b.params.len() {
        if let Type::Arrow(_, cod) = rest {
            rest = cod;
        }
    }
    let mut inf = Infer::new(env, pos.clone());
    let locals: HashMap<Symbol, Ty> = params.iter().map(|(v, t)| (v.clone(), Ty::from_type(t, &rigid))).collect();
    let body = inf.check(&b.body, &Ty::from_type(rest, &rigid), &locals)?;
    inf.discharge(&inst.context, table)?;
    Ok(TypedMethod { method: b.method.clone(), ty, params, body: inf.finish(body)? })
}
