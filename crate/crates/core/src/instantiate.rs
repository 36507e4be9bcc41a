//! Turns each law and instance combination into a monomorphic proof task.
//!
//! Method occurrences are replaced by top-level functions with mangled names
//! (`MonoidNatmappend`), polymorphic functions are specialised at the types
//! they are used at (`append_ElemA`), and type variables that must stay
//! abstract become dummy sorts carrying uninterpreted operations and assumed
//! laws.

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};
use std::fmt;

use thiserror::Error;

use crate::syntax::{DataDecl, FunDecl, Pattern, Symbol, Term, Type, TypeScheme};
use crate::typecheck::{super_laws, ClassTable, TermKind, TypedLaw, TypedProgram, TypedTerm};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InstantiateError {
    #[error("no instance of `{class}` at `{ty}` provides `{method}`")]
    NoMatchingInstance { class: Symbol, method: Symbol, ty: Type },
    #[error("method `{method}` cannot be resolved at `{ty}`")]
    UnresolvableMethod { method: Symbol, ty: Type },
    #[error("unknown law `{0}`")]
    UnknownLaw(Symbol),
}

/// A universally quantified equation between monomorphic terms.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Equation {
    pub name: Symbol,
    pub universals: Vec<(Symbol, Type)>,
    pub lhs: Term,
    pub rhs: Term,
}

impl fmt::Display for Equation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} = {}", self.lhs, self.rhs)
    }
}

impl Default for Equation {
    fn default() -> Self {
        let unit = Term::App(Symbol::new("true"), vec![]);
        Equation { name: Symbol::new(""), universals: vec![], lhs: unit.clone(), rhs: unit }
    }
}

impl Equation {
    pub fn universal_type(&self, v: &str) -> Option<&Type> {
        self.universals.iter().find(|(x, _)| x == v).map(|(_, t)| t)
    }
}

/// Abstract type standing in for a type variable that must stay abstract.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DummySort {
    pub name: Symbol,
    /// Uninterpreted operations (no defining equations).
    pub assumed_ops: Vec<(Symbol, Type)>,
    pub assumed_laws: Vec<Equation>,
}

/// The instance an obligation was instantiated at.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InstanceRef {
    /// Index into `TypedProgram::instances`.
    pub id: usize,
    pub class: Symbol,
    pub head: Type,
    pub index_at_head: usize,
}

impl InstanceRef {
    /// Human label such as `Monoid@Nat#2`.
    pub fn label(&self) -> String {
        format!("{}@{}#{}", self.class, self.head, self.index_at_head + 1)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProofTask {
    pub id: String,
    pub law: Symbol,
    pub instances: Vec<InstanceRef>,
    pub goal: Equation,
    /// Superclass laws at concrete heads followed by laws assumed over dummy sorts.
    pub axioms: Vec<Equation>,
    pub definitions: Vec<FunDecl>,
    pub datatypes: Vec<DataDecl>,
    pub dummy_sorts: Vec<DummySort>,
    pub higher_order: bool,
    pub notes: Vec<String>,
}

impl ProofTask {
    pub fn instance_label(&self) -> String {
        if self.instances.is_empty() {
            "-".to_string()
        } else {
            self.instances.iter().map(InstanceRef::label).collect::<Vec<_>>().join(",")
        }
    }

    pub fn definition(&self, name: &str) -> Option<&FunDecl> {
        self.definitions.iter().find(|f| f.name == name)
    }

    pub fn is_dummy_sort(&self, name: &str) -> bool {
        self.dummy_sorts.iter().any(|d| d.name == name)
    }

    pub fn assumed_op(&self, name: &str) -> Option<&Type> {
        self.dummy_sorts.iter().flat_map(|d| &d.assumed_ops).find(|(n, _)| n == name).map(|(_, t)| t)
    }
}

/// `className ++ flattened head ++ (index + 1 when index > 0) ++ methodName`.
pub fn mangle(class: &str, head: &Type, index: usize, method: &str) -> String {
    format!("{}{}", instance_prefix(class, head, index), method)
}

fn instance_prefix(class: &str, head: &Type, index: usize) -> String {
    let suffix = if index > 0 { (index + 1).to_string() } else { String::new() };
    format!("{class}{}{suffix}", head.flatten())
}

fn specialised_name(name: &str, targs: &[Type]) -> Symbol {
    if targs.is_empty() {
        return Symbol::new(name);
    }
    let parts: Vec<String> = targs.iter().map(Type::flatten).collect();
    Symbol::from(format!("{name}_{}", parts.join("_")))
}

type Subst = HashMap<Symbol, Type>;

fn apply(t: &Type, s: &Subst) -> Type {
    t.subst(&|v| s.get(v).cloned())
}

/// One-way matching of an instance head against a concrete type.
fn match_type(pattern: &Type, t: &Type, out: &mut Subst) -> bool {
    match (pattern, t) {
        (Type::Var(v), _) => match out.get(v) {
            Some(prev) => prev == t,
            None => {
                out.insert(v.clone(), t.clone());
                true
            }
        },
        (Type::Con(a, xs), Type::Con(b, ys)) => {
            a == b && xs.len() == ys.len() && xs.iter().zip(ys).all(|(x, y)| match_type(x, y, out))
        }
        (Type::Arrow(a1, b1), Type::Arrow(a2, b2)) => match_type(a1, a2, out) && match_type(b1, b2, out),
        _ => false,
    }
}

enum Pending {
    Fun { orig: Symbol, targs: Vec<Type>, name: Symbol },
    Method { instance: usize, method: Symbol, at: Type, name: Symbol },
}

struct DummyInfo {
    sort: DummySort,
    classes: Vec<Symbol>,
}

/// Per-task state: requested specialisations, dummy sorts, preferred instances.
struct Specializer<'p> {
    program: &'p TypedProgram,
    table: &'p ClassTable,
    dummies: Vec<DummyInfo>,
    preferred: Vec<(Symbol, Type, usize)>,
    requested: HashSet<Symbol>,
    queue: VecDeque<Pending>,
    definitions: Vec<FunDecl>,
}

impl<'p> Specializer<'p> {
    fn new(program: &'p TypedProgram, table: &'p ClassTable) -> Self {
        Specializer {
            program,
            table,
            dummies: Vec::new(),
            preferred: Vec::new(),
            requested: HashSet::new(),
            queue: VecDeque::new(),
            definitions: Vec::new(),
        }
    }

    fn new_dummy(&mut self, var: &Symbol) -> Type {
        let mut cap = var.to_string();
        if let Some(first) = cap.get(0..1) {
            cap = first.to_uppercase() + &cap[1..];
        }
        let base = format!("Elem{cap}");
        let taken = |n: &str| self.program.datatype(n).is_some() || self.dummies.iter().any(|d| d.sort.name == n);
        let mut name = base.clone();
        let mut k = 2;
        while taken(&name) {
            name = format!("{base}{k}");
            k += 1;
        }
        self.dummies.push(DummyInfo {
            sort: DummySort { name: Symbol::from(name.clone()), assumed_ops: vec![], assumed_laws: vec![] },
            classes: vec![],
        });
        Type::con(&name, vec![])
    }

    /// Records that the dummy sort `sort` is assumed to be an instance of `class` (and its superclasses).
    fn assume(&mut self, sort: &Type, class: &Symbol) {
        let Some(i) = self.dummy_index(sort) else { return };
        for c in self.table.class_and_supers(class) {
            if self.dummies[i].classes.contains(&c) {
                continue;
            }
            let decl = &self.table.classes[&c];
            for m in &decl.methods {
                let ty = m.ty.subst(&|v| (v == &decl.param).then(|| sort.clone()));
                let op = op_name(&m.name, &self.dummies[i].sort.name);
                self.dummies[i].sort.assumed_ops.push((op, ty));
            }
            self.dummies[i].classes.push(c);
        }
    }

    fn dummy_index(&self, t: &Type) -> Option<usize> {
        match t {
            Type::Con(n, args) if args.is_empty() => self.dummies.iter().position(|d| &d.sort.name == n),
            _ => None,
        }
    }

    fn prefer(&mut self, instance: usize, at: &Type) {
        let inst = &self.program.instances[instance];
        if self.preferred.iter().any(|(c, t, _)| c == &inst.decl.class && t == at) {
            return;
        }
        self.preferred.push((inst.decl.class.clone(), at.clone(), instance));
        for (_, sid) in inst.superinstances.clone() {
            self.prefer(sid, at);
        }
    }

    fn resolve(&self, class: &Symbol, at: &Type) -> Option<usize> {
        if let Some((_, _, id)) = self.preferred.iter().find(|(c, t, _)| c == class && t == at) {
            return Some(*id);
        }
        let head = at.head()?;
        let decls = self.table.instances.get(class)?;
        let ids = &self.table.instance_ids[class];
        decls.iter().zip(ids).find(|(d, _)| d.head_name() == head && match_type(&d.head, at, &mut Subst::new())).map(|(_, id)| *id)
    }

    fn method(&mut self, class: &Symbol, method: &Symbol, at: &Type) -> Result<Symbol, InstantiateError> {
        if let Some(i) = self.dummy_index(at) {
            let d = &self.dummies[i];
            if !d.classes.contains(class) {
                return Err(InstantiateError::UnresolvableMethod { method: method.clone(), ty: at.clone() });
            }
            return Ok(op_name(method, &d.sort.name));
        }
        let Some(id) = self.resolve(class, at) else {
            return Err(InstantiateError::NoMatchingInstance { class: class.clone(), method: method.clone(), ty: at.clone() });
        };
        let inst = &self.program.instances[id];
        let name = Symbol::from(mangle(class, at, inst.index_at_head, method));
        if self.requested.insert(name.clone()) {
            self.queue.push_back(Pending::Method { instance: id, method: method.clone(), at: at.clone(), name: name.clone() });
        }
        Ok(name)
    }

    fn function(&mut self, orig: &Symbol, targs: Vec<Type>) -> Symbol {
        let name = specialised_name(orig, &targs);
        if self.requested.insert(name.clone()) {
            self.queue.push_back(Pending::Fun { orig: orig.clone(), targs, name: name.clone() });
        }
        name
    }

    fn term(&mut self, t: &TypedTerm, s: &Subst) -> Result<Term, InstantiateError> {
        let args = |a: &[TypedTerm], sp: &mut Self| a.iter().map(|x| sp.term(x, s)).collect::<Result<Vec<_>, _>>();
        Ok(match &t.kind {
            TermKind::Var(v) => Term::Var(v.clone()),
            TermKind::VarApp(h, a) | TermKind::Ctor(h, a) => Term::App(h.clone(), args(a, self)?),
            TermKind::Call { name, type_args, args: a } => {
                let targs = type_args.iter().map(|x| apply(x, s)).collect();
                let n = self.function(name, targs);
                Term::App(n, args(a, self)?)
            }
            TermKind::Method { class, method, at, args: a } => {
                let n = self.method(class, method, &apply(at, s))?;
                Term::App(n, args(a, self)?)
            }
        })
    }

    fn law(&mut self, law: &TypedLaw, s: &Subst, name: Symbol) -> Result<Equation, InstantiateError> {
        Ok(Equation {
            name,
            universals: law.decl.params.iter().cloned().zip(law.param_types.iter().map(|t| apply(t, s))).collect(),
            lhs: self.term(&law.lhs, s)?,
            rhs: self.term(&law.rhs, s)?,
        })
    }

    /// Generates every requested definition, including those requested along the way.
    fn flush(&mut self) -> Result<(), InstantiateError> {
        while let Some(p) = self.queue.pop_front() {
            let def = match p {
                Pending::Fun { orig, targs, name } => {
                    let f = self.program.function(&orig).expect("typechecked call");
                    let s: Subst = f.decl.signature.quantified.iter().cloned().zip(targs).collect();
                    let mut equations = Vec::new();
                    for e in &f.equations {
                        equations.push(crate::syntax::Equation { patterns: e.patterns.clone(), rhs: self.term(&e.rhs, &s)? });
                    }
                    FunDecl { name, signature: TypeScheme::mono(apply(&f.decl.signature.body, &s)), equations }
                }
                Pending::Method { instance, method, at, name } => {
                    let inst = &self.program.instances[instance];
                    let mut s = Subst::new();
                    match_type(&inst.decl.head, &at, &mut s);
                    let m = inst.method(&method).expect("instances cover every method");
                    let ty = apply(&m.ty, &s);
                    let arg_count = ty.arity();
                    let mut params: Vec<Symbol> = m.params.iter().map(|(p, _)| p.clone()).collect();
                    let mut extra = Vec::new();
                    let mut letters = (b'a'..=b'z').map(|c| (c as char).to_string()).chain((1..).map(|i| format!("x{i}")));
                    while params.len() < arg_count {
                        let l = Symbol::from(letters.next().unwrap());
                        if !params.contains(&l) {
                            params.push(l.clone());
                            extra.push(Term::Var(l));
                        }
                    }
                    let mut body = self.term(&m.body, &s)?;
                    // Eta-expand alias bindings such as `mappend = plus`.
                    if !extra.is_empty() {
                        body = match body {
                            Term::App(h, mut a) => {
                                a.extend(extra);
                                Term::App(h, a)
                            }
                            Term::Var(v) => Term::App(v, extra),
                        };
                    }
                    FunDecl {
                        name,
                        signature: TypeScheme::mono(ty),
                        equations: vec![crate::syntax::Equation {
                            patterns: params.into_iter().map(Pattern::Var).collect(),
                            rhs: body,
                        }],
                    }
                }
            };
            self.definitions.push(def);
        }
        Ok(())
    }
}

fn op_name(method: &str, sort: &str) -> Symbol {
    Symbol::from(format!("{method}_{sort}"))
}

fn law_type_vars(law: &TypedLaw) -> Vec<Symbol> {
    let mut vars = Vec::new();
    law.decl.signature.body.vars_in_order(&mut vars);
    vars
}

/// Constrained variables of a law with the class chosen to enumerate instances.
fn constrained_vars(law: &TypedLaw) -> Vec<(Symbol, Symbol)> {
    let mut out: Vec<(Symbol, Symbol)> = Vec::new();
    for c in &law.decl.signature.constraints {
        if let Type::Var(v) = &c.arg {
            if !out.iter().any(|(x, _)| x == v) {
                out.push((v.clone(), c.class.clone()));
            }
        }
    }
    out
}

/// Instance tuples for a law's constrained variables, in lexicographic instance order.
fn instance_tuples(law: &TypedLaw, table: &ClassTable) -> Vec<Vec<usize>> {
    let mut tuples = vec![vec![]];
    for (_, class) in constrained_vars(law) {
        let ids = table.instance_ids.get(&class).cloned().unwrap_or_default();
        tuples = tuples
            .into_iter()
            .flat_map(|t| {
                ids.iter().map(move |id| {
                    let mut t = t.clone();
                    t.push(*id);
                    t
                })
            })
            .collect();
    }
    tuples
}

/// One task per law and compatible instance tuple, in law order then instance order.
pub fn build_tasks(program: &TypedProgram, table: &ClassTable) -> Result<Vec<ProofTask>, InstantiateError> {
    let mut tasks = Vec::new();
    for law in &program.laws {
        for tuple in instance_tuples(law, table) {
            tasks.push(build_task(program, table, law, &tuple)?);
        }
    }
    Ok(tasks)
}

/// Builds the task for `law` at the given instances (indices into `program.instances`),
/// one per constrained variable in constraint order.
pub fn build_task(program: &TypedProgram, table: &ClassTable, law: &TypedLaw, tuple: &[usize]) -> Result<ProofTask, InstantiateError> {
    let mut sp = Specializer::new(program, table);
    let mut s = Subst::new();
    let mut refs = Vec::new();
    let mut id_parts = vec![law.decl.name.to_string()];
    for ((var, _), &iid) in constrained_vars(law).iter().zip(tuple) {
        let inst = &program.instances[iid];
        let mut head_vars = Vec::new();
        inst.decl.head.vars_in_order(&mut head_vars);
        let mut hs = Subst::new();
        for hv in &head_vars {
            let d = sp.new_dummy(hv);
            for c in inst.decl.context.iter().filter(|c| c.arg == Type::Var(hv.clone())) {
                sp.assume(&d, &c.class);
            }
            hs.insert(hv.clone(), d);
        }
        let head = apply(&inst.decl.head, &hs);
        sp.prefer(iid, &head);
        id_parts.push(instance_prefix(&inst.decl.class, &head, inst.index_at_head));
        refs.push(InstanceRef {
            id: iid,
            class: inst.decl.class.clone(),
            head: inst.decl.head.clone(),
            index_at_head: inst.index_at_head,
        });
        s.insert(var.clone(), head);
    }
    for v in law_type_vars(law) {
        if let std::collections::hash_map::Entry::Vacant(e) = s.entry(v) {
            let d = sp.new_dummy(e.key());
            e.insert(d);
        }
    }
    let id = id_parts.join("_");
    let goal = sp.law(law, &s, Symbol::from(id.clone()))?;
    let mut axioms = Vec::new();
    let mut notes = Vec::new();

    // Superclass laws hold at the concrete head being verified.
    for ((var, _), &iid) in constrained_vars(law).iter().zip(tuple) {
        let class = &program.instances[iid].decl.class;
        let at = s[var].clone();
        for l in super_laws(table, class).unwrap_or_default() {
            let typed = program.law(&l.name).expect("filed laws are typed");
            match instantiate_single(&mut sp, typed, &at, format!("{}@{}", l.name, at.flatten())) {
                Some(Ok(eq)) => axioms.push(eq),
                Some(Err(e)) => notes.push(format!("superclass law {} skipped: {e}", l.name)),
                None => notes.push(format!("superclass law {} skipped: not a single-variable law", l.name)),
            }
        }
    }

    // Laws assumed over dummy sorts standing for constrained instance variables.
    for i in 0..sp.dummies.len() {
        let sort = Type::con(&sp.dummies[i].sort.name, vec![]);
        for class in sp.dummies[i].classes.clone() {
            for l in table.laws.get(&class).cloned().unwrap_or_default() {
                let typed = program.law(&l.name).expect("filed laws are typed");
                match instantiate_single(&mut sp, typed, &sort, format!("{}@{}", l.name, sort.flatten())) {
                    Some(Ok(eq)) => {
                        sp.dummies[i].sort.assumed_laws.push(eq.clone());
                        axioms.push(eq);
                    }
                    Some(Err(e)) => notes.push(format!("assumed law {} skipped: {e}", l.name)),
                    None => notes.push(format!("assumed law {} skipped: not a single-variable law", l.name)),
                }
            }
        }
    }
    sp.flush()?;

    let dummy_sorts: Vec<DummySort> = sp.dummies.into_iter().map(|d| d.sort).collect();
    let mut task = ProofTask {
        id,
        law: law.decl.name.clone(),
        instances: refs,
        goal,
        axioms,
        definitions: sp.definitions,
        datatypes: vec![],
        dummy_sorts,
        higher_order: false,
        notes,
    };
    // Higher-order assumptions are dropped rather than poisoning a first-order goal.
    let (ho_axioms, fo_axioms): (Vec<_>, Vec<_>) = std::mem::take(&mut task.axioms)
        .into_iter()
        .partition(|a| equation_is_higher_order(a, &task));
    for a in &ho_axioms {
        task.notes.push(format!("higher-order axiom {} dropped", a.name));
        for d in &mut task.dummy_sorts {
            d.assumed_laws.retain(|l| l.name != a.name);
        }
    }
    task.axioms = fo_axioms;
    task.definitions = reachable_definitions(&task);
    task.datatypes = reachable_datatypes(program, &task);
    task.higher_order = is_higher_order(&task);
    Ok(task)
}

/// Instantiates a single-constraint law at `at`; `None` when the law has another shape.
fn instantiate_single(
    sp: &mut Specializer,
    law: &TypedLaw,
    at: &Type,
    name: String,
) -> Option<Result<Equation, InstantiateError>> {
    let vars = law_type_vars(law);
    let cv = constrained_vars(law);
    if cv.len() != 1 || vars.len() != 1 {
        return None;
    }
    let s: Subst = [(cv[0].0.clone(), at.clone())].into_iter().collect();
    // Keep the request queue clean if the law turns out not to resolve.
    let saved = (sp.requested.clone(), sp.queue.len());
    let r = sp.law(law, &s, Symbol::from(name));
    if r.is_err() {
        sp.requested = saved.0;
        sp.queue.truncate(saved.1);
    }
    Some(r)
}

/// Instantiates `law_name` with explicit type bindings, resolving methods through
/// instances of the program; returns the equation and the definitions it needs.
pub fn instantiate_law(
    program: &TypedProgram,
    table: &ClassTable,
    law_name: &str,
    binding: &[(Symbol, Type)],
) -> Result<(Equation, Vec<FunDecl>), InstantiateError> {
    let law = program.law(law_name).ok_or_else(|| InstantiateError::UnknownLaw(Symbol::new(law_name)))?;
    let mut sp = Specializer::new(program, table);
    let s: Subst = binding.iter().cloned().collect();
    let eq = sp.law(law, &s, law.decl.name.clone())?;
    sp.flush()?;
    Ok((eq, sp.definitions))
}

fn heads_of(t: &Term, out: &mut BTreeSet<Symbol>) {
    t.heads(out);
}

/// Definitions transitively called from the goal and axioms, in generation order.
fn reachable_definitions(task: &ProofTask) -> Vec<FunDecl> {
    let mut seen = BTreeSet::new();
    let mut todo: Vec<Symbol> = Vec::new();
    let mut roots = BTreeSet::new();
    for e in std::iter::once(&task.goal).chain(&task.axioms) {
        heads_of(&e.lhs, &mut roots);
        heads_of(&e.rhs, &mut roots);
    }
    todo.extend(roots);
    while let Some(n) = todo.pop() {
        if !seen.insert(n.clone()) {
            continue;
        }
        if let Some(f) = task.definition(&n) {
            let mut hs = BTreeSet::new();
            for e in &f.equations {
                heads_of(&e.rhs, &mut hs);
            }
            todo.extend(hs);
        }
    }
    task.definitions.iter().filter(|f| seen.contains(&f.name)).cloned().collect()
}

fn type_cons(t: &Type, out: &mut BTreeSet<Symbol>) {
    match t {
        Type::Var(_) => {}
        Type::Con(n, args) => {
            out.insert(n.clone());
            args.iter().for_each(|a| type_cons(a, out));
        }
        Type::Arrow(a, b) => {
            type_cons(a, out);
            type_cons(b, out);
        }
    }
}

/// Datatypes named by any type in the task, closed under constructor fields, in program order.
fn reachable_datatypes(program: &TypedProgram, task: &ProofTask) -> Vec<DataDecl> {
    let mut names = BTreeSet::new();
    for e in std::iter::once(&task.goal).chain(&task.axioms) {
        e.universals.iter().for_each(|(_, t)| type_cons(t, &mut names));
    }
    for f in &task.definitions {
        type_cons(&f.signature.body, &mut names);
    }
    for d in &task.dummy_sorts {
        d.assumed_ops.iter().for_each(|(_, t)| type_cons(t, &mut names));
    }
    // Constructors used in terms and patterns name their datatype too.
    let mut heads = BTreeSet::new();
    for e in std::iter::once(&task.goal).chain(&task.axioms) {
        heads_of(&e.lhs, &mut heads);
        heads_of(&e.rhs, &mut heads);
    }
    for (name, _) in heads.iter().filter_map(|h| program.constructor(h).map(|(d, _)| (d.name.clone(), ()))) {
        names.insert(name);
    }
    let mut changed = true;
    while changed {
        changed = false;
        for d in &program.datatypes {
            if names.contains(&d.name) {
                for c in &d.ctors {
                    for a in &c.args {
                        let mut inner = BTreeSet::new();
                        type_cons(a, &mut inner);
                        for n in inner {
                            changed |= names.insert(n);
                        }
                    }
                }
            }
        }
    }
    program.datatypes.iter().filter(|d| names.contains(&d.name)).cloned().collect()
}

fn arity_of(task: &ProofTask, name: &str) -> Option<usize> {
    task.definition(name)
        .map(|f| f.signature.body.arity())
        .or_else(|| task.assumed_op(name).map(Type::arity))
}

fn term_is_higher_order(t: &Term, locals: &[(Symbol, Type)], task: &ProofTask) -> bool {
    match t {
        Term::Var(v) => locals.iter().any(|(x, ty)| x == v && ty.is_arrow()),
        Term::App(h, args) => {
            if locals.iter().any(|(x, _)| x == h) && !args.is_empty() {
                return true;
            }
            if let Some(n) = arity_of(task, h) {
                if n != args.len() {
                    return true;
                }
            }
            args.iter().any(|a| term_is_higher_order(a, locals, task))
        }
    }
}

fn equation_is_higher_order(e: &Equation, task: &ProofTask) -> bool {
    e.universals.iter().any(|(_, t)| t.contains_arrow())
        || term_is_higher_order(&e.lhs, &e.universals, task)
        || term_is_higher_order(&e.rhs, &e.universals, task)
}

/// Function-typed universals or parameters, or partial applications anywhere in the task.
pub fn is_higher_order(task: &ProofTask) -> bool {
    if std::iter::once(&task.goal).chain(&task.axioms).any(|e| equation_is_higher_order(e, task)) {
        return true;
    }
    task.definitions.iter().any(|f| {
        let (args, ret) = f.signature.body.split_arrows();
        if args.iter().any(|a| a.contains_arrow()) || ret.contains_arrow() {
            return true;
        }
        f.equations.iter().any(|e| {
            let mut locals = Vec::new();
            for (p, t) in e.patterns.iter().zip(&args) {
                if let Pattern::Var(v) = p {
                    locals.push((v.clone(), (*t).clone()));
                }
            }
            term_is_higher_order(&e.rhs, &locals, task)
        })
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse_program;
    use crate::typecheck::check_program;

    const MONOID: &str = "data Nat = Zero | Succ Nat
data Maybe a = Nothing | Just a

plus :: Nat -> Nat -> Nat
plus Zero a = a
plus (Succ a) b = Succ (plus a b)

times :: Nat -> Nat -> Nat
times Zero m = Zero
times (Succ n) m = plus m (times n m)

class Monoid a where
  mempty :: a
  mappend :: a -> a -> a

law mappendAssoc :: Monoid a => a -> a -> a -> Equality a
law mappendAssoc x y z = mappend x (mappend y z) === mappend (mappend x y) z

law leftId :: Monoid a => a -> Equality a
law leftId x = mappend mempty x === x

instance Monoid Nat where
  mempty = Zero
  mappend = plus

instance Monoid Nat where
  mempty = Succ Zero
  mappend = times

maybeAppend :: Monoid a => Maybe a -> Maybe a -> Maybe a
maybeAppend Nothing y = y
maybeAppend (Just x) Nothing = Just x
maybeAppend (Just x) (Just y) = Just (mappend x y)

instance Monoid a => Monoid (Maybe a) where
  mempty = Nothing
  mappend = maybeAppend
";

    fn tasks(src: &str) -> Vec<ProofTask> {
        let (p, t) = check_program(&parse_program(src).unwrap()).unwrap();
        build_tasks(&p, &t).unwrap()
    }

    #[test]
    fn mangling_scheme() {
        let nat = Type::con("Nat", vec![]);
        assert_eq!(mangle("Monoid", &nat, 0, "mappend"), "MonoidNatmappend");
        assert_eq!(mangle("Monoid", &nat, 1, "mappend"), "MonoidNat2mappend");
        let m = Type::con("Maybe", vec![Type::con("ElemA", vec![])]);
        assert_eq!(mangle("Monoid", &m, 0, "mempty"), "MonoidMaybeElemAmempty");
    }

    #[test]
    fn one_task_per_law_and_instance() {
        let ts = tasks(MONOID);
        let ids: Vec<&str> = ts.iter().map(|t| t.id.as_str()).collect();
        assert_eq!(
            ids,
            vec![
                "mappendAssoc_MonoidNat",
                "mappendAssoc_MonoidNat2",
                "mappendAssoc_MonoidMaybeElemA",
                "leftId_MonoidNat",
                "leftId_MonoidNat2",
                "leftId_MonoidMaybeElemA"
            ]
        );
    }

    #[test]
    fn nat_assoc_goal_uses_mangled_method() {
        let t = &tasks(MONOID)[0];
        assert_eq!(
            t.goal.to_string(),
            "MonoidNatmappend x (MonoidNatmappend y z) = MonoidNatmappend (MonoidNatmappend x y) z"
        );
        let def = t.definition("MonoidNatmappend").unwrap();
        assert_eq!(def.equations[0].rhs.to_string(), "plus a b");
        assert!(t.definition("plus").is_some());
        assert!(t.axioms.is_empty() && t.dummy_sorts.is_empty() && !t.higher_order);
    }

    #[test]
    fn second_nat_instance_inlines_its_own_identity() {
        let t = &tasks(MONOID)[4];
        assert_eq!(t.goal.to_string(), "MonoidNat2mappend MonoidNat2mempty x = x");
        assert_eq!(t.definition("MonoidNat2mempty").unwrap().equations[0].rhs.to_string(), "Succ Zero");
    }

    #[test]
    fn constrained_instance_gets_dummy_sort() {
        let t = &tasks(MONOID)[2];
        assert_eq!(t.dummy_sorts.len(), 1);
        let d = &t.dummy_sorts[0];
        assert_eq!(d.name, "ElemA");
        let ops: Vec<&str> = d.assumed_ops.iter().map(|(n, _)| n.as_str()).collect();
        assert_eq!(ops, vec!["mempty_ElemA", "mappend_ElemA"]);
        assert_eq!(d.assumed_laws.len(), 2);
        assert_eq!(t.axioms.len(), 2);
        assert!(t.definition("maybeAppend_ElemA").is_some());
        let body = &t.definition("maybeAppend_ElemA").unwrap().equations[2].rhs;
        assert_eq!(body.to_string(), "Just (mappend_ElemA x y)");
        assert_eq!(t.goal.universals[0].1, Type::con("Maybe", vec![Type::con("ElemA", vec![])]));
    }

    #[test]
    fn class_without_instances_gives_no_tasks() {
        let src = "class Empty a where\n  e :: a\nlaw l :: Empty a => a -> Equality a\nlaw l x = e === x\n";
        assert!(tasks(src).is_empty());
    }

    #[test]
    fn superclass_laws_become_axioms_at_the_head() {
        let src = "data Nat = Zero | Succ Nat
plus :: Nat -> Nat -> Nat
plus Zero a = a
plus (Succ a) b = Succ (plus a b)
class Add a where
  add :: a -> a -> a
class Add a => CommAdd a
law addAssoc :: Add a => a -> a -> a -> Equality a
law addAssoc x y z = add x (add y z) === add (add x y) z
law addComm :: CommAdd a => a -> a -> Equality a
law addComm x y = add x y === add y x
instance Add Nat where
  add = plus
instance CommAdd Nat
";
        let ts = tasks(src);
        let comm = ts.iter().find(|t| t.law == "addComm").unwrap();
        assert_eq!(comm.axioms.len(), 1);
        assert_eq!(comm.axioms[0].to_string(), "AddNatadd x (AddNatadd y z) = AddNatadd (AddNatadd x y) z");
        assert_eq!(comm.goal.to_string(), "AddNatadd x y = AddNatadd y x");
    }

    #[test]
    fn partial_application_marks_higher_order() {
        let src = "data Nat = Zero | Succ Nat
data List a = Nil | Cons a (List a)
class Monoid a where
  mempty :: a
  mappend :: a -> a -> a
foldr :: (a -> b -> b) -> b -> List a -> b
foldr f z Nil = z
foldr f z (Cons x xs) = f x (foldr f z xs)
mconcat :: Monoid a => List a -> a
mconcat xs = foldr mappend mempty xs
law mconcatDef :: Monoid a => List a -> Equality a
law mconcatDef xs = mconcat xs === foldr mappend mempty xs
plus :: Nat -> Nat -> Nat
plus Zero a = a
plus (Succ a) b = Succ (plus a b)
instance Monoid Nat where
  mempty = Zero
  mappend = plus
";
        let ts = tasks(src);
        assert_eq!(ts.len(), 1);
        assert!(ts[0].higher_order);
    }
}
