mod common;

use std::collections::HashSet;

#[test]
fn monoid_associativity_at_nat_is_the_golden_equation() {
    let t = common::task("monoid", "mappendAssoc_MonoidNat");
    assert_eq!(t.goal.to_string(), "MonoidNatmappend x (MonoidNatmappend y z) = MonoidNatmappend (MonoidNatmappend x y) z");
    assert_eq!(t.instance_label(), "Monoid@Nat#1");
}

#[test]
fn one_task_per_law_and_instance() {
    assert_eq!(common::tasks("monoid").len(), 3 * 5);
    assert_eq!(common::tasks("semiring").len(), 8 * 4);
    assert_eq!(common::tasks("reversible").len(), 3);
    assert_eq!(common::tasks("plus_comm").len(), 1);
    // One subclass law on top of the inherited ones.
    assert_eq!(common::tasks("commutative_semiring").len(), 9 * 4);
}

#[test]
fn task_ids_are_unique() {
    for name in common::FIXTURES {
        let tasks = common::tasks(name);
        let ids: HashSet<&str> = tasks.iter().map(|t| t.id.as_str()).collect();
        assert_eq!(ids.len(), tasks.len(), "{name}");
    }
}

#[test]
fn second_instance_at_a_head_gets_an_index_suffix() {
    let t = common::task("monoid", "mappendAssoc_MonoidNat2");
    assert!(t.goal.lhs.to_string().starts_with("MonoidNat2mappend"), "{}", t.goal);
    assert!(t.definition("MonoidNat2mappend").is_some());
}

#[test]
fn maybe_instance_keeps_its_element_abstract() {
    let t = common::task("monoid", "mappendAssoc_MonoidMaybeElemA");
    assert_eq!(t.dummy_sorts.len(), 1);
    let sort = &t.dummy_sorts[0];
    assert_eq!(sort.name, "ElemA");
    assert_eq!(sort.assumed_ops.len(), 2, "{:?}", sort.assumed_ops);
    let laws: HashSet<&str> = sort.assumed_laws.iter().map(|l| l.name.as_str()).collect();
    assert_eq!(laws.len(), 3, "{laws:?}");
}

#[test]
fn subclass_tasks_assume_superclass_laws() {
    let t = common::task("chain", "fuseSelf_TopBool");
    let names: Vec<&str> = t.axioms.iter().map(|a| a.name.as_str()).collect();
    assert_eq!(names, ["flipFlip@Bool", "fixIdem@Bool"]);
    let t = common::task("chain", "flipFlip_BaseBool");
    assert!(t.axioms.is_empty());
}

#[test]
fn goals_are_monomorphic() {
    for name in common::FIXTURES {
        for t in common::tasks(name) {
            for (v, ty) in &t.goal.universals {
                let mut free = Default::default();
                ty.free_vars(&mut free);
                assert!(free.is_empty(), "{}: {v} : {ty}", t.id);
            }
        }
    }
}

#[test]
fn polymorphic_helpers_are_specialised() {
    let t = common::task("reversible", "reverseInvolutive_ReversibleListElemA");
    let names: Vec<&str> = t.definitions.iter().map(|f| f.name.as_str()).collect();
    assert!(names.iter().any(|n| n.starts_with("append")), "{names:?}");
    for f in &t.definitions {
        assert!(f.signature.quantified.is_empty(), "{} : {}", f.name, f.signature);
    }
}

#[test]
fn folds_over_methods_are_flagged_higher_order() {
    let tasks = common::tasks("mconcat");
    let spec = tasks.iter().find(|t| t.law == "mconcatSpec").unwrap();
    assert!(spec.higher_order);
    assert!(common::tasks("monoid").iter().all(|t| !t.higher_order));
}

// Semantic faithfulness. An evaluator that works on the source program,
// resolving each method through the instance a task was built for, must
// agree with evaluating the instantiated goal.

mod direct {
    use std::collections::HashMap;

    use lawkeeper::eval::Value;
    use lawkeeper::syntax::{MethodBinding, Pattern, Symbol, Term};
    use lawkeeper::typecheck::TypedProgram;

    pub struct Direct<'p> {
        pub program: &'p TypedProgram,
        /// Method name to binding, for the task's instance and its superclass instances.
        pub methods: HashMap<Symbol, &'p MethodBinding>,
    }

    impl<'p> Direct<'p> {
        pub fn new(program: &'p TypedProgram, instance: usize) -> Self {
            let mut methods = HashMap::new();
            let mut todo = vec![instance];
            while let Some(i) = todo.pop() {
                let inst = &program.instances[i];
                for b in &inst.decl.bindings {
                    methods.entry(b.method.clone()).or_insert(b);
                }
                todo.extend(inst.superinstances.iter().map(|(_, s)| *s));
            }
            Direct { program, methods }
        }

        fn bind(p: &Pattern, v: &Value, env: &mut HashMap<Symbol, Value>) -> bool {
            match p {
                Pattern::Wildcard => true,
                Pattern::Var(x) => {
                    env.insert(x.clone(), v.clone());
                    true
                }
                Pattern::Ctor(c, ps) => *c == v.ctor && ps.len() == v.args.len() && ps.iter().zip(&v.args).all(|(p, v)| Self::bind(p, v, env)),
            }
        }

        fn call(&self, f: &Symbol, args: Vec<Value>) -> Option<Value> {
            if let Some(b) = self.methods.get(f) {
                if b.params.is_empty() {
                    if let Term::Var(alias) = &b.body {
                        if self.program.function(alias.as_str()).is_some() || self.methods.contains_key(alias) {
                            return self.call(alias, args);
                        }
                    }
                }
                let env = b.params.iter().cloned().zip(args).collect();
                return self.eval(&b.body, &env);
            }
            if self.program.constructor(f.as_str()).is_some() {
                return Some(Value::new(f.clone(), args));
            }
            let fun = self.program.function(f.as_str())?;
            for eq in &fun.decl.equations {
                let mut env = HashMap::new();
                if eq.patterns.iter().zip(&args).all(|(p, v)| Self::bind(p, v, &mut env)) {
                    return self.eval(&eq.rhs, &env);
                }
            }
            None
        }

        pub fn eval(&self, t: &Term, env: &HashMap<Symbol, Value>) -> Option<Value> {
            match t {
                Term::Var(x) => match env.get(x) {
                    Some(v) => Some(v.clone()),
                    None => self.call(x, vec![]),
                },
                Term::App(h, args) => {
                    let args = args.iter().map(|a| self.eval(a, env)).collect::<Option<Vec<_>>>()?;
                    self.call(h, args)
                }
            }
        }
    }
}

#[test]
fn instantiated_goals_mean_what_the_laws_say() {
    use lawkeeper::eval::{eval_term, DEFAULT_FUEL};
    use lawkeeper::frontend::parse_program;
    use lawkeeper::typecheck::check_program;

    let mut compared = 0;
    for name in ["plus_comm", "monoid", "semiring", "commutative_semiring", "reversible", "chain"] {
        let (typed, _) = check_program(&parse_program(&common::source(name)).unwrap()).unwrap();
        for task in common::tasks(name) {
            if !task.dummy_sorts.is_empty() || task.instances.len() > 1 {
                continue;
            }
            let direct = match task.instances.first() {
                Some(i) => direct::Direct::new(&typed, i.id),
                None => direct::Direct { program: &typed, methods: Default::default() },
            };
            let law = typed.law(task.law.as_str()).unwrap();
            let defs = common::defs(&task);
            for env in common::assignments(&task, &task.goal, 3, 400) {
                let source_env = env.iter().map(|(k, v)| (k.clone(), v.clone())).collect();
                let want_l = direct.eval(&law.decl.lhs, &source_env).expect("direct evaluation");
                let want_r = direct.eval(&law.decl.rhs, &source_env).expect("direct evaluation");
                let got_l = eval_term(&task.goal.lhs, &env, &defs, DEFAULT_FUEL).unwrap();
                let got_r = eval_term(&task.goal.rhs, &env, &defs, DEFAULT_FUEL).unwrap();
                assert_eq!(got_l, want_l, "{} lhs", task.id);
                assert_eq!(got_r, want_r, "{} rhs", task.id);
                compared += 1;
            }
        }
    }
    assert!(compared > 1000, "{compared}");
}
