use std::fmt::Write;

use crate::syntax::*;

/// Canonical rendering: prefix application everywhere, one blank line between declarations.
pub fn pretty_print(program: &SourceProgram) -> String {
    let blocks: Vec<String> = program.decls.iter().map(decl).collect();
    let mut out = blocks.join("\n\n");
    if !out.is_empty() {
        out.push('\n');
    }
    out
}

fn context(cs: &[Constraint]) -> String {
    match cs {
        [] => String::new(),
        [c] => format!("{c} => "),
        _ => format!("({}) => ", cs.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(", ")),
    }
}

fn atype(t: &Type) -> String {
    match t {
        Type::Con(_, args) if !args.is_empty() => format!("({t})"),
        Type::Arrow(..) => format!("({t})"),
        _ => t.to_string(),
    }
}

fn decl(d: &Decl) -> String {
    let mut s = String::new();
    match d {
        Decl::Data(d) => {
            write!(s, "data {}", d.name).unwrap();
            for p in &d.params {
                write!(s, " {p}").unwrap();
            }
            s.push_str(" =");
            for (i, c) in d.ctors.iter().enumerate() {
                s.push_str(if i == 0 { " " } else { " | " });
                s.push_str(&c.name);
                for a in &c.args {
                    write!(s, " {}", atype(a)).unwrap();
                }
            }
        }
        Decl::Fun(f) => {
            write!(s, "{} :: {}", f.name, f.signature).unwrap();
            for e in &f.equations {
                write!(s, "\n{}", f.name).unwrap();
                for p in &e.patterns {
                    write!(s, " {p}").unwrap();
                }
                write!(s, " = {}", e.rhs).unwrap();
            }
        }
        Decl::Class(c) => {
            let supers: Vec<Constraint> = c
                .superclasses
                .iter()
                .map(|sc| Constraint { class: sc.clone(), arg: Type::Var(c.param.clone()) })
                .collect();
            write!(s, "class {}{} {}", context(&supers), c.name, c.param).unwrap();
            if !c.methods.is_empty() {
                s.push_str(" where");
                for m in &c.methods {
                    write!(s, "\n  {} :: {}", m.name, m.ty).unwrap();
                }
            }
        }
        Decl::Instance(i) => {
            write!(s, "instance {}{} {}", context(&i.context), i.class, atype(&i.head)).unwrap();
            if !i.bindings.is_empty() {
                s.push_str(" where");
                for b in &i.bindings {
                    write!(s, "\n  {}", b.method).unwrap();
                    for p in &b.params {
                        write!(s, " {p}").unwrap();
                    }
                    write!(s, " = {}", b.body).unwrap();
                }
            }
        }
        Decl::Law(l) => {
            write!(s, "law {} :: {}\nlaw {}", l.name, l.signature, l.name).unwrap();
            for p in &l.params {
                write!(s, " {p}").unwrap();
            }
            write!(s, " = {} === {}", l.lhs, l.rhs).unwrap();
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse_program;

    #[test]
    fn prints_nat_datatype() {
        let p = parse_program("data Nat = Zero | Succ Nat").unwrap();
        assert_eq!(pretty_print(&p), "data Nat = Zero | Succ Nat\n");
    }

    #[test]
    fn declarations_separated_by_one_blank_line() {
        let p = parse_program("data B = T | F\n\n\n\ndata U = U").unwrap();
        assert_eq!(pretty_print(&p), "data B = T | F\n\ndata U = U\n");
    }

    #[test]
    fn law_prints_two_line_form() {
        let src = "law assoc :: Monoid a => a -> a -> a -> Equality a\nlaw assoc x y z = mappend x (mappend y z) === mappend (mappend x y) z";
        let p = parse_program(src).unwrap();
        assert_eq!(pretty_print(&p), format!("{src}\n"));
    }
}
