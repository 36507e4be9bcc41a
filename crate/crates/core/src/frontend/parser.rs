use std::collections::HashMap;

use super::lexer::{Tok, Token};
use super::FrontendError;
use crate::syntax::*;

/// Infix sugar: every operator is a prefix function underneath.
pub const OPERATORS: &[(&str, &str, u8, Assoc)] = &[
    ("*", "times", 7, Assoc::Left),
    ("+", "plus", 6, Assoc::Left),
    ("++", "append", 5, Assoc::Right),
    ("<>", "mappend", 4, Assoc::Right),
];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Assoc {
    Left,
    Right,
}

fn operator(op: &str) -> (&'static str, u8, Assoc) {
    let (_, name, prec, assoc) = OPERATORS
        .iter()
        .find(|(o, ..)| *o == op)
        .expect("lexer only produces known operators");
    (name, *prec, *assoc)
}

/// One top-level syntactic item before signatures and equations are grouped.
enum Item {
    Data(DataDecl),
    Sig(Symbol, TypeScheme),
    Eqn(Symbol, Equation),
    Class(ClassDecl),
    Instance(InstanceDecl),
    LawSig(Symbol, TypeScheme),
    LawEqn(Symbol, Vec<Symbol>, Term, Term),
}

struct Parser<'a> {
    toks: &'a [Token],
    pos: usize,
    eof: &'a Token,
}

type PResult<T> = Result<T, FrontendError>;

impl<'a> Parser<'a> {
    fn peek(&self) -> &'a Tok {
        self.toks.get(self.pos).map(|t| &t.tok).unwrap_or(&self.eof.tok)
    }

    fn peek_at(&self, k: usize) -> &'a Tok {
        self.toks.get(self.pos + k).map(|t| &t.tok).unwrap_or(&self.eof.tok)
    }

    fn token(&self) -> &'a Token {
        self.toks.get(self.pos).unwrap_or(self.eof)
    }

    fn bump(&mut self) -> &'a Tok {
        let t = self.peek();
        self.pos += 1;
        t
    }

    fn at_end(&self) -> bool {
        self.pos >= self.toks.len()
    }

    fn error<T>(&self, expected: &[&str]) -> PResult<T> {
        let t = self.token();
        Err(FrontendError::Parse {
            line: t.line,
            col: t.col,
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: t.tok.to_string(),
        })
    }

    fn expect(&mut self, tok: Tok, what: &str) -> PResult<()> {
        if *self.peek() == tok {
            self.pos += 1;
            Ok(())
        } else {
            self.error(&[what])
        }
    }

    fn ident(&mut self) -> PResult<Symbol> {
        match self.peek() {
            Tok::Ident(s) => {
                self.pos += 1;
                Ok(Symbol::new(s))
            }
            _ => self.error(&["identifier"]),
        }
    }

    fn con_id(&mut self) -> PResult<Symbol> {
        match self.peek() {
            Tok::ConId(s) => {
                self.pos += 1;
                Ok(Symbol::new(s))
            }
            _ => self.error(&["constructor"]),
        }
    }

    /// `name` or `(op)`.
    fn binder_name(&mut self) -> PResult<Symbol> {
        if let (Tok::LParen, Tok::Op(op), Tok::RParen) = (self.peek(), self.peek_at(1), self.peek_at(2)) {
            self.pos += 3;
            return Ok(Symbol::new(operator(op).0));
        }
        self.ident()
    }

    fn finish(&self) -> PResult<()> {
        if self.at_end() {
            Ok(())
        } else {
            self.error(&["end of declaration"])
        }
    }

    // ---- types ----

    fn ty(&mut self) -> PResult<Type> {
        let from = self.btype()?;
        if *self.peek() == Tok::Arrow {
            self.pos += 1;
            Ok(Type::arrow(from, self.ty()?))
        } else {
            Ok(from)
        }
    }

    fn btype(&mut self) -> PResult<Type> {
        if let Tok::ConId(name) = self.peek() {
            self.pos += 1;
            let mut args = Vec::new();
            while self.starts_atype() {
                args.push(self.atype()?);
            }
            return Ok(Type::Con(Symbol::new(name), args));
        }
        self.atype()
    }

    fn starts_atype(&self) -> bool {
        matches!(self.peek(), Tok::Ident(_) | Tok::ConId(_) | Tok::LParen)
    }

    fn atype(&mut self) -> PResult<Type> {
        match self.peek() {
            Tok::Ident(v) => {
                self.pos += 1;
                Ok(Type::Var(Symbol::new(v)))
            }
            Tok::ConId(c) => {
                self.pos += 1;
                Ok(Type::Con(Symbol::new(c), Vec::new()))
            }
            Tok::LParen => {
                self.pos += 1;
                let t = self.ty()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(t)
            }
            _ => self.error(&["type"]),
        }
    }

    /// Parses an optional `C a =>` or `(C a, D b) =>` prefix.
    fn context(&mut self) -> PResult<Vec<Constraint>> {
        let save = self.pos;
        if *self.peek() == Tok::LParen {
            self.pos += 1;
            if let Tok::ConId(_) = self.peek() {
                let mut cs = Vec::new();
                let ok = loop {
                    let Ok(c) = self.constraint() else { break false };
                    cs.push(c);
                    match self.peek() {
                        Tok::Comma => self.pos += 1,
                        Tok::RParen => {
                            self.pos += 1;
                            break true;
                        }
                        _ => break false,
                    }
                };
                if ok && *self.peek() == Tok::FatArrow {
                    self.pos += 1;
                    return Ok(cs);
                }
            }
            self.pos = save;
            return Ok(Vec::new());
        }
        if let Tok::ConId(_) = self.peek() {
            if let Ok(c) = self.constraint() {
                if *self.peek() == Tok::FatArrow {
                    self.pos += 1;
                    return Ok(vec![c]);
                }
            }
        }
        self.pos = save;
        Ok(Vec::new())
    }

    fn constraint(&mut self) -> PResult<Constraint> {
        let class = self.con_id()?;
        let arg = self.atype()?;
        Ok(Constraint { class, arg })
    }

    fn scheme(&mut self) -> PResult<TypeScheme> {
        let cs = self.context()?;
        let body = self.ty()?;
        Ok(TypeScheme::new(cs, body))
    }

    // ---- patterns ----

    fn apat(&mut self) -> PResult<Pattern> {
        match self.peek() {
            Tok::Ident(v) => {
                self.pos += 1;
                Ok(Pattern::Var(Symbol::new(v)))
            }
            Tok::Underscore => {
                self.pos += 1;
                Ok(Pattern::Wildcard)
            }
            Tok::ConId(c) => {
                self.pos += 1;
                Ok(Pattern::Ctor(Symbol::new(c), Vec::new()))
            }
            Tok::LParen => {
                self.pos += 1;
                let p = self.pat()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(p)
            }
            _ => self.error(&["pattern"]),
        }
    }

    fn pat(&mut self) -> PResult<Pattern> {
        if let Tok::ConId(c) = self.peek() {
            self.pos += 1;
            let mut args = Vec::new();
            while matches!(self.peek(), Tok::Ident(_) | Tok::ConId(_) | Tok::LParen | Tok::Underscore) {
                args.push(self.apat()?);
            }
            return Ok(Pattern::Ctor(Symbol::new(c), args));
        }
        self.apat()
    }

    fn starts_apat(&self) -> bool {
        matches!(self.peek(), Tok::Ident(_) | Tok::ConId(_) | Tok::LParen | Tok::Underscore)
    }

    // ---- terms ----

    fn term(&mut self) -> PResult<Term> {
        self.infix(0)
    }

    fn infix(&mut self, min_prec: u8) -> PResult<Term> {
        let mut lhs = self.application()?;
        while let Tok::Op(op) = self.peek() {
            let (name, prec, assoc) = operator(op);
            if prec < min_prec {
                break;
            }
            self.pos += 1;
            let next = if assoc == Assoc::Left { prec + 1 } else { prec };
            let rhs = self.infix(next)?;
            lhs = Term::App(Symbol::new(name), vec![lhs, rhs]);
        }
        Ok(lhs)
    }

    fn starts_atom(&self) -> bool {
        matches!(self.peek(), Tok::Ident(_) | Tok::ConId(_) | Tok::LParen)
    }

    fn application(&mut self) -> PResult<Term> {
        let head = match self.peek() {
            Tok::Ident(s) => {
                self.pos += 1;
                Symbol::new(s)
            }
            Tok::ConId(s) => {
                self.pos += 1;
                let mut args = Vec::new();
                while self.starts_atom() {
                    args.push(self.atom()?);
                }
                return Ok(Term::App(Symbol::new(s), args));
            }
            Tok::LParen => {
                if let (Tok::Op(op), Tok::RParen) = (self.peek_at(1), self.peek_at(2)) {
                    self.pos += 3;
                    Symbol::new(operator(op).0)
                } else {
                    let t = self.atom()?;
                    if self.starts_atom() {
                        return self.error(&["operator", "`)`", "end of term"]);
                    }
                    return Ok(t);
                }
            }
            _ => return self.error(&["term"]),
        };
        let mut args = Vec::new();
        while self.starts_atom() {
            args.push(self.atom()?);
        }
        if args.is_empty() {
            Ok(Term::Var(head))
        } else {
            Ok(Term::App(head, args))
        }
    }

    fn atom(&mut self) -> PResult<Term> {
        match self.peek() {
            Tok::Ident(s) => {
                self.pos += 1;
                Ok(Term::Var(Symbol::new(s)))
            }
            Tok::ConId(s) => {
                self.pos += 1;
                Ok(Term::App(Symbol::new(s), Vec::new()))
            }
            Tok::LParen => {
                if let (Tok::Op(op), Tok::RParen) = (self.peek_at(1), self.peek_at(2)) {
                    self.pos += 3;
                    return Ok(Term::Var(Symbol::new(operator(op).0)));
                }
                self.pos += 1;
                let t = self.term()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(t)
            }
            _ => self.error(&["term"]),
        }
    }

    // ---- declarations ----

    fn item(&mut self) -> PResult<Item> {
        match self.peek() {
            Tok::Data => self.data_decl(),
            Tok::Class => self.class_decl(),
            Tok::Instance => self.instance_decl(),
            Tok::Law => self.law_item(),
            _ => self.fun_item(),
        }
    }

    fn data_decl(&mut self) -> PResult<Item> {
        self.bump();
        let name = self.con_id()?;
        let mut params = Vec::new();
        while let Tok::Ident(_) = self.peek() {
            params.push(self.ident()?);
        }
        self.expect(Tok::Eq, "`=`")?;
        let mut ctors = Vec::new();
        loop {
            let cname = self.con_id()?;
            let mut args = Vec::new();
            while self.starts_atype() {
                args.push(self.atype()?);
            }
            ctors.push(CtorDecl { name: cname, args });
            if *self.peek() == Tok::Bar {
                self.pos += 1;
            } else {
                break;
            }
        }
        self.finish()?;
        Ok(Item::Data(DataDecl { name, params, ctors }))
    }

    fn class_decl(&mut self) -> PResult<Item> {
        self.bump();
        let ctx = self.context()?;
        let name = self.con_id()?;
        let param = self.ident()?;
        let mut superclasses = Vec::new();
        for c in ctx {
            if c.arg != Type::Var(param.clone()) {
                let t = self.toks[0].clone();
                return Err(FrontendError::Structure {
                    line: t.line,
                    col: t.col,
                    message: format!("superclass constraint `{c}` must apply to the class parameter `{param}`"),
                });
            }
            superclasses.push(c.class);
        }
        let mut methods = Vec::new();
        for mut body in self.where_body()? {
            let mname = body.binder_name()?;
            body.expect(Tok::DColon, "`::`")?;
            let ty = body.ty()?;
            body.finish()?;
            methods.push(MethodSig { name: mname, ty });
        }
        Ok(Item::Class(ClassDecl { name, param, superclasses, methods }))
    }

    fn instance_decl(&mut self) -> PResult<Item> {
        self.bump();
        let context = self.context()?;
        let class = self.con_id()?;
        let head = self.atype()?;
        let mut bindings = Vec::new();
        for mut body in self.where_body()? {
            let method = body.binder_name()?;
            let mut params = Vec::new();
            while let Tok::Ident(_) = body.peek() {
                params.push(body.ident()?);
            }
            body.expect(Tok::Eq, "`=`")?;
            let t = body.term()?;
            body.finish()?;
            bindings.push(MethodBinding { method, params, body: t });
        }
        Ok(Item::Instance(InstanceDecl { context, class, head, bindings }))
    }

    /// Splits the body after `where` into one sub-parser per item, either by
    /// explicit braces and semicolons or by layout column.
    fn where_body(&mut self) -> PResult<Vec<Parser<'a>>> {
        if self.at_end() {
            return Ok(Vec::new());
        }
        if *self.peek() != Tok::LBrace {
            self.expect(Tok::Where, "`where`")?;
        }
        let rest = &self.toks[self.pos..];
        self.pos = self.toks.len();
        let mut items = Vec::new();
        if let Some(first) = rest.first() {
            if first.tok == Tok::LBrace {
                let Some(close) = rest.iter().position(|t| t.tok == Tok::RBrace) else {
                    let last = rest.last().unwrap_or(first);
                    return Err(FrontendError::Parse {
                        line: last.line,
                        col: last.col,
                        expected: vec!["`}`".into()],
                        found: Tok::Eof.to_string(),
                    });
                };
                if close + 1 != rest.len() {
                    let t = &rest[close + 1];
                    return Err(FrontendError::Parse {
                        line: t.line,
                        col: t.col,
                        expected: vec!["end of declaration".into()],
                        found: t.tok.to_string(),
                    });
                }
                for chunk in rest[1..close].split(|t| t.tok == Tok::Semi) {
                    if !chunk.is_empty() {
                        items.push(Parser { toks: chunk, pos: 0, eof: self.eof });
                    }
                }
                return Ok(items);
            }
            let col = first.col;
            let mut start = 0;
            for i in 1..rest.len() {
                if rest[i].col == col && rest[i].line > rest[i - 1].line {
                    items.push(Parser { toks: &rest[start..i], pos: 0, eof: self.eof });
                    start = i;
                }
            }
            items.push(Parser { toks: &rest[start..], pos: 0, eof: self.eof });
        }
        Ok(items)
    }

    fn law_item(&mut self) -> PResult<Item> {
        self.bump();
        let name = self.ident()?;
        if *self.peek() == Tok::DColon {
            self.pos += 1;
            let s = self.scheme()?;
            self.finish()?;
            return Ok(Item::LawSig(name, s));
        }
        let mut params = Vec::new();
        while let Tok::Ident(_) = self.peek() {
            params.push(self.ident()?);
        }
        self.expect(Tok::Eq, "`=`")?;
        let lhs = self.term()?;
        self.expect(Tok::Equiv, "`===`")?;
        let rhs = self.term()?;
        self.finish()?;
        Ok(Item::LawEqn(name, params, lhs, rhs))
    }

    fn fun_item(&mut self) -> PResult<Item> {
        // signature: name :: type
        let save = self.pos;
        if matches!(self.peek(), Tok::Ident(_) | Tok::LParen) {
            if let Ok(name) = self.binder_name() {
                if *self.peek() == Tok::DColon {
                    self.pos += 1;
                    let s = self.scheme()?;
                    self.finish()?;
                    return Ok(Item::Sig(name, s));
                }
            }
            self.pos = save;
        }
        // infix equation: pat op pat = rhs
        let has_top_op = {
            let mut depth = 0i32;
            let mut found = false;
            for t in &self.toks[self.pos..] {
                match &t.tok {
                    Tok::LParen => depth += 1,
                    Tok::RParen => depth -= 1,
                    Tok::Op(_) if depth == 0 => {
                        found = true;
                        break;
                    }
                    Tok::Eq => break,
                    _ => {}
                }
            }
            found
        };
        let (name, patterns) = if has_top_op {
            let l = self.pat()?;
            let Tok::Op(op) = self.peek() else {
                return self.error(&["operator"]);
            };
            self.pos += 1;
            let r = self.pat()?;
            (Symbol::new(operator(op).0), vec![l, r])
        } else {
            let name = match self.peek() {
                Tok::Ident(_) | Tok::LParen => self.binder_name()?,
                _ => return self.error(&["declaration"]),
            };
            let mut pats = Vec::new();
            while self.starts_apat() {
                pats.push(self.apat()?);
            }
            (name, pats)
        };
        self.expect(Tok::Eq, "`=`")?;
        let rhs = self.term()?;
        self.finish()?;
        Ok(Item::Eqn(name, Equation { patterns, rhs }))
    }
}

fn structure(pos: &Pos, message: String) -> FrontendError {
    FrontendError::Structure { line: pos.line, col: pos.col, message }
}

pub fn parse_tokens(tokens: &[Token], file: Option<&Symbol>) -> Result<SourceProgram, FrontendError> {
    let (eof, body) = tokens.split_last().expect("lexer appends Eof");
    // A token in column 1 starts a new top-level item.
    let mut groups: Vec<&[Token]> = Vec::new();
    let mut start = None;
    for (i, t) in body.iter().enumerate() {
        if t.col == 1 {
            if let Some(s) = start {
                groups.push(&body[s..i]);
            }
            start = Some(i);
        } else if start.is_none() {
            return Err(FrontendError::Parse {
                line: t.line,
                col: t.col,
                expected: vec!["declaration in column 1".into()],
                found: t.tok.to_string(),
            });
        }
    }
    if let Some(s) = start {
        groups.push(&body[s..]);
    }

    let mut items = Vec::new();
    for g in groups {
        let mut p = Parser { toks: g, pos: 0, eof };
        let item = p.item()?;
        items.push((Pos { file: file.cloned(), line: g[0].line, col: g[0].col }, item));
    }

    let mut program = SourceProgram::default();
    let mut iter = items.into_iter().peekable();
    while let Some((pos, item)) = iter.next() {
        let decl = match item {
            Item::Data(d) => Decl::Data(d),
            Item::Class(c) => Decl::Class(c),
            Item::Instance(i) => Decl::Instance(i),
            Item::Sig(name, signature) => {
                let mut equations = Vec::new();
                while let Some((_, Item::Eqn(n, _))) = iter.peek() {
                    if *n != name {
                        break;
                    }
                    if let Some((_, Item::Eqn(_, e))) = iter.next() {
                        equations.push(e);
                    }
                }
                if equations.is_empty() {
                    return Err(structure(&pos, format!("type signature for `{name}` has no defining equations")));
                }
                Decl::Fun(FunDecl { name, signature, equations })
            }
            Item::Eqn(name, _) => {
                return Err(structure(&pos, format!("equation for `{name}` has no preceding type signature")));
            }
            Item::LawSig(name, signature) => match iter.next() {
                Some((_, Item::LawEqn(n, params, lhs, rhs))) if n == name => {
                    Decl::Law(LawDecl { name, signature, params, lhs, rhs })
                }
                _ => return Err(structure(&pos, format!("law signature `{name}` must be followed by its `law {name} ... = ... === ...` body"))),
            },
            Item::LawEqn(name, ..) => {
                return Err(structure(&pos, format!("law `{name}` has no preceding signature")));
            }
        };
        program.decls.push(decl);
        program.positions.push(pos);
    }
    validate(&program)?;
    Ok(program)
}

/// Structural checks that need no type information.
pub fn validate(program: &SourceProgram) -> Result<(), FrontendError> {
    let mut values: HashMap<Symbol, Pos> = HashMap::new();
    let mut types: HashMap<Symbol, Pos> = HashMap::new();
    let mut ctors: HashMap<Symbol, Pos> = HashMap::new();
    let dup = |name: &Symbol, first: &Pos, second: &Pos| FrontendError::DuplicateName {
        name: name.to_string(),
        first: first.clone(),
        second: second.clone(),
    };
    for (i, decl) in program.decls.iter().enumerate() {
        let pos = program.pos(i);
        match decl {
            Decl::Data(d) => {
                if let Some(p) = types.insert(d.name.clone(), pos.clone()) {
                    return Err(dup(&d.name, &p, &pos));
                }
                for c in &d.ctors {
                    if let Some(p) = ctors.insert(c.name.clone(), pos.clone()) {
                        return Err(dup(&c.name, &p, &pos));
                    }
                    let mut vars = std::collections::BTreeSet::new();
                    c.args.iter().for_each(|a| a.free_vars(&mut vars));
                    if let Some(v) = vars.iter().find(|v| !d.params.contains(v)) {
                        return Err(structure(&pos, format!("type variable `{v}` in constructor `{}` is not a parameter of `{}`", c.name, d.name)));
                    }
                }
                for (j, p) in d.params.iter().enumerate() {
                    if d.params[..j].contains(p) {
                        return Err(structure(&pos, format!("duplicate type parameter `{p}` in `{}`", d.name)));
                    }
                }
            }
            Decl::Class(c) => {
                if let Some(p) = types.insert(c.name.clone(), pos.clone()) {
                    return Err(dup(&c.name, &p, &pos));
                }
                for (j, m) in c.methods.iter().enumerate() {
                    if c.methods[..j].iter().any(|o| o.name == m.name) {
                        return Err(dup(&m.name, &pos, &pos));
                    }
                    if let Some(p) = values.insert(m.name.clone(), pos.clone()) {
                        return Err(dup(&m.name, &p, &pos));
                    }
                }
            }
            Decl::Fun(f) => {
                if let Some(p) = values.insert(f.name.clone(), pos.clone()) {
                    return Err(dup(&f.name, &p, &pos));
                }
                let arity = f.signature.body.arity();
                for e in &f.equations {
                    if e.patterns.len() != arity {
                        return Err(structure(&pos, format!(
                            "equation for `{}` has {} patterns but its signature takes {} arguments",
                            f.name,
                            e.patterns.len(),
                            arity
                        )));
                    }
                    let mut vars = Vec::new();
                    e.patterns.iter().for_each(|p| p.vars(&mut vars));
                    for (j, v) in vars.iter().enumerate() {
                        if vars[..j].contains(v) {
                            return Err(structure(&pos, format!("variable `{v}` is bound twice in an equation for `{}`", f.name)));
                        }
                    }
                }
            }
            Decl::Law(l) => {
                if let Some(p) = values.insert(l.name.clone(), pos.clone()) {
                    return Err(dup(&l.name, &p, &pos));
                }
                if l.equality_type().is_none() {
                    return Err(structure(&pos, format!("law `{}` must have result type `Equality t`", l.name)));
                }
                let arity = l.signature.body.arity();
                if l.params.len() != arity {
                    return Err(structure(&pos, format!(
                        "law `{}` binds {} variables but its signature takes {}",
                        l.name,
                        l.params.len(),
                        arity
                    )));
                }
                for (j, v) in l.params.iter().enumerate() {
                    if l.params[..j].contains(v) {
                        return Err(structure(&pos, format!("variable `{v}` is bound twice in law `{}`", l.name)));
                    }
                }
            }
            Decl::Instance(inst) => {
                let mut head_vars = std::collections::BTreeSet::new();
                inst.head.free_vars(&mut head_vars);
                match &inst.head {
                    Type::Con(_, args) if args.iter().all(|a| matches!(a, Type::Var(_))) && head_vars.len() == args.len() => {}
                    _ => {
                        return Err(structure(&pos, format!(
                            "instance head `{}` must be a type constructor applied to distinct type variables",
                            inst.head
                        )))
                    }
                }
                for c in &inst.context {
                    match &c.arg {
                        Type::Var(v) if head_vars.contains(v) => {}
                        _ => return Err(structure(&pos, format!("context constraint `{c}` must mention a type variable of the instance head"))),
                    }
                }
                for (j, b) in inst.bindings.iter().enumerate() {
                    if inst.bindings[..j].iter().any(|o| o.method == b.method) {
                        return Err(structure(&pos, format!("method `{}` is bound twice", b.method)));
                    }
                }
            }
        }
    }
    Ok(())
}

/// Parses a single term, e.g. for tests and the command line.
pub fn parse_term_tokens(tokens: &[Token]) -> Result<Term, FrontendError> {
    let (eof, body) = tokens.split_last().expect("lexer appends Eof");
    let mut p = Parser { toks: body, pos: 0, eof };
    let t = p.term()?;
    p.finish()?;
    Ok(t)
}
