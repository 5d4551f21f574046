//! Canonical one-line text form of terms, types and heaps.
//!
//! ```text
//! expr  ::= IDENT | (app expr expr) | (send expr value) | (mutate expr)
//!         | (new p) | (new c) | (bestow expr) | value
//! value ::= unit | (fn IDENT type expr) | (id N) | (loc N) | (bestowed N M)
//! type  ::= p | c | (B p) | Unit | (-> type type)
//! heap  ::= (heap (counters L I) actor*)
//! actor ::= (actor N (this N) (local N*) (queue value*) (expr expr))
//! ```
//!
//! `(bestowed N M)` is location `N` bestowed by actor `M`. Rendering and
//! parsing are inverse to each other.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::heap::{Actor, Heap};
use crate::syntax::{ActorId, Expr, Loc, Type, Value};
use crate::typeck::TypeEnv;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("at byte {offset}: {message}")]
pub struct TextError {
    pub offset: usize,
    pub message: String,
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Lambda { param, ty, body } => write!(f, "(fn {param} {ty} {body})"),
            Value::Unit => f.write_str("unit"),
            Value::Actor(id) => write!(f, "{id}"),
            Value::Loc(l) => write!(f, "{l}"),
            Value::Bestowed(l, id) => write!(f, "(bestowed {} {})", l.0, id.0),
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Var(x) => f.write_str(x),
            Expr::App(a, b) => write!(f, "(app {a} {b})"),
            Expr::Send(t, m) => write!(f, "(send {t} {m})"),
            Expr::Mutate(e) => write!(f, "(mutate {e})"),
            Expr::NewPassive => f.write_str("(new p)"),
            Expr::NewActor => f.write_str("(new c)"),
            Expr::Bestow(e) => write!(f, "(bestow {e})"),
            Expr::Val(v) => write!(f, "{v}"),
        }
    }
}

impl fmt::Display for Actor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(this {}) (local", self.this.0)?;
        for l in &self.local {
            write!(f, " {}", l.0)?;
        }
        f.write_str(") (queue")?;
        for m in &self.queue {
            write!(f, " {m}")?;
        }
        write!(f, ") (expr {})", self.current)
    }
}

impl fmt::Display for Heap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(heap (counters {} {})", self.next_loc(), self.next_id())?;
        for (id, a) in &self.actors {
            write!(f, " (actor {} {a})", id.0)?;
        }
        f.write_str(")")
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok<'a> {
    Open,
    Close,
    Atom(&'a str),
}

struct Reader<'a> {
    toks: Vec<(usize, Tok<'a>)>,
    pos: usize,
    len: usize,
}

impl<'a> Reader<'a> {
    fn new(src: &'a str) -> Reader<'a> {
        let mut toks = Vec::new();
        let bytes = src.as_bytes();
        let mut i = 0;
        while i < bytes.len() {
            match bytes[i] {
                b'(' => {
                    toks.push((i, Tok::Open));
                    i += 1;
                }
                b')' => {
                    toks.push((i, Tok::Close));
                    i += 1;
                }
                c if c.is_ascii_whitespace() => i += 1,
                _ => {
                    let start = i;
                    while i < bytes.len() && !matches!(bytes[i], b'(' | b')') && !bytes[i].is_ascii_whitespace() {
                        i += 1;
                    }
                    toks.push((start, Tok::Atom(&src[start..i])));
                }
            }
        }
        Reader { toks, pos: 0, len: src.len() }
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map_or(self.len, |(o, _)| *o)
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T, TextError> {
        Err(TextError { offset: self.offset(), message: message.into() })
    }

    fn peek(&self) -> Option<&Tok<'a>> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn next(&mut self) -> Option<Tok<'a>> {
        let t = self.toks.get(self.pos).map(|(_, t)| t.clone());
        self.pos += 1;
        t
    }

    fn open(&mut self) -> Result<(), TextError> {
        match self.peek() {
            Some(Tok::Open) => {
                self.pos += 1;
                Ok(())
            }
            _ => self.err("expected `(`"),
        }
    }

    fn close(&mut self) -> Result<(), TextError> {
        match self.peek() {
            Some(Tok::Close) => {
                self.pos += 1;
                Ok(())
            }
            _ => self.err("expected `)`"),
        }
    }

    fn atom(&mut self) -> Result<&'a str, TextError> {
        match self.peek() {
            Some(Tok::Atom(a)) => {
                let a = *a;
                self.pos += 1;
                Ok(a)
            }
            _ => self.err("expected an atom"),
        }
    }

    fn keyword(&mut self, kw: &str) -> Result<(), TextError> {
        match self.peek() {
            Some(Tok::Atom(a)) if *a == kw => {
                self.pos += 1;
                Ok(())
            }
            _ => self.err(format!("expected `{kw}`")),
        }
    }

    fn number(&mut self) -> Result<u32, TextError> {
        let at = self.offset();
        let a = self.atom()?;
        a.parse().map_err(|_| TextError { offset: at, message: format!("expected a number, found `{a}`") })
    }

    fn finish(&self) -> Result<(), TextError> {
        if self.pos < self.toks.len() {
            return self.err("trailing input");
        }
        Ok(())
    }

    fn ident(&mut self) -> Result<&'a str, TextError> {
        let at = self.offset();
        let a = self.atom()?;
        if !is_ident(a) {
            return Err(TextError { offset: at, message: format!("`{a}` is not a variable name") });
        }
        Ok(a)
    }

    fn ty(&mut self) -> Result<Type, TextError> {
        match self.next() {
            Some(Tok::Atom("p")) => Ok(Type::Passive),
            Some(Tok::Atom("c")) => Ok(Type::Actor),
            Some(Tok::Atom("Unit")) => Ok(Type::Unit),
            Some(Tok::Open) => match self.atom()? {
                "B" => {
                    self.keyword("p")?;
                    self.close()?;
                    Ok(Type::Bestowed)
                }
                "->" => {
                    let d = self.ty()?;
                    let c = self.ty()?;
                    self.close()?;
                    Ok(Type::arrow(d, c))
                }
                other => self.err(format!("unknown type former `{other}`")),
            },
            _ => {
                self.pos -= 1;
                self.err("expected a type")
            }
        }
    }

    fn expr(&mut self) -> Result<Expr, TextError> {
        match self.peek() {
            Some(Tok::Atom("unit")) => {
                self.pos += 1;
                Ok(Expr::unit())
            }
            Some(Tok::Atom(_)) => Ok(Expr::var(self.ident()?)),
            Some(Tok::Open) => {
                let save = self.pos;
                self.pos += 1;
                let head = self.atom()?;
                let e = match head {
                    "app" => {
                        let a = self.expr()?;
                        let b = self.expr()?;
                        Expr::app(a, b)
                    }
                    "send" => {
                        let t = self.expr()?;
                        let m = self.value()?;
                        Expr::send(t, m)
                    }
                    "mutate" => Expr::mutate(self.expr()?),
                    "bestow" => Expr::bestow(self.expr()?),
                    "new" => match self.atom()? {
                        "p" => Expr::NewPassive,
                        "c" => Expr::NewActor,
                        other => return self.err(format!("cannot create `{other}`")),
                    },
                    _ => {
                        self.pos = save;
                        return Ok(Expr::Val(self.value()?));
                    }
                };
                self.close()?;
                Ok(e)
            }
            _ => self.err("expected an expression"),
        }
    }

    fn value(&mut self) -> Result<Value, TextError> {
        if let Some(Tok::Atom("unit")) = self.peek() {
            self.pos += 1;
            return Ok(Value::Unit);
        }
        self.open()?;
        let v = match self.atom()? {
            "fn" => {
                let x = self.ident()?;
                let ty = self.ty()?;
                let body = self.expr()?;
                Value::lambda(x, ty, body)
            }
            "id" => Value::Actor(ActorId(self.number()?)),
            "loc" => Value::Loc(Loc(self.number()?)),
            "bestowed" => {
                let l = self.number()?;
                let id = self.number()?;
                Value::Bestowed(Loc(l), ActorId(id))
            }
            other => return self.err(format!("unknown form `{other}`")),
        };
        self.close()?;
        Ok(v)
    }

    fn heap(&mut self) -> Result<Heap, TextError> {
        self.open()?;
        self.keyword("heap")?;
        let mut heap = Heap::new();
        let mut counters = None;
        while let Some(Tok::Open) = self.peek() {
            self.pos += 1;
            match self.atom()? {
                "counters" => {
                    counters = Some((self.number()?, self.number()?));
                    self.close()?;
                }
                "actor" => {
                    let id = ActorId(self.number()?);
                    let actor = self.actor()?;
                    self.close()?;
                    heap.insert(id, actor);
                }
                other => return self.err(format!("unknown heap entry `{other}`")),
            }
        }
        self.close()?;
        if let Some((l, i)) = counters {
            heap.set_counters(l.max(heap.next_loc()), i.max(heap.next_id()));
        }
        Ok(heap)
    }

    fn actor(&mut self) -> Result<Actor, TextError> {
        self.open()?;
        self.keyword("this")?;
        let this = Loc(self.number()?);
        self.close()?;
        self.open()?;
        self.keyword("local")?;
        let mut local = BTreeSet::new();
        while let Some(Tok::Atom(_)) = self.peek() {
            local.insert(Loc(self.number()?));
        }
        self.close()?;
        self.open()?;
        self.keyword("queue")?;
        let mut queue = VecDeque::new();
        while !matches!(self.peek(), Some(Tok::Close) | None) {
            queue.push_back(self.value()?);
        }
        self.close()?;
        self.open()?;
        self.keyword("expr")?;
        let current = self.expr()?;
        self.close()?;
        Ok(Actor { this, local, queue, current })
    }
}

const RESERVED: &[&str] = &["unit", "app", "send", "mutate", "new", "bestow", "fn", "id", "loc", "bestowed"];

fn is_ident(a: &str) -> bool {
    !RESERVED.contains(&a) && !a.chars().next().is_some_and(|c| c.is_ascii_digit()) && !a.contains([':', ',', '|'])
}

pub fn parse_expr(src: &str) -> Result<Expr, TextError> {
    let mut r = Reader::new(src);
    let e = r.expr()?;
    r.finish()?;
    Ok(e)
}

pub fn parse_value(src: &str) -> Result<Value, TextError> {
    let mut r = Reader::new(src);
    let v = r.value()?;
    r.finish()?;
    Ok(v)
}

pub fn parse_type(src: &str) -> Result<Type, TextError> {
    let mut r = Reader::new(src);
    let t = r.ty()?;
    r.finish()?;
    Ok(t)
}

pub fn parse_heap(src: &str) -> Result<Heap, TextError> {
    let mut r = Reader::new(src);
    let h = r.heap()?;
    r.finish()?;
    Ok(h)
}

/// Parses a type environment written `x:p, a:c, f:(-> p Unit)`.
pub fn parse_env(src: &str) -> Result<TypeEnv, TextError> {
    let mut env = TypeEnv::new();
    let mut offset = 0;
    for binding in src.split(',') {
        let trimmed = binding.trim();
        if !trimmed.is_empty() {
            let (name, ty) = trimmed
                .split_once(':')
                .ok_or_else(|| TextError { offset, message: format!("expected `name:type`, found `{trimmed}`") })?;
            let ty = parse_type(ty.trim()).map_err(|e| TextError { offset: offset + e.offset, ..e })?;
            env = env.extend(name.trim(), ty);
        }
        offset += binding.len() + 1;
    }
    Ok(env)
}

impl FromStr for Expr {
    type Err = TextError;
    fn from_str(s: &str) -> Result<Expr, TextError> {
        parse_expr(s)
    }
}

impl FromStr for Type {
    type Err = TextError;
    fn from_str(s: &str) -> Result<Type, TextError> {
        parse_type(s)
    }
}

impl FromStr for Heap {
    type Err = TextError;
    fn from_str(s: &str) -> Result<Heap, TextError> {
        parse_heap(s)
    }
}
