//! Abstract syntax of the calculus: expressions, values and types.
//!
//! Locations, actor identifiers and bestowed locations are dynamic values.
//! They only arise during evaluation (or in hand-built heaps); the surface
//! parser never produces them.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

/// Variable names. Cheap to clone since terms are copied on every step.
pub type Name = Arc<str>;

/// Identifier of an actor in a heap.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ActorId(pub u32);

/// Location of a passive object.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Loc(pub u32);

impl fmt::Display for ActorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(id {})", self.0)
    }
}

impl fmt::Display for Loc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(loc {})", self.0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Type {
    /// `p`: every passive object has this type.
    Passive,
    /// `c`: every actor has this type.
    Actor,
    /// `B(p)`: a bestowed passive object.
    Bestowed,
    Arrow(Box<Type>, Box<Type>),
    Unit,
}

impl Type {
    pub fn arrow(dom: Type, cod: Type) -> Type {
        Type::Arrow(Box::new(dom), Box::new(cod))
    }

    /// Active types are the ones a message can be sent to.
    pub fn is_active(&self) -> bool {
        matches!(self, Type::Actor | Type::Bestowed)
    }
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Type::Passive => f.write_str("p"),
            Type::Actor => f.write_str("c"),
            Type::Bestowed => f.write_str("(B p)"),
            Type::Arrow(d, c) => write!(f, "(-> {d} {c})"),
            Type::Unit => f.write_str("Unit"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Value {
    Lambda {
        param: Name,
        ty: Type,
        body: Box<Expr>,
    },
    Unit,
    Actor(ActorId),
    Loc(Loc),
    /// A location bestowed by the given actor.
    Bestowed(Loc, ActorId),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Expr {
    Var(Name),
    App(Box<Expr>, Box<Expr>),
    /// `e ! v`: the message is always a value.
    Send(Box<Expr>, Value),
    Mutate(Box<Expr>),
    NewPassive,
    NewActor,
    Bestow(Box<Expr>),
    Val(Value),
}

impl Value {
    pub fn lambda(param: &str, ty: Type, body: Expr) -> Value {
        Value::Lambda { param: param.into(), ty, body: Box::new(body) }
    }

    pub fn is_lambda(&self) -> bool {
        matches!(self, Value::Lambda { .. })
    }
}

impl From<Value> for Expr {
    fn from(v: Value) -> Expr {
        Expr::Val(v)
    }
}

impl Expr {
    pub fn var(name: &str) -> Expr {
        Expr::Var(name.into())
    }

    pub fn unit() -> Expr {
        Expr::Val(Value::Unit)
    }

    pub fn app(fun: Expr, arg: Expr) -> Expr {
        Expr::App(Box::new(fun), Box::new(arg))
    }

    pub fn send(target: Expr, msg: Value) -> Expr {
        Expr::Send(Box::new(target), msg)
    }

    pub fn mutate(target: Expr) -> Expr {
        Expr::Mutate(Box::new(target))
    }

    pub fn bestow(inner: Expr) -> Expr {
        Expr::Bestow(Box::new(inner))
    }

    pub fn lambda(param: &str, ty: Type, body: Expr) -> Expr {
        Expr::Val(Value::lambda(param, ty, body))
    }

    pub fn is_value(&self) -> bool {
        matches!(self, Expr::Val(_))
    }

    pub fn as_value(&self) -> Option<&Value> {
        match self {
            Expr::Val(v) => Some(v),
            _ => None,
        }
    }

    /// Number of syntax nodes. A lambda counts one node plus its body.
    pub fn size(&self) -> usize {
        match self {
            Expr::Var(_) | Expr::NewPassive | Expr::NewActor => 1,
            Expr::App(f, a) => 1 + f.size() + a.size(),
            Expr::Send(t, m) => 1 + t.size() + m.size(),
            Expr::Mutate(e) | Expr::Bestow(e) => 1 + e.size(),
            Expr::Val(v) => v.size(),
        }
    }

    /// Free variables under the usual lambda binding.
    pub fn free_vars(&self) -> BTreeSet<Name> {
        let mut out = BTreeSet::new();
        let mut bound = Vec::new();
        collect_free(self, &mut bound, &mut out);
        out
    }

    pub fn is_closed(&self) -> bool {
        self.free_vars().is_empty()
    }

    /// True iff a bare location occurs anywhere in the term, including
    /// inside lambda bodies. Bestowed locations do not count.
    pub fn contains_loc(&self) -> bool {
        let mut found = false;
        self.for_each_value(&mut |v| found |= matches!(v, Value::Loc(_)));
        found
    }

    /// Capture-avoiding substitution of `v` for the free occurrences of `name`.
    pub fn subst(&self, name: &str, v: &Value) -> Expr {
        let replacement = Expr::Val(v.clone());
        let fv = v.free_vars();
        subst_expr(self, name, &replacement, &fv)
    }

    /// Visits every value in the term in left-to-right order, descending into
    /// lambda bodies after the lambda itself.
    pub fn for_each_value(&self, f: &mut impl FnMut(&Value)) {
        match self {
            Expr::Var(_) | Expr::NewPassive | Expr::NewActor => {}
            Expr::App(a, b) => {
                a.for_each_value(f);
                b.for_each_value(f);
            }
            Expr::Send(t, m) => {
                t.for_each_value(f);
                m.for_each_value(f);
            }
            Expr::Mutate(e) | Expr::Bestow(e) => e.for_each_value(f),
            Expr::Val(v) => v.for_each_value(f),
        }
    }

    /// Renames every actor identifier and location in the term.
    pub fn rename(&self, ids: &impl Fn(ActorId) -> ActorId, locs: &impl Fn(Loc) -> Loc) -> Expr {
        match self {
            Expr::Var(_) | Expr::NewPassive | Expr::NewActor => self.clone(),
            Expr::App(a, b) => Expr::app(a.rename(ids, locs), b.rename(ids, locs)),
            Expr::Send(t, m) => Expr::send(t.rename(ids, locs), m.rename(ids, locs)),
            Expr::Mutate(e) => Expr::mutate(e.rename(ids, locs)),
            Expr::Bestow(e) => Expr::bestow(e.rename(ids, locs)),
            Expr::Val(v) => Expr::Val(v.rename(ids, locs)),
        }
    }
}

impl Value {
    pub fn size(&self) -> usize {
        match self {
            Value::Lambda { body, .. } => 1 + body.size(),
            _ => 1,
        }
    }

    pub fn free_vars(&self) -> BTreeSet<Name> {
        Expr::Val(self.clone()).free_vars()
    }

    pub fn for_each_value(&self, f: &mut impl FnMut(&Value)) {
        f(self);
        if let Value::Lambda { body, .. } = self {
            body.for_each_value(f);
        }
    }

    pub fn rename(&self, ids: &impl Fn(ActorId) -> ActorId, locs: &impl Fn(Loc) -> Loc) -> Value {
        match self {
            Value::Lambda { param, ty, body } => {
                Value::Lambda { param: param.clone(), ty: ty.clone(), body: Box::new(body.rename(ids, locs)) }
            }
            Value::Unit => Value::Unit,
            Value::Actor(id) => Value::Actor(ids(*id)),
            Value::Loc(l) => Value::Loc(locs(*l)),
            Value::Bestowed(l, id) => Value::Bestowed(locs(*l), ids(*id)),
        }
    }
}

fn collect_free(e: &Expr, bound: &mut Vec<Name>, out: &mut BTreeSet<Name>) {
    match e {
        Expr::Var(x) => {
            if !bound.iter().any(|b| b == x) {
                out.insert(x.clone());
            }
        }
        Expr::App(a, b) => {
            collect_free(a, bound, out);
            collect_free(b, bound, out);
        }
        Expr::Send(t, m) => {
            collect_free(t, bound, out);
            collect_free_value(m, bound, out);
        }
        Expr::Mutate(e) | Expr::Bestow(e) => collect_free(e, bound, out),
        Expr::NewPassive | Expr::NewActor => {}
        Expr::Val(v) => collect_free_value(v, bound, out),
    }
}

fn collect_free_value(v: &Value, bound: &mut Vec<Name>, out: &mut BTreeSet<Name>) {
    if let Value::Lambda { param, body, .. } = v {
        bound.push(param.clone());
        collect_free(body, bound, out);
        bound.pop();
    }
}

/// Substitutes an arbitrary expression; used with values and, for
/// alpha-renaming, with variables. `fv` is the free-variable set of the
/// replacement.
fn subst_expr(e: &Expr, name: &str, with: &Expr, fv: &BTreeSet<Name>) -> Expr {
    match e {
        Expr::Var(x) if &**x == name => with.clone(),
        Expr::Var(_) | Expr::NewPassive | Expr::NewActor => e.clone(),
        Expr::App(a, b) => Expr::app(subst_expr(a, name, with, fv), subst_expr(b, name, with, fv)),
        Expr::Send(t, m) => Expr::send(subst_expr(t, name, with, fv), subst_value(m, name, with, fv)),
        Expr::Mutate(inner) => Expr::mutate(subst_expr(inner, name, with, fv)),
        Expr::Bestow(inner) => Expr::bestow(subst_expr(inner, name, with, fv)),
        Expr::Val(v) => Expr::Val(subst_value(v, name, with, fv)),
    }
}

fn subst_value(v: &Value, name: &str, with: &Expr, fv: &BTreeSet<Name>) -> Value {
    let Value::Lambda { param, ty, body } = v else {
        return v.clone();
    };
    if &**param == name {
        return v.clone();
    }
    let body_fv = body.free_vars();
    if !body_fv.contains(name) {
        return v.clone();
    }
    if fv.contains(param) {
        let fresh = fresh_name(param, |n| fv.contains(n) || body_fv.contains(n) || n == name);
        let renamed = subst_expr(body, param, &Expr::Var(fresh.clone()), &BTreeSet::from([fresh.clone()]));
        return Value::Lambda { param: fresh, ty: ty.clone(), body: Box::new(subst_expr(&renamed, name, with, fv)) };
    }
    Value::Lambda { param: param.clone(), ty: ty.clone(), body: Box::new(subst_expr(body, name, with, fv)) }
}

/// Appends primes to `base` until the name is no longer taken.
pub fn fresh_name(base: &str, taken: impl Fn(&str) -> bool) -> Name {
    let mut candidate = format!("{base}'");
    while taken(&candidate) {
        candidate.push('\'');
    }
    candidate.into()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lam(x: &str, body: Expr) -> Expr {
        Expr::lambda(x, Type::Passive, body)
    }

    fn names(xs: &[&str]) -> BTreeSet<Name> {
        xs.iter().map(|x| Name::from(*x)).collect()
    }

    #[test]
    fn free_vars_of_closed_and_open_lambdas() {
        assert_eq!(lam("x", Expr::var("x")).free_vars(), names(&[]));
        assert_eq!(lam("x", Expr::var("y")).free_vars(), names(&["y"]));
    }

    #[test]
    fn free_vars_of_application_under_binder() {
        // (λx:p. x y) y
        let e = Expr::app(lam("x", Expr::app(Expr::var("x"), Expr::var("y"))), Expr::var("y"));
        assert_eq!(e.free_vars(), names(&["y"]));
    }

    #[test]
    fn free_vars_through_send_message() {
        let e = Expr::send(Expr::var("a"), Value::lambda("x", Type::Passive, Expr::var("b")));
        assert_eq!(e.free_vars(), names(&["a", "b"]));
    }

    #[test]
    fn contains_loc_cases() {
        assert!(Expr::Val(Value::Loc(Loc(1))).contains_loc());
        assert!(!Expr::Val(Value::Bestowed(Loc(1), ActorId(1))).contains_loc());
        let msg = lam("x", Expr::send(Expr::var("x"), Value::Unit));
        assert!(!msg.contains_loc());
        let nested = lam("x", Expr::mutate(Expr::Val(Value::Loc(Loc(4)))));
        assert!(nested.contains_loc());
    }

    #[test]
    fn subst_examples() {
        assert_eq!(Expr::var("x").subst("x", &Value::Unit), Expr::unit());
        let shadowed = lam("x", Expr::var("x"));
        assert_eq!(shadowed.subst("x", &Value::Unit), shadowed);
        let send = Expr::send(Expr::var("x"), Value::Unit);
        assert_eq!(
            send.subst("x", &Value::Actor(ActorId(1))),
            Expr::send(Expr::Val(Value::Actor(ActorId(1))), Value::Unit)
        );
    }

    #[test]
    fn subst_renames_to_avoid_capture() {
        // (λy:p. x)[x := λz:p. y] must not capture the free y.
        let open = Value::lambda("z", Type::Passive, Expr::var("y"));
        let e = lam("y", Expr::var("x"));
        let out = e.subst("x", &open);
        let Expr::Val(Value::Lambda { param, body, .. }) = &out else { panic!("{out:?}") };
        assert_ne!(&**param, "y");
        assert_eq!(**body, Expr::Val(open.clone()));
        assert_eq!(out.free_vars(), names(&["y"]));
    }

    #[test]
    fn active_types() {
        assert!(Type::Actor.is_active());
        assert!(Type::Bestowed.is_active());
        assert!(!Type::Passive.is_active());
        assert!(!Type::Unit.is_active());
        assert!(!Type::arrow(Type::Actor, Type::Actor).is_active());
    }
}
