//! Syntax-directed typechecker.
//!
//! Exactly one rule applies to each expression form. Failures name the rule
//! whose premise was violated; sub-terms are checked left to right before the
//! premises of the enclosing rule, so the reported error is the
//! leftmost-innermost one.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::syntax::{Expr, Name, Type, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Rule {
    Var,
    Apply,
    NewPassive,
    NewActor,
    Mutate,
    Bestow,
    Send,
    Fn,
    Unit,
    Loc,
    Id,
    Bestowed,
}

impl Rule {
    pub const ALL: [Rule; 12] = [
        Rule::Var,
        Rule::Apply,
        Rule::NewPassive,
        Rule::NewActor,
        Rule::Mutate,
        Rule::Bestow,
        Rule::Send,
        Rule::Fn,
        Rule::Unit,
        Rule::Loc,
        Rule::Id,
        Rule::Bestowed,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Rule::Var => "e-var",
            Rule::Apply => "e-apply",
            Rule::NewPassive => "e-new-passive",
            Rule::NewActor => "e-new-actor",
            Rule::Mutate => "e-mutate",
            Rule::Bestow => "e-bestow",
            Rule::Send => "e-send",
            Rule::Fn => "e-fn",
            Rule::Unit => "e-unit",
            Rule::Loc => "e-loc",
            Rule::Id => "e-id",
            Rule::Bestowed => "e-bestowed",
        }
    }

    /// The rule that types the outermost node of `e`.
    pub fn for_expr(e: &Expr) -> Rule {
        match e {
            Expr::Var(_) => Rule::Var,
            Expr::App(..) => Rule::Apply,
            Expr::Send(..) => Rule::Send,
            Expr::Mutate(_) => Rule::Mutate,
            Expr::NewPassive => Rule::NewPassive,
            Expr::NewActor => Rule::NewActor,
            Expr::Bestow(_) => Rule::Bestow,
            Expr::Val(Value::Lambda { .. }) => Rule::Fn,
            Expr::Val(Value::Unit) => Rule::Unit,
            Expr::Val(Value::Loc(_)) => Rule::Loc,
            Expr::Val(Value::Actor(_)) => Rule::Id,
            Expr::Val(Value::Bestowed(..)) => Rule::Bestowed,
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("[{rule}] {message} in `{expr}`")]
pub struct TypeError {
    pub rule: Rule,
    pub expr: Expr,
    pub message: String,
}

impl TypeError {
    fn new(rule: Rule, expr: &Expr, message: impl Into<String>) -> TypeError {
        TypeError { rule, expr: expr.clone(), message: message.into() }
    }
}

/// Maps variables to types; extending with a bound name replaces it.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TypeEnv {
    bindings: BTreeMap<Name, Type>,
}

impl TypeEnv {
    pub fn new() -> TypeEnv {
        TypeEnv::default()
    }

    pub fn extend(&self, name: impl Into<Name>, ty: Type) -> TypeEnv {
        let mut out = self.clone();
        out.bindings.insert(name.into(), ty);
        out
    }

    pub fn get(&self, name: &str) -> Option<&Type> {
        self.bindings.get(name)
    }

    pub fn is_empty(&self) -> bool {
        self.bindings.is_empty()
    }

    pub fn len(&self) -> usize {
        self.bindings.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Name, &Type)> {
        self.bindings.iter()
    }

    /// The active part of the environment: only actor and bestowed bindings
    /// may be captured by a message body.
    pub fn restrict_active(&self) -> TypeEnv {
        TypeEnv {
            bindings: self
                .bindings
                .iter()
                .filter(|(_, t)| t.is_active())
                .map(|(k, t)| (k.clone(), t.clone()))
                .collect(),
        }
    }
}

impl<N: Into<Name>> FromIterator<(N, Type)> for TypeEnv {
    fn from_iter<I: IntoIterator<Item = (N, Type)>>(iter: I) -> TypeEnv {
        TypeEnv { bindings: iter.into_iter().map(|(n, t)| (n.into(), t)).collect() }
    }
}

impl fmt::Display for TypeEnv {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (x, t)) in self.bindings.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{x}:{t}")?;
        }
        Ok(())
    }
}

pub fn restrict_active(env: &TypeEnv) -> TypeEnv {
    env.restrict_active()
}

pub fn typecheck(env: &TypeEnv, e: &Expr) -> Result<Type, TypeError> {
    match e {
        Expr::Var(x) => {
            env.get(x).cloned().ok_or_else(|| TypeError::new(Rule::Var, e, format!("unbound variable `{x}`")))
        }
        Expr::App(fun, arg) => {
            let tf = typecheck(env, fun)?;
            let ta = typecheck(env, arg)?;
            match tf {
                Type::Arrow(dom, cod) if *dom == ta => Ok(*cod),
                Type::Arrow(dom, _) => {
                    Err(TypeError::new(Rule::Apply, e, format!("argument has type {ta}, expected {dom}")))
                }
                other => Err(TypeError::new(Rule::Apply, e, format!("cannot apply a value of type {other}"))),
            }
        }
        Expr::NewPassive => Ok(Type::Passive),
        Expr::NewActor => Ok(Type::Actor),
        Expr::Mutate(target) => match typecheck(env, target)? {
            Type::Passive => Ok(Type::Unit),
            other => {
                Err(TypeError::new(Rule::Mutate, e, format!("only passive objects can be mutated, found {other}")))
            }
        },
        Expr::Bestow(inner) => match typecheck(env, inner)? {
            Type::Passive => Ok(Type::Bestowed),
            other => {
                Err(TypeError::new(Rule::Bestow, e, format!("only passive objects can be bestowed, found {other}")))
            }
        },
        Expr::Send(target, msg) => {
            let tt = typecheck(env, target)?;
            if !tt.is_active() {
                return Err(TypeError::new(Rule::Send, e, format!("receiver has non-active type {tt}")));
            }
            let Value::Lambda { param, ty, body } = msg else {
                return Err(TypeError::new(Rule::Send, e, "message must be an anonymous function"));
            };
            if *ty != Type::Passive {
                return Err(TypeError::new(Rule::Send, e, format!("message parameter must have type p, found {ty}")));
            }
            for x in body.free_vars() {
                if x == *param {
                    continue;
                }
                if let Some(t) = env.get(&x).filter(|t| !t.is_active()) {
                    return Err(TypeError::new(
                        Rule::Send,
                        e,
                        format!("message captures `{x}` of non-active type {t}"),
                    ));
                }
            }
            typecheck(&env.restrict_active().extend(param.clone(), Type::Passive), body)?;
            if body.contains_loc() {
                return Err(TypeError::new(Rule::Send, e, "message body contains a passive location"));
            }
            Ok(Type::Unit)
        }
        Expr::Val(v) => typecheck_value(env, v),
    }
}

fn typecheck_value(env: &TypeEnv, v: &Value) -> Result<Type, TypeError> {
    match v {
        Value::Lambda { param, ty, body } => {
            let cod = typecheck(&env.extend(param.clone(), ty.clone()), body)?;
            Ok(Type::arrow(ty.clone(), cod))
        }
        Value::Unit => Ok(Type::Unit),
        Value::Loc(_) => Ok(Type::Passive),
        Value::Actor(_) => Ok(Type::Actor),
        Value::Bestowed(..) => Ok(Type::Bestowed),
    }
}
