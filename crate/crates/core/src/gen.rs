//! Goal-directed generation of closed, well-typed programs.
//!
//! Terms are built top-down from a goal type, choosing only productions
//! whose typing rule yields that type and whose smallest instance still
//! fits the remaining size budget. Message bodies are generated under the
//! active part of the environment, so every emitted send satisfies the
//! capture restriction by construction.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::syntax::{Expr, Type, Value};
use crate::typeck::{typecheck, TypeEnv};

/// Relative frequencies of the productions.
#[derive(Clone, Debug)]
pub struct Weights {
    pub var: u32,
    pub unit: u32,
    pub new_passive: u32,
    pub new_actor: u32,
    pub mutate: u32,
    pub bestow: u32,
    pub send: u32,
    pub let_in: u32,
    pub lambda: u32,
}

impl Default for Weights {
    fn default() -> Weights {
        Weights { var: 4, unit: 1, new_passive: 2, new_actor: 2, mutate: 4, bestow: 3, send: 6, let_in: 6, lambda: 1 }
    }
}

#[derive(Clone, Debug)]
pub struct GenConfig {
    pub weights: Weights,
    /// Attempts before giving up with [`GenError::GenerationFailed`].
    pub retries: usize,
}

impl Default for GenConfig {
    fn default() -> GenConfig {
        GenConfig { weights: Weights::default(), retries: 8 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GenError {
    #[error("size budget must be at least 1")]
    EmptyBudget,
    #[error("no well-typed program found after {attempts} attempts (seed {seed})")]
    GenerationFailed { seed: u64, attempts: usize },
}

/// A closed program accepted by the typechecker, with its type.
pub fn generate_well_typed(seed: u64, size_budget: usize) -> Result<(Expr, Type), GenError> {
    generate_with(seed, size_budget, &GenConfig::default())
}

pub fn generate_with(seed: u64, size_budget: usize, config: &GenConfig) -> Result<(Expr, Type), GenError> {
    if size_budget == 0 {
        return Err(GenError::EmptyBudget);
    }
    for attempt in 0..config.retries.max(1) {
        let mut g =
            Generator { rng: ChaCha8Rng::seed_from_u64(seed.wrapping_add(attempt as u64 * 0x9e37_79b9)), config };
        let env = TypeEnv::new();
        let goals: Vec<Type> = goal_types().into_iter().filter(|t| min_size(&env, t) <= size_budget).collect();
        let goal = goals.choose(&mut g.rng).expect("unit always fits").clone();
        let e = g.gen(&env, &goal, size_budget);
        if typecheck(&env, &e).as_ref() == Ok(&goal) && e.size() <= size_budget {
            return Ok((e, goal));
        }
    }
    Err(GenError::GenerationFailed { seed, attempts: config.retries.max(1) })
}

fn goal_types() -> Vec<Type> {
    vec![Type::Unit, Type::Unit, Type::Passive, Type::Actor, Type::Bestowed, Type::arrow(Type::Passive, Type::Unit)]
}

/// Types a `let` may bind.
fn binder_types() -> [Type; 4] {
    [Type::Actor, Type::Passive, Type::Bestowed, Type::Unit]
}

/// Size of the smallest term of type `ty` under `env`.
fn min_size(env: &TypeEnv, ty: &Type) -> usize {
    if env.iter().any(|(_, t)| t == ty) {
        return 1;
    }
    match ty {
        Type::Unit | Type::Passive | Type::Actor => 1,
        Type::Bestowed => 2,
        Type::Arrow(d, c) => 1 + min_size(&env.extend("_", (**d).clone()), c),
    }
}

#[derive(Clone, Copy, Debug)]
enum Production {
    Var,
    Unit,
    NewPassive,
    NewActor,
    Mutate,
    Bestow,
    Send,
    Let,
    Lambda,
}

struct Generator<'a> {
    rng: ChaCha8Rng,
    config: &'a GenConfig,
}

impl Generator<'_> {
    /// A term of type `ty` no larger than `budget`; `budget >= min_size`.
    fn gen(&mut self, env: &TypeEnv, ty: &Type, budget: usize) -> Expr {
        let w = &self.config.weights;
        let has_var = env.iter().any(|(_, t)| t == ty);
        // Leaves become rarer as the budget grows so larger budgets yield
        // larger programs.
        let leaf = |weight: u32| if budget > 3 { weight.div_ceil(3) } else { weight };
        let mut options: Vec<(Production, u32)> = Vec::new();
        if has_var {
            options.push((Production::Var, leaf(w.var)));
        }
        match ty {
            Type::Unit => {
                options.push((Production::Unit, leaf(w.unit)));
                if budget > min_size(env, &Type::Passive) {
                    options.push((Production::Mutate, w.mutate));
                }
                if budget >= self.min_send(env) {
                    options.push((Production::Send, w.send));
                }
            }
            Type::Passive => options.push((Production::NewPassive, leaf(w.new_passive))),
            Type::Actor => options.push((Production::NewActor, leaf(w.new_actor))),
            Type::Bestowed => {
                if budget > min_size(env, &Type::Passive) {
                    options.push((Production::Bestow, w.bestow));
                }
            }
            Type::Arrow(dom, cod) => {
                if budget > min_size(&env.extend("_", (**dom).clone()), cod) {
                    options.push((Production::Lambda, w.lambda.max(1)));
                }
            }
        }
        // let x:σ = e1 in e2  ==  (λx:σ. e2) e1, at least 4 nodes.
        if budget >= 4 && !matches!(ty, Type::Arrow(..)) {
            options.push((Production::Let, w.let_in));
        }
        options.retain(|(_, weight)| *weight > 0);
        let production = options.choose_weighted(&mut self.rng, |(_, weight)| *weight).map(|(p, _)| *p);
        match production.unwrap_or(Production::Var) {
            Production::Var => {
                let vars: Vec<_> = env.iter().filter(|(_, t)| *t == ty).map(|(x, _)| x.clone()).collect();
                match vars.choose(&mut self.rng) {
                    Some(x) => Expr::Var(x.clone()),
                    None => self.minimal(env, ty),
                }
            }
            Production::Unit => Expr::unit(),
            Production::NewPassive => Expr::NewPassive,
            Production::NewActor => Expr::NewActor,
            Production::Mutate => Expr::mutate(self.gen(env, &Type::Passive, budget - 1)),
            Production::Bestow => Expr::bestow(self.gen(env, &Type::Passive, budget - 1)),
            Production::Send => self.gen_send(env, budget),
            Production::Let => self.gen_let(env, ty, budget),
            Production::Lambda => {
                let Type::Arrow(dom, cod) = ty else { unreachable!() };
                let x = self.fresh(env);
                let inner = env.extend(x.as_str(), (**dom).clone());
                Expr::lambda(&x, (**dom).clone(), self.gen(&inner, cod, budget - 1))
            }
        }
    }

    fn minimal(&mut self, env: &TypeEnv, ty: &Type) -> Expr {
        self.gen(env, ty, min_size(env, ty))
    }

    fn fresh(&mut self, env: &TypeEnv) -> String {
        (0..).map(|i| format!("x{i}")).find(|x| env.get(x).is_none()).expect("infinite supply")
    }

    fn min_send(&self, env: &TypeEnv) -> usize {
        // target + send node + lambda node + smallest body
        let target = min_size(env, &Type::Actor).min(min_size(env, &Type::Bestowed));
        target + 3
    }

    /// Splits `total` into a part of at least `lo` for the first child,
    /// leaving at least `rest_min` for the rest.
    fn split(&mut self, total: usize, lo: usize, rest_min: usize) -> usize {
        let hi = total - rest_min;
        if hi <= lo {
            lo
        } else {
            self.rng.gen_range(lo..=hi)
        }
    }

    fn gen_send(&mut self, env: &TypeEnv, budget: usize) -> Expr {
        let mut targets = vec![Type::Actor, Type::Bestowed];
        targets.retain(|t| min_size(env, t) + 3 <= budget);
        let target_ty = targets.choose(&mut self.rng).expect("checked by min_send").clone();
        let avail = budget - 2;
        let target_budget = self.split(avail, min_size(env, &target_ty), 1);
        let target = self.gen(env, &target_ty, target_budget);
        let x = self.fresh(env);
        let body_env = env.restrict_active().extend(x.as_str(), Type::Passive);
        let body_budget = avail - target.size();
        let bodies: Vec<Type> = binder_types().into_iter().filter(|t| min_size(&body_env, t) <= body_budget).collect();
        let body_ty = if self.rng.gen_bool(0.6) {
            Type::Unit
        } else {
            bodies.choose(&mut self.rng).cloned().unwrap_or(Type::Unit)
        };
        let body = self.gen(&body_env, &body_ty, body_budget);
        Expr::send(target, Value::lambda(&x, Type::Passive, body))
    }

    fn gen_let(&mut self, env: &TypeEnv, ty: &Type, budget: usize) -> Expr {
        let x = self.fresh(env);
        let avail = budget - 2;
        let candidates: Vec<Type> = binder_types()
            .into_iter()
            .filter(|s| min_size(env, s) + min_size(&env.extend(x.as_str(), s.clone()), ty) <= avail)
            .collect();
        let Some(bound_ty) = candidates.choose(&mut self.rng).cloned() else {
            return self.minimal(env, ty);
        };
        let inner = env.extend(x.as_str(), bound_ty.clone());
        let arg_budget = self.split(avail, min_size(env, &bound_ty), min_size(&inner, ty));
        let arg = self.gen(env, &bound_ty, arg_budget);
        let body = self.gen(&inner, ty, avail - arg.size());
        Expr::app(Expr::lambda(&x, bound_ty, body), arg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn budget_one_yields_smallest_terms() {
        for seed in 0..200 {
            let (e, _) = generate_well_typed(seed, 1).unwrap();
            assert!(matches!(e, Expr::Val(Value::Unit) | Expr::NewPassive | Expr::NewActor), "{e}");
        }
    }

    #[test]
    fn outputs_typecheck_and_fit_budget() {
        for seed in 0..500 {
            let budget = 1 + (seed as usize % 15);
            let (e, ty) = generate_well_typed(seed, budget).unwrap();
            assert!(e.is_closed());
            assert!(e.size() <= budget, "{e} exceeds {budget}");
            assert_eq!(typecheck(&TypeEnv::new(), &e), Ok(ty));
        }
    }

    #[test]
    fn same_seed_same_program() {
        assert_eq!(generate_well_typed(42, 12), generate_well_typed(42, 12));
    }

    #[test]
    fn zero_budget_is_rejected() {
        assert_eq!(generate_well_typed(0, 0), Err(GenError::EmptyBudget));
    }

    #[test]
    fn generator_reaches_every_construct() {
        let mut seen = [false; 4];
        for seed in 0..300 {
            let (e, _) = generate_well_typed(seed, 12).unwrap();
            let text = e.to_string();
            seen[0] |= text.contains("(send");
            seen[1] |= text.contains("(bestow");
            seen[2] |= text.contains("(mutate");
            seen[3] |= text.contains("(new c)");
        }
        assert_eq!(seen, [true; 4]);
    }
}
