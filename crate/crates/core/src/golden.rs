//! Line-oriented typing judgments for conformance suites.
//!
//! Each non-blank line not starting with `#` reads
//! `env |- expr => type` or `env |- expr => error rule`, with the
//! environment written as for [`parse_env`] (possibly empty).

use crate::text::{parse_env, parse_expr};
use crate::typeck::typecheck;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Case {
    pub line: usize,
    pub source: String,
    pub expected: String,
    /// The checker's answer in the same notation, or a parse error.
    pub actual: String,
}

impl Case {
    pub fn passed(&self) -> bool {
        self.expected == self.actual
    }
}

/// Checks every judgment in `src`.
pub fn run(src: &str) -> Vec<Case> {
    src.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
        .map(|(i, l)| {
            let (judgment, expected) = l.rsplit_once("=>").unwrap_or((l, ""));
            Case { line: i + 1, source: l.to_string(), expected: expected.trim().to_string(), actual: judge(judgment) }
        })
        .collect()
}

fn judge(judgment: &str) -> String {
    let Some((env, expr)) = judgment.split_once("|-") else {
        return "malformed: missing `|-`".into();
    };
    let env = match parse_env(env) {
        Ok(env) => env,
        Err(e) => return format!("malformed environment: {e}"),
    };
    let expr = match parse_expr(expr.trim()) {
        Ok(e) => e,
        Err(e) => return format!("malformed expression: {e}"),
    };
    match typecheck(&env, &expr) {
        Ok(ty) => ty.to_string(),
        Err(err) => format!("error {}", err.rule),
    }
}
