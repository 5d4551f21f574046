//! Lexer and recursive-descent parser for the surface syntax.

use std::fmt;

use super::ast::{AtomicBlock, SExpr, Stmt, SurfaceProgram};
use crate::syntax::{Name, Type};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostic {
    /// 1-based.
    pub line: usize,
    /// 1-based, in characters.
    pub column: usize,
    pub severity: Severity,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{}:{}: {}: {}", self.line, self.column, sev, self.message)
    }
}

#[derive(Clone, Debug)]
pub struct ParseOptions {
    /// Maximum number of statements in one `atomic` block.
    pub batch_cap: usize,
}

impl Default for ParseOptions {
    fn default() -> ParseOptions {
        ParseOptions { batch_cap: super::DEFAULT_BATCH_CAP }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Number(String),
    Val,
    Atomic,
    New,
    Bestow,
    Mutate,
    TyP,
    TyC,
    TyB,
    TyUnit,
    LParen,
    RParen,
    LBrace,
    RBrace,
    Semi,
    Newline,
    Bang,
    Dot,
    Colon,
    Eq,
    LArrow,
    Arrow,
    Lambda,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Tok::Ident(x) => return write!(f, "`{x}`"),
            Tok::Number(n) => return write!(f, "`{n}`"),
            Tok::Val => "`val`",
            Tok::Atomic => "`atomic`",
            Tok::New => "`new`",
            Tok::Bestow => "`bestow`",
            Tok::Mutate => "`mutate`",
            Tok::TyP => "`p`",
            Tok::TyC => "`c`",
            Tok::TyB => "`B`",
            Tok::TyUnit => "`Unit`",
            Tok::LParen => "`(`",
            Tok::RParen => "`)`",
            Tok::LBrace => "`{`",
            Tok::RBrace => "`}`",
            Tok::Semi => "`;`",
            Tok::Newline => "end of line",
            Tok::Bang => "`!`",
            Tok::Dot => "`.`",
            Tok::Colon => "`:`",
            Tok::Eq => "`=`",
            Tok::LArrow => "`<-`",
            Tok::Arrow => "`->`",
            Tok::Lambda => "`\\`",
            Tok::Eof => "end of input",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    line: usize,
    column: usize,
}

fn error(line: usize, column: usize, message: impl Into<String>) -> Diagnostic {
    Diagnostic { line, column, severity: Severity::Error, message: message.into() }
}

/// Newlines inside parentheses are dropped; inside braces and at the top
/// level they separate statements.
fn lex(src: &str) -> Result<Vec<Token>, Diagnostic> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut brackets: Vec<(char, usize, usize)> = Vec::new();
    let (mut i, mut line, mut col) = (0, 1, 1);
    while i < chars.len() {
        let c = chars[i];
        let (l0, c0) = (line, col);
        let mut push = |tok: Tok| out.push(Token { tok, line: l0, column: c0 });
        match c {
            '\n' => {
                if !matches!(brackets.last(), Some(('(', _, _))) {
                    push(Tok::Newline);
                }
                i += 1;
                line += 1;
                col = 1;
                continue;
            }
            ' ' | '\t' | '\r' => {}
            '/' if chars.get(i + 1) == Some(&'/') => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
                continue;
            }
            '(' | '{' => {
                brackets.push((c, l0, c0));
                push(if c == '(' { Tok::LParen } else { Tok::LBrace });
            }
            ')' | '}' => {
                let open = if c == ')' { '(' } else { '{' };
                match brackets.pop() {
                    Some((o, _, _)) if o == open => {}
                    Some((o, l, cc)) => {
                        return Err(error(l0, c0, format!("`{c}` does not match `{o}` opened at {l}:{cc}")));
                    }
                    None => return Err(error(l0, c0, format!("unmatched `{c}`"))),
                }
                push(if c == ')' { Tok::RParen } else { Tok::RBrace });
            }
            ';' => push(Tok::Semi),
            '!' => push(Tok::Bang),
            '.' => push(Tok::Dot),
            ':' => push(Tok::Colon),
            '=' => push(Tok::Eq),
            '\\' | 'λ' => push(Tok::Lambda),
            '<' if chars.get(i + 1) == Some(&'-') => {
                push(Tok::LArrow);
                i += 2;
                col += 2;
                continue;
            }
            '-' if chars.get(i + 1) == Some(&'>') => {
                push(Tok::Arrow);
                i += 2;
                col += 2;
                continue;
            }
            c if c.is_ascii_digit() => {
                let start = i;
                while i < chars.len() && chars[i].is_ascii_alphanumeric() {
                    i += 1;
                }
                let text: String = chars[start..i].iter().collect();
                col += i - start;
                push(Tok::Number(text));
                continue;
            }
            c if c.is_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_' || chars[i] == '\'') {
                    i += 1;
                }
                let text: String = chars[start..i].iter().collect();
                col += i - start;
                push(match text.as_str() {
                    "val" => Tok::Val,
                    "atomic" => Tok::Atomic,
                    "new" => Tok::New,
                    "bestow" => Tok::Bestow,
                    "mutate" => Tok::Mutate,
                    "p" => Tok::TyP,
                    "c" => Tok::TyC,
                    "B" => Tok::TyB,
                    "Unit" => Tok::TyUnit,
                    _ => Tok::Ident(text),
                });
                continue;
            }
            other => return Err(error(l0, c0, format!("unexpected character `{other}`"))),
        }
        i += 1;
        col += 1;
    }
    if let Some((o, l, c)) = brackets.pop() {
        let close = if o == '(' { ')' } else { '}' };
        return Err(error(l, c, format!("`{o}` is never closed (expected `{close}`)")));
    }
    out.push(Token { tok: Tok::Eof, line, column: col });
    Ok(out)
}

pub fn parse(src: &str) -> Result<SurfaceProgram, Vec<Diagnostic>> {
    parse_with(src, &ParseOptions::default())
}

pub fn parse_with(src: &str, options: &ParseOptions) -> Result<SurfaceProgram, Vec<Diagnostic>> {
    let tokens = lex(src).map_err(|d| vec![d])?;
    let mut p = Parser { tokens, pos: 0, scope: Vec::new(), atomic_depth: 0, options };
    let stmts = p.stmts(&Tok::Eof).map_err(|d| vec![d])?;
    Ok(SurfaceProgram { stmts })
}

type PResult<T> = Result<T, Diagnostic>;

struct Parser<'a> {
    tokens: Vec<Token>,
    pos: usize,
    scope: Vec<Name>,
    atomic_depth: usize,
    options: &'a ParseOptions,
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    fn here(&self) -> (usize, usize) {
        let t = &self.tokens[self.pos];
        (t.line, t.column)
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if t.tok != Tok::Eof {
            self.pos += 1;
        }
        t
    }

    fn fail<T>(&self, message: impl Into<String>) -> PResult<T> {
        let (l, c) = self.here();
        Err(error(l, c, message))
    }

    fn expect(&mut self, tok: Tok) -> PResult<Token> {
        if *self.peek() == tok {
            Ok(self.bump())
        } else {
            self.fail(format!("expected {tok}, found {}", self.peek()))
        }
    }

    fn skip_newlines(&mut self) {
        while *self.peek() == Tok::Newline {
            self.bump();
        }
    }

    fn skip_separators(&mut self) {
        while matches!(self.peek(), Tok::Newline | Tok::Semi) {
            self.bump();
        }
    }

    fn ident(&mut self) -> PResult<Name> {
        match self.peek().clone() {
            Tok::Ident(x) => {
                self.bump();
                Ok(x.into())
            }
            other => self.fail(format!("expected a name, found {other}")),
        }
    }

    /// Statements up to (not including) `end`. `val` bindings scope over
    /// the remaining statements.
    fn stmts(&mut self, end: &Tok) -> PResult<Vec<Stmt>> {
        let mark = self.scope.len();
        let mut out = Vec::new();
        self.skip_separators();
        while self.peek() != end {
            out.push(self.stmt()?);
            if self.peek() == end {
                break;
            }
            if !matches!(self.peek(), Tok::Newline | Tok::Semi) {
                return self.fail(format!("expected `;` or a new line, found {}", self.peek()));
            }
            self.skip_separators();
        }
        self.scope.truncate(mark);
        Ok(out)
    }

    fn stmt(&mut self) -> PResult<Stmt> {
        match self.peek() {
            Tok::Val => {
                self.bump();
                let name = self.ident()?;
                self.expect(Tok::Eq)?;
                self.skip_newlines();
                let expr = self.expr()?;
                self.scope.push(name.clone());
                Ok(Stmt::Val { name, expr })
            }
            Tok::Atomic => {
                let (l, c) = self.here();
                if self.atomic_depth > 0 {
                    return Err(error(l, c, "nested atomic blocks are not allowed"));
                }
                self.bump();
                let name = self.ident()?;
                self.expect(Tok::LArrow)?;
                self.skip_newlines();
                let target = self.postfix()?;
                self.skip_newlines();
                self.expect(Tok::LBrace)?;
                self.atomic_depth += 1;
                self.scope.push(name.clone());
                let body = self.stmts(&Tok::RBrace);
                self.scope.pop();
                self.atomic_depth -= 1;
                let body = body?;
                self.expect(Tok::RBrace)?;
                if body.len() > self.options.batch_cap {
                    return Err(error(
                        l,
                        c,
                        format!(
                            "atomic block has {} statements, more than the cap of {}",
                            body.len(),
                            self.options.batch_cap
                        ),
                    ));
                }
                Ok(Stmt::Atomic(AtomicBlock { name, target, body }))
            }
            _ => Ok(Stmt::Expr(self.expr()?)),
        }
    }

    fn expr(&mut self) -> PResult<SExpr> {
        if *self.peek() == Tok::Lambda {
            return self.lambda();
        }
        let mut lhs = self.app()?;
        while *self.peek() == Tok::Bang {
            self.bump();
            self.skip_newlines();
            let rhs = if *self.peek() == Tok::Lambda { self.lambda()? } else { self.app()? };
            lhs = SExpr::send(lhs, rhs);
        }
        Ok(lhs)
    }

    fn lambda(&mut self) -> PResult<SExpr> {
        self.expect(Tok::Lambda)?;
        let param = self.ident()?;
        self.expect(Tok::Colon)?;
        let ty = self.ty()?;
        self.expect(Tok::Dot)?;
        self.skip_newlines();
        self.scope.push(param.clone());
        let body = self.expr();
        self.scope.pop();
        Ok(SExpr::Lambda { param, ty, body: Box::new(body?) })
    }

    fn ty(&mut self) -> PResult<Type> {
        let dom = match self.peek() {
            Tok::TyP => {
                self.bump();
                Type::Passive
            }
            Tok::TyC => {
                self.bump();
                Type::Actor
            }
            Tok::TyUnit => {
                self.bump();
                Type::Unit
            }
            Tok::TyB => {
                self.bump();
                self.expect(Tok::LParen)?;
                self.expect(Tok::TyP)?;
                self.expect(Tok::RParen)?;
                Type::Bestowed
            }
            Tok::LParen => {
                self.bump();
                let t = self.ty()?;
                self.expect(Tok::RParen)?;
                t
            }
            other => return self.fail(format!("expected a type, found {other}")),
        };
        if *self.peek() == Tok::Arrow {
            self.bump();
            return Ok(Type::arrow(dom, self.ty()?));
        }
        Ok(dom)
    }

    fn starts_atom(&self) -> bool {
        matches!(self.peek(), Tok::Ident(_) | Tok::Number(_) | Tok::LParen | Tok::LBrace | Tok::New | Tok::Bestow)
    }

    fn app(&mut self) -> PResult<SExpr> {
        let mut f = self.postfix()?;
        while self.starts_atom() {
            let a = self.postfix()?;
            f = SExpr::app(f, a);
        }
        Ok(f)
    }

    fn postfix(&mut self) -> PResult<SExpr> {
        let mut e = self.atom()?;
        while *self.peek() == Tok::Dot {
            self.bump();
            self.expect(Tok::Mutate)?;
            self.expect(Tok::LParen)?;
            self.expect(Tok::RParen)?;
            e = SExpr::mutate(e);
        }
        Ok(e)
    }

    fn atom(&mut self) -> PResult<SExpr> {
        match self.peek().clone() {
            Tok::Ident(x) => {
                if !self.scope.iter().any(|y| **y == *x) {
                    return self.fail(format!("`{x}` is not bound"));
                }
                self.bump();
                Ok(SExpr::Var(x.into()))
            }
            Tok::Number(n) => self.fail(format!(
                "`{n}`: numeric literals are not allowed; actor ids and locations only exist at run time"
            )),
            Tok::LParen => {
                self.bump();
                if *self.peek() == Tok::RParen {
                    self.bump();
                    return Ok(SExpr::Unit);
                }
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            Tok::LBrace => {
                self.bump();
                let body = self.stmts(&Tok::RBrace)?;
                self.expect(Tok::RBrace)?;
                Ok(SExpr::Block(body))
            }
            Tok::New => {
                self.bump();
                match self.peek() {
                    Tok::TyP => {
                        self.bump();
                        Ok(SExpr::NewPassive)
                    }
                    Tok::TyC => {
                        self.bump();
                        Ok(SExpr::NewActor)
                    }
                    other => self.fail(format!("expected `p` or `c` after `new`, found {other}")),
                }
            }
            Tok::Bestow => {
                self.bump();
                Ok(SExpr::bestow(self.postfix()?))
            }
            other => self.fail(format!("expected an expression, found {other}")),
        }
    }
}
