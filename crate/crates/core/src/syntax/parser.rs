//! Lexer and recursive-descent parser for the surface language.
//!
//! The grammar is documented in `docs/language.md`. Binder forms (`let`,
//! `fun`, `rec`, `if`, `match`) extend maximally to the right; `match` is
//! terminated by `end`. `#` starts a line comment.

use super::ast::{BinOp, Symbol};
use super::surface::{SExpr, Span, SurfaceProgram};

#[derive(Debug, thiserror::Error)]
#[error("parse error at {line}:{col}: {message} (expected {expected})")]
pub struct ParseError {
    pub line: u32,
    pub col: u32,
    pub message: String,
    pub expected: String,
}

/// Parses a program file into its surface tree.
pub fn parse(text: &str) -> Result<SurfaceProgram, ParseError> {
    let toks = lex(text)?;
    let mut p = Parser { toks, pos: 0 };
    let root = p.expr()?;
    p.expect(TokKind::Eof, "end of input")?;
    Ok(SurfaceProgram {
        source: text.to_string(),
        root,
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum TokKind {
    Int(i64),
    Ident(String),
    // keywords
    Let,
    Rec,
    In,
    Fun,
    If,
    Then,
    Else,
    Match,
    With,
    End,
    True,
    False,
    Ref,
    Rand,
    AllocTape,
    Fork,
    Faa,
    Cas,
    Array,
    Fst,
    Snd,
    Inl,
    Inr,
    NoneKw,
    SomeKw,
    NewLock,
    Acquire,
    Release,
    Spawn,
    Join,
    // punctuation
    LParen,
    RParen,
    LBracket,
    RBracket,
    DotBracket, // .[
    Comma,
    Semi,
    Arrow,
    Bar,
    ParBar, // |||
    OrOr,
    AndAnd,
    Assign, // :=
    ColonColon,
    Bang,
    Plus,
    Minus,
    Star,
    EqEq,
    Ne,
    Le,
    Ge,
    Lt,
    Gt,
    Eq,
    Eof,
}

#[derive(Clone, Debug)]
struct Tok {
    kind: TokKind,
    span: Span,
}

fn keyword(s: &str) -> Option<TokKind> {
    Some(match s {
        "let" => TokKind::Let,
        "rec" => TokKind::Rec,
        "in" => TokKind::In,
        "fun" => TokKind::Fun,
        "if" => TokKind::If,
        "then" => TokKind::Then,
        "else" => TokKind::Else,
        "match" => TokKind::Match,
        "with" => TokKind::With,
        "end" => TokKind::End,
        "true" => TokKind::True,
        "false" => TokKind::False,
        "ref" => TokKind::Ref,
        "rand" => TokKind::Rand,
        "alloctape" => TokKind::AllocTape,
        "fork" => TokKind::Fork,
        "faa" => TokKind::Faa,
        "cas" => TokKind::Cas,
        "array" => TokKind::Array,
        "fst" => TokKind::Fst,
        "snd" => TokKind::Snd,
        "inl" => TokKind::Inl,
        "inr" => TokKind::Inr,
        "none" => TokKind::NoneKw,
        "some" => TokKind::SomeKw,
        "newlock" => TokKind::NewLock,
        "acquire" => TokKind::Acquire,
        "release" => TokKind::Release,
        "spawn" => TokKind::Spawn,
        "join" => TokKind::Join,
        _ => return None,
    })
}

fn lex(text: &str) -> Result<Vec<Tok>, ParseError> {
    let mut toks = Vec::new();
    let bytes = text.as_bytes();
    let mut i = 0;
    let mut line: u32 = 1;
    let mut col: u32 = 1;
    // whether the previous token can end an expression atom; a following
    // `-digit` is then subtraction rather than a negative literal
    let mut prev_atomic = false;

    macro_rules! push {
        ($kind:expr, $len:expr, $atomic:expr) => {{
            toks.push(Tok {
                kind: $kind,
                span: Span { line, col },
            });
            i += $len;
            col += $len as u32;
            prev_atomic = $atomic;
        }};
    }

    while i < bytes.len() {
        let c = bytes[i] as char;
        match c {
            ' ' | '\t' | '\r' => {
                i += 1;
                col += 1;
            }
            '\n' => {
                i += 1;
                line += 1;
                col = 1;
            }
            '#' => {
                while i < bytes.len() && bytes[i] != b'\n' {
                    i += 1;
                }
            }
            '0'..='9' => {
                let start = i;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                let s = &text[start..i];
                let n: i64 = s.parse().map_err(|_| ParseError {
                    line,
                    col,
                    message: format!("integer literal `{s}` out of range"),
                    expected: "an i64 literal".into(),
                })?;
                toks.push(Tok {
                    kind: TokKind::Int(n),
                    span: Span { line, col },
                });
                col += (i - start) as u32;
                prev_atomic = true;
            }
            'a'..='z' | 'A'..='Z' | '_' => {
                let start = i;
                while i < bytes.len()
                    && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_' || bytes[i] == b'\'')
                {
                    i += 1;
                }
                let s = &text[start..i];
                let kind = keyword(s).unwrap_or_else(|| TokKind::Ident(s.to_string()));
                let atomic = matches!(
                    kind,
                    TokKind::Ident(_) | TokKind::True | TokKind::False | TokKind::End
                );
                toks.push(Tok {
                    kind,
                    span: Span { line, col },
                });
                col += (i - start) as u32;
                prev_atomic = atomic;
            }
            '(' => push!(TokKind::LParen, 1, false),
            ')' => push!(TokKind::RParen, 1, true),
            '[' => push!(TokKind::LBracket, 1, false),
            ']' => push!(TokKind::RBracket, 1, true),
            ',' => push!(TokKind::Comma, 1, false),
            ';' => push!(TokKind::Semi, 1, false),
            '+' => push!(TokKind::Plus, 1, false),
            '*' => push!(TokKind::Star, 1, false),
            '.' => {
                if bytes.get(i + 1) == Some(&b'[') {
                    push!(TokKind::DotBracket, 2, false);
                } else {
                    return Err(unexpected_char(line, col, c));
                }
            }
            '-' => {
                if bytes.get(i + 1).is_some_and(|b| b.is_ascii_digit()) && !prev_atomic {
                    let start = i;
                    i += 1;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                    let s = &text[start..i];
                    let n: i64 = s.parse().map_err(|_| ParseError {
                        line,
                        col,
                        message: format!("integer literal `{s}` out of range"),
                        expected: "an i64 literal".into(),
                    })?;
                    toks.push(Tok {
                        kind: TokKind::Int(n),
                        span: Span { line, col },
                    });
                    col += (i - start) as u32;
                    prev_atomic = true;
                } else if bytes.get(i + 1) == Some(&b'>') {
                    push!(TokKind::Arrow, 2, false);
                } else {
                    push!(TokKind::Minus, 1, false);
                }
            }
            ':' => match bytes.get(i + 1) {
                Some(&b'=') => push!(TokKind::Assign, 2, false),
                Some(&b':') => push!(TokKind::ColonColon, 2, false),
                _ => return Err(unexpected_char(line, col, c)),
            },
            '|' => {
                if bytes.get(i + 1) == Some(&b'|') {
                    if bytes.get(i + 2) == Some(&b'|') {
                        push!(TokKind::ParBar, 3, false);
                    } else {
                        push!(TokKind::OrOr, 2, false);
                    }
                } else {
                    push!(TokKind::Bar, 1, false);
                }
            }
            '&' => {
                if bytes.get(i + 1) == Some(&b'&') {
                    push!(TokKind::AndAnd, 2, false);
                } else {
                    return Err(unexpected_char(line, col, c));
                }
            }
            '!' => {
                if bytes.get(i + 1) == Some(&b'=') {
                    push!(TokKind::Ne, 2, false);
                } else {
                    push!(TokKind::Bang, 1, false);
                }
            }
            '=' => {
                if bytes.get(i + 1) == Some(&b'=') {
                    push!(TokKind::EqEq, 2, false);
                } else {
                    push!(TokKind::Eq, 1, false);
                }
            }
            '<' => {
                if bytes.get(i + 1) == Some(&b'=') {
                    push!(TokKind::Le, 2, false);
                } else {
                    push!(TokKind::Lt, 1, false);
                }
            }
            '>' => {
                if bytes.get(i + 1) == Some(&b'=') {
                    push!(TokKind::Ge, 2, false);
                } else {
                    push!(TokKind::Gt, 1, false);
                }
            }
            _ => return Err(unexpected_char(line, col, c)),
        }
    }
    toks.push(Tok {
        kind: TokKind::Eof,
        span: Span { line, col },
    });
    Ok(toks)
}

fn unexpected_char(line: u32, col: u32, c: char) -> ParseError {
    ParseError {
        line,
        col,
        message: format!("unexpected character `{c}`"),
        expected: "a token".into(),
    }
}

struct Parser {
    toks: Vec<Tok>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &TokKind {
        &self.toks[self.pos].kind
    }

    fn span(&self) -> Span {
        self.toks[self.pos].span
    }

    fn bump(&mut self) -> TokKind {
        let k = self.toks[self.pos].kind.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        k
    }

    fn eat(&mut self, k: TokKind) -> bool {
        if *self.peek() == k {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, k: TokKind, what: &str) -> Result<(), ParseError> {
        if self.eat(k) {
            Ok(())
        } else {
            Err(self.err(what))
        }
    }

    fn err(&self, expected: &str) -> ParseError {
        let span = self.span();
        ParseError {
            line: span.line,
            col: span.col,
            message: format!("unexpected token {:?}", self.peek()),
            expected: expected.to_string(),
        }
    }

    fn ident(&mut self, what: &str) -> Result<Symbol, ParseError> {
        match self.peek().clone() {
            TokKind::Ident(s) => {
                self.bump();
                Ok(Symbol::from(s.as_str()))
            }
            _ => Err(self.err(what)),
        }
    }

    // expr := seq (lowest precedence)
    fn expr(&mut self) -> Result<SExpr, ParseError> {
        self.seq()
    }

    fn seq(&mut self) -> Result<SExpr, ParseError> {
        let first = self.par()?;
        if self.eat(TokKind::Semi) {
            let rest = self.seq()?;
            Ok(SExpr::Seq(Box::new(first), Box::new(rest)))
        } else {
            Ok(first)
        }
    }

    fn par(&mut self) -> Result<SExpr, ParseError> {
        let left = self.assign()?;
        if self.eat(TokKind::ParBar) {
            let right = self.par()?;
            Ok(SExpr::Par(Box::new(left), Box::new(right)))
        } else {
            Ok(left)
        }
    }

    fn assign(&mut self) -> Result<SExpr, ParseError> {
        let lhs = self.or_expr()?;
        if self.eat(TokKind::Assign) {
            let rhs = self.assign()?;
            match lhs {
                SExpr::LoadIdx(arr, idx) => Ok(SExpr::StoreIdx(arr, idx, Box::new(rhs))),
                other => Ok(SExpr::Store(Box::new(other), Box::new(rhs))),
            }
        } else {
            Ok(lhs)
        }
    }

    fn or_expr(&mut self) -> Result<SExpr, ParseError> {
        let mut e = self.and_expr()?;
        while self.eat(TokKind::OrOr) {
            let r = self.and_expr()?;
            e = SExpr::Or(Box::new(e), Box::new(r));
        }
        Ok(e)
    }

    fn and_expr(&mut self) -> Result<SExpr, ParseError> {
        let mut e = self.cmp()?;
        while self.eat(TokKind::AndAnd) {
            let r = self.cmp()?;
            e = SExpr::And(Box::new(e), Box::new(r));
        }
        Ok(e)
    }

    fn cmp(&mut self) -> Result<SExpr, ParseError> {
        let e = self.add()?;
        let op = match self.peek() {
            TokKind::EqEq => Some(BinOp::Eq),
            TokKind::Ne => Some(BinOp::Ne),
            TokKind::Lt => Some(BinOp::Lt),
            TokKind::Le => Some(BinOp::Le),
            TokKind::Gt => Some(BinOp::Gt),
            TokKind::Ge => Some(BinOp::Ge),
            _ => None,
        };
        if let Some(op) = op {
            self.bump();
            let r = self.add()?;
            Ok(SExpr::BinOp(op, Box::new(e), Box::new(r)))
        } else {
            Ok(e)
        }
    }

    fn add(&mut self) -> Result<SExpr, ParseError> {
        let mut e = self.mul()?;
        loop {
            let op = match self.peek() {
                TokKind::Plus => BinOp::Add,
                TokKind::Minus => BinOp::Sub,
                _ => break,
            };
            self.bump();
            let r = self.mul()?;
            e = SExpr::BinOp(op, Box::new(e), Box::new(r));
        }
        Ok(e)
    }

    fn mul(&mut self) -> Result<SExpr, ParseError> {
        let mut e = self.unary()?;
        while self.eat(TokKind::Star) {
            let r = self.unary()?;
            e = SExpr::BinOp(BinOp::Mul, Box::new(e), Box::new(r));
        }
        Ok(e)
    }

    fn unary(&mut self) -> Result<SExpr, ParseError> {
        match self.peek() {
            TokKind::Bang => {
                self.bump();
                let e = self.postfix()?;
                Ok(SExpr::Load(Box::new(e)))
            }
            TokKind::Let | TokKind::Fun | TokKind::Rec | TokKind::If | TokKind::Match => {
                self.binder()
            }
            TokKind::Ref
            | TokKind::Rand
            | TokKind::AllocTape
            | TokKind::Fork
            | TokKind::Faa
            | TokKind::Cas
            | TokKind::Array
            | TokKind::Fst
            | TokKind::Snd
            | TokKind::Inl
            | TokKind::Inr
            | TokKind::SomeKw
            | TokKind::NewLock
            | TokKind::Acquire
            | TokKind::Release
            | TokKind::Spawn
            | TokKind::Join => self.keyword_form(),
            _ => self.app(),
        }
    }

    fn keyword_form(&mut self) -> Result<SExpr, ParseError> {
        let kw = self.bump();
        let arg = |p: &mut Self| -> Result<Box<SExpr>, ParseError> {
            Ok(Box::new(p.postfix()?))
        };
        Ok(match kw {
            TokKind::Ref => SExpr::Ref(arg(self)?),
            TokKind::Rand => {
                let first = arg(self)?;
                if self.starts_atom() {
                    let bound = arg(self)?;
                    SExpr::RandLbl(first, bound)
                } else {
                    SExpr::Rand(first)
                }
            }
            TokKind::AllocTape => SExpr::AllocTape(arg(self)?),
            TokKind::Fork => SExpr::Fork(arg(self)?),
            TokKind::Faa => {
                let a = arg(self)?;
                let b = arg(self)?;
                SExpr::Faa(a, b)
            }
            TokKind::Cas => {
                let a = arg(self)?;
                let b = arg(self)?;
                let c = arg(self)?;
                SExpr::Cas(a, b, c)
            }
            TokKind::Array => {
                let a = arg(self)?;
                let b = arg(self)?;
                SExpr::Array(a, b)
            }
            TokKind::Fst => SExpr::Fst(arg(self)?),
            TokKind::Snd => SExpr::Snd(arg(self)?),
            TokKind::Inl => SExpr::Inl(arg(self)?),
            TokKind::Inr => SExpr::Inr(arg(self)?),
            TokKind::SomeKw => SExpr::SomeLit(arg(self)?),
            TokKind::NewLock => SExpr::NewLock(arg(self)?),
            TokKind::Acquire => SExpr::Acquire(arg(self)?),
            TokKind::Release => SExpr::Release(arg(self)?),
            TokKind::Spawn => SExpr::Spawn(arg(self)?),
            TokKind::Join => SExpr::Join(arg(self)?),
            _ => unreachable!(),
        })
    }

    fn binder(&mut self) -> Result<SExpr, ParseError> {
        match self.bump() {
            TokKind::Let => {
                let recursive = self.eat(TokKind::Rec);
                let name = self.ident("a binder name after `let`")?;
                let mut params = Vec::new();
                while let TokKind::Ident(_) = self.peek() {
                    params.push(self.ident("parameter")?);
                }
                self.expect(TokKind::Eq, "`=` in let binding")?;
                let bound = self.expr()?;
                self.expect(TokKind::In, "`in` after let binding")?;
                let body = self.expr()?;
                let rhs = if recursive {
                    if params.is_empty() {
                        return Err(self.err("parameters for `let rec`"));
                    }
                    SExpr::Rec {
                        fname: name.clone(),
                        params,
                        body: Box::new(bound),
                    }
                } else if params.is_empty() {
                    bound
                } else {
                    SExpr::Fun {
                        params,
                        body: Box::new(bound),
                    }
                };
                Ok(SExpr::Let {
                    name,
                    bound: Box::new(rhs),
                    body: Box::new(body),
                })
            }
            TokKind::Fun => {
                let mut params = vec![self.ident("parameter after `fun`")?];
                while let TokKind::Ident(_) = self.peek() {
                    params.push(self.ident("parameter")?);
                }
                self.expect(TokKind::Arrow, "`->` after fun parameters")?;
                let body = self.expr()?;
                Ok(SExpr::Fun {
                    params,
                    body: Box::new(body),
                })
            }
            TokKind::Rec => {
                let fname = self.ident("function name after `rec`")?;
                let mut params = vec![self.ident("parameter after `rec` name")?];
                while let TokKind::Ident(_) = self.peek() {
                    params.push(self.ident("parameter")?);
                }
                self.expect(TokKind::Eq, "`=` after rec parameters")?;
                let body = self.expr()?;
                Ok(SExpr::Rec {
                    fname,
                    params,
                    body: Box::new(body),
                })
            }
            TokKind::If => {
                let c = self.expr()?;
                self.expect(TokKind::Then, "`then`")?;
                let t = self.expr()?;
                self.expect(TokKind::Else, "`else`")?;
                let e = self.expr()?;
                Ok(SExpr::If(Box::new(c), Box::new(t), Box::new(e)))
            }
            TokKind::Match => self.match_form(),
            _ => unreachable!(),
        }
    }

    fn match_form(&mut self) -> Result<SExpr, ParseError> {
        let scrut = Box::new(self.expr()?);
        self.expect(TokKind::With, "`with`")?;
        self.eat(TokKind::Bar);
        let arm1 = self.arm()?;
        self.expect(TokKind::Bar, "`|` between match arms")?;
        let arm2 = self.arm()?;
        self.expect(TokKind::End, "`end` closing the match")?;
        use Pattern::*;
        match (arm1, arm2) {
            ((InlPat(x), e1), (InrPat(y), e2)) => Ok(SExpr::MatchSum {
                scrut,
                left: (x, Box::new(e1)),
                right: (y, Box::new(e2)),
            }),
            ((InrPat(y), e2), (InlPat(x), e1)) => Ok(SExpr::MatchSum {
                scrut,
                left: (x, Box::new(e1)),
                right: (y, Box::new(e2)),
            }),
            ((NilPat, en), (ConsPat(h, t), ec)) | ((ConsPat(h, t), ec), (NilPat, en)) => {
                Ok(SExpr::MatchList {
                    scrut,
                    nil: Box::new(en),
                    head: h,
                    tail: t,
                    cons: Box::new(ec),
                })
            }
            ((NonePat, en), (SomePat(x), es)) | ((SomePat(x), es), (NonePat, en)) => {
                Ok(SExpr::MatchOpt {
                    scrut,
                    none: Box::new(en),
                    bind: x,
                    some: Box::new(es),
                })
            }
            _ => Err(self.err("a pair of matching arms (inl/inr, []/::, or none/some)")),
        }
    }

    fn arm(&mut self) -> Result<(Pattern, SExpr), ParseError> {
        let pat = match self.peek().clone() {
            TokKind::Inl => {
                self.bump();
                Pattern::InlPat(self.ident("binder in `inl` pattern")?)
            }
            TokKind::Inr => {
                self.bump();
                Pattern::InrPat(self.ident("binder in `inr` pattern")?)
            }
            TokKind::NoneKw => {
                self.bump();
                Pattern::NonePat
            }
            TokKind::SomeKw => {
                self.bump();
                Pattern::SomePat(self.ident("binder in `some` pattern")?)
            }
            TokKind::LBracket => {
                self.bump();
                self.expect(TokKind::RBracket, "`]` in nil pattern")?;
                Pattern::NilPat
            }
            TokKind::Ident(_) => {
                let h = self.ident("head binder")?;
                self.expect(TokKind::ColonColon, "`::` in cons pattern")?;
                let t = self.ident("tail binder")?;
                Pattern::ConsPat(h, t)
            }
            _ => return Err(self.err("a match pattern")),
        };
        self.expect(TokKind::Arrow, "`->` after pattern")?;
        let body = self.expr()?;
        Ok((pat, body))
    }

    fn starts_atom(&self) -> bool {
        matches!(
            self.peek(),
            TokKind::Int(_)
                | TokKind::Ident(_)
                | TokKind::True
                | TokKind::False
                | TokKind::LParen
                | TokKind::LBracket
                | TokKind::NoneKw
        )
    }

    fn app(&mut self) -> Result<SExpr, ParseError> {
        let mut e = self.postfix()?;
        while self.starts_atom() {
            let a = self.postfix()?;
            e = SExpr::App(Box::new(e), Box::new(a));
        }
        Ok(e)
    }

    fn postfix(&mut self) -> Result<SExpr, ParseError> {
        let mut e = self.atom()?;
        while self.eat(TokKind::DotBracket) {
            let idx = self.expr()?;
            self.expect(TokKind::RBracket, "`]` closing the index")?;
            e = SExpr::LoadIdx(Box::new(e), Box::new(idx));
        }
        Ok(e)
    }

    fn atom(&mut self) -> Result<SExpr, ParseError> {
        let span = self.span();
        match self.peek().clone() {
            TokKind::Int(n) => {
                self.bump();
                Ok(SExpr::Int(n))
            }
            TokKind::True => {
                self.bump();
                Ok(SExpr::Bool(true))
            }
            TokKind::False => {
                self.bump();
                Ok(SExpr::Bool(false))
            }
            TokKind::Ident(s) => {
                self.bump();
                Ok(SExpr::Var(span, Symbol::from(s.as_str())))
            }
            TokKind::NoneKw => {
                self.bump();
                Ok(SExpr::NoneLit)
            }
            TokKind::LParen => {
                self.bump();
                if self.eat(TokKind::RParen) {
                    return Ok(SExpr::Unit);
                }
                let first = self.expr()?;
                if self.eat(TokKind::Comma) {
                    let second = self.expr()?;
                    self.expect(TokKind::RParen, "`)` closing the pair")?;
                    Ok(SExpr::Pair(Box::new(first), Box::new(second)))
                } else {
                    self.expect(TokKind::RParen, "`)`")?;
                    Ok(first)
                }
            }
            TokKind::LBracket => {
                self.bump();
                let mut items = Vec::new();
                if !self.eat(TokKind::RBracket) {
                    loop {
                        // items sit below `;` so the separator stays unambiguous
                        items.push(self.par()?);
                        if self.eat(TokKind::RBracket) {
                            break;
                        }
                        self.expect(TokKind::Semi, "`;` or `]` in list literal")?;
                    }
                }
                Ok(SExpr::List(items))
            }
            _ => Err(self.err("an expression")),
        }
    }
}

enum Pattern {
    InlPat(Symbol),
    InrPat(Symbol),
    NilPat,
    ConsPat(Symbol, Symbol),
    NonePat,
    SomePat(Symbol),
}
