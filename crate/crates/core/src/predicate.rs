//! The predicate mini-language for probability queries.
//!
//! Grammar (documented in `docs/predicates.md`): comparisons over `ret`,
//! integer/boolean/unit/pair terms with `fst`/`snd` projections, the
//! connectives `&& || !`, and bounded existentials
//! `exists n in a..b. P` (inclusive range). Evaluation is total on values:
//! comparisons between mismatched shapes are false.

use std::fmt;

use crate::syntax::{Symbol, Value};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PExpr {
    Ret,
    Var(Symbol),
    Int(i64),
    Bool(bool),
    Unit,
    Pair(Box<PExpr>, Box<PExpr>),
    Fst(Box<PExpr>),
    Snd(Box<PExpr>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Predicate {
    Bool(bool),
    Cmp(CmpOp, PExpr, PExpr),
    And(Box<Predicate>, Box<Predicate>),
    Or(Box<Predicate>, Box<Predicate>),
    Not(Box<Predicate>),
    Exists {
        var: Symbol,
        lo: i64,
        hi: i64,
        body: Box<Predicate>,
    },
}

impl Predicate {
    /// True on every value; the trivial postcondition.
    pub fn always() -> Predicate {
        Predicate::Bool(true)
    }

    /// False on every value; useful to query total completion mass.
    pub fn never() -> Predicate {
        Predicate::Bool(false)
    }

    pub fn eval(&self, ret: &Value) -> bool {
        self.eval_env(ret, &mut Vec::new())
    }

    fn eval_env(&self, ret: &Value, env: &mut Vec<(Symbol, i64)>) -> bool {
        match self {
            Predicate::Bool(b) => *b,
            Predicate::Cmp(op, a, b) => {
                let (va, vb) = (eval_pexpr(a, ret, env), eval_pexpr(b, ret, env));
                match (va, vb) {
                    (Some(va), Some(vb)) => cmp_values(*op, &va, &vb),
                    // a failed projection makes the comparison false
                    _ => false,
                }
            }
            Predicate::And(a, b) => a.eval_env(ret, env) && b.eval_env(ret, env),
            Predicate::Or(a, b) => a.eval_env(ret, env) || b.eval_env(ret, env),
            Predicate::Not(a) => !a.eval_env(ret, env),
            Predicate::Exists { var, lo, hi, body } => {
                for n in *lo..=*hi {
                    env.push((var.clone(), n));
                    let hit = body.eval_env(ret, env);
                    env.pop();
                    if hit {
                        return true;
                    }
                }
                false
            }
        }
    }
}

fn eval_pexpr(e: &PExpr, ret: &Value, env: &[(Symbol, i64)]) -> Option<Value> {
    match e {
        PExpr::Ret => Some(ret.clone()),
        PExpr::Var(x) => env
            .iter()
            .rev()
            .find(|(y, _)| y == x)
            .map(|(_, n)| Value::Int(*n)),
        PExpr::Int(n) => Some(Value::Int(*n)),
        PExpr::Bool(b) => Some(Value::Bool(*b)),
        PExpr::Unit => Some(Value::Unit),
        PExpr::Pair(a, b) => Some(Value::pair(
            eval_pexpr(a, ret, env)?,
            eval_pexpr(b, ret, env)?,
        )),
        PExpr::Fst(a) => match eval_pexpr(a, ret, env)? {
            Value::Pair(x, _) => Some(*x),
            _ => None,
        },
        PExpr::Snd(a) => match eval_pexpr(a, ret, env)? {
            Value::Pair(_, y) => Some(*y),
            _ => None,
        },
    }
}

fn cmp_values(op: CmpOp, a: &Value, b: &Value) -> bool {
    match op {
        // structural equality, total on all value shapes
        CmpOp::Eq => a == b,
        CmpOp::Ne => a != b,
        _ => match (a, b) {
            (Value::Int(x), Value::Int(y)) => match op {
                CmpOp::Lt => x < y,
                CmpOp::Le => x <= y,
                CmpOp::Gt => x > y,
                CmpOp::Ge => x >= y,
                _ => unreachable!(),
            },
            _ => false,
        },
    }
}

#[derive(Debug, thiserror::Error)]
#[error("predicate parse error at byte {pos}: {message}")]
pub struct PredParseError {
    pub pos: usize,
    pub message: String,
}

/// Parses the predicate mini-language.
pub fn parse_predicate(text: &str) -> Result<Predicate, PredParseError> {
    let mut p = PParser {
        toks: plex(text)?,
        pos: 0,
    };
    let pred = p.or_pred()?;
    if p.peek() != &PTok::Eof {
        return Err(p.err("trailing input after predicate"));
    }
    Ok(pred)
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Predicate::Bool(b) => write!(f, "{b}"),
            Predicate::Cmp(op, a, b) => write!(f, "{a} {} {b}", cmp_sym(*op)),
            Predicate::And(a, b) => write!(f, "({a} && {b})"),
            Predicate::Or(a, b) => write!(f, "({a} || {b})"),
            Predicate::Not(a) => write!(f, "!({a})"),
            Predicate::Exists { var, lo, hi, body } => {
                write!(f, "exists {var} in {lo}..{hi}. {body}")
            }
        }
    }
}

impl fmt::Display for PExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PExpr::Ret => write!(f, "ret"),
            PExpr::Var(x) => write!(f, "{x}"),
            PExpr::Int(n) => write!(f, "{n}"),
            PExpr::Bool(b) => write!(f, "{b}"),
            PExpr::Unit => write!(f, "()"),
            PExpr::Pair(a, b) => write!(f, "({a}, {b})"),
            PExpr::Fst(a) => write!(f, "fst ({a})"),
            PExpr::Snd(a) => write!(f, "snd ({a})"),
        }
    }
}

fn cmp_sym(op: CmpOp) -> &'static str {
    match op {
        CmpOp::Eq => "==",
        CmpOp::Ne => "!=",
        CmpOp::Lt => "<",
        CmpOp::Le => "<=",
        CmpOp::Gt => ">",
        CmpOp::Ge => ">=",
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum PTok {
    Int(i64),
    Ident(String),
    Ret,
    True,
    False,
    Exists,
    In,
    Fst,
    Snd,
    DotDot,
    Dot,
    LParen,
    RParen,
    Comma,
    AndAnd,
    OrOr,
    Bang,
    EqEq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Eof,
}

fn plex(text: &str) -> Result<Vec<(PTok, usize)>, PredParseError> {
    let b = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < b.len() {
        let c = b[i] as char;
        match c {
            ' ' | '\t' | '\n' | '\r' => i += 1,
            '0'..='9' => {
                let s = i;
                while i < b.len() && b[i].is_ascii_digit() {
                    i += 1;
                }
                let n: i64 = text[s..i].parse().map_err(|_| PredParseError {
                    pos: s,
                    message: "integer out of range".into(),
                })?;
                out.push((PTok::Int(n), s));
            }
            '-' if i + 1 < b.len() && b[i + 1].is_ascii_digit() => {
                let s = i;
                i += 1;
                while i < b.len() && b[i].is_ascii_digit() {
                    i += 1;
                }
                let n: i64 = text[s..i].parse().map_err(|_| PredParseError {
                    pos: s,
                    message: "integer out of range".into(),
                })?;
                out.push((PTok::Int(n), s));
            }
            'a'..='z' | 'A'..='Z' | '_' => {
                let s = i;
                while i < b.len() && (b[i].is_ascii_alphanumeric() || b[i] == b'_') {
                    i += 1;
                }
                let tok = match &text[s..i] {
                    "ret" => PTok::Ret,
                    "true" => PTok::True,
                    "false" => PTok::False,
                    "exists" => PTok::Exists,
                    "in" => PTok::In,
                    "fst" => PTok::Fst,
                    "snd" => PTok::Snd,
                    id => PTok::Ident(id.to_string()),
                };
                out.push((tok, s));
            }
            '.' => {
                if b.get(i + 1) == Some(&b'.') {
                    out.push((PTok::DotDot, i));
                    i += 2;
                } else {
                    out.push((PTok::Dot, i));
                    i += 1;
                }
            }
            '(' => {
                out.push((PTok::LParen, i));
                i += 1;
            }
            ')' => {
                out.push((PTok::RParen, i));
                i += 1;
            }
            ',' => {
                out.push((PTok::Comma, i));
                i += 1;
            }
            '&' if b.get(i + 1) == Some(&b'&') => {
                out.push((PTok::AndAnd, i));
                i += 2;
            }
            '|' if b.get(i + 1) == Some(&b'|') => {
                out.push((PTok::OrOr, i));
                i += 2;
            }
            '!' => {
                if b.get(i + 1) == Some(&b'=') {
                    out.push((PTok::Ne, i));
                    i += 2;
                } else {
                    out.push((PTok::Bang, i));
                    i += 1;
                }
            }
            '=' if b.get(i + 1) == Some(&b'=') => {
                out.push((PTok::EqEq, i));
                i += 2;
            }
            '<' => {
                if b.get(i + 1) == Some(&b'=') {
                    out.push((PTok::Le, i));
                    i += 2;
                } else {
                    out.push((PTok::Lt, i));
                    i += 1;
                }
            }
            '>' => {
                if b.get(i + 1) == Some(&b'=') {
                    out.push((PTok::Ge, i));
                    i += 2;
                } else {
                    out.push((PTok::Gt, i));
                    i += 1;
                }
            }
            _ => {
                return Err(PredParseError {
                    pos: i,
                    message: format!("unexpected character `{c}`"),
                })
            }
        }
    }
    out.push((PTok::Eof, b.len()));
    Ok(out)
}

struct PParser {
    toks: Vec<(PTok, usize)>,
    pos: usize,
}

impl PParser {
    fn peek(&self) -> &PTok {
        &self.toks[self.pos].0
    }

    fn bump(&mut self) -> PTok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn eat(&mut self, t: PTok) -> bool {
        if *self.peek() == t {
            self.bump();
            true
        } else {
            false
        }
    }

    fn err(&self, msg: &str) -> PredParseError {
        PredParseError {
            pos: self.toks[self.pos].1,
            message: msg.to_string(),
        }
    }

    fn or_pred(&mut self) -> Result<Predicate, PredParseError> {
        let mut p = self.and_pred()?;
        while self.eat(PTok::OrOr) {
            let q = self.and_pred()?;
            p = Predicate::Or(Box::new(p), Box::new(q));
        }
        Ok(p)
    }

    fn and_pred(&mut self) -> Result<Predicate, PredParseError> {
        let mut p = self.unary_pred()?;
        while self.eat(PTok::AndAnd) {
            let q = self.unary_pred()?;
            p = Predicate::And(Box::new(p), Box::new(q));
        }
        Ok(p)
    }

    fn unary_pred(&mut self) -> Result<Predicate, PredParseError> {
        match self.peek() {
            PTok::Bang => {
                self.bump();
                Ok(Predicate::Not(Box::new(self.unary_pred()?)))
            }
            PTok::Exists => {
                self.bump();
                let var = match self.bump() {
                    PTok::Ident(s) => Symbol::from(s.as_str()),
                    _ => return Err(self.err("expected a variable after `exists`")),
                };
                if !self.eat(PTok::In) {
                    return Err(self.err("expected `in`"));
                }
                let lo = match self.bump() {
                    PTok::Int(n) => n,
                    _ => return Err(self.err("expected the range start")),
                };
                if !self.eat(PTok::DotDot) {
                    return Err(self.err("expected `..`"));
                }
                let hi = match self.bump() {
                    PTok::Int(n) => n,
                    _ => return Err(self.err("expected the range end")),
                };
                if !self.eat(PTok::Dot) {
                    return Err(self.err("expected `.` before the body"));
                }
                let body = self.or_pred()?;
                Ok(Predicate::Exists {
                    var,
                    lo,
                    hi,
                    body: Box::new(body),
                })
            }
            _ => self.atom_pred(),
        }
    }

    fn atom_pred(&mut self) -> Result<Predicate, PredParseError> {
        // `true`/`false` standing alone are predicate literals, while
        // `(…)` may open either a grouped predicate or a term; disambiguate
        // by looking for a comparison operator afterwards.
        if *self.peek() == PTok::True && !self.next_is_cmp(1) {
            self.bump();
            return Ok(Predicate::Bool(true));
        }
        if *self.peek() == PTok::False && !self.next_is_cmp(1) {
            self.bump();
            return Ok(Predicate::Bool(false));
        }
        if *self.peek() == PTok::LParen {
            let save = self.pos;
            if let Ok(p) = self.grouped_pred() {
                return Ok(p);
            }
            self.pos = save;
        }
        let a = self.pexpr()?;
        let op = match self.bump() {
            PTok::EqEq => CmpOp::Eq,
            PTok::Ne => CmpOp::Ne,
            PTok::Lt => CmpOp::Lt,
            PTok::Le => CmpOp::Le,
            PTok::Gt => CmpOp::Gt,
            PTok::Ge => CmpOp::Ge,
            _ => return Err(self.err("expected a comparison operator")),
        };
        let b = self.pexpr()?;
        Ok(Predicate::Cmp(op, a, b))
    }

    fn grouped_pred(&mut self) -> Result<Predicate, PredParseError> {
        if !self.eat(PTok::LParen) {
            return Err(self.err("expected `(`"));
        }
        let p = self.or_pred()?;
        if !self.eat(PTok::RParen) {
            return Err(self.err("expected `)`"));
        }
        Ok(p)
    }

    fn next_is_cmp(&self, offset: usize) -> bool {
        matches!(
            self.toks
                .get(self.pos + offset)
                .map(|(t, _)| t)
                .unwrap_or(&PTok::Eof),
            PTok::EqEq | PTok::Ne | PTok::Lt | PTok::Le | PTok::Gt | PTok::Ge
        )
    }

    fn pexpr(&mut self) -> Result<PExpr, PredParseError> {
        match self.bump() {
            PTok::Ret => Ok(PExpr::Ret),
            PTok::Int(n) => Ok(PExpr::Int(n)),
            PTok::True => Ok(PExpr::Bool(true)),
            PTok::False => Ok(PExpr::Bool(false)),
            PTok::Ident(s) => Ok(PExpr::Var(Symbol::from(s.as_str()))),
            PTok::Fst => Ok(PExpr::Fst(Box::new(self.pexpr()?))),
            PTok::Snd => Ok(PExpr::Snd(Box::new(self.pexpr()?))),
            PTok::LParen => {
                if self.eat(PTok::RParen) {
                    return Ok(PExpr::Unit);
                }
                let a = self.pexpr()?;
                if self.eat(PTok::Comma) {
                    let b = self.pexpr()?;
                    if !self.eat(PTok::RParen) {
                        return Err(self.err("expected `)` closing the pair"));
                    }
                    Ok(PExpr::Pair(Box::new(a), Box::new(b)))
                } else {
                    if !self.eat(PTok::RParen) {
                        return Err(self.err("expected `)`"));
                    }
                    Ok(a)
                }
            }
            _ => Err(self.err("expected a term")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(n: i64) -> Value {
        Value::Int(n)
    }

    #[test]
    fn ret_gt_zero() {
        let p = parse_predicate("ret > 0").unwrap();
        assert!(p.eval(&v(1)));
        assert!(!p.eval(&v(0)));
        // mismatched shape: comparison is false
        assert!(!p.eval(&Value::Bool(true)));
    }

    #[test]
    fn exists_pair_shape() {
        let p = parse_predicate("exists n in 0..1. ret == ((n,n),(n,n))").unwrap();
        let good = Value::pair(Value::pair(v(1), v(1)), Value::pair(v(1), v(1)));
        let bad = Value::pair(Value::pair(v(0), v(1)), Value::pair(v(0), v(1)));
        assert!(p.eval(&good));
        assert!(!p.eval(&bad));
        assert!(!p.eval(&v(0)));
    }

    #[test]
    fn connectives_and_literals() {
        let p = parse_predicate("!(ret == 0) && (ret < 5 || ret >= 10)").unwrap();
        assert!(p.eval(&v(3)));
        assert!(!p.eval(&v(0)));
        assert!(!p.eval(&v(7)));
        assert!(p.eval(&v(12)));
        assert!(parse_predicate("true").unwrap().eval(&v(0)));
        assert!(!parse_predicate("false").unwrap().eval(&v(0)));
    }

    #[test]
    fn ret_equals_false_literal() {
        let p = parse_predicate("ret == false").unwrap();
        assert!(p.eval(&Value::Bool(false)));
        assert!(!p.eval(&Value::Bool(true)));
        assert!(!p.eval(&v(0)));
    }

    #[test]
    fn projections() {
        let p = parse_predicate("fst ret == 2 && snd ret > 0").unwrap();
        assert!(p.eval(&Value::pair(v(2), v(9))));
        assert!(!p.eval(&Value::pair(v(1), v(9))));
        assert!(!p.eval(&v(2)));
    }
}
