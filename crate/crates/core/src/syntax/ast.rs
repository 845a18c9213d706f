//! Core expression trees and runtime values.

use std::fmt;
use std::sync::Arc;

/// Interned-ish variable name; `Arc<str>` keeps tree clones cheap.
pub type Symbol = Arc<str>;

/// A heap location. Fresh allocation always picks the smallest unused
/// index, so configurations stay canonical and memoizable.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Loc(pub u32);

/// A presampling-tape label; a separate namespace from heap locations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Lbl(pub u32);

impl fmt::Display for Loc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "@l{}", self.0)
    }
}

impl fmt::Display for Lbl {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "@t{}", self.0)
    }
}

/// Runtime values. Closures are closed by construction: they only arise
/// from stepping closed programs, where substitution has already replaced
/// every free variable.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Value {
    Int(i64),
    Bool(bool),
    Unit,
    Loc(Loc),
    Lbl(Lbl),
    Rec {
        fname: Symbol,
        arg: Symbol,
        body: Arc<Expr>,
    },
    Pair(Box<Value>, Box<Value>),
    Inl(Box<Value>),
    Inr(Box<Value>),
}

impl Value {
    pub fn pair(a: Value, b: Value) -> Value {
        Value::Pair(Box::new(a), Box::new(b))
    }

    pub fn inl(v: Value) -> Value {
        Value::Inl(Box::new(v))
    }

    pub fn inr(v: Value) -> Value {
        Value::Inr(Box::new(v))
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            Value::Int(n) => Some(*n),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(*b),
            _ => None,
        }
    }

    /// Values that a `cas` may compare: flat word-sized data. Comparing
    /// pairs or closures atomically is not meaningful in this machine
    /// model, so such comparisons leave the program stuck.
    pub fn is_comparable(&self) -> bool {
        matches!(
            self,
            Value::Int(_) | Value::Bool(_) | Value::Unit | Value::Loc(_) | Value::Lbl(_)
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
        }
    }
}

/// Core expressions. Every derived surface form has been expanded away;
/// this is the tree the operational semantics works on.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Expr {
    Val(Value),
    Var(Symbol),
    App(Box<Expr>, Box<Expr>),
    BinOp(BinOp, Box<Expr>, Box<Expr>),
    If(Box<Expr>, Box<Expr>, Box<Expr>),
    Pair(Box<Expr>, Box<Expr>),
    Fst(Box<Expr>),
    Snd(Box<Expr>),
    Inl(Box<Expr>),
    Inr(Box<Expr>),
    /// `match e with inl x -> e1 | inr y -> e2 end`
    Match(Box<Expr>, Symbol, Box<Expr>, Symbol, Box<Expr>),
    /// `ref e`
    Alloc(Box<Expr>),
    /// `!e`
    Load(Box<Expr>),
    /// `e1 := e2`
    Store(Box<Expr>, Box<Expr>),
    /// `array e_size e_init`: consecutive fresh locations, returns the base.
    AllocArray(Box<Expr>, Box<Expr>),
    /// `e1.[e2]`
    LoadIdx(Box<Expr>, Box<Expr>),
    /// `e1.[e2] := e3`
    StoreIdx(Box<Expr>, Box<Expr>, Box<Expr>),
    /// `rand e`: uniform sample from `{0..e}`.
    Rand(Box<Expr>),
    /// `rand e_lbl e_bound`: labelled sample reading the tape `e_lbl`.
    RandLbl(Box<Expr>, Box<Expr>),
    /// `alloctape e`: fresh tape with the given bound and empty queue.
    AllocTape(Box<Expr>),
    Fork(Box<Expr>),
    /// `faa e1 e2`: atomic fetch-and-add, returns the prior value.
    Faa(Box<Expr>, Box<Expr>),
    /// `cas e1 e2 e3`: atomic compare-and-swap, returns whether it swapped.
    Cas(Box<Expr>, Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn val(v: Value) -> Expr {
        Expr::Val(v)
    }

    pub fn int(n: i64) -> Expr {
        Expr::Val(Value::Int(n))
    }

    pub fn bool(b: bool) -> Expr {
        Expr::Val(Value::Bool(b))
    }

    pub fn unit() -> Expr {
        Expr::Val(Value::Unit)
    }

    pub fn var(name: &str) -> Expr {
        Expr::Var(Symbol::from(name))
    }

    pub fn is_val(&self) -> bool {
        matches!(self, Expr::Val(_))
    }

    pub fn as_val(&self) -> Option<&Value> {
        match self {
            Expr::Val(v) => Some(v),
            _ => None,
        }
    }

    /// `rec f x = body` as an expression.
    pub fn rec(fname: impl Into<Symbol>, arg: impl Into<Symbol>, body: Expr) -> Expr {
        Expr::Val(Value::Rec {
            fname: fname.into(),
            arg: arg.into(),
            body: Arc::new(body),
        })
    }

    /// Anonymous function: a recursive closure that never self-references.
    pub fn lam(arg: impl Into<Symbol>, body: Expr) -> Expr {
        Expr::rec("_rec", arg, body)
    }

    pub fn app(f: Expr, a: Expr) -> Expr {
        Expr::App(Box::new(f), Box::new(a))
    }

    /// `let x = e1 in e2`, encoded as an immediate application.
    pub fn let_in(x: impl Into<Symbol>, bound: Expr, body: Expr) -> Expr {
        Expr::app(Expr::lam(x, body), bound)
    }

    pub fn seq(first: Expr, second: Expr) -> Expr {
        Expr::let_in("_", first, second)
    }

    pub fn binop(op: BinOp, l: Expr, r: Expr) -> Expr {
        Expr::BinOp(op, Box::new(l), Box::new(r))
    }

    /// Free variables, for the scope check and closedness assertions.
    pub fn free_vars(&self) -> std::collections::BTreeSet<Symbol> {
        let mut out = std::collections::BTreeSet::new();
        let mut bound: Vec<Symbol> = Vec::new();
        collect_free(self, &mut bound, &mut out);
        out
    }

    /// Substitutes the closed value `v` for every free occurrence of `x`.
    /// Binders shadow; since `v` is closed, no capture can occur.
    pub fn subst(&self, x: &str, v: &Value) -> Expr {
        subst_expr(self, x, v)
    }
}

fn collect_free(
    e: &Expr,
    bound: &mut Vec<Symbol>,
    out: &mut std::collections::BTreeSet<Symbol>,
) {
    match e {
        Expr::Val(Value::Rec { fname, arg, body }) => {
            bound.push(fname.clone());
            bound.push(arg.clone());
            collect_free(body, bound, out);
            bound.pop();
            bound.pop();
        }
        Expr::Val(_) => {}
        Expr::Var(x) => {
            if !bound.iter().any(|b| b == x) {
                out.insert(x.clone());
            }
        }
        Expr::Match(scrut, xl, el, xr, er) => {
            collect_free(scrut, bound, out);
            bound.push(xl.clone());
            collect_free(el, bound, out);
            bound.pop();
            bound.push(xr.clone());
            collect_free(er, bound, out);
            bound.pop();
        }
        _ => {
            for child in children(e) {
                collect_free(child, bound, out);
            }
        }
    }
}

/// Immediate subexpressions in source order (not evaluation order).
pub(crate) fn children(e: &Expr) -> Vec<&Expr> {
    match e {
        Expr::Val(_) | Expr::Var(_) => vec![],
        Expr::App(a, b)
        | Expr::BinOp(_, a, b)
        | Expr::Pair(a, b)
        | Expr::Store(a, b)
        | Expr::AllocArray(a, b)
        | Expr::LoadIdx(a, b)
        | Expr::RandLbl(a, b)
        | Expr::Faa(a, b) => vec![a, b],
        Expr::If(a, b, c) | Expr::StoreIdx(a, b, c) | Expr::Cas(a, b, c) => {
            vec![a, b, c]
        }
        Expr::Match(a, _, b, _, c) => vec![a, b, c],
        Expr::Fst(a)
        | Expr::Snd(a)
        | Expr::Inl(a)
        | Expr::Inr(a)
        | Expr::Alloc(a)
        | Expr::Load(a)
        | Expr::Rand(a)
        | Expr::AllocTape(a)
        | Expr::Fork(a) => vec![a],
    }
}

fn subst_expr(e: &Expr, x: &str, v: &Value) -> Expr {
    let s = |e: &Expr| Box::new(subst_expr(e, x, v));
    match e {
        Expr::Val(Value::Rec { fname, arg, body }) => {
            if fname.as_ref() == x || arg.as_ref() == x {
                e.clone()
            } else {
                Expr::Val(Value::Rec {
                    fname: fname.clone(),
                    arg: arg.clone(),
                    body: Arc::new(subst_expr(body, x, v)),
                })
            }
        }
        Expr::Val(_) => e.clone(),
        Expr::Var(y) => {
            if y.as_ref() == x {
                Expr::Val(v.clone())
            } else {
                e.clone()
            }
        }
        Expr::App(a, b) => Expr::App(s(a), s(b)),
        Expr::BinOp(op, a, b) => Expr::BinOp(*op, s(a), s(b)),
        Expr::If(a, b, c) => Expr::If(s(a), s(b), s(c)),
        Expr::Pair(a, b) => Expr::Pair(s(a), s(b)),
        Expr::Fst(a) => Expr::Fst(s(a)),
        Expr::Snd(a) => Expr::Snd(s(a)),
        Expr::Inl(a) => Expr::Inl(s(a)),
        Expr::Inr(a) => Expr::Inr(s(a)),
        Expr::Match(scrut, xl, el, xr, er) => {
            let el2 = if xl.as_ref() == x { el.clone() } else { s(el) };
            let er2 = if xr.as_ref() == x { er.clone() } else { s(er) };
            Expr::Match(s(scrut), xl.clone(), el2, xr.clone(), er2)
        }
        Expr::Alloc(a) => Expr::Alloc(s(a)),
        Expr::Load(a) => Expr::Load(s(a)),
        Expr::Store(a, b) => Expr::Store(s(a), s(b)),
        Expr::AllocArray(a, b) => Expr::AllocArray(s(a), s(b)),
        Expr::LoadIdx(a, b) => Expr::LoadIdx(s(a), s(b)),
        Expr::StoreIdx(a, b, c) => Expr::StoreIdx(s(a), s(b), s(c)),
        Expr::Rand(a) => Expr::Rand(s(a)),
        Expr::RandLbl(a, b) => Expr::RandLbl(s(a), s(b)),
        Expr::AllocTape(a) => Expr::AllocTape(s(a)),
        Expr::Fork(a) => Expr::Fork(s(a)),
        Expr::Faa(a, b) => Expr::Faa(s(a), s(b)),
        Expr::Cas(a, b, c) => Expr::Cas(s(a), s(b), s(c)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn subst_simple() {
        // subst(x+1, x, 2) = 2+1
        let e = Expr::binop(BinOp::Add, Expr::var("x"), Expr::int(1));
        let got = e.subst("x", &Value::Int(2));
        assert_eq!(got, Expr::binop(BinOp::Add, Expr::int(2), Expr::int(1)));
    }

    #[test]
    fn subst_under_binder() {
        // subst(rec f y = x+y, x, 3) = rec f y = 3+y
        let e = Expr::rec("f", "y", Expr::binop(BinOp::Add, Expr::var("x"), Expr::var("y")));
        let got = e.subst("x", &Value::Int(3));
        let want = Expr::rec("f", "y", Expr::binop(BinOp::Add, Expr::int(3), Expr::var("y")));
        assert_eq!(got, want);
    }

    #[test]
    fn subst_shadowing() {
        // subst(rec f x = x, x, 3) = rec f x = x
        let e = Expr::rec("f", "x", Expr::var("x"));
        assert_eq!(e.subst("x", &Value::Int(3)), e);
    }

    #[test]
    fn free_vars_respect_binders() {
        let e = Expr::rec("f", "y", Expr::binop(BinOp::Add, Expr::var("x"), Expr::var("y")));
        let fv = e.free_vars();
        assert!(fv.contains("x"));
        assert!(!fv.contains("y"));
        assert!(!fv.contains("f"));
    }
}
