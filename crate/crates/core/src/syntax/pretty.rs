//! Precedence-aware pretty-printer for core expressions.
//!
//! The output uses core constructs only and reparses to the same tree for
//! any tree the parser can produce; that round trip is the canonical
//! formatting contract.

use std::fmt;

use super::ast::{BinOp, Expr, Value};

// Precedence levels, loosest to tightest. Binder forms print at `TOP` and
// get parenthesized anywhere else.
const TOP: u8 = 0;
const ASSIGN: u8 = 1;
const CMP: u8 = 4;
const ADD: u8 = 5;
const MUL: u8 = 6;
const UNARY: u8 = 7;
const APP: u8 = 8;
const POSTFIX: u8 = 9;
const ATOM: u8 = 10;

/// Renders a core expression as canonical reparseable text.
pub fn pretty(e: &Expr) -> String {
    let mut s = String::new();
    write_expr(&mut s, e, TOP);
    s
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&pretty(self))
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        write_value(&mut s, self, TOP);
        f.write_str(&s)
    }
}

fn paren_if(s: &mut String, cond: bool, inner: impl FnOnce(&mut String)) {
    if cond {
        s.push('(');
        inner(s);
        s.push(')');
    } else {
        inner(s);
    }
}

fn write_expr(s: &mut String, e: &Expr, prec: u8) {
    match e {
        Expr::Val(v) => write_value(s, v, prec),
        Expr::Var(x) => s.push_str(x),
        Expr::App(f, a) => paren_if(s, prec > APP, |s| {
            write_expr(s, f, APP);
            s.push(' ');
            write_expr(s, a, POSTFIX);
        }),
        Expr::BinOp(op, a, b) => {
            let (level, lp, rp) = match op {
                BinOp::Add | BinOp::Sub => (ADD, ADD, MUL),
                BinOp::Mul => (MUL, MUL, UNARY),
                _ => (CMP, ADD, ADD), // comparisons are non-associative
            };
            paren_if(s, prec > level, |s| {
                write_expr(s, a, lp);
                s.push(' ');
                s.push_str(op.symbol());
                s.push(' ');
                write_expr(s, b, rp);
            });
        }
        Expr::If(c, t, f) => paren_if(s, prec > TOP, |s| {
            s.push_str("if ");
            write_expr(s, c, TOP);
            s.push_str(" then ");
            write_expr(s, t, TOP);
            s.push_str(" else ");
            write_expr(s, f, TOP);
        }),
        Expr::Pair(a, b) => {
            s.push('(');
            write_expr(s, a, TOP);
            s.push_str(", ");
            write_expr(s, b, TOP);
            s.push(')');
        }
        Expr::Fst(a) => keyword1(s, prec, "fst", a),
        Expr::Snd(a) => keyword1(s, prec, "snd", a),
        Expr::Inl(a) => keyword1(s, prec, "inl", a),
        Expr::Inr(a) => keyword1(s, prec, "inr", a),
        Expr::Match(scrut, xl, el, xr, er) => paren_if(s, prec > TOP, |s| {
            s.push_str("match ");
            write_expr(s, scrut, TOP);
            s.push_str(" with inl ");
            s.push_str(xl);
            s.push_str(" -> ");
            write_expr(s, el, TOP);
            s.push_str(" | inr ");
            s.push_str(xr);
            s.push_str(" -> ");
            write_expr(s, er, TOP);
            s.push_str(" end");
        }),
        Expr::Alloc(a) => keyword1(s, prec, "ref", a),
        Expr::Load(a) => paren_if(s, prec > UNARY, |s| {
            s.push('!');
            write_expr(s, a, POSTFIX);
        }),
        Expr::Store(l, r) => paren_if(s, prec > ASSIGN, |s| {
            write_expr(s, l, ASSIGN + 1);
            s.push_str(" := ");
            write_expr(s, r, ASSIGN);
        }),
        Expr::AllocArray(n, v) => keyword2(s, prec, "array", n, v),
        Expr::LoadIdx(a, i) => paren_if(s, prec > POSTFIX, |s| {
            write_expr(s, a, POSTFIX);
            s.push_str(".[");
            write_expr(s, i, TOP);
            s.push(']');
        }),
        Expr::StoreIdx(a, i, v) => paren_if(s, prec > ASSIGN, |s| {
            write_expr(s, a, POSTFIX);
            s.push_str(".[");
            write_expr(s, i, TOP);
            s.push_str("] := ");
            write_expr(s, v, ASSIGN);
        }),
        Expr::Rand(a) => keyword1(s, prec, "rand", a),
        Expr::RandLbl(l, b) => keyword2(s, prec, "rand", l, b),
        Expr::AllocTape(a) => keyword1(s, prec, "alloctape", a),
        Expr::Fork(a) => keyword1(s, prec, "fork", a),
        Expr::Faa(a, b) => keyword2(s, prec, "faa", a, b),
        Expr::Cas(a, b, c) => paren_if(s, prec > UNARY, |s| {
            s.push_str("cas ");
            write_expr(s, a, ATOM);
            s.push(' ');
            write_expr(s, b, ATOM);
            s.push(' ');
            write_expr(s, c, ATOM);
        }),
    }
}

fn keyword1(s: &mut String, prec: u8, kw: &str, a: &Expr) {
    paren_if(s, prec > UNARY, |s| {
        s.push_str(kw);
        s.push(' ');
        write_expr(s, a, ATOM);
    });
}

fn keyword2(s: &mut String, prec: u8, kw: &str, a: &Expr, b: &Expr) {
    paren_if(s, prec > UNARY, |s| {
        s.push_str(kw);
        s.push(' ');
        write_expr(s, a, ATOM);
        s.push(' ');
        write_expr(s, b, ATOM);
    });
}

fn write_value(s: &mut String, v: &Value, prec: u8) {
    match v {
        Value::Int(n) => {
            // a bare negative literal cannot follow an atom, so wrap it
            if *n < 0 && prec >= APP {
                s.push('(');
                s.push_str(&n.to_string());
                s.push(')');
            } else {
                s.push_str(&n.to_string());
            }
        }
        Value::Bool(b) => s.push_str(if *b { "true" } else { "false" }),
        Value::Unit => s.push_str("()"),
        Value::Loc(l) => s.push_str(&l.to_string()),
        Value::Lbl(l) => s.push_str(&l.to_string()),
        Value::Rec { fname, arg, body } => paren_if(s, prec > TOP, |s| {
            s.push_str("rec ");
            s.push_str(fname);
            s.push(' ');
            s.push_str(arg);
            s.push_str(" = ");
            write_expr(s, body, TOP);
        }),
        Value::Pair(a, b) => {
            s.push('(');
            write_value(s, a, TOP);
            s.push_str(", ");
            write_value(s, b, TOP);
            s.push(')');
        }
        Value::Inl(a) => paren_if(s, prec > UNARY, |s| {
            s.push_str("inl ");
            write_value(s, a, ATOM);
        }),
        Value::Inr(a) => paren_if(s, prec > UNARY, |s| {
            s.push_str("inr ");
            write_value(s, a, ATOM);
        }),
    }
}
