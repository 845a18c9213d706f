//! Tape erasure: the transformation that removes presampling tapes.
//!
//! `alloctape e_b` becomes `let _ = e_b in ()` (unit stands in for the
//! label) and `rand e_l e_b` becomes `let b = e_b in let _ = e_l in rand b`
//! for a fresh `b`, preserving the fixed right-to-left evaluation order of
//! the original operands. Everything else is mapped structurally.

use std::collections::BTreeSet;

use super::ast::{Expr, Symbol, Value};

pub fn erase(e: &Expr) -> Expr {
    let mut used = BTreeSet::new();
    collect_syms(e, &mut used);
    let mut supply = Supply { used, counter: 0 };
    go(e, &mut supply)
}

struct Supply {
    used: BTreeSet<Symbol>,
    counter: u32,
}

impl Supply {
    fn fresh(&mut self) -> Symbol {
        loop {
            let cand = Symbol::from(format!("_b{}", self.counter).as_str());
            self.counter += 1;
            if self.used.insert(cand.clone()) {
                return cand;
            }
        }
    }
}

fn collect_syms(e: &Expr, out: &mut BTreeSet<Symbol>) {
    match e {
        Expr::Var(x) => {
            out.insert(x.clone());
        }
        Expr::Val(Value::Rec { fname, arg, body }) => {
            out.insert(fname.clone());
            out.insert(arg.clone());
            collect_syms(body, out);
        }
        Expr::Match(scrut, xl, el, xr, er) => {
            out.insert(xl.clone());
            out.insert(xr.clone());
            collect_syms(scrut, out);
            collect_syms(el, out);
            collect_syms(er, out);
        }
        _ => {
            for c in super::ast::children(e) {
                collect_syms(c, out);
            }
        }
    }
}

fn go(e: &Expr, supply: &mut Supply) -> Expr {
    let mut r = |e: &Expr| Box::new(go(e, supply));
    match e {
        Expr::AllocTape(bound) => Expr::let_in("_", go(bound, supply), Expr::unit()),
        Expr::RandLbl(lbl, bound) => {
            let b = supply.fresh();
            Expr::let_in(
                b.clone(),
                go(bound, supply),
                Expr::let_in(
                    "_",
                    go(lbl, supply),
                    Expr::Rand(Box::new(Expr::Var(b))),
                ),
            )
        }
        Expr::Val(Value::Rec { fname, arg, body }) => Expr::Val(Value::Rec {
            fname: fname.clone(),
            arg: arg.clone(),
            body: std::sync::Arc::new(go(body, supply)),
        }),
        Expr::Val(_) | Expr::Var(_) => e.clone(),
        Expr::App(a, b) => Expr::App(r(a), r(b)),
        Expr::BinOp(op, a, b) => Expr::BinOp(*op, r(a), r(b)),
        Expr::If(a, b, c) => Expr::If(r(a), r(b), r(c)),
        Expr::Pair(a, b) => Expr::Pair(r(a), r(b)),
        Expr::Fst(a) => Expr::Fst(r(a)),
        Expr::Snd(a) => Expr::Snd(r(a)),
        Expr::Inl(a) => Expr::Inl(r(a)),
        Expr::Inr(a) => Expr::Inr(r(a)),
        Expr::Match(scrut, xl, el, xr, er) => {
            Expr::Match(r(scrut), xl.clone(), r(el), xr.clone(), r(er))
        }
        Expr::Alloc(a) => Expr::Alloc(r(a)),
        Expr::Load(a) => Expr::Load(r(a)),
        Expr::Store(a, b) => Expr::Store(r(a), r(b)),
        Expr::AllocArray(a, b) => Expr::AllocArray(r(a), r(b)),
        Expr::LoadIdx(a, b) => Expr::LoadIdx(r(a), r(b)),
        Expr::StoreIdx(a, b, c) => Expr::StoreIdx(r(a), r(b), r(c)),
        Expr::Rand(a) => Expr::Rand(r(a)),
        Expr::Fork(a) => Expr::Fork(r(a)),
        Expr::Faa(a, b) => Expr::Faa(r(a), r(b)),
        Expr::Cas(a, b, c) => Expr::Cas(r(a), r(b), r(c)),
    }
}

/// True if the tree still mentions tapes anywhere (including inside
/// closure bodies); erased programs must not.
pub fn mentions_tapes(e: &Expr) -> bool {
    match e {
        Expr::AllocTape(_) | Expr::RandLbl(..) => true,
        Expr::Val(Value::Rec { body, .. }) => mentions_tapes(body),
        _ => super::ast::children(e).iter().any(|c| mentions_tapes(c)),
    }
}

#[cfg(test)]
mod tests {
    use super::super::ast::Lbl;
    use super::*;

    #[test]
    fn erase_alloctape() {
        let e = Expr::AllocTape(Box::new(Expr::int(3)));
        let got = erase(&e);
        assert_eq!(got, Expr::let_in("_", Expr::int(3), Expr::unit()));
        assert!(!mentions_tapes(&got));
    }

    #[test]
    fn erase_labelled_rand() {
        let lbl = Expr::Val(Value::Lbl(Lbl(0)));
        let e = Expr::RandLbl(Box::new(lbl.clone()), Box::new(Expr::int(3)));
        let got = erase(&e);
        let want = Expr::let_in(
            "_b0",
            Expr::int(3),
            Expr::let_in("_", lbl, Expr::Rand(Box::new(Expr::var("_b0")))),
        );
        assert_eq!(got, want);
    }

    #[test]
    fn erase_idempotent() {
        let e = Expr::Pair(
            Box::new(Expr::AllocTape(Box::new(Expr::int(1)))),
            Box::new(Expr::RandLbl(
                Box::new(Expr::var("t")),
                Box::new(Expr::int(2)),
            )),
        );
        let once = erase(&e);
        assert_eq!(erase(&once), once);
        assert!(!mentions_tapes(&once));
    }

    #[test]
    fn erase_avoids_capturing_user_names() {
        // a user variable literally called `_b0` must not be captured
        let e = Expr::let_in(
            "_b0",
            Expr::int(9),
            Expr::RandLbl(Box::new(Expr::var("_b0")), Box::new(Expr::int(3))),
        );
        let got = erase(&e);
        let fv = got.free_vars();
        assert!(fv.is_empty(), "erasure captured or freed a variable: {fv:?}");
        // the label operand must still reference the original binder
        let text = crate::syntax::pretty(&got);
        assert!(text.contains("_b1"), "fresh name not used: {text}");
    }
}
