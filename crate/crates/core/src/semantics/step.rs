//! The per-expression step function and its lift to thread pools.
//!
//! `step` decomposes an expression into an evaluation context and a redex,
//! with compound operands evaluated right to left, and returns an exact
//! distribution over (new expression, new state, forked threads). Values
//! and stuck terms yield the empty distribution; reducible expressions
//! always step with total probability one.

use crate::dist::Dist;
use crate::syntax::{BinOp, Expr, Value};

use super::state::{Config, State};

pub type StepResult = (Expr, State, Vec<Expr>);

/// Wraps every stepped subterm back into its context.
fn lift(d: Dist<StepResult>, rebuild: impl Fn(Expr) -> Expr) -> Dist<StepResult> {
    d.map(|(e, st, forks)| (rebuild(e.clone()), st.clone(), forks.clone()))
}

fn ret(e: Expr, st: State) -> Dist<StepResult> {
    Dist::ret((e, st, Vec::new()))
}

fn stuck() -> Dist<StepResult> {
    Dist::empty()
}

pub fn step(e: &Expr, st: &State) -> Dist<StepResult> {
    match e {
        Expr::Val(_) | Expr::Var(_) => stuck(),

        Expr::App(f, a) => {
            if !a.is_val() {
                let f = f.clone();
                return lift(step(a, st), move |a2| Expr::App(f.clone(), Box::new(a2)));
            }
            if !f.is_val() {
                let a = a.clone();
                return lift(step(f, st), move |f2| Expr::App(Box::new(f2), a.clone()));
            }
            match f.as_val() {
                Some(Value::Rec { fname, arg, body }) => {
                    let closure = f.as_val().unwrap().clone();
                    let v = a.as_val().unwrap();
                    let unfolded = body.subst(fname, &closure).subst(arg, v);
                    ret(unfolded, st.clone())
                }
                _ => stuck(),
            }
        }

        Expr::BinOp(op, a, b) => {
            if !b.is_val() {
                let op = *op;
                let a = a.clone();
                return lift(step(b, st), move |b2| {
                    Expr::BinOp(op, a.clone(), Box::new(b2))
                });
            }
            if !a.is_val() {
                let op = *op;
                let b = b.clone();
                return lift(step(a, st), move |a2| {
                    Expr::BinOp(op, Box::new(a2), b.clone())
                });
            }
            match eval_binop(*op, a.as_val().unwrap(), b.as_val().unwrap()) {
                Some(v) => ret(Expr::Val(v), st.clone()),
                None => stuck(),
            }
        }

        Expr::If(c, t, f) => {
            if !c.is_val() {
                let t = t.clone();
                let f = f.clone();
                return lift(step(c, st), move |c2| {
                    Expr::If(Box::new(c2), t.clone(), f.clone())
                });
            }
            match c.as_val() {
                Some(Value::Bool(true)) => ret((**t).clone(), st.clone()),
                Some(Value::Bool(false)) => ret((**f).clone(), st.clone()),
                _ => stuck(),
            }
        }

        Expr::Pair(a, b) => {
            if !b.is_val() {
                let a = a.clone();
                return lift(step(b, st), move |b2| Expr::Pair(a.clone(), Box::new(b2)));
            }
            if !a.is_val() {
                let b = b.clone();
                return lift(step(a, st), move |a2| Expr::Pair(Box::new(a2), b.clone()));
            }
            let v = Value::pair(a.as_val().unwrap().clone(), b.as_val().unwrap().clone());
            ret(Expr::Val(v), st.clone())
        }

        Expr::Fst(a) => unary(a, st, Expr::Fst, |v, st| match v {
            Value::Pair(x, _) => Some(((*x).into_expr(), st, vec![])),
            _ => None,
        }),
        Expr::Snd(a) => unary(a, st, Expr::Snd, |v, st| match v {
            Value::Pair(_, y) => Some(((*y).into_expr(), st, vec![])),
            _ => None,
        }),
        Expr::Inl(a) => unary(a, st, Expr::Inl, |v, st| {
            Some((Expr::Val(Value::inl(v)), st, vec![]))
        }),
        Expr::Inr(a) => unary(a, st, Expr::Inr, |v, st| {
            Some((Expr::Val(Value::inr(v)), st, vec![]))
        }),

        Expr::Match(scrut, xl, el, xr, er) => {
            if !scrut.is_val() {
                let (xl, el, xr, er) = (xl.clone(), el.clone(), xr.clone(), er.clone());
                return lift(step(scrut, st), move |s2| {
                    Expr::Match(Box::new(s2), xl.clone(), el.clone(), xr.clone(), er.clone())
                });
            }
            match scrut.as_val() {
                Some(Value::Inl(v)) => ret(el.subst(xl, v), st.clone()),
                Some(Value::Inr(v)) => ret(er.subst(xr, v), st.clone()),
                _ => stuck(),
            }
        }

        Expr::Alloc(a) => unary(a, st, Expr::Alloc, |v, mut st| {
            let l = st.alloc(&v, 1);
            Some((Expr::Val(Value::Loc(l)), st, vec![]))
        }),

        Expr::Load(a) => unary(a, st, Expr::Load, |v, st| match v {
            Value::Loc(l) => st.load(l).map(|w| (Expr::Val(w.clone()), st.clone(), vec![])),
            _ => None,
        }),

        Expr::Store(lhs, rhs) => {
            if !rhs.is_val() {
                let lhs = lhs.clone();
                return lift(step(rhs, st), move |r2| {
                    Expr::Store(lhs.clone(), Box::new(r2))
                });
            }
            if !lhs.is_val() {
                let rhs = rhs.clone();
                return lift(step(lhs, st), move |l2| {
                    Expr::Store(Box::new(l2), rhs.clone())
                });
            }
            match lhs.as_val() {
                Some(Value::Loc(l)) if st.heap.contains_key(l) => {
                    let mut st2 = st.clone();
                    st2.heap.insert(*l, rhs.as_val().unwrap().clone());
                    ret(Expr::unit(), st2)
                }
                _ => stuck(),
            }
        }

        Expr::AllocArray(size, init) => {
            if !init.is_val() {
                let size = size.clone();
                return lift(step(init, st), move |i2| {
                    Expr::AllocArray(size.clone(), Box::new(i2))
                });
            }
            if !size.is_val() {
                let init = init.clone();
                return lift(step(size, st), move |s2| {
                    Expr::AllocArray(Box::new(s2), init.clone())
                });
            }
            match size.as_val().and_then(Value::as_int) {
                Some(n) if n >= 1 => {
                    let mut st2 = st.clone();
                    let base = st2.alloc(init.as_val().unwrap(), n as u64);
                    ret(Expr::Val(Value::Loc(base)), st2)
                }
                _ => stuck(),
            }
        }

        Expr::LoadIdx(arr, idx) => {
            if !idx.is_val() {
                let arr = arr.clone();
                return lift(step(idx, st), move |i2| {
                    Expr::LoadIdx(arr.clone(), Box::new(i2))
                });
            }
            if !arr.is_val() {
                let idx = idx.clone();
                return lift(step(arr, st), move |a2| {
                    Expr::LoadIdx(Box::new(a2), idx.clone())
                });
            }
            match (arr.as_val(), idx.as_val().and_then(Value::as_int)) {
                (Some(Value::Loc(l)), Some(i)) if i >= 0 => {
                    match offset(*l, i).and_then(|cell| st.load(cell)) {
                        Some(w) => ret(Expr::Val(w.clone()), st.clone()),
                        None => stuck(),
                    }
                }
                _ => stuck(),
            }
        }

        Expr::StoreIdx(arr, idx, rhs) => {
            if !rhs.is_val() {
                let (arr, idx) = (arr.clone(), idx.clone());
                return lift(step(rhs, st), move |r2| {
                    Expr::StoreIdx(arr.clone(), idx.clone(), Box::new(r2))
                });
            }
            if !idx.is_val() {
                let (arr, rhs) = (arr.clone(), rhs.clone());
                return lift(step(idx, st), move |i2| {
                    Expr::StoreIdx(arr.clone(), Box::new(i2), rhs.clone())
                });
            }
            if !arr.is_val() {
                let (idx, rhs) = (idx.clone(), rhs.clone());
                return lift(step(arr, st), move |a2| {
                    Expr::StoreIdx(Box::new(a2), idx.clone(), rhs.clone())
                });
            }
            match (arr.as_val(), idx.as_val().and_then(Value::as_int)) {
                (Some(Value::Loc(l)), Some(i)) if i >= 0 => match offset(*l, i) {
                    Some(cell) if st.heap.contains_key(&cell) => {
                        let mut st2 = st.clone();
                        st2.heap.insert(cell, rhs.as_val().unwrap().clone());
                        ret(Expr::unit(), st2)
                    }
                    _ => stuck(),
                },
                _ => stuck(),
            }
        }

        Expr::Rand(bound) => {
            if !bound.is_val() {
                return lift(step(bound, st), |b2| Expr::Rand(Box::new(b2)));
            }
            match bound.as_val().and_then(Value::as_int) {
                Some(n) if n >= 0 => uniform_outcomes(n as u64, st),
                _ => stuck(),
            }
        }

        Expr::RandLbl(lbl, bound) => {
            if !bound.is_val() {
                let lbl = lbl.clone();
                return lift(step(bound, st), move |b2| {
                    Expr::RandLbl(lbl.clone(), Box::new(b2))
                });
            }
            if !lbl.is_val() {
                let bound = bound.clone();
                return lift(step(lbl, st), move |l2| {
                    Expr::RandLbl(Box::new(l2), bound.clone())
                });
            }
            let n = match bound.as_val().and_then(Value::as_int) {
                Some(n) if n >= 0 => n as u64,
                _ => return stuck(),
            };
            match lbl.as_val() {
                Some(Value::Lbl(l)) => match st.tapes.get(l) {
                    Some(tape) if tape.bound == n => {
                        if let Some(&head) = tape.queue.front() {
                            // nonempty matching tape: deterministic pop
                            let mut st2 = st.clone();
                            st2.tapes.get_mut(l).unwrap().queue.pop_front();
                            ret(Expr::int(head as i64), st2)
                        } else {
                            // empty matching tape: behaves like plain rand
                            uniform_outcomes(n, st)
                        }
                    }
                    // bound mismatch (or dangling label): unlabelled uniform
                    // sampling with the tape left untouched
                    _ => uniform_outcomes(n, st),
                },
                _ => stuck(),
            }
        }

        Expr::AllocTape(bound) => {
            if !bound.is_val() {
                return lift(step(bound, st), |b2| Expr::AllocTape(Box::new(b2)));
            }
            match bound.as_val().and_then(Value::as_int) {
                Some(n) if n >= 0 => {
                    let mut st2 = st.clone();
                    let l = st2.alloc_tape(n as u64);
                    ret(Expr::Val(Value::Lbl(l)), st2)
                }
                _ => stuck(),
            }
        }

        // fork does not evaluate its body; the new thread does
        Expr::Fork(body) => Dist::ret((Expr::unit(), st.clone(), vec![(**body).clone()])),

        Expr::Faa(loc, add) => {
            if !add.is_val() {
                let loc = loc.clone();
                return lift(step(add, st), move |a2| {
                    Expr::Faa(loc.clone(), Box::new(a2))
                });
            }
            if !loc.is_val() {
                let add = add.clone();
                return lift(step(loc, st), move |l2| {
                    Expr::Faa(Box::new(l2), add.clone())
                });
            }
            match (loc.as_val(), add.as_val().and_then(Value::as_int)) {
                (Some(Value::Loc(l)), Some(k)) => match st.load(*l).and_then(Value::as_int) {
                    Some(old) => match old.checked_add(k) {
                        Some(new) => {
                            let mut st2 = st.clone();
                            st2.heap.insert(*l, Value::Int(new));
                            ret(Expr::int(old), st2)
                        }
                        None => stuck(),
                    },
                    None => stuck(),
                },
                _ => stuck(),
            }
        }

        Expr::Cas(loc, expected, new) => {
            if !new.is_val() {
                let (loc, expected) = (loc.clone(), expected.clone());
                return lift(step(new, st), move |n2| {
                    Expr::Cas(loc.clone(), expected.clone(), Box::new(n2))
                });
            }
            if !expected.is_val() {
                let (loc, new) = (loc.clone(), new.clone());
                return lift(step(expected, st), move |e2| {
                    Expr::Cas(loc.clone(), Box::new(e2), new.clone())
                });
            }
            if !loc.is_val() {
                let (expected, new) = (expected.clone(), new.clone());
                return lift(step(loc, st), move |l2| {
                    Expr::Cas(Box::new(l2), expected.clone(), new.clone())
                });
            }
            let exp = expected.as_val().unwrap();
            match loc.as_val() {
                Some(Value::Loc(l)) => match st.load(*l) {
                    Some(cur) if cur.is_comparable() && exp.is_comparable() => {
                        if cur == exp {
                            let mut st2 = st.clone();
                            st2.heap.insert(*l, new.as_val().unwrap().clone());
                            ret(Expr::bool(true), st2)
                        } else {
                            ret(Expr::bool(false), st.clone())
                        }
                    }
                    _ => stuck(),
                },
                _ => stuck(),
            }
        }
    }
}

fn offset(base: crate::syntax::Loc, i: i64) -> Option<crate::syntax::Loc> {
    u32::try_from(i)
        .ok()
        .and_then(|i| base.0.checked_add(i))
        .map(crate::syntax::Loc)
}

fn uniform_outcomes(n: u64, st: &State) -> Dist<StepResult> {
    Dist::uniform(n).map(|k| (Expr::int(*k as i64), st.clone(), Vec::new()))
}

fn unary(
    a: &Expr,
    st: &State,
    rebuild: fn(Box<Expr>) -> Expr,
    redex: impl Fn(Value, State) -> Option<StepResult>,
) -> Dist<StepResult> {
    if !a.is_val() {
        return lift(step(a, st), move |a2| rebuild(Box::new(a2)));
    }
    match redex(a.as_val().unwrap().clone(), st.clone()) {
        Some(result) => Dist::ret(result),
        None => stuck(),
    }
}

fn eval_binop(op: BinOp, a: &Value, b: &Value) -> Option<Value> {
    use BinOp::*;
    match op {
        Add | Sub | Mul => {
            let (x, y) = (a.as_int()?, b.as_int()?);
            let r = match op {
                Add => x.checked_add(y)?,
                Sub => x.checked_sub(y)?,
                Mul => x.checked_mul(y)?,
                _ => unreachable!(),
            };
            Some(Value::Int(r))
        }
        Eq | Ne => {
            // equality only compares word-sized data, like cas
            if !a.is_comparable() || !b.is_comparable() {
                return None;
            }
            let eq = a == b;
            Some(Value::Bool(if op == Eq { eq } else { !eq }))
        }
        Lt | Le | Gt | Ge => {
            let (x, y) = (a.as_int()?, b.as_int()?);
            let r = match op {
                Lt => x < y,
                Le => x <= y,
                Gt => x > y,
                Ge => x >= y,
                _ => unreachable!(),
            };
            Some(Value::Bool(r))
        }
    }
}

impl Value {
    fn into_expr(self) -> Expr {
        Expr::Val(self)
    }
}

/// Thread-pool step: steps thread `i` of the configuration.
///
/// Final configurations do not step; a thread that is already a value gives
/// a stutter step; otherwise the stepped thread is replaced in place and
/// any forked threads are appended at the end of the pool.
pub fn tpstep(cfg: &Config, i: usize) -> Dist<Config> {
    assert!(i < cfg.threads.len(), "thread index {i} out of range");
    if cfg.is_final() {
        return Dist::empty();
    }
    if cfg.threads[i].is_val() {
        return Dist::ret(cfg.clone());
    }
    step(&cfg.threads[i], &cfg.state).map(|(e2, st2, forks)| {
        let mut threads = cfg.threads.clone();
        threads[i] = e2.clone();
        threads.extend(forks.iter().cloned());
        Config {
            threads,
            state: st2.clone(),
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::rat;
    use crate::syntax::{Lbl, Loc};

    fn empty() -> State {
        State::new()
    }

    #[test]
    fn if_true_steps_to_first_branch() {
        let e = Expr::If(
            Box::new(Expr::bool(true)),
            Box::new(Expr::int(1)),
            Box::new(Expr::int(2)),
        );
        let d = step(&e, &empty());
        assert_eq!(d, Dist::ret((Expr::int(1), empty(), vec![])));
    }

    #[test]
    fn rand_three_is_uniform() {
        let d = step(&Expr::Rand(Box::new(Expr::int(3))), &empty());
        assert_eq!(d.support_len(), 4);
        for k in 0..=3 {
            assert_eq!(d.pmf(&(Expr::int(k), empty(), vec![])), rat(1, 4));
        }
    }

    #[test]
    fn labelled_rand_pops_nonempty_tape() {
        let mut st = empty();
        let l = st.alloc_tape(3);
        st.tapes.get_mut(&l).unwrap().queue.extend([2, 0]);
        let e = Expr::RandLbl(
            Box::new(Expr::Val(Value::Lbl(l))),
            Box::new(Expr::int(3)),
        );
        let d = step(&e, &st);
        let mut st2 = st.clone();
        st2.tapes.get_mut(&l).unwrap().queue.pop_front();
        assert_eq!(d, Dist::ret((Expr::int(2), st2, vec![])));
    }

    #[test]
    fn labelled_rand_empty_tape_is_uniform() {
        let mut st = empty();
        let l = st.alloc_tape(3);
        let e = Expr::RandLbl(
            Box::new(Expr::Val(Value::Lbl(l))),
            Box::new(Expr::int(3)),
        );
        let d = step(&e, &st);
        assert_eq!(d.support_len(), 4);
        assert_eq!(d.mass_rat(), rat(1, 1));
        // the tape is left untouched on every outcome
        for ((_, st2, _), _) in d.iter().map(|(k, v)| (k, v)) {
            assert_eq!(st2, &st);
        }
    }

    #[test]
    fn labelled_rand_bound_mismatch_is_uniform_untouched() {
        // regression pin for the interpretation choice: a tape with another
        // bound neither pops nor changes
        let mut st = empty();
        let l = st.alloc_tape(7);
        st.tapes.get_mut(&l).unwrap().queue.extend([5]);
        let e = Expr::RandLbl(
            Box::new(Expr::Val(Value::Lbl(l))),
            Box::new(Expr::int(3)),
        );
        let d = step(&e, &st);
        assert_eq!(d.support_len(), 4);
        for ((_, st2, _), _) in d.iter() {
            assert_eq!(st2, &st);
        }
    }

    #[test]
    fn stuck_terms_have_empty_step() {
        let bad = Expr::binop(BinOp::Add, Expr::int(1), Expr::bool(true));
        assert!(step(&bad, &empty()).is_empty());
        assert!(step(&Expr::int(5), &empty()).is_empty());
        assert!(step(&Expr::var("x"), &empty()).is_empty());
    }

    #[test]
    fn alloc_uses_smallest_unused_location() {
        let e = Expr::Alloc(Box::new(Expr::int(0)));
        let d = step(&e, &empty());
        let ((res, st2, _), _) = d.iter().next().unwrap();
        assert_eq!(res, &Expr::Val(Value::Loc(Loc(0))));
        assert_eq!(st2.load(Loc(0)), Some(&Value::Int(0)));
        // a second allocation lands on index 1
        let d2 = step(&e, st2);
        let ((res2, _, _), _) = d2.iter().next().unwrap();
        assert_eq!(res2, &Expr::Val(Value::Loc(Loc(1))));
    }

    #[test]
    fn fork_spawns_and_returns_unit() {
        let e = Expr::Fork(Box::new(Expr::int(42)));
        let d = step(&e, &empty());
        assert_eq!(d, Dist::ret((Expr::unit(), empty(), vec![Expr::int(42)])));
    }

    #[test]
    fn faa_returns_prior_value() {
        let mut st = empty();
        let l = st.alloc(&Value::Int(10), 1);
        let e = Expr::Faa(
            Box::new(Expr::Val(Value::Loc(l))),
            Box::new(Expr::int(5)),
        );
        let d = step(&e, &st);
        let ((res, st2, _), _) = d.iter().next().unwrap();
        assert_eq!(res, &Expr::int(10));
        assert_eq!(st2.load(l), Some(&Value::Int(15)));
    }

    #[test]
    fn cas_swaps_only_on_match() {
        let mut st = empty();
        let l = st.alloc(&Value::Bool(false), 1);
        let mk = |exp: bool| {
            Expr::Cas(
                Box::new(Expr::Val(Value::Loc(l))),
                Box::new(Expr::bool(exp)),
                Box::new(Expr::bool(true)),
            )
        };
        let hit = step(&mk(false), &st);
        let ((res, st2, _), _) = hit.iter().next().unwrap();
        assert_eq!(res, &Expr::bool(true));
        assert_eq!(st2.load(l), Some(&Value::Bool(true)));
        let miss = step(&mk(true), &st);
        let ((res, st3, _), _) = miss.iter().next().unwrap();
        assert_eq!(res, &Expr::bool(false));
        assert_eq!(st3, &st);
    }

    #[test]
    fn right_to_left_application_order() {
        // in `f (rand 1)` the argument steps first even though f is stuck
        let e = Expr::app(Expr::var("f"), Expr::Rand(Box::new(Expr::int(1))));
        let d = step(&e, &empty());
        assert_eq!(d.support_len(), 2);
        // in `(rand 1) v` the function position steps since the arg is a value
        let e2 = Expr::app(Expr::Rand(Box::new(Expr::int(1))), Expr::int(9));
        let d2 = step(&e2, &empty());
        assert_eq!(d2.support_len(), 2);
    }

    #[test]
    fn step_mass_is_zero_or_one() {
        let exprs = vec![
            Expr::int(1),
            Expr::Rand(Box::new(Expr::int(5))),
            Expr::binop(BinOp::Add, Expr::int(1), Expr::int(2)),
            Expr::binop(BinOp::Add, Expr::int(1), Expr::bool(true)),
            Expr::Load(Box::new(Expr::Val(Value::Loc(Loc(9))))),
        ];
        for e in exprs {
            let m = step(&e, &empty()).mass_rat();
            assert!(m == rat(0, 1) || m == rat(1, 1), "mass {m} for {e}");
        }
    }

    #[test]
    fn tpstep_final_is_empty() {
        let cfg = Config::initial(Expr::int(1));
        assert!(tpstep(&cfg, 0).is_empty());
    }

    #[test]
    fn tpstep_value_thread_stutters() {
        let cfg = Config {
            threads: vec![Expr::Rand(Box::new(Expr::int(1))), Expr::int(7)],
            state: State::new(),
        };
        assert_eq!(tpstep(&cfg, 1), Dist::ret(cfg.clone()));
    }

    #[test]
    fn tpstep_appends_forked_threads() {
        // hand application of the fork rule plus the append clause
        let cfg = Config {
            threads: vec![Expr::Fork(Box::new(Expr::var("e0"))), Expr::int(3)],
            state: State::new(),
        };
        let d = tpstep(&cfg, 0);
        let want = Config {
            threads: vec![Expr::unit(), Expr::int(3), Expr::var("e0")],
            state: State::new(),
        };
        assert_eq!(d, Dist::ret(want));
    }

    #[test]
    fn dangling_label_samples_uniformly() {
        let e = Expr::RandLbl(
            Box::new(Expr::Val(Value::Lbl(Lbl(4)))),
            Box::new(Expr::int(1)),
        );
        let d = step(&e, &empty());
        assert_eq!(d.support_len(), 2);
    }
}
