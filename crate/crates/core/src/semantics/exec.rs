//! Scheduler-driven execution: single scheduler steps, finite-horizon
//! execution and partial execution, presampling, and the scheduler
//! erasability check.

use crate::dist::Dist;
use crate::syntax::{Expr, Lbl, Value};

use super::scheduler::Policy;
use super::state::{Config, State};
use super::step::tpstep;

/// One scheduler step: ask the policy for a thread, step it, and return the
/// new scheduler state paired with the new configuration.
pub fn sched_step(policy: &dyn Policy, zeta: u64, cfg: &Config) -> Dist<(u64, Config)> {
    policy
        .pick_raw(zeta, cfg)
        .bind(|(zeta2, i)| tpstep(cfg, *i).map(|c| (*zeta2, c.clone())))
}

/// Value distribution of the first thread after at most `n` scheduler
/// steps. This is the direct recursive definition, unmemoized; the exact
/// engine provides a memoized equivalent for larger horizons.
pub fn exec_n(policy: &dyn Policy, zeta: u64, cfg: &Config, n: u64) -> Dist<Value> {
    if cfg.is_final() {
        return Dist::ret(cfg.result().unwrap().clone());
    }
    if n == 0 {
        return Dist::empty();
    }
    sched_step(policy, zeta, cfg).bind(|(z2, c2)| exec_n(policy, *z2, c2, n - 1))
}

/// Partial execution: keeps probability mass on configurations that are not
/// yet final when the horizon runs out.
pub fn pexec_n(policy: &dyn Policy, zeta: u64, cfg: &Config, n: u64) -> Dist<(u64, Config)> {
    if cfg.is_final() || n == 0 {
        return Dist::ret((zeta, cfg.clone()));
    }
    sched_step(policy, zeta, cfg).bind(|(z2, c2)| pexec_n(policy, *z2, c2, n - 1))
}

#[derive(Debug, thiserror::Error)]
pub enum PresampleError {
    #[error("label {0} has no allocated tape")]
    Unallocated(Lbl),
    #[error("value {value} exceeds the bound {bound} of tape {label}")]
    AboveBound { label: Lbl, value: u64, bound: u64 },
}

/// Appends `v` to the queue of tape `ℓ`; the heap is untouched.
pub fn presample(state: &State, label: Lbl, v: u64) -> Result<State, PresampleError> {
    let tape = state
        .tapes
        .get(&label)
        .ok_or(PresampleError::Unallocated(label))?;
    if v > tape.bound {
        return Err(PresampleError::AboveBound {
            label,
            value: v,
            bound: tape.bound,
        });
    }
    let mut st2 = state.clone();
    st2.tapes.get_mut(&label).unwrap().queue.push_back(v);
    Ok(st2)
}

/// Outcome of [`erasability_check`]: on failure, a thread pool whose
/// probability differs between the presampled and original runs.
#[derive(Clone, Debug)]
pub enum ErasabilityVerdict {
    Pass,
    Fail {
        counterexample: Vec<Expr>,
        with_presample: crate::dist::Rat,
        without: crate::dist::Rat,
    },
}

impl ErasabilityVerdict {
    pub fn passed(&self) -> bool {
        matches!(self, ErasabilityVerdict::Pass)
    }
}

/// Checks that uniformly presampling one value onto tape `label` and then
/// running partial execution leaves the thread-pool distribution unchanged:
/// the observational face of a scheduler-erasable state update.
pub fn erasability_check(
    policy: &dyn Policy,
    zeta: u64,
    cfg: &Config,
    label: Lbl,
    n: u64,
) -> Result<ErasabilityVerdict, PresampleError> {
    let tape = cfg
        .state
        .tapes
        .get(&label)
        .ok_or(PresampleError::Unallocated(label))?;
    let bound = tape.bound;
    let weight = crate::dist::rat(1, bound as i64 + 1);
    let mut updated = Vec::new();
    for v in 0..=bound {
        updated.push((presample(&cfg.state, label, v)?, weight.clone()));
    }
    let mu: Dist<State> = Dist::from_weighted(updated);

    let lhs = mu
        .bind(|st2| {
            let cfg2 = Config {
                threads: cfg.threads.clone(),
                state: st2.clone(),
            };
            pexec_n(policy, zeta, &cfg2, n)
        })
        .map(|(_, c)| c.threads.clone());
    let rhs = pexec_n(policy, zeta, cfg, n).map(|(_, c)| c.threads.clone());

    if lhs == rhs {
        return Ok(ErasabilityVerdict::Pass);
    }
    // find a differing thread pool for the report
    let mut pools: Vec<&Vec<Expr>> = lhs.outcomes().chain(rhs.outcomes()).collect();
    pools.sort();
    pools.dedup();
    for pool in pools {
        let (a, b) = (lhs.pmf(pool), rhs.pmf(pool));
        if a != b {
            return Ok(ErasabilityVerdict::Fail {
                counterexample: pool.clone(),
                with_presample: a,
                without: b,
            });
        }
    }
    unreachable!("distributions differ but all outcomes agree");
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::rat;
    use crate::semantics::scheduler::{RoundRobin, SchedView, Scripted, UniformRandom};
    use crate::semantics::step::tpstep;

    fn two_thread_cfg() -> Config {
        Config {
            threads: vec![
                Expr::Rand(Box::new(Expr::int(1))),
                Expr::Alloc(Box::new(Expr::int(0))),
            ],
            state: State::new(),
        }
    }

    #[test]
    fn round_robin_single_thread_matches_tpstep() {
        let cfg = Config::initial(Expr::Rand(Box::new(Expr::int(2))));
        let via_sched = sched_step(&RoundRobin, 0, &cfg);
        let direct = tpstep(&cfg, 0).map(|c| (1u64, c.clone()));
        assert_eq!(via_sched, direct);
    }

    #[test]
    fn scripted_picks_thread_one_first() {
        let cfg = two_thread_cfg();
        let d = sched_step(&Scripted(vec![1, 0]), 0, &cfg);
        // all outcomes must have thread 0 untouched and thread 1 stepped
        for ((_, c), _) in d.iter() {
            assert_eq!(c.threads[0], cfg.threads[0]);
            assert!(c.threads[1].is_val());
        }
    }

    #[test]
    fn uniform_random_mixes_tpsteps_evenly() {
        // expand the bind by hand on a two-thread configuration
        let cfg = two_thread_cfg();
        let got = sched_step(&UniformRandom, 0, &cfg);
        let want = tpstep(&cfg, 0)
            .map(|c| (0u64, c.clone()))
            .scale(&rat(1, 2))
            .iter()
            .map(|(k, v)| (k.clone(), v.clone()))
            .chain(
                tpstep(&cfg, 1)
                    .map(|c| (0u64, c.clone()))
                    .scale(&rat(1, 2))
                    .iter()
                    .map(|(k, v)| (k.clone(), v.clone()))
                    .collect::<Vec<_>>(),
            )
            .collect::<Vec<_>>();
        assert_eq!(got, Dist::from_weighted(want));
    }

    #[test]
    fn exec_final_ignores_horizon() {
        let cfg = Config::initial(Expr::int(5));
        assert_eq!(exec_n(&RoundRobin, 0, &cfg, 0), Dist::ret(Value::Int(5)));
    }

    #[test]
    fn exec_zero_horizon_nonfinal_is_empty() {
        let cfg = Config::initial(Expr::Rand(Box::new(Expr::int(1))));
        assert!(exec_n(&RoundRobin, 0, &cfg, 0).is_empty());
    }

    #[test]
    fn pexec_zero_horizon_is_point() {
        let cfg = Config::initial(Expr::Rand(Box::new(Expr::int(1))));
        assert_eq!(
            pexec_n(&RoundRobin, 3, &cfg, 0),
            Dist::ret((3, cfg.clone()))
        );
    }

    #[test]
    fn presample_appends_in_order() {
        let mut st = State::new();
        let l = st.alloc_tape(3);
        let st1 = presample(&st, l, 2).unwrap();
        assert_eq!(st1.tapes[&l].queue, [2]);
        let st2 = presample(&st1, l, 0).unwrap();
        assert_eq!(st2.tapes[&l].queue, [2, 0]);
        assert_eq!(st2.heap, st.heap);
    }

    #[test]
    fn presample_rejects_bad_inputs() {
        let mut st = State::new();
        let l = st.alloc_tape(3);
        assert!(matches!(
            presample(&st, Lbl(9), 0),
            Err(PresampleError::Unallocated(_))
        ));
        assert!(matches!(
            presample(&st, l, 4),
            Err(PresampleError::AboveBound { .. })
        ));
    }

    #[test]
    fn erasability_passes_on_tape_reader() {
        // one thread reads the tape it owns; uniform presampling must be
        // invisible in the thread-pool distribution
        let mut st = State::new();
        let l = st.alloc_tape(1);
        let cfg = Config {
            threads: vec![Expr::RandLbl(
                Box::new(Expr::Val(Value::Lbl(l))),
                Box::new(Expr::int(1)),
            )],
            state: st,
        };
        for n in 0..=4 {
            let v = erasability_check(&RoundRobin, 0, &cfg, l, n).unwrap();
            assert!(v.passed(), "failed at n={n}");
        }
    }

    #[test]
    fn erasability_trivial_when_tape_never_read() {
        let mut st = State::new();
        let l = st.alloc_tape(3);
        let cfg = Config {
            threads: vec![Expr::binop(
                crate::syntax::BinOp::Add,
                Expr::int(1),
                Expr::int(2),
            )],
            state: st,
        };
        let v = erasability_check(&RoundRobin, 0, &cfg, l, 3).unwrap();
        assert!(v.passed());
    }

    /// A policy that cheats: it inspects tape queue contents through the
    /// full-view backdoor, violating the censoring contract on purpose.
    struct TapePeeker;

    impl Policy for TapePeeker {
        fn name(&self) -> String {
            "tape_peeker".into()
        }

        fn pick(&self, zeta: u64, view: &SchedView) -> Dist<(u64, usize)> {
            Dist::ret((zeta, 0.min(view.threads.len() - 1)))
        }

        fn pick_raw(&self, zeta: u64, cfg: &Config) -> Dist<(u64, usize)> {
            let peeked = cfg.state.tapes.values().any(|t| !t.queue.is_empty());
            let i = if peeked { 1 } else { 0 };
            Dist::ret((zeta, i.min(cfg.threads.len() - 1)))
        }
    }

    #[test]
    fn erasability_fails_for_tape_peeking_policy() {
        // two threads whose progress is distinguishable in the pool
        let mut st = State::new();
        let l = st.alloc_tape(1);
        let cfg = Config {
            threads: vec![
                Expr::RandLbl(Box::new(Expr::Val(Value::Lbl(l))), Box::new(Expr::int(1))),
                Expr::Alloc(Box::new(Expr::int(7))),
            ],
            state: st,
        };
        let v = erasability_check(&TapePeeker, 0, &cfg, l, 1).unwrap();
        assert!(!v.passed(), "tape peeker must be caught");
    }
}
