//! Schedulers and the censored view they observe.
//!
//! A policy is a stateful, possibly probabilistic rule choosing which
//! thread steps next. Policies see a [`SchedView`]: the full thread pool
//! and heap, plus the set of allocated tape labels with their bounds, but
//! never tape queue contents. That censoring is what makes uniform tape
//! presampling invisible to any legal scheduler.

use std::collections::BTreeMap;

use crate::dist::{rat, Dist};
use crate::syntax::{Expr, Lbl, Loc, Value};

use super::state::Config;

/// What a scheduler is allowed to observe: tape queues are redacted, only
/// allocated labels and their bounds remain.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SchedView {
    pub threads: Vec<Expr>,
    pub heap: BTreeMap<Loc, Value>,
    pub tapes: BTreeMap<Lbl, u64>,
}

/// Projects the censored view out of a configuration.
pub fn censor(cfg: &Config) -> SchedView {
    SchedView {
        threads: cfg.threads.clone(),
        heap: cfg.state.heap.clone(),
        tapes: cfg
            .state
            .tapes
            .iter()
            .map(|(l, t)| (*l, t.bound))
            .collect(),
    }
}

/// A scheduling policy. The scheduler state is a plain counter word; the
/// built-in policies use it as a position, probabilistic ones ignore it.
pub trait Policy {
    fn name(&self) -> String;

    /// Distribution over (new scheduler state, thread index). For the
    /// built-in policies this always has mass exactly one and in-range
    /// indices.
    fn pick(&self, zeta: u64, view: &SchedView) -> Dist<(u64, usize)>;

    /// Full-view entry point used by the engine. The default censors the
    /// configuration and delegates to [`Policy::pick`], so implementations
    /// cannot observe tape queues. Tests probing the censoring contract
    /// override this as a deliberate backdoor.
    fn pick_raw(&self, zeta: u64, cfg: &Config) -> Dist<(u64, usize)> {
        self.pick(zeta, &censor(cfg))
    }
}

/// Cycles through thread indices in order, one pick per step.
#[derive(Clone, Copy, Debug, Default)]
pub struct RoundRobin;

impl Policy for RoundRobin {
    fn name(&self) -> String {
        "round_robin".into()
    }

    fn pick(&self, zeta: u64, view: &SchedView) -> Dist<(u64, usize)> {
        let n = view.threads.len() as u64;
        Dist::ret((zeta + 1, (zeta % n) as usize))
    }
}

/// Follows a fixed sequence of thread indices (each taken modulo the
/// current pool size); past the end it picks thread 0.
#[derive(Clone, Debug)]
pub struct Scripted(pub Vec<usize>);

impl Policy for Scripted {
    fn name(&self) -> String {
        format!("scripted({:?})", self.0)
    }

    fn pick(&self, zeta: u64, view: &SchedView) -> Dist<(u64, usize)> {
        let n = view.threads.len();
        let i = self
            .0
            .get(zeta as usize)
            .map(|raw| raw % n)
            .unwrap_or(0);
        Dist::ret((zeta + 1, i))
    }
}

/// Picks a thread uniformly at random each step.
#[derive(Clone, Copy, Debug, Default)]
pub struct UniformRandom;

impl Policy for UniformRandom {
    fn name(&self) -> String {
        "uniform_random".into()
    }

    fn pick(&self, zeta: u64, view: &SchedView) -> Dist<(u64, usize)> {
        let n = view.threads.len();
        let p = rat(1, n as i64);
        Dist::from_weighted((0..n).map(|i| ((zeta, i), p.clone())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semantics::state::State;

    fn two_thread_cfg() -> Config {
        Config {
            threads: vec![Expr::Rand(Box::new(Expr::int(1))), Expr::int(2)],
            state: State::new(),
        }
    }

    #[test]
    fn censor_redacts_queues() {
        let mut cfg = two_thread_cfg();
        let l = cfg.state.alloc_tape(3);
        let mut other = cfg.clone();
        other.state.tapes.get_mut(&l).unwrap().queue.push_back(2);
        // two configs differing only in a queue censor equal
        assert_eq!(censor(&cfg), censor(&other));
        // allocated labels and bounds stay visible
        assert_eq!(censor(&cfg).tapes.get(&l), Some(&3));
        // heap contents remain visible
        cfg.state.alloc(&Value::Int(9), 1);
        assert_ne!(censor(&cfg).heap, censor(&other).heap);
    }

    #[test]
    fn round_robin_cycles() {
        let v = censor(&two_thread_cfg());
        assert_eq!(RoundRobin.pick(0, &v), Dist::ret((1, 0)));
        assert_eq!(RoundRobin.pick(1, &v), Dist::ret((2, 1)));
        assert_eq!(RoundRobin.pick(2, &v), Dist::ret((3, 0)));
    }

    #[test]
    fn scripted_follows_script_then_zero() {
        let v = censor(&two_thread_cfg());
        let p = Scripted(vec![1, 0]);
        assert_eq!(p.pick(0, &v), Dist::ret((1, 1)));
        assert_eq!(p.pick(1, &v), Dist::ret((2, 0)));
        assert_eq!(p.pick(2, &v), Dist::ret((3, 0)));
    }

    #[test]
    fn uniform_random_has_mass_one() {
        let v = censor(&two_thread_cfg());
        let d = UniformRandom.pick(7, &v);
        assert_eq!(d.mass_rat(), rat(1, 1));
        assert_eq!(d.pmf(&(7, 0)), rat(1, 2));
        assert_eq!(d.pmf(&(7, 1)), rat(1, 2));
    }
}
