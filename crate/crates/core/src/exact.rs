//! Memoized exact analysis: full value distributions, worst-case violation
//! probability over all schedulers, and minimum execution mass.
//!
//! The worst-case analyses are dynamic programs over (configuration,
//! remaining horizon). The adversary they model is full-view — it sees tape
//! queues, unlike legal schedulers, which are tape-censored — so the
//! computed value upper-bounds the violation probability of every
//! probabilistic, stateful, censored scheduler at the same horizon: the
//! objective is linear in each decision, hence a deterministic full-view
//! choice attains the maximum. Stutter picks are pruned; they never change
//! either optimum because both values are monotone in the horizon.

use std::collections::HashMap;

use num_traits::{One, Zero};

use crate::dist::{Dist, Prob, Rat};
use crate::predicate::Predicate;
use crate::semantics::{sched_step, tpstep, Config, Policy};
use crate::syntax::{Expr, Value};

/// A probability query against a program.
#[derive(Clone, Debug)]
pub struct Query {
    pub program: Expr,
    pub horizon: u64,
    pub predicate: Predicate,
    pub mode: QueryMode,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QueryMode {
    ValueDist,
    SupViolation,
    MinMass,
}

#[derive(Debug, thiserror::Error)]
pub enum EngineError {
    #[error(
        "memo capacity exhausted: {entries} entries over {configs} distinct \
         configurations (limit {limit}); partial horizon {reached}"
    )]
    MemoLimit {
        entries: usize,
        configs: usize,
        limit: usize,
        reached: u64,
    },
}

/// Default cap on memo entries; override per engine or via the CLI's
/// `PROBSCHED_MEMO_LIMIT`.
pub const DEFAULT_MEMO_LIMIT: usize = 10_000_000;

/// Exact analysis engine with a config interner and per-call memo tables.
pub struct ExactEngine {
    memo_limit: usize,
    memo_enabled: bool,
    configs: Vec<Config>,
    ids: HashMap<Config, u32>,
}

impl Default for ExactEngine {
    fn default() -> Self {
        ExactEngine::new()
    }
}

impl ExactEngine {
    pub fn new() -> Self {
        ExactEngine {
            memo_limit: DEFAULT_MEMO_LIMIT,
            memo_enabled: true,
            configs: Vec::new(),
            ids: HashMap::new(),
        }
    }

    pub fn with_memo_limit(mut self, limit: usize) -> Self {
        self.memo_limit = limit;
        self
    }

    /// Disables memoization (for the transparency checks).
    pub fn without_memo(mut self) -> Self {
        self.memo_enabled = false;
        self
    }

    fn intern(&mut self, cfg: &Config) -> u32 {
        if let Some(id) = self.ids.get(cfg) {
            return *id;
        }
        let id = self.configs.len() as u32;
        self.configs.push(cfg.clone());
        self.ids.insert(cfg.clone(), id);
        id
    }

    /// Value distribution of the first thread under `policy` within
    /// `horizon` steps, memoized on (scheduler state, configuration,
    /// remaining horizon); also returns the residual (non-final) mass.
    pub fn value_dist(
        &mut self,
        policy: &dyn Policy,
        cfg: &Config,
        horizon: u64,
    ) -> Result<(Dist<Value>, Rat), EngineError> {
        let mut memo: HashMap<(u32, u64, u64), Dist<Value>> = HashMap::new();
        let d = self.exec_rec(policy, 0, cfg, horizon, &mut memo)?;
        let residual = Rat::one() - d.mass_rat();
        Ok((d, residual))
    }

    fn exec_rec(
        &mut self,
        policy: &dyn Policy,
        zeta: u64,
        cfg: &Config,
        n: u64,
        memo: &mut HashMap<(u32, u64, u64), Dist<Value>>,
    ) -> Result<Dist<Value>, EngineError> {
        if cfg.is_final() {
            return Ok(Dist::ret(cfg.result().unwrap().clone()));
        }
        if n == 0 {
            return Ok(Dist::empty());
        }
        let id = self.intern(cfg);
        let key = (id, zeta, n);
        if self.memo_enabled {
            if let Some(hit) = memo.get(&key) {
                return Ok(hit.clone());
            }
        }
        let successors = sched_step(policy, zeta, cfg);
        let mut acc: Vec<(Value, Rat)> = Vec::new();
        for ((z2, c2), p) in successors.iter() {
            let sub = self.exec_rec(policy, *z2, c2, n - 1, memo)?;
            for (v, q) in sub.iter() {
                acc.push((v.clone(), p * q));
            }
        }
        let out = Dist::from_weighted(acc);
        if self.memo_enabled {
            self.guard(memo.len(), n)?;
            memo.insert(key, out.clone());
        }
        Ok(out)
    }

    /// Maximum over all full-view deterministic history-dependent thread
    /// choices of the probability of returning a predicate-violating value
    /// within `horizon` steps.
    pub fn sup_violation(
        &mut self,
        cfg: &Config,
        horizon: u64,
        phi: &Predicate,
    ) -> Result<Prob, EngineError> {
        let mut memo: HashMap<(u32, u64), Rat> = HashMap::new();
        let v = self.sup_rec(cfg, horizon, phi, &mut memo)?;
        Ok(Prob::new(v).expect("DP value stays in [0,1]"))
    }

    fn sup_rec(
        &mut self,
        cfg: &Config,
        n: u64,
        phi: &Predicate,
        memo: &mut HashMap<(u32, u64), Rat>,
    ) -> Result<Rat, EngineError> {
        if cfg.is_final() {
            return Ok(if phi.eval(cfg.result().unwrap()) {
                Rat::zero()
            } else {
                Rat::one()
            });
        }
        if n == 0 {
            return Ok(Rat::zero());
        }
        let id = self.intern(cfg);
        if self.memo_enabled {
            if let Some(hit) = memo.get(&(id, n)) {
                return Ok(hit.clone());
            }
        }
        let mut best = Rat::zero();
        for i in 0..cfg.threads.len() {
            if cfg.threads[i].is_val() {
                continue; // stutters never improve a monotone objective
            }
            let succ = tpstep(cfg, i);
            let mut ev = Rat::zero();
            for (c2, p) in succ.iter() {
                ev += p * self.sup_rec(c2, n - 1, phi, memo)?;
            }
            if ev > best {
                best = ev;
            }
        }
        if self.memo_enabled {
            self.guard(memo.len(), n)?;
            memo.insert((id, n), best.clone());
        }
        Ok(best)
    }

    /// Minimum over deterministic thread-choice strategies of the mass of
    /// partial execution; picking a stuck thread annihilates that branch.
    pub fn min_mass(&mut self, cfg: &Config, horizon: u64) -> Result<Prob, EngineError> {
        let mut memo: HashMap<(u32, u64), Rat> = HashMap::new();
        let v = self.min_rec(cfg, horizon, &mut memo)?;
        Ok(Prob::new(v).expect("DP value stays in [0,1]"))
    }

    fn min_rec(
        &mut self,
        cfg: &Config,
        n: u64,
        memo: &mut HashMap<(u32, u64), Rat>,
    ) -> Result<Rat, EngineError> {
        if cfg.is_final() || n == 0 {
            return Ok(Rat::one());
        }
        let id = self.intern(cfg);
        if self.memo_enabled {
            if let Some(hit) = memo.get(&(id, n)) {
                return Ok(hit.clone());
            }
        }
        let mut worst = Rat::one();
        for i in 0..cfg.threads.len() {
            if cfg.threads[i].is_val() {
                continue; // a stutter keeps mass; the minimizer skips it
            }
            let succ = tpstep(cfg, i);
            let mut ev = Rat::zero();
            for (c2, p) in succ.iter() {
                ev += p * self.min_rec(c2, n - 1, memo)?;
            }
            if ev < worst {
                worst = ev;
            }
        }
        if self.memo_enabled {
            self.guard(memo.len(), n)?;
            memo.insert((id, n), worst.clone());
        }
        Ok(worst)
    }

    fn guard(&self, entries: usize, reached: u64) -> Result<(), EngineError> {
        if entries >= self.memo_limit {
            Err(EngineError::MemoLimit {
                entries,
                configs: self.configs.len(),
                limit: self.memo_limit,
                reached,
            })
        } else {
            Ok(())
        }
    }

    /// Extracts a maximizing thread-choice script by following argmax
    /// choices (smallest index on ties) down the most violating successor.
    pub fn witness_script(
        &mut self,
        cfg: &Config,
        horizon: u64,
        phi: &Predicate,
    ) -> Result<Vec<usize>, EngineError> {
        let mut memo: HashMap<(u32, u64), Rat> = HashMap::new();
        self.sup_rec(cfg, horizon, phi, &mut memo)?;
        let mut script = Vec::new();
        let mut cur = cfg.clone();
        let mut n = horizon;
        while !cur.is_final() && n > 0 {
            let mut best: Option<(usize, Rat)> = None;
            for i in 0..cur.threads.len() {
                if cur.threads[i].is_val() {
                    continue;
                }
                let succ = tpstep(&cur, i);
                let mut ev = Rat::zero();
                for (c2, p) in succ.iter() {
                    ev += p * self.sup_rec(c2, n - 1, phi, &mut memo)?;
                }
                if best.as_ref().map(|(_, b)| ev > *b).unwrap_or(true) {
                    best = Some((i, ev));
                }
            }
            let Some((i, value)) = best else { break };
            if value.is_zero() {
                break; // nothing left to gain; the script so far suffices
            }
            script.push(i);
            // descend into the successor with the highest continuation
            let succ = tpstep(&cur, i);
            let mut next: Option<(Config, Rat)> = None;
            for (c2, _) in succ.iter() {
                let v = self.sup_rec(c2, n - 1, phi, &mut memo)?;
                if next.as_ref().map(|(_, b)| v > *b).unwrap_or(true) {
                    next = Some((c2.clone(), v));
                }
            }
            match next {
                Some((c2, _)) => cur = c2,
                None => break,
            }
            n -= 1;
        }
        Ok(script)
    }

    /// Bound check: holds iff the worst-case violation probability is at
    /// most `epsilon`; on violation, returns the maximizing script.
    pub fn check_bound(
        &mut self,
        cfg: &Config,
        horizon: u64,
        phi: &Predicate,
        epsilon: &Rat,
    ) -> Result<BoundVerdict, EngineError> {
        let sup = self.sup_violation(cfg, horizon, phi)?;
        if sup.as_rat() <= epsilon {
            Ok(BoundVerdict::HoldsAtHorizon { value: sup })
        } else {
            let witness = self.witness_script(cfg, horizon, phi)?;
            Ok(BoundVerdict::Violated {
                value: sup,
                witness,
            })
        }
    }

    /// Monotone horizon history: doubles the horizon from `start` until two
    /// consecutive values agree (value and residual for distributions) or
    /// `max_horizon` is passed; returns the probe trail.
    pub fn sup_violation_history(
        &mut self,
        cfg: &Config,
        phi: &Predicate,
        start: u64,
        max_horizon: u64,
    ) -> Result<Vec<(u64, Prob)>, EngineError> {
        let mut out = Vec::new();
        let mut h = start.max(1);
        loop {
            let v = self.sup_violation(cfg, h, phi)?;
            out.push((h, v));
            let k = out.len();
            if k >= 2 && out[k - 1].1 == out[k - 2].1 {
                break;
            }
            if h >= max_horizon {
                break;
            }
            h = (h * 2).min(max_horizon);
        }
        Ok(out)
    }
}

#[derive(Clone, Debug)]
pub enum BoundVerdict {
    HoldsAtHorizon { value: Prob },
    Violated { value: Prob, witness: Vec<usize> },
}

impl BoundVerdict {
    pub fn holds(&self) -> bool {
        matches!(self, BoundVerdict::HoldsAtHorizon { .. })
    }

    pub fn value(&self) -> &Prob {
        match self {
            BoundVerdict::HoldsAtHorizon { value } => value,
            BoundVerdict::Violated { value, .. } => value,
        }
    }
}

/// Runs a query end to end (CLI entry point).
pub fn run_query(
    engine: &mut ExactEngine,
    policy: &dyn Policy,
    query: &Query,
) -> Result<QueryResult, EngineError> {
    let cfg = Config::initial(query.program.clone());
    match query.mode {
        QueryMode::ValueDist => {
            let (dist, residual) = engine.value_dist(policy, &cfg, query.horizon)?;
            let violation = dist.prob(|v| !query.predicate.eval(v));
            Ok(QueryResult {
                dist: Some(dist),
                residual: Some(residual),
                value: violation.into_rat(),
                witness: None,
            })
        }
        QueryMode::SupViolation => {
            let v = engine.sup_violation(&cfg, query.horizon, &query.predicate)?;
            Ok(QueryResult {
                dist: None,
                residual: None,
                value: v.into_rat(),
                witness: None,
            })
        }
        QueryMode::MinMass => {
            let v = engine.min_mass(&cfg, query.horizon)?;
            Ok(QueryResult {
                dist: None,
                residual: None,
                value: v.into_rat(),
                witness: None,
            })
        }
    }
}

#[derive(Clone, Debug)]
pub struct QueryResult {
    pub dist: Option<Dist<Value>>,
    pub residual: Option<Rat>,
    pub value: Rat,
    pub witness: Option<Vec<usize>>,
}
