//! Machine state: a heap of locations and a store of presampling tapes.

use std::collections::{BTreeMap, VecDeque};
use std::fmt::Write as _;

use crate::syntax::{pretty, Expr, Lbl, Loc, Value};

/// A presampling tape: an upper bound and a queue of pre-drawn naturals,
/// each at most the bound.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Tape {
    pub bound: u64,
    pub queue: VecDeque<u64>,
}

impl Tape {
    pub fn empty(bound: u64) -> Self {
        Tape {
            bound,
            queue: VecDeque::new(),
        }
    }
}

/// Heap plus tape store. Fresh locations and labels always take the
/// smallest unused index, which keeps configurations canonical: two runs
/// that allocate in the same order name things identically.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct State {
    pub heap: BTreeMap<Loc, Value>,
    pub tapes: BTreeMap<Lbl, Tape>,
}

impl State {
    pub fn new() -> Self {
        State::default()
    }

    /// Allocates `count` consecutive fresh cells holding `init`, returning
    /// the base location. The heap never has holes, so the smallest unused
    /// index is one past the current maximum.
    pub fn alloc(&mut self, init: &Value, count: u64) -> Loc {
        let base = self
            .heap
            .last_key_value()
            .map(|(l, _)| l.0 + 1)
            .unwrap_or(0);
        for off in 0..count {
            self.heap.insert(Loc(base + off as u32), init.clone());
        }
        Loc(base)
    }

    pub fn alloc_tape(&mut self, bound: u64) -> Lbl {
        let next = self
            .tapes
            .last_key_value()
            .map(|(l, _)| l.0 + 1)
            .unwrap_or(0);
        self.tapes.insert(Lbl(next), Tape::empty(bound));
        Lbl(next)
    }

    pub fn load(&self, l: Loc) -> Option<&Value> {
        self.heap.get(&l)
    }

    /// Heap/tape dump in the format documented in `docs/state-dump.md`.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (l, v) in &self.heap {
            let _ = writeln!(out, "{} = {}", l, v);
        }
        for (lbl, t) in &self.tapes {
            let qs: Vec<String> = t.queue.iter().map(|n| n.to_string()).collect();
            let _ = writeln!(out, "{} : bound {} queue [{}]", lbl, t.bound, qs.join(", "));
        }
        out
    }
}

/// A thread pool plus a state. Final iff thread 0 is a value.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Config {
    pub threads: Vec<Expr>,
    pub state: State,
}

impl Config {
    /// Single-thread configuration over the empty state.
    pub fn initial(program: Expr) -> Self {
        Config {
            threads: vec![program],
            state: State::new(),
        }
    }

    pub fn is_final(&self) -> bool {
        self.threads[0].is_val()
    }

    /// The result value, when final.
    pub fn result(&self) -> Option<&Value> {
        self.threads[0].as_val()
    }

    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (i, t) in self.threads.iter().enumerate() {
            let _ = writeln!(out, "thread {}: {}", i, pretty(t));
        }
        out.push_str(&self.state.dump());
        out
    }
}
