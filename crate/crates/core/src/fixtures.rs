//! The example programs, each paired with its query and expected bound.
//!
//! Sources ship as `.cpl` files under `fixtures/` at the repository root
//! and are embedded here; the parameterized Bloom and hash programs are
//! generated by [`bloom_source`] and [`hash_source`].

use crate::dist::{rat, Rat};
use crate::predicate::{parse_predicate, Predicate};
use crate::syntax::{parse_program, Expr};

/// What the recorded bound means for a fixture.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Expectation {
    /// Worst-case violation probability of the default predicate is at
    /// most (and for the paper fixtures, exactly) this value.
    SupViolation(Rat),
    /// Minimum execution mass at the recommended horizon.
    MinMass(Rat),
    /// The exact value distribution is uniform over these integers.
    UniformValues { lo: i64, hi: i64 },
}

#[derive(Clone, Debug)]
pub struct Fixture {
    pub name: &'static str,
    pub source: String,
    /// Default predicate for probability queries.
    pub predicate: Predicate,
    pub expectation: Expectation,
    /// Horizon at which the expectation is checked (sized so the exact
    /// engine saturates, or for the rejection sampler, so the residual is
    /// below (1/5)^6).
    pub horizon: u64,
    pub uses_tapes: bool,
}

impl Fixture {
    /// Parses and desugars the source; fixtures are checked at build time
    /// by tests, so failures here mean a corrupted install.
    pub fn program(&self) -> Expr {
        parse_program(&self.source).expect("fixture source must parse")
    }
}

#[derive(Debug, thiserror::Error)]
#[error("unknown fixture `{name}`; available: {available}")]
pub struct UnknownFixture {
    pub name: String,
    pub available: String,
}

pub const FIXTURE_NAMES: &[&str] = &[
    "twoAdd",
    "conTwoAdd-I1",
    "conTwoAdd-I2",
    "conTwoAdd-I3",
    "counter-I1",
    "counter-I2",
    "counter-I3",
    "twoincr-I1",
    "twoincr-I2",
    "twoincr-I3",
    "hash",
    "hashrace",
    "lazyrand",
    "lazyrace",
    "bloom",
    "bloom-mc",
    "stuck_half",
    "tape-pair",
    "tape-fork",
];

/// Looks up a fixture by name; unknown names report the catalogue.
pub fn fixture(name: &str) -> Result<Fixture, UnknownFixture> {
    let pred = |s: &str| parse_predicate(s).expect("fixture predicate must parse");
    let f = match name {
        "twoAdd" => Fixture {
            name: "twoAdd",
            source: include_str!("../../../fixtures/twoAdd.cpl").to_string(),
            predicate: pred("ret > 0"),
            expectation: Expectation::SupViolation(rat(1, 16)),
            horizon: 30,
            uses_tapes: false,
        },
        "conTwoAdd-I1" => Fixture {
            name: "conTwoAdd-I1",
            source: include_str!("../../../fixtures/conTwoAdd-I1.cpl").to_string(),
            predicate: pred("ret > 0"),
            expectation: Expectation::SupViolation(rat(1, 16)),
            horizon: 80,
            uses_tapes: true,
        },
        "conTwoAdd-I2" => Fixture {
            name: "conTwoAdd-I2",
            source: include_str!("../../../fixtures/conTwoAdd-I2.cpl").to_string(),
            predicate: pred("ret > 0"),
            expectation: Expectation::SupViolation(rat(1, 16)),
            horizon: 110,
            uses_tapes: true,
        },
        "conTwoAdd-I3" => Fixture {
            name: "conTwoAdd-I3",
            source: include_str!("../../../fixtures/conTwoAdd-I3.cpl").to_string(),
            predicate: pred("ret > 0"),
            expectation: Expectation::SupViolation(rat(1, 16)),
            horizon: 200,
            uses_tapes: true,
        },
        "counter-I1" => Fixture {
            name: "counter-I1",
            source: include_str!("../../../fixtures/counter-I1.cpl").to_string(),
            predicate: pred("ret >= 0 && ret <= 3"),
            expectation: Expectation::UniformValues { lo: 0, hi: 3 },
            horizon: 40,
            uses_tapes: true,
        },
        "counter-I2" => Fixture {
            name: "counter-I2",
            source: include_str!("../../../fixtures/counter-I2.cpl").to_string(),
            predicate: pred("ret >= 0 && ret <= 3"),
            expectation: Expectation::UniformValues { lo: 0, hi: 3 },
            horizon: 60,
            uses_tapes: true,
        },
        "counter-I3" => Fixture {
            name: "counter-I3",
            source: include_str!("../../../fixtures/counter-I3.cpl").to_string(),
            predicate: pred("ret >= 0 && ret <= 3"),
            expectation: Expectation::UniformValues { lo: 0, hi: 3 },
            horizon: 150,
            uses_tapes: true,
        },
        "twoincr-I1" => Fixture {
            name: "twoincr-I1",
            source: include_str!("../../../fixtures/twoincr-I1.cpl").to_string(),
            predicate: pred("ret >= 0 && ret <= 15"),
            expectation: Expectation::UniformValues { lo: 0, hi: 15 },
            horizon: 60,
            uses_tapes: true,
        },
        "twoincr-I2" => Fixture {
            name: "twoincr-I2",
            source: include_str!("../../../fixtures/twoincr-I2.cpl").to_string(),
            predicate: pred("ret >= 0 && ret <= 15"),
            expectation: Expectation::UniformValues { lo: 0, hi: 15 },
            horizon: 100,
            uses_tapes: true,
        },
        "twoincr-I3" => Fixture {
            name: "twoincr-I3",
            source: include_str!("../../../fixtures/twoincr-I3.cpl").to_string(),
            predicate: pred("ret >= 0 && ret <= 15"),
            expectation: Expectation::UniformValues { lo: 0, hi: 15 },
            horizon: 260,
            uses_tapes: true,
        },
        "hash" => Fixture {
            name: "hash",
            source: include_str!("../../../fixtures/hash.cpl").to_string(),
            predicate: pred("exists n in 0..1. ret == (n, n)"),
            expectation: Expectation::SupViolation(rat(0, 1)),
            horizon: 150,
            uses_tapes: false,
        },
        "hashrace" => Fixture {
            name: "hashrace",
            source: include_str!("../../../fixtures/hashrace.cpl").to_string(),
            predicate: pred("exists n in 0..1. ret == (n, n)"),
            expectation: Expectation::SupViolation(rat(0, 1)),
            horizon: 220,
            uses_tapes: false,
        },
        "lazyrand" => Fixture {
            name: "lazyrand",
            source: include_str!("../../../fixtures/lazyrand.cpl").to_string(),
            predicate: pred("exists n in 0..1. ret == ((n, 0), (n, 0))"),
            expectation: Expectation::SupViolation(rat(0, 1)),
            horizon: 160,
            uses_tapes: true,
        },
        "lazyrace" => Fixture {
            name: "lazyrace",
            source: include_str!("../../../fixtures/lazyrace.cpl").to_string(),
            predicate: pred("exists n in 0..1. ret == ((n, n), (n, n))"),
            expectation: Expectation::SupViolation(rat(1, 2)),
            horizon: 120,
            uses_tapes: true,
        },
        "bloom" => Fixture {
            name: "bloom",
            source: include_str!("../../../fixtures/bloom.cpl").to_string(),
            predicate: pred("ret == false"),
            // efp(2, 0, 2, 1) = 3/4
            expectation: Expectation::SupViolation(rat(3, 4)),
            horizon: 420,
            uses_tapes: false,
        },
        "bloom-mc" => Fixture {
            name: "bloom-mc",
            source: include_str!("../../../fixtures/bloom-mc.cpl").to_string(),
            predicate: pred("ret == false"),
            // efp(4, 0, 8, 2) = 5825/32768
            expectation: Expectation::SupViolation(rat(5825, 32768)),
            horizon: 2000,
            uses_tapes: false,
        },
        "stuck_half" => Fixture {
            name: "stuck_half",
            source: include_str!("../../../fixtures/stuck_half.cpl").to_string(),
            predicate: pred("true"),
            expectation: Expectation::MinMass(rat(1, 2)),
            horizon: 5,
            uses_tapes: false,
        },
        "tape-pair" => Fixture {
            name: "tape-pair",
            source: include_str!("../../../fixtures/tape-pair.cpl").to_string(),
            predicate: pred("true"),
            expectation: Expectation::SupViolation(rat(0, 1)),
            horizon: 8,
            uses_tapes: true,
        },
        "tape-fork" => Fixture {
            name: "tape-fork",
            source: include_str!("../../../fixtures/tape-fork.cpl").to_string(),
            predicate: pred("true"),
            expectation: Expectation::SupViolation(rat(0, 1)),
            horizon: 12,
            uses_tapes: true,
        },
        other => {
            return Err(UnknownFixture {
                name: other.to_string(),
                available: FIXTURE_NAMES.join(", "),
            })
        }
    };
    Ok(f)
}

/// Shared surface-level building blocks. Parallel composition, spawn/join
/// and the spin lock are syntax handled by the desugarer; the snippets here
/// are the source-level library the fixtures inline.
pub mod stdlib {
    /// Mutable map over an association list held in a reference.
    pub const ASSOC_MAP: &str = "\
let rec assoc l k =
  match l with
  | [] -> none
  | h :: t -> if fst h == k then some (snd h) else assoc t k
  end in
let mapget = fun m k -> assoc (!m) k in
let mapset = fun m k v -> m := inr ((k, v), !m) in
";

    /// List construction and iteration.
    pub const LIST_OPS: &str = "\
let rec listinitfrom i n f =
  if i == n then [] else inr (f i, listinitfrom (i + 1) n f) in
let listinit = fun n f -> listinitfrom 0 n f in
let rec listiter f l =
  match l with
  | [] -> ()
  | h :: t -> (f h; listiter f t)
  end in
";

    /// Thread-safe idealized hash drawing `rand (values-1)` on a miss
    /// inside the critical section.
    pub fn hash_module(value_count: u64) -> String {
        format!(
            "let hashinit = fun u ->\n\
             \x20 let lo = newlock () in\n\
             \x20 let lm = ref [] in\n\
             \x20 fun k ->\n\
             \x20   acquire lo;\n\
             \x20   let v = match mapget lm k with\n\
             \x20     | some b -> b\n\
             \x20     | none -> let b = rand {} in (mapset lm k b; b)\n\
             \x20     end in\n\
             \x20   release lo;\n\
             \x20   v in\n",
            value_count - 1
        )
    }

    /// Wraps a program body with the whole library.
    pub fn wrap(value_count: u64, body: &str) -> String {
        format!(
            "{}{}{}{}",
            ASSOC_MAP,
            LIST_OPS,
            hash_module(value_count),
            body
        )
    }
}

/// Thread-safe hash client: hashes key 0 twice sequentially and pairs the
/// results; keys range over naturals below `key_count` (unused beyond
/// documentation), values below `value_count`.
pub fn hash_source(_key_count: u64, value_count: u64) -> String {
    let body = "let h = hashinit () in\n(h 0, h 0)\n";
    format!(
        "{}{}{}",
        stdlib::ASSOC_MAP,
        stdlib::hash_module(value_count),
        body
    )
}

/// Concurrent Bloom filter program: `insertions` keys inserted from
/// parallel threads, then one lookup of the fresh key `lookup`.
pub fn bloom_source(size: u64, hashes: u64, insertions: &[i64], lookup: i64) -> String {
    let xs = insertions
        .iter()
        .map(|k| k.to_string())
        .collect::<Vec<_>>()
        .join("; ");
    let body = format!(
        "let bfinit = fun u ->\n\
         \x20 let hfs = listinit {hashes} (fun w -> hashinit ()) in\n\
         \x20 let arr = array {size} false in\n\
         \x20 (hfs, arr) in\n\
         let bfinsert = fun bfl x ->\n\
         \x20 let hfs = fst bfl in\n\
         \x20 let arr = snd bfl in\n\
         \x20 listiter (fun h -> arr.[h x] := true) hfs in\n\
         let bflookup = fun bfl y ->\n\
         \x20 let hfs = fst bfl in\n\
         \x20 let arr = snd bfl in\n\
         \x20 let res = ref true in\n\
         \x20 listiter (fun h -> res := (!res) && arr.[h y]) hfs;\n\
         \x20 !res in\n\
         let rec inspar zs bfl =\n\
         \x20 match zs with\n\
         \x20 | [] -> ()\n\
         \x20 | z :: zs2 -> (bfinsert bfl z) ||| (inspar zs2 bfl)\n\
         \x20 end in\n\
         let bfl = bfinit () in\n\
         inspar [{xs}] bfl;\n\
         bflookup bfl {lookup}\n"
    );
    stdlib::wrap(size, &body)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::mentions_tapes;

    #[test]
    fn every_fixture_parses_and_desugars() {
        for name in FIXTURE_NAMES {
            let f = fixture(name).unwrap();
            let prog = f.program();
            assert!(
                prog.free_vars().is_empty(),
                "{name} has unbound variables"
            );
            assert_eq!(f.uses_tapes, mentions_tapes(&prog), "{name} tape flag");
        }
    }

    #[test]
    fn unknown_fixture_lists_catalogue() {
        let err = fixture("nope").unwrap_err();
        assert!(err.available.contains("twoAdd"));
        assert!(err.available.contains("lazyrace"));
    }

    #[test]
    fn shipped_bloom_sources_match_generator() {
        assert_eq!(
            fixture("bloom").unwrap().source,
            bloom_source(2, 1, &[0, 1], 2)
        );
        assert_eq!(
            fixture("bloom-mc").unwrap().source,
            bloom_source(8, 2, &[0, 1], 2)
        );
    }

    #[test]
    fn shipped_hash_source_matches_generator() {
        // whitespace and comments differ; the programs must not
        let shipped = parse_program(&fixture("hash").unwrap().source).unwrap();
        let generated = parse_program(&hash_source(2, 2)).unwrap();
        assert_eq!(shipped, generated);
    }
}
