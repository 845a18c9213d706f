//! Finite-support subdistributions over exact rationals.
//!
//! A [`Dist`] maps outcomes to strictly positive rational probabilities and
//! carries total mass at most one; missing mass models nontermination or
//! stuckness. Zero entries are dropped eagerly so that equality of the
//! underlying maps is canonical distribution equality.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

/// Shorthand for the exact rational type used throughout the crate.
pub type Rat = BigRational;

/// Builds a rational from an integer numerator/denominator pair.
pub fn rat(num: i64, den: i64) -> Rat {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

/// A probability: an exact rational in `[0, 1]`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Prob(Rat);

impl Prob {
    /// Wraps a rational, checking the unit-interval invariant.
    pub fn new(r: Rat) -> Result<Self, ProbError> {
        if r.is_negative() || r > Rat::one() {
            Err(ProbError::OutOfRange(r))
        } else {
            Ok(Prob(r))
        }
    }

    pub fn zero() -> Self {
        Prob(Rat::zero())
    }

    pub fn one() -> Self {
        Prob(Rat::one())
    }

    pub fn as_rat(&self) -> &Rat {
        &self.0
    }

    pub fn into_rat(self) -> Rat {
        self.0
    }

    /// Decimal rendering, for display only; the rational is authoritative.
    pub fn to_f64(&self) -> f64 {
        rat_to_f64(&self.0)
    }
}

impl fmt::Display for Prob {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Best-effort conversion of a rational to `f64` (display only).
pub fn rat_to_f64(r: &Rat) -> f64 {
    let num = r.numer();
    let den = r.denom();
    // Scale down in tandem so even huge numerators render sensibly.
    let nf = bigint_to_f64(num);
    let df = bigint_to_f64(den);
    nf / df
}

fn bigint_to_f64(b: &BigInt) -> f64 {
    use num_traits::ToPrimitive;
    b.to_f64().unwrap_or(f64::INFINITY)
}

#[derive(Debug, thiserror::Error)]
pub enum ProbError {
    #[error("probability {0} out of [0,1]")]
    OutOfRange(Rat),
    #[error("expectation weight {0} out of [0,1]")]
    WeightOutOfRange(Rat),
}

/// A finite-support subdistribution with exact rational probabilities.
///
/// Invariants: every stored probability is strictly positive and the total
/// mass is at most one. Both are enforced on construction, so two
/// distributions are equal iff their support maps are equal.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Dist<A: Ord> {
    support: BTreeMap<A, Rat>,
}

impl<A: Ord> Default for Dist<A> {
    fn default() -> Self {
        Dist::empty()
    }
}

impl<A: Ord + fmt::Debug> fmt::Debug for Dist<A> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_map().entries(self.support.iter()).finish()
    }
}

impl<A: Ord> Dist<A> {
    /// The null distribution (empty support, mass zero).
    pub fn empty() -> Self {
        Dist {
            support: BTreeMap::new(),
        }
    }

    /// Point distribution: probability one on `a`.
    pub fn ret(a: A) -> Self {
        let mut support = BTreeMap::new();
        support.insert(a, Rat::one());
        Dist { support }
    }

    /// Builds a distribution from weighted outcomes, merging duplicates and
    /// dropping zeros. Panics if any weight is negative or the mass exceeds
    /// one; callers only ever combine probabilities, so overshoot means a
    /// logic error, not bad input.
    pub fn from_weighted(items: impl IntoIterator<Item = (A, Rat)>) -> Self {
        let mut support: BTreeMap<A, Rat> = BTreeMap::new();
        for (a, p) in items {
            assert!(!p.is_negative(), "negative probability");
            if p.is_zero() {
                continue;
            }
            *support.entry(a).or_insert_with(Rat::zero) += p;
        }
        let d = Dist { support };
        assert!(d.mass_rat() <= Rat::one(), "distribution mass exceeds 1");
        d
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn support_len(&self) -> usize {
        self.support.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&A, &Rat)> {
        self.support.iter()
    }

    pub fn into_iter(self) -> impl Iterator<Item = (A, Rat)> {
        self.support.into_iter()
    }

    pub fn outcomes(&self) -> impl Iterator<Item = &A> {
        self.support.keys()
    }

    /// Probability of a single outcome (zero if not in support).
    pub fn pmf(&self, a: &A) -> Rat {
        self.support.get(a).cloned().unwrap_or_else(Rat::zero)
    }

    /// Total mass as a raw rational.
    pub fn mass_rat(&self) -> Rat {
        self.support.values().fold(Rat::zero(), |acc, p| acc + p)
    }

    /// Total mass as a checked probability.
    pub fn mass(&self) -> Prob {
        Prob(self.mass_rat())
    }

    /// Monadic bind: `Σ_a d(a) · f(a)(b)`.
    pub fn bind<B: Ord, F>(&self, mut f: F) -> Dist<B>
    where
        F: FnMut(&A) -> Dist<B>,
    {
        let mut support: BTreeMap<B, Rat> = BTreeMap::new();
        for (a, p) in &self.support {
            for (b, q) in f(a).support {
                let w = p * q;
                if w.is_zero() {
                    continue;
                }
                *support.entry(b).or_insert_with(Rat::zero) += w;
            }
        }
        Dist { support }
    }

    /// Pushforward along a (not necessarily injective) function.
    pub fn map<B: Ord, F>(&self, mut f: F) -> Dist<B>
    where
        F: FnMut(&A) -> B,
        A: Clone,
    {
        let mut support: BTreeMap<B, Rat> = BTreeMap::new();
        for (a, p) in &self.support {
            *support.entry(f(a)).or_insert_with(Rat::zero) += p;
        }
        Dist { support }
    }

    /// Keeps only the outcomes satisfying the predicate (mass drops).
    pub fn filter<F>(&self, mut keep: F) -> Dist<A>
    where
        F: FnMut(&A) -> bool,
        A: Clone,
    {
        Dist {
            support: self
                .support
                .iter()
                .filter(|(a, _)| keep(a))
                .map(|(a, p)| (a.clone(), p.clone()))
                .collect(),
        }
    }

    /// Rescales the whole distribution by `w` (used for mixing).
    pub fn scale(&self, w: &Rat) -> Dist<A>
    where
        A: Clone,
    {
        assert!(!w.is_negative());
        if w.is_zero() {
            return Dist::empty();
        }
        Dist {
            support: self
                .support
                .iter()
                .map(|(a, p)| (a.clone(), p * w))
                .collect(),
        }
    }

    /// Expected value of `x`, which must map the support into `[0,1]`.
    pub fn expect<F>(&self, mut x: F) -> Result<Rat, ProbError>
    where
        F: FnMut(&A) -> Rat,
    {
        let mut acc = Rat::zero();
        for (a, p) in &self.support {
            let v = x(a);
            if v.is_negative() || v > Rat::one() {
                return Err(ProbError::WeightOutOfRange(v));
            }
            acc += p * v;
        }
        Ok(acc)
    }

    /// Expected value without the unit-interval restriction; used internally
    /// where the weights are themselves probabilities by construction.
    pub fn expect_unchecked<F>(&self, mut x: F) -> Rat
    where
        F: FnMut(&A) -> Rat,
    {
        let mut acc = Rat::zero();
        for (a, p) in &self.support {
            acc += p * x(a);
        }
        acc
    }

    /// Probability of the predicate: the expectation of its Iverson bracket.
    pub fn prob<F>(&self, mut pred: F) -> Prob
    where
        F: FnMut(&A) -> bool,
    {
        let mut acc = Rat::zero();
        for (a, p) in &self.support {
            if pred(a) {
                acc += p;
            }
        }
        Prob(acc)
    }
}

impl Dist<u64> {
    /// The uniform distribution on `{0..=n}`, assigning `1/(n+1)` to each.
    pub fn uniform(n: u64) -> Dist<u64> {
        let p = BigRational::new(BigInt::one(), BigInt::from(n + 1));
        Dist::from_weighted((0..=n).map(|i| (i, p.clone())))
    }
}

impl<A: Ord + fmt::Display> Dist<A> {
    /// Canonical text form `{outcome: p/q, ...}` sorted by outcome.
    pub fn canonical_text(&self) -> String {
        let entries: Vec<String> = self
            .support
            .iter()
            .map(|(a, p)| format!("{}: {}", a, display_rat(p)))
            .collect();
        format!("{{{}}}", entries.join(", "))
    }
}

/// Renders a rational as `p/q` (or a bare integer when `q = 1`).
pub fn display_rat(r: &Rat) -> String {
    if r.denom().is_one() {
        format!("{}", r.numer())
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uni(n: u64) -> Dist<u64> {
        Dist::uniform(n)
    }

    #[test]
    fn ret_is_point_mass() {
        let d = Dist::ret(7u64);
        assert_eq!(d.pmf(&7), Rat::one());
        assert_eq!(d.mass(), Prob::one());
        assert_eq!(d.support_len(), 1);
    }

    #[test]
    fn uniform_zero_is_point() {
        assert_eq!(uni(0), Dist::ret(0u64));
    }

    #[test]
    fn uniform_three_quarters() {
        let d = uni(3);
        for i in 0..=3 {
            assert_eq!(d.pmf(&i), rat(1, 4));
        }
        assert_eq!(d.support_len(), 4);
    }

    #[test]
    fn uniform_has_full_mass() {
        for n in 0..=8 {
            // direct summation over the support
            let total: Rat = uni(n).iter().map(|(_, p)| p.clone()).sum();
            assert_eq!(total, Rat::one());
            assert_eq!(uni(n).mass(), Prob::one());
        }
    }

    #[test]
    fn bind_pushforward_of_uniform() {
        let d = uni(1).bind(|n| Dist::ret(n + 1));
        assert_eq!(d, Dist::from_weighted(vec![(1, rat(1, 2)), (2, rat(1, 2))]));
    }

    #[test]
    fn bind_left_identity() {
        let f = |n: &u64| Dist::uniform(*n % 4);
        assert_eq!(Dist::ret(3u64).bind(f), f(&3));
    }

    #[test]
    fn bind_on_empty_is_empty() {
        let d: Dist<u64> = Dist::empty();
        assert!(d.bind(|n| Dist::ret(n + 1)).is_empty());
    }

    #[test]
    fn mass_examples() {
        assert_eq!(Dist::<u64>::empty().mass(), Prob::zero());
        assert_eq!(uni(5).mass(), Prob::one());
        let d = Dist::from_weighted(vec![(0u64, rat(1, 3)), (1, rat(1, 3))]);
        assert_eq!(d.mass().as_rat(), &rat(2, 3));
    }

    #[test]
    fn expect_examples() {
        let d = uni(3);
        let iverson = d
            .expect(|n| if *n == 0 { Rat::one() } else { Rat::zero() })
            .unwrap();
        assert_eq!(iverson, rat(1, 4));
        // expect of the constant-one function is the mass
        let half = Dist::from_weighted(vec![(0u64, rat(1, 2))]);
        assert_eq!(half.expect(|_| Rat::one()).unwrap(), half.mass_rat());
        // hand sum 0·1/2 + 1·1/2
        let ev = uni(1).expect(|n| rat(*n as i64, 1)).unwrap();
        assert_eq!(ev, rat(1, 2));
    }

    #[test]
    fn expect_rejects_out_of_range() {
        assert!(uni(3).expect(|n| rat(*n as i64, 1)).is_err());
        assert!(uni(1).expect(|_| rat(-1, 2)).is_err());
    }

    #[test]
    fn prob_examples() {
        assert_eq!(uni(3).prob(|n| *n > 0).as_rat(), &rat(3, 4));
        let d = Dist::from_weighted(vec![(0u64, rat(1, 3)), (4, rat(1, 6))]);
        assert_eq!(d.prob(|_| true), d.mass());
        assert_eq!(Dist::<u64>::empty().prob(|_| true), Prob::zero());
    }

    #[test]
    fn canonical_text_sorted() {
        let d = Dist::from_weighted(vec![(2u64, rat(1, 4)), (0, rat(1, 2))]);
        assert_eq!(d.canonical_text(), "{0: 1/2, 2: 1/4}");
        assert_eq!(Dist::ret(5u64).canonical_text(), "{5: 1}");
    }

    #[test]
    fn zero_entries_dropped() {
        let d = Dist::from_weighted(vec![(1u64, Rat::zero()), (2, rat(1, 2))]);
        assert_eq!(d.support_len(), 1);
        assert_eq!(d.pmf(&1), Rat::zero());
    }
}
