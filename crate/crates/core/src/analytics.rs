//! Bloom-filter false-positive analysis: the recurrence and its
//! brute-force enumeration oracle.
//!
//! `efp(l, b)` is the probability of a false positive on a single
//! membership query after setting `l` more uniformly drawn indices in an
//! array of `S` bits that already has `b` bits set, using `k` hashes:
//!
//! ```text
//! efp(0, b)   = (b/S)^k
//! efp(l+1, b) = (b/S) · efp(l, b) + ((S−b)/S) · efp(l, b+1)
//! ```
//!
//! `efp(k·N, 0)` is then the false-positive bound after inserting `N`
//! distinct keys and querying a fresh one.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::dist::{rat_to_f64, Rat};

#[derive(Debug, thiserror::Error)]
pub enum BloomError {
    #[error("invalid parameters: S={s}, k={k} (need S ≥ 1, k ≥ 1)")]
    BadParams { s: u64, k: u64 },
    #[error("b={b} exceeds the array size S={s}")]
    BitsAboveSize { b: u64, s: u64 },
    #[error("enumeration size S^(k(N+1)) = {size} exceeds the guard {guard}")]
    TooLarge { size: BigInt, guard: u64 },
}

/// Parameters of a Bloom-filter instance under analysis.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BloomParams {
    /// array size in bits
    pub size: u64,
    /// number of hash functions
    pub hashes: u64,
    /// number of inserted distinct keys
    pub insertions: u64,
}

impl BloomParams {
    pub fn new(size: u64, hashes: u64, insertions: u64) -> Result<Self, BloomError> {
        if size < 1 || hashes < 1 {
            return Err(BloomError::BadParams { s: size, k: hashes });
        }
        Ok(BloomParams {
            size,
            hashes,
            insertions,
        })
    }

    /// The paper-facing bound: `efp(k·N, 0)`.
    pub fn false_positive_bound(&self) -> Result<Rat, BloomError> {
        efp(self.hashes * self.insertions, 0, self.size, self.hashes)
    }
}

/// Memoized exact evaluation of the recurrence; result is in `[0, 1]`.
pub fn efp(l: u64, b: u64, size: u64, k: u64) -> Result<Rat, BloomError> {
    if size < 1 || k < 1 {
        return Err(BloomError::BadParams { s: size, k });
    }
    if b > size {
        return Err(BloomError::BitsAboveSize { b, s: size });
    }
    // bottom-up over l; row j holds efp(j, ·) on the reachable b-range
    let s_rat = |n: u64| BigRational::from(BigInt::from(n));
    let size_r = s_rat(size);
    let mut row: Vec<Rat> = (b..=size)
        .map(|bb| pow_rat(&(s_rat(bb) / &size_r), k))
        .collect();
    for _ in 0..l {
        let mut next = Vec::with_capacity(row.len());
        for (off, cur) in row.iter().enumerate() {
            let bb = b + off as u64;
            let hit = s_rat(bb) / &size_r * cur;
            let miss = if bb == size {
                Rat::zero()
            } else {
                (s_rat(size - bb) / &size_r) * &row[off + 1]
            };
            next.push(hit + miss);
        }
        row = next;
    }
    Ok(row.into_iter().next().unwrap())
}

/// Decimal rendering of [`efp`] for display.
pub fn efp_float(l: u64, b: u64, size: u64, k: u64) -> Result<f64, BloomError> {
    efp(l, b, size, k).map(|r| rat_to_f64(&r))
}

fn pow_rat(r: &Rat, k: u64) -> Rat {
    let mut acc = Rat::one();
    for _ in 0..k {
        acc *= r;
    }
    acc
}

/// Enumeration guard for the brute force: `S^(k(N+1))` must stay below this
/// many cases.
pub const BRUTEFORCE_GUARD: u64 = 10_000_000;

/// Exact false-positive probability by full enumeration: every insertion
/// draw vector (`S^(k·N)` of them) crossed with every lookup draw vector
/// (`S^k`), all uniform; counts the cases where each lookup index was set
/// by some insertion draw. Independent of [`efp`] by construction.
pub fn bloom_bruteforce(size: u64, k: u64, insertions: u64) -> Result<Rat, BloomError> {
    if size < 1 || k < 1 {
        return Err(BloomError::BadParams { s: size, k });
    }
    let total_draws = k
        .checked_mul(insertions + 1)
        .expect("draw count overflow");
    let cases = BigInt::from(size).pow(total_draws as u32);
    if cases > BigInt::from(BRUTEFORCE_GUARD) {
        return Err(BloomError::TooLarge {
            size: cases,
            guard: BRUTEFORCE_GUARD,
        });
    }

    let ins_draws = (k * insertions) as usize;
    let lookup_draws = k as usize;
    let mut insert_vec = vec![0u64; ins_draws];
    let mut successes: u64 = 0;
    let mut total: u64 = 0;
    loop {
        // bits set by this insertion vector
        let mut bits = vec![false; size as usize];
        for &d in &insert_vec {
            bits[d as usize] = true;
        }
        // enumerate all lookup vectors literally
        let mut lookup_vec = vec![0u64; lookup_draws];
        loop {
            total += 1;
            if lookup_vec.iter().all(|&d| bits[d as usize]) {
                successes += 1;
            }
            if !odometer(&mut lookup_vec, size) {
                break;
            }
        }
        if !odometer(&mut insert_vec, size) {
            break;
        }
    }
    Ok(BigRational::new(BigInt::from(successes), BigInt::from(total)))
}

/// Advances a base-`size` counter; false once it wraps to all zeros.
fn odometer(digits: &mut [u64], size: u64) -> bool {
    for d in digits.iter_mut() {
        *d += 1;
        if *d < size {
            return true;
        }
        *d = 0;
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::rat;

    #[test]
    fn efp_base_cases() {
        for s in [1u64, 2, 5, 8] {
            for k in [1u64, 2, 3] {
                assert_eq!(efp(0, 0, s, k).unwrap(), Rat::zero());
                assert_eq!(efp(0, s, s, k).unwrap(), Rat::one());
            }
        }
    }

    #[test]
    fn efp_one_step_unroll() {
        // E(1,0) with S=2, k=1: weight (S−b)/S = 1 onto E(0,1) = 1/2
        assert_eq!(efp(1, 0, 2, 1).unwrap(), rat(1, 2));
    }

    #[test]
    fn efp_two_step_unroll() {
        // E(1,1) = 1/2·1/2 + 1/2·1 = 3/4, then E(2,0) = E(1,1)
        assert_eq!(efp(2, 0, 2, 1).unwrap(), rat(3, 4));
    }

    #[test]
    fn efp_rejects_bad_params() {
        assert!(efp(1, 3, 2, 1).is_err());
        assert!(efp(1, 0, 0, 1).is_err());
        assert!(efp(1, 0, 2, 0).is_err());
    }

    #[test]
    fn efp_float_examples() {
        assert_eq!(efp_float(1, 0, 2, 1).unwrap(), 0.5);
        assert_eq!(efp_float(0, 4, 4, 2).unwrap(), 1.0);
    }

    #[test]
    fn bruteforce_tiny_cases() {
        assert_eq!(bloom_bruteforce(2, 1, 1).unwrap(), rat(1, 2));
        assert_eq!(bloom_bruteforce(2, 1, 2).unwrap(), rat(3, 4));
        // empty filter: no bits set, so no lookup can succeed
        assert_eq!(bloom_bruteforce(5, 2, 0).unwrap(), Rat::zero());
    }

    #[test]
    fn bruteforce_guard_trips() {
        assert!(matches!(
            bloom_bruteforce(100, 4, 10),
            Err(BloomError::TooLarge { .. })
        ));
    }

    #[test]
    fn oracle_matches_recurrence_small_grid() {
        for (s, k, n) in [(2, 1, 3), (3, 1, 2), (2, 2, 1), (4, 1, 2), (3, 2, 1)] {
            let brute = bloom_bruteforce(s, k, n).unwrap();
            let rec = efp(k * n, 0, s, k).unwrap();
            assert_eq!(brute, rec, "mismatch at S={s} k={k} N={n}");
        }
    }

    #[test]
    fn efp_monotone_in_b_and_l() {
        for s in [2u64, 3, 8] {
            for k in [1u64, 2] {
                for l in 0..6 {
                    for b in 0..s {
                        let here = efp(l, b, s, k).unwrap();
                        assert!(here <= efp(l, b + 1, s, k).unwrap());
                        assert!(here <= efp(l + 1, b, s, k).unwrap());
                        assert!(here >= Rat::zero() && here <= Rat::one());
                    }
                }
            }
        }
    }

    #[test]
    fn params_bound_is_efp() {
        let p = BloomParams::new(8, 2, 2).unwrap();
        assert_eq!(
            p.false_positive_bound().unwrap(),
            efp(4, 0, 8, 2).unwrap()
        );
    }

}
