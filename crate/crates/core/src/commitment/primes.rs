//! Probable-prime generation and testing for commitment factors.
//!
//! `is_probable_prime` derives its Miller-Rabin bases from SHA-256 of the
//! candidate itself, so the test is a pure function: no caller-supplied
//! randomness, identical verdicts everywhere. 64 rounds put the
//! false-prime probability at most 4^-64 = 2^-128.

use num_bigint::{BigUint, RandBigInt};
use num_traits::{One, Zero};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};
use std::sync::OnceLock;

const MILLER_RABIN_ROUNDS: usize = 64;

/// Trial-division screen. Rejecting multiples of primes below 1024 removes
/// most candidates before any modular exponentiation.
const SIEVE_BOUND: u64 = 1024;

fn small_primes() -> &'static [u64] {
    static PRIMES: OnceLock<Vec<u64>> = OnceLock::new();
    PRIMES.get_or_init(|| {
        let bound = SIEVE_BOUND as usize;
        let mut composite = vec![false; bound];
        let mut primes = Vec::new();
        for p in 2..bound {
            if composite[p] {
                continue;
            }
            primes.push(p as u64);
            for multiple in (p * p..bound).step_by(p) {
                composite[multiple] = true;
            }
        }
        primes
    })
}

/// Miller-Rabin with deterministic per-candidate bases.
pub fn is_probable_prime(n: &BigUint) -> bool {
    let two = BigUint::from(2u32);
    if *n < two {
        return false;
    }
    for &p in small_primes() {
        let p = BigUint::from(p);
        if *n == p {
            return true;
        }
        if (n % &p).is_zero() {
            return false;
        }
    }

    // n is odd and at least 1031 here, so n - 3 and the shift are safe.
    let n_minus_one = n - 1u32;
    let r = n_minus_one
        .trailing_zeros()
        .expect("even predecessor of an odd number");
    let d = &n_minus_one >> r;
    let base_bound = n - 3u32;

    let mut rng = ChaCha8Rng::from_seed(Sha256::digest(n.to_bytes_be()).into());
    'rounds: for _ in 0..MILLER_RABIN_ROUNDS {
        let base = rng.gen_biguint_below(&base_bound) + &two;
        let mut x = base.modpow(&d, n);
        if x.is_one() || x == n_minus_one {
            continue;
        }
        for _ in 0..r - 1 {
            x = &x * &x % n;
            if x == n_minus_one {
                continue 'rounds;
            }
        }
        return false;
    }
    true
}

/// Draws an odd probable prime of exactly `bits` bits (top bit set).
///
/// Retries internally until a candidate passes `is_probable_prime`; by the
/// prime number theorem that takes about `bits * ln 2 / 2` draws.
pub fn gen_prime(bits: u32, rng: &mut impl RngCore) -> BigUint {
    assert!(bits >= 8, "prime size below 8 bits is not supported");
    loop {
        let mut candidate = rng.gen_biguint(u64::from(bits));
        candidate.set_bit(u64::from(bits) - 1, true);
        candidate.set_bit(0, true);
        if is_probable_prime(&candidate) {
            return candidate;
        }
    }
}
