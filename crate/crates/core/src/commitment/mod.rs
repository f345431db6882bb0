//! Factoring-based private subset commitments.
//!
//! For every object index the committer publishes `i = j * k_prime` (two
//! fresh big primes) and a digit `l`. If the object is in the chosen
//! subset, `l` is the mod-10 sum of the decimal digits of `j` and
//! `k_prime`; otherwise it is that sum plus one, mod 10. Without the
//! factors the two cases are indistinguishable short of factoring `i`;
//! with them, recomputing the digit sum classifies the index.

pub mod format;
mod primes;
pub mod receipt;

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

pub use primes::{gen_prime, is_probable_prime};

/// Prime size per factor, in bits.
pub const DEFAULT_PRIME_BITS: u32 = 512;
pub const MIN_PRIME_BITS: u32 = 8;
pub const MAX_PRIME_BITS: u32 = 4096;

#[derive(Debug, Error)]
pub enum CommitmentError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("commitment is for index {commitment}, reveal for index {reveal}")]
    IndexMismatch { commitment: u64, reveal: u64 },
    #[error("reveal references index {0} with no matching commitment")]
    UnknownIndex(u64),
    #[error("malformed file: {0}")]
    Malformed(String),
}

/// Published half: the semiprime modulus and the tag digit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Commitment {
    pub index: u64,
    pub i: BigUint,
    pub l: u8,
}

/// Secret half: the prime factors of `i`. `k_prime` is so named because
/// plain `k` already means the symbol count in the coding half of this
/// crate.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RevealKey {
    pub index: u64,
    pub j: BigUint,
    pub k_prime: BigUint,
}

/// A chosen subset of the object universe `1..=universe_size`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SelectionSet {
    universe_size: u64,
    chosen: BTreeSet<u64>,
}

impl SelectionSet {
    pub fn new(
        universe_size: u64,
        chosen: impl IntoIterator<Item = u64>,
    ) -> Result<Self, CommitmentError> {
        if universe_size < 1 {
            return Err(CommitmentError::InvalidParameter(
                "universe must contain at least one object".into(),
            ));
        }
        let chosen: BTreeSet<u64> = chosen.into_iter().collect();
        for &index in &chosen {
            if index < 1 || index > universe_size {
                return Err(CommitmentError::InvalidParameter(format!(
                    "chosen index {index} outside universe 1..={universe_size}"
                )));
            }
        }
        Ok(SelectionSet { universe_size, chosen })
    }

    pub fn universe_size(&self) -> u64 {
        self.universe_size
    }

    pub fn chosen(&self) -> &BTreeSet<u64> {
        &self.chosen
    }

    pub fn is_chosen(&self, index: u64) -> bool {
        self.chosen.contains(&index)
    }
}

/// Sum of the base-10 digits of `n`.
///
/// Chunks by 10^19 (the largest power of ten in a u64) so the big-integer
/// division count is proportional to the decimal length divided by 19.
fn digit_sum(n: &BigUint) -> u64 {
    const CHUNK: u64 = 10_000_000_000_000_000_000;
    let chunk = BigUint::from(CHUNK);
    let mut rest = n.clone();
    let mut sum = 0u64;
    while !rest.is_zero() {
        let (quotient, remainder) = rest.div_rem(&chunk);
        let mut small = remainder.to_u64().expect("remainder below 10^19");
        while small > 0 {
            sum += small % 10;
            small /= 10;
        }
        rest = quotient;
    }
    sum
}

/// Mod-10 sum of all decimal digits of `j` and `k_prime` together.
/// Symmetric in its arguments.
pub fn digit_sum_mod10(j: &BigUint, k_prime: &BigUint) -> u8 {
    ((digit_sum(j) + digit_sum(k_prime)) % 10) as u8
}

fn check_bits(bits: u32) -> Result<(), CommitmentError> {
    if !(MIN_PRIME_BITS..=MAX_PRIME_BITS).contains(&bits) {
        return Err(CommitmentError::InvalidParameter(format!(
            "prime size {bits} outside {MIN_PRIME_BITS}..={MAX_PRIME_BITS} bits"
        )));
    }
    Ok(())
}

/// Commits to one object with fresh primes of `bits` bits each.
pub fn commit_object(
    index: u64,
    selected: bool,
    bits: u32,
    rng: &mut impl RngCore,
) -> Result<(Commitment, RevealKey), CommitmentError> {
    check_bits(bits)?;
    let j = gen_prime(bits, rng);
    let k_prime = gen_prime(bits, rng);
    Ok(commit_object_with_primes(index, selected, j, k_prime))
}

/// Deterministic variant taking the factors directly. Callers are
/// responsible for their primality; `verify_object` rejects composites.
pub fn commit_object_with_primes(
    index: u64,
    selected: bool,
    j: BigUint,
    k_prime: BigUint,
) -> (Commitment, RevealKey) {
    let base = digit_sum_mod10(&j, &k_prime);
    let l = if selected { base } else { (base + 1) % 10 };
    let commitment = Commitment { index, i: &j * &k_prime, l };
    (commitment, RevealKey { index, j, k_prime })
}

/// Classification of one revealed commitment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Selected,
    NotSelected,
    Invalid,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, out: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let text = match self {
            Verdict::Selected => "selected",
            Verdict::NotSelected => "not_selected",
            Verdict::Invalid => "invalid",
        };
        out.write_str(text)
    }
}

/// Recomputes the tag from a reveal and classifies the commitment.
///
/// `Invalid` covers every inconsistency: factors that do not multiply to
/// `i`, factors of 1 or 0, composite factors, and tags matching neither
/// the selected nor the not-selected rule.
pub fn verify_object(c: &Commitment, r: &RevealKey) -> Result<Verdict, CommitmentError> {
    if c.index != r.index {
        return Err(CommitmentError::IndexMismatch {
            commitment: c.index,
            reveal: r.index,
        });
    }
    if r.j <= BigUint::one() || r.k_prime <= BigUint::one() {
        return Ok(Verdict::Invalid);
    }
    if &r.j * &r.k_prime != c.i {
        return Ok(Verdict::Invalid);
    }
    if !is_probable_prime(&r.j) || !is_probable_prime(&r.k_prime) {
        return Ok(Verdict::Invalid);
    }
    let base = digit_sum_mod10(&r.j, &r.k_prime);
    Ok(if c.l == base {
        Verdict::Selected
    } else if c.l == (base + 1) % 10 {
        Verdict::NotSelected
    } else {
        Verdict::Invalid
    })
}

/// Commits to every index of the universe, selected or not, so the
/// published file reveals nothing about which indices were chosen.
///
/// Index `x` draws its primes from a generator seeded with
/// `base_seed + x`, making the output independent of scheduling.
pub fn commit_selection(
    sel: &SelectionSet,
    bits: u32,
    base_seed: u64,
) -> Result<(Vec<Commitment>, Vec<RevealKey>), CommitmentError> {
    check_bits(bits)?;
    let pairs: Vec<(Commitment, RevealKey)> = (1..=sel.universe_size())
        .into_par_iter()
        .map(|index| {
            let mut rng = ChaCha8Rng::seed_from_u64(base_seed.wrapping_add(index));
            commit_object(index, sel.is_chosen(index), bits, &mut rng)
                .expect("bits already validated")
        })
        .collect();
    Ok(pairs.into_iter().unzip())
}

/// Per-index verdicts plus totals, over exactly the revealed indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerifySummary {
    pub verdicts: Vec<(u64, Verdict)>,
    pub selected: u64,
    pub not_selected: u64,
    pub invalid: u64,
}

/// Verifies each reveal against the commitment with the same index.
///
/// Reveals may cover any subset of the committed indices (a winner can
/// prove just the chosen ones); an index with no commitment is an error,
/// not a verdict.
pub fn verify_selection(
    commitments: &[Commitment],
    reveals: &[RevealKey],
) -> Result<VerifySummary, CommitmentError> {
    let by_index: BTreeMap<u64, &Commitment> =
        commitments.iter().map(|c| (c.index, c)).collect();
    if by_index.len() != commitments.len() {
        return Err(CommitmentError::Malformed(
            "duplicate commitment index".into(),
        ));
    }
    let mut verdicts = Vec::with_capacity(reveals.len());
    let (mut selected, mut not_selected, mut invalid) = (0u64, 0u64, 0u64);
    for reveal in reveals {
        let commitment = by_index
            .get(&reveal.index)
            .ok_or(CommitmentError::UnknownIndex(reveal.index))?;
        let verdict = verify_object(commitment, reveal)?;
        match verdict {
            Verdict::Selected => selected += 1,
            Verdict::NotSelected => not_selected += 1,
            Verdict::Invalid => invalid += 1,
        }
        verdicts.push((reveal.index, verdict));
    }
    Ok(VerifySummary { verdicts, selected, not_selected, invalid })
}
