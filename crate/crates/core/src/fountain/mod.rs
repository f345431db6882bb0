//! LT-style fountain code engine.
//!
//! A message is padded into `k` fixed-size input symbols. Every output
//! symbol is the XOR of a pseudorandom subset of input symbols; the subset
//! is a pure function of the symbol's 64-bit seed and the degree
//! distribution, so a symbol is fully self-describing given `(seed, k, c,
//! delta)`. Decoding runs a peeling pass and falls back to GF(2) Gaussian
//! elimination on whatever the peeler could not resolve, which makes it a
//! maximum-likelihood decoder: decoding succeeds exactly when the received
//! coefficient matrix has rank `k`.

mod decoder;
pub mod precode;
mod prng;
mod soliton;

pub use decoder::{decode, decode_with, DecodeOptions, DecodeOutcome, DecodeReport};
pub use soliton::{make_distribution, DegreeDistribution, DEFAULT_C, DEFAULT_DELTA};

use thiserror::Error;

/// Number of bytes prepended to a message to record its original length.
pub(crate) const LENGTH_PREFIX: usize = 8;

#[derive(Debug, Error)]
pub enum FountainError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("symbol payload is {got} bytes, expected {want}")]
    InvalidSymbol { got: usize, want: usize },
    #[error("seed range starting at {start} with {count} symbols wraps past u64::MAX")]
    SeedOverflow { start: u64, count: u64 },
    #[error("decoded block carries a corrupt length prefix")]
    InvalidPadding,
}

/// A message padded out to `k` symbols of `symbol_size` bytes.
///
/// The padded layout is an 8-byte big-endian original-length prefix,
/// the message bytes, then zero fill up to `k * symbol_size`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InputBlock {
    padded: Vec<u8>,
    k: usize,
    symbol_size: usize,
    pad_len: usize,
}

impl InputBlock {
    pub fn new(data: &[u8], symbol_size: usize) -> Result<Self, FountainError> {
        if symbol_size < 1 {
            return Err(FountainError::InvalidParameter(
                "symbol_size must be at least 1".into(),
            ));
        }
        let total = data
            .len()
            .checked_add(LENGTH_PREFIX)
            .ok_or_else(|| FountainError::InvalidParameter("message too large".into()))?;
        let k = total.div_ceil(symbol_size);
        let padded_len = k * symbol_size;
        let mut padded = Vec::with_capacity(padded_len);
        padded.extend_from_slice(&(data.len() as u64).to_be_bytes());
        padded.extend_from_slice(data);
        padded.resize(padded_len, 0);
        Ok(InputBlock {
            padded,
            k,
            symbol_size,
            pad_len: padded_len - data.len(),
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn symbol_size(&self) -> usize {
        self.symbol_size
    }

    /// Total padding added to the message: the 8-byte length prefix plus
    /// zero fill. Always less than `symbol_size + 8`.
    pub fn pad_len(&self) -> usize {
        self.pad_len
    }

    /// The padded bytes, exactly `k * symbol_size` long.
    pub fn padded(&self) -> &[u8] {
        &self.padded
    }

    pub fn symbol(&self, index: usize) -> &[u8] {
        &self.padded[index * self.symbol_size..(index + 1) * self.symbol_size]
    }
}

/// Strips the length prefix and zero fill from a decoded block.
pub(crate) fn unpad(block: &[u8]) -> Result<Vec<u8>, FountainError> {
    if block.len() < LENGTH_PREFIX {
        return Err(FountainError::InvalidPadding);
    }
    let mut prefix = [0u8; LENGTH_PREFIX];
    prefix.copy_from_slice(&block[..LENGTH_PREFIX]);
    let len = u64::from_be_bytes(prefix) as usize;
    if len > block.len() - LENGTH_PREFIX {
        return Err(FountainError::InvalidPadding);
    }
    Ok(block[LENGTH_PREFIX..LENGTH_PREFIX + len].to_vec())
}

/// One fountain-code output symbol: the XOR of the input symbols selected
/// by `seed`. The degree and neighbor set are re-derived from the seed,
/// never stored.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedSymbol {
    pub seed: u64,
    pub payload: Vec<u8>,
}

/// Derives the input-symbol indices XORed into the symbol with this seed.
///
/// Pure: the same `(seed, dist)` always yields the same sorted set.
pub fn symbol_neighbors(seed: u64, dist: &DegreeDistribution) -> Vec<usize> {
    let mut rng = prng::NeighborRng::new(seed);
    let degree = dist.sample_degree(rng.next_unit());
    prng::sample_distinct(&mut rng, dist.k(), degree)
}

/// Encodes the symbol with the given seed over `block`.
pub fn encode_symbol(
    block: &InputBlock,
    seed: u64,
    dist: &DegreeDistribution,
) -> Result<EncodedSymbol, FountainError> {
    if block.k() != dist.k() {
        return Err(FountainError::InvalidParameter(format!(
            "block has k={} but distribution was built for k={}",
            block.k(),
            dist.k()
        )));
    }
    let mut payload = vec![0u8; block.symbol_size()];
    for idx in symbol_neighbors(seed, dist) {
        for (out, byte) in payload.iter_mut().zip(block.symbol(idx)) {
            *out ^= byte;
        }
    }
    Ok(EncodedSymbol { seed, payload })
}

/// Encodes `count` symbols with consecutive seeds starting at `seed_start`.
pub fn encode_stream(
    block: &InputBlock,
    dist: &DegreeDistribution,
    seed_start: u64,
    count: u64,
) -> Result<Vec<EncodedSymbol>, FountainError> {
    if count == 0 {
        return Ok(Vec::new());
    }
    seed_start
        .checked_add(count - 1)
        .ok_or(FountainError::SeedOverflow {
            start: seed_start,
            count,
        })?;
    (0..count)
        .map(|offset| encode_symbol(block, seed_start + offset, dist))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dist(k: usize) -> DegreeDistribution {
        make_distribution(k, DEFAULT_C, DEFAULT_DELTA).unwrap()
    }

    #[test]
    fn input_block_pads_to_exact_multiple() {
        let block = InputBlock::new(b"hello", 4).unwrap();
        assert_eq!(block.k(), 4); // (5 + 8).div_ceil(4)
        assert_eq!(block.padded().len(), 16);
        assert_eq!(block.pad_len(), 11);
        assert!(block.pad_len() < block.symbol_size() + 8);
        assert_eq!(&block.padded()[..8], &5u64.to_be_bytes());
        assert_eq!(&block.padded()[8..13], b"hello");
        assert_eq!(&block.padded()[13..], &[0, 0, 0]);
    }

    #[test]
    fn input_block_rejects_zero_symbol_size() {
        assert!(matches!(
            InputBlock::new(b"x", 0),
            Err(FountainError::InvalidParameter(_))
        ));
    }

    #[test]
    fn unpad_roundtrips() {
        for len in [0usize, 1, 7, 8, 9, 100] {
            let data: Vec<u8> = (0..len as u8).collect();
            for symbol_size in [1usize, 3, 16] {
                let block = InputBlock::new(&data, symbol_size).unwrap();
                assert_eq!(unpad(block.padded()).unwrap(), data);
            }
        }
    }

    #[test]
    fn unpad_rejects_absurd_lengths() {
        let mut block = InputBlock::new(b"abc", 1).unwrap().padded().to_vec();
        block[0] = 0xff;
        assert!(matches!(unpad(&block), Err(FountainError::InvalidPadding)));
    }

    #[test]
    fn neighbors_k1_is_always_index_zero() {
        let d = dist(1);
        for seed in [0u64, 1, 42, u64::MAX] {
            assert_eq!(symbol_neighbors(seed, &d), vec![0]);
        }
    }

    #[test]
    fn neighbors_are_deterministic() {
        let d = dist(100);
        for seed in 0..50u64 {
            assert_eq!(symbol_neighbors(seed, &d), symbol_neighbors(seed, &d));
        }
    }

    #[test]
    fn neighbors_golden_seed_42_k100() {
        // Pinned regression value: derived once from the normative PRNG
        // spec (LCG with xorshift output, inverse-CDF degree, virtual
        // Fisher-Yates indices) and frozen. Ports must reproduce it.
        let d = make_distribution(100, 0.03, 0.5).unwrap();
        assert_eq!(symbol_neighbors(42, &d), vec![28, 78, 81]);
    }

    #[test]
    fn encode_k1_copies_the_single_symbol() {
        let block = InputBlock::new(b"z", 9).unwrap();
        assert_eq!(block.k(), 1);
        let d = dist(1);
        let sym = encode_symbol(&block, 123, &d).unwrap();
        assert_eq!(sym.payload, block.symbol(0));
    }

    #[test]
    fn encode_xor_definition_on_known_neighbors() {
        // k = 4 one-byte symbols; XOR of any neighbor set must match a
        // direct recomputation.
        let block = InputBlock::new(&[0x0f, 0xf0, 0x55], 1).unwrap();
        assert_eq!(block.k(), 11);
        let d = dist(11);
        for seed in 0..40u64 {
            let sym = encode_symbol(&block, seed, &d).unwrap();
            let expect = symbol_neighbors(seed, &d)
                .into_iter()
                .fold(0u8, |acc, i| acc ^ block.symbol(i)[0]);
            assert_eq!(sym.payload, vec![expect], "seed {seed}");
        }
    }

    #[test]
    fn encode_all_zero_block_gives_zero_payloads() {
        // The empty message is the one whose padded block is genuinely
        // all-zero (its length prefix is zero too). XOR linearity then
        // forces every payload to zero. A nonempty run of 0x00 bytes would
        // not do: its length prefix is nonzero.
        let block = InputBlock::new(b"", 4).unwrap();
        assert!(block.padded().iter().all(|&b| b == 0));
        let d = dist(block.k());
        for seed in 0..64u64 {
            let sym = encode_symbol(&block, seed, &d).unwrap();
            assert!(sym.payload.iter().all(|&b| b == 0));
        }
    }

    #[test]
    fn encode_rejects_mismatched_k() {
        let block = InputBlock::new(b"hello world", 1).unwrap();
        let d = dist(3);
        assert!(matches!(
            encode_symbol(&block, 0, &d),
            Err(FountainError::InvalidParameter(_))
        ));
    }

    #[test]
    fn stream_seeds_are_consecutive() {
        let block = InputBlock::new(b"data", 2).unwrap();
        let d = dist(block.k());
        let symbols = encode_stream(&block, &d, 7, 3).unwrap();
        let seeds: Vec<u64> = symbols.iter().map(|s| s.seed).collect();
        assert_eq!(seeds, vec![7, 8, 9]);
    }

    #[test]
    fn stream_count_zero_is_empty() {
        let block = InputBlock::new(b"data", 2).unwrap();
        let d = dist(block.k());
        assert!(encode_stream(&block, &d, u64::MAX, 0).unwrap().is_empty());
    }

    #[test]
    fn stream_overflow_is_an_error() {
        let block = InputBlock::new(b"data", 2).unwrap();
        let d = dist(block.k());
        assert!(matches!(
            encode_stream(&block, &d, u64::MAX, 2),
            Err(FountainError::SeedOverflow { .. })
        ));
    }
}
