//! Optional dense random parity precode.
//!
//! Disabled by default; the plain LT path with ML decoding already meets
//! the decodability targets. When enabled, `aux` extra symbols are
//! appended to the input, each the XOR of a random half of the inputs, and
//! fountain encoding runs over the extended block. The decoder gets the
//! parity equations for free, which pushes the failure floor down at a
//! given overhead.

use super::decoder::solve_rows;
use super::prng::NeighborRng;
use super::{
    symbol_neighbors, unpad, DecodeOutcome, DecodeReport, DegreeDistribution, EncodedSymbol,
    FountainError,
};

pub const DEFAULT_PRECODE_RATE: f64 = 0.95;

/// Parity structure extending `k` inputs with `aux` dense random parity
/// symbols. The structure is a pure function of (k, rate, seed), so both
/// sides only need those three values.
#[derive(Debug, Clone)]
pub struct Precode {
    k: usize,
    rate: f64,
    seed: u64,
    /// Sorted input-index subsets, one per auxiliary symbol.
    aux: Vec<Vec<usize>>,
}

impl Precode {
    pub fn new(k: usize, rate: f64, seed: u64) -> Result<Self, FountainError> {
        if k < 1 {
            return Err(FountainError::InvalidParameter(
                "k must be at least 1".into(),
            ));
        }
        if !(rate > 0.0 && rate <= 1.0) || !rate.is_finite() {
            return Err(FountainError::InvalidParameter(format!(
                "precode rate must be in (0, 1], got {rate}"
            )));
        }
        let total = (k as f64 / rate).ceil() as usize;
        let mut rng = NeighborRng::new(seed);
        let aux = (0..total - k)
            .map(|_| (0..k).filter(|_| rng.next_u64() & 1 == 1).collect())
            .collect();
        Ok(Precode { k, rate, seed, aux })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn aux_count(&self) -> usize {
        self.aux.len()
    }

    /// Unknown count the fountain code runs over: k + aux_count.
    pub fn k_total(&self) -> usize {
        self.k + self.aux.len()
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Materializes the intermediate symbols: the padded input split into
    /// `k` chunks, followed by the auxiliary parities.
    fn intermediate(&self, padded: &[u8], symbol_size: usize) -> Vec<Vec<u8>> {
        let mut symbols: Vec<Vec<u8>> = padded
            .chunks(symbol_size)
            .map(|c| c.to_vec())
            .collect();
        for subset in &self.aux {
            let mut parity = vec![0u8; symbol_size];
            for &input in subset {
                for (byte, v) in parity.iter_mut().zip(&symbols[input]) {
                    *byte ^= v;
                }
            }
            symbols.push(parity);
        }
        symbols
    }
}

/// Encodes `count` symbols over the precoded block. `dist` must be built
/// for `precode.k_total()` and `padded` must be exactly k·symbol_size
/// bytes (an `InputBlock`'s padded contents).
pub fn encode_precoded_stream(
    padded: &[u8],
    symbol_size: usize,
    precode: &Precode,
    dist: &DegreeDistribution,
    seed_start: u64,
    count: u64,
) -> Result<Vec<EncodedSymbol>, FountainError> {
    if dist.k() != precode.k_total() {
        return Err(FountainError::InvalidParameter(format!(
            "distribution k={} does not match precoded total {}",
            dist.k(),
            precode.k_total()
        )));
    }
    if padded.len() != precode.k * symbol_size {
        return Err(FountainError::InvalidParameter(format!(
            "padded block is {} bytes, expected {}",
            padded.len(),
            precode.k * symbol_size
        )));
    }
    if count > 0 && seed_start.checked_add(count - 1).is_none() {
        return Err(FountainError::SeedOverflow {
            start: seed_start,
            count,
        });
    }
    let symbols = precode.intermediate(padded, symbol_size);
    Ok((0..count)
        .map(|offset| {
            let seed = seed_start + offset;
            let mut payload = vec![0u8; symbol_size];
            for idx in symbol_neighbors(seed, dist) {
                for (byte, v) in payload.iter_mut().zip(&symbols[idx]) {
                    *byte ^= v;
                }
            }
            EncodedSymbol { seed, payload }
        })
        .collect())
}

/// Decodes a precoded stream. Parity equations join the received symbols
/// in one GF(2) system over `k_total` unknowns, so `rank` here can exceed
/// `symbols_used` by up to `aux_count`, and Decoded means rank = k_total.
pub fn decode_precoded(
    symbols: &[EncodedSymbol],
    precode: &Precode,
    symbol_size: usize,
    dist: &DegreeDistribution,
) -> Result<DecodeReport, FountainError> {
    if dist.k() != precode.k_total() {
        return Err(FountainError::InvalidParameter(format!(
            "distribution k={} does not match precoded total {}",
            dist.k(),
            precode.k_total()
        )));
    }
    for sym in symbols {
        if sym.payload.len() != symbol_size {
            return Err(FountainError::InvalidSymbol {
                got: sym.payload.len(),
                want: symbol_size,
            });
        }
    }
    let mut seen = std::collections::HashSet::new();
    let unique: Vec<&EncodedSymbol> = symbols.iter().filter(|s| seen.insert(s.seed)).collect();
    let symbols_used = unique.len();

    let mut rows: Vec<(Vec<usize>, Vec<u8>)> = unique
        .iter()
        .map(|sym| (symbol_neighbors(sym.seed, dist), sym.payload.clone()))
        .collect();
    for (j, subset) in precode.aux.iter().enumerate() {
        // aux_j XOR its inputs = 0; the aux index comes last, keeping the
        // row sorted.
        let mut neighbors = subset.clone();
        neighbors.push(precode.k + j);
        rows.push((neighbors, vec![0u8; symbol_size]));
    }

    let solved = solve_rows(rows, precode.k_total(), false);
    if let Some(values) = solved.values {
        let mut block = Vec::with_capacity(precode.k * symbol_size);
        for value in values.into_iter().take(precode.k) {
            block.extend_from_slice(&value);
        }
        Ok(DecodeReport {
            outcome: DecodeOutcome::Decoded,
            recovered: Some(unpad(&block)?),
            rank: solved.rank,
            symbols_used,
            elimination_used: solved.elimination_used,
        })
    } else {
        Ok(DecodeReport {
            outcome: DecodeOutcome::Undecodable,
            recovered: None,
            rank: solved.rank,
            symbols_used,
            elimination_used: solved.elimination_used,
        })
    }
}
