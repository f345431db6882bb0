//! s-of-n presence scheme over fountain-coded key fragments.
//!
//! A key of `key_len` bytes becomes `k` input symbols. Every member gets a
//! fragment of `f` encoded symbols, sized so that any `s` fragments pool at
//! least `ceil(hi * k)` symbols (decodable with very high probability)
//! while any `s - 1` pool at most `floor(lo * k) < k` (never decodable).
//! With the default overheads (1.1, 0.99) the largest supportable `s` is
//! `floor(1.1 / (1.1 - 0.99)) = 10`.
//!
//! Members' fragments carry disjoint seed ranges (member `i` owns seeds
//! `i*f .. (i+1)*f`), so a pool of distinct members contains no duplicate
//! symbols and the counting argument above is exact, not probabilistic.

pub mod format;

use std::collections::HashSet;
use std::fmt;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::fountain::{
    decode, encode_stream, make_distribution, DecodeOutcome, DecodeReport, EncodedSymbol,
    FountainError, InputBlock, DEFAULT_C, DEFAULT_DELTA,
};
use crate::overhead::{Overhead, OverheadError};

/// Default decodable-overhead factor: any `s` fragments carry `1.1 * k`.
pub const DEFAULT_OVERHEAD_HI: &str = "1.1";
/// Default non-decodable bound: any `s - 1` fragments carry `<= 0.99 * k`.
pub const DEFAULT_OVERHEAD_LO: &str = "0.99";

#[derive(Debug, Error)]
pub enum ThresholdError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("threshold s={s} is infeasible: {cause}")]
    InfeasibleThreshold { s: u16, cause: InfeasibleCause },
    #[error("invalid key: {0}")]
    InvalidKey(String),
    #[error("fragments carry mixed key ids: {expected} and {got}")]
    MixedKeyId { expected: KeyId, got: KeyId },
    #[error("member {0} appears in more than one fragment")]
    DuplicateMember(u32),
    #[error("malformed fragment: {0}")]
    MalformedFragment(String),
    #[error(transparent)]
    Fountain(#[from] FountainError),
    #[error(transparent)]
    Overhead(#[from] OverheadError),
}

/// Why a requested threshold has no valid fragment size.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InfeasibleCause {
    /// `s` exceeds `floor(hi / (hi - lo))`; no `k` can help.
    ExceedsMaxThreshold { max_s: u64 },
    /// `s` is within the continuous bound but integer rounding at this
    /// small `k` breaks an inequality; a longer key or coarser symbols fix it.
    RoundingAtSmallK { k: u32, f: u32, burden: u64, cap: u64 },
}

impl fmt::Display for InfeasibleCause {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InfeasibleCause::ExceedsMaxThreshold { max_s } => write!(
                out,
                "s exceeds the maximum threshold {max_s} supported by the overheads"
            ),
            InfeasibleCause::RoundingAtSmallK { k, f, burden, cap } => write!(
                out,
                "k={k} is too small: minimal f={f} makes (s-1)*f = {burden} exceed \
                 the bound {cap}; use a longer key or different symbol size"
            ),
        }
    }
}

/// 16-byte identifier binding the fragments of one split together.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct KeyId([u8; 16]);

impl KeyId {
    pub const LEN: usize = 16;

    pub fn new(bytes: [u8; 16]) -> Self {
        KeyId(bytes)
    }

    pub fn from_rng(rng: &mut impl RngCore) -> Self {
        let mut bytes = [0u8; 16];
        rng.fill_bytes(&mut bytes);
        KeyId(bytes)
    }

    pub fn from_hex(s: &str) -> Result<Self, ThresholdError> {
        let raw = hex::decode(s)
            .map_err(|e| ThresholdError::InvalidParameter(format!("bad key id hex: {e}")))?;
        let bytes: [u8; 16] = raw.try_into().map_err(|_| {
            ThresholdError::InvalidParameter("key id must be 16 bytes of hex".into())
        })?;
        Ok(KeyId(bytes))
    }

    pub fn as_bytes(&self) -> &[u8; 16] {
        &self.0
    }
}

impl fmt::Display for KeyId {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        out.write_str(&hex::encode(self.0))
    }
}

impl fmt::Debug for KeyId {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(out, "KeyId({self})")
    }
}

/// Distribution and overhead knobs for planning. Defaults match the module
/// docs: overheads (1.1, 0.99), robust soliton (0.03, 0.5).
#[derive(Debug, Clone)]
pub struct PlanOptions {
    pub overhead_hi: Overhead,
    pub overhead_lo: Overhead,
    pub c: f64,
    pub delta: f64,
}

impl Default for PlanOptions {
    fn default() -> Self {
        PlanOptions {
            overhead_hi: Overhead::from_decimal_str(DEFAULT_OVERHEAD_HI)
                .expect("default overhead parses"),
            overhead_lo: Overhead::from_decimal_str(DEFAULT_OVERHEAD_LO)
                .expect("default overhead parses"),
            c: DEFAULT_C,
            delta: DEFAULT_DELTA,
        }
    }
}

/// A feasible (n, s, k, f) assignment. Only `plan_threshold` constructs
/// one, so both sizing inequalities hold by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdPlan {
    n: u32,
    s: u16,
    k: u32,
    f: u32,
    symbol_size: u32,
    overhead_hi: Overhead,
    overhead_lo: Overhead,
    c: f64,
    delta: f64,
}

impl ThresholdPlan {
    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn s(&self) -> u16 {
        self.s
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    /// Symbols per fragment.
    pub fn f(&self) -> u32 {
        self.f
    }

    pub fn symbol_size(&self) -> u32 {
        self.symbol_size
    }

    pub fn overhead_hi(&self) -> &Overhead {
        &self.overhead_hi
    }

    pub fn overhead_lo(&self) -> &Overhead {
        &self.overhead_lo
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Seed range owned by one member; ranges are pairwise disjoint and
    /// their union is `0 .. n*f`.
    pub fn seed_range(&self, member_id: u32) -> std::ops::Range<u64> {
        let f = self.f as u64;
        member_id as u64 * f..(member_id as u64 + 1) * f
    }

    /// Longest key length this plan's k can carry.
    pub fn max_key_len(&self) -> usize {
        self.k as usize * self.symbol_size as usize - crate::fountain::LENGTH_PREFIX
    }
}

/// Largest `s` for which fragment sizes can satisfy both inequalities, in
/// the continuous relaxation: `floor(hi / (hi - lo))`.
pub fn max_threshold(hi: &Overhead, lo: &Overhead) -> Result<u64, ThresholdError> {
    if lo >= hi {
        return Err(ThresholdError::InvalidParameter(format!(
            "overheads must satisfy lo < hi, got lo={lo} hi={hi}"
        )));
    }
    let quotient = hi.ratio() / (hi.ratio() - lo.ratio());
    Ok(quotient.floor().to_integer() as u64)
}

/// Computes the fragment size for an s-of-n split of a `key_len`-byte key.
///
/// `k = ceil((key_len + 8) / symbol_size)` (the 8 covers the length
/// prefix), `f` is the smallest integer with `s*f >= ceil(hi*k)`, and the
/// plan exists only if `(s-1)*f <= floor(lo*k)` and `(s-1)*f < k`.
pub fn plan_threshold(
    n: u32,
    s: u16,
    key_len: usize,
    symbol_size: u32,
    opts: &PlanOptions,
) -> Result<ThresholdPlan, ThresholdError> {
    if s < 2 {
        return Err(ThresholdError::InvalidParameter(format!(
            "s must be at least 2, got {s}"
        )));
    }
    if u64::from(s) > u64::from(n) {
        return Err(ThresholdError::InvalidParameter(format!(
            "s={s} exceeds group size n={n}"
        )));
    }
    if key_len < 1 {
        return Err(ThresholdError::InvalidParameter(
            "key length must be at least 1 byte".into(),
        ));
    }
    if symbol_size < 1 {
        return Err(ThresholdError::InvalidParameter(
            "symbol size must be at least 1 byte".into(),
        ));
    }
    if opts.c <= 0.0 || !opts.c.is_finite() {
        return Err(ThresholdError::InvalidParameter(format!(
            "soliton constant c must be positive and finite, got {}",
            opts.c
        )));
    }
    if !(opts.delta > 0.0 && opts.delta < 1.0) {
        return Err(ThresholdError::InvalidParameter(format!(
            "delta must lie in (0, 1), got {}",
            opts.delta
        )));
    }
    let max_s = max_threshold(&opts.overhead_hi, &opts.overhead_lo)?;

    let padded = key_len
        .checked_add(crate::fountain::LENGTH_PREFIX)
        .ok_or_else(|| ThresholdError::InvalidParameter("key length overflows".into()))?;
    let k64 = padded.div_ceil(symbol_size as usize) as u64;
    let k: u32 = k64
        .try_into()
        .map_err(|_| ThresholdError::InvalidParameter(format!("k={k64} exceeds u32")))?;

    let need = opts.overhead_hi.ceil_mul(k64);
    let f_wide = need.div_ceil(u64::from(s));
    let f: u32 = f_wide
        .try_into()
        .map_err(|_| ThresholdError::InvalidParameter(format!("f={f_wide} exceeds u32")))?;

    let burden = u64::from(s - 1) * f_wide;
    let cap = opts.overhead_lo.floor_mul(k64).min(k64 - 1);
    if burden > cap {
        let cause = if u64::from(s) > max_s {
            InfeasibleCause::ExceedsMaxThreshold { max_s }
        } else {
            InfeasibleCause::RoundingAtSmallK { k, f, burden, cap }
        };
        return Err(ThresholdError::InfeasibleThreshold { s, cause });
    }

    Ok(ThresholdPlan {
        n,
        s,
        k,
        f,
        symbol_size,
        overhead_hi: opts.overhead_hi.clone(),
        overhead_lo: opts.overhead_lo.clone(),
        c: opts.c,
        delta: opts.delta,
    })
}

/// One member's share: `f` encoded symbols plus enough header to combine
/// and decode without out-of-band data.
#[derive(Debug, Clone, PartialEq)]
pub struct Fragment {
    pub key_id: KeyId,
    pub member_id: u32,
    pub k: u32,
    pub symbol_size: u32,
    pub n: u32,
    pub s: u16,
    pub f: u32,
    pub c: f64,
    pub delta: f64,
    pub symbols: Vec<EncodedSymbol>,
}

impl Fragment {
    /// Structural coherence: counts, sizes, and the member's seed range.
    pub fn validate(&self) -> Result<(), ThresholdError> {
        if self.k < 1 || self.symbol_size < 1 || self.f < 1 {
            return Err(ThresholdError::MalformedFragment(
                "k, symbol_size, and f must all be positive".into(),
            ));
        }
        if self.s < 2 || u64::from(self.s) > u64::from(self.n) {
            return Err(ThresholdError::MalformedFragment(format!(
                "threshold s={} inconsistent with group size n={}",
                self.s, self.n
            )));
        }
        if self.member_id >= self.n {
            return Err(ThresholdError::MalformedFragment(format!(
                "member id {} outside group of {}",
                self.member_id, self.n
            )));
        }
        if self.c <= 0.0 || !self.c.is_finite() || !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(ThresholdError::MalformedFragment(format!(
                "invalid distribution parameters c={} delta={}",
                self.c, self.delta
            )));
        }
        if self.symbols.len() != self.f as usize {
            return Err(ThresholdError::MalformedFragment(format!(
                "expected {} symbols, found {}",
                self.f,
                self.symbols.len()
            )));
        }
        let start = self.member_id as u64 * self.f as u64;
        for (offset, sym) in self.symbols.iter().enumerate() {
            if sym.seed != start + offset as u64 {
                return Err(ThresholdError::MalformedFragment(format!(
                    "symbol {offset} carries seed {} outside member {}'s range",
                    sym.seed, self.member_id
                )));
            }
            if sym.payload.len() != self.symbol_size as usize {
                return Err(ThresholdError::MalformedFragment(format!(
                    "symbol {offset} payload is {} bytes, expected {}",
                    sym.payload.len(),
                    self.symbol_size
                )));
            }
        }
        Ok(())
    }

    fn plan_echo(&self) -> (u32, u32, u32, u16, u32, u64, u64) {
        (
            self.k,
            self.symbol_size,
            self.n,
            self.s,
            self.f,
            self.c.to_bits(),
            self.delta.to_bits(),
        )
    }
}

/// Splits a key into `n` fragments under `plan`. The key must have the
/// same `k` the plan was computed for.
pub fn split_key(
    key: &[u8],
    plan: &ThresholdPlan,
    key_id: KeyId,
) -> Result<Vec<Fragment>, ThresholdError> {
    let block = block_for(key, plan)?;
    let dist = make_distribution(plan.k as usize, plan.c, plan.delta)?;
    (0..plan.n)
        .map(|member_id| member_fragment(&block, &dist, plan, key_id, member_id))
        .collect()
}

fn block_for(key: &[u8], plan: &ThresholdPlan) -> Result<InputBlock, ThresholdError> {
    if key.is_empty() {
        return Err(ThresholdError::InvalidKey("key must not be empty".into()));
    }
    let block = InputBlock::new(key, plan.symbol_size as usize)?;
    if block.k() != plan.k as usize {
        return Err(ThresholdError::InvalidKey(format!(
            "{}-byte key needs k={}, but the plan was computed for k={}",
            key.len(),
            block.k(),
            plan.k
        )));
    }
    Ok(block)
}

fn member_fragment(
    block: &InputBlock,
    dist: &crate::fountain::DegreeDistribution,
    plan: &ThresholdPlan,
    key_id: KeyId,
    member_id: u32,
) -> Result<Fragment, ThresholdError> {
    let range = plan.seed_range(member_id);
    let symbols = encode_stream(block, dist, range.start, plan.f as u64)?;
    Ok(Fragment {
        key_id,
        member_id,
        k: plan.k,
        symbol_size: plan.symbol_size,
        n: plan.n,
        s: plan.s,
        f: plan.f,
        c: plan.c,
        delta: plan.delta,
        symbols,
    })
}

/// Result of pooling fragments: either the key or a report saying how far
/// the decoder got.
#[derive(Debug, Clone)]
pub enum CombineOutcome {
    Decoded { key: Vec<u8>, report: DecodeReport },
    Undecodable { report: DecodeReport },
}

impl CombineOutcome {
    pub fn key(&self) -> Option<&[u8]> {
        match self {
            CombineOutcome::Decoded { key, .. } => Some(key),
            CombineOutcome::Undecodable { .. } => None,
        }
    }

    pub fn report(&self) -> &DecodeReport {
        match self {
            CombineOutcome::Decoded { report, .. } => report,
            CombineOutcome::Undecodable { report } => report,
        }
    }
}

/// Pools the symbols of the given fragments and attempts a decode.
///
/// Any subset of at least `s` well-formed fragments decodes with very high
/// probability; `s - 1` or fewer always return `Undecodable` because they
/// pool fewer than `k` symbols.
pub fn combine_fragments(fragments: &[Fragment]) -> Result<CombineOutcome, ThresholdError> {
    let first = fragments
        .first()
        .ok_or_else(|| ThresholdError::MalformedFragment("no fragments supplied".into()))?;
    for fragment in fragments {
        fragment.validate()?;
    }
    for fragment in &fragments[1..] {
        if fragment.key_id != first.key_id {
            return Err(ThresholdError::MixedKeyId {
                expected: first.key_id,
                got: fragment.key_id,
            });
        }
        if fragment.plan_echo() != first.plan_echo() {
            return Err(ThresholdError::MalformedFragment(
                "fragments disagree on plan parameters".into(),
            ));
        }
    }
    let mut seen = HashSet::new();
    for fragment in fragments {
        if !seen.insert(fragment.member_id) {
            return Err(ThresholdError::DuplicateMember(fragment.member_id));
        }
    }

    let dist = make_distribution(first.k as usize, first.c, first.delta)?;
    let pooled: Vec<EncodedSymbol> = fragments
        .iter()
        .flat_map(|fr| fr.symbols.iter().cloned())
        .collect();
    let report = decode(
        &pooled,
        first.k as usize,
        first.symbol_size as usize,
        &dist,
    )?;
    Ok(match report.outcome {
        DecodeOutcome::Decoded => {
            let key = report
                .recovered
                .clone()
                .expect("decoded report carries the recovered bytes");
            CombineOutcome::Decoded { key, report }
        }
        DecodeOutcome::Undecodable => CombineOutcome::Undecodable { report },
    })
}

/// Aggregate of `simulate_decodability`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimulationReport {
    pub trials: u64,
    pub successes: u64,
}

impl SimulationReport {
    pub fn ratio(&self) -> f64 {
        self.successes as f64 / self.trials as f64
    }
}

/// Runs `trials` split/combine experiments with fresh random keys and
/// random member subsets of `subset_size`, returning the decoded count.
///
/// Trial `t` seeds its generator with `base_seed + t`, so results are
/// reproducible and independent of scheduling; trials run in parallel.
pub fn simulate_decodability(
    plan: &ThresholdPlan,
    subset_size: u32,
    trials: u64,
    base_seed: u64,
) -> Result<SimulationReport, ThresholdError> {
    if trials < 1 {
        return Err(ThresholdError::InvalidParameter(
            "trials must be at least 1".into(),
        ));
    }
    if subset_size > plan.n {
        return Err(ThresholdError::InvalidParameter(format!(
            "subset size {subset_size} exceeds group size {}",
            plan.n
        )));
    }
    let dist = make_distribution(plan.k as usize, plan.c, plan.delta)?;
    let key_len = plan.max_key_len().max(1);

    let successes = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(base_seed.wrapping_add(t));
            let mut key = vec![0u8; key_len];
            rng.fill_bytes(&mut key);
            let key_id = KeyId::from_rng(&mut rng);
            let block = block_for(&key, plan).expect("simulated key matches plan");
            let members = rand::seq::index::sample(&mut rng, plan.n as usize, subset_size as usize);
            let fragments: Vec<Fragment> = members
                .iter()
                .map(|m| {
                    member_fragment(&block, &dist, plan, key_id, m as u32)
                        .expect("simulated fragment encodes")
                })
                .collect();
            match combine_fragments(&fragments) {
                Ok(CombineOutcome::Decoded { key: recovered, .. }) => {
                    assert_eq!(recovered, key, "decoded key must match the original");
                    1u64
                }
                Ok(CombineOutcome::Undecodable { .. }) => 0,
                Err(e) => panic!("simulation combine cannot fail structurally: {e}"),
            }
        })
        .sum();

    Ok(SimulationReport { trials, successes })
}

/// Measures raw decode probability at a given symbol overhead, outside
/// any threshold plan: each trial encodes a fresh random key of
/// `key_len` bytes into `ceil(overhead * k)` symbols and decodes them.
///
/// Trial `t` uses seeds `t*m .. (t+1)*m` (the consecutive-range layout
/// fragments use) and draws its payload from a generator seeded with
/// `base_seed + t`, so runs are reproducible.
pub fn simulate_overhead(
    key_len: usize,
    symbol_size: u32,
    c: f64,
    delta: f64,
    overhead: &Overhead,
    trials: u64,
    base_seed: u64,
) -> Result<SimulationReport, ThresholdError> {
    if key_len < 1 {
        return Err(ThresholdError::InvalidParameter(
            "key length must be at least 1 byte".into(),
        ));
    }
    if symbol_size < 1 {
        return Err(ThresholdError::InvalidParameter(
            "symbol size must be at least 1 byte".into(),
        ));
    }
    if trials < 1 {
        return Err(ThresholdError::InvalidParameter(
            "trials must be at least 1".into(),
        ));
    }
    let k = (key_len + crate::fountain::LENGTH_PREFIX).div_ceil(symbol_size as usize);
    let m = overhead.ceil_mul(k as u64);
    if m < 1 {
        return Err(ThresholdError::InvalidParameter(format!(
            "overhead {overhead} yields zero symbols"
        )));
    }
    trials.checked_mul(m).ok_or_else(|| {
        ThresholdError::InvalidParameter("trials * symbols overflows the seed space".into())
    })?;
    let dist = make_distribution(k, c, delta)?;

    let successes = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(base_seed.wrapping_add(t));
            let mut key = vec![0u8; key_len];
            rng.fill_bytes(&mut key);
            let block = InputBlock::new(&key, symbol_size as usize)
                .expect("validated parameters");
            let symbols =
                encode_stream(&block, &dist, t * m, m).expect("seed range checked");
            let report = decode(&symbols, k, symbol_size as usize, &dist)
                .expect("coherent symbols");
            match report.outcome {
                DecodeOutcome::Decoded => {
                    assert_eq!(
                        report.recovered.as_deref(),
                        Some(key.as_slice()),
                        "decoded key must match the original"
                    );
                    1u64
                }
                DecodeOutcome::Undecodable => 0,
            }
        })
        .sum();

    Ok(SimulationReport { trials, successes })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::RngCore;

    fn opts() -> PlanOptions {
        PlanOptions::default()
    }

    fn overhead(s: &str) -> Overhead {
        Overhead::from_decimal_str(s).unwrap()
    }

    /// 92-byte key at symbol_size 1: k = 100, the smallest k where s = 10
    /// is feasible (9 * ceil(110/10) = 99 = floor(0.99 * 100)).
    fn plan_100() -> ThresholdPlan {
        plan_threshold(20, 10, 92, 1, &opts()).unwrap()
    }

    #[test]
    fn max_threshold_examples() {
        assert_eq!(max_threshold(&overhead("1.1"), &overhead("0.99")).unwrap(), 10);
        assert_eq!(max_threshold(&overhead("2.0"), &overhead("1.0")).unwrap(), 2);
        // 1.05 / 0.06 = 17.5
        assert_eq!(max_threshold(&overhead("1.05"), &overhead("0.99")).unwrap(), 17);
        assert!(max_threshold(&overhead("1.0"), &overhead("1.0")).is_err());
        assert!(max_threshold(&overhead("0.9"), &overhead("1.1")).is_err());
    }

    #[test]
    fn boundary_plan_s10_k1000() {
        let plan = plan_threshold(20, 10, 992, 1, &opts()).unwrap();
        assert_eq!(plan.k(), 1000);
        assert_eq!(plan.f(), 110);
        // 9 * 110 = 990 = floor(0.99 * 1000); 10 * 110 = 1100 = ceil(1.1 * 1000).
        assert_eq!(9 * plan.f() as u64, 990);
        assert_eq!(10 * plan.f() as u64, 1100);
    }

    #[test]
    fn feasibility_boundary_matches_max_threshold() {
        for s in 2..=10u16 {
            assert!(
                plan_threshold(30, s, 992, 1, &opts()).is_ok(),
                "s={s} should be feasible at k=1000"
            );
        }
        let err = plan_threshold(30, 11, 992, 1, &opts()).unwrap_err();
        match err {
            ThresholdError::InfeasibleThreshold { s: 11, cause } => {
                assert_eq!(cause, InfeasibleCause::ExceedsMaxThreshold { max_s: 10 });
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn small_k_rounding_is_distinguished_from_exceeding_max() {
        // 32-byte key, symbol_size 1: k = 40. s = 10 is within the
        // continuous bound but 9 * ceil(44/10) = 45 > floor(0.99*40) = 39.
        let err = plan_threshold(20, 10, 32, 1, &opts()).unwrap_err();
        match err {
            ThresholdError::InfeasibleThreshold { s: 10, cause } => match cause {
                InfeasibleCause::RoundingAtSmallK { k: 40, f: 5, burden: 45, cap: 39 } => {}
                other => panic!("expected rounding cause, got {other:?}"),
            },
            other => panic!("unexpected error {other:?}"),
        }
        // The two causes must read differently.
        let a = InfeasibleCause::ExceedsMaxThreshold { max_s: 10 }.to_string();
        let b = InfeasibleCause::RoundingAtSmallK { k: 40, f: 5, burden: 45, cap: 39 }.to_string();
        assert_ne!(a, b);
        assert!(a.contains("maximum threshold"));
        assert!(b.contains("too small"));
    }

    #[test]
    fn plan_agrees_with_exhaustive_scan() {
        // Oracle: scan f upward, take the first satisfying the decodable
        // bound, then apply both non-decodability checks.
        let o = opts();
        for key_len in [1usize, 9, 32, 92, 347, 992] {
            for s in 2..=12u16 {
                let n = 40;
                let k = (key_len + 8) as u64;
                let need = o.overhead_hi.ceil_mul(k);
                let cap = o.overhead_lo.floor_mul(k).min(k - 1);
                let f_scan = (1..=2 * need)
                    .find(|f| u64::from(s) * f >= need)
                    .unwrap();
                let feasible_scan = u64::from(s - 1) * f_scan <= cap;
                match plan_threshold(n, s, key_len, 1, &o) {
                    Ok(plan) => {
                        assert!(feasible_scan, "scan disagrees at key_len={key_len} s={s}");
                        assert_eq!(plan.f() as u64, f_scan);
                    }
                    Err(ThresholdError::InfeasibleThreshold { .. }) => {
                        assert!(!feasible_scan, "scan disagrees at key_len={key_len} s={s}");
                    }
                    Err(other) => panic!("unexpected error {other:?}"),
                }
            }
        }
    }

    #[test]
    fn plan_rejects_bad_parameters() {
        let o = opts();
        assert!(matches!(
            plan_threshold(5, 1, 92, 1, &o),
            Err(ThresholdError::InvalidParameter(_))
        ));
        assert!(matches!(
            plan_threshold(3, 4, 92, 1, &o),
            Err(ThresholdError::InvalidParameter(_))
        ));
        assert!(matches!(
            plan_threshold(5, 2, 0, 1, &o),
            Err(ThresholdError::InvalidParameter(_))
        ));
        assert!(matches!(
            plan_threshold(5, 2, 92, 0, &o),
            Err(ThresholdError::InvalidParameter(_))
        ));
        let bad_delta = PlanOptions { delta: 1.5, ..opts() };
        assert!(plan_threshold(5, 2, 92, 1, &bad_delta).is_err());
        let bad_c = PlanOptions { c: 0.0, ..opts() };
        assert!(plan_threshold(5, 2, 92, 1, &bad_c).is_err());
        let inverted = PlanOptions {
            overhead_hi: overhead("0.9"),
            overhead_lo: overhead("1.1"),
            ..opts()
        };
        assert!(plan_threshold(5, 2, 92, 1, &inverted).is_err());
    }

    #[test]
    fn split_produces_disjoint_seed_ranges_covering_all() {
        let plan = plan_threshold(6, 2, 20, 4, &opts()).unwrap();
        let key_id = KeyId::new([7; 16]);
        let fragments = split_key(&[9u8; 20], &plan, key_id).unwrap();
        assert_eq!(fragments.len(), 6);
        let mut seeds: Vec<u64> = fragments
            .iter()
            .flat_map(|fr| fr.symbols.iter().map(|sym| sym.seed))
            .collect();
        seeds.sort_unstable();
        let expected: Vec<u64> = (0..6 * plan.f() as u64).collect();
        assert_eq!(seeds, expected);
        for (i, fragment) in fragments.iter().enumerate() {
            assert_eq!(fragment.member_id, i as u32);
            assert_eq!(fragment.key_id, key_id);
            assert_eq!(fragment.symbols.len(), plan.f() as usize);
            fragment.validate().unwrap();
        }
    }

    #[test]
    fn split_rejects_empty_and_mismatched_keys() {
        let plan = plan_100();
        assert!(matches!(
            split_key(&[], &plan, KeyId::new([0; 16])),
            Err(ThresholdError::InvalidKey(_))
        ));
        assert!(matches!(
            split_key(&[1u8; 10], &plan, KeyId::new([0; 16])),
            Err(ThresholdError::InvalidKey(_))
        ));
    }

    #[test]
    fn roundtrip_over_random_subsets() {
        // At k=100 a pool of s*f = 110 symbols decodes with probability
        // well below 1 under the default distribution, so this asserts
        // identity on every success plus a conservative success floor.
        let plan = plan_100();
        let mut rng = ChaCha8Rng::seed_from_u64(1001);
        let mut key = vec![0u8; 92];
        rng.fill_bytes(&mut key);
        let fragments = split_key(&key, &plan, KeyId::from_rng(&mut rng)).unwrap();
        let mut decoded = 0;
        for _ in 0..100 {
            let chosen = rand::seq::index::sample(&mut rng, 20, 10);
            let subset: Vec<Fragment> =
                chosen.iter().map(|i| fragments[i].clone()).collect();
            match combine_fragments(&subset).unwrap() {
                CombineOutcome::Decoded { key: got, .. } => {
                    assert_eq!(got, key);
                    decoded += 1;
                }
                CombineOutcome::Undecodable { report } => {
                    assert!(report.rank < 100);
                }
            }
        }
        assert!(decoded >= 50, "only {decoded}/100 subsets decoded");
    }

    #[test]
    fn all_members_combine_decodes() {
        // n = 20 fragments pool 220 symbols for k = 100; failure needs a
        // rank deficit of 120+, which does not happen.
        let plan = plan_100();
        let mut rng = ChaCha8Rng::seed_from_u64(88);
        for _ in 0..20 {
            let mut key = vec![0u8; 92];
            rng.fill_bytes(&mut key);
            let fragments = split_key(&key, &plan, KeyId::from_rng(&mut rng)).unwrap();
            match combine_fragments(&fragments).unwrap() {
                CombineOutcome::Decoded { key: got, .. } => assert_eq!(got, key),
                CombineOutcome::Undecodable { report } => {
                    panic!("all 20 fragments failed to decode, rank {}", report.rank)
                }
            }
        }
    }

    #[test]
    fn s_minus_one_subsets_never_decode() {
        let plan = plan_100();
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let mut key = vec![0u8; 92];
        rng.fill_bytes(&mut key);
        let fragments = split_key(&key, &plan, KeyId::from_rng(&mut rng)).unwrap();
        for _ in 0..50 {
            let chosen = rand::seq::index::sample(&mut rng, 20, 9);
            let subset: Vec<Fragment> =
                chosen.iter().map(|i| fragments[i].clone()).collect();
            match combine_fragments(&subset).unwrap() {
                CombineOutcome::Undecodable { report } => {
                    // 9 fragments pool 99 symbols; rank cannot reach 100.
                    assert!(report.rank <= 99);
                }
                CombineOutcome::Decoded { .. } => {
                    panic!("s-1 fragments must never decode")
                }
            }
        }
    }

    #[test]
    fn combine_rejects_mixed_key_ids() {
        let plan = plan_threshold(4, 2, 12, 2, &opts()).unwrap();
        let a = split_key(&[1u8; 12], &plan, KeyId::new([1; 16])).unwrap();
        let b = split_key(&[1u8; 12], &plan, KeyId::new([2; 16])).unwrap();
        let mixed = vec![a[0].clone(), b[1].clone()];
        assert!(matches!(
            combine_fragments(&mixed),
            Err(ThresholdError::MixedKeyId { .. })
        ));
    }

    #[test]
    fn combine_rejects_duplicate_members() {
        let plan = plan_threshold(4, 2, 12, 2, &opts()).unwrap();
        let fragments = split_key(&[1u8; 12], &plan, KeyId::new([1; 16])).unwrap();
        let doubled = vec![fragments[2].clone(), fragments[2].clone()];
        assert!(matches!(
            combine_fragments(&doubled),
            Err(ThresholdError::DuplicateMember(2))
        ));
    }

    #[test]
    fn combine_rejects_malformed_fragments() {
        let plan = plan_threshold(4, 2, 12, 2, &opts()).unwrap();
        let fragments = split_key(&[1u8; 12], &plan, KeyId::new([1; 16])).unwrap();

        let mut short = fragments.clone();
        short[0].symbols.pop();
        assert!(matches!(
            combine_fragments(&short),
            Err(ThresholdError::MalformedFragment(_))
        ));

        let mut alien_seed = fragments.clone();
        alien_seed[1].symbols[0].seed = 10_000;
        assert!(matches!(
            combine_fragments(&alien_seed),
            Err(ThresholdError::MalformedFragment(_))
        ));

        let mut bad_payload = fragments.clone();
        bad_payload[1].symbols[0].payload.push(0);
        assert!(matches!(
            combine_fragments(&bad_payload),
            Err(ThresholdError::MalformedFragment(_))
        ));

        let mut other_plan = fragments;
        other_plan[1].delta = 0.25;
        assert!(matches!(
            combine_fragments(&other_plan),
            Err(ThresholdError::MalformedFragment(_))
        ));

        assert!(matches!(
            combine_fragments(&[]),
            Err(ThresholdError::MalformedFragment(_))
        ));
    }

    #[test]
    fn combine_is_subset_symmetric() {
        let plan = plan_100();
        let mut rng = ChaCha8Rng::seed_from_u64(5150);
        let mut key = vec![0u8; 92];
        rng.fill_bytes(&mut key);
        let fragments = split_key(&key, &plan, KeyId::from_rng(&mut rng)).unwrap();
        let order_a: Vec<Fragment> =
            [3usize, 1, 7, 12, 9, 0, 15, 4, 19, 6].iter().map(|&i| fragments[i].clone()).collect();
        let order_b: Vec<Fragment> =
            [6usize, 19, 4, 15, 0, 9, 12, 7, 1, 3].iter().map(|&i| fragments[i].clone()).collect();
        let a = combine_fragments(&order_a).unwrap();
        let b = combine_fragments(&order_b).unwrap();
        assert_eq!(a.key(), b.key());
        assert_eq!(a.report().rank, b.report().rank);
    }

    #[test]
    fn simulate_is_deterministic_and_zero_below_threshold() {
        let plan = plan_100();
        let below = simulate_decodability(&plan, 9, 60, 42).unwrap();
        assert_eq!(below.successes, 0, "s-1 subsets must never decode");
        let again = simulate_decodability(&plan, 9, 60, 42).unwrap();
        assert_eq!(below, again);

        let at = simulate_decodability(&plan, 10, 60, 42).unwrap();
        let rerun = simulate_decodability(&plan, 10, 60, 42).unwrap();
        assert_eq!(at, rerun);
        assert!(at.ratio() >= 0.0 && at.ratio() <= 1.0);
    }

    #[test]
    fn simulate_success_is_monotone_in_subset_size() {
        let plan = plan_100();
        let trials = 120u64;
        let sizes = [9u32, 10, 12, 16, 20];
        let ratios: Vec<f64> = sizes
            .iter()
            .map(|&m| simulate_decodability(&plan, m, trials, 7).unwrap().ratio())
            .collect();
        // 3-sigma binomial band at worst-case variance.
        let band = 3.0 * (0.25f64 / trials as f64).sqrt();
        for pair in ratios.windows(2) {
            assert!(
                pair[1] >= pair[0] - band,
                "ratio dropped outside the band: {ratios:?}"
            );
        }
        assert_eq!(ratios[0], 0.0);
        assert!(ratios[4] >= 0.99, "all 20 members should nearly always decode");
    }

    #[test]
    fn simulate_validates_inputs() {
        let plan = plan_100();
        assert!(simulate_decodability(&plan, 21, 10, 0).is_err());
        assert!(simulate_decodability(&plan, 10, 0, 0).is_err());
    }

    #[test]
    fn simulate_overhead_is_deterministic_and_bounded() {
        let o = overhead("1.2");
        let a = simulate_overhead(92, 1, DEFAULT_C, DEFAULT_DELTA, &o, 40, 3).unwrap();
        let b = simulate_overhead(92, 1, DEFAULT_C, DEFAULT_DELTA, &o, 40, 3).unwrap();
        assert_eq!(a, b);
        assert!(a.ratio() >= 0.0 && a.ratio() <= 1.0);
    }

    #[test]
    fn simulate_overhead_below_one_never_decodes() {
        // ceil(0.5 * 100) = 50 symbols cannot reach rank 100.
        let o = overhead("0.5");
        let report = simulate_overhead(92, 1, DEFAULT_C, DEFAULT_DELTA, &o, 50, 9).unwrap();
        assert_eq!(report.successes, 0);
    }

    #[test]
    fn simulate_overhead_grows_with_overhead() {
        let trials = 100u64;
        let low = simulate_overhead(92, 1, DEFAULT_C, DEFAULT_DELTA, &overhead("1.0"), trials, 21)
            .unwrap()
            .ratio();
        let high = simulate_overhead(92, 1, DEFAULT_C, DEFAULT_DELTA, &overhead("1.3"), trials, 21)
            .unwrap()
            .ratio();
        let band = 3.0 * (0.25f64 / trials as f64).sqrt();
        assert!(high >= low - band, "low={low} high={high}");
    }

    #[test]
    fn simulate_overhead_validates_inputs() {
        let o = overhead("1.1");
        assert!(simulate_overhead(0, 1, DEFAULT_C, DEFAULT_DELTA, &o, 1, 0).is_err());
        assert!(simulate_overhead(92, 0, DEFAULT_C, DEFAULT_DELTA, &o, 1, 0).is_err());
        assert!(simulate_overhead(92, 1, DEFAULT_C, DEFAULT_DELTA, &o, 0, 0).is_err());
    }

    #[test]
    fn key_id_hex_roundtrip() {
        let id = KeyId::new(*b"0123456789abcdef");
        let text = id.to_string();
        assert_eq!(text.len(), 32);
        assert_eq!(KeyId::from_hex(&text).unwrap(), id);
        assert!(KeyId::from_hex("abcd").is_err());
        assert!(KeyId::from_hex("zz").is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn prop_split_covers_and_s_minus_one_never_decodes(
            key_len in 1usize..120,
            symbol_size in 1u32..6,
            n in 3u32..8,
            seed in any::<u64>(),
        ) {
            let s = 3u16;
            prop_assume!(u64::from(s) <= u64::from(n));
            let Ok(plan) = plan_threshold(n, s, key_len, symbol_size, &opts()) else {
                // Rounding infeasibility at tiny k is legitimate.
                return Ok(());
            };
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut key = vec![0u8; key_len];
            rng.fill_bytes(&mut key);
            let fragments = split_key(&key, &plan, KeyId::from_rng(&mut rng)).unwrap();

            let mut seeds: Vec<u64> = fragments
                .iter()
                .flat_map(|fr| fr.symbols.iter().map(|sym| sym.seed))
                .collect();
            seeds.sort_unstable();
            prop_assert_eq!(seeds, (0..u64::from(n) * u64::from(plan.f())).collect::<Vec<_>>());

            let chosen = rand::seq::index::sample(&mut rng, n as usize, (s - 1) as usize);
            let subset: Vec<Fragment> = chosen.iter().map(|i| fragments[i].clone()).collect();
            match combine_fragments(&subset).unwrap() {
                CombineOutcome::Undecodable { .. } => {}
                CombineOutcome::Decoded { .. } => prop_assert!(false, "s-1 decoded"),
            }

            if let CombineOutcome::Decoded { key: got, .. } = combine_fragments(&fragments).unwrap() {
                prop_assert_eq!(got, key);
            }
        }
    }
}
