//! Text file formats for the commitment scheme, all UTF-8 with LF ends.
//!
//! ```text
//! commitment  PSC1 U=<U>        then U lines   <index> <i hex> <l>
//! reveal      PSR1 U=<U>        then <=U lines <index> <j hex> <k hex>
//! receipt     RCPT1 <N hex> <e decimal> <signature hex>
//! key file    RCPTK1 <N hex> <e decimal> <d hex>
//! ```
//!
//! Integers are lowercase hex without leading zeros (zero is `0`), as
//! `BigUint` renders them. A commitment file must cover every index of
//! the universe exactly once; a reveal file may cover any subset, so a
//! winner can prove only the chosen indices.

use std::collections::BTreeSet;

use num_bigint::BigUint;
use num_traits::{Num, Zero};

use super::receipt::ReceiptKeyPair;
use super::{Commitment, CommitmentError, RevealKey};

fn malformed(reason: impl Into<String>) -> CommitmentError {
    CommitmentError::Malformed(reason.into())
}

fn parse_hex(token: &str, what: &str) -> Result<BigUint, CommitmentError> {
    if token.is_empty() || token.starts_with('+') {
        return Err(malformed(format!("bad {what} hex {token:?}")));
    }
    if token != "0" && token.starts_with('0') {
        return Err(malformed(format!("{what} has leading zeros: {token:?}")));
    }
    if token.chars().any(|ch| ch.is_ascii_uppercase()) {
        return Err(malformed(format!("{what} must be lowercase hex: {token:?}")));
    }
    BigUint::from_str_radix(token, 16).map_err(|_| malformed(format!("bad {what} hex {token:?}")))
}

fn parse_u64(token: &str, what: &str) -> Result<u64, CommitmentError> {
    if token != "0" && token.starts_with('0') {
        return Err(malformed(format!("{what} has leading zeros: {token:?}")));
    }
    token
        .parse::<u64>()
        .map_err(|_| malformed(format!("bad {what} {token:?}")))
}

fn parse_header(line: Option<&str>, magic: &str) -> Result<u64, CommitmentError> {
    let line = line.ok_or_else(|| malformed("empty file"))?;
    let rest = line
        .strip_prefix(magic)
        .and_then(|r| r.strip_prefix(" U="))
        .ok_or_else(|| malformed(format!("header must be `{magic} U=<universe>`")))?;
    let universe = parse_u64(rest, "universe size")?;
    if universe < 1 {
        return Err(malformed("universe size must be at least 1"));
    }
    Ok(universe)
}

/// Splits a body line into exactly `expected` whitespace-free tokens.
fn tokens(line: &str, expected: usize) -> Result<Vec<&str>, CommitmentError> {
    let parts: Vec<&str> = line.split(' ').collect();
    if parts.len() != expected || parts.iter().any(|t| t.is_empty()) {
        return Err(malformed(format!(
            "expected {expected} space-separated fields, got {line:?}"
        )));
    }
    Ok(parts)
}

pub fn encode_commitments(universe_size: u64, commitments: &[Commitment]) -> String {
    let mut out = format!("PSC1 U={universe_size}\n");
    for c in commitments {
        out.push_str(&format!("{} {} {}\n", c.index, c.i.to_str_radix(16), c.l));
    }
    out
}

/// Parses a commitment file, requiring full coverage of `1..=U`.
pub fn decode_commitments(text: &str) -> Result<(u64, Vec<Commitment>), CommitmentError> {
    let mut lines = text.lines();
    let universe = parse_header(lines.next(), "PSC1")?;
    let mut commitments = Vec::new();
    let mut seen = BTreeSet::new();
    for line in lines {
        let parts = tokens(line, 3)?;
        let index = parse_u64(parts[0], "index")?;
        if index < 1 || index > universe {
            return Err(malformed(format!("index {index} outside 1..={universe}")));
        }
        if !seen.insert(index) {
            return Err(malformed(format!("index {index} appears twice")));
        }
        let i = parse_hex(parts[1], "modulus")?;
        if i.is_zero() {
            return Err(malformed(format!("zero modulus at index {index}")));
        }
        let l: u8 = parts[2]
            .parse()
            .ok()
            .filter(|l| *l <= 9 && parts[2].len() == 1)
            .ok_or_else(|| malformed(format!("tag must be a digit 0..9, got {:?}", parts[2])))?;
        commitments.push(Commitment { index, i, l });
    }
    if seen.len() as u64 != universe {
        return Err(malformed(format!(
            "commitment file covers {} of {universe} indices",
            seen.len()
        )));
    }
    Ok((universe, commitments))
}

pub fn encode_reveals(universe_size: u64, reveals: &[RevealKey]) -> String {
    let mut out = format!("PSR1 U={universe_size}\n");
    for r in reveals {
        out.push_str(&format!(
            "{} {} {}\n",
            r.index,
            r.j.to_str_radix(16),
            r.k_prime.to_str_radix(16)
        ));
    }
    out
}

/// Parses a reveal file. Any subset of `1..=U` may be present.
pub fn decode_reveals(text: &str) -> Result<(u64, Vec<RevealKey>), CommitmentError> {
    let mut lines = text.lines();
    let universe = parse_header(lines.next(), "PSR1")?;
    let mut reveals = Vec::new();
    let mut seen = BTreeSet::new();
    for line in lines {
        let parts = tokens(line, 3)?;
        let index = parse_u64(parts[0], "index")?;
        if index < 1 || index > universe {
            return Err(malformed(format!("index {index} outside 1..={universe}")));
        }
        if !seen.insert(index) {
            return Err(malformed(format!("index {index} revealed twice")));
        }
        let j = parse_hex(parts[1], "factor j")?;
        let k_prime = parse_hex(parts[2], "factor k")?;
        reveals.push(RevealKey { index, j, k_prime });
    }
    Ok((universe, reveals))
}

pub fn encode_receipt(n: &BigUint, e: &BigUint, signature: &BigUint) -> String {
    format!(
        "RCPT1 {} {} {}\n",
        n.to_str_radix(16),
        e,
        signature.to_str_radix(16)
    )
}

/// Parses a receipt into (modulus, public exponent, signature).
pub fn decode_receipt(text: &str) -> Result<(BigUint, BigUint, BigUint), CommitmentError> {
    let line = single_line(text)?;
    let parts = tokens(line, 4)?;
    if parts[0] != "RCPT1" {
        return Err(malformed("receipt must start with RCPT1"));
    }
    let n = parse_hex(parts[1], "modulus")?;
    let e = BigUint::from(parse_u64(parts[2], "public exponent")?);
    let signature = parse_hex(parts[3], "signature")?;
    Ok((n, e, signature))
}

pub fn encode_keypair(keypair: &ReceiptKeyPair) -> String {
    format!(
        "RCPTK1 {} {} {}\n",
        keypair.n.to_str_radix(16),
        keypair.e,
        keypair.d.to_str_radix(16)
    )
}

pub fn decode_keypair(text: &str) -> Result<ReceiptKeyPair, CommitmentError> {
    let line = single_line(text)?;
    let parts = tokens(line, 4)?;
    if parts[0] != "RCPTK1" {
        return Err(malformed("key file must start with RCPTK1"));
    }
    Ok(ReceiptKeyPair {
        n: parse_hex(parts[1], "modulus")?,
        e: BigUint::from(parse_u64(parts[2], "public exponent")?),
        d: parse_hex(parts[3], "private exponent")?,
    })
}

fn single_line(text: &str) -> Result<&str, CommitmentError> {
    let mut lines = text.lines();
    let line = lines.next().ok_or_else(|| malformed("empty file"))?;
    if lines.next().is_some() {
        return Err(malformed("expected a single line"));
    }
    Ok(line)
}
