//! RCF1, the binary wire format for a single fragment.
//!
//! Layout, all integers big-endian:
//!
//! ```text
//! magic "RCF1" | version u8 | key_id 16B | k u32 | symbol_size u32
//! | n u32 | s u16 | f u32 | member_id u32 | c f64 | delta f64
//! | f repetitions of (seed u64 | payload symbol_size bytes)
//! ```
//!
//! The header is self-describing: decoding needs no plan or config. Files
//! must contain exactly the declared number of symbols and nothing after.

use crate::fountain::EncodedSymbol;
use crate::threshold::{Fragment, KeyId, ThresholdError};

pub const MAGIC: [u8; 4] = *b"RCF1";
pub const VERSION: u8 = 1;

const HEADER_LEN: usize = 4 + 1 + 16 + 4 + 4 + 4 + 2 + 4 + 4 + 8 + 8;
const SEED_LEN: usize = 8;

/// Serializes a fragment. Fragments from `split_key` always round-trip;
/// hand-built inconsistent ones are caught by `decode_fragment`.
pub fn encode_fragment(fragment: &Fragment) -> Vec<u8> {
    let body = fragment
        .symbols
        .iter()
        .map(|sym| SEED_LEN + sym.payload.len())
        .sum::<usize>();
    let mut out = Vec::with_capacity(HEADER_LEN + body);
    out.extend_from_slice(&MAGIC);
    out.push(VERSION);
    out.extend_from_slice(fragment.key_id.as_bytes());
    out.extend_from_slice(&fragment.k.to_be_bytes());
    out.extend_from_slice(&fragment.symbol_size.to_be_bytes());
    out.extend_from_slice(&fragment.n.to_be_bytes());
    out.extend_from_slice(&fragment.s.to_be_bytes());
    out.extend_from_slice(&fragment.f.to_be_bytes());
    out.extend_from_slice(&fragment.member_id.to_be_bytes());
    out.extend_from_slice(&fragment.c.to_be_bytes());
    out.extend_from_slice(&fragment.delta.to_be_bytes());
    for sym in &fragment.symbols {
        out.extend_from_slice(&sym.seed.to_be_bytes());
        out.extend_from_slice(&sym.payload);
    }
    out
}

/// Parses and validates one RCF1 fragment.
///
/// The total length is checked against the declared `f` and `symbol_size`
/// before any symbol is materialized, so hostile headers cannot force a
/// large allocation.
pub fn decode_fragment(data: &[u8]) -> Result<Fragment, ThresholdError> {
    if data.len() < HEADER_LEN {
        return Err(malformed(format!(
            "truncated header: {} bytes, need {HEADER_LEN}",
            data.len()
        )));
    }
    let mut cursor = Cursor { data, pos: 0 };
    if cursor.take(4) != MAGIC {
        return Err(malformed("bad magic, expected RCF1".into()));
    }
    let version = cursor.take(1)[0];
    if version != VERSION {
        return Err(malformed(format!("unsupported version {version}")));
    }
    let mut key_id = [0u8; 16];
    key_id.copy_from_slice(cursor.take(16));
    let k = cursor.u32();
    let symbol_size = cursor.u32();
    let n = cursor.u32();
    let s = cursor.u16();
    let f = cursor.u32();
    let member_id = cursor.u32();
    let c = f64::from_bits(cursor.u64());
    let delta = f64::from_bits(cursor.u64());

    let per_symbol = SEED_LEN as u64 + u64::from(symbol_size);
    let body = u64::from(f) * per_symbol;
    let declared = HEADER_LEN as u64 + body;
    if data.len() as u64 != declared {
        return Err(malformed(format!(
            "length mismatch: {} bytes, header declares {declared}",
            data.len()
        )));
    }

    let mut symbols = Vec::with_capacity(f as usize);
    for _ in 0..f {
        let seed = cursor.u64();
        let payload = cursor.take(symbol_size as usize).to_vec();
        symbols.push(EncodedSymbol { seed, payload });
    }

    let fragment = Fragment {
        key_id: KeyId::new(key_id),
        member_id,
        k,
        symbol_size,
        n,
        s,
        f,
        c,
        delta,
        symbols,
    };
    fragment.validate()?;
    Ok(fragment)
}

fn malformed(reason: String) -> ThresholdError {
    ThresholdError::MalformedFragment(reason)
}

/// Length checks happen before any take, so the slicing never panics.
struct Cursor<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, len: usize) -> &'a [u8] {
        let slice = &self.data[self.pos..self.pos + len];
        self.pos += len;
        slice
    }

    fn u16(&mut self) -> u16 {
        u16::from_be_bytes(self.take(2).try_into().unwrap())
    }

    fn u32(&mut self) -> u32 {
        u32::from_be_bytes(self.take(4).try_into().unwrap())
    }

    fn u64(&mut self) -> u64 {
        u64::from_be_bytes(self.take(8).try_into().unwrap())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::threshold::{plan_threshold, split_key, PlanOptions};
    use rand::{RngCore, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn hand_fragment() -> Fragment {
        Fragment {
            key_id: KeyId::new([
                0x00, 0x01, 0x02, 0x03, 0x04, 0x05, 0x06, 0x07, 0x08, 0x09, 0x0a, 0x0b,
                0x0c, 0x0d, 0x0e, 0x0f,
            ]),
            member_id: 1,
            k: 3,
            symbol_size: 4,
            n: 2,
            s: 2,
            f: 2,
            c: 0.03,
            delta: 0.5,
            symbols: vec![
                EncodedSymbol { seed: 2, payload: vec![0xaa, 0xbb, 0xcc, 0xdd] },
                EncodedSymbol { seed: 3, payload: vec![0x01, 0x02, 0x03, 0x04] },
            ],
        }
    }

    /// Byte-for-byte freeze of the format. If this breaks, existing
    /// fragment files stop decoding.
    #[test]
    fn golden_encoding() {
        let expected: Vec<u8> = [
            &b"RCF1"[..],
            &[0x01],
            &[0x00, 0x01, 0x02, 0x03, 0x04, 0x05, 0x06, 0x07, 0x08, 0x09, 0x0a, 0x0b,
              0x0c, 0x0d, 0x0e, 0x0f],
            &[0x00, 0x00, 0x00, 0x03],
            &[0x00, 0x00, 0x00, 0x04],
            &[0x00, 0x00, 0x00, 0x02],
            &[0x00, 0x02],
            &[0x00, 0x00, 0x00, 0x02],
            &[0x00, 0x00, 0x00, 0x01],
            &[0x3f, 0x9e, 0xb8, 0x51, 0xeb, 0x85, 0x1e, 0xb8],
            &[0x3f, 0xe0, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00],
            &[0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x02],
            &[0xaa, 0xbb, 0xcc, 0xdd],
            &[0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x03],
            &[0x01, 0x02, 0x03, 0x04],
        ]
        .concat();
        assert_eq!(expected.len(), 83);
        let encoded = encode_fragment(&hand_fragment());
        assert_eq!(encoded, expected);
        assert_eq!(decode_fragment(&expected).unwrap(), hand_fragment());
    }

    #[test]
    fn roundtrip_through_split() {
        let plan = plan_threshold(5, 3, 40, 4, &PlanOptions::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut key = vec![0u8; 40];
        rng.fill_bytes(&mut key);
        let fragments = split_key(&key, &plan, KeyId::from_rng(&mut rng)).unwrap();
        for fragment in &fragments {
            let bytes = encode_fragment(fragment);
            let back = decode_fragment(&bytes).unwrap();
            assert_eq!(&back, fragment);
        }
    }

    #[test]
    fn rejects_every_truncation() {
        let bytes = encode_fragment(&hand_fragment());
        for len in 0..bytes.len() {
            assert!(
                decode_fragment(&bytes[..len]).is_err(),
                "truncation to {len} bytes was accepted"
            );
        }
    }

    #[test]
    fn rejects_trailing_bytes() {
        let mut bytes = encode_fragment(&hand_fragment());
        bytes.push(0);
        assert!(decode_fragment(&bytes).is_err());
    }

    #[test]
    fn rejects_bad_magic_and_version() {
        let good = encode_fragment(&hand_fragment());
        let mut bad_magic = good.clone();
        bad_magic[0] = b'X';
        assert!(decode_fragment(&bad_magic).is_err());
        let mut bad_version = good;
        bad_version[4] = 2;
        assert!(decode_fragment(&bad_version).is_err());
    }

    #[test]
    fn rejects_hostile_symbol_count_without_allocating() {
        // Header claims four billion symbols; the length check fires first.
        let mut bytes = encode_fragment(&hand_fragment());
        bytes[35..39].copy_from_slice(&u32::MAX.to_be_bytes());
        let err = decode_fragment(&bytes).unwrap_err();
        assert!(err.to_string().contains("length mismatch"), "{err}");
    }

    #[test]
    fn rejects_tampered_seed() {
        // Consistent lengths but a seed outside the member's range.
        let mut fragment = hand_fragment();
        fragment.symbols[0].seed = 99;
        let bytes = encode_fragment(&fragment);
        assert!(decode_fragment(&bytes).is_err());
    }

    #[test]
    fn field_offsets_are_big_endian() {
        let bytes = encode_fragment(&hand_fragment());
        // s = 2 sits at offset 33 as 0x00 0x02, high byte first.
        assert_eq!(&bytes[33..35], &[0x00, 0x02]);
        // k = 3 at offset 21.
        assert_eq!(&bytes[21..25], &[0x00, 0x00, 0x00, 0x03]);
    }
}
