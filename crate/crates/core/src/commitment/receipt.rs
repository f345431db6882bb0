//! Textbook RSA receipts over commitment files.
//!
//! The receiving party signs SHA-256 of the submitted file with its
//! private exponent; anyone holding the public half can check what was
//! submitted. Demonstration-grade on purpose: no padding scheme, so do
//! not reuse these keys for anything else.

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::One;
use rand::RngCore;
use sha2::{Digest, Sha256};

use super::{gen_prime, CommitmentError};

/// Fixed public exponent, the usual Fermat prime.
pub const PUBLIC_EXPONENT: u32 = 65537;
pub const DEFAULT_MODULUS_BITS: u32 = 2048;
pub const MIN_MODULUS_BITS: u32 = 512;

/// RSA keypair for receipts. `n` and `e` are the public half; treat `d`
/// like the key file it is written to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReceiptKeyPair {
    pub n: BigUint,
    pub e: BigUint,
    pub d: BigUint,
}

/// Generates a keypair whose modulus is exactly `modulus_bits` long.
///
/// Draws prime halves until the product has the requested bit length and
/// `e` is invertible mod `lcm(p-1, q-1)`; both retries are rare.
pub fn receipt_keygen(
    modulus_bits: u32,
    rng: &mut impl RngCore,
) -> Result<ReceiptKeyPair, CommitmentError> {
    if modulus_bits < MIN_MODULUS_BITS {
        return Err(CommitmentError::InvalidParameter(format!(
            "receipt modulus must be at least {MIN_MODULUS_BITS} bits, got {modulus_bits}"
        )));
    }
    let e = BigUint::from(PUBLIC_EXPONENT);
    loop {
        let p = gen_prime(modulus_bits.div_ceil(2), rng);
        let q = gen_prime(modulus_bits / 2, rng);
        if p == q {
            continue;
        }
        let n = &p * &q;
        if n.bits() != u64::from(modulus_bits) {
            continue;
        }
        let lambda = (&p - 1u32).lcm(&(&q - 1u32));
        let Some(d) = modular_inverse(&e, &lambda) else {
            continue;
        };
        return Ok(ReceiptKeyPair { n, e, d });
    }
}

/// Inverse of `a` mod `m` via the extended Euclid identity, or None when
/// gcd(a, m) != 1.
fn modular_inverse(a: &BigUint, m: &BigUint) -> Option<BigUint> {
    let a = BigInt::from(a.clone());
    let m = BigInt::from(m.clone());
    let ext = a.extended_gcd(&m);
    if !ext.gcd.is_one() {
        return None;
    }
    let inverse = ext.x.mod_floor(&m);
    Some(inverse.to_biguint().expect("mod_floor of positive modulus"))
}

fn file_digest(file_bytes: &[u8]) -> BigUint {
    BigUint::from_bytes_be(&Sha256::digest(file_bytes))
}

/// Signature = SHA-256(file)^d mod n. Deterministic.
pub fn receipt_sign(file_bytes: &[u8], keypair: &ReceiptKeyPair) -> BigUint {
    file_digest(file_bytes).modpow(&keypair.d, &keypair.n)
}

/// True iff `signature^e mod n` equals SHA-256 of the file.
pub fn receipt_verify(file_bytes: &[u8], signature: &BigUint, n: &BigUint, e: &BigUint) -> bool {
    signature.modpow(e, n) == file_digest(file_bytes)
}
