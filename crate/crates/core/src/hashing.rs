//! SHA-256 helpers shared by prompt hashing, the crawler, and the stub
//! providers. The standard library hasher is randomized per process, so
//! anything that must be stable across runs goes through these instead.

use sha2::{Digest, Sha256};

/// Hex digest of `input`.
pub fn sha256_hex(input: &str) -> String {
    hex::encode(Sha256::digest(input.as_bytes()))
}

/// 32-byte digest over the concatenated parts, usable as an RNG seed.
pub fn seed_bytes(parts: &[&[u8]]) -> [u8; 32] {
    let mut h = Sha256::new();
    for p in parts {
        h.update(p);
    }
    h.finalize().into()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sha256_known_vector() {
        assert_eq!(
            sha256_hex("abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn seed_is_order_sensitive() {
        assert_ne!(seed_bytes(&[b"a", b"b"]), seed_bytes(&[b"b", b"a"]));
        assert_eq!(seed_bytes(&[b"a", b"b"]), seed_bytes(&[b"a", b"b"]));
    }
}
