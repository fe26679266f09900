//! Content hashing and canonical JSON.

use serde::Serialize;
use sha2::{Digest, Sha256};

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// JSON with object keys sorted at every level and no insignificant
/// whitespace. Numbers keep serde_json's shortest round-trip form, so two
/// values serialize to the same string exactly when they are equal.
pub fn canonical_json<T: Serialize + ?Sized>(value: &T) -> String {
    // `Value` objects are BTreeMaps (no preserve_order feature), hence sorted
    let v = serde_json::to_value(value).expect("serializable value");
    serde_json::to_string(&v).expect("serializable value")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_digest() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn keys_sorted() {
        #[derive(Serialize)]
        struct S {
            b: u8,
            a: (f64, Option<u8>),
        }
        assert_eq!(canonical_json(&S { b: 1, a: (0.1, None) }), r#"{"a":[0.1,null],"b":1}"#);
    }
}
