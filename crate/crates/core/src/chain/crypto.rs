//! SHA3-256 digests, Base58 text encoding and ED25519 keys/signatures.
//!
//! Keys and signatures travel as Base58 (Bitcoin alphabet) text; digests as
//! lowercase hex.

use ed25519_dalek::{Signature, Signer, SigningKey, Verifier, VerifyingKey};
use rand::rngs::OsRng;
use sha3::{Digest, Sha3_256};

pub const SEED_LEN: usize = ed25519_dalek::SECRET_KEY_LENGTH;
pub const PUBLIC_KEY_LEN: usize = ed25519_dalek::PUBLIC_KEY_LENGTH;
pub const SIGNATURE_LEN: usize = ed25519_dalek::SIGNATURE_LENGTH;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CryptoError {
    #[error("seed must be {SEED_LEN} bytes, got {0}")]
    InvalidSeed(usize),
    #[error("invalid base58 text: {0}")]
    Base58(String),
    #[error("{what} must decode to {expected} bytes, got {actual}")]
    KeyLength {
        what: &'static str,
        expected: usize,
        actual: usize,
    },
    #[error("public key is not a valid curve point")]
    InvalidPublicKey,
}

/// Raw SHA3-256 digest.
pub fn sha3_256_raw(bytes: &[u8]) -> [u8; 32] {
    Sha3_256::digest(bytes).into()
}

/// SHA3-256 as 64 lowercase hex characters.
pub fn sha3_256(bytes: &[u8]) -> String {
    hex_lower(&sha3_256_raw(bytes))
}

pub(crate) fn hex_lower(bytes: &[u8]) -> String {
    const HEX: &[u8; 16] = b"0123456789abcdef";
    let mut s = String::with_capacity(bytes.len() * 2);
    for b in bytes {
        s.push(HEX[(b >> 4) as usize] as char);
        s.push(HEX[(b & 0x0f) as usize] as char);
    }
    s
}

pub fn base58_encode(bytes: &[u8]) -> String {
    bs58::encode(bytes).into_string()
}

pub fn base58_decode(text: &str) -> Result<Vec<u8>, CryptoError> {
    bs58::decode(text)
        .into_vec()
        .map_err(|e| CryptoError::Base58(e.to_string()))
}

fn decode_fixed<const N: usize>(text: &str, what: &'static str) -> Result<[u8; N], CryptoError> {
    let bytes = base58_decode(text)?;
    <[u8; N]>::try_from(bytes.as_slice()).map_err(|_| CryptoError::KeyLength {
        what,
        expected: N,
        actual: bytes.len(),
    })
}

/// A Base58-encoded ED25519 keypair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeyPair {
    pub private_key: String,
    pub public_key: String,
}

/// Generates a keypair. With `Some(seed)` the result is deterministic.
pub fn generate_keypair(seed: Option<&[u8]>) -> Result<KeyPair, CryptoError> {
    let signing = match seed {
        Some(seed) => {
            let seed: [u8; SEED_LEN] = seed
                .try_into()
                .map_err(|_| CryptoError::InvalidSeed(seed.len()))?;
            SigningKey::from_bytes(&seed)
        }
        None => SigningKey::generate(&mut OsRng),
    };
    Ok(KeyPair {
        private_key: base58_encode(&signing.to_bytes()),
        public_key: base58_encode(signing.verifying_key().as_bytes()),
    })
}

fn signing_key(private_key: &str) -> Result<SigningKey, CryptoError> {
    let seed = decode_fixed::<SEED_LEN>(private_key, "private key")?;
    Ok(SigningKey::from_bytes(&seed))
}

/// Recomputes the public key that belongs to `private_key`.
pub fn derive_public_key(private_key: &str) -> Result<String, CryptoError> {
    Ok(base58_encode(signing_key(private_key)?.verifying_key().as_bytes()))
}

/// Checks that `public_key` decodes to a valid ED25519 point.
pub fn parse_public_key(public_key: &str) -> Result<(), CryptoError> {
    let bytes = decode_fixed::<PUBLIC_KEY_LEN>(public_key, "public key")?;
    VerifyingKey::from_bytes(&bytes)
        .map(|_| ())
        .map_err(|_| CryptoError::InvalidPublicKey)
}

/// Signs `message`, returning a Base58 signature.
pub fn sign(message: &[u8], private_key: &str) -> Result<String, CryptoError> {
    let key = signing_key(private_key)?;
    Ok(base58_encode(&key.sign(message).to_bytes()))
}

/// Any decoding failure counts as a failed verification.
pub fn verify_signature(message: &[u8], signature: &str, public_key: &str) -> bool {
    let Ok(pk) = decode_fixed::<PUBLIC_KEY_LEN>(public_key, "public key") else {
        return false;
    };
    let Ok(sig) = decode_fixed::<SIGNATURE_LEN>(signature, "signature") else {
        return false;
    };
    let Ok(vk) = VerifyingKey::from_bytes(&pk) else {
        return false;
    };
    vk.verify(message, &Signature::from_bytes(&sig)).is_ok()
}
