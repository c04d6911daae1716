//! Leading-zero proof-of-work over the block id preimage.

use serde::{Deserialize, Serialize};

use super::canonical::to_canonical_bytes;
use super::crypto::{hex_lower, sha3_256_raw};

/// Number of leading `'0'` hex digits a block id must have.
///
/// Zero is accepted and makes the condition vacuous (every first attempt succeeds).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Difficulty(u32);

impl Difficulty {
    pub const MAX: u32 = 64;

    pub fn new(leading_zero_hex_digits: u32) -> Result<Self, PowError> {
        if leading_zero_hex_digits > Self::MAX {
            return Err(PowError::DifficultyTooLarge(leading_zero_hex_digits));
        }
        Ok(Difficulty(leading_zero_hex_digits))
    }

    pub fn leading_zero_hex_digits(self) -> u32 {
        self.0
    }

    /// Mean attempts of the geometric search, `16^d`.
    pub fn expected_iterations(self) -> f64 {
        16f64.powi(self.0 as i32)
    }

    /// Success probability of one attempt, `16^-d`.
    pub fn success_probability(self) -> f64 {
        1.0 / self.expected_iterations()
    }

    pub fn is_met_by(self, digest: &[u8; 32]) -> bool {
        let d = self.0 as usize;
        let full = d / 2;
        if digest[..full].iter().any(|&b| b != 0) {
            return false;
        }
        d.is_multiple_of(2) || digest[full] >> 4 == 0
    }

    pub fn is_met_by_hex(self, id: &str) -> bool {
        id.len() >= self.0 as usize && id.bytes().take(self.0 as usize).all(|c| c == b'0')
    }
}

impl Default for Difficulty {
    fn default() -> Self {
        Difficulty(3)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum PowError {
    #[error("difficulty {0} exceeds the 64 hex digits of a SHA3-256 digest")]
    DifficultyTooLarge(u32),
    #[error("no solution within {0} iterations")]
    CapExceeded(u64),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PowSolution {
    pub id: String,
    pub nonce: u64,
    /// Hash evaluations performed, always `nonce + 1`.
    pub iterations: u64,
}

#[derive(Serialize)]
struct IdPreimage<'a> {
    block_number: u64,
    tx_hash: &'a str,
    previous_block: &'a str,
    nonce: u64,
}

/// Canonical bytes of `{block_number, tx_hash, previous_block, nonce}`.
pub fn block_id_preimage(block_number: u64, tx_hash: &str, previous_block: &str, nonce: u64) -> Vec<u8> {
    to_canonical_bytes(&IdPreimage {
        block_number,
        tx_hash,
        previous_block,
        nonce,
    })
    .expect("id preimage holds only strings and integers")
}

pub fn block_id(block_number: u64, tx_hash: &str, previous_block: &str, nonce: u64) -> String {
    hex_lower(&sha3_256_raw(&block_id_preimage(
        block_number,
        tx_hash,
        previous_block,
        nonce,
    )))
}

/// Finds the smallest nonce >= 0 whose block id meets `difficulty`.
///
/// `cap` bounds the number of hash evaluations; `None` searches until found.
pub fn proof_of_work(
    block_number: u64,
    tx_hash: &str,
    previous_block: &str,
    difficulty: Difficulty,
    cap: Option<u64>,
) -> Result<PowSolution, PowError> {
    // Keys sort as block_number < nonce < previous_block < tx_hash, so the
    // nonce sits between a fixed prefix and suffix.
    let prefix = format!("{{\"block_number\":{block_number},\"nonce\":");
    let suffix = format!(
        ",\"previous_block\":{},\"tx_hash\":{}}}",
        serde_json::to_string(previous_block).expect("string"),
        serde_json::to_string(tx_hash).expect("string"),
    );
    let mut buf = Vec::with_capacity(prefix.len() + suffix.len() + 20);
    let mut nonce: u64 = 0;
    loop {
        if cap.is_some_and(|c| nonce >= c) {
            return Err(PowError::CapExceeded(nonce));
        }
        buf.clear();
        buf.extend_from_slice(prefix.as_bytes());
        buf.extend_from_slice(itoa(nonce, &mut [0u8; 20]));
        buf.extend_from_slice(suffix.as_bytes());
        let digest = sha3_256_raw(&buf);
        if difficulty.is_met_by(&digest) {
            return Ok(PowSolution {
                id: hex_lower(&digest),
                nonce,
                iterations: nonce + 1,
            });
        }
        nonce += 1;
    }
}

fn itoa(mut n: u64, scratch: &mut [u8; 20]) -> &[u8] {
    let mut i = scratch.len();
    loop {
        i -= 1;
        scratch[i] = b'0' + (n % 10) as u8;
        n /= 10;
        if n == 0 {
            break;
        }
    }
    &scratch[i..]
}
