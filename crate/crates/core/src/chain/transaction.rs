use serde::{Deserialize, Serialize};
use uuid::Uuid;

use super::account::Account;
use super::canonical::to_canonical_bytes;
use super::crypto::{self, CryptoError};
use super::time::Timestamp;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransactionData {
    pub payload: String,
    pub uuid: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransactionBody {
    pub data: TransactionData,
    /// `[sender_public_key, destination_public_key]`
    pub owner: [String; 2],
}

/// A signed, content-addressed message between two public keys.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transaction {
    pub id: String,
    pub signature: String,
    pub timestamp: Timestamp,
    pub transaction: TransactionBody,
}

#[derive(Serialize)]
struct Preimage<'a> {
    timestamp: &'a Timestamp,
    transaction: &'a TransactionBody,
}

#[derive(Debug, thiserror::Error)]
pub enum TransactionError {
    #[error("invalid destination key: {0}")]
    InvalidDestination(CryptoError),
    #[error("sender key unusable: {0}")]
    Sender(CryptoError),
}

impl Transaction {
    /// Canonical bytes of everything except `id` and `signature`.
    pub fn signing_bytes(&self) -> Vec<u8> {
        signing_bytes(&self.timestamp, &self.transaction)
    }

    pub fn compute_id(&self) -> String {
        crypto::sha3_256(&self.signing_bytes())
    }

    pub fn sender(&self) -> &str {
        &self.transaction.owner[0]
    }

    pub fn destination(&self) -> &str {
        &self.transaction.owner[1]
    }

    pub fn payload(&self) -> &str {
        &self.transaction.data.payload
    }

    /// Id recomputes and the signature verifies under the sender key.
    pub fn is_authentic(&self) -> bool {
        let bytes = self.signing_bytes();
        crypto::sha3_256(&bytes) == self.id
            && crypto::verify_signature(&bytes, &self.signature, self.sender())
    }
}

fn signing_bytes(timestamp: &Timestamp, body: &TransactionBody) -> Vec<u8> {
    to_canonical_bytes(&Preimage {
        timestamp,
        transaction: body,
    })
    .expect("transaction preimage holds only strings")
}

/// Creates and signs a transaction with a fresh random uuid.
pub fn create_transaction(
    payload: &str,
    sender: &Account,
    dest_pubkey: &str,
    now: Timestamp,
) -> Result<Transaction, TransactionError> {
    create_transaction_with_uuid(payload, sender, dest_pubkey, now, Uuid::new_v4())
}

/// Same as [`create_transaction`] with a caller-chosen uuid (deterministic simulations).
pub fn create_transaction_with_uuid(
    payload: &str,
    sender: &Account,
    dest_pubkey: &str,
    now: Timestamp,
    uuid: Uuid,
) -> Result<Transaction, TransactionError> {
    crypto::parse_public_key(dest_pubkey).map_err(TransactionError::InvalidDestination)?;
    let body = TransactionBody {
        data: TransactionData {
            payload: payload.to_owned(),
            uuid: uuid.hyphenated().to_string(),
        },
        owner: [sender.public_key.clone(), dest_pubkey.to_owned()],
    };
    let bytes = signing_bytes(&now, &body);
    let signature = crypto::sign(&bytes, &sender.private_key).map_err(TransactionError::Sender)?;
    Ok(Transaction {
        id: crypto::sha3_256(&bytes),
        signature,
        timestamp: now,
        transaction: body,
    })
}
