use serde::{Deserialize, Serialize};

use super::crypto::{self, CryptoError};
use super::time::Timestamp;

/// A registered user: username plus an ED25519 keypair in Base58.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Account {
    pub username: String,
    pub private_key: String,
    pub public_key: String,
    pub create_date: Timestamp,
}

impl Account {
    /// Registers a new account. `seed` makes the keypair reproducible.
    pub fn generate(
        username: impl Into<String>,
        seed: Option<&[u8]>,
        now: Timestamp,
    ) -> Result<Self, CryptoError> {
        let keys = crypto::generate_keypair(seed)?;
        Ok(Account {
            username: username.into(),
            private_key: keys.private_key,
            public_key: keys.public_key,
            create_date: now,
        })
    }

    /// Checks that both keys decode and that the public key belongs to the private key.
    pub fn validate(&self) -> Result<(), CryptoError> {
        crypto::parse_public_key(&self.public_key)?;
        if crypto::derive_public_key(&self.private_key)? != self.public_key {
            return Err(CryptoError::InvalidPublicKey);
        }
        Ok(())
    }
}
