use rand::distributions::Alphanumeric;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;
use uuid::Uuid;

use super::account::Account;
use super::block::seal_block;
use super::ledger::Chain;
use super::pow::Difficulty;
use super::time::Timestamp;
use super::transaction::{create_transaction_with_uuid, Transaction};

const BASE_TIME: i64 = 1_700_000_000;

/// Deterministic chain factory for tests and experiments.
///
/// Skips per-block chain verification, so building N blocks costs O(N).
pub struct ChainBuilder {
    sender: Account,
    recipient: Account,
    miner: Account,
    rng: ChaCha8Rng,
    difficulty: Difficulty,
    payload_chars: usize,
    clock: i64,
}

impl ChainBuilder {
    pub fn new(seed: u64, difficulty: Difficulty) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = Timestamp::from_unix(BASE_TIME);
        let mut account = |name: &str| {
            let key: [u8; 32] = rng.gen();
            Account::generate(name, Some(&key), t).expect("32-byte seed")
        };
        let sender = account("sender");
        let recipient = account("recipient");
        let miner = account("miner");
        ChainBuilder {
            sender,
            recipient,
            miner,
            rng,
            difficulty,
            payload_chars: 20,
            clock: BASE_TIME,
        }
    }

    pub fn with_payload_chars(mut self, chars: usize) -> Self {
        self.payload_chars = chars;
        self
    }

    pub fn sender(&self) -> &Account {
        &self.sender
    }

    pub fn recipient(&self) -> &Account {
        &self.recipient
    }

    pub fn miner(&self) -> &Account {
        &self.miner
    }

    fn tick(&mut self) -> Timestamp {
        self.clock += 1;
        Timestamp::from_unix(self.clock)
    }

    /// A fresh signed transaction with a random alphanumeric payload.
    pub fn transaction(&mut self) -> Transaction {
        let payload: String = (&mut self.rng)
            .sample_iter(&Alphanumeric)
            .take(self.payload_chars)
            .map(char::from)
            .collect();
        let uuid = Uuid::from_bytes(self.rng.gen());
        let now = self.tick();
        create_transaction_with_uuid(&payload, &self.sender, &self.recipient.public_key, now, uuid)
            .expect("builder keys are valid")
    }

    pub fn build(&mut self, blocks: usize, tx_per_block: usize) -> Chain {
        let mut chain = Chain::new();
        self.extend(&mut chain, blocks, tx_per_block);
        chain
    }

    pub fn extend(&mut self, chain: &mut Chain, blocks: usize, tx_per_block: usize) {
        for _ in 0..blocks {
            let txs = (0..tx_per_block).map(|_| self.transaction()).collect();
            let now = self.tick();
            let block = seal_block(
                chain.next_block_number(),
                chain.head_id(),
                txs,
                &self.miner,
                self.difficulty,
                now,
                None,
            )
            .expect("uncapped pow with valid keys");
            chain.append_block(Arc::new(block));
        }
    }
}
