//! Append-only JSON document store with a sequence-numbered change feed.
//!
//! Every document carries a `type` of `account`, `transaction` or `block`.
//! Re-putting a document id appends a new revision; reads return the latest.
//! On disk a store is a JSON-lines file with one `"<seq> <canonical-json>"`
//! per line.

use serde_json::{Map, Value};
use std::collections::HashMap;
use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::sync::Arc;

use crate::chain::canonical::{canonical_serialize, CanonicalError};
use crate::chain::{Account, Block, Transaction};

pub type Document = Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DocType {
    Account,
    Transaction,
    Block,
}

impl DocType {
    pub fn as_str(self) -> &'static str {
        match self {
            DocType::Account => "account",
            DocType::Transaction => "transaction",
            DocType::Block => "block",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "account" => Some(DocType::Account),
            "transaction" => Some(DocType::Transaction),
            "block" => Some(DocType::Block),
            _ => None,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("document has no string `type` field")]
    MissingType,
    #[error("unknown document type `{0}`")]
    UnknownType(String),
    #[error("{0} document has no identifying field")]
    MissingId(&'static str),
    #[error("document is not an object")]
    NotAnObject,
    #[error(transparent)]
    Canonical(#[from] CanonicalError),
    #[error("malformed {kind} document: {source}")]
    Decode {
        kind: &'static str,
        source: serde_json::Error,
    },
    #[error("line {line}: {message}")]
    Corrupt { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Type of a document, validated against the known set.
pub fn document_type(doc: &Document) -> Result<DocType, StoreError> {
    let ty = doc.get("type").and_then(Value::as_str).ok_or(StoreError::MissingType)?;
    DocType::parse(ty).ok_or_else(|| StoreError::UnknownType(ty.to_owned()))
}

/// `"<type>:<id>"`; accounts are keyed by public key.
pub fn document_id(doc: &Document) -> Result<String, StoreError> {
    let ty = document_type(doc)?;
    let field = match ty {
        DocType::Account => "public_key",
        DocType::Transaction | DocType::Block => "id",
    };
    let id = doc
        .get(field)
        .and_then(Value::as_str)
        .ok_or(StoreError::MissingId(ty.as_str()))?;
    Ok(format!("{}:{id}", ty.as_str()))
}

fn tagged<T: serde::Serialize>(value: &T, ty: DocType) -> Document {
    let mut doc = serde_json::to_value(value).expect("ledger types serialize");
    if let Value::Object(map) = &mut doc {
        map.insert("type".into(), Value::String(ty.as_str().into()));
    }
    doc
}

pub fn account_document(account: &Account) -> Document {
    tagged(account, DocType::Account)
}

pub fn transaction_document(tx: &Transaction) -> Document {
    tagged(tx, DocType::Transaction)
}

pub fn block_document(block: &Block) -> Document {
    tagged(block, DocType::Block)
}

/// A decoded document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Entity {
    Account(Account),
    Transaction(Transaction),
    Block(Block),
}

pub fn decode_document(doc: &Document) -> Result<Entity, StoreError> {
    let ty = document_type(doc)?;
    let mut body: Map<String, Value> = doc.as_object().ok_or(StoreError::NotAnObject)?.clone();
    body.remove("type");
    let body = Value::Object(body);
    let err = |source| StoreError::Decode {
        kind: ty.as_str(),
        source,
    };
    Ok(match ty {
        DocType::Account => Entity::Account(serde_json::from_value(body).map_err(err)?),
        DocType::Transaction => Entity::Transaction(serde_json::from_value(body).map_err(err)?),
        DocType::Block => Entity::Block(serde_json::from_value(body).map_err(err)?),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Change {
    pub seq: u64,
    pub doc_id: String,
    pub document: Arc<Document>,
}

/// Writes take `&mut self`, reads `&self`: one writer, any number of readers.
#[derive(Debug, Clone, Default)]
pub struct DocumentStore {
    log: Vec<Change>,
    latest: HashMap<String, usize>,
    /// Document ids in order of first insertion, with their type.
    order: Vec<(DocType, String)>,
}

impl DocumentStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Persists `doc` and returns its sequence number.
    pub fn put(&mut self, doc: Document) -> Result<u64, StoreError> {
        let seq = self.last_seq() + 1;
        self.insert(seq, doc)?;
        Ok(seq)
    }

    fn insert(&mut self, seq: u64, doc: Document) -> Result<(), StoreError> {
        if !doc.is_object() {
            return Err(StoreError::NotAnObject);
        }
        let ty = document_type(&doc)?;
        let doc_id = document_id(&doc)?;
        // Reject what cannot be written back out canonically.
        canonical_serialize(&doc)?;
        if !self.latest.contains_key(&doc_id) {
            self.order.push((ty, doc_id.clone()));
        }
        self.latest.insert(doc_id.clone(), self.log.len());
        self.log.push(Change {
            seq,
            doc_id,
            document: Arc::new(doc),
        });
        Ok(())
    }

    pub fn last_seq(&self) -> u64 {
        self.log.last().map(|c| c.seq).unwrap_or(0)
    }

    pub fn len(&self) -> usize {
        self.latest.len()
    }

    pub fn is_empty(&self) -> bool {
        self.latest.is_empty()
    }

    pub fn change_log(&self) -> &[Change] {
        &self.log
    }

    pub fn contains(&self, doc_id: &str) -> bool {
        self.latest.contains_key(doc_id)
    }

    pub fn get(&self, doc_id: &str) -> Option<&Document> {
        self.latest.get(doc_id).map(|&i| self.log[i].document.as_ref())
    }

    /// Latest revision of every document of `ty`, in first-insertion order.
    pub fn query_by_type(&self, ty: &str) -> Vec<Document> {
        let Some(ty) = DocType::parse(ty) else {
            return Vec::new();
        };
        self.order
            .iter()
            .filter(|(t, _)| *t == ty)
            .map(|(_, id)| self.log[self.latest[id]].document.as_ref().clone())
            .collect()
    }

    /// Every change with sequence number greater than `seq`, oldest first.
    pub fn changes_since(&self, seq: u64) -> &[Change] {
        let start = self.log.partition_point(|c| c.seq <= seq);
        &self.log[start..]
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), StoreError> {
        let mut out = BufWriter::new(fs::File::create(path)?);
        for change in &self.log {
            write!(out, "{} ", change.seq)?;
            out.write_all(&canonical_serialize(&change.document)?)?;
            out.write_all(b"\n")?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, StoreError> {
        let reader = BufReader::new(fs::File::open(path)?);
        let mut store = DocumentStore::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            let corrupt = |message: String| StoreError::Corrupt { line: i + 1, message };
            let (seq, json) = line
                .split_once(' ')
                .ok_or_else(|| corrupt("missing sequence prefix".into()))?;
            let seq: u64 = seq.parse().map_err(|e| corrupt(format!("bad sequence: {e}")))?;
            if seq <= store.last_seq() {
                return Err(corrupt(format!("sequence {seq} does not increase")));
            }
            let doc: Value = serde_json::from_str(json).map_err(|e| corrupt(e.to_string()))?;
            store.insert(seq, doc)?;
        }
        Ok(store)
    }
}

impl PartialEq for DocumentStore {
    fn eq(&self, other: &Self) -> bool {
        self.log == other.log
    }
}
