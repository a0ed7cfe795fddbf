//! Vocabulary with reserved PAD/UNK ids and a strict min-count cutoff.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const PAD_ID: u32 = 0;
pub const UNK_ID: u32 = 1;
pub const PAD_TOKEN: &str = "<pad>";
pub const UNK_TOKEN: &str = "<unk>";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Vocabulary {
    token_to_id: HashMap<String, u32>,
    id_to_token: Vec<String>,
    frequencies: Vec<u64>,
    pub min_count: u64,
}

impl Vocabulary {
    /// Builds a vocabulary from tokenized documents. A token survives only
    /// when its corpus frequency is strictly greater than `min_count`;
    /// everything else maps to UNK. Ids are assigned by descending frequency
    /// with ties broken alphabetically.
    pub fn build<'a, I>(docs: I, min_count: u64) -> Result<Self>
    where
        I: IntoIterator<Item = &'a [String]>,
    {
        let mut counts: BTreeMap<&'a str, u64> = BTreeMap::new();
        let mut any = false;
        for doc in docs {
            any = true;
            for token in doc {
                *counts.entry(token.as_str()).or_insert(0) += 1;
            }
        }
        if !any || counts.is_empty() {
            return Err(Error::Config("cannot build a vocabulary from an empty corpus".into()));
        }

        let mut survivors: Vec<(&str, u64)> = counts
            .into_iter()
            .filter(|(_, c)| *c > min_count)
            .collect();
        survivors.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));

        let mut vocab = Vocabulary {
            token_to_id: HashMap::new(),
            id_to_token: vec![PAD_TOKEN.to_string(), UNK_TOKEN.to_string()],
            frequencies: vec![0, 0],
            min_count,
        };
        for (token, count) in survivors {
            let id = vocab.id_to_token.len() as u32;
            vocab.token_to_id.insert(token.to_string(), id);
            vocab.id_to_token.push(token.to_string());
            vocab.frequencies.push(count);
        }
        Ok(vocab)
    }

    /// Reassembles a vocabulary from (token, id, frequency) rows, e.g. from
    /// disk. Reserved ids must be present and consistent.
    pub fn from_rows(rows: Vec<(String, u32, u64)>, min_count: u64) -> Result<Self> {
        let mut by_id: Vec<Option<(String, u64)>> = vec![None; rows.len()];
        for (token, id, freq) in rows {
            let idx = id as usize;
            if idx >= by_id.len() || by_id[idx].is_some() {
                return Err(Error::Malformed(format!("bad or duplicate vocab id {id}")));
            }
            by_id[idx] = Some((token, freq));
        }
        let mut id_to_token = Vec::with_capacity(by_id.len());
        let mut frequencies = Vec::with_capacity(by_id.len());
        for slot in by_id {
            let (token, freq) = slot.ok_or_else(|| Error::Malformed("gap in vocab ids".into()))?;
            id_to_token.push(token);
            frequencies.push(freq);
        }
        if id_to_token.len() < 2 || id_to_token[0] != PAD_TOKEN || id_to_token[1] != UNK_TOKEN {
            return Err(Error::Config("vocabulary is missing reserved PAD/UNK ids".into()));
        }
        let token_to_id = id_to_token
            .iter()
            .enumerate()
            .skip(2)
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
        Ok(Vocabulary {
            token_to_id,
            id_to_token,
            frequencies,
            min_count,
        })
    }

    pub fn lookup(&self, token: &str) -> u32 {
        self.token_to_id.get(token).copied().unwrap_or(UNK_ID)
    }

    pub fn decode(&self, id: u32) -> &str {
        &self.id_to_token[id as usize]
    }

    pub fn len(&self) -> usize {
        self.id_to_token.len()
    }

    pub fn is_empty(&self) -> bool {
        self.id_to_token.is_empty()
    }

    pub fn frequency(&self, id: u32) -> u64 {
        self.frequencies[id as usize]
    }

    pub fn rows(&self) -> impl Iterator<Item = (&str, u32, u64)> {
        self.id_to_token
            .iter()
            .enumerate()
            .map(|(i, t)| (t.as_str(), i as u32, self.frequencies[i]))
    }
}
