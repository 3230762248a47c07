//! Persistent store for solver results: one self-describing JSON record per
//! line, ASCII decimal integers, witness as an ascending list. Duplicate
//! keys resolve certified-first, then latest line. A certified entry is
//! never replaced by an uncertified one.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::Error;
use crate::exact::{FskEntry, SolverEntry};
use crate::intset::IntSet;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum CacheRecord {
    Rk {
        k: u32,
        n: u32,
        value: u32,
        certified: bool,
        witness: Vec<i64>,
    },
    Fsk {
        k: u32,
        s: u32,
        n: u32,
        window: u32,
        value: u64,
        certified: bool,
        witness: Vec<i64>,
    },
}

#[derive(Clone, Debug)]
pub struct CachedValue {
    pub value: u64,
    pub certified: bool,
    pub witness: IntSet,
}

/// Narrowed view for rk entries (values fit u32).
#[derive(Clone, Debug)]
pub struct CachedRk {
    pub value: u32,
    pub certified: bool,
    pub witness: IntSet,
}

#[derive(Clone, Debug, Default)]
pub struct SolverCache {
    rk: BTreeMap<(u32, u32), CachedValue>,
    fsk: BTreeMap<(u32, u32, u32, u32), CachedValue>,
}

impl SolverCache {
    pub fn load(path: &Path) -> Result<Self, Error> {
        let file = File::open(path)?;
        let reader = BufReader::new(file);
        let mut cache = SolverCache::default();
        for (idx, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let record: CacheRecord = serde_json::from_str(&line).map_err(|e| {
                Error::Parse(format!("{}:{}: {e}", path.display(), idx + 1))
            })?;
            cache.apply(record);
        }
        Ok(cache)
    }

    /// Missing file means an empty cache; a malformed file is still an error.
    pub fn load_or_default(path: &Path) -> Result<Self, Error> {
        if path.exists() {
            SolverCache::load(path)
        } else {
            Ok(SolverCache::default())
        }
    }

    pub fn save(&self, path: &Path) -> Result<(), Error> {
        let file = File::create(path)?;
        let mut w = BufWriter::new(file);
        for record in self.records() {
            let line = serde_json::to_string(&record)
                .map_err(|e| Error::Parse(e.to_string()))?;
            writeln!(w, "{line}")?;
        }
        w.flush()?;
        Ok(())
    }

    /// All records in deterministic key order, rk before fsk.
    pub fn records(&self) -> Vec<CacheRecord> {
        let mut out = Vec::with_capacity(self.rk.len() + self.fsk.len());
        for (&(k, n), v) in &self.rk {
            out.push(CacheRecord::Rk {
                k,
                n,
                value: v.value as u32,
                certified: v.certified,
                witness: v.witness.clone().into(),
            });
        }
        for (&(k, s, n, window), v) in &self.fsk {
            out.push(CacheRecord::Fsk {
                k,
                s,
                n,
                window,
                value: v.value,
                certified: v.certified,
                witness: v.witness.clone().into(),
            });
        }
        out
    }

    pub fn apply(&mut self, record: CacheRecord) {
        match record {
            CacheRecord::Rk {
                k,
                n,
                value,
                certified,
                witness,
            } => {
                Self::merge(
                    &mut self.rk,
                    (k, n),
                    CachedValue {
                        value: value as u64,
                        certified,
                        witness: IntSet::new(witness),
                    },
                );
            }
            CacheRecord::Fsk {
                k,
                s,
                n,
                window,
                value,
                certified,
                witness,
            } => {
                Self::merge(
                    &mut self.fsk,
                    (k, s, n, window),
                    CachedValue {
                        value,
                        certified,
                        witness: IntSet::new(witness),
                    },
                );
            }
        }
    }

    fn merge<K: Ord>(map: &mut BTreeMap<K, CachedValue>, key: K, incoming: CachedValue) {
        match map.get(&key) {
            Some(existing) if existing.certified && !incoming.certified => {}
            _ => {
                map.insert(key, incoming);
            }
        }
    }

    pub fn insert_rk(&mut self, entry: &SolverEntry) {
        Self::merge(
            &mut self.rk,
            (entry.k, entry.n),
            CachedValue {
                value: entry.value as u64,
                certified: entry.certified,
                witness: entry.witness.clone(),
            },
        );
    }

    pub fn insert_fsk(&mut self, entry: &FskEntry) {
        Self::merge(
            &mut self.fsk,
            (entry.k, entry.s, entry.n, entry.window),
            CachedValue {
                value: entry.value,
                certified: entry.certified,
                witness: entry.witness.clone(),
            },
        );
    }

    pub fn get_rk(&self, k: u32, n: u32) -> Option<CachedRk> {
        self.rk.get(&(k, n)).map(|v| CachedRk {
            value: v.value as u32,
            certified: v.certified,
            witness: v.witness.clone(),
        })
    }

    pub fn get_fsk(&self, k: u32, s: u32, n: u32, window: u32) -> Option<&CachedValue> {
        self.fsk.get(&(k, s, n, window))
    }

    /// Certified rk values grouped by k, each list ascending in n.
    pub fn certified_rk_by_k(&self) -> BTreeMap<u32, Vec<(u32, u32)>> {
        let mut out: BTreeMap<u32, Vec<(u32, u32)>> = BTreeMap::new();
        for (&(k, n), v) in &self.rk {
            if v.certified {
                out.entry(k).or_default().push((n, v.value as u32));
            }
        }
        out
    }

    pub fn rk_len(&self) -> usize {
        self.rk.len()
    }

    pub fn fsk_len(&self) -> usize {
        self.fsk.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rk(k: u32, n: u32, value: u32, certified: bool) -> CacheRecord {
        CacheRecord::Rk {
            k,
            n,
            value,
            certified,
            witness: (1..=value as i64).collect(),
        }
    }

    #[test]
    fn duplicate_resolution_certified_first_then_latest() {
        let mut cache = SolverCache::default();
        cache.apply(rk(3, 9, 5, true));
        cache.apply(rk(3, 9, 4, false)); // must not displace the certified row
        assert_eq!(cache.get_rk(3, 9).unwrap().value, 5);
        assert!(cache.get_rk(3, 9).unwrap().certified);

        let mut cache = SolverCache::default();
        cache.apply(rk(3, 20, 7, false));
        cache.apply(rk(3, 20, 6, false)); // latest uncertified wins
        assert_eq!(cache.get_rk(3, 20).unwrap().value, 6);
        cache.apply(rk(3, 20, 8, true)); // certified upgrade
        assert!(cache.get_rk(3, 20).unwrap().certified);
    }

    #[test]
    fn roundtrip_through_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cache.jsonl");
        let mut cache = SolverCache::default();
        cache.apply(rk(3, 4, 3, true));
        cache.apply(CacheRecord::Fsk {
            k: 4,
            s: 3,
            n: 4,
            window: 16,
            value: 2,
            certified: true,
            witness: vec![1, 2, 3, 5],
        });
        cache.save(&path).unwrap();

        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.lines().all(|l| l.contains("\"kind\"")));
        assert!(text.contains("\"kind\":\"rk\""));
        assert!(text.contains("\"kind\":\"fsk\""));

        let loaded = SolverCache::load(&path).unwrap();
        assert_eq!(loaded.records(), cache.records());
    }

    #[test]
    fn missing_file_is_empty_and_garbage_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let missing = dir.path().join("none.jsonl");
        assert_eq!(SolverCache::load_or_default(&missing).unwrap().rk_len(), 0);

        let bad = dir.path().join("bad.jsonl");
        std::fs::write(&bad, "{\"kind\":\"rk\",\"k\":3}\n").unwrap();
        assert!(SolverCache::load(&bad).is_err());
    }
}
