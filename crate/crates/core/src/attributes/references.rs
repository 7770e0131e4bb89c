use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::Deserialize;

use super::{AttributeError, PairSides};
use crate::corpus::SentenceRecord;

#[derive(Debug, Deserialize)]
struct ReferenceLine {
    pair_id: String,
    refs: Vec<String>,
}

/// Where SARI references come from.
#[derive(Debug, Clone, PartialEq)]
pub enum ReferenceSource {
    /// Each pair's own target is its single reference. SARI then always
    /// scores 1, so the attribute carries no signal.
    Identity,
    /// Simplifications of each pair's source produced by an external system,
    /// keyed by pair id.
    External(HashMap<String, Vec<String>>),
}

impl ReferenceSource {
    /// Loads `{"pair_id": .., "refs": [..]}` lines. A repeated pair id
    /// appends to its references.
    pub fn load(path: &Path) -> Result<Self, AttributeError> {
        let file = File::open(path).map_err(|e| AttributeError::io(path, e))?;
        let mut refs: HashMap<String, Vec<String>> = HashMap::new();
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| AttributeError::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: ReferenceLine = serde_json::from_str(&line).map_err(|e| {
                AttributeError::ReferenceFile(format!("{}:{}: {e}", path.display(), i + 1))
            })?;
            refs.entry(rec.pair_id).or_default().extend(rec.refs);
        }
        Ok(Self::External(refs))
    }

    pub fn is_identity(&self) -> bool {
        matches!(self, Self::Identity)
    }

    pub fn refs_for(
        &self,
        pair_id: &str,
        target: &SentenceRecord,
    ) -> Result<Vec<SentenceRecord>, AttributeError> {
        match self {
            Self::Identity => Ok(vec![target.clone()]),
            Self::External(map) => map
                .get(pair_id)
                .map(|refs| {
                    refs.iter()
                        .enumerate()
                        .map(|(k, r)| SentenceRecord::new(format!("ref:{pair_id}/{k}"), r.as_str()))
                        .collect()
                })
                .ok_or_else(|| AttributeError::MissingReference(pair_id.to_string())),
        }
    }
}

/// References for every pair, keyed by pair id.
pub fn generate_references<'a, P, I>(
    pairs: I,
    source: &ReferenceSource,
) -> Result<BTreeMap<String, Vec<SentenceRecord>>, AttributeError>
where
    P: PairSides + 'a,
    I: IntoIterator<Item = &'a P>,
{
    pairs
        .into_iter()
        .map(|p| {
            let id = p.pair_id();
            let refs = source.refs_for(&id, p.target())?;
            Ok((id, refs))
        })
        .collect()
}
