//! Loading instances and voter preferences from disk.
//!
//! - Voter CSV: one voter per row, header `dim_0,...,dim_{k-1}`.
//! - Instance JSON: `{"q_a": [...], "q_b": [...]}` or an array of them.
//! - Preference JSON: `{"voters_a": [[...], ...], "voters_b": [[...], ...]}`.

use std::fs::File;
use std::io::Read;
use std::path::Path;

use serde::Deserialize;

use crate::error::{GameError, Result};
use crate::model::{GameInstance, Party, PreferenceSet};

fn io_err(path: &Path, e: impl std::fmt::Display) -> GameError {
    GameError::Io(format!("{}: {e}", path.display()))
}

/// Parses voter rows from any reader. The header fixes `k`.
pub fn read_voters<R: Read>(reader: R, party: Party) -> Result<PreferenceSet> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr
        .headers()
        .map_err(|e| GameError::Io(e.to_string()))?
        .clone();
    for (i, name) in header.iter().enumerate() {
        if name != format!("dim_{i}") {
            return Err(GameError::Io(format!(
                "header column {i} is `{name}`, expected `dim_{i}`"
            )));
        }
    }
    let k = header.len();
    let mut voters = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| GameError::Io(e.to_string()))?;
        let v = rec
            .iter()
            .map(|s| {
                s.parse::<f64>()
                    .map_err(|e| GameError::Io(format!("row {}: `{s}`: {e}", row + 1)))
            })
            .collect::<Result<Vec<_>>>()?;
        voters.push(v);
    }
    PreferenceSet::new(party, k, voters)
}

pub fn read_voter_csv(path: &Path, party: Party) -> Result<PreferenceSet> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    read_voters(file, party).map_err(|e| match e {
        GameError::Io(msg) => io_err(path, msg),
        other => other,
    })
}

/// Instance from two voter CSV files.
pub fn load_preference_csvs(
    voters_a: &Path,
    voters_b: &Path,
    rescale: bool,
) -> Result<GameInstance> {
    let a = read_voter_csv(voters_a, Party::A)?;
    let b = read_voter_csv(voters_b, Party::B)?;
    GameInstance::aggregate(&a, &b, rescale)
}

#[derive(Deserialize)]
struct RawInstance {
    q_a: Vec<f64>,
    q_b: Vec<f64>,
}

#[derive(Deserialize)]
struct RawPreferences {
    voters_a: Vec<Vec<f64>>,
    voters_b: Vec<Vec<f64>>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum InstanceDoc {
    One(RawInstance),
    Many(Vec<RawInstance>),
    Voters(RawPreferences),
}

/// Parses an instance document (see module docs) into one or more instances.
pub fn parse_instances(text: &str, rescale: bool) -> Result<Vec<GameInstance>> {
    let doc: InstanceDoc = serde_json::from_str(text).map_err(|e| {
        GameError::Io(format!(
            "expected {{q_a, q_b}}, an array of them, or {{voters_a, voters_b}}: {e}"
        ))
    })?;
    match doc {
        InstanceDoc::One(r) => Ok(vec![GameInstance::from_aggregates(r.q_a, r.q_b, rescale)?]),
        InstanceDoc::Many(rs) => {
            if rs.is_empty() {
                return Err(GameError::Io("instance array is empty".into()));
            }
            rs.into_iter()
                .map(|r| GameInstance::from_aggregates(r.q_a, r.q_b, rescale))
                .collect()
        }
        InstanceDoc::Voters(p) => {
            let k = p
                .voters_a
                .first()
                .or(p.voters_b.first())
                .map_or(0, Vec::len);
            let a = PreferenceSet::new(Party::A, k, p.voters_a)?;
            let b = PreferenceSet::new(Party::B, k, p.voters_b)?;
            Ok(vec![GameInstance::aggregate(&a, &b, rescale)?])
        }
    }
}

pub fn load_instances(path: &Path, rescale: bool) -> Result<Vec<GameInstance>> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    parse_instances(&text, rescale).map_err(|e| match e {
        GameError::Io(msg) => io_err(path, msg),
        other => other,
    })
}
