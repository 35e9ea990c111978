use std::collections::HashMap;
use std::path::Path;

use serde::Deserialize;
use sha2::{Digest, Sha256};

/// Lower-case hex SHA-256 of a password.
pub fn hash_password(password: &str) -> String {
    hex::encode(Sha256::digest(password.as_bytes()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LoginError {
    UnknownParticipant,
    BadPassword,
}

#[derive(Deserialize)]
struct Row {
    id: String,
    password_hash: String,
}

/// Participant ids and password hashes.
#[derive(Debug, Clone, Default)]
pub struct Roster {
    hashes: HashMap<String, String>,
}

impl Roster {
    /// CSV with columns `id,password_hash`.
    pub fn from_csv_reader<R: std::io::Read>(reader: R) -> Result<Self, String> {
        let mut rdr = csv::Reader::from_reader(reader);
        let mut roster = Roster::default();
        for (i, row) in rdr.deserialize::<Row>().enumerate() {
            let row = row.map_err(|e| format!("roster row {}: {e}", i + 1))?;
            let hash = row.password_hash.trim().to_ascii_lowercase();
            if hash.len() != 64 || !hash.bytes().all(|b| b.is_ascii_hexdigit()) {
                return Err(format!("roster row {}: password_hash is not a sha256 hex digest", i + 1));
            }
            roster.hashes.insert(row.id.trim().to_string(), hash);
        }
        Ok(roster)
    }

    pub fn load(path: &Path) -> Result<Self, String> {
        let f = std::fs::File::open(path).map_err(|e| format!("{}: {e}", path.display()))?;
        Self::from_csv_reader(f)
    }

    pub fn insert(&mut self, id: &str, password: &str) {
        self.hashes.insert(id.to_string(), hash_password(password));
    }

    pub fn len(&self) -> usize {
        self.hashes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hashes.is_empty()
    }

    pub fn verify(&self, id: &str, password: &str) -> Result<(), LoginError> {
        let stored = self.hashes.get(id).ok_or(LoginError::UnknownParticipant)?;
        let given = hash_password(password);
        // compare every byte regardless of where the first mismatch is
        let diff = stored.bytes().zip(given.bytes()).fold(0u8, |acc, (a, b)| acc | (a ^ b));
        if diff == 0 && stored.len() == given.len() {
            Ok(())
        } else {
            Err(LoginError::BadPassword)
        }
    }
}
