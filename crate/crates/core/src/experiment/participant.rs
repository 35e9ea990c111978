use std::collections::HashMap;
use std::fmt;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Mutex;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::ExperimentError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Arm {
    Treatment,
    Control,
}

impl Arm {
    pub fn as_str(self) -> &'static str {
        match self {
            Arm::Treatment => "treatment",
            Arm::Control => "control",
        }
    }

    pub fn is_treatment(self) -> bool {
        self == Arm::Treatment
    }

    pub fn indicator(self) -> f64 {
        if self.is_treatment() { 1.0 } else { 0.0 }
    }
}

impl fmt::Display for Arm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Arm {
    type Err = ExperimentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "treatment" => Ok(Arm::Treatment),
            "control" => Ok(Arm::Control),
            other => Err(ExperimentError::InvalidConfig(format!("unknown arm `{other}`"))),
        }
    }
}

/// Pre-treatment covariates. Indicators are stored as 0.0 / 1.0.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ParticipantCovariates {
    pub white: f64,
    pub female: f64,
    pub age: f64,
    pub college: f64,
    pub income_60k: f64,
    pub urban: f64,
    pub democrat: f64,
}

impl ParticipantCovariates {
    pub const NAMES: [&'static str; 7] =
        ["white", "female", "age", "college", "income_60k", "urban", "democrat"];

    pub fn values(&self) -> [f64; 7] {
        [
            self.white,
            self.female,
            self.age,
            self.college,
            self.income_60k,
            self.urban,
            self.democrat,
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Participant {
    pub id: String,
    pub covariates: ParticipantCovariates,
    pub arm: Arm,
    /// Raw pretest AOT7 score.
    pub aot7_pre: f64,
}

/// The arm for `id` under `seed`: a fair coin from a generator seeded by
/// SHA-256 of the pair.
pub fn arm_for(seed: u64, id: &str) -> Arm {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(id.as_bytes());
    let digest: [u8; 32] = h.finalize().into();
    let mut rng = ChaCha8Rng::from_seed(digest);
    if rng.random_bool(0.5) {
        Arm::Treatment
    } else {
        Arm::Control
    }
}

#[derive(Serialize, Deserialize)]
struct Assignment {
    id: String,
    arm: Arm,
}

/// Remembers every assignment so repeat requests return the stored arm.
/// With a log path, assignments are appended as JSON lines and reloaded.
#[derive(Debug)]
pub struct ArmAssigner {
    seed: u64,
    assigned: Mutex<HashMap<String, Arm>>,
    log: Option<PathBuf>,
}

impl ArmAssigner {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            assigned: Mutex::new(HashMap::new()),
            log: None,
        }
    }

    pub fn open(seed: u64, path: &Path) -> Result<Self, ExperimentError> {
        let mut assigned = HashMap::new();
        if path.exists() {
            for (i, line) in BufReader::new(File::open(path)?).lines().enumerate() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                let a: Assignment = serde_json::from_str(&line).map_err(|e| {
                    ExperimentError::InvalidConfig(format!("{}:{}: {e}", path.display(), i + 1))
                })?;
                assigned.insert(a.id, a.arm);
            }
        }
        Ok(Self {
            seed,
            assigned: Mutex::new(assigned),
            log: Some(path.to_path_buf()),
        })
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn assign(&self, id: &str) -> Result<Arm, ExperimentError> {
        let mut map = self.assigned.lock().expect("assignment lock poisoned");
        if let Some(arm) = map.get(id) {
            return Ok(*arm);
        }
        let arm = arm_for(self.seed, id);
        if let Some(path) = &self.log {
            let mut f = OpenOptions::new().create(true).append(true).open(path)?;
            let line = serde_json::to_string(&Assignment { id: id.to_string(), arm })
                .expect("assignment serializes");
            writeln!(f, "{line}")?;
        }
        map.insert(id.to_string(), arm);
        Ok(arm)
    }

    pub fn get(&self, id: &str) -> Option<Arm> {
        self.assigned.lock().expect("assignment lock poisoned").get(id).copied()
    }

    /// (treatment, control) counts so far.
    pub fn counts(&self) -> (usize, usize) {
        let map = self.assigned.lock().expect("assignment lock poisoned");
        let t = map.values().filter(|a| a.is_treatment()).count();
        (t, map.len() - t)
    }
}
