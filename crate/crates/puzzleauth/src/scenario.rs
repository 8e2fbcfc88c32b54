//! Flat `key=value` scenario files.
//!
//! One setting per line; blank lines and lines starting with `#` are
//! ignored; whitespace around keys and values is trimmed. Every key is
//! optional and may appear at most once:
//!
//! ```text
//! seed                     u64      default 1
//! difficulty               0..=64   leading zero bits
//! rate_window_ms           u64
//! rate_max                 u32
//! block_duration_ms        u64
//! stamp_window_ms          u64
//! min_solve_time_ms        u64      unset = no minimum
//! challenge_max_age_ms     u64
//! replay_ttl_ms            u64
//! rate_capacity            usize
//! replay_capacity          usize
//! latency_ms               u64
//! loss_ppm                 0..=1000000
//! client_difficulty_ceiling 0..=64
//! workload.kind            legitimate | random_cid_flood | fixed_cid_flood |
//!                          replay | stale_stamp | forged_token | mixed
//! workload.count           u32: clients, hellos, replays, attempts or rounds
//! workload.renewals        u32 (legitimate)
//! workload.legit_after     u32 (random_cid_flood; default count / 2)
//! workload.target          client id (fixed_cid_flood)
//! workload.clock_offset_ms i64 (stale_stamp; default stamp window + 1 s)
//! ```
//!
//! Unset protocol parameters keep the [`SimConfig`] defaults.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;
use std::time::Duration;

use puzzleauth_core::puzzle::Difficulty;
use puzzleauth_core::simnet::{SimConfig, Workload};
use puzzleauth_core::ClientId;

use crate::LoadError;

/// A parsed scenario: the seed to run under and the simulation settings.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Scenario {
    pub seed: u64,
    pub config: SimConfig,
}

impl Default for Scenario {
    fn default() -> Self {
        Scenario {
            seed: 1,
            config: SimConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}: {kind}")]
pub struct ScenarioError {
    /// 1-based line number; 0 for errors about the file as a whole.
    pub line: usize,
    pub kind: ScenarioErrorKind,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ScenarioErrorKind {
    #[error("expected 'key = value'")]
    MissingEquals,
    #[error("unknown key '{0}'")]
    UnknownKey(String),
    #[error("key '{0}' set twice")]
    DuplicateKey(String),
    #[error("invalid value '{value}' for '{key}': {reason}")]
    BadValue {
        key: String,
        value: String,
        reason: String,
    },
    #[error("unknown workload kind '{0}'")]
    UnknownWorkload(String),
    #[error("'{key}' does not apply to workload '{kind}'")]
    NotApplicable { key: String, kind: String },
}

const KEYS: &[&str] = &[
    "seed",
    "difficulty",
    "rate_window_ms",
    "rate_max",
    "block_duration_ms",
    "stamp_window_ms",
    "min_solve_time_ms",
    "challenge_max_age_ms",
    "replay_ttl_ms",
    "rate_capacity",
    "replay_capacity",
    "latency_ms",
    "loss_ppm",
    "client_difficulty_ceiling",
    "workload.kind",
    "workload.count",
    "workload.renewals",
    "workload.legit_after",
    "workload.target",
    "workload.clock_offset_ms",
];

/// Which `workload.*` extras each kind accepts.
fn extras_for(kind: &str) -> Option<&'static [&'static str]> {
    Some(match kind {
        "legitimate" => &["workload.renewals"],
        "random_cid_flood" => &["workload.legit_after"],
        "fixed_cid_flood" => &["workload.target"],
        "stale_stamp" => &["workload.clock_offset_ms"],
        "replay" | "forged_token" | "mixed" => &[],
        _ => return None,
    })
}

struct Settings {
    values: BTreeMap<&'static str, (usize, String)>,
}

impl Settings {
    fn get<T: FromStr>(&self, key: &'static str) -> Result<Option<T>, ScenarioError>
    where
        T::Err: std::fmt::Display,
    {
        let Some((line, raw)) = self.values.get(key) else {
            return Ok(None);
        };
        raw.parse().map(Some).map_err(|e: T::Err| ScenarioError {
            line: *line,
            kind: ScenarioErrorKind::BadValue {
                key: key.to_owned(),
                value: raw.clone(),
                reason: e.to_string(),
            },
        })
    }

    fn get_ms(&self, key: &'static str) -> Result<Option<Duration>, ScenarioError> {
        Ok(self.get::<u64>(key)?.map(Duration::from_millis))
    }

    fn get_difficulty(&self, key: &'static str) -> Result<Option<Difficulty>, ScenarioError> {
        let Some(bits) = self.get::<u32>(key)? else {
            return Ok(None);
        };
        Difficulty::new(bits)
            .map(Some)
            .map_err(|e| self.bad(key, e.to_string()))
    }

    fn bad(&self, key: &'static str, reason: String) -> ScenarioError {
        let (line, value) = self.values[key].clone();
        ScenarioError {
            line,
            kind: ScenarioErrorKind::BadValue {
                key: key.to_owned(),
                value,
                reason,
            },
        }
    }

    fn line_of(&self, key: &str) -> usize {
        self.values.get(key).map_or(0, |(l, _)| *l)
    }
}

impl FromStr for Scenario {
    type Err = ScenarioError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let err = |kind| ScenarioError { line, kind };
            let (k, v) = trimmed
                .split_once('=')
                .ok_or_else(|| err(ScenarioErrorKind::MissingEquals))?;
            let k = k.trim();
            let key = KEYS
                .iter()
                .find(|known| **known == k)
                .ok_or_else(|| err(ScenarioErrorKind::UnknownKey(k.to_owned())))?;
            if values.insert(*key, (line, v.trim().to_owned())).is_some() {
                return Err(err(ScenarioErrorKind::DuplicateKey(k.to_owned())));
            }
        }
        Settings { values }.build()
    }
}

impl Settings {
    fn build(&self) -> Result<Scenario, ScenarioError> {
        let mut c = SimConfig::default();
        let seed = self.get("seed")?.unwrap_or(1);
        if let Some(d) = self.get_difficulty("difficulty")? {
            c.difficulty = d;
        }
        if let Some(d) = self.get_difficulty("client_difficulty_ceiling")? {
            c.client_difficulty_ceiling = d;
        }
        let durations: [(&'static str, &mut Duration); 6] = [
            ("rate_window_ms", &mut c.rate_window),
            ("block_duration_ms", &mut c.block_duration),
            ("stamp_window_ms", &mut c.stamp_window),
            ("challenge_max_age_ms", &mut c.challenge_max_age),
            ("replay_ttl_ms", &mut c.replay_ttl),
            ("latency_ms", &mut c.latency),
        ];
        for (key, slot) in durations {
            if let Some(d) = self.get_ms(key)? {
                *slot = d;
            }
        }
        if let Some(d) = self.get_ms("min_solve_time_ms")? {
            c.min_solve_time = Some(d);
        }
        if let Some(n) = self.get("rate_max")? {
            c.rate_max = n;
        }
        if let Some(n) = self.get("rate_capacity")? {
            c.rate_capacity = n;
        }
        if let Some(n) = self.get("replay_capacity")? {
            c.replay_capacity = n;
        }
        if let Some(n) = self.get::<u32>("loss_ppm")? {
            if n > 1_000_000 {
                return Err(self.bad("loss_ppm", "at most 1000000".into()));
            }
            c.loss_ppm = n;
        }
        c.workload = self.workload(&c)?;
        Ok(Scenario { seed, config: c })
    }

    fn workload(&self, c: &SimConfig) -> Result<Workload, ScenarioError> {
        let kind = self
            .get::<String>("workload.kind")?
            .unwrap_or_else(|| "legitimate".into());
        let extras = extras_for(&kind).ok_or_else(|| ScenarioError {
            line: self.line_of("workload.kind"),
            kind: ScenarioErrorKind::UnknownWorkload(kind.clone()),
        })?;
        for key in self.values.keys().filter(|k| {
            k.starts_with("workload.") && **k != "workload.kind" && **k != "workload.count"
        }) {
            if !extras.contains(key) {
                return Err(ScenarioError {
                    line: self.line_of(key),
                    kind: ScenarioErrorKind::NotApplicable {
                        key: (*key).to_owned(),
                        kind: kind.clone(),
                    },
                });
            }
        }
        let count = self.get::<u32>("workload.count")?;
        Ok(match kind.as_str() {
            "legitimate" => Workload::Legitimate {
                clients: count.unwrap_or(1),
                renewals: self.get("workload.renewals")?.unwrap_or(0),
            },
            "random_cid_flood" => {
                let hellos = count.unwrap_or(10_000);
                Workload::RandomCidFlood {
                    hellos,
                    legit_after: self.get("workload.legit_after")?.unwrap_or(hellos / 2),
                }
            }
            "fixed_cid_flood" => {
                let target = self.get::<String>("workload.target")?;
                if let Some(t) = &target {
                    ClientId::new(t.as_str())
                        .map_err(|e| self.bad("workload.target", e.to_string()))?;
                }
                Workload::FixedCidFlood {
                    hellos: count.unwrap_or(10),
                    target,
                }
            }
            "replay" => Workload::Replay {
                replays: count.unwrap_or(10),
            },
            "stale_stamp" => {
                let default_offset = c.stamp_window.as_millis() as i64 + 1_000;
                Workload::StaleStamp {
                    clients: count.unwrap_or(10),
                    clock_offset_ms: self
                        .get("workload.clock_offset_ms")?
                        .unwrap_or(default_offset),
                }
            }
            "forged_token" => Workload::ForgedToken {
                attempts: count.unwrap_or(16),
            },
            "mixed" => Workload::Mixed {
                rounds: count.unwrap_or(10),
            },
            _ => unreachable!("kinds validated by extras_for"),
        })
    }
}

/// Reads and parses a scenario file.
pub fn load_scenario(path: &Path) -> Result<Scenario, LoadError> {
    let text = crate::read_text(path)?;
    text.parse().map_err(|source| LoadError::Scenario {
        path: path.to_owned(),
        source,
    })
}
