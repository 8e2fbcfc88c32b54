//! Deterministic in-memory network for the handshake.
//!
//! A run is a pure function of `(seed, SimConfig)`: time is a virtual clock,
//! and the master key, every client key and every nonce come from one
//! `ChaCha20Rng` seeded with `seed`. Messages travel as wire bytes through
//! [`Server::handle_bytes`], and both directions are recorded in a
//! [`Transcript`], so two runs with the same inputs produce byte-identical
//! transcripts.

mod report;

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;
use core::time::Duration;

use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};

pub use report::{Actor, RunReport, Tally};

use crate::client::{ClientConfig, ClientSession, Credentials};
use crate::crypto::{MasterKey, SymmetricKey, KEY_LEN};
use crate::puzzle::Difficulty;
use crate::server::{ConfigError, Footprint, Server, ServerConfig};
use crate::token::{self, Token};
use crate::wire::{Hello, MessageType, ProtocolMessage};
use crate::{ClientId, Timestamp};

/// Virtual time at which every run starts (ms since the Unix epoch).
pub const EPOCH: Timestamp = Timestamp::from_millis(1_700_000_000_000);

/// The traffic a run injects.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Workload {
    /// `clients` distinct provisioned clients handshake once each, then renew
    /// their session key `renewals` times.
    Legitimate { clients: u32, renewals: u32 },
    /// Hellos under fresh random client ids. One legitimate handshake runs
    /// after `legit_after` of them.
    RandomCidFlood { hellos: u32, legit_after: u32 },
    /// A burst of hellos under one client id, a legitimate handshake, then
    /// one probe hello once the block has expired. Without a target the
    /// attacker floods under its own id and the legitimate client is a
    /// bystander; with one, the flood spoofs the legitimate client's id
    /// (exposing victim lockout).
    FixedCidFlood { hellos: u32, target: Option<String> },
    /// A legitimate handshake, then its response message replayed verbatim.
    Replay { replays: u32 },
    /// Provisioned clients whose clocks are off by `clock_offset_ms`, then
    /// one legitimate client with an accurate clock.
    StaleStamp { clients: u32, clock_offset_ms: i64 },
    /// A provisioned insider solves every puzzle honestly but presents
    /// forged tokens: random bytes and the legitimate victim's token,
    /// alternately. The victim handshakes halfway through.
    ForgedToken { attempts: u32 },
    /// Random-id flood, fixed-id flood, replays and forgeries interleaved
    /// with legitimate handshakes.
    Mixed { rounds: u32 },
}

impl Workload {
    pub fn name(&self) -> &'static str {
        match self {
            Workload::Legitimate { .. } => "legitimate",
            Workload::RandomCidFlood { .. } => "random_cid_flood",
            Workload::FixedCidFlood { .. } => "fixed_cid_flood",
            Workload::Replay { .. } => "replay",
            Workload::StaleStamp { .. } => "stale_stamp",
            Workload::ForgedToken { .. } => "forged_token",
            Workload::Mixed { .. } => "mixed",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimConfig {
    pub difficulty: Difficulty,
    pub rate_window: Duration,
    pub rate_max: u32,
    pub block_duration: Duration,
    pub stamp_window: Duration,
    pub min_solve_time: Option<Duration>,
    pub challenge_max_age: Duration,
    pub replay_ttl: Duration,
    pub rate_capacity: usize,
    pub replay_capacity: usize,
    /// One-way delivery time. Zero by default: delivery is instantaneous.
    pub latency: Duration,
    /// Probability, in parts per million, that a client-to-server message is
    /// lost. Lost messages get no reply.
    pub loss_ppm: u32,
    pub client_difficulty_ceiling: Difficulty,
    pub workload: Workload,
}

impl Default for SimConfig {
    fn default() -> Self {
        let server = ServerConfig::new(SymmetricKey::from_bytes([0; KEY_LEN]));
        SimConfig {
            difficulty: Difficulty::new(8).expect("in range"),
            rate_window: server.rate_window,
            rate_max: server.rate_max,
            block_duration: server.block_duration,
            stamp_window: server.stamp_window,
            min_solve_time: server.min_solve_time,
            challenge_max_age: server.challenge_max_age,
            replay_ttl: server.replay_ttl,
            rate_capacity: server.rate_capacity,
            replay_capacity: server.replay_capacity,
            latency: Duration::ZERO,
            loss_ppm: 0,
            client_difficulty_ceiling: ClientConfig::default().difficulty_ceiling,
            workload: Workload::Legitimate {
                clients: 1,
                renewals: 0,
            },
        }
    }
}

impl SimConfig {
    fn server_config(&self, master_key: MasterKey) -> ServerConfig {
        ServerConfig {
            master_key,
            difficulty: self.difficulty,
            rate_window: self.rate_window,
            rate_max: self.rate_max,
            block_duration: self.block_duration,
            stamp_window: self.stamp_window,
            min_solve_time: self.min_solve_time,
            challenge_max_age: self.challenge_max_age,
            replay_ttl: self.replay_ttl,
            rate_capacity: self.rate_capacity,
            replay_capacity: self.replay_capacity,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TranscriptEntry {
    pub at: Timestamp,
    pub actor: Actor,
    pub to_server: bool,
    pub bytes: Vec<u8>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Transcript {
    pub entries: Vec<TranscriptEntry>,
}

impl Transcript {
    /// Flat encoding: per entry `[u64 time][u8 actor][u8 direction][u32 len][bytes]`.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        for e in &self.entries {
            out.extend_from_slice(&e.at.to_be_bytes());
            out.push(e.actor.code());
            out.push(u8::from(e.to_server));
            out.extend_from_slice(&(e.bytes.len() as u32).to_be_bytes());
            out.extend_from_slice(&e.bytes);
        }
        out
    }

    /// The recorded messages, decoded.
    pub fn messages(&self) -> Vec<ProtocolMessage> {
        self.entries
            .iter()
            .filter_map(|e| ProtocolMessage::decode(&e.bytes).ok())
            .collect()
    }

    /// Per-request outcomes as tab-separated values with a header row: each
    /// client-to-server message paired with the server's reply, or `lost`
    /// when the network dropped it (the server always replies).
    pub fn outcomes_tsv(&self) -> String {
        let mut s = String::from("seq	at_ms	actor	request	outcome	drop_reason\n");
        let type_name = |bytes: &[u8]| {
            bytes
                .first()
                .and_then(|b| MessageType::from_u8(*b))
                .map_or("?", MessageType::name)
        };
        let mut seq = 0u64;
        for (i, e) in self.entries.iter().enumerate() {
            if !e.to_server {
                continue;
            }
            let reply = self
                .entries
                .get(i + 1)
                .filter(|r| !r.to_server && r.actor == e.actor);
            let (outcome, reason) = match reply {
                Some(r) => match ProtocolMessage::decode(&r.bytes) {
                    Ok(ProtocolMessage::Drop(d)) => ("drop", d.reason.name()),
                    _ => (type_name(&r.bytes), "-"),
                },
                None => ("lost", "-"),
            };
            let _ = writeln!(
                s,
                "{seq}\t{}\t{}\t{}\t{outcome}\t{reason}",
                e.at.as_millis() - EPOCH.as_millis(),
                e.actor,
                type_name(&e.bytes)
            );
            seq += 1;
        }
        s
    }

    /// One line per message: time offset, actor, direction, type, size.
    pub fn summary(&self) -> String {
        let mut s = String::new();
        for e in &self.entries {
            let kind = e
                .bytes
                .first()
                .and_then(|b| MessageType::from_u8(*b))
                .map_or("?", MessageType::name);
            let arrow = if e.to_server { "->" } else { "<-" };
            let _ = writeln!(
                s,
                "+{}ms {} {arrow} server {kind} ({} bytes)",
                e.at.as_millis() - EPOCH.as_millis(),
                e.actor,
                e.bytes.len()
            );
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SimError {
    #[error("invalid server configuration: {0}")]
    Config(#[from] ConfigError),
}

struct Sim {
    cfg: SimConfig,
    master_key: MasterKey,
    server: Server,
    rng: ChaCha20Rng,
    now: Timestamp,
    transcript: Transcript,
    tallies: BTreeMap<Actor, Tally>,
    legit_attempted: u64,
    legit_completed: u64,
    renewals_completed: u64,
    sk_disagreements: u64,
    server_held_session_keys: u64,
    attacker_hash_ops: u64,
    phase3_reached: u64,
    post_block_challenged: Option<bool>,
    stamp_skew_ms: Option<(i64, i64)>,
    /// Responses of legitimate handshakes, kept for the replay workload.
    captured_responses: Vec<Vec<u8>>,
    /// Every provisioned PSK; the simulator plays all clients.
    known_psks: BTreeMap<ClientId, SymmetricKey>,
    footprint_before: Option<Footprint>,
}

fn cid(s: &str) -> ClientId {
    ClientId::new(s).expect("simulator client ids are valid")
}

fn shift(t: Timestamp, offset_ms: i64) -> Timestamp {
    Timestamp(t.as_millis().saturating_add_signed(offset_ms))
}

impl Sim {
    fn new(seed: u64, cfg: SimConfig) -> Result<Self, SimError> {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let master_key = MasterKey::generate(&mut rng);
        let server = Server::new(cfg.server_config(master_key.clone()))?;
        Ok(Sim {
            cfg,
            master_key,
            server,
            rng,
            now: EPOCH,
            transcript: Transcript::default(),
            tallies: BTreeMap::new(),
            legit_attempted: 0,
            legit_completed: 0,
            renewals_completed: 0,
            sk_disagreements: 0,
            server_held_session_keys: 0,
            attacker_hash_ops: 0,
            phase3_reached: 0,
            post_block_challenged: None,
            stamp_skew_ms: None,
            captured_responses: Vec::new(),
            known_psks: BTreeMap::new(),
            footprint_before: None,
        })
    }

    fn advance(&mut self, d: Duration) {
        self.now = self.now.saturating_add(d);
    }

    fn provision(&mut self, name: &str) -> Credentials {
        let client_id = cid(name);
        let (psk, token) = self
            .server
            .provision(client_id.clone(), self.now, &mut self.rng)
            .expect("simulator provisions each id once");
        self.known_psks.insert(client_id.clone(), psk.clone());
        Credentials {
            client_id,
            psk,
            token,
        }
    }

    /// Delivers one client message and returns the server's reply, if the
    /// message was not lost.
    fn send_bytes(&mut self, actor: Actor, bytes: Vec<u8>) -> Option<ProtocolMessage> {
        let tally = self.tallies.entry(actor).or_default();
        tally.injected += 1;
        self.transcript.entries.push(TranscriptEntry {
            at: self.now,
            actor,
            to_server: true,
            bytes: bytes.clone(),
        });
        let lost = self.cfg.loss_ppm > 0 && self.rng.next_u32() % 1_000_000 < self.cfg.loss_ppm;
        self.now = self.now.saturating_add(self.cfg.latency);
        if lost {
            self.tallies.entry(actor).or_default().lost += 1;
            return None;
        }
        if bytes.first() == Some(&(MessageType::Response as u8)) {
            if let Ok(ProtocolMessage::Response(r)) = ProtocolMessage::decode(&bytes) {
                if actor == Actor::Skewed {
                    self.observe_skew(&r);
                }
            }
        }
        let before = *self.server.meter();
        let reply_bytes = self.server.handle_bytes(&bytes, self.now, &mut self.rng);
        let delta = self.server.meter().since(&before);
        let reply = ProtocolMessage::decode(&reply_bytes).expect("server replies decode");
        let tally = self.tallies.entry(actor).or_default();
        tally.server_ops.cheap_ops += delta.cheap_ops;
        tally.server_ops.expensive_ops += delta.expensive_ops;
        tally.server_ops.blocked += delta.blocked;
        tally.server_ops.dropped += delta.dropped;
        tally.server_ops.established += delta.established;
        tally.record_reply(&reply);
        self.transcript.entries.push(TranscriptEntry {
            at: self.now,
            actor,
            to_server: false,
            bytes: reply_bytes,
        });
        self.now = self.now.saturating_add(self.cfg.latency);
        Some(reply)
    }

    fn send(&mut self, actor: Actor, msg: ProtocolMessage) -> Option<ProtocolMessage> {
        self.send_bytes(actor, msg.encode())
    }

    /// Records `T - now` as the server will see it, by decrypting with the
    /// skewed client's key (the simulator knows every key).
    fn observe_skew(&mut self, r: &crate::wire::Response) {
        let Some(psk) = self.known_psks.get(&r.client_id).cloned() else {
            return;
        };
        let Ok(plain) =
            crate::crypto::open(&psk, crate::crypto::label::RESPONSE_STAMP, &r.stamp_ct)
        else {
            return;
        };
        let Ok(bytes) = <[u8; 8]>::try_from(plain.as_slice()) else {
            return;
        };
        let t = Timestamp::from_be_bytes(bytes).as_millis() as i128;
        let skew = (t - self.now.as_millis() as i128) as i64;
        self.stamp_skew_ms = Some(match self.stamp_skew_ms {
            None => (skew, skew),
            Some((lo, hi)) => (lo.min(skew), hi.max(skew)),
        });
    }

    /// A full handshake (and optional renewals) for one client. Returns
    /// whether the handshake completed.
    fn handshake(
        &mut self,
        actor: Actor,
        creds: &Credentials,
        clock_offset_ms: i64,
        renewals: u32,
    ) -> bool {
        let config = ClientConfig {
            difficulty_ceiling: self.cfg.client_difficulty_ceiling,
        };
        let mut session = ClientSession::new(config, creds);
        if actor == Actor::Legit {
            self.legit_attempted += 1;
        }
        let Ok(hello) = session.start(creds) else {
            return false;
        };
        let Some(ProtocolMessage::Challenge(ch)) = self.send(actor, hello.into()) else {
            return false;
        };
        let client_now = shift(self.now, clock_offset_ms);
        let Ok(response) = session.on_challenge(creds, &ch, client_now, &mut self.rng) else {
            return false;
        };
        let response_bytes = ProtocolMessage::from(response).encode();
        if actor == Actor::Legit {
            self.captured_responses.push(response_bytes.clone());
        }
        let Some(ProtocolMessage::KeyDelivery(kd)) = self.send_bytes(actor, response_bytes) else {
            return false;
        };
        if !self.confirm(actor, creds, &mut session, &kd) {
            return false;
        }
        if actor == Actor::Legit {
            self.legit_completed += 1;
        }
        for _ in 0..renewals {
            self.advance(Duration::from_secs(1));
            let client_now = shift(self.now, clock_offset_ms);
            let Ok(renew) = session.renew(client_now, &mut self.rng) else {
                break;
            };
            let Some(ProtocolMessage::KeyDelivery(kd)) = self.send(actor, renew.into()) else {
                break;
            };
            if !self.confirm(actor, creds, &mut session, &kd) {
                break;
            }
            self.renewals_completed += 1;
        }
        true
    }

    fn confirm(
        &mut self,
        actor: Actor,
        creds: &Credentials,
        session: &mut ClientSession,
        kd: &crate::wire::KeyDelivery,
    ) -> bool {
        let Ok(confirm) = session.on_key(creds, kd, &mut self.rng) else {
            return false;
        };
        let Some(ProtocolMessage::Established(est)) = self.send(actor, confirm.into()) else {
            return false;
        };
        if session.on_established(creds, &est).is_err() {
            return false;
        }
        self.audit_session(session);
        true
    }

    /// The key the client holds must be the one inside its token, and the
    /// server must not be holding it anywhere.
    fn audit_session(&mut self, session: &ClientSession) {
        let sk = session
            .session_key()
            .expect("established session has a key");
        let in_token = token::open(&self.master_key, session.token_current())
            .ok()
            .and_then(|c| c.session)
            .map(|s| s.session_key);
        if in_token.as_ref() != Some(sk) {
            self.sk_disagreements += 1;
        }
        let image = self.server.state_image();
        if image.windows(KEY_LEN).any(|w| w == sk.as_bytes()) {
            self.server_held_session_keys += 1;
        }
    }

    fn random_flood_hello(&mut self) {
        let id = format!("flood-{:016x}", self.rng.next_u64());
        self.send(
            Actor::RandomFlood,
            Hello {
                client_id: cid(&id),
            }
            .into(),
        );
    }

    /// Gap between hellos that keeps one id under the rate limit.
    fn paced_gap(&self) -> Duration {
        self.cfg.rate_window / self.cfg.rate_max + Duration::from_millis(1)
    }

    fn forge_once(&mut self, insider: &Credentials, stolen: &Token, n: u32) {
        self.advance(self.paced_gap());
        let token = if n.is_multiple_of(2) {
            let mut blob = alloc::vec![0u8; stolen.as_bytes().len()];
            self.rng.fill_bytes(&mut blob);
            Token::from_bytes(blob)
        } else {
            stolen.clone()
        };
        let forged = Credentials {
            token,
            ..insider.clone()
        };
        let config = ClientConfig {
            difficulty_ceiling: self.cfg.client_difficulty_ceiling,
        };
        let mut session = ClientSession::new(config, &forged);
        let hello = session.start(&forged).expect("fresh session");
        let Some(ProtocolMessage::Challenge(ch)) = self.send(Actor::Forger, hello.into()) else {
            return;
        };
        let Ok(response) = session.on_challenge(&forged, &ch, self.now, &mut self.rng) else {
            return;
        };
        self.attacker_hash_ops += session.last_solution().map_or(0, |s| s.attempts);
        if let Some(ProtocolMessage::Drop(d)) = self.send(Actor::Forger, response.into()) {
            use crate::wire::DropReason::*;
            if !matches!(d.reason, BadPuzzle | Replay) {
                self.phase3_reached += 1;
            }
        }
    }

    fn run(&mut self) {
        match self.cfg.workload.clone() {
            Workload::Legitimate { clients, renewals } => {
                let creds: Vec<_> = (0..clients)
                    .map(|i| self.provision(&format!("client-{i}")))
                    .collect();
                self.begin_measurement();
                for c in &creds {
                    self.handshake(Actor::Legit, c, 0, renewals);
                }
            }
            Workload::RandomCidFlood {
                hellos,
                legit_after,
            } => {
                let legit = self.provision("client");
                self.begin_measurement();
                for i in 0..hellos {
                    if i == legit_after {
                        self.handshake(Actor::Legit, &legit, 0, 0);
                    }
                    self.random_flood_hello();
                }
                if legit_after >= hellos {
                    self.handshake(Actor::Legit, &legit, 0, 0);
                }
            }
            Workload::FixedCidFlood { hellos, target } => {
                let legit = self.provision(target.as_deref().unwrap_or("client"));
                let id = if target.is_some() {
                    legit.client_id.clone()
                } else {
                    cid("mallory")
                };
                self.begin_measurement();
                for _ in 0..hellos {
                    self.send(
                        Actor::FixedFlood,
                        Hello {
                            client_id: id.clone(),
                        }
                        .into(),
                    );
                }
                self.handshake(Actor::Legit, &legit, 0, 0);
                if let Some(until) = self.server.rate_table().blocked_until(&id) {
                    if self.now < until {
                        self.now = until;
                    }
                    let reply = self.send(Actor::Probe, Hello { client_id: id }.into());
                    self.post_block_challenged =
                        Some(matches!(reply, Some(ProtocolMessage::Challenge(_))));
                }
            }
            Workload::Replay { replays } => {
                let legit = self.provision("client");
                self.begin_measurement();
                self.handshake(Actor::Legit, &legit, 0, 0);
                if let Some(captured) = self.captured_responses.last().cloned() {
                    for _ in 0..replays {
                        self.send_bytes(Actor::Replayer, captured.clone());
                    }
                }
            }
            Workload::StaleStamp {
                clients,
                clock_offset_ms,
            } => {
                let creds: Vec<_> = (0..clients)
                    .map(|i| self.provision(&format!("skewed-{i}")))
                    .collect();
                let legit = self.provision("client");
                self.begin_measurement();
                for c in &creds {
                    self.handshake(Actor::Skewed, c, clock_offset_ms, 0);
                }
                self.handshake(Actor::Legit, &legit, 0, 0);
            }
            Workload::ForgedToken { attempts } => {
                let insider = self.provision("mallory");
                let victim = self.provision("victim");
                self.begin_measurement();
                for n in 0..attempts {
                    if n == attempts / 2 {
                        self.handshake(Actor::Legit, &victim, 0, 0);
                    }
                    self.forge_once(&insider, &victim.token, n);
                }
                if attempts == 0 {
                    self.handshake(Actor::Legit, &victim, 0, 0);
                }
            }
            Workload::Mixed { rounds } => {
                let insider = self.provision("mallory");
                let legit: Vec<_> = (0..rounds)
                    .map(|i| self.provision(&format!("client-{i}")))
                    .collect();
                self.begin_measurement();
                for (n, c) in legit.iter().enumerate() {
                    for _ in 0..8 {
                        self.random_flood_hello();
                    }
                    for _ in 0..2 {
                        self.send(
                            Actor::FixedFlood,
                            Hello {
                                client_id: cid("flooder"),
                            }
                            .into(),
                        );
                    }
                    self.handshake(Actor::Legit, c, 0, 1);
                    if let Some(captured) = self.captured_responses.last().cloned() {
                        self.send_bytes(Actor::Replayer, captured);
                    }
                    self.forge_once(&insider, &c.token, n as u32);
                }
            }
        }
    }

    fn begin_measurement(&mut self) {
        self.footprint_before = Some(self.server.footprint());
    }
}

/// A finished run: the report and the full transcript.
pub struct SimOutcome {
    pub report: RunReport,
    pub transcript: Transcript,
}

/// Runs `config.workload` under `seed`.
pub fn run(seed: u64, config: &SimConfig) -> Result<SimOutcome, SimError> {
    let mut sim = Sim::new(seed, config.clone())?;
    sim.run();
    let footprint_after = sim.server.footprint();
    let report = RunReport {
        seed,
        workload: config.workload.name(),
        difficulty: config.difficulty.bits(),
        tallies: sim.tallies,
        meter: *sim.server.meter(),
        legit_attempted: sim.legit_attempted,
        legit_completed: sim.legit_completed,
        renewals_completed: sim.renewals_completed,
        sk_disagreements: sim.sk_disagreements,
        server_held_session_keys: sim.server_held_session_keys,
        attacker_hash_ops: sim.attacker_hash_ops,
        phase3_reached: sim.phase3_reached,
        post_block_challenged: sim.post_block_challenged,
        stamp_skew_ms: sim.stamp_skew_ms,
        footprint_before: sim.footprint_before.unwrap_or(footprint_after),
        footprint_after,
        sim_time_ms: sim.now.as_millis() - EPOCH.as_millis(),
    };
    Ok(SimOutcome {
        report,
        transcript: sim.transcript,
    })
}

/// One legitimate handshake under `seed` with `config`'s protocol parameters
/// (its workload is ignored).
pub fn run_handshake(seed: u64, config: &SimConfig) -> Result<SimOutcome, SimError> {
    let config = SimConfig {
        workload: Workload::Legitimate {
            clients: 1,
            renewals: 0,
        },
        ..config.clone()
    };
    run(seed, &config)
}

/// Alias of [`run`] for attack workloads.
pub fn run_attack(seed: u64, config: &SimConfig) -> Result<SimOutcome, SimError> {
    run(seed, config)
}
