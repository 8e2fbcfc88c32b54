//! The CServer side of the handshake.
//!
//! ```text
//! client                               server
//!   Hello{cid}                 ->      rate check, issue puzzle (no lookups)
//!                              <-      Challenge{puzzle}
//!   Response{tkn, sol, puzzle,
//!            cid, {T}_PSK}     ->      puzzle, replay, PSK + stamp, token
//!                              <-      KeyDelivery{{SK}_PSK, tkn'}
//!   Confirm{tkn', {T}_SK}      ->      open tkn', check T under SK
//!                              <-      Established
//!   Renew{tkn', {T'}_SK}       ->      sub-session key SK' inside tkn''
//!                              <-      KeyDelivery{{SK'}_SK, tkn''}
//! ```
//!
//! Session keys live only inside tokens. The server's mutable state is the
//! PSK directory (changed only by provisioning), the rate table, and the
//! replay cache; the latter two are capacity-bounded.

mod meter;
mod rate;
mod replay;

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::time::Duration;

use rand_core::{CryptoRng, RngCore};

pub use meter::CostMeter;
pub use rate::{RateDecision, RateTable};
pub use replay::{ReplayCache, ReplayError, ReplayKey};

use crate::crypto::{self, label, MasterKey, PreSharedKey, SessionKey, SymmetricKey};
use crate::puzzle::{self, Difficulty, OpCount};
use crate::token::{self, Token};
use crate::wire::{
    Blocked, Challenge, Confirm, DropReason, Dropped, Established, Hello, KeyDelivery,
    ProtocolMessage, Renew, Response,
};
use crate::{ClientId, Timestamp};

#[derive(Debug, Clone)]
pub struct ServerConfig {
    pub master_key: MasterKey,
    pub difficulty: Difficulty,
    pub rate_window: Duration,
    pub rate_max: u32,
    pub block_duration: Duration,
    /// Largest accepted |now - T| for a client timestamp.
    pub stamp_window: Duration,
    /// Optional lower bound on T - challenge.issued_at, for experiments with
    /// precomputed responses. Off by default.
    pub min_solve_time: Option<Duration>,
    pub challenge_max_age: Duration,
    pub replay_ttl: Duration,
    pub rate_capacity: usize,
    pub replay_capacity: usize,
}

impl ServerConfig {
    pub const DEFAULT_DIFFICULTY: u32 = 16;

    pub fn new(master_key: MasterKey) -> Self {
        ServerConfig {
            master_key,
            difficulty: Difficulty::new(Self::DEFAULT_DIFFICULTY).expect("in range"),
            rate_window: Duration::from_secs(10),
            rate_max: 3,
            block_duration: Duration::from_secs(60),
            stamp_window: Duration::from_secs(60),
            min_solve_time: None,
            challenge_max_age: Duration::from_secs(60),
            replay_ttl: Duration::from_secs(60),
            rate_capacity: 1 << 16,
            replay_capacity: 1 << 16,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.rate_max == 0 {
            return Err(ConfigError::ZeroRateMax);
        }
        for (name, d) in [
            ("rate_window", self.rate_window),
            ("block_duration", self.block_duration),
            ("stamp_window", self.stamp_window),
            ("challenge_max_age", self.challenge_max_age),
            ("replay_ttl", self.replay_ttl),
        ] {
            if d.is_zero() {
                return Err(ConfigError::ZeroDuration(name));
            }
        }
        if self.replay_ttl < self.challenge_max_age {
            return Err(ConfigError::ReplayTtlTooShort);
        }
        if self.rate_capacity == 0 || self.replay_capacity == 0 {
            return Err(ConfigError::ZeroCapacity);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ConfigError {
    #[error("rate_max must be at least 1")]
    ZeroRateMax,
    #[error("{0} must be positive")]
    ZeroDuration(&'static str),
    #[error("replay_ttl must be at least challenge_max_age, or an expired-from-cache response could be replayed")]
    ReplayTtlTooShort,
    #[error("table capacities must be positive")]
    ZeroCapacity,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("client {0} is already provisioned")]
pub struct DuplicateClient(pub ClientId);

/// Sizes of the server's mutable state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Footprint {
    pub directory_entries: usize,
    pub directory_bytes: usize,
    /// Capacity-bounded.
    pub rate_entries: usize,
    /// Capacity-bounded.
    pub replay_entries: usize,
}

impl Footprint {
    /// Everything except the two capacity-bounded tables.
    pub fn unbounded_part(&self) -> (usize, usize) {
        (self.directory_entries, self.directory_bytes)
    }
}

#[derive(Debug)]
pub struct Server {
    config: ServerConfig,
    cookie_key: SymmetricKey,
    directory: BTreeMap<ClientId, PreSharedKey>,
    rate: RateTable,
    replay: ReplayCache,
    meter: CostMeter,
}

fn decode_stamp(plain: &[u8]) -> Option<Timestamp> {
    plain.try_into().ok().map(Timestamp::from_be_bytes)
}

impl Server {
    pub fn new(config: ServerConfig) -> Result<Self, ConfigError> {
        config.validate()?;
        Ok(Server {
            cookie_key: crypto::derive_key(&config.master_key, label::PUZZLE_COOKIE_KEY),
            rate: RateTable::new(config.rate_capacity),
            replay: ReplayCache::new(config.replay_capacity, config.replay_ttl),
            directory: BTreeMap::new(),
            meter: CostMeter::default(),
            config,
        })
    }

    pub fn config(&self) -> &ServerConfig {
        &self.config
    }

    pub fn meter(&self) -> &CostMeter {
        &self.meter
    }

    pub fn rate_table(&self) -> &RateTable {
        &self.rate
    }

    /// Key the challenge cookies are MACed under, derived from MK.
    pub fn cookie_key(&self) -> &SymmetricKey {
        &self.cookie_key
    }

    pub fn is_provisioned(&self, cid: &ClientId) -> bool {
        self.directory.contains_key(cid)
    }

    /// Registers a client: stores a fresh PSK and mints its token.
    pub fn provision<R: RngCore + CryptoRng>(
        &mut self,
        client_id: ClientId,
        now: Timestamp,
        rng: &mut R,
    ) -> Result<(PreSharedKey, Token), DuplicateClient> {
        if self.directory.contains_key(&client_id) {
            return Err(DuplicateClient(client_id));
        }
        let psk = PreSharedKey::generate(rng);
        let tkn = token::mint(&self.config.master_key, client_id.clone(), now, rng);
        self.directory.insert(client_id, psk.clone());
        Ok((psk, tkn))
    }

    /// Imports an existing registration (e.g. from a credentials file).
    pub fn register(
        &mut self,
        client_id: ClientId,
        psk: PreSharedKey,
    ) -> Result<(), DuplicateClient> {
        if self.directory.contains_key(&client_id) {
            return Err(DuplicateClient(client_id));
        }
        self.directory.insert(client_id, psk);
        Ok(())
    }

    /// Phase 1. Touches only the rate table and the puzzle generator: no
    /// directory lookup, no token work.
    pub fn handle_hello<R: RngCore + CryptoRng>(
        &mut self,
        msg: &Hello,
        now: Timestamp,
        rng: &mut R,
    ) -> ProtocolMessage {
        let c = &self.config;
        match self.rate.check(
            &msg.client_id,
            now,
            c.rate_window,
            c.rate_max,
            c.block_duration,
        ) {
            RateDecision::Blocked { until } => {
                self.meter.blocked += 1;
                Blocked {
                    client_id: msg.client_id.clone(),
                    until,
                }
                .into()
            }
            RateDecision::Allow => {
                self.meter.cheap_ops += 1;
                let puzzle = puzzle::generate_challenge(
                    &self.cookie_key,
                    msg.client_id.clone(),
                    c.difficulty,
                    now,
                    rng,
                );
                Challenge { puzzle }.into()
            }
        }
    }

    fn drop(&mut self, reason: DropReason) -> DropReason {
        self.meter.dropped += 1;
        reason
    }

    /// Phase 2. Checks run cheapest first; nothing expensive happens until
    /// the puzzle and the replay cache have passed.
    pub fn handle_response<R: RngCore + CryptoRng>(
        &mut self,
        msg: &Response,
        now: Timestamp,
        rng: &mut R,
    ) -> Result<KeyDelivery, DropReason> {
        // (1) puzzle
        let mut ops = OpCount::default();
        let verdict = puzzle::verify(
            &self.cookie_key,
            &msg.challenge,
            &msg.preimage_suffix,
            now,
            self.config.challenge_max_age,
            &mut ops,
        );
        self.meter.cheap_ops += ops.total();
        if verdict.is_err() || msg.challenge.client_id != msg.client_id {
            return Err(self.drop(DropReason::BadPuzzle));
        }

        // (2) replay
        match self.replay.check_and_insert(msg.challenge.cookie, now) {
            Ok(()) => {}
            Err(ReplayError::Seen) => return Err(self.drop(DropReason::Replay)),
            Err(ReplayError::Full) => return Err(self.drop(DropReason::Overloaded)),
        }

        // (3) PSK lookup and stamp decryption
        self.meter.expensive_ops += 1;
        let Some(psk) = self.directory.get(&msg.client_id).cloned() else {
            return Err(self.drop(DropReason::NoSuchClient));
        };
        self.meter.expensive_ops += 1;
        let stamp = crypto::open(&psk, label::RESPONSE_STAMP, &msg.stamp_ct)
            .ok()
            .and_then(|p| decode_stamp(&p));
        let Some(stamp) = stamp else {
            return Err(self.drop(DropReason::BadStampCrypto));
        };

        // (4) timestamp plausibility
        if now.abs_diff(stamp) > self.config.stamp_window {
            return Err(self.drop(DropReason::StaleStamp));
        }
        if let Some(min) = self.config.min_solve_time {
            if stamp.saturating_since(msg.challenge.issued_at) < min {
                return Err(self.drop(DropReason::StaleStamp));
            }
        }

        // (5) token
        self.meter.expensive_ops += 1;
        let contents = match token::open(&self.config.master_key, &msg.token) {
            Ok(c) => c,
            Err(_) => return Err(self.drop(DropReason::BadToken)),
        };
        if contents.client_id != msg.client_id {
            return Err(self.drop(DropReason::TokenMismatch));
        }

        // key generation, token extension, key transport
        self.meter.expensive_ops += 3;
        let sk = SessionKey::generate(rng);
        let sk_ct = crypto::seal(&psk, label::SESSION_KEY, sk.as_bytes(), rng);
        let token = token::extend(&self.config.master_key, &contents, sk, stamp, rng);
        Ok(KeyDelivery { sk_ct, token })
    }

    /// Final step: the client proves it holds SK by encrypting T under it.
    pub fn handle_confirm(
        &mut self,
        msg: &Confirm,
        _now: Timestamp,
    ) -> Result<Established, DropReason> {
        self.meter.expensive_ops += 1;
        let contents = match token::open(&self.config.master_key, &msg.token) {
            Ok(c) => c,
            Err(_) => return Err(self.drop(DropReason::BadToken)),
        };
        let Some(session) = contents.session else {
            return Err(self.drop(DropReason::NoSession));
        };
        self.meter.expensive_ops += 1;
        let stamp = crypto::open(&session.session_key, label::CONFIRM_STAMP, &msg.stamp_ct)
            .ok()
            .and_then(|p| decode_stamp(&p));
        let Some(stamp) = stamp else {
            return Err(self.drop(DropReason::BadConfirmCrypto));
        };
        if stamp != session.stamp {
            return Err(self.drop(DropReason::StampMismatch));
        }
        self.meter.established += 1;
        Ok(Established {
            client_id: contents.client_id,
            generation: contents.generation,
        })
    }

    /// Sub-session key: like a key delivery, but SK' is sent under the
    /// current SK and nothing touches the PSK directory.
    pub fn renew_subkey<R: RngCore + CryptoRng>(
        &mut self,
        msg: &Renew,
        now: Timestamp,
        rng: &mut R,
    ) -> Result<KeyDelivery, DropReason> {
        self.meter.cheap_ops += 1;
        let replay_key = crypto::sha256(&[label::RENEW_STAMP, &msg.stamp_ct]);
        if self.replay.contains(&replay_key, now) {
            return Err(self.drop(DropReason::Replay));
        }

        self.meter.expensive_ops += 1;
        let contents = match token::open(&self.config.master_key, &msg.token) {
            Ok(c) => c,
            Err(_) => return Err(self.drop(DropReason::BadToken)),
        };
        let Some(session) = contents.session.as_ref() else {
            return Err(self.drop(DropReason::NoSession));
        };
        self.meter.expensive_ops += 1;
        let stamp = crypto::open(&session.session_key, label::RENEW_STAMP, &msg.stamp_ct)
            .ok()
            .and_then(|p| decode_stamp(&p));
        let Some(stamp) = stamp else {
            return Err(self.drop(DropReason::BadStampCrypto));
        };
        if now.abs_diff(stamp) > self.config.stamp_window {
            return Err(self.drop(DropReason::StaleStamp));
        }
        // Only proven key holders get to occupy replay slots.
        match self.replay.check_and_insert(replay_key, now) {
            Ok(()) => {}
            Err(ReplayError::Seen) => return Err(self.drop(DropReason::Replay)),
            Err(ReplayError::Full) => return Err(self.drop(DropReason::Overloaded)),
        }

        self.meter.expensive_ops += 3;
        let sub_key = SessionKey::generate(rng);
        let sk_ct = crypto::seal(
            &session.session_key,
            label::SUB_KEY,
            sub_key.as_bytes(),
            rng,
        );
        let token = token::extend(&self.config.master_key, &contents, sub_key, stamp, rng);
        Ok(KeyDelivery { sk_ct, token })
    }

    /// Dispatches any client-to-server message; returns the reply.
    pub fn handle<R: RngCore + CryptoRng>(
        &mut self,
        msg: &ProtocolMessage,
        now: Timestamp,
        rng: &mut R,
    ) -> ProtocolMessage {
        let reply = match msg {
            ProtocolMessage::Hello(m) => return self.handle_hello(m, now, rng),
            ProtocolMessage::Response(m) => self.handle_response(m, now, rng).map(Into::into),
            ProtocolMessage::Confirm(m) => self.handle_confirm(m, now).map(Into::into),
            ProtocolMessage::Renew(m) => self.renew_subkey(m, now, rng).map(Into::into),
            _ => Err(self.drop(DropReason::Malformed)),
        };
        reply.unwrap_or_else(|reason| Dropped { reason }.into())
    }

    pub fn handle_bytes<R: RngCore + CryptoRng>(
        &mut self,
        bytes: &[u8],
        now: Timestamp,
        rng: &mut R,
    ) -> Vec<u8> {
        match ProtocolMessage::decode(bytes) {
            Ok(m) => self.handle(&m, now, rng).encode(),
            Err(_) => {
                let reason = self.drop(DropReason::Malformed);
                ProtocolMessage::from(Dropped { reason }).encode()
            }
        }
    }

    pub fn footprint(&self) -> Footprint {
        Footprint {
            directory_entries: self.directory.len(),
            directory_bytes: self
                .directory
                .keys()
                .map(|c| c.as_bytes().len() + crypto::KEY_LEN)
                .sum(),
            rate_entries: self.rate.len(),
            replay_entries: self.replay.len(),
        }
    }

    /// Raw bytes of every piece of mutable state, for inspection in tests
    /// (e.g. asserting that no session key is held anywhere).
    pub fn state_image(&self) -> Vec<u8> {
        let mut out = Vec::new();
        for (cid, psk) in &self.directory {
            out.extend_from_slice(cid.as_bytes());
            out.extend_from_slice(psk.as_bytes());
        }
        self.rate.append_image(&mut out);
        self.replay.append_image(&mut out);
        out
    }
}
