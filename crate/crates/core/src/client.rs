//! The client side of the handshake.
//!
//! ```text
//! Idle --start--> AwaitChallenge --on_challenge--> AwaitKey --on_key--> Confirming
//!   ^                                                                      |
//!   |                                                              on_established
//!   +--reset (any Drop/Blocked)                                            v
//!                          Renewing <--renew-- Established <---------------+
//!                              |                    ^
//!                              +--on_key--> Confirming
//! ```

use core::fmt;

use rand_core::{CryptoRng, RngCore};

use crate::crypto::{self, label, PreSharedKey, SessionKey};
use crate::puzzle::{self, Difficulty, PuzzleChallenge, PuzzleSolution};
use crate::token::Token;
use crate::wire::{Challenge, Confirm, Established, Hello, KeyDelivery, Renew, Response};
use crate::{ClientId, Timestamp};

/// What a registered client holds. The token is opaque: the client cannot
/// open it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Credentials {
    pub client_id: ClientId,
    pub psk: PreSharedKey,
    pub token: Token,
}

#[derive(Debug, Clone, Copy)]
pub struct ClientConfig {
    /// Challenges above this difficulty are refused, so a rogue server
    /// cannot burn the client's CPU.
    pub difficulty_ceiling: Difficulty,
}

impl Default for ClientConfig {
    fn default() -> Self {
        ClientConfig {
            difficulty_ceiling: Difficulty::new(24).expect("in range"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SessionState {
    Idle,
    AwaitChallenge,
    AwaitKey,
    Confirming,
    Established,
    /// Waiting for a sub-session key; the current key stays in use.
    Renewing,
}

impl fmt::Display for SessionState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ClientError {
    #[error("{operation} is not allowed in state {state}")]
    WrongState {
        operation: &'static str,
        state: SessionState,
    },
    #[error("challenge difficulty {offered} exceeds ceiling {ceiling}")]
    DifficultyTooHigh { offered: u32, ceiling: u32 },
    #[error("challenge was issued for another client id")]
    ForeignChallenge,
    #[error("established message names another client id")]
    ForeignEstablished,
    #[error("could not decrypt the delivered session key; session aborted")]
    KeyDecrypt,
}

#[derive(Debug, Clone)]
pub struct ClientSession {
    config: ClientConfig,
    state: SessionState,
    challenge: Option<PuzzleChallenge>,
    last_solution: Option<PuzzleSolution>,
    sent_stamp: Option<Timestamp>,
    session_key: Option<SessionKey>,
    token_current: Token,
    generation: Option<u32>,
}

impl ClientSession {
    pub fn new(config: ClientConfig, creds: &Credentials) -> Self {
        ClientSession {
            config,
            state: SessionState::Idle,
            challenge: None,
            last_solution: None,
            sent_stamp: None,
            session_key: None,
            token_current: creds.token.clone(),
            generation: None,
        }
    }

    pub fn state(&self) -> SessionState {
        self.state
    }

    pub fn session_key(&self) -> Option<&SessionKey> {
        self.session_key.as_ref()
    }

    pub fn token_current(&self) -> &Token {
        &self.token_current
    }

    pub fn sent_stamp(&self) -> Option<Timestamp> {
        self.sent_stamp
    }

    pub fn last_solution(&self) -> Option<&PuzzleSolution> {
        self.last_solution.as_ref()
    }

    /// Generation reported by the server's last `Established`.
    pub fn generation(&self) -> Option<u32> {
        self.generation
    }

    fn expect(&self, operation: &'static str, allowed: &[SessionState]) -> Result<(), ClientError> {
        if allowed.contains(&self.state) {
            Ok(())
        } else {
            Err(ClientError::WrongState {
                operation,
                state: self.state,
            })
        }
    }

    /// Back to `Idle`, keeping the latest token (a keyed token is still a
    /// valid registration token for the next handshake).
    pub fn reset(&mut self) {
        self.state = SessionState::Idle;
        self.challenge = None;
        self.sent_stamp = None;
        self.session_key = None;
    }

    /// First flight: the client id and nothing else.
    pub fn start(&mut self, creds: &Credentials) -> Result<Hello, ClientError> {
        self.expect("start", &[SessionState::Idle])?;
        self.state = SessionState::AwaitChallenge;
        Ok(Hello {
            client_id: creds.client_id.clone(),
        })
    }

    /// Solves the puzzle and sends `{T}_PSK` with T = `now`.
    pub fn on_challenge<R: RngCore + CryptoRng>(
        &mut self,
        creds: &Credentials,
        msg: &Challenge,
        now: Timestamp,
        rng: &mut R,
    ) -> Result<Response, ClientError> {
        self.expect("on_challenge", &[SessionState::AwaitChallenge])?;
        let c = &msg.puzzle;
        if c.client_id != creds.client_id {
            return Err(ClientError::ForeignChallenge);
        }
        if c.difficulty > self.config.difficulty_ceiling {
            self.reset();
            return Err(ClientError::DifficultyTooHigh {
                offered: c.difficulty.bits(),
                ceiling: self.config.difficulty_ceiling.bits(),
            });
        }
        let solution = puzzle::solve(c);
        let stamp_ct = crypto::seal(&creds.psk, label::RESPONSE_STAMP, &now.to_be_bytes(), rng);
        let response = Response {
            token: self.token_current.clone(),
            preimage_suffix: solution.preimage_suffix.clone(),
            challenge: c.clone(),
            client_id: creds.client_id.clone(),
            stamp_ct,
        };
        self.challenge = Some(c.clone());
        self.last_solution = Some(solution);
        self.sent_stamp = Some(now);
        self.state = SessionState::AwaitKey;
        Ok(response)
    }

    /// Decrypts the delivered key (under the PSK after a response, under the
    /// current SK after a renewal) and confirms it by sending back the token
    /// and `{T}_SK`.
    pub fn on_key<R: RngCore + CryptoRng>(
        &mut self,
        creds: &Credentials,
        msg: &KeyDelivery,
        rng: &mut R,
    ) -> Result<Confirm, ClientError> {
        self.expect("on_key", &[SessionState::AwaitKey, SessionState::Renewing])?;
        let plain = match self.state {
            SessionState::AwaitKey => crypto::open(&creds.psk, label::SESSION_KEY, &msg.sk_ct),
            _ => {
                let current = self
                    .session_key
                    .as_ref()
                    .expect("renewing implies a session key");
                crypto::open(current, label::SUB_KEY, &msg.sk_ct)
            }
        };
        let Some(sk) = plain.ok().and_then(|p| SessionKey::from_slice(&p).ok()) else {
            self.reset();
            return Err(ClientError::KeyDecrypt);
        };
        let stamp = self.sent_stamp.expect("stamp recorded before key delivery");
        let stamp_ct = crypto::seal(&sk, label::CONFIRM_STAMP, &stamp.to_be_bytes(), rng);
        self.session_key = Some(sk);
        self.token_current = msg.token.clone();
        self.state = SessionState::Confirming;
        Ok(Confirm {
            token: msg.token.clone(),
            stamp_ct,
        })
    }

    /// Out-of-order messages are refused and leave the session untouched.
    pub fn on_established(
        &mut self,
        creds: &Credentials,
        msg: &Established,
    ) -> Result<(), ClientError> {
        self.expect("on_established", &[SessionState::Confirming])?;
        if msg.client_id != creds.client_id {
            return Err(ClientError::ForeignEstablished);
        }
        self.generation = Some(msg.generation);
        self.state = SessionState::Established;
        Ok(())
    }

    /// Asks for a sub-session key, proving possession of the current SK with
    /// `{T}_SK`, T = `now`.
    pub fn renew<R: RngCore + CryptoRng>(
        &mut self,
        now: Timestamp,
        rng: &mut R,
    ) -> Result<Renew, ClientError> {
        self.expect("renew", &[SessionState::Established])?;
        let sk = self
            .session_key
            .as_ref()
            .expect("established implies a session key");
        let stamp_ct = crypto::seal(sk, label::RENEW_STAMP, &now.to_be_bytes(), rng);
        self.sent_stamp = Some(now);
        self.state = SessionState::Renewing;
        Ok(Renew {
            token: self.token_current.clone(),
            stamp_ct,
        })
    }
}
