//! Hash-preimage client puzzles.
//!
//! The server answers a hello with a [`PuzzleChallenge`] and forgets about
//! it. The challenge carries a cookie, an HMAC over its own fields under a
//! key derived from the server master key, so when the client echoes it back
//! the server can recognise its own challenge without having stored anything.
//!
//! A solution is a suffix `s` such that
//! `SHA-256(server_nonce || client_id || s)` starts with at least
//! `difficulty` zero bits. Finding one costs `2^difficulty` hashes on
//! average; checking one costs a single hash.

use alloc::vec::Vec;
use core::time::Duration;

use rand_core::{CryptoRng, RngCore};
use sha2::{Digest, Sha256};

use crate::codec::{CodecError, TlvReader, TlvWriter};
use crate::crypto::{self, SymmetricKey, DIGEST_LEN};
use crate::{ClientId, Timestamp};

pub const NONCE_LEN: usize = 16;
pub const MAX_DIFFICULTY: u8 = 64;

/// Number of leading zero bits a solution digest must have.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Difficulty(u8);

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("difficulty {0} is outside 0..={MAX_DIFFICULTY}")]
pub struct DifficultyOutOfRange(pub u32);

impl Difficulty {
    pub const ZERO: Difficulty = Difficulty(0);

    pub fn new(bits: u32) -> Result<Self, DifficultyOutOfRange> {
        if bits <= MAX_DIFFICULTY as u32 {
            Ok(Difficulty(bits as u8))
        } else {
            Err(DifficultyOutOfRange(bits))
        }
    }

    pub fn bits(self) -> u32 {
        self.0 as u32
    }
}

/// Counts primitive evaluations so callers can account for verification cost.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct OpCount {
    pub macs: u64,
    pub hashes: u64,
}

impl OpCount {
    pub fn total(&self) -> u64 {
        self.macs + self.hashes
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PuzzleChallenge {
    pub server_nonce: [u8; NONCE_LEN],
    pub client_id: ClientId,
    pub difficulty: Difficulty,
    pub issued_at: Timestamp,
    pub cookie: [u8; DIGEST_LEN],
}

mod tag {
    pub const NONCE: u8 = 1;
    pub const CLIENT_ID: u8 = 2;
    pub const DIFFICULTY: u8 = 3;
    pub const ISSUED_AT: u8 = 4;
    pub const COOKIE: u8 = 5;
}

fn cookie_input(
    nonce: &[u8; NONCE_LEN],
    client_id: &ClientId,
    difficulty: Difficulty,
    issued_at: Timestamp,
) -> Vec<u8> {
    let mut w = TlvWriter::new();
    w.bytes(tag::NONCE, nonce)
        .bytes(tag::CLIENT_ID, client_id.as_bytes())
        .u8(tag::DIFFICULTY, difficulty.0)
        .u64(tag::ISSUED_AT, issued_at.as_millis());
    w.finish()
}

impl PuzzleChallenge {
    /// TLV encoding of all five fields in declaration order.
    pub fn encode(&self) -> Vec<u8> {
        let mut out = cookie_input(
            &self.server_nonce,
            &self.client_id,
            self.difficulty,
            self.issued_at,
        );
        let mut w = TlvWriter::new();
        w.bytes(tag::COOKIE, &self.cookie);
        out.extend_from_slice(&w.finish());
        out
    }

    pub fn decode(buf: &[u8]) -> Result<Self, CodecError> {
        let mut r = TlvReader::new(buf);
        let server_nonce = r.array(tag::NONCE)?;
        let client_id = core::str::from_utf8(r.bytes(tag::CLIENT_ID)?)
            .ok()
            .and_then(|s| ClientId::new(s).ok())
            .ok_or(CodecError::BadValue(tag::CLIENT_ID))?;
        let difficulty = Difficulty::new(r.u8(tag::DIFFICULTY)? as u32)
            .map_err(|_| CodecError::BadValue(tag::DIFFICULTY))?;
        let issued_at = Timestamp(r.u64(tag::ISSUED_AT)?);
        let cookie = r.array(tag::COOKIE)?;
        r.finish()?;
        Ok(PuzzleChallenge {
            server_nonce,
            client_id,
            difficulty,
            issued_at,
            cookie,
        })
    }

    /// Checks the cookie only. One MAC evaluation.
    pub fn verify_cookie(&self, mac_key: &SymmetricKey) -> bool {
        let input = cookie_input(
            &self.server_nonce,
            &self.client_id,
            self.difficulty,
            self.issued_at,
        );
        crypto::hmac_sha256_verify(mac_key, &input, &self.cookie)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PuzzleSolution {
    pub preimage_suffix: Vec<u8>,
    /// Candidates tried, including the winning one. Not sent on the wire.
    pub attempts: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum PuzzleReject {
    #[error("challenge cookie does not verify")]
    BadCookie,
    #[error("solution digest has too few leading zero bits")]
    BadSolution,
    #[error("challenge is older than the allowed age")]
    Expired,
}

/// Issues a challenge. Nothing about it needs to be retained by the caller.
pub fn generate_challenge<R: RngCore + CryptoRng>(
    mac_key: &SymmetricKey,
    client_id: ClientId,
    difficulty: Difficulty,
    now: Timestamp,
    rng: &mut R,
) -> PuzzleChallenge {
    let mut server_nonce = [0u8; NONCE_LEN];
    rng.fill_bytes(&mut server_nonce);
    let cookie = crypto::hmac_sha256(
        mac_key,
        &cookie_input(&server_nonce, &client_id, difficulty, now),
    );
    PuzzleChallenge {
        server_nonce,
        client_id,
        difficulty,
        issued_at: now,
        cookie,
    }
}

pub fn leading_zero_bits(digest: &[u8]) -> u32 {
    let mut n = 0;
    for &b in digest {
        if b == 0 {
            n += 8;
        } else {
            return n + b.leading_zeros();
        }
    }
    n
}

pub fn solution_digest(challenge: &PuzzleChallenge, suffix: &[u8]) -> [u8; DIGEST_LEN] {
    crypto::sha256(&[
        &challenge.server_nonce,
        challenge.client_id.as_bytes(),
        suffix,
    ])
}

/// Brute-forces a suffix. Candidates are the big-endian encodings of
/// 0, 1, 2, ... as 8-byte counters; the challenge nonce already makes every
/// search independent.
pub fn solve(challenge: &PuzzleChallenge) -> PuzzleSolution {
    let mut prefix = Sha256::new();
    prefix.update(challenge.server_nonce);
    prefix.update(challenge.client_id.as_bytes());
    let want = challenge.difficulty.bits();
    let mut counter: u64 = 0;
    loop {
        let candidate = counter.to_be_bytes();
        let digest: [u8; DIGEST_LEN] = prefix.clone().chain_update(candidate).finalize().into();
        if leading_zero_bits(&digest) >= want {
            return PuzzleSolution {
                preimage_suffix: candidate.to_vec(),
                attempts: counter + 1,
            };
        }
        counter = counter.wrapping_add(1);
    }
}

/// Server-side check: cookie, age, then the zero-bit predicate.
///
/// Costs at most one MAC and one hash whatever the difficulty; `ops` is
/// incremented for each primitive actually evaluated.
pub fn verify(
    mac_key: &SymmetricKey,
    challenge: &PuzzleChallenge,
    preimage_suffix: &[u8],
    now: Timestamp,
    max_age: Duration,
    ops: &mut OpCount,
) -> Result<(), PuzzleReject> {
    ops.macs += 1;
    if !challenge.verify_cookie(mac_key) {
        return Err(PuzzleReject::BadCookie);
    }
    if now.saturating_since(challenge.issued_at) > max_age {
        return Err(PuzzleReject::Expired);
    }
    ops.hashes += 1;
    if leading_zero_bits(&solution_digest(challenge, preimage_suffix)) < challenge.difficulty.bits()
    {
        return Err(PuzzleReject::BadSolution);
    }
    Ok(())
}

/// Expected number of hash evaluations to solve a puzzle: `2^difficulty`.
pub fn expected_cost(difficulty: Difficulty) -> u128 {
    1u128 << difficulty.bits()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand_chacha::ChaCha20Rng;
    use rand_core::{RngCore, SeedableRng};

    fn key() -> SymmetricKey {
        SymmetricKey::from_bytes([7; 32])
    }

    fn alice() -> ClientId {
        ClientId::new("alice").unwrap()
    }

    fn challenge(bits: u32, seed: u64) -> PuzzleChallenge {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        generate_challenge(
            &key(),
            alice(),
            Difficulty::new(bits).unwrap(),
            Timestamp(1_000),
            &mut rng,
        )
    }

    // Independent of `leading_zero_bits`: walks the digest bit by bit.
    fn zero_prefix_oracle(digest: &[u8], bits: u32) -> bool {
        (0..bits as usize).all(|i| digest[i / 8] & (0x80 >> (i % 8)) == 0)
    }

    #[test]
    fn difficulty_bounds() {
        assert!(Difficulty::new(64).is_ok());
        assert_eq!(Difficulty::new(65), Err(DifficultyOutOfRange(65)));
    }

    #[test]
    fn difficulty_zero_challenge() {
        let c = challenge(0, 7);
        assert_eq!(c.server_nonce.len(), 16);
        assert!(c.verify_cookie(&key()));
        let s = solve(&c);
        assert_eq!(s.attempts, 1);
    }

    #[test]
    fn deterministic_under_seed() {
        assert_eq!(challenge(0, 7), challenge(0, 7));
        assert_ne!(challenge(0, 7).server_nonce, challenge(0, 8).server_nonce);
    }

    #[test]
    fn cookie_tamper_detected_on_every_byte() {
        let c = challenge(8, 7);
        let enc = c.encode();
        for i in 0..enc.len() {
            let mut m = enc.clone();
            m[i] ^= 0x01;
            // Either the encoding no longer parses or the cookie fails.
            if let Ok(d) = PuzzleChallenge::decode(&m) {
                assert!(!d.verify_cookie(&key()), "byte {i} mutation accepted");
            }
        }
        let mut c2 = c.clone();
        c2.cookie[0] ^= 0xff;
        let mut ops = OpCount::default();
        assert_eq!(
            verify(
                &key(),
                &c2,
                &solve(&c).preimage_suffix,
                Timestamp(1_000),
                Duration::from_secs(60),
                &mut ops
            ),
            Err(PuzzleReject::BadCookie)
        );
    }

    #[test]
    fn foreign_key_rejected() {
        let c = challenge(0, 1);
        assert!(!c.verify_cookie(&SymmetricKey::from_bytes([8; 32])));
    }

    #[test]
    fn seed_42_difficulty_8_verifies_independently() {
        let c = challenge(8, 42);
        let s = solve(&c);
        let digest = crypto::sha256(&[&c.server_nonce, b"alice", &s.preimage_suffix]);
        assert!(zero_prefix_oracle(&digest, 8));
        let mut ops = OpCount::default();
        verify(
            &key(),
            &c,
            &s.preimage_suffix,
            Timestamp(1_000),
            Duration::from_secs(1),
            &mut ops,
        )
        .unwrap();
        assert_eq!(ops, OpCount { macs: 1, hashes: 1 });
    }

    #[test]
    fn flipped_suffix_bytes_rejected() {
        // For this vector every single-bit flip of every suffix byte was
        // checked by brute force with the oracle; all fail the predicate.
        let c = challenge(10, 42);
        let s = solve(&c);
        for i in 0..s.preimage_suffix.len() {
            for bit in 0..8 {
                let mut m = s.preimage_suffix.clone();
                m[i] ^= 1 << bit;
                let d = crypto::sha256(&[&c.server_nonce, b"alice", &m]);
                assert!(!zero_prefix_oracle(&d, 10));
                let mut ops = OpCount::default();
                assert_eq!(
                    verify(
                        &key(),
                        &c,
                        &m,
                        Timestamp(1_000),
                        Duration::from_secs(1),
                        &mut ops
                    ),
                    Err(PuzzleReject::BadSolution)
                );
            }
        }
    }

    #[test]
    fn expiry_boundary() {
        let c = challenge(4, 3);
        let s = solve(&c);
        let max_age = Duration::from_millis(500);
        let mut ops = OpCount::default();
        assert!(verify(
            &key(),
            &c,
            &s.preimage_suffix,
            Timestamp(1_500),
            max_age,
            &mut ops
        )
        .is_ok());
        assert_eq!(
            verify(
                &key(),
                &c,
                &s.preimage_suffix,
                Timestamp(1_501),
                max_age,
                &mut ops
            ),
            Err(PuzzleReject::Expired)
        );
    }

    #[test]
    fn expected_cost_values() {
        assert_eq!(expected_cost(Difficulty::new(0).unwrap()), 1);
        assert_eq!(expected_cost(Difficulty::new(10).unwrap()), 1024);
        assert_eq!(expected_cost(Difficulty::new(20).unwrap()), 1_048_576);
        assert_eq!(expected_cost(Difficulty::new(64).unwrap()), 1u128 << 64);
    }

    #[test]
    fn leading_zero_bits_matches_oracle() {
        let d = [0x00, 0x0f, 0xff];
        assert_eq!(leading_zero_bits(&d), 12);
        assert_eq!(leading_zero_bits(&[0u8; 4]), 32);
        for bits in 0..=24 {
            assert_eq!(zero_prefix_oracle(&d, bits), leading_zero_bits(&d) >= bits);
        }
    }

    #[test]
    fn random_cookies_never_verify() {
        let mut rng = ChaCha20Rng::seed_from_u64(99);
        let mut c = challenge(8, 5);
        for _ in 0..10_000 {
            rng.fill_bytes(&mut c.cookie);
            assert!(!c.verify_cookie(&key()));
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn solve_then_verify_accepts(bits in 0u32..=12, seed in any::<u64>()) {
            let c = challenge(bits, seed);
            let s = solve(&c);
            let mut ops = OpCount::default();
            prop_assert!(verify(&key(), &c, &s.preimage_suffix, Timestamp(2_000), Duration::from_secs(5), &mut ops).is_ok());
            prop_assert!(zero_prefix_oracle(&solution_digest(&c, &s.preimage_suffix), bits));
        }

        #[test]
        fn encoding_roundtrips(bits in 0u32..=64, seed in any::<u64>()) {
            let c = challenge(bits, seed);
            prop_assert_eq!(PuzzleChallenge::decode(&c.encode()).unwrap(), c);
        }
    }
}
