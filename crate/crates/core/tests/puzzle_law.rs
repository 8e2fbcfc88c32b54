//! Solver cost against the geometric-distribution expectation, checked with
//! an independent hash and bit-count oracle.

use std::time::Duration;

use puzzleauth_core::crypto::SymmetricKey;
use puzzleauth_core::puzzle::{self, Difficulty, OpCount, PuzzleReject};
use puzzleauth_core::{ClientId, Timestamp};
use rand_chacha::ChaCha20Rng;
use rand_core::SeedableRng;
use sha2::{Digest, Sha256};

const NOW: Timestamp = Timestamp::from_millis(5_000);
const AGE: Duration = Duration::from_secs(60);

fn oracle_zero_bits(nonce: &[u8], cid: &str, suffix: &[u8]) -> u32 {
    let d = Sha256::new()
        .chain_update(nonce)
        .chain_update(cid)
        .chain_update(suffix)
        .finalize();
    let bits: String = d.iter().map(|b| format!("{b:08b}")).collect();
    bits.chars().take_while(|c| *c == '0').count() as u32
}

fn mean_attempts(bits: u32, runs: u32, seed: u64) -> f64 {
    let key = SymmetricKey::from_bytes([42; 32]);
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let cid = ClientId::new("bench").unwrap();
    let d = Difficulty::new(bits).unwrap();
    let mut total = 0u64;
    for _ in 0..runs {
        let c = puzzle::generate_challenge(&key, cid.clone(), d, NOW, &mut rng);
        let s = puzzle::solve(&c);
        assert!(oracle_zero_bits(&c.server_nonce, "bench", &s.preimage_suffix) >= bits);
        total += s.attempts;
    }
    total as f64 / runs as f64
}

#[test]
fn mean_attempts_track_two_to_the_n() {
    for (bits, seed) in [(4, 1), (8, 2), (10, 3)] {
        let mean = mean_attempts(bits, 200, seed);
        let expected = 2f64.powi(bits as i32);
        let rel = (mean - expected).abs() / expected;
        assert!(rel <= 0.25, "n={bits}: mean {mean} vs {expected}");
    }
}

#[test]
fn solutions_verify_at_every_small_difficulty() {
    let key = SymmetricKey::from_bytes([1; 32]);
    let mut rng = ChaCha20Rng::seed_from_u64(77);
    for bits in 0..=16 {
        let c = puzzle::generate_challenge(
            &key,
            ClientId::new("x").unwrap(),
            Difficulty::new(bits).unwrap(),
            NOW,
            &mut rng,
        );
        let s = puzzle::solve(&c);
        let mut ops = OpCount::default();
        assert_eq!(
            puzzle::verify(&key, &c, &s.preimage_suffix, NOW, AGE, &mut ops),
            Ok(())
        );
        assert_eq!((ops.macs, ops.hashes), (1, 1));
        // The counter search is exhaustive: nothing before the winner solves.
        let winner = u64::from_be_bytes(s.preimage_suffix.clone().try_into().unwrap());
        assert_eq!(winner + 1, s.attempts);
        for earlier in winner.saturating_sub(64)..winner {
            assert!(oracle_zero_bits(&c.server_nonce, "x", &earlier.to_be_bytes()) < bits);
        }
    }
    assert_eq!(
        puzzle::solve(&puzzle::generate_challenge(
            &key,
            ClientId::new("x").unwrap(),
            Difficulty::ZERO,
            NOW,
            &mut rng
        ))
        .attempts,
        1
    );
}

#[test]
fn verify_costs_at_most_one_mac_and_one_hash() {
    let key = SymmetricKey::from_bytes([2; 32]);
    let mut rng = ChaCha20Rng::seed_from_u64(78);
    let c = puzzle::generate_challenge(
        &key,
        ClientId::new("y").unwrap(),
        Difficulty::new(20).unwrap(),
        NOW,
        &mut rng,
    );
    let mut ops = OpCount::default();
    for i in 0..100u64 {
        let _ = puzzle::verify(&key, &c, &i.to_be_bytes(), NOW, AGE, &mut ops);
    }
    assert_eq!((ops.macs, ops.hashes), (100, 100));

    let mut forged = c.clone();
    forged.cookie[0] ^= 1;
    let mut ops = OpCount::default();
    assert_eq!(
        puzzle::verify(&key, &forged, &[0], NOW, AGE, &mut ops),
        Err(PuzzleReject::BadCookie)
    );
    assert_eq!((ops.macs, ops.hashes), (1, 0));

    let later = Timestamp(NOW.as_millis() + AGE.as_millis() as u64 + 1);
    let mut ops = OpCount::default();
    assert_eq!(
        puzzle::verify(&key, &c, &[0], later, AGE, &mut ops),
        Err(PuzzleReject::Expired)
    );
    assert_eq!((ops.macs, ops.hashes), (1, 0));
}

#[test]
fn expected_cost_is_power_of_two() {
    for bits in [0u32, 1, 8, 16, 64] {
        assert_eq!(
            puzzle::expected_cost(Difficulty::new(bits).unwrap()),
            2u128.pow(bits)
        );
    }
    assert!(Difficulty::new(65).is_err());
}
