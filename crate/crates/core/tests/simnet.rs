use puzzleauth_core::puzzle::Difficulty;
use puzzleauth_core::simnet::{run, run_handshake, Actor, SimConfig, Workload};
use puzzleauth_core::wire::DropReason;

fn config(workload: Workload) -> SimConfig {
    SimConfig {
        workload,
        ..SimConfig::default()
    }
}

#[test]
fn handshake_is_six_messages_and_keys_agree() {
    let out = run_handshake(7, &SimConfig::default()).unwrap();
    assert_eq!(out.transcript.entries.len(), 6);
    let r = &out.report;
    assert_eq!((r.legit_attempted, r.legit_completed), (1, 1));
    assert_eq!(r.sk_disagreements, 0);
    assert_eq!(r.server_held_session_keys, 0);
    assert!(r.is_conserved());
    let kinds: Vec<u8> = out.transcript.entries.iter().map(|e| e.bytes[0]).collect();
    assert_eq!(kinds, [1, 2, 3, 4, 5, 6]);
}

#[test]
fn same_seed_same_bytes_other_seed_other_bytes() {
    let a = run_handshake(11, &SimConfig::default())
        .unwrap()
        .transcript
        .to_bytes();
    // Host time moves on between runs; the transcript must not notice.
    std::thread::sleep(std::time::Duration::from_millis(20));
    let b = run_handshake(11, &SimConfig::default())
        .unwrap()
        .transcript
        .to_bytes();
    let c = run_handshake(12, &SimConfig::default())
        .unwrap()
        .transcript
        .to_bytes();
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn random_flood_costs_nothing_expensive() {
    let out = run(
        3,
        &config(Workload::RandomCidFlood {
            hellos: 500,
            legit_after: 250,
        }),
    )
    .unwrap();
    let r = &out.report;
    assert_eq!(r.flood_expensive_ops(), 0);
    assert_eq!(r.tally(Actor::RandomFlood).challenged, 500);
    assert_eq!(r.legit_completion_rate(), 1.0);
    assert!(r.is_conserved());
}

#[test]
fn fixed_flood_blocks_after_rate_max() {
    let out = run(
        4,
        &config(Workload::FixedCidFlood {
            hellos: 10,
            target: None,
        }),
    )
    .unwrap();
    let t = out.report.tally(Actor::FixedFlood);
    assert_eq!((t.challenged, t.blocked), (3, 7));
    assert_eq!(t.server_ops.expensive_ops, 0);
    assert_eq!(out.report.post_block_challenged, Some(true));
    // A bystander with a different id is unaffected by the block.
    assert_eq!(
        (out.report.legit_attempted, out.report.legit_completed),
        (1, 1)
    );
}

#[test]
fn fixed_flood_on_a_victim_id_locks_the_victim_out() {
    let out = run(
        4,
        &config(Workload::FixedCidFlood {
            hellos: 10,
            target: Some("client-0".into()),
        }),
    )
    .unwrap();
    let r = &out.report;
    assert_eq!((r.legit_attempted, r.legit_completed), (1, 0));
    assert_eq!(r.tally(Actor::Legit).blocked, 1);
    assert_eq!(r.post_block_challenged, Some(true));
}

#[test]
fn transcript_decodes_to_the_success_flow() {
    use puzzleauth_core::wire::MessageType::*;
    let out = run_handshake(1, &SimConfig::default()).unwrap();
    let types: Vec<_> = out
        .transcript
        .messages()
        .iter()
        .map(|m| m.message_type())
        .collect();
    assert_eq!(
        types,
        [
            Hello,
            Challenge,
            Response,
            KeyDelivery,
            Confirm,
            Established
        ]
    );
    let zero = SimConfig {
        difficulty: Difficulty::ZERO,
        ..SimConfig::default()
    };
    assert_eq!(run_handshake(1, &zero).unwrap().report.legit_completed, 1);
}

#[test]
fn replays_are_dropped() {
    let out = run(5, &config(Workload::Replay { replays: 5 })).unwrap();
    let t = out.report.tally(Actor::Replayer);
    assert_eq!(t.dropped_for(DropReason::Replay), 5);
    assert_eq!(t.server_ops.expensive_ops, 0);
}

#[test]
fn skewed_clocks() {
    let window = SimConfig::default().stamp_window;
    let latency = SimConfig::default().latency;
    let edge = (window + latency).as_millis() as i64;
    for (offset, stale) in [
        (edge, false),
        (edge + 1, true),
        (-(window.as_millis() as i64) + 2, false),
    ] {
        let out = run(
            6,
            &config(Workload::StaleStamp {
                clients: 4,
                clock_offset_ms: offset,
            }),
        )
        .unwrap();
        let t = out.report.tally(Actor::Skewed);
        if stale {
            assert_eq!(t.dropped_for(DropReason::StaleStamp), 4, "offset {offset}");
            assert_eq!(t.established, 0);
        } else {
            assert_eq!(t.established, 4, "offset {offset}: {t:?}");
        }
    }
}

#[test]
fn forged_tokens_rejected_after_work() {
    let out = run(8, &config(Workload::ForgedToken { attempts: 6 })).unwrap();
    let r = &out.report;
    let t = r.tally(Actor::Forger);
    assert_eq!(t.dropped_for(DropReason::BadToken), 3);
    assert_eq!(t.dropped_for(DropReason::TokenMismatch), 3);
    assert_eq!(r.phase3_reached, 6);
    assert_eq!(r.legit_completion_rate(), 1.0);
    assert!(r.attacker_hash_ops >= 6);
    assert!(r.cost_asymmetry().unwrap() > 0.0);
}

#[test]
fn mixed_and_renewals() {
    let out = run(9, &config(Workload::Mixed { rounds: 4 })).unwrap();
    let r = &out.report;
    assert_eq!(r.legit_completed, 4);
    assert_eq!(r.renewals_completed, 4);
    assert_eq!(r.sk_disagreements, 0);
    assert_eq!(r.server_held_session_keys, 0);
    assert!(r.is_conserved());
    let lines = r.to_lines();
    assert!(lines.contains("flood_expensive_ops=0\n"), "{lines}");
    assert!(r.to_tsv().starts_with("actor\t"));
}

#[test]
fn loss_is_accounted() {
    let cfg = SimConfig {
        loss_ppm: 300_000,
        ..config(Workload::Legitimate {
            clients: 20,
            renewals: 0,
        })
    };
    let r = run(10, &cfg).unwrap().report;
    let t = r.tally(Actor::Legit);
    assert!(t.lost > 0);
    assert!(r.legit_completed < 20);
    assert!(r.is_conserved());
}

#[test]
fn bad_config_is_an_error() {
    let cfg = SimConfig {
        rate_max: 0,
        difficulty: Difficulty::ZERO,
        ..SimConfig::default()
    };
    assert!(run(1, &cfg).is_err());
}

#[test]
fn outcomes_tsv_has_one_row_per_request() {
    let out = run(
        9,
        &config(Workload::FixedCidFlood {
            hellos: 5,
            target: None,
        }),
    )
    .unwrap();
    let tsv = out.transcript.outcomes_tsv();
    let rows: Vec<&str> = tsv.lines().collect();
    assert_eq!(rows[0], "seq\tat_ms\tactor\trequest\toutcome\tdrop_reason");
    // Header, 5 flood hellos, a bystander's 3-request handshake, the probe.
    assert_eq!(rows.len(), 1 + 5 + 3 + 1);
    assert_eq!(
        rows.iter().filter(|r| r.ends_with("\tblocked\t-")).count(),
        2
    );
    assert_eq!(
        rows.iter()
            .filter(|r| r.ends_with("\tchallenge\t-"))
            .count(),
        5
    );
    assert!(rows
        .iter()
        .any(|r| r.ends_with("\tlegit\tconfirm\testablished\t-")));
}
