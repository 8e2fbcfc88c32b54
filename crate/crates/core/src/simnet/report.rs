//! Per-run tallies and their text export.

use alloc::collections::BTreeMap;
use alloc::string::String;
use core::fmt::{self, Write};

use crate::server::{CostMeter, Footprint};
use crate::wire::{DropReason, ProtocolMessage};

/// Who sent a message. Server work is attributed to the sender of the
/// message that caused it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Actor {
    Legit,
    RandomFlood,
    FixedFlood,
    /// The single hello sent after a fixed-CID block has expired.
    Probe,
    Replayer,
    Skewed,
    Forger,
}

impl Actor {
    pub const ALL: [Actor; 7] = [
        Actor::Legit,
        Actor::RandomFlood,
        Actor::FixedFlood,
        Actor::Probe,
        Actor::Replayer,
        Actor::Skewed,
        Actor::Forger,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Actor::Legit => "legit",
            Actor::RandomFlood => "random_flood",
            Actor::FixedFlood => "fixed_flood",
            Actor::Probe => "probe",
            Actor::Replayer => "replayer",
            Actor::Skewed => "skewed",
            Actor::Forger => "forger",
        }
    }

    pub(crate) fn code(self) -> u8 {
        Actor::ALL.iter().position(|a| *a == self).expect("listed") as u8
    }
}

impl fmt::Display for Actor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// What happened to the messages one actor injected. Every injected message
/// is either lost in transit or gets exactly one reply, so
/// `injected == lost + challenged + blocked + key_delivered + established + dropped`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Tally {
    pub injected: u64,
    pub lost: u64,
    pub challenged: u64,
    pub blocked: u64,
    pub key_delivered: u64,
    pub established: u64,
    pub dropped: BTreeMap<DropReason, u64>,
    /// Server work caused by this actor's messages.
    pub server_ops: CostMeter,
}

impl Tally {
    pub fn dropped_total(&self) -> u64 {
        self.dropped.values().sum()
    }

    pub fn dropped_for(&self, reason: DropReason) -> u64 {
        self.dropped.get(&reason).copied().unwrap_or(0)
    }

    pub fn is_conserved(&self) -> bool {
        self.injected
            == self.lost
                + self.challenged
                + self.blocked
                + self.key_delivered
                + self.established
                + self.dropped_total()
    }

    pub(crate) fn record_reply(&mut self, reply: &ProtocolMessage) {
        match reply {
            ProtocolMessage::Challenge(_) => self.challenged += 1,
            ProtocolMessage::Blocked(_) => self.blocked += 1,
            ProtocolMessage::KeyDelivery(_) => self.key_delivered += 1,
            ProtocolMessage::Established(_) => self.established += 1,
            ProtocolMessage::Drop(d) => *self.dropped.entry(d.reason).or_default() += 1,
            // The server only ever sends the five kinds above.
            _ => *self.dropped.entry(DropReason::Malformed).or_default() += 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub seed: u64,
    pub workload: &'static str,
    pub difficulty: u32,
    pub tallies: BTreeMap<Actor, Tally>,
    /// Server counters over the whole run.
    pub meter: CostMeter,
    pub legit_attempted: u64,
    pub legit_completed: u64,
    pub renewals_completed: u64,
    /// Completed handshakes (or renewals) where the client's key differs
    /// from the key sealed inside its token.
    pub sk_disagreements: u64,
    /// Session keys found anywhere in the server's mutable state.
    pub server_held_session_keys: u64,
    /// Puzzle attempts made by attackers that solve puzzles.
    pub attacker_hash_ops: u64,
    /// Attacker responses that got past the puzzle and replay checks.
    pub phase3_reached: u64,
    /// Whether a hello sent once a fixed-CID block expired was challenged.
    pub post_block_challenged: Option<bool>,
    /// Extremes of `T - now` observed at the server for skewed clients, ms.
    pub stamp_skew_ms: Option<(i64, i64)>,
    pub footprint_before: Footprint,
    pub footprint_after: Footprint,
    pub sim_time_ms: u64,
}

impl RunReport {
    pub fn tally(&self, actor: Actor) -> Tally {
        self.tallies.get(&actor).cloned().unwrap_or_default()
    }

    /// Server work attributed to flooding actors.
    pub fn flood_expensive_ops(&self) -> u64 {
        [Actor::RandomFlood, Actor::FixedFlood]
            .iter()
            .map(|a| self.tally(*a).server_ops.expensive_ops)
            .sum()
    }

    /// Completed / attempted legitimate handshakes; 1.0 when none were tried.
    pub fn legit_completion_rate(&self) -> f64 {
        if self.legit_attempted == 0 {
            1.0
        } else {
            self.legit_completed as f64 / self.legit_attempted as f64
        }
    }

    pub fn is_conserved(&self) -> bool {
        self.tallies.values().all(Tally::is_conserved)
    }

    /// Attacker hash work per request that reached the expensive checks,
    /// divided by the server work (cheap and expensive, hello included) per
    /// such request. `None` if no forged request reached the expensive checks.
    pub fn cost_asymmetry(&self) -> Option<f64> {
        if self.phase3_reached == 0 {
            return None;
        }
        let forger = self.tally(Actor::Forger);
        let server = forger.server_ops.total_ops();
        if server == 0 {
            return None;
        }
        let per_request_attacker = self.attacker_hash_ops as f64 / self.phase3_reached as f64;
        let per_request_server = server as f64 / self.phase3_reached as f64;
        Some(per_request_attacker / per_request_server)
    }

    /// `name=value` lines, one per figure.
    pub fn to_lines(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: &dyn fmt::Display| {
            let _ = writeln!(s, "{k}={v}");
        };
        kv("seed", &self.seed);
        kv("workload", &self.workload);
        kv("difficulty", &self.difficulty);
        for (k, v) in self.meter.fields() {
            kv(&alloc::format!("server.{k}"), &v);
        }
        kv("legit_attempted", &self.legit_attempted);
        kv("legit_completed", &self.legit_completed);
        kv("legit_completion_rate", &self.legit_completion_rate());
        kv("renewals_completed", &self.renewals_completed);
        kv("sk_disagreements", &self.sk_disagreements);
        kv("server_held_session_keys", &self.server_held_session_keys);
        kv("flood_expensive_ops", &self.flood_expensive_ops());
        kv("attacker_hash_ops", &self.attacker_hash_ops);
        kv("phase3_reached", &self.phase3_reached);
        if let Some(r) = self.cost_asymmetry() {
            kv("cost_asymmetry", &r);
        }
        if let Some(b) = self.post_block_challenged {
            kv("post_block_challenged", &b);
        }
        if let Some((lo, hi)) = self.stamp_skew_ms {
            kv("stamp_skew_min_ms", &lo);
            kv("stamp_skew_max_ms", &hi);
        }
        kv(
            "footprint_before",
            &self.footprint_before.unbounded_part().1,
        );
        kv("footprint_after", &self.footprint_after.unbounded_part().1);
        kv("conserved", &self.is_conserved());
        kv("sim_time_ms", &self.sim_time_ms);
        for (actor, t) in &self.tallies {
            let a = actor.name();
            kv(&alloc::format!("{a}.injected"), &t.injected);
            kv(&alloc::format!("{a}.lost"), &t.lost);
            kv(&alloc::format!("{a}.challenged"), &t.challenged);
            kv(&alloc::format!("{a}.blocked"), &t.blocked);
            kv(&alloc::format!("{a}.key_delivered"), &t.key_delivered);
            kv(&alloc::format!("{a}.established"), &t.established);
            for (r, n) in &t.dropped {
                kv(&alloc::format!("{a}.dropped.{}", r.name()), n);
            }
            kv(
                &alloc::format!("{a}.server_cheap_ops"),
                &t.server_ops.cheap_ops,
            );
            kv(
                &alloc::format!("{a}.server_expensive_ops"),
                &t.server_ops.expensive_ops,
            );
        }
        s
    }

    /// Per-actor tallies as tab-separated values with a header row.
    pub fn to_tsv(&self) -> String {
        let mut s = String::from(
            "actor\tinjected\tlost\tchallenged\tblocked\tkey_delivered\testablished\tdropped\tserver_cheap_ops\tserver_expensive_ops\n",
        );
        for (actor, t) in &self.tallies {
            let _ = writeln!(
                s,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                actor.name(),
                t.injected,
                t.lost,
                t.challenged,
                t.blocked,
                t.key_delivered,
                t.established,
                t.dropped_total(),
                t.server_ops.cheap_ops,
                t.server_ops.expensive_ops
            );
        }
        s
    }
}
