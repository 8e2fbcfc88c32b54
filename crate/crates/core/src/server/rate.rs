use alloc::collections::{BTreeMap, VecDeque};
use core::time::Duration;

use crate::{ClientId, Timestamp};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RateDecision {
    Allow,
    Blocked { until: Timestamp },
}

#[derive(Debug, Clone)]
struct RateEntry {
    recent: VecDeque<Timestamp>,
    blocked_until: Option<Timestamp>,
    last_used: u64,
}

/// Per-CID sliding-window request counter with a block list, bounded by
/// `capacity` entries and evicted least-recently-used first.
///
/// A CID that makes `rate_max` requests inside `rate_window` is blocked on
/// its next request for `block_duration`. Requests while blocked do not
/// extend the block.
#[derive(Debug, Clone)]
pub struct RateTable {
    capacity: usize,
    entries: BTreeMap<ClientId, RateEntry>,
    by_use: BTreeMap<u64, ClientId>,
    tick: u64,
}

impl RateTable {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "rate table capacity must be positive");
        RateTable {
            capacity,
            entries: BTreeMap::new(),
            by_use: BTreeMap::new(),
            tick: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn blocked_until(&self, cid: &ClientId) -> Option<Timestamp> {
        self.entries.get(cid).and_then(|e| e.blocked_until)
    }

    /// Number of timestamps currently remembered for `cid`.
    pub fn recent_count(&self, cid: &ClientId) -> usize {
        self.entries.get(cid).map_or(0, |e| e.recent.len())
    }

    fn touch(&mut self, cid: &ClientId) -> &mut RateEntry {
        self.tick += 1;
        let tick = self.tick;
        if let Some(e) = self.entries.get_mut(cid) {
            self.by_use.remove(&e.last_used);
            e.last_used = tick;
        } else {
            if self.entries.len() >= self.capacity {
                if let Some((_, victim)) = self.by_use.pop_first() {
                    self.entries.remove(&victim);
                }
            }
            self.entries.insert(
                cid.clone(),
                RateEntry {
                    recent: VecDeque::new(),
                    blocked_until: None,
                    last_used: tick,
                },
            );
        }
        self.by_use.insert(tick, cid.clone());
        self.entries.get_mut(cid).expect("entry inserted above")
    }

    pub fn check(
        &mut self,
        cid: &ClientId,
        now: Timestamp,
        rate_window: Duration,
        rate_max: u32,
        block_duration: Duration,
    ) -> RateDecision {
        let entry = self.touch(cid);
        if let Some(until) = entry.blocked_until {
            if now < until {
                return RateDecision::Blocked { until };
            }
            entry.blocked_until = None;
        }
        while entry
            .recent
            .front()
            .is_some_and(|&t| now.saturating_since(t) >= rate_window)
        {
            entry.recent.pop_front();
        }
        if entry.recent.len() >= rate_max as usize {
            let until = now.saturating_add(block_duration);
            entry.blocked_until = Some(until);
            entry.recent.clear();
            return RateDecision::Blocked { until };
        }
        entry.recent.push_back(now);
        RateDecision::Allow
    }

    pub(crate) fn append_image(&self, out: &mut alloc::vec::Vec<u8>) {
        for (cid, e) in &self.entries {
            out.extend_from_slice(cid.as_bytes());
            for t in &e.recent {
                out.extend_from_slice(&t.to_be_bytes());
            }
            if let Some(t) = e.blocked_until {
                out.extend_from_slice(&t.to_be_bytes());
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const WINDOW: Duration = Duration::from_secs(10);
    const BLOCK: Duration = Duration::from_secs(60);

    fn cid(s: &str) -> ClientId {
        ClientId::new(s).unwrap()
    }

    #[test]
    fn fourth_request_in_window_blocked() {
        let mut t = RateTable::new(16);
        let a = cid("alice");
        for i in 0..3 {
            assert_eq!(
                t.check(&a, Timestamp(i * 100), WINDOW, 3, BLOCK),
                RateDecision::Allow
            );
        }
        assert_eq!(
            t.check(&a, Timestamp(300), WINDOW, 3, BLOCK),
            RateDecision::Blocked {
                until: Timestamp(60_300)
            }
        );
        // Blocked requests do not push the block further out.
        assert_eq!(
            t.check(&a, Timestamp(400), WINDOW, 3, BLOCK),
            RateDecision::Blocked {
                until: Timestamp(60_300)
            }
        );
        assert_eq!(
            t.check(&a, Timestamp(60_300), WINDOW, 3, BLOCK),
            RateDecision::Allow
        );
    }

    #[test]
    fn window_slides() {
        let mut t = RateTable::new(16);
        let a = cid("alice");
        for i in 0..10 {
            // One request every 4 s: never three inside a 10 s window plus one.
            assert_eq!(
                t.check(&a, Timestamp(i * 4_000), WINDOW, 3, BLOCK),
                RateDecision::Allow
            );
            assert!(t.recent_count(&a) <= 3);
        }
    }

    #[test]
    fn lru_eviction_bounds_size() {
        let mut t = RateTable::new(4);
        for i in 0..10 {
            t.check(
                &cid(&alloc::format!("c{i}")),
                Timestamp(0),
                WINDOW,
                3,
                BLOCK,
            );
            assert!(t.len() <= 4);
        }
        // c6..c9 survive; touching c6 makes c7 the next victim.
        t.check(&cid("c6"), Timestamp(1), WINDOW, 3, BLOCK);
        t.check(&cid("new"), Timestamp(1), WINDOW, 3, BLOCK);
        assert_eq!(t.recent_count(&cid("c6")), 2);
        assert_eq!(t.recent_count(&cid("c7")), 0);
        assert_eq!(t.recent_count(&cid("c8")), 1);
    }

    #[test]
    fn ids_are_independent() {
        let mut t = RateTable::new(16);
        for _ in 0..3 {
            t.check(&cid("a"), Timestamp(0), WINDOW, 3, BLOCK);
        }
        assert!(matches!(
            t.check(&cid("a"), Timestamp(0), WINDOW, 3, BLOCK),
            RateDecision::Blocked { .. }
        ));
        assert_eq!(
            t.check(&cid("b"), Timestamp(0), WINDOW, 3, BLOCK),
            RateDecision::Allow
        );
    }
}
