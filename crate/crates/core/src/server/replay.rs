use alloc::collections::{BTreeSet, VecDeque};
use core::time::Duration;

use crate::crypto::DIGEST_LEN;
use crate::Timestamp;

pub type ReplayKey = [u8; DIGEST_LEN];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReplayError {
    Seen,
    Full,
}

/// Recently accepted challenge cookies, each remembered for `ttl`.
///
/// This is the one piece of per-request memory the server keeps. It is
/// bounded: when every slot holds an unexpired entry, inserts fail closed.
#[derive(Debug, Clone)]
pub struct ReplayCache {
    capacity: usize,
    ttl: Duration,
    expiries: VecDeque<(Timestamp, ReplayKey)>,
    keys: BTreeSet<ReplayKey>,
}

impl ReplayCache {
    pub fn new(capacity: usize, ttl: Duration) -> Self {
        assert!(capacity > 0, "replay cache capacity must be positive");
        ReplayCache {
            capacity,
            ttl,
            expiries: VecDeque::new(),
            keys: BTreeSet::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    /// Drops every entry whose expiry is at or before `now`.
    pub fn sweep(&mut self, now: Timestamp) {
        while let Some(&(exp, key)) = self.expiries.front() {
            if exp > now {
                break;
            }
            self.expiries.pop_front();
            self.keys.remove(&key);
        }
    }

    pub fn contains(&mut self, key: &ReplayKey, now: Timestamp) -> bool {
        self.sweep(now);
        self.keys.contains(key)
    }

    pub fn check_and_insert(&mut self, key: ReplayKey, now: Timestamp) -> Result<(), ReplayError> {
        self.sweep(now);
        if self.keys.contains(&key) {
            return Err(ReplayError::Seen);
        }
        if self.keys.len() >= self.capacity {
            return Err(ReplayError::Full);
        }
        self.keys.insert(key);
        self.expiries.push_back((now.saturating_add(self.ttl), key));
        Ok(())
    }

    pub(crate) fn append_image(&self, out: &mut alloc::vec::Vec<u8>) {
        for k in &self.keys {
            out.extend_from_slice(k);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seen_until_ttl() {
        let mut c = ReplayCache::new(8, Duration::from_millis(100));
        c.check_and_insert([1; 32], Timestamp(0)).unwrap();
        assert_eq!(
            c.check_and_insert([1; 32], Timestamp(99)),
            Err(ReplayError::Seen)
        );
        c.check_and_insert([1; 32], Timestamp(100)).unwrap();
    }

    #[test]
    fn sweep_removes_expired() {
        let mut c = ReplayCache::new(8, Duration::from_millis(10));
        for i in 0..5u8 {
            c.check_and_insert([i; 32], Timestamp(i as u64)).unwrap();
        }
        c.sweep(Timestamp(12));
        assert_eq!(c.len(), 2);
        c.sweep(Timestamp(1_000));
        assert!(c.is_empty());
    }

    #[test]
    fn full_cache_fails_closed() {
        let mut c = ReplayCache::new(2, Duration::from_secs(1));
        c.check_and_insert([1; 32], Timestamp(0)).unwrap();
        c.check_and_insert([2; 32], Timestamp(0)).unwrap();
        assert_eq!(
            c.check_and_insert([3; 32], Timestamp(0)),
            Err(ReplayError::Full)
        );
        c.check_and_insert([3; 32], Timestamp(1_000)).unwrap();
    }
}
