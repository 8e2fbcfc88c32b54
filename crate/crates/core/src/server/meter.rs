use alloc::string::String;
use core::fmt::Write;

/// Server work counters.
///
/// `cheap_ops` counts hash and MAC evaluations. `expensive_ops` counts AEAD
/// operations (open or seal), PSK-directory lookups, and session-key
/// generations: the work an attacker must not be able to trigger for free.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CostMeter {
    pub cheap_ops: u64,
    pub expensive_ops: u64,
    pub blocked: u64,
    pub dropped: u64,
    pub established: u64,
}

impl CostMeter {
    pub fn total_ops(&self) -> u64 {
        self.cheap_ops + self.expensive_ops
    }

    /// Counter-wise difference `self - earlier`.
    pub fn since(&self, earlier: &CostMeter) -> CostMeter {
        CostMeter {
            cheap_ops: self.cheap_ops - earlier.cheap_ops,
            expensive_ops: self.expensive_ops - earlier.expensive_ops,
            blocked: self.blocked - earlier.blocked,
            dropped: self.dropped - earlier.dropped,
            established: self.established - earlier.established,
        }
    }

    pub fn fields(&self) -> [(&'static str, u64); 5] {
        [
            ("cheap_ops", self.cheap_ops),
            ("expensive_ops", self.expensive_ops),
            ("blocked", self.blocked),
            ("dropped", self.dropped),
            ("established", self.established),
        ]
    }

    /// One `name=value` line per counter.
    pub fn report(&self) -> String {
        let mut s = String::new();
        for (k, v) in self.fields() {
            let _ = writeln!(s, "{k}={v}");
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn report_format() {
        let m = CostMeter {
            cheap_ops: 3,
            expensive_ops: 1,
            ..Default::default()
        };
        assert_eq!(
            m.report(),
            "cheap_ops=3\nexpensive_ops=1\nblocked=0\ndropped=0\nestablished=0\n"
        );
    }
}
