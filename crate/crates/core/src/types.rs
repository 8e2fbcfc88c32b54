use alloc::string::String;
use core::fmt;
use core::time::Duration;

/// Longest client identifier accepted anywhere in the protocol.
pub const MAX_CLIENT_ID_LEN: usize = 255;

/// Cloud client identifier (CID).
///
/// Restricted to printable ASCII without `:` so it can live in the
/// colon-separated credential files unescaped.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ClientId(String);

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ClientIdError {
    #[error("client id is empty")]
    Empty,
    #[error("client id is longer than {MAX_CLIENT_ID_LEN} bytes")]
    TooLong,
    #[error("client id contains a forbidden character")]
    BadCharacter,
}

impl ClientId {
    pub fn new(id: impl Into<String>) -> Result<Self, ClientIdError> {
        let id = id.into();
        if id.is_empty() {
            return Err(ClientIdError::Empty);
        }
        if id.len() > MAX_CLIENT_ID_LEN {
            return Err(ClientIdError::TooLong);
        }
        if !id.bytes().all(|b| b.is_ascii_graphic() && b != b':') {
            return Err(ClientIdError::BadCharacter);
        }
        Ok(ClientId(id))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn as_bytes(&self) -> &[u8] {
        self.0.as_bytes()
    }
}

impl fmt::Debug for ClientId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ClientId({:?})", self.0)
    }
}

impl fmt::Display for ClientId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl core::str::FromStr for ClientId {
    type Err = ClientIdError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ClientId::new(s)
    }
}

/// Milliseconds on the simulation clock.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Timestamp(pub u64);

impl Timestamp {
    pub const fn from_millis(ms: u64) -> Self {
        Timestamp(ms)
    }

    pub const fn as_millis(self) -> u64 {
        self.0
    }

    pub fn saturating_add(self, d: Duration) -> Self {
        Timestamp(self.0.saturating_add(duration_millis(d)))
    }

    /// Time elapsed from `earlier` to `self`; zero if `earlier` is later.
    pub fn saturating_since(self, earlier: Timestamp) -> Duration {
        Duration::from_millis(self.0.saturating_sub(earlier.0))
    }

    /// Distance between two stamps regardless of order.
    pub fn abs_diff(self, other: Timestamp) -> Duration {
        Duration::from_millis(self.0.abs_diff(other.0))
    }

    pub fn to_be_bytes(self) -> [u8; 8] {
        self.0.to_be_bytes()
    }

    pub fn from_be_bytes(b: [u8; 8]) -> Self {
        Timestamp(u64::from_be_bytes(b))
    }
}

pub(crate) fn duration_millis(d: Duration) -> u64 {
    u64::try_from(d.as_millis()).unwrap_or(u64::MAX)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn client_id_rules() {
        assert_eq!(ClientId::new(""), Err(ClientIdError::Empty));
        assert_eq!(ClientId::new("a:b"), Err(ClientIdError::BadCharacter));
        assert_eq!(ClientId::new("a b"), Err(ClientIdError::BadCharacter));
        assert_eq!(
            ClientId::new("x".repeat(MAX_CLIENT_ID_LEN + 1)),
            Err(ClientIdError::TooLong)
        );
        assert_eq!(ClientId::new("alice").unwrap().as_str(), "alice");
    }

    #[test]
    fn timestamp_arithmetic() {
        let t = Timestamp(1_000);
        assert_eq!(t.saturating_add(Duration::from_millis(5)), Timestamp(1_005));
        assert_eq!(t.saturating_since(Timestamp(1_500)), Duration::ZERO);
        assert_eq!(t.abs_diff(Timestamp(400)), Duration::from_millis(600));
    }
}
