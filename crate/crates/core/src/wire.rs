//! Protocol messages and their byte encoding.
//!
//! Every message is `[u8 message type][TLV fields]`, fields numbered from 1
//! in declaration order. The puzzle challenge travels as one field holding
//! its own TLV encoding.

use alloc::vec::Vec;
use core::fmt;

use crate::codec::{CodecError, TlvReader, TlvWriter};
use crate::puzzle::PuzzleChallenge;
use crate::token::Token;
use crate::{ClientId, Timestamp};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[repr(u8)]
pub enum MessageType {
    Hello = 1,
    Challenge = 2,
    Response = 3,
    KeyDelivery = 4,
    Confirm = 5,
    Established = 6,
    Renew = 7,
    Blocked = 8,
    Drop = 9,
}

impl MessageType {
    pub fn from_u8(b: u8) -> Option<Self> {
        use MessageType::*;
        Some(match b {
            1 => Hello,
            2 => Challenge,
            3 => Response,
            4 => KeyDelivery,
            5 => Confirm,
            6 => Established,
            7 => Renew,
            8 => Blocked,
            9 => Drop,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        use MessageType::*;
        match self {
            Hello => "hello",
            Challenge => "challenge",
            Response => "response",
            KeyDelivery => "key_delivery",
            Confirm => "confirm",
            Established => "established",
            Renew => "renew",
            Blocked => "blocked",
            Drop => "drop",
        }
    }
}

/// Why the server discarded a message. Codes are stable wire values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[repr(u8)]
pub enum DropReason {
    BadPuzzle = 1,
    Replay = 2,
    NoSuchClient = 3,
    BadStampCrypto = 4,
    StaleStamp = 5,
    TokenMismatch = 6,
    BadToken = 7,
    BadConfirmCrypto = 8,
    StampMismatch = 9,
    NoSession = 10,
    /// Replay cache full of unexpired entries; fails closed.
    Overloaded = 11,
    /// Bytes that do not decode, or a message only a server would send.
    Malformed = 12,
}

impl DropReason {
    pub const ALL: [DropReason; 12] = [
        DropReason::BadPuzzle,
        DropReason::Replay,
        DropReason::NoSuchClient,
        DropReason::BadStampCrypto,
        DropReason::StaleStamp,
        DropReason::TokenMismatch,
        DropReason::BadToken,
        DropReason::BadConfirmCrypto,
        DropReason::StampMismatch,
        DropReason::NoSession,
        DropReason::Overloaded,
        DropReason::Malformed,
    ];

    pub fn from_u8(b: u8) -> Option<Self> {
        Self::ALL.into_iter().find(|r| *r as u8 == b)
    }

    pub fn name(self) -> &'static str {
        use DropReason::*;
        match self {
            BadPuzzle => "bad_puzzle",
            Replay => "replay",
            NoSuchClient => "no_such_client",
            BadStampCrypto => "bad_stamp_crypto",
            StaleStamp => "stale_stamp",
            TokenMismatch => "token_mismatch",
            BadToken => "bad_token",
            BadConfirmCrypto => "bad_confirm_crypto",
            StampMismatch => "stamp_mismatch",
            NoSession => "no_session",
            Overloaded => "overloaded",
            Malformed => "malformed",
        }
    }
}

impl fmt::Display for DropReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Hello {
    pub client_id: ClientId,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Challenge {
    pub puzzle: PuzzleChallenge,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Response {
    pub token: Token,
    pub preimage_suffix: Vec<u8>,
    /// The challenge as issued, cookie included; carries R_CServer back.
    pub challenge: PuzzleChallenge,
    pub client_id: ClientId,
    /// `{T}_PSK`
    pub stamp_ct: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeyDelivery {
    /// `{SK}_PSK` after a response, `{SK'}_SK` after a renewal.
    pub sk_ct: Vec<u8>,
    pub token: Token,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Confirm {
    pub token: Token,
    /// `{T}_SK`
    pub stamp_ct: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Established {
    pub client_id: ClientId,
    pub generation: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Renew {
    pub token: Token,
    /// `{T}_SK` under the current session key.
    pub stamp_ct: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Blocked {
    pub client_id: ClientId,
    pub until: Timestamp,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dropped {
    pub reason: DropReason,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ProtocolMessage {
    Hello(Hello),
    Challenge(Challenge),
    Response(Response),
    KeyDelivery(KeyDelivery),
    Confirm(Confirm),
    Established(Established),
    Renew(Renew),
    Blocked(Blocked),
    Drop(Dropped),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum WireError {
    #[error("empty message")]
    Empty,
    #[error("unknown message type {0}")]
    UnknownType(u8),
    #[error(transparent)]
    Codec(#[from] CodecError),
}

fn read_client_id(r: &mut TlvReader<'_>, tag: u8) -> Result<ClientId, CodecError> {
    core::str::from_utf8(r.bytes(tag)?)
        .ok()
        .and_then(|s| ClientId::new(s).ok())
        .ok_or(CodecError::BadValue(tag))
}

impl ProtocolMessage {
    pub fn message_type(&self) -> MessageType {
        match self {
            ProtocolMessage::Hello(_) => MessageType::Hello,
            ProtocolMessage::Challenge(_) => MessageType::Challenge,
            ProtocolMessage::Response(_) => MessageType::Response,
            ProtocolMessage::KeyDelivery(_) => MessageType::KeyDelivery,
            ProtocolMessage::Confirm(_) => MessageType::Confirm,
            ProtocolMessage::Established(_) => MessageType::Established,
            ProtocolMessage::Renew(_) => MessageType::Renew,
            ProtocolMessage::Blocked(_) => MessageType::Blocked,
            ProtocolMessage::Drop(_) => MessageType::Drop,
        }
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut w = TlvWriter::with_prefix(self.message_type() as u8);
        match self {
            ProtocolMessage::Hello(m) => {
                w.bytes(1, m.client_id.as_bytes());
            }
            ProtocolMessage::Challenge(m) => {
                w.bytes(1, &m.puzzle.encode());
            }
            ProtocolMessage::Response(m) => {
                w.bytes(1, m.token.as_bytes())
                    .bytes(2, &m.preimage_suffix)
                    .bytes(3, &m.challenge.encode())
                    .bytes(4, m.client_id.as_bytes())
                    .bytes(5, &m.stamp_ct);
            }
            ProtocolMessage::KeyDelivery(m) => {
                w.bytes(1, &m.sk_ct).bytes(2, m.token.as_bytes());
            }
            ProtocolMessage::Confirm(m) => {
                w.bytes(1, m.token.as_bytes()).bytes(2, &m.stamp_ct);
            }
            ProtocolMessage::Established(m) => {
                w.bytes(1, m.client_id.as_bytes()).u32(2, m.generation);
            }
            ProtocolMessage::Renew(m) => {
                w.bytes(1, m.token.as_bytes()).bytes(2, &m.stamp_ct);
            }
            ProtocolMessage::Blocked(m) => {
                w.bytes(1, m.client_id.as_bytes())
                    .u64(2, m.until.as_millis());
            }
            ProtocolMessage::Drop(m) => {
                w.u8(1, m.reason as u8);
            }
        }
        w.finish()
    }

    pub fn decode(buf: &[u8]) -> Result<Self, WireError> {
        let (&kind, body) = buf.split_first().ok_or(WireError::Empty)?;
        let kind = MessageType::from_u8(kind).ok_or(WireError::UnknownType(kind))?;
        let mut r = TlvReader::new(body);
        let msg = match kind {
            MessageType::Hello => ProtocolMessage::Hello(Hello {
                client_id: read_client_id(&mut r, 1)?,
            }),
            MessageType::Challenge => ProtocolMessage::Challenge(Challenge {
                puzzle: PuzzleChallenge::decode(r.bytes(1)?)?,
            }),
            MessageType::Response => ProtocolMessage::Response(Response {
                token: Token::from_bytes(r.bytes(1)?.to_vec()),
                preimage_suffix: r.bytes(2)?.to_vec(),
                challenge: PuzzleChallenge::decode(r.bytes(3)?)?,
                client_id: read_client_id(&mut r, 4)?,
                stamp_ct: r.bytes(5)?.to_vec(),
            }),
            MessageType::KeyDelivery => ProtocolMessage::KeyDelivery(KeyDelivery {
                sk_ct: r.bytes(1)?.to_vec(),
                token: Token::from_bytes(r.bytes(2)?.to_vec()),
            }),
            MessageType::Confirm => ProtocolMessage::Confirm(Confirm {
                token: Token::from_bytes(r.bytes(1)?.to_vec()),
                stamp_ct: r.bytes(2)?.to_vec(),
            }),
            MessageType::Established => ProtocolMessage::Established(Established {
                client_id: read_client_id(&mut r, 1)?,
                generation: r.u32(2)?,
            }),
            MessageType::Renew => ProtocolMessage::Renew(Renew {
                token: Token::from_bytes(r.bytes(1)?.to_vec()),
                stamp_ct: r.bytes(2)?.to_vec(),
            }),
            MessageType::Blocked => ProtocolMessage::Blocked(Blocked {
                client_id: read_client_id(&mut r, 1)?,
                until: Timestamp(r.u64(2)?),
            }),
            MessageType::Drop => {
                let code = r.u8(1)?;
                ProtocolMessage::Drop(Dropped {
                    reason: DropReason::from_u8(code).ok_or(CodecError::BadValue(1))?,
                })
            }
        };
        r.finish()?;
        Ok(msg)
    }
}

macro_rules! impl_from {
    ($($variant:ident),*) => {
        $(impl From<$variant> for ProtocolMessage {
            fn from(m: $variant) -> Self {
                ProtocolMessage::$variant(m)
            }
        })*
    };
}
impl_from!(
    Hello,
    Challenge,
    Response,
    KeyDelivery,
    Confirm,
    Established,
    Renew,
    Blocked
);

impl From<Dropped> for ProtocolMessage {
    fn from(m: Dropped) -> Self {
        ProtocolMessage::Drop(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crypto::SymmetricKey;
    use crate::puzzle::{generate_challenge, Difficulty};
    use proptest::prelude::*;
    use rand_chacha::ChaCha20Rng;
    use rand_core::SeedableRng;

    fn cid() -> ClientId {
        ClientId::new("alice").unwrap()
    }

    fn samples(seed: u64) -> Vec<ProtocolMessage> {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let puzzle = generate_challenge(
            &SymmetricKey::from_bytes([1; 32]),
            cid(),
            Difficulty::new(8).unwrap(),
            Timestamp(seed),
            &mut rng,
        );
        let tok = Token::from_bytes((0..60).map(|i| i as u8 ^ seed as u8).collect());
        alloc::vec![
            Hello { client_id: cid() }.into(),
            Challenge {
                puzzle: puzzle.clone()
            }
            .into(),
            Response {
                token: tok.clone(),
                preimage_suffix: seed.to_be_bytes().to_vec(),
                challenge: puzzle,
                client_id: cid(),
                stamp_ct: alloc::vec![9; 36],
            }
            .into(),
            KeyDelivery {
                sk_ct: alloc::vec![3; 60],
                token: tok.clone()
            }
            .into(),
            Confirm {
                token: tok.clone(),
                stamp_ct: alloc::vec![4; 36]
            }
            .into(),
            Established {
                client_id: cid(),
                generation: seed as u32
            }
            .into(),
            Renew {
                token: tok,
                stamp_ct: alloc::vec![]
            }
            .into(),
            Blocked {
                client_id: cid(),
                until: Timestamp(seed)
            }
            .into(),
            Dropped {
                reason: DropReason::ALL[(seed % 12) as usize]
            }
            .into(),
        ]
    }

    #[test]
    fn type_byte_leads_each_message() {
        for (i, m) in samples(1).iter().enumerate() {
            assert_eq!(m.encode()[0] as usize, i + 1);
        }
    }

    #[test]
    fn hello_layout() {
        let m: ProtocolMessage = Hello { client_id: cid() }.into();
        assert_eq!(m.encode(), [1, 1, 0, 5, b'a', b'l', b'i', b'c', b'e']);
    }

    #[test]
    fn bad_inputs() {
        assert_eq!(ProtocolMessage::decode(&[]), Err(WireError::Empty));
        assert_eq!(
            ProtocolMessage::decode(&[42]),
            Err(WireError::UnknownType(42))
        );
        assert!(ProtocolMessage::decode(&[9, 1, 0, 1, 99]).is_err());
        assert!(ProtocolMessage::decode(&[1, 1, 0, 3, b'a', b':', b'b']).is_err());
    }

    proptest! {
        #[test]
        fn decode_inverts_encode(seed in any::<u64>()) {
            for m in samples(seed) {
                prop_assert_eq!(ProtocolMessage::decode(&m.encode()).unwrap(), m);
            }
        }

        #[test]
        fn decode_never_panics(bytes in proptest::collection::vec(any::<u8>(), 0..200)) {
            let _ = ProtocolMessage::decode(&bytes);
        }
    }
}
