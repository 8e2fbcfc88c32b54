//! The server token (TKN).
//!
//! A token is a [`TokenContents`] record in canonical TLV form, sealed with
//! the AEAD under the server master key. Only the server can open or forge
//! one, so the client carries the server's session state for it: the client
//! id, and after a successful handshake the session key and its timestamp.

use alloc::vec::Vec;

use rand_core::{CryptoRng, RngCore};

use crate::codec::{self, CodecError, TlvReader, TlvWriter};
use crate::crypto::{self, label, MasterKey, SessionKey, KEY_LEN};
use crate::{ClientId, Timestamp};

/// Session key and the client timestamp T it was issued against.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SessionBinding {
    pub session_key: SessionKey,
    pub stamp: Timestamp,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenContents {
    pub client_id: ClientId,
    pub issued_at: Timestamp,
    /// Absent on a registration token; present after the first key delivery.
    pub session: Option<SessionBinding>,
    /// 0 at registration, +1 per extension.
    pub generation: u32,
}

mod tag {
    pub const CLIENT_ID: u8 = 1;
    pub const ISSUED_AT: u8 = 2;
    pub const SESSION_KEY: u8 = 3;
    pub const SESSION_STAMP: u8 = 4;
    pub const GENERATION: u8 = 5;
}

impl TokenContents {
    pub fn encode(&self) -> Vec<u8> {
        let mut w = TlvWriter::new();
        w.bytes(tag::CLIENT_ID, self.client_id.as_bytes())
            .u64(tag::ISSUED_AT, self.issued_at.as_millis());
        if let Some(s) = &self.session {
            w.bytes(tag::SESSION_KEY, s.session_key.as_bytes())
                .u64(tag::SESSION_STAMP, s.stamp.as_millis());
        }
        w.u32(tag::GENERATION, self.generation);
        w.finish()
    }

    pub fn decode(buf: &[u8]) -> Result<Self, CodecError> {
        let mut r = TlvReader::new(buf);
        let client_id = core::str::from_utf8(r.bytes(tag::CLIENT_ID)?)
            .ok()
            .and_then(|s| ClientId::new(s).ok())
            .ok_or(CodecError::BadValue(tag::CLIENT_ID))?;
        let issued_at = Timestamp(r.u64(tag::ISSUED_AT)?);
        let key = r.optional(tag::SESSION_KEY)?;
        let stamp = r.optional(tag::SESSION_STAMP)?;
        let session = match (key, stamp) {
            (None, None) => None,
            (Some(k), Some(s)) => Some(SessionBinding {
                session_key: SessionKey::from_bytes(codec::fixed::<KEY_LEN>(tag::SESSION_KEY, k)?),
                stamp: Timestamp(u64::from_be_bytes(codec::fixed(tag::SESSION_STAMP, s)?)),
            }),
            (Some(_), None) => return Err(CodecError::MissingField(tag::SESSION_STAMP)),
            (None, Some(_)) => return Err(CodecError::MissingField(tag::SESSION_KEY)),
        };
        let generation = r.u32(tag::GENERATION)?;
        r.finish()?;
        Ok(TokenContents {
            client_id,
            issued_at,
            session,
            generation,
        })
    }
}

/// Sealed token bytes: `nonce || ciphertext || tag`. Opaque to clients.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Token(Vec<u8>);

impl Token {
    pub fn from_bytes(bytes: Vec<u8>) -> Self {
        Token(bytes)
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.0
    }
}

impl core::fmt::Debug for Token {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "Token({} bytes)", self.0.len())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TokenError {
    #[error("token failed authentication")]
    AuthFailure,
    /// The tag verified but the plaintext does not decode. Only a mint-side
    /// bug can produce this; attackers cannot forge a valid tag.
    #[error("token contents are malformed: {0}")]
    Malformed(CodecError),
}

fn seal_contents<R: RngCore + CryptoRng>(
    master_key: &MasterKey,
    contents: &TokenContents,
    rng: &mut R,
) -> Token {
    Token(crypto::seal(
        master_key,
        label::TOKEN,
        &contents.encode(),
        rng,
    ))
}

/// Issues the registration token for `client_id`.
pub fn mint<R: RngCore + CryptoRng>(
    master_key: &MasterKey,
    client_id: ClientId,
    now: Timestamp,
    rng: &mut R,
) -> Token {
    let contents = TokenContents {
        client_id,
        issued_at: now,
        session: None,
        generation: 0,
    };
    seal_contents(master_key, &contents, rng)
}

pub fn open(master_key: &MasterKey, token: &Token) -> Result<TokenContents, TokenError> {
    let plain =
        crypto::open(master_key, label::TOKEN, &token.0).map_err(|_| TokenError::AuthFailure)?;
    TokenContents::decode(&plain).map_err(TokenError::Malformed)
}

/// Re-seals `contents` with a session binding and the next generation.
/// `contents` itself is left untouched.
pub fn extend<R: RngCore + CryptoRng>(
    master_key: &MasterKey,
    contents: &TokenContents,
    session_key: SessionKey,
    stamp: Timestamp,
    rng: &mut R,
) -> Token {
    let next = TokenContents {
        client_id: contents.client_id.clone(),
        issued_at: contents.issued_at,
        session: Some(SessionBinding { session_key, stamp }),
        generation: contents.generation.saturating_add(1),
    };
    seal_contents(master_key, &next, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand_chacha::ChaCha20Rng;
    use rand_core::SeedableRng;

    fn setup() -> (MasterKey, ChaCha20Rng) {
        let mut rng = ChaCha20Rng::seed_from_u64(11);
        (MasterKey::generate(&mut rng), rng)
    }

    fn cid(s: &str) -> ClientId {
        ClientId::new(s).unwrap()
    }

    #[test]
    fn mint_open_roundtrip() {
        let (k, mut rng) = setup();
        let t = mint(&k, cid("alice"), Timestamp(5), &mut rng);
        let c = open(&k, &t).unwrap();
        assert_eq!(c.client_id, cid("alice"));
        assert_eq!(c.issued_at, Timestamp(5));
        assert_eq!(c.generation, 0);
        assert!(c.session.is_none());
    }

    #[test]
    fn wrong_key_rejected() {
        let (k, mut rng) = setup();
        let other = MasterKey::generate(&mut rng);
        let t = mint(&k, cid("alice"), Timestamp(5), &mut rng);
        assert_eq!(open(&other, &t), Err(TokenError::AuthFailure));
    }

    #[test]
    fn fresh_nonce_per_mint() {
        let (k, mut rng) = setup();
        let a = mint(&k, cid("alice"), Timestamp(5), &mut rng);
        let b = mint(&k, cid("alice"), Timestamp(5), &mut rng);
        assert_ne!(a, b);
        assert_eq!(open(&k, &a).unwrap(), open(&k, &b).unwrap());
    }

    #[test]
    fn flipped_byte_rejected() {
        let (k, mut rng) = setup();
        let t = mint(&k, cid("bob"), Timestamp(0), &mut rng);
        let mut bytes = t.clone().into_bytes();
        bytes[20] ^= 0x80;
        assert_eq!(
            open(&k, &Token::from_bytes(bytes)),
            Err(TokenError::AuthFailure)
        );
    }

    #[test]
    fn extend_adds_session_and_keeps_original() {
        let (k, mut rng) = setup();
        let t0 = mint(&k, cid("alice"), Timestamp(1), &mut rng);
        let c0 = open(&k, &t0).unwrap();
        let sk = SessionKey::generate(&mut rng);
        let t1 = extend(&k, &c0, sk.clone(), Timestamp(9), &mut rng);
        let c1 = open(&k, &t1).unwrap();
        assert_eq!(c1.generation, 1);
        assert_eq!(c1.session.as_ref().unwrap().session_key, sk);
        assert_eq!(c1.session.as_ref().unwrap().stamp, Timestamp(9));

        let sk2 = SessionKey::generate(&mut rng);
        let t2 = extend(&k, &c1, sk2, Timestamp(10), &mut rng);
        assert_eq!(open(&k, &t2).unwrap().generation, 2);
        assert_eq!(open(&k, &t0).unwrap().generation, 0);
        assert_eq!(c0.generation, 0);
    }

    #[test]
    fn malformed_plaintext_is_distinguished() {
        let (k, mut rng) = setup();
        let blob = crypto::seal(&k, label::TOKEN, b"not tlv", &mut rng);
        assert!(matches!(
            open(&k, &Token::from_bytes(blob)),
            Err(TokenError::Malformed(_))
        ));
    }

    #[test]
    fn half_session_binding_is_malformed() {
        let mut w = TlvWriter::new();
        w.bytes(tag::CLIENT_ID, b"alice")
            .u64(tag::ISSUED_AT, 0)
            .bytes(tag::SESSION_KEY, &[0; 32])
            .u32(tag::GENERATION, 1);
        assert_eq!(
            TokenContents::decode(&w.finish()),
            Err(CodecError::MissingField(tag::SESSION_STAMP))
        );
    }

    proptest! {
        #[test]
        fn open_inverts_mint(name in "[a-zA-Z0-9_.-]{1,40}", now in any::<u64>(), seed in any::<u64>()) {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            let k = MasterKey::generate(&mut rng);
            let t = mint(&k, cid(&name), Timestamp(now), &mut rng);
            let c = open(&k, &t).unwrap();
            prop_assert_eq!(c.client_id.as_str(), name.as_str());
            prop_assert_eq!(c.issued_at, Timestamp(now));
            prop_assert_eq!(TokenContents::decode(&c.encode()).unwrap(), c);
        }
    }
}
