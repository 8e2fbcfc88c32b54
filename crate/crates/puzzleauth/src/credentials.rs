//! Credentials files: one `cid:psk_hex:token_hex` line per client.
//!
//! The same format serves as the server's provisioning export and as the
//! client's import. Blank lines and `#` comments are ignored. Client ids
//! cannot contain `:`, so the split is unambiguous.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use puzzleauth_core::client::Credentials;
use puzzleauth_core::crypto::SymmetricKey;
use puzzleauth_core::server::{DuplicateClient, Server};
use puzzleauth_core::token::Token;
use puzzleauth_core::ClientId;

use crate::LoadError;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("line {line}: {kind}")]
pub struct CredentialsError {
    /// 1-based line number.
    pub line: usize,
    pub kind: CredentialsErrorKind,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CredentialsErrorKind {
    #[error("expected 'cid:psk_hex:token_hex'")]
    FieldCount,
    #[error("bad client id: {0}")]
    ClientId(String),
    #[error("bad PSK: {0}")]
    Psk(String),
    #[error("bad token hex: {0}")]
    Token(String),
    #[error("client id '{0}' listed twice")]
    Duplicate(String),
}

/// Renders credentials, one line each, in the given order.
pub fn format_credentials(creds: &[Credentials]) -> String {
    let mut s = String::new();
    for c in creds {
        let _ = writeln!(
            s,
            "{}:{}:{}",
            c.client_id,
            hex::encode(c.psk.as_bytes()),
            hex::encode(c.token.as_bytes())
        );
    }
    s
}

pub fn parse_credentials(text: &str) -> Result<Vec<Credentials>, CredentialsError> {
    let mut out: Vec<Credentials> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let err = |kind| CredentialsError { line: i + 1, kind };
        let fields: Vec<&str> = trimmed.split(':').collect();
        let [cid, psk, token] = fields[..] else {
            return Err(err(CredentialsErrorKind::FieldCount));
        };
        let client_id =
            ClientId::new(cid).map_err(|e| err(CredentialsErrorKind::ClientId(e.to_string())))?;
        let psk = hex::decode(psk)
            .map_err(|e| e.to_string())
            .and_then(|b| SymmetricKey::from_slice(&b).map_err(|e| e.to_string()))
            .map_err(|e| err(CredentialsErrorKind::Psk(e)))?;
        let token =
            hex::decode(token).map_err(|e| err(CredentialsErrorKind::Token(e.to_string())))?;
        if out.iter().any(|c| c.client_id == client_id) {
            return Err(err(CredentialsErrorKind::Duplicate(cid.to_owned())));
        }
        out.push(Credentials {
            client_id,
            psk,
            token: Token::from_bytes(token),
        });
    }
    Ok(out)
}

pub fn load_credentials(path: &Path) -> Result<Vec<Credentials>, LoadError> {
    parse_credentials(&crate::read_text(path)?).map_err(|source| LoadError::Credentials {
        path: path.to_owned(),
        source,
    })
}

pub fn save_credentials(path: &Path, creds: &[Credentials]) -> Result<(), LoadError> {
    fs::write(path, format_credentials(creds)).map_err(|source| LoadError::Io {
        path: path.to_owned(),
        source,
    })
}

/// Loads every PSK into `server`'s directory. Tokens stay with the clients:
/// the server needs only its master key to open them.
pub fn import_directory(server: &mut Server, creds: &[Credentials]) -> Result<(), DuplicateClient> {
    for c in creds {
        server.register(c.client_id.clone(), c.psk.clone())?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(n: u8) -> Credentials {
        Credentials {
            client_id: ClientId::new(format!("c{n}")).unwrap(),
            psk: SymmetricKey::from_bytes([n; 32]),
            token: Token::from_bytes(vec![n, 0xff, 0x00]),
        }
    }

    #[test]
    fn round_trip() {
        let creds = vec![sample(1), sample(2)];
        let text = format_credentials(&creds);
        assert!(text.starts_with(&format!("c1:{}:01ff00\n", "01".repeat(32))));
        assert_eq!(parse_credentials(&text).unwrap(), creds);
        assert_eq!(
            parse_credentials(&format!("# export\n\n{text}")).unwrap(),
            creds
        );
    }

    #[test]
    fn errors_name_the_line() {
        let good = format_credentials(&[sample(1)]);
        let e = |t: &str| parse_credentials(t).unwrap_err();
        assert_eq!(e("a:b").kind, CredentialsErrorKind::FieldCount);
        assert_eq!(e(&format!("{good}x:00:00")).line, 2);
        assert!(matches!(
            e(&format!("{good}x:00:00")).kind,
            CredentialsErrorKind::Psk(_)
        ));
        assert!(matches!(
            e(&format!("x:{}:zz", "00".repeat(32))).kind,
            CredentialsErrorKind::Token(_)
        ));
        assert!(matches!(
            e(&format!(":{}:00", "00".repeat(32))).kind,
            CredentialsErrorKind::ClientId(_)
        ));
        assert_eq!(
            e(&format!("{good}{good}")).kind,
            CredentialsErrorKind::Duplicate("c1".into())
        );
    }
}
