//! Tag-length-value field encoding shared by challenges, tokens, and wire
//! messages.
//!
//! Each field is `[u8 tag][u16 big-endian length][bytes]`. Fields appear in
//! declaration order; optional fields are omitted entirely. Decoding is
//! strict: unexpected tags, out-of-order fields, short buffers, and trailing
//! bytes are all errors, so every value has exactly one encoding.

use alloc::vec::Vec;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CodecError {
    #[error("buffer ended inside a field")]
    Truncated,
    #[error("expected field tag {expected}, found {found}")]
    UnexpectedTag { expected: u8, found: u8 },
    #[error("missing field tag {0}")]
    MissingField(u8),
    #[error("field tag {tag} has length {len}, expected {expected}")]
    BadLength {
        tag: u8,
        len: usize,
        expected: usize,
    },
    #[error("field tag {0} has an invalid value")]
    BadValue(u8),
    #[error("{0} trailing bytes after last field")]
    TrailingBytes(usize),
}

#[derive(Debug, Default, Clone)]
pub struct TlvWriter {
    buf: Vec<u8>,
}

impl TlvWriter {
    pub fn new() -> Self {
        Self::default()
    }

    /// Starts the buffer with a one-byte prefix (the wire message type).
    pub fn with_prefix(prefix: u8) -> Self {
        let mut buf = Vec::with_capacity(64);
        buf.push(prefix);
        TlvWriter { buf }
    }

    /// Appends one field.
    ///
    /// Panics if `value` is longer than `u16::MAX`; every encoder in this
    /// crate bounds its fields well below that.
    pub fn bytes(&mut self, tag: u8, value: &[u8]) -> &mut Self {
        let len = u16::try_from(value.len()).expect("TLV field longer than 65535 bytes");
        self.buf.push(tag);
        self.buf.extend_from_slice(&len.to_be_bytes());
        self.buf.extend_from_slice(value);
        self
    }

    pub fn u8(&mut self, tag: u8, v: u8) -> &mut Self {
        self.bytes(tag, &[v])
    }

    pub fn u32(&mut self, tag: u8, v: u32) -> &mut Self {
        self.bytes(tag, &v.to_be_bytes())
    }

    pub fn u64(&mut self, tag: u8, v: u64) -> &mut Self {
        self.bytes(tag, &v.to_be_bytes())
    }

    pub fn finish(self) -> Vec<u8> {
        self.buf
    }
}

#[derive(Debug, Clone)]
pub struct TlvReader<'a> {
    rest: &'a [u8],
}

impl<'a> TlvReader<'a> {
    pub fn new(buf: &'a [u8]) -> Self {
        TlvReader { rest: buf }
    }

    fn peek_tag(&self) -> Option<u8> {
        self.rest.first().copied()
    }

    fn take(&mut self) -> Result<(u8, &'a [u8]), CodecError> {
        if self.rest.len() < 3 {
            return Err(CodecError::Truncated);
        }
        let tag = self.rest[0];
        let len = u16::from_be_bytes([self.rest[1], self.rest[2]]) as usize;
        let body = &self.rest[3..];
        if body.len() < len {
            return Err(CodecError::Truncated);
        }
        self.rest = &body[len..];
        Ok((tag, &body[..len]))
    }

    /// Reads the next field, which must carry `tag`.
    pub fn bytes(&mut self, tag: u8) -> Result<&'a [u8], CodecError> {
        match self.peek_tag() {
            None => Err(CodecError::MissingField(tag)),
            Some(found) if found != tag => Err(CodecError::UnexpectedTag {
                expected: tag,
                found,
            }),
            Some(_) => Ok(self.take()?.1),
        }
    }

    /// Reads the next field only if it carries `tag`.
    pub fn optional(&mut self, tag: u8) -> Result<Option<&'a [u8]>, CodecError> {
        if self.peek_tag() == Some(tag) {
            Ok(Some(self.take()?.1))
        } else {
            Ok(None)
        }
    }

    pub fn array<const N: usize>(&mut self, tag: u8) -> Result<[u8; N], CodecError> {
        let b = self.bytes(tag)?;
        fixed(tag, b)
    }

    pub fn u8(&mut self, tag: u8) -> Result<u8, CodecError> {
        Ok(self.array::<1>(tag)?[0])
    }

    pub fn u32(&mut self, tag: u8) -> Result<u32, CodecError> {
        Ok(u32::from_be_bytes(self.array(tag)?))
    }

    pub fn u64(&mut self, tag: u8) -> Result<u64, CodecError> {
        Ok(u64::from_be_bytes(self.array(tag)?))
    }

    pub fn finish(self) -> Result<(), CodecError> {
        if self.rest.is_empty() {
            Ok(())
        } else {
            Err(CodecError::TrailingBytes(self.rest.len()))
        }
    }
}

pub(crate) fn fixed<const N: usize>(tag: u8, b: &[u8]) -> Result<[u8; N], CodecError> {
    b.try_into().map_err(|_| CodecError::BadLength {
        tag,
        len: b.len(),
        expected: N,
    })
}
