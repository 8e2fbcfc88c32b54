//! Recursive-descent parser for the concrete formula syntax.
//!
//! ```text
//! inner   := expr [ "from" "(" IDENT ")" ]
//! expr    := and [ "->" expr ]                      (right-associative)
//! and     := unary [ "and" and ]                    (right-associative)
//! unary   := "not" unary
//!          | IDENT ("believes" | "controls") unary   (operand: formula)
//!          | IDENT ("received" | "said" | "says" | "has") unary
//!          | IDENT "sharedkey" "[" key "]" IDENT
//!          | primary
//! primary := IDENT | IDENT "(" inner { "," inner } ")"
//!          | "fresh" "(" inner ")"
//!          | ("pk_sigma" | "pk_psi" | "pk_delta") "(" IDENT "," key ")"
//!          | "sv" "(" inner "," key "," inner ")"
//!          | "enc" "{" inner "}" "[" key "]"
//!          | "sig" "[" inner "]" "[" key "]"
//!          | "unrec" "(" inner "," IDENT ")"
//!          | "f0" "(" key "," key ")" | "inv" "(" key ")"
//!          | "(" inner { "," inner } ")"
//! key     := IDENT | "f0" "(" key "," key ")" | "inv" "(" key ")"
//! ```

use alloc::boxed::Box;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::formula::{Formula, Key};

/// Words that cannot be used as names.
pub const KEYWORDS: &[&str] = &[
    "believes",
    "controls",
    "received",
    "said",
    "says",
    "has",
    "sharedkey",
    "fresh",
    "pk_sigma",
    "pk_psi",
    "pk_delta",
    "sv",
    "enc",
    "sig",
    "unrec",
    "f0",
    "inv",
    "from",
    "not",
    "and",
];

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("at byte {position}: expected {expected}, found {found}")]
pub struct ParseError {
    /// Byte offset into the parsed text.
    pub position: usize,
    pub expected: String,
    pub found: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Tok {
    Ident(String),
    Number(u64),
    LParen,
    RParen,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Comma,
    Arrow,
    Assign,
    End,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("'{s}'"),
            Tok::Number(n) => format!("'{n}'"),
            Tok::LParen => "'('".into(),
            Tok::RParen => "')'".into(),
            Tok::LBrace => "'{'".into(),
            Tok::RBrace => "'}'".into(),
            Tok::LBracket => "'['".into(),
            Tok::RBracket => "']'".into(),
            Tok::Comma => "','".into(),
            Tok::Arrow => "'->'".into(),
            Tok::Assign => "':='".into(),
            Tok::End => "end of input".into(),
        }
    }
}

fn is_keyword(s: &str) -> bool {
    KEYWORDS.contains(&s)
}

pub(crate) fn lex(text: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        let tok = match c {
            b' ' | b'\t' | b'\r' | b'\n' => {
                i += 1;
                continue;
            }
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b'{' => Tok::LBrace,
            b'}' => Tok::RBrace,
            b'[' => Tok::LBracket,
            b']' => Tok::RBracket,
            b',' => Tok::Comma,
            b'-' if bytes.get(i + 1) == Some(&b'>') => {
                i += 1;
                Tok::Arrow
            }
            b':' if bytes.get(i + 1) == Some(&b'=') => {
                i += 1;
                Tok::Assign
            }
            b'0'..=b'9' => {
                while i + 1 < bytes.len() && bytes[i + 1].is_ascii_digit() {
                    i += 1;
                }
                let digits = &text[start..=i];
                match digits.parse() {
                    Ok(n) => Tok::Number(n),
                    Err(_) => {
                        return Err(ParseError {
                            position: start,
                            expected: "a number that fits in 64 bits".into(),
                            found: format!("'{digits}'"),
                        })
                    }
                }
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                while i + 1 < bytes.len()
                    && (bytes[i + 1].is_ascii_alphanumeric()
                        || matches!(bytes[i + 1], b'_' | b'\'' | b'.'))
                {
                    i += 1;
                }
                Tok::Ident(text[start..=i].to_string())
            }
            _ => {
                let ch = text[start..].chars().next().unwrap_or('?');
                return Err(ParseError {
                    position: start,
                    expected: "a token".into(),
                    found: format!("'{ch}'"),
                });
            }
        };
        out.push((start, tok));
        i += 1;
    }
    out.push((text.len(), Tok::End));
    Ok(out)
}

pub(crate) struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
}

impl Parser {
    pub(crate) fn new(text: &str) -> Result<Self, ParseError> {
        Ok(Parser {
            toks: lex(text)?,
            pos: 0,
        })
    }

    pub(crate) fn peek(&self) -> &Tok {
        &self.toks[self.pos].1
    }

    fn peek_at(&self, ahead: usize) -> &Tok {
        let i = (self.pos + ahead).min(self.toks.len() - 1);
        &self.toks[i].1
    }

    pub(crate) fn offset(&self) -> usize {
        self.toks[self.pos].0
    }

    pub(crate) fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].1.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    pub(crate) fn error(&self, expected: &str) -> ParseError {
        ParseError {
            position: self.offset(),
            expected: expected.to_string(),
            found: self.peek().describe(),
        }
    }

    pub(crate) fn expect(&mut self, tok: Tok) -> Result<(), ParseError> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            Err(self.error(&tok.describe()))
        }
    }

    pub(crate) fn at_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    pub(crate) fn expect_end(&self) -> Result<(), ParseError> {
        if *self.peek() == Tok::End {
            Ok(())
        } else {
            Err(self.error("end of input"))
        }
    }

    /// A non-keyword identifier.
    pub(crate) fn name(&mut self, what: &str) -> Result<String, ParseError> {
        match self.peek() {
            Tok::Ident(s) if !is_keyword(s) => {
                let s = s.clone();
                self.bump();
                Ok(s)
            }
            _ => Err(self.error(what)),
        }
    }

    pub(crate) fn key(&mut self) -> Result<Key, ParseError> {
        if self.at_keyword("f0") {
            self.bump();
            self.expect(Tok::LParen)?;
            let a = self.key()?;
            self.expect(Tok::Comma)?;
            let b = self.key()?;
            self.expect(Tok::RParen)?;
            Ok(Key::f0(a, b))
        } else if self.at_keyword("inv") {
            self.bump();
            self.expect(Tok::LParen)?;
            let k = self.key()?;
            self.expect(Tok::RParen)?;
            Ok(Key::inv(k))
        } else {
            Ok(Key::Name(self.name("a key")?))
        }
    }

    /// An expression in a delimited position, optionally annotated with a
    /// sender: `X from(Q)`.
    pub(crate) fn inner(&mut self) -> Result<Formula, ParseError> {
        let x = self.expr()?;
        if self.at_keyword("from") && *self.peek_at(1) == Tok::LParen {
            self.bump();
            self.bump();
            let q = self.name("a principal")?;
            self.expect(Tok::RParen)?;
            return Ok(Formula::from(x, q));
        }
        Ok(x)
    }

    fn formula_operand(
        &mut self,
        parse: fn(&mut Self) -> Result<Formula, ParseError>,
    ) -> Result<Formula, ParseError> {
        let at = self.offset();
        let f = parse(self)?;
        if f.is_formula() {
            Ok(f)
        } else {
            Err(ParseError {
                position: at,
                expected: "a formula".into(),
                found: format!("message term '{f}'"),
            })
        }
    }

    fn expr(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.formula_or_message(Self::and_expr)?;
        if *self.peek() == Tok::Arrow {
            let lhs = require_formula(lhs.0, lhs.1)?;
            self.bump();
            let rhs = self.formula_operand(Self::expr)?;
            return Ok(Formula::implies(lhs, rhs));
        }
        Ok(lhs.1)
    }

    fn formula_or_message(
        &mut self,
        parse: fn(&mut Self) -> Result<Formula, ParseError>,
    ) -> Result<(usize, Formula), ParseError> {
        let at = self.offset();
        Ok((at, parse(self)?))
    }

    fn and_expr(&mut self) -> Result<Formula, ParseError> {
        let (at, lhs) = self.formula_or_message(Self::unary)?;
        if self.at_keyword("and") {
            let lhs = require_formula(at, lhs)?;
            self.bump();
            let rhs = self.formula_operand(Self::and_expr)?;
            return Ok(Formula::and(lhs, rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Formula, ParseError> {
        if self.at_keyword("not") {
            self.bump();
            return Ok(Formula::not(self.formula_operand(Self::unary)?));
        }
        if let (Tok::Ident(p), Tok::Ident(op)) = (self.peek(), self.peek_at(1)) {
            if !is_keyword(p) {
                let p = p.clone();
                let op = op.clone();
                let ctor: Option<fn(String, Formula) -> Formula> = match op.as_str() {
                    "received" => Some(Formula::received),
                    "said" => Some(Formula::said),
                    "says" => Some(Formula::says),
                    "has" => Some(Formula::has),
                    _ => None,
                };
                if let Some(ctor) = ctor {
                    self.bump();
                    self.bump();
                    return Ok(ctor(p, self.unary()?));
                }
                match op.as_str() {
                    "believes" | "controls" => {
                        self.bump();
                        self.bump();
                        let x = self.formula_operand(Self::unary)?;
                        return Ok(if op == "believes" {
                            Formula::believes(p, x)
                        } else {
                            Formula::controls(p, x)
                        });
                    }
                    "sharedkey" => {
                        self.bump();
                        self.bump();
                        self.expect(Tok::LBracket)?;
                        let k = self.key()?;
                        self.expect(Tok::RBracket)?;
                        let q = self.name("a principal")?;
                        return Ok(Formula::shared_key(p, k, q));
                    }
                    _ => {}
                }
            }
        }
        self.primary()
    }

    fn list(&mut self, close: Tok) -> Result<Vec<Formula>, ParseError> {
        let mut xs = alloc::vec![self.inner()?];
        while *self.peek() == Tok::Comma {
            self.bump();
            xs.push(self.inner()?);
        }
        self.expect(close)?;
        Ok(xs)
    }

    fn primary(&mut self) -> Result<Formula, ParseError> {
        match self.peek().clone() {
            Tok::LParen => {
                self.bump();
                let mut xs = self.list(Tok::RParen)?;
                Ok(if xs.len() == 1 {
                    xs.pop().expect("one element")
                } else {
                    Formula::Tuple(xs)
                })
            }
            Tok::Ident(word) => match word.as_str() {
                "fresh" => {
                    self.bump();
                    self.expect(Tok::LParen)?;
                    let x = self.inner()?;
                    self.expect(Tok::RParen)?;
                    Ok(Formula::fresh(x))
                }
                "pk_sigma" | "pk_psi" | "pk_delta" => {
                    self.bump();
                    self.expect(Tok::LParen)?;
                    let p = self.name("a principal")?;
                    self.expect(Tok::Comma)?;
                    let k = self.key()?;
                    self.expect(Tok::RParen)?;
                    Ok(match word.as_str() {
                        "pk_sigma" => Formula::PkSigma(p, k),
                        "pk_psi" => Formula::PkPsi(p, k),
                        _ => Formula::PkDelta(p, k),
                    })
                }
                "sv" => {
                    self.bump();
                    self.expect(Tok::LParen)?;
                    let x = self.inner()?;
                    self.expect(Tok::Comma)?;
                    let k = self.key()?;
                    self.expect(Tok::Comma)?;
                    let y = self.inner()?;
                    self.expect(Tok::RParen)?;
                    Ok(Formula::Sv(Box::new(x), k, Box::new(y)))
                }
                "enc" => {
                    self.bump();
                    self.expect(Tok::LBrace)?;
                    let x = self.inner()?;
                    self.expect(Tok::RBrace)?;
                    self.expect(Tok::LBracket)?;
                    let k = self.key()?;
                    self.expect(Tok::RBracket)?;
                    Ok(Formula::encrypted(x, k))
                }
                "sig" => {
                    self.bump();
                    self.expect(Tok::LBracket)?;
                    let x = self.inner()?;
                    self.expect(Tok::RBracket)?;
                    self.expect(Tok::LBracket)?;
                    let k = self.key()?;
                    self.expect(Tok::RBracket)?;
                    Ok(Formula::signed(x, k))
                }
                "unrec" => {
                    self.bump();
                    self.expect(Tok::LParen)?;
                    let x = self.inner()?;
                    self.expect(Tok::Comma)?;
                    let p = self.name("a principal")?;
                    self.expect(Tok::RParen)?;
                    Ok(Formula::Unrecognized(Box::new(x), p))
                }
                "f0" | "inv" => Ok(self.key()?.to_message()),
                w if is_keyword(w) => Err(self.error("a formula or message")),
                _ => {
                    self.bump();
                    if *self.peek() == Tok::LParen {
                        self.bump();
                        let args = self.list(Tok::RParen)?;
                        Ok(Formula::FuncApp(word, args))
                    } else {
                        Ok(Formula::Atom(word))
                    }
                }
            },
            _ => Err(self.error("a formula or message")),
        }
    }
}

fn require_formula(at: usize, f: Formula) -> Result<Formula, ParseError> {
    if f.is_formula() {
        Ok(f)
    } else {
        Err(ParseError {
            position: at,
            expected: "a formula".into(),
            found: format!("message term '{f}'"),
        })
    }
}

/// Parses a whole formula (or message term). A trailing `from(Q)` is
/// accepted at top level, as in any other delimited position.
pub fn parse_formula(text: &str) -> Result<Formula, ParseError> {
    let mut p = Parser::new(text)?;
    let f = p.inner()?;
    p.expect_end()?;
    Ok(f)
}

/// Parses a key term: `k`, `f0(k, k')`, `inv(k)`.
pub fn parse_key(text: &str) -> Result<Key, ParseError> {
    let mut p = Parser::new(text)?;
    let k = p.key()?;
    p.expect_end()?;
    Ok(k)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rt(s: &str) {
        let f = parse_formula(s).unwrap();
        assert_eq!(f.to_string(), s, "{f:?}");
        assert_eq!(parse_formula(&f.to_string()).unwrap(), f);
    }

    #[test]
    fn shared_key_belief() {
        let f = parse_formula("client believes (client sharedkey[PSK] CServer)").unwrap();
        assert_eq!(
            f,
            Formula::believes(
                "client",
                Formula::shared_key("client", Key::name("PSK"), "CServer")
            )
        );
    }

    #[test]
    fn modalities_bind_tighter_than_connectives() {
        let f = parse_formula("P believes X and Y -> Z").unwrap();
        let expect = Formula::implies(
            Formula::and(
                Formula::believes("P", Formula::atom("X")),
                Formula::atom("Y"),
            ),
            Formula::atom("Z"),
        );
        assert_eq!(f, expect);
        let g = parse_formula("a -> b -> c").unwrap();
        assert_eq!(
            g,
            Formula::implies(
                Formula::atom("a"),
                Formula::implies(Formula::atom("b"), Formula::atom("c"))
            )
        );
    }

    #[test]
    fn keyword_as_operand_fails() {
        let e = parse_formula("believes believes").unwrap_err();
        assert_eq!(e.position, 0);
        assert!(parse_formula("P believes").is_err());
        assert!(parse_formula("P believes enc{X}[k]").is_err());
        assert!(parse_formula("(a, b) and c").is_err());
        assert!(parse_formula("a and").is_err());
        assert!(parse_formula("a # b").is_err());
    }

    #[test]
    fn printed_forms_are_canonical() {
        rt("CServer believes (client says T)");
        rt("client believes (client received enc{SK}[PSK])");
        rt("R received enc{(SK, fresh(SK)) from(CServer)}[PSK]");
        rt("(P believes phi and P believes (phi -> psi)) -> P believes psi");
        rt("not (P believes phi) -> P believes (not (P believes phi))");
        rt("P has inv(k)");
        rt("P sharedkey[f0(k, k')] Q");
        rt("fresh((a, b)) -> fresh(F(a, b))");
        rt("(pk_sigma(Q, k) and R received X and sv(X, k, Y)) -> Q said Y");
        rt("P received sig[X][k] and P received unrec(X, P)");
    }
}
