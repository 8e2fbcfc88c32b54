//! Formula syntax tree and its canonical printed form.

use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

/// A principal name (`client`, `CServer`, ...).
pub type Principal = String;

/// Key terms: names, the key-agreement combiner `f0(k, k')`, and the
/// inverse `inv(k)` of an asymmetric key.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Key {
    Name(String),
    F0(Box<Key>, Box<Key>),
    Inv(Box<Key>),
}

impl Key {
    pub fn name(n: impl Into<String>) -> Self {
        Key::Name(n.into())
    }

    pub fn f0(a: Key, b: Key) -> Self {
        Key::F0(Box::new(a), Box::new(b))
    }

    pub fn inv(k: Key) -> Self {
        Key::Inv(Box::new(k))
    }

    /// The key in message position. A plain key name is an ordinary atom
    /// there, so `P has k` means the same whether `k` came from a key slot
    /// or was typed as a message.
    pub fn to_message(&self) -> Formula {
        match self {
            Key::Name(n) => Formula::Atom(n.clone()),
            k => Formula::KeyTerm(k.clone()),
        }
    }
}

impl fmt::Display for Key {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Key::Name(n) => f.write_str(n),
            Key::F0(a, b) => write!(f, "f0({a}, {b})"),
            Key::Inv(k) => write!(f, "inv({k})"),
        }
    }
}

/// Formulas and message terms share one tree: in this logic a formula may be
/// sent as (part of) a message. [`Formula::is_formula`] tells the two sorts
/// apart.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Formula {
    /// A bare name: a proposition in formula position, a nonce, key or
    /// timestamp in message position.
    Atom(String),
    Believes(Principal, Box<Formula>),
    Controls(Principal, Box<Formula>),
    Received(Principal, Box<Formula>),
    Said(Principal, Box<Formula>),
    Says(Principal, Box<Formula>),
    Has(Principal, Box<Formula>),
    Fresh(Box<Formula>),
    SharedKey(Principal, Key, Principal),
    PkSigma(Principal, Key),
    PkPsi(Principal, Key),
    PkDelta(Principal, Key),
    Sv(Box<Formula>, Key, Box<Formula>),
    Encrypted(Box<Formula>, Key),
    Signed(Box<Formula>, Key),
    Unrecognized(Box<Formula>, Principal),
    Tuple(Vec<Formula>),
    FuncApp(String, Vec<Formula>),
    From(Box<Formula>, Principal),
    /// A compound key (`f0(..)`, `inv(..)`) used as a message.
    KeyTerm(Key),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
}

macro_rules! modal_ctor {
    ($($fn:ident => $variant:ident),*) => {
        $(
            pub fn $fn(p: impl Into<Principal>, x: Formula) -> Self {
                Formula::$variant(p.into(), Box::new(x))
            }
        )*
    };
}

impl Formula {
    pub fn atom(n: impl Into<String>) -> Self {
        Formula::Atom(n.into())
    }

    modal_ctor!(
        believes => Believes,
        controls => Controls,
        received => Received,
        said => Said,
        says => Says,
        has => Has
    );

    pub fn fresh(x: Formula) -> Self {
        Formula::Fresh(Box::new(x))
    }

    pub fn shared_key(p: impl Into<Principal>, k: Key, q: impl Into<Principal>) -> Self {
        Formula::SharedKey(p.into(), k, q.into())
    }

    pub fn encrypted(x: Formula, k: Key) -> Self {
        Formula::Encrypted(Box::new(x), k)
    }

    pub fn signed(x: Formula, k: Key) -> Self {
        Formula::Signed(Box::new(x), k)
    }

    pub fn from(x: Formula, q: impl Into<Principal>) -> Self {
        Formula::From(Box::new(x), q.into())
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(x: Formula) -> Self {
        Formula::Not(Box::new(x))
    }

    pub fn and(a: Formula, b: Formula) -> Self {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn implies(a: Formula, b: Formula) -> Self {
        Formula::Implies(Box::new(a), Box::new(b))
    }

    /// Right-nested conjunction of one or more formulas.
    pub fn and_all(mut parts: Vec<Formula>) -> Self {
        let mut acc = parts.pop().expect("and_all needs at least one conjunct");
        while let Some(f) = parts.pop() {
            acc = Formula::and(f, acc);
        }
        acc
    }

    /// True for the formula sort; false for pure message terms (encryption,
    /// signatures, tuples, function applications, `from` annotations, keys).
    pub fn is_formula(&self) -> bool {
        !matches!(
            self,
            Formula::Encrypted(..)
                | Formula::Signed(..)
                | Formula::Unrecognized(..)
                | Formula::Tuple(..)
                | Formula::FuncApp(..)
                | Formula::From(..)
                | Formula::KeyTerm(..)
        )
    }

    /// Nodes that print self-delimited and never need grouping parentheses.
    fn is_primary(&self) -> bool {
        matches!(
            self,
            Formula::Atom(_)
                | Formula::Fresh(_)
                | Formula::PkSigma(..)
                | Formula::PkPsi(..)
                | Formula::PkDelta(..)
                | Formula::Sv(..)
                | Formula::Encrypted(..)
                | Formula::Signed(..)
                | Formula::Unrecognized(..)
                | Formula::Tuple(_)
                | Formula::FuncApp(..)
                | Formula::KeyTerm(_)
        )
    }

    /// Applies `f` to every key in the tree, bottom-up through compound keys.
    pub fn map_keys(&self, f: &dyn Fn(&Key) -> Key) -> Formula {
        fn key(k: &Key, f: &dyn Fn(&Key) -> Key) -> Key {
            let inner = match k {
                Key::Name(_) => k.clone(),
                Key::F0(a, b) => Key::f0(key(a, f), key(b, f)),
                Key::Inv(a) => Key::inv(key(a, f)),
            };
            f(&inner)
        }
        let b = |x: &Formula| Box::new(x.map_keys(f));
        use Formula::*;
        match self {
            Atom(_) => self.clone(),
            Believes(p, x) => Believes(p.clone(), b(x)),
            Controls(p, x) => Controls(p.clone(), b(x)),
            Received(p, x) => Received(p.clone(), b(x)),
            Said(p, x) => Said(p.clone(), b(x)),
            Says(p, x) => Says(p.clone(), b(x)),
            Has(p, x) => Has(p.clone(), b(x)),
            Fresh(x) => Fresh(b(x)),
            SharedKey(p, k, q) => SharedKey(p.clone(), key(k, f), q.clone()),
            PkSigma(p, k) => PkSigma(p.clone(), key(k, f)),
            PkPsi(p, k) => PkPsi(p.clone(), key(k, f)),
            PkDelta(p, k) => PkDelta(p.clone(), key(k, f)),
            Sv(x, k, y) => Sv(b(x), key(k, f), b(y)),
            Encrypted(x, k) => Encrypted(b(x), key(k, f)),
            Signed(x, k) => Signed(b(x), key(k, f)),
            Unrecognized(x, p) => Unrecognized(b(x), p.clone()),
            Tuple(xs) => Tuple(xs.iter().map(|x| x.map_keys(f)).collect()),
            FuncApp(n, xs) => FuncApp(n.clone(), xs.iter().map(|x| x.map_keys(f)).collect()),
            From(x, q) => From(b(x), q.clone()),
            KeyTerm(k) => key(k, f).to_message(),
            Not(x) => Not(b(x)),
            And(x, y) => And(b(x), b(y)),
            Implies(x, y) => Implies(b(x), b(y)),
        }
    }

    /// Writes `self` where it is delimited on both sides (top level, inside
    /// brackets, between commas), so a `from` annotation needs no grouping.
    fn write_inner(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::From(x, q) => {
                x.write_inner(f)?;
                write!(f, " from({q})")
            }
            _ => self.write_expr(f),
        }
    }

    fn write_grouped(&self, f: &mut fmt::Formatter<'_>, group: bool) -> fmt::Result {
        if group {
            f.write_str("(")?;
            self.write_inner(f)?;
            f.write_str(")")
        } else {
            self.write_expr(f)
        }
    }

    fn write_list(xs: &[Formula], f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, x) in xs.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            x.write_inner(f)?;
        }
        Ok(())
    }

    fn write_expr(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Formula::*;
        let modal = |f: &mut fmt::Formatter<'_>, p: &str, op: &str, x: &Formula| {
            write!(f, "{p} {op} ")?;
            x.write_grouped(f, !x.is_primary())
        };
        match self {
            Atom(n) => f.write_str(n),
            Believes(p, x) => modal(f, p, "believes", x),
            Controls(p, x) => modal(f, p, "controls", x),
            Received(p, x) => modal(f, p, "received", x),
            Said(p, x) => modal(f, p, "said", x),
            Says(p, x) => modal(f, p, "says", x),
            Has(p, x) => modal(f, p, "has", x),
            Fresh(x) => {
                f.write_str("fresh(")?;
                x.write_inner(f)?;
                f.write_str(")")
            }
            SharedKey(p, k, q) => write!(f, "{p} sharedkey[{k}] {q}"),
            PkSigma(p, k) => write!(f, "pk_sigma({p}, {k})"),
            PkPsi(p, k) => write!(f, "pk_psi({p}, {k})"),
            PkDelta(p, k) => write!(f, "pk_delta({p}, {k})"),
            Sv(x, k, y) => {
                f.write_str("sv(")?;
                x.write_inner(f)?;
                write!(f, ", {k}, ")?;
                y.write_inner(f)?;
                f.write_str(")")
            }
            Encrypted(x, k) => {
                f.write_str("enc{")?;
                x.write_inner(f)?;
                write!(f, "}}[{k}]")
            }
            Signed(x, k) => {
                f.write_str("sig[")?;
                x.write_inner(f)?;
                write!(f, "][{k}]")
            }
            Unrecognized(x, p) => {
                f.write_str("unrec(")?;
                x.write_inner(f)?;
                write!(f, ", {p})")
            }
            Tuple(xs) => {
                f.write_str("(")?;
                Formula::write_list(xs, f)?;
                f.write_str(")")
            }
            FuncApp(n, xs) => {
                write!(f, "{n}(")?;
                Formula::write_list(xs, f)?;
                f.write_str(")")
            }
            From(..) => self.write_grouped(f, true),
            KeyTerm(k) => write!(f, "{k}"),
            Not(x) => {
                f.write_str("not ")?;
                x.write_grouped(f, !x.is_primary())
            }
            And(a, b) => {
                a.write_grouped(f, matches!(**a, And(..) | Implies(..) | From(..)))?;
                f.write_str(" and ")?;
                b.write_grouped(f, matches!(**b, Implies(..) | From(..)))
            }
            Implies(a, b) => {
                a.write_grouped(f, matches!(**a, And(..) | Implies(..) | From(..)))?;
                f.write_str(" -> ")?;
                b.write_grouped(f, matches!(**b, From(..)))
            }
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write_inner(f)
    }
}
