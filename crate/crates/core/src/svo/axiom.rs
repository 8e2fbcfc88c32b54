//! The axiom schemas A1–A22, the rule identifiers, and schema instantiation.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use super::formula::{Formula, Key, Principal};

/// An axiom schema or one of the inference rules a proof step may cite.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AxiomId {
    A1,
    A2,
    A3,
    A4,
    A5,
    A6,
    A7,
    A8,
    A9,
    A10,
    A11,
    A12,
    A13,
    A14,
    A15,
    A16,
    A17,
    A18,
    A19,
    A20,
    A21,
    A22,
    /// Modus ponens.
    Mp,
    /// Necessitation.
    Nec,
    /// Restates a script premise.
    Premise,
    /// Propositional consequence of the cited steps.
    Taut,
}

impl AxiomId {
    pub const SCHEMAS: [AxiomId; 22] = {
        use AxiomId::*;
        [
            A1, A2, A3, A4, A5, A6, A7, A8, A9, A10, A11, A12, A13, A14, A15, A16, A17, A18, A19,
            A20, A21, A22,
        ]
    };

    pub fn is_schema(self) -> bool {
        !matches!(
            self,
            AxiomId::Mp | AxiomId::Nec | AxiomId::Premise | AxiomId::Taut
        )
    }

    /// The metavariables a substitution for this schema must bind.
    pub fn metavariables(self) -> &'static [&'static str] {
        use AxiomId::*;
        match self {
            A1 => &["P", "phi", "psi"],
            A2 | A3 | A4 | A20 => &["P", "phi"],
            A5 => &["P", "Q", "R", "k", "X"],
            A6 => &["Q", "R", "k", "X", "Y"],
            A7 => &["P", "Q", "k", "k'"],
            A8 => &["phi", "k", "k'"],
            A9 | A13 | A16 | A17 => &["P", "X", "i"],
            A10 | A11 => &["P", "X", "k"],
            A12 | A21 => &["P", "X"],
            A14 | A15 => &["P", "X", "F"],
            A18 => &["X", "i"],
            A19 => &["X", "F"],
            A22 => &["P", "Q", "k"],
            Mp | Nec | Premise | Taut => &[],
        }
    }
}

impl fmt::Display for AxiomId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AxiomId::Mp => f.write_str("MP"),
            AxiomId::Nec => f.write_str("NEC"),
            AxiomId::Premise => f.write_str("PREMISE"),
            AxiomId::Taut => f.write_str("TAUT"),
            a => write!(
                f,
                "A{}",
                AxiomId::SCHEMAS
                    .iter()
                    .position(|s| s == a)
                    .expect("schema")
                    + 1
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown rule '{0}'")]
pub struct UnknownRule(pub String);

impl FromStr for AxiomId {
    type Err = UnknownRule;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "MP" => Ok(AxiomId::Mp),
            "NEC" => Ok(AxiomId::Nec),
            "PREMISE" => Ok(AxiomId::Premise),
            "TAUT" => Ok(AxiomId::Taut),
            _ => s
                .strip_prefix('A')
                .filter(|n| !n.starts_with('0'))
                .and_then(|n| n.parse::<usize>().ok())
                .and_then(|n| n.checked_sub(1))
                .and_then(|i| AxiomId::SCHEMAS.get(i).copied())
                .ok_or_else(|| UnknownRule(s.to_string())),
        }
    }
}

/// What a metavariable ranges over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sort {
    Principal,
    Key,
    /// Anything that can be sent, formulas included.
    Message,
    Formula,
    Function,
    /// A 1-based tuple position.
    Index,
}

impl Sort {
    pub fn of(metavariable: &str) -> Option<Sort> {
        Some(match metavariable {
            "P" | "Q" | "R" => Sort::Principal,
            "k" | "k'" => Sort::Key,
            "X" | "Y" => Sort::Message,
            "phi" | "psi" => Sort::Formula,
            "F" => Sort::Function,
            "i" => Sort::Index,
            _ => return None,
        })
    }
}

impl fmt::Display for Sort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sort::Principal => "principal",
            Sort::Key => "key",
            Sort::Message => "message",
            Sort::Formula => "formula",
            Sort::Function => "function name",
            Sort::Index => "index",
        })
    }
}

/// A value bound to a metavariable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Term {
    Principal(Principal),
    Key(Key),
    Formula(Formula),
    Function(String),
    Index(usize),
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Principal(p) | Term::Function(p) => f.write_str(p),
            Term::Key(k) => write!(f, "{k}"),
            Term::Formula(x) => write!(f, "{x}"),
            Term::Index(i) => write!(f, "{i}"),
        }
    }
}

pub type Subst = BTreeMap<String, Term>;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum InstantiateError {
    #[error("{0} is an inference rule, not an axiom schema")]
    NotASchema(AxiomId),
    #[error("no binding for metavariable {0}")]
    MissingBinding(&'static str),
    #[error("{axiom} has no metavariable {name}")]
    UnexpectedBinding { axiom: AxiomId, name: String },
    #[error("{name} must be a {expected}, got '{got}'")]
    SortMismatch {
        name: &'static str,
        expected: Sort,
        got: String,
    },
    #[error("{name} must be a tuple of at least two messages, got '{got}'")]
    NotATuple { name: &'static str, got: String },
    #[error("index {index} is outside 1..={len}")]
    IndexOutOfRange { index: usize, len: usize },
}

struct Binder<'a> {
    axiom: AxiomId,
    subst: &'a Subst,
}

impl<'a> Binder<'a> {
    fn get(&self, name: &'static str) -> Result<&'a Term, InstantiateError> {
        self.subst
            .get(name)
            .ok_or(InstantiateError::MissingBinding(name))
    }

    fn mismatch(name: &'static str, expected: Sort, got: &Term) -> InstantiateError {
        InstantiateError::SortMismatch {
            name,
            expected,
            got: got.to_string(),
        }
    }

    fn principal(&self, name: &'static str) -> Result<Principal, InstantiateError> {
        match self.get(name)? {
            Term::Principal(p) => Ok(p.clone()),
            // A bare name parsed as a message is an acceptable principal.
            Term::Formula(Formula::Atom(p)) => Ok(p.clone()),
            t => Err(Self::mismatch(name, Sort::Principal, t)),
        }
    }

    fn key(&self, name: &'static str) -> Result<Key, InstantiateError> {
        match self.get(name)? {
            Term::Key(k) => Ok(k.clone()),
            Term::Principal(n) | Term::Formula(Formula::Atom(n)) => Ok(Key::Name(n.clone())),
            Term::Formula(Formula::KeyTerm(k)) => Ok(k.clone()),
            t => Err(Self::mismatch(name, Sort::Key, t)),
        }
    }

    fn message(&self, name: &'static str) -> Result<Formula, InstantiateError> {
        match self.get(name)? {
            Term::Formula(f) => Ok(f.clone()),
            Term::Principal(n) => Ok(Formula::Atom(n.clone())),
            Term::Key(k) => Ok(k.to_message()),
            t => Err(Self::mismatch(name, Sort::Message, t)),
        }
    }

    fn formula(&self, name: &'static str) -> Result<Formula, InstantiateError> {
        match self.get(name)? {
            Term::Formula(f) if f.is_formula() => Ok(f.clone()),
            Term::Principal(n) => Ok(Formula::Atom(n.clone())),
            t => Err(Self::mismatch(name, Sort::Formula, t)),
        }
    }

    fn function(&self, name: &'static str) -> Result<String, InstantiateError> {
        match self.get(name)? {
            Term::Function(n) | Term::Principal(n) | Term::Formula(Formula::Atom(n)) => {
                Ok(n.clone())
            }
            t => Err(Self::mismatch(name, Sort::Function, t)),
        }
    }

    fn index(&self, name: &'static str) -> Result<usize, InstantiateError> {
        match self.get(name)? {
            Term::Index(i) => Ok(*i),
            t => Err(Self::mismatch(name, Sort::Index, t)),
        }
    }

    /// `(X, Xi)` for the tuple schemas.
    fn component(&self) -> Result<(Formula, Formula), InstantiateError> {
        let x = self.message("X")?;
        let i = self.index("i")?;
        let Formula::Tuple(xs) = &x else {
            return Err(InstantiateError::NotATuple {
                name: "X",
                got: x.to_string(),
            });
        };
        if xs.len() < 2 {
            return Err(InstantiateError::NotATuple {
                name: "X",
                got: x.to_string(),
            });
        }
        if i == 0 || i > xs.len() {
            return Err(InstantiateError::IndexOutOfRange {
                index: i,
                len: xs.len(),
            });
        }
        let xi = xs[i - 1].clone();
        Ok((x, xi))
    }

    fn check_coverage(&self) -> Result<(), InstantiateError> {
        let wanted = self.axiom.metavariables();
        for name in wanted {
            self.get(name)?;
        }
        if let Some(extra) = self.subst.keys().find(|k| !wanted.contains(&k.as_str())) {
            return Err(InstantiateError::UnexpectedBinding {
                axiom: self.axiom,
                name: extra.clone(),
            });
        }
        Ok(())
    }
}

fn components(x: &Formula) -> Vec<Formula> {
    match x {
        Formula::Tuple(xs) => xs.clone(),
        other => vec![other.clone()],
    }
}

/// `F(X1, ..., Xn)` for a tuple `X`, `F(X)` otherwise.
fn apply(func: String, x: &Formula) -> Formula {
    Formula::FuncApp(func, components(x))
}

fn iff(a: Formula, b: Formula) -> Formula {
    Formula::and(
        Formula::implies(a.clone(), b.clone()),
        Formula::implies(b, a),
    )
}

/// Instantiates a schema. The substitution must bind exactly the schema's
/// metavariables, each with a term of the right sort.
pub fn instantiate(axiom: AxiomId, subst: &Subst) -> Result<Formula, InstantiateError> {
    use AxiomId::*;
    use Formula as F;
    if !axiom.is_schema() {
        return Err(InstantiateError::NotASchema(axiom));
    }
    let b = Binder { axiom, subst };
    b.check_coverage()?;
    Ok(match axiom {
        A1 => {
            let (p, phi, psi) = (b.principal("P")?, b.formula("phi")?, b.formula("psi")?);
            F::implies(
                F::and(
                    F::believes(p.clone(), phi.clone()),
                    F::believes(p.clone(), F::implies(phi, psi.clone())),
                ),
                F::believes(p, psi),
            )
        }
        A2 => {
            let (p, phi) = (b.principal("P")?, b.formula("phi")?);
            F::implies(F::believes(p, phi.clone()), phi)
        }
        A3 => {
            let (p, phi) = (b.principal("P")?, b.formula("phi")?);
            let bel = F::believes(p.clone(), phi);
            F::implies(bel.clone(), F::believes(p, bel))
        }
        A4 => {
            let (p, phi) = (b.principal("P")?, b.formula("phi")?);
            let not_bel = F::not(F::believes(p.clone(), phi));
            F::implies(not_bel.clone(), F::believes(p, not_bel))
        }
        A5 => {
            let (p, q, r, k, x) = (
                b.principal("P")?,
                b.principal("Q")?,
                b.principal("R")?,
                b.key("k")?,
                b.message("X")?,
            );
            F::implies(
                F::and(
                    F::shared_key(p, k.clone(), q.clone()),
                    F::received(r, F::encrypted(F::from(x.clone(), q.clone()), k)),
                ),
                F::and(F::said(q.clone(), x.clone()), F::has(q, x)),
            )
        }
        A6 => {
            let (q, r, k, x, y) = (
                b.principal("Q")?,
                b.principal("R")?,
                b.key("k")?,
                b.message("X")?,
                b.message("Y")?,
            );
            F::implies(
                F::and_all(vec![
                    F::PkSigma(q.clone(), k.clone()),
                    F::received(r, x.clone()),
                    F::Sv(
                        alloc::boxed::Box::new(x),
                        k,
                        alloc::boxed::Box::new(y.clone()),
                    ),
                ]),
                F::said(q, y),
            )
        }
        A7 => {
            let (p, q, k, k2) = (
                b.principal("P")?,
                b.principal("Q")?,
                b.key("k")?,
                b.key("k'")?,
            );
            F::implies(
                F::and(
                    F::PkDelta(p.clone(), k.clone()),
                    F::PkDelta(q.clone(), k2.clone()),
                ),
                F::shared_key(p, Key::f0(k, k2), q),
            )
        }
        A8 => {
            let (phi, k, k2) = (b.formula("phi")?, b.key("k")?, b.key("k'")?);
            let from = Key::f0(k.clone(), k2.clone());
            let to = Key::f0(k2, k);
            let swapped = phi.map_keys(&|key| {
                if *key == from {
                    to.clone()
                } else {
                    key.clone()
                }
            });
            iff(phi, swapped)
        }
        A9 => {
            let p = b.principal("P")?;
            let (x, xi) = b.component()?;
            F::implies(F::received(p.clone(), x), F::received(p, xi))
        }
        A10 => {
            let (p, x, k) = (b.principal("P")?, b.message("X")?, b.key("k")?);
            F::implies(
                F::and(
                    F::received(p.clone(), F::encrypted(x.clone(), k.clone())),
                    F::has(p.clone(), Key::inv(k).to_message()),
                ),
                F::received(p, x),
            )
        }
        A11 => {
            let (p, x, k) = (b.principal("P")?, b.message("X")?, b.key("k")?);
            F::implies(
                F::received(p.clone(), F::signed(x.clone(), k)),
                F::received(p, x),
            )
        }
        A12 => {
            let (p, x) = (b.principal("P")?, b.message("X")?);
            F::implies(F::received(p.clone(), x.clone()), F::has(p, x))
        }
        A13 => {
            let p = b.principal("P")?;
            let (x, xi) = b.component()?;
            F::implies(F::has(p.clone(), x), F::has(p, xi))
        }
        A14 => {
            let (p, x, func) = (b.principal("P")?, b.message("X")?, b.function("F")?);
            let has_each = components(&x)
                .into_iter()
                .map(|xi| F::has(p.clone(), xi))
                .collect();
            F::implies(F::and_all(has_each), F::has(p, apply(func, &x)))
        }
        A15 => {
            let (p, x, func) = (b.principal("P")?, b.message("X")?, b.function("F")?);
            F::implies(
                F::believes(p.clone(), F::has(p.clone(), apply(func, &x))),
                F::believes(p.clone(), F::has(p, x)),
            )
        }
        A16 => {
            let p = b.principal("P")?;
            let (x, xi) = b.component()?;
            F::implies(
                F::said(p.clone(), x),
                F::and(F::said(p.clone(), xi.clone()), F::has(p, xi)),
            )
        }
        A17 => {
            let p = b.principal("P")?;
            let (x, xi) = b.component()?;
            F::implies(
                F::says(p.clone(), x.clone()),
                F::and(F::said(p.clone(), x), F::says(p, xi)),
            )
        }
        A18 => {
            let (x, xi) = b.component()?;
            F::implies(F::fresh(xi), F::fresh(x))
        }
        A19 => {
            let (x, func) = (b.message("X")?, b.function("F")?);
            F::implies(F::fresh(x.clone()), F::fresh(apply(func, &x)))
        }
        A20 => {
            let (p, phi) = (b.principal("P")?, b.formula("phi")?);
            F::implies(
                F::and(F::controls(p.clone(), phi.clone()), F::says(p, phi.clone())),
                phi,
            )
        }
        A21 => {
            let (p, x) = (b.principal("P")?, b.message("X")?);
            F::implies(
                F::and(F::fresh(x.clone()), F::said(p.clone(), x.clone())),
                F::says(p, x),
            )
        }
        A22 => {
            let (p, q, k) = (b.principal("P")?, b.principal("Q")?, b.key("k")?);
            iff(
                F::shared_key(p.clone(), k.clone(), q.clone()),
                F::shared_key(q, k, p),
            )
        }
        Mp | Nec | Premise | Taut => unreachable!("rules rejected above"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::svo::parse::parse_formula;

    fn subst(pairs: &[(&str, Term)]) -> Subst {
        pairs
            .iter()
            .map(|(k, v)| (k.to_string(), v.clone()))
            .collect()
    }

    fn p(s: &str) -> Term {
        Term::Principal(s.into())
    }

    #[test]
    fn rule_names_round_trip() {
        for a in AxiomId::SCHEMAS.iter().chain(&[
            AxiomId::Mp,
            AxiomId::Nec,
            AxiomId::Premise,
            AxiomId::Taut,
        ]) {
            assert_eq!(a.to_string().parse::<AxiomId>().unwrap(), *a);
        }
        assert!("A23".parse::<AxiomId>().is_err());
        assert!("A0".parse::<AxiomId>().is_err());
        assert!("A05".parse::<AxiomId>().is_err());
    }

    #[test]
    fn a2_fresh_sk() {
        let s = subst(&[
            ("P", p("client")),
            ("phi", Term::Formula(parse_formula("fresh(SK)").unwrap())),
        ]);
        assert_eq!(
            instantiate(AxiomId::A2, &s).unwrap(),
            parse_formula("client believes fresh(SK) -> fresh(SK)").unwrap()
        );
    }

    #[test]
    fn a22_two_implications() {
        let s = subst(&[
            ("P", p("P")),
            ("k", Term::Key(Key::name("k"))),
            ("Q", p("Q")),
        ]);
        assert_eq!(
            instantiate(AxiomId::A22, &s).unwrap().to_string(),
            "(P sharedkey[k] Q -> Q sharedkey[k] P) and (Q sharedkey[k] P -> P sharedkey[k] Q)"
        );
    }

    #[test]
    fn a1_rejects_key_for_formula() {
        let s = subst(&[
            ("P", p("client")),
            ("phi", Term::Key(Key::name("SK"))),
            ("psi", Term::Formula(Formula::atom("x"))),
        ]);
        assert!(matches!(
            instantiate(AxiomId::A1, &s),
            Err(InstantiateError::SortMismatch { name: "phi", .. })
        ));
    }

    #[test]
    fn missing_and_extra_bindings() {
        let s = subst(&[("P", p("client"))]);
        assert_eq!(
            instantiate(AxiomId::A2, &s),
            Err(InstantiateError::MissingBinding("phi"))
        );
        let s = subst(&[
            ("P", p("a")),
            ("X", Term::Formula(Formula::atom("x"))),
            ("Q", p("b")),
        ]);
        assert!(matches!(
            instantiate(AxiomId::A12, &s),
            Err(InstantiateError::UnexpectedBinding { .. })
        ));
        assert_eq!(
            instantiate(AxiomId::Mp, &Subst::new()),
            Err(InstantiateError::NotASchema(AxiomId::Mp))
        );
    }
}
