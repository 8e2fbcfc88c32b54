//! SVO belief logic: formulas, the axiom schemas A1–A22, a proof checker,
//! and the bundled derivation of the handshake's authentication goal,
//! `CServer believes (client says T)`.
//!
//! Checking is purely syntactic. A proof step cites either an axiom schema
//! (with a substitution for its metavariables), modus ponens, necessitation,
//! a script premise, or a propositional tautology step decided by truth
//! table. See [`script`] for the file format and [`parse`] for the grammar.

pub mod axiom;
pub mod check;
pub mod formula;
pub mod parse;
pub mod script;

pub use axiom::{instantiate, AxiomId, InstantiateError, Sort, Subst, Term};
pub use check::{check_script, Failure, ProofScript, ProofStep, StepResult, Verdict, Violation};
pub use formula::{Formula, Key, Principal};
pub use parse::{parse_formula, parse_key, ParseError};
pub use script::{parse_script, render_script, ScriptError};

/// Source text of the bundled derivation.
pub const HANDSHAKE_DERIVATION: &str = include_str!("handshake_derivation.svo");

/// Premises whose removal must break the bundled derivation.
pub const ESSENTIAL_PREMISES: [&str; 6] = ["I1", "I2", "C1", "C2", "P1", "AUX1"];

/// The bundled derivation: premises I1–I5, R1, R2, C1, C2, P1, AUX1, AUX2 and
/// the micro-step expansion of D1–D6.
pub fn handshake_derivation() -> ProofScript {
    parse_script(HANDSHAKE_DERIVATION).expect("bundled derivation parses")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_derivation_is_accepted() {
        let script = handshake_derivation();
        let v = check_script(&script);
        assert!(v.accepted, "{:?}", v.failure);
        assert_eq!(
            script.goal,
            parse_formula("CServer believes (client says T)").unwrap()
        );
    }

    #[test]
    fn each_essential_premise_is_needed() {
        for p in ESSENTIAL_PREMISES {
            let v = check_script(&handshake_derivation().without_premise(p));
            assert!(!v.accepted, "{p}");
            assert!(v.failing_label().is_some(), "{p}");
        }
    }
}
