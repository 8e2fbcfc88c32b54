//! Step-by-step proof checking.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use super::axiom::{instantiate, AxiomId, InstantiateError, Subst};
use super::formula::Formula;

/// Propositional steps are decided by truth table; this caps the table size.
pub const MAX_TAUT_ATOMS: usize = 12;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProofStep {
    pub label: String,
    pub conclusion: Formula,
    pub rule: AxiomId,
    /// Labels of earlier steps or script premises.
    pub premises: Vec<String>,
    pub substitution: Subst,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProofScript {
    pub premises: Vec<(String, Formula)>,
    pub steps: Vec<ProofStep>,
    pub goal: Formula,
}

impl ProofScript {
    pub fn premise(&self, label: &str) -> Option<&Formula> {
        self.premises
            .iter()
            .find(|(l, _)| l == label)
            .map(|(_, f)| f)
    }

    /// The same script with one premise deleted (steps untouched).
    pub fn without_premise(&self, label: &str) -> ProofScript {
        let mut s = self.clone();
        s.premises.retain(|(l, _)| l != label);
        s
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum Violation {
    #[error("label {0} is already defined")]
    DuplicateLabel(String),
    #[error("cites {0}, which is neither a premise nor an earlier step")]
    UnknownPremise(String),
    #[error("cites {0}, which was rejected")]
    DependsOnRejected(String),
    #[error("{rule} takes {expected} cited step(s), got {found}")]
    WrongPremiseCount {
        rule: AxiomId,
        expected: usize,
        found: usize,
    },
    #[error("{0} takes no substitution")]
    UnexpectedSubstitution(AxiomId),
    #[error(transparent)]
    Instantiate(#[from] InstantiateError),
    #[error("conclusion differs from the schema instance '{expected}'")]
    SchemaMismatch { expected: Formula },
    #[error("conclusion is not the consequent of an implication whose antecedent is the other cited step")]
    NotModusPonens,
    #[error("necessitation needs a theorem, but {0} depends on premises")]
    NotATheorem(String),
    #[error("conclusion is not 'P believes' applied to the cited theorem")]
    NotNecessitation,
    #[error("conclusion is not a script premise")]
    NotAPremise,
    #[error("conclusion does not follow propositionally from the cited steps")]
    NotATautology,
    #[error("propositional step has {0} atoms; at most {MAX_TAUT_ATOMS} are decided")]
    TooManyAtoms(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepResult {
    pub label: String,
    pub rule: AxiomId,
    pub outcome: Result<(), Violation>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Failure {
    Step {
        label: String,
        violation: Violation,
    },
    /// Every step checked but the last conclusion is not the goal.
    GoalNotReached {
        last: Option<Formula>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Verdict {
    pub accepted: bool,
    pub steps: Vec<StepResult>,
    /// The first failure, if any.
    pub failure: Option<Failure>,
}

impl Verdict {
    pub fn failing_label(&self) -> Option<&str> {
        match &self.failure {
            Some(Failure::Step { label, .. }) => Some(label),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
enum Entry {
    Valid { formula: Formula, theorem: bool },
    Rejected,
}

/// What the checker knows before a step: premises and earlier steps.
#[derive(Debug, Clone)]
pub struct Context<'a> {
    script: &'a ProofScript,
    entries: BTreeMap<String, Entry>,
}

impl<'a> Context<'a> {
    pub fn new(script: &'a ProofScript) -> Self {
        let entries = script
            .premises
            .iter()
            .map(|(l, f)| {
                (
                    l.clone(),
                    Entry::Valid {
                        formula: f.clone(),
                        theorem: false,
                    },
                )
            })
            .collect();
        Context { script, entries }
    }

    fn resolve(&self, label: &str) -> Result<(&Formula, bool), Violation> {
        match self.entries.get(label) {
            Some(Entry::Valid { formula, theorem }) => Ok((formula, *theorem)),
            Some(Entry::Rejected) => Err(Violation::DependsOnRejected(label.into())),
            None => Err(Violation::UnknownPremise(label.into())),
        }
    }

    /// Checks one step against the context. On success returns whether the
    /// conclusion is a theorem (holds without any script premise).
    pub fn check_step(&self, step: &ProofStep) -> Result<bool, Violation> {
        if self.entries.contains_key(&step.label) {
            return Err(Violation::DuplicateLabel(step.label.clone()));
        }
        let cited = step
            .premises
            .iter()
            .map(|l| self.resolve(l))
            .collect::<Result<Vec<_>, _>>()?;
        let count = |expected: usize| {
            if cited.len() == expected {
                Ok(())
            } else {
                Err(Violation::WrongPremiseCount {
                    rule: step.rule,
                    expected,
                    found: cited.len(),
                })
            }
        };
        if !step.rule.is_schema() && !step.substitution.is_empty() {
            return Err(Violation::UnexpectedSubstitution(step.rule));
        }
        match step.rule {
            AxiomId::Mp => {
                count(2)?;
                let [(a, ta), (b, tb)] = [cited[0], cited[1]];
                let fits = |minor: &Formula, major: &Formula| matches!(major, Formula::Implies(lhs, rhs) if **lhs == *minor && **rhs == step.conclusion);
                if fits(a, b) || fits(b, a) {
                    Ok(ta && tb)
                } else {
                    Err(Violation::NotModusPonens)
                }
            }
            AxiomId::Nec => {
                count(1)?;
                let (f, theorem) = cited[0];
                if !theorem {
                    return Err(Violation::NotATheorem(step.premises[0].clone()));
                }
                match &step.conclusion {
                    Formula::Believes(_, inner) if **inner == *f => Ok(true),
                    _ => Err(Violation::NotNecessitation),
                }
            }
            AxiomId::Premise => {
                count(0)?;
                if self
                    .script
                    .premises
                    .iter()
                    .any(|(l, f)| *f == step.conclusion && self.entries.contains_key(l))
                {
                    Ok(false)
                } else {
                    Err(Violation::NotAPremise)
                }
            }
            AxiomId::Taut => {
                let hyps: Vec<&Formula> = cited.iter().map(|(f, _)| *f).collect();
                propositional_consequence(&hyps, &step.conclusion)?;
                Ok(cited.iter().all(|(_, t)| *t))
            }
            schema => {
                count(0)?;
                let expected = instantiate(schema, &step.substitution)?;
                if expected == step.conclusion {
                    Ok(true)
                } else {
                    Err(Violation::SchemaMismatch { expected })
                }
            }
        }
    }

    fn record(&mut self, step: &ProofStep, outcome: &Result<bool, Violation>) {
        if matches!(outcome, Err(Violation::DuplicateLabel(_))) {
            return;
        }
        let entry = match outcome {
            Ok(theorem) => Entry::Valid {
                formula: step.conclusion.clone(),
                theorem: *theorem,
            },
            Err(_) => Entry::Rejected,
        };
        self.entries.insert(step.label.clone(), entry);
    }
}

/// Checks every step in order. A script is accepted iff all steps check and
/// the last conclusion is the goal.
pub fn check_script(script: &ProofScript) -> Verdict {
    let mut ctx = Context::new(script);
    let mut steps = Vec::with_capacity(script.steps.len());
    let mut failure = None;
    for step in &script.steps {
        let outcome = ctx.check_step(step);
        ctx.record(step, &outcome);
        if let (Err(v), None) = (&outcome, &failure) {
            failure = Some(Failure::Step {
                label: step.label.clone(),
                violation: v.clone(),
            });
        }
        steps.push(StepResult {
            label: step.label.clone(),
            rule: step.rule,
            outcome: outcome.map(|_| ()),
        });
    }
    if failure.is_none() {
        let last = script.steps.last().map(|s| &s.conclusion);
        if last != Some(&script.goal) {
            failure = Some(Failure::GoalNotReached {
                last: last.cloned(),
            });
        }
    }
    Verdict {
        accepted: failure.is_none(),
        steps,
        failure,
    }
}

/// Decides whether `hyps` propositionally entail `goal`, treating every
/// maximal subformula that is not `not`/`and`/`->` as an opaque atom.
pub fn propositional_consequence(hyps: &[&Formula], goal: &Formula) -> Result<(), Violation> {
    fn collect<'f>(f: &'f Formula, atoms: &mut Vec<&'f Formula>) {
        match f {
            Formula::Not(a) => collect(a, atoms),
            Formula::And(a, b) | Formula::Implies(a, b) => {
                collect(a, atoms);
                collect(b, atoms);
            }
            atom => {
                if !atoms.contains(&atom) {
                    atoms.push(atom);
                }
            }
        }
    }
    fn eval(f: &Formula, atoms: &[&Formula], row: u32) -> bool {
        match f {
            Formula::Not(a) => !eval(a, atoms, row),
            Formula::And(a, b) => eval(a, atoms, row) && eval(b, atoms, row),
            Formula::Implies(a, b) => !eval(a, atoms, row) || eval(b, atoms, row),
            atom => {
                let i = atoms
                    .iter()
                    .position(|x| *x == atom)
                    .expect("atom collected");
                row & (1 << i) != 0
            }
        }
    }
    let mut atoms = Vec::new();
    for h in hyps {
        collect(h, &mut atoms);
    }
    collect(goal, &mut atoms);
    if atoms.len() > MAX_TAUT_ATOMS {
        return Err(Violation::TooManyAtoms(atoms.len()));
    }
    for row in 0..(1u32 << atoms.len()) {
        if hyps.iter().all(|h| eval(h, &atoms, row)) && !eval(goal, &atoms, row) {
            return Err(Violation::NotATautology);
        }
    }
    Ok(())
}
