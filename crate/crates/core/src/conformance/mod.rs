//! Conformance checks.
//!
//! [`check`] runs a compilation step by step and, before every step, asks
//! the [`audit`] module which derivations exist. It reports any step where
//! the evaluator and the auditor disagree, where more than one derivation
//! exists, where an expression step touched the state, or where the state
//! shrank. [`gen`] produces random inputs for it and [`shrink`] reduces the
//! ones that fail.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::env::Scope;
use crate::eval::{
    check_references, CompileError, Configuration, ErrorKind, Judgement, Machine, Rule, Settings,
    State,
};
use crate::syntax::Manifest;
use crate::value::{Catalog, Value};

pub mod audit;
pub mod gen;
pub mod monotone;
pub mod shrink;

pub use audit::{audit, Audit};
pub use monotone::{check_monotone, state_le, Violation};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Problem {
    /// The auditor found more than one derivation.
    Nondeterministic { step: u64, derivations: Vec<Vec<Rule>> },
    /// The evaluator used a derivation the auditor did not find.
    Mismatch {
        step: u64,
        evaluator: Vec<Rule>,
        auditor: Vec<Vec<Rule>>,
    },
    /// The evaluator reported an error although a rule applies.
    ErrorButApplicable {
        step: u64,
        kind: ErrorKind,
        auditor: Vec<Vec<Rule>>,
    },
    /// An expression-level step changed the state.
    Impure { step: u64, rule: Rule },
    NotMonotone(Violation),
    /// Scope statements introduced and eliminated do not match up.
    UnbalancedScopes { introduced: u64, eliminated: u64 },
    /// Bindings of defined-resource frames survived the compilation.
    LeftoverFrames(Vec<Scope>),
    /// The evaluator got stuck without a proper error.
    Stuck(CompileError),
}

impl fmt::Display for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Problem::Nondeterministic { step, derivations } => {
                write!(f, "step {step}: {} derivations: {derivations:?}", derivations.len())
            }
            Problem::Mismatch { step, evaluator, auditor } => {
                write!(f, "step {step}: evaluator used {evaluator:?}, auditor found {auditor:?}")
            }
            Problem::ErrorButApplicable { step, kind, auditor } => {
                write!(f, "step {step}: evaluator raised {kind} but {auditor:?} apply")
            }
            Problem::Impure { step, rule } => write!(f, "step {step}: {rule} changed the state"),
            Problem::NotMonotone(v) => write!(f, "{v}"),
            Problem::UnbalancedScopes { introduced, eliminated } => {
                write!(f, "{introduced} scopes introduced, {eliminated} eliminated")
            }
            Problem::LeftoverFrames(scopes) => write!(f, "frames left in σ: {scopes:?}"),
            Problem::Stuck(e) => write!(f, "stuck: {e}"),
        }
    }
}

/// Outcome of [`check`].
#[derive(Clone, Debug)]
pub struct Report {
    pub outcome: Result<Catalog, CompileError>,
    pub steps: u64,
    pub problems: Vec<Problem>,
}

impl Report {
    pub fn is_clean(&self) -> bool {
        self.problems.is_empty()
    }
}

/// Errors raised by rules whose premises are all met: the cycle check runs
/// before an inheritance step, limits cut off a valid step, and `fail`
/// steps to an error by design.
fn error_with_applicable_rule(kind: ErrorKind) -> bool {
    matches!(
        kind,
        ErrorKind::InheritanceCycle | ErrorKind::StepLimitExceeded | ErrorKind::Failure
    )
}

fn introduces_scope(rule: Rule) -> bool {
    matches!(
        rule,
        Rule::NodeMatch | Rule::Def | Rule::IncU | Rule::IncPD | Rule::CDecU | Rule::CDecPD
    )
}

fn eliminates_scope(rule: Rule) -> bool {
    matches!(rule, Rule::ScopeDone | Rule::DefScopeDone)
}

/// Compiles like [`crate::eval::compile`], auditing every step.
pub fn check(manifest: &Manifest, node: &str, facts: &[(String, Value)], settings: &Settings) -> Report {
    let mut problems = Vec::new();
    let start = check_references(manifest, settings).and_then(|()| State::with_facts(facts));
    let state = match start {
        Ok(state) => state,
        Err(e) => {
            return Report {
                outcome: Err(e),
                steps: 0,
                problems,
            }
        }
    };
    let machine = Machine::new(settings.clone());
    let mut cfg = Configuration::manifest(state, manifest.clone(), node);
    let mut steps = 0u64;
    let (mut introduced, mut eliminated) = (0u64, 0u64);
    let outcome = loop {
        if cfg.is_final() {
            break Ok(cfg.state.catalog.clone());
        }
        if steps >= settings.limits.max_steps {
            break Err(CompileError::new(
                ErrorKind::StepLimitExceeded,
                Default::default(),
                None,
                alloc::format!("compilation did not finish within {steps} steps"),
            ));
        }
        let found = audit(&cfg, settings);
        let before = cfg.state.clone();
        steps += 1;
        match machine.step(&mut cfg) {
            Ok(record) => {
                if found.derivations.len() > 1 {
                    problems.push(Problem::Nondeterministic {
                        step: steps,
                        derivations: found.derivations.clone(),
                    });
                }
                if !found.truncated && !found.derivations.contains(&record.derivation) {
                    problems.push(Problem::Mismatch {
                        step: steps,
                        evaluator: record.derivation.clone(),
                        auditor: found.derivations,
                    });
                }
                let rule = record.rule();
                let pure = !matches!(record.judgement(), Judgement::Stmt | Judgement::Manifest);
                let unchanged = before.sigma.ptr_eq(&cfg.state.sigma)
                    && before.kappa.ptr_eq(&cfg.state.kappa)
                    && before.catalog.ptr_eq(&cfg.state.catalog);
                if pure && !unchanged {
                    problems.push(Problem::Impure { step: steps, rule });
                }
                problems.extend(
                    state_le(steps as usize, &before, &cfg.state)
                        .into_iter()
                        .map(Problem::NotMonotone),
                );
                introduced += introduces_scope(rule) as u64;
                eliminated += eliminates_scope(rule) as u64;
            }
            Err(e) if e.kind == ErrorKind::InternalStuck => {
                problems.push(Problem::Stuck(e.clone()));
                break Err(e);
            }
            Err(e) => {
                if !error_with_applicable_rule(e.kind) && !found.derivations.is_empty() {
                    problems.push(Problem::ErrorButApplicable {
                        step: steps,
                        kind: e.kind,
                        auditor: found.derivations,
                    });
                }
                break Err(e);
            }
        }
    };
    if outcome.is_ok() {
        if introduced != eliminated {
            problems.push(Problem::UnbalancedScopes { introduced, eliminated });
        }
        let mut frames: Vec<Scope> = cfg
            .state
            .sigma
            .iter()
            .filter(|(scope, _, _)| scope.is_def())
            .map(|(scope, _, _)| scope.clone())
            .collect();
        frames.dedup();
        if !frames.is_empty() {
            problems.push(Problem::LeftoverFrames(frames));
        }
    }
    Report {
        outcome,
        steps,
        problems,
    }
}

/// The states of a compilation, initial state first, and how it ended.
pub fn trace_states(
    manifest: &Manifest,
    node: &str,
    facts: &[(String, Value)],
    settings: &Settings,
) -> (Vec<State>, Result<Catalog, CompileError>) {
    let mut states = Vec::new();
    let start = check_references(manifest, settings).and_then(|()| State::with_facts(facts));
    let state = match start {
        Ok(state) => state,
        Err(e) => return (states, Err(e)),
    };
    states.push(state.clone());
    let machine = Machine::new(settings.clone());
    let mut cfg = Configuration::manifest(state, manifest.clone(), node);
    let result = machine.run(&mut cfg, |_, cfg| states.push(cfg.state.clone()));
    let outcome = result.map(|_| cfg.state.catalog.clone());
    (states, outcome)
}
