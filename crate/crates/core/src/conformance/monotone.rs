//! The information ordering on states: bindings are never changed, only
//! removed from defined-resource frames; definitions only appear or go from
//! `ClassDef` to `DeclaredClass`; the catalog only grows at the end.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::env::{DefEnv, Definition, VarEnv};
use crate::eval::State;
use crate::value::Catalog;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Component {
    Sigma,
    Kappa,
    Catalog,
}

/// A pair of consecutive states that are not ordered.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    /// Index of the later state in the trace.
    pub step: usize,
    pub component: Component,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "step {}: {:?}: {}", self.step, self.component, self.detail)
    }
}

/// `σ ⊑ σ'`
pub fn sigma_le(before: &VarEnv, after: &VarEnv) -> Result<(), String> {
    if before.ptr_eq(after) {
        return Ok(());
    }
    for (scope, name, v) in before.iter() {
        match after.get(scope, name) {
            Some(w) if w == v => {}
            Some(w) => return Err(format!("${name} in {scope} changed from {v} to {w}")),
            None if scope.is_def() => {}
            None => return Err(format!("${name} in {scope} was removed")),
        }
    }
    Ok(())
}

/// `κ ⊑ κ'`
pub fn kappa_le(before: &DefEnv, after: &DefEnv) -> Result<(), String> {
    if before.ptr_eq(after) {
        return Ok(());
    }
    for (name, d) in before.iter() {
        match (d, after.get(name)) {
            (_, Some(e)) if e == d => {}
            (Definition::ClassDef { .. }, Some(Definition::DeclaredClass(_))) => {}
            (_, Some(e)) => {
                return Err(format!("`{name}` went from {} to {}", d.kind_name(), e.kind_name()))
            }
            (_, None) => return Err(format!("`{name}` was removed")),
        }
    }
    Ok(())
}

/// `v_C ⊑ v_C'`
pub fn catalog_le(before: &Catalog, after: &Catalog) -> Result<(), String> {
    if before.ptr_eq(after) || before.is_prefix_of(after) {
        Ok(())
    } else {
        Err(format!(
            "catalog of {} resources is not a prefix of the next one ({} resources)",
            before.len(),
            after.len()
        ))
    }
}

/// Checks `before ⊑ after` componentwise; `step` labels the violations.
pub fn state_le(step: usize, before: &State, after: &State) -> Vec<Violation> {
    let checks = [
        (Component::Sigma, sigma_le(&before.sigma, &after.sigma)),
        (Component::Kappa, kappa_le(&before.kappa, &after.kappa)),
        (Component::Catalog, catalog_le(&before.catalog, &after.catalog)),
    ];
    checks
        .into_iter()
        .filter_map(|(component, r)| {
            r.err().map(|detail| Violation {
                step,
                component,
                detail,
            })
        })
        .collect()
}

/// Checks every consecutive pair of a trace of states.
pub fn check_monotone(trace: &[State]) -> Result<(), Vec<Violation>> {
    let violations: Vec<Violation> = trace
        .windows(2)
        .enumerate()
        .flat_map(|(i, w)| state_le(i + 1, &w[0], &w[1]))
        .collect();
    if violations.is_empty() {
        Ok(())
    } else {
        Err(violations)
    }
}
