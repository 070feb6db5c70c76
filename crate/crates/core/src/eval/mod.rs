//! Small-step evaluation.
//!
//! A [`Configuration`] pairs a [`State`] (σ, κ, catalog) with a term and
//! its context: the ambient scope for statements and expressions, the node
//! name for manifests. [`Machine::step`] performs exactly one step and
//! reports the chain of rules that justifies it.

mod error;
mod expr;
mod manifest;
mod rules;
mod stmt;

use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

pub use error::{CompileError, ErrorKind};
pub use expr::{arith_value, case_match, comparison_value};
pub use manifest::node_match;
pub use rules::{Judgement, Rule};

use crate::env::{DefEnv, Scope, VarEnv};
use crate::syntax::{Case, Expr, ExprKind, Manifest, ManifestKind, Pos, Stmt, StmtKind};
use crate::value::{Catalog, Value};

/// Resource types treated as built in unless configured otherwise.
pub const DEFAULT_BUILTIN_TYPES: &[&str] = &[
    "file", "package", "service", "user", "exec", "group", "host", "notify",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Limits {
    pub max_steps: u64,
    /// Maximum length of a single derivation.
    pub max_depth: usize,
}

impl Default for Limits {
    fn default() -> Limits {
        Limits {
            max_steps: 1_000_000,
            max_depth: 10_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Settings {
    pub builtin_types: BTreeSet<String>,
    /// Raise `InheritanceCycle` instead of unfolding a cyclic inheritance
    /// chain until a limit is hit.
    pub detect_cycles: bool,
    pub limits: Limits,
}

impl Default for Settings {
    fn default() -> Settings {
        Settings {
            builtin_types: DEFAULT_BUILTIN_TYPES.iter().map(|t| t.to_string()).collect(),
            detect_cycles: true,
            limits: Limits::default(),
        }
    }
}

impl Settings {
    pub fn is_builtin(&self, type_name: &str) -> bool {
        self.builtin_types.contains(type_name)
    }
}

/// The mutable part of a configuration.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct State {
    pub sigma: VarEnv,
    pub kappa: DefEnv,
    pub catalog: Catalog,
}

impl State {
    pub fn new() -> State {
        State::default()
    }

    /// Initial state with `facts` bound at top scope.
    pub fn with_facts(facts: &[(String, Value)]) -> Result<State, CompileError> {
        let mut state = State::new();
        for (name, value) in facts {
            state
                .sigma
                .update(Scope::Top, name.clone(), value.clone())
                .map_err(|_| {
                    CompileError::new(
                        ErrorKind::DuplicateVariable,
                        Pos::default(),
                        Some(&Scope::Top),
                        format!("fact `{name}` is given more than once"),
                    )
                })?;
        }
        Ok(state)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Term {
    Manifest(Manifest),
    Stmt(Stmt),
    Expr(Expr),
}

impl Term {
    fn dismantle(self) {
        match self {
            Term::Manifest(m) => m.dismantle(),
            Term::Stmt(s) => s.dismantle(),
            Term::Expr(_) => {}
        }
    }
}

/// Parameter of the step relation: the ambient scope of statements and
/// expressions, or the node being compiled for manifests.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Context {
    Scope(Scope),
    Node(String),
}

#[derive(Debug)]
pub struct Configuration {
    pub state: State,
    pub term: Term,
    pub context: Context,
}

impl Configuration {
    pub fn manifest(state: State, manifest: Manifest, node: impl Into<String>) -> Configuration {
        Configuration {
            state,
            term: Term::Manifest(manifest),
            context: Context::Node(node.into()),
        }
    }

    pub fn stmt(state: State, stmt: Stmt, scope: Scope) -> Configuration {
        Configuration {
            state,
            term: Term::Stmt(stmt),
            context: Context::Scope(scope),
        }
    }

    pub fn expr(state: State, expr: Expr, scope: Scope) -> Configuration {
        Configuration {
            state,
            term: Term::Expr(expr),
            context: Context::Scope(scope),
        }
    }

    /// True for `skip` and for values: no rule applies and evaluation
    /// succeeded.
    pub fn is_final(&self) -> bool {
        match &self.term {
            Term::Manifest(m) => m.is_skip(),
            Term::Stmt(s) => s.is_skip(),
            Term::Expr(e) => e.is_value(),
        }
    }
}

impl Clone for Configuration {
    fn clone(&self) -> Configuration {
        Configuration {
            state: self.state.clone(),
            term: self.term.clone(),
            context: self.context.clone(),
        }
    }
}

impl Drop for Configuration {
    fn drop(&mut self) {
        core::mem::replace(&mut self.term, Term::Expr(Expr::int(0))).dismantle();
    }
}

/// What one step did.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StepRecord {
    /// Rules of the derivation, from the conclusion down to the axiom.
    pub derivation: Vec<Rule>,
    /// Ambient scope of the axiom; `None` for manifest-level axioms.
    pub scope: Option<Scope>,
    /// Source position of the redex.
    pub pos: Pos,
}

impl StepRecord {
    /// The axiom that performed the step.
    pub fn rule(&self) -> Rule {
        *self.derivation.last().expect("derivations are never empty")
    }

    pub fn judgement(&self) -> Judgement {
        self.rule().judgement()
    }
}

/// Derivation under construction.
#[derive(Debug, Default)]
pub(crate) struct Deriv {
    rules: Vec<Rule>,
    scope: Option<Scope>,
    pos: Pos,
}

impl Deriv {
    fn push(&mut self, rule: Rule) {
        self.rules.push(rule);
    }

    fn repeat(&mut self, rule: Rule, n: usize) {
        self.rules.extend(core::iter::repeat_n(rule, n));
    }

    fn leaf(&mut self, rule: Rule, scope: Option<&Scope>, pos: Pos) {
        self.rules.push(rule);
        self.scope = scope.cloned();
        self.pos = pos;
    }

    fn depth(&self) -> usize {
        self.rules.len()
    }
}

/// The step function, parameterised by settings.
#[derive(Clone, Debug, Default)]
pub struct Machine {
    pub settings: Settings,
}

impl Machine {
    pub fn new(settings: Settings) -> Machine {
        Machine { settings }
    }

    /// Performs one step. On error the configuration is left in an
    /// unspecified but valid state.
    pub fn step(&self, cfg: &mut Configuration) -> Result<StepRecord, CompileError> {
        let mut d = Deriv::default();
        let Configuration { state, term, context } = cfg;
        match (term, &*context) {
            (Term::Manifest(m), Context::Node(node)) => {
                manifest::step(&self.settings, state, m, node, &mut d)?
            }
            (Term::Stmt(s), Context::Scope(scope)) => {
                stmt::step(&self.settings, state, s, scope.clone(), &mut d)?
            }
            (Term::Expr(e), Context::Scope(scope)) => expr::step(state, e, scope, &mut d)?,
            _ => {
                return Err(CompileError::new(
                    ErrorKind::InternalStuck,
                    Pos::default(),
                    None,
                    "term and context do not match",
                ))
            }
        }
        Ok(StepRecord {
            derivation: d.rules,
            scope: d.scope,
            pos: d.pos,
        })
    }

    /// Steps until a final configuration, calling `observe` after each
    /// step. Returns the number of steps taken.
    pub fn run(
        &self,
        cfg: &mut Configuration,
        mut observe: impl FnMut(&StepRecord, &Configuration),
    ) -> Result<u64, CompileError> {
        let mut steps = 0u64;
        while !cfg.is_final() {
            if steps >= self.settings.limits.max_steps {
                return Err(step_limit(self.settings.limits.max_steps));
            }
            let record = self.step(cfg)?;
            steps += 1;
            observe(&record, cfg);
        }
        Ok(steps)
    }
}

fn step_limit(max: u64) -> CompileError {
    CompileError::new(
        ErrorKind::StepLimitExceeded,
        Pos::default(),
        None,
        format!("compilation did not finish within {max} steps"),
    )
}

/// Result of a successful compilation.
#[derive(Clone, Debug)]
pub struct Compilation {
    pub catalog: Catalog,
    pub state: State,
    pub steps: u64,
}

/// Compiles `manifest` for `node` with `facts` bound at top scope.
pub fn compile(
    manifest: &Manifest,
    node: &str,
    facts: &[(String, Value)],
    settings: &Settings,
) -> Result<Compilation, CompileError> {
    compile_with(manifest, node, facts, settings, |_, _| {})
}

/// As [`compile`], calling `observe` with each step and the state after it.
pub fn compile_with(
    manifest: &Manifest,
    node: &str,
    facts: &[(String, Value)],
    settings: &Settings,
    mut observe: impl FnMut(&StepRecord, &State),
) -> Result<Compilation, CompileError> {
    check_references(manifest, settings)?;
    let state = State::with_facts(facts)?;
    let mut cfg = Configuration::manifest(state, manifest.clone(), node);
    let machine = Machine::new(settings.clone());
    let steps = machine.run(&mut cfg, |record, cfg| observe(record, &cfg.state))?;
    let state = core::mem::take(&mut cfg.state);
    Ok(Compilation {
        catalog: state.catalog.clone(),
        state,
        steps,
    })
}

/// Rejects resource references whose type is not built in. References are
/// values, so no evaluation rule would otherwise notice.
pub fn check_references(manifest: &Manifest, settings: &Settings) -> Result<(), CompileError> {
    let mut manifests = alloc::vec![manifest];
    let mut stmts: Vec<&Stmt> = Vec::new();
    let mut exprs: Vec<&Expr> = Vec::new();
    while let Some(m) = manifests.pop() {
        match &m.kind {
            ManifestKind::Stmt(s) => stmts.push(s),
            ManifestKind::Seq(a, b) => manifests.extend([&**a, &**b]),
            ManifestKind::Node { body, .. } => stmts.push(body),
            ManifestKind::Define { params, body, .. } => {
                stmts.push(body);
                exprs.extend(params.iter().filter_map(|p| p.default.as_ref()));
            }
            ManifestKind::Class { params, body, .. } => {
                stmts.push(body);
                exprs.extend(params.iter().flatten().filter_map(|p| p.default.as_ref()));
            }
        }
    }
    while let Some(s) = stmts.pop() {
        match &s.kind {
            StmtKind::Expr(e) | StmtKind::Assign { value: e, .. } | StmtKind::Fail(e) => {
                exprs.push(e)
            }
            StmtKind::Seq(a, b) => stmts.extend([&**a, &**b]),
            StmtKind::Unless { cond, body } => {
                exprs.push(cond);
                stmts.push(body);
            }
            StmtKind::If { cond, then, otherwise } => {
                exprs.push(cond);
                stmts.extend([&**then, &**otherwise]);
            }
            StmtKind::Case { scrutinee, arms } => {
                exprs.push(scrutinee);
                for arm in arms {
                    if let Case::Expr(e) = &arm.case {
                        exprs.push(e);
                    }
                    stmts.push(&arm.body);
                }
            }
            StmtKind::Resource { title, attrs, .. } => {
                exprs.push(title);
                exprs.extend(attrs.iter().map(|a| &a.value));
            }
            StmtKind::ClassDecl { attrs, .. } => exprs.extend(attrs.iter().map(|a| &a.value)),
            StmtKind::Scope(_, body) => stmts.push(body),
            StmtKind::Include(_) | StmtKind::Skip => {}
        }
    }
    while let Some(e) = exprs.pop() {
        match &e.kind {
            ExprKind::Int(_)
            | ExprKind::Str(_)
            | ExprKind::Bool(_)
            | ExprKind::Var(_)
            | ExprKind::TopVar(_)
            | ExprKind::ClassVar { .. } => {}
            ExprKind::Binary { lhs, rhs, .. } => exprs.extend([&**lhs, &**rhs]),
            ExprKind::Not(inner) => exprs.push(inner),
            ExprKind::Array(items) => exprs.extend(items),
            ExprKind::Hash(entries) => exprs.extend(entries.iter().map(|(_, v)| v)),
            ExprKind::Index { target, index } => exprs.extend([&**target, &**index]),
            ExprKind::ResourceRef { type_name, title } => {
                if !settings.is_builtin(type_name) {
                    return Err(CompileError::new(
                        ErrorKind::UndefinedDefinition,
                        e.pos,
                        None,
                        format!("`{type_name}` in a resource reference is not a built-in resource type"),
                    ));
                }
                exprs.push(title);
            }
            ExprKind::Selector { scrutinee, arms } => {
                exprs.push(scrutinee);
                for arm in arms {
                    if let Case::Expr(c) = &arm.case {
                        exprs.push(c);
                    }
                    exprs.push(&arm.value);
                }
            }
        }
    }
    Ok(())
}
