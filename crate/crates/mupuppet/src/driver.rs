//! Compiling source text, with diagnostics and optional tracing.

use std::fmt;

use mupuppet_core::eval::check_references;
use mupuppet_core::{
    parse_manifest, CompileError, Configuration, ErrorKind, Machine, ParseError, Settings, State,
    StepRecord, Value,
};

use crate::json::CatalogDocument;

/// Why a compilation produced no catalog.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Failure {
    Parse(ParseError),
    Compile(CompileError),
}

impl Failure {
    /// Process exit status for this failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Compile(_) => 1,
            Failure::Parse(_) => 2,
        }
    }

    /// `parse-error` or the kebab-case error kind.
    pub fn slug(&self) -> &'static str {
        match self {
            Failure::Parse(_) => "parse-error",
            Failure::Compile(e) => e.kind.slug(),
        }
    }

    pub fn kind(&self) -> Option<ErrorKind> {
        match self {
            Failure::Parse(_) => None,
            Failure::Compile(e) => Some(e.kind),
        }
    }

    /// One-line diagnostic naming the source `file`.
    pub fn diagnostic(&self, file: &str) -> Diagnostic<'_> {
        Diagnostic {
            failure: self,
            file: file.to_string(),
        }
    }
}

pub struct Diagnostic<'a> {
    failure: &'a Failure,
    file: String,
}

impl fmt::Display for Diagnostic<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.failure {
            Failure::Parse(e) => write!(
                f,
                "error[ParseError]: {}:{}: expected {}, found {}",
                self.file, e.pos, e.expected, e.found
            ),
            Failure::Compile(e) => {
                write!(f, "error[{}]: {}:{}", e.kind, self.file, e.pos)?;
                if let Some(scope) = &e.scope {
                    write!(f, ": in scope {scope}")?;
                }
                write!(f, ": {}", e.message)
            }
        }
    }
}

/// Inputs of one compilation.
#[derive(Clone, Debug)]
pub struct Job<'a> {
    pub source: &'a str,
    pub node: &'a str,
    pub facts: &'a [(String, Value)],
    pub settings: &'a Settings,
}

impl Job<'_> {
    pub fn run(&self) -> Result<CatalogDocument, Failure> {
        self.run_observed(|_, _| {})
    }

    /// As [`Job::run`], calling `observe` after every step with the
    /// configuration reached.
    pub fn run_observed(
        &self,
        observe: impl FnMut(&StepRecord, &Configuration),
    ) -> Result<CatalogDocument, Failure> {
        let manifest = parse_manifest(self.source).map_err(Failure::Parse)?;
        check_references(&manifest, self.settings).map_err(Failure::Compile)?;
        let state = State::with_facts(self.facts).map_err(Failure::Compile)?;
        let mut cfg = Configuration::manifest(state, manifest, self.node);
        Machine::new(self.settings.clone())
            .run(&mut cfg, observe)
            .map_err(Failure::Compile)?;
        Ok(CatalogDocument::new(self.node, cfg.state.catalog.clone()))
    }
}
