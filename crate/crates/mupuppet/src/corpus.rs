//! Conformance corpus runner.
//!
//! A case is a directory holding `main.pp`, `node.txt`, optionally
//! `facts.json`, and exactly one of `expect.json` (a catalog document) or
//! `expect-error.txt` (an error kind such as `duplicate-resource`, or
//! `parse-error`). Cases may be grouped in nested directories; a case's name
//! is its path relative to the corpus root.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use mupuppet_core::{ErrorKind, Settings, Value};
use rayon::prelude::*;

use crate::driver::Job;
use crate::json::{facts_from_str, CatalogDocument};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExpectedError {
    Parse,
    Compile(ErrorKind),
}

impl ExpectedError {
    pub fn parse(s: &str) -> Option<ExpectedError> {
        match s.trim() {
            "parse-error" | "ParseError" => Some(ExpectedError::Parse),
            s => ErrorKind::parse(s).map(ExpectedError::Compile),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Expectation {
    Catalog(CatalogDocument),
    Error(ExpectedError),
}

#[derive(Clone, Debug)]
pub struct Case {
    pub name: String,
    pub dir: PathBuf,
    pub source: String,
    pub node: String,
    pub facts: Vec<(String, Value)>,
    pub expect: Expectation,
}

/// A malformed case; reported apart from failures.
#[derive(Debug, thiserror::Error)]
#[error("{case}: {problem}")]
pub struct HarnessError {
    pub case: String,
    pub problem: String,
}

fn read(dir: &Path, file: &str, name: &str) -> Result<Option<String>, HarnessError> {
    let path = dir.join(file);
    match fs::read_to_string(&path) {
        Ok(s) => Ok(Some(s)),
        Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(None),
        Err(e) => Err(HarnessError {
            case: name.to_string(),
            problem: format!("cannot read {file}: {e}"),
        }),
    }
}

impl Case {
    pub fn load(dir: &Path, name: &str) -> Result<Case, HarnessError> {
        let bad = |problem: String| HarnessError {
            case: name.to_string(),
            problem,
        };
        let source = read(dir, "main.pp", name)?.ok_or_else(|| bad("missing main.pp".into()))?;
        let node = read(dir, "node.txt", name)?
            .ok_or_else(|| bad("missing node.txt".into()))?
            .trim()
            .to_string();
        if node.is_empty() {
            return Err(bad("node.txt is empty".into()));
        }
        let facts = match read(dir, "facts.json", name)? {
            Some(src) => facts_from_str(&src).map_err(|e| bad(format!("facts.json: {e}")))?,
            None => Vec::new(),
        };
        let expect = match (read(dir, "expect.json", name)?, read(dir, "expect-error.txt", name)?) {
            (Some(doc), None) => Expectation::Catalog(
                doc.parse::<CatalogDocument>().map_err(|e| bad(format!("expect.json: {e}")))?,
            ),
            (None, Some(kind)) => Expectation::Error(
                ExpectedError::parse(&kind)
                    .ok_or_else(|| bad(format!("unknown error kind `{}`", kind.trim())))?,
            ),
            (Some(_), Some(_)) => return Err(bad("both expect.json and expect-error.txt".into())),
            (None, None) => return Err(bad("no expect.json or expect-error.txt".into())),
        };
        Ok(Case {
            name: name.to_string(),
            dir: dir.to_path_buf(),
            source,
            node,
            facts,
            expect,
        })
    }

    pub fn job<'a>(&'a self, settings: &'a Settings) -> Job<'a> {
        Job {
            source: &self.source,
            node: &self.node,
            facts: &self.facts,
            settings,
        }
    }

    /// Compiles the case and compares with the expectation.
    pub fn run(&self, settings: &Settings) -> Verdict {
        let got = self.job(settings).run();
        match (&self.expect, got) {
            (Expectation::Catalog(want), Ok(doc)) if want.same_up_to_order(&doc) => Verdict::Pass,
            (Expectation::Catalog(_), Ok(doc)) => {
                Verdict::Fail(format!("catalog differs:\n{}", doc.to_pretty_string()))
            }
            (Expectation::Catalog(_), Err(e)) => {
                Verdict::Fail(format!("expected a catalog, got {}", e.diagnostic("main.pp")))
            }
            (Expectation::Error(want), Ok(_)) => Verdict::Fail(format!("expected {want:?}, compiled")),
            (Expectation::Error(want), Err(e)) => {
                let got = match e.kind() {
                    None => ExpectedError::Parse,
                    Some(k) => ExpectedError::Compile(k),
                };
                if got == *want {
                    Verdict::Pass
                } else {
                    Verdict::Fail(format!("expected {want:?}, got {}", e.diagnostic("main.pp")))
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail(String),
    HarnessError(String),
}

#[derive(Clone, Debug)]
pub struct CaseReport {
    pub name: String,
    pub verdict: Verdict,
}

/// Case directories under `root`, sorted by name.
pub fn discover(root: &Path) -> io::Result<Vec<(String, PathBuf)>> {
    fn walk(root: &Path, dir: &Path, out: &mut Vec<(String, PathBuf)>) -> io::Result<()> {
        if dir.join("main.pp").is_file() {
            let rel = dir.strip_prefix(root).unwrap_or(dir);
            let name = rel
                .components()
                .map(|c| c.as_os_str().to_string_lossy().into_owned())
                .collect::<Vec<_>>()
                .join("/");
            out.push((name, dir.to_path_buf()));
            return Ok(());
        }
        for entry in fs::read_dir(dir)? {
            let entry = entry?;
            if entry.file_type()?.is_dir() {
                walk(root, &entry.path(), out)?;
            }
        }
        Ok(())
    }
    let mut out = Vec::new();
    walk(root, root, &mut out)?;
    out.sort();
    Ok(out)
}

/// Loads every case under `root`.
pub fn load_all(root: &Path) -> io::Result<Vec<Result<Case, HarnessError>>> {
    Ok(discover(root)?
        .into_iter()
        .map(|(name, dir)| Case::load(&dir, &name))
        .collect())
}

/// Runs every case under `root` in parallel; reports are sorted by name.
pub fn run_corpus(root: &Path, settings: &Settings) -> io::Result<Vec<CaseReport>> {
    let cases = discover(root)?;
    Ok(cases
        .par_iter()
        .map(|(name, dir)| CaseReport {
            name: name.clone(),
            verdict: match Case::load(dir, name) {
                Ok(case) => case.run(settings),
                Err(e) => Verdict::HarnessError(e.problem),
            },
        })
        .collect())
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Summary {
    pub passed: usize,
    pub failed: usize,
    pub harness_errors: usize,
}

impl Summary {
    pub fn of(reports: &[CaseReport]) -> Summary {
        let mut s = Summary::default();
        for r in reports {
            match r.verdict {
                Verdict::Pass => s.passed += 1,
                Verdict::Fail(_) => s.failed += 1,
                Verdict::HarnessError(_) => s.harness_errors += 1,
            }
        }
        s
    }

    pub fn all_passed(&self) -> bool {
        self.failed == 0 && self.harness_errors == 0
    }
}
