//! Newline-delimited JSON traces, one record per step.

use std::fmt::{self, Write as _};
use std::io::{self, Write};

use mupuppet_core::{Configuration, StepRecord, Term};
use serde_json::json;

/// Longest term summary, in characters.
const SUMMARY_LEN: usize = 120;

/// Writer that gives up once `limit` characters have been written.
struct Bounded {
    out: String,
    len: usize,
    limit: usize,
}

impl fmt::Write for Bounded {
    fn write_str(&mut self, s: &str) -> fmt::Result {
        for c in s.chars() {
            if self.len >= self.limit {
                return Err(fmt::Error);
            }
            self.len += 1;
            self.out.push(if c.is_whitespace() { ' ' } else { c });
        }
        Ok(())
    }
}

/// The start of the printed term on one line, with runs of blanks squeezed.
pub fn summary(term: &Term) -> String {
    let mut b = Bounded {
        out: String::new(),
        len: 0,
        limit: SUMMARY_LEN * 4,
    };
    let truncated = match term {
        Term::Manifest(m) => write!(b, "{m}"),
        Term::Stmt(s) => write!(b, "{s}"),
        Term::Expr(e) => write!(b, "{e}"),
    }
    .is_err();
    let mut squeezed = String::new();
    for word in b.out.split(' ').filter(|w| !w.is_empty()) {
        if !squeezed.is_empty() {
            squeezed.push(' ');
        }
        squeezed.push_str(word);
    }
    if truncated || squeezed.chars().count() > SUMMARY_LEN {
        squeezed = squeezed.chars().take(SUMMARY_LEN).collect();
        squeezed.push_str(" ...");
    }
    squeezed
}

pub struct TraceWriter<W: Write> {
    out: W,
    step: u64,
}

impl<W: Write> TraceWriter<W> {
    pub fn new(out: W) -> TraceWriter<W> {
        TraceWriter { out, step: 0 }
    }

    /// Writes the record of one step; `cfg` is the configuration after it.
    pub fn record(&mut self, r: &StepRecord, cfg: &Configuration) -> io::Result<()> {
        self.step += 1;
        let rec = json!({
            "step": self.step,
            "judgement": r.judgement().tag(),
            "rule": r.rule().name(),
            "derivation": r.derivation.iter().map(|d| d.name()).collect::<Vec<_>>(),
            "scope": r.scope.as_ref().map(|s| s.to_string()),
            "line": r.pos.line,
            "col": r.pos.col,
            "term": summary(&cfg.term),
        });
        serde_json::to_writer(&mut self.out, &rec)?;
        self.out.write_all(b"\n")
    }

    pub fn finish(mut self) -> io::Result<W> {
        self.out.flush()?;
        Ok(self.out)
    }
}
