//! Greedy shrinking of failing manifests.
//!
//! A candidate is obtained by deleting one manifest item, one statement of a
//! block or one case arm, or by replacing a conditional with one of its
//! branches. Candidates that do not survive printing and parsing unchanged
//! are skipped, so every shrunk manifest can be written out as a test case.

use alloc::boxed::Box;
use alloc::format;
use alloc::vec::Vec;

use crate::parser::parse_manifest;
use crate::syntax::{Manifest, ManifestKind, Stmt, StmtKind};

/// Repeatedly replaces `m` by its first smaller variant satisfying
/// `keep`, until no variant does. `keep(m)` should hold on entry.
pub fn shrink(m: &Manifest, mut keep: impl FnMut(&Manifest) -> bool) -> Manifest {
    let mut cur = m.clone();
    'outer: loop {
        for candidate in manifest_variants(&cur) {
            if round_trips(&candidate) && keep(&candidate) {
                cur = candidate;
                continue 'outer;
            }
        }
        return cur;
    }
}

/// True when printing and re-parsing `m` yields `m`.
pub fn round_trips(m: &Manifest) -> bool {
    matches!(parse_manifest(&format!("{m}")), Ok(p) if p == *m)
}

/// Number of AST nodes in statement position, a measure of size.
pub fn size(m: &Manifest) -> usize {
    m.items()
        .into_iter()
        .map(|item| match &item.kind {
            ManifestKind::Stmt(s) => stmt_size(s),
            ManifestKind::Node { body, .. }
            | ManifestKind::Define { body, .. }
            | ManifestKind::Class { body, .. } => 1 + stmt_size(body),
            ManifestKind::Seq(..) => 0,
        })
        .sum()
}

fn stmt_size(s: &Stmt) -> usize {
    match &s.kind {
        StmtKind::Skip => 0,
        StmtKind::Seq(a, b) => stmt_size(a) + stmt_size(b),
        StmtKind::If { then, otherwise, .. } => 1 + stmt_size(then) + stmt_size(otherwise),
        StmtKind::Unless { body, .. } | StmtKind::Scope(_, body) => 1 + stmt_size(body),
        StmtKind::Case { arms, .. } => 1 + arms.iter().map(|a| stmt_size(&a.body)).sum::<usize>(),
        _ => 1,
    }
}

fn manifest_variants(m: &Manifest) -> Vec<Manifest> {
    let items: Vec<Manifest> = m
        .items()
        .into_iter()
        .filter(|i| !i.is_skip())
        .cloned()
        .collect();
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut fewer = items.clone();
        fewer.remove(i);
        out.push(Manifest::sequence(fewer));
    }
    for (i, item) in items.iter().enumerate() {
        let body = match &item.kind {
            ManifestKind::Stmt(s)
            | ManifestKind::Node { body: s, .. }
            | ManifestKind::Define { body: s, .. }
            | ManifestKind::Class { body: s, .. } => s,
            ManifestKind::Seq(..) => continue,
        };
        for v in stmt_variants(body) {
            let mut replaced = item.clone();
            match &mut replaced.kind {
                ManifestKind::Stmt(s)
                | ManifestKind::Node { body: s, .. }
                | ManifestKind::Define { body: s, .. }
                | ManifestKind::Class { body: s, .. } => *s = v,
                ManifestKind::Seq(..) => unreachable!(),
            }
            let mut all = items.clone();
            all[i] = replaced;
            out.push(Manifest::sequence(all));
        }
    }
    out
}

fn seq_items(s: &Stmt) -> Vec<&Stmt> {
    let mut out = Vec::new();
    let mut cur = s;
    while let StmtKind::Seq(a, b) = &cur.kind {
        out.push(&**a);
        cur = b;
    }
    if !cur.is_skip() {
        out.push(cur);
    }
    out
}

fn stmt_variants(s: &Stmt) -> Vec<Stmt> {
    let mut out = Vec::new();
    if let StmtKind::Seq(..) = s.kind {
        let items: Vec<Stmt> = seq_items(s).into_iter().cloned().collect();
        for i in 0..items.len() {
            let mut fewer = items.clone();
            fewer.remove(i);
            out.push(Stmt::sequence(fewer));
        }
        for (i, item) in items.iter().enumerate() {
            for v in stmt_variants(item) {
                let mut all = items.clone();
                all[i] = v;
                out.push(Stmt::sequence(all));
            }
        }
        return out;
    }
    let rebuild = |kind: StmtKind| Stmt::new(kind, s.pos);
    match &s.kind {
        StmtKind::If { cond, then, otherwise } => {
            out.push((**then).clone());
            out.push((**otherwise).clone());
            for v in stmt_variants(then) {
                out.push(rebuild(StmtKind::If {
                    cond: cond.clone(),
                    then: Box::new(v),
                    otherwise: otherwise.clone(),
                }));
            }
            for v in stmt_variants(otherwise) {
                out.push(rebuild(StmtKind::If {
                    cond: cond.clone(),
                    then: then.clone(),
                    otherwise: Box::new(v),
                }));
            }
        }
        StmtKind::Unless { cond, body } => {
            out.push((**body).clone());
            for v in stmt_variants(body) {
                out.push(rebuild(StmtKind::Unless {
                    cond: cond.clone(),
                    body: Box::new(v),
                }));
            }
        }
        StmtKind::Case { scrutinee, arms } => {
            for i in 0..arms.len() {
                let mut fewer = arms.clone();
                fewer.remove(i);
                out.push(rebuild(StmtKind::Case {
                    scrutinee: scrutinee.clone(),
                    arms: fewer,
                }));
            }
            for (i, arm) in arms.iter().enumerate() {
                out.push(arm.body.clone());
                for v in stmt_variants(&arm.body) {
                    let mut all = arms.clone();
                    all[i].body = v;
                    out.push(rebuild(StmtKind::Case {
                        scrutinee: scrutinee.clone(),
                        arms: all,
                    }));
                }
            }
        }
        _ => {}
    }
    out
}
