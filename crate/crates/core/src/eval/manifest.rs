//! Manifest steps (`σ, κ, v_C, m →N σ', κ', v_C', m'`).

use alloc::boxed::Box;
use alloc::format;
use core::mem;

use super::expr::internal;
use super::{stmt, CompileError, Deriv, ErrorKind, Rule, Settings, State};
use crate::env::{Definition, Scope};
use crate::syntax::{Manifest, ManifestKind, NodeSpec, Stmt, StmtKind};

/// `nodeMatch(N, Q)`
pub fn node_match(node: &str, spec: &NodeSpec) -> bool {
    match spec {
        NodeSpec::Name(n) => n == node,
        NodeSpec::Default => true,
        NodeSpec::List(names) => names.iter().any(|n| n == node),
    }
}

fn duplicate(name: &str, pos: crate::syntax::Pos, existing: Option<&Definition>) -> CompileError {
    let msg = match existing {
        Some(d) => format!("`{name}` is already defined as a {}", d.kind_name()),
        None => format!("`{name}` is a built-in resource type and cannot be redefined"),
    };
    CompileError::new(ErrorKind::DuplicateDefinition, pos, None, msg)
}

pub(crate) fn step(
    settings: &Settings,
    st: &mut State,
    m: &mut Manifest,
    node: &str,
    d: &mut Deriv,
) -> Result<(), CompileError> {
    let mut cur = m;
    loop {
        if d.depth() > settings.limits.max_depth {
            return Err(CompileError::new(
                ErrorKind::StepLimitExceeded,
                cur.pos,
                None,
                format!("derivation deeper than {} rules", settings.limits.max_depth),
            ));
        }
        let descend = matches!(&cur.kind, ManifestKind::Seq(a, _) if !a.is_skip());
        if !descend {
            break;
        }
        d.push(Rule::MSeqStep);
        cur = match &mut cur.kind {
            ManifestKind::Seq(a, _) => a,
            _ => unreachable!(),
        };
    }
    let pos = cur.pos;
    let next = match &mut cur.kind {
        ManifestKind::Seq(_, rest) => {
            d.leaf(Rule::MSeqSkip, None, pos);
            mem::take(&mut **rest)
        }
        ManifestKind::Stmt(s) => {
            if s.is_skip() {
                return Err(internal(pos, &Scope::Top, "`skip`"));
            }
            d.push(Rule::TopScope);
            return stmt::step(settings, st, s, Scope::Top, d);
        }
        ManifestKind::Node { spec, body } => {
            if node_match(node, spec) {
                d.leaf(Rule::NodeMatch, None, pos);
                let body = mem::take(body);
                let scoped = Stmt::new(StmtKind::Scope(Scope::Node, Box::new(body)), pos);
                Manifest::new(ManifestKind::Stmt(scoped), pos)
            } else {
                d.leaf(Rule::NodeNoMatch, None, pos);
                Manifest::skip()
            }
        }
        ManifestKind::Define { name, params, body } => {
            if settings.is_builtin(name) || st.kappa.contains(name) {
                return Err(duplicate(name, pos, st.kappa.get(name)));
            }
            let def = Definition::resource(mem::take(params), mem::take(body));
            st.kappa.define(name.clone(), def);
            d.leaf(Rule::RDef, None, pos);
            Manifest::skip()
        }
        ManifestKind::Class { name, params, parent, body } => {
            if st.kappa.contains(name.as_str()) {
                return Err(duplicate(name.as_str(), pos, st.kappa.get(name.as_str())));
            }
            let rule = match (params.is_some(), parent.is_some()) {
                (false, false) => Rule::CDef,
                (false, true) => Rule::CDefI,
                (true, false) => Rule::CDefP,
                (true, true) => Rule::CDefPI,
            };
            let def = Definition::class(
                parent.take(),
                params.take().unwrap_or_default(),
                mem::take(body),
            );
            st.kappa.define(name.as_str(), def);
            d.leaf(rule, None, pos);
            Manifest::skip()
        }
    };
    let old = mem::replace(cur, next);
    old.dismantle();
    Ok(())
}
