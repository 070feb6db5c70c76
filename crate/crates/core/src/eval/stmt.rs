//! Statement steps (`σ, κ, v_C, s →α σ', κ', v_C', s'`).

use alloc::boxed::Box;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::mem;

use super::expr::{self, body_is_value, case_match, internal};
use super::{CompileError, Deriv, ErrorKind, Rule, Settings, State};
use crate::env::{merge, Definition, MergeError, Scope};
use crate::syntax::{Attr, Case, ClassName, Expr, ExprKind, Pos, Stmt, StmtKind};
use crate::value::{ResourceValue, Value};

type R = Result<(), CompileError>;

fn err(kind: ErrorKind, pos: Pos, scope: &Scope, msg: impl Into<String>) -> CompileError {
    CompileError::new(kind, pos, Some(scope), msg)
}

/// How the step proceeds at the current node of the statement tree.
enum Act {
    /// Congruence rule into a sub-statement, possibly switching scope.
    Descend(Rule, Option<Scope>),
    /// Congruence rule into the expression `e` of the statement.
    Expr(Rule),
    /// Congruence rules into a resource body.
    Body(Rule),
    /// Congruence rule into the attributes.
    Attrs(Rule),
    /// An axiom at this node.
    Here,
}

fn classify(settings: &Settings, st: &State, s: &Stmt, scope: &Scope) -> Result<Act, CompileError> {
    Ok(match &s.kind {
        StmtKind::Skip => return Err(internal(s.pos, scope, "`skip`")),
        StmtKind::Seq(a, _) if !a.is_skip() => Act::Descend(Rule::SeqStep, None),
        StmtKind::Expr(e) if !e.is_value() => Act::Expr(Rule::ExprStep),
        StmtKind::Assign { value, .. } if !value.is_value() => Act::Expr(Rule::AssignStep),
        StmtKind::Unless { cond, .. } if !cond.is_value() => Act::Expr(Rule::UnlessStep),
        StmtKind::If { cond, .. } if !cond.is_value() => Act::Expr(Rule::IfStep),
        StmtKind::Case { scrutinee, .. } if !scrutinee.is_value() => Act::Expr(Rule::CaseStep1),
        StmtKind::Case { arms, .. } => match arms.first() {
            Some(arm) if matches!(&arm.case, Case::Expr(c) if !c.is_value()) => {
                Act::Expr(Rule::CaseStep2)
            }
            _ => Act::Here,
        },
        StmtKind::Fail(e) if !e.is_value() => Act::Expr(Rule::FailStep),
        StmtKind::Resource { head, title, attrs } if !body_is_value(title, attrs) => {
            Act::Body(if settings.is_builtin(head) { Rule::ResStep } else { Rule::DefStep })
        }
        StmtKind::ClassDecl { class, attrs } if !attrs.iter().all(|a| a.value.is_value()) => {
            match st.kappa.get(class.as_str()) {
                Some(Definition::ClassDef { .. }) => Act::Attrs(Rule::CDecStep),
                _ => Act::Here,
            }
        }
        StmtKind::Scope(inner, body) if !body.is_skip() => match inner {
            Scope::Def(base) => {
                if **base != *scope {
                    return Err(internal(s.pos, scope, "a defined-resource scope outside its ambient scope"));
                }
                Act::Descend(Rule::DefScopeStep, Some(inner.clone()))
            }
            _ => Act::Descend(Rule::ScopeStep, Some(inner.clone())),
        },
        _ => Act::Here,
    })
}

/// Performs one step of `s` in ambient scope `scope`.
pub(crate) fn step(settings: &Settings, st: &mut State, s: &mut Stmt, scope: Scope, d: &mut Deriv) -> R {
    let mut cur = s;
    let mut scope = scope;
    loop {
        if d.depth() > settings.limits.max_depth {
            return Err(err(
                ErrorKind::StepLimitExceeded,
                cur.pos,
                &scope,
                format!("derivation deeper than {} rules", settings.limits.max_depth),
            ));
        }
        let act = classify(settings, st, cur, &scope)?;
        match act {
            Act::Descend(rule, next) => {
                d.push(rule);
                if let Some(next) = next {
                    scope = next;
                }
                cur = match &mut cur.kind {
                    StmtKind::Seq(a, _) => a,
                    StmtKind::Scope(_, body) => body,
                    _ => unreachable!("descent into a statement without sub-statement"),
                };
            }
            Act::Expr(rule) => {
                d.push(rule);
                let e = match &mut cur.kind {
                    StmtKind::Expr(e)
                    | StmtKind::Assign { value: e, .. }
                    | StmtKind::Unless { cond: e, .. }
                    | StmtKind::If { cond: e, .. }
                    | StmtKind::Fail(e) => e,
                    StmtKind::Case { scrutinee, arms } => {
                        if rule == Rule::CaseStep1 {
                            scrutinee
                        } else {
                            match &mut arms[0].case {
                                Case::Expr(c) => c,
                                Case::Default => unreachable!(),
                            }
                        }
                    }
                    _ => unreachable!("statement without expression"),
                };
                return expr::step(st, e, &scope, d);
            }
            Act::Body(rule) => {
                d.push(rule);
                let StmtKind::Resource { title, attrs, .. } = &mut cur.kind else {
                    unreachable!()
                };
                return expr::step_body(st, title, attrs, &scope, d);
            }
            Act::Attrs(rule) => {
                d.push(rule);
                let StmtKind::ClassDecl { attrs, .. } = &mut cur.kind else {
                    unreachable!()
                };
                return expr::step_attrs(st, attrs, &scope, d);
            }
            Act::Here => return axiom(settings, st, cur, &scope, d),
        }
    }
}

fn take_stmt(s: &mut Box<Stmt>) -> Stmt {
    mem::take(&mut **s)
}

fn to_hash(attrs: &[Attr]) -> Vec<(String, Value)> {
    attrs
        .iter()
        .map(|a| {
            let v = a.value.to_value().expect("attribute values are evaluated");
            (a.name.clone(), v)
        })
        .collect()
}

fn describe(e: &Expr) -> String {
    match e.to_value() {
        Some(v) => format!("{} {v}", v.type_name()),
        None => format!("{e}"),
    }
}

fn merge_error(e: MergeError, pos: Pos, scope: &Scope, what: &str) -> CompileError {
    match e {
        MergeError::Missing(p) => err(
            ErrorKind::MissingParameter,
            pos,
            scope,
            format!("{what} requires a value for parameter `${p}`"),
        ),
        MergeError::Unknown(p) => err(
            ErrorKind::UnknownParameter,
            pos,
            scope,
            format!("{what} has no parameter `${p}`"),
        ),
    }
}

fn undefined_class(name: &ClassName, def: Option<&Definition>, pos: Pos, scope: &Scope) -> CompileError {
    let msg = match def {
        Some(d) => format!("`{name}` is a {}, not a class", d.kind_name()),
        None => format!("class `{name}` is not defined"),
    };
    err(ErrorKind::UndefinedDefinition, pos, scope, msg)
}

/// `scope ::a { s' ⌷ s }`
fn class_body(name: &ClassName, init: Stmt, body: &Stmt) -> StmtKind {
    let inner = Stmt::seq(init, body.clone());
    StmtKind::Scope(Scope::Class(name.clone()), Box::new(inner))
}

/// Follows the chain of undeclared parents from `a`, failing if it
/// revisits a class.
fn check_cycle(st: &State, a: &ClassName, pos: Pos, scope: &Scope) -> R {
    let mut chain: Vec<&str> = alloc::vec![a.as_str()];
    let mut cur = a.as_str();
    while let Some(Definition::ClassDef { parent: Some(p), .. }) = st.kappa.get(cur) {
        let p = p.as_str();
        if chain.contains(&p) {
            chain.push(p);
            return Err(err(
                ErrorKind::InheritanceCycle,
                pos,
                scope,
                format!("class inheritance is cyclic: {}", chain.join(" -> ")),
            ));
        }
        chain.push(p);
        cur = p;
    }
    Ok(())
}

fn axiom(settings: &Settings, st: &mut State, s: &mut Stmt, scope: &Scope, d: &mut Deriv) -> R {
    let pos = s.pos;
    let next: StmtKind = match &mut s.kind {
        StmtKind::Skip => return Err(internal(pos, scope, "`skip`")),
        StmtKind::Seq(_, rest) => {
            d.leaf(Rule::SeqSkip, Some(scope), pos);
            let rest = take_stmt(rest);
            *s = rest;
            return Ok(());
        }
        StmtKind::Expr(_) => {
            d.leaf(Rule::Expr, Some(scope), pos);
            StmtKind::Skip
        }
        StmtKind::Assign { name, value } => {
            let v = value.to_value().expect("evaluated");
            st.sigma
                .update(scope.clone(), name.clone(), v)
                .map_err(|_| {
                    err(
                        ErrorKind::DuplicateVariable,
                        pos,
                        scope,
                        format!("variable `${name}` is already assigned in scope {scope}"),
                    )
                })?;
            d.leaf(Rule::Assign, Some(scope), pos);
            StmtKind::Skip
        }
        StmtKind::Unless { cond, body } => match cond.kind {
            ExprKind::Bool(true) => {
                d.leaf(Rule::UnlessT, Some(scope), pos);
                StmtKind::Skip
            }
            ExprKind::Bool(false) => {
                d.leaf(Rule::UnlessF, Some(scope), pos);
                let body = take_stmt(body);
                *s = body;
                return Ok(());
            }
            _ => {
                return Err(err(
                    ErrorKind::TypeMismatch,
                    cond.pos,
                    scope,
                    format!("`unless` condition must be a boolean, found {}", describe(cond)),
                ))
            }
        },
        StmtKind::If { cond, then, otherwise } => {
            let branch = match cond.kind {
                ExprKind::Bool(true) => {
                    d.leaf(Rule::IfT, Some(scope), pos);
                    then
                }
                ExprKind::Bool(false) => {
                    d.leaf(Rule::IfF, Some(scope), pos);
                    otherwise
                }
                _ => {
                    return Err(err(
                        ErrorKind::TypeMismatch,
                        cond.pos,
                        scope,
                        format!("`if` condition must be a boolean, found {}", describe(cond)),
                    ))
                }
            };
            let branch = take_stmt(branch);
            *s = branch;
            return Ok(());
        }
        StmtKind::Case { scrutinee, arms } => {
            if arms.is_empty() {
                d.leaf(Rule::CaseDone, Some(scope), pos);
                StmtKind::Skip
            } else if case_match(scrutinee, &arms[0].case) {
                d.leaf(Rule::CaseMatch, Some(scope), pos);
                let body = mem::take(&mut arms[0].body);
                *s = body;
                return Ok(());
            } else {
                d.leaf(Rule::CaseNoMatch, Some(scope), pos);
                arms.remove(0).body.dismantle();
                return Ok(());
            }
        }
        StmtKind::Fail(e) => {
            let message = match &e.kind {
                ExprKind::Str(m) => m.clone(),
                _ => format!("{e}"),
            };
            d.leaf(Rule::Fail, Some(scope), pos);
            return Err(err(ErrorKind::Failure, pos, scope, message));
        }
        StmtKind::Resource { head, title, attrs } if settings.is_builtin(head) => {
            let ExprKind::Str(w) = &title.kind else {
                return Err(err(
                    ErrorKind::TypeMismatch,
                    title.pos,
                    scope,
                    format!("resource title must be a string, found {}", describe(title)),
                ));
            };
            let resource = ResourceValue {
                type_name: head.clone(),
                title: w.clone(),
                attrs: to_hash(attrs),
            };
            st.catalog
                .append(resource)
                .map_err(|dup| err(ErrorKind::DuplicateResource, pos, scope, format!("{dup}")))?;
            d.leaf(Rule::ResDecl, Some(scope), pos);
            StmtKind::Skip
        }
        StmtKind::Resource { head, title, attrs } => {
            let Some(Definition::ResourceDef { params, body }) = st.kappa.get(head) else {
                let msg = match st.kappa.get(head) {
                    Some(other) => format!("`{head}` is a {}, not a resource type", other.kind_name()),
                    None => format!("resource type `{head}` is not defined"),
                };
                return Err(err(ErrorKind::UndefinedDefinition, pos, scope, msg));
            };
            let ExprKind::Str(w) = &title.kind else {
                return Err(err(
                    ErrorKind::TypeMismatch,
                    title.pos,
                    scope,
                    format!("resource title must be a string, found {}", describe(title)),
                ));
            };
            let init = merge(params, &to_hash(attrs), pos)
                .map_err(|e| merge_error(e, pos, scope, &format!("`{head}['{w}']`")))?;
            let mut title_assign = Stmt::assign("title", Expr::new(ExprKind::Str(w.clone()), pos));
            title_assign.pos = pos;
            let inner = Stmt::seq(title_assign, Stmt::seq(init, (**body).clone()));
            d.leaf(Rule::Def, Some(scope), pos);
            StmtKind::Scope(Scope::def(scope.clone()), Box::new(inner))
        }
        StmtKind::Include(a) => match st.kappa.get(a.as_str()).cloned() {
            Some(Definition::DeclaredClass(_)) => {
                d.leaf(Rule::IncD, Some(scope), pos);
                StmtKind::Skip
            }
            Some(Definition::ClassDef { parent: None, params, body }) => {
                let init = merge(&params, &[], pos)
                    .map_err(|e| merge_error(e, pos, scope, &format!("class `{a}`")))?;
                let Some(base) = st.kappa.base_of(scope) else {
                    return Err(internal(pos, scope, "a scope without base"));
                };
                st.kappa.declare(a, base);
                d.leaf(Rule::IncU, Some(scope), pos);
                class_body(a, init, &body)
            }
            Some(Definition::ClassDef { parent: Some(b), params, body }) => {
                match st.kappa.get(b.as_str()) {
                    Some(Definition::ClassDef { .. }) => {
                        if settings.detect_cycles {
                            check_cycle(st, a, pos, scope)?;
                        }
                        d.leaf(Rule::IncPU, Some(scope), pos);
                        let mut first = Stmt::include(b.clone());
                        first.pos = pos;
                        let mut again = Stmt::include(a.clone());
                        again.pos = pos;
                        StmtKind::Seq(Box::new(first), Box::new(again))
                    }
                    Some(Definition::DeclaredClass(_)) => {
                        let init = merge(&params, &[], pos)
                            .map_err(|e| merge_error(e, pos, scope, &format!("class `{a}`")))?;
                        st.kappa.declare(a, Scope::Class(b.clone()));
                        d.leaf(Rule::IncPD, Some(scope), pos);
                        class_body(a, init, &body)
                    }
                    other => return Err(undefined_class(&b, other, pos, scope)),
                }
            }
            other => return Err(undefined_class(a, other.as_ref(), pos, scope)),
        },
        StmtKind::ClassDecl { class: a, attrs } => match st.kappa.get(a.as_str()).cloned() {
            Some(Definition::DeclaredClass(_)) => {
                return Err(err(
                    ErrorKind::ClassAlreadyDeclared,
                    pos,
                    scope,
                    format!("class `{a}` is already declared"),
                ))
            }
            Some(Definition::ClassDef { parent, params, body }) => {
                let args = to_hash(attrs);
                let what = format!("class `{a}`");
                match parent {
                    None => {
                        let init = merge(&params, &args, pos).map_err(|e| merge_error(e, pos, scope, &what))?;
                        let Some(base) = st.kappa.base_of(scope) else {
                            return Err(internal(pos, scope, "a scope without base"));
                        };
                        st.kappa.declare(a, base);
                        d.leaf(Rule::CDecU, Some(scope), pos);
                        class_body(a, init, &body)
                    }
                    Some(b) => match st.kappa.get(b.as_str()) {
                        Some(Definition::ClassDef { .. }) => {
                            if settings.detect_cycles {
                                check_cycle(st, a, pos, scope)?;
                            }
                            d.leaf(Rule::CDecPU, Some(scope), pos);
                            let mut first = Stmt::include(b.clone());
                            first.pos = pos;
                            let again = Stmt::new(
                                StmtKind::ClassDecl {
                                    class: a.clone(),
                                    attrs: mem::take(attrs),
                                },
                                pos,
                            );
                            StmtKind::Seq(Box::new(first), Box::new(again))
                        }
                        Some(Definition::DeclaredClass(_)) => {
                            let init =
                                merge(&params, &args, pos).map_err(|e| merge_error(e, pos, scope, &what))?;
                            st.kappa.declare(a, Scope::Class(b.clone()));
                            d.leaf(Rule::CDecPD, Some(scope), pos);
                            class_body(a, init, &body)
                        }
                        other => return Err(undefined_class(&b, other, pos, scope)),
                    },
                }
            }
            other => return Err(undefined_class(a, other.as_ref(), pos, scope)),
        },
        StmtKind::Scope(inner, _) => {
            if let Scope::Def(base) = inner {
                if **base != *scope {
                    return Err(internal(pos, scope, "a defined-resource scope outside its ambient scope"));
                }
                st.sigma.clear(inner);
                d.leaf(Rule::DefScopeDone, Some(scope), pos);
            } else {
                d.leaf(Rule::ScopeDone, Some(scope), pos);
            }
            StmtKind::Skip
        }
    };
    let old = mem::replace(&mut s.kind, next);
    Stmt::new(old, pos).dismantle();
    Ok(())
}
