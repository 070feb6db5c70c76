//! Expression steps (`σ, κ, v_C, e →α e'`) and the attribute-list and
//! resource-body judgements built on them.

use alloc::format;

use super::{CompileError, Deriv, ErrorKind, Rule, State};
use crate::env::Scope;
use crate::syntax::{Attr, BinOp, Case, Expr, ExprKind, Key, Pos};

type R = Result<(), CompileError>;

fn err(kind: ErrorKind, pos: Pos, scope: &Scope, msg: impl Into<alloc::string::String>) -> CompileError {
    CompileError::new(kind, pos, Some(scope), msg)
}

pub(crate) fn internal(pos: Pos, scope: &Scope, what: &str) -> CompileError {
    err(ErrorKind::InternalStuck, pos, scope, format!("no rule applies to {what}"))
}

/// `caseMatch`: `default` matches everything, otherwise structural equality.
pub fn case_match(v: &Expr, case: &Case) -> bool {
    match case {
        Case::Default => true,
        Case::Expr(c) => v == c,
    }
}

fn arith(op: BinOp, a: i64, b: i64) -> Result<i64, ErrorKind> {
    let r = match op {
        BinOp::Add => a.checked_add(b),
        BinOp::Sub => a.checked_sub(b),
        BinOp::Mul => a.checked_mul(b),
        BinOp::Div | BinOp::Rem if b == 0 => return Err(ErrorKind::DivisionByZero),
        BinOp::Div => a.checked_div(b),
        BinOp::Rem => a.checked_rem(b),
        _ => None,
    };
    r.ok_or(ErrorKind::TypeMismatch)
}

/// Integer operation of a binary arithmetic expression on two integers,
/// or the error that makes it stuck.
pub fn arith_value(op: BinOp, a: i64, b: i64) -> Result<i64, ErrorKind> {
    arith(op, a, b)
}

fn compare(op: BinOp, a: i64, b: i64) -> bool {
    match op {
        BinOp::Lt => a < b,
        BinOp::Gt => a > b,
        BinOp::Le => a <= b,
        BinOp::Ge => a >= b,
        _ => unreachable!("not an ordering operator"),
    }
}

/// Result of a comparison on two values, or `None` if the operands do not
/// fit the operator.
pub fn comparison_value(op: BinOp, l: &Expr, r: &Expr) -> Option<bool> {
    match op {
        BinOp::Eq => Some(l == r),
        BinOp::Ne => Some(l != r),
        _ => match (&l.kind, &r.kind) {
            (ExprKind::Int(a), ExprKind::Int(b)) => Some(compare(op, *a, *b)),
            _ => None,
        },
    }
}

fn describe(e: &Expr) -> alloc::string::String {
    match e.to_value() {
        Some(v) => format!("{} {v}", v.type_name()),
        None => format!("{e}"),
    }
}

/// Performs one step of the expression `e` in ambient scope `scope`.
pub(crate) fn step(st: &State, e: &mut Expr, scope: &Scope, d: &mut Deriv) -> R {
    let pos = e.pos;
    let next: ExprKind = match &mut e.kind {
        ExprKind::Int(_) | ExprKind::Str(_) | ExprKind::Bool(_) => {
            return Err(internal(pos, scope, "a value"))
        }
        ExprKind::Var(x) => {
            let mut at = scope.clone();
            let mut hops = 0;
            loop {
                if let Some(v) = st.sigma.get(&at, x) {
                    d.leaf(Rule::LVar, Some(&at), pos);
                    break v.to_expr(pos).kind;
                }
                match st.kappa.parent_of(&at) {
                    Some(parent) if hops <= st.kappa.len() + 2 => {
                        d.push(Rule::PVar);
                        at = parent;
                        hops += 1;
                    }
                    _ => {
                        return Err(err(
                            ErrorKind::UndefinedVariable,
                            pos,
                            scope,
                            format!("variable `${x}` is not defined in scope {scope} or its ancestors"),
                        ))
                    }
                }
            }
        }
        ExprKind::TopVar(x) => match st.sigma.get(&Scope::Top, x) {
            Some(v) => {
                d.leaf(Rule::TVar, Some(scope), pos);
                v.to_expr(pos).kind
            }
            None => {
                return Err(err(
                    ErrorKind::UndefinedVariable,
                    pos,
                    scope,
                    format!("variable `$::{x}` is not defined in top scope"),
                ))
            }
        },
        ExprKind::ClassVar { class, name } => {
            match st.sigma.get(&Scope::Class(class.clone()), name) {
                Some(v) => {
                    d.leaf(Rule::QVar, Some(scope), pos);
                    v.to_expr(pos).kind
                }
                None => {
                    return Err(err(
                        ErrorKind::UndefinedVariable,
                        pos,
                        scope,
                        format!("variable `$::{class}::{name}` is not defined in scope ::{class}"),
                    ))
                }
            }
        }
        ExprKind::Binary { op, lhs, rhs } => {
            let op = *op;
            if op.is_arithmetic() {
                if !lhs.is_value() {
                    d.push(Rule::ArithLeft);
                    return step(st, lhs, scope, d);
                }
                let ExprKind::Int(a) = lhs.kind else {
                    return Err(err(
                        ErrorKind::TypeMismatch,
                        lhs.pos,
                        scope,
                        format!("left operand of `{}` must be an integer, found {}", op.symbol(), describe(lhs)),
                    ));
                };
                if !rhs.is_value() {
                    d.push(Rule::ArithRight);
                    return step(st, rhs, scope, d);
                }
                let ExprKind::Int(b) = rhs.kind else {
                    return Err(err(
                        ErrorKind::TypeMismatch,
                        rhs.pos,
                        scope,
                        format!("right operand of `{}` must be an integer, found {}", op.symbol(), describe(rhs)),
                    ));
                };
                let v = arith(op, a, b).map_err(|kind| {
                    let msg = match kind {
                        ErrorKind::DivisionByZero => format!("`{a} {} {b}` divides by zero", op.symbol()),
                        _ => format!("`{a} {} {b}` overflows a 64-bit integer", op.symbol()),
                    };
                    err(kind, pos, scope, msg)
                })?;
                d.leaf(Rule::ArithValue, Some(scope), pos);
                ExprKind::Int(v)
            } else if op.is_comparison() {
                if !lhs.is_value() {
                    d.push(Rule::CompLeft);
                    return step(st, lhs, scope, d);
                }
                if !rhs.is_value() {
                    d.push(Rule::CompRight);
                    return step(st, rhs, scope, d);
                }
                let Some(b) = comparison_value(op, lhs, rhs) else {
                    return Err(err(
                        ErrorKind::TypeMismatch,
                        pos,
                        scope,
                        format!(
                            "`{}` compares integers only, found {} and {}",
                            op.symbol(),
                            describe(lhs),
                            describe(rhs)
                        ),
                    ));
                };
                d.leaf(if b { Rule::CompValueI } else { Rule::CompValueII }, Some(scope), pos);
                ExprKind::Bool(b)
            } else {
                let and = op == BinOp::And;
                let (left, short, cont, value) = if and {
                    (Rule::AndLeft, Rule::AndRightI, Rule::AndRightII, Rule::AndValue)
                } else {
                    (Rule::OrLeft, Rule::OrRightI, Rule::OrRightII, Rule::OrValue)
                };
                if !lhs.is_value() {
                    d.push(left);
                    return step(st, lhs, scope, d);
                }
                let ExprKind::Bool(a) = lhs.kind else {
                    return Err(err(
                        ErrorKind::TypeMismatch,
                        lhs.pos,
                        scope,
                        format!("operand of `{}` must be a boolean, found {}", op.symbol(), describe(lhs)),
                    ));
                };
                // `false and e` / `true or e`: the right operand takes one
                // step, which is then discarded.
                let decided = a != and;
                if !rhs.is_value() {
                    if decided {
                        d.push(short);
                        step(st, rhs, scope, d)?;
                        ExprKind::Bool(a)
                    } else {
                        d.push(cont);
                        return step(st, rhs, scope, d);
                    }
                } else {
                    let ExprKind::Bool(b) = rhs.kind else {
                        return Err(err(
                            ErrorKind::TypeMismatch,
                            rhs.pos,
                            scope,
                            format!("operand of `{}` must be a boolean, found {}", op.symbol(), describe(rhs)),
                        ));
                    };
                    d.leaf(value, Some(scope), pos);
                    ExprKind::Bool(if and { a && b } else { a || b })
                }
            }
        }
        ExprKind::Not(inner) => {
            if !inner.is_value() {
                d.push(Rule::NotStep);
                return step(st, inner, scope, d);
            }
            match inner.kind {
                ExprKind::Bool(true) => {
                    d.leaf(Rule::NotValueI, Some(scope), pos);
                    ExprKind::Bool(false)
                }
                ExprKind::Bool(false) => {
                    d.leaf(Rule::NotValueII, Some(scope), pos);
                    ExprKind::Bool(true)
                }
                _ => {
                    return Err(err(
                        ErrorKind::TypeMismatch,
                        pos,
                        scope,
                        format!("operand of `!` must be a boolean, found {}", describe(inner)),
                    ))
                }
            }
        }
        ExprKind::Array(items) => {
            let Some(i) = items.iter().position(|x| !x.is_value()) else {
                return Err(internal(pos, scope, "an array value"));
            };
            d.push(Rule::ArrExp);
            d.repeat(Rule::ArrEleI, i);
            d.push(Rule::ArrEleII);
            return step(st, &mut items[i], scope, d);
        }
        ExprKind::Hash(entries) => {
            let Some(i) = entries.iter().position(|(_, x)| !x.is_value()) else {
                return Err(internal(pos, scope, "a hash value"));
            };
            d.push(Rule::HaExp);
            d.repeat(Rule::HEleI, i);
            d.push(Rule::HEleII);
            return step(st, &mut entries[i].1, scope, d);
        }
        ExprKind::ResourceRef { title, .. } => {
            if title.is_value() {
                return Err(internal(pos, scope, "a resource reference value"));
            }
            d.push(Rule::RefRes);
            return step(st, title, scope, d);
        }
        ExprKind::Index { target, index } => {
            if !target.is_value() {
                d.push(Rule::DeRefExp);
                return step(st, target, scope, d);
            }
            if !index.is_value() {
                d.push(Rule::DeRefIndex);
                return step(st, index, scope, d);
            }
            let bad = |msg: alloc::string::String| err(ErrorKind::BadDereference, pos, scope, msg);
            match (&target.kind, &index.kind) {
                (ExprKind::Array(items), ExprKind::Int(n)) => {
                    let Some(v) = usize::try_from(*n).ok().and_then(|n| items.get(n)) else {
                        return Err(bad(format!("index {n} is out of bounds for an array of length {}", items.len())));
                    };
                    d.leaf(Rule::DeRefArray, Some(scope), pos);
                    v.kind.clone()
                }
                (ExprKind::Hash(entries), ExprKind::Int(_) | ExprKind::Str(_)) => {
                    let key = match &index.kind {
                        ExprKind::Int(i) => Key::Int(*i),
                        ExprKind::Str(s) => Key::Str(s.clone()),
                        _ => unreachable!(),
                    };
                    let Some((_, v)) = entries.iter().find(|(k, _)| *k == key) else {
                        return Err(bad(format!("hash has no key {index}")));
                    };
                    d.leaf(Rule::DeRefHash, Some(scope), pos);
                    v.kind.clone()
                }
                (ExprKind::ResourceRef { type_name, title }, ExprKind::Str(attr)) => {
                    let ExprKind::Str(w) = &title.kind else {
                        return Err(bad(format!("resource reference {target} has a non-string title")));
                    };
                    let Some(v) = st.catalog.lookup(type_name, w, attr) else {
                        let msg = if st.catalog.find(type_name, w).is_some() {
                            format!("resource {target} has no attribute `{attr}`")
                        } else {
                            format!("resource {target} is not in the catalog")
                        };
                        return Err(bad(msg));
                    };
                    d.leaf(Rule::DeRefRes, Some(scope), pos);
                    v.to_expr(pos).kind
                }
                _ => {
                    return Err(bad(format!("cannot index {} with {}", describe(target), describe(index))));
                }
            }
        }
        ExprKind::Selector { scrutinee, arms } => {
            if !scrutinee.is_value() {
                d.push(Rule::SControl);
                return step(st, scrutinee, scope, d);
            }
            let Some(first) = arms.first_mut() else {
                return Err(err(
                    ErrorKind::SelectorNoMatch,
                    pos,
                    scope,
                    format!("no selector case matches {}", describe(scrutinee)),
                ));
            };
            match &mut first.case {
                Case::Default => {
                    d.leaf(Rule::SDefault, Some(scope), pos);
                    arms.swap_remove(0).value.kind
                }
                Case::Expr(c) if !c.is_value() => {
                    d.push(Rule::SCase);
                    return step(st, c, scope, d);
                }
                Case::Expr(_) => {
                    if case_match(scrutinee, &first.case) {
                        d.leaf(Rule::SChooseI, Some(scope), pos);
                        arms.swap_remove(0).value.kind
                    } else {
                        d.leaf(Rule::SChooseII, Some(scope), pos);
                        arms.remove(0);
                        return Ok(());
                    }
                }
            }
        }
    };
    e.kind = next;
    Ok(())
}

/// One step of an attribute list whose values are not all evaluated
/// (ResStepIII down to ResStepII).
pub(crate) fn step_attrs(st: &State, attrs: &mut [Attr], scope: &Scope, d: &mut Deriv) -> R {
    let Some(i) = attrs.iter().position(|a| !a.value.is_value()) else {
        return Err(internal(Pos::default(), scope, "evaluated attributes"));
    };
    d.repeat(Rule::ResStepIII, i);
    d.push(Rule::ResStepII);
    step(st, &mut attrs[i].value, scope, d)
}

/// One step of a resource body `title : attrs`. The title is evaluated
/// before any attribute.
pub(crate) fn step_body(st: &State, title: &mut Expr, attrs: &mut [Attr], scope: &Scope, d: &mut Deriv) -> R {
    if !title.is_value() {
        d.push(Rule::ResTitle);
        step(st, title, scope, d)
    } else {
        d.push(Rule::ResStepI);
        step_attrs(st, attrs, scope, d)
    }
}

pub(crate) fn body_is_value(title: &Expr, attrs: &[Attr]) -> bool {
    title.is_value() && attrs.iter().all(|a| a.value.is_value())
}
