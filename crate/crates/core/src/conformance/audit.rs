//! Rule-applicability auditor.
//!
//! Every rule's premises and side conditions are checked on their own,
//! without consulting the evaluator. The auditor searches for all
//! derivations of a step from a configuration; the step relation is
//! deterministic exactly when there is at most one.

use alloc::vec::Vec;

use crate::env::{merge, Definition, Scope};
use crate::eval::{Configuration, Context, Rule, Settings, State, Term};
use crate::syntax::{
    Attr, BinOp, Case, Expr, ExprKind, Key, Manifest, ManifestKind, NodeSpec, Stmt, StmtKind,
};
use crate::value::Value;

/// Something a rule can conclude about.
#[derive(Clone, Debug)]
enum Focus<'a> {
    Expr(&'a Expr, Scope),
    /// Element list `A` of an array.
    Elems(&'a [Expr], Scope),
    /// Entry list `H` of a hash expression.
    Entries(&'a [(Key, Expr)], Scope),
    /// Attribute list `H` of a resource body or class declaration.
    Attrs(&'a [Attr], Scope),
    /// Resource body `e : H`.
    Body(&'a Expr, &'a [Attr], Scope),
    Stmt(&'a Stmt, Scope),
    Manifest(&'a Manifest),
}

/// The derivations found for one configuration.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Audit {
    /// Each derivation lists its rules from the conclusion down to the axiom.
    pub derivations: Vec<Vec<Rule>>,
    /// The search was cut off; `derivations` may be incomplete.
    pub truncated: bool,
}

impl Audit {
    /// Distinct rules concluding the whole step.
    pub fn applicable(&self) -> Vec<Rule> {
        let mut rules: Vec<Rule> = Vec::new();
        for d in &self.derivations {
            if let Some(&r) = d.first() {
                if !rules.contains(&r) {
                    rules.push(r);
                }
            }
        }
        rules
    }

    pub fn is_deterministic(&self) -> bool {
        self.derivations.len() <= 1
    }
}

/// Upper bound on search nodes per configuration.
const BUDGET: usize = 1 << 20;

/// Finds every derivation of a step from `cfg`.
pub fn audit(cfg: &Configuration, settings: &Settings) -> Audit {
    let (root, node) = match (&cfg.term, &cfg.context) {
        (Term::Manifest(m), Context::Node(n)) => (Focus::Manifest(m), n.as_str()),
        (Term::Stmt(s), Context::Scope(a)) => (Focus::Stmt(s, a.clone()), ""),
        (Term::Expr(e), Context::Scope(a)) => (Focus::Expr(e, a.clone()), ""),
        _ => return Audit::default(),
    };
    let auditor = Auditor {
        st: &cfg.state,
        settings,
        node,
    };
    let mut arena: Vec<(Rule, Option<usize>)> = Vec::new();
    let mut leaves = Vec::new();
    let mut stack = alloc::vec![(root, None)];
    let mut truncated = false;
    while let Some((focus, parent)) = stack.pop() {
        for &rule in Rule::ALL {
            let Some(premise) = auditor.premise(rule, &focus) else {
                continue;
            };
            if arena.len() >= BUDGET {
                truncated = true;
                stack.clear();
                break;
            }
            arena.push((rule, parent));
            let id = arena.len() - 1;
            match premise {
                None => leaves.push(id),
                Some(sub) => stack.push((sub, Some(id))),
            }
        }
    }
    let derivations = leaves
        .into_iter()
        .map(|leaf| {
            let mut chain = Vec::new();
            let mut cur = Some(leaf);
            while let Some(i) = cur {
                chain.push(arena[i].0);
                cur = arena[i].1;
            }
            chain.reverse();
            chain
        })
        .collect();
    Audit {
        derivations,
        truncated,
    }
}

struct Auditor<'s> {
    st: &'s State,
    settings: &'s Settings,
    node: &'s str,
}

fn is_val(e: &Expr) -> bool {
    match &e.kind {
        ExprKind::Int(_) | ExprKind::Str(_) | ExprKind::Bool(_) => true,
        ExprKind::Array(xs) => xs.iter().all(is_val),
        ExprKind::Hash(es) => es.iter().all(|(_, x)| is_val(x)),
        ExprKind::ResourceRef { title, .. } => is_val(title),
        _ => false,
    }
}

fn int(e: &Expr) -> Option<i64> {
    match e.kind {
        ExprKind::Int(i) => Some(i),
        _ => None,
    }
}

fn boolean(e: &Expr) -> Option<bool> {
    match e.kind {
        ExprKind::Bool(b) => Some(b),
        _ => None,
    }
}

fn string(e: &Expr) -> Option<&str> {
    match &e.kind {
        ExprKind::Str(s) => Some(s),
        _ => None,
    }
}

fn is_arith(op: BinOp) -> bool {
    matches!(op, BinOp::Add | BinOp::Sub | BinOp::Mul | BinOp::Div | BinOp::Rem)
}

fn is_cmp(op: BinOp) -> bool {
    matches!(
        op,
        BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Gt | BinOp::Le | BinOp::Ge
    )
}

fn arith_defined(op: BinOp, a: i64, b: i64) -> bool {
    match op {
        BinOp::Add => a.checked_add(b).is_some(),
        BinOp::Sub => a.checked_sub(b).is_some(),
        BinOp::Mul => a.checked_mul(b).is_some(),
        BinOp::Div => b != 0 && a.checked_div(b).is_some(),
        BinOp::Rem => b != 0 && a.checked_rem(b).is_some(),
        _ => false,
    }
}

/// Truth value of a comparison between values, if the operator applies.
fn relation(op: BinOp, l: &Expr, r: &Expr) -> Option<bool> {
    match op {
        BinOp::Eq => Some(l == r),
        BinOp::Ne => Some(l != r),
        _ => {
            let (a, b) = (int(l)?, int(r)?);
            Some(match op {
                BinOp::Lt => a < b,
                BinOp::Gt => a > b,
                BinOp::Le => a <= b,
                BinOp::Ge => a >= b,
                _ => return None,
            })
        }
    }
}

fn values(attrs: &[Attr]) -> Option<Vec<(alloc::string::String, Value)>> {
    attrs
        .iter()
        .map(|a| a.value.to_value().map(|v| (a.name.clone(), v)))
        .collect()
}

fn node_matches(node: &str, spec: &NodeSpec) -> bool {
    match spec {
        NodeSpec::Default => true,
        NodeSpec::Name(n) => n == node,
        NodeSpec::List(ns) => ns.iter().any(|n| n == node),
    }
}

type Premise<'a> = Option<Option<Focus<'a>>>;

const AXIOM: Premise<'static> = Some(None);

fn when<'a>(cond: bool, then: Premise<'a>) -> Premise<'a> {
    if cond {
        then
    } else {
        None
    }
}

impl<'s> Auditor<'s> {
    /// `None` if `rule` cannot conclude about `focus`; `Some(None)` if it
    /// applies as an axiom; `Some(Some(f))` if it applies provided `f`
    /// steps.
    fn premise<'a>(&self, rule: Rule, focus: &Focus<'a>) -> Premise<'a> {
        match focus {
            Focus::Expr(e, a) => self.expr_rule(rule, e, a),
            Focus::Elems(xs, a) => match (rule, xs.split_first()) {
                (Rule::ArrEleI, Some((x, rest))) if is_val(x) => Some(Some(Focus::Elems(rest, a.clone()))),
                (Rule::ArrEleII, Some((x, _))) => Some(Some(Focus::Expr(x, a.clone()))),
                _ => None,
            },
            Focus::Entries(es, a) => match (rule, es.split_first()) {
                (Rule::HEleI, Some(((_, x), rest))) if is_val(x) => {
                    Some(Some(Focus::Entries(rest, a.clone())))
                }
                (Rule::HEleII, Some(((_, x), _))) => Some(Some(Focus::Expr(x, a.clone()))),
                _ => None,
            },
            Focus::Attrs(attrs, a) => match (rule, attrs.split_first()) {
                (Rule::ResStepII, Some((x, _))) => Some(Some(Focus::Expr(&x.value, a.clone()))),
                (Rule::ResStepIII, Some((x, rest))) if is_val(&x.value) => {
                    Some(Some(Focus::Attrs(rest, a.clone())))
                }
                _ => None,
            },
            Focus::Body(title, attrs, a) => match rule {
                Rule::ResTitle => Some(Some(Focus::Expr(title, a.clone()))),
                Rule::ResStepI if is_val(title) => Some(Some(Focus::Attrs(attrs, a.clone()))),
                _ => None,
            },
            Focus::Stmt(s, a) => self.stmt_rule(rule, s, a),
            Focus::Manifest(m) => self.manifest_rule(rule, m),
        }
    }

    fn expr_rule<'a>(&self, rule: Rule, e: &'a Expr, a: &Scope) -> Premise<'a> {
        let sub = |x: &'a Expr| Some(Some(Focus::Expr(x, a.clone())));
        let sigma = &self.st.sigma;
        match (&e.kind, rule) {
            (ExprKind::Var(x), Rule::LVar) => when(sigma.contains(a, x), AXIOM),
            (ExprKind::Var(x), Rule::PVar) => {
                if sigma.contains(a, x) {
                    return None;
                }
                let parent = self.st.kappa.parent_of(a)?;
                Some(Some(Focus::Expr(e, parent)))
            }
            (ExprKind::TopVar(x), Rule::TVar) => when(sigma.contains(&Scope::Top, x), AXIOM),
            (ExprKind::ClassVar { class, name }, Rule::QVar) => {
                when(sigma.contains(&Scope::Class(class.clone()), name), AXIOM)
            }
            (ExprKind::Binary { op, lhs, rhs }, _) => {
                let op = *op;
                match rule {
                    Rule::ArithLeft if is_arith(op) => sub(lhs),
                    Rule::ArithRight if is_arith(op) && int(lhs).is_some() => sub(rhs),
                    Rule::ArithValue if is_arith(op) => match (int(lhs), int(rhs)) {
                        (Some(x), Some(y)) => when(arith_defined(op, x, y), AXIOM),
                        _ => None,
                    },
                    Rule::CompLeft if is_cmp(op) => sub(lhs),
                    Rule::CompRight if is_cmp(op) && is_val(lhs) => sub(rhs),
                    Rule::CompValueI | Rule::CompValueII if is_cmp(op) => {
                        if !is_val(lhs) || !is_val(rhs) {
                            return None;
                        }
                        let holds = relation(op, lhs, rhs)?;
                        when(holds == (rule == Rule::CompValueI), AXIOM)
                    }
                    Rule::AndLeft if op == BinOp::And => sub(lhs),
                    Rule::AndRightI if op == BinOp::And && boolean(lhs) == Some(false) => sub(rhs),
                    Rule::AndRightII if op == BinOp::And && boolean(lhs) == Some(true) => sub(rhs),
                    Rule::AndValue if op == BinOp::And => {
                        when(boolean(lhs).is_some() && boolean(rhs).is_some(), AXIOM)
                    }
                    Rule::OrLeft if op == BinOp::Or => sub(lhs),
                    Rule::OrRightI if op == BinOp::Or && boolean(lhs) == Some(true) => sub(rhs),
                    Rule::OrRightII if op == BinOp::Or && boolean(lhs) == Some(false) => sub(rhs),
                    Rule::OrValue if op == BinOp::Or => {
                        when(boolean(lhs).is_some() && boolean(rhs).is_some(), AXIOM)
                    }
                    _ => None,
                }
            }
            (ExprKind::Not(x), Rule::NotStep) => sub(x),
            (ExprKind::Not(x), Rule::NotValueI) => when(boolean(x) == Some(true), AXIOM),
            (ExprKind::Not(x), Rule::NotValueII) => when(boolean(x) == Some(false), AXIOM),
            (ExprKind::Array(xs), Rule::ArrExp) => Some(Some(Focus::Elems(xs, a.clone()))),
            (ExprKind::Hash(es), Rule::HaExp) => Some(Some(Focus::Entries(es, a.clone()))),
            (ExprKind::Selector { scrutinee, .. }, Rule::SControl) => sub(scrutinee),
            (ExprKind::Selector { scrutinee, arms }, _) => {
                if !is_val(scrutinee) {
                    return None;
                }
                let first = arms.first()?;
                match (&first.case, rule) {
                    (Case::Default, Rule::SDefault) => AXIOM,
                    (Case::Expr(c), Rule::SCase) => sub(c),
                    (Case::Expr(c), Rule::SChooseI) => when(is_val(c) && **scrutinee == *c, AXIOM),
                    (Case::Expr(c), Rule::SChooseII) => when(is_val(c) && **scrutinee != *c, AXIOM),
                    _ => None,
                }
            }
            (ExprKind::Index { target, .. }, Rule::DeRefExp) => sub(target),
            (ExprKind::Index { target, index }, Rule::DeRefIndex) => when(is_val(target), sub(index)),
            (ExprKind::Index { target, index }, Rule::DeRefArray) => {
                let (ExprKind::Array(xs), Some(n)) = (&target.kind, int(index)) else {
                    return None;
                };
                when(is_val(target) && n >= 0 && (n as u64) < xs.len() as u64, AXIOM)
            }
            (ExprKind::Index { target, index }, Rule::DeRefHash) => {
                let ExprKind::Hash(es) = &target.kind else {
                    return None;
                };
                let key = match &index.kind {
                    ExprKind::Int(i) => Key::Int(*i),
                    ExprKind::Str(s) => Key::Str(s.clone()),
                    _ => return None,
                };
                when(is_val(target) && es.iter().any(|(k, _)| *k == key), AXIOM)
            }
            (ExprKind::Index { target, index }, Rule::DeRefRes) => {
                let ExprKind::ResourceRef { type_name, title } = &target.kind else {
                    return None;
                };
                let (Some(w), Some(k)) = (string(title), string(index)) else {
                    return None;
                };
                let found = self
                    .st
                    .catalog
                    .resources()
                    .iter()
                    .find(|r| r.type_name == *type_name && r.title == w)
                    .is_some_and(|r| r.attrs.iter().any(|(name, _)| name == k));
                when(found, AXIOM)
            }
            (ExprKind::ResourceRef { title, .. }, Rule::RefRes) => sub(title),
            _ => None,
        }
    }

    fn stmt_rule<'a>(&self, rule: Rule, s: &'a Stmt, a: &Scope) -> Premise<'a> {
        let sub = |x: &'a Expr| Some(Some(Focus::Expr(x, a.clone())));
        let kappa = &self.st.kappa;
        match (&s.kind, rule) {
            (StmtKind::Expr(e), Rule::ExprStep) => sub(e),
            (StmtKind::Expr(e), Rule::Expr) => when(is_val(e), AXIOM),
            (StmtKind::Seq(first, _), Rule::SeqStep) => Some(Some(Focus::Stmt(first, a.clone()))),
            (StmtKind::Seq(first, _), Rule::SeqSkip) => when(first.is_skip(), AXIOM),
            (StmtKind::Assign { value, .. }, Rule::AssignStep) => sub(value),
            (StmtKind::Assign { name, value }, Rule::Assign) => {
                when(is_val(value) && !self.st.sigma.contains(a, name), AXIOM)
            }
            (StmtKind::If { cond, .. }, Rule::IfStep) => sub(cond),
            (StmtKind::If { cond, .. }, Rule::IfT) => when(boolean(cond) == Some(true), AXIOM),
            (StmtKind::If { cond, .. }, Rule::IfF) => when(boolean(cond) == Some(false), AXIOM),
            (StmtKind::Unless { cond, .. }, Rule::UnlessStep) => sub(cond),
            (StmtKind::Unless { cond, .. }, Rule::UnlessT) => when(boolean(cond) == Some(true), AXIOM),
            (StmtKind::Unless { cond, .. }, Rule::UnlessF) => when(boolean(cond) == Some(false), AXIOM),
            (StmtKind::Case { scrutinee, .. }, Rule::CaseStep1) => sub(scrutinee),
            (StmtKind::Case { scrutinee, arms }, _) if is_val(scrutinee) => match (arms.first(), rule) {
                (None, Rule::CaseDone) => AXIOM,
                (Some(arm), Rule::CaseStep2) => match &arm.case {
                    Case::Expr(c) => sub(c),
                    Case::Default => None,
                },
                (Some(arm), Rule::CaseMatch) => match &arm.case {
                    Case::Default => AXIOM,
                    Case::Expr(c) => when(is_val(c) && *c == *scrutinee, AXIOM),
                },
                (Some(arm), Rule::CaseNoMatch) => match &arm.case {
                    Case::Default => None,
                    Case::Expr(c) => when(is_val(c) && *c != *scrutinee, AXIOM),
                },
                _ => None,
            },
            (StmtKind::Resource { head, title, attrs }, Rule::ResStep | Rule::DefStep) => {
                let builtin = self.settings.builtin_types.contains(head);
                when(builtin == (rule == Rule::ResStep), Some(Some(Focus::Body(title, attrs, a.clone()))))
            }
            (StmtKind::Resource { head, title, attrs }, Rule::ResDecl) => {
                if !self.settings.builtin_types.contains(head) || values(attrs).is_none() {
                    return None;
                }
                let w = string(title)?;
                let taken = self
                    .st
                    .catalog
                    .resources()
                    .iter()
                    .any(|r| r.type_name == *head && r.title == w);
                when(!taken, AXIOM)
            }
            (StmtKind::Resource { head, title, attrs }, Rule::Def) => {
                if self.settings.builtin_types.contains(head) {
                    return None;
                }
                let Some(Definition::ResourceDef { params, .. }) = kappa.get(head) else {
                    return None;
                };
                string(title)?;
                let args = values(attrs)?;
                when(merge(params, &args, s.pos).is_ok(), AXIOM)
            }
            (StmtKind::Include(c), Rule::IncD) => {
                when(matches!(kappa.get(c.as_str()), Some(Definition::DeclaredClass(_))), AXIOM)
            }
            (StmtKind::Include(c), Rule::IncU | Rule::IncPU | Rule::IncPD) => {
                let Some(Definition::ClassDef { parent, params, .. }) = kappa.get(c.as_str()) else {
                    return None;
                };
                match (rule, parent) {
                    (Rule::IncU, None) => {
                        when(merge(params, &[], s.pos).is_ok() && kappa.base_of(a).is_some(), AXIOM)
                    }
                    (Rule::IncPU, Some(b)) => {
                        when(matches!(kappa.get(b.as_str()), Some(Definition::ClassDef { .. })), AXIOM)
                    }
                    (Rule::IncPD, Some(b)) => when(
                        matches!(kappa.get(b.as_str()), Some(Definition::DeclaredClass(_)))
                            && merge(params, &[], s.pos).is_ok(),
                        AXIOM,
                    ),
                    _ => None,
                }
            }
            (StmtKind::ClassDecl { class, attrs }, _) => {
                let Some(Definition::ClassDef { parent, params, .. }) = kappa.get(class.as_str()) else {
                    return None;
                };
                if rule == Rule::CDecStep {
                    return Some(Some(Focus::Attrs(attrs, a.clone())));
                }
                let args = values(attrs)?;
                match (rule, parent) {
                    (Rule::CDecU, None) => {
                        when(merge(params, &args, s.pos).is_ok() && kappa.base_of(a).is_some(), AXIOM)
                    }
                    (Rule::CDecPU, Some(b)) => {
                        when(matches!(kappa.get(b.as_str()), Some(Definition::ClassDef { .. })), AXIOM)
                    }
                    (Rule::CDecPD, Some(b)) => when(
                        matches!(kappa.get(b.as_str()), Some(Definition::DeclaredClass(_)))
                            && merge(params, &args, s.pos).is_ok(),
                        AXIOM,
                    ),
                    _ => None,
                }
            }
            (StmtKind::Scope(inner, body), _) => {
                let persistent = matches!(inner, Scope::Top | Scope::Node | Scope::Class(_));
                let own_frame = matches!(inner, Scope::Def(b) if **b == *a);
                match rule {
                    Rule::ScopeStep if persistent => Some(Some(Focus::Stmt(body, inner.clone()))),
                    Rule::DefScopeStep if own_frame => Some(Some(Focus::Stmt(body, inner.clone()))),
                    Rule::ScopeDone => when(persistent && body.is_skip(), AXIOM),
                    Rule::DefScopeDone => when(own_frame && body.is_skip(), AXIOM),
                    _ => None,
                }
            }
            (StmtKind::Fail(e), Rule::FailStep) => sub(e),
            (StmtKind::Fail(e), Rule::Fail) => when(is_val(e), AXIOM),
            _ => None,
        }
    }

    fn manifest_rule<'a>(&self, rule: Rule, m: &'a Manifest) -> Premise<'a> {
        let kappa = &self.st.kappa;
        match (&m.kind, rule) {
            (ManifestKind::Stmt(s), Rule::TopScope) => Some(Some(Focus::Stmt(s, Scope::Top))),
            (ManifestKind::Seq(first, _), Rule::MSeqStep) => Some(Some(Focus::Manifest(first))),
            (ManifestKind::Seq(first, _), Rule::MSeqSkip) => when(first.is_skip(), AXIOM),
            (ManifestKind::Node { spec, .. }, Rule::NodeMatch) => when(node_matches(self.node, spec), AXIOM),
            (ManifestKind::Node { spec, .. }, Rule::NodeNoMatch) => {
                when(!node_matches(self.node, spec), AXIOM)
            }
            (ManifestKind::Define { name, .. }, Rule::RDef) => when(
                !kappa.contains(name) && !self.settings.builtin_types.contains(name),
                AXIOM,
            ),
            (ManifestKind::Class { name, params, parent, .. }, _) => {
                let expected = match (params.is_some(), parent.is_some()) {
                    (false, false) => Rule::CDef,
                    (false, true) => Rule::CDefI,
                    (true, false) => Rule::CDefP,
                    (true, true) => Rule::CDefPI,
                };
                when(rule == expected && !kappa.contains(name.as_str()), AXIOM)
            }
            _ => None,
        }
    }
}
