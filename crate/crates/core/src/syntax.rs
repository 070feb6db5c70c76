//! Abstract syntax for manifests, statements and expressions.
//!
//! Values are not a separate syntactic category: a value is an expression
//! built only from literals, arrays, hashes and resource references whose
//! components are values (see [`Expr::is_value`]). Evaluation rewrites
//! expressions in place until they reach that form.
//!
//! Every node carries a [`Pos`]. Positions never take part in equality, so
//! two trees parsed from differently formatted sources compare equal.

use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::env::Scope;

/// Source position (1-based line and column).
///
/// All positions compare equal to each other so that derived `PartialEq`
/// on AST nodes is purely structural.
#[derive(Clone, Copy, Debug, Default)]
pub struct Pos {
    pub line: u32,
    pub col: u32,
}

impl Pos {
    pub const fn new(line: u32, col: u32) -> Pos {
        Pos { line, col }
    }
}

impl PartialEq for Pos {
    fn eq(&self, _: &Pos) -> bool {
        true
    }
}

impl Eq for Pos {}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

/// A class name such as `ssh::params`, stored in its `::`-joined form.
///
/// The segments carry no namespace meaning; `ssh::params` does not require a
/// class `ssh` to exist.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ClassName(String);

impl ClassName {
    pub fn new(name: impl Into<String>) -> ClassName {
        ClassName(name.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn segments(&self) -> impl Iterator<Item = &str> {
        self.0.split("::")
    }
}

impl fmt::Display for ClassName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for ClassName {
    fn from(s: &str) -> ClassName {
        ClassName::new(s)
    }
}

/// Scalar hash key.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Key {
    Int(i64),
    Str(String),
}

impl From<&str> for Key {
    fn from(s: &str) -> Key {
        Key::Str(s.into())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Rem,
    Eq,
    Ne,
    Lt,
    Gt,
    Le,
    Ge,
    And,
    Or,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Rem => "%",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Gt => ">",
            BinOp::Le => "<=",
            BinOp::Ge => ">=",
            BinOp::And => "and",
            BinOp::Or => "or",
        }
    }

    /// Binding strength; larger binds tighter.
    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Or => 1,
            BinOp::And => 2,
            BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Gt | BinOp::Le | BinOp::Ge => 3,
            BinOp::Add | BinOp::Sub => 4,
            BinOp::Mul | BinOp::Div | BinOp::Rem => 5,
        }
    }

    pub fn is_arithmetic(self) -> bool {
        matches!(self, BinOp::Add | BinOp::Sub | BinOp::Mul | BinOp::Div | BinOp::Rem)
    }

    pub fn is_comparison(self) -> bool {
        matches!(
            self,
            BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Gt | BinOp::Le | BinOp::Ge
        )
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Expr {
    pub kind: ExprKind,
    pub pos: Pos,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ExprKind {
    Int(i64),
    Str(String),
    Bool(bool),
    /// `$x`
    Var(String),
    /// `$::x`
    TopVar(String),
    /// `$a::x` or `$::a::x`
    ClassVar { class: ClassName, name: String },
    Binary { op: BinOp, lhs: Box<Expr>, rhs: Box<Expr> },
    Not(Box<Expr>),
    Array(Vec<Expr>),
    Hash(Vec<(Key, Expr)>),
    /// `e1[e2]`
    Index { target: Box<Expr>, index: Box<Expr> },
    /// `t[e]`, `type_name` is the lowercase built-in type name.
    ResourceRef { type_name: String, title: Box<Expr> },
    /// `e ? { M }`
    Selector { scrutinee: Box<Expr>, arms: Vec<SelectorArm> },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Case {
    Default,
    Expr(Expr),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SelectorArm {
    pub case: Case,
    pub value: Expr,
}

impl Expr {
    pub fn new(kind: ExprKind, pos: Pos) -> Expr {
        Expr { kind, pos }
    }

    pub fn int(i: i64) -> Expr {
        Expr::new(ExprKind::Int(i), Pos::default())
    }

    pub fn str(s: impl Into<String>) -> Expr {
        Expr::new(ExprKind::Str(s.into()), Pos::default())
    }

    pub fn bool(b: bool) -> Expr {
        Expr::new(ExprKind::Bool(b), Pos::default())
    }

    pub fn var(name: impl Into<String>) -> Expr {
        Expr::new(ExprKind::Var(name.into()), Pos::default())
    }

    pub fn binary(op: BinOp, lhs: Expr, rhs: Expr) -> Expr {
        let pos = lhs.pos;
        Expr::new(
            ExprKind::Binary {
                op,
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
            },
            pos,
        )
    }

    /// True when the expression is in normal form, i.e. denotes a value.
    pub fn is_value(&self) -> bool {
        match &self.kind {
            ExprKind::Int(_) | ExprKind::Str(_) | ExprKind::Bool(_) => true,
            ExprKind::Array(items) => items.iter().all(Expr::is_value),
            ExprKind::Hash(entries) => entries.iter().all(|(_, e)| e.is_value()),
            ExprKind::ResourceRef { title, .. } => title.is_value(),
            _ => false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Attr {
    pub name: String,
    pub value: Expr,
}

impl Attr {
    pub fn new(name: impl Into<String>, value: Expr) -> Attr {
        Attr {
            name: name.into(),
            value,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CaseArm {
    pub case: Case,
    pub body: Stmt,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Stmt {
    pub kind: StmtKind,
    pub pos: Pos,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StmtKind {
    /// Expression statement; its value is discarded.
    Expr(Expr),
    Seq(Box<Stmt>, Box<Stmt>),
    Assign { name: String, value: Expr },
    Unless { cond: Expr, body: Box<Stmt> },
    If { cond: Expr, then: Box<Stmt>, otherwise: Box<Stmt> },
    Case { scrutinee: Expr, arms: Vec<CaseArm> },
    /// `head { title: attrs }`. Whether `head` names a built-in type or a
    /// defined resource type is decided during evaluation.
    Resource { head: String, title: Expr, attrs: Vec<Attr> },
    /// Resource-like class declaration `class { a: attrs }`.
    ClassDecl { class: ClassName, attrs: Vec<Attr> },
    Include(ClassName),
    /// `fail(e)`: raises a compilation error carrying the message `e`.
    Fail(Expr),
    /// Internal: evaluate the body in the given scope.
    Scope(Scope, Box<Stmt>),
    /// The empty statement. Internal, except that an empty block `{}` in
    /// source parses to `skip`.
    Skip,
}

impl Default for Stmt {
    fn default() -> Stmt {
        Stmt::skip()
    }
}

impl Stmt {
    pub fn new(kind: StmtKind, pos: Pos) -> Stmt {
        Stmt { kind, pos }
    }

    pub fn skip() -> Stmt {
        Stmt::new(StmtKind::Skip, Pos::default())
    }

    pub fn is_skip(&self) -> bool {
        matches!(self.kind, StmtKind::Skip)
    }

    pub fn seq(first: Stmt, second: Stmt) -> Stmt {
        let pos = first.pos;
        Stmt::new(StmtKind::Seq(Box::new(first), Box::new(second)), pos)
    }

    pub fn assign(name: impl Into<String>, value: Expr) -> Stmt {
        let pos = value.pos;
        Stmt::new(
            StmtKind::Assign {
                name: name.into(),
                value,
            },
            pos,
        )
    }

    pub fn include(class: impl Into<ClassName>) -> Stmt {
        Stmt::new(StmtKind::Include(class.into()), Pos::default())
    }

    /// Right-associated sequence of `stmts`; `skip` when empty.
    pub fn sequence(stmts: Vec<Stmt>) -> Stmt {
        let mut iter = stmts.into_iter().rev();
        let Some(mut acc) = iter.next() else {
            return Stmt::skip();
        };
        for s in iter {
            acc = Stmt::seq(s, acc);
        }
        acc
    }

    /// Drops a statement tree without recursion. Evaluation can build
    /// sequences nested far deeper than the parser ever produces (for
    /// example a diverging inheritance chain), and recursive drop of such a
    /// tree would exhaust the stack.
    pub fn dismantle(self) {
        let mut stack = alloc::vec![self];
        while let Some(mut s) = stack.pop() {
            match &mut s.kind {
                StmtKind::Seq(a, b) => {
                    stack.push(core::mem::take(&mut **a));
                    stack.push(core::mem::take(&mut **b));
                }
                StmtKind::Scope(_, body)
                | StmtKind::Unless { body, .. } => stack.push(core::mem::take(&mut **body)),
                StmtKind::If { then, otherwise, .. } => {
                    stack.push(core::mem::take(&mut **then));
                    stack.push(core::mem::take(&mut **otherwise));
                }
                StmtKind::Case { arms, .. } => {
                    stack.extend(arms.iter_mut().map(|a| core::mem::take(&mut a.body)));
                }
                _ => {}
            }
        }
    }
}

/// Node specifier of a `node` definition.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum NodeSpec {
    Name(String),
    Default,
    List(Vec<String>),
}

/// Class or define parameter `$x` or `$x = e`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Param {
    pub name: String,
    pub default: Option<Expr>,
}

impl Param {
    pub fn required(name: impl Into<String>) -> Param {
        Param {
            name: name.into(),
            default: None,
        }
    }

    pub fn with_default(name: impl Into<String>, default: Expr) -> Param {
        Param {
            name: name.into(),
            default: Some(default),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Manifest {
    pub kind: ManifestKind,
    pub pos: Pos,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ManifestKind {
    Stmt(Stmt),
    Seq(Box<Manifest>, Box<Manifest>),
    Node { spec: NodeSpec, body: Stmt },
    Define { name: String, params: Vec<Param>, body: Stmt },
    /// `params` is `None` for the parameterless forms `class a {..}` and
    /// `class a inherits b {..}`.
    Class {
        name: ClassName,
        params: Option<Vec<Param>>,
        parent: Option<ClassName>,
        body: Stmt,
    },
}

impl Default for Manifest {
    fn default() -> Manifest {
        Manifest::skip()
    }
}

impl Manifest {
    pub fn new(kind: ManifestKind, pos: Pos) -> Manifest {
        Manifest { kind, pos }
    }

    pub fn skip() -> Manifest {
        Manifest::new(ManifestKind::Stmt(Stmt::skip()), Pos::default())
    }

    pub fn is_skip(&self) -> bool {
        matches!(&self.kind, ManifestKind::Stmt(s) if s.is_skip())
    }

    pub fn seq(first: Manifest, second: Manifest) -> Manifest {
        let pos = first.pos;
        Manifest::new(ManifestKind::Seq(Box::new(first), Box::new(second)), pos)
    }

    /// Right-associated sequence of manifest items; `skip` when empty.
    pub fn sequence(items: Vec<Manifest>) -> Manifest {
        let mut iter = items.into_iter().rev();
        let Some(mut acc) = iter.next() else {
            return Manifest::skip();
        };
        for m in iter {
            acc = Manifest::seq(m, acc);
        }
        acc
    }

    /// Top-level items of a right-associated sequence, in order.
    pub fn items(&self) -> Vec<&Manifest> {
        let mut out = Vec::new();
        let mut cur = self;
        loop {
            match &cur.kind {
                ManifestKind::Seq(a, b) => {
                    out.push(&**a);
                    cur = b;
                }
                _ => {
                    out.push(cur);
                    return out;
                }
            }
        }
    }

    /// Non-recursive drop; see [`Stmt::dismantle`].
    pub fn dismantle(self) {
        let mut stack = alloc::vec![self];
        while let Some(mut m) = stack.pop() {
            match &mut m.kind {
                ManifestKind::Seq(a, b) => {
                    stack.push(core::mem::take(&mut **a));
                    stack.push(core::mem::take(&mut **b));
                }
                ManifestKind::Stmt(s)
                | ManifestKind::Node { body: s, .. }
                | ManifestKind::Define { body: s, .. }
                | ManifestKind::Class { body: s, .. } => core::mem::take(s).dismantle(),
            }
        }
    }
}
