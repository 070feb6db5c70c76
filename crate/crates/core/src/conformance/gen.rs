//! Random manifest generator.
//!
//! In [`Mode::Safe`] the generator tracks which variables are bound, which
//! resources and definitions exist and which classes may still be declared,
//! so that most samples compile. [`Mode::Unsafe`] takes a safe sample and
//! injects one [`Fault`].

use alloc::boxed::Box;
use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::eval::ErrorKind;
use crate::syntax::{
    Attr, BinOp, Case, CaseArm, ClassName, Expr, ExprKind, Key, Manifest, ManifestKind, NodeSpec,
    Param, Pos, SelectorArm, Stmt, StmtKind,
};
use crate::value::Value;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Safe,
    Unsafe,
}

/// Relative weights of the productions.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Weights {
    pub assign: u32,
    pub resource: u32,
    pub define_instance: u32,
    pub include: u32,
    pub conditional: u32,
    pub case: u32,
    pub expr_stmt: u32,
    pub literal: u32,
    pub variable: u32,
    pub operator: u32,
    pub selector: u32,
    pub index: u32,
    pub reference: u32,
}

impl Default for Weights {
    fn default() -> Weights {
        Weights {
            assign: 6,
            resource: 5,
            define_instance: 2,
            include: 3,
            conditional: 2,
            case: 1,
            expr_stmt: 1,
            literal: 4,
            variable: 4,
            operator: 4,
            selector: 1,
            index: 1,
            reference: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GenConfig {
    pub seed: u64,
    pub mode: Mode,
    /// Maximum expression depth.
    pub max_depth: u32,
    pub max_classes: usize,
    pub max_defines: usize,
    /// Maximum length of an inheritance chain.
    pub max_inheritance: usize,
    /// Maximum number of statements per block.
    pub max_stmts: usize,
    pub weights: Weights,
}

impl Default for GenConfig {
    fn default() -> GenConfig {
        GenConfig {
            seed: 0,
            mode: Mode::Safe,
            max_depth: 3,
            max_classes: 4,
            max_defines: 3,
            max_inheritance: 3,
            max_stmts: 7,
            weights: Weights::default(),
        }
    }
}

impl GenConfig {
    pub fn safe(seed: u64) -> GenConfig {
        GenConfig {
            seed,
            ..GenConfig::default()
        }
    }

    pub fn unsafe_(seed: u64) -> GenConfig {
        GenConfig {
            seed,
            mode: Mode::Unsafe,
            ..GenConfig::default()
        }
    }
}

/// Faults injected in unsafe mode.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Fault {
    UnboundVariable,
    Reassignment,
    RepeatedResource,
    MissingClass,
    MissingResourceType,
    ReferenceToDefinedType,
    RepeatedDefinition,
    ClassRedeclared,
    MissingArgument,
    ExtraArgument,
    IllTyped,
    ZeroDivisor,
    NoSelectorMatch,
    OutOfBounds,
    InheritanceCycle,
    ExplicitFailure,
}

impl Fault {
    pub const ALL: &'static [Fault] = &[
        Fault::UnboundVariable,
        Fault::Reassignment,
        Fault::RepeatedResource,
        Fault::MissingClass,
        Fault::MissingResourceType,
        Fault::ReferenceToDefinedType,
        Fault::RepeatedDefinition,
        Fault::ClassRedeclared,
        Fault::MissingArgument,
        Fault::ExtraArgument,
        Fault::IllTyped,
        Fault::ZeroDivisor,
        Fault::NoSelectorMatch,
        Fault::OutOfBounds,
        Fault::InheritanceCycle,
        Fault::ExplicitFailure,
    ];

    /// The error the fault raises when compiled with default settings.
    pub fn expected_kind(self) -> ErrorKind {
        match self {
            Fault::UnboundVariable => ErrorKind::UndefinedVariable,
            Fault::Reassignment => ErrorKind::DuplicateVariable,
            Fault::RepeatedResource => ErrorKind::DuplicateResource,
            Fault::MissingClass | Fault::MissingResourceType | Fault::ReferenceToDefinedType => {
                ErrorKind::UndefinedDefinition
            }
            Fault::RepeatedDefinition => ErrorKind::DuplicateDefinition,
            Fault::ClassRedeclared => ErrorKind::ClassAlreadyDeclared,
            Fault::MissingArgument => ErrorKind::MissingParameter,
            Fault::ExtraArgument => ErrorKind::UnknownParameter,
            Fault::IllTyped => ErrorKind::TypeMismatch,
            Fault::ZeroDivisor => ErrorKind::DivisionByZero,
            Fault::NoSelectorMatch => ErrorKind::SelectorNoMatch,
            Fault::OutOfBounds => ErrorKind::BadDereference,
            Fault::InheritanceCycle => ErrorKind::InheritanceCycle,
            Fault::ExplicitFailure => ErrorKind::Failure,
        }
    }
}

/// A generated compilation input.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Sample {
    pub manifest: Manifest,
    pub node: String,
    pub facts: Vec<(String, Value)>,
    pub fault: Option<Fault>,
}

/// Generates a sample; deterministic in `cfg`.
pub fn generate(cfg: &GenConfig) -> Sample {
    let mut g = Gen {
        rng: ChaCha8Rng::seed_from_u64(cfg.seed),
        cfg: cfg.clone(),
        fresh: 0,
        classes: Vec::new(),
        defines: Vec::new(),
        declared_once: BTreeSet::new(),
    };
    let mut sample = g.sample();
    if cfg.mode == Mode::Unsafe {
        let fault = *Fault::ALL.choose(&mut g.rng).expect("faults");
        g.inject(&mut sample, fault);
        sample.fault = Some(fault);
    }
    sample
}

/// Convenience for `generate` with a manifest-only result.
pub fn gen_manifest(cfg: &GenConfig) -> Manifest {
    generate(cfg).manifest
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Ty {
    Int,
    Str,
    Bool,
    /// Array of integers of the given length.
    Arr(usize),
    /// Hash from the given string keys to integers.
    Hash(Vec<String>),
}

/// A readable variable, in the syntactic form that reaches it.
#[derive(Clone, Debug)]
struct Readable {
    expr: ExprKind,
    ty: Ty,
}

/// A resource attribute that may be read through a reference.
#[derive(Clone, Debug)]
struct Declared {
    type_name: &'static str,
    title: String,
    attr: String,
    ty: Ty,
}

#[derive(Clone, Debug, Default)]
struct Env {
    vars: Vec<Readable>,
    refs: Vec<Declared>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Where {
    Top,
    Node,
    Class(usize),
    Define(usize),
}

/// Per-block generation context.
struct Ctx {
    place: Where,
    conditional: bool,
    /// Resource types already used with title `$title` in a define body.
    used_types: BTreeSet<&'static str>,
    /// Defines reachable from instantiations in this define body.
    used_defines: BTreeSet<usize>,
    /// Unconditional assignments of a class body, for its subclasses.
    exports: Vec<Readable>,
}

struct ClassInfo {
    name: String,
    parent: Option<usize>,
    /// Declared only once, by a resource-like declaration at top level.
    resource_like: bool,
    params: Vec<(String, Ty, bool)>,
    exports: Vec<Readable>,
}

struct DefineInfo {
    name: String,
    params: Vec<(String, Ty, bool)>,
    types: &'static [&'static str],
    /// This define and every define its body may instantiate.
    closure: BTreeSet<usize>,
}

const BUILTIN: &[&str] = &["file", "package", "service", "user", "exec", "group", "host", "notify"];
const DEFINE_TYPES: &[&[&str]] = &[&["file", "package"], &["service", "user"], &["exec", "group"]];
const ATTRS: &[&str] = &["owner", "mode", "ensure", "path", "content", "source"];
const WORDS: &[&str] = &["Debian", "RedHat", "installed", "alice", "it's", "a\\b", "tab\there", "line\nbreak", ""];

struct Gen {
    rng: ChaCha8Rng,
    cfg: GenConfig,
    fresh: u32,
    classes: Vec<ClassInfo>,
    defines: Vec<DefineInfo>,
    declared_once: BTreeSet<usize>,
}

fn e(kind: ExprKind) -> Expr {
    Expr::new(kind, Pos::default())
}

fn s(kind: StmtKind) -> Stmt {
    Stmt::new(kind, Pos::default())
}

fn item(stmt: Stmt) -> Manifest {
    Manifest::new(ManifestKind::Stmt(stmt), Pos::default())
}

fn var_of(r: &Readable) -> Expr {
    e(r.expr.clone())
}

impl Gen {
    fn fresh(&mut self, prefix: &str) -> String {
        self.fresh += 1;
        format!("{prefix}{}", self.fresh)
    }

    fn chance(&mut self, p: f64) -> bool {
        self.rng.gen_bool(p)
    }

    fn pick<'a, T>(&mut self, xs: &'a [T]) -> Option<&'a T> {
        xs.choose(&mut self.rng)
    }

    fn weighted(&mut self, options: &[(u32, u8)]) -> u8 {
        let total: u32 = options.iter().map(|o| o.0).sum();
        if total == 0 {
            return options[0].1;
        }
        let mut x = self.rng.gen_range(0..total);
        for &(w, tag) in options {
            if x < w {
                return tag;
            }
            x -= w;
        }
        options[options.len() - 1].1
    }

    fn ty(&mut self) -> Ty {
        match self.rng.gen_range(0..9) {
            0..=2 => Ty::Int,
            3..=4 => Ty::Str,
            5..=6 => Ty::Bool,
            7 => Ty::Arr(self.rng.gen_range(1..4)),
            _ => {
                let n = self.rng.gen_range(1..3);
                Ty::Hash((0..n).map(|i| format!("k{i}")).collect())
            }
        }
    }

    fn word(&mut self) -> String {
        self.pick(WORDS).copied().unwrap_or("x").to_string()
    }

    fn literal(&mut self, ty: &Ty) -> Expr {
        match ty {
            Ty::Int => e(ExprKind::Int(self.rng.gen_range(-50..100))),
            Ty::Str => e(ExprKind::Str(self.word())),
            Ty::Bool => e(ExprKind::Bool(self.rng.gen())),
            Ty::Arr(n) => e(ExprKind::Array((0..*n).map(|_| self.literal(&Ty::Int)).collect())),
            Ty::Hash(keys) => e(ExprKind::Hash(
                keys.iter()
                    .map(|k| (Key::Str(k.clone()), self.literal(&Ty::Int)))
                    .collect(),
            )),
        }
    }

    fn value_of(&mut self, ty: &Ty) -> Value {
        self.literal(ty).to_value().expect("literal")
    }

    fn expr(&mut self, ty: &Ty, depth: u32, env: &Env) -> Expr {
        let w = self.cfg.weights;
        let vars: Vec<&Readable> = env.vars.iter().filter(|r| r.ty == *ty).collect();
        let refs: Vec<&Declared> = env.refs.iter().filter(|r| r.ty == *ty).collect();
        let deep = depth > 0;
        let choice = self.weighted(&[
            (w.literal, 0),
            (if vars.is_empty() { 0 } else { w.variable }, 1),
            (if deep { w.operator } else { 0 }, 2),
            (if deep && matches!(ty, Ty::Int | Ty::Str) { w.selector } else { 0 }, 3),
            (if deep && *ty == Ty::Int { w.index } else { 0 }, 4),
            (if refs.is_empty() { 0 } else { w.reference }, 5),
        ]);
        match choice {
            1 => {
                let r = *self.pick(&vars).expect("variables");
                var_of(r)
            }
            2 => self.operator(ty, depth, env),
            3 => self.selector(ty, depth, env),
            4 => self.index(depth, env),
            5 => {
                let r = (*self.pick(&refs).expect("references")).clone();
                e(ExprKind::Index {
                    target: Box::new(e(ExprKind::ResourceRef {
                        type_name: r.type_name.to_string(),
                        title: Box::new(e(ExprKind::Str(r.title))),
                    })),
                    index: Box::new(e(ExprKind::Str(r.attr))),
                })
            }
            _ => self.literal(ty),
        }
    }

    fn operator(&mut self, ty: &Ty, depth: u32, env: &Env) -> Expr {
        let d = depth - 1;
        match ty {
            Ty::Int => {
                let op = *self
                    .pick(&[BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::Div, BinOp::Rem])
                    .expect("ops");
                let lhs = self.expr(&Ty::Int, d, env);
                let rhs = match op {
                    BinOp::Mul => e(ExprKind::Int(self.rng.gen_range(-9..10))),
                    BinOp::Div | BinOp::Rem => {
                        let n = self.rng.gen_range(1..10);
                        e(ExprKind::Int(if self.rng.gen() { n } else { -n }))
                    }
                    _ => self.expr(&Ty::Int, d, env),
                };
                Expr::binary(op, lhs, rhs)
            }
            Ty::Bool => match self.rng.gen_range(0..4) {
                0 => {
                    let op = *self
                        .pick(&[BinOp::Lt, BinOp::Gt, BinOp::Le, BinOp::Ge, BinOp::Eq, BinOp::Ne])
                        .expect("ops");
                    Expr::binary(op, self.expr(&Ty::Int, d, env), self.expr(&Ty::Int, d, env))
                }
                1 => {
                    let op = if self.rng.gen() { BinOp::Eq } else { BinOp::Ne };
                    let t = self.ty();
                    Expr::binary(op, self.expr(&t, d, env), self.expr(&t, d, env))
                }
                2 => e(ExprKind::Not(Box::new(self.expr(&Ty::Bool, d, env)))),
                _ => {
                    let op = if self.rng.gen() { BinOp::And } else { BinOp::Or };
                    Expr::binary(op, self.expr(&Ty::Bool, d, env), self.expr(&Ty::Bool, d, env))
                }
            },
            Ty::Arr(n) => e(ExprKind::Array((0..*n).map(|_| self.expr(&Ty::Int, d, env)).collect())),
            Ty::Hash(keys) => e(ExprKind::Hash(
                keys.iter()
                    .map(|k| (Key::Str(k.clone()), self.expr(&Ty::Int, d, env)))
                    .collect(),
            )),
            Ty::Str => self.literal(ty),
        }
    }

    fn selector(&mut self, ty: &Ty, depth: u32, env: &Env) -> Expr {
        let d = depth - 1;
        let scrutinee_ty = if self.rng.gen() { Ty::Int } else { Ty::Str };
        let scrutinee = self.expr(&scrutinee_ty, d, env);
        let mut arms = Vec::new();
        for _ in 0..self.rng.gen_range(0..3) {
            let case = Case::Expr(self.literal(&scrutinee_ty));
            arms.push(SelectorArm {
                case,
                value: self.expr(ty, d, env),
            });
        }
        arms.push(SelectorArm {
            case: Case::Default,
            value: self.expr(ty, d, env),
        });
        e(ExprKind::Selector {
            scrutinee: Box::new(scrutinee),
            arms,
        })
    }

    fn index(&mut self, depth: u32, env: &Env) -> Expr {
        let d = depth - 1;
        let collections: Vec<&Readable> = env
            .vars
            .iter()
            .filter(|r| matches!(r.ty, Ty::Arr(_) | Ty::Hash(_)))
            .collect();
        let target_ty = match self.pick(&collections) {
            Some(r) if self.rng.gen() => {
                let r = (*r).clone();
                return match &r.ty {
                    Ty::Arr(n) => {
                        let i = self.rng.gen_range(0..*n as i64);
                        index_of(var_of(&r), e(ExprKind::Int(i)))
                    }
                    Ty::Hash(keys) => {
                        let k = self.pick(keys).expect("keys").clone();
                        index_of(var_of(&r), e(ExprKind::Str(k)))
                    }
                    _ => unreachable!(),
                };
            }
            _ => Ty::Arr(self.rng.gen_range(1..4)),
        };
        let Ty::Arr(n) = target_ty else { unreachable!() };
        let target = self.operator(&Ty::Arr(n), depth, env);
        let i = self.rng.gen_range(0..n as i64);
        let _ = d;
        index_of(target, e(ExprKind::Int(i)))
    }

    fn attrs(&mut self, env: &Env, depth: u32) -> (Vec<Attr>, Vec<(String, Ty)>) {
        let mut names: Vec<&str> = ATTRS.to_vec();
        names.shuffle(&mut self.rng);
        let n = self.rng.gen_range(0..4);
        let mut attrs = Vec::new();
        let mut typed = Vec::new();
        for name in names.into_iter().take(n) {
            let ty = self.ty();
            attrs.push(Attr::new(name, self.expr(&ty, depth, env)));
            typed.push((name.to_string(), ty));
        }
        (attrs, typed)
    }

    fn args(&mut self, params: &[(String, Ty, bool)], env: &Env) -> Vec<Attr> {
        let depth = self.cfg.max_depth.min(2);
        let mut out = Vec::new();
        for (name, ty, has_default) in params {
            if !has_default || self.chance(0.5) {
                out.push(Attr::new(name.clone(), self.expr(ty, depth, env)));
            }
        }
        out
    }

    fn params(&mut self, allow_required: bool, env: &Env) -> (Vec<Param>, Vec<(String, Ty, bool)>) {
        let mut params = Vec::new();
        let mut typed = Vec::new();
        for _ in 0..self.rng.gen_range(0..3) {
            let name = self.fresh("p");
            let ty = self.ty();
            let required = allow_required && self.chance(0.4);
            let default = if required {
                None
            } else {
                Some(self.expr(&ty, 1, env))
            };
            params.push(Param {
                name: name.clone(),
                default,
            });
            typed.push((name, ty, !required));
        }
        (params, typed)
    }

    fn block(&mut self, ctx: &mut Ctx, env: &mut Env) -> Stmt {
        let n = self.rng.gen_range(0..=self.cfg.max_stmts);
        let stmts: Vec<Stmt> = (0..n).map(|_| self.stmt(ctx, env)).collect();
        Stmt::sequence(stmts)
    }

    fn stmt(&mut self, ctx: &mut Ctx, env: &mut Env) -> Stmt {
        let w = self.cfg.weights;
        let depth = self.cfg.max_depth;
        let choice = self.weighted(&[
            (w.assign, 0),
            (w.resource, 1),
            (w.define_instance, 2),
            (w.include, 3),
            (w.conditional, 4),
            (w.case, 5),
            (w.expr_stmt, 6),
        ]);
        match choice {
            1 => {
                if let Some(stmt) = self.resource(ctx, env) {
                    return stmt;
                }
            }
            2 => {
                if let Some(stmt) = self.define_instance(ctx, env) {
                    return stmt;
                }
            }
            3 => {
                if let Some(stmt) = self.declare_class(ctx, env) {
                    return stmt;
                }
            }
            4 => {
                let cond = self.expr(&Ty::Bool, depth, env);
                let was = ctx.conditional;
                ctx.conditional = true;
                let then = self.block(ctx, &mut env.clone());
                let kind = if self.chance(0.3) {
                    StmtKind::Unless {
                        cond,
                        body: Box::new(then),
                    }
                } else {
                    let otherwise = if self.chance(0.1) {
                        s(StmtKind::Fail(e(ExprKind::Str("unreachable".into()))))
                    } else {
                        self.block(ctx, &mut env.clone())
                    };
                    let cond = if matches!(otherwise.kind, StmtKind::Fail(_)) {
                        e(ExprKind::Bool(true))
                    } else {
                        cond
                    };
                    StmtKind::If {
                        cond,
                        then: Box::new(then),
                        otherwise: Box::new(otherwise),
                    }
                };
                ctx.conditional = was;
                return s(kind);
            }
            5 => {
                let ty = if self.rng.gen() { Ty::Int } else { Ty::Str };
                let scrutinee = self.expr(&ty, depth, env);
                let was = ctx.conditional;
                ctx.conditional = true;
                let mut arms = Vec::new();
                for _ in 0..self.rng.gen_range(0..3) {
                    let case = Case::Expr(self.literal(&ty));
                    let body = self.block(ctx, &mut env.clone());
                    arms.push(CaseArm { case, body });
                }
                if self.chance(0.7) {
                    let body = self.block(ctx, &mut env.clone());
                    arms.push(CaseArm {
                        case: Case::Default,
                        body,
                    });
                }
                ctx.conditional = was;
                return s(StmtKind::Case { scrutinee, arms });
            }
            6 => {
                let ty = self.ty();
                return s(StmtKind::Expr(self.expr(&ty, depth, env)));
            }
            _ => {}
        }
        self.assign(ctx, env)
    }

    fn assign(&mut self, ctx: &mut Ctx, env: &mut Env) -> Stmt {
        let name = self.fresh("v");
        let ty = self.ty();
        let value = self.expr(&ty, self.cfg.max_depth, env);
        let readable = Readable {
            expr: ExprKind::Var(name.clone()),
            ty: ty.clone(),
        };
        if !ctx.conditional {
            if let Where::Class(i) = ctx.place {
                let class = ClassName::new(self.classes[i].name.clone());
                ctx.exports.push(Readable {
                    expr: ExprKind::ClassVar {
                        class,
                        name: name.clone(),
                    },
                    ty: ty.clone(),
                });
                ctx.exports.push(readable.clone());
            }
        }
        env.vars.push(readable);
        Stmt::assign(name, value)
    }

    fn resource(&mut self, ctx: &mut Ctx, env: &mut Env) -> Option<Stmt> {
        let depth = self.cfg.max_depth.min(2);
        let (type_name, title) = match ctx.place {
            Where::Define(k) => {
                let available: Vec<&'static str> = self.defines[k]
                    .types
                    .iter()
                    .copied()
                    .filter(|t| !ctx.used_types.contains(t))
                    .collect();
                let t = *self.pick(&available)?;
                ctx.used_types.insert(t);
                (t, e(ExprKind::Var("title".into())))
            }
            _ => {
                let t = *self.pick(BUILTIN).expect("types");
                (t, e(ExprKind::Str(self.fresh("r"))))
            }
        };
        let (attrs, typed) = self.attrs(env, depth);
        if !ctx.conditional && matches!(ctx.place, Where::Top | Where::Node) {
            if let ExprKind::Str(w) = &title.kind {
                for (attr, ty) in typed {
                    env.refs.push(Declared {
                        type_name,
                        title: w.clone(),
                        attr,
                        ty,
                    });
                }
            }
        }
        Some(s(StmtKind::Resource {
            head: type_name.to_string(),
            title,
            attrs,
        }))
    }

    fn define_instance(&mut self, ctx: &mut Ctx, env: &mut Env) -> Option<Stmt> {
        let candidates: Vec<usize> = match ctx.place {
            Where::Define(k) => (0..k)
                .filter(|j| self.defines[*j].closure.is_disjoint(&ctx.used_defines))
                .collect(),
            _ => (0..self.defines.len()).collect(),
        };
        let j = *self.pick(&candidates)?;
        let title = match ctx.place {
            Where::Define(_) => {
                let closure = self.defines[j].closure.clone();
                ctx.used_defines.extend(closure);
                e(ExprKind::Var("title".into()))
            }
            _ => e(ExprKind::Str(self.fresh("i"))),
        };
        let params = self.defines[j].params.clone();
        let attrs = self.args(&params, env);
        Some(s(StmtKind::Resource {
            head: self.defines[j].name.clone(),
            title,
            attrs,
        }))
    }

    fn declare_class(&mut self, ctx: &mut Ctx, env: &mut Env) -> Option<Stmt> {
        let once: Vec<usize> = (0..self.classes.len())
            .filter(|i| self.classes[*i].resource_like && !self.declared_once.contains(i))
            .collect();
        if ctx.place == Where::Top && !ctx.conditional && !once.is_empty() && self.chance(0.5) {
            let i = *self.pick(&once).expect("classes");
            self.declared_once.insert(i);
            let params = self.classes[i].params.clone();
            let attrs = self.args(&params, env);
            let class = ClassName::new(self.classes[i].name.clone());
            self.export_after_declaration(ctx, env, i);
            return Some(s(StmtKind::ClassDecl { class, attrs }));
        }
        let includable: Vec<usize> = (0..self.classes.len())
            .filter(|i| !self.classes[*i].resource_like)
            .collect();
        let i = *self.pick(&includable)?;
        self.export_after_declaration(ctx, env, i);
        Some(Stmt::include(self.classes[i].name.as_str()))
    }

    /// After an unconditional top-level declaration, the qualified
    /// variables of the class and its ancestors are readable.
    fn export_after_declaration(&mut self, ctx: &Ctx, env: &mut Env, class: usize) {
        if ctx.conditional || !matches!(ctx.place, Where::Top | Where::Node) {
            return;
        }
        let mut cur = Some(class);
        while let Some(i) = cur {
            let qualified = self.classes[i]
                .exports
                .iter()
                .filter(|r| matches!(r.expr, ExprKind::ClassVar { .. }))
                .cloned();
            env.vars.extend(qualified);
            cur = self.classes[i].parent;
        }
    }

    fn facts(&mut self) -> Vec<(String, Value, Ty)> {
        let mut facts = vec![(
            "osfamily".to_string(),
            Value::str(if self.rng.gen() { "Debian" } else { "RedHat" }),
            Ty::Str,
        )];
        for _ in 0..self.rng.gen_range(0..4) {
            let name = self.fresh("f");
            let ty = self.ty();
            let v = self.value_of(&ty);
            facts.push((name, v, ty));
        }
        facts
    }

    fn sample(&mut self) -> Sample {
        let facts = self.facts();
        let mut base = Env::default();
        for (name, _, ty) in &facts {
            base.vars.push(Readable {
                expr: ExprKind::Var(name.clone()),
                ty: ty.clone(),
            });
            base.vars.push(Readable {
                expr: ExprKind::TopVar(name.clone()),
                ty: ty.clone(),
            });
        }
        let mut items = Vec::new();

        let defines = self.rng.gen_range(0..=self.cfg.max_defines.min(DEFINE_TYPES.len()));
        for (k, types) in DEFINE_TYPES.iter().enumerate().take(defines) {
            let name = format!("d{k}");
            let mut env = base.clone();
            let (params, typed) = self.params(true, &env);
            for (p, ty, _) in &typed {
                env.vars.push(Readable {
                    expr: ExprKind::Var(p.clone()),
                    ty: ty.clone(),
                });
            }
            env.vars.push(Readable {
                expr: ExprKind::Var("title".into()),
                ty: Ty::Str,
            });
            self.defines.push(DefineInfo {
                name: name.clone(),
                params: typed,
                types,
                closure: BTreeSet::from([k]),
            });
            let mut ctx = Ctx {
                place: Where::Define(k),
                conditional: false,
                used_types: BTreeSet::new(),
                used_defines: BTreeSet::new(),
                exports: Vec::new(),
            };
            let body = self.block(&mut ctx, &mut env);
            self.defines[k].closure.extend(ctx.used_defines);
            items.push(Manifest::new(ManifestKind::Define { name, params, body }, Pos::default()));
        }

        for i in 0..self.rng.gen_range(0..=self.cfg.max_classes) {
            let name = if self.chance(0.2) {
                format!("ns::c{i}")
            } else {
                format!("c{i}")
            };
            let resource_like = self.chance(0.25);
            let parent = (0..i)
                .filter(|j| !self.classes[*j].resource_like && self.chain_len(*j) < self.cfg.max_inheritance)
                .collect::<Vec<_>>();
            let parent = if self.chance(0.4) {
                self.pick(&parent).copied()
            } else {
                None
            };
            let mut env = base.clone();
            if let Some(p) = parent {
                let mut cur = Some(p);
                while let Some(j) = cur {
                    env.vars.extend(self.classes[j].exports.iter().cloned());
                    cur = self.classes[j].parent;
                }
            }
            let parameterised = self.chance(0.5);
            let (params, typed) = if parameterised {
                self.params(resource_like, &base)
            } else {
                (Vec::new(), Vec::new())
            };
            self.classes.push(ClassInfo {
                name: name.clone(),
                parent,
                resource_like,
                params: typed.clone(),
                exports: Vec::new(),
            });
            let mut ctx = Ctx {
                place: Where::Class(i),
                conditional: false,
                used_types: BTreeSet::new(),
                used_defines: BTreeSet::new(),
                exports: Vec::new(),
            };
            for (p, ty, _) in &typed {
                let r = Readable {
                    expr: ExprKind::Var(p.clone()),
                    ty: ty.clone(),
                };
                env.vars.push(r.clone());
                ctx.exports.push(r);
                ctx.exports.push(Readable {
                    expr: ExprKind::ClassVar {
                        class: ClassName::new(name.clone()),
                        name: p.clone(),
                    },
                    ty: ty.clone(),
                });
            }
            let body = self.block(&mut ctx, &mut env);
            self.classes[i].exports = ctx.exports;
            items.push(Manifest::new(
                ManifestKind::Class {
                    name: ClassName::new(name),
                    params: if parameterised { Some(params) } else { None },
                    parent: parent.map(|p| ClassName::new(self.classes[p].name.clone())),
                    body,
                },
                Pos::default(),
            ));
        }

        let mut top_env = base.clone();
        let mut top = Ctx {
            place: Where::Top,
            conditional: false,
            used_types: BTreeSet::new(),
            used_defines: BTreeSet::new(),
            exports: Vec::new(),
        };
        let mut nodes = 0;
        for _ in 0..self.rng.gen_range(1..=2 * self.cfg.max_stmts) {
            if nodes < 2 && self.chance(0.2) {
                nodes += 1;
                let spec = match self.rng.gen_range(0..4) {
                    0 => NodeSpec::Default,
                    1 => NodeSpec::List(vec!["n1".into(), "n0".into()]),
                    2 => NodeSpec::Name("elsewhere".into()),
                    _ => NodeSpec::Name("n0".into()),
                };
                let mut ctx = Ctx {
                    place: Where::Node,
                    conditional: false,
                    used_types: BTreeSet::new(),
                    used_defines: BTreeSet::new(),
                    exports: Vec::new(),
                };
                let mut env = top_env.clone();
                // Whether the block runs depends on the node name, so nothing
                // it binds is visible afterwards.
                let body = self.block(&mut ctx, &mut env);
                items.push(Manifest::new(ManifestKind::Node { spec, body }, Pos::default()));
            } else {
                let stmt = self.stmt(&mut top, &mut top_env);
                items.push(item(stmt));
            }
        }

        Sample {
            manifest: Manifest::sequence(items),
            node: "n0".into(),
            facts: facts.into_iter().map(|(n, v, _)| (n, v)).collect(),
            fault: None,
        }
    }

    fn chain_len(&self, class: usize) -> usize {
        let mut n = 1;
        let mut cur = self.classes[class].parent;
        while let Some(p) = cur {
            n += 1;
            cur = self.classes[p].parent;
        }
        n
    }

    /// Adds `fault` to a sample: definitions go first, statements at a
    /// random top-level position after them.
    fn inject(&mut self, sample: &mut Sample, fault: Fault) {
        let tag = self.fresh("z");
        let int = |i: i64| e(ExprKind::Int(i));
        let str_ = |w: &str| e(ExprKind::Str(w.to_string()));
        let class_def = |name: &str, params: Option<Vec<Param>>, parent: Option<&str>| {
            Manifest::new(
                ManifestKind::Class {
                    name: ClassName::new(name),
                    params,
                    parent: parent.map(ClassName::new),
                    body: Stmt::skip(),
                },
                Pos::default(),
            )
        };
        let assign = |name: &str, value: Expr| item(Stmt::assign(name, value));
        let (defs, stmts): (Vec<Manifest>, Vec<Manifest>) = match fault {
            Fault::UnboundVariable => (vec![], vec![assign(&tag, e(ExprKind::Var(format!("{tag}_unbound"))))]),
            Fault::Reassignment => (vec![], vec![assign(&tag, int(1)), assign(&tag, int(2))]),
            Fault::RepeatedResource => {
                let decl = || {
                    item(s(StmtKind::Resource {
                        head: "notify".into(),
                        title: str_(&tag),
                        attrs: vec![],
                    }))
                };
                (vec![], vec![decl(), decl()])
            }
            Fault::MissingClass => (vec![], vec![item(Stmt::include(format!("{tag}_missing").as_str()))]),
            Fault::MissingResourceType => (
                vec![],
                vec![item(s(StmtKind::Resource {
                    head: format!("{tag}_missing"),
                    title: str_("x"),
                    attrs: vec![],
                }))],
            ),
            Fault::ReferenceToDefinedType => {
                let def = Manifest::new(
                    ManifestKind::Define {
                        name: tag.clone(),
                        params: vec![],
                        body: Stmt::skip(),
                    },
                    Pos::default(),
                );
                let r = e(ExprKind::ResourceRef {
                    type_name: tag.clone(),
                    title: Box::new(str_("x")),
                });
                (vec![def], vec![assign(&format!("{tag}_ref"), r)])
            }
            Fault::RepeatedDefinition => (vec![class_def(&tag, None, None), class_def(&tag, None, None)], vec![]),
            Fault::ClassRedeclared => (
                vec![class_def(&tag, None, None)],
                vec![
                    item(Stmt::include(tag.as_str())),
                    item(s(StmtKind::ClassDecl {
                        class: ClassName::new(tag.clone()),
                        attrs: vec![],
                    })),
                ],
            ),
            Fault::MissingArgument => (
                vec![class_def(&tag, Some(vec![Param::required("p")]), None)],
                vec![item(Stmt::include(tag.as_str()))],
            ),
            Fault::ExtraArgument => {
                let def = Manifest::new(
                    ManifestKind::Define {
                        name: tag.clone(),
                        params: vec![Param::with_default("p", int(1))],
                        body: Stmt::skip(),
                    },
                    Pos::default(),
                );
                let decl = item(s(StmtKind::Resource {
                    head: tag.clone(),
                    title: str_("x"),
                    attrs: vec![Attr::new("q", int(2))],
                }));
                (vec![def], vec![decl])
            }
            Fault::IllTyped => {
                let bad = if self.rng.gen() {
                    assign(&tag, Expr::binary(BinOp::Add, e(ExprKind::Bool(true)), int(1)))
                } else {
                    item(s(StmtKind::If {
                        cond: int(1),
                        then: Box::new(Stmt::skip()),
                        otherwise: Box::new(Stmt::skip()),
                    }))
                };
                (vec![], vec![bad])
            }
            Fault::ZeroDivisor => (vec![], vec![assign(&tag, Expr::binary(BinOp::Div, int(1), int(0)))]),
            Fault::NoSelectorMatch => {
                let sel = e(ExprKind::Selector {
                    scrutinee: Box::new(int(1)),
                    arms: vec![SelectorArm {
                        case: Case::Expr(int(2)),
                        value: int(3),
                    }],
                });
                (vec![], vec![assign(&tag, sel)])
            }
            Fault::OutOfBounds => (
                vec![],
                vec![assign(&tag, index_of(e(ExprKind::Array(vec![int(1)])), int(5)))],
            ),
            Fault::InheritanceCycle => {
                let other = format!("{tag}_b");
                (
                    vec![class_def(&tag, None, Some(&other)), class_def(&other, None, Some(&tag))],
                    vec![item(Stmt::include(tag.as_str()))],
                )
            }
            Fault::ExplicitFailure => (vec![], vec![item(s(StmtKind::Fail(str_("injected failure"))))]),
        };
        let mut items: Vec<Manifest> = Vec::new();
        let old = core::mem::take(&mut sample.manifest);
        let mut rest: Vec<Manifest> = Vec::new();
        flatten(old, &mut rest);
        let first_stmt = rest
            .iter()
            .position(|m| !matches!(m.kind, ManifestKind::Define { .. } | ManifestKind::Class { .. }))
            .unwrap_or(rest.len());
        let at = self.rng.gen_range(first_stmt..=rest.len());
        let tail = rest.split_off(at);
        items.extend(defs);
        items.extend(rest);
        items.extend(stmts);
        items.extend(tail);
        sample.manifest = Manifest::sequence(items);
    }
}

fn index_of(target: Expr, index: Expr) -> Expr {
    e(ExprKind::Index {
        target: Box::new(target),
        index: Box::new(index),
    })
}

/// Moves the items of a right-associated manifest sequence into `out`.
fn flatten(m: Manifest, out: &mut Vec<Manifest>) {
    let mut cur = m;
    loop {
        match cur.kind {
            ManifestKind::Seq(a, b) => {
                out.push(*a);
                cur = *b;
            }
            _ => {
                if !cur.is_skip() {
                    out.push(cur);
                }
                return;
            }
        }
    }
}
