//! Scopes, variable environments (σ) and definition environments (κ).
//!
//! Both environments are persistent maps behind an [`Arc`]: cloning is a
//! reference-count bump and an update copies the map only if it is shared.
//! The evaluator relies on this to keep every intermediate state of a
//! compilation around for the conformance checks.

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use crate::syntax::{ClassName, Param, Pos, Stmt};
use crate::value::{lookup, Value};

/// Where a variable lives.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Scope {
    /// `::`
    Top,
    /// `::a`
    Class(ClassName),
    /// `::nd`, the scope of the active node block.
    Node,
    /// `def(α)`: frame of a defined resource declared in ambient scope α.
    Def(Box<Scope>),
}

impl Scope {
    pub fn class(name: impl Into<ClassName>) -> Scope {
        Scope::Class(name.into())
    }

    pub fn def(inner: Scope) -> Scope {
        Scope::Def(Box::new(inner))
    }

    pub fn is_def(&self) -> bool {
        matches!(self, Scope::Def(_))
    }

    /// `::`, `::a` and `::nd`; their variables outlive the scope statement.
    pub fn is_persistent(&self) -> bool {
        !self.is_def()
    }
}

impl fmt::Display for Scope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scope::Top => f.write_str("::"),
            Scope::Class(a) => write!(f, "::{a}"),
            Scope::Node => f.write_str("::nd"),
            Scope::Def(inner) => write!(f, "def({inner})"),
        }
    }
}

/// Assignment to a variable that is already bound in the same scope.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DuplicateVariable {
    pub scope: Scope,
    pub name: String,
}

/// Write-once map from (scope, variable) to value.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct VarEnv(Arc<BTreeMap<(Scope, String), Value>>);

impl VarEnv {
    pub fn new() -> VarEnv {
        VarEnv::default()
    }

    pub fn get(&self, scope: &Scope, name: &str) -> Option<&Value> {
        // BTreeMap lookups need an owned key; scopes are small.
        self.0.get(&(scope.clone(), String::from(name)))
    }

    pub fn contains(&self, scope: &Scope, name: &str) -> bool {
        self.get(scope, name).is_some()
    }

    /// `σ[α][x ← v]`, refusing to overwrite an existing binding.
    pub fn update(&mut self, scope: Scope, name: String, value: Value) -> Result<(), DuplicateVariable> {
        if self.contains(&scope, &name) {
            return Err(DuplicateVariable { scope, name });
        }
        Arc::make_mut(&mut self.0).insert((scope, name), value);
        Ok(())
    }

    /// `clear(σ, α)`: unbinds every variable of `scope`.
    pub fn clear(&mut self, scope: &Scope) {
        let doomed: Vec<_> = self
            .0
            .range((scope.clone(), String::new())..)
            .take_while(|((s, _), _)| s == scope)
            .map(|(k, _)| k.clone())
            .collect();
        if doomed.is_empty() {
            return;
        }
        let map = Arc::make_mut(&mut self.0);
        for k in doomed {
            map.remove(&k);
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Scope, &str, &Value)> {
        self.0.iter().map(|((s, x), v)| (s, x.as_str(), v))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn ptr_eq(&self, other: &VarEnv) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
    }
}

/// An entry of the definition environment.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Definition {
    /// A class that has not been declared yet.
    ClassDef {
        parent: Option<ClassName>,
        params: Arc<[Param]>,
        body: Arc<Stmt>,
    },
    /// A declared class, with the parent scope fixed at declaration.
    DeclaredClass(Scope),
    ResourceDef { params: Arc<[Param]>, body: Arc<Stmt> },
}

impl Definition {
    pub fn class(parent: Option<ClassName>, params: Vec<Param>, body: Stmt) -> Definition {
        Definition::ClassDef {
            parent,
            params: params.into(),
            body: Arc::new(body),
        }
    }

    pub fn resource(params: Vec<Param>, body: Stmt) -> Definition {
        Definition::ResourceDef {
            params: params.into(),
            body: Arc::new(body),
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Definition::ClassDef { .. } => "class",
            Definition::DeclaredClass(_) => "declared class",
            Definition::ResourceDef { .. } => "defined resource type",
        }
    }
}

/// Map from class and defined-type names to definitions. Classes and
/// defined types share one namespace.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DefEnv(Arc<BTreeMap<String, Definition>>);

impl DefEnv {
    pub fn new() -> DefEnv {
        DefEnv::default()
    }

    pub fn get(&self, name: &str) -> Option<&Definition> {
        self.0.get(name)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.0.contains_key(name)
    }

    /// Adds a fresh definition. Returns `false`, leaving κ unchanged, if the
    /// name is already taken.
    pub fn define(&mut self, name: impl Into<String>, def: Definition) -> bool {
        let name = name.into();
        if self.contains(&name) {
            return false;
        }
        Arc::make_mut(&mut self.0).insert(name, def);
        true
    }

    /// Marks class `name` as declared with the given parent scope.
    pub fn declare(&mut self, name: &ClassName, parent_scope: Scope) {
        Arc::make_mut(&mut self.0).insert(
            String::from(name.as_str()),
            Definition::DeclaredClass(parent_scope),
        );
    }

    /// Raw write used by fault-injection tests.
    pub fn set(&mut self, name: impl Into<String>, def: Definition) {
        Arc::make_mut(&mut self.0).insert(name.into(), def);
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Definition)> {
        self.0.iter().map(|(k, d)| (k.as_str(), d))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn ptr_eq(&self, other: &DefEnv) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
    }

    /// Parent scope of `scope`, or `None` for `::` and for classes that are
    /// not declared.
    pub fn parent_of(&self, scope: &Scope) -> Option<Scope> {
        match scope {
            Scope::Top => None,
            Scope::Node => Some(Scope::Top),
            Scope::Def(_) => self.base_of(scope),
            Scope::Class(a) => match self.get(a.as_str()) {
                Some(Definition::DeclaredClass(parent)) => Some(parent.clone()),
                _ => None,
            },
        }
    }

    /// Base scope (`::` or `::nd`) of `scope`, or `None` if an undeclared
    /// class is met on the way.
    pub fn base_of(&self, scope: &Scope) -> Option<Scope> {
        let mut cur = scope;
        // Declared classes only point at scopes that existed before them,
        // so the chain is acyclic; the bound guards against corrupted
        // environments handed in by tests.
        let mut hops = 0;
        loop {
            match cur {
                Scope::Top | Scope::Node => return Some(cur.clone()),
                Scope::Def(inner) => cur = inner,
                Scope::Class(a) => match self.get(a.as_str()) {
                    Some(Definition::DeclaredClass(parent)) if hops <= self.len() => {
                        hops += 1;
                        cur = parent;
                    }
                    _ => return None,
                },
            }
        }
    }
}

/// Failure of [`merge`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MergeError {
    /// A parameter without default received no value.
    Missing(String),
    /// An argument names no parameter.
    Unknown(String),
}

/// `merge(ρ, vH)`: one assignment per parameter, taking the argument value
/// if given and the (unevaluated) default otherwise, ending in `skip`.
pub fn merge(params: &[Param], args: &[(String, Value)], pos: Pos) -> Result<Stmt, MergeError> {
    if let Some((name, _)) = args
        .iter()
        .find(|(name, _)| !params.iter().any(|p| &p.name == name))
    {
        return Err(MergeError::Unknown(name.clone()));
    }
    let mut stmts = Vec::with_capacity(params.len() + 1);
    for p in params {
        let value = match (lookup(p.name.as_str(), args), &p.default) {
            (Some(v), _) => v.to_expr(pos),
            (None, Some(default)) => default.clone(),
            (None, None) => return Err(MergeError::Missing(p.name.clone())),
        };
        let mut assign = Stmt::assign(p.name.clone(), value);
        assign.pos = pos;
        stmts.push(assign);
    }
    stmts.push(Stmt::skip());
    Ok(Stmt::sequence(stmts))
}
