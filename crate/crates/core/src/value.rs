//! Fully evaluated data: values, resource values and catalogs.

use alloc::boxed::Box;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use crate::syntax::{Expr, ExprKind, Key, Pos};

/// A value. Equality is structural and type-sensitive: `1 != "1"`, string
/// comparison is case-sensitive and hashes compare as ordered entry lists.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Value {
    Int(i64),
    Str(String),
    Bool(bool),
    Hash(Vec<(Key, Value)>),
    Array(Vec<Value>),
    /// Resource reference `t[v]`.
    Ref { type_name: String, title: Box<Value> },
}

impl Value {
    pub fn str(s: impl Into<String>) -> Value {
        Value::Str(s.into())
    }

    /// Embeds the value back into expression syntax.
    pub fn to_expr(&self, pos: Pos) -> Expr {
        let kind = match self {
            Value::Int(i) => ExprKind::Int(*i),
            Value::Str(s) => ExprKind::Str(s.clone()),
            Value::Bool(b) => ExprKind::Bool(*b),
            Value::Array(items) => ExprKind::Array(items.iter().map(|v| v.to_expr(pos)).collect()),
            Value::Hash(entries) => ExprKind::Hash(
                entries
                    .iter()
                    .map(|(k, v)| (k.clone(), v.to_expr(pos)))
                    .collect(),
            ),
            Value::Ref { type_name, title } => ExprKind::ResourceRef {
                type_name: type_name.clone(),
                title: Box::new(title.to_expr(pos)),
            },
        };
        Expr::new(kind, pos)
    }

    /// The scalar hash key this value denotes, if it is an integer or string.
    pub fn as_key(&self) -> Option<Key> {
        match self {
            Value::Int(i) => Some(Key::Int(*i)),
            Value::Str(s) => Some(Key::Str(s.clone())),
            _ => None,
        }
    }

    pub fn type_name(&self) -> &'static str {
        match self {
            Value::Int(_) => "integer",
            Value::Str(_) => "string",
            Value::Bool(_) => "boolean",
            Value::Hash(_) => "hash",
            Value::Array(_) => "array",
            Value::Ref { .. } => "resource reference",
        }
    }
}

impl Expr {
    /// The value denoted by an expression in normal form.
    pub fn to_value(&self) -> Option<Value> {
        Some(match &self.kind {
            ExprKind::Int(i) => Value::Int(*i),
            ExprKind::Str(s) => Value::Str(s.clone()),
            ExprKind::Bool(b) => Value::Bool(*b),
            ExprKind::Array(items) => {
                Value::Array(items.iter().map(Expr::to_value).collect::<Option<_>>()?)
            }
            ExprKind::Hash(entries) => Value::Hash(
                entries
                    .iter()
                    .map(|(k, e)| Some((k.clone(), e.to_value()?)))
                    .collect::<Option<_>>()?,
            ),
            ExprKind::ResourceRef { type_name, title } => Value::Ref {
                type_name: type_name.clone(),
                title: Box::new(title.to_value()?),
            },
            _ => return None,
        })
    }
}

impl From<i64> for Value {
    fn from(i: i64) -> Value {
        Value::Int(i)
    }
}

impl From<&str> for Value {
    fn from(s: &str) -> Value {
        Value::Str(s.into())
    }
}

impl From<bool> for Value {
    fn from(b: bool) -> Value {
        Value::Bool(b)
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.to_expr(Pos::default()), f)
    }
}

/// First value bound to `key` in an association list, scanning left to
/// right. Hash values may contain repeated keys; later ones are shadowed.
pub fn lookup<'a, K, Q>(key: &Q, entries: &'a [(K, Value)]) -> Option<&'a Value>
where
    K: PartialEq<Q>,
    Q: ?Sized,
{
    entries.iter().find(|(k, _)| k == key).map(|(_, v)| v)
}

/// First value bound to a scalar key in a hash value.
pub fn hash_lookup<'a>(key: &Key, hash: &'a [(Key, Value)]) -> Option<&'a Value> {
    lookup(key, hash)
}

/// A resource in the catalog: `t { w : attrs }`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ResourceValue {
    pub type_name: String,
    pub title: String,
    /// Attributes in declaration order; names are distinct.
    pub attrs: Vec<(String, Value)>,
}

impl ResourceValue {
    pub fn new(type_name: impl Into<String>, title: impl Into<String>) -> ResourceValue {
        ResourceValue {
            type_name: type_name.into(),
            title: title.into(),
            attrs: Vec::new(),
        }
    }

    pub fn with(mut self, name: impl Into<String>, value: impl Into<Value>) -> ResourceValue {
        self.attrs.push((name.into(), value.into()));
        self
    }

    pub fn attr(&self, name: &str) -> Option<&Value> {
        self.attrs
            .iter()
            .find(|(k, _)| k == name)
            .map(|(_, v)| v)
    }

    pub fn same_identity(&self, other: &ResourceValue) -> bool {
        self.type_name == other.type_name && self.title == other.title
    }
}

impl fmt::Display for ResourceValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {{ ", self.type_name)?;
        crate::print::write_string_literal(f, &self.title)?;
        f.write_str(":")?;
        for (i, (k, v)) in self.attrs.iter().enumerate() {
            let sep = if i == 0 { " " } else { ", " };
            write!(f, "{sep}{k} => {v}")?;
        }
        f.write_str(" }")
    }
}

/// Raised when a resource with an existing (type, title) is appended.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DuplicateResource {
    pub type_name: String,
    pub title: String,
    /// Index of the resource already in the catalog.
    pub existing: usize,
}

impl fmt::Display for DuplicateResource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "duplicate declaration of {}['{}'] (already declared as resource #{})",
            self.type_name,
            self.title,
            self.existing + 1
        )
    }
}

/// Ordered, append-only sequence of resources, unique per (type, title).
///
/// Cloning is cheap; the resource list is shared until the next append.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Catalog(Arc<Vec<ResourceValue>>);

impl Catalog {
    pub fn new() -> Catalog {
        Catalog::default()
    }

    pub fn resources(&self) -> &[ResourceValue] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn find(&self, type_name: &str, title: &str) -> Option<(usize, &ResourceValue)> {
        self.0
            .iter()
            .enumerate()
            .find(|(_, r)| r.type_name == type_name && r.title == title)
    }

    /// Value of attribute `attr` of resource `type_name[title]`, if both exist.
    pub fn lookup(&self, type_name: &str, title: &str, attr: &str) -> Option<&Value> {
        self.find(type_name, title).and_then(|(_, r)| r.attr(attr))
    }

    pub fn append(&mut self, resource: ResourceValue) -> Result<(), DuplicateResource> {
        if let Some((existing, _)) = self.find(&resource.type_name, &resource.title) {
            return Err(DuplicateResource {
                type_name: resource.type_name,
                title: resource.title,
                existing,
            });
        }
        Arc::make_mut(&mut self.0).push(resource);
        Ok(())
    }

    /// Whether `self` is a prefix of `later`, the catalog ordering.
    pub fn is_prefix_of(&self, later: &Catalog) -> bool {
        if Arc::ptr_eq(&self.0, &later.0) {
            return true;
        }
        later.0.len() >= self.0.len() && later.0[..self.0.len()] == self.0[..]
    }

    pub fn ptr_eq(&self, other: &Catalog) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
    }
}

impl FromIterator<ResourceValue> for Catalog {
    fn from_iter<I: IntoIterator<Item = ResourceValue>>(iter: I) -> Catalog {
        Catalog(Arc::new(iter.into_iter().collect()))
    }
}

impl fmt::Display for Catalog {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in self.0.iter() {
            writeln!(f, "{r}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn hash_lookup_returns_first_binding() {
        let h = vec![(Key::from("x"), Value::Int(1)), (Key::from("x"), Value::Int(2))];
        assert_eq!(hash_lookup(&Key::from("x"), &h), Some(&Value::Int(1)));
        assert_eq!(hash_lookup(&Key::from("y"), &[]), None);
        let h = vec![(Key::Int(3), Value::from("a"))];
        assert_eq!(hash_lookup(&Key::Int(3), &h), Some(&Value::from("a")));
        // keys are type-sensitive
        assert_eq!(hash_lookup(&Key::from("3"), &h), None);
    }

    #[test]
    fn catalog_lookup_after_declaration() {
        let mut c = Catalog::new();
        c.append(ResourceValue::new("file", "foo.txt").with("owner", "alice"))
            .unwrap();
        assert_eq!(c.lookup("file", "foo.txt", "owner"), Some(&Value::from("alice")));
        assert_eq!(c.lookup("file", "foo.txt", "mode"), None);
        assert_eq!(Catalog::new().lookup("file", "x", "k"), None);
    }

    /// Brute-force oracle: scan every resource for a (type, title) match,
    /// then scan its attributes.
    fn scan(resources: &[ResourceValue], t: &str, w: &str, k: &str) -> Option<Value> {
        let mut found = None;
        for r in resources {
            if r.type_name == t && r.title == w {
                for (name, v) in &r.attrs {
                    if name == k {
                        found = Some(v.clone());
                        break;
                    }
                }
                break;
            }
        }
        found
    }

    #[test]
    fn catalog_lookup_matches_scan_oracle_on_all_pairs() {
        let resources = vec![
            ResourceValue::new("file", "a").with("k", 1),
            ResourceValue::new("file", "b").with("k", 2),
            ResourceValue::new("package", "a").with("j", 3),
        ];
        let c: Catalog = resources.iter().cloned().collect();
        let types = ["file", "package", "service"];
        let titles = ["a", "b", "c"];
        let keys = ["k", "j", "z"];
        let mut hits = 0;
        for t in types {
            for w in titles {
                for k in keys {
                    let expected = scan(&resources, t, w, k);
                    hits += expected.is_some() as usize;
                    assert_eq!(c.lookup(t, w, k).cloned(), expected, "{t}[{w}][{k}]");
                }
            }
        }
        assert_eq!(hits, 3);
        // mismatched title with a matching type and key
        assert_eq!(c.lookup("package", "b", "j"), None);
    }

    #[test]
    fn append_rejects_duplicate_identity_only() {
        let mut c = Catalog::new();
        c.append(ResourceValue::new("file", "a")).unwrap();
        assert_eq!(c.len(), 1);
        let err = c.append(ResourceValue::new("file", "a")).unwrap_err();
        assert_eq!(err.existing, 0);
        c.append(ResourceValue::new("package", "a")).unwrap();
        assert_eq!(c.len(), 2);
    }

    /// Identity is the (type, title) pair: enumerate every two-element
    /// multiset over 2 types x 2 titles and compare append's verdict to the
    /// pair-equality predicate.
    #[test]
    fn uniqueness_predicate_over_small_multisets() {
        let ids = [("file", "a"), ("file", "b"), ("package", "a"), ("package", "b")];
        for (i, x) in ids.iter().enumerate() {
            for y in &ids[i..] {
                let mut c = Catalog::new();
                c.append(ResourceValue::new(x.0, x.1)).unwrap();
                let ok = c.append(ResourceValue::new(y.0, y.1)).is_ok();
                assert_eq!(ok, x != y, "{x:?} then {y:?}");
            }
        }
    }

    #[test]
    fn prefix_ordering() {
        let mut a = Catalog::new();
        a.append(ResourceValue::new("file", "a")).unwrap();
        let mut b = a.clone();
        b.append(ResourceValue::new("file", "b")).unwrap();
        assert!(a.is_prefix_of(&b));
        assert!(!b.is_prefix_of(&a));
        let other: Catalog = [ResourceValue::new("file", "z")].into_iter().collect();
        assert!(!a.is_prefix_of(&other));
    }

    #[test]
    fn value_expr_round_trip() {
        let v = Value::Hash(vec![
            (Key::Int(1), Value::Array(vec![Value::Bool(true), Value::from("s")])),
            (
                Key::from("r"),
                Value::Ref {
                    type_name: "file".into(),
                    title: Box::new(Value::from("x")),
                },
            ),
        ]);
        let e = v.to_expr(Pos::default());
        assert!(e.is_value());
        assert_eq!(e.to_value(), Some(v));
    }
}
