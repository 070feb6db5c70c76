//! JSON forms of values, facts and catalogs.
//!
//! A hash whose keys are distinct strings other than `$ref` and `$hash`
//! becomes a JSON object. Any other hash is written as
//! `{"$hash": [[key, value], ...]}` so that integer and repeated keys
//! survive a round trip. Resource references are `{"$ref": {"type", "title"}}`.

use std::collections::BTreeSet;
use std::str::FromStr;

use mupuppet_core::syntax::Key;
use mupuppet_core::{Catalog, ResourceValue, Value};
use serde_json::{json, Map, Number, Value as Json};

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("invalid JSON: {0}")]
    Syntax(#[from] serde_json::Error),
    #[error("{at}: {problem}")]
    Shape { at: String, problem: String },
}

fn shape(at: &str, problem: impl Into<String>) -> FormatError {
    FormatError::Shape {
        at: at.to_string(),
        problem: problem.into(),
    }
}

fn key_to_json(k: &Key) -> Json {
    match k {
        Key::Int(i) => Json::from(*i),
        Key::Str(s) => Json::from(s.as_str()),
    }
}

fn plain_object(entries: &[(Key, Value)]) -> bool {
    let mut seen = BTreeSet::new();
    entries.iter().all(|(k, _)| match k {
        Key::Str(s) => s != "$ref" && s != "$hash" && seen.insert(s.as_str()),
        Key::Int(_) => false,
    })
}

pub fn value_to_json(v: &Value) -> Json {
    match v {
        Value::Int(i) => Json::from(*i),
        Value::Str(s) => Json::from(s.as_str()),
        Value::Bool(b) => Json::from(*b),
        Value::Array(items) => Json::Array(items.iter().map(value_to_json).collect()),
        Value::Hash(entries) if plain_object(entries) => Json::Object(
            entries
                .iter()
                .map(|(k, v)| match k {
                    Key::Str(s) => (s.clone(), value_to_json(v)),
                    Key::Int(_) => unreachable!(),
                })
                .collect(),
        ),
        Value::Hash(entries) => json!({
            "$hash": entries
                .iter()
                .map(|(k, v)| json!([key_to_json(k), value_to_json(v)]))
                .collect::<Vec<_>>()
        }),
        Value::Ref { type_name, title } => json!({
            "$ref": { "type": type_name, "title": value_to_json(title) }
        }),
    }
}

fn int_of(n: &Number, at: &str) -> Result<i64, FormatError> {
    n.as_i64()
        .ok_or_else(|| shape(at, format!("{n} is not a 64-bit integer")))
}

fn key_from_json(j: &Json, at: &str) -> Result<Key, FormatError> {
    match j {
        Json::Number(n) => Ok(Key::Int(int_of(n, at)?)),
        Json::String(s) => Ok(Key::Str(s.clone())),
        _ => Err(shape(at, "hash keys must be integers or strings")),
    }
}

/// Reads a value; `allow_refs` is false for facts.
pub fn value_from_json(j: &Json, at: &str, allow_refs: bool) -> Result<Value, FormatError> {
    Ok(match j {
        Json::Null => return Err(shape(at, "null is not a value")),
        Json::Bool(b) => Value::Bool(*b),
        Json::Number(n) => Value::Int(int_of(n, at)?),
        Json::String(s) => Value::Str(s.clone()),
        Json::Array(items) => Value::Array(
            items
                .iter()
                .enumerate()
                .map(|(i, x)| value_from_json(x, &format!("{at}[{i}]"), allow_refs))
                .collect::<Result<_, _>>()?,
        ),
        Json::Object(map) => match (map.len(), map.get("$ref"), map.get("$hash")) {
            (1, Some(r), _) => {
                if !allow_refs {
                    return Err(shape(at, "resource references are not allowed here"));
                }
                let type_name = r
                    .get("type")
                    .and_then(Json::as_str)
                    .ok_or_else(|| shape(at, "`$ref` needs a string `type`"))?;
                let title = r.get("title").ok_or_else(|| shape(at, "`$ref` needs a `title`"))?;
                Value::Ref {
                    type_name: type_name.to_string(),
                    title: Box::new(value_from_json(title, &format!("{at}.title"), allow_refs)?),
                }
            }
            (1, _, Some(Json::Array(pairs))) => {
                let mut entries = Vec::with_capacity(pairs.len());
                for (i, pair) in pairs.iter().enumerate() {
                    let at = format!("{at}[{i}]");
                    match pair.as_array().map(Vec::as_slice) {
                        Some([k, v]) => entries.push((key_from_json(k, &at)?, value_from_json(v, &at, allow_refs)?)),
                        _ => return Err(shape(&at, "expected a [key, value] pair")),
                    }
                }
                Value::Hash(entries)
            }
            _ => Value::Hash(
                map.iter()
                    .map(|(k, v)| Ok((Key::Str(k.clone()), value_from_json(v, &format!("{at}.{k}"), allow_refs)?)))
                    .collect::<Result<_, FormatError>>()?,
            ),
        },
    })
}

fn is_variable_name(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_lowercase() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Parses a facts document: a flat object from variable names to values.
pub fn facts_from_str(src: &str) -> Result<Vec<(String, Value)>, FormatError> {
    let doc: Json = serde_json::from_str(src)?;
    let Json::Object(map) = doc else {
        return Err(shape("facts", "expected an object"));
    };
    map.iter()
        .map(|(name, v)| {
            if !is_variable_name(name) {
                return Err(shape(name, "not a valid variable name"));
            }
            Ok((name.clone(), value_from_json(v, name, false)?))
        })
        .collect()
}

pub fn facts_to_json(facts: &[(String, Value)]) -> Json {
    Json::Object(
        facts
            .iter()
            .map(|(k, v)| (k.clone(), value_to_json(v)))
            .collect(),
    )
}

/// A compiled catalog together with the node it was compiled for.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CatalogDocument {
    pub node: String,
    pub catalog: Catalog,
}

impl CatalogDocument {
    pub fn new(node: impl Into<String>, catalog: Catalog) -> CatalogDocument {
        CatalogDocument {
            node: node.into(),
            catalog,
        }
    }

    pub fn to_json(&self) -> Json {
        let resources: Vec<Json> = self
            .catalog
            .resources()
            .iter()
            .map(|r| {
                let params: Map<String, Json> = r
                    .attrs
                    .iter()
                    .map(|(k, v)| (k.clone(), value_to_json(v)))
                    .collect();
                json!({ "type": r.type_name, "title": r.title, "parameters": params })
            })
            .collect();
        json!({ "node": self.node, "resources": resources })
    }

    /// Canonical serialization: indented JSON with a trailing newline.
    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_json()).expect("serializable");
        s.push('\n');
        s
    }

    /// Resource syntax, one resource per line.
    pub fn to_pretty_string(&self) -> String {
        format!("# node {}\n{}", self.node, self.catalog)
    }

    pub fn from_json(doc: &Json) -> Result<CatalogDocument, FormatError> {
        let node = doc
            .get("node")
            .and_then(Json::as_str)
            .ok_or_else(|| shape("catalog", "needs a string `node`"))?;
        let resources = doc
            .get("resources")
            .and_then(Json::as_array)
            .ok_or_else(|| shape("catalog", "needs a `resources` array"))?;
        let mut catalog = Catalog::new();
        for (i, r) in resources.iter().enumerate() {
            let at = format!("resources[{i}]");
            let field = |name: &str| {
                r.get(name)
                    .and_then(Json::as_str)
                    .ok_or_else(|| shape(&at, format!("needs a string `{name}`")))
            };
            let mut resource = ResourceValue::new(field("type")?, field("title")?);
            let params = r
                .get("parameters")
                .and_then(Json::as_object)
                .ok_or_else(|| shape(&at, "needs a `parameters` object"))?;
            for (k, v) in params {
                let value = value_from_json(v, &format!("{at}.{k}"), true)?;
                resource.attrs.push((k.clone(), value));
            }
            catalog
                .append(resource)
                .map_err(|e| shape(&at, e.to_string()))?;
        }
        Ok(CatalogDocument::new(node, catalog))
    }

    /// Equality up to the order of resources and of their parameters.
    pub fn same_up_to_order(&self, other: &CatalogDocument) -> bool {
        type Normal = Vec<(String, String, Vec<(String, Value)>)>;
        fn normal(c: &Catalog) -> Normal {
            let mut out: Vec<_> = c
                .resources()
                .iter()
                .map(|r| {
                    let mut attrs = r.attrs.clone();
                    attrs.sort_by(|a, b| a.0.cmp(&b.0));
                    (r.type_name.clone(), r.title.clone(), attrs)
                })
                .collect();
            out.sort_by(|a, b| (&a.0, &a.1).cmp(&(&b.0, &b.1)));
            out
        }
        self.node == other.node && normal(&self.catalog) == normal(&other.catalog)
    }
}

impl FromStr for CatalogDocument {
    type Err = FormatError;

    fn from_str(src: &str) -> Result<CatalogDocument, FormatError> {
        CatalogDocument::from_json(&serde_json::from_str(src)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn round_trip(v: Value) {
        let j = value_to_json(&v);
        assert_eq!(value_from_json(&j, "v", true).unwrap(), v, "{j}");
    }

    #[test]
    fn values_round_trip() {
        round_trip(Value::Int(-4));
        round_trip(Value::str("x"));
        round_trip(Value::Array(vec![Value::Bool(true), Value::Int(1)]));
        round_trip(Value::Hash(vec![(Key::from("a"), Value::Int(1)), (Key::from("b"), Value::Int(2))]));
        round_trip(Value::Hash(vec![(Key::Int(1), Value::Int(1))]));
        round_trip(Value::Hash(vec![(Key::from("a"), Value::Int(1)), (Key::from("a"), Value::Int(2))]));
        round_trip(Value::Hash(vec![(Key::from("$ref"), Value::Int(1))]));
        round_trip(Value::Hash(vec![]));
        round_trip(Value::Ref {
            type_name: "file".into(),
            title: Box::new(Value::str("foo.txt")),
        });
    }

    #[test]
    fn reference_shape() {
        let r = Value::Ref {
            type_name: "file".into(),
            title: Box::new(Value::str("a")),
        };
        assert_eq!(value_to_json(&r), json!({"$ref": {"type": "file", "title": "a"}}));
    }

    #[test]
    fn facts_reject_bad_input() {
        assert!(facts_from_str(r#"{"osfamily": "Debian", "n": [1, {"a": true}]}"#).is_ok());
        assert!(facts_from_str("[1]").is_err());
        assert!(facts_from_str(r#"{"Bad": 1}"#).is_err());
        assert!(facts_from_str(r#"{"x": null}"#).is_err());
        assert!(facts_from_str(r#"{"x": 1.5}"#).is_err());
        assert!(facts_from_str(r#"{"x": {"$ref": {"type": "file", "title": "a"}}}"#).is_err());
    }

    #[test]
    fn catalog_document_round_trip() {
        let catalog: Catalog = [
            ResourceValue::new("package", "ssh").with("ensure", "installed"),
            ResourceValue::new("file", "b").with("mode", 420).with("z", true),
        ]
        .into_iter()
        .collect();
        let doc = CatalogDocument::new("n", catalog);
        let text = doc.to_json_string();
        assert!(text.find("\"ensure\"").unwrap() < text.find("\"mode\"").unwrap());
        assert_eq!(text.parse::<CatalogDocument>().unwrap(), doc);
    }

    #[test]
    fn order_insensitive_comparison() {
        let a = ResourceValue::new("file", "a").with("x", 1).with("y", 2);
        let b = ResourceValue::new("file", "b");
        let one = CatalogDocument::new("n", [a.clone(), b.clone()].into_iter().collect());
        let two = CatalogDocument::new("n", [b, ResourceValue::new("file", "a").with("y", 2).with("x", 1)].into_iter().collect());
        assert!(one.same_up_to_order(&two));
        let three = CatalogDocument::new("n", [a].into_iter().collect());
        assert!(!one.same_up_to_order(&three));
    }
}
