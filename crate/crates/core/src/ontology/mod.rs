//! The common-object ontology: a single-inheritance class hierarchy with
//! per-class attribute domains, binary relation classes wired to pattern
//! rules, and the detection-capability registry that drives semantic query
//! enrichment (a query for `Vehicle` finds `Car` detections).
//!
//! A schema is mutated only during a configuration phase and is immutable
//! once the engine starts, so evaluation lanes share it freely.

mod config;

use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use thiserror::Error;

pub use config::{parse_schema, save_schema, SchemaConfigError};

/// Failures of schema construction and lookup.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OntologyError {
    #[error("class {0:?} is already registered")]
    DuplicateClass(String),
    #[error("class {class:?} names unknown parent {parent:?}")]
    UnknownParent { class: String, parent: String },
    #[error("class hierarchy contains a cycle through {0:?}")]
    CycleDetected(String),
    #[error("unknown class {0:?}")]
    UnknownClass(String),
    #[error("relation {relation:?} names unknown rule {rule:?}")]
    UnknownRule { relation: String, rule: String },
    #[error("relation {0:?} is already registered")]
    DuplicateRelation(String),
    #[error("class {class:?} has no attribute {attribute:?}")]
    UnknownAttribute { class: String, attribute: String },
    #[error("invalid identifier {0:?}")]
    InvalidName(String),
}

/// An attribute value carried by an object node or a query predicate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AttrValue {
    Number(f64),
    Text(String),
}

impl AttrValue {
    pub fn text(s: &str) -> AttrValue {
        AttrValue::Text(s.to_string())
    }
}

impl fmt::Display for AttrValue {
    fn fmt(&self, f: &mut fmt::Formatter) -> fmt::Result {
        match self {
            AttrValue::Number(n) => write!(f, "{n}"),
            AttrValue::Text(s) => f.write_str(s),
        }
    }
}

/// The value domain an attribute is declared with: a closed enumeration of
/// strings or an inclusive numeric range. Values are typed strictly — a
/// numeric domain does not accept the string spelling of a number.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum AttrDomain {
    Enum(BTreeSet<String>),
    Range { min: f64, max: f64 },
}

impl AttrDomain {
    /// Convenience constructor for enumerated domains.
    pub fn one_of<I: IntoIterator<Item = S>, S: Into<String>>(values: I) -> AttrDomain {
        AttrDomain::Enum(values.into_iter().map(Into::into).collect())
    }

    pub fn accepts(&self, value: &AttrValue) -> bool {
        match (self, value) {
            (AttrDomain::Enum(set), AttrValue::Text(s)) => set.contains(s),
            (AttrDomain::Range { min, max }, AttrValue::Number(n)) => {
                *n >= *min && *n <= *max
            }
            _ => false,
        }
    }
}

/// One class in the hierarchy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassNode {
    pub name: String,
    pub parent: Option<String>,
    pub attribute_schema: BTreeMap<String, AttrDomain>,
}

/// A binary relation class: its role classes and the pattern rule that
/// realizes it. Arity is fixed at two.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationClass {
    pub name: String,
    pub role_classes: (String, String),
    pub rule_name: String,
}

/// The full ontology: class hierarchy, relation classes, what the detector
/// can emit directly, and which attributes it can extract.
///
/// Field access goes through methods so the structural invariants (unique
/// names, acyclic hierarchy, referential integrity) can only be established
/// by the registration operations. A schema deserialized from untrusted data
/// should be checked with [`OntologySchema::validate`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct OntologySchema {
    classes: BTreeMap<String, ClassNode>,
    relations: BTreeMap<String, RelationClass>,
    detectable: BTreeSet<String>,
    extractable: BTreeSet<(String, String)>,
}

fn valid_ident(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Enum values are freer than identifiers (e.g. "4x4") but must not collide
/// with the config file's structural characters.
fn valid_enum_value(s: &str) -> bool {
    !s.is_empty()
        && s.chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'))
}

impl OntologySchema {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers a class. The parent, when given, must already exist, which
    /// keeps the hierarchy acyclic by construction.
    pub fn register_class(
        &mut self,
        name: &str,
        parent: Option<&str>,
        attribute_schema: BTreeMap<String, AttrDomain>,
    ) -> Result<(), OntologyError> {
        if !valid_ident(name) {
            return Err(OntologyError::InvalidName(name.to_string()));
        }
        if self.classes.contains_key(name) {
            return Err(OntologyError::DuplicateClass(name.to_string()));
        }
        if let Some(p) = parent {
            if !self.classes.contains_key(p) {
                return Err(OntologyError::UnknownParent {
                    class: name.to_string(),
                    parent: p.to_string(),
                });
            }
        }
        for (attr, domain) in &attribute_schema {
            if !valid_ident(attr) {
                return Err(OntologyError::InvalidName(attr.clone()));
            }
            if let AttrDomain::Enum(values) = domain {
                for v in values {
                    if !valid_enum_value(v) {
                        return Err(OntologyError::InvalidName(v.clone()));
                    }
                }
            }
        }
        self.classes.insert(
            name.to_string(),
            ClassNode {
                name: name.to_string(),
                parent: parent.map(str::to_string),
                attribute_schema,
            },
        );
        Ok(())
    }

    /// Registers a relation class. The rule name must be known to the
    /// pattern-rule registry the engine will run with; the registry's name
    /// set is passed in so the two layers stay decoupled.
    pub fn register_relation_class(
        &mut self,
        name: &str,
        role_classes: (&str, &str),
        rule_name: &str,
        known_rules: &BTreeSet<String>,
    ) -> Result<(), OntologyError> {
        if !valid_ident(name) {
            return Err(OntologyError::InvalidName(name.to_string()));
        }
        if self.relations.contains_key(name) {
            return Err(OntologyError::DuplicateRelation(name.to_string()));
        }
        for role in [role_classes.0, role_classes.1] {
            if !self.classes.contains_key(role) {
                return Err(OntologyError::UnknownClass(role.to_string()));
            }
        }
        if !known_rules.contains(rule_name) {
            return Err(OntologyError::UnknownRule {
                relation: name.to_string(),
                rule: rule_name.to_string(),
            });
        }
        self.relations.insert(
            name.to_string(),
            RelationClass {
                name: name.to_string(),
                role_classes: (role_classes.0.to_string(), role_classes.1.to_string()),
                rule_name: rule_name.to_string(),
            },
        );
        Ok(())
    }

    /// Marks a registered class as directly detectable.
    pub fn mark_detectable(&mut self, class: &str) -> Result<(), OntologyError> {
        if !self.classes.contains_key(class) {
            return Err(OntologyError::UnknownClass(class.to_string()));
        }
        self.detectable.insert(class.to_string());
        Ok(())
    }

    /// Marks an attribute as extractable for a class; the attribute must be
    /// declared on the class or one of its ancestors.
    pub fn mark_extractable(&mut self, class: &str, attribute: &str) -> Result<(), OntologyError> {
        if self.attribute_domain(class, attribute)?.is_none() {
            return Err(OntologyError::UnknownAttribute {
                class: class.to_string(),
                attribute: attribute.to_string(),
            });
        }
        self.extractable
            .insert((class.to_string(), attribute.to_string()));
        Ok(())
    }

    pub fn class(&self, name: &str) -> Option<&ClassNode> {
        self.classes.get(name)
    }

    pub fn classes(&self) -> impl Iterator<Item = &ClassNode> {
        self.classes.values()
    }

    pub fn relation(&self, name: &str) -> Option<&RelationClass> {
        self.relations.get(name)
    }

    pub fn relations(&self) -> impl Iterator<Item = &RelationClass> {
        self.relations.values()
    }

    pub fn detectable(&self) -> &BTreeSet<String> {
        &self.detectable
    }

    pub fn extractable(&self) -> &BTreeSet<(String, String)> {
        &self.extractable
    }

    /// Walks from `class` up to the root, yielding `class` itself first.
    /// Stops early (rather than looping) on malformed hierarchies.
    fn ancestry<'s>(&'s self, class: &str) -> impl Iterator<Item = &'s ClassNode> + 's {
        let mut current = self.classes.get(class);
        let mut remaining = self.classes.len() + 1;
        std::iter::from_fn(move || {
            if remaining == 0 {
                return None;
            }
            remaining -= 1;
            let node = current?;
            current = node.parent.as_deref().and_then(|p| self.classes.get(p));
            Some(node)
        })
    }

    /// True iff `a` equals `b` or `b` is a transitive ancestor of `a`.
    pub fn is_subclass(&self, a: &str, b: &str) -> Result<bool, OntologyError> {
        if !self.classes.contains_key(b) {
            return Err(OntologyError::UnknownClass(b.to_string()));
        }
        if !self.classes.contains_key(a) {
            return Err(OntologyError::UnknownClass(a.to_string()));
        }
        Ok(self.ancestry(a).any(|node| node.name == b))
    }

    /// The detectable classes at or below `label` — what the detector can
    /// actually emit when a query asks for `label`.
    pub fn expand_label(&self, label: &str) -> Result<BTreeSet<String>, OntologyError> {
        if !self.classes.contains_key(label) {
            return Err(OntologyError::UnknownClass(label.to_string()));
        }
        let mut out = BTreeSet::new();
        for c in &self.detectable {
            if self.is_subclass(c, label)? {
                out.insert(c.clone());
            }
        }
        Ok(out)
    }

    /// Resolves an attribute's domain on a class or its ancestors; `None`
    /// when the attribute is not declared anywhere on the chain.
    pub fn attribute_domain(
        &self,
        class: &str,
        attribute: &str,
    ) -> Result<Option<&AttrDomain>, OntologyError> {
        if !self.classes.contains_key(class) {
            return Err(OntologyError::UnknownClass(class.to_string()));
        }
        Ok(self
            .ancestry(class)
            .find_map(|node| node.attribute_schema.get(attribute)))
    }

    /// Structural check for schemas that did not come through the
    /// registration path (e.g. deserialized): map keys match names, parents
    /// exist, the hierarchy is acyclic, and the capability sets refer to
    /// registered classes/attributes.
    pub fn validate(&self) -> Result<(), OntologyError> {
        for (key, node) in &self.classes {
            if *key != node.name || !valid_ident(&node.name) {
                return Err(OntologyError::InvalidName(node.name.clone()));
            }
            if let Some(p) = &node.parent {
                if !self.classes.contains_key(p) {
                    return Err(OntologyError::UnknownParent {
                        class: node.name.clone(),
                        parent: p.clone(),
                    });
                }
            }
        }
        // Cycle check: follow parents; more steps than classes means a loop.
        for name in self.classes.keys() {
            let mut steps = 0usize;
            let mut cur = Some(name.as_str());
            while let Some(c) = cur {
                steps += 1;
                if steps > self.classes.len() {
                    return Err(OntologyError::CycleDetected(name.clone()));
                }
                cur = self
                    .classes
                    .get(c)
                    .and_then(|n| n.parent.as_deref());
            }
        }
        for rel in self.relations.values() {
            for role in [&rel.role_classes.0, &rel.role_classes.1] {
                if !self.classes.contains_key(role) {
                    return Err(OntologyError::UnknownClass(role.clone()));
                }
            }
        }
        for class in &self.detectable {
            if !self.classes.contains_key(class) {
                return Err(OntologyError::UnknownClass(class.clone()));
            }
        }
        for (class, attr) in &self.extractable {
            if self.attribute_domain(class, attr)?.is_none() {
                return Err(OntologyError::UnknownAttribute {
                    class: class.clone(),
                    attribute: attr.clone(),
                });
            }
        }
        Ok(())
    }
}
