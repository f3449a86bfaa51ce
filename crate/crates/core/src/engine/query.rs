//! Subscriber queries and the line-oriented query language.
//!
//! A query names what to match (object specs and/or one relation spec),
//! how to window the stream, and which publishers to watch. The textual
//! form is one line:
//!
//! ```text
//! QUERY <id> SUBSCRIBER <sid>
//!   { OBJECT <Class> [WHERE <attr>=<val>{,<attr>=<val>}] }
//!   [ PATTERN <Relation>(<ClassA>,<ClassB>) [THRESHOLD <r>] ]
//!   WINDOW COUNT <n> [SLIDE <s>] | TIME <ms> | ABS <tm> <tn>
//!   FROM <pub>{,<pub>}
//! ```
//!
//! Examples:
//!
//! ```text
//! QUERY q1 SUBSCRIBER s1 OBJECT Car WINDOW COUNT 5 FROM P1
//! QUERY q2 SUBSCRIBER s2 OBJECT Car WHERE color=black WINDOW COUNT 5 FROM P2
//! QUERY q5 SUBSCRIBER s5 PATTERN Overtake(Car,Bike) WINDOW COUNT 5 FROM P5
//! QUERY q6 SUBSCRIBER s6 PATTERN ParkingSlotFull(Car,Slot) THRESHOLD 0.5 WINDOW COUNT 5 FROM P6
//! ```
//!
//! Attribute values that parse as numbers compare numerically; anything
//! else is text. Values cannot contain spaces or commas.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ontology::AttrValue;

use super::window::WindowSpec;

/// One object filter: a class and attribute equality predicates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectSpec {
    pub class: String,
    pub predicates: Vec<(String, AttrValue)>,
}

/// One relation filter: a relation class applied to two role classes, with
/// an optional rule threshold (used by occupancy rules).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationSpec {
    pub relation: String,
    pub role_a: String,
    pub role_b: String,
    pub threshold: Option<f64>,
}

/// A subscriber query. At least one of `object_specs` / `relation_spec`
/// must be present (enforced at registration).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Query {
    pub query_id: String,
    pub subscriber_id: String,
    pub object_specs: Vec<ObjectSpec>,
    pub relation_spec: Option<RelationSpec>,
    pub window: WindowSpec,
    pub publishers: BTreeSet<String>,
}

/// Failure to parse one query line.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("query parse error: {message}")]
pub struct QueryParseError {
    pub message: String,
}

fn err<T>(message: impl fmt::Display) -> Result<T, QueryParseError> {
    Err(QueryParseError {
        message: message.to_string(),
    })
}

struct Tokens<'a> {
    toks: Vec<&'a str>,
    pos: usize,
}

impl<'a> Tokens<'a> {
    fn next(&mut self) -> Result<&'a str, QueryParseError> {
        let t = self.toks.get(self.pos).copied();
        self.pos += 1;
        t.ok_or_else(|| QueryParseError {
            message: "unexpected end of query".to_string(),
        })
    }

    fn peek(&self) -> Option<&'a str> {
        self.toks.get(self.pos).copied()
    }

    fn expect(&mut self, keyword: &str) -> Result<(), QueryParseError> {
        let t = self.next()?;
        if t != keyword {
            return err(format!("expected '{keyword}', found '{t}'"));
        }
        Ok(())
    }
}

/// Parses an attribute value: numeric if it reads as a number, text
/// otherwise.
fn parse_value(text: &str) -> AttrValue {
    match text.parse::<f64>() {
        Ok(n) if n.is_finite() => AttrValue::Number(n),
        _ => AttrValue::Text(text.to_string()),
    }
}

fn parse_number<T: std::str::FromStr>(text: &str, what: &str) -> Result<T, QueryParseError> {
    text.parse::<T>()
        .map_err(|_| QueryParseError {
            message: format!("invalid {what}: '{text}'"),
        })
}

fn parse_where(clause: &str) -> Result<Vec<(String, AttrValue)>, QueryParseError> {
    let mut predicates = Vec::new();
    for part in clause.split(',') {
        let Some((attr, val)) = part.split_once('=') else {
            return err(format!("expected attr=value, found '{part}'"));
        };
        if attr.is_empty() || val.is_empty() {
            return err(format!("expected attr=value, found '{part}'"));
        }
        predicates.push((attr.to_string(), parse_value(val)));
    }
    Ok(predicates)
}

/// Parses `Relation(ClassA,ClassB)`.
fn parse_pattern_head(text: &str) -> Result<(String, String, String), QueryParseError> {
    let Some((relation, rest)) = text.split_once('(') else {
        return err(format!("expected Relation(ClassA,ClassB), found '{text}'"));
    };
    let Some(args) = rest.strip_suffix(')') else {
        return err(format!("unclosed role list in '{text}'"));
    };
    let roles: Vec<&str> = args.split(',').map(str::trim).collect();
    if relation.is_empty() || roles.len() != 2 || roles.iter().any(|r| r.is_empty()) {
        return err(format!("expected two role classes in '{text}'"));
    }
    Ok((
        relation.to_string(),
        roles[0].to_string(),
        roles[1].to_string(),
    ))
}

/// Parses one query line.
pub fn parse_query(line: &str) -> Result<Query, QueryParseError> {
    let mut t = Tokens {
        toks: line.split_whitespace().collect(),
        pos: 0,
    };
    t.expect("QUERY")?;
    let query_id = t.next()?.to_string();
    t.expect("SUBSCRIBER")?;
    let subscriber_id = t.next()?.to_string();

    let mut object_specs = Vec::new();
    let mut relation_spec: Option<RelationSpec> = None;
    loop {
        match t.peek() {
            Some("OBJECT") => {
                t.next()?;
                let class = t.next()?.to_string();
                let mut predicates = Vec::new();
                if t.peek() == Some("WHERE") {
                    t.next()?;
                    predicates = parse_where(t.next()?)?;
                }
                object_specs.push(ObjectSpec { class, predicates });
            }
            Some("PATTERN") => {
                if relation_spec.is_some() {
                    return err("at most one PATTERN clause per query");
                }
                t.next()?;
                let (relation, role_a, role_b) = parse_pattern_head(t.next()?)?;
                let mut threshold = None;
                if t.peek() == Some("THRESHOLD") {
                    t.next()?;
                    let r: f64 = parse_number(t.next()?, "threshold")?;
                    threshold = Some(r);
                }
                relation_spec = Some(RelationSpec {
                    relation,
                    role_a,
                    role_b,
                    threshold,
                });
            }
            Some("WINDOW") => break,
            Some(other) => return err(format!("expected OBJECT, PATTERN or WINDOW, found '{other}'")),
            None => return err("unexpected end of query (missing WINDOW clause)"),
        }
    }
    if object_specs.is_empty() && relation_spec.is_none() {
        return err("query needs at least one OBJECT or PATTERN clause");
    }

    t.expect("WINDOW")?;
    let window = match t.next()? {
        "COUNT" => {
            let n: u32 = parse_number(t.next()?, "window size")?;
            if t.peek() == Some("SLIDE") {
                t.next()?;
                let slide: u32 = parse_number(t.next()?, "slide")?;
                WindowSpec::CountSliding { n, slide }
            } else {
                WindowSpec::CountTumbling { n }
            }
        }
        "TIME" => WindowSpec::Time {
            duration_ms: parse_number(t.next()?, "duration")?,
        },
        "ABS" => {
            let t_m: i64 = parse_number(t.next()?, "window start")?;
            let t_n: i64 = parse_number(t.next()?, "window end")?;
            WindowSpec::Absolute { t_m, t_n }
        }
        other => return err(format!("unknown window form '{other}'")),
    };
    window.validate().map_err(|m| QueryParseError { message: m })?;

    t.expect("FROM")?;
    let publishers: BTreeSet<String> = t
        .next()?
        .split(',')
        .filter(|p| !p.is_empty())
        .map(|p| p.to_string())
        .collect();
    if publishers.is_empty() {
        return err("FROM needs at least one publisher");
    }
    if let Some(extra) = t.peek() {
        return err(format!("unexpected trailing token '{extra}'"));
    }

    Ok(Query {
        query_id,
        subscriber_id,
        object_specs,
        relation_spec,
        window,
        publishers,
    })
}
