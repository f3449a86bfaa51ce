//! Declarative schema config file format.
//!
//! The file is line-oriented with four sections; `#` starts a comment and
//! blank lines are ignored. Definitions take effect in file order, so a
//! parent class must be declared before its children:
//!
//! ```text
//! [classes]
//! Vehicle
//! Car : Vehicle { color = black | red | white; speed = 0..250 }
//! Slot
//! [relations]
//! Overtake(Vehicle, Vehicle) -> overtake
//! [detectable]
//! Car
//! [extractable]
//! Car.color
//! ```
//!
//! Attribute domains are either `value | value | ...` enumerations (a single
//! value is a one-element enumeration) or inclusive numeric ranges written
//! `min..max`. Parse errors carry 1-based line and column numbers.

use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

use super::{AttrDomain, OntologySchema};

/// A schema config parse failure, located at a 1-based line and column.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("schema config line {line}, column {col}: {message}")]
pub struct SchemaConfigError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Section {
    Classes,
    Relations,
    Detectable,
    Extractable,
}

struct Cursor<'a> {
    text: &'a str,
    pos: usize,
    line_no: usize,
}

impl<'a> Cursor<'a> {
    fn new(text: &'a str, line_no: usize) -> Self {
        Cursor { text, pos: 0, line_no }
    }

    fn err(&self, message: impl Into<String>) -> SchemaConfigError {
        SchemaConfigError {
            line: self.line_no,
            col: self.pos + 1,
            message: message.into(),
        }
    }

    fn rest(&self) -> &'a str {
        &self.text[self.pos..]
    }

    fn skip_ws(&mut self) {
        let trimmed = self.rest().trim_start();
        self.pos = self.text.len() - trimmed.len();
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.rest().chars().next()
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.pos += c.len_utf8();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<(), SchemaConfigError> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.err(format!("expected {c:?}")))
        }
    }

    fn take_while(&mut self, pred: impl Fn(char) -> bool) -> &'a str {
        let rest = self.rest();
        let end = rest
            .char_indices()
            .find(|(_, c)| !pred(*c))
            .map(|(i, _)| i)
            .unwrap_or(rest.len());
        self.pos += end;
        &rest[..end]
    }

    fn ident(&mut self) -> Result<&'a str, SchemaConfigError> {
        self.skip_ws();
        let tok = self.take_while(|c| c.is_ascii_alphanumeric() || c == '_');
        if tok.is_empty() || tok.starts_with(|c: char| c.is_ascii_digit()) {
            return Err(self.err("expected an identifier"));
        }
        Ok(tok)
    }

    /// A domain value token: anything up to whitespace or a structural
    /// character. Covers enum values ("black", "4x4") and range literals.
    fn value_token(&mut self) -> Result<&'a str, SchemaConfigError> {
        self.skip_ws();
        let tok = self.take_while(|c| {
            !c.is_whitespace() && !matches!(c, '|' | ';' | '{' | '}' | '=' | ',')
        });
        if tok.is_empty() {
            return Err(self.err("expected a value"));
        }
        Ok(tok)
    }

    fn end_of_line(&mut self) -> Result<(), SchemaConfigError> {
        if self.peek().is_some() {
            return Err(self.err("unexpected trailing input"));
        }
        Ok(())
    }
}

/// Parses a schema config file. `known_rules` is the name set of the
/// pattern-rule registry the schema will be used with, needed to check
/// relation declarations.
pub fn parse_schema(
    text: &str,
    known_rules: &BTreeSet<String>,
) -> Result<OntologySchema, SchemaConfigError> {
    let mut schema = OntologySchema::new();
    let mut section: Option<Section> = None;

    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw_line.find('#') {
            Some(p) => &raw_line[..p],
            None => raw_line,
        };
        if line.trim().is_empty() {
            continue;
        }
        let mut cur = Cursor::new(line, line_no);

        if cur.peek() == Some('[') {
            cur.expect('[')?;
            let name = cur.ident()?;
            cur.expect(']')?;
            cur.end_of_line()?;
            section = Some(match name {
                "classes" => Section::Classes,
                "relations" => Section::Relations,
                "detectable" => Section::Detectable,
                "extractable" => Section::Extractable,
                other => {
                    return Err(SchemaConfigError {
                        line: line_no,
                        col: 2,
                        message: format!("unknown section {other:?}"),
                    })
                }
            });
            continue;
        }

        let section = section.ok_or_else(|| {
            cur.err("content before the first section header")
        })?;
        match section {
            Section::Classes => parse_class_line(&mut cur, &mut schema)?,
            Section::Relations => parse_relation_line(&mut cur, &mut schema, known_rules)?,
            Section::Detectable => {
                let name = cur.ident()?;
                let name_col = cur.pos - name.len() + 1;
                cur.end_of_line()?;
                schema.mark_detectable(name).map_err(|e| SchemaConfigError {
                    line: line_no,
                    col: name_col,
                    message: e.to_string(),
                })?;
            }
            Section::Extractable => {
                let class = cur.ident()?;
                cur.expect('.')?;
                let attr = cur.ident()?;
                cur.end_of_line()?;
                schema
                    .mark_extractable(class, attr)
                    .map_err(|e| SchemaConfigError {
                        line: line_no,
                        col: 1,
                        message: e.to_string(),
                    })?;
            }
        }
    }

    Ok(schema)
}

fn parse_class_line(
    cur: &mut Cursor,
    schema: &mut OntologySchema,
) -> Result<(), SchemaConfigError> {
    let name = cur.ident()?;
    let name_col = cur.pos - name.len() + 1;
    let parent = if cur.eat(':') {
        Some(cur.ident()?)
    } else {
        None
    };
    let mut attrs = BTreeMap::new();
    if cur.eat('{') {
        loop {
            let attr = cur.ident()?;
            cur.expect('=')?;
            let domain = parse_domain(cur)?;
            if attrs.insert(attr.to_string(), domain).is_some() {
                return Err(cur.err(format!("attribute {attr:?} declared twice")));
            }
            if cur.eat(';') {
                continue;
            }
            cur.expect('}')?;
            break;
        }
    }
    cur.end_of_line()?;
    schema
        .register_class(name, parent, attrs)
        .map_err(|e| SchemaConfigError {
            line: cur.line_no,
            col: name_col,
            message: e.to_string(),
        })
}

fn parse_domain(cur: &mut Cursor) -> Result<AttrDomain, SchemaConfigError> {
    let first = cur.value_token()?;
    // A range literal is `min..max`; everything else is an enumeration.
    if let Some(split) = first.find("..") {
        let (lo, hi) = (&first[..split], &first[split + 2..]);
        let min: f64 = lo
            .parse()
            .map_err(|_| cur.err(format!("invalid range bound {lo:?}")))?;
        let max: f64 = hi
            .parse()
            .map_err(|_| cur.err(format!("invalid range bound {hi:?}")))?;
        if !(min <= max) {
            return Err(cur.err(format!("empty range {first:?}")));
        }
        return Ok(AttrDomain::Range { min, max });
    }
    let mut values = BTreeSet::new();
    values.insert(first.to_string());
    while cur.eat('|') {
        values.insert(cur.value_token()?.to_string());
    }
    Ok(AttrDomain::Enum(values))
}

fn parse_relation_line(
    cur: &mut Cursor,
    schema: &mut OntologySchema,
    known_rules: &BTreeSet<String>,
) -> Result<(), SchemaConfigError> {
    let name = cur.ident()?;
    let name_col = cur.pos - name.len() + 1;
    cur.expect('(')?;
    let role_a = cur.ident()?;
    cur.expect(',')?;
    let role_b = cur.ident()?;
    cur.expect(')')?;
    cur.expect('-')?;
    cur.expect('>')?;
    let rule = cur.ident()?;
    cur.end_of_line()?;
    schema
        .register_relation_class(name, (role_a, role_b), rule, known_rules)
        .map_err(|e| SchemaConfigError {
            line: cur.line_no,
            col: name_col,
            message: e.to_string(),
        })
}

/// Renders a schema in the config format, parents before children, so that
/// `parse_schema(save_schema(s)) == s`.
pub fn save_schema(schema: &OntologySchema) -> String {
    let mut out = String::from("[classes]\n");

    // Topological emit: a class goes out once its parent has gone out;
    // alphabetical within each pass for determinism.
    let mut emitted: BTreeSet<&str> = BTreeSet::new();
    let total = schema.classes().count();
    while emitted.len() < total {
        let before = emitted.len();
        for class in schema.classes() {
            if emitted.contains(class.name.as_str()) {
                continue;
            }
            if let Some(p) = &class.parent {
                if !emitted.contains(p.as_str()) {
                    continue;
                }
            }
            out.push_str(&render_class(class));
            out.push('\n');
            emitted.insert(&class.name);
        }
        if emitted.len() == before {
            // Unreachable for validated schemas (would need a parent cycle);
            // emit the stragglers rather than loop forever.
            for class in schema.classes() {
                if emitted.insert(&class.name) {
                    out.push_str(&render_class(class));
                    out.push('\n');
                }
            }
        }
    }

    out.push_str("[relations]\n");
    for rel in schema.relations() {
        out.push_str(&format!(
            "{}({}, {}) -> {}\n",
            rel.name, rel.role_classes.0, rel.role_classes.1, rel.rule_name
        ));
    }

    out.push_str("[detectable]\n");
    for class in schema.detectable() {
        out.push_str(class);
        out.push('\n');
    }

    out.push_str("[extractable]\n");
    for (class, attr) in schema.extractable() {
        out.push_str(&format!("{class}.{attr}\n"));
    }

    out
}

fn render_class(class: &super::ClassNode) -> String {
    let mut line = class.name.clone();
    if let Some(p) = &class.parent {
        line.push_str(&format!(" : {p}"));
    }
    if !class.attribute_schema.is_empty() {
        let attrs: Vec<String> = class
            .attribute_schema
            .iter()
            .map(|(name, domain)| match domain {
                AttrDomain::Enum(values) => {
                    let vals: Vec<&str> = values.iter().map(String::as_str).collect();
                    format!("{name} = {}", vals.join(" | "))
                }
                AttrDomain::Range { min, max } => format!("{name} = {min}..{max}"),
            })
            .collect();
        line.push_str(&format!(" {{ {} }}", attrs.join("; ")));
    }
    line
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rules() -> BTreeSet<String> {
        ["overtake", "parking"].iter().map(|s| s.to_string()).collect()
    }

    const SAMPLE: &str = "\
# traffic demo
[classes]
Vehicle { speed = 0..250 }
Car : Vehicle { color = black | red | white }
Bike : Vehicle
Slot

[relations]
Overtake(Vehicle, Vehicle) -> overtake
ParkingSlotFull(Car, Slot) -> parking

[detectable]
Car
Bike
Slot

[extractable]
Car.color
";

    #[test]
    fn parses_sample_schema() {
        let s = parse_schema(SAMPLE, &rules()).unwrap();
        assert!(s.is_subclass("Car", "Vehicle").unwrap());
        assert_eq!(s.detectable().len(), 3);
        let rel = s.relation("Overtake").unwrap();
        assert_eq!(rel.role_classes.0, "Vehicle");
        assert_eq!(rel.rule_name, "overtake");
        let dom = s.attribute_domain("Car", "speed").unwrap().unwrap();
        assert_eq!(dom, &AttrDomain::Range { min: 0.0, max: 250.0 });
    }

    #[test]
    fn round_trips_through_save() {
        let s = parse_schema(SAMPLE, &rules()).unwrap();
        let saved = save_schema(&s);
        let reloaded = parse_schema(&saved, &rules()).unwrap();
        assert_eq!(s, reloaded);
        // Saving again is stable byte-for-byte.
        assert_eq!(saved, save_schema(&reloaded));
    }

    #[test]
    fn reports_line_and_column_for_syntax_errors() {
        let bad = "[classes]\nVehicle\nCar :\n";
        let err = parse_schema(bad, &rules()).unwrap_err();
        assert_eq!(err.line, 3);
        assert!(err.message.contains("identifier"), "{}", err.message);
    }

    #[test]
    fn reports_unknown_parent_with_location() {
        let bad = "[classes]\nCar : Vehicle\n";
        let err = parse_schema(bad, &rules()).unwrap_err();
        assert_eq!((err.line, err.col), (2, 1));
        assert!(err.message.contains("Vehicle"), "{}", err.message);
    }

    #[test]
    fn rejects_content_before_sections_and_bad_headers() {
        let err = parse_schema("Vehicle\n", &rules()).unwrap_err();
        assert_eq!(err.line, 1);
        let err = parse_schema("[stuff]\n", &rules()).unwrap_err();
        assert!(err.message.contains("unknown section"));
    }

    #[test]
    fn rejects_unknown_rule_in_relations() {
        let bad = "[classes]\nVehicle\n[relations]\nFly(Vehicle, Vehicle) -> fly\n";
        let err = parse_schema(bad, &rules()).unwrap_err();
        assert_eq!(err.line, 4);
        assert!(err.message.contains("fly"), "{}", err.message);
    }

    #[test]
    fn rejects_empty_numeric_range() {
        let bad = "[classes]\nVehicle { speed = 10..0 }\n";
        let err = parse_schema(bad, &rules()).unwrap_err();
        assert!(err.message.contains("empty range"), "{}", err.message);
    }

    #[test]
    fn comments_and_blank_lines_are_ignored_everywhere() {
        let text = "\n# top\n[classes]\n\nVehicle # the root\n# done\n";
        let s = parse_schema(text, &rules()).unwrap();
        assert!(s.class("Vehicle").is_some());
    }

    #[test]
    fn float_ranges_round_trip() {
        let text = "[classes]\nThing { conf = 0.25..0.75 }\n";
        let s = parse_schema(text, &rules()).unwrap();
        let saved = save_schema(&s);
        assert!(saved.contains("conf = 0.25..0.75"));
        assert_eq!(parse_schema(&saved, &rules()).unwrap(), s);
    }
}
