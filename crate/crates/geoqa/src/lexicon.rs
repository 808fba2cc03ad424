//! Dictionary tables driving annotation and query generation.
//!
//! All tables are tab-separated text files with `#` comments. Classes are
//! keyed by lowercased local name so that e.g. an OSM `Mountain` class and a
//! DBpedia `Mountain` class share one property row.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use thiserror::Error;

use crate::kb::Iri;

/// Default `near` radius in metres when no class override exists.
pub const DEFAULT_NEAR_M: f64 = 1000.0;

/// The supported spatial relation vocabulary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RelationKind {
    Within,
    Crosses,
    Borders,
    Near,
    /// Distance at most a stated number of metres.
    AtMost,
    /// Distance at least a stated number of metres.
    AtLeast,
    North,
    South,
    East,
    West,
    Northeast,
    Northwest,
    Southeast,
    Southwest,
}

impl RelationKind {
    pub fn as_str(self) -> &'static str {
        match self {
            RelationKind::Within => "within",
            RelationKind::Crosses => "crosses",
            RelationKind::Borders => "borders",
            RelationKind::Near => "near",
            RelationKind::AtMost => "atMost",
            RelationKind::AtLeast => "atLeast",
            RelationKind::North => "north",
            RelationKind::South => "south",
            RelationKind::East => "east",
            RelationKind::West => "west",
            RelationKind::Northeast => "northeast",
            RelationKind::Northwest => "northwest",
            RelationKind::Southeast => "southeast",
            RelationKind::Southwest => "southwest",
        }
    }

    pub fn parse(s: &str) -> Option<RelationKind> {
        Some(match s {
            "within" => RelationKind::Within,
            "crosses" => RelationKind::Crosses,
            "borders" => RelationKind::Borders,
            "near" => RelationKind::Near,
            "atMost" => RelationKind::AtMost,
            "atLeast" => RelationKind::AtLeast,
            "north" => RelationKind::North,
            "south" => RelationKind::South,
            "east" => RelationKind::East,
            "west" => RelationKind::West,
            "northeast" => RelationKind::Northeast,
            "northwest" => RelationKind::Northwest,
            "southeast" => RelationKind::Southeast,
            "southwest" => RelationKind::Southwest,
            _ => return None,
        })
    }

    /// Relations that take an explicit distance argument.
    pub fn takes_distance(self) -> bool {
        matches!(self, RelationKind::AtMost | RelationKind::AtLeast)
    }
}

impl fmt::Display for RelationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{file}:{line}: expected {expected} tab-separated fields")]
    Columns {
        file: String,
        line: usize,
        expected: usize,
    },
    #[error("{file}:{line}: unknown relation kind {kind:?}")]
    UnknownKind {
        file: String,
        line: usize,
        kind: String,
    },
    #[error("{file}:{line}: {source}")]
    BadIri {
        file: String,
        line: usize,
        #[source]
        source: crate::kb::IriError,
    },
    #[error("{file}:{line}: invalid number {value:?}")]
    BadNumber {
        file: String,
        line: usize,
        value: String,
    },
}

/// Attribute property row: a word such as "height" scoped to a class.
#[derive(Debug, Clone)]
pub struct PropertyEntry {
    pub class_key: String,
    pub property: Iri,
    pub word: String,
}

/// Value-constraint row: a literal value a property may take.
#[derive(Debug, Clone)]
pub struct ValueEntry {
    pub class_key: String,
    pub property: Iri,
    pub value: String,
}

/// Domain/relation to linking-property row for qualitative queries.
#[derive(Debug, Clone)]
pub struct DprEntry {
    pub class_key: String,
    pub kind: RelationKind,
    pub property: Iri,
}

#[derive(Debug, Clone, Default)]
pub struct Lexicons {
    /// Lemma to canonical lemma, applied before concept lookup.
    pub synonyms: BTreeMap<String, String>,
    /// Tokenised relation phrases, scanned longest first.
    pub relations: Vec<(Vec<String>, RelationKind)>,
    pub properties: Vec<PropertyEntry>,
    pub values: Vec<ValueEntry>,
    pub dpr: Vec<DprEntry>,
    /// Class-specific `near` radius overrides in metres.
    pub near_m: BTreeMap<String, f64>,
}

/// Lowercased local name used as the class key in every table.
pub fn class_key(class: &Iri) -> String {
    class.local_name().to_ascii_lowercase()
}

impl Lexicons {
    /// Load all tables from a directory. `relations.tsv`, `properties.tsv`,
    /// `values.tsv` and `dpr.tsv` must exist; `synonyms.tsv` and `near.tsv`
    /// default to empty.
    pub fn load(dir: &Path) -> Result<Lexicons, LexiconError> {
        let read = |name: &str, required: bool| -> Result<String, LexiconError> {
            let path = dir.join(name);
            match std::fs::read_to_string(&path) {
                Ok(s) => Ok(s),
                Err(e) if !required && e.kind() == std::io::ErrorKind::NotFound => {
                    Ok(String::new())
                }
                Err(e) => Err(LexiconError::Io {
                    path: path.display().to_string(),
                    source: e,
                }),
            }
        };
        Lexicons::from_strs(
            &read("synonyms.tsv", false)?,
            &read("relations.tsv", true)?,
            &read("properties.tsv", true)?,
            &read("values.tsv", true)?,
            &read("dpr.tsv", true)?,
            &read("near.tsv", false)?,
        )
    }

    pub fn from_strs(
        synonyms: &str,
        relations: &str,
        properties: &str,
        values: &str,
        dpr: &str,
        near: &str,
    ) -> Result<Lexicons, LexiconError> {
        let mut lex = Lexicons::default();
        for (line_no, fields) in rows("synonyms.tsv", synonyms, 2)? {
            let _ = line_no;
            lex.synonyms
                .insert(fields[0].to_ascii_lowercase(), fields[1].to_ascii_lowercase());
        }
        for (line_no, fields) in rows("relations.tsv", relations, 2)? {
            let kind = RelationKind::parse(&fields[1]).ok_or_else(|| {
                LexiconError::UnknownKind {
                    file: "relations.tsv".into(),
                    line: line_no,
                    kind: fields[1].clone(),
                }
            })?;
            let phrase: Vec<String> = fields[0]
                .split_whitespace()
                .map(str::to_ascii_lowercase)
                .collect();
            lex.relations.push((phrase, kind));
        }
        // Longest phrase first so "at the border of" beats "at".
        lex.relations
            .sort_by(|a, b| b.0.len().cmp(&a.0.len()).then_with(|| a.0.cmp(&b.0)));
        for (line_no, fields) in rows("properties.tsv", properties, 3)? {
            lex.properties.push(PropertyEntry {
                class_key: fields[0].to_ascii_lowercase(),
                property: parse_iri("properties.tsv", line_no, &fields[1])?,
                word: fields[2].to_ascii_lowercase(),
            });
        }
        for (line_no, fields) in rows("values.tsv", values, 3)? {
            lex.values.push(ValueEntry {
                class_key: fields[0].to_ascii_lowercase(),
                property: parse_iri("values.tsv", line_no, &fields[1])?,
                value: fields[2].clone(),
            });
        }
        for (line_no, fields) in rows("dpr.tsv", dpr, 3)? {
            let kind =
                RelationKind::parse(&fields[1]).ok_or_else(|| LexiconError::UnknownKind {
                    file: "dpr.tsv".into(),
                    line: line_no,
                    kind: fields[1].clone(),
                })?;
            lex.dpr.push(DprEntry {
                class_key: fields[0].to_ascii_lowercase(),
                kind,
                property: parse_iri("dpr.tsv", line_no, &fields[2])?,
            });
        }
        for (line_no, fields) in rows("near.tsv", near, 2)? {
            let metres: f64 = fields[1].parse().map_err(|_| LexiconError::BadNumber {
                file: "near.tsv".into(),
                line: line_no,
                value: fields[1].clone(),
            })?;
            lex.near_m.insert(fields[0].to_ascii_lowercase(), metres);
        }
        Ok(lex)
    }

    pub fn canonical_lemma<'a>(&'a self, lemma: &'a str) -> &'a str {
        self.synonyms.get(lemma).map(String::as_str).unwrap_or(lemma)
    }

    /// `near` radius for the first class key with an override, else default.
    pub fn near_threshold<'a>(&self, class_keys: impl IntoIterator<Item = &'a str>) -> f64 {
        for key in class_keys {
            if let Some(&m) = self.near_m.get(key) {
                return m;
            }
        }
        DEFAULT_NEAR_M
    }

    /// Linking property for a subject class under a relation kind.
    pub fn dpr_property<'a>(
        &self,
        class_keys: impl IntoIterator<Item = &'a str>,
        kind: RelationKind,
    ) -> Option<&Iri> {
        for key in class_keys {
            if let Some(entry) = self
                .dpr
                .iter()
                .find(|e| e.class_key == key && e.kind == kind)
            {
                return Some(&entry.property);
            }
        }
        None
    }

    /// Property rows scoped to any of the given class keys.
    pub fn properties_for<'a>(
        &'a self,
        class_keys: &'a [String],
    ) -> impl Iterator<Item = &'a PropertyEntry> {
        self.properties
            .iter()
            .filter(move |e| class_keys.contains(&e.class_key))
    }

    /// Value rows scoped to any of the given class keys.
    pub fn values_for<'a>(
        &'a self,
        class_keys: &'a [String],
    ) -> impl Iterator<Item = &'a ValueEntry> {
        self.values
            .iter()
            .filter(move |e| class_keys.contains(&e.class_key))
    }
}

type Row = (usize, Vec<String>);

fn rows(file: &str, text: &str, expected: usize) -> Result<Vec<Row>, LexiconError> {
    let mut out = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<String> = line.split('\t').map(|f| f.trim().to_string()).collect();
        if fields.len() != expected {
            return Err(LexiconError::Columns {
                file: file.to_string(),
                line: line_no,
                expected,
            });
        }
        out.push((line_no, fields));
    }
    Ok(out)
}

fn parse_iri(file: &str, line: usize, s: &str) -> Result<Iri, LexiconError> {
    Iri::new(s).map_err(|e| LexiconError::BadIri {
        file: file.to_string(),
        line,
        source: e,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Lexicons {
        Lexicons::from_strs(
            "eatery\trestaurant\n",
            "in\twithin\nat the border of\tborders\nat most\tatMost\nclose to\tnear\n",
            "mountain\thttp://dbpedia.org/property/height\theight\n\
             river\thttp://dbpedia.org/property/length\tlength\n",
            "restaurant\thttp://dbpedia.org/ontology/cuisine\tGreek cuisine\n",
            "river\tcrosses\thttp://dbpedia.org/ontology/city\n",
            "forest\t5000\n",
        )
        .unwrap()
    }

    #[test]
    fn loads_and_sorts_relations_longest_first() {
        let lex = sample();
        assert_eq!(lex.relations[0].0, vec!["at", "the", "border", "of"]);
        assert_eq!(lex.relations[0].1, RelationKind::Borders);
        assert_eq!(lex.relations.last().unwrap().0, vec!["in"]);
    }

    #[test]
    fn near_threshold_prefers_override() {
        let lex = sample();
        assert_eq!(lex.near_threshold(["forest"]), 5000.0);
        assert_eq!(lex.near_threshold(["hotel"]), 1000.0);
        assert_eq!(lex.near_threshold(["hotel", "forest"]), 5000.0);
    }

    #[test]
    fn dpr_lookup_matches_class_and_kind() {
        let lex = sample();
        let p = lex.dpr_property(["river"], RelationKind::Crosses).unwrap();
        assert_eq!(p.as_str(), "http://dbpedia.org/ontology/city");
        assert!(lex.dpr_property(["river"], RelationKind::Within).is_none());
        assert!(lex.dpr_property(["city"], RelationKind::Crosses).is_none());
    }

    #[test]
    fn synonyms_canonicalise() {
        let lex = sample();
        assert_eq!(lex.canonical_lemma("eatery"), "restaurant");
        assert_eq!(lex.canonical_lemma("river"), "river");
    }

    #[test]
    fn class_key_is_lowercase_local_name() {
        assert_eq!(
            class_key(&crate::kb::iri("http://example.org/ontology#Mountain")),
            "mountain"
        );
        assert_eq!(
            class_key(&crate::kb::iri("http://dbpedia.org/ontology/City")),
            "city"
        );
    }

    #[test]
    fn bad_kind_is_reported_with_line() {
        let err = Lexicons::from_strs("", "in\tbogus\n", "", "", "", "").unwrap_err();
        match err {
            LexiconError::UnknownKind { line, kind, .. } => {
                assert_eq!(line, 1);
                assert_eq!(kind, "bogus");
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
