//! Source-tagged in-memory triple store.
//!
//! The store is loaded from an N-Triples subset (IRIs and literals only, no
//! blank nodes, no language tags) and keeps every triple tagged with the
//! knowledge base it came from. On `build()` it materialises the symmetric
//! closure of `owl:sameAs` and derives the label, class and geometry indexes
//! plus the statistics used for query ranking.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::path::Path;

use crate::geometry::{self, Geometry};
use crate::vocab;

/// Which knowledge base a triple was loaded from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Source {
    Dbpedia,
    Gadm,
    Osm,
    Links,
}

impl Source {
    pub fn as_str(self) -> &'static str {
        match self {
            Source::Dbpedia => "dbpedia",
            Source::Gadm => "gadm",
            Source::Osm => "osm",
            Source::Links => "links",
        }
    }

    pub fn parse(s: &str) -> Option<Source> {
        match s {
            "dbpedia" => Some(Source::Dbpedia),
            "gadm" => Some(Source::Gadm),
            "osm" => Some(Source::Osm),
            "links" => Some(Source::Links),
            _ => None,
        }
    }

    pub const ALL: [Source; 4] = [Source::Dbpedia, Source::Gadm, Source::Osm, Source::Links];

    /// Disambiguation priority: gadm before osm before dbpedia.
    pub fn priority(self) -> u8 {
        match self {
            Source::Gadm => 0,
            Source::Osm => 1,
            Source::Dbpedia => 2,
            Source::Links => 3,
        }
    }
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// An absolute IRI. Guaranteed non-empty and free of whitespace.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Iri(String);

#[derive(Debug, thiserror::Error)]
#[error("invalid IRI {0:?}: must be non-empty and contain no whitespace or angle brackets")]
pub struct IriError(pub String);

impl Iri {
    pub fn new(s: impl Into<String>) -> Result<Iri, IriError> {
        let s = s.into();
        if s.is_empty() || s.chars().any(|c| c.is_whitespace() || c == '<' || c == '>') {
            return Err(IriError(s));
        }
        Ok(Iri(s))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    /// Portion after the last `#`, `/` or `:`, e.g. `River` for `...ontology#River`.
    pub fn local_name(&self) -> &str {
        let s = self.0.as_str();
        match s.rfind(['#', '/', ':']) {
            Some(i) if i + 1 < s.len() => &s[i + 1..],
            _ => s,
        }
    }
}

impl fmt::Display for Iri {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Known-good IRI constant; panics only on programmer error.
pub(crate) fn iri(s: &str) -> Iri {
    Iri::new(s).expect("vocabulary IRI is valid")
}

/// Finite decimal wrapper so numeric terms can live in ordered/hashed
/// collections. Values are always finite by construction.
#[derive(Debug, Clone, Copy)]
pub struct Decimal(f64);

impl Decimal {
    pub fn new(v: f64) -> Option<Decimal> {
        v.is_finite().then_some(Decimal(v))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl PartialEq for Decimal {
    fn eq(&self, other: &Self) -> bool {
        self.0.to_bits() == other.0.to_bits()
    }
}
impl Eq for Decimal {}
impl std::hash::Hash for Decimal {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.0.to_bits().hash(state);
    }
}
impl PartialOrd for Decimal {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Decimal {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

impl fmt::Display for Decimal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.fract() == 0.0 && self.0.abs() < 1e15 {
            write!(f, "{}", self.0 as i64)
        } else {
            write!(f, "{}", self.0)
        }
    }
}

/// RDF term in object position (subjects are always IRIs here).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Iri(Iri),
    /// Untyped literal text.
    Plain(String),
    /// Literal with a numeric XSD datatype. The unit is carried for display
    /// only; plain N-Triples has no unit syntax so it is normally `None`.
    Numeric { value: Decimal, unit: Option<String> },
    /// Raw WKT text of a `geo:wktLiteral`.
    Wkt(String),
}

impl Term {
    pub fn iri(s: &str) -> Term {
        Term::Iri(iri(s))
    }

    pub fn number(v: f64) -> Term {
        Term::Numeric {
            value: Decimal::new(v).expect("finite numeric term"),
            unit: None,
        }
    }

    pub fn as_iri(&self) -> Option<&Iri> {
        match self {
            Term::Iri(i) => Some(i),
            _ => None,
        }
    }

    pub fn as_number(&self) -> Option<f64> {
        match self {
            Term::Numeric { value, .. } => Some(value.value()),
            // Be lenient: qualitative sources sometimes store numbers untyped.
            Term::Plain(s) => s.trim().parse::<f64>().ok().filter(|v| v.is_finite()),
            _ => None,
        }
    }

    pub fn text(&self) -> Option<&str> {
        match self {
            Term::Plain(s) => Some(s),
            _ => None,
        }
    }

    /// Canonical serialisation; also defines the sort order of result sets.
    pub fn serialized(&self) -> String {
        match self {
            Term::Iri(i) => format!("<{i}>"),
            Term::Plain(s) => format!("{s:?}"),
            Term::Numeric { value, .. } => value.to_string(),
            Term::Wkt(w) => format!("\"{w}\"^^<{}>", vocab::GEO_WKT_LITERAL),
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.serialized())
    }
}

/// A single source-tagged triple.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Triple {
    pub subject: Iri,
    pub predicate: Iri,
    pub object: Term,
    pub source: Source,
}

/// Per-file load outcome. Malformed lines are recorded, not fatal.
#[derive(Debug, Clone)]
pub struct LoadReport {
    pub file: String,
    pub source: Source,
    /// Triples accepted from this file (before cross-file deduplication).
    pub loaded: usize,
    /// `(1-based line number, reason)` for every rejected line.
    pub rejected: Vec<(usize, String)>,
}

#[derive(Debug, thiserror::Error)]
pub enum KbError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("manifest line {line}: expected `file<TAB>source`, got {text:?}")]
    Manifest { line: usize, text: String },
    #[error("manifest line {line}: unknown source tag {tag:?}")]
    UnknownSource { line: usize, tag: String },
}

/// Statistics backing selectivity estimation.
#[derive(Debug, Clone, Default)]
pub struct KbStats {
    pub total_triples: usize,
    pub distinct_subjects: usize,
    pub predicate_count: HashMap<Iri, usize>,
    pub predicate_object_count: HashMap<(Iri, Term), usize>,
}

impl KbStats {
    pub fn predicate(&self, p: &Iri) -> usize {
        self.predicate_count.get(p).copied().unwrap_or(0)
    }

    pub fn predicate_object(&self, p: &Iri, o: &Term) -> usize {
        self.predicate_object_count
            .get(&(p.clone(), o.clone()))
            .copied()
            .unwrap_or(0)
    }
}

/// Normalise a label for index lookups: case-fold, collapse internal
/// whitespace, strip punctuation hanging off the outside of each word.
pub fn normalize_label(s: &str) -> String {
    s.split_whitespace()
        .map(|w| w.trim_matches(|c: char| !c.is_alphanumeric()))
        .filter(|w| !w.is_empty())
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase()
}

/// Immutable knowledge base with derived indexes.
#[derive(Debug, Clone)]
pub struct KnowledgeBase {
    triples: Vec<Triple>,
    label_index: HashMap<String, BTreeSet<Iri>>,
    class_index: HashMap<Iri, BTreeSet<Iri>>,
    geometry_index: HashMap<Iri, Geometry>,
    same_as: HashMap<Iri, BTreeSet<Iri>>,
    by_predicate: HashMap<Iri, Vec<usize>>,
    by_subject: HashMap<Iri, Vec<usize>>,
    source_counts: BTreeMap<Source, usize>,
    stats: KbStats,
}

impl KnowledgeBase {
    pub fn builder() -> KbBuilder {
        KbBuilder::default()
    }

    /// Load every file listed in a `manifest.tsv` (`file<TAB>source` per
    /// line, paths relative to the manifest). Returns the store and the
    /// per-file load reports.
    pub fn load_manifest(manifest: &Path) -> Result<(KnowledgeBase, Vec<LoadReport>), KbError> {
        let text = std::fs::read_to_string(manifest).map_err(|e| KbError::Io {
            path: manifest.display().to_string(),
            source: e,
        })?;
        let base = manifest.parent().unwrap_or(Path::new("."));
        let mut builder = KbBuilder::default();
        let mut reports = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (file, tag) = line.split_once('\t').ok_or_else(|| KbError::Manifest {
                line: line_no,
                text: line.to_string(),
            })?;
            let source = Source::parse(tag.trim()).ok_or_else(|| KbError::UnknownSource {
                line: line_no,
                tag: tag.trim().to_string(),
            })?;
            reports.push(builder.load_ntriples(&base.join(file.trim()), source)?);
        }
        Ok((builder.build(), reports))
    }

    pub fn triples(&self) -> &[Triple] {
        &self.triples
    }

    pub fn stats(&self) -> &KbStats {
        &self.stats
    }

    pub fn source_counts(&self) -> &BTreeMap<Source, usize> {
        &self.source_counts
    }

    /// All subjects whose `rdfs:label` normalises to the same string as `label`.
    pub fn label_lookup(&self, label: &str) -> BTreeSet<Iri> {
        self.label_index
            .get(&normalize_label(label))
            .cloned()
            .unwrap_or_default()
    }

    /// Distinct instances of `class`, in IRI order.
    pub fn instances_of(&self, class: &Iri) -> BTreeSet<Iri> {
        self.class_index.get(class).cloned().unwrap_or_default()
    }

    /// Every class IRI in use, i.e. objects of `rdf:type`.
    pub fn classes(&self) -> impl Iterator<Item = &Iri> {
        self.class_index.keys()
    }

    /// Parsed geometry of a feature that has a complete
    /// `geo:hasGeometry`/`geo:asWKT` chain.
    pub fn geometry_of(&self, feature: &Iri) -> Option<&Geometry> {
        self.geometry_index.get(feature)
    }

    pub fn has_geometry(&self, feature: &Iri) -> bool {
        self.geometry_index.contains_key(feature)
    }

    /// `owl:sameAs` partners of `x` under the materialised symmetric closure.
    pub fn same_as(&self, x: &Iri) -> BTreeSet<Iri> {
        self.same_as.get(x).cloned().unwrap_or_default()
    }

    /// All `rdf:type` classes of `x` across sources.
    pub fn classes_of(&self, x: &Iri) -> BTreeSet<Iri> {
        let mut out = BTreeSet::new();
        for &i in self.by_subject.get(x).map(Vec::as_slice).unwrap_or(&[]) {
            let t = &self.triples[i];
            if t.predicate.as_str() == vocab::RDF_TYPE {
                if let Term::Iri(c) = &t.object {
                    out.insert(c.clone());
                }
            }
        }
        out
    }

    /// All `rdfs:label` strings of `x`.
    pub fn labels_of(&self, x: &Iri) -> Vec<String> {
        let mut out = Vec::new();
        for &i in self.by_subject.get(x).map(Vec::as_slice).unwrap_or(&[]) {
            let t = &self.triples[i];
            if t.predicate.as_str() == vocab::RDFS_LABEL {
                if let Term::Plain(s) = &t.object {
                    out.push(s.clone());
                }
            }
        }
        out.sort();
        out.dedup();
        out
    }

    /// Triple indexes with this predicate.
    /// Sources asserting any triple with this subject.
    pub fn entity_sources(&self, s: &Iri) -> BTreeSet<Source> {
        self.with_subject(s)
            .iter()
            .map(|&i| self.triples[i].source)
            .collect()
    }

    /// Highest-priority source asserting this subject, if any.
    pub fn entity_source(&self, s: &Iri) -> Option<Source> {
        self.entity_sources(s).into_iter().min_by_key(|s| s.priority())
    }

    /// Sources asserting any triple with this predicate.
    pub fn predicate_sources(&self, p: &Iri) -> BTreeSet<Source> {
        self.with_predicate(p)
            .iter()
            .map(|&i| self.triples[i].source)
            .collect()
    }

    pub fn with_predicate(&self, p: &Iri) -> &[usize] {
        self.by_predicate.get(p).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Triple indexes with this subject.
    pub fn with_subject(&self, s: &Iri) -> &[usize] {
        self.by_subject.get(s).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn triple(&self, idx: usize) -> &Triple {
        &self.triples[idx]
    }
}

/// Accumulates triples from several files, then freezes them into a
/// [`KnowledgeBase`]. Exact duplicates (same subject, predicate, object and
/// source tag) are dropped so reloading a file is idempotent.
#[derive(Default)]
pub struct KbBuilder {
    triples: Vec<Triple>,
    seen: HashSet<Triple>,
}

impl KbBuilder {
    pub fn load_ntriples(&mut self, path: &Path, source: Source) -> Result<LoadReport, KbError> {
        let text = std::fs::read_to_string(path).map_err(|e| KbError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        let mut report = self.load_ntriples_str(&text, source);
        report.file = path.display().to_string();
        Ok(report)
    }

    pub fn load_ntriples_str(&mut self, text: &str, source: Source) -> LoadReport {
        let mut report = LoadReport {
            file: String::from("<inline>"),
            source,
            loaded: 0,
            rejected: Vec::new(),
        };
        for (idx, line) in text.lines().enumerate() {
            let line_no = idx + 1;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            match parse_ntriples_line(trimmed, source) {
                Ok(triple) => {
                    report.loaded += 1;
                    if self.seen.insert(triple.clone()) {
                        self.triples.push(triple);
                    }
                }
                Err(reason) => report.rejected.push((line_no, reason)),
            }
        }
        report
    }

    pub fn add(&mut self, triple: Triple) {
        if self.seen.insert(triple.clone()) {
            self.triples.push(triple);
        }
    }

    pub fn build(mut self) -> KnowledgeBase {
        // Symmetric closure of owl:sameAs. Inverse triples inherit the
        // source tag of the asserted direction.
        let same_as_iri = iri(vocab::OWL_SAME_AS);
        let mut inverses = Vec::new();
        for t in &self.triples {
            if t.predicate == same_as_iri {
                if let Term::Iri(o) = &t.object {
                    inverses.push(Triple {
                        subject: o.clone(),
                        predicate: same_as_iri.clone(),
                        object: Term::Iri(t.subject.clone()),
                        source: t.source,
                    });
                }
            }
        }
        for inv in inverses {
            if self.seen.insert(inv.clone()) {
                self.triples.push(inv);
            }
        }

        let triples = self.triples;
        let mut label_index: HashMap<String, BTreeSet<Iri>> = HashMap::new();
        let mut class_index: HashMap<Iri, BTreeSet<Iri>> = HashMap::new();
        let mut same_as: HashMap<Iri, BTreeSet<Iri>> = HashMap::new();
        let mut by_predicate: HashMap<Iri, Vec<usize>> = HashMap::new();
        let mut by_subject: HashMap<Iri, Vec<usize>> = HashMap::new();
        let mut source_counts: BTreeMap<Source, usize> = BTreeMap::new();
        let mut predicate_count: HashMap<Iri, usize> = HashMap::new();
        let mut predicate_object_count: HashMap<(Iri, Term), usize> = HashMap::new();
        let mut subjects: HashSet<&Iri> = HashSet::new();

        for (i, t) in triples.iter().enumerate() {
            by_predicate.entry(t.predicate.clone()).or_default().push(i);
            by_subject.entry(t.subject.clone()).or_default().push(i);
            *source_counts.entry(t.source).or_default() += 1;
            *predicate_count.entry(t.predicate.clone()).or_default() += 1;
            *predicate_object_count
                .entry((t.predicate.clone(), t.object.clone()))
                .or_default() += 1;
            subjects.insert(&t.subject);

            match t.predicate.as_str() {
                vocab::RDFS_LABEL => {
                    if let Term::Plain(text) = &t.object {
                        let key = normalize_label(text);
                        if !key.is_empty() {
                            label_index.entry(key).or_default().insert(t.subject.clone());
                        }
                    }
                }
                vocab::RDF_TYPE => {
                    if let Term::Iri(c) = &t.object {
                        class_index.entry(c.clone()).or_default().insert(t.subject.clone());
                    }
                }
                vocab::OWL_SAME_AS => {
                    if let Term::Iri(o) = &t.object {
                        same_as.entry(t.subject.clone()).or_default().insert(o.clone());
                    }
                }
                _ => {}
            }
        }

        // Geometry index: subjects of complete hasGeometry/asWKT chains.
        // WKT text was validated at parse time, so parse failures here only
        // occur for hand-constructed stores and simply leave the feature out.
        let mut wkt_of_node: HashMap<&Iri, &str> = HashMap::new();
        for t in &triples {
            if t.predicate.as_str() == vocab::GEO_AS_WKT {
                if let Term::Wkt(w) = &t.object {
                    wkt_of_node.entry(&t.subject).or_insert(w.as_str());
                }
            }
        }
        let mut geometry_index: HashMap<Iri, Geometry> = HashMap::new();
        for t in &triples {
            if t.predicate.as_str() == vocab::GEO_HAS_GEOMETRY {
                if let Term::Iri(node) = &t.object {
                    if let Some(wkt) = wkt_of_node.get(node) {
                        if let Ok(g) = geometry::parse_wkt(wkt) {
                            geometry_index.entry(t.subject.clone()).or_insert(g);
                        }
                    }
                }
            }
        }

        let stats = KbStats {
            total_triples: triples.len(),
            distinct_subjects: subjects.len(),
            predicate_count,
            predicate_object_count,
        };

        KnowledgeBase {
            triples,
            label_index,
            class_index,
            geometry_index,
            same_as,
            by_predicate,
            by_subject,
            source_counts,
            stats,
        }
    }
}

/// Parse one `<s> <p> o .` line of the N-Triples subset.
fn parse_ntriples_line(line: &str, source: Source) -> Result<Triple, String> {
    let mut rest = line;
    let subject = take_iri(&mut rest)?;
    skip_ws(&mut rest);
    let predicate = take_iri(&mut rest)?;
    skip_ws(&mut rest);
    let object = take_object(&mut rest)?;
    skip_ws(&mut rest);
    if !rest.starts_with('.') {
        return Err("missing terminating '.'".into());
    }
    rest = &rest[1..];
    if !rest.trim().is_empty() {
        return Err(format!("trailing content after '.': {:?}", rest.trim()));
    }
    Ok(Triple {
        subject,
        predicate,
        object,
        source,
    })
}

fn skip_ws(rest: &mut &str) {
    *rest = rest.trim_start();
}

fn take_iri(rest: &mut &str) -> Result<Iri, String> {
    if !rest.starts_with('<') {
        if rest.starts_with("_:") {
            return Err("blank nodes are not supported".into());
        }
        return Err(format!("expected '<' at {:?})", head(rest)));
    }
    let end = rest.find('>').ok_or("unterminated IRI")?;
    let value = &rest[1..end];
    *rest = &rest[end + 1..];
    Iri::new(value).map_err(|e| e.to_string())
}

fn take_object(rest: &mut &str) -> Result<Term, String> {
    if rest.starts_with('<') {
        return Ok(Term::Iri(take_iri(rest)?));
    }
    if rest.starts_with("_:") {
        return Err("blank nodes are not supported".into());
    }
    if !rest.starts_with('"') {
        return Err(format!("expected IRI or literal at {:?}", head(rest)));
    }
    let text = take_quoted(rest)?;
    if rest.starts_with('@') {
        return Err("language-tagged literals are not supported".into());
    }
    if rest.starts_with("^^") {
        *rest = &rest[2..];
        let dt = take_iri(rest)?;
        let dt_str = dt.as_str();
        if vocab::is_wkt_datatype(dt_str) {
            geometry::parse_wkt(&text).map_err(|e| format!("bad WKT literal: {e}"))?;
            return Ok(Term::Wkt(text));
        }
        if vocab::is_numeric_datatype(dt_str) {
            let value: f64 = text
                .trim()
                .parse()
                .map_err(|_| format!("non-numeric lexical form {text:?} for {dt_str}"))?;
            let value =
                Decimal::new(value).ok_or_else(|| format!("non-finite numeric literal {text:?}"))?;
            return Ok(Term::Numeric { value, unit: None });
        }
        // Unknown datatype: keep the lexical form.
        return Ok(Term::Plain(text));
    }
    Ok(Term::Plain(text))
}

fn take_quoted(rest: &mut &str) -> Result<String, String> {
    debug_assert!(rest.starts_with('"'));
    let mut out = String::new();
    let mut chars = rest[1..].char_indices();
    loop {
        let (off, c) = chars.next().ok_or("unterminated literal")?;
        match c {
            '"' => {
                *rest = &rest[1 + off + 1..];
                return Ok(out);
            }
            '\\' => {
                let (_, esc) = chars.next().ok_or("dangling escape")?;
                match esc {
                    't' => out.push('\t'),
                    'n' => out.push('\n'),
                    'r' => out.push('\r'),
                    'b' => out.push('\u{8}'),
                    'f' => out.push('\u{c}'),
                    '"' => out.push('"'),
                    '\'' => out.push('\''),
                    '\\' => out.push('\\'),
                    'u' | 'U' => {
                        let need = if esc == 'u' { 4 } else { 8 };
                        let mut hex = String::new();
                        for _ in 0..need {
                            let (_, h) = chars.next().ok_or("truncated \\u escape")?;
                            hex.push(h);
                        }
                        let code =
                            u32::from_str_radix(&hex, 16).map_err(|_| "bad \\u escape digits")?;
                        out.push(char::from_u32(code).ok_or("invalid unicode escape")?);
                    }
                    other => return Err(format!("unknown escape \\{other}")),
                }
            }
            _ => out.push(c),
        }
    }
}

fn head(s: &str) -> String {
    s.chars().take(12).collect()
}
