//! Question annotation: tokens with lemma/POS/heads, then concept, instance,
//! spatial-relation, property, comparison and count annotations.
//!
//! Tagging uses closed word lists plus a capitalisation default; heads come
//! from a small deterministic heuristic. Gold CoNLL-U parses can be ingested
//! instead to bypass the heuristic parser.

use std::collections::BTreeMap;
use std::collections::BTreeSet;

use thiserror::Error;

use crate::kb::{Iri, KnowledgeBase, Source};
use crate::lexicon::{Lexicons, RelationKind};

/// Coarse part-of-speech tags.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pos {
    Noun,
    Propn,
    Verb,
    Adj,
    Adp,
    Num,
    Det,
    Other,
}

impl Pos {
    pub fn as_str(self) -> &'static str {
        match self {
            Pos::Noun => "NOUN",
            Pos::Propn => "PROPN",
            Pos::Verb => "VERB",
            Pos::Adj => "ADJ",
            Pos::Adp => "ADP",
            Pos::Num => "NUM",
            Pos::Det => "DET",
            Pos::Other => "OTHER",
        }
    }

    /// Map a Universal POS tag onto the coarse set.
    pub fn from_upos(s: &str) -> Pos {
        match s {
            "NOUN" => Pos::Noun,
            "PROPN" => Pos::Propn,
            "VERB" | "AUX" => Pos::Verb,
            "ADJ" => Pos::Adj,
            "ADP" => Pos::Adp,
            "NUM" => Pos::Num,
            "DET" => Pos::Det,
            _ => Pos::Other,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Token {
    pub text: String,
    pub lemma: String,
    pub pos: Pos,
    /// 1-based index of the governing token; 0 marks the root.
    pub head: usize,
    pub deprel: String,
}

/// Half-open token range `[start, end)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Span {
        Span { start, end }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Lt,
    Gt,
    Le,
    Ge,
}

impl CmpOp {
    pub fn as_str(self) -> &'static str {
        match self {
            CmpOp::Lt => "<",
            CmpOp::Gt => ">",
            CmpOp::Le => "<=",
            CmpOp::Ge => ">=",
        }
    }

    pub fn holds(self, lhs: f64, rhs: f64) -> bool {
        match self {
            CmpOp::Lt => lhs < rhs,
            CmpOp::Gt => lhs > rhs,
            CmpOp::Le => lhs <= rhs,
            CmpOp::Ge => lhs >= rhs,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Annotation {
    /// Matching class IRIs across all sources.
    Concept { classes: Vec<Iri>, lemma: String },
    /// Co-referent resource IRIs (gazetteer hits plus sameAs partners),
    /// ordered by source priority then IRI.
    Instance { resources: Vec<Iri>, label: String },
    Relation {
        kind: RelationKind,
        /// Present exactly for atMost/atLeast (metres).
        distance_m: Option<f64>,
    },
    Property {
        property: Iri,
        word: String,
        /// Literal substring constraint for value-table matches.
        value: Option<String>,
    },
    Comparison {
        op: CmpOp,
        value: f64,
        unit: Option<String>,
    },
    Count,
}

#[derive(Debug, Clone)]
pub struct AnnotatedTree {
    pub tokens: Vec<Token>,
    /// Non-overlapping spans ordered by start.
    pub annotations: Vec<(Span, Annotation)>,
}

impl AnnotatedTree {
    /// Does any Concept span start before `at`?
    pub fn concept_before(&self, at: usize) -> bool {
        self.annotations
            .iter()
            .any(|(s, a)| s.start < at && matches!(a, Annotation::Concept { .. }))
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum AnnotateError {
    #[error("empty question")]
    EmptyQuestion,
    #[error("unrecognized distance unit {0:?} (expected m/metre/meter or km/kilometre/kilometer)")]
    UnknownUnit(String),
    #[error("distance relation {0:?} is not followed by a number")]
    MissingDistance(String),
}

#[derive(Debug, Error, PartialEq)]
pub enum ConlluError {
    #[error("no token rows found")]
    Empty,
    #[error("line {line}: expected 10 tab-separated columns, got {got}")]
    Columns { line: usize, got: usize },
    #[error("line {line}: HEAD column {value:?} is not an integer")]
    BadHead { line: usize, value: String },
    #[error("line {line}: HEAD {head} out of range for {len} tokens")]
    HeadRange { line: usize, head: usize, len: usize },
    #[error("expected exactly one root (HEAD=0), found {0}")]
    RootCount(usize),
    #[error("head links form a cycle")]
    Cycle,
}

const DETERMINERS: &[&str] = &["the", "a", "an", "this", "that", "these", "those"];

const ADPOSITIONS: &[&str] = &[
    "in", "of", "at", "on", "by", "from", "to", "with", "under", "over", "near", "inside",
    "within", "around", "through", "between", "above", "below", "beside", "along",
];

const VERBS: &[&str] = &[
    "is", "are", "was", "were", "be", "been", "am", "do", "does", "did", "has", "have", "had",
    "cross", "crosses", "crossed", "flow", "flows", "flowed", "border", "borders", "bordered",
    "run", "runs", "located", "situated", "lie", "lies", "intersect", "intersects", "belong",
    "belongs",
];

const ADJECTIVES: &[&str] = &[
    "many", "much", "more", "most", "less", "least", "fewer", "few", "close", "closest", "far",
    "nearest", "high", "higher", "highest", "tall", "taller", "long", "longer", "large",
    "larger", "small", "smaller", "low", "lower", "big", "bigger", "great", "greater", "short",
    "shorter",
];

const OTHER_WORDS: &[&str] = &[
    "which", "what", "where", "who", "whom", "whose", "how", "when", "why", "than", "there",
    "and", "or", "not", "no",
];

/// Tokenize: whitespace split, punctuation trim, digit/letter boundary split.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for raw in text.split_whitespace() {
        let cleaned =
            raw.trim_matches(|c: char| c.is_ascii_punctuation() && c != '-' && c != '\'');
        if cleaned.is_empty() {
            continue;
        }
        // "2km" -> "2", "km"
        let chars: Vec<char> = cleaned.chars().collect();
        let mut boundary = None;
        for i in 1..chars.len() {
            let prev_numeric = chars[i - 1].is_ascii_digit() || chars[i - 1] == '.';
            if prev_numeric && chars[i].is_alphabetic() && chars[0].is_ascii_digit() {
                boundary = Some(i);
                break;
            }
        }
        match boundary {
            Some(i) => {
                out.push(chars[..i].iter().collect());
                out.push(chars[i..].iter().collect());
            }
            None => out.push(cleaned.to_string()),
        }
    }
    out
}

fn tag(form: &str, _index: usize) -> Pos {
    let lower = form.to_ascii_lowercase();
    if DETERMINERS.contains(&lower.as_str()) {
        Pos::Det
    } else if ADPOSITIONS.contains(&lower.as_str()) {
        Pos::Adp
    } else if VERBS.contains(&lower.as_str()) {
        Pos::Verb
    } else if ADJECTIVES.contains(&lower.as_str()) {
        Pos::Adj
    } else if OTHER_WORDS.contains(&lower.as_str()) {
        Pos::Other
    } else if form.parse::<f64>().is_ok() {
        Pos::Num
    } else if form.chars().next().is_some_and(char::is_uppercase) {
        Pos::Propn
    } else {
        Pos::Noun
    }
}

/// Plural-stripping lemma for open-class words, lowercased otherwise.
pub fn lemma_of(form: &str, pos: Pos) -> String {
    let lower = form.to_ascii_lowercase();
    if !matches!(pos, Pos::Noun | Pos::Propn | Pos::Verb) {
        return lower;
    }
    if let Some(stem) = lower.strip_suffix("ies") {
        if stem.len() >= 2 {
            return format!("{stem}y");
        }
    }
    if let Some(stem) = lower.strip_suffix("es") {
        if stem.ends_with('s')
            || stem.ends_with('x')
            || stem.ends_with('z')
            || stem.ends_with("ch")
            || stem.ends_with("sh")
        {
            return stem.to_string();
        }
    }
    if lower.len() > 3 && lower.ends_with('s') && !lower.ends_with("ss") {
        return lower[..lower.len() - 1].to_string();
    }
    lower
}

/// Tokenize, tag and attach heads with the deterministic heuristic.
pub fn parse_question(text: &str) -> Result<AnnotatedTree, AnnotateError> {
    let forms = tokenize(text);
    if forms.is_empty() {
        return Err(AnnotateError::EmptyQuestion);
    }
    let mut tokens: Vec<Token> = forms
        .iter()
        .enumerate()
        .map(|(i, f)| {
            let pos = tag(f, i);
            Token {
                text: f.clone(),
                lemma: lemma_of(f, pos),
                pos,
                head: 0,
                deprel: String::new(),
            }
        })
        .collect();
    attach_heads(&mut tokens);
    Ok(AnnotatedTree {
        tokens,
        annotations: Vec::new(),
    })
}

/// Root = first verb (else first token); adpositions attach to the nearest
/// preceding content token; nouns to the nearest preceding adposition or
/// verb; determiners and modifiers to the next noun; the rest to the root.
fn attach_heads(tokens: &mut [Token]) {
    let root = tokens
        .iter()
        .position(|t| t.pos == Pos::Verb)
        .unwrap_or(0);
    let pos: Vec<Pos> = tokens.iter().map(|t| t.pos).collect();
    let nearest_before = |i: usize, want: &dyn Fn(Pos) -> bool| -> Option<usize> {
        (0..i).rev().find(|&j| want(pos[j]))
    };
    let nearest_after = |i: usize, want: &dyn Fn(Pos) -> bool| -> Option<usize> {
        (i + 1..pos.len()).find(|&j| want(pos[j]))
    };
    for i in 0..tokens.len() {
        if i == root {
            tokens[i].head = 0;
            tokens[i].deprel = "root".into();
            continue;
        }
        let (head, deprel) = match pos[i] {
            Pos::Adp => (
                nearest_before(i, &|p| {
                    matches!(p, Pos::Noun | Pos::Propn | Pos::Verb)
                }),
                "case",
            ),
            Pos::Noun | Pos::Propn => (
                nearest_before(i, &|p| matches!(p, Pos::Adp | Pos::Verb)),
                "nmod",
            ),
            Pos::Det => (
                nearest_after(i, &|p| matches!(p, Pos::Noun | Pos::Propn)),
                "det",
            ),
            Pos::Adj => (
                nearest_after(i, &|p| matches!(p, Pos::Noun | Pos::Propn)),
                "amod",
            ),
            Pos::Num => (
                nearest_after(i, &|p| matches!(p, Pos::Noun | Pos::Propn)),
                "nummod",
            ),
            _ => (None, "dep"),
        };
        match head {
            Some(h) if h != i => {
                tokens[i].head = h + 1;
                tokens[i].deprel = deprel.into();
            }
            _ => {
                tokens[i].head = root + 1;
                tokens[i].deprel = deprel.into();
            }
        }
    }
}

/// Read the first sentence of a CoNLL-U block.
pub fn ingest_conllu(text: &str) -> Result<AnnotatedTree, ConlluError> {
    let mut tokens: Vec<Token> = Vec::new();
    let mut heads: Vec<(usize, usize)> = Vec::new(); // (line, head)
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let trimmed = line.trim_end();
        if trimmed.starts_with('#') {
            continue;
        }
        if trimmed.is_empty() {
            if tokens.is_empty() {
                continue;
            }
            break; // sentence boundary: keep the first sentence only
        }
        let cols: Vec<&str> = trimmed.split('\t').collect();
        if cols.len() != 10 {
            return Err(ConlluError::Columns {
                line: line_no,
                got: cols.len(),
            });
        }
        // Multiword ranges ("1-2") and empty nodes ("1.1") carry no head.
        if cols[0].contains('-') || cols[0].contains('.') {
            continue;
        }
        let head: usize = cols[6].parse().map_err(|_| ConlluError::BadHead {
            line: line_no,
            value: cols[6].to_string(),
        })?;
        let pos = Pos::from_upos(cols[3]);
        let lemma = if cols[2] == "_" {
            lemma_of(cols[1], pos)
        } else {
            cols[2].to_string()
        };
        tokens.push(Token {
            text: cols[1].to_string(),
            lemma,
            pos,
            head,
            deprel: cols[7].to_string(),
        });
        heads.push((line_no, head));
    }
    if tokens.is_empty() {
        return Err(ConlluError::Empty);
    }
    let n = tokens.len();
    for &(line, head) in &heads {
        if head > n {
            return Err(ConlluError::HeadRange { line, head, len: n });
        }
    }
    let roots = tokens.iter().filter(|t| t.head == 0).count();
    if roots != 1 {
        return Err(ConlluError::RootCount(roots));
    }
    // A head walk longer than n tokens never reached the root: cycle.
    for start in 0..n {
        let mut cur = start;
        let mut steps = 0;
        while tokens[cur].head != 0 {
            cur = tokens[cur].head - 1;
            steps += 1;
            if steps > n {
                return Err(ConlluError::Cycle);
            }
        }
    }
    Ok(AnnotatedTree {
        tokens,
        annotations: Vec::new(),
    })
}

/// "AdministrativeUnit" -> "administrative unit"; underscores become spaces.
pub fn decamelize(s: &str) -> String {
    let mut out = String::new();
    for (i, c) in s.chars().enumerate() {
        if c == '_' {
            out.push(' ');
        } else if c.is_uppercase() && i > 0 {
            out.push(' ');
            out.extend(c.to_lowercase());
        } else {
            out.extend(c.to_lowercase());
        }
    }
    out.split_whitespace().collect::<Vec<_>>().join(" ")
}

const PROPERTY_SIM_THRESHOLD: f64 = 0.75;
const MAX_INSTANCE_SPAN: usize = 6;

/// Run all identifier passes over a parsed tree.
pub fn annotate(
    tree: &mut AnnotatedTree,
    kb: &KnowledgeBase,
    lex: &Lexicons,
) -> Result<(), AnnotateError> {
    let n = tree.tokens.len();
    let mut used = vec![false; n];
    let mut anns: Vec<(Span, Annotation)> = Vec::new();

    identify_concepts(tree, kb, lex, &mut used, &mut anns);
    identify_instances(tree, kb, &mut used, &mut anns);
    identify_relations(tree, lex, &mut used, &mut anns)?;
    identify_properties(tree, kb, lex, &mut used, &mut anns);
    detect_count(tree, &mut used, &mut anns);

    anns.sort_by_key(|(s, _)| (s.start, s.end));
    tree.annotations = anns;
    Ok(())
}

/// Class-name gazetteer: labels plus decamelized local names, lowercased.
fn class_names(kb: &KnowledgeBase) -> BTreeMap<String, BTreeSet<Iri>> {
    let mut map: BTreeMap<String, BTreeSet<Iri>> = BTreeMap::new();
    for class in kb.classes() {
        let mut names: BTreeSet<String> = kb
            .labels_of(class)
            .iter()
            .map(|l| l.to_ascii_lowercase())
            .collect();
        names.insert(decamelize(class.local_name()));
        for name in names {
            map.entry(name).or_default().insert(class.clone());
        }
    }
    map
}

fn identify_concepts(
    tree: &AnnotatedTree,
    kb: &KnowledgeBase,
    lex: &Lexicons,
    used: &mut [bool],
    anns: &mut Vec<(Span, Annotation)>,
) {
    let names = class_names(kb);
    let n = tree.tokens.len();
    let mut i = 0;
    while i < n {
        if used[i] || tree.tokens[i].pos != Pos::Noun {
            i += 1;
            continue;
        }
        let lemma_at = |j: usize| lex.canonical_lemma(&tree.tokens[j].lemma).to_string();
        // Two-word compounds beat single nouns.
        let bigram = (i + 1 < n && !used[i + 1] && tree.tokens[i + 1].pos == Pos::Noun)
            .then(|| format!("{} {}", lemma_at(i), lemma_at(i + 1)));
        let hit = bigram
            .and_then(|name| names.get(&name).map(|c| (name, c, 2)))
            .or_else(|| {
                let name = lemma_at(i);
                names.get(&name).map(|c| (name.clone(), c, 1))
            });
        if let Some((name, classes, width)) = hit {
            for k in 0..width {
                used[i + k] = true;
            }
            anns.push((
                Span::new(i, i + width),
                Annotation::Concept {
                    classes: classes.iter().cloned().collect(),
                    lemma: name,
                },
            ));
            i += width;
        } else {
            i += 1;
        }
    }
}

fn identify_instances(
    tree: &AnnotatedTree,
    kb: &KnowledgeBase,
    used: &mut [bool],
    anns: &mut Vec<(Span, Annotation)>,
) {
    let n = tree.tokens.len();
    let mut i = 0;
    'outer: while i < n {
        if used[i] || !matches!(tree.tokens[i].pos, Pos::Propn | Pos::Noun) {
            i += 1;
            continue;
        }
        let mut end = i;
        while end < n
            && end - i < MAX_INSTANCE_SPAN
            && !used[end]
            && matches!(tree.tokens[end].pos, Pos::Propn | Pos::Noun)
        {
            end += 1;
        }
        for j in (i + 1..=end).rev() {
            let surface = tree.tokens[i..j]
                .iter()
                .map(|t| t.text.as_str())
                .collect::<Vec<_>>()
                .join(" ");
            let hits = kb.label_lookup(&surface);
            if hits.is_empty() {
                continue;
            }
            let mut resources: BTreeSet<Iri> = BTreeSet::new();
            for hit in &hits {
                resources.insert(hit.clone());
                resources.extend(kb.same_as(hit));
            }
            let mut ordered: Vec<Iri> = resources.into_iter().collect();
            ordered.sort_by_key(|r| {
                (
                    kb.entity_source(r).map(Source::priority).unwrap_or(u8::MAX),
                    r.clone(),
                )
            });
            for u in &mut used[i..j] {
                *u = true;
            }
            anns.push((
                Span::new(i, j),
                Annotation::Instance {
                    resources: ordered,
                    label: surface,
                },
            ));
            i = j;
            continue 'outer;
        }
        i += 1;
    }
}

fn metres_factor(word: &str) -> Option<f64> {
    match word {
        "m" | "metre" | "metres" | "meter" | "meters" => Some(1.0),
        "km" | "kilometre" | "kilometres" | "kilometer" | "kilometers" => Some(1000.0),
        _ => None,
    }
}

fn identify_relations(
    tree: &AnnotatedTree,
    lex: &Lexicons,
    used: &mut [bool],
    anns: &mut Vec<(Span, Annotation)>,
) -> Result<(), AnnotateError> {
    let n = tree.tokens.len();
    let matches_at = |i: usize, phrase: &[String], used: &[bool]| -> bool {
        i + phrase.len() <= n
            && phrase.iter().enumerate().all(|(k, w)| {
                !used[i + k]
                    && (tree.tokens[i + k].text.eq_ignore_ascii_case(w)
                        || tree.tokens[i + k].lemma == *w)
            })
    };
    let mut i = 0;
    'outer: while i < n {
        if used[i] {
            i += 1;
            continue;
        }
        for (phrase, kind) in &lex.relations {
            if !matches_at(i, phrase, used) {
                continue;
            }
            let mut end = i + phrase.len();
            let mut distance_m = None;
            if kind.takes_distance() {
                let num = (end < n && !used[end] && tree.tokens[end].pos == Pos::Num)
                    .then(|| tree.tokens[end].text.parse::<f64>().ok())
                    .flatten();
                let Some(value) = num else {
                    return Err(AnnotateError::MissingDistance(
                        phrase.join(" "),
                    ));
                };
                end += 1;
                let mut factor = 1.0;
                if end < n && !used[end] && tree.tokens[end].pos == Pos::Noun {
                    let unit = tree.tokens[end].text.to_ascii_lowercase();
                    factor = metres_factor(&unit)
                        .or_else(|| metres_factor(&tree.tokens[end].lemma))
                        .ok_or(AnnotateError::UnknownUnit(unit))?;
                    end += 1;
                }
                distance_m = Some(value * factor);
            }
            for u in &mut used[i..end] {
                *u = true;
            }
            anns.push((
                Span::new(i, end),
                Annotation::Relation {
                    kind: *kind,
                    distance_m,
                },
            ));
            i = end;
            continue 'outer;
        }
        i += 1;
    }
    Ok(())
}

/// Class keys scoping property lookups: concept classes when present, else
/// the classes of every instance annotation.
fn scope_keys(anns: &[(Span, Annotation)], kb: &KnowledgeBase) -> Vec<String> {
    let mut keys: BTreeSet<String> = BTreeSet::new();
    let mut saw_concept = false;
    for (_, a) in anns {
        if let Annotation::Concept { classes, .. } = a {
            saw_concept = true;
            keys.extend(classes.iter().map(crate::lexicon::class_key));
        }
    }
    if !saw_concept {
        for (_, a) in anns {
            if let Annotation::Instance { resources, .. } = a {
                for r in resources {
                    keys.extend(kb.classes_of(r).iter().map(crate::lexicon::class_key));
                }
            }
        }
    }
    keys.into_iter().collect()
}

const GT_WORDS: &[&str] = &["more", "greater", "higher", "taller", "longer", "larger", "bigger"];
const LT_WORDS: &[&str] = &["less", "fewer", "lower", "smaller", "shorter"];

fn identify_properties(
    tree: &AnnotatedTree,
    kb: &KnowledgeBase,
    lex: &Lexicons,
    used: &mut [bool],
    anns: &mut Vec<(Span, Annotation)>,
) {
    let n = tree.tokens.len();
    let keys = scope_keys(anns, kb);

    // (b) value-table modifiers directly before a concept are filters.
    let concept_spans: Vec<(Span, Vec<String>)> = anns
        .iter()
        .filter_map(|(s, a)| match a {
            Annotation::Concept { classes, .. } => {
                Some((*s, classes.iter().map(crate::lexicon::class_key).collect()))
            }
            _ => None,
        })
        .collect();
    for (span, class_keys) in &concept_spans {
        if span.start == 0 {
            continue;
        }
        let j = span.start - 1;
        if used[j] || !matches!(tree.tokens[j].pos, Pos::Propn | Pos::Adj | Pos::Noun) {
            continue;
        }
        let needle = tree.tokens[j].text.to_ascii_lowercase();
        if let Some(row) = lex
            .values_for(class_keys)
            .find(|row| row.value.to_ascii_lowercase().contains(&needle))
        {
            used[j] = true;
            anns.push((
                Span::new(j, j + 1),
                Annotation::Property {
                    property: row.property.clone(),
                    word: tree.tokens[j].text.clone(),
                    value: Some(tree.tokens[j].text.clone()),
                },
            ));
        }
    }

    // (c) comparison phrases: "<comparative> than <number> [unit]".
    let mut i = 0;
    while i + 2 < n {
        if used[i] || used[i + 1] || used[i + 2] {
            i += 1;
            continue;
        }
        let w = tree.tokens[i].text.to_ascii_lowercase();
        let op = if GT_WORDS.contains(&w.as_str()) {
            Some(CmpOp::Gt)
        } else if LT_WORDS.contains(&w.as_str()) {
            Some(CmpOp::Lt)
        } else {
            None
        };
        let than = tree.tokens[i + 1].text.eq_ignore_ascii_case("than");
        let value = (tree.tokens[i + 2].pos == Pos::Num)
            .then(|| tree.tokens[i + 2].text.parse::<f64>().ok())
            .flatten();
        if let (Some(op), true, Some(value)) = (op, than, value) {
            let mut end = i + 3;
            let mut unit = None;
            if end < n && !used[end] && metres_factor(&tree.tokens[end].lemma).is_some() {
                unit = Some(tree.tokens[end].text.to_ascii_lowercase());
                end += 1;
            }
            for u in &mut used[i..end] {
                *u = true;
            }
            anns.push((Span::new(i, end), Annotation::Comparison { op, value, unit }));
            i = end;
        } else {
            i += 1;
        }
    }

    // (a) attribute words against the class-scoped table by similarity.
    for (i, token) in tree.tokens.iter().enumerate().take(n) {
        if used[i] || !matches!(token.pos, Pos::Noun | Pos::Verb | Pos::Adj) {
            continue;
        }
        let lemma = &token.lemma;
        let form = token.text.to_ascii_lowercase();
        let mut best: Option<(f64, &crate::lexicon::PropertyEntry)> = None;
        for row in lex.properties_for(&keys) {
            let sim = crate::interlink::levenshtein_sim(lemma, &row.word)
                .max(crate::interlink::levenshtein_sim(&form, &row.word));
            if best.as_ref().is_none_or(|(b, _)| sim > *b) {
                best = Some((sim, row));
            }
        }
        if let Some((sim, row)) = best {
            if sim >= PROPERTY_SIM_THRESHOLD {
                used[i] = true;
                anns.push((
                    Span::new(i, i + 1),
                    Annotation::Property {
                        property: row.property.clone(),
                        word: row.word.clone(),
                        value: None,
                    },
                ));
            }
        }
    }
}

fn detect_count(tree: &AnnotatedTree, used: &mut [bool], anns: &mut Vec<(Span, Annotation)>) {
    if tree.tokens.len() >= 2
        && !used[0]
        && !used[1]
        && tree.tokens[0].text.eq_ignore_ascii_case("how")
        && tree.tokens[1].text.eq_ignore_ascii_case("many")
    {
        used[0] = true;
        used[1] = true;
        anns.push((Span::new(0, 2), Annotation::Count));
    }
}

/// Parse and annotate in one step.
pub fn annotate_question(
    text: &str,
    kb: &KnowledgeBase,
    lex: &Lexicons,
) -> Result<AnnotatedTree, AnnotateError> {
    let mut tree = parse_question(text)?;
    annotate(&mut tree, kb, lex)?;
    Ok(tree)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kb::Source;
    use crate::vocab;

    #[test]
    fn tokenizer_strips_punctuation_and_splits_units() {
        assert_eq!(
            tokenize("Which rivers cross Limerick?"),
            vec!["Which", "rivers", "cross", "Limerick"]
        );
        assert_eq!(tokenize("at most 2km from"), vec!["at", "most", "2", "km", "from"]);
        assert_eq!(tokenize("  "), Vec::<String>::new());
        assert_eq!(tokenize("(Oxford)."), vec!["Oxford"]);
    }

    #[test]
    fn tagger_and_lemmatizer() {
        let tree = parse_question("Which rivers cross Limerick?").unwrap();
        assert_eq!(tree.tokens.len(), 4);
        assert_eq!(tree.tokens[1].lemma, "river");
        assert_eq!(tree.tokens[1].pos, Pos::Noun);
        assert_eq!(tree.tokens[2].pos, Pos::Verb);
        assert_eq!(tree.tokens[3].pos, Pos::Propn);

        assert_eq!(lemma_of("churches", Pos::Noun), "church");
        assert_eq!(lemma_of("counties", Pos::Noun), "county");
        assert_eq!(lemma_of("hotels", Pos::Noun), "hotel");
        assert_eq!(lemma_of("crosses", Pos::Verb), "cross");
        assert_eq!(lemma_of("is", Pos::Verb), "is");
        assert_eq!(lemma_of("metres", Pos::Noun), "metre");
    }

    #[test]
    fn heuristic_heads_have_one_root_and_no_cycles() {
        for text in [
            "Which rivers cross Limerick?",
            "Is Hampshire north of Berkshire?",
            "What is the name of the river that flows under the Queensway Bridge in Liverpool?",
            "How many hospitals are there in Oxford?",
        ] {
            let tree = parse_question(text).unwrap();
            let roots = tree.tokens.iter().filter(|t| t.head == 0).count();
            assert_eq!(roots, 1, "{text}");
            let n = tree.tokens.len();
            for start in 0..n {
                let mut cur = start;
                let mut steps = 0;
                while tree.tokens[cur].head != 0 {
                    cur = tree.tokens[cur].head - 1;
                    steps += 1;
                    assert!(steps <= n, "cycle from token {start} in {text:?}");
                }
            }
        }
        let tree = parse_question("Which rivers cross Limerick?").unwrap();
        assert_eq!(tree.tokens[2].head, 0); // "cross" is the root
    }

    #[test]
    fn empty_question_is_an_error() {
        assert_eq!(parse_question("  ").unwrap_err(), AnnotateError::EmptyQuestion);
    }

    const CONLLU: &str = "\
# text = Which rivers cross Limerick?
1\tWhich\twhich\tDET\tWDT\t_\t2\tdet\t_\t_
2\trivers\triver\tNOUN\tNNS\t_\t3\tnsubj\t_\t_
3\tcross\tcross\tVERB\tVBP\t_\t0\troot\t_\t_
4\tLimerick\tLimerick\tPROPN\tNNP\t_\t3\tobj\t_\t_
";

    #[test]
    fn conllu_ingestion_maps_columns() {
        let tree = ingest_conllu(CONLLU).unwrap();
        assert_eq!(tree.tokens.len(), 4);
        assert_eq!(tree.tokens[1].lemma, "river");
        assert_eq!(tree.tokens[2].head, 0);
        assert_eq!(tree.tokens[3].deprel, "obj");
        assert_eq!(tree.tokens[3].pos, Pos::Propn);
    }

    #[test]
    fn conllu_errors() {
        assert_eq!(ingest_conllu("# only a comment\n").unwrap_err(), ConlluError::Empty);
        let bad_cols = "1\tA\ta\tNOUN\t_\t_\t0\troot\t_\n";
        assert!(matches!(
            ingest_conllu(bad_cols).unwrap_err(),
            ConlluError::Columns { line: 1, got: 9 }
        ));
        let bad_head = "1\tA\ta\tNOUN\t_\t_\tx\troot\t_\t_\n";
        assert!(matches!(
            ingest_conllu(bad_head).unwrap_err(),
            ConlluError::BadHead { line: 1, .. }
        ));
        let cycle = "1\tA\ta\tNOUN\t_\t_\t2\tdep\t_\t_\n\
                     2\tB\tb\tNOUN\t_\t_\t1\tdep\t_\t_\n\
                     3\tC\tc\tVERB\t_\t_\t0\troot\t_\t_\n";
        assert_eq!(ingest_conllu(cycle).unwrap_err(), ConlluError::Cycle);
        let range = "1-2\tcannot\t_\t_\t_\t_\t_\t_\t_\t_\n\
                     1\tcan\tcan\tVERB\t_\t_\t0\troot\t_\t_\n\
                     2\tnot\tnot\tADV\t_\t_\t1\tadvmod\t_\t_\n";
        assert_eq!(ingest_conllu(range).unwrap().tokens.len(), 2);
    }

    #[test]
    fn decamelize_splits_words() {
        assert_eq!(decamelize("AdministrativeUnit"), "administrative unit");
        assert_eq!(decamelize("River"), "river");
        assert_eq!(decamelize("Administrative_Unit"), "administrative unit");
    }

    fn mini_world() -> (KnowledgeBase, Lexicons) {
        let osm = format!(
            "<http://o/ontology#River> <{t}> <http://www.w3.org/2000/01/rdf-schema#Class> .\n\
             <http://o/ontology#Restaurant> <{t}> <http://www.w3.org/2000/01/rdf-schema#Class> .\n\
             <http://o/river/shannon> <{t}> <http://o/ontology#River> .\n\
             <http://o/river/shannon> <{l}> \"Shannon\" .\n\
             <http://o/rest/taverna> <{t}> <http://o/ontology#Restaurant> .\n\
             <http://o/rest/taverna> <{l}> \"Taverna Hellas\" .\n",
            t = vocab::RDF_TYPE,
            l = vocab::RDFS_LABEL
        );
        let gadm = format!(
            "<http://g/limerick> <{t}> <http://g/ontology#AdministrativeUnit> .\n\
             <http://g/limerick> <{l}> \"Limerick\" .\n",
            t = vocab::RDF_TYPE,
            l = vocab::RDFS_LABEL
        );
        let dbp = format!(
            "<http://d/resource/River_Shannon> <{t}> <http://d/ontology/River> .\n\
             <http://d/resource/River_Shannon> <{l}> \"River Shannon\" .\n\
             <http://d/resource/Limerick> <{t}> <http://d/ontology/City> .\n\
             <http://d/resource/Limerick> <{l}> \"Limerick\" .\n",
            t = vocab::RDF_TYPE,
            l = vocab::RDFS_LABEL
        );
        let links = format!(
            "<http://o/river/shannon> <{s}> <http://d/resource/River_Shannon> .\n",
            s = vocab::OWL_SAME_AS
        );
        let mut b = KnowledgeBase::builder();
        for (text, source) in [
            (&osm, Source::Osm),
            (&gadm, Source::Gadm),
            (&dbp, Source::Dbpedia),
            (&links, Source::Links),
        ] {
            let report = b.load_ntriples_str(text, source);
            assert!(report.rejected.is_empty(), "{:?}", report.rejected);
        }
        let kb = b.build();
        let lex = Lexicons::from_strs(
            "eatery\trestaurant\n",
            "in\twithin\ncross\tcrosses\ncrosses\tcrosses\nat most\tatMost\nclose to\tnear\n",
            "river\thttp://d/property/length\tlength\n\
             river\thttp://d/property/name\tname\n",
            "restaurant\thttp://d/ontology/cuisine\tGreek cuisine\n",
            "river\tcrosses\thttp://d/ontology/city\n",
            "",
        )
        .unwrap();
        (kb, lex)
    }

    #[test]
    fn full_annotation_of_a_cri_question() {
        let (kb, lex) = mini_world();
        let tree = annotate_question("Which rivers cross Limerick?", &kb, &lex).unwrap();
        let kinds: Vec<&Annotation> = tree.annotations.iter().map(|(_, a)| a).collect();
        assert_eq!(kinds.len(), 3);
        match &kinds[0] {
            Annotation::Concept { classes, lemma } => {
                assert_eq!(lemma, "river");
                let ids: Vec<&str> = classes.iter().map(Iri::as_str).collect();
                assert_eq!(ids, vec!["http://d/ontology/River", "http://o/ontology#River"]);
            }
            other => panic!("expected concept, got {other:?}"),
        }
        match &kinds[1] {
            Annotation::Relation { kind, distance_m } => {
                assert_eq!(*kind, RelationKind::Crosses);
                assert_eq!(*distance_m, None);
            }
            other => panic!("expected relation, got {other:?}"),
        }
        match &kinds[2] {
            Annotation::Instance { resources, label } => {
                assert_eq!(label, "Limerick");
                // gadm outranks dbpedia in the disambiguation order.
                let ids: Vec<&str> = resources.iter().map(Iri::as_str).collect();
                assert_eq!(ids, vec!["http://g/limerick", "http://d/resource/Limerick"]);
            }
            other => panic!("expected instance, got {other:?}"),
        }
    }

    #[test]
    fn synonyms_reach_the_same_concept() {
        let (kb, lex) = mini_world();
        let tree = annotate_question("Which eateries are in Limerick?", &kb, &lex).unwrap();
        assert!(tree.annotations.iter().any(|(_, a)| matches!(
            a,
            Annotation::Concept { lemma, .. } if lemma == "restaurant"
        )));
    }

    #[test]
    fn instance_expands_through_same_as() {
        let (kb, lex) = mini_world();
        let tree = annotate_question("Shannon", &kb, &lex).unwrap();
        let (_, a) = &tree.annotations[0];
        match a {
            Annotation::Instance { resources, .. } => {
                let ids: Vec<&str> = resources.iter().map(Iri::as_str).collect();
                assert_eq!(
                    ids,
                    vec!["http://o/river/shannon", "http://d/resource/River_Shannon"]
                );
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn at_most_parses_kilometres_into_metres() {
        let (kb, lex) = mini_world();
        let tree =
            annotate_question("Which rivers are at most 2 km from Limerick?", &kb, &lex).unwrap();
        let rel = tree
            .annotations
            .iter()
            .find_map(|(_, a)| match a {
                Annotation::Relation { kind, distance_m } => Some((*kind, *distance_m)),
                _ => None,
            })
            .unwrap();
        assert_eq!(rel, (RelationKind::AtMost, Some(2000.0)));
    }

    #[test]
    fn unknown_unit_is_rejected() {
        let (kb, lex) = mini_world();
        let err =
            annotate_question("Which rivers are at most 2 miles from Limerick?", &kb, &lex)
                .unwrap_err();
        assert_eq!(err, AnnotateError::UnknownUnit("miles".into()));
    }

    #[test]
    fn value_modifier_becomes_a_constrained_property() {
        let (kb, lex) = mini_world();
        let tree = annotate_question("Which Greek restaurants are in Limerick?", &kb, &lex)
            .unwrap();
        let prop = tree
            .annotations
            .iter()
            .find_map(|(_, a)| match a {
                Annotation::Property { property, value, .. } => {
                    Some((property.as_str().to_string(), value.clone()))
                }
                _ => None,
            })
            .unwrap();
        assert_eq!(prop.0, "http://d/ontology/cuisine");
        assert_eq!(prop.1, Some("Greek".into()));
    }

    #[test]
    fn comparison_binds_value_and_unit() {
        let (kb, lex) = mini_world();
        let tree = annotate_question(
            "Which rivers have length more than 100 km?",
            &kb,
            &lex,
        )
        .unwrap();
        let cmp = tree
            .annotations
            .iter()
            .find_map(|(_, a)| match a {
                Annotation::Comparison { op, value, unit } => {
                    Some((*op, *value, unit.clone()))
                }
                _ => None,
            })
            .unwrap();
        assert_eq!(cmp, (CmpOp::Gt, 100.0, Some("km".into())));
        // "length" resolves against the river-scoped property table.
        assert!(tree.annotations.iter().any(|(_, a)| matches!(
            a,
            Annotation::Property { word, value: None, .. } if word == "length"
        )));
    }

    #[test]
    fn count_needs_the_leading_bigram() {
        let (kb, lex) = mini_world();
        let yes = annotate_question("How many rivers cross Limerick?", &kb, &lex).unwrap();
        assert!(yes.annotations.iter().any(|(_, a)| matches!(a, Annotation::Count)));
        let no = annotate_question("Which rivers cross Limerick?", &kb, &lex).unwrap();
        assert!(!no.annotations.iter().any(|(_, a)| matches!(a, Annotation::Count)));
    }

    #[test]
    fn spans_never_overlap() {
        let (kb, lex) = mini_world();
        let tree = annotate_question(
            "Which Greek restaurants are at most 2 km from Limerick?",
            &kb,
            &lex,
        )
        .unwrap();
        let mut last_end = 0;
        for (span, _) in &tree.annotations {
            assert!(span.start >= last_end, "overlap at {span:?}");
            last_end = span.end;
        }
    }
}
