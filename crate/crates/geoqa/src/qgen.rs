//! Pattern detection and template-based query generation.
//!
//! The annotated tree is reduced to a letter sequence (C/I/R/P/N) which
//! selects one of nine question patterns. Each pattern instantiates into
//! every applicable query variant — qualitative (relation mapped to a data
//! property) and geometric (spatial filter over WKT, directly or through a
//! sameAs hop) — which are then ranked by estimated result cardinality.

use std::collections::BTreeMap;
use std::fmt;

use crate::annotate::{Annotation, AnnotatedTree, CmpOp, Span};
use crate::geometry::CardinalDirection;
use crate::kb::{iri, Iri, KbStats, KnowledgeBase, Source, Term};
use crate::lexicon::{class_key, Lexicons, RelationKind};
use crate::vocab;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum QuestionPattern {
    Ip,
    Cri,
    Criri,
    Crc,
    Crcri,
    Iri,
    Ncri,
    Pcri,
    Pcriri,
}

impl QuestionPattern {
    pub fn as_str(self) -> &'static str {
        match self {
            QuestionPattern::Ip => "IP",
            QuestionPattern::Cri => "CRI",
            QuestionPattern::Criri => "CRIRI",
            QuestionPattern::Crc => "CRC",
            QuestionPattern::Crcri => "CRCRI",
            QuestionPattern::Iri => "IRI",
            QuestionPattern::Ncri => "NCRI",
            QuestionPattern::Pcri => "PCRI",
            QuestionPattern::Pcriri => "PCRIRI",
        }
    }

    pub fn parse(s: &str) -> Option<QuestionPattern> {
        Some(match s {
            "IP" => QuestionPattern::Ip,
            "CRI" => QuestionPattern::Cri,
            "CRIRI" => QuestionPattern::Criri,
            "CRC" => QuestionPattern::Crc,
            "CRCRI" => QuestionPattern::Crcri,
            "IRI" => QuestionPattern::Iri,
            "NCRI" => QuestionPattern::Ncri,
            "PCRI" => QuestionPattern::Pcri,
            "PCRIRI" => QuestionPattern::Pcriri,
            _ => return None,
        })
    }
}

impl fmt::Display for QuestionPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone)]
pub struct PatternDetection {
    /// Canonical letter sequence: optional N, optional answer-position P,
    /// then the surface C/I/R letters.
    pub letters: String,
    pub pattern: Option<QuestionPattern>,
}

/// Reduce the annotations to a letter sequence and match it.
///
/// Value-constrained properties and comparisons are filters and emit no
/// letter. A plain property is in answer position — and prefixes P — only
/// when no concept precedes it; otherwise it is a filter too.
pub fn detect_pattern(tree: &AnnotatedTree) -> PatternDetection {
    let mut surface = String::new();
    let mut has_count = false;
    let mut answer_p = false;
    for (span, ann) in &tree.annotations {
        match ann {
            Annotation::Concept { .. } => surface.push('C'),
            Annotation::Instance { .. } => surface.push('I'),
            Annotation::Relation { .. } => surface.push('R'),
            Annotation::Count => has_count = true,
            Annotation::Property { value: None, .. } if !tree.concept_before(span.start) => {
                answer_p = true;
            }
            Annotation::Property { .. } | Annotation::Comparison { .. } => {}
        }
    }
    let mut letters = String::new();
    if has_count {
        letters.push('N');
    }
    if answer_p {
        letters.push('P');
    }
    letters.push_str(&surface);
    let pattern = match letters.as_str() {
        "PI" => Some(QuestionPattern::Ip),
        "CRI" => Some(QuestionPattern::Cri),
        "CRIRI" => Some(QuestionPattern::Criri),
        "CRC" => Some(QuestionPattern::Crc),
        "CRCRI" => Some(QuestionPattern::Crcri),
        "IRI" => Some(QuestionPattern::Iri),
        "NCRI" => Some(QuestionPattern::Ncri),
        "PCRI" => Some(QuestionPattern::Pcri),
        "PCRIRI" => Some(QuestionPattern::Pcriri),
        _ => None,
    };
    PatternDetection { letters, pattern }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum VarOrIri {
    Var(String),
    Iri(Iri),
}

#[derive(Debug, Clone, PartialEq)]
pub enum VarOrTerm {
    Var(String),
    Term(Term),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TriplePattern {
    pub s: VarOrIri,
    pub p: VarOrIri,
    pub o: VarOrTerm,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpatialFn {
    Within,
    Crosses,
    Touches,
    DistanceLE(f64),
    DistanceGE(f64),
    Cardinal(CardinalDirection),
}

impl SpatialFn {
    pub fn name(&self) -> String {
        match self {
            SpatialFn::Within => "sfWithin".into(),
            SpatialFn::Crosses => "sfCrosses".into(),
            SpatialFn::Touches => "sfTouches".into(),
            SpatialFn::DistanceLE(m) => format!("distanceLE:{m}"),
            SpatialFn::DistanceGE(m) => format!("distanceGE:{m}"),
            SpatialFn::Cardinal(d) => format!("cardinal:{}", d.as_str()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FilterExpr {
    /// Spatial predicate over two WKT-bearing variables.
    Spatial { func: SpatialFn, a: String, b: String },
    ValueCmp { var: String, op: CmpOp, constant: f64 },
    ValueContains { var: String, needle: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Variant {
    GeometricV1,
    GeometricV2,
    Qualitative,
}

impl Variant {
    pub fn as_str(self) -> &'static str {
        match self {
            Variant::GeometricV1 => "geometric-v1",
            Variant::GeometricV2 => "geometric-v2",
            Variant::Qualitative => "qualitative",
        }
    }

    /// Tie-break priority: v1 before v2 before qualitative.
    fn priority(self) -> u8 {
        match self {
            Variant::GeometricV1 => 0,
            Variant::GeometricV2 => 1,
            Variant::Qualitative => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QueryForm {
    Select,
    Ask,
    Count,
}

#[derive(Debug, Clone)]
pub struct GeneratedQuery {
    pub form: QueryForm,
    pub bgp: Vec<TriplePattern>,
    pub filters: Vec<FilterExpr>,
    /// Projection variable; None exactly for ASK.
    pub target_var: Option<String>,
    /// Slot name to chosen IRI/value, for provenance and tie-breaking.
    pub slots: BTreeMap<String, String>,
    pub variant: Variant,
    pub est_card: f64,
}

impl GeneratedQuery {
    fn vars_of(tp: &TriplePattern) -> Vec<&str> {
        let mut vars = Vec::new();
        if let VarOrIri::Var(v) = &tp.s {
            vars.push(v.as_str());
        }
        if let VarOrIri::Var(v) = &tp.p {
            vars.push(v.as_str());
        }
        if let VarOrTerm::Var(v) = &tp.o {
            vars.push(v.as_str());
        }
        vars
    }

    /// Check the structural invariants: target var used in the BGP (SELECT
    /// and COUNT), no target for ASK, every filter variable bound.
    pub fn validate(&self) -> Result<(), String> {
        let bound: Vec<&str> = self.bgp.iter().flat_map(Self::vars_of).collect();
        match (&self.form, &self.target_var) {
            (QueryForm::Ask, Some(v)) => return Err(format!("ASK query has target ?{v}")),
            (QueryForm::Ask, None) => {}
            (_, None) => return Err("SELECT/COUNT query without target".into()),
            (_, Some(v)) => {
                if !bound.contains(&v.as_str()) {
                    return Err(format!("target ?{v} not bound in BGP"));
                }
            }
        }
        for f in &self.filters {
            let vars: Vec<&str> = match f {
                FilterExpr::Spatial { a, b, .. } => vec![a.as_str(), b.as_str()],
                FilterExpr::ValueCmp { var, .. } | FilterExpr::ValueContains { var, .. } => {
                    vec![var.as_str()]
                }
            };
            for v in vars {
                if !bound.contains(&v) {
                    return Err(format!("filter variable ?{v} not bound in BGP"));
                }
            }
        }
        Ok(())
    }
}

/// Cardinality estimates span many orders of magnitude; keep small ones
/// legible instead of rounding them to 0.000000.
pub fn fmt_est(est: f64) -> String {
    if est == 0.0 || est >= 0.001 {
        format!("{est:.6}")
    } else {
        format!("{est:.3e}")
    }
}

impl fmt::Display for GeneratedQuery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let head = match (&self.form, &self.target_var) {
            (QueryForm::Select, Some(v)) => format!("SELECT DISTINCT ?{v}"),
            (QueryForm::Count, Some(v)) => format!("SELECT (COUNT(DISTINCT ?{v}) AS ?total)"),
            (QueryForm::Ask, _) => "ASK".into(),
            _ => "SELECT".into(),
        };
        writeln!(
            f,
            "{head} {{  # {} est={}",
            self.variant.as_str(),
            fmt_est(self.est_card)
        )?;
        for tp in &self.bgp {
            let s = match &tp.s {
                VarOrIri::Var(v) => format!("?{v}"),
                VarOrIri::Iri(i) => format!("<{i}>"),
            };
            let p = match &tp.p {
                VarOrIri::Var(v) => format!("?{v}"),
                VarOrIri::Iri(i) => format!("<{i}>"),
            };
            let o = match &tp.o {
                VarOrTerm::Var(v) => format!("?{v}"),
                VarOrTerm::Term(t) => t.serialized(),
            };
            writeln!(f, "  {s} {p} {o} .")?;
        }
        for flt in &self.filters {
            match flt {
                FilterExpr::Spatial { func, a, b } => match func {
                    SpatialFn::DistanceLE(m) => {
                        writeln!(f, "  FILTER (distance(?{a}, ?{b}) <= {m})")?
                    }
                    SpatialFn::DistanceGE(m) => {
                        writeln!(f, "  FILTER (distance(?{a}, ?{b}) >= {m})")?
                    }
                    _ => writeln!(f, "  FILTER {}(?{a}, ?{b})", func.name())?,
                },
                FilterExpr::ValueCmp { var, op, constant } => {
                    writeln!(f, "  FILTER (?{var} {} {constant})", op.as_str())?
                }
                FilterExpr::ValueContains { var, needle } => {
                    writeln!(f, "  FILTER contains(?{var}, {needle:?})")?
                }
            }
        }
        write!(f, "}}")
    }
}

/// Everything the generator produced for one question.
#[derive(Debug, Clone)]
pub struct Generated {
    pub detection: PatternDetection,
    pub logical_form: Option<String>,
    /// Ranked queries, best first.
    pub queries: Vec<GeneratedQuery>,
    pub diagnostics: Vec<String>,
}

// ---- slot extraction ----------------------------------------------------

struct ConceptSlot<'a> {
    classes: &'a [Iri],
    lemma: &'a str,
}

struct InstanceSlot<'a> {
    resources: &'a [Iri],
    label: &'a str,
}

struct RelationSlot {
    kind: RelationKind,
    distance_m: Option<f64>,
}

struct PropertySlot<'a> {
    span: Span,
    property: &'a Iri,
    word: &'a str,
    value: Option<&'a str>,
    answer: bool,
}

struct Slots<'a> {
    concepts: Vec<ConceptSlot<'a>>,
    instances: Vec<InstanceSlot<'a>>,
    relations: Vec<RelationSlot>,
    properties: Vec<PropertySlot<'a>>,
    comparisons: Vec<(Span, CmpOp, f64)>,
}

fn extract_slots<'a>(tree: &'a AnnotatedTree) -> Slots<'a> {
    let mut slots = Slots {
        concepts: Vec::new(),
        instances: Vec::new(),
        relations: Vec::new(),
        properties: Vec::new(),
        comparisons: Vec::new(),
    };
    for (span, ann) in &tree.annotations {
        match ann {
            Annotation::Concept { classes, lemma } => slots.concepts.push(ConceptSlot {
                classes,
                lemma,
            }),
            Annotation::Instance { resources, label } => slots.instances.push(InstanceSlot {
                resources,
                label,
            }),
            Annotation::Relation { kind, distance_m } => slots.relations.push(RelationSlot {
                kind: *kind,
                distance_m: *distance_m,
            }),
            Annotation::Property { property, word, value } => {
                let answer = value.is_none() && !tree.concept_before(span.start);
                slots.properties.push(PropertySlot {
                    span: *span,
                    property,
                    word,
                    value: value.as_deref(),
                    answer,
                });
            }
            Annotation::Comparison { op, value, .. } => {
                slots.comparisons.push((*span, *op, *value))
            }
            Annotation::Count => {}
        }
    }
    slots
}

/// Extra filter clauses derived from property/comparison annotations,
/// applied to the concept variable in every variant.
enum ExtraFilter<'a> {
    Contains { property: &'a Iri, needle: &'a str },
    Cmp { property: &'a Iri, op: CmpOp, value: f64 },
}

fn extra_filters<'a>(
    slots: &'a Slots<'a>,
    diagnostics: &mut Vec<String>,
) -> (Vec<ExtraFilter<'a>>, Option<(CmpOp, f64)>) {
    let mut filters = Vec::new();
    let mut answer_cmp = None;
    let mut cmp_bound = vec![false; slots.properties.len()];
    for (span, op, value) in &slots.comparisons {
        // Bind each comparison to the nearest property annotation.
        let nearest = slots
            .properties
            .iter()
            .enumerate()
            .filter(|(_, p)| p.value.is_none())
            .min_by_key(|(_, p)| {
                (p.span.start.abs_diff(span.start), p.span.start)
            });
        match nearest {
            Some((idx, p)) if p.answer => {
                answer_cmp = Some((*op, *value));
                cmp_bound[idx] = true;
            }
            Some((idx, p)) => {
                filters.push(ExtraFilter::Cmp {
                    property: p.property,
                    op: *op,
                    value: *value,
                });
                cmp_bound[idx] = true;
            }
            None => diagnostics.push(format!(
                "comparison at token {} has no property to bind to",
                span.start
            )),
        }
    }
    for (idx, p) in slots.properties.iter().enumerate() {
        if let Some(needle) = p.value {
            filters.push(ExtraFilter::Contains {
                property: p.property,
                needle,
            });
        } else if !p.answer && !cmp_bound[idx] {
            diagnostics.push(format!(
                "property {:?} is neither projected nor constrained; ignored",
                p.word
            ));
        }
    }
    (filters, answer_cmp)
}

// ---- query assembly -----------------------------------------------------

/// Most frequent asserting source of `rdf:type … class` triples, by
/// priority; drives direct-vs-linked property routing.
fn class_source(kb: &KnowledgeBase, class: &Iri) -> Option<Source> {
    let rdf_type = iri(vocab::RDF_TYPE);
    kb.with_predicate(&rdf_type)
        .iter()
        .map(|&i| kb.triple(i))
        .filter(|t| matches!(&t.object, Term::Iri(o) if o == class))
        .map(|t| t.source)
        .min_by_key(|s| s.priority())
}

struct Builder {
    form: QueryForm,
    variant: Variant,
    bgp: Vec<TriplePattern>,
    filters: Vec<FilterExpr>,
    slots: BTreeMap<String, String>,
    pv_counter: usize,
}

impl Builder {
    fn new(form: QueryForm, variant: Variant) -> Builder {
        Builder {
            form,
            variant,
            bgp: Vec::new(),
            filters: Vec::new(),
            slots: BTreeMap::new(),
            pv_counter: 0,
        }
    }

    fn slot(&mut self, name: &str, value: impl fmt::Display) {
        self.slots.insert(name.to_string(), value.to_string());
    }

    fn pattern(&mut self, s: VarOrIri, p: Iri, o: VarOrTerm) {
        self.bgp.push(TriplePattern {
            s,
            p: VarOrIri::Iri(p),
            o,
        });
    }

    fn type_pattern(&mut self, var: &str, class: &Iri) {
        self.pattern(
            VarOrIri::Var(var.into()),
            iri(vocab::RDF_TYPE),
            VarOrTerm::Term(Term::Iri(class.clone())),
        );
    }

    /// `?var geo:hasGeometry ?varGeom . ?varGeom geo:asWKT ?varWKT`
    fn geom_chain_var(&mut self, var: &str) -> String {
        let geom = format!("{var}Geom");
        let wkt = format!("{var}WKT");
        self.pattern(
            VarOrIri::Var(var.into()),
            iri(vocab::GEO_HAS_GEOMETRY),
            VarOrTerm::Var(geom.clone()),
        );
        self.pattern(
            VarOrIri::Var(geom),
            iri(vocab::GEO_AS_WKT),
            VarOrTerm::Var(wkt.clone()),
        );
        wkt
    }

    /// Geometry chain rooted at a constant instance IRI.
    fn geom_chain_iri(&mut self, name: &str, instance: &Iri) -> String {
        let geom = format!("{name}Geom");
        let wkt = format!("{name}WKT");
        self.pattern(
            VarOrIri::Iri(instance.clone()),
            iri(vocab::GEO_HAS_GEOMETRY),
            VarOrTerm::Var(geom.clone()),
        );
        self.pattern(
            VarOrIri::Var(geom),
            iri(vocab::GEO_AS_WKT),
            VarOrTerm::Var(wkt.clone()),
        );
        wkt
    }

    /// v2 hop: `?name owl:sameAs <instance>` plus the chain on `?name`.
    fn link_chain(&mut self, name: &str, instance: &Iri) -> String {
        self.pattern(
            VarOrIri::Var(name.into()),
            iri(vocab::OWL_SAME_AS),
            VarOrTerm::Term(Term::Iri(instance.clone())),
        );
        self.geom_chain_var(name)
    }

    /// Property access on `?var`, through `?varLink owl:sameAs` when the
    /// property's triples come from a different source than the class.
    fn property_on(&mut self, var: &str, property: &Iri, value_var: &str, direct: bool) {
        if direct {
            self.pattern(
                VarOrIri::Var(var.into()),
                property.clone(),
                VarOrTerm::Var(value_var.into()),
            );
        } else {
            let link = format!("{var}Link");
            if !self.bgp.iter().any(|tp| {
                matches!(&tp.s, VarOrIri::Var(v) if *v == var)
                    && matches!(&tp.p, VarOrIri::Iri(p) if p.as_str() == vocab::OWL_SAME_AS)
            }) {
                self.pattern(
                    VarOrIri::Var(var.into()),
                    iri(vocab::OWL_SAME_AS),
                    VarOrTerm::Var(link.clone()),
                );
            }
            self.pattern(
                VarOrIri::Var(link),
                property.clone(),
                VarOrTerm::Var(value_var.into()),
            );
        }
    }

    /// Attach the annotation-derived value filters to `?var`.
    fn apply_extra_filters(
        &mut self,
        var: &str,
        extras: &[ExtraFilter<'_>],
        routing_source: Option<Source>,
        kb: &KnowledgeBase,
    ) {
        for extra in extras {
            let value_var = format!("pv{}", self.pv_counter);
            self.pv_counter += 1;
            let (property, filter) = match extra {
                ExtraFilter::Contains { property, needle } => (
                    *property,
                    FilterExpr::ValueContains {
                        var: value_var.clone(),
                        needle: (*needle).to_string(),
                    },
                ),
                ExtraFilter::Cmp { property, op, value } => (
                    *property,
                    FilterExpr::ValueCmp {
                        var: value_var.clone(),
                        op: *op,
                        constant: *value,
                    },
                ),
            };
            let direct = routing_source
                .map(|s| kb.predicate_sources(property).contains(&s))
                .unwrap_or(true);
            self.property_on(var, property, &value_var, direct);
            self.filters.push(filter);
        }
    }

    fn spatial(&mut self, func: SpatialFn, a: &str, b: &str) {
        self.filters.push(FilterExpr::Spatial {
            func,
            a: a.into(),
            b: b.into(),
        });
    }

    fn finish(self, target: Option<&str>) -> GeneratedQuery {
        GeneratedQuery {
            form: self.form,
            bgp: self.bgp,
            filters: self.filters,
            target_var: target.map(str::to_string),
            slots: self.slots,
            variant: self.variant,
            est_card: 0.0,
        }
    }
}

/// How to realise one instance slot inside a geometric query.
enum InstancePlan<'a> {
    /// The IRI has a geometry: constant-rooted chain.
    Direct(&'a Iri),
    /// Geometry only via a sameAs partner: `?slotN owl:sameAs <iri>` hop.
    Linked(&'a Iri),
}

fn instance_plans<'a>(kb: &KnowledgeBase, resources: &'a [Iri]) -> Vec<InstancePlan<'a>> {
    let mut plans = Vec::new();
    for r in resources {
        if kb.has_geometry(r) {
            plans.push(InstancePlan::Direct(r));
        } else if kb.same_as(r).iter().any(|p| kb.has_geometry(p)) {
            plans.push(InstancePlan::Linked(r));
        }
    }
    plans
}

fn spatial_fn(
    kind: RelationKind,
    distance_m: Option<f64>,
    near_keys: &[String],
    lex: &Lexicons,
) -> SpatialFn {
    match kind {
        RelationKind::Within => SpatialFn::Within,
        RelationKind::Crosses => SpatialFn::Crosses,
        RelationKind::Borders => SpatialFn::Touches,
        RelationKind::Near => {
            SpatialFn::DistanceLE(lex.near_threshold(near_keys.iter().map(String::as_str)))
        }
        RelationKind::AtMost => SpatialFn::DistanceLE(distance_m.unwrap_or(0.0)),
        RelationKind::AtLeast => SpatialFn::DistanceGE(distance_m.unwrap_or(0.0)),
        RelationKind::North => SpatialFn::Cardinal(CardinalDirection::North),
        RelationKind::South => SpatialFn::Cardinal(CardinalDirection::South),
        RelationKind::East => SpatialFn::Cardinal(CardinalDirection::East),
        RelationKind::West => SpatialFn::Cardinal(CardinalDirection::West),
        RelationKind::Northeast => SpatialFn::Cardinal(CardinalDirection::Northeast),
        RelationKind::Northwest => SpatialFn::Cardinal(CardinalDirection::Northwest),
        RelationKind::Southeast => SpatialFn::Cardinal(CardinalDirection::Southeast),
        RelationKind::Southwest => SpatialFn::Cardinal(CardinalDirection::Southwest),
    }
}

fn keys_of(classes: &[Iri]) -> Vec<String> {
    let mut keys: Vec<String> = classes.iter().map(class_key).collect();
    keys.sort();
    keys.dedup();
    keys
}

fn keys_of_instance(kb: &KnowledgeBase, resource: &Iri) -> Vec<String> {
    let mut keys: Vec<String> = kb.classes_of(resource).iter().map(class_key).collect();
    keys.sort();
    keys.dedup();
    keys
}

/// Instantiate every applicable query for the detected pattern.
pub fn instantiate(
    pattern: QuestionPattern,
    tree: &AnnotatedTree,
    kb: &KnowledgeBase,
    lex: &Lexicons,
    diagnostics: &mut Vec<String>,
) -> Vec<GeneratedQuery> {
    let slots = extract_slots(tree);
    let (extras, answer_cmp) = extra_filters(&slots, diagnostics);
    let mut queries = Vec::new();

    let need = |ok: bool, what: &str, diagnostics: &mut Vec<String>| -> bool {
        if !ok {
            diagnostics.push(format!("missing {what} slot; no query emitted"));
        }
        ok
    };

    match pattern {
        QuestionPattern::Ip => {
            let (Some(inst), Some(prop)) = (
                slots.instances.first(),
                slots.properties.iter().find(|p| p.answer),
            ) else {
                diagnostics.push("missing instance/property slot; no query emitted".into());
                return queries;
            };
            for r in inst.resources {
                let mut b = Builder::new(QueryForm::Select, Variant::Qualitative);
                b.slot("instance", r);
                b.slot("property", prop.property);
                b.pattern(
                    VarOrIri::Iri(r.clone()),
                    prop.property.clone(),
                    VarOrTerm::Var("x".into()),
                );
                if let Some((op, value)) = answer_cmp {
                    b.filters.push(FilterExpr::ValueCmp {
                        var: "x".into(),
                        op,
                        constant: value,
                    });
                }
                queries.push(b.finish(Some("x")));
            }
        }
        QuestionPattern::Cri | QuestionPattern::Ncri | QuestionPattern::Pcri => {
            if !need(
                !slots.concepts.is_empty()
                    && !slots.relations.is_empty()
                    && !slots.instances.is_empty(),
                "concept/relation/instance",
                diagnostics,
            ) {
                return queries;
            }
            let concept = &slots.concepts[0];
            let relation = &slots.relations[0];
            let instance = &slots.instances[0];
            let form = if pattern == QuestionPattern::Ncri {
                QueryForm::Count
            } else {
                QueryForm::Select
            };
            let answer_prop = slots.properties.iter().find(|p| p.answer);
            if pattern == QuestionPattern::Pcri && answer_prop.is_none() {
                diagnostics.push("missing property slot; no query emitted".into());
                return queries;
            }
            let target = if pattern == QuestionPattern::Pcri { "v" } else { "x" };
            let near_keys = keys_of(concept.classes);
            let func = spatial_fn(relation.kind, relation.distance_m, &near_keys, lex);

            for class in concept.classes {
                let source = class_source(kb, class);
                // Geometric variants, one per usable instance IRI.
                for plan in instance_plans(kb, instance.resources) {
                    let (variant, instance_iri) = match &plan {
                        InstancePlan::Direct(r) => (Variant::GeometricV1, *r),
                        InstancePlan::Linked(r) => (Variant::GeometricV2, *r),
                    };
                    let mut b = Builder::new(form, variant);
                    b.slot("concept", class);
                    b.slot("relation", relation.kind);
                    b.slot("instance", instance_iri);
                    b.type_pattern("x", class);
                    let x_wkt = b.geom_chain_var("x");
                    let i_wkt = match &plan {
                        InstancePlan::Direct(r) => b.geom_chain_iri("i1", r),
                        InstancePlan::Linked(r) => b.link_chain("i1", r),
                    };
                    b.spatial(func, &x_wkt, &i_wkt);
                    if let Some(p) = answer_prop {
                        let direct = source
                            .map(|s| kb.predicate_sources(p.property).contains(&s))
                            .unwrap_or(true);
                        b.slot("property", p.property);
                        b.property_on("x", p.property, "v", direct);
                        if let Some((op, value)) = answer_cmp {
                            b.filters.push(FilterExpr::ValueCmp {
                                var: "v".into(),
                                op,
                                constant: value,
                            });
                        }
                    }
                    b.apply_extra_filters("x", &extras, source, kb);
                    queries.push(b.finish(Some(target)));
                }
                // Qualitative variant, when the dpr table has a row.
                let Some(dpr) = lex.dpr_property(
                    keys_of(std::slice::from_ref(class)).iter().map(String::as_str),
                    relation.kind,
                ) else {
                    continue;
                };
                for r in instance.resources {
                    let mut b = Builder::new(form, Variant::Qualitative);
                    b.slot("concept", class);
                    b.slot("relation", relation.kind);
                    b.slot("instance", r);
                    b.slot("dpr", dpr);
                    b.type_pattern("x", class);
                    b.pattern(
                        VarOrIri::Var("x".into()),
                        dpr.clone(),
                        VarOrTerm::Term(Term::Iri(r.clone())),
                    );
                    if let Some(p) = answer_prop {
                        let direct = source
                            .map(|s| kb.predicate_sources(p.property).contains(&s))
                            .unwrap_or(true);
                        b.slot("property", p.property);
                        b.property_on("x", p.property, "v", direct);
                        if let Some((op, value)) = answer_cmp {
                            b.filters.push(FilterExpr::ValueCmp {
                                var: "v".into(),
                                op,
                                constant: value,
                            });
                        }
                    }
                    b.apply_extra_filters("x", &extras, source, kb);
                    queries.push(b.finish(Some(target)));
                }
            }
        }
        QuestionPattern::Criri | QuestionPattern::Pcriri => {
            if !need(
                !slots.concepts.is_empty()
                    && slots.relations.len() >= 2
                    && slots.instances.len() >= 2,
                "concept/relation/instance",
                diagnostics,
            ) {
                return queries;
            }
            let concept = &slots.concepts[0];
            let (r1, r2) = (&slots.relations[0], &slots.relations[1]);
            let (i1, i2) = (&slots.instances[0], &slots.instances[1]);
            let answer_prop = slots.properties.iter().find(|p| p.answer);
            if pattern == QuestionPattern::Pcriri && answer_prop.is_none() {
                diagnostics.push("missing property slot; no query emitted".into());
                return queries;
            }
            let target = if pattern == QuestionPattern::Pcriri { "v" } else { "x" };
            let near_keys = keys_of(concept.classes);
            let f1 = spatial_fn(r1.kind, r1.distance_m, &near_keys, lex);

            for class in concept.classes {
                let source = class_source(kb, class);
                for plan1 in instance_plans(kb, i1.resources) {
                    for plan2 in instance_plans(kb, i2.resources) {
                        let (iri1, iri2) = match (&plan1, &plan2) {
                            (
                                InstancePlan::Direct(a) | InstancePlan::Linked(a),
                                InstancePlan::Direct(b) | InstancePlan::Linked(b),
                            ) => (*a, *b),
                        };
                        let linked = matches!(plan1, InstancePlan::Linked(_))
                            || matches!(plan2, InstancePlan::Linked(_));
                        let variant = if linked {
                            Variant::GeometricV2
                        } else {
                            Variant::GeometricV1
                        };
                        // The threshold of a near second relation follows
                        // the first instance's classes.
                        let f2 = spatial_fn(
                            r2.kind,
                            r2.distance_m,
                            &keys_of_instance(kb, iri1),
                            lex,
                        );
                        let mut b = Builder::new(QueryForm::Select, variant);
                        b.slot("concept", class);
                        b.slot("relation1", r1.kind);
                        b.slot("instance1", iri1);
                        b.slot("relation2", r2.kind);
                        b.slot("instance2", iri2);
                        b.type_pattern("x", class);
                        let x_wkt = b.geom_chain_var("x");
                        let w1 = match &plan1 {
                            InstancePlan::Direct(r) => b.geom_chain_iri("i1", r),
                            InstancePlan::Linked(r) => b.link_chain("i1", r),
                        };
                        let w2 = match &plan2 {
                            InstancePlan::Direct(r) => b.geom_chain_iri("i2", r),
                            InstancePlan::Linked(r) => b.link_chain("i2", r),
                        };
                        b.spatial(f1, &x_wkt, &w1);
                        b.spatial(f2, &w1, &w2);
                        if let Some(p) = answer_prop {
                            let direct = source
                                .map(|s| kb.predicate_sources(p.property).contains(&s))
                                .unwrap_or(true);
                            b.slot("property", p.property);
                            b.property_on("x", p.property, "v", direct);
                            if let Some((op, value)) = answer_cmp {
                                b.filters.push(FilterExpr::ValueCmp {
                                    var: "v".into(),
                                    op,
                                    constant: value,
                                });
                            }
                        }
                        b.apply_extra_filters("x", &extras, source, kb);
                        queries.push(b.finish(Some(target)));
                    }
                }
            }
        }
        QuestionPattern::Crc | QuestionPattern::Crcri => {
            let two_concepts = slots.concepts.len() >= 2;
            let has_instance = pattern == QuestionPattern::Crc || !slots.instances.is_empty();
            if !need(
                two_concepts && !slots.relations.is_empty() && has_instance,
                "concept/relation",
                diagnostics,
            ) {
                return queries;
            }
            let (c1, c2) = (&slots.concepts[0], &slots.concepts[1]);
            let r1 = &slots.relations[0];
            let near_keys = keys_of(c1.classes);
            let f1 = spatial_fn(r1.kind, r1.distance_m, &near_keys, lex);
            for class1 in c1.classes {
                let source = class_source(kb, class1);
                for class2 in c2.classes {
                    if pattern == QuestionPattern::Crc {
                        let mut b = Builder::new(QueryForm::Select, Variant::GeometricV1);
                        b.slot("concept1", class1);
                        b.slot("relation", r1.kind);
                        b.slot("concept2", class2);
                        b.type_pattern("x", class1);
                        b.type_pattern("y", class2);
                        let x_wkt = b.geom_chain_var("x");
                        let y_wkt = b.geom_chain_var("y");
                        b.spatial(f1, &x_wkt, &y_wkt);
                        b.apply_extra_filters("x", &extras, source, kb);
                        queries.push(b.finish(Some("x")));
                        continue;
                    }
                    let r2 = &slots.relations[1];
                    let inst = &slots.instances[0];
                    let f2 = spatial_fn(r2.kind, r2.distance_m, &keys_of(c2.classes), lex);
                    for plan in instance_plans(kb, inst.resources) {
                        let (variant, instance_iri) = match &plan {
                            InstancePlan::Direct(r) => (Variant::GeometricV1, *r),
                            InstancePlan::Linked(r) => (Variant::GeometricV2, *r),
                        };
                        let mut b = Builder::new(QueryForm::Select, variant);
                        b.slot("concept1", class1);
                        b.slot("relation1", r1.kind);
                        b.slot("concept2", class2);
                        b.slot("relation2", r2.kind);
                        b.slot("instance", instance_iri);
                        b.type_pattern("x", class1);
                        b.type_pattern("y", class2);
                        let x_wkt = b.geom_chain_var("x");
                        let y_wkt = b.geom_chain_var("y");
                        let i_wkt = match &plan {
                            InstancePlan::Direct(r) => b.geom_chain_iri("i1", r),
                            InstancePlan::Linked(r) => b.link_chain("i1", r),
                        };
                        b.spatial(f1, &x_wkt, &y_wkt);
                        b.spatial(f2, &y_wkt, &i_wkt);
                        b.apply_extra_filters("x", &extras, source, kb);
                        queries.push(b.finish(Some("x")));
                    }
                }
            }
        }
        QuestionPattern::Iri => {
            if !need(
                slots.instances.len() >= 2 && !slots.relations.is_empty(),
                "instance/relation",
                diagnostics,
            ) {
                return queries;
            }
            let (i1, i2) = (&slots.instances[0], &slots.instances[1]);
            let r1 = &slots.relations[0];
            for plan1 in instance_plans(kb, i1.resources) {
                for plan2 in instance_plans(kb, i2.resources) {
                    let (iri1, iri2) = match (&plan1, &plan2) {
                        (
                            InstancePlan::Direct(a) | InstancePlan::Linked(a),
                            InstancePlan::Direct(b) | InstancePlan::Linked(b),
                        ) => (*a, *b),
                    };
                    let linked = matches!(plan1, InstancePlan::Linked(_))
                        || matches!(plan2, InstancePlan::Linked(_));
                    let variant = if linked {
                        Variant::GeometricV2
                    } else {
                        Variant::GeometricV1
                    };
                    let f1 = spatial_fn(
                        r1.kind,
                        r1.distance_m,
                        &keys_of_instance(kb, iri1),
                        lex,
                    );
                    let mut b = Builder::new(QueryForm::Ask, variant);
                    b.slot("instance1", iri1);
                    b.slot("relation", r1.kind);
                    b.slot("instance2", iri2);
                    let w1 = match &plan1 {
                        InstancePlan::Direct(r) => b.geom_chain_iri("i1", r),
                        InstancePlan::Linked(r) => b.link_chain("i1", r),
                    };
                    let w2 = match &plan2 {
                        InstancePlan::Direct(r) => b.geom_chain_iri("i2", r),
                        InstancePlan::Linked(r) => b.link_chain("i2", r),
                    };
                    b.spatial(f1, &w1, &w2);
                    queries.push(b.finish(None));
                }
            }
        }
    }

    for q in &queries {
        debug_assert!(q.validate().is_ok(), "{:?}", q.validate());
    }
    queries
}

// ---- cardinality estimation and ranking ---------------------------------

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a.max(1)
}

/// `totalTriples × ∏ sel(t)` with exact rational accumulation, so a single
/// fully-bound-predicate pattern estimates to the exact triple count.
pub fn estimate_cardinality(q: &GeneratedQuery, stats: &KbStats) -> f64 {
    let mut num: u128 = stats.total_triples as u128;
    let mut den: u128 = 1;
    let mut mul = |n: usize, d: usize| -> bool {
        if n == 0 {
            return false; // estimate collapses to zero
        }
        num *= n as u128;
        den *= d.max(1) as u128;
        let g = gcd(num, den);
        num /= g;
        den /= g;
        true
    };
    for tp in &q.bgp {
        if matches!(tp.s, VarOrIri::Iri(_)) && !mul(1, stats.distinct_subjects) {
            return 0.0;
        }
        if let VarOrIri::Iri(p) = &tp.p {
            let pc = stats.predicate(p);
            if !mul(pc, stats.total_triples) {
                return 0.0;
            }
            if let VarOrTerm::Term(o) = &tp.o {
                if !mul(stats.predicate_object(p, o), pc) {
                    return 0.0;
                }
            }
        }
    }
    num as f64 / den as f64
}

/// Order queries for execution: largest estimate first, ties broken by
/// variant priority then slot provenance.
pub fn rank(mut queries: Vec<GeneratedQuery>) -> Vec<GeneratedQuery> {
    queries.sort_by(|a, b| {
        b.est_card
            .total_cmp(&a.est_card)
            .then_with(|| a.variant.priority().cmp(&b.variant.priority()))
            .then_with(|| a.slots.cmp(&b.slots))
    });
    queries
}

// ---- logical forms ------------------------------------------------------

fn title_case(s: &str) -> String {
    s.split_whitespace()
        .map(|w| {
            let mut cs = w.chars();
            match cs.next() {
                Some(c) => c.to_uppercase().collect::<String>() + cs.as_str(),
                None => String::new(),
            }
        })
        .collect::<Vec<_>>()
        .join(" ")
}

/// Render the pattern's first-order formula with slot names substituted.
pub fn logical_form(pattern: QuestionPattern, tree: &AnnotatedTree) -> String {
    let slots = extract_slots(tree);
    let concept = |i: usize| {
        slots
            .concepts
            .get(i)
            .map(|c| title_case(c.lemma))
            .unwrap_or_else(|| "C".into())
    };
    let instance = |i: usize| {
        slots
            .instances
            .get(i)
            .map(|s| s.label.to_string())
            .unwrap_or_else(|| "I".into())
    };
    let relation = |i: usize| {
        slots
            .relations
            .get(i)
            .map(|r| r.kind.as_str().to_string())
            .unwrap_or_else(|| "R".into())
    };
    let property = || {
        slots
            .properties
            .iter()
            .find(|p| p.answer)
            .map(|p| p.property.local_name().to_string())
            .unwrap_or_else(|| "P".into())
    };
    match pattern {
        QuestionPattern::Ip => format!("x : {}({}, x)", property(), instance(0)),
        QuestionPattern::Cri => format!(
            "x : {}(x) \u{2227} \u{2203}i {}(x, {})",
            concept(0),
            relation(0),
            instance(0)
        ),
        QuestionPattern::Ncri => format!(
            "count x : {}(x) \u{2227} \u{2203}i {}(x, {})",
            concept(0),
            relation(0),
            instance(0)
        ),
        QuestionPattern::Criri => format!(
            "x : {}(x) \u{2227} \u{2203}i1\u{2203}i2 ({}(x, {}) \u{2227} {}({}, {}))",
            concept(0),
            relation(0),
            instance(0),
            relation(1),
            instance(0),
            instance(1)
        ),
        QuestionPattern::Crc => format!(
            "x : {}(x) \u{2227} \u{2203}i ({}(i) \u{2227} {}(x, i))",
            concept(0),
            concept(1),
            relation(0)
        ),
        QuestionPattern::Crcri => format!(
            "x : {}(x) \u{2227} \u{2203}i ({}(i) \u{2227} {}(x, i) \u{2227} {}(i, {}))",
            concept(0),
            concept(1),
            relation(0),
            relation(1),
            instance(0)
        ),
        QuestionPattern::Iri => format!(
            ": {}({}, {})",
            relation(0),
            instance(0),
            instance(1)
        ),
        QuestionPattern::Pcri => format!(
            "v : \u{2203}x ({}(x) \u{2227} {}(x, {}) \u{2227} {}({}, v))",
            concept(0),
            relation(0),
            instance(0),
            property(),
            instance(0)
        ),
        QuestionPattern::Pcriri => format!(
            "v : \u{2203}x ({}(x) \u{2227} {}(x, {}) \u{2227} {}({}, {}) \u{2227} {}(x, v))",
            concept(0),
            relation(0),
            instance(0),
            relation(1),
            instance(0),
            instance(1),
            property()
        ),
    }
}

/// Detect, instantiate, estimate and rank in one step.
pub fn generate(tree: &AnnotatedTree, kb: &KnowledgeBase, lex: &Lexicons) -> Generated {
    let detection = detect_pattern(tree);
    let mut diagnostics = Vec::new();
    let Some(pattern) = detection.pattern else {
        diagnostics.push(format!(
            "letter sequence {:?} matches no supported pattern",
            detection.letters
        ));
        return Generated {
            detection,
            logical_form: None,
            queries: Vec::new(),
            diagnostics,
        };
    };
    let mut queries = instantiate(pattern, tree, kb, lex, &mut diagnostics);
    for q in &mut queries {
        q.est_card = estimate_cardinality(q, kb.stats());
    }
    let queries = rank(queries);
    Generated {
        detection,
        logical_form: Some(logical_form(pattern, tree)),
        queries,
        diagnostics,
    }
}
