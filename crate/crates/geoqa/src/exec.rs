//! Query execution: backtracking BGP join, post-join filter evaluation,
//! and ranked fall-through across generated queries.

use std::collections::BTreeMap;

use crate::geometry::{self, parse_wkt, Geometry};
use crate::kb::{KnowledgeBase, Term};
use crate::qgen::{FilterExpr, GeneratedQuery, QueryForm, SpatialFn, TriplePattern, VarOrIri, VarOrTerm, Variant};

/// Solution mapping; each variable is bound at most once.
pub type Binding = BTreeMap<String, Term>;

#[derive(Debug, Clone, PartialEq)]
pub enum Answer {
    /// Distinct bindings of the target variable, sorted by serialized form.
    Solutions(Vec<Term>),
    Boolean(bool),
    Count(usize),
}

impl Answer {
    /// An answer that triggers fall-through to the next ranked query.
    /// Boolean is always terminal: `false` is a real answer.
    pub fn is_empty(&self) -> bool {
        match self {
            Answer::Solutions(v) => v.is_empty(),
            Answer::Count(n) => *n == 0,
            Answer::Boolean(_) => false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExecResult {
    pub answer: Answer,
    /// Partial-solution count after each joined pattern, in executed order.
    pub pattern_cards: Vec<(String, usize)>,
    /// Data gaps observed while filtering (binding dropped per note).
    pub notes: Vec<String>,
}

fn render_pattern(tp: &TriplePattern) -> String {
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
    format!("{s} {p} {o}")
}

/// Resolve a subject/predicate position under the current binding to a
/// constant IRI when possible.
fn resolved_iri<'a>(part: &'a VarOrIri, binding: &'a Binding) -> Option<&'a crate::kb::Iri> {
    match part {
        VarOrIri::Iri(i) => Some(i),
        VarOrIri::Var(v) => match binding.get(v) {
            Some(Term::Iri(i)) => Some(i),
            _ => None,
        },
    }
}

fn unify(tp: &TriplePattern, triple: &crate::kb::Triple, binding: &Binding) -> Option<Binding> {
    let mut next = binding.clone();
    let mut bind = |var: &str, term: Term| -> bool {
        match next.get(var) {
            Some(existing) => *existing == term,
            None => {
                next.insert(var.to_string(), term);
                true
            }
        }
    };
    match &tp.s {
        VarOrIri::Iri(i) => {
            if *i != triple.subject {
                return None;
            }
        }
        VarOrIri::Var(v) => {
            if !bind(v, Term::Iri(triple.subject.clone())) {
                return None;
            }
        }
    }
    match &tp.p {
        VarOrIri::Iri(i) => {
            if *i != triple.predicate {
                return None;
            }
        }
        VarOrIri::Var(v) => {
            if !bind(v, Term::Iri(triple.predicate.clone())) {
                return None;
            }
        }
    }
    match &tp.o {
        VarOrTerm::Term(t) => {
            if *t != triple.object {
                return None;
            }
        }
        VarOrTerm::Var(v) => {
            if !bind(v, triple.object.clone()) {
                return None;
            }
        }
    }
    Some(next)
}

/// Candidate triple indices for a pattern under a binding, using the
/// predicate/subject indexes where a position is constant.
fn candidates(kb: &KnowledgeBase, tp: &TriplePattern, binding: &Binding) -> Vec<usize> {
    let pool: Vec<usize> = if let Some(s) = resolved_iri(&tp.s, binding) {
        kb.with_subject(s).to_vec()
    } else if let Some(p) = resolved_iri(&tp.p, binding) {
        kb.with_predicate(p).to_vec()
    } else {
        (0..kb.triples().len()).collect()
    };
    pool.into_iter()
        .filter(|&i| unify(tp, kb.triple(i), binding).is_some())
        .collect()
}

fn pattern_vars(tp: &TriplePattern) -> Vec<&str> {
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

/// Static join order: repeatedly take the connected pattern with the fewest
/// index candidates; fall back to the global minimum when nothing connects.
fn join_order(kb: &KnowledgeBase, bgp: &[TriplePattern]) -> Vec<usize> {
    let empty = Binding::new();
    let cost: Vec<usize> = bgp.iter().map(|tp| candidates(kb, tp, &empty).len()).collect();
    let mut remaining: Vec<usize> = (0..bgp.len()).collect();
    let mut planned_vars: Vec<String> = Vec::new();
    let mut order = Vec::new();
    while !remaining.is_empty() {
        let connected = |idx: usize| {
            pattern_vars(&bgp[idx])
                .iter()
                .any(|v| planned_vars.iter().any(|p| p == v))
        };
        let pick = remaining
            .iter()
            .copied()
            .filter(|&i| planned_vars.is_empty() || connected(i))
            .min_by_key(|&i| (cost[i], i))
            .unwrap_or_else(|| {
                remaining.iter().copied().min_by_key(|&i| (cost[i], i)).unwrap()
            });
        remaining.retain(|&i| i != pick);
        for v in pattern_vars(&bgp[pick]) {
            if !planned_vars.iter().any(|p| p == v) {
                planned_vars.push(v.to_string());
            }
        }
        order.push(pick);
    }
    order
}

fn geometry_of(term: &Term) -> Result<Geometry, String> {
    match term {
        Term::Wkt(text) => parse_wkt(text).map_err(|e| format!("bad WKT: {e}")),
        other => Err(format!("no geometry on {}", other.serialized())),
    }
}

/// Evaluate one filter; `Err` reports a data gap and drops the binding.
fn eval_filter(f: &FilterExpr, binding: &Binding) -> Result<bool, String> {
    let lookup = |var: &str| -> Result<&Term, String> {
        binding.get(var).ok_or_else(|| format!("?{var} unbound in filter"))
    };
    match f {
        FilterExpr::Spatial { func, a, b } => {
            let ga = geometry_of(lookup(a)?).map_err(|e| format!("?{a}: {e}"))?;
            let gb = geometry_of(lookup(b)?).map_err(|e| format!("?{b}: {e}"))?;
            let gap = |e: crate::geometry::OpError| format!("{}(?{a}, ?{b}): {e}", func.name());
            match func {
                SpatialFn::Within => geometry::sf_within(&ga, &gb).map_err(gap),
                SpatialFn::Crosses => geometry::sf_crosses(&ga, &gb).map_err(gap),
                SpatialFn::Touches => geometry::sf_touches(&ga, &gb).map_err(gap),
                SpatialFn::DistanceLE(m) => Ok(geometry::min_distance_m(&ga, &gb) <= *m),
                SpatialFn::DistanceGE(m) => Ok(geometry::min_distance_m(&ga, &gb) >= *m),
                SpatialFn::Cardinal(d) => Ok(geometry::cardinal(&ga, &gb, *d)),
            }
        }
        FilterExpr::ValueCmp { var, op, constant } => {
            let term = lookup(var)?;
            let value = term
                .as_number()
                .ok_or_else(|| format!("?{var} is not numeric: {}", term.serialized()))?;
            Ok(op.holds(value, *constant))
        }
        FilterExpr::ValueContains { var, needle } => {
            let term = lookup(var)?;
            let text = term
                .text()
                .ok_or_else(|| format!("?{var} is not text: {}", term.serialized()))?;
            Ok(text.to_lowercase().contains(&needle.to_lowercase()))
        }
    }
}

/// Run one query: backtracking join over the reordered BGP, then filters,
/// then projection per the query form.
pub fn execute(kb: &KnowledgeBase, q: &GeneratedQuery) -> ExecResult {
    let order = join_order(kb, &q.bgp);
    let ordered: Vec<&TriplePattern> = order.iter().map(|&i| &q.bgp[i]).collect();
    let mut cards = vec![0usize; ordered.len()];
    let mut solutions: Vec<Binding> = Vec::new();
    let mut notes = Vec::new();

    fn descend(
        kb: &KnowledgeBase,
        ordered: &[&TriplePattern],
        depth: usize,
        binding: &Binding,
        cards: &mut [usize],
        out: &mut Vec<Binding>,
    ) {
        if depth == ordered.len() {
            out.push(binding.clone());
            return;
        }
        for idx in candidates(kb, ordered[depth], binding) {
            if let Some(next) = unify(ordered[depth], kb.triple(idx), binding) {
                cards[depth] += 1;
                descend(kb, ordered, depth + 1, &next, cards, out);
            }
        }
    }
    descend(kb, &ordered, 0, &Binding::new(), &mut cards, &mut solutions);

    let kept: Vec<Binding> = solutions
        .into_iter()
        .filter(|b| {
            for f in &q.filters {
                match eval_filter(f, b) {
                    Ok(true) => {}
                    Ok(false) => return false,
                    Err(note) => {
                        notes.push(note);
                        return false;
                    }
                }
            }
            true
        })
        .collect();

    let answer = match (&q.form, &q.target_var) {
        (QueryForm::Ask, _) => Answer::Boolean(!kept.is_empty()),
        (form, Some(target)) => {
            let mut terms: Vec<Term> = Vec::new();
            let mut seen: Vec<String> = Vec::new();
            let mut projected: Vec<(String, Term)> = kept
                .iter()
                .filter_map(|b| b.get(target).map(|t| (t.serialized(), t.clone())))
                .collect();
            projected.sort_by(|a, b| a.0.cmp(&b.0));
            for (key, term) in projected {
                if seen.last() != Some(&key) {
                    seen.push(key);
                    terms.push(term);
                }
            }
            match form {
                QueryForm::Count => Answer::Count(terms.len()),
                _ => Answer::Solutions(terms),
            }
        }
        (_, None) => Answer::Solutions(Vec::new()),
    };

    let pattern_cards = ordered
        .iter()
        .zip(cards)
        .map(|(tp, n)| (render_pattern(tp), n))
        .collect();
    ExecResult { answer, pattern_cards, notes }
}

/// One executed query in the fall-through sequence.
#[derive(Debug, Clone)]
pub struct Attempt {
    /// Position in the ranked list.
    pub index: usize,
    pub variant: Variant,
    pub est_card: f64,
    pub result: ExecResult,
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub answer: Answer,
    /// Ranked index of the query whose result was kept; None when no query
    /// was generated at all.
    pub chosen: Option<usize>,
    /// True when every executed query came back empty.
    pub exhausted: bool,
    pub attempts: Vec<Attempt>,
}

impl Outcome {
    pub fn answerable(&self) -> bool {
        self.chosen.is_some()
    }
}

/// Execute the ranked list with fall-through: an empty SELECT/COUNT result
/// moves on to the next query; ASK is terminal; exhausting the list keeps
/// the head query's empty result. `strict` executes the head only.
pub fn answer(kb: &KnowledgeBase, queries: &[GeneratedQuery], strict: bool) -> Outcome {
    if queries.is_empty() {
        return Outcome {
            answer: Answer::Solutions(Vec::new()),
            chosen: None,
            exhausted: true,
            attempts: Vec::new(),
        };
    }
    let limit = if strict { 1 } else { queries.len() };
    let mut attempts = Vec::new();
    for (index, q) in queries.iter().enumerate().take(limit) {
        let result = execute(kb, q);
        let done = !result.answer.is_empty();
        attempts.push(Attempt {
            index,
            variant: q.variant,
            est_card: q.est_card,
            result,
        });
        if done {
            let answer = attempts.last().unwrap().result.answer.clone();
            return Outcome {
                answer,
                chosen: Some(index),
                exhausted: false,
                attempts,
            };
        }
    }
    let answer = attempts[0].result.answer.clone();
    Outcome {
        answer,
        chosen: Some(0),
        exhausted: true,
        attempts,
    }
}
