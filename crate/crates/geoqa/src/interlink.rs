//! Entity interlinking between two knowledge bases.
//!
//! Candidate pairs come from aligned class pairs. A pair is accepted only
//! when BOTH criteria hold: normalised Levenshtein label similarity at or
//! above the threshold AND minimum geometric distance at or below the
//! distance cap. Pairs that fail exactly one criterion are kept as rejected
//! candidates for manual review; pairs failing both are dropped. Pairs where
//! either entity lacks a geometry are skipped and counted.

use std::io::Write;
use std::path::Path;

use crate::geometry;
use crate::kb::{iri, Iri, KnowledgeBase, Source, Term, Triple};
use crate::vocab;

/// Normalised Levenshtein similarity `1 - dist/max_len` over characters.
/// Two empty strings are identical (1.0).
pub fn levenshtein_sim(a: &str, b: &str) -> f64 {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let max_len = a.len().max(b.len());
    if max_len == 0 {
        return 1.0;
    }
    let dist = levenshtein(&a, &b);
    1.0 - dist as f64 / max_len as f64
}

fn levenshtein(a: &[char], b: &[char]) -> usize {
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0usize; b.len() + 1];
    for (i, &ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, &cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

#[derive(Debug, Clone, Copy)]
pub struct InterlinkConfig {
    /// Minimum label similarity, default 0.85.
    pub sim_threshold: f64,
    /// Maximum geometric distance in metres, default 1000.
    pub max_distance_m: f64,
}

impl Default for InterlinkConfig {
    fn default() -> Self {
        InterlinkConfig {
            sim_threshold: 0.85,
            max_distance_m: 1000.0,
        }
    }
}

/// Which single criterion a reviewed candidate failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FailedCriterion {
    Similarity,
    Distance,
}

impl FailedCriterion {
    pub fn as_str(self) -> &'static str {
        match self {
            FailedCriterion::Similarity => "similarity",
            FailedCriterion::Distance => "distance",
        }
    }
}

#[derive(Debug, Clone)]
pub struct MatchCandidate {
    pub left: Iri,
    pub right: Iri,
    pub label_sim: f64,
    pub distance_m: f64,
    pub accepted: bool,
    /// Set exactly when `accepted` is false (single-criterion rejection).
    pub failed: Option<FailedCriterion>,
}

#[derive(Debug, Clone)]
pub struct SkippedPair {
    pub left: Iri,
    pub right: Iri,
    pub reason: String,
}

#[derive(Debug, Clone, Default)]
pub struct InterlinkResult {
    /// Accepted and review candidates, ordered by (left, right) IRI.
    pub candidates: Vec<MatchCandidate>,
    /// Pairs skipped for missing geometry.
    pub skipped: Vec<SkippedPair>,
    /// Candidate pairs evaluated against both criteria.
    pub evaluated: usize,
}

impl InterlinkResult {
    pub fn accepted(&self) -> impl Iterator<Item = &MatchCandidate> {
        self.candidates.iter().filter(|c| c.accepted)
    }

    pub fn review(&self) -> impl Iterator<Item = &MatchCandidate> {
        self.candidates.iter().filter(|c| !c.accepted)
    }

    /// Accepted links as `owl:sameAs` triples, left to right.
    pub fn links(&self) -> Vec<Triple> {
        self.accepted()
            .map(|c| Triple {
                subject: c.left.clone(),
                predicate: iri(vocab::OWL_SAME_AS),
                object: Term::Iri(c.right.clone()),
                source: Source::Links,
            })
            .collect()
    }
}

/// Evaluate every instance pair of each aligned class pair.
pub fn interlink(
    left: &KnowledgeBase,
    right: &KnowledgeBase,
    class_pairs: &[(Iri, Iri)],
    cfg: &InterlinkConfig,
) -> InterlinkResult {
    let mut result = InterlinkResult::default();
    for (lc, rc) in class_pairs {
        for l in left.instances_of(lc) {
            for r in right.instances_of(rc) {
                let (Some(lg), Some(rg)) = (left.geometry_of(&l), right.geometry_of(&r)) else {
                    let missing = if left.geometry_of(&l).is_none() {
                        &l
                    } else {
                        &r
                    };
                    result.skipped.push(SkippedPair {
                        left: l.clone(),
                        right: r.clone(),
                        reason: format!("no geometry for <{missing}>"),
                    });
                    continue;
                };
                result.evaluated += 1;
                let label_sim = best_label_sim(&left.labels_of(&l), &right.labels_of(&r));
                let distance_m = geometry::min_distance_m(lg, rg);
                let sim_ok = label_sim >= cfg.sim_threshold;
                let dist_ok = distance_m <= cfg.max_distance_m;
                let candidate = match (sim_ok, dist_ok) {
                    (true, true) => MatchCandidate {
                        left: l.clone(),
                        right: r.clone(),
                        label_sim,
                        distance_m,
                        accepted: true,
                        failed: None,
                    },
                    (false, true) => MatchCandidate {
                        left: l.clone(),
                        right: r.clone(),
                        label_sim,
                        distance_m,
                        accepted: false,
                        failed: Some(FailedCriterion::Similarity),
                    },
                    (true, false) => MatchCandidate {
                        left: l.clone(),
                        right: r.clone(),
                        label_sim,
                        distance_m,
                        accepted: false,
                        failed: Some(FailedCriterion::Distance),
                    },
                    (false, false) => continue,
                };
                result.candidates.push(candidate);
            }
        }
    }
    result
        .candidates
        .sort_by(|a, b| (&a.left, &a.right).cmp(&(&b.left, &b.right)));
    result
        .skipped
        .sort_by(|a, b| (&a.left, &a.right).cmp(&(&b.left, &b.right)));
    result
}

fn best_label_sim(left: &[String], right: &[String]) -> f64 {
    let mut best: f64 = 0.0;
    for l in left {
        for r in right {
            best = best.max(levenshtein_sim(l, r));
        }
    }
    best
}

/// Write rejected candidates as a review CSV.
pub fn write_review_csv(result: &InterlinkResult, path: &Path) -> std::io::Result<()> {
    let mut f = std::fs::File::create(path)?;
    writeln!(f, "leftIri,rightIri,labelSim,distM,failedCriterion")?;
    for c in result.review() {
        writeln!(
            f,
            "{},{},{:.6},{:.3},{}",
            c.left,
            c.right,
            c.label_sim,
            c.distance_m,
            c.failed.map(FailedCriterion::as_str).unwrap_or("")
        )?;
    }
    Ok(())
}

/// Serialise accepted links as N-Triples text.
pub fn links_as_ntriples(result: &InterlinkResult) -> String {
    let mut out = String::new();
    for t in result.links() {
        out.push_str(&format!(
            "<{}> <{}> {} .\n",
            t.subject, t.predicate, t.object
        ));
    }
    out
}
