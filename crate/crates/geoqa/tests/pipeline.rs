//! End-to-end pipeline behavior on the shipped dataset, at the library
//! level: thresholds from the lexicon, fall-through order, terminal ASK
//! answers, sidecar parses, and strict mode.

mod common;

use geoqa::annotate::{annotate, ingest_conllu};
use geoqa::exec::Answer;
use geoqa::kb::Term;
use geoqa::qgen::{self, FilterExpr, SpatialFn};

use common::{data_dir, engine};

fn solution_iris(answer: &Answer) -> Vec<String> {
    match answer {
        Answer::Solutions(terms) => terms
            .iter()
            .map(|t| match t {
                Term::Iri(i) => i.as_str().to_string(),
                other => panic!("expected IRI, got {other:?}"),
            })
            .collect(),
        other => panic!("expected solutions, got {other:?}"),
    }
}

#[test]
fn near_threshold_comes_from_the_concept_lexicon() {
    let engine = engine();

    // Forests carry a 5 km near-threshold; the default is 1 km.
    let forests = engine.compile("Which forests are near Manchester?").unwrap();
    let head = &forests.queries[0];
    assert!(head.filters.iter().any(|f| matches!(
        f,
        FilterExpr::Spatial { func: SpatialFn::DistanceLE(m), .. } if *m == 5000.0
    )));

    let hotels = engine.compile("Which hotels are near restaurants?").unwrap();
    assert!(hotels.queries[0].filters.iter().any(|f| matches!(
        f,
        FilterExpr::Spatial { func: SpatialFn::DistanceLE(m), .. } if *m == 1000.0
    )));

    // Peak Forest sits ~2 km from Manchester: inside 5 km, outside the
    // default — so the lexicon row decides the answer.
    let (_, outcome) = engine.ask("Which forests are near Manchester?", false).unwrap();
    assert_eq!(
        solution_iris(&outcome.answer),
        ["http://geoqa.example/osm/resource/peak_forest"]
    );
}

#[test]
fn empty_variants_fall_through_in_rank_order() {
    let engine = engine();
    let (generated, outcome) = engine
        .ask("Which mountains in Scotland have height more than 1000 metres?", false)
        .unwrap();

    // The first-ranked variant types ?x against the class without geometry
    // coverage and comes back empty; the second answers.
    assert!(generated.queries.len() >= 2);
    assert_eq!(outcome.chosen, Some(1));
    assert!(!outcome.exhausted);
    assert_eq!(outcome.attempts.len(), 2);
    assert!(outcome.attempts[0].result.answer.is_empty());
    assert_eq!(
        solution_iris(&outcome.answer),
        [
            "http://geoqa.example/osm/resource/ben_alder",
            "http://geoqa.example/osm/resource/ben_mor"
        ]
    );

    // The comparison reaches the height property through the sameAs hop.
    let chosen = &generated.queries[1];
    assert!(chosen.filters.iter().any(|f| matches!(
        f,
        FilterExpr::ValueCmp { constant, .. } if *constant == 1000.0
    )));
}

#[test]
fn a_false_ask_is_terminal() {
    let engine = engine();
    let (generated, outcome) = engine.ask("Is Berkshire north of Hampshire?", false).unwrap();
    assert_eq!(outcome.answer, Answer::Boolean(false));
    assert_eq!(outcome.attempts.len(), 1, "false is an answer, not a miss");
    assert!(outcome.answerable());
    assert_eq!(generated.detection.letters, "IRI");
}

#[test]
fn counts_are_distinct_and_numeric() {
    let engine = engine();
    let (_, outcome) = engine.ask("How many hospitals are there in Oxford?", false).unwrap();
    assert_eq!(outcome.answer, Answer::Count(3));
}

#[test]
fn conllu_sidecar_feeds_the_same_pipeline() {
    let engine = engine();
    let text = std::fs::read_to_string(data_dir().join("gold").join("q27.conllu")).unwrap();
    let mut tree = ingest_conllu(&text).unwrap();
    annotate(&mut tree, &engine.kb, &engine.lex).unwrap();

    let generated = qgen::generate(&tree, &engine.kb, &engine.lex);
    assert_eq!(generated.detection.letters, "CRI");
    let outcome = geoqa::exec::answer(&engine.kb, &generated.queries, false);
    assert_eq!(
        solution_iris(&outcome.answer),
        ["http://dbpedia.org/resource/River_Mersey"]
    );
}

#[test]
fn strict_mode_stops_at_the_head_query() {
    let engine = engine();
    let (_, outcome) = engine.ask("Which rivers cross Limerick?", true).unwrap();
    assert_eq!(outcome.attempts.len(), 1);
    assert_eq!(outcome.chosen, Some(0));
    assert!(outcome.exhausted);
    assert!(outcome.answer.is_empty());

    // Non-strict finds the crossing river further down the list.
    let (_, outcome) = engine.ask("Which rivers cross Limerick?", false).unwrap();
    assert_eq!(
        solution_iris(&outcome.answer),
        ["http://dbpedia.org/resource/River_Shannon"]
    );
}

#[test]
fn containment_gates_the_second_concept() {
    let engine = engine();

    // Without the region every restaurant near any hotel qualifies.
    let (_, unbounded) = engine.ask("Which restaurants are near hotels?", false).unwrap();
    assert_eq!(
        solution_iris(&unbounded.answer),
        [
            "http://geoqa.example/osm/resource/corner_bistro",
            "http://geoqa.example/osm/resource/riverside_cafe",
            "http://geoqa.example/osm/resource/taverna_hellas"
        ]
    );

    // Riverside Cafe's only nearby hotel sits just across the Limerick
    // boundary, so the region constraint on hotels removes it.
    let (_, bounded) = engine
        .ask("Which restaurants are near hotels in Limerick?", false)
        .unwrap();
    assert_eq!(
        solution_iris(&bounded.answer),
        ["http://geoqa.example/osm/resource/corner_bistro"]
    );
}
