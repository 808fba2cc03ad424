use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use geoqa::eval;
use geoqa::exec::Answer;
use geoqa::interlink::{self, InterlinkConfig};
use geoqa::kb::{Iri, KnowledgeBase, Source};
use geoqa::pipeline::Engine;

#[derive(Parser)]
#[command(name = "geoqa", version, about = "Geospatial question answering over a source-tagged triple store")]
struct Cli {
    /// Data directory holding kb/ and lexicons/ (GEOQA_DATA overrides the
    /// bundled default).
    #[arg(long, global = true)]
    data: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Answer a question end to end.
    Ask {
        question: String,
        /// Execute only the top-ranked query (no fall-through).
        #[arg(long)]
        strict: bool,
        /// Also print ranked queries and per-pattern join cardinalities.
        #[arg(long)]
        explain: bool,
    },
    /// Show the detected pattern, logical form, and ranked queries.
    Compile { question: String },
    /// Score the pipeline against a gold question file.
    Eval {
        /// Alternative data directory for this run.
        #[arg(long)]
        kb: Option<PathBuf>,
        /// JSON-lines gold file.
        #[arg(long)]
        gold: PathBuf,
        #[arg(long)]
        strict: bool,
        /// Where to write the JSON report.
        #[arg(long, default_value = "eval-report.json")]
        out: PathBuf,
    },
    /// Match two datasets into owl:sameAs links.
    Interlink {
        /// Left dataset (N-Triples).
        #[arg(long)]
        left: PathBuf,
        /// Right dataset (N-Triples).
        #[arg(long)]
        right: PathBuf,
        /// TSV of leftClassIri<TAB>rightClassIri pairs to compare.
        #[arg(long)]
        classes: PathBuf,
        /// Label-similarity acceptance threshold.
        #[arg(long, default_value_t = 0.85)]
        sim: f64,
        /// Distance acceptance threshold in metres.
        #[arg(long, default_value_t = 1000.0)]
        dist: f64,
        /// Output N-Triples file of accepted links.
        #[arg(long)]
        out: PathBuf,
        /// Output CSV of borderline pairs for manual review.
        #[arg(long)]
        review: PathBuf,
    },
    /// Knowledge-base inspection.
    Kb {
        #[command(subcommand)]
        cmd: KbCmd,
    },
}

#[derive(Subcommand)]
enum KbCmd {
    /// Print store statistics.
    Stat,
}

fn data_dir(flag: Option<PathBuf>) -> PathBuf {
    if let Some(d) = flag {
        return d;
    }
    if let Ok(d) = std::env::var("GEOQA_DATA") {
        if !d.is_empty() {
            return PathBuf::from(d);
        }
    }
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data")
}

/// Errors past argument parsing are data problems: exit 2.
fn load_engine(dir: &Path) -> Result<Engine, ExitCode> {
    Engine::load(dir).map_err(|e| {
        eprintln!("error: {e}");
        ExitCode::from(2)
    })
}

fn print_answer(answer: &Answer) {
    match answer {
        Answer::Solutions(terms) if terms.is_empty() => println!("(no results)"),
        Answer::Solutions(terms) => {
            for t in terms {
                println!("{}", t.serialized());
            }
        }
        Answer::Boolean(b) => println!("{b}"),
        Answer::Count(n) => println!("{n}"),
    }
}

fn run_ask(engine: &Engine, question: &str, strict: bool, explain: bool) -> ExitCode {
    let (gen, outcome) = match engine.ask(question, strict) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    println!("letters: {}", gen.detection.letters);
    match gen.detection.pattern {
        Some(p) => println!("pattern: {p}"),
        None => println!("pattern: (none)"),
    }
    if let Some(lf) = &gen.logical_form {
        println!("logical form: {lf}");
    }
    for d in &gen.diagnostics {
        println!("note: {d}");
    }
    if outcome.chosen.is_none() {
        println!("not answerable: no query generated");
        return ExitCode::SUCCESS;
    }
    if explain {
        println!("ranked queries:");
        for (i, q) in gen.queries.iter().enumerate() {
            println!("[{i}] {q}");
        }
        for a in &outcome.attempts {
            println!(
                "attempt {} ({}), est={}:",
                a.index,
                a.variant.as_str(),
                geoqa::qgen::fmt_est(a.est_card)
            );
            for (pat, n) in &a.result.pattern_cards {
                println!("  {n:>6}  {pat}");
            }
            for note in &a.result.notes {
                println!("  note: {note}");
            }
        }
    }
    let chosen = outcome.chosen.unwrap();
    println!(
        "answered by query {}/{} ({}){}",
        chosen + 1,
        gen.queries.len(),
        gen.queries[chosen].variant.as_str(),
        if outcome.exhausted {
            " — all queries empty"
        } else {
            ""
        }
    );
    print_answer(&outcome.answer);
    ExitCode::SUCCESS
}

fn run_compile(engine: &Engine, question: &str) -> ExitCode {
    let gen = match engine.compile(question) {
        Ok(g) => g,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    println!("letters: {}", gen.detection.letters);
    match gen.detection.pattern {
        Some(p) => println!("pattern: {p}"),
        None => println!("pattern: (none)"),
    }
    if let Some(lf) = &gen.logical_form {
        println!("logical form: {lf}");
    }
    for d in &gen.diagnostics {
        println!("note: {d}");
    }
    for (i, q) in gen.queries.iter().enumerate() {
        println!("[{i}] {q}");
    }
    ExitCode::SUCCESS
}

fn run_eval(dir: &Path, gold: &Path, strict: bool, out: &Path) -> ExitCode {
    let engine = match load_engine(dir) {
        Ok(e) => e,
        Err(code) => return code,
    };
    let questions = match eval::load_gold(gold) {
        Ok(q) => q,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let gold_dir = gold.parent().unwrap_or(Path::new("."));
    let report = eval::run_benchmark(&engine.kb, &engine.lex, &questions, gold_dir, strict);
    print!("{}", report.render_table());
    if let Err(e) = std::fs::write(out, report.to_json()) {
        eprintln!("error: cannot write {}: {e}", out.display());
        return ExitCode::from(2);
    }
    println!("report written to {}", out.display());
    ExitCode::SUCCESS
}

fn load_side(path: &Path, source: Source) -> Result<KnowledgeBase, ExitCode> {
    let mut b = KnowledgeBase::builder();
    match b.load_ntriples(path, source) {
        Ok(report) => {
            for (line, reason) in &report.rejected {
                eprintln!("warning: {}:{}: {}", path.display(), line, reason);
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            return Err(ExitCode::from(2));
        }
    }
    Ok(b.build())
}

#[allow(clippy::too_many_arguments)]
fn run_interlink(
    left: &Path,
    right: &Path,
    classes: &Path,
    sim: f64,
    dist: f64,
    out: &Path,
    review: &Path,
) -> ExitCode {
    let left_kb = match load_side(left, Source::Osm) {
        Ok(k) => k,
        Err(c) => return c,
    };
    let right_kb = match load_side(right, Source::Dbpedia) {
        Ok(k) => k,
        Err(c) => return c,
    };
    let text = match std::fs::read_to_string(classes) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", classes.display());
            return ExitCode::from(2);
        }
    };
    let mut pairs = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((l, r)) = line.split_once('\t') else {
            eprintln!(
                "error: {}:{}: expected leftClassIri<TAB>rightClassIri",
                classes.display(),
                idx + 1
            );
            return ExitCode::from(2);
        };
        match (Iri::new(l.trim()), Iri::new(r.trim())) {
            (Ok(l), Ok(r)) => pairs.push((l, r)),
            (Err(e), _) | (_, Err(e)) => {
                eprintln!("error: {}:{}: {e}", classes.display(), idx + 1);
                return ExitCode::from(2);
            }
        }
    }
    let cfg = InterlinkConfig {
        sim_threshold: sim,
        max_distance_m: dist,
    };
    let result = interlink::interlink(&left_kb, &right_kb, &pairs, &cfg);
    if let Err(e) = std::fs::write(out, interlink::links_as_ntriples(&result)) {
        eprintln!("error: cannot write {}: {e}", out.display());
        return ExitCode::from(2);
    }
    if let Err(e) = interlink::write_review_csv(&result, review) {
        eprintln!("error: cannot write {}: {e}", review.display());
        return ExitCode::from(2);
    }
    println!(
        "evaluated {} pairs: {} accepted, {} for review, {} skipped (no geometry)",
        result.evaluated,
        result.accepted().count(),
        result.review().count(),
        result.skipped.len()
    );
    println!("links written to {}", out.display());
    println!("review queue written to {}", review.display());
    ExitCode::SUCCESS
}

fn run_kb_stat(engine: &Engine) -> ExitCode {
    let stats = engine.kb.stats();
    println!("triples: {}", stats.total_triples);
    println!("distinct subjects: {}", stats.distinct_subjects);
    println!("distinct predicates: {}", stats.predicate_count.len());
    for (source, n) in engine.kb.source_counts() {
        println!("source {}: {} triples", source.as_str(), n);
    }
    for r in &engine.load_reports {
        if !r.rejected.is_empty() {
            println!("{}: {} rejected lines", r.file, r.rejected.len());
        }
    }
    ExitCode::SUCCESS
}

fn main() -> ExitCode {
    // Usage problems exit 1; clap's default would be 2, which we reserve
    // for data-load failures.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp
                | clap::error::ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    let dir = data_dir(cli.data);
    match cli.cmd {
        Cmd::Ask {
            question,
            strict,
            explain,
        } => match load_engine(&dir) {
            Ok(engine) => run_ask(&engine, &question, strict, explain),
            Err(code) => code,
        },
        Cmd::Compile { question } => match load_engine(&dir) {
            Ok(engine) => run_compile(&engine, &question),
            Err(code) => code,
        },
        Cmd::Eval {
            kb,
            gold,
            strict,
            out,
        } => run_eval(&kb.unwrap_or(dir), &gold, strict, &out),
        Cmd::Interlink {
            left,
            right,
            classes,
            sim,
            dist,
            out,
            review,
        } => run_interlink(&left, &right, &classes, sim, dist, &out, &review),
        Cmd::Kb { cmd: KbCmd::Stat } => match load_engine(&dir) {
            Ok(engine) => run_kb_stat(&engine),
            Err(code) => code,
        },
    }
}
