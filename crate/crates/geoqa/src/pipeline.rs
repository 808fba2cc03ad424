//! End-to-end facade: load a data directory, then annotate, compile, or
//! answer questions in one call.

use std::path::Path;

use crate::annotate::{self, AnnotateError, AnnotatedTree};
use crate::exec::{self, Outcome};
use crate::kb::{KbError, KnowledgeBase, LoadReport};
use crate::lexicon::{LexiconError, Lexicons};
use crate::qgen::{self, Generated};

#[derive(Debug, thiserror::Error)]
pub enum EngineError {
    #[error(transparent)]
    Kb(#[from] KbError),
    #[error(transparent)]
    Lexicon(#[from] LexiconError),
}

/// Loaded knowledge base plus lexicon tables.
pub struct Engine {
    pub kb: KnowledgeBase,
    pub lex: Lexicons,
    pub load_reports: Vec<LoadReport>,
}

impl Engine {
    /// Expects `kb/manifest.tsv` and `lexicons/*.tsv` under `data_dir`.
    pub fn load(data_dir: &Path) -> Result<Engine, EngineError> {
        let (kb, load_reports) =
            KnowledgeBase::load_manifest(&data_dir.join("kb").join("manifest.tsv"))?;
        let lex = Lexicons::load(&data_dir.join("lexicons"))?;
        Ok(Engine {
            kb,
            lex,
            load_reports,
        })
    }

    pub fn annotate(&self, text: &str) -> Result<AnnotatedTree, AnnotateError> {
        annotate::annotate_question(text, &self.kb, &self.lex)
    }

    /// Annotate and generate the ranked query list without executing.
    pub fn compile(&self, text: &str) -> Result<Generated, AnnotateError> {
        let tree = self.annotate(text)?;
        Ok(qgen::generate(&tree, &self.kb, &self.lex))
    }

    /// Full pipeline: annotate, generate, execute with fall-through.
    pub fn ask(&self, text: &str, strict: bool) -> Result<(Generated, Outcome), AnnotateError> {
        let gen = self.compile(text)?;
        let outcome = exec::answer(&self.kb, &gen.queries, strict);
        Ok((gen, outcome))
    }
}
