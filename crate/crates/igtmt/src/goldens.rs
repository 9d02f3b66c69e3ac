//! Checked-in golden files: rendered prompts for every strategy and
//! direction, and the replayed result of the bundled mini-corpus run.
//!
//! Layout under the fixtures directory:
//!
//! ```text
//! mini.jsonl  dict.tsv  run.json  stub_replies.json
//! prompts/<strategy>__<direction>__n<n>.txt   prompts/glossing.txt
//! cache/<key>.json
//! golden/run_result.json   golden/report.csv
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use igtmt_core::corpus::load_jsonl;
use igtmt_core::igt::{parse_gloss_line, IgtEntry};
use igtmt_core::prompt::{
    build_glossing_prompt, build_prompt, Direction, PromptMessages, PromptOptions, PromptRequest, Segmented, Strategy,
};
use igtmt_llm::{EndpointConfig, StubReply, StubRequest, StubServer, Transport, UreqTransport};

use crate::config::{read_text, BackendKind, RunConfig};
use crate::dictionary::Dictionary;
use crate::report::{render_report, ReportFormat};
use crate::runner::{run_experiment, RunResult};
use crate::RunError;

/// Gloss a stand-in gloss model might return for the prompt input; one
/// lexeme differs from gold.
pub const MODEL_GLOSS: &str = "PL-child 3PL-PRS-play-FV out";

const SUPPORT: [usize; 2] = [1, 2];
const INPUT: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PromptCase {
    pub strategy: Strategy,
    pub direction: Direction,
    pub n_support: usize,
}

impl PromptCase {
    pub fn file_name(&self) -> String {
        format!(
            "{}__{}__n{}.txt",
            self.strategy.name(),
            self.direction.name(),
            self.n_support
        )
    }
}

/// Every strategy in both directions, at its one legal support size
/// (0 for zero-shot strategies, 2 otherwise).
pub fn prompt_cases() -> Vec<PromptCase> {
    let mut cases = Vec::new();
    for strategy in Strategy::ALL {
        for direction in [Direction::ToEnglish, Direction::FromEnglish] {
            let n_support = if strategy.is_zero_shot() { 0 } else { SUPPORT.len() };
            cases.push(PromptCase {
                strategy,
                direction,
                n_support,
            });
        }
    }
    cases
}

pub fn render_messages(m: &PromptMessages) -> String {
    format!("[system]\n{}\n[user]\n{}\n", m.system, m.user)
}

fn mini_entries(fixtures: &Path) -> Result<Vec<IgtEntry>, RunError> {
    let path = fixtures.join("mini.jsonl");
    let loaded = load_jsonl(&read_text(&path)?, "mini").map_err(|e| RunError::Corpus { path, source: e })?;
    Ok(loaded.corpus.entries)
}

/// The prompt request behind one golden prompt file.
pub fn prompt_request(fixtures: &Path, case: PromptCase) -> Result<PromptRequest, RunError> {
    let entries = mini_entries(fixtures)?;
    let input = entries[INPUT].clone();
    let support = if case.n_support == 0 {
        Vec::new()
    } else {
        SUPPORT.iter().map(|&i| entries[i].clone()).collect()
    };
    let input_gloss_override = match case.strategy {
        Strategy::ModelGloss => Some(parse_gloss_line(MODEL_GLOSS)),
        Strategy::OracleGloss | Strategy::ZeroGloss => input.gloss.clone(),
        _ => None,
    };
    let dictionary = if case.strategy == Strategy::DictBaseline {
        let dict = Dictionary::parse(&read_text(&fixtures.join("dict.tsv"))?)?;
        let source = match case.direction {
            Direction::ToEnglish => &input.transcription,
            Direction::FromEnglish => &input.translation,
        };
        Some(dict.lookup(source, case.direction))
    } else {
        None
    };
    Ok(PromptRequest {
        strategy: case.strategy,
        support,
        input,
        direction: case.direction,
        language_name: "Swahili".into(),
        metalanguage_name: "English".into(),
        input_gloss_override,
        dictionary,
    })
}

pub fn render_prompt_case(fixtures: &Path, case: PromptCase) -> Result<String, RunError> {
    let req = prompt_request(fixtures, case)?;
    Ok(render_messages(&build_prompt(&req, &PromptOptions::default())?))
}

pub fn render_glossing(fixtures: &Path) -> Result<String, RunError> {
    let entries = mini_entries(fixtures)?;
    let m = build_glossing_prompt(&entries[INPUT].transcription, "Swahili", Segmented::No)?;
    Ok(render_messages(&m))
}

/// Result JSON and CSV report of the bundled run, replayed at `concurrency`.
pub fn render_run(fixtures: &Path, concurrency: usize) -> Result<(RunResult, String, String), RunError> {
    let mut cfg = RunConfig::load(&fixtures.join("run.json"))?;
    cfg.concurrency = concurrency;
    cfg.backend = BackendKind::Replay;
    let result = run_experiment(&cfg, Arc::new(igtmt_llm::ForbiddenTransport))?;
    let json = result.to_json();
    let csv = render_report(std::slice::from_ref(&result), ReportFormat::Csv)?;
    Ok((result, json, csv))
}

/// Every golden file and its freshly rendered content.
pub fn expected_files(fixtures: &Path) -> Result<Vec<(PathBuf, String)>, RunError> {
    let mut files = Vec::new();
    let prompts = fixtures.join("prompts");
    for case in prompt_cases() {
        files.push((prompts.join(case.file_name()), render_prompt_case(fixtures, case)?));
    }
    files.push((prompts.join("glossing.txt"), render_glossing(fixtures)?));
    let (_, json, csv) = render_run(fixtures, 1)?;
    files.push((fixtures.join("golden").join("run_result.json"), json));
    files.push((fixtures.join("golden").join("report.csv"), csv));
    Ok(files)
}

/// Golden files whose content differs from a fresh rendering, or is missing.
pub fn check(fixtures: &Path) -> Result<Vec<PathBuf>, RunError> {
    let mut stale = Vec::new();
    for (path, text) in expected_files(fixtures)? {
        if fs::read(&path).ok().as_deref() != Some(text.as_bytes()) {
            stale.push(path);
        }
    }
    Ok(stale)
}

/// Rewrite every golden file, returning the ones that changed.
pub fn bless(fixtures: &Path) -> Result<Vec<PathBuf>, RunError> {
    let stale = check(fixtures)?;
    for (path, text) in expected_files(fixtures)? {
        if stale.contains(&path) {
            let io = |e| RunError::Io {
                path: path.clone(),
                source: e,
            };
            fs::create_dir_all(path.parent().expect("golden files live in a directory")).map_err(io)?;
            fs::write(&path, text).map_err(io)?;
        }
    }
    Ok(stale)
}

/// Chat stub answering each prompt with the scripted reply for its input
/// sentence, found on the last `... Sentence: ` line of the user message.
pub fn scripted_stub(replies: BTreeMap<String, String>) -> std::io::Result<StubServer> {
    StubServer::start(move |req: &StubRequest| {
        let input = req.last_user_message().and_then(|m| {
            m.lines()
                .rev()
                .find_map(|l| l.split_once(" Sentence: ").map(|(_, s)| s.trim().to_string()))
        });
        match input.and_then(|s| replies.get(&s)) {
            Some(reply) => StubReply::chat(reply),
            None => StubReply::status(404, "no scripted reply"),
        }
    })
}

/// Replace the shipped cache with completions recorded from the scripted
/// stub in `stub_replies.json`.
pub fn regenerate_cache(fixtures: &Path) -> Result<usize, RunError> {
    let path = fixtures.join("stub_replies.json");
    let replies: BTreeMap<String, String> =
        serde_json::from_str(&read_text(&path)?).map_err(|e| RunError::Config(format!("{}: {e}", path.display())))?;
    let stub = scripted_stub(replies).map_err(|e| RunError::Io {
        path: path.clone(),
        source: e,
    })?;

    let mut cfg = RunConfig::load(&fixtures.join("run.json"))?;
    if cfg.cache_dir.exists() {
        fs::remove_dir_all(&cfg.cache_dir).map_err(|e| RunError::Io {
            path: cfg.cache_dir.clone(),
            source: e,
        })?;
    }
    cfg.backend = BackendKind::Live;
    cfg.endpoint = Some(EndpointConfig::new(format!("{}/v1/chat/completions", stub.url())));
    let transport: Arc<dyn Transport> = Arc::new(UreqTransport::default());
    run_experiment(&cfg, transport)?;
    Ok(stub.hits())
}
