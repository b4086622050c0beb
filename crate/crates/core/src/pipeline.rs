//! File-based pipeline stages behind the command-line tool.
//!
//! Stages only talk through files in the output directory:
//!
//! | stage           | reads                         | writes                                   |
//! |-----------------|-------------------------------|------------------------------------------|
//! | `detect`        | embeddings, graph TSVs        | `pairs.tsv`, `groups.tsv`, `detect_report.json` |
//! | `train-project` | embeddings, `groups.tsv`      | `phi.txt`, `projected.txt`, `train-project_report.json` |
//! | `eval`          | embeddings, `projected.txt`, datasets | `eval_report.json`               |
//!
//! Every report echoes the full [`RunConfig`]. Reports carry no wall-clock
//! data unless `timings` is set, so identical runs give identical bytes.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::analogy::{load_analogy, AnalogyResult, AnalogySpace};
use crate::detector::{
    build_groups, detect_pairs, domain_profile_from_neighbors, hypernym_profile_from_neighbors,
    load_groups, save_groups, save_pairs, top_n, DetectConfig, PseudoGroup, DEFAULT_LAMBDA,
    DEFAULT_TOP_N,
};
use crate::embedding::{
    load_embeddings, nearest_neighbors, save_embeddings, senses_of, EmbeddingSet, SenseKey,
    DEFAULT_NEIGHBORS,
};
use crate::error::{Error, Result};
use crate::lexical::{load_graph, LexicalGraph};
use crate::projector::{
    make_representatives, project_space, train_transition, training_pairs, Init,
    RepresentativeMode, TrainingConfig,
};
use crate::similarity::{
    eval_scws, eval_wordsim, load_scws, load_wordsim, ScwsScore, WordSimScore, DEFAULT_TAU,
    DEFAULT_WINDOW,
};

pub const PAIRS_FILE: &str = "pairs.tsv";
pub const GROUPS_FILE: &str = "groups.tsv";
pub const PHI_FILE: &str = "phi.txt";
pub const PROJECTED_FILE: &str = "projected.txt";

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpaceSelector {
    Original,
    Projected,
    #[default]
    Both,
}

/// Everything a run depends on. Echoed verbatim into each report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub embeddings: Option<PathBuf>,
    pub synsets: Option<PathBuf>,
    pub hypernyms: Option<PathBuf>,
    pub domains: Option<PathBuf>,
    pub wordsim: Option<PathBuf>,
    pub scws: Option<PathBuf>,
    pub analogy: Option<PathBuf>,
    /// Groups file for `train-project`; defaults to `<out_dir>/groups.tsv`.
    pub groups: Option<PathBuf>,
    /// Projected space for `eval`; defaults to `<out_dir>/projected.txt`.
    pub projected: Option<PathBuf>,
    pub top_n: usize,
    pub lambda: f64,
    pub neighbors: usize,
    pub rep: RepresentativeMode,
    pub lr: f64,
    pub epochs: usize,
    pub seed: u64,
    pub tau: f64,
    pub window: usize,
    pub space: SpaceSelector,
    pub out_dir: PathBuf,
    /// Include wall-clock timings in reports (breaks byte-reproducibility).
    pub timings: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        let training = TrainingConfig::default();
        RunConfig {
            embeddings: None,
            synsets: None,
            hypernyms: None,
            domains: None,
            wordsim: None,
            scws: None,
            analogy: None,
            groups: None,
            projected: None,
            top_n: DEFAULT_TOP_N,
            lambda: DEFAULT_LAMBDA,
            neighbors: DEFAULT_NEIGHBORS,
            rep: RepresentativeMode::Mean,
            lr: training.learning_rate,
            epochs: training.epochs,
            seed: training.seed,
            tau: DEFAULT_TAU,
            window: DEFAULT_WINDOW,
            space: SpaceSelector::Both,
            out_dir: PathBuf::from("out"),
            timings: false,
        }
    }
}

impl RunConfig {
    pub fn detect_config(&self) -> DetectConfig {
        DetectConfig {
            top_n: self.top_n,
            lambda: self.lambda,
            neighbors: self.neighbors,
        }
    }

    pub fn training_config(&self) -> TrainingConfig {
        TrainingConfig {
            learning_rate: self.lr,
            epochs: self.epochs,
            seed: self.seed,
            shuffle: true,
            init: Init::Identity,
            ridge: 0.0,
        }
    }

    pub fn groups_path(&self) -> PathBuf {
        self.groups
            .clone()
            .unwrap_or_else(|| self.out_dir.join(GROUPS_FILE))
    }

    pub fn projected_path(&self) -> PathBuf {
        self.projected
            .clone()
            .unwrap_or_else(|| self.out_dir.join(PROJECTED_FILE))
    }

    fn require<'a>(&self, path: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path> {
        path.as_deref()
            .ok_or_else(|| Error::InvalidArgument(format!("--{} is required", flag)))
    }

    pub fn load_embeddings(&self) -> Result<EmbeddingSet> {
        load_embeddings(self.require(&self.embeddings, "embeddings")?)
    }

    pub fn load_graph(&self) -> Result<LexicalGraph> {
        load_graph(
            self.require(&self.synsets, "synsets")?,
            self.require(&self.hypernyms, "hypernyms")?,
            self.require(&self.domains, "domains")?,
        )
    }

    fn has_graph(&self) -> bool {
        self.synsets.is_some() && self.hypernyms.is_some() && self.domains.is_some()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectionSummary {
    pub senses: usize,
    pub multi_sense_words: usize,
    pub synsets: usize,
    pub domains: usize,
    pub pairs: usize,
    pub groups: usize,
    pub grouped_senses: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainingSummary {
    pub groups: usize,
    pub training_pairs: usize,
    pub loss_curve: Vec<f64>,
    /// Senses projected onto the zero vector.
    pub zero_rows: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "status")]
pub enum DatasetStatus {
    Loaded { path: PathBuf, items: usize },
    Absent { path: Option<PathBuf> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpaceScores {
    pub space: SpaceSelector,
    pub wordsim: Option<WordSimScore>,
    pub scws: Option<ScwsScore>,
    pub analogy: Option<AnalogyResult>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvaluationSummary {
    pub datasets: BTreeMap<String, DatasetStatus>,
    pub spaces: Vec<SpaceScores>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub command: String,
    pub config: RunConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detection: Option<DetectionSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub training: Option<TrainingSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub evaluation: Option<EvaluationSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timings_seconds: Option<BTreeMap<String, f64>>,
}

impl RunReport {
    fn new(command: &str, config: &RunConfig) -> Self {
        RunReport {
            command: command.to_owned(),
            config: config.clone(),
            detection: None,
            training: None,
            evaluation: None,
            timings_seconds: None,
        }
    }

    pub fn file_name(command: &str) -> String {
        format!("{}_report.json", command)
    }

    fn write(&self, out_dir: &Path) -> Result<PathBuf> {
        let path = out_dir.join(Self::file_name(&self.command));
        let mut json = serde_json::to_string_pretty(self)
            .map_err(|e| Error::InvalidArgument(format!("report serialization: {}", e)))?;
        json.push('\n');
        fs::write(&path, json).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }
}

struct Timer {
    enabled: bool,
    laps: BTreeMap<String, f64>,
}

impl Timer {
    fn new(enabled: bool) -> Self {
        Timer {
            enabled,
            laps: BTreeMap::new(),
        }
    }

    fn time<T>(&mut self, name: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        if self.enabled {
            self.laps
                .insert(name.to_owned(), start.elapsed().as_secs_f64());
        }
        out
    }

    fn finish(self) -> Option<BTreeMap<String, f64>> {
        self.enabled.then_some(self.laps)
    }
}

fn ensure_out_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Detects pseudo multi-sense pairs and writes the pairs and groups files.
pub fn cmd_detect(cfg: &RunConfig) -> Result<RunReport> {
    let mut timer = Timer::new(cfg.timings);
    let set = timer.time("load_embeddings", || cfg.load_embeddings())?;
    let graph = timer.time("load_graph", || cfg.load_graph())?;
    let pairs = timer.time("detect", || {
        detect_pairs(&set, &graph, &cfg.detect_config())
    })?;
    let groups = build_groups(&pairs);

    ensure_out_dir(&cfg.out_dir)?;
    save_pairs(&pairs, cfg.out_dir.join(PAIRS_FILE))?;
    save_groups(&groups, cfg.out_dir.join(GROUPS_FILE))?;

    let mut report = RunReport::new("detect", cfg);
    report.detection = Some(DetectionSummary {
        senses: set.len(),
        multi_sense_words: set
            .words()
            .iter()
            .filter(|w| set.sense_count(w) >= 2)
            .count(),
        synsets: graph.synset_count(),
        domains: graph.domain_count(),
        pairs: pairs.len(),
        groups: groups.len(),
        grouped_senses: groups.iter().map(|g| g.members.len()).sum(),
    });
    report.timings_seconds = timer.finish();
    report.write(&cfg.out_dir)?;
    Ok(report)
}

/// Checks every group member against the space.
pub fn validate_groups(set: &EmbeddingSet, groups: &[PseudoGroup]) -> Result<()> {
    for g in groups {
        if g.members.is_empty() {
            return Err(Error::InvalidArgument(format!(
                "group of {:?} is empty",
                g.word
            )));
        }
        for key in g.keys() {
            if set.row_of(&key).is_none() {
                return Err(Error::KeyNotFound(format!("group member {}", key)));
            }
        }
    }
    Ok(())
}

/// Trains the transition matrix on a groups file and projects the space.
pub fn cmd_train_project(cfg: &RunConfig) -> Result<RunReport> {
    let mut timer = Timer::new(cfg.timings);
    let set = timer.time("load_embeddings", || cfg.load_embeddings())?;
    let groups = load_groups(cfg.groups_path())?;
    validate_groups(&set, &groups)?;

    let reps = make_representatives(&set, &groups, cfg.rep, cfg.seed)?;
    let pairs = training_pairs(&set, &reps)?;
    let outcome = timer.time("train", || {
        train_transition(&pairs, set.dim(), &cfg.training_config())
    })?;
    let projection = timer.time("project", || project_space(&set, &outcome.phi))?;

    ensure_out_dir(&cfg.out_dir)?;
    outcome.phi.save(cfg.out_dir.join(PHI_FILE))?;
    save_embeddings(&projection.space, cfg.out_dir.join(PROJECTED_FILE))?;

    let mut report = RunReport::new("train-project", cfg);
    report.training = Some(TrainingSummary {
        groups: groups.len(),
        training_pairs: pairs.len(),
        loss_curve: outcome.loss_curve,
        zero_rows: projection
            .zero_rows
            .iter()
            .map(SenseKey::to_string)
            .collect(),
    });
    report.timings_seconds = timer.finish();
    report.write(&cfg.out_dir)?;
    Ok(report)
}

/// Loads a dataset if its path is set and exists. A path that exists but
/// fails to parse is an error.
fn load_dataset<T>(
    path: &Option<PathBuf>,
    load: impl FnOnce(&Path) -> Result<Vec<T>>,
) -> Result<(Option<Vec<T>>, DatasetStatus)> {
    match path {
        Some(p) if p.exists() => {
            let data = load(p)?;
            let status = DatasetStatus::Loaded {
                path: p.clone(),
                items: data.len(),
            };
            Ok((Some(data), status))
        }
        other => Ok((
            None,
            DatasetStatus::Absent {
                path: other.clone(),
            },
        )),
    }
}

/// Scores the selected spaces on every available dataset.
pub fn cmd_eval(cfg: &RunConfig) -> Result<RunReport> {
    let mut timer = Timer::new(cfg.timings);
    let (wordsim, ws_status) = load_dataset(&cfg.wordsim, |p| load_wordsim(p))?;
    let (scws, scws_status) = load_dataset(&cfg.scws, |p| load_scws(p))?;
    let (analogy, an_status) = load_dataset(&cfg.analogy, |p| load_analogy(p))?;

    let mut spaces: Vec<(SpaceSelector, EmbeddingSet)> = Vec::new();
    if matches!(cfg.space, SpaceSelector::Original | SpaceSelector::Both) {
        spaces.push((SpaceSelector::Original, cfg.load_embeddings()?));
    }
    if matches!(cfg.space, SpaceSelector::Projected | SpaceSelector::Both) {
        spaces.push((
            SpaceSelector::Projected,
            load_embeddings(cfg.projected_path())?,
        ));
    }

    let mut scores = Vec::new();
    for (which, set) in &spaces {
        let label = match which {
            SpaceSelector::Original => "original",
            _ => "projected",
        };
        let ws = match &wordsim {
            Some(d) => Some(timer.time(&format!("{}_wordsim", label), || eval_wordsim(set, d))?),
            None => None,
        };
        let sc = match &scws {
            Some(d) => Some(timer.time(&format!("{}_scws", label), || {
                eval_scws(set, d, cfg.tau, cfg.window)
            })?),
            None => None,
        };
        let an = match &analogy {
            Some(d) => Some(timer.time(&format!("{}_analogy", label), || {
                AnalogySpace::new(set).evaluate_all(d)
            })?),
            None => None,
        };
        scores.push(SpaceScores {
            space: *which,
            wordsim: ws,
            scws: sc,
            analogy: an,
        });
    }

    ensure_out_dir(&cfg.out_dir)?;
    let mut report = RunReport::new("eval", cfg);
    report.evaluation = Some(EvaluationSummary {
        datasets: BTreeMap::from([
            ("analogy".to_owned(), an_status),
            ("scws".to_owned(), scws_status),
            ("wordsim".to_owned(), ws_status),
        ]),
        spaces: scores,
    });
    report.timings_seconds = timer.finish();
    report.write(&cfg.out_dir)?;
    Ok(report)
}

/// Per-sense neighbor listing with top domains, top hypernyms and the
/// same-meaning verdicts among the word's senses.
pub fn cmd_neighbors(cfg: &RunConfig, word: &str) -> Result<String> {
    let set = cfg.load_embeddings()?;
    let graph = if cfg.has_graph() {
        Some(cfg.load_graph()?)
    } else {
        None
    };
    let resolved = set
        .resolve(word)
        .ok_or_else(|| Error::KeyNotFound(format!("word {:?}", word)))?
        .to_owned();
    let senses = senses_of(&set, &resolved);

    let mut out = String::new();
    let mut tops = Vec::new();
    for key in &senses {
        let nn = nearest_neighbors(&set, key, cfg.neighbors)?;
        let listed: Vec<String> = nn
            .neighbors
            .iter()
            .map(|n| format!("{} ({:.3})", n.key, n.score))
            .collect();
        writeln!(out, "{}", key).unwrap();
        writeln!(out, "  neighbors: {}", listed.join(", ")).unwrap();
        if let Some(g) = &graph {
            let domains = top_n(&domain_profile_from_neighbors(g, &nn), cfg.top_n);
            let hypernyms = top_n(&hypernym_profile_from_neighbors(g, &nn), cfg.top_n);
            writeln!(out, "  domains:   {}", domains.join(", ")).unwrap();
            writeln!(out, "  hypernyms: {}", hypernyms.join(", ")).unwrap();
            tops.push((domains, hypernyms));
        }
    }

    if graph.is_some() && senses.len() >= 2 {
        let n = cfg.top_n as f64;
        let shared =
            |a: &[String], b: &[String]| a.iter().filter(|x| b.contains(x)).count() as f64 / n;
        let mut pairs = Vec::new();
        writeln!(out, "verdicts:").unwrap();
        for k in 0..senses.len() {
            for l in k + 1..senses.len() {
                let d = shared(&tops[k].0, &tops[l].0);
                let h = shared(&tops[k].1, &tops[l].1);
                let same = d + h > cfg.lambda;
                writeln!(
                    out,
                    "  {}#{} {} {}#{}  domain {} hypernym {} total {}",
                    resolved,
                    k,
                    if same { "==" } else { "!=" },
                    resolved,
                    l,
                    d,
                    h,
                    d + h
                )
                .unwrap();
                if same {
                    pairs.push(crate::detector::PseudoPair {
                        word: resolved.clone(),
                        a: k,
                        b: l,
                        sim_domain: d,
                        sim_hypernym: h,
                        sim_total: d + h,
                    });
                }
            }
        }
        for g in build_groups(&pairs) {
            let members: Vec<String> = g.keys().map(|k| k.to_string()).collect();
            writeln!(out, "  same meaning: {{{}}}", members.join(", ")).unwrap();
        }
    }
    Ok(out)
}

/// Short human-readable summary of a report.
pub fn render_summary(report: &RunReport) -> String {
    let mut out = String::new();
    if let Some(d) = &report.detection {
        writeln!(
            out,
            "detected {} pairs in {} groups ({} senses) over {} multi-sense words",
            d.pairs, d.groups, d.grouped_senses, d.multi_sense_words
        )
        .unwrap();
    }
    if let Some(t) = &report.training {
        let last = t
            .loss_curve
            .last()
            .map(|l| format!("{:.6}", l))
            .unwrap_or_else(|| "n/a".into());
        writeln!(
            out,
            "trained on {} pairs from {} groups; final loss {}",
            t.training_pairs, t.groups, last
        )
        .unwrap();
        if !t.zero_rows.is_empty() {
            writeln!(
                out,
                "warning: {} senses projected to the zero vector",
                t.zero_rows.len()
            )
            .unwrap();
        }
    }
    if let Some(e) = &report.evaluation {
        let fmt = |x: Option<f64>| x.map(|v| format!("{:.1}", v)).unwrap_or_else(|| "-".into());
        let names: Vec<String> = e
            .spaces
            .iter()
            .map(|s| format!("{:?}", s.space).to_lowercase())
            .collect();
        writeln!(
            out,
            "{:<22}{}",
            "metric",
            names
                .iter()
                .map(|n| format!("{:>12}", n))
                .collect::<String>()
        )
        .unwrap();
        let mut row = |name: &str, f: &dyn Fn(&SpaceScores) -> Option<f64>| {
            let cells: String = e
                .spaces
                .iter()
                .map(|s| format!("{:>12}", fmt(f(s))))
                .collect();
            writeln!(out, "{:<22}{}", name, cells).unwrap();
        };
        row("wordsim avgSim", &|s| {
            s.wordsim.as_ref().and_then(|w| w.avg_sim)
        });
        row("scws localSim", &|s| {
            s.scws.as_ref().and_then(|w| w.local_sim)
        });
        row("scws avgSim", &|s| s.scws.as_ref().and_then(|w| w.avg_sim));
        row("scws avgSimC", &|s| {
            s.scws.as_ref().and_then(|w| w.avg_sim_c)
        });
        row("analogy semantic", &|s| {
            s.analogy.as_ref().and_then(|a| a.semantic_accuracy)
        });
        row("analogy syntactic", &|s| {
            s.analogy.as_ref().and_then(|a| a.syntactic_accuracy)
        });
        for (name, status) in &e.datasets {
            if let DatasetStatus::Absent { .. } = status {
                writeln!(out, "{}: absent", name).unwrap();
            }
        }
    }
    out
}
