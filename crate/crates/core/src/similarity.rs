//! Word-similarity metrics for multi-sense spaces and the WordSim-353 and
//! SCWS drivers.
//!
//! - `avg_sim`: mean cosine over all sense pairs.
//! - `avg_sim_c`: the same double sum weighted by both words' sense
//!   posteriors given their contexts, keeping the `1/(K K')` factor.
//! - `local_sim`: cosine between the most probable sense of each word.
//!
//! The sense posterior is a temperature softmax over the cosine between each
//! sense and a context vector; the context vector is the mean of the
//! word-mean vectors of known tokens in a window around the target.

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embedding::{cosine, row_cosine, EmbeddingSet};
use crate::error::{Error, Result};

pub const DEFAULT_TAU: f64 = 1.0;
pub const DEFAULT_WINDOW: usize = 5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WordPairJudgment {
    pub w1: String,
    pub w2: String,
    pub human_score: f64,
}

/// A word pair with one context per word. `pos1`/`pos2` index the target
/// token inside `ctx1`/`ctx2`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContextualPairJudgment {
    pub w1: String,
    pub w2: String,
    pub ctx1: Vec<String>,
    pub pos1: usize,
    pub ctx2: Vec<String>,
    pub pos2: usize,
    pub human_score: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SensePosterior {
    pub word: String,
    pub probs: Vec<f64>,
}

impl SensePosterior {
    /// Most probable sense; ties go to the lowest index.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &p) in self.probs.iter().enumerate() {
            if p > self.probs[best] {
                best = i;
            }
        }
        best
    }
}

fn rows_of<'a>(set: &'a EmbeddingSet, word: &str) -> Result<&'a [usize]> {
    let rows = set.sense_rows(word);
    if rows.is_empty() {
        return Err(Error::KeyNotFound(word.to_owned()));
    }
    Ok(rows)
}

/// Mean cosine over every pair of senses of `w1` and `w2`.
pub fn avg_sim(set: &EmbeddingSet, w1: &str, w2: &str) -> Result<f64> {
    let (r1, r2) = (rows_of(set, w1)?, rows_of(set, w2)?);
    let mut sum = 0.0;
    for &i in r1 {
        for &j in r2 {
            sum += row_cosine(set, i, j)?;
        }
    }
    Ok(sum / (r1.len() * r2.len()) as f64)
}

/// Mean of the word-mean vectors of in-vocabulary tokens within `window`
/// positions of `target`, the target itself excluded. Unknown tokens are
/// retried in lowercase. Returns the zero vector when nothing is known.
pub fn context_vector(
    set: &EmbeddingSet,
    ctx: &[String],
    target: usize,
    window: usize,
) -> Vec<f64> {
    let mut acc = vec![0.0; set.dim()];
    let mut count = 0usize;
    let lo = target.saturating_sub(window);
    let hi = target
        .saturating_add(window)
        .min(ctx.len().saturating_sub(1));
    for (pos, token) in ctx.iter().enumerate().take(hi + 1).skip(lo) {
        if pos == target {
            continue;
        }
        let Some(word) = set.resolve(token) else {
            continue;
        };
        let mean = set.word_mean(word).expect("resolved word has senses");
        for (a, x) in acc.iter_mut().zip(&mean) {
            *a += x;
        }
        count += 1;
    }
    if count > 0 {
        let n = count as f64;
        acc.iter_mut().for_each(|a| *a /= n);
    }
    acc
}

/// `P(word, c, i)` proportional to `exp(cos(v_i, c) / tau)`; uniform when
/// `c` is the zero vector.
pub fn sense_posterior(
    set: &EmbeddingSet,
    word: &str,
    c: &[f64],
    tau: f64,
) -> Result<SensePosterior> {
    if tau.is_nan() || tau <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "temperature must be positive, got {}",
            tau
        )));
    }
    let rows = rows_of(set, word)?;
    let k = rows.len();
    if c.iter().all(|&x| x == 0.0) {
        return Ok(SensePosterior {
            word: word.to_owned(),
            probs: vec![1.0 / k as f64; k],
        });
    }
    let logits = rows
        .iter()
        .map(|&r| cosine(set.row(r), c).map(|s| s / tau))
        .collect::<Result<Vec<f64>>>()?;
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let z: f64 = exps.iter().sum();
    Ok(SensePosterior {
        word: word.to_owned(),
        probs: exps.into_iter().map(|e| e / z).collect(),
    })
}

/// Posterior-weighted sense-pair cosine, divided by `K K'`.
pub fn avg_sim_c(
    set: &EmbeddingSet,
    w1: &str,
    c1: &[f64],
    w2: &str,
    c2: &[f64],
    tau: f64,
) -> Result<f64> {
    let (r1, r2) = (rows_of(set, w1)?, rows_of(set, w2)?);
    let p1 = sense_posterior(set, w1, c1, tau)?;
    let p2 = sense_posterior(set, w2, c2, tau)?;
    let mut sum = 0.0;
    for (i, &a) in r1.iter().enumerate() {
        for (j, &b) in r2.iter().enumerate() {
            sum += p1.probs[i] * p2.probs[j] * row_cosine(set, a, b)?;
        }
    }
    Ok(sum / (r1.len() * r2.len()) as f64)
}

/// Cosine between the most probable sense of each word in its context.
pub fn local_sim(
    set: &EmbeddingSet,
    w1: &str,
    c1: &[f64],
    w2: &str,
    c2: &[f64],
    tau: f64,
) -> Result<f64> {
    let (r1, r2) = (rows_of(set, w1)?, rows_of(set, w2)?);
    let k1 = sense_posterior(set, w1, c1, tau)?.argmax();
    let k2 = sense_posterior(set, w2, c2, tau)?.argmax();
    row_cosine(set, r1[k1], r2[k2])
}

/// Fractional (average) ranks, 1-based.
fn ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut out = vec![0.0; xs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && xs[order[j + 1]] == xs[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            out[idx] = avg;
        }
        i = j + 1;
    }
    out
}

/// Spearman rank correlation with average ranks for ties: the Pearson
/// correlation of the two rank vectors.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(Error::InvalidArgument(format!(
            "length mismatch: {} vs {}",
            xs.len(),
            ys.len()
        )));
    }
    if xs.len() < 2 {
        return Err(Error::InvalidArgument(
            "need at least two observations".into(),
        ));
    }
    if xs.iter().chain(ys).any(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument("non-finite score".into()));
    }
    let (rx, ry) = (ranks(xs), ranks(ys));
    let n = xs.len() as f64;
    let mean = (n + 1.0) / 2.0;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        let (dx, dy) = (a - mean, b - mean);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::InvalidArgument(
            "constant input has no rank correlation".into(),
        ));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Spearman x 100 over the scored pairs, or `None` when fewer than two
/// pairs were scored or the ranks are constant.
fn rho100(model: &[f64], human: &[f64]) -> Option<f64> {
    spearman(model, human).ok().map(|r| r * 100.0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WordSimScore {
    /// Spearman rho x 100 of avgSim against the human scores.
    pub avg_sim: Option<f64>,
    pub scored: usize,
    pub skipped: usize,
}

/// avgSim Spearman over a context-free dataset. Pairs with an unknown word
/// are skipped and counted.
pub fn eval_wordsim(set: &EmbeddingSet, dataset: &[WordPairJudgment]) -> Result<WordSimScore> {
    let scored: Vec<Option<(f64, f64)>> = dataset
        .par_iter()
        .map(|p| {
            let (Some(a), Some(b)) = (set.resolve(&p.w1), set.resolve(&p.w2)) else {
                return Ok(None);
            };
            Ok(Some((avg_sim(set, a, b)?, p.human_score)))
        })
        .collect::<Result<_>>()?;
    let (model, human): (Vec<f64>, Vec<f64>) = scored.iter().flatten().copied().unzip();
    Ok(WordSimScore {
        avg_sim: rho100(&model, &human),
        scored: model.len(),
        skipped: dataset.len() - model.len(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScwsScore {
    pub local_sim: Option<f64>,
    pub avg_sim: Option<f64>,
    pub avg_sim_c: Option<f64>,
    pub scored: usize,
    pub skipped: usize,
}

/// Per-pair values of the three metrics.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ContextualScores {
    pub local_sim: f64,
    pub avg_sim: f64,
    pub avg_sim_c: f64,
}

/// All three metrics for one contextual pair; `None` when a word is unknown.
pub fn score_contextual(
    set: &EmbeddingSet,
    pair: &ContextualPairJudgment,
    tau: f64,
    window: usize,
) -> Result<Option<ContextualScores>> {
    let (Some(w1), Some(w2)) = (set.resolve(&pair.w1), set.resolve(&pair.w2)) else {
        return Ok(None);
    };
    let c1 = context_vector(set, &pair.ctx1, pair.pos1, window);
    let c2 = context_vector(set, &pair.ctx2, pair.pos2, window);
    Ok(Some(ContextualScores {
        local_sim: local_sim(set, w1, &c1, w2, &c2, tau)?,
        avg_sim: avg_sim(set, w1, w2)?,
        avg_sim_c: avg_sim_c(set, w1, &c1, w2, &c2, tau)?,
    }))
}

/// localSim, avgSim and avgSimC Spearman over a contextual dataset. The same
/// pairs are skipped for every metric.
pub fn eval_scws(
    set: &EmbeddingSet,
    dataset: &[ContextualPairJudgment],
    tau: f64,
    window: usize,
) -> Result<ScwsScore> {
    let scored: Vec<Option<(ContextualScores, f64)>> = dataset
        .par_iter()
        .map(|p| Ok(score_contextual(set, p, tau, window)?.map(|s| (s, p.human_score))))
        .collect::<Result<_>>()?;
    let kept: Vec<&(ContextualScores, f64)> = scored.iter().flatten().collect();
    let human: Vec<f64> = kept.iter().map(|(_, h)| *h).collect();
    let metric = |f: fn(&ContextualScores) -> f64| -> Option<f64> {
        let model: Vec<f64> = kept.iter().map(|(s, _)| f(s)).collect();
        rho100(&model, &human)
    };
    Ok(ScwsScore {
        local_sim: metric(|s| s.local_sim),
        avg_sim: metric(|s| s.avg_sim),
        avg_sim_c: metric(|s| s.avg_sim_c),
        scored: kept.len(),
        skipped: dataset.len() - kept.len(),
    })
}

/// Parses `word1,word2,score` lines. A first line whose score does not
/// parse is taken as a header. Tabs are accepted as separators too.
pub fn read_wordsim<R: BufRead>(reader: R, source_name: &str) -> Result<Vec<WordPairJudgment>> {
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| Error::io(source_name, e))?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let sep = if line.contains(',') { ',' } else { '\t' };
        let fields: Vec<&str> = line.split(sep).map(str::trim).collect();
        if fields.len() < 3 {
            return Err(Error::parse(
                source_name,
                lineno,
                "expected word1,word2,score",
            ));
        }
        let score = match fields[2].parse::<f64>() {
            Ok(s) if s.is_finite() => s,
            _ if lineno == 1 => continue,
            _ => {
                return Err(Error::parse(
                    source_name,
                    lineno,
                    format!("invalid score {:?}", fields[2]),
                ))
            }
        };
        if fields[0].is_empty() || fields[1].is_empty() {
            return Err(Error::parse(source_name, lineno, "empty word"));
        }
        out.push(WordPairJudgment {
            w1: fields[0].to_owned(),
            w2: fields[1].to_owned(),
            human_score: score,
        });
    }
    Ok(out)
}

pub fn load_wordsim(path: impl AsRef<Path>) -> Result<Vec<WordPairJudgment>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_wordsim(BufReader::new(file), &path.display().to_string())
}

/// Splits a context into tokens and locates the token wrapped in
/// `<b>...</b>`, removing the markers.
pub fn parse_marked_context(text: &str) -> Option<(Vec<String>, usize)> {
    let spaced = text.replace("<b>", " <b> ").replace("</b>", " </b> ");
    let mut tokens = Vec::new();
    let mut target = None;
    let mut inside = false;
    for tok in spaced.split_whitespace() {
        match tok {
            "<b>" => inside = true,
            "</b>" => inside = false,
            _ => {
                if inside && target.is_none() {
                    target = Some(tokens.len());
                }
                tokens.push(tok.to_owned());
            }
        }
    }
    target.map(|t| (tokens, t))
}

/// Parses SCWS rows:
/// `<id>\t<w1>\t<pos1>\t<w2>\t<pos2>\t<ctx1>\t<ctx2>\t<avg>\t<r1..r10>`.
pub fn read_scws<R: BufRead>(reader: R, source_name: &str) -> Result<Vec<ContextualPairJudgment>> {
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| Error::io(source_name, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() < 8 {
            return Err(Error::parse(
                source_name,
                lineno,
                format!(
                    "expected at least 8 tab-separated fields, found {}",
                    fields.len()
                ),
            ));
        }
        let context = |text: &str| {
            parse_marked_context(text).ok_or_else(|| {
                Error::parse(source_name, lineno, "context lacks a <b>target</b> marker")
            })
        };
        let (ctx1, pos1) = context(fields[5])?;
        let (ctx2, pos2) = context(fields[6])?;
        let human_score = fields[7]
            .trim()
            .parse::<f64>()
            .ok()
            .filter(|s| s.is_finite())
            .ok_or_else(|| {
                Error::parse(
                    source_name,
                    lineno,
                    format!("invalid score {:?}", fields[7]),
                )
            })?;
        out.push(ContextualPairJudgment {
            w1: fields[1].trim().to_owned(),
            w2: fields[3].trim().to_owned(),
            ctx1,
            pos1,
            ctx2,
            pos2,
            human_score,
        });
    }
    Ok(out)
}

pub fn load_scws(path: impl AsRef<Path>) -> Result<Vec<ContextualPairJudgment>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_scws(BufReader::new(file), &path.display().to_string())
}
