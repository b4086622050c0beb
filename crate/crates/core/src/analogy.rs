//! Sense-combinatorial analogy evaluation.
//!
//! For a quadruple `w1 : w2 :: w3 : w4` the identity
//! `v(w1) - v(w2) + v(w3) - v(w4) = 0` gives four prediction directions,
//! one per target position. A direction succeeds when some choice of senses
//! for the three query words puts a sense of the target at the top of the
//! cosine ranking over all rows, the three query words' senses excluded.
//! A quadruple is correct when any direction succeeds.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use ndarray::{s, Array2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embedding::{norm, EmbeddingSet};
use crate::error::{Error, Result};

/// Rows scored per matrix product.
const BLOCK_ROWS: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Section {
    Semantic,
    Syntactic,
}

impl Section {
    /// Categories named `gram*` are syntactic, everything else semantic.
    pub fn of_category(name: &str) -> Section {
        if name.starts_with("gram") {
            Section::Syntactic
        } else {
            Section::Semantic
        }
    }
}

impl fmt::Display for Section {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Section::Semantic => "semantic",
            Section::Syntactic => "syntactic",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Quadruple {
    pub w1: String,
    pub w2: String,
    pub w3: String,
    pub w4: String,
    pub category: String,
    pub section: Section,
}

impl Quadruple {
    pub fn new(words: [&str; 4], category: &str) -> Self {
        Quadruple {
            w1: words[0].to_owned(),
            w2: words[1].to_owned(),
            w3: words[2].to_owned(),
            w4: words[3].to_owned(),
            category: category.to_owned(),
            section: Section::of_category(category),
        }
    }
}

/// Reads the sectioned analogy format: `: <category>` headers followed by
/// lines of four space-separated words.
pub fn read_analogy<R: BufRead>(reader: R, source_name: &str) -> Result<Vec<Quadruple>> {
    let mut out = Vec::new();
    let mut category: Option<String> = None;
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| Error::io(source_name, e))?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix(':') {
            let name = name.trim();
            if name.is_empty() {
                return Err(Error::parse(source_name, lineno, "empty category header"));
            }
            category = Some(name.to_owned());
            continue;
        }
        let words: Vec<&str> = line.split_whitespace().collect();
        let [a, b, c, d] = words.as_slice() else {
            return Err(Error::parse(
                source_name,
                lineno,
                format!("expected 4 words, found {}", words.len()),
            ));
        };
        let Some(cat) = &category else {
            return Err(Error::parse(
                source_name,
                lineno,
                "quadruple before any \": <category>\" header",
            ));
        };
        out.push(Quadruple::new([a, b, c, d], cat));
    }
    Ok(out)
}

pub fn load_analogy(path: impl AsRef<Path>) -> Result<Vec<Quadruple>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_analogy(BufReader::new(file), &path.display().to_string())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Correct,
    Incorrect,
    Skipped,
}

/// A space prepared for analogy queries: the unit-normalized row matrix is
/// computed once and scored against blocks of query vectors.
pub struct AnalogySpace<'a> {
    set: &'a EmbeddingSet,
    unit: Array2<f64>,
}

impl<'a> AnalogySpace<'a> {
    pub fn new(set: &'a EmbeddingSet) -> Self {
        AnalogySpace {
            set,
            unit: set.unit_rows(),
        }
    }

    pub fn set(&self) -> &EmbeddingSet {
        self.set
    }

    fn rows(&self, word: &str) -> Result<&'a [usize]> {
        let rows = self.set.sense_rows(word);
        if rows.is_empty() {
            return Err(Error::KeyNotFound(word.to_owned()));
        }
        Ok(rows)
    }

    /// Whether some sense combination of `a - b + c` has a sense of `target`
    /// as its nearest row. Words must be exact vocabulary entries.
    pub fn predict_direction(&self, a: &str, b: &str, c: &str, target: &str) -> Result<bool> {
        let (ra, rb, rc) = (self.rows(a)?, self.rows(b)?, self.rows(c)?);
        self.rows(target)?;
        let dim = self.set.dim();

        let mut queries = Vec::with_capacity(ra.len() * rb.len() * rc.len() * dim);
        let mut count = 0;
        for &ia in ra {
            for &ib in rb {
                for &ic in rc {
                    let (va, vb, vc) = (self.set.row(ia), self.set.row(ib), self.set.row(ic));
                    let q: Vec<f64> = (0..dim).map(|d| va[d] - vb[d] + vc[d]).collect();
                    // a zero query has no cosine ranking
                    if norm(&q) > 0.0 {
                        queries.extend(q);
                        count += 1;
                    }
                }
            }
        }
        if count == 0 {
            return Ok(false);
        }
        let queries = Array2::from_shape_vec((count, dim), queries).expect("shape");

        let excluded = |row: usize| {
            let w = &self.set.key(row).word;
            w == a || w == b || w == c || self.set.norm(row) == 0.0
        };
        let mut best: Vec<(f64, usize)> = vec![(f64::NEG_INFINITY, usize::MAX); count];
        let n = self.set.len();
        let mut start = 0;
        while start < n {
            let end = (start + BLOCK_ROWS).min(n);
            let block = self.unit.slice(s![start..end, ..]);
            let scores = queries.dot(&block.t());
            for (qi, row_scores) in scores.outer_iter().enumerate() {
                let b = &mut best[qi];
                for (offset, &score) in row_scores.iter().enumerate() {
                    let row = start + offset;
                    // rows ascend, so strict > keeps the lowest row on ties
                    if score > b.0 && !excluded(row) {
                        *b = (score, row);
                    }
                }
            }
            start = end;
        }
        Ok(best
            .iter()
            .any(|&(_, row)| row != usize::MAX && self.set.key(row).word == target))
    }

    /// Correct if any of the four directions succeeds; skipped when a word
    /// is missing (exact match first, then lowercase).
    pub fn evaluate_quadruple(&self, q: &Quadruple) -> Result<Outcome> {
        let resolve = |w: &str| self.set.resolve(w);
        let (Some(w1), Some(w2), Some(w3), Some(w4)) = (
            resolve(&q.w1),
            resolve(&q.w2),
            resolve(&q.w3),
            resolve(&q.w4),
        ) else {
            return Ok(Outcome::Skipped);
        };
        let directions = [
            (w1, w2, w3, w4),
            (w2, w3, w4, w1),
            (w1, w4, w3, w2),
            (w2, w1, w4, w3),
        ];
        for (a, b, c, target) in directions {
            if self.predict_direction(a, b, c, target)? {
                return Ok(Outcome::Correct);
            }
        }
        Ok(Outcome::Incorrect)
    }

    /// Outcomes for every quadruple, evaluated in parallel, in input order.
    pub fn outcomes(&self, quads: &[Quadruple]) -> Result<Vec<Outcome>> {
        quads
            .par_iter()
            .map(|q| self.evaluate_quadruple(q))
            .collect()
    }

    pub fn evaluate_all(&self, quads: &[Quadruple]) -> Result<AnalogyResult> {
        let outcomes = self.outcomes(quads)?;
        Ok(AnalogyResult::tally(quads, &outcomes))
    }
}

pub fn predict_direction(
    set: &EmbeddingSet,
    a: &str,
    b: &str,
    c: &str,
    target: &str,
) -> Result<bool> {
    AnalogySpace::new(set).predict_direction(a, b, c, target)
}

pub fn evaluate_quadruple(set: &EmbeddingSet, q: &Quadruple) -> Result<Outcome> {
    AnalogySpace::new(set).evaluate_quadruple(q)
}

pub fn evaluate_all(set: &EmbeddingSet, quads: &[Quadruple]) -> Result<AnalogyResult> {
    AnalogySpace::new(set).evaluate_all(quads)
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Counts {
    pub attempted: usize,
    pub correct: usize,
    pub skipped: usize,
}

impl Counts {
    fn add(&mut self, outcome: Outcome) {
        match outcome {
            Outcome::Correct => {
                self.attempted += 1;
                self.correct += 1;
            }
            Outcome::Incorrect => self.attempted += 1,
            Outcome::Skipped => self.skipped += 1,
        }
    }

    /// Correct over attempted, x 100; `None` with nothing attempted.
    pub fn accuracy(&self) -> Option<f64> {
        (self.attempted > 0).then(|| 100.0 * self.correct as f64 / self.attempted as f64)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CategoryResult {
    pub category: String,
    pub section: Section,
    pub counts: Counts,
    pub accuracy: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalogyResult {
    /// In order of first appearance in the dataset.
    pub categories: Vec<CategoryResult>,
    pub semantic: Counts,
    pub syntactic: Counts,
    pub overall: Counts,
    pub semantic_accuracy: Option<f64>,
    pub syntactic_accuracy: Option<f64>,
    pub overall_accuracy: Option<f64>,
}

impl AnalogyResult {
    pub fn tally(quads: &[Quadruple], outcomes: &[Outcome]) -> Self {
        let mut order: Vec<(&str, Section)> = Vec::new();
        let mut per_cat: BTreeMap<&str, Counts> = BTreeMap::new();
        let (mut semantic, mut syntactic, mut overall) =
            (Counts::default(), Counts::default(), Counts::default());
        for (q, &o) in quads.iter().zip(outcomes) {
            let entry = per_cat.entry(&q.category).or_insert_with(|| {
                order.push((&q.category, q.section));
                Counts::default()
            });
            entry.add(o);
            match q.section {
                Section::Semantic => semantic.add(o),
                Section::Syntactic => syntactic.add(o),
            }
            overall.add(o);
        }
        let categories = order
            .into_iter()
            .map(|(name, section)| {
                let counts = per_cat.remove(name).expect("category recorded");
                CategoryResult {
                    category: name.to_owned(),
                    section,
                    accuracy: counts.accuracy(),
                    counts,
                }
            })
            .collect();
        AnalogyResult {
            categories,
            semantic_accuracy: semantic.accuracy(),
            syntactic_accuracy: syntactic.accuracy(),
            overall_accuracy: overall.accuracy(),
            semantic,
            syntactic,
            overall,
        }
    }
}
