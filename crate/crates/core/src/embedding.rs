//! Multi-sense embedding storage, the canonical text format, cosine
//! similarity and exhaustive nearest-neighbor search.
//!
//! The canonical format is line oriented:
//!
//! ```text
//! <row_count> <dim>
//! <word> <sense_index> <v1> ... <v_dim>
//! ```
//!
//! Senses of a word are numbered `0..K` without gaps. Rows keep file order.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use ndarray::{Array2, ArrayView2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Neighbor count used when none is configured.
pub const DEFAULT_NEIGHBORS: usize = 10;

/// One sense of one word.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SenseKey {
    pub word: String,
    pub sense: usize,
}

impl SenseKey {
    pub fn new(word: impl Into<String>, sense: usize) -> Self {
        SenseKey {
            word: word.into(),
            sense,
        }
    }
}

impl fmt::Display for SenseKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}#{}", self.word, self.sense)
    }
}

/// Dense sense vectors indexed by [`SenseKey`].
///
/// Immutable once built, so it can be shared freely between threads.
#[derive(Clone, Debug)]
pub struct EmbeddingSet {
    dim: usize,
    rows: Array2<f64>,
    norms: Vec<f64>,
    keys: Vec<SenseKey>,
    index: HashMap<SenseKey, usize>,
    by_word: HashMap<String, Vec<usize>>,
}

impl EmbeddingSet {
    /// Builds a set from keys and a row matrix, rejecting zero or
    /// non-finite rows.
    pub fn new(keys: Vec<SenseKey>, rows: Array2<f64>) -> Result<Self> {
        Self::build(keys, rows, false)
    }

    /// Like [`EmbeddingSet::new`] but keeps all-zero rows. Used for projected
    /// spaces, where a linear map may collapse a row.
    pub(crate) fn new_allow_zero(keys: Vec<SenseKey>, rows: Array2<f64>) -> Result<Self> {
        Self::build(keys, rows, true)
    }

    fn build(keys: Vec<SenseKey>, rows: Array2<f64>, allow_zero: bool) -> Result<Self> {
        let (nrows, dim) = rows.dim();
        if dim == 0 {
            return Err(Error::InvalidArgument(
                "embedding dimension must be positive".into(),
            ));
        }
        if keys.len() != nrows {
            return Err(Error::InvalidArgument(format!(
                "{} keys for {} rows",
                keys.len(),
                nrows
            )));
        }
        let rows = rows.as_standard_layout().into_owned();

        let mut index = HashMap::with_capacity(nrows);
        let mut by_word: HashMap<String, Vec<usize>> = HashMap::new();
        let mut norms = Vec::with_capacity(nrows);
        for (id, key) in keys.iter().enumerate() {
            if key.word.is_empty() || key.word.chars().any(char::is_whitespace) {
                return Err(Error::InvalidArgument(format!(
                    "word {:?} is empty or contains whitespace",
                    key.word
                )));
            }
            if index.insert(key.clone(), id).is_some() {
                return Err(Error::DuplicateKey(key.to_string()));
            }
            let row = rows.row(id);
            let row = row.as_slice().expect("standard layout");
            if row.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidVector {
                    key: key.to_string(),
                    msg: "non-finite component".into(),
                });
            }
            let norm = norm(row);
            if norm == 0.0 && !allow_zero {
                return Err(Error::InvalidVector {
                    key: key.to_string(),
                    msg: "all-zero vector".into(),
                });
            }
            norms.push(norm);
            by_word.entry(key.word.clone()).or_default().push(id);
        }

        for (word, ids) in by_word.iter_mut() {
            ids.sort_by_key(|&id| keys[id].sense);
            for (expected, &id) in ids.iter().enumerate() {
                if keys[id].sense != expected {
                    return Err(Error::InvalidArgument(format!(
                        "senses of {:?} must be numbered 0..{} without gaps, found {}",
                        word,
                        ids.len(),
                        keys[id]
                    )));
                }
            }
        }

        Ok(EmbeddingSet {
            dim,
            rows,
            norms,
            keys,
            index,
            by_word,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of rows (senses over all words).
    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn keys(&self) -> &[SenseKey] {
        &self.keys
    }

    pub fn key(&self, row: usize) -> &SenseKey {
        &self.keys[row]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        let start = row * self.dim;
        &self.rows.as_slice().expect("standard layout")[start..start + self.dim]
    }

    pub fn matrix(&self) -> ArrayView2<'_, f64> {
        self.rows.view()
    }

    /// Euclidean norm of a row.
    pub fn norm(&self, row: usize) -> f64 {
        self.norms[row]
    }

    pub fn row_of(&self, key: &SenseKey) -> Option<usize> {
        self.index.get(key).copied()
    }

    pub fn vector(&self, key: &SenseKey) -> Result<&[f64]> {
        self.row_of(key)
            .map(|id| self.row(id))
            .ok_or_else(|| Error::KeyNotFound(key.to_string()))
    }

    /// Row ids of a word's senses in ascending sense order.
    pub fn sense_rows(&self, word: &str) -> &[usize] {
        self.by_word.get(word).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn sense_count(&self, word: &str) -> usize {
        self.sense_rows(word).len()
    }

    pub fn contains_word(&self, word: &str) -> bool {
        self.by_word.contains_key(word)
    }

    /// Vocabulary in ascending lexicographic order.
    pub fn words(&self) -> Vec<&str> {
        let mut words: Vec<&str> = self.by_word.keys().map(String::as_str).collect();
        words.sort_unstable();
        words
    }

    /// Looks a word up exactly, falling back to its lowercase form.
    pub fn resolve<'a>(&'a self, word: &str) -> Option<&'a str> {
        if let Some((w, _)) = self.by_word.get_key_value(word) {
            return Some(w.as_str());
        }
        let lower = word.to_lowercase();
        self.by_word.get_key_value(&lower).map(|(w, _)| w.as_str())
    }

    /// Rows that are the zero vector. Always empty for loaded sets.
    pub fn zero_rows(&self) -> Vec<usize> {
        (0..self.len())
            .filter(|&id| self.norms[id] == 0.0)
            .collect()
    }

    /// Row matrix scaled to unit length. Zero rows stay zero.
    pub fn unit_rows(&self) -> Array2<f64> {
        let mut unit = self.rows.clone();
        for (mut row, &n) in unit.outer_iter_mut().zip(&self.norms) {
            if n > 0.0 {
                row.mapv_inplace(|x| x / n);
            }
        }
        unit
    }

    /// Mean of a word's sense vectors.
    pub fn word_mean(&self, word: &str) -> Option<Vec<f64>> {
        let ids = self.sense_rows(word);
        if ids.is_empty() {
            return None;
        }
        let mut mean = vec![0.0; self.dim];
        for &id in ids {
            for (m, x) in mean.iter_mut().zip(self.row(id)) {
                *m += x;
            }
        }
        let k = ids.len() as f64;
        mean.iter_mut().for_each(|m| *m /= k);
        Some(mean)
    }
}

/// All senses of `word` in ascending sense order; empty if unknown.
pub fn senses_of(set: &EmbeddingSet, word: &str) -> Vec<SenseKey> {
    set.sense_rows(word)
        .iter()
        .map(|&id| set.key(id).clone())
        .collect()
}

pub fn load_embeddings(path: impl AsRef<Path>) -> Result<EmbeddingSet> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_embeddings(BufReader::new(file), &path.display().to_string())
}

/// Parses the canonical text format. `source_name` labels parse errors.
pub fn read_embeddings<R: BufRead>(reader: R, source_name: &str) -> Result<EmbeddingSet> {
    let mut lines = reader.lines().enumerate();
    let header = match lines.next() {
        Some((_, line)) => line.map_err(|e| Error::io(source_name, e))?,
        None => return Err(Error::parse(source_name, 1, "empty file, expected header")),
    };
    let header: Vec<&str> = header.split_ascii_whitespace().collect();
    let (count, dim) = match header.as_slice() {
        [count, dim] => match (count.parse::<usize>(), dim.parse::<usize>()) {
            (Ok(c), Ok(d)) if d > 0 => (c, d),
            _ => {
                return Err(Error::parse(
                    source_name,
                    1,
                    "header must be \"<row_count> <dim>\" with dim > 0",
                ))
            }
        },
        _ => {
            return Err(Error::parse(
                source_name,
                1,
                "header must be \"<row_count> <dim>\"",
            ))
        }
    };

    let mut keys = Vec::with_capacity(count);
    let mut data = Vec::with_capacity(count * dim);
    let mut seen = HashMap::with_capacity(count);
    for (idx, line) in lines {
        let lineno = idx + 1;
        let line = line.map_err(|e| Error::io(source_name, e))?;
        if line.trim().is_empty() {
            continue;
        }
        if keys.len() == count {
            return Err(Error::parse(
                source_name,
                lineno,
                format!("more rows than the {} declared in the header", count),
            ));
        }
        let mut fields = line.split_ascii_whitespace();
        let word = fields.next().expect("non-empty line");
        let sense = fields
            .next()
            .and_then(|s| s.parse::<usize>().ok())
            .ok_or_else(|| Error::parse(source_name, lineno, "missing or invalid sense index"))?;
        let start = data.len();
        for field in fields {
            let x = field.parse::<f64>().map_err(|_| {
                Error::parse(source_name, lineno, format!("invalid number {:?}", field))
            })?;
            data.push(x);
        }
        if data.len() - start != dim {
            return Err(Error::parse(
                source_name,
                lineno,
                format!("expected {} components, found {}", dim, data.len() - start),
            ));
        }
        let key = SenseKey::new(word, sense);
        if seen.insert(key.clone(), lineno).is_some() {
            return Err(Error::DuplicateKey(key.to_string()));
        }
        let row = &data[start..];
        if row.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidVector {
                key: key.to_string(),
                msg: format!("non-finite component on line {}", lineno),
            });
        }
        if row.iter().all(|&x| x == 0.0) {
            return Err(Error::InvalidVector {
                key: key.to_string(),
                msg: format!("all-zero vector on line {}", lineno),
            });
        }
        keys.push(key);
    }
    if keys.len() != count {
        return Err(Error::parse(
            source_name,
            keys.len() + 2,
            format!("header declares {} rows, found {}", count, keys.len()),
        ));
    }
    let rows = Array2::from_shape_vec((count, dim), data).expect("row data matches shape");
    EmbeddingSet::new(keys, rows)
}

pub fn save_embeddings(set: &EmbeddingSet, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut writer = BufWriter::new(file);
    write_embeddings(set, &mut writer).map_err(|e| Error::io(path, e))?;
    writer.flush().map_err(|e| Error::io(path, e))
}

/// Writes the canonical text format. Floats use the shortest representation
/// that parses back to the same value.
pub fn write_embeddings<W: Write>(set: &EmbeddingSet, mut writer: W) -> std::io::Result<()> {
    writeln!(writer, "{} {}", set.len(), set.dim())?;
    for (id, key) in set.keys().iter().enumerate() {
        write!(writer, "{} {}", key.word, key.sense)?;
        for x in set.row(id) {
            write!(writer, " {}", x)?;
        }
        writeln!(writer)?;
    }
    Ok(())
}

pub(crate) fn dot(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| a * b).sum()
}

pub(crate) fn norm(u: &[f64]) -> f64 {
    dot(u, u).sqrt()
}

/// Cosine from a dot product and the two norms, clamped to `[-1, 1]`.
#[inline]
fn cosine_from_parts(dot: f64, norm_u: f64, norm_v: f64) -> f64 {
    (dot / (norm_u * norm_v)).clamp(-1.0, 1.0)
}

/// Cosine similarity of two equal-length, nonzero vectors.
pub fn cosine(u: &[f64], v: &[f64]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::InvalidArgument(format!(
            "dimension mismatch: {} vs {}",
            u.len(),
            v.len()
        )));
    }
    let (nu, nv) = (norm(u), norm(v));
    if nu == 0.0 || nv == 0.0 {
        return Err(Error::UndefinedSimilarity("zero vector".into()));
    }
    Ok(cosine_from_parts(dot(u, v), nu, nv))
}

/// Cosine between two rows of a set, using the cached norms.
pub fn row_cosine(set: &EmbeddingSet, a: usize, b: usize) -> Result<f64> {
    let (na, nb) = (set.norm(a), set.norm(b));
    if na == 0.0 || nb == 0.0 {
        let which = if na == 0.0 { a } else { b };
        return Err(Error::UndefinedSimilarity(format!(
            "{} is the zero vector",
            set.key(which)
        )));
    }
    Ok(cosine_from_parts(dot(set.row(a), set.row(b)), na, nb))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Neighbor {
    pub key: SenseKey,
    pub score: f64,
}

/// Nearest senses of a query, best first.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NeighborList {
    pub query: SenseKey,
    pub neighbors: Vec<Neighbor>,
}

impl NeighborList {
    /// Surface words of the neighbors, in rank order.
    pub fn words(&self) -> impl Iterator<Item = &str> {
        self.neighbors.iter().map(|n| n.key.word.as_str())
    }
}

/// Descending score, then ascending row id.
fn rank_order(a: &(f64, usize), b: &(f64, usize)) -> Ordering {
    b.0.total_cmp(&a.0).then(a.1.cmp(&b.1))
}

/// The `m` rows most cosine-similar to `q`, excluding every sense of
/// `q.word`. Ties go to the lower row id. Zero rows of a projected space
/// are never returned.
pub fn nearest_neighbors(set: &EmbeddingSet, q: &SenseKey, m: usize) -> Result<NeighborList> {
    let qid = set
        .row_of(q)
        .ok_or_else(|| Error::KeyNotFound(q.to_string()))?;
    let mut list = NeighborList {
        query: q.clone(),
        neighbors: Vec::new(),
    };
    if m == 0 {
        return Ok(list);
    }
    let nq = set.norm(qid);
    if nq == 0.0 {
        return Err(Error::UndefinedSimilarity(format!(
            "{} is the zero vector",
            q
        )));
    }
    let query = set.row(qid);
    let mut scored: Vec<(f64, usize)> = (0..set.len())
        .filter(|&id| set.norms[id] > 0.0 && set.keys[id].word != q.word)
        .map(|id| {
            (
                cosine_from_parts(dot(query, set.row(id)), nq, set.norms[id]),
                id,
            )
        })
        .collect();
    if scored.len() > m {
        scored.select_nth_unstable_by(m - 1, rank_order);
        scored.truncate(m);
    }
    scored.sort_unstable_by(rank_order);
    list.neighbors = scored
        .into_iter()
        .map(|(score, id)| Neighbor {
            key: set.keys[id].clone(),
            score,
        })
        .collect();
    Ok(list)
}

/// [`nearest_neighbors`] for many queries in parallel. Output order follows
/// `queries`.
pub fn nearest_neighbors_many(
    set: &EmbeddingSet,
    queries: &[SenseKey],
    m: usize,
) -> Result<Vec<NeighborList>> {
    queries
        .par_iter()
        .map(|q| nearest_neighbors(set, q, m))
        .collect()
}
