//! Synthetic spaces, graphs and datasets shared by the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::io::Cursor;
use std::path::{Path, PathBuf};

use ndarray::Array2;
use pseudosense::embedding::{read_embeddings, EmbeddingSet, SenseKey};
use pseudosense::lexical::LexicalGraph;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub const TOPICS: usize = 8;
pub const DIM: usize = 32;
pub const CONTEXT_PER_TOPIC: usize = 10;
pub const TARGET_WORDS: usize = 20;

/// Text files of a planted-duplicate fixture plus its ground truth.
///
/// Each topic owns a basis direction, ten tightly clustered context words,
/// six private domain labels with distinct weights and a private four-node
/// hypernym chain. All chains hang below one shared root and every context
/// synset also carries one shared domain label, so senses on different
/// topics overlap in exactly one label per profile (total 0.4). Target
/// senses placed on the same topic see the same ten neighbors and therefore
/// identical profiles (total 2.0).
pub struct Planted {
    pub embeddings: String,
    pub synsets: String,
    pub hypernyms: String,
    pub domains: String,
    pub pairs: BTreeSet<(String, usize, usize)>,
    pub groups: Vec<(String, Vec<usize>)>,
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

fn layout(i: usize) -> Vec<usize> {
    let (t, u, v) = (i % TOPICS, (i + 3) % TOPICS, (i + 5) % TOPICS);
    match i % 4 {
        0 => vec![t, t, u],
        1 => vec![t, u],
        2 => vec![t, u, t],
        _ if i % 8 == 3 => vec![t, t, t],
        _ => vec![t, u, v],
    }
}

pub fn target_word(i: usize) -> String {
    format!("w{:02}", i)
}

pub fn context_word(t: usize, j: usize) -> String {
    format!("c{}x{}", t, j)
}

pub fn planted(seed: u64, domain_scale: f64) -> Planted {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows: Vec<(String, usize, Vec<f64>)> = Vec::new();
    let point = |rng: &mut ChaCha8Rng, t: usize, spread: f64| -> Vec<f64> {
        let scale = spread / (DIM as f64).sqrt();
        (0..DIM)
            .map(|d| if d == t { 1.0 } else { 0.0 } + scale * gaussian(rng))
            .collect()
    };

    for t in 0..TOPICS {
        for j in 0..CONTEXT_PER_TOPIC {
            rows.push((context_word(t, j), 0, point(&mut rng, t, 0.01)));
        }
    }
    let mut pairs = BTreeSet::new();
    let mut groups = Vec::new();
    for i in 0..TARGET_WORDS {
        let word = target_word(i);
        let topics = layout(i);
        for (k, &t) in topics.iter().enumerate() {
            rows.push((word.clone(), k, point(&mut rng, t, 0.15)));
        }
        let mut by_topic: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (k, &t) in topics.iter().enumerate() {
            by_topic.entry(t).or_default().push(k);
        }
        let mut word_groups: Vec<Vec<usize>> =
            by_topic.into_values().filter(|m| m.len() >= 2).collect();
        word_groups.sort();
        for members in word_groups {
            for (x, &a) in members.iter().enumerate() {
                for &b in &members[x + 1..] {
                    pairs.insert((word.clone(), a, b));
                }
            }
            groups.push((word.clone(), members));
        }
    }

    let mut embeddings = format!("{} {}\n", rows.len(), DIM);
    for (word, sense, v) in &rows {
        write!(embeddings, "{} {}", word, sense).unwrap();
        for x in v {
            write!(embeddings, " {}", x).unwrap();
        }
        embeddings.push('\n');
    }

    let (mut synsets, mut hypernyms, mut domains) = (String::new(), String::new(), String::new());
    writeln!(synsets, "root\tn\tentity").unwrap();
    for t in 0..TOPICS {
        for level in 0..4 {
            writeln!(synsets, "h{}_{}\tn\tconcept{}_{}", t, level, t, level).unwrap();
            let parent = if level == 3 {
                "root".to_owned()
            } else {
                format!("h{}_{}", t, level + 1)
            };
            writeln!(hypernyms, "h{}_{}\t{}", t, level, parent).unwrap();
        }
        for j in 0..CONTEXT_PER_TOPIC {
            let word = context_word(t, j);
            writeln!(synsets, "s_{}\tn\t{}", word, word).unwrap();
            writeln!(hypernyms, "s_{}\th{}_0", word, t).unwrap();
            for k in 0..6 {
                let w = (1.0 - 0.1 * k as f64) * domain_scale;
                writeln!(domains, "s_{}\td{}_{}\t{}", word, t, k, w).unwrap();
            }
            writeln!(domains, "s_{}\tshared\t{}", word, 0.65 * domain_scale).unwrap();
        }
    }
    for i in 0..TARGET_WORDS {
        let word = target_word(i);
        let topics: BTreeSet<usize> = layout(i).into_iter().collect();
        for t in topics {
            writeln!(synsets, "s_{}_{}\tn\t{}", word, t, word).unwrap();
            writeln!(hypernyms, "s_{}_{}\th{}_0", word, t, t).unwrap();
        }
    }

    Planted {
        embeddings,
        synsets,
        hypernyms,
        domains,
        pairs,
        groups,
    }
}

impl Planted {
    pub fn set(&self) -> EmbeddingSet {
        read_embeddings(Cursor::new(self.embeddings.as_bytes()), "planted").unwrap()
    }

    pub fn graph(&self) -> LexicalGraph {
        LexicalGraph::from_readers(
            (Cursor::new(self.synsets.as_bytes()), "synsets"),
            (Cursor::new(self.hypernyms.as_bytes()), "hypernyms"),
            (Cursor::new(self.domains.as_bytes()), "domains"),
        )
        .unwrap()
    }

    /// Writes the four inputs into `dir`, returning
    /// `(embeddings, synsets, hypernyms, domains)` paths.
    pub fn write_to(&self, dir: &Path) -> [PathBuf; 4] {
        let files = [
            ("emb.txt", &self.embeddings),
            ("synsets.tsv", &self.synsets),
            ("hypernyms.tsv", &self.hypernyms),
            ("domains.tsv", &self.domains),
        ];
        files.map(|(name, text)| {
            let p = dir.join(name);
            std::fs::write(&p, text).unwrap();
            p
        })
    }
}

/// Random space with `words` words of 1..=`max_senses` senses each.
pub fn random_set(seed: u64, words: usize, max_senses: usize, dim: usize) -> EmbeddingSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut keys = Vec::new();
    let mut data = Vec::new();
    for w in 0..words {
        let k = rng.random_range(1..=max_senses);
        for s in 0..k {
            keys.push(SenseKey::new(format!("t{}", w), s));
            data.extend((0..dim).map(|_| gaussian(&mut rng)));
        }
    }
    let rows = Array2::from_shape_vec((keys.len(), dim), data).unwrap();
    EmbeddingSet::new(keys, rows).unwrap()
}

/// Random orthogonal matrix from Gram-Schmidt on a Gaussian matrix.
pub fn random_orthogonal(seed: u64, dim: usize) -> Array2<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut basis: Vec<Vec<f64>> = Vec::new();
    while basis.len() < dim {
        let mut v: Vec<f64> = (0..dim).map(|_| gaussian(&mut rng)).collect();
        for _ in 0..2 {
            for b in &basis {
                let p: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
                v.iter_mut().zip(b).for_each(|(x, y)| *x -= p * y);
            }
        }
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-6 {
            basis.push(v.into_iter().map(|x| x / n).collect());
        }
    }
    Array2::from_shape_fn((dim, dim), |(i, j)| basis[i][j])
}

/// `n` word pairs, no pair repeated and no word paired with itself, so
/// exact score ties between items cannot occur.
fn distinct_pairs<'a>(
    rng: &mut ChaCha8Rng,
    words: &[&'a str],
    n: usize,
) -> Vec<(&'a str, &'a str)> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    while out.len() < n {
        let a = words[rng.random_range(0..words.len())];
        let b = words[rng.random_range(0..words.len())];
        if a != b && seen.insert((a.min(b), a.max(b))) {
            out.push((a, b));
        }
    }
    out
}

/// WordSim-style CSV over the words of `set`, with a header line.
pub fn wordsim_text(set: &EmbeddingSet, seed: u64, n: usize) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let words = set.words();
    let mut out = String::from("Word 1,Word 2,Human (mean)\n");
    for (a, b) in distinct_pairs(&mut rng, &words, n) {
        writeln!(out, "{},{},{:.2}", a, b, rng.random_range(0.0..10.0)).unwrap();
    }
    out
}

/// SCWS-style TSV whose contexts are drawn from the vocabulary of `set`.
pub fn scws_text(set: &EmbeddingSet, seed: u64, n: usize) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let words = set.words();
    let pick = |rng: &mut ChaCha8Rng| words[rng.random_range(0..words.len())].to_owned();
    let mut out = String::new();
    for (id, (w1, w2)) in distinct_pairs(&mut rng, &words, n).into_iter().enumerate() {
        let context = |rng: &mut ChaCha8Rng, target: &str| {
            let len = rng.random_range(3..12);
            let at = rng.random_range(0..len);
            (0..len)
                .map(|i| {
                    if i == at {
                        format!("<b>{}</b>", target)
                    } else {
                        pick(rng)
                    }
                })
                .collect::<Vec<_>>()
                .join(" ")
        };
        let (c1, c2) = (context(&mut rng, w1), context(&mut rng, w2));
        write!(
            out,
            "{}\t{}\tn\t{}\tn\t{}\t{}\t{:.2}",
            id,
            w1,
            w2,
            c1,
            c2,
            rng.random_range(0.0..10.0)
        )
        .unwrap();
        for _ in 0..10 {
            write!(out, "\t{}", rng.random_range(0..=10)).unwrap();
        }
        out.push('\n');
    }
    out
}

/// Analogy file of random quadruples over the words of `set`, split into a
/// semantic and a syntactic section.
pub fn analogy_text(set: &EmbeddingSet, seed: u64, n: usize) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let words = set.words();
    let mut out = String::new();
    for (section, count) in [("capital-common", n / 2), ("gram1-adjective", n - n / 2)] {
        writeln!(out, ": {}", section).unwrap();
        for _ in 0..count {
            let mut quad: Vec<&str> = Vec::new();
            while quad.len() < 4 {
                let w = words[rng.random_range(0..words.len())];
                if !quad.contains(&w) {
                    quad.push(w);
                }
            }
            writeln!(out, "{}", quad.join(" ")).unwrap();
        }
    }
    out
}
