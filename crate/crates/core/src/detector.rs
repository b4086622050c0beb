//! Pseudo multi-sense detection.
//!
//! Each sense gets two score profiles built from its nearest neighbors: the
//! summed domain weights of the neighbors' words, and a distance-penalized
//! count of shared hypernyms. Two senses of one word are compared by the
//! overlap of their top-`n` labels in each profile; the pair is a pseudo
//! multi-sense pair when the two overlaps sum to more than `lambda`.
//! Detected pairs are closed transitively into groups.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embedding::{
    nearest_neighbors, EmbeddingSet, NeighborList, SenseKey, DEFAULT_NEIGHBORS,
};
use crate::error::{Error, Result};
use crate::lexical::LexicalGraph;
use crate::union_find::UnionFind;

pub const DEFAULT_TOP_N: usize = 5;
pub const DEFAULT_LAMBDA: f64 = 1.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProfileKind {
    Domain,
    Hypernym,
}

/// Unnormalized label scores for one sense. Only strictly positive scores
/// are stored.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScoreProfile {
    pub subject: SenseKey,
    pub kind: ProfileKind,
    pub scores: BTreeMap<String, f64>,
}

impl ScoreProfile {
    fn empty(subject: SenseKey, kind: ProfileKind) -> Self {
        ScoreProfile {
            subject,
            kind,
            scores: BTreeMap::new(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectConfig {
    /// Labels compared per profile.
    pub top_n: usize,
    /// Pairs with total similarity strictly above this are detected.
    pub lambda: f64,
    /// Nearest neighbors feeding each profile.
    pub neighbors: usize,
}

impl Default for DetectConfig {
    fn default() -> Self {
        DetectConfig {
            top_n: DEFAULT_TOP_N,
            lambda: DEFAULT_LAMBDA,
            neighbors: DEFAULT_NEIGHBORS,
        }
    }
}

impl DetectConfig {
    fn validate(&self) -> Result<()> {
        if self.top_n == 0 {
            return Err(Error::InvalidArgument("top_n must be at least 1".into()));
        }
        if self.lambda.is_nan() || self.lambda < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "lambda must be non-negative, got {}",
                self.lambda
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SenseSimilarity {
    pub domain: f64,
    pub hypernym: f64,
    pub total: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PseudoPair {
    pub word: String,
    /// Lower sense index.
    pub a: usize,
    /// Higher sense index.
    pub b: usize,
    pub sim_domain: f64,
    pub sim_hypernym: f64,
    pub sim_total: f64,
}

/// Senses of one word judged to share a meaning. Members are sorted.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PseudoGroup {
    pub word: String,
    pub members: Vec<usize>,
}

impl PseudoGroup {
    pub fn keys(&self) -> impl Iterator<Item = SenseKey> + '_ {
        self.members
            .iter()
            .map(|&k| SenseKey::new(self.word.clone(), k))
    }
}

/// Domain profile from an already computed neighbor list.
pub fn domain_profile_from_neighbors(g: &LexicalGraph, nn: &NeighborList) -> ScoreProfile {
    let mut sums: BTreeMap<usize, f64> = BTreeMap::new();
    for word in nn.words() {
        for (d, w) in g.domain_masses(word) {
            *sums.entry(d).or_insert(0.0) += w;
        }
    }
    let mut profile = ScoreProfile::empty(nn.query.clone(), ProfileKind::Domain);
    profile.scores = sums
        .into_iter()
        .filter(|&(_, s)| s > 0.0)
        .map(|(d, s)| (g.domain_name(d).to_owned(), s))
        .collect();
    profile
}

/// Hypernym profile from an already computed neighbor list.
///
/// Candidates are the synsets reachable upward from the query word. Each
/// neighbor contributes its hypernym frequency divided by its distance, and
/// the sum is divided by the query word's own distance.
pub fn hypernym_profile_from_neighbors(g: &LexicalGraph, nn: &NeighborList) -> ScoreProfile {
    let mut profile = ScoreProfile::empty(nn.query.clone(), ProfileKind::Hypernym);
    let own = g.hypernym_stats(&nn.query.word);
    if own.is_empty() {
        return profile;
    }
    let mut inner: BTreeMap<usize, f64> = BTreeMap::new();
    for word in nn.words() {
        for (h, dist, freq) in g.hypernym_stats(word).iter() {
            if freq == 0 || own.get(h).is_none() {
                continue;
            }
            *inner.entry(h).or_insert(0.0) += freq as f64 / dist as f64;
        }
    }
    profile.scores = inner
        .into_iter()
        .filter_map(|(h, sum)| {
            let (own_dist, _) = own.get(h)?;
            let score = sum / own_dist as f64;
            (score > 0.0).then(|| (g.synset_name(h).to_owned(), score))
        })
        .collect();
    profile
}

pub fn domain_profile(
    set: &EmbeddingSet,
    g: &LexicalGraph,
    q: &SenseKey,
    m: usize,
) -> Result<ScoreProfile> {
    let nn = nearest_neighbors(set, q, m)?;
    Ok(domain_profile_from_neighbors(g, &nn))
}

pub fn hypernym_profile(
    set: &EmbeddingSet,
    g: &LexicalGraph,
    q: &SenseKey,
    m: usize,
) -> Result<ScoreProfile> {
    let nn = nearest_neighbors(set, q, m)?;
    Ok(hypernym_profile_from_neighbors(g, &nn))
}

/// The `n` highest-scoring labels; equal scores are ordered by label.
pub fn top_n(p: &ScoreProfile, n: usize) -> Vec<String> {
    let mut ranked: Vec<(&String, f64)> = p.scores.iter().map(|(l, &s)| (l, s)).collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    ranked.into_iter().take(n).map(|(l, _)| l.clone()).collect()
}

fn overlap(a: &[String], b: &[String], n: usize) -> f64 {
    let a: BTreeSet<&String> = a.iter().collect();
    let shared = b.iter().filter(|l| a.contains(l)).count();
    shared as f64 / n as f64
}

/// Fraction of the top-`n` labels two profiles share.
pub fn sim_component(p1: &ScoreProfile, p2: &ScoreProfile, n: usize) -> Result<f64> {
    if p1.kind != p2.kind {
        return Err(Error::InvalidArgument(format!(
            "cannot compare {:?} profile with {:?} profile",
            p1.kind, p2.kind
        )));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("n must be at least 1".into()));
    }
    Ok(overlap(&top_n(p1, n), &top_n(p2, n), n))
}

/// Domain, hypernym and total similarity between senses `k` and `l` of
/// `word`.
pub fn sense_similarity(
    set: &EmbeddingSet,
    g: &LexicalGraph,
    word: &str,
    k: usize,
    l: usize,
    n: usize,
    m: usize,
) -> Result<SenseSimilarity> {
    if k == l {
        return Err(Error::InvalidArgument(format!(
            "sense {} of {:?} compared with itself",
            k, word
        )));
    }
    let qk = SenseKey::new(word, k);
    let ql = SenseKey::new(word, l);
    let nk = nearest_neighbors(set, &qk, m)?;
    let nl = nearest_neighbors(set, &ql, m)?;
    let domain = sim_component(
        &domain_profile_from_neighbors(g, &nk),
        &domain_profile_from_neighbors(g, &nl),
        n,
    )?;
    let hypernym = sim_component(
        &hypernym_profile_from_neighbors(g, &nk),
        &hypernym_profile_from_neighbors(g, &nl),
        n,
    )?;
    Ok(SenseSimilarity {
        domain,
        hypernym,
        total: domain + hypernym,
    })
}

struct SenseTops {
    domain: Vec<String>,
    hypernym: Vec<String>,
}

/// Every pseudo multi-sense pair in the space, ordered by (word, a, b).
///
/// Profiles are computed once per sense, in parallel across senses.
pub fn detect_pairs(
    set: &EmbeddingSet,
    g: &LexicalGraph,
    cfg: &DetectConfig,
) -> Result<Vec<PseudoPair>> {
    cfg.validate()?;
    let words: Vec<&str> = set
        .words()
        .into_iter()
        .filter(|w| set.sense_count(w) >= 2)
        .collect();
    let queries: Vec<SenseKey> = words
        .iter()
        .flat_map(|w| crate::embedding::senses_of(set, w))
        .collect();
    let tops: Vec<SenseTops> = queries
        .par_iter()
        .map(|q| {
            let nn = nearest_neighbors(set, q, cfg.neighbors)?;
            Ok(SenseTops {
                domain: top_n(&domain_profile_from_neighbors(g, &nn), cfg.top_n),
                hypernym: top_n(&hypernym_profile_from_neighbors(g, &nn), cfg.top_n),
            })
        })
        .collect::<Result<_>>()?;

    let mut pairs = Vec::new();
    let mut offset = 0;
    for word in words {
        let k_count = set.sense_count(word);
        let senses = &tops[offset..offset + k_count];
        offset += k_count;
        for a in 0..k_count {
            for b in a + 1..k_count {
                let sim_domain = overlap(&senses[a].domain, &senses[b].domain, cfg.top_n);
                let sim_hypernym = overlap(&senses[a].hypernym, &senses[b].hypernym, cfg.top_n);
                let sim_total = sim_domain + sim_hypernym;
                if sim_total > cfg.lambda {
                    pairs.push(PseudoPair {
                        word: word.to_owned(),
                        a,
                        b,
                        sim_domain,
                        sim_hypernym,
                        sim_total,
                    });
                }
            }
        }
    }
    Ok(pairs)
}

/// Connected components of each word's pair graph. Groups are ordered by
/// word, then by smallest member.
pub fn build_groups(pairs: &[PseudoPair]) -> Vec<PseudoGroup> {
    let mut by_word: BTreeMap<&str, Vec<(usize, usize)>> = BTreeMap::new();
    for p in pairs {
        by_word.entry(&p.word).or_default().push((p.a, p.b));
    }
    let mut groups = Vec::new();
    for (word, edges) in by_word {
        let senses: Vec<usize> = edges
            .iter()
            .flat_map(|&(a, b)| [a, b])
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let local = |s: usize| senses.binary_search(&s).expect("sense collected above");
        let mut uf = UnionFind::new(senses.len());
        for &(a, b) in &edges {
            uf.union(local(a), local(b));
        }
        let mut components: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (i, &s) in senses.iter().enumerate() {
            components.entry(uf.find(i)).or_default().push(s);
        }
        let mut word_groups: Vec<PseudoGroup> = components
            .into_values()
            .filter(|m| m.len() >= 2)
            .map(|members| PseudoGroup {
                word: word.to_owned(),
                members,
            })
            .collect();
        word_groups.sort_by_key(|g| g.members[0]);
        groups.extend(word_groups);
    }
    groups
}

pub fn write_pairs<W: Write>(pairs: &[PseudoPair], mut w: W) -> std::io::Result<()> {
    for p in pairs {
        writeln!(
            w,
            "{}\t{}\t{}\t{}\t{}\t{}",
            p.word, p.a, p.b, p.sim_domain, p.sim_hypernym, p.sim_total
        )?;
    }
    Ok(())
}

pub fn write_groups<W: Write>(groups: &[PseudoGroup], mut w: W) -> std::io::Result<()> {
    for g in groups {
        let members: Vec<String> = g.members.iter().map(usize::to_string).collect();
        writeln!(w, "{}\t{}", g.word, members.join(","))?;
    }
    Ok(())
}

pub fn save_pairs(pairs: &[PseudoPair], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    write_pairs(pairs, &mut out)
        .and_then(|_| out.flush())
        .map_err(|e| Error::io(path, e))
}

pub fn save_groups(groups: &[PseudoGroup], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    write_groups(groups, &mut out)
        .and_then(|_| out.flush())
        .map_err(|e| Error::io(path, e))
}

/// Parses a groups file (`<word>\t<k1,k2,...>`). Groups may have any
/// non-zero size here; callers validate them against a space.
pub fn read_groups<R: BufRead>(reader: R, source_name: &str) -> Result<Vec<PseudoGroup>> {
    let mut groups = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.map_err(|e| Error::io(source_name, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let (word, members) = line
            .split_once('\t')
            .ok_or_else(|| Error::parse(source_name, lineno, "expected <word>\\t<k1,k2,...>"))?;
        if word.is_empty() {
            return Err(Error::parse(source_name, lineno, "empty word"));
        }
        let mut senses = members
            .split(',')
            .map(|s| s.trim().parse::<usize>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|_| {
                Error::parse(
                    source_name,
                    lineno,
                    format!("invalid sense list {:?}", members),
                )
            })?;
        senses.sort_unstable();
        senses.dedup();
        groups.push(PseudoGroup {
            word: word.to_owned(),
            members: senses,
        });
    }
    Ok(groups)
}

pub fn load_groups(path: impl AsRef<Path>) -> Result<Vec<PseudoGroup>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_groups(BufReader::new(file), &path.display().to_string())
}
