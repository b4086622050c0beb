//! Synset inventory, hypernym DAG and per-synset domain weights.
//!
//! Three tab-separated files, no header rows:
//!
//! ```text
//! synsets.tsv    <synset_id>\t<pos>\t<lemma1,lemma2,...>
//! hypernyms.tsv  <child_synset_id>\t<parent_synset_id>
//! domains.tsv    <synset_id>\t<domain_label>\t<weight>
//! ```
//!
//! Ancestor distances are precomputed at build time, so every query is a
//! lookup over the handful of synsets of a lemma.

use std::collections::hash_map::Entry;
use std::collections::{BTreeMap, HashMap, VecDeque};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SynsetId(pub String);

impl SynsetId {
    pub fn new(id: impl Into<String>) -> Self {
        SynsetId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for SynsetId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DomainLabel(pub String);

impl DomainLabel {
    pub fn new(name: impl Into<String>) -> Self {
        DomainLabel(name.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for DomainLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Accumulates synsets, edges and domain weights before validation.
#[derive(Debug, Default)]
pub struct GraphBuilder {
    names: Vec<String>,
    pos: Vec<String>,
    ids: HashMap<String, usize>,
    lemmas: HashMap<String, Vec<usize>>,
    edges: Vec<(String, String)>,
    domains: Vec<(String, String, f64)>,
}

impl GraphBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn synset<I, S>(&mut self, id: &str, pos: &str, lemmas: I) -> Result<&mut Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        if id.is_empty() {
            return Err(Error::InvalidArgument("empty synset id".into()));
        }
        if self.ids.contains_key(id) {
            return Err(Error::DuplicateKey(id.to_owned()));
        }
        let sid = self.names.len();
        self.names.push(id.to_owned());
        self.pos.push(pos.to_owned());
        self.ids.insert(id.to_owned(), sid);
        for lemma in lemmas {
            let lemma = lemma.as_ref().trim();
            if lemma.is_empty() {
                continue;
            }
            let entry = self.lemmas.entry(lemma.to_owned()).or_default();
            if !entry.contains(&sid) {
                entry.push(sid);
            }
        }
        Ok(self)
    }

    pub fn hypernym(&mut self, child: &str, parent: &str) -> &mut Self {
        self.edges.push((child.to_owned(), parent.to_owned()));
        self
    }

    pub fn domain(&mut self, synset: &str, label: &str, weight: f64) -> &mut Self {
        self.domains
            .push((synset.to_owned(), label.to_owned(), weight));
        self
    }

    /// Validates references, weights and acyclicity.
    pub fn build(self) -> Result<LexicalGraph> {
        let n = self.names.len();
        let lookup = |id: &str, what: &str| {
            self.ids.get(id).copied().ok_or_else(|| {
                Error::Reference(format!("{} references undeclared synset {:?}", what, id))
            })
        };

        let mut parents = vec![Vec::new(); n];
        for (child, parent) in &self.edges {
            let c = lookup(child, "hypernym edge")?;
            let p = lookup(parent, "hypernym edge")?;
            if !parents[c].contains(&p) {
                parents[c].push(p);
            }
        }
        for ps in parents.iter_mut() {
            ps.sort_unstable();
        }
        if let Some((c, p)) = find_cycle_edge(&parents) {
            return Err(Error::Cycle {
                child: self.names[c].clone(),
                parent: self.names[p].clone(),
            });
        }

        let mut domain_ids: BTreeMap<String, usize> = BTreeMap::new();
        let mut per_synset: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); n];
        // Assign domain ids in sorted label order so iteration is stable.
        for (_, label, _) in &self.domains {
            if label.is_empty() {
                return Err(Error::InvalidArgument("empty domain label".into()));
            }
            domain_ids.entry(label.clone()).or_insert(0);
        }
        for (i, v) in domain_ids.values_mut().enumerate() {
            *v = i;
        }
        for (synset, label, weight) in &self.domains {
            let s = lookup(synset, "domain row")?;
            if !weight.is_finite() || *weight < 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "domain weight {} for ({}, {}) must be finite and non-negative",
                    weight, synset, label
                )));
            }
            *per_synset[s].entry(domain_ids[label]).or_insert(0.0) += weight;
        }
        let domain_names: Vec<String> = domain_ids.keys().cloned().collect();
        let domains = per_synset
            .into_iter()
            .map(|m| m.into_iter().collect())
            .collect();

        let ancestors = (0..n).map(|s| bfs_ancestors(&parents, s)).collect();

        Ok(LexicalGraph {
            names: self.names,
            pos: self.pos,
            ids: self.ids,
            lemmas: self.lemmas,
            parents,
            domain_names,
            domain_ids: domain_ids.into_iter().collect(),
            domains,
            ancestors,
        })
    }
}

/// Returns one edge closing a directed cycle, if any.
fn find_cycle_edge(parents: &[Vec<usize>]) -> Option<(usize, usize)> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        New,
        Active,
        Done,
    }
    let mut mark = vec![Mark::New; parents.len()];
    for root in 0..parents.len() {
        if mark[root] != Mark::New {
            continue;
        }
        // Iterative DFS: (node, next parent index)
        let mut stack = vec![(root, 0usize)];
        mark[root] = Mark::Active;
        while let Some(top) = stack.last_mut() {
            let node = top.0;
            if let Some(&p) = parents[node].get(top.1) {
                top.1 += 1;
                match mark[p] {
                    Mark::Active => return Some((node, p)),
                    Mark::New => {
                        mark[p] = Mark::Active;
                        stack.push((p, 0));
                    }
                    Mark::Done => {}
                }
            } else {
                mark[node] = Mark::Done;
                stack.pop();
            }
        }
    }
    None
}

/// Shortest upward distance from `start` to each ancestor, `start` itself
/// included at 0. Sorted by synset id.
fn bfs_ancestors(parents: &[Vec<usize>], start: usize) -> Vec<(usize, u32)> {
    let mut dist: HashMap<usize, u32> = HashMap::new();
    dist.insert(start, 0);
    let mut queue = VecDeque::from([start]);
    while let Some(s) = queue.pop_front() {
        let d = dist[&s];
        for &p in &parents[s] {
            if let Entry::Vacant(e) = dist.entry(p) {
                e.insert(d + 1);
                queue.push_back(p);
            }
        }
    }
    let mut out: Vec<(usize, u32)> = dist.into_iter().collect();
    out.sort_unstable();
    out
}

/// Per-lemma hypernym statistics: for every synset reachable upward from a
/// synset of the lemma, the minimum distance (clamped to at least 1) and
/// the number of lemma synsets it is a strict ancestor of.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct HypernymStats {
    entries: BTreeMap<usize, (u32, u32)>,
}

impl HypernymStats {
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `(clamped distance, frequency)` for a synset index.
    pub fn get(&self, synset: usize) -> Option<(u32, u32)> {
        self.entries.get(&synset).copied()
    }

    /// Reachable synset indices with `(clamped distance, frequency)`.
    pub fn iter(&self) -> impl Iterator<Item = (usize, u32, u32)> + '_ {
        self.entries.iter().map(|(&s, &(d, f))| (s, d, f))
    }
}

/// Immutable lexical knowledge: synsets, hypernymy and domain weights.
#[derive(Clone, Debug)]
pub struct LexicalGraph {
    names: Vec<String>,
    pos: Vec<String>,
    ids: HashMap<String, usize>,
    lemmas: HashMap<String, Vec<usize>>,
    parents: Vec<Vec<usize>>,
    domain_names: Vec<String>,
    domain_ids: HashMap<String, usize>,
    domains: Vec<Vec<(usize, f64)>>,
    ancestors: Vec<Vec<(usize, u32)>>,
}

impl LexicalGraph {
    pub fn synset_count(&self) -> usize {
        self.names.len()
    }

    pub fn lemma_count(&self) -> usize {
        self.lemmas.len()
    }

    /// Size of the domain inventory.
    pub fn domain_count(&self) -> usize {
        self.domain_names.len()
    }

    pub fn edge_count(&self) -> usize {
        self.parents.iter().map(Vec::len).sum()
    }

    pub fn synset_index(&self, id: &SynsetId) -> Option<usize> {
        self.ids.get(id.as_str()).copied()
    }

    pub fn synset_name(&self, index: usize) -> &str {
        &self.names[index]
    }

    pub fn synset_pos(&self, index: usize) -> &str {
        &self.pos[index]
    }

    pub fn domain_name(&self, index: usize) -> &str {
        &self.domain_names[index]
    }

    pub fn domain_index(&self, label: &DomainLabel) -> Option<usize> {
        self.domain_ids.get(label.as_str()).copied()
    }

    /// Direct hypernyms of a synset.
    pub fn parents(&self, id: &SynsetId) -> Result<Vec<SynsetId>> {
        let s = self.require(id)?;
        Ok(self.parents[s]
            .iter()
            .map(|&p| SynsetId::new(self.names[p].clone()))
            .collect())
    }

    /// Synset indices of a lemma. An exact match wins; otherwise the
    /// lowercase form is tried.
    fn lemma_synsets(&self, word: &str) -> &[usize] {
        if let Some(s) = self.lemmas.get(word) {
            return s;
        }
        let lower = word.to_lowercase();
        self.lemmas.get(&lower).map(Vec::as_slice).unwrap_or(&[])
    }

    /// Synsets(word), in declaration order.
    pub fn synsets_of(&self, word: &str) -> Vec<SynsetId> {
        self.lemma_synsets(word)
            .iter()
            .map(|&s| SynsetId::new(self.names[s].clone()))
            .collect()
    }

    fn require(&self, id: &SynsetId) -> Result<usize> {
        self.synset_index(id)
            .ok_or_else(|| Error::KeyNotFound(format!("synset {}", id)))
    }

    /// Sum of a domain's weight over every synset of `word`.
    pub fn domain_mass(&self, word: &str, domain: &DomainLabel) -> f64 {
        let Some(d) = self.domain_index(domain) else {
            return 0.0;
        };
        self.lemma_synsets(word)
            .iter()
            .flat_map(|&s| self.domains[s].iter())
            .filter(|(dd, _)| *dd == d)
            .map(|(_, w)| w)
            .sum()
    }

    /// Every domain with its mass for `word`, keyed by domain index.
    pub fn domain_masses(&self, word: &str) -> BTreeMap<usize, f64> {
        let mut out = BTreeMap::new();
        for &s in self.lemma_synsets(word) {
            for &(d, w) in &self.domains[s] {
                *out.entry(d).or_insert(0.0) += w;
            }
        }
        out
    }

    /// Length of the shortest upward path from `x` to `y`; `None` when `y`
    /// is not an ancestor of `x`.
    pub fn synset_distance(&self, x: &SynsetId, y: &SynsetId) -> Result<Option<u32>> {
        let xs = self.require(x)?;
        let ys = self.require(y)?;
        Ok(self.distance_index(xs, ys))
    }

    fn distance_index(&self, x: usize, y: usize) -> Option<u32> {
        let anc = &self.ancestors[x];
        anc.binary_search_by_key(&y, |&(s, _)| s)
            .ok()
            .map(|i| anc[i].1)
    }

    /// min over Synsets(word) of the distance to `h`, clamped to at least 1.
    /// `None` if the word is unknown, `h` is undeclared, or nothing reaches `h`.
    pub fn lemma_hypernym_distance(&self, word: &str, h: &SynsetId) -> Option<u32> {
        let hs = self.synset_index(h)?;
        self.lemma_synsets(word)
            .iter()
            .filter_map(|&s| self.distance_index(s, hs))
            .min()
            .map(|d| d.max(1))
    }

    /// Number of synsets of `word` that have `h` as a strict ancestor.
    pub fn hypernym_frequency(&self, word: &str, h: &SynsetId) -> usize {
        let Some(hs) = self.synset_index(h) else {
            return 0;
        };
        self.lemma_synsets(word)
            .iter()
            .filter(|&&s| s != hs && self.distance_index(s, hs).is_some())
            .count()
    }

    /// Distances and frequencies for every synset reachable from `word`.
    pub fn hypernym_stats(&self, word: &str) -> HypernymStats {
        let mut entries: BTreeMap<usize, (u32, u32)> = BTreeMap::new();
        for &s in self.lemma_synsets(word) {
            for &(a, d) in &self.ancestors[s] {
                let e = entries.entry(a).or_insert((u32::MAX, 0));
                e.0 = e.0.min(d.max(1));
                if d > 0 {
                    e.1 += 1;
                }
            }
        }
        HypernymStats { entries }
    }

    /// Builds a graph from three readers in the TSV schema.
    pub fn from_readers<A: BufRead, B: BufRead, C: BufRead>(
        synsets: (A, &str),
        hypernyms: (B, &str),
        domains: (C, &str),
    ) -> Result<Self> {
        let mut builder = GraphBuilder::new();

        let (reader, name) = synsets;
        for_each_row(reader, name, |lineno, fields| {
            if fields.len() < 2 || fields.len() > 3 {
                return Err(Error::parse(
                    name,
                    lineno,
                    "expected <synset_id>\\t<pos>\\t<lemmas>",
                ));
            }
            let lemmas = fields.get(2).copied().unwrap_or("");
            builder
                .synset(fields[0], fields[1], lemmas.split(','))
                .map_err(|e| match e {
                    Error::DuplicateKey(k) => {
                        Error::parse(name, lineno, format!("duplicate synset {}", k))
                    }
                    other => Error::parse(name, lineno, other.to_string()),
                })?;
            Ok(())
        })?;

        let (reader, name) = hypernyms;
        for_each_row(reader, name, |lineno, fields| {
            if fields.len() != 2 {
                return Err(Error::parse(name, lineno, "expected <child>\\t<parent>"));
            }
            builder.hypernym(fields[0], fields[1]);
            Ok(())
        })?;

        let (reader, name) = domains;
        for_each_row(reader, name, |lineno, fields| {
            if fields.len() != 3 {
                return Err(Error::parse(
                    name,
                    lineno,
                    "expected <synset_id>\\t<domain>\\t<weight>",
                ));
            }
            let weight: f64 = fields[2].trim().parse().map_err(|_| {
                Error::parse(name, lineno, format!("invalid weight {:?}", fields[2]))
            })?;
            if !weight.is_finite() || weight < 0.0 {
                return Err(Error::parse(name, lineno, "weight must be finite and >= 0"));
            }
            builder.domain(fields[0], fields[1], weight);
            Ok(())
        })?;

        builder.build()
    }
}

fn for_each_row<R: BufRead>(
    reader: R,
    name: &str,
    mut f: impl FnMut(usize, &[&str]) -> Result<()>,
) -> Result<()> {
    for (idx, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(name, e))?;
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        f(idx + 1, &fields)?;
    }
    Ok(())
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::io(path, e))
}

pub fn load_graph(
    synsets_path: impl AsRef<Path>,
    hypernyms_path: impl AsRef<Path>,
    domains_path: impl AsRef<Path>,
) -> Result<LexicalGraph> {
    let (s, h, d) = (
        synsets_path.as_ref(),
        hypernyms_path.as_ref(),
        domains_path.as_ref(),
    );
    LexicalGraph::from_readers(
        (open(s)?, &s.display().to_string()),
        (open(h)?, &h.display().to_string()),
        (open(d)?, &d.display().to_string()),
    )
}
