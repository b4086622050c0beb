//! Learning and applying the global transition matrix.
//!
//! Every member `x` of a detected group is paired with the group's
//! representative `x_r`; a single `D x D` matrix is fit by per-sample SGD on
//! `L = sum ||Phi x - x_r||^2` and then applied to every row of the space.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::detector::PseudoGroup;
use crate::embedding::{dot, EmbeddingSet, SenseKey};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RepresentativeMode {
    #[default]
    Mean,
    Random,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Representative {
    pub group: PseudoGroup,
    pub vector: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RepresentativeAssignment {
    pub entries: Vec<Representative>,
    pub mode: RepresentativeMode,
    pub seed: u64,
}

/// One representative per group: the componentwise mean of the members, or
/// a member drawn uniformly with a generator seeded by `seed`.
pub fn make_representatives(
    set: &EmbeddingSet,
    groups: &[PseudoGroup],
    mode: RepresentativeMode,
    seed: u64,
) -> Result<RepresentativeAssignment> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut entries = Vec::with_capacity(groups.len());
    for group in groups {
        if group.members.is_empty() {
            return Err(Error::InvalidArgument(format!(
                "group of {:?} has no members",
                group.word
            )));
        }
        let rows = group
            .keys()
            .map(|k| {
                set.row_of(&k)
                    .ok_or_else(|| Error::KeyNotFound(k.to_string()))
            })
            .collect::<Result<Vec<usize>>>()?;
        let vector = match mode {
            RepresentativeMode::Mean => {
                let mut mean = vec![0.0; set.dim()];
                for &r in &rows {
                    for (m, x) in mean.iter_mut().zip(set.row(r)) {
                        *m += x;
                    }
                }
                let n = rows.len() as f64;
                mean.iter_mut().for_each(|m| *m /= n);
                mean
            }
            RepresentativeMode::Random => set.row(rows[rng.random_range(0..rows.len())]).to_vec(),
        };
        entries.push(Representative {
            group: group.clone(),
            vector,
        });
    }
    Ok(RepresentativeAssignment {
        entries,
        mode,
        seed,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainingPair {
    pub input: Vec<f64>,
    pub target: Vec<f64>,
}

/// One `(member, representative)` pair per group member, groups in order.
pub fn training_pairs(
    set: &EmbeddingSet,
    reps: &RepresentativeAssignment,
) -> Result<Vec<TrainingPair>> {
    let mut pairs = Vec::new();
    for entry in &reps.entries {
        for key in entry.group.keys() {
            pairs.push(TrainingPair {
                input: set.vector(&key)?.to_vec(),
                target: entry.vector.clone(),
            });
        }
    }
    Ok(pairs)
}

/// Dense `D x D` linear map.
#[derive(Clone, Debug, PartialEq)]
pub struct TransitionMatrix {
    cells: Array2<f64>,
}

impl TransitionMatrix {
    pub fn identity(dim: usize) -> Self {
        TransitionMatrix {
            cells: Array2::eye(dim),
        }
    }

    pub fn zeros(dim: usize) -> Self {
        TransitionMatrix {
            cells: Array2::zeros((dim, dim)),
        }
    }

    pub fn from_cells(cells: Array2<f64>) -> Result<Self> {
        let (r, c) = cells.dim();
        if r != c || r == 0 {
            return Err(Error::InvalidArgument(format!(
                "transition matrix must be square and non-empty, got {}x{}",
                r, c
            )));
        }
        if cells.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument(
                "non-finite transition matrix entry".into(),
            ));
        }
        Ok(TransitionMatrix {
            cells: cells.as_standard_layout().into_owned(),
        })
    }

    pub fn dim(&self) -> usize {
        self.cells.nrows()
    }

    pub fn cells(&self) -> &Array2<f64> {
        &self.cells
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let d = self.dim();
        &self.cells.as_slice().expect("standard layout")[i * d..(i + 1) * d]
    }

    /// `Phi v`, each output component summed left to right.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        (0..self.dim()).map(|i| dot(self.row(i), v)).collect()
    }

    pub fn write<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{}", self.dim())?;
        for i in 0..self.dim() {
            let row: Vec<String> = self.row(i).iter().map(f64::to_string).collect();
            writeln!(w, "{}", row.join(" "))?;
        }
        Ok(())
    }

    pub fn read<R: BufRead>(reader: R, source_name: &str) -> Result<Self> {
        let mut lines = reader.lines().enumerate();
        let dim = match lines.next() {
            Some((_, line)) => line
                .map_err(|e| Error::io(source_name, e))?
                .trim()
                .parse::<usize>()
                .map_err(|_| Error::parse(source_name, 1, "expected the dimension"))?,
            None => return Err(Error::parse(source_name, 1, "empty file")),
        };
        let mut data = Vec::with_capacity(dim * dim);
        let mut rows = 0;
        for (idx, line) in lines {
            let line = line.map_err(|e| Error::io(source_name, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let lineno = idx + 1;
            if rows == dim {
                return Err(Error::parse(source_name, lineno, "more rows than declared"));
            }
            let before = data.len();
            for field in line.split_ascii_whitespace() {
                data.push(field.parse::<f64>().map_err(|_| {
                    Error::parse(source_name, lineno, format!("invalid number {:?}", field))
                })?);
            }
            if data.len() - before != dim {
                return Err(Error::parse(
                    source_name,
                    lineno,
                    format!("expected {} entries, found {}", dim, data.len() - before),
                ));
            }
            rows += 1;
        }
        if rows != dim {
            return Err(Error::parse(
                source_name,
                rows + 2,
                format!("expected {} rows, found {}", dim, rows),
            ));
        }
        Self::from_cells(Array2::from_shape_vec((dim, dim), data).expect("shape checked"))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = BufWriter::new(file);
        self.write(&mut out)
            .and_then(|_| out.flush())
            .map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read(BufReader::new(file), &path.display().to_string())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum Init {
    Identity,
    Zero,
    Gaussian { sigma: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainingConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub seed: u64,
    pub shuffle: bool,
    pub init: Init,
    /// Weight of an optional per-sample `||Phi - I||^2` penalty. Zero
    /// trains on the group loss alone.
    pub ridge: f64,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig {
            learning_rate: 0.01,
            epochs: 50,
            seed: 0,
            shuffle: true,
            init: Init::Identity,
            ridge: 0.0,
        }
    }
}

impl TrainingConfig {
    fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.epochs == 0 {
            return Err(Error::InvalidArgument("epochs must be at least 1".into()));
        }
        if !(self.ridge >= 0.0 && self.ridge.is_finite()) {
            return Err(Error::InvalidArgument("ridge weight must be >= 0".into()));
        }
        if let Init::Gaussian { sigma } = self.init {
            if !(sigma >= 0.0 && sigma.is_finite()) {
                return Err(Error::InvalidArgument("init sigma must be >= 0".into()));
            }
        }
        Ok(())
    }

    fn initial(&self, dim: usize, rng: &mut ChaCha8Rng) -> TransitionMatrix {
        match self.init {
            Init::Identity => TransitionMatrix::identity(dim),
            Init::Zero => TransitionMatrix::zeros(dim),
            Init::Gaussian { sigma } => {
                let normal = Normal::new(0.0, sigma).expect("sigma validated");
                let data: Vec<f64> = (0..dim * dim).map(|_| normal.sample(rng)).collect();
                TransitionMatrix {
                    cells: Array2::from_shape_vec((dim, dim), data).expect("square"),
                }
            }
        }
    }
}

/// `sum ||Phi x - x_r||^2` over all pairs.
pub fn training_loss(phi: &TransitionMatrix, pairs: &[TrainingPair]) -> f64 {
    pairs
        .iter()
        .map(|p| {
            phi.apply(&p.input)
                .iter()
                .zip(&p.target)
                .map(|(y, t)| (y - t) * (y - t))
                .sum::<f64>()
        })
        .sum()
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainingOutcome {
    pub phi: TransitionMatrix,
    /// Full-dataset loss after each epoch.
    pub loss_curve: Vec<f64>,
}

/// Fits the transition matrix by plain per-sample SGD.
///
/// The gradient of one sample is `2 (Phi x - x_r) x^T`. With `shuffle` the
/// visiting order is re-drawn every epoch from a generator seeded by
/// `cfg.seed`, after the initial matrix is drawn from the same generator.
/// With no pairs the initial matrix is returned with an empty loss curve.
pub fn train_transition(
    pairs: &[TrainingPair],
    dim: usize,
    cfg: &TrainingConfig,
) -> Result<TrainingOutcome> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    if pairs.is_empty() {
        return Ok(TrainingOutcome {
            phi: cfg.initial(dim, &mut rng),
            loss_curve: Vec::new(),
        });
    }
    train_inner(pairs, cfg, dim, &mut rng)
}

fn train_inner(
    pairs: &[TrainingPair],
    cfg: &TrainingConfig,
    dim: usize,
    rng: &mut ChaCha8Rng,
) -> Result<TrainingOutcome> {
    if dim == 0 {
        return Err(Error::InvalidArgument("dimension must be positive".into()));
    }
    for (i, p) in pairs.iter().enumerate() {
        if p.input.len() != dim || p.target.len() != dim {
            return Err(Error::InvalidArgument(format!(
                "training pair {} has dims {}/{}, expected {}",
                i,
                p.input.len(),
                p.target.len(),
                dim
            )));
        }
    }
    let mut phi = cfg.initial(dim, rng);
    let mut order: Vec<usize> = (0..pairs.len()).collect();
    let mut loss_curve = Vec::with_capacity(cfg.epochs);
    let mut residual = vec![0.0; dim];
    let step = 2.0 * cfg.learning_rate;
    for _ in 0..cfg.epochs {
        if cfg.shuffle {
            order.shuffle(rng);
        }
        for &idx in &order {
            let TrainingPair { input, target } = &pairs[idx];
            for i in 0..dim {
                residual[i] = dot(phi.row(i), input) - target[i];
            }
            let cells = phi.cells.as_slice_mut().expect("standard layout");
            for i in 0..dim {
                let r = step * residual[i];
                let row = &mut cells[i * dim..(i + 1) * dim];
                for (j, c) in row.iter_mut().enumerate() {
                    let mut g = r * input[j];
                    if cfg.ridge > 0.0 {
                        let eye = if i == j { 1.0 } else { 0.0 };
                        g += step * cfg.ridge * (*c - eye);
                    }
                    *c -= g;
                }
            }
        }
        let loss = training_loss(&phi, pairs);
        if !loss.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "training diverged (loss {}); lower the learning rate",
                loss
            )));
        }
        loss_curve.push(loss);
    }
    Ok(TrainingOutcome { phi, loss_curve })
}

#[derive(Clone, Debug)]
pub struct Projection {
    pub space: EmbeddingSet,
    /// Senses whose projected vector is all zeros.
    pub zero_rows: Vec<SenseKey>,
}

/// Replaces every row `v` with `Phi v`. Rows are computed in parallel; each
/// entry is the same left-to-right sum as [`TransitionMatrix::apply`].
pub fn project_space(set: &EmbeddingSet, phi: &TransitionMatrix) -> Result<Projection> {
    let dim = set.dim();
    if phi.dim() != dim {
        return Err(Error::InvalidArgument(format!(
            "transition matrix is {}x{}, space has dim {}",
            phi.dim(),
            phi.dim(),
            dim
        )));
    }
    let data: Vec<f64> = (0..set.len())
        .into_par_iter()
        .flat_map_iter(|id| phi.apply(set.row(id)))
        .collect();
    let rows = Array2::from_shape_vec((set.len(), dim), data).expect("shape");
    let space = EmbeddingSet::new_allow_zero(set.keys().to_vec(), rows)?;
    let zero_rows = space
        .zero_rows()
        .into_iter()
        .map(|id| space.key(id).clone())
        .collect();
    Ok(Projection { space, zero_rows })
}
