//! Synthetic class-plus-shared-subspace data and random-projection features.

use nalgebra::DMatrix;
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::types::{Dataset, DictionaryBundle};
use crate::error::{Error, Result};
use crate::linalg;

/// Parameters of the planted model `y = D_c a + D_0 b + noise`.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub classes: usize,
    pub dim: usize,
    pub per_class: usize,
    pub atoms_per_class: usize,
    pub shared_atoms: usize,
    /// Rank of the ground-truth shared dictionary.
    pub shared_rank: usize,
    pub noise_sigma: f64,
    /// Multiplier on the shared code entries relative to the class codes.
    pub shared_scale: f64,
    /// Non-zeros per class code.
    pub class_sparsity: usize,
    /// Non-zeros per shared code.
    pub shared_sparsity: usize,
    pub seed: u64,
}

impl SynthSpec {
    pub fn new(classes: usize, dim: usize, per_class: usize, atoms_per_class: usize) -> Self {
        Self {
            classes,
            dim,
            per_class,
            atoms_per_class,
            shared_atoms: 0,
            shared_rank: 0,
            noise_sigma: 0.0,
            shared_scale: 1.0,
            class_sparsity: atoms_per_class.min(3),
            shared_sparsity: 3,
            seed: 0,
        }
    }

    pub fn with_shared(mut self, shared_atoms: usize, shared_rank: usize) -> Self {
        self.shared_atoms = shared_atoms;
        self.shared_rank = shared_rank;
        self
    }

    pub fn with_noise(mut self, sigma: f64) -> Self {
        self.noise_sigma = sigma;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.classes == 0 || self.dim == 0 || self.per_class == 0 || self.atoms_per_class == 0 {
            return Err(Error::Parameter(
                "classes, dim, per_class and atoms_per_class must be positive".into(),
            ));
        }
        if self.shared_rank > self.dim.min(self.shared_atoms) {
            return Err(Error::Parameter(format!(
                "shared_rank {} exceeds min(dim, k0) = {}",
                self.shared_rank,
                self.dim.min(self.shared_atoms)
            )));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::Parameter("noise_sigma must be finite and >= 0".into()));
        }
        if !self.shared_scale.is_finite() {
            return Err(Error::Parameter("shared_scale must be finite".into()));
        }
        Ok(())
    }
}

/// Generated samples together with the dictionaries that produced them.
#[derive(Debug, Clone)]
pub struct SyntheticProblem {
    pub data: Dataset,
    pub truth: DictionaryBundle,
}

fn gaussian(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample::<f64, _>(StandardNormal))
}

/// Draws a dataset from the planted model. Columns are not normalized.
pub fn generate_synthetic(spec: &SynthSpec) -> Result<SyntheticProblem> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let d = spec.dim;

    let mut shared = if spec.shared_atoms == 0 {
        DMatrix::zeros(d, 0)
    } else {
        let left = gaussian(&mut rng, d, spec.shared_rank);
        let right = gaussian(&mut rng, spec.shared_rank, spec.shared_atoms);
        left * right
    };
    linalg::normalize_columns(&mut shared);

    let class_dicts: Vec<DMatrix<f64>> = (0..spec.classes)
        .map(|_| {
            let mut dc = gaussian(&mut rng, d, spec.atoms_per_class);
            linalg::normalize_columns(&mut dc);
            dc
        })
        .collect();

    let n = spec.classes * spec.per_class;
    let mut y = DMatrix::zeros(d, n);
    let mut labels = Vec::with_capacity(n);
    let class_nnz = spec.class_sparsity.clamp(1, spec.atoms_per_class);
    let shared_nnz = spec.shared_sparsity.min(spec.shared_atoms);
    for (c, dc) in class_dicts.iter().enumerate() {
        for _ in 0..spec.per_class {
            let j = labels.len();
            let mut col = y.column_mut(j);
            for atom in index::sample(&mut rng, spec.atoms_per_class, class_nnz) {
                let a: f64 = rng.sample(StandardNormal);
                col.axpy(a, &dc.column(atom), 1.0);
            }
            if shared_nnz > 0 {
                for atom in index::sample(&mut rng, spec.shared_atoms, shared_nnz) {
                    let b: f64 = rng.sample(StandardNormal);
                    col.axpy(spec.shared_scale * b, &shared.column(atom), 1.0);
                }
            }
            if spec.noise_sigma > 0.0 {
                for v in col.iter_mut() {
                    *v += spec.noise_sigma * rng.sample::<f64, _>(StandardNormal);
                }
            }
            labels.push(c + 1);
        }
    }

    Ok(SyntheticProblem {
        data: Dataset::new(y, labels)?,
        truth: DictionaryBundle::new(class_dicts, shared)?,
    })
}

/// Projects `raw` (one sample per column) to `target_dim` with a seeded
/// Gaussian matrix scaled by `1/sqrt(target_dim)`, then unit-normalizes
/// each output column.
pub fn random_projection_features(
    raw: &DMatrix<f64>,
    target_dim: usize,
    seed: u64,
) -> Result<DMatrix<f64>> {
    if raw.is_empty() || target_dim == 0 {
        return Err(Error::Dimension("random projection needs non-empty input".into()));
    }
    if target_dim > raw.nrows() {
        log::warn!(
            "projecting {} raw features up to {target_dim} dimensions",
            raw.nrows()
        );
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut r = gaussian(&mut rng, target_dim, raw.nrows());
    r /= (target_dim as f64).sqrt();
    random_projection_with(raw, &r)
}

/// Applies an explicit projection matrix and normalizes the output columns.
pub fn random_projection_with(raw: &DMatrix<f64>, projection: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if raw.is_empty() {
        return Err(Error::Dimension("random projection needs non-empty input".into()));
    }
    if projection.ncols() != raw.nrows() {
        return Err(Error::Dimension(format!(
            "projection has {} columns, input has {} rows",
            projection.ncols(),
            raw.nrows()
        )));
    }
    let mut out = projection * raw;
    let zeros = linalg::normalize_columns(&mut out);
    if zeros > 0 {
        log::warn!("{zeros} projected columns have zero norm and were left as zero");
    }
    Ok(out)
}
