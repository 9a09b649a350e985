use std::ops::Range;

use nalgebra::{DMatrix, DMatrixView};

use crate::error::{ensure_shape, Error, Result};
use crate::linalg;

/// Training or test samples stored as columns, grouped contiguously by class.
///
/// Labels are 1-based. Construction sorts columns by label (stable) and keeps
/// the permutation so results can be mapped back to the caller's order.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    y: DMatrix<f64>,
    labels: Vec<usize>,
    classes: usize,
    per_class: usize,
    permutation: Vec<usize>,
}

impl Dataset {
    pub fn new(y: DMatrix<f64>, labels: Vec<usize>) -> Result<Self> {
        if labels.len() != y.ncols() {
            return Err(Error::Dimension(format!(
                "{} labels for {} samples",
                labels.len(),
                y.ncols()
            )));
        }
        if labels.is_empty() {
            return Err(Error::Dimension("dataset has no samples".into()));
        }
        if !linalg::all_finite(&y) {
            return Err(Error::Data("sample matrix contains NaN or Inf".into()));
        }
        if labels.contains(&0) {
            return Err(Error::Data("labels must be in 1..C".into()));
        }
        let classes = *labels.iter().max().unwrap();
        let mut counts = vec![0usize; classes];
        for &l in &labels {
            counts[l - 1] += 1;
        }
        let per_class = counts[0];
        if let Some(c) = counts.iter().position(|&n| n != per_class) {
            return Err(Error::Domain(format!(
                "class sizes must be equal: class 1 has {per_class} samples, class {} has {}",
                c + 1,
                counts[c]
            )));
        }

        let mut permutation: Vec<usize> = (0..labels.len()).collect();
        permutation.sort_by_key(|&i| labels[i]);
        let y = if permutation.iter().enumerate().all(|(i, &p)| i == p) {
            y
        } else {
            y.select_columns(&permutation)
        };
        let labels = permutation.iter().map(|&i| labels[i]).collect();
        Ok(Self {
            y,
            labels,
            classes,
            per_class,
            permutation,
        })
    }

    pub fn y(&self) -> &DMatrix<f64> {
        &self.y
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn per_class(&self) -> usize {
        self.per_class
    }

    pub fn dim(&self) -> usize {
        self.y.nrows()
    }

    pub fn len(&self) -> usize {
        self.y.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.y.ncols() == 0
    }

    /// `permutation()[i]` is the original column index of sorted column `i`.
    pub fn permutation(&self) -> &[usize] {
        &self.permutation
    }

    /// Column range of class `c` (0-based).
    pub fn class_range(&self, c: usize) -> Range<usize> {
        c * self.per_class..(c + 1) * self.per_class
    }

    pub fn class_block(&self, c: usize) -> DMatrixView<'_, f64> {
        self.y.columns(c * self.per_class, self.per_class)
    }

    /// Rescales every sample to unit norm. Returns the number of zero samples.
    pub fn normalize_columns(&mut self) -> usize {
        let zeros = linalg::normalize_columns(&mut self.y);
        if zeros > 0 {
            log::warn!("{zeros} zero-norm samples left unnormalized");
        }
        zeros
    }

    pub fn normalized(mut self) -> Self {
        self.normalize_columns();
        self
    }

    /// The first `first` samples of each class, and the rest.
    pub fn split_per_class(&self, first: usize) -> Result<(Dataset, Dataset)> {
        if first == 0 || first >= self.per_class {
            return Err(Error::Parameter(format!(
                "split size {first} must lie strictly between 0 and {}",
                self.per_class
            )));
        }
        let (mut head, mut tail) = (Vec::new(), Vec::new());
        for c in 0..self.classes {
            let r = self.class_range(c);
            head.extend(r.start..r.start + first);
            tail.extend(r.start + first..r.end);
        }
        let part = |idx: &[usize]| {
            Dataset::new(
                self.y.select_columns(idx),
                idx.iter().map(|&j| self.labels[j]).collect(),
            )
        };
        Ok((part(&head)?, part(&tail)?))
    }
}

/// Class-specific dictionaries `D_1..D_C` plus the shared dictionary `D_0`.
#[derive(Debug, Clone, PartialEq)]
pub struct DictionaryBundle {
    pub class_dicts: Vec<DMatrix<f64>>,
    /// `d x k0`; zero columns when no shared dictionary is used.
    pub shared: DMatrix<f64>,
}

impl DictionaryBundle {
    pub fn new(class_dicts: Vec<DMatrix<f64>>, shared: DMatrix<f64>) -> Result<Self> {
        let Some(first) = class_dicts.first() else {
            return Err(Error::Dimension("at least one class dictionary is required".into()));
        };
        let shape = first.shape();
        if shape.1 == 0 {
            return Err(Error::Dimension("class dictionaries need at least one atom".into()));
        }
        for (c, dc) in class_dicts.iter().enumerate() {
            ensure_shape(&format!("class dictionary {}", c + 1), dc.shape(), shape)?;
        }
        if shared.nrows() != shape.0 {
            return Err(Error::Dimension(format!(
                "shared dictionary has {} rows, class dictionaries have {}",
                shared.nrows(),
                shape.0
            )));
        }
        let bundle = Self {
            class_dicts,
            shared,
        };
        if !bundle.class_dicts.iter().chain([&bundle.shared]).all(linalg::all_finite) {
            return Err(Error::Data("dictionary contains NaN or Inf".into()));
        }
        Ok(bundle)
    }

    /// Rebuilds a bundle from the concatenated `D` (d x C*k_c) and `D_0`.
    pub fn from_concat(d: &DMatrix<f64>, shared: DMatrix<f64>, classes: usize) -> Result<Self> {
        if classes == 0 || !d.ncols().is_multiple_of(classes) {
            return Err(Error::Dimension(format!(
                "{} atoms cannot be split into {classes} equal class dictionaries",
                d.ncols()
            )));
        }
        let kc = d.ncols() / classes;
        let dicts = (0..classes).map(|c| d.columns(c * kc, kc).into_owned()).collect();
        Self::new(dicts, shared)
    }

    /// Checks the atom-norm invariants: class atoms in (0, 1+1e-9], shared atoms <= 1+1e-9.
    pub fn check_invariants(&self) -> Result<()> {
        for (c, dc) in self.class_dicts.iter().enumerate() {
            for (j, col) in dc.column_iter().enumerate() {
                let n = col.norm();
                if !(n > 0.0 && n <= 1.0 + 1e-9) {
                    return Err(Error::Domain(format!(
                        "atom {j} of class dictionary {} has norm {n}",
                        c + 1
                    )));
                }
            }
        }
        for (j, col) in self.shared.column_iter().enumerate() {
            let n = col.norm();
            if n > 1.0 + 1e-9 {
                return Err(Error::Domain(format!("shared atom {j} has norm {n}")));
            }
        }
        Ok(())
    }

    pub fn classes(&self) -> usize {
        self.class_dicts.len()
    }

    pub fn dim(&self) -> usize {
        self.shared.nrows()
    }

    pub fn atoms_per_class(&self) -> usize {
        self.class_dicts[0].ncols()
    }

    pub fn shared_atoms(&self) -> usize {
        self.shared.ncols()
    }

    /// `K = C * k_c`.
    pub fn total_class_atoms(&self) -> usize {
        self.classes() * self.atoms_per_class()
    }

    /// `D = [D_1, ..., D_C]`.
    pub fn concat(&self) -> DMatrix<f64> {
        let kc = self.atoms_per_class();
        let mut d = DMatrix::zeros(self.dim(), self.total_class_atoms());
        for (c, dc) in self.class_dicts.iter().enumerate() {
            d.columns_mut(c * kc, kc).copy_from(dc);
        }
        d
    }

    /// `D̄ = [D, D_0]`.
    pub fn total(&self) -> DMatrix<f64> {
        let k = self.total_class_atoms();
        let mut d = DMatrix::zeros(self.dim(), k + self.shared_atoms());
        d.columns_mut(0, k).copy_from(&self.concat());
        d.columns_mut(k, self.shared_atoms()).copy_from(&self.shared);
        d
    }
}

/// Coefficients `X` (on `D`) and `X^0` (on `D_0`) for a class-sorted sample set.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefBundle {
    pub x: DMatrix<f64>,
    pub x0: DMatrix<f64>,
    atoms_per_class: usize,
    per_class: usize,
}

impl CoefBundle {
    pub fn new(
        x: DMatrix<f64>,
        x0: DMatrix<f64>,
        atoms_per_class: usize,
        per_class: usize,
    ) -> Result<Self> {
        if atoms_per_class == 0 || !x.nrows().is_multiple_of(atoms_per_class) {
            return Err(Error::Dimension(format!(
                "{} coefficient rows do not split into blocks of {atoms_per_class}",
                x.nrows()
            )));
        }
        if per_class == 0 || !x.ncols().is_multiple_of(per_class) {
            return Err(Error::Dimension(format!(
                "{} columns do not split into classes of {per_class}",
                x.ncols()
            )));
        }
        if x0.ncols() != x.ncols() {
            return Err(Error::Dimension(format!(
                "X has {} columns, X0 has {}",
                x.ncols(),
                x0.ncols()
            )));
        }
        Ok(Self {
            x,
            x0,
            atoms_per_class,
            per_class,
        })
    }

    pub fn zeros(dicts: &DictionaryBundle, data: &Dataset) -> Self {
        Self {
            x: DMatrix::zeros(dicts.total_class_atoms(), data.len()),
            x0: DMatrix::zeros(dicts.shared_atoms(), data.len()),
            atoms_per_class: dicts.atoms_per_class(),
            per_class: data.per_class(),
        }
    }

    pub fn atoms_per_class(&self) -> usize {
        self.atoms_per_class
    }

    pub fn per_class(&self) -> usize {
        self.per_class
    }

    pub fn classes(&self) -> usize {
        self.x.nrows() / self.atoms_per_class
    }

    /// `X_c`: all rows, columns of class `c`.
    pub fn class_cols(&self, c: usize) -> DMatrixView<'_, f64> {
        self.x.columns(c * self.per_class, self.per_class)
    }

    /// `X^i`: row block of dictionary `i`, all columns.
    pub fn row_block(&self, i: usize) -> DMatrixView<'_, f64> {
        self.x.rows(i * self.atoms_per_class, self.atoms_per_class)
    }

    /// `X_c^i`.
    pub fn block(&self, i: usize, c: usize) -> DMatrixView<'_, f64> {
        self.x.view(
            (i * self.atoms_per_class, c * self.per_class),
            (self.atoms_per_class, self.per_class),
        )
    }

    /// `X^0_c`.
    pub fn shared_cols(&self, c: usize) -> DMatrixView<'_, f64> {
        self.x0.columns(c * self.per_class, self.per_class)
    }

    /// `X̄ = [X; X^0]`.
    pub fn stacked(&self) -> DMatrix<f64> {
        let mut s = DMatrix::zeros(self.x.nrows() + self.x0.nrows(), self.x.ncols());
        s.rows_mut(0, self.x.nrows()).copy_from(&self.x);
        s.rows_mut(self.x.nrows(), self.x0.nrows()).copy_from(&self.x0);
        s
    }
}

/// Regularization weights, budgets and tolerances.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperParams {
    pub lambda1: f64,
    pub lambda2: f64,
    pub eta: f64,
    /// Balance between residual and coefficient distance when classifying.
    pub w: f64,
    pub outer_iters: usize,
    /// FISTA budget for each training sparse-coding solve.
    pub fista_iters: usize,
    /// FISTA budget for coding one test sample.
    pub fista_test_iters: usize,
    pub fista_tol: f64,
    pub admm_iters: usize,
    pub admm_rho: f64,
    /// Column sweeps per class-dictionary update.
    pub odl_sweeps: usize,
    pub seed: u64,
}

impl Default for HyperParams {
    fn default() -> Self {
        Self {
            lambda1: 0.001,
            lambda2: 0.01,
            eta: 0.1,
            w: 0.5,
            outer_iters: 15,
            fista_iters: 100,
            fista_test_iters: 300,
            fista_tol: 1e-6,
            admm_iters: 100,
            admm_rho: 1.0,
            odl_sweeps: 2,
            seed: 0,
        }
    }
}

impl HyperParams {
    pub fn validate(&self) -> Result<()> {
        let weights = [
            ("lambda1", self.lambda1),
            ("lambda2", self.lambda2),
            ("eta", self.eta),
        ];
        for (name, v) in weights {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Parameter(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        if !(0.0..=1.0).contains(&self.w) {
            return Err(Error::Parameter(format!("w must be in [0, 1], got {}", self.w)));
        }
        let budgets = [
            ("outer_iters", self.outer_iters),
            ("fista_iters", self.fista_iters),
            ("fista_test_iters", self.fista_test_iters),
            ("admm_iters", self.admm_iters),
            ("odl_sweeps", self.odl_sweeps),
        ];
        for (name, v) in budgets {
            if v == 0 {
                return Err(Error::Parameter(format!("{name} must be >= 1")));
            }
        }
        if !(self.fista_tol > 0.0 && self.admm_rho > 0.0) {
            return Err(Error::Parameter("fista_tol and admm_rho must be positive".into()));
        }
        Ok(())
    }
}
