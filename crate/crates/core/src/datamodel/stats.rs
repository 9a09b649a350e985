use nalgebra::{DMatrix, DVector};

use super::types::CoefBundle;
use crate::error::{Error, Result};
use crate::linalg;

/// Mean coefficient vectors: global `m`, per-class `m_c`, shared `m^0`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanStats {
    pub m: DVector<f64>,
    pub class_means: Vec<DVector<f64>>,
    pub m0: DVector<f64>,
}

impl MeanStats {
    /// Means of `coefs` given 1-based `labels` over `classes` classes.
    pub fn compute(coefs: &CoefBundle, labels: &[usize], classes: usize) -> Result<Self> {
        Self::from_parts(&coefs.x, &coefs.x0, labels, classes)
    }

    pub fn from_parts(
        x: &DMatrix<f64>,
        x0: &DMatrix<f64>,
        labels: &[usize],
        classes: usize,
    ) -> Result<Self> {
        if labels.len() != x.ncols() || x0.ncols() != x.ncols() {
            return Err(Error::Dimension(format!(
                "{} labels for {} coefficient columns",
                labels.len(),
                x.ncols()
            )));
        }
        let mut sums = vec![DVector::zeros(x.nrows()); classes];
        let mut counts = vec![0usize; classes];
        for (j, &l) in labels.iter().enumerate() {
            if l == 0 || l > classes {
                return Err(Error::Domain(format!("label {l} outside 1..{classes}")));
            }
            sums[l - 1] += x.column(j);
            counts[l - 1] += 1;
        }
        if let Some(c) = counts.iter().position(|&n| n == 0) {
            return Err(Error::Domain(format!("class {} has no samples", c + 1)));
        }
        let class_means = sums
            .into_iter()
            .zip(&counts)
            .map(|(s, &n)| s / n as f64)
            .collect();
        Ok(Self {
            m: linalg::column_mean(x),
            class_means,
            m0: linalg::column_mean(x0),
        })
    }

    /// Builds stats from persisted class means; `m` is their average
    /// (valid for equal class sizes).
    pub fn from_class_means(class_means: Vec<DVector<f64>>, m0: DVector<f64>) -> Self {
        let k = class_means.first().map_or(0, |v| v.len());
        let mut m = DVector::zeros(k);
        for mc in &class_means {
            m += mc;
        }
        if !class_means.is_empty() {
            m /= class_means.len() as f64;
        }
        Self { m, class_means, m0 }
    }

    pub fn classes(&self) -> usize {
        self.class_means.len()
    }

    /// `M` with `n` columns.
    pub fn m_tiled(&self, n: usize) -> DMatrix<f64> {
        linalg::tile(&self.m, n)
    }

    /// `M_c` with `n` columns (`c` is 0-based).
    pub fn class_tiled(&self, c: usize, n: usize) -> DMatrix<f64> {
        linalg::tile(&self.class_means[c], n)
    }

    /// `M^0` with `n` columns.
    pub fn m0_tiled(&self, n: usize) -> DMatrix<f64> {
        linalg::tile(&self.m0, n)
    }

    /// `[M_1 ... M_C]` for contiguous classes of `per_class` columns each.
    pub fn class_means_tiled(&self, per_class: usize) -> DMatrix<f64> {
        let k = self.m.len();
        let mut out = DMatrix::zeros(k, per_class * self.classes());
        for (c, mc) in self.class_means.iter().enumerate() {
            for j in 0..per_class {
                out.set_column(c * per_class + j, mc);
            }
        }
        out
    }
}
