//! Objective evaluation and the closed-form gradients of its smooth parts.
//!
//! The fidelity term over all classes equals `||Ŷ - D̂ X||_F^2` for the
//! stacked matrices
//!
//! ```text
//! Ŷ = [Ȳ_1 Ȳ_2 .. Ȳ_C]      D̂ = [D_1 D_2 .. D_C]
//!     [Ȳ_1  0  ..  0 ]          [D_1  0  ..  0 ]
//!     [ 0  Ȳ_2 ..  0 ]          [ 0  D_2 ..  0 ]
//!     [       ..      ]          [       ..      ]
//! ```
//!
//! whose products `D̂ᵀD̂ = DᵀD + blockdiag(D_cᵀD_c)` and `D̂ᵀŶ` are formed
//! block by block without building the `(C+1)d`-row matrices.

use nalgebra::{DMatrix, DVector};

use crate::datamodel::{CoefBundle, Dataset, DictionaryBundle, HyperParams, MeanStats};
use crate::error::{ensure_shape, Error, Result};
use crate::linalg::{self, frob_sq};
use crate::par::{self, ExecMode};
use crate::prox::{self, SmoothObjective};

/// Power-iteration steps used for Lipschitz bounds.
pub const LIPSCHITZ_ITERS: usize = 100;

/// Whether the Fisher-term means move with `X` inside a coding solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MeanMode {
    /// Means are frozen at the start of the solve.
    Frozen,
    /// Means are functions of `X` and differentiated through.
    #[default]
    Through,
}

/// `Ȳ = Y - D X` and `Ỹ` with class blocks `Ỹ_c = Y_c - D_c X_c^c`.
pub fn residual_matrices(
    data: &Dataset,
    dicts: &DictionaryBundle,
    coefs: &CoefBundle,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    check_consistent(data, dicts, coefs)?;
    let d = dicts.concat();
    let ybar = data.y() - &d * &coefs.x;
    let mut ytilde = data.y().clone();
    for c in 0..data.classes() {
        let fit = &dicts.class_dicts[c] * coefs.block(c, c);
        let mut block = ytilde.columns_mut(c * data.per_class(), data.per_class());
        block -= fit;
    }
    Ok((ybar, ytilde))
}

/// `Y - D_0 X^0`: the data with the shared contribution removed.
pub fn shared_removed(data: &Dataset, dicts: &DictionaryBundle, coefs: &CoefBundle) -> DMatrix<f64> {
    if dicts.shared_atoms() == 0 {
        return data.y().clone();
    }
    data.y() - &dicts.shared * &coefs.x0
}

pub(crate) fn check_consistent(
    data: &Dataset,
    dicts: &DictionaryBundle,
    coefs: &CoefBundle,
) -> Result<()> {
    if dicts.dim() != data.dim() {
        return Err(Error::Dimension(format!(
            "dictionary dimension {} differs from data dimension {}",
            dicts.dim(),
            data.dim()
        )));
    }
    if dicts.classes() != data.classes() {
        return Err(Error::Dimension(format!(
            "{} class dictionaries for {} classes",
            dicts.classes(),
            data.classes()
        )));
    }
    ensure_shape("X", coefs.x.shape(), (dicts.total_class_atoms(), data.len()))?;
    ensure_shape("X0", coefs.x0.shape(), (dicts.shared_atoms(), data.len()))?;
    if coefs.per_class() != data.per_class() || coefs.atoms_per_class() != dicts.atoms_per_class() {
        return Err(Error::Dimension("coefficient block layout differs from data/dictionaries".into()));
    }
    Ok(())
}

/// Block-structured `D̂ᵀD̂` and `D̂ᵀŶ`.
#[derive(Debug, Clone)]
pub struct HatProducts {
    /// `DᵀD`.
    pub dtd: DMatrix<f64>,
    /// `D_cᵀD_c` for each class.
    pub blocks: Vec<DMatrix<f64>>,
    /// `DᵀD + blockdiag(D_cᵀD_c)`, i.e. `D̂ᵀD̂`.
    pub gram: DMatrix<f64>,
    /// `D̂ᵀŶ`: `DᵀȲ` plus `D_cᵀȲ_c` in row block `c`, column block `c`.
    pub dt_yhat: DMatrix<f64>,
    atoms_per_class: usize,
    per_class: usize,
}

impl HatProducts {
    /// `ybar_shifted` is `Y - D_0 X^0` with classes in contiguous blocks of `per_class`.
    pub fn build(
        dicts: &DictionaryBundle,
        ybar_shifted: &DMatrix<f64>,
        per_class: usize,
        mode: ExecMode,
    ) -> Result<Self> {
        let c_count = dicts.classes();
        let kc = dicts.atoms_per_class();
        if ybar_shifted.nrows() != dicts.dim() || ybar_shifted.ncols() != c_count * per_class {
            return Err(Error::Dimension(format!(
                "shifted data is {}x{}, expected {}x{}",
                ybar_shifted.nrows(),
                ybar_shifted.ncols(),
                dicts.dim(),
                c_count * per_class
            )));
        }
        let d = dicts.concat();
        let dt = d.transpose();
        let dtd = &dt * &d;
        let blocks: Vec<DMatrix<f64>> = dicts
            .class_dicts
            .iter()
            .map(|dc| dc.transpose() * dc)
            .collect();
        let mut gram = dtd.clone();
        for (c, blk) in blocks.iter().enumerate() {
            let mut view = gram.view_mut((c * kc, c * kc), (kc, kc));
            view += blk;
        }
        let mut dt_yhat = par::matmul(mode, &dt, ybar_shifted);
        for (c, dc) in dicts.class_dicts.iter().enumerate() {
            let slab = dc.transpose() * ybar_shifted.columns(c * per_class, per_class);
            let mut view = dt_yhat.view_mut((c * kc, c * per_class), (kc, per_class));
            view += slab;
        }
        Ok(Self {
            dtd,
            blocks,
            gram,
            dt_yhat,
            atoms_per_class: kc,
            per_class,
        })
    }

    pub fn atoms_per_class(&self) -> usize {
        self.atoms_per_class
    }

    pub fn per_class(&self) -> usize {
        self.per_class
    }

    /// `(D̂ᵀD̂) X`.
    pub fn apply(&self, x: &DMatrix<f64>, mode: ExecMode) -> DMatrix<f64> {
        par::matmul(mode, &self.gram, x)
    }
}

/// Gradient of `½ Σ_c r̄(Y_c, D̄, X̄_c)` in `X`: `D̂ᵀD̂ X - D̂ᵀŶ`.
pub fn grad_fidelity_x(hat: &HatProducts, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    ensure_shape("X", x.shape(), hat.dt_yhat.shape())?;
    Ok(hat.apply(x, ExecMode::Sequential) - &hat.dt_yhat)
}

fn check_equal_classes(labels: &[usize], classes: usize) -> Result<usize> {
    let mut counts = vec![0usize; classes];
    for &l in labels {
        if l == 0 || l > classes {
            return Err(Error::Domain(format!("label {l} outside 1..{classes}")));
        }
        counts[l - 1] += 1;
    }
    let n = counts.first().copied().unwrap_or(0);
    if n == 0 || counts.iter().any(|&c| c != n) {
        return Err(Error::Domain(format!(
            "Fisher gradient requires equal class sizes, got {counts:?}"
        )));
    }
    Ok(n)
}

fn label_classes(labels: &[usize]) -> usize {
    labels.iter().copied().max().unwrap_or(0)
}

/// `4X + 2M - 4[M_1 .. M_C]`, the gradient of the Fisher term `f(X)`.
pub fn grad_fisher_x(x: &DMatrix<f64>, labels: &[usize]) -> Result<DMatrix<f64>> {
    let classes = label_classes(labels);
    check_equal_classes(labels, classes)?;
    let stats = MeanStats::from_parts(x, &DMatrix::zeros(0, x.ncols()), labels, classes)?;
    Ok(fisher_grad_with(x, &stats.m, &stats.class_means, labels))
}

fn fisher_grad_with(
    x: &DMatrix<f64>,
    m: &DVector<f64>,
    class_means: &[DVector<f64>],
    labels: &[usize],
) -> DMatrix<f64> {
    let mut g = x * 4.0;
    for (j, mut col) in g.column_iter_mut().enumerate() {
        col.axpy(2.0, m, 1.0);
        col.axpy(-4.0, &class_means[labels[j] - 1], 1.0);
    }
    g
}

/// `f(X) = Σ_c (||X_c - M_c||² - ||M_c - M||²) + ||X||²`.
pub fn fisher_value(x: &DMatrix<f64>, labels: &[usize]) -> Result<f64> {
    let classes = label_classes(labels);
    let stats = MeanStats::from_parts(x, &DMatrix::zeros(0, x.ncols()), labels, classes)?;
    Ok(fisher_value_with(x, &stats, labels))
}

fn fisher_value_with(x: &DMatrix<f64>, stats: &MeanStats, labels: &[usize]) -> f64 {
    let mut within = 0.0;
    let mut counts = vec![0usize; stats.classes()];
    for (j, col) in x.column_iter().enumerate() {
        let c = labels[j] - 1;
        within += (col - &stats.class_means[c]).norm_squared();
        counts[c] += 1;
    }
    let between: f64 = stats
        .class_means
        .iter()
        .zip(&counts)
        .map(|(mc, &n)| n as f64 * (mc - &stats.m).norm_squared())
        .sum();
    within - between + frob_sq(x)
}

/// `2 D_0ᵀD_0 X^0 - D_0ᵀ(Ȳ + Ỹ) + lambda2 (X^0 - M^0)`.
pub fn grad_x0(
    d0: &DMatrix<f64>,
    ysum: &DMatrix<f64>,
    x0: &DMatrix<f64>,
    m0: &DMatrix<f64>,
    lambda2: f64,
) -> Result<DMatrix<f64>> {
    ensure_shape("X0", x0.shape(), (d0.ncols(), ysum.ncols()))?;
    ensure_shape("M0", m0.shape(), x0.shape())?;
    if ysum.nrows() != d0.nrows() {
        return Err(Error::Dimension("Ȳ + Ỹ and D0 row counts differ".into()));
    }
    let d0t = d0.transpose();
    Ok((&d0t * d0 * x0) * 2.0 - d0t * ysum + (x0 - m0) * lambda2)
}

/// Gradient of `½||y - D̄x̄||² + (lambda2/2)||x^0 - m^0||²`:
/// `D̄ᵀD̄x̄ - D̄ᵀy + lambda2 [0; x^0 - m^0]`.
pub fn grad_test_x(
    dicts: &DictionaryBundle,
    y: &DVector<f64>,
    xbar: &DVector<f64>,
    m0: &DVector<f64>,
    lambda2: f64,
) -> Result<DVector<f64>> {
    let k = dicts.total_class_atoms();
    let k0 = dicts.shared_atoms();
    if y.len() != dicts.dim() || xbar.len() != k + k0 || m0.len() != k0 {
        return Err(Error::Dimension(format!(
            "test gradient: y {} / x̄ {} / m0 {} inconsistent with d={} K={k} k0={k0}",
            y.len(),
            xbar.len(),
            m0.len(),
            dicts.dim()
        )));
    }
    let dbar = dicts.total();
    let resid = &dbar * xbar - y;
    let mut g = dbar.transpose() * resid;
    let mut tail = g.rows_mut(k, k0);
    tail += (xbar.rows(k, k0) - m0) * lambda2;
    Ok(g)
}

/// The four weighted terms of the training objective.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveTerms {
    /// `½ Σ_c r̄(Y_c, D̄, X̄_c)`.
    pub fidelity: f64,
    /// `lambda1 ||X̄||_1`.
    pub l1: f64,
    /// `(lambda2/2) f̄(X̄)`.
    pub fisher: f64,
    /// `eta ||D_0||_*`.
    pub nuclear: f64,
}

impl ObjectiveTerms {
    pub fn total(&self) -> f64 {
        self.fidelity + self.l1 + self.fisher + self.nuclear
    }
}

/// Full training objective, each term computed from its definition.
pub fn objective_lrsdl(
    data: &Dataset,
    dicts: &DictionaryBundle,
    coefs: &CoefBundle,
    hyper: &HyperParams,
) -> Result<ObjectiveTerms> {
    check_consistent(data, dicts, coefs)?;
    let d = dicts.concat();
    let mut fid = 0.0;
    for c in 0..data.classes() {
        let yc = data.class_block(c);
        let shared = &dicts.shared * coefs.shared_cols(c);
        fid += frob_sq(&(yc - &d * coefs.class_cols(c) - &shared));
        fid += frob_sq(&(yc - &dicts.class_dicts[c] * coefs.block(c, c) - &shared));
        for i in (0..data.classes()).filter(|&i| i != c) {
            fid += frob_sq(&(&dicts.class_dicts[i] * coefs.block(i, c)));
        }
    }
    let fidelity = 0.5 * fid;
    let l1 = hyper.lambda1 * (linalg::l1_norm(&coefs.x) + linalg::l1_norm(&coefs.x0));
    let stats = MeanStats::compute(coefs, data.labels(), data.classes())?;
    let shared_scatter = frob_sq(&(&coefs.x0 - stats.m0_tiled(data.len())));
    let fisher = 0.5 * hyper.lambda2 * (fisher_value_with(&coefs.x, &stats, data.labels()) + shared_scatter);
    let nuclear = hyper.eta * linalg::nuclear_norm(&dicts.shared)?;

    for (name, v) in [("fidelity", fidelity), ("l1", l1), ("fisher", fisher), ("nuclear", nuclear)] {
        if !v.is_finite() {
            return Err(Error::numerical(0, format!("{name} term is not finite")));
        }
    }
    Ok(ObjectiveTerms {
        fidelity,
        l1,
        fisher,
        nuclear,
    })
}

/// `||Ŷ - D̂X||²` for the columns in `cols`, where `ysh` and `x` hold only
/// those columns and `class_of(j)` gives the 0-based class of local column `j`.
fn stacked_fidelity(
    dicts: &DictionaryBundle,
    ysh: &DMatrix<f64>,
    x: &DMatrix<f64>,
    class_of: impl Fn(usize) -> usize,
) -> f64 {
    let kc = dicts.atoms_per_class();
    let parts: Vec<DMatrix<f64>> = dicts
        .class_dicts
        .iter()
        .enumerate()
        .map(|(i, di)| di * x.rows(i * kc, kc))
        .collect();
    let mut total = 0.0;
    for j in 0..x.ncols() {
        let c = class_of(j);
        let y = ysh.column(j);
        let mut full = y.clone_owned();
        for (i, p) in parts.iter().enumerate() {
            full -= p.column(j);
            if i != c {
                total += p.column(j).norm_squared();
            }
        }
        total += full.norm_squared();
        total += (y - parts[c].column(j)).norm_squared();
    }
    total
}

/// Smooth part of the joint `X` coding problem:
/// `½||Ŷ - D̂X||² + (lambda2/2) f(X)` with `X^0` held fixed.
pub struct JointXObjective<'a> {
    pub hat: &'a HatProducts,
    dicts: &'a DictionaryBundle,
    ybar_shifted: &'a DMatrix<f64>,
    labels: &'a [usize],
    lambda2: f64,
    mode: MeanMode,
    exec: ExecMode,
    /// Frozen `(M, [M_1..M_C], constant)` for [`MeanMode::Frozen`].
    frozen: Option<(DVector<f64>, Vec<DVector<f64>>, f64)>,
    lipschitz: f64,
}

impl<'a> JointXObjective<'a> {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        hat: &'a HatProducts,
        dicts: &'a DictionaryBundle,
        ybar_shifted: &'a DMatrix<f64>,
        labels: &'a [usize],
        lambda2: f64,
        mode: MeanMode,
        exec: ExecMode,
        start: &DMatrix<f64>,
        seed: u64,
    ) -> Result<Self> {
        let classes = dicts.classes();
        check_equal_classes(labels, classes)?;
        let frozen = match mode {
            MeanMode::Through => None,
            MeanMode::Frozen => {
                let stats =
                    MeanStats::from_parts(start, &DMatrix::zeros(0, start.ncols()), labels, classes)?;
                let f_start = fisher_value_with(start, &stats, labels);
                let lin = frozen_linear(start, &stats.m, &stats.class_means, labels);
                let constant = f_start - 2.0 * frob_sq(start) - lin;
                Some((stats.m, stats.class_means, constant))
            }
        };
        // Fisher Hessian is bounded by 4I.
        let lipschitz = prox::gram_lipschitz(&hat.gram, LIPSCHITZ_ITERS, seed) + 2.0 * lambda2;
        Ok(Self {
            hat,
            dicts,
            ybar_shifted,
            labels,
            lambda2,
            mode,
            exec,
            frozen,
            lipschitz,
        })
    }

    pub fn mode(&self) -> MeanMode {
        self.mode
    }
}

fn frozen_linear(
    x: &DMatrix<f64>,
    m: &DVector<f64>,
    class_means: &[DVector<f64>],
    labels: &[usize],
) -> f64 {
    x.column_iter()
        .enumerate()
        .map(|(j, col)| col.dot(&(m * 2.0 - &class_means[labels[j] - 1] * 4.0)))
        .sum()
}

impl SmoothObjective for JointXObjective<'_> {
    fn gradient(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let fisher = match &self.frozen {
            Some((m, mc, _)) => fisher_grad_with(x, m, mc, self.labels),
            None => {
                let stats = MeanStats::from_parts(
                    x,
                    &DMatrix::zeros(0, x.ncols()),
                    self.labels,
                    self.dicts.classes(),
                )
                .expect("labels validated at construction");
                fisher_grad_with(x, &stats.m, &stats.class_means, self.labels)
            }
        };
        self.hat.apply(x, self.exec) - &self.hat.dt_yhat + fisher * (0.5 * self.lambda2)
    }

    fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    fn value(&self, x: &DMatrix<f64>) -> Option<f64> {
        let nc = self.hat.per_class();
        let fid = stacked_fidelity(self.dicts, self.ybar_shifted, x, |j| j / nc);
        let fisher = match &self.frozen {
            Some((m, mc, constant)) => {
                2.0 * frob_sq(x) + frozen_linear(x, m, mc, self.labels) + constant
            }
            None => fisher_value(x, self.labels).ok()?,
        };
        Some(0.5 * fid + 0.5 * self.lambda2 * fisher)
    }
}

/// Smooth part of the per-class coding problem for `X_c`, all other columns
/// of `X` fixed. Used by the class-by-class baseline coder.
pub struct ClassXObjective<'a> {
    hat: &'a HatProducts,
    dicts: &'a DictionaryBundle,
    class: usize,
    ysh_c: DMatrix<f64>,
    rhs_c: DMatrix<f64>,
    x_full: DMatrix<f64>,
    labels: &'a [usize],
    lambda2: f64,
    lipschitz: f64,
}

impl<'a> ClassXObjective<'a> {
    /// `lipschitz` is typically shared across classes: it is the bound of the
    /// joint problem, which dominates every column block.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        hat: &'a HatProducts,
        dicts: &'a DictionaryBundle,
        ybar_shifted: &DMatrix<f64>,
        labels: &'a [usize],
        x_full: &DMatrix<f64>,
        class: usize,
        lambda2: f64,
        lipschitz: f64,
    ) -> Self {
        let nc = hat.per_class();
        Self {
            hat,
            dicts,
            class,
            ysh_c: ybar_shifted.columns(class * nc, nc).into_owned(),
            rhs_c: hat.dt_yhat.columns(class * nc, nc).into_owned(),
            x_full: x_full.clone(),
            labels,
            lambda2,
            lipschitz,
        }
    }

    fn with_block(&self, xc: &DMatrix<f64>) -> DMatrix<f64> {
        let nc = self.hat.per_class();
        let mut full = self.x_full.clone();
        full.columns_mut(self.class * nc, nc).copy_from(xc);
        full
    }
}

impl SmoothObjective for ClassXObjective<'_> {
    fn gradient(&self, xc: &DMatrix<f64>) -> DMatrix<f64> {
        let full = self.with_block(xc);
        let stats = MeanStats::from_parts(
            &full,
            &DMatrix::zeros(0, full.ncols()),
            self.labels,
            self.dicts.classes(),
        )
        .expect("labels validated by caller");
        let mut fisher = xc * 4.0;
        for mut col in fisher.column_iter_mut() {
            col.axpy(2.0, &stats.m, 1.0);
            col.axpy(-4.0, &stats.class_means[self.class], 1.0);
        }
        &self.hat.gram * xc - &self.rhs_c + fisher * (0.5 * self.lambda2)
    }

    fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    fn value(&self, xc: &DMatrix<f64>) -> Option<f64> {
        let fid = stacked_fidelity(self.dicts, &self.ysh_c, xc, |_| self.class);
        let fisher = fisher_value(&self.with_block(xc), self.labels).ok()?;
        Some(0.5 * fid + 0.5 * self.lambda2 * fisher)
    }
}

/// Smooth part of the `X^0` problem:
/// `||(Ȳ+Ỹ)/2 - D_0X^0||² + (lambda2/2)||X^0 - M^0||²` with `M^0` frozen.
pub struct SharedCodeObjective<'a> {
    d0: &'a DMatrix<f64>,
    d0t_ysum: DMatrix<f64>,
    d0td0: DMatrix<f64>,
    target: DMatrix<f64>,
    m0: DMatrix<f64>,
    lambda2: f64,
    lipschitz: f64,
}

impl<'a> SharedCodeObjective<'a> {
    pub fn new(
        d0: &'a DMatrix<f64>,
        ysum: &DMatrix<f64>,
        m0: DMatrix<f64>,
        lambda2: f64,
        seed: u64,
    ) -> Self {
        let d0t = d0.transpose();
        let d0td0 = &d0t * d0;
        let lipschitz = 2.0 * prox::gram_lipschitz(&d0td0, LIPSCHITZ_ITERS, seed) + lambda2;
        Self {
            d0,
            d0t_ysum: d0t * ysum,
            d0td0,
            target: ysum * 0.5,
            m0,
            lambda2,
            lipschitz: lipschitz.max(1e-12),
        }
    }
}

impl SmoothObjective for SharedCodeObjective<'_> {
    fn gradient(&self, x0: &DMatrix<f64>) -> DMatrix<f64> {
        (&self.d0td0 * x0) * 2.0 - &self.d0t_ysum + (x0 - &self.m0) * self.lambda2
    }

    fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    fn value(&self, x0: &DMatrix<f64>) -> Option<f64> {
        Some(
            frob_sq(&(&self.target - self.d0 * x0))
                + 0.5 * self.lambda2 * frob_sq(&(x0 - &self.m0)),
        )
    }
}

/// Smooth part of coding one test sample:
/// `½||y - D̄x̄||² + (lambda2/2)||x^0 - m^0||²`.
pub struct TestCodeObjective<'a> {
    gram: &'a DMatrix<f64>,
    dty: DVector<f64>,
    y_sq: f64,
    m0: &'a DVector<f64>,
    k: usize,
    lambda2: f64,
    lipschitz: f64,
}

impl<'a> TestCodeObjective<'a> {
    /// `gram = D̄ᵀD̄`, `dbar_t = D̄ᵀ`, `gram_lipschitz` bounds `λ_max(D̄ᵀD̄)`.
    pub fn new(
        gram: &'a DMatrix<f64>,
        dbar_t: &DMatrix<f64>,
        y: &DVector<f64>,
        m0: &'a DVector<f64>,
        lambda2: f64,
        gram_lipschitz: f64,
    ) -> Self {
        Self {
            gram,
            dty: dbar_t * y,
            y_sq: y.norm_squared(),
            m0,
            k: gram.nrows() - m0.len(),
            lambda2,
            lipschitz: gram_lipschitz + lambda2,
        }
    }

    fn shared_dev(&self, x: &DMatrix<f64>) -> DVector<f64> {
        x.column(0).rows(self.k, self.m0.len()) - self.m0
    }
}

impl SmoothObjective for TestCodeObjective<'_> {
    fn gradient(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let mut g = self.gram * x;
        let mut col = g.column_mut(0);
        col -= &self.dty;
        let dev = self.shared_dev(x) * self.lambda2;
        let mut tail = col.rows_mut(self.k, self.m0.len());
        tail += dev;
        g
    }

    fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    fn value(&self, x: &DMatrix<f64>) -> Option<f64> {
        let xv = x.column(0);
        let quad = xv.dot(&(self.gram * xv));
        let fit = 0.5 * (quad - 2.0 * xv.dot(&self.dty) + self.y_sq);
        Some(fit.max(0.0) + 0.5 * self.lambda2 * self.shared_dev(x).norm_squared())
    }
}
