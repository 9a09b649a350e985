//! Proximal building blocks: soft-thresholding, FISTA, singular value
//! thresholding and ADMM for nuclear-norm regularized least squares.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg;

/// Safety factor applied to power-iteration estimates.
pub const LIPSCHITZ_MARGIN: f64 = 1.01;
const LIPSCHITZ_FLOOR: f64 = 1e-12;

/// Smooth convex part `g` of a composite `g(W) + lambda * ||W||_1` problem.
pub trait SmoothObjective {
    fn gradient(&self, w: &DMatrix<f64>) -> DMatrix<f64>;

    /// Upper bound on the Lipschitz constant of the gradient.
    fn lipschitz(&self) -> f64;

    /// `g(w)`, when cheap enough to evaluate. Enables the monotone variant of
    /// FISTA.
    fn value(&self, _w: &DMatrix<f64>) -> Option<f64> {
        None
    }
}

/// A [`SmoothObjective`] assembled from closures.
pub struct FnObjective<G, V> {
    pub grad: G,
    pub lipschitz: f64,
    pub value: Option<V>,
}

impl<G> FnObjective<G, fn(&DMatrix<f64>) -> f64>
where
    G: Fn(&DMatrix<f64>) -> DMatrix<f64>,
{
    pub fn gradient_only(grad: G, lipschitz: f64) -> Self {
        Self {
            grad,
            lipschitz,
            value: None,
        }
    }
}

impl<G, V> SmoothObjective for FnObjective<G, V>
where
    G: Fn(&DMatrix<f64>) -> DMatrix<f64>,
    V: Fn(&DMatrix<f64>) -> f64,
{
    fn gradient(&self, w: &DMatrix<f64>) -> DMatrix<f64> {
        (self.grad)(w)
    }

    fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    fn value(&self, w: &DMatrix<f64>) -> Option<f64> {
        self.value.as_ref().map(|v| v(w))
    }
}

/// `sign(w) * max(|w| - tau, 0)`.
#[inline]
pub fn shrink(w: f64, tau: f64) -> f64 {
    let mag = (w.abs() - tau).max(0.0);
    if mag == 0.0 {
        0.0
    } else {
        mag.copysign(w)
    }
}

/// Elementwise soft-thresholding.
pub fn soft_threshold(w: &DMatrix<f64>, tau: f64) -> DMatrix<f64> {
    w.map(|v| shrink(v, tau))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FistaOptions {
    pub max_iter: usize,
    /// Stop when `||W_k - W_{k-1}||_F / max(1, ||W_{k-1}||_F)` drops below this.
    pub tol: f64,
    /// Number of equal-width column groups that carry their own momentum
    /// and restart independently. 1 gives plain FISTA.
    pub groups: usize,
}

impl FistaOptions {
    pub fn new(max_iter: usize, tol: f64) -> Self {
        Self {
            max_iter,
            tol,
            groups: 1,
        }
    }

    pub fn with_groups(mut self, groups: usize) -> Self {
        self.groups = groups;
        self
    }
}

impl Default for FistaOptions {
    fn default() -> Self {
        Self::new(100, 1e-6)
    }
}

#[derive(Debug, Clone)]
pub struct FistaOutcome {
    pub solution: DMatrix<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Composite objective after each iteration; empty when `g` has no value.
    pub objective_trace: Vec<f64>,
}

/// Composite objective `g(w) + lambda * ||w||_1`, if `g` can be evaluated.
pub fn composite_value<O: SmoothObjective + ?Sized>(
    obj: &O,
    lambda: f64,
    w: &DMatrix<f64>,
) -> Option<f64> {
    obj.value(w).map(|g| g + lambda * linalg::l1_norm(w))
}

/// Accelerated proximal gradient for `min g(W) + lambda * ||W||_1`.
///
/// Step size is `1/L`. When `obj` exposes its value, a proximal point that
/// would raise the composite objective is rejected and the momentum is reset,
/// so the recorded objective never increases. Momentum is also reset, per
/// column group, when it points against the proximal step.
pub fn fista<O: SmoothObjective + ?Sized>(
    obj: &O,
    lambda: f64,
    w0: &DMatrix<f64>,
    opts: FistaOptions,
) -> Result<FistaOutcome> {
    let lip = obj.lipschitz();
    if lip.is_infinite() {
        return Err(Error::numerical(0, "Lipschitz bound overflowed"));
    }
    if !(lip > 0.0) {
        return Err(Error::Parameter(format!("Lipschitz bound must be positive, got {lip}")));
    }
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(Error::Parameter(format!("l1 weight must be >= 0, got {lambda}")));
    }
    let groups = opts.groups.max(1);
    if !w0.ncols().is_multiple_of(groups) {
        return Err(Error::Parameter(format!(
            "{} columns cannot be split into {groups} groups",
            w0.ncols()
        )));
    }
    let width = w0.ncols() / groups;
    let step = 1.0 / lip;
    let thresh = lambda * step;

    let mut current = composite_value(obj, lambda, w0);
    if matches!(current, Some(v) if !v.is_finite()) {
        return Err(Error::numerical(0, "objective at the starting point is not finite"));
    }
    let mut x_prev = w0.clone();
    let mut y = w0.clone();
    let mut t = vec![1.0_f64; groups];
    let mut trace = Vec::new();
    let mut iterations = 0;
    let mut converged = false;

    for k in 1..=opts.max_iter {
        iterations = k;
        let grad = obj.gradient(&y);
        if grad.shape() != y.shape() {
            return Err(Error::Dimension(format!(
                "gradient shape {:?} differs from iterate shape {:?}",
                grad.shape(),
                y.shape()
            )));
        }
        if !linalg::all_finite(&grad) {
            return Err(Error::numerical(k, "non-finite gradient"));
        }
        let z = soft_threshold(&(&y - grad * step), thresh);
        let change = (&z - &x_prev).norm() / x_prev.norm().max(1.0);

        let accept = match current {
            Some(fx) => {
                let fz = composite_value(obj, lambda, &z).unwrap();
                if !fz.is_finite() {
                    return Err(Error::numerical(k, "non-finite objective"));
                }
                trace.push(fx.min(fz));
                if fz <= fx {
                    current = Some(fz);
                }
                fz <= fx
            }
            None => true,
        };
        if accept {
            let mut next = z.clone();
            for (g, tg) in t.iter_mut().enumerate() {
                let cols = g * width..(g + 1) * width;
                let zg = z.columns(cols.start, width);
                let xg = x_prev.columns(cols.start, width);
                let yg = y.columns(cols.start, width);
                let dz = zg - xg;
                if (yg - zg).dot(&dz) > 0.0 {
                    *tg = 1.0;
                    continue;
                }
                let t_next = 0.5 * (1.0 + (1.0 + 4.0 * *tg * *tg).sqrt());
                let mut ng = next.columns_mut(cols.start, width);
                ng += dz * ((*tg - 1.0) / t_next);
                *tg = t_next;
            }
            y = next;
            x_prev = z;
        } else {
            y = x_prev.clone();
            t.fill(1.0);
        }
        if change < opts.tol {
            converged = true;
            break;
        }
    }

    Ok(FistaOutcome {
        solution: x_prev,
        iterations,
        converged,
        objective_trace: trace,
    })
}

/// Proximal operator of `tau * ||.||_*`: shrinks the singular values by `tau`.
pub fn svt(m: &DMatrix<f64>, tau: f64) -> Result<DMatrix<f64>> {
    if m.is_empty() {
        return Ok(m.clone());
    }
    if !linalg::all_finite(m) {
        return Err(Error::numerical(0, "SVT input is not finite"));
    }
    let svd = m.clone().svd(true, true);
    let (Some(u), Some(v_t)) = (svd.u, svd.v_t) else {
        return Err(Error::numerical(0, "SVD did not produce singular vectors"));
    };
    let shrunk = svd.singular_values.map(|s| (s - tau).max(0.0));
    Ok(u * DMatrix::from_diagonal(&shrunk) * v_t)
}

#[derive(Debug, Clone)]
pub struct AdmmOutcome {
    pub solution: DMatrix<f64>,
    /// `||D_0 - Z||_F` after each sweep.
    pub primal_residuals: Vec<f64>,
}

/// `||V - D X||_F^2 + eta * ||D||_*`.
pub fn nuclear_ls_objective(
    v: &DMatrix<f64>,
    coef: &DMatrix<f64>,
    d: &DMatrix<f64>,
    eta: f64,
) -> Result<f64> {
    Ok(linalg::frob_sq(&(v - d * coef)) + eta * linalg::nuclear_norm(d)?)
}

/// ADMM for `min_D ||V - D X||_F^2 + eta * ||D||_*` with the splitting `D = Z`.
///
/// Each sweep solves the ridge-like `D` step in closed form, applies SVT to
/// get `Z`, then updates the scaled dual `U`. Returns `Z`.
pub fn admm_nuclear(
    v: &DMatrix<f64>,
    coef: &DMatrix<f64>,
    eta: f64,
    rho: f64,
    iters: usize,
) -> Result<AdmmOutcome> {
    admm_nuclear_from(v, coef, eta, rho, iters, None)
}

/// [`admm_nuclear`] with `Z` warm-started at `init`.
pub fn admm_nuclear_from(
    v: &DMatrix<f64>,
    coef: &DMatrix<f64>,
    eta: f64,
    rho: f64,
    iters: usize,
    init: Option<&DMatrix<f64>>,
) -> Result<AdmmOutcome> {
    if coef.ncols() != v.ncols() {
        return Err(Error::Dimension(format!(
            "target has {} columns, coefficients have {}",
            v.ncols(),
            coef.ncols()
        )));
    }
    if !(rho.is_finite() && rho > 0.0) {
        return Err(Error::Parameter(format!("ADMM rho must be positive, got {rho}")));
    }
    if !(eta.is_finite() && eta >= 0.0) {
        return Err(Error::Parameter(format!("eta must be >= 0, got {eta}")));
    }
    let (d, k) = (v.nrows(), coef.nrows());
    if k == 0 || d == 0 {
        return Ok(AdmmOutcome {
            solution: DMatrix::zeros(d, k),
            primal_residuals: Vec::new(),
        });
    }

    let gram = coef * coef.transpose() * 2.0 + DMatrix::identity(k, k) * rho;
    let chol = gram
        .cholesky()
        .ok_or_else(|| Error::Parameter("ADMM linear system is singular".into()))?;
    let vxt2 = v * coef.transpose() * 2.0;

    let mut z = match init {
        Some(z0) => {
            crate::error::ensure_shape("ADMM warm start", z0.shape(), (d, k))?;
            z0.clone()
        }
        None => DMatrix::zeros(d, k),
    };
    let mut u = DMatrix::zeros(d, k);
    let mut residuals = Vec::with_capacity(iters);
    for it in 1..=iters {
        let rhs = &vxt2 + (&z - &u) * rho;
        // D * G = rhs with G symmetric  <=>  G * D^T = rhs^T
        let dmat = chol.solve(&rhs.transpose()).transpose();
        z = svt(&(&dmat + &u), eta / rho)?;
        let r = &dmat - &z;
        u += &r;
        let res = r.norm();
        if !res.is_finite() || !linalg::all_finite(&z) {
            return Err(Error::numerical(it, "non-finite ADMM iterate"));
        }
        residuals.push(res);
    }
    Ok(AdmmOutcome {
        solution: z,
        primal_residuals: residuals,
    })
}

/// Estimates the largest eigenvalue of a symmetric PSD operator on
/// `shape`-sized matrices by power iteration, times [`LIPSCHITZ_MARGIN`].
pub fn power_iteration_lipschitz<F>(apply: F, shape: (usize, usize), iters: usize, seed: u64) -> f64
where
    F: Fn(&DMatrix<f64>) -> DMatrix<f64>,
{
    if shape.0 == 0 || shape.1 == 0 {
        return LIPSCHITZ_FLOOR;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v = DMatrix::from_fn(shape.0, shape.1, |_, _| rng.sample::<f64, _>(StandardNormal));
    v /= v.norm();
    let mut estimate = 0.0;
    for _ in 0..iters.max(1) {
        let av = apply(&v);
        estimate = av.norm();
        if !(estimate.is_finite() && estimate > 0.0) {
            return LIPSCHITZ_FLOOR;
        }
        v = av / estimate;
    }
    (estimate * LIPSCHITZ_MARGIN).max(LIPSCHITZ_FLOOR)
}

/// Largest eigenvalue bound of a symmetric PSD matrix (vector operator).
pub fn gram_lipschitz(gram: &DMatrix<f64>, iters: usize, seed: u64) -> f64 {
    power_iteration_lipschitz(|v| gram * v, (gram.nrows(), 1), iters, seed)
}

/// `max_i |v_i|`.
pub fn inf_norm(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}
