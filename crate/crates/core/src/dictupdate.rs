//! Class-dictionary updates by column-wise block coordinate descent and the
//! shared-dictionary update by ADMM with singular value thresholding.

use nalgebra::DMatrix;

use crate::datamodel::{CoefBundle, DictionaryBundle};
use crate::error::{ensure_shape, Error, Result};
use crate::linalg;
use crate::par::{self, ExecMode};
use crate::prox;

/// Atoms whose Gram diagonal falls below this are left untouched.
pub const DEAD_ATOM_THRESHOLD: f64 = 1e-10;

/// Quadratic `tr(DᵀD A) - 2 tr(DᵀB)` in one class dictionary.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadDictProblem {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
}

impl QuadDictProblem {
    pub fn objective(&self, d: &DMatrix<f64>) -> f64 {
        let dtd = d.transpose() * d;
        dtd.component_mul(&self.a).sum() - 2.0 * d.component_mul(&self.b).sum()
    }

    /// Gradient of the summed fidelity in this dictionary: `2(D A - B)`.
    pub fn gradient(&self, d: &DMatrix<f64>) -> DMatrix<f64> {
        (d * &self.a - &self.b) * 2.0
    }
}

/// Collects the fidelity terms that contain `D_c` (0-based `c`).
///
/// `shifted` is `Y - D_0 X^0`. The terms are `||Ȳ' - D_c X^c||²` over all
/// columns with `Ȳ' = shifted - Σ_{i≠c} D_i X^i`, `||Ȳ_c - D_c X_c^c||²` over
/// class-`c` columns, and `||D_c X_{c'}^c||²` for every other class `c'`.
/// The last two families together cover every column block of `X^c`, so
/// `A = 2 X^c (X^c)ᵀ`.
pub fn assemble_class_problem(
    c: usize,
    shifted: &DMatrix<f64>,
    dicts: &DictionaryBundle,
    coefs: &CoefBundle,
) -> Result<QuadDictProblem> {
    if c >= dicts.classes() {
        return Err(Error::Dimension(format!("class index {c} out of range")));
    }
    ensure_shape("shifted data", shifted.shape(), (dicts.dim(), coefs.x.ncols()))?;
    ensure_shape("X", coefs.x.shape(), (dicts.total_class_atoms(), shifted.ncols()))?;
    let kc = dicts.atoms_per_class();
    let nc = coefs.per_class();
    let xc_rows = coefs.row_block(c);

    let mut others = shifted.clone();
    for (i, di) in dicts.class_dicts.iter().enumerate() {
        if i != c {
            others -= di * coefs.x.rows(i * kc, kc);
        }
    }
    let a = (xc_rows * xc_rows.transpose()) * 2.0;
    let own = coefs.block(c, c);
    let b = &others * xc_rows.transpose() + shifted.columns(c * nc, nc) * own.transpose();
    Ok(QuadDictProblem { a, b })
}

#[derive(Debug, Clone)]
pub struct OdlOutcome {
    pub dict: DMatrix<f64>,
    pub dead_atoms: usize,
    /// Quadratic objective before the first sweep and after each sweep.
    pub objective_trace: Vec<f64>,
}

/// Block coordinate descent over columns with projection onto the unit ball.
pub fn odl_update(problem: &QuadDictProblem, d_init: &DMatrix<f64>, sweeps: usize) -> Result<OdlOutcome> {
    let k = d_init.ncols();
    ensure_shape("A", problem.a.shape(), (k, k))?;
    ensure_shape("B", problem.b.shape(), d_init.shape())?;
    if !(linalg::all_finite(&problem.a) && linalg::all_finite(&problem.b) && linalg::all_finite(d_init)) {
        return Err(Error::numerical(0, "dictionary update input is not finite"));
    }
    let mut d = d_init.clone();
    let dead_atoms = (0..k)
        .filter(|&j| problem.a[(j, j)] <= DEAD_ATOM_THRESHOLD)
        .count();
    let mut trace = vec![problem.objective(&d)];
    for sweep in 1..=sweeps {
        for j in 0..k {
            let ajj = problem.a[(j, j)];
            if ajj <= DEAD_ATOM_THRESHOLD {
                continue;
            }
            let u = (problem.b.column(j) - &d * problem.a.column(j)) / ajj + d.column(j);
            let norm = u.norm();
            d.set_column(j, &(u / norm.max(1.0)));
        }
        let obj = problem.objective(&d);
        if !obj.is_finite() {
            return Err(Error::numerical(sweep, "dictionary update diverged"));
        }
        trace.push(obj);
    }
    Ok(OdlOutcome {
        dict: d,
        dead_atoms,
        objective_trace: trace,
    })
}

/// Order in which class dictionaries are refreshed within a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DictSweepMode {
    /// Each class sees the dictionaries already updated earlier in the sweep.
    #[default]
    Sequential,
    /// All classes are solved against the sweep-start snapshot, then written back.
    Jacobi,
}

/// Updates every class dictionary in place. Returns the number of dead atoms.
pub fn update_class_dicts(
    shifted: &DMatrix<f64>,
    dicts: &mut DictionaryBundle,
    coefs: &CoefBundle,
    sweeps: usize,
    mode: DictSweepMode,
    exec: ExecMode,
) -> Result<usize> {
    let classes = dicts.classes();
    let mut dead = 0;
    match mode {
        DictSweepMode::Sequential => {
            for c in 0..classes {
                let problem = assemble_class_problem(c, shifted, dicts, coefs)?;
                let out = odl_update(&problem, &dicts.class_dicts[c], sweeps)?;
                dead += out.dead_atoms;
                dicts.class_dicts[c] = out.dict;
            }
        }
        DictSweepMode::Jacobi => {
            let snapshot: &DictionaryBundle = dicts;
            let results = par::map_indexed(exec, classes, |c| {
                let problem = assemble_class_problem(c, shifted, snapshot, coefs)?;
                odl_update(&problem, &snapshot.class_dicts[c], sweeps)
            });
            for (c, out) in results.into_iter().enumerate() {
                let out = out?;
                dead += out.dead_atoms;
                dicts.class_dicts[c] = out.dict;
            }
        }
    }
    Ok(dead)
}

#[derive(Debug, Clone)]
pub struct SharedUpdate {
    pub dict: DMatrix<f64>,
    /// Final ADMM primal residual `||D_0 - Z||_F`.
    pub residual: f64,
    /// False when the capped ADMM result was worse than the input and the
    /// input was kept.
    pub accepted: bool,
}

/// Shared-dictionary step: ADMM on `||V - D_0X^0||² + eta||D_0||_*` with
/// `V = (Ȳ + Ỹ)/2`, warm-started at `current`, followed by capping column
/// norms at one. The input is returned unchanged if the capped result does
/// not improve the subproblem objective.
pub fn update_shared_dict(
    ybar: &DMatrix<f64>,
    ytilde: &DMatrix<f64>,
    x0: &DMatrix<f64>,
    current: &DMatrix<f64>,
    eta: f64,
    rho: f64,
    iters: usize,
) -> Result<SharedUpdate> {
    ensure_shape("Ỹ", ytilde.shape(), ybar.shape())?;
    ensure_shape("D0", current.shape(), (ybar.nrows(), x0.nrows()))?;
    if x0.nrows() == 0 {
        return Ok(SharedUpdate {
            dict: current.clone(),
            residual: 0.0,
            accepted: true,
        });
    }
    let v = (ybar + ytilde) * 0.5;
    let out = prox::admm_nuclear_from(&v, x0, eta, rho, iters, Some(current))?;
    let mut dict = out.solution;
    linalg::cap_column_norms(&mut dict);
    let residual = out.primal_residuals.last().copied().unwrap_or(0.0);
    let before = prox::nuclear_ls_objective(&v, x0, current, eta)?;
    let after = prox::nuclear_ls_objective(&v, x0, &dict, eta)?;
    if after <= before {
        Ok(SharedUpdate {
            dict,
            residual,
            accepted: true,
        })
    } else {
        Ok(SharedUpdate {
            dict: current.clone(),
            residual,
            accepted: false,
        })
    }
}

/// Gradient of `||V - D_0 X^0||²` in `D_0`: `2 (D_0 X^0 - V) X^0ᵀ`.
pub fn grad_shared_fit(v: &DMatrix<f64>, x0: &DMatrix<f64>, d0: &DMatrix<f64>) -> DMatrix<f64> {
    (d0 * x0 - v) * x0.transpose() * 2.0
}
