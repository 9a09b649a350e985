//! Oracle comparisons that return the measured discrepancy, so both the
//! focused test files and the acceptance run can use them.

use lrsdl::dictupdate::{self, assemble_class_problem, grad_shared_fit};
use lrsdl::gradients::{self, HatProducts};
use lrsdl::learner::{self, TrainConfig};
use lrsdl::prox::{self, FistaOptions, FnObjective};
use lrsdl::{CoefBundle, Dataset, DictionaryBundle, ExecMode, HyperParams};
use nalgebra::{DMatrix, DVector};

use super::*;

const H: f64 = 1e-6;

fn fidelity(data: &Dataset, dicts: &DictionaryBundle, coefs: &CoefBundle) -> f64 {
    let hyper = HyperParams {
        lambda1: 0.0,
        lambda2: 0.0,
        eta: 0.0,
        ..HyperParams::default()
    };
    gradients::objective_lrsdl(data, dicts, coefs, &hyper).unwrap().fidelity
}

pub fn fidelity_x_error(seed: u64) -> f64 {
    let inst = random_instance(seed, 2, 6, 3, 2, 2);
    let shifted = gradients::shared_removed(&inst.data, &inst.dicts, &inst.coefs);
    let hat = HatProducts::build(&inst.dicts, &shifted, 3, ExecMode::Sequential).unwrap();
    let g = gradients::grad_fidelity_x(&hat, &inst.coefs.x).unwrap();
    let fd = fd_gradient(
        |x| {
            let mut c = inst.coefs.clone();
            c.x = x.clone();
            fidelity(&inst.data, &inst.dicts, &c)
        },
        &inst.coefs.x,
        H,
    );
    rel_err(&g, &fd)
}

pub fn fisher_error(seed: u64) -> f64 {
    let mut r = rng(100 + seed);
    let x = gaussian(&mut r, 4, 6);
    let labels = balanced_labels(3, 2);
    let g = gradients::grad_fisher_x(&x, &labels).unwrap();
    rel_err(&g, &fd_gradient(|x| fisher_by_scatter(x, &labels), &x, H))
}

pub fn shared_code_error(seed: u64) -> f64 {
    let inst = random_instance(200 + seed, 2, 5, 3, 2, 3);
    let lambda2 = 0.3;
    let (ybar, ytilde) = gradients::residual_matrices(&inst.data, &inst.dicts, &inst.coefs).unwrap();
    let mut r = rng(seed);
    let m0 = linalg_tile(&gaussian(&mut r, 3, 1).column(0).into_owned(), 6);
    let g = gradients::grad_x0(&inst.dicts.shared, &(&ybar + &ytilde), &inst.coefs.x0, &m0, lambda2).unwrap();
    let fd = fd_gradient(
        |x0| {
            let mut c = inst.coefs.clone();
            c.x0 = x0.clone();
            fidelity(&inst.data, &inst.dicts, &c) + 0.5 * lambda2 * (x0 - &m0).norm_squared()
        },
        &inst.coefs.x0,
        H,
    );
    rel_err(&g, &fd)
}

fn linalg_tile(v: &DVector<f64>, n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(v.len(), n, |i, _| v[i])
}

pub fn test_sample_error(seed: u64) -> f64 {
    let inst = random_instance(300 + seed, 3, 7, 2, 2, 2);
    let mut r = rng(seed);
    let y = gaussian(&mut r, 7, 1).column(0).into_owned();
    let xbar = gaussian(&mut r, 8, 1).column(0).into_owned();
    let m0 = DVector::from_vec(vec![0.3, -0.2]);
    let lambda2 = 0.7;
    let dbar = inst.dicts.total();
    let g = gradients::grad_test_x(&inst.dicts, &y, &xbar, &m0, lambda2).unwrap();
    let fd = fd_gradient(
        |x| {
            let xv = x.column(0);
            0.5 * (&y - &dbar * xv).norm_squared() + 0.5 * lambda2 * (xv.rows(6, 2) - &m0).norm_squared()
        },
        &DMatrix::from_column_slice(8, 1, xbar.as_slice()),
        H,
    );
    rel_err(&DMatrix::from_column_slice(8, 1, g.as_slice()), &fd)
}

/// Worst class over the three class dictionaries of one instance.
pub fn class_dict_error(seed: u64) -> f64 {
    let inst = random_instance(400 + seed, 3, 5, 3, 2, 2);
    let shifted = gradients::shared_removed(&inst.data, &inst.dicts, &inst.coefs);
    (0..3)
        .map(|c| {
            let problem = assemble_class_problem(c, &shifted, &inst.dicts, &inst.coefs).unwrap();
            let g = problem.gradient(&inst.dicts.class_dicts[c]);
            let fd = fd_gradient(
                |dc| {
                    let mut dicts = inst.dicts.clone();
                    dicts.class_dicts[c] = dc.clone();
                    2.0 * fidelity(&inst.data, &dicts, &inst.coefs)
                },
                &inst.dicts.class_dicts[c],
                H,
            );
            rel_err(&g, &fd)
        })
        .fold(0.0, f64::max)
}

pub fn shared_dict_error(seed: u64) -> f64 {
    let inst = random_instance(500 + seed, 2, 6, 3, 2, 3);
    let (ybar, ytilde) = gradients::residual_matrices(&inst.data, &inst.dicts, &inst.coefs).unwrap();
    let v = (&ybar + &ytilde) * 0.5;
    let g = grad_shared_fit(&v, &inst.coefs.x0, &inst.dicts.shared);
    let fd = fd_gradient(
        |d0| {
            let mut dicts = inst.dicts.clone();
            dicts.shared = d0.clone();
            fidelity(&inst.data, &dicts, &inst.coefs)
        },
        &inst.dicts.shared,
        H,
    );
    rel_err(&g, &fd)
}

/// `|fista - coordinate descent|` on a random 20x10 lasso.
pub fn lasso_gap(seed: u64) -> f64 {
    let mut r = rng(seed);
    let a = gaussian(&mut r, 20, 10);
    let b = gaussian(&mut r, 20, 1);
    let lambda = 0.5;
    let ata = a.transpose() * &a;
    let atb = a.transpose() * &b;
    let value = |w: &DMatrix<f64>| 0.5 * (&a * w - &b).norm_squared();
    let obj = FnObjective {
        grad: |w: &DMatrix<f64>| &ata * w - &atb,
        lipschitz: ata.clone().symmetric_eigen().eigenvalues.max(),
        value: Some(value),
    };
    let out = prox::fista(&obj, lambda, &DMatrix::zeros(10, 1), FistaOptions::new(5000, 1e-12)).unwrap();
    let ours = value(&out.solution) + lambda * out.solution.abs().sum();
    let c = atb.column(0).into_owned();
    let w_cd = cd_quadratic_l1(&ata, &c, lambda, 1e-12);
    let oracle = quadratic_l1_value(&ata, &c, lambda, &w_cd) + 0.5 * b.norm_squared();
    (ours - oracle).abs()
}

/// Max deviation of `svt` from shrinkage built on the eigenpairs of `MᵀM`.
pub fn svt_gap(seed: u64) -> f64 {
    let mut r = rng(50 + seed);
    let m = gaussian(&mut r, 6, 4);
    let tau = 0.8;
    let eig = (m.transpose() * &m).symmetric_eigen();
    let scale = DVector::from_iterator(
        4,
        eig.eigenvalues.iter().map(|&l| {
            let s = l.max(0.0).sqrt();
            if s > 0.0 {
                (s - tau).max(0.0) / s
            } else {
                0.0
            }
        }),
    );
    let oracle = &m * &eig.eigenvectors * DMatrix::from_diagonal(&scale) * eig.eigenvectors.transpose();
    (prox::svt(&m, tau).unwrap() - oracle).amax()
}

/// Best objective seen by diminishing-step subgradient descent on
/// `||V - D X||² + eta ||D||_*`.
pub fn subgradient_oracle(v: &DMatrix<f64>, x: &DMatrix<f64>, eta: f64, steps: usize) -> f64 {
    let f = |d: &DMatrix<f64>| (v - d * x).norm_squared() + eta * nuclear(d);
    let lip = 2.0 * (x * x.transpose()).symmetric_eigen().eigenvalues.max();
    let mut d = DMatrix::zeros(v.nrows(), x.nrows());
    let mut best = f(&d);
    for t in 0..steps {
        let svd = d.clone().svd(true, true);
        let (u, vt) = (svd.u.unwrap(), svd.v_t.unwrap());
        let rank = svd.singular_values.iter().filter(|&&s| s > 1e-12).count();
        let mut g = (&d * x - v) * x.transpose() * 2.0;
        if rank > 0 {
            g += u.columns(0, rank) * vt.rows(0, rank) * eta;
        }
        d -= g * (1.0 / (lip * ((t + 1) as f64).sqrt()));
        best = best.min(f(&d));
    }
    best
}

/// `(admm objective, subgradient oracle objective)`.
pub fn admm_vs_subgradient(seed: u64) -> (f64, f64) {
    let mut r = rng(70 + seed);
    let v = gaussian(&mut r, 6, 8);
    let x = gaussian(&mut r, 3, 8);
    let eta = 1.0;
    let out = prox::admm_nuclear(&v, &x, eta, 1.0, 500).unwrap();
    let admm = prox::nuclear_ls_objective(&v, &x, &out.solution, eta).unwrap();
    (admm, subgradient_oracle(&v, &x, eta, 100_000))
}

/// Runs the training sub-solvers in `fit`'s order and scores every
/// iteration with the independently coded discriminative objective.
pub fn discriminative_driver(data: &Dataset, cfg: &TrainConfig) -> Vec<f64> {
    let (mut dicts, mut coefs) = learner::initialize(data, cfg).unwrap();
    let mut out = Vec::new();
    for _ in 0..cfg.hyper.outer_iters {
        learner::sparse_code_train(data, &dicts, &mut coefs, cfg).unwrap();
        dictupdate::update_class_dicts(
            data.y(),
            &mut dicts,
            &coefs,
            cfg.hyper.odl_sweeps,
            cfg.dict_sweep_mode,
            cfg.exec,
        )
        .unwrap();
        out.push(fddl_objective(
            data.y(),
            data.labels(),
            &dicts.class_dicts,
            &coefs.x,
            cfg.hyper.lambda1,
            cfg.hyper.lambda2,
        ));
    }
    out
}
