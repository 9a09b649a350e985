//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

pub mod checks;

use lrsdl::{CoefBundle, Dataset, DictionaryBundle};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| rng.sample(StandardNormal))
}

pub fn unit_columns(mut m: DMatrix<f64>) -> DMatrix<f64> {
    for mut col in m.column_iter_mut() {
        let n = col.norm();
        if n > 0.0 {
            col /= n;
        }
    }
    m
}

pub fn balanced_labels(classes: usize, per_class: usize) -> Vec<usize> {
    (0..classes * per_class).map(|j| j / per_class + 1).collect()
}

/// A random consistent (data, dictionaries, coefficients) triple.
pub struct Instance {
    pub data: Dataset,
    pub dicts: DictionaryBundle,
    pub coefs: CoefBundle,
}

pub fn random_instance(seed: u64, classes: usize, dim: usize, per_class: usize, kc: usize, k0: usize) -> Instance {
    let mut r = rng(seed);
    let y = unit_columns(gaussian(&mut r, dim, classes * per_class));
    let data = Dataset::new(y, balanced_labels(classes, per_class)).unwrap();
    let class_dicts = (0..classes).map(|_| unit_columns(gaussian(&mut r, dim, kc))).collect();
    let shared = unit_columns(gaussian(&mut r, dim, k0));
    let dicts = DictionaryBundle::new(class_dicts, shared).unwrap();
    let n = classes * per_class;
    let x = gaussian(&mut r, classes * kc, n) * 0.5;
    let x0 = gaussian(&mut r, k0, n) * 0.5;
    let coefs = CoefBundle::new(x, x0, kc, per_class).unwrap();
    Instance { data, dicts, coefs }
}

/// Central finite-difference gradient of `f` at `x`.
pub fn fd_gradient(f: impl Fn(&DMatrix<f64>) -> f64, x: &DMatrix<f64>, h: f64) -> DMatrix<f64> {
    let mut g = DMatrix::zeros(x.nrows(), x.ncols());
    let mut probe = x.clone();
    for i in 0..x.len() {
        let orig = probe[i];
        probe[i] = orig + h;
        let up = f(&probe);
        probe[i] = orig - h;
        let down = f(&probe);
        probe[i] = orig;
        g[i] = (up - down) / (2.0 * h);
    }
    g
}

pub fn rel_err(a: &DMatrix<f64>, reference: &DMatrix<f64>) -> f64 {
    (a - reference).norm() / reference.norm().max(1e-12)
}

/// Cyclic coordinate descent for `min ½ wᵀQw - cᵀw + lambda ||w||_1`,
/// run until no coordinate moves more than `tol`.
pub fn cd_quadratic_l1(q: &DMatrix<f64>, c: &DVector<f64>, lambda: f64, tol: f64) -> DVector<f64> {
    let n = c.len();
    let mut w = DVector::zeros(n);
    for _ in 0..1_000_000 {
        let mut biggest = 0.0_f64;
        for i in 0..n {
            if q[(i, i)] <= 0.0 {
                continue;
            }
            let rest = q.row(i).transpose().dot(&w) - q[(i, i)] * w[i];
            let rho = c[i] - rest;
            let next = rho.signum() * (rho.abs() - lambda).max(0.0) / q[(i, i)];
            biggest = biggest.max((next - w[i]).abs());
            w[i] = next;
        }
        if biggest < tol {
            break;
        }
    }
    w
}

pub fn quadratic_l1_value(q: &DMatrix<f64>, c: &DVector<f64>, lambda: f64, w: &DVector<f64>) -> f64 {
    0.5 * w.dot(&(q * w)) - c.dot(w) + lambda * w.abs().sum()
}

/// Fisher term through explicit scatter matrices:
/// `tr(S_W) - tr(S_B) + ||X||²`.
pub fn fisher_by_scatter(x: &DMatrix<f64>, labels: &[usize]) -> f64 {
    let classes = labels.iter().copied().max().unwrap();
    let k = x.nrows();
    let mean_of = |cols: &[usize]| {
        let mut m = DVector::zeros(k);
        for &j in cols {
            m += x.column(j);
        }
        m / cols.len() as f64
    };
    let all: Vec<usize> = (0..x.ncols()).collect();
    let m = mean_of(&all);
    let mut sw = DMatrix::zeros(k, k);
    let mut sb = DMatrix::zeros(k, k);
    for c in 1..=classes {
        let cols: Vec<usize> = all.iter().copied().filter(|&j| labels[j] == c).collect();
        let mc = mean_of(&cols);
        for &j in &cols {
            let dv = x.column(j) - &mc;
            sw += &dv * dv.transpose();
        }
        let db = &mc - &m;
        sb += (&db * db.transpose()) * cols.len() as f64;
    }
    sw.trace() - sb.trace() + x.norm_squared()
}

/// Discriminative fidelity computed sample by sample from its definition.
pub fn fddl_fidelity(y: &DMatrix<f64>, labels: &[usize], class_dicts: &[DMatrix<f64>], x: &DMatrix<f64>) -> f64 {
    let kc = class_dicts[0].ncols();
    let mut total = 0.0;
    for j in 0..y.ncols() {
        let c = labels[j] - 1;
        let yj = y.column(j);
        let mut full = yj.clone_owned();
        for (i, di) in class_dicts.iter().enumerate() {
            let part = di * x.column(j).rows(i * kc, kc);
            full -= &part;
            if i == c {
                total += (yj - &part).norm_squared();
            } else {
                total += part.norm_squared();
            }
        }
        total += full.norm_squared();
    }
    total
}

/// The discriminative objective without a shared dictionary.
pub fn fddl_objective(
    y: &DMatrix<f64>,
    labels: &[usize],
    class_dicts: &[DMatrix<f64>],
    x: &DMatrix<f64>,
    lambda1: f64,
    lambda2: f64,
) -> f64 {
    0.5 * fddl_fidelity(y, labels, class_dicts, x)
        + lambda1 * x.abs().sum()
        + 0.5 * lambda2 * fisher_by_scatter(x, labels)
}

/// Sum of singular values from an independent SVD call.
pub fn nuclear(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        0.0
    } else {
        m.clone().svd(false, false).singular_values.sum()
    }
}
