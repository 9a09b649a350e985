mod common;

use common::checks;
use common::*;
use lrsdl::gradients::{self, HatProducts};
use lrsdl::ExecMode;
use nalgebra::DMatrix;

const TOL: f64 = 1e-4;

fn check_all(name: &str, err: impl Fn(u64) -> f64) {
    for seed in 0..10 {
        let e = err(seed);
        assert!(e <= TOL, "{name} seed {seed}: relative error {e}");
    }
}

#[test]
fn fidelity_gradient_in_x() {
    check_all("fidelity", checks::fidelity_x_error);
}

#[test]
fn fisher_gradient() {
    check_all("fisher", checks::fisher_error);
}

#[test]
fn fisher_value_matches_scatter_form() {
    for seed in 0..10 {
        let x = gaussian(&mut rng(seed), 4, 6);
        let labels = balanced_labels(3, 2);
        let direct = gradients::fisher_value(&x, &labels).unwrap();
        let oracle = fisher_by_scatter(&x, &labels);
        assert!((direct - oracle).abs() < 1e-10 * oracle.abs().max(1.0));
    }
}

#[test]
fn shared_code_gradient() {
    check_all("shared code", checks::shared_code_error);
}

#[test]
fn test_sample_gradient() {
    check_all("test sample", checks::test_sample_error);
}

#[test]
fn class_dictionary_gradient() {
    check_all("class dictionary", checks::class_dict_error);
}

#[test]
fn shared_dictionary_gradient() {
    check_all("shared dictionary", checks::shared_dict_error);
}

/// Builds `Ŷ_c` and `D̂_c` literally for every class and compares the products.
#[test]
fn stacked_products_match_dense_construction() {
    let inst = random_instance(7, 3, 4, 2, 2, 1);
    let (d, kc, nc, classes) = (4, 2, 2, 3);
    let k = kc * classes;
    let shifted = gradients::shared_removed(&inst.data, &inst.dicts, &inst.coefs);
    let hat = HatProducts::build(&inst.dicts, &shifted, nc, ExecMode::Sequential).unwrap();
    let dcat = inst.dicts.concat();
    let rows = d * (classes + 1);
    for c in 0..classes {
        let mut dhat = DMatrix::zeros(rows, k);
        dhat.view_mut((0, 0), (d, k)).copy_from(&dcat);
        dhat.view_mut((d, c * kc), (d, kc)).copy_from(&inst.dicts.class_dicts[c]);
        let mut slot = 2;
        for i in (0..classes).filter(|&i| i != c) {
            dhat.view_mut((d * slot, i * kc), (d, kc)).copy_from(&inst.dicts.class_dicts[i]);
            slot += 1;
        }
        let ys = shifted.columns(c * nc, nc);
        let mut yhat = DMatrix::zeros(rows, nc);
        yhat.view_mut((0, 0), (d, nc)).copy_from(&ys);
        yhat.view_mut((d, 0), (d, nc)).copy_from(&ys);

        let gram = dhat.transpose() * &dhat;
        assert!((&gram - &hat.gram).amax() < 1e-12);
        let rhs = dhat.transpose() * &yhat;
        assert!((rhs - hat.dt_yhat.columns(c * nc, nc)).amax() < 1e-12);
        let xc = inst.coefs.x.columns(c * nc, nc);
        let resid = (&yhat - &dhat * xc).norm_squared();
        let direct: f64 = (0..nc)
            .map(|j| {
                let col = c * nc + j;
                let y = shifted.column(col);
                let x = inst.coefs.x.column(col);
                let mut r = (y - &dcat * x).norm_squared();
                r += (y - &inst.dicts.class_dicts[c] * x.rows(c * kc, kc)).norm_squared();
                for i in (0..classes).filter(|&i| i != c) {
                    r += (&inst.dicts.class_dicts[i] * x.rows(i * kc, kc)).norm_squared();
                }
                r
            })
            .sum();
        assert!((resid - direct).abs() < 1e-10);
    }
}

#[test]
fn parallel_and_sequential_products_agree_bitwise() {
    let inst = random_instance(8, 4, 9, 20, 3, 2);
    let shifted = gradients::shared_removed(&inst.data, &inst.dicts, &inst.coefs);
    let a = HatProducts::build(&inst.dicts, &shifted, 20, ExecMode::Parallel).unwrap();
    let b = HatProducts::build(&inst.dicts, &shifted, 20, ExecMode::Sequential).unwrap();
    assert_eq!(a.dt_yhat, b.dt_yhat);
    assert_eq!(a.apply(&inst.coefs.x, ExecMode::Parallel), b.apply(&inst.coefs.x, ExecMode::Sequential));
}
