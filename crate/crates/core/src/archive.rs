//! Model archive: a directory holding `meta`, `D.lmx`, `D0.lmx`,
//! `means_mc.lmx`, `mean_m0.lmx` and `trace.csv`.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use nalgebra::DMatrix;

use crate::datamodel::{
    load_matrix, save_matrix, DictionaryBundle, HyperParams, LearnedModel, MatrixFormat, MeanStats,
    TrainStatus,
};
use crate::error::{ensure_shape, Error, Result};
use crate::learner;

pub const FORMAT_VERSION: u32 = 1;

pub fn save_model(model: &LearnedModel, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let dicts = &model.dicts;
    save_matrix(&dicts.concat(), dir.join("D.lmx"), MatrixFormat::Binary)?;
    save_matrix(&dicts.shared, dir.join("D0.lmx"), MatrixFormat::Binary)?;
    let k = dicts.total_class_atoms();
    let mut mc = DMatrix::zeros(k, dicts.classes());
    for (c, m) in model.means.class_means.iter().enumerate() {
        mc.set_column(c, m);
    }
    save_matrix(&mc, dir.join("means_mc.lmx"), MatrixFormat::Binary)?;
    let m0 = DMatrix::from_column_slice(model.means.m0.len(), 1, model.means.m0.as_slice());
    save_matrix(&m0, dir.join("mean_m0.lmx"), MatrixFormat::Binary)?;
    write_text(&dir.join("trace.csv"), &learner::trace_to_csv(&model.trace))?;
    write_text(&dir.join("meta"), &meta_text(model))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn meta_text(model: &LearnedModel) -> String {
    let h = &model.hyper;
    let d = &model.dicts;
    let mut lines = vec![
        format!("format_version={FORMAT_VERSION}"),
        format!("c={}", d.classes()),
        format!("d={}", d.dim()),
        format!("k_c={}", d.atoms_per_class()),
        format!("k0={}", d.shared_atoms()),
        format!("lambda1={}", h.lambda1),
        format!("lambda2={}", h.lambda2),
        format!("eta={}", h.eta),
        format!("w={}", h.w),
        format!("seed={}", h.seed),
        format!("outer_iters={}", h.outer_iters),
        format!("fista_iters={}", h.fista_iters),
        format!("fista_test_iters={}", h.fista_test_iters),
        format!("fista_tol={}", h.fista_tol),
        format!("admm_iters={}", h.admm_iters),
        format!("admm_rho={}", h.admm_rho),
        format!("odl_sweeps={}", h.odl_sweeps),
    ];
    match &model.status {
        TrainStatus::Completed => lines.push("status=completed".into()),
        TrainStatus::Aborted { iter, reason } => {
            lines.push("status=aborted".into());
            lines.push(format!("aborted_iter={iter}"));
            lines.push(format!("abort_reason={}", reason.replace('\n', " ")));
        }
    }
    let mut out = lines.join("\n");
    out.push('\n');
    out
}

struct Meta(BTreeMap<String, String>);

impl Meta {
    fn parse(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Format(format!("meta line {line:?} is not key=value")))?;
            map.insert(k.trim().to_ascii_lowercase(), v.trim().to_string());
        }
        Ok(Self(map))
    }

    fn raw(&self, key: &str) -> Result<&str> {
        self.0
            .get(key)
            .map(String::as_str)
            .ok_or_else(|| Error::Format(format!("meta is missing {key}")))
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<T> {
        let v = self.raw(key)?;
        v.parse()
            .map_err(|_| Error::Format(format!("meta {key}={v:?} is malformed")))
    }

    fn get_or<T: FromStr>(&self, key: &str, default: T) -> Result<T> {
        if self.0.contains_key(key) {
            self.get(key)
        } else {
            Ok(default)
        }
    }
}

pub fn load_model(dir: impl AsRef<Path>) -> Result<LearnedModel> {
    let dir = dir.as_ref();
    if !dir.is_dir() {
        return Err(Error::io(
            dir,
            std::io::Error::new(std::io::ErrorKind::NotFound, "model directory not found"),
        ));
    }
    let meta_path = dir.join("meta");
    let meta = Meta::parse(&fs::read_to_string(&meta_path).map_err(|e| Error::io(&meta_path, e))?)?;
    let version: u32 = meta.get("format_version")?;
    if version != FORMAT_VERSION {
        return Err(Error::Format(format!("unsupported archive format_version {version}")));
    }
    let classes: usize = meta.get("c")?;
    let dim: usize = meta.get("d")?;
    let kc: usize = meta.get("k_c")?;
    let k0: usize = meta.get("k0")?;
    let defaults = HyperParams::default();
    let hyper = HyperParams {
        lambda1: meta.get("lambda1")?,
        lambda2: meta.get("lambda2")?,
        eta: meta.get("eta")?,
        w: meta.get("w")?,
        seed: meta.get("seed")?,
        outer_iters: meta.get_or("outer_iters", defaults.outer_iters)?,
        fista_iters: meta.get_or("fista_iters", defaults.fista_iters)?,
        fista_test_iters: meta.get_or("fista_test_iters", defaults.fista_test_iters)?,
        fista_tol: meta.get_or("fista_tol", defaults.fista_tol)?,
        admm_iters: meta.get_or("admm_iters", defaults.admm_iters)?,
        admm_rho: meta.get_or("admm_rho", defaults.admm_rho)?,
        odl_sweeps: meta.get_or("odl_sweeps", defaults.odl_sweeps)?,
    };
    hyper.validate()?;
    let status = match meta.get_or("status", "completed".to_string())?.as_str() {
        "completed" => TrainStatus::Completed,
        "aborted" => TrainStatus::Aborted {
            iter: meta.get_or("aborted_iter", 0)?,
            reason: meta.get_or("abort_reason", String::new())?,
        },
        other => return Err(Error::Format(format!("unknown status {other:?}"))),
    };

    let k = classes * kc;
    let d = load_matrix(dir.join("D.lmx"))?;
    ensure_shape("D.lmx", d.shape(), (dim, k))?;
    let d0 = load_matrix(dir.join("D0.lmx"))?;
    ensure_shape("D0.lmx", d0.shape(), (dim, k0))?;
    let mc = load_matrix(dir.join("means_mc.lmx"))?;
    ensure_shape("means_mc.lmx", mc.shape(), (k, classes))?;
    let m0 = load_matrix(dir.join("mean_m0.lmx"))?;
    ensure_shape("mean_m0.lmx", m0.shape(), (k0, 1))?;

    let dicts = DictionaryBundle::from_concat(&d, d0, classes)?;
    let means = MeanStats::from_class_means(
        mc.column_iter().map(|c| c.into_owned()).collect(),
        m0.column(0).into_owned(),
    );
    let trace_path = dir.join("trace.csv");
    let trace = learner::parse_trace_csv(
        &fs::read_to_string(&trace_path).map_err(|e| Error::io(&trace_path, e))?,
    )?;
    Ok(LearnedModel {
        dicts,
        means,
        hyper,
        trace,
        status,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;

    fn tiny() -> LearnedModel {
        let d = DMatrix::from_fn(3, 4, |i, j| if i == j % 3 { 1.0 } else { 0.1 * j as f64 });
        let mut dicts = DictionaryBundle::from_concat(&d, DMatrix::zeros(3, 1), 2).unwrap();
        dicts.shared[(2, 0)] = 1.0 / 3.0;
        let means = MeanStats::from_class_means(
            vec![DVector::from_vec(vec![0.1, 0.2, 0.3, 0.4]), DVector::from_vec(vec![-0.1, 0.0, 1e-17, 2.5])],
            DVector::from_vec(vec![0.7]),
        );
        LearnedModel {
            dicts,
            means,
            hyper: HyperParams {
                lambda1: 0.1 + 0.2,
                ..HyperParams::default()
            },
            trace: Vec::new(),
            status: TrainStatus::Aborted {
                iter: 3,
                reason: "fidelity term is not finite".into(),
            },
        }
    }

    #[test]
    fn round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let model = tiny();
        save_model(&model, dir.path()).unwrap();
        let back = load_model(dir.path()).unwrap();
        assert_eq!(back, model);
        let meta = fs::read_to_string(dir.path().join("meta")).unwrap();
        assert!(meta.contains("k0=1\n") && meta.contains("status=aborted\n"));
    }

    #[test]
    fn missing_directory() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(load_model(dir.path().join("nope")), Err(Error::Io { .. })));
    }

    #[test]
    fn shape_mismatch_is_detected() {
        let dir = tempfile::tempdir().unwrap();
        save_model(&tiny(), dir.path()).unwrap();
        save_matrix(&DMatrix::zeros(3, 2), dir.path().join("D0.lmx"), MatrixFormat::Binary).unwrap();
        assert!(matches!(load_model(dir.path()), Err(Error::Dimension(_))));
    }

    #[test]
    fn unknown_version() {
        let dir = tempfile::tempdir().unwrap();
        save_model(&tiny(), dir.path()).unwrap();
        let meta = fs::read_to_string(dir.path().join("meta")).unwrap();
        fs::write(dir.path().join("meta"), meta.replace("format_version=1", "format_version=9")).unwrap();
        assert!(matches!(load_model(dir.path()), Err(Error::Format(_))));
    }
}
