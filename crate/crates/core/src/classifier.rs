//! Coding test samples against a learned model and assigning class labels.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};

use crate::datamodel::{Dataset, LearnedModel};
use crate::error::{Error, Result};
use crate::gradients::{TestCodeObjective, LIPSCHITZ_ITERS};
use crate::par::{self, ExecMode};
use crate::prox::{self, FistaOptions};

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    /// 1-based class label.
    pub label: usize,
    pub per_class_scores: DVector<f64>,
    /// `[x; x^0]`.
    pub code: DVector<f64>,
}

/// Precomputed `D̄ᵀD̄`, `D̄ᵀ` and the Lipschitz bound for one model.
pub struct TestCoder<'m> {
    model: &'m LearnedModel,
    dbar_t: DMatrix<f64>,
    gram: DMatrix<f64>,
    gram_lipschitz: f64,
}

impl<'m> TestCoder<'m> {
    pub fn new(model: &'m LearnedModel) -> Self {
        let dbar_t = model.dicts.total().transpose();
        let gram = &dbar_t * dbar_t.transpose();
        let gram_lipschitz = prox::gram_lipschitz(&gram, LIPSCHITZ_ITERS, model.hyper.seed);
        Self {
            model,
            dbar_t,
            gram,
            gram_lipschitz,
        }
    }

    pub fn model(&self) -> &LearnedModel {
        self.model
    }

    /// Sparse code of `y` as given (no normalization).
    pub fn encode(&self, y: &DVector<f64>) -> Result<DVector<f64>> {
        if y.len() != self.model.dim() {
            return Err(Error::Dimension(format!(
                "sample has dimension {}, model expects {}",
                y.len(),
                self.model.dim()
            )));
        }
        let hyper = &self.model.hyper;
        let obj = TestCodeObjective::new(
            &self.gram,
            &self.dbar_t,
            y,
            &self.model.means.m0,
            hyper.lambda2,
            self.gram_lipschitz,
        );
        let start = DMatrix::zeros(self.gram.nrows(), 1);
        let opts = FistaOptions::new(hyper.fista_test_iters, hyper.fista_tol);
        let out = prox::fista(&obj, hyper.lambda1, &start, opts)?;
        Ok(out.solution.column(0).into_owned())
    }

    /// Unit-normalizes `y`, codes it and scores every class.
    pub fn classify(&self, y: &DVector<f64>, w: f64) -> Result<Prediction> {
        check_w(w)?;
        let norm = y.norm();
        let y = if norm > 0.0 { y / norm } else { y.clone() };
        let code = self.encode(&y)?;
        let scores = class_scores(self.model, &y, &code, w);
        Ok(Prediction {
            label: argmin_first(scores.as_slice()) + 1,
            per_class_scores: scores,
            code,
        })
    }
}

fn check_w(w: f64) -> Result<()> {
    if (0.0..=1.0).contains(&w) {
        Ok(())
    } else {
        Err(Error::Parameter(format!("w = {w} is outside [0, 1]")))
    }
}

/// `w ||y - D_0 x^0 - D_c x^c||² + (1 - w) ||x - m_c||²` for every class.
pub fn class_scores(model: &LearnedModel, y: &DVector<f64>, code: &DVector<f64>, w: f64) -> DVector<f64> {
    let dicts = &model.dicts;
    let kc = dicts.atoms_per_class();
    let k = dicts.total_class_atoms();
    let x = code.rows(0, k);
    let ybar = y - &dicts.shared * code.rows(k, dicts.shared_atoms());
    DVector::from_fn(dicts.classes(), |c, _| {
        let resid = (&ybar - &dicts.class_dicts[c] * x.rows(c * kc, kc)).norm_squared();
        let coef = (x - &model.means.class_means[c]).norm_squared();
        w * resid + (1.0 - w) * coef
    })
}

/// Index of the smallest score; the first one wins ties.
pub fn argmin_first(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s < scores[best] {
            best = i;
        }
    }
    best
}

pub fn encode_test(y: &DVector<f64>, model: &LearnedModel) -> Result<DVector<f64>> {
    TestCoder::new(model).encode(y)
}

pub fn classify(y: &DVector<f64>, model: &LearnedModel, w: f64) -> Result<Prediction> {
    TestCoder::new(model).classify(y, w)
}

/// Classifies every column of `y`.
pub fn classify_batch(y: &DMatrix<f64>, model: &LearnedModel, w: f64, exec: ExecMode) -> Result<Vec<Prediction>> {
    check_w(w)?;
    if y.nrows() != model.dim() {
        return Err(Error::Dimension(format!(
            "test data has dimension {}, model expects {}",
            y.nrows(),
            model.dim()
        )));
    }
    let coder = TestCoder::new(model);
    par::map_indexed(exec, y.ncols(), |j| coder.classify(&y.column(j).into_owned(), w))
        .into_iter()
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub accuracy: f64,
    /// `confusion[(i, j)]` counts samples of class `i + 1` predicted as `j + 1`.
    pub confusion: DMatrix<usize>,
    pub predictions: Vec<Prediction>,
}

pub fn evaluate(test: &Dataset, model: &LearnedModel, w: f64, exec: ExecMode) -> Result<Evaluation> {
    evaluate_labeled(test.y(), test.labels(), model, w, exec)
}

/// Like [`evaluate`] for test sets that need not be class-balanced.
pub fn evaluate_labeled(
    y: &DMatrix<f64>,
    labels: &[usize],
    model: &LearnedModel,
    w: f64,
    exec: ExecMode,
) -> Result<Evaluation> {
    if labels.len() != y.ncols() {
        return Err(Error::Dimension(format!(
            "{} labels for {} samples",
            labels.len(),
            y.ncols()
        )));
    }
    let classes = model.classes();
    if let Some(&bad) = labels.iter().find(|&&l| l == 0 || l > classes) {
        return Err(Error::Data(format!("label {bad} outside 1..={classes}")));
    }
    let predictions = classify_batch(y, model, w, exec)?;
    Ok(tally(labels, predictions, classes))
}

fn tally(labels: &[usize], predictions: Vec<Prediction>, classes: usize) -> Evaluation {
    let mut confusion = DMatrix::zeros(classes, classes);
    let mut correct = 0usize;
    for (&t, p) in labels.iter().zip(&predictions) {
        confusion[(t - 1, p.label - 1)] += 1;
        correct += usize::from(t == p.label);
    }
    let accuracy = if labels.is_empty() {
        0.0
    } else {
        correct as f64 / labels.len() as f64
    };
    Evaluation {
        accuracy,
        confusion,
        predictions,
    }
}

pub const PREDICTIONS_HEADER: &str = "index,true_label,pred_label,score_pred";

/// `true_label` is left empty when labels are unknown.
pub fn predictions_to_csv(predictions: &[Prediction], labels: Option<&[usize]>) -> String {
    let mut out = String::from(PREDICTIONS_HEADER);
    out.push('\n');
    for (i, p) in predictions.iter().enumerate() {
        let truth = labels.map(|l| l[i].to_string()).unwrap_or_default();
        writeln!(out, "{i},{truth},{},{}", p.label, p.per_class_scores[p.label - 1]).unwrap();
    }
    out
}

pub fn confusion_to_csv(confusion: &DMatrix<usize>) -> String {
    let mut out = String::new();
    for row in confusion.row_iter() {
        let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}
