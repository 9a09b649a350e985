//! Alternating training: sparse coding of `X` and `X^0`, class dictionaries,
//! then the shared dictionary, with a per-iteration objective trace.

use std::fmt::Write as _;
use std::time::Instant;

use nalgebra::DMatrix;
use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::datamodel::{
    CoefBundle, Dataset, DictionaryBundle, HyperParams, IterationRecord, LearnedModel, MeanStats,
    TrainStatus,
};
use crate::dictupdate::{self, DictSweepMode};
use crate::error::{Error, Result};
use crate::gradients::{
    self, ClassXObjective, HatProducts, JointXObjective, MeanMode, ObjectiveTerms,
    SharedCodeObjective, LIPSCHITZ_ITERS,
};
use crate::linalg;
use crate::par::ExecMode;
use crate::prox::{self, FistaOptions};

/// Relative objective increase tolerated between outer iterations.
pub const MONOTONE_SLACK: f64 = 1e-6;

/// How the class coefficient blocks of `X` are solved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Coder {
    /// All classes at once through the stacked fidelity gradient.
    #[default]
    Joint,
    /// One class block at a time with the others fixed, cycling `passes`
    /// times. The FISTA budget is split evenly across passes.
    Sequential { passes: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub hyper: HyperParams,
    pub atoms_per_class: usize,
    pub shared_atoms: usize,
    pub mean_mode: MeanMode,
    pub dict_sweep_mode: DictSweepMode,
    pub trace_every: usize,
    pub coder: Coder,
    pub exec: ExecMode,
}

impl TrainConfig {
    pub fn new(atoms_per_class: usize, shared_atoms: usize) -> Self {
        Self {
            hyper: HyperParams::default(),
            atoms_per_class,
            shared_atoms,
            mean_mode: MeanMode::Through,
            dict_sweep_mode: DictSweepMode::Sequential,
            trace_every: 1,
            coder: Coder::Joint,
            exec: ExecMode::Parallel,
        }
    }

    pub fn with_hyper(mut self, hyper: HyperParams) -> Self {
        self.hyper = hyper;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.hyper.validate()?;
        if self.atoms_per_class == 0 {
            return Err(Error::Parameter("k_c must be >= 1".into()));
        }
        if self.trace_every == 0 {
            return Err(Error::Parameter("trace_every must be >= 1".into()));
        }
        if let Coder::Sequential { passes: 0 } = self.coder {
            return Err(Error::Parameter("sequential coder needs at least one pass".into()));
        }
        Ok(())
    }
}

/// Class dictionaries from randomly chosen class samples, shared dictionary
/// from the leading left singular vectors of `Y`, zero coefficients.
pub fn initialize(data: &Dataset, config: &TrainConfig) -> Result<(DictionaryBundle, CoefBundle)> {
    config.validate()?;
    let (d, n) = (data.dim(), data.len());
    let kc = config.atoms_per_class;
    let k0 = config.shared_atoms;
    if k0 > d.min(n) {
        return Err(Error::Parameter(format!("k0 = {k0} exceeds min(d, N) = {}", d.min(n))));
    }
    if kc > data.per_class() {
        log::warn!(
            "k_c = {kc} exceeds the {} samples per class; atoms will repeat",
            data.per_class()
        );
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.hyper.seed);
    let mut class_dicts = Vec::with_capacity(data.classes());
    for c in 0..data.classes() {
        let block = data.class_block(c);
        let nc = data.per_class();
        let mut picks: Vec<usize> = index::sample(&mut rng, nc, kc.min(nc)).into_vec();
        while picks.len() < kc {
            let extra = index::sample(&mut rng, nc, (kc - picks.len()).min(nc)).into_vec();
            picks.extend(extra);
        }
        let mut dc = DMatrix::zeros(d, kc);
        for (j, &p) in picks.iter().enumerate() {
            dc.set_column(j, &block.column(p));
        }
        if linalg::normalize_columns(&mut dc) > 0 {
            log::warn!("class {} dictionary initialized with zero atoms", c + 1);
        }
        class_dicts.push(dc);
    }

    let shared = if k0 == 0 {
        DMatrix::zeros(d, 0)
    } else {
        let svd = data.y().clone().svd(true, false);
        let u = svd
            .u
            .ok_or_else(|| Error::numerical(0, "SVD of the data failed"))?;
        let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
        order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
        let mut d0 = u.select_columns(&order[..k0]);
        linalg::normalize_columns(&mut d0);
        d0
    };
    let dicts = DictionaryBundle::new(class_dicts, shared)?;
    let coefs = CoefBundle::zeros(&dicts, data);
    Ok((dicts, coefs))
}

/// Diagnostics from one sparse-coding step.
#[derive(Debug, Clone, Default)]
pub struct CodingReport {
    pub x_iterations: usize,
    pub x0_iterations: usize,
}

/// Updates `X` (joint or class-by-class) and then `X^0`, each with FISTA,
/// warm-started from the current coefficients.
pub fn sparse_code_train(
    data: &Dataset,
    dicts: &DictionaryBundle,
    coefs: &mut CoefBundle,
    config: &TrainConfig,
) -> Result<CodingReport> {
    gradients::check_consistent(data, dicts, coefs)?;
    let hyper = &config.hyper;
    let opts = FistaOptions::new(hyper.fista_iters, hyper.fista_tol);
    let mut report = CodingReport::default();

    let shifted = gradients::shared_removed(data, dicts, coefs);
    let hat = HatProducts::build(dicts, &shifted, data.per_class(), config.exec)?;
    match config.coder {
        Coder::Joint => {
            let obj = JointXObjective::new(
                &hat,
                dicts,
                &shifted,
                data.labels(),
                hyper.lambda2,
                config.mean_mode,
                config.exec,
                &coefs.x,
                hyper.seed,
            )?;
            let out = prox::fista(&obj, hyper.lambda1, &coefs.x, opts.with_groups(data.classes()))?;
            report.x_iterations = out.iterations;
            coefs.x = out.solution;
        }
        Coder::Sequential { passes } => {
            let lipschitz =
                prox::gram_lipschitz(&hat.gram, LIPSCHITZ_ITERS, hyper.seed) + 2.0 * hyper.lambda2;
            let per_pass = FistaOptions::new((hyper.fista_iters / passes).max(1), hyper.fista_tol);
            let nc = data.per_class();
            for _ in 0..passes {
                for c in 0..data.classes() {
                    let obj = ClassXObjective::new(
                        &hat,
                        dicts,
                        &shifted,
                        data.labels(),
                        &coefs.x,
                        c,
                        hyper.lambda2,
                        lipschitz,
                    );
                    let start = coefs.x.columns(c * nc, nc).into_owned();
                    let out = prox::fista(&obj, hyper.lambda1, &start, per_pass)?;
                    report.x_iterations += out.iterations;
                    coefs.x.columns_mut(c * nc, nc).copy_from(&out.solution);
                }
            }
        }
    }

    if dicts.shared_atoms() > 0 {
        let (ybar, ytilde) = gradients::residual_matrices(data, dicts, coefs)?;
        let ysum = ybar + ytilde;
        let m0 = linalg::tile(&linalg::column_mean(&coefs.x0), data.len());
        let obj = SharedCodeObjective::new(&dicts.shared, &ysum, m0, hyper.lambda2, hyper.seed);
        let out = prox::fista(&obj, hyper.lambda1, &coefs.x0, opts)?;
        report.x0_iterations = out.iterations;
        coefs.x0 = out.solution;
    }
    Ok(report)
}

/// Stepwise driver behind [`fit`].
pub struct Trainer<'a> {
    data: &'a Dataset,
    config: TrainConfig,
    dicts: DictionaryBundle,
    coefs: CoefBundle,
    iter: usize,
    started: Instant,
}

impl<'a> Trainer<'a> {
    pub fn new(data: &'a Dataset, config: TrainConfig) -> Result<Self> {
        let started = Instant::now();
        let (dicts, coefs) = initialize(data, &config)?;
        Ok(Self::from_state(data, config, dicts, coefs, started))
    }

    /// Starts from explicit dictionaries and coefficients.
    pub fn from_parts(
        data: &'a Dataset,
        config: TrainConfig,
        dicts: DictionaryBundle,
        coefs: CoefBundle,
    ) -> Result<Self> {
        config.validate()?;
        gradients::check_consistent(data, &dicts, &coefs)?;
        Ok(Self::from_state(data, config, dicts, coefs, Instant::now()))
    }

    fn from_state(
        data: &'a Dataset,
        config: TrainConfig,
        dicts: DictionaryBundle,
        coefs: CoefBundle,
        started: Instant,
    ) -> Self {
        Self {
            data,
            config,
            dicts,
            coefs,
            iter: 0,
            started,
        }
    }

    pub fn dicts(&self) -> &DictionaryBundle {
        &self.dicts
    }

    pub fn coefs(&self) -> &CoefBundle {
        &self.coefs
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    pub fn objective(&self) -> Result<ObjectiveTerms> {
        gradients::objective_lrsdl(self.data, &self.dicts, &self.coefs, &self.config.hyper)
    }

    /// One outer iteration: `X`, `X^0`, `D_1..D_C`, `D_0`.
    pub fn step(&mut self) -> Result<IterationRecord> {
        let hyper = self.config.hyper.clone();
        sparse_code_train(self.data, &self.dicts, &mut self.coefs, &self.config)?;

        let shifted = gradients::shared_removed(self.data, &self.dicts, &self.coefs);
        let dead_atoms = dictupdate::update_class_dicts(
            &shifted,
            &mut self.dicts,
            &self.coefs,
            hyper.odl_sweeps,
            self.config.dict_sweep_mode,
            self.config.exec,
        )?;

        let mut admm_residual = 0.0;
        if self.dicts.shared_atoms() > 0 {
            let (ybar, ytilde) = gradients::residual_matrices(self.data, &self.dicts, &self.coefs)?;
            let update = dictupdate::update_shared_dict(
                &ybar,
                &ytilde,
                &self.coefs.x0,
                &self.dicts.shared,
                hyper.eta,
                hyper.admm_rho,
                hyper.admm_iters,
            )?;
            admm_residual = update.residual;
            self.dicts.shared = update.dict;
        }

        self.iter += 1;
        let terms = self.objective()?;
        Ok(IterationRecord {
            iter: self.iter,
            objective: terms.total(),
            fidelity: terms.fidelity,
            l1: terms.l1,
            fisher: terms.fisher,
            nuclear: terms.nuclear,
            elapsed_seconds: self.started.elapsed().as_secs_f64(),
            dead_atoms,
            admm_residual,
        })
    }

    pub fn into_model(self, trace: Vec<IterationRecord>, status: TrainStatus) -> Result<LearnedModel> {
        let means = MeanStats::compute(&self.coefs, self.data.labels(), self.data.classes())?;
        Ok(LearnedModel {
            dicts: self.dicts,
            means,
            hyper: self.config.hyper,
            trace,
            status,
        })
    }
}

/// Trains for `outer_iters` iterations. A numerical failure stops training
/// and returns the last finite state with [`TrainStatus::Aborted`].
pub fn fit(data: &Dataset, config: &TrainConfig) -> Result<LearnedModel> {
    let mut trainer = Trainer::new(data, config.clone())?;
    let iters = config.hyper.outer_iters;
    let mut trace = Vec::with_capacity(iters);
    let mut previous = trainer.objective()?.total();
    let mut status = TrainStatus::Completed;
    for it in 1..=iters {
        let saved = (trainer.dicts.clone(), trainer.coefs.clone());
        match trainer.step() {
            Ok(record) => {
                if record.objective > previous * (1.0 + MONOTONE_SLACK) {
                    log::warn!(
                        "objective increased at iteration {it}: {previous} -> {}",
                        record.objective
                    );
                }
                log::info!(
                    "iteration {it}/{iters}: objective {:.6e}, {:.2}s",
                    record.objective,
                    record.elapsed_seconds
                );
                previous = record.objective;
                if it % config.trace_every == 0 || it == iters {
                    trace.push(record);
                }
            }
            Err(Error::Numerical { iteration, what }) => {
                log::error!("training aborted at outer iteration {it}: {what} (inner {iteration})");
                (trainer.dicts, trainer.coefs) = saved;
                status = TrainStatus::Aborted {
                    iter: it,
                    reason: what,
                };
                break;
            }
            Err(e) => return Err(e),
        }
    }
    trainer.into_model(trace, status)
}

/// Traces of the same problem trained with two coders.
#[derive(Debug, Clone)]
pub struct BenchReport {
    pub joint: LearnedModel,
    pub sequential: LearnedModel,
}

impl BenchReport {
    pub fn joint_final(&self) -> Option<&IterationRecord> {
        self.joint.trace.last()
    }

    pub fn sequential_final(&self) -> Option<&IterationRecord> {
        self.sequential.trace.last()
    }
}

/// Runs [`fit`] with the joint coder and with the class-by-class coder from
/// the same initialization. Requires `k0 = 0` so both solve the same problem.
pub fn bench_joint_vs_sequential(data: &Dataset, config: &TrainConfig) -> Result<BenchReport> {
    bench_with_coders(data, config, Coder::Joint, Coder::Sequential { passes: 1 })
}

pub fn bench_with_coders(
    data: &Dataset,
    config: &TrainConfig,
    first: Coder,
    second: Coder,
) -> Result<BenchReport> {
    if config.shared_atoms != 0 {
        return Err(Error::Parameter("the coder benchmark requires k0 = 0".into()));
    }
    let run = |coder| {
        let cfg = TrainConfig {
            coder,
            ..config.clone()
        };
        fit(data, &cfg)
    };
    Ok(BenchReport {
        joint: run(first)?,
        sequential: run(second)?,
    })
}

pub const TRACE_HEADER: &str = "iter,objective,fidelity,l1,fisher,nuclear,seconds";

pub fn trace_to_csv(trace: &[IterationRecord]) -> String {
    let mut out = String::from(TRACE_HEADER);
    out.push('\n');
    for r in trace {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.iter, r.objective, r.fidelity, r.l1, r.fisher, r.nuclear, r.elapsed_seconds
        )
        .unwrap();
    }
    out
}

pub fn parse_trace_csv(text: &str) -> Result<Vec<IterationRecord>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h.trim() == TRACE_HEADER => {}
        other => return Err(Error::Format(format!("unexpected trace header {other:?}"))),
    }
    lines
        .filter(|l| !l.trim().is_empty())
        .map(|line| {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 7 {
                return Err(Error::Format(format!("trace row {line:?} has {} fields", f.len())));
            }
            let num = |i: usize| {
                f[i].trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Format(format!("bad trace value {:?}", f[i])))
            };
            Ok(IterationRecord {
                iter: f[0]
                    .trim()
                    .parse()
                    .map_err(|_| Error::Format(format!("bad iteration {:?}", f[0])))?,
                objective: num(1)?,
                fidelity: num(2)?,
                l1: num(3)?,
                fisher: num(4)?,
                nuclear: num(5)?,
                elapsed_seconds: num(6)?,
                dead_atoms: 0,
                admm_residual: 0.0,
            })
        })
        .collect()
}
