use std::fs;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{DatasetSelector, ExperimentConfig, Method};
use super::seeds::{child_seed, content_hash, retry_seed};
use super::summary::summarize_records;
use crate::baselines::{fit_ols, ols_ite, OlsVariant, RIDGE};
use crate::datasets::{export_synthetic, generate_synthetic, load_acic, load_ihdp, load_twins, split, CausalDataset, SynthConfig};
use crate::error::{Error, Result};
use crate::estimator::estimate_ite;
use crate::metrics::{EvalReport, Scope};
use crate::model::CevibModel;
use crate::tensor::RngStream;

const STREAM_INIT: u64 = 1;
const STREAM_FIT: u64 = 2;
const STREAM_ESTIMATE: u64 = 3;
const STREAM_SAMPLE: u64 = 5;

/// One evaluation of one method on one replication.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub dataset: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instance: Option<String>,
    pub replication: usize,
    pub seed: u64,
    pub method: Method,
    pub scope: Scope,
    pub eps_ate: f64,
    pub pehe: f64,
    pub sqrt_pehe: f64,
    pub rel_pehe: Option<f64>,
    pub n_subjects: usize,
    pub n_excluded_rel: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    /// Exact selection-bias KL of a generated instance.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kl: Option<f64>,
    pub attempts: usize,
    pub wall_time_s: f64,
    pub config_hash: String,
}

impl RunRecord {
    pub fn report(&self) -> EvalReport {
        EvalReport {
            eps_ate: self.eps_ate,
            pehe: self.pehe,
            sqrt_pehe: self.sqrt_pehe,
            rel_pehe: self.rel_pehe,
            n_subjects: self.n_subjects,
            n_excluded_rel: self.n_excluded_rel,
            scope: self.scope,
        }
    }

    /// Uniqueness key within one results file.
    pub fn key(&self) -> (String, Option<String>, usize, Method, Scope) {
        (self.dataset.clone(), self.instance.clone(), self.replication, self.method, self.scope)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub dataset: String,
    pub instance: Option<String>,
    pub replication: usize,
    pub method: Method,
    pub error: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentOutcome {
    pub records: Vec<RunRecord>,
    pub failures: Vec<Failure>,
    pub replications_total: usize,
    pub replications_failed: usize,
    pub config_hash: String,
}

impl ExperimentOutcome {
    /// More than a tenth of replications had at least one failed method.
    pub fn excessive_failures(&self) -> bool {
        self.replications_failed * 10 > self.replications_total
    }

    /// 0 on success, 2 when failures are excessive.
    pub fn exit_code(&self) -> i32 {
        if self.excessive_failures() {
            2
        } else {
            0
        }
    }
}

/// Content hash of the settings that determine results; output location and
/// worker count are excluded.
pub fn config_hash(cfg: &ExperimentConfig) -> String {
    let mut canonical = cfg.clone();
    canonical.out_dir = Default::default();
    canonical.workers = 0;
    let json = serde_json::to_vec(&canonical).expect("config serializes");
    content_hash(&json)
}

enum Data {
    Loaded(Arc<CausalDataset>),
    Generated { mu: f64, generator: SynthConfig },
}

struct Instance {
    dataset: String,
    instance: Option<String>,
    data: Data,
}

impl Instance {
    fn seed_key(&self) -> String {
        match &self.instance {
            Some(i) => format!("{}/{i}", self.dataset),
            None => self.dataset.clone(),
        }
    }
}

fn require_truth(d: CausalDataset, what: &str) -> Result<Arc<CausalDataset>> {
    if d.true_ite().is_none() {
        return Err(Error::Dataset(format!("{what} has no ground-truth effects to evaluate against")));
    }
    Ok(Arc::new(d))
}

fn instances(cfg: &ExperimentConfig) -> Result<Vec<Instance>> {
    let dir = &cfg.data_dir;
    Ok(match &cfg.dataset {
        DatasetSelector::Ihdp { files } => files
            .iter()
            .map(|&i| {
                Ok(Instance {
                    dataset: "ihdp".into(),
                    instance: Some(i.to_string()),
                    data: Data::Loaded(require_truth(load_ihdp(dir, i)?, &format!("IHDP file {i}"))?),
                })
            })
            .collect::<Result<_>>()?,
        DatasetSelector::Twins { file, options } => vec![Instance {
            dataset: "twins".into(),
            instance: None,
            data: Data::Loaded(require_truth(load_twins(dir.join(file), options)?, "Twins")?),
        }],
        DatasetSelector::Acic { dgps } => dgps
            .iter()
            .map(|g| {
                Ok(Instance {
                    dataset: "acic".into(),
                    instance: Some(g.clone()),
                    data: Data::Loaded(require_truth(load_acic(dir, g)?, &format!("ACIC process {g}"))?),
                })
            })
            .collect::<Result<_>>()?,
        DatasetSelector::Synthetic { mu, generator } => mu
            .iter()
            .map(|&m| Instance {
                dataset: format!("synthetic-mu{m}"),
                instance: None,
                data: Data::Generated {
                    mu: m,
                    generator: generator.clone(),
                },
            })
            .collect(),
    })
}

/// Generated instance for one shift and replication. The covariance and
/// outcome weights depend only on `(master, replication)`, so every shift in
/// a replication shares them; subject draws depend on `seed`.
pub fn synthetic_instance(
    generator: &SynthConfig,
    mu: f64,
    master: u64,
    replication: usize,
    seed: u64,
) -> Result<crate::datasets::SyntheticData> {
    let cfg = SynthConfig {
        mu,
        covariance_seed: child_seed(master, "synthetic/covariance", replication),
        outcome_seed: child_seed(master, "synthetic/outcome", replication),
        ..generator.clone()
    };
    generate_synthetic(&cfg, &mut RngStream::new(seed, STREAM_SAMPLE))
}

/// Writes the instance a run with master seed `master` generates for shift
/// `mu` and `replication`, via `export_synthetic`. Returns the data and the
/// metadata path.
pub fn export_synthetic_instance(
    generator: &SynthConfig,
    mu: f64,
    master: u64,
    replication: usize,
    path: &Path,
) -> Result<(crate::datasets::SyntheticData, std::path::PathBuf)> {
    let seed = child_seed(master, &format!("synthetic-mu{mu}"), replication);
    let data = synthetic_instance(generator, mu, master, replication, seed)?;
    let meta = export_synthetic(&data, &RngStream::new(seed, STREAM_SAMPLE), path)?;
    Ok((data, meta))
}

struct JobResult {
    records: Vec<RunRecord>,
    failures: Vec<Failure>,
}

fn predict_cevib(cfg: &ExperimentConfig, data: &CausalDataset, parts: &crate::datasets::Split, seed: u64) -> Result<(Vec<f64>, usize)> {
    let mut attempt_seed = seed;
    let mut attempt = 1;
    loop {
        let mut model = CevibModel::new(cfg.model.clone(), data.dim(), &mut RngStream::new(attempt_seed, STREAM_INIT))?;
        match model.fit(&parts.train, &parts.validation, &mut RngStream::new(attempt_seed, STREAM_FIT)) {
            Ok(_) => {
                let mut rng = RngStream::new(attempt_seed, STREAM_ESTIMATE);
                return Ok((estimate_ite(&model, &data.x, cfg.latent_samples(), &mut rng)?, attempt));
            }
            Err(e @ (Error::Divergence { .. } | Error::NonFiniteGradient(_))) if attempt == 1 => {
                warn!("training diverged ({e}); retrying with a fresh seed");
                attempt_seed = retry_seed(seed);
                attempt += 1;
            }
            Err(e) => return Err(e),
        }
    }
}

fn run_job(cfg: &ExperimentConfig, inst: &Instance, replication: usize, hash: &str) -> JobResult {
    let seed = child_seed(cfg.seed, &inst.seed_key(), replication);
    let mut out = JobResult {
        records: Vec::new(),
        failures: Vec::new(),
    };
    let fail_all = |out: &mut JobResult, e: &Error| {
        for &method in &cfg.methods {
            out.failures.push(Failure {
                dataset: inst.dataset.clone(),
                instance: inst.instance.clone(),
                replication,
                method,
                error: e.to_string(),
            });
        }
    };

    let (data, mu, kl) = match &inst.data {
        Data::Loaded(d) => (Arc::clone(d), None, None),
        Data::Generated { mu, generator } => match synthetic_instance(generator, *mu, cfg.seed, replication, seed) {
            Ok(s) => (Arc::new(s.dataset), Some(*mu), Some(s.kl)),
            Err(e) => {
                fail_all(&mut out, &e);
                return out;
            }
        },
    };
    let parts = match split(&data, &cfg.split_fractions().with_seed(seed)) {
        Ok(p) => p,
        Err(e) => {
            fail_all(&mut out, &e);
            return out;
        }
    };
    let truth = data.true_ite().expect("checked when loading");
    let test_truth: Vec<f64> = parts.test_idx.iter().map(|&i| truth[i]).collect();

    for &method in &cfg.methods {
        let start = Instant::now();
        let predicted: Result<(Vec<f64>, usize)> = match method {
            Method::Oracle => Ok((truth.clone(), 1)),
            Method::Ols1 | Method::Ols2 => {
                let variant = if method == Method::Ols1 { OlsVariant::Ols1 } else { OlsVariant::Ols2 };
                fit_ols(variant, &parts.train)
                    .and_then(|m| ols_ite(&m, &data.x))
                    .map(|ite| (ite, 1))
            }
            Method::Cevib => predict_cevib(cfg, &data, &parts, seed),
        };
        let evaluated = predicted.and_then(|(ite, attempts)| {
            let test_pred: Vec<f64> = parts.test_idx.iter().map(|&i| ite[i]).collect();
            Ok((
                EvalReport::evaluate(&truth, &ite, Scope::Within)?,
                EvalReport::evaluate(&test_truth, &test_pred, Scope::Out)?,
                attempts,
            ))
        });
        let wall = start.elapsed().as_secs_f64();
        match evaluated {
            Ok((within, outside, attempts)) => {
                for r in [within, outside] {
                    out.records.push(RunRecord {
                        dataset: inst.dataset.clone(),
                        instance: inst.instance.clone(),
                        replication,
                        seed,
                        method,
                        scope: r.scope,
                        eps_ate: r.eps_ate,
                        pehe: r.pehe,
                        sqrt_pehe: r.sqrt_pehe,
                        rel_pehe: r.rel_pehe,
                        n_subjects: r.n_subjects,
                        n_excluded_rel: r.n_excluded_rel,
                        mu,
                        kl,
                        attempts,
                        wall_time_s: wall,
                        config_hash: hash.to_string(),
                    });
                }
            }
            Err(e) => out.failures.push(Failure {
                dataset: inst.dataset.clone(),
                instance: inst.instance.clone(),
                replication,
                method,
                error: e.to_string(),
            }),
        }
    }
    info!(
        "{} rep {replication}: {} records, {} failures",
        inst.seed_key(),
        out.records.len(),
        out.failures.len()
    );
    out
}

/// Runs every replication of every dataset instance and method in memory.
/// Records come back in a fixed order regardless of worker count.
pub fn execute(cfg: &ExperimentConfig) -> Result<ExperimentOutcome> {
    cfg.validate()?;
    let hash = config_hash(cfg);
    let insts = instances(cfg)?;
    let jobs: Vec<(usize, usize)> = (0..insts.len())
        .flat_map(|i| (0..cfg.replications).map(move |r| (i, r)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    let results: Vec<JobResult> =
        pool.install(|| jobs.par_iter().map(|&(i, r)| run_job(cfg, &insts[i], r, &hash)).collect());

    let replications_failed = results.iter().filter(|j| !j.failures.is_empty()).count();
    let mut records = Vec::new();
    let mut failures = Vec::new();
    for j in results {
        records.extend(j.records);
        failures.extend(j.failures);
    }
    Ok(ExperimentOutcome {
        records,
        failures,
        replications_total: jobs.len(),
        replications_failed,
        config_hash: hash,
    })
}

#[derive(Serialize)]
struct Metadata<'a> {
    config: &'a ExperimentConfig,
    config_hash: &'a str,
    ols_ridge: f64,
    replications_total: usize,
    replications_failed: usize,
    failures: &'a [Failure],
}

pub(crate) fn csv_error(path: &Path, e: csv::Error) -> Error {
    Error::io(path, std::io::Error::other(e))
}

fn write_file(path: &Path, contents: &[u8]) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(contents).map_err(|e| Error::io(path, e))
}

/// JSON-lines rendering of records, one per line.
pub fn records_to_jsonl(records: &[RunRecord]) -> String {
    let mut s = String::new();
    for r in records {
        s.push_str(&serde_json::to_string(r).expect("records serialize"));
        s.push('\n');
    }
    s
}

/// `execute`, then write `records.jsonl`, `config.json`, `summary.csv` and
/// `summary.txt` into the configured output directory.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutcome> {
    let outcome = execute(cfg)?;
    let dir = &cfg.out_dir;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_file(&dir.join("records.jsonl"), records_to_jsonl(&outcome.records).as_bytes())?;
    let meta = Metadata {
        config: cfg,
        config_hash: &outcome.config_hash,
        ols_ridge: RIDGE,
        replications_total: outcome.replications_total,
        replications_failed: outcome.replications_failed,
        failures: &outcome.failures,
    };
    write_file(
        &dir.join("config.json"),
        serde_json::to_string_pretty(&meta).expect("metadata serializes").as_bytes(),
    )?;
    let summary = summarize_records(&outcome.records);
    write_file(&dir.join("summary.csv"), summary.to_csv()?.as_bytes())?;
    write_file(&dir.join("summary.txt"), summary.to_table().as_bytes())?;
    Ok(outcome)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub mu: f64,
    pub kl: f64,
    pub method: Method,
    pub replication: usize,
    pub eps_ate: f64,
    pub sqrt_pehe: f64,
}

/// Out-of-sample rows of a synthetic run, ordered by shift, method and
/// replication.
pub fn sweep_rows(records: &[RunRecord]) -> Vec<SweepRow> {
    let mut rows: Vec<SweepRow> = records
        .iter()
        .filter(|r| r.scope == Scope::Out)
        .filter_map(|r| {
            Some(SweepRow {
                mu: r.mu?,
                kl: r.kl?,
                method: r.method,
                replication: r.replication,
                eps_ate: r.eps_ate,
                sqrt_pehe: r.sqrt_pehe,
            })
        })
        .collect();
    rows.sort_by(|a, b| {
        a.mu.total_cmp(&b.mu)
            .then(a.method.cmp(&b.method))
            .then(a.replication.cmp(&b.replication))
    });
    rows
}

/// `run_experiment` on a synthetic selector, plus `sweep.csv` with columns
/// `mu,kl,method,replication,eps_ate,sqrt_pehe`.
pub fn run_robustness_sweep(cfg: &ExperimentConfig) -> Result<(ExperimentOutcome, Vec<SweepRow>)> {
    if !matches!(cfg.dataset, DatasetSelector::Synthetic { .. }) {
        return Err(Error::Config("the robustness sweep needs a synthetic dataset selector".into()));
    }
    let outcome = run_experiment(cfg)?;
    let rows = sweep_rows(&outcome.records);
    let path = cfg.out_dir.join("sweep.csv");
    let mut w = csv::Writer::from_path(&path).map_err(|e| csv_error(&path, e))?;
    for r in &rows {
        w.serialize(r).map_err(|e| csv_error(&path, e))?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;
    Ok((outcome, rows))
}
