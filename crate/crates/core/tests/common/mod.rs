#![allow(dead_code)]

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use cevib::model::CevibConfig;
use cevib::tensor::RngStream;

pub fn repo_root() -> PathBuf {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../..");
    root.canonicalize().unwrap_or(root)
}

pub fn ihdp_dir() -> PathBuf {
    repo_root().join("data/ihdp")
}

pub fn tiny_cevib() -> CevibConfig {
    CevibConfig {
        latent_dim: 4,
        encoder_hidden: vec![16],
        head_hidden: vec![16],
        epochs: 8,
        batch_size: 64,
        learning_rate: 3e-3,
        mc_samples_eval: 10,
        ..Default::default()
    }
}

/// Writes an LBIDD-layout folder with one generating process `dgp` of `n`
/// subjects: five covariates, logistic assignment and a heterogeneous
/// effect. Returns the folder.
pub fn write_acic_fixture(root: &Path, dgp: &str, n: usize, seed: u64) -> PathBuf {
    let mut rng = RngStream::new(seed, 0);
    fs::create_dir_all(root.join("factuals")).unwrap();
    fs::create_dir_all(root.join("counterfactuals")).unwrap();
    let mut x = String::from("sample_id,x1,x2,x3,x4,x5\n");
    let mut f = String::from("sample_id,z,y\n");
    let mut cf = String::from("sample_id,y0,y1\n");
    for i in 0..n {
        let id = format!("s{i:05}");
        let v: Vec<f64> = (0..4).map(|_| rng.gauss()).collect();
        let b = u8::from(rng.bernoulli(0.4));
        writeln!(x, "{id},{},{},{},{},{b}", v[0], v[1], v[2], v[3]).unwrap();
        let p = 1.0 / (1.0 + (-(0.8 * v[0] - 0.5 * v[1])).exp());
        let z = u8::from(rng.bernoulli(p));
        let y0 = 1.0 + v[0] + 0.5 * v[2] + f64::from(b);
        let y1 = y0 + 2.0 + 0.5 * v[1];
        let yf = if z == 1 { y1 } else { y0 } + 0.1 * rng.gauss();
        writeln!(f, "{id},{z},{yf}").unwrap();
        writeln!(cf, "{id},{y0},{y1}").unwrap();
    }
    fs::write(root.join("x.csv"), x).unwrap();
    fs::write(root.join("factuals").join(format!("{dgp}.csv")), f).unwrap();
    fs::write(root.join("counterfactuals").join(format!("{dgp}_cf.csv")), cf).unwrap();
    root.to_path_buf()
}
