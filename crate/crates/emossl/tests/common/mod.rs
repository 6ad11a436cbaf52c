#![allow(dead_code)]

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use emossl::manifest::{EvalManifest, UtteranceRecord};

pub fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_emossl"))
}

pub fn run(args: &[&str]) -> Output {
    bin().args(args).env("RUST_LOG", "warn").output().expect("spawn emossl")
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

pub fn sine(freq: f64, fs: u32, secs: f64, amp: f64) -> Vec<f64> {
    let n = (fs as f64 * secs) as usize;
    (0..n).map(|i| amp * (2.0 * PI * freq * i as f64 / fs as f64).sin()).collect()
}

/// Impulse train at `f0` through cascaded two-pole resonators.
pub fn synthetic_vowel(fs: u32, f0: f64, resonances: &[(f64, f64)], secs: f64) -> Vec<f64> {
    let n = (fs as f64 * secs) as usize;
    let period = fs as f64 / f0;
    let mut x: Vec<f64> = (0..n)
        .map(|i| {
            let phase = i as f64 % period;
            if phase < 1.0 { 1.0 } else { 0.0 }
        })
        .collect();
    for &(f, bw) in resonances {
        let r = (-PI * bw / fs as f64).exp();
        let a1 = 2.0 * r * (2.0 * PI * f / fs as f64).cos();
        let a2 = -r * r;
        let mut y = vec![0.0; n];
        for i in 0..n {
            let y1 = if i >= 1 { y[i - 1] } else { 0.0 };
            let y2 = if i >= 2 { y[i - 2] } else { 0.0 };
            y[i] = x[i] + a1 * y1 + a2 * y2;
        }
        x = y;
    }
    let peak = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    x.iter().map(|v| 0.8 * v / peak).collect()
}

pub fn write_manifest(dir: &Path, labels: &[&str], records: Vec<UtteranceRecord>) -> PathBuf {
    let m = EvalManifest {
        labels: labels.iter().map(|s| s.to_string()).collect(),
        records,
        base_dir: dir.to_path_buf(),
    };
    let p = dir.join("manifest.tsv");
    std::fs::write(&p, m.to_text().unwrap()).unwrap();
    p
}

pub fn record(id: &str, emotion: &str, lang: &str, path: Option<&str>) -> UtteranceRecord {
    let mut r = UtteranceRecord::new(id, emotion, lang);
    r.raw_path = path.map(str::to_owned);
    r
}

/// Seeded Gaussian via Box-Muller.
pub fn gaussian(rng: &mut impl rand::Rng) -> f64 {
    let u1: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
}
