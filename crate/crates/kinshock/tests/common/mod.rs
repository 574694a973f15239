#![allow(dead_code)]

use std::path::PathBuf;
use std::sync::{Mutex, OnceLock};

use kinshock::collision::{load_or_assemble, CollisionTensor, KernelParams, QuadratureConfig};
use kinshock::hermite::build_index_set;

pub const GAMMA: f64 = 0.5;
pub const S: f64 = 0.25;
pub const KAPPA: f64 = 0.05;

pub fn work_dir() -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("kinshock-tests");
    std::fs::create_dir_all(&dir).expect("scratch directory");
    dir
}

pub fn cache_path(degree: usize) -> PathBuf {
    work_dir().join(format!("tensor-n{degree}.kshk"))
}

/// Reference-kernel tensor of the given degree, assembled once per test binary.
pub fn tensor(degree: usize) -> CollisionTensor {
    static CACHE: OnceLock<Mutex<Vec<(usize, CollisionTensor)>>> = OnceLock::new();
    let lock = CACHE.get_or_init(|| Mutex::new(Vec::new()));
    let mut held = lock.lock().unwrap_or_else(|e| e.into_inner());
    if let Some((_, t)) = held.iter().find(|(d, _)| *d == degree) {
        return t.clone();
    }
    let set = build_index_set(degree).unwrap();
    let params = KernelParams::new(GAMMA, S, KAPPA).unwrap();
    let quad = QuadratureConfig::for_degree(degree);
    let (t, _) = load_or_assemble(Some(&cache_path(degree)), &set, &params, &quad).unwrap();
    held.push((degree, t.clone()));
    t
}
