#![allow(dead_code)]

use std::path::Path;
use std::process::{Command, Output};

pub fn prismlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_prismlab"))
        .args(args)
        .env_remove("PRISMLAB_THREADS")
        .output()
        .expect("spawn prismlab")
}

pub fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

pub fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

pub fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", stdout(out)))
}

pub fn path(p: &Path) -> &str {
    p.to_str().expect("utf-8 temp path")
}
