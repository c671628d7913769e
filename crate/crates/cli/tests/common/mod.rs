#![allow(dead_code)]

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

pub fn medmark() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_medmark"));
    cmd.env_remove("MEDMARK_THREADS").env_remove("RUST_LOG");
    cmd
}

pub struct Run {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl Run {
    pub fn json(&self) -> Value {
        serde_json::from_str(&self.stdout)
            .unwrap_or_else(|e| panic!("bad JSON ({e}):\n{}\n{}", self.stdout, self.stderr))
    }
}

fn finish(out: Output) -> Run {
    Run {
        code: out.status.code().expect("exited normally"),
        stdout: String::from_utf8(out.stdout).unwrap(),
        stderr: String::from_utf8(out.stderr).unwrap(),
    }
}

pub fn run(args: &[&str]) -> Run {
    finish(medmark().args(args).output().expect("binary runs"))
}

pub fn run_in(dir: &Path, args: &[&str]) -> Run {
    finish(
        medmark()
            .current_dir(dir)
            .args(args)
            .output()
            .expect("binary runs"),
    )
}

pub fn run_with(cmd: &mut Command) -> Run {
    finish(cmd.output().expect("binary runs"))
}
