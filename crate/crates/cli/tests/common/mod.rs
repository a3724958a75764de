#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use mutsample::mutator::{Mutant, MutationPoint, Operator};
use mutsample::runner::{MutantResult, Status};
use mutsample::store::ResultSet;

pub fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_mutsample"))
}

pub fn toy_project() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/toy")
}

pub fn run_ok(cmd: &mut Command) -> Output {
    let out = cmd.output().expect("spawn mutsample");
    assert!(
        out.status.success(),
        "{:?} failed with {:?}\nstdout:\n{}\nstderr:\n{}",
        cmd,
        out.status,
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

pub fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf-8 output")
}

fn placeholder(id: u64, class: &str) -> Mutant {
    Mutant {
        id,
        class_name: class.to_string(),
        file_path: class.to_string(),
        point: MutationPoint {
            operator: Operator::AorB,
            token_index: id as usize,
            replacement_text: "-".into(),
            line: 1,
        },
        original_text: "+".into(),
    }
}

/// Classes `K0`, `K1`, ... of the given sizes; every mutant survives.
pub fn sized_result_set(sizes: &[usize]) -> ResultSet {
    let mut catalog = Vec::new();
    let mut results = Vec::new();
    let mut id = 0;
    for (c, &n) in sizes.iter().enumerate() {
        let class = format!("K{c}");
        for _ in 0..n {
            id += 1;
            catalog.push(placeholder(id, &class));
            results.push(MutantResult {
                mutant_id: id,
                class_name: class.clone(),
                status: Status::Survived,
                duration_ms: 0,
                equivalent_override: false,
            });
        }
    }
    ResultSet::from_parts("fixture", catalog, results).unwrap()
}
