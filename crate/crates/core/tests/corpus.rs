//! The shipped corpus: expected verdicts, agreement with the built-in forms,
//! and loadability of every configuration.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use nullwave::conditions::{check_agemi, check_null_cubic, check_null_quadratic, check_strict, weights, Tolerances, WeightMatrix};
use nullwave::io::{read_json, LoadedConfig, SystemFile, Task, WeightFile};
use nullwave::nonlinearity::{forms, CubicTensor, GradientVector, SystemSpec};
use proptest::prelude::*;
use serde::Deserialize;

fn corpus() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("corpus")
}

fn system(rel: &str) -> SystemSpec {
    read_json::<SystemFile>(&corpus().join(rel)).unwrap().to_spec().unwrap()
}

fn weight(rel: &str) -> WeightMatrix {
    read_json::<WeightFile>(&corpus().join(rel)).unwrap().to_matrix().unwrap()
}

#[derive(Deserialize)]
struct Manifest {
    cases: Vec<Case>,
}

#[derive(Deserialize)]
struct Case {
    system: String,
    weight: Option<String>,
    expect: BTreeMap<String, String>,
}

fn name<T: serde::Serialize>(v: T) -> String {
    serde_json::to_value(v).unwrap().as_str().unwrap().to_string()
}

#[test]
fn manifest_verdicts_hold() {
    let manifest: Manifest = read_json(&corpus().join("manifest.json")).unwrap();
    let tol = Tolerances::default();
    for case in &manifest.cases {
        let spec = system(&case.system);
        let a = case.weight.as_deref().map(weight).unwrap_or_else(|| WeightMatrix::identity(spec.n_components()));
        for (check, expected) in &case.expect {
            let got = match check.as_str() {
                "null_quadratic" => name(check_null_quadratic(spec.quadratic(), &tol).verdict),
                "null_cubic" => name(check_null_cubic(spec.cubic(), 512, &tol).verdict),
                "agemi" => name(check_agemi(spec.cubic(), &a, 512, 512, &tol).unwrap().verdict),
                "strict" => name(check_strict(spec.cubic(), &a, 512, 512, &tol).unwrap().verdict),
                other => panic!("unknown check {other}"),
            };
            assert_eq!(&got, expected, "{} / {check}", case.system);
        }
    }
}

fn same_cubic(file: &CubicTensor, built: &CubicTensor, p: &[f64]) {
    let p = GradientVector::from_vec(file.n_components(), p[..3 * file.n_components()].to_vec()).unwrap();
    for (x, y) in file.eval(&p).iter().zip(built.eval(&p)) {
        assert!((x - y).abs() <= 1e-12 * (1.0 + y.abs()), "{x} vs {y}");
    }
}

fn same_weight(file: &WeightMatrix, built: &WeightMatrix, theta: f64) {
    for (x, y) in file.eval(theta).iter().zip(built.eval(theta)) {
        assert!((x - y).abs() <= 1e-12 * (1.0 + y.abs()), "{x} vs {y}");
    }
}

proptest! {
    #[test]
    fn corpus_files_match_builtin_forms(p in prop::collection::vec(-2.0f64..2.0, 6), theta in 0.0f64..6.3) {
        same_cubic(system("systems/coupled_pair.json").cubic(), &forms::coupled_pair(), &p);
        same_weight(&weight("weights/coupled_pair.json"), &weights::coupled_pair(), theta);
        same_cubic(system("systems/dissipator.json").cubic(), &forms::time_cube_damping(), &p);
        for (tag, a, b) in [("a0p5_bm3", 0.5, -3.0), ("a1_b0", 1.0, 0.0), ("a2_b3", 2.0, 3.0)] {
            let file = format!("diagonal_pair_{tag}.json");
            same_cubic(system(&format!("systems/{file}")).cubic(), &forms::diagonal_pair(a, b), &p);
            same_weight(&weight(&format!("weights/{file}")), &weights::diagonal_pair(a, b), theta);
        }
    }
}

#[test]
fn every_configuration_loads() {
    let dir = corpus().join("configs");
    let mut count = 0;
    for entry in fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        let cfg = LoadedConfig::load(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        let stem = path.file_stem().unwrap().to_str().unwrap();
        assert!(stem.starts_with(cfg.config.task.name()), "{stem}");
        if cfg.config.task != Task::Report {
            let spec = cfg.system().unwrap();
            cfg.weight(spec.n_components()).unwrap();
        }
        count += 1;
    }
    assert!(count >= 10);
}
