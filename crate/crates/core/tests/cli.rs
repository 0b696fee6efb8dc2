mod common;

use std::path::Path;
use std::process::Command;

use serde_json::Value;

use common::*;

fn model(name: &str) -> String {
    model_path(name).display().to_string()
}

fn code(o: &std::process::Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn json(o: &std::process::Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", stdout(o)))
}

fn path(dir: &Path, name: &str) -> String {
    dir.join(name).display().to_string()
}

#[test]
fn valid_model_exits_zero() {
    let o = heterotest(&["validate", &model("counter.json")]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o), "valid\n");
}

#[test]
fn overlap_reports_a_determinism_witness() {
    let o = heterotest(&["validate", "--dft", &model("bad_overlap.json")]);
    assert_eq!(code(&o), 1);
    assert!(
        stdout(&o).contains("determinism: f1 and f2 both apply in state q0 at memory 0 on input x"),
        "{}",
        stdout(&o)
    );
    let j = json(&heterotest(&[
        "--format",
        "json",
        "validate",
        "--dft",
        &model("bad_overlap.json"),
    ]));
    assert_eq!(j["dft"][0]["deterministic"]["pass"], false);
}

#[test]
fn depth_zero_prints_the_initial_configuration() {
    let o = heterotest(&["simulate", "--depth", "0", &model("ps2.json")]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o).trim(), "(s,t)");
}

#[test]
fn all_branches_show_both_computations() {
    let o = heterotest(&[
        "simulate",
        "--depth",
        "3",
        "--all-branches",
        &model("ps2.json"),
    ]);
    let text = stdout(&o);
    assert!(text.contains("(bdf,b) (halted)"));
    assert!(text.contains("⟹({r14},{r22}) (ccf,c) (halted)"));
}

#[test]
fn seeded_simulation_reads_the_environment() {
    let explicit = heterotest(&[
        "simulate",
        "--depth",
        "5",
        "--seed",
        "9",
        &model("ps2.json"),
    ]);
    let from_env = Command::new(bin())
        .args(["simulate", "--depth", "5", &model("ps2.json")])
        .env("HETEROTEST_SEED", "9")
        .output()
        .unwrap();
    assert_eq!(code(&explicit), 0);
    assert_eq!(explicit.stdout, from_env.stdout);
}

#[test]
fn heterotic_run_in_text() {
    let o = heterotest(&[
        "simulate",
        "--rounds",
        "2",
        "--seed",
        "1",
        &model("heterotic_ps2.json"),
    ]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    assert_eq!(text.matches("Base ⟹ Control").count(), 2);
    assert_eq!(text.matches("Control ⟹ Base").count(), 1);
}

#[test]
fn heterotic_run_through_the_oracle_process() {
    let local = heterotest(&[
        "--format",
        "json",
        "simulate",
        "--seed",
        "4",
        &model("heterotic_ps2.json"),
    ]);
    let oracle = format!(
        "{} oracle-sim --seed 4 --depth-cap 10 {}",
        bin(),
        model("ps2.json")
    );
    let remote = heterotest(&[
        "--format",
        "json",
        "simulate",
        "--seed",
        "4",
        "--oracle",
        &oracle,
        &model("heterotic_ps2.json"),
    ]);
    assert_eq!(
        code(&remote),
        0,
        "{}",
        String::from_utf8_lossy(&remote.stderr)
    );
    assert_eq!(local.stdout, remote.stdout);
}

#[test]
fn usage_errors_exit_three() {
    assert_eq!(code(&heterotest(&["no-such-command"])), 3);
    assert_eq!(
        code(&heterotest(&["gen-tests", "psystem", &model("ps2.json")])),
        3
    );
    assert_eq!(code(&heterotest(&["coverage", &model("ps2.json")])), 3);
    assert_eq!(
        code(&heterotest(&["validate", "/nonexistent/model.json"])),
        3
    );
    assert_eq!(
        code(&heterotest(&[
            "mutate",
            "--ops",
            "flip",
            &model("ps2.json")
        ])),
        3
    );
    assert_eq!(code(&heterotest(&["--help"])), 0);
}

#[test]
fn malformed_json_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let p = path(dir.path(), "broken.json");
    std::fs::write(&p, "{\"inputs\": [").unwrap();
    let o = heterotest(&["validate", &p]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"));
}

#[test]
fn generation_failures_exit_two() {
    let o = heterotest(&["mutate", "--ops", "case-output-swap", &model("ps2.json")]);
    assert_eq!(code(&o), 2);

    let dir = tempfile::tempdir().unwrap();
    for name in ["ps2.json", "control_once.json"] {
        std::fs::copy(model_path(name), dir.path().join(name)).unwrap();
    }
    let h = path(dir.path(), "h.json");
    std::fs::write(
        &h,
        r#"{"psystem": "ps2.json", "control": "control_once.json", "seed": 0, "depth_cap": 10, "all_branches": true}"#,
    )
    .unwrap();
    assert_eq!(code(&heterotest(&["gen-tests", "heterotic", &h])), 2);
}

#[test]
fn dft_failure_blocks_suite_generation() {
    assert_eq!(
        code(&heterotest(&[
            "gen-tests",
            "sxm",
            &model("bad_overlap.json")
        ])),
        1
    );
}

#[test]
fn artifacts_repeat_byte_for_byte() {
    let runs: [&[&str]; 6] = [
        &[
            "gen-tests",
            "sxm",
            "--extra-states",
            "1",
            &model("counter.json"),
        ],
        &["gen-tests", "system", &model("ping_pong.json")],
        &["gen-tests", "psystem", "--depth", "3", &model("ps2.json")],
        &[
            "gen-tests",
            "heterotic",
            "--seed",
            "3",
            &model("heterotic_ps2.json"),
        ],
        &["mutate", "--seed", "7", "--count", "5", &model("ps2.json")],
        &["product", &model("ping_pong.json")],
    ];
    for args in runs {
        let a = heterotest(args);
        let b = heterotest(args);
        assert_eq!(
            code(&a),
            0,
            "{args:?}: {}",
            String::from_utf8_lossy(&a.stderr)
        );
        assert_eq!(a.stdout, b.stdout, "{args:?}");
        assert_eq!(json(&a)["schema"], 1, "{args:?}");
    }
}

#[test]
fn output_flag_writes_the_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let out = path(dir.path(), "suite.json");
    let o = heterotest(&["gen-tests", "sxm", "-o", &out, &model("counter.json")]);
    assert_eq!(code(&o), 0);
    assert!(o.stdout.is_empty());
    let suite: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(suite["method"], "w-method");
    assert_eq!(suite["k"], 0);
}

#[test]
fn scoring_pipeline_for_a_machine() {
    let dir = tempfile::tempdir().unwrap();
    let suite = path(dir.path(), "suite.json");
    let mutants = path(dir.path(), "mutants.json");
    assert_eq!(
        code(&heterotest(&[
            "gen-tests",
            "sxm",
            "-o",
            &suite,
            &model("counter.json")
        ])),
        0
    );
    assert_eq!(
        code(&heterotest(&[
            "mutate",
            "--ops",
            "transition-delete,transition-retarget",
            "-o",
            &mutants,
            &model("counter.json")
        ])),
        0
    );
    let o = heterotest(&[
        "score",
        "--mutants",
        &mutants,
        "--suite",
        &suite,
        &model("counter.json"),
    ]);
    assert_eq!(code(&o), 0);
    let report = json(&o);
    let total = report["total"].as_u64().unwrap();
    assert!(total > 0);
    assert_eq!(
        report["killed"].as_u64().unwrap() + report["survived"].as_u64().unwrap(),
        total
    );
    assert_eq!(report["per_mutant"].as_array().unwrap().len() as u64, total);
}

#[test]
fn scoring_pipeline_for_a_p_system() {
    let dir = tempfile::tempdir().unwrap();
    let cov = path(dir.path(), "coverage.json");
    let mutants = path(dir.path(), "mutants.json");
    assert_eq!(
        code(&heterotest(&[
            "gen-tests",
            "psystem",
            "--depth",
            "3",
            "-o",
            &cov,
            &model("ps2.json")
        ])),
        0
    );
    assert_eq!(
        code(&heterotest(&[
            "mutate",
            "--ops",
            "rule-delete",
            "-o",
            &mutants,
            &model("ps2.json")
        ])),
        0
    );
    let o = heterotest(&[
        "--format",
        "text",
        "score",
        "--mutants",
        &mutants,
        "--coverage",
        &cov,
        &model("ps2.json"),
    ]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    assert!(text.contains("rule-delete r21: killed"), "{text}");
}

#[test]
fn coverage_from_depth() {
    let o = heterotest(&["coverage", "--depth", "3", &model("ps2.json")]);
    assert_eq!(code(&o), 0);
    let j = json(&o);
    assert!(j["rules"]
        .as_array()
        .unwrap()
        .iter()
        .all(|r| r["covered"] == true));
}
