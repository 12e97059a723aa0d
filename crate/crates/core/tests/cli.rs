//! End-to-end runs of the `limitlab` binary.

use serde_json::Value;
use std::path::Path;
use std::process::{Command, Output};

fn limitlab(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_limitlab"))
        .args(args)
        .current_dir(dir)
        .env_remove("LIMITLAB_CONFIG")
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

#[test]
fn learn_thm3_on_l5_ends_in_p5() {
    let dir = tempfile::tempdir().unwrap();
    let out = limitlab(dir.path(), &["learn", "--learner", "thm3", "--text", "canonical:L5", "--horizon", "10"]);
    assert_eq!(code(&out), 0);
    let trace = json(&out);
    let hyps = trace["hypotheses"].as_array().unwrap();
    assert_eq!(hyps.len(), 11);
    let last = hyps.last().unwrap().as_u64().unwrap().to_string();
    assert_eq!(trace["languages"][&last]["elements"], serde_json::json!([0, 2, 4, 5]));
}

#[test]
fn learn_with_a_table_file() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("tbl.txt"), "kind = psd\n∅;0 -> 6\n0;1 -> 7\n0,2;2 -> 8\ndefault -> none\n").unwrap();
    let out = limitlab(dir.path(), &["learn", "--learner", "@tbl.txt", "--text", "0,2,#", "--horizon", "3"]);
    assert_eq!(code(&out), 0);
    assert_eq!(json(&out)["hypotheses"], serde_json::json!([6, 7, 8, null]));
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["learn", "--learner", "nope", "--text", "0"][..],
        &["check", "--learner", "thm3", "--text", "0,2", "--criterion", "ex"],
        &["check", "--learner", "thm3", "--text", "0,2", "--criterion", "often"],
        &["adversary", "coolsep", "--learner", "thm3"],
        &["relations", "tau(SMon)-Psd-Ex", "Nowhere-Ex"],
        &["learn", "--bogus"],
    ] {
        let out = limitlab(dir.path(), args);
        assert_eq!(code(&out), 2, "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn check_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let mon = limitlab(dir.path(), &["check", "--learner", "thm3", "--text", "canonical:L5", "--criterion", "mon"]);
    assert_eq!(code(&mon), 0);
    assert_eq!(json(&mon)["verdict"], "Confirmed");
    let smon = limitlab(dir.path(), &["check", "--learner", "thm3", "--text", "0,2,5", "--criterion", "smon"]);
    assert_eq!(code(&smon), 1);
    assert_eq!(json(&smon)["witness"]["x"], 6);
    let ex = limitlab(dir.path(), &["check", "--learner", "thm3", "--text", "canonical:2N", "--target", "2N", "--criterion", "ex"]);
    assert_eq!(code(&ex), 0);
}

#[test]
fn trace_recheck_gives_the_same_verdict() {
    let dir = tempfile::tempdir().unwrap();
    let learn = limitlab(dir.path(), &["learn", "--learner", "thm3", "--text", "0,2,5", "--out", "t.json"]);
    assert_eq!(code(&learn), 0);
    for (criterion, target) in [("smon", None), ("mon", None), ("ex", Some("L5")), ("bc", Some("L5"))] {
        let mut direct = vec!["check", "--learner", "thm3", "--text", "0,2,5", "--criterion", criterion];
        let mut traced = vec!["check", "--trace", "t.json", "--criterion", criterion];
        if let Some(t) = target {
            direct.extend(["--target", t]);
            traced.extend(["--target", t]);
        }
        let a = limitlab(dir.path(), &direct);
        let b = limitlab(dir.path(), &traced);
        assert_eq!(code(&a), code(&b), "{criterion}");
        assert_eq!(json(&a), json(&b), "{criterion}");
    }
}

#[test]
fn config_file_sits_between_flags_and_defaults() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("limitlab.cfg"), "horizon = 4\nlearner = thm3\ntext = 0,2\n").unwrap();
    let out = limitlab(dir.path(), &["learn"]);
    assert_eq!(json(&out)["hypotheses"].as_array().unwrap().len(), 5);
    let out = limitlab(dir.path(), &["learn", "--horizon", "2"]);
    assert_eq!(json(&out)["hypotheses"].as_array().unwrap().len(), 3);
    std::fs::write(dir.path().join("other.cfg"), "horizon = 1\n").unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_limitlab"))
        .args(["learn", "--learner", "thm3", "--text", "0"])
        .current_dir(dir.path())
        .env("LIMITLAB_CONFIG", "other.cfg")
        .output()
        .unwrap();
    assert_eq!(json(&out)["hypotheses"].as_array().unwrap().len(), 2);
}

#[test]
fn adversary_reports() {
    let dir = tempfile::tempdir().unwrap();
    let cool = limitlab(dir.path(), &["adversary", "coolsep", "--learner", "family-overgeneralizer", "--error-goal", "5"]);
    assert_eq!(code(&cool), 0);
    let report = json(&cool);
    assert_eq!(report["variant"], "WrongForever");
    assert_eq!(report["detail"]["positions"].as_array().unwrap().len(), 5);
    assert_eq!(report["replayed"], true);
    for key in ["theorem", "variant", "evidence", "budgets"] {
        assert!(report.get(key).is_some(), "{key}");
    }
    let sd = limitlab(dir.path(), &["adversary", "sd", "--learner", "set-copier", "--goal", "10"]);
    assert_eq!(code(&sd), 0);
    assert_eq!(json(&sd)["variant"], "InfiniteMindChanges");
    let wrapped = limitlab(dir.path(), &["adversary", "coolsep", "--learner", "thm3", "--wrap", "--search-bound", "20"]);
    assert_eq!(code(&wrapped), 0);
    assert_eq!(json(&wrapped)["variant"], "FailsToOvergeneralize");
}

#[test]
fn budget_exhaustion_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let out = limitlab(dir.path(), &["adversary", "gsmon", "--learner", "always-changer", "--goal", "5", "--search-bound", "3"]);
    assert_eq!(code(&out), 3);
    assert_eq!(json(&out)["variant"], "BudgetExhausted");
}

#[test]
fn relations_dump_and_query() {
    let dir = tempfile::tempdir().unwrap();
    let all = json(&limitlab(dir.path(), &["relations"]));
    let classes = all["collapse_classes"].as_array().unwrap();
    assert!(classes.iter().any(|c| {
        let names: Vec<&str> = c.as_array().unwrap().iter().filter_map(Value::as_str).collect();
        names.contains(&"tau(Mon)-Psd-Ex") && names.contains(&"tau(SMon)-Psd-Ex")
    }));
    let refl = json(&limitlab(dir.path(), &["relations", "G-Mon-Bc", "G-Mon-Bc"]));
    assert_eq!(refl["relation"], "Inclusion");
    let strict = json(&limitlab(dir.path(), &["relations", "Psd-Mon-Bc", "G-Mon-Bc"]));
    assert_eq!(strict["relation"], "StrictInclusion");
}

#[test]
fn enum_lists_elements() {
    let dir = tempfile::tempdir().unwrap();
    let out = json(&limitlab(dir.path(), &["enum", "L7", "--budget", "20"]));
    assert_eq!(out["elements"], serde_json::json!([0, 2, 4, 6, 7]));
}
