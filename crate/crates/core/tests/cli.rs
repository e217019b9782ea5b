use std::path::Path;
use std::process::{Command, Output};

fn rcf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rcf"))
        .args(args)
        .env("SOURCE_DATE_EPOCH", "1700000000")
        .output()
        .expect("rcf runs")
}

fn ok(args: &[&str]) -> String {
    let out = rcf(args);
    assert!(
        out.status.success(),
        "rcf {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn version_flag() {
    let out = ok(&["--version"]);
    assert!(out.starts_with("rcf "), "{out}");
    assert!(out.contains(env!("CARGO_PKG_VERSION")));
}

#[test]
fn unknown_config_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("synth.json");
    std::fs::write(&config, r#"{"n_communities": 10, "colour": "red"}"#).unwrap();
    let out = rcf(&["synth", "--config", s(&config), "--out", s(&dir.path().join("o"))]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("colour"));
}

#[test]
fn staged_commands_chain_and_write_manifests() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let synth_cfg = d.join("synth.json");
    std::fs::write(
        &synth_cfg,
        r#"{"n_communities": 400, "planted_xg_fraction": 0.05, "first_year": 2000, "last_year": 2014}"#,
    )
    .unwrap();
    let corpus = d.join("corpus");
    ok(&["--seed", "4", "synth", "--config", s(&synth_cfg), "--out", s(&corpus)]);
    for f in ["papers.jsonl", "ranks.csv", "truth.tsv", "manifest.json"] {
        assert!(corpus.join(f).exists(), "missing {f}");
    }
    let papers = corpus.join("papers.jsonl");
    let ranks = corpus.join("ranks.csv");

    let report: serde_json::Value =
        serde_json::from_str(&ok(&["corpus", "validate", s(&papers), "--journals", s(&ranks)])).unwrap();
    assert_eq!(report["meta"]["first_year"], 2000);
    assert_eq!(report["meta"]["last_year"], 2014);

    let model = d.join("model");
    let corpus_args = ["--papers", s(&papers), "--journals", s(&ranks)];
    let mut build = vec!["--seed", "4", "model", "build"];
    build.extend(corpus_args);
    build.extend(["--through-year", "2009", "--resolution", "0.005", "--out", s(&model)]);
    ok(&build);
    for year in 2010..=2014 {
        let y = year.to_string();
        let mut extend = vec!["model", "extend"];
        extend.extend(corpus_args);
        extend.extend(["--model", s(&model), "--year", &y]);
        ok(&extend);
    }

    let indicators = d.join("indicators.tsv");
    let mut ind = vec!["indicators"];
    ind.extend(corpus_args);
    ind.extend(["--model", s(&model), "--fy-range", "2007:2011", "--out", s(&indicators)]);
    ok(&ind);
    let header = std::fs::read_to_string(&indicators).unwrap();
    assert!(header.lines().next().unwrap().contains("delta_rvit"));

    let fit = d.join("fit.json");
    let mut fit_cmd = vec!["fit"];
    fit_cmd.extend(corpus_args);
    fit_cmd.extend(["--model", s(&model), "--indicators", s(&indicators), "--fy-range", "2010:2011", "--out", s(&fit)]);
    ok(&fit_cmd);
    let fitted: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&fit).unwrap()).unwrap();
    assert_eq!(fitted["variables"][0], "intercept");
    ok(&[
        "forecast", "--indicators", s(&indicators), "--coefficients", s(&fit), "--model", s(&model), "--fy", "2011",
        "--top", "5", "--out", s(&d.join("fitted.tsv")),
    ]);

    // published coefficients, no outcomes
    let blind = d.join("blind.tsv");
    ok(&[
        "forecast", "--indicators", s(&indicators), "--model", s(&model), "--fy-range", "2007:2011", "--top", "10",
        "--out", s(&blind),
    ]);
    let out = rcf(&["evaluate", "--forecasts", s(&blind), "--out", s(&d.join("eval_blind"))]);
    assert!(!out.status.success());
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert!(err.to_string().contains("target_years"), "{err}");

    let scored = d.join("forecasts.tsv");
    ok(&[
        "forecast", "--indicators", s(&indicators), "--model", s(&model), "--papers", s(&papers), "--journals",
        s(&ranks), "--fy-range", "2007:2011", "--oracle-n", "--out", s(&scored),
    ]);
    let eval = d.join("eval");
    ok(&["evaluate", "--forecasts", s(&scored), "--by", "fy,ry", "--out", s(&eval)]);
    let reports: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(eval.join("evaluation.json")).unwrap()).unwrap();
    let slices: Vec<&str> = reports
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["slice"].as_str().unwrap())
        .collect();
    for want in ["overall", "actionable", "circumstantial", "fy", "ry"] {
        assert!(slices.contains(&want), "no {want} slice in {slices:?}");
    }

    let lifecycle = d.join("lifecycle.tsv");
    let mut life = vec!["lifecycle"];
    life.extend(corpus_args);
    life.extend(["--model", s(&model), "--fy", "2011", "--out", s(&lifecycle)]);
    ok(&life);
    assert!(std::fs::read_to_string(&lifecycle).unwrap().lines().count() > 2);

    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(d.join("eval").join("manifest.json")).unwrap()).unwrap();
    let digest = manifest["inputs"][0][1].as_str().unwrap();
    assert_eq!(digest.len(), 64);
    assert!(digest.chars().all(|c| c.is_ascii_hexdigit()));
}

#[test]
fn pipeline_is_reproducible_from_one_config() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("pipeline.json");
    std::fs::write(
        &config,
        r#"{
            "synth": {"n_communities": 300, "planted_xg_fraction": 0.05},
            "model_year": 2009,
            "cluster": {"resolution": 0.005, "max_iterations": 2},
            "model": "published"
        }"#,
    )
    .unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let summary = ok(&["--seed", "9", "pipeline", "--config", s(&config), "--out", s(&a)]);
    assert!(summary.contains("actionable"), "{summary}");
    ok(&["--seed", "9", "--threads", "1", "pipeline", "--config", s(&config), "--out", s(&b)]);
    for f in ["forecasts.tsv", "evaluation.tsv", "indicators.tsv", "model/assignment.tsv", "synth/papers.jsonl"] {
        let fa = std::fs::read(a.join(f)).unwrap();
        let fb = std::fs::read(b.join(f)).unwrap();
        assert!(fa == fb, "{f} differs");
    }
}
