use std::fs;
use std::path::Path;
use std::process::Command;

fn mmcvae(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_mmcvae"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}

fn lines(path: &Path) -> Vec<String> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(str::to_owned)
        .collect()
}

const MODEL: [&str; 6] = ["--z-dim", "4", "--s-dim", "2", "--hidden-dim", "16"];

#[test]
fn end_to_end_workflow() {
    let dir = tempfile::tempdir().unwrap();
    let p = |s: &str| dir.path().join(s).to_str().unwrap().to_owned();
    let p_data = p("data");
    let p_data_background_csv = p("data/background.csv");
    let p_data_target_csv = p("data/target.csv");
    let p_emb = p("emb");
    let p_eval = p("eval");
    let p_gen = p("gen");
    let p_model = p("model");
    let p_sweep = p("sweep");

    let (code, err) = mmcvae(&[
        "synth",
        "--out",
        &p_data,
        "--seed",
        "3",
        "--n-target",
        "120",
        "--m-background",
        "100",
        "--d",
        "10",
    ]);
    assert_eq!(code, 0, "{err}");
    let target = lines(&dir.path().join("data/target.csv"));
    assert_eq!(target.len(), 121);
    assert!(target[0].ends_with(",class"));
    assert_eq!(lines(&dir.path().join("data/background.csv")).len(), 101);
    let truth = lines(&dir.path().join("data/truth.csv"));
    assert_eq!(truth[0], "origin,class,z0,z1,z2,z3,s0,s1");
    assert_eq!(truth.len(), 221);

    let data = [
        "--target",
        &p_data_target_csv,
        "--background",
        &p_data_background_csv,
        "--label-column",
        "class",
    ];
    let mut args = vec![
        "train",
        "--out",
        &p_model,
        "--seed",
        "1",
        "--epochs",
        "4",
        "--batch-size",
        "32",
    ];
    args.extend(data);
    args.extend(MODEL);
    let (code, err) = mmcvae(&args);
    assert_eq!(code, 0, "{err}");
    assert_eq!(lines(&dir.path().join("model/train_log.jsonl")).len(), 4);
    let cfg: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("model/config.json")).unwrap())
            .unwrap();
    assert_eq!(cfg["train"]["epochs"], 4);
    assert_eq!(cfg["train"]["seed"], 1);
    assert_eq!(cfg["model"]["hidden_dim"], 16);

    let ckpt = p("model/model.ckpt");
    let mut args = vec![
        "embed",
        "--out",
        &p_emb,
        "--checkpoint",
        &ckpt,
        "--pca",
        "--plot",
    ];
    args.extend(data);
    let (code, err) = mmcvae(&args);
    assert_eq!(code, 0, "{err}");
    let emb = lines(&dir.path().join("emb/embeddings.csv"));
    assert_eq!(
        emb[0],
        "origin,label,z0,z1,z2,z3,s0,s1,z_pc1,z_pc2,s_pc1,s_pc2"
    );
    assert_eq!(emb.len(), 221);
    assert!(emb[1].starts_with("target,"));
    assert!(emb[220].starts_with("background,,"));
    for f in ["z_scatter.svg", "s_scatter.svg"] {
        assert!(fs::read_to_string(dir.path().join("emb").join(f))
            .unwrap()
            .starts_with("<svg"));
    }

    let mut args = vec![
        "evaluate",
        "--out",
        &p_eval,
        "--checkpoint",
        &ckpt,
        "--n-seeds",
        "2",
        "--seed",
        "5",
    ];
    args.extend(data);
    let (code, err) = mmcvae(&args);
    assert_eq!(code, 0, "{err}");
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("eval/report.json")).unwrap())
            .unwrap();
    assert_eq!(report["seeds"], serde_json::json!([5, 6]));
    let acc = report["metrics"]["logistic_s_class"]["mean"]
        .as_f64()
        .unwrap();
    assert!((0.0..=1.0).contains(&acc));
    let csv = lines(&dir.path().join("eval/report.csv"));
    assert_eq!(csv[0], "metric,mean,std,seed_5,seed_6");

    let mut args = vec![
        "generate",
        "--out",
        &p_gen,
        "--checkpoint",
        &ckpt,
        "--n-rows",
        "7",
    ];
    args.extend(data);
    let (code, err) = mmcvae(&args);
    assert_eq!(code, 0, "{err}");
    for f in [
        "recon_both.csv",
        "recon_background_only.csv",
        "recon_salient_only.csv",
    ] {
        let rows = lines(&dir.path().join("gen").join(f));
        assert_eq!(rows.len(), 8, "{f}");
        assert_eq!(rows[0].split(',').count(), 11);
    }

    let mut args = vec![
        "sweep",
        "--out",
        &p_sweep,
        "--epochs",
        "2",
        "--lambda1-grid",
        "0,10",
        "--lambda2-grid",
        "0",
        "--plot",
    ];
    args.extend(data);
    args.extend(MODEL);
    let (code, err) = mmcvae(&args);
    assert_eq!(code, 0, "{err}");
    let sweep = lines(&dir.path().join("sweep/sweep.csv"));
    assert_eq!(sweep.len(), 3);
    assert_eq!(sweep[0], "lambda1,lambda2,logistic_s_class");
    assert!(sweep[1].starts_with("0.0,0.0,"));
    assert!(dir.path().join("sweep/sweep.svg").exists());
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    fs::write(
        &cfg,
        r#"{"synth": {"n_target": 30, "m_background": 20, "d": 8, "seed": 9}}"#,
    )
    .unwrap();
    let out = dir.path().join("o");
    let (code, err) = mmcvae(&[
        "synth",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--m-background",
        "25",
    ]);
    assert_eq!(code, 0, "{err}");
    assert_eq!(lines(&out.join("target.csv")).len(), 31);
    assert_eq!(lines(&out.join("background.csv")).len(), 26);
    let echoed: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("config.json")).unwrap()).unwrap();
    assert_eq!(echoed["synth"]["seed"], 9);
    assert_eq!(echoed["synth"]["m_background"], 25);
}

#[test]
fn user_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let out = out.to_str().unwrap();
    // missing data paths
    assert_eq!(mmcvae(&["train", "--out", out]).0, 2);
    // nonexistent file
    assert_eq!(
        mmcvae(&[
            "train",
            "--out",
            out,
            "--target",
            "/nonexistent.csv",
            "--background",
            "/nonexistent.csv"
        ])
        .0,
        2
    );
    // unknown config key
    let cfg = dir.path().join("bad.json");
    fs::write(&cfg, r#"{"epochz": 3}"#).unwrap();
    assert_eq!(
        mmcvae(&["synth", "--out", out, "--config", cfg.to_str().unwrap()]).0,
        2
    );
    // invalid synthetic design
    assert_eq!(mmcvae(&["synth", "--out", out, "--d", "3"]).0, 2);
    // malformed --kernel value
    assert_eq!(
        mmcvae(&["train", "--out", out, "--kernel", "fixed:-2"]).0,
        2
    );
}

#[test]
fn divergent_training_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let p = |s: &str| dir.path().join(s).to_str().unwrap().to_owned();
    let (code, err) = mmcvae(&[
        "synth",
        "--out",
        &p("d"),
        "--n-target",
        "40",
        "--m-background",
        "40",
        "--d",
        "8",
        "--noise-sigma",
        "1e200",
    ]);
    assert_eq!(code, 0, "{err}");
    let (code, err) = mmcvae(&[
        "train",
        "--out",
        &p("m"),
        "--target",
        &p("d/target.csv"),
        "--background",
        &p("d/background.csv"),
        "--label-column",
        "class",
        "--epochs",
        "3",
        "--z-dim",
        "2",
        "--s-dim",
        "2",
        "--hidden-dim",
        "8",
    ]);
    assert_eq!(code, 3, "{err}");
    assert!(
        err.contains("non-finite") || err.contains("NaN") || err.contains("inf"),
        "{err}"
    );
}
