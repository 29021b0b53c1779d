use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ratelab::config::ExperimentConfig;
use ratelab_core::zoo::{CatalogEntry, InstanceSpec};

fn ratelab(args: &[&str], root: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ratelab"))
        .args(args)
        .env("RATELAB_ARTIFACT_ROOT", root)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(format!("{name}.toml"));
    std::fs::write(&p, body).unwrap();
    p
}

const SMALL_THETA1: &str = r#"
seed = 3
instance = "rkmm_theta1"

[schedule]
family = "constant"
alpha_bar = 1.0

[run]
k_max = 200
n = 100

[output]
export = 3

[[checks.fit]]
kind = "log_linear"
slope_max = 0.0
min_r2 = 0.95
"#;

#[test]
fn run_writes_layout_under_env_root() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "small", SMALL_THETA1);
    let out = ratelab(&["run", cfg.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let art = dir.path().join("small");
    for f in [
        "summary.json",
        "summary.txt",
        "trajectories/manifest.json",
        "trajectories/traj_0000.csv",
        "trajectories/traj_0002.csv",
        "audits/traj_0000.json",
        "audits/ensemble.json",
        "curves/h.csv",
        "curves/dist.csv",
    ] {
        assert!(art.join(f).is_file(), "missing {f}");
    }
    assert!(!art.join("trajectories/traj_0003.csv").exists());
    let text = std::fs::read_to_string(art.join("summary.txt")).unwrap();
    assert!(text.contains("fit_log_linear_h"), "{text}");
    assert!(text.contains("result      PASS"));
    let curve = std::fs::read_to_string(art.join("curves/h.csv")).unwrap();
    assert!(curve.starts_with("A,mean,q05,q50,q95\n"));
}

#[test]
fn summable_schedule_exits_2_with_field() {
    let dir = tempfile::tempdir().unwrap();
    let body = SMALL_THETA1.replace(
        "family = \"constant\"\nalpha_bar = 1.0",
        "family = \"poly_decay\"\nscale = 1.0\nexponent = 1.5",
    );
    let cfg = write_config(dir.path(), "bad", &body);
    let out = ratelab(&["run", cfg.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("schedule:") && err.contains("summable"), "{err}");
}

#[test]
fn failing_check_exits_3_and_names_it() {
    let dir = tempfile::tempdir().unwrap();
    let body = SMALL_THETA1.replace("slope_max = 0.0", "slope_min = 0.0");
    let cfg = write_config(dir.path(), "strict", &body);
    let out = ratelab(&["run", cfg.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("fit_log_linear_h"));
}

fn manifest_constants(art: &Path) -> [String; 3] {
    let m: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(art.join("trajectories/manifest.json")).unwrap()).unwrap();
    ["c1", "c2", "c3"].map(|k| m["constants"][k].to_string())
}

#[test]
fn replay_matches_in_process_audit_byte_for_byte() {
    let dir = tempfile::tempdir().unwrap();
    let art = dir.path().join("art");
    for name in ["rcd_quadratic", "synthetic_sqrt"] {
        let body = SMALL_THETA1.replace("rkmm_theta1", name).replace(
            "[[checks.fit]]\nkind = \"log_linear\"\nslope_max = 0.0\nmin_r2 = 0.95\n",
            "",
        );
        let cfg = write_config(dir.path(), name, &body);
        let out = ratelab(
            &["run", cfg.to_str().unwrap(), "--out", art.to_str().unwrap()],
            dir.path(),
        );
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
        let [c1, c2, c3] = manifest_constants(&art);
        for m in ["traj_0000", "traj_0002"] {
            let csv = art.join(format!("trajectories/{m}.csv"));
            let out = ratelab(
                &["audit", csv.to_str().unwrap(), "--c1", &c1, "--c2", &c2, "--c3", &c3],
                dir.path(),
            );
            assert_eq!(out.status.code(), Some(0));
            let in_process = std::fs::read(art.join(format!("audits/{m}.json"))).unwrap();
            assert_eq!(out.stdout, in_process, "{name}/{m}");
        }
    }
}

#[test]
fn corrupted_replay_exits_3_naming_descent() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("t.csv");
    // The gap rises from the second to the third row.
    std::fs::write(
        &csv,
        "k,h,g,step_sq,alpha,index,z,A\n0,1,1,0.5,1,0,1,0\n1,0.5,0.5,0.25,1,1,1,1\n2,0.9,0.5,0,1,,1,2\n",
    )
    .unwrap();
    let out = ratelab(
        &["audit", csv.to_str().unwrap(), "--c1", "1", "--c2", "1", "--c3", "1"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("audit_descent"));
}

#[test]
fn schema_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("empty.csv");
    std::fs::write(&csv, "").unwrap();
    let args = |p: &Path| {
        vec![
            "audit".to_string(),
            p.to_str().unwrap().to_string(),
            "--c1".into(),
            "1".into(),
            "--c2".into(),
            "1".into(),
            "--c3".into(),
            "1".into(),
        ]
    };
    let run = |a: Vec<String>| ratelab(&a.iter().map(String::as_str).collect::<Vec<_>>(), dir.path());
    assert_eq!(run(args(&csv)).status.code(), Some(2));

    std::fs::write(&csv, "k,h,g,step_sq,alpha,index,z,A\n0,1,1,0,1,,1,0\n1,1,1,0,1,,1,1\n").unwrap();
    let alphas = dir.path().join("alpha.txt");
    std::fs::write(&alphas, "1.0\n").unwrap();
    let mut a = args(&csv);
    a.extend(["--alpha-file".to_string(), alphas.to_str().unwrap().to_string()]);
    let out = run(a);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("1 stepsizes for 2 trajectory rows"));

    let mut a = args(&csv);
    a[3] = "0".into();
    assert_eq!(run(a).status.code(), Some(2));
}

#[test]
fn alpha_file_overrides_stepsizes() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("t.csv");
    // Descent holds with alpha = 1 but fails once alpha is 0.1: c1 / alpha
    // inflates the step term.
    std::fs::write(
        &csv,
        "k,h,g,step_sq,alpha,index,z,A\n0,1,1,0.5,1,0,1,0\n1,0.5,0,0,1,,1,1\n",
    )
    .unwrap();
    let base = ["audit", csv.to_str().unwrap(), "--c1", "1", "--c2", "1", "--c3", "1"];
    assert_eq!(ratelab(&base, dir.path()).status.code(), Some(0));
    let alphas = dir.path().join("alpha.txt");
    std::fs::write(&alphas, "# stepsizes\n0.1\n0.1\n").unwrap();
    let mut args = base.to_vec();
    args.extend(["--alpha-file", alphas.to_str().unwrap()]);
    assert_eq!(ratelab(&args, dir.path()).status.code(), Some(3));
}

#[test]
fn zoo_json_round_trips_through_config_loader() {
    let dir = tempfile::tempdir().unwrap();
    let out = ratelab(&["zoo", "--json"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let catalog: Vec<CatalogEntry> = serde_json::from_slice(&out.stdout).unwrap();
    let names: Vec<&str> = catalog.iter().map(|e| e.name.as_str()).collect();
    assert_eq!(names, ratelab_core::zoo::BUNDLED);
    for entry in &catalog {
        let table = toml::Value::try_from(&entry.instance).unwrap();
        let mut doc = toml::Table::new();
        doc.insert("seed".into(), toml::Value::Integer(1));
        doc.insert("instance".into(), table);
        let text = format!(
            "{}\n[schedule]\nfamily = \"constant\"\nalpha_bar = 1.0\n\n[run]\nk_max = 5\nn = 2\n",
            toml::to_string(&doc).unwrap()
        );
        let cfg = ExperimentConfig::parse(&text).unwrap_or_else(|e| panic!("{}: {e}", entry.name));
        assert_eq!(cfg.spec, entry.instance);
        assert_eq!(cfg.instance.constants(), entry.constants);
        if let InstanceSpec::Feasibility(_) = &entry.instance {
            // Unit weights: c1 = c3 = 1 and c2 is the relaxation rho.
            assert_eq!((entry.constants.c1, entry.constants.c3), (1.0, 1.0));
            let rho = entry.constants.c2;
            assert!((entry.p - rho / (2.0 - rho)).abs() < 1e-15);
        }
    }
}

#[test]
fn zoo_text_lists_every_instance() {
    let dir = tempfile::tempdir().unwrap();
    let out = ratelab(&["zoo"], dir.path());
    let text = String::from_utf8(out.stdout).unwrap();
    for name in ratelab_core::zoo::BUNDLED {
        assert!(text.contains(name));
    }
    assert!(text.contains("theta=1 ") && text.contains("kappa=0.75"));
}
