use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::Command;

use losguide::{CaseId, GuidanceLaw, Outcome, ScenarioSpec, StatsScope};
use losguide_cli::commands::{self, McOptions};
use losguide_cli::compare::{compare, render_table, write_compare_csv, CompareInput};
use losguide_cli::manifest::RunManifest;
use losguide_cli::output::{write_trajectory_csv, ECDF_HEADER, RECORDS_HEADER, TRAJECTORY_HEADER};
use losguide_cli::{canonical_file, exit_code, CliError, ScenarioFile};

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn golden(name: &str) -> String {
    std::fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)).unwrap()
}

fn scenario(name: &str) -> PathBuf {
    root().join("scenarios").join(name)
}

fn sim(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_sim"))
        .args(args)
        .env_remove("SIM_DEFAULT_SEED")
        .output()
        .unwrap()
}

/// Parses with a strict reader: fixed header, no ragged rows.
fn strict_rows(path: &Path) -> (Vec<String>, Vec<csv::StringRecord>) {
    let mut r = csv::ReaderBuilder::new().flexible(false).from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r.records().collect::<Result<Vec<_>, _>>().unwrap();
    (header, rows)
}

fn key_paths(v: &serde_json::Value, prefix: &str, out: &mut BTreeSet<String>) {
    match v {
        serde_json::Value::Object(m) => {
            for (k, child) in m {
                let p = if prefix.is_empty() {
                    k.clone()
                } else {
                    format!("{prefix}.{k}")
                };
                out.insert(p.clone());
                if k != "scenario" {
                    key_paths(child, &p, out);
                }
            }
        }
        serde_json::Value::Array(items) => {
            for item in items {
                key_paths(item, &format!("{prefix}[]"), out);
            }
        }
        _ => {}
    }
}

fn keys_of(path: &Path) -> String {
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    let mut set = BTreeSet::new();
    key_paths(&v, "", &mut set);
    set.into_iter().map(|k| k + "\n").collect()
}

#[test]
fn header_constants_match_golden_files() {
    assert_eq!(TRAJECTORY_HEADER.join(","), golden("trajectory_header.csv").trim_end());
    assert_eq!(RECORDS_HEADER.join(","), golden("records_header.csv").trim_end());
    assert_eq!(ECDF_HEADER.join(","), golden("ecdf_header.csv").trim_end());
}

#[test]
fn shipped_scenarios_are_canonical() {
    for case in CaseId::ALL {
        let path = scenario(&format!("{}.toml", case.as_str().to_lowercase()));
        let file = ScenarioFile::load(&path).unwrap();
        assert_eq!(file.to_spec().unwrap(), ScenarioSpec::canonical(case), "{case}");
        let mut bare = file.clone();
        bare.description = None;
        assert_eq!(bare, canonical_file(case));
    }
}

#[test]
fn config_round_trip_is_a_fixed_point() {
    for name in ["ra.toml", "fa.toml", "fae.toml", "rae.toml", "bistability.toml"] {
        let file = ScenarioFile::load(&scenario(name)).unwrap();
        let text = file.to_toml();
        let again = ScenarioFile::from_toml(&text).unwrap();
        assert_eq!(again, file, "{name}");
        assert_eq!(again.to_toml(), text, "{name}");
    }
}

#[test]
fn missing_key_names_key_and_line() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(scenario("ra.toml"))
        .unwrap()
        .replace("thrust_kn = 15.0\n", "");
    let path = dir.path().join("broken.toml");
    std::fs::write(&path, text).unwrap();
    let err = ScenarioFile::load(&path).unwrap_err();
    assert!(matches!(err, CliError::Config(_)));
    let msg = err.to_string();
    assert!(msg.contains("thrust_kn") && msg.contains("line"), "{msg}");

    let out = sim(&[
        "run",
        "--config",
        path.to_str().unwrap(),
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("thrust_kn"));
}

#[test]
fn exit_codes_partition_outcomes() {
    let codes: BTreeSet<i32> = Outcome::ALL.iter().map(|o| exit_code(*o)).collect();
    assert_eq!(codes.len(), Outcome::ALL.len());
    assert!(!codes.contains(&2));
    assert_eq!(exit_code(Outcome::Intercept), 0);
}

#[test]
fn run_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().to_str().unwrap();

    let ok = sim(&["run", "--case", "RA", "--log-trajectory", "--out-dir", out_dir]);
    assert_eq!(ok.status.code(), Some(0), "{}", String::from_utf8_lossy(&ok.stderr));
    let run: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("record.json")).unwrap()).unwrap();
    assert!(run["record"]["miss_distance"].as_f64().unwrap() < 10.0);
    let (header, rows) = strict_rows(&dir.path().join("trajectory.csv"));
    assert_eq!(header, TRAJECTORY_HEADER);
    assert!(rows.len() > 10);
    assert_eq!(keys_of(&dir.path().join("manifest.json")), golden("manifest_keys.txt"));

    let bist = scenario("bistability.toml");
    let diverge = sim(&[
        "run",
        "--config",
        bist.to_str().unwrap(),
        "--guidance",
        "iol",
        "--out-dir",
        out_dir,
    ]);
    assert_eq!(diverge.status.code(), Some(exit_code(Outcome::Divergence)));

    let short = dir.path().join("short.toml");
    let text = std::fs::read_to_string(scenario("ra.toml"))
        .unwrap()
        .replace("t_max_s = 60.0", "t_max_s = 1.0");
    std::fs::write(&short, text).unwrap();
    let timeout = sim(&["run", "--config", short.to_str().unwrap(), "--out-dir", out_dir]);
    assert_eq!(timeout.status.code(), Some(exit_code(Outcome::Timeout)));
}

#[test]
fn seed_comes_from_environment_when_absent() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_sim"))
        .args(["run", "--case", "FA", "--out-dir", dir.path().to_str().unwrap()])
        .env("SIM_DEFAULT_SEED", "1234")
        .output()
        .unwrap();
    assert!(out.status.code().is_some());
    let m: RunManifest =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m.seed, Some(1234));
}

#[test]
fn mc_outputs_are_deterministic_and_well_formed() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = |d: &Path| {
        vec![
            "mc".to_string(),
            "--case".into(),
            "FA".into(),
            "--n".into(),
            "12".into(),
            "--seed".into(),
            "9".into(),
            "--guidance".into(),
            "cats,pn".into(),
            "--out-dir".into(),
            d.to_str().unwrap().into(),
        ]
    };
    let run_a = Command::new(env!("CARGO_BIN_EXE_sim"))
        .args(args(a.path()))
        .arg("--jobs")
        .arg("1")
        .output()
        .unwrap();
    let run_b = Command::new(env!("CARGO_BIN_EXE_sim"))
        .args(args(b.path()))
        .arg("--jobs")
        .arg("3")
        .output()
        .unwrap();
    assert_eq!(
        run_a.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&run_a.stderr)
    );
    assert_eq!(run_b.status.code(), Some(0));
    for f in ["records.csv", "stats.json", "ecdf.csv"] {
        assert_eq!(
            std::fs::read(a.path().join(f)).unwrap(),
            std::fs::read(b.path().join(f)).unwrap(),
            "{f}"
        );
    }
    let (header, rows) = strict_rows(&a.path().join("records.csv"));
    assert_eq!(header, RECORDS_HEADER);
    assert_eq!(rows.len(), 24);
    let (header, rows) = strict_rows(&a.path().join("ecdf.csv"));
    assert_eq!(header, ECDF_HEADER);
    assert!(!rows.is_empty());
    assert_eq!(keys_of(&a.path().join("stats.json")), golden("stats_keys.txt"));
    let stats: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(a.path().join("stats.json")).unwrap()).unwrap();
    assert_eq!(stats["laws"].as_array().unwrap().len(), 2);

    let files: BTreeSet<String> = std::fs::read_dir(a.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    assert_eq!(files.iter().filter(|f| f.contains("manifest")).count(), 1);
}

#[test]
fn manifest_reproduces_outputs() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let out = sim(&[
        "mc",
        "--case",
        "RAE",
        "--n",
        "4",
        "--seed",
        "3",
        "--out-dir",
        a.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let m: RunManifest =
        serde_json::from_str(&std::fs::read_to_string(a.path().join("manifest.json")).unwrap()).unwrap();
    let echoed = b.path().join("scenario.toml");
    std::fs::write(&echoed, m.scenario.unwrap().to_toml()).unwrap();
    let report = commands::monte_carlo(
        &ScenarioFile::load(&echoed).unwrap(),
        &McOptions {
            n: 4,
            seed: m.seed.unwrap(),
            jobs: 1,
            laws: vec![GuidanceLaw::Cats, GuidanceLaw::Pn],
            scope: StatsScope::All,
        },
    )
    .unwrap();
    commands::write_mc(b.path(), &report).unwrap();
    for f in ["records.csv", "stats.json", "ecdf.csv"] {
        assert_eq!(
            std::fs::read(a.path().join(f)).unwrap(),
            std::fs::read(b.path().join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn n_one_gives_zero_std() {
    let report = commands::monte_carlo(
        &canonical_file(CaseId::RA),
        &McOptions {
            n: 1,
            seed: 5,
            jobs: 1,
            laws: vec![GuidanceLaw::Cats],
            scope: StatsScope::All,
        },
    )
    .unwrap();
    let b = &report.stats.laws[0];
    assert_eq!((b.time.std, b.miss.std, b.closing_velocity.std), (0.0, 0.0, 0.0));
}

#[test]
fn compare_identical_inputs_gives_zero_deltas() {
    let dir = tempfile::tempdir().unwrap();
    let out = sim(&[
        "mc",
        "--case",
        "FAE",
        "--n",
        "6",
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let stats = dir.path().join("stats.json");
    let cmp_dir = dir.path().join("cmp");
    let out = sim(&[
        "compare",
        stats.to_str().unwrap(),
        stats.to_str().unwrap(),
        "--out-dir",
        cmp_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let (header, rows) = strict_rows(&cmp_dir.join("compare.csv"));
    assert_eq!(header.join(","), golden("compare_header.csv").trim_end());
    assert_eq!(rows.len(), 2 * 7);
    for row in rows {
        if !row[6].is_empty() {
            assert_eq!(row[6].parse::<f64>().unwrap(), 0.0, "{row:?}");
        }
    }
    assert!(cmp_dir.join("manifest.json").exists());
}

#[test]
fn compare_renders_hand_entered_table() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden");
    let rows = compare(
        &CompareInput::load(&dir.join("ra_cats.json")).unwrap(),
        &CompareInput::load(&dir.join("ra_pn.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(render_table(&rows), golden("ra_table.txt"));
    assert!((rows[0].fail_percent.delta().unwrap() - (2.2982 - 0.3997)).abs() < 1e-12);
    let tmp = tempfile::tempdir().unwrap();
    write_compare_csv(&tmp.path().join("c.csv"), &rows).unwrap();
}

#[test]
fn compare_names_missing_metric() {
    let text = golden("ra_cats.json").replace("\"miss\"", "\"mis\"");
    let err = CompareInput::from_json(&text, "left.json").unwrap_err();
    assert!(matches!(err, CliError::Schema { .. }));
    let msg = err.to_string();
    assert!(msg.contains("`miss`") && msg.contains("left.json"), "{msg}");
}

#[test]
fn compare_rejects_mismatched_law_sets() {
    let two = CompareInput::from_json(
        &golden("ra_cats.json").replace(
            "]\n}",
            &format!(
                ", {}]}}",
                golden("ra_pn.json")
                    .split("[")
                    .nth(1)
                    .unwrap()
                    .split("]")
                    .next()
                    .unwrap()
            ),
        ),
        "two",
    )
    .unwrap();
    let one = CompareInput::load(&Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/ra_cats.json")).unwrap();
    assert_eq!(two.laws.len(), 2);
    assert!(compare(&two, &one).is_err());
    assert_eq!(compare(&two, &two).unwrap().len(), 2);
}

#[test]
fn bistability_demo_shares_evader_and_splits_outcomes() {
    let file = ScenarioFile::load(&scenario("bistability.toml")).unwrap();
    let report = commands::bistability(&file, 42, 10).unwrap();
    assert!(report.adverse());
    assert_eq!(report.baseline.record.outcome, Outcome::Divergence);
    assert_eq!(report.cats.record.outcome, Outcome::Intercept);

    let dir = tempfile::tempdir().unwrap();
    commands::write_bistability(dir.path(), &report).unwrap();
    let (_, base) = strict_rows(&dir.path().join(commands::DEMO_BASELINE_FILE));
    let (_, cats) = strict_rows(&dir.path().join(commands::DEMO_CATS_FILE));
    let evader_cols = 7..13;
    for (a, b) in base.iter().zip(&cats) {
        for c in evader_cols.clone() {
            assert_eq!(a[c].to_string(), b[c].to_string());
        }
    }
    let log = report.cats.log.as_ref().unwrap();
    let norm = |s: &losguide::sim::TrajectorySample| s.y[0].hypot(s.y[1]);
    let (peak_at, peak) = log
        .samples
        .iter()
        .enumerate()
        .map(|(i, s)| (i, norm(s)))
        .fold((0, 0.0), |a, b| if b.1 > a.1 { b } else { a });
    let settled = log.samples[peak_at..]
        .iter()
        .position(|s| norm(s) < 1e-2 * peak)
        .unwrap()
        + peak_at;
    for w in log.samples[peak_at..=settled].windows(2) {
        assert!(norm(&w[1]) <= norm(&w[0]), "t = {}", w[1].t);
    }
    assert!(log.samples[settled..]
        .iter()
        .filter(|s| s.view.range > 1000.0)
        .all(|s| norm(s) < 1e-2 * peak));
    write_trajectory_csv(&dir.path().join("again.csv"), log).unwrap();
}
