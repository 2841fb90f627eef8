use std::path::Path;
use std::process::{Command, Output};

use lindblad_rate::qubit::PRESET_NAMES;
use lre::config::{parse_config, ConfigError, Engine};
use lre::run::{evolve_table, example_table};
use lre::table::OutputTable;

fn lre(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lre"))
        .args(args)
        .output()
        .expect("spawn lre")
}

fn lre_threads(args: &[&str], threads: usize) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lre"))
        .args(args)
        .env("RAYON_NUM_THREADS", threads.to_string())
        .output()
        .expect("spawn lre")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn table(out: &Output) -> OutputTable {
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    OutputTable::read_csv(out.stdout.as_slice()).unwrap()
}

const PAULI_ZERO_BLOCK: &str = "[[[0,0],[0,0],[0,0],[0,0]],[[0,0],[0,0],[0,0],[0,0]],[[0,0],[0,0],[0,0],[0,0]],[[0,0],[0,0],[0,0],[0,0]]]";

fn zero_model(weights: &str) -> String {
    format!(
        r#"{{
  "model": {{"inline": {{
    "basis": "pauli",
    "weights": {weights},
    "rates": [{{"to": 0, "from": 0, "block": {PAULI_ZERO_BLOCK}}}]
  }}}},
  "initial_state": [[[0.7,0],[0.1,0.2]],[[0.1,-0.2],[0.3,0]]],
  "grid": {{"stop": 5.0, "count": 6}}
}}"#
    )
}

#[test]
fn preset_config_is_valid() {
    let cfg = parse_config(
        r#"{"model": {"preset": "fig2"}, "grid": {"stop": 10, "count": 11}, "method": "adaptive"}"#,
    )
    .unwrap();
    assert_eq!(cfg.grid.len(), 11);
    assert_eq!(cfg.engine, Engine::Deterministic);
    assert!(lre::run::validation(&cfg).passed);
}

#[test]
fn bad_weights_name_the_field() {
    let err = parse_config(&zero_model("[0.5, 0.6]")).unwrap_err();
    assert_eq!(err.path(), Some("model.inline.weights"), "{err}");
    assert!(err.to_string().contains("1.1"));
    let err = parse_config(&zero_model("[1.5, -0.5]")).unwrap_err();
    assert_eq!(err.path(), Some("model.inline.weights[1]"));
}

#[test]
fn schema_and_syntax_errors_are_located() {
    let err = parse_config(r#"{"model": {"preset": "fig2"}, "grid": {"stop": "x", "count": 3}}"#)
        .unwrap_err();
    assert_eq!(err.path(), Some("grid.stop"), "{err}");
    let err = parse_config(
        r#"{"model": {"preset": "fig2"}, "grid": {"stop": 1, "count": 3}, "colour": 1}"#,
    )
    .unwrap_err();
    assert!(err.to_string().contains("colour"));
    let err = parse_config("{\n  \"model\": {\"preset\": \"fig2\"},\n  \"grid\": [\n").unwrap_err();
    assert!(
        matches!(err, ConfigError::Syntax { line: 4, .. }),
        "{err:?}"
    );
    let err = parse_config(r#"{"model": {"preset": "fig9"}, "grid": {"stop": 1, "count": 3}}"#)
        .unwrap_err();
    assert_eq!(err.path(), Some("model.preset"));
}

#[test]
fn stochastic_engine_requires_a_seed() {
    let text = r#"{"model": {"preset": "fig1-lower"}, "grid": {"stop": 1, "count": 3}, "engine": "stochastic"}"#;
    assert_eq!(parse_config(text).unwrap_err().path(), Some("seed"));
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", text);
    assert_eq!(lre(&["evolve", "--config", &cfg]).status.code(), Some(2));
    assert!(
        lre(&["evolve", "--config", &cfg, "--seed", "1", "--n", "50"])
            .status
            .success()
    );
    assert_eq!(lre(&["traj", "--preset", "fig2"]).status.code(), Some(2));
    let zero_n = lre(&["traj", "--preset", "fig2", "--seed", "1", "--n", "0"]);
    assert_eq!(zero_n.status.code(), Some(2));
}

#[test]
fn exit_codes() {
    assert_eq!(
        lre(&["validate", "--preset", "fig2"]).status.code(),
        Some(0)
    );
    assert_eq!(lre(&["validate"]).status.code(), Some(1));
    assert_eq!(lre(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(lre(&["--help"]).status.code(), Some(0));
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.json");
    let out = lre(&["evolve", "--config", missing.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let bad_out = dir.path().join("no/such/dir/out.csv");
    let out = lre(&[
        "evolve",
        "--preset",
        "fig2",
        "--out",
        bad_out.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn validate_rejects_non_cp_model() {
    // Rate block diag(0, -0.1, 0, 0) on the coupling from channel 1 to 0.
    let text = r#"{
  "model": {"inline": {
    "basis": "pauli",
    "weights": [0.5, 0.5],
    "rates": [{"to": 0, "from": 1, "block": [[[0,0],[0,0],[0,0],[0,0]],[[0,0],[-0.1,0],[0,0],[0,0]],[[0,0],[0,0],[0,0],[0,0]],[[0,0],[0,0],[0,0],[0,0]]]}]
  }},
  "initial_state": [[[1,0],[0,0]],[[0,0],[0,0]]],
  "grid": {"stop": 1, "count": 2}
}"#;
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", text);
    let out = lre(&["validate", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(
        stdout.contains("a[0<-1]") && stdout.contains("-1.0"),
        "{stdout}"
    );
}

#[test]
fn zero_model_gives_constant_rows() {
    let cfg = parse_config(&zero_model("[1.0]")).unwrap();
    let t = evolve_table(&cfg).unwrap();
    assert_eq!(t.rows.len(), 6);
    for row in &t.rows {
        assert_eq!(&row[1..], &t.rows[0][1..]);
    }
    assert_eq!(t.column("re_rho_01").unwrap()[3], 0.1);
}

#[test]
fn fig2_example_final_row() {
    let out = lre(&["example", "fig2"]);
    let t = table(&out);
    assert_eq!(t.rows.len(), 121);
    let last = t.rows.last().unwrap();
    let h = last[t.column_index("h_evolve").unwrap()];
    assert!((h + 0.6545).abs() < 1e-3, "{h}");
    assert_eq!(last[0], 30.0);
}

#[test]
fn example_residuals_within_tolerance() {
    for name in PRESET_NAMES {
        let cfg = lre::RunConfig::for_preset(name).unwrap();
        let ex = example_table(&cfg, false).unwrap();
        assert!(
            ex.max_residual < cfg.tolerances.residual,
            "{name}: {}",
            ex.max_residual
        );
        let col = ex.table.column("residual").unwrap();
        assert!(col.iter().all(|&r| r <= ex.max_residual));
    }
}

#[test]
fn csv_roundtrip_is_bit_exact() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out.csv");
    let out = lre(&[
        "evolve",
        "--preset",
        "fig1-lower",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(&path).unwrap();
    let t = OutputTable::read_csv(text.as_bytes()).unwrap();
    assert_eq!(t.to_csv_string(), text);
    let direct = evolve_table(&lre::RunConfig::for_preset("fig1-lower").unwrap()).unwrap();
    for (a, b) in t.rows.iter().flatten().zip(direct.rows.iter().flatten()) {
        assert_eq!(a.to_bits(), b.to_bits());
    }
}

#[test]
fn empty_grid_writes_header_only() {
    let text = r#"{"model": {"preset": "fig2"}, "grid": {"stop": 1, "count": 0}}"#;
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", text);
    let out = lre(&["evolve", "--config", &cfg]);
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert_eq!(stdout.lines().count(), 1);
    assert!(stdout.starts_with("t,p0,p1,re_rho_01"));
}

#[test]
fn se_columns_iff_stochastic() {
    let base = r#""model": {"preset": "fig1-lower"}, "grid": {"stop": 2, "count": 3}, "seed": 4, "trajectories": 200"#;
    for (engine, has_se, has_mc) in [
        ("deterministic", false, false),
        ("stochastic", true, false),
        ("both", true, true),
    ] {
        let cfg = parse_config(&format!(r#"{{{base}, "engine": "{engine}"}}"#)).unwrap();
        let t = evolve_table(&cfg).unwrap();
        assert_eq!(
            t.columns.iter().any(|c| c.starts_with("se_")),
            has_se,
            "{engine}"
        );
        assert_eq!(
            t.columns.iter().any(|c| c.starts_with("mc_")),
            has_mc,
            "{engine}"
        );
        assert_eq!(
            t.columns.iter().any(|c| c == "min_eig"),
            engine != "stochastic"
        );
    }
}

#[test]
fn stochastic_output_is_reproducible() {
    let args = ["traj", "--preset", "fig2", "--seed", "17", "--n", "2000"];
    let one = lre_threads(&args, 1);
    let four = lre_threads(&args, 4);
    assert!(one.status.success());
    assert_eq!(one.stdout, four.stdout);
    assert_eq!(one.stdout, lre_threads(&args, 3).stdout);
    let other = lre_threads(
        &["traj", "--preset", "fig2", "--seed", "18", "--n", "2000"],
        4,
    );
    assert_ne!(one.stdout, other.stdout);
}

#[test]
fn log_grid_and_kernel_points() {
    let cfg = parse_config(
        r#"{"model": {"preset": "fig1-upper"}, "grid": {"stop": 100, "count": 4, "spacing": "log", "first": 0.1},
            "kernel_points": [[0.5, 0], [1, 1]]}"#,
    )
    .unwrap();
    assert_eq!(cfg.grid.len(), 4);
    assert!((cfg.grid[2] - 10f64.powf(0.5)).abs() < 1e-12);
    let k = lre::run::kernel_table(&cfg).unwrap();
    assert_eq!(k.rows.len(), 2);
    assert_eq!(k.columns.len(), 5 + 2 * 16);
}

#[test]
fn walk_source_matches_preset() {
    // Dephasing walk written out by hand: fig1-lower parameters.
    let text = r#"{
  "model": {"walk": {
    "weights": [0.1, 0.9],
    "hamiltonian": [[[0,0],[0,0]],[[0,0],[0,0]]],
    "dissipators": [[{"rate": 0.05, "op": [[[1,0],[0,0]],[[0,0],[-1,0]]]}],
                    [{"rate": 0.5,  "op": [[[1,0],[0,0]],[[0,0],[-1,0]]]}]],
    "rates": [[0, 1], [0.1, 0]],
    "jumps": [[ [[[1,0],[0,0]],[[0,0],[-1,0]]] ], [ [[[1,0],[0,0]],[[0,0],[-1,0]]] ]],
    "basis": "pauli"
  }},
  "initial_state": [[[0.5,0],[0.5,0]],[[0.5,0],[0.5,0]]],
  "grid": {"stop": 10, "count": 11}
}"#;
    let walk = evolve_table(&parse_config(text).unwrap()).unwrap();
    let preset =
        parse_config(r#"{"model": {"preset": "fig1-lower"}, "grid": {"stop": 10, "count": 11}}"#)
            .unwrap();
    let preset = evolve_table(&preset).unwrap();
    assert_eq!(walk.columns, preset.columns);
    for (a, b) in walk.rows.iter().flatten().zip(preset.rows.iter().flatten()) {
        assert!((a - b).abs() < 1e-10, "{a} vs {b}");
    }
}

#[test]
fn stationary_report_lists_sectors() {
    let out = lre(&["stationary", "--preset", "fig2"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(
        text.contains("channel 0 trace: 9.090909090909e-1"),
        "{text}"
    );
    assert!(text.contains("coherence->coherence"));
}
