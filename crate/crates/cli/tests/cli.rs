//! End-to-end tests of the command-line interface, driven through the
//! committed example files in data/.

use nullgame::io;
use nullgame::{ClassicalStrategy, FiniteStrategy, GameSpec, MomentProblem, SolveOptions};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn data_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nullgame"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_json(output: &Output) -> serde_json::Value {
    serde_json::from_slice(&output.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not json: {e}\n{}",
            String::from_utf8_lossy(&output.stdout)
        )
    })
}

fn exit_code(output: &Output) -> i32 {
    output.status.code().expect("no signal")
}

fn superposition_strategy() -> FiniteStrategy {
    let alphabet = nullgame::Alphabet::new(2, 2);
    let p = DMatrix::from_diagonal(&DVector::from_vec(vec![
        Complex64::ONE,
        Complex64::ZERO,
    ]));
    let amp = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let psi = DVector::from_vec(vec![amp, amp]);
    FiniteStrategy::new(alphabet, vec![p.clone(), p.clone()], vec![p.clone(), p], psi).unwrap()
}

fn write_data_files(dir: &Path) {
    io::save_game(dir.join("chsh.game"), &GameSpec::chsh()).unwrap();
    io::save_game(dir.join("equality.game"), &GameSpec::equality(2)).unwrap();
    io::save_game(dir.join("allforbidden.game"), &GameSpec::all_forbidden(1, 1)).unwrap();
    io::save_strategy(
        dir.join("equality_superposition.strategy"),
        &superposition_strategy(),
    )
    .unwrap();
    io::save_strategy(dir.join("chsh_optimal.strategy"), &nullgame::strategy::chsh_optimal())
        .unwrap();
    io::save_classical(
        dir.join("equality.classical"),
        &ClassicalStrategy::new(vec![0, 0], vec![0, 0]),
    )
    .unwrap();

    let game = GameSpec::chsh();
    let problem = MomentProblem::new(&game, 1).unwrap();
    let nullgame::SolveStatus::Infeasible(ray) =
        nullgame::solve(&problem, &SolveOptions::default()).status
    else {
        panic!("expected refutation");
    };
    let cert = nullgame::extract_certificate(&ray, &problem, 1e-6).unwrap();
    io::save_certificate(dir.join("chsh_degree1.certificate"), &cert).unwrap();
}

/// Rewrites the committed example files. Run manually after changing the
/// formats or the constructions:
/// `cargo test -p nullgame-cli --test cli regenerate_data -- --ignored`
#[test]
#[ignore]
fn regenerate_data() {
    let dir = data_dir();
    std::fs::create_dir_all(&dir).unwrap();
    write_data_files(&dir);
}

#[test]
fn data_files_are_current() {
    let fresh = tempfile::tempdir().unwrap();
    write_data_files(fresh.path());
    for entry in std::fs::read_dir(fresh.path()).unwrap() {
        let entry = entry.unwrap();
        let name = entry.file_name();
        let committed = data_dir().join(&name);
        let expected = std::fs::read(entry.path()).unwrap();
        let actual = std::fs::read(&committed)
            .unwrap_or_else(|e| panic!("missing {}: {e}", committed.display()));
        assert_eq!(
            expected,
            actual,
            "{} is stale, regenerate with the ignored test",
            name.to_string_lossy()
        );
    }
}

#[test]
fn classical_finds_equality_strategy() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("found.classical");
    let game = data_dir().join("equality.game");
    let output = run(&[
        "classical",
        game.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--machine",
    ]);
    assert_eq!(exit_code(&output), 0);
    let report = stdout_json(&output);
    assert_eq!(report["outcome"], "found");
    assert_eq!(report["command"], "classical");
    assert_eq!(report["inputs"]["game"]["sha256"].as_str().unwrap().len(), 64);
    let strategy = io::load_classical(&out).unwrap();
    assert!(GameSpec::equality(2).is_perfect(&strategy).unwrap());
}

#[test]
fn classical_reports_chsh_value() {
    let game = data_dir().join("chsh.game");
    let output = run(&["classical", game.to_str().unwrap()]);
    assert_eq!(exit_code(&output), 2);
    let text = String::from_utf8_lossy(&output.stdout);
    assert!(text.contains("no perfect classical strategy"), "{text}");
    assert!(text.contains("classical value = 3/4"), "{text}");
    assert!(text.contains("wall time:"), "{text}");
}

#[test]
fn certify_refutes_chsh_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let cert_path = dir.path().join("chsh.certificate");
    let game = data_dir().join("chsh.game");
    let output = run(&[
        "certify",
        game.to_str().unwrap(),
        "--degree",
        "1",
        "--exact",
        "--out",
        cert_path.to_str().unwrap(),
        "--machine",
    ]);
    assert_eq!(exit_code(&output), 2, "{}", String::from_utf8_lossy(&output.stderr));
    let report = stdout_json(&output);
    assert_eq!(report["outcome"], "infeasible");
    assert_eq!(report["details"]["degree"], 1);
    assert_eq!(report["details"]["exact"]["verified"], true);
    assert!(report["details"]["sound_margin"].as_f64().unwrap() > 0.5);

    let cert = io::load_certificate(&cert_path).unwrap();
    let verification = cert.verify_float(&GameSpec::chsh()).unwrap();
    assert!(verification.is_sound());
}

#[test]
fn certify_emits_identical_certificates_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let game = data_dir().join("chsh.game");
    let paths = [dir.path().join("a.cert"), dir.path().join("b.cert")];
    for p in &paths {
        let output = run(&[
            "certify",
            game.to_str().unwrap(),
            "--degree",
            "1",
            "--out",
            p.to_str().unwrap(),
        ]);
        assert_eq!(exit_code(&output), 2);
    }
    assert_eq!(
        std::fs::read(&paths[0]).unwrap(),
        std::fs::read(&paths[1]).unwrap()
    );
}

#[test]
fn certify_feasible_game_hands_over_moments_to_gns() {
    let dir = tempfile::tempdir().unwrap();
    let moments = dir.path().join("equality.moments");
    let game = data_dir().join("equality.game");
    let output = run(&[
        "certify",
        game.to_str().unwrap(),
        "--degree",
        "2",
        "--moments-out",
        moments.to_str().unwrap(),
        "--machine",
    ]);
    assert_eq!(exit_code(&output), 0, "{}", String::from_utf8_lossy(&output.stderr));
    let report = stdout_json(&output);
    assert_eq!(report["outcome"], "feasible");
    assert_eq!(report["details"]["feasible_degree"], 2);

    let output = run(&[
        "gns",
        moments.to_str().unwrap(),
        game.to_str().unwrap(),
        "--machine",
    ]);
    assert_eq!(exit_code(&output), 0, "{}", String::from_utf8_lossy(&output.stderr));
    let report = stdout_json(&output);
    assert_eq!(report["outcome"], "pass");
    assert!(report["details"]["factor_residual"].as_f64().unwrap() < 1e-8);
    assert!(report["details"]["rank"].as_u64().unwrap() >= 1);
}

#[test]
fn gns_reconstructs_classical_moments_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let moments_path = dir.path().join("classical.moments");
    let game = GameSpec::equality(2);
    let strategy = ClassicalStrategy::new(vec![1, 0], vec![1, 0]);
    let moments = nullgame::MomentVector::from_classical(&strategy, game.alphabet(), 2);
    io::save_moments(&moments_path, &moments).unwrap();
    let game_path = data_dir().join("equality.game");
    let out = dir.path().join("reconstructed.strategy");
    let chained = dir.path().join("chained.classical");
    let output = run(&[
        "gns",
        moments_path.to_str().unwrap(),
        game_path.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--extract",
        "--classical-out",
        chained.to_str().unwrap(),
        "--machine",
    ]);
    assert_eq!(exit_code(&output), 0, "{}", String::from_utf8_lossy(&output.stderr));
    let report = stdout_json(&output);
    assert_eq!(report["outcome"], "pass");
    assert_eq!(report["details"]["flat"], true);
    assert_eq!(report["details"]["rank"], 1);
    assert!(report["details"]["invalid_mass"].as_f64().unwrap() < 1e-10);
    assert_eq!(report["details"]["extraction"]["u"], serde_json::json!([1, 0]));

    let reconstructed = io::load_strategy(&out).unwrap();
    assert!(reconstructed.validate(&game).unwrap().passes(1e-8));
    let classical = io::load_classical(&chained).unwrap();
    assert!(game.is_perfect(&classical).unwrap());
}

#[test]
fn validate_classifies_strategies() {
    let eq_game = data_dir().join("equality.game");
    let chsh_game = data_dir().join("chsh.game");
    let superposition = data_dir().join("equality_superposition.strategy");
    let optimal = data_dir().join("chsh_optimal.strategy");

    let output = run(&[
        "validate",
        superposition.to_str().unwrap(),
        eq_game.to_str().unwrap(),
        "--machine",
    ]);
    assert_eq!(exit_code(&output), 0);
    let report = stdout_json(&output);
    assert_eq!(report["outcome"], "pass");
    assert_eq!(report["details"]["classification"], "perfect");

    let output = run(&[
        "validate",
        optimal.to_str().unwrap(),
        chsh_game.to_str().unwrap(),
        "--machine",
    ]);
    assert_eq!(exit_code(&output), 2);
    let report = stdout_json(&output);
    assert_eq!(report["outcome"], "fail");
    assert_eq!(report["details"]["classification"], "imperfect");
    let winning = report["details"]["winning_probability"].as_f64().unwrap();
    assert!((winning - 0.8535533903).abs() < 1e-6, "{winning}");
}

#[test]
fn validate_accepts_deterministic_strategy_files() {
    let eq_game = data_dir().join("equality.game");
    let chsh_game = data_dir().join("chsh.game");
    let classical = data_dir().join("equality.classical");

    let output = run(&[
        "validate",
        classical.to_str().unwrap(),
        eq_game.to_str().unwrap(),
        "--machine",
    ]);
    assert_eq!(exit_code(&output), 0);
    let report = stdout_json(&output);
    assert_eq!(report["outcome"], "pass");
    assert_eq!(report["details"]["classification"], "perfect");
    assert_eq!(report["details"]["winning_probability"], 1.0);

    let output = run(&[
        "validate",
        classical.to_str().unwrap(),
        chsh_game.to_str().unwrap(),
        "--machine",
    ]);
    assert_eq!(exit_code(&output), 2);
    let report = stdout_json(&output);
    assert_eq!(report["outcome"], "fail");
    assert_eq!(report["details"]["classification"], "imperfect");
    assert_eq!(report["details"]["winning_probability"], 0.75);

    let dir = tempfile::tempdir().unwrap();
    let junk = dir.path().join("junk.strategy");
    std::fs::write(&junk, "{\"neither\": true}").unwrap();
    let output = run(&[
        "validate",
        junk.to_str().unwrap(),
        eq_game.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&output), 1);
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(
        stderr.contains("neither a finite-dimensional nor a deterministic strategy"),
        "{stderr}"
    );
}

#[test]
fn usage_errors_exit_one_not_two() {
    let game = data_dir().join("chsh.game");
    let output = run(&["certify", game.to_str().unwrap(), "--degres", "1"]);
    assert_eq!(exit_code(&output), 1);
    let output = run(&["nosuchcommand"]);
    assert_eq!(exit_code(&output), 1);
    let output = run(&["--help"]);
    assert_eq!(exit_code(&output), 0);
    let output = run(&["--version"]);
    assert_eq!(exit_code(&output), 0);
}

#[test]
fn extract_round_trips_superposition_strategy() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("extracted.classical");
    let game = data_dir().join("equality.game");
    let strategy = data_dir().join("equality_superposition.strategy");
    let output = run(&[
        "extract",
        strategy.to_str().unwrap(),
        game.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--machine",
    ]);
    assert_eq!(exit_code(&output), 0, "{}", String::from_utf8_lossy(&output.stderr));
    let report = stdout_json(&output);
    assert_eq!(report["outcome"], "pass");
    assert!(report["details"]["min_amplitude"].as_f64().unwrap() > 0.4);
    assert_eq!(report["details"]["correlations"].as_array().unwrap().len(), 4);
    let extracted = io::load_classical(&out).unwrap();
    assert!(GameSpec::equality(2).is_perfect(&extracted).unwrap());
}

#[test]
fn extract_rejects_imperfect_strategy() {
    let game = data_dir().join("chsh.game");
    let strategy = data_dir().join("chsh_optimal.strategy");
    let output = run(&[
        "extract",
        strategy.to_str().unwrap(),
        game.to_str().unwrap(),
        "--machine",
    ]);
    assert_eq!(exit_code(&output), 2);
    let report = stdout_json(&output);
    assert_eq!(report["outcome"], "fail");
    assert!(report["message"].as_str().unwrap().contains("validation"));
}

#[test]
fn malformed_input_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("broken.game");
    std::fs::write(&path, "{").unwrap();
    let output = run(&["classical", path.to_str().unwrap(), "--machine"]);
    assert_eq!(exit_code(&output), 1);
    let report = stdout_json(&output);
    assert_eq!(report["outcome"], "error");

    let output = run(&["classical", path.to_str().unwrap()]);
    assert_eq!(exit_code(&output), 1);
    assert!(String::from_utf8_lossy(&output.stderr).contains("error:"));
}

#[test]
fn committed_certificate_verifies() {
    let cert = io::load_certificate(data_dir().join("chsh_degree1.certificate")).unwrap();
    let game = io::load_game(data_dir().join("chsh.game")).unwrap();
    let float = cert.verify_float(&game).unwrap();
    assert!(float.is_sound());
    let exact = cert.verify_exact(&game, 1_000_000).unwrap();
    exact.recheck().unwrap();
}
