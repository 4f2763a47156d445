use std::path::Path;
use std::process::{Command, Output};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use qcoin::automaton::ClassicalCoinAutomaton;
use qcoin::io::{
    automaton_from_json, channel_from_json, channel_to_json, write_automaton, write_channel,
    Automaton, AutomatonJson,
};
use qcoin::random::{random_channel, random_quantum_automaton};
use qcoin::{mix, KrausChannel};

fn qcoin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qcoin"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json_stdout(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("JSON on stdout")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn random_automaton_round_trip_is_exact() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for kind in 0..4 {
        let a = random_quantum_automaton(3, kind, &mut rng);
        let text = serde_json::to_string(&AutomatonJson::from_quantum(&a)).unwrap();
        let Automaton::Quantum(b) = automaton_from_json(&text).unwrap() else {
            panic!("wrong kind");
        };
        assert_eq!(a.phi0().kraus(), b.phi0().kraus());
        assert_eq!(a.phi1().kraus(), b.phi1().kraus());
        assert_eq!(a.rho0().matrix(), b.rho0().matrix());
        assert_eq!(a.e_fair(), b.e_fair());
        assert_eq!(serde_json::to_string(&AutomatonJson::from_quantum(&b)).unwrap(), text);
    }
}

#[test]
fn random_channel_round_trip_is_exact() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..20 {
        let ch = random_channel(3, 2, &mut rng);
        let back = channel_from_json(&channel_to_json(&ch).unwrap()).unwrap();
        assert_eq!(ch.kraus(), back.kraus());
    }
}

#[test]
fn random_command_is_deterministic_and_valid() {
    let a = qcoin(&["random", "--dim", "4", "--num-kraus", "3", "--seed", "17"]);
    let b = qcoin(&["random", "--dim", "4", "--num-kraus", "3", "--seed", "17"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let c = qcoin(&["random", "--dim", "4", "--num-kraus", "3", "--seed", "18"]);
    assert_ne!(a.stdout, c.stdout);

    let scalar = json_stdout(&qcoin(&["random", "--dim", "1", "--num-kraus", "1"]));
    assert_eq!(scalar, serde_json::json!({"dim": 1, "kraus": [[[[1.0, 0.0]]]]}));
}

#[test]
fn generated_channels_pass_validation() {
    for seed in 0..100 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let ch = random_channel(4, 3, &mut rng);
        let text = channel_to_json(&ch).unwrap();
        let report = channel_from_json(&text).unwrap().validate().unwrap();
        assert!(report.tp_residual <= 1e-10, "seed {seed}: {}", report.tp_residual);
    }
}

#[test]
fn analyze_reports_block_structure() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("dep.json", KrausChannel::depolarizing(2), (1, 2, 0)),
        ("id.json", KrausChannel::identity(2), (4, 2, 0)),
        ("ad.json", KrausChannel::amplitude_damping(0.5).unwrap(), (1, 1, 1)),
    ];
    for (name, ch, (m, dim_r, dim_d)) in cases {
        let path = dir.path().join(name);
        write_channel(&path, &ch).unwrap();
        let v = json_stdout(&qcoin(&["analyze", path_str(&path)]));
        assert_eq!(v["m"], m, "{name}");
        assert_eq!(v["dim_R"], dim_r, "{name}");
        assert_eq!(v["dim_D"], dim_d, "{name}");
        assert_eq!(v["sum_mi_squared"], m, "{name}");
        assert_eq!(v["check_bn"], true, "{name}");
    }
    let dep = json_stdout(&qcoin(&["analyze", path_str(&dir.path().join("dep.json"))]));
    assert_eq!(dep["blocks"], serde_json::json!([{"m": 1, "d": 2}]));
    let id = json_stdout(&qcoin(&[
        "analyze",
        path_str(&dir.path().join("id.json")),
        "--decomposition",
    ]));
    assert_eq!(id["blocks"], serde_json::json!([{"m": 2, "d": 1}]));
    assert_eq!(id["decomposition"]["blocks"][0]["enclosure_bases"].as_array().unwrap().len(), 2);
}

#[test]
fn equiv_reports_matches_and_witnesses() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let a = random_channel(2, 1, &mut rng);
    let b = random_channel(2, 2, &mut rng);
    let write = |name: &str, ch: &KrausChannel| {
        let p = dir.path().join(name);
        write_channel(&p, ch).unwrap();
        p
    };
    let p3 = write("p3.json", &mix(&a, &b, 0.3).unwrap());
    let p7 = write("p7.json", &mix(&a, &b, 0.7).unwrap());
    let same = json_stdout(&qcoin(&["equiv", path_str(&p3), path_str(&p3)]));
    assert_eq!(same["equivalent"], true);

    let v = json_stdout(&qcoin(&["equiv", path_str(&p3), path_str(&p7)]));
    assert_eq!(v["equivalent"], true);
    let forward = v["forward"].as_array().unwrap();
    assert_eq!(forward.len(), 3);
    // K from the first channel carries √(1−p), from the second √p.
    let expected = [(0.7f64 / 0.3).sqrt(), (0.3f64 / 0.7).sqrt(), (0.3f64 / 0.7).sqrt()];
    for (m, e) in forward.iter().zip(expected) {
        assert_eq!(m["from"], m["to"]);
        assert!((m["ratio"][0].as_f64().unwrap() - e).abs() < 1e-9);
        assert!(m["ratio"][1].as_f64().unwrap().abs() < 1e-9);
    }

    let id = write("id.json", &KrausChannel::identity(2));
    let dep = write("dep.json", &KrausChannel::depolarizing(2));
    let w = json_stdout(&qcoin(&["equiv", path_str(&id), path_str(&dep)]));
    assert_eq!(w["equivalent"], false);
    assert_eq!(w["unmatched"], serde_json::json!({"channel": "first", "index": 0}));

    let big = write("big.json", &KrausChannel::identity(3));
    let out = qcoin(&["equiv", path_str(&id), path_str(&big)]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn sweep_csv_is_parseable() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("absorbing.json");
    let automaton = ClassicalCoinAutomaton::absorbing_example();
    write_automaton(&path, &AutomatonJson::from_classical(&automaton)).unwrap();
    let out_path = dir.path().join("sweep.csv");
    let out = qcoin(&[
        "sweep",
        path_str(&path),
        "--grid",
        "0:0.95:20",
        "--out",
        path_str(&out_path),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(&out_path)
        .unwrap();
    assert_eq!(reader.headers().unwrap(), vec!["p", "fix_dim", "f"]);
    let rows: Vec<(f64, usize, f64)> = reader
        .records()
        .map(|r| {
            let r = r.unwrap();
            (r[0].parse().unwrap(), r[1].parse().unwrap(), r[2].parse().unwrap())
        })
        .collect();
    assert_eq!(rows.len(), 20);
    assert_eq!(rows[0], (0.0, 2, 1.0));
    assert!(rows[1..].iter().all(|&(_, d, f)| d == 1 && f.abs() < 1e-9));
    let text = std::fs::read_to_string(&out_path).unwrap();
    assert!(text.contains("# constant_dim=true"));
    let jump: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("# max_adjacent_jump="))
        .unwrap()
        .parse()
        .unwrap();
    assert!((jump - 1.0).abs() < 1e-9);

    let json = json_stdout(&qcoin(&["sweep", path_str(&path), "--format", "json"]));
    assert_eq!(json["p_grid"].as_array().unwrap().len(), 19);
    assert_eq!(json["constant_dim"], true);
}

#[test]
fn simulate_summary_matches_averaged_channel() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("a.json");
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let a = random_quantum_automaton(2, 1, &mut rng);
    write_automaton(&path, &AutomatonJson::from_quantum(&a)).unwrap();
    let v = json_stdout(&qcoin(&[
        "simulate", path_str(&path), "--p", "0.4", "--steps", "300", "--runs", "100", "--seed", "5",
    ]));
    let mean = v["mean"].as_f64().unwrap();
    let se = v["std_error"].as_f64().unwrap();
    let f_t = v["f_t"].as_f64().unwrap();
    assert!((mean - f_t).abs() <= 4.0 * se + 1e-12);
}

#[test]
fn invalid_inputs_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"dim": 2, "kraus": [[[[1.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [0.5, 0.0]]]]}"#).unwrap();
    assert_eq!(qcoin(&["analyze", path_str(&bad)]).status.code(), Some(1));
    assert_eq!(qcoin(&["analyze", "/nonexistent/file.json"]).status.code(), Some(1));
    let ok = dir.path().join("ok.json");
    write_channel(&ok, &KrausChannel::identity(2)).unwrap();
    assert_eq!(qcoin(&["sweep", path_str(&ok)]).status.code(), Some(1));
    assert_eq!(qcoin(&["random", "--dim", "0"]).status.code(), Some(1));
    assert_eq!(qcoin(&["analyze", path_str(&ok), "--tol", "2"]).status.code(), Some(1));
    assert_ne!(qcoin(&["sweep", path_str(&ok), "--grid", "0.9:0.1:3"]).status.code(), Some(0));
}
