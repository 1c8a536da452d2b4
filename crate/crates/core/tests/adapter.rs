//! Wire-protocol tests against small Python adapters.

use std::path::{Path, PathBuf};
use std::time::Instant;

use bench_core::modelhost::{fit, AdapterSession, ModelSpec, ProbModel};
use bench_core::{BenchError, Matrix};

const SCRIPT: &str = r#"
import json, sys, time
mode = sys.argv[1]
log = open(sys.argv[2], "a") if len(sys.argv) > 2 else None
if mode == "exit":
    sys.exit(3)
fitted = False
for line in sys.stdin:
    if log:
        log.write(line)
        log.flush()
    msg = json.loads(line)
    cmd = msg["cmd"]
    if cmd == "handshake":
        print(json.dumps({"ok": True, "config": "toy-sum"}) if mode != "bad_handshake" else "hello", flush=True)
    elif cmd == "fit":
        if mode == "fit_error":
            print(json.dumps({"ok": False, "error": "cannot fit"}), flush=True)
        else:
            fitted = True
            print(json.dumps({"ok": True}), flush=True)
    elif cmd == "predict_proba":
        X = msg["X"]
        if mode == "crash":
            sys.exit(1)
        if mode == "hang":
            time.sleep(30)
        if not fitted:
            print(json.dumps({"ok": False, "error": "not fitted"}), flush=True)
            continue
        p = [sum(r) / len(r) for r in X]
        if mode == "out_of_range":
            p[-1] = 1.3
        if mode == "short":
            p = p[:-1]
        if mode == "extra_field":
            print(json.dumps({"ok": True, "proba": p, "note": 1}), flush=True)
            continue
        print(json.dumps({"ok": True, "proba": p}), flush=True)
    elif cmd == "importance_supported?":
        print(json.dumps({"ok": True, "supported": False}), flush=True)
    elif cmd == "shutdown":
        print(json.dumps({"ok": True}), flush=True)
        break
"#;

struct Fixture {
    _dir: tempfile::TempDir,
    script: PathBuf,
    log: PathBuf,
}

fn fixture() -> Fixture {
    let dir = tempfile::tempdir().unwrap();
    let script = dir.path().join("toy_adapter.py");
    std::fs::write(&script, SCRIPT).unwrap();
    let log = dir.path().join("requests.ndjson");
    Fixture {
        _dir: dir,
        script,
        log,
    }
}

fn spec(script: &Path, mode: &str, log: Option<&Path>) -> ModelSpec {
    let mut cmd = format!("python3 {} {mode}", script.display());
    if let Some(l) = log {
        cmd.push_str(&format!(" {}", l.display()));
    }
    ModelSpec::external(format!("toy_{mode}"), cmd)
}

fn toy_data() -> (Matrix, Vec<u8>) {
    let x = Matrix::from_rows(&[[1.0, 1.0], [0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]).unwrap();
    (x, vec![1, 0, 1, 0])
}

#[test]
fn full_session_and_exact_request_lines() {
    let f = fixture();
    let (x, y) = toy_data();
    let mut session = AdapterSession::spawn(&spec(&f.script, "ok", Some(&f.log))).unwrap();
    assert_eq!(session.config(), Some("toy-sum"));
    session.fit(&x, &y, 42).unwrap();
    assert_eq!(session.predict_proba(&x).unwrap(), vec![1.0, 0.0, 0.5, 0.5]);
    assert!(!session.importance_supported().unwrap());
    session.shutdown();

    let log = std::fs::read_to_string(&f.log).unwrap();
    let lines: Vec<&str> = log.lines().collect();
    assert_eq!(
        lines,
        vec![
            r#"{"cmd":"handshake","version":1}"#,
            r#"{"cmd":"fit","seed":42,"X":[[1.0,1.0],[0.0,0.0],[1.0,0.0],[0.0,1.0]],"y":[1,0,1,0]}"#,
            r#"{"cmd":"predict_proba","X":[[1.0,1.0],[0.0,0.0],[1.0,0.0],[0.0,1.0]]}"#,
            r#"{"cmd":"importance_supported?"}"#,
            r#"{"cmd":"shutdown"}"#,
        ]
    );
}

#[test]
fn replayed_sessions_are_identical() {
    let f = fixture();
    let (x, y) = toy_data();
    let run = || {
        let mut m = fit(&spec(&f.script, "ok", None), &x, &y, 7).unwrap();
        let p = m.predict_proba(&x).unwrap();
        m.shutdown();
        p
    };
    assert_eq!(run(), run());
}

#[test]
fn crash_mid_session_is_reported() {
    let f = fixture();
    let (x, y) = toy_data();
    let mut m = fit(&spec(&f.script, "crash", None), &x, &y, 1).unwrap();
    let err = m.predict_proba(&x).unwrap_err();
    assert!(err.to_string().contains("exited before replying"), "{err}");
    // the session is unusable afterwards
    assert!(m.predict_proba(&x).is_err());
}

#[test]
fn hang_times_out() {
    let f = fixture();
    let (x, y) = toy_data();
    let s = spec(&f.script, "hang", None).with_param("predict_timeout_s", 0.5);
    let mut m = fit(&s, &x, &y, 1).unwrap();
    let t = Instant::now();
    let err = m.predict_proba(&x).unwrap_err();
    assert!(
        matches!(err, BenchError::Timeout { ref cmd, .. } if cmd == "predict_proba"),
        "{err}"
    );
    assert!(t.elapsed().as_secs_f64() < 10.0);
    let t = Instant::now();
    m.shutdown();
    assert!(t.elapsed().as_secs_f64() < 10.0);
}

#[test]
fn invalid_probabilities_are_rejected() {
    let f = fixture();
    let (x, y) = toy_data();
    let mut m = fit(&spec(&f.script, "out_of_range", None), &x, &y, 1).unwrap();
    let err = m.predict_proba(&x).unwrap_err().to_string();
    assert!(err.contains('3') && err.contains("1.3"), "{err}");

    let mut m = fit(&spec(&f.script, "short", None), &x, &y, 1).unwrap();
    assert!(m.predict_proba(&x).is_err());

    let mut m = fit(&spec(&f.script, "extra_field", None), &x, &y, 1).unwrap();
    assert!(matches!(
        m.predict_proba(&x),
        Err(BenchError::Protocol { .. })
    ));
}

#[test]
fn startup_failures() {
    let f = fixture();
    let (x, y) = toy_data();
    assert!(fit(&spec(&f.script, "exit", None), &x, &y, 1).is_err());
    assert!(matches!(
        fit(&spec(&f.script, "bad_handshake", None), &x, &y, 1),
        Err(BenchError::Protocol { .. })
    ));
    let err = fit(&spec(&f.script, "fit_error", None), &x, &y, 1).unwrap_err();
    assert!(err.to_string().contains("cannot fit"), "{err}");
    let missing = ModelSpec::external("nope", "/nonexistent/adapter --config x.json");
    assert!(fit(&missing, &x, &y, 1).is_err());
}
