use axum::routing::post;
use axum::{Json, Router};
use choreo_core::script::{GenerationRequest, SpeechClient, StubSpeech, TemplateTextGen, TextGenClient};
use choreo_core::timeline::{parse, GESTURES_FILE, NARRATION_FILE, VISUALS_FILE};
use serde_json::{json, Value};
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn data() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

fn choreo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_choreo")).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn compile_into(out: &Path, extra: &[&str]) -> Output {
    let lib = data().join("library");
    let tour = data().join("tour.json");
    let scenes = data().join("scenes");
    let mut args = vec![
        "compile",
        "--library",
        arg(&lib),
        "--tour",
        arg(&tour),
        "--scenes",
        arg(&scenes),
        "--out",
        arg(out),
    ];
    args.extend_from_slice(extra);
    choreo(&args)
}

#[test]
fn validate_reports_by_exit_status() {
    let ok = choreo(&["validate", arg(&data().join("library"))]);
    assert_eq!(code(&ok), 0);
    let report: Value = serde_json::from_slice(&ok.stdout).unwrap();
    assert_eq!(report["ok"], json!(true));

    let dir = tempfile::tempdir().unwrap();
    for f in std::fs::read_dir(data().join("library")).unwrap() {
        let f = f.unwrap().path();
        std::fs::copy(&f, dir.path().join(f.file_name().unwrap())).unwrap();
    }
    let visuals = dir.path().join("visuals.json");
    let text = std::fs::read_to_string(&visuals).unwrap();
    let mut doc: Value = serde_json::from_str(&text).unwrap();
    doc["entries"][3]["learning_point_id"] = json!("no-such-point");
    std::fs::write(&visuals, doc.to_string()).unwrap();
    let bad = choreo(&["validate", arg(dir.path())]);
    assert_eq!(code(&bad), 1);
    let report: Value = serde_json::from_slice(&bad.stdout).unwrap();
    assert_eq!(report["errors"][0]["path"], json!("entries[3].learning_point_id"));
    assert_eq!(report["errors"][0]["kind"], json!("dangling_reference"));

    assert_eq!(code(&choreo(&["validate", arg(&dir.path().join("missing"))])), 2);
}

#[test]
fn compile_writes_three_identical_files_every_time() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let out = compile_into(a.path(), &[]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(code(&compile_into(b.path(), &[])), 0);

    let mut names: Vec<String> = std::fs::read_dir(a.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    assert_eq!(names, vec![GESTURES_FILE, NARRATION_FILE, VISUALS_FILE]);
    for n in &names {
        assert_eq!(std::fs::read(a.path().join(n)).unwrap(), std::fs::read(b.path().join(n)).unwrap(), "{n}");
    }
    // Compiling over an earlier output changes nothing.
    let before = std::fs::read(a.path().join(NARRATION_FILE)).unwrap();
    assert_eq!(code(&compile_into(a.path(), &[])), 0);
    assert_eq!(std::fs::read(a.path().join(NARRATION_FILE)).unwrap(), before);

    let summary: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(summary["tour_id"], json!("makerspace-tour-b"));
    assert_eq!(summary["devices"].as_array().unwrap().len(), 3);
    assert_eq!(summary["coverage"], json!([]));
    let t = parse(a.path()).unwrap();
    assert_eq!(summary["total_ms"], json!(t.end_ms()));
}

#[test]
fn compile_picks_the_requested_variant() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("report.json");
    let out = compile_into(&dir.path().join("t"), &["--variant", "v2", "--report", arg(&report)]);
    assert_eq!(code(&out), 0);
    let t = parse(&dir.path().join("t")).unwrap();
    assert_eq!(t.header.variant.as_deref(), Some("v2"));
    let written: Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(written, serde_json::from_slice::<Value>(&out.stdout).unwrap());

    let missing = compile_into(&dir.path().join("u"), &["--variant", "v9"]);
    assert_eq!(code(&missing), 1);
    assert!(String::from_utf8_lossy(&missing.stderr).contains("v9"));
}

#[test]
fn compile_refuses_bad_tours() {
    let dir = tempfile::tempdir().unwrap();
    let lib = data().join("library");
    let run = |tour: &Value| {
        let path = dir.path().join("tour.json");
        std::fs::write(&path, tour.to_string()).unwrap();
        choreo(&["compile", "--library", arg(&lib), "--tour", arg(&path), "--out", arg(&dir.path().join("out"))])
    };
    let empty = run(&json!({ "id": "t", "devices": [] }));
    assert_eq!(code(&empty), 1);
    assert!(String::from_utf8_lossy(&empty.stderr).contains("no devices"));
    assert_eq!(code(&run(&json!({ "devices": ["laser-cutter", "laser-cutter"] }))), 1);
    assert_eq!(code(&run(&json!({ "devices": ["espresso-machine"] }))), 1);
    assert_eq!(code(&run(&json!({ "devices": "laser-cutter" }))), 2);
    assert!(!dir.path().join("out").exists());

    let missing = choreo(&[
        "compile",
        "--library",
        arg(&lib),
        "--tour",
        arg(&dir.path().join("nope.json")),
        "--out",
        arg(&dir.path().join("out")),
    ]);
    assert_eq!(code(&missing), 2);
}

#[test]
fn simulate_checks_the_replay() {
    let dir = tempfile::tempdir().unwrap();
    let t = dir.path().join("t");
    assert_eq!(code(&compile_into(&t, &[])), 0);

    let trace = dir.path().join("trace.json");
    let clean = choreo(&["simulate", "--timeline", arg(&t), "--out", arg(&trace)]);
    assert_eq!(code(&clean), 0);
    let report: Value = serde_json::from_slice(&clean.stdout).unwrap();
    assert_eq!(report["flagged"], json!([]));
    let written: Value = serde_json::from_str(&std::fs::read_to_string(&trace).unwrap()).unwrap();
    assert_eq!(written["records"].as_array().unwrap().len(), parse(&t).unwrap().event_count());

    let jittered = choreo(&["simulate", "--timeline", arg(&t), "--seed", "3", "--jitter-ms", "250"]);
    assert_eq!(code(&jittered), 1);
    let report: Value = serde_json::from_slice(&jittered.stdout).unwrap();
    assert!(!report["flagged"].as_array().unwrap().is_empty());
    let tolerant = choreo(&["simulate", "--timeline", arg(&t), "--jitter-ms", "250", "--epsilon", "100000"]);
    assert_eq!(code(&tolerant), 0);

    // Two overlapping images make the timeline invalid before any replay.
    let path = t.join(VISUALS_FILE);
    let mut doc: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    let end = doc["events"][0]["end_ms"].as_u64().unwrap();
    doc["events"][1]["start_ms"] = json!(end - 10);
    std::fs::write(&path, doc.to_string()).unwrap();
    let broken = choreo(&["simulate", "--timeline", arg(&t)]);
    assert_eq!(code(&broken), 1);
    assert!(String::from_utf8_lossy(&broken.stderr).contains("overlap"));

    assert_eq!(code(&choreo(&["simulate", "--timeline", arg(&dir.path().join("none"))])), 2);
}

#[test]
fn place_solves_the_sample_scene() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("placement.json");
    let out = choreo(&["place", "--scene", arg(&data().join("scene.json")), "--out", arg(&out_path)]);
    assert_eq!(code(&out), 0);
    let r: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(r["surface_id"], json!("front-laser-cutter"));
    assert_eq!(r, serde_json::from_str::<Value>(&std::fs::read_to_string(&out_path).unwrap()).unwrap());

    // Nothing left to project on.
    let mut scene: Value = serde_json::from_str(&std::fs::read_to_string(data().join("scene.json")).unwrap()).unwrap();
    scene["surfaces"] = json!([]);
    let empty = dir.path().join("empty.json");
    std::fs::write(&empty, scene.to_string()).unwrap();
    assert_ne!(code(&choreo(&["place", "--scene", arg(&empty)])), 0);

    assert_eq!(code(&choreo(&["place", "--scene", arg(&dir.path().join("none.json"))])), 2);
}

#[test]
fn bad_config_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("config.toml");
    std::fs::write(&cfg, "[speech]\nrate = 3\n").unwrap();
    let out = compile_into(&dir.path().join("t"), &["--config", arg(&cfg)]);
    assert_eq!(code(&out), 2);
    assert_eq!(code(&choreo(&["place", "--scene", arg(&data().join("scene.json")), "--config", arg(&cfg)])), 2);
}

/// A text and speech service that answers like the built-in stubs.
fn fake_services() -> String {
    async fn generate(Json(body): Json<Value>) -> Json<Value> {
        let request: GenerationRequest = serde_json::from_value(body["request"].clone()).unwrap();
        let n = body["n_variants"].as_u64().unwrap() as usize;
        let scripts = TemplateTextGen.generate(&request, n).unwrap();
        Json(json!({ "scripts": scripts }))
    }
    async fn speak(Json(body): Json<Value>) -> Json<Value> {
        let audio = StubSpeech::new(5.0).synthesize(body["text"].as_str().unwrap()).unwrap();
        Json(serde_json::to_value(audio).unwrap())
    }
    let (tx, rx) = std::sync::mpsc::channel();
    std::thread::spawn(move || {
        let rt = tokio::runtime::Runtime::new().unwrap();
        rt.block_on(async move {
            let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
            tx.send(listener.local_addr().unwrap()).unwrap();
            let app = Router::new().route("/generate", post(generate)).route("/speak", post(speak));
            axum::serve(listener, app).await.unwrap();
        });
    });
    format!("http://{}", rx.recv().unwrap())
}

#[test]
fn http_clients_match_the_stubs() {
    let base = fake_services();
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("config.toml");
    std::fs::write(
        &cfg,
        format!("[speech]\nrate_chars_per_sec = 5.0\n\n[clients]\ntext_gen = \"{base}/generate\"\nspeech = \"{base}/speak\"\ntimeout_secs = 10\n"),
    )
    .unwrap();
    let via_http = dir.path().join("http");
    let out = compile_into(&via_http, &["--config", arg(&cfg)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let local = dir.path().join("local");
    assert_eq!(code(&compile_into(&local, &[])), 0);
    assert_eq!(parse(&via_http).unwrap(), parse(&local).unwrap());

    std::fs::write(&cfg, "[clients]\nspeech = \"http://127.0.0.1:9/speak\"\ntimeout_secs = 2\n").unwrap();
    let down = compile_into(&dir.path().join("down"), &["--config", arg(&cfg)]);
    assert_eq!(code(&down), 1);
    assert!(String::from_utf8_lossy(&down.stderr).contains("127.0.0.1:9"));
}
