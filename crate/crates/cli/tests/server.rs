use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use choreo_cli::server::{router, AppState, ServeOptions};
use choreo_core::overrides::{Overrides, OVERRIDES_FILE};
use choreo_core::timeline::{validate_timeline, Timeline};
use choreo_testkit::{oracle, rng};
use http_body_util::BodyExt;
use rand::seq::IndexedRandom;
use rand::Rng;
use serde_json::{json, Value};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use tokio::sync::RwLock;
use tower::ServiceExt;

fn data() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

fn options(out: &Path) -> ServeOptions {
    ServeOptions {
        library: data().join("library"),
        tour: data().join("tour.json"),
        config: None,
        scenes: Some(data().join("scenes")),
        scene: Some(data().join("scene.json")),
        out_dir: out.to_path_buf(),
        ui_dir: None,
    }
}

fn app(out: &Path) -> Router {
    let state = AppState::load(&options(out)).unwrap();
    router(Arc::new(RwLock::new(state)), None)
}

async fn call(app: &Router, method: Method, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let req = Request::builder().method(method).uri(uri);
    let req = match body {
        Some(b) => req.header("content-type", "application/json").body(Body::from(b.to_string())),
        None => req.body(Body::empty()),
    }
    .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let value = serde_json::from_slice(&bytes).unwrap_or_else(|_| Value::String(String::from_utf8_lossy(&bytes).into()));
    (status, value)
}

async fn get(app: &Router, uri: &str) -> (StatusCode, Value) {
    call(app, Method::GET, uri, None).await
}

async fn nudge(app: &Router, event_id: &str, delta_ms: i64) -> (StatusCode, Value) {
    call(app, Method::POST, "/api/nudge", Some(json!({ "event_id": event_id, "delta_ms": delta_ms }))).await
}

fn timeline(v: Value) -> Timeline {
    serde_json::from_value(v).unwrap()
}

#[tokio::test]
async fn reads_never_change_anything() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    let uris = [
        "/api/timeline",
        "/api/v1/timeline",
        "/api/trace",
        "/api/trace?seed=4&jitter=300&epsilon=1",
        "/api/scene",
        "/api/placement",
        "/api/variants",
    ];
    let mut first = Vec::new();
    for uri in uris {
        let (status, body) = get(&app, uri).await;
        assert_eq!(status, StatusCode::OK, "{uri}: {body}");
        first.push(body);
    }
    for _ in 0..3 {
        for (uri, want) in uris.iter().zip(&first) {
            assert_eq!(&get(&app, uri).await.1, want, "{uri}");
        }
    }
    assert_eq!(first[0], first[1]);
    assert!(!dir.path().join(OVERRIDES_FILE).exists());
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);

    assert_eq!(first[2]["report"]["flagged"], json!([]));
    assert!(!first[3]["report"]["flagged"].as_array().unwrap().is_empty());
    assert_eq!(first[5]["surface_id"], json!("front-laser-cutter"));
    assert_eq!(first[6]["selected"], json!("v1"));
    assert_eq!(get(&app, "/api/trace?jitter=-1").await.0, StatusCode::BAD_REQUEST);
    assert_eq!(get(&app, "/api/trace?bogus=1").await.0, StatusCode::BAD_REQUEST);
    assert_eq!(get(&app, "/api/nothing").await.0, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn nudges_are_checked_and_answered_by_kind() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    let t = timeline(get(&app, "/api/timeline").await.1);

    let g = &t.gestures[0];
    let (status, body) = nudge(&app, &g.id, 40).await;
    assert_eq!(status, StatusCode::OK, "{body}");
    let after = timeline(body);
    let moved = after.gestures.iter().find(|e| e.id == g.id).unwrap();
    assert_eq!((moved.start_ms, moved.nudge_ms), (g.start_ms + 40, 40));
    assert!(validate_timeline(&after).is_clean());
    assert_eq!(timeline(get(&app, "/api/timeline").await.1), after);

    assert_eq!(nudge(&app, &g.id, 5001).await.0, StatusCode::BAD_REQUEST);
    assert_eq!(nudge(&app, &t.speech[0].id, -1).await.0, StatusCode::BAD_REQUEST);
    assert_eq!(nudge(&app, "vi:nowhere:x", 10).await.0, StatusCode::NOT_FOUND);

    // Pulling the second image of a segment into the first overlaps them.
    let second = t.visuals.iter().find(|v| v.sequence_index == 1).unwrap();
    let (status, body) = nudge(&app, &second.id, -100).await;
    assert_eq!(status, StatusCode::CONFLICT);
    assert!(body["report"]["violations"].as_array().is_some_and(|v| !v.is_empty()));
    assert_eq!(timeline(get(&app, "/api/timeline").await.1), after);

    let (status, _) = call(&app, Method::POST, "/api/nudge", Some(json!({ "event_id": g.id }))).await;
    assert!(status.is_client_error());
    let (status, _) = call(&app, Method::POST, "/api/nudge", Some(json!({ "event_id": g.id, "delta_ms": 1, "x": 0 }))).await;
    assert!(status.is_client_error());

    let stored = Overrides::load(&dir.path().join(OVERRIDES_FILE)).unwrap();
    assert_eq!(stored.nudges_for("v1").len(), 1);
}

#[tokio::test]
async fn accepted_nudges_always_leave_a_valid_timeline() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    let mut rng = rng(61);
    let mut current = timeline(get(&app, "/api/timeline").await.1);
    let (mut ok, mut refused) = (0, 0);
    for _ in 0..300 {
        let ids: Vec<String> = current.events().map(|e| e.id.to_string()).collect();
        let id = ids.choose(&mut rng).unwrap();
        let delta = rng.random_range(-2000..=2000);
        let (status, body) = nudge(&app, id, delta).await;
        match status {
            StatusCode::OK => {
                let t = timeline(body);
                assert!(validate_timeline(&t).is_clean());
                assert!(oracle::timeline_laws(&t).is_empty());
                current = t;
                ok += 1;
            }
            StatusCode::BAD_REQUEST | StatusCode::CONFLICT => {
                assert_eq!(timeline(get(&app, "/api/timeline").await.1), current);
                refused += 1;
            }
            other => panic!("{other}: {body}"),
        }
    }
    assert!(ok > 20 && refused > 20, "{ok} accepted, {refused} refused");

    // A restarted service rebuilds exactly the nudged timeline.
    let restarted = self::app(dir.path());
    assert_eq!(timeline(get(&restarted, "/api/timeline").await.1), current);
    let (_, variants) = get(&restarted, "/api/variants").await;
    assert_eq!(variants["variants"][0]["nudges"], json!(ok));
}

#[tokio::test]
async fn variant_choice_persists() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    let v1 = timeline(get(&app, "/api/timeline").await.1);

    let (status, _) = call(&app, Method::POST, "/api/select_variant", Some(json!({ "label": "v7" }))).await;
    assert_eq!(status, StatusCode::NOT_FOUND);

    let (status, body) = call(&app, Method::POST, "/api/v1/select_variant", Some(json!({ "label": "v2" }))).await;
    assert_eq!(status, StatusCode::OK);
    let v2 = timeline(body);
    assert_eq!(v2.header.variant.as_deref(), Some("v2"));
    assert_ne!(v2.speech, v1.speech);
    let (status, _) = nudge(&app, &v2.gestures[0].id, 25).await;
    assert_eq!(status, StatusCode::OK);
    let nudged_v2 = timeline(get(&app, "/api/timeline").await.1);

    let restarted = self::app(dir.path());
    assert_eq!(timeline(get(&restarted, "/api/timeline").await.1), nudged_v2);
    let (_, variants) = get(&restarted, "/api/variants").await;
    assert_eq!(variants["selected"], json!("v2"));

    // Back on v1 the nudge made to v2 does not apply.
    let (_, body) = call(&restarted, Method::POST, "/api/select_variant", Some(json!({ "label": "v1" }))).await;
    assert_eq!(timeline(body), v1);
}

#[tokio::test]
async fn stale_overrides_are_dropped_not_fatal() {
    let dir = tempfile::tempdir().unwrap();
    let mut stored = Overrides::default();
    stored.nudges.insert(
        "v1".into(),
        vec![
            serde_json::from_value(json!({ "event_id": "ge:gone-000:x", "delta_ms": 10 })).unwrap(),
        ],
    );
    stored.save(&dir.path().join(OVERRIDES_FILE)).unwrap();
    let state = AppState::load(&options(dir.path())).unwrap();
    assert_eq!(state.dropped_nudges.len(), 1);
    assert!(validate_timeline(state.timeline()).is_clean());

    std::fs::write(dir.path().join(OVERRIDES_FILE), "not json").unwrap();
    assert!(AppState::load(&options(dir.path())).is_err());
}

#[tokio::test]
async fn missing_scene_is_not_found() {
    let dir = tempfile::tempdir().unwrap();
    let opts = ServeOptions {
        scene: None,
        ..options(dir.path())
    };
    let app = router(Arc::new(RwLock::new(AppState::load(&opts).unwrap())), None);
    assert_eq!(get(&app, "/api/scene").await.0, StatusCode::NOT_FOUND);
    assert_eq!(get(&app, "/api/placement").await.0, StatusCode::NOT_FOUND);
    let (status, body) = get(&app, "/").await;
    assert_eq!(status, StatusCode::OK);
    assert!(body.as_str().unwrap().contains("/api"));
}

#[tokio::test]
async fn ui_bundle_is_served_at_the_root() {
    let dir = tempfile::tempdir().unwrap();
    let ui = tempfile::tempdir().unwrap();
    std::fs::write(ui.path().join("index.html"), "<html>studio</html>").unwrap();
    let state = AppState::load(&options(dir.path())).unwrap();
    let app = router(Arc::new(RwLock::new(state)), Some(ui.path().to_path_buf()));
    let (status, body) = get(&app, "/").await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body, json!("<html>studio</html>"));
    assert_eq!(get(&app, "/api/timeline").await.0, StatusCode::OK);
}
