mod common;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use http_body_util::BodyExt;
use tower::ServiceExt;

use scaleglyph::geometry::TriangleMesh;
use scaleglyph::glyphpack::read_glyphs;
use scaleglyph_service::http::{router, ScatterResponse};
use scaleglyph_service::{run_pipeline, DatasetCatalog};

async fn call(app: &axum::Router, req: Request<Body>) -> (StatusCode, Vec<u8>) {
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let body = resp.into_body().collect().await.unwrap().to_bytes().to_vec();
    (status, body)
}

fn get(uri: &str) -> Request<Body> {
    Request::get(uri).body(Body::empty()).unwrap()
}

#[tokio::test]
async fn endpoints_serve_pipeline_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = common::synthetic_config(tmp.path());
    let report = run_pipeline(&cfg).unwrap();
    let catalog = DatasetCatalog::open(&cfg.output_dir).unwrap();
    let ds = catalog.get("synthetic").unwrap().clone();
    let app = router(catalog);

    let (status, body) = call(&app, get("/datasets")).await;
    assert_eq!(status, StatusCode::OK);
    let list: serde_json::Value = serde_json::from_slice(&body).unwrap();
    assert_eq!(list[0]["id"], "synthetic");
    assert_eq!(list[0]["bands"], serde_json::json!([0, 1]));

    let (status, body) = call(&app, get("/datasets/synthetic/manifest")).await;
    assert_eq!(status, StatusCode::OK);
    let entry: serde_json::Value = serde_json::from_slice(&body).unwrap();
    assert_eq!(entry["fields"], serde_json::json!(["T", "u"]));

    for band in &ds.entry.bands {
        let (status, body) = call(&app, get(&format!("/datasets/synthetic/glyphs?band={}", band.band))).await;
        assert_eq!(status, StatusCode::OK);
        let path = report.dataset_dir.join(&band.glyphs);
        assert_eq!(body, std::fs::read(&path).unwrap());
        let parsed = read_glyphs(&path).unwrap();
        assert_eq!(parsed.region_count(), band.region_count);
    }

    let (status, body) = call(&app, get("/datasets/synthetic/mesh?surface=flame")).await;
    assert_eq!(status, StatusCode::OK);
    assert!(!TriangleMesh::from_bytes(&body).unwrap().is_empty());

    let (status, body) = call(&app, get("/datasets/synthetic/scatter?x=mean:T&y=T:bin0")).await;
    assert_eq!(status, StatusCode::OK);
    let scatter: ScatterResponse = serde_json::from_slice(&body).unwrap();
    assert_eq!(scatter.rows.len(), ds.entry.region_count);

    // Lasso around every point selects every region.
    let (lo_x, hi_x) = scatter.rows.iter().fold((f64::MAX, f64::MIN), |a, r| (a.0.min(r.x), a.1.max(r.x)));
    let (lo_y, hi_y) = scatter.rows.iter().fold((f64::MAX, f64::MIN), |a, r| (a.0.min(r.y), a.1.max(r.y)));
    let query = serde_json::json!({
        "x": "mean:T", "y": "T:bin0",
        "polygon": [[lo_x - 1.0, lo_y - 1.0], [hi_x + 1.0, lo_y - 1.0], [hi_x + 1.0, hi_y + 1.0], [lo_x - 1.0, hi_y + 1.0]]
    });
    let req = Request::post("/datasets/synthetic/select")
        .header("content-type", "application/json")
        .body(Body::from(query.to_string()))
        .unwrap();
    let (status, body) = call(&app, req).await;
    assert_eq!(status, StatusCode::OK);
    let ids: Vec<u32> = serde_json::from_slice(&body).unwrap();
    assert_eq!(ids, (0..ds.entry.region_count as u32).collect::<Vec<_>>());

    // Repeated reads are byte-identical.
    let a = call(&app, get("/datasets/synthetic/glyphs?band=0")).await;
    let b = call(&app, get("/datasets/synthetic/glyphs?band=0")).await;
    assert_eq!(a, b);

    // Error paths.
    assert_eq!(call(&app, get("/datasets/nope/manifest")).await.0, StatusCode::NOT_FOUND);
    assert_eq!(call(&app, get("/datasets/synthetic/glyphs?band=9")).await.0, StatusCode::NOT_FOUND);
    assert_eq!(call(&app, get("/datasets/synthetic/mesh?surface=other")).await.0, StatusCode::NOT_FOUND);
    assert_eq!(call(&app, get("/datasets/synthetic/glyphs?band=x")).await.0, StatusCode::BAD_REQUEST);
    assert_eq!(call(&app, get("/datasets/synthetic/scatter?x=zz&y=T:bin0")).await.0, StatusCode::BAD_REQUEST);
}
