use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use bmgame_core::game::Transcript;
use bmgame_core::verify::verify_transcript;

async fn call(app: &Router, method: Method, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let req = Request::builder().method(method).uri(uri).header("content-type", "application/json");
    let req = match body {
        Some(b) => req.body(Body::from(b.to_string())).unwrap(),
        None => req.body(Body::empty()).unwrap(),
    };
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let v = if bytes.is_empty() { Value::Null } else { serde_json::from_slice(&bytes).unwrap() };
    (status, v)
}

async fn create(app: &Router, kind: &str) -> String {
    let (s, v) = call(app, Method::POST, "/games", Some(json!({ "kind": kind }))).await;
    assert_eq!(s, StatusCode::CREATED, "{v}");
    v["id"].as_str().unwrap().to_string()
}

fn point() -> Value {
    json!({ "metric": { "points": ["a"], "dist": [["0"]] } })
}

#[tokio::test]
async fn metric_game_round_trip() {
    let app = bmgame_service::app();
    let id = create(&app, "metric").await;
    let (s, v) = call(&app, Method::POST, &format!("/games/{id}/moves"), Some(point())).await;
    assert_eq!(s, StatusCode::OK, "{v}");
    assert_eq!(v["odd"]["by"], "odd");
    let odd_points = v["odd"]["metric"]["points"].as_array().unwrap().len();
    assert_eq!(odd_points, 2);

    // Eve extends Odd's stage by one point at distance 1 from both
    let stage = &v["odd"]["metric"];
    let labels: Vec<Value> = stage["points"].as_array().unwrap().clone();
    let mut dist: Vec<Vec<Value>> = stage["dist"].as_array().unwrap().iter().map(|r| r.as_array().unwrap().clone()).collect();
    let far = json!("2");
    for row in dist.iter_mut() {
        row.push(far.clone());
    }
    dist.push(vec![far.clone(), far.clone(), json!("0")]);
    let mut pts = labels.clone();
    pts.push(json!("e"));
    let mv = json!({ "metric": { "points": pts, "dist": dist } });
    let (s, v) = call(&app, Method::POST, &format!("/games/{id}/moves"), Some(mv)).await;
    assert_eq!(s, StatusCode::OK, "{v}");

    let (s, g1) = call(&app, Method::GET, &format!("/games/{id}"), None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(g1["stages"].as_array().unwrap().len(), 4);
    assert_eq!(g1["round"], 4);
    let (_, g2) = call(&app, Method::GET, &format!("/games/{id}"), None).await;
    assert_eq!(g1, g2);

    let (s, t) = call(&app, Method::GET, &format!("/games/{id}/transcript"), None).await;
    assert_eq!(s, StatusCode::OK);
    let t: Transcript = serde_json::from_value(t).unwrap();
    let r = verify_transcript(&t);
    assert!(r.pass, "{:?}", r.failures());

    let (s, _) = call(&app, Method::DELETE, &format!("/games/{id}"), None).await;
    assert_eq!(s, StatusCode::NO_CONTENT);
    let (s, _) = call(&app, Method::GET, &format!("/games/{id}"), None).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn triangle_violation_is_422_with_triple() {
    let app = bmgame_service::app();
    let id = create(&app, "metric").await;
    let bad = json!({ "metric": { "points": ["a", "b", "c"], "dist": [["0", "1", "3"], ["1", "0", "1"], ["3", "1", "0"]] } });
    let (s, v) = call(&app, Method::POST, &format!("/games/{id}/moves"), Some(bad.clone())).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(v["error"], "triangle-violation");
    let w = &v["witness"];
    let num = |k: &str| bmgame_core::rational::parse(w[k].as_str().unwrap()).unwrap();
    assert!(num("d_xz") > num("d_xy") + num("d_yz"));
    assert_eq!(w["points"].as_array().unwrap().len(), 3);

    let (s, v) = call(&app, Method::POST, &format!("/games/{id}/validate"), Some(bad)).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["valid"], false);
    assert_eq!(v["diagnostic"]["error"], "triangle-violation");
    let (_, g) = call(&app, Method::GET, &format!("/games/{id}"), None).await;
    assert_eq!(g["round"], 0);
}

#[tokio::test]
async fn normed_non_isometric_link_has_vector_witness() {
    let app = bmgame_service::app();
    let id = create(&app, "normed").await;
    let l1 = json!({ "space": { "dim": 1, "vertices": [["1"], ["-1"]] } });
    let (s, v) = call(&app, Method::POST, &format!("/games/{id}/moves"), Some(l1)).await;
    assert_eq!(s, StatusCode::OK, "{v}");
    let odd = &v["odd"]["space"];
    let dim = odd["dim"].as_u64().unwrap() as usize;
    // scale the identity by 2: not isometric
    let rows: Vec<Vec<String>> =
        (0..dim).map(|i| (0..dim).map(|j| if i == j { "2".into() } else { "0".into() }).collect()).collect();
    let mv = json!({ "space": odd, "link": { "matrix": rows } });
    let (s, v) = call(&app, Method::POST, &format!("/games/{id}/moves"), Some(mv)).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(v["error"], "not-isometric");
    let w = &v["witness"];
    let (a, b) = (w["source_norm"].as_str().unwrap(), w["image_norm"].as_str().unwrap());
    assert_ne!(a, b);
    assert_eq!(w["vector"].as_array().unwrap().len(), dim);
}

#[tokio::test]
async fn restricted_class_violation_is_422() {
    let app = bmgame_service::app();
    let id = create(&app, "normed-restricted").await;
    let l1_3 = json!({ "space": { "dim": 3, "vertices": [
        ["1", "0", "0"], ["-1", "0", "0"], ["0", "1", "0"], ["0", "-1", "0"], ["0", "0", "1"], ["0", "0", "-1"]] } });
    let (s, v) = call(&app, Method::POST, &format!("/games/{id}/moves"), Some(l1_3)).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(v["error"], "class-violation");
    assert_eq!(v["witness"]["class"], "linf");
}

#[tokio::test]
async fn unknown_session_and_bad_body() {
    let app = bmgame_service::app();
    let (s, _) = call(&app, Method::GET, "/games/nope", None).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    let (s, _) = call(&app, Method::POST, "/games/nope/moves", Some(point())).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    let (s, _) = call(&app, Method::DELETE, "/games/nope", None).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    let (s, _) = call(&app, Method::POST, "/games", Some(json!({ "kind": "chess" }))).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
}
