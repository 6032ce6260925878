use std::collections::HashMap;
use std::sync::Arc;

use axum::body::{Body, Bytes};
use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderMap, HeaderValue, Method, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::Router;
use tower_http::compression::CompressionLayer;
use tower_http::cors::{AllowOrigin, CorsLayer};

use crate::state::{etag_of, ApiError, AppState, Resource};

const JSON: &str = "application/json";
const SVG: &str = "image/svg+xml";

/// The five endpoints with CORS and negotiated compression.
pub fn router(state: Arc<AppState>) -> Router {
    let origin = if state.cors_origin == "*" {
        AllowOrigin::any()
    } else {
        AllowOrigin::exact(state.cors_origin.clone())
    };
    let cors = CorsLayer::new()
        .allow_origin(origin)
        .allow_methods([Method::GET, Method::HEAD])
        .allow_headers([header::ACCEPT, header::IF_NONE_MATCH])
        .expose_headers([header::ETAG]);
    Router::new()
        .route("/api/meta", get(meta))
        .route("/api/summary", get(summary))
        .route("/api/detail/{region}", get(detail))
        .route("/api/frame/{ordinal}", get(frame))
        .route("/api/map", get(map))
        .fallback(not_found)
        .with_state(state)
        .layer(CompressionLayer::new())
        .layer(cors)
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = serde_json::json!({ "error": self.code, "detail": self.detail }).to_string();
        (self.status, [(header::CONTENT_TYPE, JSON)], body).into_response()
    }
}

async fn meta(State(s): State<Arc<AppState>>, headers: HeaderMap) -> Response {
    respond(s.meta(), &headers, JSON)
}

async fn summary(State(s): State<Arc<AppState>>, headers: HeaderMap) -> Response {
    respond(s.summary(), &headers, JSON)
}

async fn detail(State(s): State<Arc<AppState>>, Path(region): Path<String>, headers: HeaderMap) -> Response {
    respond(s.detail(&region), &headers, JSON)
}

async fn map(State(s): State<Arc<AppState>>, headers: HeaderMap) -> Response {
    respond(s.map(), &headers, SVG)
}

async fn frame(
    State(s): State<Arc<AppState>>,
    Path(ordinal): Path<String>,
    Query(query): Query<HashMap<String, String>>,
    headers: HeaderMap,
) -> Response {
    let mut response = frame_body(&s, &ordinal, &query, &headers);
    response
        .headers_mut()
        .insert(header::VARY, HeaderValue::from_static("accept"));
    response
}

fn frame_body(s: &AppState, ordinal: &str, query: &HashMap<String, String>, headers: &HeaderMap) -> Response {
    let ordinal = match parse_ordinal(ordinal) {
        Ok(o) => o,
        Err(e) => return e.into_response(),
    };
    let track = query.get("track").map(String::as_str);
    let scale = query.get("scale").map(String::as_str);
    let (body, content_type) = if accepts_svg(headers) {
        (s.frame_svg(ordinal, track, scale), SVG)
    } else {
        (s.frame(ordinal, track, scale).map(|f| f.assignment_json()), JSON)
    };
    match body {
        Ok(body) => conditional(&Resource::new(body), headers, content_type),
        Err(e) => e.into_response(),
    }
}

/// Digits only. Values past `u32::MAX` are out of range rather than
/// malformed.
fn parse_ordinal(text: &str) -> Result<u32, ApiError> {
    if text.is_empty() || !text.bytes().all(|b| b.is_ascii_digit()) {
        return Err(ApiError::new(
            StatusCode::BAD_REQUEST,
            "malformed_ordinal",
            format!("{text:?} is not a non-negative integer"),
        ));
    }
    text.parse().map_err(|_| {
        ApiError::new(
            StatusCode::NOT_FOUND,
            "period_out_of_range",
            format!("period ordinal {text} out of range"),
        )
    })
}

/// True when `Accept` lists `image/svg+xml` with a non-zero quality.
fn accepts_svg(headers: &HeaderMap) -> bool {
    headers
        .get_all(header::ACCEPT)
        .iter()
        .filter_map(|v| v.to_str().ok())
        .flat_map(|v| v.split(','))
        .any(|range| {
            let mut parts = range.split(';').map(str::trim);
            let media = parts.next().unwrap_or_default();
            let zero_q = parts.any(|p| {
                p.strip_prefix("q=")
                    .and_then(|q| q.parse::<f64>().ok())
                    .is_some_and(|q| q == 0.0)
            });
            media.eq_ignore_ascii_case(SVG) && !zero_q
        })
}

fn respond(resource: Result<&Resource, ApiError>, headers: &HeaderMap, content_type: &'static str) -> Response {
    match resource {
        Ok(r) => conditional(r, headers, content_type),
        Err(e) => e.into_response(),
    }
}

/// 200 with ETag, or 304 with an empty body when `If-None-Match` matches.
fn conditional(resource: &Resource, headers: &HeaderMap, content_type: &'static str) -> Response {
    debug_assert_eq!(resource.etag, etag_of(&resource.body));
    let common = [
        (header::ETAG, resource.etag.clone()),
        (header::CACHE_CONTROL, HeaderValue::from_static("no-cache")),
    ];
    if if_none_match(headers, &resource.etag) {
        return (StatusCode::NOT_MODIFIED, common, Body::empty()).into_response();
    }
    (
        StatusCode::OK,
        common,
        [(header::CONTENT_TYPE, HeaderValue::from_static(content_type))],
        Bytes::clone(&resource.body),
    )
        .into_response()
}

/// Weak comparison over a comma-separated list, as `If-None-Match` requires.
fn if_none_match(headers: &HeaderMap, etag: &HeaderValue) -> bool {
    let etag = etag.to_str().unwrap_or_default();
    headers
        .get_all(header::IF_NONE_MATCH)
        .iter()
        .filter_map(|v| v.to_str().ok())
        .flat_map(|v| v.split(','))
        .map(str::trim)
        .any(|tag| tag == "*" || tag.strip_prefix("W/").unwrap_or(tag) == etag)
}

async fn not_found() -> Response {
    ApiError::new(StatusCode::NOT_FOUND, "not_found", "no such endpoint").into_response()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn headers(name: header::HeaderName, values: &[&str]) -> HeaderMap {
        let mut h = HeaderMap::new();
        for v in values {
            h.append(name.clone(), HeaderValue::from_str(v).unwrap());
        }
        h
    }

    #[test]
    fn ordinal_parsing() {
        assert_eq!(parse_ordinal("0"), Ok(0));
        assert_eq!(parse_ordinal("0017"), Ok(17));
        assert_eq!(parse_ordinal("4294967296").unwrap_err().status, StatusCode::NOT_FOUND);
        for bad in ["", "-1", "+1", "1.0", "x", " 1"] {
            assert_eq!(
                parse_ordinal(bad).unwrap_err().status,
                StatusCode::BAD_REQUEST,
                "{bad:?}"
            );
        }
    }

    #[test]
    fn accept_negotiation() {
        assert!(!accepts_svg(&HeaderMap::new()));
        assert!(accepts_svg(&headers(header::ACCEPT, &["image/svg+xml"])));
        assert!(accepts_svg(&headers(
            header::ACCEPT,
            &["application/json;q=0.5, Image/SVG+XML"]
        )));
        assert!(accepts_svg(&headers(
            header::ACCEPT,
            &["text/html", "image/svg+xml;q=0.1"]
        )));
        assert!(!accepts_svg(&headers(header::ACCEPT, &["image/svg+xml;q=0"])));
        assert!(!accepts_svg(&headers(header::ACCEPT, &["*/*"])));
    }

    #[test]
    fn if_none_match_forms() {
        let tag = HeaderValue::from_static("\"abc\"");
        assert!(!if_none_match(&HeaderMap::new(), &tag));
        assert!(if_none_match(&headers(header::IF_NONE_MATCH, &["\"abc\""]), &tag));
        assert!(if_none_match(&headers(header::IF_NONE_MATCH, &["W/\"abc\""]), &tag));
        assert!(if_none_match(
            &headers(header::IF_NONE_MATCH, &["\"x\", \"abc\""]),
            &tag
        ));
        assert!(if_none_match(
            &headers(header::IF_NONE_MATCH, &["\"x\"", "\"abc\""]),
            &tag
        ));
        assert!(if_none_match(&headers(header::IF_NONE_MATCH, &["*"]), &tag));
        assert!(!if_none_match(&headers(header::IF_NONE_MATCH, &["\"abd\""]), &tag));
        assert!(!if_none_match(&headers(header::IF_NONE_MATCH, &["abc"]), &tag));
    }
}
