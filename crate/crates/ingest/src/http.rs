//! HTTP surface over the service. Each endpoint is a thin shim; the logic
//! lives in [`IngestService`] so tests and the offline pipeline can call it
//! without a listener.

use std::sync::Arc;

use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::json;

use crate::{Envelope, IngestError, IngestService};

pub fn router(service: Arc<IngestService>) -> Router {
    Router::new()
        .route("/participants", post(register))
        .route("/ingest", post(ingest))
        .route("/participants/{id}/weeks/{week}", get(fetch_week))
        .with_state(service)
}

#[derive(Deserialize)]
struct RegisterBody {
    imei: String,
    twitter_id: String,
}

#[derive(Deserialize)]
struct IngestBody {
    source_key: String,
    cn: String,
    week: u32,
    payload: String,
}

async fn register(
    State(svc): State<Arc<IngestService>>,
    Json(body): Json<RegisterBody>,
) -> Response {
    match svc.register(&body.imei, &body.twitter_id) {
        Ok(rec) => Json(json!({ "participant_id": rec.participant_id })).into_response(),
        Err(e) => reject(e),
    }
}

async fn ingest(State(svc): State<Arc<IngestService>>, Json(body): Json<IngestBody>) -> Response {
    let env = match Envelope::new(body.source_key, &body.cn, body.week, body.payload.into_bytes())
    {
        Ok(env) => env,
        Err(e) => return reject(e),
    };
    match svc.route(&env) {
        Ok(stored) => Json(json!({
            "participant_id": stored.participant_id,
            "cn": stored.cn.code(),
            "week": stored.week_index,
            "records": stored.records,
            "deduplicated": stored.deduplicated,
        }))
        .into_response(),
        Err(e) => reject(e),
    }
}

async fn fetch_week(
    State(svc): State<Arc<IngestService>>,
    Path((id, week)): Path<(String, u32)>,
) -> Response {
    match svc.fetch_week(&id, week) {
        Ok(data) => {
            let text =
                |b: &Option<Vec<u8>>| b.as_ref().map(|b| String::from_utf8_lossy(b).into_owned());
            Json(json!({
                "participant_id": data.participant_id,
                "week": data.week_index,
                "gds": text(&data.gds),
                "accel": text(&data.accel),
                "tweets": text(&data.tweets),
            }))
            .into_response()
        }
        Err(e) => reject(e),
    }
}

fn reject(e: IngestError) -> Response {
    let status = match &e {
        IngestError::BadKey { .. }
        | IngestError::BadCn(_)
        | IngestError::BadPayload { .. }
        | IngestError::EmptyPayload => StatusCode::BAD_REQUEST,
        IngestError::UnknownKey(_) | IngestError::UnknownParticipant(_) => StatusCode::NOT_FOUND,
        IngestError::Collision { .. } => StatusCode::CONFLICT,
        IngestError::BadRegistry(_) | IngestError::Io { .. } => {
            StatusCode::INTERNAL_SERVER_ERROR
        }
    };
    (status, Json(json!({ "error": e.to_string() }))).into_response()
}
