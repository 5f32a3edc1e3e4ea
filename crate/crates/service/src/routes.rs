use std::path::Path;

use axum::extract::{Path as UrlPath, Query, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use tower_http::services::ServeDir;

use mammo_core::geometry::transform_region;
use mammo_core::imageio::encode_png;
use mammo_core::inference::{render_overlay, BlobKind, BreastScores, OverlayStyle};
use mammo_core::study::{latest_reviews, ConcordanceCategory, ReviewRecord, StudyError, SusResponse};
use mammo_core::types::{Birads, Density, FinalCategory, Frame, ReportFinding, TruthLabel, ViewLabel};

use crate::state::{AppState, CaseEntry};
use crate::summary::{study_summary, sus_overview, StudySummary, SusOverview};
use crate::{ServiceError, StudySession};

pub const REVIEWER_HEADER: &str = "x-reviewer-id";

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        Self { status, message: message.into() }
    }

    fn not_found(what: impl std::fmt::Display) -> Self {
        Self::new(StatusCode::NOT_FOUND, format!("{what} not found"))
    }
}

impl From<ServiceError> for ApiError {
    fn from(e: ServiceError) -> Self {
        tracing::error!("{e}");
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string())
    }
}

impl From<StudyError> for ApiError {
    fn from(e: StudyError) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(serde_json::json!({ "error": self.message }))).into_response()
    }
}

type ApiResult<T> = Result<T, ApiError>;

/// Routes under `/api`, plus the static UI at `/` when `ui_dir` is given.
pub fn app(state: AppState, ui_dir: Option<&Path>) -> Router {
    let api = Router::new()
        .route("/cases", get(list_cases))
        .route("/cases/{case_id}", get(case_detail))
        .route("/cases/{case_id}/views/{view}/overlay", get(overlay))
        .route("/reviews", get(list_reviews).post(post_review))
        .route("/queue", get(queue))
        .route("/session", get(session))
        .route("/summary", get(summary))
        .route("/sus", get(get_sus).post(post_sus))
        .with_state(state);
    let router = Router::new().nest("/api", api);
    match ui_dir {
        Some(dir) => router.fallback_service(ServeDir::new(dir)),
        None => router,
    }
}

fn entry<'a>(state: &'a AppState, case_id: &str) -> ApiResult<&'a CaseEntry> {
    state.0.cases.get(case_id).ok_or_else(|| ApiError::not_found(format!("case {case_id}")))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct CaseSummary {
    pub case_id: String,
    pub birads: Birads,
    pub cancer_score: f64,
    pub classification: ConcordanceCategory,
    pub localization: ConcordanceCategory,
    pub auto_accepted: bool,
}

async fn list_cases(State(state): State<AppState>) -> Json<Vec<CaseSummary>> {
    Json(
        state
            .0
            .cases
            .values()
            .map(|e| CaseSummary {
                case_id: e.case.case_id.clone(),
                birads: e.case.birads,
                cancer_score: e.assessment.cancer_score,
                classification: e.concordance.classification,
                localization: e.concordance.localization,
                auto_accepted: e.concordance.auto_accepted(),
            })
            .collect(),
    )
}

#[derive(Debug, Serialize, Deserialize)]
pub struct BlobSummary {
    pub view: ViewLabel,
    pub category: FinalCategory,
    pub suspicious: bool,
    pub area: usize,
    pub peak_score: f64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct TruthLesion {
    pub view: ViewLabel,
    pub category: FinalCategory,
    pub suspicious: bool,
    /// Canonical-frame vertices.
    pub polygon: Vec<(f64, f64)>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Truth {
    pub label: TruthLabel,
    pub lesions: Vec<TruthLesion>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct CaseDetail {
    pub case_id: String,
    pub birads: Birads,
    pub density: Density,
    pub report_findings: Vec<ReportFinding>,
    pub cancer_score: f64,
    pub breast_scores: BreastScores,
    pub benign_display_scores: BreastScores,
    pub blobs: Vec<BlobSummary>,
    pub classification: ConcordanceCategory,
    pub localization: ConcordanceCategory,
    pub auto_accepted: bool,
    /// Absent while the study is blinded.
    pub truth: Option<Truth>,
}

async fn case_detail(State(state): State<AppState>, UrlPath(case_id): UrlPath<String>) -> ApiResult<Json<CaseDetail>> {
    let e = entry(&state, &case_id)?;
    let truth = if state.0.blinded {
        None
    } else {
        let transforms = state.0.store.load_transforms(&case_id).map_err(ServiceError::from)?;
        let lesions = e
            .case
            .gt_lesions
            .iter()
            .map(|l| {
                let region = match l.region.frame {
                    Frame::Canonical => l.region.clone(),
                    Frame::Original => {
                        let rec = transforms.get(&l.view).ok_or_else(|| {
                            ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, format!("no transform for {}", l.view))
                        })?;
                        transform_region(&l.region, rec)
                            .map_err(|err| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, err.to_string()))?
                    }
                };
                Ok(TruthLesion {
                    view: l.view,
                    category: l.category,
                    suspicious: l.suspicious,
                    polygon: region.polygon,
                })
            })
            .collect::<ApiResult<Vec<_>>>()?;
        Some(Truth { label: e.case.truth_label, lesions })
    };
    let a = &e.assessment;
    Ok(Json(CaseDetail {
        case_id: case_id.clone(),
        birads: e.case.birads,
        density: e.case.density,
        report_findings: e.case.report_findings.iter().copied().collect(),
        cancer_score: a.cancer_score,
        breast_scores: a.breast_scores,
        benign_display_scores: a.benign_display_scores,
        blobs: a
            .blobs
            .iter()
            .map(|b| BlobSummary {
                view: b.view,
                category: b.category,
                suspicious: b.suspicious,
                area: b.pixels.len(),
                peak_score: b.peak_score,
            })
            .collect(),
        classification: e.concordance.classification,
        localization: e.concordance.localization,
        auto_accepted: e.concordance.auto_accepted(),
        truth,
    }))
}

#[derive(Debug, Deserialize)]
struct OverlayQuery {
    style: Option<String>,
    kind: Option<String>,
}

async fn overlay(
    State(state): State<AppState>,
    UrlPath((case_id, view)): UrlPath<(String, String)>,
    Query(q): Query<OverlayQuery>,
) -> ApiResult<Response> {
    let e = entry(&state, &case_id)?;
    let bad = |what: &str, v: &str| ApiError::new(StatusCode::BAD_REQUEST, format!("unknown {what} `{v}`"));
    let view: ViewLabel = view.parse().map_err(|_| bad("view", &view))?;
    let style: OverlayStyle = match q.style.as_deref() {
        Some(s) => s.parse().map_err(|_| bad("style", s))?,
        None => OverlayStyle::Color,
    };
    let kind: BlobKind = match q.kind.as_deref() {
        Some(s) => s.parse().map_err(|_| bad("kind", s))?,
        None => BlobKind::All,
    };
    let store = state.0.store.clone();
    let blobs: Vec<_> = e.assessment.blobs.iter().filter(|b| b.view == view && kind.admits(b)).cloned().collect();
    let png = tokio::task::spawn_blocking(move || -> Result<Vec<u8>, ServiceError> {
        let pv = store.load_preprocessed(&case_id, view)?;
        let img = render_overlay(&pv, &blobs, style);
        Ok(encode_png(&image::DynamicImage::ImageRgb8(img)))
    })
    .await
    .map_err(|err| ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, err.to_string()))??;
    Ok(([(header::CONTENT_TYPE, "image/png")], png).into_response())
}

fn reviewer_from(headers: &HeaderMap, session: &StudySession) -> ApiResult<String> {
    let id = headers
        .get(REVIEWER_HEADER)
        .and_then(|v| v.to_str().ok())
        .filter(|s| !s.is_empty())
        .ok_or_else(|| ApiError::new(StatusCode::BAD_REQUEST, format!("missing {REVIEWER_HEADER} header")))?;
    if !session.queues.contains_key(id) {
        return Err(ApiError::new(StatusCode::FORBIDDEN, format!("reviewer {id} is not in this session")));
    }
    Ok(id.to_string())
}

#[derive(Debug, Serialize, Deserialize)]
pub struct QueueItem {
    pub case_id: String,
    pub grade: Option<u8>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Queue {
    pub session_id: String,
    pub reviewer_id: String,
    pub items: Vec<QueueItem>,
    /// First ungraded case in queue order.
    pub next: Option<String>,
}

async fn queue(State(state): State<AppState>, headers: HeaderMap) -> ApiResult<Json<Queue>> {
    let session = &state.0.session;
    let reviewer = reviewer_from(&headers, session)?;
    let log = state.0.reviews.read().expect("review snapshot lock");
    let latest = latest_reviews(&log);
    let items: Vec<QueueItem> = session.queues[&reviewer]
        .iter()
        .map(|c| QueueItem { case_id: c.clone(), grade: latest.get(&(reviewer.clone(), c.clone())).map(|r| r.grade) })
        .collect();
    let next = items.iter().find(|i| i.grade.is_none()).map(|i| i.case_id.clone());
    Ok(Json(Queue { session_id: session.session_id.clone(), reviewer_id: reviewer, items, next }))
}

async fn session(State(state): State<AppState>) -> Json<StudySession> {
    Json(state.0.session.clone())
}

async fn list_reviews(State(state): State<AppState>) -> Json<Vec<ReviewRecord>> {
    Json(state.0.reviews.read().expect("review snapshot lock").clone())
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Accepted {
    /// Records in the log after this write.
    pub records: u64,
}

async fn post_review(
    State(state): State<AppState>,
    Json(record): Json<ReviewRecord>,
) -> ApiResult<(StatusCode, Json<Accepted>)> {
    let unprocessable = |m: String| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, m);
    record.validate().map_err(|e| unprocessable(e.to_string()))?;
    entry(&state, &record.case_id)?;
    let Some(queue) = state.0.session.queues.get(&record.reviewer_id) else {
        return Err(ApiError::new(
            StatusCode::FORBIDDEN,
            format!("reviewer {} is not in this session", record.reviewer_id),
        ));
    };
    if state.0.auto_accepted.contains(&record.case_id) {
        return Err(unprocessable(format!("case {} was auto-accepted and is not reviewed", record.case_id)));
    }
    if !queue.contains(&record.case_id) {
        return Err(unprocessable(format!("case {} is not in the queue of {}", record.case_id, record.reviewer_id)));
    }
    let records = state.submit_review(record).await?;
    Ok((StatusCode::CREATED, Json(Accepted { records })))
}

async fn summary(State(state): State<AppState>) -> ApiResult<Json<StudySummary>> {
    let s = &state.0;
    let log = s.reviews.read().expect("review snapshot lock").clone();
    let out = study_summary(s.cases.len() as u64, &s.concordance, &log, &s.session.queues, s.eval.level)?;
    Ok(Json(out))
}

async fn get_sus(State(state): State<AppState>) -> ApiResult<Json<SusOverview>> {
    let responses = state.0.sus.read().expect("sus snapshot lock").clone();
    Ok(Json(sus_overview(&responses, state.0.eval.level)?))
}

async fn post_sus(
    State(state): State<AppState>,
    Json(response): Json<SusResponse>,
) -> ApiResult<(StatusCode, Json<Accepted>)> {
    response.validate().map_err(|e| ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, e.to_string()))?;
    if response.participant_id.is_empty() {
        return Err(ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "missing field `participant_id`"));
    }
    let records = state.submit_sus(response).await?;
    Ok((StatusCode::CREATED, Json(Accepted { records })))
}
