use std::collections::BTreeSet;

use axum::body::Bytes;
use axum::extract::rejection::{PathRejection, QueryRejection};
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use umn_core::metrics::{HeelScore, LayerPairMetric};
use umn_core::percolation::percolate;
use umn_core::{diff, LayerId, Mutation, RemovalStrategy, ScenarioLog, ScenarioState, ZoneId};

use crate::error::ApiError;
use crate::state::{AppState, JobStatus, BASE_SCENARIO};

type ApiResult<T> = Result<T, ApiError>;

#[derive(Debug, Default, Deserialize)]
pub struct ScenarioQuery {
    scenario: Option<String>,
}

#[derive(Debug, Deserialize)]
pub struct AchillesQuery {
    scenario: Option<String>,
    #[serde(default = "default_top")]
    n: usize,
}

fn default_top() -> usize {
    10
}

#[derive(Debug, Deserialize)]
pub struct DiffQuery {
    against: Option<String>,
}

fn query<T>(q: Result<Query<T>, QueryRejection>) -> ApiResult<T> {
    q.map(|Query(v)| v)
        .map_err(|e| ApiError::bad_request("invalid-query", e.body_text()))
}

fn path<T>(p: Result<Path<T>, PathRejection>) -> ApiResult<T> {
    p.map(|Path(v)| v)
        .map_err(|e| ApiError::bad_request("invalid-path", e.body_text()))
}

fn body<T: DeserializeOwned>(bytes: &Bytes, code: &str) -> ApiResult<T> {
    serde_json::from_slice(bytes).map_err(|e| ApiError::bad_request(code, e.to_string()))
}

fn zone_in(state: &ScenarioState, id: &str) -> ApiResult<ZoneId> {
    let zone = ZoneId::from(id);
    if state.network().has_zone(&zone) {
        Ok(zone)
    } else {
        Err(ApiError::not_found(
            "unknown-zone",
            format!("no zone `{id}`"),
        ))
    }
}

pub async fn health(State(app): State<AppState>) -> Json<Value> {
    let net = &app.base().dataset().network;
    Json(json!({
        "status": "ok",
        "zones": net.zone_count(),
        "layers": net.layer_count(),
        "edges": net.edge_count(),
        "fingerprint": app.base().fingerprint(),
    }))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ServicesView {
    pub zone: ZoneId,
    pub services: Vec<LayerId>,
}

pub async fn area_services(
    State(app): State<AppState>,
    id: Result<Path<String>, PathRejection>,
    q: Result<Query<ScenarioQuery>, QueryRejection>,
) -> ApiResult<Json<ServicesView>> {
    let (id, q) = (path(id)?, query(q)?);
    let (_, state) = app.scenario(q.scenario.as_deref())?;
    let zone = zone_in(&state, &id)?;
    let mut services: BTreeSet<LayerId> = state
        .network()
        .incident_layers(&zone)
        .map_err(|e| ApiError::not_found("unknown-zone", e.to_string()))?
        .into_iter()
        .collect();
    services.extend(state.single_zone_lines(&zone));
    Ok(Json(ServicesView {
        zone,
        services: services.into_iter().collect(),
    }))
}

pub async fn area_geometry(
    State(app): State<AppState>,
    id: Result<Path<String>, PathRejection>,
    q: Result<Query<ScenarioQuery>, QueryRejection>,
) -> ApiResult<Json<Value>> {
    let (id, q) = (path(id)?, query(q)?);
    let (_, state) = app.scenario(q.scenario.as_deref())?;
    let zone = zone_in(&state, &id)?;
    let neighbors: Vec<ZoneId> = state
        .network()
        .multiplex_neighbors(&zone)
        .map_err(|e| ApiError::not_found("unknown-zone", e.to_string()))?
        .into_iter()
        .collect();
    let geometry = app.base().zone_geometry(&zone);
    Ok(Json(json!({
        "type": "Feature",
        "id": zone,
        "geometry": geometry.map(|g| g.geojson_geometry()),
        "properties": {
            "id": zone,
            "name": geometry.map_or(zone.as_str(), |g| g.name.as_str()),
            "centroid": geometry.and_then(|g| g.centroid()),
            "neighbors": neighbors,
        },
    })))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ZonePairView {
    pub other: ZoneId,
    pub layers: Vec<LayerPairMetric>,
    pub connectivity: f64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ZoneRelevanceView {
    pub layer: LayerId,
    pub value: f64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ZoneMetricsView {
    pub zone: ZoneId,
    pub scenario: String,
    pub fingerprint: String,
    pub pairs: Vec<ZonePairView>,
    pub relevance: Vec<ZoneRelevanceView>,
    pub heel: HeelScore,
    pub mean_connectivity: Option<f64>,
}

pub async fn area_metrics(
    State(app): State<AppState>,
    id: Result<Path<String>, PathRejection>,
    q: Result<Query<ScenarioQuery>, QueryRejection>,
) -> ApiResult<Json<ZoneMetricsView>> {
    let (id, q) = (path(id)?, query(q)?);
    let (scenario, state) = app.scenario(q.scenario.as_deref())?;
    let zone = zone_in(&state, &id)?;
    let snap = fresh_snapshot(&scenario, &state)?;
    let pairs = snap
        .zone_pairs(&zone)
        .map(|p| ZonePairView {
            other: if p.u == zone {
                p.v.clone()
            } else {
                p.u.clone()
            },
            layers: p.layers.clone(),
            connectivity: p.connectivity,
        })
        .collect();
    let relevance = snap
        .zone_relevance(&zone)
        .map(|r| ZoneRelevanceView {
            layer: r.layer.clone(),
            value: r.value,
        })
        .collect();
    let heel = snap.heel(&zone).cloned().unwrap_or(HeelScore {
        zone: zone.clone(),
        value: 0.0,
        witness: None,
    });
    Ok(Json(ZoneMetricsView {
        mean_connectivity: snap.mean_connectivity(&zone),
        fingerprint: snap.fingerprint.clone(),
        zone,
        scenario,
        pairs,
        relevance,
        heel,
    }))
}

fn fresh_snapshot(
    id: &str,
    state: &ScenarioState,
) -> ApiResult<std::sync::Arc<umn_core::MetricSnapshot>> {
    match state.snapshot() {
        Some(s) if !state.is_stale() => Ok(s.clone()),
        _ => Err(ApiError::stale(id)),
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ScenarioView {
    pub id: String,
    pub base_fingerprint: String,
    pub fingerprint: String,
    pub mutations: Vec<Mutation>,
    pub stale: bool,
}

fn view(id: &str, state: &ScenarioState) -> ScenarioView {
    ScenarioView {
        id: id.to_owned(),
        base_fingerprint: state.base().fingerprint().to_owned(),
        fingerprint: state.network().fingerprint(),
        mutations: state.mutations().to_vec(),
        stale: state.is_stale(),
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateScenario {
    /// Start from a copy of this scenario instead of the base.
    from: Option<String>,
    /// Rebuild from an exported log.
    replay: Option<ScenarioLog>,
}

pub async fn create_scenario(State(app): State<AppState>, bytes: Bytes) -> ApiResult<Response> {
    let req: CreateScenario = if bytes.iter().all(u8::is_ascii_whitespace) {
        CreateScenario::default()
    } else {
        body(&bytes, "invalid-request")?
    };
    let state = match (req.from, req.replay) {
        (Some(_), Some(_)) => {
            return Err(ApiError::bad_request(
                "invalid-request",
                "give either `from` or `replay`, not both",
            ))
        }
        (Some(from), None) => app.scenario(Some(&from))?.1,
        (None, Some(log)) => {
            ScenarioState::replay(app.base().clone(), &log).map_err(ApiError::from_mutation)?
        }
        (None, None) => app.scenario(None)?.1,
    };
    let id = app.insert(state.clone());
    Ok((StatusCode::CREATED, Json(view(&id, &state))).into_response())
}

pub async fn get_scenario(
    State(app): State<AppState>,
    id: Result<Path<String>, PathRejection>,
) -> ApiResult<Json<ScenarioView>> {
    let (id, state) = app.scenario(Some(&path(id)?))?;
    Ok(Json(view(&id, &state)))
}

fn writable(id: &str) -> ApiResult<()> {
    if id == BASE_SCENARIO {
        return Err(ApiError::conflict(
            "read-only-scenario",
            "the base scenario cannot be mutated; create a scenario from it",
        ));
    }
    Ok(())
}

#[derive(Deserialize)]
#[serde(untagged)]
enum MutationBatch {
    One(Mutation),
    Many(Vec<Mutation>),
}

pub async fn add_mutations(
    State(app): State<AppState>,
    id: Result<Path<String>, PathRejection>,
    bytes: Bytes,
) -> ApiResult<Json<ScenarioView>> {
    let id = path(id)?;
    let entry = app.entry(&id)?;
    writable(&id)?;
    let batch: Vec<Mutation> = match serde_json::from_slice(&bytes) {
        Ok(MutationBatch::One(m)) => vec![m],
        Ok(MutationBatch::Many(ms)) => ms,
        Err(_) => {
            // Re-parse as a single mutation for a more specific message.
            let err = serde_json::from_slice::<Mutation>(&bytes).err();
            return Err(ApiError::bad_request(
                "invalid-mutation",
                err.map_or_else(|| "malformed mutation".to_owned(), |e| e.to_string()),
            ));
        }
    };
    let _guard = entry.write.lock().await;
    let next = entry
        .get()
        .apply_all(batch)
        .map_err(ApiError::from_mutation)?;
    entry.set(next.clone());
    Ok(Json(view(&id, &next)))
}

pub async fn remove_mutation(
    State(app): State<AppState>,
    params: Result<Path<(String, usize)>, PathRejection>,
) -> ApiResult<Json<ScenarioView>> {
    let (id, index) = path(params)?;
    let entry = app.entry(&id)?;
    writable(&id)?;
    let _guard = entry.write.lock().await;
    let current = entry.get();
    if index >= current.mutations().len() {
        return Err(ApiError::not_found(
            "unknown-mutation",
            format!(
                "scenario `{id}` has {} mutations",
                current.mutations().len()
            ),
        ));
    }
    let next = current
        .without_mutation(index)
        .map_err(ApiError::from_mutation)?;
    entry.set(next.clone());
    Ok(Json(view(&id, &next)))
}

pub async fn recompute(
    State(app): State<AppState>,
    id: Result<Path<String>, PathRejection>,
) -> ApiResult<Json<ScenarioView>> {
    let id = path(id)?;
    let entry = app.entry(&id)?;
    let _guard = entry.write.lock().await;
    let current = entry.get();
    let config = app.config().metrics;
    let next = tokio::task::spawn_blocking(move || current.recompute(config))
        .await
        .map_err(|e| ApiError::internal(format!("recompute task failed: {e}")))?;
    entry.set(next.clone());
    Ok(Json(view(&id, &next)))
}

pub async fn scenario_snapshot(
    State(app): State<AppState>,
    id: Result<Path<String>, PathRejection>,
) -> ApiResult<Response> {
    let (id, state) = app.scenario(Some(&path(id)?))?;
    let snap = fresh_snapshot(&id, &state)?;
    Ok(Json(&*snap).into_response())
}

pub async fn scenario_diff(
    State(app): State<AppState>,
    id: Result<Path<String>, PathRejection>,
    q: Result<Query<DiffQuery>, QueryRejection>,
) -> ApiResult<Response> {
    let (id, q) = (path(id)?, query(q)?);
    let (id, state) = app.scenario(Some(&id))?;
    let (other_id, other) = app.scenario(q.against.as_deref())?;
    let to = fresh_snapshot(&id, &state)?;
    let from = fresh_snapshot(&other_id, &other)?;
    Ok(Json(diff(&from, &to)).into_response())
}

pub async fn export_scenario(
    State(app): State<AppState>,
    id: Result<Path<String>, PathRejection>,
) -> ApiResult<Json<ScenarioLog>> {
    let (_, state) = app.scenario(Some(&path(id)?))?;
    Ok(Json(state.log()))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct AchillesView {
    pub scenario: String,
    pub fingerprint: String,
    pub heel: Option<HeelScore>,
    pub ranking: Vec<HeelScore>,
}

pub async fn achilles(
    State(app): State<AppState>,
    q: Result<Query<AchillesQuery>, QueryRejection>,
) -> ApiResult<Json<AchillesView>> {
    let q = query(q)?;
    let (scenario, state) = app.scenario(q.scenario.as_deref())?;
    let snap = fresh_snapshot(&scenario, &state)?;
    let ranking = snap.heel_ranking(q.n);
    Ok(Json(AchillesView {
        heel: snap.heel_ranking(1).into_iter().next(),
        fingerprint: snap.fingerprint.clone(),
        scenario,
        ranking,
    }))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PercolationRequest {
    scenario: Option<String>,
    #[serde(default = "RemovalStrategy::weak_first")]
    strategy: RemovalStrategy,
}

pub async fn start_percolation(State(app): State<AppState>, bytes: Bytes) -> ApiResult<Response> {
    let req: PercolationRequest = body(&bytes, "invalid-strategy")?;
    let (_, state) = app.scenario(req.scenario.as_deref())?;
    let config = app.config().metrics;
    let edges = state.network().edge_count();
    let run = move || {
        percolate(state.network(), req.strategy, config)
            .map_err(|e| ApiError::bad_request("invalid-network", e.to_string()))
    };
    if edges <= app.config().async_edge_threshold {
        let curve = tokio::task::spawn_blocking(run)
            .await
            .map_err(|e| ApiError::internal(format!("percolation task failed: {e}")))??;
        return Ok(Json(curve).into_response());
    }
    let job = app.fresh_id("job");
    app.set_job(&job, JobStatus::Running);
    let (store, key) = (app.clone(), job.clone());
    tokio::spawn(async move {
        let status = match tokio::task::spawn_blocking(run).await {
            Ok(Ok(curve)) => JobStatus::Done {
                curve: Box::new(curve),
            },
            Ok(Err(error)) => JobStatus::Failed { error },
            Err(e) => JobStatus::Failed {
                error: ApiError::internal(format!("percolation task failed: {e}")),
            },
        };
        store.set_job(&key, status);
    });
    Ok((
        StatusCode::ACCEPTED,
        Json(json!({ "job": job, "status": "running", "edges": edges })),
    )
        .into_response())
}

pub async fn percolation_job(
    State(app): State<AppState>,
    id: Result<Path<String>, PathRejection>,
) -> ApiResult<Json<Value>> {
    let id = path(id)?;
    let status = app
        .job(&id)
        .ok_or_else(|| ApiError::not_found("unknown-job", format!("no percolation job `{id}`")))?;
    let mut out = serde_json::to_value(status).map_err(|e| ApiError::internal(e.to_string()))?;
    out["job"] = Value::String(id);
    Ok(Json(out))
}

pub async fn not_found() -> ApiError {
    ApiError::not_found("no-route", "no such endpoint")
}

pub async fn method_not_allowed() -> ApiError {
    ApiError::new(
        StatusCode::METHOD_NOT_ALLOWED,
        "method-not-allowed",
        "method not allowed on this endpoint",
    )
}
