use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, RwLock};

use serde::Serialize;
use tokio::sync::Mutex;
use umn_core::{MetricConfig, PercolationCurve, ScenarioBase, ScenarioState};

use crate::error::ApiError;

pub const BASE_SCENARIO: &str = "base";

#[derive(Clone, Debug)]
pub struct ServiceConfig {
    pub metrics: MetricConfig,
    /// Percolation requests on networks with more edges run as background jobs.
    pub async_edge_threshold: usize,
    /// Allowed CORS origin; any origin when unset.
    pub cors_origin: Option<String>,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            metrics: MetricConfig::default(),
            async_edge_threshold: 5000,
            cors_origin: None,
        }
    }
}

/// One stored scenario. Readers clone `state`; writers hold `write` for the
/// whole read-modify-write so updates to one id are serialized.
pub(crate) struct Entry {
    state: RwLock<ScenarioState>,
    pub(crate) write: Mutex<()>,
}

impl Entry {
    fn new(state: ScenarioState) -> Arc<Self> {
        Arc::new(Self {
            state: RwLock::new(state),
            write: Mutex::new(()),
        })
    }

    pub(crate) fn get(&self) -> ScenarioState {
        self.state.read().expect("scenario lock poisoned").clone()
    }

    pub(crate) fn set(&self, state: ScenarioState) {
        *self.state.write().expect("scenario lock poisoned") = state;
    }
}

#[derive(Clone, Debug, Serialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum JobStatus {
    Running,
    Done { curve: Box<PercolationCurve> },
    Failed { error: ApiError },
}

pub(crate) struct Inner {
    pub(crate) base: Arc<ScenarioBase>,
    pub(crate) config: ServiceConfig,
    scenarios: RwLock<HashMap<String, Arc<Entry>>>,
    jobs: RwLock<HashMap<String, JobStatus>>,
    next_id: AtomicU64,
}

/// Shared server state: the base dataset, the scenario store and percolation jobs.
#[derive(Clone)]
pub struct AppState(pub(crate) Arc<Inner>);

impl AppState {
    /// Builds the store with the `base` scenario already recomputed.
    pub fn new(base: Arc<ScenarioBase>, config: ServiceConfig) -> Self {
        let initial = ScenarioState::new(base.clone()).recompute(config.metrics);
        let mut scenarios = HashMap::new();
        scenarios.insert(BASE_SCENARIO.to_owned(), Entry::new(initial));
        Self(Arc::new(Inner {
            base,
            config,
            scenarios: RwLock::new(scenarios),
            jobs: RwLock::new(HashMap::new()),
            next_id: AtomicU64::new(1),
        }))
    }

    pub fn config(&self) -> &ServiceConfig {
        &self.0.config
    }

    pub fn base(&self) -> &Arc<ScenarioBase> {
        &self.0.base
    }

    pub(crate) fn fresh_id(&self, prefix: &str) -> String {
        format!(
            "{prefix}-{}",
            self.0.next_id.fetch_add(1, Ordering::Relaxed)
        )
    }

    pub(crate) fn entry(&self, id: &str) -> Result<Arc<Entry>, ApiError> {
        self.0
            .scenarios
            .read()
            .expect("store lock poisoned")
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::not_found("unknown-scenario", format!("no scenario `{id}`")))
    }

    /// Current state of a scenario; `None` selects the base.
    pub fn scenario(&self, id: Option<&str>) -> Result<(String, ScenarioState), ApiError> {
        let id = id.unwrap_or(BASE_SCENARIO);
        Ok((id.to_owned(), self.entry(id)?.get()))
    }

    pub(crate) fn insert(&self, state: ScenarioState) -> String {
        let id = self.fresh_id("scn");
        self.0
            .scenarios
            .write()
            .expect("store lock poisoned")
            .insert(id.clone(), Entry::new(state));
        id
    }

    pub(crate) fn set_job(&self, id: &str, status: JobStatus) {
        self.0
            .jobs
            .write()
            .expect("job lock poisoned")
            .insert(id.to_owned(), status);
    }

    pub(crate) fn job(&self, id: &str) -> Option<JobStatus> {
        self.0
            .jobs
            .read()
            .expect("job lock poisoned")
            .get(id)
            .cloned()
    }
}
