use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskStatus {
    Ok,
    Cached,
    Failed,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaskRecord {
    /// Referenced by the `task_id` column of every CSV row the task emits.
    pub id: String,
    pub kind: String,
    pub status: TaskStatus,
    /// Failure of a required task makes the run fail.
    pub required: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cache_key: Option<String>,
    pub wall_time: f64,
    pub detail: serde_json::Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub module: String,
    pub config_hash: String,
    pub artifact_version: String,
    pub config: serde_json::Value,
    pub tasks: Vec<TaskRecord>,
    pub warnings: Vec<String>,
    /// Artifacts this run consumed or had to build first.
    pub dependencies: Vec<String>,
    pub outputs: Vec<String>,
    pub started_unix: f64,
    pub finished_unix: f64,
}

pub fn unix_now() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0)
}

impl Manifest {
    pub fn failed(&self) -> bool {
        self.tasks.iter().any(|t| t.required && t.status == TaskStatus::Failed)
    }

    pub fn cache_hits(&self) -> usize {
        self.tasks.iter().filter(|t| t.status == TaskStatus::Cached).count()
    }
}
