//! Travel-time sources for the destination accessibility score.

use std::collections::HashMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::Point;
use crate::scoring::TravelTimeRecord;

pub const DEFAULT_API_KEY_ENV: &str = "VERTISITE_TRAVEL_API_KEY";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProviderError {
    #[error("MISSING_PAIR: no travel time for destination {dest_id} from node {node_id}")]
    MissingPair { dest_id: String, node_id: String },
    #[error("environment variable {0} is not set")]
    MissingApiKey(String),
    #[error("request for ({dest_id}, {node_id}) failed after {attempts} attempts: {message}")]
    Network {
        dest_id: String,
        node_id: String,
        attempts: usize,
        message: String,
    },
    #[error("malformed response for ({dest_id}, {node_id}): {excerpt}")]
    Malformed {
        dest_id: String,
        node_id: String,
        excerpt: String,
    },
}

/// One travel-time lookup: from the transport node to the destination.
#[derive(Clone, Copy, Debug)]
pub struct TravelQuery<'a> {
    pub dest_id: &'a str,
    pub node_id: &'a str,
    pub origin: Point,
    pub destination: Point,
}

/// Answers travel-time queries in minutes. Implementations must return the
/// same value for repeated identical queries within one run and be safe to
/// share between threads.
pub trait TravelTimeProvider: Send + Sync {
    fn minutes(&self, query: &TravelQuery<'_>) -> Result<f64, ProviderError>;
}

/// Table-backed provider.
#[derive(Clone, Debug, Default)]
pub struct FileTravelTimeProvider {
    table: HashMap<(String, String), f64>,
}

impl FileTravelTimeProvider {
    /// Later rows win when a pair repeats; ingest rejects duplicates earlier.
    pub fn from_records(records: &[TravelTimeRecord]) -> Self {
        let table = records
            .iter()
            .map(|r| ((r.dest_id.clone(), r.node_id.clone()), r.minutes))
            .collect();
        FileTravelTimeProvider { table }
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }
}

impl TravelTimeProvider for FileTravelTimeProvider {
    fn minutes(&self, q: &TravelQuery<'_>) -> Result<f64, ProviderError> {
        self.table
            .get(&(q.dest_id.to_string(), q.node_id.to_string()))
            .copied()
            .ok_or_else(|| ProviderError::MissingPair {
                dest_id: q.dest_id.to_string(),
                node_id: q.node_id.to_string(),
            })
    }
}

#[derive(Serialize)]
struct XY {
    x: f64,
    y: f64,
}

#[derive(Serialize)]
struct RouteRequest {
    origin: XY,
    destination: XY,
}

#[derive(Deserialize)]
struct RouteResponse {
    minutes: f64,
}

/// JSON-over-HTTP provider.
///
/// Sends `POST {"origin":{"x":..,"y":..},"destination":{"x":..,"y":..}}` with
/// `Authorization: Bearer <key>` and expects `{"minutes": <number>}`. Server
/// errors (5xx, 429) and transport failures are retried with exponential
/// backoff; results are memoized per (destination, node) pair.
pub struct HttpTravelTimeProvider {
    endpoint: String,
    api_key: String,
    agent: ureq::Agent,
    max_attempts: usize,
    backoff: Duration,
    cache: Mutex<HashMap<(String, String), f64>>,
    requests: AtomicUsize,
}

impl HttpTravelTimeProvider {
    /// Reads the API key from `key_env`.
    pub fn from_env(endpoint: impl Into<String>, key_env: &str) -> Result<Self, ProviderError> {
        let key = std::env::var(key_env).map_err(|_| ProviderError::MissingApiKey(key_env.to_string()))?;
        Ok(Self::new(endpoint, key))
    }

    pub fn new(endpoint: impl Into<String>, api_key: impl Into<String>) -> Self {
        HttpTravelTimeProvider {
            endpoint: endpoint.into(),
            api_key: api_key.into(),
            agent: ureq::AgentBuilder::new().timeout(Duration::from_secs(30)).build(),
            max_attempts: 3,
            backoff: Duration::from_millis(250),
            cache: Mutex::new(HashMap::new()),
            requests: AtomicUsize::new(0),
        }
    }

    pub fn with_backoff(mut self, backoff: Duration) -> Self {
        self.backoff = backoff;
        self
    }

    pub fn with_max_attempts(mut self, attempts: usize) -> Self {
        self.max_attempts = attempts.max(1);
        self
    }

    /// Number of HTTP requests issued so far, including retries.
    pub fn request_count(&self) -> usize {
        self.requests.load(Ordering::Relaxed)
    }

    fn fetch(&self, q: &TravelQuery<'_>) -> Result<f64, ProviderError> {
        let body = RouteRequest {
            origin: XY {
                x: q.origin.x,
                y: q.origin.y,
            },
            destination: XY {
                x: q.destination.x,
                y: q.destination.y,
            },
        };
        let mut last = String::new();
        for attempt in 1..=self.max_attempts {
            self.requests.fetch_add(1, Ordering::Relaxed);
            let resp = self
                .agent
                .post(&self.endpoint)
                .set("Authorization", &format!("Bearer {}", self.api_key))
                .send_json(&body);
            let retryable = match resp {
                Ok(r) => {
                    let text = r.into_string().unwrap_or_default();
                    return parse_minutes(&text).ok_or_else(|| ProviderError::Malformed {
                        dest_id: q.dest_id.to_string(),
                        node_id: q.node_id.to_string(),
                        excerpt: text.chars().take(200).collect(),
                    });
                }
                Err(ureq::Error::Status(code, _)) if code >= 500 || code == 429 => {
                    last = format!("HTTP {code}");
                    true
                }
                Err(ureq::Error::Status(code, r)) => {
                    let text = r.into_string().unwrap_or_default();
                    last = format!("HTTP {code}: {}", text.chars().take(200).collect::<String>());
                    false
                }
                Err(ureq::Error::Transport(t)) => {
                    last = t.to_string();
                    true
                }
            };
            log::warn!(
                "travel time request ({}, {}) attempt {attempt}/{} failed: {last}",
                q.dest_id,
                q.node_id,
                self.max_attempts
            );
            if !retryable {
                return Err(ProviderError::Network {
                    dest_id: q.dest_id.to_string(),
                    node_id: q.node_id.to_string(),
                    attempts: attempt,
                    message: last,
                });
            }
            if attempt < self.max_attempts {
                std::thread::sleep(self.backoff * (1 << (attempt - 1)) as u32);
            }
        }
        Err(ProviderError::Network {
            dest_id: q.dest_id.to_string(),
            node_id: q.node_id.to_string(),
            attempts: self.max_attempts,
            message: last,
        })
    }
}

fn parse_minutes(text: &str) -> Option<f64> {
    let r: RouteResponse = serde_json::from_str(text).ok()?;
    (r.minutes.is_finite() && r.minutes >= 0.0).then_some(r.minutes)
}

impl TravelTimeProvider for HttpTravelTimeProvider {
    fn minutes(&self, q: &TravelQuery<'_>) -> Result<f64, ProviderError> {
        let key = (q.dest_id.to_string(), q.node_id.to_string());
        // The lock is held across the request so concurrent callers asking
        // for the same pair never trigger a second request.
        let mut cache = self.cache.lock().unwrap_or_else(|e| e.into_inner());
        if let Some(&m) = cache.get(&key) {
            return Ok(m);
        }
        let m = self.fetch(q)?;
        cache.insert(key, m);
        Ok(m)
    }
}
