//! HTTP provider client.
//!
//! Each request is `POST <endpoint>/v1/<kind>` with body
//! `{"kind": .., "ref": .., "context": {..}}`; a successful answer is HTTP 200
//! with `{"ref": .., "payload": ..}`. Text kinds carry their payload as a
//! JSON string. Transport failures, 429 and 5xx are retried with exponential
//! backoff; other statuses fail at once.

use std::collections::HashMap;
use std::thread;
use std::time::Duration;

use serde::Deserialize;
use serde_json::value::RawValue;

use super::{Backend, Kind, ProviderError, Raw, Subject};
use crate::config::ProviderConfig;

/// Overrides `provider.endpoint` for every kind.
pub const ENDPOINT_ENV: &str = "CLIPCURATE_PROVIDER_ENDPOINT";

/// Per-kind override, e.g. `CLIPCURATE_PROVIDER_ENDPOINT_LUMA`.
pub fn kind_env(kind: Kind) -> String {
    format!("{ENDPOINT_ENV}_{}", kind.name().to_ascii_uppercase())
}

const MAX_BODY: u64 = 512 << 20;

pub struct RemoteBackend {
    agent: ureq::Agent,
    endpoints: HashMap<Kind, String>,
    max_attempts: u32,
    backoff: Duration,
}

#[derive(Deserialize)]
struct Envelope<'a> {
    #[serde(rename = "ref")]
    reference: String,
    #[serde(borrow)]
    payload: &'a RawValue,
}

impl RemoteBackend {
    pub fn from_config(cfg: &ProviderConfig) -> Result<Self, ProviderError> {
        let base = std::env::var(ENDPOINT_ENV).ok().or_else(|| cfg.endpoint.clone());
        let mut endpoints = HashMap::new();
        for kind in Kind::ALL {
            if let Some(url) = std::env::var(kind_env(kind)).ok().or_else(|| base.clone()) {
                endpoints.insert(kind, url.trim_end_matches('/').to_string());
            }
        }
        if endpoints.is_empty() {
            return Err(ProviderError::Setup("remote provider has no endpoint".into()));
        }
        Ok(Self::new(endpoints, Duration::from_millis(cfg.timeout_ms), cfg.max_attempts, Duration::from_millis(cfg.backoff_ms)))
    }

    pub fn new(endpoints: HashMap<Kind, String>, timeout: Duration, max_attempts: u32, backoff: Duration) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        RemoteBackend { agent, endpoints, max_attempts: max_attempts.max(1), backoff }
    }

    fn attempt(&self, url: &str, body: &[u8]) -> Result<(u16, Vec<u8>), String> {
        let mut resp = self
            .agent
            .post(url)
            .header("content-type", "application/json")
            .send(body)
            .map_err(|e| e.to_string())?;
        let status = resp.status().as_u16();
        let bytes = resp
            .body_mut()
            .with_config()
            .limit(MAX_BODY)
            .read_to_vec()
            .map_err(|e| e.to_string())?;
        Ok((status, bytes))
    }
}

impl Backend for RemoteBackend {
    fn identity(&self) -> String {
        let mut parts: Vec<String> = self.endpoints.iter().map(|(k, u)| format!("{k}={u}")).collect();
        parts.sort();
        format!("remote:{}", parts.join(","))
    }

    fn fetch(&self, kind: Kind, subject: &Subject<'_>) -> Result<Raw, ProviderError> {
        let reference = subject.reference();
        let Some(base) = self.endpoints.get(&kind) else {
            return Err(ProviderError::NotConfigured { kind, reference: reference.to_string() });
        };
        let url = format!("{base}/v1/{}", kind.name());
        let body = serde_json::to_vec(&serde_json::json!({
            "kind": kind.name(),
            "ref": reference,
            "context": subject.context(),
        }))
        .expect("request serializes");

        let mut last = String::new();
        for attempt in 1..=self.max_attempts {
            if attempt > 1 {
                thread::sleep(self.backoff * 2u32.saturating_pow(attempt - 2));
            }
            match self.attempt(&url, &body) {
                Ok((200, bytes)) => return unwrap_envelope(kind, reference, &bytes),
                Ok((status, bytes)) if status == 429 || status >= 500 => {
                    last = format!("HTTP {status}: {}", snippet(&bytes));
                }
                Ok((status, bytes)) => {
                    return Err(ProviderError::Rejected {
                        kind,
                        reference: reference.to_string(),
                        status,
                        body: snippet(&bytes),
                    })
                }
                Err(e) => last = e,
            }
            log::debug!("{kind} {reference}: attempt {attempt} failed: {last}");
        }
        Err(ProviderError::Transport { kind, reference: reference.to_string(), attempts: self.max_attempts, message: last })
    }
}

fn snippet(bytes: &[u8]) -> String {
    let s = String::from_utf8_lossy(bytes);
    s.chars().take(200).collect()
}

fn unwrap_envelope(kind: Kind, reference: &str, bytes: &[u8]) -> Result<Raw, ProviderError> {
    let schema = |message: String| ProviderError::Schema { kind, reference: reference.to_string(), message };
    let env: Envelope<'_> = serde_json::from_slice(bytes).map_err(|e| schema(format!("response envelope: {e}")))?;
    if env.reference != reference {
        return Err(schema(format!("response is for {:?}", env.reference)));
    }
    if kind.is_text() {
        let text: String = serde_json::from_str(env.payload.get()).map_err(|e| schema(format!("text payload: {e}")))?;
        Ok(Raw::Bytes(text.into_bytes()))
    } else {
        Ok(Raw::Bytes(env.payload.get().as_bytes().to_vec()))
    }
}
