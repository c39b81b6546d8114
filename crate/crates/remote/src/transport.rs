//! Blocking HTTP with bounded concurrency and a fixed retry schedule.

use std::time::Duration;

use hgmcts_core::BackendError;
use reqwest::blocking::{Client, RequestBuilder};

use crate::limiter::ConcurrencyLimiter;
use crate::secret::SecretString;

const BODY_EXCERPT: usize = 200;

#[derive(Debug, Clone)]
pub(crate) struct Transport {
    pub http: Client,
    pub limiter: ConcurrencyLimiter,
    pub secret: Option<SecretString>,
    pub max_retries: u32,
    pub backoff: Vec<Duration>,
    /// Names the endpoint in errors and logs.
    pub label: &'static str,
}

impl Transport {
    pub fn new(
        timeout: Duration,
        limiter: ConcurrencyLimiter,
        secret: Option<SecretString>,
        max_retries: u32,
        backoff_ms: &[u64],
        label: &'static str,
    ) -> Result<Self, BackendError> {
        let http = Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| BackendError::Configuration(format!("cannot build http client: {e}")))?;
        Ok(Self {
            http,
            limiter,
            secret,
            max_retries,
            backoff: backoff_ms.iter().map(|&ms| Duration::from_millis(ms)).collect(),
            label,
        })
    }

    pub fn scrub(&self, text: &str) -> String {
        match &self.secret {
            Some(s) => s.scrub(text),
            None => text.to_string(),
        }
    }

    fn backoff_for(&self, retry: usize) -> Duration {
        match self.backoff.len() {
            0 => Duration::ZERO,
            n => self.backoff[retry.min(n - 1)],
        }
    }

    /// Send the request built by `build`, retrying transport failures and
    /// 5xx replies. 4xx replies fail immediately as configuration errors.
    /// Returns the response body.
    pub fn send(&self, build: impl Fn(&Client) -> RequestBuilder, request_bytes: usize) -> Result<String, BackendError> {
        let attempts = self.max_retries as usize + 1;
        let mut last = String::new();
        for attempt in 0..attempts {
            if attempt > 0 {
                std::thread::sleep(self.backoff_for(attempt - 1));
            }
            let outcome = {
                let _permit = self.limiter.acquire();
                build(&self.http).send().and_then(|resp| {
                    let status = resp.status();
                    resp.text().map(|body| (status, body))
                })
            };
            match outcome {
                Ok((status, body)) if status.is_success() => {
                    tracing::debug!(
                        endpoint = self.label,
                        attempt,
                        request_bytes,
                        response_bytes = body.len(),
                        "request succeeded"
                    );
                    return Ok(body);
                }
                Ok((status, body)) if status.is_client_error() => {
                    return Err(BackendError::Configuration(self.scrub(&format!(
                        "{} rejected the request with HTTP {}: {}",
                        self.label,
                        status.as_u16(),
                        excerpt(&body)
                    ))));
                }
                Ok((status, body)) => {
                    last = format!("HTTP {}: {}", status.as_u16(), excerpt(&body));
                }
                Err(e) if e.is_builder() => {
                    return Err(BackendError::Configuration(
                        self.scrub(&format!("{}: invalid request: {}", self.label, e.without_url())),
                    ));
                }
                Err(e) => last = e.without_url().to_string(),
            }
            tracing::warn!(endpoint = self.label, attempt, error = %self.scrub(&last), "request failed");
        }
        Err(BackendError::Unavailable(self.scrub(&format!(
            "{} failed after {attempts} attempts: {last}",
            self.label
        ))))
    }
}

fn excerpt(body: &str) -> String {
    let trimmed = body.trim();
    match trimmed.char_indices().nth(BODY_EXCERPT) {
        Some((i, _)) => format!("{}…", &trimmed[..i]),
        None => trimmed.to_string(),
    }
}
