use std::sync::{Condvar, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use serde_json::{json, Value as Json};

use super::provider::{CompletionRequest, Provider, ProviderConfig, ProviderError};

/// OpenAI-compatible chat-completions client.
///
/// At most `max_in_flight` requests run at once. A 429 from any caller pushes
/// back every caller until the shared cooldown expires.
pub struct HttpProvider {
    client: reqwest::blocking::Client,
    endpoint: String,
    model: String,
    api_key: String,
    max_retries: u32,
    backoff: Duration,
    slots: Semaphore,
    cooldown_until: Mutex<Option<Instant>>,
}

impl std::fmt::Debug for HttpProvider {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HttpProvider")
            .field("endpoint", &self.endpoint)
            .field("model", &self.model)
            .field("max_retries", &self.max_retries)
            .finish_non_exhaustive()
    }
}

struct Semaphore {
    free: Mutex<usize>,
    cv: Condvar,
}

struct Permit<'a>(&'a Semaphore);

impl Semaphore {
    fn new(n: usize) -> Self {
        Self {
            free: Mutex::new(n),
            cv: Condvar::new(),
        }
    }

    fn acquire(&self) -> Permit<'_> {
        let mut free = self.free.lock().unwrap();
        while *free == 0 {
            free = self.cv.wait(free).unwrap();
        }
        *free -= 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        *self.0.free.lock().unwrap() += 1;
        self.0.cv.notify_one();
    }
}

enum Attempt {
    Done(String),
    Fatal(ProviderError),
    Retry(ProviderError),
}

impl HttpProvider {
    /// `api_key` is passed in explicitly; callers read it from the environment.
    pub fn new(config: &ProviderConfig, api_key: String) -> Result<Self, ProviderError> {
        let base = config
            .effective_base_url()
            .ok_or_else(|| ProviderError::Config("missing base_url".into()))?;
        let model = config
            .model
            .clone()
            .ok_or_else(|| ProviderError::Config("missing model".into()))?;
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(config.timeout_secs.max(1)))
            .build()
            .map_err(|e| ProviderError::Config(e.to_string()))?;
        Ok(Self {
            client,
            endpoint: format!("{}/chat/completions", base.trim_end_matches('/')),
            model,
            api_key,
            max_retries: config.max_retries,
            backoff: Duration::from_millis(config.backoff_ms),
            slots: Semaphore::new(config.max_in_flight.max(1)),
            cooldown_until: Mutex::new(None),
        })
    }

    fn delay(&self, attempt: u32) -> Duration {
        self.backoff.saturating_mul(1u32 << attempt.min(16))
    }

    fn wait_for_cooldown(&self) {
        let until = *self.cooldown_until.lock().unwrap();
        if let Some(t) = until {
            let now = Instant::now();
            if t > now {
                thread::sleep(t - now);
            }
        }
    }

    fn push_cooldown(&self, d: Duration) {
        let target = Instant::now() + d;
        let mut g = self.cooldown_until.lock().unwrap();
        if g.is_none_or(|t| t < target) {
            *g = Some(target);
        }
    }

    fn attempt(&self, request: &CompletionRequest<'_>) -> (Attempt, Option<Duration>) {
        let body = json!({
            "model": self.model,
            "messages": [{"role": "user", "content": request.prompt}],
            "temperature": request.temperature,
        });
        let resp = match self
            .client
            .post(&self.endpoint)
            .bearer_auth(&self.api_key)
            .json(&body)
            .send()
        {
            Ok(r) => r,
            Err(e) => return (Attempt::Retry(ProviderError::Network(e.to_string())), None),
        };
        let status = resp.status();
        let retry_after = resp
            .headers()
            .get(reqwest::header::RETRY_AFTER)
            .and_then(|v| v.to_str().ok())
            .and_then(|s| s.trim().parse::<u64>().ok())
            .map(Duration::from_secs);
        let text = match resp.text() {
            Ok(t) => t,
            Err(e) => return (Attempt::Retry(ProviderError::Network(e.to_string())), None),
        };
        if status.as_u16() == 429 {
            let err = ProviderError::RateLimitedExhausted { attempts: 0 };
            return (Attempt::Retry(err), retry_after);
        }
        if !status.is_success() {
            let err = ProviderError::HttpStatus {
                status: status.as_u16(),
                body: text.chars().take(500).collect(),
            };
            return if status.is_server_error() || status.as_u16() == 408 {
                (Attempt::Retry(err), None)
            } else {
                (Attempt::Fatal(err), None)
            };
        }
        match extract_content(&text) {
            Ok(s) => (Attempt::Done(s), None),
            Err(e) => (Attempt::Fatal(e), None),
        }
    }
}

fn extract_content(body: &str) -> Result<String, ProviderError> {
    let v: Json = serde_json::from_str(body)
        .map_err(|e| ProviderError::MalformedResponse(format!("invalid JSON: {e}")))?;
    v.pointer("/choices/0/message/content")
        .and_then(Json::as_str)
        .map(str::to_string)
        .ok_or_else(|| {
            ProviderError::MalformedResponse("missing choices[0].message.content".into())
        })
}

impl Provider for HttpProvider {
    fn complete(&self, request: &CompletionRequest<'_>) -> Result<String, ProviderError> {
        let _permit = self.slots.acquire();
        let attempts = self.max_retries + 1;
        let mut last = ProviderError::Network("no attempt made".into());
        for attempt in 0..attempts {
            self.wait_for_cooldown();
            let (outcome, retry_after) = self.attempt(request);
            match outcome {
                Attempt::Done(s) => return Ok(s),
                Attempt::Fatal(e) => return Err(e),
                Attempt::Retry(e) => {
                    let delay = retry_after.unwrap_or_else(|| self.delay(attempt));
                    last = match e {
                        ProviderError::RateLimitedExhausted { .. } => {
                            self.push_cooldown(delay);
                            ProviderError::RateLimitedExhausted { attempts }
                        }
                        other => other,
                    };
                    if attempt + 1 < attempts {
                        thread::sleep(delay);
                    }
                }
            }
        }
        Err(last)
    }
}
