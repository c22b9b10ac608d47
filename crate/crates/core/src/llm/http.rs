use std::sync::{Condvar, Mutex};
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value as Json};

use super::prompt::encode_prepended;
use super::provider::{ChatProvider, CompletionRequest, ProviderInfo, RoleEncoding};
use super::LlmError;

/// Settings for an OpenAI-compatible endpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HttpSpec {
    /// Base URL; `/chat/completions` or `/completions` is appended.
    pub endpoint: String,
    /// Environment variable holding the bearer token.
    pub api_key_env: String,
    pub max_in_flight: usize,
    pub max_retries: u32,
    pub backoff_ms: u64,
    pub timeout_secs: u64,
}

impl Default for HttpSpec {
    fn default() -> HttpSpec {
        HttpSpec {
            endpoint: "https://api.openai.com/v1".into(),
            api_key_env: "LIPS_API_KEY".into(),
            max_in_flight: 4,
            max_retries: 5,
            backoff_ms: 500,
            timeout_secs: 120,
        }
    }
}

/// Counting semaphore bounding concurrent requests.
struct Gate {
    free: Mutex<usize>,
    cv: Condvar,
}

impl Gate {
    fn acquire(&self) -> GateGuard<'_> {
        let mut free = self.free.lock().expect("gate lock");
        while *free == 0 {
            free = self.cv.wait(free).expect("gate lock");
        }
        *free -= 1;
        GateGuard(self)
    }
}

struct GateGuard<'a>(&'a Gate);

impl Drop for GateGuard<'_> {
    fn drop(&mut self) {
        *self.0.free.lock().expect("gate lock") += 1;
        self.0.cv.notify_one();
    }
}

pub struct HttpProvider {
    spec: HttpSpec,
    api_key: Option<String>,
    agent: ureq::Agent,
    gate: Gate,
}

impl HttpProvider {
    /// Reads the API key from `spec.api_key_env`; a missing variable is
    /// allowed for endpoints without authentication.
    pub fn new(spec: HttpSpec) -> Result<HttpProvider, LlmError> {
        if spec.max_in_flight == 0 {
            return Err(LlmError::Config("max_in_flight must be at least 1".into()));
        }
        let api_key = std::env::var(&spec.api_key_env).ok().filter(|k| !k.is_empty());
        let config = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(Duration::from_secs(spec.timeout_secs)))
            .build();
        Ok(HttpProvider {
            gate: Gate { free: Mutex::new(spec.max_in_flight), cv: Condvar::new() },
            agent: ureq::Agent::new_with_config(config),
            api_key,
            spec,
        })
    }

    fn body(&self, req: &CompletionRequest, n: usize) -> (String, Json) {
        let p = &req.params;
        let base = self.spec.endpoint.trim_end_matches('/');
        let (url, mut body) = match p.role_encoding {
            RoleEncoding::Metadata => (
                format!("{base}/chat/completions"),
                json!({
                    "model": p.model,
                    "messages": req.messages.iter().map(|m| json!({"role": m.role.name(), "content": m.content})).collect::<Vec<_>>(),
                }),
            ),
            RoleEncoding::PrependedText => {
                (format!("{base}/completions"), json!({"model": p.model, "prompt": encode_prepended(&req.messages)}))
            }
        };
        let obj = body.as_object_mut().expect("object literal");
        obj.insert("temperature".into(), json!(p.temperature));
        obj.insert("n".into(), json!(n));
        if let Some(top_p) = p.top_p {
            obj.insert("top_p".into(), json!(top_p));
        }
        if let Some(max_tokens) = p.max_tokens {
            obj.insert("max_tokens".into(), json!(max_tokens));
        }
        if !p.stop.is_empty() {
            obj.insert("stop".into(), json!(p.stop));
        }
        (url, body)
    }

    /// One HTTP exchange with retries on transport errors, 429 and 5xx.
    fn send(&self, url: &str, body: &Json) -> Result<Json, LlmError> {
        let _slot = self.gate.acquire();
        let mut attempt = 0;
        loop {
            let mut call = self.agent.post(url).header("Content-Type", "application/json");
            if let Some(key) = &self.api_key {
                call = call.header("Authorization", &format!("Bearer {key}"));
            }
            let outcome = call.send(serde_json::to_vec(body).expect("json body"));
            let retry_after = match outcome {
                Ok(mut resp) => {
                    let status = resp.status().as_u16();
                    let text = resp.body_mut().read_to_string().unwrap_or_default();
                    if (200..300).contains(&status) {
                        return serde_json::from_str(&text)
                            .map_err(|e| LlmError::Malformed(format!("response is not JSON: {e}")));
                    }
                    if status != 429 && status < 500 {
                        return Err(LlmError::Http { status, body: text });
                    }
                    if attempt >= self.spec.max_retries {
                        return Err(LlmError::Http { status, body: text });
                    }
                    resp.headers()
                        .get("retry-after")
                        .and_then(|v| v.to_str().ok())
                        .and_then(|v| v.trim().parse::<u64>().ok())
                        .map(|s| Duration::from_secs(s.min(60)))
                }
                Err(e) => {
                    if attempt >= self.spec.max_retries {
                        return Err(LlmError::Transport(e.to_string()));
                    }
                    None
                }
            };
            let backoff = Duration::from_millis(self.spec.backoff_ms.saturating_mul(1 << attempt.min(16)));
            thread::sleep(retry_after.unwrap_or(backoff));
            attempt += 1;
        }
    }
}

fn choices(resp: &Json) -> Result<Vec<String>, LlmError> {
    let arr = resp
        .get("choices")
        .and_then(Json::as_array)
        .ok_or_else(|| LlmError::Malformed("response has no `choices` array".into()))?;
    arr.iter()
        .map(|c| {
            c.pointer("/message/content")
                .or_else(|| c.get("text"))
                .and_then(Json::as_str)
                .map(str::to_string)
                .ok_or_else(|| LlmError::Malformed("choice has neither message.content nor text".into()))
        })
        .collect()
}

impl ChatProvider for HttpProvider {
    fn complete(&self, req: &CompletionRequest) -> Result<Vec<String>, LlmError> {
        let mut out = Vec::with_capacity(req.n);
        // Some endpoints cap or ignore `n`; keep asking for the remainder.
        while out.len() < req.n {
            let (url, body) = self.body(req, req.n - out.len());
            let got = choices(&self.send(&url, &body)?)?;
            if got.is_empty() {
                return Err(LlmError::Malformed("response has no choices".into()));
            }
            out.extend(got);
        }
        out.truncate(req.n);
        Ok(out)
    }

    fn info(&self) -> ProviderInfo {
        ProviderInfo { kind: "http".into(), endpoint: Some(self.spec.endpoint.clone()) }
    }
}
