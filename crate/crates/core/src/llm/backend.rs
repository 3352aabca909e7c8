use std::collections::{BTreeMap, VecDeque};
use std::fs;
use std::path::PathBuf;
use std::sync::{Condvar, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::json;
use sha2::{Digest, Sha256};

use super::{GatewayError, TemplateName};
use crate::lexicon::{detect_category, has_route_cue, longest_mention, normalize_name};
use crate::query::{estimate_epsilon, split_intent, QueryKind};

/// One prompt in, one raw reply out.
pub trait ChatBackend: Send + Sync {
    fn id(&self) -> String;
    fn chat(&self, template: TemplateName, prompt: &str) -> Result<String, GatewayError>;
}

pub const DEFAULT_TOKEN_ENV: &str = "GEORAG_LLM_TOKEN";
pub const DEFAULT_MAX_CONCURRENCY: usize = 4;

#[derive(Debug, Clone)]
pub struct HttpChatConfig {
    /// API base, e.g. `https://host/v1`; `/chat/completions` is appended.
    pub base_url: String,
    pub model: String,
    /// Name of the environment variable holding the bearer token.
    pub token_env: String,
    pub timeout: Duration,
    pub max_concurrency: usize,
}

impl HttpChatConfig {
    pub fn new(base_url: impl Into<String>, model: impl Into<String>) -> Self {
        Self {
            base_url: base_url.into(),
            model: model.into(),
            token_env: DEFAULT_TOKEN_ENV.to_string(),
            timeout: Duration::from_secs(60),
            max_concurrency: DEFAULT_MAX_CONCURRENCY,
        }
    }
}

struct Permits {
    free: Mutex<usize>,
    cv: Condvar,
}

struct Permit<'a>(&'a Permits);

impl Permits {
    fn acquire(&self) -> Permit<'_> {
        let mut free = self.free.lock().unwrap_or_else(|e| e.into_inner());
        while *free == 0 {
            free = self.cv.wait(free).unwrap_or_else(|e| e.into_inner());
        }
        *free -= 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        *self.0.free.lock().unwrap_or_else(|e| e.into_inner()) += 1;
        self.0.cv.notify_one();
    }
}

/// Client for an OpenAI-style chat-completion endpoint.
pub struct HttpChat {
    config: HttpChatConfig,
    token: Option<String>,
    agent: ureq::Agent,
    permits: Permits,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<ChatChoice>,
}

#[derive(Deserialize)]
struct ChatChoice {
    message: ChatMessage,
}

#[derive(Deserialize)]
struct ChatMessage {
    content: String,
}

pub(crate) fn redact(text: &str, secret: Option<&str>) -> String {
    match secret {
        Some(s) if !s.is_empty() => text.replace(s, "***"),
        _ => text.to_string(),
    }
}

impl HttpChat {
    pub fn new(config: HttpChatConfig) -> Self {
        let token = std::env::var(&config.token_env).ok().filter(|t| !t.is_empty());
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(config.timeout))
            .build()
            .into();
        let permits = Permits {
            free: Mutex::new(config.max_concurrency.max(1)),
            cv: Condvar::new(),
        };
        Self {
            config,
            token,
            agent,
            permits,
        }
    }
}

impl ChatBackend for HttpChat {
    fn id(&self) -> String {
        format!("http:{}", self.config.model)
    }

    fn chat(&self, template: TemplateName, prompt: &str) -> Result<String, GatewayError> {
        let url = format!("{}/chat/completions", self.config.base_url.trim_end_matches('/'));
        let body = json!({
            "model": self.config.model,
            "temperature": 0,
            "messages": [{"role": "user", "content": prompt}],
        });
        let secret = self.token.as_deref();
        log::debug!(
            "POST {url} [{template}] authorization={} body={}",
            if secret.is_some() { "Bearer ***" } else { "none" },
            redact(&body.to_string(), secret)
        );
        let _permit = self.permits.acquire();
        let mut req = self.agent.post(&url);
        if let Some(t) = secret {
            req = req.header("Authorization", &format!("Bearer {t}"));
        }
        let mut resp = req
            .send_json(&body)
            .map_err(|e| GatewayError::Transport(redact(&e.to_string(), secret)))?;
        let text = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| GatewayError::Transport(e.to_string()))?;
        log::debug!("response [{template}] {}", redact(&text, secret));
        let parsed: ChatResponse =
            serde_json::from_str(&text).map_err(|e| GatewayError::Transport(format!("bad completion body: {e}")))?;
        parsed
            .choices
            .into_iter()
            .next()
            .map(|c| c.message.content)
            .ok_or_else(|| GatewayError::Transport("completion has no choices".into()))
    }
}

type Responder = dyn Fn(TemplateName, &str) -> Result<String, GatewayError> + Send + Sync;

/// Scripted backend for tests.
pub struct StubChat {
    responder: Box<Responder>,
}

impl StubChat {
    pub fn from_fn(f: impl Fn(TemplateName, &str) -> Result<String, GatewayError> + Send + Sync + 'static) -> Self {
        Self { responder: Box::new(f) }
    }

    /// Always answers `reply` for `template`; other templates fail.
    pub fn fixed(replies: BTreeMap<TemplateName, String>) -> Self {
        Self::from_fn(move |t, _| {
            replies
                .get(&t)
                .cloned()
                .ok_or_else(|| GatewayError::Transport(format!("stub has no reply for {t}")))
        })
    }

    /// Hands out `replies` in order, then fails.
    pub fn sequence(replies: Vec<String>) -> Self {
        let queue = Mutex::new(VecDeque::from(replies));
        Self::from_fn(move |_, _| {
            queue
                .lock()
                .unwrap_or_else(|e| e.into_inner())
                .pop_front()
                .ok_or_else(|| GatewayError::Transport("stub script exhausted".into()))
        })
    }
}

impl ChatBackend for StubChat {
    fn id(&self) -> String {
        "stub".into()
    }

    fn chat(&self, template: TemplateName, prompt: &str) -> Result<String, GatewayError> {
        (self.responder)(template, prompt)
    }
}

/// Offline backend answering from the prompt text with the rule-based
/// components, so the model-driven paths run without a service.
#[derive(Debug, Clone, Default)]
pub struct OfflineChat;

fn between<'a>(text: &'a str, start: &str, end: &str) -> Option<&'a str> {
    let from = text.find(start)? + start.len();
    let to = text[from..].find(end)? + from;
    Some(&text[from..to])
}

fn quoted_query<'a>(prompt: &'a str, lead: &str, tail: &str) -> &'a str {
    between(prompt, lead, tail).unwrap_or("")
}

impl OfflineChat {
    fn spatial(prompt: &str) -> String {
        let q = quoted_query(prompt, "extract spatial information: \"", "\"\n\nCurrent location context:");
        let count: usize = between(prompt, "- Number of location points: ", "\n")
            .and_then(|s| s.trim().parse().ok())
            .unwrap_or(0);
        let names = |label: &str| -> Vec<String> {
            between(prompt, label, "\n")
                .map(|s| s.split(", ").map(str::to_string).filter(|n| !n.is_empty()).collect())
                .unwrap_or_default()
        };
        let mut regions = names("Community/Sub-region names: ");
        regions.extend(names("Borough names: "));
        let normalized: Vec<String> = regions.iter().map(|n| normalize_name(n)).collect();
        let region = longest_mention(q, normalized.iter().map(String::as_str)).map(str::to_string);
        let (kind, region) = if count == 2 && has_route_cue(q) {
            (QueryKind::RouteBuffer, None)
        } else if region.is_some() {
            (QueryKind::RegionContain, region)
        } else {
            (QueryKind::PointRadius, None)
        };
        let eps = estimate_epsilon(q, kind);
        json!({
            "query_type": kind.to_string(),
            "region": region,
            "distance_km": (kind == QueryKind::PointRadius).then(|| eps.map(|e| e.km())).flatten(),
            "buffer_distance": (kind == QueryKind::RouteBuffer).then(|| eps.map(|e| e.meters())).flatten(),
        })
        .to_string()
    }

    fn intent(prompt: &str) -> String {
        let q = quoted_query(prompt, "extract constraints: \"", "\"\n\nFirst, determine");
        let intent = split_intent(q);
        let code = detect_category(q).and_then(|c| c.code()).unwrap_or('R');
        let nullable = |s: String| if s.is_empty() { serde_json::Value::Null } else { s.into() };
        json!({
            "type": code.to_string(),
            "spatial_constraints": nullable(intent.spatial_requirement),
            "user_constraints": nullable(intent.semantic_requirement),
        })
        .to_string()
    }

    fn rerank(prompt: &str) -> String {
        let n: usize = between(prompt, "input place count (", ")")
            .and_then(|s| s.parse().ok())
            .unwrap_or(0);
        serde_json::to_string(&(0..n).collect::<Vec<_>>()).expect("indices serialize")
    }
}

impl ChatBackend for OfflineChat {
    fn id(&self) -> String {
        "offline".into()
    }

    fn chat(&self, template: TemplateName, prompt: &str) -> Result<String, GatewayError> {
        Ok(match template {
            TemplateName::SpatialExtract => Self::spatial(prompt),
            TemplateName::IntentExtract => Self::intent(prompt),
            TemplateName::Rerank => Self::rerank(prompt),
        })
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct FixtureFile {
    template: TemplateName,
    prompt_sha256: String,
    raw: String,
}

/// Replays stored replies keyed by template and prompt hash; with an inner
/// backend, records missing replies first.
pub struct FixtureChat {
    dir: PathBuf,
    recorder: Option<Box<dyn ChatBackend>>,
}

impl FixtureChat {
    pub fn replay(dir: impl Into<PathBuf>) -> Self {
        Self {
            dir: dir.into(),
            recorder: None,
        }
    }

    pub fn record(dir: impl Into<PathBuf>, inner: Box<dyn ChatBackend>) -> Self {
        Self {
            dir: dir.into(),
            recorder: Some(inner),
        }
    }

    pub fn path_for(&self, template: TemplateName, prompt: &str) -> PathBuf {
        let digest = hex::encode(Sha256::digest(prompt.as_bytes()));
        self.dir.join(format!("{}-{}.json", template.as_str(), &digest[..16]))
    }
}

impl ChatBackend for FixtureChat {
    fn id(&self) -> String {
        format!("fixture:{}", self.dir.display())
    }

    fn chat(&self, template: TemplateName, prompt: &str) -> Result<String, GatewayError> {
        let path = self.path_for(template, prompt);
        let digest = hex::encode(Sha256::digest(prompt.as_bytes()));
        if let Ok(bytes) = fs::read(&path) {
            let f: FixtureFile =
                serde_json::from_slice(&bytes).map_err(|e| GatewayError::Fixture(format!("{}: {e}", path.display())))?;
            if f.template != template || f.prompt_sha256 != digest {
                return Err(GatewayError::Fixture(format!("{} was recorded for another prompt", path.display())));
            }
            return Ok(f.raw);
        }
        let Some(inner) = &self.recorder else {
            return Err(GatewayError::Fixture(format!("no recorded reply at {}", path.display())));
        };
        let raw = inner.chat(template, prompt)?;
        let file = FixtureFile {
            template,
            prompt_sha256: digest,
            raw: raw.clone(),
        };
        fs::create_dir_all(&self.dir).map_err(|e| GatewayError::Fixture(e.to_string()))?;
        let mut bytes = serde_json::to_vec_pretty(&file).expect("fixture serializes");
        bytes.push(b'\n');
        fs::write(&path, bytes).map_err(|e| GatewayError::Fixture(format!("{}: {e}", path.display())))?;
        Ok(raw)
    }
}
