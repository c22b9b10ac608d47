use std::collections::HashMap;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{ChatMessage, LlmError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoleEncoding {
    /// Roles travel as message metadata (chat endpoints).
    Metadata,
    /// Roles are written into a single prompt string (completion endpoints).
    PrependedText,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Purpose {
    Generation,
    Translation,
}

impl Purpose {
    pub fn name(self) -> &'static str {
        match self {
            Purpose::Generation => "generation",
            Purpose::Translation => "translation",
        }
    }
}

/// Decoding parameters. All of them enter the request digest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecodingParams {
    pub model: String,
    pub temperature: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub top_p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_tokens: Option<u32>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub stop: Vec<String>,
    pub role_encoding: RoleEncoding,
}

impl Default for DecodingParams {
    fn default() -> DecodingParams {
        DecodingParams {
            model: "replay".into(),
            temperature: 1.0,
            top_p: None,
            max_tokens: None,
            stop: Vec::new(),
            role_encoding: RoleEncoding::Metadata,
        }
    }
}

/// One call for `n` sampled completions of a prompt.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompletionRequest {
    pub messages: Vec<ChatMessage>,
    pub params: DecodingParams,
    pub n: usize,
    /// Names the sample stream (board, purpose, index) so that otherwise
    /// identical prompts for different boards draw fresh samples.
    pub context: RequestContext,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RequestContext {
    pub board_id: String,
    pub purpose: Purpose,
    pub index: usize,
}

impl CompletionRequest {
    /// Hex SHA-256 over the canonical JSON of the whole request.
    pub fn digest(&self) -> String {
        let json = serde_json::to_vec(self).expect("requests serialise");
        hex::encode(Sha256::digest(&json))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProviderInfo {
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub endpoint: Option<String>,
}

/// A source of sampled chat completions.
pub trait ChatProvider: Send + Sync {
    /// Returns exactly `req.n` completions.
    fn complete(&self, req: &CompletionRequest) -> Result<Vec<String>, LlmError>;

    fn info(&self) -> ProviderInfo;
}

impl<P: ChatProvider + ?Sized> ChatProvider for &P {
    fn complete(&self, req: &CompletionRequest) -> Result<Vec<String>, LlmError> {
        (**self).complete(req)
    }

    fn info(&self) -> ProviderInfo {
        (**self).info()
    }
}

impl<P: ChatProvider + ?Sized> ChatProvider for Box<P> {
    fn complete(&self, req: &CompletionRequest) -> Result<Vec<String>, LlmError> {
        (**self).complete(req)
    }

    fn info(&self) -> ProviderInfo {
        (**self).info()
    }
}

/// One line of a replay fixture.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReplayEntry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub digest: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub board_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub purpose: Option<Purpose>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub index: Option<usize>,
    pub completion: String,
}

/// Serves recorded completions.
///
/// Lookup is by request digest first. Otherwise a generation request for
/// `n` samples at index `i` takes one completion from each of indices
/// `i..i+n` of its board, and a translation request takes the first `n`
/// completions recorded at its index.
#[derive(Debug, Default, Clone)]
pub struct ReplayProvider {
    by_digest: HashMap<String, Vec<String>>,
    by_key: HashMap<(String, Purpose, usize), Vec<String>>,
}

impl ReplayProvider {
    pub fn from_entries(entries: impl IntoIterator<Item = ReplayEntry>) -> Result<ReplayProvider, LlmError> {
        let mut p = ReplayProvider::default();
        for (i, e) in entries.into_iter().enumerate() {
            match (e.digest, e.board_id, e.purpose, e.index) {
                (Some(d), None, None, None) => p.by_digest.entry(d).or_default().push(e.completion),
                (None, Some(b), Some(purpose), Some(index)) => {
                    p.by_key.entry((b, purpose, index)).or_default().push(e.completion)
                }
                _ => {
                    return Err(LlmError::Replay(format!(
                        "entry {}: give either `digest` or all of `board_id`, `purpose`, `index`",
                        i + 1
                    )))
                }
            }
        }
        Ok(p)
    }

    pub fn from_jsonl(text: &str) -> Result<ReplayProvider, LlmError> {
        let mut entries = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let e: ReplayEntry =
                serde_json::from_str(line).map_err(|err| LlmError::Replay(format!("line {}: {err}", i + 1)))?;
            entries.push(e);
        }
        ReplayProvider::from_entries(entries)
    }

    pub fn from_path(path: &Path) -> Result<ReplayProvider, LlmError> {
        let text = fs::read_to_string(path).map_err(|e| LlmError::Replay(format!("{}: {e}", path.display())))?;
        ReplayProvider::from_jsonl(&text)
    }
}

impl ChatProvider for ReplayProvider {
    fn complete(&self, req: &CompletionRequest) -> Result<Vec<String>, LlmError> {
        let miss = || {
            LlmError::Replay(format!(
                "no recorded completion for {} {} index {} (digest {})",
                req.context.board_id,
                req.context.purpose.name(),
                req.context.index,
                req.digest()
            ))
        };
        if let Some(found) = self.by_digest.get(&req.digest()) {
            return found.get(..req.n).map(<[String]>::to_vec).ok_or_else(miss);
        }
        let ctx = &req.context;
        match ctx.purpose {
            Purpose::Generation => (ctx.index..ctx.index + req.n)
                .map(|i| {
                    self.by_key
                        .get(&(ctx.board_id.clone(), ctx.purpose, i))
                        .and_then(|v| v.first().cloned())
                        .ok_or_else(miss)
                })
                .collect(),
            Purpose::Translation => self
                .by_key
                .get(&(ctx.board_id.clone(), ctx.purpose, ctx.index))
                .and_then(|v| v.get(..req.n))
                .map(<[String]>::to_vec)
                .ok_or_else(miss),
        }
    }

    fn info(&self) -> ProviderInfo {
        ProviderInfo { kind: "replay".into(), endpoint: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheEntry {
    pub digest: String,
    pub completions: Vec<String>,
    pub provider: ProviderInfo,
    /// Seconds since the Unix epoch.
    pub created: u64,
}

/// Memoises a provider by request digest, in memory and optionally in a
/// directory of `<digest>.json` files.
pub struct CachingProvider<P> {
    inner: P,
    dir: Option<PathBuf>,
    memory: Mutex<HashMap<String, Vec<String>>>,
}

impl<P: ChatProvider> CachingProvider<P> {
    pub fn in_memory(inner: P) -> CachingProvider<P> {
        CachingProvider { inner, dir: None, memory: Mutex::new(HashMap::new()) }
    }

    pub fn with_dir(inner: P, dir: impl Into<PathBuf>) -> Result<CachingProvider<P>, LlmError> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(|e| LlmError::Cache(format!("{}: {e}", dir.display())))?;
        Ok(CachingProvider { inner, dir: Some(dir), memory: Mutex::new(HashMap::new()) })
    }

    pub fn inner(&self) -> &P {
        &self.inner
    }

    fn load(&self, digest: &str) -> Result<Option<Vec<String>>, LlmError> {
        let Some(dir) = &self.dir else {
            return Ok(None);
        };
        let path = dir.join(format!("{digest}.json"));
        let text = match fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(LlmError::Cache(format!("{}: {e}", path.display()))),
        };
        let entry: CacheEntry =
            serde_json::from_str(&text).map_err(|e| LlmError::Cache(format!("{}: {e}", path.display())))?;
        if entry.digest != digest {
            return Err(LlmError::Cache(format!("{}: digest does not match file name", path.display())));
        }
        Ok(Some(entry.completions))
    }

    fn store(&self, digest: &str, completions: &[String]) -> Result<(), LlmError> {
        let Some(dir) = &self.dir else {
            return Ok(());
        };
        let entry = CacheEntry {
            digest: digest.to_string(),
            completions: completions.to_vec(),
            provider: self.inner.info(),
            created: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
        };
        let cache_err = |e: std::io::Error| LlmError::Cache(format!("{}: {e}", dir.display()));
        let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(cache_err)?;
        serde_json::to_writer_pretty(&mut tmp, &entry).map_err(|e| LlmError::Cache(e.to_string()))?;
        tmp.write_all(b"\n").map_err(cache_err)?;
        tmp.persist(dir.join(format!("{digest}.json"))).map_err(|e| cache_err(e.error))?;
        Ok(())
    }
}

impl<P: ChatProvider> ChatProvider for CachingProvider<P> {
    fn complete(&self, req: &CompletionRequest) -> Result<Vec<String>, LlmError> {
        let digest = req.digest();
        if let Some(hit) = self.memory.lock().expect("cache lock").get(&digest) {
            return Ok(hit.clone());
        }
        if let Some(hit) = self.load(&digest)? {
            if hit.len() == req.n {
                self.memory.lock().expect("cache lock").insert(digest, hit.clone());
                return Ok(hit);
            }
        }
        let fresh = self.inner.complete(req)?;
        self.store(&digest, &fresh)?;
        self.memory.lock().expect("cache lock").insert(digest, fresh.clone());
        Ok(fresh)
    }

    fn info(&self) -> ProviderInfo {
        self.inner.info()
    }
}
