//! HTTP client for an embedding sidecar.
//!
//! Protocol: `POST /embed {"texts": [..]}` returns
//! `{"dim": d, "embeddings": [[..], ..]}`; `GET /health` returns
//! `{"status": "ok", "model": "..", "dim": d}`. 400 signals a bad batch,
//! 503 a model that is not loaded yet.

use std::sync::{Condvar, Mutex};
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{check_batch, Embedding, EmbeddingError, EmbeddingProvider};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbedRequest {
    pub texts: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbedResponse {
    pub dim: usize,
    pub embeddings: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HealthResponse {
    pub status: String,
    pub model: String,
    pub dim: usize,
}

#[derive(Debug, Clone)]
pub struct RemoteOptions {
    /// Texts per `/embed` request.
    pub max_batch: usize,
    /// Retries after the first failed attempt.
    pub retries: u32,
    /// First backoff delay; doubles on every retry.
    pub backoff: Duration,
    pub timeout: Duration,
    /// Concurrent requests allowed across all worker threads.
    pub max_in_flight: usize,
}

impl Default for RemoteOptions {
    fn default() -> Self {
        Self {
            max_batch: 64,
            retries: 3,
            backoff: Duration::from_millis(250),
            timeout: Duration::from_secs(60),
            max_in_flight: 4,
        }
    }
}

struct Limiter {
    free: Mutex<usize>,
    cv: Condvar,
}

struct Permit<'a>(&'a Limiter);

impl Limiter {
    fn new(n: usize) -> Self {
        Self {
            free: Mutex::new(n.max(1)),
            cv: Condvar::new(),
        }
    }

    fn acquire(&self) -> Permit<'_> {
        let mut free = self.free.lock().expect("limiter lock");
        while *free == 0 {
            free = self.cv.wait(free).expect("limiter lock");
        }
        *free -= 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        *self.0.free.lock().expect("limiter lock") += 1;
        self.0.cv.notify_one();
    }
}

enum Attempt<T> {
    Done(T),
    Retry(String),
    Fail(EmbeddingError),
}

pub struct RemoteProvider {
    base: String,
    agent: ureq::Agent,
    opts: RemoteOptions,
    limiter: Limiter,
    dim: usize,
    model: String,
}

impl RemoteProvider {
    /// Connects and reads `/health`, retrying with backoff. Fails with
    /// `ProviderUnavailable` once retries are exhausted.
    pub fn connect(url: &str, opts: RemoteOptions) -> Result<Self, EmbeddingError> {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(opts.timeout))
            .build()
            .into();
        let base = url.trim_end_matches('/').to_string();
        let health_url = format!("{base}/health");
        let health: HealthResponse = with_retry(&opts, || get_json(&agent, &health_url))?;
        if health.status != "ok" {
            return Err(EmbeddingError::ProviderUnavailable(format!(
                "health status {:?}",
                health.status
            )));
        }
        if health.dim == 0 {
            return Err(EmbeddingError::ProviderUnavailable(
                "service reports dim 0".into(),
            ));
        }
        Ok(Self {
            base,
            agent,
            limiter: Limiter::new(opts.max_in_flight),
            opts,
            dim: health.dim,
            model: health.model,
        })
    }

    fn embed_chunk(&self, texts: &[&str]) -> Result<Vec<Embedding>, EmbeddingError> {
        let url = format!("{}/embed", self.base);
        let body = EmbedRequest {
            texts: texts.iter().map(|t| (*t).to_string()).collect(),
        };
        let resp: EmbedResponse = {
            let _permit = self.limiter.acquire();
            with_retry(&self.opts, || post_json(&self.agent, &url, &body))?
        };
        if resp.dim != self.dim {
            return Err(EmbeddingError::DimensionMismatch {
                expected: self.dim,
                found: resp.dim,
            });
        }
        if resp.embeddings.len() != texts.len() {
            return Err(EmbeddingError::ProviderUnavailable(format!(
                "service returned {} vectors for {} texts",
                resp.embeddings.len(),
                texts.len()
            )));
        }
        resp.embeddings
            .into_iter()
            .map(|v| {
                if v.len() != self.dim {
                    return Err(EmbeddingError::DimensionMismatch {
                        expected: self.dim,
                        found: v.len(),
                    });
                }
                Embedding::normalized(v)
            })
            .collect()
    }
}

fn with_retry<T>(
    opts: &RemoteOptions,
    mut f: impl FnMut() -> Attempt<T>,
) -> Result<T, EmbeddingError> {
    let mut delay = opts.backoff;
    let mut last = String::new();
    for attempt in 0..=opts.retries {
        match f() {
            Attempt::Done(v) => return Ok(v),
            Attempt::Fail(e) => return Err(e),
            Attempt::Retry(msg) => {
                log::debug!("embedding request attempt {} failed: {msg}", attempt + 1);
                last = msg;
                if attempt < opts.retries {
                    thread::sleep(delay);
                    delay = delay.saturating_mul(2);
                }
            }
        }
    }
    Err(EmbeddingError::ProviderUnavailable(format!(
        "{} attempts failed, last error: {last}",
        opts.retries + 1
    )))
}

fn classify<T: serde::de::DeserializeOwned>(
    result: Result<ureq::http::Response<ureq::Body>, ureq::Error>,
) -> Attempt<T> {
    let mut resp = match result {
        Ok(r) => r,
        Err(e) => return Attempt::Retry(e.to_string()),
    };
    let status = resp.status().as_u16();
    match status {
        200..=299 => match resp.body_mut().read_json::<T>() {
            Ok(v) => Attempt::Done(v),
            Err(e) => Attempt::Fail(EmbeddingError::ProviderUnavailable(format!(
                "bad response body: {e}"
            ))),
        },
        400..=499 => {
            let text = resp.body_mut().read_to_string().unwrap_or_default();
            Attempt::Fail(EmbeddingError::InvalidInput(format!(
                "HTTP {status}: {text}"
            )))
        }
        _ => Attempt::Retry(format!("HTTP {status}")),
    }
}

fn get_json<T: serde::de::DeserializeOwned>(agent: &ureq::Agent, url: &str) -> Attempt<T> {
    classify(agent.get(url).call())
}

fn post_json<T: serde::de::DeserializeOwned>(
    agent: &ureq::Agent,
    url: &str,
    body: &EmbedRequest,
) -> Attempt<T> {
    classify(agent.post(url).send_json(body))
}

impl EmbeddingProvider for RemoteProvider {
    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<Embedding>, EmbeddingError> {
        check_batch(texts)?;
        let mut out = Vec::with_capacity(texts.len());
        for chunk in texts.chunks(self.opts.max_batch.max(1)) {
            out.extend(self.embed_chunk(chunk)?);
        }
        Ok(out)
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn model_id(&self) -> String {
        self.model.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::{mock_embed, MOCK_DIM};
    use std::io::{BufRead, BufReader, Read, Write};
    use std::net::{TcpListener, TcpStream};
    use std::sync::atomic::{AtomicUsize, Ordering};
    use std::sync::Arc;

    /// Minimal HTTP/1.1 server speaking the embedding protocol with the mock
    /// embedder. `fail_first` requests answer 503.
    struct TestServer {
        url: String,
        requests: Arc<AtomicUsize>,
        max_batch_seen: Arc<AtomicUsize>,
    }

    #[derive(Clone, Copy)]
    enum Mode {
        Normal,
        WrongDim,
    }

    fn serve(fail_first: usize, mode: Mode) -> TestServer {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!("http://{}", listener.local_addr().unwrap());
        let requests = Arc::new(AtomicUsize::new(0));
        let max_batch_seen = Arc::new(AtomicUsize::new(0));
        let (r, m) = (requests.clone(), max_batch_seen.clone());
        thread::spawn(move || {
            for stream in listener.incoming() {
                let Ok(stream) = stream else { break };
                let (r, m) = (r.clone(), m.clone());
                thread::spawn(move || handle(stream, fail_first, mode, &r, &m));
            }
        });
        TestServer {
            url,
            requests,
            max_batch_seen,
        }
    }

    fn handle(
        stream: TcpStream,
        fail_first: usize,
        mode: Mode,
        count: &AtomicUsize,
        max_batch: &AtomicUsize,
    ) {
        let mut reader = BufReader::new(stream.try_clone().unwrap());
        let mut stream = stream;
        loop {
            let mut request_line = String::new();
            if reader.read_line(&mut request_line).unwrap_or(0) == 0 {
                return;
            }
            let mut content_length = 0usize;
            loop {
                let mut h = String::new();
                reader.read_line(&mut h).unwrap();
                if h == "\r\n" || h.is_empty() {
                    break;
                }
                if let Some((k, v)) = h.split_once(':') {
                    if k.eq_ignore_ascii_case("content-length") {
                        content_length = v.trim().parse().unwrap();
                    }
                }
            }
            let mut body = vec![0u8; content_length];
            reader.read_exact(&mut body).unwrap();
            let n = count.fetch_add(1, Ordering::SeqCst);
            let (status, payload) = if n < fail_first {
                (503, r#"{"error":"model not loaded"}"#.to_string())
            } else if request_line.starts_with("GET /health") {
                let h = HealthResponse {
                    status: "ok".into(),
                    model: "test-mock".into(),
                    dim: MOCK_DIM,
                };
                (200, serde_json::to_string(&h).unwrap())
            } else if request_line.starts_with("POST /embed") {
                let req: EmbedRequest = serde_json::from_slice(&body).unwrap();
                max_batch.fetch_max(req.texts.len(), Ordering::SeqCst);
                if req.texts.is_empty() {
                    (400, r#"{"error":"empty"}"#.to_string())
                } else {
                    let (dim, embeddings) = match mode {
                        Mode::Normal => (
                            MOCK_DIM,
                            req.texts
                                .iter()
                                .map(|t| mock_embed(t).values().to_vec())
                                .collect(),
                        ),
                        Mode::WrongDim => {
                            (3, req.texts.iter().map(|_| vec![1.0, 0.0, 0.0]).collect())
                        }
                    };
                    (
                        200,
                        serde_json::to_string(&EmbedResponse { dim, embeddings }).unwrap(),
                    )
                }
            } else {
                (404, "{}".to_string())
            };
            let reason = match status {
                200 => "OK",
                400 => "Bad Request",
                503 => "Service Unavailable",
                _ => "Not Found",
            };
            let resp = format!(
                "HTTP/1.1 {status} {reason}\r\nContent-Type: application/json\r\nContent-Length: {}\r\n\r\n{payload}",
                payload.len()
            );
            if stream.write_all(resp.as_bytes()).is_err() {
                return;
            }
        }
    }

    fn close(a: &Embedding, b: &Embedding) -> bool {
        a.values()
            .iter()
            .zip(b.values())
            .all(|(x, y)| (x - y).abs() < 1e-12)
    }

    fn fast() -> RemoteOptions {
        RemoteOptions {
            backoff: Duration::from_millis(5),
            retries: 2,
            ..RemoteOptions::default()
        }
    }

    #[test]
    fn health_and_embed() {
        let server = serve(0, Mode::Normal);
        let p = RemoteProvider::connect(&server.url, fast()).unwrap();
        assert_eq!(p.dim(), MOCK_DIM);
        assert_eq!(p.model_id(), "test-mock");
        let v = p.embed_batch(&["hello there", "general"]).unwrap();
        assert!(close(&v[0], &mock_embed("hello there")));
        assert!(close(&v[1], &mock_embed("general")));
    }

    #[test]
    fn batches_are_split() {
        let server = serve(0, Mode::Normal);
        let opts = RemoteOptions {
            max_batch: 5,
            ..fast()
        };
        let p = RemoteProvider::connect(&server.url, opts).unwrap();
        let texts: Vec<String> = (0..12).map(|i| format!("t{i}")).collect();
        let refs: Vec<&str> = texts.iter().map(String::as_str).collect();
        let v = p.embed_batch(&refs).unwrap();
        assert_eq!(v.len(), 12);
        assert_eq!(server.max_batch_seen.load(Ordering::SeqCst), 5);
        // health + 3 chunks
        assert_eq!(server.requests.load(Ordering::SeqCst), 4);
    }

    #[test]
    fn transient_503_is_retried() {
        let server = serve(2, Mode::Normal);
        let p = RemoteProvider::connect(&server.url, fast()).unwrap();
        assert_eq!(p.dim(), MOCK_DIM);
    }

    #[test]
    fn persistent_503_is_unavailable() {
        let server = serve(usize::MAX, Mode::Normal);
        let err = RemoteProvider::connect(&server.url, fast()).err().unwrap();
        assert!(matches!(err, EmbeddingError::ProviderUnavailable(_)));
        assert_eq!(server.requests.load(Ordering::SeqCst), 3);
    }

    #[test]
    fn unreachable_is_unavailable() {
        let port = TcpListener::bind("127.0.0.1:0")
            .unwrap()
            .local_addr()
            .unwrap()
            .port();
        let err = RemoteProvider::connect(&format!("http://127.0.0.1:{port}"), fast())
            .err()
            .unwrap();
        assert!(matches!(err, EmbeddingError::ProviderUnavailable(_)));
    }

    #[test]
    fn response_dimension_mismatch() {
        let server = serve(0, Mode::WrongDim);
        let p = RemoteProvider::connect(&server.url, fast()).unwrap();
        assert_eq!(
            p.embed_batch(&["x"]),
            Err(EmbeddingError::DimensionMismatch {
                expected: MOCK_DIM,
                found: 3
            })
        );
    }

    #[test]
    fn concurrent_requests_are_bounded() {
        let server = serve(0, Mode::Normal);
        let opts = RemoteOptions {
            max_in_flight: 2,
            ..fast()
        };
        let p = RemoteProvider::connect(&server.url, opts).unwrap();
        thread::scope(|s| {
            for i in 0..6 {
                let p = &p;
                s.spawn(move || {
                    let t = format!("worker {i}");
                    assert!(close(
                        &p.embed_batch(&[t.as_str()]).unwrap()[0],
                        &mock_embed(&t)
                    ));
                });
            }
        });
        assert_eq!(*p.limiter.free.lock().unwrap(), 2);
    }
}
