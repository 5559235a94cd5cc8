//! Client for an HTTP embedding service.
//!
//! `POST {base_url}/embed` with `{"texts": [...]}`, answered by
//! `{"model": "...", "dim": n, "vectors": [[...], ...]}`. Batches are sent one
//! at a time and results are concatenated in input order.

use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::data::{EmbeddingRecord, EmbeddingSet, Vector, NORMALIZED_TOLERANCE};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RemoteEmbedderConfig {
    pub base_url: String,
    pub timeout_ms: u64,
    pub batch_size: usize,
}

impl RemoteEmbedderConfig {
    pub fn validate(&self) -> Result<()> {
        if self.timeout_ms == 0 {
            return Err(Error::Param("timeout_ms must be positive".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Param("batch_size must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Serialize)]
struct EmbedRequest<'a> {
    texts: Vec<&'a str>,
}

#[derive(Deserialize)]
struct EmbedResponse {
    model: String,
    dim: usize,
    vectors: Vec<Vec<f64>>,
}

/// Embeds `(id, text)` pairs through the remote service.
pub fn fetch_embeddings(items: &[(String, String)], config: &RemoteEmbedderConfig) -> Result<EmbeddingSet> {
    config.validate()?;
    let agent: ureq::Agent = ureq::Agent::config_builder()
        .timeout_global(Some(Duration::from_millis(config.timeout_ms)))
        .http_status_as_error(false)
        .build()
        .into();
    let url = format!("{}/embed", config.base_url.trim_end_matches('/'));

    let mut model_id: Option<String> = None;
    let mut dim: Option<usize> = None;
    let mut records = Vec::with_capacity(items.len());
    for (b, batch) in items.chunks(config.batch_size).enumerate() {
        let location = format!("batch {b}");
        let request = EmbedRequest {
            texts: batch.iter().map(|(_, t)| t.as_str()).collect(),
        };
        let transport = |e: ureq::Error| Error::Timeout {
            timeout_ms: config.timeout_ms,
            detail: e.to_string(),
        };
        let mut response = agent.post(&url).send_json(&request).map_err(transport)?;
        let status = response.status().as_u16();
        let body = response.body_mut().read_to_string().map_err(transport)?;
        if !(200..300).contains(&status) {
            return Err(Error::Remote { status, body });
        }
        let parsed: EmbedResponse =
            serde_json::from_str(&body).map_err(|e| Error::schema(location.clone(), e.to_string()))?;
        if parsed.vectors.len() != batch.len() {
            return Err(Error::schema(
                location,
                format!("{} vectors returned for {} texts", parsed.vectors.len(), batch.len()),
            ));
        }
        match (&model_id, dim) {
            (None, None) => {
                model_id = Some(parsed.model.clone());
                dim = Some(parsed.dim);
            }
            (Some(m), Some(d)) if *m != parsed.model || d != parsed.dim => {
                return Err(Error::schema(location, "model or dim changed between batches"));
            }
            _ => {}
        }
        for ((id, text), v) in batch.iter().zip(parsed.vectors) {
            if v.len() != parsed.dim {
                return Err(Error::schema(
                    format!("{location} (record '{id}')"),
                    format!("vector length {} != dim {}", v.len(), parsed.dim),
                ));
            }
            records.push(EmbeddingRecord {
                id: id.clone(),
                text: text.clone(),
                vector: Vector::new(v).map_err(|e| Error::schema(location.clone(), e.to_string()))?,
            });
        }
    }
    let normalized = !records.is_empty()
        && records
            .iter()
            .all(|r| (r.vector.norm() - 1.0).abs() <= NORMALIZED_TOLERANCE);
    EmbeddingSet::new(
        model_id.unwrap_or_else(|| "remote".into()),
        dim.unwrap_or(1),
        normalized,
        records,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::{BufRead, BufReader, Read, Write};
    use std::net::{TcpListener, TcpStream};
    use std::sync::{Arc, Mutex};
    use std::thread;

    /// Serves `n` requests; `respond` maps the requested texts to (status, body).
    fn serve<F>(n: usize, respond: F) -> (String, Arc<Mutex<Vec<Vec<String>>>>, thread::JoinHandle<()>)
    where
        F: Fn(&[String]) -> (u16, String) + Send + 'static,
    {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!("http://{}", listener.local_addr().unwrap());
        let seen = Arc::new(Mutex::new(Vec::new()));
        let log = seen.clone();
        let handle = thread::spawn(move || {
            for _ in 0..n {
                let (stream, _) = listener.accept().unwrap();
                handle_one(stream, &respond, &log);
            }
        });
        (url, seen, handle)
    }

    fn handle_one<F: Fn(&[String]) -> (u16, String)>(stream: TcpStream, respond: &F, log: &Mutex<Vec<Vec<String>>>) {
        let mut reader = BufReader::new(stream.try_clone().unwrap());
        let mut length = 0;
        loop {
            let mut line = String::new();
            reader.read_line(&mut line).unwrap();
            let line = line.trim_end();
            if line.is_empty() {
                break;
            }
            if let Some((k, v)) = line.split_once(':') {
                if k.eq_ignore_ascii_case("content-length") {
                    length = v.trim().parse().unwrap();
                }
            }
        }
        let mut body = vec![0u8; length];
        reader.read_exact(&mut body).unwrap();
        let req: serde_json::Value = serde_json::from_slice(&body).unwrap();
        let texts: Vec<String> = req["texts"]
            .as_array()
            .unwrap()
            .iter()
            .map(|t| t.as_str().unwrap().to_string())
            .collect();
        let (status, reply) = respond(&texts);
        log.lock().unwrap().push(texts);
        let mut stream = stream;
        write!(
            stream,
            "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{reply}",
            reply.len()
        )
        .unwrap();
    }

    fn items(n: usize) -> Vec<(String, String)> {
        (0..n).map(|i| (format!("id{i}"), format!("text {i}"))).collect()
    }

    fn vectors_for(texts: &[String]) -> String {
        let vectors: Vec<Vec<f64>> = texts
            .iter()
            .map(|t| vec![t.trim_start_matches("text ").parse::<f64>().unwrap(), 1.0])
            .collect();
        serde_json::json!({"model": "mock", "dim": 2, "vectors": vectors}).to_string()
    }

    fn config(url: String, batch_size: usize) -> RemoteEmbedderConfig {
        RemoteEmbedderConfig {
            base_url: url,
            timeout_ms: 5_000,
            batch_size,
        }
    }

    #[test]
    fn batches_preserve_order() {
        let (url, seen, handle) = serve(3, |texts| (200, vectors_for(texts)));
        let set = fetch_embeddings(&items(25), &config(url, 10)).unwrap();
        handle.join().unwrap();
        let sizes: Vec<usize> = seen.lock().unwrap().iter().map(Vec::len).collect();
        assert_eq!(sizes, vec![10, 10, 5]);
        assert_eq!(set.len(), 25);
        assert_eq!(set.model_id(), "mock");
        for (i, r) in set.records().iter().enumerate() {
            assert_eq!(r.id, format!("id{i}"));
            assert_eq!(r.vector.as_slice(), &[i as f64, 1.0]);
        }
    }

    #[test]
    fn short_response_is_schema_error() {
        let (url, _, handle) = serve(1, |texts| (200, vectors_for(&texts[1..])));
        let err = fetch_embeddings(&items(25), &config(url, 25)).unwrap_err();
        handle.join().unwrap();
        assert!(matches!(err, Error::Schema { .. }), "{err}");
    }

    #[test]
    fn http_error_status() {
        let (url, _, handle) = serve(1, |_| (503, "busy".into()));
        let err = fetch_embeddings(&items(2), &config(url, 5)).unwrap_err();
        handle.join().unwrap();
        assert!(matches!(err, Error::Remote { status: 503, ref body } if body == "busy"), "{err}");
    }

    #[test]
    fn unreachable_host_times_out() {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!("http://{}", listener.local_addr().unwrap());
        drop(listener);
        let mut cfg = config(url, 5);
        cfg.timeout_ms = 300;
        let err = fetch_embeddings(&items(2), &cfg).unwrap_err();
        assert!(matches!(err, Error::Timeout { timeout_ms: 300, .. }), "{err}");
    }

    #[test]
    fn silent_server_times_out() {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!("http://{}", listener.local_addr().unwrap());
        let handle = thread::spawn(move || {
            let (stream, _) = listener.accept().unwrap();
            thread::sleep(Duration::from_millis(800));
            drop(stream);
        });
        let mut cfg = config(url, 5);
        cfg.timeout_ms = 200;
        let start = std::time::Instant::now();
        let err = fetch_embeddings(&items(2), &cfg).unwrap_err();
        assert!(matches!(err, Error::Timeout { .. }), "{err}");
        assert!(start.elapsed() < Duration::from_millis(700));
        handle.join().unwrap();
    }

    #[test]
    fn invalid_config() {
        let mut cfg = config("http://127.0.0.1:9".into(), 0);
        assert!(matches!(fetch_embeddings(&items(1), &cfg), Err(Error::Param(_))));
        cfg.batch_size = 1;
        cfg.timeout_ms = 0;
        assert!(matches!(fetch_embeddings(&items(1), &cfg), Err(Error::Param(_))));
    }
}
