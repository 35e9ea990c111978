use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::thread;

use serde_json::{json, Value};
use sonder_core::embedding::{build_embedder, EmbedError, EmbedderConfig};

/// How the fake provider answers each request.
#[derive(Clone, Copy)]
enum Mode {
    Good,
    MissingVector,
    WrongDim,
    ServerError,
}

/// Serve `requests` HTTP requests on a random port, then stop.
fn provider(mode: Mode, requests: usize) -> String {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    thread::spawn(move || {
        for stream in listener.incoming().take(requests) {
            let mut stream = stream.unwrap();
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut len = 0;
            loop {
                let mut line = String::new();
                reader.read_line(&mut line).unwrap();
                if line == "\r\n" || line.is_empty() {
                    break;
                }
                if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                    len = v.trim().parse().unwrap();
                }
            }
            let mut body = vec![0; len];
            reader.read_exact(&mut body).unwrap();
            let req: Value = serde_json::from_slice(&body).unwrap();
            let texts: Vec<String> = serde_json::from_value(req["texts"].clone()).unwrap();
            // vector i = (len, 1, 0, i) so outputs are distinguishable
            let mut vectors: Vec<Vec<f64>> = texts
                .iter()
                .enumerate()
                .map(|(i, t)| vec![t.len() as f64, 1.0, 0.0, i as f64])
                .collect();
            let (status, payload) = match mode {
                Mode::Good => ("200 OK", json!({ "vectors": vectors })),
                Mode::MissingVector => {
                    vectors.pop();
                    ("200 OK", json!({ "vectors": vectors }))
                }
                Mode::WrongDim => ("200 OK", json!({ "vectors": vectors.iter().map(|v| &v[..3]).collect::<Vec<_>>() })),
                Mode::ServerError => ("500 Internal Server Error", json!({ "error": "boom" })),
            };
            let text = payload.to_string();
            write!(
                stream,
                "HTTP/1.1 {status}\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{text}",
                text.len()
            )
            .unwrap();
        }
    });
    format!("http://{addr}/embed")
}

#[test]
fn vectors_come_back_normalized_in_order() {
    let emb = build_embedder(&EmbedderConfig::external(&provider(Mode::Good, 1), 4)).unwrap();
    let out = emb.embed_batch(&["abc", "a"]).unwrap();
    assert_eq!(out.len(), 2);
    let n0 = (9.0f64 + 1.0).sqrt();
    let expect0 = [3.0 / n0, 1.0 / n0, 0.0, 0.0];
    for (a, b) in out[0].values().iter().zip(expect0) {
        assert!((a - b).abs() < 1e-12);
    }
    let n1 = 3.0f64.sqrt();
    assert!((out[1].values()[3] - 1.0 / n1).abs() < 1e-12);
    assert!(out.iter().all(|v| v.is_normalized()));
}

#[test]
fn malformed_responses_are_rejected() {
    let emb = build_embedder(&EmbedderConfig::external(&provider(Mode::MissingVector, 1), 4)).unwrap();
    assert!(matches!(emb.embed_batch(&["a", "b"]), Err(EmbedError::BadProviderResponse(_))));
    let emb = build_embedder(&EmbedderConfig::external(&provider(Mode::WrongDim, 1), 4)).unwrap();
    assert!(matches!(emb.embed("a"), Err(EmbedError::BadProviderResponse(_))));
}

#[test]
fn server_errors_and_dead_endpoints_are_unavailable() {
    let emb = build_embedder(&EmbedderConfig::external(&provider(Mode::ServerError, 1), 4)).unwrap();
    assert!(matches!(emb.embed("a"), Err(EmbedError::ProviderUnavailable(_))));

    let dead = {
        let l = TcpListener::bind("127.0.0.1:0").unwrap();
        format!("http://{}/embed", l.local_addr().unwrap())
    };
    let emb = build_embedder(&EmbedderConfig::external(&dead, 4)).unwrap();
    assert!(matches!(emb.embed("a"), Err(EmbedError::ProviderUnavailable(_))));

    let cfg = EmbedderConfig {
        fallback_to_reference: true,
        ..EmbedderConfig::external(&dead, 4)
    };
    let got = build_embedder(&cfg).unwrap().embed("a b").unwrap();
    let want = build_embedder(&EmbedderConfig::reference(4)).unwrap().embed("a b").unwrap();
    assert_eq!(got, want);
}
