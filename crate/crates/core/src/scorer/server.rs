//! Reference HTTP server exposing any [`ScorerBackend`] over the wire
//! protocol. Used by the `serve-mock` command and the protocol test suite.

use std::net::SocketAddr;
use std::sync::Arc;
use std::thread::JoinHandle;

use serde::Deserialize;
use serde_json::json;
use tiny_http::{Header, Method, Request, Response, Server};

use super::{FillRequest, ScoreRequest, ScorerBackend};
use crate::error::ScorerError;

#[derive(Deserialize)]
struct ScoreBody {
    requests: Vec<ScoreRequest>,
}

pub struct ReferenceServer {
    server: Arc<Server>,
    addr: SocketAddr,
    worker: Option<JoinHandle<()>>,
}

impl ReferenceServer {
    /// Binds `addr` (port 0 picks a free port) and serves on a background
    /// thread until dropped.
    pub fn start(addr: &str, backend: Arc<dyn ScorerBackend>) -> std::io::Result<Self> {
        let server = Server::http(addr).map_err(std::io::Error::other)?;
        let addr = server
            .server_addr()
            .to_ip()
            .ok_or_else(|| std::io::Error::other("server is not bound to an IP address"))?;
        let server = Arc::new(server);
        let worker = {
            let server = Arc::clone(&server);
            std::thread::spawn(move || {
                for request in server.incoming_requests() {
                    handle(request, backend.as_ref());
                }
            })
        };
        Ok(Self {
            server,
            addr,
            worker: Some(worker),
        })
    }

    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn url(&self) -> String {
        format!("http://{}", self.addr)
    }

    /// Blocks the calling thread until the server stops.
    pub fn join(mut self) {
        if let Some(w) = self.worker.take() {
            let _ = w.join();
        }
    }
}

impl Drop for ReferenceServer {
    fn drop(&mut self) {
        self.server.unblock();
        if let Some(w) = self.worker.take() {
            let _ = w.join();
        }
    }
}

fn handle(mut request: Request, backend: &dyn ScorerBackend) {
    let mut body = String::new();
    let (status, payload) = if let Err(e) = request.as_reader().read_to_string(&mut body) {
        (400, json!({ "error": format!("unreadable body: {e}") }))
    } else {
        route(request.method(), request.url(), &body, backend)
    };
    let header = Header::from_bytes(&b"Content-Type"[..], &b"application/json"[..]).expect("static header");
    let response = Response::from_string(payload.to_string())
        .with_status_code(status)
        .with_header(header);
    if let Err(e) = request.respond(response) {
        log::warn!("failed to send response: {e}");
    }
}

fn route(method: &Method, url: &str, body: &str, backend: &dyn ScorerBackend) -> (u16, serde_json::Value) {
    match (method, url) {
        (Method::Get, "/v1/info") => (200, json!(backend.info())),
        (Method::Get, "/healthz") => (200, json!({ "status": "ok" })),
        (Method::Post, "/v1/score") => match serde_json::from_str::<ScoreBody>(body) {
            Err(e) => (400, json!({ "error": e.to_string() })),
            Ok(b) => match backend.score(&b.requests) {
                Ok(responses) => (200, json!({ "responses": responses })),
                Err(e) => error_reply(&e),
            },
        },
        (Method::Post, "/v1/fill") => match serde_json::from_str::<FillRequest>(body) {
            Err(e) => (400, json!({ "error": e.to_string() })),
            Ok(req) => match backend.fill(&req) {
                Ok(resp) => (200, json!(resp)),
                Err(e) => error_reply(&e),
            },
        },
        _ => (404, json!({ "error": format!("no route for {method} {url}") })),
    }
}

fn error_reply(e: &ScorerError) -> (u16, serde_json::Value) {
    let status = match e {
        ScorerError::InvalidRequest(_) => 400,
        ScorerError::Unsupported(_) => 501,
        _ => 500,
    };
    (status, json!({ "error": e.to_string() }))
}
