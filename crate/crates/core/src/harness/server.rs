use std::fs;
use std::path::{Component, Path, PathBuf};
use std::sync::{Arc, Mutex};
use std::thread::{self, JoinHandle};

use percent_encoding::percent_decode_str;
use tiny_http::{Header, Request, Response, Server};

use crate::interaction::ERROR_PROBE;

use super::{HarnessError, Submission};

/// A loopback HTTP server showing a submission layered over shared assets.
/// It stops when dropped.
pub struct ServedSubmission {
    pub base_url: String,
    entry_file: String,
    server: Arc<Server>,
    worker: Option<JoinHandle<()>>,
    refused: Arc<Mutex<Vec<String>>>,
}

impl ServedSubmission {
    pub fn entry_url(&self) -> String {
        format!(
            "{}/{}",
            self.base_url,
            self.entry_file.trim_start_matches('/')
        )
    }

    /// Request paths refused for escaping the served roots.
    pub fn traversal_attempts(&self) -> Vec<String> {
        self.refused.lock().map(|v| v.clone()).unwrap_or_default()
    }
}

impl Drop for ServedSubmission {
    fn drop(&mut self) {
        self.server.unblock();
        if let Some(w) = self.worker.take() {
            let _ = w.join();
        }
    }
}

#[derive(Debug, Clone)]
struct Roots {
    layers: Vec<PathBuf>,
}

fn content_type(path: &Path) -> &'static str {
    match path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase)
        .as_deref()
    {
        Some("html" | "htm") => "text/html; charset=utf-8",
        Some("js" | "mjs") => "text/javascript; charset=utf-8",
        Some("css") => "text/css; charset=utf-8",
        Some("json" | "geojson" | "topojson") => "application/json",
        Some("csv") => "text/csv; charset=utf-8",
        Some("tsv") => "text/tab-separated-values; charset=utf-8",
        Some("svg") => "image/svg+xml",
        Some("png") => "image/png",
        Some("jpg" | "jpeg") => "image/jpeg",
        Some("txt") => "text/plain; charset=utf-8",
        _ => "application/octet-stream",
    }
}

/// The relative path a request names, or `None` when it tries to leave
/// the served roots.
fn request_path(url: &str) -> Option<PathBuf> {
    let raw = url.split(['?', '#']).next().unwrap_or_default();
    let decoded = percent_decode_str(raw).decode_utf8().ok()?;
    if decoded.contains('\\') || decoded.contains('\0') {
        return None;
    }
    let mut out = PathBuf::new();
    for c in Path::new(decoded.trim_start_matches('/')).components() {
        match c {
            Component::Normal(part) => out.push(part),
            Component::CurDir => {}
            _ => return None,
        }
    }
    Some(out)
}

/// Insert the error probe ahead of every page script.
fn with_probe(html: &str) -> String {
    let lower = html.to_ascii_lowercase();
    let at = lower
        .find("<head")
        .and_then(|i| lower[i..].find('>').map(|j| i + j + 1))
        .or_else(|| {
            lower
                .find("<html")
                .and_then(|i| lower[i..].find('>').map(|j| i + j + 1))
        })
        .unwrap_or(0);
    format!("{}{}{}", &html[..at], ERROR_PROBE, &html[at..])
}

fn respond(request: Request, status: u16, body: Vec<u8>, mime: &str) {
    let headers = [
        Header::from_bytes("Content-Type", mime).expect("static header"),
        Header::from_bytes("Cache-Control", "no-store").expect("static header"),
    ];
    let mut response = Response::from_data(body).with_status_code(status);
    for h in headers {
        response.add_header(h);
    }
    if let Err(e) = request.respond(response) {
        log::debug!("client went away: {e}");
    }
}

fn handle(request: Request, roots: &Roots, refused: &Mutex<Vec<String>>) {
    let url = request.url().to_string();
    let Some(mut rel) = request_path(&url) else {
        log::warn!("refused path traversal attempt: {url}");
        if let Ok(mut r) = refused.lock() {
            r.push(url);
        }
        return respond(
            request,
            403,
            b"403 Forbidden".to_vec(),
            "text/plain; charset=utf-8",
        );
    };
    if rel.as_os_str().is_empty() {
        rel = PathBuf::from("index.html");
    }
    for root in &roots.layers {
        let candidate = root.join(&rel);
        if !candidate.is_file() {
            continue;
        }
        // Symlinks must not lead outside their layer either.
        let inside = match (candidate.canonicalize(), root.canonicalize()) {
            (Ok(c), Ok(r)) => c.starts_with(r),
            _ => false,
        };
        if !inside {
            log::warn!("refused path traversal attempt: {url}");
            if let Ok(mut r) = refused.lock() {
                r.push(url);
            }
            return respond(
                request,
                403,
                b"403 Forbidden".to_vec(),
                "text/plain; charset=utf-8",
            );
        }
        let mime = content_type(&candidate);
        return match fs::read(&candidate) {
            Ok(bytes) if mime.starts_with("text/html") => respond(
                request,
                200,
                with_probe(&String::from_utf8_lossy(&bytes)).into_bytes(),
                mime,
            ),
            Ok(bytes) => respond(request, 200, bytes, mime),
            Err(e) => respond(
                request,
                500,
                e.to_string().into_bytes(),
                "text/plain; charset=utf-8",
            ),
        };
    }
    let body = format!("<!DOCTYPE html><html><head><title>404 Not Found</title></head><body>404 Not Found: {}</body></html>", rel.display());
    respond(request, 404, body.into_bytes(), "text/html; charset=utf-8")
}

/// Serve `sub` on a free loopback port. Files in the submission shadow
/// those in `shared_assets` (library copies, datasets).
pub fn serve_submission(
    sub: &Submission,
    shared_assets: Option<&Path>,
) -> Result<ServedSubmission, HarnessError> {
    let server =
        Server::http("127.0.0.1:0").map_err(|e| HarnessError::PortExhausted(e.to_string()))?;
    let port = server
        .server_addr()
        .to_ip()
        .map(|a| a.port())
        .ok_or_else(|| HarnessError::PortExhausted("listener has no IP address".into()))?;
    let server = Arc::new(server);
    let roots = Roots {
        layers: std::iter::once(sub.root_dir.clone())
            .chain(shared_assets.map(Path::to_path_buf))
            .collect(),
    };
    let refused = Arc::new(Mutex::new(Vec::new()));
    let (srv, log) = (server.clone(), refused.clone());
    let worker = thread::Builder::new()
        .name(format!("serve-{}", sub.id))
        .spawn(move || {
            for request in srv.incoming_requests() {
                handle(request, &roots, &log);
            }
        })
        .map_err(|e| HarnessError::PortExhausted(e.to_string()))?;
    Ok(ServedSubmission {
        base_url: format!("http://127.0.0.1:{port}"),
        entry_file: sub.entry_file.clone(),
        server,
        worker: Some(worker),
        refused,
    })
}
