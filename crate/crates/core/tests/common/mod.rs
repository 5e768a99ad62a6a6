//! A scripted stand-in for a W3C WebDriver server.
//!
//! It fetches pages over real HTTP but cannot run JavaScript: the markup it
//! serves back is the markup it fetched, and page behaviour is supplied by
//! the test as a reaction to pointer and form events.

#![allow(dead_code)]

pub mod fixtures;

use std::collections::HashMap;
use std::sync::{Arc, Mutex};
use std::thread::{self, JoinHandle};

use serde_json::{json, Value};
use tiny_http::{Header, Response, Server};
use visgrade_core::dom::{parse_snapshot, resolve_geometry, select, Selector};
use visgrade_core::interaction::webdriver::ELEMENT_KEY;
use visgrade_core::interaction::ERROR_PROBE;

#[derive(Debug, Clone, PartialEq)]
pub enum MockEvent {
    Hover {
        css: String,
        index: usize,
    },
    Leave {
        css: String,
        index: usize,
    },
    Click {
        css: String,
        index: usize,
    },
    DoubleClick {
        css: String,
        index: usize,
    },
    Drag {
        css: String,
        index: usize,
        dx: f64,
        dy: f64,
    },
    Select {
        css: String,
        index: usize,
        value: String,
    },
}

pub type Reaction = Box<dyn FnMut(&MockEvent, &mut String) + Send>;

pub struct MockState {
    /// Polls of `document.readyState` answered `loading` before `complete`;
    /// `None` never completes.
    pub ready_after_polls: Option<usize>,
    /// Session requests refused before one is granted.
    pub refuse_sessions: usize,
    pub reaction: Reaction,
    pub sessions_created: usize,
    pub sessions_deleted: usize,
    pub events: Vec<MockEvent>,
    pub action_payloads: Vec<Value>,
    pub commands: Vec<String>,
    sessions: HashMap<String, Page>,
    elements: Vec<(String, usize)>,
    next_session: usize,
}

/// A CSS selector and the index of the match it picked.
type Target = (String, usize);

#[derive(Default)]
struct Page {
    html: String,
    status: u16,
    polls: usize,
    window: (u32, u32),
    cursor: (f64, f64),
    hovered: Option<Target>,
    pressed_at: Option<((f64, f64), Option<Target>)>,
    clicks_in_batch: usize,
}

pub struct MockDriver {
    pub url: String,
    pub state: Arc<Mutex<MockState>>,
    server: Arc<Server>,
    worker: Option<JoinHandle<()>>,
}

impl MockDriver {
    pub fn start() -> MockDriver {
        MockDriver::with_reaction(Box::new(|_, _| {}))
    }

    pub fn with_reaction(reaction: Reaction) -> MockDriver {
        let server = Arc::new(Server::http("127.0.0.1:0").expect("bind mock driver"));
        let port = server.server_addr().to_ip().expect("ip listener").port();
        let state = Arc::new(Mutex::new(MockState {
            ready_after_polls: Some(1),
            refuse_sessions: 0,
            reaction,
            sessions_created: 0,
            sessions_deleted: 0,
            events: Vec::new(),
            action_payloads: Vec::new(),
            commands: Vec::new(),
            sessions: HashMap::new(),
            elements: Vec::new(),
            next_session: 0,
        }));
        let (srv, st) = (server.clone(), state.clone());
        let worker = thread::spawn(move || {
            for mut request in srv.incoming_requests() {
                let mut body = String::new();
                let _ = request.as_reader().read_to_string(&mut body);
                let method = request.method().to_string();
                let path = request.url().to_string();
                let (status, value) = {
                    let mut s = st.lock().unwrap();
                    s.commands.push(format!("{method} {path}"));
                    handle(
                        &mut s,
                        &method,
                        &path,
                        serde_json::from_str(&body).unwrap_or(Value::Null),
                    )
                };
                let reply = json!({ "value": value }).to_string();
                let header = Header::from_bytes("Content-Type", "application/json").unwrap();
                let _ = request.respond(
                    Response::from_string(reply)
                        .with_status_code(status)
                        .with_header(header),
                );
            }
        });
        MockDriver {
            url: format!("http://127.0.0.1:{port}"),
            state,
            server,
            worker: Some(worker),
        }
    }

    pub fn set<F: FnOnce(&mut MockState)>(&self, f: F) {
        f(&mut self.state.lock().unwrap());
    }

    pub fn get<T, F: FnOnce(&MockState) -> T>(&self, f: F) -> T {
        f(&self.state.lock().unwrap())
    }
}

impl Drop for MockDriver {
    fn drop(&mut self) {
        self.server.unblock();
        if let Some(w) = self.worker.take() {
            let _ = w.join();
        }
    }
}

fn error(status: u16, error: &str, message: &str) -> (u16, Value) {
    (status, json!({ "error": error, "message": message }))
}

fn title_of(html: &str) -> String {
    let lower = html.to_ascii_lowercase();
    match (lower.find("<title>"), lower.find("</title>")) {
        (Some(a), Some(b)) if b > a => html[a + 7..b].trim().to_string(),
        _ => String::new(),
    }
}

/// Errors a real browser would have recorded through the injected probe.
fn thrown_errors(html: &str) -> Vec<String> {
    if !html.contains("__visgradeErrors") {
        return Vec::new();
    }
    let marker = "throw new Error(\"";
    let mut out = Vec::new();
    let mut rest = html;
    while let Some(i) = rest.find(marker) {
        rest = &rest[i + marker.len()..];
        let end = rest.find('"').unwrap_or(rest.len());
        out.push(format!("Uncaught Error: {}", &rest[..end]));
    }
    out
}

fn element_center(html: &str, css: &str, index: usize) -> Option<(f64, f64)> {
    let snap = parse_snapshot(html.as_bytes()).ok()?;
    let sel = Selector::parse(css).ok()?;
    let node = select(snap.root(), &sel).into_iter().nth(index)?;
    if let Some(c) = resolve_geometry(&node).ok().and_then(|g| g.center()) {
        return Some(c);
    }
    node.ctm().ok().map(|m| m.apply(0.0, 0.0))
}

fn element_of(s: &MockState, v: &Value) -> Option<(String, usize)> {
    let id = v[ELEMENT_KEY].as_str()?;
    let k: usize = id.strip_prefix("el-")?.parse().ok()?;
    s.elements.get(k).cloned()
}

fn emit(s: &mut MockState, sid: &str, event: MockEvent) {
    s.events.push(event.clone());
    let page = s.sessions.get_mut(sid).unwrap();
    (s.reaction)(&event, &mut page.html);
}

fn handle(s: &mut MockState, method: &str, path: &str, body: Value) -> (u16, Value) {
    let parts: Vec<&str> = path.trim_start_matches('/').split('/').collect();
    if parts == ["session"] && method == "POST" {
        if s.refuse_sessions > 0 {
            s.refuse_sessions -= 1;
            return error(500, "session not created", "browser failed to start");
        }
        s.next_session += 1;
        s.sessions_created += 1;
        let sid = format!("mock-{}", s.next_session);
        s.sessions.insert(
            sid.clone(),
            Page {
                window: (800, 600),
                ..Page::default()
            },
        );
        return (200, json!({ "sessionId": sid, "capabilities": {} }));
    }
    if parts.first() != Some(&"session") || parts.len() < 2 {
        return error(404, "unknown command", path);
    }
    let sid = parts[1].to_string();
    if !s.sessions.contains_key(&sid) {
        return error(404, "invalid session id", &sid);
    }
    match (method, &parts[2..]) {
        ("DELETE", []) => {
            s.sessions.remove(&sid);
            s.sessions_deleted += 1;
            (200, Value::Null)
        }
        ("POST", ["timeouts"]) => (200, Value::Null),
        ("POST", ["window", "rect"]) => {
            let page = s.sessions.get_mut(&sid).unwrap();
            page.window = (
                body["width"].as_u64().unwrap_or(800) as u32,
                body["height"].as_u64().unwrap_or(600) as u32,
            );
            (200, Value::Null)
        }
        ("POST", ["url"]) => {
            let url = body["url"].as_str().unwrap_or_default().to_string();
            let (status, html) = match ureq::get(&url).call() {
                Ok(r) => (r.status(), r.into_string().unwrap_or_default()),
                Err(ureq::Error::Status(code, r)) => (code, r.into_string().unwrap_or_default()),
                Err(e) => {
                    return error(
                        500,
                        "unknown error",
                        &format!("net::ERR_CONNECTION_REFUSED {e}"),
                    )
                }
            };
            let page = s.sessions.get_mut(&sid).unwrap();
            *page = Page {
                html,
                status,
                window: page.window,
                ..Page::default()
            };
            (200, Value::Null)
        }
        ("GET", ["title"]) => (200, json!(title_of(&s.sessions[&sid].html))),
        ("POST", ["execute", "sync"]) => execute(s, &sid, &body),
        ("POST", ["elements"]) => {
            let css = body["value"].as_str().unwrap_or_default().to_string();
            let Ok(sel) = Selector::parse(&css) else {
                return error(400, "invalid selector", &css);
            };
            let Ok(snap) = parse_snapshot(s.sessions[&sid].html.as_bytes()) else {
                return (200, json!([]));
            };
            let count = select(snap.root(), &sel).len();
            let mut ids = Vec::new();
            for i in 0..count {
                let key = (css.clone(), i);
                let k = match s.elements.iter().position(|e| *e == key) {
                    Some(k) => k,
                    None => {
                        s.elements.push(key);
                        s.elements.len() - 1
                    }
                };
                ids.push(json!({ ELEMENT_KEY: format!("el-{k}") }));
            }
            (200, json!(ids))
        }
        ("GET", ["element", id, kind, name]) => {
            let Some((css, index)) = element_of(s, &json!({ ELEMENT_KEY: id })) else {
                return error(404, "no such element", id);
            };
            let snap = parse_snapshot(s.sessions[&sid].html.as_bytes()).unwrap();
            let sel = Selector::parse(&css).unwrap();
            let Some(node) = select(snap.root(), &sel).into_iter().nth(index) else {
                return error(404, "stale element reference", id);
            };
            match *kind {
                "attribute" => (200, json!(node.attr(name))),
                "css" => (200, json!(node.style_value(name).unwrap_or_default())),
                _ => error(404, "unknown command", path),
            }
        }
        ("POST", ["actions"]) => perform(s, &sid, body),
        ("DELETE", ["actions"]) => {
            s.sessions.get_mut(&sid).unwrap().pressed_at = None;
            (200, Value::Null)
        }
        ("GET", ["screenshot"]) => {
            let (w, h) = s.sessions[&sid].window;
            let mut png = Vec::new();
            {
                let mut enc = png::Encoder::new(&mut png, w, h);
                enc.set_color(png::ColorType::Rgb);
                enc.set_depth(png::BitDepth::Eight);
                let mut writer = enc.write_header().unwrap();
                writer
                    .write_image_data(&vec![255u8; (w * h * 3) as usize])
                    .unwrap();
            }
            use base64::Engine;
            (
                200,
                json!(base64::engine::general_purpose::STANDARD.encode(png)),
            )
        }
        _ => error(404, "unknown command", path),
    }
}

fn execute(s: &mut MockState, sid: &str, body: &Value) -> (u16, Value) {
    let script = body["script"].as_str().unwrap_or_default();
    let args = body["args"].as_array().cloned().unwrap_or_default();
    let ready_after = s.ready_after_polls;
    let page = s.sessions.get_mut(sid).unwrap();
    if script.contains("document.readyState") {
        page.polls += 1;
        let done = ready_after.is_some_and(|n| page.polls > n);
        return (200, json!(if done { "complete" } else { "loading" }));
    }
    if script.contains("innerWidth") {
        return (200, json!([page.window.0, page.window.1]));
    }
    if script.contains("responseStatus") {
        return (
            200,
            json!({ "status": page.status, "title": title_of(&page.html) }),
        );
    }
    if script.contains("__visgradeErrors") {
        return (200, json!(thrown_errors(&page.html)));
    }
    if script.contains("cloneNode") {
        return (200, json!(page.html.replace(ERROR_PROBE, "")));
    }
    let target = args.first().and_then(|a| element_of(s, a));
    let Some((css, index)) = target else {
        return error(
            404,
            "no such element",
            "script argument is not a known element",
        );
    };
    let html = s.sessions[sid].html.clone();
    if script.contains("getBoundingClientRect") {
        return match element_center(&html, &css, index) {
            Some((x, y)) => (200, json!([x, y])),
            None => error(404, "stale element reference", &css),
        };
    }
    if script.contains("scrollIntoView") {
        return (200, json!(true));
    }
    if script.contains("dispatchEvent") {
        let value = args
            .get(1)
            .and_then(Value::as_str)
            .unwrap_or_default()
            .to_string();
        if !html.contains(&format!("value=\"{value}\"")) {
            return (200, json!(false));
        }
        emit(s, sid, MockEvent::Select { css, index, value });
        return (200, json!(true));
    }
    error(500, "javascript error", "the mock cannot run this script")
}

fn perform(s: &mut MockState, sid: &str, body: Value) -> (u16, Value) {
    s.action_payloads.push(body.clone());
    let ticks = body["actions"][0]["actions"]
        .as_array()
        .cloned()
        .unwrap_or_default();
    s.sessions.get_mut(sid).unwrap().clicks_in_batch = 0;
    for tick in ticks {
        let page = s.sessions.get_mut(sid).unwrap();
        match tick["type"].as_str().unwrap_or_default() {
            "pointerMove" => {
                let (x, y) = (
                    tick["x"].as_f64().unwrap_or(0.0),
                    tick["y"].as_f64().unwrap_or(0.0),
                );
                let origin = &tick["origin"];
                let onto = element_of(s, origin);
                let page = s.sessions.get_mut(sid).unwrap();
                if let Some((css, index)) = onto {
                    let Some(c) = element_center(&page.html, &css, index) else {
                        return error(400, "move target out of bounds", &css);
                    };
                    page.cursor = (c.0 + x, c.1 + y);
                    let previous = page.hovered.replace((css.clone(), index));
                    if previous.as_ref() != Some(&(css.clone(), index)) {
                        if let Some((pc, pi)) = previous {
                            emit(s, sid, MockEvent::Leave { css: pc, index: pi });
                        }
                        emit(s, sid, MockEvent::Hover { css, index });
                    }
                } else {
                    page.cursor = if origin == "pointer" {
                        (page.cursor.0 + x, page.cursor.1 + y)
                    } else {
                        (x, y)
                    };
                    // Moves off an element leave it unless a drag carries it.
                    if page.pressed_at.is_none() {
                        if let Some((css, index)) = page.hovered.take() {
                            emit(s, sid, MockEvent::Leave { css, index });
                        }
                    }
                }
            }
            "pointerDown" => page.pressed_at = Some((page.cursor, page.hovered.clone())),
            "pointerUp" => {
                let Some((start, on)) = page.pressed_at.take() else {
                    continue;
                };
                let (dx, dy) = (page.cursor.0 - start.0, page.cursor.1 - start.1);
                let Some((css, index)) = on else {
                    continue;
                };
                if dx.abs() > 0.5 || dy.abs() > 0.5 {
                    emit(s, sid, MockEvent::Drag { css, index, dx, dy });
                } else {
                    page.clicks_in_batch += 1;
                    let double = page.clicks_in_batch == 2;
                    emit(
                        s,
                        sid,
                        MockEvent::Click {
                            css: css.clone(),
                            index,
                        },
                    );
                    if double {
                        emit(s, sid, MockEvent::DoubleClick { css, index });
                    }
                }
            }
            "pause" => {}
            other => return error(400, "invalid argument", other),
        }
    }
    (200, Value::Null)
}
