//! A minimal W3C WebDriver client: just the endpoints the grader uses.

use std::time::Duration;

use serde_json::{json, Value};
use thiserror::Error;

/// Key under which the protocol wraps web element references.
pub const ELEMENT_KEY: &str = "element-6066-11e4-a52f-4d53c6bd3a0a";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WireError {
    #[error("cannot reach {url}: {message}")]
    Unreachable { url: String, message: String },
    /// A protocol-level error reply, e.g. `no such element` or `timeout`.
    #[error("{error} (HTTP {status}): {message}")]
    Command {
        status: u16,
        error: String,
        message: String,
    },
    #[error("malformed reply: {0}")]
    Malformed(String),
}

impl WireError {
    pub fn is_timeout(&self) -> bool {
        matches!(self, WireError::Command { error, .. } if error == "timeout" || error == "script timeout")
    }
}

/// Wrap an element id as a script argument or action origin.
pub fn element_ref(id: &str) -> Value {
    json!({ ELEMENT_KEY: id })
}

#[derive(Debug, Clone)]
pub struct WebDriverClient {
    base: String,
    agent: ureq::Agent,
}

impl WebDriverClient {
    /// `timeout` bounds each HTTP exchange, so it must exceed the page load
    /// timeout the session asks the browser to honour.
    pub fn new(endpoint: &str, timeout: Duration) -> Self {
        let agent = ureq::AgentBuilder::new()
            .timeout_connect(Duration::from_secs(5))
            .timeout(timeout)
            .build();
        WebDriverClient {
            base: endpoint.trim_end_matches('/').to_string(),
            agent,
        }
    }

    pub fn endpoint(&self) -> &str {
        &self.base
    }

    fn call(&self, method: &str, path: &str, body: Option<Value>) -> Result<Value, WireError> {
        let url = format!("{}{}", self.base, path);
        let request = self.agent.request(method, &url);
        let response = match body {
            Some(b) => request.send_json(b),
            None => request.call(),
        };
        let reply: Value = match response {
            Ok(r) => r
                .into_json()
                .map_err(|e| WireError::Malformed(e.to_string()))?,
            Err(ureq::Error::Status(status, r)) => {
                let body: Value = r.into_json().unwrap_or(Value::Null);
                let v = &body["value"];
                return Err(WireError::Command {
                    status,
                    error: v["error"].as_str().unwrap_or("unknown error").to_string(),
                    message: v["message"].as_str().unwrap_or_default().to_string(),
                });
            }
            Err(ureq::Error::Transport(t)) => {
                return Err(WireError::Unreachable {
                    url,
                    message: t.to_string(),
                });
            }
        };
        match reply {
            Value::Object(mut m) => Ok(m.remove("value").unwrap_or(Value::Null)),
            other => Err(WireError::Malformed(format!(
                "expected an object, got {other}"
            ))),
        }
    }

    pub fn new_session(&self, capabilities: Value) -> Result<String, WireError> {
        let v = self.call(
            "POST",
            "/session",
            Some(json!({ "capabilities": capabilities })),
        )?;
        v["sessionId"]
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| WireError::Malformed("new session reply has no sessionId".into()))
    }

    pub fn delete_session(&self, sid: &str) -> Result<(), WireError> {
        self.call("DELETE", &format!("/session/{sid}"), None)
            .map(drop)
    }

    pub fn set_timeouts(
        &self,
        sid: &str,
        script_ms: u64,
        page_load_ms: u64,
        implicit_ms: u64,
    ) -> Result<(), WireError> {
        let body =
            json!({ "script": script_ms, "pageLoad": page_load_ms, "implicit": implicit_ms });
        self.call("POST", &format!("/session/{sid}/timeouts"), Some(body))
            .map(drop)
    }

    pub fn set_window_size(&self, sid: &str, width: u32, height: u32) -> Result<(), WireError> {
        let body = json!({ "width": width, "height": height });
        self.call("POST", &format!("/session/{sid}/window/rect"), Some(body))
            .map(drop)
    }

    pub fn navigate(&self, sid: &str, url: &str) -> Result<(), WireError> {
        self.call(
            "POST",
            &format!("/session/{sid}/url"),
            Some(json!({ "url": url })),
        )
        .map(drop)
    }

    pub fn title(&self, sid: &str) -> Result<String, WireError> {
        let v = self.call("GET", &format!("/session/{sid}/title"), None)?;
        Ok(v.as_str().unwrap_or_default().to_string())
    }

    pub fn execute(&self, sid: &str, script: &str, args: Vec<Value>) -> Result<Value, WireError> {
        let body = json!({ "script": script, "args": args });
        self.call("POST", &format!("/session/{sid}/execute/sync"), Some(body))
    }

    /// Element ids matching a CSS selector, in document order.
    pub fn find_elements(&self, sid: &str, css: &str) -> Result<Vec<String>, WireError> {
        let body = json!({ "using": "css selector", "value": css });
        let v = self.call("POST", &format!("/session/{sid}/elements"), Some(body))?;
        let items = v
            .as_array()
            .ok_or_else(|| WireError::Malformed("find elements reply is not a list".into()))?;
        items
            .iter()
            .map(|e| {
                e[ELEMENT_KEY]
                    .as_str()
                    .map(str::to_string)
                    .ok_or_else(|| WireError::Malformed(format!("not an element reference: {e}")))
            })
            .collect()
    }

    pub fn attribute(
        &self,
        sid: &str,
        element: &str,
        name: &str,
    ) -> Result<Option<String>, WireError> {
        let v = self.call(
            "GET",
            &format!("/session/{sid}/element/{element}/attribute/{name}"),
            None,
        )?;
        Ok(v.as_str().map(str::to_string))
    }

    pub fn css_value(&self, sid: &str, element: &str, property: &str) -> Result<String, WireError> {
        let v = self.call(
            "GET",
            &format!("/session/{sid}/element/{element}/css/{property}"),
            None,
        )?;
        Ok(v.as_str().unwrap_or_default().to_string())
    }

    /// Dispatch one tick list for a single mouse pointer source.
    pub fn perform_pointer_actions(&self, sid: &str, actions: Vec<Value>) -> Result<(), WireError> {
        let body = json!({
            "actions": [{
                "type": "pointer",
                "id": "visgrade-mouse",
                "parameters": { "pointerType": "mouse" },
                "actions": actions,
            }]
        });
        self.call("POST", &format!("/session/{sid}/actions"), Some(body))
            .map(drop)
    }

    pub fn release_actions(&self, sid: &str) -> Result<(), WireError> {
        self.call("DELETE", &format!("/session/{sid}/actions"), None)
            .map(drop)
    }

    /// Base64-encoded PNG of the viewport.
    pub fn screenshot(&self, sid: &str) -> Result<String, WireError> {
        let v = self.call("GET", &format!("/session/{sid}/screenshot"), None)?;
        v.as_str()
            .map(str::to_string)
            .ok_or_else(|| WireError::Malformed("screenshot reply is not a string".into()))
    }
}
