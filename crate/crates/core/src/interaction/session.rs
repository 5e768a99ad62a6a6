use std::thread;
use std::time::{Duration, Instant};

use base64::Engine;
use serde_json::{json, Value};

use crate::dom::{parse_snapshot, Selector, Snapshot, COMPUTED_STYLE_ATTR};
use crate::rubric::Viewport;

use super::webdriver::{WebDriverClient, WireError};
use super::InteractionError;

/// Endpoint used when neither a flag nor `VISGRADE_WEBDRIVER_URL` names one.
pub const DEFAULT_WEBDRIVER_URL: &str = "http://localhost:9515";

/// Markup the harness injects at the top of served HTML pages so that
/// script errors thrown while the page loads can be reported afterwards.
pub const ERROR_PROBE: &str = "<script id=\"visgrade-probe\">window.__visgradeErrors=[];\
window.addEventListener('error',function(e){window.__visgradeErrors.push(String(e.message||e))});\
window.addEventListener('unhandledrejection',function(e){window.__visgradeErrors.push('Unhandled rejection: '+String(e.reason))});\
</script>";

/// CSS properties copied from `getComputedStyle` into serialized snapshots.
/// Geometry stays in attributes so static and live snapshots resolve alike.
pub const COMPUTED_PROPERTIES: &[&str] = &[
    "fill",
    "stroke",
    "opacity",
    "fill-opacity",
    "stroke-opacity",
    "stroke-width",
    "display",
    "visibility",
    "color",
    "background-color",
    "font-size",
];

const READY_STATE_SCRIPT: &str = "return document.readyState;";

const PAGE_STATUS_SCRIPT: &str = "var e = performance.getEntriesByType('navigation')[0];\
return {status: (e && e.responseStatus) || 0, title: document.title};";

const ERRORS_SCRIPT: &str = "return window.__visgradeErrors || [];";

const INNER_SIZE_SCRIPT: &str = "return [window.innerWidth, window.innerHeight];";

fn serialize_script() -> String {
    let props = COMPUTED_PROPERTIES
        .iter()
        .map(|p| format!("'{p}'"))
        .collect::<Vec<_>>()
        .join(",");
    format!(
        "var props = [{props}];\
var live = [document.documentElement].concat(Array.prototype.slice.call(document.documentElement.querySelectorAll('*')));\
var copy = document.documentElement.cloneNode(true);\
var copies = [copy].concat(Array.prototype.slice.call(copy.querySelectorAll('*')));\
live.forEach(function (el, i) {{\
  var cs = window.getComputedStyle(el);\
  copies[i].setAttribute('{COMPUTED_STYLE_ATTR}', props.map(function (p) {{ return p + ':' + cs.getPropertyValue(p); }}).join(';'));\
  if (el.tagName === 'SELECT' || el.tagName === 'INPUT') copies[i].setAttribute('value', el.value);\
}});\
var probe = copy.querySelector('#visgrade-probe');\
if (probe) probe.parentNode.removeChild(probe);\
return '<!DOCTYPE html>' + copy.outerHTML;"
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct SessionOptions {
    pub page_load_timeout: Duration,
    /// How long step targets and the ready selector are polled for.
    pub implicit_wait_ms: u64,
    /// Must match before the page counts as ready (e.g. after `d3.csv`).
    pub ready_selector: Option<Selector>,
    pub headless: bool,
}

impl Default for SessionOptions {
    fn default() -> Self {
        SessionOptions {
            page_load_timeout: Duration::from_secs(20),
            implicit_wait_ms: 2_000,
            ready_selector: None,
            headless: true,
        }
    }
}

/// One browser session showing one page. Closed exactly once, on
/// [`close`](BrowserSession::close) or drop.
#[derive(Debug)]
pub struct BrowserSession {
    pub endpoint: String,
    pub session_id: String,
    pub page_url: String,
    pub implicit_wait_ms: u64,
    pub viewport: Viewport,
    pub(crate) client: WebDriverClient,
    options: SessionOptions,
    closed: bool,
}

fn capabilities(viewport: Viewport, headless: bool) -> Value {
    let mut args = vec![format!(
        "--window-size={},{}",
        viewport.width, viewport.height
    )];
    if headless {
        args.extend(["--headless=new", "--disable-gpu", "--no-sandbox"].map(String::from));
    }
    json!({ "alwaysMatch": { "goog:chromeOptions": { "args": args } } })
}

/// Start a session, size its viewport and load `entry_url` until the
/// document is complete (and `ready_selector`, if any, matches).
pub fn open_session(
    endpoint: &str,
    entry_url: &str,
    viewport: Viewport,
    options: &SessionOptions,
) -> Result<BrowserSession, InteractionError> {
    let mut session = BrowserSession::start(endpoint, viewport, options)?;
    match session.navigate(entry_url) {
        Ok(()) => Ok(session),
        Err(e) => {
            session.close();
            Err(e)
        }
    }
}

fn protocol(e: WireError) -> InteractionError {
    InteractionError::Protocol(e.to_string())
}

impl BrowserSession {
    /// Start a session with a sized viewport and no page loaded yet.
    pub fn start(
        endpoint: &str,
        viewport: Viewport,
        options: &SessionOptions,
    ) -> Result<BrowserSession, InteractionError> {
        let client = WebDriverClient::new(
            endpoint,
            options.page_load_timeout + Duration::from_secs(30),
        );
        let session_id = client
            .new_session(capabilities(viewport, options.headless))
            .map_err(|e| match e {
                WireError::Unreachable { .. } => InteractionError::ServerUnreachable(e.to_string()),
                other => InteractionError::Protocol(other.to_string()),
            })?;
        let mut session = BrowserSession {
            endpoint: client.endpoint().to_string(),
            session_id,
            page_url: String::new(),
            implicit_wait_ms: options.implicit_wait_ms,
            viewport,
            client,
            options: options.clone(),
            closed: false,
        };
        if let Err(e) = session.configure() {
            session.close();
            return Err(e);
        }
        Ok(session)
    }

    /// Load `url` and wait for it to become ready. The session keeps
    /// showing whatever loaded even when this fails.
    pub fn navigate(&mut self, url: &str) -> Result<(), InteractionError> {
        self.page_url = url.to_string();
        self.load()
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    fn sid(&self) -> Result<&str, InteractionError> {
        if self.closed {
            Err(InteractionError::SessionClosed)
        } else {
            Ok(&self.session_id)
        }
    }

    fn configure(&self) -> Result<(), InteractionError> {
        let sid = self.sid()?;
        let load_ms = self.options.page_load_timeout.as_millis() as u64;
        self.client
            .set_timeouts(sid, 30_000, load_ms, 0)
            .map_err(protocol)?;
        let Viewport { width, height } = self.viewport;
        self.client
            .set_window_size(sid, width, height)
            .map_err(protocol)?;
        // The window includes browser chrome; grow it until the viewport fits.
        let inner = self
            .client
            .execute(sid, INNER_SIZE_SCRIPT, vec![])
            .map_err(protocol)?;
        if let (Some(iw), Some(ih)) = (inner[0].as_f64(), inner[1].as_f64()) {
            let (dw, dh) = (width as f64 - iw, height as f64 - ih);
            if dw > 0.0 || dh > 0.0 {
                let w = width + dw.max(0.0) as u32;
                let h = height + dh.max(0.0) as u32;
                self.client.set_window_size(sid, w, h).map_err(protocol)?;
            }
        }
        Ok(())
    }

    /// Navigate to the page URL and wait for it to become ready.
    fn load(&self) -> Result<(), InteractionError> {
        let sid = self.sid()?;
        let secs = self.options.page_load_timeout.as_secs();
        let deadline = Instant::now() + self.options.page_load_timeout;
        self.client.navigate(sid, &self.page_url).map_err(|e| {
            if e.is_timeout() {
                InteractionError::PageLoadTimeout(secs)
            } else {
                protocol(e)
            }
        })?;
        loop {
            let state = self
                .client
                .execute(sid, READY_STATE_SCRIPT, vec![])
                .map_err(protocol)?;
            if state.as_str() == Some("complete") {
                break;
            }
            if Instant::now() >= deadline {
                return Err(InteractionError::PageLoadTimeout(secs));
            }
            thread::sleep(Duration::from_millis(50));
        }
        let page = self
            .client
            .execute(sid, PAGE_STATUS_SCRIPT, vec![])
            .map_err(protocol)?;
        let status = page["status"].as_u64().unwrap_or(0) as u16;
        let title = page["title"].as_str().unwrap_or_default();
        if status >= 400 || (status == 0 && title.trim_start().starts_with("404")) {
            return Err(InteractionError::PageNotFound {
                url: self.page_url.clone(),
                status,
            });
        }
        self.check_errors()?;
        if let Some(ready) = &self.options.ready_selector {
            loop {
                if !self
                    .client
                    .find_elements(sid, &ready.to_css())
                    .map_err(protocol)?
                    .is_empty()
                {
                    break;
                }
                self.check_errors()?;
                if Instant::now() >= deadline {
                    return Err(InteractionError::PageLoadTimeout(secs));
                }
                thread::sleep(Duration::from_millis(50));
            }
            self.check_errors()?;
        }
        Ok(())
    }

    fn check_errors(&self) -> Result<(), InteractionError> {
        let errors = self
            .client
            .execute(self.sid()?, ERRORS_SCRIPT, vec![])
            .map_err(protocol)?;
        match errors.as_array().and_then(|a| a.first()) {
            Some(first) => Err(InteractionError::JavascriptFatal(
                first.as_str().unwrap_or_default().to_string(),
            )),
            None => Ok(()),
        }
    }

    /// Reload the page from scratch, discarding any interaction state.
    pub fn reload(&mut self) -> Result<(), InteractionError> {
        self.load()
    }

    pub fn title(&self) -> Result<String, InteractionError> {
        self.client.title(self.sid()?).map_err(protocol)
    }

    /// Serialize the live DOM, with computed style, into a [`Snapshot`].
    pub fn snapshot(&self) -> Result<Snapshot, InteractionError> {
        let markup = self
            .client
            .execute(self.sid()?, &serialize_script(), vec![])
            .map_err(protocol)?;
        let markup = markup.as_str().ok_or_else(|| {
            InteractionError::Protocol("serialization script returned no markup".into())
        })?;
        Ok(parse_snapshot(markup.as_bytes())?)
    }

    /// Element id of the first (or `:nth`) match, polling for up to the
    /// implicit wait.
    pub(crate) fn find(&self, selector: &Selector) -> Result<Option<String>, InteractionError> {
        let sid = self.sid()?;
        let deadline = Instant::now() + Duration::from_millis(self.implicit_wait_ms);
        let k = selector.nth().unwrap_or(0);
        loop {
            let ids = self
                .client
                .find_elements(sid, &selector.to_css())
                .map_err(protocol)?;
            if let Some(id) = ids.into_iter().nth(k) {
                return Ok(Some(id));
            }
            if Instant::now() >= deadline {
                return Ok(None);
            }
            thread::sleep(Duration::from_millis(50));
        }
    }

    pub(crate) fn wire(&self) -> Result<(&WebDriverClient, &str), InteractionError> {
        Ok((&self.client, self.sid()?))
    }

    /// End the session. Later calls do nothing.
    pub fn close(&mut self) {
        if self.closed {
            return;
        }
        self.closed = true;
        if let Err(e) = self.client.delete_session(&self.session_id) {
            log::debug!("closing session {}: {e}", self.session_id);
        }
    }
}

impl Drop for BrowserSession {
    fn drop(&mut self) {
        self.close();
    }
}

/// Width and height from a PNG header.
pub fn png_dimensions(png: &[u8]) -> Option<(u32, u32)> {
    const SIGNATURE: &[u8] = b"\x89PNG\r\n\x1a\n";
    if png.len() < 24 || &png[..8] != SIGNATURE || &png[12..16] != b"IHDR" {
        return None;
    }
    let w = u32::from_be_bytes(png[16..20].try_into().ok()?);
    let h = u32::from_be_bytes(png[20..24].try_into().ok()?);
    Some((w, h))
}

/// PNG of the current viewport.
pub fn capture_screenshot(session: &BrowserSession) -> Result<Vec<u8>, InteractionError> {
    let failed = |m: String| InteractionError::ScreenshotFailed(m);
    if session.is_closed() {
        return Err(failed("session is closed".into()));
    }
    let encoded = session
        .client
        .screenshot(&session.session_id)
        .map_err(|e| failed(e.to_string()))?;
    let png = base64::engine::general_purpose::STANDARD
        .decode(encoded.trim())
        .map_err(|e| failed(format!("screenshot is not base64: {e}")))?;
    if png_dimensions(&png).is_none() {
        return Err(failed("screenshot is not a PNG image".into()));
    }
    Ok(png)
}
