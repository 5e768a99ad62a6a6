//! Live grading: drive a browser over the W3C WebDriver protocol, run
//! action chains and compare serialized DOM snapshots before and after.

mod assert;
mod chain;
mod session;
mod steps;
pub mod webdriver;

use thiserror::Error;

use crate::dom::DomError;

pub use assert::assert_state;
pub use chain::{run_chain, AttributeChange, DomDelta};
pub use session::{
    capture_screenshot, open_session, png_dimensions, BrowserSession, SessionOptions,
    COMPUTED_PROPERTIES, DEFAULT_WEBDRIVER_URL, ERROR_PROBE,
};
pub use steps::*;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InteractionError {
    #[error("WebDriver server unreachable: {0}")]
    ServerUnreachable(String),
    #[error("page did not finish loading within {0} s")]
    PageLoadTimeout(u64),
    #[error("the page threw an error while loading: {0}")]
    JavascriptFatal(String),
    #[error("{url} answered with HTTP {status}")]
    PageNotFound { url: String, status: u16 },
    #[error("step {step}: no element matches {selector}")]
    TargetNotFound { selector: String, step: usize },
    #[error("step {step} failed: {cause}")]
    ChainInterrupted { step: usize, cause: String },
    #[error("screenshot failed: {0}")]
    ScreenshotFailed(String),
    #[error("the browser session is closed")]
    SessionClosed,
    #[error("WebDriver protocol error: {0}")]
    Protocol(String),
    #[error(transparent)]
    Dom(#[from] DomError),
}
