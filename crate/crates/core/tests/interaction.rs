mod common;

use std::fs;
use std::time::Duration;

use common::{MockDriver, MockEvent};
use visgrade_core::harness::{serve_submission, ServedSubmission};
use visgrade_core::interaction::{
    assert_state, capture_screenshot, open_session, png_dimensions, run_chain, ActionStep,
    BrowserSession, InteractionError, PointerTarget, Relation, SessionOptions, StateAssertion,
};
use visgrade_core::rubric::Viewport;
use visgrade_core::{Selector, Submission};

const PAGE: &str = r##"<!DOCTYPE html>
<html><head><title>Scatter</title></head><body>
<select id="year"><option value="2000">2000</option><option value="2010">2010</option></select>
<svg width="400" height="300">
<g id="circles"><circle cx="50" cy="50" r="5" fill="#1f77b4"></circle><circle cx="120" cy="80" r="5" fill="#1f77b4"></circle></g>
<g id="tooltip"></g>
</svg>
</body></html>
"##;

/// Page behaviour a D3 script would attach: hover enlarges and recolors a
/// circle and shows a tooltip, leaving undoes it, dragging moves it.
fn scatter_driver() -> MockDriver {
    MockDriver::with_reaction(Box::new(|event, html| match event {
        MockEvent::Hover { css, index: 0 } if css.contains("circle") => {
            *html = html
                .replacen(
                    r##"r="5" fill="#1f77b4""##,
                    r##"r="8" fill="rgb(255, 127, 14)""##,
                    1,
                )
                .replace(
                    r#"<g id="tooltip"></g>"#,
                    r#"<g id="tooltip"><text class="tip">50</text></g>"#,
                );
        }
        MockEvent::Leave { css, index: 0 } if css.contains("circle") => {
            *html = html
                .replacen(
                    r##"r="8" fill="rgb(255, 127, 14)""##,
                    r##"r="5" fill="#1f77b4""##,
                    1,
                )
                .replace(
                    r#"<g id="tooltip"><text class="tip">50</text></g>"#,
                    r#"<g id="tooltip"></g>"#,
                );
        }
        MockEvent::Drag { index: 0, dx, .. } => {
            *html = html.replacen(r#"cx="50""#, &format!(r#"cx="{}""#, 50.0 + dx), 1);
        }
        _ => {}
    }))
}

struct Fixture {
    _dir: tempfile::TempDir,
    served: ServedSubmission,
    driver: MockDriver,
}

fn fixture(driver: MockDriver, html: &str) -> Fixture {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path().join("sub");
    fs::create_dir_all(&root).unwrap();
    fs::write(root.join("index.html"), html).unwrap();
    let served = serve_submission(&Submission::open(&root, "index.html").unwrap(), None).unwrap();
    Fixture {
        _dir: dir,
        served,
        driver,
    }
}

fn quick() -> SessionOptions {
    SessionOptions {
        implicit_wait_ms: 100,
        page_load_timeout: Duration::from_secs(2),
        ..Default::default()
    }
}

fn open(f: &Fixture) -> BrowserSession {
    open_session(
        &f.driver.url,
        &f.served.entry_url(),
        Viewport::default(),
        &quick(),
    )
    .unwrap()
}

fn sel(s: &str) -> Selector {
    s.parse().unwrap()
}

fn assertion(target: &str, attribute: Option<&str>, relation: Relation) -> StateAssertion {
    StateAssertion {
        target: sel(target),
        attribute: attribute.map(String::from),
        relation,
        literal: None,
    }
}

#[test]
fn loads_page_and_strips_probe_from_snapshot() {
    let f = fixture(MockDriver::start(), PAGE);
    let session = open(&f);
    assert_eq!(session.title().unwrap(), "Scatter");
    let snap = session.snapshot().unwrap();
    assert_eq!(snap.select(&sel("g#circles circle")).len(), 2);
    assert!(snap.select(&sel("script")).is_empty());
}

#[test]
fn missing_entry_is_page_not_found() {
    let f = fixture(MockDriver::start(), PAGE);
    let url = format!("{}/submission.html", f.served.base_url);
    match open_session(&f.driver.url, &url, Viewport::default(), &quick()) {
        Err(InteractionError::PageNotFound { status, .. }) => assert_eq!(status, 404),
        other => panic!("expected PageNotFound, got {other:?}"),
    }
    assert_eq!(
        f.driver.get(|s| (s.sessions_created, s.sessions_deleted)),
        (1, 1)
    );
}

#[test]
fn load_error_is_javascript_fatal() {
    let page = PAGE.replace(
        "</body>",
        "<script>throw new Error(\"data is undefined\");</script></body>",
    );
    let f = fixture(MockDriver::start(), &page);
    match open_session(
        &f.driver.url,
        &f.served.entry_url(),
        Viewport::default(),
        &quick(),
    ) {
        Err(InteractionError::JavascriptFatal(m)) => {
            assert!(m.contains("data is undefined"), "{m}")
        }
        other => panic!("expected JavascriptFatal, got {other:?}"),
    }
}

#[test]
fn page_that_never_completes_times_out() {
    let f = fixture(MockDriver::start(), PAGE);
    f.driver.set(|s| s.ready_after_polls = None);
    let opts = SessionOptions {
        page_load_timeout: Duration::from_millis(300),
        ..quick()
    };
    let err = open_session(
        &f.driver.url,
        &f.served.entry_url(),
        Viewport::default(),
        &opts,
    )
    .unwrap_err();
    assert!(
        matches!(err, InteractionError::PageLoadTimeout(_)),
        "{err:?}"
    );
}

#[test]
fn hover_recolors_grows_and_shows_tooltip() {
    let f = fixture(scatter_driver(), PAGE);
    let session = open(&f);
    let delta = run_chain(
        &session,
        &[ActionStep::MoveTo(PointerTarget::Element(sel(
            "g#circles circle:nth(0)",
        )))],
        0,
    )
    .unwrap();
    let fill = delta.changes_to("fill").next().unwrap();
    assert_eq!(
        (fill.before.as_deref(), fill.after.as_deref()),
        (Some("#1f77b4"), Some("rgb(255, 127, 14)"))
    );
    for a in [
        assertion("g#circles circle:nth(0)", Some("fill"), Relation::Changed),
        assertion(
            "g#circles circle:nth(0)",
            Some("r"),
            Relation::GreaterThanBefore,
        ),
        assertion("g#circles circle:nth(1)", Some("fill"), Relation::Unchanged),
        assertion("g#tooltip text", None, Relation::ElementAppears),
    ] {
        let r = assert_state(&delta, &a);
        assert!(r.passed, "{a:?}: {}", r.actual);
    }
    let mut equal = assertion("g#circles circle:nth(0)", Some("fill"), Relation::Equal);
    equal.literal = Some("#ff7f0e".into());
    assert!(assert_state(&delta, &equal).passed);
}

#[test]
fn hover_then_leave_restores_the_mark() {
    let f = fixture(scatter_driver(), PAGE);
    let session = open(&f);
    let steps = [
        ActionStep::MoveTo(PointerTarget::Element(sel("g#circles circle:nth(0)"))),
        ActionStep::MoveTo(PointerTarget::Point { x: 390.0, y: 290.0 }),
    ];
    let delta = run_chain(&session, &steps, 0).unwrap();
    assert!(delta.changed_nodes.is_empty(), "{:?}", delta.changed_nodes);
    let r = assert_state(
        &delta,
        &assertion("g#circles circle:nth(0)", Some("fill"), Relation::Changed),
    );
    assert!(!r.passed);
    assert!(
        r.detail_lines
            .iter()
            .any(|l| l.starts_with("No change detected")),
        "{:?}",
        r.detail_lines
    );
    let events = f.driver.get(|s| s.events.clone());
    assert!(
        matches!(
            events.as_slice(),
            [MockEvent::Hover { .. }, MockEvent::Leave { .. }]
        ),
        "{events:?}"
    );
}

#[test]
fn drag_moves_the_mark_by_the_requested_offset() {
    let f = fixture(scatter_driver(), PAGE);
    let session = open(&f);
    let steps = [ActionStep::DragBy {
        target: Some(sel("g#circles circle:nth(0)")),
        dx: 30.0,
        dy: 0.0,
    }];
    let delta = run_chain(&session, &steps, 0).unwrap();
    let drags: Vec<(f64, f64)> = f
        .driver
        .get(|s| s.events.clone())
        .into_iter()
        .filter_map(|e| match e {
            MockEvent::Drag { dx, dy, .. } => Some((dx, dy)),
            _ => None,
        })
        .collect();
    assert_eq!(drags.len(), 1);
    assert!(
        (drags[0].0 - 30.0).abs() <= 1.0 && drags[0].1.abs() <= 1.0,
        "{drags:?}"
    );
    let r = assert_state(
        &delta,
        &assertion("g#circles circle:nth(0)", None, Relation::PositionChanged),
    );
    assert!(r.passed, "{}", r.actual);
    let moves = f.driver.get(|s| {
        s.action_payloads[0]["actions"][0]["actions"]
            .as_array()
            .unwrap()
            .len()
    });
    assert_eq!(moves, 8, "move onto, press, five stepped moves, release");
}

#[test]
fn empty_chain_changes_nothing() {
    let f = fixture(scatter_driver(), PAGE);
    let session = open(&f);
    let delta = run_chain(&session, &[], 0).unwrap();
    assert_eq!(delta.before, delta.after);
    assert!(delta.changed_nodes.is_empty());
    assert!(f.driver.get(|s| s.action_payloads.is_empty()));
}

#[test]
fn each_step_drives_the_same_pointer() {
    let f = fixture(scatter_driver(), PAGE);
    let session = open(&f);
    let steps = [
        ActionStep::MoveTo(PointerTarget::Element(sel("g#circles circle:nth(1)"))),
        ActionStep::Pause(10),
        ActionStep::Click(Some(sel("g#circles circle:nth(0)"))),
    ];
    run_chain(&session, &steps, 0).unwrap();
    let payloads = f.driver.get(|s| s.action_payloads.clone());
    assert_eq!(payloads.len(), 3);
    for p in &payloads {
        assert_eq!(p["actions"][0]["id"], "visgrade-mouse");
        assert_eq!(p["actions"][0]["type"], "pointer");
    }
    let events = f.driver.get(|s| s.events.clone());
    assert_eq!(
        events.last(),
        Some(&MockEvent::Click {
            css: "g#circles circle".into(),
            index: 0
        })
    );
}

#[test]
fn missing_target_reports_step_and_selector() {
    let f = fixture(scatter_driver(), PAGE);
    let session = open(&f);
    let steps = [
        ActionStep::Pause(1),
        ActionStep::Click(Some(sel("circle.selected"))),
    ];
    match run_chain(&session, &steps, 0) {
        Err(InteractionError::TargetNotFound { selector, step }) => {
            assert_eq!((selector.as_str(), step), ("circle.selected", 1));
        }
        other => panic!("expected TargetNotFound, got {other:?}"),
    }
}

#[test]
fn failing_step_interrupts_the_chain() {
    let f = fixture(scatter_driver(), PAGE);
    let session = open(&f);
    let steps = [
        ActionStep::SelectOption {
            target: sel("select#year"),
            value: "2010".into(),
        },
        ActionStep::SelectOption {
            target: sel("select#year"),
            value: "1990".into(),
        },
        ActionStep::MoveTo(PointerTarget::Element(sel("g#circles circle:nth(0)"))),
    ];
    match run_chain(&session, &steps, 0) {
        Err(InteractionError::ChainInterrupted { step, cause }) => {
            assert_eq!(step, 1);
            assert!(cause.contains("1990"), "{cause}");
        }
        other => panic!("expected ChainInterrupted, got {other:?}"),
    }
    let events = f.driver.get(|s| s.events.clone());
    assert_eq!(
        events,
        [MockEvent::Select {
            css: "select#year".into(),
            index: 0,
            value: "2010".into()
        }]
    );
}

#[test]
fn screenshot_matches_viewport() {
    let f = fixture(MockDriver::start(), PAGE);
    let session = open(&f);
    let png = capture_screenshot(&session).unwrap();
    assert_eq!(png_dimensions(&png), Some((1280, 800)));
}

#[test]
fn close_is_idempotent_and_ends_the_session() {
    let f = fixture(MockDriver::start(), PAGE);
    let mut session = open(&f);
    session.close();
    session.close();
    assert!(session.is_closed());
    assert!(matches!(
        capture_screenshot(&session),
        Err(InteractionError::ScreenshotFailed(_))
    ));
    assert!(matches!(
        session.snapshot(),
        Err(InteractionError::SessionClosed)
    ));
    drop(session);
    assert_eq!(f.driver.get(|s| s.sessions_deleted), 1);
}

#[test]
fn reload_restores_the_served_page() {
    let f = fixture(scatter_driver(), PAGE);
    let mut session = open(&f);
    run_chain(
        &session,
        &[ActionStep::MoveTo(PointerTarget::Element(sel(
            "g#circles circle:nth(0)",
        )))],
        0,
    )
    .unwrap();
    assert_eq!(
        session
            .snapshot()
            .unwrap()
            .select(&sel("g#tooltip text"))
            .len(),
        1
    );
    session.reload().unwrap();
    assert!(session
        .snapshot()
        .unwrap()
        .select(&sel("g#tooltip text"))
        .is_empty());
}
