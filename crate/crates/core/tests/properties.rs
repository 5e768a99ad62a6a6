mod common;

use std::fs;

use common::fixtures::{bar_rubric_yaml, write_rubric, BarChart, RubricOptions};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use visgrade_core::checks::{check_color_grouping, check_positions, PositionOptions};
use visgrade_core::dom::{parse_color, select, Rgba};
use visgrade_core::harness::{canonical_report, BatchOptions};
use visgrade_core::layout::{detect_layout, format_layout_advisory};
use visgrade_core::rubric::{load_rubric, load_rubric_str, validate_structure, RubricSpec};
use visgrade_core::scale::{
    extract_axis, fit_scale, forward, DataValue, FitThresholds, InferredScale, Orientation,
    ScaleKind, TickSample,
};
use visgrade_core::{grade_batch, parse_snapshot, GradeMode, GradeOptions, Selector, Snapshot};

fn chart_strategy() -> impl Strategy<Value = BarChart> {
    (any::<u64>(), any::<bool>()).prop_map(|(seed, horizontal)| {
        let mut chart = BarChart::variant(&mut ChaCha8Rng::seed_from_u64(seed));
        chart.horizontal = horizontal;
        chart
    })
}

fn snapshot(html: &str) -> Snapshot {
    parse_snapshot(html.as_bytes()).unwrap()
}

fn rubric_for(chart: &BarChart) -> (tempfile::TempDir, RubricSpec) {
    let dir = tempfile::tempdir().unwrap();
    let (_, spec) = write_rubric(
        dir.path(),
        chart,
        RubricOptions {
            tick_step: chart.tick_step,
            hover: false,
            any_orientation: true,
        },
    );
    (dir, spec)
}

fn fitted(snap: &Snapshot, group: &str, kind: ScaleKind) -> InferredScale {
    let axis = extract_axis(
        snap.root(),
        &Selector::parse(group).unwrap(),
        Orientation::Auto,
    )
    .unwrap();
    let scale = fit_scale(&axis.ticks, kind, FitThresholds::default())
        .unwrap()
        .with_orientation(axis.orientation);
    match (kind.is_continuous(), axis.extent) {
        (true, Some(extent)) => scale.with_axis_extent(extent),
        _ => scale,
    }
}

/// `check_positions` verdict for the bars of a rendered chart.
fn positions_pass(chart: &BarChart, html: &str, tolerance_px: f64) -> bool {
    let snap = snapshot(html);
    let (band_group, value_group) = if chart.horizontal {
        ("g#y-axis", "g#x-axis")
    } else {
        ("g#x-axis", "g#y-axis")
    };
    let band = fitted(&snap, band_group, ScaleKind::Band);
    let value = fitted(&snap, value_group, ScaleKind::Linear);
    let data: Vec<(DataValue, DataValue)> = chart
        .data
        .iter()
        .map(|(n, v)| (DataValue::from(n.as_str()), DataValue::Number(*v)))
        .collect();
    check_positions(
        snap.root(),
        &Selector::parse("g#bars rect").unwrap(),
        &band,
        &value,
        &data,
        PositionOptions {
            tolerance_px,
            ..PositionOptions::default()
        },
    )
    .unwrap()
    .passed
}

/// Reorder the bar elements within their group.
fn permute_bars(html: &str, seed: u64) -> String {
    let open = html.find("<g id=\"bars\"").unwrap();
    let body_start = open + html[open..].find('>').unwrap() + 1;
    let body_end = body_start + html[body_start..].find("</g>").unwrap();
    let mut rects: Vec<String> = html[body_start..body_end]
        .split_inclusive("</rect>")
        .map(str::to_string)
        .collect();
    rects.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    format!(
        "{}{}{}",
        &html[..body_start],
        rects.concat(),
        &html[body_end..]
    )
}

fn scaled(chart: &BarChart, k: f64) -> BarChart {
    let mut big = chart.clone();
    big.width *= k;
    big.height *= k;
    big.margin = chart.margin.map(|m| m * k);
    big.nudges = chart
        .nudges
        .iter()
        .map(|(i, dx, dy)| (*i, dx * k, dy * k))
        .collect();
    big
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn select_by_id_recovers_generated_elements(
        ids in prop::collection::vec(0usize..6, 1..40),
        wrap in prop::collection::vec(any::<bool>(), 40),
    ) {
        let mut body = String::new();
        for (i, id) in ids.iter().enumerate() {
            let el = format!("<circle id=\"m{id}\" data-i=\"{i}\" r=\"1\"></circle>");
            if wrap[i] {
                body.push_str(&format!("<g>{el}</g>"));
            } else {
                body.push_str(&el);
            }
        }
        let snap = snapshot(&format!("<html><body><svg>{body}</svg></body></html>"));
        for id in 0..6 {
            let sel = Selector::parse(&format!("circle#m{id}")).unwrap();
            let found: Vec<String> = select(snap.root(), &sel)
                .iter()
                .map(|n| n.attr("data-i").unwrap().to_string())
                .collect();
            let expected: Vec<String> = ids
                .iter()
                .enumerate()
                .filter(|(_, x)| **x == id)
                .map(|(i, _)| i.to_string())
                .collect();
            prop_assert_eq!(&found, &expected);
            let again: Vec<_> = snap.select(&sel).iter().map(|n| n.id()).collect();
            let first: Vec<_> = snap.select(&sel).iter().map(|n| n.id()).collect();
            prop_assert_eq!(again, first);
        }
    }

    #[test]
    fn color_formats_agree(r in any::<u8>(), g in any::<u8>(), b in any::<u8>()) {
        let expected = Rgba { r, g, b, alpha: 1.0 };
        for text in [
            format!("#{r:02x}{g:02x}{b:02x}"),
            format!("#{r:02X}{g:02X}{b:02X}"),
            format!("rgb({r},{g},{b})"),
            format!(" rgb({r}, {g}, {b}) "),
            format!("rgba({r}, {g}, {b}, 1)"),
        ] {
            let c = parse_color(&text).unwrap();
            prop_assert_eq!(c, expected, "{}", text);
            prop_assert_eq!(parse_color(&c.to_string()).unwrap(), c);
        }
    }

    #[test]
    fn color_grouping_ignores_color_notation(
        formats in prop::collection::vec(0usize..3, 6),
        same_color in any::<bool>(),
    ) {
        let notations = [
            ["steelblue", "#4682b4", "rgb(70, 130, 180)"],
            ["tomato", "#ff6347", "rgb(255,99,71)"],
        ];
        let second = if same_color { 0 } else { 1 };
        let circles = |group: usize, offset: usize| -> String {
            (0..3)
                .map(|i| format!("<circle r=\"2\" fill=\"{}\"></circle>", notations[group][formats[offset + i]]))
                .collect()
        };
        let uniform = |group: usize| -> String {
            (0..3).map(|_| format!("<circle r=\"2\" fill=\"{}\"></circle>", notations[group][1])).collect()
        };
        let doc = |a: String, b: String| {
            snapshot(&format!("<html><body><svg><g id=\"a\">{a}</g><g id=\"b\">{b}</g></svg></body></html>"))
        };
        let groups = [Selector::parse("g#a circle").unwrap(), Selector::parse("g#b circle").unwrap()];
        let mixed = doc(circles(0, 0), circles(second, 3));
        let hex = doc(uniform(0), uniform(second));
        let verdict = |s: &Snapshot| check_color_grouping(s.root(), &groups, "fill").unwrap().passed;
        prop_assert_eq!(verdict(&mixed), verdict(&hex));
        prop_assert_eq!(verdict(&hex), !same_color);
    }

    #[test]
    fn rubric_loading_is_deterministic_and_round_trips(
        tick_step in prop::sample::select(vec![1.0, 2.5, 5.0, 10.0, 25.0]),
        hover in any::<bool>(),
        any_orientation in any::<bool>(),
    ) {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("data.csv"), BarChart::standard().csv()).unwrap();
        let text = bar_rubric_yaml(RubricOptions { tick_step, hover, any_orientation });
        let path = dir.path().join("rubric.yaml");
        fs::write(&path, &text).unwrap();
        let first = load_rubric(&path).unwrap();
        prop_assert_eq!(&load_rubric(&path).unwrap(), &first);
        let reloaded = load_rubric_str(&first.to_yaml(), dir.path()).unwrap();
        prop_assert_eq!(&reloaded, &first);
    }

    #[test]
    fn conforming_chart_has_no_missing_structure(chart in chart_strategy()) {
        let (_dir, rubric) = rubric_for(&chart);
        let snap = snapshot(&chart.html());
        let findings = validate_structure(&rubric.structure, snap.root());
        prop_assert!(findings.iter().all(|f| !f.is_missing()));
    }

    #[test]
    fn layout_scales_with_the_chart(chart in chart_strategy(), k in 0.5f64..3.0) {
        let (_dir, rubric) = rubric_for(&chart);
        let small = snapshot(&chart.html());
        let big = snapshot(&scaled(&chart, k).html());
        let a = detect_layout(small.root(), &rubric.structure).unwrap();
        let b = detect_layout(big.root(), &rubric.structure).unwrap();
        prop_assert_eq!(a.confidence, b.confidence);
        let close = |x: f64, y: f64| (x * k - y).abs() <= 1e-6 * (1.0 + y.abs());
        for (x, y) in [
            (a.svg_width, b.svg_width),
            (a.svg_height, b.svg_height),
            (a.margins.top, b.margins.top),
            (a.margins.right, b.margins.right),
            (a.margins.bottom, b.margins.bottom),
            (a.margins.left, b.margins.left),
            (a.inner_width, b.inner_width),
            (a.inner_height, b.inner_height),
        ] {
            prop_assert!(close(x, y), "{} × {} != {}", x, k, y);
        }
        let before = a.clone();
        prop_assert!(!format_layout_advisory(&a).is_empty());
        prop_assert_eq!(a, before);
    }

    #[test]
    fn position_verdict_ignores_mark_order(chart in chart_strategy(), seed in any::<u64>(), nudge in 0.0f64..6.0) {
        let mut chart = chart;
        chart.nudges = vec![(0, 0.0, nudge)];
        let html = chart.html();
        prop_assert_eq!(positions_pass(&chart, &html, 2.0), positions_pass(&chart, &permute_bars(&html, seed), 2.0));
    }

    #[test]
    fn position_verdict_survives_rescaling(
        chart in chart_strategy(),
        k in 0.5f64..3.0,
        nudge in prop_oneof![0.0f64..1.8, 2.2f64..6.0],
    ) {
        let mut chart = chart;
        chart.nudges = vec![(chart.data.len() - 1, nudge, 0.0)];
        let big = scaled(&chart, k);
        let verdict = positions_pass(&chart, &chart.html(), 2.0);
        prop_assert_eq!(verdict, nudge < 2.0);
        prop_assert_eq!(positions_pass(&big, &big.html(), 2.0 * k), verdict);
    }

    #[test]
    fn continuous_fits_are_monotone_and_translation_invariant(
        kind in prop::sample::select(vec![ScaleKind::Linear, ScaleKind::Log, ScaleKind::Sqrt]),
        slope in prop_oneof![-800.0f64..-50.0, 50.0f64..800.0],
        intercept in -500.0f64..500.0,
        shift in -300.0f64..300.0,
        n in 4usize..12,
    ) {
        let values: Vec<f64> = (1..=n).map(|i| i as f64 * 10.0).collect();
        let g = |v: f64| match kind {
            ScaleKind::Log => v.log10(),
            ScaleKind::Sqrt => v.sqrt(),
            _ => v,
        };
        let ticks = |offset: f64| -> Vec<TickSample> {
            values
                .iter()
                .map(|v| TickSample::new(slope * g(*v) / g(values[n - 1]) + intercept + offset, v.to_string()))
                .collect()
        };
        let base = fit_scale(&ticks(0.0), kind, FitThresholds::default()).unwrap();
        let moved = fit_scale(&ticks(shift), kind, FitThresholds::default()).unwrap();
        let (f0, f1) = (base.fit.unwrap(), moved.fit.unwrap());
        prop_assert!((f0.slope - f1.slope).abs() <= 1e-9 * f0.slope.abs());
        prop_assert!((f1.intercept - f0.intercept - shift).abs() <= 1e-6);
        prop_assert!((f0.r2 - f1.r2).abs() <= 1e-9);
        let px: Vec<f64> = (0..50)
            .map(|i| 10.0 + (values[n - 1] - 10.0) * i as f64 / 49.0)
            .map(|v| forward(&base, &DataValue::Number(v)).unwrap().px().unwrap())
            .collect();
        prop_assert!(px.windows(2).all(|w| (w[1] - w[0]) * slope > 0.0));
    }
}

#[test]
fn batch_mutation_stays_isolated() {
    let tmp = tempfile::tempdir().unwrap();
    let base = BarChart::standard();
    let (_, rubric) = write_rubric(
        &tmp.path().join("rubric"),
        &base,
        RubricOptions {
            tick_step: 10.0,
            hover: false,
            any_orientation: false,
        },
    );
    let subs: Vec<_> = (0..6)
        .map(|i| base.write_submission(tmp.path(), &format!("s{i}")))
        .collect();
    let opts = GradeOptions {
        mode: GradeMode::Static,
        ..GradeOptions::default()
    };
    let batch = BatchOptions {
        parallelism: 3,
        ..BatchOptions::default()
    };
    let before: Vec<Vec<u8>> = grade_batch(&subs, &rubric, &opts, &batch)
        .iter()
        .map(canonical_report)
        .collect();
    let mut unsorted = base.clone();
    unsorted.data.reverse();
    unsorted.write_submission(tmp.path(), "s3");
    let after: Vec<Vec<u8>> = grade_batch(&subs, &rubric, &opts, &batch)
        .iter()
        .map(canonical_report)
        .collect();
    for i in 0..6 {
        assert_eq!(before[i] == after[i], i != 3, "submission s{i}");
    }
}
