//! Bar-chart submissions rendered the way D3's band/linear scales and axis
//! generators would lay them out, with the rubric that grades them.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::Rng;
use visgrade_core::rubric::{load_rubric, RubricSpec};
use visgrade_core::Submission;

#[derive(Debug, Clone, PartialEq)]
pub struct BarChart {
    pub data: Vec<(String, f64)>,
    pub width: f64,
    pub height: f64,
    /// top, right, bottom, left
    pub margin: [f64; 4],
    pub padding: f64,
    pub y_max: f64,
    pub tick_step: f64,
    pub fill: String,
    /// Size the svg with a viewBox instead of width/height.
    pub view_box: bool,
    /// Translate each group by the margins instead of wrapping them in one.
    pub flat_groups: bool,
    /// Bars run left to right from a category axis on the left.
    pub horizontal: bool,
    /// Offsets added to individual bars, as (index, dx, dy).
    pub nudges: Vec<(usize, f64, f64)>,
    /// Extra markup appended to the document body.
    pub extra_body: String,
}

pub const NAMES: [&str; 12] = [
    "apples", "pears", "plums", "figs", "kiwis", "limes", "dates", "grapes", "mangos", "cherries",
    "lemons", "melons",
];

impl BarChart {
    pub fn standard() -> BarChart {
        BarChart {
            data: [
                ("apples", 42.0),
                ("pears", 35.0),
                ("plums", 28.5),
                ("figs", 20.0),
                ("kiwis", 12.0),
                ("limes", 7.0),
            ]
            .iter()
            .map(|(n, v)| (n.to_string(), *v))
            .collect(),
            width: 600.0,
            height: 400.0,
            margin: [20.0, 30.0, 40.0, 50.0],
            padding: 0.1,
            y_max: 50.0,
            tick_step: 10.0,
            fill: "steelblue".into(),
            view_box: false,
            flat_groups: false,
            horizontal: false,
            nudges: Vec::new(),
            extra_body: String::new(),
        }
    }

    /// A random but correct design: sizes, margins, padding, color, data
    /// count and tick spacing all vary.
    pub fn variant(rng: &mut impl Rng) -> BarChart {
        let n = rng.gen_range(3..=NAMES.len());
        let tick_step = *[5.0, 10.0, 20.0, 25.0, 50.0].choose(rng).unwrap();
        let y_max = tick_step * rng.gen_range(4..=10) as f64;
        let mut values: Vec<f64> = (0..n)
            .map(|_| (rng.gen_range(0.05..0.98) * y_max * 10.0).round() / 10.0)
            .collect();
        values.sort_by(|a, b| b.total_cmp(a));
        let mut names: Vec<&str> = NAMES.to_vec();
        names.shuffle(rng);
        BarChart {
            data: names
                .iter()
                .zip(values)
                .map(|(n, v)| (n.to_string(), v))
                .collect(),
            width: rng.gen_range(360..=960) as f64,
            height: rng.gen_range(260..=640) as f64,
            margin: [
                rng.gen_range(5..=40) as f64,
                rng.gen_range(5..=60) as f64,
                rng.gen_range(25..=60) as f64,
                rng.gen_range(30..=80) as f64,
            ],
            padding: rng.gen_range(0.05..0.4),
            y_max,
            tick_step,
            fill: [
                "steelblue",
                "#69b3a2",
                "rgb(200, 80, 60)",
                "darkorange",
                "hsl(210, 50%, 40%)",
            ]
            .choose(rng)
            .unwrap()
            .to_string(),
            view_box: rng.gen_bool(0.3),
            flat_groups: rng.gen_bool(0.3),
            horizontal: false,
            nudges: Vec::new(),
            extra_body: String::new(),
        }
    }

    pub fn inner(&self) -> (f64, f64) {
        let [t, r, b, l] = self.margin;
        (self.width - l - r, self.height - t - b)
    }

    /// Pixel length of the category axis and of the value axis.
    fn extents(&self) -> (f64, f64) {
        let (iw, ih) = self.inner();
        if self.horizontal {
            (ih, iw)
        } else {
            (iw, ih)
        }
    }

    /// Band start and bandwidth for each category, as d3.scaleBand with
    /// equal inner and outer padding and center alignment.
    pub fn band(&self, i: usize) -> (f64, f64) {
        let (len, _) = self.extents();
        let n = self.data.len() as f64;
        let step = len / (n - self.padding + 2.0 * self.padding).max(1.0);
        let start = (len - step * (n - self.padding)) * 0.5;
        (start + step * i as f64, step * (1.0 - self.padding))
    }

    /// Value-axis pixel: up from the bottom, or right from the left edge
    /// when horizontal.
    pub fn y(&self, v: f64) -> f64 {
        let (_, len) = self.extents();
        if self.horizontal {
            v / self.y_max * len
        } else {
            len - v / self.y_max * len
        }
    }

    pub fn csv(&self) -> String {
        let mut out = String::from("name,value\n");
        for (n, v) in &self.data {
            let _ = writeln!(out, "{n},{v}");
        }
        out
    }

    fn group(&self, id: &str, dx: f64, dy: f64, attrs: &str, body: &str) -> String {
        let [t, _, _, l] = self.margin;
        let (dx, dy) = if self.flat_groups {
            (dx + l, dy + t)
        } else {
            (dx, dy)
        };
        format!("<g id=\"{id}\" transform=\"translate({dx},{dy})\"{attrs}>{body}</g>")
    }

    fn bottom_tick(x: f64, label: &str) -> String {
        format!("<g class=\"tick\" opacity=\"1\" transform=\"translate({x},0)\"><line stroke=\"currentColor\" y2=\"6\"></line><text fill=\"currentColor\" y=\"9\" dy=\"0.71em\">{label}</text></g>")
    }

    fn left_tick(y: f64, label: &str) -> String {
        format!("<g class=\"tick\" opacity=\"1\" transform=\"translate(0,{y})\"><line stroke=\"currentColor\" x2=\"-6\"></line><text fill=\"currentColor\" x=\"-9\" dy=\"0.32em\">{label}</text></g>")
    }

    pub fn svg(&self) -> String {
        let (iw, ih) = self.inner();
        let [t, _, _, l] = self.margin;
        let mut band_ticks = String::new();
        for (i, (name, _)) in self.data.iter().enumerate() {
            let (p0, bw) = self.band(i);
            band_ticks.push_str(&if self.horizontal {
                Self::left_tick(p0 + bw / 2.0, name)
            } else {
                Self::bottom_tick(p0 + bw / 2.0, name)
            });
        }
        let mut value_ticks = String::new();
        let mut v = 0.0;
        while v <= self.y_max + 1e-9 {
            value_ticks.push_str(&if self.horizontal {
                Self::bottom_tick(self.y(v), &v.to_string())
            } else {
                Self::left_tick(self.y(v), &v.to_string())
            });
            v += self.tick_step;
        }
        let (bottom_ticks, left_ticks) = if self.horizontal {
            (value_ticks, band_ticks)
        } else {
            (band_ticks, value_ticks)
        };
        let mut bars = String::new();
        for (i, (_, value)) in self.data.iter().enumerate() {
            let (p0, bw) = self.band(i);
            let (dx, dy) = self
                .nudges
                .iter()
                .filter(|(k, _, _)| *k == i)
                .fold((0.0, 0.0), |(ax, ay), (_, x, y)| (ax + x, ay + y));
            let (x, y, w, h) = if self.horizontal {
                (0.0, p0, self.y(*value), bw)
            } else {
                let top = self.y(*value);
                (p0, top, bw, ih - top)
            };
            let _ = write!(
                bars,
                "<rect class=\"bar\" x=\"{}\" y=\"{}\" width=\"{w}\" height=\"{h}\" fill=\"{}\"></rect>",
                x + dx,
                y + dy,
                self.fill
            );
        }
        let axes_attrs = " fill=\"none\" font-size=\"10\" font-family=\"sans-serif\"";
        let x_axis = self.group(
            "x-axis",
            0.0,
            ih,
            &format!("{axes_attrs} text-anchor=\"middle\""),
            &format!("<path class=\"domain\" stroke=\"currentColor\" d=\"M0.5,6V0.5H{}V6\"></path>{bottom_ticks}", iw + 0.5),
        );
        let y_axis = self.group(
            "y-axis",
            0.0,
            0.0,
            &format!("{axes_attrs} text-anchor=\"end\""),
            &format!("<path class=\"domain\" stroke=\"currentColor\" d=\"M-6,{}H0.5V0.5H-6\"></path>{left_ticks}", ih + 0.5),
        );
        let bars = self.group("bars", 0.0, 0.0, "", &bars);
        let size = if self.view_box {
            format!("viewBox=\"0 0 {} {}\"", self.width, self.height)
        } else {
            format!("width=\"{}\" height=\"{}\"", self.width, self.height)
        };
        let body = format!("{x_axis}{y_axis}{bars}");
        let body = if self.flat_groups {
            body
        } else {
            format!("<g id=\"chart\" transform=\"translate({l},{t})\">{body}</g>")
        };
        format!("<svg {size}>{body}</svg>")
    }

    pub fn html(&self) -> String {
        format!(
            "<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\"><title>Fruit sales</title></head><body>{}{}</body></html>\n",
            self.svg(),
            self.extra_body
        )
    }

    /// Write `index.html` into `dir/id`.
    pub fn write_submission(&self, dir: &Path, id: &str) -> Submission {
        let root = dir.join(id);
        fs::create_dir_all(&root).unwrap();
        fs::write(root.join("index.html"), self.html()).unwrap();
        Submission::open(&root, "index.html").unwrap()
    }
}

/// Rubric options for [`bar_rubric`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RubricOptions {
    pub tick_step: f64,
    pub hover: bool,
    /// Let either axis group carry either scale, so vertical and
    /// horizontal bars grade alike.
    pub any_orientation: bool,
}

pub fn bar_rubric_yaml(opts: RubricOptions) -> String {
    let (x_group, y_group, length, thickness) = if opts.any_orientation {
        (
            "g#x-axis, g#y-axis",
            "g#x-axis, g#y-axis",
            "length",
            "thickness",
        )
    } else {
        ("g#x-axis", "g#y-axis", "height", "width")
    };
    let mut tests = vec![
        "  - {id: structure, category: advisory, check: {structure: true}}".to_string(),
        "  - {id: layout, category: advisory, check: {layout: true}}".to_string(),
        "  - {id: x-scale, category: positioning, points: 1, check: {scale: {scale: x}}}".to_string(),
        "  - {id: y-scale, category: positioning, points: 1, check: {scale: {scale: y}}}".to_string(),
        format!("  - {{id: y-ticks, category: positioning, points: 1, check: {{axis_ticks: {{scale: y, interval: {}}}}}, feedback_hint: 'Call ticks() on the y axis'}}", opts.tick_step),
        "  - {id: bar-positions, category: positioning, points: 3, check: {positions: {marks: 'g#bars rect', x_scale: x, y_scale: y, dataset: sales, x_field: name, y_field: value}}}".to_string(),
        format!("  - {{id: bars-sorted, category: appearance, points: 2, check: {{sorted: {{marks: 'g#bars rect', key: {length}, order: descending}}}}, feedback_hint: 'Sort the data before binding it'}}"),
        format!("  - {{id: bar-width, category: appearance, points: 1, check: {{constant: {{marks: 'g#bars rect', attribute: {thickness}}}}}}}"),
    ];
    let mut total = 9;
    if opts.hover {
        tests.push(
            "  - {id: hover, category: interaction, points: 1, check: {actions: [{move_to: 'g#bars rect:nth(0)'}], assert: [{target: 'g#bars rect:nth(0)', attribute: fill, relation: changed}]}}"
                .to_string(),
        );
        total += 1;
    }
    format!(
        "schema: 1\n\
         meta: {{name: fruit sales, entry_file: index.html, total_points: {total}}}\n\
         structure: {{svg_selector: svg, groups: [x-axis, y-axis, bars]}}\n\
         datasets: {{sales: data.csv}}\n\
         scales:\n\
         \x20 - {{id: x, axis_group: '{x_group}', kind: band, expected_domain: {{from_dataset: sales, field: name}}}}\n\
         \x20 - {{id: y, axis_group: '{y_group}', kind: linear, expected_domain: {{from_dataset: sales, field: value}}}}\n\
         tests:\n{}\n",
        tests.join("\n")
    )
}

/// Write the rubric and its dataset into `dir` and load it.
pub fn write_rubric(dir: &Path, chart: &BarChart, opts: RubricOptions) -> (PathBuf, RubricSpec) {
    fs::create_dir_all(dir).unwrap();
    fs::write(dir.join("data.csv"), chart.csv()).unwrap();
    let path = dir.join("rubric.yaml");
    fs::write(&path, bar_rubric_yaml(opts)).unwrap();
    let rubric = load_rubric(&path).unwrap();
    (path, rubric)
}

pub fn standard_rubric(dir: &Path, hover: bool) -> (PathBuf, RubricSpec) {
    write_rubric(
        dir,
        &BarChart::standard(),
        RubricOptions {
            tick_step: 10.0,
            hover,
            any_orientation: false,
        },
    )
}
