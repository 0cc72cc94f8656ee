//! Static SVG rendering of calcium traces and weight histograms.
//!
//! The renderer is dependency-free and fully deterministic: identical input
//! produces identical SVG text, so plots are testable by string comparison.

use std::path::Path;

use crate::csvio::{parse_calcium_csv, parse_weights_csv, read_file, CalciumRow};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    Calcium,
    Histogram,
}

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 480.0;
const MARGIN_LEFT: f64 = 64.0;
const MARGIN_RIGHT: f64 = 24.0;
const MARGIN_TOP: f64 = 24.0;
const MARGIN_BOTTOM: f64 = 48.0;

const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
];

fn fmt2(x: f64) -> String {
    format!("{x:.2}")
}

fn fmt_tick(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    let magnitude = x.abs();
    if (0.01..10000.0).contains(&magnitude) {
        let s = format!("{x:.3}");
        let s = s.trim_end_matches('0').trim_end_matches('.');
        s.to_string()
    } else {
        format!("{x:.2e}")
    }
}

struct Frame {
    x_min: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
}

impl Frame {
    fn sx(&self, x: f64) -> f64 {
        let span = (self.x_max - self.x_min).max(f64::MIN_POSITIVE);
        MARGIN_LEFT + (x - self.x_min) / span * (WIDTH - MARGIN_LEFT - MARGIN_RIGHT)
    }

    fn sy(&self, y: f64) -> f64 {
        let span = (self.y_max - self.y_min).max(f64::MIN_POSITIVE);
        HEIGHT - MARGIN_BOTTOM - (y - self.y_min) / span * (HEIGHT - MARGIN_TOP - MARGIN_BOTTOM)
    }
}

fn document(body: &str) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {WIDTH} {HEIGHT}\" \
         font-family=\"monospace\" font-size=\"12\">\n\
         <rect x=\"0\" y=\"0\" width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n\
         {body}</svg>\n"
    )
}

fn axes(frame: &Frame, x_label: &str, y_label: &str) -> String {
    let mut out = String::new();
    let x0 = MARGIN_LEFT;
    let x1 = WIDTH - MARGIN_RIGHT;
    let y0 = HEIGHT - MARGIN_BOTTOM;
    let y1 = MARGIN_TOP;
    out.push_str(&format!(
        "<line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x1}\" y2=\"{y0}\" stroke=\"black\"/>\n\
         <line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x0}\" y2=\"{y1}\" stroke=\"black\"/>\n"
    ));
    for k in 0..=4 {
        let fx = frame.x_min + (frame.x_max - frame.x_min) * k as f64 / 4.0;
        let px = frame.sx(fx);
        out.push_str(&format!(
            "<line x1=\"{}\" y1=\"{y0}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n\
             <text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{}</text>\n",
            fmt2(px),
            fmt2(px),
            fmt2(y0 + 5.0),
            fmt2(px),
            fmt2(y0 + 20.0),
            fmt_tick(fx)
        ));
        let fy = frame.y_min + (frame.y_max - frame.y_min) * k as f64 / 4.0;
        let py = frame.sy(fy);
        out.push_str(&format!(
            "<line x1=\"{}\" y1=\"{}\" x2=\"{x0}\" y2=\"{}\" stroke=\"black\"/>\n\
             <text x=\"{}\" y=\"{}\" text-anchor=\"end\">{}</text>\n",
            fmt2(x0 - 5.0),
            fmt2(py),
            fmt2(py),
            fmt2(x0 - 8.0),
            fmt2(py + 4.0),
            fmt_tick(fy)
        ));
    }
    out.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{x_label}</text>\n",
        fmt2((x0 + x1) / 2.0),
        fmt2(HEIGHT - 8.0)
    ));
    out.push_str(&format!(
        "<text x=\"14\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 14 {})\">{y_label}</text>\n",
        fmt2((y0 + y1) / 2.0),
        fmt2((y0 + y1) / 2.0)
    ));
    out
}

fn no_data(x_label: &str, y_label: &str) -> String {
    let frame = Frame {
        x_min: 0.0,
        x_max: 1.0,
        y_min: 0.0,
        y_max: 1.0,
    };
    let mut body = axes(&frame, x_label, y_label);
    body.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" text-anchor=\"middle\">no data</text>\n",
        fmt2(WIDTH / 2.0),
        fmt2(HEIGHT / 2.0)
    ));
    document(&body)
}

/// One polyline per (population, neuron) series.
pub fn render_calcium_svg(rows: &[CalciumRow]) -> String {
    if rows.is_empty() {
        return no_data("t_seconds", "calcium");
    }
    let mut series: Vec<(String, Vec<(f64, f64)>)> = Vec::new();
    for row in rows {
        let key = format!("{} {}", row.population, row.neuron);
        match series.iter_mut().find(|(k, _)| *k == key) {
            Some((_, points)) => points.push((row.t, row.value)),
            None => series.push((key, vec![(row.t, row.value)])),
        }
    }
    let mut x_min = f64::INFINITY;
    let mut x_max = f64::NEG_INFINITY;
    let mut y_min: f64 = 0.0;
    let mut y_max = f64::NEG_INFINITY;
    for (_, points) in &series {
        for (x, y) in points {
            x_min = x_min.min(*x);
            x_max = x_max.max(*x);
            y_min = y_min.min(*y);
            y_max = y_max.max(*y);
        }
    }
    if y_max <= y_min {
        y_max = y_min + 1.0;
    }
    if x_max <= x_min {
        x_max = x_min + 1.0;
    }
    let frame = Frame {
        x_min,
        x_max,
        y_min,
        y_max,
    };
    let mut body = axes(&frame, "t_seconds", "calcium");
    for (i, (key, points)) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let coords: Vec<String> = points
            .iter()
            .map(|(x, y)| format!("{},{}", fmt2(frame.sx(*x)), fmt2(frame.sy(*y))))
            .collect();
        body.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>\n",
            coords.join(" ")
        ));
        body.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" fill=\"{color}\">{key}</text>\n",
            fmt2(WIDTH - MARGIN_RIGHT - 120.0),
            fmt2(MARGIN_TOP + 14.0 * (i as f64 + 1.0))
        ));
    }
    document(&body)
}

/// Overlapping pre/post bar histogram over a shared binning.
pub fn render_histogram_svg(pre: &[f64], post: Option<&[f64]>) -> String {
    let empty_post = post.map_or(false, |p| p.is_empty());
    if pre.is_empty() && (post.is_none() || empty_post) {
        return no_data("w", "count");
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for v in pre.iter().chain(post.into_iter().flatten()) {
        lo = lo.min(*v);
        hi = hi.max(*v);
    }
    if hi <= lo {
        hi = lo + 1.0;
    }
    let bins = 20usize;
    let width = (hi - lo) / bins as f64;
    let count = |data: &[f64]| -> Vec<usize> {
        let mut counts = vec![0usize; bins];
        for v in data {
            let idx = (((v - lo) / width) as usize).min(bins - 1);
            counts[idx] += 1;
        }
        counts
    };
    let pre_counts = count(pre);
    let post_counts = post.map(count);
    let y_max = pre_counts
        .iter()
        .chain(post_counts.iter().flatten())
        .copied()
        .max()
        .unwrap_or(1)
        .max(1) as f64;
    let frame = Frame {
        x_min: lo,
        x_max: hi,
        y_min: 0.0,
        y_max,
    };
    let mut body = axes(&frame, "w", "count");
    let bars = |counts: &[usize], color: &str, class: &str| -> String {
        let mut group = format!("<g class=\"{class}\" fill=\"{color}\" fill-opacity=\"0.55\">\n");
        for (i, c) in counts.iter().enumerate() {
            if *c == 0 {
                continue;
            }
            let x0 = frame.sx(lo + i as f64 * width);
            let x1 = frame.sx(lo + (i as f64 + 1.0) * width);
            let y = frame.sy(*c as f64);
            let y0 = frame.sy(0.0);
            group.push_str(&format!(
                "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\"/>\n",
                fmt2(x0),
                fmt2(y),
                fmt2(x1 - x0),
                fmt2(y0 - y)
            ));
        }
        group.push_str("</g>\n");
        group
    };
    body.push_str(&bars(&pre_counts, "#d62728", "pre"));
    if let Some(counts) = &post_counts {
        body.push_str(&bars(counts, "#1f77b4", "post"));
    }
    body.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" fill=\"#d62728\">pre</text>\n",
        fmt2(WIDTH - MARGIN_RIGHT - 120.0),
        fmt2(MARGIN_TOP + 14.0)
    ));
    if post_counts.is_some() {
        body.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" fill=\"#1f77b4\">post</text>\n",
            fmt2(WIDTH - MARGIN_RIGHT - 120.0),
            fmt2(MARGIN_TOP + 28.0)
        ));
    }
    document(&body)
}

/// Renders from CSV files. `input` is one path, or `pre.csv,post.csv` for a
/// paired histogram; a lone weights file renders a single histogram.
pub fn render_from_files(input: &str, kind: PlotKind) -> Result<String> {
    match kind {
        PlotKind::Calcium => {
            let text = read_file(Path::new(input))?;
            let rows = parse_calcium_csv(&text, input)?;
            Ok(render_calcium_svg(&rows))
        }
        PlotKind::Histogram => {
            let mut parts = input.split(',');
            let pre_path = parts.next().expect("split yields at least one part");
            let post_path = parts.next();
            if parts.next().is_some() {
                return Err(Error::invalid(
                    "plot.in",
                    "expected at most two comma-separated paths",
                ));
            }
            let pre = parse_weights_csv(&read_file(Path::new(pre_path))?, pre_path)?;
            let post = match post_path {
                Some(p) => Some(parse_weights_csv(&read_file(Path::new(p))?, p)?),
                None => None,
            };
            Ok(render_histogram_svg(&pre, post.as_deref()))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn calcium_polyline_has_all_points() {
        let rows = vec![
            CalciumRow {
                t: 0.0,
                population: "readout".into(),
                neuron: 0,
                value: 0.0,
            },
            CalciumRow {
                t: 1.0,
                population: "readout".into(),
                neuron: 0,
                value: 2.0,
            },
        ];
        let svg = render_calcium_svg(&rows);
        let polylines = svg.matches("<polyline").count();
        assert_eq!(polylines, 1);
        let points = svg
            .split("points=\"")
            .nth(1)
            .unwrap()
            .split('"')
            .next()
            .unwrap();
        assert_eq!(points.split(' ').count(), 2);
        assert!(svg.contains("readout 0"));
    }

    #[test]
    fn identical_pre_post_histograms_overlap() {
        let data = vec![0.1, 0.1, 0.2, 0.35, 0.5];
        let svg = render_histogram_svg(&data, Some(&data));
        let group = |class: &str| -> String {
            svg.split(&format!("class=\"{class}\""))
                .nth(1)
                .unwrap()
                .split("</g>")
                .next()
                .unwrap()
                .split('>')
                .skip(1)
                .collect::<Vec<_>>()
                .join(">")
        };
        assert_eq!(group("pre"), group("post"));
    }

    #[test]
    fn empty_data_renders_no_data_label() {
        let svg = render_histogram_svg(&[], None);
        assert!(svg.contains("no data"));
        let svg = render_calcium_svg(&[]);
        assert!(svg.contains("no data"));
        assert!(svg.contains("<line"));
    }

    #[test]
    fn rendering_is_deterministic() {
        let rows = vec![CalciumRow {
            t: 0.5,
            population: "pyramidal".into(),
            neuron: 1,
            value: 1.25,
        }];
        assert_eq!(render_calcium_svg(&rows), render_calcium_svg(&rows));
    }
}
