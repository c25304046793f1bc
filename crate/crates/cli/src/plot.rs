//! Minimal SVG rendering for run outputs: histogram heatmaps and line
//! plots. Pure string building over data already written to CSV; the
//! renderer adds no computation.

use std::fmt::Write as _;

const W: f64 = 640.0;
const H: f64 = 480.0;
const ML: f64 = 70.0; // margins
const MR: f64 = 20.0;
const MT: f64 = 40.0;
const MB: f64 = 55.0;

struct Frame {
    x_lo: f64,
    x_hi: f64,
    y_lo: f64,
    y_hi: f64,
}

impl Frame {
    fn from_ranges(x: (f64, f64), y: (f64, f64)) -> Self {
        let pad = |lo: f64, hi: f64| {
            if hi > lo {
                (lo, hi)
            } else {
                (lo - 0.5, lo + 0.5)
            }
        };
        let (x_lo, x_hi) = pad(x.0, x.1);
        let (y_lo, y_hi) = pad(y.0, y.1);
        Self { x_lo, x_hi, y_lo, y_hi }
    }

    fn px(&self, x: f64) -> f64 {
        ML + (x - self.x_lo) / (self.x_hi - self.x_lo) * (W - ML - MR)
    }

    fn py(&self, y: f64) -> f64 {
        H - MB - (y - self.y_lo) / (self.y_hi - self.y_lo) * (H - MT - MB)
    }
}

fn header(title: &str) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" \
         viewBox=\"0 0 {W} {H}\" font-family=\"sans-serif\" font-size=\"13\">\n\
         <rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>\n\
         <text x=\"{:.1}\" y=\"22\" text-anchor=\"middle\" font-size=\"16\">{}</text>\n",
        W / 2.0,
        escape(title)
    )
}

fn axes(f: &Frame, xlabel: &str, ylabel: &str) -> String {
    let mut s = String::new();
    let _ = write!(
        s,
        "<rect x=\"{ML}\" y=\"{MT}\" width=\"{:.1}\" height=\"{:.1}\" fill=\"none\" stroke=\"black\"/>\n",
        W - ML - MR,
        H - MT - MB
    );
    for k in 0..=4 {
        let xv = f.x_lo + (f.x_hi - f.x_lo) * k as f64 / 4.0;
        let yv = f.y_lo + (f.y_hi - f.y_lo) * k as f64 / 4.0;
        let _ = write!(
            s,
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{}</text>\n",
            f.px(xv),
            H - MB + 18.0,
            tick(xv)
        );
        let _ = write!(
            s,
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{}</text>\n",
            ML - 6.0,
            f.py(yv) + 4.0,
            tick(yv)
        );
    }
    let _ = write!(
        s,
        "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{}</text>\n",
        ML + (W - ML - MR) / 2.0,
        H - 12.0,
        escape(xlabel)
    );
    let _ = write!(
        s,
        "<text x=\"16\" y=\"{:.1}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {:.1})\">{}</text>\n",
        MT + (H - MT - MB) / 2.0,
        MT + (H - MT - MB) / 2.0,
        escape(ylabel)
    );
    s
}

fn tick(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 1e4 || v.abs() < 1e-3 {
        format!("{v:.1e}")
    } else {
        format!("{v:.3}")
            .trim_end_matches('0')
            .trim_end_matches('.')
            .to_string()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

const SERIES_COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#555555"];

/// Line plot of one or more named series on shared axes, with a legend.
pub fn line_svg(
    title: &str,
    xlabel: &str,
    ylabel: &str,
    series: &[(&str, &[(f64, f64)])],
) -> String {
    let finite = |v: f64| v.is_finite();
    let mut x = (f64::INFINITY, f64::NEG_INFINITY);
    let mut y = (f64::INFINITY, f64::NEG_INFINITY);
    for (_, pts) in series {
        for &(px, py) in *pts {
            if finite(px) && finite(py) {
                x = (x.0.min(px), x.1.max(px));
                y = (y.0.min(py), y.1.max(py));
            }
        }
    }
    let mut svg = header(title);
    if !x.0.is_finite() {
        svg += &axes(&Frame::from_ranges((0.0, 1.0), (0.0, 1.0)), xlabel, ylabel);
        svg += "</svg>\n";
        return svg;
    }
    let f = Frame::from_ranges(x, y);
    svg += &axes(&f, xlabel, ylabel);
    for (i, (name, pts)) in series.iter().enumerate() {
        let color = SERIES_COLORS[i % SERIES_COLORS.len()];
        let mut path = String::new();
        for &(px, py) in *pts {
            if !(finite(px) && finite(py)) {
                continue;
            }
            let _ = write!(path, "{:.1},{:.1} ", f.px(px), f.py(py));
        }
        let _ = write!(
            svg,
            "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>\n",
            path.trim_end()
        );
        let _ = write!(
            svg,
            "<text x=\"{:.1}\" y=\"{:.1}\" fill=\"{color}\">{}</text>\n",
            W - MR - 150.0,
            MT + 16.0 * (i as f64 + 1.0),
            escape(name)
        );
    }
    svg += "</svg>\n";
    svg
}

/// Heatmap of binned counts; `cells` holds (x_center, y_center, count)
/// for every grid cell in row-major order.
pub fn heatmap_svg(
    title: &str,
    xlabel: &str,
    ylabel: &str,
    cells: &[(f64, f64, u64)],
) -> String {
    let mut svg = header(title);
    if cells.is_empty() {
        svg += &axes(&Frame::from_ranges((0.0, 1.0), (0.0, 1.0)), xlabel, ylabel);
        svg += "</svg>\n";
        return svg;
    }
    let mut xs: Vec<f64> = cells.iter().map(|c| c.0).collect();
    let mut ys: Vec<f64> = cells.iter().map(|c| c.1).collect();
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    xs.dedup();
    ys.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ys.dedup();
    let dx = if xs.len() > 1 { xs[1] - xs[0] } else { 1.0 };
    let dy = if ys.len() > 1 { ys[1] - ys[0] } else { 1.0 };
    let f = Frame::from_ranges(
        (xs[0] - dx / 2.0, xs[xs.len() - 1] + dx / 2.0),
        (ys[0] - dy / 2.0, ys[ys.len() - 1] + dy / 2.0),
    );
    let max = cells.iter().map(|c| c.2).max().unwrap_or(0).max(1) as f64;
    for &(x, y, n) in cells {
        if n == 0 {
            continue;
        }
        // log intensity so faint components stay visible
        let v = (1.0 + n as f64).ln() / (1.0 + max).ln();
        let r = (255.0 * v) as u8;
        let g = (80.0 * v) as u8;
        let b = (255.0 * (1.0 - 0.7 * v)) as u8;
        let _ = write!(
            svg,
            "<rect x=\"{:.1}\" y=\"{:.1}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"rgb({r},{g},{b})\"/>\n",
            f.px(x - dx / 2.0),
            f.py(y + dy / 2.0),
            f.px(x + dx / 2.0) - f.px(x - dx / 2.0),
            f.py(y - dy / 2.0) - f.py(y + dy / 2.0),
        );
    }
    svg += &axes(&f, xlabel, ylabel);
    svg += "</svg>\n";
    svg
}
