//! Minimal self-contained SVG plotting: curves on a log-x axis with
//! optional shaded bands. No external plotting dependency; output is
//! deterministic for identical inputs.

const WIDTH: f64 = 860.0;
const HEIGHT: f64 = 560.0;
const MARGIN_LEFT: f64 = 72.0;
const MARGIN_RIGHT: f64 = 180.0;
const MARGIN_TOP: f64 = 44.0;
const MARGIN_BOTTOM: f64 = 64.0;

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f",
];

pub struct Series {
    pub label: String,
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    /// Optional (lower, upper) band to shade around the curve.
    pub band: Option<(Vec<f64>, Vec<f64>)>,
    /// Draw dashed (reference curves).
    pub dashed: bool,
}

pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    /// Fixed y range; data-derived when absent.
    pub y_range: Option<(f64, f64)>,
    /// Free-text metadata embedded as an XML comment.
    pub metadata: String,
}

fn fmt(v: f64) -> String {
    format!("{v:.2}")
}

impl Plot {
    pub fn render(&self) -> String {
        let x_min = self
            .series
            .iter()
            .flat_map(|s| s.xs.iter())
            .copied()
            .filter(|&x| x > 0.0)
            .fold(1.0_f64, f64::min);
        let lx_min = x_min.log10().floor();
        let lx_max = 0.0_f64; // fractions end at 1
        let (y_min, y_max) = self.y_range.unwrap_or_else(|| {
            let lo = self
                .series
                .iter()
                .flat_map(|s| s.ys.iter().chain(s.band.iter().flat_map(|(l, _)| l.iter())))
                .copied()
                .fold(f64::INFINITY, f64::min);
            let hi = self
                .series
                .iter()
                .flat_map(|s| s.ys.iter().chain(s.band.iter().flat_map(|(_, u)| u.iter())))
                .copied()
                .fold(f64::NEG_INFINITY, f64::max);
            let pad = 0.05 * (hi - lo).max(1e-9);
            (lo - pad, hi + pad)
        });

        let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
        let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
        let sx =
            |x: f64| MARGIN_LEFT + (x.max(1e-300).log10() - lx_min) / (lx_max - lx_min) * plot_w;
        let sy = |y: f64| MARGIN_TOP + (y_max - y) / (y_max - y_min) * plot_h;

        let mut out = String::with_capacity(16 * 1024);
        out.push_str(&format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" \
             viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n"
        ));
        out.push_str(&format!("<!-- {} -->\n", self.metadata.replace("--", "-")));
        out.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");

        // axes
        out.push_str(&format!(
            "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n",
            fmt(MARGIN_LEFT),
            fmt(MARGIN_TOP + plot_h),
            fmt(MARGIN_LEFT + plot_w),
            fmt(MARGIN_TOP + plot_h)
        ));
        out.push_str(&format!(
            "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n",
            fmt(MARGIN_LEFT),
            fmt(MARGIN_TOP),
            fmt(MARGIN_LEFT),
            fmt(MARGIN_TOP + plot_h)
        ));

        // x ticks at decades
        let mut k = lx_min as i64;
        while k <= 0 {
            let x = sx(10f64.powi(k as i32));
            out.push_str(&format!(
                "<line x1=\"{0}\" y1=\"{1}\" x2=\"{0}\" y2=\"{2}\" stroke=\"black\"/>\n",
                fmt(x),
                fmt(MARGIN_TOP + plot_h),
                fmt(MARGIN_TOP + plot_h + 6.0)
            ));
            out.push_str(&format!(
                "<text x=\"{}\" y=\"{}\" font-size=\"12\" text-anchor=\"middle\">1e{k}</text>\n",
                fmt(x),
                fmt(MARGIN_TOP + plot_h + 22.0)
            ));
            k += 1;
        }
        // y ticks
        let n_ticks = 5;
        for t in 0..=n_ticks {
            let y_val = y_min + (y_max - y_min) * t as f64 / n_ticks as f64;
            let y = sy(y_val);
            out.push_str(&format!(
                "<line x1=\"{1}\" y1=\"{0}\" x2=\"{2}\" y2=\"{0}\" stroke=\"black\"/>\n",
                fmt(y),
                fmt(MARGIN_LEFT - 6.0),
                fmt(MARGIN_LEFT)
            ));
            out.push_str(&format!(
                "<text x=\"{}\" y=\"{}\" font-size=\"12\" text-anchor=\"end\">{:.2}</text>\n",
                fmt(MARGIN_LEFT - 10.0),
                fmt(y + 4.0),
                y_val
            ));
        }

        // labels and title
        out.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-size=\"14\" text-anchor=\"middle\">{}</text>\n",
            fmt(MARGIN_LEFT + plot_w / 2.0),
            fmt(HEIGHT - 16.0),
            escape(&self.x_label)
        ));
        out.push_str(&format!(
            "<text x=\"18\" y=\"{}\" font-size=\"14\" text-anchor=\"middle\" \
             transform=\"rotate(-90 18 {})\">{}</text>\n",
            fmt(MARGIN_TOP + plot_h / 2.0),
            fmt(MARGIN_TOP + plot_h / 2.0),
            escape(&self.y_label)
        ));
        out.push_str(&format!(
            "<text x=\"{}\" y=\"24\" font-size=\"16\" text-anchor=\"middle\">{}</text>\n",
            fmt(MARGIN_LEFT + plot_w / 2.0),
            escape(&self.title)
        ));

        // series
        for (idx, series) in self.series.iter().enumerate() {
            let color = PALETTE[idx % PALETTE.len()];
            if let Some((lower, upper)) = &series.band {
                let mut d = String::from("M");
                for (i, (&x, &u)) in series.xs.iter().zip(upper.iter()).enumerate() {
                    if i > 0 {
                        d.push_str(" L");
                    }
                    d.push_str(&format!("{},{}", fmt(sx(x)), fmt(sy(u))));
                }
                for (&x, &l) in series.xs.iter().zip(lower.iter()).rev() {
                    d.push_str(&format!(" L{},{}", fmt(sx(x)), fmt(sy(l))));
                }
                d.push('Z');
                out.push_str(&format!(
                    "<path d=\"{d}\" fill=\"{color}\" fill-opacity=\"0.18\" stroke=\"none\"/>\n"
                ));
            }
            let mut d = String::from("M");
            for (i, (&x, &y)) in series.xs.iter().zip(series.ys.iter()).enumerate() {
                if i > 0 {
                    d.push_str(" L");
                }
                d.push_str(&format!("{},{}", fmt(sx(x)), fmt(sy(y))));
            }
            let dash = if series.dashed {
                " stroke-dasharray=\"6,4\""
            } else {
                ""
            };
            out.push_str(&format!(
                "<path d=\"{d}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.8\"{dash}/>\n"
            ));
            // legend entry
            let ly = MARGIN_TOP + 16.0 + 20.0 * idx as f64;
            out.push_str(&format!(
                "<line x1=\"{0}\" y1=\"{1}\" x2=\"{2}\" y2=\"{1}\" stroke=\"{color}\" \
                 stroke-width=\"2\"{dash}/>\n",
                fmt(WIDTH - MARGIN_RIGHT + 12.0),
                fmt(ly),
                fmt(WIDTH - MARGIN_RIGHT + 40.0)
            ));
            out.push_str(&format!(
                "<text x=\"{}\" y=\"{}\" font-size=\"12\">{}</text>\n",
                fmt(WIDTH - MARGIN_RIGHT + 46.0),
                fmt(ly + 4.0),
                escape(&series.label)
            ));
        }

        out.push_str("</svg>\n");
        out
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}
