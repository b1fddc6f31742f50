use std::fmt::Write as _;

use crate::cost_model::{HardwareProfile, ModelCost};

const WIDTH: f64 = 760.0;
const HEIGHT: f64 = 520.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 180.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 60.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

#[derive(Clone, Debug, PartialEq)]
pub struct RooflineSeries {
    pub profile: String,
    pub ridge: f64,
    pub peak: f64,
    pub bandwidth: f64,
}

impl RooflineSeries {
    pub fn attainable(&self, i: f64) -> f64 {
        (i * self.bandwidth).min(self.peak)
    }
}

/// A model evaluated on one profile, placed at (aggregate I, achieved ops/s).
#[derive(Clone, Debug, PartialEq)]
pub struct Marker {
    pub model: String,
    pub profile: String,
    pub intensity: f64,
    pub rate: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RooflinePlot {
    pub series: Vec<RooflineSeries>,
    pub markers: Vec<Marker>,
}

impl RooflinePlot {
    pub fn new(profiles: &[HardwareProfile]) -> Self {
        Self {
            series: profiles
                .iter()
                .map(|p| RooflineSeries {
                    profile: p.name.clone(),
                    ridge: p.ridge_point(),
                    peak: p.peak_matrix_ops,
                    bandwidth: p.mem_bandwidth_bytes,
                })
                .collect(),
            markers: Vec::new(),
        }
    }

    pub fn add_model(&mut self, cost: &ModelCost) {
        self.markers.push(Marker {
            model: cost.name.clone(),
            profile: cost.profile.clone(),
            intensity: cost.aggregate_intensity,
            rate: cost.achieved_rate(),
        });
    }

    /// Decade bounds `(x_lo, x_hi, y_lo, y_hi)` as exponents of ten.
    pub fn bounds(&self) -> (i32, i32, i32, i32) {
        let xs = self
            .series
            .iter()
            .map(|s| s.ridge)
            .chain(self.markers.iter().map(|m| m.intensity))
            .filter(|v| *v > 0.0 && v.is_finite());
        let (mut xl, mut xh) = (f64::INFINITY, f64::NEG_INFINITY);
        for x in xs {
            xl = xl.min(x);
            xh = xh.max(x);
        }
        if !xl.is_finite() {
            xl = 1.0;
            xh = 100.0;
        }
        let x_lo = xl.log10().floor() as i32 - 1;
        let x_hi = xh.log10().ceil() as i32 + 1;
        let lo_x = 10f64.powi(x_lo);
        let ys = self
            .series
            .iter()
            .flat_map(|s| [s.peak, s.attainable(lo_x)])
            .chain(self.markers.iter().map(|m| m.rate))
            .filter(|v| *v > 0.0 && v.is_finite());
        let (mut yl, mut yh) = (f64::INFINITY, f64::NEG_INFINITY);
        for y in ys {
            yl = yl.min(y);
            yh = yh.max(y);
        }
        if !yl.is_finite() {
            yl = 1.0;
            yh = 10.0;
        }
        let y_lo = yl.log10().floor() as i32;
        let mut y_hi = yh.log10().ceil() as i32;
        if y_hi == y_lo {
            y_hi += 1;
        }
        (x_lo, x_hi, y_lo, y_hi)
    }

    pub fn to_svg(&self) -> String {
        let (x_lo, x_hi, y_lo, y_hi) = self.bounds();
        let pw = WIDTH - LEFT - RIGHT;
        let ph = HEIGHT - TOP - BOTTOM;
        let px = |i: f64| LEFT + (i.log10() - x_lo as f64) / (x_hi - x_lo) as f64 * pw;
        let py = |r: f64| TOP + ph - (r.log10() - y_lo as f64) / (y_hi - y_lo) as f64 * ph;

        let mut s = String::new();
        let _ = writeln!(
            s,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">"#
        );
        let _ = writeln!(s, r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
        for e in x_lo..=x_hi {
            let x = px(10f64.powi(e));
            let _ = writeln!(
                s,
                r##"<line class="grid" x1="{x:.2}" y1="{TOP}" x2="{x:.2}" y2="{:.2}" stroke="#ddd"/>"##,
                TOP + ph
            );
            let _ = writeln!(s, r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">1e{e}</text>"#, TOP + ph + 16.0);
        }
        for e in y_lo..=y_hi {
            let y = py(10f64.powi(e));
            let _ = writeln!(
                s,
                r##"<line class="grid" x1="{LEFT}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#ddd"/>"##,
                LEFT + pw
            );
            let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">1e{e}</text>"#, LEFT - 6.0, y + 4.0);
        }
        let _ = writeln!(
            s,
            r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">operational intensity (ops/byte)</text>"#,
            LEFT + pw / 2.0,
            HEIGHT - 16.0
        );
        let _ = writeln!(
            s,
            r#"<text transform="translate(18 {:.2}) rotate(-90)" text-anchor="middle">attainable ops/s</text>"#,
            TOP + ph / 2.0
        );

        let x_min = 10f64.powi(x_lo);
        let x_max = 10f64.powi(x_hi);
        for (k, r) in self.series.iter().enumerate() {
            let color = COLORS[k % COLORS.len()];
            let mut pts = vec![(x_min, r.attainable(x_min))];
            if r.ridge > x_min && r.ridge < x_max {
                pts.push((r.ridge, r.peak));
            }
            pts.push((x_max, r.attainable(x_max)));
            let d: Vec<String> = pts.iter().map(|(i, v)| format!("{:.2},{:.2}", px(*i), py(*v))).collect();
            let _ = writeln!(
                s,
                r#"<polyline class="roofline" data-profile="{}" data-ridge="{}" fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
                esc(&r.profile),
                r.ridge,
                d.join(" ")
            );
            let ly = TOP + 14.0 + 16.0 * k as f64;
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{ly:.2}" fill="{color}">{}</text>"#,
                LEFT + pw + 10.0,
                esc(&r.profile)
            );
        }
        for m in &self.markers {
            let k = self.series.iter().position(|r| r.profile == m.profile);
            let color = k.map(|k| COLORS[k % COLORS.len()]).unwrap_or("black");
            let (cx, cy) = (px(m.intensity), py(m.rate));
            let _ = writeln!(
                s,
                r#"<circle class="marker" data-model="{}" data-profile="{}" data-intensity="{}" data-rate="{}" cx="{cx:.2}" cy="{cy:.2}" r="4" fill="{color}"/>"#,
                esc(&m.model),
                esc(&m.profile),
                m.intensity,
                m.rate
            );
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{:.2}">{}</text>"#,
                cx + 6.0,
                cy - 6.0,
                esc(&m.model)
            );
        }
        s.push_str("</svg>\n");
        s
    }
}

fn esc(t: &str) -> String {
    t.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}
