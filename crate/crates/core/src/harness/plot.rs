use crate::diagnostics::{CurvePoint, R_HAT_THRESHOLD};
use crate::error::{Error, Result};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

/// Median `r_hat` curve of one method.
#[derive(Clone, Debug, PartialEq)]
pub struct PlotSeries {
    pub label: String,
    pub points: Vec<CurvePoint>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PlotAxis {
    Samples,
    WallTime,
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 64.0;
const RIGHT: f64 = 120.0;
const TOP: f64 = 28.0;
const BOTTOM: f64 = 52.0;
/// Values above this are clipped so one exploding chain does not flatten the plot.
const Y_CLIP: f64 = 4.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

fn x_of(p: &CurvePoint, axis: PlotAxis) -> f64 {
    match axis {
        PlotAxis::Samples => p.samples as f64,
        PlotAxis::WallTime => p.wall_time_s,
    }
}

fn y_of(p: &CurvePoint) -> f64 {
    if p.median_r_hat.is_nan() {
        Y_CLIP
    } else {
        p.median_r_hat.min(Y_CLIP)
    }
}

fn nice_ticks(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let span = (hi - lo).max(1e-12);
    let raw = span / n as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| span / s <= n as f64)
        .unwrap_or(10.0 * mag);
    let mut t = (lo / step).ceil() * step;
    let mut out = Vec::new();
    while t <= hi + 1e-9 * span {
        out.push(t);
        t += step;
    }
    out
}

fn fmt_tick(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e5 || v.abs() < 1e-2) {
        format!("{v:.1e}")
    } else {
        let s = format!("{v:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

/// Line chart of median `r_hat` against `axis`, with a dashed line at the
/// convergence threshold. Empty input renders axes only.
pub fn render_svg(series: &[PlotSeries], axis: PlotAxis) -> String {
    let pts = series.iter().flat_map(|s| s.points.iter());
    let (mut x0, mut x1) = (0.0f64, 1.0f64);
    let mut y1 = 1.5f64;
    for p in pts {
        x1 = x1.max(x_of(p, axis));
        y1 = y1.max(y_of(p));
    }
    let mut y0 = 0.9f64;
    for p in series.iter().flat_map(|s| s.points.iter()) {
        y0 = y0.min(y_of(p));
    }
    if x1 <= x0 {
        x0 = 0.0;
        x1 = 1.0;
    }
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| TOP + (1.0 - (y - y0) / (y1 - y0)) * ph;
    let xlabel = match axis {
        PlotAxis::Samples => "samples per chain",
        PlotAxis::WallTime => "wall time (s)",
    };

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<g id="axes" stroke="black"><line x1="{LEFT}" y1="{b}" x2="{r}" y2="{b}"/><line x1="{LEFT}" y1="{TOP}" x2="{LEFT}" y2="{b}"/></g>"#,
        b = TOP + ph,
        r = LEFT + pw
    );
    for t in nice_ticks(x0, x1, 6) {
        let x = sx(t);
        let _ = writeln!(
            s,
            r#"<line x1="{x:.2}" y1="{b}" x2="{x:.2}" y2="{b5}" stroke="black"/><text x="{x:.2}" y="{b18}" text-anchor="middle">{}</text>"#,
            fmt_tick(t),
            b = TOP + ph,
            b5 = TOP + ph + 5.0,
            b18 = TOP + ph + 18.0
        );
    }
    for t in nice_ticks(y0, y1, 6) {
        let y = sy(t);
        let _ = writeln!(
            s,
            r#"<line x1="{l5}" y1="{y:.2}" x2="{LEFT}" y2="{y:.2}" stroke="black"/><text x="{l8}" y="{y4:.2}" text-anchor="end">{}</text>"#,
            fmt_tick(t),
            l5 = LEFT - 5.0,
            l8 = LEFT - 8.0,
            y4 = y + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{cx}" y="{by}" text-anchor="middle">{xlabel}</text><text transform="translate(16 {cy}) rotate(-90)" text-anchor="middle">median R-hat</text>"#,
        cx = LEFT + pw / 2.0,
        by = HEIGHT - 10.0,
        cy = TOP + ph / 2.0
    );
    let ty = sy(R_HAT_THRESHOLD);
    let _ = writeln!(
        s,
        r#"<line id="threshold" x1="{LEFT}" y1="{ty:.2}" x2="{r}" y2="{ty:.2}" stroke="gray" stroke-dasharray="6 4" data-y="{R_HAT_THRESHOLD}"/>"#,
        r = LEFT + pw
    );
    for (i, ser) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let path: Vec<String> = ser
            .points
            .iter()
            .map(|p| format!("{:.2},{:.2}", sx(x_of(p, axis)), sy(y_of(p))))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            path.join(" ")
        );
        let ly = TOP + 14.0 + 16.0 * i as f64;
        let lx = LEFT + pw + 12.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx}" y1="{ly}" x2="{lx2}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{lx3}" y="{ly4}">{}</text>"#,
            xml_escape(&ser.label),
            lx2 = lx + 18.0,
            lx3 = lx + 24.0,
            ly4 = ly + 4.0
        );
    }
    s.push_str("</svg>\n");
    s
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Long-format plot data: `method,samples,wall_time_s,median_r_hat`.
pub fn write_plot_csv<W: Write>(series: &[PlotSeries], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["method", "samples", "wall_time_s", "median_r_hat"])?;
    for ser in series {
        for p in &ser.points {
            w.write_record([
                ser.label.clone(),
                p.samples.to_string(),
                p.wall_time_s.to_string(),
                p.median_r_hat.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Inverse of [`write_plot_csv`]; series keep their first-seen order.
pub fn read_plot_csv<R: Read>(input: R) -> Result<Vec<PlotSeries>> {
    let mut r = csv::Reader::from_reader(input);
    let mut order: Vec<String> = Vec::new();
    let mut by_label: BTreeMap<String, Vec<CurvePoint>> = BTreeMap::new();
    for rec in r.records() {
        let rec = rec?;
        let field = |i: usize| rec.get(i).ok_or_else(|| Error::config("short plot-data row"));
        let label = field(0)?.to_string();
        let parse = |i: usize| -> Result<f64> {
            field(i)?
                .parse::<f64>()
                .map_err(|_| Error::config(format!("bad number in plot-data column {i}")))
        };
        let point = CurvePoint {
            samples: parse(1)? as usize,
            wall_time_s: parse(2)?,
            median_r_hat: parse(3)?,
        };
        if !by_label.contains_key(&label) {
            order.push(label.clone());
        }
        by_label.entry(label).or_default().push(point);
    }
    Ok(order
        .into_iter()
        .map(|label| PlotSeries {
            points: by_label.remove(&label).unwrap_or_default(),
            label,
        })
        .collect())
}

/// Write `convergence_samples.svg`, `convergence_time.svg` and
/// `convergence_plot.csv` into `dir`.
pub fn emit_plots(series: &[PlotSeries], dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(
        dir.join("convergence_samples.svg"),
        render_svg(series, PlotAxis::Samples),
    )?;
    std::fs::write(dir.join("convergence_time.svg"), render_svg(series, PlotAxis::WallTime))?;
    write_plot_csv(series, File::create(dir.join("convergence_plot.csv"))?)?;
    Ok(())
}
