//! Minimal line plots for result tables. The SVG is derived output only.

use std::fmt::Write;

use hardylab::table::Table;

const W: f64 = 640.0;
const H: f64 = 400.0;
const PAD: f64 = 60.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

#[derive(Debug, Clone)]
pub struct PlotSpec {
    pub x: String,
    pub y: Vec<String>,
    pub log_x: bool,
    pub log_y: bool,
}

impl PlotSpec {
    pub fn new(x: &str, y: &[&str]) -> Self {
        PlotSpec { x: x.into(), y: y.iter().map(|s| s.to_string()).collect(), log_x: false, log_y: false }
    }

    pub fn log_x(mut self) -> Self {
        self.log_x = true;
        self
    }

    pub fn log_y(mut self) -> Self {
        self.log_y = true;
        self
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn transform(v: f64, log: bool) -> Option<f64> {
    if !v.is_finite() {
        return None;
    }
    if log {
        (v > 0.0).then(|| v.log10())
    } else {
        Some(v)
    }
}

fn tick_label(v: f64, log: bool) -> String {
    if log {
        format!("1e{v:.1}")
    } else {
        format!("{v:.3e}")
    }
}

/// Scatter-and-line plot of `spec.y` columns against `spec.x`; points that are
/// non-finite or non-positive on a log axis are dropped.
pub fn render(table: &Table, spec: &PlotSpec) -> String {
    let xs: Vec<Option<f64>> = table
        .column(&spec.x)
        .map(|c| c.iter().map(|v| v.as_f64().and_then(|v| transform(v, spec.log_x))).collect())
        .unwrap_or_default();
    let series: Vec<(String, Vec<(f64, f64)>)> = spec
        .y
        .iter()
        .filter_map(|name| {
            let col = table.column(name)?;
            let pts = xs
                .iter()
                .zip(col)
                .filter_map(|(x, y)| Some(((*x)?, y.as_f64().and_then(|v| transform(v, spec.log_y))?)))
                .collect();
            Some((name.clone(), pts))
        })
        .collect();
    let all: Vec<(f64, f64)> = series.iter().flat_map(|s| s.1.iter().copied()).collect();
    let (mut x0, mut x1, mut y0, mut y1) = all.iter().fold(
        (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY),
        |(a, b, c, d), &(x, y)| (a.min(x), b.max(x), c.min(y), d.max(y)),
    );
    if all.is_empty() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 <= x0 {
        x0 -= 0.5;
        x1 += 0.5;
    }
    if y1 <= y0 {
        y0 -= 0.5;
        y1 += 0.5;
    }
    let px = |x: f64| PAD + (x - x0) / (x1 - x0) * (W - 2.0 * PAD);
    let py = |y: f64| H - PAD - (y - y0) / (y1 - y0) * (H - 2.0 * PAD);

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#);
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="24" font-family="sans-serif" font-size="15" text-anchor="middle">{}</text>"#, W / 2.0, escape(&table.name));
    let _ = writeln!(
        s,
        r#"<path d="M{PAD},{PAD} L{PAD},{b} L{r},{b}" fill="none" stroke="black"/>"#,
        b = H - PAD,
        r = W - PAD
    );
    for (v, anchor, x, y) in [
        (x0, "start", PAD, H - PAD + 18.0),
        (x1, "end", W - PAD, H - PAD + 18.0),
    ] {
        let _ = writeln!(s, r#"<text x="{x}" y="{y}" font-family="sans-serif" font-size="11" text-anchor="{anchor}">{}</text>"#, tick_label(v, spec.log_x));
    }
    for (v, y) in [(y0, H - PAD), (y1, PAD)] {
        let _ = writeln!(s, r#"<text x="{}" y="{y}" font-family="sans-serif" font-size="11" text-anchor="end">{}</text>"#, PAD - 4.0, tick_label(v, spec.log_y));
    }
    let xl = if spec.log_x { format!("log10 {}", spec.x) } else { spec.x.clone() };
    let _ = writeln!(s, r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12" text-anchor="middle">{}</text>"#, W / 2.0, H - 14.0, escape(&xl));
    for (i, (name, pts)) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        if pts.len() > 1 {
            let path: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y))).collect();
            let _ = writeln!(s, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#, path.join(" "));
        }
        for &(x, y) in pts {
            let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{color}"/>"#, px(x), py(y));
        }
        let label = if spec.log_y { format!("log10 {name}") } else { name.clone() };
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-family="sans-serif" font-size="12" fill="{color}">{}</text>"#,
            W - PAD + 4.0 - 120.0,
            PAD + 14.0 * i as f64,
            escape(&label)
        );
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use hardylab::table::Cell;

    #[test]
    fn drops_nonpositive_points_on_log_axes() {
        let mut t = Table::new("t", &["x", "y"]);
        t.push(vec![Cell::Float(1.0), Cell::Float(0.0)]);
        t.push(vec![Cell::Float(2.0), Cell::Float(3.0)]);
        let svg = render(&t, &PlotSpec::new("x", &["y"]).log_y());
        assert_eq!(svg.matches("<circle").count(), 1);
        assert!(svg.starts_with("<svg"));
    }
}
