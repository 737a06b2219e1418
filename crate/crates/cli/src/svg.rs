//! Log-log line plots rebuilt from CSV text alone.

use std::fmt::Write;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 190.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;
const COLORS: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf"];

/// Columns that are bookkeeping rather than curves.
const SKIP: [&str; 3] = ["fitted_c", "mass_defect", "wall_ms"];

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum PlotError {
    #[error("CSV has no header")]
    Empty,
    #[error("row {row} has {got} cells, header has {want}")]
    Ragged { row: usize, got: usize, want: usize },
    #[error("cell {cell:?} in row {row} is not a number")]
    Cell { row: usize, cell: String },
}

struct Series {
    name: String,
    points: Vec<(f64, f64)>,
}

fn parse(csv: &str) -> Result<Vec<Series>, PlotError> {
    let mut lines = csv.lines().filter(|l| !l.trim().is_empty());
    let header: Vec<&str> = lines.next().ok_or(PlotError::Empty)?.split(',').collect();
    let mut series: Vec<Series> = header[1..].iter().map(|h| Series { name: h.to_string(), points: Vec::new() }).collect();
    for (row, line) in lines.enumerate() {
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != header.len() {
            return Err(PlotError::Ragged { row, got: cells.len(), want: header.len() });
        }
        let num = |c: &str| c.parse::<f64>().map_err(|_| PlotError::Cell { row, cell: c.to_string() });
        let x = num(cells[0])?;
        for (s, c) in series.iter_mut().zip(&cells[1..]) {
            if c.is_empty() {
                continue;
            }
            let y = num(c)?;
            if x > 0.0 && y > 0.0 && y.is_finite() {
                s.points.push((x, y));
            }
        }
    }
    series.retain(|s| !SKIP.contains(&s.name.as_str()) && !s.points.is_empty());
    Ok(series)
}

fn decade_range(vals: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = vals.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    let (a, b) = (lo.log10().floor(), hi.log10().ceil());
    if a == b {
        (a, a + 1.0)
    } else {
        (a, b)
    }
}

/// Log-log SVG of every curve column against the first column.
pub fn svg_from_csv(csv: &str, title: &str) -> Result<String, PlotError> {
    let series = parse(csv)?;
    let (x0, x1) = decade_range(series.iter().flat_map(|s| s.points.iter().map(|p| p.0)));
    let (y0, y1) = decade_range(series.iter().flat_map(|s| s.points.iter().map(|p| p.1)));
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let px = |x: f64| LEFT + (x.log10() - x0) / (x1 - x0) * pw;
    let py = |y: f64| TOP + (y1 - y.log10()) / (y1 - y0) * ph;

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{:.1}" y="22" text-anchor="middle" font-size="14">{}</text>"#, LEFT + pw / 2.0, escape(title));
    // decade gridlines with minor ticks at 2..9
    for d in (x0 as i32)..=(x1 as i32) {
        let x = LEFT + (d as f64 - x0) / (x1 - x0) * pw;
        let _ = writeln!(s, r##"<line x1="{x:.2}" y1="{TOP}" x2="{x:.2}" y2="{:.2}" stroke="#bbb"/>"##, TOP + ph);
        let _ = writeln!(s, r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">1e{d}</text>"#, TOP + ph + 18.0);
        if (d as f64) < x1 {
            for k in 2..10 {
                let xm = px(10f64.powi(d) * k as f64);
                let _ = writeln!(s, r##"<line x1="{xm:.2}" y1="{TOP}" x2="{xm:.2}" y2="{:.2}" stroke="#eee"/>"##, TOP + ph);
            }
        }
    }
    for d in (y0 as i32)..=(y1 as i32) {
        let y = TOP + (y1 - d as f64) / (y1 - y0) * ph;
        let _ = writeln!(s, r##"<line x1="{LEFT}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#bbb"/>"##, LEFT + pw);
        let _ = writeln!(s, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">1e{d}</text>"#, LEFT - 6.0, y + 4.0);
    }
    let _ = writeln!(s, r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#);
    let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">n</text>"#, LEFT + pw / 2.0, HEIGHT - 10.0);

    for (i, ser) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let pts: Vec<String> = ser.points.iter().map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y))).collect();
        let _ = writeln!(s, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#, pts.join(" "));
        for &(x, y) in &ser.points {
            let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{color}"/>"#, px(x), py(y));
        }
        let ly = TOP + 10.0 + 18.0 * i as f64;
        let lx = WIDTH - RIGHT + 15.0;
        let _ = writeln!(s, r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#, lx + 20.0);
        let _ = writeln!(s, r#"<text x="{}" y="{}">{}</text>"#, lx + 26.0, ly + 4.0, escape(&ser.name));
    }
    s.push_str("</svg>\n");
    Ok(s)
}

fn escape(t: &str) -> String {
    t.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
