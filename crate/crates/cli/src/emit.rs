//! Result tables and plots, and their CSV / JSON / SVG renderings.

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use crate::CliError;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(v) => fmt_sig(*v),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }

    fn to_json(&self) -> Value {
        match self {
            Cell::Num(v) => match fmt_sig(*v).parse::<f64>() {
                Ok(r) if r.is_finite() => json!(r),
                _ => Value::Null,
            },
            Cell::Int(v) => json!(v),
            Cell::Text(s) => json!(s),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub name: String,
    pub unit: String,
}

impl Column {
    pub fn new(name: impl Into<String>, unit: impl Into<String>) -> Self {
        Column {
            name: name.into(),
            unit: unit.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<Column>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: impl Into<String>, columns: Vec<Column>) -> Self {
        Table {
            name: name.into(),
            columns,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Plot {
    pub name: String,
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ResultBundle {
    pub tables: Vec<Table>,
    pub plots: Vec<Plot>,
    /// Human-readable findings, printed to stderr.
    pub summary: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
    Svg,
}

/// Nine significant digits, shortest form.
pub fn fmt_sig(v: f64) -> String {
    if v.is_nan() {
        return "NaN".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    let sci = format!("{v:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..9).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        let fixed = format!("{v:.decimals$}");
        let fixed = if fixed.contains('.') {
            fixed.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            fixed
        };
        if fixed == "-0" {
            "0".into()
        } else {
            fixed
        }
    } else {
        let m = if mantissa.contains('.') {
            mantissa.trim_end_matches('0').trim_end_matches('.')
        } else {
            mantissa
        };
        format!("{m}e{exp}")
    }
}

pub fn write_csv(table: &Table, out: impl Write) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(table.columns.iter().map(|c| c.name.as_str()))?;
    for row in &table.rows {
        w.write_record(row.iter().map(Cell::render))?;
    }
    w.flush()?;
    Ok(())
}

pub fn table_json(table: &Table) -> Value {
    json!({
        "name": table.name,
        "columns": table.columns.iter().map(|c| json!({"name": c.name, "unit": c.unit})).collect::<Vec<_>>(),
        "rows": table.rows.iter().map(|r| r.iter().map(Cell::to_json).collect::<Vec<_>>()).collect::<Vec<_>>(),
    })
}

pub fn write_json(table: &Table, mut out: impl Write) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(&table_json(table)).expect("json value serializes");
    out.write_all(text.as_bytes())?;
    out.write_all(b"\n")?;
    Ok(())
}

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 160.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 60.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Round tick values covering `[lo, hi]`.
fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let span = hi - lo;
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| span / s <= 6.0).unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|k| k as f64 * step).collect()
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !lo.is_finite() {
        return (-1.0, 1.0);
    }
    if hi - lo <= 1e-12 * lo.abs().max(hi.abs()).max(1e-300) {
        let pad = if lo == 0.0 { 1.0 } else { lo.abs() * 0.1 };
        return (lo - pad, hi + pad);
    }
    (lo, hi)
}

pub fn render_svg(plot: &Plot) -> String {
    let (x0, x1) = bounds(plot.series.iter().flat_map(|s| s.points.iter().map(|p| p.0)));
    let (y0, y1) = bounds(plot.series.iter().flat_map(|s| s.points.iter().map(|p| p.1)));
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let sx = |x: f64| LEFT + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| TOP + (y1 - y) / (y1 - y0) * ph;

    let mut s = String::new();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    )
    .unwrap();
    writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#).unwrap();
    writeln!(s, r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#, LEFT + pw / 2.0, escape(&plot.title)).unwrap();
    writeln!(s, r#"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#).unwrap();
    for t in ticks(x0, x1) {
        let x = sx(t);
        writeln!(
            s,
            r#"<line x1="{x:.2}" y1="{b}" x2="{x:.2}" y2="{b2}" stroke="black"/><text x="{x:.2}" y="{ty}" text-anchor="middle">{}</text>"#,
            fmt_sig(t),
            b = TOP + ph,
            b2 = TOP + ph + 5.0,
            ty = TOP + ph + 18.0
        )
        .unwrap();
    }
    for t in ticks(y0, y1) {
        let y = sy(t);
        writeln!(
            s,
            r#"<line x1="{l2}" y1="{y:.2}" x2="{LEFT}" y2="{y:.2}" stroke="black"/><text x="{tx}" y="{ty:.2}" text-anchor="end">{}</text>"#,
            fmt_sig(t),
            l2 = LEFT - 5.0,
            tx = LEFT - 8.0,
            ty = y + 4.0
        )
        .unwrap();
    }
    writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        LEFT + pw / 2.0,
        HEIGHT - 15.0,
        escape(&plot.x_label)
    )
    .unwrap();
    writeln!(
        s,
        r#"<text x="18" y="{y}" text-anchor="middle" transform="rotate(-90 18 {y})">{}</text>"#,
        escape(&plot.y_label),
        y = TOP + ph / 2.0
    )
    .unwrap();
    for (i, series) in plot.series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let pts: Vec<String> = series
            .points
            .iter()
            .filter(|p| p.0.is_finite() && p.1.is_finite())
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        writeln!(
            s,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.2" points="{}"><title>{}</title></polyline>"#,
            pts.join(" "),
            escape(&series.label)
        )
        .unwrap();
        let ly = TOP + 10.0 + 18.0 * i as f64;
        let lx = LEFT + pw + 12.0;
        writeln!(
            s,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{}" y="{}">{}</text>"#,
            lx + 20.0,
            lx + 26.0,
            ly + 4.0,
            escape(&series.label)
        )
        .unwrap();
    }
    s.push_str("</svg>\n");
    s
}

/// Writes the bundle to `dir` (one file per table or plot) or, without a
/// directory, to `stdout`. Returns the files written.
pub fn emit(bundle: &ResultBundle, format: Format, dir: Option<&Path>, stdout: &mut dyn Write) -> Result<Vec<PathBuf>, CliError> {
    let mut written = Vec::new();
    match dir {
        Some(dir) => {
            std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
            let open = |name: &str, ext: &str| -> Result<(PathBuf, std::fs::File), CliError> {
                let path = dir.join(format!("{name}.{ext}"));
                let f = std::fs::File::create(&path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
                Ok((path, f))
            };
            match format {
                Format::Csv | Format::Json => {
                    for t in &bundle.tables {
                        let ext = if format == Format::Csv { "csv" } else { "json" };
                        let (path, f) = open(&t.name, ext)?;
                        let f = std::io::BufWriter::new(f);
                        if format == Format::Csv {
                            write_csv(t, f)?;
                        } else {
                            write_json(t, f)?;
                        }
                        written.push(path);
                    }
                }
                Format::Svg => {
                    if bundle.plots.is_empty() {
                        return Err(CliError::Usage("this command produces no plots; use --format csv or json".into()));
                    }
                    for p in &bundle.plots {
                        let (path, mut f) = open(&p.name, "svg")?;
                        f.write_all(render_svg(p).as_bytes())?;
                        written.push(path);
                    }
                }
            }
        }
        None => match format {
            Format::Csv => {
                for (i, t) in bundle.tables.iter().enumerate() {
                    if i > 0 {
                        writeln!(stdout)?;
                    }
                    writeln!(stdout, "# {}", t.name)?;
                    write_csv(t, &mut *stdout)?;
                }
            }
            Format::Json => {
                let all = Value::Array(bundle.tables.iter().map(table_json).collect());
                writeln!(stdout, "{}", serde_json::to_string_pretty(&all).expect("json value serializes"))?;
            }
            Format::Svg => {
                let p = bundle
                    .plots
                    .first()
                    .ok_or_else(|| CliError::Usage("this command produces no plots; use --format csv or json".into()))?;
                stdout.write_all(render_svg(p).as_bytes())?;
            }
        },
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn significant_digits() {
        assert_eq!(fmt_sig(2.1650635094610966), "2.16506351");
        assert_eq!(fmt_sig(0.0), "0");
        assert_eq!(fmt_sig(-0.0), "0");
        assert_eq!(fmt_sig(1.0), "1");
        assert_eq!(fmt_sig(-12.5), "-12.5");
        assert_eq!(fmt_sig(1e-7), "1e-7");
        assert_eq!(fmt_sig(1.23456789012e12), "1.23456789e12");
        assert_eq!(fmt_sig(0.000123), "0.000123");
        assert_eq!(fmt_sig(123456789.4), "123456789");
    }

    #[test]
    fn empty_table_is_header_only() {
        let t = Table::new("sweep", vec![Column::new("value", "1"), Column::new("im_per_s", "1/s")]);
        let mut buf = Vec::new();
        write_csv(&t, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "value,im_per_s\n");
    }

    #[test]
    fn tick_values_are_round() {
        assert_eq!(ticks(0.0, 50.0), vec![0.0, 10.0, 20.0, 30.0, 40.0, 50.0]);
        assert!(ticks(-0.013, 0.021).iter().all(|t| (t * 200.0).fract().abs() < 1e-9));
    }
}
