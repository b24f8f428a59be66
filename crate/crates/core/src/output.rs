//! Curve CSV and SVG emission.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::estimators::{lr_bound, Curve, CurvePoint};
use crate::models::Copies;

pub const CSV_HEADER: [&str; 6] = ["n_copies", "q", "eta", "value", "stderr", "samples"];

#[derive(Debug, Error)]
pub enum OutputError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("nothing to write: no curve points")]
    Empty,
    #[error("curves of different kinds cannot share one chart")]
    MixedKinds,
    #[error("row {row}: {message}")]
    Parse { row: usize, message: String },
}

/// Decimal rendering with 9 significant digits, trailing zeros dropped.
pub fn format_sig9(v: f64) -> String {
    if !v.is_finite() {
        return v.to_string();
    }
    if v == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.8e}", v);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    let (sign, mantissa) = mantissa.strip_prefix('-').map_or(("", mantissa), |m| ("-", m));
    let digits: String = mantissa.chars().filter(|c| *c != '.').collect();
    let point = exp + 1;
    let mut out = String::from(sign);
    if point <= 0 {
        out.push_str("0.");
        out.extend(std::iter::repeat_n('0', (-point) as usize));
        out.push_str(&digits);
    } else if point as usize >= digits.len() {
        out.push_str(&digits);
        out.extend(std::iter::repeat_n('0', point as usize - digits.len()));
    } else {
        out.push_str(&digits[..point as usize]);
        out.push('.');
        out.push_str(&digits[point as usize..]);
    }
    if out.contains('.') {
        let trimmed = out.trim_end_matches('0').trim_end_matches('.').len();
        out.truncate(trimmed);
    }
    out
}

fn sorted(points: &[CurvePoint]) -> Vec<CurvePoint> {
    let mut rows = points.to_vec();
    rows.sort_by(|a, b| a.n_copies.cmp(&b.n_copies).then(a.q.total_cmp(&b.q)));
    rows
}

/// CSV text for `points`, rows ordered by `(n_copies, q)` with `inf` last.
pub fn curve_csv(points: &[CurvePoint]) -> Result<String, OutputError> {
    if points.is_empty() {
        return Err(OutputError::Empty);
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |source| OutputError::Csv { path: PathBuf::from("<memory>"), source };
    w.write_record(CSV_HEADER).map_err(csv_err)?;
    for p in sorted(points) {
        w.write_record([
            p.n_copies.to_string(),
            format_sig9(p.q),
            format_sig9(p.eta),
            format_sig9(p.value),
            format_sig9(p.stderr),
            p.samples.to_string(),
        ])
        .map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| csv_err(e.into_error().into()))?;
    Ok(String::from_utf8(bytes).expect("ascii"))
}

pub fn write_curve_csv(points: &[CurvePoint], path: &Path) -> Result<(), OutputError> {
    let text = curve_csv(points)?;
    fs::write(path, text).map_err(|source| OutputError::Io { path: path.to_owned(), source })
}

/// Parses CSV produced by [`curve_csv`].
pub fn parse_curve_csv(text: &str) -> Result<Vec<CurvePoint>, OutputError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let parse_err = |row, message: String| OutputError::Parse { row, message };
    let headers = reader.headers().map_err(|e| parse_err(1, e.to_string()))?;
    if headers.iter().ne(CSV_HEADER) {
        return Err(parse_err(1, format!("expected header `{}`", CSV_HEADER.join(","))));
    }
    let mut points = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let row = idx + 2;
        let record = record.map_err(|e| parse_err(row, e.to_string()))?;
        let field = |i: usize| -> Result<f64, OutputError> {
            let s = &record[i];
            s.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| parse_err(row, format!("invalid {} `{s}`", CSV_HEADER[i])))
        };
        let n_copies: Copies =
            record[0].parse().map_err(|_| parse_err(row, format!("invalid n_copies `{}`", &record[0])))?;
        let samples =
            record[5].parse::<u64>().map_err(|_| parse_err(row, format!("invalid samples `{}`", &record[5])))?;
        points.push(CurvePoint {
            n_copies,
            q: field(1)?,
            eta: field(2)?,
            value: field(3)?,
            stderr: field(4)?,
            samples,
        });
    }
    Ok(points)
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 50.0;

/// SVG chart: η on the horizontal axis, one polyline per copy count and a
/// dashed line at the local-realistic bound.
pub fn curve_svg(curves: &[Curve]) -> Result<String, OutputError> {
    let kind = curves.first().ok_or(OutputError::Empty)?.kind;
    if curves.iter().any(|c| c.kind != kind) {
        return Err(OutputError::MixedKinds);
    }
    if curves.iter().all(|c| c.points.is_empty()) {
        return Err(OutputError::Empty);
    }
    let bound = lr_bound(kind);
    let top = curves.iter().flat_map(|c| c.points.iter().map(|p| p.value)).fold(bound, f64::max) * 1.1;
    let x = |eta: f64| MARGIN + eta.clamp(0.0, 1.0) * (WIDTH - 2.0 * MARGIN);
    let y = |v: f64| HEIGHT - MARGIN - (v / top).clamp(0.0, 1.0) * (HEIGHT - 2.0 * MARGIN);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let (x0, x1, y0, y1) = (x(0.0), x(1.0), y(0.0), y(top));
    let _ = writeln!(s, r#"<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/>"#);
    let _ = writeln!(s, r#"<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black"/>"#);
    for k in 0..=10 {
        let eta = f64::from(k) / 10.0;
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" font-size="10" text-anchor="middle">{eta:.1}</text>"#,
            x(eta),
            y0 + 15.0
        );
    }
    for k in 0..=5 {
        let v = top * f64::from(k) / 5.0;
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" font-size="10" text-anchor="end">{v:.2}</text>"#,
            x0 - 5.0,
            y(v) + 3.0
        );
    }
    let label = match kind {
        crate::estimators::CurveKind::Bell => "|S|",
        crate::estimators::CurveKind::Steering => "T",
    };
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" font-size="12" text-anchor="middle">efficiency</text>"#,
        (x0 + x1) / 2.0,
        HEIGHT - 12.0
    );
    let _ = writeln!(s, r#"<text x="14" y="{:.1}" font-size="12">{label}</text>"#, y1 - 10.0);
    let _ = writeln!(
        s,
        r#"<line class="bound" x1="{x0}" y1="{yb:.2}" x2="{x1}" y2="{yb:.2}" stroke="red" stroke-dasharray="6,4"/>"#,
        yb = y(bound)
    );
    for c in curves {
        if c.points.is_empty() {
            continue;
        }
        let pts: Vec<String> = c.points.iter().map(|p| format!("{:.2},{:.2}", x(p.eta), y(p.value))).collect();
        let stroke = if c.n_copies == Copies::Infinite { "blue" } else { "black" };
        let _ = writeln!(
            s,
            r#"<polyline data-n="{}" fill="none" stroke="{stroke}" points="{}"/>"#,
            c.n_copies,
            pts.join(" ")
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

pub fn write_curve_svg(curves: &[Curve], path: &Path) -> Result<(), OutputError> {
    let text = curve_svg(curves)?;
    fs::write(path, text).map_err(|source| OutputError::Io { path: path.to_owned(), source })
}
