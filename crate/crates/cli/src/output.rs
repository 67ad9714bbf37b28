use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use gini_mds::DMatrix;
use serde::Serialize;

/// Writes `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> std::io::Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(std::io::Error::other)?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

pub fn prepare_dir(dir: &Path) -> std::io::Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    Ok(dir.to_path_buf())
}

pub fn coords_csv(coords: &DMatrix<f64>) -> String {
    let mut out = (1..=coords.ncols()).map(|c| format!("c{c}")).collect::<Vec<_>>().join(",");
    out.push('\n');
    for row in coords.row_iter() {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

/// 2-D (or 1-D, drawn on a line) scatter plot, one circle per row.
pub fn scatter_svg(coords: &DMatrix<f64>, labels: Option<&[usize]>) -> String {
    const SIZE: f64 = 480.0;
    const MARGIN: f64 = 24.0;
    let span = |c: usize| {
        let col = coords.column(c);
        let (lo, hi) = (col.min(), col.max());
        (lo, if hi > lo { hi - lo } else { 1.0 })
    };
    let (x0, xs) = span(0);
    let (y0, ys) = if coords.ncols() > 1 { span(1) } else { (0.0, 1.0) };
    let inner = SIZE - 2.0 * MARGIN;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{SIZE}" height="{SIZE}" viewBox="0 0 {SIZE} {SIZE}">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    for i in 0..coords.nrows() {
        let px = MARGIN + (coords[(i, 0)] - x0) / xs * inner;
        let py = if coords.ncols() > 1 {
            SIZE - MARGIN - (coords[(i, 1)] - y0) / ys * inner
        } else {
            SIZE / 2.0
        };
        let colour = labels.map_or(PALETTE[0], |y| PALETTE[y[i] % PALETTE.len()]);
        let _ = writeln!(
            svg,
            r#"<circle cx="{px:.2}" cy="{py:.2}" r="3" fill="{colour}" fill-opacity="0.8"/>"#
        );
    }
    svg.push_str("</svg>\n");
    svg
}

/// Named wall-clock phases for the manifest.
#[derive(Debug, Default)]
pub struct Timings(Vec<(String, f64)>);

impl Timings {
    pub fn time<T>(&mut self, name: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        self.0.push((name.to_string(), start.elapsed().as_secs_f64()));
        out
    }

    pub fn as_json(&self) -> serde_json::Value {
        self.0
            .iter()
            .map(|(k, v)| (format!("{k}_seconds"), serde_json::json!(v)))
            .collect::<serde_json::Map<_, _>>()
            .into()
    }
}
