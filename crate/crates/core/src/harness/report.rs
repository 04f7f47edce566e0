use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::classical::{read_results, Method, ResultRow};
use crate::error::{invalid, Error, Result};
use crate::features::{check_header, csv_reader, csv_writer};

pub const CURVES_FILE: &str = "curves.csv";
pub const CURVES_HEADER: [&str; 3] = ["label", "t", "rmse"];

/// Methods using SI edge counts come first, S/I/R-only methods after the
/// double rule.
const UPPER: [Method; 3] = [Method::MlExact, Method::GbtAll, Method::CnnAll];
const LOWER: [Method; 4] = [
    Method::MlStatic,
    Method::MlDynamic,
    Method::GbtSir,
    Method::CnnSir,
];

pub fn method_label(m: Method) -> &'static str {
    match m {
        Method::MlExact => "ML, E_SI_o known",
        Method::MlStatic => "ML, E_SI_o from mean degree",
        Method::MlDynamic => "ML, E_SI_o from infected degree",
        Method::GbtAll => "GBT, all information",
        Method::GbtSir => "GBT, only SIR",
        Method::CnnAll => "CNN, all information",
        Method::CnnSir => "CNN, only SIR",
    }
}

/// A results table: one RMSE cell per (method, horizon).
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub times: Vec<f64>,
    pub rows: Vec<(Method, Vec<Option<f64>>)>,
}

impl Table {
    pub fn from_rows(rows: &[ResultRow], times: &[f64]) -> Table {
        let cell = |m: Method, t: f64| {
            rows.iter()
                .find(|r| r.method == m && (r.t - t).abs() < 1e-9)
                .and_then(|r| r.rmse)
        };
        let present = |m: &Method| rows.iter().any(|r| r.method == *m);
        let rows = UPPER
            .iter()
            .chain(&LOWER)
            .filter(|m| present(m))
            .map(|&m| (m, times.iter().map(|&t| cell(m, t)).collect()))
            .collect();
        Table {
            times: times.to_vec(),
            rows,
        }
    }
}

/// Plain-text table with one row per method and one column per horizon,
/// RMSE to four decimals and `-` for missing cells.
pub fn render_table(rows: &[ResultRow], times: &[f64]) -> String {
    let table = Table::from_rows(rows, times);
    let label_width = table
        .rows
        .iter()
        .map(|(m, _)| method_label(*m).len())
        .max()
        .unwrap_or(0)
        .max("method".len());
    let headers: Vec<String> = times.iter().map(|t| format!("t={t}")).collect();
    let widths: Vec<usize> = headers.iter().map(|h| h.len().max(6)).collect();
    let line = |label: &str, cells: Vec<String>| {
        let mut s = format!("{label:<label_width$}");
        for (c, w) in cells.iter().zip(&widths) {
            s.push_str(&format!(" | {c:>w$}"));
        }
        s.push('\n');
        s
    };
    let rule = |ch: char| {
        let mut s: String = std::iter::repeat_n(ch, label_width).collect();
        for &w in &widths {
            s.push(ch);
            s.push('+');
            s.extend(std::iter::repeat_n(ch, w + 1));
        }
        s.push('\n');
        s
    };
    let mut out = line("method", headers);
    out.push_str(&rule('-'));
    let mut upper_done = false;
    for (m, cells) in &table.rows {
        if !upper_done && LOWER.contains(m) {
            upper_done = true;
            if table.rows.iter().any(|(u, _)| UPPER.contains(u)) {
                out.push_str(&rule('='));
            }
        }
        let cells = cells
            .iter()
            .map(|c| c.map_or_else(|| "-".to_string(), |v| format!("{v:.4}")))
            .collect();
        out.push_str(&line(method_label(*m), cells));
    }
    out
}

/// Reads back a table written by [`render_table`].
pub fn parse_table(text: &str) -> Result<Table> {
    let mut lines = text.lines().filter(|l| l.contains('|'));
    let header = lines.next().ok_or_else(|| invalid("table has no header"))?;
    let times = header
        .split('|')
        .skip(1)
        .map(|h| {
            h.trim()
                .strip_prefix("t=")
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| invalid(format!("bad column header {h:?}")))
        })
        .collect::<Result<Vec<f64>>>()?;
    let mut rows = Vec::new();
    for l in lines {
        let mut cells = l.split('|').map(str::trim);
        let label = cells.next().unwrap_or("");
        if label.chars().all(|c| c == '-' || c == '=') {
            continue;
        }
        let method = Method::ALL
            .into_iter()
            .find(|m| method_label(*m) == label)
            .ok_or_else(|| invalid(format!("unknown table row {label:?}")))?;
        let values = cells
            .map(|c| match c {
                "-" => Ok(None),
                v => v
                    .parse()
                    .map(Some)
                    .map_err(|_| invalid(format!("bad table cell {v:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        if values.len() != times.len() {
            return Err(invalid(format!("row {label:?} has {} cells", values.len())));
        }
        rows.push((method, values));
    }
    Ok(Table { times, rows })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurvePoint {
    pub label: String,
    pub t: f64,
    pub rmse: f64,
}

/// Collects RMSE curves from results files into `out_dir/curves.csv`.
/// Each curve is labeled `<experiment>:<method>`, the experiment being the
/// name of the directory holding the results file. Undefined cells are
/// dropped.
pub fn emit_plot_series(results: &[PathBuf], out_dir: &Path) -> Result<Vec<CurvePoint>> {
    let mut points = Vec::new();
    for path in results {
        let experiment = path.parent().and_then(Path::file_name).map_or_else(
            || "results".to_string(),
            |s| s.to_string_lossy().into_owned(),
        );
        let mut rows = read_results(path)?;
        rows.sort_by(|a, b| a.method.cmp(&b.method).then(a.t.total_cmp(&b.t)));
        for r in rows {
            if let Some(rmse) = r.rmse {
                points.push(CurvePoint {
                    label: format!("{experiment}:{}", r.method),
                    t: r.t,
                    rmse,
                });
            }
        }
    }
    let path = out_dir.join(CURVES_FILE);
    let mut w = csv_writer(&path)?;
    w.write_record(CURVES_HEADER)
        .map_err(|e| Error::csv(&path, e))?;
    for p in &points {
        w.write_record([p.label.clone(), p.t.to_string(), p.rmse.to_string()])
            .map_err(|e| Error::csv(&path, e))?;
    }
    w.flush().map_err(|e| Error::io(&path, e))?;
    Ok(points)
}

pub fn read_curves(path: &Path) -> Result<Vec<CurvePoint>> {
    let mut reader = csv_reader(path)?;
    check_header(&mut reader, path, &CURVES_HEADER)?;
    let mut out = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::csv(path, e))?;
        let bad = || Error::parse(path, i + 2, "invalid curve row");
        if record.len() != CURVES_HEADER.len() {
            return Err(bad());
        }
        out.push(CurvePoint {
            label: record[0].to_string(),
            t: record[1].parse().map_err(|_| bad())?,
            rmse: record[2].parse().map_err(|_| bad())?,
        });
    }
    Ok(out)
}

/// Distinct curve labels in order of first appearance.
pub fn curve_labels(points: &[CurvePoint]) -> Vec<String> {
    let mut seen = BTreeMap::new();
    for p in points {
        let k = seen.len();
        seen.entry(p.label.clone()).or_insert(k);
    }
    let mut labels: Vec<(usize, String)> = seen.into_iter().map(|(l, k)| (k, l)).collect();
    labels.sort();
    labels.into_iter().map(|(_, l)| l).collect()
}
