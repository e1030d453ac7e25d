//! Dataset and result files. CSV cells use 17-significant-digit scientific
//! notation so reruns are byte-identical.

use std::fmt::Write as _;
use std::path::Path;

use frechet::estimators::SampleSet;
use frechet::geometry::{ManifoldKind, ManifoldSpec, Point};

use crate::CliError;

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::io(format!("creating {}: {e}", dir.display())))?;
    }
    std::fs::write(path, contents)
        .map_err(|e| CliError::io(format!("writing {}: {e}", path.display())))
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::io(format!("serializing {}: {e}", path.display())))?;
    write_file(path, &(text + "\n"))
}

/// Dataset CSV: `x,ambient_1..3,chart_1,chart_2` on surfaces,
/// `x,ambient_1..dim` in Euclidean space.
pub fn dataset_csv(data: &SampleSet) -> Result<String, CliError> {
    let space = data.space();
    let mut out = String::new();
    match space.kind() {
        ManifoldKind::Euclidean { dim } => {
            out.push('x');
            for j in 1..=dim {
                let _ = write!(out, ",ambient_{j}");
            }
            out.push('\n');
            for (x, y) in data.xs().iter().zip(data.ys()) {
                out.push_str(&fmt_f64(*x));
                for v in y.as_euclid().map_err(CliError::from)? {
                    out.push(',');
                    out.push_str(&fmt_f64(*v));
                }
                out.push('\n');
            }
        }
        _ => {
            out.push_str("x,ambient_1,ambient_2,ambient_3,chart_1,chart_2\n");
            for (x, y) in data.xs().iter().zip(data.ys()) {
                let c = y.as_chart().map_err(CliError::from)?;
                let amb = space.chart_to_ambient(c).map_err(CliError::from)?;
                let _ = write!(
                    out,
                    "{},{},{},{},{},{}\n",
                    fmt_f64(*x),
                    fmt_f64(amb[0]),
                    fmt_f64(amb[1]),
                    fmt_f64(amb[2]),
                    fmt_f64(c.u),
                    fmt_f64(c.v)
                );
            }
        }
    }
    Ok(out)
}

/// Reads a dataset CSV back and validates it against the declared manifold.
pub fn read_dataset(path: &Path, space: &ManifoldSpec) -> Result<SampleSet, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::io(format!("reading dataset {}: {e}", path.display())))?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| CliError::config(format!("dataset {}: empty file", path.display())))?;
    let cols: Vec<&str> = header.split(',').collect();
    let euclid = matches!(space.kind(), ManifoldKind::Euclidean { .. });
    let expected = if euclid {
        match space.kind() {
            ManifoldKind::Euclidean { dim } => 1 + dim,
            _ => unreachable!(),
        }
    } else {
        6
    };
    if cols.len() != expected || cols[0] != "x" {
        return Err(CliError::config(format!(
            "dataset {}: unexpected header {header:?} for manifold {:?}",
            path.display(),
            space.kind()
        )));
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<f64> = line
            .split(',')
            .map(|f| f.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| {
                CliError::config(format!(
                    "dataset {} line {}: {e}",
                    path.display(),
                    lineno + 2
                ))
            })?;
        if fields.len() != expected {
            return Err(CliError::config(format!(
                "dataset {} line {}: expected {expected} fields, got {}",
                path.display(),
                lineno + 2,
                fields.len()
            )));
        }
        xs.push(fields[0]);
        if euclid {
            ys.push(Point::Euclid(fields[1..].to_vec()));
        } else {
            // chart columns are authoritative; the ambient columns must
            // agree with the declared manifold
            let amb = [fields[1], fields[2], fields[3]];
            let chart = space
                .ambient_to_chart(amb)
                .map_err(|e| CliError::config(format!(
                    "dataset {} line {}: point not on the declared manifold: {e}",
                    path.display(),
                    lineno + 2
                )))?;
            let declared = frechet::geometry::ChartPoint::new(fields[4], fields[5]);
            let da = space.chart_to_ambient(declared).map_err(CliError::from)?;
            let dist = ((da[0] - amb[0]).powi(2)
                + (da[1] - amb[1]).powi(2)
                + (da[2] - amb[2]).powi(2))
            .sqrt();
            if dist > 1e-6 {
                return Err(CliError::config(format!(
                    "dataset {} line {}: chart and ambient columns disagree by {dist:.2e}",
                    path.display(),
                    lineno + 2
                )));
            }
            let _ = chart;
            ys.push(Point::Chart(declared));
        }
    }
    if xs.is_empty() {
        return Err(CliError::config(format!(
            "dataset {}: no data rows",
            path.display()
        )));
    }
    SampleSet::new(xs, ys, space.clone()).map_err(CliError::from)
}
