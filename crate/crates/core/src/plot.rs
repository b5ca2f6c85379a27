//! Gnuplot-style tables derived from a run directory.
//!
//! | experiment        | table             | columns                       |
//! |-------------------|-------------------|-------------------------------|
//! | `g-curve`         | `g_curve.dat`     | `theta estimate spread count` |
//! | `geometric-limit` | `limit.dat`       | `k normalized_energy`         |
//! | `weakstar`        | `separation.dat`  | `log_n log_min_distance`      |
//! | `packing`         | `separation.dat`  | `log_n log_min_distance`      |
//!
//! Missing values are written as `nan`. A run without rows yields a table
//! holding only its header line.

use std::fs;
use std::path::{Path, PathBuf};

use crate::energy::format_real;
use crate::error::{Error, Result};
use crate::experiment::read_summary;

enum Column {
    Copy(&'static str),
    Log(&'static str),
}

/// Source CSV, target table, and `(label, column)` pairs.
type Layout = (&'static str, &'static str, Vec<(&'static str, Column)>);

fn layout(experiment: &str) -> Option<Layout> {
    use Column::*;
    match experiment {
        "g-curve" => Some((
            "g_curve.csv",
            "g_curve.dat",
            vec![
                ("theta", Copy("theta")),
                ("estimate", Copy("estimate")),
                ("spread", Copy("spread")),
                ("count", Copy("count")),
            ],
        )),
        "geometric-limit" => Some((
            "geometric_limit.csv",
            "limit.dat",
            vec![("k", Copy("k")), ("normalized_energy", Copy("normalized_energy"))],
        )),
        "weakstar" => Some((
            "weakstar.csv",
            "separation.dat",
            vec![("log_n", Log("n")), ("log_min_distance", Log("min_distance"))],
        )),
        "packing" => Some((
            "packing.csv",
            "separation.dat",
            vec![("log_n", Log("n")), ("log_min_distance", Log("min_distance"))],
        )),
        _ => None,
    }
}

/// Writes the plot table for the run in `dir` and returns the files written
/// (none for experiments without a figure).
pub fn emit_plot_data(dir: &Path) -> Result<Vec<PathBuf>> {
    let summary = read_summary(dir)?;
    let experiment = summary["experiment"]
        .as_str()
        .ok_or_else(|| Error::Usage("summary.json has no experiment field".into()))?;
    let Some((source, target, columns)) = layout(experiment) else {
        return Ok(Vec::new());
    };
    let mut reader = csv::Reader::from_path(dir.join(source))?;
    let headers = reader.headers()?.clone();
    let index: Vec<usize> = columns
        .iter()
        .map(|(_, c)| {
            let name = match c {
                Column::Copy(n) | Column::Log(n) => *n,
            };
            headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| Error::Usage(format!("{source} has no column {name:?}")))
        })
        .collect::<Result<_>>()?;

    let mut out = String::from("#");
    for (name, _) in &columns {
        out.push(' ');
        out.push_str(name);
    }
    out.push('\n');
    for record in reader.records() {
        let record = record?;
        let cells: Vec<String> = columns
            .iter()
            .zip(&index)
            .map(|((_, c), &i)| {
                let raw = record.get(i).unwrap_or("");
                match c {
                    _ if raw.is_empty() => Ok("nan".to_string()),
                    Column::Copy(_) => Ok(raw.to_string()),
                    Column::Log(_) => raw
                        .parse::<f64>()
                        .map(|v| format_real(v.ln()))
                        .map_err(|_| Error::Usage(format!("{source}: {raw:?} is not a number"))),
                }
            })
            .collect::<Result<_>>()?;
        out.push_str(&cells.join(" "));
        out.push('\n');
    }
    let path = dir.join(target);
    fs::write(&path, out)?;
    Ok(vec![path])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_run(dir: &Path, experiment: &str, csv_name: &str, csv: &str) {
        fs::write(dir.join("summary.json"), format!("{{\"experiment\":\"{experiment}\"}}")).unwrap();
        fs::write(dir.join(csv_name), csv).unwrap();
    }

    #[test]
    fn empty_run_gives_header_only() {
        let dir = tempfile::tempdir().unwrap();
        write_run(dir.path(), "geometric-limit", "geometric_limit.csv", "k,n,normalized_energy\n");
        let files = emit_plot_data(dir.path()).unwrap();
        assert_eq!(fs::read_to_string(&files[0]).unwrap(), "# k normalized_energy\n");
    }

    #[test]
    fn logs_and_missing_values() {
        let dir = tempfile::tempdir().unwrap();
        write_run(dir.path(), "packing", "packing.csv", "n,min_distance\n1,1\n4,\n");
        let files = emit_plot_data(dir.path()).unwrap();
        let text = fs::read_to_string(&files[0]).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# log_n log_min_distance");
        assert_eq!(lines[1], format!("{} {}", format_real(0.0), format_real(0.0)));
        assert!(lines[2].ends_with(" nan"));
    }

    #[test]
    fn missing_artifacts_are_file_errors() {
        let dir = tempfile::tempdir().unwrap();
        assert_eq!(emit_plot_data(dir.path()).unwrap_err().kind(), "file");
        write_run(dir.path(), "g-curve", "other.csv", "");
        assert_eq!(emit_plot_data(dir.path()).unwrap_err().kind(), "file");
        fs::write(dir.path().join("summary.json"), r#"{"experiment":"gap"}"#).unwrap();
        assert!(emit_plot_data(dir.path()).unwrap().is_empty());
    }
}
