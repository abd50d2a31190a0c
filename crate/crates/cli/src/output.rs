//! CSV and JSON artifacts. Numbers are written with 17 significant digits so
//! identical runs give byte-identical files.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::CliError;

pub const CSV_HEADER: &str = "x,y,y_second_derivative";

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.display().to_string(), source }
}

pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(io_err(dir))
}

pub fn format_row(x: f64, y: f64, ypp: f64) -> String {
    format!("{x:.16e},{y:.16e},{ypp:.16e}")
}

pub fn write_curve(dir: &Path, name: &str, x: &[f64], y: &[f64], ypp: &[f64]) -> Result<PathBuf, CliError> {
    let path = dir.join(name);
    let file = fs::File::create(&path).map_err(io_err(&path))?;
    let mut w = BufWriter::new(file);
    let mut body = || -> std::io::Result<()> {
        writeln!(w, "{CSV_HEADER}")?;
        for i in 0..x.len() {
            writeln!(w, "{}", format_row(x[i], y[i], ypp[i]))?;
        }
        w.flush()
    };
    body().map_err(io_err(&path))?;
    Ok(path)
}

pub fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<PathBuf, CliError> {
    let path = dir.join(name);
    let text = serde_json::to_string_pretty(value).expect("reports serialise");
    fs::write(&path, text + "\n").map_err(io_err(&path))?;
    Ok(path)
}

pub fn write_text(dir: &Path, name: &str, text: &str) -> Result<PathBuf, CliError> {
    let path = dir.join(name);
    fs::write(&path, text).map_err(io_err(&path))?;
    Ok(path)
}
