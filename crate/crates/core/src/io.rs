//! Spectrum tables and JSON sidecars.
//!
//! Tables are CSV with the header [`CSV_HEADER`] and every value written as
//! `{:.16e}` (17 significant digits, exact round trip for `f64`).

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{DetuningGrid, Spectrum, SpectrumMeta, SpectrumPoint};

pub const CSV_HEADER: &str = "delta_mhz,re_amp,im_amp,intensity";

pub fn format_spectrum_csv(spectrum: &Spectrum) -> String {
    let mut out = String::with_capacity(80 * (spectrum.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for p in &spectrum.points {
        writeln!(
            out,
            "{:.16e},{:.16e},{:.16e},{:.16e}",
            p.delta, p.amplitude.re, p.amplitude.im, p.intensity
        )
        .expect("writing to a String cannot fail");
    }
    out
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| Error::param("out", format!("cannot write {}: {e}", path.display())))
}

pub fn write_spectrum_csv(spectrum: &Spectrum, path: &Path) -> Result<()> {
    write_file(path, &format_spectrum_csv(spectrum))
}

/// Parses a spectrum table. Needs `delta_mhz` and `intensity` columns;
/// `re_amp`/`im_amp` are used when present.
pub fn parse_spectrum_csv(text: &str) -> Result<Spectrum> {
    let bad = |reason: String| Error::param("data", reason);
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header: Vec<&str> = lines
        .next()
        .ok_or_else(|| bad("empty spectrum table".into()))?
        .split(',')
        .map(str::trim)
        .collect();
    let column = |name: &str| header.iter().position(|h| *h == name);
    let delta_col = column("delta_mhz").ok_or_else(|| bad("missing `delta_mhz` column".into()))?;
    let intensity_col = column("intensity").ok_or_else(|| bad("missing `intensity` column".into()))?;
    let amp_cols = column("re_amp").zip(column("im_amp"));

    let mut deltas = Vec::new();
    let mut rows = Vec::new();
    for (n, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != header.len() {
            return Err(bad(format!(
                "row {} has {} fields, header has {}",
                n + 1,
                fields.len(),
                header.len()
            )));
        }
        let num = |i: usize| {
            fields[i]
                .parse::<f64>()
                .map_err(|e| bad(format!("row {}: cannot parse `{}`: {e}", n + 1, fields[i])))
        };
        let delta = num(delta_col)?;
        let intensity = num(intensity_col)?;
        let amplitude = match amp_cols {
            Some((re, im)) => Complex64::new(num(re)?, num(im)?),
            None => Complex64::new(intensity.max(0.0).sqrt(), 0.0),
        };
        deltas.push(delta);
        rows.push(SpectrumPoint {
            delta,
            amplitude,
            intensity,
        });
    }
    DetuningGrid::new(deltas)?;
    Ok(Spectrum {
        points: rows,
        meta: SpectrumMeta::stationary(Default::default()),
    })
}

pub fn read_spectrum_csv(path: &Path) -> Result<Spectrum> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::param("data", format!("cannot read {}: {e}", path.display())))?;
    parse_spectrum_csv(&text)
}

/// `<out>.meta.json`.
pub fn sidecar_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".meta.json");
    PathBuf::from(name)
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("output types serialise to JSON");
    s.push('\n');
    s
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    write_file(path, &to_json(value))
}
