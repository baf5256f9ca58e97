//! ASCII PGM heatmaps: trivially diffable, bit-exact across platforms.

use crate::{CliError, Result};

/// Renders per-cell values as an ASCII PGM string.
///
/// Header is exactly `P2\n<w> <h>\n255\n`; rows run top to bottom, one
/// per line, values space-separated. Values are min-max scaled to 0..255
/// with half-up rounding; constant fields map to 128.
pub fn pgm_string(values: &[f64], width: usize, height: usize) -> Result<String> {
    if values.len() != width * height {
        return Err(CliError::Config(format!(
            "pgm: {} values for {width}x{height}",
            values.len()
        )));
    }
    if !values.iter().all(|v| v.is_finite()) {
        return Err(CliError::Config("pgm values must be finite".into()));
    }
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let scale = |v: f64| -> u8 {
        if max > min {
            // f64::round is half-away-from-zero; nonnegative here, so half-up.
            (255.0 * (v - min) / (max - min)).round() as u8
        } else {
            128
        }
    };
    let mut out = format!("P2\n{width} {height}\n255\n");
    for y in 0..height {
        let row: Vec<String> = (0..width)
            .map(|x| scale(values[y * width + x]).to_string())
            .collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    Ok(out)
}

/// Writes a PGM file; infinite-cost cells must be replaced upstream.
pub fn write_pgm(values: &[f64], width: usize, height: usize, path: &std::path::Path) -> Result<()> {
    let text = pgm_string(values, width, height)?;
    std::fs::write(path, text)?;
    Ok(())
}
