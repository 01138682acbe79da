//! CSV and JSON writers with stable formatting.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;
use topt_core::assemble::Trajectory;

use crate::CliError;

pub const CSV_HEADER: &str = "t,rx,ry,rz,vx,vy,vz,ux,uy,uz,u_norm,H,segment";

/// `x` rounded to 12 significant digits, written positionally for
/// magnitudes in `[1e-5, 1e12)` and in exponent form otherwise.
pub fn fmt12(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.11e}");
    let exp: i32 = sci.rsplit('e').next().and_then(|e| e.parse().ok()).unwrap_or(0);
    if (-5..12).contains(&exp) {
        let s = format!("{x:.*}", (11 - exp) as usize);
        if s.trim_start_matches(['-', '0', '.']).is_empty() {
            return "0".into();
        }
        s
    } else {
        sci
    }
}

/// One CSV row per sample. `hamiltonian` holds one value per sample; when
/// absent the column is `nan`.
pub fn trajectory_csv(traj: &Trajectory, hamiltonian: Option<&[f64]>) -> String {
    let mut out = String::with_capacity(160 * (traj.samples.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for (k, s) in traj.samples.iter().enumerate() {
        let h = hamiltonian.map_or(f64::NAN, |h| h[k]);
        let fields = [s.t, s.r.x, s.r.y, s.r.z, s.v.x, s.v.y, s.v.z, s.u.x, s.u.y, s.u.z, s.u.norm(), h];
        for f in fields {
            out.push_str(&fmt12(f));
            out.push(',');
        }
        let _ = writeln!(out, "{}", s.segment);
    }
    out
}

pub fn write_text(dir: &Path, name: &str, text: &str) -> Result<(), CliError> {
    let path = dir.join(name);
    fs::write(&path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

pub fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
    text.push('\n');
    write_text(dir, name, &text)
}

#[cfg(test)]
mod tests {
    use super::fmt12;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(fmt12(2.0), "2.00000000000");
        assert_eq!(fmt12(-1.0 / 3.0), "-0.333333333333");
        assert_eq!(fmt12(123456.789), "123456.789000");
        assert_eq!(fmt12(9.9999999999999), "10.0000000000");
        assert_eq!(fmt12(1.5e-7), "1.50000000000e-7");
        assert_eq!(fmt12(-0.0), "0");
        assert_eq!(fmt12(f64::NAN), "nan");
    }
}
