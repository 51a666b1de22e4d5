use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

use super::run::ExperimentResult;

pub const CSV_HEADER: &str = "snr_db,scheme,rate_mean,rate_ci,distortion_mean,rel_complexity,excluded,bits";

/// `x` rounded to 9 significant digits, in plain decimal notation where
/// that stays short and scientific notation otherwise.
pub fn format_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{x:.8e}");
    let exp: i32 = sci[sci.find('e').expect("exponent") + 1..].parse().expect("integer exponent");
    if !(-5..15).contains(&exp) {
        return sci;
    }
    let decimals = (8 - exp).max(0) as usize;
    let mut s = format!("{x:.decimals$}");
    if s.contains('.') {
        s.truncate(s.trim_end_matches('0').trim_end_matches('.').len());
    }
    s
}

pub fn render_csv(result: &ExperimentResult) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in &result.rows {
        let fields = [
            format_sig(r.snr_db),
            r.scheme.clone(),
            format_sig(r.rate_mean),
            format_sig(r.rate_ci),
            format_sig(r.distortion_mean),
            format_sig(r.rel_complexity),
            r.excluded.to_string(),
            format_sig(r.bits),
        ];
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

pub fn emit_csv(result: &ExperimentResult, path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, render_csv(result)).map_err(|e| Error::io(path, e))
}
