use std::io::Write;
use std::path::{Path, PathBuf};

/// Format with 10 significant digits, the fixture convention.
pub fn sig10(v: f64) -> String {
    if v == 0.0 {
        return "0.000000000".to_string();
    }
    if !v.is_finite() {
        return format!("{v}");
    }
    let exponent = v.abs().log10().floor() as i32;
    let decimals = (10 - 1 - exponent).max(0) as usize;
    format!("{v:.decimals$}")
}

/// Write `text` to `out` (UTF-8, LF) or stdout.
pub fn emit(text: &str, out: Option<&Path>) -> std::io::Result<()> {
    match out {
        Some(path) => {
            let mut f = std::fs::File::create(path)?;
            f.write_all(text.as_bytes())
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Manifest sidecar path for CSV runs: `<out>.manifest.json`.
pub fn manifest_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

#[cfg(test)]
mod tests {
    use super::sig10;

    #[test]
    fn sig10_examples() {
        assert_eq!(sig10(0.36787944117144233), "0.3678794412");
        assert_eq!(sig10(36191.46), "36191.46000");
        assert_eq!(sig10(2.0), "2.000000000");
    }
}
