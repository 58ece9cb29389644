//! Output directory with CSV/JSON writers and a checksum manifest.

use std::fs;
use std::path::PathBuf;

use serde_json::Value;
use sha2::{Digest, Sha256};

/// `printf("%.17g")`.
pub fn g17(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{:.16e}", x);
    let (mant, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if mant.starts_with('-') { "-" } else { "" };
    let digits: String = mant.chars().filter(char::is_ascii_digit).collect();
    let trim = |s: &str| s.trim_end_matches('0').to_string();
    if !(-4..17).contains(&exp) {
        let frac = trim(&digits[1..]);
        let dot = if frac.is_empty() { String::new() } else { format!(".{frac}") };
        let es = if exp < 0 { '-' } else { '+' };
        return format!("{sign}{}{dot}e{es}{:02}", &digits[..1], exp.abs());
    }
    if exp >= 0 {
        let cut = exp as usize + 1;
        let frac = trim(&digits[cut..]);
        let dot = if frac.is_empty() { String::new() } else { format!(".{frac}") };
        format!("{sign}{}{dot}", &digits[..cut])
    } else {
        let zeros = "0".repeat((-exp - 1) as usize);
        format!("{sign}0.{zeros}{}", trim(&digits))
    }
}

pub fn row(xs: &[f64]) -> String {
    xs.iter().map(|&x| g17(x)).collect::<Vec<_>>().join(",")
}

pub struct OutDir {
    dir: PathBuf,
    files: Vec<String>,
}

impl OutDir {
    pub fn create(dir: PathBuf) -> std::io::Result<Self> {
        fs::create_dir_all(&dir)?;
        Ok(Self { dir, files: Vec::new() })
    }

    pub fn write(&mut self, name: &str, contents: &str) -> std::io::Result<()> {
        fs::write(self.dir.join(name), contents)?;
        self.files.push(name.to_string());
        Ok(())
    }

    pub fn csv(&mut self, name: &str, header: &str, rows: impl IntoIterator<Item = String>) -> std::io::Result<()> {
        let mut s = String::from(header);
        s.push('\n');
        for r in rows {
            s.push_str(&r);
            s.push('\n');
        }
        self.write(name, &s)
    }

    pub fn json(&mut self, name: &str, v: &Value) -> std::io::Result<()> {
        let mut s = serde_json::to_string_pretty(v).expect("JSON values serialize");
        s.push('\n');
        self.write(name, &s)
    }

    /// Writes `manifest.sha256` in `sha256sum` format over every file written so far.
    pub fn finish(mut self) -> std::io::Result<()> {
        self.files.sort();
        self.files.dedup();
        let mut s = String::new();
        for f in &self.files {
            let bytes = fs::read(self.dir.join(f))?;
            s.push_str(&format!("{}  {f}\n", hex::encode(Sha256::digest(&bytes))));
        }
        fs::write(self.dir.join("manifest.sha256"), s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_printf() {
        // reference strings from C printf("%.17g")
        let cases = [
            (0.1, "0.10000000000000001"),
            (1.0, "1"),
            (-2.5, "-2.5"),
            (1e-5, "1.0000000000000001e-05"),
            (1.5e-4, "0.00014999999999999999"),
            (123456789012345678.0, "1.2345678901234568e+17"),
            (12345678901234567.0, "12345678901234568"),
            (1e16, "10000000000000000"),
            (1e100, "1e+100"),
            (1.07f64.sqrt(), "1.03440804327886"),
            (9.999999999999999e-5, "9.9999999999999991e-05"),
            (0.0, "0"),
            (-0.0, "-0"),
        ];
        for (x, want) in cases {
            assert_eq!(g17(x), want, "{x:e}");
        }
        assert_eq!(g17(f64::NAN), "nan");
        assert_eq!(row(&[1.0, 0.5]), "1,0.5");
    }
}
