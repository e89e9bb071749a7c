//! Artifact writers: atomic file replacement, PGM rasters, CSV fields.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::spin_mc::Raster;

/// Writes through a temporary sibling and renames it into place, so readers
/// never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp: PathBuf = dir.join(format!(".{name}.tmp-{}", std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)
}

/// Plain PGM (P2) with maxval 1: plus spins are 0 (black), minus spins 1.
pub fn pgm(raster: &Raster) -> String {
    let mut out = format!("P2\n{} {}\n1\n", raster.width, raster.height);
    for row in raster.pixels.chunks(raster.width.max(1)) {
        let line: Vec<&str> = row.iter().map(|&p| if p == 0 { "0" } else { "1" }).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

/// Parses a P2 raster written by [`pgm`].
pub fn parse_pgm(text: &str) -> Option<Raster> {
    let mut tokens = text.split_whitespace();
    if tokens.next()? != "P2" {
        return None;
    }
    let width: usize = tokens.next()?.parse().ok()?;
    let height: usize = tokens.next()?.parse().ok()?;
    if tokens.next()? != "1" {
        return None;
    }
    let pixels: Vec<u8> = tokens.map(|t| t.parse().ok()).collect::<Option<_>>()?;
    (pixels.len() == width * height).then_some(Raster { width, height, pixels })
}

/// A double with 17 significant digits, enough to round-trip exactly.
pub fn csv_float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// Quotes a CSV field when needed.
pub fn csv_text(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn pgm_layout() {
        let r = Raster { width: 3, height: 2, pixels: vec![0, 1, 0, 1, 1, 0] };
        let text = pgm(&r);
        assert_eq!(text, "P2\n3 2\n1\n0 1 0\n1 1 0\n");
        assert_eq!(parse_pgm(&text).unwrap(), r);
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = std::env::temp_dir().join(format!("wetting-io-{}", std::process::id()));
        let p = dir.join("a.txt");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(fs::read_to_string(&p).unwrap(), "two");
        let leftovers = fs::read_dir(&dir).unwrap().count();
        assert_eq!(leftovers, 1);
        fs::remove_dir_all(dir).unwrap();
    }

    #[test]
    fn csv_quoting() {
        assert_eq!(csv_text("a,b"), "\"a,b\"");
        assert_eq!(csv_text("plain"), "plain");
    }

    proptest! {
        #[test]
        fn floats_round_trip(x in any::<f64>().prop_filter("finite", |x| x.is_finite())) {
            let back: f64 = csv_float(x).parse().unwrap();
            prop_assert_eq!(back.to_bits(), x.to_bits());
        }
    }
}
