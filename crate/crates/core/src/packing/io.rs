//! Packing file format:
//!
//! ```json
//! {"dim": 2, "generator": "apollonian", "balls": [{"center": [0.0, 0.0], "radius": 0.5}]}
//! ```
//!
//! Floats are written with 17 significant digits so that a save/load cycle is
//! bit-exact.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use serde::Deserialize;

use super::{BallPacking, Generator, TorusBall};
use crate::error::{Error, Result};

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FileBall {
    center: Vec<f64>,
    radius: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FilePacking {
    dim: usize,
    generator: String,
    balls: Vec<FileBall>,
}

pub(crate) fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn to_json_string(p: &BallPacking) -> String {
    let mut s = String::new();
    let _ = write!(
        s,
        "{{\n  \"dim\": {},\n  \"generator\": \"{}\",\n  \"balls\": [",
        p.dim(),
        p.generator().as_str()
    );
    for (i, b) in p.balls().iter().enumerate() {
        let center: Vec<String> = b.center.iter().map(|c| fmt_f64(*c)).collect();
        let sep = if i == 0 { "\n" } else { ",\n" };
        let _ = write!(
            s,
            "{sep}    {{\"center\": [{}], \"radius\": {}}}",
            center.join(", "),
            fmt_f64(b.radius)
        );
    }
    if !p.is_empty() {
        s.push_str("\n  ");
    }
    s.push_str("]\n}\n");
    s
}

/// Parses and validates packing JSON.
pub fn parse_packing(text: &str) -> Result<BallPacking> {
    let raw: FilePacking = serde_json::from_str(text).map_err(|e| Error::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let generator = Generator::parse(&raw.generator).ok_or_else(|| Error::Parse {
        line: 0,
        column: 0,
        message: format!("unknown generator {:?}", raw.generator),
    })?;
    let balls = raw
        .balls
        .into_iter()
        .map(|b| TorusBall {
            center: b.center,
            radius: b.radius,
        })
        .collect();
    BallPacking::from_balls(raw.dim, generator, balls)
}

pub fn load_packing(path: impl AsRef<Path>) -> Result<BallPacking> {
    parse_packing(&std::fs::read_to_string(path)?)
}

/// Writes atomically through a temporary file in the target directory.
pub fn save_packing(p: &BallPacking, path: impl AsRef<Path>) -> Result<()> {
    write_atomic(path.as_ref(), to_json_string(p).as_bytes())
}

pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

/// CSV of radii, one row per ball: index,radius,center_0,...
pub fn radii_csv(p: &BallPacking) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["index".to_string(), "radius".to_string()];
    header.extend((0..p.dim()).map(|k| format!("center_{k}")));
    w.write_record(&header)?;
    for (i, b) in p.balls().iter().enumerate() {
        let mut row = vec![i.to_string(), fmt_f64(b.radius)];
        row.extend(b.center.iter().map(|c| fmt_f64(*c)));
        w.write_record(&row)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_round_trip() {
        let p = BallPacking::empty(2, Generator::File).unwrap();
        let q = parse_packing(&to_json_string(&p)).unwrap();
        assert_eq!(p, q);
    }

    #[test]
    fn bit_exact_round_trip() {
        let balls = vec![
            TorusBall {
                center: vec![0.1, 1.0 / 3.0],
                radius: 0.1 + 0.2,
            },
            TorusBall {
                center: vec![0.7, 0.7],
                radius: std::f64::consts::PI / 100.0,
            },
        ];
        let p = BallPacking::from_balls(2, Generator::File, balls).unwrap();
        let q = parse_packing(&to_json_string(&p)).unwrap();
        assert_eq!(p, q);
    }

    #[test]
    fn parse_error_has_position() {
        let err =
            parse_packing("{\n  \"dim\": 2,\n  \"generator\": \"file\",\n  \"balls\": [oops]\n}")
                .unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 4),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn unknown_field_rejected() {
        let err = parse_packing(r#"{"dim": 2, "generator": "file", "balls": [], "extra": 1}"#)
            .unwrap_err();
        assert!(matches!(err, Error::Parse { .. }));
    }

    #[test]
    fn csv_has_header_and_rows() {
        let p = BallPacking::from_balls(
            1,
            Generator::File,
            vec![TorusBall {
                center: vec![0.0],
                radius: 0.5,
            }],
        )
        .unwrap();
        let s = radii_csv(&p).unwrap();
        assert!(s.starts_with("index,radius,center_0\n0,5.0000000000000000e-1,"));
    }
}
