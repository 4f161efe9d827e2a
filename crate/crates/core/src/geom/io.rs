//! Cloud and sidecar file I/O.
//!
//! Formats:
//! - `xyz`: one point per line, `x y z` whitespace-separated decimals.
//! - `xyzn`: `x y z nx ny nz`.
//! - `ply-ascii`: ASCII PLY with at least x, y, z float vertex properties
//!   (nx, ny, nz are picked up when present).
//! - label sidecar: same basename with extension `.labels`, one `{0,1}` per
//!   line; loaded automatically when the file exists.
//! - score sidecar: extension `.scores`, one decimal per line with at least
//!   nine significant digits.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::geom::cloud::LabeledCloud;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CloudFormat {
    Xyz,
    Xyzn,
    PlyAscii,
}

impl CloudFormat {
    /// Infer the format from a file extension (`.xyz`, `.xyzn`, `.ply`).
    pub fn from_path(path: &Path) -> Result<CloudFormat> {
        match path.extension().and_then(|e| e.to_str()) {
            Some("xyz") => Ok(CloudFormat::Xyz),
            Some("xyzn") => Ok(CloudFormat::Xyzn),
            Some("ply") => Ok(CloudFormat::PlyAscii),
            other => Err(Error::InvalidArgument(format!(
                "cannot infer cloud format from extension {other:?} of {}",
                path.display()
            ))),
        }
    }
}

fn sidecar_path(path: &Path, ext: &str) -> PathBuf {
    path.with_extension(ext)
}

fn parse_float(tok: &str, path: &Path, line_no: usize) -> Result<f64> {
    let v: f64 = tok
        .parse()
        .map_err(|_| Error::parse(path, line_no, format!("bad number {tok:?}")))?;
    if !v.is_finite() {
        return Err(Error::parse(path, line_no, format!("non-finite value {tok}")));
    }
    Ok(v)
}

/// Load a cloud in the declared format; the `.labels` sidecar is loaded
/// when present. The sample id is the file stem.
pub fn load_cloud(path: &Path, format: CloudFormat) -> Result<LabeledCloud> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(file);
    let sample_id = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("sample")
        .to_string();

    let (points, normals) = match format {
        CloudFormat::Xyz => parse_columns(reader, path, 3)?,
        CloudFormat::Xyzn => parse_columns(reader, path, 6)?,
        CloudFormat::PlyAscii => parse_ply_ascii(reader, path)?,
    };

    let mut cloud = LabeledCloud {
        points,
        normals,
        labels: None,
        sample_id,
    };

    let labels_path = sidecar_path(path, "labels");
    if labels_path.exists() {
        cloud.labels = Some(load_labels(&labels_path, cloud.len())?);
    }
    cloud.validate()?;
    Ok(cloud)
}

fn parse_columns<R: BufRead>(
    reader: R,
    path: &Path,
    cols: usize,
) -> Result<(Vec<[f64; 3]>, Option<Vec<[f64; 3]>>)> {
    let mut points = Vec::new();
    let mut normals = if cols == 6 { Some(Vec::new()) } else { None };
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let line_no = i + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let toks: Vec<&str> = trimmed.split_whitespace().collect();
        if toks.len() != cols {
            return Err(Error::parse(
                path,
                line_no,
                format!("expected {cols} columns, got {}", toks.len()),
            ));
        }
        let mut vals = [0.0f64; 6];
        for (j, tok) in toks.iter().enumerate() {
            vals[j] = parse_float(tok, path, line_no)?;
        }
        points.push([vals[0], vals[1], vals[2]]);
        if let Some(ns) = &mut normals {
            ns.push([vals[3], vals[4], vals[5]]);
        }
    }
    if points.is_empty() {
        return Err(Error::parse(path, 0, "no points in file"));
    }
    Ok((points, normals))
}

struct LineCursor<R> {
    lines: std::io::Lines<R>,
    line_no: usize,
}

impl<R: BufRead> LineCursor<R> {
    fn next(&mut self, path: &Path) -> Result<Option<String>> {
        match self.lines.next() {
            Some(l) => {
                self.line_no += 1;
                Ok(Some(l.map_err(|e| Error::io(path, e))?))
            }
            None => Ok(None),
        }
    }
}

fn parse_ply_ascii<R: BufRead>(
    reader: R,
    path: &Path,
) -> Result<(Vec<[f64; 3]>, Option<Vec<[f64; 3]>>)> {
    let mut cur = LineCursor {
        lines: reader.lines(),
        line_no: 0,
    };

    match cur.next(path)? {
        Some(l) if l.trim() == "ply" => {}
        _ => return Err(Error::parse(path, 1, "missing 'ply' header")),
    }

    // Header: elements in declaration order, each with a count and its
    // property names (list properties are rejected; only vertex matters).
    struct Element {
        name: String,
        count: usize,
        props: Vec<String>,
    }
    let mut elements: Vec<Element> = Vec::new();
    let mut format_seen = false;
    loop {
        let line = cur
            .next(path)?
            .ok_or_else(|| Error::parse(path, cur.line_no, "unterminated header"))?;
        let toks: Vec<&str> = line.split_whitespace().collect();
        match toks.as_slice() {
            ["format", "ascii", _] => format_seen = true,
            ["format", other, ..] => {
                return Err(Error::parse(
                    path,
                    cur.line_no,
                    format!("unsupported PLY format {other:?} (only ascii)"),
                ));
            }
            ["comment", ..] | [] => {}
            ["element", name, count] => {
                let count: usize = count.parse().map_err(|_| {
                    Error::parse(path, cur.line_no, format!("bad element count {count:?}"))
                })?;
                elements.push(Element {
                    name: (*name).to_string(),
                    count,
                    props: Vec::new(),
                });
            }
            ["property", "list", ..] => {
                let el = elements
                    .last_mut()
                    .ok_or_else(|| Error::parse(path, cur.line_no, "property before element"))?;
                if el.name == "vertex" {
                    return Err(Error::parse(path, cur.line_no, "list property on vertex element"));
                }
                el.props.push("__list__".to_string());
            }
            ["property", _ty, name] => {
                let el = elements
                    .last_mut()
                    .ok_or_else(|| Error::parse(path, cur.line_no, "property before element"))?;
                el.props.push((*name).to_string());
            }
            ["end_header"] => break,
            _ => {
                return Err(Error::parse(
                    path,
                    cur.line_no,
                    format!("unrecognized header line {line:?}"),
                ));
            }
        }
    }
    if !format_seen {
        return Err(Error::parse(path, cur.line_no, "missing 'format ascii' line"));
    }

    let vertex = elements
        .iter()
        .find(|e| e.name == "vertex")
        .ok_or_else(|| Error::parse(path, cur.line_no, "no vertex element"))?;
    let prop_index = |name: &str| vertex.props.iter().position(|p| p == name);
    let (ix, iy, iz) = match (prop_index("x"), prop_index("y"), prop_index("z")) {
        (Some(a), Some(b), Some(c)) => (a, b, c),
        _ => return Err(Error::parse(path, cur.line_no, "vertex element lacks x,y,z")),
    };
    let normal_idx = match (prop_index("nx"), prop_index("ny"), prop_index("nz")) {
        (Some(a), Some(b), Some(c)) => Some((a, b, c)),
        _ => None,
    };

    let mut points = Vec::new();
    let mut normals = normal_idx.map(|_| Vec::new());
    for el in &elements {
        for _ in 0..el.count {
            let line = cur
                .next(path)?
                .ok_or_else(|| Error::parse(path, cur.line_no, "unexpected end of data"))?;
            if el.name != "vertex" {
                continue;
            }
            let toks: Vec<&str> = line.split_whitespace().collect();
            if toks.len() < vertex.props.len() {
                return Err(Error::parse(
                    path,
                    cur.line_no,
                    format!(
                        "expected {} vertex properties, got {}",
                        vertex.props.len(),
                        toks.len()
                    ),
                ));
            }
            let line_no = cur.line_no;
            let get = |i: usize| parse_float(toks[i], path, line_no);
            points.push([get(ix)?, get(iy)?, get(iz)?]);
            if let (Some(ns), Some((a, b, c))) = (&mut normals, normal_idx) {
                ns.push([get(a)?, get(b)?, get(c)?]);
            }
        }
    }
    if points.is_empty() {
        return Err(Error::parse(path, cur.line_no, "PLY has zero vertices"));
    }
    Ok((points, normals))
}

fn load_labels(path: &Path, n_points: usize) -> Result<Vec<u8>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut labels = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        match t {
            "0" => labels.push(0),
            "1" => labels.push(1),
            other => {
                return Err(Error::parse(
                    path,
                    i + 1,
                    format!("label must be 0 or 1, got {other:?}"),
                ));
            }
        }
    }
    if labels.len() != n_points {
        return Err(Error::LabelLengthMismatch {
            path: path.to_path_buf(),
            labels: labels.len(),
            points: n_points,
        });
    }
    Ok(labels)
}

/// Write a cloud as `.xyz` using shortest-round-trip float formatting, plus
/// a `.labels` sidecar when `labels` are present (or when `force_labels`).
pub fn save_cloud_xyz(cloud: &LabeledCloud, path: &Path, force_labels: bool) -> Result<()> {
    cloud.validate()?;
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for p in &cloud.points {
        writeln!(w, "{} {} {}", p[0], p[1], p[2]).map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;

    if cloud.labels.is_some() || force_labels {
        let lp = sidecar_path(path, "labels");
        let file = File::create(&lp).map_err(|e| Error::io(&lp, e))?;
        let mut w = BufWriter::new(file);
        match &cloud.labels {
            Some(labels) => {
                for l in labels {
                    writeln!(w, "{l}").map_err(|e| Error::io(&lp, e))?;
                }
            }
            None => {
                for _ in 0..cloud.len() {
                    writeln!(w, "0").map_err(|e| Error::io(&lp, e))?;
                }
            }
        }
        w.flush().map_err(|e| Error::io(&lp, e))?;
    }
    Ok(())
}

/// Write a `.scores` sidecar, one score per line with 10 significant digits.
pub fn save_scores(cloud: &LabeledCloud, point_scores: &[f64], path: &Path) -> Result<()> {
    if point_scores.len() != cloud.len() {
        return Err(Error::InvalidArgument(format!(
            "{} scores for {} points of {}",
            point_scores.len(),
            cloud.len(),
            cloud.sample_id
        )));
    }
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for s in point_scores {
        writeln!(w, "{s:.9e}").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Read a `.scores` sidecar back.
pub fn load_scores(path: &Path) -> Result<Vec<f64>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        out.push(parse_float(t, path, i + 1)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;
    use tempfile::tempdir;

    #[test]
    fn xyz_roundtrip_with_labels() {
        let dir = tempdir().unwrap();
        let p = dir.path().join("c.xyz");
        fs::write(&p, "0 0 0\n1 0 0\n0 1 0\n").unwrap();
        let c = load_cloud(&p, CloudFormat::Xyz).unwrap();
        assert_eq!(c.len(), 3);
        assert!(c.normals.is_none());
        assert!(c.labels.is_none());

        fs::write(dir.path().join("c.labels"), "0\n1\n0\n").unwrap();
        let c = load_cloud(&p, CloudFormat::Xyz).unwrap();
        assert_eq!(c.labels, Some(vec![0, 1, 0]));
    }

    #[test]
    fn label_length_mismatch_is_an_error() {
        let dir = tempdir().unwrap();
        let p = dir.path().join("c.xyz");
        fs::write(&p, "0 0 0\n1 0 0\n0 1 0\n").unwrap();
        fs::write(dir.path().join("c.labels"), "0\n1\n").unwrap();
        match load_cloud(&p, CloudFormat::Xyz) {
            Err(Error::LabelLengthMismatch { labels, points, .. }) => {
                assert_eq!((labels, points), (2, 3));
            }
            other => panic!("expected label mismatch, got {other:?}"),
        }
    }

    #[test]
    fn malformed_rows_report_line_numbers() {
        let dir = tempdir().unwrap();
        let p = dir.path().join("c.xyz");
        fs::write(&p, "0 0 0\n1 0\n").unwrap();
        match load_cloud(&p, CloudFormat::Xyz) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
        fs::write(&p, "0 0 0\n1 0 nan\n").unwrap();
        assert!(load_cloud(&p, CloudFormat::Xyz).is_err());
    }

    #[test]
    fn xyzn_loads_normals() {
        let dir = tempdir().unwrap();
        let p = dir.path().join("c.xyzn");
        fs::write(&p, "0 0 0 0 0 1\n1 0 0 1 0 0\n").unwrap();
        let c = load_cloud(&p, CloudFormat::Xyzn).unwrap();
        assert_eq!(c.normals.as_ref().unwrap()[1], [1.0, 0.0, 0.0]);
    }

    #[test]
    fn ply_ascii_minimal() {
        let dir = tempdir().unwrap();
        let p = dir.path().join("c.ply");
        fs::write(
            &p,
            "ply\nformat ascii 1.0\ncomment test\nelement vertex 2\n\
             property float x\nproperty float y\nproperty float z\n\
             end_header\n0 0 0\n1 2 3\n",
        )
        .unwrap();
        let c = load_cloud(&p, CloudFormat::PlyAscii).unwrap();
        assert_eq!(c.points[1], [1.0, 2.0, 3.0]);

        fs::write(&p, "not a ply\n").unwrap();
        assert!(load_cloud(&p, CloudFormat::PlyAscii).is_err());
    }

    #[test]
    fn scores_roundtrip_and_mismatch() {
        let dir = tempdir().unwrap();
        let cloud =
            LabeledCloud::new(vec![[0.0; 3], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]], "s").unwrap();
        let p = dir.path().join("s.scores");
        save_scores(&cloud, &[0.1, 0.2, 0.3], &p).unwrap();
        let text = fs::read_to_string(&p).unwrap();
        assert_eq!(text.lines().count(), 3);

        let back = load_scores(&p).unwrap();
        for (a, b) in back.iter().zip([0.1, 0.2, 0.3]) {
            assert!((a - b).abs() < 1e-9);
        }
        assert!(save_scores(&cloud, &[0.1, 0.2], &p).is_err());
    }

    #[test]
    fn save_cloud_roundtrips_exactly() {
        let dir = tempdir().unwrap();
        let mut cloud = LabeledCloud::new(
            vec![[0.125, -3.0, 1e-7], [2.0 / 3.0, 1.0, -0.0]],
            "rt",
        )
        .unwrap();
        cloud.labels = Some(vec![1, 0]);
        let p = dir.path().join("rt.xyz");
        save_cloud_xyz(&cloud, &p, false).unwrap();
        let back = load_cloud(&p, CloudFormat::Xyz).unwrap();
        assert_eq!(back.points, cloud.points);
        assert_eq!(back.labels, cloud.labels);
    }
}
