//! Dataset manifests: sample enumeration with category, split, role and
//! defect kind.
//!
//! Manifest files are TSV with the header
//! `sample_id<TAB>category<TAB>split<TAB>role<TAB>defect_kind<TAB>cloud_path<TAB>label_path`;
//! `label_path` may be empty. Paths are stored relative to the manifest
//! location and resolved against it on load.

use std::collections::BTreeSet;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Split {
    Train,
    Test,
}

impl Split {
    pub fn as_str(&self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
        }
    }

    pub fn parse(s: &str) -> Result<Split> {
        match s {
            "train" => Ok(Split::Train),
            "test" => Ok(Split::Test),
            other => Err(Error::Manifest(format!("unknown split {other:?}"))),
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Role {
    Normal,
    Anomalous,
}

impl Role {
    pub fn as_str(&self) -> &'static str {
        match self {
            Role::Normal => "normal",
            Role::Anomalous => "anomalous",
        }
    }

    pub fn parse(s: &str) -> Result<Role> {
        match s {
            "normal" => Ok(Role::Normal),
            "anomalous" => Ok(Role::Anomalous),
            other => Err(Error::Manifest(format!("unknown role {other:?}"))),
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Defect taxonomy; `None` marks normal samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DefectKind {
    None,
    Convex,
    Concave,
    Scratch,
    Scar,
    Deformation,
}

impl DefectKind {
    pub const ALL_DEFECTS: [DefectKind; 5] = [
        DefectKind::Convex,
        DefectKind::Concave,
        DefectKind::Scratch,
        DefectKind::Scar,
        DefectKind::Deformation,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            DefectKind::None => "none",
            DefectKind::Convex => "convex",
            DefectKind::Concave => "concave",
            DefectKind::Scratch => "scratch",
            DefectKind::Scar => "scar",
            DefectKind::Deformation => "deformation",
        }
    }

    pub fn parse(s: &str) -> Result<DefectKind> {
        match s {
            "none" => Ok(DefectKind::None),
            "convex" => Ok(DefectKind::Convex),
            "concave" => Ok(DefectKind::Concave),
            "scratch" => Ok(DefectKind::Scratch),
            "scar" => Ok(DefectKind::Scar),
            "deformation" => Ok(DefectKind::Deformation),
            other => Err(Error::Manifest(format!("unknown defect kind {other:?}"))),
        }
    }
}

impl fmt::Display for DefectKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestRow {
    pub sample_id: String,
    pub category: String,
    pub split: Split,
    pub role: Role,
    pub defect_kind: DefectKind,
    /// Relative to the manifest base directory.
    pub cloud_path: PathBuf,
    pub label_path: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetManifest {
    pub rows: Vec<ManifestRow>,
    /// Directory that relative paths resolve against.
    pub base_dir: PathBuf,
}

impl DatasetManifest {
    pub fn new(rows: Vec<ManifestRow>, base_dir: impl Into<PathBuf>) -> DatasetManifest {
        DatasetManifest {
            rows,
            base_dir: base_dir.into(),
        }
    }

    pub fn resolve(&self, rel: &Path) -> PathBuf {
        if rel.is_absolute() {
            rel.to_path_buf()
        } else {
            self.base_dir.join(rel)
        }
    }

    pub fn cloud_path(&self, row: &ManifestRow) -> PathBuf {
        self.resolve(&row.cloud_path)
    }

    pub fn categories(&self) -> Vec<String> {
        let mut cats: Vec<String> = self
            .rows
            .iter()
            .map(|r| r.category.clone())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        cats.sort();
        cats
    }

    pub fn filter<F: Fn(&ManifestRow) -> bool>(&self, pred: F) -> DatasetManifest {
        DatasetManifest {
            rows: self.rows.iter().filter(|r| pred(r)).cloned().collect(),
            base_dir: self.base_dir.clone(),
        }
    }

    /// Structural checks: unique ids, role/kind consistency, seen/unseen
    /// kind disjointness between train and test anomalies, and (optionally)
    /// file existence.
    pub fn validate(&self, check_files: bool) -> Result<()> {
        let mut ids = BTreeSet::new();
        for row in &self.rows {
            if !ids.insert(&row.sample_id) {
                return Err(Error::Manifest(format!(
                    "duplicate sample_id {:?}",
                    row.sample_id
                )));
            }
            match (row.role, row.defect_kind) {
                (Role::Normal, DefectKind::None) => {}
                (Role::Normal, k) => {
                    return Err(Error::Manifest(format!(
                        "normal sample {:?} carries defect kind {k}",
                        row.sample_id
                    )));
                }
                (Role::Anomalous, DefectKind::None) => {
                    return Err(Error::Manifest(format!(
                        "anomalous sample {:?} has defect kind none",
                        row.sample_id
                    )));
                }
                (Role::Anomalous, _) => {}
            }
            if check_files {
                let p = self.cloud_path(row);
                if !p.exists() {
                    return Err(Error::Manifest(format!(
                        "sample {:?}: cloud file {} does not exist",
                        row.sample_id,
                        p.display()
                    )));
                }
                if let Some(lp) = &row.label_path {
                    let lp = self.resolve(lp);
                    if !lp.exists() {
                        return Err(Error::Manifest(format!(
                            "sample {:?}: label file {} does not exist",
                            row.sample_id,
                            lp.display()
                        )));
                    }
                }
            }
        }

        let train_kinds: BTreeSet<DefectKind> = self
            .rows
            .iter()
            .filter(|r| r.split == Split::Train && r.role == Role::Anomalous)
            .map(|r| r.defect_kind)
            .collect();
        let test_kinds: BTreeSet<DefectKind> = self
            .rows
            .iter()
            .filter(|r| r.split == Split::Test && r.role == Role::Anomalous)
            .map(|r| r.defect_kind)
            .collect();
        if let Some(k) = train_kinds.intersection(&test_kinds).next() {
            return Err(Error::Manifest(format!(
                "defect kind {k} appears in both train and test anomalies"
            )));
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        let io = |e| Error::io(path, e);
        writeln!(
            w,
            "sample_id\tcategory\tsplit\trole\tdefect_kind\tcloud_path\tlabel_path"
        )
        .map_err(io)?;
        for r in &self.rows {
            writeln!(
                w,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}",
                r.sample_id,
                r.category,
                r.split,
                r.role,
                r.defect_kind,
                path_str(&r.cloud_path),
                r.label_path.as_deref().map(path_str).unwrap_or_default(),
            )
            .map_err(io)?;
        }
        w.flush().map_err(io)
    }

    pub fn load(path: &Path) -> Result<DatasetManifest> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut lines = BufReader::new(file).lines().enumerate();
        let header = match lines.next() {
            Some((_, l)) => l.map_err(|e| Error::io(path, e))?,
            None => return Err(Error::parse(path, 1, "empty manifest")),
        };
        if header.trim_end()
            != "sample_id\tcategory\tsplit\trole\tdefect_kind\tcloud_path\tlabel_path"
        {
            return Err(Error::parse(path, 1, "bad manifest header"));
        }
        let mut rows = Vec::new();
        for (i, line) in lines {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 7 {
                return Err(Error::parse(
                    path,
                    i + 1,
                    format!("expected 7 columns, got {}", cols.len()),
                ));
            }
            rows.push(ManifestRow {
                sample_id: cols[0].to_string(),
                category: cols[1].to_string(),
                split: Split::parse(cols[2])
                    .map_err(|e| Error::parse(path, i + 1, e.to_string()))?,
                role: Role::parse(cols[3]).map_err(|e| Error::parse(path, i + 1, e.to_string()))?,
                defect_kind: DefectKind::parse(cols[4])
                    .map_err(|e| Error::parse(path, i + 1, e.to_string()))?,
                cloud_path: PathBuf::from(cols[5]),
                label_path: if cols[6].is_empty() {
                    None
                } else {
                    Some(PathBuf::from(cols[6]))
                },
            });
        }
        let base_dir = path
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_else(|| PathBuf::from("."));
        let manifest = DatasetManifest { rows, base_dir };
        manifest.validate(false)?;
        Ok(manifest)
    }
}

fn path_str(p: &Path) -> std::borrow::Cow<'_, str> {
    p.to_string_lossy()
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    fn row(id: &str, split: Split, role: Role, kind: DefectKind) -> ManifestRow {
        ManifestRow {
            sample_id: id.into(),
            category: "cat".into(),
            split,
            role,
            defect_kind: kind,
            cloud_path: PathBuf::from(format!("{id}.xyz")),
            label_path: None,
        }
    }

    #[test]
    fn roundtrip() {
        let dir = tempdir().unwrap();
        let m = DatasetManifest::new(
            vec![
                row("a", Split::Train, Role::Normal, DefectKind::None),
                row("b", Split::Test, Role::Anomalous, DefectKind::Scratch),
            ],
            dir.path(),
        );
        let p = dir.path().join("manifest.tsv");
        m.save(&p).unwrap();
        let back = DatasetManifest::load(&p).unwrap();
        assert_eq!(back.rows, m.rows);
    }

    #[test]
    fn rejects_duplicates_and_kind_overlap() {
        let dir = tempdir().unwrap();
        let m = DatasetManifest::new(
            vec![
                row("a", Split::Train, Role::Normal, DefectKind::None),
                row("a", Split::Test, Role::Normal, DefectKind::None),
            ],
            dir.path(),
        );
        assert!(m.validate(false).is_err());

        let m = DatasetManifest::new(
            vec![
                row("a", Split::Train, Role::Anomalous, DefectKind::Convex),
                row("b", Split::Test, Role::Anomalous, DefectKind::Convex),
            ],
            dir.path(),
        );
        assert!(m.validate(false).is_err());

        let m = DatasetManifest::new(
            vec![
                row("a", Split::Train, Role::Anomalous, DefectKind::Convex),
                row("b", Split::Test, Role::Anomalous, DefectKind::Scar),
            ],
            dir.path(),
        );
        m.validate(false).unwrap();
    }

    #[test]
    fn rejects_inconsistent_role_kind() {
        let dir = tempdir().unwrap();
        let m = DatasetManifest::new(
            vec![row("a", Split::Train, Role::Normal, DefectKind::Convex)],
            dir.path(),
        );
        assert!(m.validate(false).is_err());
        let m = DatasetManifest::new(
            vec![row("a", Split::Train, Role::Anomalous, DefectKind::None)],
            dir.path(),
        );
        assert!(m.validate(false).is_err());
    }

    #[test]
    fn missing_file_detected() {
        let dir = tempdir().unwrap();
        let m = DatasetManifest::new(
            vec![row("a", Split::Train, Role::Normal, DefectKind::None)],
            dir.path(),
        );
        assert!(m.validate(true).is_err());
        std::fs::write(dir.path().join("a.xyz"), "0 0 0\n").unwrap();
        m.validate(true).unwrap();
    }
}
