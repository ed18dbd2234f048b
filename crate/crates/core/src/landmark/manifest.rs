use std::collections::{BTreeMap, HashSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{load_clip, Clip, Label};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub clip_id: String,
    pub label: Label,
    /// Relative paths are resolved against the manifest's directory.
    pub path: PathBuf,
}

/// CSV dataset index with header `clip_id,label,path`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DatasetManifest {
    pub entries: Vec<ManifestEntry>,
    base_dir: PathBuf,
}

impl DatasetManifest {
    pub fn new(entries: Vec<ManifestEntry>, base_dir: impl Into<PathBuf>) -> Result<Self> {
        let manifest = DatasetManifest {
            entries,
            base_dir: base_dir.into(),
        };
        manifest.check_unique()?;
        Ok(manifest)
    }

    fn check_unique(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for entry in &self.entries {
            if !seen.insert(entry.clip_id.as_str()) {
                return Err(Error::validation(format!(
                    "duplicate clip_id `{}` in manifest",
                    entry.clip_id
                )));
            }
        }
        Ok(())
    }

    /// Loads a manifest and checks that every listed file exists.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut reader = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
        let entries = reader
            .deserialize()
            .collect::<std::result::Result<Vec<ManifestEntry>, _>>()
            .map_err(|e| Error::csv(path, e))?;
        let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let manifest = DatasetManifest::new(entries, base_dir)?;
        for entry in &manifest.entries {
            let resolved = manifest.resolve(entry);
            if !resolved.is_file() {
                return Err(Error::validation(format!(
                    "manifest entry `{}` points to missing file {}",
                    entry.clip_id,
                    resolved.display()
                )));
            }
        }
        Ok(manifest)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut writer = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
        for entry in &self.entries {
            writer.serialize(entry).map_err(|e| Error::csv(path, e))?;
        }
        if self.entries.is_empty() {
            writer
                .write_record(["clip_id", "label", "path"])
                .map_err(|e| Error::csv(path, e))?;
        }
        writer.flush().map_err(|e| Error::io(path, e))
    }

    pub fn resolve(&self, entry: &ManifestEntry) -> PathBuf {
        if entry.path.is_absolute() {
            entry.path.clone()
        } else {
            self.base_dir.join(&entry.path)
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn labels(&self) -> Vec<Label> {
        self.entries.iter().map(|e| e.label).collect()
    }

    pub fn counts(&self) -> BTreeMap<Label, usize> {
        let mut counts = BTreeMap::new();
        for entry in &self.entries {
            *counts.entry(entry.label).or_insert(0) += 1;
        }
        counts
    }

    /// Loads every clip, taking the label from the manifest. A clip whose
    /// own header carries a different label is rejected.
    pub fn load_clips(&self) -> Result<Vec<Clip>> {
        self.entries
            .iter()
            .map(|entry| {
                let mut clip = load_clip(self.resolve(entry))?;
                match clip.label {
                    Some(label) if label != entry.label => Err(Error::validation(format!(
                        "clip `{}` is labeled {label} in its file but {} in the manifest",
                        entry.clip_id, entry.label
                    ))),
                    _ => {
                        clip.label = Some(entry.label);
                        clip.clip_id = entry.clip_id.clone();
                        Ok(clip)
                    }
                }
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::landmark::{save_clip, synth_generate};

    #[test]
    fn round_trip_with_relative_paths() {
        let dir = tempfile::tempdir().unwrap();
        let mut entries = Vec::new();
        for (i, label) in [Label::HandFlapping, Label::Control].into_iter().enumerate() {
            let clip = synth_generate(label, 10, 30.0, i as u64);
            let name = format!("{}.jsonl", clip.clip_id);
            save_clip(&clip, dir.path().join(&name)).unwrap();
            entries.push(ManifestEntry {
                clip_id: clip.clip_id.clone(),
                label,
                path: name.into(),
            });
        }
        let manifest = DatasetManifest::new(entries, dir.path()).unwrap();
        let path = dir.path().join("manifest.csv");
        manifest.save(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("clip_id,label,path\n"));
        assert!(text.contains(",flap,"));

        let loaded = DatasetManifest::load(&path).unwrap();
        assert_eq!(loaded.entries, manifest.entries);
        assert_eq!(loaded.counts()[&Label::HandFlapping], 1);
        let clips = loaded.load_clips().unwrap();
        assert_eq!(clips[1].label, Some(Label::Control));
    }

    #[test]
    fn duplicate_ids_are_rejected() {
        let entry = ManifestEntry {
            clip_id: "a".into(),
            label: Label::Control,
            path: "a.jsonl".into(),
        };
        assert!(DatasetManifest::new(vec![entry.clone(), entry], ".").is_err());
    }

    #[test]
    fn missing_file_is_rejected_at_load() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.csv");
        std::fs::write(&path, "clip_id,label,path\na,flap,nope.jsonl\n").unwrap();
        assert!(matches!(
            DatasetManifest::load(&path),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn bad_label_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.csv");
        std::fs::write(&path, "clip_id,label,path\na,spin,a.jsonl\n").unwrap();
        assert!(DatasetManifest::load(&path).is_err());
    }
}
