//! On-disk corpus: a JSONL manifest plus one raw little-endian `f32` file per
//! video (row-major, time x channels).

use std::collections::HashSet;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{MggError, Result};
use crate::segment::Segment;

#[derive(Clone, Debug, PartialEq)]
pub struct Video {
    pub id: String,
    /// `l_s x d_f`.
    pub features: Array2<f32>,
    pub annotations: Vec<Segment>,
}

impl Video {
    pub fn len(&self) -> usize {
        self.features.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn feature_dim(&self) -> usize {
        self.features.ncols()
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Dataset {
    pub videos: Vec<Video>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ManifestRecord {
    video_id: String,
    l_s: usize,
    d_f: usize,
    feature_file: String,
    annotations: Vec<[f64; 2]>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.videos.len()
    }

    pub fn is_empty(&self) -> bool {
        self.videos.is_empty()
    }

    /// `None` for an empty dataset.
    pub fn feature_dim(&self) -> Option<usize> {
        self.videos.first().map(Video::feature_dim)
    }

    pub fn get(&self, id: &str) -> Option<&Video> {
        self.videos.iter().find(|v| v.id == id)
    }

    pub fn gt_count(&self) -> usize {
        self.videos.iter().map(|v| v.annotations.len()).sum()
    }

    /// Unique ids, one feature width, annotations inside their videos.
    pub fn validate(&self) -> Result<()> {
        let mut ids = HashSet::new();
        let d_f = self.feature_dim();
        for v in &self.videos {
            if !ids.insert(v.id.as_str()) {
                return Err(MggError::Dataset(format!("duplicate video id {:?}", v.id)));
            }
            if v.id.is_empty() || v.id.contains(['/', '\\']) {
                return Err(MggError::Dataset(format!("video id {:?} is not a plain file stem", v.id)));
            }
            if Some(v.feature_dim()) != d_f || v.is_empty() {
                return Err(MggError::Dataset(format!(
                    "video {:?} has shape {:?}; expected {:?} channels and at least one frame",
                    v.id,
                    v.features.dim(),
                    d_f
                )));
            }
            if let Some(a) = v.annotations.iter().find(|a| !a.is_valid_within(v.len() as f64)) {
                return Err(MggError::Dataset(format!(
                    "video {:?}: annotation [{}, {}] is outside [0, {}] or empty",
                    v.id,
                    a.t_s,
                    a.t_e,
                    v.len()
                )));
            }
        }
        Ok(())
    }

    /// Writes `manifest` and a `features/` directory beside it.
    pub fn save(&self, manifest: &Path) -> Result<()> {
        self.validate()?;
        let root = manifest.parent().map(Path::to_path_buf).unwrap_or_default();
        fs::create_dir_all(root.join("features"))?;
        let mut out = BufWriter::new(File::create(manifest)?);
        for v in &self.videos {
            let rel = format!("features/{}.f32", v.id);
            let mut bytes = Vec::with_capacity(v.features.len() * 4);
            for x in v.features.iter() {
                bytes.extend_from_slice(&x.to_le_bytes());
            }
            fs::write(root.join(&rel), bytes)?;
            let record = ManifestRecord {
                video_id: v.id.clone(),
                l_s: v.len(),
                d_f: v.feature_dim(),
                feature_file: rel,
                annotations: v.annotations.iter().map(|a| [a.t_s, a.t_e]).collect(),
            };
            serde_json::to_writer(&mut out, &record)?;
            out.write_all(b"\n")?;
        }
        out.flush()?;
        Ok(())
    }

    /// Feature paths in the manifest are resolved against its directory.
    pub fn load(manifest: &Path) -> Result<Self> {
        let root = manifest.parent().map(Path::to_path_buf).unwrap_or_default();
        let reader = BufReader::new(File::open(manifest)?);
        let mut videos = Vec::new();
        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let record: ManifestRecord = serde_json::from_str(&line)
                .map_err(|e| MggError::Dataset(format!("{}:{}: {e}", manifest.display(), lineno + 1)))?;
            videos.push(read_video(&root, record)?);
        }
        let dataset = Dataset { videos };
        dataset.validate()?;
        Ok(dataset)
    }
}

fn read_video(root: &Path, record: ManifestRecord) -> Result<Video> {
    let path: PathBuf = root.join(&record.feature_file);
    let bytes = fs::read(&path)?;
    let expected = record.l_s * record.d_f * 4;
    if bytes.len() != expected {
        return Err(MggError::Dataset(format!(
            "{}: {} bytes, expected {} ({} x {} f32)",
            path.display(),
            bytes.len(),
            expected,
            record.l_s,
            record.d_f
        )));
    }
    let values = bytes.chunks_exact(4).map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]])).collect();
    let features = Array2::from_shape_vec((record.l_s, record.d_f), values)
        .map_err(|e| MggError::Dataset(e.to_string()))?;
    Ok(Video {
        id: record.video_id,
        features,
        annotations: record.annotations.iter().map(|[s, e]| Segment::span(*s, *e)).collect(),
    })
}
