//! Dataset ingestion from per-camera, per-person frame directories.
//!
//! Layout: `<root>/<camera>/<person>/<frame_index>.<ext>` where `<ext>` is a
//! raster format `image` can decode (png, jpg/jpeg, bmp). Frame files are
//! ordered by the integer value of their stem, never by directory order.
//! Files whose stem is not an integer are ignored.
//!
//! Layouts that do not follow this tree can be described with a manifest
//! (see [`load_manifest`]): one `camera,person,path` line per sequence, where
//! `path` is a directory of numbered frames relative to the manifest.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use thiserror::Error;

use crate::frame::{Frame, FrameError, FrameSequence};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("dataset directory not found or empty: {0}")]
    NotFound(PathBuf),
    #[error("sequence {person} in camera {camera} has fewer than 2 decodable frames")]
    MalformedSequence { person: String, camera: String },
    #[error("cannot decode image {path}: {reason}")]
    DecodeError { path: PathBuf, reason: String },
    #[error("frames of {person} in camera {camera} are inconsistent: {source}")]
    InvalidFrames {
        person: String,
        camera: String,
        source: FrameError,
    },
    #[error("manifest {path} line {line}: {reason}")]
    Manifest {
        path: PathBuf,
        line: usize,
        reason: String,
    },
    #[error("I/O error at {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl DatasetError {
    pub fn kind(&self) -> &'static str {
        match self {
            Self::NotFound(_) => "NotFound",
            Self::MalformedSequence { .. } => "MalformedSequence",
            Self::DecodeError { .. } => "DecodeError",
            Self::InvalidFrames { .. } => "InvalidFrames",
            Self::Manifest { .. } => "ManifestError",
            Self::Io { .. } => "IoError",
        }
    }
}

/// A set of frame sequences across (usually two) cameras.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    sequences: Vec<FrameSequence>,
    identities: BTreeSet<String>,
}

impl Dataset {
    /// Sequences are re-sorted by (camera, person) so that construction order
    /// does not leak into results.
    pub fn new(mut sequences: Vec<FrameSequence>) -> Self {
        sequences.sort_by(|a, b| {
            (a.camera_id(), a.person_id()).cmp(&(b.camera_id(), b.person_id()))
        });
        let identities = sequences
            .iter()
            .map(|s| s.person_id().to_string())
            .collect();
        Self {
            sequences,
            identities,
        }
    }

    pub fn sequences(&self) -> &[FrameSequence] {
        &self.sequences
    }

    pub fn identities(&self) -> &BTreeSet<String> {
        &self.identities
    }

    /// Camera labels in sorted order. The first one is the query camera.
    pub fn cameras(&self) -> Vec<String> {
        self.sequences
            .iter()
            .map(|s| s.camera_id().to_string())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    }

    pub fn sequences_of<'a>(
        &'a self,
        person: &'a str,
        camera: &'a str,
    ) -> impl Iterator<Item = &'a FrameSequence> + 'a {
        self.sequences
            .iter()
            .filter(move |s| s.person_id() == person && s.camera_id() == camera)
    }

    pub fn find(&self, camera: &str, person: &str) -> Option<&FrameSequence> {
        self.sequences
            .iter()
            .find(|s| s.person_id() == person && s.camera_id() == camera)
    }

    /// Identities seen by both the first and the second camera.
    pub fn cross_camera_identities(&self) -> BTreeSet<String> {
        let cams = self.cameras();
        if cams.len() < 2 {
            return BTreeSet::new();
        }
        let ids_in = |cam: &str| -> BTreeSet<String> {
            self.sequences
                .iter()
                .filter(|s| s.camera_id() == cam)
                .map(|s| s.person_id().to_string())
                .collect()
        };
        ids_in(&cams[0])
            .intersection(&ids_in(&cams[1]))
            .cloned()
            .collect()
    }
}

const IMAGE_EXTENSIONS: &[&str] = &["png", "jpg", "jpeg", "bmp"];

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> DatasetError + '_ {
    move |source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn sorted_subdirs(dir: &Path) -> Result<Vec<(String, PathBuf)>, DatasetError> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).map_err(io_err(dir))? {
        let entry = entry.map_err(io_err(dir))?;
        let path = entry.path();
        if path.is_dir() {
            out.push((entry.file_name().to_string_lossy().into_owned(), path));
        }
    }
    out.sort();
    Ok(out)
}

/// Numbered image files of a sequence directory, ordered by frame index.
pub fn frame_files(dir: &Path) -> Result<Vec<(u64, PathBuf)>, DatasetError> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).map_err(io_err(dir))? {
        let path = entry.map_err(io_err(dir))?.path();
        if !path.is_file() {
            continue;
        }
        let ext_ok = path
            .extension()
            .and_then(|e| e.to_str())
            .map(|e| IMAGE_EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()))
            .unwrap_or(false);
        let index = path
            .file_stem()
            .and_then(|s| s.to_str())
            .and_then(|s| s.parse::<u64>().ok());
        if let (true, Some(index)) = (ext_ok, index) {
            out.push((index, path));
        }
    }
    out.sort();
    Ok(out)
}

pub fn decode_frame(path: &Path) -> Result<Frame, DatasetError> {
    let img = image::open(path).map_err(|e| DatasetError::DecodeError {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })?;
    let rgb = img.into_rgb8();
    let (w, h) = (rgb.width() as usize, rgb.height() as usize);
    Frame::new(w, h, rgb.into_raw()).map_err(|e| DatasetError::DecodeError {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })
}

/// Reads one sequence directory. Images are decoded in parallel; order is by
/// frame index.
pub fn load_sequence(dir: &Path, camera: &str, person: &str) -> Result<FrameSequence, DatasetError> {
    let files = frame_files(dir)?;
    if files.len() < 2 {
        return Err(DatasetError::MalformedSequence {
            person: person.to_string(),
            camera: camera.to_string(),
        });
    }
    let frames = files
        .par_iter()
        .map(|(_, p)| decode_frame(p))
        .collect::<Result<Vec<_>, _>>()?;
    FrameSequence::new(person, camera, frames).map_err(|source| DatasetError::InvalidFrames {
        person: person.to_string(),
        camera: camera.to_string(),
        source,
    })
}

/// Loads `<root>/<camera>/<person>/<frame>.<ext>`.
pub fn load_dataset(root: impl AsRef<Path>) -> Result<Dataset, DatasetError> {
    let root = root.as_ref();
    if !root.is_dir() {
        return Err(DatasetError::NotFound(root.to_path_buf()));
    }
    let mut jobs = Vec::new();
    for (camera, cam_dir) in sorted_subdirs(root)? {
        for (person, dir) in sorted_subdirs(&cam_dir)? {
            jobs.push((camera.clone(), person, dir));
        }
    }
    if jobs.is_empty() {
        return Err(DatasetError::NotFound(root.to_path_buf()));
    }
    let sequences = jobs
        .iter()
        .map(|(camera, person, dir)| load_sequence(dir, camera, person))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Dataset::new(sequences))
}

/// Loads sequences listed in a manifest file (`camera,person,path` per line;
/// blank lines and `#` comments skipped; relative paths resolve against the
/// manifest's directory).
pub fn load_manifest(manifest: impl AsRef<Path>) -> Result<Dataset, DatasetError> {
    let manifest = manifest.as_ref();
    if !manifest.is_file() {
        return Err(DatasetError::NotFound(manifest.to_path_buf()));
    }
    let text = fs::read_to_string(manifest).map_err(io_err(manifest))?;
    let base = manifest.parent().unwrap_or_else(|| Path::new("."));
    let mut sequences = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.splitn(3, ',').map(str::trim).collect();
        let [camera, person, path] = fields[..] else {
            return Err(DatasetError::Manifest {
                path: manifest.to_path_buf(),
                line: i + 1,
                reason: format!("expected camera,person,path; got {line:?}"),
            });
        };
        let dir = base.join(path);
        if !dir.is_dir() {
            return Err(DatasetError::NotFound(dir));
        }
        sequences.push(load_sequence(&dir, camera, person)?);
    }
    if sequences.is_empty() {
        return Err(DatasetError::NotFound(manifest.to_path_buf()));
    }
    Ok(Dataset::new(sequences))
}

/// Writes a dataset as PNG frames in the directory layout `load_dataset` reads.
pub fn save_dataset(dataset: &Dataset, root: impl AsRef<Path>) -> Result<(), DatasetError> {
    let root = root.as_ref();
    dataset.sequences().par_iter().try_for_each(|seq| {
        let dir = root.join(seq.camera_id()).join(seq.person_id());
        fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        for (i, frame) in seq.frames().iter().enumerate() {
            let path = dir.join(format!("{i:04}.png"));
            image::save_buffer(
                &path,
                frame.pixels(),
                frame.width() as u32,
                frame.height() as u32,
                image::ColorType::Rgb8,
            )
            .map_err(|e| DatasetError::Io {
                path: path.clone(),
                source: std::io::Error::other(e.to_string()),
            })?;
        }
        Ok(())
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_png(path: &Path, w: u32, h: u32, fill: u8) {
        let buf = vec![fill; (w * h * 3) as usize];
        image::save_buffer(path, &buf, w, h, image::ColorType::Rgb8).unwrap();
    }

    fn make_seq(root: &Path, cam: &str, person: &str, n: usize) {
        let dir = root.join(cam).join(person);
        fs::create_dir_all(&dir).unwrap();
        for i in 0..n {
            write_png(&dir.join(format!("{i}.png")), 3, 4, (i % 256) as u8);
        }
    }

    #[test]
    fn two_cameras_one_identity() {
        let tmp = tempfile::tempdir().unwrap();
        make_seq(tmp.path(), "cam1", "p001", 100);
        make_seq(tmp.path(), "cam2", "p001", 80);
        let ds = load_dataset(tmp.path()).unwrap();
        assert_eq!(ds.sequences().len(), 2);
        assert_eq!(ds.identities().len(), 1);
        assert_eq!(ds.sequences()[0].len(), 100);
        assert_eq!(ds.sequences()[1].len(), 80);
        assert_eq!(ds.cameras(), vec!["cam1", "cam2"]);
        assert_eq!(ds.cross_camera_identities().len(), 1);
    }

    #[test]
    fn frames_sort_numerically() {
        let tmp = tempfile::tempdir().unwrap();
        make_seq(tmp.path(), "cam1", "p001", 12);
        let ds = load_dataset(tmp.path()).unwrap();
        // frame "10.png" has fill 10 and must come after "9.png"
        let seq = &ds.sequences()[0];
        for (i, f) in seq.frames().iter().enumerate() {
            assert_eq!(f.pixels()[0] as usize, i);
        }
    }

    #[test]
    fn empty_root_is_not_found() {
        let tmp = tempfile::tempdir().unwrap();
        assert!(matches!(load_dataset(tmp.path()), Err(DatasetError::NotFound(_))));
        assert!(matches!(
            load_dataset(tmp.path().join("missing")),
            Err(DatasetError::NotFound(_))
        ));
    }

    #[test]
    fn single_frame_sequence_is_malformed() {
        let tmp = tempfile::tempdir().unwrap();
        make_seq(tmp.path(), "cam1", "p001", 5);
        make_seq(tmp.path(), "cam1", "p002", 1);
        match load_dataset(tmp.path()) {
            Err(DatasetError::MalformedSequence { person, camera }) => {
                assert_eq!(person, "p002");
                assert_eq!(camera, "cam1");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn corrupt_image_is_decode_error() {
        let tmp = tempfile::tempdir().unwrap();
        make_seq(tmp.path(), "cam1", "p001", 3);
        fs::write(tmp.path().join("cam1/p001/1.png"), b"not a png").unwrap();
        let err = load_dataset(tmp.path()).unwrap_err();
        assert_eq!(err.kind(), "DecodeError");
    }

    #[test]
    fn manifest_override() {
        let tmp = tempfile::tempdir().unwrap();
        make_seq(tmp.path(), "a", "x", 3);
        make_seq(tmp.path(), "b", "y", 4);
        let m = tmp.path().join("list.txt");
        fs::write(&m, "# comment\ncamA,pid1,a/x\n\ncamB,pid1,b/y\n").unwrap();
        let ds = load_manifest(&m).unwrap();
        assert_eq!(ds.cameras(), vec!["camA", "camB"]);
        assert_eq!(ds.cross_camera_identities().len(), 1);
        fs::write(&m, "camA,pid1\n").unwrap();
        assert_eq!(load_manifest(&m).unwrap_err().kind(), "ManifestError");
    }

    #[test]
    fn loading_is_deterministic() {
        let tmp = tempfile::tempdir().unwrap();
        make_seq(tmp.path(), "cam1", "p1", 6);
        make_seq(tmp.path(), "cam2", "p1", 6);
        make_seq(tmp.path(), "cam1", "p2", 6);
        assert_eq!(load_dataset(tmp.path()).unwrap(), load_dataset(tmp.path()).unwrap());
    }
}
