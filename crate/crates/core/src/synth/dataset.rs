//! On-disk dataset format.
//!
//! One directory per subject (`subject_NNNN/`) holding `header.json` plus
//! two raw little-endian `f32` payloads, `frames.f32` (T·H·W·C values) and
//! `label.f32` (T−1 values). See DATASET.md for the byte layout. Reading
//! back a written dataset reproduces the records bit-exactly.

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::signal::PpgTrace;

use super::frames::FrameSequence;
use super::subject::{HrProfile, SubjectRecord};

/// Errors from dataset reading and writing, each naming the file involved.
#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("no subjects found in {0}")]
    NoSubjects(PathBuf),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: malformed header: {detail}")]
    MalformedHeader { path: PathBuf, detail: String },
    #[error("{path}: payload holds {got} values but the header implies {expected}")]
    PayloadSizeMismatch {
        path: PathBuf,
        expected: usize,
        got: usize,
    },
    #[error("{path}: payload length {bytes} bytes is not a whole number of f32 values")]
    RaggedPayload { path: PathBuf, bytes: usize },
    #[error("{path}: {detail}")]
    InvalidRecord { path: PathBuf, detail: String },
}

#[derive(Serialize, Deserialize)]
struct Header {
    subject_id: u32,
    t: usize,
    h: usize,
    w: usize,
    c: usize,
    fps: f64,
    sigma_video: f64,
    sigma_label: f64,
    hr_profile: HrProfile,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> DatasetError + '_ {
    move |source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Write all records under `dir`, one subdirectory per subject.
pub fn write_dataset(records: &[SubjectRecord], dir: &Path) -> Result<(), DatasetError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    for rec in records {
        let sub = dir.join(format!("subject_{:04}", rec.subject_id));
        fs::create_dir_all(&sub).map_err(io_err(&sub))?;

        let header = Header {
            subject_id: rec.subject_id,
            t: rec.frames.t(),
            h: rec.frames.h(),
            w: rec.frames.w(),
            c: rec.frames.c(),
            fps: rec.frames.fps(),
            sigma_video: rec.sigma_video,
            sigma_label: rec.sigma_label,
            hr_profile: rec.true_hr_bpm.clone(),
        };
        let header_path = sub.join("header.json");
        let json = serde_json::to_string_pretty(&header).expect("header serializes");
        fs::write(&header_path, json).map_err(io_err(&header_path))?;

        write_f32_payload(&sub.join("frames.f32"), rec.frames.data())?;
        let label_f32: Vec<f32> = rec.label.samples().iter().map(|&v| v as f32).collect();
        write_f32_payload(&sub.join("label.f32"), &label_f32)?;
    }
    Ok(())
}

fn write_f32_payload(path: &Path, values: &[f32]) -> Result<(), DatasetError> {
    let mut bytes = Vec::with_capacity(values.len() * 4);
    for v in values {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    let mut file = fs::File::create(path).map_err(io_err(path))?;
    file.write_all(&bytes).map_err(io_err(path))
}

fn read_f32_payload(path: &Path, expected: usize) -> Result<Vec<f32>, DatasetError> {
    let mut bytes = Vec::new();
    fs::File::open(path)
        .map_err(io_err(path))?
        .read_to_end(&mut bytes)
        .map_err(io_err(path))?;
    if bytes.len() % 4 != 0 {
        return Err(DatasetError::RaggedPayload {
            path: path.to_path_buf(),
            bytes: bytes.len(),
        });
    }
    let got = bytes.len() / 4;
    if got != expected {
        return Err(DatasetError::PayloadSizeMismatch {
            path: path.to_path_buf(),
            expected,
            got,
        });
    }
    Ok(bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect())
}

/// Read every subject under `dir`, sorted by subject id.
pub fn read_dataset(dir: &Path) -> Result<Vec<SubjectRecord>, DatasetError> {
    let entries = fs::read_dir(dir).map_err(io_err(dir))?;
    let mut subject_dirs: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.is_dir()
                && p.file_name()
                    .and_then(|n| n.to_str())
                    .is_some_and(|n| n.starts_with("subject_"))
        })
        .collect();
    subject_dirs.sort();
    if subject_dirs.is_empty() {
        return Err(DatasetError::NoSubjects(dir.to_path_buf()));
    }

    let mut records = Vec::with_capacity(subject_dirs.len());
    for sub in &subject_dirs {
        let header_path = sub.join("header.json");
        let text = fs::read_to_string(&header_path).map_err(io_err(&header_path))?;
        let header: Header =
            serde_json::from_str(&text).map_err(|e| DatasetError::MalformedHeader {
                path: header_path.clone(),
                detail: e.to_string(),
            })?;
        if header.c != 3 {
            return Err(DatasetError::MalformedHeader {
                path: header_path.clone(),
                detail: format!("unsupported channel count {}", header.c),
            });
        }

        let frames_path = sub.join("frames.f32");
        let frame_values = header.t * header.h * header.w * header.c;
        let data = read_f32_payload(&frames_path, frame_values)?;
        let frames = FrameSequence::from_raw(data, header.t, header.h, header.w, header.fps)
            .map_err(|e| DatasetError::InvalidRecord {
                path: frames_path.clone(),
                detail: e.to_string(),
            })?;

        let label_path = sub.join("label.f32");
        let label_values = read_f32_payload(&label_path, header.t - 1)?;
        let label = PpgTrace::new(label_values.iter().map(|&v| v as f64).collect(), header.fps)
            .map_err(|e| DatasetError::InvalidRecord {
                path: label_path.clone(),
                detail: e.to_string(),
            })?;

        let record = SubjectRecord {
            subject_id: header.subject_id,
            frames,
            label,
            true_hr_bpm: header.hr_profile,
            sigma_video: header.sigma_video,
            sigma_label: header.sigma_label,
        };
        record.validate().map_err(|e| DatasetError::InvalidRecord {
            path: sub.clone(),
            detail: e.to_string(),
        })?;
        records.push(record);
    }
    records.sort_by_key(|r| r.subject_id);
    Ok(records)
}
