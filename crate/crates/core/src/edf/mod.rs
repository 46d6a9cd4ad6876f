//! EDF/EDF+ parsing into physical-unit channel series.
//!
//! Recordings are read as a stream: the fixed 256-byte header, one 256-byte
//! block per signal, then `n_data_records` data records of little-endian
//! 16-bit samples. Only the signals a caller asks for are converted, which
//! keeps memory bounded for overnight recordings with many auxiliary
//! channels.

mod manifest;
mod writer;

use std::io::{self, Read};
use std::path::Path;

use chrono::{NaiveDate, NaiveDateTime, NaiveTime};
use serde::{Deserialize, Serialize};

use crate::{ClassLabel, SubjectId};

pub use manifest::{read_manifest, ManifestEntry, ManifestError};
pub use writer::{write_edf, EdfSynthSignal};

/// Label EDF+ uses for the annotation pseudo-signal.
pub const ANNOTATION_LABEL: &str = "EDF Annotations";

const FIXED_HEADER_BYTES: usize = 256;
const SIGNAL_HEADER_BYTES: usize = 256;

#[derive(Debug, thiserror::Error)]
pub enum EdfError {
    #[error("truncated header: need {needed} bytes, stream ended after {available}")]
    TruncatedHeader { needed: usize, available: usize },
    #[error("malformed header field {field}: {value:?}")]
    MalformedField { field: String, value: String },
    #[error("degenerate scaling on signal {signal:?}: {detail}")]
    DegenerateScaling { signal: String, detail: String },
    #[error("data ends mid-record: {recovered} whole records recovered of {declared}")]
    TruncatedRecords { recovered: usize, declared: i64 },
    #[error("channel {0:?} not present in recording")]
    MissingChannel(String),
    #[error("no channels requested")]
    NoChannelsRequested,
    #[error(transparent)]
    Io(#[from] io::Error),
}

fn malformed(field: impl Into<String>, value: impl Into<String>) -> EdfError {
    EdfError::MalformedField {
        field: field.into(),
        value: value.into(),
    }
}

/// Fixed part of an EDF header.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdfHeader {
    pub version: String,
    pub patient_info: String,
    pub recording_info: String,
    pub start_datetime: NaiveDateTime,
    pub header_bytes: usize,
    /// The 44-byte reserved field; "EDF+C" / "EDF+D" for EDF+ files.
    pub reserved: String,
    /// `-1` while a file is still being recorded.
    pub n_data_records: i64,
    pub record_duration: f64,
    pub n_signals: usize,
}

/// Per-signal header block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalHeader {
    pub label: String,
    pub transducer: String,
    pub physical_dimension: String,
    pub physical_min: f64,
    pub physical_max: f64,
    pub digital_min: i32,
    pub digital_max: i32,
    pub prefiltering: String,
    pub samples_per_record: usize,
    pub reserved: String,
}

impl SignalHeader {
    pub fn is_annotation(&self) -> bool {
        self.label.trim() == ANNOTATION_LABEL
    }

    /// Physical units per digital step.
    pub fn gain(&self) -> f64 {
        (self.physical_max - self.physical_min) / f64::from(self.digital_max - self.digital_min)
    }

    pub fn to_physical(&self, digital: i16) -> f64 {
        self.physical_min + f64::from(i32::from(digital) - self.digital_min) * self.gain()
    }
}

/// One physical-unit channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Channel {
    pub label: String,
    pub sample_rate: f64,
    pub samples: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sex {
    Female,
    Male,
}

/// A labelled multi-channel recording. Channels are immutable once the
/// recording is built; class labels come from the manifest only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recording {
    pub subject_id: SubjectId,
    pub class_label: ClassLabel,
    pub channels: Vec<Channel>,
    pub age: Option<f64>,
    pub sex: Option<Sex>,
}

impl Recording {
    pub fn channel_labels(&self) -> Vec<&str> {
        self.channels.iter().map(|c| c.label.as_str()).collect()
    }

    /// Length in seconds of the shortest channel.
    pub fn duration_seconds(&self) -> f64 {
        self.channels
            .iter()
            .map(|c| c.samples.len() as f64 / c.sample_rate)
            .fold(f64::INFINITY, f64::min)
    }
}

/// A parsed file before subject metadata is attached.
#[derive(Debug, Clone, PartialEq)]
pub struct EdfFile {
    pub header: EdfHeader,
    pub signals: Vec<SignalHeader>,
    /// Converted channels, annotation signals excluded.
    pub channels: Vec<Channel>,
}

impl EdfFile {
    pub fn into_recording(self, subject_id: SubjectId, class_label: ClassLabel) -> Recording {
        let sex = patient_sex(&self.header.patient_info);
        Recording {
            subject_id,
            class_label,
            channels: self.channels,
            age: None,
            sex,
        }
    }
}

/// EDF+ patient field: `code sex birthdate name`.
fn patient_sex(patient_info: &str) -> Option<Sex> {
    match patient_info.split_whitespace().nth(1) {
        Some("F") => Some(Sex::Female),
        Some("M") => Some(Sex::Male),
        _ => None,
    }
}

/// Normalized form used for label comparison: lowercase, no whitespace.
pub fn normalize_label(label: &str) -> String {
    label
        .chars()
        .filter(|c| !c.is_whitespace())
        .flat_map(char::to_lowercase)
        .collect()
}

/// Parse a complete EDF stream, converting every non-annotation signal.
pub fn parse_edf<R: Read>(source: R) -> Result<EdfFile, EdfError> {
    parse_edf_selected(source, None)
}

/// Parse an EDF stream, converting only the signals whose labels match
/// `wanted` (case-insensitive, whitespace ignored). Every data record is
/// still validated, but unwanted samples are skipped without conversion.
pub fn parse_edf_selected<R: Read>(
    mut source: R,
    wanted: Option<&[&str]>,
) -> Result<EdfFile, EdfError> {
    let (header, signals) = read_header(&mut source)?;

    let keep: Vec<bool> = signals
        .iter()
        .map(|s| {
            !s.is_annotation()
                && wanted.is_none_or(|w| {
                    let l = normalize_label(&s.label);
                    w.iter().any(|x| normalize_label(x) == l)
                })
        })
        .collect();

    let record_samples: usize = signals.iter().map(|s| s.samples_per_record).sum();
    let record_bytes = record_samples * 2;
    let expected = usize::try_from(header.n_data_records).ok();

    let mut channels: Vec<Channel> = signals
        .iter()
        .zip(&keep)
        .filter(|(_, k)| **k)
        .map(|(s, _)| Channel {
            label: s.label.trim().to_owned(),
            sample_rate: s.samples_per_record as f64 / header.record_duration,
            samples: Vec::with_capacity(expected.unwrap_or(0) * s.samples_per_record),
        })
        .collect();

    let mut buf = vec![0u8; record_bytes];
    let mut recovered = 0usize;
    loop {
        if expected.is_some_and(|n| recovered == n) {
            break;
        }
        let got = read_full(&mut source, &mut buf)?;
        if got == 0 && expected.is_none() {
            break;
        }
        if got < record_bytes {
            return Err(EdfError::TruncatedRecords {
                recovered,
                declared: header.n_data_records,
            });
        }

        let mut offset = 0;
        let mut out = channels.iter_mut();
        for (sig, &k) in signals.iter().zip(&keep) {
            let bytes = &buf[offset..offset + sig.samples_per_record * 2];
            offset += bytes.len();
            if !k {
                continue;
            }
            let ch = out.next().expect("one output channel per kept signal");
            ch.samples.extend(
                bytes
                    .chunks_exact(2)
                    .map(|b| sig.to_physical(i16::from_le_bytes([b[0], b[1]]))),
            );
        }
        recovered += 1;
    }

    Ok(EdfFile {
        header,
        signals,
        channels,
    })
}

/// Parse an EDF file from disk.
pub fn read_edf_file(path: &Path, wanted: Option<&[&str]>) -> Result<EdfFile, EdfError> {
    let file = std::fs::File::open(path)?;
    parse_edf_selected(io::BufReader::new(file), wanted)
}

/// Read and validate only the header blocks.
pub fn read_header<R: Read>(source: &mut R) -> Result<(EdfHeader, Vec<SignalHeader>), EdfError> {
    let mut fixed = [0u8; FIXED_HEADER_BYTES];
    let got = read_full(source, &mut fixed)?;
    if got < FIXED_HEADER_BYTES {
        return Err(EdfError::TruncatedHeader {
            needed: FIXED_HEADER_BYTES,
            available: got,
        });
    }

    let mut fields = FieldCursor::new(&fixed);
    let version = fields.text(8);
    let patient_info = fields.text(80);
    let recording_info = fields.text(80);
    let date = fields.text(8);
    let time = fields.text(8);
    let header_bytes: usize = parse_number("header_bytes", &fields.text(8))?;
    let reserved = fields.text(44);
    let n_data_records: i64 = parse_number("n_data_records", &fields.text(8))?;
    let record_duration: f64 = parse_number("record_duration", &fields.text(8))?;
    let n_signals: usize = parse_number("n_signals", &fields.text(4))?;

    if n_signals == 0 {
        return Err(malformed("n_signals", "0"));
    }
    if !(record_duration > 0.0) || !record_duration.is_finite() {
        return Err(malformed("record_duration", record_duration.to_string()));
    }
    if n_data_records < -1 {
        return Err(malformed("n_data_records", n_data_records.to_string()));
    }
    let expected_header = FIXED_HEADER_BYTES + SIGNAL_HEADER_BYTES * n_signals;
    if header_bytes != expected_header {
        return Err(malformed("header_bytes", header_bytes.to_string()));
    }
    if reserved.starts_with("EDF+D") {
        return Err(malformed("reserved", "discontinuous EDF+D recordings are not supported"));
    }
    let start_datetime = parse_start(&date, &time)?;

    let mut block = vec![0u8; SIGNAL_HEADER_BYTES * n_signals];
    let got = read_full(source, &mut block)?;
    if got < block.len() {
        return Err(EdfError::TruncatedHeader {
            needed: expected_header,
            available: FIXED_HEADER_BYTES + got,
        });
    }

    // Signal fields are stored column-wise: all labels, then all transducers...
    let mut cur = FieldCursor::new(&block);
    let mut column = |width: usize| -> Vec<String> { (0..n_signals).map(|_| cur.text(width)).collect() };
    let labels = column(16);
    let transducers = column(80);
    let dims = column(8);
    let pmins = column(8);
    let pmaxs = column(8);
    let dmins = column(8);
    let dmaxs = column(8);
    let prefilters = column(80);
    let spr = column(8);
    let reserveds = column(32);

    let mut signals = Vec::with_capacity(n_signals);
    for i in 0..n_signals {
        let sig = SignalHeader {
            label: labels[i].clone(),
            transducer: transducers[i].clone(),
            physical_dimension: dims[i].clone(),
            physical_min: parse_number("physical_min", &pmins[i])?,
            physical_max: parse_number("physical_max", &pmaxs[i])?,
            digital_min: parse_number("digital_min", &dmins[i])?,
            digital_max: parse_number("digital_max", &dmaxs[i])?,
            prefiltering: prefilters[i].clone(),
            samples_per_record: parse_number("samples_per_record", &spr[i])?,
            reserved: reserveds[i].clone(),
        };
        if sig.samples_per_record == 0 {
            return Err(malformed("samples_per_record", "0"));
        }
        if !sig.physical_min.is_finite() || !sig.physical_max.is_finite() {
            return Err(malformed("physical_min/physical_max", format!("{}/{}", pmins[i], pmaxs[i])));
        }
        if sig.digital_min == sig.digital_max {
            return Err(EdfError::DegenerateScaling {
                signal: sig.label.clone(),
                detail: format!("digital_min = digital_max = {}", sig.digital_min),
            });
        }
        if sig.digital_min > sig.digital_max {
            return Err(malformed("digital_min", format!("{} > digital_max {}", sig.digital_min, sig.digital_max)));
        }
        if sig.physical_min == sig.physical_max && !sig.is_annotation() {
            return Err(EdfError::DegenerateScaling {
                signal: sig.label.clone(),
                detail: format!("physical_min = physical_max = {}", sig.physical_min),
            });
        }
        signals.push(sig);
    }

    Ok((
        EdfHeader {
            version,
            patient_info,
            recording_info,
            start_datetime,
            header_bytes,
            reserved,
            n_data_records,
            record_duration,
            n_signals,
        },
        signals,
    ))
}

/// Keep only the `wanted` channels, in the order given.
pub fn select_channels(recording: &Recording, wanted: &[&str]) -> Result<Recording, EdfError> {
    if wanted.is_empty() {
        return Err(EdfError::NoChannelsRequested);
    }
    let channels = wanted
        .iter()
        .map(|w| {
            let key = normalize_label(w);
            recording
                .channels
                .iter()
                .find(|c| normalize_label(&c.label) == key)
                .cloned()
                .ok_or_else(|| EdfError::MissingChannel((*w).to_owned()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Recording {
        channels,
        ..recording.clone()
    })
}

fn parse_start(date: &str, time: &str) -> Result<NaiveDateTime, EdfError> {
    let nums = |s: &str| -> Option<[u32; 3]> {
        let parts: Vec<u32> = s
            .split(|c: char| !c.is_ascii_digit())
            .filter(|p| !p.is_empty())
            .map(|p| p.parse().ok())
            .collect::<Option<_>>()?;
        parts.try_into().ok()
    };
    let [d, m, y] = nums(date).ok_or_else(|| malformed("start_date", date))?;
    let [hh, mm, ss] = nums(time).ok_or_else(|| malformed("start_time", time))?;
    // EDF two-digit years: 85-99 are 1985-1999, the rest 2000-2084.
    let year = if y >= 85 { 1900 + y } else { 2000 + y };
    let date = NaiveDate::from_ymd_opt(year as i32, m, d).ok_or_else(|| malformed("start_date", date))?;
    let time = NaiveTime::from_hms_opt(hh, mm, ss).ok_or_else(|| malformed("start_time", time))?;
    Ok(date.and_time(time))
}

fn parse_number<T: std::str::FromStr>(field: &str, raw: &str) -> Result<T, EdfError> {
    raw.trim().parse().map_err(|_| malformed(field, raw))
}

struct FieldCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> FieldCursor<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, pos: 0 }
    }

    /// Fixed-width ASCII field with trailing padding removed.
    fn text(&mut self, width: usize) -> String {
        let raw = &self.bytes[self.pos..self.pos + width];
        self.pos += width;
        String::from_utf8_lossy(raw).trim_end_matches([' ', '\0']).to_owned()
    }
}

/// Fill `buf` as far as the stream allows; returns the number of bytes read.
fn read_full<R: Read>(source: &mut R, buf: &mut [u8]) -> io::Result<usize> {
    let mut filled = 0;
    while filled < buf.len() {
        match source.read(&mut buf[filled..]) {
            Ok(0) => break,
            Ok(n) => filled += n,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e),
        }
    }
    Ok(filled)
}
