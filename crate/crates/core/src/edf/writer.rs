//! Minimal EDF serializer for building test fixtures and synthetic inputs.

use super::{EdfHeader, SignalHeader};

/// A signal header with its digital samples, laid out record by record
/// (`n_data_records × samples_per_record` values).
#[derive(Debug, Clone, PartialEq)]
pub struct EdfSynthSignal {
    pub header: SignalHeader,
    pub digital: Vec<i16>,
}

/// Serialize a header and signals into EDF bytes.
///
/// `header.header_bytes` and `header.n_signals` are written as given so that
/// malformed files can be produced on purpose. Text fields longer than their
/// slot are truncated; numbers are shortened to fit.
///
/// # Panics
///
/// Panics if a signal's sample count does not equal
/// `n_data_records × samples_per_record` (or is not a whole number of records
/// when `n_data_records` is -1).
pub fn write_edf(header: &EdfHeader, signals: &[EdfSynthSignal]) -> Vec<u8> {
    let mut out = Vec::with_capacity(header.header_bytes);
    put_text(&mut out, &header.version, 8);
    put_text(&mut out, &header.patient_info, 80);
    put_text(&mut out, &header.recording_info, 80);
    put_text(&mut out, &header.start_datetime.format("%d.%m.%y").to_string(), 8);
    put_text(&mut out, &header.start_datetime.format("%H.%M.%S").to_string(), 8);
    put_text(&mut out, &header.header_bytes.to_string(), 8);
    put_text(&mut out, &header.reserved, 44);
    put_text(&mut out, &header.n_data_records.to_string(), 8);
    put_text(&mut out, &format_number(header.record_duration, 8), 8);
    put_text(&mut out, &header.n_signals.to_string(), 4);

    let hs: Vec<&SignalHeader> = signals.iter().map(|s| &s.header).collect();
    for s in &hs {
        put_text(&mut out, &s.label, 16);
    }
    for s in &hs {
        put_text(&mut out, &s.transducer, 80);
    }
    for s in &hs {
        put_text(&mut out, &s.physical_dimension, 8);
    }
    for s in &hs {
        put_text(&mut out, &format_number(s.physical_min, 8), 8);
    }
    for s in &hs {
        put_text(&mut out, &format_number(s.physical_max, 8), 8);
    }
    for s in &hs {
        put_text(&mut out, &s.digital_min.to_string(), 8);
    }
    for s in &hs {
        put_text(&mut out, &s.digital_max.to_string(), 8);
    }
    for s in &hs {
        put_text(&mut out, &s.prefiltering, 80);
    }
    for s in &hs {
        put_text(&mut out, &s.samples_per_record.to_string(), 8);
    }
    for s in &hs {
        put_text(&mut out, &s.reserved, 32);
    }

    let n_records = match usize::try_from(header.n_data_records) {
        Ok(n) => n,
        Err(_) => signals
            .first()
            .map(|s| s.digital.len() / s.header.samples_per_record)
            .unwrap_or(0),
    };
    for s in signals {
        assert_eq!(
            s.digital.len(),
            n_records * s.header.samples_per_record,
            "signal {:?} sample count does not match record layout",
            s.header.label
        );
    }
    for r in 0..n_records {
        for s in signals {
            let spr = s.header.samples_per_record;
            for v in &s.digital[r * spr..(r + 1) * spr] {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
    }
    out
}

fn put_text(out: &mut Vec<u8>, text: &str, width: usize) {
    let bytes = text.as_bytes();
    let n = bytes.len().min(width);
    out.extend_from_slice(&bytes[..n]);
    out.extend(std::iter::repeat_n(b' ', width - n));
}

/// Shortest decimal rendering of `value` that fits in `width` characters.
pub(crate) fn format_number(value: f64, width: usize) -> String {
    let plain = format!("{value}");
    if plain.len() <= width {
        return plain;
    }
    for decimals in (0..width).rev() {
        let s = format!("{value:.decimals$}");
        if s.len() <= width {
            return s;
        }
    }
    format!("{value:e}")
}
