//! On-disk formats: recordings (binary and CSV), spectra, feature vectors
//! and dataset manifests.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::les::{FeatureVector, LesFeature};
use crate::numerics::Matrix;
use crate::signal::{Recording, SpectrumMatrix};

const MAGIC: &[u8; 4] = b"EEGR";
const VERSION: u32 = 1;
const HEADER_LEN: usize = 32;

/// Little-endian layout: magic, version (u32), channels (u32), reserved
/// (u32), samples (u64), sample rate (f64), then row-major f64 samples.
pub fn write_recording_binary<W: Write>(rec: &Recording, out: W) -> Result<()> {
    let mut out = BufWriter::new(out);
    out.write_all(MAGIC)?;
    out.write_all(&VERSION.to_le_bytes())?;
    out.write_all(&(rec.channels() as u32).to_le_bytes())?;
    out.write_all(&0u32.to_le_bytes())?;
    out.write_all(&(rec.samples() as u64).to_le_bytes())?;
    out.write_all(&rec.sample_rate().to_le_bytes())?;
    for v in rec.data().as_slice() {
        out.write_all(&v.to_le_bytes())?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_recording_binary<R: Read>(input: R) -> Result<Recording> {
    let mut input = BufReader::new(input);
    let mut header = [0u8; HEADER_LEN];
    input.read_exact(&mut header)?;
    if &header[0..4] != MAGIC {
        return Err(Error::Format("missing EEGR magic".into()));
    }
    let u32_at = |i: usize| u32::from_le_bytes(header[i..i + 4].try_into().unwrap());
    let version = u32_at(4);
    if version != VERSION {
        return Err(Error::Format(format!("unsupported recording version {version}")));
    }
    let channels = u32_at(8) as usize;
    let samples = u64::from_le_bytes(header[16..24].try_into().unwrap()) as usize;
    let sample_rate = f64::from_le_bytes(header[24..32].try_into().unwrap());
    let len = channels
        .checked_mul(samples)
        .ok_or_else(|| Error::Format("recording size overflows".into()))?;
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    if bytes.len() != len * 8 {
        return Err(Error::Format(format!(
            "expected {} data bytes, found {}",
            len * 8,
            bytes.len()
        )));
    }
    let data = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Recording::new(Matrix::new(channels, samples, data)?, sample_rate)
}

/// A `#sample_rate_hz=<fs>` line, a header `channel,0,1,…`, then one row per
/// channel starting with its name.
pub fn write_recording_csv<W: Write>(rec: &Recording, out: W) -> Result<()> {
    let mut out = BufWriter::new(out);
    writeln!(out, "#sample_rate_hz={}", rec.sample_rate())?;
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["channel".to_string()];
    header.extend((0..rec.samples()).map(|i| i.to_string()));
    w.write_record(&header)?;
    for (name, row) in rec.channel_names().iter().zip(rec.data().iter_rows()) {
        let mut record = vec![name.clone()];
        record.extend(row.iter().map(|v| v.to_string()));
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_recording_csv<R: Read>(input: R) -> Result<Recording> {
    let mut text = String::new();
    BufReader::new(input).read_to_string(&mut text)?;
    let (first, rest) = text.split_once('\n').unwrap_or((&text, ""));
    let sample_rate: f64 = first
        .trim()
        .strip_prefix("#sample_rate_hz=")
        .ok_or_else(|| Error::Format("first line must be #sample_rate_hz=<value>".into()))?
        .parse()
        .map_err(|e| Error::Format(format!("bad sample rate: {e}")))?;
    let mut reader = csv::Reader::from_reader(rest.as_bytes());
    let mut names = Vec::new();
    let mut data = Vec::new();
    let mut samples = None;
    for record in reader.records() {
        let record = record?;
        let mut fields = record.iter();
        names.push(fields.next().unwrap_or_default().to_string());
        let row = fields.map(parse_f64).collect::<Result<Vec<_>>>()?;
        if *samples.get_or_insert(row.len()) != row.len() {
            return Err(Error::Format("channels have different lengths".into()));
        }
        data.extend(row);
    }
    let samples = samples.ok_or_else(|| Error::Format("recording has no channels".into()))?;
    Recording::new(Matrix::new(names.len(), samples, data)?, sample_rate)?.with_channel_names(names)
}

fn parse_f64(s: &str) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|e| Error::Format(format!("bad number {s:?}: {e}")))
}

/// Header row of column-centre frequencies, then one row per channel.
pub fn write_spectrum_csv<W: Write>(spec: &SpectrumMatrix, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["channel".to_string()];
    header.extend((0..spec.cols()).map(|j| spec.column_center(j).to_string()));
    w.write_record(&header)?;
    for (name, row) in spec.channel_names.iter().zip(spec.data().iter_rows()) {
        let mut record = vec![name.clone()];
        record.extend(row.iter().map(|v| v.to_string()));
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct FeatureRow {
    block_index: usize,
    freq_lo: f64,
    freq_hi: f64,
    les_value: f64,
}

pub fn write_features_csv<W: Write>(features: &FeatureVector, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for f in features.features() {
        w.serialize(FeatureRow {
            block_index: f.block_index,
            freq_lo: f.freq_lo,
            freq_hi: f.freq_hi,
            les_value: f.value,
        })?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_features_csv<R: Read>(input: R) -> Result<FeatureVector> {
    let mut reader = csv::Reader::from_reader(input);
    let features = reader
        .deserialize::<FeatureRow>()
        .map(|row| {
            let row = row?;
            Ok(LesFeature {
                block_index: row.block_index,
                freq_lo: row.freq_lo,
                freq_hi: row.freq_hi,
                value: row.les_value,
                flagged_rows: 0,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    FeatureVector::new(features)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ManifestKind {
    Recordings,
    Features,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    /// Relative to the manifest's directory unless absolute.
    pub path: PathBuf,
    pub label: String,
}

/// Binds data files to class labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub kind: ManifestKind,
    pub class_names: Vec<String>,
    pub entries: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Manifest> {
        let m: Manifest = serde_json::from_reader(BufReader::new(File::open(path)?))?;
        if let Some(e) = m.entries.iter().find(|e| !m.class_names.contains(&e.label)) {
            return Err(Error::Format(format!(
                "entry {} has unknown label {:?}",
                e.path.display(),
                e.label
            )));
        }
        Ok(m)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut out = BufWriter::new(File::create(path)?);
        serde_json::to_writer_pretty(&mut out, self)?;
        out.write_all(b"\n")?;
        out.flush()?;
        Ok(())
    }

    /// Class code of each entry.
    pub fn labels(&self) -> Vec<usize> {
        self.entries
            .iter()
            .map(|e| self.class_names.iter().position(|c| *c == e.label).unwrap_or(usize::MAX))
            .collect()
    }

    pub fn resolve(&self, manifest_path: &Path, entry: &ManifestEntry) -> PathBuf {
        if entry.path.is_absolute() {
            entry.path.clone()
        } else {
            manifest_path
                .parent()
                .unwrap_or_else(|| Path::new("."))
                .join(&entry.path)
        }
    }
}

/// Reads a recording, choosing the format from the extension (`.csv` or
/// binary otherwise).
pub fn read_recording(path: &Path) -> Result<Recording> {
    let file = File::open(path)?;
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
        read_recording_csv(file)
    } else {
        read_recording_binary(file)
    }
}

pub fn write_recording(rec: &Recording, path: &Path) -> Result<()> {
    let file = File::create(path)?;
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
        write_recording_csv(rec, file)
    } else {
        write_recording_binary(rec, file)
    }
}
