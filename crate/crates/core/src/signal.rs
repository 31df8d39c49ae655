//! Time-domain recordings to blocked power spectra.
//!
//! A [`Recording`] is band-limited with a zero-phase FFT mask, turned into a
//! per-channel one-sided power spectral density (Welch averaging of
//! Hann-tapered periodograms) and mapped onto a uniform frequency grid. The
//! resulting [`SpectrumMatrix`] is cut column-wise into equal
//! [`SpectralBlock`]s ordered from low to high frequency.

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::Matrix;

/// Multichannel time-domain signal, one row per channel.
#[derive(Debug, Clone)]
pub struct Recording {
    sample_rate: f64,
    data: Matrix,
    channel_names: Vec<String>,
    pub class_label: Option<String>,
}

impl Recording {
    pub fn new(data: Matrix, sample_rate: f64) -> Result<Self> {
        if !(sample_rate.is_finite() && sample_rate > 0.0) {
            return Err(Error::Parameter(format!(
                "sample rate must be positive, got {sample_rate}"
            )));
        }
        let channel_names = (0..data.rows()).map(|i| format!("ch{i}")).collect();
        Ok(Self {
            sample_rate,
            data,
            channel_names,
            class_label: None,
        })
    }

    pub fn with_channel_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.channels() {
            return Err(Error::Dimension(format!(
                "{} channel names for {} channels",
                names.len(),
                self.channels()
            )));
        }
        self.channel_names = names;
        Ok(self)
    }

    pub fn with_class_label(mut self, label: impl Into<String>) -> Self {
        self.class_label = Some(label.into());
        self
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn channels(&self) -> usize {
        self.data.rows()
    }

    pub fn samples(&self) -> usize {
        self.data.cols()
    }

    pub fn duration_secs(&self) -> f64 {
        self.samples() as f64 / self.sample_rate
    }

    pub fn data(&self) -> &Matrix {
        &self.data
    }

    pub fn channel_names(&self) -> &[String] {
        &self.channel_names
    }

    fn replace_data(&self, data: Matrix) -> Recording {
        Recording {
            sample_rate: self.sample_rate,
            data,
            channel_names: self.channel_names.clone(),
            class_label: self.class_label.clone(),
        }
    }
}

/// Per-channel PSD on a uniform grid; column `j` is centred at
/// `freq_start + (j + 0.5)·(freq_end − freq_start)/cols`.
#[derive(Debug, Clone)]
pub struct SpectrumMatrix {
    pub freq_start: f64,
    pub freq_end: f64,
    data: Matrix,
    pub channel_names: Vec<String>,
}

impl SpectrumMatrix {
    pub fn new(freq_start: f64, freq_end: f64, data: Matrix) -> Result<Self> {
        if !(freq_start.is_finite() && freq_end.is_finite() && freq_start < freq_end) {
            return Err(Error::Parameter(format!(
                "frequency range [{freq_start}, {freq_end}] is empty"
            )));
        }
        if data.as_slice().iter().any(|&v| v < 0.0) {
            return Err(Error::Parameter("PSD entries must be nonnegative".into()));
        }
        let channel_names = (0..data.rows()).map(|i| format!("ch{i}")).collect();
        Ok(Self {
            freq_start,
            freq_end,
            data,
            channel_names,
        })
    }

    pub fn channels(&self) -> usize {
        self.data.rows()
    }

    pub fn cols(&self) -> usize {
        self.data.cols()
    }

    pub fn data(&self) -> &Matrix {
        &self.data
    }

    pub fn column_width(&self) -> f64 {
        (self.freq_end - self.freq_start) / self.cols() as f64
    }

    pub fn column_center(&self, j: usize) -> f64 {
        self.freq_start + (j as f64 + 0.5) * self.column_width()
    }

    /// Column index whose bin contains `freq`, if inside the grid.
    pub fn column_of(&self, freq: f64) -> Option<usize> {
        if freq < self.freq_start || freq > self.freq_end {
            return None;
        }
        let j = ((freq - self.freq_start) / self.column_width()).floor() as usize;
        Some(j.min(self.cols() - 1))
    }

    /// Integrated power of one channel over the grid.
    pub fn band_power(&self, channel: usize) -> f64 {
        self.data.row(channel).iter().sum::<f64>() * self.column_width()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockingScheme {
    pub block_width: usize,
    pub num_blocks: usize,
    /// Hz covered by each block.
    pub delta_f: f64,
}

#[derive(Debug, Clone)]
pub struct SpectralBlock {
    pub index: usize,
    pub freq_range: (f64, f64),
    pub data: Matrix,
}

/// Welch estimator settings. `segment_secs = None` uses one segment spanning
/// the whole recording.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PsdConfig {
    pub segment_secs: Option<f64>,
    pub overlap: f64,
}

impl Default for PsdConfig {
    fn default() -> Self {
        Self {
            segment_secs: None,
            overlap: 0.5,
        }
    }
}

/// Zero-phase band-pass: every FFT bin with `|f|` outside `[low, high]` is
/// zeroed, the rest pass with unit gain.
pub fn bandpass_filter(rec: &Recording, low: f64, high: f64) -> Result<Recording> {
    let nyquist = rec.sample_rate / 2.0;
    if !(low > 0.0 && low < high && high < nyquist) {
        return Err(Error::Parameter(format!(
            "band edges must satisfy 0 < low < high < {nyquist}, got [{low}, {high}]"
        )));
    }
    let n = rec.samples();
    let mut planner = FftPlanner::<f64>::new();
    let forward = planner.plan_fft_forward(n);
    let inverse = planner.plan_fft_inverse(n);
    let bin_hz = rec.sample_rate / n as f64;

    let mut out = Vec::with_capacity(rec.channels() * n);
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    for row in rec.data.iter_rows() {
        for (b, &x) in buf.iter_mut().zip(row) {
            *b = Complex64::new(x, 0.0);
        }
        forward.process(&mut buf);
        for (k, b) in buf.iter_mut().enumerate() {
            let f = k.min(n - k) as f64 * bin_hz;
            if f < low || f > high {
                *b = Complex64::new(0.0, 0.0);
            }
        }
        inverse.process(&mut buf);
        let scale = 1.0 / n as f64;
        out.extend(buf.iter().map(|c| c.re * scale));
    }
    Ok(rec.replace_data(Matrix::new(rec.channels(), n, out)?))
}

/// One-sided PSD (power per Hz) of every channel, aggregated onto `out_cols`
/// uniform bins spanning `[freq_start, freq_end]`.
///
/// Output bins that contain native FFT bins take their mean; bins narrower
/// than the native resolution are linearly interpolated at their centre.
pub fn compute_psd(
    rec: &Recording,
    freq_start: f64,
    freq_end: f64,
    out_cols: usize,
    config: &PsdConfig,
) -> Result<SpectrumMatrix> {
    let nyquist = rec.sample_rate / 2.0;
    if out_cols == 0 {
        return Err(Error::Parameter("out_cols must be at least 1".into()));
    }
    if !(freq_start >= 0.0 && freq_start < freq_end && freq_end <= nyquist) {
        return Err(Error::Parameter(format!(
            "PSD range must satisfy 0 <= start < end <= {nyquist}, got [{freq_start}, {freq_end}]"
        )));
    }
    if !(0.0..1.0).contains(&config.overlap) {
        return Err(Error::Parameter(format!(
            "overlap must lie in [0, 1), got {}",
            config.overlap
        )));
    }
    let n = rec.samples();
    let seg_len = match config.segment_secs {
        Some(secs) => (secs * rec.sample_rate).round() as usize,
        None => n,
    };
    if seg_len < 2 || seg_len > n {
        return Err(Error::InsufficientData(format!(
            "recording has {n} samples, one PSD window needs {seg_len}"
        )));
    }

    let welch = Welch::new(seg_len, config.overlap, rec.sample_rate);
    let native_hz = rec.sample_rate / seg_len as f64;
    let grid = GridMap::new(freq_start, freq_end, out_cols, native_hz, welch.bins());

    let mut out = Vec::with_capacity(rec.channels() * out_cols);
    for row in rec.data.iter_rows() {
        let native = welch.estimate(row);
        grid.resample(&native, &mut out);
    }
    let mut spectrum = SpectrumMatrix::new(freq_start, freq_end, Matrix::new(rec.channels(), out_cols, out)?)?;
    spectrum.channel_names = rec.channel_names.clone();
    Ok(spectrum)
}

struct Welch {
    fft: Arc<dyn Fft<f64>>,
    window: Vec<f64>,
    step: usize,
    scale: f64,
}

impl Welch {
    fn new(seg_len: usize, overlap: f64, sample_rate: f64) -> Self {
        let window: Vec<f64> = (0..seg_len)
            .map(|i| {
                0.5 - 0.5 * (2.0 * std::f64::consts::PI * i as f64 / seg_len as f64).cos()
            })
            .collect();
        let energy: f64 = window.iter().map(|w| w * w).sum();
        let step = (((1.0 - overlap) * seg_len as f64).round() as usize).max(1);
        Self {
            fft: FftPlanner::new().plan_fft_forward(seg_len),
            window,
            step,
            scale: 1.0 / (sample_rate * energy),
        }
    }

    fn seg_len(&self) -> usize {
        self.window.len()
    }

    fn bins(&self) -> usize {
        self.seg_len() / 2 + 1
    }

    fn estimate(&self, x: &[f64]) -> Vec<f64> {
        let len = self.seg_len();
        let mut acc = vec![0.0; self.bins()];
        let mut buf = vec![Complex64::new(0.0, 0.0); len];
        let mut segments = 0usize;
        let mut start = 0;
        while start + len <= x.len() {
            let seg = &x[start..start + len];
            let mean = seg.iter().sum::<f64>() / len as f64;
            for ((b, &s), &w) in buf.iter_mut().zip(seg).zip(&self.window) {
                *b = Complex64::new((s - mean) * w, 0.0);
            }
            self.fft.process(&mut buf);
            for (a, b) in acc.iter_mut().zip(&buf) {
                *a += b.norm_sqr();
            }
            segments += 1;
            start += self.step;
        }
        let nyquist_bin = (len % 2 == 0).then_some(len / 2);
        let base = self.scale / segments as f64;
        for (k, a) in acc.iter_mut().enumerate() {
            let one_sided = if k == 0 || Some(k) == nyquist_bin { 1.0 } else { 2.0 };
            *a *= base * one_sided;
        }
        acc
    }
}

/// Precomputed mapping from native FFT bins onto the output grid.
struct GridMap {
    /// Per output column: range of native bins it averages, or the pair of
    /// neighbours and weight used for interpolation.
    cols: Vec<GridSource>,
}

enum GridSource {
    Mean(usize, usize),
    Lerp(usize, usize, f64),
}

impl GridMap {
    fn new(start: f64, end: f64, out_cols: usize, native_hz: f64, native_bins: usize) -> Self {
        let width = (end - start) / out_cols as f64;
        let last = native_bins - 1;
        let cols = (0..out_cols)
            .map(|j| {
                let lo = start + j as f64 * width;
                let hi = if j + 1 == out_cols { end } else { lo + width };
                let first = (lo / native_hz).ceil() as usize;
                // Right-open bins, except the last which is closed.
                let mut past = (hi / native_hz).ceil() as usize;
                if j + 1 == out_cols && (past as f64) * native_hz <= hi {
                    past += 1;
                }
                let past = past.min(native_bins);
                if first < past {
                    GridSource::Mean(first, past)
                } else {
                    let pos = (lo + 0.5 * width) / native_hz;
                    let left = (pos.floor() as usize).min(last);
                    let right = (left + 1).min(last);
                    GridSource::Lerp(left, right, pos - left as f64)
                }
            })
            .collect();
        Self { cols }
    }

    fn resample(&self, native: &[f64], out: &mut Vec<f64>) {
        for src in &self.cols {
            let v = match *src {
                GridSource::Mean(a, b) => native[a..b].iter().sum::<f64>() / (b - a) as f64,
                GridSource::Lerp(l, r, t) => {
                    let t = t.clamp(0.0, 1.0);
                    native[l] * (1.0 - t) + native[r] * t
                }
            };
            out.push(v.max(0.0));
        }
    }
}

/// Cuts the spectrum into contiguous blocks of `block_width` columns.
pub fn split_blocks(
    spec: &SpectrumMatrix,
    block_width: usize,
) -> Result<(Vec<SpectralBlock>, BlockingScheme)> {
    let cols = spec.cols();
    if block_width == 0 || cols % block_width != 0 {
        return Err(Error::Blocking(format!(
            "{cols} columns are not divisible into blocks of width {block_width}"
        )));
    }
    let num_blocks = cols / block_width;
    let col_width = spec.column_width();
    let indices: Vec<usize> = (0..block_width).collect();
    let blocks = (0..num_blocks)
        .map(|b| {
            let first = b * block_width;
            let cols: Vec<usize> = indices.iter().map(|i| first + i).collect();
            let lo = spec.freq_start + first as f64 * col_width;
            let hi = if b + 1 == num_blocks {
                spec.freq_end
            } else {
                spec.freq_start + (first + block_width) as f64 * col_width
            };
            Ok(SpectralBlock {
                index: b,
                freq_range: (lo, hi),
                data: spec.data.select_columns(&cols)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let scheme = BlockingScheme {
        block_width,
        num_blocks,
        delta_f: (spec.freq_end - spec.freq_start) / num_blocks as f64,
    };
    Ok((blocks, scheme))
}
