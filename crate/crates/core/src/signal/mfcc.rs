//! MFCC extraction: pre-emphasis, Hamming-windowed frames, FFT power
//! spectrum, triangular mel filterbank, log with floor, orthonormal DCT-II.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::signal::wav::{resample_linear, AudioTrack};

#[derive(Debug, Clone)]
pub struct MfccConfig {
    pub sample_rate: u32,
    pub window_ms: u32,
    pub hop_ms: u32,
    pub fft_size: usize,
    pub mel_filters: usize,
    pub cepstra: usize,
    pub preemphasis: f64,
    pub log_floor: f64,
}

impl Default for MfccConfig {
    fn default() -> Self {
        MfccConfig {
            sample_rate: 16000,
            window_ms: 25,
            hop_ms: 5,
            fft_size: 512,
            mel_filters: 26,
            cepstra: 13,
            preemphasis: 0.97,
            log_floor: 1e-10,
        }
    }
}

impl MfccConfig {
    pub fn window_len(&self) -> usize {
        (self.sample_rate as usize * self.window_ms as usize) / 1000
    }

    pub fn hop_len(&self) -> usize {
        (self.sample_rate as usize * self.hop_ms as usize) / 1000
    }
}

/// Center of frame `idx` in milliseconds.
pub fn frame_center_ms(idx: usize, cfg: &MfccConfig) -> f64 {
    let center_sample = idx * cfg.hop_len() + cfg.window_len() / 2;
    center_sample as f64 * 1000.0 / cfg.sample_rate as f64
}

fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

/// Triangular filter weights evaluated at the FFT bin frequencies.
/// Filter centers are equally spaced on the mel scale from 0 to Nyquist.
pub(crate) fn mel_filterbank(cfg: &MfccConfig) -> Vec<Vec<f64>> {
    let n_bins = cfg.fft_size / 2 + 1;
    let nyquist = cfg.sample_rate as f64 / 2.0;
    let max_mel = hz_to_mel(nyquist);
    let points: Vec<f64> = (0..cfg.mel_filters + 2)
        .map(|i| mel_to_hz(max_mel * i as f64 / (cfg.mel_filters + 1) as f64))
        .collect();
    let bin_hz = |k: usize| k as f64 * cfg.sample_rate as f64 / cfg.fft_size as f64;

    (1..=cfg.mel_filters)
        .map(|m| {
            let (lo, center, hi) = (points[m - 1], points[m], points[m + 1]);
            (0..n_bins)
                .map(|k| {
                    let f = bin_hz(k);
                    let rising = (f - lo) / (center - lo);
                    let falling = (hi - f) / (hi - center);
                    rising.min(falling).max(0.0)
                })
                .collect()
        })
        .collect()
}

/// Orthonormal DCT-II basis: `cepstra` x `mel_filters`.
pub(crate) fn dct_basis(cepstra: usize, mel_filters: usize) -> Vec<Vec<f64>> {
    let m = mel_filters as f64;
    (0..cepstra)
        .map(|k| {
            let scale = if k == 0 { (1.0 / m).sqrt() } else { (2.0 / m).sqrt() };
            (0..mel_filters)
                .map(|j| {
                    scale
                        * (std::f64::consts::PI * k as f64 * (2 * j + 1) as f64 / (2.0 * m)).cos()
                })
                .collect()
        })
        .collect()
}

/// One 13-coefficient vector per hop. The track is resampled to the
/// configured rate first; tracks shorter than one window are an error.
pub fn mfcc_frames(track: &AudioTrack, cfg: &MfccConfig) -> Result<Vec<Vec<f64>>> {
    let samples = if track.sample_rate == cfg.sample_rate {
        track.samples.clone()
    } else {
        resample_linear(&track.samples, track.sample_rate, cfg.sample_rate)
    };
    let window = cfg.window_len();
    let hop = cfg.hop_len();
    if samples.len() < window {
        return Err(Error::invalid(format!(
            "mfcc_frames: track of {} samples is shorter than one {window}-sample window",
            samples.len()
        )));
    }
    if cfg.fft_size < window {
        return Err(Error::invalid("mfcc_frames: fft_size smaller than the window"));
    }

    // Pre-emphasis over the whole signal; y[0] = x[0].
    let mut emphasized = Vec::with_capacity(samples.len());
    emphasized.push(samples[0]);
    for i in 1..samples.len() {
        emphasized.push(samples[i] - cfg.preemphasis * samples[i - 1]);
    }

    let hamming: Vec<f64> = (0..window)
        .map(|n| {
            0.54 - 0.46 * (2.0 * std::f64::consts::PI * n as f64 / (window - 1) as f64).cos()
        })
        .collect();
    let filterbank = mel_filterbank(cfg);
    let dct = dct_basis(cfg.cepstra, cfg.mel_filters);

    let mut planner = FftPlanner::<f64>::new();
    let fft = planner.plan_fft_forward(cfg.fft_size);
    let n_bins = cfg.fft_size / 2 + 1;

    let n_frames = (samples.len() - window) / hop + 1;
    let mut frames = Vec::with_capacity(n_frames);
    let mut buf = vec![Complex::new(0.0, 0.0); cfg.fft_size];
    for f in 0..n_frames {
        let start = f * hop;
        for (n, slot) in buf.iter_mut().enumerate() {
            *slot = if n < window {
                Complex::new(emphasized[start + n] * hamming[n], 0.0)
            } else {
                Complex::new(0.0, 0.0)
            };
        }
        fft.process(&mut buf);
        let power: Vec<f64> = buf[..n_bins].iter().map(|c| c.norm_sqr()).collect();

        let log_energies: Vec<f64> = filterbank
            .iter()
            .map(|filter| {
                let e: f64 = filter.iter().zip(&power).map(|(w, p)| w * p).sum();
                e.max(cfg.log_floor).ln()
            })
            .collect();

        let coeffs: Vec<f64> = dct
            .iter()
            .map(|row| row.iter().zip(&log_energies).map(|(b, e)| b * e).sum())
            .collect();
        frames.push(coeffs);
    }
    Ok(frames)
}
