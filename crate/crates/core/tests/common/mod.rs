//! Independent reference implementations (oracles) used by the acceptance
//! suite. Each oracle computes its quantity by direct enumeration or naive
//! summation, sharing no code with the implementation path it checks.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use sleuth::baselines::CrfParams;
use sleuth::nn::tensor::dot;

// ---------------------------------------------------------------------------
// DTW: exhaustive enumeration of every monotone path.
// ---------------------------------------------------------------------------

/// Minimum total cost over all monotone paths from (0,0) to (m,n) under the
/// moves match / skip-utterance / skip-cue. Pure recursion, no memoization:
/// every path is enumerated. Costs accumulate suffix-first, matching the
/// associativity of a front-to-back path walk.
pub fn brute_dtw_min_cost(costs: &[Vec<f64>], m: usize, n: usize, skip: f64) -> f64 {
    fn rec(costs: &[Vec<f64>], i: usize, j: usize, m: usize, n: usize, skip: f64) -> f64 {
        if i == m && j == n {
            return 0.0;
        }
        let mut best = f64::INFINITY;
        if i < m && j < n {
            best = best.min(costs[i][j] + rec(costs, i + 1, j + 1, m, n, skip));
        }
        if i < m {
            best = best.min(skip + rec(costs, i + 1, j, m, n, skip));
        }
        if j < n {
            best = best.min(skip + rec(costs, i, j + 1, m, n, skip));
        }
        best
    }
    rec(costs, 0, 0, m, n, skip)
}

// ---------------------------------------------------------------------------
// Linear-chain CRF: brute force over all 2^T labelings.
// ---------------------------------------------------------------------------

pub struct BruteCrf {
    pub log_likelihood: f64,
    pub marginals: Vec<[f64; 2]>,
    pub viterbi: Vec<u8>,
}

fn labeling_score(features: &[Vec<f64>], labels: &[u8], params: &CrfParams) -> f64 {
    let mut score = 0.0;
    for (t, feat) in features.iter().enumerate() {
        score += dot(params.unary.row(labels[t] as usize), feat);
        if t > 0 {
            score += params.trans[labels[t - 1] as usize][labels[t] as usize];
        }
    }
    score
}

/// Enumerates every labeling of the chain. The Viterbi argmax prefers the
/// lexicographically smaller labeling on exact score ties (label 0 first).
pub fn brute_crf(features: &[Vec<f64>], gold: &[u8], params: &CrfParams) -> BruteCrf {
    let t_len = features.len();
    assert!(t_len >= 1 && t_len <= 20, "brute force needs a short chain");
    let mut scores = Vec::with_capacity(1 << t_len);
    let mut labels = vec![0u8; t_len];
    // Lexicographic enumeration: bit t of `mask` is position t's label, so
    // increasing mask with position-0 in the LOW bit is not lexicographic;
    // build labels explicitly from the most significant position instead.
    for mask in 0..(1usize << t_len) {
        for (t, l) in labels.iter_mut().enumerate() {
            *l = ((mask >> (t_len - 1 - t)) & 1) as u8;
        }
        scores.push((labeling_score(features, &labels, params), labels.clone()));
    }
    let max_score = scores
        .iter()
        .map(|(s, _)| *s)
        .fold(f64::NEG_INFINITY, f64::max);
    let log_z = max_score
        + scores
            .iter()
            .map(|(s, _)| (s - max_score).exp())
            .sum::<f64>()
            .ln();

    let mut marginals = vec![[0.0f64; 2]; t_len];
    for (s, l) in &scores {
        let p = (s - log_z).exp();
        for (t, &label) in l.iter().enumerate() {
            marginals[t][label as usize] += p;
        }
    }

    // enumeration order is lexicographic, so strict `>` keeps the first
    // (lexicographically smallest) argmax
    let mut best: Option<(f64, Vec<u8>)> = None;
    for (s, l) in &scores {
        if best.as_ref().is_none_or(|(bs, _)| *s > *bs) {
            best = Some((*s, l.clone()));
        }
    }

    BruteCrf {
        log_likelihood: labeling_score(features, gold, params) - log_z,
        marginals,
        viterbi: best.expect("non-empty").1,
    }
}

// ---------------------------------------------------------------------------
// MFCC: direct-DFT reference sharing no code with the pipeline.
// ---------------------------------------------------------------------------

pub struct ReferenceMfcc {
    pub sample_rate: f64,
    pub window: usize,
    pub hop: usize,
    pub fft_size: usize,
    pub mel_filters: usize,
    pub cepstra: usize,
    pub preemphasis: f64,
    pub log_floor: f64,
}

impl Default for ReferenceMfcc {
    fn default() -> Self {
        ReferenceMfcc {
            sample_rate: 16000.0,
            window: 400,
            hop: 80,
            fft_size: 512,
            mel_filters: 26,
            cepstra: 13,
            preemphasis: 0.97,
            log_floor: 1e-10,
        }
    }
}

impl ReferenceMfcc {
    fn mel(&self, hz: f64) -> f64 {
        2595.0 * (1.0 + hz / 700.0).log10()
    }

    fn hz(&self, mel: f64) -> f64 {
        700.0 * (10f64.powf(mel / 2595.0) - 1.0)
    }

    pub fn filter_center_hz(&self, m: usize) -> f64 {
        let top = self.mel(self.sample_rate / 2.0);
        self.hz(top * (m + 1) as f64 / (self.mel_filters + 1) as f64)
    }

    /// Filterbank energies of one frame via a naive O(N^2) DFT.
    pub fn frame_energies(&self, frame: &[f64]) -> Vec<f64> {
        assert_eq!(frame.len(), self.window);
        let n = self.fft_size;
        let bins = n / 2 + 1;
        // windowed, zero-padded
        let mut x = vec![0.0f64; n];
        for (i, &v) in frame.iter().enumerate() {
            let w = 0.54
                - 0.46 * (2.0 * std::f64::consts::PI * i as f64 / (self.window - 1) as f64).cos();
            x[i] = v * w;
        }
        let mut power = vec![0.0f64; bins];
        for (k, p) in power.iter_mut().enumerate() {
            let mut re = 0.0;
            let mut im = 0.0;
            for (t, &v) in x.iter().enumerate() {
                let angle = -2.0 * std::f64::consts::PI * k as f64 * t as f64 / n as f64;
                re += v * angle.cos();
                im += v * angle.sin();
            }
            *p = re * re + im * im;
        }

        let top = self.mel(self.sample_rate / 2.0);
        let point = |i: usize| self.hz(top * i as f64 / (self.mel_filters + 1) as f64);
        (0..self.mel_filters)
            .map(|m| {
                let (lo, center, hi) = (point(m), point(m + 1), point(m + 2));
                let mut energy = 0.0;
                for (k, &p) in power.iter().enumerate() {
                    let f = k as f64 * self.sample_rate / n as f64;
                    let weight = ((f - lo) / (center - lo))
                        .min((hi - f) / (hi - center))
                        .max(0.0);
                    energy += weight * p;
                }
                energy
            })
            .collect()
    }

    /// Full reference pipeline over a signal.
    pub fn frames(&self, signal: &[f64]) -> Vec<Vec<f64>> {
        assert!(signal.len() >= self.window);
        let mut pre = vec![signal[0]];
        for i in 1..signal.len() {
            pre.push(signal[i] - self.preemphasis * signal[i - 1]);
        }
        let n_frames = (signal.len() - self.window) / self.hop + 1;
        (0..n_frames)
            .map(|f| {
                let frame = &pre[f * self.hop..f * self.hop + self.window];
                let energies = self.frame_energies(frame);
                let logs: Vec<f64> = energies.iter().map(|&e| e.max(self.log_floor).ln()).collect();
                (0..self.cepstra)
                    .map(|k| {
                        let m = self.mel_filters as f64;
                        let scale = if k == 0 { (1.0 / m).sqrt() } else { (2.0 / m).sqrt() };
                        scale
                            * logs
                                .iter()
                                .enumerate()
                                .map(|(j, &l)| {
                                    l * (std::f64::consts::PI * k as f64 * (2 * j + 1) as f64
                                        / (2.0 * m))
                                        .cos()
                                })
                                .sum::<f64>()
                    })
                    .collect()
            })
            .collect()
    }
}

// ---------------------------------------------------------------------------
// Shared helpers for randomized acceptance fixtures.
// ---------------------------------------------------------------------------

pub fn random_token_lists(rng: &mut ChaCha8Rng, len: usize, alphabet: usize) -> Vec<Vec<String>> {
    (0..len)
        .map(|_| {
            (0..rng.random_range(1..=4))
                .map(|_| format!("t{}", rng.random_range(0..alphabet)))
                .collect()
        })
        .collect()
}
