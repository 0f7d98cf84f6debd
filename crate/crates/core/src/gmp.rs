//! Gaussian max-pooling.
//!
//! Each pixel is replaced by its *stable value*: the intensity `u ∈ 0..=255`
//! maximizing `Σ_{u' ∈ window} N(u'; u, σ)`, where the window is the
//! `n × n` square centered on the pixel. Windows near the border use
//! replicated edge pixels, and ties go to the smallest `u`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::imaging::{Frame, FrameSequence};

#[derive(Debug, Error, PartialEq)]
pub enum PoolingError {
    #[error("window must be odd and >= 1 (got {0})")]
    EvenWindow(usize),
    #[error("sigma must be positive and finite (got {0})")]
    Sigma(f64),
    #[error("window is empty")]
    EmptyWindow,
}

pub const DEFAULT_WINDOW: usize = 5;
pub const DEFAULT_SIGMA: f64 = 10.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoolingConfig {
    window: usize,
    sigma: f64,
}

impl PoolingConfig {
    pub fn new(window: usize, sigma: f64) -> Result<Self, PoolingError> {
        if window % 2 == 0 {
            return Err(PoolingError::EvenWindow(window));
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(PoolingError::Sigma(sigma));
        }
        Ok(Self { window, sigma })
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }
}

impl Default for PoolingConfig {
    fn default() -> Self {
        Self {
            window: DEFAULT_WINDOW,
            sigma: DEFAULT_SIGMA,
        }
    }
}

/// Gaussian density of observing `u_prime` given the stable value `u`.
pub fn conditional_prob(u_prime: f64, u: f64, sigma: f64) -> Result<f64, PoolingError> {
    if !(sigma > 0.0) {
        return Err(PoolingError::Sigma(sigma));
    }
    let d = u_prime - u;
    Ok((-(d * d) / (2.0 * sigma * sigma)).exp() / ((2.0 * std::f64::consts::PI).sqrt() * sigma))
}

/// Precomputed `N(d; 0, σ)` for every intensity distance `d ∈ 0..=255`.
#[derive(Clone, Debug)]
struct Kernel {
    weights: [f64; 256],
}

impl Kernel {
    fn new(sigma: f64) -> Self {
        let mut weights = [0.0; 256];
        for (d, w) in weights.iter_mut().enumerate() {
            *w = conditional_prob(d as f64, 0.0, sigma).expect("sigma validated");
        }
        Self { weights }
    }

    /// Argmax of the window score given an intensity histogram.
    ///
    /// Every term of the score decreases as `u` moves away from the window's
    /// range, so the search is restricted to `[min, max]` without changing
    /// the result.
    fn stable_value(&self, hist: &[u32; 256]) -> u8 {
        let mut present = [0u8; 256];
        let mut counts = [0f64; 256];
        let mut k = 0;
        for (v, &c) in hist.iter().enumerate() {
            if c > 0 {
                present[k] = v as u8;
                counts[k] = c as f64;
                k += 1;
            }
        }
        let present = &present[..k];
        let (lo, hi) = (present[0], present[k - 1]);
        let mut best_u = lo;
        let mut best_score = f64::NEG_INFINITY;
        for u in lo..=hi {
            let score: f64 = present
                .iter()
                .zip(&counts)
                .map(|(&v, &c)| c * self.weights[v.abs_diff(u) as usize])
                .sum();
            if score > best_score {
                best_score = score;
                best_u = u;
            }
        }
        best_u
    }
}

/// Stable value of a window of intensities.
pub fn stable_value(window: &[u8], sigma: f64) -> Result<u8, PoolingError> {
    if window.is_empty() {
        return Err(PoolingError::EmptyWindow);
    }
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(PoolingError::Sigma(sigma));
    }
    let mut hist = [0u32; 256];
    for &v in window {
        hist[v as usize] += 1;
    }
    Ok(Kernel::new(sigma).stable_value(&hist))
}

fn pool_with(frame: &Frame, window: usize, kernel: &Kernel) -> Frame {
    let (w, h) = (frame.width(), frame.height());
    let r = (window / 2) as isize;
    let clamp = |v: isize, n: usize| v.clamp(0, n as isize - 1) as usize;
    let rows: Vec<Vec<u8>> = (0..h)
        .into_par_iter()
        .map(|y| {
            let mut hist = [0u32; 256];
            (0..w)
                .map(|x| {
                    hist.fill(0);
                    for dy in -r..=r {
                        let yy = clamp(y as isize + dy, h);
                        for dx in -r..=r {
                            let xx = clamp(x as isize + dx, w);
                            hist[frame.get(xx, yy) as usize] += 1;
                        }
                    }
                    kernel.stable_value(&hist)
                })
                .collect()
        })
        .collect();
    Frame::new(w, h, rows.concat()).expect("same dimensions as input")
}

pub fn pool_frame(frame: &Frame, config: &PoolingConfig) -> Frame {
    pool_with(frame, config.window, &Kernel::new(config.sigma))
}

pub fn pool_sequence(seq: &FrameSequence, config: &PoolingConfig) -> FrameSequence {
    let kernel = Kernel::new(config.sigma);
    let frames = seq
        .frames()
        .par_iter()
        .map(|f| pool_with(f, config.window, &kernel))
        .collect();
    FrameSequence::new(frames).expect("pooling preserves sequence shape")
}
