//! Deterministic synthetic scenes: a uniform square moving in a straight
//! line over a static, rippling ("wave") or snowing background.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::EvaluationError;
use crate::detection::MaskSequence;
use crate::fixtures::rng;
use crate::imaging::{Frame, FrameSequence};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackgroundKind {
    Static,
    Wave,
    Snow,
}

impl std::str::FromStr for BackgroundKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "static" => Ok(Self::Static),
            "wave" => Ok(Self::Wave),
            "snow" => Ok(Self::Snow),
            other => Err(format!(
                "unknown background kind '{other}' (expected static, wave or snow)"
            )),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneConfig {
    pub width: usize,
    pub height: usize,
    pub frames: usize,
    /// Side length of the moving square.
    pub object_size: usize,
    /// Top-left corner of the square in the first frame.
    pub object_start: (f64, f64),
    /// Pixels per frame.
    pub velocity: (f64, f64),
    pub object_intensity: u8,
    pub background_intensity: u8,
    pub kind: BackgroundKind,
    /// Crest brightening; it varies along each crest between
    /// `wave_min_amplitude` and this value.
    pub wave_amplitude: f64,
    pub wave_min_amplitude: f64,
    /// Vertical length in pixels of one amplitude cycle along a crest.
    pub wave_modulation: f64,
    /// Crest spacing in pixels.
    pub wave_period: f64,
    /// Crest travel in pixels per frame.
    pub wave_speed: f64,
    /// Width in pixels of the flat-topped crest, at most the period.
    pub wave_crest_width: f64,
    /// Amplitude (pixels) of the crest meander along its length.
    pub wave_meander: f64,
    /// Expected flakes per frame per pixel.
    pub snow_rate: f64,
    pub snow_intensity: u8,
    /// Standard deviation of additive Gaussian pixel noise.
    pub noise_sigma: f64,
    pub seed: u64,
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self {
            width: 64,
            height: 64,
            frames: 30,
            object_size: 12,
            object_start: (4.0, 26.0),
            velocity: (1.6, 0.0),
            object_intensity: 200,
            background_intensity: 90,
            kind: BackgroundKind::Static,
            wave_amplitude: 120.0,
            wave_min_amplitude: 20.0,
            wave_modulation: 64.0,
            wave_period: 16.0,
            wave_speed: 1.0,
            wave_crest_width: 2.0,
            wave_meander: 1.5,
            snow_rate: 0.01,
            snow_intensity: 235,
            noise_sigma: 0.0,
            seed: 7,
        }
    }
}

impl SceneConfig {
    pub fn with_kind(kind: BackgroundKind) -> Self {
        Self {
            kind,
            ..Self::default()
        }
    }

    fn object_corner(&self, t: usize) -> (f64, f64) {
        (
            self.object_start.0 + self.velocity.0 * t as f64,
            self.object_start.1 + self.velocity.1 * t as f64,
        )
    }

    /// Integer pixel rectangle `[x0, x0+size) × [y0, y0+size)` of the square.
    pub fn object_rect(&self, t: usize) -> (usize, usize) {
        let (x, y) = self.object_corner(t);
        (x.round() as usize, y.round() as usize)
    }

    pub fn validate(&self) -> Result<(), EvaluationError> {
        let bad = |m: String| Err(EvaluationError::Scene(m));
        if self.width == 0 || self.height == 0 {
            return bad("frame dimensions must be nonzero".into());
        }
        if self.frames < 2 {
            return bad(format!("need at least 2 frames, got {}", self.frames));
        }
        if self.object_size == 0 {
            return bad("object size must be at least 1".into());
        }
        if self.kind == BackgroundKind::Wave
            && !(self.wave_period > 0.0
                && self.wave_crest_width > 0.0
                && self.wave_crest_width <= self.wave_period)
        {
            return bad(
                "wave period must be positive and crest width must be in (0, period]".into(),
            );
        }
        if self.kind == BackgroundKind::Wave && !(self.wave_modulation > 0.0) {
            return bad("wave modulation length must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.snow_rate) {
            return bad(format!(
                "snow rate must be in [0, 1], got {}",
                self.snow_rate
            ));
        }
        if !(self.noise_sigma >= 0.0) {
            return bad(format!(
                "noise sigma must be non-negative, got {}",
                self.noise_sigma
            ));
        }
        for t in 0..self.frames {
            let (x, y) = self.object_corner(t);
            let s = self.object_size as f64;
            let outside = x.round() < 0.0
                || y.round() < 0.0
                || x.round() + s > self.width as f64
                || y.round() + s > self.height as f64;
            if outside {
                return bad(format!(
                    "object leaves the {}x{} frame at frame {t}",
                    self.width, self.height
                ));
            }
        }
        Ok(())
    }

    /// Crest brightening at `(x, y)` in frame `t`.
    pub fn wave_at(&self, x: usize, y: usize, t: usize) -> f64 {
        let (x, y) = (x as f64, y as f64);
        let tau = std::f64::consts::TAU;
        let meander = self.wave_meander * (tau * y / (2.3 * self.wave_period)).sin();
        let offset = (x + meander - self.wave_speed * t as f64).rem_euclid(self.wave_period);
        let d = offset.min(self.wave_period - offset);
        if 2.0 * d < self.wave_crest_width {
            let swing = 0.5 + 0.5 * (tau * y / self.wave_modulation).sin();
            self.wave_min_amplitude + (self.wave_amplitude - self.wave_min_amplitude) * swing
        } else {
            0.0
        }
    }
}

/// A generated scene with its ground truth.
#[derive(Clone, Debug)]
pub struct Scene {
    pub frames: FrameSequence,
    pub ground_truth: MaskSequence,
}

pub fn synth_scene(config: &SceneConfig) -> Result<Scene, EvaluationError> {
    config.validate()?;
    let (w, h) = (config.width, config.height);
    let mut rng = rng(config.seed);
    let mut frames = Vec::with_capacity(config.frames);
    let mut truth = Vec::with_capacity(config.frames);
    for t in 0..config.frames {
        let (ox, oy) = config.object_rect(t);
        let inside = |x: usize, y: usize| {
            (ox..ox + config.object_size).contains(&x) && (oy..oy + config.object_size).contains(&y)
        };
        let mut data = vec![0u8; w * h];
        let mut gt = vec![0u8; w * h];
        for y in 0..h {
            for x in 0..w {
                let mut v = if inside(x, y) {
                    gt[y * w + x] = 255;
                    config.object_intensity as f64
                } else {
                    let mut b = config.background_intensity as f64;
                    match config.kind {
                        BackgroundKind::Static => {}
                        BackgroundKind::Wave => b += config.wave_at(x, y, t),
                        BackgroundKind::Snow => {
                            if rng.gen_bool(config.snow_rate) {
                                b = config.snow_intensity as f64;
                            }
                        }
                    }
                    b
                };
                if config.noise_sigma > 0.0 {
                    let z: f64 = rng.sample(StandardNormal);
                    v += config.noise_sigma * z;
                }
                data[y * w + x] = v.round().clamp(0.0, 255.0) as u8;
            }
        }
        frames.push(Frame::new(w, h, data).expect("dimensions fixed"));
        truth.push(Frame::new(w, h, gt).expect("dimensions fixed"));
    }
    Ok(Scene {
        frames: FrameSequence::new(frames).expect("validated frame count"),
        ground_truth: MaskSequence::new(truth).expect("binary masks"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn static_scene_differs_only_on_the_square() {
        let cfg = SceneConfig::default();
        let scene = synth_scene(&cfg).unwrap();
        let f = scene.frames.frames();
        let g = scene.ground_truth.frames();
        for t in 1..f.len() {
            for p in 0..f[t].len() {
                if f[t].data()[p] != f[0].data()[p] {
                    assert!(g[t].data()[p] == 255 || g[0].data()[p] == 255);
                }
            }
        }
        let on: usize = g[0].data().iter().filter(|&&v| v == 255).count();
        assert_eq!(on, 144);
    }

    #[test]
    fn same_seed_same_scene() {
        for kind in [BackgroundKind::Wave, BackgroundKind::Snow] {
            let cfg = SceneConfig {
                noise_sigma: 3.0,
                ..SceneConfig::with_kind(kind)
            };
            let a = synth_scene(&cfg).unwrap();
            let b = synth_scene(&cfg).unwrap();
            assert_eq!(a.frames, b.frames);
            assert_eq!(a.ground_truth, b.ground_truth);
        }
    }

    #[test]
    fn object_must_stay_inside() {
        let cfg = SceneConfig {
            velocity: (3.0, 0.0),
            ..SceneConfig::default()
        };
        assert!(matches!(synth_scene(&cfg), Err(EvaluationError::Scene(_))));
    }

    #[test]
    fn wave_period_shows_in_autocorrelation() {
        let cfg = SceneConfig {
            kind: BackgroundKind::Wave,
            wave_amplitude: 30.0,
            wave_min_amplitude: 30.0,
            wave_period: 16.0,
            wave_speed: 1.0,
            wave_crest_width: 8.0,
            frames: 48,
            object_start: (0.0, 0.0),
            velocity: (0.0, 0.0),
            ..SceneConfig::default()
        };
        let scene = synth_scene(&cfg).unwrap();
        // A background pixel away from the parked square.
        let series: Vec<f64> = scene
            .frames
            .frames()
            .iter()
            .map(|f| f.get(40, 50) as f64)
            .collect();
        let mean = series.iter().sum::<f64>() / series.len() as f64;
        let centered: Vec<f64> = series.iter().map(|v| v - mean).collect();
        let acf = |lag: usize| -> f64 {
            centered
                .iter()
                .zip(&centered[lag..])
                .map(|(a, b)| a * b)
                .sum::<f64>()
                / (centered.len() - lag) as f64
        };
        let peak = (4..=24).max_by(|&a, &b| acf(a).total_cmp(&acf(b))).unwrap();
        assert_eq!(peak, 16);
    }
}
