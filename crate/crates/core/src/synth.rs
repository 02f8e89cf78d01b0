//! Piecewise-constant synthetic scenes with exact ground truth, and
//! seeded Gaussian noise.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{BinaryMask, GridError, ScalarField};

/// Stored next to generated images so the noise can be regenerated.
pub const NOISE_ALGORITHM: &str = "chacha8/rand_distr-normal/clamp01";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SynthError {
    #[error("intensity {0} is outside [0, 1]")]
    Intensity(f64),
    #[error("shape {0} does not fit inside the scene")]
    OutOfBounds(usize),
    #[error("shape {0} has non-positive or non-finite size")]
    BadGeometry(usize),
    #[error("noise sigma must be finite and non-negative, got {0}")]
    NoiseSigma(f64),
    #[error(transparent)]
    Grid(#[from] GridError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Shape {
    /// Covers pixels whose centers fall in `[x, x + width) x [y, y + height)`.
    Rectangle {
        x: f64,
        y: f64,
        width: f64,
        height: f64,
        intensity: f64,
    },
    /// Covers pixels whose centers lie within `radius` of `(cx, cy)`.
    Disc {
        cx: f64,
        cy: f64,
        radius: f64,
        intensity: f64,
    },
}

impl Shape {
    pub fn intensity(&self) -> f64 {
        match *self {
            Shape::Rectangle { intensity, .. } | Shape::Disc { intensity, .. } => intensity,
        }
    }

    fn covers(&self, px: f64, py: f64) -> bool {
        match *self {
            Shape::Rectangle { x, y, width, height, .. } => {
                px >= x && px < x + width && py >= y && py < y + height
            }
            Shape::Disc { cx, cy, radius, .. } => {
                let (dx, dy) = (px - cx, py - cy);
                dx * dx + dy * dy <= radius * radius
            }
        }
    }

    fn bounds(&self) -> (f64, f64, f64, f64) {
        match *self {
            Shape::Rectangle { x, y, width, height, .. } => (x, y, x + width, y + height),
            Shape::Disc { cx, cy, radius, .. } => (cx - radius, cy - radius, cx + radius, cy + radius),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    #[serde(default = "scene_version")]
    pub version: u32,
    pub width: usize,
    pub height: usize,
    pub background_intensity: f64,
    #[serde(default)]
    pub shapes: Vec<Shape>,
}

fn scene_version() -> u32 {
    1
}

impl SceneSpec {
    pub fn new(width: usize, height: usize, background_intensity: f64, shapes: Vec<Shape>) -> Self {
        Self {
            version: 1,
            width,
            height,
            background_intensity,
            shapes,
        }
    }

    /// A dark square of side `side` centered on a bright background.
    pub fn centered_square(size: usize, side: usize, object: f64, background: f64) -> Self {
        let offset = ((size - side) / 2) as f64;
        Self::new(
            size,
            size,
            background,
            vec![Shape::Rectangle {
                x: offset,
                y: offset,
                width: side as f64,
                height: side as f64,
                intensity: object,
            }],
        )
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        if !unit(self.background_intensity) {
            return Err(SynthError::Intensity(self.background_intensity));
        }
        for (i, s) in self.shapes.iter().enumerate() {
            if !unit(s.intensity()) {
                return Err(SynthError::Intensity(s.intensity()));
            }
            let size_ok = match *s {
                Shape::Rectangle { width, height, .. } => width > 0.0 && height > 0.0,
                Shape::Disc { radius, .. } => radius > 0.0,
            };
            let (x0, y0, x1, y1) = s.bounds();
            if !size_ok || ![x0, y0, x1, y1].iter().all(|v| v.is_finite()) {
                return Err(SynthError::BadGeometry(i));
            }
            if x0 < 0.0 || y0 < 0.0 || x1 > self.width as f64 || y1 > self.height as f64 {
                return Err(SynthError::OutOfBounds(i));
            }
        }
        Ok(())
    }
}

/// Renders the scene in painter's order (later shapes win) and returns the
/// union of all shapes as ground truth.
pub fn render_scene(spec: &SceneSpec) -> Result<(ScalarField, BinaryMask), SynthError> {
    spec.validate()?;
    let (w, h) = (spec.width, spec.height);
    let mut values = vec![spec.background_intensity; w * h];
    let mut truth = BinaryMask::empty(w, h)?;
    for y in 0..h {
        for x in 0..w {
            let (px, py) = (x as f64 + 0.5, y as f64 + 0.5);
            for s in &spec.shapes {
                if s.covers(px, py) {
                    values[y * w + x] = s.intensity();
                    truth.set(x, y, true);
                }
            }
        }
    }
    Ok((ScalarField::new(w, h, values)?, truth))
}

/// Adds `N(0, sigma_n^2)` to every pixel (row-major draw order) and clamps
/// to `[0, 1]`. Deterministic for a given `seed`.
pub fn add_gaussian_noise(image: &ScalarField, sigma_n: f64, seed: u64) -> Result<ScalarField, SynthError> {
    if !(sigma_n >= 0.0 && sigma_n.is_finite()) {
        return Err(SynthError::NoiseSigma(sigma_n));
    }
    if sigma_n == 0.0 {
        return Ok(image.clone());
    }
    let normal = Normal::new(0.0, sigma_n).map_err(|_| SynthError::NoiseSigma(sigma_n))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = image
        .values()
        .iter()
        .map(|&v| (v + normal.sample(&mut rng)).clamp(0.0, 1.0))
        .collect();
    Ok(ScalarField::new(image.width(), image.height(), values)?)
}
