//! Right-hand sides of the evolution equations: the edge-stopping flow, the
//! normalized two-region flow, and the Chan-Vese and Zhang baselines.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::grid::{region_means, RegionMeans, ScalarField};
use crate::kernels::{
    convolve_padded, curvature, gaussian_kernel, gradient_central, gradient_magnitude, KernelError, Padding,
};

/// Curvature denominator guard for the Chan-Vese baseline.
pub const CURVATURE_EPS: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    /// `phi_t = g(I) |grad phi|`.
    Edge,
    /// Normalized two-region data term times `|grad phi|`.
    Region,
    /// Chan-Vese in `|grad phi|` form with a curvature term.
    #[serde(rename = "cv")]
    ChanVese,
    /// Zhang et al.'s normalized `I - (c_in + c_out)/2` flow.
    Zhang,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [
        ModelKind::Edge,
        ModelKind::Region,
        ModelKind::ChanVese,
        ModelKind::Zhang,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Edge => "edge",
            ModelKind::Region => "region",
            ModelKind::ChanVese => "cv",
            ModelKind::Zhang => "zhang",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ModelKind::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| format!("unknown model '{s}' (expected edge, region, cv or zhang)"))
    }
}

/// Model-specific constants. Fields a model does not use are ignored.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelParams {
    /// Pre-smoothing scale of the edge function.
    pub sigma1: f64,
    /// Pre-smoothing template size of the edge function.
    pub ts_pre: usize,
    /// Intensity scale at which image gradients enter the edge function.
    /// Images are held in `[0, 1]`; 255 evaluates `g` in 8-bit units.
    pub edge_scale: f64,
    /// Curvature weight of the Chan-Vese baseline.
    pub mu: f64,
    /// Speed constant of the Zhang baseline.
    pub nu: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            sigma1: 1.0,
            ts_pre: 9,
            edge_scale: 255.0,
            mu: 0.1,
            nu: 1.0,
        }
    }
}

/// A velocity field plus what the engine needs to report about it.
#[derive(Debug, Clone, PartialEq)]
pub struct Velocity {
    pub field: ScalarField,
    /// The data term vanished: an empty region or a zero normalizer.
    pub degenerate: bool,
    pub means: Option<RegionMeans>,
}

impl Velocity {
    fn zero_like(phi: &ScalarField, means: Option<RegionMeans>) -> Self {
        Self {
            field: phi.map(|_| 0.0),
            degenerate: true,
            means,
        }
    }
}

/// `g = 1 / (1 + |grad (G_sigma1 * (scale I))|^2)`, in `(0, 1]`.
///
/// The pre-smoothing replicates border pixels, so a constant image gives
/// `g = 1` everywhere and additive shifts of `I` leave `g` unchanged.
pub fn edge_function(
    image: &ScalarField,
    sigma1: f64,
    ts_pre: usize,
    scale: f64,
) -> Result<ScalarField, KernelError> {
    let kernel = gaussian_kernel(sigma1, ts_pre)?;
    let smooth = convolve_padded(image, &kernel, Padding::Replicate);
    let (fx, fy) = gradient_central(&smooth)?;
    let s2 = scale * scale;
    Ok(fx.zip_map(&fy, |a, b| 1.0 / (1.0 + s2 * (a * a + b * b)))?)
}

/// `g |grad phi|`, non-negative wherever `g` is.
pub fn edge_velocity(g: &ScalarField, phi: &ScalarField) -> Result<ScalarField, KernelError> {
    g.check_same_dims(phi)?;
    let mag = gradient_magnitude(phi)?;
    Ok(g.zip_map(&mag, |a, b| a * b)?)
}

/// Normalized two-region flow:
/// `D = (c+ - c-)(2I - c+ - c-)`, `v = D / max|D| * |grad phi|`.
pub fn region_velocity(image: &ScalarField, phi: &ScalarField) -> Result<Velocity, KernelError> {
    let Some(means) = region_means(image, phi)? else {
        return Ok(Velocity::zero_like(phi, None));
    };
    let RegionMeans { c_plus, c_minus } = means;
    let diff = c_plus - c_minus;
    let sum = c_plus + c_minus;
    let data = image.map(|i| diff * (2.0 * i - sum));
    let norm = data.max_abs();
    if norm == 0.0 || !norm.is_finite() {
        return Ok(Velocity::zero_like(phi, Some(means)));
    }
    let mag = gradient_magnitude(phi)?;
    Ok(Velocity {
        field: data.zip_map(&mag, |d, m| d / norm * m)?,
        degenerate: false,
        means: Some(means),
    })
}

/// Chan-Vese with `lambda1 = lambda2 = 1`, no area term and `|grad phi|` in
/// place of the regularized Dirac:
/// `[(c+ - c-)(2I - c+ - c-) + mu kappa] |grad phi|`.
/// On an empty region only the curvature term remains.
pub fn cv_velocity(image: &ScalarField, phi: &ScalarField, mu: f64) -> Result<Velocity, KernelError> {
    image.check_same_dims(phi)?;
    let means = region_means(image, phi)?;
    let (diff, sum) = means
        .map(|m| (m.c_plus - m.c_minus, m.c_plus + m.c_minus))
        .unwrap_or((0.0, 0.0));
    let mag = gradient_magnitude(phi)?;
    let w = image.width();
    let iv = image.values();
    let mv = mag.values();
    let field = if mu != 0.0 {
        let kappa = curvature(phi, CURVATURE_EPS)?;
        let kv = kappa.values();
        ScalarField::build_rows(w, image.height(), |y, row| {
            for (x, out) in row.iter_mut().enumerate() {
                let i = y * w + x;
                *out = (diff * (2.0 * iv[i] - sum) + mu * kv[i]) * mv[i];
            }
        })
    } else {
        ScalarField::build_rows(w, image.height(), |y, row| {
            for (x, out) in row.iter_mut().enumerate() {
                let i = y * w + x;
                *out = diff * (2.0 * iv[i] - sum) * mv[i];
            }
        })
    };
    Ok(Velocity {
        field,
        degenerate: means.is_none(),
        means,
    })
}

/// `nu (I - m) / max|I - m| * |grad phi|` with `m = (c+ + c-) / 2`.
pub fn zhang_velocity(image: &ScalarField, phi: &ScalarField, nu: f64) -> Result<Velocity, KernelError> {
    let Some(means) = region_means(image, phi)? else {
        return Ok(Velocity::zero_like(phi, None));
    };
    let mid = (means.c_plus + means.c_minus) / 2.0;
    let data = image.map(|i| i - mid);
    let norm = data.max_abs();
    if norm == 0.0 {
        return Ok(Velocity::zero_like(phi, Some(means)));
    }
    let mag = gradient_magnitude(phi)?;
    Ok(Velocity {
        field: data.zip_map(&mag, |d, m| nu * d / norm * m)?,
        degenerate: false,
        means: Some(means),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{rasterize_seeds, Polygon, SeedSpec, Sign};

    fn two_region(w: usize, h: usize) -> ScalarField {
        // dark object on the left third, bright background elsewhere
        ScalarField::from_fn(w, h, |x, _| if x < w / 3 { 0.2 } else { 0.8 }).unwrap()
    }

    #[test]
    fn edge_function_constant_image_is_one() {
        let img = ScalarField::filled(10, 8, 0.4).unwrap();
        let g = edge_function(&img, 1.0, 9, 255.0).unwrap();
        assert!(g.values().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn edge_function_dips_at_step() {
        let img = ScalarField::from_fn(30, 20, |x, _| if x < 15 { 0.0 } else { 1.0 }).unwrap();
        for scale in [1.0, 255.0] {
            let g = edge_function(&img, 1.0, 9, scale).unwrap();
            assert!(g.get(15, 10) < g.get(18, 10));
            assert!(g.get(14, 10) < g.get(11, 10));
        }
    }

    #[test]
    fn edge_function_ignores_additive_shift() {
        let img = ScalarField::from_fn(16, 16, |x, y| ((x * 3 + y * y) % 7) as f64 / 7.0).unwrap();
        let shifted = img.map(|v| v + 0.25);
        let a = edge_function(&img, 1.0, 5, 1.0).unwrap();
        let b = edge_function(&shifted, 1.0, 5, 1.0).unwrap();
        for (p, q) in a.values().iter().zip(b.values()) {
            assert!((p - q).abs() < 1e-12);
        }
    }

    #[test]
    fn edge_velocity_support_is_interface_band() {
        let phi = ScalarField::from_fn(10, 6, |x, _| if x < 5 { -1.0 } else { 1.0 }).unwrap();
        let g = ScalarField::filled(10, 6, 1.0).unwrap();
        let v = edge_velocity(&g, &phi).unwrap();
        for y in 0..6 {
            for x in 0..10 {
                if x == 4 || x == 5 {
                    assert!(v.get(x, y) > 0.0);
                } else {
                    assert_eq!(v.get(x, y), 0.0);
                }
            }
        }
        let ramp = ScalarField::from_fn(10, 6, |x, _| x as f64).unwrap();
        let v = edge_velocity(&g, &ramp).unwrap();
        assert!(v.values().iter().all(|&s| s == 1.0));
        let small = ScalarField::filled(3, 3, 1.0).unwrap();
        assert!(edge_velocity(&small, &phi).is_err());
    }

    #[test]
    fn region_data_term_signs_follow_partition() {
        // object darker than background, seed enclosing the object in the
        // background with phi negative inside
        let img = ScalarField::from_fn(40, 40, |x, y| {
            if (15..25).contains(&x) && (15..25).contains(&y) {
                0.2
            } else {
                0.8
            }
        })
        .unwrap();
        let seeds = SeedSpec::new(vec![Polygon::rect(8.0, 8.0, 32.0, 32.0)], Sign::Negative);
        let phi = rasterize_seeds(&seeds, 40, 40).unwrap();
        let m = region_means(&img, &phi).unwrap().unwrap();
        assert!(m.c_plus - m.c_minus > 0.0);
        let sum = m.c_plus + m.c_minus;
        let d = |i: f64| (m.c_plus - m.c_minus) * (2.0 * i - sum);
        assert!(d(0.2) < 0.0 && d(0.8) > 0.0);

        let v = region_velocity(&img, &phi).unwrap();
        assert!(!v.degenerate);
        // at the seed boundary (background on both sides) the flow pushes phi up
        assert!(v.field.get(8, 20) > 0.0);
    }

    #[test]
    fn region_velocity_normalizer_hits_one() {
        let img = two_region(12, 6);
        let phi = ScalarField::from_fn(12, 6, |x, y| (x as f64 - 5.5) + 0.1 * y as f64).unwrap();
        let m = region_means(&img, &phi).unwrap().unwrap();
        let sum = m.c_plus + m.c_minus;
        let max = img
            .values()
            .iter()
            .map(|&i| ((m.c_plus - m.c_minus) * (2.0 * i - sum)).abs())
            .fold(0.0_f64, f64::max);
        let normalized = img
            .values()
            .iter()
            .map(|&i| ((m.c_plus - m.c_minus) * (2.0 * i - sum) / max).abs())
            .fold(0.0_f64, f64::max);
        assert_eq!(normalized, 1.0);
        let v = region_velocity(&img, &phi).unwrap();
        assert!(v.field.max_abs() <= 1.01f64.sqrt() + 1e-12);
    }

    #[test]
    fn region_velocity_degenerate_cases() {
        let phi = ScalarField::from_fn(8, 8, |x, _| if x < 4 { -1.0 } else { 1.0 }).unwrap();
        let flat = ScalarField::filled(8, 8, 0.5).unwrap();
        let v = region_velocity(&flat, &phi).unwrap();
        assert!(v.degenerate);
        assert_eq!(v.field.max_abs(), 0.0);

        let one_sided = ScalarField::filled(8, 8, 1.0).unwrap();
        let v = region_velocity(&two_region(8, 8), &one_sided).unwrap();
        assert!(v.degenerate && v.means.is_none());
        let z = zhang_velocity(&two_region(8, 8), &one_sided, 1.0).unwrap();
        assert!(z.degenerate);
        let c = cv_velocity(&two_region(8, 8), &one_sided, 0.1).unwrap();
        assert!(c.degenerate);
        assert!(c.field.is_finite());
    }

    #[test]
    fn region_velocity_flips_with_partition() {
        let img = ScalarField::from_fn(12, 10, |x, y| ((x * 5 + y * 3) % 11) as f64 / 10.0).unwrap();
        let phi = ScalarField::from_fn(12, 10, |x, y| if x + y < 10 { -1.0 } else { 1.0 }).unwrap();
        let neg = phi.map(|v| -v);
        let a = region_velocity(&img, &phi).unwrap();
        let b = region_velocity(&img, &neg).unwrap();
        for (p, q) in a.field.values().iter().zip(b.field.values()) {
            assert!((p + q).abs() < 1e-12);
        }
    }

    #[test]
    fn cv_without_curvature_is_raw_region_term() {
        let img = ScalarField::from_fn(12, 10, |x, y| ((x * 5 + y * 3) % 11) as f64 / 10.0).unwrap();
        let phi = ScalarField::from_fn(12, 10, |x, y| x as f64 - 5.5 + 0.3 * y as f64).unwrap();
        let cv = cv_velocity(&img, &phi, 0.0).unwrap();
        let m = region_means(&img, &phi).unwrap().unwrap();
        let mag = gradient_magnitude(&phi).unwrap();
        for i in 0..img.values().len() {
            let raw = (m.c_plus - m.c_minus) * (2.0 * img.values()[i] - m.c_plus - m.c_minus);
            assert!((cv.field.values()[i] - raw * mag.values()[i]).abs() < 1e-14);
        }
    }

    #[test]
    fn zhang_term_is_half_the_raw_region_term_rescaled() {
        let img = ScalarField::from_fn(12, 10, |x, y| ((x * 5 + y * 3) % 11) as f64 / 10.0).unwrap();
        let phi = ScalarField::from_fn(12, 10, |x, y| x as f64 - 5.5 + 0.3 * y as f64).unwrap();
        let m = region_means(&img, &phi).unwrap().unwrap();
        // I - c_in + I - c_out = 2 (I - (c_in + c_out) / 2)
        let cv_data: Vec<f64> = img
            .values()
            .iter()
            .map(|&i| (i - m.c_plus) + (i - m.c_minus))
            .collect();
        let cv_max = cv_data.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
        let zhang = zhang_velocity(&img, &phi, 1.0).unwrap();
        let mag = gradient_magnitude(&phi).unwrap();
        for i in 0..cv_data.len() {
            let expected = cv_data[i] / cv_max * mag.values()[i];
            assert!((zhang.field.values()[i] - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn model_kind_names_round_trip() {
        for m in ModelKind::ALL {
            assert_eq!(m.name().parse::<ModelKind>().unwrap(), m);
            let json = serde_json::to_string(&m).unwrap();
            assert_eq!(json, format!("\"{}\"", m.name()));
        }
        assert!("drlse".parse::<ModelKind>().is_err());
    }
}
