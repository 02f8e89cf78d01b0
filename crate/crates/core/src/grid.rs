//! Pixel grids, seed polygons and the binary level-set function.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::par;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("grid must be at least 1x1, got {width}x{height}")]
    EmptyGrid { width: usize, height: usize },
    #[error("expected {expected} values for the grid, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("non-finite value at pixel ({x}, {y})")]
    NonFinite { x: usize, y: usize },
    #[error("dimension mismatch: {0}x{1} vs {2}x{3}")]
    DimensionMismatch(usize, usize, usize, usize),
    #[error("seeds contain no polygons")]
    NoPolygons,
    #[error("polygon {index} has {count} vertices, at least 3 are required")]
    TooFewVertices { index: usize, count: usize },
    #[error("polygon {index} has a non-finite vertex")]
    NonFiniteVertex { index: usize },
    #[error("inside sign must be +1 or -1, got {0}")]
    InvalidSign(i32),
    #[error("degenerate seed: {0}")]
    DegenerateSeed(&'static str),
}

/// Real-valued row-major grid. Holds images, level-set functions and
/// velocity fields.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    width: usize,
    height: usize,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(width: usize, height: usize, values: Vec<f64>) -> Result<Self, GridError> {
        if width == 0 || height == 0 {
            return Err(GridError::EmptyGrid { width, height });
        }
        if values.len() != width * height {
            return Err(GridError::LengthMismatch {
                expected: width * height,
                actual: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(GridError::NonFinite {
                x: i % width,
                y: i / width,
            });
        }
        Ok(Self {
            width,
            height,
            values,
        })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Result<Self, GridError> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn from_fn<F: Fn(usize, usize) -> f64>(
        width: usize,
        height: usize,
        f: F,
    ) -> Result<Self, GridError> {
        let mut values = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                values.push(f(x, y));
            }
        }
        Self::new(width, height, values)
    }

    /// Internal constructor for values produced by finite arithmetic on
    /// already-validated fields.
    pub(crate) fn from_parts(width: usize, height: usize, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), width * height);
        Self {
            width,
            height,
            values,
        }
    }

    /// Builds a field of the same shape by filling each row in parallel.
    pub(crate) fn build_rows<F>(width: usize, height: usize, f: F) -> Self
    where
        F: Fn(usize, &mut [f64]) + Sync + Send,
    {
        let mut values = vec![0.0; width * height];
        par::fill_rows(&mut values, width, f);
        Self::from_parts(width, height, values)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.width + x]
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Index of the first non-finite value, if any.
    pub fn first_non_finite(&self) -> Option<(usize, usize)> {
        self.values
            .iter()
            .position(|v| !v.is_finite())
            .map(|i| (i % self.width, i / self.width))
    }

    pub fn map<F: Fn(f64) -> f64 + Sync + Send>(&self, f: F) -> Self {
        let w = self.width;
        Self::build_rows(w, self.height, |y, row| {
            let src = &self.values[y * w..(y + 1) * w];
            for (o, &v) in row.iter_mut().zip(src) {
                *o = f(v);
            }
        })
    }

    pub fn zip_map<F: Fn(f64, f64) -> f64 + Sync + Send>(
        &self,
        other: &ScalarField,
        f: F,
    ) -> Result<Self, GridError> {
        self.check_same_dims(other)?;
        let w = self.width;
        Ok(Self::build_rows(w, self.height, |y, row| {
            let a = &self.values[y * w..(y + 1) * w];
            let b = &other.values[y * w..(y + 1) * w];
            for x in 0..w {
                row[x] = f(a[x], b[x]);
            }
        }))
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn check_same_dims(&self, other: &ScalarField) -> Result<(), GridError> {
        if self.dims() != other.dims() {
            return Err(GridError::DimensionMismatch(
                self.width,
                self.height,
                other.width,
                other.height,
            ));
        }
        Ok(())
    }

    /// Left-right mirror image.
    pub fn mirrored_x(&self) -> Self {
        let w = self.width;
        Self::build_rows(w, self.height, |y, row| {
            let src = &self.values[y * w..(y + 1) * w];
            for (out, v) in row.iter_mut().zip(src.iter().rev()) {
                *out = *v;
            }
        })
    }
}

/// One bit per pixel; `true` marks the object.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl BinaryMask {
    pub fn new(width: usize, height: usize, bits: Vec<bool>) -> Result<Self, GridError> {
        if width == 0 || height == 0 {
            return Err(GridError::EmptyGrid { width, height });
        }
        if bits.len() != width * height {
            return Err(GridError::LengthMismatch {
                expected: width * height,
                actual: bits.len(),
            });
        }
        Ok(Self {
            width,
            height,
            bits,
        })
    }

    pub fn empty(width: usize, height: usize) -> Result<Self, GridError> {
        Self::new(width, height, vec![false; width * height])
    }

    pub fn from_fn<F: Fn(usize, usize) -> bool>(
        width: usize,
        height: usize,
        f: F,
    ) -> Result<Self, GridError> {
        let mut bits = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                bits.push(f(x, y));
            }
        }
        Self::new(width, height, bits)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, value: bool) {
        self.bits[y * self.width + x] = value;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn complement(&self) -> Self {
        Self {
            width: self.width,
            height: self.height,
            bits: self.bits.iter().map(|b| !b).collect(),
        }
    }

    pub fn mirrored_x(&self) -> Self {
        let w = self.width;
        let bits = (0..self.bits.len())
            .map(|i| {
                let (x, y) = (i % w, i / w);
                self.bits[y * w + (w - 1 - x)]
            })
            .collect();
        Self {
            width: self.width,
            height: self.height,
            bits,
        }
    }

    /// Object pixels are where `phi` has the given sign after binarization.
    pub fn from_sign(phi: &ScalarField, sign: Sign) -> Self {
        let bits = phi
            .values()
            .iter()
            .map(|&v| binarize_value(v) == sign.value())
            .collect();
        Self {
            width: phi.width(),
            height: phi.height(),
            bits,
        }
    }
}

/// The level-set value assigned inside the seeded region.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "i32", into = "i32")]
pub enum Sign {
    Negative,
    Positive,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Negative => -1.0,
            Sign::Positive => 1.0,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Sign::Negative => Sign::Positive,
            Sign::Positive => Sign::Negative,
        }
    }
}

impl TryFrom<i32> for Sign {
    type Error = GridError;

    fn try_from(v: i32) -> Result<Self, Self::Error> {
        match v {
            -1 => Ok(Sign::Negative),
            1 => Ok(Sign::Positive),
            other => Err(GridError::InvalidSign(other)),
        }
    }
}

impl From<Sign> for i32 {
    fn from(s: Sign) -> i32 {
        match s {
            Sign::Negative => -1,
            Sign::Positive => 1,
        }
    }
}

/// Closed polygon in pixel coordinates; pixel `(i, j)` covers
/// `[i, i + 1) x [j, j + 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Polygon {
    pub vertices: Vec<[f64; 2]>,
}

impl Polygon {
    pub fn new(vertices: Vec<[f64; 2]>) -> Self {
        Self { vertices }
    }

    /// Axis-aligned rectangle covering pixels `x0..x1` by `y0..y1`.
    pub fn rect(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Self::new(vec![[x0, y0], [x1, y0], [x1, y1], [x0, y1]])
    }

    /// Even-odd ray casting.
    pub fn contains(&self, px: f64, py: f64) -> bool {
        let v = &self.vertices;
        let n = v.len();
        let mut inside = false;
        let mut j = n - 1;
        for i in 0..n {
            let [xi, yi] = v[i];
            let [xj, yj] = v[j];
            if (yi > py) != (yj > py) && px < (xj - xi) * (py - yi) / (yj - yi) + xi {
                inside = !inside;
            }
            j = i;
        }
        inside
    }

    pub fn mirrored_x(&self, width: usize) -> Self {
        Self::new(
            self.vertices
                .iter()
                .map(|&[x, y]| [width as f64 - x, y])
                .collect(),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedSpec {
    pub polygons: Vec<Polygon>,
    pub inside_sign: Sign,
}

impl SeedSpec {
    pub fn new(polygons: Vec<Polygon>, inside_sign: Sign) -> Self {
        Self {
            polygons,
            inside_sign,
        }
    }

    pub fn validate(&self) -> Result<(), GridError> {
        if self.polygons.is_empty() {
            return Err(GridError::NoPolygons);
        }
        for (index, p) in self.polygons.iter().enumerate() {
            if p.vertices.len() < 3 {
                return Err(GridError::TooFewVertices {
                    index,
                    count: p.vertices.len(),
                });
            }
            if p.vertices.iter().flatten().any(|c| !c.is_finite()) {
                return Err(GridError::NonFiniteVertex { index });
            }
        }
        Ok(())
    }

    /// Union of the polygon interiors, sampled at pixel centers.
    pub fn region_mask(&self, width: usize, height: usize) -> Result<BinaryMask, GridError> {
        self.validate()?;
        BinaryMask::from_fn(width, height, |x, y| {
            let (px, py) = (x as f64 + 0.5, y as f64 + 0.5);
            self.polygons.iter().any(|p| p.contains(px, py))
        })
    }

    pub fn mirrored_x(&self, width: usize) -> Self {
        Self {
            polygons: self.polygons.iter().map(|p| p.mirrored_x(width)).collect(),
            inside_sign: self.inside_sign,
        }
    }
}

/// Initial binary level-set function: `inside_sign` on the seeded region,
/// its opposite elsewhere.
pub fn rasterize_seeds(
    seeds: &SeedSpec,
    width: usize,
    height: usize,
) -> Result<ScalarField, GridError> {
    let mask = seeds.region_mask(width, height)?;
    let inside = mask.count();
    if inside == 0 {
        return Err(GridError::DegenerateSeed("no pixel centers inside the seed polygons"));
    }
    if inside == width * height {
        return Err(GridError::DegenerateSeed("seed polygons cover the whole grid"));
    }
    let s = seeds.inside_sign.value();
    let values = mask.bits().iter().map(|&b| if b { s } else { -s }).collect();
    Ok(ScalarField::from_parts(width, height, values))
}

#[inline]
pub(crate) fn binarize_value(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// Reinitialization to the binary function: `+1` where `phi > 0`, `-1`
/// elsewhere (zero maps to `-1`).
pub fn binarize(phi: &ScalarField) -> ScalarField {
    phi.map(binarize_value)
}

/// Mean intensities over `phi >= 0` and `phi < 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionMeans {
    pub c_plus: f64,
    pub c_minus: f64,
}

/// Returns `None` when either region is empty.
pub fn region_means(image: &ScalarField, phi: &ScalarField) -> Result<Option<RegionMeans>, GridError> {
    image.check_same_dims(phi)?;
    let (w, h) = image.dims();
    let iv = image.values();
    let pv = phi.values();
    let n_plus = pv.iter().filter(|&&p| p >= 0.0).count();
    let n_minus = pv.len() - n_plus;
    if n_plus == 0 || n_minus == 0 {
        return Ok(None);
    }
    let sum_plus = par::grid_sum(w, h, |x, y| {
        let i = y * w + x;
        if pv[i] >= 0.0 {
            iv[i]
        } else {
            0.0
        }
    });
    let sum_minus = par::grid_sum(w, h, |x, y| {
        let i = y * w + x;
        if pv[i] < 0.0 {
            iv[i]
        } else {
            0.0
        }
    });
    Ok(Some(RegionMeans {
        c_plus: sum_plus / n_plus as f64,
        c_minus: sum_minus / n_minus as f64,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square_seed(sign: Sign) -> SeedSpec {
        SeedSpec::new(vec![Polygon::rect(2.0, 2.0, 6.0, 6.0)], sign)
    }

    #[test]
    fn square_seed_fill_count() {
        let phi = rasterize_seeds(&square_seed(Sign::Negative), 8, 8).unwrap();
        let neg = phi.values().iter().filter(|&&v| v == -1.0).count();
        let pos = phi.values().iter().filter(|&&v| v == 1.0).count();
        assert_eq!((neg, pos), (16, 48));
        for y in 2..6 {
            for x in 2..6 {
                assert_eq!(phi.get(x, y), -1.0);
            }
        }
    }

    #[test]
    fn flipped_sign_negates_field() {
        let a = rasterize_seeds(&square_seed(Sign::Negative), 8, 8).unwrap();
        let b = rasterize_seeds(&square_seed(Sign::Positive), 8, 8).unwrap();
        for (x, y) in a.values().iter().zip(b.values()) {
            assert_eq!(*x, -*y);
        }
    }

    #[test]
    fn overlapping_polygons_union() {
        let seeds = SeedSpec::new(
            vec![Polygon::rect(1.0, 1.0, 5.0, 5.0), Polygon::rect(3.0, 3.0, 7.0, 7.0)],
            Sign::Positive,
        );
        let mask = seeds.region_mask(8, 8).unwrap();
        assert_eq!(mask.count(), 16 + 16 - 4);
        assert!(mask.get(3, 3) && mask.get(4, 4));
    }

    #[test]
    fn seed_errors() {
        let empty = SeedSpec::new(vec![], Sign::Negative);
        assert_eq!(rasterize_seeds(&empty, 8, 8), Err(GridError::NoPolygons));
        let two = SeedSpec::new(vec![Polygon::new(vec![[0.0, 0.0], [3.0, 3.0]])], Sign::Negative);
        assert!(matches!(
            rasterize_seeds(&two, 8, 8),
            Err(GridError::TooFewVertices { index: 0, count: 2 })
        ));
        let outside = SeedSpec::new(vec![Polygon::rect(20.0, 20.0, 30.0, 30.0)], Sign::Negative);
        assert!(matches!(
            rasterize_seeds(&outside, 8, 8),
            Err(GridError::DegenerateSeed(_))
        ));
        let sliver = SeedSpec::new(vec![Polygon::rect(2.1, 2.1, 2.4, 6.0)], Sign::Negative);
        assert!(matches!(
            rasterize_seeds(&sliver, 8, 8),
            Err(GridError::DegenerateSeed(_))
        ));
        let all = SeedSpec::new(vec![Polygon::rect(-1.0, -1.0, 9.0, 9.0)], Sign::Negative);
        assert!(matches!(
            rasterize_seeds(&all, 8, 8),
            Err(GridError::DegenerateSeed(_))
        ));
    }

    #[test]
    fn sign_parses_only_unit_values() {
        assert_eq!(Sign::try_from(-1), Ok(Sign::Negative));
        assert_eq!(Sign::try_from(1), Ok(Sign::Positive));
        assert_eq!(Sign::try_from(0), Err(GridError::InvalidSign(0)));
    }

    #[test]
    fn binarize_examples() {
        let f = ScalarField::new(3, 1, vec![0.3, -0.2, 0.0]).unwrap();
        assert_eq!(binarize(&f).values(), &[1.0, -1.0, -1.0]);
        let b = binarize(&f);
        assert_eq!(binarize(&b), b);
    }

    #[test]
    fn region_means_exact_partition() {
        let image = ScalarField::from_fn(6, 4, |x, _| if x < 3 { 0.2 } else { 0.8 }).unwrap();
        let phi = ScalarField::from_fn(6, 4, |x, _| if x < 3 { -1.0 } else { 1.0 }).unwrap();
        let m = region_means(&image, &phi).unwrap().unwrap();
        assert!((m.c_plus - 0.8).abs() < 1e-15);
        assert!((m.c_minus - 0.2).abs() < 1e-15);
    }

    #[test]
    fn region_means_constant_and_degenerate() {
        let image = ScalarField::filled(5, 5, 0.5).unwrap();
        let phi = ScalarField::from_fn(5, 5, |x, y| (x as f64 - 2.0) * (y as f64 + 1.0)).unwrap();
        let m = region_means(&image, &phi).unwrap().unwrap();
        assert_eq!((m.c_plus, m.c_minus), (0.5, 0.5));
        let all_pos = ScalarField::filled(5, 5, 1.0).unwrap();
        assert_eq!(region_means(&image, &all_pos).unwrap(), None);
        let zeros = ScalarField::filled(5, 5, 0.0).unwrap();
        assert_eq!(region_means(&image, &zeros).unwrap(), None);
    }

    #[test]
    fn field_constructor_rejects_bad_input() {
        assert!(ScalarField::new(0, 3, vec![]).is_err());
        assert!(ScalarField::new(2, 2, vec![0.0; 3]).is_err());
        assert_eq!(
            ScalarField::new(2, 2, vec![0.0, 0.0, f64::NAN, 0.0]),
            Err(GridError::NonFinite { x: 0, y: 1 })
        );
    }
}
