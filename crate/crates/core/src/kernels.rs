//! Gaussian templates, zero-padded "same" convolution, finite differences,
//! curvature and the exact Euclidean signed distance transform.

use thiserror::Error;

use crate::grid::{BinaryMask, GridError, ScalarField};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KernelError {
    #[error("gaussian sigma must be positive and finite, got {0}")]
    InvalidSigma(f64),
    #[error("template size must be odd and at least 1, got {0}")]
    InvalidSize(usize),
    #[error("kernel weights must be a non-empty odd square, got {0} values")]
    InvalidWeights(usize),
    #[error("field is {width}x{height}, operation needs at least {min}x{min}")]
    TooSmall {
        width: usize,
        height: usize,
        min: usize,
    },
    #[error("signed distance needs both object and background pixels")]
    SingleClassMask,
    #[error(transparent)]
    Grid(#[from] GridError),
}

/// Square convolution template. Gaussian templates also keep their 1-D
/// factor so convolution can run as two passes.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel2D {
    size: usize,
    weights: Vec<f64>,
    axis: Option<Vec<f64>>,
}

impl Kernel2D {
    /// Arbitrary `size x size` template, row-major.
    pub fn from_weights(size: usize, weights: Vec<f64>) -> Result<Self, KernelError> {
        if size == 0 || size.is_multiple_of(2) || weights.len() != size * size {
            return Err(KernelError::InvalidWeights(weights.len()));
        }
        Ok(Self {
            size,
            weights,
            axis: None,
        })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn radius(&self) -> usize {
        self.size / 2
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    #[inline]
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[i * self.size + j]
    }

    pub fn is_separable(&self) -> bool {
        self.axis.is_some()
    }
}

/// `exp(-((i-c)^2 + (j-c)^2) / (2 sigma^2))` on a `ts x ts` template,
/// normalized to unit sum.
pub fn gaussian_kernel(sigma: f64, ts: usize) -> Result<Kernel2D, KernelError> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(KernelError::InvalidSigma(sigma));
    }
    if ts == 0 || ts.is_multiple_of(2) {
        return Err(KernelError::InvalidSize(ts));
    }
    let c = (ts / 2) as f64;
    let denom = 2.0 * sigma * sigma;
    let mut weights = Vec::with_capacity(ts * ts);
    for i in 0..ts {
        for j in 0..ts {
            let (di, dj) = (i as f64 - c, j as f64 - c);
            weights.push((-(di * di + dj * dj) / denom).exp());
        }
    }
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);

    let mut axis: Vec<f64> = (0..ts)
        .map(|i| {
            let d = i as f64 - c;
            (-(d * d) / denom).exp()
        })
        .collect();
    let axis_total: f64 = axis.iter().sum();
    axis.iter_mut().for_each(|w| *w /= axis_total);

    Ok(Kernel2D {
        size: ts,
        weights,
        axis: Some(axis),
    })
}

/// How samples outside the grid are filled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Padding {
    Zero,
    /// Nearest border pixel.
    Replicate,
}

impl Padding {
    #[inline]
    fn sample(self, line: &[f64], stride: usize, n: usize, i: isize) -> f64 {
        if i >= 0 && (i as usize) < n {
            return line[i as usize * stride];
        }
        match self {
            Padding::Zero => 0.0,
            Padding::Replicate => line[(i.clamp(0, n as isize - 1) as usize) * stride],
        }
    }
}

/// Same-size convolution with zero padding. Gaussian templates take the
/// separable path; arbitrary templates the direct one.
pub fn convolve_same(f: &ScalarField, k: &Kernel2D) -> ScalarField {
    convolve_padded(f, k, Padding::Zero)
}

pub fn convolve_padded(f: &ScalarField, k: &Kernel2D, padding: Padding) -> ScalarField {
    match &k.axis {
        Some(axis) => convolve_separable(f, axis, padding),
        None => convolve_direct(f, k, padding),
    }
}

/// Direct 2-D convolution, `O(ts^2)` per pixel.
pub fn convolve_direct(f: &ScalarField, k: &Kernel2D, padding: Padding) -> ScalarField {
    let (w, h) = f.dims();
    let r = k.radius() as isize;
    let src = f.values();
    ScalarField::build_rows(w, h, |y, row| {
        for (x, out) in row.iter_mut().enumerate() {
            let mut acc = 0.0;
            for di in -r..=r {
                let sy = y as isize - di;
                if padding == Padding::Zero && (sy < 0 || sy >= h as isize) {
                    continue;
                }
                let sy = sy.clamp(0, h as isize - 1) as usize;
                let line = &src[sy * w..(sy + 1) * w];
                for dj in -r..=r {
                    let v = padding.sample(line, 1, w, x as isize - dj);
                    acc += k.weight((di + r) as usize, (dj + r) as usize) * v;
                }
            }
            *out = acc;
        }
    })
}

// Symmetric taps are applied as w[d] * (f[x - d] + f[x + d]), which makes
// the result exactly mirror-equivariant.
fn convolve_separable(f: &ScalarField, axis: &[f64], padding: Padding) -> ScalarField {
    let (w, h) = f.dims();
    let r = axis.len() / 2;
    let src = f.values();
    let horiz = ScalarField::build_rows(w, h, |y, row| {
        let line = &src[y * w..(y + 1) * w];
        for (x, out) in row.iter_mut().enumerate() {
            let mut acc = axis[r] * line[x];
            for d in 1..=r {
                let left = padding.sample(line, 1, w, x as isize - d as isize);
                let right = padding.sample(line, 1, w, (x + d) as isize);
                acc += axis[r + d] * (left + right);
            }
            *out = acc;
        }
    });
    let hv = horiz.values();
    ScalarField::build_rows(w, h, |y, row| {
        for (x, out) in row.iter_mut().enumerate() {
            let col = &hv[x..];
            let mut acc = axis[r] * hv[y * w + x];
            for d in 1..=r {
                let up = padding.sample(col, w, h, y as isize - d as isize);
                let down = padding.sample(col, w, h, (y + d) as isize);
                acc += axis[r + d] * (up + down);
            }
            *out = acc;
        }
    })
}

fn require_min(f: &ScalarField, min: usize) -> Result<(), KernelError> {
    let (width, height) = f.dims();
    if width < min || height < min {
        return Err(KernelError::TooSmall { width, height, min });
    }
    Ok(())
}

#[inline]
fn diff_1d(values: &[f64], stride: usize, n: usize, i: usize) -> f64 {
    // Central differences inside, one-sided at the two ends.
    if i == 0 {
        values[stride] - values[0]
    } else if i == n - 1 {
        values[i * stride] - values[(i - 1) * stride]
    } else {
        (values[(i + 1) * stride] - values[(i - 1) * stride]) / 2.0
    }
}

/// Central-difference gradient `(d/dx, d/dy)`.
pub fn gradient_central(f: &ScalarField) -> Result<(ScalarField, ScalarField), KernelError> {
    require_min(f, 2)?;
    let (w, h) = f.dims();
    let v = f.values();
    let fx = ScalarField::build_rows(w, h, |y, row| {
        let line = &v[y * w..(y + 1) * w];
        for (x, out) in row.iter_mut().enumerate() {
            *out = diff_1d(line, 1, w, x);
        }
    });
    let fy = ScalarField::build_rows(w, h, |y, row| {
        for (x, out) in row.iter_mut().enumerate() {
            *out = diff_1d(&v[x..], w, h, y);
        }
    });
    Ok((fx, fy))
}

/// `|grad f|` from [`gradient_central`].
pub fn gradient_magnitude(f: &ScalarField) -> Result<ScalarField, KernelError> {
    let (fx, fy) = gradient_central(f)?;
    Ok(fx.zip_map(&fy, |a, b| (a * a + b * b).sqrt())?)
}

/// Mean curvature `div(grad phi / |grad phi|)` by central differences with
/// replicated borders. `eps_guard` is added to `|grad phi|^2` before the
/// 3/2 power.
pub fn curvature(phi: &ScalarField, eps_guard: f64) -> Result<ScalarField, KernelError> {
    require_min(phi, 3)?;
    let (w, h) = phi.dims();
    let v = phi.values();
    let at = |x: isize, y: isize| -> f64 {
        let xc = x.clamp(0, w as isize - 1) as usize;
        let yc = y.clamp(0, h as isize - 1) as usize;
        v[yc * w + xc]
    };
    Ok(ScalarField::build_rows(w, h, |y, row| {
        let y = y as isize;
        for (x, out) in row.iter_mut().enumerate() {
            let x = x as isize;
            let c = at(x, y);
            let fx = (at(x + 1, y) - at(x - 1, y)) / 2.0;
            let fy = (at(x, y + 1) - at(x, y - 1)) / 2.0;
            let fxx = (at(x + 1, y) + at(x - 1, y)) - 2.0 * c;
            let fyy = (at(x, y + 1) + at(x, y - 1)) - 2.0 * c;
            let fxy = ((at(x + 1, y + 1) - at(x + 1, y - 1))
                - (at(x - 1, y + 1) - at(x - 1, y - 1)))
                / 4.0;
            let num = fxx * fy * fy - 2.0 * fx * fy * fxy + fyy * fx * fx;
            let den = (fx * fx + fy * fy + eps_guard).powf(1.5);
            *out = num / den;
        }
    }))
}

const FAR: f64 = 1e20;

/// 1-D squared distance transform by the lower envelope of parabolas.
fn edt_1d(f: &[f64], out: &mut [f64], v: &mut [usize], z: &mut [f64]) {
    let n = f.len();
    let mut k = 0usize;
    v[0] = 0;
    z[0] = f64::NEG_INFINITY;
    z[1] = f64::INFINITY;
    for q in 1..n {
        let qf = q as f64;
        let mut s;
        loop {
            let pf = v[k] as f64;
            s = ((f[q] + qf * qf) - (f[v[k]] + pf * pf)) / (2.0 * qf - 2.0 * pf);
            // z[0] is -inf, so this never steps below the first parabola.
            if s <= z[k] {
                k -= 1;
            } else {
                break;
            }
        }
        k += 1;
        v[k] = q;
        z[k] = s;
        z[k + 1] = f64::INFINITY;
    }
    k = 0;
    for (q, o) in out.iter_mut().enumerate() {
        let qf = q as f64;
        while z[k + 1] < qf {
            k += 1;
        }
        let d = qf - v[k] as f64;
        *o = d * d + f[v[k]];
    }
}

/// Squared Euclidean distance from every pixel to the nearest `target` pixel.
fn squared_distance_to(mask: &BinaryMask, target: bool) -> Vec<f64> {
    let (w, h) = mask.dims();
    let bits = mask.bits();
    let n = w.max(h);
    let mut grid: Vec<f64> = bits.iter().map(|&b| if b == target { 0.0 } else { FAR }).collect();

    let mut col = vec![0.0; h];
    let mut col_out = vec![0.0; h];
    let mut v = vec![0usize; n];
    let mut z = vec![0.0; n + 1];
    for x in 0..w {
        for y in 0..h {
            col[y] = grid[y * w + x];
        }
        edt_1d(&col, &mut col_out, &mut v, &mut z);
        for y in 0..h {
            grid[y * w + x] = col_out[y].min(FAR);
        }
    }
    let mut row_out = vec![0.0; w];
    for y in 0..h {
        edt_1d(&grid[y * w..(y + 1) * w], &mut row_out, &mut v, &mut z);
        grid[y * w..(y + 1) * w].copy_from_slice(&row_out);
    }
    grid
}

/// Exact signed Euclidean distance in pixels: positive outside the object
/// (distance to the nearest object pixel), negative inside (distance to the
/// nearest background pixel).
pub fn signed_distance(mask: &BinaryMask) -> Result<ScalarField, KernelError> {
    let n_obj = mask.count();
    if n_obj == 0 || n_obj == mask.bits().len() {
        return Err(KernelError::SingleClassMask);
    }
    let to_object = squared_distance_to(mask, true);
    let to_background = squared_distance_to(mask, false);
    let values = mask
        .bits()
        .iter()
        .zip(to_object.iter().zip(&to_background))
        .map(|(&inside, (&d_obj, &d_bg))| if inside { -d_bg.sqrt() } else { d_obj.sqrt() })
        .collect();
    Ok(ScalarField::new(mask.width(), mask.height(), values)?)
}
