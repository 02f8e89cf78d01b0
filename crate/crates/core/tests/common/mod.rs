//! Brute-force reference implementations shared by the integration tests.
//! They deliberately avoid the library's fast paths.

#![allow(dead_code)]

use levelset_core::{BinaryMask, ScalarField};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_field(rng: &mut impl Rng, w: usize, h: usize) -> ScalarField {
    ScalarField::new(w, h, (0..w * h).map(|_| rng.random::<f64>()).collect()).unwrap()
}

pub fn random_mask(rng: &mut impl Rng, w: usize, h: usize, p: f64) -> BinaryMask {
    loop {
        let bits: Vec<bool> = (0..w * h).map(|_| rng.random_bool(p)).collect();
        let n = bits.iter().filter(|&&b| b).count();
        if n > 0 && n < w * h {
            return BinaryMask::new(w, h, bits).unwrap();
        }
    }
}

/// Closed-form Gaussian template, normalized.
pub fn gaussian_template(sigma: f64, ts: usize) -> Vec<Vec<f64>> {
    let c = (ts as f64 - 1.0) / 2.0;
    let mut k: Vec<Vec<f64>> = (0..ts)
        .map(|i| {
            (0..ts)
                .map(|j| {
                    let r2 = (i as f64 - c).powi(2) + (j as f64 - c).powi(2);
                    (-r2 / (2.0 * sigma * sigma)).exp()
                })
                .collect()
        })
        .collect();
    let total: f64 = k.iter().flatten().sum();
    for row in &mut k {
        for v in row.iter_mut() {
            *v /= total;
        }
    }
    k
}

/// Quadruple-loop "same" convolution with zero padding.
pub fn convolve_oracle(f: &ScalarField, k: &[Vec<f64>]) -> Vec<f64> {
    let (w, h) = f.dims();
    let ts = k.len() as isize;
    let r = ts / 2;
    let mut out = vec![0.0; w * h];
    for y in 0..h as isize {
        for x in 0..w as isize {
            let mut acc = 0.0;
            for i in 0..ts {
                for j in 0..ts {
                    let sy = y + r - i;
                    let sx = x + r - j;
                    if sy >= 0 && sy < h as isize && sx >= 0 && sx < w as isize {
                        acc += k[i as usize][j as usize] * f.get(sx as usize, sy as usize);
                    }
                }
            }
            out[(y * w as isize + x) as usize] = acc;
        }
    }
    out
}

/// Signed distance by scanning every pixel of the opposite class.
pub fn signed_distance_oracle(mask: &BinaryMask) -> Vec<f64> {
    let (w, h) = mask.dims();
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let inside = mask.get(x, y);
            let mut best = u64::MAX;
            for yy in 0..h {
                for xx in 0..w {
                    if mask.get(xx, yy) != inside {
                        let dx = x.abs_diff(xx) as u64;
                        let dy = y.abs_diff(yy) as u64;
                        best = best.min(dx * dx + dy * dy);
                    }
                }
            }
            let d = (best as f64).sqrt();
            out[y * w + x] = if inside { -d } else { d };
        }
    }
    out
}

/// `(mean over phi >= 0, mean over phi < 0)`.
pub fn region_means_oracle(image: &ScalarField, phi: &ScalarField) -> (Option<f64>, Option<f64>) {
    let (mut sp, mut np, mut sm, mut nm) = (0.0, 0usize, 0.0, 0usize);
    for (&i, &p) in image.values().iter().zip(phi.values()) {
        if p >= 0.0 {
            sp += i;
            np += 1;
        } else {
            sm += i;
            nm += 1;
        }
    }
    let mean = |s: f64, n: usize| (n > 0).then(|| s / n as f64);
    (mean(sp, np), mean(sm, nm))
}

/// `(p_m, p_e, p_g)` by a per-pixel loop.
pub fn counts_oracle(extracted: &BinaryMask, truth: &BinaryMask) -> (u64, u64, u64) {
    let (w, h) = truth.dims();
    let (mut m, mut e, mut g) = (0, 0, 0);
    for y in 0..h {
        for x in 0..w {
            let (a, b) = (extracted.get(x, y), truth.get(x, y));
            m += (a && b) as u64;
            e += a as u64;
            g += b as u64;
        }
    }
    (m, e, g)
}

/// Even-odd membership by counting edge crossings of a ray toward -x.
pub fn even_odd_oracle(vertices: &[[f64; 2]], px: f64, py: f64) -> bool {
    let n = vertices.len();
    let mut crossings = 0;
    for i in 0..n {
        let [x0, y0] = vertices[i];
        let [x1, y1] = vertices[(i + 1) % n];
        if (y0 > py) == (y1 > py) {
            continue;
        }
        let t = (py - y0) / (y1 - y0);
        if x0 + t * (x1 - x0) < px {
            crossings += 1;
        }
    }
    crossings % 2 == 1
}

/// Signed distance to a circle, negative inside.
pub fn circle_sdf(w: usize, h: usize, cx: f64, cy: f64, r: f64) -> ScalarField {
    ScalarField::from_fn(w, h, |x, y| ((x as f64 - cx).hypot(y as f64 - cy)) - r).unwrap()
}

pub mod suites {
    use super::*;
    use levelset_core::{
        confusion_counts, convolve_same, gaussian_kernel, region_means, signed_distance,
    };
    use levelset_core::kernels::{convolve_direct, Padding};

    /// Worst deviation of both convolution paths from the quadruple loop.
    pub fn convolution(trials: u64) -> f64 {
        let mut worst: f64 = 0.0;
        for t in 0..trials {
            let f = random_field(&mut rng(100 + t), 12, 12);
            let k = gaussian_kernel(2.0, 9).unwrap();
            let want = convolve_oracle(&f, &gaussian_template(2.0, 9));
            for got in [convolve_same(&f, &k), convolve_direct(&f, &k, Padding::Zero)] {
                for (a, b) in got.values().iter().zip(&want) {
                    worst = worst.max((a - b).abs());
                }
            }
        }
        worst
    }

    /// Number of pixels where the distance transform differs from the
    /// all-pairs scan.
    pub fn signed_distance_mismatches(trials: u64) -> usize {
        let mut bad = 0;
        for t in 0..trials {
            let mask = random_mask(&mut rng(200 + t), 16, 16, 0.1 + 0.08 * t as f64);
            let got = signed_distance(&mask).unwrap();
            let want = signed_distance_oracle(&mask);
            bad += got.values().iter().zip(&want).filter(|(a, b)| a != b).count();
        }
        bad
    }

    pub fn region_means_error(trials: u64) -> f64 {
        let mut worst: f64 = 0.0;
        for t in 0..trials {
            let mut r = rng(300 + t);
            let (w, h) = (5 + t as usize, 17 - t as usize);
            let image = random_field(&mut r, w, h);
            let phi = ScalarField::new(w, h, (0..w * h).map(|_| r.random_range(-1.0..1.0)).collect()).unwrap();
            let (cp, cm) = region_means_oracle(&image, &phi);
            match (region_means(&image, &phi).unwrap(), cp, cm) {
                (Some(m), Some(cp), Some(cm)) => {
                    worst = worst.max((m.c_plus - cp).abs()).max((m.c_minus - cm).abs());
                }
                (None, a, b) if a.is_none() || b.is_none() => {}
                _ => return f64::INFINITY,
            }
        }
        worst
    }

    pub fn metrics_mismatches(trials: u64) -> usize {
        let mut bad = 0;
        for t in 0..trials {
            let mut r = rng(400 + t);
            let a = random_mask(&mut r, 13, 9, 0.3);
            let b = random_mask(&mut r, 13, 9, 0.6);
            let c = confusion_counts(&a, &b).unwrap();
            let (m, e, g) = counts_oracle(&a, &b);
            bad += ((c.p_m, c.p_e, c.p_g, c.p_um) != (m, e, g, g - m)) as usize;
        }
        bad
    }

    /// Worst `|sum - 1|` and worst deviation from the closed form over the
    /// standard sigma and template grid.
    pub fn kernel_normalization() -> (f64, f64) {
        let (mut sum_err, mut weight_err): (f64, f64) = (0.0, 0.0);
        for sigma in [0.5, 1.0, 2.0, 3.0, 5.0] {
            for ts in [3, 9, 15] {
                let k = gaussian_kernel(sigma, ts).unwrap();
                sum_err = sum_err.max((k.weights().iter().sum::<f64>() - 1.0).abs());
                let want = gaussian_template(sigma, ts);
                for i in 0..ts {
                    for j in 0..ts {
                        weight_err = weight_err.max((k.weight(i, j) - want[i][j]).abs());
                    }
                }
            }
        }
        (sum_err, weight_err)
    }
}
