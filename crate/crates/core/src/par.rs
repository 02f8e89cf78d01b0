//! Row-parallel helpers. With the `parallel` feature the rows are handed to
//! rayon; without it the same closures run in a plain loop. Every output
//! pixel is computed by one closure call in a fixed order, so both builds
//! produce bit-identical results.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Fills `out` row by row. `f(y, row)` writes row `y`.
pub(crate) fn fill_rows<F>(out: &mut [f64], width: usize, f: F)
where
    F: Fn(usize, &mut [f64]) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    out.par_chunks_mut(width)
        .enumerate()
        .for_each(|(y, row)| f(y, row));
    #[cfg(not(feature = "parallel"))]
    out.chunks_mut(width)
        .enumerate()
        .for_each(|(y, row)| f(y, row));
}

/// Evaluates `f(y)` for every row and returns the results in row order.
pub(crate) fn map_rows<T, F>(height: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    return (0..height).into_par_iter().map(f).collect();
    #[cfg(not(feature = "parallel"))]
    return (0..height).map(f).collect();
}

/// Sum of `term(x)` over `0..n`, pairing `x` with `n - 1 - x` before
/// accumulating. The result is invariant under reversing the index order,
/// which keeps reductions exactly mirror-equivariant.
pub(crate) fn mirror_sum<F: Fn(usize) -> f64>(n: usize, term: F) -> f64 {
    let half = n / 2;
    let mut acc = 0.0;
    for x in 0..half {
        acc += term(x) + term(n - 1 - x);
    }
    if n % 2 == 1 {
        acc += term(half);
    }
    acc
}

/// Mirror-symmetric sum over a `width x height` grid: rows are reduced with
/// [`mirror_sum`] (in parallel when enabled), then the row totals are
/// combined the same way.
pub(crate) fn grid_sum<F>(width: usize, height: usize, term: F) -> f64
where
    F: Fn(usize, usize) -> f64 + Sync + Send,
{
    let rows = map_rows(height, |y| mirror_sum(width, |x| term(x, y)));
    mirror_sum(height, |y| rows[y])
}
