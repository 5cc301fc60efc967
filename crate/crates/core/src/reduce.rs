//! Order-fixed floating point reductions.
//!
//! Every sum in the solver goes through these helpers so that results are
//! bit-identical regardless of how many worker threads computed the operands.
//! The summation tree depends only on the number of terms: blocks of
//! [`LEAF`] terms are added left to right, blocks are then combined pairwise.

const LEAF: usize = 8;

/// Pairwise sum of `f(0) + f(1) + ... + f(n - 1)`.
pub fn pairwise_sum_by<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64,
{
    sum_range(0, n, &f)
}

fn sum_range<F: Fn(usize) -> f64>(lo: usize, hi: usize, f: &F) -> f64 {
    let len = hi - lo;
    if len <= LEAF {
        let mut acc = 0.0;
        for i in lo..hi {
            acc += f(i);
        }
        return acc;
    }
    let mid = lo + len / 2;
    sum_range(lo, mid, f) + sum_range(mid, hi, f)
}

pub fn pairwise_sum(values: &[f64]) -> f64 {
    pairwise_sum_by(values.len(), |i| values[i])
}

/// Sum of the entries of `values` selected by `indexes`, in the given order.
pub fn gather_sum(values: &[f64], indexes: &[usize]) -> f64 {
    pairwise_sum_by(indexes.len(), |i| values[indexes[i]])
}

/// Squared Euclidean distance between two equally long slices.
pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    pairwise_sum_by(a.len(), |i| {
        let d = a[i] - b[i];
        d * d
    })
}
