//! Node-major storage for `(path, node, ...)` arrays.
//!
//! Solvers and estimators sweep one node at a time across all paths, so the
//! per-node slice is kept contiguous while indexing stays `(path, node, ...)`.

use ndarray::{Array2, Array3, Array4, ArrayView2, ArrayView3, ArrayView4, Axis, Zip};

pub(crate) fn zeros2(m: usize, n: usize) -> Array2<f64> {
    Array2::zeros((n, m)).reversed_axes()
}

pub(crate) fn zeros3(m: usize, n: usize, d: usize) -> Array3<f64> {
    Array3::zeros((n, m, d)).permuted_axes([1, 0, 2])
}

pub(crate) fn zeros4(m: usize, n: usize, d: usize, k: usize) -> Array4<f64> {
    Array4::zeros((n, m, d, k)).permuted_axes([1, 0, 2, 3])
}

/// Node-major copy of a `(path, node)` table.
pub(crate) fn to_node_major2(a: ArrayView2<f64>) -> Array2<f64> {
    let (m, n) = a.dim();
    let mut out = zeros2(m, n);
    for i in 0..n {
        out.column_mut(i).assign(&a.column(i));
    }
    out
}

/// `a - b`, node by node, into a node-major array.
pub(crate) fn diff3(a: ArrayView3<f64>, b: ArrayView3<f64>) -> Array3<f64> {
    let (m, n, d) = a.dim();
    let mut out = zeros3(m, n, d);
    for i in 0..n {
        Zip::from(out.index_axis_mut(Axis(1), i))
            .and(a.index_axis(Axis(1), i))
            .and(b.index_axis(Axis(1), i))
            .for_each(|o, &x, &y| *o = x - y);
    }
    out
}

/// `a - b` for `(path, node, d, k)` arrays, flattened to `(path, node, d k)`.
pub(crate) fn diff4_flat(a: ArrayView4<f64>, b: ArrayView4<f64>) -> Array3<f64> {
    let (m, n, d, k) = a.dim();
    let mut out = zeros3(m, n, d * k);
    for i in 0..n {
        let (ai, bi) = (a.index_axis(Axis(1), i), b.index_axis(Axis(1), i));
        let mut oi = out.index_axis_mut(Axis(1), i);
        for p in 0..m {
            for j in 0..d {
                for l in 0..k {
                    oi[[p, j * k + l]] = ai[[p, j, l]] - bi[[p, j, l]];
                }
            }
        }
    }
    out
}

/// Node-major copy of a `(path, node, d)` array (no copy if already node-major).
pub(crate) fn into_node_major3(a: Array3<f64>) -> Array3<f64> {
    if a.view().permuted_axes([1, 0, 2]).is_standard_layout() {
        return a;
    }
    let (m, n, d) = a.dim();
    let mut out = zeros3(m, n, d);
    out.assign(&a);
    out
}

/// Node-major copy of a `(path, node, d, k)` array (no copy if already node-major).
pub(crate) fn into_node_major4(a: Array4<f64>) -> Array4<f64> {
    if a.view().permuted_axes([1, 0, 2, 3]).is_standard_layout() {
        return a;
    }
    let (m, n, d, k) = a.dim();
    let mut out = zeros4(m, n, d, k);
    out.assign(&a);
    out
}

/// Flattens the last two axes of a node-major `(path, node, d, k)` array.
pub(crate) fn flatten_node_major4(a: ArrayView4<'_, f64>) -> ArrayView3<'_, f64> {
    let (m, n, d, k) = a.dim();
    a.permuted_axes([1, 0, 2, 3])
        .into_shape_with_order((n, m, d * k))
        .expect("node-major layout")
        .permuted_axes([1, 0, 2])
}
