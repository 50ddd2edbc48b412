//! Small helpers for tensor-product nodal fields on hexahedra.
//!
//! Node storage convention everywhere in the crate: index
//! `(k * nj + j) * ni + i` with `i` fastest, and an optional trailing
//! component dimension.

/// Volume node index for a cube with `np` nodes per direction.
#[inline]
pub fn node_index(np: usize, i: usize, j: usize, k: usize) -> usize {
    (k * np + j) * np + i
}

/// Apply a 1D operator (row-major `n_out x n_in`) along one axis of a
/// tensor-product field with `ncomp` trailing components.
///
/// Returns the new shape and data. Used for geometry interpolation and metric
/// resampling at startup; the solver hot path uses specialized line loops.
pub fn apply_axis(
    mat: &[f64],
    n_out: usize,
    n_in: usize,
    axis: usize,
    shape: [usize; 3],
    data: &[f64],
    ncomp: usize,
) -> ([usize; 3], Vec<f64>) {
    assert_eq!(shape[axis], n_in);
    assert_eq!(data.len(), shape[0] * shape[1] * shape[2] * ncomp);
    let mut out_shape = shape;
    out_shape[axis] = n_out;
    let mut out = vec![0.0; out_shape[0] * out_shape[1] * out_shape[2] * ncomp];
    for k in 0..out_shape[2] {
        for j in 0..out_shape[1] {
            for i in 0..out_shape[0] {
                let oi = [i, j, k];
                let o_base = ((k * out_shape[1] + j) * out_shape[0] + i) * ncomp;
                for m in 0..n_in {
                    let w = mat[oi[axis] * n_in + m];
                    if w == 0.0 {
                        continue;
                    }
                    let mut ii = oi;
                    ii[axis] = m;
                    let i_base = ((ii[2] * shape[1] + ii[1]) * shape[0] + ii[0]) * ncomp;
                    for c in 0..ncomp {
                        out[o_base + c] += w * data[i_base + c];
                    }
                }
            }
        }
    }
    (out_shape, out)
}

/// Derivative of a cubic field along `axis` with the square matrix `d`
/// (row-major `np x np`), `ncomp` trailing components.
pub fn derivative_axis(d: &[f64], np: usize, axis: usize, data: &[f64], ncomp: usize) -> Vec<f64> {
    let (_, out) = apply_axis(d, np, np, axis, [np, np, np], data, ncomp);
    out
}
