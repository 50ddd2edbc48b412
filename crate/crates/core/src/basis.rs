//! 1D nodal spectral bases on [-1, 1]: Legendre-Gauss and Legendre-Gauss-Lobatto
//! nodes, quadrature weights, differentiation matrices and boundary interpolants.
//!
//! Tensor-product extension to hexahedra is done by the consumers (mesh metrics
//! and the spatial operator); everything here is one-dimensional.

use crate::error::{Error, Result};

/// Quadrature node family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    /// Legendre-Gauss: interior nodes only, exactness degree 2N+1.
    Gauss,
    /// Legendre-Gauss-Lobatto: includes both endpoints, exactness degree 2N-1,
    /// diagonal-norm summation-by-parts property.
    GaussLobatto,
}

/// Maximum supported polynomial order.
pub const MAX_ORDER: usize = 12;

/// A 1D nodal basis of order N: N+1 nodes with weights, the nodal
/// differentiation matrix and the Lagrange boundary interpolants.
///
/// Immutable after construction; safe to share across threads.
#[derive(Debug, Clone)]
pub struct BasisSet {
    pub kind: NodeKind,
    /// Polynomial order N (N+1 nodes).
    pub order: usize,
    /// Nodes in ascending order.
    pub nodes: Vec<f64>,
    /// Quadrature weights (all positive, summing to 2).
    pub weights: Vec<f64>,
    /// Differentiation matrix, row-major: `diff[i*(N+1)+j] = l_j'(x_i)`.
    pub diff: Vec<f64>,
    /// Lagrange cardinal values at x = -1.
    pub interp_left: Vec<f64>,
    /// Lagrange cardinal values at x = +1.
    pub interp_right: Vec<f64>,
    /// Barycentric weights of the node set.
    pub bary: Vec<f64>,
    /// True when the endpoints are nodes (Gauss-Lobatto), so face values can
    /// be read off node 0 / node N instead of interpolated.
    pub nodal_boundary: bool,
}

impl BasisSet {
    pub fn len(&self) -> usize {
        self.order + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn d(&self, i: usize, j: usize) -> f64 {
        self.diff[i * (self.order + 1) + j]
    }
}

/// Evaluate the Legendre polynomial P_n and its derivative at x.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let mut p_prev = 1.0;
    let mut p = x;
    for k in 1..n {
        let kf = k as f64;
        let p_next = ((2.0 * kf + 1.0) * x * p - kf * p_prev) / (kf + 1.0);
        p_prev = p;
        p = p_next;
    }
    // (1 - x^2) P_n' = n (P_{n-1} - x P_n)
    let nf = n as f64;
    let dp = if (1.0 - x * x).abs() < 1e-300 {
        // endpoint limit: P_n'(+-1) = (+-1)^{n-1} n(n+1)/2
        let sign = if x > 0.0 { 1.0 } else { (-1.0f64).powi(n as i32 - 1) };
        sign * nf * (nf + 1.0) / 2.0
    } else {
        nf * (p_prev - x * p) / (1.0 - x * x)
    };
    (p, dp)
}

const NEWTON_TOL: f64 = 1e-15;
const NEWTON_MAX_IT: usize = 200;

/// Roots of P_n by Newton iteration from Chebyshev initial guesses.
fn gauss_nodes(n_pts: usize) -> Vec<f64> {
    let n = n_pts;
    let mut nodes = vec![0.0; n];
    for (i, node) in nodes.iter_mut().enumerate() {
        let mut x = -(std::f64::consts::PI * (2.0 * i as f64 + 1.0) / (2.0 * n as f64)).cos();
        for _ in 0..NEWTON_MAX_IT {
            let (p, dp) = legendre(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < NEWTON_TOL {
                break;
            }
        }
        *node = x;
    }
    symmetrize(&mut nodes);
    nodes
}

/// Interior Lobatto nodes: roots of P_N' by Newton iteration.
fn lobatto_nodes(order: usize) -> Vec<f64> {
    let n = order;
    let mut nodes = vec![0.0; n + 1];
    nodes[0] = -1.0;
    nodes[n] = 1.0;
    let nf = n as f64;
    for i in 1..n {
        let mut x = -(std::f64::consts::PI * i as f64 / nf).cos();
        for _ in 0..NEWTON_MAX_IT {
            let (p, dp) = legendre(n, x);
            // q = P_N', q' = P_N'' from the Legendre ODE
            let ddp = (2.0 * x * dp - nf * (nf + 1.0) * p) / (1.0 - x * x);
            let dx = dp / ddp;
            x -= dx;
            if dx.abs() < NEWTON_TOL {
                break;
            }
        }
        nodes[i] = x;
    }
    symmetrize(&mut nodes);
    nodes
}

/// Enforce exact symmetry about the origin (kills last-bit Newton asymmetry).
fn symmetrize(nodes: &mut [f64]) {
    let n = nodes.len();
    for i in 0..n / 2 {
        let v = 0.5 * (nodes[n - 1 - i] - nodes[i]);
        nodes[i] = -v;
        nodes[n - 1 - i] = v;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
}

/// Barycentric weights b_i = 1 / prod_{j != i} (x_i - x_j), normalized.
pub fn barycentric_weights(nodes: &[f64]) -> Vec<f64> {
    let n = nodes.len();
    let mut b = vec![1.0; n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                b[i] *= nodes[i] - nodes[j];
            }
        }
        b[i] = 1.0 / b[i];
    }
    let scale = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for v in &mut b {
        *v /= scale;
    }
    b
}

/// Lagrange cardinal values l_j(x) for every j, by the barycentric formula.
/// Exact cardinal vectors when x coincides with a node.
pub fn lagrange_values(nodes: &[f64], bary: &[f64], x: f64) -> Vec<f64> {
    let n = nodes.len();
    let mut out = vec![0.0; n];
    for j in 0..n {
        if x == nodes[j] {
            out[j] = 1.0;
            return out;
        }
    }
    let mut denom = 0.0;
    for j in 0..n {
        let t = bary[j] / (x - nodes[j]);
        out[j] = t;
        denom += t;
    }
    for v in &mut out {
        *v /= denom;
    }
    out
}

/// Lagrange cardinal derivatives l_j'(x) for every j.
///
/// Barycentric quotient rule away from nodes; at a node, the analytic
/// differentiation-matrix row.
pub fn lagrange_derivatives(nodes: &[f64], bary: &[f64], x: f64) -> Vec<f64> {
    let n = nodes.len();
    if let Some(i) = nodes.iter().position(|&xn| xn == x) {
        let mut out = vec![0.0; n];
        let mut diag = 0.0;
        for j in 0..n {
            if j != i {
                let v = (bary[j] / bary[i]) / (nodes[i] - nodes[j]);
                out[j] = v;
                diag -= v;
            }
        }
        out[i] = diag;
        return out;
    }
    // l_j = N_j / D with N_j = b_j/(x - x_j), D = sum N_k
    let mut nvals = vec![0.0; n];
    let mut nders = vec![0.0; n];
    let (mut d, mut dd) = (0.0, 0.0);
    for j in 0..n {
        let inv = 1.0 / (x - nodes[j]);
        nvals[j] = bary[j] * inv;
        nders[j] = -bary[j] * inv * inv;
        d += nvals[j];
        dd += nders[j];
    }
    (0..n)
        .map(|j| (nders[j] * d - nvals[j] * dd) / (d * d))
        .collect()
}

/// Row-major interpolation matrix from `nodes` to `targets`:
/// `M[t * nodes.len() + j] = l_j(targets[t])`.
pub fn interpolation_matrix(nodes: &[f64], targets: &[f64]) -> Vec<f64> {
    let bary = barycentric_weights(nodes);
    let mut m = Vec::with_capacity(nodes.len() * targets.len());
    for &x in targets {
        m.extend(lagrange_values(nodes, &bary, x));
    }
    m
}

/// Nodal differentiation matrix D_ij = l_j'(x_i) from barycentric weights.
fn differentiation_matrix(nodes: &[f64], bary: &[f64]) -> Vec<f64> {
    let n = nodes.len();
    let mut d = vec![0.0; n * n];
    for i in 0..n {
        let mut diag = 0.0;
        for j in 0..n {
            if i != j {
                let v = (bary[j] / bary[i]) / (nodes[i] - nodes[j]);
                d[i * n + j] = v;
                diag -= v;
            }
        }
        d[i * n + i] = diag;
    }
    d
}

/// Construct a nodal basis of the given kind and order.
///
/// Nodes are found by Newton iteration on the Legendre polynomials with
/// Chebyshev initial guesses (tolerance 1e-15); all derived quantities are
/// computed once and frozen.
pub fn build_basis(kind: NodeKind, order: usize) -> Result<BasisSet> {
    if order < 1 || order > MAX_ORDER {
        return Err(Error::Config(format!(
            "polynomial order {order} out of range [1, {MAX_ORDER}]"
        )));
    }
    let (nodes, weights) = match kind {
        NodeKind::Gauss => {
            let nodes = gauss_nodes(order + 1);
            let n_pts = order + 1;
            let weights: Vec<f64> = nodes
                .iter()
                .map(|&x| {
                    let (_, dp) = legendre(n_pts, x);
                    2.0 / ((1.0 - x * x) * dp * dp)
                })
                .collect();
            (nodes, weights)
        }
        NodeKind::GaussLobatto => {
            let nodes = lobatto_nodes(order);
            let nf = order as f64;
            let weights: Vec<f64> = nodes
                .iter()
                .map(|&x| {
                    let (p, _) = legendre(order, x);
                    2.0 / (nf * (nf + 1.0) * p * p)
                })
                .collect();
            (nodes, weights)
        }
    };
    let bary = barycentric_weights(&nodes);
    let diff = differentiation_matrix(&nodes, &bary);
    let interp_left = lagrange_values(&nodes, &bary, -1.0);
    let interp_right = lagrange_values(&nodes, &bary, 1.0);
    Ok(BasisSet {
        kind,
        order,
        nodes,
        weights,
        diff,
        interp_left,
        interp_right,
        bary,
        nodal_boundary: kind == NodeKind::GaussLobatto,
    })
}

/// Highest degree d such that every monomial x^k, k <= d, integrates on
/// [-1, 1] to within 1e-12 of the exact value.
///
/// Contract: 2N+1 for Gauss, 2N-1 for Gauss-Lobatto.
pub fn quadrature_exactness_degree(basis: &BasisSet) -> usize {
    const TOL: f64 = 1e-12;
    let cap = 4 * basis.order + 6;
    let mut degree = 0;
    for k in 0..=cap {
        let exact = if k % 2 == 0 { 2.0 / (k as f64 + 1.0) } else { 0.0 };
        let approx: f64 = basis
            .nodes
            .iter()
            .zip(&basis.weights)
            .map(|(&x, &w)| w * x.powi(k as i32))
            .sum();
        if (approx - exact).abs() > TOL {
            break;
        }
        degree = k;
    }
    degree
}

/// Max-norm of W D + D^T W - B with W = diag(w) and B = diag(-1, 0, ..., +1).
///
/// Zero (to roundoff) on Gauss-Lobatto nodes; O(1) on Gauss nodes, where the
/// summation-by-parts property does not hold nodally. The value is reported
/// without judgment.
pub fn sbp_residual(basis: &BasisSet) -> f64 {
    let n = basis.order + 1;
    let mut max = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let mut r = basis.weights[i] * basis.d(i, j) + basis.weights[j] * basis.d(j, i);
            if i == j {
                if i == 0 {
                    r += 1.0;
                }
                if i == n - 1 {
                    r -= 1.0;
                }
            }
            max = max.max(r.abs());
        }
    }
    max
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    #[test]
    fn gauss_lobatto_order_1() {
        let b = build_basis(NodeKind::GaussLobatto, 1).unwrap();
        assert_eq!(b.nodes, vec![-1.0, 1.0]);
        assert_eq!(b.weights, vec![1.0, 1.0]);
    }

    #[test]
    fn gauss_lobatto_order_2() {
        // Legendre-Lobatto conditions solved analytically: interior node is the
        // root of P_2' = 3x, weights 2/(N(N+1) P_N(x)^2).
        let b = build_basis(NodeKind::GaussLobatto, 2).unwrap();
        assert_close(b.nodes[0], -1.0, 0.0);
        assert_close(b.nodes[1], 0.0, 1e-15);
        assert_close(b.nodes[2], 1.0, 0.0);
        assert_close(b.weights[0], 1.0 / 3.0, 1e-15);
        assert_close(b.weights[1], 4.0 / 3.0, 1e-15);
        assert_close(b.weights[2], 1.0 / 3.0, 1e-15);
    }

    #[test]
    fn gauss_order_1() {
        // P_2 = (3x^2 - 1)/2 has roots +-1/sqrt(3).
        let b = build_basis(NodeKind::Gauss, 1).unwrap();
        let r = 1.0 / 3.0f64.sqrt();
        assert_close(b.nodes[0], -r, 1e-15);
        assert_close(b.nodes[1], r, 1e-15);
        assert_close(b.weights[0], 1.0, 1e-15);
        assert_close(b.weights[1], 1.0, 1e-15);
    }

    #[test]
    fn order_out_of_range_rejected() {
        assert!(matches!(
            build_basis(NodeKind::Gauss, 0),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            build_basis(NodeKind::GaussLobatto, MAX_ORDER + 1),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn exactness_degrees() {
        let g4 = build_basis(NodeKind::Gauss, 4).unwrap();
        assert_eq!(quadrature_exactness_degree(&g4), 9);
        let gl4 = build_basis(NodeKind::GaussLobatto, 4).unwrap();
        assert_eq!(quadrature_exactness_degree(&gl4), 7);
        let g1 = build_basis(NodeKind::Gauss, 1).unwrap();
        assert_eq!(quadrature_exactness_degree(&g1), 3);
    }

    #[test]
    fn exactness_contract_all_orders() {
        for n in 1..=8 {
            let g = build_basis(NodeKind::Gauss, n).unwrap();
            assert_eq!(quadrature_exactness_degree(&g), 2 * n + 1, "Gauss N={n}");
            let gl = build_basis(NodeKind::GaussLobatto, n).unwrap();
            assert_eq!(
                quadrature_exactness_degree(&gl),
                2 * n - 1,
                "GaussLobatto N={n}"
            );
        }
    }

    #[test]
    fn sbp_identity_gauss_lobatto() {
        assert!(sbp_residual(&build_basis(NodeKind::GaussLobatto, 4).unwrap()) <= 1e-12);
        assert!(sbp_residual(&build_basis(NodeKind::GaussLobatto, 2).unwrap()) <= 1e-13);
        for n in 1..=8 {
            let r = sbp_residual(&build_basis(NodeKind::GaussLobatto, n).unwrap());
            assert!(r <= 1e-12, "GL N={n}: residual {r}");
        }
    }

    #[test]
    fn sbp_residual_gauss_is_order_one() {
        // The SBP property does not hold nodally on Gauss points; the residual
        // is reported, not judged. Record that it is clearly non-zero.
        let r = sbp_residual(&build_basis(NodeKind::Gauss, 4).unwrap());
        assert!(r > 0.1, "Gauss N=4 SBP residual unexpectedly small: {r}");
    }

    #[test]
    fn weights_and_node_ordering() {
        for n in 1..=MAX_ORDER {
            for kind in [NodeKind::Gauss, NodeKind::GaussLobatto] {
                let b = build_basis(kind, n).unwrap();
                let sum: f64 = b.weights.iter().sum();
                assert_close(sum, 2.0, 1e-13);
                assert!(b.weights.iter().all(|&w| w > 0.0));
                assert!(b.nodes.windows(2).all(|p| p[0] < p[1]));
                match kind {
                    NodeKind::Gauss => {
                        assert!(b.nodes[0] > -1.0 && b.nodes[n] < 1.0);
                    }
                    NodeKind::GaussLobatto => {
                        assert_eq!(b.nodes[0], -1.0);
                        assert_eq!(b.nodes[n], 1.0);
                    }
                }
            }
        }
    }

    #[test]
    fn differentiation_exact_for_polynomials() {
        for kind in [NodeKind::Gauss, NodeKind::GaussLobatto] {
            for n in 1..=8 {
                let b = build_basis(kind, n).unwrap();
                for k in 0..=n {
                    // d/dx x^k = k x^{k-1}, exact for k <= N
                    for i in 0..=n {
                        let der: f64 = (0..=n)
                            .map(|j| b.d(i, j) * b.nodes[j].powi(k as i32))
                            .sum();
                        let exact = if k == 0 {
                            0.0
                        } else {
                            k as f64 * b.nodes[i].powi(k as i32 - 1)
                        };
                        let scale = (k as f64).max(1.0);
                        assert!(
                            (der - exact).abs() <= 1e-11 * scale,
                            "{kind:?} N={n} k={k}: {der} vs {exact}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn boundary_interpolants_are_cardinal_on_lobatto() {
        let b = build_basis(NodeKind::GaussLobatto, 5).unwrap();
        for j in 0..=5 {
            assert_eq!(b.interp_left[j], if j == 0 { 1.0 } else { 0.0 });
            assert_eq!(b.interp_right[j], if j == 5 { 1.0 } else { 0.0 });
        }
    }

    #[test]
    fn lagrange_cardinality_at_nodes() {
        for kind in [NodeKind::Gauss, NodeKind::GaussLobatto] {
            let b = build_basis(kind, 6).unwrap();
            let m = interpolation_matrix(&b.nodes, &b.nodes);
            let n = b.len();
            for i in 0..n {
                for j in 0..n {
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert_eq!(m[i * n + j], expect, "{kind:?} ({i},{j})");
                }
            }
        }
    }

    #[test]
    fn partition_of_unity_at_interior_points() {
        let b = build_basis(NodeKind::Gauss, 4).unwrap();
        for &x in &[-0.987, -0.5, 0.123, 0.9] {
            let l = lagrange_values(&b.nodes, &b.bary, x);
            let s: f64 = l.iter().sum();
            assert_close(s, 1.0, 1e-13);
        }
    }

    proptest! {
        #[test]
        fn basis_invariants(n in 1usize..=8, gauss in proptest::bool::ANY) {
            let kind = if gauss { NodeKind::Gauss } else { NodeKind::GaussLobatto };
            let b = build_basis(kind, n).unwrap();
            let sum: f64 = b.weights.iter().sum();
            prop_assert!((sum - 2.0).abs() <= 1e-13);
            // D annihilates constants
            for i in 0..=n {
                let row: f64 = (0..=n).map(|j| b.d(i, j)).sum();
                prop_assert!(row.abs() <= 1e-12);
            }
        }
    }
}
