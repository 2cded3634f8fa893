use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use super::grid::MultiplierGrid;
use crate::error::{Error, Result};

/// Largest grid (`nx·ny`) accepted for dense eigendecomposition.
pub const GRUSHIN_SIZE_LIMIT: usize = 4096;

/// The box `[−X, X] × [−Y, Y]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GrushinBox {
    pub x_half: f64,
    pub y_half: f64,
}

impl Default for GrushinBox {
    fn default() -> Self {
        Self { x_half: 4.0, y_half: std::f64::consts::PI }
    }
}

/// Finite-difference Grushin operator `−∂_x² − x²∂_y²`, Dirichlet in `x`
/// (interior nodes only), periodic in `y`. Node `(i, j)` has index
/// `i·ny + j`.
#[derive(Debug, Clone)]
pub struct GrushinMatrix {
    pub matrix: DMatrix<f64>,
    pub nx: usize,
    pub ny: usize,
    pub hx: f64,
    pub hy: f64,
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub bx: GrushinBox,
}

pub fn grushin_operator_matrix(nx: usize, ny: usize, bx: GrushinBox) -> Result<GrushinMatrix> {
    let size = nx.saturating_mul(ny);
    if size > GRUSHIN_SIZE_LIMIT {
        return Err(Error::SizeExceeded { size, limit: GRUSHIN_SIZE_LIMIT });
    }
    if nx < 1 || ny < 3 || !(bx.x_half > 0.0 && bx.y_half > 0.0) {
        return Err(Error::InvalidArgument("Grushin grid needs nx ≥ 1, ny ≥ 3 and a positive box".into()));
    }
    let hx = 2.0 * bx.x_half / (nx + 1) as f64;
    let hy = 2.0 * bx.y_half / ny as f64;
    let xs: Vec<f64> = (0..nx).map(|i| -bx.x_half + (i + 1) as f64 * hx).collect();
    let ys: Vec<f64> = (0..ny).map(|j| -bx.y_half + j as f64 * hy).collect();
    let mut a = DMatrix::zeros(size, size);
    let (cx, cy) = (1.0 / (hx * hx), 1.0 / (hy * hy));
    for i in 0..nx {
        let wy = xs[i] * xs[i] * cy;
        for j in 0..ny {
            let k = i * ny + j;
            a[(k, k)] += 2.0 * cx + 2.0 * wy;
            if i > 0 {
                a[(k, k - ny)] -= cx;
            }
            if i + 1 < nx {
                a[(k, k + ny)] -= cx;
            }
            let jm = (j + ny - 1) % ny;
            let jp = (j + 1) % ny;
            a[(k, i * ny + jm)] -= wy;
            a[(k, i * ny + jp)] -= wy;
        }
    }
    let matrix = (&a + a.transpose()) * 0.5;
    Ok(GrushinMatrix { matrix, nx, ny, hx, hy, xs, ys, bx })
}

impl GrushinMatrix {
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.ny + j
    }

    /// Grid node closest to `(x, y)`.
    pub fn nearest_node(&self, x: f64, y: f64) -> usize {
        let closest = |v: &[f64], p: f64| {
            (0..v.len()).min_by(|&a, &b| (v[a] - p).abs().total_cmp(&(v[b] - p).abs())).unwrap_or(0)
        };
        self.index(closest(&self.xs, x), closest(&self.ys, y))
    }

    pub fn eigen(&self) -> SpectralDecomposition {
        SpectralDecomposition::new(&self.matrix)
    }
}

/// Eigenvalues (ascending) and orthonormal eigenvectors (columns).
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    pub eigenvalues: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

impl SpectralDecomposition {
    pub fn new(matrix: &DMatrix<f64>) -> Self {
        let eig = matrix.clone().symmetric_eigen();
        let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let eigenvalues = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let vectors = DMatrix::from_fn(matrix.nrows(), order.len(), |i, c| eig.eigenvectors[(i, order[c])]);
        Self { eigenvalues, vectors }
    }

    /// `√max(μ, 0)` for each eigenvalue; round-off negatives clamp to 0.
    pub fn frequencies(&self) -> Vec<f64> {
        self.eigenvalues.iter().map(|&m| m.max(0.0).sqrt()).collect()
    }

    fn multiplier_values(&self, m: &MultiplierGrid) -> Result<Vec<Complex64>> {
        self.frequencies()
            .into_iter()
            .map(|s| m.eval(s).ok_or(Error::OutsideGrid { value: s, lo: -m.s_max, hi: m.s_max }))
            .collect()
    }
}

/// `m(√L) f = V diag(m(√μ)) V^T f`.
pub fn apply_multiplier_spectral(eig: &SpectralDecomposition, m: &MultiplierGrid, f: &[Complex64]) -> Result<Vec<Complex64>> {
    apply_function(eig, &eig.multiplier_values(m)?, f)
}

/// `V diag(values) V^T f`.
pub fn apply_function(eig: &SpectralDecomposition, values: &[Complex64], f: &[Complex64]) -> Result<Vec<Complex64>> {
    let v = &eig.vectors;
    if f.len() != v.nrows() {
        return Err(Error::InvalidArgument(format!("grid function has {} entries, expected {}", f.len(), v.nrows())));
    }
    let coeffs: Vec<Complex64> =
        (0..v.ncols()).map(|c| v.column(c).iter().zip(f).map(|(a, b)| b * *a).sum::<Complex64>() * values[c]).collect();
    Ok((0..v.nrows()).map(|i| (0..v.ncols()).map(|c| coeffs[c] * v[(i, c)]).sum()).collect())
}

/// The full matrix of `m(√L)`.
pub fn spectral_operator_matrix(eig: &SpectralDecomposition, m: &MultiplierGrid) -> Result<DMatrix<Complex64>> {
    let vals = eig.multiplier_values(m)?;
    let v = &eig.vectors;
    let scaled = DMatrix::from_fn(v.nrows(), v.ncols(), |i, c| vals[c] * v[(i, c)]);
    let vc = v.map(|x| Complex64::new(x, 0.0));
    Ok(scaled * vc.transpose())
}

/// `‖A‖_{1→1}`: largest column sum of moduli.
pub fn norm_one(a: &DMatrix<Complex64>) -> f64 {
    a.column_iter().map(|c| c.iter().map(|v| v.norm()).sum::<f64>()).fold(0.0, f64::max)
}

/// `‖A‖_{∞→∞}`: largest row sum of moduli.
pub fn norm_inf(a: &DMatrix<Complex64>) -> f64 {
    a.row_iter().map(|r| r.iter().map(|v| v.norm()).sum::<f64>()).fold(0.0, f64::max)
}

/// Discrete `ℓ^p` norm, `p ∈ {1, 2}`.
pub fn lp_norm(f: &[Complex64], p: u32) -> f64 {
    match p {
        1 => f.iter().map(|v| v.norm()).sum(),
        _ => f.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt(),
    }
}
