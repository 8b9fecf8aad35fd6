//! Dense linear-algebra kernels shared by the solvers, the classifier and the
//! diagnostics.
//!
//! Matrices are column-major `nalgebra` matrices whose columns are
//! observations. [`DenseMatrix`] is the validated storage type used by
//! datasets; the kernels themselves accept any `DMatrix<f64>`, so a
//! `&DenseMatrix` can be passed wherever a `&DMatrix<f64>` is expected.

use std::ops::Deref;

use nalgebra::{DMatrix, DVector, DVectorView};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Columns with a Euclidean norm at or below this are treated as zero.
pub const ZERO_COLUMN_TOL: f64 = 1e-12;

/// Default relative rank tolerance (fraction of the leading singular value).
pub const DEFAULT_RANK_RTOL: f64 = 1e-10;

/// A finite, non-empty, column-major matrix whose columns are observations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DMatrix<f64>", into = "DMatrix<f64>")]
pub struct DenseMatrix(DMatrix<f64>);

impl DenseMatrix {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        if matrix.nrows() == 0 || matrix.ncols() == 0 {
            return Err(Error::EmptyInput);
        }
        for col in 0..matrix.ncols() {
            for row in 0..matrix.nrows() {
                if !matrix[(row, col)].is_finite() {
                    return Err(Error::NonFinite { row, col });
                }
            }
        }
        Ok(DenseMatrix(matrix))
    }

    /// Builds a matrix from observation vectors, one per column.
    pub fn from_columns(columns: &[DVector<f64>]) -> Result<Self> {
        let Some(first) = columns.first() else {
            return Err(Error::EmptyInput);
        };
        let rows = first.len();
        if let Some(bad) = columns.iter().find(|c| c.len() != rows) {
            return Err(Error::DimensionMismatch(format!(
                "column of length {} among columns of length {rows}",
                bad.len()
            )));
        }
        Self::new(DMatrix::from_columns(columns))
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }

    /// Copies the listed columns, in order, into a new matrix.
    pub fn select_columns(&self, indices: &[usize]) -> DenseMatrix {
        DenseMatrix(self.0.select_columns(indices))
    }
}

impl Deref for DenseMatrix {
    type Target = DMatrix<f64>;

    fn deref(&self) -> &DMatrix<f64> {
        &self.0
    }
}

impl TryFrom<DMatrix<f64>> for DenseMatrix {
    type Error = Error;

    fn try_from(matrix: DMatrix<f64>) -> Result<Self> {
        DenseMatrix::new(matrix)
    }
}

impl From<DenseMatrix> for DMatrix<f64> {
    fn from(matrix: DenseMatrix) -> Self {
        matrix.0
    }
}

/// Scales every column to unit Euclidean norm.
pub fn normalize_columns(matrix: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let mut out = matrix.clone();
    for (j, mut col) in out.column_iter_mut().enumerate() {
        let norm = col.norm();
        if norm <= ZERO_COLUMN_TOL {
            return Err(Error::ZeroColumn(j));
        }
        col /= norm;
    }
    Ok(out)
}

/// Unit-norm copy of a single vector.
pub fn normalize_vector(x: &DVector<f64>) -> Result<DVector<f64>> {
    let norm = x.norm();
    if norm <= ZERO_COLUMN_TOL {
        return Err(Error::ZeroColumn(0));
    }
    Ok(x / norm)
}

/// Householder QR with column pivoting, truncated at the numerical rank.
///
/// `a * P = Q * R` where `Q` is `m x rank` with orthonormal columns and `R`
/// is `rank x n` upper trapezoidal in the permuted column order.
#[derive(Debug, Clone)]
pub struct PivotedQr {
    q: DMatrix<f64>,
    r: DMatrix<f64>,
    perm: Vec<usize>,
    rank: usize,
}

impl PivotedQr {
    /// Factorizes `a`, treating diagonal entries at or below
    /// `rtol * |R[0,0]|` as zero.
    pub fn new(a: &DMatrix<f64>, rtol: f64) -> Self {
        let (m, n) = a.shape();
        let mut work = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut reflectors: Vec<DVector<f64>> = Vec::new();
        let steps = m.min(n);
        let mut lead = 0.0_f64;
        let mut rank = 0;

        for k in 0..steps {
            // Pivot: largest remaining column norm, lowest index on ties.
            let mut best = k;
            let mut best_norm = -1.0;
            for j in k..n {
                let norm = work.view((k, j), (m - k, 1)).norm_squared();
                if norm > best_norm {
                    best_norm = norm;
                    best = j;
                }
            }
            let best_norm = best_norm.sqrt();
            if k == 0 {
                lead = best_norm;
            }
            if best_norm <= rtol * lead || best_norm == 0.0 {
                break;
            }
            work.swap_columns(k, best);
            perm.swap(k, best);

            let x = work.view((k, k), (m - k, 1)).clone_owned();
            let alpha = if x[0] >= 0.0 { -best_norm } else { best_norm };
            let mut v = DVector::from_iterator(m - k, x.iter().copied());
            v[0] -= alpha;
            let vnorm2 = v.norm_squared();
            if vnorm2 > 0.0 {
                for j in k..n {
                    let mut col = work.view_mut((k, j), (m - k, 1));
                    let s = 2.0 * v.dot(&col.column(0)) / vnorm2;
                    col.column_mut(0).axpy(-s, &v, 1.0);
                }
            }
            work[(k, k)] = alpha;
            for i in (k + 1)..m {
                work[(i, k)] = 0.0;
            }
            reflectors.push(v);
            rank += 1;
        }

        // Thin Q: apply H_0 .. H_i to e_i.
        let mut q = DMatrix::zeros(m, rank);
        for i in 0..rank {
            let mut e = DVector::zeros(m);
            e[i] = 1.0;
            for k in (0..=i).rev() {
                let v = &reflectors[k];
                let vnorm2 = v.norm_squared();
                if vnorm2 == 0.0 {
                    continue;
                }
                let mut tail = e.rows_mut(k, m - k);
                let s = 2.0 * v.dot(&tail) / vnorm2;
                tail.axpy(-s, v, 1.0);
            }
            q.set_column(i, &e);
        }
        let r = work.rows(0, rank).upper_triangle_rect();
        PivotedQr { q, r, perm, rank }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// Orthonormal basis of the column span (`m x rank`).
    pub fn basis(&self) -> &DMatrix<f64> {
        &self.q
    }

    pub fn permutation(&self) -> &[usize] {
        &self.perm
    }
}

trait UpperTriangleRect {
    fn upper_triangle_rect(&self) -> DMatrix<f64>;
}

impl<S> UpperTriangleRect for nalgebra::Matrix<f64, nalgebra::Dyn, nalgebra::Dyn, S>
where
    S: nalgebra::RawStorage<f64, nalgebra::Dyn, nalgebra::Dyn>,
{
    fn upper_triangle_rect(&self) -> DMatrix<f64> {
        let (rows, cols) = self.shape();
        DMatrix::from_fn(rows, cols, |i, j| if i <= j { self[(i, j)] } else { 0.0 })
    }
}

/// Minimum-norm least-squares solver built on a complete orthogonal
/// decomposition. Factorize once, then solve for many right-hand sides.
#[derive(Debug, Clone)]
pub struct MinNormSolver {
    qr: PivotedQr,
    cols: usize,
    /// For rank-deficient inputs: `R^T = W S` (thin QR of the trapezoid).
    complement: Option<(DMatrix<f64>, DMatrix<f64>)>,
}

impl MinNormSolver {
    pub fn new(a: &DMatrix<f64>) -> Self {
        Self::with_tolerance(a, DEFAULT_RANK_RTOL)
    }

    pub fn with_tolerance(a: &DMatrix<f64>, rtol: f64) -> Self {
        let qr = PivotedQr::new(a, rtol);
        let cols = a.ncols();
        let complement = if qr.rank > 0 && qr.rank < cols {
            let decomposition = qr.r.transpose().qr();
            Some((decomposition.q(), decomposition.r()))
        } else {
            None
        };
        MinNormSolver {
            qr,
            cols,
            complement,
        }
    }

    pub fn rank(&self) -> usize {
        self.qr.rank
    }

    pub fn is_full_column_rank(&self) -> bool {
        self.qr.rank == self.cols
    }

    pub fn solve(&self, b: &DVector<f64>) -> Result<DVector<f64>> {
        if b.len() != self.qr.q.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "right-hand side has length {}, matrix has {} rows",
                b.len(),
                self.qr.q.nrows()
            )));
        }
        let mut beta = DVector::zeros(self.cols);
        let rank = self.qr.rank;
        if rank == 0 {
            return Ok(beta);
        }
        let c = self.qr.q.tr_mul(b);
        let z = match &self.complement {
            None => self
                .qr
                .r
                .view((0, 0), (rank, rank))
                .solve_upper_triangular(&c)
                .ok_or_else(|| Error::NumericalBreakdown("singular triangular factor".into()))?,
            Some((w, s)) => {
                let u = s.tr_solve_upper_triangular(&c).ok_or_else(|| {
                    Error::NumericalBreakdown("singular complement factor".into())
                })?;
                w * u
            }
        };
        for (i, &p) in self.qr.perm.iter().enumerate() {
            beta[p] = z[i];
        }
        Ok(beta)
    }
}

/// Returns the minimum-norm minimizer of `||b - A beta||_2`.
pub fn least_squares_minnorm(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    if a.nrows() != b.len() {
        return Err(Error::DimensionMismatch(format!(
            "matrix has {} rows, vector has length {}",
            a.nrows(),
            b.len()
        )));
    }
    MinNormSolver::new(a).solve(b)
}

/// Principal angle between a vector and the column span of `m`, in `[0, pi/2]`.
pub fn principal_angle(x: &DVector<f64>, m: &DMatrix<f64>) -> Result<f64> {
    if x.len() != m.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "vector of length {} against matrix with {} rows",
            x.len(),
            m.nrows()
        )));
    }
    if m.column_iter().all(|c| c.norm() <= ZERO_COLUMN_TOL) {
        return Err(Error::ZeroColumn(0));
    }
    let xnorm = x.norm();
    if xnorm <= ZERO_COLUMN_TOL {
        return Err(Error::InvalidArgument("zero vector has no angle".into()));
    }
    let qr = PivotedQr::new(m, DEFAULT_RANK_RTOL);
    let cos = qr.basis().tr_mul(x).norm() / xnorm;
    Ok(clamped_acos(cos))
}

/// Principal angle between `x` and the line spanned by `v`; a zero `v` gives
/// `pi/2`.
pub fn angle_to_vector(x: DVectorView<'_, f64>, v: DVectorView<'_, f64>) -> f64 {
    let denom = x.norm() * v.norm();
    if denom == 0.0 {
        return std::f64::consts::FRAC_PI_2;
    }
    clamped_acos(x.dot(&v).abs() / denom)
}

fn clamped_acos(cos: f64) -> f64 {
    cos.clamp(0.0, 1.0).acos()
}

/// Number of singular values above `tol` (default: `1e-10` times the largest).
pub fn numerical_rank(m: &DMatrix<f64>, tol: Option<f64>) -> usize {
    if m.is_empty() {
        return 0;
    }
    let sv = m.singular_values();
    let lead = sv.iter().copied().fold(0.0_f64, f64::max);
    let tol = tol.unwrap_or(DEFAULT_RANK_RTOL * lead);
    sv.iter().filter(|&&s| s > tol).count()
}

/// Incrementally grown orthonormal basis (thin QR) of a set of selected
/// columns, used by the greedy and path solvers.
#[derive(Debug, Clone)]
pub struct OrthoState {
    dim: usize,
    basis: Vec<DVector<f64>>,
    /// `r_cols[j][i] = R[i, j]` for `i <= j`.
    r_cols: Vec<Vec<f64>>,
    selected: Vec<usize>,
}

impl OrthoState {
    pub fn new(dim: usize) -> Self {
        OrthoState {
            dim,
            basis: Vec::new(),
            r_cols: Vec::new(),
            selected: Vec::new(),
        }
    }

    /// Rebuilds the state from scratch for the given columns of `x`.
    /// Returns `None` if the columns are numerically dependent.
    pub fn from_columns(x: &DMatrix<f64>, indices: &[usize]) -> Option<Self> {
        let mut state = OrthoState::new(x.nrows());
        for &i in indices {
            if !state.push(i, x.column(i)) {
                return None;
            }
        }
        Some(state)
    }

    /// Appends a column using classical Gram-Schmidt with one
    /// reorthogonalization pass. Returns `false` (state unchanged) when the
    /// column lies numerically in the current span.
    pub fn push(&mut self, index: usize, column: DVectorView<'_, f64>) -> bool {
        debug_assert_eq!(column.len(), self.dim);
        let norm_in = column.norm();
        if norm_in <= ZERO_COLUMN_TOL {
            return false;
        }
        let mut w = column.clone_owned();
        let mut h = vec![0.0; self.basis.len()];
        for _ in 0..2 {
            for (k, q) in self.basis.iter().enumerate() {
                let proj = q.dot(&w);
                h[k] += proj;
                w.axpy(-proj, q, 1.0);
            }
        }
        let norm = w.norm();
        if norm <= DEFAULT_RANK_RTOL * norm_in {
            return false;
        }
        w /= norm;
        h.push(norm);
        self.basis.push(w);
        self.r_cols.push(h);
        self.selected.push(index);
        true
    }

    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    pub fn selected(&self) -> &[usize] {
        &self.selected
    }

    pub fn basis(&self) -> &[DVector<f64>] {
        &self.basis
    }

    fn r(&self, i: usize, j: usize) -> f64 {
        self.r_cols[j][i]
    }

    fn back_substitute(&self, z: &[f64]) -> DVector<f64> {
        let k = self.rank();
        let mut beta = DVector::zeros(k);
        for i in (0..k).rev() {
            let mut acc = z[i];
            for j in (i + 1)..k {
                acc -= self.r(i, j) * beta[j];
            }
            beta[i] = acc / self.r(i, i);
        }
        beta
    }

    /// Least-squares coefficients of `b` on the selected columns, in
    /// selection order.
    pub fn coefficients(&self, b: &DVector<f64>) -> DVector<f64> {
        let z: Vec<f64> = self.basis.iter().map(|q| q.dot(b)).collect();
        self.back_substitute(&z)
    }

    /// Solves `(X_s^T X_s) d = rhs` through `R^T R d = rhs`.
    pub fn solve_gram(&self, rhs: &[f64]) -> DVector<f64> {
        let k = self.rank();
        let mut w = vec![0.0; k];
        for i in 0..k {
            let mut acc = rhs[i];
            for (j, wj) in w.iter().enumerate().take(i) {
                acc -= self.r(j, i) * wj;
            }
            w[i] = acc / self.r(i, i);
        }
        self.back_substitute(&w)
    }

    /// Orthogonal projection of `b` onto the selected span.
    pub fn project(&self, b: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.dim);
        for q in &self.basis {
            out.axpy(q.dot(b), q, 1.0);
        }
        out
    }

    /// Largest deviation of `Q^T Q` from the identity.
    pub fn orthogonality_defect(&self) -> f64 {
        let mut worst = 0.0_f64;
        for (i, a) in self.basis.iter().enumerate() {
            for (j, b) in self.basis.iter().enumerate() {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((a.dot(b) - target).abs());
            }
        }
        worst
    }
}
