//! Dense linear-algebra kernel: rank decisions, subspace algebra, spectra, norms
//! and minimal polynomials.
//!
//! Subspaces are always carried by an orthonormal basis. The basis is
//! canonicalized from the orthogonal projector with a pivoted Gram-Schmidt
//! pass, so two computations that arrive at the same subspace along different
//! routes produce (numerically) the same basis, and coordinate subspaces come
//! out as signed unit vectors.

use nalgebra::{ColPivQR, DMatrix, DVector, SVD};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{DuioError, Result};
use crate::poly::Poly;

pub type Mat = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Numerical thresholds used throughout synthesis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Singular-value cutoff, relative to the relevant scale.
    pub rank: f64,
    /// Orthonormality tolerance for stored bases.
    pub orth: f64,
    /// Tolerance when comparing eigenvalue multisets.
    pub eig: f64,
    /// Residual allowed in invariance and containment checks.
    pub residual: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            rank: 1e-9,
            orth: 1e-9,
            eig: 1e-6,
            residual: 1e-7,
        }
    }
}

impl Tolerances {
    pub fn new(rank: f64, orth: f64, eig: f64, residual: f64) -> Result<Self> {
        let t = Tolerances {
            rank,
            orth,
            eig,
            residual,
        };
        t.validate()?;
        Ok(t)
    }

    pub fn with_rank(self, rank: f64) -> Result<Self> {
        Tolerances::new(rank, self.orth, self.eig, self.residual)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("rank", self.rank),
            ("orth", self.orth),
            ("eig", self.eig),
            ("residual", self.residual),
        ] {
            if !(v > 0.0 && v < 1.0) {
                return Err(DuioError::Invalid(format!(
                    "tolerance `{name}` must lie in (0, 1), got {v}"
                )));
            }
        }
        Ok(())
    }
}

pub fn is_finite(m: &Mat) -> bool {
    m.iter().all(|v| v.is_finite())
}

/// Singular values in descending order. Empty matrices have none.
pub fn singular_values(m: &Mat) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    SVD::new(m.clone(), false, false)
        .singular_values
        .iter()
        .copied()
        .collect()
}

fn rank_above(sv: &[f64], threshold: f64) -> usize {
    sv.iter().filter(|&&s| s > threshold).count()
}

/// Numerical rank: singular values above `tol.rank` times the largest one.
pub fn rank(m: &Mat, tol: &Tolerances) -> usize {
    let sv = singular_values(m);
    match sv.first() {
        Some(&smax) if smax > 0.0 => rank_above(&sv, tol.rank * smax),
        _ => 0,
    }
}

/// Orthonormal basis of a subspace of `R^n`, `n x d`.
#[derive(Debug, Clone, PartialEq)]
pub struct Subspace {
    basis: Mat,
}

impl Subspace {
    pub fn zero(n: usize) -> Self {
        Subspace {
            basis: Mat::zeros(n, 0),
        }
    }

    pub fn full(n: usize) -> Self {
        Subspace {
            basis: Mat::identity(n, n),
        }
    }

    /// Span of the standard basis vectors with the given indices.
    pub fn coordinate(n: usize, indices: &[usize]) -> Self {
        let mut b = Mat::zeros(n, indices.len());
        for (k, &i) in indices.iter().enumerate() {
            b[(i, k)] = 1.0;
        }
        Subspace { basis: b }
    }

    /// Span of the columns of `m`.
    pub fn span(m: &Mat, tol: &Tolerances) -> Self {
        image(m, tol)
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn is_zero(&self) -> bool {
        self.dim() == 0
    }

    pub fn basis(&self) -> &Mat {
        &self.basis
    }

    pub fn into_basis(self) -> Mat {
        self.basis
    }

    /// Orthogonal projector `Q Qᵀ`.
    pub fn projector(&self) -> Mat {
        &self.basis * self.basis.transpose()
    }

    /// `‖(I - QQᵀ) M‖₂`: how far the columns of `m` stick out of this subspace.
    pub fn residual_of(&self, m: &Mat) -> f64 {
        if m.ncols() == 0 {
            return 0.0;
        }
        let inside = &self.basis * (self.basis.transpose() * m);
        spectral_norm(&(m - inside))
    }

    /// Containment residual of `other` in `self`.
    pub fn containment_residual(&self, other: &Subspace) -> f64 {
        self.residual_of(&other.basis)
    }

    pub fn contains(&self, other: &Subspace, tol: f64) -> bool {
        self.ambient_dim() == other.ambient_dim() && self.containment_residual(other) <= tol
    }

    /// Mutual containment within `tol`.
    pub fn same_as(&self, other: &Subspace, tol: f64) -> bool {
        self.dim() == other.dim() && self.contains(other, tol) && other.contains(self, tol)
    }

    pub fn contains_vector(&self, v: &Vector, tol: f64) -> bool {
        let m = Mat::from_column_slice(v.len(), 1, v.as_slice());
        self.residual_of(&m) <= tol * v.norm().max(1.0)
    }

    /// `‖QᵀQ - I‖₂`
    pub fn orthonormality_defect(&self) -> f64 {
        let d = self.dim();
        spectral_norm(&(self.basis.transpose() * &self.basis - Mat::identity(d, d)))
    }
}

/// Deterministic orthonormal basis of the range of an orthogonal projector
/// whose rank is known. Pivots on the largest remaining column, ties going to
/// the lowest index.
fn basis_from_projector(proj: &Mat, dim: usize) -> Mat {
    let n = proj.nrows();
    let mut work = proj.clone();
    let mut q = Mat::zeros(n, dim);
    for k in 0..dim {
        let norms: Vec<f64> = (0..n).map(|j| work.column(j).norm()).collect();
        let max = norms.iter().copied().fold(0.0, f64::max);
        let pivot = norms
            .iter()
            .position(|&v| v >= max * (1.0 - 1e-10))
            .unwrap_or(0);
        let mut v = work.column(pivot).into_owned();
        for _ in 0..2 {
            for i in 0..k {
                let qi = q.column(i);
                let c = qi.dot(&v);
                v.axpy(-c, &qi, 1.0);
            }
        }
        let nv = v.norm();
        if nv == 0.0 {
            break;
        }
        v /= nv;
        for j in 0..n {
            let c = v.dot(&work.column(j));
            work.column_mut(j).axpy(-c, &v, 1.0);
        }
        q.set_column(k, &v);
    }
    q
}

fn canonical(proj: &Mat, dim: usize) -> Subspace {
    Subspace {
        basis: basis_from_projector(proj, dim),
    }
}

/// Image with an absolute singular-value threshold.
fn image_above(m: &Mat, threshold: f64) -> Subspace {
    let n = m.nrows();
    if m.ncols() == 0 || n == 0 {
        return Subspace::zero(n);
    }
    let r = rank_above(&singular_values(m), threshold);
    if r == 0 {
        return Subspace::zero(n);
    }
    // The SVD decides the rank, but its left vectors lose accuracy when tiny
    // nonzero singular values are present. Pivoted QR gives the range to
    // working precision.
    let q = ColPivQR::new(m.clone()).q();
    let qr = q.columns(0, r);
    let proj = qr * qr.transpose();
    canonical(&proj, r)
}

fn kernel_above(m: &Mat, threshold: f64) -> Subspace {
    orthocomplement(&image_above(&m.transpose(), threshold))
}

fn largest_singular(m: &Mat) -> f64 {
    singular_values(m).first().copied().unwrap_or(0.0)
}

/// Column space of `m` with an orthonormal basis.
pub fn image(m: &Mat, tol: &Tolerances) -> Subspace {
    image_above(m, tol.rank * largest_singular(m))
}

/// Null space of `m` with an orthonormal basis.
pub fn kernel(m: &Mat, tol: &Tolerances) -> Subspace {
    kernel_above(m, tol.rank * largest_singular(m))
}

/// Orthogonal complement.
pub fn orthocomplement(s: &Subspace) -> Subspace {
    let n = s.ambient_dim();
    let d = s.dim();
    if d == 0 {
        return Subspace::full(n);
    }
    if d == n {
        return Subspace::zero(n);
    }
    let proj = Mat::identity(n, n) - s.projector();
    canonical(&proj, n - d)
}

fn check_same_ambient(op: &'static str, a: &Subspace, b: &Subspace) -> Result<()> {
    if a.ambient_dim() != b.ambient_dim() {
        return Err(DuioError::DimensionMismatch {
            op,
            expected: a.ambient_dim(),
            got: b.ambient_dim(),
        });
    }
    Ok(())
}

/// `S1 + S2`
pub fn sum(s1: &Subspace, s2: &Subspace, tol: &Tolerances) -> Result<Subspace> {
    check_same_ambient("sum", s1, s2)?;
    let n = s1.ambient_dim();
    let mut cat = Mat::zeros(n, s1.dim() + s2.dim());
    cat.columns_mut(0, s1.dim()).copy_from(s1.basis());
    cat.columns_mut(s1.dim(), s2.dim()).copy_from(s2.basis());
    // Both blocks are orthonormal, so the scale is 1.
    Ok(image_above(&cat, tol.rank))
}

/// `S1 ∩ S2`, computed as the complement of the sum of complements.
pub fn intersect(s1: &Subspace, s2: &Subspace, tol: &Tolerances) -> Result<Subspace> {
    check_same_ambient("intersect", s1, s2)?;
    let c = sum(&orthocomplement(s1), &orthocomplement(s2), tol)?;
    Ok(orthocomplement(&c))
}

/// `{x : M x ∈ S}` for `M: R^n -> R^k` and `S ⊆ R^k`.
pub fn preimage(m: &Mat, s: &Subspace, tol: &Tolerances) -> Result<Subspace> {
    if s.ambient_dim() != m.nrows() {
        return Err(DuioError::DimensionMismatch {
            op: "preimage",
            expected: m.nrows(),
            got: s.ambient_dim(),
        });
    }
    let k = m.nrows();
    let outside = (Mat::identity(k, k) - s.projector()) * m;
    Ok(kernel_above(&outside, tol.rank * largest_singular(m)))
}

/// `M S`
pub fn map_subspace(m: &Mat, s: &Subspace, tol: &Tolerances) -> Result<Subspace> {
    if s.ambient_dim() != m.ncols() {
        return Err(DuioError::DimensionMismatch {
            op: "map_subspace",
            expected: m.ncols(),
            got: s.ambient_dim(),
        });
    }
    let scale = largest_singular(m);
    Ok(image_above(&(m * s.basis()), tol.rank * scale))
}

pub fn spectral_norm(m: &Mat) -> f64 {
    largest_singular(m)
}

/// Eigenvalues of a square matrix, complex pairs adjacent.
pub fn eigvals(m: &Mat) -> Result<Vec<Complex64>> {
    if m.nrows() != m.ncols() {
        return Err(DuioError::NonSquare {
            op: "eigvals",
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    if m.nrows() == 0 {
        return Ok(Vec::new());
    }
    Ok(m.complex_eigenvalues().iter().copied().collect())
}

/// Sort by real part, then imaginary part.
pub fn sort_spectrum(v: &mut [Complex64]) {
    v.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
}

/// Greedy multiset distance: the largest distance between matched eigenvalues,
/// or infinity if the sizes differ.
pub fn spectrum_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    let mut used = vec![false; b.len()];
    let mut worst: f64 = 0.0;
    for za in a {
        let (best, d) = b
            .iter()
            .enumerate()
            .filter(|(j, _)| !used[*j])
            .map(|(j, zb)| (j, (za - zb).norm()))
            .min_by(|x, y| x.1.total_cmp(&y.1))
            .expect("sizes match");
        used[best] = true;
        worst = worst.max(d);
    }
    worst
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Norms {
    pub one: f64,
    pub two: f64,
    pub inf: f64,
    pub sigma_min: f64,
}

pub fn norms(m: &Mat) -> Norms {
    let one = (0..m.ncols())
        .map(|j| m.column(j).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let inf = (0..m.nrows())
        .map(|i| m.row(i).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let sv = singular_values(m);
    Norms {
        one,
        two: sv.first().copied().unwrap_or(0.0),
        inf,
        sigma_min: sv.last().copied().unwrap_or(0.0),
    }
}

/// Moore-Penrose pseudo-inverse with the relative cutoff `tol.rank`.
pub fn pinv(m: &Mat, tol: &Tolerances) -> Mat {
    let (r, c) = m.shape();
    if r == 0 || c == 0 {
        return Mat::zeros(c, r);
    }
    let (u, sv, vt) = full_svd(m);
    let smax = sv.iter().copied().fold(0.0, f64::max);
    if smax == 0.0 {
        return Mat::zeros(c, r);
    }
    let threshold = tol.rank * smax;
    let mut out = Mat::zeros(c, r);
    for (k, &s) in sv.iter().enumerate() {
        if s > threshold {
            out += (vt.row(k).transpose() * u.column(k).transpose()) / s;
        }
    }
    out
}

/// Thin SVD `(U, sigma, Vᵀ)` whose reconstruction has been verified.
///
/// nalgebra's SVD occasionally returns wrong singular vectors for matrices with
/// many exact zeros. When `U diag(sigma) Vᵀ` misses `m`, the factorization is
/// redone on `Q m` for fixed orthogonal `Q` and rotated back.
fn full_svd(m: &Mat) -> (Mat, DVector<f64>, Mat) {
    let r = m.nrows();
    let scale = m.amax().max(f64::MIN_POSITIVE);
    let attempt = |q: Option<&Mat>| {
        let target = q.map_or_else(|| m.clone(), |q| q * m);
        let svd = SVD::new(target, true, true);
        let u = svd.u.expect("requested U");
        let vt = svd.v_t.expect("requested V");
        let u = q.map_or(u.clone(), |q| q.transpose() * u);
        let err = (&u * Mat::from_diagonal(&svd.singular_values) * &vt - m).amax() / scale;
        (err, u, svd.singular_values, vt)
    };
    let mut best = attempt(None);
    let mut rng = ChaCha8Rng::seed_from_u64(0x5bd1_e995);
    for _ in 0..8 {
        if best.0 <= 1e-12 * (r.max(m.ncols()) as f64) {
            break;
        }
        let g = Mat::from_fn(r, r, |_, _| rng.random_range(-1.0..1.0));
        let q = g.qr().q();
        let next = attempt(Some(&q));
        if next.0 < best.0 {
            best = next;
        }
    }
    (best.1, best.2, best.3)
}

/// Minimal polynomial from the first linear dependence in `I, M, M², ...`.
///
/// The matrix is normalized before building the sequence and the coefficients
/// are rescaled afterwards.
pub fn minpoly(m: &Mat, tol: &Tolerances) -> Result<Poly> {
    let n = m.nrows();
    if n != m.ncols() {
        return Err(DuioError::NonSquare {
            op: "minpoly",
            rows: n,
            cols: m.ncols(),
        });
    }
    if n == 0 {
        return Ok(Poly::one());
    }
    let scale = m.iter().map(|v| v.abs()).fold(0.0, f64::max);
    if scale == 0.0 {
        return Ok(Poly::linear(0.0));
    }
    let mn = m / scale;
    let flat = |p: &Mat| Vector::from_column_slice(p.as_slice());

    let mut krylov: Vec<Vector> = vec![flat(&Mat::identity(n, n))];
    let mut power = Mat::identity(n, n);
    for deg in 1..=n {
        power = &power * &mn;
        let next = flat(&power);
        let prev = Mat::from_columns(&krylov);
        let normalized: Vec<Vector> = krylov
            .iter()
            .chain(std::iter::once(&next))
            .map(|v| {
                let nv = v.norm();
                if nv > 0.0 {
                    v / nv
                } else {
                    v.clone()
                }
            })
            .collect();
        let sv = singular_values(&Mat::from_columns(&normalized));
        let dependent = next.norm() <= tol.rank || sv.last().copied().unwrap_or(0.0) <= tol.rank;
        if dependent || deg == n {
            // Least squares: prev * c ≈ -next.
            let c = pinv(&prev, tol) * (-&next);
            let mut coeffs: Vec<f64> = (0..deg)
                .map(|j| c[j] * scale.powi((deg - j) as i32))
                .collect();
            coeffs.push(1.0);
            return Ok(Poly::new(coeffs));
        }
        krylov.push(next);
    }
    unreachable!("degree n always terminates")
}

/// Block-diagonal assembly of possibly rectangular blocks.
pub fn block_diag(blocks: &[&Mat]) -> Mat {
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = Mat::zeros(rows, cols);
    let (mut r, mut c) = (0, 0);
    for b in blocks {
        out.view_mut((r, c), b.shape()).copy_from(*b);
        r += b.nrows();
        c += b.ncols();
    }
    out
}

/// Kronecker product.
pub fn kron(a: &Mat, b: &Mat) -> Mat {
    a.kronecker(b)
}
