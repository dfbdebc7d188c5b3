//! Invariant-subspace algorithms of the geometric approach.
//!
//! The central routine is [`wstar_g`], which computes for one sensor node the
//! smallest conditioned-invariant subspace containing the unknown-input image
//! whose quotient dynamics can still be made good by output injection. It is
//! computed on the dual side: the largest controlled-invariant subspace of
//! `(Aᵀ, Cᵀ)` inside `Ker B̄ᵀ`, trimmed to the part whose fixed (non-assignable)
//! spectrum is good, and then complemented.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{DuioError, Result};
use crate::matlin::{
    eigvals, image, intersect, kernel, map_subspace, minpoly, orthocomplement, pinv, preimage,
    spectral_norm, sum, Mat, Subspace, Tolerances,
};
use crate::poly::Poly;

/// The region `{λ : Re λ < -margin}` of acceptable eigenvalues.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GoodRegion {
    margin: f64,
}

impl Default for GoodRegion {
    fn default() -> Self {
        GoodRegion { margin: 0.5 }
    }
}

impl GoodRegion {
    pub fn new(margin: f64) -> Result<Self> {
        if !(margin.is_finite() && margin >= 0.0) {
            return Err(DuioError::Invalid(format!(
                "stability margin must be finite and nonnegative, got {margin}"
            )));
        }
        Ok(GoodRegion { margin })
    }

    pub fn margin(&self) -> f64 {
        self.margin
    }

    pub fn contains(&self, z: Complex64) -> bool {
        z.re < -self.margin
    }

    /// Default placement targets for `k` assignable modes: `-2α, -4α, ..., -2kα`.
    /// With a zero margin the spacing falls back to 1.
    pub fn default_targets(&self, k: usize) -> Vec<f64> {
        let step = if self.margin > 0.0 { 2.0 * self.margin } else { 1.0 };
        (1..=k).map(|j| -step * j as f64).collect()
    }
}

/// `ẋ = A x + B u`, `y = C x`.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemMaps {
    pub a: Mat,
    pub b: Mat,
    pub c: Mat,
}

impl SystemMaps {
    pub fn new(a: Mat, b: Mat, c: Mat) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(DuioError::NonSquare {
                op: "SystemMaps",
                rows: n,
                cols: a.ncols(),
            });
        }
        if b.nrows() != n {
            return Err(DuioError::DimensionMismatch {
                op: "SystemMaps (B rows)",
                expected: n,
                got: b.nrows(),
            });
        }
        if c.ncols() != n {
            return Err(DuioError::DimensionMismatch {
                op: "SystemMaps (C cols)",
                expected: n,
                got: c.ncols(),
            });
        }
        if ![&a, &b, &c].iter().all(|m| crate::matlin::is_finite(m)) {
            return Err(DuioError::Invalid("system matrices must be finite".into()));
        }
        Ok(SystemMaps { a, b, c })
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }
}

fn check_square(op: &'static str, a: &Mat) -> Result<()> {
    if a.nrows() != a.ncols() {
        return Err(DuioError::NonSquare {
            op,
            rows: a.nrows(),
            cols: a.ncols(),
        });
    }
    Ok(())
}

fn check_ambient(op: &'static str, n: usize, s: &Subspace) -> Result<()> {
    if s.ambient_dim() != n {
        return Err(DuioError::DimensionMismatch {
            op,
            expected: n,
            got: s.ambient_dim(),
        });
    }
    Ok(())
}

fn scale_of(m: &Mat) -> f64 {
    spectral_norm(m).max(1.0)
}

/// Residual of `A V ⊆ V + B`.
pub fn controlled_invariance_residual(
    a: &Mat,
    b_img: &Subspace,
    v: &Subspace,
    tol: &Tolerances,
) -> Result<f64> {
    let target = sum(v, b_img, tol)?;
    Ok(target.residual_of(&(a * v.basis())))
}

/// Residual of `A (W ∩ Ker C) ⊆ W`.
pub fn conditioned_invariance_residual(
    a: &Mat,
    c: &Mat,
    w: &Subspace,
    tol: &Tolerances,
) -> Result<f64> {
    let ker_c = kernel(c, tol);
    let inner = intersect(w, &ker_c, tol)?;
    Ok(w.residual_of(&(a * inner.basis())))
}

/// Residual of `A W ⊆ W`.
pub fn invariance_residual(a: &Mat, w: &Subspace) -> f64 {
    w.residual_of(&(a * w.basis()))
}

/// Supremal `(A, B)`-invariant subspace contained in `K`.
pub fn vstar(a: &Mat, b_img: &Subspace, k: &Subspace, tol: &Tolerances) -> Result<Subspace> {
    check_square("vstar", a)?;
    let n = a.nrows();
    check_ambient("vstar (B)", n, b_img)?;
    check_ambient("vstar (K)", n, k)?;
    let mut v = k.clone();
    for _ in 0..=n {
        let next = intersect(k, &preimage(a, &sum(&v, b_img, tol)?, tol)?, tol)?;
        if next.dim() > v.dim() {
            return Err(DuioError::Numerical(format!(
                "V* iteration grew from {} to {}",
                v.dim(),
                next.dim()
            )));
        }
        if next.dim() == v.dim() {
            return Ok(next);
        }
        v = next;
    }
    Err(DuioError::Numerical(
        "V* iteration did not converge in n+1 steps".into(),
    ))
}

/// Supremal controllability subspace inside `vstar_k`, the output of [`vstar`]
/// for the same data.
pub fn rstar(a: &Mat, b_img: &Subspace, vstar_k: &Subspace, tol: &Tolerances) -> Result<Subspace> {
    check_square("rstar", a)?;
    let n = a.nrows();
    check_ambient("rstar (B)", n, b_img)?;
    check_ambient("rstar (V)", n, vstar_k)?;
    let mut r = Subspace::zero(n);
    for _ in 0..=n {
        let next = intersect(vstar_k, &sum(&map_subspace(a, &r, tol)?, b_img, tol)?, tol)?;
        if next.dim() < r.dim() {
            return Err(DuioError::Numerical(format!(
                "R* iteration shrank from {} to {}",
                r.dim(),
                next.dim()
            )));
        }
        if next.dim() == r.dim() {
            return Ok(next);
        }
        r = next;
    }
    Err(DuioError::Numerical(
        "R* iteration did not converge in n+1 steps".into(),
    ))
}

/// Minimum-norm feedback `F` with `(A + B F) V ⊆ V`.
pub fn friend(a: &Mat, b: &Mat, v: &Subspace, tol: &Tolerances) -> Result<Mat> {
    check_square("friend", a)?;
    let n = a.nrows();
    check_ambient("friend", n, v)?;
    if b.nrows() != n {
        return Err(DuioError::DimensionMismatch {
            op: "friend (B rows)",
            expected: n,
            got: b.nrows(),
        });
    }
    let m = b.ncols();
    if v.is_zero() {
        return Ok(Mat::zeros(m, n));
    }
    let outside = Mat::identity(n, n) - v.projector();
    let vb = v.basis();
    let ob = &outside * b;
    let oav = &outside * (a * vb);
    // Solve (I - Π) B X = -(I - Π) A V in the least-squares sense.
    let x = -(pinv(&ob, tol) * &oav);
    let residual = spectral_norm(&(&oav + &ob * &x));
    if residual > tol.residual * scale_of(a) {
        return Err(DuioError::NotInvariant {
            op: "friend",
            residual,
        });
    }
    Ok(x * vb.transpose())
}

/// Matrices of an `A_L`-invariant subspace `W` and of the quotient `X / W`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuotientDecomposition {
    pub w: Subspace,
    /// `n x d`, orthonormal basis of `W`.
    pub insertion: Mat,
    /// `(n-d) x n`, rows form an orthonormal basis of `W^⊥`.
    pub projection: Mat,
    /// `Wᵀ A_L W`
    pub restricted: Mat,
    /// `P A_L Pᵀ`
    pub induced: Mat,
}

pub fn decompose(a_l: &Mat, w: &Subspace, tol: &Tolerances) -> Result<QuotientDecomposition> {
    check_square("decompose", a_l)?;
    check_ambient("decompose", a_l.nrows(), w)?;
    let residual = invariance_residual(a_l, w);
    if residual > tol.residual * scale_of(a_l) {
        return Err(DuioError::NotInvariant {
            op: "decompose",
            residual,
        });
    }
    let insertion = w.basis().clone();
    let projection = orthocomplement(w).basis().transpose();
    let restricted = insertion.transpose() * a_l * &insertion;
    let induced = &projection * a_l * projection.transpose();
    Ok(QuotientDecomposition {
        w: w.clone(),
        insertion,
        projection,
        restricted,
        induced,
    })
}

/// Factorization `β = β_g β_b` by root location.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralSplit {
    pub beta_g: Poly,
    pub beta_b: Poly,
    pub good_roots: Vec<Complex64>,
    pub bad_roots: Vec<Complex64>,
}

/// Split a monic real polynomial into good and bad factors. Conjugate pairs
/// are kept together so both factors stay real.
pub fn split_spectrum(beta: &Poly, region: &GoodRegion) -> SpectralSplit {
    let roots = beta.roots();
    let scale = roots.iter().map(|z| z.norm()).fold(1.0, f64::max);
    let real_tol = 1e-12 * scale;

    let mut good = Poly::one();
    let mut bad = Poly::one();
    let mut good_roots = Vec::new();
    let mut bad_roots = Vec::new();

    let mut used = vec![false; roots.len()];
    for i in 0..roots.len() {
        if used[i] {
            continue;
        }
        used[i] = true;
        let z = roots[i];
        let partner = if z.im.abs() > real_tol {
            // nearest unused root to the conjugate
            (0..roots.len())
                .filter(|&j| !used[j])
                .min_by(|&p, &q| {
                    let dp = (roots[p] - z.conj()).norm();
                    let dq = (roots[q] - z.conj()).norm();
                    dp.total_cmp(&dq)
                })
                .filter(|&j| roots[j].im * z.im < 0.0)
        } else {
            None
        };
        let (factor, members) = match partner {
            Some(j) => {
                used[j] = true;
                let mid = Complex64::new(0.5 * (z.re + roots[j].re), 0.5 * (z.im - roots[j].im));
                (Poly::conjugate_pair(mid), vec![z, roots[j]])
            }
            None => (Poly::linear(z.re), vec![Complex64::new(z.re, 0.0)]),
        };
        if region.contains(members[0]) {
            good = good.mul(&factor);
            good_roots.extend(members);
        } else {
            bad = bad.mul(&factor);
            bad_roots.extend(members);
        }
    }
    SpectralSplit {
        beta_g: good,
        beta_b: bad,
        good_roots,
        bad_roots,
    }
}

/// Intermediate dual-side objects produced by [`wstar_g`].
#[derive(Debug, Clone)]
pub struct DualArtifacts {
    /// Supremal `(Aᵀ, Cᵀ)`-invariant subspace in `Ker B̄ᵀ`.
    pub vp_star: Subspace,
    /// Supremal controllability subspace inside `vp_star`.
    pub rp_star: Subspace,
    /// The friend `L'₀` of `vp_star` used for the quotient, `p x n`.
    pub l0_dual: Mat,
    /// Minimal polynomial of the map induced on `vp_star / rp_star`.
    pub beta: Poly,
    pub beta_split: SpectralSplit,
    /// The good dual subspace, `W*_g^⊥`.
    pub vp_good: Subspace,
}

#[derive(Debug, Clone)]
pub struct WStarG {
    pub wg: Subspace,
    /// Canonical projection onto `X / W*_g`: rows span `W*_g^⊥`.
    pub pg: Mat,
    pub dual: DualArtifacts,
}

/// Infimal good conditioned-invariant subspace containing `Im B̄` for the pair `(C, A)`.
pub fn wstar_g(
    a: &Mat,
    c: &Mat,
    bbar: &Mat,
    region: &GoodRegion,
    tol: &Tolerances,
) -> Result<WStarG> {
    wstar_g_with_friend(a, c, bbar, region, None, tol)
}

/// As [`wstar_g`], but with a caller-supplied friend `L'₀` of `V'*`. When
/// `None` the minimum-norm friend is used. The result does not depend on the
/// friend; this entry point exists to check exactly that.
pub fn wstar_g_with_friend(
    a: &Mat,
    c: &Mat,
    bbar: &Mat,
    region: &GoodRegion,
    l0: Option<&Mat>,
    tol: &Tolerances,
) -> Result<WStarG> {
    check_square("wstar_g", a)?;
    let n = a.nrows();
    if c.ncols() != n {
        return Err(DuioError::DimensionMismatch {
            op: "wstar_g (C cols)",
            expected: n,
            got: c.ncols(),
        });
    }
    if bbar.nrows() != n {
        return Err(DuioError::DimensionMismatch {
            op: "wstar_g (B̄ rows)",
            expected: n,
            got: bbar.nrows(),
        });
    }
    let at = a.transpose();
    let ct = c.transpose();

    let k = kernel(&bbar.transpose(), tol);
    let c_img = image(&ct, tol);
    let vp = vstar(&at, &c_img, &k, tol)?;
    let rp = rstar(&at, &c_img, &vp, tol)?;

    let l0_dual = match l0 {
        Some(f) => {
            let res = invariance_residual(&(&at + &ct * f), &vp);
            if res > tol.residual * scale_of(a) {
                return Err(DuioError::NotInvariant {
                    op: "wstar_g (supplied friend)",
                    residual: res,
                });
            }
            f.clone()
        }
        None => friend(&at, &ct, &vp, tol)?,
    };
    let a0 = &at + &ct * &l0_dual;

    // Quotient by R'*; the image of V'* there is invariant under the induced map.
    let quot = decompose(&a0, &rp, tol)?;
    // Both factors are orthonormal, so the rank cut must not be relative: when
    // V'* = R'* the product is pure rounding noise.
    let vq = map_subspace(&quot.projection, &vp, tol)?;
    let restricted = vq.basis().transpose() * &quot.induced * vq.basis();
    let beta = minpoly(&restricted, tol)?;
    let split = split_spectrum(&beta, region);

    // Good part of V'*/R'*: the generalized eigenspace of the good eigenvalues.
    // Its dimension is the number of good eigenvalues counted with algebraic
    // multiplicity, which is more reliable than a rank cut on β_g(Ā).
    let good_count = eigvals(&restricted)?
        .into_iter()
        .filter(|z| region.contains(*z))
        .count();
    let xg_coords = if good_count == 0 {
        Mat::zeros(vq.ambient_dim(), 0)
    } else {
        let bg = split.beta_g.eval_matrix(&quot.induced) * vq.basis();
        let null = smallest_right_singular(&bg, good_count);
        vq.basis() * null
    };
    let xg = Subspace::span(&xg_coords, tol);

    // Pull back through the canonical projection: V'_g = P⁻¹ X̄_g.
    let vp_good = preimage(&quot.projection, &xg, tol)?;
    let wg = orthocomplement(&vp_good);
    let missed = wg.residual_of(bbar);
    if missed > tol.residual * bbar.amax().max(1.0) {
        return Err(DuioError::Numerical(format!(
            "W*_g misses the unknown-input image by {missed:.3e}"
        )));
    }
    let pg = vp_good.basis().transpose();
    Ok(WStarG {
        wg,
        pg,
        dual: DualArtifacts {
            vp_star: vp,
            rp_star: rp,
            l0_dual,
            beta,
            beta_split: split,
            vp_good,
        },
    })
}

/// The `k` right singular vectors belonging to the smallest singular values, as columns.
fn smallest_right_singular(m: &Mat, k: usize) -> Mat {
    let cols = m.ncols();
    // Work with the Gram matrix so that all right singular vectors are available
    // even when m has fewer rows than columns.
    let gram = m.transpose() * m;
    let eig = nalgebra::SymmetricEigen::new(gram);
    let mut order: Vec<usize> = (0..cols).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let mut out = Mat::zeros(cols, k);
    for (slot, &i) in order.iter().take(k).enumerate() {
        out.set_column(slot, &eig.eigenvectors.column(i));
    }
    out
}

/// Output injection `L` (`n x p`) with `(A + L C) W ⊆ W` and the quotient
/// spectrum inside `region`.
///
/// Works on the dual side: the part of `W^⊥` outside its controllability
/// subspace keeps its fixed spectrum, and the controllability subspace is
/// placed at `pole_targets` (defaults to [`GoodRegion::default_targets`]).
pub fn stabilizing_injection(
    a: &Mat,
    c: &Mat,
    wg: &Subspace,
    region: &GoodRegion,
    pole_targets: Option<&[f64]>,
    tol: &Tolerances,
) -> Result<Mat> {
    check_square("stabilizing_injection", a)?;
    let n = a.nrows();
    check_ambient("stabilizing_injection", n, wg)?;
    let at = a.transpose();
    let ct = c.transpose();
    let vp = orthocomplement(wg);
    let c_img = image(&ct, tol);

    let f0 = friend(&at, &ct, &vp, tol)?;
    let a0 = &at + &ct * &f0;
    let rp = rstar(&at, &c_img, &vp, tol)?;
    let r = rp.dim();

    let mut f_dual = f0;
    if r > 0 {
        let targets: Vec<f64> = match pole_targets {
            Some(t) if t.len() >= r => t[..r].to_vec(),
            Some(t) => {
                return Err(DuioError::Invalid(format!(
                    "{} pole targets supplied but {r} modes are assignable",
                    t.len()
                )))
            }
            None => region.default_targets(r),
        };
        if let Some(bad) = targets.iter().find(|&&t| !region.contains(Complex64::new(t, 0.0))) {
            return Err(DuioError::Invalid(format!(
                "pole target {bad} lies outside the good region"
            )));
        }
        let s = intersect(&c_img, &rp, tol)?;
        if s.is_zero() {
            return Err(DuioError::StabilizationFailed(
                "controllability subspace receives no input".into(),
            ));
        }
        let g = pinv(&ct, tol) * s.basis();
        let rb = rp.basis();
        let a_r = rb.transpose() * &a0 * rb;
        let b_r = rb.transpose() * s.basis();
        let f1 = place_poles(&a_r, &b_r, &targets, region)?;
        f_dual += g * f1 * rb.transpose();
    }
    let l = f_dual.transpose();

    let a_l = a + &l * c;
    let dec = decompose(&a_l, wg, tol)?;
    let spec = eigvals(&dec.induced)?;
    if let Some(z) = spec.iter().find(|z| !region.contains(**z)) {
        return Err(DuioError::StabilizationFailed(format!(
            "quotient eigenvalue {z} is outside the good region"
        )));
    }
    Ok(l)
}

/// Attempts for the randomized Sylvester parametrization in [`place_poles`].
const PLACEMENT_ATTEMPTS: u64 = 32;

/// State feedback `F` (`k x r`) such that `A + B F` has the real eigenvalues
/// `targets`.
///
/// Uses the Sylvester parametrization: pick `G`, solve `A X - X Λ = -B G`, set
/// `F = G X⁻¹`. `G` is drawn from a fixed-seed generator, retrying when `X` is
/// badly conditioned. When a target coincides with an eigenvalue of `A` the
/// Sylvester operator is singular, so `A` is first moved by a random feedback.
pub fn place_poles(a: &Mat, b: &Mat, targets: &[f64], region: &GoodRegion) -> Result<Mat> {
    let r = a.nrows();
    let k = b.ncols();
    if targets.len() != r {
        return Err(DuioError::DimensionMismatch {
            op: "place_poles",
            expected: r,
            got: targets.len(),
        });
    }
    if let Some(f) = sylvester_placement(a, b, targets, region)? {
        return Ok(f);
    }
    let scale = a.amax().max(1.0);
    for shift in 0..PLACEMENT_ATTEMPTS {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5417_0000 + shift);
        let f0 = Mat::from_fn(k, r, |_, _| scale * rng.random_range(-1.0..1.0));
        if let Some(f) = sylvester_placement(&(a + b * &f0), b, targets, region)? {
            return Ok(f0 + f);
        }
    }
    Err(DuioError::StabilizationFailed(format!(
        "no well-conditioned placement found in {PLACEMENT_ATTEMPTS} attempts"
    )))
}

fn sylvester_placement(a: &Mat, b: &Mat, targets: &[f64], region: &GoodRegion) -> Result<Option<Mat>> {
    let r = a.nrows();
    let k = b.ncols();
    let eye = Mat::identity(r, r);
    let lambda = Mat::from_diagonal(&nalgebra::DVector::from_column_slice(targets));
    let sylv = eye.kronecker(a) - lambda.transpose().kronecker(&eye);
    let lu = sylv.lu();
    let mut best: Option<(f64, Mat)> = None;
    for attempt in 0..PLACEMENT_ATTEMPTS {
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0000 + attempt);
        let g = Mat::from_fn(k, r, |_, _| rng.random_range(-1.0..1.0));
        let rhs = -(b * &g);
        let Some(vec_x) = lu.solve(&nalgebra::DVector::from_column_slice(rhs.as_slice())) else {
            break;
        };
        let x = Mat::from_column_slice(r, r, vec_x.as_slice());
        let sv = crate::matlin::singular_values(&x);
        let cond = sv.last().copied().unwrap_or(0.0) / sv[0].max(f64::MIN_POSITIVE);
        if !cond.is_finite() || cond < 1e-10 {
            continue;
        }
        let Some(xinv) = x.clone().try_inverse() else {
            continue;
        };
        let f = g * xinv;
        let closed = a + b * &f;
        let placed = eigvals(&closed)?;
        let on_target = targets
            .iter()
            .all(|t| placed.iter().any(|z| (z - Complex64::new(*t, 0.0)).norm() <= 1e-6 * t.abs().max(1.0)));
        if on_target
            && placed.iter().all(|z| region.contains(*z))
            && best.as_ref().is_none_or(|(c, _)| cond > *c)
        {
            best = Some((cond, f));
            if cond > 1e-3 {
                break;
            }
        }
    }
    Ok(best.map(|(_, f)| f))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matlin::{sort_spectrum, Vector};

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn m(r: usize, c: usize, v: &[f64]) -> Mat {
        Mat::from_row_slice(r, c, v)
    }

    fn e(n: usize, i: usize) -> Subspace {
        Subspace::coordinate(n, &[i])
    }

    #[test]
    fn sparse_integer_system_gets_a_friend() {
        // Once made nalgebra's SVD return wrong singular vectors inside `pinv`.
        let t = tol();
        let a = m(4, 4, &[0., 0., 1., -1., 0., -2., -2., -1., 0., 0., 0., 0., -2., 0., 0., 0.]);
        let c = m(3, 4, &[2., 0., 0., 0., 0., 2., 0., -2., 0., -2., 0., -1.]);
        let bbar = m(4, 2, &[0., 2., 2., 1., 0., 1., 2., 1.]);
        let ws = wstar_g(&a, &c, &bbar, &GoodRegion::default(), &t).unwrap();
        assert!(conditioned_invariance_residual(&a, &c, &ws.wg, &t).unwrap() < 1e-9);
        assert!(ws.wg.residual_of(&bbar) < 1e-9);
    }

    #[test]
    fn vstar_examples() {
        let t = tol();
        let a = m(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let v = vstar(&a, &Subspace::zero(2), &Subspace::full(2), &t).unwrap();
        assert_eq!(v.dim(), 2);
        let v = vstar(&Mat::zeros(2, 2), &Subspace::zero(2), &e(2, 0), &t).unwrap();
        assert!(v.same_as(&e(2, 0), 1e-12));
        let nil = m(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        let v = vstar(&nil, &e(2, 1), &e(2, 0), &t).unwrap();
        assert!(v.same_as(&e(2, 0), 1e-12));
    }

    #[test]
    fn vstar_drops_directions_that_leak() {
        // A e1 = e2, no input: span{e1} is not invariant, so V* in span{e1} is 0.
        let a = m(2, 2, &[0.0, 0.0, 1.0, 0.0]);
        let v = vstar(&a, &Subspace::zero(2), &e(2, 0), &tol()).unwrap();
        assert!(v.is_zero());
    }

    #[test]
    fn rstar_examples() {
        let t = tol();
        let nil = m(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        let full = Subspace::full(2);
        assert!(rstar(&nil, &Subspace::zero(2), &full, &t).unwrap().is_zero());
        // (nil, e2) is controllable
        assert_eq!(rstar(&nil, &e(2, 1), &full, &t).unwrap().dim(), 2);
        assert!(rstar(&nil, &e(2, 1), &e(2, 0), &t).unwrap().is_zero());
    }

    #[test]
    fn friend_examples() {
        let t = tol();
        let a = m(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let b = m(2, 1, &[0.0, 1.0]);
        assert_eq!(friend(&a, &b, &Subspace::full(2), &t).unwrap(), Mat::zeros(1, 2));
        assert_eq!(friend(&a, &b, &Subspace::zero(2), &t).unwrap(), Mat::zeros(1, 2));
        let f = friend(&a, &b, &e(2, 0), &t).unwrap();
        assert!((f - m(1, 2, &[-1.0, 0.0])).norm() < 1e-12);
        // without input, A e1 = e1 + e2 leaves span{e1}
        let err = friend(&a, &Mat::zeros(2, 1), &e(2, 0), &t).unwrap_err();
        assert!(matches!(err, DuioError::NotInvariant { .. }));
    }

    #[test]
    fn decompose_examples() {
        let t = tol();
        let a = m(2, 2, &[-1.0, 1.0, 0.0, -2.0]);
        let d = decompose(&a, &Subspace::zero(2), &t).unwrap();
        assert_eq!(d.restricted.shape(), (0, 0));
        let mut s = eigvals(&d.induced).unwrap();
        sort_spectrum(&mut s);
        assert!((s[0].re + 2.0).abs() < 1e-12 && (s[1].re + 1.0).abs() < 1e-12);

        let diag = m(2, 2, &[-1.0, 0.0, 0.0, -2.0]);
        let d = decompose(&diag, &e(2, 0), &t).unwrap();
        assert!((d.restricted[(0, 0)] + 1.0).abs() < 1e-12);
        assert!((d.induced[(0, 0)] + 2.0).abs() < 1e-12);

        let d = decompose(&a, &e(2, 0), &t).unwrap();
        assert!((d.restricted[(0, 0)] + 1.0).abs() < 1e-12);
        assert!((d.induced[(0, 0)] + 2.0).abs() < 1e-12);
        assert!((&d.induced * &d.projection - &d.projection * &a).norm() < 1e-12);

        let err = decompose(&a, &e(2, 1), &t).unwrap_err();
        assert!(matches!(err, DuioError::NotInvariant { .. }));
    }

    #[test]
    fn split_spectrum_examples() {
        let region = GoodRegion::default();
        let s = split_spectrum(&Poly::new(vec![-1.0, 0.0, 1.0]), &region);
        assert!(s.beta_g.max_coeff_diff(&Poly::linear(-1.0)) < 1e-12);
        assert!(s.beta_b.max_coeff_diff(&Poly::linear(1.0)) < 1e-12);

        let stable = Poly::linear(-1.0).mul(&Poly::linear(-3.0));
        let s = split_spectrum(&stable, &region);
        assert!(s.beta_g.max_coeff_diff(&stable) < 1e-12);
        assert_eq!(s.beta_b, Poly::one());

        let pair = Poly::new(vec![2.0, 2.0, 1.0]);
        let s = split_spectrum(&pair, &region);
        assert!(s.beta_g.max_coeff_diff(&pair) < 1e-12);
        assert_eq!(s.beta_b, Poly::one());
        assert_eq!(s.good_roots.len(), 2);
    }

    #[test]
    fn split_keeps_unstable_pair_together() {
        // (λ² - 2λ + 5)(λ + 2): roots 1 ± 2i and -2
        let beta = Poly::new(vec![5.0, -2.0, 1.0]).mul(&Poly::linear(-2.0));
        let s = split_spectrum(&beta, &GoodRegion::default());
        assert_eq!(s.beta_b.degree(), 2);
        assert!(s.beta_g.mul(&s.beta_b).max_coeff_diff(&beta) < 1e-10);
    }

    #[test]
    fn wstar_g_without_unknown_inputs_is_zero() {
        let a = m(2, 2, &[0.0, 1.0, -2.0, -3.0]);
        let c = m(1, 2, &[1.0, 0.0]);
        let w = wstar_g(&a, &c, &Mat::zeros(2, 1), &GoodRegion::default(), &tol()).unwrap();
        assert!(w.wg.is_zero());
    }

    #[test]
    fn wstar_g_blind_node_gets_reachable_set() {
        let a = m(2, 2, &[-1.0, 0.0, 0.0, -2.0]);
        let c = Mat::zeros(1, 2);
        let bbar = m(2, 1, &[1.0, 0.0]);
        let w = wstar_g(&a, &c, &bbar, &GoodRegion::default(), &tol()).unwrap();
        assert!(w.wg.same_as(&e(2, 0), 1e-10));
    }

    #[test]
    fn wstar_g_tracks_invariant_zero_location() {
        // ū -> y has transfer (s - z)/(s² + 3s + 2); the zero z is the fixed
        // quotient eigenvalue of W = Im B̄.
        let a = m(2, 2, &[0.0, 1.0, -2.0, -3.0]);
        let bbar = m(2, 1, &[0.0, 1.0]);
        let t = tol();
        let region = GoodRegion::default();

        let good_zero = m(1, 2, &[3.0, 1.0]); // z = -3
        let w = wstar_g(&a, &good_zero, &bbar, &region, &t).unwrap();
        assert!(w.wg.same_as(&e(2, 1), 1e-10));
        assert!(conditioned_invariance_residual(&a, &good_zero, &w.wg, &t).unwrap() < 1e-10);

        let bad_zero = m(1, 2, &[-1.0, 1.0]); // z = +1
        let w = wstar_g(&a, &bad_zero, &bbar, &region, &t).unwrap();
        assert_eq!(w.wg.dim(), 2);
        assert_eq!(w.dual.beta_split.bad_roots.len(), 1);
    }

    #[test]
    fn injection_hand_example() {
        let a = m(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        let c = m(1, 2, &[1.0, 0.0]);
        let l = stabilizing_injection(&a, &c, &e(2, 1), &GoodRegion::default(), None, &tol())
            .unwrap();
        assert!((l - m(2, 1, &[-2.0, 0.0])).norm() < 1e-10);
    }

    #[test]
    fn injection_for_observable_pair_is_hurwitz() {
        let a = m(3, 3, &[0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 1.0, -2.0, 3.0]);
        let c = m(1, 3, &[1.0, 0.0, 0.0]);
        let l = stabilizing_injection(&a, &c, &Subspace::zero(3), &GoodRegion::default(), None, &tol())
            .unwrap();
        let mut s = eigvals(&(&a + &l * &c)).unwrap();
        sort_spectrum(&mut s);
        for (z, target) in s.iter().zip([-3.0, -2.0, -1.0]) {
            assert!((z.re - target).abs() < 1e-6 && z.im.abs() < 1e-6, "{z}");
        }
    }

    #[test]
    fn explicit_targets_are_used() {
        let a = m(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        let c = m(1, 2, &[1.0, 0.0]);
        let l = stabilizing_injection(
            &a,
            &c,
            &Subspace::zero(2),
            &GoodRegion::default(),
            Some(&[-4.0, -5.0]),
            &tol(),
        )
        .unwrap();
        let s = eigvals(&(&a + &l * &c)).unwrap();
        let prod: f64 = s.iter().map(|z| z.re).product();
        assert!((prod - 20.0).abs() < 1e-8);
        let too_few = stabilizing_injection(
            &a,
            &c,
            &Subspace::zero(2),
            &GoodRegion::default(),
            Some(&[-4.0]),
            &tol(),
        );
        assert!(matches!(too_few, Err(DuioError::Invalid(_))));
    }

    #[test]
    fn place_poles_multi_input() {
        let a = m(3, 3, &[0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0]);
        let b = m(3, 2, &[0.0, 0.0, 1.0, 0.0, 0.0, 1.0]);
        let f = place_poles(&a, &b, &[-1.0, -2.0, -3.0], &GoodRegion::default()).unwrap();
        let mut s = eigvals(&(&a + &b * &f)).unwrap();
        sort_spectrum(&mut s);
        let re: Vec<f64> = s.iter().map(|z| z.re).collect();
        assert!((Vector::from_vec(re) - Vector::from_vec(vec![-3.0, -2.0, -1.0])).norm() < 1e-8);
    }
}
