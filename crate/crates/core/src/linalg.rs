//! Dense complex linear algebra on symplectic and Lagrangian objects.
//!
//! Matrices are `nalgebra::DMatrix<Complex64>`; real inputs are lifted with
//! [`to_complex`]. The symplectic form on `C^{2k}` is `ω(x, y) = ⟨Jx, y⟩`
//! with `J = [[0, -I], [I, 0]]`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type RMatrix = DMatrix<f64>;

pub const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
pub const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };
pub const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

pub fn to_complex(m: &RMatrix) -> CMatrix {
    m.map(|x| Complex64::new(x, 0.0))
}

/// Unit complex number `e^{iθ}`.
pub fn unit(theta: f64) -> Complex64 {
    Complex64::from_polar(1.0, theta)
}

pub fn frobenius(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Largest singular value.
pub fn spectral_norm(m: &CMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .cloned()
        .fold(0.0, f64::max)
}

/// Standard complex structure `J` of size `2k`.
pub fn standard_j(k: usize) -> RMatrix {
    let mut j = RMatrix::zeros(2 * k, 2 * k);
    for i in 0..k {
        j[(i, k + i)] = -1.0;
        j[(k + i, i)] = 1.0;
    }
    j
}

pub fn standard_j_c(k: usize) -> CMatrix {
    to_complex(&standard_j(k))
}

/// Form `(-J) ⊕ J` on `C^{2k} ⊕ C^{2k}` used for graphs of symplectic maps.
pub fn graph_form(k: usize) -> CMatrix {
    let j = standard_j_c(k);
    let mut f = CMatrix::zeros(4 * k, 4 * k);
    f.view_mut((0, 0), (2 * k, 2 * k)).copy_from(&(-&j));
    f.view_mut((2 * k, 2 * k), (2 * k, 2 * k)).copy_from(&j);
    f
}

/// Block-diagonal sum of two square matrices.
pub fn block_diag(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (n, m) = (a.nrows(), b.nrows());
    let mut out = CMatrix::zeros(n + m, n + m);
    out.view_mut((0, 0), (n, n)).copy_from(a);
    out.view_mut((n, n), (m, m)).copy_from(b);
    out
}

fn half_dim(m: &CMatrix) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(Error::Dimension(format!(
            "expected square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if m.nrows() == 0 || m.nrows() % 2 != 0 {
        return Err(Error::Dimension(format!(
            "expected even dimension, got {}",
            m.nrows()
        )));
    }
    Ok(m.nrows() / 2)
}

/// `‖M* J M − J‖_F`; for real `M` this is `‖Mᵀ J M − J‖_F`.
pub fn symplectic_residual(m: &CMatrix) -> Result<f64> {
    let k = half_dim(m)?;
    let j = standard_j_c(k);
    Ok(frobenius(&(m.adjoint() * &j * m - &j)))
}

pub fn is_symplectic(m: &CMatrix, tol: f64) -> Result<bool> {
    Ok(symplectic_residual(m)? <= tol)
}

/// The ⋄-product: interleaves the `[[A, B], [C, D]]` blocks of both factors.
pub fn diamond(m1: &CMatrix, m2: &CMatrix) -> Result<CMatrix> {
    let a = half_dim(m1)?;
    let b = half_dim(m2)?;
    let k = a + b;
    let mut out = CMatrix::zeros(2 * k, 2 * k);
    for (bi, bj) in [(0usize, 0usize), (0, 1), (1, 0), (1, 1)] {
        for i in 0..a {
            for j in 0..a {
                out[(bi * k + i, bj * k + j)] = m1[(bi * a + i, bj * a + j)];
            }
        }
        for i in 0..b {
            for j in 0..b {
                out[(bi * k + a + i, bj * k + a + j)] = m2[(bi * b + i, bj * b + j)];
            }
        }
    }
    Ok(out)
}

/// Full-rank frame of a Lagrangian subspace together with its ambient form.
#[derive(Clone, Debug)]
pub struct LagrangianFrame {
    z: CMatrix,
    form: CMatrix,
}

impl LagrangianFrame {
    /// Checks rank and isotropy `Z* Ĵ Z = 0` against `tol` (relative to `‖Z‖²`).
    pub fn new(z: CMatrix, form: CMatrix, tol: f64) -> Result<Self> {
        if form.nrows() != z.nrows() || z.nrows() != 2 * z.ncols() {
            return Err(Error::Dimension(format!(
                "frame {}x{} does not match form of size {}",
                z.nrows(),
                z.ncols(),
                form.nrows()
            )));
        }
        let f = Self { z, form };
        let scale = spectral_norm(&f.z).powi(2).max(1.0);
        let res = f.isotropy_residual();
        if res > tol * scale {
            return Err(Error::NotSymplectic { residual: res });
        }
        let sv = f.z.clone().svd(false, false).singular_values;
        let smax = sv.iter().cloned().fold(0.0, f64::max);
        let smin = sv.iter().cloned().fold(f64::INFINITY, f64::min);
        if smin <= 1e-12 * smax.max(1.0) {
            return Err(Error::Dimension("frame is rank deficient".into()));
        }
        Ok(f)
    }

    pub(crate) fn new_unchecked(z: CMatrix, form: CMatrix) -> Self {
        Self { z, form }
    }

    pub fn z(&self) -> &CMatrix {
        &self.z
    }

    pub fn form(&self) -> &CMatrix {
        &self.form
    }

    /// Half the ambient dimension.
    pub fn dim(&self) -> usize {
        self.z.ncols()
    }

    pub fn isotropy_residual(&self) -> f64 {
        frobenius(&(self.z.adjoint() * &self.form * &self.z))
    }

    /// Horizontal Lagrangian `R^k ⊕ 0` for the standard `J`.
    pub fn horizontal(k: usize) -> Self {
        let mut z = CMatrix::zeros(2 * k, k);
        for i in 0..k {
            z[(i, i)] = ONE;
        }
        Self::new_unchecked(z, standard_j_c(k))
    }

    /// Vertical Lagrangian `0 ⊕ R^k` for the standard `J`.
    pub fn vertical(k: usize) -> Self {
        let mut z = CMatrix::zeros(2 * k, k);
        for i in 0..k {
            z[(k + i, i)] = ONE;
        }
        Self::new_unchecked(z, standard_j_c(k))
    }

    /// Image under a linear map preserving the form.
    pub fn transformed(&self, phi: &CMatrix) -> Self {
        Self::new_unchecked(phi * &self.z, self.form.clone())
    }

    /// Direct sum in the ambient space `V ⊕ W`.
    pub fn direct_sum(&self, other: &Self) -> Self {
        let (r1, c1) = self.z.shape();
        let (r2, c2) = other.z.shape();
        let mut z = CMatrix::zeros(r1 + r2, c1 + c2);
        z.view_mut((0, 0), (r1, c1)).copy_from(&self.z);
        z.view_mut((r1, c1), (r2, c2)).copy_from(&other.z);
        Self::new_unchecked(z, block_diag(&self.form, &other.form))
    }
}

/// Frame `[I; M]` of `Gr(M)`, Lagrangian for `(-J) ⊕ J`.
pub fn graph_frame(m: &CMatrix, tol: f64) -> Result<LagrangianFrame> {
    half_dim(m)?;
    let res = symplectic_residual(m)?;
    if res > tol * spectral_norm(m).powi(2).max(1.0) {
        return Err(Error::NotSymplectic { residual: res });
    }
    Ok(graph_frame_unchecked(m))
}

pub(crate) fn graph_frame_unchecked(m: &CMatrix) -> LagrangianFrame {
    let n2 = m.nrows();
    let mut z = CMatrix::zeros(2 * n2, n2);
    for i in 0..n2 {
        z[(i, i)] = ONE;
    }
    z.view_mut((n2, 0), (n2, n2)).copy_from(m);
    LagrangianFrame::new_unchecked(z, graph_form(n2 / 2))
}

/// Orthonormal frame of `Gr(L F_k ⋯ F_1)`, applying one factor at a time
/// and re-orthonormalizing, so that the graph stays accurate when the
/// product's condition number exceeds `1/ε`.
pub fn graph_frame_product(left: &CMatrix, factors: &[CMatrix]) -> CMatrix {
    let n2 = left.nrows();
    let mut z = CMatrix::zeros(2 * n2, n2);
    for i in 0..n2 {
        z[(i, i)] = ONE;
        z[(n2 + i, i)] = ONE;
    }
    for f in factors.iter().chain(std::iter::once(left)) {
        let bottom = f * z.rows(n2, n2);
        z.rows_mut(n2, n2).copy_from(&bottom);
        z = z.qr().q();
    }
    z
}

/// Inertia of a Hermitian matrix.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Signature {
    pub plus: usize,
    pub zero: usize,
    pub minus: usize,
}

impl Signature {
    pub fn is_regular(&self) -> bool {
        self.zero == 0
    }
    pub fn value(&self) -> i64 {
        self.plus as i64 - self.minus as i64
    }
}

pub fn hermitian_eigenvalues(h: &CMatrix) -> Vec<f64> {
    if h.is_empty() {
        return Vec::new();
    }
    let sym = (h + h.adjoint()) * Complex64::new(0.5, 0.0);
    let mut ev: Vec<f64> = sym.symmetric_eigenvalues().iter().cloned().collect();
    ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ev
}

/// Counts of eigenvalues above `tol`, within `[-tol, tol]`, and below `-tol`.
pub fn hermitian_signature(h: &CMatrix, tol: f64) -> Result<Signature> {
    if h.nrows() != h.ncols() {
        return Err(Error::Dimension("Hermitian form must be square".into()));
    }
    let res = frobenius(&(h - h.adjoint()));
    if res > tol.max(1e-12 * frobenius(h)) {
        return Err(Error::NotHermitian { residual: res });
    }
    let mut sig = Signature { plus: 0, zero: 0, minus: 0 };
    for ev in hermitian_eigenvalues(h) {
        if ev > tol {
            sig.plus += 1;
        } else if ev < -tol {
            sig.minus += 1;
        } else {
            sig.zero += 1;
        }
    }
    Ok(sig)
}

/// Complex Schur form `M = Q T Q*` as `(Q, T)`.
///
/// Nearly scalar blocks can keep roundoff-sized subdiagonals above the
/// machine-epsilon deflation threshold indefinitely, so a stalled attempt is
/// retried with a looser threshold.
pub fn schur(m: &CMatrix) -> (CMatrix, CMatrix) {
    let n = m.nrows();
    let max_iter = 200 * n.max(1);
    for scale in [1.0, 16.0, 256.0, 4096.0] {
        if let Some(s) = nalgebra::Schur::try_new(m.clone(), scale * f64::EPSILON, max_iter) {
            return s.unpack();
        }
    }
    panic!("complex Schur iteration failed to converge on a {n}x{n} matrix")
}

/// Eigenvalues of a square complex matrix from its Schur form.
pub fn eigenvalues(m: &CMatrix) -> Vec<Complex64> {
    let n = m.nrows();
    if n == 0 {
        return Vec::new();
    }
    if n == 1 {
        return vec![m[(0, 0)]];
    }
    let (_, t) = schur(m);
    (0..n).map(|i| t[(i, i)]).collect()
}

/// Eigenvalues grouped into clusters of radius `radius`.
#[derive(Clone, Debug, Serialize)]
pub struct EigenCluster {
    pub value: Complex64,
    pub multiplicity: usize,
}

pub fn eigen_clusters(m: &CMatrix, radius: f64) -> Vec<EigenCluster> {
    let ev = eigenvalues(m);
    let mut used = vec![false; ev.len()];
    let mut out = Vec::new();
    for i in 0..ev.len() {
        if used[i] {
            continue;
        }
        let mut members = vec![i];
        used[i] = true;
        let mut grew = true;
        while grew {
            grew = false;
            for j in 0..ev.len() {
                if !used[j] && members.iter().any(|&k| (ev[k] - ev[j]).norm() <= radius) {
                    used[j] = true;
                    members.push(j);
                    grew = true;
                }
            }
        }
        let sum: Complex64 = members.iter().map(|&k| ev[k]).sum();
        out.push(EigenCluster {
            value: sum / members.len() as f64,
            multiplicity: members.len(),
        });
    }
    out.sort_by(|a, b| {
        (a.value.arg(), a.value.norm())
            .partial_cmp(&(b.value.arg(), b.value.norm()))
            .unwrap()
    });
    out
}

/// Singular values in descending order with matching right singular vectors (columns).
pub fn svd_sorted(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let svd = m.clone().svd(false, true);
    let vt = svd.v_t.expect("right singular vectors requested");
    let mut idx: Vec<usize> = (0..svd.singular_values.len()).collect();
    idx.sort_by(|&a, &b| svd.singular_values[b].partial_cmp(&svd.singular_values[a]).unwrap());
    let sv: Vec<f64> = idx.iter().map(|&i| svd.singular_values[i]).collect();
    let ncols = m.ncols();
    let mut v = CMatrix::zeros(ncols, idx.len());
    for (c, &i) in idx.iter().enumerate() {
        for r in 0..ncols {
            v[(r, c)] = vt[(i, r)].conj();
        }
    }
    (sv, v)
}

/// Orthonormal basis (columns) of the `dim` least significant right singular directions.
pub fn null_basis(m: &CMatrix, dim: usize) -> CMatrix {
    let ncols = m.ncols();
    let mut padded = m.clone();
    if m.nrows() < ncols {
        padded = CMatrix::zeros(ncols, ncols);
        padded.view_mut((0, 0), (m.nrows(), ncols)).copy_from(m);
    }
    let (_, v) = svd_sorted(&padded);
    v.columns(ncols - dim, dim).into_owned()
}

/// Numerical rank with threshold `tol` on singular values.
pub fn rank(m: &CMatrix, tol: f64) -> usize {
    if m.is_empty() {
        return 0;
    }
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .filter(|&&s| s > tol)
        .count()
}

/// Krein type `(p, q)` of a unit eigenvalue.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct KreinType {
    pub lambda: Complex64,
    pub p: usize,
    pub q: usize,
}

impl KreinType {
    pub fn is_definite(&self) -> bool {
        self.p == 0 || self.q == 0
    }
}

/// Basis of the generalized eigenspace for the cluster of `m` around `lambda`.
pub fn generalized_eigenspace(m: &CMatrix, lambda: Complex64, radius: f64) -> Result<(CMatrix, usize)> {
    let ev = eigenvalues(m);
    let members: Vec<Complex64> = ev.into_iter().filter(|z| (z - lambda).norm() <= radius).collect();
    let mult = members.len();
    if mult == 0 {
        return Err(Error::Spectral(format!("{lambda} is not an eigenvalue")));
    }
    let center: Complex64 = members.iter().sum::<Complex64>() / mult as f64;
    let n = m.nrows();
    let shifted = m - CMatrix::identity(n, n) * center;
    let mut power = CMatrix::identity(n, n);
    for _ in 0..mult {
        power = &power * &shifted;
    }
    Ok((null_basis(&power, mult), mult))
}

/// Signature of `x ↦ ⟨-iJ x, x⟩` on the generalized eigenspace of `lambda`.
///
/// `tol` is the spectral membership radius around `lambda`.
pub fn krein_type(m: &CMatrix, lambda: Complex64, tol: f64) -> Result<KreinType> {
    let k = half_dim(m)?;
    let radius = tol.max(1e-8 * spectral_norm(m));
    let (v, mult) = generalized_eigenspace(m, lambda, radius)?;
    let jt = standard_j_c(k) * Complex64::new(0.0, -1.0);
    let h = v.adjoint() * jt * &v;
    let sig = hermitian_signature(&h, 1e-8)?;
    if sig.zero != 0 {
        return Err(Error::Spectral(format!(
            "Krein form degenerate on generalized eigenspace of {lambda} (multiplicity {mult})"
        )));
    }
    Ok(KreinType { lambda, p: sig.plus, q: sig.minus })
}

/// `D_ω(M) = (-1)^{n-1} ω̄^n det(M - ω I)`.
pub fn d_omega(m: &CMatrix, omega: Complex64) -> Result<Complex64> {
    let n = half_dim(m)?;
    let dim = m.nrows();
    let det = (m - CMatrix::identity(dim, dim) * omega).determinant();
    let sign = if (n - 1) % 2 == 0 { 1.0 } else { -1.0 };
    Ok(omega.conj().powu(n as u32) * det * sign)
}

/// Rotation `R(θ) = [[cos, -sin], [sin, cos]]`.
pub fn rotation(theta: f64) -> RMatrix {
    let (s, c) = theta.sin_cos();
    RMatrix::from_row_slice(2, 2, &[c, -s, s, c])
}

/// Polar factors `M = U P` with `U` unitary and `P` positive definite, as
/// `(U, V, σ)` where `P = V diag(σ) V*`.
pub fn polar(m: &CMatrix) -> (CMatrix, CMatrix, Vec<f64>) {
    let svd = m.clone().svd(true, true);
    let u = svd.u.expect("left singular vectors requested");
    let vt = svd.v_t.expect("right singular vectors requested");
    let unitary = &u * &vt;
    (unitary, vt.adjoint(), svd.singular_values.iter().cloned().collect())
}

/// Principal power `U^τ` of a unitary matrix; eigenvalues at `-1` take angle `π`.
pub fn unitary_power(u: &CMatrix, tau: f64) -> CMatrix {
    let n = u.nrows();
    let (q, t) = schur(u);
    let mut d = CMatrix::zeros(n, n);
    for i in 0..n {
        let mut a = t[(i, i)].arg();
        if a < -std::f64::consts::PI + 1e-8 {
            a += 2.0 * std::f64::consts::PI;
        }
        d[(i, i)] = unit(a * tau);
    }
    &q * d * q.adjoint()
}

/// Matrix exponential.
pub fn expm(m: &CMatrix) -> CMatrix {
    m.exp()
}

pub fn expm_real(m: &RMatrix) -> RMatrix {
    m.exp()
}
