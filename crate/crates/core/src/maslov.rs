//! Maslov indices: `μ^CLM` of Lagrangian paths and `ι_ω` of symplectic paths.
//!
//! A Lagrangian `L` for the form `Ĵ` is encoded by the unitary `U_L = a b⁻¹`
//! where `a`, `b` are the coordinates of a frame of `L` on the `±1`
//! eigenspaces of `-iĴ` (scaled to be isometric). `L ∩ L₀ ≠ 0` exactly when
//! `W = U₀* U_L` has eigenvalue `1`, and a positive crossing moves an
//! eigenvalue of `W` counterclockwise through `1`. The regularized index is
//! the net number of eigenvalues of `e^{-2iε} W(t)` passing `1`.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::integrator::FundamentalSolution;
use crate::linalg::{
    block_diag, frobenius, graph_form, hermitian_signature, polar, standard_j_c, to_complex,
    unitary_power, CMatrix, LagrangianFrame, Signature, ONE,
};

type CVector = nalgebra::DVector<Complex64>;
type FrameFn = Arc<dyn Fn(f64) -> CMatrix + Send + Sync>;

/// Where the frames of a [`LagrangianPath`] come from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PathSource {
    Explicit,
    Graph,
}

/// Continuous path of Lagrangian frames on `[a, b]` in a fixed symplectic space.
#[derive(Clone)]
pub struct LagrangianPath {
    form: CMatrix,
    a: f64,
    b: f64,
    frame: FrameFn,
    hint: usize,
    source: PathSource,
}

impl std::fmt::Debug for LagrangianPath {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LagrangianPath")
            .field("a", &self.a)
            .field("b", &self.b)
            .field("dim", &self.dim())
            .field("source", &self.source)
            .finish()
    }
}

impl LagrangianPath {
    /// Path from a frame-valued function; `hint` is the minimal number of
    /// uniform samples used before adaptive refinement.
    pub fn from_fn<F>(form: CMatrix, a: f64, b: f64, hint: usize, f: F) -> Result<Self>
    where
        F: Fn(f64) -> CMatrix + Send + Sync + 'static,
    {
        if !(b > a) || !a.is_finite() || !b.is_finite() {
            return Err(Error::Domain(format!("empty interval [{a}, {b}]")));
        }
        let path = Self { form, a, b, frame: Arc::new(f), hint: hint.max(8), source: PathSource::Explicit };
        for t in [a, 0.5 * (a + b), b] {
            path.frame_checked(t)?;
        }
        Ok(path)
    }

    /// Constant path at `l`.
    pub fn constant(l: &LagrangianFrame, a: f64, b: f64) -> Result<Self> {
        let z = l.z().clone();
        Self::from_fn(l.form().clone(), a, b, 8, move |_| z.clone())
    }

    /// `t ↦ Gr(S(t))` for a symplectic path.
    pub fn graph(path: &SymplecticPath) -> Self {
        let k2 = path.size();
        let f = path.f.clone();
        Self {
            form: graph_form(k2 / 2),
            a: path.a,
            b: path.b,
            frame: Arc::new(move |t| {
                let m = f(t);
                let mut z = CMatrix::zeros(2 * k2, k2);
                for i in 0..k2 {
                    z[(i, i)] = ONE;
                }
                z.view_mut((k2, 0), (k2, k2)).copy_from(&m);
                z
            }),
            hint: path.hint,
            source: PathSource::Graph,
        }
    }

    pub fn form(&self) -> &CMatrix {
        &self.form
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.a, self.b)
    }

    pub fn source(&self) -> PathSource {
        self.source
    }

    pub fn dim(&self) -> usize {
        self.form.nrows() / 2
    }

    pub fn frame_at(&self, t: f64) -> CMatrix {
        (self.frame)(t.clamp(self.a, self.b))
    }

    /// Frame at `t`, checked for isotropy within `1e-10` relative to `‖Z‖²`.
    pub fn frame_checked(&self, t: f64) -> Result<LagrangianFrame> {
        LagrangianFrame::new(self.frame_at(t), self.form.clone(), 1e-10)
    }

    /// Frames on `n + 1` uniform samples.
    pub fn samples(&self, n: usize) -> Vec<(f64, CMatrix)> {
        let n = n.max(1);
        (0..=n)
            .map(|i| {
                let t = self.a + (self.b - self.a) * i as f64 / n as f64;
                (t, self.frame_at(t))
            })
            .collect()
    }

    pub fn restrict(&self, a: f64, b: f64) -> Result<Self> {
        if !(a >= self.a && b <= self.b && b > a) {
            return Err(Error::Domain(format!("[{a}, {b}] not inside [{}, {}]", self.a, self.b)));
        }
        let mut p = self.clone();
        p.a = a;
        p.b = b;
        Ok(p)
    }

    /// `s ↦ ℓ(φ(s))` on `[a, b]`; `φ` must be continuous with `φ(a), φ(b)`
    /// the endpoints of the original domain.
    pub fn reparametrize<F>(&self, a: f64, b: f64, phi: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let f = self.frame.clone();
        let (lo, hi) = (self.a, self.b);
        Self {
            form: self.form.clone(),
            a,
            b,
            frame: Arc::new(move |s| f(phi(s).clamp(lo, hi))),
            hint: self.hint,
            source: self.source,
        }
    }

    /// Concatenation, `other` shifted to start where `self` ends.
    pub fn concat(&self, other: &Self) -> Result<Self> {
        if self.form != other.form {
            return Err(Error::Dimension("concatenated paths live in different spaces".into()));
        }
        let (f1, f2) = (self.frame.clone(), other.frame.clone());
        let mid = self.b;
        let shift = other.a - mid;
        Ok(Self {
            form: self.form.clone(),
            a: self.a,
            b: mid + (other.b - other.a),
            frame: Arc::new(move |t| if t <= mid { f1(t) } else { f2(t + shift) }),
            hint: self.hint + other.hint,
            source: PathSource::Explicit,
        })
    }

    /// `t ↦ φ ℓ(t)` for a fixed map `φ` preserving the form.
    pub fn transformed(&self, phi: &CMatrix) -> Self {
        let f = self.frame.clone();
        let phi = phi.clone();
        Self {
            form: self.form.clone(),
            a: self.a,
            b: self.b,
            frame: Arc::new(move |t| &phi * f(t)),
            hint: self.hint,
            source: self.source,
        }
    }

    /// `t ↦ ℓ₁(t) ⊕ ℓ₂(t)`; both paths are rescaled to the domain of `self`.
    pub fn direct_sum(&self, other: &Self) -> Self {
        let (f1, f2) = (self.frame.clone(), other.frame.clone());
        let (a, b, c, d) = (self.a, self.b, other.a, other.b);
        Self {
            form: block_diag(&self.form, &other.form),
            a,
            b,
            frame: Arc::new(move |t| {
                let z1 = f1(t);
                let z2 = f2(c + (d - c) * (t - a) / (b - a));
                let (r1, c1) = z1.shape();
                let (r2, c2) = z2.shape();
                let mut z = CMatrix::zeros(r1 + r2, c1 + c2);
                z.view_mut((0, 0), (r1, c1)).copy_from(&z1);
                z.view_mut((r1, c1), (r2, c2)).copy_from(&z2);
                z
            }),
            hint: self.hint.max(other.hint),
            source: PathSource::Explicit,
        }
    }
}

/// Continuous path of (complex) symplectic matrices on `[a, b]`.
#[derive(Clone)]
pub struct SymplecticPath {
    a: f64,
    b: f64,
    f: FrameFn,
    hint: usize,
    size: usize,
}

impl std::fmt::Debug for SymplecticPath {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SymplecticPath").field("a", &self.a).field("b", &self.b).field("size", &self.size).finish()
    }
}

impl SymplecticPath {
    pub fn from_fn<F>(a: f64, b: f64, hint: usize, f: F) -> Result<Self>
    where
        F: Fn(f64) -> CMatrix + Send + Sync + 'static,
    {
        if !(b > a) {
            return Err(Error::Domain(format!("empty interval [{a}, {b}]")));
        }
        let size = f(a).nrows();
        if size % 2 != 0 {
            return Err(Error::Dimension(format!("odd size {size}")));
        }
        Ok(Self { a, b, f: Arc::new(f), hint: hint.max(8), size })
    }

    /// `t ↦ left · Ψ(t)` on `[0, T]`.
    pub fn from_solution(sol: Arc<FundamentalSolution>, left: CMatrix) -> Self {
        let period = sol.period();
        let hint = (sol.steps() / 8).max(32);
        let size = left.nrows();
        Self {
            a: 0.0,
            b: period,
            f: Arc::new(move |t| {
                let psi = sol.evaluate(t.clamp(0.0, period)).expect("t clamped to the domain");
                &left * to_complex(&psi)
            }),
            hint,
            size,
        }
    }

    pub fn constant(m: &CMatrix, a: f64, b: f64) -> Self {
        let m = m.clone();
        let size = m.nrows();
        Self { a, b, f: Arc::new(move |_| m.clone()), hint: 8, size }
    }

    /// Reference path from `I` to `M` on `[0, 1]`: `τ ↦ U^τ P^τ` for the
    /// polar decomposition `M = U P`.
    pub fn polar_connector(m: &CMatrix) -> Self {
        let (u, v, sigma) = polar(m);
        let size = m.nrows();
        Self {
            a: 0.0,
            b: 1.0,
            f: Arc::new(move |tau| {
                let mut d = CMatrix::zeros(size, size);
                for (i, s) in sigma.iter().enumerate() {
                    d[(i, i)] = Complex64::new(s.powf(tau), 0.0);
                }
                unitary_power(&u, tau) * (&v * d * v.adjoint())
            }),
            hint: 32,
            size,
        }
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.a, self.b)
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn at(&self, t: f64) -> CMatrix {
        (self.f)(t.clamp(self.a, self.b))
    }

    pub fn start(&self) -> CMatrix {
        self.at(self.a)
    }

    pub fn end(&self) -> CMatrix {
        self.at(self.b)
    }

    /// `t ↦ c · S(t)`.
    pub fn scaled(&self, c: Complex64) -> Self {
        let f = self.f.clone();
        Self { f: Arc::new(move |t| f(t) * c), ..self.clone() }
    }

    /// `t ↦ L S(t)`.
    pub fn left_mul(&self, l: &CMatrix) -> Self {
        let f = self.f.clone();
        let l = l.clone();
        Self { f: Arc::new(move |t| &l * f(t)), ..self.clone() }
    }

    /// `self` followed by `other`, time-shifted.
    pub fn concat(&self, other: &Self) -> Self {
        let (f1, f2) = (self.f.clone(), other.f.clone());
        let mid = self.b;
        let shift = other.a - mid;
        Self {
            a: self.a,
            b: mid + (other.b - other.a),
            f: Arc::new(move |t| if t <= mid { f1(t) } else { f2(t + shift) }),
            hint: self.hint + other.hint,
            size: self.size,
        }
    }

    pub fn restrict(&self, a: f64, b: f64) -> Result<Self> {
        if !(a >= self.a && b <= self.b && b > a) {
            return Err(Error::Domain(format!("[{a}, {b}] not inside [{}, {}]", self.a, self.b)));
        }
        Ok(Self { a, b, ..self.clone() })
    }
}

/// A crossing instant of a Lagrangian path with `Σ(L₀)`.
#[derive(Clone, Debug, Serialize)]
pub struct CrossingRecord {
    pub t: f64,
    pub kernel_dim: usize,
    pub form_signature: Signature,
    pub regular: bool,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ClmOptions {
    /// Eigen-angles of `W` below this count as exact intersections.
    pub zero_tol: f64,
    /// Largest Frobenius step of `W` between neighbouring samples.
    pub max_step: f64,
    /// Locate crossings and evaluate crossing forms.
    pub locate: bool,
}

impl Default for ClmOptions {
    fn default() -> Self {
        Self { zero_tol: 1e-7, max_step: 0.5, locate: true }
    }
}

/// Result of [`clm_index`].
#[derive(Clone, Debug, Serialize)]
pub struct ClmResult {
    pub index: i64,
    /// Endpoint-weighted crossing sum, when every crossing is isolated and regular.
    pub regular_route: Option<i64>,
    pub epsilon: f64,
    pub crossings: Vec<CrossingRecord>,
    pub samples: usize,
}

impl ClmResult {
    /// The crossing-form route, if available, agrees with the regularized count.
    pub fn routes_agree(&self) -> bool {
        self.regular_route.map_or(true, |r| r == self.index)
    }
}

/// Unitary coordinates for Lagrangians of a fixed form.
pub(crate) struct Chart {
    plus: CMatrix,
    minus: CMatrix,
}

impl Chart {
    pub(crate) fn new(form: &CMatrix) -> Result<Self> {
        let n = form.nrows();
        let h = form * Complex64::new(0.0, -1.0);
        let herm = (&h + h.adjoint()) * Complex64::new(0.5, 0.0);
        let eig = herm.symmetric_eigen();
        let mut plus = Vec::new();
        let mut minus = Vec::new();
        for i in 0..n {
            let lam = eig.eigenvalues[i];
            let col = eig.eigenvectors.column(i) * Complex64::new(lam.abs().sqrt(), 0.0);
            if lam > 1e-12 {
                plus.push(col);
            } else if lam < -1e-12 {
                minus.push(col);
            } else {
                return Err(Error::Dimension("degenerate symplectic form".into()));
            }
        }
        if plus.len() != minus.len() {
            return Err(Error::Dimension("form has no Lagrangian subspaces".into()));
        }
        let stack = |v: Vec<_>| CMatrix::from_columns(&v).adjoint();
        Ok(Self { plus: stack(plus), minus: stack(minus) })
    }

    pub(crate) fn unitary(&self, z: &CMatrix) -> Result<CMatrix> {
        let q = z.clone().qr().q();
        let a = &self.plus * &q;
        let b = &self.minus * &q;
        let binv = b
            .try_inverse()
            .ok_or_else(|| Error::Dimension("frame is not Lagrangian".into()))?;
        Ok(a * binv)
    }
}

/// Eigen-decomposition of a unitary matrix: angles in `(-π, π]` and eigenvectors.
fn unitary_eigen(w: &CMatrix) -> (Vec<f64>, CMatrix) {
    let n = w.nrows();
    if n == 1 {
        return (vec![w[(0, 0)].arg()], CMatrix::identity(1, 1));
    }
    let (q, t) = crate::linalg::schur(w);
    ((0..n).map(|i| t[(i, i)].arg()).collect(), q)
}

/// `arg(e^{-2iε} e^{iθ})` mapped into `[0, 2π)`.
fn shifted_angle(theta: f64, eps: f64) -> f64 {
    (theta - 2.0 * eps).rem_euclid(2.0 * PI)
}

struct Sample {
    t: f64,
    w: CMatrix,
}

struct Scan {
    samples: Vec<Sample>,
    /// Lifted change of `arg det W` across each interval.
    dphi: Vec<f64>,
}

fn winding_increment(w0: &CMatrix, w1: &CMatrix) -> f64 {
    let rel = w0.adjoint() * w1;
    unitary_eigen(&rel).0.iter().sum()
}

fn scan(path: &LagrangianPath, chart: &Chart, u0adj: &CMatrix, opts: &ClmOptions) -> Result<Scan> {
    let w_at = |t: f64| -> Result<CMatrix> { Ok(u0adj * chart.unitary(&path.frame_at(t))?) };
    let n = path.hint;
    let (a, b) = path.domain();
    let min_width = 1e-12 * (b - a);
    let mut samples = Vec::new();
    let mut dphi = Vec::new();
    let mut t_prev = a;
    let mut w_prev = w_at(a)?;
    samples.push(Sample { t: a, w: w_prev.clone() });
    for i in 1..=n {
        let t_next = a + (b - a) * i as f64 / n as f64;
        let mut stack = vec![(t_next, w_at(t_next)?)];
        while let Some((t1, w1)) = stack.pop() {
            if frobenius(&(&w1 - &w_prev)) > opts.max_step {
                if t1 - t_prev < min_width {
                    return Err(Error::DegeneratePath(format!(
                        "path not resolvable near t = {t_prev} (discontinuity?)"
                    )));
                }
                let tm = 0.5 * (t_prev + t1);
                let wm = w_at(tm)?;
                stack.push((t1, w1));
                stack.push((tm, wm));
                continue;
            }
            dphi.push(winding_increment(&w_prev, &w1));
            samples.push(Sample { t: t1, w: w1.clone() });
            t_prev = t1;
            w_prev = w1;
        }
    }
    Ok(Scan { samples, dphi })
}

fn regularized_count(scan: &Scan, eps: f64) -> f64 {
    let total: f64 = scan.dphi.iter().sum();
    let ends = |w: &CMatrix| -> f64 { unitary_eigen(w).0.iter().map(|&th| shifted_angle(th, eps)).sum() };
    let first = &scan.samples[0].w;
    let last = &scan.samples.last().expect("non-empty scan").w;
    (total - ends(last) + ends(first)) / (2.0 * PI)
}

/// Smallest `|θ|` above `zero_tol` and largest below it, over both endpoints.
fn endpoint_gap(scan: &Scan, zero_tol: f64) -> (f64, f64) {
    let mut gap = PI;
    let mut noise = 0.0f64;
    for w in [&scan.samples[0].w, &scan.samples.last().expect("non-empty scan").w] {
        for th in unitary_eigen(w).0 {
            if th.abs() <= zero_tol {
                noise = noise.max(th.abs());
            } else {
                gap = gap.min(th.abs());
            }
        }
    }
    (gap, noise)
}

/// `μ^CLM(L₀, ℓ)`.
pub fn clm_index(l0: &LagrangianFrame, path: &LagrangianPath) -> Result<ClmResult> {
    clm_index_with(l0, path, &ClmOptions::default())
}

pub fn clm_index_with(l0: &LagrangianFrame, path: &LagrangianPath, opts: &ClmOptions) -> Result<ClmResult> {
    if l0.form() != path.form() {
        return Err(Error::Dimension("L0 and path live in different symplectic spaces".into()));
    }
    let chart = Chart::new(path.form())?;
    let u0adj = chart.unitary(l0.z())?.adjoint();
    let scan = scan(path, &chart, &u0adj, opts)?;
    let (gap, noise) = endpoint_gap(&scan, opts.zero_tol);
    let eps = (1e-3f64).min(gap / 4.0);
    if eps <= 10.0 * noise.max(opts.zero_tol) {
        return Err(Error::DegeneratePath(format!(
            "endpoint eigen-angle gap {gap:.3e} too small to regularize"
        )));
    }
    let c1 = regularized_count(&scan, eps);
    let c2 = regularized_count(&scan, eps / 2.0);
    let (r1, r2) = (c1.round(), c2.round());
    if (c1 - r1).abs() > 1e-6 || (c2 - r2).abs() > 1e-6 || r1 != r2 {
        return Err(Error::DegeneratePath(format!(
            "regularized counts disagree: {c1} at eps={eps:.3e}, {c2} at eps/2"
        )));
    }
    let index = r1 as i64;
    let (crossings, regular_route) = if opts.locate {
        locate_crossings(path, l0, &chart, &u0adj, &scan, opts)?
    } else {
        (Vec::new(), None)
    };
    Ok(ClmResult { index, regular_route, epsilon: eps, crossings, samples: scan.samples.len() })
}

/// Branch angle of the eigenvector of `w` best matching `v`.
fn matched_angle(w: &CMatrix, v: &CVector) -> (f64, CVector) {
    let (th, q) = unitary_eigen(w);
    let ov = q.adjoint() * v;
    let mut best = 0;
    let mut best_val = -1.0;
    for i in 0..th.len() {
        let x = ov[(i, 0)].norm_sqr();
        if x > best_val {
            best_val = x;
            best = i;
        }
    }
    (th[best], q.column(best).into_owned())
}

/// Greedy eigenvector matching between consecutive samples; `perm[i]` is the
/// index in `q1` continuing branch `i` of `q0`.
fn match_branches(q0: &CMatrix, q1: &CMatrix) -> Vec<usize> {
    let n = q0.ncols();
    let ov = q0.adjoint() * q1;
    let mut perm = vec![usize::MAX; n];
    let mut used = vec![false; n];
    let mut entries: Vec<(f64, usize, usize)> = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            entries.push((ov[(i, j)].norm_sqr(), i, j));
        }
    }
    entries.sort_by(|x, y| y.0.partial_cmp(&x.0).unwrap());
    for (_, i, j) in entries {
        if perm[i] == usize::MAX && !used[j] {
            perm[i] = j;
            used[j] = true;
        }
    }
    perm
}

/// Crossing instants found by eigen-branch tracking, and whether they are
/// isolated on the sampling grid.
fn find_instants(
    path: &LagrangianPath,
    chart: &Chart,
    u0adj: &CMatrix,
    scan: &Scan,
    opts: &ClmOptions,
) -> Result<(Vec<f64>, bool)> {
    let (a, b) = path.domain();
    let w_at = |t: f64| -> Result<CMatrix> { Ok(u0adj * chart.unitary(&path.frame_at(t))?) };
    let eig: Vec<(Vec<f64>, CMatrix)> = scan.samples.iter().map(|s| unitary_eigen(&s.w)).collect();
    let hits: Vec<bool> = eig.iter().map(|(th, _)| th.iter().any(|x| x.abs() <= opts.zero_tol)).collect();
    let mut times = Vec::new();
    let mut isolated = true;
    for (i, &h) in hits.iter().enumerate() {
        if h {
            times.push(scan.samples[i].t);
            if i > 0 && hits[i - 1] {
                isolated = false;
            }
        }
    }
    if !isolated {
        return Ok((times, false));
    }
    for i in 0..scan.dphi.len() {
        let (th0, q0) = &eig[i];
        let (th1, q1) = &eig[i + 1];
        let perm = match_branches(q0, q1);
        for (j, &pj) in perm.iter().enumerate() {
            let (x0, x1) = (th0[j], th1[pj]);
            if x0.abs() <= opts.zero_tol || x1.abs() <= opts.zero_tol {
                continue;
            }
            if x0.abs() < PI / 2.0 && x1.abs() < PI / 2.0 && x0.signum() != x1.signum() {
                let mut lo = scan.samples[i].t;
                let mut hi = scan.samples[i + 1].t;
                let mut v = q0.column(j).into_owned();
                let s0 = x0.signum();
                while hi - lo > 1e-12 * (b - a) {
                    let mid = 0.5 * (lo + hi);
                    let (th, vm) = matched_angle(&w_at(mid)?, &v);
                    if th == 0.0 {
                        lo = mid;
                        hi = mid;
                        break;
                    }
                    if th.signum() == s0 {
                        lo = mid;
                        v = vm;
                    } else {
                        hi = mid;
                    }
                }
                times.push(0.5 * (lo + hi));
            }
        }
    }
    times.sort_by(|x, y| x.partial_cmp(y).unwrap());
    times.dedup_by(|x, y| (*x - *y).abs() <= 1e-9 * (b - a));
    Ok((times, true))
}

/// Crossing instant with the dimension of `ℓ(t) ∩ L₀`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Instant {
    pub t: f64,
    pub kernel_dim: usize,
}

/// Located crossings of `path` with `Σ(L₀)`; the flag is false when the
/// path meets `Σ(L₀)` on consecutive grid samples.
pub fn crossing_instants(
    l0: &LagrangianFrame,
    path: &LagrangianPath,
    opts: &ClmOptions,
) -> Result<(Vec<Instant>, bool)> {
    let chart = Chart::new(path.form())?;
    let u0adj = chart.unitary(l0.z())?.adjoint();
    let scan = scan(path, &chart, &u0adj, opts)?;
    let (times, isolated) = find_instants(path, &chart, &u0adj, &scan, opts)?;
    let mut out = Vec::with_capacity(times.len());
    for t in times {
        let w = &u0adj * chart.unitary(&path.frame_at(t))?;
        let kernel_dim = unitary_eigen(&w).0.iter().filter(|x| x.abs() <= 1e-6).count();
        out.push(Instant { t, kernel_dim });
    }
    Ok((out, isolated))
}

fn locate_crossings(
    path: &LagrangianPath,
    l0: &LagrangianFrame,
    chart: &Chart,
    u0adj: &CMatrix,
    scan: &Scan,
    opts: &ClmOptions,
) -> Result<(Vec<CrossingRecord>, Option<i64>)> {
    let (a, b) = path.domain();
    let (times, isolated) = find_instants(path, chart, u0adj, scan, opts)?;
    let mut records = Vec::new();
    let mut regular = isolated;
    if !isolated {
        return Ok((records, None));
    }
    let mut total = 0i64;
    for &t in &times {
        let form = match crossing_form(path, l0, t) {
            Ok(f) => f,
            Err(Error::DerivativeNotConverged { .. }) => {
                regular = false;
                continue;
            }
            Err(e) => return Err(e),
        };
        let scale = frobenius(&form).max(1.0);
        let sig = hermitian_signature(&form, 1e-6 * scale)?;
        let rec = CrossingRecord { t, kernel_dim: form.nrows(), form_signature: sig, regular: sig.is_regular() };
        regular &= rec.regular;
        total += if t <= a {
            sig.plus as i64
        } else if t >= b {
            -(sig.minus as i64)
        } else {
            sig.value()
        };
        records.push(rec);
    }
    Ok((records, if regular { Some(total) } else { None }))
}

/// Orthonormal basis (coefficients w.r.t. the frame) of `ℓ(t) ∩ L₀`, found
/// from the unit eigenvalues of `W`.
fn intersection_coeffs(z: &CMatrix, chart: &Chart, u0adj: &CMatrix, tol: f64) -> Result<CMatrix> {
    let w = u0adj * chart.unitary(z)?;
    let (th, q) = unitary_eigen(&w);
    let cols: Vec<usize> = (0..th.len()).filter(|&i| th[i].abs() <= tol).collect();
    if cols.is_empty() {
        return Err(Error::NotCrossing { t: f64::NAN });
    }
    // W-eigenvectors live in the `b`-coordinates of the chart; map back to
    // frame coefficients via `b = minus · Z · c`.
    let bmat = &chart.minus * z;
    let binv = bmat.try_inverse().ok_or_else(|| Error::Dimension("frame is not Lagrangian".into()))?;
    let mut c = CMatrix::zeros(z.ncols(), cols.len());
    for (k, &i) in cols.iter().enumerate() {
        c.set_column(k, &(&binv * q.column(i)));
    }
    // Orthonormalize the vectors `Z c` in the ambient space.
    let x = z * &c;
    let gram = x.adjoint() * &x;
    let eig = ((&gram + gram.adjoint()) * Complex64::new(0.5, 0.0)).symmetric_eigen();
    let mut inv_sqrt = CMatrix::zeros(cols.len(), cols.len());
    for i in 0..cols.len() {
        inv_sqrt[(i, i)] = Complex64::new(1.0 / eig.eigenvalues[i].sqrt(), 0.0);
    }
    Ok(c * (&eig.eigenvectors * inv_sqrt * eig.eigenvectors.adjoint()))
}

/// Matrix of the crossing form on `ℓ(t₀) ∩ L₀` in an orthonormal basis.
///
/// Uses `Q[Zc] = ⟨Ĵ Z c, Ż c⟩` with `Ż` from a central difference (one-sided
/// at the domain ends), halving `h` from `1e-5 (b - a)` until consecutive
/// estimates shrink at the second-order rate.
pub fn crossing_form(path: &LagrangianPath, l0: &LagrangianFrame, t0: f64) -> Result<CMatrix> {
    let chart = Chart::new(path.form())?;
    let u0adj = chart.unitary(l0.z())?.adjoint();
    let z = path.frame_at(t0);
    let c = intersection_coeffs(&z, &chart, &u0adj, 1e-6).map_err(|e| match e {
        Error::NotCrossing { .. } => Error::NotCrossing { t: t0 },
        other => other,
    })?;
    let (a, b) = path.domain();
    let jz = path.form() * &z * &c;
    let estimate = |h: f64| -> CMatrix {
        let r = |x: f64| Complex64::new(x, 0.0);
        let zdot = if t0 - h < a {
            (path.frame_at(t0) * r(-3.0) + path.frame_at(t0 + h) * r(4.0) - path.frame_at(t0 + 2.0 * h)) * r(0.5 / h)
        } else if t0 + h > b {
            (path.frame_at(t0) * r(3.0) - path.frame_at(t0 - h) * r(4.0) + path.frame_at(t0 - 2.0 * h)) * r(0.5 / h)
        } else {
            (path.frame_at(t0 + h) - path.frame_at(t0 - h)) * r(0.5 / h)
        };
        let q = (zdot * &c).adjoint() * &jz;
        (&q + q.adjoint()) * Complex64::new(0.5, 0.0)
    };
    let mut h = 1e-5 * (b - a);
    let mut prev = estimate(h);
    let mut prev_diff = f64::INFINITY;
    for _ in 0..12 {
        h *= 0.5;
        let next = estimate(h);
        let diff = frobenius(&(&next - &prev));
        let scale = frobenius(&next).max(1.0);
        if diff <= 1e-9 * scale || (prev_diff.is_finite() && diff <= 0.3 * prev_diff && diff <= 1e-6 * scale) {
            return Ok(next);
        }
        prev_diff = diff;
        prev = next;
    }
    Err(Error::DerivativeNotConverged { t: t0 })
}

/// `μ^CLM(Δ, Gr(S(t)))`.
pub fn clm_diagonal(path: &SymplecticPath, opts: &ClmOptions) -> Result<ClmResult> {
    let size = path.size();
    let delta = LagrangianFrame::new_unchecked(identity_graph(size), graph_form(size / 2));
    clm_index_with(&delta, &LagrangianPath::graph(path), opts)
}

fn identity_graph(size: usize) -> CMatrix {
    let mut z = CMatrix::zeros(2 * size, size);
    for i in 0..size {
        z[(i, i)] = ONE;
        z[(size + i, i)] = ONE;
    }
    z
}

/// `ι₁` of a symplectic path, by concatenation with the polar connector `C`
/// from `I` to `S(a)`: `ι₁(S) = μ(Δ, Gr(C * S)) − μ(Δ, Gr(C))`.
pub fn iota_one(path: &SymplecticPath, opts: &ClmOptions) -> Result<i64> {
    let conn = SymplecticPath::polar_connector(&path.start());
    let whole = clm_diagonal(&conn.concat(path), opts)?;
    let head = clm_diagonal(&conn, opts)?;
    Ok(whole.index - head.index)
}

/// `ι_ω` of a symplectic path: `ι₁(ω̄ S)` with the `n` offset at `ω = 1`
/// removed, so that the value is continuous in `ω` away from `σ(S(b))`.
pub fn iota_omega(path: &SymplecticPath, omega: Complex64, opts: &ClmOptions) -> Result<i64> {
    if (omega.norm() - 1.0).abs() > 1e-12 {
        return Err(Error::Domain(format!("|omega| = {} != 1", omega.norm())));
    }
    let v = iota_one(&path.scaled(omega.conj()), opts)?;
    let n = (path.size() / 2) as i64;
    if (omega - ONE).norm() <= 1e-14 {
        Ok(v - n)
    } else {
        Ok(v)
    }
}

/// Parity classes for [`parity_certificate`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Parity {
    Even,
    Odd,
    Boundary,
}

/// Compares the signs of `D_ω(e^{-εJ} S(a))` and `D_ω(e^{-εJ} S(b))` for
/// `ω = ±1`.
pub fn parity_certificate(sa: &CMatrix, sb: &CMatrix, omega: f64) -> Result<Parity> {
    if omega != 1.0 && omega != -1.0 {
        return Err(Error::Domain(format!("parity certificate needs omega = ±1, got {omega}")));
    }
    let k = sa.nrows() / 2;
    let eps = 1e-4;
    let rot = crate::linalg::expm(&(standard_j_c(k) * Complex64::new(-eps, 0.0)));
    let w = Complex64::new(omega, 0.0);
    let val = |m: &CMatrix| -> Result<Option<f64>> {
        let d = crate::linalg::d_omega(&(&rot * m), w)?;
        let scale = crate::linalg::spectral_norm(m).max(1.0).powi(2 * k as i32);
        if d.norm() <= 1e-12 * scale {
            Ok(None)
        } else {
            Ok(Some(d.re))
        }
    };
    match (val(sa)?, val(sb)?) {
        (Some(x), Some(y)) => Ok(if x.signum() == y.signum() { Parity::Even } else { Parity::Odd }),
        _ => Ok(Parity::Boundary),
    }
}

/// `e^{θJ}` for the standard `J` of size `2k`.
pub fn rotation_path_matrix(k: usize, theta: f64) -> CMatrix {
    crate::linalg::expm(&(standard_j_c(k) * Complex64::new(theta, 0.0)))
}
