//! Nullities, ω-geometric and ω-spectral indices, `s₀`, and the integer
//! identities tying them together.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::integrator::{integrate_fundamental_shifted, integrate_segments_shifted, segment_count, IntegratorConfig};
use crate::linalg::{
    graph_frame_product, graph_frame_unchecked, graph_form, hermitian_signature, null_basis, rank, spectral_norm, svd_sorted,
    to_complex, unit, CMatrix, LagrangianFrame, RMatrix, Signature, ONE,
};
use crate::maslov::{crossing_instants, iota_one, ClmOptions, Chart, LagrangianPath, SymplecticPath};
use crate::model::MorseSturmSystem;

#[derive(Clone, Copy, Debug, Serialize)]
pub struct IndexConfig {
    pub integrator: IntegratorConfig,
    /// Points per segment in the `s₀` crossing-free certificate.
    pub scan_points: usize,
    pub s_budget: f64,
    /// Lower bound on `|det(ωA_dΨ(T) − I)|` at `s₀`.
    pub det_tol: f64,
    /// Shift used when the spectral-flow crossings are not all regular.
    pub shift_eps: f64,
    pub clm: ClmOptions,
}

impl Default for IndexConfig {
    fn default() -> Self {
        Self {
            integrator: IntegratorConfig::default(),
            scan_points: 64,
            s_budget: 1e6,
            det_tol: 1e-8,
            shift_eps: 1e-6,
            clm: ClmOptions::default(),
        }
    }
}

/// `dim ker(A − ωI)` over `C` at rank tolerance `1e-10`.
pub fn nullity(a: &RMatrix, omega: Complex64) -> usize {
    let n = a.nrows();
    let m = to_complex(a) - CMatrix::identity(n, n) * omega;
    n - rank(&m, 1e-10 * spectral_norm(&to_complex(a)).max(1.0))
}

/// Spectral-flow crossing in `s` with the signature of `Γ[u] = ∫⟨Gu, u⟩`.
#[derive(Clone, Debug, Serialize)]
pub struct SpectralCrossing {
    pub s: f64,
    pub kernel_dim: usize,
    pub signature: Signature,
}

#[derive(Clone, Debug, Serialize)]
pub struct SpectralFlow {
    pub value: i64,
    pub s0: f64,
    /// Shift `ε` of `R̂ + εI` when the unshifted family had degenerate crossings.
    pub shift: Option<f64>,
    pub crossings: Vec<SpectralCrossing>,
}

/// Sub-interval propagators `F_k, …, F_1` of `Ψ_{c,s}(T)` and their product.
struct Factored {
    factors: Vec<CMatrix>,
    product: RMatrix,
}

/// Per-system analysis state: integration settings and a propagator cache
/// keyed by `(c, s, shift)` so that several `ω` share the same integrations.
#[derive(Clone)]
pub struct IndexContext {
    sys: MorseSturmSystem,
    cfg: IndexConfig,
    cache: Arc<Mutex<HashMap<(u64, u64, u64), Arc<Factored>>>>,
}

impl IndexContext {
    pub fn new(sys: &MorseSturmSystem, cfg: IndexConfig) -> Result<Self> {
        sys.ensure_valid()?;
        let mut cfg = cfg;
        cfg.integrator = cfg.integrator.for_system(sys);
        Ok(Self { sys: sys.clone(), cfg, cache: Arc::new(Mutex::new(HashMap::new())) })
    }

    pub fn system(&self) -> &MorseSturmSystem {
        &self.sys
    }

    pub fn config(&self) -> &IndexConfig {
        &self.cfg
    }

    /// `Ψ_{c,s}(T)` for the coefficient `c R̂ + s G + shift·I`.
    pub fn endpoint(&self, c: f64, s: f64, shift: f64) -> Result<RMatrix> {
        Ok(self.factored(c, s, shift)?.product.clone())
    }

    fn factored(&self, c: f64, s: f64, shift: f64) -> Result<Arc<Factored>> {
        let key = (c.to_bits(), s.to_bits(), shift.to_bits());
        if let Some(m) = self.cache.lock().expect("cache lock").get(&key) {
            return Ok(m.clone());
        }
        let k = segment_count(&self.sys, c, s, shift, &self.cfg.integrator);
        let parts = integrate_segments_shifted(&self.sys, c, s, shift, k, &self.cfg.integrator)?;
        let dim = 2 * self.sys.n;
        let product = parts.iter().fold(RMatrix::identity(dim, dim), |acc, f| f * acc);
        let f = Arc::new(Factored { factors: parts.iter().map(to_complex).collect(), product });
        self.cache.lock().expect("cache lock").insert(key, f.clone());
        Ok(f)
    }

    /// Orthonormal frame of `Gr(ωA_dΨ_{c,s}(T))`, accurate beyond the
    /// conditioning limit of the product matrix.
    pub fn monodromy_frame(&self, omega: Complex64, c: f64, s: f64, shift: f64) -> Result<CMatrix> {
        Ok(graph_frame_product(&self.twisted(omega), &self.factored(c, s, shift)?.factors))
    }

    fn twisted(&self, omega: Complex64) -> CMatrix {
        to_complex(&self.sys.twist_lift()) * omega
    }

    /// `ωA_dΨ_{c,s}(T)`.
    pub fn monodromy(&self, omega: Complex64, c: f64, s: f64, shift: f64) -> Result<CMatrix> {
        Ok(self.twisted(omega) * to_complex(&self.endpoint(c, s, shift)?))
    }

    /// Symplectic path `t ↦ ωA_dΨ_{c,s}(t)` on `[0, T]`.
    pub fn poincare_path(&self, omega: Complex64, c: f64, s: f64) -> Result<SymplecticPath> {
        let sol = integrate_fundamental_shifted(&self.sys, c, s, 0.0, &self.cfg.integrator)?;
        Ok(SymplecticPath::from_solution(Arc::new(sol), self.twisted(omega)))
    }

    pub fn nullity(&self, omega: Complex64) -> usize {
        nullity(&self.sys.a, omega)
    }

    /// `ι₁(ωA_dΨ_{1,0}(t); t ∈ [0, T])`.
    pub fn geometric_index(&self, omega: Complex64) -> Result<i64> {
        iota_one(&self.poincare_path(omega, 1.0, 0.0)?, &self.cfg.clm)
    }

    /// Certifies that the graph frames `x ↦ f(x)` stay transversal to `Δ` on
    /// `[lo, hi]`: the chord distance from `1` of every eigenvalue of the
    /// unitary representative exceeds its change between samples.
    fn crossing_free<F>(&self, f: F, lo: f64, hi: f64) -> Result<bool>
    where
        F: Fn(f64) -> Result<CMatrix>,
    {
        let size = 2 * self.sys.n;
        let chart = Chart::new(&graph_form(self.sys.n))?;
        let diag = graph_frame_unchecked(&CMatrix::identity(size, size));
        let u0adj = chart.unitary(diag.z())?.adjoint();
        let w_at = |x: f64| -> Result<CMatrix> { Ok(&u0adj * chart.unitary(&f(x)?)?) };
        let chord = |w: &CMatrix| -> f64 {
            crate::linalg::eigenvalues(w).iter().map(|z| (z - ONE).norm()).fold(f64::INFINITY, f64::min)
        };
        let n = self.cfg.scan_points.max(2);
        let mut pts: Vec<(f64, CMatrix)> = Vec::with_capacity(n + 1);
        for i in 0..=n {
            let x = lo + (hi - lo) * i as f64 / n as f64;
            pts.push((x, w_at(x)?));
        }
        let mut stack: Vec<((f64, CMatrix), (f64, CMatrix), usize)> = Vec::new();
        for i in 0..n {
            stack.push((pts[i].clone(), pts[i + 1].clone(), 0));
        }
        while let Some(((x0, w0), (x1, w1), depth)) = stack.pop() {
            let (c0, c1) = (chord(&w0), chord(&w1));
            if c0 < 1e-6 || c1 < 1e-6 {
                return Ok(false);
            }
            let step = crate::linalg::frobenius(&(&w1 - &w0));
            if step < c0.min(c1) {
                continue;
            }
            if depth >= 24 {
                return Ok(false);
            }
            let xm = 0.5 * (x0 + x1);
            let wm = w_at(xm)?;
            stack.push(((x0, w0), (xm, wm.clone()), depth + 1));
            stack.push(((xm, wm), (x1, w1), depth + 1));
        }
        Ok(true)
    }

    /// `s₀` with `ωA_dΨ_{c,s}(T) − I` invertible along `c ∈ [0, 1]` at
    /// `s = s₀` and along `s ∈ [s₀/2, s₀]` at `c = 1`.
    pub fn find_s0(&self, omega: Complex64) -> Result<f64> {
        let c0 = self.cfg.integrator.rhat_sup.unwrap_or_else(|| self.sys.sup_rhat_norm());
        let mut s = 1.0f64.max(2.0 * c0);
        while s <= self.cfg.s_budget {
            let s2 = 2.0 * s;
            let m = self.monodromy(omega, 1.0, s2, 0.0)?;
            let dim = m.nrows();
            let det = (&m - CMatrix::identity(dim, dim)).determinant().norm();
            if det > self.cfg.det_tol
                && self.crossing_free(|x| self.monodromy_frame(omega, 1.0, x, 0.0), s, s2)?
                && self.crossing_free(|c| self.monodromy_frame(omega, c, s2, 0.0), 0.0, 1.0)?
            {
                return Ok(s2);
            }
            s = s2;
        }
        Err(Error::BudgetExhausted(format!("no crossing-free s0 below {}", self.cfg.s_budget)))
    }

    /// Spectral flow of `s ↦ A^ω_{1,s}` on `[0, s₀]` from the signatures of
    /// `Γ[u] = ∫⟨Gu, u⟩` on the kernels.
    pub fn spectral_flow(&self, omega: Complex64) -> Result<SpectralFlow> {
        let s0 = self.find_s0(omega)?;
        match self.spectral_flow_shifted(omega, s0, 0.0)? {
            Some(sf) => Ok(sf),
            None => {
                let eps = self.cfg.shift_eps;
                let a = self.spectral_flow_shifted(omega, s0, eps)?;
                let b = self.spectral_flow_shifted(omega, s0, eps / 2.0)?;
                match (a, b) {
                    (Some(a), Some(b)) if a.value == b.value => Ok(a),
                    (a, b) => Err(Error::DegeneratePath(format!(
                        "shifted spectral flows disagree: {:?} vs {:?}",
                        a.map(|x| x.value),
                        b.map(|x| x.value)
                    ))),
                }
            }
        }
    }

    /// `None` when some crossing is degenerate.
    fn spectral_flow_shifted(&self, omega: Complex64, s0: f64, shift: f64) -> Result<Option<SpectralFlow>> {
        let failure: Arc<Mutex<Option<Error>>> = Arc::new(Mutex::new(None));
        let size = 2 * self.sys.n;
        let ctx = self.clone();
        let slot = failure.clone();
        let path = LagrangianPath::from_fn(graph_form(self.sys.n), 0.0, s0, 32, move |s| {
            match ctx.monodromy_frame(omega, 1.0, s, shift) {
                Ok(z) => z,
                Err(e) => {
                    slot.lock().expect("error slot").get_or_insert(e);
                    graph_frame_unchecked(&CMatrix::identity(size, size)).z().clone()
                }
            }
        })?;
        let diag = LagrangianFrame::new(
            graph_frame_unchecked(&CMatrix::identity(size, size)).z().clone(),
            graph_form(self.sys.n),
            1e-12,
        )?;
        let located = crossing_instants(&diag, &path, &self.cfg.clm);
        if let Some(e) = failure.lock().expect("error slot").take() {
            return Err(e);
        }
        let (instants, isolated) = located?;
        if !isolated {
            return Ok(None);
        }
        let mut value = 0i64;
        let mut crossings = Vec::new();
        for inst in instants {
            if inst.t >= s0 {
                return Err(Error::DegeneratePath(format!("crossing at s0 = {s0}")));
            }
            let sig = self.gamma_signature(omega, inst.t, shift, inst.kernel_dim)?;
            if !sig.is_regular() {
                return Ok(None);
            }
            value += if inst.t <= 1e-12 * s0 { -(sig.minus as i64) } else { sig.value() };
            crossings.push(SpectralCrossing { s: inst.t, kernel_dim: inst.kernel_dim, signature: sig });
        }
        Ok(Some(SpectralFlow { value, s0, shift: (shift != 0.0).then_some(shift), crossings }))
    }

    /// Signature of `Γ` on the Jacobi fields `u = π_u Ψ(t) z`, `z ∈ ker(ωA_dΨ(T) − I)`.
    fn gamma_signature(&self, omega: Complex64, s: f64, shift: f64, dim: usize) -> Result<Signature> {
        let sol = integrate_fundamental_shifted(&self.sys, 1.0, s, shift, &self.cfg.integrator)?;
        // Kernel of `ωA_dΨ(T) − I` read off the graph frame `[X; Y]` as `X ker(X − Y)`.
        let frame = self.monodromy_frame(omega, 1.0, s, shift)?;
        let size = 2 * self.sys.n;
        let x = frame.rows(0, size).into_owned();
        let y = frame.rows(size, size).into_owned();
        let kernel = (&x * null_basis(&(&x - &y), dim)).qr().q();
        let n = self.sys.n;
        let g = self.sys.g.diag();
        let h = sol.step_size();
        let steps = sol.steps();
        let mut gamma = CMatrix::zeros(dim, dim);
        for (k, psi) in sol.samples().iter().enumerate() {
            let w = if k == 0 || k == steps {
                1.0
            } else if k % 2 == 1 {
                4.0
            } else {
                2.0
            } * h
                / 3.0;
            let u = to_complex(&psi.rows(n, n).into_owned()) * &kernel;
            for i in 0..dim {
                for j in 0..dim {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for r in 0..n {
                        acc += u[(r, i)].conj() * u[(r, j)] * g[r];
                    }
                    gamma[(i, j)] += acc * w;
                }
            }
        }
        let scale = crate::linalg::frobenius(&gamma).max(f64::MIN_POSITIVE);
        hermitian_signature(&gamma, 1e-6 * scale)
    }

    /// `ι₁(ωA_dΨ_{0,s₀}(t); t ∈ [0, T])`.
    pub fn prop55_lhs(&self, omega: Complex64, s0: f64) -> Result<i64> {
        iota_one(&self.poincare_path(omega, 0.0, s0)?, &self.cfg.clm)
    }
}

fn omega_pair(w: Complex64) -> [f64; 2] {
    [w.re, w.im]
}

/// Both routes to the ω-spectral index.
#[derive(Clone, Debug, Serialize)]
pub struct IndexReport {
    #[serde(serialize_with = "ser_omega")]
    pub omega: Complex64,
    pub i_geo: i64,
    pub nullity: usize,
    pub i_spec_thm_a: i64,
    pub i_spec_spath: Option<i64>,
    pub s0: f64,
    pub routes_agree: bool,
    pub spectral_crossings: Vec<SpectralCrossing>,
    pub shift: Option<f64>,
}

fn ser_omega<S: serde::Serializer>(w: &Complex64, s: S) -> std::result::Result<S::Ok, S::Error> {
    serde::Serialize::serialize(&omega_pair(*w), s)
}

pub fn theorem_a_check(ctx: &IndexContext, omega: Complex64) -> Result<IndexReport> {
    let i_geo = ctx.geometric_index(omega)?;
    let nullity = ctx.nullity(omega);
    let sf = ctx.spectral_flow(omega)?;
    let i_spec_thm_a = i_geo - nullity as i64;
    Ok(IndexReport {
        omega,
        i_geo,
        nullity,
        i_spec_thm_a,
        i_spec_spath: Some(sf.value),
        s0: sf.s0,
        routes_agree: sf.value == i_spec_thm_a,
        spectral_crossings: sf.crossings,
        shift: sf.shift,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct Prop55Report {
    pub lhs: i64,
    pub nullity: usize,
    pub s0: f64,
    pub holds: bool,
}

pub fn prop55_check(ctx: &IndexContext, omega: Complex64) -> Result<Prop55Report> {
    let s0 = ctx.find_s0(omega)?;
    let lhs = ctx.prop55_lhs(omega, s0)?;
    let nullity = ctx.nullity(omega);
    Ok(Prop55Report { lhs, nullity, s0, holds: lhs == nullity as i64 })
}

/// `M = [[0, B], [B*, 0]]` has nullity `2 dim ker B` and `n₊ = n₋`.
pub fn block_fact_check(b: &CMatrix) -> Result<bool> {
    let k = b.nrows();
    if b.ncols() != k {
        return Err(Error::Dimension("B must be square".into()));
    }
    let tol = 1e-10 * spectral_norm(b).max(1.0);
    let mut m = CMatrix::zeros(2 * k, 2 * k);
    m.view_mut((0, k), (k, k)).copy_from(b);
    m.view_mut((k, 0), (k, k)).copy_from(&b.adjoint());
    let sig = hermitian_signature(&m, tol)?;
    let (sv, _) = svd_sorted(b);
    let ker = sv.iter().filter(|&&x| x <= tol).count();
    Ok(sig.zero == 2 * ker && sig.plus == sig.minus)
}

/// `m`-th roots of unity `e^{2πik/m}`, each computed directly.
pub fn roots_of_unity(m: usize) -> Vec<Complex64> {
    (0..m).map(|k| unit(2.0 * std::f64::consts::PI * k as f64 / m as f64)).collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct BottOmega {
    #[serde(serialize_with = "ser_omega")]
    pub omega: Complex64,
    pub i_spec: i64,
    pub nullity: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct BottReport {
    pub m: usize,
    pub lhs: i64,
    pub rhs: i64,
    pub equal: bool,
    pub nullity_lhs: usize,
    pub nullity_rhs: usize,
    pub nullity_equal: bool,
    pub per_omega: Vec<BottOmega>,
}

/// Iteration formula `ι_spec(γ^(m)) = Σ_{ω^m = 1} ι_spec^ω(γ)` with the
/// nullity identity `dim ker(A^m − I) = Σ dim ker(A − ωI)`.
pub fn bott_check(ctx: &IndexContext, m: usize) -> Result<BottReport> {
    if m == 0 || m > 12 {
        return Err(Error::Domain(format!("iteration count {m} outside 1..=12")));
    }
    let iterated = ctx.system().iterate(m)?;
    let big = IndexContext::new(&iterated, *ctx.config())?;
    let lhs = big.spectral_flow(ONE)?.value;
    let nullity_lhs = big.nullity(ONE);
    let mut per_omega = Vec::with_capacity(m);
    for omega in roots_of_unity(m) {
        per_omega.push(BottOmega { omega, i_spec: ctx.spectral_flow(omega)?.value, nullity: ctx.nullity(omega) });
    }
    let rhs = per_omega.iter().map(|x| x.i_spec).sum();
    let nullity_rhs = per_omega.iter().map(|x| x.nullity).sum();
    Ok(BottReport {
        m,
        lhs,
        rhs,
        equal: lhs == rhs,
        nullity_lhs,
        nullity_rhs,
        nullity_equal: nullity_lhs == nullity_rhs,
        per_omega,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::rotation;
    use crate::model::scenario;

    fn ctx(name: &str) -> IndexContext {
        IndexContext::new(&scenario(name).unwrap(), IndexConfig::default()).unwrap()
    }

    #[test]
    fn nullity_examples() {
        let i3 = RMatrix::identity(3, 3);
        assert_eq!(nullity(&i3, ONE), 3);
        assert_eq!(nullity(&i3, -ONE), 0);
        assert_eq!(nullity(&rotation(2.0 * std::f64::consts::PI / 3.0), unit(2.0 * std::f64::consts::PI / 3.0)), 1);
    }

    #[test]
    fn flat_torus_routes() {
        let c = ctx("flat-torus(2)");
        let r = theorem_a_check(&c, ONE).unwrap();
        assert_eq!((r.i_geo, r.nullity, r.i_spec_spath), (2, 2, Some(0)));
        assert!(r.routes_agree);
    }

    #[test]
    fn great_circle_values() {
        let c = ctx("great-circle");
        let r = theorem_a_check(&c, ONE).unwrap();
        assert_eq!((r.i_geo, r.nullity, r.i_spec_spath), (2, 1, Some(1)));
        let r = theorem_a_check(&c, -ONE).unwrap();
        assert_eq!(r.i_spec_spath, Some(2));
        assert!(r.routes_agree);
        assert!(c.find_s0(ONE).unwrap() >= 1.0);
    }

    #[test]
    fn lorentz_flat_routes() {
        let c = ctx("lorentz-flat(1,1)");
        let r = theorem_a_check(&c, ONE).unwrap();
        assert_eq!((r.i_geo, r.i_spec_spath), (1, Some(-1)));
        let r = theorem_a_check(&c, -ONE).unwrap();
        assert!(r.routes_agree, "{r:?}");
    }

    #[test]
    fn block_fact_examples() {
        assert!(block_fact_check(&CMatrix::zeros(1, 1)).unwrap());
        assert!(block_fact_check(&CMatrix::identity(1, 1)).unwrap());
    }

    #[test]
    fn bott_great_circle() {
        let r = bott_check(&ctx("great-circle"), 2).unwrap();
        assert_eq!((r.lhs, r.rhs), (3, 3));
        assert!(r.nullity_equal);
    }

    #[test]
    fn prop55_identity_twist() {
        let c = ctx("flat-torus(1)");
        assert!(prop55_check(&c, ONE).unwrap().holds);
        assert!(prop55_check(&c, -ONE).unwrap().holds);
    }
}
