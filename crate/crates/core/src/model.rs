//! Twisted Morse–Sturm systems `-G ü + R̂(t) u = 0`, `u(0) = A u(T)`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::RMatrix;

/// `G = diag(I_p, -I_q)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignatureMatrix {
    pub p: usize,
    pub q: usize,
}

impl SignatureMatrix {
    pub fn new(p: usize, q: usize) -> Result<Self> {
        if p + q == 0 {
            return Err(Error::InvalidSystem("signature must have p + q > 0".into()));
        }
        Ok(Self { p, q })
    }

    pub fn n(&self) -> usize {
        self.p + self.q
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.n()).map(|i| if i < self.p { 1.0 } else { -1.0 }).collect()
    }

    pub fn matrix(&self) -> RMatrix {
        RMatrix::from_diagonal(&nalgebra::DVector::from_vec(self.diag()))
    }

    pub fn is_positive(&self) -> bool {
        self.q == 0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Causal {
    Spacelike,
    Timelike,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FourierTerm {
    pub k: u32,
    pub cos: RMatrix,
    pub sin: RMatrix,
}

/// Symmetric curvature path `R̂(t)`.
#[derive(Clone, Debug, PartialEq)]
pub enum CurvaturePath {
    Constant(RMatrix),
    /// `Σ cos_k cos(2πkt/T) + sin_k sin(2πkt/T)` with `T` the owning system's period.
    Fourier(Vec<FourierTerm>),
    /// Extension to `[0, m T₀]` by `R̂(t + kT₀) = (Aᵀ)^k R̂(t) A^k`.
    Iterated {
        base: Box<CurvaturePath>,
        base_period: f64,
        twist: RMatrix,
        copies: usize,
    },
}

impl CurvaturePath {
    pub fn eval(&self, t: f64, period: f64) -> RMatrix {
        match self {
            CurvaturePath::Constant(s) => s.clone(),
            CurvaturePath::Fourier(terms) => {
                let n = terms.first().map(|t| t.cos.nrows()).unwrap_or(0);
                let mut out = RMatrix::zeros(n, n);
                for term in terms {
                    let w = 2.0 * PI * term.k as f64 * t / period;
                    let (s, c) = w.sin_cos();
                    out += &term.cos * c + &term.sin * s;
                }
                out
            }
            CurvaturePath::Iterated { base, base_period, twist, copies } => {
                let mut k = (t / base_period).floor().max(0.0) as usize;
                if k >= *copies {
                    k = copies - 1;
                }
                let tau = t - k as f64 * base_period;
                let mut r = base.eval(tau, *base_period);
                for _ in 0..k {
                    r = twist.transpose() * r * twist;
                }
                r
            }
        }
    }

    fn dim(&self) -> Option<usize> {
        match self {
            CurvaturePath::Constant(s) => Some(s.nrows()),
            CurvaturePath::Fourier(terms) => terms.first().map(|t| t.cos.nrows()),
            CurvaturePath::Iterated { base, .. } => base.dim(),
        }
    }
}

/// Reduced data of a closed non-lightlike geodesic.
#[derive(Clone, Debug, PartialEq)]
pub struct MorseSturmSystem {
    pub n: usize,
    pub g: SignatureMatrix,
    pub period: f64,
    pub a: RMatrix,
    pub rhat: CurvaturePath,
    pub causal: Causal,
    pub label: String,
}

/// A failed structural constraint and its residual.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Violation {
    pub constraint: String,
    pub residual: f64,
}

const CONSTRAINT_TOL: f64 = 1e-10;

fn frob(m: &RMatrix) -> f64 {
    m.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn sym_norm(m: &RMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone()
        .symmetric_eigenvalues()
        .iter()
        .fold(0.0f64, |acc, x| acc.max(x.abs()))
}

impl MorseSturmSystem {
    pub fn rhat_at(&self, t: f64) -> RMatrix {
        self.rhat.eval(t, self.period)
    }

    pub fn g_matrix(&self) -> RMatrix {
        self.g.matrix()
    }

    pub fn orientation(&self) -> i32 {
        if self.a.determinant() >= 0.0 {
            1
        } else {
            -1
        }
    }

    /// `A_d = blockdiag(A⁻ᵀ, A)`.
    pub fn twist_lift(&self) -> RMatrix {
        let n = self.n;
        let a_inv_t = self
            .a
            .clone()
            .try_inverse()
            .map(|m| m.transpose())
            .unwrap_or_else(|| RMatrix::from_element(n, n, f64::NAN));
        let mut out = RMatrix::zeros(2 * n, 2 * n);
        out.view_mut((0, 0), (n, n)).copy_from(&a_inv_t);
        out.view_mut((n, n), (n, n)).copy_from(&self.a);
        out
    }

    /// `sup_t ‖R̂(t)‖₂`, exact for constant curvature and sampled otherwise.
    pub fn sup_rhat_norm(&self) -> f64 {
        match &self.rhat {
            CurvaturePath::Constant(s) => sym_norm(s),
            _ => (0..=256)
                .map(|i| sym_norm(&self.rhat_at(self.period * i as f64 / 256.0)))
                .fold(0.0, f64::max),
        }
    }

    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let n = self.n;
        let push = |out: &mut Vec<Violation>, c: &str, r: f64| {
            out.push(Violation { constraint: c.to_string(), residual: r })
        };
        if self.g.n() != n {
            push(&mut out, "signature size differs from n", (self.g.n() as f64 - n as f64).abs());
            return out;
        }
        if self.a.shape() != (n, n) {
            push(&mut out, "A has wrong shape", f64::NAN);
            return out;
        }
        match self.rhat.dim() {
            Some(d) if d == n => {}
            _ => {
                push(&mut out, "curvature has wrong shape", f64::NAN);
                return out;
            }
        }
        if !(self.period > 0.0 && self.period.is_finite()) {
            push(&mut out, "period must be positive", self.period);
        }
        let g = self.g_matrix();
        let r = frob(&(self.a.transpose() * &g * &self.a - &g));
        if !(r <= CONSTRAINT_TOL) {
            push(&mut out, "A not G-orthogonal", r);
        }
        let d = self.a.determinant().abs();
        if !((d - 1.0).abs() <= 1e-8) {
            push(&mut out, "|det A| != 1", (d - 1.0).abs());
        }
        let r0 = self.rhat_at(0.0);
        let sym = frob(&(&r0 - r0.transpose()));
        if !(sym <= CONSTRAINT_TOL) {
            push(&mut out, "curvature not symmetric", sym);
        }
        let rt = self.rhat_at(self.period);
        let compat = frob(&(rt - self.a.transpose() * &r0 * &self.a));
        if !(compat <= CONSTRAINT_TOL * frob(&r0).max(1.0)) {
            push(&mut out, "iteration compatibility R(T) = A^T R(0) A", compat);
        }
        out
    }

    pub fn ensure_valid(&self) -> Result<()> {
        let v = self.validate();
        if v.is_empty() {
            Ok(())
        } else {
            let msg: Vec<String> =
                v.iter().map(|x| format!("{} (residual {:.3e})", x.constraint, x.residual)).collect();
            Err(Error::InvalidSystem(msg.join("; ")))
        }
    }

    /// The `m`-th iterate on `[0, mT]` with twist `A^m`.
    pub fn iterate(&self, m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::Domain("iterate count must be positive".into()));
        }
        self.ensure_valid()?;
        if m == 1 {
            return Ok(self.clone());
        }
        let mut am = RMatrix::identity(self.n, self.n);
        for _ in 0..m {
            am = &am * &self.a;
        }
        let rhat = match &self.rhat {
            CurvaturePath::Constant(s) if frob(&(self.a.transpose() * s * &self.a - s)) <= 1e-14 * frob(s).max(1.0) => {
                CurvaturePath::Constant(s.clone())
            }
            other => CurvaturePath::Iterated {
                base: Box::new(other.clone()),
                base_period: self.period,
                twist: self.a.clone(),
                copies: m,
            },
        };
        Ok(Self {
            n: self.n,
            g: self.g,
            period: self.period * m as f64,
            a: am,
            rhat,
            causal: self.causal,
            label: format!("{}^{}", self.label, m),
        })
    }

    /// `D_{c,s}(t) = [[G, 0], [0, -c R̂(t) - s G]]`.
    pub fn hamiltonian_coefficient(&self, c: f64, s: f64, t: f64) -> Result<RMatrix> {
        if !(t >= -1e-12 * self.period && t <= self.period * (1.0 + 1e-12)) {
            return Err(Error::Domain(format!("t = {t} outside [0, {}]", self.period)));
        }
        let n = self.n;
        let g = self.g_matrix();
        let mut d = RMatrix::zeros(2 * n, 2 * n);
        d.view_mut((0, 0), (n, n)).copy_from(&g);
        let r = self.rhat_at(t);
        let lower = -(&r * c) - &g * s;
        let lower = (&lower + lower.transpose()) * 0.5;
        d.view_mut((n, n), (n, n)).copy_from(&lower);
        Ok(d)
    }

    pub fn to_json(&self) -> Result<ScenarioJson> {
        let rhat = match &self.rhat {
            CurvaturePath::Constant(s) => RhatJson::Constant { matrix: row_major(s) },
            CurvaturePath::Fourier(terms) => RhatJson::Fourier {
                terms: terms
                    .iter()
                    .map(|t| TermJson { k: t.k, cos: row_major(&t.cos), sin: row_major(&t.sin) })
                    .collect(),
            },
            CurvaturePath::Iterated { .. } => {
                return Err(Error::Config("iterated curvature has no JSON form".into()))
            }
        };
        Ok(ScenarioJson {
            n: self.n,
            g: self.g,
            period: self.period,
            a: row_major(&self.a),
            rhat,
            causal: self.causal,
            label: self.label.clone(),
        })
    }

    pub fn from_json(s: &ScenarioJson) -> Result<Self> {
        let n = s.n;
        let mat = |v: &[f64], what: &str| -> Result<RMatrix> {
            if v.len() != n * n {
                return Err(Error::Config(format!("{what}: expected {} entries, got {}", n * n, v.len())));
            }
            Ok(RMatrix::from_row_slice(n, n, v))
        };
        let rhat = match &s.rhat {
            RhatJson::Constant { matrix } => CurvaturePath::Constant(mat(matrix, "Rhat.matrix")?),
            RhatJson::Fourier { terms } => {
                if terms.is_empty() {
                    return Err(Error::Config("Rhat.terms is empty".into()));
                }
                CurvaturePath::Fourier(
                    terms
                        .iter()
                        .map(|t| {
                            Ok(FourierTerm { k: t.k, cos: mat(&t.cos, "Rhat.cos")?, sin: mat(&t.sin, "Rhat.sin")? })
                        })
                        .collect::<Result<Vec<_>>>()?,
                )
            }
        };
        let sys = Self {
            n,
            g: SignatureMatrix::new(s.g.p, s.g.q)?,
            period: s.period,
            a: mat(&s.a, "A")?,
            rhat,
            causal: s.causal,
            label: s.label.clone(),
        };
        sys.ensure_valid()?;
        Ok(sys)
    }
}

fn row_major(m: &RMatrix) -> Vec<f64> {
    let mut v = Vec::with_capacity(m.len());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            v.push(m[(i, j)]);
        }
    }
    v
}

/// Scenario file layout.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScenarioJson {
    pub n: usize,
    #[serde(rename = "G")]
    pub g: SignatureMatrix,
    #[serde(rename = "T")]
    pub period: f64,
    #[serde(rename = "A")]
    pub a: Vec<f64>,
    #[serde(rename = "Rhat")]
    pub rhat: RhatJson,
    pub causal: Causal,
    pub label: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum RhatJson {
    Constant { matrix: Vec<f64> },
    Fourier { terms: Vec<TermJson> },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TermJson {
    pub k: u32,
    pub cos: Vec<f64>,
    pub sin: Vec<f64>,
}

/// Fundamental solution of `ż = J B_{c,s} z` with `B_{c,s} = [[G, 0], [0, -cI - sG]]`.
pub fn closed_form_phi(g: &SignatureMatrix, c: f64, s: f64, t: f64) -> RMatrix {
    let n = g.n();
    let mut phi = RMatrix::zeros(2 * n, 2 * n);
    for (i, sign) in g.diag().into_iter().enumerate() {
        let a = s + sign * c;
        let (cc, ss, as_) = cs_pair(a, t);
        phi[(i, i)] = cc;
        phi[(n + i, n + i)] = cc;
        phi[(i, n + i)] = sign * as_;
        phi[(n + i, i)] = sign * ss;
    }
    phi
}

/// `(C, S, aS)` with `C = cosh(√a t)` and `S = sinh(√a t)/√a`, continued analytically in `a`.
fn cs_pair(a: f64, t: f64) -> (f64, f64, f64) {
    let x = a * t * t;
    if x.abs() < 1e-2 {
        let (mut c, mut s) = (0.0, 0.0);
        let mut term_c = 1.0;
        let mut term_s = 1.0;
        for k in 0..12 {
            c += term_c;
            s += term_s;
            let kf = k as f64;
            term_c *= x / ((2.0 * kf + 1.0) * (2.0 * kf + 2.0));
            term_s *= x / ((2.0 * kf + 2.0) * (2.0 * kf + 3.0));
        }
        (c, t * s, a * t * s)
    } else if a > 0.0 {
        let r = a.sqrt();
        ((r * t).cosh(), (r * t).sinh() / r, r * (r * t).sinh())
    } else {
        let r = (-a).sqrt();
        ((r * t).cos(), (r * t).sin() / r, -r * (r * t).sin())
    }
}

/// Angle such as `0.7`, `pi/2`, `2pi/3` or `-pi`.
pub fn parse_angle(s: &str) -> Result<f64> {
    let s = s.trim().replace(' ', "");
    if let Ok(v) = s.parse::<f64>() {
        return Ok(v);
    }
    let bad = || Error::UnknownScenario(format!("cannot parse angle '{s}'"));
    let (num, den) = match s.split_once('/') {
        Some((a, b)) => (a.to_string(), b.parse::<f64>().map_err(|_| bad())?),
        None => (s.clone(), 1.0),
    };
    let coef = match num.strip_suffix("pi") {
        Some("") | Some("+") => 1.0,
        Some("-") => -1.0,
        Some(c) => c.trim_end_matches('*').parse::<f64>().map_err(|_| bad())?,
        None => return Err(bad()),
    };
    Ok(coef * PI / den)
}

fn parse_args(name: &str) -> Option<(&str, Vec<&str>)> {
    let open = name.find('(')?;
    let inner = name[open + 1..].strip_suffix(')')?;
    Some((&name[..open], inner.split(',').map(str::trim).collect()))
}

fn build(n: usize, g: SignatureMatrix, period: f64, a: RMatrix, r: RMatrix, causal: Causal, label: &str) -> MorseSturmSystem {
    MorseSturmSystem {
        n,
        g,
        period,
        a,
        rhat: CurvaturePath::Constant(r),
        causal,
        label: label.to_string(),
    }
}

/// Names accepted by [`scenario`].
pub const CATALOG: &[&str] = &[
    "flat-torus(1)",
    "great-circle",
    "mobius-flat",
    "lorentz-flat(1,1)",
    "twisted-rot(pi/2)",
    "hyperbolic",
];

/// Built-in scenarios.
pub fn scenario(name: &str) -> Result<MorseSturmSystem> {
    let name = name.trim();
    let unknown = || Error::UnknownScenario(name.to_string());
    let sys = match name {
        "great-circle" => build(
            1,
            SignatureMatrix::new(1, 0)?,
            2.0 * PI,
            RMatrix::identity(1, 1),
            -RMatrix::identity(1, 1),
            Causal::Spacelike,
            name,
        ),
        "mobius-flat" => build(
            1,
            SignatureMatrix::new(1, 0)?,
            1.0,
            -RMatrix::identity(1, 1),
            RMatrix::zeros(1, 1),
            Causal::Spacelike,
            name,
        ),
        "hyperbolic" => build(
            1,
            SignatureMatrix::new(1, 0)?,
            1.0,
            RMatrix::identity(1, 1),
            RMatrix::identity(1, 1),
            Causal::Spacelike,
            name,
        ),
        _ => {
            let (head, args) = parse_args(name).ok_or_else(unknown)?;
            match (head, args.as_slice()) {
                ("flat-torus", [n]) => {
                    let n: usize = n.parse().map_err(|_| unknown())?;
                    if n == 0 {
                        return Err(unknown());
                    }
                    build(
                        n,
                        SignatureMatrix::new(n, 0)?,
                        1.0,
                        RMatrix::identity(n, n),
                        RMatrix::zeros(n, n),
                        Causal::Spacelike,
                        name,
                    )
                }
                ("lorentz-flat", [p, q]) => {
                    let p: usize = p.parse().map_err(|_| unknown())?;
                    let q: usize = q.parse().map_err(|_| unknown())?;
                    let g = SignatureMatrix::new(p, q)?;
                    let n = g.n();
                    build(n, g, 1.0, RMatrix::identity(n, n), RMatrix::zeros(n, n), Causal::Spacelike, name)
                }
                ("twisted-rot", [theta]) => {
                    let theta = parse_angle(theta)?;
                    build(
                        2,
                        SignatureMatrix::new(2, 0)?,
                        1.0,
                        crate::linalg::rotation(theta),
                        RMatrix::zeros(2, 2),
                        Causal::Spacelike,
                        name,
                    )
                }
                _ => return Err(unknown()),
            }
        }
    };
    Ok(sys)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_entries_validate() {
        for name in CATALOG.iter().chain(["flat-torus(2)", "lorentz-flat(2,1)", "twisted-rot(2pi/3)"].iter()) {
            let sys = scenario(name).unwrap();
            assert!(sys.validate().is_empty(), "{name}: {:?}", sys.validate());
        }
        assert_eq!(scenario("mobius-flat").unwrap().orientation(), -1);
        assert!(scenario("klein-bottle").is_err());
    }

    #[test]
    fn non_orthogonal_twist_reported() {
        let mut sys = scenario("flat-torus(2)").unwrap();
        sys.a = RMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 0.5]);
        let v = sys.validate();
        assert!(v.iter().any(|x| x.constraint == "A not G-orthogonal"));
    }

    #[test]
    fn incompatible_fourier_curvature_reported() {
        let mut sys2 = scenario("twisted-rot(pi/2)").unwrap();
        sys2.rhat = CurvaturePath::Fourier(vec![FourierTerm {
            k: 0,
            cos: RMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]),
            sin: RMatrix::zeros(2, 2),
        }]);
        let v = sys2.validate();
        assert!(v.iter().any(|x| x.constraint.starts_with("iteration compatibility")));
    }

    #[test]
    fn iterates() {
        let gc = scenario("great-circle").unwrap();
        assert_eq!(gc.iterate(1).unwrap(), gc);
        let g2 = gc.iterate(2).unwrap();
        assert!((g2.period - 4.0 * PI).abs() < 1e-12);
        assert_eq!(g2.a, RMatrix::identity(1, 1));
        let ft = scenario("flat-torus(1)").unwrap().iterate(3).unwrap();
        assert_eq!(ft.a, RMatrix::identity(1, 1));
        assert!((ft.period - 3.0).abs() < 1e-15);
        let mb = scenario("mobius-flat").unwrap().iterate(2).unwrap();
        assert_eq!(mb.a, RMatrix::identity(1, 1));
        assert!(mb.validate().is_empty());
    }

    #[test]
    fn hamiltonian_blocks() {
        let sys = scenario("lorentz-flat(1,1)").unwrap();
        let d = sys.hamiltonian_coefficient(0.0, 0.0, 0.5).unwrap();
        let mut expect = RMatrix::zeros(4, 4);
        expect[(0, 0)] = 1.0;
        expect[(1, 1)] = -1.0;
        assert_eq!(d, expect);
        assert!(sys.hamiltonian_coefficient(1.0, 0.0, 2.0).is_err());
    }

    #[test]
    fn closed_form_limits() {
        let g = SignatureMatrix::new(1, 1).unwrap();
        let phi = closed_form_phi(&g, 0.7, 1.3, 0.0);
        assert_eq!(phi, RMatrix::identity(4, 4));
        let t = 0.8;
        let phi = closed_form_phi(&g, 0.0, 0.0, t);
        let mut expect = RMatrix::identity(4, 4);
        expect[(2, 0)] = t;
        expect[(3, 1)] = -t;
        assert!((phi - expect).abs().max() < 1e-15);
    }

    #[test]
    fn angle_parsing() {
        assert!((parse_angle("pi/2").unwrap() - PI / 2.0).abs() < 1e-15);
        assert!((parse_angle("2pi/3").unwrap() - 2.0 * PI / 3.0).abs() < 1e-15);
        assert!((parse_angle("0.25").unwrap() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn json_round_trip() {
        let sys = scenario("lorentz-flat(1,2)").unwrap();
        let js = serde_json::to_string(&sys.to_json().unwrap()).unwrap();
        let back: ScenarioJson = serde_json::from_str(&js).unwrap();
        assert_eq!(MorseSturmSystem::from_json(&back).unwrap(), sys);
    }
}
