//! Fundamental solutions `Ψ_{c,s}(t)` of `ż = J D_{c,s}(t) z` by classical RK4
//! with step doubling.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{standard_j, RMatrix};
use crate::model::MorseSturmSystem;

#[derive(Clone, Copy, Debug, Serialize)]
pub struct IntegratorConfig {
    pub initial_steps: usize,
    /// `None` selects `1e-10 · max(1, sup‖D‖ T)`.
    pub defect_bound: Option<f64>,
    pub max_steps: usize,
    /// Precomputed `sup_t ‖R̂(t)‖₂`; sampled from the system when absent.
    pub rhat_sup: Option<f64>,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self { initial_steps: 64, defect_bound: None, max_steps: 1 << 20, rhat_sup: None }
    }
}

impl IntegratorConfig {
    pub fn with_initial_steps(mut self, n: usize) -> Self {
        self.initial_steps = n.max(2);
        self
    }

    /// Caches `sup ‖R̂‖` of `sys` for repeated integrations.
    pub fn for_system(mut self, sys: &MorseSturmSystem) -> Self {
        self.rhat_sup = Some(sys.sup_rhat_norm());
        self
    }
}

/// Coefficient `K(t) = J D_{c,s}(t)` in the form `ṗ = M(t) u`, `u̇ = G p`,
/// with `M = c R̂ + s G + shift·I`.
struct Rhs<'a> {
    sys: &'a MorseSturmSystem,
    c: f64,
    s: f64,
    shift: f64,
    g: Vec<f64>,
}

impl<'a> Rhs<'a> {
    fn new(sys: &'a MorseSturmSystem, c: f64, s: f64, shift: f64) -> Self {
        Self { sys, c, s, shift, g: sys.g.diag() }
    }

    fn coupling(&self, t: f64) -> RMatrix {
        let mut m = self.sys.rhat_at(t) * self.c;
        for (i, gi) in self.g.iter().enumerate() {
            m[(i, i)] += self.s * gi + self.shift;
        }
        m
    }

    /// `K(t) X` without forming `K`.
    fn apply(&self, m: &RMatrix, x: &RMatrix) -> RMatrix {
        let n = self.sys.n;
        let cols = x.ncols();
        let mut out = RMatrix::zeros(2 * n, cols);
        let lower = x.rows(n, n);
        out.rows_mut(0, n).copy_from(&(m * lower));
        for i in 0..n {
            for j in 0..cols {
                out[(n + i, j)] = self.g[i] * x[(i, j)];
            }
        }
        out
    }

    fn step(&self, t: f64, h: f64, x: &RMatrix) -> RMatrix {
        let m0 = self.coupling(t);
        let mh = self.coupling(t + 0.5 * h);
        let m1 = self.coupling(t + h);
        let k1 = self.apply(&m0, x);
        let k2 = self.apply(&mh, &(x + &k1 * (0.5 * h)));
        let k3 = self.apply(&mh, &(x + &k2 * (0.5 * h)));
        let k4 = self.apply(&m1, &(x + &k3 * h));
        x + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0)
    }

    fn sup_norm_d(&self, rhat_sup: Option<f64>) -> f64 {
        let r = rhat_sup.unwrap_or_else(|| self.sys.sup_rhat_norm());
        1.0f64.max(self.c.abs() * r + self.s.abs() + self.shift.abs())
    }
}

fn frob(m: &RMatrix) -> f64 {
    m.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `‖Ψᵀ J Ψ − J‖_F`.
pub fn real_symplectic_defect(psi: &RMatrix) -> f64 {
    let j = standard_j(psi.nrows() / 2);
    frob(&(psi.transpose() * &j * psi - &j))
}

/// Defect divided by `max(1, ‖Ψ‖²_F)`, the scale-free accuracy measure.
pub fn relative_defect(psi: &RMatrix) -> f64 {
    real_symplectic_defect(psi) / frob(psi).powi(2).max(1.0)
}

/// Densely sampled symplectic path on a uniform grid.
#[derive(Clone, Debug)]
pub struct FundamentalSolution {
    sys: MorseSturmSystem,
    c: f64,
    s: f64,
    shift: f64,
    samples: Vec<RMatrix>,
    defect: f64,
    relative_defect: f64,
}

impl FundamentalSolution {
    pub fn steps(&self) -> usize {
        self.samples.len() - 1
    }

    pub fn period(&self) -> f64 {
        self.sys.period
    }

    pub fn step_size(&self) -> f64 {
        self.sys.period / self.steps() as f64
    }

    pub fn grid(&self) -> Vec<f64> {
        let h = self.step_size();
        (0..=self.steps()).map(|i| i as f64 * h).collect()
    }

    pub fn samples(&self) -> &[RMatrix] {
        &self.samples
    }

    /// `max_grid ‖Ψᵀ J Ψ − J‖_F`.
    pub fn defect(&self) -> f64 {
        self.defect
    }

    pub fn relative_defect(&self) -> f64 {
        self.relative_defect
    }

    pub fn params(&self) -> (f64, f64) {
        (self.c, self.s)
    }

    pub fn system(&self) -> &MorseSturmSystem {
        &self.sys
    }

    pub fn endpoint(&self) -> &RMatrix {
        self.samples.last().expect("non-empty")
    }

    /// `Ψ(t)`, one RK4 sub-step from the nearest grid point at or below `t`.
    pub fn evaluate(&self, t: f64) -> Result<RMatrix> {
        let period = self.period();
        if !(t >= 0.0 && t <= period * (1.0 + 1e-14)) {
            return Err(Error::Domain(format!("t = {t} outside [0, {period}]")));
        }
        let h = self.step_size();
        let pos = t / h;
        let mut i = pos.floor() as usize;
        if i >= self.steps() {
            i = self.steps();
        }
        let base = i as f64 * h;
        let dt = t - base;
        if dt.abs() <= 1e-14 * period {
            return Ok(self.samples[i].clone());
        }
        let rhs = Rhs::new(&self.sys, self.c, self.s, self.shift);
        Ok(rhs.step(base, dt, &self.samples[i]))
    }
}

fn run(rhs: &Rhs, period: f64, steps: usize, keep: bool) -> (Vec<RMatrix>, f64) {
    run_from(rhs, 0.0, period, steps, keep)
}

fn run_from(rhs: &Rhs, t0: f64, length: f64, steps: usize, keep: bool) -> (Vec<RMatrix>, f64) {
    let dim = 2 * rhs.sys.n;
    let h = length / steps as f64;
    let mut x = RMatrix::identity(dim, dim);
    let mut out = Vec::with_capacity(if keep { steps + 1 } else { 1 });
    let mut rel = 0.0f64;
    if keep {
        out.push(x.clone());
    }
    for i in 0..steps {
        x = rhs.step(t0 + i as f64 * h, h, &x);
        if keep {
            rel = rel.max(relative_defect(&x));
            out.push(x.clone());
        }
    }
    if !keep {
        rel = relative_defect(&x);
        out.push(x);
    }
    (out, rel)
}

fn tolerance(rhs: &Rhs, cfg: &IntegratorConfig) -> f64 {
    cfg.defect_bound
        .unwrap_or_else(|| 1e-10 * 1.0f64.max(rhs.sup_norm_d(cfg.rhat_sup) * rhs.sys.period))
}

/// Fundamental solution on `[0, T]` with certified endpoint accuracy.
///
/// Accuracy is measured relative to `max(1, ‖Ψ‖)` so that exponentially
/// growing solutions at large `s` remain certifiable.
pub fn integrate_fundamental(
    sys: &MorseSturmSystem,
    c: f64,
    s: f64,
    config: &IntegratorConfig,
) -> Result<FundamentalSolution> {
    integrate_fundamental_shifted(sys, c, s, 0.0, config)
}

/// As [`integrate_fundamental`] for the coefficient `c R̂ + s G + shift·I`.
pub fn integrate_fundamental_shifted(
    sys: &MorseSturmSystem,
    c: f64,
    s: f64,
    shift: f64,
    config: &IntegratorConfig,
) -> Result<FundamentalSolution> {
    sys.ensure_valid()?;
    let rhs = Rhs::new(sys, c, s, shift);
    let delta = tolerance(&rhs, config);
    let period = sys.period;
    let mut n = config.initial_steps.max(2);
    let mut prev = run(&rhs, period, n, true);
    let mut best = f64::INFINITY;
    while 2 * n <= config.max_steps {
        let next = run(&rhs, period, 2 * n, true);
        let a = prev.0.last().unwrap();
        let b = next.0.last().unwrap();
        let diff = frob(&(a - b)) / frob(b).max(1.0);
        best = best.min(next.1.max(diff));
        if diff <= delta && next.1 <= delta {
            let samples = next.0;
            let defect = samples.iter().map(real_symplectic_defect).fold(0.0, f64::max);
            return Ok(FundamentalSolution {
                sys: sys.clone(),
                c,
                s,
                shift,
                samples,
                defect,
                relative_defect: next.1,
            });
        }
        prev = next;
        n *= 2;
    }
    Err(Error::Accuracy { steps: n, best_defect: best })
}

/// Endpoint `Ψ_{c,s}(T)` only, with the same acceptance test; returns the step count used.
pub fn integrate_endpoint(
    sys: &MorseSturmSystem,
    c: f64,
    s: f64,
    config: &IntegratorConfig,
) -> Result<(RMatrix, usize)> {
    integrate_endpoint_shifted(sys, c, s, 0.0, config)
}

pub fn integrate_endpoint_shifted(
    sys: &MorseSturmSystem,
    c: f64,
    s: f64,
    shift: f64,
    config: &IntegratorConfig,
) -> Result<(RMatrix, usize)> {
    let rhs = Rhs::new(sys, c, s, shift);
    let delta = tolerance(&rhs, config);
    let period = sys.period;
    let mut n = config.initial_steps.max(2);
    let mut prev = run(&rhs, period, n, false);
    let mut best = f64::INFINITY;
    while 2 * n <= config.max_steps {
        let next = run(&rhs, period, 2 * n, false);
        let a = prev.0.last().unwrap();
        let b = next.0.last().unwrap();
        let diff = frob(&(a - b)) / frob(b).max(1.0);
        best = best.min(next.1.max(diff));
        if diff <= delta && next.1 <= delta {
            return Ok((next.0.into_iter().last().unwrap(), 2 * n));
        }
        prev = next;
        n *= 2;
    }
    Err(Error::Accuracy { steps: n, best_defect: best })
}

/// Number of equal sub-intervals keeping the growth factor of each
/// sub-interval propagator below about `e^8`.
pub fn segment_count(sys: &MorseSturmSystem, c: f64, s: f64, shift: f64, config: &IntegratorConfig) -> usize {
    let rhs = Rhs::new(sys, c, s, shift);
    let rate = rhs.sup_norm_d(config.rhat_sup).sqrt();
    ((rate * sys.period / 8.0).ceil() as usize).max(1)
}

/// Propagators `F_j = Ψ(t_j) Ψ(t_{j-1})⁻¹` over `k` equal sub-intervals, so
/// that `Ψ(T) = F_k ⋯ F_1`, each certified like [`integrate_endpoint`].
pub fn integrate_segments_shifted(
    sys: &MorseSturmSystem,
    c: f64,
    s: f64,
    shift: f64,
    k: usize,
    config: &IntegratorConfig,
) -> Result<Vec<RMatrix>> {
    sys.ensure_valid()?;
    let rhs = Rhs::new(sys, c, s, shift);
    let delta = tolerance(&rhs, config);
    let k = k.max(1);
    let length = sys.period / k as f64;
    let mut out = Vec::with_capacity(k);
    for j in 0..k {
        let t0 = j as f64 * length;
        let mut n = (config.initial_steps / k).max(2);
        let mut prev = run_from(&rhs, t0, length, n, false);
        let mut best = f64::INFINITY;
        let mut done = None;
        while 2 * n <= config.max_steps {
            let next = run_from(&rhs, t0, length, 2 * n, false);
            let a = prev.0.last().unwrap();
            let b = next.0.last().unwrap();
            let diff = frob(&(a - b)) / frob(b).max(1.0);
            best = best.min(next.1.max(diff));
            if diff <= delta && next.1 <= delta {
                done = next.0.into_iter().last();
                break;
            }
            prev = next;
            n *= 2;
        }
        match done {
            Some(m) => out.push(m),
            None => return Err(Error::Accuracy { steps: n, best_defect: best }),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{closed_form_phi, scenario};

    #[test]
    fn flat_torus_is_shear() {
        let sys = scenario("flat-torus(1)").unwrap();
        let sol = integrate_fundamental(&sys, 1.0, 0.0, &IntegratorConfig::default()).unwrap();
        assert!(sol.defect() < 1e-12);
        assert_eq!(sol.samples()[0], RMatrix::identity(2, 2));
        for t in [0.0, 0.1234, 0.5, 0.77777, 1.0] {
            let psi = sol.evaluate(t).unwrap();
            let expect = RMatrix::from_row_slice(2, 2, &[1.0, 0.0, t, 1.0]);
            assert!((psi - expect).abs().max() < 1e-10);
        }
        assert!(sol.evaluate(1.5).is_err());
    }

    #[test]
    fn great_circle_returns_to_identity() {
        let sys = scenario("great-circle").unwrap();
        let sol = integrate_fundamental(&sys, 1.0, 0.0, &IntegratorConfig::default()).unwrap();
        assert!((sol.endpoint() - RMatrix::identity(2, 2)).abs().max() < 1e-8);
    }

    #[test]
    fn matches_closed_form_indefinite() {
        let mut sys = scenario("lorentz-flat(1,1)").unwrap();
        let c = 0.3;
        sys.rhat = crate::model::CurvaturePath::Constant(RMatrix::identity(2, 2) * c);
        let sol = integrate_fundamental(&sys, 1.0, 2.0, &IntegratorConfig::default()).unwrap();
        let phi = closed_form_phi(&sys.g, c, 2.0, 1.0);
        assert!((sol.endpoint() - phi).abs().max() < 1e-8);
    }

    #[test]
    fn cocycle_on_constant_curvature() {
        let sys = scenario("great-circle").unwrap();
        let sol = integrate_fundamental(&sys, 1.0, 0.4, &IntegratorConfig::default()).unwrap();
        let a = sol.evaluate(1.1).unwrap();
        let b = sol.evaluate(2.3).unwrap();
        let ab = sol.evaluate(3.4).unwrap();
        assert!((&b * &a - ab).abs().max() < 1e-8);
        for psi in sol.samples().iter().step_by(17) {
            assert!((psi.determinant() - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn segments_multiply_to_endpoint() {
        let sys = scenario("great-circle").unwrap();
        let cfg = IntegratorConfig::default();
        let (full, _) = integrate_endpoint(&sys, 1.0, 0.7, &cfg).unwrap();
        let parts = integrate_segments_shifted(&sys, 1.0, 0.7, 0.0, 3, &cfg).unwrap();
        let prod = parts.iter().rev().fold(RMatrix::identity(2, 2), |acc, f| acc * f);
        assert!((prod - full).abs().max() < 1e-8);
        assert_eq!(segment_count(&sys, 1.0, 0.0, 0.0, &cfg), 1);
        assert!(segment_count(&sys, 1.0, 400.0, 0.0, &cfg) >= 15);
    }
}
