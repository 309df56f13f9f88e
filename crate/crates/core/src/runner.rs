//! Scenario runner behind the `msindex` binary: resolves a [`RunConfig`],
//! runs the selected analyses, assembles a deterministic JSON report and
//! writes plot-ready CSV files.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use num_complex::Complex64;
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::index::{prop55_check, roots_of_unity, theorem_a_check, bott_check, IndexConfig, IndexContext, IndexReport};
use crate::linalg::{unit, ONE};
use crate::maslov::{clm_diagonal, ClmOptions, CrossingRecord};
use crate::model::{parse_angle, scenario, MorseSturmSystem, ScenarioJson};
use crate::selftest::{clm_axiom_sweep, lemma54_sweep, parity_sweep, splitting_sweep, ClmAxioms, SweepOutcome};
use crate::stability::{stability_report_with, theorem_f_check, StabilityReport, StabilityTolerances, Verdict};

/// Largest iterate count accepted by `max_m` and `--m`.
pub const MAX_ITERATE: usize = 12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "camelCase")]
pub enum Analysis {
    Indices,
    Stability,
    Bott,
    TheoremA,
    TheoremF,
    Selftest,
}

impl FromStr for Analysis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "indices" => Ok(Self::Indices),
            "stability" => Ok(Self::Stability),
            "bott" => Ok(Self::Bott),
            "theoremA" => Ok(Self::TheoremA),
            "theoremF" => Ok(Self::TheoremF),
            "selftest" => Ok(Self::Selftest),
            other => Err(Error::Config(format!("unknown analysis '{other}'"))),
        }
    }
}

/// Comma-separated analysis names; an empty list is a configuration error.
pub fn parse_analyses(s: &str) -> Result<Vec<Analysis>> {
    let mut out: Vec<Analysis> =
        s.split(',').filter(|t| !t.trim().is_empty()).map(str::parse).collect::<Result<_>>()?;
    out.sort();
    out.dedup();
    if out.is_empty() {
        return Err(Error::Config("at least one analysis is required".into()));
    }
    Ok(out)
}

/// Parses `1`, `-1`, `i`, `-i`, `e:<angle>` (meaning `e^{i·angle}`) or
/// `roots:m`, separated by commas. Values must lie on the unit circle.
pub fn parse_omegas(s: &str) -> Result<Vec<Complex64>> {
    let mut out = Vec::new();
    for tok in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        let bad = |why: &str| Error::Config(format!("omega '{tok}': {why}"));
        if let Some(m) = tok.strip_prefix("roots:") {
            let m: usize = m.trim().parse().map_err(|_| bad("expected roots:<m>"))?;
            if m == 0 || m > MAX_ITERATE {
                return Err(bad("m must lie in 1..=12"));
            }
            out.extend(roots_of_unity(m));
            continue;
        }
        let w = match tok {
            "i" | "+i" => Complex64::new(0.0, 1.0),
            "-i" => Complex64::new(0.0, -1.0),
            _ => match tok.strip_prefix("e:") {
                Some(angle) => unit(parse_angle(angle).map_err(|_| bad("cannot parse angle"))?),
                None => Complex64::new(tok.parse::<f64>().map_err(|_| bad("not a number"))?, 0.0),
            },
        };
        if (w.norm() - 1.0).abs() > 1e-9 {
            return Err(bad("not on the unit circle"));
        }
        out.push(w / w.norm());
    }
    if out.is_empty() {
        return Err(Error::Config("empty omega list".into()));
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioSource {
    Builtin(String),
    File(PathBuf),
}

impl ScenarioSource {
    pub fn load(&self) -> Result<MorseSturmSystem> {
        let sys = match self {
            Self::Builtin(name) => scenario(name).map_err(|e| Error::Config(e.to_string()))?,
            Self::File(path) => {
                let text = fs::read_to_string(path)
                    .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
                let js: ScenarioJson = serde_json::from_str(&text)
                    .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
                MorseSturmSystem::from_json(&js).map_err(|e| Error::Config(e.to_string()))?
            }
        };
        sys.ensure_valid().map_err(|e| Error::Config(e.to_string()))?;
        Ok(sys)
    }
}

/// Tolerance overrides; `None` keeps the library default.
#[derive(Clone, Copy, Debug, Default, Serialize)]
pub struct ToleranceOverrides {
    pub circle: Option<f64>,
    pub cluster: Option<f64>,
    pub rank: Option<f64>,
    pub integrator: Option<f64>,
    pub zero: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunConfig {
    pub scenario: ScenarioSource,
    #[serde(serialize_with = "ser_omegas")]
    pub omegas: Vec<Complex64>,
    pub analyses: Vec<Analysis>,
    pub max_m: usize,
    /// Iterate counts for the Bott check; defaults to `1..=max_m`.
    pub bott_m: Option<Vec<usize>>,
    pub tolerances: ToleranceOverrides,
    pub seed: u64,
}

fn ser_omegas<S: serde::Serializer>(w: &[Complex64], s: S) -> std::result::Result<S::Ok, S::Error> {
    let pairs: Vec<[f64; 2]> = w.iter().map(|z| [z.re, z.im]).collect();
    pairs.serialize(s)
}

impl RunConfig {
    pub fn new(scenario: ScenarioSource, analyses: Vec<Analysis>) -> Self {
        Self {
            scenario,
            omegas: vec![ONE],
            analyses,
            max_m: 4,
            bott_m: None,
            tolerances: ToleranceOverrides::default(),
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.analyses.is_empty() {
            return Err(Error::Config("at least one analysis is required".into()));
        }
        if self.omegas.is_empty() {
            return Err(Error::Config("empty omega list".into()));
        }
        if self.max_m == 0 || self.max_m > MAX_ITERATE {
            return Err(Error::Config(format!("max_m = {} outside 1..=12", self.max_m)));
        }
        if let Some(ms) = &self.bott_m {
            if ms.iter().any(|&m| m == 0 || m > MAX_ITERATE) {
                return Err(Error::Config("bott iterate count outside 1..=12".into()));
            }
        }
        let t = &self.tolerances;
        for (name, v) in [
            ("circle", t.circle),
            ("cluster", t.cluster),
            ("rank", t.rank),
            ("integrator", t.integrator),
            ("zero", t.zero),
        ] {
            if let Some(v) = v {
                if !(v.is_finite() && v > 0.0) {
                    return Err(Error::Config(format!("tolerance {name} must be positive, got {v}")));
                }
            }
        }
        Ok(())
    }

    fn wants(&self, a: Analysis) -> bool {
        self.analyses.contains(&a)
    }

    pub fn stability_tolerances(&self) -> StabilityTolerances {
        let d = StabilityTolerances::default();
        StabilityTolerances {
            circle: self.tolerances.circle.unwrap_or(d.circle),
            cluster: self.tolerances.cluster.unwrap_or(d.cluster),
            rank: self.tolerances.rank.unwrap_or(d.rank),
        }
    }

    pub fn index_config(&self) -> IndexConfig {
        let mut cfg = IndexConfig::default();
        if let Some(d) = self.tolerances.integrator {
            cfg.integrator.defect_bound = Some(d);
        }
        if let Some(z) = self.tolerances.zero {
            cfg.clm.zero_tol = z;
        }
        cfg
    }
}

/// Crossing of the `t`-path `ωA_dΨ(t)` or of the `s`-family, one CSV row each.
#[derive(Clone, Debug, Serialize)]
pub struct CrossingRow {
    pub kind: &'static str,
    pub omega_re: f64,
    pub omega_im: f64,
    pub param: f64,
    pub kernel_dim: usize,
    pub n_plus: usize,
    pub n_zero: usize,
    pub n_minus: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct SelftestReport {
    pub seed: u64,
    pub lemma54: SweepOutcome,
    pub clm_axioms: ClmAxioms,
    pub splitting: SweepOutcome,
    pub parity: SweepOutcome,
}

impl SelftestReport {
    pub fn ok(&self) -> bool {
        self.lemma54.ok() && self.clm_axioms.ok() && self.splitting.ok() && self.parity.ok()
    }
}

/// Sweep sizes used by the `selftest` analysis.
pub const SELFTEST_COUNTS: (usize, usize, usize, usize) = (200, 20, 10, 20);

pub fn selftest(seed: u64) -> Result<SelftestReport> {
    let (lemma, clm, split, parity) = SELFTEST_COUNTS;
    Ok(SelftestReport {
        seed,
        lemma54: lemma54_sweep(seed, lemma),
        clm_axioms: clm_axiom_sweep(seed.wrapping_add(1), clm)?,
        splitting: splitting_sweep(seed.wrapping_add(2), split)?,
        parity: parity_sweep(seed.wrapping_add(3), parity)?,
    })
}

/// Everything a run produced, before serialization.
pub struct RunOutput {
    pub report: Value,
    pub indices: Vec<IndexReport>,
    pub stability: Option<StabilityReport>,
    pub crossings: Vec<CrossingRow>,
    /// Mathematical identities that failed; non-empty means exit code 3.
    pub violations: Vec<String>,
}

impl RunOutput {
    pub fn json(&self) -> String {
        to_canonical_json(&self.report)
    }
}

struct OmegaResult {
    index: IndexReport,
    prop55: Option<crate::index::Prop55Report>,
    t_crossings: Vec<CrossingRecord>,
    clm_epsilon: f64,
}

fn analyze_omega(ctx: &IndexContext, omega: Complex64, prop55: bool) -> Result<OmegaResult> {
    let index = theorem_a_check(ctx, omega)?;
    let prop55 = if prop55 { Some(prop55_check(ctx, omega)?) } else { None };
    let path = ctx.poincare_path(omega, 1.0, 0.0)?;
    let clm = clm_diagonal(&path, &ClmOptions { locate: true, ..ctx.config().clm })?;
    Ok(OmegaResult { index, prop55, t_crossings: clm.crossings, clm_epsilon: clm.epsilon })
}

fn to_value<T: Serialize>(v: &T) -> Result<Value> {
    Ok(serde_json::to_value(v)?)
}

/// Runs every requested analysis. Errors are analysis failures (exit 2);
/// identity failures are collected in [`RunOutput::violations`].
pub fn run(cfg: &RunConfig) -> Result<RunOutput> {
    cfg.validate()?;
    let sys = cfg.scenario.load()?;
    let index_cfg = cfg.index_config();
    let ctx = IndexContext::new(&sys, index_cfg)?;
    let mut violations = Vec::new();
    let mut diagnostics = serde_json::Map::new();
    let mut checks = serde_json::Map::new();

    let want_indices = cfg.wants(Analysis::Indices) || cfg.wants(Analysis::TheoremA);
    let mut indices = Vec::new();
    let mut crossings = Vec::new();
    if want_indices {
        let with_prop55 = cfg.wants(Analysis::TheoremA);
        let results: Vec<Result<OmegaResult>> = std::thread::scope(|scope| {
            let handles: Vec<_> = cfg
                .omegas
                .iter()
                .map(|&w| {
                    let ctx = ctx.clone();
                    scope.spawn(move || analyze_omega(&ctx, w, with_prop55))
                })
                .collect();
            handles.into_iter().map(|h| h.join().expect("omega worker panicked")).collect()
        });
        let mut prop55 = Vec::new();
        let mut per_omega = Vec::new();
        for r in results {
            let r = r?;
            let w = r.index.omega;
            for c in &r.t_crossings {
                crossings.push(CrossingRow {
                    kind: "t",
                    omega_re: w.re,
                    omega_im: w.im,
                    param: c.t,
                    kernel_dim: c.kernel_dim,
                    n_plus: c.form_signature.plus,
                    n_zero: c.form_signature.zero,
                    n_minus: c.form_signature.minus,
                });
            }
            for c in &r.index.spectral_crossings {
                crossings.push(CrossingRow {
                    kind: "s",
                    omega_re: w.re,
                    omega_im: w.im,
                    param: c.s,
                    kernel_dim: c.kernel_dim,
                    n_plus: c.signature.plus,
                    n_zero: c.signature.zero,
                    n_minus: c.signature.minus,
                });
            }
            if !r.index.routes_agree {
                violations.push(format!(
                    "theoremA at omega = {w}: spectral flow {:?} != i_geo - nullity = {}",
                    r.index.i_spec_spath, r.index.i_spec_thm_a
                ));
            }
            if let Some(p) = &r.prop55 {
                if !p.holds {
                    violations.push(format!("prop55 at omega = {w}: {} != {}", p.lhs, p.nullity));
                }
                prop55.push(json!({"omega": [w.re, w.im], "report": to_value(p)?}));
            }
            per_omega.push(json!({
                "omega": [w.re, w.im],
                "s0": r.index.s0,
                "shift": r.index.shift,
                "clm_epsilon": r.clm_epsilon,
                "t_crossings": to_value(&r.t_crossings)?,
            }));
            indices.push(r.index);
        }
        checks.insert("theoremA".into(), Value::Bool(indices.iter().all(|r| r.routes_agree)));
        if with_prop55 {
            checks.insert("prop55".into(), Value::Bool(prop55.iter().all(|p| p["report"]["holds"] == true)));
            diagnostics.insert("prop55".into(), Value::Array(prop55));
        }
        diagnostics.insert("omega".into(), Value::Array(per_omega));
    }

    let stability = if cfg.wants(Analysis::Stability) {
        let rep = stability_report_with(&sys, cfg.max_m, &cfg.stability_tolerances(), index_cfg)?;
        let contradiction =
            rep.classification.linearly_stable && rep.criterion_verdict == Verdict::UnstableByParity;
        if contradiction {
            violations.push("theoremD: linearly stable but unstable by parity".into());
        }
        checks.insert("theoremD".into(), Value::Bool(!contradiction));
        Some(rep)
    } else {
        None
    };

    let mut bott = Value::Null;
    if cfg.wants(Analysis::Bott) {
        let ms: Vec<usize> = cfg.bott_m.clone().unwrap_or_else(|| (1..=cfg.max_m).collect());
        let mut reports = Vec::new();
        for m in ms {
            let r = bott_check(&ctx, m)?;
            if !(r.equal && r.nullity_equal) {
                violations.push(format!(
                    "bott at m = {m}: lhs {} rhs {}, nullity {} vs {}",
                    r.lhs, r.rhs, r.nullity_lhs, r.nullity_rhs
                ));
            }
            reports.push(r);
        }
        checks.insert("bott".into(), Value::Bool(reports.iter().all(|r| r.equal && r.nullity_equal)));
        bott = json!({ "iterates": to_value(&reports)? });
    }

    if cfg.wants(Analysis::TheoremF) {
        if sys.g.is_positive() {
            let f = theorem_f_check(&sys, cfg.max_m)?;
            if !f.consistent {
                violations.push("theoremF: vanishing iterate indices but strongly stable".into());
            }
            checks.insert("theoremF".into(), Value::Bool(f.consistent));
            diagnostics.insert("theoremF".into(), to_value(&f)?);
        } else {
            diagnostics.insert("theoremF".into(), json!({"applies": false, "reason": "G is not positive definite"}));
        }
    }

    let lemma54 = if cfg.wants(Analysis::Selftest) {
        let st = selftest(cfg.seed)?;
        if !st.ok() {
            for s in [&st.lemma54, &st.splitting, &st.parity].into_iter().chain(st.clm_axioms.all()) {
                for f in &s.failures {
                    violations.push(format!("selftest {}: {f}", s.name));
                }
            }
        }
        checks.insert("selftest".into(), Value::Bool(st.ok()));
        let ok = st.lemma54.ok();
        diagnostics.insert("selftest".into(), to_value(&st)?);
        ok
    } else {
        let l = lemma54_sweep(cfg.seed, SELFTEST_COUNTS.0);
        if !l.ok() {
            violations.extend(l.failures.iter().map(|f| format!("lemma54: {f}")));
        }
        l.ok()
    };
    checks.insert("lemma54".into(), Value::Bool(lemma54));

    let echo = match sys.to_json() {
        Ok(js) => to_value(&js)?,
        Err(_) => json!({"label": sys.label}),
    };
    let report = json!({
        "scenario": {
            "echo": echo,
            "config": to_value(cfg)?,
            "index_config": to_value(ctx.config())?,
            "stability_tolerances": to_value(&cfg.stability_tolerances())?,
        },
        "orientation": sys.orientation(),
        "indices": to_value(&indices)?,
        "stability": match &stability { Some(s) => to_value(s)?, None => Value::Null },
        "bott": bott,
        "checks": Value::Object(checks),
        "diagnostics": Value::Object(diagnostics),
    });
    Ok(RunOutput { report, indices, stability, crossings, violations })
}

/// Pretty JSON with sorted keys, two-space indentation, LF line endings and
/// floats printed with 17 significant digits.
pub fn to_canonical_json(v: &Value) -> String {
    let mut out = String::new();
    emit(v, 0, &mut out);
    out.push('\n');
    out
}

fn emit(v: &Value, depth: usize, out: &mut String) {
    let pad = |d: usize, out: &mut String| out.extend(std::iter::repeat("  ").take(d));
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                let _ = write!(out, "{i}");
            } else if let Some(u) = n.as_u64() {
                let _ = write!(out, "{u}");
            } else {
                let x = n.as_f64().unwrap_or(f64::NAN);
                let _ = write!(out, "{x:.16e}");
            }
        }
        Value::String(s) => out.push_str(&serde_json::to_string(s).expect("string serializes")),
        Value::Array(items) => {
            if items.is_empty() {
                out.push_str("[]");
                return;
            }
            out.push_str("[\n");
            for (i, item) in items.iter().enumerate() {
                pad(depth + 1, out);
                emit(item, depth + 1, out);
                out.push_str(if i + 1 < items.len() { ",\n" } else { "\n" });
            }
            pad(depth, out);
            out.push(']');
        }
        Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return;
            }
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push_str("{\n");
            for (i, k) in keys.iter().enumerate() {
                pad(depth + 1, out);
                out.push_str(&serde_json::to_string(k).expect("string serializes"));
                out.push_str(": ");
                emit(&map[k.as_str()], depth + 1, out);
                out.push_str(if i + 1 < keys.len() { ",\n" } else { "\n" });
            }
            pad(depth, out);
            out.push('}');
        }
    }
}

/// Writes `eigenvalues.csv`, `indices.csv` and `crossings.csv` into `dir`.
pub fn emit_csv(out: &RunOutput, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();

    let path = dir.join("eigenvalues.csv");
    let mut w = csv::Writer::from_path(&path)?;
    w.write_record(["re", "im", "abs", "multiplicity", "krein_p", "krein_q"])?;
    if let Some(st) = &out.stability {
        for e in &st.classification.eigenvalues {
            let krein = st.krein.iter().find(|k| (k.re - e.re).abs() + (k.im - e.im).abs() < 1e-6);
            let opt = |x: Option<usize>| x.map(|v| v.to_string()).unwrap_or_default();
            w.write_record([
                fmt_f(e.re),
                fmt_f(e.im),
                fmt_f(e.modulus),
                e.multiplicity.to_string(),
                opt(krein.and_then(|k| k.p)),
                opt(krein.and_then(|k| k.q)),
            ])?;
        }
    }
    w.flush()?;
    written.push(path);

    let path = dir.join("indices.csv");
    let mut w = csv::Writer::from_path(&path)?;
    w.write_record(["omega_re", "omega_im", "i_geo", "nullity", "i_spec"])?;
    for r in &out.indices {
        w.write_record([
            fmt_f(r.omega.re),
            fmt_f(r.omega.im),
            r.i_geo.to_string(),
            r.nullity.to_string(),
            r.i_spec_spath.map(|v| v.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    written.push(path);

    let path = dir.join("crossings.csv");
    let mut w = csv::Writer::from_path(&path)?;
    w.write_record(["kind", "omega_re", "omega_im", "param", "kernel_dim", "n_plus", "n_zero", "n_minus", "signature"])?;
    for c in &out.crossings {
        w.write_record([
            c.kind.to_string(),
            fmt_f(c.omega_re),
            fmt_f(c.omega_im),
            fmt_f(c.param),
            c.kernel_dim.to_string(),
            c.n_plus.to_string(),
            c.n_zero.to_string(),
            c.n_minus.to_string(),
            (c.n_plus as i64 - c.n_minus as i64).to_string(),
        ])?;
    }
    w.flush()?;
    written.push(path);
    Ok(written)
}

fn fmt_f(x: f64) -> String {
    format!("{x:.16e}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn omega_lists() {
        let w = parse_omegas("1,-1,i,-i").unwrap();
        assert_eq!(w.len(), 4);
        assert_eq!(w[2], Complex64::new(0.0, 1.0));
        assert_eq!(parse_omegas("roots:4").unwrap().len(), 4);
        let e = parse_omegas("e:2pi/3").unwrap()[0];
        assert!((e - unit(2.0 * std::f64::consts::PI / 3.0)).norm() < 1e-15);
        assert!(parse_omegas("2").is_err());
        assert!(parse_omegas("").is_err());
        assert!(parse_omegas("roots:13").is_err());
    }

    #[test]
    fn analysis_lists() {
        assert_eq!(parse_analyses("stability,theoremA").unwrap(), vec![Analysis::Stability, Analysis::TheoremA]);
        assert!(parse_analyses("").is_err());
        assert!(parse_analyses("indices,frobnicate").is_err());
    }

    #[test]
    fn canonical_json_sorts_and_formats() {
        let v = json!({"b": 1.5, "a": [1, -2], "c": {"z": null, "y": true}, "d": "x\"y"});
        let s = to_canonical_json(&v);
        let expect = "{\n  \"a\": [\n    1,\n    -2\n  ],\n  \"b\": 1.5000000000000000e0,\n  \"c\": {\n    \"y\": true,\n    \"z\": null\n  },\n  \"d\": \"x\\\"y\"\n}\n";
        assert_eq!(s, expect);
        let back: Value = serde_json::from_str(&s).unwrap();
        assert_eq!(back["b"], 1.5);
    }

    #[test]
    fn seventeen_digits_round_trip() {
        for x in [0.1, std::f64::consts::PI, -1e-300, 6.02e23] {
            let s = to_canonical_json(&json!(x));
            assert_eq!(s.trim().parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn invalid_configs_rejected() {
        let mut cfg = RunConfig::new(ScenarioSource::Builtin("great-circle".into()), vec![]);
        assert!(matches!(run(&cfg), Err(Error::Config(_))));
        cfg.analyses = vec![Analysis::Indices];
        cfg.max_m = 13;
        assert!(matches!(run(&cfg), Err(Error::Config(_))));
        cfg.max_m = 2;
        cfg.tolerances.zero = Some(-1.0);
        assert!(matches!(run(&cfg), Err(Error::Config(_))));
        let bad = RunConfig::new(ScenarioSource::Builtin("no-such".into()), vec![Analysis::Indices]);
        assert!(matches!(run(&bad), Err(Error::Config(_))));
    }

    #[test]
    fn great_circle_indices_and_bott() {
        let mut cfg = RunConfig::new(ScenarioSource::Builtin("great-circle".into()), vec![Analysis::Indices, Analysis::Bott]);
        cfg.omegas = parse_omegas("1,-1").unwrap();
        cfg.bott_m = Some(vec![2]);
        let out = run(&cfg).unwrap();
        assert!(out.violations.is_empty(), "{:?}", out.violations);
        let spec: Vec<_> = out.indices.iter().map(|r| r.i_spec_spath).collect();
        assert_eq!(spec, vec![Some(1), Some(2)]);
        let b = &out.report["bott"]["iterates"][0];
        assert_eq!((b["lhs"].as_i64(), b["rhs"].as_i64()), (Some(3), Some(3)));
        assert_eq!(out.report["checks"]["theoremA"], true);
    }
}
