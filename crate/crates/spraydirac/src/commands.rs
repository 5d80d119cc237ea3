// SPDX-License-Identifier: Apache-2.0

//! The five batch commands.

use std::str::FromStr;
use std::time::Instant;

use serde_json::{json, Map, Value};
use spraydirac_core::ansatz::{self, Ansatz};
use spraydirac_core::dirac::{
    from_distribution, gauge_transform, is_isotropic_at, is_maximal_at, kernel_at,
    leaf_two_form_at, AlmostDirac, InvolutivityProbe, Section,
};
use spraydirac_core::expr::{Expr, Point, ZeroReport};
use spraydirac_core::fields::{OneForm, VectorField};
use spraydirac_core::forms::TwoForm;
use spraydirac_core::integrate::{conservation_drift, drift_batch, integrate_sode, Settings};
use spraydirac_core::motion::{hamiltonian_certificate, Distribution, MotionReport};
use spraydirac_core::sample::Sampler;
use spraydirac_core::spray::{
    berwald_frame, curvature, euler_residual, is_flat, is_semispray, is_spray, SemiSpray,
};

use crate::error::CliError;
use crate::problem::{DistSpec, Problem};
use crate::report::{expr, exprs, num, nums, verdict, Report};

/// Pointwise tolerance for isotropy and maximality in `dirac-check`.
pub const POINTWISE_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Analyze,
    Verify,
    Search,
    Integrate,
    DiracCheck,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Analyze => "analyze",
            Command::Verify => "verify",
            Command::Search => "search",
            Command::Integrate => "integrate",
            Command::DiracCheck => "dirac-check",
        }
    }

    /// The seed a command uses when none is given on the command line.
    pub fn default_seed(self, p: &Problem) -> u64 {
        match self {
            Command::Search => p.ansatz.as_ref().map(|a| a.seed).unwrap_or(1),
            Command::DiracCheck => p.dirac.seed,
            _ => p.integrate.seed,
        }
    }
}

impl FromStr for Command {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "analyze" => Command::Analyze,
            "verify" => Command::Verify,
            "search" => Command::Search,
            "integrate" => Command::Integrate,
            "dirac-check" => Command::DiracCheck,
            _ => return Err(format!("unknown command `{s}`")),
        })
    }
}

/// Parses `text` and runs `cmd`, recording the wall time.
pub fn run(cmd: Command, text: &str, seed: Option<u64>) -> Result<Report, CliError> {
    let start = Instant::now();
    let p = Problem::parse(text)?;
    let seed = seed.unwrap_or_else(|| cmd.default_seed(&p));
    let mut r = Report::new(cmd.name(), text.as_bytes(), seed);
    r.set("dim", p.n);
    match cmd {
        Command::Analyze => analyze(&p, seed, &mut r)?,
        Command::Verify => verify(&p, seed, &mut r)?,
        Command::Search => search(&p, seed, &mut r)?,
        Command::Integrate => integrate(&p, seed, &mut r)?,
        Command::DiracCheck => dirac_check(&p, seed, &mut r)?,
    }
    r.timing = Some(start.elapsed());
    Ok(r)
}

fn slot_name(k: usize, n: usize) -> String {
    if k < n {
        format!("dx{}", k + 1)
    } else {
        format!("dy{}", k - n + 1)
    }
}

fn term(c: &Expr, name: &str) -> Option<String> {
    let c = c.simplify();
    if c.is_zero_literal() {
        return None;
    }
    if c.is_one_literal() {
        return Some(name.to_string());
    }
    if (-c.clone()).simplify().is_one_literal() {
        return Some(format!("-{name}"));
    }
    let s = c.to_string();
    if matches!(c, Expr::Add(_)) {
        Some(format!("({s})*{name}"))
    } else {
        Some(format!("{s}*{name}"))
    }
}

fn join_terms(terms: Vec<String>) -> String {
    if terms.is_empty() {
        return "0".into();
    }
    let mut out = terms[0].clone();
    for t in &terms[1..] {
        match t.strip_prefix('-') {
            Some(rest) => {
                out.push_str(" - ");
                out.push_str(rest);
            }
            None => {
                out.push_str(" + ");
                out.push_str(t);
            }
        }
    }
    out
}

/// Fiber terms first, so `δy_a` reads `dy_a + N dx`.
pub fn one_form_string(f: &OneForm) -> String {
    let n = f.dim();
    let order = (n..2 * n).chain(0..n);
    join_terms(
        order
            .filter_map(|k| term(f.slot(k), &slot_name(k, n)))
            .collect(),
    )
}

pub fn two_form_string(w: &TwoForm) -> String {
    let n = w.n;
    join_terms(
        w.terms()
            .filter_map(|(k, l, c)| term(c, &format!("{}^{}", slot_name(k, n), slot_name(l, n))))
            .collect(),
    )
}

fn vector_value(v: &VectorField) -> Value {
    json!({ "base": exprs(&v.base), "fiber": exprs(&v.fiber) })
}

fn section_value(s: &Section) -> Value {
    json!({ "x": vector_value(&s.x), "alpha": one_form_string(&s.alpha) })
}

fn point_value(p: &Point) -> Value {
    json!({ "x": nums(&p.x), "y": nums(&p.y) })
}

fn distribution(p: &Problem, s: &SemiSpray, sampler: &Sampler) -> Result<Distribution, CliError> {
    if p.horizontal {
        return Ok(Distribution::Horizontal);
    }
    match p.distribution(s) {
        Some(g) => Ok(Distribution::Generators(g)),
        None => Ok(Distribution::default_for(s, sampler)?),
    }
}

fn generator_labels(p: &Problem, d: &Distribution) -> Vec<String> {
    match d {
        Distribution::Horizontal => (1..=p.n).map(|i| format!("delta{i}")).collect(),
        Distribution::Generators(_) => p
            .dist
            .iter()
            .map(|(label, spec)| match spec {
                DistSpec::Spray => format!("{label}=S"),
                DistSpec::Horizontal(i) => format!("{label}=delta{}", i + 1),
                DistSpec::Vertical(a) => format!("{label}=vertical{}", a + 1),
                DistSpec::Tuple(_) => label.clone(),
            })
            .collect(),
    }
}

fn zero_value(z: &ZeroReport) -> Value {
    let mut m = Map::new();
    m.insert("verdict".into(), verdict(z.verdict));
    m.insert("samples".into(), z.samples_evaluated.into());
    m.insert("max_abs".into(), num(z.max_abs));
    if let Some((pt, v)) = &z.witness {
        m.insert("witness".into(), point_value(pt));
        m.insert("witness_value".into(), num(*v));
    }
    Value::Object(m)
}

fn analyze(p: &Problem, seed: u64, r: &mut Report) -> Result<(), CliError> {
    let s = p.spray();
    let sampler = p.sampler(seed);
    let n = p.n;
    r.set("G", exprs(&s.g));
    r.set(
        "semispray",
        verdict(is_semispray(&s.vector_field(), &sampler)),
    );
    let spray = is_spray(&s, &sampler);
    r.set("spray", verdict(spray));
    r.set("euler_residual", exprs(&euler_residual(&s)));
    let frame = berwald_frame(&s);
    let mut conn = Map::new();
    for a in 0..n {
        for i in 0..n {
            conn.insert(
                format!("N{}_{}", a + 1, i + 1),
                expr(&frame.connection[a][i]),
            );
        }
    }
    r.set("connection", conn);
    let mut fr = Map::new();
    for (i, h) in frame.horizontal.iter().enumerate() {
        fr.insert(format!("delta{}", i + 1), vector_value(h));
    }
    for (a, f) in frame.dely.iter().enumerate() {
        fr.insert(format!("dely{}", a + 1), Value::String(one_form_string(f)));
    }
    r.set("frame", fr);
    let rt = curvature(&s);
    let mut curv = Map::new();
    for a in 0..n {
        for i in 0..n {
            for j in i + 1..n {
                let c = rt.r[a][i][j].simplify();
                if !c.is_zero_literal() {
                    curv.insert(format!("R{}_{}{}", a + 1, i + 1, j + 1), expr(&c));
                }
            }
        }
    }
    r.set("curvature", curv);
    r.set("flat", verdict(is_flat(&s, &sampler)));
    Ok(())
}

fn motion_value(
    p: &Problem,
    labels: &[String],
    h_raw: &Expr,
    h: &Expr,
    m: &MotionReport,
) -> Map<String, Value> {
    let mut out = Map::new();
    out.insert("H".into(), expr(h));
    out.insert("summary".into(), m.summary().into());
    out.insert(
        "residual_form".into(),
        one_form_string(&m.residual_form).into(),
    );
    let mut comps = Vec::new();
    for ((label, c), v) in labels.iter().zip(&m.components).zip(&m.verdicts) {
        let mut e = Map::new();
        e.insert("generator".into(), label.clone().into());
        e.insert("residual".into(), expr(c));
        for (k, val) in zero_value(v).as_object().into_iter().flatten() {
            e.insert(k.clone(), val.clone());
        }
        comps.push(Value::Object(e));
    }
    out.insert("residual".into(), verdict(m.residual_verdict()));
    out.insert("components".into(), comps.into());
    out.insert("residual_numeric_max".into(), num(m.numeric_max));
    out.insert("residual_samples".into(), m.samples.into());
    out.insert("trivial".into(), m.trivial.into());
    out.insert("S_of_H".into(), expr(&m.s_of_h));
    out.insert("S_of_H_verdict".into(), zero_value(&m.s_of_h_verdict));
    if p.has_bodies() {
        let sym = p.spray_symbolic().apply(h_raw);
        out.insert("S_of_H_unbound".into(), expr(&sym));
    }
    if let Some(c) = &m.certificate {
        out.insert(
            "certificate".into(),
            json!({
                "overall": c.overall.as_str(),
                "residual": verdict(m.residual_verdict()),
                "integrable": verdict(c.integrable),
                "integrability_residual": num(c.integrability_residual),
                "closed": verdict(c.closed),
                "numeric_annihilator": c.structure.provenance.numeric_annihilator,
            }),
        );
    }
    out
}

fn drift_sampler(p: &Problem, seed: u64) -> Sampler {
    p.sampler(seed)
        .with_half_width(p.integrate.half_width)
        .with_margin(p.integrate.margin)
}

fn settings(p: &Problem) -> Settings {
    Settings {
        t: p.integrate.t,
        dt: p.integrate.dt,
        method: p.integrate.method,
    }
}

fn verify(p: &Problem, seed: u64, r: &mut Report) -> Result<(), CliError> {
    if p.hamiltonians.is_empty() {
        return Err(CliError::Validation(
            "verify needs at least one `H = ...` line".into(),
        ));
    }
    let s = p.spray();
    let sampler = p.sampler(seed);
    let d = distribution(p, &s, &sampler)?;
    let labels = generator_labels(p, &d);
    let ann = p.annihilator(&s);
    let w = p.omega_form(&s);
    r.set("omega", two_form_string(&w));
    r.set("distribution", labels.clone());
    let ds = drift_sampler(p, seed);
    let st = settings(p);
    r.set(
        "integration",
        json!({
            "method": st.method.name(),
            "t": num(st.t),
            "dt": num(st.dt),
            "samples": p.integrate.samples,
            "box": num(p.integrate.half_width),
            "margin": num(p.integrate.margin),
        }),
    );
    let mut results = Vec::new();
    for h_raw in &p.hamiltonians {
        let h = p.bind(h_raw);
        let m = hamiltonian_certificate(&s, &w, &d, &ann, &h, &sampler)?;
        let mut out = motion_value(p, &labels, h_raw, &h, &m);
        let batch = drift_batch(&s, &h, &ds, p.integrate.samples, st, |pt| {
            p.in_domain(pt).unwrap_or(false)
        });
        out.insert(
            "drift".into(),
            json!({
                "runs": batch.runs.len(),
                "rejected": batch.rejected,
                "max": num(batch.max_drift()),
                "per_run": batch.runs.iter().map(|d| num(d.drift)).collect::<Vec<_>>(),
            }),
        );
        results.push(Value::Object(out));
    }
    r.set("hamiltonians", results);
    Ok(())
}

/// Coefficients of `(H, ω)` over the ansatz dictionaries, when both are
/// expressible there with constant coefficients.
fn known_coefficients(a: &Ansatz, h: &Expr, w: &TwoForm) -> Option<Vec<f64>> {
    let mut v = vec![0.0; a.unknowns()];
    for (c, m) in h.canonical_terms() {
        let k = a
            .h_dictionary
            .iter()
            .position(|d| d.simplify() == m.simplify())?;
        v[k] += c.to_f64();
    }
    let forms = &a.omega_dictionary;
    for (k, l, c) in w.terms() {
        let c = c.simplify().as_const()?;
        if c.is_zero() {
            continue;
        }
        let idx = forms.iter().position(|f| f.get(k, l).is_one_literal())?;
        v[a.h_dictionary.len() + idx] += c.to_f64();
    }
    v.iter().any(|x| *x != 0.0).then_some(v)
}

/// Magnitude below which a unit-vector coefficient is printed as absent.
const COEFF_PRINT_TOL: f64 = 1e-12;

fn coefficient_table(a: &Ansatz, v: &[f64]) -> Vec<Value> {
    let hc = a.h_dictionary.len();
    v.iter()
        .enumerate()
        .filter(|(_, c)| c.abs() > COEFF_PRINT_TOL)
        .map(|(k, c)| {
            let label = if k < hc {
                a.h_dictionary[k].canonical_string()
            } else {
                two_form_string(&a.omega_dictionary[k - hc])
            };
            json!({ "term": label, "value": num(*c) })
        })
        .collect()
}

fn search(p: &Problem, seed: u64, r: &mut Report) -> Result<(), CliError> {
    let cfg = p.ansatz.clone().unwrap_or_default();
    let s = p.spray();
    let sampler = p.sampler(seed).with_half_width(cfg.half_width);
    let mut a = Ansatz::new(p.n, cfg.degree, sampler.clone());
    a.points = cfg.points;
    if !p.dictionary.is_empty() {
        a.h_dictionary = p.dictionary.iter().map(|e| p.bind(e)).collect();
    }
    if !cfg.constant_omega {
        a.omega_dictionary.clear();
    }
    let d = distribution(p, &s, &sampler)?;
    let ann = p.annihilator(&s);
    r.set(
        "ansatz",
        json!({
            "degree": cfg.degree,
            "h_dictionary": a.h_dictionary.len(),
            "omega_dictionary": a.omega_dictionary.len(),
            "unknowns": a.unknowns(),
            "box": num(cfg.half_width),
        }),
    );
    r.set("distribution", generator_labels(p, &d));
    let res = ansatz::search(&s, &d, &ann, &a)?;
    let sol = &res.solution;
    r.set("collocation_points", res.collocation_points);
    r.set("rows", res.rows);
    r.set("singular_values", nums(&sol.sigma));
    r.set("nullspace_dim", sol.nullspace.len());
    r.set("trivial", sol.trivial);
    r.set("rejected", res.rejected);
    let mut cands = Vec::new();
    for c in &sol.candidates {
        let mut m = Map::new();
        m.insert("H".into(), expr(&c.h));
        m.insert("omega".into(), two_form_string(&c.omega).into());
        m.insert("exact".into(), c.exact.into());
        m.insert("symbolic".into(), verdict(c.symbolic));
        m.insert("numeric_residual".into(), num(c.numeric_residual));
        m.insert(
            "coefficients".into(),
            coefficient_table(&a, &c.coeffs()).into(),
        );
        if let Some(rep) = &c.report {
            m.insert("summary".into(), rep.summary().into());
            if let Some(cert) = &rep.certificate {
                m.insert("certificate".into(), cert.overall.as_str().into());
                m.insert(
                    "generators".into(),
                    cert.structure
                        .generators
                        .iter()
                        .map(section_value)
                        .collect::<Vec<_>>()
                        .into(),
                );
            }
        }
        cands.push(Value::Object(m));
    }
    r.set("candidates", cands);
    if !p.hamiltonians.is_empty() {
        let w = p.omega_form(&s);
        let mut known = Vec::new();
        for h_raw in &p.hamiltonians {
            let h = p.bind(h_raw);
            let v = known_coefficients(&a, &h, &w);
            known.push(json!({
                "H": expr(&h),
                "projection_residual": v.map(|v| num(sol.projection_residual(&v))).unwrap_or(Value::Null),
            }));
        }
        r.set("known", known);
    }
    Ok(())
}

fn initial_states(p: &Problem, sampler: &Sampler) -> Vec<Point> {
    if !p.probes.is_empty() {
        return p.probes.clone();
    }
    let mut rng = sampler.rng();
    let mut out = Vec::new();
    for _ in 0..p.integrate.samples.saturating_mul(50) {
        if out.len() == p.integrate.samples {
            break;
        }
        let Some(pt) = sampler.points_from(&mut rng, 1).pop() else {
            break;
        };
        if p.in_domain(&pt).unwrap_or(false) {
            out.push(pt);
        }
    }
    out
}

/// Number of dumped rows per trajectory, endpoints included.
const DUMP_ROWS: usize = 51;

fn integrate(p: &Problem, seed: u64, r: &mut Report) -> Result<(), CliError> {
    let s = p.spray();
    let sampler = drift_sampler(p, seed);
    let st = settings(p);
    let starts = initial_states(p, &sampler);
    if starts.is_empty() {
        return Err(CliError::Numeric("no admissible initial states".into()));
    }
    r.set("method", st.method.name());
    r.set("t", num(st.t));
    r.set("dt", num(st.dt));
    r.set("steps", st.steps());
    let hs: Vec<Expr> = p.hamiltonians.iter().map(|h| p.bind(h)).collect();
    let mut runs = Vec::new();
    let mut failures = 0;
    for p0 in &starts {
        let mut m = Map::new();
        m.insert("initial".into(), point_value(p0));
        let traj = match integrate_sode(&s, p0, st.dt, st.steps(), st.method) {
            Ok(t) => t,
            Err(e) => {
                failures += 1;
                m.insert("error".into(), e.to_string().into());
                m.insert("completed_steps".into(), (e.partial.len() - 1).into());
                e.partial
            }
        };
        let stride = ((traj.len() - 1) / (DUMP_ROWS - 1)).max(1);
        let mut rows = Vec::new();
        for (i, (t, pt)) in traj.times.iter().zip(&traj.states).enumerate() {
            if i % stride == 0 || i == traj.len() - 1 {
                let mut row = vec![*t];
                row.extend(&pt.x);
                row.extend(&pt.y);
                rows.push(nums(&row));
            }
        }
        if let Some((t, last)) = traj.last() {
            m.insert("final_t".into(), num(t));
            m.insert("final".into(), point_value(last));
        }
        let drifts: Vec<Value> = hs
            .iter()
            .map(|h| conservation_drift(&traj, h).map(num).unwrap_or(Value::Null))
            .collect();
        if !drifts.is_empty() {
            m.insert("drift".into(), drifts.into());
        }
        m.insert("columns".into(), trajectory_columns(p.n).into());
        m.insert("trajectory".into(), rows.into());
        runs.push(Value::Object(m));
    }
    if failures == starts.len() {
        return Err(CliError::Numeric("every trajectory failed".into()));
    }
    r.set("failures", failures);
    r.set("runs", runs);
    Ok(())
}

fn trajectory_columns(n: usize) -> Vec<String> {
    std::iter::once("t".to_string())
        .chain((1..=n).map(|i| format!("x{i}")))
        .chain((1..=n).map(|a| format!("y{a}")))
        .collect()
}

/// `L_D` gauged by the file's `ω`.
pub fn structure(p: &Problem, seed: u64) -> Result<AlmostDirac, CliError> {
    let s = p.spray();
    let sampler = p.sampler(seed);
    let d = distribution(p, &s, &sampler)?;
    let base = from_distribution(&d.generators(&s), &p.annihilator(&s), &sampler)?;
    Ok(if p.omega.is_empty() {
        base
    } else {
        gauge_transform(&base, &p.omega_form(&s))
    })
}

fn dirac_check(p: &Problem, seed: u64, r: &mut Report) -> Result<(), CliError> {
    let l = structure(p, seed)?;
    let sampler = p.sampler(seed);
    r.set("numeric_annihilator", l.provenance.numeric_annihilator);
    r.set(
        "generators",
        l.generators.iter().map(section_value).collect::<Vec<_>>(),
    );
    let points = sampler.points(p.dirac.samples);
    if points.is_empty() {
        return Err(CliError::Numeric("no admissible sample points".into()));
    }
    let probe = InvolutivityProbe::new(&l);
    let (mut iso, mut max, mut kmin, mut kmax) = (0, 0, usize::MAX, 0);
    let mut worst = 0.0f64;
    let mut deficient = 0;
    for pt in &points {
        iso += usize::from(is_isotropic_at(&l, pt, POINTWISE_TOL)?);
        max += usize::from(is_maximal_at(&l, pt, POINTWISE_TOL)?);
        match probe.residual_at(pt) {
            Ok(v) => worst = worst.max(v),
            Err(spraydirac_core::dirac::DiracError::RankDeficient { .. }) => deficient += 1,
            Err(e) => return Err(e.into()),
        }
        let k = kernel_at(&l, pt)?.len();
        kmin = kmin.min(k);
        kmax = kmax.max(k);
    }
    let total = points.len();
    r.set("samples", total);
    r.set("isotropic", format!("{iso}/{total}"));
    r.set("maximal", format!("{max}/{total}"));
    r.set("max_involutivity_residual", num(worst));
    r.set("rank_deficient_points", deficient);
    r.set("kernel_dim", json!({ "min": kmin, "max": kmax }));
    let mut probes = Vec::new();
    for pt in &p.probes {
        let mut m = Map::new();
        m.insert("point".into(), point_value(pt));
        let k = kernel_at(&l, pt)?;
        m.insert("kernel_dim".into(), k.len().into());
        m.insert(
            "kernel".into(),
            k.iter().map(|v| nums(v)).collect::<Vec<_>>().into(),
        );
        let mut leaves = Vec::new();
        for (xv, yv) in &p.leaf_pairs {
            leaves.push(match leaf_two_form_at(&l, pt, xv, yv) {
                Ok(v) => json!({ "X": nums(xv), "Y": nums(yv), "value": num(v) }),
                Err(e) => json!({ "X": nums(xv), "Y": nums(yv), "error": e.to_string() }),
            });
        }
        if !leaves.is_empty() {
            m.insert("leaf_form".into(), leaves.into());
        }
        probes.push(Value::Object(m));
    }
    if !probes.is_empty() {
        r.set("probes", probes);
    }
    Ok(())
}
