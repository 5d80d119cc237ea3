// SPDX-License-Identifier: Apache-2.0

//! Acceptance run: one pass/fail line per criterion, nonzero exit on failure.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;
use spraydirac::{run, Command, Problem, Report};
use spraydirac_core::ansatz::{self, Ansatz};
use spraydirac_core::dirac::{
    courant_bracket, from_distribution, gauge_transform, is_isotropic_at, jacobi_sides, pairing,
    AlmostDirac, Section,
};
use spraydirac_core::expr::{is_zero, Expr, ZeroTest};
use spraydirac_core::fields::{OneForm, VectorField};
use spraydirac_core::forms::{exterior_derivative_1, exterior_derivative_2, Basis, TwoForm};
use spraydirac_core::integrate::{conservation_drift, integrate_sode, Method};
use spraydirac_core::linalg::{dot, Matrix};
use spraydirac_core::motion::{
    distribution_integrability, hamiltonian_certificate, is_constant_of_motion, Distribution,
};
use spraydirac_core::sample::Sampler;

const DRIFT_TOL: f64 = 1e-8;

fn fixture(name: &str) -> String {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name);
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn report(cmd: Command, name: &str) -> Result<Report, String> {
    run(cmd, &fixture(name), None).map_err(|e| e.to_string())
}

fn at<'a>(v: &'a Value, path: &[&str]) -> &'a Value {
    path.iter().fold(v, |v, k| match k.parse::<usize>() {
        Ok(i) => &v[i],
        Err(_) => &v[*k],
    })
}

fn f(v: &Value) -> f64 {
    v.as_f64().unwrap_or(f64::NAN)
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn example3_verify() -> Result<Outcome, String> {
    let r = report(Command::Verify, "example3.sd")?;
    let v = r.to_value(false);
    let h = at(&v, &["hamiltonians", "0"]);
    let residual = h["residual"].as_str().unwrap_or("");
    let drift = f(at(h, &["drift", "max"]));
    let runs = at(h, &["drift", "runs"]).as_u64().unwrap_or(0);
    let elapsed = r.timing.unwrap_or(Duration::MAX);
    let pass = residual == "proven_zero"
        && runs == 10
        && drift <= DRIFT_TOL
        && elapsed < Duration::from_secs(5);
    Ok(outcome(
        pass,
        format!(
            "residual {residual}, drift {drift:.3e} over {runs} runs, {:.2}s",
            elapsed.as_secs_f64()
        ),
    ))
}

fn example2_verify() -> Result<Outcome, String> {
    let a = report(Command::Verify, "example2.sd")?;
    let b = report(Command::Verify, "example2.sd")?;
    let v = a.to_value(false);
    let h = at(&v, &["hamiltonians", "0"]);
    let residual = h["residual"].as_str().unwrap_or("");
    let drift = f(at(h, &["drift", "max"]));
    let claim = at(&v, &["hamiltonians", "1"]);
    let s_unbound = claim["S_of_H_unbound"].as_str().unwrap_or("");
    let s_bound = claim["S_of_H"].as_str().unwrap_or("");
    let stable = a.text(false) == b.text(false);
    let expected = Expr::int(4) * Expr::x(1) * Expr::y(0) * Expr::apply("f", 1, Expr::x(0));
    let oracle = s_unbound == expected.canonical_string();
    let pass = residual == "proven_zero" && drift <= DRIFT_TOL && oracle && stable;
    Ok(outcome(
        pass,
        format!(
            "H = 2f y1 residual {residual}, drift {drift:.3e}; S(v) = {s_unbound} (bound: {s_bound}), stable: {stable}"
        ),
    ))
}

fn example1_invariants() -> Result<Outcome, String> {
    let a = report(Command::Analyze, "example1.sd")?;
    let av = a.to_value(false);
    let spray = av["spray"].as_str().unwrap_or("");
    let flat = av["flat"].as_str().unwrap_or("");
    let mut verdicts = Vec::new();
    let mut worst = 0.0f64;
    for name in ["example1.sd", "example1_v2.sd"] {
        let p = Problem::parse(&fixture(name)).map_err(|e| e.to_string())?;
        let s = p.spray();
        let sampler = p.sampler(p.integrate.seed);
        for h in &p.hamiltonians {
            verdicts.push(is_constant_of_motion(&s, &p.bind(h), &sampler));
        }
        let r = report(Command::Verify, name)?;
        let v = r.to_value(false);
        for h in v["hamiltonians"].as_array().into_iter().flatten() {
            let runs = at(h, &["drift", "runs"]).as_u64().unwrap_or(0);
            let d = if runs == 0 {
                f64::INFINITY
            } else {
                f(at(h, &["drift", "max"]))
            };
            worst = worst.max(d);
        }
    }
    let all_zero = verdicts.len() == 3 && verdicts.iter().all(|v| v.is_proven_zero());
    let pass = spray == "proven_zero" && flat == "proven_zero" && all_zero && worst <= DRIFT_TOL;
    let shown: Vec<&str> = verdicts.iter().map(|v| v.as_str()).collect();
    Ok(outcome(
        pass,
        format!("spray {spray}, flat {flat}, S(v) verdicts {shown:?}, max drift {worst:.3e}"),
    ))
}

fn free_particle(n: usize) -> String {
    let mut s = format!("dim = {n}\n");
    for i in 1..=n {
        s += &format!("dist X{i} = delta{i}\n");
    }
    for a in 1..=n {
        s += &format!("dist X{} = vertical{a}\n", n + a);
    }
    s += "ansatz degree=2 box=2 seed=3 omega=constant\n";
    s
}

/// Snaps to a rational with denominator at most 64.
fn snap(v: f64) -> Option<Expr> {
    (1..=64i64).find_map(|den| {
        let num = (v * den as f64).round();
        ((v * den as f64 - num).abs() < 1e-9).then(|| Expr::rational(num as i64, den))
    })
}

fn l_diag(n: usize) -> Vec<Section> {
    let mut g: Vec<Section> = (0..n)
        .map(|a| Section::new(VectorField::d_x(n, a), OneForm::dy_basis(n, a)))
        .collect();
    g.extend((0..n).map(|b| Section::new(VectorField::d_y(n, b), OneForm::dx_basis(n, b).neg())));
    g
}

fn example4_case(n: usize, text: &str) -> Result<(bool, String), String> {
    let start = Instant::now();
    let p = Problem::parse(text).map_err(|e| e.to_string())?;
    let cfg = p.ansatz.clone().unwrap_or_default();
    let s = p.spray();
    let sampler = p.sampler(cfg.seed).with_half_width(cfg.half_width);
    let a = Ansatz::new(n, cfg.degree, sampler.clone());
    let d = Distribution::Generators(p.distribution(&s).ok_or("no distribution")?);
    let res = ansatz::search(&s, &d, &[], &a).map_err(|e| e.to_string())?;
    let mut known = vec![0.0; a.unknowns()];
    let hc = a.h_dictionary.len();
    for b in 0..n {
        let yb = Expr::y(b).powi(2).simplify();
        let k = a
            .h_dictionary
            .iter()
            .position(|m| *m == yb)
            .ok_or("y^2 missing from dictionary")?;
        known[k] = 0.5;
        let l = a
            .omega_dictionary
            .iter()
            .position(|w| w.get(b, n + b).is_one_literal())
            .ok_or("dx^dy missing")?;
        known[hc + l] = 1.0;
    }
    let residual = res.solution.projection_residual(&known);
    // Recovered (H, ω): the projection of the known direction onto the nullspace.
    let scale = dot(&known, &known).sqrt();
    let mut proj = vec![0.0; known.len()];
    for basis in &res.solution.nullspace {
        let c = dot(basis, &known) / scale;
        for (p, b) in proj.iter_mut().zip(basis) {
            *p += c * b;
        }
    }
    let peak = proj[..hc].iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let coeffs: Option<Vec<Expr>> = proj.iter().map(|v| snap(v / peak * 0.5)).collect();
    let coeffs = coeffs.ok_or("projection does not snap to small rationals")?;
    let h = spraydirac_core::expr::sum(
        a.h_dictionary
            .iter()
            .zip(&coeffs[..hc])
            .map(|(m, c)| c.clone() * m.clone()),
    )
    .simplify();
    let mut w = TwoForm::zero(n, Basis::Coordinate);
    for (form, c) in a.omega_dictionary.iter().zip(&coeffs[hc..]) {
        w = w.add(&form.scale(c));
    }
    let cert = hamiltonian_certificate(&s, &w, &d, &[], &h, &sampler).map_err(|e| e.to_string())?;
    let c = cert.certificate.as_ref().ok_or("no certificate")?;
    let structure = &c.structure;
    let diag = AlmostDirac::from_generators(n, l_diag(n));
    let mut ranks_ok = true;
    for pt in sampler.points(5) {
        let lr = structure.rows_at(&pt).map_err(|e| e.to_string())?;
        let dr = diag.rows_at(&pt).map_err(|e| e.to_string())?;
        let both: Vec<Vec<f64>> = lr.iter().chain(&dr).cloned().collect();
        let r = |m: &[Vec<f64>]| Matrix::from_rows(m).rank(1e-9);
        ranks_ok &= r(&lr) == 2 * n && r(&dr) == 2 * n && r(&both) == 2 * n;
    }
    let elapsed = start.elapsed();
    let expected = (Expr::rational(1, 2)
        * spraydirac_core::expr::sum((0..n).map(|b| Expr::y(b).powi(2))))
    .simplify();
    let pass = residual <= 1e-8
        && h == expected
        && c.overall.as_str() == "yes"
        && ranks_ok
        && elapsed < Duration::from_secs(10);
    Ok((
        pass,
        format!(
            "n={n}: projection {residual:.1e}, H = {}, certificate {}, L_diag rank match {ranks_ok}, {:.2}s",
            h.canonical_string(),
            c.overall,
            elapsed.as_secs_f64()
        ),
    ))
}

fn example4_search() -> Result<Outcome, String> {
    let mut pass = true;
    let mut parts = Vec::new();
    for n in 1..=2 {
        let (ok, msg) = example4_case(n, &free_particle(n))?;
        pass &= ok;
        parts.push(msg);
    }
    let (ok, msg) = example4_case(3, &fixture("example4.sd"))?;
    pass &= ok;
    parts.push(msg);
    Ok(outcome(pass, parts.join("; ")))
}

fn random_expr(rng: &mut ChaCha8Rng, n: usize) -> Expr {
    let terms = rng.random_range(1..=3);
    let mut e = Expr::zero();
    for _ in 0..terms {
        let c = rng.random_range(-3i64..=3);
        if c == 0 {
            continue;
        }
        let mut t = Expr::int(c);
        for _ in 0..rng.random_range(0..=2) {
            let slot = rng.random_range(0..2 * n);
            t = t * if slot < n {
                Expr::x(slot)
            } else {
                Expr::y(slot - n)
            };
        }
        if rng.random_bool(0.2) {
            t = t * Expr::func(
                spraydirac_core::expr::Func::Sin,
                Expr::x(rng.random_range(0..n)),
            );
        }
        e = e + t;
    }
    e.simplify()
}

fn random_section(rng: &mut ChaCha8Rng, n: usize) -> Section {
    let mut v = || (0..n).map(|_| random_expr(rng, n)).collect::<Vec<_>>();
    let (b, fb) = (v(), v());
    let (dx, dy) = (v(), v());
    Section::new(VectorField::new(b, fb), OneForm::new(dx, dy))
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

fn dirac_suite() -> Result<Outcome, String> {
    let start = Instant::now();
    let n = 2;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let sampler = Sampler::new(n, 12).with_half_width(1.0);
    let points = sampler.points(5);
    let mut failures = Vec::new();
    let mut worst_jacobi = 0.0f64;
    let mut lhs_peak = 0.0f64;
    for _ in 0..10 {
        let (a1, a2, a3) = (
            random_section(&mut rng, n),
            random_section(&mut rng, n),
            random_section(&mut rng, n),
        );
        if is_zero(&(pairing(&a1, &a2) - pairing(&a2, &a1))) != ZeroTest::ProvenZero {
            failures.push("pairing symmetry");
        }
        let anti = courant_bracket(&a1, &a2).add(&courant_bracket(&a2, &a1));
        if anti
            .slots()
            .iter()
            .any(|c| is_zero(c) != ZeroTest::ProvenZero)
        {
            failures.push("Courant antisymmetry");
        }
        let (lhs_s, rhs_s) = jacobi_sides(&a1, &a2, &a3);
        for p in &points {
            let lhs = lhs_s.eval(p).map_err(|e| e.to_string())?;
            let rhs = rhs_s.eval(p).map_err(|e| e.to_string())?;
            lhs_peak = lhs_peak.max(max_abs(&lhs));
            let diff: Vec<f64> = lhs.iter().zip(&rhs).map(|(a, b)| a - b).collect();
            let rel = max_abs(&diff) / max_abs(&lhs).max(1.0);
            worst_jacobi = worst_jacobi.max(rel);
        }
        let alpha = a1.alpha.clone();
        let ddalpha = exterior_derivative_2(&exterior_derivative_1(&alpha));
        if ddalpha.is_zero(&sampler) != ZeroTest::ProvenZero {
            failures.push("d∘d on one-forms");
        }
        let fx = random_expr(&mut rng, n);
        let ddf = exterior_derivative_1(&OneForm::differential(&fx, n));
        if ddf
            .terms()
            .any(|(_, _, c)| is_zero(c) != ZeroTest::ProvenZero)
        {
            failures.push("d∘d on functions");
        }
        // Gauge by a random two-form, then by its negative.
        let mut w = TwoForm::zero(n, Basis::Coordinate);
        for k in 0..2 * n {
            for l in k + 1..2 * n {
                w.add_term(k, l, random_expr(&mut rng, n));
            }
        }
        let dgens = vec![a1.x.clone(), a2.x.clone()];
        let base = from_distribution(&dgens, &[], &sampler);
        if let Ok(base) = base {
            let there = gauge_transform(&base, &w);
            let back = gauge_transform(&there, &w.neg());
            let same = back.generators.iter().zip(&base.generators).all(|(a, b)| {
                a.slots()
                    .iter()
                    .zip(b.slots())
                    .all(|(x, y)| is_zero(&(x.clone() - y)) == ZeroTest::ProvenZero)
            });
            if !same {
                failures.push("gauge involution");
            }
            for p in &points {
                let before = is_isotropic_at(&base, p, 1e-9).map_err(|e| e.to_string())?;
                let after = is_isotropic_at(&there, p, 1e-9).map_err(|e| e.to_string())?;
                if before && !after {
                    failures.push("gauge isotropy preservation");
                }
            }
        }
    }
    let elapsed = start.elapsed();
    if worst_jacobi > 1e-7 || lhs_peak == 0.0 {
        failures.push("anomaly identity");
    }
    failures.dedup();
    let pass = failures.is_empty() && elapsed < Duration::from_secs(30);
    Ok(outcome(
        pass,
        format!(
            "10 triples x 5 points, worst anomaly mismatch {worst_jacobi:.1e} (largest Jacobiator entry {lhs_peak:.1e}), failures {failures:?}, {:.2}s",
            elapsed.as_secs_f64()
        ),
    ))
}

fn remark_leaf() -> Result<Outcome, String> {
    let r = report(Command::DiracCheck, "remark.sd")?;
    let v = r.to_value(false);
    let leaf = f(at(&v, &["probes", "0", "leaf_form", "0", "value"]));
    let kernel = at(&v, &["probes", "1", "kernel_dim"]).as_u64().unwrap_or(0);
    let pass = (leaf - 2.0).abs() <= 1e-12 && kernel >= 2;
    Ok(outcome(
        pass,
        format!("leaf form at z=2: {leaf}, kernel dim at z=0: {kernel}"),
    ))
}

fn pendulum_order() -> Result<Outcome, String> {
    let p = Problem::parse(&fixture("pendulum.sd")).map_err(|e| e.to_string())?;
    let s = p.spray();
    let h = p.bind(&p.hamiltonians[0]);
    let p0 = p
        .probes
        .first()
        .cloned()
        .ok_or("pendulum fixture needs a probe")?;
    let t = p.integrate.t;
    let drift = |dt: f64| -> Result<f64, String> {
        let steps = (t / dt).round() as usize;
        let traj = integrate_sode(&s, &p0, dt, steps, Method::Rk4).map_err(|e| e.to_string())?;
        conservation_drift(&traj, &h).map_err(|e| e.to_string())
    };
    let coarse = drift(p.integrate.dt)?;
    let fine = drift(p.integrate.dt / 2.0)?;
    let ratio = coarse / fine;
    Ok(outcome(
        (11.0..=21.0).contains(&ratio),
        format!(
            "drift {coarse:.3e} at dt={}, {fine:.3e} at dt/2, ratio {ratio:.2}",
            p.integrate.dt
        ),
    ))
}

fn example3_split() -> Result<Outcome, String> {
    let p = Problem::parse(&fixture("example3.sd")).map_err(|e| e.to_string())?;
    let s = p.spray();
    let seed = p.integrate.seed;
    let sampler = p.sampler(seed).with_margin(p.integrate.margin);
    let d = p.distribution(&s).ok_or("no distribution")?;
    let (verdict, worst) = distribution_integrability(&d, &sampler).map_err(|e| e.to_string())?;
    let h = p.bind(&p.hamiltonians[0]);
    let com = is_constant_of_motion(&s, &h, &sampler);
    let r = report(Command::Verify, "example3.sd")?;
    let v = r.to_value(false);
    let residual = at(&v, &["hamiltonians", "0", "residual"])
        .as_str()
        .unwrap_or("")
        .to_string();
    let pass = worst > 1e-4 && com.is_proven_zero() && residual == "proven_zero";
    Ok(outcome(
        pass,
        format!("bracket distance from D {worst:.3e} ({verdict}), S(H) {com}, residual {residual}"),
    ))
}

type Criterion = fn() -> Result<Outcome, String>;

fn main() -> ExitCode {
    let criteria: [(&str, Criterion); 8] = [
        ("example 3 constant of motion", example3_verify),
        ("example 2 bound f", example2_verify),
        ("example 1 invariants", example1_invariants),
        ("example 4 ansatz search", example4_search),
        ("Dirac algebra properties", dirac_suite),
        ("regularized bracket leaf form", remark_leaf),
        ("rk4 order", pendulum_order),
        ("example 3 non-integrable D", example3_split),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = check().unwrap_or_else(|e| outcome(false, format!("error: {e}")));
        if !o.pass {
            failed += 1;
        }
        println!(
            "criterion {}: {} [{name}] {} ({:.2}s)",
            i + 1,
            if o.pass { "PASS" } else { "FAIL" },
            o.detail,
            start.elapsed().as_secs_f64()
        );
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
