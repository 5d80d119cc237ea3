// SPDX-License-Identifier: Apache-2.0

//! Line-oriented problem files.
//!
//! ```text
//! dim = 2
//! param A = 0.02
//! param f = fn(x1^2 + 1)
//! spray G2 = y2^2
//! exclude y2
//! dist X1 = delta1
//! ann A1 = dely1
//! omega dx1^del1 = 1
//! H = y1
//! integrate t=10 dt=1e-3 method=rk4 seed=1 samples=10
//! ansatz degree=2 points=60 box=2 seed=3
//! ```
//!
//! Beyond the core keys the format accepts:
//!
//! * `param f = fn` declares an opaque function without a body.
//! * `domain <expr>` restricts integration initial states to `expr > 0`.
//! * `dist horizontal` selects the Berwald horizontal distribution; `dist`
//!   components may be written `S`, `delta<i>` or `vertical<a>`, and `ann`
//!   components `dely<a>`, instead of explicit tuples.
//! * `H` may be given more than once.
//! * `integrate` also takes `tol=`, `box=` and `margin=`; `ansatz` takes
//!   `omega=constant|none`; `dictionary <expr>` lines replace the monomial
//!   H-dictionary.
//! * `dirac samples=<int> seed=<int>`, `probe (<x..>; <y..>)` and
//!   `leaf (<X..>; <..>) (<Y..>; <..>)` configure `dirac-check`.

use std::collections::BTreeMap;

use spraydirac_core::expr::{
    parse, EvalError, Expr, FnBinding, FunctionBindings, ParseContext, ParseError, Point, Var,
};
use spraydirac_core::fields::{OneForm, VectorField};
use spraydirac_core::forms::{wedge, Basis, TwoForm};
use spraydirac_core::integrate::Method;
use spraydirac_core::sample::Sampler;
use spraydirac_core::spray::{berwald_frame, SemiSpray};

#[derive(Debug, thiserror::Error)]
pub enum ProblemErrorKind {
    #[error("{0}")]
    Syntax(String),
    #[error("{0}")]
    Expr(#[from] ParseError),
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, thiserror::Error)]
#[error("line {line}: {kind}")]
pub struct ProblemError {
    /// One-based; zero for whole-file checks.
    pub line: usize,
    pub kind: ProblemErrorKind,
}

fn syntax(line: usize, msg: impl Into<String>) -> ProblemError {
    ProblemError {
        line,
        kind: ProblemErrorKind::Syntax(msg.into()),
    }
}

fn invalid(line: usize, msg: impl Into<String>) -> ProblemError {
    ProblemError {
        line,
        kind: ProblemErrorKind::Invalid(msg.into()),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum DistSpec {
    Tuple(VectorField),
    Spray,
    Horizontal(usize),
    Vertical(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub enum AnnSpec {
    Tuple(OneForm),
    Dely(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Coframe {
    Dx(usize),
    Dy(usize),
    Del(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct OmegaTerm {
    pub first: Coframe,
    pub second: Coframe,
    pub coeff: Expr,
    pub text: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IntegrateSettings {
    pub t: f64,
    pub dt: f64,
    pub method: Method,
    pub seed: u64,
    pub samples: usize,
    pub half_width: f64,
    pub margin: f64,
}

impl Default for IntegrateSettings {
    fn default() -> Self {
        IntegrateSettings {
            t: 10.0,
            dt: 1e-3,
            method: Method::Rk4,
            seed: 1,
            samples: 10,
            half_width: 2.0,
            margin: 1e-3,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AnsatzSettings {
    pub degree: usize,
    pub points: usize,
    pub half_width: f64,
    pub seed: u64,
    pub constant_omega: bool,
}

impl Default for AnsatzSettings {
    fn default() -> Self {
        AnsatzSettings {
            degree: 2,
            points: 0,
            half_width: 2.0,
            seed: 1,
            constant_omega: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DiracSettings {
    pub samples: usize,
    pub seed: u64,
}

impl Default for DiracSettings {
    fn default() -> Self {
        DiracSettings {
            samples: 20,
            seed: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Problem {
    pub n: usize,
    pub params: BTreeMap<String, f64>,
    /// Declared opaque functions, with bodies where given.
    pub functions: BTreeMap<String, Option<FnBinding>>,
    pub g: Vec<Expr>,
    pub exclusions: Vec<Expr>,
    pub domain: Vec<Expr>,
    pub horizontal: bool,
    pub dist: Vec<(String, DistSpec)>,
    pub ann: Vec<(String, AnnSpec)>,
    pub omega: Vec<OmegaTerm>,
    pub hamiltonians: Vec<Expr>,
    pub integrate: IntegrateSettings,
    pub ansatz: Option<AnsatzSettings>,
    pub dictionary: Vec<Expr>,
    pub dirac: DiracSettings,
    pub probes: Vec<Point>,
    pub leaf_pairs: Vec<(Vec<f64>, Vec<f64>)>,
}

fn split_kv(line: usize, rest: &str) -> Result<Vec<(&str, &str)>, ProblemError> {
    rest.split_whitespace()
        .map(|tok| {
            tok.split_once('=')
                .ok_or_else(|| syntax(line, format!("expected key=value, found `{tok}`")))
        })
        .collect()
}

fn num<T: std::str::FromStr>(line: usize, key: &str, v: &str) -> Result<T, ProblemError> {
    v.parse()
        .map_err(|_| syntax(line, format!("bad value `{v}` for `{key}`")))
}

/// `<prefix><k>` with `1 ≤ k ≤ n`, returned zero-based.
fn indexed(line: usize, tok: &str, prefix: &str, n: usize) -> Result<Option<usize>, ProblemError> {
    let Some(rest) = tok.strip_prefix(prefix) else {
        return Ok(None);
    };
    let Ok(k) = rest.parse::<usize>() else {
        return Ok(None);
    };
    if k == 0 || k > n {
        return Err(invalid(
            line,
            format!("index in `{tok}` out of range 1..{n}"),
        ));
    }
    Ok(Some(k - 1))
}

fn strip_label<'a>(
    line: usize,
    rest: &'a str,
    prefix: &str,
) -> Result<(String, &'a str), ProblemError> {
    let (label, body) = rest
        .split_once('=')
        .ok_or_else(|| syntax(line, "expected `=`"))?;
    let label = label.trim();
    if !label.starts_with(prefix) || label[prefix.len()..].parse::<usize>().is_err() {
        return Err(syntax(
            line,
            format!("expected a label `{prefix}<k>`, found `{label}`"),
        ));
    }
    Ok((label.to_string(), body.trim()))
}

impl Problem {
    pub fn context(&self) -> ParseContext {
        let mut ctx = ParseContext::new(self.n);
        for p in self.params.keys() {
            ctx = ctx.with_param(p);
        }
        for f in self.functions.keys() {
            ctx = ctx.with_function(f);
        }
        ctx
    }

    fn expr(&self, line: usize, text: &str) -> Result<Expr, ProblemError> {
        parse(text, &self.context()).map_err(|e| ProblemError {
            line,
            kind: e.into(),
        })
    }

    /// `(e1, .., en; e1, .., en)` as two component lists.
    fn tuple(&self, line: usize, text: &str) -> Result<(Vec<Expr>, Vec<Expr>), ProblemError> {
        let inner = text
            .trim()
            .strip_prefix('(')
            .and_then(|t| t.strip_suffix(')'))
            .ok_or_else(|| syntax(line, "expected `(...; ...)`"))?;
        let (a, b) = inner
            .split_once(';')
            .ok_or_else(|| syntax(line, "expected `;` between the two component lists"))?;
        let part = |s: &str| -> Result<Vec<Expr>, ProblemError> {
            let items: Vec<&str> = s.split(',').map(str::trim).collect();
            if items.len() != self.n {
                return Err(invalid(
                    line,
                    format!("expected {} components, found {}", self.n, items.len()),
                ));
            }
            items.iter().map(|t| self.expr(line, t)).collect()
        };
        Ok((part(a)?, part(b)?))
    }

    fn numeric_tuple(&self, line: usize, text: &str) -> Result<Vec<f64>, ProblemError> {
        let (a, b) = self.tuple(line, text)?;
        let p = Point::origin(self.n);
        let p = Point {
            params: self.params.clone(),
            ..p
        };
        a.iter()
            .chain(&b)
            .map(|e| {
                e.eval(&p)
                    .map_err(|err| invalid(line, format!("component must be a constant: {err}")))
            })
            .collect()
    }

    pub fn parse(text: &str) -> Result<Problem, ProblemError> {
        let lines: Vec<(usize, &str)> = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty())
            .collect();
        let mut p = Problem {
            n: 0,
            params: BTreeMap::new(),
            functions: BTreeMap::new(),
            g: Vec::new(),
            exclusions: Vec::new(),
            domain: Vec::new(),
            horizontal: false,
            dist: Vec::new(),
            ann: Vec::new(),
            omega: Vec::new(),
            hamiltonians: Vec::new(),
            integrate: IntegrateSettings::default(),
            ansatz: None,
            dictionary: Vec::new(),
            dirac: DiracSettings::default(),
            probes: Vec::new(),
            leaf_pairs: Vec::new(),
        };
        // Declarations first so later lines can reference any symbol.
        for &(ln, l) in &lines {
            if let Some(rest) = l.strip_prefix("dim") {
                let v = rest
                    .trim()
                    .strip_prefix('=')
                    .ok_or_else(|| syntax(ln, "expected `dim = <int>`"))?;
                if p.n != 0 {
                    return Err(invalid(ln, "dimension declared twice"));
                }
                p.n = num(ln, "dim", v.trim())?;
                if p.n == 0 {
                    return Err(invalid(ln, "dimension must be positive"));
                }
            }
        }
        if p.n == 0 {
            return Err(invalid(0, "missing `dim = <int>`"));
        }
        p.g = (0..p.n).map(|_| Expr::zero()).collect();
        let mut bodies = Vec::new();
        for &(ln, l) in &lines {
            let Some(rest) = l.strip_prefix("param ") else {
                continue;
            };
            let (name, value) = rest
                .split_once('=')
                .ok_or_else(|| syntax(ln, "expected `param <name> = <value>`"))?;
            let name = name.trim();
            let value = value.trim();
            if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
                return Err(syntax(ln, format!("bad parameter name `{name}`")));
            }
            if p.params.contains_key(name) || p.functions.contains_key(name) {
                return Err(invalid(ln, format!("`{name}` declared twice")));
            }
            if value == "fn" {
                p.functions.insert(name.to_string(), None);
            } else if let Some(body) = value.strip_prefix("fn(").and_then(|b| b.strip_suffix(')')) {
                p.functions.insert(name.to_string(), None);
                bodies.push((ln, name.to_string(), body.to_string()));
            } else {
                p.params.insert(name.to_string(), num(ln, name, value)?);
            }
        }
        for (ln, name, body) in bodies {
            let e = parse(&body, &ParseContext::new(p.n)).map_err(|e| ProblemError {
                line: ln,
                kind: e.into(),
            })?;
            if e.vars().iter().any(|v| *v != Var::X(0)) {
                return Err(invalid(ln, "function bodies may only use x1"));
            }
            p.functions.insert(name, Some(FnBinding::new(Var::X(0), e)));
        }
        for &(ln, l) in &lines {
            let (head, rest) = l.split_once(char::is_whitespace).unwrap_or((l, ""));
            let rest = rest.trim();
            match head {
                "dim" | "param" => {}
                "spray" => {
                    let (label, body) = rest
                        .split_once('=')
                        .ok_or_else(|| syntax(ln, "expected `spray G<a> = <expr>`"))?;
                    let a = indexed(ln, label.trim(), "G", p.n)?.ok_or_else(|| {
                        syntax(ln, format!("expected `G<a>`, found `{}`", label.trim()))
                    })?;
                    p.g[a] = p.expr(ln, body.trim())?;
                }
                "exclude" => {
                    let e = p.expr(ln, rest)?;
                    p.exclusions.push(e);
                }
                "domain" => {
                    let e = p.expr(ln, rest)?;
                    p.domain.push(e);
                }
                "dist" => {
                    if rest == "horizontal" {
                        p.horizontal = true;
                        continue;
                    }
                    let (label, body) = strip_label(ln, rest, "X")?;
                    let spec = if body == "S" {
                        DistSpec::Spray
                    } else if let Some(i) = indexed(ln, body, "delta", p.n)? {
                        DistSpec::Horizontal(i)
                    } else if let Some(a) = indexed(ln, body, "vertical", p.n)? {
                        DistSpec::Vertical(a)
                    } else {
                        let (b, f) = p.tuple(ln, body)?;
                        DistSpec::Tuple(VectorField::new(b, f))
                    };
                    p.dist.push((label, spec));
                }
                "ann" => {
                    let (label, body) = strip_label(ln, rest, "A")?;
                    let spec = if let Some(a) = indexed(ln, body, "dely", p.n)? {
                        AnnSpec::Dely(a)
                    } else {
                        let (dx, dy) = p.tuple(ln, body)?;
                        AnnSpec::Tuple(OneForm::new(dx, dy))
                    };
                    p.ann.push((label, spec));
                }
                "omega" => {
                    let (pair, body) = rest
                        .split_once('=')
                        .ok_or_else(|| syntax(ln, "expected `omega <pair> = <expr>`"))?;
                    let pair = pair.trim();
                    let (a, b) = pair.split_once('^').ok_or_else(|| {
                        syntax(ln, format!("expected a basis pair, found `{pair}`"))
                    })?;
                    let first = p.coframe(ln, a.trim())?;
                    let second = p.coframe(ln, b.trim())?;
                    if first == second {
                        return Err(invalid(ln, "a basis pair needs two distinct elements"));
                    }
                    let coeff = p.expr(ln, body.trim())?;
                    p.omega.push(OmegaTerm {
                        first,
                        second,
                        coeff,
                        text: pair.to_string(),
                    });
                }
                "integrate" => p.integrate = parse_integrate(ln, rest)?,
                "ansatz" => p.ansatz = Some(parse_ansatz(ln, rest)?),
                "dictionary" => {
                    let e = p.expr(ln, rest)?;
                    p.dictionary.push(e);
                }
                "dirac" => {
                    for (k, v) in split_kv(ln, rest)? {
                        match k {
                            "samples" => p.dirac.samples = num(ln, k, v)?,
                            "seed" => p.dirac.seed = num(ln, k, v)?,
                            _ => return Err(syntax(ln, format!("unknown dirac key `{k}`"))),
                        }
                    }
                }
                "probe" => {
                    let v = p.numeric_tuple(ln, rest)?;
                    let mut pt = Point::from_slots(&v, p.params.clone());
                    pt.params = p.params.clone();
                    p.probes.push(pt);
                }
                "leaf" => {
                    let close = rest
                        .find(')')
                        .ok_or_else(|| syntax(ln, "expected two tuples"))?;
                    let (a, b) = rest.split_at(close + 1);
                    let xv = p.numeric_tuple(ln, a)?;
                    let yv = p.numeric_tuple(ln, b.trim())?;
                    p.leaf_pairs.push((xv, yv));
                }
                _ if l.starts_with("H") && l[1..].trim_start().starts_with('=') => {
                    let body = l[1..].trim_start()[1..].trim();
                    let e = p.expr(ln, body)?;
                    p.hamiltonians.push(e);
                }
                _ => return Err(syntax(ln, format!("unknown key `{head}`"))),
            }
        }
        if p.horizontal && !p.dist.is_empty() {
            return Err(invalid(
                0,
                "`dist horizontal` cannot be combined with explicit generators",
            ));
        }
        Ok(p)
    }

    fn coframe(&self, line: usize, tok: &str) -> Result<Coframe, ProblemError> {
        if let Some(i) = indexed(line, tok, "dx", self.n)? {
            return Ok(Coframe::Dx(i));
        }
        if let Some(a) = indexed(line, tok, "dy", self.n)? {
            return Ok(Coframe::Dy(a));
        }
        if let Some(a) = indexed(line, tok, "del", self.n)? {
            return Ok(Coframe::Del(a));
        }
        Err(syntax(line, format!("unknown coframe element `{tok}`")))
    }

    pub fn bindings(&self) -> FunctionBindings {
        self.functions
            .iter()
            .filter_map(|(k, v)| v.clone().map(|b| (k.clone(), b)))
            .collect()
    }

    /// `e` with every bound function body substituted.
    pub fn bind(&self, e: &Expr) -> Expr {
        let b = self.bindings();
        if b.is_empty() {
            e.clone()
        } else {
            e.bind_functions(&b).simplify()
        }
    }

    pub fn has_bodies(&self) -> bool {
        self.functions.values().any(Option::is_some)
    }

    /// The semi-spray with symbolic parameters and unbound functions.
    pub fn spray_symbolic(&self) -> SemiSpray {
        SemiSpray::new(self.g.clone()).with_singular(self.exclusions.iter().cloned())
    }

    /// The semi-spray with function bodies substituted.
    pub fn spray(&self) -> SemiSpray {
        SemiSpray::new(self.g.iter().map(|g| self.bind(g)).collect())
            .with_singular(self.exclusions.iter().map(|e| self.bind(e)))
    }

    /// Sampler over the spray domain with bound parameters.
    pub fn sampler(&self, seed: u64) -> Sampler {
        self.spray()
            .sampler(seed)
            .with_params(&self.params)
            .with_functions(&self.bindings())
    }

    pub fn distribution(&self, s: &SemiSpray) -> Option<Vec<VectorField>> {
        if self.dist.is_empty() {
            return None;
        }
        let frame = berwald_frame(s);
        Some(
            self.dist
                .iter()
                .map(|(_, spec)| match spec {
                    DistSpec::Tuple(v) => v.bind(|e| self.bind(e)),
                    DistSpec::Spray => s.vector_field(),
                    DistSpec::Horizontal(i) => frame.horizontal[*i].clone(),
                    DistSpec::Vertical(a) => VectorField::d_y(s.n, *a),
                })
                .collect(),
        )
    }

    pub fn annihilator(&self, s: &SemiSpray) -> Vec<OneForm> {
        let frame = berwald_frame(s);
        self.ann
            .iter()
            .map(|(_, spec)| match spec {
                AnnSpec::Tuple(f) => f.bind(|e| self.bind(e)),
                AnnSpec::Dely(a) => frame.dely[*a].clone(),
            })
            .collect()
    }

    /// `ω` in the coordinate basis, with `δy_a` from the Berwald frame of `s`.
    pub fn omega_form(&self, s: &SemiSpray) -> TwoForm {
        let n = self.n;
        let frame = berwald_frame(s);
        let theta = |c: Coframe| match c {
            Coframe::Dx(i) => OneForm::dx_basis(n, i),
            Coframe::Dy(a) => OneForm::dy_basis(n, a),
            Coframe::Del(a) => frame.dely[a].clone(),
        };
        let mut w = TwoForm::zero(n, Basis::Coordinate);
        for t in &self.omega {
            w = w.add(&wedge(&theta(t.first), &theta(t.second)).scale(&self.bind(&t.coeff)));
        }
        w
    }

    /// Initial-state filter for integration: every `domain` expression positive.
    pub fn in_domain(&self, p: &Point) -> Result<bool, EvalError> {
        for d in &self.domain {
            if self.bind(d).eval(p)? <= 0.0 {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

fn parse_integrate(ln: usize, rest: &str) -> Result<IntegrateSettings, ProblemError> {
    let mut s = IntegrateSettings::default();
    let mut method = "rk4";
    let mut tol = 1e-10;
    for (k, v) in split_kv(ln, rest)? {
        match k {
            "t" => s.t = num(ln, k, v)?,
            "dt" => s.dt = num(ln, k, v)?,
            "method" => method = v,
            "tol" => tol = num(ln, k, v)?,
            "seed" => s.seed = num(ln, k, v)?,
            "samples" => s.samples = num(ln, k, v)?,
            "box" => s.half_width = num(ln, k, v)?,
            "margin" => s.margin = num(ln, k, v)?,
            _ => return Err(syntax(ln, format!("unknown integrate key `{k}`"))),
        }
    }
    s.method = match method {
        "rk4" => Method::Rk4,
        "rk45" => Method::Rk45 { tol },
        m => return Err(syntax(ln, format!("unknown method `{m}`"))),
    };
    if !(s.t > 0.0 && s.dt > 0.0 && s.dt.is_finite() && s.t.is_finite()) {
        return Err(invalid(ln, "t and dt must be positive"));
    }
    Ok(s)
}

fn parse_ansatz(ln: usize, rest: &str) -> Result<AnsatzSettings, ProblemError> {
    let mut s = AnsatzSettings::default();
    for (k, v) in split_kv(ln, rest)? {
        match k {
            "degree" => s.degree = num(ln, k, v)?,
            "points" => s.points = num(ln, k, v)?,
            "box" => s.half_width = num(ln, k, v)?,
            "seed" => s.seed = num(ln, k, v)?,
            "omega" => {
                s.constant_omega = match v {
                    "constant" => true,
                    "none" => false,
                    _ => return Err(syntax(ln, format!("unknown omega dictionary `{v}`"))),
                }
            }
            _ => return Err(syntax(ln, format!("unknown ansatz key `{k}`"))),
        }
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_core_keys() {
        let p = Problem::parse(
            "dim = 2\n# comment\nparam A = 0.5\nspray G2 = A*y2^2\nexclude y2\nH = y1 # trailing\nintegrate t=1 dt=0.01 method=rk45 seed=4 samples=3\n",
        )
        .unwrap();
        assert_eq!(p.n, 2);
        assert_eq!(p.g[0], Expr::zero());
        assert_eq!(p.hamiltonians.len(), 1);
        assert_eq!(p.integrate.samples, 3);
        assert!(matches!(p.integrate.method, Method::Rk45 { .. }));
    }

    #[test]
    fn errors_carry_line_numbers() {
        let e = Problem::parse("dim = 1\nspray G2 = y1\n").unwrap_err();
        assert_eq!(e.line, 2);
        let e = Problem::parse("dim = 1\n\nH = y1 +\n").unwrap_err();
        assert_eq!(e.line, 3);
        assert!(matches!(e.kind, ProblemErrorKind::Expr(_)));
        let e = Problem::parse("spray G1 = 0\n").unwrap_err();
        assert_eq!(e.line, 0);
        let e = Problem::parse("dim = 1\nfoo bar\n").unwrap_err();
        assert_eq!(e.line, 2);
    }

    #[test]
    fn bound_functions_are_substituted() {
        let p = Problem::parse("dim = 2\nparam f = fn(x1^2 + 1)\nspray G2 = f(x1)\nH = f'(x1)\n")
            .unwrap();
        assert_eq!(p.spray().g[1].to_string(), p.bind(&p.g[1]).to_string());
        assert_eq!(
            p.bind(&p.hamiltonians[0]),
            (Expr::int(2) * Expr::x(0)).simplify()
        );
        assert!(p.spray_symbolic().g[1].opaque_functions().contains("f"));
    }

    #[test]
    fn distribution_shorthands() {
        let p = Problem::parse(
            "dim = 2\nspray G2 = y2^2\ndist X1 = S\ndist X2 = delta1\nann A1 = dely1\nann A2 = (0, 0; 0, 1)\nomega dx2^del2 = 1\n",
        )
        .unwrap();
        let s = p.spray();
        let d = p.distribution(&s).unwrap();
        assert_eq!(d[0], s.vector_field());
        assert_eq!(p.annihilator(&s).len(), 2);
        let w = p.omega_form(&s);
        // dx2 ∧ (dy2 + 2 y2 dx2) = dx2 ∧ dy2
        assert_eq!(w.get(1, 3), Expr::one());
    }
}
