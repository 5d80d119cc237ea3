// SPDX-License-Identifier: Apache-2.0

//! Deterministic sampling of evaluation points away from singular loci.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::expr::{Expr, FnBinding, FunctionBindings, Point, Var};

/// Range for parameters that have no bound value.
pub const FREE_PARAM_RANGE: (f64, f64) = (0.5, 2.0);

/// Draws points uniformly from `[-half_width, half_width]^{2n}` (shifted by `center`
/// when given), rejecting any point where some exclusion expression evaluates
/// to less than `margin` in absolute value or fails to evaluate.
#[derive(Clone, Debug)]
pub struct Sampler {
    pub n: usize,
    pub half_width: f64,
    pub center: Option<Vec<f64>>,
    pub seed: u64,
    pub exclusions: Vec<Expr>,
    pub margin: f64,
    pub params: BTreeMap<String, f64>,
    /// Parameters without a value, drawn per point from [`FREE_PARAM_RANGE`].
    pub free_params: BTreeSet<String>,
    pub functions: FunctionBindings,
    /// Rejection budget per requested point.
    pub max_tries_per_point: usize,
}

impl Sampler {
    pub fn new(n: usize, seed: u64) -> Sampler {
        Sampler {
            n,
            half_width: 2.0,
            center: None,
            seed,
            exclusions: Vec::new(),
            margin: 1e-3,
            params: BTreeMap::new(),
            free_params: BTreeSet::new(),
            functions: FunctionBindings::new(),
            max_tries_per_point: 200,
        }
    }

    pub fn with_half_width(mut self, w: f64) -> Self {
        self.half_width = w;
        self
    }

    pub fn with_exclusions(mut self, ex: impl IntoIterator<Item = Expr>) -> Self {
        self.exclusions.extend(ex);
        self
    }

    pub fn with_margin(mut self, margin: f64) -> Self {
        self.margin = margin;
        self
    }

    pub fn with_params(mut self, params: &BTreeMap<String, f64>) -> Self {
        for (k, v) in params {
            self.free_params.remove(k);
            self.params.insert(k.clone(), *v);
        }
        self
    }

    pub fn with_functions(mut self, f: &FunctionBindings) -> Self {
        self.functions
            .extend(f.iter().map(|(k, v)| (k.clone(), v.clone())));
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Marks parameters of `e` that have no value as free.
    pub fn free_params_of(mut self, e: &Expr) -> Self {
        for p in e.params() {
            if !self.params.contains_key(&p) {
                self.free_params.insert(p);
            }
        }
        self
    }

    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }

    /// True when `p` clears every exclusion by at least the margin.
    pub fn admissible(&self, p: &Point) -> bool {
        self.exclusions.iter().all(|ex| match ex.eval(p) {
            Ok(v) => v.abs() >= self.margin,
            Err(_) => false,
        })
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> Point {
        let w = self.half_width;
        let mut slots: Vec<f64> = (0..2 * self.n).map(|_| rng.random_range(-w..=w)).collect();
        if let Some(c) = &self.center {
            for (s, c) in slots.iter_mut().zip(c) {
                *s += c;
            }
        }
        let mut params = self.params.clone();
        for name in &self.free_params {
            params.insert(
                name.clone(),
                rng.random_range(FREE_PARAM_RANGE.0..=FREE_PARAM_RANGE.1),
            );
        }
        Point::from_slots(&slots, params)
    }

    /// Up to `count` admissible points, reproducible from the seed.
    pub fn points(&self, count: usize) -> Vec<Point> {
        let mut rng = self.rng();
        self.points_from(&mut rng, count)
    }

    pub fn points_from(&self, rng: &mut ChaCha8Rng, count: usize) -> Vec<Point> {
        let mut out = Vec::with_capacity(count);
        let budget = count.saturating_mul(self.max_tries_per_point).max(1);
        for _ in 0..budget {
            if out.len() == count {
                break;
            }
            let p = self.draw(rng);
            if self.admissible(&p) {
                out.push(p);
            }
        }
        out
    }

    /// Bindings for every opaque function in `names`: user bodies where given,
    /// otherwise random generic bodies drawn from `rng`.
    pub fn complete_bindings(
        &self,
        names: &BTreeSet<String>,
        rng: &mut ChaCha8Rng,
    ) -> FunctionBindings {
        let mut out = FunctionBindings::new();
        for name in names {
            let b = match self.functions.get(name) {
                Some(b) => b.clone(),
                None => generic_binding(rng),
            };
            out.insert(name.clone(), b);
        }
        out
    }

    /// `e` with every opaque function replaced by a concrete body.
    pub fn concretize(&self, e: &Expr, rng: &mut ChaCha8Rng) -> Expr {
        let names = e.opaque_functions();
        if names.is_empty() {
            return e.clone();
        }
        let b = self.complete_bindings(&names, rng);
        e.bind_functions(&b)
    }
}

/// `c0 + c1 u + c2 u^2 + c3 sin u` with coefficients chosen so the body and its
/// first derivatives are generically nonzero.
pub fn generic_binding(rng: &mut ChaCha8Rng) -> FnBinding {
    let u = Var::X(0);
    let c0 = rng.random_range(1.0..=2.0);
    let c1 = rng.random_range(-0.5..=0.5);
    let c2 = rng.random_range(0.5..=1.5);
    let c3 = rng.random_range(-0.1..=0.1);
    let body = Expr::real(c0)
        + Expr::real(c1) * Expr::Var(u)
        + Expr::real(c2) * Expr::Var(u).powi(2)
        + Expr::real(c3) * Expr::func(crate::expr::Func::Sin, Expr::Var(u));
    FnBinding::new(u, body)
}
