//! Small numerical kernels: composite Simpson rules, golden-section search
//! and complex polynomial roots.

use std::ops::{Add, Mul};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{domain, Result};

/// A Lorentzian-like feature of an integrand: a pole at
/// `center +- i half_width` in the complex plane of the integration variable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Resonance {
    pub center: f64,
    pub half_width: f64,
}

/// Nodes and weights of a composite quadrature on a finite interval. Sums
/// always run in ascending node order.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl QuadratureRule {
    /// Composite Simpson on `n_points` equally spaced nodes (`n_points` odd).
    pub fn simpson_uniform(lo: f64, hi: f64, n_points: usize) -> Result<Self> {
        if n_points < 3 || n_points.is_multiple_of(2) {
            return Err(domain(
                "n_points",
                format!("must be odd and >= 3, got {n_points}"),
            ));
        }
        if !(hi > lo) {
            return Err(domain(
                "interval",
                format!("need lo < hi, got [{lo}, {hi}]"),
            ));
        }
        Ok(Self::from_breakpoints(&[lo, hi], n_points - 1))
    }

    /// Composite Simpson over panels whose edges are a uniform base grid of
    /// `base_points` nodes merged with geometric refinements around each
    /// resonance (edges at `center +- half_width * grading^k`). Every panel is
    /// split into `panel_intervals` (even) Simpson subintervals.
    pub fn graded_simpson(
        lo: f64,
        hi: f64,
        base_points: usize,
        panel_intervals: usize,
        resonances: &[Resonance],
        grading: f64,
    ) -> Result<Self> {
        if base_points < 2 {
            return Err(domain("n_points", "need at least two base nodes"));
        }
        if panel_intervals < 2 || panel_intervals % 2 == 1 {
            return Err(domain(
                "panel_intervals",
                format!("must be even and >= 2, got {panel_intervals}"),
            ));
        }
        if !(grading > 1.0) {
            return Err(domain("grading", "must exceed 1"));
        }
        if !(hi > lo) {
            return Err(domain(
                "interval",
                format!("need lo < hi, got [{lo}, {hi}]"),
            ));
        }
        let span = hi - lo;
        let mut edges: Vec<f64> = (0..base_points)
            .map(|i| lo + span * i as f64 / (base_points - 1) as f64)
            .collect();
        for res in resonances {
            if !res.center.is_finite() {
                continue;
            }
            edges.push(res.center);
            let mut offset = res.half_width.abs().max(span * 1e-13);
            while offset <= span {
                edges.push(res.center - offset);
                edges.push(res.center + offset);
                offset *= grading;
            }
        }
        edges.retain(|x| *x >= lo && *x <= hi);
        edges.sort_by(f64::total_cmp);
        let min_gap = span * 1e-15;
        let mut merged: Vec<f64> = Vec::with_capacity(edges.len());
        for x in edges {
            match merged.last() {
                Some(&last) if x - last <= min_gap => {}
                _ => merged.push(x),
            }
        }
        // Keep the exact interval ends.
        merged[0] = lo;
        if let Some(last) = merged.last_mut() {
            if hi - *last <= min_gap {
                *last = hi;
            } else {
                merged.push(hi);
            }
        }
        Ok(Self::from_breakpoints(&merged, panel_intervals))
    }

    fn from_breakpoints(edges: &[f64], intervals: usize) -> Self {
        let mut nodes = Vec::with_capacity((edges.len() - 1) * intervals + 1);
        let mut weights = Vec::with_capacity(nodes.capacity());
        nodes.push(edges[0]);
        weights.push(0.0);
        for pair in edges.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            let h = (b - a) / intervals as f64;
            *weights.last_mut().expect("seeded") += h / 3.0;
            for j in 1..=intervals {
                let x = if j == intervals { b } else { a + h * j as f64 };
                let w = if j == intervals {
                    h / 3.0
                } else if j % 2 == 1 {
                    4.0 * h / 3.0
                } else {
                    2.0 * h / 3.0
                };
                nodes.push(x);
                weights.push(w);
            }
        }
        Self { nodes, weights }
    }

    /// Multiplies every weight by `g(node)`.
    pub fn weighted_by(mut self, g: impl Fn(f64) -> f64) -> Self {
        for (w, &x) in self.weights.iter_mut().zip(&self.nodes) {
            *w *= g(x);
        }
        self
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate<T, F>(&self, mut f: F) -> T
    where
        T: Default + Add<Output = T> + Mul<f64, Output = T>,
        F: FnMut(f64) -> T,
    {
        self.nodes
            .iter()
            .zip(&self.weights)
            .fold(T::default(), |acc, (&x, &w)| acc + f(x) * w)
    }

    /// Like [`integrate`](Self::integrate) for fallible integrands; stops at
    /// the first error and reports the offending node.
    pub fn try_integrate<T, E, F>(&self, mut f: F) -> std::result::Result<T, (f64, E)>
    where
        T: Default + Add<Output = T> + Mul<f64, Output = T>,
        F: FnMut(f64) -> std::result::Result<T, E>,
    {
        let mut acc = T::default();
        for (&x, &w) in self.nodes.iter().zip(&self.weights) {
            acc = acc + f(x).map_err(|e| (x, e))? * w;
        }
        Ok(acc)
    }
}

/// Golden-section minimisation of `f` on `[a, b]`, stopping once the bracket
/// is narrower than `rel_tol` times its initial width. Returns the best
/// abscissa seen and its value.
pub fn golden_section(mut f: impl FnMut(f64) -> f64, a: f64, b: f64, rel_tol: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = if a <= b { (a, b) } else { (b, a) };
    let target = (hi - lo) * rel_tol;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    let mut best = if f1 <= f2 { (x1, f1) } else { (x2, f2) };
    while hi - lo > target {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
            if f1 < best.1 {
                best = (x1, f1);
            }
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
            if f2 < best.1 {
                best = (x2, f2);
            }
        }
    }
    best
}

/// Eigenvalues of a square complex matrix via the Schur decomposition.
pub fn eigenvalues(m: DMatrix<Complex64>) -> Vec<Complex64> {
    if m.nrows() == 0 {
        return Vec::new();
    }
    m.eigenvalues()
        .map(|v| v.iter().copied().collect())
        .unwrap_or_default()
}

/// Roots of `c[0] + c[1] x + ... + c[n] x^n`. Exactly-zero leading
/// coefficients are dropped, so a degenerate polynomial simply has fewer
/// roots. Companion-matrix eigenvalues are polished by Newton steps.
pub fn polynomial_roots(coeffs: &[Complex64]) -> Vec<Complex64> {
    let mut c = coeffs.to_vec();
    while c.last().is_some_and(|x| x.norm_sqr() == 0.0) {
        c.pop();
    }
    let degree = c.len().saturating_sub(1);
    if degree == 0 {
        return Vec::new();
    }
    let lead = c[degree];
    let mut companion = DMatrix::<Complex64>::zeros(degree, degree);
    for i in 1..degree {
        companion[(i, i - 1)] = Complex64::new(1.0, 0.0);
    }
    for i in 0..degree {
        companion[(i, degree - 1)] = -c[i] / lead;
    }
    let mut roots = eigenvalues(companion);
    for root in &mut roots {
        for _ in 0..3 {
            let (p, dp) = horner(&c, *root);
            if dp.norm_sqr() == 0.0 {
                break;
            }
            let step = p / dp;
            if !step.is_finite() {
                break;
            }
            *root -= step;
        }
    }
    roots.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    roots
}

fn horner(c: &[Complex64], x: Complex64) -> (Complex64, Complex64) {
    let mut p = Complex64::new(0.0, 0.0);
    let mut dp = Complex64::new(0.0, 0.0);
    for &coef in c.iter().rev() {
        dp = dp * x + p;
        p = p * x + coef;
    }
    (p, dp)
}

/// Product of two polynomials in ascending-coefficient form.
pub fn poly_mul(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![Complex64::new(0.0, 0.0); a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

pub fn poly_add(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    let n = a.len().max(b.len());
    (0..n)
        .map(|i| a.get(i).copied().unwrap_or_default() + b.get(i).copied().unwrap_or_default())
        .collect()
}
