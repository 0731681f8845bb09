//! The smooth plateau cup `φ(x) = η(x₁) η(x₂)`.
//!
//! `η ≡ 1` on `[-1/2, 1/2]`, `η ≡ 0` outside `(-3/4, 3/4)`, and in between
//! `η(t) = ψ(4(3/4 − |t|))` with `ψ(s) = g(s) / (g(s) + g(1 − s))`,
//! `g(s) = e^{-1/s}` for `s > 0`.

use std::sync::OnceLock;

use crate::quadrature::{gauss_for_weight, Rule};

/// `∫ φ`: `(∫ η)² = (1 + ½·2·∫₀¹ψ)² = (5/4)²`, since `ψ(s) + ψ(1 − s) = 1`.
pub const C_PHI: f64 = 25.0 / 16.0;

/// Half-width of the plateau.
pub const PLATEAU: f64 = 0.5;
/// Half-width of the support.
pub const REACH: f64 = 0.75;

pub const PROFILE_ID: &str = "tensor-plateau-exp";

/// `ψ` and its first two derivatives on `(0, 1)`, written as `σ(h(s))` with
/// `h(s) = 1/(1 − s) − 1/s` and the logistic `σ`.
pub fn psi(s: f64) -> [f64; 3] {
    if s <= 0.0 {
        return [0.0, 0.0, 0.0];
    }
    if s >= 1.0 {
        return [1.0, 0.0, 0.0];
    }
    let h = 1.0 / (1.0 - s) - 1.0 / s;
    let e = (-h.abs()).exp();
    let sig = if h >= 0.0 { 1.0 / (1.0 + e) } else { e / (1.0 + e) };
    // σ(1 − σ) = e / (1 + e)², free of cancellation
    let ds = e / ((1.0 + e) * (1.0 + e));
    let (a, b) = (1.0 / (1.0 - s), 1.0 / s);
    let h1 = a * a + b * b;
    let h2 = 2.0 * (a * a * a - b * b * b);
    [sig, ds * h1, ds * (1.0 - 2.0 * sig) * h1 * h1 + ds * h2]
}

/// `η`, `η'`, `η''` at `t`.
pub fn eta(t: f64) -> [f64; 3] {
    let a = t.abs();
    if a <= PLATEAU {
        return [1.0, 0.0, 0.0];
    }
    if a >= REACH {
        return [0.0, 0.0, 0.0];
    }
    let [p, p1, p2] = psi(4.0 * (REACH - a));
    let sg = t.signum();
    [p, -4.0 * sg * p1, 16.0 * p2]
}

pub fn cup(x: f64, y: f64) -> f64 {
    eta(x)[0] * eta(y)[0]
}

pub fn cup_grad(x: f64, y: f64) -> [f64; 2] {
    let (ex, ey) = (eta(x), eta(y));
    [ex[1] * ey[0], ex[0] * ey[1]]
}

/// `[φ_xx, φ_xy, φ_yy]`.
pub fn cup_hessian(x: f64, y: f64) -> [f64; 3] {
    let (ex, ey) = (eta(x), eta(y));
    [ex[2] * ey[0], ex[1] * ey[1], ex[0] * ey[2]]
}

/// Value, gradient and Hessian in one pass: `[φ, φ_x, φ_y, φ_xx, φ_xy, φ_yy]`.
pub fn cup_jet(x: f64, y: f64) -> [f64; 6] {
    let (ex, ey) = (eta(x), eta(y));
    [
        ex[0] * ey[0],
        ex[1] * ey[0],
        ex[0] * ey[1],
        ex[2] * ey[0],
        ex[1] * ey[1],
        ex[0] * ey[2],
    ]
}

/// `sup |∇φ| = 4 sup ψ'` (attained on the axes of the transition band).
pub fn grad_sup() -> f64 {
    // ψ' is symmetric about 1/2 and maximal there
    4.0 * psi(0.5)[1]
}

/// Gauss rules adapted to the one-dimensional factors of the cup and its
/// derivatives, used for smooth (non-singular) integrands against `φ`.
#[derive(Debug, Clone)]
pub struct CupRules {
    /// weight `η` on `[-3/4, 3/4]`
    pub eta: Rule,
    /// weight `-η'` on `[1/2, 3/4]` (positive); mirrored for the left band
    pub band: Rule,
    /// weight `η''` split at `5/8` into its positive and negative parts on `[1/2, 3/4]`
    pub curv_outer: Rule,
    pub curv_inner: Rule,
}

impl CupRules {
    pub fn new(n: usize) -> Self {
        let panels = 64;
        Self {
            eta: gauss_for_weight(|t| eta(t)[0], -REACH, REACH, n, 4 * panels),
            band: gauss_for_weight(|t| -eta(t)[1], PLATEAU, REACH, n, panels),
            curv_outer: gauss_for_weight(|t| eta(t)[2].max(0.0), 0.625, REACH, n, panels),
            curv_inner: gauss_for_weight(|t| (-eta(t)[2]).max(0.0), PLATEAU, 0.625, n, panels),
        }
    }

    /// Shared rules of a given order (cached for the orders in use).
    pub fn get(n: usize) -> &'static CupRules {
        static CACHE: OnceLock<std::sync::Mutex<Vec<(usize, &'static CupRules)>>> = OnceLock::new();
        let cache = CACHE.get_or_init(Default::default);
        let mut guard = cache.lock().expect("rule cache poisoned");
        if let Some((_, r)) = guard.iter().find(|(k, _)| *k == n) {
            return r;
        }
        let r: &'static CupRules = Box::leak(Box::new(CupRules::new(n)));
        guard.push((n, r));
        r
    }

    /// Signed nodes/weights integrating `h(t) η'(t) dt` over both bands.
    pub fn deriv_nodes(&self) -> Vec<(f64, f64)> {
        // η' = -|η'| on the right band, +|η'| on the left band (mirror)
        let mut out = Vec::with_capacity(2 * self.band.len());
        for (&x, &w) in self.band.nodes.iter().zip(&self.band.weights) {
            out.push((x, -w));
            out.push((-x, w));
        }
        out
    }

    /// Signed nodes/weights integrating `h(t) η''(t) dt` over both bands.
    pub fn curv_nodes(&self) -> Vec<(f64, f64)> {
        let mut out = Vec::new();
        for (rule, sign) in [(&self.curv_outer, 1.0), (&self.curv_inner, -1.0)] {
            for (&x, &w) in rule.nodes.iter().zip(&rule.weights) {
                out.push((x, sign * w));
                out.push((-x, sign * w));
            }
        }
        out
    }

    pub fn eta_nodes(&self) -> Vec<(f64, f64)> {
        self.eta.nodes.iter().copied().zip(self.eta.weights.iter().copied()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::adaptive;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn plateau_and_support() {
        assert_eq!(cup(0.0, 0.0), 1.0);
        assert_eq!(cup(0.5, -0.5), 1.0);
        assert_eq!(cup(0.75, 0.0), 0.0);
        assert_eq!(cup(0.1, -0.9), 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..10_000 {
            let (x, y) = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let v = cup(x, y);
            assert!((0.0..=1.0).contains(&v));
            if x.abs().max(y.abs()) >= 0.75 {
                assert_eq!(v, 0.0);
            }
        }
    }

    #[test]
    fn psi_symmetry() {
        for k in 1..100 {
            let s = k as f64 / 100.0;
            let (a, b) = (psi(s), psi(1.0 - s));
            assert!((a[0] + b[0] - 1.0).abs() < 1e-15);
            assert!((a[1] - b[1]).abs() < 1e-12 * a[1].max(1.0));
            assert!((a[2] + b[2]).abs() < 1e-10 * a[2].abs().max(1.0));
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let h = 1e-5;
        for _ in 0..1000 {
            let (x, y) = (rng.gen_range(-0.8..0.8), rng.gen_range(-0.8..0.8));
            let g = cup_grad(x, y);
            let fx = (cup(x + h, y) - cup(x - h, y)) / (2.0 * h);
            let fy = (cup(x, y + h) - cup(x, y - h)) / (2.0 * h);
            assert!((g[0] - fx).abs() < 1e-6, "at ({x}, {y})");
            assert!((g[1] - fy).abs() < 1e-6);
            let hs = cup_hessian(x, y);
            let gx = (cup_grad(x + h, y)[0] - cup_grad(x - h, y)[0]) / (2.0 * h);
            let gxy = (cup_grad(x, y + h)[0] - cup_grad(x, y - h)[0]) / (2.0 * h);
            assert!((hs[0] - gx).abs() < 1e-4);
            assert!((hs[1] - gxy).abs() < 1e-4);
        }
    }

    #[test]
    fn integral_is_25_over_16() {
        let est = adaptive(|t| [eta(t)[0]], -0.75, 0.75, &[-0.5, 0.5], 1e-13, 10_000);
        assert!((est.value[0] - 1.25).abs() < 1e-12);
        assert!((est.value[0] * est.value[0] - C_PHI).abs() < 1e-11);
    }

    #[test]
    fn gradient_sup() {
        let mut best = 0.0f64;
        for k in 0..=20_000 {
            let t = 0.5 + 0.25 * k as f64 / 20_000.0;
            best = best.max(eta(t)[1].abs());
        }
        assert!((best - grad_sup()).abs() < 1e-6);
        assert!((grad_sup() - 8.0).abs() < 1e-12);
    }

    #[test]
    fn cup_rules_integrate_smooth_moments() {
        let r = CupRules::get(16);
        // ∫ η' t dt = -∫ η = -5/4 ; ∫ η'' t² dt = 2 ∫ η = 5/2
        let m1: f64 = r.deriv_nodes().iter().map(|(x, w)| w * x).sum();
        assert!((m1 + 1.25).abs() < 1e-12);
        let m2: f64 = r.curv_nodes().iter().map(|(x, w)| w * x * x).sum();
        assert!((m2 - 2.5).abs() < 1e-11);
        let m0: f64 = r.eta_nodes().iter().map(|(_, w)| w).sum();
        assert!((m0 - 1.25).abs() < 1e-12);
        // a smooth non-polynomial integrand against the band weight
        let f = |t: f64| 1.0 / (2.0 - t);
        let q: f64 = r.deriv_nodes().iter().map(|(x, w)| w * f(*x)).sum();
        let exact = adaptive(|t| [f(t) * eta(t)[1]], -0.75, 0.75, &[-0.5, 0.5], 1e-14, 10_000);
        assert!((q - exact.value[0]).abs() < 1e-12);
    }
}
