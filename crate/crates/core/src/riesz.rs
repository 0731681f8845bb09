//! Riesz transforms `R_j F(x) = c₂ p.v.∫ [(t_j − x_j)/|t − x|³ − t_j/(1 + |t|²)^{3/2}] F(t) dt`
//! of bump sums and their first derivatives.
//!
//! Two quadrature routes are provided. The principal-value route integrates
//! `F` directly in polar coordinates around `x`, subtracting `F(x)` on a disk.
//! The term route uses `R_j φ_b(x) = l_b R_j φ((x − c_b)/l_b)` and evaluates the
//! reference transform either as the weakly singular `c₂∫ ∂_j φ(s)/|s − y| ds`
//! (polar, near the support) or with cup-weighted tensor Gauss rules (away
//! from it). A Fourier-multiplier oracle on a periodic grid is independent of both.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::bump::BumpSum;
use crate::cup::{cup_jet, eta, PLATEAU, REACH};
use crate::error::{Error, Result};
use crate::quadrature::{adaptive, gauss_for_weight, gauss_legendre, halton, Rule};

/// `c₂ = 1/(2π)`.
pub const C2: f64 = 0.5 * std::f64::consts::FRAC_1_PI;

/// Quadrature orders of the term route.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RieszOrders {
    /// Polar rule per angular sector and per radial piece.
    pub near_theta: usize,
    pub near_r: usize,
    /// ℓ∞ gap (reference units) below which the polar rule is used.
    pub near_gap: f64,
    /// Tensor orders for gaps below `mid_gap`, below `far_gap`, and beyond.
    pub mid: usize,
    pub mid_gap: f64,
    pub far: usize,
    pub far_gap: f64,
    pub farthest: usize,
}

impl Default for RieszOrders {
    fn default() -> Self {
        Self {
            near_theta: 24,
            near_r: 32,
            near_gap: 0.375,
            mid: 16,
            mid_gap: 1.5,
            far: 10,
            far_gap: 4.0,
            farthest: 6,
        }
    }
}

impl RieszOrders {
    /// Roughly doubled orders, used as a refinement check.
    pub fn refined(&self) -> Self {
        Self {
            near_theta: 2 * self.near_theta,
            near_r: 2 * self.near_r,
            mid: 2 * self.mid,
            far: 2 * self.far,
            farthest: 2 * self.farthest,
            ..*self
        }
    }
}

/// Reference transforms of `φ` at `y`: `[R₁, R₂]` and `[∂₁R₁, ∂₁R₂ = ∂₂R₁, ∂₂R₂]`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RefJet {
    pub r: [f64; 2],
    pub d: [f64; 3],
}

impl RefJet {
    /// `∂_i R_j`.
    pub fn deriv(&self, j: usize, i: usize) -> f64 {
        match (i, j) {
            (0, 0) => self.d[0],
            (1, 1) => self.d[2],
            _ => self.d[1],
        }
    }
}

/// Tensor nodes `(s₁, s₂, w)` with `Σ w h(s) ≈ ∫ φ h`.
fn cup_tensor(n: usize) -> &'static [(f64, f64, f64)] {
    static CACHE: OnceLock<Mutex<HashMap<usize, &'static [(f64, f64, f64)]>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    let mut g = cache.lock().expect("rule cache poisoned");
    if let Some(r) = g.get(&n) {
        return r;
    }
    let band = gauss_for_weight(|t| eta(t)[0], PLATEAU, REACH, n, 64);
    let plateau = gauss_legendre(n);
    let mut axis: Vec<(f64, f64)> = Vec::new();
    for (&x, &w) in band.nodes.iter().zip(&band.weights) {
        axis.push((x, w));
        axis.push((-x, w));
    }
    axis.extend(plateau.on(-PLATEAU, PLATEAU));
    let mut nodes = Vec::with_capacity(axis.len() * axis.len());
    for &(x, wx) in &axis {
        for &(y, wy) in &axis {
            nodes.push((x, y, wx * wy));
        }
    }
    let leaked: &'static [(f64, f64, f64)] = Box::leak(nodes.into_boxed_slice());
    g.insert(n, leaked);
    leaked
}

fn gauss_cached(n: usize) -> &'static Rule {
    static CACHE: OnceLock<Mutex<HashMap<usize, &'static Rule>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    let mut g = cache.lock().expect("rule cache poisoned");
    if let Some(r) = g.get(&n) {
        return r;
    }
    let r: &'static Rule = Box::leak(Box::new(gauss_legendre(n)));
    g.insert(n, r);
    r
}

/// ℓ∞ gap between `y` and the closed support `[-3/4, 3/4]²`.
fn support_gap(y: (f64, f64)) -> f64 {
    (y.0.abs() - REACH).max(y.1.abs() - REACH).max(0.0)
}

/// Tensor quadrature against `φ` with the kernels `(s−y)_j/|s−y|³` and their `y`-gradients.
fn ref_tensor(y: (f64, f64), n: usize) -> RefJet {
    let mut acc = [0.0f64; 5];
    for &(s1, s2, w) in cup_tensor(n) {
        let (d1, d2) = (s1 - y.0, s2 - y.1);
        let r2 = d1 * d1 + d2 * d2;
        let inv = 1.0 / r2.sqrt();
        let inv3 = inv * inv * inv;
        let inv5 = inv3 / r2;
        acc[0] += w * d1 * inv3;
        acc[1] += w * d2 * inv3;
        acc[2] += w * (3.0 * d1 * d1 - r2) * inv5;
        acc[3] += w * 3.0 * d1 * d2 * inv5;
        acc[4] += w * (3.0 * d2 * d2 - r2) * inv5;
    }
    RefJet {
        r: [C2 * acc[0], C2 * acc[1]],
        d: [C2 * acc[2], C2 * acc[3], C2 * acc[4]],
    }
}

const LINES: [f64; 4] = [-REACH, -PLATEAU, PLATEAU, REACH];

/// Polar quadrature of `∫ ∂φ(s)/|s − y| ds`, split into angular sectors at the
/// band corners and into radial pieces at the band lines.
fn ref_polar(y: (f64, f64), n_theta: usize, n_r: usize) -> RefJet {
    use std::f64::consts::PI;
    let mut angles: Vec<f64> = Vec::with_capacity(17);
    for &a in &LINES {
        for &b in &LINES {
            let (dx, dy) = (a - y.0, b - y.1);
            if dx.abs().max(dy.abs()) > 1e-13 {
                angles.push(dy.atan2(dx));
            }
        }
    }
    angles.sort_by(f64::total_cmp);
    angles.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
    let first = angles[0];
    angles.push(first + 2.0 * PI);
    let gt = gauss_cached(n_theta);
    let gr = gauss_cached(n_r);
    let mut acc = [0.0f64; 5];
    let mut cuts: Vec<f64> = Vec::with_capacity(10);
    for w in angles.windows(2) {
        for (th, wt) in gt.on(w[0], w[1]) {
            let (c, s) = (th.cos(), th.sin());
            cuts.clear();
            cuts.push(0.0);
            for &v in &LINES {
                if c.abs() > 1e-300 {
                    let r = (v - y.0) / c;
                    if r > 0.0 {
                        cuts.push(r);
                    }
                }
                if s.abs() > 1e-300 {
                    let r = (v - y.1) / s;
                    if r > 0.0 {
                        cuts.push(r);
                    }
                }
            }
            cuts.sort_by(f64::total_cmp);
            for p in cuts.windows(2) {
                let (r0, r1) = (p[0], p[1]);
                if r1 - r0 <= 0.0 {
                    continue;
                }
                let m = 0.5 * (r0 + r1);
                let (mx, my) = ((y.0 + m * c).abs(), (y.1 + m * s).abs());
                let sup = mx.max(my);
                if sup >= REACH || sup <= PLATEAU {
                    continue;
                }
                for (r, wr) in gr.on(r0, r1) {
                    let j = cup_jet(y.0 + r * c, y.1 + r * s);
                    let w = wt * wr;
                    for k in 0..5 {
                        acc[k] += w * j[k + 1];
                    }
                }
            }
        }
    }
    RefJet {
        r: [C2 * acc[0], C2 * acc[1]],
        d: [C2 * acc[2], C2 * acc[3], C2 * acc[4]],
    }
}

/// Reference transforms of the unit cup at `y`.
pub fn reference(y: (f64, f64), orders: &RieszOrders) -> RefJet {
    let gap = support_gap(y);
    if gap < orders.near_gap {
        ref_polar(y, orders.near_theta, orders.near_r)
    } else if gap < orders.mid_gap {
        ref_tensor(y, orders.mid)
    } else if gap < orders.far_gap {
        ref_tensor(y, orders.far)
    } else {
        ref_tensor(y, orders.farthest)
    }
}

/// Gradient of the Riesz fields and their values (without correction) at `x`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FieldJet {
    /// `R_j F(x)` before the correction constant is subtracted.
    pub raw: [f64; 2],
    /// `grad[j][i] = ∂_i R_j F(x)`.
    pub grad: [[f64; 2]; 2],
}

/// Per-term evaluation of the Riesz fields of a bump sum.
#[derive(Debug, Clone)]
pub struct RieszEngine {
    pub orders: RieszOrders,
}

impl Default for RieszEngine {
    fn default() -> Self {
        Self {
            orders: RieszOrders::default(),
        }
    }
}

impl RieszEngine {
    pub fn new(orders: RieszOrders) -> Self {
        Self { orders }
    }

    /// Contribution of term `k` of `f` at `x`, amplitude included.
    pub fn term(&self, f: &BumpSum, k: usize, x: (f64, f64)) -> FieldJet {
        let (c, l) = (f.center(k), f.scale(k));
        let j = reference(((x.0 - c.0) / l, (x.1 - c.1) / l), &self.orders);
        let a = f.amplitude;
        FieldJet {
            raw: [a * l * j.r[0], a * l * j.r[1]],
            grad: [[a * j.d[0], a * j.d[1]], [a * j.d[1], a * j.d[2]]],
        }
    }

    /// Sum over all terms.
    pub fn jet(&self, f: &BumpSum, x: (f64, f64)) -> FieldJet {
        let mut out = FieldJet::default();
        for k in 0..f.len() {
            let t = self.term(f, k, x);
            for j in 0..2 {
                out.raw[j] += t.raw[j];
                for i in 0..2 {
                    out.grad[j][i] += t.grad[j][i];
                }
            }
        }
        out
    }

    /// `[R₁F(x), R₂F(x)]` including the correction constant.
    pub fn values(&self, f: &BumpSum, x: (f64, f64), corr: [f64; 2]) -> [f64; 2] {
        let j = self.jet(f, x);
        [j.raw[0] - corr[0], j.raw[1] - corr[1]]
    }
}

/// `c₂ ∫ t_j (1 + |t|²)^{-3/2} F(t) dt` for `j = 1, 2`.
pub fn correction(f: &BumpSum) -> [f64; 2] {
    let mut out = [0.0; 2];
    for k in 0..f.len() {
        let (c, l) = (f.center(k), f.scale(k));
        // resolve the weight's complex singularity at distance ~1/l
        let n = (16.0 + 8.0 * l.ceil()).min(48.0) as usize;
        let mut acc = [0.0; 2];
        for &(s1, s2, w) in cup_tensor(n) {
            let (t1, t2) = (c.0 + l * s1, c.1 + l * s2);
            let q = (1.0 + t1 * t1 + t2 * t2).powf(-1.5);
            acc[0] += w * t1 * q;
            acc[1] += w * t2 * q;
        }
        let s = f.amplitude * l * l * l * C2;
        out[0] += s * acc[0];
        out[1] += s * acc[1];
    }
    out
}

/// `∫ F w` for a smooth weight `w`, term by term with the cup tensor rule.
pub fn weighted_integral(f: &BumpSum, w: impl Fn((f64, f64)) -> f64) -> f64 {
    let mut total = 0.0;
    for k in 0..f.len() {
        let (c, l) = (f.center(k), f.scale(k));
        let n = (16.0 + 8.0 * l.ceil()).min(48.0) as usize;
        let acc: f64 = cup_tensor(n).iter().map(|&(s1, s2, q)| q * w((c.0 + l * s1, c.1 + l * s2))).sum();
        total += l * l * l * acc;
    }
    f.amplitude * total
}

/// Tolerances of the principal-value route.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PvOptions {
    pub abs_tol: f64,
    pub max_panels: usize,
}

impl Default for PvOptions {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            max_panels: 4000,
        }
    }
}

/// Lines `s_k = ±l/2, ±3l/4` around each term and the corners they form,
/// where the integrands of the principal-value route lose smoothness.
struct Seams {
    xs: Vec<f64>,
    ys: Vec<f64>,
    corners: Vec<(f64, f64)>,
}

impl Seams {
    fn of(f: &BumpSum) -> Self {
        let mut out = Seams {
            xs: Vec::new(),
            ys: Vec::new(),
            corners: Vec::new(),
        };
        for k in 0..f.len() {
            let (c, l) = (f.center(k), f.scale(k));
            let off = [-REACH * l, -PLATEAU * l, PLATEAU * l, REACH * l];
            for &a in &off {
                out.xs.push(c.0 + a);
                out.ys.push(c.1 + a);
                for &b in &off {
                    out.corners.push((c.0 + a, c.1 + b));
                }
            }
        }
        out
    }

    fn angles(&self, x: (f64, f64)) -> Vec<f64> {
        let tau = 2.0 * std::f64::consts::PI;
        let mut v: Vec<f64> = self
            .corners
            .iter()
            .filter(|p| (p.0 - x.0).abs().max((p.1 - x.1).abs()) > 1e-14)
            .map(|p| (p.1 - x.1).atan2(p.0 - x.0).rem_euclid(tau))
            .collect();
        v.sort_by(f64::total_cmp);
        v.dedup_by(|a, b| (*a - *b).abs() < 1e-13);
        v
    }

    fn radii(&self, x: (f64, f64), c: f64, s: f64, rho: f64) -> Vec<f64> {
        let mut v = Vec::new();
        let mut push = |r: f64| {
            if r > 0.0 && r < rho {
                v.push(r);
            }
        };
        if c != 0.0 {
            self.xs.iter().for_each(|&a| push((a - x.0) / c));
        }
        if s != 0.0 {
            self.ys.iter().for_each(|&a| push((a - x.1) / s));
        }
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    }
}

/// Polar principal value `∫₀^{2π} ω ∫₀^ρ (G(x + rω) − G(x))/r dr dθ` for
/// `M` scalar functions at once, each paired with both kernel components.
fn polar_pv<const M: usize, const N: usize>(
    g: impl Fn((f64, f64)) -> [f64; M],
    seams: &Seams,
    x: (f64, f64),
    rho: f64,
    opts: &PvOptions,
) -> Result<[f64; N]> {
    assert_eq!(N, 2 * M);
    let g0 = g(x);
    let inner_tol = opts.abs_tol / (8.0 * std::f64::consts::PI);
    let failed = std::cell::Cell::new(false);
    let breaks = seams.angles(x);
    let budget = opts.max_panels + breaks.len();
    let outer = adaptive(
        |th| {
            let (c, s) = (th.cos(), th.sin());
            let radii = seams.radii(x, c, s, rho);
            let e = adaptive(
                |r| {
                    let v = g((x.0 + r * c, x.1 + r * s));
                    let mut o = [0.0; M];
                    for m in 0..M {
                        o[m] = if r > 0.0 { (v[m] - g0[m]) / r } else { 0.0 };
                    }
                    o
                },
                0.0,
                rho,
                &radii,
                inner_tol,
                opts.max_panels + radii.len(),
            );
            if !e.converged {
                failed.set(true);
            }
            let mut o = [0.0; N];
            for m in 0..M {
                o[2 * m] = c * e.value[m];
                o[2 * m + 1] = s * e.value[m];
            }
            o
        },
        0.0,
        2.0 * std::f64::consts::PI,
        &breaks,
        opts.abs_tol / C2,
        budget,
    );
    if !outer.converged || failed.get() {
        return Err(Error::Accuracy {
            tolerance: opts.abs_tol,
            achieved: C2 * outer.error,
        });
    }
    Ok(outer.value.map(|v| C2 * v))
}

/// Radius of a disk around `x` containing the support of `f`.
fn pv_radius(f: &BumpSum, x: (f64, f64)) -> f64 {
    let (x0, x1, y0, y1) = f.support_bounds().expect("nonempty");
    let dx = (x.0 - x0).abs().max((x.0 - x1).abs());
    let dy = (x.1 - y0).abs().max((x.1 - y1).abs());
    (dx * dx + dy * dy).sqrt() * (1.0 + 1e-12)
}

/// `R_j F(x)` by principal-value quadrature, with the correction constant subtracted.
pub fn riesz_pv(f: &BumpSum, j: usize, x: (f64, f64), opts: &PvOptions) -> Result<f64> {
    Ok(riesz_pv_both(f, x, opts)?[j])
}

pub fn riesz_pv_both(f: &BumpSum, x: (f64, f64), opts: &PvOptions) -> Result<[f64; 2]> {
    if f.is_empty() {
        return Ok([0.0; 2]);
    }
    let v: [f64; 2] = polar_pv::<1, 2>(|t| [f.eval(t)], &Seams::of(f), x, pv_radius(f, x), opts)?;
    let c = correction(f);
    Ok([v[0] - c[0], v[1] - c[1]])
}

/// `∂_i R_j F(x)` as the principal value of `R_j` applied to `∂_i F`.
pub fn riesz_deriv(f: &BumpSum, j: usize, i: usize, x: (f64, f64), opts: &PvOptions) -> Result<f64> {
    Ok(riesz_deriv_all(f, x, opts)?[j][i])
}

/// All four `∂_i R_j F(x)`, indexed `[j][i]`.
pub fn riesz_deriv_all(f: &BumpSum, x: (f64, f64), opts: &PvOptions) -> Result<[[f64; 2]; 2]> {
    if f.is_empty() {
        return Ok([[0.0; 2]; 2]);
    }
    let v: [f64; 4] = polar_pv::<2, 4>(
        |t| {
            let j = f.jet(t);
            [j[1], j[2]]
        },
        &Seams::of(f),
        x,
        pv_radius(f, x),
        opts,
    )?;
    // v = [R₁∂₁F, R₂∂₁F, R₁∂₂F, R₂∂₂F]
    Ok([[v[0], v[2]], [v[1], v[3]]])
}

/// Riesz fields on a periodic grid via the Fourier multiplier `sign · i ξ_j/|ξ|`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    /// Lower-left node.
    pub origin: (f64, f64),
    pub h: f64,
    pub n: usize,
    /// Row-major by `(ix, iy) → ix * n + iy`, correction subtracted.
    pub values: [Vec<f64>; 2],
    /// The support occupies at most half of the period box.
    pub padding_ok: bool,
    /// Linear image field `γ (M x − ∫ t F)/L³` removed from the periodic result.
    pub image_slope: f64,
    /// Estimated wraparound error left after the image correction.
    pub wrap_estimate: f64,
}

impl SpectralField {
    pub fn node(&self, ix: usize, iy: usize) -> (f64, f64) {
        (
            self.origin.0 + ix as f64 * self.h,
            self.origin.1 + iy as f64 * self.h,
        )
    }

    pub fn at(&self, ix: usize, iy: usize) -> [f64; 2] {
        let k = ix * self.n + iy;
        [self.values[0][k], self.values[1][k]]
    }
}

fn fft2(data: &mut [Complex<f64>], n: usize, inverse: bool) {
    let mut planner = FftPlanner::new();
    let fft = if inverse {
        planner.plan_fft_inverse(n)
    } else {
        planner.plan_fft_forward(n)
    };
    for row in data.chunks_mut(n) {
        fft.process(row);
    }
    let mut col = vec![Complex::new(0.0, 0.0); n];
    for iy in 0..n {
        for ix in 0..n {
            col[ix] = data[ix * n + iy];
        }
        fft.process(&mut col);
        for ix in 0..n {
            data[ix * n + iy] = col[ix];
        }
    }
}

/// Periodic multiplier transform without the image correction, `[R₁, R₂]` raw.
fn periodic_transform(f: &BumpSum, center: (f64, f64), side: f64, n: usize, sign: f64) -> [Vec<f64>; 2] {
    let h = side / n as f64;
    let origin = (center.0 - side / 2.0, center.1 - side / 2.0);
    let mut data: Vec<Complex<f64>> = (0..n * n)
        .map(|k| {
            let (ix, iy) = (k / n, k % n);
            let p = (origin.0 + ix as f64 * h, origin.1 + iy as f64 * h);
            Complex::new(f.eval(p), 0.0)
        })
        .collect();
    fft2(&mut data, n, false);
    let freq = |m: usize| -> f64 {
        let m = m as i64;
        let m = if m >= n as i64 / 2 { m - n as i64 } else { m };
        2.0 * std::f64::consts::PI * m as f64 / side
    };
    let nyq = n / 2;
    let mut values = [Vec::new(), Vec::new()];
    for j in 0..2 {
        let mut d = data.clone();
        for ix in 0..n {
            for iy in 0..n {
                let (k1, k2) = (freq(ix), freq(iy));
                let norm = (k1 * k1 + k2 * k2).sqrt();
                let kj = if j == 0 { k1 } else { k2 };
                let on_nyquist = (j == 0 && ix == nyq) || (j == 1 && iy == nyq);
                let mult = if norm == 0.0 || on_nyquist {
                    Complex::new(0.0, 0.0)
                } else {
                    Complex::new(0.0, sign * kj / norm)
                };
                d[ix * n + iy] *= mult;
            }
        }
        fft2(&mut d, n, true);
        let scale = 1.0 / (n * n) as f64;
        values[j] = d.iter().map(|z| z.re * scale).collect();
    }
    values
}

/// `γ` in the periodic image field `γ (M x − ∫ t F)/L³`: the zero-mean periodic
/// kernel differs from the free one by a linear term near the origin. Measured
/// spectrally from a reference cup in boxes of side `L` and `2L` at equal spacing.
pub fn image_coefficient() -> f64 {
    static GAMMA: OnceLock<f64> = OnceLock::new();
    *GAMMA.get_or_init(|| {
        let f = BumpSum::single(
            (crate::dyadic::Rational::from_integer(0), crate::dyadic::Rational::from_integer(0)),
            crate::dyadic::Rational::from_integer(1),
        );
        let (side, n, k) = (16.0, 512usize, 4usize);
        let a = periodic_transform(&f, (0.0, 0.0), side, n, 1.0);
        let b = periodic_transform(&f, (0.0, 0.0), 2.0 * side, 2 * n, 1.0);
        let x = k as f64 * side / n as f64;
        let diff = a[0][(n / 2 + k) * n + n / 2] - b[0][(n + k) * 2 * n + n];
        diff * side.powi(3) / (0.875 * f.integral() * x)
    })
}

/// Spectral Riesz fields of `f` on an `n × n` grid over the box of side `side`
/// centered at `center`, with the leading periodic image field removed.
pub fn riesz_spectral(f: &BumpSum, center: (f64, f64), side: f64, n: usize, sign: f64) -> SpectralField {
    let h = side / n as f64;
    let origin = (center.0 - side / 2.0, center.1 - side / 2.0);
    let raw = periodic_transform(f, center, side, n, sign);
    let corr = correction(f);
    let mass = f.integral();
    let mut moment = [0.0; 2];
    for k in 0..f.len() {
        let (c, l) = (f.center(k), f.scale(k));
        let m = f.amplitude * crate::cup::C_PHI * l * l * l;
        moment[0] += m * c.0;
        moment[1] += m * c.1;
    }
    let slope = sign * image_coefficient() / side.powi(3);
    let mut values = [Vec::with_capacity(n * n), Vec::with_capacity(n * n)];
    for ix in 0..n {
        for iy in 0..n {
            let p = (origin.0 + ix as f64 * h, origin.1 + iy as f64 * h);
            let k = ix * n + iy;
            values[0].push(raw[0][k] - slope * (mass * p.0 - moment[0]) - corr[0]);
            values[1].push(raw[1][k] - slope * (mass * p.1 - moment[1]) - corr[1]);
        }
    }
    let (padding_ok, wrap_estimate) = match f.support_bounds() {
        Some((x0, x1, y0, y1)) => {
            let extent = (x1 - x0).max(y1 - y0);
            let reach = (x0 - center.0)
                .abs()
                .max((x1 - center.0).abs())
                .max((y0 - center.1).abs())
                .max((y1 - center.1).abs());
            (
                extent <= side / 2.0,
                image_coefficient().abs() * mass.abs() * reach.powi(3) / side.powi(5),
            )
        }
        None => (true, 0.0),
    };
    SpectralField {
        origin,
        h,
        n,
        values,
        padding_ok,
        image_slope: slope,
        wrap_estimate,
    }
}

/// Sign of the multiplier reproducing the principal-value route: the one with
/// the smaller disagreement at an off-center probe of the reference cup.
pub fn calibrate_sign() -> f64 {
    let f = BumpSum::single(
        (crate::dyadic::Rational::from_integer(0), crate::dyadic::Rational::from_integer(0)),
        crate::dyadic::Rational::from_integer(1),
    );
    let (n, side) = (128usize, 8.0);
    let ix = n / 2 + 5; // x = 5h = 0.3125
    let mut best = (f64::INFINITY, 0.0);
    for sign in [1.0, -1.0] {
        let s = riesz_spectral(&f, (0.0, 0.0), side, n, sign);
        let p = s.node(ix, n / 2);
        let pv = riesz_pv(&f, 0, p, &PvOptions::default()).expect("reference cup converges");
        let err = (s.at(ix, n / 2)[0] - pv).abs();
        if err < best.0 {
            best = (err, sign);
        }
    }
    best.1
}

/// Lipschitz estimate of a scalar field on a rectangle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LipEstimate {
    /// `max |∇ field|` over the sample set.
    pub grad_sup: f64,
    pub grad_argmax: (f64, f64),
    /// `max |field(p) − field(q)| / |p − q|` over close pairs.
    pub pair_sup: f64,
    pub samples: usize,
    pub pairs: usize,
    pub region: (f64, f64, f64, f64),
    pub allowance: f64,
}

impl LipEstimate {
    pub fn value(&self) -> f64 {
        self.grad_sup.max(self.pair_sup)
    }

    /// Pair quotients do not exceed the gradient bound beyond the allowance.
    pub fn consistent(&self) -> bool {
        self.pair_sup <= self.grad_sup * (1.0 + self.allowance) + self.allowance
    }
}

/// Lipschitz estimate from gradients on Halton points and difference
/// quotients over pairs at separation `pair_step` (relative to the region).
pub fn lip_estimate(
    value: impl Fn((f64, f64)) -> f64,
    grad: impl Fn((f64, f64)) -> [f64; 2],
    region: (f64, f64, f64, f64),
    n_samples: usize,
    n_pairs: usize,
    seed: u64,
) -> LipEstimate {
    use rand::{Rng, SeedableRng};
    let (x0, x1, y0, y1) = region;
    let map = |(u, v): (f64, f64)| (x0 + u * (x1 - x0), y0 + v * (y1 - y0));
    let mut best = (0.0f64, (x0, y0));
    for p in halton(n_samples).into_iter().map(map) {
        let g = grad(p);
        let m = g[0].hypot(g[1]);
        if m > best.0 {
            best = (m, p);
        }
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let step = 1e-3 * (x1 - x0).max(y1 - y0);
    let mut pair_sup = 0.0f64;
    for _ in 0..n_pairs {
        let p = (rng.gen_range(x0..x1), rng.gen_range(y0..y1));
        let th: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        let q = (p.0 + step * th.cos(), p.1 + step * th.sin());
        pair_sup = pair_sup.max((value(p) - value(q)).abs() / step);
    }
    LipEstimate {
        grad_sup: best.0,
        grad_argmax: best.1,
        pair_sup,
        samples: n_samples,
        pairs: n_pairs,
        region,
        allowance: 1e-3,
    }
}
