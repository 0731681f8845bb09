//! Quadrature rules: Gauss–Legendre, adaptive Gauss–Kronrod, Gauss rules for
//! tabulated weights, Richardson-extrapolated midpoint sums, Halton points.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use nalgebra::{DMatrix, SymmetricEigen};

/// Nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    /// Rule mapped affinely to `[a, b]`.
    pub fn on(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let (m, h) = ((a + b) / 2.0, (b - a) / 2.0);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (m + h * x, h * w))
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
        self.on(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

/// Gauss–Legendre rule with `n` points (Newton iteration on `P_n`).
pub fn gauss_legendre(n: usize) -> Rule {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { x } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = nf * (x * pn - pm) / (x * x - 1.0);
            let dx = pn / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        if n == 1 {
            dp = 1.0;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    Rule { nodes, weights }
}

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// One 15-point Kronrod panel: (estimate, error estimate) per component.
fn gk15<const N: usize>(f: &impl Fn(f64) -> [f64; N], a: f64, b: f64) -> ([f64; N], f64) {
    let (c, h) = ((a + b) / 2.0, (b - a) / 2.0);
    let fc = f(c);
    let mut k = [0.0; N];
    let mut g = [0.0; N];
    for d in 0..N {
        k[d] = WGK[7] * fc[d];
        g[d] = WG[3] * fc[d];
    }
    for j in 0..7 {
        let dx = h * XGK[j];
        let (f1, f2) = (f(c - dx), f(c + dx));
        for d in 0..N {
            let s = f1[d] + f2[d];
            k[d] += WGK[j] * s;
            if j % 2 == 1 {
                g[d] += WG[j / 2] * s;
            }
        }
    }
    let mut err = 0.0f64;
    for d in 0..N {
        k[d] *= h;
        err = err.max((k[d] - g[d] * h).abs());
    }
    (k, err)
}

struct Panel<const N: usize> {
    a: f64,
    b: f64,
    val: [f64; N],
    err: f64,
}

impl<const N: usize> PartialEq for Panel<N> {
    fn eq(&self, o: &Self) -> bool {
        self.err == o.err
    }
}
impl<const N: usize> Eq for Panel<N> {}
impl<const N: usize> PartialOrd for Panel<N> {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl<const N: usize> Ord for Panel<N> {
    fn cmp(&self, o: &Self) -> Ordering {
        self.err.total_cmp(&o.err)
    }
}

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate<const N: usize> {
    pub value: [f64; N],
    pub error: f64,
    pub converged: bool,
}

/// Globally adaptive Gauss–Kronrod integration of a vector integrand over
/// `[a, b]`, pre-split at `breaks` (sorted, inside the interval).
pub fn adaptive<const N: usize>(
    f: impl Fn(f64) -> [f64; N],
    a: f64,
    b: f64,
    breaks: &[f64],
    abs_tol: f64,
    max_panels: usize,
) -> Estimate<N> {
    let mut heap = BinaryHeap::new();
    let mut pts = vec![a];
    pts.extend(breaks.iter().copied().filter(|&x| x > a && x < b));
    pts.push(b);
    for w in pts.windows(2) {
        if w[1] > w[0] {
            let (val, err) = gk15(&f, w[0], w[1]);
            heap.push(Panel {
                a: w[0],
                b: w[1],
                val,
                err,
            });
        }
    }
    let total_err = |h: &BinaryHeap<Panel<N>>| h.iter().map(|p| p.err).sum::<f64>();
    let mut err = total_err(&heap);
    let mut count = heap.len();
    while err > abs_tol && count < max_panels {
        let Some(p) = heap.pop() else { break };
        let m = (p.a + p.b) / 2.0;
        if m <= p.a || m >= p.b {
            heap.push(p);
            break;
        }
        let (v1, e1) = gk15(&f, p.a, m);
        let (v2, e2) = gk15(&f, m, p.b);
        err += e1 + e2 - p.err;
        heap.push(Panel {
            a: p.a,
            b: m,
            val: v1,
            err: e1,
        });
        heap.push(Panel {
            a: m,
            b: p.b,
            val: v2,
            err: e2,
        });
        count += 1;
        if count % 64 == 0 {
            err = total_err(&heap);
        }
    }
    let err = total_err(&heap);
    let mut value = [0.0; N];
    for p in heap.iter() {
        for d in 0..N {
            value[d] += p.val[d];
        }
    }
    Estimate {
        value,
        error: err,
        converged: err <= abs_tol,
    }
}

/// Gauss rule for the discrete measure `Σ w_i δ_{x_i}` (nonnegative weights)
/// by the discretized Stieltjes procedure and Golub–Welsch.
pub fn gauss_for_measure(xs: &[f64], ws: &[f64], n: usize) -> Rule {
    assert_eq!(xs.len(), ws.len());
    assert!(ws.iter().all(|&w| w >= 0.0), "weights must be nonnegative");
    let total: f64 = ws.iter().sum();
    assert!(total > 0.0, "measure has zero mass");
    let mut alpha = Vec::with_capacity(n);
    let mut beta = Vec::with_capacity(n);
    // orthonormal polynomials evaluated on the support
    let mut prev = vec![0.0; xs.len()];
    let mut cur: Vec<f64> = vec![1.0 / total.sqrt(); xs.len()];
    let mut b_prev = 0.0;
    for _ in 0..n {
        let a: f64 = xs
            .iter()
            .zip(ws)
            .zip(&cur)
            .map(|((x, w), p)| w * x * p * p)
            .sum();
        alpha.push(a);
        let mut next: Vec<f64> = (0..xs.len())
            .map(|i| (xs[i] - a) * cur[i] - b_prev * prev[i])
            .collect();
        let norm: f64 = next
            .iter()
            .zip(ws)
            .map(|(p, w)| w * p * p)
            .sum::<f64>()
            .sqrt();
        for v in &mut next {
            *v /= norm;
        }
        beta.push(norm);
        b_prev = norm;
        prev = std::mem::replace(&mut cur, next);
    }
    let mut j = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        j[(i, i)] = alpha[i];
        if i + 1 < n {
            j[(i, i + 1)] = beta[i];
            j[(i + 1, i)] = beta[i];
        }
    }
    let eig = SymmetricEigen::new(j);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|k| {
            let v0 = eig.eigenvectors[(0, k)];
            (eig.eigenvalues[k], total * v0 * v0)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    Rule {
        nodes: pairs.iter().map(|p| p.0).collect(),
        weights: pairs.iter().map(|p| p.1).collect(),
    }
}

/// Gauss rule for a nonnegative weight function on `[a, b]`, discretized by a
/// composite Gauss–Legendre rule.
pub fn gauss_for_weight(w: impl Fn(f64) -> f64, a: f64, b: f64, n: usize, panels: usize) -> Rule {
    let base = gauss_legendre(24);
    let h = (b - a) / panels as f64;
    let mut xs = Vec::with_capacity(panels * 24);
    let mut ws = Vec::with_capacity(panels * 24);
    for k in 0..panels {
        let lo = a + k as f64 * h;
        for (x, q) in base.on(lo, lo + h) {
            let v = w(x);
            if v > 0.0 {
                xs.push(x);
                ws.push(q * v);
            }
        }
    }
    gauss_for_measure(&xs, &ws, n)
}

/// Tensor midpoint sum of `f` over a rectangle with `n × n` cells.
pub fn midpoint_2d(f: &(impl Fn(f64, f64) -> f64 + Sync), x: (f64, f64), y: (f64, f64), n: usize) -> f64 {
    use rayon::prelude::*;
    let (hx, hy) = ((x.1 - x.0) / n as f64, (y.1 - y.0) / n as f64);
    let rows: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let xi = x.0 + (i as f64 + 0.5) * hx;
            (0..n).map(|j| f(xi, y.0 + (j as f64 + 0.5) * hy)).sum::<f64>()
        })
        .collect();
    // fixed-order reduction keeps sums reproducible
    rows.iter().sum::<f64>() * hx * hy
}

/// Midpoint rule with Richardson extrapolation, refined until two successive
/// extrapolants agree to `rel_tol`. Returns the value and the last change.
pub fn midpoint_richardson(
    f: &(impl Fn(f64, f64) -> f64 + Sync),
    x: (f64, f64),
    y: (f64, f64),
    n0: usize,
    rel_tol: f64,
    n_max: usize,
) -> (f64, f64) {
    let mut n = n0.max(2);
    let mut coarse = midpoint_2d(f, x, y, n);
    let mut last = f64::NAN;
    loop {
        let fine = midpoint_2d(f, x, y, 2 * n);
        let extrap = (4.0 * fine - coarse) / 3.0;
        let change = (extrap - last).abs();
        if change <= rel_tol * extrap.abs().max(1e-300) || 4 * n > n_max {
            return (extrap, if change.is_nan() { (fine - coarse).abs() } else { change });
        }
        last = extrap;
        coarse = fine;
        n *= 2;
    }
}

/// Radical inverse of `i` in base `b`.
fn radical_inverse(mut i: u64, b: u64) -> f64 {
    let (mut inv, mut f) = (0.0, 1.0 / b as f64);
    while i > 0 {
        inv += (i % b) as f64 * f;
        i /= b;
        f /= b as f64;
    }
    inv
}

/// First `n` points of the two-dimensional Halton sequence (bases 2 and 3),
/// skipping the origin.
pub fn halton(n: usize) -> Vec<(f64, f64)> {
    (1..=n as u64)
        .map(|i| (radical_inverse(i, 2), radical_inverse(i, 3)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_exactness() {
        for n in [1, 2, 5, 12, 24] {
            let r = gauss_legendre(n);
            assert!((r.weights.iter().sum::<f64>() - 2.0).abs() < 1e-14);
            for k in 0..2 * n {
                let exact = if k % 2 == 0 { 2.0 / (k as f64 + 1.0) } else { 0.0 };
                let got = r.integrate(-1.0, 1.0, |x| x.powi(k as i32));
                assert!((got - exact).abs() < 1e-13, "n={n} k={k}");
            }
        }
    }

    #[test]
    fn adaptive_handles_peaks_and_vectors() {
        let est = adaptive(
            |x| [1.0 / (1e-4 + x * x), x.cos()],
            -1.0,
            1.0,
            &[],
            1e-10,
            10_000,
        );
        assert!(est.converged);
        let exact = 2.0 * (1.0f64 / 1e-2).atan() / 1e-2;
        assert!((est.value[0] - exact).abs() < 1e-8);
        assert!((est.value[1] - 2.0 * 1f64.sin()).abs() < 1e-12);
        let with_break = adaptive(|x| [x.abs()], -1.0, 2.0, &[0.0], 1e-14, 10);
        assert!((with_break.value[0] - 2.5).abs() < 1e-14);
    }

    #[test]
    fn weighted_gauss_matches_legendre_for_unit_weight() {
        let r = gauss_for_weight(|_| 1.0, -1.0, 1.0, 6, 8);
        let g = gauss_legendre(6);
        for (a, b) in r.nodes.iter().zip(&g.nodes) {
            assert!((a - b).abs() < 1e-12);
        }
        for (a, b) in r.weights.iter().zip(&g.weights) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn weighted_gauss_exact_on_polynomials() {
        // weight x^2 on [0, 1]: moments 1/(k+3)
        let r = gauss_for_weight(|x| x * x, 0.0, 1.0, 5, 4);
        for k in 0..10 {
            let got: f64 = r.nodes.iter().zip(&r.weights).map(|(x, w)| w * x.powi(k)).sum();
            assert!((got - 1.0 / (k as f64 + 3.0)).abs() < 1e-13, "k={k}");
        }
    }

    #[test]
    fn richardson_midpoint() {
        let f = |x: f64, y: f64| (x * y).exp();
        let (v, _) = midpoint_richardson(&f, (0.0, 1.0), (0.0, 1.0), 4, 1e-10, 4096);
        // ∫∫ e^{xy} = Σ 1/(k!(k+1)^2)... computed by series
        let mut exact = 0.0;
        let mut fact = 1.0;
        for k in 0..30 {
            if k > 0 {
                fact *= k as f64;
            }
            exact += 1.0 / (fact * ((k + 1) as f64).powi(2));
        }
        assert!((v - exact).abs() < 1e-9);
    }

    #[test]
    fn halton_low_discrepancy() {
        let pts = halton(4096);
        assert_eq!(pts[0], (0.5, 1.0 / 3.0));
        // every 1/8 x 1/8 box receives close to its share
        let mut counts = [[0usize; 8]; 8];
        for (x, y) in &pts {
            counts[(x * 8.0) as usize][(y * 8.0) as usize] += 1;
        }
        for row in counts {
            for c in row {
                assert!((c as i64 - 64).abs() <= 3);
            }
        }
    }
}
