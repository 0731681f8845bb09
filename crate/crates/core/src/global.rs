//! Majorants on the whole plane: flattening near the origin, the cover by the
//! squares `C_{i,j,k}`, one local majorant per cell, and checks of domination,
//! Poisson integrability and Riesz regularity.

use std::f64::consts::{FRAC_1_SQRT_2, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bump::BumpSum;
use crate::dyadic::{Rational, Square};
use crate::error::{invalid, Error, Result};
use crate::function::{normalize, rect_of, FunctionOracle, Recipe, Rect, Status};
use crate::local::{build_local, riesz_probes, LocalBuild, LocalParams, RieszCheckOptions};
use crate::quadrature::{adaptive, halton, midpoint_richardson};
use crate::riesz::{weighted_integral, RieszEngine, RieszOrders, C2};

/// The square `C_{i,j,k} = [i 2^k, (i+1) 2^k) × [j 2^k, (j+1) 2^k)`, or the
/// central `C_{0,0,0} = [−1, 1)²`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverCell {
    pub i: i64,
    pub j: i64,
    pub k: u32,
    pub square: Square,
}

impl CoverCell {
    pub fn new(i: i64, j: i64, k: u32) -> Self {
        let square = if (i, j, k) == (0, 0, 0) {
            Square::from_corner(Rational::from_integer(-1), Rational::from_integer(-1), Rational::from_integer(2))
        } else {
            let s = Rational::from_integer(1i128 << k);
            Square::from_corner(Rational::from_integer(i as i128) * s, Rational::from_integer(j as i128) * s, s)
        }
        .expect("positive side");
        Self { i, j, k, square }
    }

    pub fn rect(&self) -> Rect {
        rect_of(&self.square)
    }

    /// Half-open membership.
    pub fn contains(&self, x: (f64, f64)) -> bool {
        self.square.contains_point(x.0, x.1)
    }

    /// The `(3/2)`-dilation as a closed box.
    pub fn dilated_rect(&self) -> Rect {
        let (x0, y0, s) = self.square.bounds_f64();
        (x0 - s / 4.0, x0 + 1.25 * s, y0 - s / 4.0, y0 + 1.25 * s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlaneCover {
    pub k_max: u32,
    pub cells: Vec<CoverCell>,
}

pub fn plane_cover(k_max: u32) -> PlaneCover {
    let mut cells = vec![CoverCell::new(0, 0, 0)];
    for k in 0..=k_max {
        for i in -1..=1 {
            for j in -1..=1 {
                if (i, j) != (0, 0) {
                    cells.push(CoverCell::new(i, j, k));
                }
            }
        }
    }
    PlaneCover { k_max, cells }
}

impl PlaneCover {
    pub fn containing(&self, x: (f64, f64)) -> Vec<usize> {
        (0..self.cells.len()).filter(|&c| self.cells[c].contains(x)).collect()
    }

    pub fn multiplicity(&self, x: (f64, f64)) -> usize {
        self.cells.iter().filter(|c| c.contains(x)).count()
    }

    /// The smallest cell containing `x`.
    pub fn home(&self, x: (f64, f64)) -> Option<usize> {
        self.containing(x)
            .into_iter()
            .min_by(|&a, &b| self.cells[a].square.side.cmp(&self.cells[b].square.side))
    }

    /// Cells whose `(3/2)`-dilations meet that of cell `c`.
    pub fn neighbors(&self, c: usize) -> Vec<usize> {
        let a = self.cells[c].dilated_rect();
        (0..self.cells.len())
            .filter(|&d| d != c && boxes_meet(a, self.cells[d].dilated_rect()))
            .collect()
    }
}

fn boxes_meet(a: Rect, b: Rect) -> bool {
    a.0 < b.1 && b.0 < a.1 && a.2 < b.3 && b.2 < a.3
}

fn rects_overlap(a: Rect, b: Rect) -> bool {
    a.0 <= b.1 && b.0 <= a.1 && a.2 <= b.3 && b.2 <= a.3
}

/// Smallest `k` with the box inside `|x|_∞ < 2^k`.
pub fn required_k(r: Rect) -> u32 {
    let m = r.0.abs().max(r.1.abs()).max(r.2.abs()).max(r.3.abs());
    let mut k = 0;
    while ((1u64 << k) as f64) <= m {
        k += 1;
    }
    k
}

/// Poisson weight `(1 + |t|²)^(-3/2)`.
pub fn poisson_weight(t: (f64, f64)) -> f64 {
    (1.0 + t.0 * t.0 + t.1 * t.1).powf(-1.5)
}

/// `∫ Ω dP` by midpoint extrapolation over the support box.
pub fn poisson_integral(omega: &FunctionOracle, rel_tol: f64) -> f64 {
    match omega.support_rect() {
        None => 0.0,
        Some(r) => midpoint_richardson(&|x, y| omega.eval((x, y)) * poisson_weight((x, y)), (r.0, r.1), (r.2, r.3), 64, rel_tol, 4096).0,
    }
}

/// `∫_{|t| ≥ R} Ω dP` in polar coordinates.
pub fn poisson_tail(omega: &FunctionOracle, radius: f64, abs_tol: f64) -> f64 {
    let Some(r) = omega.support_rect() else {
        return 0.0;
    };
    let far = [(r.0, r.2), (r.0, r.3), (r.1, r.2), (r.1, r.3)]
        .iter()
        .map(|p| p.0.hypot(p.1))
        .fold(0.0, f64::max);
    let near = {
        let cx = r.0.max(0.0f64.min(r.1));
        let cy = r.2.max(0.0f64.min(r.3));
        cx.hypot(cy)
    };
    let lo = radius.max(near);
    if lo >= far {
        return 0.0;
    }
    // angular breaks fine enough that no panel misses the support
    let breaks: Vec<f64> = (1..256).map(|k| TAU * k as f64 / 256.0).collect();
    let inner = |rho: f64| {
        let e = adaptive(
            |t: f64| [omega.eval((rho * t.cos(), rho * t.sin()))],
            0.0,
            TAU,
            &breaks,
            abs_tol / (far - lo + 1.0),
            20_000,
        );
        rho * e.value[0] * (1.0 + rho * rho).powf(-1.5)
    };
    let rb: Vec<f64> = (1..16).map(|k| lo + (far - lo) * k as f64 / 16.0).collect();
    adaptive(|rho: f64| [inner(rho)], lo, far, &rb, abs_tol, 2_000).value[0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreprocessRecord {
    pub epsilon: f64,
    pub mu: f64,
    pub sigma: f64,
    /// Certified upper bound of `Ω` on the disk of radius `radius`.
    pub m_prime: f64,
    pub radius: f64,
    pub tail: f64,
    pub tail_target: f64,
    pub poisson_integral: f64,
    /// `max Ω̃(x) / (2μ|x|)` over the samples.
    pub growth_ratio: f64,
    /// `max Ω̃(x) / (ε|x|)` over the samples.
    pub c_ky: f64,
    pub samples: usize,
    /// Samples with `Ω̃ > 0` inside the flattening disk.
    pub disk_violations: usize,
    pub status: Status,
}

/// Certified upper bound of `Ω` on the closed disk `|x| ≤ R`.
fn disk_max(omega: &FunctionOracle, r: f64) -> f64 {
    let Some(b) = omega.support_rect() else {
        return 0.0;
    };
    let (x0, x1, y0, y1) = (b.0.max(-r), b.1.min(r), b.2.max(-r), b.3.min(r));
    if x0 > x1 || y0 > y1 {
        return 0.0;
    }
    let box_bound = omega.sup_bound((-r, r, -r, r)).0;
    let n = 512usize;
    let h = (x1 - x0).max(y1 - y0).max(1e-9) / n as f64;
    let reach = r + h * FRAC_1_SQRT_2;
    let mut best = 0.0f64;
    for i in 0..=n {
        for j in 0..=n {
            let p = (x0 + i as f64 * h, y0 + j as f64 * h);
            if p.0.hypot(p.1) <= reach {
                best = best.max(omega.eval(p));
            }
        }
    }
    // nodes cover the disk within ℓ∞ distance h/2
    (best + omega.kappa * h * FRAC_1_SQRT_2).min(box_bound)
}

fn flattened(omega: &FunctionOracle, m: f64) -> FunctionOracle {
    let mut f = FunctionOracle::new(Recipe::ShiftedMax {
        base: Box::new(omega.recipe.clone()),
        shift: m / omega.chart.value_scale,
    })
    .expect("nonnegative shift");
    f.chart = omega.chart;
    f.kappa = omega.kappa;
    f
}

/// Cover cells whose closed box meets the support box of `f`.
fn cells_meeting(cover: &PlaneCover, f: &FunctionOracle) -> Vec<usize> {
    match f.support_rect() {
        None => Vec::new(),
        Some(s) => (0..cover.cells.len()).filter(|&c| rects_overlap(cover.cells[c].rect(), s)).collect(),
    }
}

/// Flattens `Ω` to `Ω̃ = max(0, Ω − M′)`, with `M′` the maximum of `Ω` on the
/// disk of radius `R`; `R ≥ σ` is the smallest radius (to bisection accuracy)
/// with `∫_{|t|≥R} Ω dP ≤ ε³` and `‖Ω̃‖_{L∞(C)} ≤ ε l(C)/2` on every cover cell.
pub fn preprocess(omega: &FunctionOracle, epsilon: f64) -> Result<(FunctionOracle, PreprocessRecord)> {
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(invalid(format!("epsilon must be positive, got {epsilon}")));
    }
    let mu = omega.kappa;
    let reach = omega.support_radius();
    if !reach.is_finite() {
        return Err(Error::Unsupported("support is not compact".into()));
    }
    let sigma = (omega.eval((0.0, 0.0)) / mu).max(1.0);
    let target = epsilon.powi(3);
    let total = poisson_integral(omega, 1e-8);
    let cover = plane_cover(omega.support_rect().map_or(0, required_k));
    let tail_tol = 1e-3 * target;
    let ok = |r: f64| -> Option<(FunctionOracle, f64, f64)> {
        let tail = poisson_tail(omega, r, tail_tol);
        if tail > target {
            return None;
        }
        let m = disk_max(omega, r);
        let g = flattened(omega, m);
        let cells_ok = cells_meeting(&cover, &g)
            .iter()
            .all(|&c| normalize(&g, &cover.cells[c].square, epsilon / 2.0).is_ok());
        cells_ok.then_some((g, m, tail))
    };
    let (g, m, tail, radius) = if let Some((g, m, t)) = ok(sigma) {
        (g, m, t, sigma)
    } else {
        let (mut lo, mut hi) = (sigma, reach.max(sigma) * (1.0 + 1e-9) + 1e-9);
        let mut best = ok(hi).ok_or_else(|| invalid("flattening failed at the support radius"))?;
        for _ in 0..40 {
            let mid = 0.5 * (lo + hi);
            match ok(mid) {
                Some(v) => {
                    best = v;
                    hi = mid;
                }
                None => lo = mid,
            }
            if hi - lo <= 1e-6 * hi {
                break;
            }
        }
        (best.0, best.1, best.2, hi)
    };
    let n = 10_000;
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let b = omega.support_rect().unwrap_or((-1.0, 1.0, -1.0, 1.0));
    let (mut growth, mut cky, mut disk_bad) = (0.0f64, 0.0f64, 0);
    for _ in 0..n {
        let p = (rng.gen_range(b.0..=b.1), rng.gen_range(b.2..=b.3));
        let v = g.eval(p);
        let r = p.0.hypot(p.1);
        if v > 0.0 {
            if r <= radius {
                disk_bad += 1;
            }
            growth = growth.max(v / (2.0 * mu * r));
            cky = cky.max(v / (epsilon * r));
        }
    }
    let record = PreprocessRecord {
        epsilon,
        mu,
        sigma,
        m_prime: m,
        radius,
        tail,
        tail_target: target,
        poisson_integral: total,
        growth_ratio: growth,
        c_ky: cky,
        samples: n,
        disk_violations: disk_bad,
        status: if growth <= 1.0 && disk_bad == 0 && tail <= target { Status::Pass } else { Status::Fail },
    };
    Ok((g, record))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalParams {
    pub k_max: u32,
    pub local: LocalParams,
}

impl Default for GlobalParams {
    fn default() -> Self {
        Self {
            k_max: 6,
            local: LocalParams::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GlobalCell {
    pub cell: CoverCell,
    pub build: LocalBuild,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GlobalMajorant {
    pub epsilon: f64,
    pub record: PreprocessRecord,
    pub flattened: FunctionOracle,
    pub k_max: u32,
    pub depth_max: i32,
    /// Cells with a nonempty local majorant.
    pub cells: Vec<GlobalCell>,
    /// Cells meeting the support whose local majorant is empty.
    pub empty_cells: usize,
    /// All local terms, amplitude `ε/2`.
    pub sum: BumpSum,
}

impl GlobalMajorant {
    /// `Ω₁(x) = Σ F_{i,j,k}(x) + M′`.
    pub fn eval(&self, x: (f64, f64)) -> f64 {
        self.sum.eval(x) + self.record.m_prime
    }

    /// Largest deficit allowed by the depth truncation of the local builds.
    pub fn floor(&self) -> f64 {
        self.cells
            .iter()
            .map(|c| c.build.certificates.domination.floor)
            .fold(0.0, f64::max)
    }

    pub fn local_failures(&self) -> usize {
        self.cells.iter().filter(|c| !c.build.certificates.passed()).count()
    }
}

pub fn build_global(omega: &FunctionOracle, epsilon: f64, params: &GlobalParams) -> Result<GlobalMajorant> {
    let (g, record) = preprocess(omega, epsilon)?;
    let delta = epsilon / 2.0;
    let cover = plane_cover(params.k_max);
    if let Some(s) = g.support_rect() {
        let need = required_k(s);
        if need > params.k_max {
            return Err(Error::CoverTruncation { required: need });
        }
    }
    let idx = cells_meeting(&cover, &g);
    let built: Vec<Result<Option<GlobalCell>>> = idx
        .par_iter()
        .map(|&c| {
            let cell = cover.cells[c].clone();
            if g.sup_bound(cell.rect()).0 == 0.0 {
                return Ok(None);
            }
            let build = build_local(&g, &cell.square, delta, g.kappa, &params.local)?;
            Ok((!build.majorant.is_empty()).then_some(GlobalCell { cell, build }))
        })
        .collect();
    let mut cells = Vec::new();
    let mut empty = 0;
    for b in built {
        match b? {
            Some(c) => cells.push(c),
            None => empty += 1,
        }
    }
    let parts: Vec<&BumpSum> = cells.iter().map(|c| &c.build.majorant).collect();
    let sum = if parts.is_empty() { BumpSum::new(Vec::new(), delta) } else { BumpSum::merged(&parts) };
    Ok(GlobalMajorant {
        epsilon,
        record,
        flattened: g,
        k_max: params.k_max,
        depth_max: params.local.depth_max,
        cells,
        empty_cells: empty,
        sum,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerifyOptions {
    pub samples: usize,
    pub probes: usize,
    pub cell_probes: usize,
    pub seed: u64,
    pub orders: RieszOrders,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            samples: 100_000,
            probes: 512,
            cell_probes: 256,
            seed: 11,
            orders: RieszOrders::default(),
        }
    }
}

/// `Ω₁ ≥ Ω` on samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominationReport {
    pub samples: usize,
    pub min_gap: f64,
    pub tolerance: f64,
    pub violations: usize,
    pub witness: Option<(f64, f64)>,
    pub status: Status,
}

/// `∫ Ω₁ dP` against `ε^(-2) ∫ Ω dP`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegrabilityReport {
    pub majorant: f64,
    pub omega: f64,
    /// `ε² ∫Ω₁ dP / ∫Ω dP`.
    pub ratio: f64,
    pub status: Status,
}

/// Riesz regularity of `Ω₁` at probes, split into the near field `ω₂` (cells
/// `S(x)` and its neighbors) and the far field `ω₁`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegularityReport {
    pub probes: usize,
    /// `sup |∇R_j Ω₁|` over the probes.
    pub gradient: [f64; 2],
    /// `sup |∇R_j ω₂|`.
    pub near: [f64; 2],
    /// `sup |∇R_j ω₁|`.
    pub far: [f64; 2],
    /// `sup 2 c₂ ∫ω₁ / d(x, supp ω₁)³`.
    pub far_bound: f64,
    /// `sup (|∇R_j ω₂| + far bound)`.
    pub estimate: [f64; 2],
    /// `estimate / ε`.
    pub constant: [f64; 2],
    /// Probes with `d(x, supp ω₁) < min(l(S(x))/4, |x|/16)`.
    pub containment_violations: usize,
    pub witness: Option<(f64, f64)>,
    pub status: Status,
}

/// Points of `supp Ω̃` covered by more than one cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlapReport {
    pub max_multiplicity: usize,
    pub overlapping: usize,
    pub witness: Option<(f64, f64)>,
    pub status: Status,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalReport {
    pub preprocess: Status,
    pub domination: DominationReport,
    pub integrability: IntegrabilityReport,
    pub regularity: RegularityReport,
    pub overlap: OverlapReport,
    pub cells: usize,
    pub local_failures: usize,
}

impl GlobalReport {
    pub fn passed(&self) -> bool {
        [
            self.preprocess,
            self.domination.status,
            self.integrability.status,
            self.regularity.status,
            self.overlap.status,
        ]
        .iter()
        .all(|s| *s != Status::Fail)
            && self.local_failures == 0
    }
}

fn sample_box(g: &GlobalMajorant, omega: &FunctionOracle) -> Rect {
    let mut b = omega.support_rect().unwrap_or((-1.0, 1.0, -1.0, 1.0));
    if let Some(s) = g.sum.support_bounds() {
        b = (b.0.min(s.0), b.1.max(s.1), b.2.min(s.2), b.3.max(s.3));
    }
    let pad = 0.1 * (b.1 - b.0).max(b.3 - b.2);
    (b.0 - pad, b.1 + pad, b.2 - pad, b.3 + pad)
}

fn check_domination(g: &GlobalMajorant, omega: &FunctionOracle, opts: &VerifyOptions) -> DominationReport {
    let b = sample_box(g, omega);
    let tol = g.floor() + 1e-12 * (1.0 + g.record.m_prime);
    let chunks = 64usize;
    let per = opts.samples.div_ceil(chunks);
    let rows: Vec<(f64, (f64, f64), usize)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_mul(1000).wrapping_add(c as u64));
            let mut best = (f64::INFINITY, (0.0, 0.0));
            let mut bad = 0;
            for _ in 0..per.min(opts.samples.saturating_sub(c * per)) {
                let p = (rng.gen_range(b.0..=b.1), rng.gen_range(b.2..=b.3));
                let gap = g.eval(p) - omega.eval(p);
                if gap < -tol {
                    bad += 1;
                }
                if gap < best.0 {
                    best = (gap, p);
                }
            }
            (best.0, best.1, bad)
        })
        .collect();
    let mut rep = DominationReport {
        samples: opts.samples,
        min_gap: f64::INFINITY,
        tolerance: tol,
        violations: 0,
        witness: None,
        status: Status::Pass,
    };
    for (gap, p, bad) in rows {
        rep.violations += bad;
        if gap < rep.min_gap {
            rep.min_gap = gap;
            if gap < -tol {
                rep.witness = Some(p);
            }
        }
    }
    rep.status = if rep.violations == 0 { Status::Pass } else { Status::Fail };
    rep
}

fn check_integrability(g: &GlobalMajorant) -> IntegrabilityReport {
    let maj = TAU * g.record.m_prime + weighted_integral(&g.sum, poisson_weight);
    let om = g.record.poisson_integral;
    let ratio = if om > 0.0 { g.epsilon * g.epsilon * maj / om } else { 0.0 };
    IntegrabilityReport {
        majorant: maj,
        omega: om,
        ratio,
        status: if maj.is_finite() && ratio.is_finite() { Status::Pass } else { Status::Fail },
    }
}

fn check_regularity(g: &GlobalMajorant, opts: &VerifyOptions) -> RegularityReport {
    let mut rep = RegularityReport {
        probes: 0,
        gradient: [0.0; 2],
        near: [0.0; 2],
        far: [0.0; 2],
        far_bound: 0.0,
        estimate: [0.0; 2],
        constant: [0.0; 2],
        containment_violations: 0,
        witness: None,
        status: Status::Pass,
    };
    if g.cells.is_empty() {
        return rep;
    }
    let cover = plane_cover(g.k_max);
    let engine = RieszEngine::new(opts.orders);
    // cover index of each built cell
    let owner: Vec<usize> = g
        .cells
        .iter()
        .map(|c| {
            cover
                .cells
                .iter()
                .position(|d| (d.i, d.j, d.k) == (c.cell.i, c.cell.j, c.cell.k))
                .expect("built cell belongs to the cover")
        })
        .collect();
    let integrals: Vec<f64> = g.cells.iter().map(|c| c.build.majorant.integral()).collect();
    let bounds: Vec<Rect> = g
        .cells
        .iter()
        .map(|c| {
            let b = c.build.majorant.support_bounds().expect("nonempty");
            (b.0, b.1, b.2, b.3)
        })
        .collect();
    let b = g.sum.support_bounds().expect("nonempty");
    let pad = 0.25 * (b.1 - b.0).max(b.3 - b.2);
    let region = (b.0 - pad, b.1 + pad, b.2 - pad, b.3 + pad);
    let mut probes: Vec<(f64, f64)> = halton(opts.probes)
        .into_iter()
        .map(|(u, v)| (region.0 + u * (region.1 - region.0), region.2 + v * (region.3 - region.2)))
        .collect();
    for c in &g.cells {
        let per = RieszCheckOptions {
            samples: 0,
            cell_probes: opts.cell_probes.div_ceil(g.cells.len()),
            ..RieszCheckOptions::default()
        };
        probes.extend(riesz_probes(&c.build.majorant, &c.cell.square, &per));
    }
    type Row = ([[f64; 2]; 3], f64, bool);
    let rows: Vec<Row> = probes
        .par_iter()
        .map(|&x| {
            let home = cover.home(x);
            let near_cells: Vec<usize> = match home {
                Some(h) => {
                    let mut v = cover.neighbors(h);
                    v.push(h);
                    v
                }
                None => Vec::new(),
            };
            let mut grads = [[[0.0f64; 2]; 2]; 2];
            let mut far_mass = 0.0;
            let mut dist = f64::INFINITY;
            for (n, c) in g.cells.iter().enumerate() {
                let near = near_cells.contains(&owner[n]);
                let s = if near { 0 } else { 1 };
                if !near {
                    far_mass += integrals[n];
                    let r = bounds[n];
                    let dx = (r.0 - x.0).max(x.0 - r.1).max(0.0);
                    let dy = (r.2 - x.1).max(x.1 - r.3).max(0.0);
                    dist = dist.min(dx.hypot(dy));
                }
                let f = &c.build.majorant;
                for k in 0..f.len() {
                    let t = engine.term(f, k, x);
                    for j in 0..2 {
                        grads[s][j][0] += t.grad[j][0];
                        grads[s][j][1] += t.grad[j][1];
                    }
                }
            }
            let far_bound = if far_mass > 0.0 { 2.0 * C2 * far_mass / dist.powi(3) } else { 0.0 };
            let contained = match home {
                Some(h) if far_mass > 0.0 => {
                    let l = cover.cells[h].square.side_f64();
                    dist >= (l / 4.0).min(x.0.hypot(x.1) / 16.0) * (1.0 - 1e-12)
                }
                _ => true,
            };
            let norm = |v: [f64; 2]| v[0].hypot(v[1]);
            let mut out = [[0.0; 2]; 3];
            for j in 0..2 {
                out[0][j] = norm([grads[0][j][0] + grads[1][j][0], grads[0][j][1] + grads[1][j][1]]);
                out[1][j] = norm(grads[0][j]);
                out[2][j] = norm(grads[1][j]);
            }
            (out, far_bound, contained)
        })
        .collect();
    rep.probes = probes.len();
    for (p, (out, fb, ok)) in probes.iter().zip(&rows) {
        for j in 0..2 {
            rep.gradient[j] = rep.gradient[j].max(out[0][j]);
            rep.near[j] = rep.near[j].max(out[1][j]);
            rep.far[j] = rep.far[j].max(out[2][j]);
            rep.estimate[j] = rep.estimate[j].max(out[1][j] + fb);
        }
        rep.far_bound = rep.far_bound.max(*fb);
        if !ok {
            rep.containment_violations += 1;
            rep.witness.get_or_insert(*p);
        }
    }
    rep.constant = rep.estimate.map(|e| e / g.epsilon);
    let finite = rep.estimate.iter().all(|e| e.is_finite());
    rep.status = if finite && rep.containment_violations == 0 { Status::Pass } else { Status::Fail };
    rep
}

fn check_overlap(g: &GlobalMajorant, opts: &VerifyOptions) -> OverlapReport {
    let cover = plane_cover(g.k_max);
    let mut rep = OverlapReport {
        max_multiplicity: 0,
        overlapping: 0,
        witness: None,
        status: Status::Pass,
    };
    let Some(b) = g.flattened.support_rect() else {
        return rep;
    };
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0x0e4a);
    for _ in 0..opts.samples.min(20_000) {
        let p = (rng.gen_range(b.0..=b.1), rng.gen_range(b.2..=b.3));
        if g.flattened.eval(p) <= 0.0 {
            continue;
        }
        let m = cover.multiplicity(p);
        rep.max_multiplicity = rep.max_multiplicity.max(m);
        if m > 1 {
            rep.overlapping += 1;
            rep.witness.get_or_insert(p);
        }
    }
    rep.status = if rep.overlapping == 0 { Status::Pass } else { Status::Fail };
    rep
}

pub fn verify_global(g: &GlobalMajorant, omega: &FunctionOracle, opts: &VerifyOptions) -> GlobalReport {
    GlobalReport {
        preprocess: g.record.status,
        domination: check_domination(g, omega, opts),
        integrability: check_integrability(g),
        regularity: check_regularity(g, opts),
        overlap: check_overlap(g, opts),
        cells: g.cells.len(),
        local_failures: g.local_failures(),
    }
}
