//! Local majorants: `F = δ l(Q) Σ_{a∈τ} l(a) φ((x̃ − c_a)/l(a))` in the frame of
//! `Q`, with certificates for support, domination, Riesz regularity and the
//! integral bound.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bump::{BumpSum, Frame, Term};
use crate::cup::grad_sup;
use crate::dyadic::{dilate, pow2, rational_to_f64, DyadicSquare, Rational, Square};
use crate::error::{invalid, Result};
use crate::function::{
    cut_cone_check, essential_squares, normalize, rect_of, sharp_sup, CutConeReport, EssentialSet, FunctionOracle,
    Status,
};
use crate::regularize::{regularize, separation_report, RegularizeOptions, RegularizedFamily, SeparationCertificate};
use crate::riesz::{correction, lip_estimate, LipEstimate, RieszEngine, RieszOrders};
use crate::tail::{tail_volume_ratio, TailParameters};

/// Root of the normalized frame, `[0, 1)²`.
pub const UNIT_ROOT: DyadicSquare = DyadicSquare::new(0, 0, 0);

/// Reference-cell offsets where `|∇R_j φ|` peaks.
const PEAK_OFFSETS: [(f64, f64); 4] = [(0.55, 0.0), (-0.55, 0.0), (0.0, 0.55), (0.0, -0.55)];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RieszCheckOptions {
    /// Halton samples over `(3/2) Q`.
    pub samples: usize,
    /// Random close pairs for difference quotients.
    pub pairs: usize,
    /// Cells of `τ` probed at the peak offsets of the reference field.
    pub cell_probes: usize,
    pub seed: u64,
    pub orders: RieszOrders,
}

impl Default for RieszCheckOptions {
    fn default() -> Self {
        Self {
            samples: 1024,
            pairs: 256,
            cell_probes: 512,
            seed: 7,
            orders: RieszOrders::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalParams {
    pub tail: TailParameters,
    /// Deepest essential square searched in the normalized frame.
    pub depth_max: i32,
    pub regularize: RegularizeOptions,
    /// Side of the sample grid for `F ≥ f`.
    pub grid: usize,
    /// Riesz certificate; skipped when `None`.
    pub riesz: Option<RieszCheckOptions>,
    /// Run the separation and multiplicity certificate on `τ`.
    pub separation: bool,
}

impl Default for LocalParams {
    fn default() -> Self {
        Self {
            tail: TailParameters::default_ratio(),
            depth_max: 12,
            regularize: RegularizeOptions::default(),
            grid: 512,
            riesz: None,
            separation: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportCheck {
    pub dilated: Square,
    pub bounds: Option<(f64, f64, f64, f64)>,
    pub status: Status,
}

/// `F ≥ f` on the grid of cell midpoints of `Q`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominationCheck {
    pub grid: usize,
    pub min_gap: f64,
    pub witness: Option<(f64, f64)>,
    /// Deficit allowed by the depth truncation, `2^(-depth_max-1) δ l(Q)`.
    pub floor: f64,
    /// `(κ_F + κ) h √2/2`.
    pub margin: f64,
    pub violations: usize,
    pub status: Status,
}

/// `‖f̃‖_{L∞(a)} ≤ l(a)` for the cells of `τ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellBoundCheck {
    pub cells: usize,
    pub violations: usize,
    pub max_ratio: f64,
    pub witness: Option<DyadicSquare>,
    pub status: Status,
}

/// Integral bound: `∫F̃ / (κ_eff² ∫f̃)` and the literal `(δ²/κ²) ∫F / ∫_Q f`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegralCheck {
    pub integral_majorant: f64,
    pub integral_f: f64,
    pub ratio: f64,
    pub ratio_literal: f64,
    pub kappa_eff: f64,
    pub status: Status,
}

/// Per-seed sums `Σ_{b∈τ from c} l(b)³ / l(c)³` against the full tail ratio.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailChainCheck {
    pub max_ratio: f64,
    pub bound: f64,
    pub status: Status,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CutConeSummary {
    pub reports: Vec<CutConeReport>,
    pub min_ratio: f64,
    pub failures: usize,
    pub status: Status,
}

/// Riesz regularity of `F`: Lipschitz estimates of `R₁F`, `R₂F` and the
/// split of `∇R_jF` into neighbors, comparable non-neighbors and larger
/// non-neighbors of the cell containing the probe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RieszCheck {
    pub lip: [LipEstimate; 2],
    /// Estimates divided by `δ`.
    pub constant: f64,
    /// `parts[j] = [S₁, S₂, S₃]`, sup over the probes inside `Q`.
    pub parts: [[f64; 3]; 2],
    pub probes: usize,
    /// Pair quotients stay below the gradient sup within the allowance.
    pub consistent: bool,
    pub seconds: f64,
    pub status: Status,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalCertificates {
    pub support: SupportCheck,
    pub domination: DominationCheck,
    pub cells: CellBoundCheck,
    pub integral: IntegralCheck,
    pub tail_chain: TailChainCheck,
    pub cut_cone: CutConeSummary,
    pub riesz: Option<RieszCheck>,
    pub separation: Option<SeparationCertificate>,
}

impl LocalCertificates {
    /// Statuses of the checks, by name.
    pub fn statuses(&self) -> Vec<(&'static str, Status)> {
        let mut v = vec![
            ("support", self.support.status),
            ("domination", self.domination.status),
            ("cell-bounds", self.cells.status),
            ("integral", self.integral.status),
            ("tail-chain", self.tail_chain.status),
            ("cut-cone", self.cut_cone.status),
        ];
        if let Some(r) = &self.riesz {
            v.push(("riesz", r.status));
        }
        v
    }

    pub fn passed(&self) -> bool {
        self.statuses().iter().all(|(_, s)| *s != Status::Fail)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LocalBuild {
    /// `F` in the original coordinates, with its frame.
    pub majorant: BumpSum,
    /// `F̃` on `[0, 1)²` with unit amplitude.
    pub normalized: BumpSum,
    pub family: RegularizedFamily,
    pub essential: EssentialSet,
    pub certificates: LocalCertificates,
}

fn status(ok: bool) -> Status {
    if ok {
        Status::Pass
    } else {
        Status::Fail
    }
}

/// Terms of `F̃` over the cells of `τ`.
fn normalized_sum(fam: &RegularizedFamily) -> BumpSum {
    BumpSum::new(
        fam.tau
            .iter()
            .map(|c| Term {
                center: c.center(),
                scale: c.side(),
            })
            .collect(),
        1.0,
    )
}

/// Maps `F̃` to the frame of `Q`: centers `corner + l c`, scales `l l̃`, amplitude `δ`.
pub fn denormalize(sum: &BumpSum, q: &Square, delta: f64) -> BumpSum {
    let (x0, y0) = q.corner();
    let l = q.side;
    let terms = sum
        .terms
        .iter()
        .map(|t| Term {
            center: (x0 + l * t.center.0, y0 + l * t.center.1),
            scale: l * t.scale,
        })
        .collect();
    BumpSum::new(terms, delta * sum.amplitude)
}

/// Builds the local majorant of `f` on `Q` and certifies it.
pub fn build_local(f: &FunctionOracle, q: &Square, delta: f64, kappa: f64, params: &LocalParams) -> Result<LocalBuild> {
    if !(kappa.is_finite() && kappa > 0.0) {
        return Err(invalid(format!("kappa must be positive, got {kappa}")));
    }
    if params.depth_max < 0 || params.depth_max > 40 {
        return Err(invalid(format!("depth_max must lie in [0, 40], got {}", params.depth_max)));
    }
    if params.grid == 0 {
        return Err(invalid("sample grid must be nonempty"));
    }
    let (g, _) = normalize(f, q, delta)?;
    let kappa_n = kappa / delta;
    let kappa_eff = kappa_n.max(1.0);
    let essential = essential_squares(&g, UNIT_ROOT, params.depth_max);
    let family = regularize(&essential.squares, &UNIT_ROOT, &params.tail, params.regularize)?;
    let normalized = normalized_sum(&family);
    let mut majorant = denormalize(&normalized, q, delta);
    majorant.frame = Some(Frame {
        q: q.clone(),
        delta,
        kappa,
        kappa_eff,
    });
    let ctx = Ctx {
        f,
        g: &g,
        q,
        delta,
        kappa,
        kappa_eff,
        params,
    };
    let certificates = LocalCertificates {
        support: support_check(&majorant, q)?,
        domination: domination_check(&ctx, &majorant),
        cells: cell_bound_check(&ctx, &family),
        integral: integral_check(&ctx, &normalized),
        tail_chain: tail_chain_check(&family),
        cut_cone: cut_cone_summary(&g, &essential, kappa_eff),
        riesz: params.riesz.map(|o| riesz_check(&majorant, &family, q, delta, &o)),
        separation: params.separation.then(|| separation_report(&family)),
    };
    Ok(LocalBuild {
        majorant,
        normalized,
        family,
        essential,
        certificates,
    })
}

struct Ctx<'a> {
    f: &'a FunctionOracle,
    g: &'a FunctionOracle,
    q: &'a Square,
    delta: f64,
    kappa: f64,
    kappa_eff: f64,
    params: &'a LocalParams,
}

fn support_check(majorant: &BumpSum, q: &Square) -> Result<SupportCheck> {
    let dilated = dilate(q, Rational::new(3, 2))?;
    let inside = majorant.support_inside(&dilated);
    Ok(SupportCheck {
        dilated,
        bounds: majorant.support_bounds(),
        status: status(inside),
    })
}

fn domination_check(ctx: &Ctx, majorant: &BumpSum) -> DominationCheck {
    let n = ctx.params.grid;
    let (x0, y0, side) = ctx.q.bounds_f64();
    let h = side / n as f64;
    let floor = rational_to_f64(&pow2(-ctx.params.depth_max - 1)) * ctx.delta * side;
    let rows: Vec<(f64, (f64, f64), usize)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut best = (f64::INFINITY, (0.0, 0.0));
            let mut bad = 0;
            for j in 0..n {
                let x = (x0 + (i as f64 + 0.5) * h, y0 + (j as f64 + 0.5) * h);
                let gap = majorant.eval(x) - ctx.f.eval(x);
                // relative slack for rounding in the two evaluations
                if gap < -floor - 1e-12 * side {
                    bad += 1;
                }
                if gap < best.0 {
                    best = (gap, x);
                }
            }
            (best.0, best.1, bad)
        })
        .collect();
    let mut min_gap = f64::INFINITY;
    let mut witness = None;
    let mut violations = 0;
    for (g, x, b) in rows {
        violations += b;
        if g < min_gap {
            min_gap = g;
            witness = Some(x);
        }
    }
    let mult = (0..n)
        .step_by((n / 64).max(1))
        .flat_map(|i| (0..n).step_by((n / 64).max(1)).map(move |j| (i, j)))
        .map(|(i, j)| majorant.multiplicity((x0 + (i as f64 + 0.5) * h, y0 + (j as f64 + 0.5) * h)))
        .max()
        .unwrap_or(0);
    let kappa_f = majorant.amplitude * grad_sup() * mult as f64;
    DominationCheck {
        grid: n,
        min_gap,
        witness: if min_gap < 0.0 { witness } else { None },
        floor,
        margin: (kappa_f + ctx.kappa) * h * std::f64::consts::FRAC_1_SQRT_2,
        violations,
        status: status(violations == 0),
    }
}

fn cell_bound_check(ctx: &Ctx, fam: &RegularizedFamily) -> CellBoundCheck {
    let floor = rational_to_f64(&pow2(-ctx.params.depth_max - 1));
    let results: Vec<(f64, bool)> = fam
        .tau
        .par_iter()
        .map(|c| {
            let sq = c.to_square();
            let l = sq.side_f64();
            let cap = if c.depth > ctx.params.depth_max { l.max(floor) } else { l };
            let (bound, _) = ctx.g.sup_bound(rect_of(&sq));
            if bound <= cap {
                return (bound / l, true);
            }
            let mut m = 4;
            loop {
                let b = sharp_sup(ctx.g, &sq, l / (1u64 << m) as f64).expect("dyadic step");
                if b.upper <= cap || b.lower > cap || m >= 10 {
                    return (b.upper / l, b.upper <= cap);
                }
                m += 1;
            }
        })
        .collect();
    let mut out = CellBoundCheck {
        cells: fam.tau.len(),
        violations: 0,
        max_ratio: 0.0,
        witness: None,
        status: Status::Pass,
    };
    for (c, (r, ok)) in fam.tau.iter().zip(results) {
        out.max_ratio = out.max_ratio.max(r);
        if !ok {
            out.violations += 1;
            out.witness.get_or_insert(*c);
        }
    }
    out.status = status(out.violations == 0);
    out
}

fn integral_check(ctx: &Ctx, normalized: &BumpSum) -> IntegralCheck {
    let unit = (0.0, 1.0, 0.0, 1.0);
    let int_f = ctx.g.integral(unit, 1e-6);
    let int_maj = normalized.integral();
    let (ratio, literal) = if normalized.is_empty() {
        (0.0, 0.0)
    } else if int_f > 0.0 {
        let kn = ctx.kappa / ctx.delta;
        (int_maj / (ctx.kappa_eff * ctx.kappa_eff * int_f), int_maj / (kn * kn * int_f))
    } else {
        (f64::INFINITY, f64::INFINITY)
    };
    IntegralCheck {
        integral_majorant: int_maj,
        integral_f: int_f,
        ratio,
        ratio_literal: literal,
        kappa_eff: ctx.kappa_eff,
        status: status(ratio.is_finite()),
    }
}

fn tail_chain_check(fam: &RegularizedFamily) -> TailChainCheck {
    let mut sums = vec![Rational::from_integer(0); fam.seeds.len()];
    for (c, p) in fam.tau.iter().zip(&fam.provenance) {
        let l = c.side();
        sums[p.seed] += l * l * l;
    }
    let max_ratio = fam
        .seeds
        .iter()
        .zip(&sums)
        .map(|(s, v)| {
            let l = s.side();
            rational_to_f64(&(*v / (l * l * l)))
        })
        .fold(0.0, f64::max);
    let bound = rational_to_f64(&tail_volume_ratio(&fam.params, fam.p_max.min(40)));
    TailChainCheck {
        max_ratio,
        bound,
        status: status(max_ratio <= bound * (1.0 + 1e-12)),
    }
}

fn cut_cone_summary(g: &FunctionOracle, ess: &EssentialSet, kappa_eff: f64) -> CutConeSummary {
    let reports: Vec<CutConeReport> = ess
        .squares
        .par_iter()
        .map(|a| cut_cone_check(g, &a.to_square(), kappa_eff))
        .collect();
    let applicable = || reports.iter().filter(|r| r.status != Status::NotApplicable);
    let failures = applicable().filter(|r| r.status == Status::Fail).count();
    let min_ratio = applicable().map(|r| r.ratio).fold(f64::INFINITY, f64::min);
    CutConeSummary {
        min_ratio,
        failures,
        status: if reports.is_empty() { Status::NotApplicable } else { status(failures == 0) },
        reports,
    }
}

/// Hausdorff ℓ∞ distance between two axis-parallel squares given by center and side.
fn hausdorff(c1: (f64, f64), l1: f64, c2: (f64, f64), l2: f64) -> f64 {
    (c1.0 - c2.0).abs().max((c1.1 - c2.1).abs()) + 0.5 * (l1 - l2).abs()
}

/// Probe points of the Riesz certificate in the frame of `Q`.
pub fn riesz_probes(majorant: &BumpSum, q: &Square, opts: &RieszCheckOptions) -> Vec<(f64, f64)> {
    let (x0, y0, side) = q.bounds_f64();
    let (ox, oy, w) = (x0 - side / 4.0, y0 - side / 4.0, 1.5 * side);
    let mut pts: Vec<(f64, f64)> = crate::quadrature::halton(opts.samples)
        .into_iter()
        .map(|(u, v)| (ox + w * u, oy + w * v))
        .collect();
    let n = majorant.len();
    if n > 0 && opts.cell_probes > 0 {
        let stride = n.div_ceil(opts.cell_probes);
        for k in (0..n).step_by(stride) {
            let (c, l) = (majorant.center(k), majorant.scale(k));
            for (dx, dy) in PEAK_OFFSETS {
                pts.push((c.0 + l * dx, c.1 + l * dy));
            }
        }
    }
    pts
}

fn riesz_check(majorant: &BumpSum, fam: &RegularizedFamily, q: &Square, delta: f64, opts: &RieszCheckOptions) -> RieszCheck {
    let t0 = Instant::now();
    let engine = RieszEngine::new(opts.orders);
    let (x0, y0, side) = q.bounds_f64();
    let region = (x0 - side / 4.0, x0 + 1.25 * side, y0 - side / 4.0, y0 + 1.25 * side);
    let probes = riesz_probes(majorant, q, opts);
    // per probe: total gradient and, inside Q, the split [S₁, S₂, S₃]
    type Grad = [[f64; 2]; 2];
    let rows: Vec<(Grad, Option<[Grad; 3]>)> = probes
        .par_iter()
        .map(|&x| {
            let u = ((x.0 - x0) / side, (x.1 - y0) / side);
            let cell = fam.locate_point(u.0, u.1).map(|i| {
                let a = fam.tau[i];
                let c = a.center_f64();
                ((x0 + c.0 * side, y0 + c.1 * side), a.side_f64() * side)
            });
            let mut total = [[0.0; 2]; 2];
            let mut parts = [[[0.0; 2]; 2]; 3];
            for k in 0..majorant.len() {
                let t = engine.term(majorant, k, x);
                let s = cell.map(|(ca, la)| {
                    let (cb, lb) = (majorant.center(k), majorant.scale(k));
                    let ratio = la / lb;
                    if hausdorff(ca, la, cb, lb) <= 2.0 * la * (1.0 + 1e-12) && (0.5..=2.0).contains(&ratio) {
                        0
                    } else if lb <= 2.0 * la {
                        1
                    } else {
                        2
                    }
                });
                for j in 0..2 {
                    for i in 0..2 {
                        total[j][i] += t.grad[j][i];
                        if let Some(s) = s {
                            parts[s][j][i] += t.grad[j][i];
                        }
                    }
                }
            }
            (total, cell.map(|_| parts))
        })
        .collect();
    let mut split = [[0.0f64; 3]; 2];
    for (_, p) in &rows {
        if let Some(p) = p {
            for s in 0..3 {
                for j in 0..2 {
                    split[j][s] = split[j][s].max(p[s][j][0].hypot(p[s][j][1]));
                }
            }
        }
    }
    let corr = correction(majorant);
    let lip = [0usize, 1].map(|j| {
        let mut est = lip_estimate(
            |x| engine.values(majorant, x, corr)[j],
            |x| engine.jet(majorant, x).grad[j],
            region,
            0,
            opts.pairs,
            opts.seed.wrapping_add(j as u64),
        );
        for (p, (g, _)) in probes.iter().zip(&rows) {
            let m = g[j][0].hypot(g[j][1]);
            if m > est.grad_sup {
                est.grad_sup = m;
                est.grad_argmax = *p;
            }
        }
        est.samples = probes.len();
        est
    });
    let value = lip[0].value().max(lip[1].value());
    RieszCheck {
        constant: value / delta,
        lip: lip.clone(),
        parts: split,
        probes: probes.len(),
        consistent: lip.iter().all(LipEstimate::consistent),
        seconds: t0.elapsed().as_secs_f64(),
        status: status(value.is_finite()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::function::Recipe;

    fn square(x: i64, y: i64, side: i64) -> Square {
        Square::from_corner(Rational::from_integer(x as i128), Rational::from_integer(y as i128), Rational::from_integer(side as i128)).unwrap()
    }

    fn cone(apex: (f64, f64), height: f64, slope: f64) -> FunctionOracle {
        FunctionOracle::new(Recipe::Cone { apex, height, slope }).unwrap()
    }

    fn quick() -> LocalParams {
        LocalParams {
            grid: 128,
            ..LocalParams::default()
        }
    }

    #[test]
    fn zero_function_gives_empty_majorant() {
        let f = FunctionOracle::new(Recipe::ShiftedMax {
            base: Box::new(Recipe::Cone { apex: (0.5, 0.5), height: 0.2, slope: 1.0 }),
            shift: 0.5,
        })
        .unwrap();
        let b = build_local(&f, &square(0, 0, 1), 1.0, 1.0, &quick()).unwrap();
        assert!(b.majorant.is_empty());
        assert_eq!(b.majorant.eval((0.3, 0.3)), 0.0);
        assert!(b.certificates.passed());
        assert_eq!(b.certificates.integral.ratio, 0.0);
    }

    #[test]
    fn precondition_is_enforced() {
        let f = cone((0.5, 0.5), 0.8, 1.0);
        let e = build_local(&f, &square(0, 0, 1), 0.5, 1.0, &quick()).unwrap_err();
        assert!(matches!(e, crate::Error::InvalidArgument(_)));
        assert!(build_local(&f, &square(0, 0, 1), 1.0, 0.0, &quick()).is_err());
    }

    #[test]
    fn majorant_dominates_on_each_seed() {
        let f = cone((0.4, 0.55), 0.3, 1.0);
        let b = build_local(&f, &square(0, 0, 1), 1.0, 1.0, &quick()).unwrap();
        assert!(!b.essential.is_empty());
        for a in &b.essential.squares {
            let l = a.side_f64();
            let (cx, cy) = a.center_f64();
            for i in 0..9 {
                for j in 0..9 {
                    let x = (cx + l * (i as f64 / 8.0 - 0.5) * 0.999, cy + l * (j as f64 / 8.0 - 0.5) * 0.999);
                    assert!(b.majorant.eval(x) >= l - 1e-12);
                    assert!(b.majorant.eval(x) >= f.eval(x));
                }
            }
        }
        let c = &b.certificates;
        assert!(c.passed(), "{:?}", c.statuses());
        assert_eq!(c.domination.violations, 0);
        assert_eq!(c.cells.violations, 0);
    }

    #[test]
    fn support_and_integral_identities() {
        let f = cone((2.3, 1.4), 0.5, 0.8);
        let q = square(2, 1, 2);
        let b = build_local(&f, &q, 0.5, 0.8, &quick()).unwrap();
        assert_eq!(b.certificates.support.status, Status::Pass);
        let (x0, x1, y0, y1) = b.majorant.support_bounds().unwrap();
        assert!(x0 >= 1.5 && x1 <= 4.5 && y0 >= 0.5 && y1 <= 3.5);
        // ∫F = δ l(Q)³ ∫F̃
        let lhs = b.majorant.integral();
        let rhs = 0.5 * 8.0 * b.normalized.integral();
        assert!((lhs - rhs).abs() < 1e-12 * rhs);
        let frame = b.majorant.frame.as_ref().unwrap();
        assert_eq!(frame.kappa_eff, 1.6);
    }

    #[test]
    fn scale_covariance_is_exact() {
        let f = FunctionOracle::new(Recipe::RandomTentField {
            seed: 3,
            count: 8,
            height_cap: 0.3,
            slope: 2.0,
            region: (0.1, 0.9, 0.1, 0.9),
        })
        .unwrap();
        let base = build_local(&f, &square(0, 0, 1), 1.0, f.kappa, &quick()).unwrap();
        for s in [2i64, 4, 8] {
            let g = f.dilated(s as f64);
            let b = build_local(&g, &square(0, 0, s), 1.0, g.kappa, &quick()).unwrap();
            let k = Rational::from_integer(s as i128);
            assert_eq!(b.majorant.len(), base.majorant.len());
            for (t, u) in base.majorant.terms.iter().zip(&b.majorant.terms) {
                assert_eq!((t.center.0 * k, t.center.1 * k, t.scale * k), (u.center.0, u.center.1, u.scale));
            }
            let (r0, r1) = (base.certificates.integral.ratio, b.certificates.integral.ratio);
            assert!((r0 - r1).abs() <= 1e-6 * r0);
        }
    }

    #[test]
    fn riesz_split_adds_up() {
        let f = cone((0.4, 0.55), 0.3, 1.0);
        let mut p = quick();
        p.riesz = Some(RieszCheckOptions {
            samples: 64,
            pairs: 32,
            cell_probes: 16,
            ..RieszCheckOptions::default()
        });
        let b = build_local(&f, &square(0, 0, 1), 1.0, 1.0, &p).unwrap();
        let r = b.certificates.riesz.as_ref().unwrap();
        assert_eq!(r.status, Status::Pass);
        for j in 0..2 {
            let total = r.lip[j].grad_sup;
            assert!(total > 1.0 && total < 40.0);
            let [s1, s2, s3] = r.parts[j];
            assert!(s1 <= total + s2 + s3 + 1e-9);
            assert!(s1 > 1.0);
        }
    }
}
