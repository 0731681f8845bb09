//! Nonnegative Lipschitz test functions with certified sup-norm brackets.
//!
//! Functions are built from declarative recipes (cones, pyramids, plateaus,
//! sums, maxima, downward shifts) and viewed through an affine chart
//! `x ↦ v · g(o + s x)`, which is how normalization and rescaling act on them.
//! Every recipe has an exact upper bound for its supremum over a box and, when
//! the supremum is attained at a computable point, a witness for it.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dyadic::{DyadicSquare, Square};
use crate::error::{invalid, Error, Result};
use crate::quadrature::midpoint_richardson;

/// Closed box `(x0, x1, y0, y1)`.
pub type Rect = (f64, f64, f64, f64);

pub fn rect_of(sq: &Square) -> Rect {
    let (x0, y0, s) = sq.bounds_f64();
    (x0, x0 + s, y0, y0 + s)
}

fn clamp_to(p: (f64, f64), r: Rect) -> (f64, f64) {
    (p.0.clamp(r.0, r.1), p.1.clamp(r.2, r.3))
}

/// A declarative test function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Recipe {
    /// `max(0, h − s |x − apex|)`.
    Cone {
        apex: (f64, f64),
        height: f64,
        slope: f64,
    },
    /// Sum of pyramids `max(0, h − s ‖x − c‖∞)`.
    TentSum { tents: Vec<Tent> },
    /// Maximum of `count` cones of common slope with apexes uniform in `region`
    /// and heights uniform in `(0, height_cap]`.
    RandomTentField {
        seed: u64,
        count: u32,
        height_cap: f64,
        slope: f64,
        region: (f64, f64, f64, f64),
    },
    /// `min(value, s · max(0, r − |x − c|))`: constant `value` on a disk, then a linear ramp.
    Constant {
        value: f64,
        center: (f64, f64),
        radius: f64,
        slope: f64,
    },
    /// `max(0, base − shift)`.
    ShiftedMax { base: Box<Recipe>, shift: f64 },
    /// Pointwise maximum of several recipes.
    Max { parts: Vec<Recipe> },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tent {
    pub center: (f64, f64),
    pub height: f64,
    pub slope: f64,
}

#[derive(Debug, Clone, PartialEq)]
enum Expr {
    Cone { c: (f64, f64), h: f64, s: f64 },
    Pyramid { c: (f64, f64), h: f64, s: f64 },
    Plateau { c: (f64, f64), v: f64, r: f64, s: f64 },
    Sum(Vec<Expr>),
    Max(Vec<Expr>),
    Shift(Box<Expr>, f64),
}

fn dist_euclid(p: (f64, f64), r: Rect) -> f64 {
    let q = clamp_to(p, r);
    (p.0 - q.0).hypot(p.1 - q.1)
}

fn dist_linf(p: (f64, f64), r: Rect) -> f64 {
    let q = clamp_to(p, r);
    (p.0 - q.0).abs().max((p.1 - q.1).abs())
}

impl Expr {
    fn eval(&self, x: (f64, f64)) -> f64 {
        match self {
            Expr::Cone { c, h, s } => (h - s * (x.0 - c.0).hypot(x.1 - c.1)).max(0.0),
            Expr::Pyramid { c, h, s } => (h - s * (x.0 - c.0).abs().max((x.1 - c.1).abs())).max(0.0),
            Expr::Plateau { c, v, r, s } => v.min(s * (r - (x.0 - c.0).hypot(x.1 - c.1)).max(0.0)),
            Expr::Sum(v) => v.iter().map(|e| e.eval(x)).sum(),
            Expr::Max(v) => v.iter().map(|e| e.eval(x)).fold(0.0, f64::max),
            Expr::Shift(b, m) => (b.eval(x) - m).max(0.0),
        }
    }

    /// Upper bound of the supremum over `r`, with a point attaining it when exact.
    fn sup(&self, r: Rect) -> (f64, Option<(f64, f64)>) {
        match self {
            Expr::Cone { c, h, s } => ((h - s * dist_euclid(*c, r)).max(0.0), Some(clamp_to(*c, r))),
            Expr::Pyramid { c, h, s } => ((h - s * dist_linf(*c, r)).max(0.0), Some(clamp_to(*c, r))),
            Expr::Plateau { c, v, r: rad, s } => (
                v.min(s * (rad - dist_euclid(*c, r)).max(0.0)),
                Some(clamp_to(*c, r)),
            ),
            Expr::Sum(v) => {
                let mut total = 0.0;
                let mut witness = None;
                let mut active = 0;
                for e in v {
                    let (u, w) = e.sup(r);
                    if u > 0.0 {
                        active += 1;
                        witness = w;
                    }
                    total += u;
                }
                // a single active summand makes the bound exact
                (total, if active <= 1 { witness.or(Some(clamp_to((r.0, r.2), r))) } else { None })
            }
            Expr::Max(v) => {
                let mut best = (0.0, Some(clamp_to((r.0, r.2), r)));
                for e in v {
                    let u = e.sup(r);
                    if u.0 > best.0 {
                        best = u;
                    }
                }
                best
            }
            Expr::Shift(b, m) => {
                let (u, w) = b.sup(r);
                ((u - m).max(0.0), w)
            }
        }
    }

    fn lipschitz(&self) -> f64 {
        match self {
            Expr::Cone { s, .. } | Expr::Pyramid { s, .. } | Expr::Plateau { s, .. } => *s,
            Expr::Sum(v) => v.iter().map(Expr::lipschitz).sum(),
            Expr::Max(v) => v.iter().map(Expr::lipschitz).fold(0.0, f64::max),
            Expr::Shift(b, _) => b.lipschitz(),
        }
    }

    /// Closed box containing the support, `None` when the support is empty.
    fn bbox(&self) -> Option<Rect> {
        let sq = |c: &(f64, f64), r: f64| Some((c.0 - r, c.0 + r, c.1 - r, c.1 + r));
        match self {
            Expr::Cone { c, h, s } | Expr::Pyramid { c, h, s } => sq(c, h / s),
            Expr::Plateau { c, r, .. } => sq(c, *r),
            Expr::Sum(v) | Expr::Max(v) => v.iter().filter_map(Expr::bbox).reduce(|a, b| {
                (a.0.min(b.0), a.1.max(b.1), a.2.min(b.2), a.3.max(b.3))
            }),
            Expr::Shift(b, m) => {
                let r = b.bbox()?;
                (b.sup(r).0 > *m).then_some(r)
            }
        }
    }

    /// Radius about the origin beyond which the function vanishes.
    fn reach(&self) -> f64 {
        let n = |c: &(f64, f64)| c.0.hypot(c.1);
        match self {
            Expr::Cone { c, h, s } => n(c) + h / s,
            Expr::Pyramid { c, h, s } => n(c) + std::f64::consts::SQRT_2 * h / s,
            Expr::Plateau { c, r, .. } => n(c) + r,
            Expr::Sum(v) | Expr::Max(v) => v.iter().map(Expr::reach).fold(0.0, f64::max),
            Expr::Shift(b, _) => b.reach(),
        }
    }
}

impl Recipe {
    fn compile(&self) -> Result<Expr> {
        let pos = |v: f64, what: &str| {
            if v.is_finite() && v > 0.0 {
                Ok(v)
            } else {
                Err(invalid(format!("{what} must be positive and finite, got {v}")))
            }
        };
        Ok(match self {
            Recipe::Cone { apex, height, slope } => Expr::Cone {
                c: *apex,
                h: pos(*height, "cone height")?,
                s: pos(*slope, "cone slope")?,
            },
            Recipe::TentSum { tents } => Expr::Sum(
                tents
                    .iter()
                    .map(|t| {
                        Ok(Expr::Pyramid {
                            c: t.center,
                            h: pos(t.height, "tent height")?,
                            s: pos(t.slope, "tent slope")?,
                        })
                    })
                    .collect::<Result<_>>()?,
            ),
            Recipe::RandomTentField {
                seed,
                count,
                height_cap,
                slope,
                region,
            } => {
                let (cap, s) = (pos(*height_cap, "height cap")?, pos(*slope, "slope")?);
                let (x0, x1, y0, y1) = *region;
                if !(x1 > x0 && y1 > y0) {
                    return Err(invalid("random tent field region is empty"));
                }
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                Expr::Max(
                    (0..*count)
                        .map(|_| {
                            let c = (rng.gen_range(x0..x1), rng.gen_range(y0..y1));
                            let h = cap * (1.0 - rng.gen::<f64>());
                            Expr::Cone { c, h, s }
                        })
                        .collect(),
                )
            }
            Recipe::Constant {
                value,
                center,
                radius,
                slope,
            } => Expr::Plateau {
                c: *center,
                v: pos(*value, "constant value")?,
                r: pos(*radius, "plateau radius")?,
                s: pos(*slope, "plateau slope")?,
            },
            Recipe::ShiftedMax { base, shift } => {
                if !(shift.is_finite() && *shift >= 0.0) {
                    return Err(invalid(format!("shift must be nonnegative, got {shift}")));
                }
                Expr::Shift(Box::new(base.compile()?), *shift)
            }
            Recipe::Max { parts } => Expr::Max(parts.iter().map(Recipe::compile).collect::<Result<_>>()?),
        })
    }

    /// Short name of the recipe kind.
    pub fn kind(&self) -> &'static str {
        match self {
            Recipe::Cone { .. } => "cone",
            Recipe::TentSum { .. } => "tent-sum",
            Recipe::RandomTentField { .. } => "random-tent-field",
            Recipe::Constant { .. } => "constant",
            Recipe::ShiftedMax { .. } => "shifted-max",
            Recipe::Max { .. } => "max",
        }
    }
}

/// Affine view `x ↦ value_scale · g(origin + scale · x)` of a recipe `g`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Chart {
    pub origin: (f64, f64),
    pub scale: f64,
    pub value_scale: f64,
}

impl Chart {
    pub const IDENTITY: Chart = Chart {
        origin: (0.0, 0.0),
        scale: 1.0,
        value_scale: 1.0,
    };

    fn apply(&self, x: (f64, f64)) -> (f64, f64) {
        (self.origin.0 + self.scale * x.0, self.origin.1 + self.scale * x.1)
    }

    fn apply_rect(&self, r: Rect) -> Rect {
        let (a, b) = (self.apply((r.0, r.2)), self.apply((r.1, r.3)));
        (a.0, b.0, a.1, b.1)
    }

    /// `self ∘ inner`: first `inner`'s argument map, then `self`'s.
    fn then(&self, inner: &Chart) -> Chart {
        Chart {
            origin: self.apply(inner.origin),
            scale: self.scale * inner.scale,
            value_scale: self.value_scale * inner.value_scale,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct OracleRepr {
    recipe: Recipe,
    #[serde(default = "identity_chart")]
    chart: Chart,
    kappa: Option<f64>,
}

fn identity_chart() -> Chart {
    Chart::IDENTITY
}

/// A nonnegative Lipschitz function with a declared Lipschitz constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "OracleRepr", into = "OracleRepr")]
pub struct FunctionOracle {
    pub recipe: Recipe,
    pub chart: Chart,
    /// Declared Lipschitz constant in the chart's coordinates.
    pub kappa: f64,
    expr: Expr,
}

impl TryFrom<OracleRepr> for FunctionOracle {
    type Error = Error;
    fn try_from(r: OracleRepr) -> Result<Self> {
        let mut f = FunctionOracle::new(r.recipe)?;
        f.chart = r.chart;
        f.kappa = match r.kappa {
            Some(k) => k,
            None => f.expr.lipschitz() * r.chart.scale * r.chart.value_scale,
        };
        Ok(f)
    }
}

impl From<FunctionOracle> for OracleRepr {
    fn from(f: FunctionOracle) -> Self {
        OracleRepr {
            recipe: f.recipe,
            chart: f.chart,
            kappa: Some(f.kappa),
        }
    }
}

/// Certified bracket `lower ≤ ‖f‖_{L∞(a)} ≤ upper`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupBracket {
    pub lower: f64,
    pub upper: f64,
}

impl SupBracket {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

impl FunctionOracle {
    /// Oracle of a recipe with the Lipschitz constant its construction guarantees.
    pub fn new(recipe: Recipe) -> Result<Self> {
        let expr = recipe.compile()?;
        Ok(Self {
            kappa: expr.lipschitz(),
            recipe,
            chart: Chart::IDENTITY,
            expr,
        })
    }

    pub fn eval(&self, x: (f64, f64)) -> f64 {
        self.chart.value_scale * self.expr.eval(self.chart.apply(x))
    }

    /// `|x|` beyond which the function vanishes.
    pub fn support_radius(&self) -> f64 {
        let o = self.chart.origin;
        (o.0.hypot(o.1) + self.expr.reach()) / self.chart.scale
    }

    /// Closed box containing the support, `None` when `f ≡ 0` is certified.
    pub fn support_rect(&self) -> Option<Rect> {
        let r = self.expr.bbox()?;
        let (s, o) = (self.chart.scale, self.chart.origin);
        Some(((r.0 - o.0) / s, (r.1 - o.0) / s, (r.2 - o.1) / s, (r.3 - o.1) / s))
    }

    /// Exact upper bound of the supremum over the closed box, and a point
    /// attaining it when the bound is attained.
    pub fn sup_bound(&self, r: Rect) -> (f64, Option<(f64, f64)>) {
        let (u, w) = self.expr.sup(self.chart.apply_rect(r));
        let back = |p: (f64, f64)| {
            let s = self.chart.scale;
            clamp_to(((p.0 - self.chart.origin.0) / s, (p.1 - self.chart.origin.1) / s), r)
        };
        (self.chart.value_scale * u, w.map(back))
    }

    /// The same recipe viewed through `chart ∘ self.chart`, with Lipschitz
    /// constant rescaled accordingly.
    pub fn reparametrized(&self, chart: Chart) -> Self {
        let mut f = self.clone();
        f.chart = self.chart.then(&chart);
        f.kappa = self.kappa * chart.scale * chart.value_scale;
        f
    }

    /// `u ↦ s f(u / s)`: same Lipschitz constant, sup and support scaled by `s`.
    pub fn dilated(&self, s: f64) -> Self {
        self.reparametrized(Chart {
            origin: (0.0, 0.0),
            scale: 1.0 / s,
            value_scale: s,
        })
    }

    /// Largest difference quotient over random pairs in the box (a spot check of `kappa`).
    pub fn spot_check_lipschitz(&self, r: Rect, pairs: usize, seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let scale = (r.1 - r.0).max(r.3 - r.2);
        let mut worst = 0.0f64;
        for k in 0..pairs {
            let p = (rng.gen_range(r.0..=r.1), rng.gen_range(r.2..=r.3));
            // mix long and short pairs
            let len = scale * 10f64.powi(-((k % 4) as i32));
            let th: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            let q = (p.0 + len * th.cos(), p.1 + len * th.sin());
            worst = worst.max((self.eval(p) - self.eval(q)).abs() / len);
        }
        worst
    }

    /// `∫_r f` by midpoint extrapolation to relative tolerance `rel_tol`.
    pub fn integral(&self, r: Rect, rel_tol: f64) -> f64 {
        if self.sup_bound(r).0 == 0.0 {
            return 0.0;
        }
        midpoint_richardson(&|x, y| self.eval((x, y)), (r.0, r.1), (r.2, r.3), 32, rel_tol, 4096).0
    }
}

/// Sample bracket on the node grid `corner + step · (i, j)`, `0 ≤ i, j ≤ n`,
/// where `n = side / step`. Every point of the square lies within ℓ∞ distance
/// `step/2` of a node, so `upper = lower + κ step √2/2`. When `n` is even the
/// coarser node grids are subgrids and the smallest of their upper bounds is
/// kept, which makes the bracket monotone under halving of the step.
pub fn certified_sup(f: &FunctionOracle, a: &Square, step: f64) -> Result<SupBracket> {
    let (x0, y0, side) = a.bounds_f64();
    if !(step > 0.0) {
        return Err(invalid("sample step must be positive"));
    }
    let n = (side / step).round();
    if (n * step - side).abs() > 1e-9 * side || n < 1.0 {
        return Err(invalid(format!("step {step} does not divide side {side}")));
    }
    let n = n as usize;
    let mut levels = vec![1usize];
    while n % (2 * levels.last().unwrap()) == 0 {
        levels.push(2 * levels.last().unwrap());
    }
    let mut best = vec![0.0f64; levels.len()];
    for i in 0..=n {
        for j in 0..=n {
            let v = f.eval((x0 + i as f64 * step, y0 + j as f64 * step));
            for (k, &m) in levels.iter().enumerate() {
                if i % m == 0 && j % m == 0 {
                    best[k] = best[k].max(v);
                } else {
                    break;
                }
            }
        }
    }
    let rad = f.kappa * std::f64::consts::FRAC_1_SQRT_2 * step;
    let mut upper = f64::INFINITY;
    for (k, &m) in levels.iter().enumerate() {
        upper = upper.min(best[k] + rad * m as f64);
    }
    Ok(SupBracket { lower: best[0], upper })
}

/// [`certified_sup`] tightened by the recipe's exact box bound and witness.
pub fn sharp_sup(f: &FunctionOracle, a: &Square, step: f64) -> Result<SupBracket> {
    let b = certified_sup(f, a, step)?;
    let (bound, witness) = f.sup_bound(rect_of(a));
    let upper = b.upper.min(bound);
    let lower = witness.map_or(b.lower, |w| b.lower.max(f.eval(w)));
    Ok(SupBracket {
        lower: lower.min(upper),
        upper,
    })
}

/// Bracket with a sample step of `side / 2^m`, `m` grown from `m0` until the
/// bracket decides `threshold` or `m_max` is reached.
fn bracket_deciding(f: &FunctionOracle, a: &Square, threshold: f64, m0: u32, m_max: u32) -> SupBracket {
    let side = a.side_f64();
    let mut m = m0;
    loop {
        let b = sharp_sup(f, a, side / (1u64 << m) as f64).expect("dyadic step divides the side");
        if b.lower >= threshold || b.upper < threshold || m >= m_max {
            return b;
        }
        m += 1;
    }
}

/// Maximal essential squares with their brackets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EssentialSet {
    pub squares: Vec<DyadicSquare>,
    pub brackets: Vec<SupBracket>,
    /// Classified essential because the bracket could not decide.
    pub ambiguous: Vec<bool>,
    pub examined: usize,
}

impl EssentialSet {
    pub fn len(&self) -> usize {
        self.squares.len()
    }

    pub fn is_empty(&self) -> bool {
        self.squares.is_empty()
    }
}

/// Largest refinement exponent used when a bracket straddles the threshold.
const MAX_REFINE: u32 = 9;

/// Maximal dyadic squares `a ⊆ root`, `depth(a) ≤ depth_max`, with
/// `‖f‖_{L∞(a)} ≥ l(a)/2`, found top-down; squares whose bracket straddles the
/// threshold after refinement are classified essential.
pub fn essential_squares(f: &FunctionOracle, root: DyadicSquare, depth_max: i32) -> EssentialSet {
    let mut out = EssentialSet {
        squares: Vec::new(),
        brackets: Vec::new(),
        ambiguous: Vec::new(),
        examined: 0,
    };
    if depth_max < root.depth {
        return out;
    }
    // node spacing with κ step √2/2 ≤ l/8
    let m0 = ((4.0 * std::f64::consts::SQRT_2 * f.kappa).log2().ceil().max(2.0) as u32).min(MAX_REFINE);
    let floor = 0.5 * crate::dyadic::rational_to_f64(&crate::dyadic::pow2(-depth_max));
    let mut stack = vec![root];
    while let Some(a) = stack.pop() {
        out.examined += 1;
        let sq = a.to_square();
        let l = sq.side_f64();
        let t = 0.5 * l;
        let (bound, _) = f.sup_bound(rect_of(&sq));
        let b = if bound < t {
            SupBracket {
                lower: 0.0,
                upper: bound,
            }
        } else {
            bracket_deciding(f, &sq, t, m0, MAX_REFINE.max(m0))
        };
        if b.upper < t {
            // a descendant at depth ≤ depth_max can be essential only if sup ≥ 2^-depth_max / 2
            if a.depth < depth_max && b.upper >= floor {
                stack.extend(a.children());
            }
            continue;
        }
        out.ambiguous.push(b.lower < t);
        out.squares.push(a);
        out.brackets.push(b);
    }
    let mut idx: Vec<usize> = (0..out.squares.len()).collect();
    idx.sort_by_key(|&i| out.squares[i]);
    out.squares = idx.iter().map(|&i| out.squares[i]).collect();
    out.brackets = idx.iter().map(|&i| out.brackets[i]).collect();
    out.ambiguous = idx.iter().map(|&i| out.ambiguous[i]).collect();
    out
}

/// The normalized function `f̃(x) = f(corner_Q + l(Q) x)/(δ l(Q))` on `[0, 1)²`,
/// with Lipschitz constant `κ/δ`.
pub fn normalize(f: &FunctionOracle, q: &Square, delta: f64) -> Result<(FunctionOracle, f64)> {
    if !(delta.is_finite() && delta > 0.0) {
        return Err(invalid(format!("delta must be positive, got {delta}")));
    }
    let l = q.side_f64();
    let cap = delta * l;
    let b = bracket_deciding(f, q, cap * (1.0 + 1e-12), 4, 10);
    if b.upper > cap * (1.0 + 1e-12) {
        return Err(invalid(format!(
            "sup of f over Q is not certified below delta*l(Q) = {cap} (bracket [{}, {}])",
            b.lower, b.upper
        )));
    }
    let (x0, y0, _) = q.bounds_f64();
    let g = f.reparametrized(Chart {
        origin: (x0, y0),
        scale: l,
        value_scale: 1.0 / cap,
    });
    let k = g.kappa;
    Ok((g, k))
}

/// Status of a check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Pass,
    Fail,
    NotApplicable,
}

/// `∫_a f` against `(π/12) ‖f‖³_{L∞(a)}/κ²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutConeReport {
    pub integral: f64,
    pub sup: SupBracket,
    pub bound: f64,
    pub ratio: f64,
    pub tolerance: f64,
    pub status: Status,
}

/// Quadrature tolerance of the cut-cone integral.
pub const CUT_CONE_TOL: f64 = 1e-4;

/// Checks `∫_a f ≥ (π/12) ‖f‖³/κ²`, a quarter of the volume of the cone of
/// slope `κ` under the maximum, using the upper end of the sup bracket.
pub fn cut_cone_check(f: &FunctionOracle, a: &Square, kappa: f64) -> CutConeReport {
    let l = a.side_f64();
    let sup = bracket_deciding(f, a, f64::INFINITY, 4, 6);
    let mut rep = CutConeReport {
        integral: f64::NAN,
        sup,
        bound: f64::NAN,
        ratio: f64::NAN,
        tolerance: CUT_CONE_TOL,
        status: Status::NotApplicable,
    };
    if kappa < 1.0 || sup.lower > l * (1.0 + 1e-12) {
        return rep;
    }
    rep.integral = f.integral(rect_of(a), CUT_CONE_TOL / 4.0);
    rep.bound = std::f64::consts::PI / 12.0 * sup.upper.powi(3) / (kappa * kappa);
    rep.ratio = if rep.bound == 0.0 { f64::INFINITY } else { rep.integral / rep.bound };
    rep.status = if rep.ratio >= 1.0 - CUT_CONE_TOL { Status::Pass } else { Status::Fail };
    rep
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dyadic::Rational;
    use rand::Rng;
    use proptest::prelude::*;

    fn unit() -> Square {
        Square::from_corner(Rational::from_integer(0), Rational::from_integer(0), Rational::from_integer(1)).unwrap()
    }

    fn cone(apex: (f64, f64), height: f64, slope: f64) -> FunctionOracle {
        FunctionOracle::new(Recipe::Cone { apex, height, slope }).unwrap()
    }

    fn tents() -> FunctionOracle {
        FunctionOracle::new(Recipe::TentSum {
            tents: vec![
                Tent { center: (0.3, 0.4), height: 0.2, slope: 1.0 },
                Tent { center: (0.45, 0.5), height: 0.15, slope: 2.0 },
            ],
        })
        .unwrap()
    }

    fn field(seed: u64) -> FunctionOracle {
        FunctionOracle::new(Recipe::RandomTentField {
            seed,
            count: 12,
            height_cap: 0.3,
            slope: 2.0,
            region: (0.1, 0.9, 0.1, 0.9),
        })
        .unwrap()
    }

    #[test]
    fn constant_bracket() {
        let f = FunctionOracle::new(Recipe::Constant {
            value: 0.3,
            center: (0.5, 0.5),
            radius: 2.0,
            slope: 1.0,
        })
        .unwrap();
        let b = certified_sup(&f, &unit(), 1.0 / 16.0).unwrap();
        assert_eq!(b.lower, 0.3);
        assert!(b.upper >= 0.3 && b.upper <= 0.3 + f.kappa * std::f64::consts::SQRT_2 / 32.0);
    }

    #[test]
    fn cone_apex_is_sampled() {
        let f = cone((0.25, 0.5), 0.4, 3.0);
        let b = certified_sup(&f, &unit(), 1.0 / 8.0).unwrap();
        assert_eq!(b.lower, 0.4);
        let b = sharp_sup(&f, &unit(), 1.0 / 8.0).unwrap();
        assert_eq!((b.lower, b.upper), (0.4, 0.4));
    }

    #[test]
    fn bracket_contains_fine_grid_max() {
        for f in [field(3), field(8), tents()] {
            let b = certified_sup(&f, &unit(), 1.0 / 256.0).unwrap();
            let n = 2048;
            let mut m = 0.0f64;
            for i in 0..=n {
                for j in 0..=n {
                    m = m.max(f.eval((i as f64 / n as f64, j as f64 / n as f64)));
                }
            }
            assert!(b.lower <= m + 1e-15 && m <= b.upper + 1e-15, "{b:?} vs {m}");
        }
    }

    #[test]
    fn brackets_monotone_under_halving() {
        for f in [field(5), tents()] {
            let mut prev = certified_sup(&f, &unit(), 1.0 / 4.0).unwrap();
            for m in 3..9 {
                let b = certified_sup(&f, &unit(), 1.0 / (1u64 << m) as f64).unwrap();
                assert!(b.lower >= prev.lower && b.upper <= prev.upper, "{prev:?} -> {b:?}");
                prev = b;
            }
        }
    }

    #[test]
    fn zero_function_has_no_essential_squares() {
        // support far from the root
        let f = cone((10.0, 10.0), 0.5, 1.0);
        let e = essential_squares(&f, DyadicSquare::new(0, 0, 0), 12);
        assert!(e.is_empty());
        assert_eq!(e.examined, 1);
    }

    #[test]
    fn constant_threshold_arithmetic() {
        for c in [0.3, 0.1, 0.05, 0.02] {
            let f = FunctionOracle::new(Recipe::Constant {
                value: c,
                center: (0.5, 0.5),
                radius: 3.0,
                slope: 1.0,
            })
            .unwrap();
            let e = essential_squares(&f, DyadicSquare::new(0, 0, 0), 12);
            assert!(!e.is_empty());
            let j = e.squares[0].depth;
            assert_eq!(e.len(), 1 << (2 * j));
            for s in &e.squares {
                let side = s.to_square().side_f64();
                assert!(side / 2.0 <= c);
                assert!(side > c);
            }
            assert!(e.ambiguous.iter().all(|a| !a));
        }
    }

    #[test]
    fn cone_family_has_dihedral_symmetry() {
        let f = cone((0.5, 0.5), 0.125, 1.0);
        let e = essential_squares(&f, DyadicSquare::new(0, 0, 0), 10);
        assert!(!e.is_empty());
        let set: std::collections::HashSet<_> = e.squares.iter().copied().collect();
        for s in &e.squares {
            let n = (1i64 << s.depth) - 1;
            for t in [
                DyadicSquare::new(s.depth, n - s.col, s.row),
                DyadicSquare::new(s.depth, s.col, n - s.row),
                DyadicSquare::new(s.depth, s.row, s.col),
            ] {
                assert!(set.contains(&t), "{s:?} -> {t:?}");
            }
        }
    }

    #[test]
    fn essential_output_is_maximal_and_disjoint() {
        for f in [field(1), field(2), tents()] {
            let e = essential_squares(&f, DyadicSquare::new(0, 0, 0), 9);
            for (i, a) in e.squares.iter().enumerate() {
                for b in &e.squares[i + 1..] {
                    assert_eq!(crate::dyadic::relation(a, b), crate::dyadic::Relation::Disjoint);
                }
                let b = e.brackets[i];
                let l = a.to_square().side_f64();
                assert!(b.upper >= l / 2.0);
                if a.depth > 0 {
                    let p = a.parent().to_square();
                    assert!(f.sup_bound(rect_of(&p)).0 < p.side_f64() / 2.0 || certified_sup(&f, &p, p.side_f64() / 512.0).unwrap().upper < p.side_f64() / 2.0);
                }
            }
        }
    }

    #[test]
    fn normalization_round_trip() {
        let q = Square::from_corner(Rational::from_integer(-2), Rational::from_integer(1), Rational::from_integer(4)).unwrap();
        let delta = 0.5;
        let f = cone((0.0, 3.0), delta * 4.0 / 2.0, 1.5);
        let (g, k) = normalize(&f, &q, delta).unwrap();
        assert_eq!(k, 1.5 / delta * 4.0 / 4.0);
        assert_eq!(g.eval((0.5, 0.5)), 0.5);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..1000 {
            let x = (rng.gen_range(0..1024) as f64 / 1024.0, rng.gen_range(0..1024) as f64 / 1024.0);
            let u = (-2.0 + 4.0 * x.0, 1.0 + 4.0 * x.1);
            assert_eq!(g.eval(x) * delta * 4.0, f.eval(u));
        }
        assert!(normalize(&cone((0.0, 3.0), 3.0, 1.0), &q, delta).is_err());
    }

    #[test]
    fn cut_cone_reference_ratios() {
        let a = unit();
        let full = cone((0.5, 0.5), 0.25, 1.0);
        let r = cut_cone_check(&full, &a, 1.0);
        assert_eq!(r.status, Status::Pass);
        assert!((r.ratio - 4.0).abs() < 1e-3, "{r:?}");
        let corner = cone((0.0, 0.0), 0.5, 1.0);
        let r = cut_cone_check(&corner, &a, 1.0);
        assert!(r.ratio >= 1.0 - 1e-4 && r.ratio < 1.0 + 1e-3, "{r:?}");
        let zero = cone((5.0, 5.0), 0.5, 1.0);
        let r = cut_cone_check(&zero, &a, 1.0);
        assert_eq!(r.ratio, f64::INFINITY);
        assert_eq!(r.status, Status::Pass);
        assert_eq!(cut_cone_check(&full, &a, 0.5).status, Status::NotApplicable);
    }

    #[test]
    fn serde_round_trip() {
        let f = field(4).dilated(2.0);
        let s = serde_json::to_string(&f).unwrap();
        let g: FunctionOracle = serde_json::from_str(&s).unwrap();
        assert_eq!(f, g);
        assert_eq!(f.eval((0.7, 0.9)), g.eval((0.7, 0.9)));
        let bad = r#"{"recipe":{"kind":"cone","apex":[0,0],"height":-1,"slope":1}}"#;
        assert!(serde_json::from_str::<FunctionOracle>(bad).is_err());
    }

    proptest! {
        #[test]
        fn recipes_respect_declared_lipschitz(seed in 0u64..1000, s in 1u32..4) {
            let f = field(seed).dilated(s as f64);
            let k = f.spot_check_lipschitz((-1.0, 4.0, -1.0, 4.0), 500, seed);
            prop_assert!(k <= f.kappa * (1.0 + 1e-9));
            prop_assert!(f.eval((f.support_radius() * 1.01, 0.0)) == 0.0);
            let b = f.support_rect().unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..200 {
                let p = (rng.gen_range(-1.0..4.0), rng.gen_range(-1.0..4.0));
                if p.0 < b.0 || p.0 > b.1 || p.1 < b.2 || p.1 > b.3 {
                    prop_assert!(f.eval(p) == 0.0);
                }
            }
        }

        #[test]
        fn sup_bound_dominates_samples(seed in 0u64..1000, x0 in 0.0f64..0.8, y0 in 0.0f64..0.8, w in 0.01f64..0.2) {
            let f = field(seed);
            let r = (x0, x0 + w, y0, y0 + w);
            let (u, wit) = f.sup_bound(r);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..200 {
                let p = (rng.gen_range(r.0..=r.1), rng.gen_range(r.2..=r.3));
                prop_assert!(f.eval(p) <= u + 1e-15);
            }
            let p = wit.unwrap();
            prop_assert!((f.eval(p) - u).abs() < 1e-12);
        }
    }
}
