//! Layered tails around a dyadic seed square.
//!
//! Layer `p` of the tail of `a` consists of dyadic cells of side `l(a)/2^p`
//! tiling the ℓ∞ annulus between radii `l(a)/2 + Σ_{q<p} μ_q 2^-q l(a)` and
//! `l(a)/2 + Σ_{q≤p} μ_q 2^-q l(a)` around the center of `a`, where
//! `μ_q = ⌊λ^q⌋`.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::dyadic::{parse_rational, pow2, DyadicSquare, Rational};
use crate::error::{invalid, Result};

/// Upper limit on layer indices. The usable depth for a given `λ` is
/// [`TailParameters::max_layer`], where the shell integers stay below `2^120`.
pub const MAX_LAYER: u32 = 120;

/// Shell parameters `μ_p, α_p, β_p` for a ratio `λ ∈ (2, 2^{3/2})`.
#[derive(Debug, Clone, PartialEq)]
pub struct TailParameters {
    lambda: Rational,
    mu: Vec<i128>,
    alpha: Vec<i128>,
    beta: Vec<i128>,
    /// `Σ_{q=1..p} μ_q 2^-q`, index `p`.
    shell_sum: Vec<Rational>,
}

impl TailParameters {
    pub fn new(lambda: Rational) -> Result<Self> {
        let two = Rational::from_integer(2);
        if lambda <= two || lambda * lambda >= Rational::from_integer(8) {
            return Err(invalid(format!(
                "shell ratio λ = {lambda} must satisfy 2 < λ < 2^(3/2)"
            )));
        }
        let limit = BigInt::from(1) << 120;
        let fits = |v: &BigInt| v.abs() <= limit;
        let (num, den) = (BigInt::from(*lambda.numer()), BigInt::from(*lambda.denom()));
        let (mut pn, mut pd) = (BigInt::from(1), BigInt::from(1));
        let mut mu = vec![1i128];
        let mut alpha = vec![0i128];
        let mut beta = vec![0i128];
        let mut shell_sum = vec![Rational::zero()];
        // inner_p = Σ_{q=1}^{p-1} μ_q 2^{p-q}
        let mut inner = BigInt::zero();
        for p in 1..=MAX_LAYER as usize {
            pn *= &num;
            pd *= &den;
            let m = pn.div_floor(&pd);
            let a = (BigInt::from(1) << p) + &inner;
            let b = -&inner - &m;
            let num_sum = &inner + &m;
            if !(fits(&m) && fits(&(&a + &m)) && fits(&b) && fits(&num_sum)) {
                break;
            }
            let m = m.to_i128().expect("bounded by 2^120");
            mu.push(m);
            alpha.push(a.to_i128().expect("bounded by 2^120"));
            beta.push(b.to_i128().expect("bounded by 2^120"));
            shell_sum.push(Rational::new(num_sum.to_i128().expect("bounded by 2^120"), 1i128 << p));
            inner = num_sum * 2;
        }
        Ok(Self {
            lambda,
            mu,
            alpha,
            beta,
            shell_sum,
        })
    }

    /// Deepest layer whose shell integers are representable.
    pub fn max_layer(&self) -> u32 {
        (self.mu.len() - 1) as u32
    }

    pub fn default_ratio() -> Self {
        Self::new(Rational::new(5, 2)).expect("5/2 is admissible")
    }

    pub fn lambda(&self) -> Rational {
        self.lambda
    }

    fn check(&self, p: u32) {
        assert!(p <= self.max_layer(), "layer {p} beyond supported depth {}", self.max_layer());
    }

    /// `μ_p = ⌊λ^p⌋`, with `μ_0 = 1`.
    pub fn mu(&self, p: u32) -> i128 {
        self.check(p);
        self.mu[p as usize]
    }

    pub fn alpha(&self, p: u32) -> i128 {
        self.check(p);
        self.alpha[p as usize]
    }

    pub fn beta(&self, p: u32) -> i128 {
        self.check(p);
        self.beta[p as usize]
    }

    /// `Σ_{q=1..p} μ_q 2^-q` (zero for `p = 0`).
    pub fn shell_sum(&self, p: u32) -> Rational {
        self.check(p);
        self.shell_sum[p as usize]
    }

    /// Number of cells in one layer: outer minus inner square, in cell units.
    pub fn layer_count(&self, p: u32) -> i128 {
        if p == 0 {
            return 1;
        }
        (self.alpha(p) - self.beta(p))
            .checked_mul(4 * self.mu(p))
            .expect("layer count exceeds i128")
    }

    /// Index range `[lo, hi)` of layer `p`, in layer-`p` cells relative to the seed corner,
    /// together with the excluded inner range.
    pub fn layer_ranges(&self, p: u32) -> ((i128, i128), (i128, i128)) {
        if p == 0 {
            return ((0, 1), (0, 0));
        }
        let (a, b, m) = (self.alpha(p), self.beta(p), self.mu(p));
        ((b, a + m), (b + m, a))
    }
}

impl Serialize for TailParameters {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Repr {
            lambda: String,
        }
        Repr {
            lambda: format!("{}/{}", self.lambda.numer(), self.lambda.denom()),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for TailParameters {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Repr {
            lambda: String,
        }
        let r = Repr::deserialize(d)?;
        let lambda = parse_rational(&r.lambda).map_err(serde::de::Error::custom)?;
        TailParameters::new(lambda).map_err(serde::de::Error::custom)
    }
}

/// `(μ_p, α_p, β_p)` for a single layer.
pub fn tail_parameters(p: u32, lambda: Rational) -> Result<(i128, i128, i128)> {
    if p == 0 {
        return Err(invalid("layer index must be at least 1"));
    }
    let params = TailParameters::new(lambda)?;
    if p > params.max_layer() {
        return Err(invalid(format!("layer index {p} exceeds {}", params.max_layer())));
    }
    Ok((params.mu(p), params.alpha(p), params.beta(p)))
}

/// Cell `Q_{p,i,j}` of the tail of `a`: row offset `i`, column offset `j`.
fn cell(a: &DyadicSquare, p: u32, i: i128, j: i128) -> DyadicSquare {
    DyadicSquare::new(
        a.depth + p as i32,
        ((a.col as i128) << p) as i64 + j as i64,
        ((a.row as i128) << p) as i64 + i as i64,
    )
}

/// The eight index blocks of layer `p`, each as inclusive `(i0, j0)..=(i1, j1)`.
fn blocks(params: &TailParameters, p: u32) -> [((i128, i128), (i128, i128)); 8] {
    let (a, b, m) = (params.alpha(p), params.beta(p), params.mu(p));
    [
        ((a, b + m), (a + m - 1, a - 1)),         // up
        ((b, b + m), (b + m - 1, a - 1)),         // down
        ((b + m, b), (a - 1, b + m - 1)),         // left
        ((b + m, a), (a - 1, a + m - 1)),         // right
        ((a, a), (a + m - 1, a + m - 1)),         // up-right
        ((a, b), (a + m - 1, b + m - 1)),         // up-left
        ((b, a), (b + m - 1, a + m - 1)),         // down-right
        ((b, b), (b + m - 1, b + m - 1)),         // down-left
    ]
}

/// Cells of layer `p ≥ 1` of the tail of `a`.
pub fn tail_layer(a: &DyadicSquare, p: u32, params: &TailParameters) -> Vec<DyadicSquare> {
    assert!(p >= 1, "tail_layer needs p >= 1");
    let mut out = Vec::with_capacity(params.layer_count(p) as usize);
    for ((i0, j0), (i1, j1)) in blocks(params, p) {
        for i in i0..=i1 {
            for j in j0..=j1 {
                out.push(cell(a, p, i, j));
            }
        }
    }
    out
}

/// Inner and outer ℓ∞ radii of layer `p` around the center of `a`.
pub fn annulus(a: &DyadicSquare, p: u32, params: &TailParameters) -> (Rational, Rational) {
    let l = a.side();
    let half = Rational::new(1, 2);
    let inner = l * (half + params.shell_sum(p.saturating_sub(1)));
    let outer = l * (half + params.shell_sum(p));
    (inner, outer)
}

/// Layer of the (infinite) tail of `seed` containing `c` as one of its cells.
pub fn layer_of(seed: &DyadicSquare, c: &DyadicSquare, params: &TailParameters) -> Option<u32> {
    if c.depth < seed.depth {
        return None;
    }
    let p = (c.depth - seed.depth) as u32;
    if p > params.max_layer() {
        return None;
    }
    let i = c.row as i128 - (seed.row as i128).checked_mul(1 << p)?;
    let j = c.col as i128 - (seed.col as i128).checked_mul(1 << p)?;
    let ((lo, hi), (ilo, ihi)) = params.layer_ranges(p);
    let in_outer = lo <= i && i < hi && lo <= j && j < hi;
    let in_inner = ilo <= i && i < ihi && ilo <= j && j < ihi;
    (in_outer && !in_inner).then_some(p)
}

/// Truncated tail `t_0(a), …, t_{P}(a)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TailFamily {
    pub seed: DyadicSquare,
    pub layers: Vec<Vec<DyadicSquare>>,
    pub parameters: TailParameters,
}

impl TailFamily {
    pub fn cells(&self) -> impl Iterator<Item = (u32, &DyadicSquare)> {
        self.layers
            .iter()
            .enumerate()
            .flat_map(|(p, l)| l.iter().map(move |c| (p as u32, c)))
    }

    pub fn len(&self) -> usize {
        self.layers.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Side of the square tiled by layers `0..=P`.
    pub fn outer_side(&self) -> Rational {
        let p = (self.layers.len() - 1) as u32;
        self.seed.side() * (Rational::from_integer(1) + Rational::from_integer(2) * self.parameters.shell_sum(p))
    }
}

pub fn tail(a: &DyadicSquare, p_max: u32, params: &TailParameters) -> TailFamily {
    let mut layers = vec![vec![*a]];
    for p in 1..=p_max {
        layers.push(tail_layer(a, p, params));
    }
    TailFamily {
        seed: *a,
        layers,
        parameters: params.clone(),
    }
}

/// Exact tiling record of a truncated tail.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TilingCheck {
    pub cells: usize,
    pub layer_counts: Vec<usize>,
    /// `outer_side² − Σ l(c)²`.
    #[serde(with = "crate::dyadic::rational_string")]
    pub area_defect: Rational,
    pub duplicates: usize,
    /// Cells not inside the outer square or not recognized in their own layer.
    pub misplaced: usize,
}

impl TilingCheck {
    pub fn exact(&self) -> bool {
        self.area_defect == Rational::zero() && self.duplicates == 0 && self.misplaced == 0
    }
}

/// Cells are distinct, each lies in its layer's annulus and in the outer
/// square, and the areas add up: together an exact tiling.
pub fn tiling_check(t: &TailFamily) -> TilingCheck {
    // integer units of the finest layer: side 2^-(depth + P)
    let pm = (t.layers.len() - 1) as u32;
    let ext = t.parameters.shell_sum(pm) * Rational::from_integer(1i128 << pm);
    assert!(ext.is_integer(), "shell sums are dyadic with denominator 2^P");
    let ext = ext.to_integer();
    let (x0, y0) = ((t.seed.col as i128) << pm, (t.seed.row as i128) << pm);
    let (lo, hi) = ((x0 - ext, y0 - ext), (x0 + (1i128 << pm) + ext, y0 + (1i128 << pm) + ext));
    let mut seen = std::collections::HashSet::with_capacity(t.len());
    let (mut area, mut dup, mut bad) = (0i128, 0, 0);
    for (p, c) in t.cells() {
        if !seen.insert(*c) {
            dup += 1;
        }
        let shift = pm as i64 - (c.depth - t.seed.depth) as i64;
        let inside = if (0..=pm as i64).contains(&shift) {
            let s = 1i128 << shift;
            let (cx, cy) = ((c.col as i128) << shift, (c.row as i128) << shift);
            area += s * s;
            cx >= lo.0 && cx + s <= hi.0 && cy >= lo.1 && cy + s <= hi.1
        } else {
            false
        };
        let layered = if p == 0 { *c == t.seed } else { layer_of(&t.seed, c, &t.parameters) == Some(p) };
        if !(inside && layered) {
            bad += 1;
        }
    }
    let side = 2 * ext + (1i128 << pm);
    let unit = pow2(-t.seed.depth - pm as i32);
    TilingCheck {
        cells: t.len(),
        layer_counts: t.layers.iter().map(Vec::len).collect(),
        area_defect: Rational::from_integer(side * side - area) * unit * unit,
        duplicates: dup,
        misplaced: bad,
    }
}

/// Partial sum `Σ_{p=1..n} μ_p² 2^{-3p}` and its limit.
pub fn volume_series(params: &TailParameters, n: u32) -> (f64, f64) {
    let term = |p: u32| {
        let m = params.mu(p) as f64;
        m * m * (-3.0 * p as f64).exp2()
    };
    let partial: f64 = (1..=n).map(term).sum();
    let last = params.max_layer();
    let full: f64 = (1..=last).map(term).sum();
    // geometric remainder beyond the last layer, ratio λ²/8
    let r = {
        let l = crate::dyadic::rational_to_f64(&params.lambda());
        l * l / 8.0
    };
    let limit = full + term(last) * r / (1.0 - r);
    (partial, limit)
}

/// Exact `Σ_{p=1..n} #t_p(a) (l(a)/2^p)^3 / l(a)^3`, for `n ≤ 40`.
pub fn tail_volume_ratio(params: &TailParameters, n: u32) -> Rational {
    assert!(n <= 40, "exact volume ratio limited to 40 layers");
    (1..=n)
        .map(|p| Rational::from_integer(params.layer_count(p)) * pow2(-3 * p as i32))
        .fold(Rational::zero(), |a, b| a + b)
}
