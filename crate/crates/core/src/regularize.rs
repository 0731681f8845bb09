//! Regularization of disjoint dyadic families through their tails.
//!
//! The family `τ` is the set of inclusion-maximal cells among all tail cells of
//! all seeds, restricted to a dyadic root. Since every tail tiles the plane, the
//! maximal cells tile the root; they are found by a top-down quadtree descent
//! that stops at the first cell belonging to some tail.

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::dyadic::{rational_to_f64, DyadicSquare};
use crate::error::{invalid, Error, Result};
use crate::tail::{layer_of, TailParameters};

/// Inclusion-maximal elements of a dyadic family, deduplicated and sorted.
pub fn maximal_elements(family: &[DyadicSquare]) -> Vec<DyadicSquare> {
    let set: HashSet<DyadicSquare> = family.iter().copied().collect();
    let Some(min_depth) = set.iter().map(|c| c.depth).min() else {
        return Vec::new();
    };
    let mut out: Vec<DyadicSquare> = set
        .iter()
        .filter(|c| {
            let mut d = c.depth - 1;
            while d >= min_depth {
                if set.contains(&c.ancestor(d)) {
                    return false;
                }
                d -= 1;
            }
            true
        })
        .copied()
        .collect();
    out.sort();
    out
}

/// First pair `(i, j)` of elements that are equal or nested, if any.
pub fn find_overlap(family: &[DyadicSquare]) -> Option<(usize, usize)> {
    let mut index: HashMap<DyadicSquare, usize> = HashMap::new();
    for (i, c) in family.iter().enumerate() {
        if let Some(&j) = index.get(c) {
            return Some((j, i));
        }
        index.insert(*c, i);
    }
    let min_depth = family.iter().map(|c| c.depth).min()?;
    for (i, c) in family.iter().enumerate() {
        for d in min_depth..c.depth {
            if let Some(&j) = index.get(&c.ancestor(d)) {
                return Some((j, i));
            }
        }
    }
    None
}

/// Seed and layer that generated a cell of `τ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: usize,
    pub layer: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegularizeOptions {
    /// Tail truncation; `None` picks the smallest sufficient value.
    pub p_max: Option<u32>,
    /// Raise an insufficient `p_max` instead of failing.
    pub auto_raise: bool,
    /// Upper bound on visited quadtree cells.
    pub cell_budget: usize,
}

impl Default for RegularizeOptions {
    fn default() -> Self {
        Self {
            p_max: None,
            auto_raise: true,
            cell_budget: 4_000_000,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegularizedFamily {
    pub tau: Vec<DyadicSquare>,
    pub root: DyadicSquare,
    pub seeds: Vec<DyadicSquare>,
    pub params: TailParameters,
    pub p_max: u32,
    /// Parallel to `tau`.
    pub provenance: Vec<Provenance>,
    #[serde(skip)]
    index: HashMap<DyadicSquare, usize>,
}

/// Deepest cell the quadtree descent will split; children must keep `i64` coordinates.
const MAX_CELL_DEPTH: i32 = 60;

/// Outer radii `1/2 + Σ_{q≤p} μ_q 2^-q` in units of the seed side.
fn outer_radii(params: &TailParameters) -> Vec<f64> {
    (0..=params.max_layer())
        .map(|p| 0.5 + rational_to_f64(&params.shell_sum(p)))
        .collect()
}

/// Smallest layer whose outer radius exceeds `r` (in seed units), rounded up for safety.
fn layer_at(radii: &[f64], r: f64) -> u32 {
    let r = r * (1.0 + 1e-9) + 1e-12;
    radii.partition_point(|&x| x <= r) as u32
}

/// ℓ∞ distances from `p` to the nearest and farthest points of the closed cell.
fn near_far(c: &DyadicSquare, p: (f64, f64)) -> (f64, f64) {
    let s = c.side_f64();
    let (x0, y0) = (c.col as f64 * s, c.row as f64 * s);
    let axis = |lo: f64, v: f64| {
        let hi = lo + s;
        let near = if v < lo {
            lo - v
        } else if v > hi {
            v - hi
        } else {
            0.0
        };
        (near, (v - lo).abs().max((hi - v).abs()))
    };
    let (nx, fx) = axis(x0, p.0);
    let (ny, fy) = axis(y0, p.1);
    (nx.max(ny), fx.max(fy))
}

/// Minimal truncation so that layers beyond it lie outside `root`.
pub fn required_p_max(seed: &DyadicSquare, root: &DyadicSquare, params: &TailParameters) -> Result<u32> {
    let (_, far) = near_far(root, seed.center_f64());
    let r = far / seed.side_f64();
    let radii = outer_radii(params);
    // inner radius of layer p is the outer radius of layer p-1
    let p = layer_at(&radii, r) + 1;
    if p > params.max_layer() {
        return Err(invalid(format!(
            "seed {seed} too small relative to root {root}: needs {p} tail layers"
        )));
    }
    Ok(p)
}

pub fn regularize(
    seeds: &[DyadicSquare],
    root: &DyadicSquare,
    params: &TailParameters,
    opts: RegularizeOptions,
) -> Result<RegularizedFamily> {
    if let Some((i, j)) = find_overlap(seeds) {
        return Err(invalid(format!(
            "seed squares {} and {} overlap",
            seeds[i], seeds[j]
        )));
    }
    for s in seeds {
        if !s.is_inside(root) {
            return Err(invalid(format!("seed {s} is not inside root {root}")));
        }
    }
    let mut required = 0;
    for s in seeds {
        required = required.max(required_p_max(s, root, params)?);
    }
    let p_max = match opts.p_max {
        Some(p) if p >= required => p.min(params.max_layer()),
        Some(_) if !opts.auto_raise => return Err(Error::Truncation { required }),
        _ => required,
    };
    let mut fam = RegularizedFamily {
        tau: Vec::new(),
        root: *root,
        seeds: seeds.to_vec(),
        params: params.clone(),
        p_max,
        provenance: Vec::new(),
        index: HashMap::new(),
    };
    if seeds.is_empty() {
        return Ok(fam);
    }
    let radii = outer_radii(params);
    let centers: Vec<(f64, f64)> = seeds.iter().map(|s| s.center_f64()).collect();
    let mut visited = 0usize;
    let mut stack: Vec<(DyadicSquare, Vec<usize>)> = vec![(*root, (0..seeds.len()).collect())];
    while let Some((c, cands)) = stack.pop() {
        visited += 1;
        if visited > opts.cell_budget {
            return Err(Error::TooManyCells {
                budget: opts.cell_budget,
            });
        }
        if let Some(prov) = cands.iter().find_map(|&i| {
            layer_of(&seeds[i], &c, params)
                .filter(|&p| p <= p_max)
                .map(|layer| Provenance { seed: i, layer })
        }) {
            fam.tau.push(c);
            fam.provenance.push(prov);
            continue;
        }
        let next: Vec<usize> = cands
            .into_iter()
            .filter(|&i| {
                let (_, far) = near_far(&c, centers[i]);
                let p_far = layer_at(&radii, far / seeds[i].side_f64()).min(p_max);
                seeds[i].depth + p_far as i32 > c.depth
            })
            .collect();
        if next.is_empty() {
            return Err(Error::Truncation {
                required: p_max + 1,
            });
        }
        if c.depth >= MAX_CELL_DEPTH {
            return Err(invalid(format!("refinement below {c} exceeds the coordinate range")));
        }
        for ch in c.children().into_iter().rev() {
            stack.push((ch, next.clone()));
        }
    }
    fam.rebuild_index();
    Ok(fam)
}

impl RegularizedFamily {
    fn rebuild_index(&mut self) {
        self.index = self.tau.iter().enumerate().map(|(i, c)| (*c, i)).collect();
    }

    /// Restore the lookup table after deserialization.
    pub fn reindex(mut self) -> Self {
        self.rebuild_index();
        self
    }

    pub fn len(&self) -> usize {
        self.tau.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tau.is_empty()
    }

    pub fn position(&self, c: &DyadicSquare) -> Option<usize> {
        self.index.get(c).copied()
    }

    /// Element of `τ` containing the dyadic cell `c`.
    pub fn locate(&self, c: &DyadicSquare) -> Option<usize> {
        if c.depth < self.root.depth {
            return None;
        }
        (self.root.depth..=c.depth)
            .rev()
            .find_map(|d| self.position(&c.ancestor(d)))
    }

    /// Element of `τ` containing the point.
    pub fn locate_point(&self, x: f64, y: f64) -> Option<usize> {
        let deepest = self.tau.iter().map(|c| c.depth).max()?;
        let s = (-(deepest as f64)).exp2();
        let c = DyadicSquare::new(deepest, (x / s).floor() as i64, (y / s).floor() as i64);
        self.locate(&c)
    }

    pub fn max_depth(&self) -> i32 {
        self.tau
            .iter()
            .chain(&self.seeds)
            .map(|c| c.depth)
            .max()
            .unwrap_or(self.root.depth)
            .max(self.root.depth)
    }

    /// `N(a)`: cells within Hausdorff distance `2l(a)` with side ratio in `[1/2, 2]`.
    pub fn neighborhood(&self, a: &DyadicSquare) -> Result<Vec<DyadicSquare>> {
        if self.position(a).is_none() {
            return Err(invalid(format!("{a} is not an element of the family")));
        }
        let res = self.max_depth();
        let ga = Grid::new(a, res);
        let mut out = Vec::new();
        for depth in a.depth - 1..=a.depth + 1 {
            // centers of candidates differ by at most 2 l(a) in each axis
            let s = (-(depth as f64)).exp2();
            let r = 2.0 * a.side_f64();
            let (cx, cy) = a.center_f64();
            let (c0, c1) = (((cx - r) / s).floor() as i64 - 1, ((cx + r) / s).ceil() as i64 + 1);
            let (r0, r1) = (((cy - r) / s).floor() as i64 - 1, ((cy + r) / s).ceil() as i64 + 1);
            for col in c0..=c1 {
                for row in r0..=r1 {
                    let b = DyadicSquare::new(depth, col, row);
                    if self.position(&b).is_some() && ga.is_neighbor(&Grid::new(&b, res)) {
                        out.push(b);
                    }
                }
            }
        }
        out.sort();
        Ok(out)
    }

    /// Total area of `τ` equals the root area, in exact integer units.
    pub fn tiles_root(&self) -> bool {
        let res = self.max_depth();
        let area = |c: &DyadicSquare| {
            let s = 1i128 << (res - c.depth);
            s * s
        };
        let disjoint = find_overlap(&self.tau).is_none();
        let inside = self.tau.iter().all(|c| c.is_inside(&self.root));
        disjoint && inside && self.tau.iter().map(area).sum::<i128>() == area(&self.root)
    }
}

/// Cell in integer units of `2^-(res+1)`: center and side.
#[derive(Debug, Clone, Copy)]
struct Grid {
    cx: i128,
    cy: i128,
    side: i128,
    depth: i32,
}

impl Grid {
    fn new(c: &DyadicSquare, res: i32) -> Self {
        let sh = (res - c.depth) as u32;
        Self {
            cx: (2 * c.col as i128 + 1) << sh,
            cy: (2 * c.row as i128 + 1) << sh,
            side: 2i128 << sh,
            depth: c.depth,
        }
    }

    fn offset(&self, o: &Grid) -> i128 {
        (self.cx - o.cx).abs().max((self.cy - o.cy).abs())
    }

    /// Hausdorff distance of the closed cells.
    fn hausdorff(&self, o: &Grid) -> i128 {
        self.offset(o) + (self.side - o.side).abs() / 2
    }

    /// Hausdorff distance of the doubled cells.
    fn hausdorff2(&self, o: &Grid) -> i128 {
        self.offset(o) + (self.side - o.side).abs()
    }

    fn is_neighbor(&self, o: &Grid) -> bool {
        (self.depth - o.depth).abs() <= 1 && self.hausdorff(o) <= 2 * self.side
    }

    /// Interiors of the doubled half-open cells meet.
    fn doubles_overlap(&self, o: &Grid) -> bool {
        let reach = self.side + o.side;
        (self.cx - o.cx).abs() < reach && (self.cy - o.cy).abs() < reach
    }
}

/// Violation of a separation inequality, with the offending ordered pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub a: DyadicSquare,
    pub b: DyadicSquare,
    pub ratio: f64,
}

/// Smallest observed `distance / bound` for one inequality.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioRecord {
    pub pairs_examined: usize,
    pub min_ratio: f64,
    pub violations: usize,
    pub witness: Option<Witness>,
}

impl RatioRecord {
    fn new() -> Self {
        Self {
            pairs_examined: 0,
            min_ratio: f64::INFINITY,
            violations: 0,
            witness: None,
        }
    }

    fn record(&mut self, a: &DyadicSquare, b: &DyadicSquare, dist: i128, bound: i128) {
        self.pairs_examined += 1;
        let ratio = if bound == 0 {
            f64::INFINITY
        } else {
            dist as f64 / bound as f64
        };
        if dist < bound {
            self.violations += 1;
            if self.witness.is_none() {
                self.witness = Some(Witness { a: *a, b: *b, ratio });
            }
        }
        if ratio < self.min_ratio {
            self.min_ratio = ratio;
        }
    }

    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparationCertificate {
    /// Non-neighbors with `l(b) ≤ 2 l(a)`: `d(2a, 2b) ≥ l(a)/2`.
    pub comparable: RatioRecord,
    /// Non-neighbors with `l(b) = 2^k l(a)`, `k ≥ 2`: `d(2a, 2b) ≥ 2 μ_{k-2} l(a)`.
    pub larger: RatioRecord,
    /// `l(a) = 2^k l(b)`, `k ≥ 2`: `d(a, b) ≥ l(a) μ_{k-1} / 2^{k-1}`.
    pub smaller: RatioRecord,
    /// Ordered pairs with meeting doubles where `b ∉ N(a)`.
    pub overlap_non_neighbors: usize,
    pub overlap_witness: Option<Witness>,
    /// Same, with the symmetric relation `b ∈ N(a)` or `a ∈ N(b)`.
    pub overlap_non_neighbors_symmetric: usize,
    pub max_multiplicity: usize,
    pub max_neighborhood: usize,
}

impl SeparationCertificate {
    pub fn separation_passed(&self) -> bool {
        self.comparable.passed() && self.larger.passed() && self.smaller.passed()
    }

    pub fn overlap_passed(&self) -> bool {
        self.overlap_non_neighbors == 0
    }
}

/// Per-depth cells sorted by center abscissa.
struct DepthIndex {
    by_depth: BTreeMap<i32, Vec<(Grid, usize)>>,
}

impl DepthIndex {
    fn new(cells: &[DyadicSquare], res: i32) -> Self {
        let mut by_depth: BTreeMap<i32, Vec<(Grid, usize)>> = BTreeMap::new();
        for (i, c) in cells.iter().enumerate() {
            by_depth.entry(c.depth).or_default().push((Grid::new(c, res), i));
        }
        for v in by_depth.values_mut() {
            v.sort_by_key(|(g, _)| (g.cx, g.cy));
        }
        Self { by_depth }
    }

    /// Cells at `depth` with center offset strictly below `radius`.
    fn within(&self, depth: i32, g: &Grid, radius: i128) -> impl Iterator<Item = &(Grid, usize)> {
        let v = self.by_depth.get(&depth).map(Vec::as_slice).unwrap_or(&[]);
        let lo = v.partition_point(|(h, _)| h.cx <= g.cx - radius);
        let hi = v.partition_point(|(h, _)| h.cx < g.cx + radius);
        let cy = g.cy;
        v[lo..hi]
            .iter()
            .filter(move |(h, _)| (h.cy - cy).abs() < radius)
    }
}

/// Exact separation and multiplicity certificate for `τ`.
pub fn separation_report(fam: &RegularizedFamily) -> SeparationCertificate {
    let res = fam.max_depth();
    let idx = DepthIndex::new(&fam.tau, res);
    let depths: Vec<i32> = idx.by_depth.keys().copied().collect();
    let params = &fam.params;
    let mut comparable = RatioRecord::new();
    let mut larger = RatioRecord::new();
    let mut smaller = RatioRecord::new();
    let mut overlap = 0usize;
    let mut overlap_sym = 0usize;
    let mut overlap_witness = None;
    for (&da, cells) in &idx.by_depth {
        for (ga, ia) in cells {
            let a = &fam.tau[*ia];
            for &db in &depths {
                let k = da - db; // l(b) = 2^k l(a)
                let side_b = if k >= 0 { ga.side << k } else { ga.side >> -k };
                let bound = if k <= 1 {
                    ga.side / 2
                } else {
                    2 * params.mu((k - 2) as u32) * ga.side
                };
                let size_term = (side_b - ga.side).abs();
                let reach = ga.side + side_b;
                let thresh = (bound - size_term).max(0);
                // search far enough to see touching doubles and any violation
                let radius = thresh.max(reach + side_b.max(ga.side)) + 1;
                for (gb, ib) in idx.within(db, ga, radius) {
                    if ib == ia {
                        continue;
                    }
                    let b = &fam.tau[*ib];
                    let nb = ga.is_neighbor(gb);
                    if ga.doubles_overlap(gb) && !nb {
                        overlap += 1;
                        if overlap_witness.is_none() {
                            overlap_witness = Some(Witness {
                                a: *a,
                                b: *b,
                                ratio: ga.hausdorff(gb) as f64 / (2 * ga.side) as f64,
                            });
                        }
                        if !gb.is_neighbor(ga) {
                            overlap_sym += 1;
                        }
                    }
                    if !nb {
                        let d2 = ga.hausdorff2(gb);
                        if k <= 1 {
                            comparable.record(a, b, d2, bound);
                        } else {
                            larger.record(a, b, d2, bound);
                        }
                    }
                }
                // a is the larger square: l(a) = 2^j l(b), j = db - da
                let j = db - da;
                if j >= 2 {
                    let gb_side = ga.side >> j;
                    let bound = ga.side * params.mu((j - 1) as u32) >> (j - 1);
                    let size_term = (ga.side - gb_side) / 2;
                    let thresh = (bound - size_term).max(0);
                    let radius = thresh.max(ga.side + gb_side) + 1;
                    for (gb, ib) in idx.within(db, ga, radius) {
                        smaller.record(a, &fam.tau[*ib], ga.hausdorff(gb), bound);
                    }
                }
            }
        }
    }
    let max_neighborhood = fam
        .tau
        .iter()
        .map(|a| fam.neighborhood(a).map(|n| n.len()).unwrap_or(0))
        .max()
        .unwrap_or(0);
    SeparationCertificate {
        comparable,
        larger,
        smaller,
        overlap_non_neighbors: overlap,
        overlap_witness,
        overlap_non_neighbors_symmetric: overlap_sym,
        max_multiplicity: doubled_multiplicity(&fam.tau),
        max_neighborhood,
    }
}

/// Maximal number of doubled half-open cells sharing a point, by an exact sweep.
pub fn doubled_multiplicity(cells: &[DyadicSquare]) -> usize {
    let Some(res) = cells.iter().map(|c| c.depth).max() else {
        return 0;
    };
    // doubled cell in units of 2^-(res+1): [c - side, c + side)
    let boxes: Vec<(i128, i128, i128, i128)> = cells
        .iter()
        .map(|c| {
            let g = Grid::new(c, res);
            (g.cx - g.side, g.cx + g.side, g.cy - g.side, g.cy + g.side)
        })
        .collect();
    let mut events: Vec<(i128, bool, usize)> = Vec::with_capacity(2 * boxes.len());
    for (i, b) in boxes.iter().enumerate() {
        events.push((b.0, true, i));
        events.push((b.1, false, i));
    }
    // removals before insertions at equal abscissa (half-open in x)
    events.sort_by_key(|&(x, ins, i)| (x, ins, i));
    let mut active: HashSet<usize> = HashSet::new();
    let mut best = 0;
    let mut k = 0;
    while k < events.len() {
        let x = events[k].0;
        while k < events.len() && events[k].0 == x {
            let (_, ins, i) = events[k];
            if ins {
                active.insert(i);
            } else {
                active.remove(&i);
            }
            k += 1;
        }
        let mut ys: Vec<(i128, i32)> = Vec::with_capacity(2 * active.len());
        for &i in &active {
            ys.push((boxes[i].2, 1));
            ys.push((boxes[i].3, -1));
        }
        // half-open in y: closing before opening at equal ordinate
        ys.sort();
        let mut cur = 0i32;
        for (_, d) in ys {
            cur += d;
            best = best.max(cur as usize);
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dyadic::{relation, Relation};
    use crate::tail::tail;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn maximal_oracle(f: &[DyadicSquare]) -> Vec<DyadicSquare> {
        let mut out: Vec<DyadicSquare> = f
            .iter()
            .filter(|a| {
                !f.iter()
                    .any(|b| relation(a, b) == Relation::AInsideB)
            })
            .copied()
            .collect();
        out.sort();
        out.dedup();
        out
    }

    #[test]
    fn maximal_examples() {
        let a = DyadicSquare::new(0, 0, 0);
        let b = DyadicSquare::new(1, 0, 0);
        assert_eq!(maximal_elements(&[a, b]), vec![a]);
        let c = DyadicSquare::new(1, 1, 0);
        assert_eq!(maximal_elements(&[b, c]), vec![b, c]);
        assert!(maximal_elements(&[]).is_empty());
    }

    #[test]
    fn maximal_matches_quadratic_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..5 {
            let f: Vec<DyadicSquare> = (0..1000)
                .map(|_| {
                    let d = rng.gen_range(0..=8);
                    let n = 1i64 << d;
                    DyadicSquare::new(d, rng.gen_range(0..n), rng.gen_range(0..n))
                })
                .collect();
            assert_eq!(maximal_elements(&f), maximal_oracle(&f));
        }
    }

    #[test]
    fn single_seed_matches_tail() {
        let pr = TailParameters::default_ratio();
        let root = DyadicSquare::new(0, 0, 0);
        let a = DyadicSquare::new(2, 1, 2);
        let fam = regularize(&[a], &root, &pr, RegularizeOptions::default()).unwrap();
        let t = tail(&a, fam.p_max, &pr);
        let mut expected: Vec<DyadicSquare> = t
            .cells()
            .map(|(_, c)| *c)
            .filter(|c| c.is_inside(&root))
            .collect();
        expected.sort();
        let mut got = fam.tau.clone();
        got.sort();
        assert_eq!(got, expected);
        assert!(fam.tiles_root());
        for (c, p) in fam.tau.iter().zip(&fam.provenance) {
            assert_eq!(layer_of(&a, c, &pr), Some(p.layer));
        }
    }

    #[test]
    fn rejects_bad_input() {
        let pr = TailParameters::default_ratio();
        let root = DyadicSquare::new(0, 0, 0);
        let a = DyadicSquare::new(1, 0, 0);
        let b = DyadicSquare::new(2, 0, 0);
        assert!(matches!(
            regularize(&[a, b], &root, &pr, RegularizeOptions::default()),
            Err(Error::InvalidArgument(_))
        ));
        let out = DyadicSquare::new(1, 2, 0);
        assert!(regularize(&[out], &root, &pr, RegularizeOptions::default()).is_err());
        let opts = RegularizeOptions {
            p_max: Some(1),
            auto_raise: false,
            ..Default::default()
        };
        match regularize(&[a], &root, &pr, opts) {
            Err(Error::Truncation { required }) => {
                assert_eq!(required, required_p_max(&a, &root, &pr).unwrap())
            }
            other => panic!("expected truncation error, got {other:?}"),
        }
        let tiny = RegularizeOptions {
            cell_budget: 3,
            ..Default::default()
        };
        assert!(matches!(
            regularize(&[DyadicSquare::new(3, 0, 0)], &root, &pr, tiny),
            Err(Error::TooManyCells { .. })
        ));
    }

    #[test]
    fn empty_and_singleton_families() {
        let pr = TailParameters::default_ratio();
        let root = DyadicSquare::new(0, 0, 0);
        let fam = regularize(&[], &root, &pr, RegularizeOptions::default()).unwrap();
        assert!(fam.is_empty());
        let fam = regularize(&[root], &root, &pr, RegularizeOptions::default()).unwrap();
        assert_eq!(fam.tau, vec![root]);
        assert_eq!(fam.neighborhood(&root).unwrap(), vec![root]);
        assert!(fam.neighborhood(&DyadicSquare::new(1, 0, 0)).is_err());
    }

    #[test]
    fn two_seeds_maximality_and_coverage() {
        let pr = TailParameters::default_ratio();
        let root = DyadicSquare::new(0, 0, 0);
        let big = DyadicSquare::new(2, 0, 0);
        let small = DyadicSquare::new(3, 7, 7);
        let fam = regularize(&[big, small], &root, &pr, RegularizeOptions::default()).unwrap();
        assert!(fam.tiles_root());
        let layers = fam.p_max.min(4);
        let tails: Vec<_> = [big, small].iter().map(|s| tail(s, layers, &pr)).collect();
        // every tail cell inside root is inside some element of τ
        for t in &tails {
            for (_, c) in t.cells() {
                if c.is_inside(&root) {
                    let i = fam.locate(c).expect("cell covered");
                    assert!(c.is_inside(&fam.tau[i]));
                }
            }
        }
        // no element of τ strictly inside a tail cell of either seed
        let all: HashSet<DyadicSquare> = tails
            .iter()
            .flat_map(|t| t.cells().map(|(_, c)| *c).collect::<Vec<_>>())
            .collect();
        for c in &fam.tau {
            for d in root.depth..c.depth {
                assert!(!all.contains(&c.ancestor(d)));
            }
        }
        // some small-seed tail cells are swallowed by the larger seed's cells
        let swallowed = tails[1]
            .cells()
            .filter(|(_, c)| c.is_inside(&root) && fam.position(c).is_none())
            .count();
        assert!(swallowed > 0);
        let provs: HashSet<usize> = fam.provenance.iter().map(|p| p.seed).collect();
        assert_eq!(provs.len(), 2);
    }

    #[test]
    fn neighborhood_side_ratios() {
        let pr = TailParameters::default_ratio();
        let root = DyadicSquare::new(0, 0, 0);
        let fam = regularize(
            &[DyadicSquare::new(2, 0, 3), DyadicSquare::new(4, 9, 2)],
            &root,
            &pr,
            RegularizeOptions::default(),
        )
        .unwrap();
        for a in &fam.tau {
            let n = fam.neighborhood(a).unwrap();
            assert!(n.contains(a));
            for b in &n {
                assert!((b.depth - a.depth).abs() <= 1);
                let d = crate::dyadic::hausdorff_linf(&a.to_square(), &b.to_square());
                assert!(d <= a.side() * 2);
            }
        }
    }

    /// Brute-force oracle for the certificate over all ordered pairs, in exact rationals.
    fn certificate_oracle(fam: &RegularizedFamily) -> (usize, usize, usize, usize) {
        use crate::dyadic::{dilate, hausdorff_linf, Rational};
        let two = Rational::from_integer(2);
        let (mut c1, mut c2, mut c3, mut ov) = (0, 0, 0, 0);
        for a in &fam.tau {
            let n = fam.neighborhood(a).unwrap();
            let a2 = dilate(&a.to_square(), two).unwrap();
            for b in &fam.tau {
                if a == b {
                    continue;
                }
                let b2 = dilate(&b.to_square(), two).unwrap();
                let k = a.depth - b.depth;
                let nb = n.contains(b);
                if a2.overlaps(&b2) && !nb {
                    ov += 1;
                }
                if !nb {
                    let d = hausdorff_linf(&a2, &b2);
                    if k <= 1 && d < a.side() / 2 {
                        c1 += 1;
                    }
                    if k >= 2 && d < a.side() * 2 * fam.params.mu((k - 2) as u32) {
                        c2 += 1;
                    }
                }
                if k <= -2 {
                    let j = -k;
                    let bound = a.side() * fam.params.mu((j - 1) as u32)
                        / (1i128 << (j - 1));
                    if hausdorff_linf(&a.to_square(), &b.to_square()) < bound {
                        c3 += 1;
                    }
                }
            }
        }
        (c1, c2, c3, ov)
    }

    #[test]
    fn certificate_matches_brute_force() {
        let pr = TailParameters::default_ratio();
        let root = DyadicSquare::new(0, 0, 0);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..4 {
            let mut seeds = vec![DyadicSquare::new(2, rng.gen_range(0..4), rng.gen_range(0..4))];
            for _ in 0..6 {
                let d = rng.gen_range(3..=5);
                let n = 1i64 << d;
                let s = DyadicSquare::new(d, rng.gen_range(0..n), rng.gen_range(0..n));
                let mut trial = seeds.clone();
                trial.push(s);
                if find_overlap(&trial).is_none() {
                    seeds = trial;
                }
            }
            let fam = regularize(&seeds, &root, &pr, RegularizeOptions::default()).unwrap();
            assert!(fam.len() < 3000, "family too large for the quadratic oracle");
            let cert = separation_report(&fam);
            let (c1, c2, c3, ov) = certificate_oracle(&fam);
            assert_eq!(cert.comparable.violations, c1);
            assert_eq!(cert.larger.violations, c2);
            assert_eq!(cert.smaller.violations, c3);
            assert_eq!(cert.overlap_non_neighbors, ov);
        }
    }

    #[test]
    fn multiplicity_sweep_matches_grid_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let cells: Vec<DyadicSquare> = maximal_elements(
                &(0..40)
                    .map(|_| {
                        let d = rng.gen_range(1..=4);
                        let n = 1i64 << d;
                        DyadicSquare::new(d, rng.gen_range(0..n), rng.gen_range(0..n))
                    })
                    .collect::<Vec<_>>(),
            );
            // sample cell midpoints of the finest arrangement grid
            let res = cells.iter().map(|c| c.depth).max().unwrap();
            let h = (-(res as f64) - 1.0).exp2();
            let mut best = 0;
            let steps = (3.0 / h) as i64;
            for i in 0..steps {
                for j in 0..steps {
                    let (x, y) = (-1.0 + (i as f64 + 0.5) * h, -1.0 + (j as f64 + 0.5) * h);
                    let m = cells
                        .iter()
                        .filter(|c| {
                            let (cx, cy) = c.center_f64();
                            let s = c.side_f64();
                            (x - cx).abs() < s && (y - cy).abs() < s
                        })
                        .count();
                    best = best.max(m);
                }
            }
            assert_eq!(doubled_multiplicity(&cells), best);
        }
    }

    #[test]
    fn single_seed_separation_passes() {
        let pr = TailParameters::default_ratio();
        let root = DyadicSquare::new(0, 0, 0);
        for seed in [DyadicSquare::new(1, 0, 1), DyadicSquare::new(2, 1, 1), DyadicSquare::new(2, 3, 0)] {
            let fam = regularize(&[seed], &root, &pr, RegularizeOptions::default()).unwrap();
            let cert = separation_report(&fam);
            assert!(cert.separation_passed(), "{cert:?}");
            assert!(cert.max_multiplicity <= cert.max_neighborhood.max(1) * 4);
        }
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(32))]
        #[test]
        fn tau_is_disjoint_tiling(
            d0 in 1i32..=2, c0 in 0i64..4, r0 in 0i64..4,
            extra in proptest::collection::vec((3i32..=6, 0i64..64, 0i64..64), 0..8),
        ) {
            let pr = TailParameters::default_ratio();
            let root = DyadicSquare::new(0, 0, 0);
            let n0 = 1i64 << d0;
            let mut seeds = vec![DyadicSquare::new(d0, c0 % n0, r0 % n0)];
            for (d, c, r) in extra {
                let n = 1i64 << d;
                let s = DyadicSquare::new(d, c % n, r % n);
                let mut t = seeds.clone();
                t.push(s);
                if find_overlap(&t).is_none() { seeds = t; }
            }
            let fam = regularize(&seeds, &root, &pr, RegularizeOptions::default()).unwrap();
            proptest::prop_assert!(fam.tiles_root());
            for s in &seeds {
                // each seed lies inside some element of τ
                proptest::prop_assert!(fam.locate(s).is_some());
            }
        }
    }
}
