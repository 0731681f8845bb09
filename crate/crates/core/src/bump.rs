//! Finite sums of scaled cups, `F(x) = A Σ l_b φ((x − c_b)/l_b)`.

use std::collections::HashMap;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::cup::{cup_jet, C_PHI, PROFILE_ID, REACH};
use crate::dyadic::{parse_rational, rational_to_f64, Rational, Square};

/// One scaled cup: center and scale `l`, contributing `l φ((x − c)/l)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Term {
    pub center: (Rational, Rational),
    pub scale: Rational,
}

fn rat_str(r: &Rational) -> String {
    if *r.denom() == 1 {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

impl Serialize for Term {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        [
            rat_str(&self.center.0),
            rat_str(&self.center.1),
            rat_str(&self.scale),
        ]
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Term {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let [x, y, l] = <[String; 3]>::deserialize(d)?;
        let p = |s: &str| parse_rational(s).map_err(serde::de::Error::custom);
        let scale = p(&l)?;
        if scale <= Rational::from_integer(0) {
            return Err(serde::de::Error::custom("term scale must be positive"));
        }
        Ok(Term {
            center: (p(&x)?, p(&y)?),
            scale,
        })
    }
}

/// Normalization record of a local build.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub q: Square,
    pub delta: f64,
    pub kappa: f64,
    /// Lipschitz constant after normalization, raised to at least 1.
    pub kappa_eff: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Repr {
    profile: String,
    amplitude: f64,
    terms: Vec<Term>,
    frame: Option<Frame>,
}

#[derive(Debug, Clone)]
pub struct BumpSum {
    pub amplitude: f64,
    pub terms: Vec<Term>,
    pub frame: Option<Frame>,
    cx: Vec<f64>,
    cy: Vec<f64>,
    scale: Vec<f64>,
    /// Terms bucketed per distinct scale on a lattice of that scale.
    buckets: HashMap<(u64, i64, i64), Vec<u32>>,
    scales: Vec<f64>,
}

impl PartialEq for BumpSum {
    fn eq(&self, o: &Self) -> bool {
        self.amplitude == o.amplitude && self.terms == o.terms && self.frame == o.frame
    }
}

impl Serialize for BumpSum {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        Repr {
            profile: PROFILE_ID.to_string(),
            amplitude: self.amplitude,
            terms: self.terms.clone(),
            frame: self.frame.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for BumpSum {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let r = Repr::deserialize(d)?;
        if r.profile != PROFILE_ID {
            return Err(serde::de::Error::custom(format!(
                "unknown cup profile {:?}",
                r.profile
            )));
        }
        let mut b = BumpSum::new(r.terms, r.amplitude);
        b.frame = r.frame;
        Ok(b)
    }
}

fn bucket(v: f64, s: f64) -> i64 {
    (v / s).floor() as i64
}

impl BumpSum {
    pub fn new(terms: Vec<Term>, amplitude: f64) -> Self {
        let cx: Vec<f64> = terms.iter().map(|t| rational_to_f64(&t.center.0)).collect();
        let cy: Vec<f64> = terms.iter().map(|t| rational_to_f64(&t.center.1)).collect();
        let scale: Vec<f64> = terms.iter().map(|t| rational_to_f64(&t.scale)).collect();
        let mut buckets: HashMap<(u64, i64, i64), Vec<u32>> = HashMap::new();
        let mut scales: Vec<f64> = Vec::new();
        for i in 0..terms.len() {
            let s = scale[i];
            if !scales.contains(&s) {
                scales.push(s);
            }
            buckets
                .entry((s.to_bits(), bucket(cx[i], s), bucket(cy[i], s)))
                .or_default()
                .push(i as u32);
        }
        scales.sort_by(|a, b| b.total_cmp(a));
        Self {
            amplitude,
            terms,
            frame: None,
            cx,
            cy,
            scale,
            buckets,
            scales,
        }
    }

    pub fn empty() -> Self {
        Self::new(Vec::new(), 1.0)
    }

    pub fn single(center: (Rational, Rational), scale: Rational) -> Self {
        Self::new(vec![Term { center, scale }], 1.0)
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn center(&self, i: usize) -> (f64, f64) {
        (self.cx[i], self.cy[i])
    }

    pub fn scale(&self, i: usize) -> f64 {
        self.scale[i]
    }

    /// Terms whose center lies within `reach · l` (ℓ∞) of `x`, where `l` is the term scale.
    pub fn for_each_near(&self, x: (f64, f64), reach: f64, mut f: impl FnMut(usize)) {
        for &s in &self.scales {
            let r = reach * s;
            let (i0, i1) = (bucket(x.0 - r, s), bucket(x.0 + r, s));
            let (j0, j1) = (bucket(x.1 - r, s), bucket(x.1 + r, s));
            for i in i0..=i1 {
                for j in j0..=j1 {
                    if let Some(v) = self.buckets.get(&(s.to_bits(), i, j)) {
                        for &k in v {
                            let k = k as usize;
                            if (self.cx[k] - x.0).abs() < r && (self.cy[k] - x.1).abs() < r {
                                f(k);
                            }
                        }
                    }
                }
            }
        }
    }

    /// `[F, ∂₁F, ∂₂F, ∂₁₁F, ∂₁₂F, ∂₂₂F]` at `x`.
    pub fn jet(&self, x: (f64, f64)) -> [f64; 6] {
        let mut out = [0.0; 6];
        self.for_each_near(x, REACH, |k| {
            let s = self.scale[k];
            let j = cup_jet((x.0 - self.cx[k]) / s, (x.1 - self.cy[k]) / s);
            out[0] += s * j[0];
            out[1] += j[1];
            out[2] += j[2];
            out[3] += j[3] / s;
            out[4] += j[4] / s;
            out[5] += j[5] / s;
        });
        out.map(|v| v * self.amplitude)
    }

    pub fn eval(&self, x: (f64, f64)) -> f64 {
        let mut v = 0.0;
        self.for_each_near(x, REACH, |k| {
            let s = self.scale[k];
            v += s * crate::cup::cup((x.0 - self.cx[k]) / s, (x.1 - self.cy[k]) / s);
        });
        v * self.amplitude
    }

    pub fn grad(&self, x: (f64, f64)) -> [f64; 2] {
        let mut g = [0.0; 2];
        self.for_each_near(x, REACH, |k| {
            let s = self.scale[k];
            let d = crate::cup::cup_grad((x.0 - self.cx[k]) / s, (x.1 - self.cy[k]) / s);
            g[0] += d[0];
            g[1] += d[1];
        });
        g.map(|v| v * self.amplitude)
    }

    /// Number of terms whose support contains `x`.
    pub fn multiplicity(&self, x: (f64, f64)) -> usize {
        let mut n = 0;
        self.for_each_near(x, REACH, |_| n += 1);
        n
    }

    /// `Σ l_b³` exactly.
    pub fn cube_sum(&self) -> Rational {
        self.terms
            .iter()
            .map(|t| t.scale * t.scale * t.scale)
            .fold(Rational::from_integer(0), |a, b| a + b)
    }

    /// `∫ F = A c_φ Σ l_b³`.
    pub fn integral(&self) -> f64 {
        self.amplitude * C_PHI * rational_to_f64(&self.cube_sum())
    }

    /// Closed bounding box `(x0, x1, y0, y1)` of the support.
    pub fn support_bounds(&self) -> Option<(f64, f64, f64, f64)> {
        if self.is_empty() {
            return None;
        }
        let mut b = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for k in 0..self.len() {
            let r = REACH * self.scale[k];
            b.0 = b.0.min(self.cx[k] - r);
            b.1 = b.1.max(self.cx[k] + r);
            b.2 = b.2.min(self.cy[k] - r);
            b.3 = b.3.max(self.cy[k] + r);
        }
        Some(b)
    }

    /// Union of the supports `(3/2) b` lies in `sq` (exact).
    pub fn support_inside(&self, sq: &Square) -> bool {
        let three_halves = Rational::new(3, 2);
        self.terms.iter().all(|t| {
            let s = Square {
                center: t.center,
                side: t.scale * three_halves,
            };
            sq.contains_square(&s)
        })
    }

    /// Sum of two bump sums with equal amplitude.
    pub fn merged(parts: &[&BumpSum]) -> Self {
        let amp = parts.first().map(|p| p.amplitude).unwrap_or(1.0);
        assert!(parts.iter().all(|p| p.amplitude == amp), "amplitudes differ");
        let terms = parts.iter().flat_map(|p| p.terms.iter().copied()).collect();
        Self::new(terms, amp)
    }

    pub fn with_amplitude(&self, amplitude: f64) -> Self {
        let mut b = self.clone();
        b.amplitude = amplitude;
        b
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cup::cup;

    fn q(n: i128, d: i128) -> Rational {
        Rational::new(n, d)
    }

    #[test]
    fn empty_and_single() {
        let e = BumpSum::empty();
        assert_eq!(e.eval((0.3, 0.1)), 0.0);
        assert_eq!(e.integral(), 0.0);
        let b = BumpSum::single((q(1, 2), q(-1, 4)), q(1, 8));
        assert_eq!(b.eval((0.5, -0.25)), 0.125);
        assert!((b.integral() - C_PHI / 512.0).abs() < 1e-18);
    }

    #[test]
    fn additivity_and_index() {
        let terms = vec![
            Term { center: (q(0, 1), q(0, 1)), scale: q(1, 1) },
            Term { center: (q(3, 1), q(0, 1)), scale: q(1, 2) },
            Term { center: (q(1, 2), q(1, 4)), scale: q(1, 4) },
        ];
        let all = BumpSum::new(terms.clone(), 1.0);
        for k in 0..200 {
            let x = (-1.0 + 4.5 * k as f64 / 200.0, 0.1 + 0.001 * k as f64);
            let direct: f64 = terms
                .iter()
                .map(|t| {
                    let (cx, cy, s) = (
                        rational_to_f64(&t.center.0),
                        rational_to_f64(&t.center.1),
                        rational_to_f64(&t.scale),
                    );
                    s * cup((x.0 - cx) / s, (x.1 - cy) / s)
                })
                .sum();
            assert!((all.eval(x) - direct).abs() < 1e-15);
            let parts: f64 = terms
                .iter()
                .map(|t| BumpSum::new(vec![*t], 1.0).eval(x))
                .sum();
            assert!((all.eval(x) - parts).abs() < 1e-15);
        }
    }

    #[test]
    fn jet_consistency() {
        let b = BumpSum::new(
            vec![
                Term { center: (q(0, 1), q(0, 1)), scale: q(1, 2) },
                Term { center: (q(1, 4), q(1, 8)), scale: q(1, 8) },
            ],
            1.7,
        );
        let h = 1e-6;
        for k in 0..50 {
            let x = (-0.3 + 0.013 * k as f64, 0.2 - 0.007 * k as f64);
            let j = b.jet(x);
            assert!((j[0] - b.eval(x)).abs() < 1e-15);
            let fx = (b.eval((x.0 + h, x.1)) - b.eval((x.0 - h, x.1))) / (2.0 * h);
            assert!((j[1] - fx).abs() < 1e-6);
            let g = b.grad(x);
            assert_eq!(g[0], j[1]);
        }
    }

    #[test]
    fn serde_round_trip() {
        let b = BumpSum::new(
            vec![Term { center: (q(1, 3), q(-2, 1)), scale: q(1, 16) }],
            0.5,
        );
        let s = serde_json::to_string(&b).unwrap();
        assert!(s.contains("\"1/3\""));
        let back: BumpSum = serde_json::from_str(&s).unwrap();
        assert_eq!(back, b);
        assert_eq!(back.eval((0.33, -2.0)), b.eval((0.33, -2.0)));
        assert!(serde_json::from_str::<BumpSum>(&s.replace("tensor", "radial")).is_err());
    }

    #[test]
    fn support_containment() {
        let b = BumpSum::single((q(0, 1), q(0, 1)), q(1, 1));
        let sq = Square::new((q(0, 1), q(0, 1)), q(3, 2)).unwrap();
        assert!(b.support_inside(&sq));
        let small = Square::new((q(0, 1), q(0, 1)), q(7, 5)).unwrap();
        assert!(!b.support_inside(&small));
    }
}
