use num::Zero;

use super::Rational;
use crate::error::{Error, Result};

/// Lower boundary of the convex hull of a finite point set, as a piecewise
/// linear function of the abscissa. All arithmetic is exact.
#[derive(Debug, Clone, PartialEq)]
pub struct Envelope {
    vertices: Vec<(Rational, Rational)>,
}

/// Lower convex envelope by a monotone-chain sweep over points sorted by
/// abscissa. When an abscissa repeats only its lowest ordinate is kept.
pub fn lower_convex_envelope(points: &[(Rational, Rational)]) -> Result<Envelope> {
    if points.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut pts = points.to_vec();
    pts.sort();
    pts.dedup_by(|later, earlier| later.0 == earlier.0);

    let mut hull: Vec<(Rational, Rational)> = Vec::with_capacity(pts.len());
    for p in pts {
        while hull.len() >= 2 {
            let (a, b) = (&hull[hull.len() - 2], &hull[hull.len() - 1]);
            // Drop b unless a -> b -> p turns strictly counter-clockwise.
            let cross = (&b.0 - &a.0) * (&p.1 - &a.1) - (&b.1 - &a.1) * (&p.0 - &a.0);
            if cross <= Rational::zero() {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    Ok(Envelope { vertices: hull })
}

impl Envelope {
    pub fn vertices(&self) -> &[(Rational, Rational)] {
        &self.vertices
    }

    pub fn min_x(&self) -> &Rational {
        &self.vertices[0].0
    }

    pub fn max_x(&self) -> &Rational {
        &self.vertices[self.vertices.len() - 1].0
    }

    /// Envelope value at `x`, or `None` outside `[min_x, max_x]`.
    pub fn eval(&self, x: &Rational) -> Option<Rational> {
        if x < self.min_x() || x > self.max_x() {
            return None;
        }
        let i = self.segment_index(x);
        let (x0, y0) = &self.vertices[i];
        if i + 1 == self.vertices.len() {
            return Some(y0.clone());
        }
        let (x1, y1) = &self.vertices[i + 1];
        Some(y0 + (y1 - y0) * (x - x0) / (x1 - x0))
    }

    /// Index of the segment `[v_i, v_{i+1}]` containing `x` (the last vertex for `x = max_x`).
    pub fn segment_index(&self, x: &Rational) -> usize {
        match self.vertices.binary_search_by(|v| v.0.cmp(x)) {
            Ok(i) => i,
            Err(i) => i.saturating_sub(1),
        }
    }

    /// Slopes strictly increase along the hull.
    pub fn is_convex(&self) -> bool {
        let slopes: Vec<Rational> =
            self.vertices.windows(2).map(|w| (&w[1].1 - &w[0].1) / (&w[1].0 - &w[0].0)).collect();
        slopes.windows(2).all(|s| s[0] < s[1])
    }

    pub fn is_non_increasing(&self) -> bool {
        self.vertices.windows(2).all(|w| w[1].1 <= w[0].1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::combinatorics::{rat, to_f64};
    use proptest::prelude::*;

    #[test]
    fn two_point_line() {
        let e = lower_convex_envelope(&[(rat(0, 1), rat(2, 1)), (rat(2, 1), rat(0, 1))]).unwrap();
        assert_eq!(e.eval(&rat(1, 1)), Some(rat(1, 1)));
        assert_eq!(e.eval(&rat(3, 1)), None);
    }

    #[test]
    fn collinear_middle_point_lies_on_envelope() {
        let pts = [(rat(0, 1), rat(4, 1)), (rat(1, 1), rat(2, 1)), (rat(2, 1), rat(0, 1))];
        let e = lower_convex_envelope(&pts).unwrap();
        assert_eq!(e.eval(&rat(1, 1)), Some(rat(2, 1)));
    }

    #[test]
    fn empty_input_is_an_error() {
        assert_eq!(lower_convex_envelope(&[]), Err(Error::EmptyInput));
    }

    #[test]
    fn mns_corners_for_two_files_ten_users() {
        // (tN/K, min{(K-t)/(t+1), N-tN/K}) plus the small-cache point (1/K, N(1-1/K)).
        let (n, k) = (2i64, 10i64);
        let mut pts: Vec<_> = (0..=k)
            .map(|t| {
                let m = rat(t * n, k);
                let coded = rat(k - t, t + 1);
                let uncoded = rat(n, 1) - &m;
                (m, coded.min(uncoded))
            })
            .collect();
        pts.push((rat(1, k), rat(n * (k - 1), k)));
        let v = to_f64(&lower_convex_envelope(&pts).unwrap().eval(&rat(1, 1)).unwrap());
        assert!((v - 0.794).abs() < 1e-3, "{v}");
    }

    proptest! {
        #[test]
        fn envelope_is_convex_and_below_inputs(raw in prop::collection::vec((0i64..40, 0i64..60), 1..25)) {
            let pts: Vec<_> = raw.iter().map(|&(x, y)| (rat(x, 4), rat(y, 3))).collect();
            let e = lower_convex_envelope(&pts).unwrap();
            prop_assert!(e.is_convex());
            for (x, y) in &pts {
                prop_assert!(e.eval(x).unwrap() <= *y);
            }
        }
    }
}
