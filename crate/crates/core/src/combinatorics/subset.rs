use std::fmt;

use serde::{Deserialize, Serialize};

use super::binom;

/// A set of users, bit `i` standing for user `i` (0-based). Displayed 1-based.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct UserSet(pub u32);

impl UserSet {
    pub const MAX_USERS: usize = 32;

    pub const fn empty() -> Self {
        UserSet(0)
    }

    pub fn full(k: usize) -> Self {
        assert!(k <= Self::MAX_USERS);
        if k == 32 {
            UserSet(u32::MAX)
        } else {
            UserSet((1u32 << k) - 1)
        }
    }

    pub fn singleton(u: usize) -> Self {
        UserSet(1 << u)
    }

    #[inline]
    pub fn contains(self, u: usize) -> bool {
        (self.0 >> u) & 1 == 1
    }

    pub fn with(self, u: usize) -> Self {
        UserSet(self.0 | (1 << u))
    }

    pub fn without(self, u: usize) -> Self {
        UserSet(self.0 & !(1 << u))
    }

    #[inline]
    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn union(self, o: Self) -> Self {
        UserSet(self.0 | o.0)
    }

    pub fn intersection(self, o: Self) -> Self {
        UserSet(self.0 & o.0)
    }

    pub fn difference(self, o: Self) -> Self {
        UserSet(self.0 & !o.0)
    }

    pub fn is_subset(self, o: Self) -> bool {
        self.0 & !o.0 == 0
    }

    /// Members in increasing order.
    pub fn iter(self) -> impl Iterator<Item = usize> {
        let mut bits = self.0;
        std::iter::from_fn(move || {
            (bits != 0).then(|| {
                let u = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                u
            })
        })
    }
}

impl FromIterator<usize> for UserSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        UserSet(iter.into_iter().fold(0, |acc, u| acc | (1 << u)))
    }
}

impl fmt::Display for UserSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, u) in self.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}", u + 1)?;
        }
        write!(f, "}}")
    }
}

/// Colexicographic ranking of the `t`-subsets of a `k`-element ground set.
///
/// Colex order on subsets coincides with numeric order on their bitmasks, so
/// rank `r` is the `r`-th smallest mask with `t` bits set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SubsetIndex {
    pub k: usize,
    pub t: usize,
}

impl SubsetIndex {
    pub fn new(k: usize, t: usize) -> Self {
        assert!(t <= k && k <= UserSet::MAX_USERS);
        SubsetIndex { k, t }
    }

    pub fn count(&self) -> u128 {
        binom(self.k as i64, self.t as i64)
    }

    pub fn rank(&self, s: UserSet) -> u128 {
        debug_assert_eq!(s.len(), self.t);
        s.iter().enumerate().map(|(i, c)| binom(c as i64, i as i64 + 1)).sum()
    }

    pub fn unrank(&self, mut r: u128) -> UserSet {
        assert!(r < self.count(), "rank out of range");
        let mut s = UserSet::empty();
        let mut c = self.k;
        for i in (1..=self.t).rev() {
            // Largest c with C(c, i) <= r.
            c -= 1;
            while binom(c as i64, i as i64) > r {
                c -= 1;
            }
            r -= binom(c as i64, i as i64);
            s = s.with(c);
        }
        s
    }
}

/// All `t`-subsets of `[0, k)` in colex order.
pub fn subsets_colex(k: usize, t: usize) -> impl Iterator<Item = UserSet> {
    assert!(t <= k && k < 32);
    let limit = 1u64 << k;
    let mut next = if t == 0 { Some(0u64) } else { Some((1u64 << t) - 1) };
    std::iter::from_fn(move || {
        let cur = next?;
        next = if cur == 0 {
            None
        } else {
            // Gosper's hack: next larger integer with the same popcount.
            let c = cur & cur.wrapping_neg();
            let r = cur + c;
            let n = (((r ^ cur) >> 2) / c) | r;
            (n < limit).then_some(n)
        };
        Some(UserSet(cur as u32))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn enumeration_counts_and_order() {
        for k in 0..=10 {
            for t in 0..=k {
                let all: Vec<_> = subsets_colex(k, t).collect();
                assert_eq!(all.len() as u128, binom(k as i64, t as i64));
                assert!(all.windows(2).all(|w| w[0] < w[1]));
                let idx = SubsetIndex::new(k, t);
                for (r, s) in all.iter().enumerate() {
                    assert_eq!(s.len(), t);
                    assert_eq!(idx.rank(*s), r as u128);
                    assert_eq!(idx.unrank(r as u128), *s);
                }
            }
        }
    }

    #[test]
    fn display_is_one_based() {
        let s: UserSet = [0, 3].into_iter().collect();
        assert_eq!(s.to_string(), "{1,4}");
        assert_eq!(UserSet::empty().to_string(), "{}");
    }

    proptest! {
        #[test]
        fn rank_unrank_bijection(k in 1usize..20, t_frac in 0.0f64..1.0, r_frac in 0.0f64..1.0) {
            let t = ((k as f64) * t_frac) as usize;
            let idx = SubsetIndex::new(k, t);
            let r = ((idx.count() as f64 - 1.0) * r_frac) as u128;
            let s = idx.unrank(r);
            prop_assert_eq!(s.len(), t);
            prop_assert!(s.is_subset(UserSet::full(k)));
            prop_assert_eq!(idx.rank(s), r);
        }
    }
}
