//! Flexible aggregate kernel.
//!
//! Given the per-query distances of one object (or one index entry) to the `M`
//! query points, the flexible aggregate is the minimum, over every subset of
//! exactly `m` queries, of `max` or `sum` over that subset. Both aggregates are
//! monotone, so the optimum is always the `m` smallest distances.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Dist, Error, Result};

/// Largest `M` accepted by [`flexible_agg_bruteforce`].
pub const BRUTEFORCE_LIMIT: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AggregateKind {
    Max,
    Sum,
}

impl AggregateKind {
    pub const ALL: [AggregateKind; 2] = [AggregateKind::Max, AggregateKind::Sum];

    #[inline]
    fn fold<I: Iterator<Item = Dist>>(self, it: I) -> Dist {
        match self {
            AggregateKind::Max => it.max().unwrap_or(0),
            AggregateKind::Sum => it.fold(0, Dist::saturating_add),
        }
    }
}

impl fmt::Display for AggregateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AggregateKind::Max => "max",
            AggregateKind::Sum => "sum",
        })
    }
}

impl FromStr for AggregateKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "max" => Ok(AggregateKind::Max),
            "sum" => Ok(AggregateKind::Sum),
            other => Err(Error::InvalidQuery(format!("unknown aggregate `{other}`"))),
        }
    }
}

/// Query count, flexibility and the resulting subset size `m = ceil(phi * M)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlexSpec {
    pub queries: usize,
    pub phi: f64,
    pub m: usize,
}

impl FlexSpec {
    pub fn new(queries: usize, phi: f64) -> Result<Self> {
        if queries == 0 {
            return Err(Error::InvalidQuery("query set is empty".into()));
        }
        if !(phi > 0.0 && phi <= 1.0) {
            return Err(Error::InvalidQuery(format!("flexibility {phi} outside (0, 1]")));
        }
        // the epsilon keeps products like 0.3 * 10 = 3.0000000000000004 at 3
        let m = ((phi * queries as f64 - 1e-9).ceil() as usize).clamp(1, queries);
        Ok(Self { queries, phi, m })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AggResult {
    pub value: Dist,
    /// Indices of the chosen distances, ascending.
    pub subset: Vec<usize>,
}

fn check_m(len: usize, m: usize) -> Result<()> {
    if m == 0 || m > len {
        return Err(Error::SubsetSize { m, len });
    }
    Ok(())
}

/// Optimal `m`-subset by order statistics; ties prefer smaller indices.
pub fn flexible_agg(dists: &[Dist], kind: AggregateKind, m: usize) -> Result<AggResult> {
    check_m(dists.len(), m)?;
    let mut idx: Vec<usize> = (0..dists.len()).collect();
    if m < idx.len() {
        idx.select_nth_unstable_by_key(m - 1, |&i| (dists[i], i));
        idx.truncate(m);
    }
    idx.sort_unstable();
    let value = kind.fold(idx.iter().map(|&i| dists[i]));
    Ok(AggResult { value, subset: idx })
}

/// Reusable buffer for the allocation-free value-only kernel used on hot paths.
#[derive(Debug, Default, Clone)]
pub struct AggScratch {
    buf: Vec<Dist>,
}

impl AggScratch {
    /// Value of [`flexible_agg`] without the subset. `m` must be in range.
    #[inline]
    pub fn value(&mut self, dists: &[Dist], kind: AggregateKind, m: usize) -> Dist {
        debug_assert!(m >= 1 && m <= dists.len());
        self.buf.clear();
        self.buf.extend_from_slice(dists);
        self.value_in_place(kind, m)
    }

    /// Same as [`AggScratch::value`] over values produced by `it`.
    #[inline]
    pub fn value_from<I: IntoIterator<Item = Dist>>(&mut self, it: I, kind: AggregateKind, m: usize) -> Dist {
        self.buf.clear();
        self.buf.extend(it);
        debug_assert!(m >= 1 && m <= self.buf.len());
        self.value_in_place(kind, m)
    }

    fn value_in_place(&mut self, kind: AggregateKind, m: usize) -> Dist {
        let buf = &mut self.buf;
        if m < buf.len() {
            let (head, nth, _) = buf.select_nth_unstable(m - 1);
            match kind {
                AggregateKind::Max => *nth,
                AggregateKind::Sum => head.iter().fold(*nth, |a, &b| a.saturating_add(b)),
            }
        } else {
            kind.fold(buf.iter().copied())
        }
    }
}

/// Exhaustive minimum over all `C(M, m)` subsets. Independent reference for
/// [`flexible_agg`]; limited to `M <= 20`.
pub fn flexible_agg_bruteforce(dists: &[Dist], kind: AggregateKind, m: usize) -> Result<Dist> {
    if dists.len() > BRUTEFORCE_LIMIT {
        return Err(Error::EnumerationGuard { len: dists.len(), limit: BRUTEFORCE_LIMIT });
    }
    check_m(dists.len(), m)?;
    let mut best = Dist::MAX;
    for mask in 0u32..(1u32 << dists.len()) {
        if mask.count_ones() as usize != m {
            continue;
        }
        let chosen = (0..dists.len()).filter(|i| mask & (1 << i) != 0).map(|i| dists[i]);
        best = best.min(kind.fold(chosen));
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const D: [Dist; 4] = [5, 2, 9, 4];

    #[test]
    fn sum_picks_two_smallest() {
        let r = flexible_agg(&D, AggregateKind::Sum, 2).unwrap();
        assert_eq!(r.value, 6);
        assert_eq!(r.subset, vec![1, 3]);
        assert_eq!(flexible_agg_bruteforce(&D, AggregateKind::Sum, 2).unwrap(), 6);
    }

    #[test]
    fn max_is_mth_smallest() {
        assert_eq!(flexible_agg(&D, AggregateKind::Max, 2).unwrap().value, 4);
        assert_eq!(flexible_agg_bruteforce(&D, AggregateKind::Max, 2).unwrap(), 4);
    }

    #[test]
    fn full_set_and_singletons() {
        assert_eq!(flexible_agg(&D, AggregateKind::Max, 4).unwrap().value, 9);
        assert_eq!(flexible_agg_bruteforce(&D, AggregateKind::Max, 1).unwrap(), 2);
        assert_eq!(flexible_agg_bruteforce(&D, AggregateKind::Sum, 4).unwrap(), 20);
    }

    #[test]
    fn ties_prefer_small_indices() {
        let r = flexible_agg(&[3, 1, 3, 3], AggregateKind::Sum, 2).unwrap();
        assert_eq!(r.subset, vec![0, 1]);
    }

    #[test]
    fn subset_size_errors() {
        assert!(matches!(flexible_agg(&D, AggregateKind::Sum, 0), Err(Error::SubsetSize { .. })));
        assert!(matches!(flexible_agg(&D, AggregateKind::Sum, 5), Err(Error::SubsetSize { .. })));
        let big = vec![1; 21];
        assert!(matches!(
            flexible_agg_bruteforce(&big, AggregateKind::Sum, 3),
            Err(Error::EnumerationGuard { .. })
        ));
    }

    #[test]
    fn flex_spec_ceiling() {
        assert_eq!(FlexSpec::new(256, 0.5).unwrap().m, 128);
        assert_eq!(FlexSpec::new(10, 0.3).unwrap().m, 3);
        assert_eq!(FlexSpec::new(64, 0.1).unwrap().m, 7);
        assert_eq!(FlexSpec::new(3, 0.01).unwrap().m, 1);
        assert_eq!(FlexSpec::new(7, 1.0).unwrap().m, 7);
        assert!(FlexSpec::new(5, 0.0).is_err());
        assert!(FlexSpec::new(5, 1.5).is_err());
        assert!(FlexSpec::new(0, 0.5).is_err());
    }

    fn vec_and_m() -> impl Strategy<Value = (Vec<Dist>, usize)> {
        prop::collection::vec(0u64..50, 1..=12).prop_flat_map(|v| {
            let len = v.len();
            (Just(v), 1..=len)
        })
    }

    proptest! {
        #[test]
        fn kernel_matches_enumeration((d, m) in vec_and_m()) {
            for kind in AggregateKind::ALL {
                let fast = flexible_agg(&d, kind, m).unwrap();
                prop_assert_eq!(fast.value, flexible_agg_bruteforce(&d, kind, m).unwrap());
                prop_assert_eq!(fast.value, AggScratch::default().value(&d, kind, m));
                prop_assert_eq!(fast.subset.len(), m);
                prop_assert_eq!(kind.fold(fast.subset.iter().map(|&i| d[i])), fast.value);
            }
        }

        #[test]
        fn monotone_in_each_distance((d, m) in vec_and_m(), pos in 0usize..12, bump in 0u64..20) {
            let mut up = d.clone();
            let i = pos % d.len();
            up[i] += bump;
            for kind in AggregateKind::ALL {
                prop_assert!(flexible_agg(&up, kind, m).unwrap().value >= flexible_agg(&d, kind, m).unwrap().value);
            }
        }

        #[test]
        fn dominance((d, m) in vec_and_m(), seed in any::<u64>()) {
            let lower: Vec<Dist> = d.iter().enumerate().map(|(i, &x)| x.saturating_sub((seed >> (i % 60)) & 7)).collect();
            for kind in AggregateKind::ALL {
                prop_assert!(flexible_agg(&d, kind, m).unwrap().value >= flexible_agg(&lower, kind, m).unwrap().value);
            }
        }

        #[test]
        fn non_decreasing_in_m(d in prop::collection::vec(0u64..50, 1..=12)) {
            for kind in AggregateKind::ALL {
                let values: Vec<Dist> = (1..=d.len()).map(|m| flexible_agg(&d, kind, m).unwrap().value).collect();
                prop_assert!(values.windows(2).all(|w| w[0] <= w[1]));
            }
        }
    }
}
