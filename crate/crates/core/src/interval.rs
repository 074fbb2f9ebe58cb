//! Sorted unions of disjoint closed intervals and k-way intersection by an
//! endpoint sweep.

use schemars::JsonSchema;
use serde::{Deserialize, Serialize};

use crate::summation::CompensatedSum;

/// Endpoints closer than this are treated as coincident when merging.
pub const MERGE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        debug_assert!(lo <= hi, "interval [{lo}, {hi}] is reversed");
        Self { lo, hi }
    }

    pub fn len(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, JsonSchema)]
pub struct IntervalUnion {
    pub intervals: Vec<Interval>,
    pub total_measure: f64,
    pub component_count: usize,
}

impl IntervalUnion {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Build from intervals sorted by `lo`; overlapping or touching
    /// intervals (gap ≤ [`MERGE_TOL`]) are merged.
    pub fn from_sorted(items: impl IntoIterator<Item = Interval>) -> Self {
        let mut out: Vec<Interval> = Vec::new();
        for iv in items {
            match out.last_mut() {
                Some(last) if iv.lo <= last.hi + MERGE_TOL => {
                    debug_assert!(iv.lo + MERGE_TOL >= last.lo, "input not sorted");
                    if iv.hi > last.hi {
                        last.hi = iv.hi;
                    }
                }
                _ => out.push(iv),
            }
        }
        Self::from_disjoint(out)
    }

    /// Build from arbitrary intervals (sorted internally).
    pub fn from_unsorted(mut items: Vec<Interval>) -> Self {
        items.sort_by(|a, b| a.lo.total_cmp(&b.lo));
        Self::from_sorted(items)
    }

    fn from_disjoint(intervals: Vec<Interval>) -> Self {
        let total_measure = intervals
            .iter()
            .map(Interval::len)
            .sum::<CompensatedSum>()
            .value();
        let component_count = intervals.len();
        Self {
            intervals,
            total_measure,
            component_count,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn contains(&self, x: f64) -> bool {
        let idx = self.intervals.partition_point(|iv| iv.hi < x);
        self.intervals.get(idx).is_some_and(|iv| iv.lo <= x)
    }

    /// `Σ log(hi/lo)` over components; requires positive endpoints.
    pub fn log_measure(&self) -> f64 {
        self.intervals
            .iter()
            .map(|iv| (iv.hi / iv.lo).ln())
            .sum::<CompensatedSum>()
            .value()
    }

    /// Intersection of several unions by a sweep over all endpoints: a point
    /// belongs to the result when it is covered by every input.
    pub fn intersect_all(unions: &[&IntervalUnion]) -> IntervalUnion {
        match unions.len() {
            0 => return IntervalUnion::empty(),
            1 => return unions[0].clone(),
            _ => {}
        }
        let k = unions.len() as i32;
        let mut events: Vec<(f64, i32)> =
            Vec::with_capacity(unions.iter().map(|u| 2 * u.intervals.len()).sum());
        for u in unions {
            for iv in &u.intervals {
                events.push((iv.lo, 1));
                events.push((iv.hi, -1));
            }
        }
        // Opens sort before closes at equal coordinates: closed intervals.
        events.sort_by(|a, b| a.0.total_cmp(&b.0).then(b.1.cmp(&a.1)));
        let mut depth = 0;
        let mut start = 0.0;
        let mut out = Vec::new();
        for (x, delta) in events {
            if delta > 0 {
                depth += 1;
                if depth == k {
                    start = x;
                }
            } else {
                if depth == k && x - start > MERGE_TOL {
                    out.push(Interval::new(start, x));
                }
                depth -= 1;
            }
        }
        IntervalUnion::from_sorted(out)
    }

    pub fn intersect(&self, other: &IntervalUnion) -> IntervalUnion {
        Self::intersect_all(&[self, other])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn u(pairs: &[(f64, f64)]) -> IntervalUnion {
        IntervalUnion::from_unsorted(pairs.iter().map(|&(a, b)| Interval::new(a, b)).collect())
    }

    #[test]
    fn merges_touching_and_overlapping() {
        let x = u(&[(0.0, 1.0), (1.0, 2.0), (3.0, 4.0), (3.5, 5.0)]);
        assert_eq!(x.component_count, 2);
        assert_eq!(x.total_measure, 4.0);
        assert!(x.contains(1.0));
        assert!(x.contains(5.0));
        assert!(!x.contains(2.5));
    }

    #[test]
    fn three_way_intersection() {
        let a = u(&[(0.0, 10.0)]);
        let b = u(&[(1.0, 3.0), (5.0, 8.0)]);
        let c = u(&[(2.0, 6.0), (7.0, 7.5)]);
        let r = IntervalUnion::intersect_all(&[&a, &b, &c]);
        assert_eq!(
            r.intervals,
            vec![
                Interval::new(2.0, 3.0),
                Interval::new(5.0, 6.0),
                Interval::new(7.0, 7.5)
            ]
        );
        assert_eq!(r.total_measure, 2.5);
    }

    #[test]
    fn disjoint_inputs_intersect_to_empty() {
        let a = u(&[(0.0, 1.0)]);
        let b = u(&[(2.0, 3.0)]);
        assert!(a.intersect(&b).is_empty());
    }

    #[test]
    fn log_measure_of_decade() {
        let x = u(&[(10.0, 100.0)]);
        assert!((x.log_measure() - 10f64.ln()).abs() < 1e-15);
    }
}
