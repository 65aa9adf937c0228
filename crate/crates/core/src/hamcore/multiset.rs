//! Enumeration of mode multisets, the building block of exhaustive scans.

use std::collections::BTreeMap;

/// All non-decreasing sequences of length `size` drawn from `lo..=hi`.
pub fn multisets(lo: i32, hi: i32, size: usize) -> Vec<Vec<i32>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(size);
    fn rec(start: i32, hi: i32, left: usize, cur: &mut Vec<i32>, out: &mut Vec<Vec<i32>>) {
        if left == 0 {
            out.push(cur.clone());
            return;
        }
        for v in start..=hi {
            cur.push(v);
            rec(v, hi, left - 1, cur, out);
            cur.pop();
        }
    }
    if lo <= hi || size == 0 {
        rec(lo, hi, size, &mut cur, &mut out);
    }
    out
}

/// Multisets keyed by `(Σℓ, Σℓ²)`.
pub fn multisets_by_moments(lo: i32, hi: i32, size: usize) -> BTreeMap<(i64, i64), Vec<Vec<i32>>> {
    let mut map: BTreeMap<(i64, i64), Vec<Vec<i32>>> = BTreeMap::new();
    for m in multisets(lo, hi, size) {
        let s: i64 = m.iter().map(|&x| i64::from(x)).sum();
        let s2: i64 = m.iter().map(|&x| i64::from(x) * i64::from(x)).sum();
        map.entry((s, s2)).or_default().push(m);
    }
    map
}

/// `Π_k a_k!` for the multiplicities of a sorted multiset.
pub fn multiplicity_factorial(sorted: &[i32]) -> u64 {
    let mut out = 1u64;
    let mut run = 0u64;
    for (i, v) in sorted.iter().enumerate() {
        run = if i > 0 && sorted[i - 1] == *v { run + 1 } else { 1 };
        out *= run;
    }
    out
}

pub fn factorial(n: u64) -> u64 {
    (1..=n).product()
}

pub fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u64, |acc, i| acc * (n - i) / (i + 1))
}
