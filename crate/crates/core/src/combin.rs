//! Small combinatorics utilities: binomial coefficients and the
//! combinatorial number system (colex ranking of k-subsets).
//!
//! Vertex ids for r-subset universes are assigned through `rank_subset`, so
//! everything downstream (hosts, detectors, verifiers) agrees on the mapping
//! without sharing tables.

/// Binomial coefficient as u64, saturating at u64::MAX on overflow.
///
/// Sizes used in this crate stay far below the saturation point; saturation
/// only serves the size guards, which treat huge values as "too big" anyway.
#[must_use]
pub fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // Multiply first, divide after: the running product of i+1 consecutive
        // ratios is always integral.
        acc = acc.saturating_mul((n - i) as u128) / (i + 1) as u128;
        if acc > u64::MAX as u128 {
            return u64::MAX;
        }
    }
    acc as u64
}

/// Colex rank of a strictly increasing k-subset: sum of C(subset[i], i+1).
///
/// Subsets of the same size are ordered colexicographically; ranks are dense
/// in 0..C(n, k) for subsets of [n].
#[must_use]
pub fn rank_subset(subset: &[u32]) -> u64 {
    debug_assert!(subset.windows(2).all(|w| w[0] < w[1]), "subset must be strictly increasing");
    subset
        .iter()
        .enumerate()
        .map(|(i, &v)| binomial(v as u64, i as u64 + 1))
        .sum()
}

/// Inverse of `rank_subset`: the strictly increasing k-subset with this colex rank.
#[must_use]
pub fn unrank_subset(mut rank: u64, k: u32) -> Vec<u32> {
    let mut out = vec![0u32; k as usize];
    for i in (1..=k as u64).rev() {
        // Largest v with C(v, i) <= rank.
        let mut v = i - 1;
        while binomial(v + 1, i) <= rank {
            v += 1;
        }
        rank -= binomial(v, i);
        out[i as usize - 1] = v as u32;
    }
    out
}

/// Visits every strictly increasing k-subset of 0..n in lexicographic order.
pub fn for_each_subset(n: u32, k: u32, mut f: impl FnMut(&[u32])) {
    if k > n {
        return;
    }
    if k == 0 {
        f(&[]);
        return;
    }
    let k = k as usize;
    let mut cur: Vec<u32> = (0..k as u32).collect();
    loop {
        f(&cur);
        // Advance: find rightmost slot that can still move up.
        let mut i = k;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if cur[i] + 1 <= n - (k - i) as u32 {
                cur[i] += 1;
                for j in i + 1..k {
                    cur[j] = cur[j - 1] + 1;
                }
                break;
            }
        }
    }
}
