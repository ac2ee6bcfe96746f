//! Batcher odd-even merge sorting network.
//!
//! The network is a fixed sequence of compare-exchange stages that depends
//! only on the input length, so sorting with it reveals nothing about the
//! values. Stages contain pairwise-disjoint index pairs and can be executed
//! as one vectorized comparison round each. The plaintext oracle walks the
//! identical network so that equal-key permutations match the secure sort
//! exactly.

/// Smallest power of two >= n.
pub fn pad_to_pow2(n: usize) -> usize {
    n.next_power_of_two()
}

/// Compare-exchange stages for a power-of-two input size. Each pair `(lo, hi)`
/// keeps the larger key at `lo` in a descending sort.
pub fn batcher_stages(n: usize) -> Vec<Vec<(usize, usize)>> {
    assert!(n.is_power_of_two(), "network size must be a power of two");
    let mut stages = Vec::new();
    let mut p = 1;
    while p < n {
        let mut k = p;
        while k >= 1 {
            let mut stage = Vec::new();
            let mut j = k % p;
            while j + k < n {
                let upper = std::cmp::min(k, n - j - k);
                for i in 0..upper {
                    if (i + j) / (2 * p) == (i + j + k) / (2 * p) {
                        stage.push((i + j, i + j + k));
                    }
                }
                j += 2 * k;
            }
            if !stage.is_empty() {
                stages.push(stage);
            }
            k /= 2;
        }
        p *= 2;
    }
    stages
}

/// Total compare-exchanges in the network for size n.
pub fn network_size(n: usize) -> usize {
    batcher_stages(n).iter().map(|s| s.len()).sum()
}

/// Plaintext descending sort through the network, co-permuting `payload`
/// rows with the identical exchanges. Ties keep the pair in place, matching
/// the secure comparator's `x >= y -> 1` convention.
pub fn plain_sort_desc<K: PartialOrd + Copy, P: Clone>(keys: &mut [K], payload: &mut [P]) {
    let n = keys.len();
    assert!(n.is_power_of_two());
    assert!(payload.is_empty() || payload.len() == n);
    for stage in batcher_stages(n) {
        for (lo, hi) in stage {
            if keys[lo] < keys[hi] {
                keys.swap(lo, hi);
                if !payload.is_empty() {
                    payload.swap(lo, hi);
                }
            }
        }
    }
}
