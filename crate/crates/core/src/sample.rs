//! Deterministic low-discrepancy point clouds.

const PRIMES: [u64; 24] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89];

/// Van der Corput radical inverse of `i` in base `b`.
pub fn radical_inverse(mut i: u64, b: u64) -> f64 {
    let inv = 1.0 / b as f64;
    let mut f = inv;
    let mut out = 0.0;
    while i > 0 {
        out += (i % b) as f64 * f;
        i /= b;
        f *= inv;
    }
    out
}

/// The `i`-th point of the Halton sequence in `[0, 1)^dim`; `dim ≤ 24`.
pub fn halton(i: u64, dim: usize) -> Vec<f64> {
    assert!(dim <= PRIMES.len(), "Halton sequence supports at most {} dimensions", PRIMES.len());
    PRIMES[..dim].iter().map(|&b| radical_inverse(i, b)).collect()
}

/// Iterator over Halton points mapped to unit directions in ℝⁿ, rejecting
/// cube points outside the unit ball so the directions are uniform.
/// `skip` offsets into the sequence.
pub fn halton_directions(n: usize, skip: u64) -> impl Iterator<Item = Vec<f64>> {
    (skip + 1..).filter_map(move |i| {
        let v: Vec<f64> = halton(i, n).into_iter().map(|u| 2.0 * u - 1.0).collect();
        let r = crate::numlin::norm2(&v);
        (r <= 1.0 && r > 1e-3).then(|| v.into_iter().map(|c| c / r).collect())
    })
}

/// `count` points in the closed ball of radius `radius`, Halton-distributed.
pub fn halton_ball(n: usize, radius: f64, count: usize) -> Vec<Vec<f64>> {
    (1u64..)
        .map(|i| halton(i, n).into_iter().map(|u| radius * (2.0 * u - 1.0)).collect::<Vec<f64>>())
        .filter(|v| crate::numlin::norm2(v) <= radius)
        .take(count)
        .collect()
}
