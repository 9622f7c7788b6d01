//! Reference implementations used to check the library against values
//! computed a different way.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use lbm::{BinaryDataMatrix, CoPartition};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// log of x (x+1) ... (x+k-1).
fn ln_rising(x: f64, k: u64) -> f64 {
    (0..k).map(|i| (x + i as f64).ln()).sum()
}

/// Integrated completed likelihood assembled from Polya-urn sequential
/// predictive probabilities, with no gamma function anywhere.
pub fn icl_oracle(data: &BinaryDataMatrix, part: &CoPartition, a: f64, b: f64) -> f64 {
    let (g, m) = (part.g, part.m);
    let mut rows = vec![0u64; g];
    let mut cols = vec![0u64; m];
    part.z.iter().for_each(|&k| rows[k] += 1);
    part.w.iter().for_each(|&l| cols[l] += 1);
    let mut ones = vec![vec![0u64; m]; g];
    let mut zeros = vec![vec![0u64; m]; g];
    for i in 0..data.n() {
        for j in 0..data.q() {
            let (k, l) = (part.z[i], part.w[j]);
            if data.get(i, j) == 1 {
                ones[k][l] += 1;
            } else {
                zeros[k][l] += 1;
            }
        }
    }
    let labels = |sizes: &[u64], total: usize| {
        sizes.iter().map(|&s| ln_rising(a, s)).sum::<f64>()
            - ln_rising(a * sizes.len() as f64, total as u64)
    };
    let mut out = labels(&rows, data.n()) + labels(&cols, data.q());
    for k in 0..g {
        for l in 0..m {
            let (n1, n0) = (ones[k][l], zeros[k][l]);
            out += ln_rising(b, n1) + ln_rising(b, n0) - ln_rising(2.0 * b, n1 + n0);
        }
    }
    out
}

pub fn random_matrix(rng: &mut impl Rng, n: usize, q: usize) -> BinaryDataMatrix {
    let p: f64 = rng.random();
    let cells = (0..n * q)
        .map(|_| u8::from(rng.random::<f64>() < p))
        .collect();
    BinaryDataMatrix::new(n, q, cells).unwrap()
}

pub fn random_labels(rng: &mut impl Rng, len: usize, groups: usize) -> Vec<usize> {
    (0..len).map(|_| rng.random_range(0..groups)).collect()
}

/// Fewest disagreements over every surjective map from the side with more
/// groups onto the side with fewer, found by listing all maps.
pub fn brute_force_misclassified(
    ref_z: &[usize],
    est_z: &[usize],
    g_ref: usize,
    g_est: usize,
) -> u64 {
    let (from, to, from_g, to_g) = if g_est >= g_ref {
        (est_z, ref_z, g_est, g_ref)
    } else {
        (ref_z, est_z, g_ref, g_est)
    };
    let mut best = 0u64;
    let mut map = vec![0usize; from_g];
    loop {
        let mut hit = vec![false; to_g];
        map.iter().for_each(|&t| hit[t] = true);
        if hit.iter().all(|&h| h) {
            let agree = from.iter().zip(to).filter(|&(&f, &t)| map[f] == t).count() as u64;
            best = best.max(agree);
        }
        // odometer increment
        let mut pos = 0;
        loop {
            if pos == from_g {
                return ref_z.len() as u64 - best;
            }
            map[pos] += 1;
            if map[pos] < to_g {
                break;
            }
            map[pos] = 0;
            pos += 1;
        }
    }
}

/// Gaps whose summary is min 700, quartiles 4533.75 / 6595.5 / 13398.5,
/// mean 10534.125 and max 36345.
pub const TABLE_GAPS: [usize; 16] = [
    700, 2000, 3000, 4500, 4545, 5000, 6000, 6500, 6691, 8000, 10000, 13000, 14594, 20000, 27671,
    36345,
];

pub fn cumulative(gaps: &[usize]) -> Vec<usize> {
    gaps.iter()
        .scan(0, |acc, &g| {
            *acc += g;
            Some(*acc)
        })
        .collect()
}

/// Share of rows whose label matches the truth after the best relabeling.
pub fn accuracy(truth: &[usize], est: &[usize], g_true: usize, g_est: usize) -> f64 {
    1.0 - brute_force_misclassified(truth, est, g_true, g_est) as f64 / truth.len() as f64
}
