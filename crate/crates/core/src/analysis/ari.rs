use alloc::collections::BTreeMap;

use crate::error::{Error, Result};

/// Unordered item pairs classified by whether each partition keeps them
/// together.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PairCounts {
    /// Together in both partitions (a).
    pub together_both: u64,
    /// Apart in both partitions (b).
    pub apart_both: u64,
    /// Together in the first only (c).
    pub together_first_only: u64,
    /// Together in the second only (d).
    pub together_second_only: u64,
}

impl PairCounts {
    pub fn total(&self) -> u64 {
        self.together_both + self.apart_both + self.together_first_only + self.together_second_only
    }
}

fn pairs(n: u64) -> u64 {
    n * n.saturating_sub(1) / 2
}

struct Table {
    n: u64,
    /// Σ C(n_ij, 2) over the contingency table.
    within: u64,
    /// Σ C(a_i, 2) over the first partition's clusters.
    first: u64,
    /// Σ C(b_j, 2) over the second partition's clusters.
    second: u64,
}

fn table(z1: &[usize], z2: &[usize]) -> Result<Table> {
    if z1.len() != z2.len() {
        return Err(Error::PartitionMismatch {
            left: z1.len(),
            right: z2.len(),
        });
    }
    let mut cells: BTreeMap<(usize, usize), u64> = BTreeMap::new();
    let mut rows: BTreeMap<usize, u64> = BTreeMap::new();
    let mut cols: BTreeMap<usize, u64> = BTreeMap::new();
    for (&a, &b) in z1.iter().zip(z2) {
        *cells.entry((a, b)).or_default() += 1;
        *rows.entry(a).or_default() += 1;
        *cols.entry(b).or_default() += 1;
    }
    Ok(Table {
        n: z1.len() as u64,
        within: cells.values().map(|&c| pairs(c)).sum(),
        first: rows.values().map(|&c| pairs(c)).sum(),
        second: cols.values().map(|&c| pairs(c)).sum(),
    })
}

pub fn pair_counts(z1: &[usize], z2: &[usize]) -> Result<PairCounts> {
    let t = table(z1, z2)?;
    let a = t.within;
    Ok(PairCounts {
        together_both: a,
        apart_both: pairs(t.n) + a - t.first - t.second,
        together_first_only: t.first - a,
        together_second_only: t.second - a,
    })
}

/// (a + b) / C(n, 2); 1 when there are fewer than two items.
pub fn rand_index(z1: &[usize], z2: &[usize]) -> Result<f64> {
    let c = pair_counts(z1, z2)?;
    let total = c.total();
    if total == 0 {
        return Ok(1.0);
    }
    Ok((c.together_both + c.apart_both) as f64 / total as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdjustedRand {
    pub value: f64,
    /// The permutation-model expectation equals 1, so the index is not
    /// defined; `value` is then 1 for identical partitions and 0 otherwise.
    pub degenerate: bool,
}

/// Rand index corrected for chance under the permutation model at fixed
/// cluster sizes, evaluated exactly in integers as
/// 2(N a − S₁ S₂) / (N (S₁ + S₂) − 2 S₁ S₂) with N = C(n, 2).
pub fn adjusted_rand_index(z1: &[usize], z2: &[usize]) -> Result<AdjustedRand> {
    let t = table(z1, z2)?;
    let n = pairs(t.n) as i128;
    let (a, s1, s2) = (t.within as i128, t.first as i128, t.second as i128);
    let numerator = 2 * (n * a - s1 * s2);
    let denominator = n * (s1 + s2) - 2 * s1 * s2;
    if denominator == 0 {
        // Both partitions are trivial in the same way, or there are < 2 items.
        let identical = a == s1 && a == s2;
        return Ok(AdjustedRand {
            value: if identical { 1.0 } else { 0.0 },
            degenerate: true,
        });
    }
    Ok(AdjustedRand {
        value: numerator as f64 / denominator as f64,
        degenerate: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rand_index_examples() {
        assert_eq!(rand_index(&[0, 0, 1, 1], &[5, 5, 7, 7]).unwrap(), 1.0);
        let c = pair_counts(&[0, 0, 1, 1], &[0, 1, 0, 1]).unwrap();
        assert_eq!(c.together_both, 0);
        assert_eq!(c.apart_both, 2);
        assert!((rand_index(&[0, 0, 1, 1], &[0, 1, 0, 1]).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(rand_index(&[0, 1, 2, 3], &[0, 0, 0, 0]).unwrap(), 0.0);
        assert!(rand_index(&[0, 1], &[0]).is_err());
    }

    #[test]
    fn ari_examples() {
        let same = adjusted_rand_index(&[0, 0, 1, 2], &[2, 2, 0, 1]).unwrap();
        assert_eq!(same.value, 1.0);
        assert!(!same.degenerate);
        // Exact: a = 0, S1 = S2 = 2, N = 6 -> 2(0 - 4) / (6·4 - 8) = -1/2.
        let crossed = adjusted_rand_index(&[0, 0, 1, 1], &[0, 1, 0, 1]).unwrap();
        assert_eq!(crossed.value, -0.5);
        let back = adjusted_rand_index(&[0, 1, 0, 1], &[0, 0, 1, 1]).unwrap();
        assert_eq!(back.value, crossed.value);
    }

    #[test]
    fn degenerate_cases() {
        let ones = adjusted_rand_index(&[0, 0, 0], &[1, 1, 1]).unwrap();
        assert!(ones.degenerate);
        assert_eq!(ones.value, 1.0);
        let singles = adjusted_rand_index(&[0, 1, 2], &[2, 1, 0]).unwrap();
        assert!(singles.degenerate && singles.value == 1.0);
        // One big cluster vs singletons is well defined and equals 0.
        let mixed = adjusted_rand_index(&[0, 0, 0], &[0, 1, 2]).unwrap();
        assert!(!mixed.degenerate);
        assert_eq!(mixed.value, 0.0);
    }
}
