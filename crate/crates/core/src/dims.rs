//! Dimension counts for the graded pieces on both sides of the cocycle map.
//!
//! Both sides are polynomial algebras on graded variable sets, so each graded
//! dimension is a restricted partition count: the number of multisets of
//! variable degrees summing to the weight. Counts overflow u64 well inside
//! the ranges of interest, hence BigUint throughout.

use num_bigint::BigUint;
use num_traits::{One, Zero};

/// Number of multisets over variables with the given degrees summing to v,
/// for every v <= v_max. Standard coin-change DP, one pass per variable.
pub fn partition_counts(degrees: &[u32], v_max: u32) -> Vec<BigUint> {
    let n = v_max as usize + 1;
    let mut dp = vec![BigUint::zero(); n];
    dp[0] = BigUint::one();
    for &d in degrees {
        let d = d as usize;
        if d == 0 {
            continue;
        }
        for v in d..n {
            let prev = dp[v - d].clone();
            dp[v] += prev;
        }
    }
    dp
}

/// Degrees of the polylogarithmic coordinates up to depth d: one of degree 1
/// (the logarithm) and one of degree k for each 1 <= k <= d.
pub fn pl_degrees(d: u32) -> Vec<u32> {
    let mut v = vec![1];
    v.extend(1..=d);
    v
}

/// Degrees of the coefficient coordinates: two of degree 1 per prime, and
/// one of each odd degree 3 <= k <= d.
pub fn phi_degrees(s: u8, d: u32) -> Vec<u32> {
    let mut v = vec![1; 2 * s as usize];
    let mut k = 3;
    while k <= d {
        v.push(k);
        k += 2;
    }
    v
}

/// dim of the weight-v piece of the polylogarithmic side.
pub fn dim_pl(d: u32, v: u32) -> BigUint {
    partition_counts(&pl_degrees(d), v).pop().unwrap()
}

/// dim of the weight-v piece of the coefficient side.
pub fn dim_phi(s: u8, d: u32, v: u32) -> BigUint {
    partition_counts(&phi_degrees(s, d), v).pop().unwrap()
}

/// Both dimensions for every weight up to v_max, sharing the DP tables.
pub fn dims_upto(s: u8, d: u32, v_max: u32) -> Vec<(u32, BigUint, BigUint)> {
    let phi = partition_counts(&phi_degrees(s, d), v_max);
    let pl = partition_counts(&pl_degrees(d), v_max);
    (0..=v_max)
        .map(|v| (v, phi[v as usize].clone(), pl[v as usize].clone()))
        .collect()
}

/// First weight where the polylogarithmic side outgrows the coefficient
/// side, together with both dimensions there. None if no such weight
/// <= v_max exists.
pub fn first_advantage(s: u8, d: u32, v_max: u32) -> Option<(u32, BigUint, BigUint)> {
    dims_upto(s, d, v_max)
        .into_iter()
        .find(|(v, phi, pl)| *v > 0 && pl > phi)
}

/// The (v, dim_phi, dim_pl) row per depth for a whole depth range; None for
/// depths where the coefficient side stays at least as large through v_max.
pub fn scan_table(
    s: u8,
    d_min: u32,
    d_max: u32,
    v_max: u32,
) -> Vec<(u32, Option<(u32, BigUint, BigUint)>)> {
    (d_min..=d_max)
        .map(|d| (d, first_advantage(s, d, v_max)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn big(s: &str) -> BigUint {
        s.parse().unwrap()
    }

    #[test]
    fn pl_side_depth_one_is_linear() {
        // Q[log, Li1], both degree 1: dim of weight v is v + 1.
        for v in 0..20 {
            assert_eq!(dim_pl(1, v), BigUint::from(v + 1));
        }
    }

    #[test]
    fn phi_side_single_prime_shallow() {
        // Two degree-1 variables: dim of weight v is v + 1; with s primes and
        // d < 3 it is the stars-and-bars count C(2s + v - 1, 2s - 1).
        for v in 0..10u64 {
            assert_eq!(dim_phi(1, 2, v as u32), BigUint::from(v + 1));
            let c43 = (v + 1) * (v + 2) * (v + 3) / 6; // s = 2: C(v+3, 3)
            assert_eq!(dim_phi(2, 2, v as u32), BigUint::from(c43));
        }
    }

    #[test]
    fn weight_zero_is_one_dimensional() {
        assert_eq!(dim_pl(6, 0), BigUint::one());
        assert_eq!(dim_phi(2, 6, 0), BigUint::one());
    }

    #[test]
    fn hand_checked_small_weights() {
        // s=2, d=6, v=2: phi vars t-degrees {1,1,1,1}; multisets of size
        // summing to 2: C(5,3)=10. pl vars {1,1,2,3,4,5,6}: 1+2+... = let DP say 4.
        assert_eq!(dim_phi(2, 6, 2), BigUint::from(10u32));
        assert_eq!(dim_pl(6, 2), BigUint::from(4u32));
        // d=2, v=2: pl = Q[log, Li1, Li2], weight 2: log^2, log Li1, Li1^2, Li2.
        assert_eq!(dim_pl(2, 2), BigUint::from(4u32));
    }

    #[test]
    fn crossover_row_depth_six() {
        let (v, phi, pl) = first_advantage(2, 6, 400).unwrap();
        assert_eq!(v, 251);
        assert_eq!(phi, big("622565228"));
        assert_eq!(pl, big("622894943"));
    }

    #[test]
    fn crossover_row_depth_eight() {
        let (v, phi, pl) = first_advantage(2, 8, 400).unwrap();
        assert_eq!(v, 99);
        assert_eq!(phi, big("21381332"));
        assert_eq!(pl, big("21582623"));
    }

    #[test]
    fn no_crossover_at_shallow_depth() {
        // For d <= 5 at s = 2 the coefficient side dominates at every weight
        // in range: there are 4+ degree-1 phi variables against 2+1 on the
        // polylogarithmic side and too few higher generators to catch up.
        for d in 1..=5 {
            assert!(first_advantage(2, d, 400).is_none(), "depth {d}");
        }
    }

    #[test]
    fn dims_upto_matches_pointwise() {
        let rows = dims_upto(2, 6, 30);
        for (v, phi, pl) in rows {
            assert_eq!(phi, dim_phi(2, 6, v));
            assert_eq!(pl, dim_pl(6, v));
        }
    }
}
