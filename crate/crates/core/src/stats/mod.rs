//! Sign-flip permutation tests, one-way ANOVA and descriptive statistics.

pub mod special;

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::CounterRng;
use crate::scalar::{CompensatedSum, Real};

/// Sample sizes up to this many values are enumerated exhaustively (2^20 sign patterns).
pub const EXACT_ENUMERATION_MAX_VALUES: usize = 20;
pub const DEFAULT_DRAWS: u64 = 10_000;

/// Alternative hypothesis of a permutation test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tail {
    /// Observed mean larger than under the null.
    #[default]
    Upper,
    Lower,
    Two,
}

impl FromStr for Tail {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "upper" | "greater" => Ok(Tail::Upper),
            "lower" | "less" => Ok(Tail::Lower),
            "two" | "two-sided" | "both" => Ok(Tail::Two),
            other => Err(Error::InvalidArgument(format!("unknown tail '{other}'"))),
        }
    }
}

impl fmt::Display for Tail {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Tail::Upper => "upper",
            Tail::Lower => "lower",
            Tail::Two => "two",
        })
    }
}

/// Outcome of [`sign_flip_permutation`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PermutationResult<T> {
    pub observed_mean: T,
    /// Mean of the permutation distribution of the mean.
    pub null_mean: T,
    pub baseline: T,
    /// One-sided p for `tail`; for `Tail::Two` the side of the observed deviation.
    pub p_one_sided: f64,
    pub p_two_sided: f64,
    /// Number of sign patterns evaluated (2^n in exact mode).
    pub n_draws: u64,
    pub n_values: usize,
    pub seed: u64,
    pub tail: Tail,
    /// Full enumeration was used instead of sampling.
    pub exact: bool,
}

/// Sign-flip permutation test of the mean against `baseline`.
///
/// Deviations `dᵢ = valueᵢ − baseline` are negated independently with
/// probability ½ and the mean recomputed. Up to
/// [`EXACT_ENUMERATION_MAX_VALUES`] values every sign pattern is enumerated
/// and p is the exact fraction of patterns at least as extreme. Larger inputs
/// draw `n_draws` patterns; pattern `t` is generated from the counter-based
/// stream `(seed, t)`, and p uses the add-one estimate
/// `(1 + #extreme) / (1 + n_draws)`.
pub fn sign_flip_permutation<T: Real>(
    values: &[T],
    baseline: T,
    n_draws: u64,
    seed: u64,
    tail: Tail,
) -> Result<PermutationResult<T>> {
    let setup = Setup::new(values, baseline, n_draws, tail)?;
    if setup.dev.len() <= EXACT_ENUMERATION_MAX_VALUES {
        Ok(exact_path(&setup, seed))
    } else {
        Ok(sampled_path(&setup, n_draws, seed))
    }
}

/// Full enumeration regardless of size (at most 40 values).
pub fn sign_flip_permutation_exact<T: Real>(values: &[T], baseline: T, tail: Tail) -> Result<PermutationResult<T>> {
    if values.len() > 40 {
        return Err(Error::InvalidArgument(format!(
            "exact enumeration of 2^{} sign patterns is infeasible",
            values.len()
        )));
    }
    Ok(exact_path(&Setup::new(values, baseline, 1, tail)?, 0))
}

/// Monte-Carlo sampling regardless of size.
pub fn sign_flip_permutation_sampled<T: Real>(
    values: &[T],
    baseline: T,
    n_draws: u64,
    seed: u64,
    tail: Tail,
) -> Result<PermutationResult<T>> {
    Ok(sampled_path(&Setup::new(values, baseline, n_draws, tail)?, n_draws, seed))
}

struct Setup<T> {
    dev: Vec<T>,
    baseline: T,
    observed_sum: T,
    observed_mean: T,
    eps: T,
    /// Direction counted by the one-sided p.
    side: Tail,
    tail: Tail,
}

impl<T: Real> Setup<T> {
    fn new(values: &[T], baseline: T, n_draws: u64, tail: Tail) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidArgument("permutation test needs at least one value".into()));
        }
        if n_draws == 0 {
            return Err(Error::InvalidArgument("permutation test needs at least one draw".into()));
        }
        if !baseline.is_finite() || values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("permutation test inputs must be finite".into()));
        }
        let dev: Vec<T> = values.iter().map(|&v| v - baseline).collect();
        let observed_sum = signed_sum(&dev, |_| false);
        let observed_mean = baseline + observed_sum / T::from_usize_lossy(dev.len());
        // Ties between pattern sums are decided up to rounding of the deviations.
        let eps = T::of(1e-12) * dev.iter().fold(T::zero(), |acc, d| acc + d.abs());
        let side = match tail {
            Tail::Upper => Tail::Upper,
            Tail::Lower => Tail::Lower,
            Tail::Two if observed_sum >= T::zero() => Tail::Upper,
            Tail::Two => Tail::Lower,
        };
        Ok(Self { dev, baseline, observed_sum, observed_mean, eps, side, tail })
    }

    fn one_sided_extreme(&self, s: T) -> bool {
        match self.side {
            Tail::Lower => s <= self.observed_sum + self.eps,
            _ => s >= self.observed_sum - self.eps,
        }
    }

    fn two_sided_extreme(&self, s: T) -> bool {
        s.abs() >= self.observed_sum.abs() - self.eps
    }
}

fn exact_path<T: Real>(st: &Setup<T>, seed: u64) -> PermutationResult<T> {
    let n = st.dev.len();
    let patterns = 1u64 << n;
    let (one, two) = (0..patterns as usize)
        .into_par_iter()
        .with_min_len(1 << 12)
        .map(|pattern| {
            let s = signed_sum(&st.dev, |i| (pattern >> i) & 1 == 1);
            (st.one_sided_extreme(s) as u64, st.two_sided_extreme(s) as u64)
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    PermutationResult {
        observed_mean: st.observed_mean,
        // Each pattern pairs with its negation, so the exact null mean is the baseline.
        null_mean: st.baseline,
        baseline: st.baseline,
        p_one_sided: one as f64 / patterns as f64,
        p_two_sided: two as f64 / patterns as f64,
        n_draws: patterns,
        n_values: n,
        seed,
        tail: st.tail,
        exact: true,
    }
}

fn sampled_path<T: Real>(st: &Setup<T>, n_draws: u64, seed: u64) -> PermutationResult<T> {
    let n = st.dev.len();
    let sums: Vec<T> = (0..n_draws)
        .into_par_iter()
        .map_init(
            || vec![false; n],
            |flips, draw| {
                CounterRng::new(seed, draw).fill_bits(flips);
                signed_sum(&st.dev, |i| flips[i])
            },
        )
        .collect();
    let one = sums.iter().filter(|&&s| st.one_sided_extreme(s)).count() as f64;
    let two = sums.iter().filter(|&&s| st.two_sided_extreme(s)).count() as f64;
    let total: CompensatedSum<T> = sums.iter().copied().collect();
    let null_mean = st.baseline + total.total() / T::of(n_draws as f64) / T::from_usize_lossy(n);
    PermutationResult {
        observed_mean: st.observed_mean,
        null_mean,
        baseline: st.baseline,
        p_one_sided: (1.0 + one) / (1.0 + n_draws as f64),
        p_two_sided: (1.0 + two) / (1.0 + n_draws as f64),
        n_draws,
        n_values: n,
        seed,
        tail: st.tail,
        exact: false,
    }
}

/// Sum of deviations with `negate(i)` selecting the flipped ones; fixed order.
#[inline]
fn signed_sum<T: Real>(dev: &[T], negate: impl Fn(usize) -> bool) -> T {
    let mut acc = T::zero();
    for (i, &d) in dev.iter().enumerate() {
        if negate(i) {
            acc -= d;
        } else {
            acc += d;
        }
    }
    acc
}

/// Classical one-way ANOVA.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnovaResult {
    pub f_value: f64,
    pub df_between: usize,
    pub df_within: usize,
    pub p_value: f64,
    pub ss_between: f64,
    pub ss_within: f64,
}

/// Between/within F test over `groups`; p from the F distribution.
pub fn one_way_anova<T: Real>(groups: &[Vec<T>]) -> Result<AnovaResult> {
    if groups.len() < 2 {
        return Err(Error::InvalidArgument("ANOVA needs at least two groups".into()));
    }
    if let Some(small) = groups.iter().position(|g| g.len() < 2) {
        return Err(Error::InvalidArgument(format!("ANOVA group {small} has fewer than two values")));
    }
    let groups: Vec<Vec<f64>> = groups.iter().map(|g| g.iter().map(|v| v.as_f64()).collect()).collect();
    if groups.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("ANOVA inputs must be finite".into()));
    }
    let total_n: usize = groups.iter().map(Vec::len).sum();
    let grand = mean_f64(groups.iter().flatten().copied(), total_n);
    let mut ss_between = CompensatedSum::new();
    let mut ss_within = CompensatedSum::new();
    for g in &groups {
        let m = mean_f64(g.iter().copied(), g.len());
        ss_between.add(g.len() as f64 * (m - grand) * (m - grand));
        for &v in g {
            ss_within.add((v - m) * (v - m));
        }
    }
    let (ssb, ssw) = (ss_between.total(), ss_within.total());
    let df_between = groups.len() - 1;
    let df_within = total_n - groups.len();
    // Relative floor so that shifting all data by a constant cannot turn
    // rounding noise into an effect.
    let scale = groups.iter().flatten().fold(0.0f64, |a, v| a.max(v.abs())).max(f64::MIN_POSITIVE);
    let negligible = 1e-24 * scale * scale * total_n as f64;
    let (f_value, p_value) = if ssb <= negligible && ssw <= negligible {
        (0.0, 1.0)
    } else if ssw <= negligible {
        return Err(Error::InvalidArgument(
            "degenerate groups: zero within-group variance with distinct group means".into(),
        ));
    } else {
        let f = (ssb / df_between as f64) / (ssw / df_within as f64);
        (f, special::f_sf(f, df_between as f64, df_within as f64))
    };
    Ok(AnovaResult {
        f_value,
        df_between,
        df_within,
        p_value,
        ss_between: ssb,
        ss_within: ssw,
    })
}

fn mean_f64(values: impl Iterator<Item = f64> + Clone, n: usize) -> f64 {
    let first = values.clone().collect::<CompensatedSum<f64>>().total() / n as f64;
    first + values.map(|v| v - first).collect::<CompensatedSum<f64>>().total() / n as f64
}

/// Mean and sample standard deviation (`sd` is `None` for a single value).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Descriptive<T> {
    pub mean: T,
    pub sd: Option<T>,
    pub n: usize,
}

impl<T: Real> Descriptive<T> {
    /// `"mean ± sd"` with `decimals` places; a missing sd prints as `n/a`.
    pub fn format_pm(&self, decimals: usize) -> String {
        match self.sd {
            Some(sd) => format!("{:.*} ± {:.*}", decimals, self.mean, decimals, sd),
            None => format!("{:.*} ± n/a", decimals, self.mean),
        }
    }
}

pub fn descriptive<T: Real>(values: &[T]) -> Result<Descriptive<T>> {
    if values.is_empty() {
        return Err(Error::InvalidArgument("descriptive statistics of an empty sample".into()));
    }
    let n = values.len();
    let nt = T::from_usize_lossy(n);
    let first = values.iter().copied().collect::<CompensatedSum<T>>().total() / nt;
    let mean = first + values.iter().map(|&v| v - first).collect::<CompensatedSum<T>>().total() / nt;
    let sd = (n >= 2).then(|| {
        let ss = values
            .iter()
            .map(|&v| (v - mean) * (v - mean))
            .collect::<CompensatedSum<T>>()
            .total();
        (ss / T::from_usize_lossy(n - 1)).sqrt()
    });
    Ok(Descriptive { mean, sd, n })
}

/// Percentile `q ∈ [0, 100]` with linear interpolation between order
/// statistics (rank `q/100 · (n − 1)`).
pub fn percentile_linear<T: Real>(values: &[T], q: f64) -> Result<T> {
    if values.is_empty() {
        return Err(Error::InvalidArgument("percentile of an empty sample".into()));
    }
    if !(0.0..=100.0).contains(&q) {
        return Err(Error::InvalidArgument(format!("percentile {q} outside [0, 100]")));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    Ok(percentile_sorted(&sorted, q))
}

pub(crate) fn percentile_sorted<T: Real>(sorted: &[T], q: f64) -> T {
    let rank = q / 100.0 * (sorted.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    let frac = T::of(rank - lo as f64);
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Exhaustive enumeration written independently of the implementation.
    fn enumerate_oracle(values: &[f64], baseline: f64) -> (f64, f64) {
        let n = values.len();
        let obs: f64 = values.iter().map(|v| v - baseline).sum();
        let (mut upper, mut two) = (0u64, 0u64);
        for pattern in 0..(1u64 << n) {
            let s: f64 = values
                .iter()
                .enumerate()
                .map(|(i, v)| if pattern >> i & 1 == 1 { -(v - baseline) } else { v - baseline })
                .sum();
            if s >= obs - 1e-9 {
                upper += 1;
            }
            if s.abs() >= obs.abs() - 1e-9 {
                two += 1;
            }
        }
        let total = (1u64 << n) as f64;
        (upper as f64 / total, two as f64 / total)
    }

    #[test]
    fn zero_deviations_give_unit_p() {
        let r = sign_flip_permutation(&[2.5f64; 6], 2.5, 10_000, 1, Tail::Upper).unwrap();
        assert_eq!(r.p_two_sided, 1.0);
        assert_eq!(r.p_one_sided, 1.0);
        let r = sign_flip_permutation(&[1.0f64; 30], 1.0, 1_000, 1, Tail::Two).unwrap();
        assert_eq!(r.p_two_sided, 1.0);
    }

    #[test]
    fn one_two_three_exact() {
        let r = sign_flip_permutation(&[1.0f64, 2.0, 3.0], 0.0, 10_000, 0, Tail::Upper).unwrap();
        assert!(r.exact);
        assert_eq!(r.n_draws, 8);
        assert_eq!(r.observed_mean, 2.0);
        assert_eq!(r.null_mean, 0.0);
        assert_eq!(r.p_one_sided, 0.125);
        // |S| >= 6 for the identity and the full negation.
        assert_eq!(r.p_two_sided, 0.25);
        let lower = sign_flip_permutation(&[1.0f64, 2.0, 3.0], 0.0, 10_000, 0, Tail::Lower).unwrap();
        assert_eq!(lower.p_one_sided, 1.0);
    }

    #[test]
    fn exact_mode_matches_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for n in 1..=12 {
            let vals: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..3.0)).collect();
            let r = sign_flip_permutation(&vals, 0.5, 10_000, 0, Tail::Upper).unwrap();
            let (upper, two) = enumerate_oracle(&vals, 0.5);
            assert_eq!(r.p_one_sided, upper, "n = {n}");
            assert_eq!(r.p_two_sided, two, "n = {n}");
        }
    }

    #[test]
    fn sampled_mode_has_add_one_floor() {
        let vals: Vec<f64> = (0..40).map(|i| 5.0 + i as f64 * 0.1).collect();
        let r = sign_flip_permutation(&vals, 0.0, 10_000, 42, Tail::Upper).unwrap();
        assert!(!r.exact);
        assert_eq!(r.p_one_sided, 1.0 / 10_001.0);
        assert_eq!(r.p_two_sided, 1.0 / 10_001.0);
        assert!(r.null_mean.abs() < 0.1);
        assert_eq!(r.n_draws, 10_000);
    }

    #[test]
    fn sampled_mode_is_thread_count_independent() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let vals: Vec<f64> = (0..25).map(|_| rng.gen_range(-0.5..1.5)).collect();
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| sign_flip_permutation(&vals, 0.0, 5_000, 42, Tail::Two).unwrap())
        };
        let a = run(1);
        assert_eq!(a, run(4));
        assert_eq!(a, run(16));
        assert_ne!(a, sign_flip_permutation(&vals, 0.0, 5_000, 43, Tail::Two).unwrap());
    }

    #[test]
    fn rejects_bad_input() {
        assert!(sign_flip_permutation::<f64>(&[], 0.0, 10, 0, Tail::Upper).is_err());
        assert!(sign_flip_permutation(&[1.0f64], 0.0, 0, 0, Tail::Upper).is_err());
        assert!("sideways".parse::<Tail>().is_err());
        assert_eq!("two-sided".parse::<Tail>().unwrap(), Tail::Two);
    }

    #[test]
    fn anova_no_effect() {
        let g = vec![vec![1.0f64, 2.0, 3.0], vec![1.0, 2.0, 3.0]];
        let r = one_way_anova(&g).unwrap();
        assert_eq!(r.f_value, 0.0);
        assert!((r.p_value - 1.0).abs() < 1e-12);
        assert_eq!((r.df_between, r.df_within), (1, 4));
        let flat = vec![vec![4.0f64; 3], vec![4.0; 5]];
        assert_eq!(one_way_anova(&flat).unwrap().p_value, 1.0);
    }

    #[test]
    fn anova_separated_groups() {
        let g = vec![
            vec![0.0f64, 1e-9, -1e-9, 2e-9],
            vec![10.0, 10.0 + 1e-9, 10.0 - 1e-9, 10.0 + 2e-9],
        ];
        let r = one_way_anova(&g).unwrap();
        assert!(r.p_value < 1e-12, "p = {}", r.p_value);
        assert!(r.p_value > 0.0);
        let perfect = vec![vec![0.0f64; 4], vec![10.0; 4]];
        assert!(one_way_anova(&perfect).is_err());
        assert!(one_way_anova(&[vec![1.0f64, 2.0]]).is_err());
        assert!(one_way_anova(&[vec![1.0f64, 2.0], vec![3.0]]).is_err());
    }

    #[test]
    fn anova_matches_sum_of_squares_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let groups: Vec<Vec<f64>> = [7, 9, 12]
            .iter()
            .enumerate()
            .map(|(gi, &n)| (0..n).map(|_| rng.gen_range(0.0..10.0) + gi as f64).collect())
            .collect();
        let all: Vec<f64> = groups.iter().flatten().copied().collect();
        let grand = all.iter().sum::<f64>() / all.len() as f64;
        let mut ssb = 0.0;
        let mut ssw = 0.0;
        for g in &groups {
            let m = g.iter().sum::<f64>() / g.len() as f64;
            ssb += g.len() as f64 * (m - grand).powi(2);
            ssw += g.iter().map(|v| (v - m).powi(2)).sum::<f64>();
        }
        let f = (ssb / 2.0) / (ssw / (all.len() - 3) as f64);
        let r = one_way_anova(&groups).unwrap();
        assert!((r.f_value - f).abs() <= 1e-10 * f);
        use statrs::distribution::{ContinuousCDF, FisherSnedecor};
        let p = FisherSnedecor::new(2.0, (all.len() - 3) as f64).unwrap().sf(f);
        assert!((r.p_value - p).abs() <= 1e-10 * p.max(1e-300) + 1e-15);
    }

    #[test]
    fn descriptive_cases() {
        let d = descriptive(&[5.0f64]).unwrap();
        assert_eq!((d.mean, d.sd, d.n), (5.0, None, 1));
        assert_eq!(d.format_pm(2), "5.00 ± n/a");
        let d = descriptive(&[1.0f64, 1.0, 1.0]).unwrap();
        assert_eq!(d.sd, Some(0.0));
        assert!(descriptive::<f64>(&[]).is_err());
        let d = descriptive(&[2.0f64, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0]).unwrap();
        assert_eq!(d.mean, 5.0);
        assert!((d.sd.unwrap() - (32.0f64 / 7.0).sqrt()).abs() < 1e-15);
        assert_eq!(
            Descriptive { mean: 2.613f64, sd: Some(0.905), n: 3 }.format_pm(2),
            "2.61 ± 0.91"
        );
    }

    #[test]
    fn descriptive_matches_compensated_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..20 {
            let n = rng.gen_range(2..500);
            let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1e6..1e6)).collect();
            // Kahan summation oracle.
            let kahan = |xs: &mut dyn Iterator<Item = f64>| {
                let (mut s, mut c) = (0.0f64, 0.0f64);
                for x in xs {
                    let y = x - c;
                    let t = s + y;
                    c = (t - s) - y;
                    s = t;
                }
                s
            };
            let mean = kahan(&mut v.iter().copied()) / n as f64;
            let var = kahan(&mut v.iter().map(|x| (x - mean).powi(2))) / (n - 1) as f64;
            let d = descriptive(&v).unwrap();
            assert!((d.mean - mean).abs() <= 1e-12 * mean.abs().max(1.0));
            assert!((d.sd.unwrap() - var.sqrt()).abs() <= 1e-12 * var.sqrt());
        }
    }

    #[test]
    fn percentile_rule() {
        let v = [1.0f64, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(percentile_linear(&v, 0.0).unwrap(), 1.0);
        assert_eq!(percentile_linear(&v, 100.0).unwrap(), 5.0);
        assert_eq!(percentile_linear(&v, 50.0).unwrap(), 3.0);
        assert!((percentile_linear(&v, 95.0).unwrap() - 4.8).abs() < 1e-12);
        assert_eq!(percentile_linear(&[7.0f64], 95.0).unwrap(), 7.0);
        assert!(percentile_linear::<f64>(&[], 95.0).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn negating_deviations_keeps_two_sided_p(vals in prop::collection::vec(-5.0f64..5.0, 1..12)) {
            let neg: Vec<f64> = vals.iter().map(|v| -v).collect();
            let a = sign_flip_permutation(&vals, 0.0, 1, 0, Tail::Two).unwrap();
            let b = sign_flip_permutation(&neg, 0.0, 1, 0, Tail::Two).unwrap();
            prop_assert_eq!(a.p_two_sided, b.p_two_sided);
            prop_assert!(a.p_one_sided > 0.0 && a.p_two_sided <= 1.0);
        }

        #[test]
        fn two_sided_dominates_upper(vals in prop::collection::vec(0.0f64..5.0, 1..30), seed in any::<u64>()) {
            let r = sign_flip_permutation(&vals, 0.0, 500, seed, Tail::Upper).unwrap();
            prop_assert!(r.observed_mean >= 0.0);
            prop_assert!(r.p_two_sided >= r.p_one_sided);
            prop_assert!(r.p_one_sided > 0.0);
        }

        #[test]
        fn anova_shift_invariant(shift in -1e3f64..1e3, seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let groups: Vec<Vec<f64>> = (0..3)
                .map(|g| (0..6).map(|_| rng.gen_range(0.0..5.0) + g as f64).collect())
                .collect();
            let shifted: Vec<Vec<f64>> = groups.iter().map(|g| g.iter().map(|v| v + shift).collect()).collect();
            let a = one_way_anova(&groups).unwrap();
            let b = one_way_anova(&shifted).unwrap();
            prop_assert!((a.f_value - b.f_value).abs() <= 1e-10 * a.f_value.max(1.0));
        }
    }
}
