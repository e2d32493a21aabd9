//! Stopping scales of a density sequence and the interval bookkeeping built
//! on them: ID/DD/terminal intervals, good and bad scales, long and short
//! intervals, and the paired intervals `J_h` with their standardness test.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::DensityProfile;

/// A scale `j` is good when `p_j <= GOOD_FACTOR * theta_j`.
pub const GOOD_FACTOR: f64 = 40.0;

/// An interval is good when its good scales carry at least this fraction of
/// its `sigma` mass.
pub const GOOD_FRACTION: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StopConfig {
    /// Density jump threshold `B`.
    pub b: f64,
    /// Minimum length of a long interval.
    pub n_l: usize,
    /// Constant of the standardness test.
    pub c10: f64,
}

impl Default for StopConfig {
    fn default() -> Self {
        Self {
            b: 1000.0,
            n_l: 100,
            c10: 0.05,
        }
    }
}

impl StopConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.b > 100.0) {
            return Err(Error::Parameter(format!("B = {} must exceed 100", self.b)));
        }
        if self.n_l == 0 {
            return Err(Error::Parameter("N_L must be at least 1".into()));
        }
        if !(self.c10 > 0.0) {
            return Err(Error::Parameter(format!("C10 = {} must be positive", self.c10)));
        }
        Ok(())
    }
}

/// Why a stopping scale was selected. Earlier variants take precedence.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Trigger {
    /// the scale is `N`
    End,
    /// `theta_i > B theta_{s_k}`
    Rise,
    /// `theta_i < theta_{s_k} / B`
    Fall,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum IntervalKind {
    #[serde(rename = "ID")]
    Increasing,
    #[serde(rename = "DD")]
    Decreasing,
    #[serde(rename = "terminal")]
    Terminal,
}

impl From<Trigger> for IntervalKind {
    fn from(t: Trigger) -> Self {
        match t {
            Trigger::End => IntervalKind::Terminal,
            Trigger::Rise => IntervalKind::Increasing,
            Trigger::Fall => IntervalKind::Decreasing,
        }
    }
}

/// `0 = s_0 < s_1 < ... < s_m = N` with the trigger of each `s_{k+1}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StopSet {
    scales: Vec<usize>,
    triggers: Vec<Trigger>,
}

impl StopSet {
    pub fn scales(&self) -> &[usize] {
        &self.scales
    }

    pub fn triggers(&self) -> &[Trigger] {
        &self.triggers
    }

    pub fn depth(&self) -> usize {
        *self.scales.last().expect("stop set is never empty")
    }

    /// Number of intervals `I_k = [s_k, s_{k+1})`.
    pub fn interval_count(&self) -> usize {
        self.scales.len() - 1
    }

    pub fn interval(&self, k: usize) -> (usize, usize) {
        (self.scales[k], self.scales[k + 1])
    }
}

/// Stopping scales: `s_{k+1}` is the least `i > s_k` with `i = N`,
/// `theta_i > B theta_{s_k}`, or `theta_i < theta_{s_k} / B`.
pub fn compute_stops(theta: &[f64], config: &StopConfig) -> Result<StopSet> {
    if theta.is_empty() {
        return Err(Error::Domain("density sequence is empty".into()));
    }
    let n = theta.len() - 1;
    let b = config.b;
    let mut scales = vec![0];
    let mut triggers = Vec::new();
    let mut cur = 0;
    while cur < n {
        let base = theta[cur];
        let (next, why) = (cur + 1..=n)
            .find_map(|i| {
                if i == n {
                    Some((i, Trigger::End))
                } else if theta[i] > b * base {
                    Some((i, Trigger::Rise))
                } else if theta[i] < base / b {
                    Some((i, Trigger::Fall))
                } else {
                    None
                }
            })
            .expect("i = N always triggers");
        scales.push(next);
        triggers.push(why);
        cur = next;
    }
    Ok(StopSet { scales, triggers })
}

/// `sigma(A) = sum_{j in A} theta_j^2`.
pub fn sigma<I: IntoIterator<Item = usize>>(theta: &[f64], set: I) -> f64 {
    set.into_iter().map(|j| theta[j] * theta[j]).sum()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntervalRecord {
    pub k: usize,
    pub lo: usize,
    pub hi: usize,
    pub kind: IntervalKind,
    pub good: bool,
    pub long: bool,
    pub sigma: f64,
}

impl IntervalRecord {
    pub fn len(&self) -> usize {
        self.hi - self.lo
    }

    pub fn is_empty(&self) -> bool {
        self.hi == self.lo
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JIntervalRecord {
    pub h: usize,
    /// indices `k` of the constituent intervals
    pub members: Vec<usize>,
    pub lo: usize,
    pub hi: usize,
    pub t_h: usize,
    pub theta_max: f64,
    pub standard: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub stops: StopSet,
    /// `good_scales[j]` for `j` in `[0, N-1]`
    pub good_scales: Vec<bool>,
    pub intervals: Vec<IntervalRecord>,
    pub j_intervals: Vec<JIntervalRecord>,
    pub config: StopConfig,
}

impl Classification {
    pub fn of_profile(profile: &DensityProfile, config: &StopConfig) -> Result<Self> {
        classify(&profile.theta, &profile.p, &profile.ell, config)
    }

    pub fn depth(&self) -> usize {
        self.stops.depth()
    }

    /// Indices of the intervals belonging to no `J_h`.
    pub fn unpaired(&self) -> Vec<usize> {
        let mut used = vec![false; self.intervals.len()];
        for j in &self.j_intervals {
            for &k in &j.members {
                used[k] = true;
            }
        }
        (0..self.intervals.len()).filter(|&k| !used[k]).collect()
    }

    /// Between consecutive `J`'s (and before the first, after the last) the
    /// unpaired non-terminal intervals form a run of DD followed by a run of
    /// ID.
    pub fn gap_structure_holds(&self) -> bool {
        let mut owner = vec![None; self.intervals.len()];
        for (h, j) in self.j_intervals.iter().enumerate() {
            for &k in &j.members {
                owner[k] = Some(h);
            }
        }
        let mut seen_id = false;
        for (k, iv) in self.intervals.iter().enumerate() {
            if owner[k].is_some() {
                seen_id = false;
                continue;
            }
            match iv.kind {
                IntervalKind::Increasing => seen_id = true,
                IntervalKind::Decreasing if seen_id => return false,
                _ => {}
            }
        }
        true
    }
}

/// Labels scales, intervals and paired intervals for a density profile.
pub fn classify(theta: &[f64], p: &[f64], ell: &[f64], config: &StopConfig) -> Result<Classification> {
    config.validate()?;
    if theta.len() != p.len() || theta.len() != ell.len() {
        return Err(Error::Domain(format!(
            "inconsistent lengths: theta {}, p {}, ell {}",
            theta.len(),
            p.len(),
            ell.len()
        )));
    }
    let stops = compute_stops(theta, config)?;
    let n = stops.depth();
    let good_scales: Vec<bool> = (0..n).map(|j| p[j] <= GOOD_FACTOR * theta[j]).collect();

    let intervals: Vec<IntervalRecord> = (0..stops.interval_count())
        .map(|k| {
            let (lo, hi) = stops.interval(k);
            let total = sigma(theta, lo..hi);
            let good_part = sigma(theta, (lo..hi).filter(|&j| good_scales[j]));
            IntervalRecord {
                k,
                lo,
                hi,
                kind: stops.triggers()[k].into(),
                good: good_part >= GOOD_FRACTION * total,
                long: hi - lo >= config.n_l,
                sigma: total,
            }
        })
        .collect();

    let mut groups: Vec<(usize, Vec<usize>)> = Vec::new();
    if intervals
        .first()
        .is_some_and(|iv| iv.kind == IntervalKind::Decreasing)
    {
        groups.push((0, vec![0]));
    }
    let mut h = 1;
    for k in 0..intervals.len().saturating_sub(1) {
        let second = intervals[k + 1].kind;
        if intervals[k].kind == IntervalKind::Increasing && second != IntervalKind::Increasing {
            groups.push((h, vec![k, k + 1]));
            h += 1;
        }
    }

    let threshold = config.b.sqrt().recip();
    let j_intervals = groups
        .into_iter()
        .map(|(h, members)| {
            let lo = intervals[members[0]].lo;
            let hi = intervals[*members.last().unwrap()].hi;
            let theta_max = theta[lo..hi].iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let t_h = (lo..hi)
                .find(|&j| theta[j] > threshold * theta_max)
                .expect("the maximiser qualifies");
            let standard = h == 0
                || t_h == 0
                || ell[t_h] / ell[t_h - 1] * p[t_h - 1] <= config.c10 * theta_max;
            JIntervalRecord {
                h,
                members,
                lo,
                hi,
                t_h,
                theta_max,
                standard,
            }
        })
        .collect();

    Ok(Classification {
        stops,
        good_scales,
        intervals,
        j_intervals,
        config: *config,
    })
}

/// Outcome of one inequality check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LemmaEntry {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    /// constant on the right-hand side (explicit or measured)
    pub constant: Option<f64>,
    /// set for inequalities with explicit constants
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pass: Option<bool>,
    /// set for existential-constant inequalities: the best constant observed
    #[serde(skip_serializing_if = "Option::is_none")]
    pub measured: Option<f64>,
}

impl LemmaEntry {
    pub fn hard(name: &str, lhs: f64, rhs: f64, constant: f64, pass: bool) -> Self {
        Self {
            name: name.into(),
            lhs,
            rhs,
            constant: Some(constant),
            pass: Some(pass),
            measured: None,
        }
    }

    pub fn measured(name: &str, lhs: f64, rhs: f64, measured: Option<f64>) -> Self {
        Self {
            name: name.into(),
            lhs,
            rhs,
            constant: measured,
            pass: None,
            measured,
        }
    }

    pub fn is_hard(&self) -> bool {
        self.pass.is_some()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LemmaReport {
    pub entries: Vec<LemmaEntry>,
}

impl LemmaReport {
    pub fn get(&self, name: &str) -> Option<&LemmaEntry> {
        self.entries.iter().find(|e| e.name == name)
    }

    /// Names of hard checks that failed.
    pub fn failures(&self) -> Vec<&str> {
        self.entries
            .iter()
            .filter(|e| e.pass == Some(false))
            .map(|e| e.name.as_str())
            .collect()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Relative slack applied to the explicit-constant inequalities.
pub const LEMMA_SLACK: f64 = 1e-12;

pub mod names {
    pub const P_SQ_SUM: &str = "sum_p_sq_le_4_sum_theta_sq";
    pub const BAD_SCALES: &str = "sigma_bad_le_tenth";
    pub const GOOD_INTERVALS: &str = "sigma_le_9_8_good_intervals";
    pub const FIRST_GOOD_SCALE: &str = "first_good_scale_position";
    pub const INTERIOR_BRACKET: &str = "interior_density_bracket";
    pub const GAP_STRUCTURE: &str = "dd_then_id_between_pairs";
    pub const SHORT_BETWEEN_PAIRS: &str = "short_between_pairs_constant";
    pub const SHORT_TOTAL: &str = "short_total_constant";
}

/// Checks the inequalities that involve only `theta`, `p` and `ell`.
///
/// Explicit constants (4, 1/10, 9/8, `B^4/(1+B^4)`) are asserted with
/// [`LEMMA_SLACK`] relative slack; the `C(B, N_L)` inequalities report the
/// smallest constant that makes them hold.
pub fn verify_sequence_lemmas(
    profile: &DensityProfile,
    class: &Classification,
) -> LemmaReport {
    let theta = &profile.theta;
    let p = &profile.p;
    let n = profile.depth();
    let b = class.config.b;
    let slack = 1.0 + LEMMA_SLACK;
    let mut entries = Vec::new();

    // sum_{j<=M} p_j^2 <= 4 sum_{k<=M} theta_k^2 for every M; report the tightest M
    let mut worst = (0.0, 1.0);
    let mut lhs = 0.0;
    let mut rhs = 0.0;
    for m in 0..=n {
        lhs += p[m] * p[m];
        rhs += theta[m] * theta[m];
        if m == 0 || lhs / rhs > worst.0 / worst.1 {
            worst = (lhs, rhs);
        }
    }
    entries.push(LemmaEntry::hard(
        names::P_SQ_SUM,
        worst.0,
        4.0 * worst.1,
        4.0,
        worst.0 <= 4.0 * worst.1 * slack,
    ));

    let total = sigma(theta, 0..n);
    let bad = sigma(theta, (0..n).filter(|&j| !class.good_scales[j]));
    entries.push(LemmaEntry::hard(
        names::BAD_SCALES,
        bad,
        total / 10.0,
        0.1,
        bad <= total / 10.0 * slack,
    ));

    let good_sum: f64 = class.intervals.iter().filter(|iv| iv.good).map(|iv| iv.sigma).sum();
    entries.push(LemmaEntry::hard(
        names::GOOD_INTERVALS,
        total,
        9.0 / 8.0 * good_sum,
        9.0 / 8.0,
        total <= 9.0 / 8.0 * good_sum * slack,
    ));

    let frac = b.powi(4) / (1.0 + b.powi(4));
    let mut pos_ok = true;
    let mut pos_worst: Option<(f64, f64)> = None;
    for iv in class.intervals.iter().filter(|iv| iv.good) {
        if let Some(j0) = (iv.lo..iv.hi).find(|&j| class.good_scales[j]) {
            let l = (j0 - iv.lo) as f64;
            let r = frac * iv.len() as f64;
            pos_ok &= l <= r * slack;
            if pos_worst.is_none_or(|(a, c)| l * c > a * r) {
                pos_worst = Some((l, r));
            }
        }
    }
    let (pos_l, pos_r) = pos_worst.unwrap_or((0.0, 0.0));
    entries.push(LemmaEntry::hard(
        names::FIRST_GOOD_SCALE,
        pos_l,
        pos_r,
        frac,
        pos_ok,
    ));

    let mut bracket_ok = true;
    let mut worst_ratio: f64 = 1.0;
    for k in 0..class.stops.interval_count() {
        let (lo, hi) = class.stops.interval(k);
        for i in lo + 1..hi {
            let r = theta[i] / theta[lo];
            if !(r >= 1.0 / b && r <= b) {
                bracket_ok = false;
            }
            worst_ratio = worst_ratio.max(r).max(1.0 / r);
        }
    }
    entries.push(LemmaEntry::hard(names::INTERIOR_BRACKET, worst_ratio, b, b, bracket_ok));

    entries.push(LemmaEntry::hard(
        names::GAP_STRUCTURE,
        0.0,
        0.0,
        0.0,
        class.gap_structure_holds(),
    ));

    // short intervals strictly between consecutive pairs
    let pairs: Vec<&JIntervalRecord> = class.j_intervals.iter().filter(|j| j.h >= 1).collect();
    let mut best: Option<f64> = None;
    let mut lhs_at = 0.0;
    let mut rhs_at = 0.0;
    for w in pairs.windows(2) {
        let (a, c) = (w[0], w[1]);
        let lhs: f64 = class
            .intervals
            .iter()
            .filter(|iv| iv.lo >= a.hi && iv.hi <= c.lo && !iv.long)
            .map(|iv| iv.sigma)
            .sum();
        let rhs = a.theta_max.powi(2) + c.theta_max.powi(2);
        let r = lhs / rhs;
        if best.is_none_or(|v| r > v) {
            best = Some(r);
            lhs_at = lhs;
            rhs_at = rhs;
        }
    }
    entries.push(LemmaEntry::measured(names::SHORT_BETWEEN_PAIRS, lhs_at, rhs_at, best));

    let short: f64 = class.intervals.iter().filter(|iv| !iv.long).map(|iv| iv.sigma).sum();
    let jmax: f64 = class.j_intervals.iter().map(|j| j.theta_max.powi(2)).sum();
    let c = if jmax > 0.0 {
        Some(short / jmax)
    } else if short == 0.0 {
        Some(0.0)
    } else {
        None
    };
    entries.push(LemmaEntry::measured(names::SHORT_TOTAL, short, jmax, c));

    LemmaReport { entries }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> StopConfig {
        StopConfig::default()
    }

    #[test]
    fn fixture_with_rise_and_fall() {
        // theta_4 is never consulted: i = N stops first
        for last in [1e-9, 1.0, 1e9] {
            let theta = [1.0, 0.5, 2000.0, 1.0, last];
            let stops = compute_stops(&theta, &cfg()).unwrap();
            assert_eq!(stops.scales(), &[0, 2, 3, 4]);
            assert_eq!(stops.triggers(), &[Trigger::Rise, Trigger::Fall, Trigger::End]);
        }
    }

    #[test]
    fn constant_density_has_single_interval() {
        let stops = compute_stops(&[1.0; 9], &cfg()).unwrap();
        assert_eq!(stops.scales(), &[0, 8]);
        assert_eq!(stops.triggers(), &[Trigger::End]);
    }

    #[test]
    fn end_takes_precedence() {
        let stops = compute_stops(&[1.0, 2000.0], &cfg()).unwrap();
        assert_eq!(stops.scales(), &[0, 1]);
        assert_eq!(stops.triggers(), &[Trigger::End]);
    }

    #[test]
    fn depth_zero_and_empty() {
        let stops = compute_stops(&[3.0], &cfg()).unwrap();
        assert_eq!(stops.scales(), &[0]);
        assert_eq!(stops.interval_count(), 0);
        assert!(compute_stops(&[], &cfg()).is_err());
    }

    #[test]
    fn sigma_cases() {
        assert_eq!(sigma(&[1.0, 2.0], std::iter::empty()), 0.0);
        assert_eq!(sigma(&[1.0; 6], 0..5), 5.0);
        assert_eq!(sigma(&[1.0, 2.0, 3.0], [0, 2]), 10.0);
    }

    #[test]
    fn rejects_small_b_and_bad_lengths() {
        let bad = StopConfig { b: 50.0, ..cfg() };
        assert!(classify(&[1.0], &[1.0], &[1.0], &bad).is_err());
        assert!(matches!(
            classify(&[1.0, 1.0], &[1.0], &[1.0, 0.5], &cfg()),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn pairing_of_rise_and_fall() {
        let prof = DensityProfile::from_theta(1, 0.5, vec![1.0, 0.5, 2000.0, 1.0, 1.0]).unwrap();
        let c = Classification::of_profile(&prof, &cfg()).unwrap();
        let kinds: Vec<_> = c.intervals.iter().map(|iv| iv.kind).collect();
        assert_eq!(
            kinds,
            vec![IntervalKind::Increasing, IntervalKind::Decreasing, IntervalKind::Terminal]
        );
        assert_eq!(c.j_intervals.len(), 1);
        let j = &c.j_intervals[0];
        assert_eq!((j.h, j.members.clone(), j.lo, j.hi, j.t_h), (1, vec![0, 1], 0, 3, 2));
        assert_eq!(j.theta_max, 2000.0);
        assert!(c.gap_structure_holds());
    }
}
