//! From continuous scores to use / not-use decisions.
//!
//! A context is used when its score is strictly above the threshold. Sweeping
//! the threshold upward throws out more contexts and (for a useful scorer)
//! raises the good-to-bad ratio: accepted contexts with gold >= 1 over accepted
//! contexts with gold < 0. The retention-competency curve (RCC) plots that
//! ratio against the throwout rate; its trapezoidal area summarizes a scorer.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scored {
    pub id: String,
    pub score: f64,
    pub gold: f64,
}

/// Scores paired with gold labels, one per context.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ScoredSet {
    entries: Vec<Scored>,
}

impl ScoredSet {
    pub fn new(entries: Vec<Scored>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(entries.len());
        for e in &entries {
            if !seen.insert(e.id.as_str()) {
                return Err(Error::invalid(format!("duplicate scored id '{}'", e.id)));
            }
            if !e.score.is_finite() || !e.gold.is_finite() {
                return Err(Error::invalid(format!("non-finite score or gold for '{}'", e.id)));
            }
        }
        Ok(ScoredSet { entries })
    }

    pub fn from_triples<S: Into<String>>(triples: impl IntoIterator<Item = (S, f64, f64)>) -> Result<Self> {
        ScoredSet::new(
            triples
                .into_iter()
                .map(|(id, score, gold)| Scored {
                    id: id.into(),
                    score,
                    gold,
                })
                .collect(),
        )
    }

    pub fn entries(&self) -> &[Scored] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn scores(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.score).collect()
    }

    pub fn golds(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.gold).collect()
    }

    /// Entries ordered by id.
    pub fn sorted_by_id(mut self) -> Self {
        self.entries.sort_by(|a, b| a.id.cmp(&b.id));
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    Use,
    NotUse,
}

pub fn decide(score: f64, threshold: f64) -> Decision {
    if score > threshold {
        Decision::Use
    } else {
        Decision::NotUse
    }
}

/// Decision statistics at one threshold. Probabilities are conditional on
/// being accepted and are NaN when nothing is accepted.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub threshold: f64,
    /// P(gold < 0 | accepted)
    pub p_neg: f64,
    /// P(0 <= gold < 0.5 | accepted)
    pub p_mid: f64,
    /// P(gold >= 1 | accepted)
    pub p_good: f64,
    pub throwout: f64,
    /// good / bad among accepted; NaN when no bad context is accepted.
    pub ratio: f64,
    pub n_accepted: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SweepOptions {
    /// Count only gold > 1 (instead of >= 1) in the ratio numerator.
    pub good_strict: bool,
}

#[derive(Default, Clone, Copy)]
struct Counts {
    neg: usize,
    mid: usize,
    good: usize,
    good_strict: usize,
}

/// One row per threshold, by exact counting. Thresholds must be ascending.
pub fn sweep(scored: &ScoredSet, thresholds: &[f64], opts: SweepOptions) -> Result<Vec<SweepRow>> {
    if scored.is_empty() {
        return Err(Error::invalid("cannot sweep an empty scored set"));
    }
    if thresholds.iter().any(|t| !t.is_finite()) {
        return Err(Error::invalid("thresholds must be finite"));
    }
    if thresholds.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::invalid("thresholds must be sorted ascending"));
    }
    let mut by_score: Vec<&Scored> = scored.entries.iter().collect();
    by_score.sort_by(|a, b| b.score.total_cmp(&a.score));
    // prefix[k] = counts over the k highest-scoring entries
    let mut prefix = Vec::with_capacity(by_score.len() + 1);
    let mut acc = Counts::default();
    prefix.push(acc);
    for e in &by_score {
        acc.neg += usize::from(e.gold < 0.0);
        acc.mid += usize::from((0.0..0.5).contains(&e.gold));
        acc.good += usize::from(e.gold >= 1.0);
        acc.good_strict += usize::from(e.gold > 1.0);
        prefix.push(acc);
    }
    let n_total = by_score.len() as f64;
    Ok(thresholds
        .iter()
        .map(|&t| {
            let k = by_score.partition_point(|e| e.score > t);
            let c = prefix[k];
            let frac = |x: usize| if k == 0 { f64::NAN } else { x as f64 / k as f64 };
            let good = if opts.good_strict { c.good_strict } else { c.good };
            SweepRow {
                threshold: t,
                p_neg: frac(c.neg),
                p_mid: frac(c.mid),
                p_good: frac(c.good),
                throwout: 1.0 - k as f64 / n_total,
                ratio: if k == 0 || c.neg == 0 {
                    f64::NAN
                } else {
                    good as f64 / c.neg as f64
                },
                n_accepted: k,
            }
        })
        .collect())
}

/// Thresholds at x.xx5 offsets, step 0.01, from just below the lowest score
/// (rounded down to 0.01) to just above the highest (rounded up).
pub fn default_threshold_grid(scores: &[f64]) -> Result<Vec<f64>> {
    if scores.is_empty() {
        return Err(Error::invalid("no scores to build a threshold grid from"));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::invalid("scores must be finite"));
    }
    let min = scores.iter().copied().fold(f64::INFINITY, f64::min);
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    // work in hundredths; the slack absorbs representation error like 0.29*100
    let lo = (min * 100.0 + 1e-9).floor() as i64;
    let hi = (max * 100.0 - 1e-9).ceil() as i64;
    // lo - 0.005 .. hi + 0.005 in steps of 0.01, i.e. (10c - 5)/1000 for c in lo..=hi+1
    Ok((lo..=hi + 1).map(|c| (10 * c - 5) as f64 / 1000.0).collect())
}

/// Parses `lo:hi:step` into an inclusive arithmetic grid.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let bad = || Error::invalid(format!("grid '{spec}' is not lo:hi:step"));
    let [lo, hi, step] = parts.as_slice() else {
        return Err(bad());
    };
    let lo: f64 = lo.trim().parse().map_err(|_| bad())?;
    let hi: f64 = hi.trim().parse().map_err(|_| bad())?;
    let step: f64 = step.trim().parse().map_err(|_| bad())?;
    if !(step > 0.0) || !lo.is_finite() || !hi.is_finite() || hi < lo {
        return Err(bad());
    }
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    Ok((0..=n)
        .map(|i| ((lo + i as f64 * step) * 1e12).round() / 1e12)
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct RcCurve {
    /// (throwout, ratio), throwout strictly increasing.
    pub points: Vec<(f64, f64)>,
    pub auc: f64,
}

/// Trapezoidal area under piecewise-linear `(x, y)` points.
pub fn trapezoid(points: &[(f64, f64)]) -> f64 {
    points
        .windows(2)
        .map(|w| (w[1].0 - w[0].0) * (w[0].1 + w[1].1) * 0.5)
        .sum()
}

/// Builds the curve from sweep rows: NaN ratios are dropped, rows sharing a
/// throwout collapse to the highest-threshold one, and the area runs only
/// over the retained points.
pub fn rcc(rows: &[SweepRow]) -> Result<RcCurve> {
    let mut ordered: Vec<&SweepRow> = rows.iter().collect();
    ordered.sort_by(|a, b| a.threshold.total_cmp(&b.threshold));
    let mut points: Vec<(f64, f64)> = Vec::new();
    for r in ordered {
        if !r.ratio.is_finite() {
            continue;
        }
        match points.last_mut() {
            Some(last) if last.0 == r.throwout => *last = (r.throwout, r.ratio),
            _ => points.push((r.throwout, r.ratio)),
        }
    }
    points.sort_by(|a, b| a.0.total_cmp(&b.0));
    if points.len() < 2 {
        return Err(Error::invalid(format!(
            "≥2 finite points required for an RCC, got {}",
            points.len()
        )));
    }
    let auc = trapezoid(&points);
    Ok(RcCurve { points, auc })
}

/// The row whose throwout is closest to `target`; ties go to the lower
/// threshold.
pub fn reference_point(rows: &[SweepRow], target: f64) -> Result<SweepRow> {
    rows.iter()
        .copied()
        .min_by(|a, b| {
            let da = (a.throwout - target).abs();
            let db = (b.throwout - target).abs();
            da.total_cmp(&db).then(a.threshold.total_cmp(&b.threshold))
        })
        .ok_or_else(|| Error::invalid("no sweep rows"))
}

pub const REFERENCE_THROWOUT: f64 = 0.70;

#[cfg(test)]
mod tests {
    use super::*;

    fn set(pairs: &[(f64, f64)]) -> ScoredSet {
        ScoredSet::from_triples(pairs.iter().enumerate().map(|(i, &(s, g))| (format!("c{i}"), s, g))).unwrap()
    }

    fn row(threshold: f64, throwout: f64, ratio: f64) -> SweepRow {
        SweepRow {
            threshold,
            p_neg: 0.0,
            p_mid: 0.0,
            p_good: 0.0,
            throwout,
            ratio,
            n_accepted: 0,
        }
    }

    #[test]
    fn decide_is_strict() {
        assert_eq!(decide(0.9, 0.845), Decision::Use);
        assert_eq!(decide(0.5, 0.5), Decision::NotUse);
        assert_eq!(decide(-0.2, -1.0), Decision::Use);
    }

    #[test]
    fn sweep_hand_example() {
        // scores/golds: two bad, one middle, two good, one gold exactly 1
        let s = set(&[(0.1, -1.0), (0.2, 0.3), (0.3, -0.2), (0.4, 1.5), (0.5, 1.0), (0.6, 2.0)]);
        let rows = sweep(&s, &[0.0, 0.25, 0.45, 0.7], SweepOptions::default()).unwrap();
        let r0 = rows[0];
        assert_eq!(r0.n_accepted, 6);
        assert_eq!(r0.throwout, 0.0);
        assert_eq!(r0.p_neg, 2.0 / 6.0);
        assert_eq!(r0.p_mid, 1.0 / 6.0);
        assert_eq!(r0.p_good, 3.0 / 6.0);
        assert_eq!(r0.ratio, 1.5);
        let r1 = rows[1];
        assert_eq!(r1.n_accepted, 4);
        assert_eq!(r1.ratio, 3.0);
        let r2 = rows[2];
        assert_eq!(r2.n_accepted, 2);
        assert!(r2.ratio.is_nan());
        assert_eq!(r2.p_neg, 0.0);
        let r3 = rows[3];
        assert_eq!(r3.n_accepted, 0);
        assert_eq!(r3.throwout, 1.0);
        assert!(r3.ratio.is_nan() && r3.p_neg.is_nan() && r3.p_good.is_nan());

        let strict = sweep(&s, &[0.0], SweepOptions { good_strict: true }).unwrap();
        assert_eq!(strict[0].ratio, 1.0);
        assert_eq!(strict[0].p_good, 0.5);
    }

    #[test]
    fn sweep_preconditions() {
        let s = set(&[(0.1, 0.0)]);
        assert!(sweep(&ScoredSet::default(), &[0.0], SweepOptions::default()).is_err());
        assert!(sweep(&s, &[0.2, 0.1], SweepOptions::default()).is_err());
        assert!(sweep(&s, &[f64::NAN], SweepOptions::default()).is_err());
        assert!(ScoredSet::from_triples([("a", 0.1, 0.0), ("a", 0.2, 0.0)]).is_err());
    }

    #[test]
    fn grid_examples() {
        let g = default_threshold_grid(&[0.21, 0.5, 0.99]).unwrap();
        assert_eq!(g.first(), Some(&0.205));
        assert_eq!(g.last(), Some(&0.995));
        assert_eq!(g.len(), 80);
        for w in g.windows(2) {
            assert!((w[1] - w[0] - 0.01).abs() < 1e-12);
        }
        assert_eq!(default_threshold_grid(&[0.5]).unwrap(), vec![0.495, 0.505]);
        assert_eq!(default_threshold_grid(&[0.29]).unwrap(), vec![0.285, 0.295]);
        let neg = default_threshold_grid(&[-0.41, 1.85]).unwrap();
        assert_eq!(neg.first(), Some(&-0.415));
        assert_eq!(neg.last(), Some(&1.855));
        assert!(default_threshold_grid(&[]).is_err());
    }

    #[test]
    fn parse_grid_examples() {
        let g = parse_grid("0.0:1.0:0.1").unwrap();
        assert_eq!(g.len(), 11);
        assert_eq!(g[3], 0.3);
        assert_eq!(g[10], 1.0);
        assert!(parse_grid("0:1").is_err());
        assert!(parse_grid("1:0:0.1").is_err());
        assert!(parse_grid("0:1:0").is_err());
    }

    #[test]
    fn rcc_examples() {
        let flat: Vec<SweepRow> = (0..=10).map(|i| row(i as f64, i as f64 / 10.0, 10.0)).collect();
        assert!((rcc(&flat).unwrap().auc - 10.0).abs() < 1e-9);

        let tri = [row(0.0, 0.0, 0.0), row(1.0, 1.0, 100.0)];
        assert!((rcc(&tri).unwrap().auc - 50.0).abs() < 1e-9);

        // NaN tail: integrate only to the last finite point
        let tail = [
            row(0.1, 0.0, 30.0),
            row(0.2, 0.5, 60.0),
            row(0.3, 0.9, 80.0),
            row(0.4, 0.9999, f64::NAN),
            row(0.5, 1.0, f64::NAN),
        ];
        let c = rcc(&tail).unwrap();
        assert_eq!(c.points.last(), Some(&(0.9, 80.0)));
        assert!((c.auc - (0.5 * 45.0 + 0.4 * 70.0)).abs() < 1e-9);

        assert!(rcc(&[row(0.1, 0.0, 1.0), row(0.2, 1.0, f64::NAN)]).is_err());
    }

    #[test]
    fn rcc_duplicate_throwouts_keep_last_row() {
        let rows = [row(0.1, 0.0, 5.0), row(0.2, 0.0, 5.0), row(0.3, 0.5, 7.0), row(0.4, 0.5, 9.0)];
        let c = rcc(&rows).unwrap();
        assert_eq!(c.points, vec![(0.0, 5.0), (0.5, 9.0)]);
    }

    #[test]
    fn reference_point_examples() {
        let rows = [row(0.1, 0.68, 1.0), row(0.2, 0.71, 2.0), row(0.3, 0.74, 3.0)];
        assert_eq!(reference_point(&rows, 0.70).unwrap().threshold, 0.2);
        let exact = [row(0.1, 0.65, 1.0), row(0.2, 0.70, 2.0)];
        assert_eq!(reference_point(&exact, 0.70).unwrap().threshold, 0.2);
        let tie = [row(0.1, 0.69, 1.0), row(0.2, 0.71, 2.0)];
        assert_eq!(reference_point(&tie, 0.70).unwrap().threshold, 0.1);
        assert!(reference_point(&[], 0.7).is_err());

        // rows shaped like a supervised sweep around 70% throwout
        let table = [
            row(0.895, 0.2739, 285.1000),
            row(1.095, 0.6940, 398.0),
            row(1.105, 0.7021, 406.8696),
            row(1.115, 0.7105, 410.0),
        ];
        let r = reference_point(&table, REFERENCE_THROWOUT).unwrap();
        assert_eq!((r.throwout, r.ratio), (0.7021, 406.8696));
    }
}
