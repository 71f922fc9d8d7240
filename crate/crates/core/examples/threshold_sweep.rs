//! Threshold sweep and ratio-coverage curve over a scored set.

use contextcurate::curate::{
    default_threshold_grid, rcc, reference_point, sweep, ScoredSet, SweepOptions, REFERENCE_THROWOUT,
};
use contextcurate::report::{render_rcc_csv, render_sweep_csv};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> contextcurate::Result<()> {
    // noisy scores that track gold loosely
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let scored = ScoredSet::from_triples((0..2000).map(|i| {
        let ratings: Vec<i32> = (0..10).map(|_| rng.gen_range(-1..=2)).collect();
        let gold = ratings.iter().sum::<i32>() as f64 / 10.0 + rng.gen_range(-0.6..0.6);
        let gold = (gold * 10.0).round().clamp(-10.0, 20.0) / 10.0;
        let score = 0.5 + 0.15 * gold + rng.gen_range(-0.2..0.2);
        (format!("c{i:04}"), score, gold)
    }))?;

    let grid = default_threshold_grid(&scored.scores())?;
    let rows = sweep(&scored, &grid, SweepOptions::default())?;
    let csv = render_sweep_csv(&rows)?;
    for line in csv.lines().take(4).chain(std::iter::once("...")).chain(csv.lines().rev().take(2)) {
        println!("{line}");
    }

    let curve = rcc(&rows)?;
    println!("\nRCC: {} points, AUC {:.3}", curve.points.len(), curve.auc);
    print!("{}", render_rcc_csv(&curve).lines().take(3).collect::<Vec<_>>().join("\n"));
    let r = reference_point(&rows, REFERENCE_THROWOUT)?;
    println!(
        "\n\nclosest to {:.0}% throwout: threshold {}, throwout {:.3}, ratio {:.2}, {} kept",
        REFERENCE_THROWOUT * 100.0,
        r.threshold,
        r.throwout,
        r.ratio,
        r.n_accepted
    );

    let strict = sweep(&scored, &grid, SweepOptions { good_strict: true })?;
    println!("accept-all ratio {:.3} (y >= 1) vs {:.3} (y > 1)", rows[0].ratio, strict[0].ratio);
    Ok(())
}
