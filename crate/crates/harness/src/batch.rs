//! Seeded batch execution over obstacle-count sweeps, aggregation, and
//! CSV persistence.
//!
//! Trials run concurrently (they are fully independent); rows and
//! aggregates are assembled in (obstacle count, seed) order so the report
//! is identical however many workers ran it.

use rayon::prelude::*;

use crate::metrics::Outcome;
use crate::scenario::{Scenario, ScenarioError};
use crate::trial::run_trial;

#[derive(Debug, Clone)]
pub struct TrialRow {
    pub scenario: String,
    pub obstacles: usize,
    pub seed: u64,
    pub outcome: Outcome,
    pub length_cm: f64,
    pub ticks: u64,
    pub max_turn_deg: f64,
}

#[derive(Debug, Clone)]
pub struct AggregateRow {
    pub obstacles: usize,
    pub trials: usize,
    pub successes: usize,
    pub success_pct: f64,
    /// Mean traversed length over successful trials, cm.
    pub mean_success_length_cm: f64,
    pub mean_ticks: f64,
}

#[derive(Debug, Clone)]
pub struct BatchReport {
    pub rows: Vec<TrialRow>,
    pub aggregates: Vec<AggregateRow>,
}

/// Run `seeds x obstacle_counts` trials of the scenario.
pub fn run_batch(
    scenario: &Scenario,
    seeds: &[u64],
    obstacle_counts: &[usize],
    parallel: bool,
) -> Result<BatchReport, ScenarioError> {
    let jobs: Vec<(usize, u64)> = obstacle_counts
        .iter()
        .flat_map(|&c| seeds.iter().map(move |&s| (c, s)))
        .collect();
    let run_one = |&(count, seed): &(usize, u64)| -> Result<TrialRow, String> {
        let record = run_trial(scenario, seed, Some(count)).map_err(|e| e.to_string())?;
        Ok(TrialRow {
            scenario: scenario.name.clone(),
            obstacles: count,
            seed,
            outcome: record.metrics.outcome,
            length_cm: record.metrics.path_length_cm,
            ticks: record.metrics.ticks_elapsed,
            max_turn_deg: record.metrics.max_turn_deg(),
        })
    };
    let results: Vec<Result<TrialRow, String>> = if parallel {
        jobs.par_iter().map(run_one).collect()
    } else {
        jobs.iter().map(run_one).collect()
    };
    let mut rows = Vec::with_capacity(results.len());
    for r in results {
        rows.push(r.map_err(ScenarioError::Invalid)?);
    }
    let aggregates = aggregate(&rows, obstacle_counts);
    Ok(BatchReport { rows, aggregates })
}

/// Aggregate per obstacle count, reducing rows in their stored order.
pub fn aggregate(rows: &[TrialRow], obstacle_counts: &[usize]) -> Vec<AggregateRow> {
    obstacle_counts
        .iter()
        .map(|&count| {
            let subset: Vec<&TrialRow> = rows.iter().filter(|r| r.obstacles == count).collect();
            let trials = subset.len();
            let successes = subset
                .iter()
                .filter(|r| r.outcome == Outcome::Success)
                .count();
            let success_lengths: Vec<f64> = subset
                .iter()
                .filter(|r| r.outcome == Outcome::Success)
                .map(|r| r.length_cm)
                .collect();
            let mean_success_length_cm = if success_lengths.is_empty() {
                f64::NAN
            } else {
                success_lengths.iter().sum::<f64>() / success_lengths.len() as f64
            };
            AggregateRow {
                obstacles: count,
                trials,
                successes,
                success_pct: if trials == 0 {
                    0.0
                } else {
                    100.0 * successes as f64 / trials as f64
                },
                mean_success_length_cm,
                mean_ticks: if trials == 0 {
                    0.0
                } else {
                    subset.iter().map(|r| r.ticks as f64).sum::<f64>() / trials as f64
                },
            }
        })
        .collect()
}

pub const CSV_HEADER: &str = "scenario,obstacles,seed,outcome,length_cm,ticks,max_turn_deg";

/// Per-trial rows in the documented stable schema.
pub fn rows_to_csv(rows: &[TrialRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{:.3},{},{:.3}\n",
            r.scenario,
            r.obstacles,
            r.seed,
            r.outcome.as_str(),
            r.length_cm,
            r.ticks,
            r.max_turn_deg
        ));
    }
    out
}

/// Human-readable aggregate table for stdout.
pub fn aggregates_to_table(aggs: &[AggregateRow]) -> String {
    let mut out = String::from("obstacles  trials  success%  mean_len_cm  mean_ticks\n");
    for a in aggs {
        out.push_str(&format!(
            "{:>9}  {:>6}  {:>7.1}%  {:>11.1}  {:>10.1}\n",
            a.obstacles, a.trials, a.success_pct, a.mean_success_length_cm, a.mean_ticks
        ));
    }
    out
}
