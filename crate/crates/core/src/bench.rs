/*
  Copyright 2026 The conplan Authors

  Licensed under the Apache License, Version 2.0 (the "License");
  you may not use this file except in compliance with the License.
  You may obtain a copy of the License at

      http://www.apache.org/licenses/LICENSE-2.0

  Unless required by applicable law or agreed to in writing, software
  distributed under the License is distributed on an "AS IS" BASIS,
  WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
  See the License for the specific language governing permissions and
  limitations under the License.
*/

//! Sampler comparison runs and their summary statistics.

use crate::error::{check_version, from_json_str, Error, Result};
use crate::neural::PlanningNetwork;
use crate::planner::{plan, PlannerParams};
use crate::sampler::{SamplerKind, SamplerSetup, DEFAULT_EXPLOIT_BUDGET};
use crate::scenario::Scenario;
use crate::seed::derive_seed;
use crate::world::DEFAULT_GRID_SIDE;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

pub const REPORT_VERSION: u32 = 1;

/// One planner run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub sampler: SamplerKind,
    pub scenario_id: String,
    pub repeat: usize,
    pub seed: u64,
    pub success: bool,
    /// Iterations consumed; a failed run consumed the whole budget.
    pub iterations: usize,
    pub nodes_expanded: usize,
    pub projection_calls: usize,
    pub wall_time_ms: f64,
    /// Joint-space length of the path, absent on failure.
    pub path_length: Option<f64>,
}

/// Distribution summary; quantiles interpolate linearly between order statistics.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub count: usize,
    pub mean: f64,
    /// Sample standard deviation (zero for fewer than two values).
    pub stddev: f64,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub iqr: f64,
    pub min: f64,
    pub max: f64,
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

impl Summary {
    /// Summary of `values`, `None` when empty.
    pub fn of(values: &[f64]) -> Option<Summary> {
        if values.is_empty() {
            return None;
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let stddev = if values.len() > 1 {
            (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        let q1 = quantile(&sorted, 0.25);
        let q3 = quantile(&sorted, 0.75);
        Some(Summary {
            count: values.len(),
            mean,
            stddev,
            median: quantile(&sorted, 0.5),
            q1,
            q3,
            iqr: q3 - q1,
            min: sorted[0],
            max: sorted[sorted.len() - 1],
        })
    }
}

/// Per-sampler aggregates. Iteration, projection and time summaries cover all
/// runs; path length covers successful runs only.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplerAggregate {
    pub sampler: SamplerKind,
    pub runs: usize,
    pub successes: usize,
    pub success_rate: f64,
    pub iterations: Summary,
    pub projection_calls: Summary,
    pub wall_time_ms: Summary,
    pub path_length: Option<Summary>,
}

/// Aggregates for every sampler appearing in `records`, in order of first appearance.
pub fn aggregate(records: &[BenchRecord]) -> Vec<SamplerAggregate> {
    let mut kinds: Vec<SamplerKind> = Vec::new();
    for r in records {
        if !kinds.contains(&r.sampler) {
            kinds.push(r.sampler);
        }
    }
    kinds
        .into_iter()
        .map(|k| {
            let rs: Vec<&BenchRecord> = records.iter().filter(|r| r.sampler == k).collect();
            let successes = rs.iter().filter(|r| r.success).count();
            let col = |f: &dyn Fn(&BenchRecord) -> f64| rs.iter().map(|r| f(r)).collect::<Vec<f64>>();
            SamplerAggregate {
                sampler: k,
                runs: rs.len(),
                successes,
                success_rate: successes as f64 / rs.len() as f64,
                iterations: Summary::of(&col(&|r| r.iterations as f64)).unwrap(),
                projection_calls: Summary::of(&col(&|r| r.projection_calls as f64)).unwrap(),
                wall_time_ms: Summary::of(&col(&|r| r.wall_time_ms)).unwrap(),
                path_length: Summary::of(&rs.iter().filter_map(|r| r.path_length).collect::<Vec<f64>>()),
            }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchParams {
    pub planner: PlannerParams,
    pub repeats: usize,
    pub seed: u64,
    pub exploit_budget: usize,
    pub grid_side: usize,
}

impl Default for BenchParams {
    fn default() -> Self {
        BenchParams {
            planner: PlannerParams::default(),
            repeats: 1,
            seed: 0,
            exploit_budget: DEFAULT_EXPLOIT_BUDGET,
            grid_side: DEFAULT_GRID_SIDE,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub version: u32,
    pub params: BenchParams,
    pub records: Vec<BenchRecord>,
    pub aggregates: Vec<SamplerAggregate>,
}

impl BenchReport {
    pub fn from_records(params: BenchParams, records: Vec<BenchRecord>) -> Self {
        BenchReport {
            version: REPORT_VERSION,
            aggregates: aggregate(&records),
            params,
            records,
        }
    }

    pub fn aggregate_for(&self, kind: SamplerKind) -> Option<&SamplerAggregate> {
        self.aggregates.iter().find(|a| a.sampler == kind)
    }

    /// True when the stored aggregates equal a recomputation from the records.
    pub fn aggregates_consistent(&self) -> bool {
        aggregate(&self.records) == self.aggregates
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Parses a report and checks its aggregates against its records.
    pub fn from_json(text: &str) -> Result<Self> {
        check_version("report", text, REPORT_VERSION)?;
        let report: BenchReport = from_json_str("report", text)?;
        if !report.aggregates_consistent() {
            return Err(Error::config("report", "aggregates do not match the raw records"));
        }
        Ok(report)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Writes the raw records, one row per run.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        write_records_csv(&self.records, path)
    }

    /// Plain-text table of the aggregates.
    pub fn table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<8} {:>5} {:>8} {:>16} {:>8} {:>8} {:>6} {:>6} {:>14}",
            "sampler", "runs", "success", "iters mean+-sd", "median", "iqr", "min", "max", "time ms median"
        );
        for a in &self.aggregates {
            let it = &a.iterations;
            let _ = writeln!(
                out,
                "{:<8} {:>5} {:>7.1}% {:>8.1} +- {:<5.1} {:>8.1} {:>8.1} {:>6} {:>6} {:>14.2}",
                a.sampler.name(),
                a.runs,
                100.0 * a.success_rate,
                it.mean,
                it.stddev,
                it.median,
                it.iqr,
                it.min,
                it.max,
                a.wall_time_ms.median
            );
        }
        out
    }
}

pub fn write_records_csv(records: &[BenchRecord], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_records_csv(path: &Path) -> Result<Vec<BenchRecord>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for row in r.deserialize() {
        out.push(row?);
    }
    Ok(out)
}

/// Runs every sampler on every scenario `params.repeats` times.
///
/// Run `(scenario k, repeat r)` uses seed `derive_seed(params.seed, [k, r])`
/// for every sampler, so samplers are compared on identical seeds.
pub fn run_bench<T: crate::scalar::Real>(
    scenarios: &[Scenario<T>],
    samplers: &[SamplerKind],
    network: Option<Arc<PlanningNetwork<T>>>,
    params: &BenchParams,
) -> Result<BenchReport> {
    params.planner.validate()?;
    if let Some(k) = samplers.iter().find(|k| k.needs_network()) {
        if network.is_none() {
            return Err(Error::config("bench", format!("{k} sampler requires network weights")));
        }
    }
    let mut records = Vec::new();
    for &kind in samplers {
        for (k, s) in scenarios.iter().enumerate() {
            let scene = s.scene_input(params.grid_side)?;
            let mut setup = SamplerSetup::new(&s.chain, &scene).with_network(network.clone());
            setup.exploit_budget = params.exploit_budget;
            for repeat in 0..params.repeats {
                let seed = derive_seed(params.seed, &[k as u64, repeat as u64]);
                let mut sampler = setup.build(kind, seed)?;
                let out = plan(&s.problem(), &mut sampler, &s.start, &s.goal, &params.planner)?;
                records.push(BenchRecord {
                    sampler: kind,
                    scenario_id: s.id.clone(),
                    repeat,
                    seed,
                    success: out.path.is_some(),
                    iterations: out.stats.iterations,
                    nodes_expanded: out.stats.nodes_expanded,
                    projection_calls: out.stats.projection_calls,
                    wall_time_ms: out.stats.wall_time_ms,
                    path_length: out.path.as_ref().map(|p| p.length().as_f64()),
                });
            }
        }
    }
    Ok(BenchReport::from_records(params.clone(), records))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(sampler: SamplerKind, id: &str, success: bool, iterations: usize) -> BenchRecord {
        BenchRecord {
            sampler,
            scenario_id: id.into(),
            repeat: 0,
            seed: 1,
            success,
            iterations,
            nodes_expanded: 3 * iterations,
            projection_calls: 5 * iterations,
            wall_time_ms: iterations as f64 * 0.37,
            path_length: success.then(|| 1.5 + iterations as f64 * 0.01),
        }
    }

    #[test]
    fn summary_against_hand_values() {
        let s = Summary::of(&[4.0, 1.0, 3.0, 2.0]).unwrap();
        assert_eq!(s.count, 4);
        assert_eq!(s.mean, 2.5);
        assert!((s.stddev - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(s.median, 2.5);
        assert_eq!(s.q1, 1.75);
        assert_eq!(s.q3, 3.25);
        assert_eq!(s.iqr, 1.5);
        assert_eq!((s.min, s.max), (1.0, 4.0));
        let one = Summary::of(&[7.0]).unwrap();
        assert_eq!((one.mean, one.stddev, one.median, one.iqr), (7.0, 0.0, 7.0, 0.0));
        assert!(Summary::of(&[]).is_none());
    }

    #[test]
    fn single_record_aggregate_equals_record() {
        let r = rec(SamplerKind::Uniform, "a", true, 12);
        let agg = aggregate(std::slice::from_ref(&r));
        assert_eq!(agg.len(), 1);
        let a = &agg[0];
        assert_eq!(a.success_rate, 1.0);
        for v in [a.iterations.mean, a.iterations.median, a.iterations.min, a.iterations.max] {
            assert_eq!(v, 12.0);
        }
        assert_eq!(a.wall_time_ms.median, r.wall_time_ms);
        assert_eq!(a.path_length.map(|p| p.mean), r.path_length);
    }

    #[test]
    fn csv_round_trip_reproduces_aggregates() {
        let mut records = Vec::new();
        for (i, k) in SamplerKind::ALL.iter().enumerate() {
            for j in 0..7 {
                records.push(rec(*k, &format!("s{j}"), (i + j) % 4 != 0, 3 + 7 * j + i));
            }
        }
        let report = BenchReport::from_records(BenchParams::default(), records);
        assert_eq!(report.aggregates.len(), 3);
        let dir = tempfile::tempdir().unwrap();
        let csv = dir.path().join("raw.csv");
        report.write_csv(&csv).unwrap();
        let back = read_records_csv(&csv).unwrap();
        assert_eq!(aggregate(&back), report.aggregates);
        let json = dir.path().join("r.json");
        report.save(&json).unwrap();
        let loaded = BenchReport::load(&json).unwrap();
        assert!(loaded.aggregates_consistent());
        assert_eq!(loaded.records.len(), report.records.len());
        assert!(report.table().contains("hybrid"));
    }

    #[test]
    fn tampered_report_rejected() {
        let report = BenchReport::from_records(
            BenchParams::default(),
            vec![rec(SamplerKind::Neural, "x", true, 4), rec(SamplerKind::Neural, "y", false, 2000)],
        );
        let mut v: serde_json::Value = serde_json::from_str(&report.to_json().unwrap()).unwrap();
        v["aggregates"][0]["successes"] = serde_json::json!(2);
        assert!(BenchReport::from_json(&v.to_string()).is_err());
        assert!(BenchReport::from_json(&report.to_json().unwrap()).is_ok());
    }

    #[test]
    fn neural_without_weights_is_rejected() {
        let err = run_bench::<f64>(&[], &[SamplerKind::Uniform, SamplerKind::Hybrid], None, &BenchParams::default());
        assert!(matches!(err, Err(Error::Config { .. })));
        assert!(run_bench::<f64>(&[], &[SamplerKind::Uniform], None, &BenchParams::default())
            .unwrap()
            .records
            .is_empty());
    }
}
