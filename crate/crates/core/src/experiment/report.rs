//! Per-figure tables and SVG plots built from the evaluation CSVs.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::config::ExperimentConfig;
use super::layout::{ensure_parent, Layout};
use super::records::*;
use super::svg::{bar_chart, line_chart, BarPanel, LinePanel, Series};
use crate::domain::{TaskId, Zone};
use crate::error::{Error, Result};
use crate::simulators::classify_zone;

const ALGOS: [&str; 2] = ["npe-mc", "bam"];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapRow {
    pub task: String,
    pub algo: String,
    pub budget: usize,
    pub seeds: usize,
    pub observations: usize,
    pub mean_gap: f64,
    /// Standard deviation across seeds of the per-seed mean gap.
    pub seed_sd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProfileComparisonRow {
    pub task: String,
    pub obs_id: usize,
    pub budget: usize,
    pub seed: u64,
    pub action: f64,
    pub oracle: Option<f64>,
    pub npe_mc: Option<f64>,
    pub bam: Option<f64>,
    pub npe_mc_minus_oracle: Option<f64>,
    pub bam_minus_oracle: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZoneRow {
    pub algo: String,
    pub budget: usize,
    pub zone: String,
    pub rows: usize,
    pub mean_incurred_cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AblationSummaryRow {
    pub task: String,
    pub algo: String,
    pub setting: String,
    pub budget: usize,
    pub seeds: usize,
    pub mean_validation_loss: Option<f64>,
    pub mean_incurred_cost: f64,
    pub mean_gap: f64,
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len().max(1) as f64
}

fn sd(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    let m = mean(v);
    (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
}

fn is_model(algo: &str) -> bool {
    ALGOS.contains(&algo)
}

/// Mean cost gap against budget, one series per algorithm per task.
pub fn gap_table(results: &[ResultRow]) -> Vec<GapRow> {
    let mut by: BTreeMap<(String, String, usize), BTreeMap<u64, Vec<f64>>> = BTreeMap::new();
    for r in results.iter().filter(|r| is_model(&r.algo)) {
        if let Some(g) = r.gap {
            by.entry((r.task.clone(), r.algo.clone(), r.budget))
                .or_default()
                .entry(r.seed)
                .or_default()
                .push(g);
        }
    }
    by.into_iter()
        .map(|((task, algo, budget), seeds)| {
            let per_seed: Vec<f64> = seeds.values().map(|v| mean(v)).collect();
            let all: Vec<f64> = seeds.values().flatten().copied().collect();
            GapRow {
                task,
                algo,
                budget,
                seeds: per_seed.len(),
                observations: all.len() / per_seed.len().max(1),
                mean_gap: mean(&all),
                seed_sd: sd(&per_seed),
            }
        })
        .collect()
}

fn gap_chart(rows: &[GapRow]) -> String {
    let tasks: BTreeSet<&str> = rows.iter().map(|r| r.task.as_str()).collect();
    let panels: Vec<LinePanel> = tasks
        .into_iter()
        .map(|t| LinePanel {
            title: t.to_string(),
            x_label: "simulation budget".into(),
            y_label: "mean cost gap".into(),
            log_x: true,
            series: ALGOS
                .iter()
                .filter(|a| rows.iter().any(|r| r.task == t && r.algo == **a))
                .map(|a| Series {
                    name: a.to_string(),
                    points: rows
                        .iter()
                        .filter(|r| r.task == t && r.algo == *a)
                        .map(|r| (r.budget as f64, r.mean_gap))
                        .collect(),
                    dashed: false,
                })
                .collect(),
        })
        .collect();
    line_chart("Cost gap against simulation budget", &panels)
}

/// Oracle and estimated expected-cost profiles at the largest budget and
/// first seed, with their differences.
pub fn profile_table(task: &str, rows: &[ProfileRow]) -> Vec<ProfileComparisonRow> {
    let Some(budget) = rows.iter().filter(|r| is_model(&r.algo)).map(|r| r.budget).max() else {
        return Vec::new();
    };
    let Some(seed) = rows.iter().filter(|r| is_model(&r.algo) && r.budget == budget).map(|r| r.seed).min() else {
        return Vec::new();
    };
    let mut grid: BTreeMap<(usize, u64), [Option<f64>; 3]> = BTreeMap::new();
    let mut actions: BTreeMap<u64, f64> = BTreeMap::new();
    for r in rows {
        let slot = match r.algo.as_str() {
            "oracle" => 0,
            "npe-mc" if r.budget == budget && r.seed == seed => 1,
            "bam" if r.budget == budget && r.seed == seed => 2,
            _ => continue,
        };
        let key = r.action.to_bits();
        actions.insert(key, r.action);
        grid.entry((r.obs_id, key)).or_default()[slot] = Some(r.expected_cost);
    }
    let mut out: Vec<ProfileComparisonRow> = grid
        .into_iter()
        .map(|((obs_id, key), [o, n, b])| ProfileComparisonRow {
            task: task.to_string(),
            obs_id,
            budget,
            seed,
            action: actions[&key],
            oracle: o,
            npe_mc: n,
            bam: b,
            npe_mc_minus_oracle: n.zip(o).map(|(n, o)| n - o),
            bam_minus_oracle: b.zip(o).map(|(b, o)| b - o),
        })
        .collect();
    out.sort_by(|a, b| (a.obs_id, a.action).partial_cmp(&(b.obs_id, b.action)).expect("finite actions"));
    out
}

fn profile_chart(tables: &[Vec<ProfileComparisonRow>]) -> String {
    let mut panels = Vec::new();
    for t in tables {
        let Some(first) = t.first() else { continue };
        let rows: Vec<&ProfileComparisonRow> = t.iter().filter(|r| r.obs_id == first.obs_id).collect();
        let series = [("oracle", 0), ("npe-mc", 1), ("bam", 2)]
            .into_iter()
            .map(|(name, k)| Series {
                name: name.into(),
                points: rows.iter().filter_map(|r| [r.oracle, r.npe_mc, r.bam][k].map(|v| (r.action, v))).collect(),
                dashed: k == 0,
            })
            .filter(|s| !s.points.is_empty())
            .collect();
        panels.push(LinePanel {
            title: format!("{} (obs {}, n={})", first.task, first.obs_id, first.budget),
            x_label: "action".into(),
            y_label: "expected cost".into(),
            log_x: false,
            series,
        });
    }
    line_chart("Expected-cost profiles", &panels)
}

/// BVEP incurred cost by true zone, algorithm and budget, plus an `all` row.
pub fn zone_table(results: &[ResultRow], obs: &[Observation]) -> Result<Vec<ZoneRow>> {
    let zones: BTreeMap<usize, Zone> = obs.iter().map(|o| (o.obs_id, classify_zone(o.theta[0]))).collect();
    let mut by: BTreeMap<(String, usize, usize), Vec<f64>> = BTreeMap::new();
    for r in results.iter().filter(|r| r.task == TaskId::Bvep.name()) {
        let z = *zones
            .get(&r.obs_id)
            .ok_or_else(|| Error::Format(format!("observation {} missing from the BVEP observation file", r.obs_id)))?;
        by.entry((r.algo.clone(), r.budget, z.index())).or_default().push(r.incurred_cost);
        by.entry((r.algo.clone(), r.budget, Zone::ALL.len())).or_default().push(r.incurred_cost);
    }
    Ok(by
        .into_iter()
        .map(|((algo, budget, z), v)| ZoneRow {
            algo,
            budget,
            zone: Zone::from_index(z).map_or("all", Zone::label).to_string(),
            rows: v.len(),
            mean_incurred_cost: mean(&v),
        })
        .collect())
}

fn zone_chart(rows: &[ZoneRow]) -> String {
    let zones = ["HZ", "PZ", "EZ", "all"];
    let budgets: BTreeSet<usize> = rows.iter().filter(|r| is_model(&r.algo)).map(|r| r.budget).collect();
    let panels: Vec<LinePanel> = zones
        .iter()
        .filter(|z| rows.iter().any(|r| r.zone == **z))
        .map(|z| {
            let mut series: Vec<Series> = ALGOS
                .iter()
                .map(|a| Series {
                    name: a.to_string(),
                    points: rows
                        .iter()
                        .filter(|r| r.zone == *z && r.algo == *a)
                        .map(|r| (r.budget as f64, r.mean_incurred_cost))
                        .collect(),
                    dashed: false,
                })
                .filter(|s| !s.points.is_empty())
                .collect();
            if let Some(r) = rows.iter().find(|r| r.zone == *z && r.algo == "random") {
                series.push(Series {
                    name: "random".into(),
                    points: budgets.iter().map(|&b| (b as f64, r.mean_incurred_cost)).collect(),
                    dashed: true,
                });
            }
            LinePanel {
                title: format!("true zone {z}"),
                x_label: "simulation budget".into(),
                y_label: "mean incurred cost".into(),
                log_x: true,
                series,
            }
        })
        .collect();
    line_chart("BVEP misclassification cost by zone", &panels)
}

/// Ablation aggregates over seeds; validation loss comes from the training summary.
pub fn ablation_table(rows: &[AblationRow], training: &[TrainingRow]) -> Vec<AblationSummaryRow> {
    let mut order: Vec<(String, String, String, usize)> = Vec::new();
    let mut by: BTreeMap<(String, String, String, usize), Vec<&AblationRow>> = BTreeMap::new();
    for r in rows {
        let k = (r.task.clone(), r.algo.clone(), r.setting.clone(), r.budget);
        if !by.contains_key(&k) {
            order.push(k.clone());
        }
        by.entry(k).or_default().push(r);
    }
    order
        .into_iter()
        .map(|k| {
            let rs = &by[&k];
            let seeds: BTreeSet<u64> = rs.iter().map(|r| r.seed).collect();
            let vl: Vec<f64> = training
                .iter()
                .filter(|t| t.ablation && t.algo == "bam" && t.task == k.0 && t.setting == k.2 && t.budget == k.3 && seeds.contains(&t.seed))
                .map(|t| t.best_validation_loss)
                .collect();
            AblationSummaryRow {
                task: k.0.clone(),
                algo: k.1.clone(),
                setting: k.2.clone(),
                budget: k.3,
                seeds: seeds.len(),
                mean_validation_loss: (k.1 == "bam" && !vl.is_empty()).then(|| mean(&vl)),
                mean_incurred_cost: mean(&rs.iter().map(|r| r.incurred_cost).collect::<Vec<_>>()),
                mean_gap: mean(&rs.iter().map(|r| r.gap).collect::<Vec<_>>()),
            }
        })
        .collect()
}

fn ablation_chart(rows: &[AblationSummaryRow]) -> String {
    let mut panels = vec![BarPanel {
        title: "BAM validation MSE".into(),
        y_label: "validation loss".into(),
        bars: rows.iter().filter_map(|r| r.mean_validation_loss.map(|v| (r.setting.clone(), v))).collect(),
    }];
    for algo in ALGOS {
        panels.push(BarPanel {
            title: format!("{algo} mean cost gap"),
            y_label: "gap".into(),
            bars: rows.iter().filter(|r| r.algo == algo).map(|r| (r.setting.clone(), r.mean_gap)).collect(),
        });
    }
    bar_chart("Ablations", &panels)
}

fn write_text(path: &std::path::Path, text: &str) -> Result<()> {
    ensure_parent(path)?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Emits `gap_vs_budget`, `cost_profiles`, `bvep_zones` and
/// `ablation` as CSV and SVG. Only reads files written by `evaluate`.
pub fn cmd_report(cfg: &ExperimentConfig) -> Result<()> {
    cfg.validate()?;
    let layout = Layout::new(&cfg.out);
    let results: Vec<ResultRow> = read_rows(&layout.results())?;

    let gaps = gap_table(&results);
    write_rows(&layout.report("gap_vs_budget.csv"), &gaps)?;
    write_text(&layout.report("gap_vs_budget.svg"), &gap_chart(&gaps))?;

    let labels: BTreeSet<String> = results.iter().filter(|r| r.gap.is_some()).map(|r| r.task.clone()).collect();
    let mut tables = Vec::new();
    for label in &labels {
        let rows: Vec<ProfileRow> = read_rows(&layout.profile(label))?;
        tables.push(profile_table(label, &rows));
    }
    write_rows(&layout.report("cost_profiles.csv"), &tables.concat())?;
    write_text(&layout.report("cost_profiles.svg"), &profile_chart(&tables))?;

    if results.iter().any(|r| r.task == TaskId::Bvep.name()) {
        let obs = read_observations(&layout.observations(TaskId::Bvep), TaskId::Bvep)?;
        let zones = zone_table(&results, &obs)?;
        write_rows(&layout.report("bvep_zones.csv"), &zones)?;
        write_text(&layout.report("bvep_zones.svg"), &zone_chart(&zones))?;
    }

    if cfg.ablation.enabled {
        let rows: Vec<AblationRow> = read_rows(&layout.ablation())?;
        let training: Vec<TrainingRow> = read_rows(&layout.training())?;
        let table = ablation_table(&rows, &training);
        write_rows(&layout.report("ablation.csv"), &table)?;
        write_text(&layout.report("ablation.svg"), &ablation_chart(&table))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(algo: &str, budget: usize, seed: u64, obs_id: usize, incurred: f64, gap: Option<f64>) -> ResultRow {
        ResultRow {
            task: "toy".into(),
            algo: algo.into(),
            budget,
            seed,
            obs_id,
            action: 1.0,
            expected_cost: Some(0.0),
            incurred_cost: incurred,
            gap,
        }
    }

    #[test]
    fn gap_table_has_one_series_per_algorithm() {
        let mut rs = vec![row("oracle", 0, 0, 0, 0.1, Some(0.0))];
        for algo in ALGOS {
            for b in [500, 5000] {
                for s in 0..2 {
                    rs.push(row(algo, b, s, 0, 0.2, Some(b as f64 / 1e4 + s as f64)));
                }
            }
        }
        let t = gap_table(&rs);
        assert_eq!(t.len(), 4);
        assert!(t.iter().all(|r| r.algo != "oracle" && r.seeds == 2));
        let first = &t[0];
        assert_eq!((first.algo.as_str(), first.budget), ("bam", 500));
        assert!((first.mean_gap - 0.55).abs() < 1e-12);
        assert!((first.seed_sd - 0.5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn zone_table_splits_by_true_zone() {
        let obs = vec![
            Observation {
                obs_id: 0,
                theta: vec![-1.5, 20.0, -2.0, 3.5],
                x: vec![0.0; 10],
            },
            Observation {
                obs_id: 1,
                theta: vec![-4.0, 20.0, -2.0, 3.5],
                x: vec![0.0; 10],
            },
        ];
        let mut rs = vec![row("bam", 500, 0, 0, 1.0, None), row("bam", 500, 0, 1, 0.0, None)];
        for r in &mut rs {
            r.task = "bvep".into();
        }
        let t = zone_table(&rs, &obs).unwrap();
        let get = |z: &str| t.iter().find(|r| r.zone == z).map(|r| r.mean_incurred_cost);
        assert_eq!(get("EZ"), Some(1.0));
        assert_eq!(get("HZ"), Some(0.0));
        assert_eq!(get("all"), Some(0.5));
        assert_eq!(get("PZ"), None);
        assert!(zone_table(&rs, &obs[..1]).is_err());
    }

    #[test]
    fn profile_table_pairs_oracle_and_estimates() {
        let mk = |algo: &str, budget, a: f64, v: f64| ProfileRow {
            algo: algo.into(),
            budget,
            seed: 0,
            obs_id: 0,
            action: a,
            expected_cost: v,
        };
        let rows = vec![
            mk("oracle", 0, 0.0, 0.5),
            mk("oracle", 0, 1.0, 0.25),
            mk("bam", 500, 0.0, 0.75),
            mk("bam", 5000, 0.0, 0.5),
            mk("bam", 5000, 1.0, 0.5),
        ];
        let t = profile_table("toy", &rows);
        assert_eq!(t.len(), 2);
        assert_eq!(t[0].budget, 5000);
        assert_eq!(t[0].bam_minus_oracle, Some(0.0));
        assert_eq!(t[1].bam_minus_oracle, Some(0.25));
        assert_eq!(t[1].npe_mc, None);
    }
}
