//! Aggregates a run directory into the tables the figure renderer reads.

use std::path::Path;

use super::config::Method;
use super::metrics::*;
use super::run::{metrics_file, EPISODE_DELAYS_FILE};
use super::HarnessError;

pub const LINE_SWEEP_FILE: &str = "line_sweep.csv";
pub const LINK_DELAYS_FILE: &str = "link_delays.csv";
pub const BOXPLOT_FILE: &str = "boxplot.csv";

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PlotData {
    pub line_sweep: Vec<LineSweepRow>,
    pub link_delays: Vec<LinkDelayRow>,
    pub boxplot: Vec<BoxplotRow>,
}

fn same_value(a: Option<f64>, b: Option<f64>) -> bool {
    a.map(f64::to_bits) == b.map(f64::to_bits)
}

/// Groups in first-appearance order of the key.
fn group_by<T, K: Copy>(rows: &[T], key: impl Fn(&T) -> K, eq: impl Fn(K, K) -> bool) -> Vec<(K, Vec<&T>)> {
    let mut groups: Vec<(K, Vec<&T>)> = Vec::new();
    for row in rows {
        let k = key(row);
        match groups.iter_mut().find(|(g, _)| eq(*g, k)) {
            Some((_, members)) => members.push(row),
            None => groups.push((k, vec![row])),
        }
    }
    groups
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    s / n.max(1) as f64
}

/// Line-plot and bar tables: per (sweep value, method), the per-seed slot
/// means averaged over seeds. Boxplot rows are the raw per-round delays.
pub fn aggregate(metrics: &[(Method, Vec<MetricsRecord>)], episodes: &[EpisodeDelay]) -> PlotData {
    let mut out = PlotData::default();
    for (method, records) in metrics {
        for (value, rows) in group_by(records, |r| r.sweep_value, same_value) {
            let seeds = group_by(&rows, |r| r.seed, |a, b| a == b);
            let per_seed = |f: fn(&MetricsRecord) -> f64| mean(seeds.iter().map(|(_, rs)| mean(rs.iter().map(|r| f(r)))));
            let total = per_seed(|r| r.mean_total_delay);
            let v2i = per_seed(|r| r.mean_v2i_delay);
            let v2v = per_seed(|r| r.mean_v2v_delay);
            out.line_sweep.push(LineSweepRow {
                sweep_value: value,
                method: method.name().to_string(),
                seeds: seeds.len(),
                mean_total_delay: total,
                mean_v2i_delay: v2i,
                mean_v2v_delay: v2v,
                violations: per_seed(|r| r.violations as f64),
            });
            for (link, delay) in [("v2i", v2i), ("v2v", v2v)] {
                out.link_delays.push(LinkDelayRow {
                    sweep_value: value,
                    method: method.name().to_string(),
                    link: link.to_string(),
                    mean_delay: delay,
                });
            }
        }
    }
    out.boxplot = episodes
        .iter()
        .map(|e| BoxplotRow {
            sweep_value: e.sweep_value,
            method: e.method.clone(),
            seed: e.seed,
            episode: e.episode,
            mean_total_delay: e.mean_total_delay,
        })
        .collect();
    out
}

/// Reads the metrics and round-delay files of `run_dir` and writes the
/// aggregated tables into `out_dir`.
pub fn plot_data_command(run_dir: &Path, out_dir: &Path) -> Result<PlotData, HarnessError> {
    let mut metrics = Vec::new();
    for method in Method::ALL {
        let path = run_dir.join(metrics_file(method));
        if path.exists() {
            metrics.push((method, read_csv(&path, METRICS_SCHEMA, &METRICS_HEADER)?));
        }
    }
    if metrics.is_empty() {
        return Err(HarnessError::Schema {
            path: run_dir.to_path_buf(),
            message: "no metrics files found".into(),
        });
    }
    let episodes_path = run_dir.join(EPISODE_DELAYS_FILE);
    let episodes = if episodes_path.exists() {
        read_csv(&episodes_path, EPISODE_DELAYS_SCHEMA, &EPISODE_DELAYS_HEADER)?
    } else {
        Vec::new()
    };
    let data = aggregate(&metrics, &episodes);
    super::ensure_dir(out_dir)?;
    write_csv(&out_dir.join(LINE_SWEEP_FILE), LINE_SWEEP_SCHEMA, &LINE_SWEEP_HEADER, &data.line_sweep)?;
    write_csv(&out_dir.join(LINK_DELAYS_FILE), LINK_DELAYS_SCHEMA, &LINK_DELAYS_HEADER, &data.link_delays)?;
    write_csv(&out_dir.join(BOXPLOT_FILE), BOXPLOT_SCHEMA, &BOXPLOT_HEADER, &data.boxplot)?;
    Ok(data)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(value: f64, seed: u64, slot: usize, delay: f64) -> MetricsRecord {
        MetricsRecord {
            run_id: format!("power{value}_s{seed}"),
            seed,
            sweep_value: Some(value),
            method: "ga".into(),
            slot,
            mean_total_delay: delay,
            mean_v2i_delay: delay / 2.0,
            mean_v2v_delay: delay / 4.0,
            violations: slot,
            reward: -delay,
        }
    }

    #[test]
    fn averages_slots_then_seeds() {
        // seed 0: slots 1, 3 -> 2; seed 1: one slot 5 -> 5; mean 3.5
        let records = vec![rec(0.1, 0, 0, 1.0), rec(0.1, 0, 1, 3.0), rec(0.1, 1, 0, 5.0), rec(0.2, 0, 0, 2.0)];
        let data = aggregate(&[(Method::Ga, records)], &[]);
        assert_eq!(data.line_sweep.len(), 2);
        let first = &data.line_sweep[0];
        assert_eq!(first.sweep_value, Some(0.1));
        assert_eq!(first.seeds, 2);
        assert!((first.mean_total_delay - 3.5).abs() < 1e-12);
        assert!((first.mean_v2i_delay - 1.75).abs() < 1e-12);
        assert!((first.violations - 0.25).abs() < 1e-12);
        assert_eq!(data.link_delays.len(), 4);
        assert_eq!(data.link_delays[1].link, "v2v");
    }
}
