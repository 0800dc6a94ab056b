//! Experiment plumbing shared by the command line and the test suites:
//! config files, per-plan prediction and measurement rows, comparison and
//! the long-pipeline study.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::analysis::{
    accuracy_report, disk_cost_units, fit_nonnegative, AccuracyReport, DiskCostUnits, FittedDiskModel, ReportOptions,
    DEFAULT_PAGE_BYTES,
};
use crate::error::{Error, Result};
use crate::exec::{
    available_memory, default_workers, execute_plan, required_bytes, simulate_counts, simulate_counts_from_stats,
    Database, ExecOptions, HashKind, DEFAULT_BATCH,
};
use crate::model::{plan_counts, predicted_cost, AccessCounts, MachineProfile, SwMode};
use crate::plan_space::{annotate, enumerate_plans, left_deep_shape, right_deep_shape, ChainQuery, NamedPlan};

pub const DEFAULT_REPETITIONS: usize = 10;

/// Which access oracle `run` attaches to each plan.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleMode {
    None,
    /// Even bucket occupancy; cheap at any size.
    #[default]
    Stats,
    /// Replays the generated data; slow for large inputs.
    Data,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct OutputPaths {
    #[serde(default)]
    pub predict: Option<PathBuf>,
    #[serde(default)]
    pub run: Option<PathBuf>,
    #[serde(default)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub query: ChainQuery,
    #[serde(default)]
    pub seed: u64,
    /// Defaults to the host's hardware concurrency.
    #[serde(default)]
    pub workers: Option<usize>,
    /// Machine profile JSON; relative paths resolve against the config.
    #[serde(default)]
    pub profile: Option<PathBuf>,
    #[serde(default)]
    pub sw_mode: SwMode,
    /// Multiplies every cardinality, keeping the ratios.
    #[serde(default = "unit_scale")]
    pub scale: f64,
    #[serde(default)]
    pub hash: HashKind,
    #[serde(default = "default_batch")]
    pub batch_size: usize,
    #[serde(default = "enabled")]
    pub prefetch: bool,
    #[serde(default = "default_reps")]
    pub repetitions: usize,
    #[serde(default = "default_page")]
    pub page_bytes: u64,
    #[serde(default)]
    pub oracle: OracleMode,
    #[serde(default)]
    pub outputs: OutputPaths,
}

fn unit_scale() -> f64 {
    1.0
}
fn default_batch() -> usize {
    DEFAULT_BATCH
}
fn enabled() -> bool {
    true
}
fn default_reps() -> usize {
    DEFAULT_REPETITIONS
}
fn default_page() -> u64 {
    DEFAULT_PAGE_BYTES
}

impl ExperimentConfig {
    pub fn new(query: ChainQuery) -> Self {
        ExperimentConfig {
            query,
            seed: 0,
            workers: None,
            profile: None,
            sw_mode: SwMode::default(),
            scale: 1.0,
            hash: HashKind::default(),
            batch_size: DEFAULT_BATCH,
            prefetch: true,
            repetitions: DEFAULT_REPETITIONS,
            page_bytes: DEFAULT_PAGE_BYTES,
            oracle: OracleMode::default(),
            outputs: OutputPaths::default(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config and makes its paths relative to the file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut cfg: ExperimentConfig = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        let dir = path.parent().unwrap_or(Path::new(""));
        let resolve = |p: &mut Option<PathBuf>| {
            if let Some(inner) = p.as_mut() {
                if inner.is_relative() {
                    *inner = dir.join(&*inner);
                }
            }
        };
        resolve(&mut cfg.profile);
        resolve(&mut cfg.outputs.predict);
        resolve(&mut cfg.outputs.run);
        resolve(&mut cfg.outputs.report);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.query.validate()?;
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return Err(Error::invalid(format!("scale factor {} must be positive", self.scale)));
        }
        if self.workers == Some(0) || self.batch_size == 0 || self.repetitions == 0 || self.page_bytes == 0 {
            return Err(Error::invalid("workers, batch size, repetitions and page size must be positive"));
        }
        if let Some(p) = &self.profile {
            if !p.exists() {
                return Err(Error::invalid(format!("profile {} does not exist", p.display())));
            }
        }
        Ok(())
    }

    /// The query after applying the scale factor.
    pub fn scaled_query(&self) -> Result<ChainQuery> {
        if self.scale == 1.0 {
            Ok(self.query.clone())
        } else {
            self.query.scaled(self.scale)
        }
    }

    pub fn exec_options(&self) -> ExecOptions {
        ExecOptions {
            workers: self.workers.unwrap_or_else(default_workers),
            batch_size: self.batch_size,
            prefetch: self.prefetch,
            hash: self.hash,
        }
    }

    /// The configured profile, or the reference Intel weights.
    pub fn machine_profile(&self) -> Result<MachineProfile> {
        match &self.profile {
            Some(p) => MachineProfile::load(p),
            None => Ok(MachineProfile::intel()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictRow {
    pub plan: String,
    pub sr: u64,
    pub rr: u64,
    pub sw: u64,
    pub rw: u64,
    pub cost: f64,
    pub n_s: u64,
    pub n_r: u64,
}

impl PredictRow {
    pub fn counts(&self) -> AccessCounts {
        AccessCounts { sr: self.sr, rr: self.rr, sw: self.sw, rw: self.rw }
    }

    pub fn disk_units(&self) -> DiskCostUnits {
        DiskCostUnits { n_s: self.n_s, n_r: self.n_r }
    }
}

fn sorted_plans(q: &ChainQuery) -> Result<Vec<NamedPlan>> {
    let mut plans = enumerate_plans(q)?;
    plans.sort_by(|a, b| a.name.cmp(&b.name));
    Ok(plans)
}

/// Predicted counts, weighted cost and disk units of every plan, by name.
pub fn predict_rows(q: &ChainQuery, profile: &MachineProfile, mode: SwMode, page_bytes: u64) -> Result<Vec<PredictRow>> {
    profile.validate()?;
    Ok(sorted_plans(q)?
        .into_iter()
        .map(|p| {
            let c = plan_counts(&p.plan, profile.cache_line_bytes, mode);
            let units = disk_cost_units(&p.plan, page_bytes);
            PredictRow {
                plan: p.name,
                sr: c.sr,
                rr: c.rr,
                sw: c.sw,
                rw: c.rw,
                cost: predicted_cost(&c, &profile.weights),
                n_s: units.n_s,
                n_r: units.n_r,
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRow {
    pub plan: String,
    pub mean_seconds: f64,
    pub min_seconds: f64,
    pub repetitions: usize,
    pub output_cardinality: u64,
    pub aggregate: u128,
    pub oracle_sr: u64,
    pub oracle_rr: u64,
    pub oracle_sw: u64,
    pub oracle_rw: u64,
    pub oracle_reads: u64,
    pub oracle_writes: u64,
}

/// Refuses to start when the biggest plan would not fit in memory.
pub fn check_memory(plans: &[NamedPlan], db_bytes: u64) -> Result<u64> {
    let need = plans.iter().map(|p| required_bytes(&p.plan, db_bytes)).max().unwrap_or(db_bytes);
    if let Some(avail) = available_memory() {
        if need > avail {
            return Err(Error::invalid(format!(
                "the largest plan needs about {:.2} GiB but only {:.2} GiB are available; lower the scale factor",
                need as f64 / f64::from(1u32 << 30),
                avail as f64 / f64::from(1u32 << 30)
            )));
        }
    }
    Ok(need)
}

pub struct RunSettings {
    pub exec: ExecOptions,
    pub repetitions: usize,
    pub cache_line_bytes: u64,
    pub sw_mode: SwMode,
    pub oracle: OracleMode,
    /// Restrict the run to these plan names.
    pub only: Option<Vec<String>>,
}

impl RunSettings {
    pub fn from_config(cfg: &ExperimentConfig, cache_line_bytes: u64) -> Self {
        RunSettings {
            exec: cfg.exec_options(),
            repetitions: cfg.repetitions,
            cache_line_bytes,
            sw_mode: cfg.sw_mode,
            oracle: cfg.oracle,
            only: None,
        }
    }
}

/// Executes every plan `repetitions` times over one generated database.
/// `progress` sees each row as it completes.
pub fn run_rows(
    q: &ChainQuery,
    db: &Database,
    settings: &RunSettings,
    mut progress: impl FnMut(&RunRow),
) -> Result<Vec<RunRow>> {
    if settings.repetitions == 0 {
        return Err(Error::invalid("at least one repetition is needed"));
    }
    let mut plans = sorted_plans(q)?;
    if let Some(only) = &settings.only {
        if let Some(missing) = only.iter().find(|n| !plans.iter().any(|p| &p.name == *n)) {
            return Err(Error::invalid(format!("no plan named {missing:?}")));
        }
        plans.retain(|p| only.contains(&p.name));
    }
    check_memory(&plans, db.bytes())?;
    let mut rows = Vec::with_capacity(plans.len());
    for p in &plans {
        let mut times = Vec::with_capacity(settings.repetitions);
        let mut last = None;
        for _ in 0..settings.repetitions {
            let r = execute_plan(&p.plan, db, &settings.exec)?;
            times.push(r.total_seconds);
            last = Some(r);
        }
        let r = last.expect("at least one repetition");
        let oracle = match settings.oracle {
            OracleMode::None => None,
            OracleMode::Stats => Some(simulate_counts_from_stats(&p.plan, settings.cache_line_bytes, settings.sw_mode)),
            OracleMode::Data => Some(simulate_counts(
                &p.plan,
                db,
                settings.cache_line_bytes,
                settings.sw_mode,
                settings.exec.hash,
            )?),
        };
        let total = oracle.as_ref().map(|o| o.total).unwrap_or_default();
        let row = RunRow {
            plan: p.name.clone(),
            mean_seconds: times.iter().sum::<f64>() / times.len() as f64,
            min_seconds: times.iter().copied().fold(f64::INFINITY, f64::min),
            repetitions: times.len(),
            output_cardinality: r.output_cardinality,
            aggregate: r.aggregate,
            oracle_sr: total.sr,
            oracle_rr: total.rr,
            oracle_sw: total.sw,
            oracle_rw: total.rw,
            oracle_reads: total.reads(),
            oracle_writes: total.writes(),
        };
        progress(&row);
        rows.push(row);
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub memory: AccuracyReport,
    /// Fitted disk baseline, when the predictions carry page units.
    pub disk: Option<(FittedDiskModel, AccuracyReport)>,
}

/// Pairs predictions with measurements by plan name and reports both the
/// memory model and a disk baseline fitted to the same measurements.
pub fn compare(predicted: &[PredictRow], observed: &[RunRow], opts: &ReportOptions) -> Result<Comparison> {
    let pred: BTreeMap<&str, &PredictRow> = predicted.iter().map(|r| (r.plan.as_str(), r)).collect();
    let obs: BTreeMap<&str, &RunRow> = observed.iter().map(|r| (r.plan.as_str(), r)).collect();
    let mut offenders: Vec<String> = pred.keys().filter(|k| !obs.contains_key(*k)).map(|k| format!("-{k}")).collect();
    offenders.extend(obs.keys().filter(|k| !pred.contains_key(*k)).map(|k| format!("+{k}")));
    if !offenders.is_empty() || pred.len() != predicted.len() || obs.len() != observed.len() {
        return Err(Error::invalid(format!(
            "plan names do not line up (- only predicted, + only measured, duplicates collapse): {}",
            offenders.join(" ")
        )));
    }
    let names: Vec<String> = pred.keys().map(|k| k.to_string()).collect();
    let costs: Vec<f64> = pred.values().map(|r| r.cost).collect();
    let secs: Vec<f64> = names.iter().map(|n| obs[n.as_str()].mean_seconds).collect();
    let memory = accuracy_report(&costs, &secs, &names, opts)?;
    let units: Vec<DiskCostUnits> = pred.values().map(|r| r.disk_units()).collect();
    let disk = if units.iter().any(|u| u.n_s > 0 || u.n_r > 0) {
        let fit = fit_nonnegative(&units, &secs)?;
        let disk_pred: Vec<f64> = units.iter().map(|u| fit.predict(u)).collect();
        let report = accuracy_report(&disk_pred, &secs, &names, &ReportOptions { alignment: crate::analysis::Alignment::Identity, ..opts.clone() })?;
        Some((fit, report))
    } else {
        None
    };
    Ok(Comparison { memory, disk })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineRow {
    pub joins: usize,
    pub left_cost: f64,
    pub right_cost: f64,
    pub cost_ratio: f64,
    pub left_seconds: Option<f64>,
    pub right_seconds: Option<f64>,
    pub time_ratio: Option<f64>,
}

/// The best left-deep and right-deep trees of an `n`-join ratio chain:
/// both build on the smallest relations first and stream `R_0` last.
pub fn deep_pair(q: &ChainQuery) -> Result<(NamedPlan, NamedPlan)> {
    let order: Vec<usize> = (0..=q.n()).rev().collect();
    let left = annotate(&left_deep_shape(&order)?, q)?;
    let right = annotate(&right_deep_shape(&order)?, q)?;
    Ok((
        NamedPlan { name: crate::plan_space::plan_name(&left), plan: left },
        NamedPlan { name: crate::plan_space::plan_name(&right), plan: right },
    ))
}

/// Optional measurement for the pipeline study.
pub struct PipelineMeasure {
    pub exec: ExecOptions,
    pub repetitions: usize,
    pub seed: u64,
}

/// Left-deep vs right-deep cost, and optionally time, for `1..=max_joins`
/// joins over a chain shrinking by `ratio` from `largest`.
pub fn pipeline_rows(
    largest: u64,
    ratio: u64,
    max_joins: usize,
    profile: &MachineProfile,
    mode: SwMode,
    measure: Option<&PipelineMeasure>,
) -> Result<Vec<PipelineRow>> {
    if max_joins == 0 {
        return Err(Error::invalid("need at least one join"));
    }
    (1..=max_joins)
        .map(|joins| {
            let q = ChainQuery::ratio_chain(largest, ratio, joins + 1)?;
            let (l, r) = deep_pair(&q)?;
            let cost = |p: &NamedPlan| predicted_cost(&plan_counts(&p.plan, profile.cache_line_bytes, mode), &profile.weights);
            let (left_cost, right_cost) = (cost(&l), cost(&r));
            let (mut left_seconds, mut right_seconds) = (None, None);
            if let Some(m) = measure {
                let db = Database::generate(&q, m.seed)?;
                check_memory(&[l.clone(), r.clone()], db.bytes())?;
                let time = |p: &NamedPlan| -> Result<f64> {
                    let mut total = 0.0;
                    for _ in 0..m.repetitions.max(1) {
                        total += execute_plan(&p.plan, &db, &m.exec)?.total_seconds;
                    }
                    Ok(total / m.repetitions.max(1) as f64)
                };
                left_seconds = Some(time(&l)?);
                right_seconds = Some(time(&r)?);
            }
            Ok(PipelineRow {
                joins,
                left_cost,
                right_cost,
                cost_ratio: right_cost / left_cost,
                left_seconds,
                right_seconds,
                time_ratio: left_seconds.zip(right_seconds).map(|(l, r)| r / l),
            })
        })
        .collect()
}

pub fn write_csv<T: Serialize, W: Write>(rows: &[T], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<T: DeserializeOwned, R: Read>(input: R) -> Result<Vec<T>> {
    csv::Reader::from_reader(input).deserialize().map(|r| r.map_err(Error::from)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{RelationStats, WeightVector};

    #[test]
    fn predict_rows_are_sorted_and_complete() {
        let q = ChainQuery::ratio_chain(2_048_000_000, 4, 4).unwrap();
        let rows = predict_rows(&q, &MachineProfile::intel(), SwMode::TableConsistent, 8192).unwrap();
        assert_eq!(rows.len(), 40);
        assert!(rows.windows(2).all(|w| w[0].plan < w[1].plan));
        let mut by_cost = rows.clone();
        by_cost.sort_by(|a, b| a.cost.total_cmp(&b.cost));
        let best: Vec<_> = by_cost[..2].iter().map(|r| r.plan.as_str()).collect();
        assert!(best.contains(&"L3210") && best.contains(&"L2310"), "{best:?}");
        let two = ChainQuery::ratio_chain(1000, 1, 2).unwrap();
        assert_eq!(predict_rows(&two, &MachineProfile::intel(), SwMode::TableConsistent, 8192).unwrap().len(), 2);
    }

    #[test]
    fn csv_round_trip() {
        let q = ChainQuery::ratio_chain(4096, 4, 3).unwrap();
        let rows = predict_rows(&q, &MachineProfile::amd(), SwMode::EverySlot, 4096).unwrap();
        let mut buf = Vec::new();
        write_csv(&rows, &mut buf).unwrap();
        assert!(String::from_utf8_lossy(&buf).starts_with("plan,sr,rr,sw,rw,cost,n_s,n_r\n"));
        let back: Vec<PredictRow> = read_csv(buf.as_slice()).unwrap();
        assert_eq!(back, rows);
    }

    #[test]
    fn run_rows_share_one_aggregate() {
        let q = ChainQuery::ratio_chain(4096, 4, 4).unwrap();
        let db = Database::generate(&q, 9).unwrap();
        let mut cfg = ExperimentConfig::new(q.clone());
        cfg.workers = Some(2);
        cfg.repetitions = 2;
        let mut seen = 0;
        let rows = run_rows(&q, &db, &RunSettings::from_config(&cfg, 64), |_| seen += 1).unwrap();
        assert_eq!((rows.len(), seen), (40, 40));
        assert!(rows.iter().all(|r| r.aggregate == rows[0].aggregate && r.repetitions == 2));
        let mut buf = Vec::new();
        write_csv(&rows, &mut buf).unwrap();
        let back: Vec<RunRow> = read_csv(buf.as_slice()).unwrap();
        assert_eq!(back[3].aggregate, rows[3].aggregate);
    }

    #[test]
    fn compare_predictions_with_themselves() {
        let q = ChainQuery::ratio_chain(1 << 20, 4, 4).unwrap();
        let pred = predict_rows(&q, &MachineProfile::intel(), SwMode::TableConsistent, 8192).unwrap();
        let obs: Vec<RunRow> = pred
            .iter()
            .map(|p| RunRow {
                plan: p.plan.clone(),
                mean_seconds: p.cost,
                min_seconds: p.cost,
                repetitions: 1,
                output_cardinality: 0,
                aggregate: 0,
                oracle_sr: 0,
                oracle_rr: 0,
                oracle_sw: 0,
                oracle_rw: 0,
                oracle_reads: 0,
                oracle_writes: 0,
            })
            .collect();
        let c = compare(&pred, &obs, &ReportOptions::default()).unwrap();
        assert!((c.memory.pearson.unwrap() - 1.0).abs() < 1e-12);
        assert!((c.memory.spearman.unwrap() - 1.0).abs() < 1e-12);
        let err = compare(&pred, &obs[1..], &ReportOptions::default()).unwrap_err();
        assert!(err.to_string().contains(&pred[0].plan));
    }

    #[test]
    fn pipeline_ratio_grows() {
        let rows = pipeline_rows(1 << 30, 4, 9, &MachineProfile::intel(), SwMode::TableConsistent, None).unwrap();
        assert!((rows[0].cost_ratio - 1.0).abs() < 1e-12);
        assert!(rows.windows(2).all(|w| w[1].cost_ratio > w[0].cost_ratio));
        // Independent sums: both trees scan everything and build on R_1..R_n;
        // left-deep probes each R_0..R_{n-1} once, right-deep streams R_0
        // through all n tables.
        let w = WeightVector::INTEL;
        for row in &rows {
            let cards: Vec<f64> = (0..=row.joins).map(|i| ((1u64 << 30) >> (2 * i)) as f64).collect();
            let scans: f64 = cards.iter().map(|c| c / 4.0).sum();
            let built: f64 = cards[1..].iter().sum();
            let left = scans + w.rr * cards[..row.joins].iter().sum::<f64>() + w.rw * built;
            let right = scans + w.rr * row.joins as f64 * cards[0] + w.rw * built;
            assert!((row.left_cost - left).abs() < 1e-6 * left);
            assert!((row.right_cost - right).abs() < 1e-6 * right);
        }
    }

    #[test]
    fn config_json_defaults_and_validation() {
        let cfg = ExperimentConfig::from_json(
            r#"{"query": {"relations": [{"cardinality": 100, "tuple_width": 16}, {"cardinality": 25, "tuple_width": 16}],
                          "joins": [{}]}}"#,
        )
        .unwrap();
        assert_eq!(cfg.repetitions, 10);
        assert_eq!(cfg.scale, 1.0);
        assert_eq!(cfg.query.joins[0].match_probability, 1.0);
        assert_eq!(cfg.query.relations[1], RelationStats::narrow(25));
        let mut bad = cfg.clone();
        bad.scale = 0.0;
        assert!(bad.validate().is_err());
        bad = cfg.clone();
        bad.profile = Some("/nonexistent/profile.json".into());
        assert!(bad.validate().is_err());
        let mut scaled = cfg;
        scaled.scale = 0.5;
        assert_eq!(scaled.scaled_query().unwrap().relations[0].cardinality, 50);
    }
}
