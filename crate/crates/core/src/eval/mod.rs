//! Batch evaluation: reference policies, per-cell statistics, and report tables.

mod policies;
mod remote;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;
use std::time::Duration;

use rayon::prelude::*;

use crate::env::{make_env, rollout, Policy};
use crate::error::{Error, Result};
use crate::hash::hash64;
use crate::render::ViewKind;
use crate::tasks::{variant_applicable, TaskId, VariantKind};

pub use policies::{noop_policy, random_policy, scripted_mtr_expert, MtrExpert, NoopPolicy, RandomPolicy};
pub use remote::RemotePolicy;

/// How long a remote policy may take to answer one request.
pub const REMOTE_TIMEOUT: Duration = Duration::from_secs(30);

/// Seed of rollout `rollout_index` under `eval_seed` for one cell.
pub fn episode_seed(eval_seed: u64, rollout_index: u64, task: TaskId, variant: VariantKind) -> u64 {
    hash64(&[eval_seed, rollout_index, u64::from(task.index()), u64::from(variant.index())])
}

/// A policy description that can be instantiated once per rollout.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PolicySpec {
    Noop,
    /// Uniform random actions; each rollout mixes this seed with its episode seed.
    Random { seed: u64 },
    MtrExpert,
    Remote { addr: String },
}

impl PolicySpec {
    pub fn name(&self) -> String {
        match self {
            PolicySpec::Noop => "noop".into(),
            PolicySpec::Random { seed: 0 } => "random".into(),
            PolicySpec::Random { seed } => format!("random:{seed}"),
            PolicySpec::MtrExpert => "mtr-expert".into(),
            PolicySpec::Remote { addr } => format!("remote:{addr}"),
        }
    }

    pub fn instantiate(&self, variant: VariantKind, episode_seed: u64) -> Result<Box<dyn Policy>> {
        Ok(match self {
            PolicySpec::Noop => Box::new(noop_policy()),
            PolicySpec::Random { seed } => Box::new(random_policy(hash64(&[*seed, episode_seed]))),
            PolicySpec::MtrExpert => Box::new(scripted_mtr_expert()),
            PolicySpec::Remote { addr } => {
                let mut p = RemotePolicy::connect(addr.as_str(), REMOTE_TIMEOUT)?;
                p.set_episode(variant, episode_seed);
                Box::new(p)
            }
        })
    }

    /// Whether rollouts may run concurrently.
    pub fn parallel(&self) -> bool {
        !matches!(self, PolicySpec::Remote { .. })
    }
}

impl FromStr for PolicySpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParameter(format!("unknown policy '{s}'"));
        match s {
            "noop" => Ok(PolicySpec::Noop),
            "random" => Ok(PolicySpec::Random { seed: 0 }),
            "mtr-expert" => Ok(PolicySpec::MtrExpert),
            _ => match s.split_once(':') {
                Some(("random", seed)) => Ok(PolicySpec::Random {
                    seed: seed.parse().map_err(|_| bad())?,
                }),
                Some(("remote", addr)) if !addr.is_empty() => Ok(PolicySpec::Remote { addr: addr.into() }),
                _ => Err(bad()),
            },
        }
    }
}

/// Mean ± population standard deviation of per-run mean scores for one cell.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreStats {
    pub task: TaskId,
    pub variant: VariantKind,
    pub policy: String,
    pub per_run_means: Vec<f64>,
    pub mean: f64,
    pub std: f64,
    pub n_rollouts_per_run: usize,
}

impl ScoreStats {
    pub fn from_runs(
        task: TaskId,
        variant: VariantKind,
        policy: impl Into<String>,
        per_run_means: Vec<f64>,
        n_rollouts_per_run: usize,
    ) -> Self {
        let (mean, std) = mean_and_population_std(&per_run_means);
        Self {
            task,
            variant,
            policy: policy.into(),
            per_run_means,
            mean,
            std,
            n_rollouts_per_run,
        }
    }

    /// `"0.64±0.29"`.
    pub fn cell(&self) -> String {
        format!("{:.2}±{:.2}", self.mean, self.std)
    }
}

/// Summed in order, divided by the count; standard deviation divides by `n`, not `n - 1`.
pub fn mean_and_population_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Runs `n_rollouts` episodes per eval seed and aggregates their scores.
pub fn evaluate(
    policy: &PolicySpec,
    task: TaskId,
    variant: VariantKind,
    eval_seeds: &[u64],
    n_rollouts: usize,
    view: ViewKind,
) -> Result<ScoreStats> {
    if !variant_applicable(task, variant) {
        return Err(Error::UnsupportedVariant { task, variant });
    }
    if n_rollouts == 0 || eval_seeds.is_empty() {
        return Err(Error::InvalidParameter("need at least one eval seed and one rollout".into()));
    }
    let run_one = |eval_seed: u64, i: usize| -> Result<f64> {
        let seed = episode_seed(eval_seed, i as u64, task, variant);
        let mut env = make_env(task, variant, seed, view)?;
        let mut p = policy.instantiate(variant, seed)?;
        let traj = rollout(&mut env, p.as_mut())?;
        Ok(traj.score.map_or(0.0, |s| s.value()))
    };
    let mut per_run_means = Vec::with_capacity(eval_seeds.len());
    for &eval_seed in eval_seeds {
        // Collected in rollout-index order regardless of scheduling.
        let scores: Vec<f64> = if policy.parallel() {
            (0..n_rollouts)
                .into_par_iter()
                .map(|i| run_one(eval_seed, i))
                .collect::<Result<_>>()?
        } else {
            (0..n_rollouts).map(|i| run_one(eval_seed, i)).collect::<Result<_>>()?
        };
        per_run_means.push(scores.iter().sum::<f64>() / n_rollouts as f64);
    }
    Ok(ScoreStats::from_runs(task, variant, policy.name(), per_run_means, n_rollouts))
}

/// The unweighted mean over cells, with the cells kept for reporting.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct OverallPerformance {
    pub value: f64,
    pub breakdown: BTreeMap<(TaskId, VariantKind), ScoreStats>,
}

pub fn overall_performance(stats: &[ScoreStats]) -> Result<OverallPerformance> {
    if stats.is_empty() {
        return Err(Error::InvalidParameter("no cells to aggregate".into()));
    }
    let mut breakdown = BTreeMap::new();
    for s in stats {
        if breakdown.insert((s.task, s.variant), s.clone()).is_some() {
            return Err(Error::DuplicateCell {
                task: s.task,
                variant: s.variant,
            });
        }
    }
    let value = breakdown.values().map(|s| s.mean).sum::<f64>() / breakdown.len() as f64;
    Ok(OverallPerformance { value, breakdown })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableFormat {
    Csv,
    Markdown,
    Ansi,
}

impl FromStr for TableFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(TableFormat::Csv),
            "markdown" | "md" => Ok(TableFormat::Markdown),
            "ansi" => Ok(TableFormat::Ansi),
            _ => Err(Error::InvalidParameter(format!("unknown table format '{s}'"))),
        }
    }
}

pub const CSV_HEADER: &str = "task,variant,policy,mean,std,n_runs,n_rollouts";

pub fn emit_table(op: &OverallPerformance, format: TableFormat) -> String {
    match format {
        TableFormat::Csv => emit_csv(op),
        TableFormat::Markdown => emit_grid(op, false),
        TableFormat::Ansi => emit_grid(op, true),
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn emit_csv(op: &OverallPerformance) -> String {
    let mut out = format!("{CSV_HEADER}\n");
    for s in op.breakdown.values() {
        writeln!(
            out,
            "{},{},{},{:.4},{:.4},{},{}",
            s.task.name(),
            s.variant.name(),
            csv_field(&s.policy),
            s.mean,
            s.std,
            s.per_run_means.len(),
            s.n_rollouts_per_run
        )
        .expect("string write");
    }
    out
}

/// Rows are (policy, task), columns are the variants present.
fn emit_grid(op: &OverallPerformance, ansi: bool) -> String {
    let variants: Vec<VariantKind> = VariantKind::ALL
        .into_iter()
        .filter(|v| op.breakdown.keys().any(|(_, kv)| kv == v))
        .collect();
    let mut rows: BTreeMap<(String, TaskId), BTreeMap<VariantKind, &ScoreStats>> = BTreeMap::new();
    for s in op.breakdown.values() {
        rows.entry((s.policy.clone(), s.task)).or_default().insert(s.variant, s);
    }
    let mut header = vec!["policy".to_string(), "task".to_string()];
    header.extend(variants.iter().map(|v| v.name().to_string()));

    let mut out = String::new();
    if !ansi {
        writeln!(out, "| {} |", header.join(" | ")).expect("string write");
        writeln!(out, "|{}", "---|".repeat(header.len())).expect("string write");
        for ((policy, task), cells) in &rows {
            let mut line = format!("| {policy} | {} |", task.name());
            for v in &variants {
                let c = cells.get(v).map_or("—".to_string(), |s| s.cell());
                write!(line, " {c} |").expect("string write");
            }
            writeln!(out, "{line}").expect("string write");
        }
        if !rows.is_empty() {
            writeln!(out, "\nOverall: {:.2}", op.value).expect("string write");
        }
        return out;
    }

    let policy_w = rows.keys().map(|(p, _)| p.chars().count()).max().unwrap_or(0).max(6);
    let task_w = 13;
    let cell_w = 11;
    write!(out, "{:<policy_w$}  {:<task_w$}", header[0], header[1]).expect("string write");
    for h in &header[2..] {
        write!(out, " {h:^cell_w$}").expect("string write");
    }
    out.push('\n');
    for ((policy, task), cells) in &rows {
        write!(out, "{policy:<policy_w$}  {:<task_w$}", task.name()).expect("string write");
        for v in &variants {
            match cells.get(v) {
                Some(s) => {
                    // Darker background for higher scores.
                    let level = (s.mean.clamp(0.0, 1.0) * 23.0).round() as u8;
                    let bg = 255 - level;
                    let fg = if level > 11 { 255 } else { 232 };
                    write!(out, " \x1b[48;5;{bg}m\x1b[38;5;{fg}m{:^cell_w$}\x1b[0m", s.cell()).expect("string write");
                }
                None => write!(out, " {:^cell_w$}", "—").expect("string write"),
            }
        }
        out.push('\n');
    }
    if !rows.is_empty() {
        writeln!(out, "overall {:.2}", op.value).expect("string write");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cell(task: TaskId, variant: VariantKind, runs: Vec<f64>) -> ScoreStats {
        ScoreStats::from_runs(task, variant, "p", runs, 10)
    }

    #[test]
    fn policy_spec_parsing() {
        assert_eq!("noop".parse::<PolicySpec>().unwrap(), PolicySpec::Noop);
        assert_eq!("random:7".parse::<PolicySpec>().unwrap(), PolicySpec::Random { seed: 7 });
        assert_eq!(
            "remote:127.0.0.1:9".parse::<PolicySpec>().unwrap(),
            PolicySpec::Remote {
                addr: "127.0.0.1:9".into()
            }
        );
        assert!("remote:".parse::<PolicySpec>().is_err());
        assert!("expert".parse::<PolicySpec>().is_err());
        for s in ["noop", "random", "random:3", "mtr-expert", "remote:h:1"] {
            assert_eq!(s.parse::<PolicySpec>().unwrap().name(), s);
        }
    }

    #[test]
    fn population_std() {
        let (m, s) = mean_and_population_std(&[1.0, 0.0]);
        assert_eq!((m, s), (0.5, 0.5));
        assert_eq!(mean_and_population_std(&[0.3; 5]).1, 0.0);
    }

    #[test]
    fn overall_examples() {
        let one = overall_performance(&[cell(TaskId::MakeLine, VariantKind::Demo, vec![0.6])]).unwrap();
        assert_eq!(one.value, 0.6);
        let a = cell(TaskId::MakeLine, VariantKind::Demo, vec![1.0]);
        let b = cell(TaskId::FindDupe, VariantKind::Colour, vec![0.0]);
        let ab = overall_performance(&[a.clone(), b.clone()]).unwrap();
        assert_eq!(ab.value, 0.5);
        assert_eq!(overall_performance(&[b.clone(), a.clone()]).unwrap(), ab);
        assert!(matches!(
            overall_performance(&[a.clone(), a]),
            Err(Error::DuplicateCell { .. })
        ));
        assert!(overall_performance(&[]).is_err());
    }

    #[test]
    fn table_formats() {
        let empty = OverallPerformance::default();
        assert_eq!(emit_table(&empty, TableFormat::Csv), format!("{CSV_HEADER}\n"));
        assert_eq!(emit_table(&empty, TableFormat::Markdown).lines().count(), 2);
        let mut s = cell(TaskId::MakeLine, VariantKind::Demo, vec![0.64]);
        s.std = 0.29;
        assert_eq!(s.cell(), "0.64±0.29");
        let op = overall_performance(&[s, cell(TaskId::MakeLine, VariantKind::Layout, vec![0.1, 0.3])]).unwrap();
        let csv = emit_table(&op, TableFormat::Csv);
        assert_eq!(csv, emit_table(&op, TableFormat::Csv));
        assert_eq!(
            csv,
            format!("{CSV_HEADER}\nMakeLine,Demo,p,0.6400,0.2900,1,10\nMakeLine,Layout,p,0.2000,0.1000,2,10\n")
        );
        let md = emit_table(&op, TableFormat::Markdown);
        assert!(md.contains("| p | MakeLine | 0.64±0.29 | 0.20±0.10 |"), "{md}");
        assert!(emit_table(&op, TableFormat::Ansi).contains("\x1b[48;5;"));
        assert!("html".parse::<TableFormat>().is_err());
    }

    #[test]
    fn noop_cell_is_zero() {
        let s = evaluate(&PolicySpec::Noop, TaskId::MatchRegions, VariantKind::Layout, &[0, 1], 4, ViewKind::Egocentric)
            .unwrap();
        assert_eq!((s.mean, s.std), (0.0, 0.0));
        assert_eq!(s.per_run_means.len(), 2);
    }

    #[test]
    fn inapplicable_cell_rejected() {
        assert!(matches!(
            evaluate(&PolicySpec::Noop, TaskId::MoveToRegion, VariantKind::Shape, &[0], 1, ViewKind::Egocentric),
            Err(Error::UnsupportedVariant { .. })
        ));
    }
}
