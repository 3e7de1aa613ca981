//! Policy sweeps over DAGs, hints and repetitions.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use taosched_core::sim::{SimConfig, Simulator};
use taosched_core::{MachineModel, Placement, PolicyConfig, PttSet, RunMetrics, TaoDag};

use crate::error::{BenchError, Result};
use crate::formats::tables::{write_table, AblationRow, PlotRow, RunRow, SummaryRow, NA};
use crate::native::{run_native, NativeConfig};

#[derive(Clone, Debug)]
pub enum Backend {
    /// The seed field is replaced per repetition.
    Sim(SimConfig),
    /// The seed field is replaced per repetition.
    Native(NativeConfig),
}

impl Backend {
    pub fn name(&self) -> &'static str {
        match self {
            Backend::Sim(_) => "sim",
            Backend::Native(_) => "native",
        }
    }
}

#[derive(Clone, Debug)]
pub struct DagSpec {
    pub name: String,
    pub dag: TaoDag,
}

impl DagSpec {
    pub fn dop(&self) -> f64 {
        self.dag.degree_of_parallelism().unwrap_or(0.0)
    }
}

#[derive(Clone, Debug)]
pub struct Scenario {
    pub dags: Vec<DagSpec>,
    pub model: MachineModel,
    pub policies: Vec<PolicyConfig>,
    pub hints: Vec<usize>,
    pub repetitions: usize,
    /// Repetition `r` runs with seed `seed + r`.
    pub seed: u64,
    pub backend: Backend,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        if self.repetitions == 0 {
            return Err(BenchError::format("repetitions must be at least 1"));
        }
        if self.dags.is_empty() || self.policies.is_empty() || self.hints.is_empty() {
            return Err(BenchError::format("a scenario needs at least one DAG, policy and hint"));
        }
        self.model.validate()?;
        for p in &self.policies {
            p.validate(self.model.n_cores())?;
        }
        for &h in &self.hints {
            taosched_core::ptt::width_index(h)?;
        }
        Ok(())
    }
}

/// One run of `dag` at its current hints.
pub fn run_once(
    dag: &TaoDag,
    model: &MachineModel,
    policy: &PolicyConfig,
    backend: &Backend,
    seed: u64,
) -> Result<(RunMetrics, PttSet)> {
    match backend {
        Backend::Sim(c) => {
            let cfg = SimConfig { seed, ..c.clone() };
            let out = Simulator::new(dag, model, policy.clone(), cfg)?.run()?;
            Ok((out.metrics, out.ptt))
        }
        Backend::Native(c) => {
            let cfg = NativeConfig { seed, ..c.clone() };
            let out = run_native(dag, model, policy.clone(), &cfg)?;
            Ok((out.metrics, out.ptt))
        }
    }
}

fn run_row(spec: &DagSpec, dag: &TaoDag, s: &Scenario, policy: &PolicyConfig, hint: usize, rep: usize) -> Result<RunRow> {
    let seed = s.seed.wrapping_add(rep as u64);
    let (m, _) = run_once(dag, &s.model, policy, &s.backend, seed).map_err(|e| BenchError::Row {
        row: format!("dag {} policy {} hint {hint} rep {rep}", spec.name, policy.label()),
        source: Box::new(e),
    })?;
    Ok(RunRow {
        dag: spec.name.clone(),
        dop: spec.dop(),
        policy: policy.label(),
        hint,
        rep,
        seed,
        nodes: m.node_count,
        makespan_us: m.makespan_us(),
        throughput: m.throughput(),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioResult {
    pub runs: Vec<RunRow>,
    pub summary: Vec<SummaryRow>,
}

/// Runs every (DAG, policy, hint, repetition); scenarios never overlap.
pub fn run_scenario(s: &Scenario) -> Result<ScenarioResult> {
    s.validate()?;
    let mut runs = Vec::new();
    for spec in &s.dags {
        for &hint in &s.hints {
            let dag = spec.dag.clone().with_uniform_hint(hint)?;
            for policy in &s.policies {
                for rep in 0..s.repetitions {
                    runs.push(run_row(spec, &dag, s, policy, hint, rep)?);
                }
            }
        }
    }
    let summary = summarize(&runs);
    Ok(ScenarioResult { runs, summary })
}

/// Middle element, or the mean of the two middle ones.
pub fn median(values: &mut [f64]) -> f64 {
    assert!(!values.is_empty(), "median of nothing");
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    }
}

/// Median per (DAG, policy, hint), sorted by DAG, hint, then policy.
pub fn summarize(runs: &[RunRow]) -> Vec<SummaryRow> {
    let mut groups: BTreeMap<(String, usize, String), (f64, Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for r in runs {
        let g = groups.entry((r.dag.clone(), r.hint, r.policy.clone())).or_insert((r.dop, Vec::new(), Vec::new()));
        g.1.push(r.throughput);
        g.2.push(r.makespan_us);
    }
    groups
        .into_iter()
        .map(|((dag, hint, policy), (dop, mut thr, mut mk))| SummaryRow {
            dag,
            dop,
            policy,
            hint,
            reps: thr.len(),
            makespan_us: median(&mut mk),
            throughput: median(&mut thr),
        })
        .collect()
}

fn median_throughput(spec: &DagSpec, s: &Scenario, policy: &PolicyConfig, hint: usize) -> Result<f64> {
    let dag = spec.dag.clone().with_uniform_hint(hint)?;
    let mut thr = (0..s.repetitions)
        .map(|rep| run_row(spec, &dag, s, policy, hint, rep).map(|r| r.throughput))
        .collect::<Result<Vec<_>>>()?;
    Ok(median(&mut thr))
}

/// Throughput with and without molding for the scenario's WEIGHT and
/// CRIT_PTT policies. Each DAG is run at the hint where homogeneous
/// scheduling does best, unless `hint` forces one.
pub fn ablate_molding(s: &Scenario, hint: Option<usize>) -> Result<Vec<AblationRow>> {
    s.validate()?;
    let mut placements: Vec<&PolicyConfig> = Vec::new();
    for p in &s.policies {
        if matches!(p.placement, Placement::Weight | Placement::CritPtt)
            && !placements.iter().any(|q| q.placement == p.placement)
        {
            placements.push(p);
        }
    }
    if placements.is_empty() {
        return Err(BenchError::format("molding ablation needs the weight or crit-ptt policy"));
    }
    let homogeneous = PolicyConfig::new(Placement::Homogeneous, false, &s.model);
    let mut rows = Vec::new();
    for spec in &s.dags {
        let hint = match hint {
            Some(h) => h,
            None => best_base_hint(spec, s, &homogeneous)?,
        };
        for base in &placements {
            let without = PolicyConfig { molding: false, ..(*base).clone() };
            let with = PolicyConfig { molding: true, ..(*base).clone() };
            let a = median_throughput(spec, s, &without, hint)?;
            let b = median_throughput(spec, s, &with, hint)?;
            rows.push(AblationRow {
                dag: spec.name.clone(),
                dop: spec.dop(),
                hint,
                placement: base.placement.name().to_string(),
                throughput_without: a,
                throughput_with: b,
                delta_pct: (b / a - 1.0) * 100.0,
            });
        }
    }
    Ok(rows)
}

fn best_base_hint(spec: &DagSpec, s: &Scenario, homogeneous: &PolicyConfig) -> Result<usize> {
    let mut best = (s.hints[0], f64::MIN);
    for &h in &s.hints {
        let t = median_throughput(spec, s, homogeneous, h)?;
        if t > best.1 {
            best = (h, t);
        }
    }
    Ok(best.0)
}

/// Grouped-bar data for one DAG: one row per (policy, hint), in the given
/// order, with [`NA`] where the summary has no entry.
pub fn plot_rows(summary: &[SummaryRow], dag: &str, dop: f64, policies: &[String], hints: &[usize]) -> Vec<PlotRow> {
    let mut out = Vec::with_capacity(policies.len() * hints.len());
    for p in policies {
        for &h in hints {
            let thr = summary
                .iter()
                .find(|r| r.dag == dag && r.policy == *p && r.hint == h)
                .map_or_else(|| NA.to_string(), |r| format!("{:.3}", r.throughput));
            out.push(PlotRow { dag: dag.to_string(), dop, policy: p.clone(), hint: h, throughput: thr });
        }
    }
    out
}

/// Writes `plot_<dag>.csv` for every DAG of the scenario into `dir`.
pub fn emit_plots(s: &Scenario, summary: &[SummaryRow], dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let policies: Vec<String> = s.policies.iter().map(PolicyConfig::label).collect();
    let mut files = Vec::new();
    for spec in &s.dags {
        let rows = plot_rows(summary, &spec.name, spec.dop(), &policies, &s.hints);
        let path = dir.join(format!("plot_{}.csv", spec.name));
        write_table(&rows, BufWriter::new(File::create(&path)?))?;
        files.push(path);
    }
    Ok(files)
}
