use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;
use taosched::config::{load_model, model_to_toml, ConfigFile, DEFAULT_POLICIES};
use taosched::formats::tables::{preload_ptt, ptt_rows, trace_rows, PttRow};
use taosched::formats::{read_dag_json, read_table, write_dag_json, write_dot, write_table};
use taosched::native::NativeConfig;
use taosched::scenario::{ablate_molding, emit_plots, run_once, run_scenario, Backend, DagSpec, Scenario};
use taosched_core::graph::{generate_random_dag, GeneratorParams};
use taosched_core::sim::Simulator;
use taosched_core::{MachineModel, PolicyConfig};

#[derive(Parser)]
#[command(name = "taosched", version, about = "TAO-DAG scheduling experiments on a simulated or native big.LITTLE machine")]
struct Cli {
    /// TOML file with [model], [policy], [sim] and [kernels] sections.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// TOML file holding only a machine model; overrides [model].
    #[arg(long, global = true)]
    model: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a random layered DAG.
    Generate {
        #[arg(long, default_value_t = 3.03)]
        dop: f64,
        #[arg(long, default_value_t = 3000)]
        nodes: usize,
        #[arg(long, default_value_t = 1)]
        hint: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run policies over DAGs and hints; writes runs.csv, summary.csv and plot data.
    Run {
        #[command(flatten)]
        dags: DagArgs,
        #[command(flatten)]
        exec: ExecArgs,
        #[arg(long = "out-dir", default_value = "results")]
        out_dir: PathBuf,
    },
    /// Throughput with and without molding for weight and crit-ptt.
    Ablate {
        #[command(flatten)]
        dags: DagArgs,
        #[command(flatten)]
        exec: ExecArgs,
        /// Force a hint instead of the best homogeneous one per DAG.
        #[arg(long = "at-hint")]
        at_hint: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run one policy once and write its PTT and trace.
    DumpPtt {
        #[command(flatten)]
        dags: DagArgs,
        #[command(flatten)]
        exec: ExecArgs,
        /// Start from an earlier dump instead of a cold table (simulator only).
        #[arg(long)]
        preload: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Graphviz rendering of a DAG file.
    ExportDot {
        #[arg(long)]
        dag: PathBuf,
        /// Keep only the first N nodes.
        #[arg(long)]
        limit: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the machine model in effect as TOML.
    ShowModel,
}

#[derive(Args)]
struct DagArgs {
    /// DAG files written by `generate`.
    #[arg(long = "dag")]
    files: Vec<PathBuf>,
    /// Generate DAGs with these degrees of parallelism when no file is given.
    #[arg(long, value_delimiter = ',', default_values_t = vec![1.62, 3.03, 8.06])]
    dop: Vec<f64>,
    #[arg(long, default_value_t = 3000)]
    nodes: usize,
    #[arg(long = "dag-seed", default_value_t = 1)]
    dag_seed: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum BackendKind {
    Sim,
    Native,
}

#[derive(Clone, Copy, ValueEnum)]
enum Switch {
    On,
    Off,
}

#[derive(Args)]
struct ExecArgs {
    #[arg(long, value_enum, default_value = "sim")]
    backend: BackendKind,
    /// Policy labels such as `crit-ptt+mold`.
    #[arg(long = "policy", value_delimiter = ',', default_values_t = DEFAULT_POLICIES.map(String::from))]
    policies: Vec<String>,
    /// Force molding on or off for every policy.
    #[arg(long, value_enum)]
    molding: Option<Switch>,
    #[arg(long = "hint", value_delimiter = ',', default_values_t = vec![1, 4])]
    hints: Vec<usize>,
    #[arg(long, default_value_t = 5)]
    reps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Native worker threads; defaults to min(host cores, model cores).
    #[arg(long)]
    workers: Option<usize>,
}

struct Context_ {
    cfg: ConfigFile,
    model: MachineModel,
}

impl Context_ {
    fn load(cli: &Cli) -> Result<Self> {
        let cfg = match &cli.config {
            Some(p) => ConfigFile::load(p).with_context(|| format!("reading {}", p.display()))?,
            None => ConfigFile::default(),
        };
        let model = match &cli.model {
            Some(p) => load_model(p).with_context(|| format!("reading {}", p.display()))?,
            None => cfg.model(),
        };
        Ok(Self { cfg, model })
    }

    fn dags(&self, a: &DagArgs) -> Result<Vec<DagSpec>> {
        if !a.files.is_empty() {
            return a
                .files
                .iter()
                .map(|p| {
                    let dag = read_dag_json(BufReader::new(File::open(p)?))
                        .with_context(|| format!("reading {}", p.display()))?;
                    let name = p.file_stem().map_or("dag".into(), |s| s.to_string_lossy().into_owned());
                    Ok(DagSpec { name, dag })
                })
                .collect();
        }
        a.dop
            .iter()
            .map(|&d| {
                let params = GeneratorParams { n_nodes: a.nodes, ..GeneratorParams::benchmark(d) };
                let g = generate_random_dag(&params, a.dag_seed)?;
                info!("generated DAG with target DoP {d}: actual {:.3}", g.degree_of_parallelism);
                Ok(DagSpec { name: format!("dop{d}"), dag: g.dag })
            })
            .collect()
    }

    fn policies(&self, e: &ExecArgs) -> Result<Vec<PolicyConfig>> {
        e.policies
            .iter()
            .map(|label| {
                let mut p = self.cfg.policy(label, &self.model)?;
                match e.molding {
                    Some(Switch::On) => p.molding = true,
                    Some(Switch::Off) => p.molding = false,
                    None => {}
                }
                Ok(p)
            })
            .collect()
    }

    fn backend(&self, e: &ExecArgs) -> Backend {
        match e.backend {
            BackendKind::Sim => Backend::Sim(self.cfg.sim.sim_config(e.seed)),
            BackendKind::Native => Backend::Native(NativeConfig {
                seed: e.seed,
                workers: e.workers,
                sizes: self.cfg.kernels.unwrap_or_default(),
                ..NativeConfig::default()
            }),
        }
    }

    fn scenario(&self, d: &DagArgs, e: &ExecArgs) -> Result<Scenario> {
        Ok(Scenario {
            dags: self.dags(d)?,
            model: self.model.clone(),
            policies: self.policies(e)?,
            hints: e.hints.clone(),
            repetitions: e.reps,
            seed: e.seed,
            backend: self.backend(e),
        })
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let ctx = Context_::load(&cli)?;
    match &cli.cmd {
        Cmd::Generate { dop, nodes, hint, seed, out } => {
            let params = GeneratorParams { n_nodes: *nodes, resource_hint: *hint, ..GeneratorParams::benchmark(*dop) };
            let g = generate_random_dag(&params, *seed)?;
            write_dag_json(&g.dag, create(out)?)?;
            println!("wrote {} ({} nodes, {} edges, DoP {:.3})", out.display(), g.dag.node_count(), g.dag.edge_count(), g.degree_of_parallelism);
        }
        Cmd::Run { dags, exec, out_dir } => {
            let s = ctx.scenario(dags, exec)?;
            let r = run_scenario(&s)?;
            write_table(&r.runs, create(&out_dir.join("runs.csv"))?)?;
            write_table(&r.summary, create(&out_dir.join("summary.csv"))?)?;
            let plots = emit_plots(&s, &r.summary, out_dir)?;
            for row in &r.summary {
                println!("{:>10} dop {:5.2} hint {} {:>14}: {:8.1} TAOs/s", row.dag, row.dop, row.hint, row.policy, row.throughput);
            }
            println!("wrote {} runs, {} summary rows and {} plot files to {}", r.runs.len(), r.summary.len(), plots.len(), out_dir.display());
        }
        Cmd::Ablate { dags, exec, at_hint, out } => {
            let s = ctx.scenario(dags, exec)?;
            let rows = ablate_molding(&s, *at_hint)?;
            write_table(&rows, create(out)?)?;
            for r in &rows {
                println!(
                    "{:>10} dop {:5.2} hint {} {:>9}: {:8.1} -> {:8.1} TAOs/s ({:+.1}%)",
                    r.dag, r.dop, r.hint, r.placement, r.throughput_without, r.throughput_with, r.delta_pct
                );
            }
        }
        Cmd::DumpPtt { dags, exec, preload, out, trace } => {
            let specs = ctx.dags(dags)?;
            let policies = ctx.policies(exec)?;
            let (Some(spec), Some(policy), Some(&hint)) = (specs.first(), policies.first(), exec.hints.first()) else {
                bail!("dump-ptt needs a DAG, a policy and a hint");
            };
            let dag = spec.dag.clone().with_uniform_hint(hint)?;
            let (metrics, ptt) = match (preload, ctx.backend(exec)) {
                (Some(p), Backend::Sim(cfg)) => {
                    let rows: Vec<PttRow> = read_table(BufReader::new(File::open(p)?))?;
                    let warm = taosched_core::PttSet::with_history(ctx.model.n_cores(), policy.ptt_history_weight);
                    preload_ptt(&warm, &rows)?;
                    let o = Simulator::new(&dag, &ctx.model, policy.clone(), cfg)?.with_ptt(warm)?.run()?;
                    (o.metrics, o.ptt)
                }
                (Some(_), Backend::Native(_)) => bail!("--preload is only supported on the simulator"),
                (None, backend) => run_once(&dag, &ctx.model, policy, &backend, exec.seed)?,
            };
            write_table(&ptt_rows(&ptt), create(out)?)?;
            if let Some(t) = trace {
                write_table(&trace_rows(&metrics), create(t)?)?;
            }
            println!("{} on {}: {:.1} TAOs/s, wrote {}", metrics.policy, spec.name, metrics.throughput(), out.display());
        }
        Cmd::ExportDot { dag, limit, out } => {
            let d = read_dag_json(BufReader::new(File::open(dag)?))?;
            write_dot(&d, *limit, create(out)?)?;
        }
        Cmd::ShowModel => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(model_to_toml(&ctx.model)?.as_bytes())?;
        }
    }
    Ok(())
}
