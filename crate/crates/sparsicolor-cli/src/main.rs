use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use sparsicolor::acd::{acd_exact, acd_distributed};
use sparsicolor::coloring::read_coloring;
use sparsicolor::experiment::{run_experiment, ExperimentConfig, PhaseSel};
use sparsicolor::graph::{generate, read_edge_list, write_edge_list, Graph};
use sparsicolor::oracle::{verify_coloring, verify_with_lists};
use sparsicolor::palette::ColorLists;
use sparsicolor::sim::Sim;
use thiserror::Error;

#[derive(Debug, Error)]
enum CliError {
    #[error(transparent)]
    Core(#[from] sparsicolor::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("{0}")]
    Usage(String),
}

type Result<T> = std::result::Result<T, CliError>;

#[derive(Parser)]
#[command(name = "sparsicolor", version, about = "Palette-sparsification (Δ+1)-coloring simulator")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

/// Config file plus `--key value` overrides of any config key.
#[derive(Args, Debug)]
struct ConfigArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    /// `--key value` pairs, e.g. `--delta 128 --seeds 20 --params.l3_scale 0.1`.
    #[arg(trailing_var_arg = true, allow_hyphen_values = true, value_name = "--KEY VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate an instance (seeded by `--seed`) and write it as an edge list
    /// to `--out FILE` or stdout.
    Gen {
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Run the configured phases over all seeds and write the reports.
    Run {
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Check a coloring file against a graph and optional lists.
    Verify {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        coloring: PathBuf,
        #[arg(long)]
        lists: Option<PathBuf>,
    },
    /// Print the almost-clique decomposition (`node clique|S e_v a_v`).
    Acd {
        /// Centralized decomposition with exact friendship counts.
        #[arg(long)]
        exact: bool,
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Like `run`, but prints per-seed wall time and writes no files.
    Bench {
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Level-set invariant on random bipartite instances.
    Levelcheck {
        #[arg(long, default_value_t = 1000)]
        instances: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn pairs(overrides: &[String]) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    let mut it = overrides.iter();
    while let Some(k) = it.next() {
        let k = if k == "-o" { "--out" } else { k.as_str() };
        let key = k
            .strip_prefix("--")
            .ok_or_else(|| CliError::Usage(format!("expected --key, got '{k}'")))?;
        let (key, value) = match key.split_once('=') {
            Some((k, v)) => (k.to_string(), v.to_string()),
            None => {
                let v = it.next().ok_or_else(|| CliError::Usage(format!("--{key} needs a value")))?;
                (key.to_string(), v.clone())
            }
        };
        out.push((key, value));
    }
    Ok(out)
}

fn load_config(a: &ConfigArgs) -> Result<ExperimentConfig> {
    load_config_with(a, &mut Vec::new())
}

/// Like [`load_config`], moving the pairs whose key is in `own` (with their
/// values) out of the overrides first.
fn load_config_with(a: &ConfigArgs, own: &mut Vec<(String, String)>) -> Result<ExperimentConfig> {
    let mut cfg = match &a.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    let all = pairs(&a.overrides)?;
    let keys: Vec<String> = own.drain(..).map(|(k, _)| k).collect();
    let (mine, rest): (Vec<_>, Vec<_>) = all.into_iter().partition(|(k, _)| keys.contains(k));
    *own = mine;
    cfg.apply(&rest)?;
    cfg.apply_env()?;
    Ok(cfg)
}

fn read_graph(p: &PathBuf) -> Result<Graph> {
    Ok(read_edge_list(BufReader::new(File::open(p)?))?)
}

/// The configured graph file, or the generator run with the master seed.
fn instance(cfg: &ExperimentConfig) -> Result<Graph> {
    match &cfg.graph {
        Some(p) => read_graph(p),
        None => {
            let mut spec = cfg.gen.clone();
            spec.seed = cfg.master_seed;
            Ok(generate(&spec)?.0)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.cmd {
        Cmd::Gen { cfg } => {
            let mut own = vec![("out".to_string(), String::new())];
            let cfg = load_config_with(&cfg, &mut own)?;
            let out = own.pop().map(|(_, v)| PathBuf::from(v));
            let g = instance(&cfg)?;
            log::info!("generated n={} m={} Δ={}", g.n(), g.m(), g.delta());
            match out {
                Some(p) => write_edge_list(&g, BufWriter::new(File::create(p)?))?,
                None => write_edge_list(&g, std::io::stdout().lock())?,
            }
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Run { cfg } => {
            let cfg = load_config(&cfg)?;
            let rep = run_experiment(&cfg)?;
            rep.write_to(&cfg.out_dir)?;
            print!("{}", rep.verdicts_txt().lines().last().map(|l| format!("{l}\n")).unwrap_or_default());
            Ok(if rep.hard_ok() { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        Cmd::Bench { cfg } => {
            let cfg = load_config(&cfg)?;
            let mut ok = true;
            let mut out = std::io::stdout().lock();
            for &seed in &cfg.seeds {
                let one = ExperimentConfig {
                    seeds: vec![seed],
                    workers: 1,
                    ..cfg.clone()
                };
                let t = Instant::now();
                let rep = run_experiment(&one)?;
                let r = &rep.records[0];
                ok &= !r.hard_failure;
                writeln!(out, "seed {seed} {} rounds={} {:.3}s", r.status, r.rounds, t.elapsed().as_secs_f64())?;
            }
            Ok(if ok { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        Cmd::Verify { graph, coloring, lists } => {
            let g = read_graph(&graph)?;
            let c = read_coloring(BufReader::new(File::open(coloring)?), g.n())?;
            let verdict = match lists {
                Some(p) => {
                    let l = ColorLists::load(BufReader::new(File::open(p)?))?;
                    if l.n() != g.n() {
                        return Err(CliError::Usage(format!("lists cover {} nodes, graph has {}", l.n(), g.n())));
                    }
                    verify_with_lists(&g, &l, &c)
                }
                None => {
                    let pal = g.delta() as u32 + 1;
                    verify_coloring(&g, |_, x| x <= pal, &c)
                }
            };
            println!("{verdict}");
            Ok(if verdict.is_valid() { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        Cmd::Acd { exact, cfg } => {
            let cfg = load_config(&cfg)?;
            let g = instance(&cfg)?;
            let dec = if exact {
                let r = cfg.params.resolve(g.n(), g.delta())?;
                acd_exact(&g, r.acd_delta)
            } else {
                let mut sim = Sim::new(g.clone(), &cfg.params, cfg.master_seed)?;
                acd_distributed(&mut sim)?
            };
            eprintln!("{} cliques, {} sparse nodes", dec.cliques.len(), dec.v_sparse().len());
            dec.dump(BufWriter::new(std::io::stdout().lock()))?;
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Levelcheck { instances, seed } => {
            let cfg = ExperimentConfig {
                phase: PhaseSel::Levelcheck,
                seeds: (0..instances).collect(),
                master_seed: seed,
                ..ExperimentConfig::default()
            };
            let rep = run_experiment(&cfg)?;
            println!("{}/{} pass", rep.successes(), rep.records.len());
            for r in rep.records.iter().filter(|r| !r.complete()) {
                println!("seed {}: {}", r.seed, r.verdict);
            }
            Ok(if rep.successes() == rep.records.len() { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
