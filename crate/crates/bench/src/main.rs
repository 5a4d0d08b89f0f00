use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use setrules_analysis::PaVariant;
use setrules_bench::cache::{cache_facts, cache_path, load_cache};
use setrules_bench::gen::{gen_rbac_workload, gen_tc_graph, RbacWorkloadConfig, TcGenConfig};
use setrules_bench::output::{plot_data, plot_script, write_csv};
use setrules_bench::run::{compare_rbac_variants, run_pa_benchmark, run_tc_benchmark, TcVariant};
use setrules_bench::timing::{timed, Phase, TimingRecord};
use setrules_bench::BenchError;
use setrules_core::{parse_facts, write_facts, Database};
use setrules_rbac::Variant;

#[derive(Parser)]
#[command(name = "setrules-bench", version, about = "Generate benchmark data and time rule evaluation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate benchmark inputs.
    #[command(subcommand)]
    Gen(GenCommand),
    /// Run a benchmark and write per-phase CPU times as CSV.
    #[command(subcommand)]
    Run(RunCommand),
    /// Build the binary cache of a fact file and time raw versus cached reads.
    Cache { file: PathBuf },
    /// Print the class-hierarchy report of a fact file.
    Pa {
        file: PathBuf,
        #[arg(long, default_value = "pa")]
        variant: String,
    },
}

#[derive(Subcommand)]
enum GenCommand {
    /// A random graph as `edge/2` facts.
    Tc {
        #[arg(long)]
        vertices: u64,
        #[arg(long)]
        edges: u64,
        #[arg(long, conflicts_with = "acyclic")]
        cyclic: bool,
        #[arg(long)]
        acyclic: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// An RBAC initial state and operation sequence, written into a directory.
    Rbac {
        #[command(flatten)]
        shape: RbacShape,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        output: PathBuf,
    },
}

#[derive(Args, Clone)]
struct RbacShape {
    /// Start from the tenfold smaller configuration.
    #[arg(long)]
    small: bool,
    #[arg(long)]
    users: Option<usize>,
    #[arg(long)]
    roles: Option<usize>,
    #[arg(long)]
    ur: Option<usize>,
    #[arg(long)]
    rh: Option<usize>,
    #[arg(long)]
    height: Option<usize>,
    #[arg(long)]
    queries: Option<usize>,
}

impl RbacShape {
    fn config(&self, seed: u64) -> RbacWorkloadConfig {
        let mut cfg = if self.small {
            RbacWorkloadConfig::small()
        } else {
            RbacWorkloadConfig::default()
        };
        cfg.users = self.users.unwrap_or(cfg.users);
        cfg.roles = self.roles.unwrap_or(cfg.roles);
        cfg.ur_size = self.ur.unwrap_or(cfg.ur_size);
        cfg.rh_size = self.rh.unwrap_or(cfg.rh_size);
        cfg.rh_height = self.height.unwrap_or(cfg.rh_height);
        cfg.n_queries = self.queries.unwrap_or(cfg.n_queries);
        cfg.seed = seed;
        cfg
    }
}

#[derive(Args)]
struct Common {
    /// Variant name, a comma-separated list, or `all`.
    #[arg(long, default_value = "all")]
    variant: String,
    #[arg(long, default_value_t = 1)]
    repeat: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Also write gnuplot data here, plus a script with `.gp` appended.
    #[arg(long)]
    plot: Option<PathBuf>,
}

#[derive(Subcommand)]
enum RunCommand {
    /// Transitive closure over random graphs, one per edge count in `--sizes`.
    Tc {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 100)]
        vertices: u64,
        #[arg(long, value_delimiter = ',', default_value = "200")]
        sizes: Vec<u64>,
        #[arg(long)]
        acyclic: bool,
    },
    /// RBAC workloads, one per query count in `--sizes`.
    Rbac {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        shape: RbacShape,
        #[arg(long, value_delimiter = ',', default_value = "500")]
        sizes: Vec<usize>,
    },
    /// Class-hierarchy analysis over fact files, raw or cached.
    Pa {
        #[command(flatten)]
        common: Common,
        #[arg(long, required = true, num_args = 1..)]
        input: Vec<PathBuf>,
    },
}

fn usage(msg: String) -> BenchError {
    BenchError::Io(io::Error::new(io::ErrorKind::InvalidInput, msg))
}

fn select<T: Copy>(names: &str, all: &[T], parse: impl Fn(&str) -> Option<T>) -> Result<Vec<T>, String> {
    if names.eq_ignore_ascii_case("all") {
        return Ok(all.to_vec());
    }
    names.split(',')
        .map(|s| parse(s.trim()).ok_or_else(|| format!("unknown variant `{s}`")))
        .collect()
}

fn emit(common: &Common, records: &[TimingRecord]) -> Result<(), BenchError> {
    match &common.csv {
        Some(path) => write_csv(fs::File::create(path)?, records)?,
        None => write_csv(io::stdout().lock(), records)?,
    }
    if let Some(plot) = &common.plot {
        fs::write(plot, plot_data(records, Phase::Total))?;
        let mut script = plot.as_os_str().to_owned();
        script.push(".gp");
        let image = plot.with_extension("png");
        fs::write(
            script,
            plot_script(&plot.to_string_lossy(), records, Phase::Total, &image.to_string_lossy()),
        )?;
    }
    Ok(())
}

fn write_file(path: &Path, text: &str) -> Result<(), BenchError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, text)?;
    Ok(())
}

fn run(cli: Cli) -> Result<(), BenchError> {
    match cli.command {
        Command::Gen(GenCommand::Tc {
            vertices,
            edges,
            cyclic,
            acyclic,
            seed,
            output,
        }) => {
            let rel = gen_tc_graph(&TcGenConfig {
                vertices,
                edges,
                cyclic: cyclic || !acyclic,
                seed,
            })?;
            let mut db = Database::new();
            db.insert_relation(rel.with_name("edge"));
            write_file(&output, &write_facts(&db))
        }
        Command::Gen(GenCommand::Rbac { shape, seed, output }) => gen_rbac_workload(&shape.config(seed))?.save(&output),
        Command::Run(RunCommand::Tc {
            common,
            vertices,
            sizes,
            acyclic,
        }) => {
            let variants = select(&common.variant, &TcVariant::ALL, TcVariant::from_name).map_err(usage)?;
            let mut records = Vec::new();
            for &edges in &sizes {
                let graph = gen_tc_graph(&TcGenConfig {
                    vertices,
                    edges,
                    cyclic: !acyclic,
                    seed: common.seed,
                })?;
                let mut expected = None;
                for &v in &variants {
                    let run = run_tc_benchmark(v, &graph, edges, common.seed, common.repeat)?;
                    match &expected {
                        None => expected = Some(run.result),
                        Some(e) if *e != run.result => {
                            return Err(BenchError::Invariant(format!(
                                "{} closure differs from {} at {edges} edges",
                                v.name(),
                                variants[0].name()
                            )))
                        }
                        Some(_) => {}
                    }
                    records.extend(run.records);
                }
            }
            emit(&common, &records)
        }
        Command::Run(RunCommand::Rbac { common, shape, sizes }) => {
            let variants = select(&common.variant, &Variant::ALL, Variant::from_name).map_err(usage)?;
            let mut records = Vec::new();
            let mut cfg = shape.config(common.seed);
            cfg.n_queries = sizes.iter().copied().max().unwrap_or(0);
            let full = gen_rbac_workload(&cfg)?;
            for &n in &sizes {
                let workload = full.with_queries(n);
                for run in compare_rbac_variants(&variants, &workload, common.seed, common.repeat)? {
                    records.extend(run.records);
                }
            }
            emit(&common, &records)
        }
        Command::Run(RunCommand::Pa { common, input }) => {
            let variants = select(&common.variant, &[PaVariant::Pa, PaVariant::PaOpt], PaVariant::from_name).map_err(usage)?;
            let mut records = Vec::new();
            for path in &input {
                let mut expected = None;
                for &v in &variants {
                    let run = run_pa_benchmark(path, v, common.repeat)?;
                    match &expected {
                        None => expected = Some(run.report.clone()),
                        Some(e) if *e != run.report => {
                            return Err(BenchError::Invariant(format!(
                                "{} report differs on {}",
                                v.name(),
                                path.display()
                            )))
                        }
                        Some(_) => {}
                    }
                    records.extend(run.records);
                }
            }
            emit(&common, &records)
        }
        Command::Cache { file } => {
            let (db, t_raw) = timed(|| -> Result<Database, BenchError> { Ok(parse_facts(&fs::read_to_string(&file)?)?) });
            let facts = db?.fact_count();
            let (out, t_write) = timed(|| cache_facts(&file));
            out?;
            let (cached, t_cached) = timed(|| load_cache(&cache_path(&file)));
            cached?;
            let mut stdout = io::stdout().lock();
            writeln!(stdout, "facts = {facts}")?;
            writeln!(stdout, "cache = {}", cache_path(&file).display())?;
            writeln!(stdout, "read_raw = {t_raw:.6}")?;
            writeln!(stdout, "write_cache = {t_write:.6}")?;
            writeln!(stdout, "read_cache = {t_cached:.6}")?;
            Ok(())
        }
        Command::Pa { file, variant } => {
            let variant = PaVariant::from_name(&variant).ok_or_else(|| usage(format!("unknown variant `{variant}`")))?;
            let run = run_pa_benchmark(&file, variant, 1)?;
            let mut stdout = io::stdout().lock();
            write!(stdout, "{}", run.report.to_kv())?;
            writeln!(stdout, "{}", setrules_analysis::AnalysisReport::csv_header())?;
            writeln!(stdout, "{}", run.report.csv_row())?;
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(BenchError::Io(e)) if e.kind() == io::ErrorKind::InvalidInput => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
