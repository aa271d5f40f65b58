use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use randprod::experiments::{
    self, criticals, law_cdf_table, parse_grid, parse_method, phase_diagram, rate_table, run_recipe, sample_rows,
    tail_check, write_csv, write_csv_to, RunOptions,
};
use randprod::limit::{normalization, BoundaryCentering};
use randprod::mc::{ks_distance_law, simulate_statistic, SimConfig, Statistic, DEFAULT_EXCEEDANCES, DEFAULT_MAX_OPS};
use randprod::{LimitLaw, Model};

#[derive(Parser, Debug)]
#[command(name = "randprod", version, about = "Limit laws for sums of random exponentials")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// Master seed for every random stream.
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    /// Worker threads (results do not depend on this).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Budget on simulated draws (N_n · replicates · n).
    #[arg(long, global = true)]
    max_ops: Option<f64>,
    /// Output file (tables) or directory (recipes); tables go to stdout
    /// when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Critical points c1, c2, c_inf and a table of the rate function.
    Criticals {
        #[arg(long)]
        model: Model,
        #[arg(long, default_value_t = 25)]
        points: usize,
    },
    /// The rate function I and α = I′ on a grid of β.
    RateTable {
        #[arg(long)]
        model: Model,
        #[arg(long, default_value_t = 25)]
        points: usize,
    },
    /// Regime and normalising sequences for (model, c, n).
    Limit {
        #[arg(long)]
        model: Model,
        #[arg(long)]
        c: f64,
        #[arg(long)]
        n: u64,
        /// Population size (default round(e^{cn})).
        #[arg(long = "N")]
        count: Option<u64>,
    },
    /// CDF of a limit law on a grid.
    Lawcdf {
        /// normal01, normalhalf, stable:alpha=A or lattice:alpha=A,delta=D,h=H
        #[arg(long)]
        kind: LimitLaw,
        /// lin:a,b,k, log:a,b,k or a comma-separated list.
        #[arg(long)]
        grid: String,
    },
    /// Simulates a statistic; CSV columns replicate,value.
    Simulate {
        #[arg(long)]
        model: Model,
        #[arg(long)]
        c: f64,
        #[arg(long)]
        n: u64,
        #[arg(long)]
        reps: u64,
        /// normalized-z, free-energy, lln or max-rate
        #[arg(long)]
        stat: Statistic,
        #[arg(long = "N")]
        count: Option<u64>,
        /// auto, direct or split
        #[arg(long, default_value = "auto")]
        method: String,
        #[arg(long, default_value_t = DEFAULT_EXCEEDANCES)]
        exceedances: u64,
    },
    /// Tail asymptotics, Chernoff bound and importance sampling for
    /// P[S_n ≥ nβ].
    TailCheck {
        #[arg(long)]
        model: Model,
        #[arg(long)]
        beta: f64,
        #[arg(long)]
        n: u64,
        #[arg(long, default_value_t = 100_000)]
        reps: u64,
        /// Fail unless the IS estimate is within this many standard errors
        /// of the exact tail.
        #[arg(long)]
        max_z: Option<f64>,
    },
    /// Free-energy limit against simulation over a grid of c.
    PhaseDiagram {
        #[arg(long)]
        model: Model,
        /// Comma-separated values of c, or a lin: grid.
        #[arg(long)]
        c_grid: String,
        #[arg(long)]
        n: u64,
        #[arg(long, default_value_t = 200)]
        reps: u64,
    },
    /// Runs a named experiment recipe into the --out directory.
    Recipe {
        /// Recipe name; `list` prints the available ones.
        name: String,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn emit<T: serde::Serialize>(out: Option<&Path>, rows: &[T]) -> Result<()> {
    match out {
        Some(p) => write_csv(p, rows).with_context(|| format!("writing {}", p.display())),
        None => Ok(write_csv_to(std::io::stdout().lock(), rows)?),
    }
}

/// Ok(false) when a declared tolerance fails.
fn run(cli: Cli) -> Result<bool> {
    let g = cli.global;
    let out = g.out.as_deref();
    let opts = RunOptions {
        threads: g.threads,
        max_ops: g.max_ops,
    };
    match cli.command {
        Command::Criticals { model, points } => {
            let row = criticals(&model)?;
            let table = rate_table(&model, points)?;
            match out {
                Some(p) => write_csv(p, &table)?,
                None => {
                    let mut stdout = std::io::stdout().lock();
                    writeln!(stdout, "# model = {model}")?;
                    writeln!(stdout, "# c1 = {}", row.c1)?;
                    writeln!(stdout, "# c2 = {}", row.c2)?;
                    writeln!(stdout, "# c_inf = {}", row.c_inf)?;
                    write_csv_to(stdout, &table)?;
                }
            }
            if out.is_some() {
                println!("c1 = {}\nc2 = {}\nc_inf = {}", row.c1, row.c2, row.c_inf);
            }
        }
        Command::RateTable { model, points } => emit(out, &rate_table(&model, points)?)?,
        Command::Limit { model, c, n, count } => {
            let log_count = match count {
                Some(k) if k >= 1 => (k as f64).ln(),
                Some(_) => bail!("--N must be at least 1"),
                None => randprod::log_population(c, n),
            };
            let (regime, norm) = normalization(&model, c, n, log_count, BoundaryCentering::Auto)?;
            let opt = |v: Option<f64>| v.map_or("none".to_string(), |x| x.to_string());
            println!("model = {model}");
            println!("c = {c}");
            println!("n = {n}");
            println!("log_N = {log_count}");
            println!("regime = {}", regime.tag);
            println!("lattice = {}", regime.is_lattice);
            println!("alpha = {}", opt(regime.alpha));
            println!("beta = {}", opt(regime.beta));
            println!("log_A = {}", norm.log_a);
            println!("log_B = {}", norm.log_b);
            println!("b_n = {}", opt(norm.b_n));
            println!("delta_n = {}", opt(norm.delta_n));
            match LimitLaw::for_regime(&regime, &model, norm.delta_n) {
                Ok(law) => println!("law = {law}"),
                Err(e) => println!("law = unsupported ({e})"),
            }
        }
        Command::Lawcdf { kind, grid } => {
            let xs = parse_grid(&grid)?;
            emit(out, &law_cdf_table(&kind, &xs)?)?;
        }
        Command::Simulate {
            model,
            c,
            n,
            reps,
            stat,
            count,
            method,
            exceedances,
        } => {
            let mut cfg = SimConfig::new(model, c, n, reps, g.seed, stat);
            cfg.count = count;
            cfg.threads = g.threads;
            cfg.max_ops = g.max_ops.unwrap_or(DEFAULT_MAX_OPS);
            cfg.method = parse_method(&method, exceedances)?;
            let set = simulate_statistic(&cfg)?;
            emit(out, &sample_rows(&set))?;
            eprintln!(
                "N = {}, mean = {}, sd = {}, {:.2} s",
                set.population,
                set.mean(),
                set.sd(),
                set.wall_time.as_secs_f64()
            );
            if stat == Statistic::NormalizedZ {
                match set.limit_law() {
                    Ok(law) => eprintln!("KS vs {law} = {}", ks_distance_law(&set.values, &law)?),
                    Err(e) => eprintln!("no limit law: {e}"),
                }
            }
        }
        Command::TailCheck {
            model,
            beta,
            n,
            reps,
            max_z,
        } => {
            let (row, z) = tail_check(&model, beta, n, reps, g.seed)?;
            emit(out, &[row])?;
            if let Some(z) = z {
                eprintln!("z-score of the IS estimate against the exact tail: {z:.3}");
            }
            if let Some(limit) = max_z {
                match z {
                    Some(z) => return Ok(z <= limit),
                    None => bail!("--max-z needs a model with an exact tail"),
                }
            }
        }
        Command::PhaseDiagram { model, c_grid, n, reps } => {
            let cs = parse_grid(&c_grid)?;
            emit(out, &phase_diagram(&model, &cs, n, reps, g.seed, &opts)?)?;
        }
        Command::Recipe { name } => {
            if name == "list" {
                for r in experiments::recipes()? {
                    println!("{:<26}{}", r.name, r.description);
                }
                return Ok(true);
            }
            let dir = out.map_or_else(|| PathBuf::from(format!("recipe-{name}")), Path::to_path_buf);
            let manifest = run_recipe(&name, &dir, &opts)?;
            for step in &manifest.steps {
                for check in &step.checks {
                    println!(
                        "{} {}: {} = {} ({})",
                        if check.pass { "PASS" } else { "FAIL" },
                        step.name,
                        check.name,
                        check.value,
                        check.bound
                    );
                }
            }
            println!("summary: {}", dir.join("summary.json").display());
            return Ok(manifest.passed);
        }
    }
    Ok(true)
}
