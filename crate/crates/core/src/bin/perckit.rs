use std::error::Error;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rand::Rng;
use serde_json::json;

use perckit::gap_process::{prob_ak, rho_exact, rho_sandwich, GapProcess};
use perckit::growth_events::{prob_dk, prob_jk, verify_growth_guarantee, SkewGeometry, StairGeometry};
use perckit::harness::{
    g15, pak_rows_to_csv, run_experiment, sweep_pak_bounds, trend_check, ExperimentConfig, LRule,
    OutputFormat,
};
use perckit::lattice::{reaches_boundary, run_to_fixpoint, sample_initial, spans, to_binary, to_text, ModelSpec, Variant};
use perckit::qseries::{check_andrews_identity, check_chi_identity, partition_no_ksequences};
use perckit::rng::trial_rng;
use perckit::special_fn::{lambda_k, FkEvaluator, DEFAULT_INTEGRAL_TOL};

type CliResult = Result<ExitCode, Box<dyn Error>>;

#[derive(Parser)]
#[command(name = "perckit", version, about = "k-percolation toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// f_k(x), one value per line.
    Fk {
        #[arg(long)]
        k: u32,
        #[arg(required = true)]
        x: Vec<f64>,
        #[arg(long)]
        tol: Option<f64>,
    },
    /// g_k(z) = -ln f_k(e^{-z}), or its derivative.
    Gk {
        #[arg(long)]
        k: u32,
        #[arg(required = true)]
        z: Vec<f64>,
        #[arg(long)]
        derivative: bool,
    },
    /// lambda_k = pi^2 / (3k(k+1)); with --integrate, the quadrature of g_k.
    Lambda {
        #[arg(long, value_delimiter = ',', required = true)]
        k: Vec<u32>,
        #[arg(long)]
        integrate: bool,
    },
    /// Min of H_k and max of H~_k over random sorted tuples (two lines).
    HkScan {
        #[arg(long)]
        k: u32,
        #[arg(long, default_value_t = 10_000)]
        samples: u64,
        #[arg(long)]
        seed: u64,
    },
    /// Exact no-k-gap probability rho_n, as JSON.
    Rho {
        #[arg(long)]
        k: u32,
        /// Whitespace or comma separated u_1..u_n.
        #[arg(long, conflicts_with_all = ["s", "n"])]
        u_file: Option<PathBuf>,
        #[arg(long, requires = "n")]
        s: Option<f64>,
        #[arg(long, requires = "s")]
        n: Option<usize>,
    },
    /// P(A_k) with a rigorous enclosing interval, as JSON.
    Pak {
        #[arg(long)]
        k: u32,
        #[arg(long)]
        s: f64,
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
    },
    /// `n,p_k(n)` rows: partitions of n without k consecutive parts.
    Partitions {
        #[arg(long)]
        k: u32,
        #[arg(long = "N")]
        n: usize,
        /// Also compare with the double series; exit 1 on mismatch.
        #[arg(long)]
        andrews_check: bool,
    },
    /// Checks G_2 against the mock theta product to order N; exit 1 on mismatch.
    ChiIdentity {
        #[arg(long = "N")]
        n: usize,
    },
    /// Samples one configuration, runs it to its fixpoint and reports.
    Simulate {
        #[arg(long)]
        model: Variant,
        #[arg(long)]
        k: u32,
        #[arg(long)]
        q: f64,
        #[arg(long = "L")]
        l: usize,
        #[arg(long)]
        seed: u64,
        /// Final state; text if the name ends in .txt, binary otherwise.
        #[arg(long)]
        snapshot: Option<PathBuf>,
    },
    /// Growth events.
    Events {
        #[command(subcommand)]
        command: EventsCommand,
    },
    /// Growth-frequency scan from a JSON config or flags.
    Scan {
        #[arg(long, conflicts_with_all = ["model", "k", "q", "s", "l", "trials", "seed"])]
        config: Option<PathBuf>,
        #[arg(long)]
        model: Option<Variant>,
        #[arg(long, value_delimiter = ',')]
        k: Vec<u32>,
        #[arg(long, value_delimiter = ',')]
        q: Vec<f64>,
        #[arg(long, value_delimiter = ',')]
        s: Vec<f64>,
        #[arg(long = "L", value_delimiter = ',')]
        l: Vec<usize>,
        #[arg(long)]
        trials: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        /// One seed for every point, coupling points across q.
        #[arg(long)]
        common_random_numbers: bool,
    },
    /// Fits log P(growth) against 1/s, as JSON.
    Trend {
        #[arg(long)]
        k: u32,
        #[arg(long)]
        model: Option<Variant>,
        #[arg(long, value_delimiter = ',', required = true)]
        s: Vec<f64>,
        /// Fixed window size; default L = ceil(scale / s).
        #[arg(long = "L")]
        l: Option<usize>,
        #[arg(long, default_value_t = 8.0)]
        scale: f64,
        #[arg(long)]
        trials: u64,
        #[arg(long)]
        seed: u64,
    },
    /// P(A_k) against exp(-lambda_k/s) and s^{-(2k-1)/2k} exp(-lambda_k/s), as CSV.
    SweepPak {
        #[arg(long, value_delimiter = ',', required = true)]
        k: Vec<u32>,
        #[arg(long, value_delimiter = ',', required = true)]
        s: Vec<f64>,
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
    },
}

#[derive(Subcommand)]
enum EventsCommand {
    /// Simulates conditioned configurations and reports guarantee violations.
    Verify {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        trials: u64,
        #[arg(long)]
        seed: u64,
    },
    /// Exact probability of D_k(a, b) or J_k(a, b).
    Prob {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        a: usize,
        #[arg(long)]
        b: usize,
        #[arg(long)]
        q: f64,
        #[arg(long, value_enum)]
        kind: EventKind,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum EventKind {
    Dk,
    Jk,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

fn print_values(values: impl IntoIterator<Item = f64>) {
    for v in values {
        println!("{}", g15(v));
    }
}

fn default_model(k: u32) -> Variant {
    if k == 1 {
        Variant::LocalModified
    } else {
        Variant::LocalK
    }
}

fn read_u_file(path: &PathBuf) -> Result<Vec<f64>, Box<dyn Error>> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    text.split(|c: char| c.is_whitespace() || c == ',')
        .filter(|t| !t.is_empty())
        .map(|t| t.parse::<f64>().map_err(|e| format!("{t:?}: {e}").into()))
        .collect()
}

fn run(cli: Cli) -> CliResult {
    match cli.command {
        Command::Fk { k, x, tol } => {
            let ev = match tol {
                Some(t) => FkEvaluator::with_tolerance(k, t)?,
                None => FkEvaluator::new(k)?,
            };
            print_values(x.iter().map(|&x| ev.fk(x)).collect::<Result<Vec<_>, _>>()?);
        }
        Command::Gk { k, z, derivative } => {
            let ev = FkEvaluator::new(k)?;
            let values = z
                .iter()
                .map(|&z| if derivative { ev.gk_derivative(z) } else { ev.gk(z) })
                .collect::<Result<Vec<_>, _>>()?;
            print_values(values);
        }
        Command::Lambda { k, integrate } => {
            for k in k {
                let v = if integrate {
                    perckit::special_fn::integrate_gk(k, DEFAULT_INTEGRAL_TOL)?.value
                } else {
                    lambda_k(k)?
                };
                println!("{}", g15(v));
            }
        }
        Command::HkScan { k, samples, seed } => {
            let ev = FkEvaluator::new(k)?;
            let n = k as usize;
            let mut min_h = f64::INFINITY;
            let mut max_ht = f64::NEG_INFINITY;
            for t in 0..samples {
                let mut rng = trial_rng(seed, t);
                let mut draw = |len: usize| {
                    let mut y: Vec<f64> = (0..len).map(|_| rng.gen::<f64>()).collect();
                    y.sort_by(f64::total_cmp);
                    y
                };
                min_h = min_h.min(ev.hk(&draw(n))?);
                max_ht = max_ht.max(ev.hk_tilde(&draw(2 * n - 1))?);
            }
            print_values([min_h, max_ht]);
        }
        Command::Rho { k, u_file, s, n } => {
            let (process, n) = match (u_file, s, n) {
                (Some(path), _, _) => {
                    let u = read_u_file(&path)?;
                    let n = u.len();
                    (GapProcess::explicit(k, u)?, n)
                }
                (None, Some(s), Some(n)) => (GapProcess::parametric(k, s)?, n),
                _ => return Err("give --u-file or both --s and --n".into()),
            };
            let trace = rho_exact(&process, n)?;
            let mut out = json!({
                "value": trace.last(),
                "log_value": trace.last_log(),
                "error_bound": 0.0,
                "n": n,
            });
            if let Ok(sw) = rho_sandwich(&process, n) {
                out["sandwich"] = json!({"lower": sw.lower, "upper": sw.upper});
            }
            println!("{}", serde_json::to_string_pretty(&out)?);
        }
        Command::Pak { k, s, tol } => {
            let est = prob_ak(k, s, tol)?;
            println!("{}", serde_json::to_string_pretty(&est)?);
        }
        Command::Partitions { k, n, andrews_check } => {
            let table = partition_no_ksequences(k, n)?;
            for (i, v) in table.values.iter().enumerate() {
                println!("{i},{v}");
            }
            if andrews_check {
                let report = check_andrews_identity(k, n)?;
                if !report.holds() {
                    eprintln!("double series differs at n = {:?}", report.mismatches);
                    return Ok(ExitCode::from(1));
                }
            }
        }
        Command::ChiIdentity { n } => {
            let report = check_chi_identity(n)?;
            if report.holds() {
                println!("identity holds to order {n}");
            } else {
                println!("mismatch at n = {:?}", report.mismatches);
                return Ok(ExitCode::from(1));
            }
        }
        Command::Simulate {
            model,
            k,
            q,
            l,
            seed,
            snapshot,
        } => {
            let spec = ModelSpec::new(model, k, q)?;
            let localized = model.is_local();
            let mut lattice = sample_initial(&spec, l, l, seed, localized)?;
            let fix = run_to_fixpoint(&mut lattice, &spec, u32::MAX);
            let out = json!({
                "model": model.name(),
                "k": k,
                "q": q,
                "L": l,
                "seed": seed,
                "steps": fix.steps,
                "active": lattice.active_count(),
                "spans": spans(&lattice),
                "reaches_boundary": localized && reaches_boundary(&lattice, &spec),
            });
            if let Some(path) = snapshot {
                let bytes = if path.extension().is_some_and(|e| e == "txt") {
                    to_text(&lattice).into_bytes()
                } else {
                    to_binary(&lattice)
                };
                std::fs::write(&path, bytes).map_err(|e| format!("{}: {e}", path.display()))?;
            }
            println!("{}", serde_json::to_string_pretty(&out)?);
        }
        Command::Events { command } => match command {
            EventsCommand::Verify { k, trials, seed } => {
                let report = verify_growth_guarantee(k, trials, seed)?;
                println!("{}", serde_json::to_string_pretty(&report)?);
                if report.violations > 0 {
                    return Ok(ExitCode::from(1));
                }
            }
            EventsCommand::Prob { k, a, b, q, kind } => {
                let p = match kind {
                    EventKind::Dk => prob_dk(&StairGeometry::new(k, a, b)?, q)?,
                    EventKind::Jk => prob_jk(&SkewGeometry::new(k, a, b)?, q)?,
                };
                println!("{}", g15(p));
            }
        },
        Command::Scan {
            config,
            model,
            k,
            q,
            s,
            l,
            trials,
            seed,
            output,
            format,
            common_random_numbers,
        } => {
            let format = match format {
                Format::Csv => OutputFormat::Csv,
                Format::Json => OutputFormat::Json,
            };
            let cfg = match config {
                Some(path) => {
                    let mut cfg = ExperimentConfig::load(&path)?;
                    if output.is_some() {
                        cfg.output = output;
                    }
                    cfg
                }
                None => {
                    let cfg = ExperimentConfig {
                        model: model.ok_or("--model is required without --config")?,
                        k,
                        q,
                        s,
                        l,
                        trials: trials.ok_or("--trials is required without --config")?,
                        seed: seed.ok_or("--seed is required without --config")?,
                        output,
                        format,
                        common_random_numbers,
                    };
                    cfg.validate()?;
                    cfg
                }
            };
            if let Some(text) = run_experiment(&cfg)? {
                print!("{text}");
            }
        }
        Command::Trend {
            k,
            model,
            s,
            l,
            scale,
            trials,
            seed,
        } => {
            let rule = l.map_or(LRule::Scaled(scale), LRule::Fixed);
            let report = trend_check(k, model.unwrap_or(default_model(k)), &s, rule, trials, seed)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
        }
        Command::SweepPak { k, s, tol } => {
            print!("{}", pak_rows_to_csv(&sweep_pak_bounds(&k, &s, tol)?));
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
