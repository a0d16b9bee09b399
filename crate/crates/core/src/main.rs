use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use toml::{Table, Value};

use leray_deconv::diagnostics::model_error;
use leray_deconv::experiments::{
    consistency_rate_study, cutoff_table_study, deconv_rate_study, delta_rate_study, n_limit_study,
    transfer_figures_study, ConsistencySpec, CutoffSpec, DeconvRateSpec, DeltaRateSpec, NLimitSpec,
    StudyReport, TransferSpec,
};
use leray_deconv::io::{self, load_run_dir, parse_config, run_to_dir, RunConfig};
use leray_deconv::solver::SolverConfig;
use leray_deconv::Error;

/// Leray-deconvolution turbulence models on the periodic box.
#[derive(Parser)]
#[command(name = "leray-deconv", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one configuration and write a run directory.
    Run {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Output directory; defaults to output.dir.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Tabulate the deconvolution and residual-power transfer functions.
    Transfer {
        #[arg(long, default_value_t = 1.0)]
        delta: f64,
        /// Orders of the deconvolution curves.
        #[arg(long, value_delimiter = ',', default_value = "0,1,2")]
        orders: Vec<u32>,
        /// Orders of the residual-power curves.
        #[arg(long, value_delimiter = ',', default_value = "0,10,50")]
        hn_orders: Vec<u32>,
        #[arg(long, default_value_t = 10.0)]
        kmax: f64,
        #[arg(long, default_value_t = 201)]
        points: usize,
        #[arg(long, default_value = "out/transfer")]
        out: PathBuf,
    },
    /// Single-mode deconvolution error against δ.
    DeconvRate {
        #[arg(long, default_value_t = 16)]
        n: usize,
        #[arg(long, value_delimiter = ',', default_value = "0.2,0.1,0.05,0.025")]
        deltas: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "0,1,2")]
        orders: Vec<u32>,
        #[arg(long, default_value = "out/deconv-rate")]
        out: PathBuf,
    },
    /// Model error against the NSE reference as δ decreases.
    SweepDelta {
        #[command(flatten)]
        cfg: OptionalConfigArgs,
        /// Deconvolution order; defaults to model.N, else 0.
        #[arg(long)]
        order: Option<u32>,
        /// Defaults to study.deltas, else 0.4,0.2,0.1.
        #[arg(long, value_delimiter = ',')]
        deltas: Option<Vec<f64>>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Model error against the NSE reference as N grows at fixed δ.
    SweepN {
        #[command(flatten)]
        cfg: OptionalConfigArgs,
        /// Defaults to study.delta, else model.delta, else 0.5.
        #[arg(long)]
        delta: Option<f64>,
        /// Defaults to study.orders, else 0,1,2,4,8.
        #[arg(long, value_delimiter = ',')]
        orders: Option<Vec<u32>>,
        /// Order used for the cost measurement; 0 skips it.
        #[arg(long, default_value_t = 16)]
        cost_order: u32,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Cutoff wavenumber k_c(N, δ).
    Cutoff {
        #[arg(long, value_delimiter = ',', default_value = "1,0.5,0.25")]
        deltas: Vec<f64>,
        /// Highest order; the table covers 0..=max-order.
        #[arg(long, default_value_t = 50)]
        max_order: u32,
        #[arg(long, default_value = "out/cutoff")]
        out: PathBuf,
    },
    /// Consistency error of a frozen Taylor-Green field against δ.
    Consistency {
        #[arg(long, default_value_t = 32)]
        n: usize,
        #[arg(long, value_delimiter = ',', default_value = "0.2,0.1,0.05")]
        deltas: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "0,1")]
        orders: Vec<u32>,
        #[arg(long, default_value = "out/consistency")]
        out: PathBuf,
    },
    /// Error norms between two run directories with matching snapshots.
    Compare {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        reference: PathBuf,
    },
    /// Check a directory's files against its manifest.
    Verify { dir: PathBuf },
}

#[derive(Args)]
struct ConfigArgs {
    #[arg(long)]
    config: PathBuf,
    /// `section.key=value`, applied after the file; repeatable.
    #[arg(long = "set")]
    set: Vec<String>,
}

#[derive(Args)]
struct OptionalConfigArgs {
    /// Scenario file; the built-in Taylor-Green case is used without one.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long = "set", requires = "config")]
    set: Vec<String>,
}

impl OptionalConfigArgs {
    fn load(&self) -> Result<Option<RunConfig>, Error> {
        self.config.as_deref().map(|p| parse_config(p, &self.set)).transpose()
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::BlowUp { .. } => 2,
        _ => 1,
    }
}

fn list<T: Into<Value> + Copy>(xs: &[T]) -> Value {
    Value::Array(xs.iter().map(|&x| x.into()).collect())
}

fn orders_value(xs: &[u32]) -> Value {
    Value::Array(xs.iter().map(|&x| Value::Integer(x as i64)).collect())
}

fn finish_study(dir: &Path, report: &StudyReport, params: Table) -> Result<(), Error> {
    io::write_study_dir(dir, report, &params)?;
    print!("{}", report.summary());
    println!("wrote {}", dir.display());
    Ok(())
}

/// Scenario for the sweeps: the file's solver section, or Taylor-Green.
fn sweep_base(cfg: &Option<RunConfig>, fallback: SolverConfig) -> (SolverConfig, Table) {
    let mut params = Table::new();
    match cfg {
        Some(c) => {
            params.insert("scenario".into(), Value::Table(c.to_table()));
            (c.solver.clone(), params)
        }
        None => {
            params.insert("scenario".into(), "taylor_green_n32_nu0.1_t1".into());
            (fallback, params)
        }
    }
}

fn execute(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Run { cfg, out } => {
            let config = parse_config(&cfg.config, &cfg.set)?;
            let dir = out.unwrap_or_else(|| config.output.dir.clone());
            match run_to_dir(&config, Some(&dir)) {
                Ok(run) => {
                    if run.cfl.violated {
                        eprintln!(
                            "warning: dt = {} exceeds the advective estimate {:.3e}",
                            run.cfl.dt, run.cfl.dt_max
                        );
                    }
                    let last = run.records.last().expect("t = 0 record");
                    println!(
                        "{} steps to t = {}, energy {:.6e}, max balance residual {:.3e}",
                        run.steps,
                        last.t,
                        last.energy,
                        leray_deconv::diagnostics::max_balance_residual(&run.records)
                    );
                    println!("wrote {}", dir.display());
                    Ok(())
                }
                Err(failure) => {
                    eprintln!("partial output written to {}", dir.display());
                    Err(failure.error)
                }
            }
        }
        Command::Transfer {
            delta,
            orders,
            hn_orders,
            kmax,
            points,
            out,
        } => {
            let spec = TransferSpec {
                delta,
                k_max: kmax,
                points,
                dn_orders: orders.clone(),
                hn_orders: hn_orders.clone(),
            };
            let report = transfer_figures_study(&spec)?;
            let mut p = Table::new();
            p.insert("study".into(), "transfer_figures".into());
            p.insert("delta".into(), delta.into());
            p.insert("orders".into(), orders_value(&orders));
            p.insert("hn_orders".into(), orders_value(&hn_orders));
            p.insert("kmax".into(), kmax.into());
            p.insert("points".into(), (points as i64).into());
            finish_study(&out, &report, p)
        }
        Command::DeconvRate { n, deltas, orders, out } => {
            let spec = DeconvRateSpec {
                n,
                deltas: deltas.clone(),
                orders: orders.clone(),
                ..Default::default()
            };
            let report = deconv_rate_study(&spec)?;
            let mut p = Table::new();
            p.insert("study".into(), "deconv_rate".into());
            p.insert("n".into(), (n as i64).into());
            p.insert("wavevector".into(), list(&spec.wavevector));
            p.insert("deltas".into(), list(&deltas));
            p.insert("orders".into(), orders_value(&orders));
            finish_study(&out, &report, p)
        }
        Command::SweepDelta { cfg, order, deltas, out } => {
            let file = cfg.load()?;
            let order = order
                .or_else(|| file.as_ref().and_then(|c| c.solver.model.order()))
                .unwrap_or(0);
            let deltas = deltas
                .or_else(|| file.as_ref().and_then(|c| c.study.deltas.clone()))
                .unwrap_or_else(|| vec![0.4, 0.2, 0.1]);
            let mut spec = DeltaRateSpec::taylor_green(order, deltas.clone())?;
            let (base, mut p) = sweep_base(&file, spec.base.clone());
            spec.base = base;
            let report = delta_rate_study(&spec)?;
            p.insert("study".into(), "delta_rate".into());
            p.insert("order".into(), Value::Integer(order as i64));
            p.insert("deltas".into(), list(&deltas));
            let dir = out
                .or_else(|| file.as_ref().map(|c| c.output.dir.clone()))
                .unwrap_or_else(|| PathBuf::from("out/sweep-delta"));
            finish_study(&dir, &report, p)
        }
        Command::SweepN {
            cfg,
            delta,
            orders,
            cost_order,
            out,
        } => {
            let file = cfg.load()?;
            let delta = delta
                .or_else(|| file.as_ref().and_then(|c| c.study.delta))
                .or_else(|| file.as_ref().and_then(|c| c.solver.filter.map(|f| f.delta())))
                .unwrap_or(0.5);
            let orders = orders
                .or_else(|| file.as_ref().and_then(|c| c.study.orders.clone()))
                .unwrap_or_else(|| vec![0, 1, 2, 4, 8]);
            let mut spec = NLimitSpec::taylor_green(delta, orders.clone())?;
            spec.cost_order = cost_order;
            let (base, mut p) = sweep_base(&file, spec.base.clone());
            spec.base = base;
            let report = n_limit_study(&spec)?;
            p.insert("study".into(), "n_limit".into());
            p.insert("delta".into(), delta.into());
            p.insert("orders".into(), orders_value(&orders));
            p.insert("cost_order".into(), Value::Integer(cost_order as i64));
            let dir = out
                .or_else(|| file.as_ref().map(|c| c.output.dir.clone()))
                .unwrap_or_else(|| PathBuf::from("out/sweep-n"));
            finish_study(&dir, &report, p)
        }
        Command::Cutoff { deltas, max_order, out } => {
            let spec = CutoffSpec {
                deltas: deltas.clone(),
                orders: (0..=max_order).collect(),
            };
            let report = cutoff_table_study(&spec)?;
            let mut p = Table::new();
            p.insert("study".into(), "cutoff_table".into());
            p.insert("deltas".into(), list(&deltas));
            p.insert("max_order".into(), Value::Integer(max_order as i64));
            finish_study(&out, &report, p)
        }
        Command::Consistency { n, deltas, orders, out } => {
            let spec = ConsistencySpec {
                n,
                deltas: deltas.clone(),
                orders: orders.clone(),
                ..Default::default()
            };
            let report = consistency_rate_study(&spec)?;
            let mut p = Table::new();
            p.insert("study".into(), "consistency_rate".into());
            p.insert("n".into(), (n as i64).into());
            p.insert("field".into(), spec.field.kind_name().into());
            p.insert("deltas".into(), list(&deltas));
            p.insert("orders".into(), orders_value(&orders));
            finish_study(&out, &report, p)
        }
        Command::Compare { model, reference } => {
            let m = load_run_dir(&model)?;
            let r = load_run_dir(&reference)?;
            let err = model_error(&m.trajectory, &r.trajectory)?;
            println!("snapshots     {}", m.trajectory.len());
            println!("horizon       {:.16e}", err.horizon);
            println!("l2_final      {:.16e}", err.l2_final);
            println!("l2l2          {:.16e}", err.l2l2);
            println!("h1_timeavg    {:.16e}", err.h1_timeavg);
            Ok(())
        }
        Command::Verify { dir } => {
            let m = io::Manifest::read(&dir)?;
            let bad = m.verify(&dir)?;
            if bad.is_empty() {
                println!("{} files match {}", m.files.len(), io::manifest::MANIFEST_NAME);
                Ok(())
            } else {
                Err(Error::Format(format!("modified files: {}", bad.join(", "))))
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
