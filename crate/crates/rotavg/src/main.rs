use clap::{Args, Parser, Subcommand, ValueEnum};
use rotavg::commands::{
    cmd_average, cmd_compare, cmd_sample, cmd_trace, CommandError, CommandOptions, CommandOutput,
    Method,
};
use rotavg::dataset::RecordKind;
use rotavg::flow::FlowConfig;
use rotavg::means::KarcherConfig;
use rotavg::so3::UnitQuaternion;
use std::path::PathBuf;
use std::process::ExitCode;

/// Rotation averaging on SO(3): consensus flow (kl/klw), projected and
/// geodesic means, synthetic data generation, and convergence traces.
#[derive(Parser)]
#[command(name = "rotavg", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Kl,
    Klw,
    Projected,
    Geodesic,
}

impl From<MethodArg> for Method {
    fn from(value: MethodArg) -> Method {
        match value {
            MethodArg::Kl => Method::Kl,
            MethodArg::Klw => Method::Klw,
            MethodArg::Projected => Method::Projected,
            MethodArg::Geodesic => Method::Geodesic,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Matrix,
    Quat,
}

#[derive(Args)]
struct FlowArgs {
    /// Stopping tolerance on 1 - det(mean).
    #[arg(long, default_value_t = 1e-5)]
    epsilon: f64,
    /// Integration step.
    #[arg(long, default_value_t = 0.01)]
    delta: f64,
    /// Flow-time cap.
    #[arg(long = "t-max", default_value_t = 1000.0)]
    t_max: f64,
    /// Karcher iteration tolerance (radians).
    #[arg(long = "karcher-tolerance", default_value_t = 1e-10)]
    karcher_tolerance: f64,
    /// Karcher iteration cap.
    #[arg(long = "karcher-max-iterations", default_value_t = 100)]
    karcher_max_iterations: usize,
    /// Project slightly off-manifold records (defect up to 1e-3) instead of
    /// rejecting them.
    #[arg(long)]
    repair: bool,
    /// Recorded in report metadata.
    #[arg(long)]
    seed: Option<u64>,
}

impl FlowArgs {
    fn options(&self, out: Option<PathBuf>) -> CommandOptions {
        CommandOptions {
            flow: FlowConfig {
                epsilon: self.epsilon,
                delta: self.delta,
                t_max: self.t_max,
                record_trace: false,
            },
            karcher: KarcherConfig {
                tolerance: self.karcher_tolerance,
                max_iterations: self.karcher_max_iterations,
            },
            repair: self.repair,
            seed: self.seed,
            out,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Average a dataset with one method.
    Average {
        /// Dataset file (matrix or quaternion records, optional weights).
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum)]
        method: MethodArg,
        #[command(flatten)]
        flow: FlowArgs,
        /// Also write the report as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run every applicable method and report pairwise distances.
    Compare {
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        flow: FlowArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate a von Mises-Fisher dataset (plus a .meta.json sidecar).
    Sample {
        /// Mean direction quaternion w,x,y,z.
        #[arg(long, value_delimiter = ',', num_args = 4, default_values_t = [0.5, 0.5, 0.5, 0.5])]
        mu: Vec<f64>,
        /// Concentration (0 = uniform).
        #[arg(long)]
        kappa: f64,
        /// Number of rotations.
        #[arg(long)]
        n: usize,
        #[arg(long)]
        seed: u64,
        /// Append a uniform [0,1] weight column.
        #[arg(long)]
        weights: bool,
        /// Record representation to write.
        #[arg(long, value_enum, default_value = "matrix")]
        format: FormatArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Integrate the flow and write (t, potential, order parameter) records
    /// plus a sphere-point sidecar for plotting.
    Trace {
        #[arg(long)]
        input: PathBuf,
        /// kl or klw.
        #[arg(long, value_enum)]
        method: MethodArg,
        #[command(flatten)]
        flow: FlowArgs,
        /// Trace file path; sphere points land next to it.
        #[arg(long)]
        out: PathBuf,
    },
}

fn finish(output: CommandOutput, json_out: Option<&PathBuf>) -> ExitCode {
    for warning in &output.warnings {
        eprintln!("warning: {warning}");
    }
    print!("{}", output.report.render_text());
    if let Some(path) = json_out {
        if let Err(err) = output.report.write_json(path) {
            eprintln!("error: {err}");
            return ExitCode::from(1);
        }
    }
    let code = output.exit_code();
    if code != 0 {
        if let Some(status) = output.status {
            eprintln!("flow did not converge: {status}");
        }
    }
    ExitCode::from(code as u8)
}

fn fail(err: CommandError) -> ExitCode {
    eprintln!("error: {err}");
    // Chained causes carry the line/record detail.
    let mut source = std::error::Error::source(&err);
    while let Some(inner) = source {
        eprintln!("  caused by: {inner}");
        source = inner.source();
    }
    ExitCode::from(err.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Average {
            input,
            method,
            flow,
            out,
        } => {
            let options = flow.options(out.clone());
            match cmd_average(&input, method.into(), &options) {
                Ok(output) => finish(output, out.as_ref()),
                Err(err) => fail(err),
            }
        }
        Command::Compare { input, flow, out } => {
            let options = flow.options(out.clone());
            match cmd_compare(&input, &options) {
                Ok(output) => finish(output, out.as_ref()),
                Err(err) => fail(err),
            }
        }
        Command::Sample {
            mu,
            kappa,
            n,
            seed,
            weights,
            format,
            out,
        } => {
            let mu = match UnitQuaternion::new(mu[0], mu[1], mu[2], mu[3]) {
                Ok(q) => q,
                Err(err) => return fail(CommandError::BadMu(err)),
            };
            let kind = match format {
                FormatArg::Matrix => RecordKind::Matrix,
                FormatArg::Quat => RecordKind::Quaternion,
            };
            match cmd_sample(mu, kappa, n, seed, weights, kind, &out) {
                Ok(()) => {
                    println!("wrote {} and {}", out.display(), {
                        rotavg::commands::sidecar_path(&out).display()
                    });
                    ExitCode::SUCCESS
                }
                Err(err) => fail(err),
            }
        }
        Command::Trace {
            input,
            method,
            flow,
            out,
        } => {
            let options = flow.options(None);
            match cmd_trace(&input, method.into(), &options, &out) {
                Ok(output) => finish(output, None),
                Err(err) => fail(err),
            }
        }
    }
}
