mod pipeline;

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use qccp_core::facial::{build_w, flow_residual, orthonormalize};
use qccp_core::heuristics::SqParams;
use qccp_core::instance::{gen_erdos_renyi, gen_manhattan, gen_reload, read_instance, write_instance};
use qccp_core::oracle::brute_opt;
use qccp_core::projections::{DykstraParams, Exec};
use qccp_core::solver::{load_checkpoint, save_checkpoint, DykstraKind, PrsmParams, SolverState};
use qccp_core::{CostModel, Level, Method, QccpError};

use pipeline::{prepare, run_lb, run_ub, run_ub_all, UbMethod, UbOptions};

/// Bounds for the quadratic cycle cover problem.
///
/// Solver defaults: beta = ceil(m/n), gamma1 = 0.9, gamma2 = 1.09 (PRSM),
/// gamma = 1.6 (ADMM), K = 5 Dykstra passes, eps_stag = 1e-5,
/// eps_proj = 1e-8, eps_prsm = 1e-6 (1e-4 once cuts are present).
#[derive(Parser)]
#[command(name = "qccp", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a random instance.
    Gen(GenArgs),
    /// Print the size and feasibility of an instance.
    Check { file: PathBuf },
    /// Remove arcs that lie on no cycle cover.
    Reduce {
        file: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Build the facial reduction basis and report its size.
    Basis { file: PathBuf },
    /// Semidefinite lower bound.
    Lb(LbArgs),
    /// Upper bound from a heuristic.
    Ub(UbArgs),
    /// Exact optimum by enumeration (n <= 10).
    Brute { file: PathBuf },
    /// Lower and upper bounds for many instances as CSV.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    Er,
    Reload,
    Manhattan,
}

#[derive(Clone, Copy, ValueEnum)]
enum Costs {
    Uniform,
    Reload,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, value_enum)]
    family: Family,
    #[arg(long, default_value_t = 10)]
    n: usize,
    /// Arc density for `er`.
    #[arg(long, default_value_t = 0.5)]
    p: f64,
    /// Cost model for `er`.
    #[arg(long, value_enum, default_value = "uniform")]
    costs: Costs,
    /// Largest reload cost for `reload`.
    #[arg(long, default_value_t = 10)]
    d: u32,
    #[arg(long, default_value_t = 20)]
    colors: usize,
    /// Torus dimensions for `manhattan`, e.g. `5,5`.
    #[arg(long, value_delimiter = ',', default_value = "5,5")]
    dims: Vec<usize>,
    /// Largest cost for `manhattan`.
    #[arg(long, default_value_t = 10)]
    max_cost: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum LevelArg {
    S1,
    S2,
    S3,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Prsm,
    Admm,
}

#[derive(Clone, Copy, ValueEnum)]
enum DykstraArg {
    Cyclic,
    Parallel,
}

#[derive(Args, Clone)]
struct SolverArgs {
    #[arg(long, value_enum, default_value = "s3")]
    level: LevelArg,
    #[arg(long, default_value_t = 150)]
    num_cuts: usize,
    #[arg(long, default_value_t = 1000)]
    max_iter: usize,
    #[arg(long, default_value_t = 2500)]
    max_total_iter: usize,
    #[arg(long, default_value_t = 1e-6)]
    eps_prsm: f64,
    /// Penalty parameter; defaults to ceil(m/n).
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long, value_enum, default_value = "cyclic")]
    dykstra: DykstraArg,
    /// Averaging weight for the parallel Dykstra variant.
    #[arg(long, default_value_t = 0.5)]
    theta: f64,
    /// Run cut projections inside a cluster on several threads.
    #[arg(long)]
    threads: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl SolverArgs {
    fn params(&self, method: MethodArg) -> PrsmParams {
        PrsmParams {
            beta: self.beta,
            eps_prsm: self.eps_prsm,
            max_iter: self.max_iter,
            max_total_iter: self.max_total_iter,
            num_cuts: self.num_cuts,
            dykstra: DykstraParams {
                exec: if self.threads { Exec::Parallel } else { Exec::Sequential },
                ..DykstraParams::default()
            },
            dykstra_kind: match self.dykstra {
                DykstraArg::Cyclic => DykstraKind::Cyclic,
                DykstraArg::Parallel => DykstraKind::Parallel { theta: self.theta },
            },
            method: match method {
                MethodArg::Prsm => Method::Prsm,
                MethodArg::Admm => Method::Admm,
            },
            level: match self.level {
                LevelArg::S1 => Level::S1,
                LevelArg::S2 => Level::S2,
                LevelArg::S3 => Level::S3,
            },
            seed: self.seed,
            ..PrsmParams::default()
        }
    }

    fn level_name(&self) -> &'static str {
        match self.level {
            LevelArg::S1 => "lb-s1",
            LevelArg::S2 => "lb-s2",
            LevelArg::S3 => "lb-s3",
        }
    }
}

#[derive(Args)]
struct LbArgs {
    file: PathBuf,
    #[arg(long, value_enum, default_value = "prsm")]
    method: MethodArg,
    #[command(flatten)]
    solver: SolverArgs,
    /// Save the final solver state.
    #[arg(long)]
    checkpoint_out: Option<PathBuf>,
    /// Warm start from a saved solver state.
    #[arg(long)]
    checkpoint_in: Option<PathBuf>,
    /// Per-iteration CSV: k, objective, primal_res, dual_res, lb.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Dual bound frequency in the trace (0 leaves the column empty).
    #[arg(long, default_value_t = 10)]
    lb_every: usize,
}

#[derive(Args, Clone)]
struct HeurArgs {
    /// Trials for undersampling and oversampling.
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, default_value_t = 30)]
    sq_trials: usize,
    /// Q-learning rates; one run per value, pools merged.
    #[arg(long = "sq-alpha", value_delimiter = ',', default_value = "0.3,0.5,0.7")]
    sq_alpha: Vec<f64>,
    #[arg(long, default_value_t = 20.0)]
    sq_delta: f64,
    #[arg(long, default_value_t = 1.0)]
    sq_beta: f64,
    /// Round budget for oversampling; defaults to the high-probability bound.
    #[arg(long)]
    os_max_rounds: Option<usize>,
}

impl HeurArgs {
    fn options(&self, seed: u64) -> UbOptions {
        UbOptions {
            trials: self.trials,
            os_max_rounds: self.os_max_rounds,
            sq: SqParams {
                delta: self.sq_delta,
                beta: self.sq_beta,
                trials: self.sq_trials,
                ..SqParams::default()
            },
            sq_alphas: self.sq_alpha.clone(),
            seed,
        }
    }
}

#[derive(Args)]
struct UbArgs {
    file: PathBuf,
    #[arg(long, value_enum, default_value = "hybrid")]
    method: UbMethod,
    #[command(flatten)]
    heur: HeurArgs,
    /// Solver state to round; otherwise a lower bound run is done first.
    #[arg(long)]
    from: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "prsm")]
    solver: MethodArg,
    #[command(flatten)]
    solver_args: SolverArgs,
}

#[derive(Args)]
struct BenchArgs {
    files: Vec<PathBuf>,
    #[arg(long, value_enum, default_value = "prsm")]
    solver: MethodArg,
    #[command(flatten)]
    solver_args: SolverArgs,
    #[command(flatten)]
    heur: HeurArgs,
    /// Leave the time column empty so output is reproducible byte for byte.
    #[arg(long)]
    omit_timing: bool,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

fn exit_code(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<QccpError>() {
        Some(QccpError::InstanceInfeasible) => 2,
        Some(
            QccpError::NoConvergence { .. }
            | QccpError::RankDeficient { .. }
            | QccpError::SimplexCycleGuard(_)
            | QccpError::Unbounded
            | QccpError::W0NearZero(_)
            | QccpError::RoundBudgetExceeded(_)
            | QccpError::NoFeasibleExtension
            | QccpError::EmptyPool
            | QccpError::SppInfeasible,
        ) => 3,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn read(path: &Path) -> anyhow::Result<qccp_core::QcpInstance> {
    read_instance(path).with_context(|| format!("reading {}", path.display()))
}

fn warn_all(warnings: &[String]) {
    for w in warnings {
        eprintln!("warning: {w}");
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.cmd {
        Cmd::Gen(a) => {
            let inst = match a.family {
                Family::Er => {
                    let model = match a.costs {
                        Costs::Uniform => CostModel::Uniform,
                        Costs::Reload => CostModel::Reload,
                    };
                    gen_erdos_renyi(a.n, a.p, model, a.seed)?
                }
                Family::Reload => gen_reload(a.n, a.d, a.colors, a.seed)?,
                Family::Manhattan => gen_manhattan(&a.dims, a.max_cost, a.seed)?,
            };
            write_instance(&inst, &a.output)?;
            println!("wrote {}: n={} m={}", a.output.display(), inst.n(), inst.m());
        }
        Cmd::Check { file } => {
            let inst = read(&file)?;
            println!("n={}", inst.n());
            println!("m={}", inst.m());
            println!("costs={}", inst.num_costs());
            let p = prepare(&inst)?;
            println!("feasible=yes");
            println!("unused_arcs={}", inst.m() - p.inst.m());
        }
        Cmd::Reduce { file, output } => {
            let inst = read(&file)?;
            let p = prepare(&inst)?;
            write_instance(&p.inst, &output)?;
            println!(
                "removed {} arcs: n={} m={}",
                inst.m() - p.inst.m(),
                p.inst.n(),
                p.inst.m()
            );
        }
        Cmd::Basis { file } => {
            let inst = read(&file)?;
            let p = prepare(&inst)?;
            let b = build_w(&p.inst.graph)?;
            let exact = b
                .int_columns
                .iter()
                .all(|c| flow_residual(&p.inst.graph, c).iter().all(|&v| v == 0));
            let q = orthonormalize(&b)?;
            let wtw = q.w.tmatmul(&q.w);
            let mut err = 0.0f64;
            for i in 0..wtw.rows() {
                for j in 0..wtw.cols() {
                    let want = if i == j { 1.0 } else { 0.0 };
                    err = err.max((wtw[(i, j)] - want).abs());
                }
            }
            println!("m={}", p.inst.m());
            println!("alpha={}", b.alpha);
            println!("columns={}", b.cols());
            println!("null_space_exact={}", if exact { "yes" } else { "no" });
            println!("orthonormality_error={err:.3e}");
        }
        Cmd::Lb(a) => {
            let inst = read(&a.file)?;
            let p = prepare(&inst)?;
            let mut params = a.solver.params(a.method);
            if a.trace.is_some() {
                params.lb_every = a.lb_every;
            }
            let warm = a.checkpoint_in.as_ref().map(load_checkpoint).transpose()?;
            let (state, rep) = run_lb(&p, &params, warm)?;
            warn_all(&rep.warnings);
            if let Some(path) = &a.checkpoint_out {
                save_checkpoint(&state, path)?;
            }
            if let Some(path) = &a.trace {
                write_trace(&state, path)?;
            }
            println!("lb={}", rep.lb);
            println!("lb_rounded={}", rep.lb_rounded);
            println!("objective={}", rep.objective);
            println!("iterations={}", rep.iterations);
            println!("rounds={}", rep.rounds);
            println!("primal_res={:.3e}", rep.primal);
            println!("dual_res={:.3e}", rep.dual);
            println!("cuts={}", rep.cuts);
            println!("stop={:?}", rep.stop);
        }
        Cmd::Ub(a) => {
            let inst = read(&a.file)?;
            let p = prepare(&inst)?;
            let state: SolverState = match &a.from {
                Some(path) => load_checkpoint(path)?,
                None => {
                    let (state, rep) = run_lb(&p, &a.solver_args.params(a.solver), None)?;
                    warn_all(&rep.warnings);
                    state
                }
            };
            if state.y.order() != p.inst.m() + 1 {
                bail!("solver state does not match the reduced instance");
            }
            let ub = run_ub(&p, &state, a.method, &a.heur.options(a.solver_args.seed))?;
            println!("ub={}", ub.value);
            let arcs: Vec<String> = p.original_arcs(&ub.cover).iter().map(|e| e.to_string()).collect();
            println!("cover={}", arcs.join(" "));
        }
        Cmd::Brute { file } => {
            let inst = read(&file)?;
            let (opt, cover) = brute_opt(&inst)?;
            println!("opt={opt}");
            let arcs: Vec<String> = cover.arcs().iter().map(|e| (e + 1).to_string()).collect();
            println!("cover={}", arcs.join(" "));
        }
        Cmd::Bench(a) => {
            if a.files.is_empty() {
                bail!("bench needs at least one instance file");
            }
            let params = a.solver_args.params(a.solver);
            let opts = a.heur.options(a.solver_args.seed);
            let mut csv = String::from(pipeline::CSV_HEADER);
            csv.push('\n');
            for file in &a.files {
                let inst = read(file)?;
                let name = file
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_default();
                let p = prepare(&inst)?;
                let t = Instant::now();
                let (state, rep) = run_lb(&p, &params, None)?;
                let lb_secs = t.elapsed().as_secs_f64();
                for w in &rep.warnings {
                    eprintln!("warning: {name}: {w}");
                }
                let ubs = run_ub_all(&p, &state, &opts)?;
                for r in &ubs {
                    if let Err(e) = &r.bound {
                        eprintln!("warning: {name}: {} failed: {e}", r.method.name());
                    }
                }
                csv.push_str(&pipeline::bench_rows(
                    &name,
                    &p,
                    a.solver_args.level_name(),
                    &rep,
                    lb_secs,
                    &ubs,
                    a.omit_timing,
                ));
            }
            match &a.output {
                Some(path) => fs::write(path, csv)?,
                None => std::io::stdout().write_all(csv.as_bytes())?,
            }
        }
    }
    Ok(())
}

fn write_trace(state: &SolverState, path: &Path) -> anyhow::Result<()> {
    let mut s = String::from("k,objective,primal_res,dual_res,lb\n");
    for h in &state.history {
        let lb = h.lb.map(|v| v.to_string()).unwrap_or_default();
        s.push_str(&format!("{},{},{:e},{:e},{}\n", h.k, h.objective, h.primal, h.dual, lb));
    }
    fs::write(path, s)?;
    Ok(())
}
