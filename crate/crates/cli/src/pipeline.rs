//! Lower and upper bound pipeline shared by `lb`, `ub` and `bench`.

use std::fmt::Write as _;
use std::time::Instant;

use qccp_core::facial::{build_w, orthonormalize};
use qccp_core::heuristics::{
    sq_learning_merged, ub_euclidean, ub_hybrid, ub_oversample, ub_undersample, x_out, Source,
    SqParams, UpperBound,
};
use qccp_core::instance::preprocess;
use qccp_core::solver::{solve_cpalm, PrsmParams, SolveReport, SolverState};
use qccp_core::{CycleCover, QcpInstance, Result};

/// Reduced instance together with the map back to the original arcs.
pub struct Prepared {
    pub inst: QcpInstance,
    pub new_to_old: Vec<usize>,
}

pub fn prepare(inst: &QcpInstance) -> Result<Prepared> {
    let (inst, remap) = preprocess(inst)?;
    Ok(Prepared {
        inst,
        new_to_old: remap.new_to_old,
    })
}

impl Prepared {
    /// Cover arcs in the original, 1-based numbering.
    pub fn original_arcs(&self, c: &CycleCover) -> Vec<usize> {
        let mut v: Vec<usize> = c.arcs().iter().map(|&e| self.new_to_old[e] + 1).collect();
        v.sort_unstable();
        v
    }
}

pub fn run_lb(
    p: &Prepared,
    params: &PrsmParams,
    warm: Option<SolverState>,
) -> Result<(SolverState, SolveReport)> {
    let basis = orthonormalize(&build_w(&p.inst.graph)?)?;
    solve_cpalm(&p.inst, &basis, params, warm)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum UbMethod {
    Eb,
    Us,
    Os,
    Sq,
    Hybrid,
}

impl UbMethod {
    pub fn name(self) -> &'static str {
        match self {
            UbMethod::Eb => "eb",
            UbMethod::Us => "us",
            UbMethod::Os => "os",
            UbMethod::Sq => "sq",
            UbMethod::Hybrid => "hybrid",
        }
    }
}

#[derive(Clone, Debug)]
pub struct UbOptions {
    pub trials: usize,
    pub os_max_rounds: Option<usize>,
    pub sq: SqParams,
    pub sq_alphas: Vec<f64>,
    pub seed: u64,
}

/// Outcome of one upper-bound method.
pub struct UbRow {
    pub method: UbMethod,
    pub bound: Result<UpperBound>,
    pub seconds: f64,
}

/// Runs every heuristic in order EB, US, OS, SQ, hybrid.
pub fn run_ub_all(p: &Prepared, state: &SolverState, opt: &UbOptions) -> Result<Vec<UbRow>> {
    let inst = &p.inst;
    let xo = x_out(&state.y);
    let mut rows = Vec::new();

    let t = Instant::now();
    let eb = ub_euclidean(inst, &xo)?;
    rows.push(UbRow {
        method: UbMethod::Eb,
        bound: Ok(eb.clone()),
        seconds: t.elapsed().as_secs_f64(),
    });

    let t = Instant::now();
    let us = ub_undersample(inst, &xo, opt.trials, opt.seed);
    let us_secs = t.elapsed().as_secs_f64();
    let t = Instant::now();
    let os = ub_oversample(inst, &state.y, opt.trials, opt.os_max_rounds, opt.seed.wrapping_add(1));
    let os_secs = t.elapsed().as_secs_f64();
    let t = Instant::now();
    let sq_pool = sq_learning_merged(inst, &state.y, &opt.sq, &opt.sq_alphas, opt.seed.wrapping_add(2))?;
    let sq = sq_pool.best_cover(inst);
    let sq_secs = t.elapsed().as_secs_f64();

    let t = Instant::now();
    let mut covers: Vec<(Source, &CycleCover)> = vec![(Source::Euclidean, &eb.cover)];
    if let Ok(r) = &us {
        covers.extend(r.covers.iter().map(|c| (Source::Undersampling, c)));
    }
    if let Ok(r) = &os {
        covers.extend(r.covers.iter().map(|c| (Source::Oversampling, c)));
    }
    let (_, hy) = ub_hybrid(inst, &sq_pool, &covers)?;
    let hy_secs = t.elapsed().as_secs_f64() + us_secs + os_secs + sq_secs;

    rows.push(UbRow {
        method: UbMethod::Us,
        bound: us.map(|r| r.best),
        seconds: us_secs,
    });
    rows.push(UbRow {
        method: UbMethod::Os,
        bound: os.map(|r| r.best),
        seconds: os_secs,
    });
    rows.push(UbRow {
        method: UbMethod::Sq,
        bound: sq,
        seconds: sq_secs,
    });
    rows.push(UbRow {
        method: UbMethod::Hybrid,
        bound: Ok(hy),
        seconds: hy_secs,
    });
    Ok(rows)
}

/// Runs one heuristic. The hybrid needs all the others anyway.
pub fn run_ub(p: &Prepared, state: &SolverState, method: UbMethod, opt: &UbOptions) -> Result<UpperBound> {
    let inst = &p.inst;
    let xo = x_out(&state.y);
    match method {
        UbMethod::Eb => ub_euclidean(inst, &xo),
        UbMethod::Us => ub_undersample(inst, &xo, opt.trials, opt.seed).map(|r| r.best),
        UbMethod::Os => ub_oversample(inst, &state.y, opt.trials, opt.os_max_rounds, opt.seed.wrapping_add(1)).map(|r| r.best),
        UbMethod::Sq => sq_learning_merged(inst, &state.y, &opt.sq, &opt.sq_alphas, opt.seed.wrapping_add(2))?.best_cover(inst),
        UbMethod::Hybrid => {
            let rows = run_ub_all(p, state, opt)?;
            rows.into_iter()
                .find(|r| r.method == UbMethod::Hybrid)
                .expect("hybrid row")
                .bound
        }
    }
}

pub const CSV_HEADER: &str = "instance,n,m,method,bound,time_s,iters,primal_res,dual_res,cuts,gap_pct";

fn time_field(secs: f64, omit: bool) -> String {
    if omit {
        String::new()
    } else {
        format!("{secs:.3}")
    }
}

/// Relative gap in percent against the rounded lower bound; empty when the
/// bound is not positive.
pub fn gap_pct(ub: f64, lb: f64) -> String {
    if lb > 0.0 {
        format!("{:.2}", 100.0 * (ub - lb) / lb)
    } else {
        String::new()
    }
}

/// CSV rows for one instance: the lower bound first, then one row per
/// heuristic.
pub fn bench_rows(
    name: &str,
    p: &Prepared,
    lb_name: &str,
    report: &SolveReport,
    lb_secs: f64,
    ubs: &[UbRow],
    omit_timing: bool,
) -> String {
    let (n, m) = (p.inst.n(), p.inst.m());
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{name},{n},{m},{lb_name},{},{},{},{:.3e},{:.3e},{},",
        report.lb_rounded,
        time_field(lb_secs, omit_timing),
        report.iterations,
        report.primal,
        report.dual,
        report.cuts
    );
    for r in ubs {
        let (bound, gap) = match &r.bound {
            Ok(ub) => (ub.value.to_string(), gap_pct(ub.value, report.lb_rounded)),
            Err(_) => (String::new(), String::new()),
        };
        let _ = writeln!(
            out,
            "{name},{n},{m},{},{bound},{},,,,,{gap}",
            r.method.name(),
            time_field(r.seconds, omit_timing)
        );
    }
    out
}
