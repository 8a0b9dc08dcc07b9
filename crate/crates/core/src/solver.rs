//! ADMM / PRSM on the facially reduced relaxation, the cutting-plane outer
//! loop, and the dual lower bound.

use std::io::{Read, Write};
use std::path::Path;

use crate::cuts::{cluster, separate, CutPool, TriangleCut};
use crate::error::{QccpError, Result};
use crate::facial::Basis;
use crate::instance::QcpInstance;
use crate::linalg::{congruence, congruence_t, psd_project, SymMat};
use crate::lp::solve_lb_lp;
use crate::projections::{
    dykstra_cyclic, dykstra_parallel, DykstraParams, PolySetY, SetKind,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Prsm,
    Admm,
}

/// Which relaxation is solved: S1 keeps only the affine arrow constraints,
/// S2 adds bounds and the zero pattern, S3 adds triangle cuts.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Level {
    S1,
    S2,
    S3,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DykstraKind {
    Cyclic,
    Parallel { theta: f64 },
}

#[derive(Clone, Debug)]
pub struct PrsmParams {
    /// Penalty; `None` means `⌈m / n⌉`.
    pub beta: Option<f64>,
    /// ADMM step size.
    pub gamma: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub eps_prsm: f64,
    /// Tolerance once the cut pool is non-empty.
    pub eps_prsm_cuts: f64,
    pub eps_stag: f64,
    pub max_iter: usize,
    /// Iteration cap per round once cuts exist.
    pub max_iter_cuts: usize,
    pub max_total_iter: usize,
    pub max_stag_iter: usize,
    pub num_cuts: usize,
    pub dykstra: DykstraParams,
    pub dykstra_kind: DykstraKind,
    pub method: Method,
    pub level: Level,
    /// Seed for the clustering heuristic.
    pub seed: u64,
    /// Compute the dual bound every this many iterations for the history
    /// (0 disables).
    pub lb_every: usize,
}

impl Default for PrsmParams {
    fn default() -> Self {
        PrsmParams {
            beta: None,
            gamma: 1.6,
            gamma1: 0.9,
            gamma2: 1.09,
            eps_prsm: 1e-6,
            eps_prsm_cuts: 1e-4,
            eps_stag: 1e-5,
            max_iter: 1000,
            max_iter_cuts: 500,
            max_total_iter: 2500,
            max_stag_iter: 50,
            num_cuts: 150,
            dykstra: DykstraParams::default(),
            dykstra_kind: DykstraKind::Cyclic,
            method: Method::Prsm,
            level: Level::S2,
            seed: 0,
            lb_every: 0,
        }
    }
}

impl PrsmParams {
    pub fn beta_for(&self, inst: &QcpInstance) -> f64 {
        self.beta
            .unwrap_or_else(|| (inst.m() as f64 / inst.n() as f64).ceil())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HistoryEntry {
    pub k: usize,
    pub objective: f64,
    pub primal: f64,
    pub dual: f64,
    pub lb: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverState {
    pub z: SymMat,
    pub y: SymMat,
    pub s: SymMat,
    pub k: usize,
    pub pool: CutPool,
    pub history: Vec<HistoryEntry>,
    pub stag_iter: usize,
}

impl SolverState {
    /// `Z = Y = S = 0`.
    pub fn new(m: usize, cols: usize) -> Self {
        SolverState {
            z: SymMat::zeros(cols),
            y: SymMat::zeros(m + 1),
            s: SymMat::zeros(m + 1),
            k: 0,
            pool: CutPool::new(),
            history: Vec::new(),
            stag_iter: 0,
        }
    }

    pub fn last(&self) -> Option<&HistoryEntry> {
        self.history.last()
    }
}

/// The polyhedral set and cut pool an iteration projects onto.
pub struct Problem<'a> {
    pub q_hat: &'a SymMat,
    pub basis: &'a Basis,
    pub set: &'a PolySetY,
    pub beta: f64,
}

/// Result of one iteration besides the updated state.
#[derive(Clone, Copy, Debug)]
pub struct StepInfo {
    pub primal: f64,
    pub dual: f64,
    pub objective: f64,
    pub dykstra_converged: bool,
}

fn project_polyhedral(
    m: &SymMat,
    prob: &Problem,
    pool: &CutPool,
    params: &PrsmParams,
) -> (SymMat, bool) {
    if pool.is_empty() {
        return (prob.set.project(m), true);
    }
    let out = match params.dykstra_kind {
        DykstraKind::Cyclic => dykstra_cyclic(m, prob.set, pool, &params.dykstra),
        DykstraKind::Parallel { theta } => {
            dykstra_parallel(m, prob.set, pool, theta, &params.dykstra)
        }
    };
    (out.x, out.converged)
}

fn z_update(state: &SolverState, prob: &Problem) -> Result<(SymMat, SymMat)> {
    let mut a = state.s.clone();
    a.scale(1.0 / prob.beta);
    a.axpy(1.0, &state.y);
    let z = psd_project(&congruence_t(&prob.basis.w, &a))?;
    let v = congruence(&prob.basis.w, &z);
    Ok((z, v))
}

fn finish_step(
    state: &mut SolverState,
    prob: &Problem,
    z: SymMat,
    v: &SymMat,
    y_new: SymMat,
    dykstra_converged: bool,
) -> StepInfo {
    let primal = y_new.sub(v).frobenius();
    let dual = prob.beta * congruence_t(&prob.basis.w, &y_new.sub(&state.y)).frobenius();
    let objective = prob.q_hat.inner(&y_new);
    state.z = z;
    state.y = y_new;
    state.k += 1;
    StepInfo {
        primal,
        dual,
        objective,
        dykstra_converged,
    }
}

/// One Peaceman–Rachford iteration with two dual updates.
pub fn prsm_step(state: &mut SolverState, prob: &Problem, params: &PrsmParams) -> Result<StepInfo> {
    let (z, v) = z_update(state, prob)?;
    let beta = prob.beta;
    // S½ = S + γ₁β(Y − V)
    let mut s_half = state.s.clone();
    s_half.axpy(params.gamma1 * beta, &state.y.sub(&v));
    // Y = P(V − (Q̂ + S½)/β)
    let mut target = v.clone();
    target.axpy(-1.0 / beta, prob.q_hat);
    target.axpy(-1.0 / beta, &s_half);
    let (y_new, ok) = project_polyhedral(&target, prob, &state.pool, params);
    s_half.axpy(params.gamma2 * beta, &y_new.sub(&v));
    state.s = s_half;
    Ok(finish_step(state, prob, z, &v, y_new, ok))
}

/// One ADMM iteration with a single dual update of step `γ`.
pub fn admm_step(state: &mut SolverState, prob: &Problem, params: &PrsmParams) -> Result<StepInfo> {
    let (z, v) = z_update(state, prob)?;
    let beta = prob.beta;
    let mut target = v.clone();
    target.axpy(-1.0 / beta, prob.q_hat);
    target.axpy(-1.0 / beta, &state.s);
    let (y_new, ok) = project_polyhedral(&target, prob, &state.pool, params);
    state.s.axpy(params.gamma * beta, &y_new.sub(&v));
    Ok(finish_step(state, prob, z, &v, y_new, ok))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stop {
    Continue,
    Converged,
    IterCap,
    Stagnated,
}

/// Inputs of the stopping test for the current round.
#[derive(Clone, Copy, Debug)]
pub struct StopInput {
    pub primal: f64,
    pub dual: f64,
    /// `|⟨Q̂, Y^{k+1}⟩ − ⟨Q̂, Y^k⟩|`, if a previous objective exists.
    pub objective_change: Option<f64>,
    /// Iterations performed in this round.
    pub round_iter: usize,
    pub cuts_active: bool,
}

/// Applies the three stopping rules; updates the stagnation counter.
pub fn check_stop(inp: &StopInput, stag_iter: &mut usize, params: &PrsmParams) -> Stop {
    let (eps, cap) = if inp.cuts_active {
        (params.eps_prsm_cuts, params.max_iter_cuts)
    } else {
        (params.eps_prsm, params.max_iter)
    };
    match inp.objective_change {
        Some(d) if d < params.eps_stag => *stag_iter += 1,
        _ => *stag_iter = 0,
    }
    if inp.primal.min(inp.dual) < eps {
        Stop::Converged
    } else if *stag_iter > params.max_stag_iter {
        Stop::Stagnated
    } else if inp.round_iter >= cap {
        Stop::IterCap
    } else {
        Stop::Continue
    }
}

/// `S − W P_{S+}(WᵀSW) Wᵀ`, the nearest matrix with `WᵀSW ⪯ 0`
/// (`W` orthonormal).
pub fn dual_project(s: &SymMat, basis: &Basis) -> Result<SymMat> {
    let pos = psd_project(&congruence_t(&basis.w, s))?;
    Ok(s.sub(&congruence(&basis.w, &pos)))
}

/// Dual bound `min_{Y ∈ Y_T} ⟨Q̂ + P(S), Y⟩`, valid for any `S`.
pub fn lower_bound(s: &SymMat, pool: &CutPool, q_hat: &SymMat, basis: &Basis, set: &PolySetY) -> Result<f64> {
    let mut c = dual_project(s, basis)?;
    c.axpy(1.0, q_hat);
    solve_lb_lp(&c, pool, set)
}

/// Rounds a bound up for integer data, after a small guard against
/// floating-point overshoot.
pub fn round_bound(lb: f64) -> f64 {
    (lb - 1e-6 * (1.0 + lb.abs())).ceil()
}

#[derive(Clone, Debug)]
pub struct SolveReport {
    pub lb: f64,
    pub lb_rounded: f64,
    pub objective: f64,
    pub iterations: usize,
    pub rounds: usize,
    pub primal: f64,
    pub dual: f64,
    pub cuts: usize,
    pub stop: Stop,
    pub warnings: Vec<String>,
}

/// Full cutting-plane augmented Lagrangian run. `warm` continues from a
/// previous state (including its cut pool).
pub fn solve_cpalm(
    inst: &QcpInstance,
    basis: &Basis,
    params: &PrsmParams,
    warm: Option<SolverState>,
) -> Result<(SolverState, SolveReport)> {
    if !basis.orthonormal {
        return Err(QccpError::Validation("solver needs an orthonormal basis".into()));
    }
    let q_hat = inst.q_hat();
    let kind = if params.level == Level::S1 {
        SetKind::Relaxed
    } else {
        SetKind::Full
    };
    let set = PolySetY::new(&inst.graph, kind);
    let lb_set = PolySetY::new(&inst.graph, SetKind::Full);
    let prob = Problem {
        q_hat: &q_hat,
        basis,
        set: &set,
        beta: params.beta_for(inst),
    };
    let mut state = warm.unwrap_or_else(|| SolverState::new(inst.m(), basis.cols()));
    if state.y.order() != inst.m() + 1 || state.z.order() != basis.cols() {
        return Err(QccpError::Checkpoint("state dimensions do not match the instance".into()));
    }
    if params.level != Level::S3 {
        state.pool = CutPool::new();
    } else if !state.pool.is_empty() && state.pool.clusters.is_empty() {
        cluster(&mut state.pool, params.seed);
    }
    let mut warnings = Vec::new();
    let mut rounds = 0;
    let mut stop;
    let mut last = StepInfo {
        primal: f64::INFINITY,
        dual: f64::INFINITY,
        objective: q_hat.inner(&state.y),
        dykstra_converged: true,
    };
    let mut dykstra_misses = 0usize;
    'outer: loop {
        rounds += 1;
        let mut round_iter = 0;
        loop {
            if state.k >= params.max_total_iter {
                stop = Stop::IterCap;
                break 'outer;
            }
            let prev_obj = state.last().map(|h| h.objective);
            let info = match params.method {
                Method::Prsm => prsm_step(&mut state, &prob, params)?,
                Method::Admm => admm_step(&mut state, &prob, params)?,
            };
            if !state.y.is_finite() || !state.s.is_finite() {
                return Err(QccpError::NoConvergence {
                    what: "splitting iteration (non-finite iterate)",
                    iterations: state.k,
                });
            }
            if !info.dykstra_converged {
                dykstra_misses += 1;
            }
            round_iter += 1;
            let lb = if params.lb_every > 0 && state.k % params.lb_every == 0 {
                Some(lower_bound(&state.s, &state.pool, &q_hat, basis, &lb_set)?)
            } else {
                None
            };
            state.history.push(HistoryEntry {
                k: state.k,
                objective: info.objective,
                primal: info.primal,
                dual: info.dual,
                lb,
            });
            last = info;
            let inp = StopInput {
                primal: info.primal,
                dual: info.dual,
                objective_change: prev_obj.map(|p| (info.objective - p).abs()),
                round_iter,
                cuts_active: !state.pool.is_empty(),
            };
            stop = check_stop(&inp, &mut state.stag_iter, params);
            if stop != Stop::Continue {
                break;
            }
        }
        if params.level != Level::S3 {
            break;
        }
        let new = separate(&state.y, params.num_cuts, &state.pool);
        if new.is_empty() {
            break;
        }
        state.pool.extend(new);
        cluster(&mut state.pool, params.seed.wrapping_add(rounds as u64));
        state.stag_iter = 0;
    }
    if dykstra_misses > 0 {
        warnings.push(format!(
            "Dykstra hit its sweep cap in {dykstra_misses} iterations"
        ));
    }
    if stop != Stop::Converged {
        warnings.push(format!("stopped by {stop:?} after {} iterations", state.k));
    }
    let lb = lower_bound(&state.s, &state.pool, &q_hat, basis, &lb_set)?;
    let report = SolveReport {
        lb,
        lb_rounded: round_bound(lb),
        objective: last.objective,
        iterations: state.k,
        rounds,
        primal: last.primal,
        dual: last.dual,
        cuts: state.pool.len(),
        stop,
        warnings,
    };
    Ok((state, report))
}

const MAGIC: &[u8; 8] = b"QCPSTATE";
const VERSION: u32 = 1;

/// Binary checkpoint, all integers and floats little-endian:
/// magic `QCPSTATE`, `u32` version, `u64` order of Y, `u64` order of Z,
/// packed Z, Y, S as `f64`, `u64` iteration count, `u64` stagnation
/// counter, `u64` cut count, then `(e, f, g)` as three `u64` per cut.
pub fn write_checkpoint(state: &SolverState, mut w: impl Write) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(state.y.order() as u64).to_le_bytes())?;
    w.write_all(&(state.z.order() as u64).to_le_bytes())?;
    for m in [&state.z, &state.y, &state.s] {
        for v in m.packed() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    for v in [state.k, state.stag_iter, state.pool.len()] {
        w.write_all(&(v as u64).to_le_bytes())?;
    }
    for c in &state.pool.cuts {
        for a in c.arcs() {
            w.write_all(&(a as u64).to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_checkpoint(mut r: impl Read) -> Result<SolverState> {
    let bad = |m: &str| QccpError::Checkpoint(m.to_string());
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic).map_err(|_| bad("truncated header"))?;
    if &magic != MAGIC {
        return Err(bad("bad magic"));
    }
    let mut b4 = [0u8; 4];
    r.read_exact(&mut b4).map_err(|_| bad("truncated header"))?;
    let version = u32::from_le_bytes(b4);
    if version != VERSION {
        return Err(bad(&format!("unsupported version {version}")));
    }
    let mut u64_ = || -> Result<u64> {
        let mut b = [0u8; 8];
        r.read_exact(&mut b).map_err(|_| bad("truncated body"))?;
        Ok(u64::from_le_bytes(b))
    };
    let dy = u64_()? as usize;
    let dz = u64_()? as usize;
    if dy > 1 << 16 || dz > dy {
        return Err(bad("implausible dimensions"));
    }
    let mut mat = |d: usize| -> Result<SymMat> {
        let v: Result<Vec<f64>> = (0..d * (d + 1) / 2)
            .map(|_| u64_().map(f64::from_bits))
            .collect();
        Ok(SymMat::from_packed(d, v?))
    };
    let z = mat(dz)?;
    let y = mat(dy)?;
    let s = mat(dy)?;
    let k = u64_()? as usize;
    let stag_iter = u64_()? as usize;
    let ncuts = u64_()? as usize;
    let mut cuts = Vec::with_capacity(ncuts.min(1 << 20));
    for _ in 0..ncuts {
        let (e, f, g) = (u64_()? as usize, u64_()? as usize, u64_()? as usize);
        if e + 1 >= dy || f + 1 >= dy || g + 1 >= dy || e == f || f == g || e == g {
            return Err(bad("invalid cut"));
        }
        cuts.push(TriangleCut::new(e, f, g));
    }
    let mut pool = CutPool::new();
    pool.extend(cuts);
    Ok(SolverState {
        z,
        y,
        s,
        k,
        pool,
        history: Vec::new(),
        stag_iter,
    })
}

pub fn save_checkpoint(state: &SolverState, path: impl AsRef<Path>) -> Result<()> {
    let f = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(f);
    write_checkpoint(state, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<SolverState> {
    let f = std::fs::File::open(path)?;
    read_checkpoint(std::io::BufReader::new(f))
}
