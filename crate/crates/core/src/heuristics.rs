//! Upper bounds from a relaxation solution: best Euclidean approximation,
//! randomized under- and oversampling, sequential Q-learning, and the hybrid
//! set-partitioning recombination.

use std::collections::{HashMap, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{QccpError, Result};
use crate::graph::{find_cycle_cover_within, CycleCover, DiGraph};
use crate::instance::QcpInstance;
use crate::linalg::{perron_pair, SymMat};
use crate::lp::{solve_spp, solve_transport, Sense, SppInstance, TransportOutcome, TransportProblem};

/// Resamples per undersampling trial before it counts as failed.
pub const US_RETRIES: usize = 20;

/// Which heuristic produced a cycle.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Source {
    Euclidean,
    Undersampling,
    Oversampling,
    QLearning,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PoolCycle {
    /// Nodes in cycle order, starting at the lowest.
    pub nodes: Vec<usize>,
    /// Arcs in the same order (`arcs[k]` leaves `nodes[k]`).
    pub arcs: Vec<usize>,
    pub cost: f64,
    pub sources: Vec<Source>,
}

/// Deduplicated directed cycles.
#[derive(Clone, Debug, Default)]
pub struct CyclePool {
    pub cycles: Vec<PoolCycle>,
    index: HashMap<Vec<usize>, usize>,
}

impl CyclePool {
    pub fn new() -> Self {
        CyclePool::default()
    }

    pub fn len(&self) -> usize {
        self.cycles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cycles.is_empty()
    }

    /// Adds a cycle given as consecutive arcs. Returns `true` if it is new.
    pub fn add_cycle(&mut self, inst: &QcpInstance, arcs: &[usize], source: Source) -> bool {
        let g = &inst.graph;
        debug_assert!(arcs.len() >= 2);
        let start = (0..arcs.len())
            .min_by_key(|&k| g.tail(arcs[k]))
            .expect("non-empty cycle");
        let rot: Vec<usize> = arcs[start..].iter().chain(&arcs[..start]).copied().collect();
        if let Some(&k) = self.index.get(&rot) {
            let c = &mut self.cycles[k];
            if !c.sources.contains(&source) {
                c.sources.push(source);
                c.sources.sort_unstable();
            }
            return false;
        }
        let nodes = rot.iter().map(|&e| g.tail(e)).collect();
        let cost = inst.cycle_cost(&rot);
        self.index.insert(rot.clone(), self.cycles.len());
        self.cycles.push(PoolCycle {
            nodes,
            arcs: rot,
            cost,
            sources: vec![source],
        });
        true
    }

    pub fn add_cover(&mut self, inst: &QcpInstance, cover: &CycleCover, source: Source) {
        for c in cover.cycles(&inst.graph) {
            self.add_cycle(inst, &c, source);
        }
    }

    pub fn merge(&mut self, inst: &QcpInstance, other: &CyclePool) {
        for c in &other.cycles {
            for &s in &c.sources {
                self.add_cycle(inst, &c.arcs, s);
            }
        }
    }

    pub fn to_spp(&self, n: usize) -> SppInstance {
        SppInstance {
            n,
            columns: self
                .cycles
                .iter()
                .map(|c| {
                    let mut v = c.nodes.clone();
                    v.sort_unstable();
                    v
                })
                .collect(),
            costs: self.cycles.iter().map(|c| c.cost).collect(),
        }
    }

    /// Cheapest exact cover of the nodes by pooled cycles.
    pub fn best_cover(&self, inst: &QcpInstance) -> Result<UpperBound> {
        if self.is_empty() {
            return Err(QccpError::EmptyPool);
        }
        let (cols, _) = solve_spp(&self.to_spp(inst.n()))?;
        let arcs: Vec<usize> = cols
            .iter()
            .flat_map(|&k| self.cycles[k].arcs.iter().copied())
            .collect();
        UpperBound::verified(inst, CycleCover::from_arcs(&inst.graph, &arcs)?)
    }
}

/// A feasible cover and its cost, both re-checked on construction.
#[derive(Clone, Debug, PartialEq)]
pub struct UpperBound {
    pub cover: CycleCover,
    pub value: f64,
}

impl UpperBound {
    pub fn verified(inst: &QcpInstance, cover: CycleCover) -> Result<Self> {
        let x = cover.indicator(inst.m());
        if !CycleCover::is_cover_indicator(&inst.graph, &x) {
            return Err(QccpError::Validation("heuristic produced a non-cover".into()));
        }
        Ok(UpperBound {
            value: inst.quad_cost(&x),
            cover,
        })
    }
}

/// Diagonal of `Y` without the leading entry.
pub fn x_out(y: &SymMat) -> Vec<f64> {
    (1..y.order()).map(|e| y.get(e, e)).collect()
}

fn cover_from_x(g: &DiGraph, x: &[u8]) -> Result<CycleCover> {
    let arcs: Vec<usize> = (0..g.m()).filter(|&e| x[e] == 1).collect();
    CycleCover::from_arcs(g, &arcs)
}

/// Cover maximising `xᵀ x_out` over Conv(P).
pub fn ub_euclidean(inst: &QcpInstance, x_out: &[f64]) -> Result<UpperBound> {
    match solve_transport(&TransportProblem::full(&inst.graph, x_out.to_vec(), Sense::Max)) {
        TransportOutcome::Optimal { x, .. } => UpperBound::verified(inst, cover_from_x(&inst.graph, &x)?),
        TransportOutcome::Infinite => Err(QccpError::InstanceInfeasible),
    }
}

/// Index into `items` drawn with probability proportional to `w`
/// (uniform when every weight is zero).
fn sample_weighted<R: Rng>(w: &[f64], rng: &mut R) -> usize {
    let total: f64 = w.iter().map(|v| v.max(0.0)).sum();
    if !(total > 0.0) || !total.is_finite() {
        return rng.gen_range(0..w.len());
    }
    let mut t = rng.gen::<f64>() * total;
    for (k, v) in w.iter().enumerate() {
        t -= v.max(0.0);
        if t < 0.0 {
            return k;
        }
    }
    // Roundoff: the last positive weight.
    w.iter().rposition(|&v| v > 0.0).unwrap_or(w.len() - 1)
}

fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Outcome of a sampling heuristic over many trials.
#[derive(Clone, Debug)]
pub struct SamplingResult {
    pub best: UpperBound,
    /// Every cover produced, in trial order.
    pub covers: Vec<CycleCover>,
    pub failed_trials: usize,
}

fn keep_best(best: &mut Option<UpperBound>, ub: UpperBound) {
    if best.as_ref().map_or(true, |b| ub.value < b.value) {
        *best = Some(ub);
    }
}

/// One undersampling trial: sample a partial cover from `x_out` and extend
/// it by a max-weight assignment on the uncovered rows.
pub fn undersample_trial<R: Rng>(inst: &QcpInstance, x_out: &[f64], rng: &mut R) -> Result<CycleCover> {
    let g = &inst.graph;
    let n = g.n();
    for _ in 0..US_RETRIES {
        let mut y1 = vec![false; g.m()];
        let mut y2 = vec![false; g.m()];
        for i in 0..n {
            let outs = g.out_arcs(i);
            let w: Vec<f64> = outs.iter().map(|&e| x_out[e]).collect();
            y1[outs[sample_weighted(&w, rng)]] = true;
            let ins = g.in_arcs(i);
            let w: Vec<f64> = ins.iter().map(|&e| x_out[e]).collect();
            y2[ins[sample_weighted(&w, rng)]] = true;
        }
        let y: Vec<bool> = y1.iter().zip(&y2).map(|(a, b)| *a && *b).collect();
        let mut out_rows = vec![true; n];
        let mut in_rows = vec![true; n];
        for e in (0..g.m()).filter(|&e| y[e]) {
            out_rows[g.tail(e)] = false;
            in_rows[g.head(e)] = false;
        }
        let tp = TransportProblem {
            graph: g,
            objective: x_out.to_vec(),
            allowed: vec![true; g.m()],
            out_rows,
            in_rows,
            sense: Sense::Max,
        };
        if let TransportOutcome::Optimal { x, .. } = solve_transport(&tp) {
            let arcs: Vec<usize> = (0..g.m()).filter(|&e| y[e] || x[e] == 1).collect();
            return CycleCover::from_arcs(g, &arcs);
        }
    }
    Err(QccpError::NoFeasibleExtension)
}

pub fn ub_undersample(inst: &QcpInstance, x_out: &[f64], trials: usize, seed: u64) -> Result<SamplingResult> {
    let mut best = None;
    let mut covers = Vec::new();
    let mut failed = 0;
    for t in 0..trials {
        let mut rng = trial_rng(seed, t as u64);
        match undersample_trial(inst, x_out, &mut rng) {
            Ok(c) => {
                keep_best(&mut best, UpperBound::verified(inst, c.clone())?);
                covers.push(c);
            }
            Err(QccpError::NoFeasibleExtension) => failed += 1,
            Err(e) => return Err(e),
        }
    }
    Ok(SamplingResult {
        best: best.ok_or(QccpError::NoFeasibleExtension)?,
        covers,
        failed_trials: failed,
    })
}

/// `r = w̄ / w₀` from the Perron vector of `Y_out`.
pub fn perron_ratio(y_out: &SymMat) -> Result<Vec<f64>> {
    let (_, w) = perron_pair(y_out)?;
    if w[0] < 1e-10 {
        return Err(QccpError::W0NearZero(w[0]));
    }
    Ok(w[1..].iter().map(|v| (v / w[0]).max(0.0)).collect())
}

/// Rounds `k*` after which a cover whose successive pairs all have
/// probability at least `xi` is contained in H with probability `q`.
pub fn round_budget(xi: f64, n: usize, q: f64) -> usize {
    if !(xi > 0.0) {
        return usize::MAX;
    }
    if xi >= 1.0 {
        return 1;
    }
    let k = (1.0 - q.powf(1.0 / n as f64)).ln() / (1.0 - xi).ln();
    k.ceil().max(1.0) as usize
}

/// Lower bound on `min_i r_p(i) r_s(i)` over the best cover of the support
/// of `r`: the square of the largest threshold `t` such that the arcs with
/// `r_e >= t` still contain a cover.
pub fn oversample_xi(g: &DiGraph, r: &[f64]) -> f64 {
    let mut levels: Vec<f64> = r.iter().copied().filter(|&v| v > 0.0).collect();
    levels.sort_by(|a, b| b.total_cmp(a));
    levels.dedup();
    // Largest level whose super-level set admits a cover.
    let ok = |t: f64| {
        let allowed: Vec<bool> = r.iter().map(|&v| v >= t).collect();
        find_cycle_cover_within(g, &allowed).is_some()
    };
    let (mut lo, mut hi) = (0usize, levels.len());
    // Invariant: levels[..lo] fail, levels[hi..] succeed.
    while lo < hi {
        let mid = (lo + hi) / 2;
        if ok(levels[mid]) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    levels.get(lo).map_or(0.0, |t| t * t)
}

/// One oversampling trial. Returns the cover and the number of rounds used.
pub fn oversample_trial<R: Rng>(
    inst: &QcpInstance,
    r: &[f64],
    x_out: &[f64],
    max_rounds: usize,
    rng: &mut R,
) -> Result<(CycleCover, usize)> {
    let g = &inst.graph;
    let mut in_h = vec![false; g.m()];
    for round in 1..=max_rounds {
        // Pairs (e, f) ∈ δ⁻(i) × δ⁺(i) with probability ∝ r_e r_f: the product
        // form lets e and f be drawn independently.
        for i in 0..g.n() {
            let ins = g.in_arcs(i);
            let w: Vec<f64> = ins.iter().map(|&e| r[e]).collect();
            in_h[ins[sample_weighted(&w, rng)]] = true;
            let outs = g.out_arcs(i);
            let w: Vec<f64> = outs.iter().map(|&e| r[e]).collect();
            in_h[outs[sample_weighted(&w, rng)]] = true;
        }
        if find_cycle_cover_within(g, &in_h).is_some() {
            let mut tp = TransportProblem::full(g, x_out.to_vec(), Sense::Max);
            tp.allowed = in_h.clone();
            return match solve_transport(&tp) {
                TransportOutcome::Optimal { x, .. } => Ok((cover_from_x(g, &x)?, round)),
                TransportOutcome::Infinite => Err(QccpError::InstanceInfeasible),
            };
        }
    }
    Err(QccpError::RoundBudgetExceeded(max_rounds))
}

/// Default round budget: `k*` for `q = 0.99`, capped.
pub fn default_round_budget(g: &DiGraph, r: &[f64]) -> usize {
    round_budget(oversample_xi(g, r), g.n(), 0.99).clamp(1, 100_000)
}

pub fn ub_oversample(
    inst: &QcpInstance,
    y_out: &SymMat,
    trials: usize,
    max_rounds: Option<usize>,
    seed: u64,
) -> Result<SamplingResult> {
    let r = perron_ratio(y_out)?;
    let xo = x_out(y_out);
    let budget = max_rounds.unwrap_or_else(|| default_round_budget(&inst.graph, &r));
    let mut best = None;
    let mut covers = Vec::new();
    let mut failed = 0;
    for t in 0..trials {
        let mut rng = trial_rng(seed, t as u64);
        match oversample_trial(inst, &r, &xo, budget, &mut rng) {
            Ok((c, _)) => {
                keep_best(&mut best, UpperBound::verified(inst, c.clone())?);
                covers.push(c);
            }
            Err(QccpError::RoundBudgetExceeded(_)) => failed += 1,
            Err(e) => return Err(e),
        }
    }
    Ok(SamplingResult {
        best: best.ok_or(QccpError::RoundBudgetExceeded(budget))?,
        covers,
        failed_trials: failed,
    })
}

#[derive(Clone, Debug)]
pub struct SqParams {
    /// Exponent on the learned values.
    pub delta: f64,
    /// Exponent on the inverse costs.
    pub beta: f64,
    pub q0: f64,
    pub alpha: f64,
    pub gamma: f64,
    /// Reward constant; `None` means `3 m / n`.
    pub omega: Option<f64>,
    pub eps_fit: f64,
    pub trials: usize,
}

impl Default for SqParams {
    fn default() -> Self {
        SqParams {
            delta: 20.0,
            beta: 1.0,
            q0: 0.4,
            alpha: 0.5,
            gamma: 0.6,
            omega: None,
            eps_fit: 1e-6,
            trials: 100,
        }
    }
}

struct Agent {
    current: usize,
    /// Arc used to reach `current`, if any.
    prev: Option<usize>,
    /// Arcs of the current path in order.
    path: Vec<usize>,
    on_path: Vec<bool>,
    free: Vec<bool>,
    free_count: usize,
    cycles: Vec<Vec<usize>>,
    active: bool,
}

/// Sequential Q-learning. Returns every cycle the agents closed.
pub fn sq_learning(inst: &QcpInstance, y_out: &SymMat, params: &SqParams, seed: u64) -> Result<CyclePool> {
    let g = &inst.graph;
    let n = g.n();
    let m = g.m();
    let omega = params.omega.unwrap_or(3.0 * m as f64 / n as f64);
    let mut sq: HashMap<(usize, usize), f64> = HashMap::new();
    for e in 0..m {
        for &f in g.out_arcs(g.head(e)) {
            sq.insert((e, f), y_out.get(e + 1, f + 1).max(0.0));
        }
    }
    let val = |sq: &HashMap<(usize, usize), f64>, e: usize, f: usize| sq.get(&(e, f)).copied().unwrap_or(0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pool = CyclePool::new();

    for _ in 0..params.trials {
        let mut agents: Vec<Agent> = (0..n)
            .map(|k| {
                let mut on_path = vec![false; n];
                on_path[k] = true;
                Agent {
                    current: k,
                    prev: None,
                    path: Vec::new(),
                    on_path,
                    free: vec![true; n],
                    free_count: n,
                    cycles: Vec::new(),
                    active: true,
                }
            })
            .collect();
        for a in agents.iter_mut() {
            a.active = g.out_arcs(a.current).iter().any(|&f| a.free[g.head(f)]);
        }
        while agents.iter().any(|a| a.active) {
            // Successor selection.
            let mut chosen: Vec<Option<usize>> = vec![None; n];
            for (k, a) in agents.iter().enumerate() {
                if !a.active {
                    continue;
                }
                let c = a.current;
                let cand: Vec<usize> = g
                    .out_arcs(c)
                    .iter()
                    .copied()
                    .filter(|&f| a.free[g.head(f)])
                    .collect();
                // Fitness in log space: the exponents overflow quickly.
                let log_fit: Vec<f64> = cand
                    .iter()
                    .map(|&f| {
                        let (s, inv) = match a.prev {
                            Some(p) => (val(&sq, p, f), 1.0 / (inst.q(p, f) + params.eps_fit)),
                            None => g
                                .in_arcs(c)
                                .iter()
                                .filter(|&&e| a.free[g.tail(e)])
                                .fold((0.0, 0.0), |(s, inv), &e| {
                                    (s + val(&sq, e, f), inv + 1.0 / (inst.q(e, f) + params.eps_fit))
                                }),
                        };
                        if s > 0.0 && inv > 0.0 {
                            params.delta * s.ln() + params.beta * inv.ln()
                        } else {
                            f64::NEG_INFINITY
                        }
                    })
                    .collect();
                let top = log_fit.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let fits: Vec<f64> = log_fit
                    .iter()
                    .map(|&l| if top.is_finite() { (l - top).exp() } else { 0.0 })
                    .collect();
                let pick = if rng.gen::<f64>() <= params.q0 {
                    // Argmax; ties go to the lowest successor node.
                    let mut best = 0;
                    for i in 1..cand.len() {
                        let (hb, hi) = (g.head(cand[best]), g.head(cand[i]));
                        if log_fit[i] > log_fit[best] || (log_fit[i] == log_fit[best] && hi < hb) {
                            best = i;
                        }
                    }
                    best
                } else {
                    sample_weighted(&fits, &mut rng)
                };
                chosen[k] = Some(cand[pick]);
            }
            // Discounted online update.
            for (k, a) in agents.iter().enumerate() {
                let (Some(p), Some(f)) = (a.prev, chosen[k]) else {
                    continue;
                };
                let s = g.head(f);
                let next = g
                    .out_arcs(s)
                    .iter()
                    .filter(|&&h| a.free[g.head(h)])
                    .map(|&h| val(&sq, f, h))
                    .fold(0.0f64, f64::max);
                let entry = sq.entry((p, f)).or_insert(0.0);
                *entry = (1.0 - params.alpha) * *entry + params.alpha * params.gamma * next;
            }
            // Move agents, closing cycles.
            for (k, a) in agents.iter_mut().enumerate() {
                let Some(f) = chosen[k] else { continue };
                let s = g.head(f);
                a.path.push(f);
                if a.on_path[s] {
                    let start = a.path.iter().position(|&e| g.tail(e) == s).expect("on path");
                    let cyc: Vec<usize> = a.path[start..].to_vec();
                    for &e in &cyc {
                        a.free[g.tail(e)] = false;
                    }
                    a.free_count -= cyc.len();
                    for &e in &a.path {
                        a.on_path[g.tail(e)] = false;
                    }
                    a.path.clear();
                    a.cycles.push(cyc);
                    if a.free_count == 0 {
                        a.active = false;
                        continue;
                    }
                    let free: Vec<usize> = (0..n).filter(|&v| a.free[v]).collect();
                    a.current = free[rng.gen_range(0..free.len())];
                    a.prev = None;
                    a.on_path[a.current] = true;
                } else {
                    a.on_path[s] = true;
                    a.prev = Some(f);
                    a.current = s;
                }
                a.active = g.out_arcs(a.current).iter().any(|&h| a.free[g.head(h)]);
            }
        }
        // Delayed reinforcement from the agent with the lowest cost per arc.
        let mut best: Option<(f64, usize)> = None;
        for (k, a) in agents.iter().enumerate() {
            if a.cycles.is_empty() {
                continue;
            }
            let arcs: usize = a.cycles.iter().map(|c| c.len()).sum();
            let cost: f64 = a.cycles.iter().map(|c| inst.cycle_cost(c)).sum();
            let l = cost / arcs as f64;
            if best.map_or(true, |(b, _)| l < b) {
                best = Some((l, k));
            }
            for c in &a.cycles {
                pool.add_cycle(inst, c, Source::QLearning);
            }
        }
        let mut reward: HashSet<(usize, usize)> = HashSet::new();
        if let Some((_, k)) = best {
            for c in &agents[k].cycles {
                for i in 0..c.len() {
                    reward.insert((c[i], c[(i + 1) % c.len()]));
                }
            }
        }
        let bonus = best.map_or(0.0, |(l, _)| omega / l.max(params.eps_fit));
        for (key, v) in sq.iter_mut() {
            let d = if reward.contains(key) { bonus } else { 0.0 };
            *v = (1.0 - params.alpha) * *v + params.alpha * d;
        }
    }
    Ok(pool)
}

/// Runs Q-learning once per learning rate and merges the cycle pools.
pub fn sq_learning_merged(
    inst: &QcpInstance,
    y_out: &SymMat,
    params: &SqParams,
    alphas: &[f64],
    seed: u64,
) -> Result<CyclePool> {
    let mut pool = CyclePool::new();
    for (k, &alpha) in alphas.iter().enumerate() {
        let p = SqParams {
            alpha,
            ..params.clone()
        };
        let part = sq_learning(inst, y_out, &p, seed.wrapping_add(k as u64))?;
        pool.merge(inst, &part);
    }
    Ok(pool)
}

/// Cheapest recombination of the Q-learning cycles with the cycles of every
/// cover the other heuristics produced.
pub fn ub_hybrid(inst: &QcpInstance, sq_pool: &CyclePool, covers: &[(Source, &CycleCover)]) -> Result<(CyclePool, UpperBound)> {
    let mut pool = sq_pool.clone();
    for (src, c) in covers {
        pool.add_cover(inst, c, *src);
    }
    let ub = pool.best_cover(inst)?;
    Ok((pool, ub))
}

#[derive(Clone, Debug)]
pub struct UbConfig {
    pub us_trials: usize,
    pub os_trials: usize,
    pub os_max_rounds: Option<usize>,
    pub sq: SqParams,
    pub sq_alphas: Vec<f64>,
}

impl Default for UbConfig {
    fn default() -> Self {
        UbConfig {
            us_trials: 500,
            os_trials: 500,
            os_max_rounds: None,
            sq: SqParams::default(),
            sq_alphas: vec![0.3, 0.5, 0.7],
        }
    }
}

/// Bounds of every heuristic on one relaxation solution.
#[derive(Debug)]
pub struct UbSuite {
    pub eb: UpperBound,
    pub us: Result<UpperBound>,
    pub os: Result<UpperBound>,
    pub sq: Result<UpperBound>,
    pub hybrid: UpperBound,
    pub pool_size: usize,
}

/// Runs EB, US, OS, SQ and the hybrid. Failures of the randomized methods
/// are kept in the suite; the hybrid always has at least the EB cover.
pub fn run_all(inst: &QcpInstance, y_out: &SymMat, cfg: &UbConfig, seed: u64) -> Result<UbSuite> {
    let xo = x_out(y_out);
    let eb = ub_euclidean(inst, &xo)?;
    let us = ub_undersample(inst, &xo, cfg.us_trials, seed);
    let os = ub_oversample(inst, y_out, cfg.os_trials, cfg.os_max_rounds, seed.wrapping_add(1));
    let sq_pool = sq_learning_merged(inst, y_out, &cfg.sq, &cfg.sq_alphas, seed.wrapping_add(2))?;
    let sq = sq_pool.best_cover(inst);
    let mut covers: Vec<(Source, &CycleCover)> = vec![(Source::Euclidean, &eb.cover)];
    if let Ok(r) = &us {
        covers.extend(r.covers.iter().map(|c| (Source::Undersampling, c)));
    }
    if let Ok(r) = &os {
        covers.extend(r.covers.iter().map(|c| (Source::Oversampling, c)));
    }
    let (pool, hybrid) = ub_hybrid(inst, &sq_pool, &covers)?;
    let parts = [Some(&eb), us.as_ref().ok().map(|r| &r.best), os.as_ref().ok().map(|r| &r.best), sq.as_ref().ok()];
    if parts.iter().flatten().any(|p| hybrid.value > p.value + 1e-9 * (1.0 + p.value.abs())) {
        return Err(QccpError::Validation("hybrid bound exceeds a component bound".into()));
    }
    Ok(UbSuite {
        us: us.map(|r| r.best),
        os: os.map(|r| r.best),
        eb,
        sq,
        hybrid,
        pool_size: pool.len(),
    })
}
