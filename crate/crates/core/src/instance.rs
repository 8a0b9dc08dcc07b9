//! Instances: generators, preprocessing and the text format.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{QccpError, Result};
use crate::graph::{find_cycle_cover, never_used_arcs, CycleCover, DiGraph};
use crate::linalg::SymMat;

const MAGIC: &str = "QCCP 1";
const GEN_ATTEMPTS: usize = 1000;

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Meta {
    pub family: String,
    pub seed: Option<u64>,
    pub params: String,
}

/// A directed graph with successor-pair costs `q[(e, f)]`, where
/// `head(e) == tail(f)`. Zero costs are not stored.
#[derive(Clone, Debug, PartialEq)]
pub struct QcpInstance {
    pub graph: DiGraph,
    q: BTreeMap<(usize, usize), f64>,
    pub meta: Meta,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CostModel {
    /// Integer costs drawn from `0..=100`.
    Uniform,
    /// Reload costs with 20 colours and `r` drawn from `1..=100`.
    Reload,
}

/// Arc index maps produced by [`preprocess`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Remap {
    pub old_to_new: Vec<Option<usize>>,
    pub new_to_old: Vec<usize>,
}

impl Remap {
    pub fn is_identity(&self) -> bool {
        self.new_to_old.iter().enumerate().all(|(i, &o)| i == o)
            && self.old_to_new.len() == self.new_to_old.len()
    }
}

impl QcpInstance {
    pub fn new(graph: DiGraph, entries: impl IntoIterator<Item = ((usize, usize), f64)>) -> Result<Self> {
        let mut q = BTreeMap::new();
        for ((e, f), c) in entries {
            if e >= graph.m() || f >= graph.m() {
                return Err(QccpError::Validation(format!(
                    "cost entry ({}, {}) references a missing arc",
                    e + 1,
                    f + 1
                )));
            }
            if graph.head(e) != graph.tail(f) {
                return Err(QccpError::Validation(format!(
                    "arc {} is not a successor of arc {}",
                    f + 1,
                    e + 1
                )));
            }
            if !c.is_finite() {
                return Err(QccpError::Validation(format!(
                    "cost of ({}, {}) is not finite",
                    e + 1,
                    f + 1
                )));
            }
            if q.insert((e, f), c).is_some() {
                return Err(QccpError::Validation(format!(
                    "duplicate cost entry ({}, {})",
                    e + 1,
                    f + 1
                )));
            }
        }
        q.retain(|_, c| *c != 0.0);
        Ok(QcpInstance {
            graph,
            q,
            meta: Meta::default(),
        })
    }

    pub fn with_meta(mut self, meta: Meta) -> Self {
        self.meta = meta;
        self
    }

    pub fn n(&self) -> usize {
        self.graph.n()
    }

    pub fn m(&self) -> usize {
        self.graph.m()
    }

    pub fn q(&self, e: usize, f: usize) -> f64 {
        self.q.get(&(e, f)).copied().unwrap_or(0.0)
    }

    /// Nonzero cost entries in `(e, f)` order.
    pub fn costs(&self) -> impl Iterator<Item = ((usize, usize), f64)> + '_ {
        self.q.iter().map(|(&k, &v)| (k, v))
    }

    pub fn num_costs(&self) -> usize {
        self.q.len()
    }

    /// `xᵀ Q x` for an arbitrary arc vector.
    pub fn quad_cost(&self, x: &[f64]) -> f64 {
        self.q.iter().map(|(&(e, f), &c)| c * x[e] * x[f]).sum()
    }

    pub fn cover_cost(&self, c: &CycleCover) -> f64 {
        self.quad_cost(&c.indicator(self.m()))
    }

    /// Cost of a directed cycle given as consecutive arcs.
    pub fn cycle_cost(&self, arcs: &[usize]) -> f64 {
        let k = arcs.len();
        (0..k).map(|i| self.q(arcs[i], arcs[(i + 1) % k])).sum()
    }

    /// Symmetrised extended cost matrix of order `m + 1` (row/col 0 empty).
    pub fn q_hat(&self) -> SymMat {
        let mut s = SymMat::zeros(self.m() + 1);
        for (&(e, f), &c) in &self.q {
            let (i, j) = (e + 1, f + 1);
            let v = s.get(i, j) + if i == j { c } else { 0.5 * c };
            s.set(i, j, v);
        }
        s
    }
}

fn trial_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn reload_costs(
    g: &DiGraph,
    num_colors: usize,
    d: u32,
    rng: &mut ChaCha8Rng,
) -> Vec<((usize, usize), f64)> {
    let colors: Vec<usize> = (0..g.m()).map(|_| rng.gen_range(0..num_colors)).collect();
    let r: Vec<u32> = (0..num_colors * num_colors)
        .map(|_| rng.gen_range(1..=d))
        .collect();
    let mut out = Vec::new();
    for e in 0..g.m() {
        for &f in g.out_arcs(g.head(e)) {
            let (s, t) = (colors[e], colors[f]);
            let c = if s == t { 0 } else { r[s * num_colors + t] };
            out.push(((e, f), c as f64));
        }
    }
    out
}

fn uniform_costs(g: &DiGraph, max: u32, rng: &mut ChaCha8Rng) -> Vec<((usize, usize), f64)> {
    let mut out = Vec::new();
    for e in 0..g.m() {
        for &f in g.out_arcs(g.head(e)) {
            out.push(((e, f), rng.gen_range(0..=max) as f64));
        }
    }
    out
}

/// Random digraph with each ordered pair present with probability `p`.
/// Graphs without a cycle cover are redrawn from the next stream.
pub fn gen_erdos_renyi(n: usize, p: f64, model: CostModel, seed: u64) -> Result<QcpInstance> {
    if n < 2 || !(p > 0.0 && p <= 1.0) {
        return Err(QccpError::Validation("need n >= 2 and 0 < p <= 1".into()));
    }
    for attempt in 0..GEN_ATTEMPTS {
        let mut rng = trial_rng(seed, attempt as u64);
        let mut arcs = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if i != j && rng.gen_bool(p) {
                    arcs.push((i, j));
                }
            }
        }
        let g = DiGraph::new(n, arcs)?;
        if find_cycle_cover(&g).is_err() {
            continue;
        }
        let (family, entries) = match model {
            CostModel::Uniform => ("er", uniform_costs(&g, 100, &mut rng)),
            CostModel::Reload => ("er-reload", reload_costs(&g, 20, 100, &mut rng)),
        };
        let meta = Meta {
            family: family.into(),
            seed: Some(seed),
            params: format!("n={n},p={p}"),
        };
        return Ok(QcpInstance::new(g, entries)?.with_meta(meta));
    }
    Err(QccpError::GenerationFailed {
        attempts: GEN_ATTEMPTS,
    })
}

/// Complete digraph with reload costs: arcs get one of `num_colors`
/// colours, consecutive arcs of equal colour cost 0, otherwise `r(s, t)`
/// drawn from `1..=d` per ordered colour pair.
pub fn gen_reload(n: usize, d: u32, num_colors: usize, seed: u64) -> Result<QcpInstance> {
    if n < 2 || d < 1 || num_colors < 1 {
        return Err(QccpError::Validation(
            "need n >= 2, D >= 1 and at least one colour".into(),
        ));
    }
    let g = DiGraph::complete(n);
    let mut rng = trial_rng(seed, 0);
    let entries = reload_costs(&g, num_colors, d, &mut rng);
    let meta = Meta {
        family: "reload".into(),
        seed: Some(seed),
        params: format!("n={n},D={d},colors={num_colors}"),
    };
    Ok(QcpInstance::new(g, entries)?.with_meta(meta))
}

/// Manhattan-style torus. Node `x` gets one arc per dimension `i`, to
/// `x + e_i` when the other coordinates of `x` sum to an even number and to
/// `x - e_i` otherwise (both modulo `n_i`).
pub fn gen_manhattan(dims: &[usize], max_cost: u32, seed: u64) -> Result<QcpInstance> {
    if dims.is_empty() || dims.iter().any(|&d| d < 2) {
        return Err(QccpError::Validation("every dimension must be at least 2".into()));
    }
    let n: usize = dims.iter().product();
    let k = dims.len();
    let index = |x: &[usize]| {
        let mut idx = 0;
        for i in (0..k).rev() {
            idx = idx * dims[i] + x[i];
        }
        idx
    };
    let mut arcs = Vec::with_capacity(n * k);
    let mut x = vec![0usize; k];
    for v in 0..n {
        let mut r = v;
        for i in 0..k {
            x[i] = r % dims[i];
            r /= dims[i];
        }
        let total: usize = x.iter().sum();
        for i in 0..k {
            let mut y = x.clone();
            y[i] = if (total - x[i]) % 2 == 0 {
                (x[i] + 1) % dims[i]
            } else {
                (x[i] + dims[i] - 1) % dims[i]
            };
            arcs.push((v, index(&y)));
        }
    }
    let g = DiGraph::new(n, arcs)?;
    let mut rng = trial_rng(seed, 0);
    let entries = uniform_costs(&g, max_cost, &mut rng);
    let dims_s: Vec<String> = dims.iter().map(|d| d.to_string()).collect();
    let meta = Meta {
        family: "manhattan".into(),
        seed: Some(seed),
        params: format!("dims={}", dims_s.join("x")),
    };
    Ok(QcpInstance::new(g, entries)?.with_meta(meta))
}

/// Removes arcs used by no cycle cover and compacts the arc indices.
pub fn preprocess(inst: &QcpInstance) -> Result<(QcpInstance, Remap)> {
    let dead = never_used_arcs(&inst.graph)?;
    let m = inst.m();
    let mut old_to_new = vec![None; m];
    let mut new_to_old = Vec::with_capacity(m - dead.len());
    let mut di = 0;
    for (e, slot) in old_to_new.iter_mut().enumerate() {
        if di < dead.len() && dead[di] == e {
            di += 1;
            continue;
        }
        *slot = Some(new_to_old.len());
        new_to_old.push(e);
    }
    let graph = inst.graph.subgraph(&new_to_old);
    let entries = inst.costs().filter_map(|((e, f), c)| {
        Some(((old_to_new[e]?, old_to_new[f]?), c))
    });
    let out = QcpInstance::new(graph, entries)?.with_meta(inst.meta.clone());
    Ok((
        out,
        Remap {
            old_to_new,
            new_to_old,
        },
    ))
}

pub fn format_instance(inst: &QcpInstance) -> String {
    let mut s = String::new();
    s.push_str(MAGIC);
    s.push('\n');
    if !inst.meta.family.is_empty() {
        let _ = write!(s, "# meta family={}", inst.meta.family);
        if let Some(seed) = inst.meta.seed {
            let _ = write!(s, " seed={seed}");
        }
        if !inst.meta.params.is_empty() {
            let _ = write!(s, " params={}", inst.meta.params);
        }
        s.push('\n');
    }
    let _ = writeln!(s, "{} {}", inst.n(), inst.m());
    for &(t, h) in inst.graph.arcs() {
        let _ = writeln!(s, "{} {}", t + 1, h + 1);
    }
    let _ = writeln!(s, "{}", inst.num_costs());
    for ((e, f), c) in inst.costs() {
        let _ = writeln!(s, "{} {} {}", e + 1, f + 1, c);
    }
    s
}

pub fn write_instance(inst: &QcpInstance, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, format_instance(inst))?;
    Ok(())
}

pub fn read_instance(path: impl AsRef<Path>) -> Result<QcpInstance> {
    parse_instance(&std::fs::read_to_string(path)?)
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    meta: Meta,
    last: usize,
}

impl<'a> Lines<'a> {
    /// Next non-empty, non-comment line with its 1-based number.
    fn next_data(&mut self) -> Result<(usize, &'a str)> {
        for (i, raw) in self.inner.by_ref() {
            self.last = i + 1;
            let line = raw.trim();
            if let Some(rest) = line.strip_prefix("# meta") {
                for kv in rest.split_whitespace() {
                    match kv.split_once('=') {
                        Some(("family", v)) => self.meta.family = v.into(),
                        Some(("seed", v)) => self.meta.seed = v.parse().ok(),
                        Some(("params", v)) => self.meta.params = v.into(),
                        _ => {}
                    }
                }
                continue;
            }
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            return Ok((i + 1, line));
        }
        Err(QccpError::Parse {
            line: self.last + 1,
            msg: "unexpected end of file".into(),
        })
    }
}

fn fields<const N: usize>(line: usize, text: &str) -> Result<[&str; N]> {
    let parts: Vec<&str> = text.split_whitespace().collect();
    parts.try_into().map_err(|p: Vec<&str>| QccpError::Parse {
        line,
        msg: format!("expected {N} fields, found {}", p.len()),
    })
}

fn num<T: std::str::FromStr>(line: usize, s: &str, what: &str) -> Result<T> {
    s.parse().map_err(|_| QccpError::Parse {
        line,
        msg: format!("invalid {what} `{s}`"),
    })
}

fn one_based(line: usize, s: &str, bound: usize, what: &str) -> Result<usize> {
    let v: usize = num(line, s, what)?;
    if v == 0 || v > bound {
        return Err(QccpError::Parse {
            line,
            msg: format!("{what} {v} outside 1..{bound}"),
        });
    }
    Ok(v - 1)
}

pub fn parse_instance(text: &str) -> Result<QcpInstance> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
        meta: Meta::default(),
        last: 0,
    };
    let (ln, first) = lines.next_data()?;
    if first != MAGIC {
        return Err(QccpError::Parse {
            line: ln,
            msg: format!("expected `{MAGIC}`"),
        });
    }
    let (ln, header) = lines.next_data()?;
    let [n, m] = fields::<2>(ln, header)?;
    let n: usize = num(ln, n, "node count")?;
    let m: usize = num(ln, m, "arc count")?;
    let mut arcs = Vec::with_capacity(m);
    for _ in 0..m {
        let (ln, text) = lines.next_data()?;
        let [t, h] = fields::<2>(ln, text)?;
        arcs.push((one_based(ln, t, n, "node")?, one_based(ln, h, n, "node")?));
    }
    let graph = DiGraph::new(n, arcs)?;
    let (ln, text) = lines.next_data()?;
    let k: usize = num(ln, text, "cost count")?;
    let mut entries = Vec::with_capacity(k);
    for _ in 0..k {
        let (ln, text) = lines.next_data()?;
        let [e, f, c] = fields::<3>(ln, text)?;
        let e = one_based(ln, e, m, "arc")?;
        let f = one_based(ln, f, m, "arc")?;
        let c: f64 = num(ln, c, "cost")?;
        if graph.head(e) != graph.tail(f) {
            return Err(QccpError::Validation(format!(
                "line {ln}: arc {} is not a successor of arc {}",
                f + 1,
                e + 1
            )));
        }
        entries.push(((e, f), c));
    }
    let inst = QcpInstance::new(graph, entries)?;
    Ok(inst.with_meta(lines.meta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::enumerate_cycle_covers;

    fn brute(inst: &QcpInstance) -> f64 {
        enumerate_cycle_covers(&inst.graph, 1_000_000)
            .unwrap()
            .iter()
            .map(|c| inst.cover_cost(c))
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn manhattan_sizes() {
        let a = gen_manhattan(&[5, 5], 10, 1).unwrap();
        assert_eq!((a.n(), a.m()), (25, 50));
        let b = gen_manhattan(&[4, 4, 4], 10, 1).unwrap();
        assert_eq!((b.n(), b.m()), (64, 192));
        let c = gen_manhattan(&[2, 2], 10, 1).unwrap();
        assert_eq!((c.n(), c.m()), (4, 8));
        assert!(!enumerate_cycle_covers(&c.graph, 1000).unwrap().is_empty());
        for dims in [vec![3, 4], vec![6, 6], vec![2, 3, 4], vec![8, 8]] {
            let g = gen_manhattan(&dims, 10, 0).unwrap();
            let n: usize = dims.iter().product();
            assert_eq!(g.m(), dims.len() * n);
            for v in 0..n {
                assert_eq!(g.graph.in_arcs(v).len(), dims.len());
            }
        }
    }

    #[test]
    fn generators_are_deterministic() {
        let a = gen_erdos_renyi(12, 0.4, CostModel::Uniform, 5).unwrap();
        let b = gen_erdos_renyi(12, 0.4, CostModel::Uniform, 5).unwrap();
        assert_eq!(format_instance(&a), format_instance(&b));
        let c = gen_erdos_renyi(12, 0.4, CostModel::Uniform, 6).unwrap();
        assert_ne!(format_instance(&a), format_instance(&c));
        let r1 = gen_reload(6, 10, 20, 7).unwrap();
        let r2 = gen_reload(6, 10, 20, 7).unwrap();
        assert_eq!(format_instance(&r1), format_instance(&r2));
    }

    #[test]
    fn two_node_graph() {
        let inst = gen_erdos_renyi(2, 1.0, CostModel::Uniform, 3).unwrap();
        assert_eq!(inst.m(), 2);
        assert_eq!(enumerate_cycle_covers(&inst.graph, 10).unwrap().len(), 1);
    }

    #[test]
    fn reload_cost_ranges() {
        let inst = gen_reload(10, 1, 20, 2).unwrap();
        assert!(inst.costs().all(|(_, c)| c == 1.0));
        let mono = gen_reload(6, 10, 1, 2).unwrap();
        assert_eq!(mono.num_costs(), 0);
        let ten = gen_reload(6, 10, 20, 7).unwrap();
        assert!(ten.costs().all(|(_, c)| (1.0..=10.0).contains(&c)));
    }

    #[test]
    fn preprocess_examples() {
        let k3 = QcpInstance::new(DiGraph::complete(3), []).unwrap();
        let (p, r) = preprocess(&k3).unwrap();
        assert!(r.is_identity());
        assert_eq!(p.graph, k3.graph);

        let g = DiGraph::new(4, vec![(0, 1), (1, 2), (2, 3), (3, 0), (0, 2)]).unwrap();
        let inst = QcpInstance::new(g, [((4, 2), 3.0), ((0, 1), 1.0)]).unwrap();
        let (p, r) = preprocess(&inst).unwrap();
        assert_eq!(p.m(), 4);
        assert_eq!(r.old_to_new[4], None);
        assert_eq!(p.num_costs(), 1);
        assert!(never_used_arcs(&p.graph).unwrap().is_empty());
    }

    #[test]
    fn roundtrip_and_parse_errors() {
        let k3 = DiGraph::complete(3);
        let e = k3.find_arc(0, 1).unwrap();
        let f = k3.find_arc(1, 2).unwrap();
        let inst = QcpInstance::new(k3, [((e, f), 2.5)]).unwrap();
        let back = parse_instance(&format_instance(&inst)).unwrap();
        assert_eq!(back, inst);

        let gen = gen_erdos_renyi(6, 0.7, CostModel::Uniform, 11).unwrap();
        let back = parse_instance(&format_instance(&gen)).unwrap();
        assert_eq!(back, gen);
        assert_eq!(brute(&back), brute(&gen));

        let bad = "QCCP 1\n3 2\n1 2\n2 3\n1\n2 1 4\n";
        assert!(matches!(parse_instance(bad), Err(QccpError::Validation(_))));
        let trunc = "QCCP 1\n3 2\n1 2\n";
        assert!(matches!(
            parse_instance(trunc),
            Err(QccpError::Parse { line: 4, .. })
        ));
        let junk = "QCCP 1\n3 x\n";
        assert!(matches!(
            parse_instance(junk),
            Err(QccpError::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn q_hat_matches_quad_cost() {
        let inst = gen_erdos_renyi(5, 0.8, CostModel::Uniform, 4).unwrap();
        let qh = inst.q_hat();
        for c in enumerate_cycle_covers(&inst.graph, 10_000).unwrap() {
            let mut v = vec![1.0];
            v.extend(c.indicator(inst.m()));
            let y = SymMat::outer(&v);
            assert!((qh.inner(&y) - inst.cover_cost(&c)).abs() < 1e-9);
            let cyc: f64 = c.cycles(&inst.graph).iter().map(|a| inst.cycle_cost(a)).sum();
            assert!((cyc - inst.cover_cost(&c)).abs() < 1e-9);
        }
    }
}
