//! Barnes-Hut style tree-code for the truncated Riesz sum.
//!
//! Cells are boxes split at their midpoint into `2^d` orthants. A cell whose
//! bounding-box diagonal over the distance from the target to its mass centre
//! is at most `theta_open` contributes one term, a Taylor expansion of the
//! kernel about the mass centre contracted with the cell's Cartesian moments
//! up to `order`. Leaves are always summed directly. Every term carries the smallest atom index it
//! covers and the terms are cascade-summed in that order, so when no cell is
//! accepted as far-field the result is bit-identical to [`super::eval_brute`].

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{kernel_factor, KernelSpec, Targets, VecField};
use crate::error::{Error, Result};
use crate::quadrature::AtomSet;
use crate::sum::VecCascade;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TreeCodeConfig {
    pub theta_open: f64,
    pub leaf_cap: usize,
    /// Highest moment order of the far-field expansion; 0 is the monopole.
    pub order: usize,
}

impl Default for TreeCodeConfig {
    fn default() -> Self {
        Self {
            theta_open: 0.3,
            leaf_cap: 8,
            order: 6,
        }
    }
}

/// Expansions above this order are rejected.
pub const MAX_ORDER: usize = 12;

impl TreeCodeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.theta_open > 0.0 && self.theta_open <= 0.9) {
            return Err(Error::Parameter(format!(
                "theta_open = {} must lie in (0, 0.9]",
                self.theta_open
            )));
        }
        if self.leaf_cap == 0 {
            return Err(Error::Parameter("leaf_cap must be at least 1".into()));
        }
        if self.order > MAX_ORDER {
            return Err(Error::Parameter(format!(
                "expansion order {} exceeds {MAX_ORDER}",
                self.order
            )));
        }
        Ok(())
    }
}

/// Multi-indices `n` with `|n| <= order`, graded, with the positions of
/// `n - e_i` and `n - 2 e_i`.
struct Indices {
    list: Vec<Vec<u32>>,
    minus1: Vec<Vec<Option<usize>>>,
    minus2: Vec<Vec<Option<usize>>>,
}

impl Indices {
    fn new(d: usize, order: usize) -> Self {
        let mut list: Vec<Vec<u32>> = vec![vec![0; d]];
        let mut start = 0;
        for _ in 0..order {
            let end = list.len();
            for idx in start..end {
                // extend only in coordinates at or after the last nonzero one
                let last = list[idx].iter().rposition(|&v| v > 0).unwrap_or(0);
                for i in last..d {
                    let mut n = list[idx].clone();
                    n[i] += 1;
                    list.push(n);
                }
            }
            start = end;
        }
        let find = |n: &[u32]| list.iter().position(|m| m == n);
        let shifted = |step: u32| -> Vec<Vec<Option<usize>>> {
            list.iter()
                .map(|n| {
                    (0..d)
                        .map(|i| {
                            (n[i] >= step).then(|| {
                                let mut m = n.clone();
                                m[i] -= step;
                                find(&m).expect("graded list is closed under decrements")
                            })
                        })
                        .collect()
                })
                .collect()
        };
        let minus1 = shifted(1);
        let minus2 = shifted(2);
        Self {
            list,
            minus1,
            minus2,
        }
    }

    fn len(&self) -> usize {
        self.list.len()
    }

    fn degree(&self, i: usize) -> u32 {
        self.list[i].iter().sum()
    }
}

struct Node {
    lo: Vec<f64>,
    hi: Vec<f64>,
    diam: f64,
    centre: Vec<f64>,
    /// `sum m delta^n` about `centre`, one entry per multi-index
    moments: Vec<f64>,
    /// smallest atom index in the cell
    first: usize,
    /// range into `Tree::order`
    start: usize,
    end: usize,
    children: Vec<usize>,
}

struct Tree {
    nodes: Vec<Node>,
    /// atom indices, ascending within every leaf
    order: Vec<usize>,
    indices: Indices,
}

impl Tree {
    fn build(atoms: &AtomSet, leaf_cap: usize, order: usize) -> Self {
        let mut tree = Tree {
            nodes: Vec::new(),
            order: (0..atoms.len()).collect(),
            indices: Indices::new(atoms.d(), order),
        };
        if !atoms.is_empty() {
            tree.split(atoms, 0, atoms.len(), leaf_cap);
        }
        tree
    }

    fn split(&mut self, atoms: &AtomSet, start: usize, end: usize, leaf_cap: usize) -> usize {
        let d = atoms.d();
        let mut lo = vec![f64::INFINITY; d];
        let mut hi = vec![f64::NEG_INFINITY; d];
        let mut mass = 0.0;
        let mut moment = vec![0.0; d];
        for &a in &self.order[start..end] {
            let p = atoms.point(a);
            let m = atoms.mass(a);
            mass += m;
            for k in 0..d {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
                moment[k] += m * p[k];
            }
        }
        let centre: Vec<f64> = if mass > 0.0 {
            moment.iter().map(|v| v / mass).collect()
        } else {
            lo.iter().zip(&hi).map(|(a, b)| 0.5 * (a + b)).collect()
        };
        let diam = lo
            .iter()
            .zip(&hi)
            .map(|(a, b)| (b - a) * (b - a))
            .sum::<f64>()
            .sqrt();
        let first = self.order[start..end].iter().copied().min().unwrap_or(usize::MAX);
        let id = self.nodes.len();
        let moments = self.moments(atoms, start, end, &centre);
        self.nodes.push(Node {
            lo,
            hi,
            diam,
            centre,
            moments,
            first,
            start,
            end,
            children: Vec::new(),
        });
        if end - start <= leaf_cap || diam == 0.0 {
            return id;
        }
        // stable bucket by orthant keeps atom order inside each child
        let mid: Vec<f64> = self.nodes[id]
            .lo
            .iter()
            .zip(&self.nodes[id].hi)
            .map(|(a, b)| 0.5 * (a + b))
            .collect();
        let mut buckets: Vec<Vec<usize>> = vec![Vec::new(); 1 << d];
        for &a in &self.order[start..end] {
            let p = atoms.point(a);
            let code = (0..d).fold(0usize, |c, k| c | (((p[k] > mid[k]) as usize) << k));
            buckets[code].push(a);
        }
        let mut cursor = start;
        let mut ranges = Vec::new();
        for b in buckets {
            if b.is_empty() {
                continue;
            }
            let len = b.len();
            self.order[cursor..cursor + len].copy_from_slice(&b);
            ranges.push((cursor, cursor + len));
            cursor += len;
        }
        let children = ranges
            .into_iter()
            .map(|(s, e)| self.split(atoms, s, e, leaf_cap))
            .collect();
        self.nodes[id].children = children;
        id
    }

    fn moments(&self, atoms: &AtomSet, start: usize, end: usize, centre: &[f64]) -> Vec<f64> {
        let ix = &self.indices;
        let d = atoms.d();
        let mut acc = vec![0.0; ix.len()];
        let mut pw = vec![0.0; ix.len()];
        for &a in &self.order[start..end] {
            let p = atoms.point(a);
            pw[0] = atoms.mass(a);
            for i in 1..ix.len() {
                // first coordinate with a nonzero exponent gives the recursion
                let k = (0..d).find(|&k| ix.list[i][k] > 0).expect("nonzero index");
                let prev = ix.minus1[i][k].expect("decrement exists");
                pw[i] = pw[prev] * (p[k] - centre[k]);
            }
            for (s, v) in acc.iter_mut().zip(&pw) {
                *s += v;
            }
        }
        acc
    }
}

/// Tree-code evaluation with the same contract as [`super::eval_brute`].
pub fn eval_treecode(
    atoms: &AtomSet,
    targets: Targets<'_>,
    spec: &KernelSpec,
    config: &TreeCodeConfig,
) -> Result<VecField> {
    config.validate()?;
    spec.check_dim(atoms.d())?;
    let tree = Tree::build(atoms, config.leaf_cap, config.order);
    let n_targets = targets.count(atoms);
    let d = atoms.d();
    let rows: Vec<Result<Vec<f64>>> = (0..n_targets)
        .into_par_iter()
        .map_init(
            || Scratch::new(d, tree.indices.len()),
            |scratch, t| {
                eval_one(
                    &tree,
                    atoms,
                    targets.point(atoms, t),
                    targets.excluded(t),
                    t,
                    spec,
                    config.theta_open,
                    scratch,
                )
            },
        )
        .collect();
    let mut values = Vec::with_capacity(n_targets * d);
    for row in rows {
        values.extend(row?);
    }
    VecField::new(d, values)
}

struct Scratch {
    keys: Vec<(usize, usize)>,
    values: Vec<f64>,
    coef: Vec<f64>,
    stack: Vec<usize>,
    diff: Vec<f64>,
}

impl Scratch {
    fn new(d: usize, n_indices: usize) -> Self {
        Self {
            keys: Vec::new(),
            values: Vec::new(),
            coef: vec![0.0; n_indices],
            stack: Vec::new(),
            diff: vec![0.0; d],
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn eval_one(
    tree: &Tree,
    atoms: &AtomSet,
    target: &[f64],
    exclude: Option<usize>,
    t_index: usize,
    spec: &KernelSpec,
    theta_open: f64,
    sc: &mut Scratch,
) -> Result<Vec<f64>> {
    let d = atoms.d();
    let eps = spec.eps;
    let eps2 = eps * eps;
    // (key, offset into values); key is the smallest atom index the term covers
    sc.keys.clear();
    sc.values.clear();
    sc.stack.clear();
    if !tree.nodes.is_empty() {
        sc.stack.push(0);
    }
    while let Some(id) = sc.stack.pop() {
        let node = &tree.nodes[id];
        if node.children.is_empty() {
            for &a in &tree.order[node.start..node.end] {
                if exclude == Some(a) {
                    continue;
                }
                let p = atoms.point(a);
                let mut r2 = 0.0;
                for k in 0..d {
                    sc.diff[k] = p[k] - target[k];
                    r2 += sc.diff[k] * sc.diff[k];
                }
                if r2 <= eps2 {
                    if r2 == 0.0 && eps == 0.0 {
                        return Err(Error::Singularity {
                            atom: a,
                            target: t_index,
                        });
                    }
                    continue;
                }
                let f = atoms.mass(a) * kernel_factor(r2, spec.s);
                sc.keys.push((a, sc.values.len()));
                sc.values.extend(sc.diff.iter().map(|v| v * f));
            }
            continue;
        }
        let (near2, far2) = box_distances(target, &node.lo, &node.hi);
        if eps > 0.0 && far2 <= eps2 {
            // every atom of the cell is truncated away
            continue;
        }
        let mut dist2 = 0.0;
        for k in 0..d {
            sc.diff[k] = node.centre[k] - target[k];
            dist2 += sc.diff[k] * sc.diff[k];
        }
        let dist = dist2.sqrt();
        let separated = dist > 0.0 && node.diam <= theta_open * dist;
        if separated && near2 > eps2 {
            sc.keys.push((node.first, sc.values.len()));
            let off = sc.values.len();
            sc.values.resize(off + d, 0.0);
            expand(&tree.indices, node, &sc.diff, dist2, spec.s, &mut sc.coef, &mut sc.values[off..]);
        } else {
            sc.stack.extend(node.children.iter().rev());
        }
    }
    sc.keys.sort_unstable_by_key(|&(k, _)| k);
    let mut acc = VecCascade::new(d);
    for &(_, off) in &sc.keys {
        acc.push(&sc.values[off..off + d]);
    }
    Ok(acc.total())
}

/// Far-field value `sum_n (z_k a_n + a_{n - e_k}) M_n` of the cell, where
/// `a_n` are the Taylor coefficients of `|z + delta|^{-(s+1)}` in `delta`.
///
/// With `nu = s + 1` and `R = |z|` they satisfy
/// `R^2 |n| a_n = -(2|n| - 2 + nu) sum_i z_i a_{n-e_i} - (|n| - 2 + nu) sum_i a_{n-2e_i}`.
fn expand(ix: &Indices, node: &Node, z: &[f64], r2: f64, s: f64, coef: &mut [f64], out: &mut [f64]) {
    let nu = s + 1.0;
    let d = z.len();
    coef[0] = kernel_factor(r2, s);
    for i in 1..ix.len() {
        let deg = ix.degree(i) as f64;
        let mut first = 0.0;
        let mut second = 0.0;
        for k in 0..d {
            if let Some(j) = ix.minus1[i][k] {
                first += z[k] * coef[j];
            }
            if let Some(j) = ix.minus2[i][k] {
                second += coef[j];
            }
        }
        coef[i] = -((2.0 * deg - 2.0 + nu) * first + (deg - 2.0 + nu) * second) / (r2 * deg);
    }
    for k in 0..d {
        let mut v = 0.0;
        for i in 0..ix.len() {
            let mut c = z[k] * coef[i];
            if let Some(j) = ix.minus1[i][k] {
                c += coef[j];
            }
            v += c * node.moments[i];
        }
        out[k] = v;
    }
}

fn box_distances(x: &[f64], lo: &[f64], hi: &[f64]) -> (f64, f64) {
    let mut near = 0.0;
    let mut far = 0.0;
    for k in 0..x.len() {
        let a = lo[k] - x[k];
        let b = hi[k] - x[k];
        let n = if a > 0.0 {
            a
        } else if b < 0.0 {
            -b
        } else {
            0.0
        };
        near += n * n;
        far += a.abs().max(b.abs()).powi(2);
    }
    (near, far)
}
