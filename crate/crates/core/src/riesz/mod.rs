//! The vector Riesz kernel `x / |x|^{s+1}` and transforms of atomized measures.

mod square;
mod tree;

pub use square::{square_function, Cutoff, SmoothstepCutoff};
pub use tree::{eval_treecode, TreeCodeConfig};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::AtomSet;
use crate::sum::{Cascade, VecCascade};

/// Kernel order and truncation radius.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub s: f64,
    pub eps: f64,
}

impl KernelSpec {
    pub fn new(s: f64, eps: f64) -> Result<Self> {
        if !(s > 0.0) || !(eps >= 0.0) {
            return Err(Error::Parameter(format!(
                "kernel order s = {s} must be positive and eps = {eps} nonnegative"
            )));
        }
        Ok(Self { s, eps })
    }

    fn check_dim(&self, d: usize) -> Result<()> {
        if self.s >= d as f64 {
            return Err(Error::Parameter(format!(
                "kernel order s = {} must be below d = {d}",
                self.s
            )));
        }
        Ok(())
    }
}

/// Where a transform is evaluated.
#[derive(Clone, Copy, Debug)]
pub enum Targets<'a> {
    /// At the atoms themselves; with `self_exclude` the atom at the target
    /// index is skipped.
    Atoms { self_exclude: bool },
    /// At arbitrary points, flattened with stride `d`.
    Points(&'a [f64]),
    /// At the listed atoms, each skipping itself.
    AtomSubset(&'a [usize]),
}

impl Targets<'_> {
    pub(crate) fn count(&self, atoms: &AtomSet) -> usize {
        match self {
            Targets::Atoms { .. } => atoms.len(),
            Targets::Points(p) => p.len() / atoms.d(),
            Targets::AtomSubset(idx) => idx.len(),
        }
    }

    pub(crate) fn point<'b>(&'b self, atoms: &'b AtomSet, t: usize) -> &'b [f64] {
        match self {
            Targets::Atoms { .. } => atoms.point(t),
            Targets::Points(p) => &p[t * atoms.d()..(t + 1) * atoms.d()],
            Targets::AtomSubset(idx) => atoms.point(idx[t]),
        }
    }

    pub(crate) fn excluded(&self, t: usize) -> Option<usize> {
        match self {
            Targets::Atoms { self_exclude: true } => Some(t),
            Targets::AtomSubset(idx) => Some(idx[t]),
            _ => None,
        }
    }
}

/// A vector (or scalar, `dim == 1`) function sampled at targets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VecField {
    dim: usize,
    values: Vec<f64>,
}

impl VecField {
    pub fn new(dim: usize, values: Vec<f64>) -> Result<Self> {
        if dim == 0 || values.len() % dim != 0 {
            return Err(Error::Parameter("field length not a multiple of dim".into()));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain(format!("non-finite field entry at {i}")));
        }
        Ok(Self { dim, values })
    }

    pub fn zeros(dim: usize, len: usize) -> Self {
        Self {
            dim,
            values: vec![0.0; dim * len],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.values.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn get_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Euclidean norm of the entry at `i`.
    pub fn norm_at(&self, i: usize) -> f64 {
        self.get(i).iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// CSV with header `target_index,x0..x{d-1},R0..R{d-1}`.
    pub fn to_csv(&self, atoms: &AtomSet, targets: Targets<'_>) -> String {
        use std::fmt::Write as _;
        let d = atoms.d();
        let mut out = String::from("target_index");
        for k in 0..d {
            let _ = write!(out, ",x{k}");
        }
        for k in 0..self.dim {
            let _ = write!(out, ",R{k}");
        }
        out.push('\n');
        for t in 0..self.len() {
            let _ = write!(out, "{t}");
            for v in targets.point(atoms, t) {
                let _ = write!(out, ",{}", crate::experiment::fmt_real(*v));
            }
            for v in self.get(t) {
                let _ = write!(out, ",{}", crate::experiment::fmt_real(*v));
            }
            out.push('\n');
        }
        out
    }
}

/// `K^s(x) = x / |x|^{s+1}`.
pub fn kernel(x: &[f64], s: f64) -> Result<Vec<f64>> {
    let r2: f64 = x.iter().map(|v| v * v).sum();
    if r2 == 0.0 {
        return Err(Error::ZeroVector);
    }
    let f = kernel_factor(r2, s);
    Ok(x.iter().map(|v| v * f).collect())
}

/// `|x|^{-(s+1)}` from `|x|^2`.
#[inline]
pub(crate) fn kernel_factor(r2: f64, s: f64) -> f64 {
    r2.powf(-0.5 * (s + 1.0))
}

/// Direct summation of `R_eps mu(t) = sum_{|p_a - t| > eps} m_a K(p_a - t)`.
///
/// Each target sums its terms in atom order with cascade accumulation, so the
/// result does not depend on how targets are distributed over threads.
pub fn eval_brute(atoms: &AtomSet, targets: Targets<'_>, spec: &KernelSpec) -> Result<VecField> {
    let d = atoms.d();
    spec.check_dim(d)?;
    let n_targets = targets.count(atoms);
    let rows: Vec<Result<Vec<f64>>> = (0..n_targets)
        .into_par_iter()
        .map(|t| brute_one(atoms, targets.point(atoms, t), targets.excluded(t), t, spec))
        .collect();
    let mut values = Vec::with_capacity(n_targets * d);
    for row in rows {
        values.extend(row?);
    }
    Ok(VecField { dim: d, values })
}

fn brute_one(
    atoms: &AtomSet,
    target: &[f64],
    exclude: Option<usize>,
    t_index: usize,
    spec: &KernelSpec,
) -> Result<Vec<f64>> {
    let d = atoms.d();
    let eps2 = spec.eps * spec.eps;
    let mut acc = VecCascade::new(d);
    let mut diff = vec![0.0; d];
    for a in 0..atoms.len() {
        if exclude == Some(a) {
            continue;
        }
        let p = atoms.point(a);
        let mut r2 = 0.0;
        for k in 0..d {
            diff[k] = p[k] - target[k];
            r2 += diff[k] * diff[k];
        }
        if r2 <= eps2 {
            if r2 == 0.0 && spec.eps == 0.0 {
                return Err(Error::Singularity {
                    atom: a,
                    target: t_index,
                });
            }
            continue;
        }
        acc.push_scaled(atoms.mass(a) * kernel_factor(r2, spec.s), &diff);
    }
    Ok(acc.total())
}

/// `sum_a m_a |f(a)|^2`, the quadrature of `||f||^2_{L^2(mu)}`.
pub fn l2_norm_sq(field: &VecField, atoms: &AtomSet) -> f64 {
    let mut acc = Cascade::new();
    for a in 0..atoms.len() {
        let v = field.get(a);
        acc.push(atoms.mass(a) * v.iter().map(|x| x * x).sum::<f64>());
    }
    acc.total()
}

/// `sum_a m_a f(a)`, component-wise.
pub fn mu_integral(field: &VecField, atoms: &AtomSet) -> Vec<f64> {
    let mut acc = VecCascade::new(field.dim());
    for a in 0..atoms.len() {
        acc.push_scaled(atoms.mass(a), field.get(a));
    }
    acc.total()
}
