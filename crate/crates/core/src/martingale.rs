//! Conditional expectations `S_j` and martingale differences `D_j` on the
//! discrete measure carried by an [`AtomSet`].
//!
//! All operators are exact on the atoms: `S_j f` on a cube is the
//! mass-weighted mean of `f` over the atoms it contains.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::CubeId;
use crate::quadrature::AtomSet;
use crate::riesz::VecField;
use crate::stopping::StopSet;
use crate::sum::{Cascade, VecCascade};

/// A piecewise-constant function on the cubes of one generation.
#[derive(Clone, Debug, PartialEq)]
pub struct CellFunction {
    gen: usize,
    dim: usize,
    /// per-cube values, cube-major in lexicographic order
    values: Vec<f64>,
    /// `mu(Q)` as carried by the atoms
    masses: Vec<f64>,
}

impl CellFunction {
    pub fn gen(&self) -> usize {
        self.gen
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cube_count(&self) -> usize {
        self.masses.len()
    }

    pub fn value(&self, cube: usize) -> &[f64] {
        &self.values[cube * self.dim..(cube + 1) * self.dim]
    }

    pub fn get(&self, d: usize, id: &CubeId) -> Option<&[f64]> {
        if id.gen() != self.gen {
            return None;
        }
        let i = id.index(d);
        (i < self.cube_count()).then(|| self.value(i))
    }

    pub fn cube_mass(&self, cube: usize) -> f64 {
        self.masses[cube]
    }

    /// `sum_Q mu(Q) |v_Q|^2`.
    pub fn norm_sq(&self) -> f64 {
        let mut acc = Cascade::new();
        for q in 0..self.cube_count() {
            acc.push(self.masses[q] * self.value(q).iter().map(|v| v * v).sum::<f64>());
        }
        acc.total()
    }

    /// Evaluates the cell function at every atom.
    pub fn lift(&self, atoms: &AtomSet) -> VecField {
        let mut out = VecField::zeros(self.dim, atoms.len());
        for a in 0..atoms.len() {
            out.get_mut(a)
                .copy_from_slice(self.value(atoms.cube_index(a, self.gen)));
        }
        out
    }
}

fn check(f: &VecField, atoms: &AtomSet, gen: usize) -> Result<()> {
    if f.len() != atoms.len() {
        return Err(Error::Parameter(format!(
            "function has {} values for {} atoms",
            f.len(),
            atoms.len()
        )));
    }
    if gen > atoms.depth() {
        return Err(Error::Depth {
            gen,
            depth: atoms.depth(),
        });
    }
    Ok(())
}

/// `S_j f`: the `mu`-average of `f` over each generation-`j` cube.
pub fn project(f: &VecField, atoms: &AtomSet, j: usize) -> Result<CellFunction> {
    check(f, atoms, j)?;
    let dim = f.dim();
    let n_cubes = 1usize << (atoms.d() * j);
    // group atoms by cube, keeping atom order inside each group
    let mut counts = vec![0usize; n_cubes + 1];
    for a in 0..atoms.len() {
        counts[atoms.cube_index(a, j) + 1] += 1;
    }
    for q in 0..n_cubes {
        counts[q + 1] += counts[q];
    }
    let mut cursor = counts.clone();
    let mut grouped = vec![0usize; atoms.len()];
    for a in 0..atoms.len() {
        let q = atoms.cube_index(a, j);
        grouped[cursor[q]] = a;
        cursor[q] += 1;
    }
    let mut values = vec![0.0; n_cubes * dim];
    let mut masses = vec![0.0; n_cubes];
    for q in 0..n_cubes {
        let mut m = Cascade::new();
        let mut acc = VecCascade::new(dim);
        for &a in &grouped[counts[q]..counts[q + 1]] {
            m.push(atoms.mass(a));
            acc.push_scaled(atoms.mass(a), f.get(a));
        }
        let mass = m.total();
        masses[q] = mass;
        if mass > 0.0 {
            let out = &mut values[q * dim..(q + 1) * dim];
            acc.write_total(out);
            out.iter_mut().for_each(|v| *v /= mass);
        }
    }
    Ok(CellFunction {
        gen: j,
        dim,
        values,
        masses,
    })
}

/// `D_j f = S_{j+1} f - S_j f` as a generation-`(j+1)` cell function.
pub fn difference(f: &VecField, atoms: &AtomSet, j: usize) -> Result<CellFunction> {
    if j >= atoms.depth() {
        return Err(Error::Depth {
            gen: j + 1,
            depth: atoms.depth(),
        });
    }
    let coarse = project(f, atoms, j)?;
    let fine = project(f, atoms, j + 1)?;
    Ok(jump(&coarse, &fine, atoms.d()))
}

fn jump(coarse: &CellFunction, fine: &CellFunction, d: usize) -> CellFunction {
    let dim = fine.dim;
    let mut values = fine.values.clone();
    for q in 0..fine.cube_count() {
        let parent = coarse.value(q >> d);
        for (v, c) in values[q * dim..(q + 1) * dim].iter_mut().zip(parent) {
            *v -= c;
        }
    }
    CellFunction {
        gen: fine.gen,
        dim,
        values,
        masses: fine.masses.clone(),
    }
}

/// Norms of the martingale decomposition of `f` plus identity residuals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecompositionReport {
    /// `||D_j f||^2` for `j = 0..N-1`
    pub d_norms: Vec<f64>,
    /// `||S_0 f||^2`
    pub s0_norm: f64,
    /// `||S_N f||^2`
    #[serde(rename = "sN_norm")]
    pub sn_norm: f64,
    /// `max_{j != k} |<D_j f, D_k f>|`
    pub max_cross_inner: f64,
    /// `||f||^2`
    pub f_norm: f64,
    /// `max_a |S_N f - S_0 f - sum_j D_j f|(a) / (1 + |f(a)|)`
    pub telescoping_residual: f64,
    /// `|‖S_N f‖^2 - ‖S_0 f‖^2 - sum_j ‖D_j f‖^2| / max(‖S_N f‖^2, tiny)`
    pub parseval_residual: f64,
}

/// Martingale decomposition of `f` with the telescoping, Parseval and
/// orthogonality checks evaluated at atom resolution.
pub fn decompose(f: &VecField, atoms: &AtomSet) -> Result<DecompositionReport> {
    check(f, atoms, 0)?;
    let depth = atoms.depth();
    let d = atoms.d();
    let projections: Vec<CellFunction> = (0..=depth)
        .map(|j| project(f, atoms, j))
        .collect::<Result<_>>()?;
    let diffs: Vec<VecField> = (0..depth)
        .map(|j| jump(&projections[j], &projections[j + 1], d).lift(atoms))
        .collect();

    let d_norms: Vec<f64> = diffs.iter().map(|g| weighted_inner(g, g, atoms)).collect();
    let s0_norm = projections[0].norm_sq();
    let sn_norm = projections[depth].norm_sq();

    let mut max_cross_inner: f64 = 0.0;
    for j in 0..depth {
        for k in j + 1..depth {
            max_cross_inner = max_cross_inner.max(weighted_inner(&diffs[j], &diffs[k], atoms).abs());
        }
    }

    let s0 = projections[0].lift(atoms);
    let sn = projections[depth].lift(atoms);
    let mut telescoping_residual: f64 = 0.0;
    for a in 0..atoms.len() {
        let mag = f.norm_at(a);
        for c in 0..f.dim() {
            let mut acc = s0.get(a)[c];
            for g in &diffs {
                acc += g.get(a)[c];
            }
            let r = (sn.get(a)[c] - acc).abs() / (1.0 + mag);
            telescoping_residual = telescoping_residual.max(r);
        }
    }
    let parts = s0_norm + d_norms.iter().sum::<f64>();
    let parseval_residual = (sn_norm - parts).abs() / sn_norm.max(f64::MIN_POSITIVE);
    let f_norm = crate::riesz::l2_norm_sq(f, atoms);
    Ok(DecompositionReport {
        d_norms,
        s0_norm,
        sn_norm,
        max_cross_inner,
        f_norm,
        telescoping_residual,
        parseval_residual,
    })
}

/// `<f, g>_mu` at atom resolution.
pub fn weighted_inner(f: &VecField, g: &VecField, atoms: &AtomSet) -> f64 {
    let mut acc = Cascade::new();
    for a in 0..atoms.len() {
        let dot: f64 = f.get(a).iter().zip(g.get(a)).map(|(x, y)| x * y).sum();
        acc.push(atoms.mass(a) * dot);
    }
    acc.total()
}

/// `||T_k f||^2` for every stopping interval, with
/// `T_k f = S_{s_{k+1}} f - S_{s_k} f` evaluated directly at the atoms.
pub fn grouped(f: &VecField, atoms: &AtomSet, stops: &StopSet) -> Result<Vec<f64>> {
    if stops.depth() != atoms.depth() {
        return Err(Error::Parameter(format!(
            "stop set depth {} does not match atom depth {}",
            stops.depth(),
            atoms.depth()
        )));
    }
    let scales = stops.scales();
    let mut lifted: Vec<Option<VecField>> = vec![None; atoms.depth() + 1];
    for &s in scales {
        lifted[s] = Some(project(f, atoms, s)?.lift(atoms));
    }
    let mut out = Vec::with_capacity(scales.len().saturating_sub(1));
    for w in scales.windows(2) {
        let hi = lifted[w[1]].as_ref().expect("projected");
        let lo = lifted[w[0]].as_ref().expect("projected");
        let mut acc = Cascade::new();
        for a in 0..atoms.len() {
            let v: f64 = hi
                .get(a)
                .iter()
                .zip(lo.get(a))
                .map(|(x, y)| (x - y) * (x - y))
                .sum();
            acc.push(atoms.mass(a) * v);
        }
        out.push(acc.total());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::CantorParams;
    use crate::quadrature::atomize;

    fn xcoord(atoms: &AtomSet) -> VecField {
        VecField::new(1, (0..atoms.len()).map(|a| atoms.point(a)[0]).collect()).unwrap()
    }

    #[test]
    fn constants_are_preserved() {
        let params = CantorParams::new(2, 1.0, vec![0.3, 0.2]).unwrap();
        let atoms = atomize(&params, 2).unwrap();
        let f = VecField::new(1, vec![2.5; atoms.len()]).unwrap();
        for j in 0..=2 {
            let cell = project(&f, &atoms, j).unwrap();
            for q in 0..cell.cube_count() {
                assert!((cell.value(q)[0] - 2.5).abs() < 1e-15);
            }
        }
        let diff = difference(&f, &atoms, 1).unwrap();
        assert!(diff.norm_sq() < 1e-28);
        let rep = decompose(&f, &atoms).unwrap();
        assert!(rep.d_norms.iter().all(|v| *v < 1e-28));
        assert!((rep.sn_norm - rep.s0_norm).abs() < 1e-14);
    }

    #[test]
    fn finest_projection_is_identity_with_one_atom_per_leaf() {
        let params = CantorParams::new(1, 0.5, vec![0.3, 0.2, 0.4]).unwrap();
        let atoms = atomize(&params, 1).unwrap();
        let f = xcoord(&atoms);
        let cell = project(&f, &atoms, 3).unwrap();
        for a in 0..atoms.len() {
            assert_eq!(cell.value(a), f.get(a));
        }
    }

    #[test]
    fn symmetric_centres() {
        let params = CantorParams::new(1, 0.5, vec![0.25]).unwrap();
        let atoms = atomize(&params, 1).unwrap();
        let f = xcoord(&atoms);
        assert_eq!(project(&f, &atoms, 0).unwrap().value(0), &[0.5]);
        let diff = difference(&f, &atoms, 0).unwrap();
        assert_eq!(diff.value(0), &[-0.375]);
        assert_eq!(diff.value(1), &[0.375]);
        assert_eq!(diff.get(1, &CubeId::from_path(vec![1])).unwrap(), &[0.375]);
    }

    #[test]
    fn differences_have_zero_mean() {
        let params = CantorParams::new(2, 1.0, vec![0.4, 0.1, 0.3]).unwrap();
        let atoms = atomize(&params, 2).unwrap();
        let vals: Vec<f64> = (0..atoms.len() * 2)
            .map(|i| ((i * 7919) % 101) as f64 / 13.0 - 3.0)
            .collect();
        let f = VecField::new(2, vals).unwrap();
        for j in 0..3 {
            let lifted = difference(&f, &atoms, j).unwrap().lift(&atoms);
            let mean = crate::riesz::mu_integral(&lifted, &atoms);
            assert!(mean.iter().all(|m| m.abs() < 1e-12), "{mean:?}");
        }
    }

    #[test]
    fn depth_errors() {
        let params = CantorParams::new(1, 0.5, vec![0.25]).unwrap();
        let atoms = atomize(&params, 1).unwrap();
        let f = xcoord(&atoms);
        assert!(matches!(project(&f, &atoms, 2), Err(Error::Depth { .. })));
        assert!(matches!(difference(&f, &atoms, 1), Err(Error::Depth { .. })));
    }
}
