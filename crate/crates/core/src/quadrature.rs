//! Atomization of the normalized Lebesgue measure on `E_N` and ball masses.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::geometry::{cube_position, CantorParams, CubeId};

/// Default cap on the number of atoms produced by [`atomize`].
pub const DEFAULT_ATOM_BUDGET: usize = 1 << 24;

/// Default relative tolerance of the sub-leaf volume integration in
/// [`ball_mass`].
pub const DEFAULT_BALL_TOL: f64 = 1e-6;

/// Maximum number of dyadic refinements of a leaf box in [`ball_mass`].
pub const BALL_DEPTH_CAP: u32 = 40;

/// Weighted point masses approximating `mu`.
///
/// Leaves appear in lexicographic path order and each leaf owns a contiguous
/// block of `refine_k^d` atoms ordered row-major by sub-grid index (last
/// coordinate fastest).
#[derive(Clone, Debug)]
pub struct AtomSet {
    d: usize,
    depth: usize,
    refine_k: usize,
    points: Vec<f64>,
    masses: Vec<f64>,
    leaf_of: Vec<u32>,
}

impl AtomSet {
    /// Assembles an atom set from raw parts (used by tests and tools that
    /// place atoms directly). `leaf_of` holds the lexicographic leaf index.
    pub fn from_parts(
        d: usize,
        depth: usize,
        points: Vec<f64>,
        masses: Vec<f64>,
        leaf_of: Vec<u32>,
    ) -> Result<Self> {
        if d == 0 || points.len() != masses.len() * d || leaf_of.len() != masses.len() {
            return Err(Error::Parameter("inconsistent atom set sizes".into()));
        }
        Ok(Self {
            d,
            depth,
            refine_k: 1,
            points,
            masses,
            leaf_of,
        })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn refine_k(&self) -> usize {
        self.refine_k
    }

    pub fn len(&self) -> usize {
        self.masses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.masses.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.d..(i + 1) * self.d]
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn mass(&self, i: usize) -> f64 {
        self.masses[i]
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    /// Lexicographic index of the leaf holding atom `i`.
    pub fn leaf_index(&self, i: usize) -> usize {
        self.leaf_of[i] as usize
    }

    pub fn leaf_cube(&self, i: usize) -> CubeId {
        CubeId::from_index(self.d, self.depth, self.leaf_index(i))
    }

    /// Index of the generation-`gen` cube containing atom `i`.
    pub fn cube_index(&self, i: usize, gen: usize) -> usize {
        self.leaf_index(i) >> (self.d * (self.depth - gen))
    }

    /// CSV dump with header `x0,...,x{d-1},mass,leaf_path`.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for k in 0..self.d {
            let _ = write!(out, "x{k},");
        }
        out.push_str("mass,leaf_path\n");
        for i in 0..self.len() {
            for v in self.point(i) {
                let _ = write!(out, "{},", crate::experiment::fmt_real(*v));
            }
            let _ = writeln!(
                out,
                "{},{}",
                crate::experiment::fmt_real(self.mass(i)),
                self.leaf_cube(i).label()
            );
        }
        out
    }
}

/// Places `refine_k^d` equal atoms at the sub-grid centres of every leaf.
pub fn atomize(params: &CantorParams, refine_k: usize) -> Result<AtomSet> {
    atomize_with_budget(params, refine_k, DEFAULT_ATOM_BUDGET)
}

pub fn atomize_with_budget(
    params: &CantorParams,
    refine_k: usize,
    budget: usize,
) -> Result<AtomSet> {
    if refine_k == 0 {
        return Err(Error::Parameter("refine_k must be at least 1".into()));
    }
    let d = params.d();
    let depth = params.depth();
    let count = (refine_k as u128)
        .checked_pow(d as u32)
        .and_then(|c| c.checked_mul(1u128 << (depth * d).min(127)))
        .unwrap_or(u128::MAX);
    if count > budget as u128 || depth * d >= 32 {
        return Err(Error::Budget { count, budget });
    }
    let n_leaves = params.cube_count(depth);
    let per_leaf = refine_k.pow(d as u32);
    let mass = params.cube_mass(depth) / per_leaf as f64;
    let n = n_leaves * per_leaf;

    let mut points = Vec::with_capacity(n * d);
    let mut leaf_of = Vec::with_capacity(n);
    let mut sub = vec![0usize; d];
    for leaf in 0..n_leaves {
        let (corner, side) = cube_position(params, &CubeId::from_index(d, depth, leaf))?;
        let h = side / refine_k as f64;
        sub.iter_mut().for_each(|v| *v = 0);
        for _ in 0..per_leaf {
            for k in 0..d {
                points.push(corner[k] + (sub[k] as f64 + 0.5) * h);
            }
            leaf_of.push(leaf as u32);
            // row-major increment, last coordinate fastest
            for k in (0..d).rev() {
                sub[k] += 1;
                if sub[k] < refine_k {
                    break;
                }
                sub[k] = 0;
            }
        }
    }
    Ok(AtomSet {
        d,
        depth,
        refine_k,
        points,
        masses: vec![mass; n],
        leaf_of,
    })
}

/// `mu(B(x, r))` for the closed ball, with the default tolerance.
pub fn ball_mass(params: &CantorParams, x: &[f64], r: f64) -> f64 {
    ball_mass_with_tol(params, x, r, DEFAULT_BALL_TOL)
}

/// `mu(B(x, r))` by descent through the cube tree.
///
/// Whole cubes inside the ball contribute their mass, disjoint cubes nothing.
/// Straddled leaves integrate Lebesgue measure of ball ∩ leaf: exactly in one
/// dimension, otherwise by dyadic subdivision until a box is at most `tol`
/// of the leaf volume, where the remaining straddled boxes are estimated
/// from the signed radial distance of their centre.
pub fn ball_mass_with_tol(params: &CantorParams, x: &[f64], r: f64, tol: f64) -> f64 {
    if !(r > 0.0) {
        return 0.0;
    }
    let ell = params.sides();
    let mut corner = vec![0.0; params.d()];
    descend(params, &ell, x, r, tol, 0, &mut corner)
}

fn descend(
    params: &CantorParams,
    ell: &[f64],
    x: &[f64],
    r: f64,
    tol: f64,
    gen: usize,
    corner: &mut [f64],
) -> f64 {
    let side = ell[gen];
    let r2 = r * r;
    let (near, far) = box_distances(x, corner, &vec![side; corner.len()]);
    if near > r2 {
        return 0.0;
    }
    let mass = params.cube_mass(gen);
    if far <= r2 {
        return mass;
    }
    if gen == params.depth() {
        let frac = if x.len() == 1 {
            let lo = (x[0] - r).max(corner[0]);
            let hi = (x[0] + r).min(corner[0] + side);
            ((hi - lo) / side).clamp(0.0, 1.0)
        } else {
            let depth_cap = ((1.0 / tol).log2() / x.len() as f64)
                .ceil()
                .clamp(0.0, BALL_DEPTH_CAP as f64) as u32;
            let widths = vec![side; x.len()];
            box_fraction(x, r, corner, &widths, depth_cap)
        };
        return mass * frac;
    }
    let child = ell[gen + 1];
    let offset = side - child;
    let mut total = 0.0;
    for code in 0..params.branching() {
        let mut sub = corner.to_vec();
        for (k, c) in sub.iter_mut().enumerate() {
            if code >> k & 1 == 1 {
                *c += offset;
            }
        }
        total += descend(params, ell, x, r, tol, gen + 1, &mut sub);
    }
    total
}

/// Squared distances from `x` to the nearest and farthest points of a box.
fn box_distances(x: &[f64], lo: &[f64], widths: &[f64]) -> (f64, f64) {
    let mut near = 0.0;
    let mut far = 0.0;
    for k in 0..x.len() {
        let a = lo[k] - x[k];
        let b = lo[k] + widths[k] - x[k];
        let n = if a > 0.0 {
            a
        } else if b < 0.0 {
            -b
        } else {
            0.0
        };
        let f = a.abs().max(b.abs());
        near += n * n;
        far += f * f;
    }
    (near, far)
}

/// Fraction of the box volume inside the closed ball.
fn box_fraction(x: &[f64], r: f64, lo: &[f64], widths: &[f64], depth_left: u32) -> f64 {
    let r2 = r * r;
    let (near, far) = box_distances(x, lo, widths);
    if near > r2 {
        return 0.0;
    }
    if far <= r2 {
        return 1.0;
    }
    let d = x.len();
    if depth_left == 0 {
        let mut dist2 = 0.0;
        let mut extent = 0.0;
        let centre: Vec<f64> = (0..d).map(|k| lo[k] + 0.5 * widths[k]).collect();
        for k in 0..d {
            dist2 += (centre[k] - x[k]).powi(2);
        }
        let dist = dist2.sqrt();
        for k in 0..d {
            let u = if dist > 0.0 { (centre[k] - x[k]) / dist } else { 1.0 };
            extent += u.abs() * widths[k];
        }
        return (0.5 + (r - dist) / extent).clamp(0.0, 1.0);
    }
    let half: Vec<f64> = widths.iter().map(|w| 0.5 * w).collect();
    let mut acc = 0.0;
    let mut sub = vec![0.0; d];
    for code in 0..(1usize << d) {
        for k in 0..d {
            sub[k] = lo[k] + if code >> k & 1 == 1 { half[k] } else { 0.0 };
        }
        acc += box_fraction(x, r, &sub, &half, depth_left - 1);
    }
    acc / (1usize << d) as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn leaf_centres_in_one_dimension() {
        let p = CantorParams::new(1, 0.5, vec![0.25]).unwrap();
        let a = atomize(&p, 1).unwrap();
        assert_eq!(a.points(), &[0.125, 0.875]);
        assert_eq!(a.masses(), &[0.5, 0.5]);
    }

    #[test]
    fn unit_interval_split() {
        let p = CantorParams::new(1, 0.5, vec![]).unwrap();
        let a = atomize(&p, 2).unwrap();
        assert_eq!(a.points(), &[0.25, 0.75]);
        assert_eq!(a.masses(), &[0.5, 0.5]);
    }

    #[test]
    fn planar_corner_cubes() {
        let p = CantorParams::new(2, 1.0, vec![0.3]).unwrap();
        let a = atomize(&p, 1).unwrap();
        assert_eq!(a.len(), 4);
        let expect = [[0.15, 0.15], [0.85, 0.15], [0.15, 0.85], [0.85, 0.85]];
        for (i, e) in expect.iter().enumerate() {
            assert!((a.point(i)[0] - e[0]).abs() < 1e-15);
            assert!((a.point(i)[1] - e[1]).abs() < 1e-15);
            assert_eq!(a.mass(i), 0.25);
        }
    }

    #[test]
    fn row_major_within_leaf() {
        let p = CantorParams::new(2, 1.0, vec![]).unwrap();
        let a = atomize(&p, 2).unwrap();
        assert_eq!(a.points(), &[0.25, 0.25, 0.25, 0.75, 0.75, 0.25, 0.75, 0.75]);
    }

    #[test]
    fn budget_is_enforced() {
        let p = CantorParams::uniform(2, 1.0, 0.25, 6).unwrap();
        let err = atomize_with_budget(&p, 4, 1000).unwrap_err();
        assert_eq!(
            err,
            Error::Budget {
                count: 65536,
                budget: 1000
            }
        );
    }

    #[test]
    fn cube_masses_are_reproduced() {
        let p = CantorParams::new(2, 1.0, vec![0.3, 0.2, 0.4]).unwrap();
        let a = atomize(&p, 3).unwrap();
        for gen in 0..=3 {
            let mut sums = vec![0.0; p.cube_count(gen)];
            for i in 0..a.len() {
                sums[a.cube_index(i, gen)] += a.mass(i);
            }
            for s in sums {
                assert!((s - p.cube_mass(gen)).abs() < 1e-13 * p.cube_mass(gen));
            }
        }
    }

    #[test]
    fn ball_mass_examples() {
        let p = CantorParams::new(1, 0.5, vec![0.25]).unwrap();
        assert_eq!(ball_mass(&p, &[0.125], 0.125), 0.5);
        assert!((ball_mass(&p, &[0.125], 0.0625) - 0.25).abs() < 1e-15);
        assert_eq!(ball_mass(&p, &[0.125], 1.0), 1.0);
        let p2 = CantorParams::new(2, 1.0, vec![0.25, 0.3]).unwrap();
        assert_eq!(ball_mass(&p2, &[0.1, 0.1], 2.0f64.sqrt()), 1.0);
    }

    #[test]
    fn planar_disc_inside_leaf() {
        // disc of radius r inside a single leaf: pi r^2 / leaf area * mass
        let p = CantorParams::new(2, 1.0, vec![]).unwrap();
        let r = 0.2;
        let got = ball_mass(&p, &[0.5, 0.5], r);
        let exact = std::f64::consts::PI * r * r;
        assert!((got - exact).abs() < 1e-5, "{got} vs {exact}");
        // quarter disc at a corner
        let got = ball_mass(&p, &[0.0, 0.0], r);
        assert!((got - exact / 4.0).abs() < 1e-5, "{got}");
    }
}
