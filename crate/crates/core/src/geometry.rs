//! Corner Cantor construction: parameters, cube addressing, densities.
//!
//! At generation `n` every cube of generation `n - 1` is replaced by its
//! `2^d` corner sub-cubes of side `lambda_n` times the parent side. A cube is
//! addressed by its path of corner codes; bit `k` of a code selects the upper
//! corner along coordinate `k`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute slack used when testing point membership in closed cubes.
pub const MEMBERSHIP_TOL: f64 = 8.0 * f64::EPSILON;

/// Generative parameters of `E(lambda)` truncated at depth `N = lambda.len()`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CantorParams {
    d: usize,
    s: f64,
    lambda: Vec<f64>,
    tau0: f64,
}

impl CantorParams {
    /// Builds parameters with `tau0` set to the largest ratio.
    pub fn new(d: usize, s: f64, lambda: Vec<f64>) -> Result<Self> {
        if let Some((i, &l)) = lambda
            .iter()
            .enumerate()
            .find(|(_, l)| !(**l > 0.0 && **l < 0.5))
        {
            return Err(Error::RatioOutOfRange {
                n: i + 1,
                value: l,
                bound: 0.5,
            });
        }
        let tau0 = lambda.iter().copied().fold(0.0, f64::max);
        Self::with_tau0(d, s, lambda, tau0)
    }

    pub fn with_tau0(d: usize, s: f64, lambda: Vec<f64>, tau0: f64) -> Result<Self> {
        if d == 0 {
            return Err(Error::Parameter("dimension d must be at least 1".into()));
        }
        if !(s > 0.0 && s < d as f64) {
            return Err(Error::Parameter(format!(
                "kernel order s = {s} must satisfy 0 < s < d = {d}"
            )));
        }
        if !(tau0 < 0.5) || tau0 < 0.0 {
            return Err(Error::Parameter(format!(
                "upper ratio bound tau0 = {tau0} must lie in [0, 1/2)"
            )));
        }
        for (i, &l) in lambda.iter().enumerate() {
            if !(l > 0.0 && l <= tau0) {
                return Err(Error::RatioOutOfRange {
                    n: i + 1,
                    value: l,
                    bound: tau0,
                });
            }
        }
        Ok(Self { d, s, lambda, tau0 })
    }

    /// Constant ratio `lambda` at every one of `depth` generations.
    pub fn uniform(d: usize, s: f64, lambda: f64, depth: usize) -> Result<Self> {
        Self::new(d, s, vec![lambda; depth])
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    /// Construction depth `N`.
    pub fn depth(&self) -> usize {
        self.lambda.len()
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    pub fn tau0(&self) -> f64 {
        self.tau0
    }

    /// Number of corner codes per level, `2^d`.
    pub fn branching(&self) -> usize {
        1 << self.d
    }

    /// Side lengths `ell_0..=ell_N` by running product.
    pub fn sides(&self) -> Vec<f64> {
        let mut ell = Vec::with_capacity(self.lambda.len() + 1);
        let mut cur = 1.0;
        ell.push(cur);
        for &l in &self.lambda {
            cur *= l;
            ell.push(cur);
        }
        ell
    }

    /// Number of cubes at generation `n`.
    pub fn cube_count(&self, n: usize) -> usize {
        1usize << (n * self.d)
    }

    /// `mu(Q) = 2^{-nd}` for a generation-`n` cube.
    pub fn cube_mass(&self, n: usize) -> f64 {
        (-((n * self.d) as f64)).exp2()
    }
}

/// Address of a cube `Q^n_j`: the corner path from the unit cube.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CubeId {
    path: Vec<u32>,
}

impl CubeId {
    pub fn root() -> Self {
        Self { path: Vec::new() }
    }

    pub fn from_path(path: Vec<u32>) -> Self {
        Self { path }
    }

    /// Cube of generation `gen` whose lexicographic rank among its generation
    /// is `index` (base-`2^d` digits, most significant first).
    pub fn from_index(d: usize, gen: usize, index: usize) -> Self {
        let mask = (1usize << d) - 1;
        let path = (0..gen)
            .map(|i| ((index >> (d * (gen - 1 - i))) & mask) as u32)
            .collect();
        Self { path }
    }

    /// Lexicographic rank of this cube within its generation.
    pub fn index(&self, d: usize) -> usize {
        self.path
            .iter()
            .fold(0usize, |acc, &c| (acc << d) | c as usize)
    }

    pub fn gen(&self) -> usize {
        self.path.len()
    }

    pub fn path(&self) -> &[u32] {
        &self.path
    }

    pub fn child(&self, code: u32) -> Self {
        let mut path = self.path.clone();
        path.push(code);
        Self { path }
    }

    pub fn parent(&self) -> Option<Self> {
        if self.path.is_empty() {
            None
        } else {
            Some(Self {
                path: self.path[..self.path.len() - 1].to_vec(),
            })
        }
    }

    /// Corner path rendered as dot-separated codes (`"-"` for the root).
    pub fn label(&self) -> String {
        if self.path.is_empty() {
            "-".to_string()
        } else {
            self.path
                .iter()
                .map(u32::to_string)
                .collect::<Vec<_>>()
                .join(".")
        }
    }
}

/// The sequences `ell_n`, `theta_n` and `p_n` driving every capacity formula.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityProfile {
    pub d: usize,
    pub s: f64,
    pub ell: Vec<f64>,
    pub theta: Vec<f64>,
    pub p: Vec<f64>,
}

/// Computes `ell`, `theta` and `p` for validated parameters.
pub fn build_profile(params: &CantorParams) -> DensityProfile {
    let ell = params.sides();
    let theta: Vec<f64> = ell
        .iter()
        .enumerate()
        .map(|(n, &l)| params.cube_mass(n) / l.powf(params.s()))
        .collect();
    let p = potentials(&ell, &theta);
    DensityProfile {
        d: params.d(),
        s: params.s(),
        ell,
        theta,
        p,
    }
}

/// `p_j = sum_{k<=j} theta_k ell_j / ell_k`, summed term by term.
fn potentials(ell: &[f64], theta: &[f64]) -> Vec<f64> {
    (0..theta.len())
        .map(|j| (0..=j).map(|k| theta[k] * (ell[j] / ell[k])).sum())
        .collect()
}

impl DensityProfile {
    /// Reconstructs a profile from a prescribed density sequence.
    ///
    /// Side lengths follow from `theta_n = 2^{-nd} / ell_n^s`. The implied
    /// ratios need not be admissible, so lemmas relying on `lambda < 1/2`
    /// may fail on such profiles.
    pub fn from_theta(d: usize, s: f64, theta: Vec<f64>) -> Result<Self> {
        if theta.is_empty() {
            return Err(Error::Domain("density sequence is empty".into()));
        }
        if let Some((i, t)) = theta.iter().enumerate().find(|(_, t)| !(**t > 0.0)) {
            return Err(Error::Domain(format!("theta_{i} = {t} is not positive")));
        }
        if !(s > 0.0 && s < d as f64) {
            return Err(Error::Parameter(format!("s = {s} outside (0, {d})")));
        }
        let ell: Vec<f64> = theta
            .iter()
            .enumerate()
            .map(|(n, &t)| ((-((n * d) as f64)).exp2() / t).powf(1.0 / s))
            .collect();
        let p = potentials(&ell, &theta);
        Ok(Self { d, s, ell, theta, p })
    }

    pub fn depth(&self) -> usize {
        self.theta.len() - 1
    }

    /// `sum_{n=1}^{N} theta_n^2` (the capacity-formula convention).
    pub fn sum_theta_sq_from1(&self) -> f64 {
        self.theta.iter().skip(1).map(|t| t * t).sum()
    }

    /// `sum_{n=0}^{N} theta_n^2` (the transform-norm convention).
    pub fn sum_theta_sq_from0(&self) -> f64 {
        self.theta.iter().map(|t| t * t).sum()
    }
}

/// Lower corner and side of a cube.
pub fn cube_position(params: &CantorParams, id: &CubeId) -> Result<(Vec<f64>, f64)> {
    let gen = id.gen();
    if gen > params.depth() {
        return Err(Error::Depth {
            gen,
            depth: params.depth(),
        });
    }
    let d = params.d();
    let mut corner = vec![0.0; d];
    let mut side = 1.0;
    for (i, &code) in id.path().iter().enumerate() {
        if code as usize >= params.branching() {
            return Err(Error::Parameter(format!(
                "corner code {code} at level {} exceeds 2^d - 1",
                i + 1
            )));
        }
        let child = side * params.lambda()[i];
        let offset = side - child;
        for (k, c) in corner.iter_mut().enumerate() {
            if code >> k & 1 == 1 {
                *c += offset;
            }
        }
        side = child;
    }
    Ok((corner, side))
}

/// `p(Q, R) = sum over generations r..=q of theta_k ell_q / ell_k`.
pub fn p_between(profile: &DensityProfile, q: usize, r: usize) -> Result<f64> {
    if r > q {
        return Err(Error::ArgumentOrder { ancestor: r, gen: q });
    }
    if q > profile.depth() {
        return Err(Error::Depth {
            gen: q,
            depth: profile.depth(),
        });
    }
    let ell = &profile.ell;
    Ok((r..=q)
        .map(|k| profile.theta[k] * (ell[q] / ell[k]))
        .sum())
}

/// The generation-`n` cube containing `x`, or `None` if `x` lies outside `E_n`.
///
/// The branch at each level is chosen by comparing against the midpoint of
/// the parent, which lies in the gap between the corner children; a point
/// exactly on the midpoint takes the lower corner.
pub fn containing_cube(params: &CantorParams, x: &[f64], n: usize) -> Result<Option<CubeId>> {
    if n > params.depth() {
        return Err(Error::Depth {
            gen: n,
            depth: params.depth(),
        });
    }
    let d = params.d();
    if x.len() != d {
        return Err(Error::Parameter(format!(
            "point has {} coordinates, expected {d}",
            x.len()
        )));
    }
    if x.iter().any(|&v| v < -MEMBERSHIP_TOL || v > 1.0 + MEMBERSHIP_TOL) {
        return Ok(None);
    }
    let mut corner = vec![0.0; d];
    let mut side = 1.0;
    let mut path = Vec::with_capacity(n);
    for i in 0..n {
        let child = side * params.lambda()[i];
        let offset = side - child;
        let mut code = 0u32;
        for k in 0..d {
            let t = x[k] - corner[k];
            if t > 0.5 * side {
                if t < offset - MEMBERSHIP_TOL {
                    return Ok(None);
                }
                code |= 1 << k;
                corner[k] += offset;
            } else if t > child + MEMBERSHIP_TOL {
                return Ok(None);
            }
        }
        path.push(code);
        side = child;
    }
    Ok(Some(CubeId::from_path(path)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-14 * (1.0 + b.abs())
    }

    #[test]
    fn self_similar_profile_has_unit_density() {
        let params = CantorParams::uniform(1, 0.5, 0.25, 4).unwrap();
        let prof = build_profile(&params);
        for t in &prof.theta {
            assert!(close(*t, 1.0), "theta {t}");
        }
    }

    #[test]
    fn depth_zero_profile() {
        let params = CantorParams::new(2, 1.3, vec![]).unwrap();
        let prof = build_profile(&params);
        assert_eq!(prof.ell, vec![1.0]);
        assert_eq!(prof.theta, vec![1.0]);
        assert_eq!(prof.p, vec![1.0]);
    }

    #[test]
    fn potentials_match_geometric_series() {
        // p_j = sum_k 4^{-(j-k)} for theta = 1, lambda = 1/4.
        let params = CantorParams::uniform(1, 0.5, 0.25, 2).unwrap();
        let prof = build_profile(&params);
        let expect: Vec<f64> = (0..3)
            .map(|j| (0..=j).map(|i| 0.25f64.powi(i)).sum())
            .collect();
        assert_eq!(expect, vec![1.0, 1.25, 1.3125]);
        for (a, b) in prof.p.iter().zip(&expect) {
            assert!(close(*a, *b));
        }
    }

    #[test]
    fn rejects_inadmissible_ratio() {
        let err = CantorParams::new(1, 0.5, vec![0.2, 0.5, 0.1]).unwrap_err();
        assert_eq!(
            err,
            Error::RatioOutOfRange {
                n: 2,
                value: 0.5,
                bound: 0.5
            }
            .clone()
        );
        let err = CantorParams::with_tau0(1, 0.5, vec![0.2, 0.3], 0.25).unwrap_err();
        assert!(matches!(err, Error::RatioOutOfRange { n: 2, .. }));
        assert!(CantorParams::new(1, 0.5, vec![0.0]).is_err());
        assert!(CantorParams::new(1, 1.0, vec![0.2]).is_err());
    }

    #[test]
    fn positions() {
        let p = CantorParams::new(1, 0.5, vec![0.4, 0.3]).unwrap();
        let (c, side) = cube_position(&p, &CubeId::from_path(vec![1, 0])).unwrap();
        assert!(close(c[0], 0.6));
        assert!(close(side, 0.12));

        let p = CantorParams::new(3, 1.0, vec![0.2, 0.2]).unwrap();
        let (c, side) = cube_position(&p, &CubeId::root()).unwrap();
        assert_eq!(c, vec![0.0; 3]);
        assert_eq!(side, 1.0);

        let p = CantorParams::new(2, 1.0, vec![0.25]).unwrap();
        let (c, side) = cube_position(&p, &CubeId::from_path(vec![3])).unwrap();
        assert_eq!(c, vec![0.75, 0.75]);
        assert_eq!(side, 0.25);

        let err = cube_position(&p, &CubeId::from_path(vec![0, 0])).unwrap_err();
        assert_eq!(err, Error::Depth { gen: 2, depth: 1 });
    }

    #[test]
    fn p_between_cases() {
        let params = CantorParams::uniform(1, 0.5, 0.25, 3).unwrap();
        let prof = build_profile(&params);
        assert_eq!(p_between(&prof, 2, 2).unwrap(), prof.theta[2]);
        assert!(close(p_between(&prof, 2, 1).unwrap(), 1.25));
        for j in 0..=3 {
            assert!(close(p_between(&prof, j, 0).unwrap(), prof.p[j]));
        }
        assert_eq!(
            p_between(&prof, 1, 2).unwrap_err(),
            Error::ArgumentOrder { ancestor: 2, gen: 1 }
        );
    }

    #[test]
    fn containing_cube_cases() {
        let p = CantorParams::uniform(2, 1.0, 0.3, 3).unwrap();
        for n in 0..=3 {
            let id = containing_cube(&p, &[0.0, 0.0], n).unwrap().unwrap();
            assert_eq!(id.path(), vec![0; n].as_slice());
        }
        let p = CantorParams::new(1, 0.5, vec![0.25]).unwrap();
        assert_eq!(containing_cube(&p, &[0.5], 1).unwrap(), None);
        assert_eq!(
            containing_cube(&p, &[0.8], 1).unwrap(),
            Some(CubeId::from_path(vec![1]))
        );
        assert_eq!(containing_cube(&p, &[1.5], 0).unwrap(), None);
    }

    #[test]
    fn index_roundtrip() {
        for idx in 0..64 {
            let id = CubeId::from_index(2, 3, idx);
            assert_eq!(id.gen(), 3);
            assert_eq!(id.index(2), idx);
        }
        assert!(CubeId::from_index(1, 3, 3) < CubeId::from_index(1, 3, 4));
    }

    #[test]
    fn from_theta_recovers_sides() {
        let params = CantorParams::new(2, 1.2, vec![0.3, 0.1, 0.45]).unwrap();
        let prof = build_profile(&params);
        let back = DensityProfile::from_theta(2, 1.2, prof.theta.clone()).unwrap();
        for (a, b) in back.ell.iter().zip(&prof.ell) {
            assert!((a - b).abs() <= 1e-12 * b);
        }
        for (a, b) in back.p.iter().zip(&prof.p) {
            assert!((a - b).abs() <= 1e-12 * b);
        }
    }
}
