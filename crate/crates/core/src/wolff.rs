//! Wolff potentials, the capacity formula and a positive-measure capacity estimate.
//!
//! The potential uses the exponent `e = d - alpha p`, so that at
//! `alpha = (2/3)(d - s)`, `p = 3/2` the integrand is `(mu(B(x,r)) / r^s)^2`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{build_profile, containing_cube, CantorParams, DensityProfile};
use crate::quadrature::{ball_mass, AtomSet};
use crate::riesz::{eval_brute, KernelSpec, Targets};

/// Largest number of halo points evaluated by [`gamma_plus_lower_bound`].
pub const HALO_POINT_BUDGET: usize = 1 << 22;

/// Radius factor below the leaf side where shell sums stop.
const SUB_LEAF_OCTAVES: i32 = 10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WolffParams {
    pub alpha: f64,
    pub p: f64,
}

impl WolffParams {
    pub fn new(alpha: f64, p: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::Parameter(format!("alpha = {alpha} must be positive")));
        }
        if !(p > 1.0 && p.is_finite()) {
            return Err(Error::Parameter(format!("p = {p} must exceed 1")));
        }
        Ok(Self { alpha, p })
    }

    /// `alpha = (2/3)(d - s)`, `p = 3/2`.
    pub fn specialized(d: usize, s: f64) -> Result<Self> {
        Self::new(2.0 / 3.0 * (d as f64 - s), 1.5)
    }

    pub fn pprime(&self) -> f64 {
        self.p / (self.p - 1.0)
    }

    pub fn exponent(&self, d: usize) -> f64 {
        d as f64 - self.alpha * self.p
    }

    /// Checks `0 < alpha p < d`.
    pub fn check_dim(&self, d: usize) -> Result<()> {
        let ap = self.alpha * self.p;
        if ap < d as f64 {
            Ok(())
        } else {
            Err(Error::Parameter(format!(
                "alpha * p = {ap} must be below d = {d}"
            )))
        }
    }
}

/// `int_0^inf (mu(B(x,r)) / r^e)^{p'-1} dr / r`.
///
/// Shells `r_k = r_max 2^{-k / shells_per_octave}` run from
/// `r_max = max(2 sqrt(d), farthest corner of [0,1]^d)` down to
/// `ell_N 2^{-10}` with the midpoint rule in `log r`. Above `r_max` the ball
/// holds all the mass and the tail is integrated exactly. Below the last shell,
/// for `x` in `E_N`, the ball meets a single leaf where `mu` is a multiple of
/// Lebesgue measure, so the integrand scales like `r^{(d-e)(p'-1)}` and that
/// tail is integrated exactly as well.
pub fn wolff_potential(
    params: &CantorParams,
    x: &[f64],
    w: &WolffParams,
    shells_per_octave: usize,
) -> Result<f64> {
    let d = params.d();
    w.check_dim(d)?;
    let e = w.exponent(d);
    let q = w.pprime() - 1.0;
    shell_integral(params, x, shells_per_octave, e, q, &|m, r| {
        (m / r.powf(e)).powf(q)
    })
}

/// [`wolff_potential`] at the specialized indices, with the integrand written
/// directly as `(mu(B(x,r)) / r^s)^2`.
pub fn wolff_potential_s(params: &CantorParams, x: &[f64], shells_per_octave: usize) -> Result<f64> {
    let s = params.s();
    shell_integral(params, x, shells_per_octave, s, 2.0, &|m, r| {
        let v = m / r.powf(s);
        v * v
    })
}

fn shell_integral(
    params: &CantorParams,
    x: &[f64],
    shells_per_octave: usize,
    e: f64,
    q: f64,
    integrand: &(dyn Fn(f64, f64) -> f64 + Sync),
) -> Result<f64> {
    let d = params.d();
    if x.len() != d || x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Parameter(format!(
            "evaluation point must have {d} finite coordinates"
        )));
    }
    if shells_per_octave == 0 {
        return Err(Error::Parameter("shells_per_octave must be positive".into()));
    }
    let far = x
        .iter()
        .map(|&v| v.abs().max((1.0 - v).abs()).powi(2))
        .sum::<f64>()
        .sqrt();
    let r_max = (2.0 * (d as f64).sqrt()).max(far);
    let ell_n = params.sides()[params.depth()];
    let r_min = ell_n * 2f64.powi(-SUB_LEAF_OCTAVES);
    let spo = shells_per_octave as f64;
    let shells = (spo * (r_max / r_min).log2()).ceil() as usize;
    let step = std::f64::consts::LN_2 / spo;

    let body: f64 = (0..shells)
        .into_par_iter()
        .map(|k| {
            let r = r_max * (-(k as f64 + 0.5) / spo).exp2();
            integrand(ball_mass(params, x, r), r) * step
        })
        .collect::<Vec<_>>()
        .iter()
        .sum();

    // all mass inside B(x, r) for r >= r_max
    let outer = integrand(1.0, r_max) / (e * q);

    let r_cut = r_max * (-(shells as f64) / spo).exp2();
    let inner = if containing_cube(params, x, params.depth())?.is_some() {
        integrand(ball_mass(params, x, r_cut), r_cut) / ((d as f64 - e) * q)
    } else {
        0.0
    };
    Ok(body + outer + inner)
}

/// `sum_{n=0}^{N} theta(Q^n(x))^2 + theta_N^2 / (2(d - s))` for `x` in `E_N`.
pub fn wolff_discrete_s(params: &CantorParams, x: &[f64]) -> Result<f64> {
    let n = params.depth();
    if containing_cube(params, x, n)?.is_none() {
        return Err(Error::Domain(format!("point {x:?} lies outside E_{n}")));
    }
    let s = params.s();
    let sides = params.sides();
    let theta: Vec<f64> = (0..=n)
        .map(|g| params.cube_mass(g) / sides[g].powf(s))
        .collect();
    let sum: f64 = theta.iter().map(|t| t * t).sum();
    Ok(sum + theta[n] * theta[n] / (2.0 * (params.d() as f64 - s)))
}

/// `(sum_{n=1}^{N} theta_n^2)^{-1/2}`.
pub fn capacity_wolff(params: &CantorParams) -> Result<f64> {
    capacity_of_profile(&build_profile(params))
}

/// `(sum_{n=0}^{N} theta_n^2)^{-1/2}`.
pub fn capacity_wolff_from0(params: &CantorParams) -> Result<f64> {
    capacity_of_profile_from0(&build_profile(params))
}

pub fn capacity_of_profile(profile: &DensityProfile) -> Result<f64> {
    if profile.depth() == 0 {
        return Err(Error::Domain(
            "capacity formula needs N >= 1 (empty sum at N = 0)".into(),
        ));
    }
    Ok(profile.sum_theta_sq_from1().powf(-0.5))
}

pub fn capacity_of_profile_from0(profile: &DensityProfile) -> Result<f64> {
    Ok(profile.sum_theta_sq_from0().powf(-0.5))
}

/// Regular grid over `[-margin, 1 + margin]^d`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HaloGrid {
    pub margin: f64,
    pub spacing: f64,
}

impl HaloGrid {
    /// Margin `0.5`, spacing `ell_N / 2`.
    pub fn standard(params: &CantorParams) -> Self {
        Self {
            margin: 0.5,
            spacing: 0.5 * params.sides()[params.depth()],
        }
    }

    /// Same extent with `factor` times as many points per axis.
    pub fn refined(&self, factor: usize) -> Self {
        Self {
            margin: self.margin,
            spacing: self.spacing / factor as f64,
        }
    }

    fn per_axis(&self) -> usize {
        ((1.0 + 2.0 * self.margin) / self.spacing).floor() as usize + 1
    }

    fn point_count(&self, d: usize) -> Option<usize> {
        self.per_axis().checked_pow(d as u32)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GammaPlusEstimate {
    /// `mu(E) / M`
    pub value: f64,
    /// `value * (sum_{n=1}^{N} theta_n^2)^{1/2}`; absent at `N = 0`
    pub normalized: Option<f64>,
    pub sup_field: f64,
    pub sup_on_atoms: f64,
    pub sup_on_halo: f64,
    pub halo_points: usize,
    pub halo_skipped: usize,
    pub caveat: String,
}

/// `1 / sup |R mu|` with the sup taken over the atoms and a halo grid.
///
/// Halo points closer than one atom spacing to `E_N` are skipped, since there
/// the atomized field reflects the point masses rather than `mu`. The sup over
/// finitely many points only estimates the sup over `R^d`, so the result is a
/// heuristic lower bound.
pub fn gamma_plus_lower_bound(
    atoms: &AtomSet,
    params: &CantorParams,
    halo: &HaloGrid,
) -> Result<GammaPlusEstimate> {
    let d = params.d();
    if atoms.d() != d || atoms.depth() != params.depth() {
        return Err(Error::Parameter(
            "atoms were not produced from these parameters".into(),
        ));
    }
    if !(halo.spacing > 0.0 && halo.margin >= 0.0) {
        return Err(Error::Parameter(format!(
            "halo spacing {} must be positive and margin {} nonnegative",
            halo.spacing, halo.margin
        )));
    }
    let total = halo.point_count(d).filter(|&c| c <= HALO_POINT_BUDGET);
    let total = total.ok_or(Error::Budget {
        count: (halo.per_axis() as u128).saturating_pow(d as u32),
        budget: HALO_POINT_BUDGET,
    })?;
    let spec = KernelSpec::new(params.s(), 0.0)?;
    let on_atoms = eval_brute(atoms, Targets::Atoms { self_exclude: true }, &spec)?;
    let sup_on_atoms = (0..on_atoms.len())
        .map(|i| on_atoms.norm_at(i))
        .fold(0.0, f64::max);

    let sides = params.sides();
    let guard = sides[params.depth()] / atoms.refine_k() as f64;
    let per_axis = halo.per_axis();
    let mut kept = Vec::new();
    let mut pt = vec![0.0; d];
    for idx in 0..total {
        let mut rest = idx;
        for c in pt.iter_mut().rev() {
            *c = -halo.margin + (rest % per_axis) as f64 * halo.spacing;
            rest /= per_axis;
        }
        if distance_to_leaves(params, &sides, &pt, guard) >= guard {
            kept.extend_from_slice(&pt);
        }
    }
    let halo_points = kept.len() / d;
    let on_halo = eval_brute(atoms, Targets::Points(&kept), &spec)?;
    let sup_on_halo = (0..on_halo.len())
        .map(|i| on_halo.norm_at(i))
        .fold(0.0, f64::max);

    let sup_field = sup_on_atoms.max(sup_on_halo);
    if !(sup_field > 0.0 && sup_field.is_finite()) {
        return Err(Error::Internal(format!(
            "sup of the field is {sup_field}, expected a positive finite value"
        )));
    }
    let mass: f64 = atoms.masses().iter().sum();
    let value = mass / sup_field;
    let profile = build_profile(params);
    let normalized = (profile.depth() > 0).then(|| value * profile.sum_theta_sq_from1().sqrt());
    Ok(GammaPlusEstimate {
        value,
        normalized,
        sup_field,
        sup_on_atoms,
        sup_on_halo,
        halo_points,
        halo_skipped: total - halo_points,
        caveat: format!(
            "estimate: sup over atoms and a grid of spacing {} with margin {}, \
             points within {guard} of E_N skipped; not a certified bound",
            halo.spacing, halo.margin
        ),
    })
}

/// Distance from `x` to the union of the leaves, or any value `>= cap` when
/// that distance is at least `cap`.
fn distance_to_leaves(params: &CantorParams, sides: &[f64], x: &[f64], cap: f64) -> f64 {
    let mut best = cap * cap;
    let mut corner = vec![0.0; x.len()];
    nearest(params, sides, x, 0, &mut corner, &mut best);
    best.sqrt()
}

fn nearest(
    params: &CantorParams,
    sides: &[f64],
    x: &[f64],
    gen: usize,
    corner: &mut Vec<f64>,
    best: &mut f64,
) {
    let side = sides[gen];
    let near: f64 = x
        .iter()
        .zip(corner.iter())
        .map(|(&v, &c)| {
            let t = if v < c {
                c - v
            } else if v > c + side {
                v - c - side
            } else {
                0.0
            };
            t * t
        })
        .sum();
    if near >= *best {
        return;
    }
    if gen == params.depth() {
        *best = near;
        return;
    }
    let offset = side - sides[gen + 1];
    for code in 0..params.branching() {
        let mut sub = corner.clone();
        for (k, c) in sub.iter_mut().enumerate() {
            if code >> k & 1 == 1 {
                *c += offset;
            }
        }
        nearest(params, sides, x, gen + 1, &mut sub, best);
    }
}
