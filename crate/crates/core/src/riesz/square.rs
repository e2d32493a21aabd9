//! Square function over dyadic annular pieces of the Riesz kernel.

use std::collections::BTreeMap;

use super::kernel_factor;
use crate::error::{Error, Result};
use crate::quadrature::AtomSet;
use crate::sum::{Cascade, VecCascade};

/// A nonincreasing radial cutoff with `chi_{B(0,1/2)} <= psi <= chi_{B(0,2)}`.
pub trait Cutoff: Sync {
    fn eval(&self, r: f64) -> f64;
}

impl<F: Fn(f64) -> f64 + Sync> Cutoff for F {
    fn eval(&self, r: f64) -> f64 {
        self(r)
    }
}

/// `1` below `1/2`, `0` above `2`, and the cubic smoothstep in `log2 r`
/// in between.
#[derive(Clone, Copy, Debug, Default)]
pub struct SmoothstepCutoff;

impl Cutoff for SmoothstepCutoff {
    fn eval(&self, r: f64) -> f64 {
        if r <= 0.5 {
            return 1.0;
        }
        if r >= 2.0 {
            return 0.0;
        }
        let t = 0.5 * (r.log2() + 1.0);
        1.0 - t * t * (3.0 - 2.0 * t)
    }
}

/// Samples `psi` and rejects it if the sandwich bounds or monotonicity fail.
fn check_cutoff(psi: &dyn Cutoff) -> Result<()> {
    const SAMPLES: usize = 4096;
    let mut prev = f64::INFINITY;
    for i in 0..=SAMPLES {
        // radii from 1/8 to 8, log-spaced
        let r = (-3.0 + 6.0 * i as f64 / SAMPLES as f64).exp2();
        let v = psi.eval(r);
        let ok = v.is_finite()
            && (0.0..=1.0).contains(&v)
            && (r > 0.5 || v == 1.0)
            && (r < 2.0 || v == 0.0)
            && v <= prev;
        if !ok {
            return Err(Error::Parameter(format!(
                "cutoff violates chi_B(0,1/2) <= psi <= chi_B(0,2) or monotonicity at r = {r}"
            )));
        }
        prev = v;
    }
    Ok(())
}

/// `Q^s mu(x) = (sum_j |R_j^s mu(x)|^2)^{1/2}` with
/// `R_j^s mu(x) = sum_a m_a phi_j(x - p_a) K(x - p_a)` and
/// `phi_j = psi(2^j .) - psi(2^{j+1} .)`.
///
/// Only the annuli meeting the atom cloud are visited: `phi_j(z)` vanishes
/// unless `2^{-j-2} < |z| < 2^{1-j}`.
pub fn square_function(atoms: &AtomSet, x: &[f64], s: f64, psi: &dyn Cutoff) -> Result<f64> {
    check_cutoff(psi)?;
    let d = atoms.d();
    let mut pieces: BTreeMap<i64, VecCascade> = BTreeMap::new();
    let mut z = vec![0.0; d];
    for a in 0..atoms.len() {
        let p = atoms.point(a);
        let mut r2 = 0.0;
        for k in 0..d {
            z[k] = x[k] - p[k];
            r2 += z[k] * z[k];
        }
        if r2 == 0.0 {
            continue;
        }
        let r = r2.sqrt();
        let f = atoms.mass(a) * kernel_factor(r2, s);
        let centre = -r.log2();
        let j_lo = (centre - 2.0).floor() as i64;
        let j_hi = (centre + 1.0).ceil() as i64;
        for j in j_lo..=j_hi {
            let scale = (j as f64).exp2();
            let phi = psi.eval(scale * r) - psi.eval(2.0 * scale * r);
            if phi != 0.0 {
                pieces
                    .entry(j)
                    .or_insert_with(|| VecCascade::new(d))
                    .push_scaled(phi * f, &z);
            }
        }
    }
    let mut total = Cascade::new();
    for acc in pieces.values() {
        total.push(acc.total().iter().map(|v| v * v).sum());
    }
    Ok(total.total().sqrt())
}
