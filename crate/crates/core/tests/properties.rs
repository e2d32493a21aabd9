use cantor_riesz::experiment::LambdaSpec;
use cantor_riesz::geometry::{build_profile, containing_cube, cube_position, CantorParams, CubeId};
use cantor_riesz::martingale::project;
use cantor_riesz::quadrature::{atomize, ball_mass, AtomSet};
use cantor_riesz::riesz::{eval_brute, kernel, l2_norm_sq, KernelSpec, Targets, VecField};
use cantor_riesz::stopping::{classify, compute_stops, IntervalKind, StopConfig};
use cantor_riesz::wolff::{
    capacity_wolff, gamma_plus_lower_bound, wolff_discrete_s, HaloGrid,
};
use proptest::prelude::*;

fn ratios(max_len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.05..0.49f64, 0..=max_len)
}

fn params_d1(max_len: usize) -> impl Strategy<Value = CantorParams> {
    (0.1..0.9f64, ratios(max_len)).prop_map(|(s, l)| CantorParams::new(1, s, l).unwrap())
}

fn params_any(max_len: usize) -> impl Strategy<Value = CantorParams> {
    (1usize..=2, 0.1..0.9f64, ratios(max_len))
        .prop_map(|(d, s, l)| CantorParams::new(d, s * d as f64, l).unwrap())
}

fn path_in(params: &CantorParams, seed: u64) -> CubeId {
    let mut x = seed;
    let path = (0..params.depth())
        .map(|_| {
            x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((x >> 33) % params.branching() as u64) as u32
        })
        .collect();
    CubeId::from_path(path)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn profile_sequences(params in params_any(40)) {
        let prof = build_profile(&params);
        let (mut sp, mut st) = (0.0, 0.0);
        for j in 0..prof.theta.len() {
            prop_assert!(prof.theta[j] > 0.0);
            prop_assert!(prof.p[j] >= prof.theta[j]);
            sp += prof.p[j] * prof.p[j];
            st += prof.theta[j] * prof.theta[j];
            prop_assert!(sp <= 4.0 * st * (1.0 + 1e-12));
        }
        for n in 0..=params.depth().min(12) {
            let total = params.cube_mass(n) * params.cube_count(n) as f64;
            prop_assert_eq!(total, 1.0);
        }
    }

    #[test]
    fn cubes_nest_and_locate(params in params_any(8), seed in any::<u64>()) {
        let id = path_in(&params, seed);
        let (corner, side) = cube_position(&params, &id).unwrap();
        let found = containing_cube(&params, &corner, id.gen()).unwrap();
        prop_assert_eq!(found.as_ref(), Some(&id));
        if let Some(parent) = id.parent() {
            let (pc, ps) = cube_position(&params, &parent).unwrap();
            for k in 0..params.d() {
                prop_assert!(corner[k] >= pc[k] && corner[k] + side <= pc[k] + ps + 4.0 * f64::EPSILON);
            }
        }
    }

    #[test]
    fn ball_mass_monotone(params in params_d1(6), x in 0.0..1.0f64, r in prop::collection::vec(0.0..1.5f64, 2..6)) {
        let mut r = r;
        r.sort_by(f64::total_cmp);
        let masses: Vec<f64> = r.iter().map(|&r| ball_mass(&params, &[x], r)).collect();
        for w in masses.windows(2) {
            prop_assert!(w[0] <= w[1] + 1e-6);
        }
        for m in masses {
            prop_assert!((0.0..=1.0 + 1e-12).contains(&m));
        }
    }

    #[test]
    fn atoms_reproduce_cube_masses(params in params_any(4), k in 1usize..4) {
        let atoms = atomize(&params, k).unwrap();
        for gen in 0..=params.depth() {
            let mut sums = vec![0.0; params.cube_count(gen)];
            for a in 0..atoms.len() {
                sums[atoms.cube_index(a, gen)] += atoms.mass(a);
            }
            for m in sums {
                prop_assert!((m - params.cube_mass(gen)).abs() <= 1e-13 * params.cube_mass(gen));
            }
        }
    }

    #[test]
    fn kernel_antisymmetric(x in prop::collection::vec(-10.0..10.0f64, 1..4), s in 0.1..2.5f64) {
        prop_assume!(x.iter().any(|v| *v != 0.0));
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        let a = kernel(&x, s).unwrap();
        let b = kernel(&neg, s).unwrap();
        for (u, v) in a.iter().zip(&b) {
            prop_assert_eq!(*u, -*v);
        }
    }

    #[test]
    fn transform_is_homogeneous(params in params_d1(4), s in 0.1..0.9f64) {
        let atoms = atomize(&params, 2).unwrap();
        let target = atoms.point(0)[0];
        let scaled: Vec<f64> = atoms.points().iter().map(|p| target + 2.0 * (p - target)).collect();
        let leaves: Vec<u32> = (0..atoms.len()).map(|a| atoms.leaf_index(a) as u32).collect();
        let big = AtomSet::from_parts(1, atoms.depth(), scaled, atoms.masses().to_vec(), leaves).unwrap();
        let spec = KernelSpec::new(s, 0.0).unwrap();
        let a = eval_brute(&atoms, Targets::AtomSubset(&[0]), &spec).unwrap();
        let b = eval_brute(&big, Targets::AtomSubset(&[0]), &spec).unwrap();
        let want = a.get(0)[0] * 2f64.powf(-s);
        prop_assert!((b.get(0)[0] - want).abs() <= 1e-12 * want.abs().max(1e-300));
    }

    #[test]
    fn truncation_partitions_atoms(params in params_any(3), eps in 0.0..0.5f64) {
        let atoms = atomize(&params, 2).unwrap();
        let s = params.s();
        let d = params.d();
        let full = eval_brute(&atoms, Targets::Atoms { self_exclude: true }, &KernelSpec::new(s, 0.0).unwrap()).unwrap();
        let cut = eval_brute(&atoms, Targets::Atoms { self_exclude: true }, &KernelSpec::new(s, eps).unwrap()).unwrap();
        for t in 0..atoms.len() {
            let mut near = vec![0.0; d];
            let mut scale = 0.0;
            for a in 0..atoms.len() {
                if a == t { continue; }
                let z: Vec<f64> = (0..d).map(|k| atoms.point(a)[k] - atoms.point(t)[k]).collect();
                let r = z.iter().map(|v| v * v).sum::<f64>().sqrt();
                let kz = kernel(&z, s).unwrap();
                scale += atoms.mass(a) * r.powf(-s);
                if r * r <= eps * eps {
                    for k in 0..d { near[k] += atoms.mass(a) * kz[k]; }
                }
            }
            for k in 0..d {
                prop_assert!((full.get(t)[k] - cut.get(t)[k] - near[k]).abs() <= 1e-12 * scale);
            }
        }
    }

    #[test]
    fn projections_idempotent_and_contracting(params in params_any(4), seed in any::<u64>()) {
        let atoms = atomize(&params, 2).unwrap();
        let d = params.d();
        let mut x = seed;
        let vals = (0..atoms.len() * d).map(|_| {
            x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (x >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        }).collect();
        let f = VecField::new(d, vals).unwrap();
        let norm = l2_norm_sq(&f, &atoms);
        for j in 0..=params.depth() {
            let p = project(&f, &atoms, j).unwrap();
            prop_assert!(p.norm_sq() <= norm * (1.0 + 1e-12));
            let again = project(&p.lift(&atoms), &atoms, j).unwrap();
            for c in 0..p.cube_count() {
                for (u, v) in p.value(c).iter().zip(again.value(c)) {
                    prop_assert!((u - v).abs() <= 1e-13 * (1.0 + u.abs()));
                }
            }
        }
    }

    #[test]
    fn stopping_structure(logs in prop::collection::vec(-8.0..8.0f64, 1..60), b in 101.0..1e5f64) {
        let theta: Vec<f64> = logs.iter().map(|l| 10f64.powf(*l)).collect();
        let n = theta.len() - 1;
        let cfg = StopConfig { b, ..Default::default() };
        let stops = compute_stops(&theta, &cfg).unwrap();
        let sc = stops.scales();
        prop_assert_eq!(sc[0], 0);
        prop_assert_eq!(*sc.last().unwrap(), n);
        prop_assert!(sc.windows(2).all(|w| w[0] < w[1]) || n == 0);
        for w in sc.windows(2) {
            for i in w[0] + 1..w[1] {
                prop_assert!(theta[i] <= b * theta[w[0]] && theta[i] >= theta[w[0]] / b);
            }
        }
        if n == 0 { return Ok(()); }

        let ell: Vec<f64> = (0..=n).map(|j| 0.25f64.powi(j as i32)).collect();
        let p: Vec<f64> = (0..=n).map(|j| (0..=j).map(|k| theta[k] * ell[j] / ell[k]).sum()).collect();
        let class = classify(&theta, &p, &ell, &cfg).unwrap();
        prop_assert_eq!(&class, &classify(&theta, &p, &ell, &cfg).unwrap());
        let mut covered = Vec::new();
        for (k, iv) in class.intervals.iter().enumerate() {
            covered.extend(iv.lo..iv.hi);
            prop_assert_eq!(iv.kind == IntervalKind::Terminal, k + 1 == class.intervals.len());
        }
        let last = class.intervals.last().unwrap().hi;
        prop_assert!(covered.iter().copied().eq(0..last));
        prop_assert!(last >= n.saturating_sub(1));
        prop_assert_eq!(class.good_scales.len(), n);
        prop_assert!(class.j_intervals.windows(2).all(|w| w[0].hi <= w[1].lo));
        prop_assert_eq!(
            class.j_intervals.first().map(|j| j.h == 0).unwrap_or(false),
            class.intervals[0].kind == IntervalKind::Decreasing
        );
    }

    #[test]
    fn discrete_wolff_constant_on_set(params in params_d1(6), seeds in prop::collection::vec(any::<u64>(), 2..6)) {
        let values: Vec<f64> = seeds.iter().map(|&sd| {
            let (corner, side) = cube_position(&params, &path_in(&params, sd)).unwrap();
            wolff_discrete_s(&params, &[corner[0] + 0.5 * side]).unwrap()
        }).collect();
        for v in &values {
            prop_assert!((v - values[0]).abs() <= 1e-13 * values[0]);
        }
    }

    #[test]
    fn capacity_nonincreasing(lambda in prop::collection::vec(0.05..0.49f64, 2..30), s in 0.1..0.9f64) {
        let mut prev = f64::INFINITY;
        for n in 1..=lambda.len() {
            let params = CantorParams::new(1, s, lambda[..n].to_vec()).unwrap();
            let cap = capacity_wolff(&params).unwrap();
            prop_assert!(cap <= prev * (1.0 + 1e-12));
            prev = cap;
        }
    }

    #[test]
    fn lambda_specs_resolve_admissible(lo in 0.01..0.3f64, w in 0.0..0.19f64, depth in 0usize..20, seed in any::<u64>()) {
        let spec = LambdaSpec::Random { lo, hi: lo + w + 1e-3, count: 3, seed: None, label: None };
        for fam in spec.resolve(depth, seed).unwrap() {
            prop_assert_eq!(fam.lambda.len(), depth);
            prop_assert!(fam.lambda.iter().all(|l| *l > 0.0 && *l < 0.5));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn gamma_bounded_by_atom_field(lambda in prop::collection::vec(0.1..0.45f64, 1..4), s in 0.2..0.8f64) {
        let params = CantorParams::new(1, s, lambda).unwrap();
        let atoms = atomize(&params, 2).unwrap();
        let est = gamma_plus_lower_bound(&atoms, &params, &HaloGrid::standard(&params)).unwrap();
        prop_assert!(est.value > 0.0 && est.value.is_finite());
        prop_assert!(est.value <= 1.0 / est.sup_on_atoms * (1.0 + 1e-15));
    }
}
