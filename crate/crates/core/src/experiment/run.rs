use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{fmt_real, Case, CaseSource, ExperimentConfig, Format, TOOL_NAME, TOOL_VERSION};
use crate::error::{Error, Result};
use crate::geometry::{cube_position, CantorParams, CubeId};
use crate::lemmas::verify_transform_lemmas;
use crate::martingale::{decompose, DecompositionReport};
use crate::quadrature::{atomize_with_budget, AtomSet};
use crate::riesz::{eval_brute, eval_treecode, l2_norm_sq, mu_integral, KernelSpec, Targets, VecField};
use crate::stopping::{
    verify_sequence_lemmas, Classification, IntervalRecord, JIntervalRecord, LemmaEntry, Trigger,
};
use crate::wolff::{
    capacity_of_profile, capacity_of_profile_from0, gamma_plus_lower_bound, wolff_discrete_s,
    wolff_potential, wolff_potential_s, GammaPlusEstimate, HaloGrid, WolffParams,
};

pub const RATIO_HEADER: &str = "case_id,d,s,N,refine_k,eps,lambda_desc,seed,norm_Rmu_sq,sum_theta_sq_0N,ratio,norm_SN_sq,cap_formula";

/// Embedded in every JSON artifact.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub seed: u64,
    pub refine_k: usize,
    pub eps: f64,
    pub config: ExperimentConfig,
}

impl Provenance {
    pub fn of(cfg: &ExperimentConfig) -> Self {
        Self {
            tool: TOOL_NAME.into(),
            version: TOOL_VERSION.into(),
            seed: cfg.seed,
            refine_k: cfg.refine_k,
            eps: cfg.eps,
            config: cfg.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SkipRow {
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Outcome {
    Computed {
        method: String,
        atoms: usize,
        norm_rmu_sq: f64,
        sum_theta_sq_0n: f64,
        ratio: f64,
        norm_sn_sq: f64,
        /// absent at `N = 0`
        cap_formula: Option<f64>,
        /// `|sum_a m_a R mu(a)|`, zero by antisymmetry of the kernel
        cancellation: f64,
        decomposition: DecompositionReport,
    },
    Skipped(SkipRow),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioRow {
    pub case_id: usize,
    pub family: String,
    pub family_index: usize,
    pub d: usize,
    pub s: f64,
    #[serde(rename = "N")]
    pub n: usize,
    pub refine_k: usize,
    pub eps: f64,
    pub lambda_desc: String,
    pub seed: u64,
    pub outcome: Outcome,
}

impl RatioRow {
    pub fn ratio(&self) -> Option<f64> {
        match &self.outcome {
            Outcome::Computed { ratio, .. } => Some(*ratio),
            Outcome::Skipped(_) => None,
        }
    }

    pub fn d_norms(&self) -> Option<&[f64]> {
        match &self.outcome {
            Outcome::Computed { decomposition, .. } => Some(&decomposition.d_norms),
            Outcome::Skipped(_) => None,
        }
    }

    fn csv_line(&self) -> String {
        let mut line = format!(
            "{},{},{},{},{},{},{},{}",
            self.case_id,
            self.d,
            fmt_real(self.s),
            self.n,
            self.refine_k,
            fmt_real(self.eps),
            self.lambda_desc,
            self.seed
        );
        match &self.outcome {
            Outcome::Computed {
                norm_rmu_sq,
                sum_theta_sq_0n,
                ratio,
                norm_sn_sq,
                cap_formula,
                ..
            } => {
                for v in [norm_rmu_sq, sum_theta_sq_0n, ratio, norm_sn_sq] {
                    let _ = write!(line, ",{}", fmt_real(*v));
                }
                let cap = cap_formula.map_or_else(|| "NA".to_string(), fmt_real);
                let _ = write!(line, ",{cap}");
            }
            Outcome::Skipped(_) => line.push_str(",skipped,skipped,skipped,skipped,skipped"),
        }
        line
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioTable {
    pub provenance: Provenance,
    pub rows: Vec<RatioRow>,
    /// smallest `C` with every computed ratio in `[1/C, C]`
    pub band_constant: Option<f64>,
}

impl RatioTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(RATIO_HEADER);
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.csv_line());
            out.push('\n');
        }
        out
    }
}

fn field_for(cfg: &ExperimentConfig, atoms: &AtomSet) -> Result<(VecField, &'static str)> {
    let spec = KernelSpec::new(cfg.s, cfg.eps)?;
    let targets = Targets::Atoms { self_exclude: true };
    match cfg.tree_config() {
        Some(tc) => Ok((eval_treecode(atoms, targets, &spec, &tc)?, "treecode")),
        None => Ok((eval_brute(atoms, targets, &spec)?, "brute")),
    }
}

fn ratio_case(cfg: &ExperimentConfig, case: &Case) -> Result<RatioRow> {
    let mut row = RatioRow {
        case_id: case.id,
        family: case.family.clone(),
        family_index: case.family_index,
        d: cfg.d,
        s: cfg.s,
        n: case.depth,
        refine_k: cfg.refine_k,
        eps: cfg.eps,
        lambda_desc: case.family.clone(),
        seed: cfg.seed,
        outcome: Outcome::Skipped(SkipRow { reason: String::new() }),
    };
    let params = match cfg.params(case) {
        Ok(p) => p,
        Err(e) => {
            row.outcome = Outcome::Skipped(SkipRow {
                reason: format!("no admissible ratios realize this profile: {e}"),
            });
            return Ok(row);
        }
    };
    let atoms = match atomize_with_budget(&params, cfg.refine_k, cfg.atom_budget) {
        Ok(a) => a,
        Err(e @ Error::Budget { .. }) => {
            log::warn!("case {}: {e}", case.id);
            row.outcome = Outcome::Skipped(SkipRow { reason: e.to_string() });
            return Ok(row);
        }
        Err(e) => return Err(e),
    };
    let profile = cfg.profile(case)?;
    let (field, method) = field_for(cfg, &atoms)?;
    let norm = l2_norm_sq(&field, &atoms);
    let decomposition = decompose(&field, &atoms)?;
    let sum = profile.sum_theta_sq_from0();
    let cancellation = mu_integral(&field, &atoms)
        .iter()
        .map(|v| v * v)
        .sum::<f64>()
        .sqrt();
    row.outcome = Outcome::Computed {
        method: method.into(),
        atoms: atoms.len(),
        norm_rmu_sq: norm,
        sum_theta_sq_0n: sum,
        ratio: norm / sum,
        norm_sn_sq: decomposition.sn_norm,
        cap_formula: capacity_of_profile(&profile).ok(),
        cancellation,
        decomposition,
    };
    Ok(row)
}

/// `||R mu||^2` against `sum_{j<=N} theta_j^2` for every case.
pub fn run_ratio_experiment(cfg: &ExperimentConfig) -> Result<RatioTable> {
    cfg.validate()?;
    let cases = cfg.cases()?;
    let rows: Vec<RatioRow> = cases
        .par_iter()
        .map(|c| ratio_case(cfg, c))
        .collect::<Result<_>>()?;
    let ratios: Vec<f64> = rows.iter().filter_map(RatioRow::ratio).collect();
    let band_constant = (!ratios.is_empty()).then(|| {
        ratios
            .iter()
            .map(|&r| r.max(1.0 / r))
            .fold(1.0, f64::max)
    });
    Ok(RatioTable {
        provenance: Provenance::of(cfg),
        rows,
        band_constant,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StoppingCase {
    pub case_id: usize,
    pub family: String,
    #[serde(rename = "N")]
    pub n: usize,
    /// hard checks of density overrides are reported, not enforced
    pub enforced: bool,
    pub stops: Vec<usize>,
    pub triggers: Vec<Trigger>,
    pub good_scales: Vec<bool>,
    pub intervals: Vec<IntervalRecord>,
    pub j_intervals: Vec<JIntervalRecord>,
    pub lemma_report: Vec<LemmaEntry>,
    pub transform_lemmas: bool,
    pub hard_failures: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StoppingReport {
    pub provenance: Provenance,
    pub cases: Vec<StoppingCase>,
}

impl StoppingReport {
    /// `(case_id, family, check)` for every enforced hard failure.
    pub fn failures(&self) -> Vec<(usize, String, String)> {
        self.cases
            .iter()
            .filter(|c| c.enforced)
            .flat_map(|c| {
                c.hard_failures
                    .iter()
                    .map(move |f| (c.case_id, c.family.clone(), f.clone()))
            })
            .collect()
    }
}

fn stopping_case(cfg: &ExperimentConfig, case: &Case) -> Result<StoppingCase> {
    let profile = cfg.profile(case)?;
    let class = Classification::of_profile(&profile, &cfg.stop)?;
    let mut report = verify_sequence_lemmas(&profile, &class);
    let hard_failures: Vec<String> = report.failures().iter().map(|s| s.to_string()).collect();
    let mut transform_lemmas = false;
    if let Ok(params) = cfg.params(case) {
        let count = (params.branching() as u128).pow(params.depth() as u32)
            * (cfg.refine_k as u128).pow(cfg.d as u32);
        if profile.depth() > 0 && count <= cfg.lemma_atom_cap.min(cfg.atom_budget) as u128 {
            let atoms = atomize_with_budget(&params, cfg.refine_k, cfg.atom_budget)?;
            let (field, _) = field_for(cfg, &atoms)?;
            let extra = verify_transform_lemmas(&atoms, &field, &class, &profile)?;
            report.entries.extend(extra.entries);
            transform_lemmas = true;
        }
    }
    Ok(StoppingCase {
        case_id: case.id,
        family: case.family.clone(),
        n: case.depth,
        enforced: matches!(case.source, CaseSource::Ratios(_)),
        stops: class.stops.scales().to_vec(),
        triggers: class.stops.triggers().to_vec(),
        good_scales: class.good_scales.clone(),
        intervals: class.intervals.clone(),
        j_intervals: class.j_intervals.clone(),
        lemma_report: report.entries,
        transform_lemmas,
        hard_failures,
    })
}

/// Stopping classification and lemma checks for every case.
pub fn run_stopping_report(cfg: &ExperimentConfig) -> Result<StoppingReport> {
    cfg.validate()?;
    let cases = cfg.cases()?;
    let cases = cases
        .par_iter()
        .map(|c| stopping_case(cfg, c))
        .collect::<Result<_>>()?;
    Ok(StoppingReport {
        provenance: Provenance::of(cfg),
        cases,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WolffSample {
    pub leaf: String,
    pub x: Vec<f64>,
    /// general path at the specialized indices
    pub potential: f64,
    /// the `(mu(B)/r^s)^2` integrand
    pub potential_s: f64,
    pub discrete: f64,
    /// `potential / discrete`
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WolffCase {
    pub case_id: usize,
    pub family: String,
    #[serde(rename = "N")]
    pub n: usize,
    pub samples: Vec<WolffSample>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub skipped: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WolffReport {
    pub provenance: Provenance,
    pub cases: Vec<WolffCase>,
}

/// Leaf index `i * L / count` for `i < count`, `L = 2^{dN}` leaves.
fn sample_leaves(d: usize, depth: usize, count: usize) -> Vec<CubeId> {
    let bits = d * depth;
    let total: u128 = if bits >= 127 { u128::MAX } else { 1u128 << bits };
    let m = (count as u128).min(total);
    let mask = (1u128 << d) - 1;
    (0..m)
        .map(|i| {
            let idx = if bits >= 64 {
                (total / m) * i
            } else {
                i * total / m
            };
            let path = (0..depth)
                .map(|g| ((idx >> (d * (depth - 1 - g))) & mask) as u32)
                .collect();
            CubeId::from_path(path)
        })
        .collect()
}

/// Wolff potential against the discrete sum at leaf centres.
pub fn wolff_samples(
    params: &CantorParams,
    count: usize,
    shells_per_octave: usize,
) -> Result<Vec<WolffSample>> {
    let w = WolffParams::specialized(params.d(), params.s())?;
    sample_leaves(params.d(), params.depth(), count)
        .par_iter()
        .map(|leaf| {
            let (corner, side) = cube_position(params, leaf)?;
            let x: Vec<f64> = corner.iter().map(|c| c + 0.5 * side).collect();
            let potential = wolff_potential(params, &x, &w, shells_per_octave)?;
            let potential_s = wolff_potential_s(params, &x, shells_per_octave)?;
            let discrete = wolff_discrete_s(params, &x)?;
            Ok(WolffSample {
                leaf: leaf.label(),
                x,
                potential,
                potential_s,
                discrete,
                ratio: potential / discrete,
            })
        })
        .collect()
}

fn wolff_case(cfg: &ExperimentConfig, case: &Case) -> Result<WolffCase> {
    let mut out = WolffCase {
        case_id: case.id,
        family: case.family.clone(),
        n: case.depth,
        samples: Vec::new(),
        skipped: None,
    };
    match cfg.params(case) {
        Ok(params) => out.samples = wolff_samples(&params, cfg.wolff_samples, cfg.shells_per_octave)?,
        Err(e) => out.skipped = Some(format!("no admissible ratios realize this profile: {e}")),
    }
    Ok(out)
}

pub fn run_wolff(cfg: &ExperimentConfig) -> Result<WolffReport> {
    cfg.validate()?;
    let cases = cfg.cases()?;
    let cases = cases
        .par_iter()
        .map(|c| wolff_case(cfg, c))
        .collect::<Result<_>>()?;
    Ok(WolffReport {
        provenance: Provenance::of(cfg),
        cases,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Conventions {
    pub exponent: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CapacityCase {
    pub case_id: usize,
    pub family: String,
    #[serde(rename = "N")]
    pub n: usize,
    /// `(sum_{n=1}^{N} theta_n^2)^{-1/2}`, absent at `N = 0`
    pub cap_formula: Option<f64>,
    pub cap_formula_from0: f64,
    pub gamma_plus_est: Option<GammaPlusEstimate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma_plus_skipped: Option<String>,
    pub wolff_at_samples: Vec<WolffSample>,
    pub conventions: Conventions,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CapacityReport {
    pub provenance: Provenance,
    pub cases: Vec<CapacityCase>,
}

fn capacity_case(cfg: &ExperimentConfig, case: &Case) -> Result<CapacityCase> {
    let profile = cfg.profile(case)?;
    let mut out = CapacityCase {
        case_id: case.id,
        family: case.family.clone(),
        n: case.depth,
        cap_formula: capacity_of_profile(&profile).ok(),
        cap_formula_from0: capacity_of_profile_from0(&profile)?,
        gamma_plus_est: None,
        gamma_plus_skipped: None,
        wolff_at_samples: Vec::new(),
        conventions: Conventions {
            exponent: "d-alpha*p".into(),
        },
    };
    let params = match cfg.params(case) {
        Ok(p) => p,
        Err(e) => {
            out.gamma_plus_skipped = Some(format!("no admissible ratios realize this profile: {e}"));
            return Ok(out);
        }
    };
    out.wolff_at_samples = wolff_samples(&params, cfg.wolff_samples, cfg.shells_per_octave)?;
    if !cfg.gamma_plus {
        out.gamma_plus_skipped = Some("disabled in config".into());
        return Ok(out);
    }
    let estimate = atomize_with_budget(&params, cfg.refine_k, cfg.atom_budget)
        .and_then(|atoms| gamma_plus_lower_bound(&atoms, &params, &HaloGrid::standard(&params)));
    match estimate {
        Ok(e) => out.gamma_plus_est = Some(e),
        Err(e @ Error::Budget { .. }) => out.gamma_plus_skipped = Some(e.to_string()),
        Err(e) => return Err(e),
    }
    Ok(out)
}

pub fn run_capacity(cfg: &ExperimentConfig) -> Result<CapacityReport> {
    cfg.validate()?;
    let cases = cfg.cases()?;
    let cases = cases
        .par_iter()
        .map(|c| capacity_case(cfg, c))
        .collect::<Result<_>>()?;
    Ok(CapacityReport {
        provenance: Provenance::of(cfg),
        cases,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileCase {
    pub case_id: usize,
    pub family: String,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<Vec<f64>>,
    pub ell: Vec<f64>,
    pub theta: Vec<f64>,
    pub p: Vec<f64>,
    pub sum_theta_sq_from0: f64,
    pub sum_theta_sq_from1: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileReport {
    pub provenance: Provenance,
    pub cases: Vec<ProfileCase>,
}

impl ProfileReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("case_id,n,ell,theta,p\n");
        for c in &self.cases {
            for n in 0..=c.n {
                let _ = writeln!(
                    out,
                    "{},{n},{},{},{}",
                    c.case_id,
                    fmt_real(c.ell[n]),
                    fmt_real(c.theta[n]),
                    fmt_real(c.p[n])
                );
            }
        }
        out
    }
}

pub fn run_profile(cfg: &ExperimentConfig) -> Result<ProfileReport> {
    cfg.validate()?;
    let cases = cfg
        .cases()?
        .iter()
        .map(|case| {
            let prof = cfg.profile(case)?;
            Ok(ProfileCase {
                case_id: case.id,
                family: case.family.clone(),
                n: case.depth,
                lambda: cfg.params(case).ok().map(|p| p.lambda().to_vec()),
                sum_theta_sq_from0: prof.sum_theta_sq_from0(),
                sum_theta_sq_from1: prof.sum_theta_sq_from1(),
                ell: prof.ell,
                theta: prof.theta,
                p: prof.p,
            })
        })
        .collect::<Result<_>>()?;
    Ok(ProfileReport {
        provenance: Provenance::of(cfg),
        cases,
    })
}

fn write_file(dir: &Path, name: &str, body: &str, written: &mut Vec<PathBuf>) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(name);
    std::fs::write(&path, body)?;
    log::info!("wrote {}", path.display());
    written.push(path);
    Ok(())
}

fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

pub fn write_ratio(table: &RatioTable, cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let dir = &cfg.out_dir;
    let mut written = Vec::new();
    if cfg.wants(Format::Csv) {
        write_file(dir, "ratio.csv", &table.to_csv(), &mut written)?;
    }
    if cfg.wants(Format::Json) {
        write_file(dir, "ratio.json", &json(table), &mut written)?;
    }
    if cfg.wants(Format::Svg) {
        written.extend(super::emit_plots(table, dir)?);
    }
    Ok(written)
}

pub fn write_stopping(report: &StoppingReport, cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    if cfg.wants(Format::Json) {
        write_file(&cfg.out_dir, "stopping.json", &json(report), &mut written)?;
    }
    Ok(written)
}

pub fn write_wolff(report: &WolffReport, cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    if cfg.wants(Format::Json) {
        write_file(&cfg.out_dir, "wolff.json", &json(report), &mut written)?;
    }
    Ok(written)
}

pub fn write_capacity(report: &CapacityReport, cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    if cfg.wants(Format::Json) {
        write_file(&cfg.out_dir, "capacity.json", &json(report), &mut written)?;
    }
    Ok(written)
}

pub fn write_profile(report: &ProfileReport, cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    if cfg.wants(Format::Csv) {
        write_file(&cfg.out_dir, "profile.csv", &report.to_csv(), &mut written)?;
    }
    if cfg.wants(Format::Json) {
        write_file(&cfg.out_dir, "profile.json", &json(report), &mut written)?;
    }
    Ok(written)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepSummary {
    pub files: Vec<PathBuf>,
    pub ratio: RatioTable,
    pub stopping: StoppingReport,
    pub capacity: CapacityReport,
}

/// Profiles, ratio table, stopping report and capacity report, all written.
pub fn sweep(cfg: &ExperimentConfig) -> Result<SweepSummary> {
    let mut files = write_profile(&run_profile(cfg)?, cfg)?;
    let ratio = run_ratio_experiment(cfg)?;
    files.extend(write_ratio(&ratio, cfg)?);
    let stopping = run_stopping_report(cfg)?;
    files.extend(write_stopping(&stopping, cfg)?);
    let capacity = run_capacity(cfg)?;
    files.extend(write_capacity(&capacity, cfg)?);
    Ok(SweepSummary {
        files,
        ratio,
        stopping,
        capacity,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::LambdaSpec;

    fn small() -> ExperimentConfig {
        ExperimentConfig {
            depths: vec![0, 2, 3],
            lambda: vec![
                LambdaSpec::Constant { value: 0.25, label: None },
                LambdaSpec::Periodic { values: vec![0.2, 0.45], label: None },
            ],
            refine_k: 2,
            wolff_samples: 3,
            ..Default::default()
        }
    }

    #[test]
    fn ratio_rows_and_csv() {
        let t = run_ratio_experiment(&small()).unwrap();
        assert_eq!(t.rows.len(), 6);
        let csv = t.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], RATIO_HEADER);
        assert_eq!(lines.len(), 7);
        for l in &lines[1..] {
            assert_eq!(l.split(',').count(), 13);
        }
        assert!(lines[1].ends_with(",NA"));
        assert!(!csv.contains('\r'));
    }

    #[test]
    fn over_budget_case_is_skipped() {
        let cfg = ExperimentConfig { atom_budget: 10, ..small() };
        let t = run_ratio_experiment(&cfg).unwrap();
        assert!(matches!(t.rows[0].outcome, Outcome::Computed { .. }));
        assert!(matches!(t.rows[2].outcome, Outcome::Skipped(_)));
        assert!(t.to_csv().lines().nth(3).unwrap().ends_with("skipped,skipped"));
    }

    #[test]
    fn sample_leaves_are_spread() {
        let leaves = sample_leaves(1, 3, 4);
        let idx: Vec<usize> = leaves.iter().map(|l| l.index(1)).collect();
        assert_eq!(idx, vec![0, 2, 4, 6]);
        assert_eq!(sample_leaves(2, 1, 20).len(), 4);
        assert_eq!(sample_leaves(2, 40, 5).len(), 5);
    }

    #[test]
    fn override_case_reports_without_enforcing() {
        let cfg = ExperimentConfig {
            theta_override: Some(vec![1.0, 0.5, 2000.0, 1.0, 1.0]),
            ..Default::default()
        };
        let rep = run_stopping_report(&cfg).unwrap();
        assert!(!rep.cases[0].enforced);
        assert!(rep.failures().is_empty());
        assert_eq!(rep.cases[0].stops, vec![0, 2, 3, 4]);
    }
}
