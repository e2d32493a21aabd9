//! Experiment configuration, case expansion and artifact output.

mod plot;
mod rng;
mod run;

use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{build_profile, CantorParams, DensityProfile};
use crate::quadrature::DEFAULT_ATOM_BUDGET;
use crate::riesz::TreeCodeConfig;
use crate::stopping::StopConfig;

pub use plot::{emit_plots, ratio_plot_svg, spectrum_svg};
pub use rng::{SplitMix64, GOLDEN_GAMMA};
pub use run::{
    run_capacity, run_profile, run_ratio_experiment, run_stopping_report, run_wolff, sweep,
    wolff_samples, write_capacity, write_profile, write_ratio, write_stopping, write_wolff,
    CapacityCase, CapacityReport, Conventions, Outcome, ProfileCase, ProfileReport, Provenance,
    RatioRow, RatioTable, SkipRow, StoppingCase, StoppingReport, SweepSummary, WolffCase,
    WolffReport, WolffSample, RATIO_HEADER,
};

pub const TOOL_NAME: &str = "cantor-riesz";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Reals in CSV output: 17 significant digits.
pub fn fmt_real(v: f64) -> String {
    format!("{v:.16e}")
}

/// How the ratio sequence of a family is produced.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LambdaSpec {
    Constant {
        value: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        label: Option<String>,
    },
    /// `lambda_n` taken from the list; it must cover the largest depth
    List {
        values: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        label: Option<String>,
    },
    /// the values repeated cyclically
    Periodic {
        values: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        label: Option<String>,
    },
    /// `count` families of independent uniform draws in `[lo, hi)`
    Random {
        lo: f64,
        hi: f64,
        #[serde(default = "one")]
        count: usize,
        /// overrides the experiment seed for this spec
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        label: Option<String>,
    },
}

fn one() -> usize {
    1
}

/// One resolved ratio sequence.
#[derive(Clone, Debug, PartialEq)]
pub struct Family {
    pub label: String,
    pub lambda: Vec<f64>,
}

fn join(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(";")
}

impl LambdaSpec {
    /// The families of this spec with ratio sequences of length `depth`.
    pub fn resolve(&self, depth: usize, seed: u64) -> Result<Vec<Family>> {
        let fams = match self {
            LambdaSpec::Constant { value, label } => vec![Family {
                label: label.clone().unwrap_or_else(|| format!("const({value})")),
                lambda: vec![*value; depth],
            }],
            LambdaSpec::List { values, label } => {
                if values.len() < depth {
                    return Err(Error::Config(format!(
                        "lambda list has {} entries, depth {depth} needs more",
                        values.len()
                    )));
                }
                vec![Family {
                    label: label.clone().unwrap_or_else(|| format!("list({})", join(values))),
                    lambda: values[..depth].to_vec(),
                }]
            }
            LambdaSpec::Periodic { values, label } => {
                if values.is_empty() {
                    return Err(Error::Config("periodic lambda needs values".into()));
                }
                vec![Family {
                    label: label
                        .clone()
                        .unwrap_or_else(|| format!("periodic({})", join(values))),
                    lambda: values.iter().copied().cycle().take(depth).collect(),
                }]
            }
            LambdaSpec::Random {
                lo,
                hi,
                count,
                seed: own,
                label,
            } => {
                if !(*lo > 0.0 && lo < hi && *hi <= 0.5) {
                    return Err(Error::Config(format!(
                        "random lambda range [{lo}, {hi}) must satisfy 0 < lo < hi <= 1/2"
                    )));
                }
                let base = own.unwrap_or(seed);
                let stem = label.clone().unwrap_or_else(|| format!("random({lo};{hi})"));
                (0..*count)
                    .map(|i| {
                        let mut g = SplitMix64::stream(base, i as u64);
                        Family {
                            label: format!("{stem}#{i}"),
                            lambda: (0..depth).map(|_| g.uniform(*lo, *hi)).collect(),
                        }
                    })
                    .collect()
            }
        };
        Ok(fams)
    }

    fn family_count(&self) -> usize {
        match self {
            LambdaSpec::Random { count, .. } => *count,
            _ => 1,
        }
    }
}

/// Command-line shorthand: `0.25`, `periodic:0.2,0.45`, `list:0.1,0.2,...`,
/// `random:LO,HI[,COUNT]`.
impl FromStr for LambdaSpec {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let bad = || Error::Config(format!("cannot parse lambda spec {text:?}"));
        let nums = |body: &str| -> Result<Vec<f64>> {
            body.split(',')
                .map(|v| v.trim().parse::<f64>().map_err(|_| bad()))
                .collect()
        };
        let (kind, body) = match text.split_once(':') {
            Some(pair) => pair,
            None => {
                let value = text.trim().parse::<f64>().map_err(|_| bad())?;
                return Ok(LambdaSpec::Constant { value, label: None });
            }
        };
        match kind.trim() {
            "const" | "constant" => Ok(LambdaSpec::Constant {
                value: body.trim().parse().map_err(|_| bad())?,
                label: None,
            }),
            "list" => Ok(LambdaSpec::List {
                values: nums(body)?,
                label: None,
            }),
            "periodic" => Ok(LambdaSpec::Periodic {
                values: nums(body)?,
                label: None,
            }),
            "random" => {
                let v = nums(body)?;
                if v.len() != 2 && v.len() != 3 {
                    return Err(bad());
                }
                let count = match v.get(2) {
                    Some(&c) if c >= 0.0 && c.fract() == 0.0 => c as usize,
                    Some(_) => return Err(bad()),
                    None => 1,
                };
                Ok(LambdaSpec::Random {
                    lo: v[0],
                    hi: v[1],
                    count,
                    seed: None,
                    label: None,
                })
            }
            _ => Err(bad()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Svg,
}

/// A batch of cases: every lambda family at every depth.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub d: usize,
    pub s: f64,
    #[serde(rename = "N")]
    pub depths: Vec<usize>,
    pub lambda: Vec<LambdaSpec>,
    /// a full density sequence `theta_0..theta_N` used instead of `lambda`
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta_override: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau0: Option<f64>,
    pub refine_k: usize,
    pub eps: f64,
    pub seed: u64,
    pub treecode: bool,
    pub tree: TreeCodeConfig,
    pub stop: StopConfig,
    pub atom_budget: usize,
    /// transform-dependent lemma constants are measured up to this atom count
    pub lemma_atom_cap: usize,
    pub shells_per_octave: usize,
    pub wolff_samples: usize,
    pub gamma_plus: bool,
    pub out_dir: PathBuf,
    pub formats: Vec<Format>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            d: 1,
            s: 0.5,
            depths: vec![4],
            lambda: vec![LambdaSpec::Constant {
                value: 0.25,
                label: None,
            }],
            theta_override: None,
            tau0: None,
            refine_k: 4,
            eps: 0.0,
            seed: 0,
            treecode: false,
            tree: TreeCodeConfig::default(),
            stop: StopConfig::default(),
            atom_budget: DEFAULT_ATOM_BUDGET,
            lemma_atom_cap: 1 << 14,
            shells_per_octave: 8,
            wolff_samples: 20,
            gamma_plus: true,
            out_dir: PathBuf::from("out"),
            formats: vec![Format::Csv, Format::Json, Format::Svg],
        }
    }
}

/// Where a case gets its measure from.
#[derive(Clone, Debug, PartialEq)]
pub enum CaseSource {
    Ratios(Vec<f64>),
    Theta(Vec<f64>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Case {
    pub id: usize,
    pub family: String,
    pub family_index: usize,
    pub depth: usize,
    pub source: CaseSource,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self =
            serde_json::from_str(text).map_err(|e| Error::Config(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn wants(&self, f: Format) -> bool {
        self.formats.contains(&f)
    }

    /// Checks every field and that all cases resolve to admissible parameters.
    pub fn validate(&self) -> Result<()> {
        let cfg = |m: String| Err(Error::Config(m));
        if self.d == 0 {
            return cfg("d must be at least 1".into());
        }
        if !(self.s > 0.0 && self.s < self.d as f64) {
            return cfg(format!("s = {} must lie in (0, d)", self.s));
        }
        if self.refine_k == 0 {
            return cfg("refine_k must be at least 1".into());
        }
        if !(self.eps >= 0.0 && self.eps.is_finite()) {
            return cfg(format!("eps = {} must be finite and nonnegative", self.eps));
        }
        if self.shells_per_octave == 0 {
            return cfg("shells_per_octave must be positive".into());
        }
        if self.theta_override.is_none() && (self.depths.is_empty() || self.lambda.is_empty()) {
            return cfg("need at least one depth and one lambda spec".into());
        }
        self.tree.validate().map_err(as_config)?;
        self.stop.validate().map_err(as_config)?;
        for case in self.cases()? {
            if let CaseSource::Ratios(_) = case.source {
                self.params(&case).map_err(as_config)?;
            } else {
                self.profile(&case).map_err(as_config)?;
            }
        }
        Ok(())
    }

    /// Cases in order: lambda spec, then family, then depth.
    pub fn cases(&self) -> Result<Vec<Case>> {
        if let Some(theta) = &self.theta_override {
            if theta.is_empty() {
                return Err(Error::Config("theta_override is empty".into()));
            }
            return Ok(vec![Case {
                id: 0,
                family: "theta_override".into(),
                family_index: 0,
                depth: theta.len() - 1,
                source: CaseSource::Theta(theta.clone()),
            }]);
        }
        let max_depth = *self.depths.iter().max().unwrap_or(&0);
        let mut cases = Vec::new();
        let mut family_index = 0;
        for spec in &self.lambda {
            let families = spec.resolve(max_depth, self.seed)?;
            debug_assert_eq!(families.len(), spec.family_count());
            for fam in families {
                for &n in &self.depths {
                    cases.push(Case {
                        id: cases.len(),
                        family: fam.label.clone(),
                        family_index,
                        depth: n,
                        source: CaseSource::Ratios(fam.lambda[..n].to_vec()),
                    });
                }
                family_index += 1;
            }
        }
        Ok(cases)
    }

    /// Construction parameters of a case, or `None` for a density override
    /// that no admissible ratio sequence realizes.
    pub fn params(&self, case: &Case) -> Result<CantorParams> {
        let lambda = match &case.source {
            CaseSource::Ratios(l) => l.clone(),
            CaseSource::Theta(_) => {
                let prof = self.profile(case)?;
                prof.ell.windows(2).map(|w| w[1] / w[0]).collect()
            }
        };
        match self.tau0 {
            Some(t) => CantorParams::with_tau0(self.d, self.s, lambda, t),
            None => CantorParams::new(self.d, self.s, lambda),
        }
    }

    pub fn profile(&self, case: &Case) -> Result<DensityProfile> {
        match &case.source {
            CaseSource::Ratios(_) => Ok(build_profile(&self.params(case)?)),
            CaseSource::Theta(t) => DensityProfile::from_theta(self.d, self.s, t.clone()),
        }
    }

    pub fn tree_config(&self) -> Option<TreeCodeConfig> {
        self.treecode.then_some(self.tree)
    }
}

fn as_config(e: Error) -> Error {
    match e {
        Error::Config(_) => e,
        other => Error::Config(other.to_string()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn real_format_has_17_digits() {
        assert_eq!(fmt_real(0.25), "2.5000000000000000e-1");
        assert_eq!(fmt_real(0.1).parse::<f64>().unwrap(), 0.1);
        let x = 1.0 / 3.0;
        assert_eq!(fmt_real(x).parse::<f64>().unwrap(), x);
    }

    #[test]
    fn lambda_shorthand() {
        assert_eq!(
            "0.25".parse::<LambdaSpec>().unwrap(),
            LambdaSpec::Constant { value: 0.25, label: None }
        );
        assert_eq!(
            "periodic:0.2,0.45".parse::<LambdaSpec>().unwrap(),
            LambdaSpec::Periodic { values: vec![0.2, 0.45], label: None }
        );
        assert!(matches!(
            "random:0.05,0.45,3".parse::<LambdaSpec>().unwrap(),
            LambdaSpec::Random { count: 3, .. }
        ));
        assert!("random:0.1".parse::<LambdaSpec>().is_err());
        assert!("spiral:1".parse::<LambdaSpec>().is_err());
    }

    #[test]
    fn periodic_and_list_resolution() {
        let p = LambdaSpec::Periodic { values: vec![0.2, 0.45], label: None };
        let f = p.resolve(5, 0).unwrap();
        assert_eq!(f[0].lambda, vec![0.2, 0.45, 0.2, 0.45, 0.2]);
        assert_eq!(f[0].label, "periodic(0.2;0.45)");
        let l = LambdaSpec::List { values: vec![0.1, 0.2], label: None };
        assert!(l.resolve(3, 0).is_err());
    }

    #[test]
    fn random_families_are_prefix_consistent() {
        let r = LambdaSpec::Random { lo: 0.05, hi: 0.45, count: 3, seed: None, label: None };
        let short = r.resolve(4, 7).unwrap();
        let long = r.resolve(9, 7).unwrap();
        for (a, b) in short.iter().zip(&long) {
            assert_eq!(a.lambda[..], b.lambda[..4]);
            assert!(b.lambda.iter().all(|&v| (0.05..0.45).contains(&v)));
        }
        assert_ne!(short[0].lambda, short[1].lambda);
        assert_ne!(r.resolve(4, 8).unwrap()[0].lambda, short[0].lambda);
    }

    #[test]
    fn config_parsing_and_validation() {
        let cfg = ExperimentConfig::from_json(
            r#"{"d": 1, "s": 0.5, "N": [2, 4], "lambda": [{"kind": "constant", "value": 0.25}]}"#,
        )
        .unwrap();
        assert_eq!(cfg.cases().unwrap().len(), 2);
        assert!(ExperimentConfig::from_json(r#"{"bogus": 1}"#).is_err());
        let bad = r#"{"N": [3], "lambda": [{"kind": "constant", "value": 0.5}]}"#;
        assert!(matches!(ExperimentConfig::from_json(bad), Err(Error::Config(_))));
        let round = ExperimentConfig::from_json(&cfg.to_json()).unwrap();
        assert_eq!(round, cfg);
    }

    #[test]
    fn theta_override_case() {
        let cfg = ExperimentConfig {
            theta_override: Some(vec![1.0, 0.5, 2000.0, 1.0, 1.0]),
            ..Default::default()
        };
        let cases = cfg.cases().unwrap();
        assert_eq!(cases.len(), 1);
        assert_eq!(cases[0].depth, 4);
        let prof = cfg.profile(&cases[0]).unwrap();
        assert_eq!(prof.theta[2], 2000.0);
        assert!(cfg.params(&cases[0]).is_err());
    }
}
