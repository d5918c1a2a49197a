//! Systematic enumeration of QOTE instances and batch verification.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::analysis::{analyze, AnalysisOptions, Report, DEFAULT_SAMPLES};
use crate::injectivity::DEFAULT_SEED;
use crate::lattice::{solve_congruence, Mat2Z, Rat, Vec2Q};
use crate::qote::QotePair;
use crate::torus::{AffineEndo, RotationGroup};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum PrecomposeTag {
    #[serde(rename = "id")]
    Identity,
    F,
}

impl fmt::Display for PrecomposeTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PrecomposeTag::Identity => "id",
            PrecomposeTag::F => "F",
        })
    }
}

impl FromStr for PrecomposeTag {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "id" => Ok(PrecomposeTag::Identity),
            "F" => Ok(PrecomposeTag::F),
            other => Err(format!("unknown precompose {other:?} (expected id or F)")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub orders: Vec<u32>,
    pub det_max: u64,
    pub entry_max: i64,
    pub precompose: Vec<PrecomposeTag>,
    pub seed: u64,
    pub samples: usize,
    pub jobs: Option<usize>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            orders: RotationGroup::ORDERS.to_vec(),
            det_max: 10,
            entry_max: 2,
            precompose: vec![PrecomposeTag::Identity, PrecomposeTag::F],
            seed: DEFAULT_SEED,
            samples: DEFAULT_SAMPLES,
            jobs: None,
        }
    }
}

/// Canonical form of an enumerated instance.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct InstanceKey {
    pub order: u32,
    pub a: Mat2Z,
    pub b: Vec2Q,
    pub precompose: PrecomposeTag,
}

fn fractions(max_den: u64) -> Vec<Rat> {
    let mut out: BTreeSet<Rat> = BTreeSet::new();
    for den in 1..=max_den as i64 {
        for num in 0..den {
            out.insert(Rat::new(num, den));
        }
    }
    out.into_iter().collect()
}

/// Translations `b` compatible with rotation exponent `j`.
fn translations(group: &RotationGroup, j: u32, det_max: u64) -> Vec<Vec2Q> {
    if j == 0 {
        let fr = fractions(det_max);
        return fr.iter().flat_map(|x| fr.iter().map(move |y| Vec2Q::new(x.clone(), y.clone()))).collect();
    }
    let m = Mat2Z::IDENTITY - group.rotation(j);
    solve_congruence(&m.to_int_matrix(), &[Rat::zero(), Rat::zero()])
        .expect("homogeneous system is solvable")
        .points()
        .into_iter()
        .map(|v| Vec2Q::new(v[0].clone(), v[1].clone()))
        .collect()
}

/// All validate-accepted instances of the configuration, in canonical order.
pub fn enumerate_instances(cfg: &SweepConfig) -> Result<Vec<(InstanceKey, QotePair)>, String> {
    let mut out = BTreeMap::new();
    let m = cfg.entry_max;
    for &n in &cfg.orders {
        let group = RotationGroup::new(n).map_err(|e| e.to_string())?;
        let r = group.generator();
        for a00 in -m..=m {
            for a01 in -m..=m {
                for a10 in -m..=m {
                    for a11 in -m..=m {
                        let a = Mat2Z::new(a00, a01, a10, a11);
                        let det = a.det().unsigned_abs();
                        if det < 2 || det > cfg.det_max {
                            continue;
                        }
                        let Some(j) = (0..n).find(|&j| a * r == group.rotation(j) * a) else {
                            continue;
                        };
                        for b in translations(&group, j, cfg.det_max) {
                            let f = AffineEndo::new(a, b).expect("nonsingular");
                            for &tag in &cfg.precompose {
                                let q = match tag {
                                    PrecomposeTag::Identity => AffineEndo::identity(),
                                    PrecomposeTag::F => f.clone(),
                                };
                                if let Ok(pair) = QotePair::validate(group, f.clone(), q) {
                                    let key = InstanceKey {
                                        order: n,
                                        a,
                                        b: f.translation().coords().clone(),
                                        precompose: tag,
                                    };
                                    let prev = out.insert(key, pair);
                                    assert!(prev.is_none(), "enumeration produced a duplicate instance");
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(out.into_iter().collect())
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    #[serde(flatten)]
    pub key: InstanceKey,
    pub deg_f: u64,
    pub deg_pi: u64,
    pub signature: Option<String>,
    pub chi: Option<Rat>,
    pub pi_injective: Option<bool>,
    pub h_order: usize,
    pub quotient_steps: usize,
    pub passed: bool,
    pub failed_checks: Vec<String>,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct SweepSummary {
    pub instances: usize,
    pub failures: usize,
    pub injective: usize,
    pub non_injective: usize,
    pub quotient_steps: usize,
    pub signatures: BTreeMap<String, usize>,
    pub failed_checks: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepReport {
    pub summary: SweepSummary,
    pub rows: Vec<SweepRow>,
}

impl SweepReport {
    pub fn passed(&self) -> bool {
        self.summary.failures == 0
    }
}

fn sweep_options(cfg: &SweepConfig) -> AnalysisOptions {
    AnalysisOptions {
        samples: cfg.samples,
        seed: cfg.seed,
        marked_depth: 1,
        ..AnalysisOptions::default()
    }
}

/// Analyzes every instance, calling `inspect` on each full report.
pub fn run_sweep_with<F>(cfg: &SweepConfig, inspect: F) -> Result<SweepReport, String>
where
    F: Fn(&InstanceKey, &QotePair, &Report) + Sync,
{
    let instances = enumerate_instances(cfg)?;
    let opts = sweep_options(cfg);
    let work = || -> Vec<SweepRow> {
        instances
            .par_iter()
            .map(|(key, pair)| {
                let report = analyze(pair, &opts);
                inspect(key, pair, &report);
                SweepRow {
                    key: key.clone(),
                    deg_f: report.deg_f,
                    deg_pi: report.deg_pi,
                    signature: report.signature.clone(),
                    chi: report.chi.clone(),
                    pi_injective: report.pi_injective,
                    h_order: report.h_order,
                    quotient_steps: report.quotient.as_ref().map_or(0, |t| t.steps.len()),
                    passed: report.passed(),
                    failed_checks: report.failed_checks().into_iter().map(String::from).collect(),
                }
            })
            .collect()
    };
    let rows = match cfg.jobs {
        Some(j) => rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build()
            .map_err(|e| e.to_string())?
            .install(work),
        None => work(),
    };
    let mut summary = SweepSummary { instances: rows.len(), ..Default::default() };
    for row in &rows {
        if !row.passed {
            summary.failures += 1;
        }
        match row.pi_injective {
            Some(true) => summary.injective += 1,
            Some(false) => summary.non_injective += 1,
            None => {}
        }
        summary.quotient_steps += row.quotient_steps;
        let sig = row.signature.clone().unwrap_or_else(|| "none".into());
        *summary.signatures.entry(sig).or_default() += 1;
        for c in &row.failed_checks {
            *summary.failed_checks.entry(c.clone()).or_default() += 1;
        }
    }
    Ok(SweepReport { summary, rows })
}

pub fn run_sweep(cfg: &SweepConfig) -> Result<SweepReport, String> {
    run_sweep_with(cfg, |_, _, _| {})
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn enumeration_is_canonical_and_equivariant() {
        let cfg = SweepConfig { det_max: 4, ..Default::default() };
        let inst = enumerate_instances(&cfg).unwrap();
        assert!(!inst.is_empty());
        let keys: BTreeSet<&InstanceKey> = inst.iter().map(|(k, _)| k).collect();
        assert_eq!(keys.len(), inst.len());
        for (k, p) in &inst {
            assert!(p.group().check_equivariance(p.endomorphism()).is_some());
            assert!(k.b.x < Rat::one() && !k.b.x.is_negative());
            assert!(k.b.x.denom_i64().unwrap() as u32 <= k.order);
            assert!((2..=4).contains(&p.deg_f()));
        }
    }

    #[test]
    fn empty_sweep() {
        let cfg = SweepConfig { entry_max: 0, ..Default::default() };
        let r = run_sweep(&cfg).unwrap();
        assert_eq!(r.summary.instances, 0);
        assert!(r.passed());
    }

    #[test]
    fn small_sweep_orders_three_four_six() {
        let cfg = SweepConfig {
            orders: vec![3, 4, 6],
            det_max: 3,
            precompose: vec![PrecomposeTag::Identity],
            samples: 10,
            ..Default::default()
        };
        let r = run_sweep(&cfg).unwrap();
        assert!(r.summary.instances > 0);
        assert!(r.passed(), "{:?}", r.summary.failed_checks);
        for sig in r.summary.signatures.keys() {
            assert!(["(3,3,3)", "(2,4,4)", "(2,3,6)"].contains(&sig.as_str()), "{sig}");
        }
    }

    #[test]
    fn precompose_tag_parsing() {
        assert_eq!("id".parse::<PrecomposeTag>(), Ok(PrecomposeTag::Identity));
        assert_eq!("F".parse::<PrecomposeTag>(), Ok(PrecomposeTag::F));
        assert!("G".parse::<PrecomposeTag>().is_err());
    }
}
