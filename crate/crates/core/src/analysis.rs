//! Instance specs and full per-instance analysis reports.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::injectivity::{
    check_fiber_degree_constancy, check_transversality, compute_h, decide_pi_injectivity,
    fiber_degree_profile, iterate_injectivity, make_injective_with, sample_sphere_points,
    InjectivityVerdict, QuotientStep, TransversalityCertificate, DEFAULT_SEED, QUOTIENT_SAMPLES,
};
use crate::lattice::Rat;
use crate::orbifold::{
    classify, is_divisibility_minimal, portrait_from_qote, ramification, ramification_oracle,
    ramification_oracle_pair, signature_taxonomy, Classification, Nu, OrbifoldData, Taxonomy,
};
use crate::qote::{QoteError, QotePair};
use crate::torus::{AffineEndo, RotationGroup, SpherePoint, TorusPoint};

pub const DEFAULT_SAMPLES: usize = 100;
pub const DEFAULT_MARKED_DEPTH: usize = 3;

/// A QOTE instance as read from JSON.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceSpec {
    pub group: RotationGroup,
    pub endomorphism: AffineEndo,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub precompose: Option<AffineEndo>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub marked_depth: Option<usize>,
}

impl InstanceSpec {
    pub fn pair(&self) -> Result<QotePair, QoteError> {
        QotePair::validate(
            self.group,
            self.endomorphism.clone(),
            self.precompose.clone().unwrap_or_else(AffineEndo::identity),
        )
    }
}

#[derive(Debug, Clone)]
pub struct AnalysisOptions {
    pub samples: usize,
    pub seed: u64,
    pub marked_depth: usize,
    /// Highest power of `F` whose pi-injectivity is checked.
    pub iterate: u32,
    /// Highest power of `F` checked for transversality.
    pub transversality_powers: u32,
    pub quotient: bool,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions {
            samples: DEFAULT_SAMPLES,
            seed: DEFAULT_SEED,
            marked_depth: DEFAULT_MARKED_DEPTH,
            iterate: 3,
            transversality_powers: 2,
            quotient: true,
        }
    }
}

impl AnalysisOptions {
    /// Options from the spec's own fields, over the defaults.
    pub fn from_spec(spec: &InstanceSpec) -> Self {
        let d = AnalysisOptions::default();
        AnalysisOptions {
            samples: spec.samples.unwrap_or(d.samples),
            seed: spec.seed.unwrap_or(d.seed),
            marked_depth: spec.marked_depth.unwrap_or(d.marked_depth),
            ..d
        }
    }
}

/// One asserted identity with the values compared.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub expected: Value,
    pub found: Value,
}

#[derive(Debug, Default)]
struct Checks(Vec<Check>);

impl Checks {
    fn push(&mut self, name: &str, expected: Value, found: Value) {
        let passed = expected == found;
        self.0.push(Check { name: name.into(), passed, expected, found });
    }

    fn error(&mut self, name: &str, expected: Value, err: impl std::fmt::Display) {
        self.0.push(Check {
            name: name.into(),
            passed: false,
            expected,
            found: json!({ "error": err.to_string() }),
        });
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CriticalPoint {
    pub point: SpherePoint,
    pub degree: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct QuotientTrace {
    pub steps: Vec<QuotientStep>,
    /// `deg(pi)` before each step and after the last.
    pub ledger: Vec<u64>,
    pub final_pair: QotePair,
    pub final_injective: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub instance: QotePair,
    pub deg_f: u64,
    pub deg_pi: u64,
    pub s_pi: Vec<TorusPoint>,
    pub postcritical: Vec<SpherePoint>,
    pub critical: Vec<CriticalPoint>,
    pub marked_set_sizes: Vec<usize>,
    pub orbifold: Option<OrbifoldData>,
    pub signature: Option<String>,
    pub chi: Option<Rat>,
    pub classification: Option<Classification>,
    pub taxonomy: Option<Taxonomy>,
    pub pi_injective: Option<bool>,
    pub injectivity: Option<InjectivityVerdict>,
    pub h_order: usize,
    pub transversality: Vec<TransversalityCertificate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub quotient: Option<QuotientTrace>,
    pub checks: Vec<Check>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timing_ms: Option<u128>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failed_checks(&self) -> Vec<&str> {
        self.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect()
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

fn nu_json(nu: &BTreeMap<String, Nu>) -> Value {
    serde_json::to_value(nu).expect("serializable")
}

/// Runs every computation on `pair` and records each identity as a check.
pub fn analyze(pair: &QotePair, opts: &AnalysisOptions) -> Report {
    let mut checks = Checks::default();
    let d = pair.deg_f();

    let critical = match pair.critical_set_f() {
        Ok(c) => {
            let total: u64 = c.iter().map(|(_, k)| u64::from(*k) - 1).sum();
            checks.push("riemann_hurwitz", json!(2 * d - 2), json!(total));
            c.into_iter().map(|(point, degree)| CriticalPoint { point, degree }).collect()
        }
        Err(e) => {
            checks.error("riemann_hurwitz", json!(2 * d - 2), e);
            Vec::new()
        }
    };

    let marked = pair.marked_sets(opts.marked_depth.max(1));
    let level1 = marked.level(1).clone();
    let samples = sample_sphere_points(pair, opts.seed, opts.samples, &level1);

    let mut tower_ok = marked.is_nested();
    let mut chain_total = 0usize;
    let mut chain_ok = 0usize;
    let mut degree_sums_ok = true;
    let mut fault: Option<QoteError> = None;
    for j in 0..marked.depth() {
        for p in marked.level(j + 1) {
            match pair.eval_f(p) {
                Ok(fp) => tower_ok &= marked.level(j).contains(&fp),
                Err(e) => fault = Some(e),
            }
        }
    }
    for p in &samples {
        match pair.eval_f(p) {
            Ok(fp) => {
                for j in 0..marked.depth() {
                    tower_ok &= marked.level(j + 1).contains(p) == marked.level(j).contains(&fp);
                }
            }
            Err(e) => fault = Some(e),
        }
    }
    for p in level1.iter() {
        for x in pair.pi_fiber(p) {
            chain_total += 1;
            match pair.chain_rule_holds(&x) {
                Ok(true) => chain_ok += 1,
                Ok(false) => {}
                Err(e) => fault = Some(e),
            }
        }
    }
    for p in marked.level(0) {
        match pair.sphere_preimages(p) {
            Ok(pre) => degree_sums_ok &= pre.iter().map(|(_, k)| u64::from(*k)).sum::<u64>() == d,
            Err(e) => fault = Some(e),
        }
    }
    match fault {
        Some(e) => checks.error("induced_map_well_defined", json!(true), e),
        None => checks.push("induced_map_well_defined", json!(true), json!(true)),
    }
    checks.push("marked_tower", json!(true), json!(tower_ok));
    checks.push("chain_rule", json!(chain_total), json!(chain_ok));
    checks.push("preimage_degree_sum", json!(true), json!(degree_sums_ok));

    let constancy = check_fiber_degree_constancy(pair);
    checks.push("fiber_degree_constancy", json!(true), json!(constancy));
    if !constancy {
        let profile: Vec<(String, Vec<u32>)> =
            fiber_degree_profile(pair).into_iter().map(|(p, ds)| (p.to_string(), ds)).collect();
        checks.push("fiber_degree_profile", json!([]), json!(profile));
    }

    let mut orbifold = None;
    match portrait_from_qote(pair) {
        Ok((portrait, points)) => {
            let from_portrait: BTreeSet<SpherePoint> =
                portrait.postcritical().iter().map(|&v| points[v].clone()).collect();
            let pf: BTreeSet<SpherePoint> = pair.postcritical_set().iter().cloned().collect();
            checks.push(
                "postcritical_set",
                json!(pf.iter().map(|p| p.to_string()).collect::<Vec<_>>()),
                json!(from_portrait.iter().map(|p| p.to_string()).collect::<Vec<_>>()),
            );
            match ramification(&portrait) {
                Ok(data) => {
                    checks.push("chi_zero", json!("0"), json!(data.chi.to_string()));
                    checks.push("finite_ramification", json!(false), json!(data.has_infinity()));
                    checks.push(
                        "ramification_minimal",
                        json!(true),
                        json!(is_divisibility_minimal(&portrait, &data.nu)),
                    );
                    if !data.has_infinity() {
                        let depth = portrait.len();
                        match ramification_oracle(&portrait, depth) {
                            Ok(o) => {
                                let found: BTreeMap<String, Nu> =
                                    o.into_iter().map(|(k, v)| (k, Nu::Finite(v))).collect();
                                checks.push("ramification_oracle", nu_json(&data.nu), nu_json(&found));
                            }
                            Err(e) => checks.error("ramification_oracle", nu_json(&data.nu), e),
                        }
                        match ramification_oracle_pair(pair, depth) {
                            Ok(o) => {
                                let found: BTreeMap<String, Nu> =
                                    o.into_iter().map(|(k, v)| (k.to_string(), Nu::Finite(v))).collect();
                                checks.push("ramification_oracle_pair", nu_json(&data.nu), nu_json(&found));
                            }
                            Err(e) => checks.error("ramification_oracle_pair", nu_json(&data.nu), e),
                        }
                    }
                    orbifold = Some(data);
                }
                Err(e) => checks.error("ramification", json!(true), e),
            }
        }
        Err(e) => checks.error("portrait", json!(true), e),
    }

    let h_order = compute_h(pair).len();
    let injectivity = match decide_pi_injectivity(pair) {
        Ok(v) => {
            checks.push("pi_injectivity_paths_agree", json!(true), json!(true));
            Some(v)
        }
        Err(e) => {
            checks.error("pi_injectivity_paths_agree", json!(true), e);
            None
        }
    };
    let pi_injective = injectivity.as_ref().map(|v| v.injective);

    let mut transversality = Vec::new();
    if pi_injective == Some(true) {
        match iterate_injectivity(pair, opts.iterate) {
            Ok(vs) => checks.push(
                "iterate_injectivity",
                json!(vec![true; opts.iterate as usize]),
                json!(vs.iter().map(|v| v.injective).collect::<Vec<_>>()),
            ),
            Err(e) => checks.error("iterate_injectivity", json!(vec![true; opts.iterate as usize]), e),
        }
        let mut holds = Vec::new();
        for m in 1..=opts.transversality_powers {
            match pair.power(m) {
                Ok(p) => {
                    let cert = check_transversality(&p, &samples);
                    holds.push(json!(cert.holds));
                    transversality.push(cert);
                }
                Err(e) => holds.push(json!({ "error": e.to_string() })),
            }
        }
        checks.push(
            "transversality",
            json!(vec![true; opts.transversality_powers as usize]),
            json!(holds),
        );
    }

    let quotient = if opts.quotient && h_order > 1 {
        match make_injective_with(pair, opts.seed, QUOTIENT_SAMPLES) {
            Ok((last, steps)) => {
                let ledger: Vec<u64> =
                    steps.iter().map(|s| s.deg_pi_old).chain([last.deg_pi()]).collect();
                let decreasing = ledger.windows(2).all(|w| w[0] > w[1]);
                let bookkeeping = steps.iter().all(|s| s.deg_pi_new * s.h.len() as u64 == s.deg_pi_old);
                let final_injective = decide_pi_injectivity(&last).map(|v| v.injective);
                checks.push("quotient_degrees_decrease", json!(true), json!(decreasing && bookkeeping));
                match &final_injective {
                    Ok(b) => checks.push("quotient_final_injective", json!(true), json!(b)),
                    Err(e) => checks.error("quotient_final_injective", json!(true), e),
                }
                Some(QuotientTrace {
                    steps,
                    ledger,
                    final_pair: last,
                    final_injective: final_injective.unwrap_or(false),
                })
            }
            Err(e) => {
                checks.error("quotient", json!(true), e);
                None
            }
        }
    } else {
        None
    };

    Report {
        instance: pair.clone(),
        deg_f: d,
        deg_pi: pair.deg_pi(),
        s_pi: pair.projection_critical_set().to_vec(),
        postcritical: pair.postcritical_set().to_vec(),
        critical,
        marked_set_sizes: marked.sizes(),
        signature: orbifold.as_ref().map(OrbifoldData::signature_string),
        chi: orbifold.as_ref().map(|o| o.chi.clone()),
        classification: orbifold.as_ref().map(classify),
        taxonomy: orbifold.as_ref().and_then(signature_taxonomy),
        orbifold,
        pi_injective,
        injectivity,
        h_order,
        transversality,
        quotient,
        checks: checks.0,
        timing_ms: None,
    }
}
