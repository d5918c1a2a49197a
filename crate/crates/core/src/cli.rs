//! Command implementations behind the `orbifoldkit` binary.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::json;

use crate::analysis::{analyze, AnalysisOptions, Check, InstanceSpec, QuotientTrace, Report};
use crate::injectivity::{decide_pi_injectivity, make_injective_with, QUOTIENT_SAMPLES};
use crate::orbifold::{
    classify, is_divisibility_minimal, ramification, ramification_oracle, signature_taxonomy,
    Classification, Nu, OrbifoldData, RamifiedPortrait, Taxonomy,
};
use crate::qote::QotePair;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_CHECK: i32 = 3;
pub const EXIT_IO: i32 = 4;
pub const SEED_ENV: &str = "ORBIFOLDKIT_SEED";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid input: {0}")]
    Input(String),
    #[error("I/O error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => EXIT_INPUT,
            CliError::Io(_) => EXIT_IO,
        }
    }
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports serialize");
    s.push('\n');
    s
}

/// Writes to `path`, or to stdout without one.
pub fn write_output(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| CliError::Io(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// `ORBIFOLDKIT_SEED`, then the command line, then the spec.
pub fn resolve_seed(cli: Option<u64>, spec: Option<u64>) -> Result<Option<u64>, CliError> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| CliError::Input(format!("{SEED_ENV}={v:?} is not an unsigned integer"))),
        Err(_) => Ok(cli.or(spec)),
    }
}

pub fn load_pair(spec: &InstanceSpec) -> Result<QotePair, CliError> {
    spec.pair().map_err(|e| CliError::Input(e.to_string()))
}

pub fn run_analyze(
    spec: &InstanceSpec,
    samples: Option<usize>,
    seed: Option<u64>,
) -> Result<Report, CliError> {
    let pair = load_pair(spec)?;
    let mut opts = AnalysisOptions::from_spec(spec);
    if let Some(n) = samples {
        opts.samples = n;
    }
    if let Some(s) = resolve_seed(seed, spec.seed)? {
        opts.seed = s;
    }
    Ok(analyze(&pair, &opts))
}

#[derive(Debug, Clone, Serialize)]
pub struct QuotientReport {
    pub instance: QotePair,
    pub trace: Option<QuotientTrace>,
    pub checks: Vec<Check>,
}

impl QuotientReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

fn check(name: &str, expected: serde_json::Value, found: serde_json::Value) -> Check {
    Check { name: name.into(), passed: expected == found, expected, found }
}

pub fn run_quotient(spec: &InstanceSpec, seed: Option<u64>) -> Result<QuotientReport, CliError> {
    let pair = load_pair(spec)?;
    let seed = resolve_seed(seed, spec.seed)?.unwrap_or(crate::injectivity::DEFAULT_SEED);
    let mut checks = Vec::new();
    let trace = match make_injective_with(&pair, seed, QUOTIENT_SAMPLES) {
        Ok((last, steps)) => {
            let ledger: Vec<u64> = steps.iter().map(|s| s.deg_pi_old).chain([last.deg_pi()]).collect();
            checks.push(check(
                "degrees_strictly_decrease",
                json!(true),
                json!(ledger.windows(2).all(|w| w[0] > w[1])),
            ));
            for (i, s) in steps.iter().enumerate() {
                checks.push(check(
                    &format!("step_{}_degree_ledger", i + 1),
                    json!(s.deg_pi_old),
                    json!(s.deg_pi_new * s.h.len() as u64),
                ));
                checks.push(check(
                    &format!("step_{}_det_preserved", i + 1),
                    json!(pair.endomorphism().det()),
                    json!(s.new_pair.endomorphism().det()),
                ));
            }
            let verdict = decide_pi_injectivity(&last);
            let final_injective = verdict.as_ref().is_ok_and(|v| v.injective);
            let found = match &verdict {
                Ok(v) => json!(v.injective),
                Err(e) => json!({ "error": e.to_string() }),
            };
            checks.push(check("final_injective", json!(true), found));
            Some(QuotientTrace { steps, ledger, final_pair: last, final_injective })
        }
        Err(e) => {
            checks.push(check("quotient", json!(true), json!({ "error": e.to_string() })));
            None
        }
    };
    Ok(QuotientReport { instance: pair, trace, checks })
}

#[derive(Debug, Clone, Serialize)]
pub struct PortraitReport {
    pub degree: u64,
    pub vertices: usize,
    pub critical: Vec<String>,
    pub postcritical: Vec<String>,
    pub degree_defects: Vec<(String, u64)>,
    pub critical_total: u64,
    pub orbifold: OrbifoldData,
    pub signature: String,
    pub chi: crate::lattice::Rat,
    pub classification: Classification,
    pub taxonomy: Option<Taxonomy>,
    pub oracle: Option<BTreeMap<String, u64>>,
    pub checks: Vec<Check>,
}

impl PortraitReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

pub fn run_portrait(portrait: &RamifiedPortrait) -> Result<PortraitReport, CliError> {
    let data = ramification(portrait).map_err(|e| CliError::Input(e.to_string()))?;
    let names = |vs: Vec<usize>| vs.into_iter().map(|v| portrait.name(v).to_string()).collect();
    let mut checks = vec![
        check("complete_degree_sums", json!([]), json!(portrait.degree_defects())),
        check("ramification_minimal", json!(true), json!(is_divisibility_minimal(portrait, &data.nu))),
    ];
    let oracle = if data.has_infinity() {
        None
    } else {
        let o = ramification_oracle(portrait, portrait.len()).map_err(|e| CliError::Input(e.to_string()))?;
        let found: BTreeMap<&String, Nu> = o.iter().map(|(k, v)| (k, Nu::Finite(*v))).collect();
        checks.push(check("ramification_oracle", json!(data.nu), json!(found)));
        Some(o)
    };
    Ok(PortraitReport {
        degree: portrait.degree(),
        vertices: portrait.len(),
        critical: names(portrait.critical()),
        postcritical: names(portrait.postcritical()),
        degree_defects: portrait.degree_defects(),
        critical_total: portrait.critical_total(),
        signature: data.signature_string(),
        chi: data.chi.clone(),
        classification: classify(&data),
        taxonomy: signature_taxonomy(&data),
        orbifold: data,
        oracle,
        checks,
    })
}

pub fn emit_figure(spec: &InstanceSpec, seed: Option<u64>) -> Result<String, CliError> {
    let pair = load_pair(spec)?;
    let seed = resolve_seed(seed, spec.seed)?.unwrap_or(crate::injectivity::DEFAULT_SEED);
    crate::figure::render_svg(&pair, seed).map_err(|e| CliError::Input(e.to_string()))
}
