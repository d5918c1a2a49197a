use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use orbifoldkit_core::analysis::{analyze, AnalysisOptions, Report};
use orbifoldkit_core::injectivity::{
    check_fiber_degree_constancy, compute_h, decide_pi_injectivity, make_injective,
    sample_sphere_points, QuotientStep,
};
use orbifoldkit_core::lattice::{q, Mat2Z, Rat};
use orbifoldkit_core::orbifold::{
    classify, euler_characteristic, random_portrait, ramification, ramification_oracle,
    Classification, Nu, OrbifoldData,
};
use orbifoldkit_core::qote::QotePair;
use orbifoldkit_core::sweep::{run_sweep_with, InstanceKey, SweepConfig, SweepReport};
use orbifoldkit_core::torus::{AffineEndo, RotationGroup, SpherePoint, TorusPoint};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const SWEEP_BUDGET: Duration = Duration::from_secs(60);
const RANDOM_PORTRAITS: usize = 50;

type Outcome = Result<String, String>;
type SweepCriterion = (usize, &'static str, fn(&SweepRun) -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn tp(x: (i64, i64), y: (i64, i64)) -> TorusPoint {
    TorusPoint::new(q(x.0, x.1), q(y.0, y.1))
}

fn doubling() -> AffineEndo {
    AffineEndo::linear(Mat2Z::scalar(2)).unwrap()
}

fn c2() -> RotationGroup {
    RotationGroup::new(2).unwrap()
}

fn base_instance() -> Outcome {
    let pair = QotePair::standard(c2(), doubling()).map_err(|e| e.to_string())?;
    let start = Instant::now();
    let r = analyze(&pair, &AnalysisOptions::default());
    let elapsed = start.elapsed();
    ensure(r.passed(), || format!("failed checks {:?}", r.failed_checks()))?;

    let halves: BTreeSet<TorusPoint> =
        [tp((0, 1), (0, 1)), tp((1, 2), (0, 1)), tp((0, 1), (1, 2)), tp((1, 2), (1, 2))].into();
    let s_pi: BTreeSet<TorusPoint> = r.s_pi.iter().cloned().collect();
    ensure(s_pi == halves, || format!("S_pi = {s_pi:?}"))?;
    ensure(r.deg_f == 4, || format!("deg f = {}", r.deg_f))?;

    let quarters: BTreeSet<TorusPoint> = [
        tp((1, 4), (0, 1)),
        tp((0, 1), (1, 4)),
        tp((1, 4), (1, 4)),
        tp((1, 2), (1, 4)),
        tp((1, 4), (1, 2)),
        tp((1, 4), (3, 4)),
    ]
    .into();
    let crit: BTreeSet<TorusPoint> = r.critical.iter().map(|c| c.point.representative().clone()).collect();
    ensure(r.critical.len() == 6 && crit == quarters, || format!("critical = {crit:?}"))?;
    ensure(r.critical.iter().all(|c| c.degree == 2), || "critical degrees not all 2".into())?;

    let pf: BTreeSet<SpherePoint> = r.postcritical.iter().cloned().collect();
    let expected_pf: BTreeSet<SpherePoint> = halves.iter().map(|x| pair.project(x)).collect();
    ensure(pf == expected_pf, || format!("P_f = {pf:?}"))?;
    ensure(r.critical.iter().all(|c| !pf.contains(&c.point)), || "critical point in P_f".into())?;

    let level1 = pair.marked_sets(1).levels.swap_remove(1);
    let s_f: BTreeSet<SpherePoint> = r.critical.iter().map(|c| c.point.clone()).collect();
    let rest: BTreeSet<SpherePoint> = level1.difference(&pf).cloned().collect();
    ensure(s_f == rest, || format!("S_f != f^-1(P_f) \\ P_f: {rest:?}"))?;

    ensure(r.pi_injective == Some(true), || "pi not injective".into())?;
    ensure(r.signature.as_deref() == Some("(2,2,2,2)"), || format!("signature {:?}", r.signature))?;
    ensure(r.chi == Some(Rat::zero()), || format!("chi {:?}", r.chi))?;
    Ok(format!("{} checks, {:.0?}", r.checks.len(), elapsed))
}

fn doubled_precompose() -> Outcome {
    let pair = QotePair::validate(c2(), doubling(), doubling()).map_err(|e| e.to_string())?;
    ensure(pair.deg_pi() == 8, || format!("deg pi = {}", pair.deg_pi()))?;
    let verdict = decide_pi_injectivity(&pair).map_err(|e| e.to_string())?;
    ensure(!verdict.injective, || "reported injective".into())?;
    let level1 = pair.marked_sets(1).levels.swap_remove(1);
    let w = verdict.witnesses.first().ok_or("no witness")?;
    let f = pair.endomorphism();
    ensure(w.u != w.v, || "degenerate witness".into())?;
    ensure(f.apply(&w.u) == f.apply(&w.v), || "F(u) != F(v)".into())?;
    ensure(pair.project(&w.u) == w.y && pair.project(&w.v) == w.y, || "witness off its fiber".into())?;
    ensure(!level1.contains(&w.y), || "witness fiber is marked".into())?;

    let h = compute_h(&pair);
    ensure(h.len() == 4, || format!("|H| = {}", h.len()))?;
    let (last, steps) = make_injective(&pair).map_err(|e| e.to_string())?;
    ensure(steps.len() == 1, || format!("{} steps", steps.len()))?;
    let s = &steps[0];
    ensure(last.deg_pi() == 2 && s.deg_pi_new == 2, || format!("final deg pi = {}", last.deg_pi()))?;
    ensure(s.deg_pi_old == s.deg_pi_new * s.h.len() as u64, || "degree ledger mismatch".into())?;
    ensure(decide_pi_injectivity(&last).is_ok_and(|v| v.injective), || "quotient not injective".into())?;
    Ok(format!("witness {} ~ {} over {}, ledger 8 = 2*4", w.u, w.v, w.y))
}

struct SweepRun {
    report: SweepReport,
    elapsed: Duration,
    problems: Problems,
    quotients: Vec<(QotePair, Vec<QuotientStep>)>,
    injective: usize,
}

#[derive(Default)]
struct Problems {
    geometry: Vec<String>,
    rh_chain: Vec<String>,
    paths: Vec<String>,
    iterates: Vec<String>,
    transversality: Vec<String>,
    oracle: Vec<String>,
    quotient: Vec<String>,
}

fn passed(r: &Report, name: &str) -> bool {
    r.check(name).is_some_and(|c| c.passed)
}

fn inspect(key: &InstanceKey, pair: &QotePair, r: &Report, p: &mut Problems) {
    let tag = format!("n={} A={:?} b={} Q={}", key.order, key.a, key.b, key.precompose);
    let no_inf = r.orbifold.as_ref().is_some_and(|o| !o.has_infinity());
    if r.chi != Some(Rat::zero()) || !no_inf || !check_fiber_degree_constancy(pair) {
        p.geometry.push(tag.clone());
    }
    let rh: u64 = r.critical.iter().map(|c| u64::from(c.degree) - 1).sum();
    if rh != 2 * r.deg_f - 2 || !passed(r, "chain_rule") || !passed(r, "riemann_hurwitz") {
        p.rh_chain.push(tag.clone());
    }
    if !passed(r, "pi_injectivity_paths_agree") {
        p.paths.push(tag.clone());
    }
    if r.pi_injective == Some(true) {
        if !passed(r, "iterate_injectivity") {
            p.iterates.push(tag.clone());
        }
        let certs_ok = r.transversality.len() == 2 && r.transversality.iter().all(|c| c.holds);
        if !certs_ok || !passed(r, "transversality") {
            p.transversality.push(tag.clone());
        }
    }
    if !passed(r, "ramification_oracle") || !passed(r, "ramification_oracle_pair") {
        p.oracle.push(tag.clone());
    }
    if r.h_order > 1 {
        let ok = r.quotient.as_ref().is_some_and(|t| {
            t.final_injective && t.ledger.windows(2).all(|w| w[0] > w[1])
        }) && passed(r, "quotient_degrees_decrease");
        if !ok {
            p.quotient.push(tag);
        }
    }
}

fn run_full_sweep() -> Result<SweepRun, String> {
    let cfg = SweepConfig::default();
    let problems = Mutex::new(Problems::default());
    let quotients = Mutex::new(Vec::new());
    let start = Instant::now();
    let report = run_sweep_with(&cfg, |key, pair, r| {
        inspect(key, pair, r, &mut problems.lock().unwrap());
        if let Some(t) = &r.quotient {
            quotients.lock().unwrap().push((pair.clone(), t.steps.clone()));
        }
    })?;
    let elapsed = start.elapsed();
    let injective = report.summary.injective;
    Ok(SweepRun {
        report,
        elapsed,
        problems: problems.into_inner().unwrap(),
        quotients: quotients.into_inner().unwrap(),
        injective,
    })
}

fn summarize(list: &[String], total: usize, what: &str) -> Outcome {
    match list.first() {
        None => Ok(format!("{total} {what}")),
        Some(first) => Err(format!("{} of {total} {what} fail, first: {first}", list.len())),
    }
}

fn sweep_geometry(run: &SweepRun) -> Outcome {
    let s = &run.report.summary;
    ensure(s.instances > 0, || "empty sweep".into())?;
    ensure(run.elapsed < SWEEP_BUDGET, || format!("sweep took {:.1?}", run.elapsed))?;
    ensure(s.failures == 0, || format!("{} failing instances: {:?}", s.failures, s.failed_checks))?;
    summarize(&run.problems.geometry, s.instances, "instances")
        .map(|m| format!("{m}, signatures {:?}, {:.1?}", s.signatures, run.elapsed))
}

fn sweep_rh_chain(run: &SweepRun) -> Outcome {
    summarize(&run.problems.rh_chain, run.report.summary.instances, "instances")
}

fn sweep_paths(run: &SweepRun) -> Outcome {
    summarize(&run.problems.paths, run.report.summary.instances, "instances")
}

fn sweep_iterates(run: &SweepRun) -> Outcome {
    summarize(&run.problems.iterates, run.injective, "injective instances")
}

fn sweep_transversality(run: &SweepRun) -> Outcome {
    summarize(&run.problems.transversality, run.injective, "injective instances")
}

fn oracle_agreement(run: &SweepRun) -> Outcome {
    summarize(&run.problems.oracle, run.report.summary.instances, "instances")?;
    let mut rng = ChaCha8Rng::seed_from_u64(0x0dd5);
    for i in 0..RANDOM_PORTRAITS {
        let portrait = random_portrait(&mut rng, 8);
        let data = ramification(&portrait).map_err(|e| format!("portrait {i}: {e}"))?;
        let oracle = ramification_oracle(&portrait, portrait.len()).map_err(|e| format!("portrait {i}: {e}"))?;
        let mismatch = data.nu.iter().find(|(k, v)| oracle.get(*k).map(|&o| Nu::Finite(o)) != Some(**v));
        ensure(mismatch.is_none() && oracle.len() == data.nu.len(), || {
            format!("portrait {i}: nu {:?} vs oracle {oracle:?}", data.nu)
        })?;
    }
    Ok(format!("{} sweep instances, {RANDOM_PORTRAITS} random portraits", run.report.summary.instances))
}

fn quotient_preservation(run: &SweepRun) -> Outcome {
    summarize(&run.problems.quotient, run.quotients.len(), "quotient instances")?;
    let mut steps_checked = 0;
    for (pair, steps) in &run.quotients {
        let mut old = pair.clone();
        let mut prev_deg = pair.deg_pi();
        for s in steps {
            let new = &s.new_pair;
            ensure(new.deg_pi() < prev_deg, || format!("{pair:?}: degree did not drop"))?;
            ensure(new.base() == old.base() && new.endomorphism().det() == old.endomorphism().det(), || {
                format!("{pair:?}: base map changed")
            })?;
            let mut points = old.marked_sets(1).levels.swap_remove(1);
            points.extend(sample_sphere_points(&old, 0xacce, 50, &points));
            for p in &points {
                let (a, b) = (old.eval_f(p), new.eval_f(p));
                ensure(a.is_ok() && a.as_ref().ok() == b.as_ref().ok(), || {
                    format!("{pair:?}: f differs at {p} after quotient")
                })?;
            }
            prev_deg = new.deg_pi();
            old = new.clone();
            steps_checked += 1;
        }
    }
    Ok(format!("{} instances, {steps_checked} steps", run.quotients.len()))
}

fn classification_arithmetic() -> Outcome {
    use Nu::{Finite as F, Infinite as I};
    let cases: [(&[Nu], Classification, Rat); 8] = [
        (&[F(2), F(2), F(2), F(2)], Classification::Parabolic, Rat::zero()),
        (&[F(2), F(4), F(4)], Classification::Parabolic, Rat::zero()),
        (&[F(3), F(3), F(3)], Classification::Parabolic, Rat::zero()),
        (&[F(2), F(3), F(6)], Classification::Parabolic, Rat::zero()),
        (&[I, I], Classification::Parabolic, Rat::zero()),
        (&[F(2), F(2), I], Classification::Parabolic, Rat::zero()),
        (&[F(2), F(4), F(6)], Classification::Hyperbolic, q(-1, 12)),
        (&[F(2), F(2)], Classification::NotRealizable, Rat::one()),
    ];
    for (sig, class, chi) in &cases {
        let data = OrbifoldData::from_signature(sig);
        let got = euler_characteristic(&data);
        ensure(got == *chi && classify(&data) == *class, || {
            format!("{}: chi {got}, {}", data.signature_string(), classify(&data))
        })?;
    }
    Ok(format!("{} signatures", cases.len()))
}

fn report(n: usize, title: &str, outcome: std::thread::Result<Outcome>) -> bool {
    let outcome = outcome.unwrap_or_else(|e| {
        let msg = e
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_default();
        Err(format!("panicked: {msg}"))
    });
    match &outcome {
        Ok(detail) => println!("criterion {n:>2} PASS  {title}: {detail}"),
        Err(detail) => println!("criterion {n:>2} FAIL  {title}: {detail}"),
    }
    outcome.is_ok()
}

fn main() -> ExitCode {
    let mut ok = true;
    ok &= report(1, "base instance golden values", catch_unwind(base_instance));
    ok &= report(2, "Q = F collapses in one quotient step", catch_unwind(doubled_precompose));

    let run = catch_unwind(run_full_sweep);
    let sweep_criteria: [SweepCriterion; 7] = [
        (3, "sweep: chi = 0, constant fiber degrees, finite nu, time budget", sweep_geometry),
        (4, "sweep: Riemann-Hurwitz and chain rule", sweep_rh_chain),
        (5, "sweep: fast and full injectivity paths agree", sweep_paths),
        (6, "sweep: F^2 and F^3 injective when F is", sweep_iterates),
        (7, "sweep: transversality for F and F^2", sweep_transversality),
        (8, "ramification matches the preimage oracle", oracle_agreement),
        (9, "quotient preserves f and lowers deg pi", quotient_preservation),
    ];
    for (n, title, f) in sweep_criteria {
        let outcome = match &run {
            Ok(Ok(r)) => catch_unwind(AssertUnwindSafe(|| f(r))),
            Ok(Err(e)) => Ok(Err(format!("sweep failed: {e}"))),
            Err(_) => Ok(Err("sweep panicked".into())),
        };
        ok &= report(n, title, outcome);
    }
    ok &= report(10, "orbifold classification arithmetic", catch_unwind(classification_arithmetic));

    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
