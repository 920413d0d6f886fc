//! Acceptance sweep: one PASS/FAIL line per criterion.
//!
//! Run with `cargo test -p harmorph --test acceptance -- --nocapture` to see
//! the lines and the measured worst residuals.

use std::time::Instant;

use harmorph::morphisms::{
    dual_quat_excluded_point, dual_quat_family, dual_real_excluded_point, dual_real_morphism,
    quat_family, real_morphism, type_iv_bigcell_morphism, Morphism,
};
use harmorph::report::VerificationReport;
use harmorph::spaces::{SpaceId, SpaceSpec};
use harmorph::verifier::{
    oracle_morphisms, sample_composition, verify_basis_independence, verify_bigcell,
    verify_derivative_lemmas, verify_family, verify_harmonic, verify_invariance,
    verify_lemma_formula_real, verify_lemma_long, verify_oracle_convergence,
    verify_sensitivity_control, SuiteConfig,
};

const SEED: u64 = 20_240_607;

/// Pinned tolerances, one per criterion quantity.
const EXACT_RUNTIME_S: f64 = 60.0;
const TOL_TAU_CONSTANT: f64 = 1e-9;
const TOL_RELATIONS: f64 = 1e-8;
const TOL_NONCOMPACT: f64 = 1e-8;
const TOL_COMPACT: f64 = 1e-7;
const TOL_MINOR_IMAG: f64 = 1e-10;
const ORDER_RANGE: (f64, f64) = (1.8, 2.2);
const TOL_ORACLE: f64 = 1e-5;
const TOL_BASIS: f64 = 1e-9;
const TOL_INVARIANCE: f64 = 1e-9;
const TOL_COMPOSE: f64 = 1e-7;
const CONTROL_FLOOR: f64 = 0.1;

struct Criterion {
    ok: bool,
    detail: Vec<String>,
}

impl Criterion {
    fn new() -> Self {
        Self {
            ok: true,
            detail: Vec::new(),
        }
    }

    fn check(&mut self, ok: bool, what: String) {
        if !ok {
            self.detail.push(format!("  violated: {what}"));
        }
        self.ok &= ok;
    }

    /// Requires `report` to pass and every listed key to be at most `tol`.
    fn report(&mut self, r: &VerificationReport, keys: &[(&str, f64)]) {
        let tag = format!(
            "{}[{}]",
            r.suite,
            r.space.clone().unwrap_or_else(|| format!("n={}", r.n))
        );
        self.check(
            r.passed,
            format!("{tag} did not pass:\n{}", r.render_text()),
        );
        for (key, tol) in keys {
            match r.residual(key) {
                Some(v) => self.check(v <= *tol, format!("{tag} {key} = {v:.3e} > {tol:.0e}")),
                None => self.check(false, format!("{tag} missing {key}")),
            }
        }
    }

    fn measured(&mut self, line: String) {
        self.detail.push(format!("  {line}"));
    }
}

fn cfg(trials: usize) -> SuiteConfig {
    SuiteConfig::new(trials, SEED).with_jobs(4)
}

fn worst(reports: &[VerificationReport], key: &str) -> f64 {
    reports
        .iter()
        .filter_map(|r| r.residual(key))
        .fold(0.0, f64::max)
}

fn criterion_1() -> Criterion {
    let mut c = Criterion::new();
    let start = Instant::now();
    for n in 2..=4 {
        let r = verify_lemma_formula_real(n, &cfg(100)).unwrap();
        c.report(&r, &[]);
        let tally = r.exact.unwrap();
        c.check(
            tally.agreed == 100 && tally.total == 100,
            format!("formula-real n={n}: {tally:?}"),
        );
    }
    for n in 1..=3 {
        let r = verify_lemma_long(n, &cfg(100)).unwrap();
        c.report(&r, &[]);
        let tally = r.exact.unwrap();
        c.check(
            tally.agreed == 100 && tally.total == 100,
            format!("long n={n}: {tally:?}"),
        );
    }
    let elapsed = start.elapsed().as_secs_f64();
    c.check(
        elapsed <= EXACT_RUNTIME_S,
        format!("exact runtime {elapsed:.1}s"),
    );
    c.measured(format!("exact runtime {elapsed:.2}s"));
    c
}

fn criterion_2() -> Criterion {
    let mut c = Criterion::new();
    let mut reports = Vec::new();
    for (id, ns) in [(SpaceId::SlrSo, 2..=5), (SpaceId::SusSp, 1..=3)] {
        for n in ns {
            let space = SpaceSpec::new(id, n).unwrap();
            let r = verify_derivative_lemmas(&space, &cfg(100)).unwrap();
            let mut keys = vec![("tau-phi", TOL_TAU_CONSTANT), ("kappa-phi", TOL_RELATIONS)];
            if id == SpaceId::SlrSo {
                keys.extend([
                    ("kappa-phi-psi", TOL_RELATIONS),
                    ("kappa-psi", TOL_RELATIONS),
                    ("tau-psi", TOL_RELATIONS),
                ]);
            }
            c.report(&r, &keys);
            reports.push(r);
        }
    }
    for key in [
        "tau-phi",
        "kappa-phi",
        "kappa-phi-psi",
        "kappa-psi",
        "tau-psi",
        "kappa-phi-column",
    ] {
        c.measured(format!("worst {key} = {:.3e}", worst(&reports, key)));
    }
    c
}

fn real_morphisms(
    n: usize,
    build: fn(usize, usize, usize) -> harmorph::Result<Morphism>,
) -> Vec<Morphism> {
    let mut out = Vec::new();
    for k in 1..=n {
        for l in (1..=n).filter(|&l| l != k) {
            out.push(build(n, k, l).unwrap());
        }
    }
    out
}

fn criterion_3() -> Criterion {
    let mut c = Criterion::new();
    let mut reports = Vec::new();
    for n in 2..=5 {
        for m in real_morphisms(n, real_morphism) {
            let r = verify_harmonic(&m, &cfg(100)).unwrap();
            c.report(&r, &[("tau", TOL_NONCOMPACT), ("kappa", TOL_NONCOMPACT)]);
            reports.push(r);
        }
    }
    for n in 1..=3 {
        for l in 1..=n {
            let r = verify_family(&quat_family(n, l).unwrap(), &cfg(100)).unwrap();
            c.report(&r, &[("tau", TOL_NONCOMPACT), ("kappa", TOL_NONCOMPACT)]);
            reports.push(r);
        }
    }
    c.measured(format!(
        "worst tau = {:.3e}, kappa = {:.3e}, oracle = {:.3e}",
        worst(&reports, "tau"),
        worst(&reports, "kappa"),
        worst(&reports, "oracle")
    ));
    c
}

fn criterion_4() -> Criterion {
    let mut c = Criterion::new();
    let mut reports = Vec::new();
    for n in 2..=4 {
        for m in real_morphisms(n, dual_real_morphism) {
            let r = verify_harmonic(&m, &cfg(100)).unwrap();
            c.report(&r, &[("tau", TOL_COMPACT), ("kappa", TOL_COMPACT)]);
            reports.push(r);
        }
        let m = dual_real_morphism(n, 2, 1).unwrap();
        let outside = dual_real_excluded_point(n, 1).unwrap();
        c.check(
            !m.in_domain(&outside).unwrap(),
            format!("su-so n={n}: excluded point accepted"),
        );
    }
    for n in 1..=2 {
        for l in 1..=n {
            let r = verify_family(&dual_quat_family(n, l).unwrap(), &cfg(100)).unwrap();
            c.report(&r, &[("tau", TOL_COMPACT), ("kappa", TOL_COMPACT)]);
            reports.push(r);
        }
    }
    // At n = 1 the compact family is defined on all of SU(2); the
    // excluded point is constructed at n = 2.
    let fam = dual_quat_family(2, 1).unwrap();
    let outside = dual_quat_excluded_point(2, 1).unwrap();
    c.check(
        fam.iter().any(|m| !m.in_domain(&outside).unwrap()),
        "su-sp n=2: excluded point accepted".into(),
    );
    c.measured(format!(
        "worst tau = {:.3e}, kappa = {:.3e}",
        worst(&reports, "tau"),
        worst(&reports, "kappa")
    ));
    c
}

fn criterion_5() -> Criterion {
    let mut c = Criterion::new();
    let mut reports = Vec::new();
    for n in 2..=3 {
        let r = verify_bigcell(n, &cfg(1000)).unwrap();
        c.report(
            &r,
            &[("minor-imag", TOL_MINOR_IMAG), ("minor-nonpositive", 0.0)],
        );
        c.measured(format!(
            "n={n} worst minor-imag = {:.3e}",
            r.residual("minor-imag").unwrap()
        ));
        let r = verify_harmonic(&type_iv_bigcell_morphism(n, 2, 1).unwrap(), &cfg(100)).unwrap();
        c.report(&r, &[("tau", TOL_COMPACT), ("kappa", TOL_COMPACT)]);
        reports.push(r);
    }
    c.measured(format!(
        "L21 worst tau = {:.3e}, kappa = {:.3e}",
        worst(&reports, "tau"),
        worst(&reports, "kappa")
    ));
    c
}

fn criterion_6() -> Criterion {
    let mut c = Criterion::new();
    let r = verify_oracle_convergence(&oracle_morphisms(3).unwrap(), &cfg(50)).unwrap();
    let half_width = (ORDER_RANGE.1 - ORDER_RANGE.0) / 2.0;
    c.report(
        &r,
        &[
            ("order-d1", half_width),
            ("order-d2", half_width),
            ("agreement", TOL_ORACLE),
        ],
    );
    for key in ["order-d1", "order-d2", "agreement"] {
        c.measured(format!("worst {key} = {:.3e}", r.residual(key).unwrap()));
    }
    c
}

fn criterion_7() -> Criterion {
    let mut c = Criterion::new();
    let mut reports = Vec::new();
    for id in SpaceId::ALL {
        for n in [2, 3] {
            let space = SpaceSpec::new(id, n).unwrap();
            let r = verify_basis_independence(&space, &cfg(10)).unwrap();
            c.report(&r, &[("tau", TOL_BASIS), ("kappa", TOL_BASIS)]);
            reports.push(r);
        }
    }
    c.measured(format!(
        "worst tau = {:.3e}, kappa = {:.3e}",
        worst(&reports, "tau"),
        worst(&reports, "kappa")
    ));
    c
}

fn criterion_8() -> Criterion {
    let mut c = Criterion::new();
    let mut reports = Vec::new();
    let mut morphisms = vec![
        real_morphism(3, 1, 2).unwrap(),
        real_morphism(3, 3, 2).unwrap(),
        dual_real_morphism(3, 1, 2).unwrap(),
        type_iv_bigcell_morphism(3, 3, 1).unwrap(),
    ];
    morphisms.extend(quat_family(2, 1).unwrap());
    morphisms.extend(dual_quat_family(2, 1).unwrap());
    for m in &morphisms {
        let r = verify_invariance(m, &cfg(20)).unwrap();
        c.report(
            &r,
            &[
                ("invariance", TOL_INVARIANCE),
                ("stabilizer-algebra", TOL_INVARIANCE),
            ],
        );
        reports.push(r);
    }
    c.check(
        worst(&reports, "scale") <= TOL_INVARIANCE,
        "scale invariance".into(),
    );
    for n in 2..=3 {
        let f = sample_composition(n).unwrap();
        let r = verify_harmonic(&f, &cfg(100)).unwrap();
        c.report(&r, &[("tau", TOL_COMPOSE), ("kappa", TOL_COMPOSE)]);
        c.measured(format!(
            "compose n={n}: tau = {:.3e}, kappa = {:.3e}",
            r.residual("tau").unwrap(),
            r.residual("kappa").unwrap()
        ));
    }
    c.measured(format!(
        "worst invariance = {:.3e}, scale = {:.3e}, stabilizer-algebra = {:.3e}",
        worst(&reports, "invariance"),
        worst(&reports, "scale"),
        worst(&reports, "stabilizer-algebra")
    ));
    c
}

fn criterion_9() -> Criterion {
    let mut c = Criterion::new();
    for n in 2..=5 {
        let space = SpaceSpec::new(SpaceId::SlrSo, n).unwrap();
        let control = harmorph::morphisms::entry_morphism(&space, 1, 1).unwrap();
        let harmonic = verify_harmonic(&control, &cfg(100)).unwrap();
        c.check(
            !harmonic.passed,
            format!("phi11 passed the harmonic suite at n={n}"),
        );
        let r = verify_sensitivity_control(n, &cfg(100)).unwrap();
        let min = r.lower_bounds["tau"].min;
        let below = r.failures.len();
        c.check(
            r.passed && min >= CONTROL_FLOOR,
            format!("n={n} min tau residual {min:.3e}"),
        );
        c.measured(format!(
            "n={n} harmonic suite passed={} worst tau = {:.3e}; min normalized tau = {min:.3e}, {below}/100 points below {CONTROL_FLOOR}",
            harmonic.passed,
            harmonic.residual("tau").unwrap()
        ));
    }
    c
}

/// Criteria that fail on this implementation, with the measured reason.
/// The sweep asserts that exactly these are red.
const KNOWN_RED: &[(usize, &str)] = &[(
    9,
    "with |tau|/max(1,S) the phi11 residual is 2(n+1)phi11/max(1,4 phi11^2), \
     below 0.1 when phi11 > 5(n+1) or phi11 < 0.05/(n+1), and sampled points land there",
)];

#[test]
fn acceptance() {
    type Run = fn() -> Criterion;
    let criteria: [(&str, Run); 9] = [
        ("exact identities", criterion_1),
        ("derivative constants and relations", criterion_2),
        ("non-compact harmonic morphisms", criterion_3),
        ("compact duals", criterion_4),
        ("type IV big cell", criterion_5),
        ("finite-difference oracle", criterion_6),
        ("basis independence", criterion_7),
        ("invariance and composition", criterion_8),
        ("sensitivity control", criterion_9),
    ];
    let mut failed = Vec::new();
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let c = run();
        let verdict = if c.ok { "PASS" } else { "FAIL" };
        println!(
            "{verdict} {} {name} ({:.1}s)",
            i + 1,
            start.elapsed().as_secs_f64()
        );
        for line in &c.detail {
            println!("{line}");
        }
        if !c.ok {
            failed.push(i + 1);
            if let Some((_, why)) = KNOWN_RED.iter().find(|(k, _)| *k == i + 1) {
                println!("  known red: {why}");
            }
        }
    }
    let expected: Vec<usize> = KNOWN_RED.iter().map(|(k, _)| *k).collect();
    assert_eq!(
        failed, expected,
        "red criteria differ from the recorded set"
    );
}
