use harmorph::morphisms::{dual_quat_family, real_morphism};
use harmorph::spaces::{SpaceId, SpaceSpec};
use harmorph::verifier::{
    verify_basis_independence, verify_family, verify_harmonic, verify_lemma_long, SuiteConfig,
};

#[test]
fn same_seed_same_report() {
    let m = real_morphism(3, 1, 3).unwrap();
    let cfg = SuiteConfig::new(30, 11);
    let a = verify_harmonic(&m, &cfg).unwrap();
    let b = verify_harmonic(&m, &cfg.with_jobs(3)).unwrap();
    assert_eq!(a.without_timing(), b.without_timing());
    assert_eq!(a.without_timing().to_json(), b.without_timing().to_json());
    let c = verify_harmonic(&m, &SuiteConfig::new(30, 12)).unwrap();
    assert_ne!(a.max_residuals, c.max_residuals);
}

#[test]
fn parallel_trials_merge_in_order() {
    let fam = dual_quat_family(2, 2).unwrap();
    let cfg = SuiteConfig::new(25, 4);
    let a = verify_family(&fam, &cfg).unwrap();
    let b = verify_family(&fam, &cfg.with_jobs(8)).unwrap();
    assert_eq!(a.without_timing(), b.without_timing());

    let space = SpaceSpec::new(SpaceId::SlcSu, 3).unwrap();
    let a = verify_basis_independence(&space, &SuiteConfig::new(10, 8)).unwrap();
    let b = verify_basis_independence(&space, &SuiteConfig::new(10, 8).with_jobs(2)).unwrap();
    assert_eq!(a.without_timing(), b.without_timing());

    let a = verify_lemma_long(2, &SuiteConfig::new(10, 1)).unwrap();
    let b = verify_lemma_long(2, &SuiteConfig::new(10, 1).with_jobs(4)).unwrap();
    assert_eq!(a.without_timing(), b.without_timing());
}
