use cpf_core::acceptance::{self, CriterionResult};

fn report(r: CriterionResult) {
    println!("{r}");
    assert!(r.passed, "criterion {} ({}) failed", r.id, r.name);
}

#[test]
fn c01_markovian_nullity() {
    report(acceptance::markovian_nullity());
}

#[test]
fn c02_gaussian_plateau() {
    report(acceptance::gaussian_plateau());
}

#[test]
fn c03_spin_bath_gaussian_fit() {
    report(acceptance::spin_bath_gaussian_fit());
}

#[test]
fn c04_oracle_equivalence() {
    report(acceptance::oracle_equivalence());
}

#[test]
fn c05_lorentz_non_markovianity() {
    report(acceptance::lorentz_non_markovianity());
}

#[test]
fn c06_random_frequency_equivalence() {
    report(acceptance::random_frequency_equivalence());
}

#[test]
fn c07_ou_limits() {
    report(acceptance::ou_limits());
}

#[test]
fn c08_rate_formulas() {
    report(acceptance::rate_formulas());
}

#[test]
fn c09_estimator_cross_validation() {
    report(acceptance::estimator_cross_validation());
}

#[test]
fn c10_property_suites() {
    report(acceptance::property_suites());
}
