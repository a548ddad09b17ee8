//! Acceptance criteria. Each test prints one PASS/FAIL line and asserts the
//! verdict, so `cargo test --test acceptance -- --nocapture` doubles as the
//! report.

use pathfollow::verify::{self, CheckOutcome, VerifyOptions};

fn report(outcome: CheckOutcome) {
    println!("{outcome}");
    assert!(outcome.passed, "{outcome}");
}

#[test]
fn criterion_01_helix_v3() {
    report(verify::helix_v3());
}

#[test]
fn criterion_02_helix_v0() {
    report(verify::helix_v0());
}

#[test]
fn criterion_03_scurve() {
    report(verify::scurve());
}

#[test]
fn criterion_04_timevarying() {
    report(verify::timevarying());
}

#[test]
fn criterion_05_straightline_batch() {
    report(verify::straightline_batch());
}

#[test]
fn criterion_06_settling_envelope() {
    report(verify::settling_envelope(&VerifyOptions::default()));
}

#[test]
fn criterion_07_lyapunov_decrease() {
    report(verify::lyapunov_decrease());
}

#[test]
fn criterion_08_saturation_confinement() {
    report(verify::saturation_confinement(&VerifyOptions::default()));
}

#[test]
fn criterion_09_integrator_order() {
    report(verify::integrator_order());
}

#[test]
fn criterion_10_frame_round_trips() {
    report(verify::frame_round_trips(&VerifyOptions::default()));
}
