//! Solve a profile, print the blow-up radius, and run the verification suite.
//!
//! ```text
//! cargo run --example solve_and_verify
//! ```

use calabi::{solve_radial, verify_profile, PotentialParams, RadialPotential, VerifyConfig};

fn main() {
    let params = PotentialParams::new(2, 0.0);
    let profile = solve_radial(&params).expect("solve");
    println!(
        "n = {}, y0 = {}: a = {:.12} +/- {:.2e}  (grid: {} nodes up to r = {:.6})",
        params.n,
        params.y0,
        profile.a_est(),
        profile.a_err(),
        profile.grid().len(),
        profile.r_max(),
    );

    let report = verify_profile(&profile, &VerifyConfig::default()).expect("verify");
    for check in &report.checks {
        println!(
            "  {} {:24} value = {:-12.4e}  bound = {:-9.1e}",
            if check.pass { "PASS" } else { "FAIL" },
            check.name,
            check.value,
            check.tolerance,
        );
    }
    println!("overall: {}", if report.pass { "PASS" } else { "FAIL" });
}
