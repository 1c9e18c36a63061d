//! One line per acceptance criterion. Tolerances live in the verification
//! suites; a criterion passes when every one of its checks does.

use hanzawa_flow::verify::{
    constitutive_suite, dynamics_suite, hanzawa_suite, ops_suite, print_table, solver_suite, Check,
};

fn report(label: &str, checks: &[Check]) -> bool {
    let ok = checks.iter().all(|c| c.pass);
    let failed: Vec<&str> = checks.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect();
    if ok {
        println!("PASS  {label} ({} checks)", checks.len());
    } else {
        println!("FAIL  {label} ({} of {} checks failed: {})", failed.len(), checks.len(), failed.join("; "));
    }
    ok
}

#[test]
fn acceptance() {
    println!();
    let energy = dynamics_suite();
    let pick = |keys: &[&str]| -> Vec<Check> {
        energy.iter().filter(|c| keys.iter().any(|k| c.name.contains(k))).cloned().collect()
    };
    let criteria: Vec<(&str, Vec<Check>)> = vec![
        ("1 transformation: round trip and gradient of the map", hanzawa_suite()),
        ("2 operators: chain rule, curvature and its linearization", ops_suite()),
        ("3 constitutive: potentials, free energies and convexity", constitutive_suite()),
        ("4 linear solver: manufactured solutions and Laplace law", solver_suite()),
        ("5 energy: monotone decay and residual order", pick(&["Phi", "energy residual"])),
        ("6 conservation and relaxation to equilibrium", pick(&["drift", "equilibrium indicator", "reaches T"])),
        ("7 fixed point: contraction and invariance of equilibria", pick(&["contraction", "unchanged"])),
    ];
    let mut all = true;
    let mut table = String::new();
    for (label, checks) in &criteria {
        all &= report(label, checks);
        table.push_str(&print_table(checks));
    }
    println!("\n{table}");
    assert!(all, "acceptance criteria failed; see the lines above");
}
