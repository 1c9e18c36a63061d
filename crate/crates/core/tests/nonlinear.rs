use hanzawa_flow::discrete::Scheme;
use hanzawa_flow::field::{BulkField, Location};
use hanzawa_flow::geometry::{ReferenceGeometry, SurfaceField};
use hanzawa_flow::hanzawa::HeightFunction;
use hanzawa_flow::nonlinear::{check_compatibility, fixed_point_step, reconstruct_pressure, Controls};
use hanzawa_flow::state::FlowState;
use hanzawa_flow::verify::models;

fn scheme() -> Scheme<f64> {
    let g = ReferenceGeometry::new(2.0, 1.0, 32, 12, 14, 0.9).unwrap().grid(2);
    Scheme::new(g, models()[1].1, 0.05).unwrap()
}

#[test]
fn equilibrium_is_compatible() {
    let s = scheme();
    let z = FlowState::equilibrium(&s.grid, &s.model, 0.4).unwrap();
    let rep = check_compatibility(&s, &z).unwrap();
    assert!(rep.passed(), "{rep:?}");
}

#[test]
fn divergent_velocity_is_flagged() {
    let s = scheme();
    let mut z = FlowState::equilibrium(&s.grid, &s.model, 0.4).unwrap();
    // radial expansion vanishing on the wall, continuous across Σ
    z.u = BulkField::from_fn(&s.grid, 2, Location::Nodes, |c, r, _| if c == 0 { 0.01 * r * (4.0 - r * r) } else { 0.0 });
    let rep = check_compatibility(&s, &z).unwrap();
    assert!(!rep.passed());
    assert!(rep.divergence > 1e-3, "{rep:?}");
    assert!(rep.velocity_jump < 1e-12 && rep.wall_trace < 1e-12, "{rep:?}");
}

#[test]
fn marangoni_mismatch_matches_the_surface_tension_gradient() {
    let s = scheme();
    let m = s.model;
    let mut z = FlowState::equilibrium(&s.grid, &m, 0.4).unwrap();
    let nt = s.grid.n_theta();
    let c_of = |t: f64| 0.4 + 0.05 * t.cos();
    for (q, v) in z.c.outer[0].iter_mut().enumerate() {
        *v = c_of(s.grid.theta[q % nt]);
    }
    z.c_sigma = SurfaceField::from_fn(&s.grid.theta, |t| m.isotherm.alpha(c_of(t)));
    let rep = check_compatibility(&s, &z).unwrap();
    // at rest the tangential row is ∂_θσ(α(c))/R_σ
    let want = s
        .grid
        .theta
        .iter()
        .map(|&t| (m.eos.d1(m.isotherm.alpha(c_of(t))) * m.isotherm.d1(c_of(t)) * -0.05 * t.sin()).abs())
        .fold(0.0, f64::max);
    assert!(((rep.tangential_stress - want) / want).abs() < 1e-8, "{} vs {want}", rep.tangential_stress);
    assert!(rep.divergence < 1e-12);
}

#[test]
fn reconstructed_pressure_carries_the_laplace_jump() {
    let s = scheme();
    for shift in [0.0, 0.05] {
        let mut z = FlowState::equilibrium(&s.grid, &s.model, 0.4).unwrap();
        z.gamma = HeightFunction::new(SurfaceField::constant(32, shift));
        let origin = s.origin(&z).unwrap();
        let rec = reconstruct_pressure(&s, &z, &origin).unwrap();
        let sigma = s.model.sigma(s.model.isotherm.alpha(0.4));
        let p_out = rec.p.outer[0][0];
        for &p in &rec.p.inner[0] {
            assert!((p - p_out - sigma / (1.0 + shift)).abs() < 1e-9, "shift {shift}: {}", p - p_out);
        }
        // normal equations: the fit residual sits at the squared-conditioning roundoff level
        assert!(rec.residual < 1e-8, "residual {}", rec.residual);
    }
}

#[test]
fn nonuniform_concentration_relaxes_and_conserves_mass() {
    let s = scheme();
    let mut z = FlowState::equilibrium(&s.grid, &s.model, 0.4).unwrap();
    let th = s.grid.fourier.nodes();
    z.gamma = HeightFunction::from_fn(&th, |t| 0.03 * (3.0 * t).sin());
    let f0 = s.frame(&z.gamma).unwrap();
    let m0 = hanzawa_flow::discrete::surfactant_mass(&s, &z, &f0);
    let mut cur = z;
    for _ in 0..10 {
        let rep = fixed_point_step(&s, &cur, &Controls::default()).unwrap();
        assert!(rep.contraction().unwrap_or(0.0) < 1.0);
        cur = rep.state;
    }
    let f1 = s.frame(&cur.gamma).unwrap();
    let m1 = hanzawa_flow::discrete::surfactant_mass(&s, &cur, &f1);
    assert!(((m1 - m0) / m0).abs() < 1e-10);
    assert!(cur.gamma.gamma.oscillation() < 0.06);
}
