use hanzawa_flow::config::RunConfig;
use hanzawa_flow::diagnostics::record;
use hanzawa_flow::geometry::ReferenceGeometry;
use hanzawa_flow::persist::{read_diagnostics, read_snapshot, write_diagnostics, write_snapshot};

const CONFIG: &str = r#"
[geometry]
r_omega = 2.0
r_sigma = 1.0
n_theta = 16
n_r_in = 10
n_r_out = 12
epsilon = 0.9

[material]
rho_minus = 1.0
rho_plus = 1.0
eta_minus = 1.0
eta_plus = 0.5
d = 0.2
d_gamma = 0.1
s_ref = 0.5
eos = { kind = "szyszkowski", sigma0 = 1.0, e = 0.3, s_inf = 2.0 }
isotherm = { kind = "langmuir", s_inf = 2.0, k = 1.5 }

[initial]
preset = "spike"
c_bulk = 0.4
magnitude = 0.2
width = 0.5

[stepping]
dt = 0.05
t_end = 1.0
"#;

fn state() -> (hanzawa_flow::discrete::Scheme<f64>, hanzawa_flow::state::FlowState<f64>) {
    let cfg = RunConfig::parse(CONFIG).unwrap();
    let s = cfg.scheme().unwrap();
    let mut z = cfg.preset_state(&s).unwrap();
    z.u.outer[1].iter_mut().enumerate().for_each(|(i, v)| *v = (i as f64).sin() / 3.0);
    z.t = 0.1 + 0.2;
    (s, z)
}

#[test]
fn snapshot_round_trip_is_bitwise() {
    let (s, z) = state();
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("z.snap");
    write_snapshot(&p, &s.grid, &z).unwrap();
    let back = read_snapshot(&p).unwrap().into_state(&s.grid).unwrap();
    assert_eq!(back, z);
}

#[test]
fn truncated_snapshot_fails_its_checksum() {
    let (s, z) = state();
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("z.snap");
    write_snapshot(&p, &s.grid, &z).unwrap();
    let bytes = std::fs::read(&p).unwrap();
    std::fs::write(&p, &bytes[..bytes.len() - 13]).unwrap();
    let e = read_snapshot(&p).unwrap_err();
    assert!(e.to_string().contains("checksum"), "{e}");
}

#[test]
fn other_resolution_needs_explicit_resampling() {
    let (s, z) = state();
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("z.snap");
    write_snapshot(&p, &s.grid, &z).unwrap();
    let fine = ReferenceGeometry::new(2.0, 1.0, 32, 10, 12, 0.9).unwrap().grid(2);
    let snap = read_snapshot(&p).unwrap();
    assert!(snap.into_state(&fine).is_err());
    let up = snap.resample(&fine).unwrap();
    // spectral upsampling keeps the coarse nodes
    for a in 0..16 {
        assert!((up.c.outer[0][5 * 32 + 2 * a] - z.c.outer[0][5 * 16 + a]).abs() < 1e-12);
    }
    let other = ReferenceGeometry::new(2.0, 1.0, 16, 12, 12, 0.9).unwrap().grid(2);
    assert!(snap.resample(&other).is_err());
}

#[test]
fn diagnostics_table_round_trips() {
    let (s, z) = state();
    let r0 = record(&s, &z, None).unwrap();
    let mut z1 = z.clone();
    z1.t += 0.05;
    let r1 = record(&s, &z1, Some(&r0)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("d.csv");
    write_diagnostics(&p, &[r0, r1]).unwrap();
    assert_eq!(read_diagnostics(&p).unwrap(), vec![r0, r1]);
    let head = std::fs::read_to_string(&p).unwrap();
    assert!(head.starts_with("t,kinetic,free_bulk,free_surface,Phi,dissipation,energy_residual,"));
}
