//! Geometry, transformation, operator and constitutive checks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{models, observed_order, Check};
use crate::field::{BulkField, Location};
use crate::geometry::{laplace_beltrami, projector_divergence, surface_gradient, ReferenceGeometry, SurfaceField};
use crate::hanzawa::{Hanzawa, HeightFunction};
use crate::transformed_ops::{g_sigma, kappa_gamma, kappa_prime_zero, polar_curvature, OperatorContext};
use crate::spectral::Fourier;

type P = [f64; 2];

fn geom(nt: usize, nr: usize) -> ReferenceGeometry<f64> {
    ReferenceGeometry::new(2.0, 1.0, nt, nr, nr, 0.9).expect("valid geometry")
}

/// A smooth random height with sup norm `frac` of the admissible bound.
fn random_height(rng: &mut ChaCha8Rng, theta: &[f64], bound: f64, frac: f64) -> HeightFunction<f64> {
    let modes: Vec<(f64, f64, f64)> =
        (0..6).map(|k| (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), 1.0 / (1.0 + k as f64).powi(2))).collect();
    let raw: Vec<f64> = theta
        .iter()
        .map(|&t| {
            modes.iter().enumerate().map(|(k, &(a, b, w))| w * (a * (k as f64 * t).cos() + b * (k as f64 * t).sin())).sum()
        })
        .collect();
    let sup = raw.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    HeightFunction::new(SurfaceField::new(raw.iter().map(|v| v * frac * bound / sup).collect()))
}

fn wavy(theta: &[f64], a: f64) -> HeightFunction<f64> {
    HeightFunction::from_fn(theta, |t| a * ((2.0 * t).cos() + 0.4 * (3.0 * t + 0.3).sin()))
}

pub fn geometry_suite() -> Vec<Check> {
    let g = geom(64, 8);
    let f = g.fourier();
    let th = f.nodes();
    let mut worst = 0.0f64;
    for i in 0..41 {
        let r = 0.1 + 1.8 * i as f64 / 40.0;
        for &t in th.iter().step_by(3) {
            let x = [r * t.cos(), r * t.sin()];
            let p = g.metric_projection(x).expect("off the pole");
            let d = g.signed_distance(x);
            let n = g.normal(t);
            worst = worst.max((p[0] + d * n[0] - x[0]).hypot(p[1] + d * n[1] - x[1]));
        }
    }
    let mut lb = 0.0f64;
    for k in 0..8 {
        let v = SurfaceField::from_fn(&th, |t| (k as f64 * t).cos());
        let l = laplace_beltrami(&g, &f, &v);
        for (a, b) in l.values().iter().zip(v.values()) {
            lb = lb.max((a + (k * k) as f64 * b).abs());
        }
    }
    let sigma = SurfaceField::constant(64, 0.7);
    let (normal, tangential) = projector_divergence(&g, &f, &sigma);
    let pd = normal.values().iter().map(|v| (v + 0.7).abs()).fold(tangential.sup_norm(), f64::max);
    let sg = surface_gradient(&g, &f, &SurfaceField::from_fn(&th, |t| t.sin()));
    let sgerr = sg.values().iter().zip(&th).map(|(v, t)| (v - t.cos()).abs()).fold(0.0, f64::max);
    vec![
        Check::below("geometry: x = P(x) + d(x) nu(P(x)) in the tube", worst, 1e-12),
        Check::below("geometry: Laplace-Beltrami on cos(k theta), k < 8", lb, 1e-10),
        Check::below("geometry: div(sigma P) = sigma kappa for constant sigma", pd, 1e-12),
        Check::below("geometry: surface gradient of sin(theta)", sgerr, 1e-12),
    ]
}

pub fn hanzawa_suite() -> Vec<Check> {
    let g = geom(64, 8);
    let hz = Hanzawa::new(g.clone());
    let th = g.fourier().nodes();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut round_trip = 0.0f64;
    let mut all_valid = true;
    let mut outside = 0.0f64;
    let mut fd = [0.0f64; 2];
    for _ in 0..20 {
        let gamma = random_height(&mut rng, &th, hz.height_bound(), 0.9);
        all_valid &= hz.check_diffeo(&gamma).valid;
        for _ in 0..500 {
            let r = 1.9 * rng.random::<f64>().sqrt();
            let t = rng.random_range(0.0..std::f64::consts::TAU);
            let x = [r * t.cos(), r * t.sin()];
            let y = hz.forward_map(x, &gamma).expect("valid height");
            let back = hz.inverse_map(y, &gamma).expect("valid height");
            round_trip = round_trip.max((back[0] - x[0]).hypot(back[1] - x[1]));
            if (r - 1.0).abs() > 2.0 / 3.0 * 0.9 {
                outside = outside.max((y[0] - x[0]).hypot(y[1] - x[1]));
            }
        }
        // gradient of the map against central differences at two step sizes
        for _ in 0..20 {
            let r = 1.0 + rng.random_range(-0.5..0.5);
            let t = rng.random_range(0.0..std::f64::consts::TAU);
            let x = [r * t.cos(), r * t.sin()];
            let exact = hz.grad_theta(x, &gamma).expect("valid height");
            for (slot, h) in fd.iter_mut().zip([2e-3, 1e-3]) {
                for i in 0..2 {
                    let mut xp = x;
                    let mut xm = x;
                    xp[i] += h;
                    xm[i] -= h;
                    let yp = hz.forward_map(xp, &gamma).expect("valid height");
                    let ym = hz.forward_map(xm, &gamma).expect("valid height");
                    for j in 0..2 {
                        *slot = slot.max(((yp[j] - ym[j]) / (2.0 * h) - exact[i][j]).abs());
                    }
                }
            }
        }
    }
    vec![
        Check::below("hanzawa: inverse(forward(x)) on 1e4 points, 20 heights", round_trip, 1e-10),
        Check::flag("hanzawa: diffeomorphism check on random heights", 0.0, all_valid, "all valid"),
        Check::below("hanzawa: identity outside the tube", outside, 1e-15),
        Check::within("hanzawa: grad Theta vs central differences, order", observed_order(fd[0], fd[1], 2.0), 2.0, 0.2),
    ]
}

fn phys_scalar(y: P) -> (f64, P, f64) {
    // φ = sin(y1) cos(0.7 y2) + |y|²/2
    let (s1, c1) = y[0].sin_cos();
    let (s2, c2) = (0.7 * y[1]).sin_cos();
    let v = s1 * c2 + 0.5 * (y[0] * y[0] + y[1] * y[1]);
    let grad = [c1 * c2 + y[0], -0.7 * s1 * s2 + y[1]];
    let lap = -(1.0 + 0.49) * s1 * c2 + 2.0;
    (v, grad, lap)
}

fn phys_vector(y: P) -> (P, f64) {
    // u = (cos(y2) + y1², sin(y1) y2), div u = 2 y1 + sin(y1)
    ([y[1].cos() + y[0] * y[0], y[0].sin() * y[1]], 2.0 * y[0] + y[0].sin())
}

fn polar(v: P, t: f64) -> P {
    let (s, c) = t.sin_cos();
    [c * v[0] + s * v[1], -s * v[0] + c * v[1]]
}

/// Relative sup errors of 𝓖, 𝓓 and 𝓛 against physical-side oracles.
pub fn bulk_chain_rule(nt: usize, nr: usize) -> [f64; 3] {
    let g = geom(nt, nr);
    let grid = g.grid(2);
    let hz = Hanzawa::new(g.clone());
    let gamma = wavy(&grid.theta, 0.8 * hz.height_bound() / 1.4);
    let ctx = OperatorContext::geometric(&grid, &gamma).expect("valid height");
    let map = |r: f64, t: f64| hz.forward_map([r * t.cos(), r * t.sin()], &gamma).expect("valid height");
    let phi = BulkField::from_fn(&grid, 1, Location::Nodes, |_, r, t| phys_scalar(map(r, t)).0);
    let u = BulkField::from_fn(&grid, 2, Location::Nodes, |c, r, t| polar(phys_vector(map(r, t)).0, t)[c]);
    let gradient = ctx.transformed_gradient(&phi);
    let div = ctx.transformed_divergence(&u);
    let lap = ctx.transformed_laplacian(&phi);
    let mut err = [0.0f64; 3];
    let mut scale = [0.0f64; 3];
    let nth = grid.n_theta();
    for (blk, b) in [&grid.inner, &grid.outer].into_iter().enumerate() {
        for (i, &r) in b.r.iter().enumerate() {
            for (j, &t) in grid.theta.iter().enumerate() {
                let q = i * nth + j;
                let y = map(r, t);
                let (_, gr, lp) = phys_scalar(y);
                let gp = polar(gr, t);
                let (_, dv) = phys_vector(y);
                let pick = |f: &BulkField<f64>, c: usize| if blk == 0 { f.inner[c][q] } else { f.outer[c][q] };
                for c in 0..2 {
                    err[0] = err[0].max((pick(&gradient, c) - gp[c]).abs());
                    scale[0] = scale[0].max(gp[c].abs());
                }
                err[1] = err[1].max((pick(&div, 0) - dv).abs());
                scale[1] = scale[1].max(dv.abs());
                err[2] = err[2].max((pick(&lap, 0) - lp).abs());
                scale[2] = scale[2].max(lp.abs());
            }
        }
    }
    [err[0] / scale[0], err[1] / scale[1], err[2] / scale[2]]
}

/// Relative sup errors of 𝒢_Γ and 𝓛_Γ against arc-length derivatives.
pub fn surface_chain_rule(nt: usize) -> [f64; 2] {
    let g = geom(nt, 8);
    let grid = g.grid(2);
    let f: &Fourier<f64> = &grid.fourier;
    let hz = Hanzawa::new(g.clone());
    let gamma = wavy(&grid.theta, 0.8 * hz.height_bound() / 1.4);
    let ctx = OperatorContext::geometric(&grid, &gamma).expect("valid height");
    let phi = SurfaceField::from_fn(&grid.theta, |t| (t.cos()).exp() + (3.0 * t).sin());
    let ft = phi.derivative(f, 1);
    let ftt = phi.derivative(f, 2);
    let gs = g_sigma(1.0, f, &gamma).expect("valid height");
    let [_, a, l] = ctx.surface_material_ops(&vec![0.0; nt], &gamma).expect("fresh context");
    let ell = &ctx.iface.ell;
    let ell_t = f.derivative(ell, 1);
    let rho = &ctx.iface.rho;
    let gt = &ctx.iface.gamma_t;
    let (mut eg, mut sg, mut el, mut sl) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for j in 0..nt {
        // physical gradient: τ ∂_θφ/ℓ with τ = (γ_θ, ρ)/ℓ in the polar frame
        let exact = [gt[j] * ft[j] / (ell[j] * ell[j]), rho[j] * ft[j] / (ell[j] * ell[j])];
        let got = [-gs[j][0] * ft[j], (1.0 - gs[j][1]) * ft[j]];
        for c in 0..2 {
            eg = eg.max((got[c] - exact[c]).abs());
            sg = sg.max(exact[c].abs());
        }
        let lb = ftt[j] / (ell[j] * ell[j]) - ell_t[j] * ft[j] / ell[j].powi(3);
        let op = ftt[j] - a.values()[j] * ft[j] - l.values()[j] * ftt[j];
        el = el.max((op - lb).abs());
        sl = sl.max(lb.abs());
    }
    [eg / sg, el / sl]
}

pub fn ops_suite() -> Vec<Check> {
    let mut out = Vec::new();
    let fine = bulk_chain_rule(256, 128);
    for (name, e) in ["G", "D", "L"].iter().zip(fine) {
        out.push(Check::below(format!("ops: bulk chain rule {name}, N_theta=256 N_r=128 (rel)"), e, 1e-6));
    }
    // the cutoff's smoothing layer is about 0.02 wide, so the asymptotic
    // regime starts near N_r = 256
    let coarse = bulk_chain_rule(64, 256);
    let mid = bulk_chain_rule(64, 512);
    for (k, name) in ["G", "D", "L"].iter().enumerate() {
        out.push(Check::at_least(
            format!("ops: bulk chain rule {name}, radial order 256->512"),
            observed_order(coarse[k], mid[k], 2.0),
            1.9,
        ));
    }
    let s = surface_chain_rule(256);
    out.push(Check::below("ops: surface gradient chain rule, N_theta=256 (rel)", s[0], 1e-6));
    out.push(Check::below("ops: surface Laplacian chain rule, N_theta=256 (rel)", s[1], 1e-6));

    let grid = geom(256, 8).grid(2);
    let f = &grid.fourier;
    let h = wavy(&grid.theta, 0.1);
    let k = kappa_gamma(1.0, f, &h).expect("valid height");
    let d1 = h.gamma.derivative(f, 1);
    let d2 = h.gamma.derivative(f, 2);
    let kerr = (0..256)
        .map(|j| {
            let o = polar_curvature(1.0 + h.values()[j], d1[j], d2[j]);
            ((k.values()[j] - o) / o).abs()
        })
        .fold(0.0, f64::max);
    out.push(Check::below("ops: kappa vs polar curvature (rel)", kerr, 1e-8));

    // κ'(0)h against (κ(εh) − κ(0))/ε: the error must shrink like ε
    let dir = SurfaceField::from_fn(&grid.theta, |t| (3.0 * t).cos() + 0.5 * (2.0 * t).sin());
    let lin = kappa_prime_zero(1.0, f, &dir);
    let k0 = kappa_gamma(1.0, f, &HeightFunction::zero(256)).expect("zero height");
    let fd_err = |eps: f64| {
        let ke = kappa_gamma(1.0, f, &HeightFunction::new(dir.map(|v| eps * v))).expect("small height");
        (0..256).map(|j| ((ke.values()[j] - k0.values()[j]) / eps - lin.values()[j]).abs()).fold(0.0, f64::max)
    };
    let (e1, e2) = (fd_err(1e-3), fd_err(5e-4));
    out.push(Check::within("ops: kappa'(0) difference quotient, order in eps", observed_order(e1, e2, 2.0), 1.0, 0.1));
    let cos = kappa_prime_zero(1.0, f, &SurfaceField::from_fn(&grid.theta, |t| t.cos()));
    out.push(Check::below("ops: kappa'(0)[cos theta]", cos.sup_norm(), 1e-10));
    out
}

pub fn constitutive_suite() -> Vec<Check> {
    let mut out = Vec::new();
    for (name, m) in models() {
        let s_max = m.eos.s_max().min(match m.isotherm {
            crate::constitutive::Isotherm::Langmuir { s_inf, .. } => s_inf,
            _ => f64::INFINITY,
        });
        let samples: Vec<f64> = (1..40).map(|i| s_max * i as f64 / 40.0).collect();
        let mu = samples
            .iter()
            .map(|&s| (m.chemical_potential(s).unwrap() - m.chemical_potential_quadrature(s).unwrap()).abs())
            .fold(0.0, f64::max);
        out.push(Check::below(format!("constitutive ({name}): mu closed form vs quadrature"), mu, 1e-10));
        let cs: Vec<f64> = (-6..=4).map(|e| 10f64.powf(e as f64 / 2.0)).filter(|&c| m.phi(c).is_ok()).collect();
        let phi = cs
            .iter()
            .map(|&c| {
                let a = m.phi(c).unwrap();
                (a - m.phi_quadrature(c).unwrap()).abs() / (1.0 + a.abs())
            })
            .fold(0.0, f64::max);
        out.push(Check::below(format!("constitutive ({name}): phi closed form vs quadrature"), phi, 1e-10));
        let convex = cs.iter().map(|&c| m.phi_d2(c).unwrap()).fold(f64::INFINITY, f64::min);
        out.push(Check::flag(format!("constitutive ({name}): min phi''"), convex, convex > 0.0, "> 0"));
        let fd = cs
            .iter()
            .map(|&c| {
                let h = 1e-4 * c;
                let q = (m.phi(c + h).unwrap() - 2.0 * m.phi(c).unwrap() + m.phi(c - h).unwrap()) / (h * h);
                let ex = m.phi_d2(c).unwrap();
                ((q - ex) / ex).abs()
            })
            .fold(0.0, f64::max);
        out.push(Check::below(format!("constitutive ({name}): phi'' vs second difference (rel)"), fd, 1e-5));
        let slope = samples.iter().map(|&s| m.eos.d1(s)).fold(f64::NEG_INFINITY, f64::max);
        let floor = samples.iter().map(|&s| m.sigma(s)).fold(f64::INFINITY, f64::min);
        out.push(Check::flag(
            format!("constitutive ({name}): max sigma' and min sigma on the admissible range"),
            slope,
            slope < 0.0 && floor > 0.0,
            "sigma' < 0 < sigma",
        ));
        let shifted = crate::constitutive::MaterialModel { s_ref: 0.8, ..m };
        let diffs: Vec<f64> = samples
            .iter()
            .map(|&s| m.chemical_potential(s).unwrap() - shifted.chemical_potential(s).unwrap())
            .collect();
        let spread = diffs.iter().map(|d| (d - diffs[0]).abs()).fold(0.0, f64::max);
        out.push(Check::below(format!("constitutive ({name}): reference shift is a constant"), spread, 1e-13));
    }
    out
}
