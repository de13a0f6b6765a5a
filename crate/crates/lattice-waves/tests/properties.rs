//! Property-based checks of structural identities over random parameters
//! and random lattice data.

use lattice_waves::beale::{diagonalize_symbol, symbol_ltilde};
use lattice_waves::dispersion::{det_m, lambda_dispersion, lambda_pm, sound_speed};
use lattice_waves::simulate::{fourier_shift, integrate, lattice_rhs, shift_dimer_field, LatticeState, SimCoordinate};
use lattice_waves::DimerParams;
use nalgebra::Matrix2;
use num_complex::Complex64;
use proptest::prelude::*;

fn params() -> impl Strategy<Value = DimerParams> {
    (0.2f64..5.0, -2.0f64..2.0, 0.2f64..5.0).prop_map(|(k, b, w)| DimerParams::new(k, b, w).unwrap())
}

/// Parameters away from the monatomic chain, where the two branches touch.
fn diatomic_params() -> impl Strategy<Value = DimerParams> {
    params().prop_filter("branches must stay separated", |p| (p.kappa - 1.0).abs() + (p.w - 1.0).abs() > 0.05)
}

fn relative_state(p: DimerParams, r: Vec<f64>, v: Vec<f64>) -> LatticeState {
    let mut s = LatticeState::zeros(r.len(), SimCoordinate::RelDisp, p).unwrap();
    s.values = r;
    s.velocities = v;
    s
}

fn momentum(s: &LatticeState) -> f64 {
    let v = s.particle_velocity();
    (0..s.len())
        .map(|i| if s.index(i).rem_euclid(2) == 1 { v[i] } else { v[i] / s.params.w })
        .sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dispersion_factorizes_into_branches(p in params(), k in -3.0f64..3.0, c in 0.1f64..3.0) {
        let (lm, lp) = lambda_pm(k, &p);
        prop_assert!(lm >= 0.0 && lp >= lm);
        let c2k2 = c * c * k * k;
        let lhs = lambda_dispersion(k, &p, c);
        let rhs = (c2k2 - lm) * (c2k2 - lp);
        prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + c2k2 * c2k2 + lp * lp));
    }

    #[test]
    fn imaginary_axis_determinant_is_dispersion(p in params(), k in -3.0f64..3.0, c in 0.1f64..3.0) {
        let d = det_m(Complex64::new(0.0, k), &p, c);
        let l = lambda_dispersion(k, &p, c);
        prop_assert!(d.im.abs() < 1e-12 * (1.0 + l.abs()));
        prop_assert!((d.re - l).abs() < 1e-10 * (1.0 + l.abs()));
    }

    #[test]
    fn shifted_symbol_determinant_is_dispersion(p in params(), k in -3.0f64..3.0, c in 0.1f64..3.0) {
        let m = symbol_ltilde(k, &p) + Matrix2::identity() * Complex64::new(c * c * k * k, 0.0);
        let d = m.determinant();
        let l = lambda_dispersion(k, &p, c);
        prop_assert!((d - Complex64::new(l, 0.0)).norm() < 1e-10 * (1.0 + l.abs() + (c * k).powi(4)));
    }

    #[test]
    fn symbol_eigenpairs(p in diatomic_params(), k in -3.0f64..3.0) {
        let d = diagonalize_symbol(k, &p).unwrap();
        let l = symbol_ltilde(k, &p);
        for (col, lam) in [(0, d.lambda_minus), (1, d.lambda_plus)] {
            let v = d.eigvecs.column(col).into_owned();
            let res = &l * &v + v * Complex64::new(lam, 0.0);
            prop_assert!((v.norm() - 1.0).abs() < 1e-12);
            prop_assert!(res.norm() < 1e-10 * (1.0 + d.lambda_plus), "residual {}", res.norm());
        }
    }

    #[test]
    fn acoustic_branch_starts_at_sound_speed(p in params(), k in 1e-4f64..1e-2) {
        let (lm, _) = lambda_pm(k, &p);
        let cs2 = sound_speed(&p).powi(2);
        prop_assert!((lm / (k * k) - cs2).abs() < 1e-3 * cs2 * (1.0 + 1.0 / (p.kappa * p.w)));
    }

    #[test]
    fn fourier_shift_round_trip(a in prop::collection::vec(-1.0f64..1.0, 8..64), s in -5.0f64..5.0) {
        let back = fourier_shift(&fourier_shift(&a, s), -s);
        // The Nyquist mode is damped by cos(pi s) in each direction, so the
        // round trip is exact only for band-limited data; compare without it.
        let strip = |x: &[f64]| {
            if x.len() % 2 == 1 {
                return x.to_vec();
            }
            let alt: f64 = x.iter().enumerate().map(|(i, v)| if i % 2 == 0 { *v } else { -*v }).sum::<f64>() / x.len() as f64;
            x.iter().enumerate().map(|(i, v)| v - if i % 2 == 0 { alt } else { -alt }).collect::<Vec<_>>()
        };
        let (sa, sb) = (strip(&a), strip(&back));
        for (x, y) in sa.iter().zip(&sb) {
            prop_assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn integer_shift_is_a_roll(a in prop::collection::vec(-1.0f64..1.0, 8..64), s in -6i64..6) {
        let m = a.len() as i64;
        let b = fourier_shift(&a, s as f64);
        for k in 0..m {
            let expected = a[(k - s).rem_euclid(m) as usize];
            prop_assert!((b[k as usize] - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn even_dimer_shift_preserves_parity_classes(half in prop::collection::vec(-1.0f64..1.0, 8..32), s in -4i64..4) {
        // Shifting by an even number of sites moves each class rigidly.
        let r: Vec<f64> = half.iter().flat_map(|&x| [x, 2.0 * x]).collect();
        let n = r.len() as i64;
        let out = shift_dimer_field(&r, 2.0 * s as f64);
        for k in 0..n {
            prop_assert!((out[k as usize] - r[(k - 2 * s).rem_euclid(n) as usize]).abs() < 1e-12);
        }
    }

    #[test]
    fn coordinate_forms_agree(
        p in params(),
        data in prop::collection::vec((-0.2f64..0.2, -0.2f64..0.2), 4..20),
    ) {
        let n = 2 * data.len();
        let r: Vec<f64> = data.iter().flat_map(|&(a, b)| [a, b]).collect();
        let v: Vec<f64> = data.iter().flat_map(|&(a, b)| [b, -a]).collect();
        let rel = relative_state(p, r[..n].to_vec(), v[..n].to_vec());
        let pos = rel.to_position(0.3);
        prop_assert_eq!(pos.relative_displacement().len(), n);
        for (x, y) in pos.relative_displacement().iter().zip(&rel.values) {
            prop_assert!((x - y).abs() < 1e-12);
        }
        prop_assert!((pos.energy() - rel.energy()).abs() < 1e-12 * (1.0 + rel.energy().abs()));
        let a_pos = lattice_rhs(&pos);
        let a_rel = lattice_rhs(&rel);
        for i in 0..n {
            let diff = a_pos[(i + 1) % n] - a_pos[i];
            prop_assert!((diff - a_rel[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn verlet_conserves_energy_and_momentum(
        p in params(),
        data in prop::collection::vec((-0.05f64..0.05, -0.05f64..0.05), 4..16),
    ) {
        let r: Vec<f64> = data.iter().flat_map(|&(a, b)| [a, b]).collect();
        let v: Vec<f64> = data.iter().flat_map(|&(a, b)| [b, a]).collect();
        let pos = relative_state(p, r, v).to_position(0.0);
        let p0 = momentum(&pos);
        let trace = integrate(&pos, 0.01, 5.0, 100).unwrap();
        // Verlet's energy error is O(dt^2) relative to the oscillation energy.
        prop_assert!(trace.max_energy_drift < 1e-3, "drift {}", trace.max_energy_drift);
        for s in &trace.snapshots {
            prop_assert!((momentum(s) - p0).abs() < 1e-12);
        }
    }
}
