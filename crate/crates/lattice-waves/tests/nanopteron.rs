use lattice_waves::beale::{
    auto_modes, critical_ripple_frequency, far_field_window, nanopteron_solve, ripple_measurement,
};
use lattice_waves::params::DimerParams;
use lattice_waves::profiles::Parity;

#[test]
fn mass_dimer_nanopteron_has_resolved_ripple() {
    let p = DimerParams::mass(2.0).unwrap();
    let nu = 0.3;
    let l = 110.0;
    let n = auto_modes(nu, l, &p).unwrap();
    let t = std::time::Instant::now();
    let prof = nanopteron_solve(nu, l, n, &p).unwrap();
    eprintln!("modes {n} time {:?} residual {:e}", t.elapsed(), prof.residual);
    assert!(prof.residual < 1e-9);
    assert!(prof.refined_residual(2).unwrap() < 1e-8);
    assert!(prof.symmetry_defect() < 1e-12);
    let m = ripple_measurement(&prof, far_field_window(&prof)).unwrap();
    let k = nu * critical_ripple_frequency(nu, &p).unwrap();
    eprintln!("amp {:e} k {} expected {}", m.amplitude, m.wavenumber, k);
    assert!((m.wavenumber - k).abs() < 2.0 * std::f64::consts::PI / l);
    assert!(m.amplitude > 0.0 && m.amplitude < 1e-2 * prof.eval(0.0, Parity::Odd).abs());
}
