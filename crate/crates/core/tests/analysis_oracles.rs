use nalgebra::{DMatrix, DVector};

use xxzsim::analysis::{entropy_rate, optimal_squeezing, scaling_fit, DEFAULT_ENTROPY_WINDOW};
use xxzsim::exact::{build_initial_state, entanglement_entropy, evolve_state, oat_reference, oat_tstar, KrylovOptions, SpinHamiltonian};
use xxzsim::model::hamiltonian_terms;
use xxzsim::observables::{to_db, transverse_frame};
use xxzsim::{build_lattice, coupling_matrix, squeezing_from_moments, time_scale, LatticeSpec, ModelParams};

/// Least squares via SVD of the design matrix, independent of the
/// closed-form sums used by the library.
fn lstsq(design: DMatrix<f64>, y: DVector<f64>) -> DVector<f64> {
    design.svd(true, true).solve(&y, 1e-14).unwrap()
}

#[test]
fn squeezing_matches_axis_sampling_for_oat() {
    let n = 8;
    let m = oat_reference(n, 1.0, &[0.0, 0.1]).unwrap()[1].moments;
    let res = squeezing_from_moments(&m, n).unwrap();
    let len2: f64 = m.first.iter().map(|v| v * v).sum();
    let unit = m.first.map(|v| v / len2.sqrt());
    let f = transverse_frame(unit);
    let c = m.covariance();
    let best = (0..10_000)
        .map(|k| {
            let th = std::f64::consts::PI * (k as f64 + 0.5) / 10_000.0;
            let u: [f64; 3] = std::array::from_fn(|i| th.cos() * f[0][i] + th.sin() * f[1][i]);
            let var: f64 = (0..3).map(|i| (0..3).map(|j| u[i] * c[i][j] * u[j]).sum::<f64>()).sum();
            n as f64 * var / len2
        })
        .fold(f64::INFINITY, f64::min);
    assert!((res.xi2 - best).abs() < 1e-6, "{} {}", res.xi2, best);
    assert!(res.xi2 < 1.0 && res.xi2_db < 0.0);
    let dot: f64 = (0..3).map(|i| res.axis[i] * m.first[i]).sum();
    assert!(dot.abs() < 1e-12);
}

#[test]
fn optimal_squeezing_agrees_with_golden_section() {
    let (n, chi) = (36, 1.0);
    let opt = oat_tstar(n, chi).unwrap();
    let times: Vec<f64> = (0..=200).map(|k| 0.01 * opt.t_star * k as f64).collect();
    let series: Vec<(f64, f64)> = oat_reference(n, chi, &times)
        .unwrap()
        .iter()
        .map(|p| (p.t, p.squeezing.unwrap().xi2))
        .collect();
    let grid = optimal_squeezing(&series).unwrap();
    assert!(grid.reached);
    assert!((grid.t_opt - opt.t_star).abs() < 1e-4 * opt.t_star);
    assert!((grid.xi2_min - opt.xi2_min).abs() < 1e-4 * opt.xi2_min);
}

#[test]
fn oat_scaling_exponent() {
    let pts: Vec<(f64, f64)> = [16usize, 36, 64]
        .iter()
        .map(|&n| (n as f64, oat_tstar(n, 1.0).unwrap().xi2_min))
        .collect();
    let fit = scaling_fit(&pts).unwrap();
    let design = DMatrix::from_fn(3, 2, |r, c| if c == 0 { 1.0 } else { pts[r].0.ln() });
    let y = DVector::from_iterator(3, pts.iter().map(|p| p.1.ln()));
    let coef = lstsq(design, y);
    assert!(fit.nu < 0.0);
    assert!((fit.nu - coef[1]).abs() < 0.05);
    assert!((fit.nu - coef[1]).abs() < 1e-10);
    assert!(fit.nu.abs() > 0.4 && fit.nu.abs() < 0.8, "{}", fit.nu);
    assert!(fit.stderr.is_some());
}

#[test]
fn two_point_fit_has_no_stderr() {
    let fit = scaling_fit(&[(4.0, 0.5), (16.0, 0.25)]).unwrap();
    assert!((fit.nu + 0.5).abs() < 1e-15);
    assert!(fit.stderr.is_none());
    let exact: Vec<(f64, f64)> = [4.0f64, 9.0, 25.0].iter().map(|&n| (n, 3.0 * n.powf(-0.5))).collect();
    let fit = scaling_fit(&exact).unwrap();
    assert!((fit.nu + 0.5).abs() < 1e-12);
    assert!(fit.stderr.unwrap() < 1e-12);
    assert!(fit.max_residual <= 1e-12);
}

#[test]
fn entropy_rate_on_exact_series() {
    let (alpha, delta) = (3.0, -1.8);
    let cm = coupling_matrix(&build_lattice(LatticeSpec::new(2, 2)).unwrap(), 1.0, alpha).unwrap();
    let p = ModelParams::new(1.0, delta, alpha).unwrap();
    let h = SpinHamiltonian::from_terms(&hamiltonian_terms(&cm, &p), 4).unwrap();
    let scale = time_scale(cm.j_bar(), delta);
    let taus: Vec<f64> = (0..=20).map(|k| 0.025 * k as f64).collect();
    let times: Vec<f64> = taus.iter().map(|tau| tau / scale).collect();
    let path = evolve_state(&build_initial_state(4).unwrap(), &h, &times, &KrylovOptions::default()).unwrap();
    let series: Vec<(f64, f64)> = taus.iter().zip(&path).map(|(tau, s)| (*tau, entanglement_entropy(s))).collect();
    let r = entropy_rate(&series, DEFAULT_ENTROPY_WINDOW).unwrap();
    let inside: Vec<&(f64, f64)> = series.iter().filter(|p| p.0 <= 0.3 + 1e-12).collect();
    let design = DMatrix::from_fn(inside.len(), 1, |i, _| inside[i].0);
    let y = DVector::from_iterator(inside.len(), inside.iter().map(|p| p.1));
    let slope = lstsq(design, y)[0];
    assert!((r.rate - slope).abs() <= 0.05 * slope.abs());
    assert!(r.rate > 0.0);
    assert_eq!(r.n_points, 13);
}

#[test]
fn entropy_rate_trivial_series() {
    let linear: Vec<(f64, f64)> = (0..10).map(|k| (0.05 * k as f64, 0.7 * 0.05 * k as f64)).collect();
    assert!((entropy_rate(&linear, 0.3).unwrap().rate - 0.7).abs() < 1e-12);
    let flat: Vec<(f64, f64)> = (0..10).map(|k| (0.05 * k as f64, 0.0)).collect();
    assert_eq!(entropy_rate(&flat, 0.3).unwrap().rate, 0.0);
    assert!(entropy_rate(&linear[..2], 0.3).is_err());
}

#[test]
fn db_sign_tracks_squeezing() {
    for k in 1..400 {
        let x = 0.005 * k as f64;
        assert_eq!(to_db(x) < 0.0, x < 1.0);
    }
}
