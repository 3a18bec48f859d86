mod common;

use std::f64::consts::PI;

use bragg::ladder::{self, Direction, EvolveOptions, LadderRange, Propagator};
use bragg::params::rubidium_preset;
use common::{max_diff, unit, Tridiagonal};

fn check_against_rk4(l0: u32, ratio: f64, n: u32, pulses: f64) {
    let p = rubidium_preset().with_regime_ratio(ratio).unwrap();
    let p = bragg::params::PhysicalParams { l0, ..p };
    let d = p.derive().unwrap();
    let range = LadderRange::default_for(l0);
    let h = ladder::build_hamiltonian(n, l0, range, &d, false).unwrap();
    let b = bragg::adiabatic::coupling_magnitude(n, l0, &d);
    let t = pulses * PI / b;
    let s0 = ladder::initial_state_in(l0, Direction::Plus, n, range).unwrap();
    let got = Propagator::new(&h).evolve(&s0, t, &EvolveOptions::default()).unwrap();

    let oracle = Tridiagonal::quadratic(
        d.recoil_frequency,
        l0 as i32,
        range.l_min(),
        range.len(),
        d.chi * f64::from(n),
    );
    let start = range.index_of(0).unwrap();
    let want = oracle.converged(&unit(range.len(), start), t, 1e-9);
    let err = max_diff(&got.amplitudes, &want);
    assert!(err < 1e-7, "l0={l0} ratio={ratio} n={n}: max amplitude error {err:e}");
}

#[test]
fn matches_rk4_first_order() {
    check_against_rk4(2, 0.02, 1, 1.0);
    check_against_rk4(2, 0.1, 1, 0.7);
}

#[test]
fn matches_rk4_two_photons() {
    check_against_rk4(2, 0.02, 2, 1.3);
}

#[test]
fn matches_rk4_second_order() {
    check_against_rk4(4, 0.05, 1, 0.5);
}

#[test]
fn rk4_step_halving_converges_at_fourth_order() {
    let oracle = Tridiagonal::quadratic(1.0, 2, -10, 10, 0.3);
    let c0 = unit(10, 5);
    let fine = oracle.rk4(&c0, 3.0, 1 << 14);
    let e1 = max_diff(&oracle.rk4(&c0, 3.0, 1000), &fine);
    let e2 = max_diff(&oracle.rk4(&c0, 3.0, 2000), &fine);
    let order = (e1 / e2).log2();
    assert!((3.7..4.3).contains(&order), "observed order {order}");
}

/// The − atom written in its own momentum frame, `m' = m + l0`, where
/// kinetic energy is `w·m'(m' − l0)` and the atom starts at `m' = 0`.
#[test]
fn mirrored_atom_matches_direct_physical_ladder() {
    for l0 in [2u32, 4] {
        let p = rubidium_preset().with_regime_ratio(0.05).unwrap();
        let p = bragg::params::PhysicalParams { l0, ..p };
        let d = p.derive().unwrap();
        let range = LadderRange::default_for(l0);
        let h = ladder::build_hamiltonian(1, l0, range, &d, false).unwrap();
        let t = 0.37 * PI / bragg::adiabatic::coupling_magnitude(1, l0, &d);
        let s0 = ladder::initial_state_in(l0, Direction::Minus, 1, range).unwrap();
        let got = Propagator::new(&h)
            .evolve(&s0, t, &EvolveOptions::default())
            .unwrap()
            .physical_populations();

        // same span of physical orders, listed from the bottom in the own frame
        let m_min = *got.keys().next().unwrap();
        let own_min = m_min + l0 as i32;
        let oracle =
            Tridiagonal::quadratic(d.recoil_frequency, -(l0 as i32), own_min, range.len(), d.chi);
        let start = ((0 - own_min) / 2) as usize;
        let want = oracle.converged(&unit(range.len(), start), t, 1e-10);
        for (j, (&m, &pop)) in got.iter().enumerate() {
            assert_eq!(m, m_min + 2 * j as i32);
            assert!(
                (pop - want[j].norm_sqr()).abs() < 1e-8,
                "l0={l0} m={m}: {pop} vs {}",
                want[j].norm_sqr()
            );
        }
    }
}
