use std::f64::consts::PI;

use bragg::adiabatic::{self, ShiftConvention};
use bragg::entangle::{
    self, compose, measure_field, AtomBranches, Engine, FieldBasis, FieldBasisKind,
    FieldSuperposition, PrepMode, Scenario,
};
use bragg::ladder::{self, Direction, EvolveOptions, LadderRange, Propagator};
use bragg::params::{rubidium_preset, PhysicalParams};
use bragg::validation::{validate, ValidationOptions};
use num_complex::Complex64 as C;
use proptest::prelude::*;

fn params(l0: u32, ratio: f64) -> PhysicalParams {
    PhysicalParams {
        l0,
        ..rubidium_preset().with_regime_ratio(ratio).unwrap()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn ladder_evolution_is_unitary(
        l0 in prop::sample::select(vec![2u32, 4, 6]),
        n in 0u32..3,
        pulses in 0.0f64..3.0,
        minus in any::<bool>(),
    ) {
        let p = params(l0, 0.02);
        let d = p.derive().unwrap();
        let range = LadderRange::default_for(l0);
        let h = ladder::build_hamiltonian(n, l0, range, &d, false).unwrap();
        let b = adiabatic::coupling_magnitude(n.max(1), l0, &d);
        let dir = if minus { Direction::Minus } else { Direction::Plus };
        let s0 = ladder::initial_state_in(l0, dir, n, range).unwrap();
        let s = Propagator::new(&h).evolve(&s0, pulses * PI / b, &EvolveOptions::default()).unwrap();
        prop_assert!((s.norm_sqr() - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn population_stays_on_resonant_pair(
        l0 in prop::sample::select(vec![2u32, 4]),
        ratio in 0.005f64..0.03,
        pulses in 0.0f64..2.0,
    ) {
        let p = params(l0, ratio);
        let d = p.derive().unwrap();
        let range = LadderRange::default_for(l0);
        let h = ladder::build_hamiltonian(1, l0, range, &d, false).unwrap();
        let s0 = ladder::initial_state_in(l0, Direction::Plus, 1, range).unwrap();
        let t = pulses * PI / adiabatic::coupling_magnitude(1, l0, &d);
        let s = Propagator::new(&h).evolve(&s0, t, &EvolveOptions::default()).unwrap();
        let (_, leakage) = s.two_mode();
        prop_assert!(leakage < 0.02, "leakage {leakage}");
    }

    #[test]
    fn adiabatic_recipes_are_exact(
        l0 in prop::sample::select(vec![2u32, 4, 6]),
        n0 in 1u32..4,
        s in prop::sample::select(vec![1u32, 3, 5]),
        r in 0i64..3,
        same in any::<bool>(),
        literal in any::<bool>(),
    ) {
        let mut p = params(l0, 0.02);
        p.n0 = n0;
        let mode = if same { PrepMode::Same } else { PrepMode::Opposite };
        let mut sc = Scenario::bell(p, mode, s, r, Engine::Adiabatic);
        if literal {
            sc.convention = ShiftConvention::Literal;
        }
        let rep = entangle::run_scenario(&sc).unwrap();
        prop_assert!((rep.fidelity - 1.0).abs() < 1e-12, "fidelity {}", rep.fidelity);
        prop_assert!((rep.concurrence.unwrap() - 1.0).abs() < 1e-9);
        prop_assert!(rep.vacuum_deviation <= 1e-10);
    }

    #[test]
    fn ghz_collapse_leaves_bell_pair(k in 3usize..=6, s in prop::sample::select(vec![1u32, 3]), r in 0i64..2) {
        let sc = Scenario::ghz(rubidium_preset(), k, s, r, Engine::Adiabatic);
        let rep = entangle::run_scenario(&sc).unwrap();
        prop_assert!((rep.fidelity - 1.0).abs() < 1e-12);
        prop_assert_eq!(rep.collapse.len(), 4);
        for c in &rep.collapse {
            prop_assert!((c.fidelity - 1.0).abs() < 1e-9, "collapse fidelity {}", c.fidelity);
            if k == 3 {
                prop_assert!((c.concurrence.unwrap() - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn field_outcomes_are_complete_and_phase_blind(
        theta in 0.0f64..(2.0 * PI),
        a in 0.1f64..1.0,
        t1 in 0.0f64..10.0,
        t2 in 0.0f64..10.0,
    ) {
        let d = rubidium_preset().derive().unwrap();
        let fock = adiabatic::coeffs(1, 2, &d, ShiftConvention::Corrected).unwrap();
        let vac = adiabatic::coeffs(0, 2, &d, ShiftConvention::Corrected).unwrap();
        let atom = |t: f64, init: (C, C)| {
            let v = adiabatic::solve(init, &vac, t * 1e-3);
            let f = adiabatic::solve(init, &fock, t * 1e-3);
            AtomBranches { n0: 1, vacuum: [v.c_plus, v.c_minus], fock: [f.c_plus, f.c_minus] }
        };
        let one = C::new(1.0, 0.0);
        let zero = C::new(0.0, 0.0);
        let atoms = [atom(t1, (one, zero)), atom(t2, (zero, one))];
        let b = (1.0 - a * a).sqrt();
        let field = FieldSuperposition::new(C::new(a, 0.0), C::new(b, 0.0), 1).unwrap();
        let rotated = FieldSuperposition::new(
            C::from_polar(a, theta),
            C::from_polar(b, theta),
            1,
        ).unwrap();
        let j = compose(&atoms, field).unwrap();
        let jr = compose(&atoms, rotated).unwrap();
        for basis in [FieldBasis::computational(), FieldBasis::superposition()] {
            let total: f64 = (0..2)
                .map(|o| measure_field(&j, &basis, o).map(|(p, _)| p).unwrap_or(0.0))
                .sum();
            prop_assert!((total - 1.0).abs() < 1e-12);
            for o in 0..2 {
                if let (Ok((p, psi)), Ok((pr, psir))) =
                    (measure_field(&j, &basis, o), measure_field(&jr, &basis, o))
                {
                    prop_assert!((p - pr).abs() < 1e-12);
                    let f = entangle::fidelity(&psi, &psir).unwrap();
                    prop_assert!((f - 1.0).abs() < 1e-9);
                }
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn pendellosung_frequency_tracks_two_level_coupling(
        l0 in prop::sample::select(vec![2u32, 4]),
        ratio in 0.005f64..0.025,
    ) {
        let opts = ValidationOptions { samples: 801, ..ValidationOptions::default() };
        let rep = validate(&params(l0, ratio), 1, &opts).unwrap();
        prop_assert!((rep.frequency_ratio - 1.0).abs() < 0.02, "ratio {}", rep.frequency_ratio);
    }
}

#[test]
fn measurement_basis_decides_entanglement() {
    for engine in [Engine::Adiabatic, Engine::Ladder] {
        let mut sc = Scenario::bell(rubidium_preset(), PrepMode::Opposite, 1, 0, engine);
        let rotated = entangle::run_scenario(&sc).unwrap();
        sc.basis = FieldBasisKind::Computational;
        let plain = entangle::run_scenario(&sc).unwrap();
        assert!(rotated.concurrence.unwrap() > 0.99);
        assert!(plain.concurrence.unwrap() < 1e-6);
    }
}

#[test]
fn vacuum_branch_is_untouched_by_ladder() {
    for mode in [PrepMode::Opposite, PrepMode::Same] {
        let sc = Scenario::bell(rubidium_preset(), mode, 3, 1, Engine::Ladder);
        assert!(entangle::run_scenario(&sc).unwrap().vacuum_deviation <= 1e-10);
    }
}
