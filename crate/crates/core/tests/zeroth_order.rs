//! The reference zeroth-order generator against one rebuilt from the
//! Lindblad generator.

use num_complex::Complex64;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use rydsense::medium::{liouvillian, reference_zeroth_order_system, steady_state, Drive, LadderAtom};

/// Column-stacked index of `rho[row, col]`.
fn vec_index(row: usize, col: usize) -> usize {
    row + 4 * col
}

/// `<sigma_mu nu>` lives at `rho[nu, mu]`.
fn expectation_index(mu: usize, nu: usize) -> usize {
    vec_index(nu, mu)
}

/// `[s11, s22, s33, s23, s32, s24, s42, s34, s43]` with `s44` eliminated.
const VARIABLES: [(usize, usize); 9] = [
    (0, 0),
    (1, 1),
    (2, 2),
    (1, 2),
    (2, 1),
    (1, 3),
    (3, 1),
    (2, 3),
    (3, 2),
];

fn derived_system(atom: &LadderAtom, drive: &Drive) -> ([[Complex64; 9]; 9], [Complex64; 9]) {
    let l = liouvillian(atom, drive);
    let s44 = expectation_index(3, 3);
    let mut m = [[Complex64::new(0.0, 0.0); 9]; 9];
    let mut s = [Complex64::new(0.0, 0.0); 9];
    for (k, &(mu, nu)) in VARIABLES.iter().enumerate() {
        let row = expectation_index(mu, nu);
        s[k] = l[(row, s44)];
        for (j, &(a, b)) in VARIABLES.iter().enumerate() {
            let col = expectation_index(a, b);
            m[k][j] = l[(row, col)]
                - if a == b {
                    l[(row, s44)]
                } else {
                    Complex64::new(0.0, 0.0)
                };
        }
    }
    (m, s)
}

/// Real Rabi frequencies, as the reference layout assumes.
fn random_drive(rng: &mut StdRng) -> Drive {
    Drive {
        omega_c: Complex64::new(rng.random_range(1e5..1e8), 0.0),
        omega_mw: Complex64::new(rng.random_range(1e5..1e8), 0.0),
        delta_p: rng.random_range(-1e7..1e7),
        delta_c: rng.random_range(-1e7..1e7),
        delta_mw: rng.random_range(-1e7..1e7),
    }
}

#[test]
fn reference_generator_differs_only_in_documented_entries() {
    let atom = LadderAtom::cold_default();
    let mut rng = StdRng::seed_from_u64(7);
    for _ in 0..20 {
        let drive = random_drive(&mut rng);
        let (reference, reference_source) = reference_zeroth_order_system(&atom, &drive);
        let (derived, derived_source) = derived_system(&atom, &drive);
        let scale = reference.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let mut differing = Vec::new();
        for r in 0..9 {
            for c in 0..9 {
                if (reference[(r, c)] - derived[r][c]).norm() > 1e-12 * scale {
                    differing.push((r, c));
                }
            }
            assert!(
                (reference_source[r] - derived_source[r]).norm() <= 1e-12 * scale,
                "source row {r}: {} vs {}; drive {drive:?}",
                reference_source[r],
                derived_source[r]
            );
        }
        assert_eq!(differing, vec![(2, 7), (2, 8), (3, 3), (4, 4)]);
    }
}

#[test]
fn both_generators_relax_to_the_ground_state() {
    let atom = LadderAtom::cold_default();
    let mut rng = StdRng::seed_from_u64(8);
    for _ in 0..20 {
        let drive = random_drive(&mut rng);
        let ss = steady_state(&atom, &drive).unwrap();
        assert!((ss.sigma11 - 1.0).abs() < 1e-12);
        let (derived, derived_source) = derived_system(&atom, &drive);
        let ground = [1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0];
        for r in 0..9 {
            let rate: Complex64 =
                (0..9).map(|c| derived[r][c] * ground[c]).sum::<Complex64>() + derived_source[r];
            assert!(rate.norm() < 1e-6, "row {r}: {rate}");
        }
    }
}
