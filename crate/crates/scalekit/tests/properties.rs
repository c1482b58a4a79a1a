//! Randomized invariants: the two recursion routes must agree, tables must
//! stay monotone, and the chain must conserve jump mass however the grid is
//! refined or the far tail is represented.

use proptest::prelude::*;

use scalekit::applications::exit_ratio;
use scalekit::chain::{build_chain, gamma_coefficients, max_admissible_h, psi_h_real};
use scalekit::measure::{Atom, DensityForm, DensityPiece, LevyMeasure};
use scalekit::process::LevyTriplet;
use scalekit::quad;
use scalekit::scale::{compute_table, compute_w, ide_recursion_w, z_tilde_from_w};

const H_LADDER: [f64; 4] = [0.125, 0.0625, 0.03125, 0.015625];
const X_REACH: f64 = 1.5;

fn rel_gap(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

fn atom_strategy() -> impl Strategy<Value = Atom> {
    (-3.0..-0.2f64, 0.05..1.5f64).prop_map(|(location, mass)| Atom { location, mass })
}

// Gaussian part plus a few atoms and an optional exponential density.
fn diffusive() -> impl Strategy<Value = LevyTriplet> {
    (
        0.3..3.0f64,
        -1.2..1.2f64,
        prop::collection::vec(atom_strategy(), 0..3),
        prop::option::of((0.1..1.5f64, 0.5..3.0f64)),
    )
        .prop_map(|(sigma2, mu, atoms, exp_piece)| {
            let mut pieces = Vec::new();
            if let Some((weight, rate)) = exp_piece {
                pieces.push(DensityPiece {
                    lower: f64::NEG_INFINITY,
                    upper: 0.0,
                    form: DensityForm::Exponential { weight, rate },
                });
            }
            let measure = LevyMeasure::new(atoms, pieces).expect("valid by construction");
            LevyTriplet::new(sigma2, measure, mu).expect("valid by construction")
        })
}

// Positive drift and finitely many jumps, no Gaussian part.
fn drift_with_atoms() -> impl Strategy<Value = LevyTriplet> {
    (0.3..3.0f64, prop::collection::vec(atom_strategy(), 1..3)).prop_map(|(mu, atoms)| {
        let measure = LevyMeasure::new(atoms, Vec::new()).expect("valid by construction");
        LevyTriplet::new(0.0, measure, mu).expect("valid by construction")
    })
}

// Infinite activity, finite variation: power law of index below 1 near zero.
fn heavy_small_jumps() -> impl Strategy<Value = LevyTriplet> {
    (0.2..0.8f64, 0.2..1.0f64, 0.5..2.5f64).prop_map(|(index, coeff, mu)| {
        let pieces = vec![DensityPiece {
            lower: -1.0,
            upper: 0.0,
            form: DensityForm::PowerLaw { coeff, index },
        }];
        let measure = LevyMeasure::new(Vec::new(), pieces).expect("valid by construction");
        LevyTriplet::new(0.0, measure, mu).expect("valid by construction")
    })
}

// Pure-jump infinite variation: power law of index between 1 and 2.
fn unbounded_variation() -> impl Strategy<Value = LevyTriplet> {
    (1.2..1.7f64, 0.3..1.0f64, 0.0..2.0f64).prop_map(|(index, coeff, mu)| {
        let pieces = vec![DensityPiece {
            lower: f64::NEG_INFINITY,
            upper: 0.0,
            form: DensityForm::PowerLaw { coeff, index },
        }];
        let measure = LevyMeasure::new(Vec::new(), pieces).expect("valid by construction");
        LevyTriplet::new(0.0, measure, mu).expect("valid by construction")
    })
}

fn any_triplet() -> impl Strategy<Value = LevyTriplet> {
    prop_oneof![
        diffusive(),
        drift_with_atoms(),
        heavy_small_jumps(),
        unbounded_variation(),
    ]
}

fn small_q() -> impl Strategy<Value = f64> {
    prop_oneof![Just(0.0), Just(0.5), Just(2.0)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn w_routes_agree(triplet in any_triplet(), q in small_q()) {
        let picked = max_admissible_h(&triplet, &H_LADDER);
        prop_assume!(picked.is_ok());
        let h = picked.unwrap();
        let n = (X_REACH / h).round() as usize;
        let chain = build_chain(&triplet, h, n + 1).unwrap();
        let gamma = gamma_coefficients(&chain, n + 1).unwrap();
        let table = compute_w(&gamma, q, n).unwrap();
        let other = ide_recursion_w(&chain, q, n).unwrap();
        prop_assert_eq!(table.w.len(), other.len());
        for (a, b) in table.w.iter().zip(other.iter()) {
            prop_assert!(rel_gap(*a, *b) <= 1e-10, "routes disagree: {} vs {}", a, b);
        }
    }

    #[test]
    fn z_routes_agree(triplet in any_triplet(), q in small_q()) {
        let picked = max_admissible_h(&triplet, &H_LADDER);
        prop_assume!(picked.is_ok());
        let h = picked.unwrap();
        let n = (X_REACH / h).round() as usize;
        let chain = build_chain(&triplet, h, n + 1).unwrap();
        let gamma = gamma_coefficients(&chain, n + 1).unwrap();
        let table = compute_table(&gamma, q, n).unwrap();
        let from_w = z_tilde_from_w(&table).unwrap();
        prop_assert_eq!(table.ztilde.len(), from_w.len());
        for (a, b) in table.ztilde.iter().zip(from_w.iter()) {
            prop_assert!(rel_gap(*a, *b) <= 1e-10, "z routes disagree: {} vs {}", a, b);
        }
    }

    #[test]
    fn tables_stay_monotone(triplet in any_triplet(), q in small_q()) {
        let picked = max_admissible_h(&triplet, &H_LADDER);
        prop_assume!(picked.is_ok());
        let h = picked.unwrap();
        let n = (X_REACH / h).round() as usize;
        let chain = build_chain(&triplet, h, n + 1).unwrap();
        let gamma = gamma_coefficients(&chain, n + 1).unwrap();
        let table = compute_table(&gamma, q, n).unwrap();
        prop_assert!(table.w[0] > 0.0);
        for m in 0..n {
            prop_assert!(
                table.w[m + 1] >= table.w[m] * (1.0 - 1e-12),
                "w not monotone at {}: {} then {}", m, table.w[m], table.w[m + 1]
            );
            prop_assert!(
                table.ztilde[m + 1] >= table.ztilde[m] - 1e-12 * (1.0 + table.ztilde[m]),
                "ztilde not monotone at {}", m
            );
        }
        prop_assert!(table.ztilde.iter().all(|&z| z >= 0.0));
        if q == 0.0 {
            prop_assert!(table.ztilde.iter().all(|&z| z == 0.0));
        }
    }

    #[test]
    fn prefix_is_independent_of_table_length(triplet in any_triplet(), q in small_q()) {
        let picked = max_admissible_h(&triplet, &H_LADDER);
        prop_assume!(picked.is_ok());
        let h = picked.unwrap();
        let n = (X_REACH / h).round() as usize;
        let chain = build_chain(&triplet, h, n + 8).unwrap();
        let gamma = gamma_coefficients(&chain, n + 8).unwrap();
        let short = compute_table(&gamma, q, n).unwrap();
        let long = compute_table(&gamma, q, n + 7).unwrap();
        for m in 0..=n {
            prop_assert_eq!(short.w[m].to_bits(), long.w[m].to_bits());
            prop_assert_eq!(short.ztilde[m].to_bits(), long.ztilde[m].to_bits());
        }
    }

    #[test]
    fn exit_ratio_lies_in_unit_interval(
        triplet in any_triplet(),
        q in small_q(),
        f1 in 0.05..1.0f64,
        f2 in 0.05..1.0f64,
    ) {
        let picked = max_admissible_h(&triplet, &H_LADDER);
        prop_assume!(picked.is_ok());
        let h = picked.unwrap();
        let n = (X_REACH / h).round() as usize;
        let chain = build_chain(&triplet, h, n + 1).unwrap();
        let gamma = gamma_coefficients(&chain, n + 1).unwrap();
        let table = compute_w(&gamma, q, n).unwrap();
        let i = ((f1 * n as f64) as usize).max(1);
        let j = ((f2 * n as f64) as usize).max(i);
        let ratio = exit_ratio(&table, i as f64 * h, j as f64 * h).unwrap();
        prop_assert!(ratio > 0.0);
        prop_assert!(ratio <= 1.0 + 1e-12, "ratio {} above 1", ratio);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    // Bin masses plus the beyond-grid lump must add up to the measure's own
    // tail, and deepening the grid must not disturb the shared coefficients.
    #[test]
    fn chain_conserves_jump_mass(triplet in any_triplet()) {
        let picked = max_admissible_h(&triplet, &H_LADDER);
        prop_assume!(picked.is_ok());
        let h = picked.unwrap();
        let n = (X_REACH / h).round() as usize;
        let chain = build_chain(&triplet, h, n + 1).unwrap();
        let binned: f64 = chain.bins.iter().sum::<f64>() + chain.tail_beyond;
        let direct = triplet.measure().tail_mass(0.5 * h).unwrap();
        prop_assert!(
            (binned - direct).abs() <= 1e-12 * (1.0 + direct),
            "binned {} vs direct {}", binned, direct
        );

        let deeper = build_chain(&triplet, h, n + 9).unwrap();
        let ga = gamma_coefficients(&chain, n + 1).unwrap();
        let gb = gamma_coefficients(&deeper, n + 9).unwrap();
        prop_assert_eq!(ga.gamma_up.to_bits(), gb.gamma_up.to_bits());
        let scale = 1.0 + ga.gamma_down[0].abs();
        for (a, b) in ga.gamma_down.iter().zip(gb.gamma_down.iter()) {
            prop_assert!((a - b).abs() <= 1e-11 * scale, "{} vs {}", a, b);
        }
        // successive down rates differ by exactly one bin of mass
        for k in 1..ga.gamma_down.len() {
            let step = ga.gamma_down[k - 1] - ga.gamma_down[k];
            let expected = if k == 1 {
                chain.down_rate_local + chain.bins[0]
            } else {
                chain.bins[k - 1]
            };
            prop_assert!((step - expected).abs() <= 1e-11 * scale);
        }
    }

    #[test]
    fn psi_is_midpoint_convex(triplet in any_triplet(), b1 in 0.0..3.0f64, b2 in 0.0..3.0f64) {
        let mid = triplet.psi_real(0.5 * (b1 + b2)).unwrap();
        let ends = 0.5 * (triplet.psi_real(b1).unwrap() + triplet.psi_real(b2).unwrap());
        prop_assert!(mid <= ends + 1e-9 * (1.0 + mid.abs() + ends.abs()));
    }

    #[test]
    fn power_law_mass_matches_quadrature(
        coeff in 0.2..1.5f64,
        index in -0.5..1.9f64,
        a in -3.0..-1.0f64,
        len in 0.1..0.9f64,
    ) {
        let b = a + len;
        let form = DensityForm::PowerLaw { coeff, index };
        let piece = DensityPiece { lower: a, upper: b, form: form.clone() };
        let measure = LevyMeasure::new(Vec::new(), vec![piece]).unwrap();
        let closed = measure.interval_mass(a, b).unwrap();
        let numeric = quad::integrate(|y| form.eval(y), a, b).unwrap();
        prop_assert!((closed - numeric).abs() <= 1e-8 * (1.0 + closed.abs()));
    }

    #[test]
    fn exponential_mass_matches_quadrature(
        weight in 0.2..2.0f64,
        rate in 0.3..3.0f64,
        a in -4.0..-0.5f64,
        len in 0.1..0.4f64,
    ) {
        let b = a + len;
        let form = DensityForm::Exponential { weight, rate };
        let piece = DensityPiece { lower: a, upper: b, form: form.clone() };
        let measure = LevyMeasure::new(Vec::new(), vec![piece]).unwrap();
        let closed = measure.interval_mass(a, b).unwrap();
        let numeric = quad::integrate(|y| form.eval(y), a, b).unwrap();
        prop_assert!((closed - numeric).abs() <= 1e-8 * (1.0 + closed.abs()));
    }

    // Replacing a density that lives wholly beyond the deepest bin with a
    // point mass of the same weight must leave every table entry bit-equal:
    // both land in the same lump.
    #[test]
    fn far_tail_representation_is_interchangeable(
        sigma2 in 0.5..2.0f64,
        mu in -1.0..1.0f64,
        weight in 0.2..1.5f64,
        rate in 0.1..1.0f64,
        q in small_q(),
    ) {
        let h = 0.125;
        let n = 16;
        let near = Atom { location: -0.5, mass: 0.7 };
        let far = DensityPiece {
            lower: f64::NEG_INFINITY,
            upper: -50.0,
            form: DensityForm::Exponential { weight, rate },
        };
        let lump = LevyMeasure::new(Vec::new(), vec![far.clone()])
            .unwrap()
            .tail_mass(0.5)
            .unwrap();
        let with_piece = LevyTriplet::new(
            sigma2,
            LevyMeasure::new(vec![near], vec![far]).unwrap(),
            mu,
        )
        .unwrap();
        let with_atom = LevyTriplet::new(
            sigma2,
            LevyMeasure::new(
                vec![near, Atom { location: -60.0, mass: lump }],
                Vec::new(),
            )
            .unwrap(),
            mu,
        )
        .unwrap();

        let ca = build_chain(&with_piece, h, n + 1).unwrap();
        let cb = build_chain(&with_atom, h, n + 1).unwrap();
        prop_assert_eq!(ca.tail_beyond.to_bits(), cb.tail_beyond.to_bits());
        let ga = gamma_coefficients(&ca, n + 1).unwrap();
        let gb = gamma_coefficients(&cb, n + 1).unwrap();
        let ta = compute_table(&ga, q, n).unwrap();
        let tb = compute_table(&gb, q, n).unwrap();
        for (a, b) in ta.w.iter().zip(tb.w.iter()) {
            prop_assert_eq!(a.to_bits(), b.to_bits());
        }
        for (a, b) in ta.ztilde.iter().zip(tb.ztilde.iter()) {
            prop_assert_eq!(a.to_bits(), b.to_bits());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    // On a fine grid reaching far out, the chain's Laplace exponent should
    // sit close to the process exponent for moderate beta.
    #[test]
    fn chain_exponent_tracks_psi(triplet in any_triplet(), beta in 0.25..1.5f64) {
        let h = 0.0078125;
        prop_assume!(build_chain(&triplet, h, 1).is_ok());
        let depth = (8.0 / h) as usize;
        let chain = build_chain(&triplet, h, depth).unwrap();
        let exact = triplet.psi_real(beta).unwrap();
        let approx = psi_h_real(&chain, beta);
        prop_assert!(
            (approx - exact).abs() <= 0.25 * (1.0 + exact.abs()),
            "psi_h {} vs psi {}", approx, exact
        );
    }
}
