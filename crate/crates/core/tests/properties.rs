//! Cross-module property suites: hull extremality against brute force,
//! dual-cone partitioning, domination, arc-partition laws, the Dirichlet
//! sparsity diagnostic, engine/oracle agreement, and the class-restricted
//! recomposition of dyadic pieces.

mod common;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Zero};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use dhilbert::arcs::{self, ArcClass};
use dhilbert::expsum::{self, PhaseContext, Quadrants};
use dhilbert::fixed::FixedReal;
use dhilbert::newton;
use dhilbert::polynomial::Polynomial;
use dhilbert::rational;
use dhilbert::verify;

proptest! {
    #[test]
    fn parse_render_roundtrip(terms in proptest::collection::vec(
        ((0u32..7, 0u32..7), -9i64..=9), 1..6)
    ) {
        let p = Polynomial::from_terms(
            terms.into_iter().map(|(e, c)| (e, BigInt::from(c))),
        );
        let rendered = p.render();
        prop_assert_eq!(Polynomial::parse(&rendered).unwrap(), p);
    }

    #[test]
    fn eval_mod_matches_exact(
        terms in proptest::collection::vec(((0u32..5, 0u32..5), -20i64..=20), 1..5),
        t1 in -50i64..=50,
        t2 in -50i64..=50,
        q in 1u64..=97,
    ) {
        let p = Polynomial::from_terms(
            terms.into_iter().map(|(e, c)| (e, BigInt::from(c))),
        );
        let exact = p.eval_exact((t1, t2));
        let expected = ((exact % q) + q) % q;
        prop_assert_eq!(BigInt::from(p.eval_mod((t1, t2), q)), expected);
    }
}

#[test]
fn hull_extremality_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..400 {
        let p = common::random_polynomial(&mut rng, 8, 9, 6);
        let hull = newton::build(&p);
        let expected = common::brute_force_vertices(&p.support());
        assert_eq!(hull.vertices, expected, "support {:?}", p.support());
    }
}

#[test]
fn dual_face_partition_on_big_grid() {
    for s in ["t1^4 + t1^2*t2^2 + t2^6 + t1*t2", "t1^3*t2^2 + t1*t2^5"] {
        let p = Polynomial::parse(s).unwrap();
        let hull = newton::build(&p);
        for j1 in 0..512u64 {
            for j2 in 0..512u64 {
                // total and single-valued by construction: just exercise it
                let idx = hull.dual_face_of((j1, j2));
                assert!(idx < hull.vertices.len());
            }
        }
    }
}

#[test]
fn domination_over_random_cells() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let mut checked = 0;
    while checked < 1000 {
        let p = common::random_polynomial(&mut rng, 6, 9, 4);
        let hull = newton::build(&p);
        let scale = {
            let c = p.coefficient_ratio_constant();
            64 - (c.bits() as i64).min(40)
        };
        let base = rng.gen_range(scale.max(8) as u64..(scale.max(8) as u64 + 20));
        let j = (base + rng.gen_range(0..12), base);
        assert!(
            hull.dominant_vertex_check(&p, j, 32),
            "poly {} at j {:?}",
            p.render(),
            j
        );
        checked += 1;
    }
}

#[test]
fn arc_partition_exhaustive_and_exclusive() {
    let mut rng = ChaCha8Rng::seed_from_u64(37);
    for _ in 0..50 {
        let vertex = (rng.gen_range(1..4u32), rng.gen_range(1..4u32));
        let xi = common::random_ratio(&mut rng, 1 << 30);
        let grid = arcs::partition_grid(&xi, vertex, 255, 255).unwrap();
        let expected: usize = (0..=255u64).map(|j1| (j1.min(255) + 1) as usize).sum();
        assert_eq!(grid.cells.len(), expected);
        let total = grid.counts.minor
            + grid.counts.major_minor
            + grid.counts.major_sharp
            + grid.counts.major_flat;
        assert_eq!(total, expected);
    }
}

#[test]
fn dirichlet_sparsity_diagnostic() {
    // Collect q(j, xi) over a 64x64 grid restricted to the major range
    // q < 2^{j1/10}; distinct denominators must be 5-sparse.
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    for trial in 0..10 {
        let xi = common::random_ratio(&mut rng, u32::MAX as u64);
        let vertex = (2u32, 1u32);
        let mut qs: Vec<BigInt> = Vec::new();
        for j1 in 0..64u64 {
            for j2 in 0..=j1.min(63) {
                let r = rational::q_of((j1, j2), &xi, vertex).unwrap();
                let threshold = BigInt::one() << j1;
                if r.q.pow(10) < threshold {
                    qs.push(r.q);
                }
            }
        }
        qs.sort();
        qs.dedup();
        for w in qs.windows(2) {
            assert!(
                BigInt::from(5) * &w[0] < w[1],
                "trial {trial}: adjacent major denominators {} and {}",
                w[0],
                w[1]
            );
        }
    }
}

#[test]
fn engine_matches_naive_oracle_small() {
    let mut rng = ChaCha8Rng::seed_from_u64(53);
    for _ in 0..12 {
        let p = common::random_polynomial(&mut rng, 4, 7, 4);
        let ctx = PhaseContext::from_fixed(
            FixedReal::from_f64(rng.gen_range(-0.5..0.5)),
            FixedReal::from_f64(rng.gen_range(-0.5..0.5)),
            FixedReal::from_f64(rng.gen_range(-0.5..0.5)),
        );
        let n1 = rng.gen_range(5..40);
        let n2 = rng.gen_range(5..40);
        let fast = expsum::hilbert_sum(&p, n1, n2, &ctx, Quadrants::Full).unwrap();
        let slow = common::naive_hilbert_sum(&p, n1, n2, &ctx, Quadrants::Full);
        assert!(
            (fast.value - slow).norm() < 1e-12,
            "poly {} engine {} oracle {}",
            p.render(),
            fast.value,
            slow
        );
    }
}

#[test]
fn dyadic_pieces_recompose_by_arc_class() {
    // The four class-restricted partial sums over a j-grid recompose to the
    // unrestricted grid sum.
    let p = Polynomial::parse("t1^2*t2").unwrap();
    let hull = newton::build(&p);
    let xi = BigRational::new(BigInt::from(1), BigInt::from(3))
        + BigRational::new(BigInt::one(), BigInt::one() << 45u32);
    let xi_fixed = FixedReal::from_ratio(xi.numer(), xi.denom());
    let ctx = PhaseContext::from_fixed(FixedReal::ZERO, FixedReal::ZERO, xi_fixed);
    let jmax = 6u64;
    let mut by_class = [Complex64::new(0.0, 0.0); 4];
    let mut total = Complex64::new(0.0, 0.0);
    for j1 in 0..=jmax {
        for j2 in 0..=j1 {
            let vertex = hull.vertices[hull.dual_face_of((j1, j2))];
            let cell = arcs::classify((j1, j2), &xi, vertex).unwrap();
            let piece = expsum::dyadic_piece(&p, (j1, j2), &ctx, Quadrants::Full)
                .unwrap()
                .value;
            total += piece;
            let k = match cell.klass {
                ArcClass::Minor => 0,
                ArcClass::MajorMinor => 1,
                ArcClass::MajorSharp => 2,
                ArcClass::MajorFlat => 3,
            };
            by_class[k] += piece;
        }
    }
    let recomposed: Complex64 = by_class.iter().sum();
    assert!((recomposed - total).norm() < 1e-10);
}

#[test]
fn poisson_residual_monotone_in_window() {
    let p = Polynomial::parse("t1*t2").unwrap();
    let xi = BigRational::new(BigInt::from(1), BigInt::from(2));
    let r8 = verify::poisson_identity_check(&p, (5, 5), &xi, (1, 1), 8).unwrap();
    let r16 = verify::poisson_identity_check(&p, (5, 5), &xi, (1, 1), 16).unwrap();
    // both sides may sit at the floating noise floor, where monotonicity is
    // meaningless
    let floor = 1e-15;
    assert!(
        r16.residual <= (r8.residual * 2.0).max(floor),
        "window doubling should not regress: {} -> {}",
        r8.residual,
        r16.residual
    );
}

#[test]
fn identity_reports_gate_on_tolerance() {
    let p = Polynomial::parse("t1^2*t2").unwrap();
    let xi = BigRational::new(BigInt::from(1), BigInt::from(3));
    let r = verify::major_arc_approx_check(&p, (18, 5), &xi, (2, 1)).unwrap();
    assert_eq!(r.passed, r.residual <= r.tolerance);
}
