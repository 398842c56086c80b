//! Cross-module invariants checked over parameter families rather than
//! single pinned values: cover sandwiching, refinement monotonicity,
//! submultiplicative box counts, exact/float agreement, thread-schedule
//! independence, and the pressure-bracket distortion ceiling.

use std::collections::HashSet;

use num_bigint::BigInt;
use num_rational::BigRational;
use rayon::ThreadPoolBuilder;

use fractal_pressure::grid::{cover_bounds, inner_cover, outer_cover, GridKey};
use fractal_pressure::ifs::AffineIfs;
use fractal_pressure::linalg::Matrix;
use fractal_pressure::pressure::{bowen_root, pressure_bracket, DimensionReport, Potential};

const CAP: u64 = 10_000_000;

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// Overlapping Cantor family: x/3, x/3 + lambda/3, x/3 + 2/3.
fn cantor(lambda: BigRational) -> AffineIfs<BigRational> {
    AffineIfs::new(
        Matrix::from_rows(vec![vec![rat(1, 3)]]).unwrap(),
        vec![vec![rat(0, 1)], vec![lambda / rat(3, 1)], vec![rat(2, 3)]],
    )
    .unwrap()
}

fn cantor_float(lambda: f64) -> AffineIfs<f64> {
    AffineIfs::new(
        Matrix::from_rows(vec![vec![1.0 / 3.0]]).unwrap(),
        vec![vec![0.0], vec![lambda / 3.0], vec![2.0 / 3.0]],
    )
    .unwrap()
}

fn key_set(keys: &[GridKey]) -> HashSet<GridKey> {
    keys.iter().cloned().collect()
}

/// Every certified inner cell lies in the outer cover, and raising the
/// refinement level only ever certifies more cells, never fewer.
#[test]
fn inner_covers_nest_inside_outer_and_grow_with_refinement() {
    for lambda in [rat(0, 1), rat(1, 2), rat(1, 1)] {
        let ifs = cantor(lambda.clone());
        for n in 1..=8u32 {
            let outer = key_set(&outer_cover(&ifs, n, CAP).unwrap());
            let mut prev: Option<HashSet<GridKey>> = None;
            for k in 0..=3u32 {
                let inner = key_set(&inner_cover(&ifs, n, k, CAP).unwrap());
                assert!(
                    inner.is_subset(&outer),
                    "inner(depth {n}, refine {k}) escapes the outer cover at lambda {lambda}"
                );
                if let Some(prev) = &prev {
                    assert!(
                        prev.is_subset(&inner),
                        "refinement {k} lost certified cells at depth {n}, lambda {lambda}"
                    );
                }
                prev = Some(inner);
            }
        }
    }
}

/// Outer covers compose: a depth-(m+n) cell projects into a depth-m cell,
/// and within each depth-m cell at most 3^d lattice translates per depth-n
/// pattern can appear, so N+(m+n) <= 3^d * N+(m) * N+(n).
#[test]
fn outer_counts_are_submultiplicative() {
    for lambda in [rat(0, 1), rat(1, 2), rat(1, 1)] {
        let ifs = cantor(lambda.clone());
        let mut np = vec![0u64; 13];
        for n in 1..=12u32 {
            np[n as usize] = outer_cover(&ifs, n, CAP).unwrap().len() as u64;
        }
        for m in 1..=6usize {
            for n in 1..=6usize {
                assert!(
                    np[m + n] <= 3 * np[m] * np[n],
                    "N+({}) = {} exceeds 3*N+({m})*N+({n}) = {} at lambda {lambda}",
                    m + n,
                    np[m + n],
                    3 * np[m] * np[n]
                );
            }
        }
    }
}

/// With rational data well inside the float grid tolerance, the exact and
/// float pipelines must enumerate the same lattice cells at every depth.
#[test]
fn exact_and_float_covers_agree_for_rational_parameters() {
    let exact = cantor(rat(1, 3));
    let float = cantor_float(1.0 / 3.0);
    for n in 1..=10u32 {
        let outer_e = outer_cover(&exact, n, CAP).unwrap();
        let outer_f = outer_cover(&float, n, CAP).unwrap();
        assert_eq!(outer_e, outer_f, "outer covers diverge at depth {n}");
        let inner_e = inner_cover(&exact, n, 2, CAP).unwrap();
        let inner_f = inner_cover(&float, n, 2, CAP).unwrap();
        assert_eq!(inner_e, inner_f, "inner covers diverge at depth {n}");
    }
}

/// Cover enumeration parallelizes over candidate cells; the result must not
/// depend on how rayon schedules that work.
#[test]
fn cover_enumeration_is_schedule_independent() {
    let run = |threads: usize| {
        let pool = ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap();
        pool.install(|| {
            let exact = cantor(rat(1, 2));
            let float = cantor_float(0.4);
            (
                outer_cover(&exact, 10, CAP).unwrap(),
                inner_cover(&exact, 8, 2, CAP).unwrap(),
                outer_cover(&float, 10, CAP).unwrap(),
            )
        })
    };
    let single = run(1);
    let wide = run(8);
    assert_eq!(single.0, wide.0, "exact outer cover depends on schedule");
    assert_eq!(single.1, wide.1, "exact inner cover depends on schedule");
    assert_eq!(single.2, wide.2, "float outer cover depends on schedule");
}

/// Bracket width for a Lipschitz potential stays within the zero-potential
/// width plus a distortion tail that decays like 1/n: each Birkhoff term's
/// Lipschitz slack telescopes over the word to at most L*diam/(1-r), so the
/// per-depth bracket can exceed the pure counting width by no more than
/// L*diam/((1-r)*n). Float mode keeps the deeper witness runs cheap.
#[test]
fn bracket_width_obeys_distortion_ceiling_across_depths() {
    let f = Potential::linear(vec![1.0], 1.0);
    let tail = 1.0 * 1.0 / (1.0 - 1.0 / 3.0);
    for lambda in [0.4f64, 0.5] {
        let ifs = cantor_float(lambda);
        for n in 4..=10u32 {
            let pb = pressure_bracket(&ifs, &f, n, 0, CAP).unwrap();
            assert!(pb.low <= pb.high, "bracket inverted at depth {n}");
            let f0 = pressure_bracket(&ifs, &Potential::constant(0.0), n, 0, CAP).unwrap();
            let ceiling = (f0.high - f0.low) + tail / n as f64 + 1e-9;
            assert!(
                pb.high - pb.low <= ceiling,
                "width {} above ceiling {ceiling} at depth {n}, lambda {lambda}",
                pb.high - pb.low
            );
        }
    }
    // Same invariant through the exact pipeline at depths the certified
    // witness path affords.
    let ifs = cantor(rat(2, 5));
    for n in 4..=6u32 {
        let pb = pressure_bracket(&ifs, &f, n, 0, CAP).unwrap();
        let f0 = pressure_bracket(&ifs, &Potential::constant(0.0), n, 0, CAP).unwrap();
        let ceiling = (f0.high - f0.low) + tail / n as f64 + 1e-9;
        assert!(
            pb.high - pb.low <= ceiling,
            "exact width {} above ceiling {ceiling} at depth {n}",
            pb.high - pb.low
        );
    }
}

/// Reports survive a JSON round trip bit-for-bit on the numeric fields, and
/// a depth with an empty inner cover serializes its -inf exponent as null.
#[test]
fn dimension_report_survives_json_round_trip() {
    let report = bowen_root(&cantor(rat(1, 2)), (4, 8), 1, CAP).unwrap();
    let json = serde_json::to_string(&report).unwrap();
    let back: DimensionReport = serde_json::from_str(&json).unwrap();
    assert_eq!(back.depths, report.depths);
    assert_eq!(back.n_minus, report.n_minus);
    assert_eq!(back.n_plus, report.n_plus);
    assert_eq!(back.exponent_lo, report.exponent_lo);
    assert_eq!(back.exponent_hi, report.exponent_hi);
    assert_eq!(back.root_interval, report.root_interval);
    assert_eq!(back.mode, report.mode);

    // A single map with its fixed point on a grid line never certifies an
    // inner cell, so the low exponent is -inf and must appear as null.
    let one_map = AffineIfs::new(
        Matrix::from_rows(vec![vec![0.5]]).unwrap(),
        vec![vec![0.0]],
    )
    .unwrap();
    let report = bowen_root(&one_map, (2, 4), 0, CAP).unwrap();
    assert!(report.exponent_lo.iter().all(|x| *x == f64::NEG_INFINITY));
    let value = serde_json::to_value(&report).unwrap();
    assert!(value["exponent_lo"][0].is_null());
}

/// cover_bounds must agree with the standalone outer/inner enumerations —
/// it is the pair the pressure and dimension layers consume.
#[test]
fn cover_bounds_matches_standalone_covers() {
    for lambda in [rat(0, 1), rat(2, 5), rat(1, 1)] {
        let ifs = cantor(lambda.clone());
        for n in [3u32, 6] {
            let cb = cover_bounds(&ifs, n, 2, CAP).unwrap();
            assert_eq!(cb.outer, outer_cover(&ifs, n, CAP).unwrap());
            assert_eq!(cb.inner, inner_cover(&ifs, n, 2, CAP).unwrap());
            assert_eq!(cb.n_plus(), cb.outer.len() as u64);
            assert_eq!(cb.n_minus(), cb.inner.len() as u64);
        }
    }
}
