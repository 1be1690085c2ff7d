//! Acceptance gate: ten scripted checks covering closed-form agreement,
//! reference instances, oracle equivalences, interpolation bounds, CBC
//! optimality, convergence trends, cross-evaluation, and determinism.
//!
//! Each criterion is one test that prints exactly one line,
//! `ACCEPTANCE C<k> <name>: PASS|FAIL [<seconds>]`, and then asserts.
//! Tolerances are pinned in the assertions; runtime limits are part of
//! the criteria and checked alongside.

use std::sync::OnceLock;
use std::time::Instant;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use latkern::cbc::{cbc_exhaustive_oracle, cbc_p, cbc_p_with, cbc_s, cbc_s_with};
use latkern::criteria::{
    p_integral_oracle, p_oracle_dense_in, p_star, p_star_in, p_star_squared_in, power_pointwise,
    s_oracle, s_quantity, s_quantity_in, s_star, CriterionKind,
};
use latkern::interpolant::{l2_error_estimate, random_unit_function, Interpolant};
use latkern::{GeneratingVector, MpReal, PrecisionContext, ProductWeights, Real, SpaceParams};
use latkern_cli::experiments::{fit_slope, run_convergence, CriteriaSet, ExperimentConfig};

fn sp(d: usize, alpha: u32, w: ProductWeights) -> SpaceParams {
    SpaceParams::new(d, alpha, w).unwrap()
}

/// Prints the criterion's single PASS/FAIL line, then asserts.
fn report(name: &str, start: Instant, limit_s: f64, mut failures: Vec<String>) {
    let elapsed = start.elapsed().as_secs_f64();
    if elapsed > limit_s {
        failures.push(format!(
            "runtime {elapsed:.1}s exceeds the {limit_s:.0}s limit"
        ));
    }
    if failures.is_empty() {
        println!("ACCEPTANCE {name}: PASS [{elapsed:.1}s]");
    } else {
        println!(
            "ACCEPTANCE {name}: FAIL [{elapsed:.1}s] — {}",
            failures.join("; ")
        );
    }
    assert!(failures.is_empty(), "{name}: {}", failures.join("; "));
}

#[test]
fn c01_closed_form_agreement_with_truncated_sum_oracle() {
    let start = Instant::now();
    let mut failures = Vec::new();
    for scheme in [ProductWeights::Poly3A, ProductWeights::Equal] {
        for (n, d, alpha) in [(2u64, 1usize, 1u32), (8, 2, 1), (16, 2, 2)] {
            let p = sp(d, alpha, scheme.clone());
            let z = cbc_s(n, d, &p).unwrap().gv;
            let s = s_quantity(&z, &p).unwrap();
            let radii = [25u32, 50, 100, 200];
            let oracle: Vec<f64> = radii
                .iter()
                .map(|&h| s_oracle(&z, &p, h).unwrap())
                .collect();
            for w in oracle.windows(2) {
                if w[1] < w[0] {
                    failures.push(format!(
                        "({n},{d},{alpha},{}) oracle not monotone: {} then {}",
                        scheme.file_token(),
                        w[0],
                        w[1]
                    ));
                }
            }
            for (h, o) in radii.iter().zip(oracle.iter()) {
                if *o > s + 1e-12 {
                    failures.push(format!(
                        "({n},{d},{alpha},{}) oracle H={h} overshoots: {o} > {s}",
                        scheme.file_token()
                    ));
                }
            }
            let gap = (s - oracle[3]).abs();
            if gap > 1e-3 {
                failures.push(format!(
                    "({n},{d},{alpha},{}) |closed form - oracle(H=200)| = {gap:.6e} > 1e-3",
                    scheme.file_token()
                ));
            }
        }
    }
    report(
        "C1 closed-form vs truncated-sum oracle (S)",
        start,
        60.0,
        failures,
    );
}

#[test]
fn c02_hand_verifiable_reference_instance() {
    let start = Instant::now();
    let mut failures = Vec::new();
    let p = sp(1, 1, ProductWeights::Poly3A); // gamma_1 = 1/pi^2
    let z = GeneratingVector::new(2, vec![1]).unwrap();
    let seed = MpReal::zero(256);

    let s = s_quantity_in(&z, &p, &seed).unwrap();
    let s_exact = seed.from_ratio_like(77, 360);
    let s_rel = ((s - s_exact.clone()) / s_exact).abs().to_f64();
    if s_rel > 5e-13 {
        failures.push(format!("S quantity off 77/360 by rel {s_rel:.3e}"));
    }

    let p2 = p_star_squared_in(&z, &p, &seed).unwrap();
    let p2_exact = seed.from_ratio_like(127, 390);
    let p_rel = ((p2 - p2_exact.clone()) / p2_exact).abs().to_f64();
    if p_rel > 5e-13 {
        failures.push(format!("P*^2 off 127/390 by rel {p_rel:.3e}"));
    }
    report(
        "C2 reference instance 77/360 and 127/390",
        start,
        1.0,
        failures,
    );
}

#[test]
fn c03_spectral_vs_dense_equivalence() {
    let start = Instant::now();
    let mut failures = Vec::new();
    let seed = MpReal::zero(256);
    for scheme in [
        ProductWeights::Poly3A,
        ProductWeights::Poly2,
        ProductWeights::Geo09,
        ProductWeights::Equal,
    ] {
        for alpha in [1u32, 2] {
            for d in [1usize, 2, 4] {
                for n in [8u64, 16, 32, 64] {
                    let p = sp(d, alpha, scheme.clone());
                    let z = cbc_s(n, d, &p).unwrap().gv;
                    let fast = p_star_in(&z, &p, &seed).unwrap();
                    let dense = p_oracle_dense_in(&z, &p, &seed).unwrap();
                    let rel = ((fast - dense.clone()) / dense).abs().to_f64();
                    if rel > 1e-8 {
                        failures.push(format!(
                            "({n},{d},{alpha},{}) spectral vs dense rel {rel:.3e}",
                            scheme.file_token()
                        ));
                    }
                }
            }
        }
    }
    report("C3 spectral vs dense P equivalence", start, 300.0, failures);
}

#[test]
fn c04_integral_identity_for_p() {
    let start = Instant::now();
    let mut failures = Vec::new();
    let p = sp(1, 1, ProductWeights::Poly3A);
    for n in [2u64, 4, 8, 16] {
        let z = GeneratingVector::new(n, vec![1]).unwrap();
        let quad = p_integral_oracle(&z, &p, 64, 8).unwrap();
        let direct = p_star(&z, &p, PrecisionContext::DOUBLE).unwrap().value;
        let gap = (quad - direct).abs();
        if gap > 1e-4 {
            failures.push(format!("n={n}: |integral - spectral| = {gap:.3e} > 1e-4"));
        }
    }
    report("C4 integral identity (P)", start, 60.0, failures);
}

#[test]
fn c05_interpolation_exactness_and_pointwise_bound() {
    let start = Instant::now();
    let mut failures = Vec::new();
    let p = sp(4, 1, ProductWeights::Poly3A);
    let n = 128u64;
    let z = cbc_s(n, 4, &p).unwrap().gv;

    // 100 fixed random evaluation points with their power-function values
    // (independent of the test function).
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let ys: Vec<Vec<f64>> = (0..100)
        .map(|_| (0..4).map(|_| rng.gen_range(0.0..1.0)).collect())
        .collect();
    let powers: Vec<f64> = ys
        .iter()
        .map(|y| power_pointwise(&z, &p, y, PrecisionContext::DOUBLE).unwrap())
        .collect();

    for fn_seed in 0..50u64 {
        let f = random_unit_function(&p, 24, 10, fn_seed).unwrap();
        let values: Vec<f64> = (0..n).map(|k| f.evaluate(&z.point(k)).unwrap()).collect();
        let ip = Interpolant::fit(&z, &p, &values).unwrap();
        let mut worst = 0.0f64;
        for k in 0..n {
            let r = (ip.evaluate(&z.point(k)).unwrap() - values[k as usize]).abs();
            worst = worst.max(r);
        }
        if worst > 1e-9 {
            failures.push(format!("fn {fn_seed}: node residual {worst:.3e} > 1e-9"));
        }
        for (y, pw) in ys.iter().zip(powers.iter()) {
            let err = (f.evaluate(y).unwrap() - ip.evaluate(y).unwrap()).abs();
            if err > pw * (1.0 + 1e-6) {
                failures.push(format!(
                    "fn {fn_seed}: |error| {err:.6e} above power bound {pw:.6e} at {y:?}"
                ));
            }
        }
        if failures.len() > 8 {
            break; // enough detail
        }
    }
    report(
        "C5 interpolation exactness and pointwise bound",
        start,
        120.0,
        failures,
    );
}

#[test]
fn c06_worst_case_bound_validity() {
    let start = Instant::now();
    let mut failures = Vec::new();
    let p = sp(4, 1, ProductWeights::Poly3A);
    let n = 128u64;
    let z = cbc_s(n, 4, &p).unwrap().gv;
    let s = s_star(&z, &p).unwrap().value;
    let pv = p_star(&z, &p, PrecisionContext::new(256).unwrap())
        .unwrap()
        .value;
    let cap = s.min(pv) * 1.05;
    for fn_seed in 0..200u64 {
        let f = random_unit_function(&p, 24, 10, 5_000 + fn_seed).unwrap();
        let values: Vec<f64> = (0..n).map(|k| f.evaluate(&z.point(k)).unwrap()).collect();
        let ip = Interpolant::fit(&z, &p, &values).unwrap();
        let est = l2_error_estimate(&ip, &f, 1024, 5_000 + fn_seed).unwrap();
        if est > cap {
            failures.push(format!(
                "fn {fn_seed}: L2 estimate {est:.6e} above min(S*, P*) * 1.05 = {cap:.6e}"
            ));
            if failures.len() > 8 {
                break;
            }
        }
    }
    report("C6 worst-case bound validity", start, 300.0, failures);
}

#[test]
fn c07_cbc_matches_exhaustive_oracle() {
    let start = Instant::now();
    let mut failures = Vec::new();
    for alpha in [1u32, 2] {
        let p3 = sp(3, alpha, ProductWeights::Poly3A);
        let fast_s = cbc_s(16, 3, &p3).unwrap().gv;
        let slow_s = cbc_exhaustive_oracle(16, 3, &p3, CriterionKind::S).unwrap();
        if fast_s.components() != slow_s.components() {
            failures.push(format!(
                "S alpha={alpha}: {:?} vs oracle {:?}",
                fast_s.components(),
                slow_s.components()
            ));
        }
        let p2 = sp(2, alpha, ProductWeights::Poly3A);
        let fast_p = cbc_p(8, 2, &p2, PrecisionContext::DOUBLE).unwrap().gv;
        let slow_p = cbc_exhaustive_oracle(8, 2, &p2, CriterionKind::P).unwrap();
        if fast_p.components() != slow_p.components() {
            failures.push(format!(
                "P alpha={alpha}: {:?} vs oracle {:?}",
                fast_p.components(),
                slow_p.components()
            ));
        }
    }
    report(
        "C7 CBC per-step optimality vs oracle",
        start,
        120.0,
        failures,
    );
}

// ---------------------------------------------------------------------------
// Shared convergence grid for criteria 8 and 9: m = 7..=11, d = 10,
// CBC-P at 256 bits, all four weight schemes at alpha = 1 plus the
// alpha = 2 S-series.
// ---------------------------------------------------------------------------

struct Cell {
    n: u64,
    s_zs: f64,
    p_zs: f64,
    p_zp: f64,
}

struct Grid {
    per_scheme: Vec<(&'static str, Vec<Cell>)>,
    alpha2_s: Vec<(f64, f64)>,
}

fn grid() -> &'static Grid {
    static G: OnceLock<Grid> = OnceLock::new();
    G.get_or_init(|| {
        let ctx = PrecisionContext::new(256).unwrap();
        let schemes: [(&'static str, ProductWeights); 4] = [
            ("poly3a", ProductWeights::Poly3A),
            ("poly2", ProductWeights::Poly2),
            ("geo09", ProductWeights::Geo09),
            ("equal", ProductWeights::Equal),
        ];
        let mut per_scheme = Vec::new();
        for (token, scheme) in schemes {
            let p = sp(10, 1, scheme);
            let mut cells = Vec::new();
            for m in 7..=11u32 {
                let n = 1u64 << m;
                let z_s = cbc_s(n, 10, &p).unwrap().gv;
                let z_p = cbc_p(n, 10, &p, ctx).unwrap().gv;
                cells.push(Cell {
                    n,
                    s_zs: s_star(&z_s, &p).unwrap().value,
                    p_zs: p_star(&z_s, &p, ctx).unwrap().value,
                    p_zp: p_star(&z_p, &p, ctx).unwrap().value,
                });
            }
            per_scheme.push((token, cells));
        }
        let p2 = sp(10, 2, ProductWeights::Poly3A);
        let alpha2_s = (7..=11u32)
            .map(|m| {
                let n = 1u64 << m;
                let z = cbc_s(n, 10, &p2).unwrap().gv;
                (n as f64, s_star(&z, &p2).unwrap().value)
            })
            .collect();
        Grid {
            per_scheme,
            alpha2_s,
        }
    })
}

#[test]
fn c08_convergence_trend_slopes() {
    let start = Instant::now();
    let mut failures = Vec::new();
    let g = grid();
    let poly3a_cells = &g.per_scheme.iter().find(|(t, _)| *t == "poly3a").unwrap().1;
    let pts1: Vec<(f64, f64)> = poly3a_cells.iter().map(|c| (c.n as f64, c.s_zs)).collect();
    let slope1 = fit_slope(&pts1).unwrap();
    if slope1 > -0.35 {
        failures.push(format!("alpha=1 S*(z_S) slope {slope1:.4} > -0.35"));
    }
    let slope2 = fit_slope(&g.alpha2_s).unwrap();
    if slope2 > -0.70 {
        failures.push(format!("alpha=2 S*(z_S) slope {slope2:.4} > -0.70"));
    }
    report("C8 convergence trend slopes", start, 1800.0, failures);
}

#[test]
fn c09_cross_evaluation_marginality() {
    let start = Instant::now();
    let mut failures = Vec::new();
    let g = grid();
    for (token, cells) in &g.per_scheme {
        for c in cells {
            let ratio = c.p_zs / c.p_zp;
            if !(1.0..=1.2).contains(&ratio) {
                failures.push(format!(
                    "{token} n={}: P*(z_S)/P*(z_P) = {ratio:.6} outside [1, 1.2]",
                    c.n
                ));
            }
        }
    }
    report("C9 cross-evaluation marginality", start, 1800.0, failures);
}

#[test]
fn c10_determinism_and_symmetry() {
    let start = Instant::now();
    let mut failures = Vec::new();

    // Identical configs produce byte-identical outputs.
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    let cfg = |dir: &std::path::Path| ExperimentConfig {
        criteria: CriteriaSet::BOTH,
        m_from: 3,
        m_to: 5,
        d: 3,
        alpha: 1,
        weights: ProductWeights::Poly3A,
        precision_bits: 128,
        out_dir: dir.to_path_buf(),
        seed: 7,
        timings: false,
    };
    run_convergence(&cfg(dir_a.path())).unwrap();
    run_convergence(&cfg(dir_b.path())).unwrap();
    for name in [
        "records.csv",
        "S_zS_1_3_poly3a.txt",
        "S_zP_1_3_poly3a.txt",
        "P_zS_1_3_poly3a.txt",
        "P_zP_1_3_poly3a.txt",
    ] {
        let a = std::fs::read(dir_a.path().join(name)).unwrap();
        let b = std::fs::read(dir_b.path().join(name)).unwrap();
        if a != b {
            failures.push(format!("{name} differs between identical runs"));
        }
    }

    // z -> n - z invariance of both criteria, to 2 ulps.
    let ulps = |a: f64, b: f64| -> u64 {
        if a == b {
            0
        } else {
            (a.to_bits() as i64 - b.to_bits() as i64).unsigned_abs()
        }
    };
    let seed128 = MpReal::zero(128);
    for (n, z, alpha) in [
        (32u64, vec![1u64, 7, 13], 1u32),
        (32, vec![1, 7, 13], 2),
        (17, vec![1, 5], 1),
    ] {
        let p = sp(z.len(), alpha, ProductWeights::Poly3A);
        let gv = GeneratingVector::new(n, z).unwrap();
        let refl = gv.reflected();
        let du = ulps(s_quantity(&gv, &p).unwrap(), s_quantity(&refl, &p).unwrap());
        if du > 2 {
            failures.push(format!("S reflection gap {du} ulps at n={n}"));
        }
        let pu = ulps(
            p_star_in(&gv, &p, &seed128).unwrap().to_f64(),
            p_star_in(&refl, &p, &seed128).unwrap().to_f64(),
        );
        if pu > 2 {
            failures.push(format!("P reflection gap {pu} ulps at n={n}"));
        }
    }

    // Parallel and serial CBC agree exactly.
    let p4 = sp(4, 1, ProductWeights::Poly3A);
    let s_par = cbc_s_with(64, 4, &p4, true).unwrap();
    let s_ser = cbc_s_with(64, 4, &p4, false).unwrap();
    if s_par.gv.components() != s_ser.gv.components()
        || s_par
            .s_values
            .iter()
            .zip(s_ser.s_values.iter())
            .any(|(a, b)| a.to_bits() != b.to_bits())
    {
        failures.push("parallel and serial S construction disagree".to_string());
    }
    let p3 = sp(3, 1, ProductWeights::Poly3A);
    let ctx = PrecisionContext::new(128).unwrap();
    let p_par = cbc_p_with(32, 3, &p3, ctx, true).unwrap();
    let p_ser = cbc_p_with(32, 3, &p3, ctx, false).unwrap();
    if p_par.gv.components() != p_ser.gv.components()
        || p_par.p_star_value.to_bits() != p_ser.p_star_value.to_bits()
        || p_par.t_values != p_ser.t_values
    {
        failures.push("parallel and serial P construction disagree".to_string());
    }

    report("C10 determinism and symmetry suite", start, 120.0, failures);
}
