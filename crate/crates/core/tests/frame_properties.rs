mod common;

use common::*;
use eigenframe::analysis::{analyze, sev_residual, Analysis, Sampler};
use eigenframe::expr::{Expr, Tape};
use eigenframe::geometry::{sample_points, Frame};
use eigenframe::Tolerances;
use proptest::prelude::*;

const LO: [f64; 3] = [0.5, 0.5, 0.5];
const HI: [f64; 3] = [1.5, 1.5, 1.5];
const BASE: [f64; 3] = [1.0, 1.0, 1.0];

fn coef() -> impl Strategy<Value = f64> {
    (-4i32..=4).prop_map(|k| k as f64 / 32.0)
}

/// Component m of field j: δ_mj plus a small polynomial in u.
fn near_identity() -> impl Strategy<Value = Vec<Vec<String>>> {
    prop::collection::vec(prop::collection::vec((coef(), coef(), coef(), coef()), 3), 3).prop_map(|fields| {
        fields
            .iter()
            .enumerate()
            .map(|(j, comps)| {
                comps
                    .iter()
                    .enumerate()
                    .map(|(m, (a, b, c, d))| {
                        let delta = if m == j { 1.0 } else { 0.0 };
                        format!("{delta} + {a}*u1 + {b}*u2 + {c}*u3 + {d}*u1*u{}", (j + m) % 3 + 1)
                    })
                    .collect()
            })
            .collect()
    })
}

/// Constant fields rescaled by positive functions: every pair is in involution.
fn rescaled_constant() -> impl Strategy<Value = Vec<Vec<String>>> {
    (prop::collection::vec(coef(), 9), prop::collection::vec((coef(), 0usize..3), 3)).prop_map(|(m, scales)| {
        (0..3)
            .map(|j| {
                let (s, k) = scales[j];
                (0..3)
                    .map(|i| {
                        let entry = if i == j { 1.0 } else { 0.0 } + m[3 * j + i];
                        format!("({entry})*exp({s}*u{})", k + 1)
                    })
                    .collect()
            })
            .collect()
    })
}

fn build(fields: &[Vec<String>]) -> Frame {
    let refs: Vec<Vec<&str>> = fields.iter().map(|f| f.iter().map(String::as_str).collect()).collect();
    let slices: Vec<&[&str]> = refs.iter().map(Vec::as_slice).collect();
    frame_from_fields(&slices, &u_table(3), &LO, &HI, &BASE)
}

fn max_at_samples(exprs: &[Expr], frame: &Frame, seed: u64) -> f64 {
    let tape = Tape::compile(exprs, &frame.vars).unwrap();
    sample_points(&frame.domain, 50, seed)
        .iter()
        .map(|p| tape.eval_vec(p).unwrap().iter().fold(0.0_f64, |m, v| m.max(v.abs())))
        .fold(0.0, f64::max)
}

fn analyzed(fields: &[Vec<String>]) -> Option<Analysis> {
    analyze(&build(fields), None, &Tolerances::default()).ok()
}

/// Multiplies field j by `1 + s_j u_k^2`.
fn rescale(fields: &[Vec<String>], scales: &[(f64, usize)]) -> Vec<Vec<String>> {
    fields
        .iter()
        .zip(scales)
        .map(|(f, (s, k))| f.iter().map(|c| format!("({c})*(1 + {}*u{}^2)", s.abs(), k + 1)).collect())
        .collect()
}

fn scales() -> impl Strategy<Value = Vec<(f64, usize)>> {
    prop::collection::vec((coef(), 0usize..3), 3)
}

fn strs(fields: &[[&str; 3]]) -> Vec<Vec<String>> {
    fields.iter().map(|f| f.iter().map(|s| s.to_string()).collect()).collect()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 32, ..ProptestConfig::default() })]

    #[test]
    fn connection_identities_hold(fields in prop_oneof![near_identity(), rescaled_constant()]) {
        let a = analyzed(&fields).expect("analysis");
        prop_assert!(a.flatness.inverse < 1e-9, "{:?}", a.flatness);
        prop_assert!(a.flatness.torsion < 1e-7 && a.flatness.curvature < 1e-7, "{:?}", a.flatness);

        let c = &a.connection.c;
        let mut sums = Vec::new();
        let mut off = Vec::new();
        for k in 0..3 {
            for i in 0..3 {
                for j in 0..3 {
                    sums.push(c.get(k, i, j).clone() + c.get(k, j, i).clone());
                    if k != i && k != j {
                        off.push(c.get(k, i, j).clone());
                    }
                }
            }
        }
        let frame = &a.connection.frame;
        prop_assert_eq!(max_at_samples(&sums, frame, 1), 0.0);
        let involutive = max_at_samples(&off, frame, 2) < 1e-9;
        prop_assert_eq!(a.report.rich, involutive);
    }

    #[test]
    fn rescaled_constant_frames_are_rich(fields in rescaled_constant()) {
        prop_assert!(analyzed(&fields).expect("analysis").report.rich);
    }

    #[test]
    fn constant_eigenvalues_solve_every_system(fields in prop_oneof![near_identity(), rescaled_constant()], c in -3.0f64..3.0) {
        let a = analyzed(&fields).expect("analysis");
        let conn = &a.connection;
        let tol = Tolerances::default();
        let sampler = Sampler::new(conn.vars(), &conn.frame.domain, &conn.gamma, &tol, 5).unwrap();
        let lambdas = vec![Expr::constant(c); 3];
        prop_assert_eq!(sev_residual(conn, &lambdas, &sampler).unwrap(), 0.0);
    }

    #[test]
    fn classification_ignores_field_scaling(
        fields in prop_oneof![
            near_identity(),
            rescaled_constant(),
            Just(strs(&[["0", "1", "0"], ["1", "0", "0"], ["u2", "u3", "1"]])),
            Just(strs(&[["1", "0", "u2"], ["0", "1", "u1"], ["0", "0", "-1"]])),
            Just(strs(&[["1", "0", "0"], ["0", "1", "0"], ["u1", "u2", "1"]])),
        ],
        s in scales(),
    ) {
        let a = analyzed(&fields);
        prop_assume!(a.is_some());
        let a = a.unwrap();
        let b = analyzed(&rescale(&fields, &s)).expect("rescaled frame analyzes");
        prop_assert_eq!(a.report.rank, b.report.rank);
        prop_assert_eq!(a.report.label, b.report.label);
        prop_assert_eq!(a.report.rich, b.report.rich);
    }
}
