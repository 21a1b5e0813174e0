//! The λ-system of a frame, its rank classification, the n = 3 case
//! breakdown and the reduction of rich frames.

mod n3;
mod reduced;
mod residual;
mod rich;
mod sampler;

pub use n3::{check_frobenius_compat, iia_phi, reduce_iia, reduce_iib, IibOutcome};
pub use reduced::{LinearForm, ReducedKind, ReducedSystem};
pub use residual::{curl_residual, sev_residual};
pub use rich::{check_darboux_compat, reduce_rich, RichReduction};
pub use sampler::Sampler;

use crate::error::{Error, Result};
use crate::expr::{Expr, Tape};
use crate::geometry::{
    check_flat_symmetric, pullback_z, ChartReport, Connection, FlatnessReport, Frame, RiemannChart, Tensor3,
    ZTensor,
};
use crate::tolerances::Tolerances;
use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

/// One algebraic constraint `(λ^i − λ^k) Γ^k_ji = (λ^j − λ^k) Γ^k_ij`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Triple {
    pub k: usize,
    pub i: usize,
    pub j: usize,
}

/// Differential and algebraic parts of the eigenvalue system.
#[derive(Clone, Debug)]
pub struct LambdaSystem {
    pub n: usize,
    /// Variables the coefficients are written in (u, or w for a chart).
    pub vars: Vec<String>,
    pub gamma: Tensor3,
    /// `(i, j, Γ^j_ji)`: `r_i(λ^j) = Γ^j_ji (λ^i − λ^j)` for `i ≠ j`.
    pub pde: Vec<(usize, usize, Expr)>,
    pub rows: Vec<Triple>,
    /// Row coefficients on `λ^1..λ^n`; they sum to zero.
    pub relations: Vec<Vec<Expr>>,
    /// Coefficients on `x^k = λ^k − λ^1`, `k = 2..n`.
    pub n_matrix: Vec<Vec<Expr>>,
}

/// Orders the pair of a constraint row. Pairs containing the first index
/// put it second; other pairs are ascending.
fn oriented_pair(a: usize, b: usize) -> (usize, usize) {
    if a == 0 {
        (b, a)
    } else if b == 0 {
        (a, b)
    } else {
        (a.min(b), a.max(b))
    }
}

impl LambdaSystem {
    pub fn from_gamma(gamma: &Tensor3, vars: &[String]) -> LambdaSystem {
        let n = gamma.n();
        let mut pde = Vec::with_capacity(n * (n - 1));
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    pde.push((i, j, gamma.get(j, j, i).clone()));
                }
            }
        }
        let mut rows = Vec::new();
        let mut relations = Vec::new();
        for k in 0..n {
            let others: Vec<usize> = (0..n).filter(|&m| m != k).collect();
            for (p, &a) in others.iter().enumerate() {
                for &b in &others[p + 1..] {
                    let (i, j) = oriented_pair(a, b);
                    let g_ji = gamma.get(k, j, i);
                    let g_ij = gamma.get(k, i, j);
                    let mut coeffs = vec![Expr::zero(); n];
                    coeffs[i] = g_ji.clone();
                    coeffs[j] = -g_ij;
                    coeffs[k] = g_ij - g_ji;
                    rows.push(Triple { k, i, j });
                    relations.push(coeffs);
                }
            }
        }
        let n_matrix = relations.iter().map(|r| r[1..].to_vec()).collect();
        LambdaSystem {
            n,
            vars: vars.to_vec(),
            gamma: gamma.clone(),
            pde,
            rows,
            relations,
            n_matrix,
        }
    }

    /// Coefficient of `r_i(λ^j)`.
    pub fn pde_coeff(&self, i: usize, j: usize) -> &Expr {
        self.gamma.get(j, j, i)
    }
}

/// The λ-system of a frame, with coefficients in the state variables.
pub fn build_lambda_system(conn: &Connection) -> LambdaSystem {
    LambdaSystem::from_gamma(&conn.gamma, conn.vars())
}

/// The λ-system pulled back to a chart, with `Z` in place of `Γ`.
pub fn build_lambda_system_z(z: &ZTensor) -> LambdaSystem {
    LambdaSystem::from_gamma(&z.z, &z.w_vars)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RankInfo {
    pub rank: usize,
    pub constant: bool,
    pub per_sample: Vec<usize>,
}

/// Numeric rank of `N` at each sample by singular values.
pub fn classify_rank(sys: &LambdaSystem, sampler: &Sampler, rank_tol: f64) -> Result<RankInfo> {
    let rows = sys.n_matrix.len();
    let cols = sys.n.saturating_sub(1);
    if rows == 0 || cols == 0 {
        return Ok(RankInfo {
            rank: 0,
            constant: true,
            per_sample: vec![0; sampler.len()],
        });
    }
    let flat: Vec<Expr> = sys.n_matrix.iter().flatten().cloned().collect();
    let tape = Tape::compile(&flat, &sys.vars)?;
    let per_sample = sampler
        .points
        .par_iter()
        .zip(&sampler.scale)
        .map(|(p, scale)| {
            let v = tape.eval_vec(p)?;
            let m = DMatrix::from_row_slice(rows, cols, &v);
            let sv = m.singular_values();
            let smax = sv.iter().fold(0.0_f64, |a, b| a.max(*b));
            let cut = (rank_tol * smax).max(sampler.zero_tol * scale);
            Ok(sv.iter().filter(|s| **s > cut).count())
        })
        .collect::<Result<Vec<usize>>>()?;
    let rank = per_sample.iter().copied().max().unwrap_or(0);
    let constant = per_sample.iter().all(|&r| r == rank);
    Ok(RankInfo {
        rank,
        constant,
        per_sample,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum CaseLabel {
    #[serde(rename = "Rich-Rank0")]
    RichRank0,
    #[serde(rename = "Rich-Constrained")]
    RichConstrained,
    #[serde(rename = "N3-IIa")]
    N3IIa,
    #[serde(rename = "N3-IIb")]
    N3IIb,
    #[serde(rename = "MaxRank-Trivial")]
    MaxRankTrivial,
    #[serde(rename = "Unclassified-n≥4")]
    Unclassified,
}

impl CaseLabel {
    pub fn name(self) -> &'static str {
        match self {
            CaseLabel::RichRank0 => "Rich-Rank0",
            CaseLabel::RichConstrained => "Rich-Constrained",
            CaseLabel::N3IIa => "N3-IIa",
            CaseLabel::N3IIb => "N3-IIb",
            CaseLabel::MaxRankTrivial => "MaxRank-Trivial",
            CaseLabel::Unclassified => "Unclassified-n≥4",
        }
    }

    pub fn from_name(s: &str) -> Option<CaseLabel> {
        [
            CaseLabel::RichRank0,
            CaseLabel::RichConstrained,
            CaseLabel::N3IIa,
            CaseLabel::N3IIb,
            CaseLabel::MaxRankTrivial,
            CaseLabel::Unclassified,
        ]
        .into_iter()
        .find(|l| l.name() == s || (s == "Unclassified-n>=4" && *l == CaseLabel::Unclassified))
    }
}

impl std::fmt::Display for CaseLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Verdict {
    Holds { residual: f64 },
    Fails { residual: f64 },
    NotApplicable,
}

impl Verdict {
    pub fn from_residual(residual: f64, tol: f64) -> Verdict {
        if residual < tol {
            Verdict::Holds { residual }
        } else {
            Verdict::Fails { residual }
        }
    }

    pub fn holds(&self) -> bool {
        matches!(self, Verdict::Holds { .. })
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Verdict::Holds { residual } => write!(f, "holds (residual {residual:.3e})"),
            Verdict::Fails { residual } => write!(f, "fails (residual {residual:.3e})"),
            Verdict::NotApplicable => f.write_str("n/a"),
        }
    }
}

/// Outcome of the classification.
#[derive(Clone, Debug, Serialize)]
pub struct CaseReport {
    pub n: usize,
    pub rank: usize,
    pub rank_constant: bool,
    pub rich: bool,
    pub label: CaseLabel,
    /// Relabeling applied for the n = 3 reductions: new index `a` is old `perm[a]`.
    pub relabeling: Vec<usize>,
    /// `(α_1, .., α_n)` at the base point, scaled so the first non-zero entry is 1.
    pub alpha: Option<Vec<f64>>,
    pub relation: Option<String>,
    pub compat: Verdict,
    pub trivial_only: bool,
    pub family: String,
    /// Index sets forced to share one eigenvalue, 0-based.
    pub index_sets: Vec<Vec<usize>>,
    pub notes: Vec<String>,
}

/// Formats `Σ α_i λ^i = 0` with positive terms on the left, e.g. `λ1+λ3=2λ2`.
pub fn format_relation(alpha: &[f64]) -> String {
    fn coef(c: f64) -> String {
        let r = c.round();
        let s = if (c - r).abs() < 1e-9 { format!("{}", r as i64) } else { format!("{c:.6}") };
        if s == "1" {
            String::new()
        } else {
            s
        }
    }
    let side = |positive: bool| -> String {
        let terms: Vec<String> = alpha
            .iter()
            .enumerate()
            .filter(|(_, a)| a.abs() > 1e-12 && ((**a > 0.0) == positive))
            .map(|(i, a)| format!("{}λ{}", coef(a.abs()), i + 1))
            .collect();
        if terms.is_empty() {
            "0".into()
        } else {
            terms.join("+")
        }
    };
    format!("{}={}", side(true), side(false))
}

/// True when every bracket `[r_i, r_j]` stays in `span{r_i, r_j}`.
pub fn is_rich(c: &Tensor3, sampler: &Sampler) -> Result<bool> {
    let n = c.n();
    let mut exprs = Vec::new();
    for k in 0..n {
        for i in 0..n {
            for j in (i + 1)..n {
                if k != i && k != j {
                    exprs.push(c.get(k, i, j).clone());
                }
            }
        }
    }
    if exprs.is_empty() {
        return Ok(true);
    }
    Ok(sampler.zero_mask(&exprs)?.into_iter().all(|z| z))
}

/// The rank-one relation at every sample, each scaled so its largest entry
/// is `+1`, together with the magnitude of the row it came from.
fn relation_samples(sys: &LambdaSystem, sampler: &Sampler) -> Result<Vec<(Vec<f64>, f64)>> {
    let n = sys.n;
    let flat: Vec<Expr> = sys.relations.iter().flatten().cloned().collect();
    let vals = sampler.eval(&flat)?;
    Ok(vals
        .into_iter()
        .map(|v| {
            let row = (0..sys.relations.len())
                .max_by(|&a, &b| {
                    let ma = v[a * n..(a + 1) * n].iter().fold(0.0_f64, |m, x| m.max(x.abs()));
                    let mb = v[b * n..(b + 1) * n].iter().fold(0.0_f64, |m, x| m.max(x.abs()));
                    ma.total_cmp(&mb)
                })
                .unwrap_or(0);
            let r = &v[row * n..(row + 1) * n];
            let lead = r.iter().copied().max_by(|a, b| a.abs().total_cmp(&b.abs())).unwrap_or(0.0);
            if lead == 0.0 {
                (vec![0.0; n], 0.0)
            } else {
                (r.iter().map(|x| x / lead).collect(), lead.abs())
            }
        })
        .collect())
}

/// First permutation, in lexicographic order, for which the relabeled
/// `c^1_32`, `Γ^1_32` and `Γ^1_23` are non-zero at every sample.
pub fn iia_permutation(gamma: &Tensor3, sampler: &Sampler) -> Result<Option<Vec<usize>>> {
    for perm in permutations(3) {
        let g = gamma.permuted(&perm);
        let g132 = g.get(0, 2, 1);
        let g123 = g.get(0, 1, 2);
        let c = g132 - g123;
        if sampler.nonzero_everywhere(&c)?
            && sampler.nonzero_everywhere(g132)?
            && sampler.nonzero_everywhere(g123)?
        {
            return Ok(Some(perm));
        }
    }
    Ok(None)
}

/// All permutations of `0..n` in lexicographic order.
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut p: Vec<usize> = (0..n).collect();
    loop {
        out.push(p.clone());
        let Some(i) = (0..n.saturating_sub(1)).rev().find(|&i| p[i] < p[i + 1]) else {
            break;
        };
        let j = (i + 1..n).rev().find(|&j| p[j] > p[i]).unwrap();
        p.swap(i, j);
        p[i + 1..].reverse();
    }
    out
}

/// Assigns the case label and, for n = 3 with rank one, the relation and the
/// relabeling used by the reductions.
pub fn classify_case(sys: &LambdaSystem, rank: &RankInfo, rich: bool, sampler: &Sampler, base: &[f64]) -> Result<CaseReport> {
    let n = sys.n;
    if !rank.constant {
        let differing: Vec<String> = rank
            .per_sample
            .iter()
            .enumerate()
            .filter(|(_, r)| **r != rank.rank)
            .take(5)
            .map(|(s, r)| format!("rank {r} at {:?}", sampler.points[s]))
            .collect();
        return Err(Error::NonConstantRank(format!(
            "maximum rank {} but {}; shrink the domain box",
            rank.rank,
            differing.join(", ")
        )));
    }
    let mut report = CaseReport {
        n,
        rank: rank.rank,
        rank_constant: rank.constant,
        rich,
        label: CaseLabel::Unclassified,
        relabeling: (0..n).collect(),
        alpha: None,
        relation: None,
        compat: Verdict::NotApplicable,
        trivial_only: false,
        family: "unknown".into(),
        index_sets: Vec::new(),
        notes: Vec::new(),
    };
    if n >= 2 && rank.rank == n - 1 {
        report.label = CaseLabel::MaxRankTrivial;
        report.trivial_only = true;
        report.family = "trivial only (1 constant)".into();
        return Ok(report);
    }
    if rank.rank == 0 {
        if !rich {
            return Err(Error::Classification("N vanishes but the frame is not rich".into()));
        }
        report.label = CaseLabel::RichRank0;
        report.family = format!("{n} functions of 1 variable");
        return Ok(report);
    }
    if rich {
        report.label = CaseLabel::RichConstrained;
        return Ok(report);
    }
    if n != 3 || rank.rank != 1 {
        return Ok(report);
    }

    let samples = relation_samples(sys, sampler)?;
    let zero: Vec<bool> = (0..n)
        .map(|i| {
            samples
                .iter()
                .enumerate()
                .all(|(s, (a, mag))| (a[i] * mag).abs() < sampler.zero_tol * sampler.scale[s])
        })
        .collect();
    let at_base = {
        let flat: Vec<Expr> = sys.relations.iter().flatten().cloned().collect();
        let base_sampler = Sampler {
            vars: sampler.vars.clone(),
            points: vec![base.to_vec()],
            scale: vec![sampler.scale.iter().copied().fold(1.0, f64::max)],
            zero_tol: sampler.zero_tol,
        };
        let v = &base_sampler.eval(&flat)?[0];
        let row = (0..sys.relations.len())
            .max_by(|&a, &b| {
                let ma = v[a * n..(a + 1) * n].iter().fold(0.0_f64, |m, x| m.max(x.abs()));
                let mb = v[b * n..(b + 1) * n].iter().fold(0.0_f64, |m, x| m.max(x.abs()));
                ma.total_cmp(&mb)
            })
            .unwrap_or(0);
        let mut a: Vec<f64> = v[row * n..(row + 1) * n].to_vec();
        for (i, z) in zero.iter().enumerate() {
            if *z {
                a[i] = 0.0;
            }
        }
        // relation coefficients may all vanish at the base point itself;
        // the direction is then read at the sample where they are largest
        if a.iter().all(|x| x.abs() < sampler.zero_tol) {
            if let Some((s, _)) = samples.iter().max_by(|x, y| x.1.total_cmp(&y.1)) {
                a = s.clone();
            }
        }
        let first = a.iter().copied().find(|x| *x != 0.0).unwrap_or(1.0);
        a.iter().map(|x| x / first).collect::<Vec<f64>>()
    };
    report.relation = Some(format_relation(&at_base));
    report.alpha = Some(at_base);

    match zero.iter().filter(|z| **z).count() {
        0 => {
            report.label = CaseLabel::N3IIa;
            match iia_permutation(&sys.gamma, sampler)? {
                Some(p) => report.relabeling = p,
                None => {
                    return Err(Error::Degenerate(
                        "no relabeling makes c^1_32, Γ^1_32 and Γ^1_23 non-zero at every sample".into(),
                    ))
                }
            }
        }
        1 => {
            report.label = CaseLabel::N3IIb;
            let z = zero.iter().position(|z| *z).unwrap();
            let mut perm = vec![z];
            perm.extend((0..n).filter(|&i| i != z));
            report.relabeling = perm;
        }
        _ => {
            return Err(Error::Classification(format!(
                "rank-one relation {:?} has more than one vanishing coefficient",
                report.alpha
            )))
        }
    }
    Ok(report)
}

/// Everything the pipeline learns about a frame before integration.
#[derive(Clone, Debug)]
pub struct Analysis {
    pub connection: Connection,
    pub system: LambdaSystem,
    pub rank: RankInfo,
    pub report: CaseReport,
    pub flatness: FlatnessReport,
    pub chart: Option<ChartAnalysis>,
    pub reduced: Option<ReducedSystem>,
    /// Per-condition compatibility residuals of the reduced system.
    pub compat_residuals: Vec<(String, f64)>,
}

#[derive(Clone, Debug)]
pub struct ChartAnalysis {
    pub chart: RiemannChart,
    pub z: ZTensor,
    pub report: ChartReport,
    /// `max |Z^k_ij|` over distinct `i, j, k` at w-samples.
    pub off_diagonal_z: f64,
}

/// Runs geometry, rank and case classification and the matching reduction.
pub fn analyze(frame: &Frame, chart: Option<&RiemannChart>, tol: &Tolerances) -> Result<Analysis> {
    let n = frame.n();
    if n < 2 {
        return Err(Error::Config("the frame needs at least two fields".into()));
    }
    let conn = Connection::build(frame, tol)?;
    let sampler = Sampler::new(conn.vars(), &frame.domain, &conn.gamma, tol, tol.seed)?;
    let flatness = check_flat_symmetric(&conn, &sampler.points)?;
    let system = build_lambda_system(&conn);
    let rank = classify_rank(&system, &sampler, tol.rank_tol)?;
    let rich = is_rich(&conn.c, &sampler)?;
    let mut report = classify_case(&system, &rank, rich, &sampler, &frame.base)?;
    let mut reduced = None;
    let mut compat_residuals = Vec::new();
    let mut chart_analysis = None;

    match report.label {
        CaseLabel::N3IIa => {
            let red = reduce_iia(&conn, &report, &sampler)?;
            let (max, per) = check_frobenius_compat(&conn, &red, &sampler)?;
            report.compat = Verdict::from_residual(max, tol.compat_tol);
            compat_residuals = per;
            if report.compat.holds() {
                report.family = "2 constants".into();
            } else {
                report.trivial_only = true;
                report.family = "trivial only (1 constant)".into();
            }
            reduced = Some(red);
        }
        CaseLabel::N3IIb => match reduce_iib(&conn, &report, &sampler)? {
            IibOutcome::Reduced(red) => {
                report.compat = Verdict::Holds { residual: red_gap(&conn, &report, &sampler)? };
                report.family = "1 function of 1 variable + 1 constant".into();
                reduced = Some(red);
            }
            IibOutcome::Trivial { gap } => {
                report.compat = Verdict::Fails { residual: gap };
                report.trivial_only = true;
                report.family = "trivial only (1 constant)".into();
                report
                    .notes
                    .push(format!("Γ^3_31 − Γ^2_21 reaches {gap:.3e}: only trivial solutions"));
            }
        },
        CaseLabel::RichRank0 | CaseLabel::RichConstrained | CaseLabel::MaxRankTrivial if rich => {
            if let Some(ch) = chart {
                let (z, chart_report) = pullback_z(&conn, ch, tol)?;
                let w_sampler = Sampler::new(&z.w_vars, &ch.w_box, &z.z, tol, tol.seed ^ 0x77)?;
                let mut off = 0.0_f64;
                for k in 0..n {
                    for i in 0..n {
                        for j in 0..n {
                            if i != j && k != i && k != j {
                                off = off.max(w_sampler.max_abs(z.z.get(k, i, j))?);
                            }
                        }
                    }
                }
                let rr = reduce_rich(&z.z, &z.w_vars, &w_sampler)?;
                apply_rich(&mut report, &rr);
                if report.label != CaseLabel::MaxRankTrivial && !rr.trivial {
                    let (max, per) = check_darboux_compat(&rr.system, &w_sampler)?;
                    report.compat = Verdict::from_residual(max, tol.compat_tol);
                    compat_residuals = per;
                    reduced = Some(rr.system);
                }
                chart_analysis = Some(ChartAnalysis {
                    chart: ch.clone(),
                    z,
                    report: chart_report,
                    off_diagonal_z: off,
                });
            } else {
                let rr = reduce_rich(&conn.gamma, conn.vars(), &sampler)?;
                apply_rich(&mut report, &rr);
                if report.label != CaseLabel::MaxRankTrivial && !rr.trivial {
                    report.notes.push("no chart given: the rich system is classified but not reduced".into());
                }
            }
        }
        _ => {}
    }
    Ok(Analysis {
        connection: conn,
        system,
        rank,
        report,
        flatness,
        chart: chart_analysis,
        reduced,
        compat_residuals,
    })
}

fn red_gap(conn: &Connection, report: &CaseReport, sampler: &Sampler) -> Result<f64> {
    let g = conn.gamma.permuted(&report.relabeling);
    sampler.max_abs(&(g.get(2, 2, 0) - g.get(1, 1, 0)))
}

fn apply_rich(report: &mut CaseReport, rr: &RichReduction) {
    report.index_sets = rr.sets.clone();
    let s0 = rr.sets.len();
    let s1 = rr.simple.len();
    if report.label == CaseLabel::MaxRankTrivial {
        return;
    }
    if rr.trivial {
        report.trivial_only = true;
        report.family = "trivial only (1 constant)".into();
    } else if report.label == CaseLabel::RichConstrained {
        report.family = format!("{s1} functions of 1 variable + {s0} constant{}", if s0 == 1 { "" } else { "s" });
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_expr;
    use crate::geometry::DomainBox;

    fn frame(rows: &[&[&str]], lo: &[f64], hi: &[f64]) -> Frame {
        let vars: Vec<String> = (1..=lo.len()).map(|i| format!("u{i}")).collect();
        let v: Vec<&str> = vars.iter().map(|s| s.as_str()).collect();
        let r = rows.iter().map(|row| row.iter().map(|s| parse_expr(s, &v).unwrap()).collect()).collect();
        let base = lo.iter().zip(hi).map(|(a, b)| 0.5 * (a + b)).collect();
        Frame::new(vars, r, DomainBox::new(lo.to_vec(), hi.to_vec()).unwrap(), base).unwrap()
    }

    #[test]
    fn permutations_are_lexicographic() {
        let p = permutations(3);
        assert_eq!(p.len(), 6);
        assert_eq!(p[0], vec![0, 1, 2]);
        assert_eq!(p[1], vec![0, 2, 1]);
        assert_eq!(p[5], vec![2, 1, 0]);
    }

    #[test]
    fn relation_formatting() {
        assert_eq!(format_relation(&[1.0, -2.0, 1.0]), "λ1+λ3=2λ2");
        assert_eq!(format_relation(&[0.0, 1.0, -1.0]), "λ2=λ3");
        assert_eq!(format_relation(&[1.0, -1.0, 0.0]), "λ1=λ2");
    }

    #[test]
    fn pde_table_has_n_times_n_minus_one_entries() {
        let f = frame(&[&["1", "0", "0"], &["0", "1", "0"], &["u2", "u1", "-1"]], &[-1.0; 3], &[1.0; 3]);
        let conn = Connection::build(&f, &Tolerances::default()).unwrap();
        let sys = build_lambda_system(&conn);
        assert_eq!(sys.pde.len(), 6);
        assert_eq!(sys.rows.len(), 3);
        assert_eq!(sys.n_matrix.len(), 3);
        assert!(sys.n_matrix.iter().all(|r| r.len() == 2));
    }

    #[test]
    fn rank_one_commuting_frame_is_rich_constrained() {
        let f = frame(&[&["1", "0", "0"], &["0", "1", "0"], &["u2", "u1", "-1"]], &[-1.0; 3], &[1.0; 3]);
        let a = analyze(&f, None, &Tolerances::default()).unwrap();
        assert_eq!(a.rank.rank, 1);
        assert!(a.report.rich);
        assert_eq!(a.report.label, CaseLabel::RichConstrained);
        assert_eq!(a.report.index_sets, vec![vec![0, 1]]);
    }

    #[test]
    fn constant_frame_is_rank_zero() {
        let f = frame(&[&["1", "2", "0"], &["0", "1", "3"], &["1", "0", "1"]], &[0.0; 3], &[1.0; 3]);
        let a = analyze(&f, None, &Tolerances::default()).unwrap();
        assert_eq!(a.report.label, CaseLabel::RichRank0);
        assert_eq!(a.report.family, "3 functions of 1 variable");
    }

    #[test]
    fn n_matrix_rows_match_the_three_by_three_layout() {
        let f = frame(
            &[&["u1+u3", "1", "u2"], &["1", "0", "u3"], &["0", "0", "-u2"]],
            &[0.1, 0.5, 0.1],
            &[1.0, 1.5, 1.0],
        );
        let conn = Connection::build(&f, &Tolerances::default()).unwrap();
        let sys = build_lambda_system(&conn);
        let g = &conn.gamma;
        // rows written out by hand with 0-based indices
        let expected = [
            [g.get(0, 2, 1).clone(), -g.get(0, 1, 2)],
            [g.get(1, 2, 0) - g.get(1, 0, 2), g.get(1, 0, 2).clone()],
            [g.get(2, 0, 1).clone(), g.get(2, 1, 0) - g.get(2, 0, 1)],
        ];
        let a = Tape::compile(&sys.n_matrix.iter().flatten().cloned().collect::<Vec<_>>(), &f.vars).unwrap();
        let b = Tape::compile(&expected.iter().flatten().cloned().collect::<Vec<_>>(), &f.vars).unwrap();
        for p in crate::geometry::sample_points(&f.domain, 20, 5) {
            let x = a.eval_vec(&p).unwrap();
            let y = b.eval_vec(&p).unwrap();
            for (s, t) in x.iter().zip(&y) {
                assert!((s - t).abs() <= 1e-12 * (1.0 + t.abs()));
            }
        }
    }
}
