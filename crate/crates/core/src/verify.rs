//! End-to-end numerical verification: the major-arc sum/integral
//! approximation, the Poisson transfer identity, minor-arc Weyl bounds, and
//! the boundedness-criterion cross-check against empirical divergence.

use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use thiserror::Error;

use crate::arcs::{self, ArcClass};
use crate::expsum::{self, PhaseContext, Quadrants};
use crate::fixed::FixedReal;
use crate::newton;
use crate::numtheory;
use crate::oscint::{self, CutoffKind, OscConfig, Side};
use crate::polynomial::Polynomial;
use crate::rational::{self, RationalError};
use crate::stats;

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error(transparent)]
    Rational(#[from] RationalError),
    #[error(transparent)]
    Expsum(#[from] expsum::ExpsumError),
    #[error("denominator {0} too large for a major-arc identity check")]
    DenominatorTooLarge(BigRational),
    #[error("quadrature did not converge (estimated error {0:.3e})")]
    QuadratureBudget(f64),
}

/// Outcome of one identity check: both sides, their distance, and the
/// tolerance it was judged against.
#[derive(Debug, Clone)]
pub struct IdentityReport {
    pub lhs: Complex64,
    pub rhs: Complex64,
    pub residual: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub arc_class: ArcClass,
    pub q: u64,
    pub beta: f64,
    pub w_window: Option<i64>,
    pub quadrature_tol: f64,
}

fn small_rational(approx: &rational::RationalApprox) -> Result<(i64, u64), VerifyError> {
    match (approx.a.to_i64(), approx.q.to_u64()) {
        (Some(a), Some(q)) if q <= 1 << 20 => Ok((a, q)),
        _ => Err(VerifyError::DenominatorTooLarge(BigRational::new(
            approx.a.clone(),
            approx.q.clone(),
        ))),
    }
}

fn beta_to_fixed(beta: &BigRational) -> FixedReal {
    FixedReal::from_ratio(beta.numer(), beta.denom())
}

/// Compares the weighted discrete block against the fiberwise
/// Gauss-sum/oscillatory-integral factorization, over the positive quadrant:
///
/// `H_j(xi) phi(q / 2^{j1/10})  ~=  sum_{t2} (chi_{j2}(t2)/t2) S^{t2}(a/q)
/// H_{j1}^{t2}(beta)`.
///
/// Tolerance: `2^{-j1/2}`, conservative against the `O(2^{-8 j1/10})` error
/// of the underlying approximation.
pub fn major_arc_approx_check(
    p: &Polynomial,
    j: (u64, u64),
    xi3: &BigRational,
    vertex: (u32, u32),
) -> Result<IdentityReport, VerifyError> {
    let report = arcs::classify(j, xi3, vertex)?;
    let (a, q) = small_rational(&report.approx)?;
    let beta_fixed = beta_to_fixed(&report.approx.beta);
    let beta = report.approx.beta.to_f64().unwrap_or(0.0);
    let quadrature_tol = 1e-12;

    let ctx = PhaseContext::with_split_xi3(FixedReal::ZERO, FixedReal::ZERO, a, q, beta_fixed);
    let block = expsum::chi_block(p, j, &ctx, Quadrants::PositivePositive)?;
    let smooth_gate = oscint::phi(q as f64 / 2f64.powf(j.0 as f64 / 10.0));
    let lhs = block.value * smooth_gate;

    // beta = 0 makes the fiber integral independent of t2
    let shared_integral = if beta == 0.0 {
        let r = oscint::osc_1d(p, 1, j.0, 0.0, Side::Positive, quadrature_tol);
        if !r.converged {
            return Err(VerifyError::QuadratureBudget(r.quadrature_error));
        }
        Some(r.value)
    } else {
        None
    };
    let (lo2, hi2) = if j.1 == 0 {
        (1u64, 1u64)
    } else {
        (1 << (j.1 - 1), 1 << j.1)
    };
    let mut rhs = Complex64::new(0.0, 0.0);
    for t2 in lo2..=hi2 {
        let w2 = expsum::sharp_window_weight(j.1, t2);
        if w2 == 0.0 {
            continue;
        }
        let fiber = numtheory::gauss_fiber(p, t2 as i64, a, q);
        let integral = match shared_integral {
            Some(v) => v,
            None => {
                let r = oscint::osc_1d(p, t2 as i64, j.0, beta, Side::Positive, quadrature_tol);
                if !r.converged {
                    return Err(VerifyError::QuadratureBudget(r.quadrature_error));
                }
                r.value
            }
        };
        // the identity's Gauss sum carries e^{-2 pi i (a/q) P}: conjugate
        rhs += fiber.value.conj() * integral * (w2 / t2 as f64);
    }
    let residual = (lhs - rhs).norm();
    let tolerance = 2f64.powf(-(j.0 as f64) / 2.0);
    Ok(IdentityReport {
        lhs,
        rhs,
        residual,
        tolerance,
        passed: residual <= tolerance,
        arc_class: report.klass,
        q,
        beta,
        w_window: None,
        quadrature_tol,
    })
}

/// Tail estimate `sum_{|w| > window} (|w|+1)^{-5}` over the integer lattice.
pub fn poisson_tail_bound(window: i64) -> f64 {
    let mut total = 0.0;
    let mut ring = window + 1;
    loop {
        let count = 8.0 * ring as f64;
        let term = count * ((ring as f64) + 1.0).powi(-5);
        total += term;
        if term < 1e-18 || ring > window + 10_000 {
            break;
        }
        ring += 1;
    }
    total
}

/// Compares the two-sided weighted block against the truncated Poisson dual:
///
/// `H_j(xi)  =  sum_w S_w(a/q) Hosc_j(-w1/q, -w2/q, -beta)`,
///
/// with `|w1|, |w2| <= w_window`. The tolerance is the lattice tail bound
/// plus accumulated quadrature error.
pub fn poisson_identity_check(
    p: &Polynomial,
    j: (u64, u64),
    xi3: &BigRational,
    vertex: (u32, u32),
    w_window: i64,
) -> Result<IdentityReport, VerifyError> {
    assert!(w_window >= 0);
    let report = arcs::classify(j, xi3, vertex)?;
    let (a, q) = small_rational(&report.approx)?;
    let beta_fixed = beta_to_fixed(&report.approx.beta);
    let beta = report.approx.beta.to_f64().unwrap_or(0.0);
    let quadrature_tol = 1e-11;

    let ctx = PhaseContext::with_split_xi3(FixedReal::ZERO, FixedReal::ZERO, a, q, beta_fixed);
    let lhs = expsum::chi_block(p, j, &ctx, Quadrants::Full)?.value;

    let mut freqs = Vec::new();
    let mut gauss = Vec::new();
    for w1 in -w_window..=w_window {
        for w2 in -w_window..=w_window {
            freqs.push((-(w1 as f64) / q as f64, -(w2 as f64) / q as f64));
            gauss.push(numtheory::gauss_full(p, a, q, (w1, w2)).value);
        }
    }
    let cfg = OscConfig {
        tol: quadrature_tol,
        side: Side::TwoSided,
        cutoff: CutoffKind::SharpWindow,
    };
    let integrals = oscint::osc_2d_batch(p, j, -beta, &freqs, &cfg);
    let mut rhs = Complex64::new(0.0, 0.0);
    let mut quad_err = 0.0;
    for (g, r) in gauss.iter().zip(&integrals) {
        if !r.converged {
            return Err(VerifyError::QuadratureBudget(r.quadrature_error));
        }
        rhs += g * r.value;
        quad_err += g.norm() * r.quadrature_error;
    }
    let residual = (lhs - rhs).norm();
    let tolerance = poisson_tail_bound(w_window) + quad_err + lhs.norm() * 1e-12;
    Ok(IdentityReport {
        lhs,
        rhs,
        residual,
        tolerance,
        passed: residual <= tolerance,
        arc_class: report.klass,
        q,
        beta,
        w_window: Some(w_window),
        quadrature_tol,
    })
}

/// Per-cell data of a minor-arc scan.
#[derive(Debug, Clone)]
pub struct MinorArcCell {
    pub j: (u64, u64),
    pub q_log2: f64,
    pub minor: bool,
    /// `|H_j|` over the positive quadrant.
    pub dyadic_abs: f64,
    /// `|weyl_sum| 2^{-(j1+j2)}` over the same block.
    pub weyl_ratio: f64,
    /// Summation-by-parts majorant `16 * 2^{-(j1+j2)} * sup |partial sums|`.
    pub sbp_bound: f64,
    /// `dyadic_abs <= sbp_bound` (provable; recorded as a sanity flag).
    pub sbp_ok: bool,
}

#[derive(Debug, Clone)]
pub struct MinorArcReport {
    pub cells: Vec<MinorArcCell>,
    /// Power-law fit of `weyl_ratio` against `2^{j1}` over the minor cells.
    pub delta_hat: Option<f64>,
    pub fit_r_squared: Option<f64>,
}

/// Evaluates dyadic pieces and normalized Weyl sums along a ray of indices,
/// fits the decay exponent over the cells that genuinely lie in the minor
/// regime, and records the summation-by-parts domination.
pub fn minor_arc_bound_check(
    p: &Polynomial,
    xi3: &BigRational,
    ray: &[(u64, u64)],
) -> Result<MinorArcReport, VerifyError> {
    let hull = newton::build(p);
    let xi_fixed = FixedReal::from_ratio(xi3.numer(), xi3.denom());
    let ctx = PhaseContext::from_fixed(FixedReal::ZERO, FixedReal::ZERO, xi_fixed);
    let mut cells = Vec::with_capacity(ray.len());
    for &j in ray {
        let vertex = hull.vertices[hull.dual_face_of(j)];
        let report = arcs::classify(j, xi3, vertex)?;
        let minor = report.klass == ArcClass::Minor;
        let (l1, h1) = expsum::dyadic_block(j.0);
        let (l2, h2) = expsum::dyadic_block(j.1);
        let dyadic = expsum::dyadic_piece(p, j, &ctx, Quadrants::PositivePositive)?;
        let weyl = expsum::weyl_sum(p, (l1, h1), (l2, h2), &ctx)?;
        let scale = 2f64.powi(-((j.0 + j.1) as i32));
        let sup = expsum::weyl_partial_sup(p, (l1, h1), (l2, h2), &ctx)?;
        let sbp_bound = 16.0 * scale * sup;
        cells.push(MinorArcCell {
            j,
            q_log2: report.approx.q.bits() as f64,
            minor,
            dyadic_abs: dyadic.value.norm(),
            weyl_ratio: weyl.value.norm() * scale,
            sbp_bound,
            sbp_ok: dyadic.value.norm() <= sbp_bound * (1.0 + 1e-9) + 1e-12,
        });
    }
    let samples: Vec<(f64, f64)> = cells
        .iter()
        .filter(|c| c.minor && c.weyl_ratio > 0.0)
        .map(|c| (2f64.powi(c.j.0 as i32), c.weyl_ratio))
        .collect();
    let (delta_hat, fit_r_squared) = match numtheory::fit_decay(&samples) {
        Ok(fit) => (Some(fit.exponent), Some(fit.r_squared)),
        Err(_) => (None, None),
    };
    Ok(MinorArcReport {
        cells,
        delta_hat,
        fit_r_squared,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum EmpiricalKind {
    Bounded,
    Divergent,
    Inconclusive,
}

#[derive(Debug, Clone)]
pub struct EmpiricalVerdict {
    pub kind: EmpiricalKind,
    /// Slope of the running sup per doubling of `N`.
    pub slope: f64,
    pub r_squared: f64,
    pub sups: Vec<expsum::SupRow>,
}

/// The criterion verdict next to the empirical scan verdict.
#[derive(Debug, Clone)]
pub struct Verdict {
    pub theorem_bounded: bool,
    pub witness: Option<(u32, u32)>,
    pub empirics: EmpiricalVerdict,
    /// False only on a confident contradiction (divergent-vs-bounded or
    /// clearly-bounded-vs-unbounded); inconclusive scans never contradict.
    pub agree: bool,
}

/// Divergence thresholds: growth above `0.05` per doubling with good fit is
/// divergent, absolute slope at most `0.01` is bounded, anything else is
/// inconclusive.
pub const DIVERGENT_SLOPE: f64 = 0.05;
pub const BOUNDED_SLOPE: f64 = 0.01;
pub const FIT_CONFIDENCE: f64 = 0.9;

/// Frequency grid for divergence scans: shrinking dyadic values
/// `1.01 * 2^-k` whose maturing sums witness the unbounded sup, plus a few
/// generic points. The grid sup is a lower bound of the true sup over all
/// frequencies, so growth is conclusive and saturation is evidence, not
/// proof.
pub fn standard_probe_grid(depth: u32) -> Vec<FixedReal> {
    let mut grid = Vec::new();
    for k in 1..=depth {
        grid.push(FixedReal::from_f64(1.01 * 2f64.powi(-(k as i32))));
    }
    for k in 1..=8u32 {
        grid.push(FixedReal::from_f64(k as f64 / 9.0));
    }
    grid
}

/// Runs the running-sup scan of the full two-sided sum over a frequency grid
/// and compares the fitted growth against the even-vertex criterion.
pub fn theorem_crosscheck(
    p: &Polynomial,
    xi3_grid: &[FixedReal],
    schedule: &[u64],
) -> Result<Verdict, VerifyError> {
    assert!(
        schedule.len() >= 2
            && *schedule.last().unwrap() >= schedule[0] << 5,
        "schedule must span at least five doublings"
    );
    let verdict = newton::build(p).decide_boundedness();
    let grid: Vec<PhaseContext> = xi3_grid
        .iter()
        .map(|&x| PhaseContext::from_fixed(FixedReal::ZERO, FixedReal::ZERO, x))
        .collect();
    let sups = expsum::partial_sup_scan(p, &grid, schedule, Quadrants::Full)?;
    let xs: Vec<f64> = sups.iter().map(|r| (r.n as f64).log2()).collect();
    let ys: Vec<f64> = sups.iter().map(|r| r.sup_abs).collect();
    let fit = stats::linear_fit(&xs, &ys);
    let kind = if fit.slope > DIVERGENT_SLOPE && fit.r_squared >= FIT_CONFIDENCE {
        EmpiricalKind::Divergent
    } else if fit.slope.abs() <= BOUNDED_SLOPE {
        EmpiricalKind::Bounded
    } else {
        EmpiricalKind::Inconclusive
    };
    let agree = match kind {
        EmpiricalKind::Divergent => !verdict.bounded,
        EmpiricalKind::Bounded => verdict.bounded,
        EmpiricalKind::Inconclusive => true,
    };
    Ok(Verdict {
        theorem_bounded: verdict.bounded,
        witness: verdict.witness,
        empirics: EmpiricalVerdict {
            kind,
            slope: fit.slope,
            r_squared: fit.r_squared,
            sups,
        },
        agree,
    })
}
