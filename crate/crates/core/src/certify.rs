//! Optimality certificates.
//!
//! A primal/dual pair is checked against every condition of the optimality
//! system: the dual equality `D = 0`, multiplier structure, dual feasibility
//! with the rank condition on `C_k - beta_k H_k`, primal feasibility, both
//! complementary slackness conditions, and finally the duality gap. By weak
//! duality a passing certificate with zero gap proves global optimality
//! without reference to any other solver.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::dual::{build_c, build_gamma, d_matrix};
use crate::linalg::{self, eigenvalues, min_eigenvalue};
use crate::model::{self, DualSolution, ModelError, PrimalSolution, ProblemInstance};
use crate::primal::b_matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    DZero,
    LambdaStructure,
    DualPsdAndRank,
    BetaNonneg,
    PrimalSlackness,
    PrimalRankOne,
    SinrEquality,
    BmPsd,
    BmSlackness,
    QPsd,
    DualityGap,
}

impl Condition {
    pub const ALL: [Condition; 11] = [
        Condition::DZero,
        Condition::LambdaStructure,
        Condition::DualPsdAndRank,
        Condition::BetaNonneg,
        Condition::PrimalSlackness,
        Condition::PrimalRankOne,
        Condition::SinrEquality,
        Condition::BmPsd,
        Condition::BmSlackness,
        Condition::QPsd,
        Condition::DualityGap,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Condition::DZero => "d_zero",
            Condition::LambdaStructure => "lambda_structure",
            Condition::DualPsdAndRank => "dual_psd_and_rank",
            Condition::BetaNonneg => "beta_nonneg",
            Condition::PrimalSlackness => "primal_slackness",
            Condition::PrimalRankOne => "primal_rank_one",
            Condition::SinrEquality => "sinr_equality",
            Condition::BmPsd => "bm_psd",
            Condition::BmSlackness => "bm_slackness",
            Condition::QPsd => "q_psd",
            Condition::DualityGap => "duality_gap",
        }
    }
}

/// Thresholds applied to the scaled residuals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CertifyTolerances {
    /// Equality residuals (`D = 0`, SINR tightness, slackness).
    pub equality: f64,
    /// Negative eigenvalue slack for PSD conditions.
    pub psd: f64,
    /// Relative duality gap.
    pub gap: f64,
    /// Absolute band around zero for the single null eigenvalue of
    /// `C_k - beta_k H_k`; every other eigenvalue must exceed it.
    pub rank: f64,
}

impl Default for CertifyTolerances {
    fn default() -> Self {
        Self {
            equality: 1e-7,
            psd: 1e-8,
            gap: 1e-6,
            rank: 1e-7,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConditionCheck {
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// The two smallest eigenvalues of `C_k - beta_k H_k` for one user.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DualSpectrum {
    pub smallest: f64,
    pub second_smallest: f64,
    /// Eigenvalues inside `[-rank, rank]`.
    pub near_zero: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Certificate {
    pub conditions: BTreeMap<&'static str, ConditionCheck>,
    pub duality_gap: f64,
    pub objective_primal: f64,
    pub objective_dual: f64,
    pub dual_spectra: Vec<DualSpectrum>,
    pub tolerances: CertifyTolerances,
    pub pass: bool,
}

impl Certificate {
    pub fn check(&self, c: Condition) -> &ConditionCheck {
        &self.conditions[c.name()]
    }

    pub fn passed(&self, c: Condition) -> bool {
        self.check(c).pass
    }

    pub fn failed_conditions(&self) -> Vec<&'static str> {
        self.conditions
            .iter()
            .filter(|(_, c)| !c.pass)
            .map(|(n, _)| *n)
            .collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("certificate is serializable")
    }
}

/// Signed gap `objective(primal) - sum_k gamma_k sigma^2 beta_k`.
pub fn gap(inst: &ProblemInstance, primal: &PrimalSolution, dual: &DualSolution) -> f64 {
    model::objective(primal) - dual.objective(inst)
}

fn check_dims(inst: &ProblemInstance, primal: &PrimalSolution, dual: &DualSolution) -> Result<(), ModelError> {
    let (m, k) = (inst.relays(), inst.users());
    let mismatch = |what, expected, found| Err(ModelError::DimensionMismatch { what, expected, found });
    if dual.beta.len() != k {
        return mismatch("beta", k, dual.beta.len());
    }
    if dual.lambdas.len() != m {
        return mismatch("lambdas", m, dual.lambdas.len());
    }
    if let Some(l) = dual.lambdas.iter().find(|l| l.len() != m) {
        return mismatch("lambda vector", m, l.len());
    }
    if primal.directions.len() != k {
        return mismatch("directions", k, primal.directions.len());
    }
    if primal.powers.len() != k {
        return mismatch("powers", k, primal.powers.len());
    }
    if primal.q.dim() != m {
        return mismatch("Q", m, primal.q.dim());
    }
    if let Some(v) = primal.directions.iter().find(|v| v.len() != m) {
        return mismatch("direction vector", m, v.len());
    }
    Ok(())
}

/// Evaluates every optimality condition for `(primal, dual)`.
///
/// Only inconsistent dimensions are an error; failed conditions are reported
/// in the certificate.
pub fn certify(
    inst: &ProblemInstance,
    primal: &PrimalSolution,
    dual: &DualSolution,
    tol: &CertifyTolerances,
) -> Result<Certificate, ModelError> {
    check_dims(inst, primal, dual)?;
    let (n, users) = (inst.relays(), inst.users());
    let mut conditions = BTreeMap::new();
    let mut record = |c: Condition, residual: f64, tolerance: f64, extra: bool| {
        let pass = residual.is_finite() && residual <= tolerance && extra;
        conditions.insert(
            c.name(),
            ConditionCheck {
                residual,
                tolerance,
                pass,
            },
        );
    };

    // D(beta, Lambda) = 0.
    let gamma = build_gamma(inst, &dual.beta);
    let d = d_matrix(inst, &dual.beta, &dual.lambdas);
    record(
        Condition::DZero,
        d.max_abs() / (1.0 + gamma.max_abs()),
        tol.equality,
        true,
    );

    // lambda_m vanishes above index m and is real nonnegative at m.
    let mut prefix = 0.0f64;
    let mut lead = 0.0f64;
    for (m, lam) in dual.lambdas.iter().enumerate() {
        prefix = lam[..m].iter().map(|z| z.norm()).fold(prefix, f64::max);
        let scale = 1.0 + linalg::norm(lam);
        lead = lead.max((lam[m].im.abs() + (-lam[m].re).max(0.0)) / scale);
    }
    record(
        Condition::LambdaStructure,
        prefix.max(lead),
        tol.equality,
        prefix == 0.0,
    );

    // C_k - beta_k H_k is PSD with exactly one null eigenvalue, and
    // V_k • (C_k - beta_k H_k) = 0.
    let mut spectra = Vec::with_capacity(users);
    let mut psd_residual = 0.0f64;
    let mut rank_ok = true;
    let mut slack = 0.0f64;
    for k in 0..users {
        let c = build_c(inst, &dual.beta, &dual.lambdas, k);
        let g = c.add_scaled(-dual.beta[k], &inst.channel_gram(k));
        let ev = eigenvalues(&g);
        let scale = 1.0 + g.max_abs();
        psd_residual = psd_residual.max((-ev[0]).max(0.0) / scale);
        let near_zero = ev.iter().filter(|e| e.abs() <= tol.rank).count();
        let above = ev.iter().filter(|&&e| e > tol.rank).count();
        rank_ok &= near_zero == 1 && above == n - 1;
        spectra.push(DualSpectrum {
            smallest: ev[0],
            second_smallest: ev.get(1).copied().unwrap_or(f64::INFINITY),
            near_zero,
        });
        let v = &primal.directions[k];
        let p = primal.powers[k];
        let vgv = linalg::quadratic_form(&g, v).expect("dimensions checked");
        slack = slack.max((p * vgv).abs() / (1.0 + p.abs() * g.max_abs()));
    }
    record(Condition::DualPsdAndRank, psd_residual, tol.psd, rank_ok);
    let beta_neg = dual.beta.iter().map(|b| (-b).max(0.0)).fold(0.0, f64::max);
    record(Condition::BetaNonneg, beta_neg, tol.equality, true);
    record(Condition::PrimalSlackness, slack, tol.equality, true);

    // V_k = p_k v_k v_k^† with p_k >= 0 and unit v_k.
    let rank_one = (0..users)
        .map(|k| (-primal.powers[k]).max(0.0).max((linalg::norm(&primal.directions[k]) - 1.0).abs()))
        .fold(0.0, f64::max);
    record(Condition::PrimalRankOne, rank_one, tol.equality, true);

    // SINR constraints hold with equality.
    let sinr_residual = (0..users)
        .map(|k| {
            let s = model::sinr(inst, primal, k).expect("dimensions checked");
            (s - inst.sinr_targets[k]).abs() / inst.sinr_targets[k]
        })
        .fold(0.0, f64::max);
    record(Condition::SinrEquality, sinr_residual, tol.equality, true);

    // B_m PSD and Lambda_m • B_m = 0.
    let mut bm_psd = 0.0f64;
    let mut bm_slack = 0.0f64;
    for m in 0..n {
        let b = b_matrix(inst, primal, m);
        let scale = 1.0 + b.max_abs();
        bm_psd = bm_psd.max((-min_eigenvalue(&b)).max(0.0) / scale);
        let lam = &dual.lambdas[m];
        let lbl = linalg::quadratic_form(&b, lam).expect("dimensions checked");
        bm_slack = bm_slack.max(lbl.abs() / (1.0 + b.max_abs() * linalg::norm(lam).powi(2)));
    }
    record(Condition::BmPsd, bm_psd, tol.psd, true);
    record(Condition::BmSlackness, bm_slack, tol.equality, true);

    let q_psd = (-min_eigenvalue(&primal.q)).max(0.0) / (1.0 + primal.q.max_abs());
    record(Condition::QPsd, q_psd, tol.psd, true);

    let objective_primal = model::objective(primal);
    let objective_dual = dual.objective(inst);
    let duality_gap = objective_primal - objective_dual;
    record(
        Condition::DualityGap,
        duality_gap.abs() / (1.0 + objective_primal.abs()),
        tol.gap,
        true,
    );

    let pass = conditions.values().all(|c| c.pass);
    Ok(Certificate {
        conditions,
        duality_gap,
        objective_primal,
        objective_dual,
        dual_spectra: spectra,
        tolerances: *tol,
        pass,
    })
}
