//! Problem instances, primal/dual solutions, and the constraint functions of
//! the power-minimization problem.
//!
//! Channel convention: `channels[k]` is the vector `h_k` whose conjugate
//! transpose multiplies the transmitted signal, so user `k` receives
//! `h_k^† x`. `H_k = h_k h_k^†`.

use num_complex::Complex64;
use thiserror::Error;

use crate::linalg::{self, cholesky, CVector, HermitianMatrix, LinalgError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("schema error at `{path}`: {message}")]
    Schema { path: String, message: String },
    #[error("invalid value at `{path}`: {message}")]
    Invariant { path: String, message: String },
    #[error("dimension mismatch in {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("relay {relay}: trailing block of Q is singular, fronthaul rate undefined")]
    SingularTrailingBlock { relay: usize },
    #[error("index {index} out of range for {what} (len {len})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        len: usize,
    },
}

impl ModelError {
    fn invariant(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self::Invariant {
            path: path.into(),
            message: message.into(),
        }
    }
}

/// The single-stream rate-to-SINR map `gamma = 2^r - 1`.
pub fn sinr_from_rate(rate: f64) -> f64 {
    rate.exp2() - 1.0
}

/// Full input of the power-minimization problem.
///
/// Fields are public so that callers (and tests) can assemble degenerate
/// instances; [`ProblemInstance::new`] and [`ProblemInstance::validate`]
/// enforce the invariants the solver relies on.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInstance {
    /// Receiver noise power (linear).
    pub sigma2: f64,
    /// One length-`M` channel vector per user.
    pub channels: Vec<CVector>,
    /// Linear SINR target per user.
    pub sinr_targets: Vec<f64>,
    /// Fronthaul capacity per relay, bits per symbol.
    pub capacities: Vec<f64>,
}

impl ProblemInstance {
    pub fn new(
        sigma2: f64,
        channels: Vec<CVector>,
        sinr_targets: Vec<f64>,
        capacities: Vec<f64>,
    ) -> Result<Self, ModelError> {
        let inst = Self {
            sigma2,
            channels,
            sinr_targets,
            capacities,
        };
        inst.validate()?;
        Ok(inst)
    }

    /// Same as [`ProblemInstance::new`] with per-user rate targets in bits per symbol.
    pub fn with_rate_targets(
        sigma2: f64,
        channels: Vec<CVector>,
        rate_targets: &[f64],
        capacities: Vec<f64>,
    ) -> Result<Self, ModelError> {
        for (k, &r) in rate_targets.iter().enumerate() {
            if !(r > 0.0 && r.is_finite()) {
                return Err(ModelError::invariant(
                    format!("rate_targets[{k}]"),
                    format!("rate target must be positive and finite, got {r}"),
                ));
            }
        }
        let targets = rate_targets.iter().map(|&r| sinr_from_rate(r)).collect();
        Self::new(sigma2, channels, targets, capacities)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let m = self.capacities.len();
        let k = self.channels.len();
        if m == 0 {
            return Err(ModelError::invariant("capacities", "at least one relay is required"));
        }
        if k == 0 {
            return Err(ModelError::invariant("channels", "at least one user is required"));
        }
        if !(self.sigma2 > 0.0 && self.sigma2.is_finite()) {
            return Err(ModelError::invariant(
                "sigma2",
                format!("noise power must be positive and finite, got {}", self.sigma2),
            ));
        }
        if self.sinr_targets.len() != k {
            return Err(ModelError::DimensionMismatch {
                what: "sinr_targets",
                expected: k,
                found: self.sinr_targets.len(),
            });
        }
        for (i, &g) in self.sinr_targets.iter().enumerate() {
            if !(g > 0.0 && g.is_finite()) {
                return Err(ModelError::invariant(
                    format!("sinr_targets[{i}]"),
                    format!("SINR target must be positive and finite, got {g}"),
                ));
            }
        }
        for (i, &c) in self.capacities.iter().enumerate() {
            if !(c > 0.0 && c.is_finite()) {
                return Err(ModelError::invariant(
                    format!("capacities[{i}]"),
                    format!("capacity must be positive and finite, got {c}"),
                ));
            }
        }
        for (i, h) in self.channels.iter().enumerate() {
            if h.len() != m {
                return Err(ModelError::invariant(
                    format!("channels[{i}]"),
                    format!("expected {m} coefficients, found {}", h.len()),
                ));
            }
            if h.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(ModelError::invariant(format!("channels[{i}]"), "non-finite coefficient"));
            }
            if h.iter().all(|z| z.norm_sqr() == 0.0) {
                return Err(ModelError::invariant(format!("channels[{i}]"), "channel is identically zero"));
            }
        }
        Ok(())
    }

    /// Relay count `M`.
    pub fn relays(&self) -> usize {
        self.capacities.len()
    }

    /// User count `K`.
    pub fn users(&self) -> usize {
        self.channels.len()
    }

    /// `eta_m = 2^{C_m}`.
    pub fn eta(&self, m: usize) -> f64 {
        self.capacities[m].exp2()
    }

    pub fn etas(&self) -> Vec<f64> {
        self.capacities.iter().map(|c| c.exp2()).collect()
    }

    /// `H_k = h_k h_k^†`.
    pub fn channel_gram(&self, k: usize) -> HermitianMatrix {
        HermitianMatrix::outer(&self.channels[k])
    }
}

/// Rank-one primal solution: `V_k = p_k v_k v_k^†` with unit `v_k`, plus the
/// quantization noise covariance `Q`.
#[derive(Debug, Clone, PartialEq)]
pub struct PrimalSolution {
    pub directions: Vec<CVector>,
    pub powers: Vec<f64>,
    pub q: HermitianMatrix,
}

impl PrimalSolution {
    /// Beamformer `sqrt(p_k) v_k`.
    pub fn beamformer(&self, k: usize) -> CVector {
        let s = self.powers[k].max(0.0).sqrt();
        self.directions[k].iter().map(|z| z * s).collect()
    }

    /// `V_k = p_k v_k v_k^†`.
    pub fn covariance(&self, k: usize) -> HermitianMatrix {
        let mut v = HermitianMatrix::zeros(self.q.dim());
        v.add_outer(self.powers[k], &self.directions[k]);
        v
    }

    /// `sum_k p_k |v_{k,m}|^2`, the signal power relay `m` forwards.
    pub fn relay_signal_power(&self, m: usize) -> f64 {
        self.directions
            .iter()
            .zip(&self.powers)
            .map(|(v, p)| p * v[m].norm_sqr())
            .sum()
    }

    /// Same solution with all powers and `Q` multiplied by `t`.
    pub fn scaled(&self, t: f64) -> Self {
        Self {
            directions: self.directions.clone(),
            powers: self.powers.iter().map(|p| p * t).collect(),
            q: self.q.scaled(t),
        }
    }

    fn check_dims(&self, inst: &ProblemInstance) -> Result<(), ModelError> {
        let (m, k) = (inst.relays(), inst.users());
        if self.directions.len() != k {
            return Err(ModelError::DimensionMismatch {
                what: "directions",
                expected: k,
                found: self.directions.len(),
            });
        }
        if self.powers.len() != k {
            return Err(ModelError::DimensionMismatch {
                what: "powers",
                expected: k,
                found: self.powers.len(),
            });
        }
        if self.q.dim() != m {
            return Err(ModelError::DimensionMismatch {
                what: "Q",
                expected: m,
                found: self.q.dim(),
            });
        }
        if let Some(v) = self.directions.iter().find(|v| v.len() != m) {
            return Err(ModelError::DimensionMismatch {
                what: "direction vector",
                expected: m,
                found: v.len(),
            });
        }
        Ok(())
    }
}

/// Dual multipliers: `beta_k` per SINR constraint and the rank-one factors
/// `lambda_m` of the fronthaul multipliers `Lambda_m = lambda_m lambda_m^†`.
///
/// `lambda_m` is zero on indices `< m` and real nonnegative at index `m`.
#[derive(Debug, Clone, PartialEq)]
pub struct DualSolution {
    pub beta: Vec<f64>,
    pub lambdas: Vec<CVector>,
}

impl DualSolution {
    /// `Lambda_m = lambda_m lambda_m^†`.
    pub fn lambda_matrix(&self, m: usize) -> HermitianMatrix {
        HermitianMatrix::outer(&self.lambdas[m])
    }

    /// `Lambda_m^{(m,m)} = |lambda_m^{(m)}|^2`.
    pub fn lambda_pivot(&self, m: usize) -> f64 {
        self.lambdas[m][m].norm_sqr()
    }

    /// Dual objective `sum_k gamma_k sigma^2 beta_k`.
    pub fn objective(&self, inst: &ProblemInstance) -> f64 {
        self.beta
            .iter()
            .zip(&inst.sinr_targets)
            .map(|(b, g)| g * inst.sigma2 * b)
            .sum()
    }
}

/// SINR of user `k` under `sol`.
pub fn sinr(inst: &ProblemInstance, sol: &PrimalSolution, k: usize) -> Result<f64, ModelError> {
    sol.check_dims(inst)?;
    if k >= inst.users() {
        return Err(ModelError::IndexOutOfRange {
            what: "users",
            index: k,
            len: inst.users(),
        });
    }
    let h = &inst.channels[k];
    let gain = |j: usize| sol.powers[j] * linalg::inner(h, &sol.directions[j]).norm_sqr();
    let signal = gain(k);
    let interference: f64 = (0..inst.users()).filter(|&j| j != k).map(gain).sum();
    let quant = linalg::quadratic_form(&sol.q, h).map_err(dim_err)?;
    Ok(signal / (interference + quant + inst.sigma2))
}

/// Compression rate (bits per symbol) relay `m` needs under multivariate
/// compression with noise covariance `Q`.
pub fn fronthaul_rate(inst: &ProblemInstance, sol: &PrimalSolution, m: usize) -> Result<f64, ModelError> {
    sol.check_dims(inst)?;
    let n = inst.relays();
    if m >= n {
        return Err(ModelError::IndexOutOfRange {
            what: "relays",
            index: m,
            len: n,
        });
    }
    let schur = schur_complement(&sol.q, m).ok_or(ModelError::SingularTrailingBlock { relay: m })?;
    let floor = 1e-14 * (1.0 + sol.q.max_abs());
    if !(schur > floor) {
        return Err(ModelError::SingularTrailingBlock { relay: m });
    }
    Ok(((sol.relay_signal_power(m) + sol.q.diag(m)) / schur).log2())
}

/// `Q^{(m,m)} - Q^{(m,m+1:)} (Q^{(m+1:,m+1:)})^{-1} Q^{(m+1:,m)}`; `None` when
/// the trailing block is not positive definite. For the last relay the
/// trailing block is empty and the result is `Q^{(M,M)}`.
pub fn schur_complement(q: &HermitianMatrix, m: usize) -> Option<f64> {
    let n = q.dim();
    if m + 1 == n {
        return Some(q.diag(m));
    }
    let trailing = q.trailing(m + 1);
    let col: CVector = (m + 1..n).map(|i| q.get(i, m)).collect();
    let x = cholesky(&trailing).ok()?.solve(&col).ok()?;
    Some(q.diag(m) - linalg::inner(&col, &x).re)
}

/// Total transmit power `sum_k p_k + trace(Q)`.
pub fn objective(sol: &PrimalSolution) -> f64 {
    sol.powers.iter().sum::<f64>() + sol.q.trace()
}

fn dim_err(e: LinalgError) -> ModelError {
    match e {
        LinalgError::DimensionMismatch { expected, found } => ModelError::DimensionMismatch {
            what: "vector",
            expected,
            found,
        },
        other => ModelError::invariant("matrix", other.to_string()),
    }
}

pub(crate) fn real(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}
