//! JSON documents for instances, primal solutions and dual solutions.
//!
//! Complex numbers are `[re, im]` pairs. Floats are written in shortest
//! round-trip form, so `parse(serialize(x)) == x` bit for bit.
//!
//! Instance:
//! `{ "M", "K", "sigma2", "capacities": [M], "rate_targets" | "sinr_targets": [K], "channels": K x M }`
//!
//! Primal solution: `{ "directions": K x M, "powers": [K], "Q": M x M }`
//!
//! Dual solution: `{ "beta": [K], "lambdas": M x M }` (row `m` is `lambda_m`).

use num_complex::Complex64;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::linalg::{CVector, ComplexMatrix, HermitianMatrix};
use crate::model::{sinr_from_rate, DualSolution, ModelError, PrimalSolution, ProblemInstance};

type Pair = [f64; 2];

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceDoc {
    #[serde(rename = "M")]
    m: usize,
    #[serde(rename = "K")]
    k: usize,
    sigma2: f64,
    capacities: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    rate_targets: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    sinr_targets: Option<Vec<f64>>,
    channels: Vec<Vec<Pair>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SolutionDoc {
    directions: Vec<Vec<Pair>>,
    powers: Vec<f64>,
    #[serde(rename = "Q")]
    q: Vec<Vec<Pair>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DualDoc {
    beta: Vec<f64>,
    lambdas: Vec<Vec<Pair>>,
}

fn from_json<T: DeserializeOwned>(bytes: &[u8]) -> Result<T, ModelError> {
    let de = &mut serde_json::Deserializer::from_slice(bytes);
    serde_path_to_error::deserialize(de).map_err(|e| ModelError::Schema {
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })
}

fn to_json<T: Serialize>(doc: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(doc).expect("documents are always serializable");
    out.push(b'\n');
    out
}

fn pair(z: Complex64) -> Pair {
    [z.re, z.im]
}

fn vector(pairs: &[Pair]) -> CVector {
    pairs.iter().map(|p| Complex64::new(p[0], p[1])).collect()
}

fn check_len(path: &str, expected: usize, found: usize) -> Result<(), ModelError> {
    if expected != found {
        return Err(ModelError::Schema {
            path: path.to_string(),
            message: format!("expected {expected} entries, found {found}"),
        });
    }
    Ok(())
}

fn square(path: &str, rows: &[Vec<Pair>], n: usize) -> Result<ComplexMatrix, ModelError> {
    check_len(path, n, rows.len())?;
    for (i, r) in rows.iter().enumerate() {
        check_len(&format!("{path}[{i}]"), n, r.len())?;
    }
    let rows: Vec<CVector> = rows.iter().map(|r| vector(r)).collect();
    Ok(ComplexMatrix::from_rows(&rows))
}

fn rows_of(m: &ComplexMatrix) -> Vec<Vec<Pair>> {
    (0..m.rows()).map(|i| m.row(i).iter().copied().map(pair).collect()).collect()
}

pub fn parse_instance(bytes: &[u8]) -> Result<ProblemInstance, ModelError> {
    let doc: InstanceDoc = from_json(bytes)?;
    check_len("capacities", doc.m, doc.capacities.len())?;
    check_len("channels", doc.k, doc.channels.len())?;
    for (i, h) in doc.channels.iter().enumerate() {
        check_len(&format!("channels[{i}]"), doc.m, h.len())?;
    }
    let channels: Vec<CVector> = doc.channels.iter().map(|h| vector(h)).collect();
    match (doc.rate_targets, doc.sinr_targets) {
        (Some(r), None) => {
            check_len("rate_targets", doc.k, r.len())?;
            ProblemInstance::with_rate_targets(doc.sigma2, channels, &r, doc.capacities)
        }
        (None, Some(g)) => {
            check_len("sinr_targets", doc.k, g.len())?;
            ProblemInstance::new(doc.sigma2, channels, g, doc.capacities)
        }
        _ => Err(ModelError::Schema {
            path: ".".into(),
            message: "exactly one of `rate_targets` and `sinr_targets` is required".into(),
        }),
    }
}

/// Writes the instance with linear `sinr_targets`.
pub fn serialize_instance(inst: &ProblemInstance) -> Vec<u8> {
    to_json(&InstanceDoc {
        m: inst.relays(),
        k: inst.users(),
        sigma2: inst.sigma2,
        capacities: inst.capacities.clone(),
        rate_targets: None,
        sinr_targets: Some(inst.sinr_targets.clone()),
        channels: inst.channels.iter().map(|h| h.iter().copied().map(pair).collect()).collect(),
    })
}

/// Writes the instance with `rate_targets`; the stored SINR targets must be
/// `2^r - 1` of the given rates.
pub fn serialize_instance_with_rates(inst: &ProblemInstance, rates: &[f64]) -> Vec<u8> {
    assert_eq!(rates.len(), inst.users());
    debug_assert!(rates
        .iter()
        .zip(&inst.sinr_targets)
        .all(|(&r, &g)| sinr_from_rate(r) == g));
    to_json(&InstanceDoc {
        m: inst.relays(),
        k: inst.users(),
        sigma2: inst.sigma2,
        capacities: inst.capacities.clone(),
        rate_targets: Some(rates.to_vec()),
        sinr_targets: None,
        channels: inst.channels.iter().map(|h| h.iter().copied().map(pair).collect()).collect(),
    })
}

pub fn parse_solution(bytes: &[u8]) -> Result<PrimalSolution, ModelError> {
    let doc: SolutionDoc = from_json(bytes)?;
    let k = doc.directions.len();
    check_len("powers", k, doc.powers.len())?;
    let m = doc.q.len();
    for (i, d) in doc.directions.iter().enumerate() {
        check_len(&format!("directions[{i}]"), m, d.len())?;
    }
    let q = square("Q", &doc.q, m)?;
    let scale = 1.0 + q.max_abs();
    for i in 0..m {
        for j in 0..=i {
            if (q[(i, j)] - q[(j, i)].conj()).norm() > 1e-9 * scale {
                return Err(ModelError::Schema {
                    path: format!("Q[{i}][{j}]"),
                    message: "Q is not Hermitian".into(),
                });
            }
        }
    }
    Ok(PrimalSolution {
        directions: doc.directions.iter().map(|d| vector(d)).collect(),
        powers: doc.powers,
        q: HermitianMatrix::from_lower(&q).expect("square by construction"),
    })
}

pub fn serialize_solution(sol: &PrimalSolution) -> Vec<u8> {
    to_json(&SolutionDoc {
        directions: sol.directions.iter().map(|d| d.iter().copied().map(pair).collect()).collect(),
        powers: sol.powers.clone(),
        q: rows_of(sol.q.as_matrix()),
    })
}

pub fn parse_dual(bytes: &[u8]) -> Result<DualSolution, ModelError> {
    let doc: DualDoc = from_json(bytes)?;
    let m = doc.lambdas.len();
    let lam = square("lambdas", &doc.lambdas, m)?;
    Ok(DualSolution {
        beta: doc.beta,
        lambdas: (0..m).map(|i| lam.row(i).to_vec()).collect(),
    })
}

pub fn serialize_dual(dual: &DualSolution) -> Vec<u8> {
    to_json(&DualDoc {
        beta: dual.beta.clone(),
        lambdas: dual.lambdas.iter().map(|l| l.iter().copied().map(pair).collect()).collect(),
    })
}
