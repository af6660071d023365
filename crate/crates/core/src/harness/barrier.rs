//! A small log-barrier interior-point method for linear objectives under
//! Hermitian linear matrix inequalities:
//!
//! ```text
//! minimize  c^T x   subject to  F_b(x) = F_b0 + sum_j x_j F_bj  >= 0  for every block b
//! ```
//!
//! It knows nothing about the beamforming problem and serves as an
//! independent reference on tiny instances. On the central path the
//! suboptimality is at most `nu / t` with `nu` the total block dimension,
//! which turns the final iterate into a two-sided bracket on the optimum.

use crate::linalg::{cholesky, ComplexMatrix, HermitianMatrix};

#[derive(Debug, Clone)]
pub struct LmiBlock {
    pub constant: HermitianMatrix,
    /// One coefficient matrix per variable.
    pub coeffs: Vec<HermitianMatrix>,
}

#[derive(Debug, Clone)]
pub struct LmiProblem {
    pub cost: Vec<f64>,
    pub blocks: Vec<LmiBlock>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LmiOutcome {
    Optimal { x: Vec<f64>, lower: f64, upper: f64 },
    Infeasible,
}

#[derive(Debug, Clone, Copy)]
pub struct BarrierOptions {
    /// Stop once `nu / t <= rel_gap * (1 + |c^T x|)`.
    pub rel_gap: f64,
    /// Factor applied to `t` between centering passes.
    pub growth: f64,
    pub max_newton: usize,
    /// Bound on `c^T x` imposed during the feasibility phase.
    pub phase_one_bound: f64,
}

impl Default for BarrierOptions {
    fn default() -> Self {
        Self {
            rel_gap: 1e-8,
            growth: 8.0,
            max_newton: 200,
            phase_one_bound: 1e6,
        }
    }
}

impl LmiProblem {
    fn vars(&self) -> usize {
        self.cost.len()
    }

    fn nu(&self) -> f64 {
        self.blocks.iter().map(|b| b.constant.dim()).sum::<usize>() as f64
    }

    fn eval(&self, b: &LmiBlock, x: &[f64]) -> HermitianMatrix {
        let mut f = b.constant.clone();
        for (a, &xj) in b.coeffs.iter().zip(x) {
            if xj != 0.0 {
                f = f.add_scaled(xj, a);
            }
        }
        f
    }

    /// `-sum_b log det F_b(x)`, or `None` outside the interior.
    fn barrier(&self, x: &[f64]) -> Option<f64> {
        let mut s = 0.0;
        for b in &self.blocks {
            let l = cholesky(&self.eval(b, x)).ok()?;
            let f = l.factor();
            s -= 2.0 * (0..f.rows()).map(|i| f[(i, i)].re.ln()).sum::<f64>();
        }
        Some(s)
    }

    fn objective(&self, x: &[f64]) -> f64 {
        self.cost.iter().zip(x).map(|(c, x)| c * x).sum()
    }

    /// Gradient and Hessian of the barrier term.
    fn derivatives(&self, x: &[f64]) -> Option<(Vec<f64>, Vec<f64>)> {
        let n = self.vars();
        let mut g = vec![0.0; n];
        let mut h = vec![0.0; n * n];
        for b in &self.blocks {
            let inv = cholesky(&self.eval(b, x)).ok()?.inverse();
            let w: Vec<ComplexMatrix> = b
                .coeffs
                .iter()
                .map(|a| inv.as_matrix().matmul(a.as_matrix()).expect("square blocks"))
                .collect();
            let d = inv.dim();
            for j in 0..n {
                let trace: f64 = (0..d).map(|i| w[j][(i, i)].re).sum();
                g[j] -= trace;
                for l in 0..=j {
                    let mut s = 0.0;
                    for p in 0..d {
                        for q in 0..d {
                            s += (w[j][(p, q)] * w[l][(q, p)]).re;
                        }
                    }
                    h[j * n + l] += s;
                    if l != j {
                        h[l * n + j] += s;
                    }
                }
            }
        }
        Some((g, h))
    }

    /// Newton centering for `t c^T x + barrier(x)`. `stop` is polled after
    /// every accepted step and can end centering early.
    fn center(
        &self,
        x: &mut Vec<f64>,
        t: f64,
        opts: &BarrierOptions,
        stop: &mut dyn FnMut(&[f64]) -> bool,
    ) -> Result<bool, String> {
        let n = self.vars();
        let merit = |y: &[f64]| self.barrier(y).map(|b| t * self.objective(y) + b);
        for _ in 0..opts.max_newton {
            let (gb, h) = self.derivatives(x).ok_or("iterate left the interior")?;
            let g: Vec<f64> = (0..n).map(|j| t * self.cost[j] + gb[j]).collect();
            let dx = solve_spd(&h, &g, n).ok_or("singular barrier Hessian")?;
            let dx: Vec<f64> = dx.iter().map(|v| -v).collect();
            let decrement: f64 = -g.iter().zip(&dx).map(|(a, b)| a * b).sum::<f64>();
            if decrement / 2.0 <= 1e-12 {
                return Ok(false);
            }
            let f0 = merit(x).ok_or("iterate left the interior")?;
            let mut step = 1.0;
            loop {
                let y: Vec<f64> = x.iter().zip(&dx).map(|(a, b)| a + step * b).collect();
                if let Some(f) = merit(&y) {
                    if f <= f0 - 0.25 * step * decrement {
                        *x = y;
                        break;
                    }
                }
                step *= 0.5;
                if step < 1e-14 {
                    return Ok(false);
                }
            }
            if stop(x) {
                return Ok(true);
            }
        }
        Ok(false)
    }

    /// Minimizes `c^T x` from a strictly feasible `x`.
    fn optimize(&self, mut x: Vec<f64>, opts: &BarrierOptions) -> Result<(Vec<f64>, f64, f64), String> {
        let nu = self.nu();
        let mut t = nu / (1.0 + self.objective(&x).abs());
        loop {
            self.center(&mut x, t, opts, &mut |_| false)?;
            let obj = self.objective(&x);
            if nu / t <= opts.rel_gap * (1.0 + obj.abs()) {
                return Ok((x.clone(), obj - nu / t, obj));
            }
            t *= opts.growth;
            if !t.is_finite() {
                return Err("barrier parameter overflow".into());
            }
        }
    }

    /// Finds a strictly feasible point by minimizing a uniform shift `s`
    /// with `F_b(x) + s I > 0`, or reports infeasibility.
    fn phase_one(&self, opts: &BarrierOptions) -> Result<Option<Vec<f64>>, String> {
        let n = self.vars();
        let x0 = vec![0.0; n];
        if self.barrier(&x0).is_some() {
            return Ok(Some(x0));
        }
        let shift = |b: &LmiBlock| {
            let mut coeffs = b.coeffs.clone();
            coeffs.push(HermitianMatrix::identity(b.constant.dim()));
            LmiBlock {
                constant: b.constant.clone(),
                coeffs,
            }
        };
        let mut blocks: Vec<LmiBlock> = self.blocks.iter().map(shift).collect();
        // c^T x <= bound and s >= -1 keep the auxiliary problem bounded.
        let scalar = |v: f64| HermitianMatrix::from_diag(&[v]);
        let mut bound = LmiBlock {
            constant: scalar(opts.phase_one_bound),
            coeffs: self.cost.iter().map(|&c| scalar(-c)).collect(),
        };
        bound.coeffs.push(scalar(0.0));
        blocks.push(bound);
        let mut floor = LmiBlock {
            constant: scalar(1.0),
            coeffs: vec![scalar(0.0); n],
        };
        floor.coeffs.push(scalar(1.0));
        blocks.push(floor);
        let mut cost = vec![0.0; n];
        cost.push(1.0);
        let aux = LmiProblem { cost, blocks };

        let worst = self
            .blocks
            .iter()
            .map(|b| -crate::linalg::min_eigenvalue(&self.eval(b, &x0)))
            .fold(0.0, f64::max);
        let mut y = x0;
        y.push(worst + 1.0);
        let nu = aux.nu();
        let mut t = 1.0;
        let done = |y: &[f64]| y[n] < 0.0;
        for _ in 0..200 {
            if aux.center(&mut y, t, opts, &mut |y| done(y))? || done(&y) {
                y.truncate(n);
                return Ok(self.barrier(&y).map(|_| y));
            }
            // Certified: min s >= s - nu / t > 0.
            if y[n] - nu / t > 0.0 || nu / t < 1e-12 {
                return Ok(None);
            }
            t *= opts.growth;
        }
        Ok(None)
    }

    pub fn solve(&self, opts: &BarrierOptions) -> Result<LmiOutcome, String> {
        match self.phase_one(opts)? {
            None => Ok(LmiOutcome::Infeasible),
            Some(x) => {
                let (x, lower, upper) = self.optimize(x, opts)?;
                Ok(LmiOutcome::Optimal { x, lower, upper })
            }
        }
    }
}

/// Solves `H x = g` for symmetric positive definite `H` (row-major, `n x n`).
fn solve_spd(h: &[f64], g: &[f64], n: usize) -> Option<Vec<f64>> {
    let mut l = vec![0.0; n * n];
    for j in 0..n {
        let mut d = h[j * n + j];
        for k in 0..j {
            d -= l[j * n + k] * l[j * n + k];
        }
        if !(d > 0.0) {
            return None;
        }
        let ljj = d.sqrt();
        l[j * n + j] = ljj;
        for i in j + 1..n {
            let mut s = h[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            l[i * n + j] = s / ljj;
        }
    }
    let mut y = g.to_vec();
    for i in 0..n {
        for k in 0..i {
            y[i] -= l[i * n + k] * y[k];
        }
        y[i] /= l[i * n + i];
    }
    for i in (0..n).rev() {
        for k in i + 1..n {
            y[i] -= l[k * n + i] * y[k];
        }
        y[i] /= l[i * n + i];
    }
    Some(y)
}
