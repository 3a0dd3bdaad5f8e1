//! Per-set objective and its exact block-coordinate minimization.
//!
//! With `P = ΦᵀΨ` the objective for one set is
//!
//! ```text
//! L(A, B) = ½‖M_ii − AᵀPB‖² + ½‖M_0i − PB‖² + ½‖M_i0 − AᵀP‖²
//!         + (λ/2)(‖M_iī − AᵀM_0ī‖² + ‖M_īi − M_ī0 B‖²) + (η/2)(‖A‖² + ‖B‖²)
//! ```
//!
//! Setting each partial gradient to zero gives a k × k SPD system (η > 0):
//!
//! ```text
//! A-step: (QQᵀ + PPᵀ + λ·gram_row + ηI) A = Q M_iiᵀ + P M_i0ᵀ + λ·cross_row,  Q = PB
//! B-step: (RRᵀ + PᵀP + λ·gram_col + ηI) B = R M_ii  + Pᵀ M_0i + λ·cross_col,  R = PᵀA
//! ```
//!
//! No nᵢ × nᵢ dense matrix is formed; `M_ii` only enters through sparse products.

use nalgebra::DMatrix;

use crate::error::{Result, SmfError};
use crate::proximity::{ProximityBlockSet, ProximityConfig};
use crate::smf::LandmarkEmbedding;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SmfConfig {
    pub d: usize,
    pub k: usize,
    pub lambda: f64,
    pub eta: f64,
    pub iters: usize,
    /// Early stop once the relative decrease of one iteration falls below
    /// this; `0` disables it.
    pub tol: f64,
    pub proximity: ProximityConfig,
}

impl Default for SmfConfig {
    fn default() -> Self {
        SmfConfig {
            d: 128,
            k: 200,
            lambda: 0.4,
            eta: 0.1,
            iters: 100,
            tol: 1e-7,
            proximity: ProximityConfig::second(),
        }
    }
}

impl SmfConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(SmfError::InvalidArgument(msg));
        if self.d == 0 || self.d > self.k {
            return bad(format!("need 1 ≤ d ≤ k, got d = {}, k = {}", self.d, self.k));
        }
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return bad(format!("eta must be > 0, got {}", self.eta));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return bad(format!("lambda must be ≥ 0, got {}", self.lambda));
        }
        if self.iters == 0 {
            return bad("iters must be ≥ 1".into());
        }
        if self.tol.is_nan() || self.tol < 0.0 {
            return bad(format!("tol must be ≥ 0, got {}", self.tol));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LossBreakdown {
    pub total: f64,
    pub local: f64,
    pub landmark: f64,
    /// Unscaled global loss; `total` includes `λ · global`.
    pub global: f64,
    pub ridge: f64,
}

#[derive(Clone, Debug)]
pub struct SetSolution {
    /// A (k × nᵢ)
    pub a_mat: DMatrix<f64>,
    /// B (k × nᵢ)
    pub b_mat: DMatrix<f64>,
    /// W = ΦA (d × nᵢ)
    pub w_mat: DMatrix<f64>,
    /// C = ΨB (d × nᵢ)
    pub c_mat: DMatrix<f64>,
    /// Entry 0 is the objective at A = B = 0, entry t the objective after iteration t.
    pub loss_trace: Vec<f64>,
    pub components: LossBreakdown,
}

impl SetSolution {
    pub fn iterations(&self) -> usize {
        self.loss_trace.len() - 1
    }
}

fn frob_dot(x: &DMatrix<f64>, y: &DMatrix<f64>) -> f64 {
    x.iter().zip(y.iter()).map(|(a, b)| a * b).sum()
}

/// The objective of one set with everything that does not depend on (A, B)
/// precomputed.
pub struct SetProblem<'a> {
    blocks: &'a ProximityBlockSet,
    lambda: f64,
    eta: f64,
    p: &'a DMatrix<f64>,
    pp_t: DMatrix<f64>,
    pt_p: DMatrix<f64>,
    /// M_0i dense (k × nᵢ)
    m_0i: DMatrix<f64>,
    /// M_i0ᵀ dense (k × nᵢ)
    m_i0_t: DMatrix<f64>,
    /// P M_i0ᵀ + λ cross_row
    rhs_a_fixed: DMatrix<f64>,
    /// Pᵀ M_0i + λ cross_col
    rhs_b_fixed: DMatrix<f64>,
    m_ii_norm_sq: f64,
}

impl<'a> SetProblem<'a> {
    pub fn new(
        blocks: &'a ProximityBlockSet,
        lm: &'a LandmarkEmbedding,
        cfg: &SmfConfig,
    ) -> Result<Self> {
        cfg.validate()?;
        let k = lm.k();
        let n_i = blocks.n_i();
        let mismatch = |what: &str, got: (usize, usize), want: (usize, usize)| {
            Err(SmfError::DimensionMismatch(format!(
                "{what} is {}x{}, expected {}x{}",
                got.0, got.1, want.0, want.1
            )))
        };
        if lm.d() != cfg.d {
            return Err(SmfError::DimensionMismatch(format!(
                "landmark embedding has d = {}, config d = {}",
                lm.d(),
                cfg.d
            )));
        }
        let shape = |m: &crate::proximity::SparseBlock| (m.nrows(), m.ncols());
        if shape(&blocks.m_ii) != (n_i, n_i) {
            return mismatch("M_ii", shape(&blocks.m_ii), (n_i, n_i));
        }
        if shape(&blocks.m_0i) != (k, n_i) {
            return mismatch("M_0i", shape(&blocks.m_0i), (k, n_i));
        }
        if shape(&blocks.m_i0) != (n_i, k) {
            return mismatch("M_i0", shape(&blocks.m_i0), (n_i, k));
        }
        let cp = &blocks.complement;
        for (name, m, want) in [
            ("gram_row", &cp.gram_row, (k, k)),
            ("gram_col", &cp.gram_col, (k, k)),
            ("cross_row", &cp.cross_row, (k, n_i)),
            ("cross_col", &cp.cross_col, (k, n_i)),
        ] {
            if m.shape() != want {
                return mismatch(name, m.shape(), want);
            }
        }

        let p = &lm.p_matrix;
        let m_0i = blocks.m_0i.to_dense();
        let m_i0_t = blocks.m_i0.to_dense().transpose();
        let rhs_a_fixed = p * &m_i0_t + &cp.cross_row * cfg.lambda;
        let rhs_b_fixed = p.tr_mul(&m_0i) + &cp.cross_col * cfg.lambda;
        Ok(SetProblem {
            blocks,
            lambda: cfg.lambda,
            eta: cfg.eta,
            p,
            pp_t: p * p.transpose(),
            pt_p: p.tr_mul(p),
            m_0i,
            m_i0_t,
            rhs_a_fixed,
            rhs_b_fixed,
            m_ii_norm_sq: blocks.m_ii.frobenius_sq(),
        })
    }

    pub fn k(&self) -> usize {
        self.p.nrows()
    }

    pub fn n_i(&self) -> usize {
        self.blocks.n_i()
    }

    /// `‖[M_ii, M_0i, M_i0, M_iī, M_īi]‖_F`
    pub fn target_norm(&self) -> f64 {
        let cp = &self.blocks.complement;
        (self.m_ii_norm_sq
            + self.blocks.m_0i.frobenius_sq()
            + self.blocks.m_i0.frobenius_sq()
            + cp.row_norm_sq
            + cp.col_norm_sq)
            .sqrt()
    }

    /// Normal-equation matrix and right-hand side of the A-step for fixed B.
    fn system_a(&self, b: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
        let q = self.p * b;
        let mut lhs = &q * q.transpose() + &self.pp_t + &self.blocks.complement.gram_row * self.lambda;
        for t in 0..lhs.nrows() {
            lhs[(t, t)] += self.eta;
        }
        let rhs = self.blocks.m_ii.left_mul_dense_transposed(&q) + &self.rhs_a_fixed;
        (lhs, rhs)
    }

    fn system_b(&self, a: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
        let r = self.p.tr_mul(a);
        let mut lhs = &r * r.transpose() + &self.pt_p + &self.blocks.complement.gram_col * self.lambda;
        for t in 0..lhs.nrows() {
            lhs[(t, t)] += self.eta;
        }
        let rhs = self.blocks.m_ii.left_mul_dense(&r) + &self.rhs_b_fixed;
        (lhs, rhs)
    }

    /// `argmin_A L(A, B)`
    pub fn step_a(&self, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let (lhs, rhs) = self.system_a(b);
        spd_solve(lhs, rhs)
    }

    /// `argmin_B L(A, B)`
    pub fn step_b(&self, a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let (lhs, rhs) = self.system_b(a);
        spd_solve(lhs, rhs)
    }

    /// Analytic `(∂L/∂A, ∂L/∂B)`.
    pub fn gradient(&self, a: &DMatrix<f64>, b: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
        let (lhs_a, rhs_a) = self.system_a(b);
        let (lhs_b, rhs_b) = self.system_b(a);
        (lhs_a * a - rhs_a, lhs_b * b - rhs_b)
    }

    pub fn loss(&self, a: &DMatrix<f64>, b: &DMatrix<f64>) -> LossBreakdown {
        let q = self.p * b;
        let pt_a = self.p.tr_mul(a);
        // ‖M_ii − AᵀQ‖² = ‖M_ii‖² − 2⟨M_ii, AᵀQ⟩ + ⟨AAᵀ, QQᵀ⟩
        let mut cross = 0.0;
        for (r, c, v) in self.blocks.m_ii.triplets() {
            cross += v * a.column(r).dot(&q.column(c));
        }
        let fit = frob_dot(&(a * a.transpose()), &(&q * q.transpose()));
        let local = 0.5 * (self.m_ii_norm_sq - 2.0 * cross + fit);
        let landmark =
            0.5 * ((&self.m_0i - &q).norm_squared() + (&self.m_i0_t - &pt_a).norm_squared());
        let cp = &self.blocks.complement;
        let global = 0.5
            * (cp.row_norm_sq - 2.0 * frob_dot(&cp.cross_row, a)
                + frob_dot(&cp.gram_row, &(a * a.transpose()))
                + cp.col_norm_sq
                - 2.0 * frob_dot(&cp.cross_col, b)
                + frob_dot(&cp.gram_col, &(b * b.transpose())));
        let ridge = 0.5 * self.eta * (a.norm_squared() + b.norm_squared());
        LossBreakdown {
            total: local + landmark + self.lambda * global + ridge,
            local,
            landmark,
            global,
            ridge,
        }
    }
}

/// Solves `lhs · X = rhs` for symmetric positive definite `lhs`.
pub(crate) fn spd_solve(lhs: DMatrix<f64>, rhs: DMatrix<f64>) -> Result<DMatrix<f64>> {
    match lhs.clone().cholesky() {
        Some(chol) => Ok(chol.solve(&rhs)),
        None => Err(SmfError::NotPositiveDefinite {
            pivot: smallest_pivot(&lhs),
        }),
    }
}

/// Smallest diagonal pivot of an unpivoted LDLᵀ elimination; diagnostic only.
fn smallest_pivot(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    let mut work = m.clone();
    let mut smallest = f64::INFINITY;
    for j in 0..n {
        let pivot = work[(j, j)];
        smallest = smallest.min(pivot);
        if pivot.abs() < f64::MIN_POSITIVE || !pivot.is_finite() {
            break;
        }
        for r in (j + 1)..n {
            let f = work[(r, j)] / pivot;
            for c in (j + 1)..n {
                work[(r, c)] -= f * work[(j, c)];
            }
        }
    }
    smallest
}

/// Alternating exact minimization from A = B = 0.
pub fn solve_set(
    blocks: &ProximityBlockSet,
    lm: &LandmarkEmbedding,
    cfg: &SmfConfig,
) -> Result<SetSolution> {
    let problem = SetProblem::new(blocks, lm, cfg)?;
    let (k, n_i) = (problem.k(), problem.n_i());
    let mut a = DMatrix::zeros(k, n_i);
    let mut b = DMatrix::zeros(k, n_i);
    let mut loss_trace = Vec::with_capacity(cfg.iters + 1);
    loss_trace.push(problem.loss(&a, &b).total);
    for _ in 0..cfg.iters {
        a = problem.step_a(&b)?;
        b = problem.step_b(&a)?;
        let current = problem.loss(&a, &b).total;
        let previous = *loss_trace.last().expect("trace starts non-empty");
        loss_trace.push(current);
        if !current.is_finite() {
            return Err(SmfError::Numerical("objective became non-finite".into()));
        }
        if cfg.tol > 0.0 && previous - current <= cfg.tol * previous.abs() {
            break;
        }
    }
    let components = problem.loss(&a, &b);
    Ok(SetSolution {
        w_mat: &lm.phi * &a,
        c_mat: &lm.psi * &b,
        a_mat: a,
        b_mat: b,
        loss_trace,
        components,
    })
}

/// Loss components at a given (A, B).
pub fn evaluate_loss(
    blocks: &ProximityBlockSet,
    lm: &LandmarkEmbedding,
    cfg: &SmfConfig,
    a_mat: &DMatrix<f64>,
    b_mat: &DMatrix<f64>,
) -> Result<LossBreakdown> {
    let problem = SetProblem::new(blocks, lm, cfg)?;
    let want = (problem.k(), problem.n_i());
    for (name, m) in [("A", a_mat), ("B", b_mat)] {
        if m.shape() != want {
            return Err(SmfError::DimensionMismatch(format!(
                "{name} is {}x{}, expected {}x{}",
                m.nrows(),
                m.ncols(),
                want.0,
                want.1
            )));
        }
    }
    Ok(problem.loss(a_mat, b_mat))
}
