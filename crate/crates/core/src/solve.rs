//! Sparse SPD solves for the Dirichlet sub-problems.
//!
//! Graph Laplacian systems on our families are symmetric positive definite
//! and well conditioned, so a direct sparse LDL^T factorization is used up
//! to `DIRECT_LIMIT` unknowns and Jacobi-preconditioned conjugate gradients
//! beyond. Iteration order is fixed, which keeps runs bit-reproducible.

use sprs::{CsMat, TriMat};
use sprs_ldl::{Ldl, LdlNumeric};

use crate::error::{Error, Result};

/// Largest system handed to the direct factorization.
pub const DIRECT_LIMIT: usize = 5000;
/// Relative residual target of the conjugate gradient fallback.
pub const CG_REL_TOL: f64 = 1e-12;

/// Symmetric positive definite system stored row-wise.
#[derive(Debug, Clone)]
pub struct SpdSystem {
    diag: Vec<f64>,
    off: Vec<Vec<(usize, f64)>>,
}

impl SpdSystem {
    pub fn new(n: usize) -> Self {
        SpdSystem {
            diag: vec![0.0; n],
            off: vec![Vec::new(); n],
        }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn add_diag(&mut self, i: usize, v: f64) {
        self.diag[i] += v;
    }

    /// Adds a symmetric off-diagonal pair `(i, j)` and `(j, i)`.
    pub fn add_sym_off(&mut self, i: usize, j: usize, v: f64) {
        debug_assert_ne!(i, j);
        self.off[i].push((j, v));
        self.off[j].push((i, v));
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        let mut y = vec![0.0; n];
        for i in 0..n {
            let mut acc = self.diag[i] * x[i];
            for &(j, v) in &self.off[i] {
                acc += v * x[j];
            }
            y[i] = acc;
        }
        y
    }

    fn to_csc(&self) -> CsMat<f64> {
        let n = self.len();
        let mut tri = TriMat::new((n, n));
        for i in 0..n {
            tri.add_triplet(i, i, self.diag[i]);
            for &(j, v) in &self.off[i] {
                tri.add_triplet(i, j, v);
            }
        }
        tri.to_csc()
    }
}

enum Backend {
    Direct(LdlNumeric<f64, usize>),
    ConjugateGradient,
}

/// A factorized system; solve as many right-hand sides as needed.
pub struct SpdSolver {
    system: SpdSystem,
    backend: Backend,
}

impl SpdSolver {
    pub fn new(system: SpdSystem) -> Result<Self> {
        let backend = if system.len() <= DIRECT_LIMIT {
            let ldl = Ldl::new()
                .check_symmetry(sprs::SymmetryCheck::DontCheckSymmetry)
                .fill_in_reduction(sprs::FillInReduction::ReverseCuthillMcKee)
                .numeric(system.to_csc().view())
                .map_err(|e| Error::SingularSystem(format!("LDL factorization failed: {e}")))?;
            // LDL^T succeeds on some indefinite matrices; SPD means positive D.
            if ldl.d().iter().any(|&d| !(d > 0.0)) {
                return Err(Error::SingularSystem(
                    "system is not positive definite".into(),
                ));
            }
            Backend::Direct(ldl)
        } else {
            Backend::ConjugateGradient
        };
        Ok(SpdSolver { system, backend })
    }

    pub fn len(&self) -> usize {
        self.system.len()
    }

    pub fn is_empty(&self) -> bool {
        self.system.is_empty()
    }

    pub fn system(&self) -> &SpdSystem {
        &self.system
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        match &self.backend {
            Backend::Direct(ldl) => Ok(ldl.solve(rhs)),
            Backend::ConjugateGradient => cg_jacobi(&self.system, rhs),
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Jacobi-preconditioned conjugate gradients with a fixed iteration cap of
/// `10 n`.
pub fn cg_jacobi(sys: &SpdSystem, rhs: &[f64]) -> Result<Vec<f64>> {
    let n = sys.len();
    let norm_b = dot(rhs, rhs).sqrt();
    if norm_b == 0.0 {
        return Ok(vec![0.0; n]);
    }
    for (i, &d) in sys.diag.iter().enumerate() {
        if !(d > 0.0) {
            return Err(Error::SingularSystem(format!(
                "nonpositive diagonal entry at row {i}"
            )));
        }
    }
    let mut x = vec![0.0; n];
    let mut r = rhs.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&sys.diag).map(|(ri, di)| ri / di).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let max_iter = 10 * n;
    for _ in 0..max_iter {
        let ap = sys.matvec(&p);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            return Err(Error::SingularSystem(
                "conjugate gradients met a nonpositive curvature direction".into(),
            ));
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        if dot(&r, &r).sqrt() <= CG_REL_TOL * norm_b {
            return Ok(x);
        }
        for i in 0..n {
            z[i] = r[i] / sys.diag[i];
        }
        let rz_next = dot(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::SolverDiverged(format!(
        "conjugate gradients did not reach {CG_REL_TOL:e} in {max_iter} iterations"
    )))
}
