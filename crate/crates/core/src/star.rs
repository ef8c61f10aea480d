//! Star graphs with a finite harmonic boundary.
//!
//! A star is a center with `N >= 2` infinite rays whose inverse edge
//! weights are summable, so each ray contributes one boundary point at
//! infinity. On this model the harmonic machinery is explicit: a basis of
//! finite-energy harmonic functions, harmonic extensions of boundary data,
//! harmonic measures, the trace map with certified tail error bounds, and
//! the Dirichlet-to-Neumann form on the `N`-point boundary.

use nalgebra::{DMatrix, DVector};

use crate::energy::{energy, energy_bilinear};
use crate::error::{Error, Result};
use crate::function::{Tail, VertexFunction};
use crate::graph::{star_graph, Vertex, WeightedGraph};

/// A certified summable ray weight family `b_1, b_2, ...`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WeightFamily {
    /// `b_k = ratio^k`, `ratio > 1`; tail sums are exact geometric series.
    Geometric { ratio: f64 },
    /// `b_k = k^exponent`, `exponent > 1`; tail sums via Euler-Maclaurin
    /// with remainder far below working tolerance.
    Power { exponent: f64 },
}

impl WeightFamily {
    /// Parses `"geometric:2"` or `"power:1.5"`.
    pub fn parse(text: &str) -> Result<Self> {
        let (kind, param) = text
            .split_once(':')
            .ok_or_else(|| Error::Spec(format!("weight family {text:?} is not kind:parameter")))?;
        let p: f64 = param
            .parse()
            .map_err(|_| Error::Spec(format!("bad weight family parameter {param:?}")))?;
        match kind {
            "geometric" => {
                if !(p > 1.0) {
                    return Err(Error::Invariant(
                        "geometric ratio must exceed 1 for summable inverse weights".into(),
                    ));
                }
                Ok(WeightFamily::Geometric { ratio: p })
            }
            "power" => {
                if !(p > 1.0) {
                    return Err(Error::Invariant(
                        "power exponent must exceed 1 for summable inverse weights".into(),
                    ));
                }
                Ok(WeightFamily::Power { exponent: p })
            }
            other => Err(Error::Spec(format!("unknown weight family {other:?}"))),
        }
    }

    pub fn weight(&self, k: usize) -> f64 {
        debug_assert!(k >= 1);
        match *self {
            WeightFamily::Geometric { ratio } => ratio.powi(k as i32),
            WeightFamily::Power { exponent } => (k as f64).powf(exponent),
        }
    }

    /// `Σ_{l > depth} 1 / b_l`, the certified tail of the inverse weights.
    pub fn inverse_tail(&self, depth: usize) -> f64 {
        match *self {
            WeightFamily::Geometric { ratio } => ratio.powi(-(depth as i32)) / (ratio - 1.0),
            WeightFamily::Power { exponent } => {
                // explicit terms up to a cutoff, Euler-Maclaurin beyond
                let cutoff = depth.max(1000);
                let mut sum = 0.0;
                for l in (depth + 1)..=cutoff {
                    sum += (l as f64).powf(-exponent);
                }
                let a = (cutoff + 1) as f64;
                sum + a.powf(1.0 - exponent) / (exponent - 1.0) + 0.5 * a.powf(-exponent)
                    + exponent / 12.0 * a.powf(-exponent - 1.0)
            }
        }
    }

    /// `Σ_{l >= 1} 1 / b_l`.
    pub fn inverse_sum(&self) -> f64 {
        match *self {
            WeightFamily::Geometric { ratio } => 1.0 / (ratio - 1.0),
            WeightFamily::Power { .. } => {
                let mut sum = self.inverse_tail(1000);
                for l in 1..=1000usize {
                    sum += 1.0 / self.weight(l);
                }
                sum
            }
        }
    }
}

impl std::fmt::Display for WeightFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            WeightFamily::Geometric { ratio } => write!(f, "geometric:{ratio}"),
            WeightFamily::Power { exponent } => write!(f, "power:{exponent}"),
        }
    }
}

/// Vertex measure of the star embedding.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StarMeasure {
    /// `m = 1` everywhere; total measure of the infinite star is infinite.
    Unit,
    /// `m(k_j) = 2^-k`, `m(center) = 1`; total measure is finite.
    GeometricDecay,
}

/// Star graph with `N` rays, truncated at `depth`, together with the
/// derived boundary constants `B^(j) = b_1 Σ_k 1/b_k^(j)` and the harmonic
/// basis (center value 0, `∓` partial sums on ray 1 / ray j).
#[derive(Debug, Clone)]
pub struct StarGraph {
    families: Vec<WeightFamily>,
    depth: usize,
    graph: WeightedGraph,
    b1: f64,
    big_b: Vec<f64>,
    tail_inv: Vec<f64>,
    basis: Vec<VertexFunction>,
    /// `T[j][i] = h_{i+1}(∞_{j+1})`, the exact boundary values of the basis.
    boundary_values: DMatrix<f64>,
}

impl StarGraph {
    pub fn uniform(
        rays: usize,
        family: WeightFamily,
        depth: usize,
        measure: StarMeasure,
    ) -> Result<Self> {
        Self::per_ray(vec![family; rays], depth, measure)
    }

    pub fn per_ray(
        families: Vec<WeightFamily>,
        depth: usize,
        measure: StarMeasure,
    ) -> Result<Self> {
        let rays = families.len();
        if rays < 2 {
            return Err(Error::Invariant("a star needs at least two rays".into()));
        }
        if depth < 2 {
            return Err(Error::Invariant("star depth must be at least 2".into()));
        }
        let ray_weights: Vec<Vec<f64>> = families
            .iter()
            .map(|f| (1..=depth + 1).map(|k| f.weight(k)).collect())
            .collect();
        let m = |_: usize, k: usize| -> f64 {
            match measure {
                StarMeasure::Unit => 1.0,
                StarMeasure::GeometricDecay => {
                    if k == 0 {
                        1.0
                    } else {
                        2f64.powi(-(k as i32))
                    }
                }
            }
        };
        let graph = star_graph(
            &ray_weights,
            depth,
            m,
            matches!(measure, StarMeasure::GeometricDecay),
        )?;
        let b1 = families[0].weight(1);
        let big_b: Vec<f64> = families
            .iter()
            .map(|f| b1 * (f.inverse_sum()))
            .collect();
        let tail_inv: Vec<f64> = families.iter().map(|f| f.inverse_tail(depth)).collect();
        let mut star = StarGraph {
            families,
            depth,
            graph,
            b1,
            big_b,
            tail_inv,
            basis: Vec::new(),
            boundary_values: DMatrix::zeros(rays, rays),
        };
        star.basis = star.build_basis()?;
        star.boundary_values = star.build_boundary_values();
        Ok(star)
    }

    pub fn rays(&self) -> usize {
        self.families.len()
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn graph(&self) -> &WeightedGraph {
        &self.graph
    }

    pub fn into_graph(self) -> WeightedGraph {
        self.graph
    }

    pub fn families(&self) -> &[WeightFamily] {
        &self.families
    }

    pub fn is_uniform(&self) -> bool {
        self.families.iter().all(|f| *f == self.families[0])
    }

    pub const fn center(&self) -> Vertex {
        0
    }

    /// Vertex `k` on ray `j` (both 1-based); `k = 0` is the center.
    pub fn ray_vertex(&self, j: usize, k: usize) -> Vertex {
        if k == 0 {
            0
        } else {
            1 + (j - 1) * self.depth + (k - 1)
        }
    }

    pub fn deepest(&self, j: usize) -> Vertex {
        self.ray_vertex(j, self.depth)
    }

    pub fn b1(&self) -> f64 {
        self.b1
    }

    /// `B^(j) = b_1 Σ_k 1/b_k^(j)`.
    pub fn big_b(&self, j: usize) -> f64 {
        self.big_b[j - 1]
    }

    /// Certified `Σ_{l > depth} 1/b_l^(j)`.
    pub fn tail_inverse_sum(&self, j: usize) -> f64 {
        self.tail_inv[j - 1]
    }

    fn build_basis(&self) -> Result<Vec<VertexFunction>> {
        let n = self.graph.vertex_count();
        let rays = self.rays();
        let mut basis = vec![VertexFunction::constant(n, 1.0)];
        for j in 2..=rays {
            let mut values = vec![0.0; n];
            let mut tails = vec![0.0; rays];
            let mut partial = 0.0;
            for k in 1..=self.depth {
                partial += self.b1 / self.families[0].weight(k);
                values[self.ray_vertex(1, k)] = -partial;
            }
            tails[0] = -partial;
            let mut partial = 0.0;
            for k in 1..=self.depth {
                partial += self.b1 / self.families[j - 1].weight(k);
                values[self.ray_vertex(j, k)] = partial;
            }
            tails[j - 1] = partial;
            let h = VertexFunction::from_values(values, Tail::PerRegion(tails));
            // rounding in ℒh scales with b(x,y)(|h(x)| + |h(y)|); the
            // harmonicity certificate is relative to that scale
            for x in self.graph.interior_vertices() {
                let l = self.graph.laplacian_apply(&h, x)?;
                let scale: f64 = 1.0
                    + self
                        .graph
                        .neighbors(x)
                        .iter()
                        .map(|&(y, w)| w * (h.value(x).abs() + h.value(y).abs()))
                        .sum::<f64>();
                if l.abs() > 1e-10 * scale {
                    return Err(Error::Invariant(format!(
                        "harmonic basis member {j} has |ℒh| = {:.3e} at {}",
                        l.abs(),
                        self.graph.label(x)
                    )));
                }
            }
            basis.push(h);
        }
        Ok(basis)
    }

    fn build_boundary_values(&self) -> DMatrix<f64> {
        let rays = self.rays();
        let mut t = DMatrix::zeros(rays, rays);
        for j in 0..rays {
            t[(j, 0)] = 1.0;
        }
        for i in 1..rays {
            t[(0, i)] = -self.big_b[0];
            t[(i, i)] = self.big_b[i];
        }
        t
    }

    /// The harmonic basis `h_1 ≡ 1, h_2, ..., h_N`; each `h_j` (j >= 2) is
    /// supported on ray 1 and ray j and verified pointwise harmonic on the
    /// truncation interior.
    pub fn harmonic_basis(&self) -> &[VertexFunction] {
        &self.basis
    }

    /// Exact boundary values `h_i(∞_j)` of the basis.
    pub fn boundary_values(&self) -> &DMatrix<f64> {
        &self.boundary_values
    }
}

/// Values of a boundary function on the `N` boundary points.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryFunction(pub Vec<f64>);

impl BoundaryFunction {
    pub fn constant(n: usize, c: f64) -> Self {
        BoundaryFunction(vec![c; n])
    }

    pub fn coordinate(n: usize, j: usize) -> Self {
        let mut v = vec![0.0; n];
        v[j] = 1.0;
        BoundaryFunction(v)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Harmonic measure weights `μ_x({∞_j})` at a base vertex.
#[derive(Debug, Clone)]
pub struct HarmonicMeasure {
    pub base: Vertex,
    pub weights: Vec<f64>,
}

/// Symmetric positive semidefinite bilinear form on the finite boundary.
#[derive(Debug, Clone)]
pub struct BoundaryForm {
    matrix: DMatrix<f64>,
}

impl BoundaryForm {
    /// Validates symmetry and positive semidefiniteness (by eigenvalue
    /// certificate with a rounding allowance).
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::Invariant("boundary form must be square".into()));
        }
        let scale = matrix.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
        for i in 0..matrix.nrows() {
            for j in 0..i {
                if (matrix[(i, j)] - matrix[(j, i)]).abs() > 1e-12 * (1.0 + scale) {
                    return Err(Error::Invariant(format!(
                        "boundary form is not symmetric at ({i},{j})"
                    )));
                }
            }
        }
        let sym = (matrix.clone() + matrix.transpose()) * 0.5;
        let min_eig = min_eigenvalue(&sym);
        if min_eig < -1e-9 * (1.0 + scale) {
            return Err(Error::NotAdmissible(format!(
                "boundary form has negative eigenvalue {min_eig:.3e}"
            )));
        }
        Ok(BoundaryForm { matrix: sym })
    }

    pub fn from_row_major(n: usize, entries: &[f64]) -> Result<Self> {
        Self::new(DMatrix::from_row_slice(n, n, entries))
    }

    pub fn n(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn evaluate(&self, phi: &[f64]) -> f64 {
        self.bilinear(phi, phi)
    }

    pub fn bilinear(&self, phi: &[f64], psi: &[f64]) -> f64 {
        quadratic(&self.matrix, phi, psi)
    }

    /// Second-smallest eigenvalue; positive exactly when the kernel is at
    /// most the constants.
    pub fn second_eigenvalue(&self) -> f64 {
        let mut eigs: Vec<f64> = self
            .matrix
            .clone()
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .copied()
            .collect();
        eigs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        eigs[1]
    }

    pub fn kills_constants(&self, tol: f64) -> bool {
        let ones = DVector::from_element(self.n(), 1.0);
        (&self.matrix * ones).amax() <= tol
    }
}

pub(crate) fn quadratic(m: &DMatrix<f64>, phi: &[f64], psi: &[f64]) -> f64 {
    let mut acc = 0.0;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            acc += phi[i] * m[(i, j)] * psi[j];
        }
    }
    acc
}

pub(crate) fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    m.clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .fold(f64::INFINITY, |a, &b| a.min(b))
}

/// Harmonic extension of boundary data: the coefficients `λ` of the basis
/// expansion `H_φ = Σ λ_i h_i` together with the extension itself.
///
/// Uniform rays use the closed-form solution (`λ_1` is the boundary mean,
/// `λ_j = (φ_j - λ_1)/B`); distinct rays solve the `N x N` boundary-value
/// system.
pub fn harmonic_extension(
    star: &StarGraph,
    phi: &BoundaryFunction,
) -> Result<(VertexFunction, Vec<f64>)> {
    let n = star.rays();
    if phi.len() != n {
        return Err(Error::Eval(format!(
            "boundary function has {} entries, star has {} boundary points",
            phi.len(),
            n
        )));
    }
    if !phi.0.iter().all(|v| v.is_finite()) {
        return Err(Error::Eval("boundary values must be finite".into()));
    }
    let lambda: Vec<f64> = if star.is_uniform() {
        let mean = phi.0.iter().sum::<f64>() / n as f64;
        let b = star.big_b(1);
        std::iter::once(mean)
            .chain(phi.0.iter().skip(1).map(|&v| (v - mean) / b))
            .collect()
    } else {
        let lu = star.boundary_values().clone().lu();
        let rhs = DVector::from_column_slice(&phi.0);
        let sol = lu.solve(&rhs).ok_or_else(|| {
            Error::SingularLambdaSystem("boundary-value system is singular".into())
        })?;
        sol.iter().copied().collect()
    };
    let mut h = VertexFunction::zero(star.graph().vertex_count());
    for (i, l) in lambda.iter().enumerate() {
        if *l != 0.0 || i == 0 {
            h = h.add(&star.harmonic_basis()[i].scale(*l));
        }
    }
    Ok((h, lambda))
}

/// The harmonic measure at `x`: `μ_x({∞_j}) = H_{e_j}(x)`.
/// Weights are validated to lie in `[0, 1]` and sum to one.
pub fn harmonic_measure(star: &StarGraph, x: Vertex) -> Result<HarmonicMeasure> {
    if x >= star.graph().vertex_count() {
        return Err(Error::Eval(format!("vertex {x} out of range")));
    }
    let n = star.rays();
    let mut weights = Vec::with_capacity(n);
    for j in 0..n {
        let (h, _) = harmonic_extension(star, &BoundaryFunction::coordinate(n, j))?;
        weights.push(h.value(x));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::Invariant(format!(
            "harmonic measure weights sum to {total}, not 1"
        )));
    }
    if weights.iter().any(|&w| !(-1e-12..=1.0 + 1e-12).contains(&w)) {
        return Err(Error::Invariant(
            "harmonic measure weight outside [0, 1]".into(),
        ));
    }
    Ok(HarmonicMeasure { base: x, weights })
}

/// Boundary values of a finite-energy function, read at the deepest active
/// vertex of each ray, together with the tail error bounds
/// `sqrt(2 Q(f) Σ_{l>depth} 1/b_l^(j))` from Cauchy-Schwarz along the ray.
pub fn trace(star: &StarGraph, f: &VertexFunction) -> Result<(BoundaryFunction, Vec<f64>)> {
    let q = energy(star.graph(), f)?;
    if !q.is_finite() {
        return Err(Error::InfiniteEnergy(
            "trace needs a finite-energy function".into(),
        ));
    }
    let values = trace_values(star, f)?;
    let bounds: Vec<f64> = (1..=star.rays())
        .map(|j| (2.0 * q * star.tail_inverse_sum(j)).sqrt())
        .collect();
    Ok((values, bounds))
}

/// Boundary values only (no energy evaluation, no bounds).
pub fn trace_values(star: &StarGraph, f: &VertexFunction) -> Result<BoundaryFunction> {
    star.graph().check_function(f)?;
    Ok(BoundaryFunction(
        (1..=star.rays()).map(|j| f.value(star.deepest(j))).collect(),
    ))
}

/// The Dirichlet-to-Neumann form as a matrix on the boundary.
///
/// Uniform rays: `A = (b_1/B)(I - J/N)`, the algebraic rearrangement of the
/// pairwise-difference formula. Distinct rays: the Gram matrix of the
/// harmonic basis conjugated by the boundary-to-coefficient solve.
pub fn qdn_matrix(star: &StarGraph) -> Result<BoundaryForm> {
    if star.is_uniform() {
        let n = star.rays();
        let c = star.b1() / star.big_b(1);
        let mut a = DMatrix::from_element(n, n, -c / n as f64);
        for i in 0..n {
            a[(i, i)] += c;
        }
        BoundaryForm::new(a)
    } else {
        qdn_matrix_via_gram(star)
    }
}

/// Gram-route evaluation of the Dirichlet-to-Neumann matrix, available for
/// every star; on uniform stars it cross-checks the closed form.
pub fn qdn_matrix_via_gram(star: &StarGraph) -> Result<BoundaryForm> {
    let n = star.rays();
    let gram = gram_matrix(star)?;
    let t = star.boundary_values().clone();
    let lu = t.lu();
    let mut s = DMatrix::zeros(n, n);
    for j in 0..n {
        let e = DVector::from_fn(n, |i, _| if i == j { 1.0 } else { 0.0 });
        let col = lu
            .solve(&e)
            .ok_or_else(|| Error::SingularLambdaSystem("boundary-value system is singular".into()))?;
        s.set_column(j, &col);
    }
    let a = s.transpose() * gram * s;
    BoundaryForm::new((a.clone() + a.transpose()) * 0.5)
}

/// Gram matrix `Q(h_i, h_j)` of the harmonic basis over the truncation.
pub fn gram_matrix(star: &StarGraph) -> Result<DMatrix<f64>> {
    let n = star.rays();
    let basis = star.harmonic_basis();
    let mut gram = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = energy_bilinear(star.graph(), &basis[i], &basis[j])?;
            gram[(i, j)] = v;
            gram[(j, i)] = v;
        }
    }
    Ok(gram)
}

/// Direct evaluation of the pairwise-difference formula
/// `q(φ) = (b_1 / (2 B N)) Σ_{i,j} (φ_i - φ_j)²` for uniform stars.
pub fn qdn_formula(star: &StarGraph, phi: &BoundaryFunction) -> Result<f64> {
    if !star.is_uniform() {
        return Err(Error::NotEvaluable(
            "the pairwise-difference formula applies to uniform stars only".into(),
        ));
    }
    let n = star.rays();
    if phi.len() != n {
        return Err(Error::Eval("boundary function size mismatch".into()));
    }
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            acc += (phi.0[i] - phi.0[j]).powi(2);
        }
    }
    Ok(star.b1() / (2.0 * star.big_b(1) * n as f64) * acc)
}

/// Largest ratio `∫ (Tr f)² dμ_o / (Q(f) + f(o)²)` over a family of test
/// functions; zero functions are skipped. Witnesses the boundedness of the
/// trace map without claiming the optimal constant.
pub fn trace_continuity_ratio(
    star: &StarGraph,
    fs: &[VertexFunction],
    o: Vertex,
) -> Result<f64> {
    let mu = harmonic_measure(star, o)?;
    let mut best: Option<f64> = None;
    for f in fs {
        let q = energy(star.graph(), f)?;
        let denom = q + f.value(o) * f.value(o);
        if denom == 0.0 {
            continue;
        }
        let tr = trace_values(star, f)?;
        let num: f64 = mu
            .weights
            .iter()
            .zip(tr.as_slice())
            .map(|(&w, &t)| w * t * t)
            .sum();
        let ratio = num / denom;
        best = Some(best.map_or(ratio, |b: f64| b.max(ratio)));
    }
    best.ok_or_else(|| {
        Error::DivisionByZero("every test function was zero; no ratio to report".into())
    })
}
