//! Finite-section potential theory: Dirichlet problems on exhaustions,
//! Green's functions, transience probing and the Royden decomposition.
//!
//! An exhaustion is the increasing family of metric balls around a root.
//! Solving `ℒu = rhs` on a level with prescribed exterior values is a
//! sparse SPD solve; Green's functions and the decomposition into a
//! vanishing-at-infinity part and a harmonic part are built from such
//! solves level by level.

use std::sync::{Arc, Mutex};

use crate::energy::energy;
use crate::error::{Error, Result};
use crate::function::VertexFunction;
use crate::graph::{GraphFamily, Vertex, WeightedGraph};
use crate::solve::{SpdSolver, SpdSystem};

/// Scaled residual accepted from a Dirichlet solve.
pub const SOLVER_TOL: f64 = 1e-11;

/// Increasing metric balls around a root vertex.
#[derive(Debug, Clone)]
pub struct Exhaustion {
    root: Vertex,
    radii: Vec<usize>,
    levels: Vec<Vec<Vertex>>,
}

impl Exhaustion {
    /// Balls of radius `1..=count` around `root`, truncated once the ball
    /// stops growing (levels are strictly increasing).
    pub fn metric_balls(g: &WeightedGraph, root: Vertex, count: usize) -> Result<Self> {
        if root >= g.vertex_count() {
            return Err(Error::Eval(format!("root vertex {root} out of range")));
        }
        if count == 0 {
            return Err(Error::Invariant("an exhaustion needs at least one level".into()));
        }
        let dist = g.distances(root);
        let mut radii = Vec::new();
        let mut levels: Vec<Vec<Vertex>> = Vec::new();
        for r in 1..=count {
            let ball: Vec<Vertex> = (0..g.vertex_count()).filter(|&v| dist[v] <= r).collect();
            if let Some(last) = levels.last() {
                if last.len() == ball.len() {
                    break;
                }
            }
            radii.push(r);
            levels.push(ball);
        }
        Ok(Exhaustion { root, radii, levels })
    }

    pub fn root(&self) -> Vertex {
        self.root
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn radius(&self, level: usize) -> usize {
        self.radii[level]
    }

    pub fn level(&self, level: usize) -> &[Vertex] {
        &self.levels[level]
    }

    /// True when the deepest level already covers every active vertex.
    pub fn saturates(&self, g: &WeightedGraph) -> bool {
        self.levels
            .last()
            .is_some_and(|l| l.len() == g.vertex_count())
    }
}

struct LevelSolver {
    vertices: Vec<Vertex>,
    position: Vec<Option<usize>>,
    solver: SpdSolver,
}

impl LevelSolver {
    fn build(g: &WeightedGraph, k: &[Vertex]) -> Result<Self> {
        let n = g.vertex_count();
        let mut position = vec![None; n];
        for (row, &v) in k.iter().enumerate() {
            if v >= n {
                return Err(Error::Eval(format!("vertex {v} out of range")));
            }
            if position[v].is_some() {
                return Err(Error::Invariant("duplicate vertex in solve set".into()));
            }
            position[v] = Some(row);
        }
        let mut sys = SpdSystem::new(k.len());
        let mut exterior_coupling = false;
        let mut total_killing = 0.0;
        for (row, &x) in k.iter().enumerate() {
            let mut diag = g.killing(x);
            total_killing += g.killing(x);
            for &(y, w) in g.neighbors(x) {
                diag += w;
                match position[y] {
                    Some(col) => {
                        if row < col {
                            sys.add_sym_off(row, col, -w);
                        }
                    }
                    None => exterior_coupling = true,
                }
            }
            for ce in g.crossing_edges(x) {
                diag += ce.weight;
                exterior_coupling = true;
            }
            sys.add_diag(row, diag);
        }
        if !exterior_coupling && total_killing == 0.0 {
            return Err(Error::SingularSystem(
                "no exterior coupling and no killing: the Dirichlet system is singular".into(),
            ));
        }
        Ok(LevelSolver {
            vertices: k.to_vec(),
            position,
            solver: SpdSolver::new(sys)?,
        })
    }

    /// Solves `ℒu = rhs` on the level with `u = boundary` outside, returning
    /// `u` as a full function (boundary values filled in outside the level).
    fn solve(
        &self,
        g: &WeightedGraph,
        rhs: impl Fn(Vertex) -> Result<f64>,
        boundary: &VertexFunction,
    ) -> Result<VertexFunction> {
        let mut b = vec![0.0; self.vertices.len()];
        for (row, &x) in self.vertices.iter().enumerate() {
            let mut acc = rhs(x)?;
            for &(y, w) in g.neighbors(x) {
                if self.position[y].is_none() {
                    acc += w * boundary.value(y);
                }
            }
            for ce in g.crossing_edges(x) {
                acc += ce.weight * boundary.tail_value(ce.region);
            }
            b[row] = acc;
        }
        let u = self.solver.solve(&b)?;
        let mut out = boundary.clone();
        for (row, &x) in self.vertices.iter().enumerate() {
            out.set_value(x, u[row]);
        }
        self.verify(g, &out, &rhs)?;
        Ok(out)
    }

    // componentwise backward-error check; weights can span many orders of
    // magnitude, so the residual is scaled by the local term sizes
    fn verify(
        &self,
        g: &WeightedGraph,
        u: &VertexFunction,
        rhs: &impl Fn(Vertex) -> Result<f64>,
    ) -> Result<()> {
        for &x in &self.vertices {
            let want = rhs(x)?;
            let got = g.laplacian_apply(u, x)?;
            let mut scale = 1.0 + want.abs();
            let ux = u.value(x);
            for &(y, w) in g.neighbors(x) {
                scale += w * (ux - u.value(y)).abs();
            }
            for ce in g.crossing_edges(x) {
                scale += ce.weight * (ux - u.tail_value(ce.region)).abs();
            }
            scale += g.killing(x) * ux.abs();
            if (got - want).abs() > SOLVER_TOL * scale {
                return Err(Error::SolverDiverged(format!(
                    "residual {:.3e} at vertex {} exceeds tolerance",
                    (got - want).abs(),
                    g.label(x)
                )));
            }
        }
        Ok(())
    }
}

/// Prefactorized Dirichlet solvers for every level of an exhaustion.
/// Factorizations are built on first use and shared afterwards.
pub struct ExhaustionSolvers<'g> {
    graph: &'g WeightedGraph,
    exhaustion: Exhaustion,
    cache: Mutex<Vec<Option<Arc<LevelSolver>>>>,
}

impl<'g> ExhaustionSolvers<'g> {
    pub fn new(graph: &'g WeightedGraph, exhaustion: Exhaustion) -> Self {
        let slots = vec![None; exhaustion.len()];
        ExhaustionSolvers {
            graph,
            exhaustion,
            cache: Mutex::new(slots),
        }
    }

    pub fn graph(&self) -> &WeightedGraph {
        self.graph
    }

    pub fn exhaustion(&self) -> &Exhaustion {
        &self.exhaustion
    }

    fn level_solver(&self, level: usize) -> Result<Arc<LevelSolver>> {
        let mut cache = self.cache.lock().unwrap();
        if let Some(s) = &cache[level] {
            return Ok(Arc::clone(s));
        }
        let s = Arc::new(LevelSolver::build(self.graph, self.exhaustion.level(level))?);
        cache[level] = Some(Arc::clone(&s));
        Ok(s)
    }

    pub fn solve_level(
        &self,
        level: usize,
        rhs: impl Fn(Vertex) -> Result<f64>,
        boundary: &VertexFunction,
    ) -> Result<VertexFunction> {
        self.graph.check_function(boundary)?;
        self.level_solver(level)?.solve(self.graph, rhs, boundary)
    }
}

/// Solves `ℒu(x) = rhs(x)` for `x` in the finite set `k` with `u` pinned to
/// `boundary` outside (crossing edges read the boundary's tail rule).
pub fn dirichlet_solve(
    g: &WeightedGraph,
    k: &[Vertex],
    rhs: &VertexFunction,
    boundary: &VertexFunction,
) -> Result<VertexFunction> {
    g.check_function(rhs)?;
    g.check_function(boundary)?;
    let solver = LevelSolver::build(g, k)?;
    solver.solve(g, |x| Ok(rhs.value(x)), boundary)
}

/// Outcome of probing a graph for transience through its Green's function.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransienceVerdict {
    Transient,
    RecurrentSuspected,
    Inconclusive,
}

impl std::fmt::Display for TransienceVerdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TransienceVerdict::Transient => write!(f, "transient"),
            TransienceVerdict::RecurrentSuspected => write!(f, "recurrent-suspected"),
            TransienceVerdict::Inconclusive => write!(f, "inconclusive"),
        }
    }
}

/// Level-by-level approximations of the Green's function at a base vertex.
#[derive(Debug, Clone)]
pub struct GreenApprox {
    pub base: Vertex,
    pub radii: Vec<usize>,
    pub levels: Vec<VertexFunction>,
    /// `g_x^(n)(x)`, nondecreasing in `n`.
    pub diagonal: Vec<f64>,
    pub verdict: TransienceVerdict,
}

impl GreenApprox {
    pub fn final_level(&self) -> &VertexFunction {
        self.levels.last().expect("at least one level")
    }
}

/// Dirichlet solves of `ℒ g = δ_x` on each exhaustion level with zero
/// exterior. The three-valued verdict encodes the asymptotics of the
/// diagonal values; the stopping rules are heuristics, not proofs.
pub fn greens_function(
    g: &WeightedGraph,
    x: Vertex,
    ex: &Exhaustion,
    tol: f64,
) -> Result<GreenApprox> {
    if !ex.level(0).contains(&x) {
        return Err(Error::Eval(
            "base vertex must belong to the first exhaustion level".into(),
        ));
    }
    let solvers = ExhaustionSolvers::new(g, ex.clone());
    let delta = VertexFunction::delta(g.vertex_count(), x);
    let zero = VertexFunction::zero(g.vertex_count());
    let mut levels = Vec::with_capacity(ex.len());
    let mut diagonal = Vec::with_capacity(ex.len());
    for level in 0..ex.len() {
        let u = solvers.solve_level(level, |v| Ok(delta.value(v)), &zero)?;
        if let Some(prev) = levels.last() {
            let prev: &VertexFunction = prev;
            for v in 0..g.vertex_count() {
                if u.value(v) - prev.value(v) < -1e-12 {
                    return Err(Error::Invariant(format!(
                        "Green approximation decreased at vertex {} between levels",
                        g.label(v)
                    )));
                }
            }
        }
        diagonal.push(u.value(x));
        levels.push(u);
    }
    // sup is attained at the base point
    let last = levels.last().expect("at least one level");
    let sup = last.values().iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v));
    if (sup - last.value(x)).abs() > 1e-10 * (1.0 + last.value(x).abs()) {
        return Err(Error::Invariant(
            "accepted Green's function does not attain its sup at the base".into(),
        ));
    }
    let verdict = classify(g, ex, &diagonal, tol);
    Ok(GreenApprox {
        base: x,
        radii: ex.radii.clone(),
        levels,
        diagonal,
        verdict,
    })
}

fn classify(
    g: &WeightedGraph,
    ex: &Exhaustion,
    diagonal: &[f64],
    tol: f64,
) -> TransienceVerdict {
    // a saturated exhaustion of an explicit finite graph is exact
    if matches!(g.family(), GraphFamily::Explicit) && ex.saturates(g) {
        return TransienceVerdict::Transient;
    }
    let n = diagonal.len();
    if n >= 3 {
        let rel = |i: usize| (diagonal[i] - diagonal[i - 1]) / diagonal[i].max(f64::MIN_POSITIVE);
        if rel(n - 1) < tol && rel(n - 2) < tol {
            return TransienceVerdict::Transient;
        }
        let increments: Vec<f64> = (1..n).map(|i| diagonal[i] - diagonal[i - 1]).collect();
        let all_slow = increments
            .windows(2)
            .all(|w| w[0] > 0.0 && w[1] / w[0] >= 0.5);
        if all_slow && !increments.is_empty() {
            return TransienceVerdict::RecurrentSuspected;
        }
    }
    TransienceVerdict::Inconclusive
}

/// The Royden decomposition `f = f_0 + f_h` of a finite-energy function on
/// a transient graph, computed by exhaustion.
#[derive(Debug, Clone)]
pub struct RoydenSplit {
    pub f0: VertexFunction,
    pub fh: VertexFunction,
    /// `|Q(f) - Q(f0) - Q(fh)|` at the accepted level.
    pub pythagorean_residual: f64,
    /// `max |ℒ f_h|` over interior vertices at the accepted level.
    pub harmonicity_residual: f64,
    /// Exhaustion levels consumed.
    pub levels_used: usize,
}

/// True when the family certifies transience without probing: star graphs
/// carry summable inverse ray weights by construction, lattices are
/// transient from dimension three on, and a finite explicit graph plays the
/// transient role exactly when it has killing somewhere.
pub fn is_certified_transient(g: &WeightedGraph) -> bool {
    match g.family() {
        GraphFamily::Star { .. } => true,
        GraphFamily::Lattice { dim, .. } => *dim >= 3,
        GraphFamily::Path { .. } => false,
        GraphFamily::Explicit => g.total_killing() > 0.0,
    }
}

pub fn royden_decompose(
    g: &WeightedGraph,
    f: &VertexFunction,
    ex: &Exhaustion,
    tol: f64,
) -> Result<RoydenSplit> {
    let solvers = ExhaustionSolvers::new(g, ex.clone());
    royden_decompose_with(&solvers, f, tol)
}

/// Same as [`royden_decompose`] but reuses prefactorized level solvers.
///
/// Each level solves the Euler-Lagrange system of the energy projection:
/// `ℒ(f - f_0) = 0` inside the level with `f_0 = 0` outside, i.e. the
/// Dirichlet problem with right-hand side `ℒf`. Iteration stops early once
/// the level-to-level change of `f_0` and the Pythagorean defect drop below
/// `tol`; otherwise the deepest level must cover the whole truncation, whose
/// solution is the final exhaustion approximation the model can realize.
pub fn royden_decompose_with(
    solvers: &ExhaustionSolvers<'_>,
    f: &VertexFunction,
    tol: f64,
) -> Result<RoydenSplit> {
    let g = solvers.graph();
    g.check_function(f)?;
    if !is_certified_transient(g) {
        return Err(Error::NotTransient(
            "the Royden decomposition needs a transient graph".into(),
        ));
    }
    let q_f = energy(g, f)?;
    if !q_f.is_finite() {
        return Err(Error::InfiniteEnergy("f has no finite energy".into()));
    }
    let ex = solvers.exhaustion();
    let zero = VertexFunction::zero(g.vertex_count());
    let mut previous: Option<VertexFunction> = None;
    for level in 0..ex.len() {
        let f0 = solvers.solve_level(level, |x| g.laplacian_apply(f, x), &zero)?;
        let change = previous
            .as_ref()
            .map(|p| {
                f0.values()
                    .iter()
                    .zip(p.values())
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0f64, f64::max)
            })
            .unwrap_or(f64::INFINITY);
        let last = level + 1 == ex.len();
        if change < tol || last {
            let split = assemble_split(g, f, &f0, q_f, level + 1)?;
            if split.pythagorean_residual < tol.max(1e-10 * (1.0 + q_f)) {
                if change < tol || ex.saturates(g) {
                    return Ok(split);
                }
            }
            if last {
                return Err(Error::NoConvergence(format!(
                    "level-to-level change {change:.3e} still above {tol:.1e} at the deepest level"
                )));
            }
        }
        previous = Some(f0);
    }
    Err(Error::NoConvergence("exhaustion has no levels".into()))
}

fn assemble_split(
    g: &WeightedGraph,
    f: &VertexFunction,
    f0: &VertexFunction,
    q_f: f64,
    levels_used: usize,
) -> Result<RoydenSplit> {
    let fh = f.sub(f0);
    let q0 = energy(g, f0)?;
    let qh = energy(g, &fh)?;
    let mut harm = 0.0f64;
    for x in g.interior_vertices() {
        harm = harm.max(g.laplacian_apply(&fh, x)?.abs());
    }
    Ok(RoydenSplit {
        f0: f0.clone(),
        fh,
        pythagorean_residual: (q_f - q0 - qh).abs(),
        harmonicity_residual: harm,
        levels_used,
    })
}

/// Defect of the pointwise identity
/// `-ℒh²(x) = Σ_y b(x,y)(h(x) - h(y))² + c(x) h(x)²`
/// valid for harmonic `h`. Rejects inputs that are not harmonic near `x`.
pub fn harmquadrat_residual(g: &WeightedGraph, h: &VertexFunction, x: Vertex) -> Result<f64> {
    g.check_function(h)?;
    if x >= g.vertex_count() {
        return Err(Error::Eval(format!("vertex {x} out of range")));
    }
    let mut probe = vec![x];
    probe.extend(g.neighbors(x).iter().map(|&(y, _)| y));
    for &y in &probe {
        let l = g.laplacian_apply(h, y)?;
        if l.abs() > 1e-9 {
            return Err(Error::NotHarmonic(format!(
                "|ℒh({})| = {:.3e} exceeds 1e-9",
                g.label(y),
                l.abs()
            )));
        }
    }
    let minus_l_h2 = -g.laplacian_apply(&h.squared(), x)?;
    let hx = h.value(x);
    let mut rhs = g.killing(x) * hx * hx;
    for &(y, w) in g.neighbors(x) {
        rhs += w * (hx - h.value(y)).powi(2);
    }
    for ce in g.crossing_edges(x) {
        rhs += ce.weight * (hx - h.tail_value(ce.region)).powi(2);
    }
    Ok((minus_l_h2 - rhs).abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::energy_bilinear;
    use crate::function::Tail;
    use crate::graph::{path_graph, star_graph, Edge, GraphFamily};

    fn two_vertex() -> WeightedGraph {
        WeightedGraph::new(
            vec!["a".into(), "b".into()],
            vec![Edge {
                u: 0,
                v: 1,
                weight: 1.0,
            }],
            vec![1.0, 0.0],
            vec![1.0, 1.0],
            vec![],
            GraphFamily::Explicit,
        )
        .unwrap()
    }

    fn geometric_star(depth: usize) -> WeightedGraph {
        let weights: Vec<Vec<f64>> = (0..3)
            .map(|_| (1..=depth as i32 + 1).map(|k| 2f64.powi(k)).collect())
            .collect();
        star_graph(&weights, depth, |_, _| 1.0, false).unwrap()
    }

    fn h2(depth: usize) -> VertexFunction {
        let n = 1 + 3 * depth;
        let mut values = vec![0.0; n];
        let mut sum = 0.0;
        for k in 1..=depth {
            sum += 2f64 / 2f64.powi(k as i32);
            values[1 + (k - 1)] = -sum;
            values[1 + depth + (k - 1)] = sum;
        }
        let t = sum;
        VertexFunction::from_values(values, Tail::PerRegion(vec![-t, t, 0.0]))
    }

    #[test]
    fn zero_data_gives_zero_solution() {
        let g = geometric_star(6);
        let k = g.ball(0, 3);
        let zero = VertexFunction::zero(g.vertex_count());
        let u = dirichlet_solve(&g, &k, &zero, &zero).unwrap();
        assert!(u.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn two_vertex_hand_solution() {
        let g = two_vertex();
        let rhs = VertexFunction::delta(2, 0);
        let boundary = VertexFunction::zero(2);
        let u = dirichlet_solve(&g, &[0, 1], &rhs, &boundary).unwrap();
        assert!((u.value(0) - 1.0).abs() < 1e-12);
        assert!((u.value(1) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn harmonic_function_solves_its_own_dirichlet_problem() {
        let g = geometric_star(12);
        let h = h2(12);
        let k = g.ball(0, 5);
        let zero = VertexFunction::zero(g.vertex_count());
        let u = dirichlet_solve(&g, &k, &zero, &h).unwrap();
        for &v in &k {
            assert!(
                (u.value(v) - h.value(v)).abs() < 1e-10,
                "vertex {v}: {} vs {}",
                u.value(v),
                h.value(v)
            );
        }
    }

    #[test]
    fn singular_system_detected() {
        let g = WeightedGraph::new(
            vec!["a".into(), "b".into()],
            vec![Edge {
                u: 0,
                v: 1,
                weight: 1.0,
            }],
            vec![0.0, 0.0],
            vec![1.0, 1.0],
            vec![],
            GraphFamily::Explicit,
        )
        .unwrap();
        let zero = VertexFunction::zero(2);
        assert!(matches!(
            dirichlet_solve(&g, &[0, 1], &zero, &zero),
            Err(Error::SingularSystem(_))
        ));
    }

    #[test]
    fn green_two_vertex_is_one_and_transient() {
        let g = two_vertex();
        let ex = Exhaustion::metric_balls(&g, 0, 4).unwrap();
        let ga = greens_function(&g, 0, &ex, 1e-6).unwrap();
        assert_eq!(ga.verdict, TransienceVerdict::Transient);
        assert!((ga.final_level().value(0) - 1.0).abs() < 1e-12);
        assert!((ga.final_level().value(1) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn green_star_converges_to_parallel_resistance() {
        let g = geometric_star(28);
        let ex = Exhaustion::metric_balls(&g, 0, 26).unwrap();
        let ga = greens_function(&g, 0, &ex, 1e-6).unwrap();
        assert_eq!(ga.verdict, TransienceVerdict::Transient);
        // three rays in parallel, each of resistance sum 1/b_k = 1
        let r = ga.radii.last().unwrap();
        let expect = (1.0 - 2f64.powi(-(*r as i32) - 1)) / 3.0;
        let got = *ga.diagonal.last().unwrap();
        assert!((got - expect).abs() < 1e-12, "got {got}, expect {expect}");
    }

    #[test]
    fn green_path_grows_linearly_and_reads_recurrent() {
        let g = path_graph(40).unwrap();
        let ex = Exhaustion::metric_balls(&g, 0, 30).unwrap();
        let ga = greens_function(&g, 0, &ex, 1e-6).unwrap();
        assert_eq!(ga.verdict, TransienceVerdict::RecurrentSuspected);
        for (i, d) in ga.diagonal.iter().enumerate() {
            let expect = (ga.radii[i] + 1) as f64;
            assert!((d - expect).abs() < 1e-9, "level {i}: {d} vs {expect}");
        }
    }

    #[test]
    fn green_reproduces_point_evaluations() {
        let g = geometric_star(16);
        let ex = Exhaustion::metric_balls(&g, 0, 14).unwrap();
        let ga = greens_function(&g, 0, &ex, 1e-6).unwrap();
        let gx = ga.final_level();
        // finite-support f with support well inside the last level
        let mut f = VertexFunction::delta(g.vertex_count(), 0);
        f.set_value(2, -0.75);
        f.set_value(1 + 16, 2.0); // vertex 1 on ray 2
        let lhs = f.value(0);
        let rhs = energy_bilinear(&g, gx, &f).unwrap();
        assert!((lhs - rhs).abs() <= 1e-8 * (1.0 + f.sup_norm()));
    }

    #[test]
    fn royden_split_of_harmonic_function_is_trivial() {
        let g = geometric_star(20);
        let ex = Exhaustion::metric_balls(&g, 0, 19).unwrap();
        let h = h2(20);
        let split = royden_decompose(&g, &h, &ex, 1e-8).unwrap();
        assert!(energy(&g, &split.f0).unwrap() < 1e-18);
        assert!(split.harmonicity_residual <= 1e-10);
        assert!(split.pythagorean_residual <= 1e-10);
    }

    #[test]
    fn royden_split_recovers_finite_support_part() {
        let g = geometric_star(30);
        let ex = Exhaustion::metric_balls(&g, 0, 29).unwrap();
        let f = VertexFunction::delta(g.vertex_count(), 0).add(&h2(30));
        let split = royden_decompose(&g, &f, &ex, 1e-8).unwrap();
        // f0 is the delta part, fh the harmonic basis function
        assert!((split.f0.value(0) - 1.0).abs() < 1e-10);
        let q = energy(&g, &f).unwrap();
        let qh = energy(&g, &split.fh).unwrap();
        assert!((q - energy(&g, &split.f0).unwrap() - qh).abs() <= 1e-8 * (1.0 + q));
        // the closed-form energy of the harmonic part, up to the depth tail
        assert!((qh - 8.0).abs() < 1e-7, "qh = {qh}");
        assert!(split.harmonicity_residual <= 1e-10);
    }

    #[test]
    fn royden_rejects_recurrent_graphs() {
        let g = path_graph(30).unwrap();
        let ex = Exhaustion::metric_balls(&g, 0, 10).unwrap();
        let f = VertexFunction::delta(g.vertex_count(), 0);
        assert!(matches!(
            royden_decompose(&g, &f, &ex, 1e-8),
            Err(Error::NotTransient(_))
        ));
    }

    #[test]
    fn harmquadrat_identity_on_star() {
        let g = geometric_star(16);
        let h = h2(16);
        let r = harmquadrat_residual(&g, &h, 0).unwrap();
        assert!(r <= 1e-10, "residual {r}");
        // 1 + h3 at vertex 2 on ray 3
        let one = VertexFunction::constant(g.vertex_count(), 1.0);
        let mut h3vals = vec![0.0; g.vertex_count()];
        let mut sum = 0.0;
        for k in 1..=16 {
            sum += 2f64 / 2f64.powi(k as i32);
            h3vals[1 + (k - 1)] = -sum;
            h3vals[1 + 2 * 16 + (k - 1)] = sum;
        }
        let h3 = VertexFunction::from_values(h3vals, Tail::PerRegion(vec![-sum, 0.0, sum]));
        let shifted = one.add(&h3);
        let x = 1 + 2 * 16 + 1; // vertex 2 on ray 3
        let r = harmquadrat_residual(&g, &shifted, x).unwrap();
        assert!(r <= 1e-10, "residual {r}");
    }

    #[test]
    fn harmquadrat_rejects_non_harmonic_input() {
        let g = geometric_star(8);
        let f = VertexFunction::delta(g.vertex_count(), 0);
        assert!(matches!(
            harmquadrat_residual(&g, &f, 0),
            Err(Error::NotHarmonic(_))
        ));
    }

    #[test]
    fn constants_satisfy_harmquadrat_trivially() {
        let g = geometric_star(8);
        let c = VertexFunction::constant(g.vertex_count(), 3.0);
        assert_eq!(harmquadrat_residual(&g, &c, 0).unwrap(), 0.0);
    }
}
