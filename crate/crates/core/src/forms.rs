//! Form evaluators and the checkers tying interior forms to boundary forms.
//!
//! The central objects are the Neumann form (the energy on its natural
//! domain), composed forms `Q_q(f) = Q(f_0) + q(Tr f)` built from an
//! admissible boundary form `q`, the trace of a form onto the boundary,
//! and report-style Markov / ordering checks over function families and
//! contraction libraries.

use nalgebra::DMatrix;
use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::contraction::{apply_contraction, NormalContraction};
use crate::energy::{energy, energy_bilinear};
use crate::error::{Error, Result};
use crate::exhaustion::{royden_decompose_with, Exhaustion, ExhaustionSolvers};
use crate::function::{Tail, VertexFunction};
use crate::graph::WeightedGraph;
use crate::star::{
    min_eigenvalue, qdn_matrix, quadratic, trace_values, BoundaryForm, StarGraph,
};

/// A nonnegative quadratic form on vertex functions, with a bilinear
/// variant (polarization by default).
pub trait QuadraticForm {
    fn name(&self) -> &str;

    fn evaluate(&self, f: &VertexFunction) -> Result<f64>;

    fn bilinear(&self, f: &VertexFunction, g: &VertexFunction) -> Result<f64> {
        let plus = self.evaluate(&f.add(g))?;
        let minus = self.evaluate(&f.sub(g))?;
        Ok((plus - minus) / 4.0)
    }
}

/// Membership of `f` in the L² domain over the graph's measure: functions
/// with a nonvanishing tail need a finite total measure.
fn check_l2_domain(g: &WeightedGraph, f: &VertexFunction) -> Result<()> {
    if !f.is_finite() {
        return Err(Error::NotInDomain("function has non-finite values".into()));
    }
    if !f.is_finitely_supported() && !g.has_finite_total_measure() {
        return Err(Error::NotInDomain(
            "nonvanishing tail is not square-summable against an infinite measure".into(),
        ));
    }
    Ok(())
}

/// The Neumann form: the energy on finite-energy L² functions.
pub fn eval_neumann(g: &WeightedGraph, f: &VertexFunction) -> Result<f64> {
    check_l2_domain(g, f)?;
    let q = energy(g, f)?;
    if !q.is_finite() {
        return Err(Error::NotInDomain("function has infinite energy".into()));
    }
    Ok(q)
}

pub struct NeumannForm<'g> {
    graph: &'g WeightedGraph,
}

impl<'g> NeumannForm<'g> {
    pub fn new(graph: &'g WeightedGraph) -> Self {
        NeumannForm { graph }
    }
}

impl QuadraticForm for NeumannForm<'_> {
    fn name(&self) -> &str {
        "neumann"
    }

    fn evaluate(&self, f: &VertexFunction) -> Result<f64> {
        eval_neumann(self.graph, f)
    }

    fn bilinear(&self, f: &VertexFunction, g: &VertexFunction) -> Result<f64> {
        check_l2_domain(self.graph, f)?;
        check_l2_domain(self.graph, g)?;
        energy_bilinear(self.graph, f, g)
    }
}

/// A form given by an arbitrary evaluation routine.
pub struct CustomForm<F> {
    name: String,
    eval: F,
}

impl<F: Fn(&VertexFunction) -> Result<f64>> CustomForm<F> {
    pub fn new(name: impl Into<String>, eval: F) -> Self {
        CustomForm {
            name: name.into(),
            eval,
        }
    }
}

impl<F: Fn(&VertexFunction) -> Result<f64>> QuadraticForm for CustomForm<F> {
    fn name(&self) -> &str {
        &self.name
    }

    fn evaluate(&self, f: &VertexFunction) -> Result<f64> {
        (self.eval)(f)
    }
}

/// `Q_q(f) = Q(f_0) + q(Tr f)` for an admissible boundary form `q`.
///
/// The vanishing-at-infinity part `f_0` is the deepest exhaustion
/// projection the truncation realizes (one cached Dirichlet solve per
/// evaluation); its deviation from the Royden part is controlled by the
/// star's tail bounds.
pub struct ComposedForm<'g> {
    star: &'g StarGraph,
    q: BoundaryForm,
    solvers: ExhaustionSolvers<'g>,
}

impl<'g> ComposedForm<'g> {
    pub fn q(&self) -> &BoundaryForm {
        &self.q
    }

    pub fn star(&self) -> &StarGraph {
        self.star
    }

    pub fn solvers(&self) -> &ExhaustionSolvers<'g> {
        &self.solvers
    }

    fn project_out_harmonic(&self, f: &VertexFunction) -> Result<VertexFunction> {
        let g = self.star.graph();
        let level = self.solvers.exhaustion().len() - 1;
        let zero = VertexFunction::zero(g.vertex_count());
        self.solvers
            .solve_level(level, |x| g.laplacian_apply(f, x), &zero)
    }
}

impl QuadraticForm for ComposedForm<'_> {
    fn name(&self) -> &str {
        "composed"
    }

    fn evaluate(&self, f: &VertexFunction) -> Result<f64> {
        let g = self.star.graph();
        check_l2_domain(g, f)?;
        let f0 = self.project_out_harmonic(f)?;
        let tr = trace_values(self.star, f)?;
        Ok(energy(g, &f0)? + self.q.evaluate(tr.as_slice()))
    }
}

/// Admissibility gate and constructor for composed forms: `q` must be PSD
/// (enforced by [`BoundaryForm`]), `q - q^DN` must be PSD, and the
/// difference must pass the sampled Markov checks.
pub fn compose_form<'g>(star: &'g StarGraph, q: BoundaryForm) -> Result<ComposedForm<'g>> {
    let qdn = qdn_matrix(star)?;
    if q.n() != star.rays() {
        return Err(Error::NotAdmissible(format!(
            "boundary form size {} does not match {} boundary points",
            q.n(),
            star.rays()
        )));
    }
    let diff = q.matrix() - qdn.matrix();
    let scale = diff.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
    if min_eigenvalue(&diff) < -1e-9 * (1.0 + scale) {
        return Err(Error::NotAdmissible(
            "q - qDN has a negative eigenvalue".into(),
        ));
    }
    let grid = boundary_grid(star.rays(), 10_000, 0x5eed);
    let report = markov_check_matrix(&diff, &grid, &NormalContraction::library(), 1e-10);
    if !report.passed() {
        return Err(Error::NotAdmissible(format!(
            "q - qDN failed the sampled Markov check ({} violations)",
            report.violations.len()
        )));
    }
    let exhaustion = Exhaustion::metric_balls(star.graph(), star.center(), star.depth())?;
    let solvers = ExhaustionSolvers::new(star.graph(), exhaustion);
    Ok(ComposedForm { star, q, solvers })
}

/// Trace of a form: the boundary matrix `A_ij = Q(H_{e_i}, H_{e_j})`.
pub fn trace_form(star: &StarGraph, q: &dyn QuadraticForm) -> Result<BoundaryForm> {
    let n = star.rays();
    let mut extensions = Vec::with_capacity(n);
    for j in 0..n {
        let (h, _) = crate::star::harmonic_extension(
            star,
            &crate::star::BoundaryFunction::coordinate(n, j),
        )?;
        extensions.push(h);
    }
    let mut a = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = q
                .bilinear(&extensions[i], &extensions[j])
                .map_err(|e| Error::NotEvaluable(format!("{}: {e}", q.name())))?;
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }
    BoundaryForm::new(a)
}

#[derive(Debug, Clone)]
pub struct MarkovViolation {
    pub function: usize,
    pub contraction: String,
    pub before: f64,
    pub after: f64,
}

#[derive(Debug, Clone, Default)]
pub struct MarkovReport {
    pub checks: usize,
    pub violations: Vec<MarkovViolation>,
}

impl MarkovReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks `Q(C ∘ f) <= Q(f) + tol (1 + Q(f))` over a function family and a
/// contraction library; failures are reported, not raised.
pub fn markov_check(
    q: &dyn QuadraticForm,
    fns: &[VertexFunction],
    contractions: &[NormalContraction],
    tol: f64,
) -> Result<MarkovReport> {
    let mut report = MarkovReport::default();
    for (i, f) in fns.iter().enumerate() {
        let before = q.evaluate(f)?;
        for c in contractions {
            let after = q.evaluate(&apply_contraction(c, f))?;
            report.checks += 1;
            if after > before + tol * (1.0 + before.abs()) {
                report.violations.push(MarkovViolation {
                    function: i,
                    contraction: c.name(),
                    before,
                    after,
                });
            }
        }
    }
    Ok(report)
}

/// Markov check for a (possibly signed) boundary matrix, e.g. a difference
/// `q - q^DN`; contractions act componentwise on boundary vectors.
pub fn markov_check_matrix(
    m: &DMatrix<f64>,
    grid: &[Vec<f64>],
    contractions: &[NormalContraction],
    tol: f64,
) -> MarkovReport {
    let mut report = MarkovReport::default();
    for (i, phi) in grid.iter().enumerate() {
        let before = quadratic(m, phi, phi);
        for c in contractions {
            let contracted: Vec<f64> = phi.iter().map(|&v| c.apply(v)).collect();
            let after = quadratic(m, &contracted, &contracted);
            report.checks += 1;
            if after > before + tol * (1.0 + before.abs()) {
                report.violations.push(MarkovViolation {
                    function: i,
                    contraction: c.name(),
                    before,
                    after,
                });
            }
        }
    }
    report
}

#[derive(Debug, Clone)]
pub struct OrderViolation {
    pub function: usize,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Debug, Clone, Default)]
pub struct OrderReport {
    pub checks: usize,
    pub violations: Vec<OrderViolation>,
}

impl OrderReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks the form ordering `Q1(f) >= Q2(f)` over a family, with a relative
/// allowance. Functions outside a domain count as +∞ on that side.
pub fn order_check(
    q1: &dyn QuadraticForm,
    q2: &dyn QuadraticForm,
    fns: &[VertexFunction],
    tol: f64,
) -> Result<OrderReport> {
    let mut report = OrderReport::default();
    for (i, f) in fns.iter().enumerate() {
        let lhs = match q1.evaluate(f) {
            Ok(v) => v,
            Err(Error::NotInDomain(_)) => f64::INFINITY,
            Err(e) => return Err(e),
        };
        let rhs = match q2.evaluate(f) {
            Ok(v) => v,
            Err(Error::NotInDomain(_)) => f64::INFINITY,
            Err(e) => return Err(e),
        };
        report.checks += 1;
        if rhs.is_infinite() {
            continue;
        }
        if lhs < rhs - tol * (1.0 + rhs.abs()) {
            report.violations.push(OrderViolation { function: i, lhs, rhs });
        }
    }
    Ok(report)
}

/// Residuals of the two boundary decompositions of a form `Q` whose trace
/// is `q`: against `Q(f_0) + q(Tr f)` and against `Q^N(f) + (q - q^DN)(Tr f)`.
pub fn decomposition_residuals(
    star: &StarGraph,
    q_form: &dyn QuadraticForm,
    q: &BoundaryForm,
    f: &VertexFunction,
) -> Result<(f64, f64)> {
    let g = star.graph();
    let value = q_form.evaluate(f)?;
    let exhaustion = Exhaustion::metric_balls(g, star.center(), star.depth())?;
    let solvers = ExhaustionSolvers::new(g, exhaustion);
    let split = royden_decompose_with(&solvers, f, 1e-8)?;
    let tr = trace_values(star, f)?;
    let r1 = (value - energy(g, &split.f0)? - q.evaluate(tr.as_slice())).abs();
    let qdn = qdn_matrix(star)?;
    let diff = q.matrix() - qdn.matrix();
    let neumann = eval_neumann(g, f)?;
    let r2 = (value - neumann - quadratic(&diff, tr.as_slice(), tr.as_slice())).abs();
    Ok((r1, r2))
}

/// Deterministic boundary grid: structured points (constants, coordinates,
/// signed differences, a few spiky vectors) plus seeded uniform samples.
pub fn boundary_grid(n: usize, random: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut grid = Vec::new();
    grid.push(vec![0.0; n]);
    grid.push(vec![1.0; n]);
    grid.push(vec![-1.0; n]);
    for i in 0..n {
        let mut e = vec![0.0; n];
        e[i] = 1.0;
        grid.push(e.clone());
        e[i] = -1.0;
        grid.push(e);
    }
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let mut v = vec![0.0; n];
                v[i] = 1.0;
                v[j] = -1.0;
                grid.push(v);
            }
        }
    }
    let mut spike = vec![-1.0; n];
    spike[0] = 2.0;
    grid.push(spike);
    let mut ramp: Vec<f64> = (0..n).map(|i| i as f64 - (n as f64 - 1.0) / 2.0).collect();
    grid.push(ramp.clone());
    ramp.reverse();
    grid.push(ramp);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dist = Uniform::new_inclusive(-3.0, 3.0);
    for _ in 0..random {
        grid.push((0..n).map(|_| dist.sample(&mut rng)).collect());
    }
    grid
}

/// Deterministic vertex-function family on a star graph: harmonic basis
/// members and extensions, bumps, constants, and seeded random functions
/// whose tails match their deepest ray values.
pub fn star_function_grid(star: &StarGraph, random: usize, seed: u64) -> Vec<VertexFunction> {
    let g = star.graph();
    let n = g.vertex_count();
    let mut fns = Vec::new();
    fns.push(VertexFunction::constant(n, 1.0));
    fns.push(VertexFunction::delta(n, star.center()));
    for h in star.harmonic_basis().iter().skip(1) {
        fns.push(h.clone());
        fns.push(h.add(&VertexFunction::delta(n, star.center())));
    }
    let mut bump = VertexFunction::delta(n, star.center());
    for j in 1..=star.rays() {
        bump.set_value(star.ray_vertex(j, 1), 0.5);
    }
    fns.push(bump);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dist = Uniform::new_inclusive(-2.0, 2.0);
    for _ in 0..random {
        let mut values: Vec<f64> = (0..n).map(|_| dist.sample(&mut rng)).collect();
        // smooth the deep halves of the rays so energies stay moderate under
        // the growing weights
        for j in 1..=star.rays() {
            let anchor = values[star.ray_vertex(j, star.depth() / 2)];
            for k in star.depth() / 2..=star.depth() {
                values[star.ray_vertex(j, k)] = anchor;
            }
        }
        let tails: Vec<f64> = (1..=star.rays())
            .map(|j| values[star.deepest(j)])
            .collect();
        fns.push(VertexFunction::from_values(values, Tail::PerRegion(tails)));
    }
    fns
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::star::{harmonic_extension, BoundaryFunction, StarMeasure, WeightFamily};
    use approx::assert_relative_eq;

    fn default_star() -> StarGraph {
        StarGraph::uniform(
            3,
            WeightFamily::Geometric { ratio: 2.0 },
            30,
            StarMeasure::GeometricDecay,
        )
        .unwrap()
    }

    /// A boundary-graph Laplacian: jumps between boundary points. Markovian
    /// and PSD with kernel containing the constants.
    fn jump_form(n: usize, weight: f64) -> DMatrix<f64> {
        let mut m = DMatrix::from_element(n, n, -weight);
        for i in 0..n {
            m[(i, i)] = weight * (n as f64 - 1.0);
        }
        m
    }

    #[test]
    fn neumann_form_examples() {
        let s = default_star();
        let g = s.graph();
        let one = VertexFunction::constant(g.vertex_count(), 1.0);
        assert_eq!(eval_neumann(g, &one).unwrap(), 0.0);
        let h2 = &s.harmonic_basis()[1];
        assert_relative_eq!(eval_neumann(g, h2).unwrap(), 8.0, epsilon = 1e-8);
    }

    #[test]
    fn neumann_domain_needs_finite_measure_for_tails() {
        let s = StarGraph::uniform(
            3,
            WeightFamily::Geometric { ratio: 2.0 },
            10,
            StarMeasure::Unit,
        )
        .unwrap();
        let one = VertexFunction::constant(s.graph().vertex_count(), 1.0);
        assert!(matches!(
            eval_neumann(s.graph(), &one),
            Err(Error::NotInDomain(_))
        ));
        let d = VertexFunction::delta(s.graph().vertex_count(), 0);
        assert!(eval_neumann(s.graph(), &d).is_ok());
    }

    #[test]
    fn composed_with_qdn_recovers_neumann() {
        let s = default_star();
        let q = qdn_matrix(&s).unwrap();
        let composed = compose_form(&s, q).unwrap();
        let g = s.graph();
        // harmonic-plus-compact test function
        let f = s.harmonic_basis()[1].add(&VertexFunction::delta(g.vertex_count(), 0));
        let lhs = composed.evaluate(&f).unwrap();
        let rhs = eval_neumann(g, &f).unwrap();
        assert!(
            (lhs - rhs).abs() <= 1e-8 * (1.0 + rhs),
            "composed {lhs} vs neumann {rhs}"
        );
        // finitely supported functions are seen identically
        let d = VertexFunction::delta(g.vertex_count(), 0);
        let lhs = composed.evaluate(&d).unwrap();
        let rhs = energy(g, &d).unwrap();
        assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + rhs));
    }

    #[test]
    fn inadmissible_boundary_forms_are_rejected() {
        let s = default_star();
        let qdn = qdn_matrix(&s).unwrap();
        // subtracting a jump form drops below qDN: not PSD
        let low = BoundaryForm::new(qdn.matrix() - jump_form(3, 0.2)).unwrap();
        assert!(matches!(
            compose_form(&s, low),
            Err(Error::NotAdmissible(_))
        ));
        // PSD difference that is not Markovian: rank-one with positive
        // off-diagonal entries
        let v = nalgebra::DVector::from_column_slice(&[1.0, 1.0, -2.0]);
        let bad = BoundaryForm::new(qdn.matrix() + &v * v.transpose()).unwrap();
        assert!(matches!(
            compose_form(&s, bad),
            Err(Error::NotAdmissible(_))
        ));
    }

    #[test]
    fn trace_form_of_neumann_is_qdn() {
        let s = default_star();
        let neumann = NeumannForm::new(s.graph());
        let a = trace_form(&s, &neumann).unwrap();
        let qdn = qdn_matrix(&s).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert!(
                    (a.matrix()[(i, j)] - qdn.matrix()[(i, j)]).abs() <= 1e-8,
                    "entry ({i},{j}): {} vs {}",
                    a.matrix()[(i, j)],
                    qdn.matrix()[(i, j)]
                );
            }
        }
        assert!(a.kills_constants(1e-10));
    }

    #[test]
    fn round_trip_recovers_boundary_form() {
        let s = default_star();
        let qdn = qdn_matrix(&s).unwrap();
        let q = BoundaryForm::new(qdn.matrix() + jump_form(3, 0.35)).unwrap();
        let composed = compose_form(&s, q.clone()).unwrap();
        let back = trace_form(&s, &composed).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert!(
                    (back.matrix()[(i, j)] - q.matrix()[(i, j)]).abs() <= 1e-7,
                    "entry ({i},{j}): {} vs {}",
                    back.matrix()[(i, j)],
                    q.matrix()[(i, j)]
                );
            }
        }
    }

    #[test]
    fn markov_reports_on_boundary_difference() {
        let s = default_star();
        let qdn = qdn_matrix(&s).unwrap();
        // zero difference: trivially Markovian
        let zero = qdn.matrix() - qdn.matrix();
        let grid = boundary_grid(3, 500, 7);
        let r = markov_check_matrix(&zero, &grid, &NormalContraction::library(), 1e-10);
        assert!(r.passed());
        // a jump difference passes
        let r = markov_check_matrix(&jump_form(3, 0.5), &grid, &NormalContraction::library(), 1e-10);
        assert!(r.passed());
        // clamp example: q = qDN + jump, φ = (2,-1,0)
        let q = qdn.matrix() + jump_form(3, 0.5);
        let phi = vec![2.0, -1.0, 0.0];
        let c = NormalContraction::Clamp { lo: -1.0, hi: 1.0 };
        let clamped: Vec<f64> = phi.iter().map(|&v| c.apply(v)).collect();
        assert!(quadratic(&q, &clamped, &clamped) <= quadratic(&q, &phi, &phi));
    }

    #[test]
    fn energy_markov_suite_passes() {
        let s = default_star();
        let neumann = NeumannForm::new(s.graph());
        let fns = star_function_grid(&s, 100, 11);
        let report = markov_check(&neumann, &fns, &NormalContraction::library(), 1e-10).unwrap();
        assert!(report.passed(), "{:?}", report.violations.first());
        assert_eq!(report.checks, fns.len() * 5);
    }

    #[test]
    fn order_check_passes_for_composed_vs_neumann() {
        let s = default_star();
        let qdn = qdn_matrix(&s).unwrap();
        let q = BoundaryForm::new(qdn.matrix() + jump_form(3, 0.25)).unwrap();
        let composed = compose_form(&s, q).unwrap();
        let neumann = NeumannForm::new(s.graph());
        let fns = star_function_grid(&s, 30, 13);
        let report = order_check(&composed, &neumann, &fns, 1e-10).unwrap();
        assert!(report.passed(), "{:?}", report.violations.first());
        // equality case passes trivially
        let report = order_check(&neumann, &neumann, &fns, 1e-10).unwrap();
        assert!(report.passed());
    }

    #[test]
    fn decomposition_residuals_on_composed_form() {
        let s = default_star();
        let qdn = qdn_matrix(&s).unwrap();
        let composed = compose_form(&s, qdn.clone()).unwrap();
        let g = s.graph();
        let f = s.harmonic_basis()[1].add(&VertexFunction::delta(g.vertex_count(), 0));
        let q_of = trace_form(&s, &composed).unwrap();
        let (r1, r2) = decomposition_residuals(&s, &composed, &q_of, &f).unwrap();
        let scale = 1.0 + composed.evaluate(&f).unwrap();
        assert!(r1 <= 1e-7 * scale, "r1 = {r1}");
        assert!(r2 <= 1e-7 * scale, "r2 = {r2}");
        // all terms vanish on constants
        let one = VertexFunction::constant(g.vertex_count(), 1.0);
        let (r1, r2) = decomposition_residuals(&s, &composed, &q_of, &one).unwrap();
        assert!(r1 <= 1e-10 && r2 <= 1e-10, "r1 = {r1}, r2 = {r2}");
    }

    #[test]
    fn composed_equals_energy_on_finite_support() {
        let s = default_star();
        let qdn = qdn_matrix(&s).unwrap();
        let composed = compose_form(&s, qdn).unwrap();
        let g = s.graph();
        let mut f = VertexFunction::delta(g.vertex_count(), s.ray_vertex(2, 3));
        f.set_value(s.ray_vertex(2, 2), -0.5);
        let lhs = composed.evaluate(&f).unwrap();
        let rhs = energy(g, &f).unwrap();
        assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + rhs), "{lhs} vs {rhs}");
    }

    #[test]
    fn extension_trace_round_trip_within_bounds() {
        let s = default_star();
        let phi = BoundaryFunction(vec![0.3, -1.2, 2.0]);
        let (h, _) = harmonic_extension(&s, &phi).unwrap();
        let (tr, bounds) = crate::star::trace(&s, &h).unwrap();
        for j in 0..3 {
            assert!(
                (tr.0[j] - phi.0[j]).abs() <= bounds[j] + 1e-10,
                "ray {j}: {} vs {}",
                tr.0[j],
                phi.0[j]
            );
        }
    }
}
