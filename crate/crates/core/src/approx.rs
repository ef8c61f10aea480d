//! Resolvent approximating forms and the main / killing part machinery.
//!
//! `Q^(α)(f) = α <(I - α G_α) f, f>_m` with `G_α` the resolvent of the
//! form on the finite truncation, and `Q_φ(f) = Q(φ f) - Q(φ f², φ)`,
//! whose monotone limit along cutoffs increasing to 1 isolates the jump
//! part of a form; the killing part is the remainder.

use crate::energy::{edge_part, killing_part};
use crate::error::{Error, Result};
use crate::forms::QuadraticForm;
use crate::function::{Tail, VertexFunction};
use crate::graph::{Vertex, WeightedGraph};
use crate::solve::{SpdSolver, SpdSystem};

/// An α-sweep of the approximating form: values are nondecreasing in α and
/// bounded by the form value itself.
#[derive(Debug, Clone)]
pub struct ApproxFormResult {
    pub alphas: Vec<f64>,
    pub values: Vec<f64>,
    /// Last (largest-α) value; the sweep is monotone and bounded.
    pub limit: f64,
}

/// `Q^(α)(f)` on the truncation, treating the truncated graph as the whole
/// space (Neumann realization; crossing edges do not enter). The resolvent
/// is the solve `(L + α M) u = M f` in matrix form.
pub fn approximating_form(g: &WeightedGraph, alpha: f64, f: &VertexFunction) -> Result<f64> {
    g.check_function(f)?;
    if !(alpha > 0.0) {
        return Err(Error::Invariant(format!(
            "approximating form needs alpha > 0, got {alpha}"
        )));
    }
    let n = g.vertex_count();
    let mut sys = SpdSystem::new(n);
    for e in g.edges() {
        sys.add_diag(e.u, e.weight);
        sys.add_diag(e.v, e.weight);
        sys.add_sym_off(e.u, e.v, -e.weight);
    }
    for x in 0..n {
        sys.add_diag(x, g.killing(x) + alpha * g.measure(x));
    }
    let rhs: Vec<f64> = (0..n).map(|x| g.measure(x) * f.value(x)).collect();
    let u = SpdSolver::new(sys)?.solve(&rhs)?;
    let inner_ff: f64 = (0..n).map(|x| g.measure(x) * f.value(x) * f.value(x)).sum();
    let inner_uf: f64 = (0..n).map(|x| g.measure(x) * u[x] * f.value(x)).sum();
    let value = alpha * (inner_ff - alpha * inner_uf);
    if value < -1e-12 * (1.0 + inner_ff) {
        return Err(Error::Invariant(format!(
            "approximating form came out negative: {value}"
        )));
    }
    Ok(value)
}

/// Evaluates `Q^(α)` along a grid of α values, enforcing monotonicity.
pub fn alpha_sweep(g: &WeightedGraph, alphas: &[f64], f: &VertexFunction) -> Result<ApproxFormResult> {
    if alphas.is_empty() {
        return Err(Error::Invariant("alpha sweep needs at least one value".into()));
    }
    if alphas.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Invariant("alpha grid must be strictly increasing".into()));
    }
    let mut values = Vec::with_capacity(alphas.len());
    for &a in alphas {
        let v = approximating_form(g, a, f)?;
        if let Some(&prev) = values.last() {
            if v < prev - 1e-12 * (1.0 + prev) {
                return Err(Error::Invariant(format!(
                    "approximating form decreased along alpha: {prev} -> {v}"
                )));
            }
        }
        values.push(v);
    }
    let limit = *values.last().expect("nonempty");
    Ok(ApproxFormResult {
        alphas: alphas.to_vec(),
        values,
        limit,
    })
}

/// `Q_φ(f) = Q(φ f) - Q(φ f², φ)` for a cutoff `0 <= φ <= 1`.
pub fn q_phi(
    q: &dyn QuadraticForm,
    phi: &VertexFunction,
    f: &VertexFunction,
) -> Result<f64> {
    check_cutoff(phi)?;
    let pf = phi.mul(f);
    let pf2 = phi.mul(&f.squared());
    Ok(q.evaluate(&pf)? - q.bilinear(&pf2, phi)?)
}

fn check_cutoff(phi: &VertexFunction) -> Result<()> {
    let ok = phi.values().iter().all(|&v| (0.0..=1.0).contains(&v));
    let tail_ok = match phi.tail() {
        Tail::Zero => true,
        Tail::Constant(c) => (0.0..=1.0).contains(c),
        Tail::PerRegion(v) => v.iter().all(|c| (0.0..=1.0).contains(c)),
    };
    if !(ok && tail_ok) {
        return Err(Error::Invariant("cutoff must take values in [0, 1]".into()));
    }
    Ok(())
}

/// Increasing cutoffs: ball indicators with a one-layer linear ramp,
/// followed by the constant function 1. On a finite truncation the
/// constant cutoff dominates every admissible cutoff, so it attains the
/// supremum defining the main part.
pub fn ramp_cutoffs(g: &WeightedGraph, root: Vertex, count: usize) -> Result<Vec<VertexFunction>> {
    if root >= g.vertex_count() {
        return Err(Error::Eval(format!("root vertex {root} out of range")));
    }
    let dist = g.distances(root);
    let max_dist = dist.iter().copied().max().unwrap_or(0);
    let n = g.vertex_count();
    let mut cutoffs = Vec::new();
    for r in 1..=count.min(max_dist) {
        let values: Vec<f64> = dist
            .iter()
            .map(|&d| {
                if d <= r {
                    1.0
                } else if d == r + 1 {
                    0.5
                } else {
                    0.0
                }
            })
            .collect();
        cutoffs.push(VertexFunction::from_values(values, Tail::Zero));
    }
    cutoffs.push(VertexFunction::constant(n, 1.0));
    Ok(cutoffs)
}

/// The main and killing parts of a form at a bounded function, computed as
/// the stabilized monotone limit of `Q_φ` along increasing cutoffs.
#[derive(Debug, Clone)]
pub struct MainKilling {
    pub main: f64,
    pub killing: f64,
    /// The `Q_φ` values along the cutoff sequence (monotone log).
    pub values: Vec<f64>,
}

fn is_saturated_cutoff(phi: &VertexFunction) -> bool {
    phi.values().iter().all(|&v| v == 1.0)
        && match phi.tail() {
            Tail::Zero => false,
            Tail::Constant(c) => *c == 1.0,
            Tail::PerRegion(v) => v.iter().all(|&c| c == 1.0),
        }
}

pub fn main_and_killing(
    q: &dyn QuadraticForm,
    f: &VertexFunction,
    cutoffs: &[VertexFunction],
    stabilization_tol: f64,
) -> Result<MainKilling> {
    if cutoffs.len() < 2 {
        return Err(Error::Invariant("need at least two cutoffs".into()));
    }
    let total = q.evaluate(f)?;
    let mut values: Vec<f64> = Vec::new();
    let mut main = None;
    for phi in cutoffs {
        let v = q_phi(q, phi, f)?;
        if let Some(&prev) = values.last() {
            if v < prev - 1e-12 * (1.0 + prev.abs()) {
                return Err(Error::Invariant(format!(
                    "Q_phi decreased along increasing cutoffs: {prev} -> {v}"
                )));
            }
            if (v - prev).abs() < stabilization_tol {
                values.push(v);
                main = Some(v);
                break;
            }
        }
        values.push(v);
        // the constant-1 cutoff dominates every 0 <= φ <= 1, so by
        // monotonicity in φ its value is the supremum: nothing to wait for
        if is_saturated_cutoff(phi) {
            main = Some(v);
            break;
        }
    }
    let main = main.ok_or_else(|| {
        Error::NoStabilization(format!(
            "Q_phi did not stabilize to {stabilization_tol:e} along {} cutoffs",
            cutoffs.len()
        ))
    })?;
    let killing = total - main;
    if killing < -1e-10 * (1.0 + total.abs()) {
        return Err(Error::Invariant(format!(
            "killing part came out negative: {killing}"
        )));
    }
    Ok(MainKilling {
        main,
        killing,
        values,
    })
}

/// Identity targets for the main and killing parts of the Neumann form:
/// the edge sum without killing and the pure killing sum.
pub fn neumann_part_targets(g: &WeightedGraph, f: &VertexFunction) -> (f64, f64) {
    (edge_part(g, f), killing_part(g, f))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms::{CustomForm, NeumannForm};
    use crate::graph::{lattice_graph, Edge, GraphFamily};
    use crate::star::{StarGraph, StarMeasure, WeightFamily};
    use approx::assert_relative_eq;

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

    #[test]
    fn zero_function_gives_zero_for_all_alpha() {
        let g = two_vertex();
        let z = VertexFunction::zero(2);
        for a in [1.0, 10.0, 1000.0] {
            assert_eq!(approximating_form(&g, a, &z).unwrap(), 0.0);
        }
    }

    #[test]
    fn two_vertex_resolvent_hand_value() {
        // (L + I) u = δ_b gives u = (1/5, 3/5); Q^(1)(δ_b) = 1 - 3/5 = 2/5
        let g = two_vertex();
        let f = VertexFunction::delta(2, 1);
        assert_relative_eq!(
            approximating_form(&g, 1.0, &f).unwrap(),
            0.4,
            epsilon = 1e-14
        );
    }

    #[test]
    fn sweep_is_monotone_and_approaches_energy() {
        let s = StarGraph::uniform(
            3,
            WeightFamily::Geometric { ratio: 2.0 },
            12,
            StarMeasure::Unit,
        )
        .unwrap();
        let g = s.graph();
        let f = VertexFunction::delta(g.vertex_count(), 0);
        let sweep = alpha_sweep(g, &[1.0, 10.0, 100.0, 1000.0], &f).unwrap();
        // Q(δ_center) = 3 b_1 = 6 on the truncation
        let q = crate::energy::energy(g, &f).unwrap();
        assert_relative_eq!(q, 6.0, epsilon = 1e-12);
        assert!(sweep.values.windows(2).all(|w| w[1] >= w[0]));
        assert!(sweep.limit <= q + 1e-12);
        assert!((q - sweep.limit) / q < 0.01, "limit {}", sweep.limit);
    }

    #[test]
    fn q_phi_identity_for_energy_restrictions() {
        let s = StarGraph::uniform(
            3,
            WeightFamily::Geometric { ratio: 2.0 },
            10,
            StarMeasure::GeometricDecay,
        )
        .unwrap();
        let g = s.graph();
        let q = NeumannForm::new(g);
        let one = VertexFunction::constant(g.vertex_count(), 1.0);
        let f = s.harmonic_basis()[1].clone();
        let got = q_phi(&q, &one, &f).unwrap();
        assert_relative_eq!(got, edge_part(g, &f), epsilon = 1e-10);
        // φ = 0 kills everything
        let zero = VertexFunction::zero(g.vertex_count());
        assert_eq!(q_phi(&q, &zero, &f).unwrap(), 0.0);
    }

    #[test]
    fn q_phi_is_monotone_in_phi() {
        let g = two_vertex();
        let q = NeumannForm::new(&g);
        let f = VertexFunction::from_values(vec![1.0, -1.0], Tail::Zero);
        let small = VertexFunction::from_values(vec![0.25, 0.5], Tail::Zero);
        let large = VertexFunction::from_values(vec![0.5, 1.0], Tail::Zero);
        let a = q_phi(&q, &small, &f).unwrap();
        let b = q_phi(&q, &large, &f).unwrap();
        assert!(a <= b + 1e-14);
        // and bounded by the form itself
        assert!(b <= q.evaluate(&f).unwrap() + 1e-14);
    }

    #[test]
    fn cutoffs_are_valid_and_increasing() {
        let g = lattice_graph(2, 4).unwrap();
        let cutoffs = ramp_cutoffs(&g, 0, 4).unwrap();
        for w in cutoffs.windows(2) {
            for x in 0..g.vertex_count() {
                assert!(w[0].value(x) <= w[1].value(x) + 1e-15);
            }
        }
        assert!(q_phi(&NeumannForm::new(&g), &cutoffs[0], &cutoffs[0]).is_ok());
        let bad = VertexFunction::constant(g.vertex_count(), 2.0);
        assert!(check_cutoff(&bad).is_err());
    }

    #[test]
    fn killing_part_vanishes_without_killing() {
        let s = StarGraph::uniform(
            3,
            WeightFamily::Geometric { ratio: 2.0 },
            10,
            StarMeasure::GeometricDecay,
        )
        .unwrap();
        let g = s.graph();
        let q = NeumannForm::new(g);
        let f = s.harmonic_basis()[1].clone();
        let cutoffs = ramp_cutoffs(g, 0, 10).unwrap();
        let parts = main_and_killing(&q, &f, &cutoffs, 1e-10).unwrap();
        assert!(parts.killing.abs() <= 1e-10);
        let (edge, _) = neumann_part_targets(g, &f);
        assert!((parts.main - edge).abs() <= 1e-8 * (1.0 + edge));
    }

    #[test]
    fn lattice_killing_part_sees_only_the_origin() {
        let mut g = lattice_graph(3, 4).unwrap();
        g.override_killing(0, 1.0);
        let g = g.with_finite_total_measure(true);
        // the raw energy restricted to the truncation
        let q = CustomForm::new("energy", |f: &VertexFunction| crate::energy::energy(&g, f));
        let one = VertexFunction::constant(g.vertex_count(), 1.0);
        let cutoffs = ramp_cutoffs(&g, 0, 6).unwrap();
        let parts = main_and_killing(&q, &one, &cutoffs, 1e-10).unwrap();
        assert!(parts.main.abs() <= 1e-12);
        assert_relative_eq!(parts.killing, 1.0, epsilon = 1e-10);
    }

    #[test]
    fn stabilization_failure_is_reported() {
        let g = lattice_graph(2, 6).unwrap();
        let q = NeumannForm::new(&g);
        // an oscillating function keeps picking up energy as cutoffs grow
        let f = VertexFunction::from_values(
            (0..g.vertex_count())
                .map(|i| if i % 2 == 0 { 1.0 } else { -1.0 })
                .collect(),
            Tail::Zero,
        );
        let cutoffs = ramp_cutoffs(&g, 0, 2).unwrap();
        let short = &cutoffs[..2];
        assert!(matches!(
            main_and_killing(&q, &f, short, 1e-10),
            Err(Error::NoStabilization(_))
        ));
    }
}
