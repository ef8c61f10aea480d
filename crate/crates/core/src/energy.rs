//! The energy form of a weighted graph and its discrete Green's formula.
//!
//! For the truncated representation all sums are finite: edges inside the
//! truncation contribute directly, crossing edges compare the boundary value
//! against the declared tail constant, and everything strictly beyond the
//! truncation contributes zero for the admissible tail rules.

use crate::error::{Error, Result};
use crate::function::VertexFunction;
use crate::graph::WeightedGraph;

fn check_tail_killing(g: &WeightedGraph, f: &VertexFunction, h: &VertexFunction) -> Result<()> {
    if !g.has_tail_killing() {
        return Ok(());
    }
    let regions = g.tail_regions().max(1);
    for r in 0..regions {
        if f.tail_value(r) * h.tail_value(r) != 0.0 {
            return Err(Error::Tail(
                "nonzero killing beyond the truncation meets a nonzero tail; the killing sum diverges"
                    .into(),
            ));
        }
    }
    Ok(())
}

/// Bilinear energy form: edge part over stored and crossing edges plus the
/// killing part. Symmetric in its arguments by construction.
pub fn energy_bilinear(g: &WeightedGraph, f: &VertexFunction, h: &VertexFunction) -> Result<f64> {
    g.check_function(f)?;
    g.check_function(h)?;
    check_tail_killing(g, f, h)?;
    Ok(edge_part_bilinear(g, f, h) + killing_part_bilinear(g, f, h))
}

/// Quadratic energy of a single function.
pub fn energy(g: &WeightedGraph, f: &VertexFunction) -> Result<f64> {
    energy_bilinear(g, f, f)
}

/// The jump ("main") part of the energy: only edge differences, no killing.
pub fn edge_part_bilinear(g: &WeightedGraph, f: &VertexFunction, h: &VertexFunction) -> f64 {
    let mut acc = 0.0;
    for e in g.edges() {
        acc += e.weight * (f.value(e.u) - f.value(e.v)) * (h.value(e.u) - h.value(e.v));
    }
    for ce in g.all_crossing_edges() {
        acc += ce.weight
            * (f.value(ce.vertex) - f.tail_value(ce.region))
            * (h.value(ce.vertex) - h.tail_value(ce.region));
    }
    acc
}

/// The killing part of the energy.
pub fn killing_part_bilinear(g: &WeightedGraph, f: &VertexFunction, h: &VertexFunction) -> f64 {
    (0..g.vertex_count())
        .map(|x| g.killing(x) * f.value(x) * h.value(x))
        .sum()
}

pub fn edge_part(g: &WeightedGraph, f: &VertexFunction) -> f64 {
    edge_part_bilinear(g, f, f)
}

pub fn killing_part(g: &WeightedGraph, f: &VertexFunction) -> f64 {
    killing_part_bilinear(g, f, f)
}

/// Defect of the discrete Green's formula `Q(f, h) = Σ f(x) ℒh(x)` for a
/// finitely supported `f`. Exact inputs give residuals at rounding level.
pub fn green_formula_residual(
    g: &WeightedGraph,
    f: &VertexFunction,
    h: &VertexFunction,
) -> Result<f64> {
    g.check_function(f)?;
    g.check_function(h)?;
    if !f.is_finitely_supported() {
        return Err(Error::Eval(
            "Green's formula residual requires a finitely supported first argument".into(),
        ));
    }
    let lhs = energy_bilinear(g, f, h)?;
    let mut rhs = 0.0;
    for x in f.support() {
        rhs += f.value(x) * g.laplacian_apply(h, x)?;
    }
    Ok((lhs - rhs).abs())
}
