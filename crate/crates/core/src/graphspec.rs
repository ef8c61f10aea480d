//! Structured-text input formats: graph specifications, vertex functions
//! and boundary forms. All files are JSON; weights are decimal literals and
//! parse to the nearest double, bit-exactly.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::function::{Tail, VertexFunction};
use crate::graph::{lattice_graph, path_graph, Edge, GraphFamily, WeightedGraph};
use crate::star::{BoundaryForm, StarGraph, StarMeasure, WeightFamily};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EdgeSpec {
    pub u: String,
    pub v: String,
    pub w: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KillingSpec {
    pub v: String,
    pub c: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MeasureOverride {
    pub v: String,
    pub m: f64,
}

/// Measure field: a uniform value, per-vertex overrides of the unit
/// default, or the full form with an explicit finite-total-measure flag.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MeasureSpec {
    Uniform(f64),
    PerVertex(Vec<MeasureOverride>),
    Full {
        #[serde(default = "default_measure")]
        default: f64,
        #[serde(default)]
        overrides: Vec<MeasureOverride>,
        #[serde(default)]
        tail_finite: bool,
    },
}

fn default_measure() -> f64 {
    1.0
}

/// Ray weights: one family for all rays or one per ray, e.g.
/// `"geometric:2"` or `["geometric:2", "power:1.5"]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WeightsSpec {
    Uniform(String),
    PerRay(Vec<String>),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum GeneratorSpec {
    Star {
        rays: usize,
        weights: WeightsSpec,
        depth: usize,
        #[serde(default)]
        decay_measure: bool,
    },
    Lattice {
        dim: usize,
        radius: usize,
    },
    Path {
        length: usize,
    },
}

/// A graph specification: either an explicit vertex/edge list or a family
/// generator, plus killing and measure data.
#[derive(Debug, Clone, Serialize, Deserialize, Default)]
pub struct GraphSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vertices: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<GeneratorSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub edges: Vec<EdgeSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub killing: Vec<KillingSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub measure: Option<MeasureSpec>,
    /// Marks the infinite family as killed beyond the truncation.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub tail_killing: bool,
}

impl GraphSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Spec(format!("cannot parse graph spec: {e}")))
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Builds and validates a [`WeightedGraph`] from a specification.
pub fn build_graph(spec: &GraphSpec) -> Result<WeightedGraph> {
    let mut g = match (&spec.vertices, &spec.generator) {
        (Some(_), Some(_)) => {
            return Err(Error::Spec(
                "give either an explicit vertex list or a generator, not both".into(),
            ))
        }
        (None, None) => {
            return Err(Error::Spec(
                "a graph spec needs either vertices or a generator".into(),
            ))
        }
        (Some(vertices), None) => build_explicit(vertices, &spec.edges)?,
        (None, Some(gen)) => {
            if !spec.edges.is_empty() {
                return Err(Error::Spec("generated graphs take no explicit edges".into()));
            }
            build_generated(gen)?
        }
    };
    for k in &spec.killing {
        let v = g
            .vertex(&k.v)
            .ok_or_else(|| Error::Spec(format!("killing references unknown vertex {:?}", k.v)))?;
        if !(k.c >= 0.0) {
            return Err(Error::Invariant(format!(
                "killing must be nonnegative, got c({}) = {}",
                k.v, k.c
            )));
        }
        g.override_killing(v, k.c);
    }
    apply_measure(&mut g, spec.measure.as_ref())?;
    if spec.tail_killing {
        g = g.with_tail_killing(true);
    }
    Ok(g)
}

/// Builds a [`StarGraph`] from a specification whose generator is a star.
pub fn build_star(spec: &GraphSpec) -> Result<StarGraph> {
    match &spec.generator {
        Some(GeneratorSpec::Star {
            rays,
            weights,
            depth,
            decay_measure,
        }) => {
            let families = parse_families(*rays, weights)?;
            let measure = if *decay_measure {
                StarMeasure::GeometricDecay
            } else {
                StarMeasure::Unit
            };
            StarGraph::per_ray(families, *depth, measure)
        }
        _ => Err(Error::Spec("this spec does not generate a star graph".into())),
    }
}

fn parse_families(rays: usize, weights: &WeightsSpec) -> Result<Vec<WeightFamily>> {
    match weights {
        WeightsSpec::Uniform(s) => {
            let fam = WeightFamily::parse(s)?;
            Ok(vec![fam; rays])
        }
        WeightsSpec::PerRay(list) => {
            if list.len() != rays {
                return Err(Error::Spec(format!(
                    "{} rays but {} weight families",
                    rays,
                    list.len()
                )));
            }
            list.iter().map(|s| WeightFamily::parse(s)).collect()
        }
    }
}

fn build_explicit(vertices: &[String], edges: &[EdgeSpec]) -> Result<WeightedGraph> {
    let mut index = BTreeMap::new();
    for (i, l) in vertices.iter().enumerate() {
        if index.insert(l.clone(), i).is_some() {
            return Err(Error::Spec(format!("duplicate vertex {l:?}")));
        }
    }
    let resolve = |l: &str| -> Result<usize> {
        index
            .get(l)
            .copied()
            .ok_or_else(|| Error::Spec(format!("edge references unknown vertex {l:?}")))
    };
    // canonical pair -> weight; a re-listed pair must agree, otherwise the
    // edge list encodes an asymmetric b and is rejected
    let mut pairs: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for e in edges {
        let (u, v) = (resolve(&e.u)?, resolve(&e.v)?);
        let key = (u.min(v), u.max(v));
        match pairs.get(&key) {
            Some(&w) if w != e.w => {
                return Err(Error::Invariant(format!(
                    "asymmetric edge weights for {{{}, {}}}: {} vs {}",
                    e.u, e.v, w, e.w
                )));
            }
            _ => {
                pairs.insert(key, e.w);
            }
        }
    }
    let edge_list: Vec<Edge> = pairs
        .into_iter()
        .map(|((u, v), weight)| Edge { u, v, weight })
        .collect();
    let n = vertices.len();
    WeightedGraph::new(
        vertices.to_vec(),
        edge_list,
        vec![0.0; n],
        vec![1.0; n],
        vec![],
        GraphFamily::Explicit,
    )
}

fn build_generated(gen: &GeneratorSpec) -> Result<WeightedGraph> {
    match gen {
        GeneratorSpec::Star {
            rays,
            weights,
            depth,
            decay_measure,
        } => {
            let families = parse_families(*rays, weights)?;
            let measure = if *decay_measure {
                StarMeasure::GeometricDecay
            } else {
                StarMeasure::Unit
            };
            Ok(StarGraph::per_ray(families, *depth, measure)?.into_graph())
        }
        GeneratorSpec::Lattice { dim, radius } => lattice_graph(*dim, *radius),
        GeneratorSpec::Path { length } => path_graph(*length),
    }
}

fn apply_measure(g: &mut WeightedGraph, measure: Option<&MeasureSpec>) -> Result<()> {
    let apply_overrides = |g: &mut WeightedGraph, overrides: &[MeasureOverride]| -> Result<()> {
        for o in overrides {
            let v = g.vertex(&o.v).ok_or_else(|| {
                Error::Spec(format!("measure references unknown vertex {:?}", o.v))
            })?;
            if !(o.m > 0.0) {
                return Err(Error::Invariant(format!(
                    "measure must be strictly positive, got m({}) = {}",
                    o.v, o.m
                )));
            }
            g.override_measure(v, o.m);
        }
        Ok(())
    };
    match measure {
        None => Ok(()),
        Some(MeasureSpec::Uniform(m)) => {
            if !(*m > 0.0) {
                return Err(Error::Invariant(format!(
                    "measure must be strictly positive, got {m}"
                )));
            }
            for v in 0..g.vertex_count() {
                g.override_measure(v, *m);
            }
            Ok(())
        }
        Some(MeasureSpec::PerVertex(overrides)) => apply_overrides(g, overrides),
        Some(MeasureSpec::Full {
            default,
            overrides,
            tail_finite,
        }) => {
            if !(*default > 0.0) {
                return Err(Error::Invariant("default measure must be positive".into()));
            }
            for v in 0..g.vertex_count() {
                g.override_measure(v, *default);
            }
            apply_overrides(g, overrides)?;
            if *tail_finite {
                g.set_finite_total_measure(true);
            }
            Ok(())
        }
    }
}

/// Tail rule of a function file.
#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(tag = "rule", rename_all = "kebab-case")]
pub enum TailSpec {
    #[default]
    Zero,
    Constant {
        value: f64,
    },
    ConstantPerRay {
        values: Vec<f64>,
    },
}

/// A vertex function file: vertex label -> value plus a tail rule.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FunctionSpec {
    #[serde(default)]
    pub values: BTreeMap<String, f64>,
    #[serde(default)]
    pub tail: TailSpec,
}

impl FunctionSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Spec(format!("cannot parse function: {e}")))
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Realizes a function file on a graph. Vertices missing from the file take
/// the tail-rule value for zero and constant tails; per-ray tails require
/// every vertex to be listed.
pub fn build_function(g: &WeightedGraph, spec: &FunctionSpec) -> Result<VertexFunction> {
    let (tail, fill) = match &spec.tail {
        TailSpec::Zero => (Tail::Zero, Some(0.0)),
        TailSpec::Constant { value } => (Tail::Constant(*value), Some(*value)),
        TailSpec::ConstantPerRay { values } => {
            if values.len() != g.tail_regions() {
                return Err(Error::Eval(format!(
                    "per-ray tail lists {} constants, graph has {} tail regions",
                    values.len(),
                    g.tail_regions()
                )));
            }
            (Tail::PerRegion(values.clone()), None)
        }
    };
    let mut values = vec![0.0; g.vertex_count()];
    let mut present = vec![false; g.vertex_count()];
    for (label, &x) in &spec.values {
        let v = g
            .vertex(label)
            .ok_or_else(|| Error::Eval(format!("function references unknown vertex {label:?}")))?;
        values[v] = x;
        present[v] = true;
    }
    for v in 0..g.vertex_count() {
        if !present[v] {
            match fill {
                Some(x) => values[v] = x,
                None => {
                    return Err(Error::Eval(format!(
                        "vertex {} missing from function with per-ray tail",
                        g.label(v)
                    )))
                }
            }
        }
    }
    Ok(VertexFunction::from_values(values, tail))
}

/// A boundary form file: boundary size and row-major matrix entries.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundaryFormSpec {
    pub n: usize,
    pub entries: Vec<f64>,
}

impl BoundaryFormSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text)
            .map_err(|e| Error::Spec(format!("cannot parse boundary form: {e}")))
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

pub fn build_boundary_form(spec: &BoundaryFormSpec) -> Result<BoundaryForm> {
    if spec.entries.len() != spec.n * spec.n {
        return Err(Error::Spec(format!(
            "boundary form of size {} needs {} entries, got {}",
            spec.n,
            spec.n * spec.n,
            spec.entries.len()
        )));
    }
    BoundaryForm::from_row_major(spec.n, &spec.entries)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_vertex_spec_builds() {
        let spec = GraphSpec::from_json(
            r#"{"vertices": ["a", "b"],
                "edges": [{"u": "a", "v": "b", "w": 1.0}],
                "killing": [{"v": "a", "c": 1.0}]}"#,
        )
        .unwrap();
        let g = build_graph(&spec).unwrap();
        assert_eq!(g.vertex_count(), 2);
        assert_eq!(g.weighted_degree(0), 1.0);
        assert_eq!(g.killing(0), 1.0);
    }

    #[test]
    fn asymmetric_edge_list_rejected() {
        let spec = GraphSpec::from_json(
            r#"{"vertices": ["a", "b"],
                "edges": [{"u": "a", "v": "b", "w": 1.0},
                          {"u": "b", "v": "a", "w": 2.0}]}"#,
        )
        .unwrap();
        assert!(matches!(build_graph(&spec), Err(Error::Invariant(_))));
    }

    #[test]
    fn symmetric_restatement_accepted() {
        let spec = GraphSpec::from_json(
            r#"{"vertices": ["a", "b"],
                "edges": [{"u": "a", "v": "b", "w": 1.5},
                          {"u": "b", "v": "a", "w": 1.5}],
                "killing": [{"v": "b", "c": 0.25}]}"#,
        )
        .unwrap();
        let g = build_graph(&spec).unwrap();
        assert_eq!(g.edges().len(), 1);
    }

    #[test]
    fn star_generator_vertex_count() {
        let spec = GraphSpec::from_json(
            r#"{"generator": {"kind": "star", "rays": 3, "weights": "geometric:2", "depth": 12}}"#,
        )
        .unwrap();
        let g = build_graph(&spec).unwrap();
        assert_eq!(g.vertex_count(), 37);
    }

    #[test]
    fn bad_syntax_is_a_spec_error() {
        assert!(matches!(
            GraphSpec::from_json("{nonsense"),
            Err(Error::Spec(_))
        ));
        let spec = GraphSpec::from_json("{}").unwrap();
        assert!(matches!(build_graph(&spec), Err(Error::Spec(_))));
    }

    #[test]
    fn measure_full_form_sets_finite_flag() {
        let spec = GraphSpec::from_json(
            r#"{"generator": {"kind": "lattice", "dim": 3, "radius": 2},
                "killing": [{"v": "0,0,0", "c": 1.0}],
                "measure": {"default": 0.5, "overrides": [{"v": "0,0,0", "m": 1.0}],
                            "tail_finite": true}}"#,
        )
        .unwrap();
        let g = build_graph(&spec).unwrap();
        assert!(g.has_finite_total_measure());
        assert_eq!(g.measure(g.vertex("0,0,0").unwrap()), 1.0);
        assert_eq!(g.measure(g.vertex("1,0,0").unwrap()), 0.5);
        assert_eq!(g.killing(g.vertex("0,0,0").unwrap()), 1.0);
    }

    #[test]
    fn function_file_round_trip() {
        let spec = GraphSpec::from_json(
            r#"{"generator": {"kind": "path", "length": 4}}"#,
        )
        .unwrap();
        let g = build_graph(&spec).unwrap();
        let f = build_function(
            &g,
            &FunctionSpec::from_json(
                r#"{"values": {"0": 1.0, "1": 0.5}, "tail": {"rule": "constant", "value": 0.5}}"#,
            )
            .unwrap(),
        )
        .unwrap();
        assert_eq!(f.value(0), 1.0);
        assert_eq!(f.value(3), 0.5); // filled from the constant tail
        assert_eq!(f.tail_value(0), 0.5);
    }
}
