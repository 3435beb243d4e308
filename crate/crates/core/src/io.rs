//! Reading and writing manifolds.
//!
//! Surfaces use an OFF-compatible text format with an extension section:
//!
//! ```text
//! OFF
//! <vertices> <faces> 0
//! x y [z]            # one line per vertex, z ignored
//! 3 a b c            # one line per face
//! METRIC
//! g11 g12 g22        # one line per face (optional, identity if absent)
//! ANALYTIC
//! <g11 expr>         # optional closed-form metric in x, y
//! <g12 expr>
//! <g22 expr>
//! BASE <vertex id>   # optional, default 0
//! ```
//!
//! Curves use a JSON config, see [`CurveConfig`].

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::analytic::AnalyticMetric;
use crate::error::{Error, Result};
use crate::generators::{centroid, curve_uniform};
use crate::manifold::{Cell, ManifoldParts, SampledManifold};
use crate::tensor::SymTensor;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Mesh,
    CurveConfig,
}

impl Format {
    /// `.json` files are curve configs, anything else is a mesh.
    pub fn from_path(path: &Path) -> Format {
        match path.extension().and_then(|e| e.to_str()) {
            Some("json") => Format::CurveConfig,
            _ => Format::Mesh,
        }
    }
}

/// Curve description. Either `metric_expression` (with `parameter_range`
/// and `samples`) or `edge_lengths` must be given.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurveConfig {
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parameter_range: Option<[f64; 2]>,
    /// Vertex count.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metric_expression: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edge_lengths: Option<Vec<f64>>,
    #[serde(default)]
    pub base_vertex: usize,
    #[serde(default)]
    pub closed: bool,
}

impl CurveConfig {
    pub fn build(&self) -> Result<SampledManifold> {
        if self.n != 1 {
            return Err(Error::Validation(format!("curve config with n = {}", self.n)));
        }
        let mut m = match (&self.metric_expression, &self.edge_lengths) {
            (Some(expr), None) => {
                let [t0, t1] = self
                    .parameter_range
                    .ok_or_else(|| Error::Parse("metric_expression requires parameter_range".into()))?;
                let samples = self
                    .samples
                    .ok_or_else(|| Error::Parse("metric_expression requires samples".into()))?;
                let edges = if self.closed {
                    samples
                } else {
                    samples.saturating_sub(1)
                };
                curve_uniform(t0, t1, edges, self.closed, AnalyticMetric::curve(expr.clone()))?.parts()
            }
            (None, Some(lengths)) => self.parts_from_lengths(lengths)?,
            _ => {
                return Err(Error::Parse(
                    "exactly one of metric_expression and edge_lengths is required".into(),
                ))
            }
        };
        m.base = self.base_vertex;
        SampledManifold::new(m)
    }

    fn parts_from_lengths(&self, lengths: &[f64]) -> Result<ManifoldParts> {
        if lengths.is_empty() {
            return Err(Error::Validation("edge_lengths is empty".into()));
        }
        let nv = if self.closed { lengths.len() } else { lengths.len() + 1 };
        if let Some(s) = self.samples {
            if s != nv {
                return Err(Error::Validation(format!(
                    "samples = {s} but edge_lengths implies {nv} vertices"
                )));
            }
        }
        let t0 = self.parameter_range.map_or(0.0, |r| r[0]);
        let mut chart = Vec::with_capacity(nv);
        let mut t = t0;
        for i in 0..nv {
            chart.push([t, 0.0]);
            if i < lengths.len() {
                t += lengths[i];
            }
        }
        let cells = lengths
            .iter()
            .enumerate()
            .map(|(i, &span)| Cell::Edge {
                a: i,
                b: (i + 1) % nv,
                span,
            })
            .collect();
        Ok(ManifoldParts {
            dim: 1,
            chart,
            cells,
            metric: vec![SymTensor::One(1.0); lengths.len()],
            base: self.base_vertex,
            period: self.closed.then(|| lengths.iter().sum()),
            analytic: None,
        })
    }

    /// Canonical config for a path or cycle whose vertex ids follow the
    /// chain. Uniform curves with an analytic metric keep their expression;
    /// everything else is written as edge lengths.
    pub fn from_manifold(m: &SampledManifold) -> Result<CurveConfig> {
        let chain = m
            .chain_order()
            .ok_or_else(|| Error::Unsupported("only paths and cycles can be written as curve configs".into()))?;
        let in_id_order = chain.vertices.iter().enumerate().all(|(i, &v)| i == v)
            && chain.edges.iter().enumerate().all(|(i, &e)| i == e);
        if !in_id_order {
            return Err(Error::Unsupported(
                "curve vertices must be numbered along the chain to write a curve config".into(),
            ));
        }
        if let Some(expr) = m.analytic_metric() {
            let nv = m.vertex_count();
            let t0 = m.chart()[0][0];
            let t1 = match m.period() {
                Some(p) => t0 + p,
                None => m.chart()[nv - 1][0],
            };
            let cfg = CurveConfig {
                n: 1,
                parameter_range: Some([t0, t1]),
                samples: Some(nv),
                metric_expression: Some(expr.components()[0].clone()),
                edge_lengths: None,
                base_vertex: m.base_vertex(),
                closed: chain.closed,
            };
            if cfg.build().ok().as_ref() == Some(m) {
                return Ok(cfg);
            }
        }
        Ok(CurveConfig {
            n: 1,
            parameter_range: None,
            samples: None,
            metric_expression: None,
            edge_lengths: Some(m.edges().iter().map(|e| e.length).collect()),
            base_vertex: m.base_vertex(),
            closed: chain.closed,
        })
    }
}

pub fn load_manifold(path: &Path, format: Format) -> Result<SampledManifold> {
    let text = std::fs::read_to_string(path)?;
    match format {
        Format::Mesh => parse_mesh(&text),
        Format::CurveConfig => parse_curve_config(&text),
    }
}

pub fn save_manifold(m: &SampledManifold, path: &Path, format: Format) -> Result<()> {
    let text = match format {
        Format::Mesh => write_mesh(m)?,
        Format::CurveConfig => serde_json::to_string_pretty(&CurveConfig::from_manifold(m)?)?,
    };
    std::fs::write(path, text)?;
    Ok(())
}

pub fn parse_curve_config(text: &str) -> Result<SampledManifold> {
    let cfg: CurveConfig = serde_json::from_str(text).map_err(|e| Error::Parse(format!("curve config: {e}")))?;
    cfg.build()
}

fn parse_num<T: std::str::FromStr>(tok: Option<&str>, what: &str, line: usize) -> Result<T> {
    let tok = tok.ok_or_else(|| Error::Parse(format!("line {line}: missing {what}")))?;
    tok.parse()
        .map_err(|_| Error::Parse(format!("line {line}: bad {what} `{tok}`")))
}

pub fn parse_mesh(text: &str) -> Result<SampledManifold> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());

    let (ln, header) = lines.next().ok_or_else(|| Error::Parse("empty mesh file".into()))?;
    if header != "OFF" {
        return Err(Error::Parse(format!("line {ln}: expected `OFF` header")));
    }
    let (ln, counts) = lines.next().ok_or_else(|| Error::Parse("missing counts line".into()))?;
    let mut tok = counts.split_whitespace();
    let nv: usize = parse_num(tok.next(), "vertex count", ln)?;
    let nf: usize = parse_num(tok.next(), "face count", ln)?;

    let mut chart = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (ln, l) = lines
            .next()
            .ok_or_else(|| Error::Parse("truncated vertex section".into()))?;
        let mut tok = l.split_whitespace();
        let x: f64 = parse_num(tok.next(), "x", ln)?;
        let y: f64 = parse_num(tok.next(), "y", ln)?;
        chart.push([x, y]);
    }
    let mut cells = Vec::with_capacity(nf);
    for _ in 0..nf {
        let (ln, l) = lines
            .next()
            .ok_or_else(|| Error::Parse("truncated face section".into()))?;
        let mut tok = l.split_whitespace();
        let k: usize = parse_num(tok.next(), "face size", ln)?;
        if k != 3 {
            return Err(Error::Parse(format!("line {ln}: only triangles are supported")));
        }
        let t = [
            parse_num(tok.next(), "face vertex", ln)?,
            parse_num(tok.next(), "face vertex", ln)?,
            parse_num(tok.next(), "face vertex", ln)?,
        ];
        cells.push(Cell::Triangle(t));
    }

    let mut metric: Option<Vec<SymTensor>> = None;
    let mut analytic: Option<AnalyticMetric> = None;
    let mut base = 0usize;
    while let Some((ln, l)) = lines.next() {
        let mut tok = l.split_whitespace();
        match tok.next() {
            Some("METRIC") => {
                let mut ts = Vec::with_capacity(nf);
                for _ in 0..nf {
                    let (ln, l) = lines
                        .next()
                        .ok_or_else(|| Error::Parse("truncated METRIC section".into()))?;
                    let c = l
                        .split_whitespace()
                        .map(|s| parse_num::<f64>(Some(s), "metric coefficient", ln))
                        .collect::<Result<Vec<_>>>()?;
                    if c.len() != 3 {
                        return Err(Error::Parse(format!("line {ln}: expected g11 g12 g22")));
                    }
                    ts.push(SymTensor::from_coefficients(&c)?);
                }
                metric = Some(ts);
            }
            Some("ANALYTIC") => {
                let mut comps = Vec::with_capacity(3);
                for _ in 0..3 {
                    let (_, l) = lines
                        .next()
                        .ok_or_else(|| Error::Parse("truncated ANALYTIC section".into()))?;
                    comps.push(l.to_string());
                }
                analytic = Some(AnalyticMetric::from_components(comps)?);
            }
            Some("BASE") => base = parse_num(tok.next(), "base vertex", ln)?,
            Some(other) => return Err(Error::Parse(format!("line {ln}: unknown section `{other}`"))),
            None => {}
        }
    }

    let metric = match (metric, &analytic) {
        (Some(m), _) => m,
        (None, Some(a)) => {
            let cm = a.compile()?;
            if cells.iter().flat_map(|c| c.vertices()).any(|v| v >= nv) {
                return Err(Error::Validation("face references a missing vertex".into()));
            }
            cells
                .iter()
                .map(|c| cm.eval(centroid(&chart, c)))
                .collect::<Result<Vec<_>>>()?
        }
        (None, None) => vec![SymTensor::identity(2); nf],
    };
    SampledManifold::new(ManifoldParts {
        dim: 2,
        chart,
        cells,
        metric,
        base,
        period: None,
        analytic,
    })
}

pub fn write_mesh(m: &SampledManifold) -> Result<String> {
    if m.dim() != 2 {
        return Err(Error::Unsupported("mesh files hold surfaces only".into()));
    }
    let mut s = String::new();
    let _ = writeln!(s, "OFF");
    let _ = writeln!(s, "{} {} 0", m.vertex_count(), m.cell_count());
    for p in m.chart() {
        let _ = writeln!(s, "{:?} {:?} 0", p[0], p[1]);
    }
    for c in m.cells() {
        let v = c.vertices();
        let _ = writeln!(s, "3 {} {} {}", v[0], v[1], v[2]);
    }
    let _ = writeln!(s, "METRIC");
    for t in m.metric().tensors() {
        let c = t.coefficients();
        let _ = writeln!(s, "{:?} {:?} {:?}", c[0], c[1], c[2]);
    }
    if let Some(a) = m.analytic_metric() {
        let _ = writeln!(s, "ANALYTIC");
        for c in a.components() {
            let _ = writeln!(s, "{c}");
        }
    }
    let _ = writeln!(s, "BASE {}", m.base_vertex());
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    const EQUILATERAL: &str = "OFF\n3 1 0\n0 0 0\n1 0 0\n0.5 0.8660254037844386 0\n3 0 1 2\n";

    #[test]
    fn two_vertex_curve() {
        let m = parse_curve_config(r#"{"n": 1, "edge_lengths": [1.0], "base_vertex": 0}"#).unwrap();
        assert_eq!(m.dim(), 1);
        assert_eq!(m.vertex_count(), 2);
        assert_eq!(m.mesh_scale(), 1.0);
    }

    #[test]
    fn expression_curve() {
        let m = parse_curve_config(r#"{"n": 1, "parameter_range": [0, 1], "samples": 2, "metric_expression": "1"}"#)
            .unwrap();
        assert_eq!(m.mesh_scale(), 1.0);
    }

    #[test]
    fn equilateral_mesh() {
        let m = parse_mesh(EQUILATERAL).unwrap();
        assert_eq!(m.dim(), 2);
        assert_eq!(m.cell_count(), 1);
        assert_eq!(m.edges().len(), 3);
    }

    #[test]
    fn dangling_face_rejected() {
        let err = parse_mesh("OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 7\n").unwrap_err();
        assert!(matches!(err, Error::Validation(_)), "{err}");
    }

    #[test]
    fn metric_section_and_base() {
        let text = format!("{EQUILATERAL}METRIC\n2 0 1 # per face\nBASE 2\n");
        let m = parse_mesh(&text).unwrap();
        assert_eq!(m.metric()[0], SymTensor::diag2(2.0, 1.0));
        assert_eq!(m.base_vertex(), 2);
    }

    #[test]
    fn non_spd_metric_rejected() {
        let text = format!("{EQUILATERAL}METRIC\n1 2 1\n");
        assert!(parse_mesh(&text).is_err());
    }

    #[test]
    fn malformed_inputs() {
        assert!(matches!(parse_mesh("PLY\n"), Err(Error::Parse(_))));
        assert!(matches!(parse_mesh("OFF\n3 1 0\n0 0\n"), Err(Error::Parse(_))));
        assert!(matches!(parse_curve_config("{"), Err(Error::Parse(_))));
        assert!(parse_curve_config(r#"{"n": 1}"#).is_err());
        assert!(parse_curve_config(r#"{"n": 2, "edge_lengths": [1.0]}"#).is_err());
    }
}
