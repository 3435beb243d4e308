//! Closed-form metrics given as expressions in the chart variables.
//!
//! One-dimensional metrics are a single expression in `t`; two-dimensional
//! metrics are three expressions `g11, g12, g22` in `x` and `y`. Expressions
//! use `evalexpr` syntax, e.g. `(1 + 0.1 * math::sin(t / 100))^2`.

use evalexpr::{build_operator_tree, ContextWithMutableVariables, DefaultNumericTypes, HashMapContext, Node, Value};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::SymTensor;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AnalyticMetric {
    components: Vec<String>,
}

impl AnalyticMetric {
    pub fn curve(g: impl Into<String>) -> Self {
        AnalyticMetric {
            components: vec![g.into()],
        }
    }

    pub fn surface(g11: impl Into<String>, g12: impl Into<String>, g22: impl Into<String>) -> Self {
        AnalyticMetric {
            components: vec![g11.into(), g12.into(), g22.into()],
        }
    }

    pub fn from_components(components: Vec<String>) -> Result<Self> {
        let m = AnalyticMetric { components };
        m.compile()?;
        Ok(m)
    }

    pub fn components(&self) -> &[String] {
        &self.components
    }

    pub fn dim(&self) -> usize {
        if self.components.len() == 1 {
            1
        } else {
            2
        }
    }

    pub fn compile(&self) -> Result<CompiledMetric> {
        if !matches!(self.components.len(), 1 | 3) {
            return Err(Error::Expression(format!(
                "expected 1 or 3 metric expressions, got {}",
                self.components.len()
            )));
        }
        let terms = self
            .components
            .iter()
            .map(|s| Term::parse(s))
            .collect::<Result<Vec<_>>>()?;
        Ok(CompiledMetric { terms })
    }
}

enum Term {
    Const(f64),
    Expr(Node<DefaultNumericTypes>),
}

impl Term {
    fn parse(src: &str) -> Result<Self> {
        if let Ok(c) = src.trim().parse::<f64>() {
            return Ok(Term::Const(c));
        }
        build_operator_tree::<DefaultNumericTypes>(src)
            .map(Term::Expr)
            .map_err(|e| Error::Expression(format!("`{src}`: {e}")))
    }

    fn eval(&self, ctx: &HashMapContext) -> Result<f64> {
        match self {
            Term::Const(c) => Ok(*c),
            Term::Expr(node) => node
                .eval_number_with_context(ctx)
                .map_err(|e| Error::Expression(e.to_string())),
        }
    }
}

pub struct CompiledMetric {
    terms: Vec<Term>,
}

impl CompiledMetric {
    pub fn dim(&self) -> usize {
        if self.terms.len() == 1 {
            1
        } else {
            2
        }
    }

    fn context(p: [f64; 2]) -> HashMapContext {
        let mut ctx = HashMapContext::<DefaultNumericTypes>::new();
        // set_value only fails on type clashes with existing bindings
        let _ = ctx.set_value("t".into(), Value::Float(p[0]));
        let _ = ctx.set_value("x".into(), Value::Float(p[0]));
        let _ = ctx.set_value("y".into(), Value::Float(p[1]));
        ctx
    }

    /// Metric tensor at a chart point (`[t, 0]` for curves).
    pub fn eval(&self, p: [f64; 2]) -> Result<SymTensor> {
        let ctx = Self::context(p);
        let vals = self.terms.iter().map(|t| t.eval(&ctx)).collect::<Result<Vec<_>>>()?;
        let t = SymTensor::from_coefficients(&vals)?;
        if !t.is_finite() {
            return Err(Error::Expression(format!("metric not finite at {p:?}")));
        }
        Ok(t)
    }

    /// Length of the straight chart segment `start + s·disp`, `s ∈ [0, 1]`,
    /// by 5-point Gauss–Legendre quadrature of the metric speed.
    pub fn segment_length(&self, start: [f64; 2], disp: [f64; 2]) -> Result<f64> {
        let mut acc = 0.0;
        for (node, weight) in GAUSS_LEGENDRE_5 {
            let s = 0.5 * (node + 1.0);
            let g = self.eval([start[0] + s * disp[0], start[1] + s * disp[1]])?;
            acc += 0.5 * weight * g.quad(&disp).max(0.0).sqrt();
        }
        Ok(acc)
    }
}

const GAUSS_LEGENDRE_5: [(f64, f64); 5] = [
    (0.0, 0.568_888_888_888_888_9),
    (-0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (-0.906_179_845_938_664, 0.236_926_885_056_189_08),
    (0.906_179_845_938_664, 0.236_926_885_056_189_08),
];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_fast_path() {
        let m = AnalyticMetric::curve("2.5").compile().unwrap();
        assert_eq!(m.eval([3.0, 0.0]).unwrap(), SymTensor::One(2.5));
    }

    #[test]
    fn expression_in_t() {
        let m = AnalyticMetric::curve("(1 + t)^2").compile().unwrap();
        assert_eq!(m.eval([1.0, 0.0]).unwrap(), SymTensor::One(4.0));
    }

    #[test]
    fn surface_components() {
        let m = AnalyticMetric::surface("1", "0", "x^2").compile().unwrap();
        assert_eq!(m.eval([3.0, 7.0]).unwrap(), SymTensor::diag2(1.0, 9.0));
    }

    #[test]
    fn quadrature_matches_closed_form() {
        // speed 1 + t on [0, 2] has length 4
        let m = AnalyticMetric::curve("(1 + t)^2").compile().unwrap();
        let len = m.segment_length([0.0, 0.0], [2.0, 0.0]).unwrap();
        assert!((len - 4.0).abs() < 1e-14);
        // speed e^t: length e - 1
        let m = AnalyticMetric::curve("math::exp(2 * t)").compile().unwrap();
        let len = m.segment_length([0.0, 0.0], [1.0, 0.0]).unwrap();
        assert!((len - (std::f64::consts::E - 1.0)).abs() < 1e-9);
    }

    #[test]
    fn rejects_garbage() {
        assert!(AnalyticMetric::curve("1 + (t").compile().is_err());
        assert!(AnalyticMetric::from_components(vec!["1".into(), "2".into()]).is_err());
    }
}
