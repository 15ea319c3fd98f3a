//! Problem files: JSON in, `ProblemSpec`/`NonlocalProblem` out, and back.

use serde::{Deserialize, Serialize};
use utm_core::data::{DataFunction, DataKind};
use utm_core::model::{ConditionTensor, InterfaceGrid, PdeSpec, ProblemSpec};
use utm_core::reduce::{NonlocalConditionSet, NonlocalProblem, NonlocalRow};
use utm_core::scalar::C64;

/// A complex number: either a bare real or `{"re": .., "im": ..}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Complex {
    Real(f64),
    Parts {
        re: f64,
        #[serde(default)]
        im: f64,
    },
}

impl From<Complex> for C64 {
    fn from(c: Complex) -> C64 {
        match c {
            Complex::Real(re) => C64::new(re, 0.0),
            Complex::Parts { re, im } => C64::new(re, im),
        }
    }
}

impl From<C64> for Complex {
    fn from(z: C64) -> Complex {
        if z.im == 0.0 {
            Complex::Real(z.re)
        } else {
            Complex::Parts { re: z.re, im: z.im }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Datum {
    Expr(String),
    Samples { samples: Vec<(f64, Complex)> },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RowKind {
    Pointwise,
    Moment,
    Derivative,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RowFile {
    pub kind: RowKind,
    /// `[k][r]`; for integral rows entry `r` weights the interval `(η_{r-1}, η_r)`.
    pub coeffs: Vec<Vec<Complex>>,
    #[serde(default = "zero_datum")]
    pub g: Datum,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NonlocalFile {
    #[serde(rename = "J")]
    pub boundary_count: isize,
    pub rows: Vec<RowFile>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub order: usize,
    pub a: Complex,
    pub eta: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<Vec<Vec<Vec<Complex>>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g: Option<Vec<Datum>>,
    pub q0: Datum,
    #[serde(rename = "T")]
    pub horizon: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nonlocal: Option<NonlocalFile>,
}

fn zero_datum() -> Datum {
    Datum::Expr("0".into())
}

/// What a problem file describes.
#[derive(Clone, Debug)]
pub enum Loaded {
    Multipoint(ProblemSpec),
    Nonlocal(NonlocalProblem),
}

fn datum(d: &Datum, var: &str, what: &str) -> Result<DataFunction, String> {
    match d {
        Datum::Expr(s) => DataFunction::expression(s, var).map_err(|e| format!("{}: {}", what, e)),
        Datum::Samples { samples } => {
            let xs = samples.iter().map(|s| s.0).collect();
            let vs = samples.iter().map(|s| C64::from(s.1)).collect();
            DataFunction::sampled(xs, vs).map_err(|e| format!("{}: {}", what, e))
        }
    }
}

fn datum_out(f: &DataFunction, var: &str, what: &str) -> Result<Datum, String> {
    if let Some(e) = f.as_expr() {
        return Ok(Datum::Expr(e.display(var).to_string()));
    }
    if let Some((xs, vs)) = f.samples() {
        return Ok(Datum::Samples { samples: xs.iter().zip(vs).map(|(x, v)| (*x, Complex::from(*v))).collect() });
    }
    debug_assert_eq!(f.kind(), DataKind::PiecewisePolynomial);
    Err(format!("{}: piecewise-polynomial data have no file representation", what))
}

impl ProblemFile {
    pub fn parse(text: &str) -> Result<ProblemFile, String> {
        serde_json::from_str(text).map_err(|e| format!("problem file: {}", e))
    }

    pub fn load(&self) -> Result<Loaded, String> {
        let n = self.order;
        let pde = PdeSpec::new(n, self.a.into());
        let grid = InterfaceGrid::new(self.eta.clone());
        let q0 = datum(&self.q0, "x", "q0")?;
        match (&self.nonlocal, &self.b, &self.g) {
            (Some(nl), None, None) => {
                let mut rows = Vec::new();
                for (j, r) in nl.rows.iter().enumerate() {
                    let table: Vec<Vec<C64>> = r.coeffs.iter().map(|k| k.iter().map(|&c| c.into()).collect()).collect();
                    let g = datum(&r.g, "t", &format!("nonlocal row {} datum", j))?;
                    rows.push(match r.kind {
                        RowKind::Pointwise => NonlocalRow::Pointwise { coeffs: table, datum: g },
                        RowKind::Moment => NonlocalRow::Moment { weights: table, datum: g },
                        RowKind::Derivative => NonlocalRow::Derivative { weights: table, datum: g },
                    });
                }
                Ok(Loaded::Nonlocal(NonlocalProblem {
                    pde,
                    grid,
                    conditions: NonlocalConditionSet { boundary_count: nl.boundary_count, rows },
                    initial_datum: q0,
                    horizon: self.horizon,
                }))
            }
            (None, Some(b), Some(g)) => {
                let nested: Vec<Vec<Vec<C64>>> =
                    b.iter().map(|k| k.iter().map(|j| j.iter().map(|&c| c.into()).collect()).collect()).collect();
                let tensor = ConditionTensor::from_nested(n, self.eta.len(), &nested).map_err(|e| e.to_string())?;
                let data = g
                    .iter()
                    .enumerate()
                    .map(|(j, d)| datum(d, "t", &format!("g[{}]", j)))
                    .collect::<Result<Vec<_>, _>>()?;
                ProblemSpec::new(pde, grid, tensor, data, q0, self.horizon)
                    .map(Loaded::Multipoint)
                    .map_err(|e| e.to_string())
            }
            (Some(_), _, _) => Err("a nonlocal problem must not also give \"b\" or \"g\"".into()),
            _ => Err("a multipoint problem needs both \"b\" and \"g\"".into()),
        }
    }

    pub fn from_problem(p: &ProblemSpec) -> Result<ProblemFile, String> {
        let b = p
            .conditions
            .to_nested()
            .iter()
            .map(|k| k.iter().map(|j| j.iter().map(|&c| Complex::from(c)).collect()).collect())
            .collect();
        let g = p
            .boundary_data
            .iter()
            .enumerate()
            .map(|(j, d)| datum_out(d, "t", &format!("g[{}]", j)))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(ProblemFile {
            order: p.order(),
            a: p.pde.a.into(),
            eta: p.eta().to_vec(),
            b: Some(b),
            g: Some(g),
            q0: datum_out(&p.initial_datum, "x", "q0")?,
            horizon: p.horizon,
            nonlocal: None,
        })
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("plain data serialises");
        s.push('\n');
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const DIRICHLET: &str = r#"{
        "order": 2, "a": {"re": 1, "im": 0}, "eta": [0, 1],
        "b": [[[1, 0], [0, 1]], [[0, 0], [0, 0]]],
        "g": ["0", "0"], "q0": "sin(pi*x)", "T": 1
    }"#;

    #[test]
    fn multipoint_round_trip() {
        let f = ProblemFile::parse(DIRICHLET).unwrap();
        let Loaded::Multipoint(p) = f.load().unwrap() else { panic!("multipoint expected") };
        assert_eq!(p.conditions.get(0, 0, 0), C64::new(1.0, 0.0));
        assert_eq!(p.conditions.get(0, 1, 1), C64::new(1.0, 0.0));
        let back = ProblemFile::from_problem(&p).unwrap();
        let Loaded::Multipoint(q) = ProblemFile::parse(&back.to_json()).unwrap().load().unwrap() else { panic!() };
        assert_eq!(q.conditions, p.conditions);
        for x in [0.1, 0.37, 0.9] {
            assert_eq!(q.initial_datum.eval(x), p.initial_datum.eval(x));
        }
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let text = DIRICHLET.replace("\"T\": 1", "\"T\": 1, \"tau\": 0.5");
        assert!(ProblemFile::parse(&text).is_err());
    }

    #[test]
    fn samples_and_complex_entries() {
        let text = r#"{"order": 2, "a": 1, "eta": [0, 1],
            "b": [[[1, 0], [0, {"re": 1, "im": 0.5}]], [[0, 0], [0, 0]]],
            "g": ["0", "t"], "q0": {"samples": [[0, 0], [0.5, {"re": 1, "im": 2}], [1, 0]]}, "T": 2}"#;
        let Loaded::Multipoint(p) = ProblemFile::parse(text).unwrap().load().unwrap() else { panic!() };
        assert_eq!(p.conditions.get(0, 1, 1), C64::new(1.0, 0.5));
        assert_eq!(p.initial_datum.eval(0.5), C64::new(1.0, 2.0));
        let back = ProblemFile::from_problem(&p).unwrap();
        assert!(matches!(back.q0, Datum::Samples { .. }));
    }

    #[test]
    fn nonlocal_block_excludes_b_and_g() {
        let text = r#"{"order": 2, "a": 1, "eta": [0, 0.5, 1], "q0": "x", "T": 1,
            "nonlocal": {"J": -1, "rows": [
                {"kind": "moment", "coeffs": [[0, 1, 0], [0, 0, 0]]},
                {"kind": "moment", "coeffs": [[0, 0, 1], [0, 0, -1]], "g": "t"}]}}"#;
        assert!(matches!(ProblemFile::parse(text).unwrap().load().unwrap(), Loaded::Nonlocal(_)));
        let both = text.replace("\"T\": 1,", "\"T\": 1, \"g\": [\"0\", \"0\"],");
        assert!(ProblemFile::parse(&both).unwrap().load().is_err());
    }
}
