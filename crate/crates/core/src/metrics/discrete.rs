//! Discrete mechanisms `f(z|x)` over finite input and output alphabets.
//!
//! CSV layout: the header is `input_x_m,input_y_m` followed by one
//! `<x>;<y>` cell per output location. Every further line is one input:
//! its two coordinates, then the row `f(z|x)` in output order.

use std::io::{BufRead, Write};

use crate::geo::PlanarPoint;
use crate::scalar::Scalar;

use super::MetricsError;

#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMechanism<F> {
    inputs: Vec<PlanarPoint<F>>,
    outputs: Vec<PlanarPoint<F>>,
    matrix: Vec<Vec<F>>,
}

impl<F: Scalar> DiscreteMechanism<F> {
    pub fn new(
        inputs: Vec<PlanarPoint<F>>,
        outputs: Vec<PlanarPoint<F>>,
        matrix: Vec<Vec<F>>,
    ) -> Result<Self, MetricsError> {
        if inputs.is_empty() || outputs.is_empty() {
            return Err(MetricsError::InvalidMechanism("empty alphabet".into()));
        }
        if matrix.len() != inputs.len() {
            return Err(MetricsError::InvalidMechanism(format!(
                "{} rows for {} inputs",
                matrix.len(),
                inputs.len()
            )));
        }
        for (i, row) in matrix.iter().enumerate() {
            if row.len() != outputs.len() {
                return Err(MetricsError::InvalidMechanism(format!(
                    "row {i} has {} entries for {} outputs",
                    row.len(),
                    outputs.len()
                )));
            }
            if row.iter().any(|v| !(v.is_finite() && *v >= F::zero())) {
                return Err(MetricsError::InvalidMechanism(format!("row {i} has a negative or non-finite entry")));
            }
            let s = row.iter().fold(F::zero(), |a, &v| a + v);
            if (s - F::one()).abs() > F::MASS_TOLERANCE {
                return Err(MetricsError::InvalidMechanism(format!("row {i} sums to {s}")));
            }
        }
        Ok(Self {
            inputs,
            outputs,
            matrix,
        })
    }

    /// Builds a mechanism from nonnegative row weights, normalizing each row.
    pub fn from_weights(
        inputs: Vec<PlanarPoint<F>>,
        outputs: Vec<PlanarPoint<F>>,
        weights: Vec<Vec<F>>,
    ) -> Result<Self, MetricsError> {
        let matrix = weights
            .into_iter()
            .map(|row| {
                let s = row.iter().fold(F::zero(), |a, &v| a + v);
                row.into_iter().map(|v| v / s).collect()
            })
            .collect();
        Self::new(inputs, outputs, matrix)
    }

    pub fn inputs(&self) -> &[PlanarPoint<F>] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[PlanarPoint<F>] {
        &self.outputs
    }

    pub fn row(&self, input: usize) -> &[F] {
        &self.matrix[input]
    }

    /// `f(z|x)`.
    pub fn prob(&self, input: usize, output: usize) -> F {
        self.matrix[input][output]
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        write!(w, "input_x_m,input_y_m")?;
        for z in &self.outputs {
            write!(w, ",{};{}", z.x, z.y)?;
        }
        writeln!(w)?;
        for (x, row) in self.inputs.iter().zip(&self.matrix) {
            write!(w, "{},{}", x.x, x.y)?;
            for v in row {
                write!(w, ",{v}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self, MetricsError> {
        let bad = |line: usize, msg: &str| MetricsError::Csv(format!("line {line}: {msg}"));
        let num = |s: &str, line: usize| -> Result<F, MetricsError> {
            s.trim()
                .parse::<f64>()
                .map(F::lit)
                .map_err(|_| bad(line, &format!("not a number: '{s}'")))
        };
        let mut lines = r.lines().enumerate().filter(|(_, l)| match l {
            Ok(s) => !s.trim().is_empty(),
            Err(_) => true,
        });
        let (_, header) = lines.next().ok_or_else(|| bad(1, "missing header"))?;
        let header = header.map_err(|e| MetricsError::Csv(e.to_string()))?;
        let cells: Vec<&str> = header.split(',').collect();
        if cells.len() < 3 {
            return Err(bad(1, "header needs two input columns and at least one output"));
        }
        let outputs = cells[2..]
            .iter()
            .map(|c| {
                let (x, y) = c.split_once(';').ok_or_else(|| bad(1, "output cell must be '<x>;<y>'"))?;
                Ok(PlanarPoint::new(num(x, 1)?, num(y, 1)?))
            })
            .collect::<Result<Vec<_>, MetricsError>>()?;

        let (mut inputs, mut matrix) = (Vec::new(), Vec::new());
        for (i, line) in lines {
            let line = line.map_err(|e| MetricsError::Csv(e.to_string()))?;
            let cells: Vec<&str> = line.split(',').collect();
            if cells.len() != outputs.len() + 2 {
                return Err(bad(i + 1, &format!("expected {} fields", outputs.len() + 2)));
            }
            inputs.push(PlanarPoint::new(num(cells[0], i + 1)?, num(cells[1], i + 1)?));
            matrix.push(
                cells[2..]
                    .iter()
                    .map(|c| num(c, i + 1))
                    .collect::<Result<Vec<_>, _>>()?,
            );
        }
        Self::new(inputs, outputs, matrix)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_by_two() -> DiscreteMechanism<f64> {
        DiscreteMechanism::new(
            vec![PlanarPoint::new(0.0, 0.0), PlanarPoint::new(1000.0, 0.0)],
            vec![PlanarPoint::new(0.0, 0.0), PlanarPoint::new(1000.0, 0.5)],
            vec![vec![0.8, 0.2], vec![0.2, 0.8]],
        )
        .unwrap()
    }

    #[test]
    fn rejects_bad_rows() {
        let pts = vec![PlanarPoint::new(0.0, 0.0)];
        assert!(DiscreteMechanism::new(pts.clone(), pts.clone(), vec![vec![0.9]]).is_err());
        assert!(DiscreteMechanism::new(pts.clone(), pts.clone(), vec![vec![1.0, 0.0]]).is_err());
        assert!(DiscreteMechanism::<f64>::new(pts.clone(), pts, vec![]).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let m = two_by_two();
        let mut buf = Vec::new();
        m.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(
            text,
            "input_x_m,input_y_m,0;0,1000;0.5\n0,0,0.8,0.2\n1000,0,0.2,0.8\n"
        );
        let back = DiscreteMechanism::<f64>::read_csv(&buf[..]).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn csv_errors_name_the_line() {
        let err = DiscreteMechanism::<f64>::read_csv("input_x_m,input_y_m,0;0\n0,0\n".as_bytes()).unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
        let err = DiscreteMechanism::<f64>::read_csv("input_x_m,input_y_m,00\n0,0,1\n".as_bytes()).unwrap_err();
        assert!(err.to_string().contains("line 1"), "{err}");
    }
}
