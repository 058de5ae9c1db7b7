//! Weighted geometric median by Weiszfeld iteration.
//!
//! Minimizes `Σ wᵢ·‖pᵢ - z‖` over `z`. When an iterate comes within the
//! tolerance of a support point the usual update is undefined there, so the
//! point is tested for optimality (`‖Rⱼ‖ ≤ wⱼ`, with `Rⱼ` the resultant of
//! unit pulls from the other points) and, if it is not optimal, the iterate
//! leaves along `Rⱼ` with the Vardi-Zhang step length.

use crate::geo::{distance, PlanarPoint};
use crate::scalar::Scalar;

use super::MechanismError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeiszfeldOptions<F> {
    /// Stop once an update moves less than this many meters.
    pub tolerance: F,
    pub max_iters: usize,
}

impl<F: Scalar> Default for WeiszfeldOptions<F> {
    fn default() -> Self {
        Self {
            tolerance: F::lit(1e-3),
            max_iters: 200,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeometricMedian<F> {
    pub point: PlanarPoint<F>,
    pub objective: F,
    pub iterations: usize,
    pub converged: bool,
}

/// `Σ wᵢ·‖pᵢ - z‖`.
pub fn weighted_objective<F: Scalar>(points: &[PlanarPoint<F>], weights: &[F], z: &PlanarPoint<F>) -> F {
    points
        .iter()
        .zip(weights)
        .fold(F::zero(), |acc, (p, &w)| acc + w * distance(p, z))
}

pub fn geometric_median<F: Scalar>(
    points: &[PlanarPoint<F>],
    weights: &[F],
    opts: &WeiszfeldOptions<F>,
) -> Result<GeometricMedian<F>, MechanismError> {
    run(points, weights, opts, None)
}

/// Same as [`geometric_median`], also returning the objective at every iterate.
pub fn geometric_median_traced<F: Scalar>(
    points: &[PlanarPoint<F>],
    weights: &[F],
    opts: &WeiszfeldOptions<F>,
) -> Result<(GeometricMedian<F>, Vec<F>), MechanismError> {
    let mut trace = Vec::new();
    let m = run(points, weights, opts, Some(&mut trace))?;
    Ok((m, trace))
}

fn run<F: Scalar>(
    points: &[PlanarPoint<F>],
    weights: &[F],
    opts: &WeiszfeldOptions<F>,
    mut trace: Option<&mut Vec<F>>,
) -> Result<GeometricMedian<F>, MechanismError> {
    if points.len() != weights.len() {
        return Err(MechanismError::InvalidParameter(
            "points and weights differ in length".into(),
        ));
    }
    let (pts, ws): (Vec<_>, Vec<_>) = points
        .iter()
        .zip(weights)
        .filter(|(_, &w)| w > F::zero() && w.is_finite())
        .map(|(p, &w)| (*p, w))
        .unzip();
    let total: F = ws.iter().fold(F::zero(), |a, &w| a + w);
    if pts.is_empty() || !(total > F::zero()) {
        return Err(MechanismError::DegeneratePrior);
    }
    if pts.len() == 1 {
        return Ok(GeometricMedian {
            point: pts[0],
            objective: F::zero(),
            iterations: 0,
            converged: true,
        });
    }

    let mut y = PlanarPoint::new(
        pts.iter().zip(&ws).fold(F::zero(), |a, (p, &w)| a + w * p.x) / total,
        pts.iter().zip(&ws).fold(F::zero(), |a, (p, &w)| a + w * p.y) / total,
    );
    let tol = opts.tolerance;

    for iter in 0..opts.max_iters {
        // one pass: objective at y, nearest support point, Weiszfeld sums
        let (mut obj, mut sx, mut sy, mut sw) = (F::zero(), F::zero(), F::zero(), F::zero());
        let (mut near, mut near_d) = (0usize, F::infinity());
        for (i, (p, &w)) in pts.iter().zip(&ws).enumerate() {
            let d = distance(p, &y);
            obj = obj + w * d;
            if d < near_d {
                near = i;
                near_d = d;
            }
            if d > F::zero() {
                let k = w / d;
                sx = sx + k * p.x;
                sy = sy + k * p.y;
                sw = sw + k;
            }
        }
        if let Some(t) = trace.as_deref_mut() {
            t.push(obj);
        }

        let next = if near_d <= tol {
            match vertex_step(&pts, &ws, near) {
                None => {
                    let point = pts[near];
                    let objective = weighted_objective(&pts, &ws, &point);
                    if let Some(t) = trace.as_deref_mut() {
                        t.push(objective);
                    }
                    return Ok(GeometricMedian {
                        point,
                        objective,
                        iterations: iter + 1,
                        converged: true,
                    });
                }
                Some(candidate) => {
                    let plain = PlanarPoint::new(sx / sw, sy / sw);
                    if near_d == F::zero() || weighted_objective(&pts, &ws, &candidate) < obj {
                        candidate
                    } else {
                        plain
                    }
                }
            }
        } else {
            PlanarPoint::new(sx / sw, sy / sw)
        };

        let moved = distance(&next, &y);
        y = next;
        if moved <= tol {
            // Iterates crawl towards an optimal support point; snap to it.
            if vertex_step(&pts, &ws, near).is_none() && weighted_objective(&pts, &ws, &pts[near]) <= obj {
                y = pts[near];
            }
            let objective = weighted_objective(&pts, &ws, &y);
            if let Some(t) = trace.as_deref_mut() {
                t.push(objective);
            }
            return Ok(GeometricMedian {
                point: y,
                objective,
                iterations: iter + 1,
                converged: true,
            });
        }
    }

    let objective = weighted_objective(&pts, &ws, &y);
    if let Some(t) = trace.as_mut() {
        t.push(objective);
    }
    Ok(GeometricMedian {
        point: y,
        objective,
        iterations: opts.max_iters,
        converged: false,
    })
}

/// `None` if support point `j` is a minimizer, else the point reached by
/// stepping from it along the descent direction.
fn vertex_step<F: Scalar>(pts: &[PlanarPoint<F>], ws: &[F], j: usize) -> Option<PlanarPoint<F>> {
    let xj = pts[j];
    let (mut rx, mut ry, mut inv, mut wj) = (F::zero(), F::zero(), F::zero(), F::zero());
    for (p, &w) in pts.iter().zip(ws) {
        let d = distance(p, &xj);
        if d == F::zero() {
            wj = wj + w;
            continue;
        }
        rx = rx + w * (p.x - xj.x) / d;
        ry = ry + w * (p.y - xj.y) / d;
        inv = inv + w / d;
    }
    let rnorm = rx.hypot(ry);
    if rnorm <= wj || inv == F::zero() {
        return None;
    }
    let t = (rnorm - wj) / inv;
    Some(PlanarPoint::new(xj.x + t * rx / rnorm, xj.y + t * ry / rnorm))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mechanisms::RandomStream;

    /// Exhaustive lattice search, coarse then refined around the best node.
    fn lattice_min(points: &[PlanarPoint<f64>], weights: &[f64]) -> (PlanarPoint<f64>, f64) {
        let (mut lo_x, mut hi_x, mut lo_y, mut hi_y) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
        for p in points {
            lo_x = lo_x.min(p.x);
            hi_x = hi_x.max(p.x);
            lo_y = lo_y.min(p.y);
            hi_y = hi_y.max(p.y);
        }
        let mut best = (PlanarPoint::new(lo_x, lo_y), f64::MAX);
        let mut step = 1.0f64.max((hi_x - lo_x).max(hi_y - lo_y) / 400.0);
        let mut centre = PlanarPoint::new(0.5 * (lo_x + hi_x), 0.5 * (lo_y + hi_y));
        let mut half = 0.5 * (hi_x - lo_x).max(hi_y - lo_y) + step;
        loop {
            let n = (half / step).ceil() as i64;
            for i in -n..=n {
                for k in -n..=n {
                    let z = PlanarPoint::new(centre.x + i as f64 * step, centre.y + k as f64 * step);
                    let v = weighted_objective(points, weights, &z);
                    if v < best.1 {
                        best = (z, v);
                    }
                }
            }
            // also every support point, where the minimum often sits
            for p in points {
                let v = weighted_objective(points, weights, p);
                if v < best.1 {
                    best = (*p, v);
                }
            }
            if step <= 1e-3 {
                return best;
            }
            centre = best.0;
            half = 2.0 * step;
            step /= 20.0;
        }
    }

    fn opts() -> WeiszfeldOptions<f64> {
        WeiszfeldOptions::default()
    }

    #[test]
    fn single_point_is_its_own_median() {
        let p = [PlanarPoint::new(3.0, 4.0)];
        let m = geometric_median(&p, &[1.0], &opts()).unwrap();
        assert_eq!(m.point, p[0]);
        assert_eq!(m.objective, 0.0);
    }

    #[test]
    fn zero_weights_are_degenerate() {
        let p = [PlanarPoint::new(3.0, 4.0), PlanarPoint::new(0.0, 0.0)];
        assert_eq!(
            geometric_median(&p, &[0.0, 0.0], &opts()).unwrap_err(),
            MechanismError::DegeneratePrior
        );
    }

    #[test]
    fn fermat_point_of_triangle() {
        let p = [
            PlanarPoint::new(0.0, 0.0),
            PlanarPoint::new(1000.0, 0.0),
            PlanarPoint::new(500.0, 866.0),
        ];
        let w = [1.0 / 3.0; 3];
        let m = geometric_median(&p, &w, &opts()).unwrap();
        // symmetric about x = 500; 2y/√(500² + y²) = 1 gives y = 500/√3
        let expected = PlanarPoint::new(500.0, 500.0 / 3f64.sqrt());
        assert!(distance(&m.point, &expected) <= 1e-3, "{:?}", m.point);
        let (_, oracle) = lattice_min(&p, &w);
        assert!(m.objective <= oracle * (1.0 + 1e-6));
    }

    #[test]
    fn dominant_vertex_is_returned_exactly() {
        let p = [
            PlanarPoint::new(0.0, 0.0),
            PlanarPoint::new(100.0, 0.0),
            PlanarPoint::new(0.0, 100.0),
        ];
        let m = geometric_median(&p, &[0.8, 0.1, 0.1], &opts()).unwrap();
        assert_eq!(m.point, p[0]);
        assert!(m.converged);
    }

    #[test]
    fn starting_on_a_non_optimal_vertex_moves_off_it() {
        // the weighted mean is exactly the support point at the origin
        let p = [
            PlanarPoint::new(0.0, 0.0),
            PlanarPoint::new(-100.0, 0.0),
            PlanarPoint::new(100.0, 0.0),
            PlanarPoint::new(0.0, 300.0),
            PlanarPoint::new(0.0, -300.0),
        ];
        let w = [0.05, 0.3, 0.3, 0.2, 0.15];
        let m = geometric_median(&p, &w, &opts()).unwrap();
        let (_, oracle) = lattice_min(&p, &w);
        assert!(m.objective <= oracle * (1.0 + 1e-6), "{} vs {}", m.objective, oracle);
    }

    #[test]
    fn random_instances_match_lattice_and_descend() {
        let mut s = RandomStream::new(2024, 0);
        for case in 0..25 {
            let n = 2 + s.below(19);
            let pts: Vec<_> = (0..n)
                .map(|_| PlanarPoint::new((s.uniform() * 2000.0).round(), (s.uniform() * 2000.0).round()))
                .collect();
            let w: Vec<f64> = (0..n).map(|_| s.uniform().powi(3) + 1e-3).collect();
            let (m, trace) = geometric_median_traced(&pts, &w, &WeiszfeldOptions {
                tolerance: 1e-7,
                max_iters: 10_000,
            })
            .unwrap();
            for pair in trace.windows(2) {
                assert!(pair[1] <= pair[0] * (1.0 + 1e-12), "case {case}: objective rose");
            }
            let (_, oracle) = lattice_min(&pts, &w);
            assert!(
                m.objective <= oracle * (1.0 + 1e-6),
                "case {case}: {} vs lattice {}",
                m.objective,
                oracle
            );
            let d = geometric_median(&pts, &w, &opts()).unwrap();
            assert!(
                d.objective <= oracle * (1.0 + 1e-6),
                "case {case} at default tolerance: {} vs lattice {}",
                d.objective,
                oracle
            );
        }
    }
}
