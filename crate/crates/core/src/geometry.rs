//! Convex constraint sets: Euclidean projection, tangent-cone projection and
//! normal-cone projection.
//!
//! The tangent-cone projection is the directional derivative of the point
//! projection, `lim (proj(x + εv) − x) / ε` as `ε → 0⁺`. Both supported
//! set shapes have closed forms for it. A coordinate (or the sphere) counts as
//! active when the point sits within [`ACTIVITY_TOL`] of it.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::linalg::{dist2, dot, norm2};

/// Distance from a bound under which it is treated as active.
pub const ACTIVITY_TOL: f64 = 1e-10;

/// Slack allowed when checking that a point belongs to a set.
pub const MEMBERSHIP_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum ConvexSet {
    Box { lo: Vec<f64>, hi: Vec<f64> },
    Ball { center: Vec<f64>, radius: f64 },
}

impl ConvexSet {
    pub fn new_box(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        let set = ConvexSet::Box { lo, hi };
        set.validate()?;
        Ok(set)
    }

    pub fn new_ball(center: Vec<f64>, radius: f64) -> Result<Self> {
        let set = ConvexSet::Ball { center, radius };
        set.validate()?;
        Ok(set)
    }

    /// Checks nonemptiness, finiteness and matching dimensions.
    pub fn validate(&self) -> Result<()> {
        match self {
            ConvexSet::Box { lo, hi } => {
                check_dim("box bounds", lo.len(), hi.len())?;
                if lo.is_empty() {
                    return Err(Error::scenario("set.box", "zero-dimensional box"));
                }
                if lo.iter().chain(hi).any(|v| !v.is_finite()) {
                    return Err(Error::scenario("set.box", "bounds must be finite"));
                }
                if let Some(j) = (0..lo.len()).find(|&j| lo[j] > hi[j]) {
                    return Err(Error::scenario(
                        "set.box",
                        format!("empty box: lo[{j}] = {} > hi[{j}] = {}", lo[j], hi[j]),
                    ));
                }
            }
            ConvexSet::Ball { center, radius } => {
                if center.is_empty() {
                    return Err(Error::scenario("set.ball", "zero-dimensional ball"));
                }
                if center.iter().any(|v| !v.is_finite()) {
                    return Err(Error::scenario("set.ball.center", "must be finite"));
                }
                if !(*radius > 0.0 && radius.is_finite()) {
                    return Err(Error::scenario(
                        "set.ball.radius",
                        format!("radius must be positive, got {radius}"),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        match self {
            ConvexSet::Box { lo, .. } => lo.len(),
            ConvexSet::Ball { center, .. } => center.len(),
        }
    }

    pub fn center(&self) -> Vec<f64> {
        match self {
            ConvexSet::Box { lo, hi } => lo.iter().zip(hi).map(|(a, b)| 0.5 * (a + b)).collect(),
            ConvexSet::Ball { center, .. } => center.clone(),
        }
    }

    /// Euclidean distance from `y` to the set.
    pub fn distance(&self, y: &[f64]) -> f64 {
        match self {
            ConvexSet::Box { lo, hi } => y
                .iter()
                .zip(lo.iter().zip(hi))
                .map(|(&v, (&l, &h))| {
                    let d = (l - v).max(v - h).max(0.0);
                    d * d
                })
                .sum::<f64>()
                .sqrt(),
            ConvexSet::Ball { center, radius } => (dist2(y, center) - radius).max(0.0),
        }
    }

    pub fn contains(&self, y: &[f64], tol: f64) -> bool {
        self.distance(y) <= tol
    }

    /// Euclidean projection of `y`, written into `out`.
    pub fn project_into(&self, y: &[f64], out: &mut [f64]) {
        match self {
            ConvexSet::Box { lo, hi } => {
                for (o, (&v, (&l, &h))) in out.iter_mut().zip(y.iter().zip(lo.iter().zip(hi))) {
                    *o = v.clamp(l, h);
                }
            }
            ConvexSet::Ball { center, radius } => {
                let r = dist2(y, center);
                if r > *radius {
                    let s = radius / r;
                    for (o, (&v, &c)) in out.iter_mut().zip(y.iter().zip(center)) {
                        *o = c + s * (v - c);
                    }
                } else {
                    out.copy_from_slice(y);
                }
            }
        }
    }

    /// Projects `y` onto the set, overwriting it.
    pub fn project_in_place(&self, y: &mut [f64]) {
        match self {
            ConvexSet::Box { lo, hi } => {
                for (v, (&l, &h)) in y.iter_mut().zip(lo.iter().zip(hi)) {
                    *v = v.clamp(l, h);
                }
            }
            ConvexSet::Ball { center, radius } => {
                let r = dist2(y, center);
                if r > *radius {
                    let s = radius / r;
                    for (v, &c) in y.iter_mut().zip(center) {
                        *v = c + s * (*v - c);
                    }
                }
            }
        }
    }

    pub fn project(&self, y: &[f64]) -> Result<Vec<f64>> {
        check_dim("projection point", self.dim(), y.len())?;
        let mut out = vec![0.0; y.len()];
        self.project_into(y, &mut out);
        Ok(out)
    }

    fn check_member(&self, x: &[f64]) -> Result<()> {
        check_dim("cone base point", self.dim(), x.len())?;
        let d = self.distance(x);
        if d > MEMBERSHIP_TOL {
            return Err(Error::NotInSet { distance: d });
        }
        Ok(())
    }

    /// Projection of `v` onto the tangent cone at `x`, into `out`.
    ///
    /// `x` is assumed to be a member; see [`tangent_project`](Self::tangent_project)
    /// for the checked version.
    pub fn tangent_project_into(&self, x: &[f64], v: &[f64], out: &mut [f64]) {
        out.copy_from_slice(v);
        match self {
            ConvexSet::Box { lo, hi } => {
                for j in 0..out.len() {
                    let at_lo = x[j] - lo[j] <= ACTIVITY_TOL;
                    let at_hi = hi[j] - x[j] <= ACTIVITY_TOL;
                    if (at_lo && v[j] < 0.0) || (at_hi && v[j] > 0.0) {
                        out[j] = 0.0;
                    }
                }
            }
            ConvexSet::Ball { center, radius } => {
                let r = dist2(x, center);
                if r < radius - ACTIVITY_TOL || r == 0.0 {
                    return;
                }
                let outward: f64 = x
                    .iter()
                    .zip(center)
                    .zip(v)
                    .map(|((&xi, &c), &vi)| (xi - c) * vi)
                    .sum::<f64>()
                    / r;
                if outward > 0.0 {
                    for (o, (&xi, &c)) in out.iter_mut().zip(x.iter().zip(center)) {
                        *o -= outward * (xi - c) / r;
                    }
                }
            }
        }
    }

    pub fn tangent_project(&self, x: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        self.check_member(x)?;
        check_dim("tangent direction", self.dim(), v.len())?;
        let mut out = vec![0.0; v.len()];
        self.tangent_project_into(x, v, &mut out);
        Ok(out)
    }

    /// Projection of `v` onto the normal cone at `x`: the Moreau complement
    /// `v − Π(x, v)`.
    pub fn normal_project(&self, x: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        let t = self.tangent_project(x, v)?;
        Ok(v.iter().zip(&t).map(|(a, b)| a - b).collect())
    }

    /// `min over z in the set of (z − x)ᵀg`.
    pub fn min_directional(&self, x: &[f64], g: &[f64]) -> f64 {
        match self {
            ConvexSet::Box { lo, hi } => (0..g.len())
                .map(|j| ((lo[j] - x[j]) * g[j]).min((hi[j] - x[j]) * g[j]))
                .sum(),
            ConvexSet::Ball { center, radius } => {
                let shift: Vec<f64> = center.iter().zip(x).map(|(c, xi)| c - xi).collect();
                dot(&shift, g) - radius * norm2(g)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_box() -> ConvexSet {
        ConvexSet::new_box(vec![0.25], vec![0.75]).unwrap()
    }

    fn unit_disc() -> ConvexSet {
        ConvexSet::new_ball(vec![0.0, 0.0], 1.0).unwrap()
    }

    /// Dense grid minimisation of |z − y| over the interval, as an oracle.
    fn grid_project_1d(lo: f64, hi: f64, y: f64) -> f64 {
        let steps = 100_000;
        (0..=steps)
            .map(|i| lo + (hi - lo) * i as f64 / steps as f64)
            .min_by(|a, b| (a - y).abs().total_cmp(&(b - y).abs()))
            .unwrap()
    }

    #[test]
    fn box_projection() {
        let b = unit_box();
        assert_eq!(b.project(&[0.5]).unwrap(), vec![0.5]);
        assert_eq!(b.project(&[0.9]).unwrap(), vec![0.75]);
        assert!((grid_project_1d(0.25, 0.75, 0.9) - 0.75).abs() < 1e-12);
    }

    #[test]
    fn ball_projection() {
        let p = unit_disc().project(&[3.0, 4.0]).unwrap();
        assert!((p[0] - 0.6).abs() < 1e-15 && (p[1] - 0.8).abs() < 1e-15);
        // boundary sampling oracle
        let best = (0..200_000)
            .map(|i| {
                let a = std::f64::consts::TAU * i as f64 / 200_000.0;
                (a.cos(), a.sin())
            })
            .min_by(|a, b| {
                let da = (a.0 - 3.0).hypot(a.1 - 4.0);
                let db = (b.0 - 3.0).hypot(b.1 - 4.0);
                da.total_cmp(&db)
            })
            .unwrap();
        assert!((best.0 - 0.6).abs() < 1e-4 && (best.1 - 0.8).abs() < 1e-4);
    }

    #[test]
    fn box_tangent_cone() {
        let b = unit_box();
        assert_eq!(b.tangent_project(&[0.5], &[-3.0]).unwrap(), vec![-3.0]);
        assert_eq!(b.tangent_project(&[0.25], &[-0.225]).unwrap(), vec![0.0]);
        assert_eq!(b.tangent_project(&[0.25], &[0.225]).unwrap(), vec![0.225]);
        // limit definition oracle
        let eps = 1e-8;
        let lim = (b.project(&[0.25 - eps * 0.225]).unwrap()[0] - 0.25) / eps;
        assert_eq!(lim, 0.0);
    }

    #[test]
    fn ball_tangent_cone() {
        let d = unit_disc();
        let t = d.tangent_project(&[1.0, 0.0], &[1.0, 1.0]).unwrap();
        assert_eq!(t, vec![0.0, 1.0]);
        let eps = 1e-8;
        let p = d.project(&[1.0 + eps, eps]).unwrap();
        let lim = [(p[0] - 1.0) / eps, p[1] / eps];
        assert!((lim[0] - t[0]).abs() < 1e-6 && (lim[1] - t[1]).abs() < 1e-6);
    }

    #[test]
    fn normal_cone_examples() {
        assert_eq!(unit_box().normal_project(&[0.5], &[7.0]).unwrap(), vec![0.0]);
        assert_eq!(unit_box().normal_project(&[0.25], &[-0.225]).unwrap(), vec![-0.225]);
        let w = unit_disc().normal_project(&[1.0, 0.0], &[1.0, 1.0]).unwrap();
        assert_eq!(w, vec![1.0, 0.0]);
        let w = unit_disc().normal_project(&[0.1, 0.2], &[1.0, 1.0]).unwrap();
        assert_eq!(w, vec![0.0, 0.0]);
    }

    #[test]
    fn rejects_points_outside() {
        let err = unit_box().tangent_project(&[0.9], &[1.0]).unwrap_err();
        assert!(matches!(err, Error::NotInSet { .. }));
        assert!(unit_box().tangent_project(&[0.75 + 1e-13], &[1.0]).is_ok());
    }

    #[test]
    fn validation() {
        assert!(ConvexSet::new_box(vec![1.0], vec![0.0]).is_err());
        assert!(ConvexSet::new_box(vec![0.0, 0.0], vec![1.0]).is_err());
        assert!(ConvexSet::new_ball(vec![0.0], 0.0).is_err());
        assert!(ConvexSet::new_ball(vec![0.0], -1.0).is_err());
        assert!(ConvexSet::new_box(vec![0.5], vec![0.5]).is_ok());
    }

    #[test]
    fn min_directional_matches_vertices() {
        let b = ConvexSet::new_box(vec![0.0, -1.0], vec![1.0, 2.0]).unwrap();
        let x = [0.3, 0.4];
        let g = [1.0, -2.0];
        let mut best = f64::INFINITY;
        for z0 in [0.0, 1.0] {
            for z1 in [-1.0, 2.0] {
                best = best.min((z0 - x[0]) * g[0] + (z1 - x[1]) * g[1]);
            }
        }
        assert!((b.min_directional(&x, &g) - best).abs() < 1e-15);
        let d = unit_disc();
        // minimiser on the circle is −g/|g|
        let n = (5.0f64).sqrt();
        let z = [-1.0 / n, 2.0 / n];
        let expect = (z[0] - x[0]) * g[0] + (z[1] - x[1]) * g[1];
        assert!((d.min_directional(&x, &g) - expect).abs() < 1e-14);
    }
}
