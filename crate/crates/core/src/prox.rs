//! Proximity operators and metric projections with closed forms.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::constellation::{HullDescriptor, HullShape};
use crate::error::{check_dim, Error, Result};
use crate::linalg::RealVector;

/// Strictly positive per-coordinate weights of a weighted norm.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if let Some(i) = weights.iter().position(|w| !(*w > 0.0) || !w.is_finite()) {
            return Err(Error::invalid(
                "weights",
                format!("entry {i} is {} but weights must be positive and finite", weights[i]),
            ));
        }
        Ok(WeightVector(weights))
    }

    pub fn uniform(dim: usize, value: f64) -> Result<Self> {
        WeightVector::new(vec![value; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn max(&self) -> f64 {
        self.0.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

impl std::ops::Deref for WeightVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl<'de> Deserialize<'de> for WeightVector {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let raw = Vec::<f64>::deserialize(deserializer)?;
        WeightVector::new(raw).map_err(serde::de::Error::custom)
    }
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma > 0.0 && gamma.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid("gamma", format!("must be positive, got {gamma}")))
    }
}

#[inline]
fn soft_threshold(u: f64, threshold: f64) -> f64 {
    let mag = u.abs() - threshold;
    if mag > 0.0 {
        mag.copysign(u)
    } else {
        0.0
    }
}

/// Prox of `γ Σ ω_n |·_n|`: per-coordinate soft thresholding at `γ ω_n`.
pub fn prox_weighted_l1(u: &RealVector, gamma: f64, omega: &WeightVector) -> Result<RealVector> {
    check_gamma(gamma)?;
    check_dim("prox_weighted_l1 weights", u.dim(), omega.dim())?;
    Ok(RealVector::from_raw(
        u.iter().zip(omega.iter()).map(|(&v, &w)| soft_threshold(v, gamma * w)).collect(),
    ))
}

/// Prox of `γ Σ ω_n ‖(u_n, u_{N+n})‖₂` on the stacked layout: group soft
/// thresholding of each `(Re, Im)` pair. Zero pairs stay at zero.
pub fn prox_weighted_l21(u_hat: &RealVector, gamma: f64, omega: &WeightVector) -> Result<RealVector> {
    check_gamma(gamma)?;
    if u_hat.dim() % 2 != 0 {
        return Err(Error::invalid("u_hat", "stacked dimension must be even"));
    }
    let n = u_hat.dim() / 2;
    check_dim("prox_weighted_l21 weights", n, omega.dim())?;
    let mut out = vec![0.0; 2 * n];
    for k in 0..n {
        let (re, im) = (u_hat[k], u_hat[n + k]);
        let r = re.hypot(im);
        if r == 0.0 {
            continue;
        }
        let factor = (1.0 - gamma * omega[k] / r).max(0.0);
        out[k] = factor * re;
        out[n + k] = factor * im;
    }
    Ok(RealVector::from_raw(out))
}

/// `Prox_{f*} = Id − Prox_f`.
pub fn prox_conjugate<F>(prox_f: F, u: &RealVector) -> Result<RealVector>
where
    F: Fn(&RealVector) -> Result<RealVector>,
{
    Ok(u.sub(&prox_f(u)?))
}

/// Prox of `f(· − z)`: `z + Prox_f(u − z)`.
pub fn prox_shifted<F>(prox_f: F, z: &RealVector, u: &RealVector) -> Result<RealVector>
where
    F: Fn(&RealVector) -> Result<RealVector>,
{
    check_dim("prox_shifted", z.dim(), u.dim())?;
    Ok(z.add(&prox_f(&u.sub(z))?))
}

pub fn project_box(x: &RealVector, lo: f64, hi: f64) -> Result<RealVector> {
    if !(lo <= hi) {
        return Err(Error::invalid("box", format!("lo {lo} exceeds hi {hi}")));
    }
    Ok(x.map(|v| v.clamp(lo, hi)))
}

/// Nearest point of the regular octagon with vertices
/// `circumradius·(cos kπ/4, sin kπ/4)`, `k = 0..8`.
///
/// The point is folded into the sector `[0, π/8]` by the octagon's dihedral
/// symmetries, projected onto the half-edge leaving the vertex on the
/// positive x-axis, and unfolded again.
pub fn project_regular_octagon_pair(p: (f64, f64), circumradius: f64) -> Result<(f64, f64)> {
    if !(circumradius > 0.0) || !circumradius.is_finite() {
        return Err(Error::invalid("circumradius", "must be positive"));
    }
    Ok(octagon_projection(p, circumradius))
}

fn octagon_projection((px, py): (f64, f64), r: f64) -> (f64, f64) {
    let (c8, s8) = ((PI / 8.0).cos(), (PI / 8.0).sin());
    let apothem = r * c8;

    let (mut x, mut y) = (px.abs(), py.abs());
    let swapped = y > x;
    if swapped {
        std::mem::swap(&mut x, &mut y);
    }
    // reflection across the ray at angle π/8 maps angle θ to π/4 − θ
    let reflect = |x: f64, y: f64| {
        let d = x * c8 + y * s8;
        (2.0 * d * c8 - x, 2.0 * d * s8 - y)
    };
    let mirrored = y * c8 > x * s8;
    if mirrored {
        (x, y) = reflect(x, y);
    }

    let outside = x * c8 + y * s8 - apothem;
    if outside <= 0.0 {
        return (px, py);
    }
    // distance along the edge direction t = (−sin π/8, cos π/8) from the vertex (r, 0)
    let s = ((x - r) * -s8 + y * c8).max(0.0);
    (x, y) = (r - s * s8, s * c8);

    if mirrored {
        (x, y) = reflect(x, y);
    }
    if swapped {
        std::mem::swap(&mut x, &mut y);
    }
    (x.copysign(px), y.copysign(py))
}

/// Metric projection onto the constellation hull.
pub fn project_constellation_hull(x_hat: &RealVector, hull: &HullDescriptor) -> Result<RealVector> {
    check_dim("hull projection", hull.dim, x_hat.dim())?;
    match hull.shape {
        HullShape::Box { lo, hi } => project_box(x_hat, lo, hi),
        HullShape::OctagonPerPair { circumradius } => {
            if x_hat.dim() % 2 != 0 {
                return Err(Error::invalid("x_hat", "pairwise hull needs an even dimension"));
            }
            let n = x_hat.dim() / 2;
            let mut out = x_hat.clone();
            let slice = out.as_mut_slice();
            for k in 0..n {
                let (a, b) = project_regular_octagon_pair((x_hat[k], x_hat[n + k]), circumradius)?;
                slice[k] = a;
                slice[n + k] = b;
            }
            Ok(out)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle;
    use proptest::prelude::*;

    fn v(x: &[f64]) -> RealVector {
        RealVector::new(x.to_vec()).unwrap()
    }

    fn w(x: &[f64]) -> WeightVector {
        WeightVector::new(x.to_vec()).unwrap()
    }

    #[test]
    fn soft_threshold_examples() {
        assert_eq!(prox_weighted_l1(&v(&[2.0]), 1.0, &w(&[0.5])).unwrap().as_slice(), &[1.5]);
        assert_eq!(prox_weighted_l1(&v(&[0.3]), 1.0, &w(&[0.5])).unwrap().as_slice(), &[0.0]);
        let p = prox_weighted_l1(&v(&[-2.0, 1.0, 0.0]), 2.0, &w(&[0.25, 0.25, 0.5])).unwrap();
        assert_eq!(p.as_slice(), &[-1.5, 0.5, 0.0]);
        // frozen against the per-coordinate golden-section oracle
        let o = oracle::prox_weighted_l1(&[-2.0, 1.0, 0.0], 2.0, &[0.25, 0.25, 0.5]);
        for (a, b) in p.iter().zip(&o) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn prox_rejects_bad_gamma_and_dims() {
        assert!(prox_weighted_l1(&v(&[1.0]), 0.0, &w(&[1.0])).is_err());
        assert!(prox_weighted_l1(&v(&[1.0]), -1.0, &w(&[1.0])).is_err());
        assert!(prox_weighted_l1(&v(&[1.0, 2.0]), 1.0, &w(&[1.0])).is_err());
        assert!(prox_weighted_l21(&v(&[1.0, 2.0, 3.0]), 1.0, &w(&[1.0])).is_err());
        assert!(prox_weighted_l21(&v(&[1.0, 2.0]), 0.0, &w(&[1.0])).is_err());
        assert!(WeightVector::new(vec![1.0, 0.0]).is_err());
    }

    #[test]
    fn group_threshold_examples() {
        assert_eq!(prox_weighted_l21(&v(&[3.0, 4.0]), 1.0, &w(&[5.0])).unwrap().as_slice(), &[0.0, 0.0]);
        let p = prox_weighted_l21(&v(&[3.0, 4.0]), 1.0, &w(&[2.5])).unwrap();
        assert_eq!(p.as_slice(), &[1.5, 2.0]);
        let o = oracle::prox_weighted_l21(&[3.0, 4.0], 1.0, &[2.5]);
        assert!((o[0] - 1.5).abs() < 1e-9 && (o[1] - 2.0).abs() < 1e-9);
        assert_eq!(prox_weighted_l21(&v(&[0.0, 0.0]), 3.0, &w(&[0.1])).unwrap().as_slice(), &[0.0, 0.0]);
    }

    #[test]
    fn conjugate_and_shift_examples() {
        let id = |u: &RealVector| Ok(u.clone());
        assert_eq!(prox_conjugate(id, &v(&[1.0, -2.0])).unwrap().as_slice(), &[0.0, 0.0]);
        let soft = |u: &RealVector| prox_weighted_l1(u, 1.0, &w(&[0.5]));
        assert_eq!(prox_conjugate(soft, &v(&[2.0])).unwrap().as_slice(), &[0.5]);
        assert_eq!(prox_conjugate(soft, &v(&[0.0])).unwrap().as_slice(), &[0.0]);

        let z = v(&[1.0]);
        assert_eq!(prox_shifted(soft, &z, &v(&[3.0])).unwrap().as_slice(), &[2.5]);
        assert_eq!(
            prox_shifted(soft, &v(&[0.0]), &v(&[3.0])).unwrap(),
            prox_weighted_l1(&v(&[3.0]), 1.0, &w(&[0.5])).unwrap()
        );
        assert_eq!(prox_shifted(id, &z, &v(&[-4.0])).unwrap().as_slice(), &[-4.0]);
        assert!(prox_shifted(id, &v(&[0.0, 0.0]), &v(&[1.0])).is_err());
    }

    #[test]
    fn box_examples() {
        assert_eq!(project_box(&v(&[2.0, -2.0, 0.5]), -1.0, 1.0).unwrap().as_slice(), &[1.0, -1.0, 0.5]);
        assert_eq!(project_box(&v(&[0.3, -0.9]), -1.0, 1.0).unwrap().as_slice(), &[0.3, -0.9]);
        assert_eq!(project_box(&v(&[1.0001]), -1.0, 1.0).unwrap().as_slice(), &[1.0]);
        assert!(project_box(&v(&[0.0]), 1.0, -1.0).is_err());
    }

    #[test]
    fn octagon_examples() {
        assert_eq!(project_regular_octagon_pair((0.0, 0.0), 1.0).unwrap(), (0.0, 0.0));
        assert_eq!(project_regular_octagon_pair((2.0, 0.0), 1.0).unwrap(), (1.0, 0.0));
        let (x, y) = project_regular_octagon_pair((0.0, -3.0), 2.0).unwrap();
        assert!(x.abs() < 1e-15 && (y + 2.0).abs() < 1e-15);
        // far along a vertex direction lands on the vertex
        let d = std::f64::consts::FRAC_1_SQRT_2;
        let (x, y) = project_regular_octagon_pair((-5.0 * d, 5.0 * d), 1.0).unwrap();
        assert!((x + d).abs() < 1e-12 && (y - d).abs() < 1e-12);
        // far along an edge normal lands on the edge midpoint
        let (c8, s8) = ((PI / 8.0).cos(), (PI / 8.0).sin());
        let (x, y) = project_regular_octagon_pair((3.0 * c8, 3.0 * s8), 1.0).unwrap();
        assert!((x - c8 * c8).abs() < 1e-12 && (y - c8 * s8).abs() < 1e-12);
        assert!(project_regular_octagon_pair((1.0, 1.0), 0.0).is_err());
    }

    #[test]
    fn octagon_matches_dense_sampling() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
        for _ in 0..200 {
            let p = (rng.random_range(-2.5..2.5), rng.random_range(-2.5..2.5));
            let r = rng.random_range(0.5..2.0);
            let got = project_regular_octagon_pair(p, r).unwrap();
            let want = oracle::project_octagon(p, r);
            assert!((got.0 - want.0).abs() < 1e-6 && (got.1 - want.1).abs() < 1e-6, "{p:?} {got:?} {want:?}");
        }
    }

    #[test]
    fn hull_projection_cases() {
        let qam = HullDescriptor::boxed(-1.0, 1.0, 4).unwrap();
        let p = project_constellation_hull(&RealVector::filled(4, 1.5), &qam).unwrap();
        assert_eq!(p, RealVector::filled(4, 1.0));
        let psk = HullDescriptor::octagon_per_pair(1.0, 4).unwrap();
        let inside = v(&[0.1, -0.2, 0.3, 0.0]);
        assert_eq!(project_constellation_hull(&inside, &psk).unwrap(), inside);
        assert!(project_constellation_hull(&v(&[0.0; 3]), &psk).is_err());
        // pairs are (x_n, x_{N+n})
        let p = project_constellation_hull(&v(&[2.0, 0.0, 0.0, -2.0]), &psk).unwrap();
        assert_eq!(p.as_slice(), &[1.0, 0.0, 0.0, -1.0]);
    }

    fn l1_value(u: &[f64], omega: &[f64]) -> f64 {
        u.iter().zip(omega).map(|(a, w)| w * a.abs()).sum()
    }

    fn l21_value(u: &[f64], omega: &[f64]) -> f64 {
        let n = omega.len();
        (0..n).map(|k| omega[k] * u[k].hypot(u[n + k])).sum()
    }

    fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum()
    }

    fn case() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, Vec<f64>, Vec<f64>, f64)> {
        (1usize..6).prop_flat_map(|n| {
            (
                prop::collection::vec(-4.0..4.0f64, 2 * n),
                prop::collection::vec(-4.0..4.0f64, 2 * n),
                prop::collection::vec(-4.0..4.0f64, 2 * n),
                prop::collection::vec(0.01..2.0f64, n),
                0.01..10.0f64,
            )
        })
    }

    proptest! {
        #[test]
        fn prox_variational_inequality((u, cand, _, omega, gamma) in case()) {
            let n = omega.len();
            let w1 = w(&[omega.clone(), omega.clone()].concat());
            let p = prox_weighted_l1(&v(&u), gamma, &w1).unwrap();
            let lhs = gamma * l1_value(&p, &w1) + 0.5 * dist_sq(&u, &p);
            let rhs = gamma * l1_value(&cand, &w1) + 0.5 * dist_sq(&u, &cand);
            prop_assert!(lhs <= rhs + 1e-9);

            let p = prox_weighted_l21(&v(&u), gamma, &w(&omega)).unwrap();
            let lhs = gamma * l21_value(&p, &omega) + 0.5 * dist_sq(&u, &p);
            let rhs = gamma * l21_value(&cand, &omega) + 0.5 * dist_sq(&u, &cand);
            prop_assert!(lhs <= rhs + 1e-9);
            prop_assert_eq!(p.dim(), 2 * n);
        }

        #[test]
        fn prox_firmly_nonexpansive((a, b, _, omega, gamma) in case()) {
            let w1 = w(&[omega.clone(), omega.clone()].concat());
            let w2 = w(&omega);
            let ops: [Box<dyn Fn(&RealVector) -> RealVector>; 3] = [
                Box::new(|u| prox_weighted_l1(u, gamma, &w1).unwrap()),
                Box::new(|u| prox_weighted_l21(u, gamma, &w2).unwrap()),
                Box::new(|u| project_constellation_hull(u, &HullDescriptor::octagon_per_pair(1.0, u.dim()).unwrap()).unwrap()),
            ];
            let (a, b) = (v(&a), v(&b));
            for op in &ops {
                let (pa, pb) = (op(&a), op(&b));
                let d = pa.sub(&pb);
                prop_assert!(d.norm_sq() <= a.sub(&b).dot(&d) + 1e-10);
            }
        }

        #[test]
        fn moreau_decomposition((u, _, _, omega, gamma) in case()) {
            let w2 = w(&omega);
            let u = v(&u);
            let prox = |x: &RealVector| prox_weighted_l21(x, gamma, &w2);
            let sum = prox(&u).unwrap().add(&prox_conjugate(prox, &u).unwrap());
            prop_assert!(sum.sub(&u).max_abs() <= 1e-15 * u.max_abs().max(1.0));
        }

        #[test]
        fn projections_idempotent((x, y, _, _, _) in case()) {
            let (x, y) = (v(&x), v(&y));
            let hulls = [
                HullDescriptor::boxed(-1.0, 1.0, x.dim()).unwrap(),
                HullDescriptor::octagon_per_pair(1.0, x.dim()).unwrap(),
            ];
            for h in &hulls {
                let px = project_constellation_hull(&x, h).unwrap();
                let ppx = project_constellation_hull(&px, h).unwrap();
                prop_assert!(px.sub(&ppx).max_abs() < 1e-14);
                let py = project_constellation_hull(&y, h).unwrap();
                prop_assert!(px.sub(&py).norm() <= x.sub(&y).norm() + 1e-12);
            }
        }
    }
}
