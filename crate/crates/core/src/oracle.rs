//! Brute-force numerical oracles for the closed-form operators.
//!
//! Nothing here uses the thresholding or folding formulas: each routine
//! minimizes the defining objective directly by golden-section search or by
//! iterated grid refinement. They are slow and intended for verification.

use std::f64::consts::PI;

const GOLDEN: f64 = 0.618_033_988_749_894_8;

/// Golden-section search on `[lo, hi]` for a unimodal objective.
///
/// `less(a, b)` must report whether the objective at `a` is below the value at
/// `b`; callers compute it from a difference so rounding does not swamp flat
/// minima.
pub fn golden_section(mut lo: f64, mut hi: f64, less: impl Fn(f64, f64) -> bool) -> f64 {
    let mut a = hi - GOLDEN * (hi - lo);
    let mut b = lo + GOLDEN * (hi - lo);
    for _ in 0..200 {
        if hi - lo <= 1e-15 * (1.0 + lo.abs().max(hi.abs())) {
            break;
        }
        if less(a, b) {
            hi = b;
            b = a;
            a = hi - GOLDEN * (hi - lo);
        } else {
            lo = a;
            a = b;
            b = lo + GOLDEN * (hi - lo);
        }
    }
    0.5 * (lo + hi)
}

/// Per-coordinate minimizer of `γ ω_n |v| + ½ (u_n − v)²`.
pub fn prox_weighted_l1(u: &[f64], gamma: f64, omega: &[f64]) -> Vec<f64> {
    u.iter()
        .zip(omega)
        .map(|(&un, &wn)| {
            let t = gamma * wn;
            // f(a) − f(b) = t(|a| − |b|) + ½(b − a)(2u − a − b)
            let less = |a: f64, b: f64| t * (a.abs() - b.abs()) + 0.5 * (b - a) * (2.0 * un - a - b) < 0.0;
            let span = un.abs() + 1.0;
            golden_section(-span, span, less)
        })
        .collect()
}

/// Minimizer over `v ∈ ℝ²` of `t‖v‖ + ½‖u − v‖²`, searched in polar
/// coordinates `v = r(cos φ, sin φ)`.
///
/// A dense sweep over φ (each with a golden-section search over r) picks the
/// starting point, then alternating golden-section searches over φ and r
/// polish it. Polar coordinates follow the radial valley that an axis-aligned
/// grid tends to stall in.
pub fn prox_group_pair(u: (f64, f64), t: f64) -> (f64, f64) {
    const SWEEP: usize = 256;
    const ROUNDS: usize = 3;
    let span = u.0.hypot(u.1) + 1.0;
    let along = |phi: f64| u.0 * phi.cos() + u.1 * phi.sin();
    // f(a, φ) − f(b, φ) = (a − b)(t + (a + b)/2 − u·e_φ)
    let radius = |phi: f64| {
        let p = along(phi);
        golden_section(0.0, span, |a, b| (a - b) * (t + 0.5 * (a + b) - p) < 0.0)
    };
    let mut best = (0.0, 0.0, 0.0);
    for k in 0..SWEEP {
        let phi = 2.0 * PI * k as f64 / SWEEP as f64;
        let r = radius(phi);
        // f − ½‖u‖²
        let value = r * (t + 0.5 * r - along(phi));
        if value < best.2 {
            best = (r, phi, value);
        }
    }
    let (mut r, mut phi) = (best.0, best.1);
    let width = 2.0 * PI / SWEEP as f64;
    for _ in 0..ROUNDS {
        if r == 0.0 {
            break;
        }
        // sign of f(r, a) − f(r, b) = −2r·sin((a − b)/2)·(u₁cos m − u₀sin m), m = (a + b)/2
        phi = golden_section(phi - width, phi + width, |a, b| {
            let m = 0.5 * (a + b);
            -(0.5 * (a - b)).sin() * (u.1 * m.cos() - u.0 * m.sin()) < 0.0
        });
        r = radius(phi);
    }
    (r * phi.cos(), r * phi.sin())
}

/// Group prox on the stacked `(Re, Im)` layout, pair by pair.
pub fn prox_weighted_l21(u_hat: &[f64], gamma: f64, omega: &[f64]) -> Vec<f64> {
    let n = omega.len();
    let mut out = vec![0.0; 2 * n];
    for k in 0..n {
        let (a, b) = prox_group_pair((u_hat[k], u_hat[n + k]), gamma * omega[k]);
        out[k] = a;
        out[n + k] = b;
    }
    out
}

fn octagon_vertices(r: f64) -> [(f64, f64); 8] {
    std::array::from_fn(|k| {
        let a = k as f64 * PI / 4.0;
        (r * a.cos(), r * a.sin())
    })
}

/// Membership by the sign of the cross product against every edge.
pub fn octagon_contains(p: (f64, f64), r: f64) -> bool {
    let v = octagon_vertices(r);
    (0..8).all(|k| {
        let (a, b) = (v[k], v[(k + 1) % 8]);
        (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0) >= 0.0
    })
}

/// Nearest point of the octagon by dense sampling of its boundary followed
/// by local refinement along the perimeter.
pub fn project_octagon(p: (f64, f64), r: f64) -> (f64, f64) {
    if octagon_contains(p, r) {
        return p;
    }
    let v = octagon_vertices(r);
    let at = |s: f64| {
        // perimeter parameter s ∈ [0, 8): edge floor(s), fraction s − floor(s)
        let s = s.rem_euclid(8.0);
        let k = (s.floor() as usize).min(7);
        let f = s - k as f64;
        let (a, b) = (v[k], v[(k + 1) % 8]);
        (a.0 + f * (b.0 - a.0), a.1 + f * (b.1 - a.1))
    };
    let dist = |q: (f64, f64)| (q.0 - p.0).powi(2) + (q.1 - p.1).powi(2);

    const SAMPLES: usize = 8 * 2000;
    let mut best_s = 0.0;
    let mut best_d = f64::INFINITY;
    for i in 0..SAMPLES {
        let s = 8.0 * i as f64 / SAMPLES as f64;
        let d = dist(at(s));
        if d < best_d {
            best_d = d;
            best_s = s;
        }
    }
    let mut half = 8.0 / SAMPLES as f64;
    while half > 1e-13 {
        let step = half / 50.0;
        let center = best_s;
        for i in -50..=50 {
            let s = center + i as f64 * step;
            let d = dist(at(s));
            if d < best_d {
                best_d = d;
                best_s = s;
            }
        }
        half = 2.0 * step;
    }
    at(best_s)
}

/// Projected subgradient descent with restarts, tracking the best iterate.
///
/// Each phase runs `iters_per_phase` steps of length `scale/√(k+1)` along the
/// normalized subgradient from the best point so far, and the next phase
/// halves `scale`.
pub fn projected_subgradient(
    x0: Vec<f64>,
    mut scale: f64,
    phases: usize,
    iters_per_phase: usize,
    value: impl Fn(&[f64]) -> f64,
    subgradient: impl Fn(&[f64]) -> Vec<f64>,
    project: impl Fn(&mut [f64]),
) -> (Vec<f64>, f64) {
    let mut best = x0;
    project(&mut best);
    let mut best_value = value(&best);
    for _ in 0..phases {
        let mut x = best.clone();
        for k in 0..iters_per_phase {
            let g = subgradient(&x);
            let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm == 0.0 {
                break;
            }
            let step = scale / ((k + 1) as f64).sqrt() / norm;
            x.iter_mut().zip(&g).for_each(|(xi, gi)| *xi -= step * gi);
            project(&mut x);
            let v = value(&x);
            if v < best_value {
                best_value = v;
                best.copy_from_slice(&x);
            }
        }
        scale *= 0.5;
    }
    (best, best_value)
}
