//! Proximal operators `argmin_x 1/2 ||x - v||^2 + t * norm(x)` of the atom
//! norms.
//!
//! `l1` and `l2` have closed forms. The remaining kinds go through Moreau's
//! identity `prox_{t N}(v) = v - P_{t B*}(v)` with `B*` the dual-norm unit
//! ball:
//!
//! * `lq`, `q = inf`: projection onto an `l1` ball (sort based);
//! * `lq`, general `q`: projection onto an `l_r` ball, `r = q/(q-1)`, by
//!   bisection on the multiplier of the ball constraint;
//! * `max(|a|, ||b||_1)`: the dual ball is `|a| + ||b||_inf <= t`, projected
//!   by bisection on how the radius is split between `a` and `b`.

use super::NormKind;
use crate::error::{Error, Result};

pub fn prox(kind: &NormKind, v: &[f64], t: f64) -> Result<Vec<f64>> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::domain(format!("prox step must be positive and finite, got {t}")));
    }
    let mut x = v.to_vec();
    prox_in_place(kind, &mut x, t);
    Ok(x)
}

/// Overwrites `v` with `prox_{t norm}(v)`. `t >= 0`.
pub(crate) fn prox_in_place(kind: &NormKind, v: &mut [f64], t: f64) {
    if t == 0.0 || v.is_empty() {
        return;
    }
    match *kind {
        NormKind::L1 => v.iter_mut().for_each(|x| *x = soft_threshold(*x, t)),
        NormKind::Lq { q } if q.get() == 2.0 => {
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            let factor = if norm > t { 1.0 - t / norm } else { 0.0 };
            v.iter_mut().for_each(|x| *x *= factor);
        }
        NormKind::Lq { q } => {
            let mut y = v.to_vec();
            if q.is_infinite() {
                project_l1_ball(&mut y, t);
            } else {
                project_lr_ball(&mut y, q.dual(), t);
            }
            v.iter_mut().zip(&y).for_each(|(x, p)| *x -= p);
        }
        NormKind::MaxAbsL1 => {
            let mut y = v.to_vec();
            project_abs_plus_linf_ball(&mut y, t);
            v.iter_mut().zip(&y).for_each(|(x, p)| *x -= p);
        }
    }
}

#[inline]
pub fn soft_threshold(x: f64, t: f64) -> f64 {
    if x > t {
        x - t
    } else if x < -t {
        x + t
    } else {
        0.0
    }
}

/// Euclidean projection onto `{ ||y||_1 <= radius }`.
pub(crate) fn project_l1_ball(v: &mut [f64], radius: f64) {
    let l1: f64 = v.iter().map(|x| x.abs()).sum();
    if l1 <= radius {
        return;
    }
    let mut mags: Vec<f64> = v.iter().map(|x| x.abs()).collect();
    mags.sort_unstable_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut shift = 0.0;
    for (i, &m) in mags.iter().enumerate() {
        cum += m;
        let candidate = (cum - radius) / (i + 1) as f64;
        if m > candidate {
            shift = candidate;
        } else {
            break;
        }
    }
    v.iter_mut().for_each(|x| *x = soft_threshold(*x, shift));
}

/// Solve `y + mu * r * y^(r-1) = a` for `y` in `[0, a]`, `a >= 0`.
fn lr_coordinate(a: f64, mu: f64, r: f64) -> f64 {
    if a == 0.0 {
        return 0.0;
    }
    let f = |y: f64| y + mu * r * y.powf(r - 1.0) - a;
    let (mut lo, mut hi) = (0.0, a);
    let mut y = 0.5 * a;
    for _ in 0..200 {
        let fy = f(y);
        if fy > 0.0 {
            hi = y;
        } else {
            lo = y;
        }
        if hi - lo <= 1e-16 * a {
            break;
        }
        // safeguarded Newton step
        let d = 1.0 + mu * r * (r - 1.0) * y.powf(r - 2.0);
        let next = y - fy / d;
        y = if next.is_finite() && next > lo && next < hi { next } else { 0.5 * (lo + hi) };
    }
    y
}

/// Euclidean projection onto `{ ||y||_r <= radius }`, `1 < r < inf`.
pub(crate) fn project_lr_ball(v: &mut [f64], r: f64, radius: f64) {
    let scale = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if scale == 0.0 {
        return;
    }
    let norm_r = |ys: &mut dyn Iterator<Item = f64>| -> f64 {
        scale * ys.map(|y| (y / scale).powf(r)).sum::<f64>().powf(1.0 / r)
    };
    if norm_r(&mut v.iter().map(|x| x.abs())) <= radius {
        return;
    }
    let mags: Vec<f64> = v.iter().map(|x| x.abs()).collect();
    // excess(mu) = ||y(mu)||_r - radius, decreasing in mu
    let excess = |mu: f64| -> f64 { norm_r(&mut mags.iter().map(|&a| lr_coordinate(a, mu, r))) - radius };
    let mut hi = 1.0;
    while excess(hi) > 0.0 {
        hi *= 2.0;
        if hi > 1e300 {
            break;
        }
    }
    let mut lo = 0.0;
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if excess(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mu = hi;
    for x in v.iter_mut() {
        *x = x.signum() * lr_coordinate(x.abs(), mu, r);
    }
}

/// Euclidean projection onto `{ |y_0| + ||y_{1..}||_inf <= radius }`.
pub(crate) fn project_abs_plus_linf_ball(v: &mut [f64], radius: f64) {
    let Some((head, rest)) = v.split_first_mut() else {
        return;
    };
    let a = head.abs();
    let rest_max = rest.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if a + rest_max <= radius {
        return;
    }
    // tau is the part of the radius given to the tail; the derivative of the
    // squared distance in tau is increasing
    let slope =
        |tau: f64| -> f64 { (a - radius + tau).max(0.0) - rest.iter().map(|x| (x.abs() - tau).max(0.0)).sum::<f64>() };
    let tau = if rest.is_empty() || slope(0.0) >= 0.0 {
        0.0
    } else if slope(radius) <= 0.0 {
        radius
    } else {
        let (mut lo, mut hi) = (0.0, radius);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if slope(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        // slope is affine on the bracket; solve it exactly there
        let mid = 0.5 * (lo + hi);
        let head_active = a - radius + mid > 0.0;
        let (mut count, mut sum) = (head_active as usize as f64, 0.0);
        if head_active {
            sum -= a - radius;
        }
        for x in rest.iter().filter(|x| x.abs() > mid) {
            count += 1.0;
            sum += x.abs();
        }
        let exact = sum / count;
        if count > 0.0 && exact >= lo - 1e-12 * radius && exact <= hi + 1e-12 * radius {
            exact.clamp(0.0, radius)
        } else {
            mid
        }
    };
    *head = head.signum() * a.min(radius - tau);
    rest.iter_mut().for_each(|x| *x = x.signum() * x.abs().min(tau));
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::penalty::Exponent;
    use rand::Rng;

    fn kinds() -> Vec<NormKind> {
        vec![
            NormKind::L1,
            NormKind::Lq { q: Exponent::TWO },
            NormKind::Lq { q: Exponent::new(1.5).unwrap() },
            NormKind::Lq { q: Exponent::new(3.0).unwrap() },
            NormKind::Lq { q: Exponent::INFINITY },
            NormKind::MaxAbsL1,
        ]
    }

    #[test]
    fn closed_form_examples() {
        assert_eq!(prox(&NormKind::L1, &[3.0], 1.0).unwrap(), vec![2.0]);
        let l2 = NormKind::Lq { q: Exponent::TWO };
        let x = prox(&l2, &[3.0, 4.0], 2.0).unwrap();
        assert!((x[0] - 1.8).abs() < 1e-15 && (x[1] - 2.4).abs() < 1e-15);
        assert_eq!(prox(&l2, &[0.3, 0.4], 2.0).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn rejects_nonpositive_step() {
        assert!(prox(&NormKind::L1, &[1.0], 0.0).is_err());
        assert!(prox(&NormKind::L1, &[1.0], -1.0).is_err());
        assert!(prox(&NormKind::L1, &[1.0], f64::NAN).is_err());
    }

    #[test]
    fn tiny_step_is_identity() {
        let v = [0.7, -1.3, 2.2, 0.0, -0.4];
        for kind in kinds() {
            let x = prox(&kind, &v, 1e-12).unwrap();
            for (a, b) in x.iter().zip(&v) {
                assert!((a - b).abs() < 1e-8, "{kind:?}");
            }
        }
    }

    #[test]
    fn general_q_agrees_with_closed_form_at_two() {
        // route q = 2 through the bisection projection
        let mut rng = crate::rng::from_seed(8);
        for _ in 0..100 {
            let v: Vec<f64> = (0..4).map(|_| rng.random_range(-2.0..2.0)).collect();
            let t = rng.random_range(0.05..2.0);
            let mut y = v.clone();
            project_lr_ball(&mut y, 2.0, t);
            let via_projection: Vec<f64> = v.iter().zip(&y).map(|(a, b)| a - b).collect();
            let closed = prox(&NormKind::Lq { q: Exponent::TWO }, &v, t).unwrap();
            for (a, b) in via_projection.iter().zip(&closed) {
                assert!((a - b).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn projections_land_in_their_balls() {
        let mut rng = crate::rng::from_seed(9);
        for _ in 0..200 {
            let v: Vec<f64> = (0..6).map(|_| rng.random_range(-3.0..3.0)).collect();
            let t = rng.random_range(0.1..2.0);
            let mut y = v.clone();
            project_l1_ball(&mut y, t);
            assert!(y.iter().map(|x| x.abs()).sum::<f64>() <= t * (1.0 + 1e-12));
            let mut y = v.clone();
            project_abs_plus_linf_ball(&mut y, t);
            assert!(NormKind::MaxAbsL1.dual_norm(&y) <= t * (1.0 + 1e-12));
            let mut y = v.clone();
            project_lr_ball(&mut y, 3.0, t);
            assert!(y.iter().map(|x| x.abs().powi(3)).sum::<f64>().cbrt() <= t * (1.0 + 1e-10));
        }
    }

    fn prox_objective(kind: &NormKind, x: &[f64], v: &[f64], t: f64) -> f64 {
        0.5 * x.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() + t * kind.norm(x)
    }

    #[test]
    fn prox_beats_local_perturbations() {
        let mut rng = crate::rng::from_seed(10);
        for kind in kinds() {
            for _ in 0..20 {
                let dim = rng.random_range(1..7);
                let v: Vec<f64> = (0..dim).map(|_| rng.random_range(-3.0..3.0)).collect();
                let t = rng.random_range(0.05..3.0);
                let x = prox(&kind, &v, t).unwrap();
                let best = prox_objective(&kind, &x, &v, t);
                for _ in 0..2000 {
                    let radius = 0.1 * rng.random::<f64>();
                    let y: Vec<f64> = x.iter().map(|xi| xi + radius * rng.random_range(-1.0..1.0)).collect();
                    assert!(best <= prox_objective(&kind, &y, &v, t) + 1e-12, "{kind:?}");
                }
            }
        }
    }
}
