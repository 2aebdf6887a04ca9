//! Limited-memory BFGS with a strong-Wolfe line search.

use std::collections::VecDeque;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LbfgsOptions {
    pub memory: usize,
    /// Sufficient-decrease constant.
    pub c1: f64,
    /// Curvature constant.
    pub c2: f64,
    /// Stop once `max |grad_i| <= grad_tol`.
    pub grad_tol: f64,
    pub max_iter: usize,
    pub max_search_evals: usize,
}

impl Default for LbfgsOptions {
    fn default() -> Self {
        LbfgsOptions {
            memory: 10,
            c1: 1e-4,
            c2: 0.9,
            grad_tol: 1e-13,
            max_iter: 5000,
            max_search_evals: 40,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LbfgsResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub grad_inf: f64,
    pub iterations: usize,
    pub evaluations: usize,
    /// Gradient tolerance met (as opposed to hitting the iteration cap or a
    /// line search that could no longer decrease `f`).
    pub converged: bool,
    /// Objective value at every accepted iterate, starting with `x0`.
    pub history: Vec<f64>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

struct Point {
    a: f64,
    f: f64,
    g: Vec<f64>,
    slope: f64,
}

struct Search<'a, F> {
    obj: &'a mut F,
    x: &'a [f64],
    p: &'a [f64],
    evals: usize,
}

impl<F: FnMut(&[f64]) -> (f64, Vec<f64>)> Search<'_, F> {
    fn at(&mut self, a: f64) -> Point {
        self.evals += 1;
        let xa: Vec<f64> = self.x.iter().zip(self.p).map(|(x, p)| x + a * p).collect();
        let (f, g) = (self.obj)(&xa);
        let slope = dot(&g, self.p);
        Point { a, f, g, slope }
    }
}

/// Minimizer of the cubic through `(a, fa, da)` and `(b, fb, db)`, or `None`.
fn cubic_min(a: &Point, b: &Point) -> Option<f64> {
    let d1 = a.slope + b.slope - 3.0 * (a.f - b.f) / (a.a - b.a);
    let disc = d1 * d1 - a.slope * b.slope;
    if disc < 0.0 {
        return None;
    }
    let d2 = (b.a - a.a).signum() * disc.sqrt();
    let t = b.a - (b.a - a.a) * (b.slope + d2 - d1) / (b.slope - a.slope + 2.0 * d2);
    t.is_finite().then_some(t)
}

fn zoom<F: FnMut(&[f64]) -> (f64, Vec<f64>)>(
    s: &mut Search<'_, F>,
    f0: f64,
    d0: f64,
    mut lo: Point,
    mut hi: Point,
    o: &LbfgsOptions,
) -> Option<Point> {
    while s.evals < o.max_search_evals {
        let (left, right) = if lo.a < hi.a {
            (lo.a, hi.a)
        } else {
            (hi.a, lo.a)
        };
        let width = right - left;
        if width <= f64::EPSILON * right.abs().max(1e-300) {
            break;
        }
        let guess = cubic_min(&lo, &hi).unwrap_or(0.5 * (left + right));
        let a = guess.clamp(left + 0.1 * width, right - 0.1 * width);
        let t = s.at(a);
        if t.f > f0 + o.c1 * a * d0 || t.f >= lo.f {
            hi = t;
        } else {
            if t.slope.abs() <= -o.c2 * d0 {
                return Some(t);
            }
            if t.slope * (hi.a - lo.a) >= 0.0 {
                hi = lo;
            }
            lo = t;
        }
    }
    (lo.a > 0.0 && lo.f < f0).then_some(lo)
}

fn line_search<F: FnMut(&[f64]) -> (f64, Vec<f64>)>(
    s: &mut Search<'_, F>,
    f0: f64,
    d0: f64,
    a1: f64,
    o: &LbfgsOptions,
) -> Option<Point> {
    let mut prev = Point {
        a: 0.0,
        f: f0,
        g: Vec::new(),
        slope: d0,
    };
    let mut a = a1;
    let mut first = true;
    while s.evals < o.max_search_evals {
        let t = s.at(a);
        if !t.f.is_finite() {
            a *= 0.5;
            continue;
        }
        if t.f > f0 + o.c1 * a * d0 || (!first && t.f >= prev.f) {
            return zoom(s, f0, d0, prev, t, o);
        }
        if t.slope.abs() <= -o.c2 * d0 {
            return Some(t);
        }
        if t.slope >= 0.0 {
            return zoom(s, f0, d0, t, prev, o);
        }
        first = false;
        prev = t;
        a *= 2.0;
    }
    (prev.a > 0.0 && prev.f < f0).then_some(prev)
}

/// Minimizes `obj`, which returns the value and gradient at a point.
pub fn minimize<F>(mut obj: F, x0: &[f64], o: &LbfgsOptions) -> LbfgsResult
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    let mut x = x0.to_vec();
    let (mut f, mut g) = obj(&x);
    let mut evaluations = 1;
    let mut history = vec![f];
    let mut pairs: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(o.memory);
    let mut iterations = 0;
    while inf_norm(&g) > o.grad_tol && iterations < o.max_iter {
        // two-loop recursion for p = -H g
        let mut q = g.clone();
        let mut alphas = Vec::with_capacity(pairs.len());
        for (sv, yv, rho) in pairs.iter().rev() {
            let a = rho * dot(sv, &q);
            q.iter_mut().zip(yv).for_each(|(qi, yi)| *qi -= a * yi);
            alphas.push(a);
        }
        let gamma = pairs
            .back()
            .map(|(sv, yv, _)| dot(sv, yv) / dot(yv, yv))
            .unwrap_or(1.0 / inf_norm(&g).max(1.0));
        q.iter_mut().for_each(|qi| *qi *= gamma);
        for ((sv, yv, rho), a) in pairs.iter().zip(alphas.iter().rev()) {
            let b = rho * dot(yv, &q);
            q.iter_mut()
                .zip(sv)
                .for_each(|(qi, si)| *qi += (a - b) * si);
        }
        let mut p: Vec<f64> = q.iter().map(|v| -v).collect();
        let mut d0 = dot(&g, &p);
        if d0 >= 0.0 {
            pairs.clear();
            p = g.iter().map(|v| -v).collect();
            d0 = -dot(&g, &g);
        }
        let found = {
            let mut s = Search {
                obj: &mut obj,
                x: &x,
                p: &p,
                evals: 0,
            };
            let r = line_search(&mut s, f, d0, 1.0, o);
            evaluations += s.evals;
            r
        };
        let Some(t) = found else { break };
        let step: Vec<f64> = p.iter().map(|v| t.a * v).collect();
        let y: Vec<f64> = t.g.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&step, &y);
        x.iter_mut().zip(&step).for_each(|(xi, si)| *xi += si);
        f = t.f;
        g = t.g;
        history.push(f);
        iterations += 1;
        if sy > f64::EPSILON * dot(&y, &y) {
            if pairs.len() == o.memory {
                pairs.pop_front();
            }
            pairs.push_back((step, y, 1.0 / sy));
        }
    }
    let grad_inf = inf_norm(&g);
    LbfgsResult {
        x,
        f,
        grad_inf,
        iterations,
        evaluations,
        converged: grad_inf <= o.grad_tol,
        history,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rosenbrock(x: &[f64]) -> (f64, Vec<f64>) {
        let (a, b) = (x[0], x[1]);
        let f = (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2);
        let g = vec![
            -2.0 * (1.0 - a) - 400.0 * a * (b - a * a),
            200.0 * (b - a * a),
        ];
        (f, g)
    }

    #[test]
    fn solves_rosenbrock() {
        let o = LbfgsOptions {
            grad_tol: 1e-10,
            ..Default::default()
        };
        let r = minimize(rosenbrock, &[-1.2, 1.0], &o);
        assert!(r.converged);
        assert!((r.x[0] - 1.0).abs() < 1e-8 && (r.x[1] - 1.0).abs() < 1e-8);
        assert!(r.history.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn quadratic_in_many_dimensions() {
        let n = 40;
        let obj = |x: &[f64]| {
            let f = x
                .iter()
                .enumerate()
                .map(|(i, v)| (i + 1) as f64 * (v - 1.0).powi(2))
                .sum();
            let g = x
                .iter()
                .enumerate()
                .map(|(i, v)| 2.0 * (i + 1) as f64 * (v - 1.0))
                .collect();
            (f, g)
        };
        let r = minimize(obj, &vec![0.0; n], &LbfgsOptions::default());
        assert!(r.converged, "{}", r.grad_inf);
        assert!(r.x.iter().all(|v| (v - 1.0).abs() < 1e-13));
    }

    #[test]
    fn starting_at_the_minimum_takes_no_steps() {
        let r = minimize(rosenbrock, &[1.0, 1.0], &LbfgsOptions::default());
        assert_eq!(r.iterations, 0);
        assert!(r.converged);
    }
}
