//! Bounded two-dimensional Nelder–Mead.
//!
//! Trial points are projected onto the box before evaluation, so the
//! objective is only ever called inside the bounds.

/// Closed box `[lower[i], upper[i]]` for each coordinate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    pub lower: [f64; 2],
    pub upper: [f64; 2],
}

impl Bounds {
    pub fn new(lower: [f64; 2], upper: [f64; 2]) -> Self {
        assert!(lower[0] <= upper[0] && lower[1] <= upper[1], "empty box");
        Self { lower, upper }
    }

    pub fn project(&self, p: [f64; 2]) -> [f64; 2] {
        [
            p[0].clamp(self.lower[0], self.upper[0]),
            p[1].clamp(self.lower[1], self.upper[1]),
        ]
    }

    /// True when `p` sits within `tol` of any face of the box.
    pub fn touches(&self, p: [f64; 2], tol: f64) -> bool {
        (0..2).any(|i| p[i] - self.lower[i] <= tol || self.upper[i] - p[i] <= tol)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplexOptions {
    /// Stop when every vertex is within this distance of the best one.
    pub diameter_tol: f64,
    pub max_evals: usize,
    /// Initial edge along each axis, relative to that coordinate.
    pub initial_step: f64,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self {
            diameter_tol: 1e-8,
            max_evals: 10_000,
            initial_step: 0.05,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Minimum {
    pub point: [f64; 2],
    pub value: f64,
    pub converged: bool,
    pub at_boundary: bool,
    pub evaluations: usize,
}

/// Minimizes `f` over the box with default options.
pub fn minimize_2d<F>(f: F, start: [f64; 2], bounds: &Bounds) -> Minimum
where
    F: FnMut([f64; 2]) -> f64,
{
    minimize_2d_with(f, start, bounds, &SimplexOptions::default())
}

pub fn minimize_2d_with<F>(
    mut f: F,
    start: [f64; 2],
    bounds: &Bounds,
    opts: &SimplexOptions,
) -> Minimum
where
    F: FnMut([f64; 2]) -> f64,
{
    let mut evals = 0usize;
    let mut eval = |p: [f64; 2]| {
        evals += 1;
        let v = f(p);
        (if v.is_nan() { f64::INFINITY } else { v }, evals)
    };

    // Projection can flatten the simplex against a face; a fresh simplex
    // around the best point lets the search leave it again.
    let mut best = descend(&mut eval, bounds.project(start), bounds, opts);
    for _ in 0..MAX_RESTARTS {
        if !best.converged || best.evaluations >= opts.max_evals {
            break;
        }
        let next = descend(&mut eval, best.point, bounds, opts);
        let improved = next.value < best.value;
        let moved = dist(next.point, best.point) >= opts.diameter_tol;
        if improved {
            best = next;
        } else {
            best.evaluations = next.evaluations;
            best.converged = next.converged;
        }
        if !improved || !moved {
            break;
        }
    }
    best.at_boundary = bounds.touches(best.point, 1e-7);
    best
}

const MAX_RESTARTS: usize = 8;

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

fn descend<E>(eval: &mut E, x0: [f64; 2], bounds: &Bounds, opts: &SimplexOptions) -> Minimum
where
    E: FnMut([f64; 2]) -> (f64, usize),
{
    let count = std::cell::Cell::new(0);
    let mut ev = |p: [f64; 2]| {
        let (v, c) = eval(p);
        count.set(c);
        v
    };
    let mut simplex: Vec<([f64; 2], f64)> = Vec::with_capacity(3);
    simplex.push((x0, ev(x0)));
    for i in 0..2 {
        let mut p = x0;
        let step = if x0[i] == 0.0 {
            2.5e-4
        } else {
            opts.initial_step * x0[i].abs()
        };
        p[i] += step;
        if p[i] > bounds.upper[i] {
            p[i] = x0[i] - step;
        }
        let p = bounds.project(p);
        simplex.push((p, ev(p)));
    }

    let mut converged = false;
    loop {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = simplex[0].0;
        let diameter = simplex[1..]
            .iter()
            .map(|(p, _)| dist(*p, best))
            .fold(0.0, f64::max);
        if diameter < opts.diameter_tol {
            converged = true;
            break;
        }
        if count.get() >= opts.max_evals {
            break;
        }

        let (worst, f_worst) = simplex[2];
        let f_second = simplex[1].1;
        let f_best = simplex[0].1;
        let centroid = [
            0.5 * (simplex[0].0[0] + simplex[1].0[0]),
            0.5 * (simplex[0].0[1] + simplex[1].0[1]),
        ];
        let along = |t: f64| {
            bounds.project([
                centroid[0] + t * (worst[0] - centroid[0]),
                centroid[1] + t * (worst[1] - centroid[1]),
            ])
        };

        let reflected = along(-1.0);
        let f_reflected = ev(reflected);
        if f_reflected < f_best {
            let expanded = along(-2.0);
            let f_expanded = ev(expanded);
            simplex[2] = if f_expanded < f_reflected {
                (expanded, f_expanded)
            } else {
                (reflected, f_reflected)
            };
            continue;
        }
        if f_reflected < f_second {
            simplex[2] = (reflected, f_reflected);
            continue;
        }
        let contracted = if f_reflected < f_worst {
            along(-0.5)
        } else {
            along(0.5)
        };
        let f_contracted = ev(contracted);
        if f_contracted < f_worst.min(f_reflected) {
            simplex[2] = (contracted, f_contracted);
            continue;
        }
        // shrink toward the best vertex
        for v in simplex.iter_mut().skip(1) {
            let p = bounds.project([
                best[0] + 0.5 * (v.0[0] - best[0]),
                best[1] + 0.5 * (v.0[1] - best[1]),
            ]);
            *v = (p, ev(p));
        }
    }

    let (point, value) = simplex[0];
    Minimum {
        point,
        value,
        converged,
        at_boundary: false,
        evaluations: count.get(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_bowl() {
        let b = Bounds::new([0.0, 0.0], [1.0, 1.0]);
        let m = minimize_2d(
            |p| (p[0] - 0.3).powi(2) + (p[1] - 0.7).powi(2),
            [0.1, 1.0],
            &b,
        );
        assert!(m.converged);
        assert!(!m.at_boundary);
        assert!(
            (m.point[0] - 0.3).abs() < 1e-6 && (m.point[1] - 0.7).abs() < 1e-6,
            "{m:?}"
        );
    }

    #[test]
    fn rosenbrock() {
        let b = Bounds::new([-2.0, -2.0], [2.0, 2.0]);
        let rosen = |p: [f64; 2]| 100.0 * (p[1] - p[0] * p[0]).powi(2) + (1.0 - p[0]).powi(2);
        let m = minimize_2d(rosen, [-1.2, 1.0], &b);
        assert!(m.converged, "{m:?}");
        assert!(
            (m.point[0] - 1.0).abs() < 1e-4 && (m.point[1] - 1.0).abs() < 1e-4,
            "{m:?}"
        );
    }

    #[test]
    fn boundary_minimum_is_flagged() {
        let b = Bounds::new([0.01, 0.01], [1.0, 50.0]);
        let m = minimize_2d(
            |p| (p[0] - 1.4).powi(2) + (p[1] - 2.0).powi(2),
            [0.1, 1.0],
            &b,
        );
        assert!(m.at_boundary);
        assert!((m.point[0] - 1.0).abs() < 1e-9);
        assert!((m.point[1] - 2.0).abs() < 1e-6);
    }

    #[test]
    fn budget_exhaustion_is_reported() {
        let b = Bounds::new([-2.0, -2.0], [2.0, 2.0]);
        let opts = SimplexOptions {
            max_evals: 20,
            ..SimplexOptions::default()
        };
        let m = minimize_2d_with(|p| p[0].powi(2) + p[1].powi(2), [1.5, 1.5], &b, &opts);
        assert!(!m.converged);
        assert!(m.evaluations >= 20);
        assert!(m.value < 4.5);
    }

    #[test]
    fn deterministic() {
        let b = Bounds::new([0.0, 0.0], [3.0, 3.0]);
        let f = |p: [f64; 2]| (p[0] - 1.0).powi(4) + (p[0] * p[1] - 2.0).powi(2);
        let a = minimize_2d(f, [0.5, 0.5], &b);
        let c = minimize_2d(f, [0.5, 0.5], &b);
        assert_eq!(a, c);
    }
}
