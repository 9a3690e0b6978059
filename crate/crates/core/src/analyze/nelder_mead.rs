//! Bounded Nelder-Mead. The simplex lives in unconstrained coordinates and
//! every candidate is folded back into the box by reflection at the bounds
//! before evaluation, so the objective only ever sees feasible points.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    pub lower: f64,
    pub upper: f64,
}

impl Bounds {
    pub fn new(lower: f64, upper: f64) -> Self {
        Self { lower, upper }
    }

    /// Mirror-folds `x` into `[lower, upper]`.
    pub fn reflect(&self, x: f64) -> f64 {
        let (lo, hi) = (self.lower, self.upper);
        if !x.is_finite() {
            return if x > 0.0 && hi.is_finite() { hi } else { lo };
        }
        if !hi.is_finite() {
            return if x < lo { 2.0 * lo - x } else { x };
        }
        let w = hi - lo;
        if w <= 0.0 {
            return lo;
        }
        let y = (x - lo).rem_euclid(2.0 * w);
        let y = if y > w { 2.0 * w - y } else { y };
        lo + y
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NelderMeadOptions {
    pub max_evals: usize,
    /// Converged when the spread of simplex values is below
    /// `ftol * (1 + |best|)` and the simplex diameter below `xtol * (1 + |x|)`.
    pub ftol: f64,
    pub xtol: f64,
    /// Fresh simplexes built around the best point after convergence.
    pub restarts: usize,
    /// Seeds the tie-breaking order among vertices with equal values.
    pub seed: u64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self {
            max_evals: 2000,
            ftol: 1e-14,
            xtol: 1e-10,
            restarts: 2,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Optimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub evals: usize,
    pub converged: bool,
    /// Best value seen after each evaluation.
    pub history: Vec<f64>,
}

struct Counter<'a, F> {
    f: F,
    bounds: &'a [Bounds],
    evals: usize,
    best: (f64, Vec<f64>),
    history: Vec<f64>,
}

impl<F: FnMut(&[f64]) -> f64> Counter<'_, F> {
    fn eval(&mut self, y: &[f64]) -> f64 {
        let x: Vec<f64> = y
            .iter()
            .zip(self.bounds)
            .map(|(v, b)| b.reflect(*v))
            .collect();
        let mut v = (self.f)(&x);
        if v.is_nan() {
            v = f64::INFINITY;
        }
        self.evals += 1;
        if v < self.best.0 || self.history.is_empty() {
            self.best = (v, x);
        }
        self.history.push(self.best.0);
        v
    }
}

struct Vertex {
    y: Vec<f64>,
    v: f64,
    tie: u64,
}

fn initial_step(x: f64, b: &Bounds) -> f64 {
    let s = if x != 0.0 { 0.1 * x.abs() } else { 0.00025 };
    if b.upper.is_finite() && b.upper > b.lower {
        s.min(0.5 * (b.upper - b.lower))
    } else {
        s
    }
}

/// Minimizes `f` over the box `bounds` starting from `x0`.
pub fn minimize<F>(f: F, x0: &[f64], bounds: &[Bounds], opts: &NelderMeadOptions) -> Optimum
where
    F: FnMut(&[f64]) -> f64,
{
    assert_eq!(x0.len(), bounds.len());
    let n = x0.len();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let start: Vec<f64> = x0.iter().zip(bounds).map(|(v, b)| b.reflect(*v)).collect();
    let mut c = Counter {
        f,
        bounds,
        evals: 0,
        best: (f64::INFINITY, start.clone()),
        history: Vec::new(),
    };
    let v0 = c.eval(&start);
    if n == 0 {
        return Optimum {
            x: start,
            value: v0,
            evals: c.evals,
            converged: true,
            history: c.history,
        };
    }
    // Dimension-adaptive coefficients.
    let nf = n as f64;
    let (alpha, gamma, rho, sigma) = if n > 2 {
        (1.0, 1.0 + 2.0 / nf, 0.75 - 1.0 / (2.0 * nf), 1.0 - 1.0 / nf)
    } else {
        (1.0, 2.0, 0.5, 0.5)
    };

    let mut converged = false;
    let mut center = start;
    let mut center_v = v0;
    for round in 0..=opts.restarts {
        let mut simplex = vec![Vertex {
            y: center.clone(),
            v: center_v,
            tie: rng.random(),
        }];
        for i in 0..n {
            if c.evals >= opts.max_evals {
                break;
            }
            let mut y = center.clone();
            y[i] += initial_step(center[i], &bounds[i]);
            let v = c.eval(&y);
            simplex.push(Vertex {
                y,
                v,
                tie: rng.random(),
            });
        }
        if simplex.len() < n + 1 {
            break;
        }
        converged = false;
        while c.evals < opts.max_evals {
            simplex.sort_by(|a, b| a.v.total_cmp(&b.v).then(a.tie.cmp(&b.tie)));
            let best = simplex[0].v;
            let worst = simplex[n].v;
            let spread = worst - best;
            let diam = simplex[1..]
                .iter()
                .flat_map(|s| s.y.iter().zip(&simplex[0].y).map(|(a, b)| (a - b).abs()))
                .fold(0.0, f64::max);
            let scale = simplex[0].y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if (spread <= opts.ftol * (1.0 + best.abs())
                || !spread.is_finite() && best.is_infinite())
                && diam <= opts.xtol * (1.0 + scale)
            {
                converged = true;
                break;
            }
            let mut centroid = vec![0.0; n];
            for s in &simplex[..n] {
                for (c, y) in centroid.iter_mut().zip(&s.y) {
                    *c += y / nf;
                }
            }
            let along = |t: f64| -> Vec<f64> {
                centroid
                    .iter()
                    .zip(&simplex[n].y)
                    .map(|(c, w)| c + t * (c - w))
                    .collect()
            };
            let yr = along(alpha);
            let vr = c.eval(&yr);
            if vr < simplex[0].v {
                let ye = along(alpha * gamma);
                let ve = if c.evals < opts.max_evals {
                    c.eval(&ye)
                } else {
                    f64::INFINITY
                };
                let (y, v) = if ve < vr { (ye, ve) } else { (yr, vr) };
                simplex[n] = Vertex {
                    y,
                    v,
                    tie: rng.random(),
                };
                continue;
            }
            if vr < simplex[n - 1].v {
                simplex[n] = Vertex {
                    y: yr,
                    v: vr,
                    tie: rng.random(),
                };
                continue;
            }
            if c.evals >= opts.max_evals {
                break;
            }
            let (yc, vc) = if vr < simplex[n].v {
                let y = along(alpha * rho);
                let v = c.eval(&y);
                (y, v)
            } else {
                let y = along(-rho);
                let v = c.eval(&y);
                (y, v)
            };
            if vc < simplex[n].v.min(vr) {
                simplex[n] = Vertex {
                    y: yc,
                    v: vc,
                    tie: rng.random(),
                };
                continue;
            }
            let b = simplex[0].y.clone();
            for s in simplex[1..].iter_mut() {
                if c.evals >= opts.max_evals {
                    break;
                }
                for (y, b) in s.y.iter_mut().zip(&b) {
                    *y = b + sigma * (*y - b);
                }
                s.v = c.eval(&s.y);
            }
        }
        let improved = c.best.0 < center_v;
        center = c.best.1.clone();
        center_v = c.best.0;
        if !converged || (round > 0 && !improved) {
            break;
        }
    }
    Optimum {
        x: c.best.1,
        value: c.best.0,
        evals: c.evals,
        converged,
        history: c.history,
    }
}
