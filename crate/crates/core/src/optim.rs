//! Box-constrained maximization for low-dimensional likelihoods.
//!
//! A coarse grid picks the starting point, Nelder-Mead refines it, and a
//! few finite-difference Newton steps polish the result. Proposals outside
//! the box are projected back onto it, so the objective is never evaluated
//! outside.

#[derive(Debug, Clone)]
pub struct MaximizeOptions {
    /// Grid points per dimension for the seeding pass.
    pub grid_points: usize,
    /// Stop when the spread of simplex values falls below this.
    pub ftol: f64,
    /// ... and the simplex spans less than this in every coordinate.
    pub xtol: f64,
    pub max_iterations: usize,
    pub newton_steps: usize,
}

impl Default for MaximizeOptions {
    fn default() -> Self {
        Self { grid_points: 16, ftol: 1e-9, xtol: 1e-9, max_iterations: 5000, newton_steps: 8 }
    }
}

#[derive(Debug, Clone)]
pub struct Maximum {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub converged: bool,
    /// Per coordinate: `Some(false)` at the lower bound, `Some(true)` at the upper.
    pub at_bound: Vec<Option<bool>>,
    /// Best value found during grid seeding.
    pub grid_best: f64,
}

impl Maximum {
    pub fn boundary_hit(&self) -> bool {
        self.at_bound.iter().any(Option::is_some)
    }
}

struct Counted<F> {
    f: F,
    evals: usize,
}

impl<F: FnMut(&[f64]) -> f64> Counted<F> {
    fn call(&mut self, x: &[f64]) -> f64 {
        self.evals += 1;
        let v = (self.f)(x);
        if v.is_nan() {
            f64::NEG_INFINITY
        } else {
            v
        }
    }
}

fn project(x: &mut [f64], lo: &[f64], hi: &[f64]) {
    for ((v, &l), &h) in x.iter_mut().zip(lo).zip(hi) {
        *v = v.clamp(l, h);
    }
}

/// Maximizes `f` over the box `[lo, hi]`.
///
/// Grid ties resolve to the lexicographically smallest point.
pub fn maximize_in_box<F>(f: F, lo: &[f64], hi: &[f64], opts: &MaximizeOptions) -> Maximum
where
    F: FnMut(&[f64]) -> f64,
{
    let dim = lo.len();
    assert!(dim >= 1 && hi.len() == dim);
    assert!(lo.iter().zip(hi).all(|(l, h)| l < h), "empty box");
    let mut f = Counted { f, evals: 0 };

    // grid seeding, first coordinate slowest
    let g = opts.grid_points.max(2);
    let step: Vec<f64> = lo.iter().zip(hi).map(|(l, h)| (h - l) / (g - 1) as f64).collect();
    let mut best_x = lo.to_vec();
    let mut best_v = f64::NEG_INFINITY;
    let mut idx = vec![0usize; dim];
    let mut x = vec![0.0; dim];
    loop {
        for d in 0..dim {
            x[d] = if idx[d] == g - 1 { hi[d] } else { lo[d] + idx[d] as f64 * step[d] };
        }
        let v = f.call(&x);
        if v > best_v {
            best_v = v;
            best_x.copy_from_slice(&x);
        }
        let mut d = dim;
        loop {
            if d == 0 {
                break;
            }
            d -= 1;
            idx[d] += 1;
            if idx[d] < g {
                break;
            }
            idx[d] = 0;
            if d == 0 {
                d = usize::MAX;
                break;
            }
        }
        if d == usize::MAX {
            break;
        }
    }
    let grid_best = best_v;

    let scale: Vec<f64> = step.iter().map(|s| 0.5 * s).collect();
    let (mut x, mut v, it1, conv1) = nelder_mead(&mut f, best_x, best_v, &scale, lo, hi, opts);
    // a restart guards against a collapsed simplex
    let restart_scale: Vec<f64> = lo.iter().zip(hi).map(|(l, h)| 1e-3 * (h - l)).collect();
    let (x2, v2, it2, conv2) = nelder_mead(&mut f, x.clone(), v, &restart_scale, lo, hi, opts);
    if v2 >= v {
        x = x2;
        v = v2;
    }
    let converged = (conv1 || conv2) && v.is_finite();

    if v.is_finite() {
        newton_polish(&mut f, &mut x, &mut v, lo, hi, opts.newton_steps);
    }

    // snap coordinates that sit next to a face onto it when that is no worse
    for d in 0..dim {
        let width = hi[d] - lo[d];
        for bound in [lo[d], hi[d]] {
            if (x[d] - bound).abs() <= 1e-2 * width && x[d] != bound {
                let mut y = x.clone();
                y[d] = bound;
                let vy = f.call(&y);
                if vy >= v {
                    x = y;
                    v = vy;
                }
            }
        }
    }

    let at_bound = (0..dim)
        .map(|d| {
            let tol = 1e-7 * (hi[d] - lo[d]);
            if x[d] - lo[d] <= tol {
                Some(false)
            } else if hi[d] - x[d] <= tol {
                Some(true)
            } else {
                None
            }
        })
        .collect();

    Maximum { x, value: v, iterations: it1 + it2, evaluations: f.evals, converged, at_bound, grid_best }
}

#[allow(clippy::too_many_arguments)]
fn nelder_mead<F: FnMut(&[f64]) -> f64>(
    f: &mut Counted<F>,
    x0: Vec<f64>,
    v0: f64,
    scale: &[f64],
    lo: &[f64],
    hi: &[f64],
    opts: &MaximizeOptions,
) -> (Vec<f64>, f64, usize, bool) {
    const REFLECT: f64 = 1.0;
    const EXPAND: f64 = 2.0;
    const CONTRACT: f64 = 0.5;
    const SHRINK: f64 = 0.5;

    let dim = x0.len();
    // vertices store (point, value); we maximize, so sort descending
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(dim + 1);
    simplex.push((x0.clone(), v0));
    for d in 0..dim {
        let mut y = x0.clone();
        y[d] += scale[d];
        if y[d] > hi[d] {
            y[d] = x0[d] - scale[d];
        }
        project(&mut y, lo, hi);
        let vy = f.call(&y);
        simplex.push((y, vy));
    }

    let sort = |s: &mut Vec<(Vec<f64>, f64)>| {
        s.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(std::cmp::Ordering::Equal));
    };

    let mut converged = false;
    let mut iterations = 0;
    while iterations < opts.max_iterations {
        sort(&mut simplex);
        let best = simplex[0].1;
        let worst = simplex[dim].1;
        let fspread = if best.is_finite() && worst.is_finite() { best - worst } else { f64::INFINITY };
        let xspread = (0..dim)
            .map(|d| {
                let (mn, mx) =
                    simplex.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.0[d]), b.max(p.0[d])));
                mx - mn
            })
            .fold(0.0, f64::max);
        if fspread <= opts.ftol && xspread <= opts.xtol {
            converged = true;
            break;
        }
        if xspread == 0.0 {
            // cannot make progress
            converged = fspread <= opts.ftol;
            break;
        }
        iterations += 1;

        let mut centroid = vec![0.0; dim];
        for (p, _) in &simplex[..dim] {
            for d in 0..dim {
                centroid[d] += p[d] / dim as f64;
            }
        }
        let along = |t: f64, worst: &[f64]| -> Vec<f64> {
            let mut y: Vec<f64> = (0..dim).map(|d| centroid[d] + t * (worst[d] - centroid[d])).collect();
            project(&mut y, lo, hi);
            y
        };
        let worst_pt = simplex[dim].0.clone();
        let second_worst = simplex[dim - 1].1;

        let xr = along(-REFLECT, &worst_pt);
        let vr = f.call(&xr);
        if vr > best {
            let xe = along(-EXPAND, &worst_pt);
            let ve = f.call(&xe);
            simplex[dim] = if ve > vr { (xe, ve) } else { (xr, vr) };
            continue;
        }
        if vr > second_worst {
            simplex[dim] = (xr, vr);
            continue;
        }
        if vr > worst {
            // outside contraction
            let xc = along(-CONTRACT, &worst_pt);
            let vc = f.call(&xc);
            if vc >= vr {
                simplex[dim] = (xc, vc);
                continue;
            }
        } else {
            let xc = along(CONTRACT, &worst_pt);
            let vc = f.call(&xc);
            if vc > worst {
                simplex[dim] = (xc, vc);
                continue;
            }
        }
        // shrink toward the best vertex
        let best_pt = simplex[0].0.clone();
        for vtx in simplex.iter_mut().skip(1) {
            let mut y: Vec<f64> = (0..dim).map(|d| best_pt[d] + SHRINK * (vtx.0[d] - best_pt[d])).collect();
            project(&mut y, lo, hi);
            let vy = f.call(&y);
            *vtx = (y, vy);
        }
    }
    sort(&mut simplex);
    let (x, v) = simplex.swap_remove(0);
    (x, v, iterations, converged)
}

/// Newton steps from central-difference derivatives, accepted only when they improve `f`.
fn newton_polish<F: FnMut(&[f64]) -> f64>(
    f: &mut Counted<F>,
    x: &mut Vec<f64>,
    v: &mut f64,
    lo: &[f64],
    hi: &[f64],
    steps: usize,
) {
    let dim = x.len();
    if dim > 2 {
        return;
    }
    for _ in 0..steps {
        let h: Vec<f64> = (0..dim).map(|d| 1e-4 * (hi[d] - lo[d]).min(1.0)).collect();
        // skip coordinates whose stencil leaves the box
        if (0..dim).any(|d| x[d] - h[d] < lo[d] || x[d] + h[d] > hi[d]) {
            return;
        }
        let (g, hess) = fd_gradient_hessian(f, x, *v, &h);
        let step = match dim {
            1 => {
                if hess[0][0] >= 0.0 {
                    return;
                }
                vec![-g[0] / hess[0][0]]
            }
            _ => {
                let (a, b, c) = (hess[0][0], hess[0][1], hess[1][1]);
                let det = a * c - b * b;
                if !(a < 0.0 && det > 0.0) {
                    return;
                }
                vec![-(c * g[0] - b * g[1]) / det, -(a * g[1] - b * g[0]) / det]
            }
        };
        let mut y: Vec<f64> = x.iter().zip(&step).map(|(a, s)| a + s).collect();
        project(&mut y, lo, hi);
        let vy = f.call(&y);
        if vy > *v {
            let moved = y.iter().zip(x.iter()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            *x = y;
            *v = vy;
            if moved < 1e-12 {
                return;
            }
        } else {
            return;
        }
    }
}

fn fd_gradient_hessian<F: FnMut(&[f64]) -> f64>(
    f: &mut Counted<F>,
    x: &[f64],
    fx: f64,
    h: &[f64],
) -> (Vec<f64>, Vec<Vec<f64>>) {
    let dim = x.len();
    let mut g = vec![0.0; dim];
    let mut hess = vec![vec![0.0; dim]; dim];
    let mut y = x.to_vec();
    for i in 0..dim {
        y[i] = x[i] + h[i];
        let fp = f.call(&y);
        y[i] = x[i] - h[i];
        let fm = f.call(&y);
        y[i] = x[i];
        g[i] = (fp - fm) / (2.0 * h[i]);
        hess[i][i] = (fp - 2.0 * fx + fm) / (h[i] * h[i]);
    }
    for i in 0..dim {
        for j in (i + 1)..dim {
            let mut eval = |si: f64, sj: f64| {
                let mut y = x.to_vec();
                y[i] += si * h[i];
                y[j] += sj * h[j];
                f.call(&y)
            };
            let v = (eval(1.0, 1.0) - eval(1.0, -1.0) - eval(-1.0, 1.0) + eval(-1.0, -1.0)) / (4.0 * h[i] * h[j]);
            hess[i][j] = v;
            hess[j][i] = v;
        }
    }
    (g, hess)
}
