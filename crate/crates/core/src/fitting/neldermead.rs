//! Nelder-Mead downhill simplex minimization.
//!
//! Entirely deterministic: the simplex is seeded from the start point plus
//! per-dimension steps, and ties are broken by vertex order. `restarts`
//! re-seeds a fresh, shrunken simplex at the current best point, which
//! polishes convergence on nearly exact problems.

#[derive(Debug, Clone)]
pub struct NmOptions {
    pub max_iter: usize,
    /// Stop when the spread of simplex function values drops below
    /// `tol_abs + tol_rel * |f_best|`.
    pub tol_rel: f64,
    pub tol_abs: f64,
    /// Number of re-seeded polish rounds after the first convergence.
    pub restarts: usize,
}

impl Default for NmOptions {
    fn default() -> Self {
        NmOptions {
            max_iter: 4000,
            tol_rel: 1e-12,
            tol_abs: 1e-12,
            restarts: 2,
        }
    }
}

#[derive(Debug, Clone)]
pub struct NmResult {
    pub x: Vec<f64>,
    pub fval: f64,
    pub evaluations: usize,
    pub converged: bool,
}

struct Simplex {
    points: Vec<Vec<f64>>,
    values: Vec<f64>,
}

fn sort_simplex(s: &mut Simplex) {
    let mut order: Vec<usize> = (0..s.values.len()).collect();
    order.sort_by(|&i, &j| {
        s.values[i]
            .partial_cmp(&s.values[j])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    s.points = order.iter().map(|&i| s.points[i].clone()).collect();
    s.values = order.iter().map(|&i| s.values[i]).collect();
}

fn run_once<F: FnMut(&[f64]) -> f64>(
    f: &mut F,
    x0: &[f64],
    steps: &[f64],
    opts: &NmOptions,
    evals: &mut usize,
) -> (Vec<f64>, f64, bool) {
    let n = x0.len();
    let mut eval = |x: &[f64], evals: &mut usize| -> f64 {
        *evals += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let mut s = Simplex {
        points: Vec::with_capacity(n + 1),
        values: Vec::with_capacity(n + 1),
    };
    s.points.push(x0.to_vec());
    s.values.push(eval(x0, evals));
    for i in 0..n {
        let mut p = x0.to_vec();
        let step = if steps[i] != 0.0 { steps[i] } else { 1e-3 };
        p[i] += step;
        s.values.push(eval(&p, evals));
        s.points.push(p);
    }
    sort_simplex(&mut s);

    let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);
    let mut converged = false;
    for _ in 0..opts.max_iter {
        let spread = s.values[n] - s.values[0];
        if spread <= opts.tol_abs + opts.tol_rel * s.values[0].abs() {
            converged = true;
            break;
        }
        // Centroid of all but the worst vertex.
        let mut centroid = vec![0.0; n];
        for p in &s.points[..n] {
            for (c, v) in centroid.iter_mut().zip(p) {
                *c += v;
            }
        }
        for c in centroid.iter_mut() {
            *c /= n as f64;
        }
        let worst = s.points[n].clone();
        let reflect: Vec<f64> = centroid
            .iter()
            .zip(&worst)
            .map(|(c, w)| c + alpha * (c - w))
            .collect();
        let f_r = eval(&reflect, evals);
        if f_r < s.values[0] {
            let expand: Vec<f64> = centroid
                .iter()
                .zip(&worst)
                .map(|(c, w)| c + gamma * (c - w))
                .collect();
            let f_e = eval(&expand, evals);
            if f_e < f_r {
                s.points[n] = expand;
                s.values[n] = f_e;
            } else {
                s.points[n] = reflect;
                s.values[n] = f_r;
            }
        } else if f_r < s.values[n - 1] {
            s.points[n] = reflect;
            s.values[n] = f_r;
        } else {
            let contract: Vec<f64> = if f_r < s.values[n] {
                centroid
                    .iter()
                    .zip(&reflect)
                    .map(|(c, r)| c + rho * (r - c))
                    .collect()
            } else {
                centroid
                    .iter()
                    .zip(&worst)
                    .map(|(c, w)| c + rho * (w - c))
                    .collect()
            };
            let f_c = eval(&contract, evals);
            if f_c < s.values[n].min(f_r) {
                s.points[n] = contract;
                s.values[n] = f_c;
            } else {
                // Shrink toward the best vertex.
                let best = s.points[0].clone();
                for i in 1..=n {
                    let p: Vec<f64> = best
                        .iter()
                        .zip(&s.points[i])
                        .map(|(b, v)| b + sigma * (v - b))
                        .collect();
                    s.values[i] = eval(&p, evals);
                    s.points[i] = p;
                }
            }
        }
        sort_simplex(&mut s);
    }
    (s.points[0].clone(), s.values[0], converged)
}

/// Minimize `f` starting from `x0` with initial per-dimension simplex steps.
pub fn minimize<F: FnMut(&[f64]) -> f64>(
    mut f: F,
    x0: &[f64],
    steps: &[f64],
    opts: &NmOptions,
) -> NmResult {
    assert_eq!(x0.len(), steps.len(), "one step per dimension");
    let mut evals = 0usize;
    let (mut x, mut fval, mut converged) = run_once(&mut f, x0, steps, opts, &mut evals);
    for round in 0..opts.restarts {
        let shrink = 0.1f64.powi(round as i32 + 1);
        let small: Vec<f64> = steps.iter().map(|s| s * shrink).collect();
        let (x2, f2, c2) = run_once(&mut f, &x, &small, opts, &mut evals);
        if f2 < fval {
            x = x2;
            fval = f2;
        }
        converged = converged || c2;
    }
    NmResult {
        x,
        fval,
        evaluations: evals,
        converged,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_bowl_minimum_is_found() {
        let res = minimize(
            |x| (x[0] - 3.0).powi(2) + 2.0 * (x[1] + 1.0).powi(2),
            &[0.0, 0.0],
            &[0.5, 0.5],
            &NmOptions::default(),
        );
        assert!(res.converged);
        assert!((res.x[0] - 3.0).abs() < 1e-6, "x0 {}", res.x[0]);
        assert!((res.x[1] + 1.0).abs() < 1e-6, "x1 {}", res.x[1]);
    }

    #[test]
    fn rosenbrock_valley_is_followed() {
        let res = minimize(
            |x| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2),
            &[-1.2, 1.0],
            &[0.5, 0.5],
            &NmOptions {
                max_iter: 20000,
                ..NmOptions::default()
            },
        );
        assert!((res.x[0] - 1.0).abs() < 1e-5, "x0 {}", res.x[0]);
        assert!((res.x[1] - 1.0).abs() < 1e-5, "x1 {}", res.x[1]);
    }

    #[test]
    fn nan_objective_regions_are_avoided() {
        let res = minimize(
            |x| {
                if x[0] < 0.0 {
                    f64::NAN
                } else {
                    (x[0] - 2.0).powi(2)
                }
            },
            &[1.0],
            &[0.5],
            &NmOptions::default(),
        );
        assert!((res.x[0] - 2.0).abs() < 1e-6);
    }

    #[test]
    fn identical_calls_return_identical_results() {
        let run = || {
            minimize(
                |x| x[0].sin() * x[1].cos() + 0.1 * (x[0] * x[0] + x[1] * x[1]),
                &[2.0, 2.0],
                &[0.7, 0.7],
                &NmOptions::default(),
            )
        };
        let a = run();
        let b = run();
        assert_eq!(a.x, b.x);
        assert_eq!(a.fval, b.fval);
    }
}
