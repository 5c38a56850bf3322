//! Compact Nelder-Mead simplex search, used by the continuous polish step.
//!
//! Maximization interface over a boxed objective; invalid points should
//! return `f64::NEG_INFINITY` from the objective itself.

pub struct SimplexOptions {
    pub max_iters: usize,
    pub f_tol: f64,
    pub x_tol: f64,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        SimplexOptions { max_iters: 400, f_tol: 1e-12, x_tol: 1e-10 }
    }
}

/// Maximize `f` starting from `x0`, with an initial simplex of edge `scale`.
/// Returns the best point found and its objective value.
pub fn maximize<F: Fn(&[f64]) -> f64>(
    f: &F,
    x0: &[f64],
    scale: f64,
    opts: &SimplexOptions,
) -> (Vec<f64>, f64) {
    let dim = x0.len();
    if dim == 0 {
        return (Vec::new(), f(x0));
    }
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(dim + 1);
    simplex.push((x0.to_vec(), f(x0)));
    for i in 0..dim {
        let mut x = x0.to_vec();
        x[i] += scale;
        let fx = f(&x);
        simplex.push((x, fx));
    }

    const ALPHA: f64 = 1.0; // reflection
    const GAMMA: f64 = 2.0; // expansion
    const RHO: f64 = 0.5; // contraction
    const SIGMA: f64 = 0.5; // shrink

    for _ in 0..opts.max_iters {
        // descending by objective value (best first)
        simplex.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());
        let best = simplex[0].1;
        let worst = simplex[dim].1;
        let spread = (best - worst).abs();
        let x_spread = (0..dim)
            .map(|i| (simplex[0].0[i] - simplex[dim].0[i]).abs())
            .fold(0.0, f64::max);
        if spread < opts.f_tol && x_spread < opts.x_tol {
            break;
        }

        let centroid: Vec<f64> = (0..dim)
            .map(|i| simplex[..dim].iter().map(|(x, _)| x[i]).sum::<f64>() / dim as f64)
            .collect();
        let blend = |coef: f64| -> Vec<f64> {
            (0..dim)
                .map(|i| centroid[i] + coef * (centroid[i] - simplex[dim].0[i]))
                .collect()
        };

        let reflected = blend(ALPHA);
        let fr = f(&reflected);
        if fr > simplex[0].1 {
            let expanded = blend(GAMMA);
            let fe = f(&expanded);
            simplex[dim] = if fe > fr { (expanded, fe) } else { (reflected, fr) };
            continue;
        }
        if fr > simplex[dim - 1].1 {
            simplex[dim] = (reflected, fr);
            continue;
        }
        let contracted = blend(-RHO);
        let fc = f(&contracted);
        if fc > simplex[dim].1 {
            simplex[dim] = (contracted, fc);
            continue;
        }
        // shrink toward the best vertex
        let anchor = simplex[0].0.clone();
        for v in simplex.iter_mut().skip(1) {
            for (x, &a) in v.0.iter_mut().zip(&anchor) {
                *x = a + SIGMA * (*x - a);
            }
            v.1 = f(&v.0);
        }
    }

    simplex.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());
    simplex.swap_remove(0)
}
