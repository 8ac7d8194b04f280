//! Derivative-free Nelder-Mead simplex minimizer for two-parameter objectives.

/// Outcome of a simplex search.
#[derive(Debug, Clone, Copy)]
pub struct MinResult {
    pub x: [f64; 2],
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Nelder-Mead with the standard reflection/expansion/contraction/shrink
/// coefficients. Convergence is declared when the simplex diameter falls
/// below `xtol`.
#[derive(Debug, Clone, Copy)]
pub struct NelderMead {
    pub xtol: f64,
    pub max_iter: usize,
    pub init_step: f64,
}

impl Default for NelderMead {
    fn default() -> Self {
        Self {
            xtol: 1e-8,
            max_iter: 1000,
            init_step: 0.25,
        }
    }
}

impl NelderMead {
    pub fn minimize<F>(&self, mut f: F, x0: [f64; 2]) -> MinResult
    where
        F: FnMut(&[f64; 2]) -> f64,
    {
        // NaN objectives are treated as worst so ordering stays total.
        let mut eval = |x: &[f64; 2]| -> f64 {
            let v = f(x);
            if v.is_nan() {
                f64::INFINITY
            } else {
                v
            }
        };

        let mut simplex: [([f64; 2], f64); 3] = [
            (x0, 0.0),
            ([x0[0] + self.init_step, x0[1]], 0.0),
            ([x0[0], x0[1] + self.init_step], 0.0),
        ];
        for v in simplex.iter_mut() {
            v.1 = eval(&v.0);
        }

        let mut iterations = 0;
        let mut converged = false;
        while iterations < self.max_iter {
            simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
            if diameter(&simplex) < self.xtol {
                converged = true;
                break;
            }
            iterations += 1;

            let best = simplex[0];
            let worst = simplex[2];
            let centroid = [
                0.5 * (simplex[0].0[0] + simplex[1].0[0]),
                0.5 * (simplex[0].0[1] + simplex[1].0[1]),
            ];

            let reflect = [
                centroid[0] + (centroid[0] - worst.0[0]),
                centroid[1] + (centroid[1] - worst.0[1]),
            ];
            let f_reflect = eval(&reflect);

            if f_reflect < best.1 {
                let expand = [
                    centroid[0] + 2.0 * (centroid[0] - worst.0[0]),
                    centroid[1] + 2.0 * (centroid[1] - worst.0[1]),
                ];
                let f_expand = eval(&expand);
                simplex[2] = if f_expand < f_reflect {
                    (expand, f_expand)
                } else {
                    (reflect, f_reflect)
                };
                continue;
            }
            if f_reflect < simplex[1].1 {
                simplex[2] = (reflect, f_reflect);
                continue;
            }

            let contract = [
                centroid[0] + 0.5 * (worst.0[0] - centroid[0]),
                centroid[1] + 0.5 * (worst.0[1] - centroid[1]),
            ];
            let f_contract = eval(&contract);
            if f_contract < worst.1 {
                simplex[2] = (contract, f_contract);
                continue;
            }

            // Shrink toward the best vertex.
            for v in simplex.iter_mut().skip(1) {
                v.0 = [
                    best.0[0] + 0.5 * (v.0[0] - best.0[0]),
                    best.0[1] + 0.5 * (v.0[1] - best.0[1]),
                ];
                v.1 = eval(&v.0);
            }
        }

        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        MinResult {
            x: simplex[0].0,
            value: simplex[0].1,
            iterations,
            converged,
        }
    }
}

fn diameter(simplex: &[([f64; 2], f64); 3]) -> f64 {
    let dist = |p: &[f64; 2], q: &[f64; 2]| ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt();
    dist(&simplex[0].0, &simplex[1].0)
        .max(dist(&simplex[0].0, &simplex[2].0))
        .max(dist(&simplex[1].0, &simplex[2].0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimizes_quadratic_bowl() {
        let nm = NelderMead::default();
        let r = nm.minimize(|x| (x[0] - 1.5).powi(2) + 3.0 * (x[1] + 0.5).powi(2), [0.0, 0.0]);
        assert!(r.converged);
        assert!((r.x[0] - 1.5).abs() < 1e-6);
        assert!((r.x[1] + 0.5).abs() < 1e-6);
    }

    #[test]
    fn minimizes_rosenbrock() {
        let nm = NelderMead {
            max_iter: 5000,
            ..NelderMead::default()
        };
        let r = nm.minimize(
            |x| (1.0 - x[0]).powi(2) + 100.0 * (x[1] - x[0] * x[0]).powi(2),
            [-1.2, 1.0],
        );
        assert!(r.converged);
        assert!((r.x[0] - 1.0).abs() < 1e-5);
        assert!((r.x[1] - 1.0).abs() < 1e-5);
    }

    #[test]
    fn survives_infinite_regions() {
        let nm = NelderMead::default();
        let r = nm.minimize(
            |x| {
                if x[0] < 0.0 {
                    f64::INFINITY
                } else {
                    (x[0] - 2.0).powi(2) + x[1].powi(2)
                }
            },
            [1.0, 1.0],
        );
        assert!(r.converged);
        assert!((r.x[0] - 2.0).abs() < 1e-6);
    }
}
