//! Downhill simplex (Nelder–Mead) minimization.

#[derive(Clone, Debug)]
pub struct NelderMead {
    /// Edge length of the initial simplex.
    pub step: f64,
    pub max_evals: usize,
    /// Stop when the spread of simplex values falls below this.
    pub ftol: f64,
    /// Stop when the simplex diameter falls below this.
    pub xtol: f64,
}

impl Default for NelderMead {
    fn default() -> Self {
        NelderMead {
            step: 0.1,
            max_evals: 400,
            ftol: 1e-10,
            xtol: 1e-8,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub evals: usize,
}

impl NelderMead {
    pub fn minimize<F: FnMut(&[f64]) -> f64>(&self, mut f: F, x0: &[f64]) -> Minimum {
        let n = x0.len();
        let mut evals = 0;
        let mut eval = |x: &[f64], evals: &mut usize| {
            *evals += 1;
            let v = f(x);
            if v.is_nan() {
                f64::INFINITY
            } else {
                v
            }
        };
        let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
        simplex.push(x0.to_vec());
        for i in 0..n {
            let mut p = x0.to_vec();
            p[i] += self.step;
            simplex.push(p);
        }
        let mut values: Vec<f64> = simplex.iter().map(|p| eval(p, &mut evals)).collect();
        let mut centroid = vec![0.0; n];
        let mut trial = vec![0.0; n];
        let mut trial2 = vec![0.0; n];

        while evals < self.max_evals {
            let mut order: Vec<usize> = (0..=n).collect();
            order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
            simplex = order.iter().map(|&i| simplex[i].clone()).collect();
            values = order.iter().map(|&i| values[i]).collect();

            let spread = values[n] - values[0];
            let diam = simplex[1..]
                .iter()
                .map(|p| {
                    p.iter()
                        .zip(&simplex[0])
                        .map(|(a, b)| (a - b).abs())
                        .fold(0.0, f64::max)
                })
                .fold(0.0, f64::max);
            if spread.abs() <= self.ftol && diam <= self.xtol.max(1e-300) || diam <= self.xtol {
                break;
            }

            centroid.iter_mut().for_each(|c| *c = 0.0);
            for p in &simplex[..n] {
                for i in 0..n {
                    centroid[i] += p[i] / n as f64;
                }
            }
            let worst = simplex[n].clone();
            for i in 0..n {
                trial[i] = centroid[i] + (centroid[i] - worst[i]);
            }
            let fr = eval(&trial, &mut evals);
            if fr < values[0] {
                for i in 0..n {
                    trial2[i] = centroid[i] + 2.0 * (centroid[i] - worst[i]);
                }
                let fe = eval(&trial2, &mut evals);
                if fe < fr {
                    simplex[n].copy_from_slice(&trial2);
                    values[n] = fe;
                } else {
                    simplex[n].copy_from_slice(&trial);
                    values[n] = fr;
                }
            } else if fr < values[n - 1] {
                simplex[n].copy_from_slice(&trial);
                values[n] = fr;
            } else {
                let outside = fr < values[n];
                for i in 0..n {
                    trial2[i] = if outside {
                        centroid[i] + 0.5 * (trial[i] - centroid[i])
                    } else {
                        centroid[i] + 0.5 * (worst[i] - centroid[i])
                    };
                }
                let fc = eval(&trial2, &mut evals);
                if fc < values[n].min(fr) {
                    simplex[n].copy_from_slice(&trial2);
                    values[n] = fc;
                } else {
                    // Shrink towards the best vertex.
                    let best = simplex[0].clone();
                    for j in 1..=n {
                        for i in 0..n {
                            simplex[j][i] = best[i] + 0.5 * (simplex[j][i] - best[i]);
                        }
                        values[j] = eval(&simplex[j], &mut evals);
                    }
                }
            }
        }
        let (bi, _) = values
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .unwrap();
        Minimum {
            x: simplex[bi].clone(),
            value: values[bi],
            evals,
        }
    }
}
