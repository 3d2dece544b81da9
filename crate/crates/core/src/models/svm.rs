//! C-SVC trained by SMO with second-order working-set selection.
//!
//! Class 0 is the +1 side of the decision function.

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Kernel {
    Linear,
    Rbf { gamma: f64 },
}

impl Kernel {
    pub fn eval(self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            Kernel::Linear => a.iter().zip(b).map(|(x, y)| x * y).sum(),
            Kernel::Rbf { gamma } => {
                let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
                (-gamma * d2).exp()
            }
        }
    }
}

pub const SMO_TOLERANCE: f64 = 1e-3;
const TAU: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Svm {
    kernel: Kernel,
    support: Vec<Vec<f64>>,
    /// `alpha_i * y_i` for each support vector.
    coef: Vec<f64>,
    rho: f64,
    /// Dual variables of every training point (for diagnostics).
    pub alpha: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

fn sign(label: u8) -> f64 {
    if label == 0 {
        1.0
    } else {
        -1.0
    }
}

impl Svm {
    pub fn fit(x: &[Vec<f64>], labels: &[u8], kernel: Kernel, c: f64) -> Self {
        let n = x.len();
        let y: Vec<f64> = labels.iter().map(|&l| sign(l)).collect();
        let mut k = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let v = kernel.eval(&x[i], &x[j]);
                k[i * n + j] = v;
                k[j * n + i] = v;
            }
        }
        let kk = |i: usize, j: usize| k[i * n + j];
        let mut alpha = vec![0.0; n];
        let mut grad = vec![-1.0; n];
        let cap = 10_000usize.saturating_mul(n).max(1);
        let mut iterations = 0;
        let mut converged = false;
        let up = |a: f64, yt: f64| (yt > 0.0 && a < c) || (yt < 0.0 && a > 0.0);
        let low = |a: f64, yt: f64| (yt > 0.0 && a > 0.0) || (yt < 0.0 && a < c);
        while iterations < cap {
            let mut g_max = f64::NEG_INFINITY;
            let mut i_sel = usize::MAX;
            for t in 0..n {
                if up(alpha[t], y[t]) && -y[t] * grad[t] > g_max {
                    g_max = -y[t] * grad[t];
                    i_sel = t;
                }
            }
            let mut g_min = f64::INFINITY;
            let mut j_sel = usize::MAX;
            let mut obj_min = f64::INFINITY;
            for t in 0..n {
                if !low(alpha[t], y[t]) {
                    continue;
                }
                let v = -y[t] * grad[t];
                g_min = g_min.min(v);
                if i_sel == usize::MAX {
                    continue;
                }
                let b = g_max - v;
                if b > 0.0 {
                    let mut a = kk(i_sel, i_sel) + kk(t, t) - 2.0 * kk(i_sel, t);
                    if a <= 0.0 {
                        a = TAU;
                    }
                    let obj = -(b * b) / a;
                    if obj < obj_min {
                        obj_min = obj;
                        j_sel = t;
                    }
                }
            }
            if i_sel == usize::MAX || j_sel == usize::MAX || g_max - g_min < SMO_TOLERANCE {
                converged = true;
                break;
            }
            let (i, j) = (i_sel, j_sel);
            let (old_i, old_j) = (alpha[i], alpha[j]);
            let mut quad = kk(i, i) + kk(j, j) - 2.0 * kk(i, j);
            if quad <= 0.0 {
                quad = TAU;
            }
            if y[i] != y[j] {
                let delta = (-grad[i] - grad[j]) / quad;
                let diff = alpha[i] - alpha[j];
                alpha[i] += delta;
                alpha[j] += delta;
                if diff > 0.0 {
                    if alpha[j] < 0.0 {
                        alpha[j] = 0.0;
                        alpha[i] = diff;
                    }
                } else if alpha[i] < 0.0 {
                    alpha[i] = 0.0;
                    alpha[j] = -diff;
                }
                if diff > 0.0 {
                    if alpha[i] > c {
                        alpha[i] = c;
                        alpha[j] = c - diff;
                    }
                } else if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = c + diff;
                }
            } else {
                let delta = (grad[i] - grad[j]) / quad;
                let sum = alpha[i] + alpha[j];
                alpha[i] -= delta;
                alpha[j] += delta;
                if sum > c {
                    if alpha[i] > c {
                        alpha[i] = c;
                        alpha[j] = sum - c;
                    }
                } else if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = sum;
                }
                if sum > c {
                    if alpha[j] > c {
                        alpha[j] = c;
                        alpha[i] = sum - c;
                    }
                } else if alpha[i] < 0.0 {
                    alpha[i] = 0.0;
                    alpha[j] = sum;
                }
            }
            let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
            for t in 0..n {
                grad[t] += y[t] * (y[i] * kk(t, i) * di + y[j] * kk(t, j) * dj);
            }
            iterations += 1;
        }
        if !converged {
            log::warn!("SMO stopped at the {cap}-iteration cap before reaching tolerance");
        }

        let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
        let (mut free, mut free_sum) = (0usize, 0.0);
        for t in 0..n {
            let yg = y[t] * grad[t];
            if alpha[t] >= c {
                if y[t] < 0.0 {
                    ub = ub.min(yg);
                } else {
                    lb = lb.max(yg);
                }
            } else if alpha[t] <= 0.0 {
                if y[t] > 0.0 {
                    ub = ub.min(yg);
                } else {
                    lb = lb.max(yg);
                }
            } else {
                free += 1;
                free_sum += yg;
            }
        }
        let rho = if free > 0 {
            free_sum / free as f64
        } else {
            (ub + lb) / 2.0
        };
        let mut support = Vec::new();
        let mut coef = Vec::new();
        for t in 0..n {
            if alpha[t] > 0.0 {
                support.push(x[t].clone());
                coef.push(alpha[t] * y[t]);
            }
        }
        Svm {
            kernel,
            support,
            coef,
            rho,
            alpha,
            iterations,
            converged,
        }
    }

    pub fn decision(&self, x: &[f64]) -> f64 {
        self.support
            .iter()
            .zip(&self.coef)
            .map(|(s, a)| a * self.kernel.eval(s, x))
            .sum::<f64>()
            - self.rho
    }

    pub fn predict(&self, x: &[f64]) -> u8 {
        u8::from(self.decision(x) <= 0.0)
    }
}
