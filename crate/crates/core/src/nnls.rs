//! Nonnegative least squares by the Lawson–Hanson active-set method.
//!
//! Solutions are basic: the columns carrying positive weight are linearly
//! independent, so at most `rows` of them are nonzero.

/// Dense matrix stored column by column.
#[derive(Debug, Clone)]
pub struct ColumnMatrix {
    pub rows: usize,
    pub cols: Vec<Vec<f64>>,
}

impl ColumnMatrix {
    pub fn new(rows: usize) -> Self {
        Self {
            rows,
            cols: Vec::new(),
        }
    }

    pub fn push(&mut self, col: Vec<f64>) {
        assert_eq!(col.len(), self.rows);
        self.cols.push(col);
    }

    fn residual(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        let mut r = y.to_vec();
        for (c, &xi) in self.cols.iter().zip(x) {
            if xi != 0.0 {
                r.iter_mut().zip(c).for_each(|(ri, ci)| *ri -= xi * ci);
            }
        }
        r
    }
}

#[derive(Debug, Clone)]
pub struct NnlsSolution {
    pub x: Vec<f64>,
    pub residual_norm: f64,
    pub iterations: usize,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Least squares restricted to the columns in `set`, by Householder QR.
/// Returns None if those columns are numerically dependent.
fn restricted_lstsq(a: &ColumnMatrix, set: &[usize], y: &[f64]) -> Option<Vec<f64>> {
    let m = a.rows;
    let k = set.len();
    if k > m {
        return None;
    }
    let mut q: Vec<Vec<f64>> = set.iter().map(|&j| a.cols[j].clone()).collect();
    let mut rhs = y.to_vec();
    let scale = q.iter().map(|c| dot(c, c).sqrt()).fold(0.0_f64, f64::max);
    for j in 0..k {
        let norm = q[j][j..].iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm <= 1e-12 * scale {
            return None;
        }
        let alpha = if q[j][j] > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = q[j][j..].to_vec();
        v[0] -= alpha;
        let vnorm2 = dot(&v, &v);
        if vnorm2 > 0.0 {
            for col in q.iter_mut().skip(j) {
                let f = 2.0 * dot(&v, &col[j..]) / vnorm2;
                col[j..].iter_mut().zip(&v).for_each(|(c, vi)| *c -= f * vi);
            }
            let f = 2.0 * dot(&v, &rhs[j..]) / vnorm2;
            rhs[j..].iter_mut().zip(&v).for_each(|(c, vi)| *c -= f * vi);
        }
    }
    let mut z = vec![0.0; k];
    for j in (0..k).rev() {
        let s: f64 = (j + 1..k).map(|l| q[l][j] * z[l]).sum();
        z[j] = (rhs[j] - s) / q[j][j];
    }
    Some(z)
}

/// Minimizes ‖A x − y‖₂ subject to x ≥ 0.
pub fn nnls(a: &ColumnMatrix, y: &[f64], max_iter: usize) -> NnlsSolution {
    let ncols = a.cols.len();
    let mut x = vec![0.0; ncols];
    let mut passive: Vec<usize> = Vec::new();
    let mut in_passive = vec![false; ncols];
    // columns whose entry immediately failed; excluded until x changes
    let mut blocked = vec![false; ncols];
    let col_scale = a.cols.iter().map(|c| dot(c, c).sqrt()).fold(0.0_f64, f64::max);
    let tol = 1e-14 * col_scale * dot(y, y).sqrt().max(1e-300);
    let mut iterations = 0;

    while iterations < max_iter {
        iterations += 1;
        let r = a.residual(&x, y);
        let mut best = None;
        let mut best_w = tol;
        for j in 0..ncols {
            if in_passive[j] || blocked[j] {
                continue;
            }
            let w = dot(&a.cols[j], &r);
            if w > best_w {
                best_w = w;
                best = Some(j);
            }
        }
        let Some(j) = best else { break };
        passive.push(j);
        in_passive[j] = true;

        let mut first = true;
        loop {
            let Some(z) = restricted_lstsq(a, &passive, y) else {
                // new column is dependent on the passive set
                passive.pop();
                in_passive[j] = false;
                blocked[j] = true;
                break;
            };
            if first && z.last().is_some_and(|&zj| zj <= 0.0) {
                // the gradient entry for j was rounding noise
                passive.pop();
                in_passive[j] = false;
                blocked[j] = true;
                break;
            }
            first = false;
            if z.iter().all(|&zi| zi > 0.0) {
                for (&p, &zi) in passive.iter().zip(&z) {
                    x[p] = zi;
                }
                blocked.iter_mut().for_each(|b| *b = false);
                break;
            }
            // step toward z until the first passive coordinate hits zero
            let mut alpha = f64::INFINITY;
            let mut leaving = passive[0];
            for (&p, &zi) in passive.iter().zip(&z) {
                if zi <= 0.0 {
                    let ratio = x[p] / (x[p] - zi);
                    if ratio < alpha {
                        alpha = ratio;
                        leaving = p;
                    }
                }
            }
            for (&p, &zi) in passive.iter().zip(&z) {
                x[p] += alpha * (zi - x[p]);
            }
            x[leaving] = 0.0;
            passive.retain(|&p| {
                let keep = x[p] > 0.0;
                if !keep {
                    x[p] = 0.0;
                    in_passive[p] = false;
                }
                keep
            });
            if passive.is_empty() {
                break;
            }
        }
    }
    let r = a.residual(&x, y);
    NnlsSolution {
        residual_norm: dot(&r, &r).sqrt(),
        x,
        iterations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use rand::Rng;

    #[test]
    fn recovers_nonnegative_solution_of_consistent_system() {
        let mut rng = stream(5);
        let (m, n) = (12, 40);
        let mut a = ColumnMatrix::new(m);
        for _ in 0..n {
            a.push((0..m).map(|_| rng.random::<f64>() - 0.3).collect());
        }
        let mut truth = vec![0.0; n];
        for j in [2, 7, 19, 33] {
            truth[j] = rng.random::<f64>() + 0.5;
        }
        let y = a.residual(&truth.iter().map(|t| -t).collect::<Vec<_>>(), &vec![0.0; m]);
        let sol = nnls(&a, &y, 1000);
        assert!(sol.residual_norm < 1e-12, "{}", sol.residual_norm);
        assert!(sol.x.iter().all(|&v| v >= 0.0));
        assert!(sol.x.iter().filter(|&&v| v > 0.0).count() <= m);
    }

    #[test]
    fn kkt_conditions_hold_for_inconsistent_system() {
        let mut rng = stream(6);
        let (m, n) = (10, 6);
        let mut a = ColumnMatrix::new(m);
        for _ in 0..n {
            a.push((0..m).map(|_| rng.random::<f64>() - 0.5).collect());
        }
        let y: Vec<f64> = (0..m).map(|_| rng.random::<f64>() - 0.5).collect();
        let sol = nnls(&a, &y, 1000);
        let r = a.residual(&sol.x, &y);
        for (j, c) in a.cols.iter().enumerate() {
            let w = dot(c, &r);
            assert!(w <= 1e-10);
            if sol.x[j] > 0.0 {
                assert!(w.abs() < 1e-10);
            }
        }
        // brute force over all active sets
        let mut best = f64::INFINITY;
        for mask in 0u32..(1 << n) {
            let set: Vec<usize> = (0..n).filter(|j| mask & (1 << j) != 0).collect();
            if let Some(z) = restricted_lstsq(&a, &set, &y) {
                if z.iter().all(|&v| v >= 0.0) {
                    let mut x = vec![0.0; n];
                    set.iter().zip(&z).for_each(|(&j, &v)| x[j] = v);
                    let r = a.residual(&x, &y);
                    best = best.min(dot(&r, &r).sqrt());
                }
            }
        }
        assert!((sol.residual_norm - best).abs() < 1e-10);
    }
}
