//! Unit-integral B-spline densities (a single basis element on an arbitrary knot vector).

use super::quad::GaussRule;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

#[derive(Clone, Debug)]
pub struct BSplineDensity {
    knots: Vec<f64>,
    degree: usize,
    scale: f64,
    /// `deriv_coeffs[s][a]`: the s-th derivative as a combination of `N_{a, p-s}`.
    deriv_coeffs: Vec<Vec<f64>>,
}

fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

impl BSplineDensity {
    /// `knots` need not be sorted; at least two distinct values are required.
    pub fn new(mut knots: Vec<f64>) -> Self {
        knots.sort_by(f64::total_cmp);
        let k = knots.len() - 1;
        assert!(k >= 1 && knots[k] > knots[0], "degenerate knot vector");
        let degree = k - 1;
        let scale = k as f64 / (knots[k] - knots[0]);
        let max_deriv = degree.min(2);
        let mut deriv_coeffs = vec![vec![1.0]];
        for s in 1..=max_deriv {
            let q = degree + 1 - s;
            let prev = &deriv_coeffs[s - 1];
            let mut next = vec![0.0; prev.len() + 1];
            for (a, &ca) in prev.iter().enumerate() {
                let qf = q as f64;
                next[a] += ca * ratio(qf, knots[a + q] - knots[a]);
                next[a + 1] -= ca * ratio(qf, knots[a + q + 1] - knots[a + 1]);
            }
            deriv_coeffs.push(next);
        }
        Self {
            knots,
            degree,
            scale,
            deriv_coeffs,
        }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn support(&self) -> (f64, f64) {
        (self.knots[0], *self.knots.last().unwrap())
    }

    /// Distinct knot values with multiplicities.
    pub fn breakpoints(&self) -> Vec<(f64, usize)> {
        let mut out: Vec<(f64, usize)> = Vec::new();
        for &t in &self.knots {
            match out.last_mut() {
                Some((v, m)) if *v == t => *m += 1,
                _ => out.push((t, 1)),
            }
        }
        out
    }

    /// Value of the s-th derivative (`s <= 2`) at `x`, as a one-sided limit.
    pub fn eval(&self, x: f64, deriv: usize, side: Side) -> f64 {
        if deriv > self.degree {
            return 0.0;
        }
        assert!(deriv < self.deriv_coeffs.len(), "derivative order {deriv} not precomputed");
        let t = &self.knots;
        let k = t.len() - 1;
        let inside = |a: usize| match side {
            Side::Right => t[a] <= x && x < t[a + 1],
            Side::Left => t[a] < x && x <= t[a + 1],
        };
        let Some(i) = (0..k).find(|&a| inside(a)) else {
            return 0.0;
        };
        let q0 = self.degree - deriv;
        // triangle of nonzero N_{a,q}(x) for a in [i - q, i]
        let mut n = vec![0.0; k];
        n[i] = 1.0;
        for q in 1..=q0 {
            let lo = i.saturating_sub(q);
            let hi = i.min(k - 1 - q);
            for a in lo..=hi {
                let left = ratio(x - t[a], t[a + q] - t[a]) * n[a];
                let right = ratio(t[a + q + 1] - x, t[a + q + 1] - t[a + 1]) * n[a + 1];
                n[a] = left + right;
            }
            if hi + 1 < k {
                n[hi + 1] = 0.0;
            }
        }
        let coeffs = &self.deriv_coeffs[deriv];
        let lo = i.saturating_sub(q0);
        let hi = i.min(coeffs.len() - 1);
        let mut acc = 0.0;
        for a in lo..=hi {
            acc += coeffs[a] * n[a];
        }
        self.scale * acc
    }

    pub fn value(&self, x: f64) -> f64 {
        self.eval(x, 0, Side::Right)
    }

    /// Jump of the first derivative at an interior breakpoint of multiplicity `mult`.
    /// Zero unless the spline is only `C^0` there.
    pub fn derivative_jump(&self, tau: f64, mult: usize) -> f64 {
        if mult < self.degree {
            return 0.0;
        }
        self.eval(tau, 1, Side::Right) - self.eval(tau, 1, Side::Left)
    }

    /// Upper and lower iterated tails at `t`, for `q = 0..=q_max`:
    /// `A_q(t) = int_t^inf (s - t)^q / q! M(s) ds`, `B_q(t) = int_-inf^t (t - s)^q / q! M(s) ds`.
    pub fn tails(&self, t: f64, q_max: usize) -> (Vec<f64>, Vec<f64>) {
        let rule = GaussRule::for_degree(self.degree + q_max);
        let mut upper = vec![0.0; q_max + 1];
        let mut lower = vec![0.0; q_max + 1];
        let bps: Vec<f64> = self.breakpoints().into_iter().map(|(v, _)| v).collect();
        let add_piece = |a: f64, b: f64, out: &mut Vec<f64>, up: bool| {
            for (s, w) in rule.mapped(a, b) {
                let m = self.value(s) * w;
                let d = if up { s - t } else { t - s };
                let mut term = m;
                for (q, slot) in out.iter_mut().enumerate() {
                    if q > 0 {
                        term *= d / q as f64;
                    }
                    *slot += term;
                }
            }
        };
        let mut cuts: Vec<f64> = bps.clone();
        cuts.push(t);
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        for w in cuts.windows(2) {
            let (a, b) = (w[0], w[1]);
            if a >= t {
                add_piece(a, b, &mut upper, true);
            } else if b <= t {
                add_piece(a, b, &mut lower, false);
            }
        }
        (upper, lower)
    }
}
