//! Continuous two-segment linear regression.

/// `y = level + left_slope * min(x - breakpoint, 0) + right_slope * max(x - breakpoint, 0)`
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PiecewiseFit {
    pub breakpoint: f64,
    /// Fitted value at the breakpoint.
    pub level: f64,
    pub left_slope: f64,
    pub right_slope: f64,
    pub sse: f64,
}

impl PiecewiseFit {
    pub fn eval(&self, x: f64) -> f64 {
        let d = x - self.breakpoint;
        self.level + self.left_slope * d.min(0.0) + self.right_slope * d.max(0.0)
    }
}

fn solve3(mut a: [[f64; 4]; 3]) -> Option<[f64; 3]> {
    for col in 0..3 {
        let pivot = (col..3).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, pivot);
        let p = a[col];
        for (row, r) in a.iter_mut().enumerate() {
            if row != col {
                let f = r[col] / p[col];
                for (x, y) in r[col..].iter_mut().zip(&p[col..]) {
                    *x -= f * y;
                }
            }
        }
    }
    Some([a[0][3] / a[0][0], a[1][3] / a[1][1], a[2][3] / a[2][2]])
}

fn fit_at(points: &[(f64, f64)], c: f64) -> Option<PiecewiseFit> {
    let mut m = [[0.0; 4]; 3];
    for &(x, y) in points {
        let row = [1.0, (x - c).min(0.0), (x - c).max(0.0)];
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] += row[i] * row[j];
            }
            m[i][3] += row[i] * y;
        }
    }
    let [level, left_slope, right_slope] = solve3(m)?;
    let mut fit = PiecewiseFit {
        breakpoint: c,
        level,
        left_slope,
        right_slope,
        sse: 0.0,
    };
    fit.sse = points.iter().map(|&(x, y)| (y - fit.eval(x)).powi(2)).sum();
    Some(fit)
}

/// Least-squares fit. The breakpoint is searched on a 1000-step grid
/// between the second-smallest and second-largest x, so each segment
/// covers at least two points, then refined by golden-section search
/// around the best grid point.
pub fn fit_two_segments(points: &[(f64, f64)]) -> Option<PiecewiseFit> {
    let mut xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    if xs.len() < 4 {
        return None;
    }
    let (lo, hi) = (xs[1], xs[xs.len() - 2]);
    let step = (hi - lo) / 1000.0;
    let best = (0..=1000)
        .map(|i| lo + step * f64::from(i))
        .filter_map(|c| fit_at(points, c))
        .min_by(|a, b| a.sse.total_cmp(&b.sse))?;
    let sse = |c: f64| fit_at(points, c).map_or(f64::INFINITY, |f| f.sse);
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (
        (best.breakpoint - step).max(lo),
        (best.breakpoint + step).min(hi),
    );
    for _ in 0..60 {
        let c1 = b - phi * (b - a);
        let c2 = a + phi * (b - a);
        if sse(c1) <= sse(c2) {
            b = c2;
        } else {
            a = c1;
        }
    }
    match fit_at(points, (a + b) / 2.0) {
        Some(f) if f.sse <= best.sse => Some(f),
        _ => Some(best),
    }
}
