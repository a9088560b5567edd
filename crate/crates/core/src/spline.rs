//! Natural parametric cubic splines with chord-length parameterization.

use crate::error::{Error, Result};
use crate::geom::{rot90, Vec2};

#[derive(Clone, Debug)]
pub struct SplineCurve {
    points: Vec<Vec2>,
    /// Parameter at each data point; for closed curves one extra entry holds the period.
    knots: Vec<f64>,
    /// Second derivatives at the data points.
    second: Vec<Vec2>,
    closed: bool,
}

const MIN_CHORD: f64 = 1e-14;

impl SplineCurve {
    /// Fit through `points`; a closed curve joins the last point back to the first.
    pub fn fit(points: &[Vec2], closed: bool) -> Result<Self> {
        let n = points.len();
        if n < 2 || (closed && n < 3) {
            return Err(Error::DegenerateLine(n));
        }
        let segs = if closed { n } else { n - 1 };
        let h: Vec<f64> = (0..segs).map(|i| (points[(i + 1) % n] - points[i]).norm().max(MIN_CHORD)).collect();
        let mut knots = Vec::with_capacity(segs + 1);
        knots.push(0.0);
        for hi in &h {
            knots.push(knots.last().unwrap() + hi);
        }
        let second =
            if closed { periodic_second_derivatives(points, &h) } else { natural_second_derivatives(points, &h) };
        Ok(SplineCurve { points: points.to_vec(), knots, second, closed })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    pub fn knot(&self, i: usize) -> f64 {
        self.knots[i]
    }

    /// Total parameter length (chord length of the polygon).
    pub fn period(&self) -> f64 {
        *self.knots.last().unwrap()
    }

    fn n_segments(&self) -> usize {
        self.knots.len() - 1
    }

    fn seg_h(&self, i: usize) -> f64 {
        self.knots[i + 1] - self.knots[i]
    }

    /// First and second derivatives at data point `i`.
    pub fn derivatives_at_node(&self, i: usize) -> (Vec2, Vec2) {
        let n = self.points.len();
        let segs = self.n_segments();
        if i < segs {
            let j = (i + 1) % n;
            let h = self.seg_h(i);
            let d1 = (self.points[j] - self.points[i]) / h - (self.second[i] * 2.0 + self.second[j]) * (h / 6.0);
            (d1, self.second[i])
        } else {
            // last node of an open curve: right end of the final segment
            let k = i - 1;
            let h = self.seg_h(k);
            let d1 = (self.points[i] - self.points[k]) / h + (self.second[i] * 2.0 + self.second[k]) * (h / 6.0);
            (d1, self.second[i])
        }
    }

    /// Signed curvature at data point `i` (positive when turning left).
    pub fn curvature(&self, i: usize) -> f64 {
        let (d1, d2) = self.derivatives_at_node(i);
        let s = d1.norm();
        if s == 0.0 {
            return 0.0;
        }
        d1.perp(&d2) / (s * s * s)
    }

    pub fn tangent(&self, i: usize) -> Vec2 {
        let (d1, _) = self.derivatives_at_node(i);
        let s = d1.norm();
        if s == 0.0 {
            Vec2::zeros()
        } else {
            d1 / s
        }
    }

    /// Curvature vector κ·n at data point `i`, pointing toward the center of curvature.
    pub fn curvature_normal(&self, i: usize) -> Vec2 {
        rot90(&self.tangent(i)) * self.curvature(i)
    }

    /// Position at parameter `t` (wrapped for closed curves, clamped for open ones).
    pub fn eval(&self, t: f64) -> Vec2 {
        let period = self.period();
        let t = if self.closed { t.rem_euclid(period) } else { t.clamp(0.0, period) };
        let segs = self.n_segments();
        let i = match self.knots.binary_search_by(|k| k.total_cmp(&t)) {
            Ok(i) => i.min(segs - 1),
            Err(i) => i.saturating_sub(1).min(segs - 1),
        };
        let n = self.points.len();
        let j = (i + 1) % n;
        let h = self.seg_h(i);
        let a = (self.knots[i + 1] - t) / h;
        let b = (t - self.knots[i]) / h;
        self.points[i] * a
            + self.points[j] * b
            + (self.second[i] * (a * a * a - a) + self.second[j] * (b * b * b - b)) * (h * h / 6.0)
    }
}

/// Normal speeds along a spline with the curvature part evaluated at the end
/// of a step: solves (A − c·B)w = A·w0, where A is the moment matrix and B the
/// scaled second-difference matrix on chord lengths `h`, and c = Mγ·dt.
/// Open curves hold the end speeds at `ends`.
pub fn implicit_normal_speeds(h: &[f64], w0: &[f64], c: f64, closed: bool, ends: (f64, f64)) -> Vec<f64> {
    let n = w0.len();
    let pack = |v: f64| Vec2::new(v, 0.0);
    if closed {
        let mut sub = vec![0.0; n];
        let mut diag = vec![0.0; n];
        let mut sup = vec![0.0; n];
        let mut rhs = vec![Vec2::zeros(); n];
        for i in 0..n {
            let im = (i + n - 1) % n;
            let ip = (i + 1) % n;
            let (a, b) = (h[im], h[i]);
            sub[i] = a - 6.0 * c / a;
            diag[i] = 2.0 * (a + b) + 6.0 * c * (1.0 / a + 1.0 / b);
            sup[i] = b - 6.0 * c / b;
            rhs[i] = pack(a * w0[im] + 2.0 * (a + b) * w0[i] + b * w0[ip]);
        }
        return cyclic_thomas(&sub, &diag, &sup, &rhs).iter().map(|v| v.x).collect();
    }
    let mut w = w0.to_vec();
    w[0] = ends.0;
    w[n - 1] = ends.1;
    if n < 3 {
        return w;
    }
    let k = n - 2;
    let mut sub = vec![0.0; k];
    let mut diag = vec![0.0; k];
    let mut sup = vec![0.0; k];
    let mut rhs = vec![Vec2::zeros(); k];
    for r in 0..k {
        let i = r + 1;
        let (a, b) = (h[i - 1], h[i]);
        sub[r] = a - 6.0 * c / a;
        diag[r] = 2.0 * (a + b) + 6.0 * c * (1.0 / a + 1.0 / b);
        sup[r] = b - 6.0 * c / b;
        // moments vanish at the ends, so A only couples interior values
        let left = if i > 1 { a * w0[i - 1] } else { 6.0 * c * ends.0 / a };
        let right = if i + 1 < n - 1 { b * w0[i + 1] } else { 6.0 * c * ends.1 / b };
        rhs[r] = pack(left + 2.0 * (a + b) * w0[i] + right);
    }
    let sol = thomas(&sub, &diag, &sup, &rhs);
    for r in 0..k {
        w[r + 1] = sol[r].x;
    }
    w
}

fn natural_second_derivatives(p: &[Vec2], h: &[f64]) -> Vec<Vec2> {
    let n = p.len();
    let mut m = vec![Vec2::zeros(); n];
    if n < 3 {
        return m;
    }
    let k = n - 2;
    let mut sub = vec![0.0; k];
    let mut diag = vec![0.0; k];
    let mut sup = vec![0.0; k];
    let mut rhs = vec![Vec2::zeros(); k];
    for r in 0..k {
        let i = r + 1;
        sub[r] = h[i - 1];
        diag[r] = 2.0 * (h[i - 1] + h[i]);
        sup[r] = h[i];
        rhs[r] = ((p[i + 1] - p[i]) / h[i] - (p[i] - p[i - 1]) / h[i - 1]) * 6.0;
    }
    let sol = thomas(&sub, &diag, &sup, &rhs);
    m[1..n - 1].copy_from_slice(&sol);
    m
}

fn periodic_second_derivatives(p: &[Vec2], h: &[f64]) -> Vec<Vec2> {
    let n = p.len();
    let mut sub = vec![0.0; n];
    let mut diag = vec![0.0; n];
    let mut sup = vec![0.0; n];
    let mut rhs = vec![Vec2::zeros(); n];
    for i in 0..n {
        let im = (i + n - 1) % n;
        let ip = (i + 1) % n;
        sub[i] = h[im];
        diag[i] = 2.0 * (h[im] + h[i]);
        sup[i] = h[i];
        rhs[i] = ((p[ip] - p[i]) / h[i] - (p[i] - p[im]) / h[im]) * 6.0;
    }
    cyclic_thomas(&sub, &diag, &sup, &rhs)
}

/// Tridiagonal solve; `sub[0]` and `sup[n-1]` are ignored.
fn thomas(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[Vec2]) -> Vec<Vec2> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![Vec2::zeros(); n];
    c[0] = sup[0] / diag[0];
    d[0] = rhs[0] / diag[0];
    for i in 1..n {
        let denom = diag[i] - sub[i] * c[i - 1];
        c[i] = if i + 1 < n { sup[i] / denom } else { 0.0 };
        d[i] = (rhs[i] - d[i - 1] * sub[i]) / denom;
    }
    let mut x = vec![Vec2::zeros(); n];
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - x[i + 1] * c[i];
    }
    x
}

/// Cyclic tridiagonal solve (corner terms `sub[0]`, `sup[n-1]`) via Sherman-Morrison.
fn cyclic_thomas(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[Vec2]) -> Vec<Vec2> {
    let n = diag.len();
    let alpha = sup[n - 1];
    let beta = sub[0];
    let gamma = -diag[0];
    let mut bb = diag.to_vec();
    bb[0] = diag[0] - gamma;
    bb[n - 1] = diag[n - 1] - alpha * beta / gamma;
    let x = thomas(sub, &bb, sup, rhs);
    let mut u = vec![Vec2::zeros(); n];
    // reuse the vector solver for the scalar correction column
    u[0] = Vec2::new(gamma, 0.0);
    u[n - 1] = Vec2::new(alpha, 0.0);
    let z: Vec<f64> = thomas(sub, &bb, sup, &u).iter().map(|v| v.x).collect();
    let denom = 1.0 + z[0] + beta * z[n - 1] / gamma;
    let fact = (x[0] + x[n - 1] * (beta / gamma)) / denom;
    x.iter().zip(&z).map(|(xi, zi)| xi - fact * *zi).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::vec2;

    fn polygon(n: usize, r: f64) -> Vec<Vec2> {
        (0..n)
            .map(|k| {
                let a = std::f64::consts::TAU * k as f64 / n as f64;
                vec2(r * a.cos(), r * a.sin())
            })
            .collect()
    }

    #[test]
    fn collinear_points_have_no_curvature() {
        let s = SplineCurve::fit(&[vec2(0.0, 0.0), vec2(0.5, 0.5), vec2(2.0, 2.0)], false).unwrap();
        for i in 0..3 {
            assert!(s.curvature(i).abs() < 1e-12);
        }
    }

    #[test]
    fn circle_every_five_degrees() {
        let s = SplineCurve::fit(&polygon(72, 0.3), true).unwrap();
        for i in 0..72 {
            let k = s.curvature_normal(i);
            assert!((k.norm() - 10.0 / 3.0).abs() / (10.0 / 3.0) < 1e-3);
            // points toward the center
            assert!(k.dot(&-s.points[i]) > 0.0);
        }
    }

    #[test]
    fn clockwise_circle_still_points_inward() {
        let mut p = polygon(40, 1.0);
        p.reverse();
        let s = SplineCurve::fit(&p, true).unwrap();
        for i in 0..40 {
            assert!(s.curvature_normal(i).dot(&-p[i]) > 0.0);
        }
    }

    #[test]
    fn anchor_curvature_matches_neighbours() {
        let s = SplineCurve::fit(&polygon(16, 1.0), true).unwrap();
        let k0 = s.curvature(0);
        for i in 1..16 {
            assert!((s.curvature(i) - k0).abs() < 1e-12);
        }
    }

    #[test]
    fn interpolates_data_points() {
        let p = vec![vec2(0.0, 0.0), vec2(1.0, 0.3), vec2(2.0, -0.2), vec2(3.0, 0.5)];
        let s = SplineCurve::fit(&p, false).unwrap();
        for (i, q) in p.iter().enumerate() {
            assert!((s.eval(s.knot(i)) - q).norm() < 1e-12);
        }
        let c = SplineCurve::fit(&polygon(9, 2.0), true).unwrap();
        for i in 0..9 {
            assert!((c.eval(c.knot(i)) - c.points[i]).norm() < 1e-12);
        }
    }

    #[test]
    fn second_order_convergence_on_circle() {
        let err = |n: usize| {
            let s = SplineCurve::fit(&polygon(n, 1.0), true).unwrap();
            (s.curvature(0) - 1.0).abs()
        };
        let (e16, e32, e64) = (err(16), err(32), err(64));
        assert!((e16 / e32).log2() >= 1.9);
        assert!((e32 / e64).log2() >= 1.9);
    }

    #[test]
    fn too_few_points() {
        assert!(SplineCurve::fit(&[vec2(0.0, 0.0)], false).is_err());
    }
}
