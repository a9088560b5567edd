//! Laguerre (power) cells of weighted seeds clipped to a convex domain.

use crate::geom::Vec2;

/// Keep the part of convex polygon `poly` where `n·p <= c`.
fn clip(poly: &[Vec2], n: &Vec2, c: f64) -> Vec<Vec2> {
    let mut out = Vec::with_capacity(poly.len() + 1);
    let k = poly.len();
    for i in 0..k {
        let p = poly[i];
        let q = poly[(i + 1) % k];
        let fp = n.dot(&p) - c;
        let fq = n.dot(&q) - c;
        if fp <= 0.0 {
            out.push(p);
        }
        if (fp < 0.0 && fq > 0.0) || (fp > 0.0 && fq < 0.0) {
            let t = fp / (fp - fq);
            out.push(p + (q - p) * t);
        }
    }
    out
}

fn dedup_ring(poly: &mut Vec<Vec2>, tol: f64) {
    let mut out: Vec<Vec2> = Vec::with_capacity(poly.len());
    for p in poly.iter() {
        if out.last().is_none_or(|l: &Vec2| (l - p).norm() > tol) {
            out.push(*p);
        }
    }
    while out.len() > 1 && (out[0] - out[out.len() - 1]).norm() <= tol {
        out.pop();
    }
    *poly = out;
}

/// Power distance |p − s|² − w.
pub fn power_distance(p: &Vec2, seed: &Vec2, weight: f64) -> f64 {
    (p - seed).norm_squared() - weight
}

/// Index of the seed closest to `p` in the power metric (ties go to the lowest index).
pub fn power_nearest(p: &Vec2, seeds: &[Vec2], weights: &[f64]) -> usize {
    let mut best = 0;
    let mut bd = f64::INFINITY;
    for (i, (s, w)) in seeds.iter().zip(weights).enumerate() {
        let d = power_distance(p, s, *w);
        if d < bd {
            bd = d;
            best = i;
        }
    }
    best
}

/// Counter-clockwise cell of every seed; empty cells come back empty.
pub fn power_cells(domain: &[Vec2], seeds: &[Vec2], weights: &[f64], tol: f64) -> Vec<Vec<Vec2>> {
    (0..seeds.len())
        .map(|i| {
            let mut poly = domain.to_vec();
            for j in 0..seeds.len() {
                if i == j || poly.is_empty() {
                    continue;
                }
                let (si, sj) = (seeds[i], seeds[j]);
                let n = (sj - si) * 2.0;
                let c = sj.norm_squared() - si.norm_squared() - weights[j] + weights[i];
                poly = clip(&poly, &n, c);
            }
            dedup_ring(&mut poly, tol);
            if poly.len() < 3 {
                poly.clear();
            }
            poly
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::vec2;

    #[test]
    fn two_seeds_split_square_in_half() {
        let sq = [vec2(0.0, 0.0), vec2(1.0, 0.0), vec2(1.0, 1.0), vec2(0.0, 1.0)];
        let cells = power_cells(&sq, &[vec2(0.25, 0.5), vec2(0.75, 0.5)], &[0.0, 0.0], 1e-12);
        for c in &cells {
            let area: f64 = (0..c.len()).map(|k| c[k].perp(&c[(k + 1) % c.len()])).sum::<f64>() * 0.5;
            assert!((area - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn weights_shift_the_bisector() {
        let sq = [vec2(0.0, 0.0), vec2(1.0, 0.0), vec2(1.0, 1.0), vec2(0.0, 1.0)];
        let cells = power_cells(&sq, &[vec2(0.25, 0.5), vec2(0.75, 0.5)], &[0.1, 0.0], 1e-12);
        let max_x = cells[0].iter().fold(0.0f64, |m, p| m.max(p.x));
        // bisector at x = 0.5 + 0.1/(2*0.5)
        assert!((max_x - 0.6).abs() < 1e-12);
    }
}
