//! Small dense-vector helpers. Dimensions are tiny, so plain slices suffice.

pub fn dot(u: &[f64], v: &[f64]) -> f64 {
    debug_assert_eq!(u.len(), v.len());
    u.iter().zip(v).map(|(a, b)| a * b).sum()
}

pub fn norm(u: &[f64]) -> f64 {
    dot(u, u).sqrt()
}

pub fn add(u: &[f64], v: &[f64]) -> Vec<f64> {
    u.iter().zip(v).map(|(a, b)| a + b).collect()
}

pub fn sub(u: &[f64], v: &[f64]) -> Vec<f64> {
    u.iter().zip(v).map(|(a, b)| a - b).collect()
}

pub fn scale(u: &[f64], s: f64) -> Vec<f64> {
    u.iter().map(|a| a * s).collect()
}

/// `a * u + b * v`
pub fn combine(a: f64, u: &[f64], b: f64, v: &[f64]) -> Vec<f64> {
    u.iter().zip(v).map(|(x, y)| a * x + b * y).collect()
}

/// Angle between two nonzero vectors, in `[0, pi]`.
///
/// Uses the half-angle form `2 atan2(|u^ - v^|, |u^ + v^|)`, which stays
/// accurate for nearly parallel and nearly antiparallel inputs where
/// `acos` of the cosine loses half the digits.
pub fn angle_between(u: &[f64], v: &[f64]) -> f64 {
    let nu = norm(u);
    let nv = norm(v);
    if nu == 0.0 || nv == 0.0 {
        return 0.0;
    }
    let (mut diff, mut sum) = (0.0, 0.0);
    for (a, b) in u.iter().zip(v) {
        let (ua, vb) = (a / nu, b / nv);
        diff += (ua - vb) * (ua - vb);
        sum += (ua + vb) * (ua + vb);
    }
    2.0 * diff.sqrt().atan2(sum.sqrt())
}
