//! Least-squares helpers shared by the measurement harnesses.

/// Slope of the least-squares line through (xs, ys).
pub fn linear_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        num += (x - mx) * (y - my);
        den += (x - mx) * (x - mx);
    }
    num / den
}

/// Intercept and slope of the least-squares line.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let slope = linear_slope(xs, ys);
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    (my - slope * mx, slope)
}
