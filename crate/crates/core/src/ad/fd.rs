//! Central finite differences, used as the independent gradient oracle.

/// Central-difference gradient of `f` at `x` with step `h` per component.
pub fn central_gradient<F>(x: &[f64], h: f64, f: F) -> Vec<f64>
where
    F: Fn(&[f64]) -> f64,
{
    let mut work = x.to_vec();
    let mut grad = vec![0.0; x.len()];
    for i in 0..x.len() {
        let x0 = work[i];
        work[i] = x0 + h;
        let fp = f(&work);
        work[i] = x0 - h;
        let fm = f(&work);
        work[i] = x0;
        grad[i] = (fp - fm) / (2.0 * h);
    }
    grad
}

/// Largest relative component error between `got` and a reference gradient.
pub fn max_relative_error(got: &[f64], reference: &[f64], floor: f64) -> f64 {
    got.iter()
        .zip(reference)
        .map(|(g, r)| (g - r).abs() / r.abs().max(floor))
        .fold(0.0, f64::max)
}

/// Noise floor for comparisons against a central-difference gradient.
///
/// Central differences carry truncation error proportional to the global
/// curvature scale, not to each component's size, so components far below
/// the dominant gradient magnitude are compared against this floor instead
/// of their own value.
pub fn gradient_check_floor(reference: &[f64]) -> f64 {
    let gmax = reference.iter().fold(0.0_f64, |a, &g| a.max(g.abs()));
    1e-3 * gmax.max(1.0)
}
