//! Fixed-step explicit integrators.

/// One classical fourth-order Runge-Kutta step of `y' = f(t, y)`.
pub fn rk4_step<const N: usize, F>(f: F, t: f64, y: [f64; N], h: f64) -> [f64; N]
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    let add = |a: &[f64; N], b: &[f64; N], s: f64| {
        let mut out = *a;
        for (o, bi) in out.iter_mut().zip(b) {
            *o += s * bi;
        }
        out
    };
    let k1 = f(t, &y);
    let k2 = f(t + 0.5 * h, &add(&y, &k1, 0.5 * h));
    let k3 = f(t + 0.5 * h, &add(&y, &k2, 0.5 * h));
    let k4 = f(t + h, &add(&y, &k3, h));
    let mut out = y;
    for i in 0..N {
        out[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}
