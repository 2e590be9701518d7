use crate::state::BellDiagonalState;

/// Quasi-pure approximation of the concurrence, `max(0, S_{nm} - Σ_{(k,l)≠(n,m)} S_{k,l})`,
/// with `(n,m)` the largest coordinate (lowest flat index on ties).
pub fn quasipure_concurrence(s: &BellDiagonalState) -> f64 {
    let d = s.d();
    let c = s.coords();
    let mut top = 0;
    for (i, &x) in c.iter().enumerate() {
        if x > c[top] {
            top = i;
        }
    }
    let (n, m) = (top / d, top % d);
    let df = d as f64;
    let pre = df / (2.0 * (df - 1.0));
    let s_kl = |k: usize, l: usize| {
        let mirror = c[((2 * n + 2 * d - k) % d) * d + (2 * m + 2 * d - l) % d];
        let mut bracket = mirror / (df * df);
        if k == n && l == m {
            bracket += (1.0 - 2.0 / df) * c[top];
        }
        (pre * c[k * d + l] * bracket).max(0.0).sqrt()
    };
    let mut value = s_kl(n, m);
    for k in 0..d {
        for l in 0..d {
            if (k, l) != (n, m) {
                value -= s_kl(k, l);
            }
        }
    }
    value.max(0.0)
}
