//! Laguerre polynomials by forward recurrence.

/// Laguerre polynomial `L_n(z)`.
///
/// Uses the three-term recurrence
/// `(k+1) L_{k+1} = (2k+1-z) L_k - k L_{k-1}`, which avoids the alternating
/// binomial sum of the explicit form.
pub fn laguerre(n: u32, z: f64) -> f64 {
    assoc_laguerre(n, 0.0, z)
}

/// Generalized (associated) Laguerre polynomial `L_n^{(a)}(z)`.
pub fn assoc_laguerre(n: u32, a: f64, z: f64) -> f64 {
    let mut prev = 1.0;
    if n == 0 {
        return prev;
    }
    let mut cur = 1.0 + a - z;
    for k in 1..n {
        let k = f64::from(k);
        let next = ((2.0 * k + 1.0 + a - z) * cur - (k + a) * prev) / (k + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}
