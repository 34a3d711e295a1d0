//! Integer-order Bessel functions of the first kind.

/// `J_n(x)` for `n = 0..=n_max`, by downward recurrence normalized with
/// `J_0 + 2 Σ J_{2k} = 1`.
pub fn bessel_j_all(n_max: usize, x: f64) -> Vec<f64> {
    let mut out = vec![0.0; n_max + 1];
    if x == 0.0 {
        out[0] = 1.0;
        return out;
    }
    let ax = x.abs();
    let start = {
        let base = n_max.max(ax.ceil() as usize);
        let extra = (40.0 * (base as f64 + 1.0).sqrt()) as usize;
        2 * ((base + extra) / 2 + 1)
    };
    let mut next = 0.0;
    let mut cur = 1e-300;
    let mut norm = 0.0;
    for k in (0..start).rev() {
        let prev = 2.0 * (k + 1) as f64 / ax * cur - next;
        next = cur;
        cur = prev;
        if k <= n_max {
            out[k] = cur;
        }
        if k % 2 == 0 {
            norm += if k == 0 { cur } else { 2.0 * cur };
        }
        if cur.abs() > 1e250 {
            let s = 1e-250;
            cur *= s;
            next *= s;
            norm *= s;
            for v in out.iter_mut() {
                *v *= s;
            }
        }
    }
    for v in out.iter_mut() {
        *v /= norm;
    }
    if x < 0.0 {
        for (k, v) in out.iter_mut().enumerate() {
            if k % 2 == 1 {
                *v = -*v;
            }
        }
    }
    out
}

/// `J_n(x)` for any integer order.
pub fn bessel_j(n: i64, x: f64) -> f64 {
    let v = bessel_j_all(n.unsigned_abs() as usize, x)[n.unsigned_abs() as usize];
    if n < 0 && n % 2 != 0 {
        -v
    } else {
        v
    }
}

/// Smallest order beyond which `|J_n(x)| < 1e−5`, plus two guard terms.
pub fn sideband_count(x: f64) -> usize {
    let mut n_max = (x.abs().ceil() as usize) + 8;
    loop {
        let j = bessel_j_all(n_max, x);
        if let Some(last) = (0..=n_max).rev().find(|&k| j[k].abs() >= 1e-5) {
            if last + 2 < n_max {
                return last + 2;
            }
        } else {
            return 2;
        }
        n_max *= 2;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_values() {
        let cases = [
            (0, 1.0, 0.765_197_686_557_966_6),
            (1, 1.0, 0.440_050_585_744_933_5),
            (2, 3.5, 0.458_629_184_194_307_5),
            (5, 10.0, -0.234_061_528_186_793_7),
            (0, 2.404_825_557_695_773, 0.0),
            (3, -2.0, -0.128_943_249_474_402_08),
        ];
        for (n, x, want) in cases {
            assert!((bessel_j(n, x) - want).abs() < 1e-14, "J_{n}({x}) = {}", bessel_j(n, x));
        }
        assert!((bessel_j(-3, 2.0) + bessel_j(3, 2.0)).abs() < 1e-16);
    }

    #[test]
    fn closure() {
        for x in [0.1, 0.9, 1.98, 2.4, 7.0, 31.0] {
            let j = bessel_j_all(sideband_count(x) + 40, x);
            let s = j[0] * j[0] + 2.0 * j[1..].iter().map(|v| v * v).sum::<f64>();
            assert!((s - 1.0).abs() < 1e-13, "{x}: {s}");
        }
    }

    #[test]
    fn truncation_tail() {
        for x in [0.0, 0.5, 1.98, 5.0] {
            let n = sideband_count(x);
            let j = bessel_j_all(n + 30, x);
            assert!(j[n + 1..].iter().all(|v| v * v < 1e-10));
        }
    }
}
