//! Finite-difference derivatives on centred stencils.

use num_complex::Complex64;

/// Fornberg weights for the derivatives `0..=order` at 0 on the nodes `z`.
pub(crate) fn fornberg_weights(order: usize, z: &[f64]) -> Vec<Vec<f64>> {
    let n = z.len();
    let mut c = vec![vec![0.0; order + 1]; n];
    let mut c1 = 1.0;
    let mut c4 = z[0];
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(order);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = z[i];
        for j in 0..i {
            let c3 = z[i] - z[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] *= c4 / c3;
        }
        c1 = c2;
    }
    (0..=order).map(|k| (0..n).map(|i| c[i][k]).collect()).collect()
}

/// Derivatives `f^{(k)}(x0)`, `k = 0..=order`, from a centred stencil of
/// `2 half + 1` points with spacing `h`.
pub(crate) fn derivatives(
    f: impl Fn(f64) -> Complex64,
    x0: f64,
    h: f64,
    order: usize,
    half: usize,
) -> Vec<Complex64> {
    let z: Vec<f64> = (0..=2 * half).map(|i| (i as f64 - half as f64) * h).collect();
    let w = fornberg_weights(order, &z);
    let vals: Vec<Complex64> = z.iter().map(|&dz| f(x0 + dz)).collect();
    w.iter()
        .map(|row| row.iter().zip(&vals).map(|(&c, &v)| v * c).sum())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classic_stencils() {
        let w = fornberg_weights(2, &[-1.0, 0.0, 1.0]);
        assert_eq!(w[1], vec![-0.5, 0.0, 0.5]);
        assert_eq!(w[2], vec![1.0, -2.0, 1.0]);
    }

    #[test]
    fn smooth_function_derivatives() {
        let d = derivatives(|x| Complex64::new(x.exp(), 0.0), 0.3, 0.05, 4, 6);
        for v in d {
            assert!((v.re - 0.3f64.exp()).abs() < 1e-7, "{v}");
        }
    }
}
