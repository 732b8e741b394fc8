//! Adaptive Gauss–Kronrod (7/15) quadrature on finite and half-infinite
//! intervals.

// 15-point Kronrod abscissae (non-negative half) and weights, with the
// embedded 7-point Gauss weights for the odd-indexed abscissae.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Clone, Copy, Debug)]
pub struct QuadratureError {
    pub message: &'static str,
}

/// One Kronrod panel: returns `(kronrod, |kronrod - gauss|)`.
fn gk15(f: &mut impl FnMut(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let sum = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * sum;
        if j % 2 == 1 {
            gauss += WG[j / 2] * sum;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

/// Adaptive bisection with the 7/15 pair until the error estimate meets
/// `max(abs_tol, rel_tol·|I|)`.
pub fn integrate(
    mut f: impl FnMut(f64) -> f64,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> Result<f64, QuadratureError> {
    integrate_ref(&mut f, a, b, abs_tol, rel_tol)
}

fn integrate_ref(
    f: &mut impl FnMut(f64) -> f64,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> Result<f64, QuadratureError> {
    const MAX_PANELS: usize = 4000;
    let (v, e) = gk15(f, a, b);
    if !v.is_finite() {
        return Err(QuadratureError {
            message: "integrand is not finite",
        });
    }
    let mut panels = vec![(a, b, v, e)];
    loop {
        let total: f64 = panels.iter().map(|p| p.2).sum();
        let err: f64 = panels.iter().map(|p| p.3).sum();
        if err <= abs_tol.max(rel_tol * total.abs()) {
            return Ok(total);
        }
        if panels.len() >= MAX_PANELS {
            return Err(QuadratureError {
                message: "panel budget exhausted",
            });
        }
        let (worst, _) = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .expect("non-empty");
        let (pa, pb, _, _) = panels.swap_remove(worst);
        let mid = 0.5 * (pa + pb);
        if mid <= pa || mid >= pb {
            return Err(QuadratureError {
                message: "interval cannot be subdivided further",
            });
        }
        for (lo, hi) in [(pa, mid), (mid, pb)] {
            let (v, e) = gk15(f, lo, hi);
            if !v.is_finite() {
                return Err(QuadratureError {
                    message: "integrand is not finite",
                });
            }
            panels.push((lo, hi, v, e));
        }
    }
}

/// `∫_a^∞ f` over successive panels `[a + k·w, …]` of geometrically growing
/// width, stopping once a panel adds less than `tail_tol` of the accumulated
/// value and the integrand is falling off.
pub fn integrate_to_infinity(
    mut f: impl FnMut(f64) -> f64,
    a: f64,
    width: f64,
    rel_tol: f64,
    tail_tol: f64,
) -> Result<f64, QuadratureError> {
    const MAX_CHUNKS: usize = 400;
    let mut lo = a;
    let mut w = width;
    let mut acc = 0.0f64;
    let mut prev_chunk = f64::INFINITY;
    for k in 0..MAX_CHUNKS {
        let hi = lo + w;
        let chunk = integrate_ref(&mut f, lo, hi, 1e-300, rel_tol)?;
        acc += chunk;
        if !acc.is_finite() {
            return Err(QuadratureError {
                message: "accumulated integral overflowed",
            });
        }
        let small = chunk.abs() <= tail_tol * acc.abs();
        if k >= 2 && small && chunk.abs() <= prev_chunk.abs() {
            return Ok(acc);
        }
        prev_chunk = chunk;
        lo = hi;
        if k >= 4 {
            w *= 1.5;
        }
    }
    Err(QuadratureError {
        message: "tail did not decay",
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_exact() {
        let v = integrate(|x| x.powi(5) - 2.0 * x, 0.0, 2.0, 1e-14, 1e-14).unwrap();
        assert!((v - (64.0 / 6.0 - 4.0)).abs() < 1e-12);
    }

    #[test]
    fn gaussian_tail() {
        let v = integrate_to_infinity(|x| (-x * x).exp(), 0.0, 1.0, 1e-13, 1e-14).unwrap();
        assert!((v - std::f64::consts::PI.sqrt() / 2.0).abs() < 1e-12);
    }

    #[test]
    fn non_finite_integrand() {
        assert!(integrate(|_| f64::INFINITY, 0.0, 1.0, 1e-12, 1e-12).is_err());
    }
}
