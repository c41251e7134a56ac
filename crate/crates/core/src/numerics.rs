//! Small numerical helpers: log-log slope fits, adaptive quadrature and
//! compensated summation.

use crate::error::{invalid, Error, Result};

/// Residuals at or below this level are treated as rounding noise.
pub const NOISE_FLOOR: f64 = 1e-12;

/// Least-squares slope of `log(residual)` against `log(scale)`.
pub fn fit_loglog_slope(scales: &[f64], residuals: &[f64]) -> Result<f64> {
    fit_loglog_slope_with_floor(scales, residuals, NOISE_FLOOR)
}

pub fn fit_loglog_slope_with_floor(scales: &[f64], residuals: &[f64], floor: f64) -> Result<f64> {
    if scales.len() != residuals.len() {
        return Err(invalid("scales and residuals differ in length"));
    }
    if scales.len() < 2 {
        return Err(invalid("a slope needs at least two scales"));
    }
    if let Some((s, r)) = scales.iter().zip(residuals).find(|(_, r)| !(**r > floor)) {
        return Err(Error::ScaleRange {
            floor,
            detail: format!("residual {r:e} at scale {s}; increase the scales"),
        });
    }
    if scales.iter().any(|s| !(*s > 0.0)) {
        return Err(invalid("scales must be positive"));
    }
    let xs: Vec<f64> = scales.iter().map(|s| s.ln()).collect();
    let ys: Vec<f64> = residuals.iter().map(|r| r.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(invalid("scales must not all coincide"));
    }
    Ok(sxy / sxx)
}

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

fn gauss_kronrod_15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for (j, (&x, &w)) in XGK.iter().zip(&WGK).take(7).enumerate() {
        let dx = half * x;
        let pair = f(center - dx) + f(center + dx);
        kronrod += w * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

/// Adaptive Gauss-Kronrod (7/15) quadrature to an absolute tolerance.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, abs_tol: f64) -> f64 {
    fn recurse<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
        let (value, err) = gauss_kronrod_15(f, a, b);
        if err <= tol || depth == 0 {
            return value;
        }
        let mid = 0.5 * (a + b);
        recurse(f, a, mid, 0.5 * tol, depth - 1) + recurse(f, mid, b, 0.5 * tol, depth - 1)
    }
    recurse(&f, a, b, abs_tol, 40)
}

/// Neumaier compensated sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = Self::default();
        for x in iter {
            s.add(x);
        }
        s
    }
}

/// Mean and standard error of the mean, accumulated in index order.
pub fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().copied().collect::<CompensatedSum>().value() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let ss = xs
        .iter()
        .map(|x| (x - mean).powi(2))
        .collect::<CompensatedSum>()
        .value();
    (mean, (ss / (n - 1.0) / n).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_power_law_slope() {
        let scales = [0.02, 0.04, 0.08, 0.16];
        let res: Vec<f64> = scales.iter().map(|s: &f64| 3.0 * s.powi(5)).collect();
        assert!((fit_loglog_slope(&scales, &res).unwrap() - 5.0).abs() < 1e-12);
    }

    #[test]
    fn noise_floor_is_reported() {
        let err = fit_loglog_slope(&[0.1, 0.2], &[1e-15, 1e-10]).unwrap_err();
        assert!(matches!(err, Error::ScaleRange { .. }));
        assert!(fit_loglog_slope(&[0.1], &[1.0]).is_err());
    }

    #[test]
    fn quadrature_of_smooth_functions() {
        let v = integrate(|x| x.sin(), 0.0, std::f64::consts::PI, 1e-12);
        assert!((v - 2.0).abs() < 1e-12);
        let v = integrate(|x| (-x * x).exp(), -8.0, 8.0, 1e-12);
        assert!((v - std::f64::consts::PI.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn compensated_sum_beats_naive() {
        let mut xs = vec![1.0];
        xs.extend(std::iter::repeat(1e-16).take(10_000));
        let s: CompensatedSum = xs.iter().copied().collect();
        assert!((s.value() - (1.0 + 1e-12)).abs() < 1e-18);
    }

    #[test]
    fn stderr_of_constant_is_zero() {
        let (m, se) = mean_and_stderr(&[2.0; 10]);
        assert_eq!(m, 2.0);
        assert_eq!(se, 0.0);
    }
}
