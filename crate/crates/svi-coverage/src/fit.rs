//! Curve fitting for indicator-vs-interval series: polynomial, power, and
//! logarithm fits via (transformed) least squares, and a penalized cubic
//! smoothing spline whose roughness penalty is chosen by generalized
//! cross-validation over a fixed log-spaced candidate set. All fitted
//! forms differentiate analytically; [`find_intersection`] locates the
//! first crossing of two derivative curves.

use nalgebra::{DMatrix, DVector};

use crate::error::FitError;

/// Supported fit families.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurveKind {
    Polynomial(usize),
    Power,
    Logarithm,
    SmoothingSpline,
}

impl CurveKind {
    pub fn as_str(&self) -> String {
        match self {
            CurveKind::Polynomial(d) => format!("polynomial{d}"),
            CurveKind::Power => "power".to_string(),
            CurveKind::Logarithm => "logarithm".to_string(),
            CurveKind::SmoothingSpline => "smoothing-spline".to_string(),
        }
    }

    pub fn parse(s: &str) -> Option<CurveKind> {
        match s {
            "power" => Some(CurveKind::Power),
            "logarithm" | "log" => Some(CurveKind::Logarithm),
            "smoothing-spline" | "spline" | "gam" => Some(CurveKind::SmoothingSpline),
            _ => s
                .strip_prefix("polynomial")
                .and_then(|d| d.parse().ok())
                .map(CurveKind::Polynomial),
        }
    }
}

/// Natural cubic spline through knots `xs` with values `ys` and second
/// derivatives `m` at the knots (`m` is zero at both ends). Evaluation
/// extrapolates linearly beyond the knot range.
#[derive(Debug, Clone, PartialEq)]
pub struct NaturalSpline {
    xs: Vec<f64>,
    ys: Vec<f64>,
    m: Vec<f64>,
}

impl NaturalSpline {
    fn interval(&self, x: f64) -> usize {
        let n = self.xs.len();
        let i = self.xs.partition_point(|&k| k <= x);
        i.clamp(1, n - 1) - 1
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x <= self.xs[0] {
            return self.ys[0] + self.eval_deriv(self.xs[0]) * (x - self.xs[0]);
        }
        if x >= self.xs[n - 1] {
            return self.ys[n - 1] + self.eval_deriv(self.xs[n - 1]) * (x - self.xs[n - 1]);
        }
        let i = self.interval(x);
        let h = self.xs[i + 1] - self.xs[i];
        let a = self.xs[i + 1] - x;
        let b = x - self.xs[i];
        (a.powi(3) * self.m[i] + b.powi(3) * self.m[i + 1]) / (6.0 * h)
            + (self.ys[i] - self.m[i] * h * h / 6.0) * a / h
            + (self.ys[i + 1] - self.m[i + 1] * h * h / 6.0) * b / h
    }

    pub fn eval_deriv(&self, x: f64) -> f64 {
        let n = self.xs.len();
        let x = x.clamp(self.xs[0], self.xs[n - 1]);
        let i = self.interval(x);
        let h = self.xs[i + 1] - self.xs[i];
        let a = self.xs[i + 1] - x;
        let b = x - self.xs[i];
        (-3.0 * a * a * self.m[i] + 3.0 * b * b * self.m[i + 1]) / (6.0 * h)
            + (self.ys[i + 1] - self.ys[i]) / h
            - (self.m[i + 1] - self.m[i]) * h / 6.0
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Shape {
    /// Coefficients over the scaled basis t = (x - center) / scale.
    Poly {
        center: f64,
        scale: f64,
        coeffs: Vec<f64>,
    },
    /// y = a * x^b
    Power { a: f64, b: f64 },
    /// y = a + b * ln(x)
    Log { a: f64, b: f64 },
    Spline(NaturalSpline),
}

/// A fitted curve: evaluable on its domain, with an analytic derivative
/// and an R^2 computed on the original data scale.
#[derive(Debug, Clone, PartialEq)]
pub struct FittedCurve {
    pub kind: CurveKind,
    pub domain: (f64, f64),
    pub r2: f64,
    shape: Shape,
}

impl FittedCurve {
    pub fn eval(&self, x: f64) -> f64 {
        match &self.shape {
            Shape::Poly {
                center,
                scale,
                coeffs,
            } => eval_poly(coeffs, (x - center) / scale),
            Shape::Power { a, b } => a * x.powf(*b),
            Shape::Log { a, b } => a + b * x.ln(),
            Shape::Spline(s) => s.eval(x),
        }
    }

    /// Exact analytic derivative of the fitted form.
    pub fn derivative(&self) -> DerivativeCurve {
        let shape = match &self.shape {
            Shape::Poly {
                center,
                scale,
                coeffs,
            } => {
                let dcoeffs: Vec<f64> = (1..coeffs.len())
                    .map(|k| coeffs[k] * k as f64 / scale)
                    .collect();
                Shape::Poly {
                    center: *center,
                    scale: *scale,
                    coeffs: if dcoeffs.is_empty() { vec![0.0] } else { dcoeffs },
                }
            }
            Shape::Power { a, b } => Shape::Power {
                a: a * b,
                b: b - 1.0,
            },
            // d/dx (a + b ln x) = b / x, expressed as a power form.
            Shape::Log { a: _, b } => Shape::Power { a: *b, b: -1.0 },
            Shape::Spline(s) => Shape::Spline(s.clone()),
        };
        DerivativeCurve {
            domain: self.domain,
            shape,
            spline_as_derivative: matches!(self.shape, Shape::Spline(_)),
        }
    }

    /// Polynomial coefficients over the original x basis (constant first);
    /// `None` for non-polynomial kinds.
    pub fn polynomial_coefficients(&self) -> Option<Vec<f64>> {
        let Shape::Poly {
            center,
            scale,
            coeffs,
        } = &self.shape
        else {
            return None;
        };
        // Expand sum a_k ((x - c)/s)^k by repeated multiplication with
        // the linear factor (x/s - c/s).
        let lin = [-center / scale, 1.0 / scale];
        let mut out = vec![0.0; coeffs.len()];
        let mut factor = vec![1.0];
        for &a in coeffs {
            for (o, f) in out.iter_mut().zip(&factor) {
                *o += a * f;
            }
            factor = poly_mul(&factor, &lin);
        }
        Some(out)
    }
}

/// Derivative of a [`FittedCurve`], itself evaluable.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivativeCurve {
    pub domain: (f64, f64),
    shape: Shape,
    spline_as_derivative: bool,
}

impl DerivativeCurve {
    pub fn eval(&self, x: f64) -> f64 {
        match &self.shape {
            Shape::Spline(s) if self.spline_as_derivative => s.eval_deriv(x),
            Shape::Poly {
                center,
                scale,
                coeffs,
            } => eval_poly(coeffs, (x - center) / scale),
            Shape::Power { a, b } => a * x.powf(*b),
            Shape::Log { a, b } => a + b * x.ln(),
            Shape::Spline(s) => s.eval(x),
        }
    }
}

fn eval_poly(coeffs: &[f64], t: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * t + c)
}

fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn r2_original_scale(points: &[(f64, f64)], fitted: impl Fn(f64) -> f64) -> f64 {
    let n = points.len() as f64;
    let mean_y = points.iter().map(|(_, y)| y).sum::<f64>() / n;
    let sst: f64 = points.iter().map(|(_, y)| (y - mean_y).powi(2)).sum();
    let ssr: f64 = points.iter().map(|(x, y)| (y - fitted(*x)).powi(2)).sum();
    if sst == 0.0 {
        // Constant data: an exact reproduction counts as a perfect fit.
        return if ssr < 1e-12 { 1.0 } else { 0.0 };
    }
    1.0 - ssr / sst
}

/// Least-squares fit of `points` with the requested family.
///
/// Power and logarithm fits go through log-transformed linear regression
/// and require positive x (and, for power, positive y). R^2 is always
/// computed on the original scale. Needs at least 4 points.
pub fn fit_curve(points: &[(f64, f64)], kind: CurveKind) -> Result<FittedCurve, FitError> {
    if points.len() < 4 {
        return Err(FitError::TooFewPoints {
            needed: 4,
            got: points.len(),
        });
    }
    let mut sorted = points.to_vec();
    sorted.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let domain = (sorted[0].0, sorted[sorted.len() - 1].0);
    let shape = match kind {
        CurveKind::Polynomial(degree) => fit_polynomial(&sorted, degree)?,
        CurveKind::Power => fit_power(&sorted)?,
        CurveKind::Logarithm => fit_logarithm(&sorted)?,
        CurveKind::SmoothingSpline => Shape::Spline(fit_smoothing_spline(&sorted)?),
    };
    let mut curve = FittedCurve {
        kind,
        domain,
        r2: 0.0,
        shape,
    };
    curve.r2 = r2_original_scale(&sorted, |x| curve.eval(x));
    Ok(curve)
}

fn fit_polynomial(points: &[(f64, f64)], degree: usize) -> Result<Shape, FitError> {
    if points.len() < degree + 1 {
        return Err(FitError::TooFewPoints {
            needed: degree + 1,
            got: points.len(),
        });
    }
    let (lo, hi) = (points[0].0, points[points.len() - 1].0);
    let center = (lo + hi) / 2.0;
    let scale = if hi > lo { (hi - lo) / 2.0 } else { 1.0 };
    let m = points.len();
    let k = degree + 1;
    let mut vander = DMatrix::zeros(m, k);
    for (i, (x, _)) in points.iter().enumerate() {
        let t = (x - center) / scale;
        let mut p = 1.0;
        for j in 0..k {
            vander[(i, j)] = p;
            p *= t;
        }
    }
    let rhs = DVector::from_iterator(m, points.iter().map(|(_, y)| *y));
    let svd = vander.svd(true, true);
    let coeffs = svd
        .solve(&rhs, 1e-12)
        .map_err(|_| FitError::SingularSystem)?;
    Ok(Shape::Poly {
        center,
        scale,
        coeffs: coeffs.iter().copied().collect(),
    })
}

fn fit_power(points: &[(f64, f64)]) -> Result<Shape, FitError> {
    if points.iter().any(|(x, _)| *x <= 0.0) {
        return Err(FitError::NonPositiveX { kind: "power" });
    }
    if points.iter().any(|(_, y)| *y <= 0.0) {
        return Err(FitError::NonPositiveY);
    }
    let lx: Vec<f64> = points.iter().map(|(x, _)| x.ln()).collect();
    let ly: Vec<f64> = points.iter().map(|(_, y)| y.ln()).collect();
    let ols = crate::stats::ols_fit(&lx, &ly)?;
    Ok(Shape::Power {
        a: ols.intercept.exp(),
        b: ols.slope,
    })
}

fn fit_logarithm(points: &[(f64, f64)]) -> Result<Shape, FitError> {
    if points.iter().any(|(x, _)| *x <= 0.0) {
        return Err(FitError::NonPositiveX { kind: "logarithm" });
    }
    let lx: Vec<f64> = points.iter().map(|(x, _)| x.ln()).collect();
    let y: Vec<f64> = points.iter().map(|(_, y)| *y).collect();
    let ols = crate::stats::ols_fit(&lx, &y)?;
    Ok(Shape::Log {
        a: ols.intercept,
        b: ols.slope,
    })
}

/// Penalized natural cubic smoothing spline (minimizes RSS + lambda *
/// integral of f''^2, knots at the data points). The penalty lambda is
/// selected by generalized cross-validation over a fixed log-spaced
/// candidate set scaled by the cube of the mean knot spacing.
fn fit_smoothing_spline(points: &[(f64, f64)]) -> Result<NaturalSpline, FitError> {
    let n = points.len();
    for w in points.windows(2) {
        if w[1].0 <= w[0].0 {
            return Err(FitError::NonIncreasingX);
        }
    }
    let xs: Vec<f64> = points.iter().map(|(x, _)| *x).collect();
    let ys = DVector::from_iterator(n, points.iter().map(|(_, y)| *y));
    let h: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
    let ni = n - 2;

    // Green-Silverman banded forms, assembled dense (series are short).
    let mut qt = DMatrix::zeros(ni, n);
    let mut r = DMatrix::zeros(ni, ni);
    for j in 0..ni {
        qt[(j, j)] = 1.0 / h[j];
        qt[(j, j + 1)] = -1.0 / h[j] - 1.0 / h[j + 1];
        qt[(j, j + 2)] = 1.0 / h[j + 1];
        r[(j, j)] = (h[j] + h[j + 1]) / 3.0;
        if j + 1 < ni {
            r[(j, j + 1)] = h[j + 1] / 6.0;
            r[(j + 1, j)] = h[j + 1] / 6.0;
        }
    }
    let a = &qt * qt.transpose();
    let qty = &qt * &ys;

    let mean_h = h.iter().sum::<f64>() / h.len() as f64;
    let lambda_scale = mean_h.powi(3);
    let mut best: Option<(f64, f64)> = None; // (gcv, lambda)
    for k in -8..=8 {
        let lambda = 10f64.powi(k) * lambda_scale;
        let m = &r + &a * lambda;
        let Some(lu) = m.clone().lu().solve(&qty) else {
            continue;
        };
        let gamma = lu;
        let fitted = &ys - qt.transpose() * &gamma * lambda;
        let rss = (&ys - &fitted).norm_squared();
        let minv_a = match m.lu().solve(&a) {
            Some(s) => s,
            None => continue,
        };
        let tr_h = n as f64 - lambda * minv_a.trace();
        let denom = (n as f64 - tr_h).powi(2);
        if denom <= 0.0 {
            continue;
        }
        let gcv = n as f64 * rss / denom;
        if best.is_none_or(|(g, _)| gcv < g) {
            best = Some((gcv, lambda));
        }
    }
    let (_, lambda) = best.ok_or(FitError::SingularSystem)?;

    let m = &r + &a * lambda;
    let gamma = m.lu().solve(&qty).ok_or(FitError::SingularSystem)?;
    let fitted = &ys - qt.transpose() * &gamma * lambda;
    let mut second = vec![0.0; n];
    for j in 0..ni {
        second[j + 1] = gamma[j];
    }
    Ok(NaturalSpline {
        xs,
        ys: fitted.iter().copied().collect(),
        m: second,
    })
}

/// First crossing of two evaluable curves on `[lo, hi]`.
///
/// The difference d1 - d2 is scanned at `step` spacing (the endpoint `hi`
/// is always included); an exact zero at a grid point is returned as-is
/// (so coincident curves report `lo`), otherwise the first sign change is
/// refined by bisection to within 1e-3. `None` when no sign change exists.
pub fn find_intersection(
    d1: impl Fn(f64) -> f64,
    d2: impl Fn(f64) -> f64,
    domain: (f64, f64),
    step: f64,
) -> Option<f64> {
    let (lo, hi) = domain;
    assert!(lo < hi, "empty domain");
    assert!(step > 0.0, "step must be positive");
    let g = |x: f64| d1(x) - d2(x);
    let mut xs = Vec::new();
    let mut k = 0usize;
    loop {
        let x = lo + k as f64 * step;
        if x >= hi {
            xs.push(hi);
            break;
        }
        xs.push(x);
        k += 1;
    }
    let mut prev_x = xs[0];
    let mut prev_g = g(prev_x);
    if prev_g == 0.0 {
        return Some(prev_x);
    }
    for &x in &xs[1..] {
        let gx = g(x);
        if gx == 0.0 {
            return Some(x);
        }
        if prev_g * gx < 0.0 {
            let (mut a, mut b) = (prev_x, x);
            let mut ga = prev_g;
            while b - a > 1e-3 {
                let mid = (a + b) / 2.0;
                let gm = g(mid);
                if gm == 0.0 {
                    return Some(mid);
                }
                if ga * gm < 0.0 {
                    b = mid;
                } else {
                    a = mid;
                    ga = gm;
                }
            }
            return Some((a + b) / 2.0);
        }
        prev_x = x;
        prev_g = gx;
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn grid(lo: f64, hi: f64, n: usize, f: impl Fn(f64) -> f64) -> Vec<(f64, f64)> {
        (0..n)
            .map(|i| {
                let x = lo + (hi - lo) * i as f64 / (n - 1) as f64;
                (x, f(x))
            })
            .collect()
    }

    #[test]
    fn polynomial_recovers_exact_quadratic() {
        let pts = grid(10.0, 95.0, 18, |x| 2.0 - 0.03 * x + 0.0004 * x * x);
        let curve = fit_curve(&pts, CurveKind::Polynomial(2)).unwrap();
        assert!((curve.r2 - 1.0).abs() < 1e-9);
        let coeffs = curve.polynomial_coefficients().unwrap();
        assert_relative_eq!(coeffs[0], 2.0, epsilon = 1e-9);
        assert_relative_eq!(coeffs[1], -0.03, epsilon = 1e-9);
        assert_relative_eq!(coeffs[2], 0.0004, epsilon = 1e-9);
    }

    #[test]
    fn power_recovers_exponent() {
        let pts = grid(10.0, 95.0, 18, |x| x.powf(-0.5));
        let curve = fit_curve(&pts, CurveKind::Power).unwrap();
        let Shape::Power { a, b } = curve.shape else {
            panic!("expected power shape")
        };
        assert_relative_eq!(b, -0.5, epsilon = 1e-6);
        assert_relative_eq!(a, 1.0, epsilon = 1e-6);
        assert!((curve.r2 - 1.0).abs() < 1e-9);
    }

    #[test]
    fn logarithm_recovers_coefficients() {
        let pts = grid(10.0, 95.0, 18, |x| 3.0 - 0.7 * x.ln());
        let curve = fit_curve(&pts, CurveKind::Logarithm).unwrap();
        assert!((curve.r2 - 1.0).abs() < 1e-9);
        assert_relative_eq!(curve.eval(20.0), 3.0 - 0.7 * 20.0_f64.ln(), epsilon = 1e-9);
    }

    #[test]
    fn power_rejects_nonpositive_x() {
        let pts = vec![(0.0, 1.0), (1.0, 1.0), (2.0, 0.5), (3.0, 0.3)];
        assert!(matches!(
            fit_curve(&pts, CurveKind::Power),
            Err(FitError::NonPositiveX { .. })
        ));
    }

    #[test]
    fn spline_on_exact_line_is_the_line() {
        let pts = grid(10.0, 95.0, 18, |x| 1.0 - 0.01 * x);
        let curve = fit_curve(&pts, CurveKind::SmoothingSpline).unwrap();
        for i in 0..=50 {
            let x = 10.0 + 85.0 * i as f64 / 50.0;
            assert!((curve.eval(x) - (1.0 - 0.01 * x)).abs() < 1e-6);
        }
        let deriv = curve.derivative();
        for i in 0..=50 {
            let x = 10.0 + 85.0 * i as f64 / 50.0;
            assert!((deriv.eval(x) + 0.01).abs() < 1e-4);
        }
    }

    #[test]
    fn polynomial_interpolates_with_degree_n_minus_1() {
        let pts = vec![(1.0, 3.0), (2.0, -1.0), (4.0, 7.0), (5.0, 2.0), (8.0, 5.0)];
        let curve = fit_curve(&pts, CurveKind::Polynomial(4)).unwrap();
        assert!((curve.r2 - 1.0).abs() < 1e-9);
        for (x, y) in &pts {
            assert_relative_eq!(curve.eval(*x), *y, epsilon = 1e-7);
        }
    }

    #[test]
    fn derivative_examples() {
        // 3x^2 + 2x: derivative at 1 is 8.
        let pts = grid(0.0, 4.0, 9, |x| 3.0 * x * x + 2.0 * x);
        let curve = fit_curve(&pts, CurveKind::Polynomial(2)).unwrap();
        assert_relative_eq!(curve.derivative().eval(1.0), 8.0, epsilon = 1e-8);

        // a * x^b differentiates to a*b*x^(b-1).
        let pts = grid(1.0, 16.0, 16, |x| 5.0 * x.powf(0.5));
        let deriv = fit_curve(&pts, CurveKind::Power).unwrap().derivative();
        assert_relative_eq!(deriv.eval(4.0), 5.0 * 0.5 * 4.0_f64.powf(-0.5), epsilon = 1e-8);

        // y = a + b ln x differentiates to b / x.
        let pts = grid(1.0, 16.0, 16, |x| 2.0 + 3.0 * x.ln());
        let deriv = fit_curve(&pts, CurveKind::Logarithm).unwrap().derivative();
        assert_relative_eq!(deriv.eval(4.0), 3.0 / 4.0, epsilon = 1e-8);
    }

    #[test]
    fn intersection_of_constructed_pair() {
        // d1 = -0.01 constant, d2 = -0.02 + 0.0002 x: crossing at x = 50.
        let x = find_intersection(|_| -0.01, |x| -0.02 + 0.0002 * x, (10.0, 95.0), 0.1).unwrap();
        assert!((x - 50.0).abs() < 2e-3);
    }

    #[test]
    fn intersection_of_coincident_curves_is_lo() {
        let x = find_intersection(|x| x * 0.5, |x| x * 0.5, (10.0, 95.0), 0.1);
        assert_eq!(x, Some(10.0));
    }

    #[test]
    fn intersection_none_for_parallel() {
        let x = find_intersection(|_| 1.0, |_| 2.0, (10.0, 95.0), 0.1);
        assert_eq!(x, None);
    }

    #[test]
    fn too_few_points_rejected() {
        let pts = vec![(1.0, 1.0), (2.0, 2.0), (3.0, 3.0)];
        assert!(matches!(
            fit_curve(&pts, CurveKind::SmoothingSpline),
            Err(FitError::TooFewPoints { .. })
        ));
    }

    #[test]
    fn kind_string_roundtrip() {
        for kind in [
            CurveKind::Polynomial(3),
            CurveKind::Power,
            CurveKind::Logarithm,
            CurveKind::SmoothingSpline,
        ] {
            assert_eq!(CurveKind::parse(&kind.as_str()), Some(kind));
        }
    }
}
