//! Scattering coefficient `a(zeta)` of the focusing Zakharov-Shabat system
//!
//! ```text
//! psi' = [[-i zeta, q], [-q*, i zeta]] psi,   psi(-T) = (1, 0) e^{i zeta T}
//! a(zeta) = psi_1(T) e^{i zeta T},            b(zeta) = psi_2(T) e^{-i zeta T}
//! ```
//!
//! Both schemes propagate the Jost solution with the free factor `e^{-i zeta tau}`
//! divided out of every step matrix, so the state stays bounded for any
//! `Im zeta >= 0` and `a` is read off directly from the first component.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::SampledSignal;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };
const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };
const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Dense 2x2 complex matrix, row major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2 {
    pub m: [[Complex64; 2]; 2],
}

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2 { m: [[ONE, ZERO], [ZERO, ONE]] };
    pub const ZERO: Mat2 = Mat2 { m: [[ZERO, ZERO], [ZERO, ZERO]] };

    pub fn new(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Self {
        Mat2 { m: [[a, b], [c, d]] }
    }

    pub fn det(&self) -> Complex64 {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    pub fn mul(&self, o: &Mat2) -> Mat2 {
        let a = &self.m;
        let b = &o.m;
        Mat2::new(
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        )
    }

    pub fn apply(&self, v: [Complex64; 2]) -> [Complex64; 2] {
        [
            self.m[0][0] * v[0] + self.m[0][1] * v[1],
            self.m[1][0] * v[0] + self.m[1][1] * v[1],
        ]
    }

    pub fn add(&self, o: &Mat2) -> Mat2 {
        let mut r = *self;
        for i in 0..2 {
            for j in 0..2 {
                r.m[i][j] += o.m[i][j];
            }
        }
        r
    }

    pub fn scale(&self, s: Complex64) -> Mat2 {
        let mut r = *self;
        for row in r.m.iter_mut() {
            for x in row.iter_mut() {
                *x *= s;
            }
        }
        r
    }
}

/// Counts of transfer-matrix propagations, shared by all workers of one run.
#[derive(Debug, Default)]
pub struct EvalCounter {
    al_calls: AtomicU64,
    hi_order_calls: AtomicU64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalCounts {
    pub al_calls: u64,
    pub hi_order_calls: u64,
}

impl std::ops::Sub for EvalCounts {
    type Output = EvalCounts;
    fn sub(self, rhs: EvalCounts) -> EvalCounts {
        EvalCounts {
            al_calls: self.al_calls - rhs.al_calls,
            hi_order_calls: self.hi_order_calls - rhs.hi_order_calls,
        }
    }
}

impl EvalCounter {
    pub fn new() -> Arc<Self> {
        Arc::new(Self::default())
    }

    pub fn snapshot(&self) -> EvalCounts {
        EvalCounts {
            al_calls: self.al_calls.load(Ordering::Relaxed),
            hi_order_calls: self.hi_order_calls.load(Ordering::Relaxed),
        }
    }

    fn bump_al(&self) {
        self.al_calls.fetch_add(1, Ordering::Relaxed);
    }

    fn bump_hi(&self) {
        self.hi_order_calls.fetch_add(1, Ordering::Relaxed);
    }
}

/// Whether Ablowitz-Ladik step matrices are divided by `sqrt(1 + |Q_n|^2)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlVariant {
    #[default]
    Normalized,
    Raw,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScatterEval {
    pub zeta: Complex64,
    pub a: Complex64,
    /// Only reported for real `zeta`, where `e^{-2 i zeta T}` is bounded.
    pub b: Option<Complex64>,
    pub a_prime: Option<Complex64>,
}

/// Unscaled AL step matrix `[[z, Q], [-Q*, 1/z]]`, `z = e^{-i zeta tau}`, `Q = q tau`.
pub fn al_transfer_matrix(q: Complex64, zeta: Complex64, tau: f64, variant: AlVariant) -> Mat2 {
    let z = (-I * zeta * tau).exp();
    let big_q = q * tau;
    let t = Mat2::new(z, big_q, -big_q.conj(), z.inv());
    match variant {
        AlVariant::Raw => t,
        AlVariant::Normalized => t.scale(Complex64::new(1.0 / (1.0 + big_q.norm_sqr()).sqrt(), 0.0)),
    }
}

/// Largest `Im zeta` for which `e^{Im zeta * T}` is representable.
pub fn overflow_limit(half_width: f64) -> f64 {
    f64::MAX.ln() / half_width
}

// Gauss-Legendre nodes on [0, 1] and the commutator-free weights.
const SQRT3_6: f64 = 0.288_675_134_594_812_9; // sqrt(3) / 6
const GAUSS_C1: f64 = 0.5 - SQRT3_6;
const GAUSS_C2: f64 = 0.5 + SQRT3_6;
const CF_ALPHA1: f64 = 0.25 - SQRT3_6;
const CF_ALPHA2: f64 = 0.25 + SQRT3_6;

/// Points in the Lagrange stencil for potentials at the Gauss nodes. Quintic
/// interpolation keeps the interpolation error well below the O(tau^4) error
/// of the propagator, which a cubic stencil does not for chirped pulses.
const STENCIL: usize = 6;

/// `q` at `t_n + c tau`, `0 <= c <= 1`, from a centered stencil that turns
/// one-sided at the ends of the grid.
fn interpolate(samples: &[Complex64], n: usize, c: f64) -> Complex64 {
    let k = STENCIL.min(samples.len());
    let start = (n + 1).saturating_sub(k / 2).min(samples.len() - k);
    let x = (n - start) as f64 + c;
    (0..k)
        .map(|i| {
            let w: f64 = (0..k).filter(|&j| j != i).map(|j| (x - j as f64) / (i as f64 - j as f64)).product();
            samples[start + i] * w
        })
        .sum()
}

/// `sinh(sqrt(mu)) / sqrt(mu)` and `cosh(sqrt(mu))`.
fn cosh_sinhc(mu: Complex64) -> (Complex64, Complex64) {
    if mu.norm() < 1e-3 {
        let c = ONE + mu * (0.5 + mu * (1.0 / 24.0 + mu / 720.0));
        let s = ONE + mu * (1.0 / 6.0 + mu * (1.0 / 120.0 + mu / 5040.0));
        (c, s)
    } else {
        let l = mu.sqrt();
        (l.cosh(), l.sinh() / l)
    }
}

/// d/dmu of `sinh(sqrt(mu)) / sqrt(mu)`.
fn sinhc_prime(mu: Complex64, c: Complex64, s: Complex64) -> Complex64 {
    if mu.norm() < 0.1 {
        // sum_k k mu^{k-1} / (2k+1)!
        let mut term_fact = 6.0; // (2k+1)! for k = 1
        let mut acc = ZERO;
        let mut pow = ONE;
        for k in 1..=9u32 {
            acc += pow * (k as f64 / term_fact);
            pow *= mu;
            let k1 = 2.0 * k as f64 + 2.0;
            term_fact *= k1 * (k1 + 1.0);
        }
        acc
    } else {
        (c - s) / (mu * 2.0)
    }
}

/// `e^{i zeta tau / 2} exp(X)` for `X = [[-i theta, p], [-p*, i theta]]`, `theta = zeta tau / 2`,
/// together with its derivative in `zeta` when requested.
fn scaled_half_step(theta: Complex64, gain: Complex64, p: Complex64, tau: f64, derivative: bool) -> (Mat2, Mat2) {
    let x11 = -I * theta;
    let x = Mat2::new(x11, p, -p.conj(), -x11);
    let mu = x11 * x11 - p * p.conj();
    let (c, s) = cosh_sinhc(mu);
    let e = Mat2::new(c + s * x11, s * p, -s * p.conj(), c - s * x11).scale(gain);
    if !derivative {
        return (e, Mat2::ZERO);
    }
    let dmu = -theta * tau;
    let dc = s * 0.5;
    let ds = sinhc_prime(mu, c, s);
    let dx = Mat2::new(-I * (tau / 2.0), ZERO, ZERO, I * (tau / 2.0));
    let dexp = Mat2::IDENTITY
        .scale(dc * dmu)
        .add(&x.scale(ds * dmu))
        .add(&dx.scale(s));
    let de = e.scale(I * (tau / 2.0)).add(&dexp.scale(gain));
    (e, de)
}

/// Closed-form `a(zeta)` of a rectangle of height `A` on `[-T_pulse, T_pulse]`.
pub fn a_exact_rectangle(amplitude: f64, pulse_half_width: f64, zeta: Complex64) -> Complex64 {
    let delta = (zeta * zeta + amplitude * amplitude).sqrt();
    let x = delta * (2.0 * pulse_half_width);
    // sin(x) / delta = 2 T_pulse sinc(x), even in delta
    let sinc = if x.norm() < 1e-4 {
        ONE - x * x / 6.0 + x * x * x * x / 120.0
    } else {
        x.sin() / x
    };
    let sin_over_delta = sinc * (2.0 * pulse_half_width);
    (I * zeta * (2.0 * pulse_half_width)).exp() * (x.cos() - I * zeta * sin_over_delta)
}

/// Precomputed per-signal data for repeated `a(zeta)` evaluations.
///
/// Evaluations are pure and take `&self`, so one `Scatterer` can be shared
/// across threads; the attached counter is atomic.
#[derive(Debug, Clone)]
pub struct Scatterer<'s> {
    signal: &'s SampledSignal,
    /// `Q_n = q(t_n) tau` for the `M` intervals.
    kicks: Vec<Complex64>,
    /// Product of `1 / sqrt(1 + |Q_n|^2)` over all intervals.
    al_norm: f64,
    variant: AlVariant,
    /// Commutator-free weighted potentials `(alpha1 q1 + alpha2 q2, alpha2 q1 + alpha1 q2) * tau`.
    cf_potentials: Vec<(Complex64, Complex64)>,
    counter: Arc<EvalCounter>,
}

impl<'s> Scatterer<'s> {
    pub fn new(signal: &'s SampledSignal, variant: AlVariant, counter: Arc<EvalCounter>) -> Self {
        let tau = signal.tau();
        let samples = signal.samples();
        let m = signal.intervals();
        let kicks: Vec<Complex64> = samples[..m].iter().map(|q| q * tau).collect();
        let log_norm: f64 = kicks.iter().map(|k| -0.5 * k.norm_sqr().ln_1p()).sum();
        let cf_potentials = (0..m)
            .map(|n| {
                let q1 = interpolate(samples, n, GAUSS_C1);
                let q2 = interpolate(samples, n, GAUSS_C2);
                (
                    (q1 * CF_ALPHA1 + q2 * CF_ALPHA2) * tau,
                    (q1 * CF_ALPHA2 + q2 * CF_ALPHA1) * tau,
                )
            })
            .collect();
        Scatterer { signal, kicks, al_norm: log_norm.exp(), variant, cf_potentials, counter }
    }

    /// Scatterer with a private counter and the default AL variant.
    pub fn standalone(signal: &'s SampledSignal) -> Self {
        Self::new(signal, AlVariant::Normalized, EvalCounter::new())
    }

    pub fn signal(&self) -> &SampledSignal {
        self.signal
    }

    pub fn counter(&self) -> &Arc<EvalCounter> {
        &self.counter
    }

    pub fn variant(&self) -> AlVariant {
        self.variant
    }

    fn check_zeta(&self, zeta: Complex64) -> Result<()> {
        let limit = overflow_limit(self.signal.half_width());
        if !(zeta.re.is_finite() && zeta.im.is_finite()) {
            return Err(Error::InvalidParameter(format!("non-finite zeta {zeta}")));
        }
        if zeta.im > limit {
            return Err(Error::UpperBoundExceeded { im: zeta.im, limit, half_width: self.signal.half_width() });
        }
        Ok(())
    }

    fn jost_b(&self, zeta: Complex64, v2: Complex64) -> Option<Complex64> {
        (zeta.im == 0.0).then(|| (-I * zeta * (2.0 * self.signal.half_width())).exp() * v2)
    }

    /// Second-order Ablowitz-Ladik evaluation.
    pub fn a_fast(&self, zeta: Complex64) -> Result<ScatterEval> {
        self.check_zeta(zeta)?;
        self.counter.bump_al();
        let tau = self.signal.tau();
        let w = (I * zeta * tau).exp();
        let w2 = w * w;
        let (mut v1, mut v2) = (ONE, ZERO);
        for &k in &self.kicks {
            let n1 = v1 + k * w * v2;
            let n2 = w2 * v2 - k.conj() * w * v1;
            v1 = n1;
            v2 = n2;
        }
        if self.variant == AlVariant::Normalized {
            v1 *= self.al_norm;
            v2 *= self.al_norm;
        }
        Ok(ScatterEval { zeta, a: v1, b: self.jost_b(zeta, v2), a_prime: None })
    }

    /// Fourth-order commutator-free Magnus evaluation, optionally with `a'(zeta)`
    /// propagated through the variational system.
    pub fn a_accurate(&self, zeta: Complex64, want_derivative: bool) -> Result<ScatterEval> {
        self.check_zeta(zeta)?;
        self.counter.bump_hi();
        let tau = self.signal.tau();
        let theta = zeta * (tau / 2.0);
        let gain = (I * theta).exp();
        let mut v = [ONE, ZERO];
        let mut dv = [ZERO, ZERO];
        for &(p_late, p_early) in &self.cf_potentials {
            let (f_late, df_late) = scaled_half_step(theta, gain, p_late, tau, want_derivative);
            let (f_early, df_early) = scaled_half_step(theta, gain, p_early, tau, want_derivative);
            let step = f_late.mul(&f_early);
            if want_derivative {
                let dstep = df_late.mul(&f_early).add(&f_late.mul(&df_early));
                let a = dstep.apply(v);
                let b = step.apply(dv);
                dv = [a[0] + b[0], a[1] + b[1]];
            }
            v = step.apply(v);
        }
        Ok(ScatterEval {
            zeta,
            a: v[0],
            b: self.jost_b(zeta, v[1]),
            a_prime: want_derivative.then_some(dv[0]),
        })
    }

    /// `b(xi)` on the real axis from the AL scheme.
    pub fn b_coefficient(&self, xi: f64) -> Result<Complex64> {
        let eval = self.a_fast(Complex64::new(xi, 0.0))?;
        Ok(eval.b.expect("b is defined on the real axis"))
    }
}

/// Evaluation of an analytic function whose zeros are sought.
pub trait Analytic: Sync {
    fn value(&self, z: Complex64) -> Result<Complex64>;

    fn value_and_derivative(&self, _z: Complex64) -> Result<(Complex64, Complex64)> {
        Err(Error::NoDerivative)
    }
}

/// `a(zeta)` from the AL scheme.
pub struct FastA<'a, 's>(pub &'a Scatterer<'s>);

/// `a(zeta)` and `a'(zeta)` from the fourth-order scheme.
pub struct AccurateA<'a, 's>(pub &'a Scatterer<'s>);

impl Analytic for FastA<'_, '_> {
    fn value(&self, z: Complex64) -> Result<Complex64> {
        Ok(self.0.a_fast(z)?.a)
    }
}

impl Analytic for AccurateA<'_, '_> {
    fn value(&self, z: Complex64) -> Result<Complex64> {
        Ok(self.0.a_accurate(z, false)?.a)
    }

    fn value_and_derivative(&self, z: Complex64) -> Result<(Complex64, Complex64)> {
        let e = self.0.a_accurate(z, true)?;
        Ok((e.a, e.a_prime.expect("derivative requested")))
    }
}

/// Closure-backed [`Analytic`] for synthetic test functions.
pub struct FnAnalytic<F, D = fn(Complex64) -> Complex64> {
    f: F,
    df: Option<D>,
}

impl<F> FnAnalytic<F>
where
    F: Fn(Complex64) -> Complex64 + Sync,
{
    pub fn new(f: F) -> Self {
        FnAnalytic { f, df: None }
    }
}

impl<F, D> FnAnalytic<F, D>
where
    F: Fn(Complex64) -> Complex64 + Sync,
    D: Fn(Complex64) -> Complex64 + Sync,
{
    pub fn with_derivative(f: F, df: D) -> Self {
        FnAnalytic { f, df: Some(df) }
    }
}

impl<F, D> Analytic for FnAnalytic<F, D>
where
    F: Fn(Complex64) -> Complex64 + Sync,
    D: Fn(Complex64) -> Complex64 + Sync,
{
    fn value(&self, z: Complex64) -> Result<Complex64> {
        Ok((self.f)(z))
    }

    fn value_and_derivative(&self, z: Complex64) -> Result<(Complex64, Complex64)> {
        match &self.df {
            Some(df) => Ok(((self.f)(z), df(z))),
            None => Err(Error::NoDerivative),
        }
    }
}

/// Wraps an evaluator and counts calls; used for synthetic functions.
pub struct Counted<'a, A: ?Sized> {
    pub inner: &'a A,
    pub calls: AtomicU64,
}

impl<'a, A: Analytic + ?Sized> Counted<'a, A> {
    pub fn new(inner: &'a A) -> Self {
        Counted { inner, calls: AtomicU64::new(0) }
    }

    pub fn calls(&self) -> u64 {
        self.calls.load(Ordering::Relaxed)
    }
}

impl<A: Analytic + ?Sized> Analytic for Counted<'_, A> {
    fn value(&self, z: Complex64) -> Result<Complex64> {
        self.calls.fetch_add(1, Ordering::Relaxed);
        self.inner.value(z)
    }

    fn value_and_derivative(&self, z: Complex64) -> Result<(Complex64, Complex64)> {
        self.calls.fetch_add(1, Ordering::Relaxed);
        self.inner.value_and_derivative(z)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::{make_oversoliton, make_rectangle};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// Exact a(zeta) of A sech(t) for integer A (reflectionless).
    fn sech_exact(amplitude: u32, zeta: Complex64) -> Complex64 {
        (0..amplitude)
            .map(|k| {
                let eta = amplitude as f64 - 0.5 - k as f64;
                (zeta - c(0.0, eta)) / (zeta + c(0.0, eta))
            })
            .product()
    }

    #[test]
    fn interpolation_is_exact_for_quintics() {
        let p = |t: f64| c(t.powi(5) - 2.0 * t * t + 1.0, 0.5 * t.powi(3) - t);
        let samples: Vec<Complex64> = (0..10).map(|n| p(n as f64)).collect();
        for n in [0, 1, 4, 8] {
            for off in [GAUSS_C1, GAUSS_C2] {
                let got = interpolate(&samples, n, off);
                let want = p(n as f64 + off);
                assert!((got - want).norm() < 1e-9 * want.norm().max(1.0), "n {n}: {got} vs {want}");
            }
        }
        // Short grids fall back to the full sample set.
        let short = [c(1.0, 0.0), c(3.0, 0.0)];
        assert!((interpolate(&short, 0, 0.25) - c(1.5, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn zero_signal_is_free() {
        let s = SampledSignal::zeros(10.0, 256).unwrap();
        let sc = Scatterer::standalone(&s);
        for im in [0.0, 0.5, 3.0, 10.0] {
            for re in [-2.0, 0.0, 1.5] {
                let z = c(re, im);
                assert!((sc.a_fast(z).unwrap().a - 1.0).norm() < 1e-12);
                let acc = sc.a_accurate(z, true).unwrap();
                assert!((acc.a - 1.0).norm() < 1e-12);
                assert!(acc.a_prime.unwrap().norm() < 1e-12);
            }
        }
        assert_eq!(sc.a_fast(c(0.3, 0.0)).unwrap().b, Some(ZERO));
        assert_eq!(sc.b_coefficient(1.0).unwrap(), ZERO);
    }

    #[test]
    fn al_determinant() {
        let q = c(3.0, -1.0);
        let tau = 0.01;
        let z = c(0.7, 0.4);
        let raw = al_transfer_matrix(q, z, tau, AlVariant::Raw);
        assert!((raw.det() - (1.0 + (q * tau).norm_sqr())).norm() < 1e-14);
        let norm = al_transfer_matrix(q, z, tau, AlVariant::Normalized);
        assert!((norm.det() - 1.0).norm() < 1e-14);
    }

    #[test]
    fn al_matches_explicit_matrix_product() {
        let s = make_oversoliton(2.0, 1.0, 8.0, 64).unwrap();
        let sc = Scatterer::standalone(&s);
        let z = c(0.3, 0.6);
        let mut v = [Complex64::new((I * z * 8.0).exp().re, (I * z * 8.0).exp().im), ZERO];
        for q in &s.samples()[..64] {
            v = al_transfer_matrix(*q, z, s.tau(), AlVariant::Normalized).apply(v);
        }
        let a = v[0] * (I * z * 8.0).exp();
        assert!((a - sc.a_fast(z).unwrap().a).norm() < 1e-12 * a.norm().max(1.0));
    }

    #[test]
    fn overflow_guard() {
        let s = SampledSignal::zeros(30.0, 64).unwrap();
        let sc = Scatterer::standalone(&s);
        let limit = overflow_limit(30.0);
        assert!(sc.a_fast(c(0.0, limit * 0.99)).is_ok());
        assert!(matches!(sc.a_fast(c(0.0, limit * 1.01)), Err(Error::UpperBoundExceeded { .. })));
        assert!(sc.a_accurate(c(0.0, limit * 1.01), false).is_err());
    }

    #[test]
    fn rectangle_closed_form_limits() {
        assert!((a_exact_rectangle(10.0, 1.0, ZERO) - 20f64.cos()).norm() < 1e-14);
        assert!((a_exact_rectangle(1e-12, 1.0, c(0.4, 0.3)) - 1.0).norm() < 1e-12);
        // Delta -> 0 at zeta = iA
        let near = a_exact_rectangle(2.0, 1.0, c(0.0, 2.0 + 1e-9));
        let at = a_exact_rectangle(2.0, 1.0, c(0.0, 2.0));
        assert!((near - at).norm() < 1e-7);
        assert!(at.re.is_finite());
    }

    #[test]
    fn rectangle_closed_form_matches_fine_grid() {
        let s = make_rectangle(10.0, 1.0, 1.0, 1 << 16).unwrap();
        let sc = Scatterer::standalone(&s);
        let z = c(0.0, 10.0);
        let exact = a_exact_rectangle(10.0, 1.0, z);
        let num = sc.a_accurate(z, false).unwrap().a;
        assert!((num - exact).norm() < 1e-6 * exact.norm().max(1.0), "{num} vs {exact}");
    }

    #[test]
    fn unimodular_on_real_axis() {
        let s = make_oversoliton(2.3, 1.7, 20.0, 1 << 12).unwrap();
        let sc = Scatterer::standalone(&s);
        for xi in [-3.0, -0.4, 0.0, 0.9, 2.5] {
            let e = sc.a_fast(c(xi, 0.0)).unwrap();
            let total = e.a.norm_sqr() + e.b.unwrap().norm_sqr();
            assert!((total - 1.0).abs() < 1e-12, "xi {xi}: {total}");
            let e = sc.a_accurate(c(xi, 0.0), false).unwrap();
            let total = e.a.norm_sqr() + e.b.unwrap().norm_sqr();
            assert!((total - 1.0).abs() < 1e-9, "xi {xi}: {total}");
        }
    }

    #[test]
    fn reflection_finite_at_origin_for_weak_pulse() {
        // Below A = 1/2 there is no eigenvalue; |rho(0)| = tan(pi A) for A sech(t).
        let s = make_oversoliton(0.3, 0.0, 30.0, 1 << 13).unwrap();
        let sc = Scatterer::standalone(&s);
        let e = sc.a_fast(ZERO).unwrap();
        let rho = e.b.unwrap() / e.a;
        let expected = (std::f64::consts::PI * 0.3).tan();
        assert!((rho.norm() - expected).abs() < 1e-4, "{}", rho.norm());
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let s = make_oversoliton(2.0, 3.0, 12.0, 1 << 10).unwrap();
        let sc = Scatterer::standalone(&s);
        for z in [c(0.2, 0.5), c(-1.0, 2.0), c(0.0, 0.01)] {
            let e = sc.a_accurate(z, true).unwrap();
            let h = 1e-5;
            let fd = (sc.a_accurate(z + h, false).unwrap().a - sc.a_accurate(z - h, false).unwrap().a) / (2.0 * h);
            let fd_im = (sc.a_accurate(z + c(0.0, h), false).unwrap().a
                - sc.a_accurate(z - c(0.0, h), false).unwrap().a)
                / c(0.0, 2.0 * h);
            let d = e.a_prime.unwrap();
            assert!((d - fd).norm() < 1e-7 * d.norm().max(1.0), "{d} vs {fd}");
            assert!((d - fd_im).norm() < 1e-7 * d.norm().max(1.0), "{d} vs {fd_im}");
        }
    }

    #[test]
    fn accurate_beats_fast_at_true_zero() {
        let s = make_oversoliton(5.0, 0.0, 30.0, 1 << 10).unwrap();
        let sc = Scatterer::standalone(&s);
        let z = c(0.0, 2.5);
        let fast = sc.a_fast(z).unwrap().a.norm();
        let acc = sc.a_accurate(z, false).unwrap().a.norm();
        assert!(acc < fast, "{acc} vs {fast}");
    }

    fn observed_order(errors: &[f64]) -> Vec<f64> {
        errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
    }

    #[test]
    fn sech_convergence_orders() {
        let z = c(0.3, 1.0);
        let exact = sech_exact(1, z);
        let mut fast = Vec::new();
        let mut acc = Vec::new();
        for p in 9..=12 {
            let s = make_oversoliton(1.0, 0.0, 30.0, 1 << p).unwrap();
            let sc = Scatterer::standalone(&s);
            fast.push((sc.a_fast(z).unwrap().a - exact).norm());
            acc.push((sc.a_accurate(z, false).unwrap().a - exact).norm());
        }
        for o in observed_order(&fast) {
            assert!((o - 2.0).abs() < 0.4, "fast orders {:?}", observed_order(&fast));
        }
        for o in observed_order(&acc) {
            assert!((o - 4.0).abs() < 0.6, "accurate orders {:?} errors {:?}", observed_order(&acc), acc);
        }
    }

    #[test]
    fn counter_tracks_calls() {
        let s = SampledSignal::zeros(1.0, 8).unwrap();
        let counter = EvalCounter::new();
        let sc = Scatterer::new(&s, AlVariant::Normalized, counter.clone());
        sc.a_fast(ZERO).unwrap();
        sc.a_fast(ZERO).unwrap();
        sc.a_accurate(ZERO, true).unwrap();
        assert_eq!(counter.snapshot(), EvalCounts { al_calls: 2, hi_order_calls: 1 });
    }
}
