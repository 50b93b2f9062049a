//! Shipped coefficient sets.

use serde::{Deserialize, Serialize};

use super::drift::{build_martingale_drift, MartingaleDrift};
use super::RdeSystem;
use crate::error::{Error, Result};

/// `sign(z)|z|^γ`, the extension of `z^γ` used for negative excursions.
pub fn signed_pow(z: f64, gamma: f64) -> f64 {
    if z >= 0.0 {
        z.powf(gamma)
    } else {
        -(-z).powf(gamma)
    }
}

/// The quadratic volatility `v(z) = √(a(z − b)² + c)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadraticVol {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl QuadraticVol {
    /// Requires `a ≥ 0` and `c > 0`, so `v` never vanishes.
    pub fn new(a: f64, b: f64, c: f64) -> Result<Self> {
        if !(a >= 0.0 && a.is_finite()) {
            return Err(Error::param("a", format!("{a} must be non-negative")));
        }
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::param("c", format!("{c} must be positive")));
        }
        if !b.is_finite() {
            return Err(Error::param("b", "must be finite"));
        }
        Ok(QuadraticVol { a, b, c })
    }

    #[inline]
    pub fn variance(&self, z: f64) -> f64 {
        let d = z - self.b;
        self.a * d * d + self.c
    }

    #[inline]
    pub fn value(&self, z: f64) -> f64 {
        self.variance(z).sqrt()
    }

    /// `v'(z) = a(z − b)/v(z)`.
    #[inline]
    pub fn derivative(&self, z: f64) -> f64 {
        self.a * (z - self.b) / self.value(z)
    }
}

/// Parameters of the two-factor test system
///
/// ```text
/// dS = S v(Z) dW + g dt
/// dZ = σ₀ Z^{γ₀} dX + σ₁ Z^{γ₁} dW + (α + β Z) dt
/// ```
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestSystemParams {
    pub sigma0: f64,
    pub sigma1: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma0: f64,
    pub gamma1: f64,
    pub s0: f64,
    pub z0: f64,
}

impl Default for TestSystemParams {
    fn default() -> Self {
        TestSystemParams {
            sigma0: 0.1,
            sigma1: 0.1,
            a: 0.1,
            b: 0.1,
            c: 0.1,
            alpha: 0.1,
            beta: 0.1,
            gamma0: 1.0,
            gamma1: 1.5,
            s0: 1.0,
            z0: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QHestonTest {
    pub params: TestSystemParams,
    vol: QuadraticVol,
}

impl QHestonTest {
    pub fn new(params: TestSystemParams) -> Result<Self> {
        let vol = QuadraticVol::new(params.a, params.b, params.c)?;
        if !(params.s0 > 0.0) {
            return Err(Error::param("s0", "must be positive"));
        }
        Ok(QHestonTest { params, vol })
    }

    pub fn vol(&self) -> QuadraticVol {
        self.vol
    }
}

impl RdeSystem for QHestonTest {
    fn dim_v(&self) -> usize {
        1
    }
    fn s0(&self) -> f64 {
        self.params.s0
    }
    fn v0(&self) -> Vec<f64> {
        vec![self.params.z0]
    }
    #[inline]
    fn sigma(&self, s: f64, v: &[f64], _: f64) -> f64 {
        s * self.vol.value(v[0])
    }
    #[inline]
    fn tau(&self, _: f64, v: &[f64], _: f64, out: &mut [f64]) {
        out[0] = self.params.sigma0 * signed_pow(v[0], self.params.gamma0);
    }
    #[inline]
    fn varsigma(&self, _: f64, v: &[f64], _: f64, out: &mut [f64]) {
        out[0] = self.params.sigma1 * signed_pow(v[0], self.params.gamma1);
    }
    #[inline]
    fn drift_v(&self, _: f64, v: &[f64], _: f64, out: &mut [f64]) {
        out[0] = self.params.alpha + self.params.beta * v[0];
    }
    #[inline]
    fn sigma_gradient(&self, s: f64, v: &[f64], _: f64, dv: &mut [f64]) -> Option<f64> {
        dv[0] = s * self.vol.derivative(v[0]);
        Some(self.vol.value(v[0]))
    }
}

/// Price drift of the test system in closed form:
/// `−½ S [σ₁ a(Z − b) Z^{γ₁} / v(Z) + v(Z)²]`.
pub fn printed_test_drift(p: &TestSystemParams, s: f64, z: f64) -> f64 {
    let vol = QuadraticVol {
        a: p.a,
        b: p.b,
        c: p.c,
    };
    -0.5 * s
        * (p.sigma1 * p.a * (z - p.b) * signed_pow(z, p.gamma1) / vol.value(z) + vol.variance(z))
}

/// Test system with the martingale drift.
pub fn qheston_test_system(params: TestSystemParams) -> Result<MartingaleDrift<QHestonTest>> {
    build_martingale_drift(QHestonTest::new(params)?)
}

/// Volatility factor of the quadratic Heston pricing model,
/// `dZ = λθ dt + λη v(Z) dX`, with the price on top.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QHestonPricing {
    pub vol: QuadraticVol,
    pub theta: f64,
    pub eta: f64,
    pub lambda: f64,
    pub s0: f64,
    pub z0: f64,
}

impl QHestonPricing {
    pub fn new(
        vol: QuadraticVol,
        theta: f64,
        eta: f64,
        lambda: f64,
        s0: f64,
        z0: f64,
    ) -> Result<Self> {
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(Error::param("eta", format!("{eta} must be positive")));
        }
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::param("lambda", format!("{lambda} must be positive")));
        }
        if !(s0 > 0.0) {
            return Err(Error::param("s0", "must be positive"));
        }
        if !theta.is_finite() || !z0.is_finite() {
            return Err(Error::param("theta", "theta and z0 must be finite"));
        }
        Ok(QHestonPricing {
            vol,
            theta,
            eta,
            lambda,
            s0,
            z0,
        })
    }
}

impl RdeSystem for QHestonPricing {
    fn dim_v(&self) -> usize {
        1
    }
    fn s0(&self) -> f64 {
        self.s0
    }
    fn v0(&self) -> Vec<f64> {
        vec![self.z0]
    }
    #[inline]
    fn sigma(&self, s: f64, v: &[f64], _: f64) -> f64 {
        s * self.vol.value(v[0])
    }
    #[inline]
    fn tau(&self, _: f64, v: &[f64], _: f64, out: &mut [f64]) {
        out[0] = self.lambda * self.eta * self.vol.value(v[0]);
    }
    #[inline]
    fn varsigma(&self, _: f64, _: &[f64], _: f64, out: &mut [f64]) {
        out[0] = 0.0;
    }
    #[inline]
    fn drift_v(&self, _: f64, _: &[f64], _: f64, out: &mut [f64]) {
        out[0] = self.lambda * self.theta;
    }
    #[inline]
    fn sigma_gradient(&self, s: f64, v: &[f64], _: f64, dv: &mut [f64]) -> Option<f64> {
        dv[0] = s * self.vol.derivative(v[0]);
        Some(self.vol.value(v[0]))
    }
}

pub fn qheston_pricing_system(sys: QHestonPricing) -> Result<MartingaleDrift<QHestonPricing>> {
    build_martingale_drift(sys)
}

/// `dS = σ̄ S dW` with an inert volatility factor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlackScholes {
    pub sigma: f64,
    pub s0: f64,
}

impl RdeSystem for BlackScholes {
    fn dim_v(&self) -> usize {
        1
    }
    fn s0(&self) -> f64 {
        self.s0
    }
    fn v0(&self) -> Vec<f64> {
        vec![0.0]
    }
    fn sigma(&self, s: f64, _: &[f64], _: f64) -> f64 {
        self.sigma * s
    }
    fn tau(&self, _: f64, _: &[f64], _: f64, out: &mut [f64]) {
        out[0] = 0.0;
    }
    fn varsigma(&self, _: f64, _: &[f64], _: f64, out: &mut [f64]) {
        out[0] = 0.0;
    }
    fn sigma_gradient(&self, _: f64, _: &[f64], _: f64, dv: &mut [f64]) -> Option<f64> {
        dv[0] = 0.0;
        Some(self.sigma)
    }
}

pub fn bs_sanity_system(sigma: f64, s0: f64) -> Result<MartingaleDrift<BlackScholes>> {
    if !(sigma >= 0.0 && s0 > 0.0) {
        return Err(Error::param("sigma", "need sigma ≥ 0 and s0 > 0"));
    }
    build_martingale_drift(BlackScholes { sigma, s0 })
}

/// Named system presets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    QhestonTest,
    QhestonPricing,
    BsSanity,
}

impl Preset {
    pub fn name(self) -> &'static str {
        match self {
            Preset::QhestonTest => "qheston-test",
            Preset::QhestonPricing => "qheston-pricing",
            Preset::BsSanity => "bs-sanity",
        }
    }
}

impl std::str::FromStr for Preset {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "qheston-test" => Ok(Preset::QhestonTest),
            "qheston-pricing" => Ok(Preset::QhestonPricing),
            "bs-sanity" => Ok(Preset::BsSanity),
            _ => Err(Error::param("preset", format!("unknown preset `{s}`"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn built_drift_matches_closed_form() {
        for gamma1 in [1.0, 1.5] {
            let p = TestSystemParams {
                gamma1,
                ..Default::default()
            };
            let sys = qheston_test_system(p).unwrap();
            for (s, z) in [(1.0, 1.0), (0.7, 0.3), (1.4, -0.2), (2.0, 2.5)] {
                let built = sys.drift_s(s, &[z], 0.0);
                let closed = printed_test_drift(&p, s, z);
                assert!(
                    (built - closed).abs() <= 1e-14 * closed.abs().max(1.0),
                    "{s} {z}"
                );
            }
        }
    }

    #[test]
    fn black_scholes_drift() {
        let sys = bs_sanity_system(0.2, 1.0).unwrap();
        assert!((sys.drift_s(1.5, &[0.0], 0.0) + 0.5 * 0.04 * 1.5).abs() < 1e-15);
    }

    #[test]
    fn signed_pow_is_odd() {
        assert_eq!(signed_pow(4.0, 1.5), 8.0);
        assert_eq!(signed_pow(-4.0, 1.5), -8.0);
        assert_eq!(signed_pow(0.0, 1.5), 0.0);
    }

    #[test]
    fn bad_vol_rejected() {
        assert!(QuadraticVol::new(0.1, 0.0, 0.0).is_err());
        assert!(QuadraticVol::new(-0.1, 0.0, 0.1).is_err());
        assert!(QuadraticVol::new(0.0, 0.0, 0.1).is_ok());
    }

    #[test]
    fn preset_names_round_trip() {
        for p in [
            Preset::QhestonTest,
            Preset::QhestonPricing,
            Preset::BsSanity,
        ] {
            assert_eq!(p.name().parse::<Preset>().unwrap(), p);
        }
    }
}
