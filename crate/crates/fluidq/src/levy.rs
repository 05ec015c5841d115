//! Input-side primitives: positive jump-size laws and the net-input process.
//!
//! The cumulative input is a finite-activity subordinator
//! `X_t = a t + sum of i.i.d. positive jumps at Poisson(lambda_j) epochs`,
//! with Laplace exponent
//!
//! ```text
//! phi(theta) = -a theta + lambda_j (lst_B(theta) - 1),
//! E exp(-theta X_t) = exp(t phi(theta)).
//! ```
//!
//! Draining at constant service rate `r` gives the spectrally positive net
//! input `Y_t = X_t - r t` with exponent `varphi(theta) = phi(theta) + r theta`,
//! which is convex, vanishes at zero, and is strictly increasing whenever the
//! load `rho = a + lambda_j * E B` stays below `r`. Everything downstream
//! (steady-state transforms, busy periods, first passage) is written in terms
//! of `varphi` and its derivatives at zero.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance on `varphi` for the exponent inversion.
pub const INVERSE_VARPHI_TOL: f64 = 1e-12;
const INVERSE_VARPHI_MAX_ITER: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum Kind {
    Exponential { rate: f64 },
    Deterministic { value: f64 },
    Erlang { shape: u32, rate: f64 },
    Hyperexponential { weights: Vec<f64>, rates: Vec<f64> },
}

/// A positive jump-size law: the common families used for fluid input,
/// repair jumps and vacation jumps.
///
/// All parameters are validated at construction, so a value of this type is
/// always usable. The exposed surface is the Laplace–Stieltjes transform
/// (real and complex arguments), raw moments up to order three, exact
/// samplers, and a sampler for the stationary residual-life (excess) law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JumpDistribution {
    kind: Kind,
}

impl JumpDistribution {
    pub fn exponential(rate: f64) -> Result<Self> {
        if !(rate > 0.0) || !rate.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "exponential rate must be positive and finite, got {rate}"
            )));
        }
        Ok(Self { kind: Kind::Exponential { rate } })
    }

    pub fn deterministic(value: f64) -> Result<Self> {
        if !(value > 0.0) || !value.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "deterministic jump size must be positive and finite, got {value}"
            )));
        }
        Ok(Self { kind: Kind::Deterministic { value } })
    }

    pub fn erlang(shape: u32, rate: f64) -> Result<Self> {
        if shape == 0 {
            return Err(Error::InvalidParameter("erlang shape must be >= 1".into()));
        }
        if !(rate > 0.0) || !rate.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "erlang rate must be positive and finite, got {rate}"
            )));
        }
        Ok(Self { kind: Kind::Erlang { shape, rate } })
    }

    /// Mixture of exponentials; `weights` must sum to 1 within 1e-12.
    pub fn hyperexponential(weights: Vec<f64>, rates: Vec<f64>) -> Result<Self> {
        if weights.is_empty() || weights.len() != rates.len() {
            return Err(Error::InvalidParameter(
                "hyperexponential needs equally many weights and rates, at least one".into(),
            ));
        }
        if weights.iter().any(|w| !(*w > 0.0) || !w.is_finite()) {
            return Err(Error::InvalidParameter("hyperexponential weights must be positive".into()));
        }
        if rates.iter().any(|r| !(*r > 0.0) || !r.is_finite()) {
            return Err(Error::InvalidParameter("hyperexponential rates must be positive".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "hyperexponential weights must sum to 1 within 1e-12, got {total}"
            )));
        }
        Ok(Self { kind: Kind::Hyperexponential { weights, rates } })
    }

    /// Family name, for diagnostics and file headers.
    pub fn family(&self) -> &'static str {
        match self.kind {
            Kind::Exponential { .. } => "exponential",
            Kind::Deterministic { .. } => "deterministic",
            Kind::Erlang { .. } => "erlang",
            Kind::Hyperexponential { .. } => "hyperexponential",
        }
    }

    pub fn mean(&self) -> f64 {
        self.moment(1)
    }

    /// Raw moment `E Z^k` for `k` in 1..=3, computed in closed form.
    pub fn moment(&self, k: u32) -> f64 {
        assert!((1..=3).contains(&k), "moments supported for k in 1..=3");
        let kf = match k {
            1 => 1.0,
            2 => 2.0,
            _ => 6.0,
        }; // k!
        match &self.kind {
            Kind::Exponential { rate } => kf / rate.powi(k as i32),
            Kind::Deterministic { value } => value.powi(k as i32),
            Kind::Erlang { shape, rate } => {
                let n = f64::from(*shape);
                let rising: f64 = (0..k).map(|i| n + f64::from(i)).product();
                rising / rate.powi(k as i32)
            }
            Kind::Hyperexponential { weights, rates } => weights
                .iter()
                .zip(rates)
                .map(|(w, r)| w * kf / r.powi(k as i32))
                .sum(),
        }
    }

    /// Laplace–Stieltjes transform `E exp(-theta Z)`.
    ///
    /// Defined for all `theta >= 0`; small negative arguments are accepted as
    /// long as they stay above the family's abscissa of convergence (used
    /// internally by finite-difference checks).
    pub fn lst(&self, theta: f64) -> f64 {
        if theta == 0.0 {
            // Total mass, exactly one for every family (the hyperexponential
            // weight sum would otherwise carry float noise).
            return 1.0;
        }
        match &self.kind {
            Kind::Exponential { rate } => rate / (rate + theta),
            Kind::Deterministic { value } => (-theta * value).exp(),
            Kind::Erlang { shape, rate } => (rate / (rate + theta)).powi(*shape as i32),
            Kind::Hyperexponential { weights, rates } => weights
                .iter()
                .zip(rates)
                .map(|(w, r)| w * r / (r + theta))
                .sum(),
        }
    }

    /// LST on the complex half-plane, for transform inversion.
    pub fn lst_complex(&self, s: Complex64) -> Complex64 {
        if s == Complex64::new(0.0, 0.0) {
            return Complex64::new(1.0, 0.0);
        }
        match &self.kind {
            Kind::Exponential { rate } => rate / (rate + s),
            Kind::Deterministic { value } => (-s * *value).exp(),
            Kind::Erlang { shape, rate } => (rate / (rate + s)).powu(*shape),
            Kind::Hyperexponential { weights, rates } => weights
                .iter()
                .zip(rates)
                .map(|(w, r)| w * r / (r + s))
                .sum(),
        }
    }

    /// `E[Z exp(-theta Z)]`, the negated LST derivative.
    pub fn mean_exp_weighted(&self, theta: f64) -> f64 {
        match &self.kind {
            Kind::Exponential { rate } => rate / (rate + theta).powi(2),
            Kind::Deterministic { value } => value * (-theta * value).exp(),
            Kind::Erlang { shape, rate } => {
                f64::from(*shape) * rate.powi(*shape as i32)
                    / (rate + theta).powi(*shape as i32 + 1)
            }
            Kind::Hyperexponential { weights, rates } => weights
                .iter()
                .zip(rates)
                .map(|(w, r)| w * r / (r + theta).powi(2))
                .sum(),
        }
    }

    /// LST of the stationary residual-life law, `(1 - lst(theta)) / (theta E Z)`.
    pub fn residual_lst(&self, theta: f64) -> f64 {
        let m1 = self.mean();
        if theta.abs() < 1e-6 {
            // Taylor branch: `1 - lst` cancels catastrophically here.
            return 1.0 - theta * self.moment(2) / (2.0 * m1)
                + theta * theta * self.moment(3) / (6.0 * m1);
        }
        (1.0 - self.lst(theta)) / (theta * m1)
    }

    /// Complex-argument counterpart of [`residual_lst`](Self::residual_lst).
    pub fn residual_lst_complex(&self, s: Complex64) -> Complex64 {
        let m1 = self.mean();
        if s.norm() < 1e-8 {
            return Complex64::new(1.0, 0.0) - s * (self.moment(2) / (2.0 * m1));
        }
        (1.0 - self.lst_complex(s)) / (s * m1)
    }

    /// Moment `E V^k` (k in 1..=2) of the stationary residual-life law.
    pub fn residual_moment(&self, k: u32) -> f64 {
        match k {
            1 => self.moment(2) / (2.0 * self.mean()),
            2 => self.moment(3) / (3.0 * self.mean()),
            _ => panic!("residual moments supported for k in 1..=2"),
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        match &self.kind {
            Kind::Exponential { rate } => 1.0 - (-rate * x).exp(),
            Kind::Deterministic { value } => {
                if x >= *value {
                    1.0
                } else {
                    0.0
                }
            }
            Kind::Erlang { shape, rate } => {
                // 1 - exp(-rx) sum_{j<k} (rx)^j / j!
                let rx = rate * x;
                let mut term = 1.0;
                let mut sum = 1.0;
                for j in 1..*shape {
                    term *= rx / f64::from(j);
                    sum += term;
                }
                1.0 - (-rx).exp() * sum
            }
            Kind::Hyperexponential { weights, rates } => weights
                .iter()
                .zip(rates)
                .map(|(w, r)| w * (1.0 - (-r * x).exp()))
                .sum(),
        }
    }

    /// Exact draw from the law.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match &self.kind {
            Kind::Exponential { rate } => Exp::new(*rate).unwrap().sample(rng),
            Kind::Deterministic { value } => *value,
            Kind::Erlang { shape, rate } => {
                let exp = Exp::new(*rate).unwrap();
                (0..*shape).map(|_| exp.sample(rng)).sum()
            }
            Kind::Hyperexponential { weights, rates } => {
                let i = pick_component(weights, rng);
                Exp::new(rates[i]).unwrap().sample(rng)
            }
        }
    }

    /// Draw from the stationary residual-life (excess) law, density
    /// `P(Z > x) / E Z`, using the closed form for each family:
    /// exponential is memoryless, deterministic `d` gives Uniform(0, d),
    /// Erlang(k, r) picks a stage uniformly and draws Erlang(stage, r),
    /// and the hyperexponential reweights components by `w_i / rate_i`.
    pub fn sample_residual<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match &self.kind {
            Kind::Exponential { rate } => Exp::new(*rate).unwrap().sample(rng),
            Kind::Deterministic { value } => rng.gen::<f64>() * value,
            Kind::Erlang { shape, rate } => {
                let stage = rng.gen_range(1..=*shape);
                let exp = Exp::new(*rate).unwrap();
                (0..stage).map(|_| exp.sample(rng)).sum()
            }
            Kind::Hyperexponential { weights, rates } => {
                let total: f64 = weights.iter().zip(rates).map(|(w, r)| w / r).sum();
                let biased: Vec<f64> =
                    weights.iter().zip(rates).map(|(w, r)| w / r / total).collect();
                let i = pick_component(&biased, rng);
                Exp::new(rates[i]).unwrap().sample(rng)
            }
        }
    }
}

fn pick_component<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return i;
        }
    }
    weights.len() - 1
}

/// The spectrally positive net input `Y_t = X_t - r t`: subordinator drift,
/// compound-Poisson jumps and a constant service rate.
///
/// Construction enforces `rho = drift + jump_rate * E B < service_rate` and
/// `service_rate > drift`, so the exponent `varphi` is strictly increasing on
/// the nonnegative half-line and has a well-defined inverse there.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetInputModel {
    drift: f64,
    jump_rate: f64,
    jump_law: JumpDistribution,
    service_rate: f64,
}

impl NetInputModel {
    pub fn new(
        drift: f64,
        jump_rate: f64,
        jump_law: JumpDistribution,
        service_rate: f64,
    ) -> Result<Self> {
        if !(drift >= 0.0) || !drift.is_finite() {
            return Err(Error::InvalidParameter(format!("drift must be >= 0, got {drift}")));
        }
        if !(jump_rate >= 0.0) || !jump_rate.is_finite() {
            return Err(Error::InvalidParameter(format!("jump rate must be >= 0, got {jump_rate}")));
        }
        if !(service_rate > 0.0) || !service_rate.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "service rate must be > 0, got {service_rate}"
            )));
        }
        if service_rate - drift <= 0.0 {
            return Err(Error::Unstable(format!(
                "service rate {service_rate} must exceed drift {drift} for the fluid to drain"
            )));
        }
        let rho = drift + jump_rate * jump_law.mean();
        if rho >= service_rate {
            return Err(Error::Unstable(format!(
                "load rho = drift + jump_rate * mean_jump = {rho} must stay below service rate {service_rate}"
            )));
        }
        Ok(Self { drift, jump_rate, jump_law, service_rate })
    }

    pub fn drift(&self) -> f64 {
        self.drift
    }

    pub fn jump_rate(&self) -> f64 {
        self.jump_rate
    }

    pub fn jump_law(&self) -> &JumpDistribution {
        &self.jump_law
    }

    pub fn service_rate(&self) -> f64 {
        self.service_rate
    }

    /// Offered load `rho = drift + jump_rate * E B`.
    pub fn rho(&self) -> f64 {
        self.drift + self.jump_rate * self.jump_law.mean()
    }

    /// Slope at which the workload drains between jumps, `r - a`.
    pub fn drain_rate(&self) -> f64 {
        self.service_rate - self.drift
    }

    /// Subordinator exponent `phi(theta) <= 0` for `theta >= 0`.
    pub fn phi(&self, theta: f64) -> Result<f64> {
        if theta < 0.0 {
            return Err(Error::Domain(format!("phi requires theta >= 0, got {theta}")));
        }
        Ok(self.phi_at(theta))
    }

    pub(crate) fn phi_at(&self, theta: f64) -> f64 {
        -self.drift * theta + self.jump_rate * (self.jump_law.lst(theta) - 1.0)
    }

    /// Net-input exponent `varphi(theta) = phi(theta) + r theta`.
    pub fn varphi(&self, theta: f64) -> Result<f64> {
        if theta < 0.0 {
            return Err(Error::Domain(format!("varphi requires theta >= 0, got {theta}")));
        }
        Ok(self.varphi_at(theta))
    }

    pub(crate) fn varphi_at(&self, theta: f64) -> f64 {
        self.phi_at(theta) + self.service_rate * theta
    }

    pub fn phi_complex(&self, s: Complex64) -> Complex64 {
        -self.drift * s + self.jump_rate * (self.jump_law.lst_complex(s) - 1.0)
    }

    pub fn varphi_complex(&self, s: Complex64) -> Complex64 {
        self.phi_complex(s) + self.service_rate * s
    }

    /// First derivative `varphi'(theta)`, in closed form.
    pub fn varphi_deriv(&self, theta: f64) -> f64 {
        self.service_rate - self.drift - self.jump_rate * self.jump_law.mean_exp_weighted(theta)
    }

    /// `(varphi'(0), varphi''(0), varphi'''(0))`:
    /// `(r - a - lambda_j m1, lambda_j m2, -lambda_j m3)`.
    pub fn varphi_derivatives_at_zero(&self) -> (f64, f64, f64) {
        let d1 = self.service_rate - self.drift - self.jump_rate * self.jump_law.mean();
        let d2 = self.jump_rate * self.jump_law.moment(2);
        let d3 = -self.jump_rate * self.jump_law.moment(3);
        (d1, d2, d3)
    }

    /// Unique `theta* > 0` with `varphi(theta*) = gamma`, for `gamma > 0`.
    ///
    /// Bracketing plus safeguarded Newton: the bracket `[0, hi]` is grown
    /// geometrically until it contains the root, Newton steps that leave the
    /// bracket fall back to bisection, and convergence means
    /// `|varphi(theta) - gamma| <= 1e-12`.
    pub fn inverse_varphi(&self, gamma: f64) -> Result<f64> {
        if !(gamma > 0.0) || !gamma.is_finite() {
            return Err(Error::Domain(format!("inverse_varphi requires gamma > 0, got {gamma}")));
        }
        let mut hi = gamma / self.drain_rate();
        if hi <= 0.0 || !hi.is_finite() {
            hi = 1.0;
        }
        for _ in 0..INVERSE_VARPHI_MAX_ITER {
            if self.varphi_at(hi) > gamma {
                break;
            }
            hi *= 2.0;
        }
        if self.varphi_at(hi) <= gamma {
            return Err(Error::Numerics(format!(
                "could not bracket varphi = {gamma}; varphi({hi}) = {}",
                self.varphi_at(hi)
            )));
        }
        let mut lo = 0.0_f64;
        let mut x = hi / 2.0;
        for _ in 0..INVERSE_VARPHI_MAX_ITER {
            let f = self.varphi_at(x) - gamma;
            if f.abs() <= INVERSE_VARPHI_TOL {
                return Ok(x);
            }
            if f > 0.0 {
                hi = x;
            } else {
                lo = x;
            }
            let slope = self.varphi_deriv(x);
            let newton = x - f / slope;
            x = if slope > 0.0 && newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
            if hi - lo <= 4.0 * f64::EPSILON * hi {
                // Bracket collapsed to machine precision.
                return Ok(x);
            }
        }
        Err(Error::Numerics(format!("inverse_varphi did not converge for gamma = {gamma}")))
    }
}
