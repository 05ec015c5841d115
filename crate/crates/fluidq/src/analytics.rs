//! Closed-form performance expressions for the queue, taking empirical
//! inputs where the theory references the breakdown embedding `(W^-, W^+)`
//! whose joint law is not otherwise determined.
//!
//! The centerpiece is the steady-state transform
//!
//! ```text
//! E exp(-theta W) = (theta varphi'(0) / varphi(theta))
//!     * [ p (lst-(theta) - lst+(theta)) / (theta E xi)
//!       + (1-p) (1 - lst_eta(theta)) / (theta E eta) ],
//! ```
//!
//! a product of the interruption-free (reflected) transform and the transform
//! of a mixture: with probability `p` a variable `U` with density
//! `(P(W^+ > x) - P(W^- > x)) / E xi`, otherwise the stationary residual life
//! of `eta`. Everything else here (moments, busy periods, transient and
//! correlation transforms, decomposition sampling) is derived from that
//! product form, with standard errors propagated whenever an empirical
//! embedding feeds a formula.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::levy::NetInputModel;
use crate::sim::{QueueModel, VacationMode};
use crate::validation::batch_mean_se;

/// A value together with its standard error (zero when fully analytic).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub se: f64,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Self { value, se: 0.0 }
    }
}

/// Empirical law of the workload just before and just after a repair jump,
/// held as paired samples in epoch order so that standard errors can use
/// batch means against serial correlation.
#[derive(Debug, Clone)]
pub struct BreakdownEmbedding {
    w_minus: Vec<f64>,
    w_plus: Vec<f64>,
}

impl BreakdownEmbedding {
    pub fn from_pairs(pairs: &[(f64, f64)]) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::InvalidParameter("embedding needs at least one pair".into()));
        }
        if pairs.iter().any(|&(m, p)| !(m >= 0.0) || !(p > m)) {
            return Err(Error::InvalidParameter(
                "embedding pairs must satisfy 0 <= W^- < W^+".into(),
            ));
        }
        Ok(Self {
            w_minus: pairs.iter().map(|p| p.0).collect(),
            w_plus: pairs.iter().map(|p| p.1).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.w_minus.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w_minus.is_empty()
    }

    pub fn w_minus(&self) -> &[f64] {
        &self.w_minus
    }

    pub fn w_plus(&self) -> &[f64] {
        &self.w_plus
    }

    pub fn lst_minus(&self, theta: f64) -> Estimate {
        mean_estimate(self.w_minus.iter().map(|w| (-theta * w).exp()))
    }

    pub fn lst_plus(&self, theta: f64) -> Estimate {
        mean_estimate(self.w_plus.iter().map(|w| (-theta * w).exp()))
    }

    /// Paired estimate of `E exp(-theta W^-) - E exp(-theta W^+)`; pairing
    /// keeps the standard error small because the two terms are strongly
    /// correlated.
    pub fn lst_diff(&self, theta: f64) -> Estimate {
        mean_estimate(self.diff_series(theta))
    }

    /// Delta-method estimate of `lst_diff(num_theta) / lst_diff(den_theta)`
    /// with the sample covariance of the two series taken into account.
    pub fn lst_diff_ratio(&self, num_theta: f64, den_theta: f64) -> Estimate {
        let xs: Vec<f64> = self.diff_series(num_theta).collect();
        let ys: Vec<f64> = self.diff_series(den_theta).collect();
        let n = xs.len() as f64;
        let mx = xs.iter().sum::<f64>() / n;
        let my = ys.iter().sum::<f64>() / n;
        let mut vx = 0.0;
        let mut vy = 0.0;
        let mut cxy = 0.0;
        for (x, y) in xs.iter().zip(&ys) {
            vx += (x - mx).powi(2);
            vy += (y - my).powi(2);
            cxy += (x - mx) * (y - my);
        }
        let denom = (n - 1.0).max(1.0);
        vx /= denom;
        vy /= denom;
        cxy /= denom;
        let r = mx / my;
        let rel_var = (vx / (mx * mx) + vy / (my * my) - 2.0 * cxy / (mx * my)) / n;
        Estimate { value: r, se: (r * r * rel_var).max(0.0).sqrt() }
    }

    fn diff_series(&self, theta: f64) -> impl Iterator<Item = f64> + '_ {
        self.w_minus
            .iter()
            .zip(&self.w_plus)
            .map(move |(m, p)| (-theta * m).exp() - (-theta * p).exp())
    }

    /// Raw moment `E (W^-)^k`, k in 1..=3.
    pub fn moment_minus(&self, k: u32) -> f64 {
        moment(&self.w_minus, k)
    }

    pub fn moment_plus(&self, k: u32) -> f64 {
        moment(&self.w_plus, k)
    }

    /// Paired estimate of `E (W^+)^k - E (W^-)^k`.
    pub fn moment_diff(&self, k: u32) -> Estimate {
        mean_estimate(
            self.w_minus
                .iter()
                .zip(&self.w_plus)
                .map(|(m, p)| p.powi(k as i32) - m.powi(k as i32)),
        )
    }

    pub fn mean_exp_weighted_minus(&self, s: f64) -> f64 {
        self.w_minus.iter().map(|w| w * (-s * w).exp()).sum::<f64>() / self.w_minus.len() as f64
    }

    pub fn mean_exp_weighted_plus(&self, s: f64) -> f64 {
        self.w_plus.iter().map(|w| w * (-s * w).exp()).sum::<f64>() / self.w_plus.len() as f64
    }
}

fn moment(xs: &[f64], k: u32) -> f64 {
    xs.iter().map(|x| x.powi(k as i32)).sum::<f64>() / xs.len() as f64
}

fn mean_estimate(series: impl Iterator<Item = f64>) -> Estimate {
    let xs: Vec<f64> = series.collect();
    let (mean, se) = batch_mean_se(&xs, 32);
    Estimate { value: mean, se }
}

/// `(p, lambda_R, lambda_V)`: the repair fraction and the long-run rates of
/// breakdowns and vacations, `lambda_R = p varphi'(0) / E xi` and
/// `lambda_V = (1-p) varphi'(0) / E eta`. Instability is rejected at model
/// construction, so `p < 1` always holds here.
pub fn rates_and_p(model: &QueueModel) -> (f64, f64, f64) {
    let (d1, _, _) = model.net().varphi_derivatives_at_zero();
    let p = model.p();
    let lambda_v = (1.0 - p) * d1 / model.eta_mean();
    (p, model.failure_rate(), lambda_v)
}

/// Long-run throughput of repair and vacation jumps per unit time:
/// `(p varphi'(0), (1-p) varphi'(0))`, the two ways the drained surplus
/// capacity is consumed.
pub fn throughput_limits(model: &QueueModel) -> (f64, f64) {
    let (d1, _, _) = model.net().varphi_derivatives_at_zero();
    let p = model.p();
    (p * d1, (1.0 - p) * d1)
}

/// Steady-state transform of the reflected (interruption-free) process:
/// `theta varphi'(0) / varphi(theta)`, extended by continuity to 1 at zero.
pub fn pk_lst(net: &NetInputModel, theta: f64) -> Result<f64> {
    if theta < 0.0 {
        return Err(Error::Domain(format!("pk_lst requires theta >= 0, got {theta}")));
    }
    Ok(pk_lst_at(net, theta))
}

pub(crate) fn pk_lst_at(net: &NetInputModel, theta: f64) -> f64 {
    let (d1, d2, d3) = net.varphi_derivatives_at_zero();
    if theta.abs() < 1e-6 {
        // Series branch: evaluating varphi directly here would cancel.
        let c1 = d2 / (2.0 * d1);
        let c2 = d3 / (6.0 * d1);
        return 1.0 - c1 * theta + (c1 * c1 - c2) * theta * theta;
    }
    theta * d1 / net.varphi_at(theta)
}

pub fn pk_lst_complex(net: &NetInputModel, s: Complex64) -> Complex64 {
    if s.norm() == 0.0 {
        return Complex64::new(1.0, 0.0);
    }
    let (d1, _, _) = net.varphi_derivatives_at_zero();
    s * d1 / net.varphi_complex(s)
}

/// Mean and variance of the reflected process from the exponent expansion:
/// mean `d2 / (2 d1)`, second moment `d2^2 / (2 d1^2) - d3 / (3 d1)`.
pub fn reflected_moments(net: &NetInputModel) -> (f64, f64) {
    let (d1, d2, d3) = net.varphi_derivatives_at_zero();
    let mean = d2 / (2.0 * d1);
    let second = d2 * d2 / (2.0 * d1 * d1) - d3 / (3.0 * d1);
    (mean, second - mean * mean)
}

/// Residual-life transform of the vacation jump, `(1 - lst_eta) / (theta E eta)`.
pub fn eta_residual_lst(model: &QueueModel, theta: f64) -> f64 {
    match model.vacation() {
        VacationMode::DirectEta(law) => law.residual_lst(theta),
        VacationMode::WorkDuringVacation(_) => {
            if theta.abs() < 1e-8 {
                1.0 - theta * model.eta_moment(2) / (2.0 * model.eta_mean())
                    + theta * theta * model.eta_moment(3) / (6.0 * model.eta_mean())
            } else {
                (1.0 - model.eta_lst(theta)) / (theta * model.eta_mean())
            }
        }
    }
}

pub fn eta_residual_lst_complex(model: &QueueModel, s: Complex64) -> Complex64 {
    match model.vacation() {
        VacationMode::DirectEta(law) => law.residual_lst_complex(s),
        VacationMode::WorkDuringVacation(_) => {
            if s.norm() < 1e-8 {
                Complex64::new(1.0, 0.0) - s * (model.eta_moment(2) / (2.0 * model.eta_mean()))
            } else {
                (1.0 - model.eta_lst_complex(s)) / (s * model.eta_mean())
            }
        }
    }
}

/// Transform of `U`, the repair contribution of the decomposition:
/// `(lst-(theta) - lst+(theta)) / (theta E xi)`.
pub fn lst_u(model: &QueueModel, emb: &BreakdownEmbedding, theta: f64) -> Estimate {
    let exi = model.repair_mean();
    let diff = emb.lst_diff(theta);
    Estimate { value: diff.value / (theta * exi), se: diff.se / (theta * exi) }
}

/// Steady-state transform of the workload `W` (the product form above).
///
/// For `p = 0` the result is fully explicit and the embedding is unused; for
/// `p > 0` an embedding is required and the returned standard error reflects
/// it. `theta = 0` is handled by the limit, which is exactly one.
pub fn steady_state_lst(
    model: &QueueModel,
    emb: Option<&BreakdownEmbedding>,
    theta: f64,
) -> Result<Estimate> {
    if theta < 0.0 {
        return Err(Error::Domain(format!("steady_state_lst requires theta >= 0, got {theta}")));
    }
    steady_state_lst_at(model, emb, theta)
}

// Shared with the moment-consistency check, which probes a symmetric finite
// difference across zero and therefore needs a slightly negative argument.
pub(crate) fn steady_state_lst_at(
    model: &QueueModel,
    emb: Option<&BreakdownEmbedding>,
    theta: f64,
) -> Result<Estimate> {
    let p = model.p();
    if theta == 0.0 {
        return Ok(Estimate::exact(1.0));
    }
    let pk = pk_lst_at(model.net(), theta);
    let vac_part = (1.0 - model.eta_lst(theta)) / (theta * model.eta_mean());
    if p == 0.0 {
        return Ok(Estimate::exact(pk * vac_part));
    }
    let emb = emb.ok_or_else(|| {
        Error::Usage("a breakdown embedding is required when the repair fraction p > 0".into())
    })?;
    let exi = model.repair_mean();
    let diff = emb.lst_diff(theta);
    let value = pk * (p * diff.value / (theta * exi) + (1.0 - p) * vac_part);
    let se = pk * p * diff.se / (theta * exi);
    Ok(Estimate { value, se })
}

/// Analytic steady-state transform on the complex half-plane, available only
/// when `p = 0` (empirical embeddings are never analytically continued).
pub fn steady_state_lst_complex(model: &QueueModel, s: Complex64) -> Result<Complex64> {
    if model.p() > 0.0 {
        return Err(Error::Usage(
            "complex continuation needs the fully analytic case p = 0".into(),
        ));
    }
    Ok(pk_lst_complex(model.net(), s) * eta_residual_lst_complex(model, s))
}

/// Steady-state mean and variance of `W`.
#[derive(Debug, Clone, Copy)]
pub struct Moments {
    pub mean: Estimate,
    pub variance: Estimate,
}

/// Mean and variance of `W` by exact differentiation of the product form.
///
/// The mean is
/// `d2/(2 d1) + p (E(W^+)^2 - E(W^-)^2) / (2 E xi) + (1-p) E eta^2 / (2 E eta)`.
/// The variance is the reflected-part variance plus the variance of the
/// mixture (repair contribution `U` with probability `p`, residual vacation
/// life `V` otherwise); computing the mixture variance as `E M^2 - (E M)^2`
/// keeps the `p (1-p) (EU - EV)^2` cross term automatically.
pub fn moments(model: &QueueModel, emb: Option<&BreakdownEmbedding>) -> Result<Moments> {
    let (r_mean, r_var) = reflected_moments(model.net());
    let p = model.p();
    let ev = model.eta_moment(2) / (2.0 * model.eta_mean());
    let ev2 = model.eta_moment(3) / (3.0 * model.eta_mean());
    if p == 0.0 {
        return Ok(Moments {
            mean: Estimate::exact(r_mean + ev),
            variance: Estimate::exact(r_var + ev2 - ev * ev),
        });
    }
    let emb = emb.ok_or_else(|| {
        Error::Usage("a breakdown embedding is required when the repair fraction p > 0".into())
    })?;
    let exi = model.repair_mean();
    let d2 = emb.moment_diff(2); // E(W+)^2 - E(W-)^2
    let d3 = emb.moment_diff(3); // E(W+)^3 - E(W-)^3
    let eu = d2.value / (2.0 * exi);
    let eu2 = d3.value / (3.0 * exi);
    let em = p * eu + (1.0 - p) * ev;
    let em2 = p * eu2 + (1.0 - p) * ev2;

    let mean = r_mean + em;
    let mean_se = p * d2.se / (2.0 * exi);

    let variance = r_var + em2 - em * em;
    // Delta method in (d2, d3); their covariance is left out, which is a
    // mild overestimate at these sample sizes.
    let dv_dd2 = -2.0 * em * p / (2.0 * exi);
    let dv_dd3 = p / (3.0 * exi);
    let var_se = ((dv_dd2 * d2.se).powi(2) + (dv_dd3 * d3.se).powi(2)).sqrt();

    Ok(Moments {
        mean: Estimate { value: mean, se: mean_se },
        variance: Estimate { value: variance, se: var_se },
    })
}

/// Alternative closed variance expression, kept for audit only.
///
/// It differs from [`moments`] in two ways: the workload part carries the
/// opposite sign (`d3/(3 d1) - (1/4)(d2/d1)^2` where exact differentiation
/// gives `(1/4)(d2/d1)^2 - d3/(3 d1)`), and the mixture cross term
/// `p (1-p)(EU - EV)^2` is absent. On a purely reflected configuration its
/// workload part evaluates to the negative of the true variance; the tests
/// assert that discrepancy rather than paper over it.
pub fn variance_alternate_form(
    model: &QueueModel,
    emb: Option<&BreakdownEmbedding>,
) -> Result<f64> {
    let p = model.p();
    let w_part = variance_alternate_form_reflected_part(model.net());
    let eeta = model.eta_mean();
    let vac_part =
        model.eta_moment(3) / (3.0 * eeta) - (model.eta_moment(2) / (2.0 * eeta)).powi(2);
    let rep_part = if p == 0.0 {
        0.0
    } else {
        let emb = emb.ok_or_else(|| {
            Error::Usage("a breakdown embedding is required when the repair fraction p > 0".into())
        })?;
        let exi = model.repair_mean();
        emb.moment_diff(3).value / (3.0 * exi) - (emb.moment_diff(2).value / (2.0 * exi)).powi(2)
    };
    Ok(w_part + (1.0 - p) * vac_part + p * rep_part)
}

/// Workload part of [`variance_alternate_form`]: `(1/3) d3/d1 - (1/4)(d2/d1)^2`.
pub fn variance_alternate_form_reflected_part(net: &NetInputModel) -> f64 {
    let (d1, d2, d3) = net.varphi_derivatives_at_zero();
    d3 / (3.0 * d1) - 0.25 * (d2 / d1).powi(2)
}

/// Mean busy period started from the stationary law:
/// `E T = E W / ((1-p) varphi'(0))`.
pub fn busy_period_mean(model: &QueueModel, mean_workload: f64) -> f64 {
    let (d1, _, _) = model.net().varphi_derivatives_at_zero();
    mean_workload / ((1.0 - model.p()) * d1)
}

/// Mean `n`-order busy period `n E B / ((1-p) varphi'(0))`.
pub fn n_order_busy_mean(n: usize, mean_b: f64, p: f64, d1: f64) -> f64 {
    n as f64 * mean_b / ((1.0 - p) * d1)
}

/// Transform of the workload at an independent exponential killing time with
/// rate `gamma`, started from workload `x`:
///
/// ```text
/// E_x exp(-theta W_T) = gamma / (varphi(theta) - gamma) * exp(-theta* x)
///   * [ p (lst-(theta) - lst+(theta)) / (lst-(theta*) - lst+(theta*))
///     + (1-p) (1 - lst_eta(theta)) / (1 - lst_eta(theta*))
///     - exp(-(theta - theta*) x) ],      theta* = varphi^{-1}(gamma).
/// ```
///
/// The singularity at `theta = theta*` is removable and is evaluated by the
/// symmetric perturbation `theta* ± 1e-6`, averaged.
pub fn transient_lst(
    model: &QueueModel,
    emb: Option<&BreakdownEmbedding>,
    x: f64,
    gamma: f64,
    theta: f64,
) -> Result<Estimate> {
    if !(gamma > 0.0) {
        return Err(Error::Domain(format!("killing rate must be positive, got {gamma}")));
    }
    if theta < 0.0 {
        return Err(Error::Domain(format!("transient_lst requires theta >= 0, got {theta}")));
    }
    if !(x >= 0.0) {
        return Err(Error::Domain(format!("initial workload must be >= 0, got {x}")));
    }
    if theta == 0.0 {
        return Ok(Estimate::exact(1.0));
    }
    let theta_star = model.net().inverse_varphi(gamma)?;
    if (theta - theta_star).abs() < 1e-9 {
        let h = 1e-6;
        let lo = transient_lst_regular(model, emb, x, gamma, theta_star - h, theta_star)?;
        let hi = transient_lst_regular(model, emb, x, gamma, theta_star + h, theta_star)?;
        return Ok(Estimate { value: 0.5 * (lo.value + hi.value), se: 0.5 * (lo.se + hi.se) });
    }
    transient_lst_regular(model, emb, x, gamma, theta, theta_star)
}

fn transient_lst_regular(
    model: &QueueModel,
    emb: Option<&BreakdownEmbedding>,
    x: f64,
    gamma: f64,
    theta: f64,
    theta_star: f64,
) -> Result<Estimate> {
    let p = model.p();
    let prefactor = gamma / (model.net().varphi_at(theta) - gamma) * (-theta_star * x).exp();
    let vac_ratio = (1.0 - model.eta_lst(theta)) / (1.0 - model.eta_lst(theta_star));
    let boundary = (-(theta - theta_star) * x).exp();
    if p == 0.0 {
        return Ok(Estimate::exact(prefactor * (vac_ratio - boundary)));
    }
    let emb = emb.ok_or_else(|| {
        Error::Usage("a breakdown embedding is required when the repair fraction p > 0".into())
    })?;
    let ratio = emb.lst_diff_ratio(theta, theta_star);
    let value = prefactor * (p * ratio.value + (1.0 - p) * vac_ratio - boundary);
    Ok(Estimate { value, se: (prefactor * p * ratio.se).abs() })
}

/// `E[W exp(-s W)]`, the negated derivative of the steady-state transform,
/// assembled term by term from the product form: the derivative of the
/// reflected factor times the mixture factor, plus the reflected factor times
/// the derivative of each mixture branch, with the empirical
/// `E[W^{+-} exp(-s W^{+-})]` terms estimated by sample averages.
pub fn mean_w_exp_weighted(
    model: &QueueModel,
    emb: Option<&BreakdownEmbedding>,
    s: f64,
) -> Result<f64> {
    if !(s > 0.0) {
        return Err(Error::Domain(format!("mean_w_exp_weighted requires s > 0, got {s}")));
    }
    let net = model.net();
    let (d1, _, _) = net.varphi_derivatives_at_zero();
    let p = model.p();
    let varphi = net.varphi_at(s);
    let varphi_prime = net.varphi_deriv(s);
    let pk = s * d1 / varphi;
    // -d/ds of the reflected factor s d1 / varphi(s)
    let neg_dpk = s * d1 * varphi_prime / (varphi * varphi) - d1 / varphi;

    let eeta = model.eta_mean();
    let vac = (1.0 - model.eta_lst(s)) / (s * eeta);
    // -d/ds of the vacation branch
    let neg_dvac = ((1.0 - model.eta_lst(s)) / s - model.eta_mean_exp_weighted(s)) / (s * eeta);

    let (rep, neg_drep) = if p == 0.0 {
        (0.0, 0.0)
    } else {
        let emb = emb.ok_or_else(|| {
            Error::Usage("a breakdown embedding is required when the repair fraction p > 0".into())
        })?;
        let exi = model.repair_mean();
        let diff = emb.lst_diff(s).value;
        let rep = diff / (s * exi);
        // -d/ds of (lst- - lst+)/(s E xi)
        let neg_drep = (emb.mean_exp_weighted_minus(s) - emb.mean_exp_weighted_plus(s)
            + diff / s)
            / (s * exi);
        (rep, neg_drep)
    };

    let mixture = p * rep + (1.0 - p) * vac;
    let neg_dmixture = p * neg_drep + (1.0 - p) * neg_dvac;
    Ok(neg_dpk * mixture + pk * neg_dmixture)
}

/// Laplace transform of the stationary autocorrelation of the workload,
/// `integral_0^infty corr(W_0, W_t) exp(-theta t) dt`:
///
/// ```text
/// 1/theta - omega varphi'(0) / (v theta^2)
///   + E[W exp(-th W)] / (v theta)
///     * { p E xi / (lst-(th) - lst+(th)) + (1-p) E eta / (1 - lst_eta(th)) },
/// ```
///
/// with `th = varphi^{-1}(theta)` and `omega`, `v` the stationary mean and
/// variance of the workload.
pub fn correlation_laplace(
    model: &QueueModel,
    emb: Option<&BreakdownEmbedding>,
    mean_workload: f64,
    variance_workload: f64,
    theta: f64,
) -> Result<f64> {
    if !(theta > 0.0) {
        return Err(Error::Domain(format!(
            "correlation_laplace requires theta > 0, got {theta}"
        )));
    }
    if !(variance_workload > 0.0) {
        return Err(Error::Domain("workload variance must be positive".into()));
    }
    let net = model.net();
    let (d1, _, _) = net.varphi_derivatives_at_zero();
    let p = model.p();
    let th = net.inverse_varphi(theta)?;
    let ew_exp = mean_w_exp_weighted(model, emb, th)?;

    let vac_term = (1.0 - p) * model.eta_mean() / (1.0 - model.eta_lst(th));
    let rep_term = if p == 0.0 {
        0.0
    } else {
        let emb = emb.ok_or_else(|| {
            Error::Usage("a breakdown embedding is required when the repair fraction p > 0".into())
        })?;
        p * model.repair_mean() / emb.lst_diff(th).value
    };

    Ok(1.0 / theta - mean_workload * d1 / (variance_workload * theta * theta)
        + ew_exp * (rep_term + vac_term) / (variance_workload * theta))
}

/// Samples the convolution decomposition `W = R + M`: an independent
/// reflected-process draw plus a mixture draw that is, with probability `p`,
/// the repair contribution `U` and otherwise a residual vacation life.
///
/// In the regime simulated here the repair jumps are i.i.d. and independent
/// of the past, so `U` itself decomposes as an independent stationary `W^-`
/// draw plus a residual repair life; that is how `U` is sampled, from the
/// supplied `W^-` pool.
pub struct DecompositionSampler<'a> {
    model: &'a QueueModel,
    reflected_pool: &'a [f64],
    w_minus_pool: Option<&'a [f64]>,
}

impl<'a> DecompositionSampler<'a> {
    pub fn new(
        model: &'a QueueModel,
        reflected_pool: &'a [f64],
        w_minus_pool: Option<&'a [f64]>,
    ) -> Result<Self> {
        if reflected_pool.is_empty() {
            return Err(Error::InvalidParameter("reflected sample pool is empty".into()));
        }
        if model.p() > 0.0 && w_minus_pool.map_or(true, |p| p.is_empty()) {
            return Err(Error::Usage(
                "stationary W^- samples are required when the repair fraction p > 0".into(),
            ));
        }
        if matches!(model.vacation(), VacationMode::WorkDuringVacation(_)) {
            return Err(Error::Usage(
                "decomposition sampling needs the direct vacation mode (closed residual law)"
                    .into(),
            ));
        }
        Ok(Self { model, reflected_pool, w_minus_pool })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let r = self.reflected_pool[rng.gen_range(0..self.reflected_pool.len())];
        let p = self.model.p();
        let m = if p > 0.0 && rng.gen::<f64>() < p {
            let pool = self.w_minus_pool.expect("validated at construction");
            let w_minus = pool[rng.gen_range(0..pool.len())];
            let residual_xi = self
                .model
                .repair_law()
                .expect("p > 0 implies a repair law")
                .sample_residual(rng);
            w_minus + residual_xi
        } else {
            self.model
                .sample_eta_residual(rng)
                .expect("direct mode validated at construction")
        };
        r + m
    }
}

/// A transform curve point for serialized summaries.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct LstPoint {
    pub theta: f64,
    pub value: f64,
    pub se: f64,
}

/// Steady-state description of a model: rates, moments, busy period and the
/// workload transform on a grid. Serializes to JSON with stable key order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SteadyStateSummary {
    pub p: f64,
    #[serde(rename = "lambda_R")]
    pub lambda_r: f64,
    #[serde(rename = "lambda_V")]
    pub lambda_v: f64,
    pub mean: f64,
    pub variance: f64,
    pub busy_mean: f64,
    pub lst: Vec<LstPoint>,
}

/// Evaluate the full closed-form summary on a theta grid.
pub fn summarize(
    model: &QueueModel,
    emb: Option<&BreakdownEmbedding>,
    theta_grid: &[f64],
) -> Result<SteadyStateSummary> {
    let (p, lambda_r, lambda_v) = rates_and_p(model);
    let m = moments(model, emb)?;
    let busy_mean = busy_period_mean(model, m.mean.value);
    let lst = theta_grid
        .iter()
        .map(|&theta| {
            steady_state_lst(model, emb, theta)
                .map(|e| LstPoint { theta, value: e.value, se: e.se })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SteadyStateSummary {
        p,
        lambda_r,
        lambda_v,
        mean: m.mean.value,
        variance: m.variance.value,
        busy_mean,
        lst,
    })
}

/// Default transform grid: 16 log-spaced points covering bulk and tail.
pub fn default_theta_grid() -> Vec<f64> {
    log_grid(0.05, 8.0, 16)
}

pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && n >= 2);
    let (llo, lhi) = (lo.ln(), hi.ln());
    (0..n).map(|i| (llo + (lhi - llo) * i as f64 / (n - 1) as f64).exp()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levy::JumpDistribution;
    use crate::rng::{stream, Purpose};
    use crate::sim;

    fn exp_jump(rate: f64) -> JumpDistribution {
        JumpDistribution::exponential(rate).unwrap()
    }

    fn det(value: f64) -> JumpDistribution {
        JumpDistribution::deterministic(value).unwrap()
    }

    fn net_a() -> NetInputModel {
        NetInputModel::new(0.0, 0.5, exp_jump(1.0), 1.0).unwrap()
    }

    fn config_b() -> QueueModel {
        QueueModel::new(net_a(), 0.0, None, VacationMode::DirectEta(det(1.0)), 0.0).unwrap()
    }

    fn config_c() -> QueueModel {
        QueueModel::new(net_a(), 0.2, Some(exp_jump(2.0)), VacationMode::DirectEta(det(1.0)), 0.0)
            .unwrap()
    }

    fn config_c_embedding(n_pairs: usize) -> BreakdownEmbedding {
        let model = config_c();
        let mut rng = stream(100, Purpose::BreakdownPairs, 0);
        let horizon = n_pairs as f64 / model.failure_rate() * 1.2;
        let path = sim::simulate_path(&model, horizon, &[], &mut rng).unwrap();
        BreakdownEmbedding::from_pairs(path.breakdown_pairs()).unwrap()
    }

    #[test]
    fn rates_examples() {
        assert_eq!(rates_and_p(&config_b()), (0.0, 0.0, 0.5));
        let (p, lr, lv) = rates_and_p(&config_c());
        assert!((p - 0.2).abs() < 1e-15);
        assert!((lr - 0.2).abs() < 1e-15);
        assert!((lv - 0.4).abs() < 1e-14);

        // halving the mean repair halves p
        let halved = QueueModel::new(
            net_a(),
            0.2,
            Some(exp_jump(4.0)),
            VacationMode::DirectEta(det(1.0)),
            0.0,
        )
        .unwrap();
        assert!((rates_and_p(&halved).0 - 0.1).abs() < 1e-15);
    }

    #[test]
    fn throughput_examples() {
        let (r, v) = throughput_limits(&config_c());
        assert!((r - 0.1).abs() < 1e-15);
        assert!((v - 0.4).abs() < 1e-14);
        assert_eq!(throughput_limits(&config_b()), (0.0, 0.5));
    }

    #[test]
    fn pk_lst_examples() {
        let net = net_a();
        assert!((pk_lst(&net, 1.0).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert!((pk_lst(&net, 2.0).unwrap() - 0.6).abs() < 1e-15);
        assert_eq!(pk_lst(&net, 0.0).unwrap(), 1.0);
        assert!((pk_lst(&net, 1e-9).unwrap() - 1.0).abs() < 1e-8);
        assert!(pk_lst(&net, -1.0).is_err());
    }

    #[test]
    fn reflected_moments_config_a() {
        let (mean, var) = reflected_moments(&net_a());
        assert!((mean - 1.0).abs() < 1e-15);
        assert!((var - 3.0).abs() < 1e-14);
    }

    #[test]
    fn steady_state_lst_config_b() {
        let model = config_b();
        let v = steady_state_lst(&model, None, 1.0).unwrap();
        let expected = (2.0 / 3.0) * (1.0 - (-1.0_f64).exp());
        assert!((v.value - expected).abs() < 1e-15);
        assert_eq!(v.se, 0.0);
        assert_eq!(steady_state_lst(&model, None, 0.0).unwrap().value, 1.0);
        // strictly decreasing, in (0, 1]
        let mut prev = 1.0;
        for i in 1..=40 {
            let th = 0.2 * f64::from(i);
            let v = steady_state_lst(&model, None, th).unwrap().value;
            assert!(v > 0.0 && v < prev);
            prev = v;
        }
    }

    #[test]
    fn steady_state_needs_embedding_when_p_positive() {
        let model = config_c();
        assert!(steady_state_lst(&model, None, 1.0).is_err());
        assert!(moments(&model, None).is_err());
    }

    #[test]
    fn factorization_identity_on_grid() {
        let model = config_c();
        let emb = config_c_embedding(4000);
        for &theta in &default_theta_grid() {
            let direct = steady_state_lst(&model, Some(&emb), theta).unwrap().value;
            let p = model.p();
            let factored = pk_lst(model.net(), theta).unwrap()
                * (p * lst_u(&model, &emb, theta).value
                    + (1.0 - p) * eta_residual_lst(&model, theta));
            assert!((direct - factored).abs() <= 1e-12, "theta={theta}: {direct} vs {factored}");
        }
    }

    #[test]
    fn vacation_only_reduction_is_same_code_path() {
        // p = 0: no special case, the explicit vacation formula comes out of
        // the same expression.
        let model = config_b();
        for &theta in &default_theta_grid() {
            let v = steady_state_lst(&model, None, theta).unwrap().value;
            let explicit = pk_lst(model.net(), theta).unwrap() * (1.0 - (-theta).exp()) / theta;
            assert!((v - explicit).abs() < 1e-14);
        }
    }

    #[test]
    fn moments_config_b() {
        let m = moments(&config_b(), None).unwrap();
        assert!((m.mean.value - 1.5).abs() < 1e-15);
        assert!((m.variance.value - (3.0 + 1.0 / 12.0)).abs() < 1e-14);
    }

    #[test]
    fn moment_consistency_derivative_at_zero() {
        // -d/dtheta of the transform at zero equals the mean: central
        // difference with h = 1e-5, within 1e-6 relative.
        let h = 1e-5;
        let model = config_b();
        let lo = steady_state_lst_at(&model, None, -h).unwrap().value;
        let hi = steady_state_lst_at(&model, None, h).unwrap().value;
        let deriv = (lo - hi) / (2.0 * h);
        let mean = moments(&model, None).unwrap().mean.value;
        assert!((deriv - mean).abs() / mean < 1e-6, "deriv {deriv} mean {mean}");

        // With an empirical embedding the curve's own derivative at zero and
        // the moment formula differ by exactly one plug-in mismatch: the
        // sampled repair jumps' mean against the analytic E xi in the
        // bracket denominator. The central difference must land on the
        // curve's derivative, i.e. the gap equals E R * p * (mean xi-hat /
        // E xi - 1) up to truncation.
        let modelc = config_c();
        let emb = config_c_embedding(4000);
        let lo = steady_state_lst_at(&modelc, Some(&emb), -h).unwrap().value;
        let hi = steady_state_lst_at(&modelc, Some(&emb), h).unwrap().value;
        let deriv = (lo - hi) / (2.0 * h);
        let mean = moments(&modelc, Some(&emb)).unwrap().mean.value;
        let er = reflected_moments(modelc.net()).0;
        let c0 = emb.moment_diff(1).value / modelc.repair_mean();
        let plug_in_gap = er * modelc.p() * (c0 - 1.0);
        assert!(
            ((deriv - mean) - plug_in_gap).abs() / mean < 1e-6,
            "deriv {deriv} mean {mean} plug-in gap {plug_in_gap}"
        );
    }

    #[test]
    fn mixture_variance_identity() {
        // E M^2 - (E M)^2 carries the p(1-p)(EU-EV)^2 cross term.
        let model = config_c();
        let emb = config_c_embedding(4000);
        let exi = model.repair_mean();
        let eu = emb.moment_diff(2).value / (2.0 * exi);
        let eu2 = emb.moment_diff(3).value / (3.0 * exi);
        let ev = model.eta_moment(2) / (2.0 * model.eta_mean());
        let ev2 = model.eta_moment(3) / (3.0 * model.eta_mean());
        let p = model.p();
        let lhs = (p * eu2 + (1.0 - p) * ev2) - (p * eu + (1.0 - p) * ev).powi(2);
        let rhs = p * (eu2 - eu * eu)
            + (1.0 - p) * (ev2 - ev * ev)
            + p * (1.0 - p) * (eu - ev).powi(2);
        assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn alternate_variance_form_is_negative_on_reflected_part() {
        let w_part = variance_alternate_form_reflected_part(&net_a());
        assert!((w_part - (-3.0)).abs() < 1e-14);
        // while the derivative-based reflected variance is +3
        assert!((reflected_moments(&net_a()).1 - 3.0).abs() < 1e-14);
        // full alternate form on the vacation-only model: -3 + Var Uniform(0,1)
        let v_alt = variance_alternate_form(&config_b(), None).unwrap();
        assert!((v_alt - (-3.0 + 1.0 / 12.0)).abs() < 1e-14);
    }

    #[test]
    fn busy_means() {
        assert!((busy_period_mean(&config_b(), 1.5) - 3.0).abs() < 1e-15);
        assert_eq!(busy_period_mean(&config_b(), 0.0), 0.0);
        assert!((n_order_busy_mean(3, 1.0, 0.2, 0.5) - 7.5).abs() < 1e-14);
        assert_eq!(n_order_busy_mean(0, 1.0, 0.2, 0.5), 0.0);
        assert_eq!(n_order_busy_mean(6, 1.0, 0.2, 0.5), 2.0 * n_order_busy_mean(3, 1.0, 0.2, 0.5));
    }

    #[test]
    fn transient_lst_limits() {
        let model = config_b();
        assert_eq!(transient_lst(&model, None, 1.0, 0.5, 0.0).unwrap().value, 1.0);
        let near_zero = transient_lst(&model, None, 1.0, 0.5, 1e-8).unwrap().value;
        assert!((near_zero - 1.0).abs() < 1e-6, "{near_zero}");
        assert!(transient_lst(&model, None, 1.0, 0.0, 1.0).is_err());
        assert!(transient_lst(&model, None, -1.0, 0.5, 1.0).is_err());
    }

    #[test]
    fn transient_lst_removable_singularity_is_continuous() {
        let model = config_b();
        let theta_star = model.net().inverse_varphi(0.5).unwrap();
        assert!((theta_star - 0.5_f64.sqrt()).abs() < 1e-10);
        for x in [0.0, 1.0] {
            let at = transient_lst(&model, None, x, 0.5, theta_star).unwrap().value;
            let h = 1e-6;
            let lo = transient_lst(&model, None, x, 0.5, theta_star - h).unwrap().value;
            let hi = transient_lst(&model, None, x, 0.5, theta_star + h).unwrap().value;
            assert!(at.is_finite());
            assert!((hi - lo).abs() <= 1e-4, "x={x}: |{hi} - {lo}|");
            assert!((at - 0.5 * (lo + hi)).abs() < 1e-9);
        }
    }

    #[test]
    fn mean_w_exp_weighted_tends_to_mean_at_zero() {
        // E[W exp(-sW)] -> E W as s -> 0; the truncation is O(s E W^2) and
        // s cannot be pushed much lower without cancellation in varphi.
        let s = 1e-4;
        let model = config_b();
        let m = moments(&model, None).unwrap();
        let ew2 = m.variance.value + m.mean.value * m.mean.value;
        let v = mean_w_exp_weighted(&model, None, s).unwrap();
        assert!((v - m.mean.value).abs() < 2.0 * s * ew2, "{v} vs {}", m.mean.value);

        let modelc = config_c();
        let emb = config_c_embedding(4000);
        let mc = moments(&modelc, Some(&emb)).unwrap();
        let ew2c = mc.variance.value + mc.mean.value * mc.mean.value;
        let vc = mean_w_exp_weighted(&modelc, Some(&emb), s).unwrap();
        // the plug-in mismatch between sampled repair jumps and E xi adds a
        // statistical offset on top of the truncation term
        let er = reflected_moments(modelc.net()).0;
        let c0 = emb.moment_diff(1).value / modelc.repair_mean();
        let offset = er * modelc.p() * (c0 - 1.0);
        assert!(
            (vc - mc.mean.value - offset).abs() < 2.0 * s * ew2c,
            "{vc} vs {} offset {offset}",
            mc.mean.value
        );
    }

    #[test]
    fn correlation_laplace_initial_value_and_structure() {
        let model = config_b();
        let m = moments(&model, None).unwrap();
        // theta * L(theta) -> corr(0) = 1 as theta grows
        let theta = 1e3;
        let l = correlation_laplace(&model, None, m.mean.value, m.variance.value, theta).unwrap();
        assert!((theta * l - 1.0).abs() < 1e-2, "{}", theta * l);
        // a formally huge variance drives the transform to 1/theta
        let l = correlation_laplace(&model, None, m.mean.value, 1e12, 2.0).unwrap();
        assert!((l - 0.5).abs() < 1e-6);
        assert!(correlation_laplace(&model, None, 1.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn embedding_invariants() {
        let emb = config_c_embedding(4000);
        assert_eq!(emb.lst_minus(0.0).value, 1.0);
        assert_eq!(emb.lst_plus(0.0).value, 1.0);
        for theta in [0.1, 0.5, 1.0, 3.0] {
            let d = emb.lst_diff(theta);
            assert!(d.value >= 0.0, "lst- dominates lst+");
            assert!(d.se > 0.0);
            let lm = emb.lst_minus(theta).value;
            let lp = emb.lst_plus(theta).value;
            assert!((d.value - (lm - lp)).abs() < 1e-12);
        }
        assert!(BreakdownEmbedding::from_pairs(&[]).is_err());
        assert!(BreakdownEmbedding::from_pairs(&[(1.0, 0.5)]).is_err());
    }

    #[test]
    fn decomposition_sampler_p_zero_is_reflected_plus_uniform() {
        let model = config_b();
        let pool = vec![0.0, 1.0, 2.0];
        let sampler = DecompositionSampler::new(&model, &pool, None).unwrap();
        let mut rng = stream(30, Purpose::Decomposition, 0);
        for _ in 0..200 {
            let w = sampler.sample(&mut rng);
            // R from the pool, M = Uniform(0,1)
            let ok = [0.0, 1.0, 2.0].iter().any(|r| (0.0..1.0).contains(&(w - r)));
            assert!(ok, "w = {w}");
        }
        assert!(DecompositionSampler::new(&model, &[], None).is_err());
        assert!(DecompositionSampler::new(&config_c(), &pool, None).is_err());
    }

    #[test]
    fn summary_serializes_with_stable_keys() {
        let model = config_b();
        let s = summarize(&model, None, &[0.5, 1.0]).unwrap();
        let json = serde_json::to_string(&s).unwrap();
        let p_pos = json.find("\"p\"").unwrap();
        let lr_pos = json.find("\"lambda_R\"").unwrap();
        let lv_pos = json.find("\"lambda_V\"").unwrap();
        let mean_pos = json.find("\"mean\"").unwrap();
        assert!(p_pos < lr_pos && lr_pos < lv_pos && lv_pos < mean_pos);
        assert!((s.busy_mean - 3.0).abs() < 1e-12);
    }

    #[test]
    fn log_grid_spans_range() {
        let g = default_theta_grid();
        assert_eq!(g.len(), 16);
        assert!((g[0] - 0.05).abs() < 1e-12);
        assert!((g[15] - 8.0).abs() < 1e-12);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
    }
}
