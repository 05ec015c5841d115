//! Exact event-driven simulation of the virtual waiting time.
//!
//! Between events the workload drains linearly at rate `r - a`, so the next
//! state change is the minimum of three clocks: the input-jump clock
//! (Exp(lambda_j)), the failure clock (Exp(lambda_r)) and the deterministic
//! zero-hit time `w / (r - a)`. Zero-hit times are computed in closed form,
//! never by stepping, so there is no discretization error anywhere. At a zero
//! hit the server leaves for a vacation and the workload jumps by `eta`
//! immediately (the workload is zero only instantaneously); at a failure the
//! workload jumps by a repair amount `xi` and the pre/post pair is recorded.
//!
//! Event ties are broken zero-hit first, then breakdown, then input jump.
//! All replication entry points take a caller-owned RNG stream; model values
//! are immutable after construction and safe to share across threads.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Exp, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::levy::{JumpDistribution, NetInputModel};

/// Event cap for busy-period style runs; exceeding it reports censoring.
pub const BUSY_EVENT_CAP: u64 = 1_000_000;

/// How vacation jumps are generated when the system empties.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum VacationMode {
    /// The jump `eta` is drawn directly from the given law.
    DirectEta(JumpDistribution),
    /// Vacation lengths are drawn from the given law; the server keeps taking
    /// vacations until the input accumulated over them is positive, and that
    /// accumulated amount is the jump `eta`.
    WorkDuringVacation(JumpDistribution),
}

impl VacationMode {
    pub fn law(&self) -> &JumpDistribution {
        match self {
            VacationMode::DirectEta(law) | VacationMode::WorkDuringVacation(law) => law,
        }
    }
}

/// The full queue: net input plus Poisson breakdowns (repair jumps `xi`) and
/// vacations at empty-system epochs (jumps `eta`).
///
/// Construction enforces `0 <= p < 1` for the repair fraction
/// `p = lambda_r E xi / varphi'(0)`, which is the same inequality as the
/// effective stability condition `drift + lambda_j E B + lambda_r E xi < r`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueueModel {
    net: NetInputModel,
    failure_rate: f64,
    repair_law: Option<JumpDistribution>,
    vacation: VacationMode,
    initial_workload: f64,
}

impl QueueModel {
    pub fn new(
        net: NetInputModel,
        failure_rate: f64,
        repair_law: Option<JumpDistribution>,
        vacation: VacationMode,
        initial_workload: f64,
    ) -> Result<Self> {
        if !(failure_rate >= 0.0) || !failure_rate.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "failure rate must be >= 0, got {failure_rate}"
            )));
        }
        if failure_rate > 0.0 && repair_law.is_none() {
            return Err(Error::InvalidParameter(
                "a repair law is required when the failure rate is positive".into(),
            ));
        }
        if !(initial_workload >= 0.0) || !initial_workload.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "initial workload must be >= 0, got {initial_workload}"
            )));
        }
        if let VacationMode::WorkDuringVacation(_) = vacation {
            if net.rho() <= 0.0 {
                return Err(Error::InvalidParameter(
                    "work-during-vacation mode needs positive input (drift or jumps)".into(),
                ));
            }
        }
        let model = Self { net, failure_rate, repair_law, vacation, initial_workload };
        let p = model.p();
        if !(0.0..1.0).contains(&p) {
            return Err(Error::Unstable(format!(
                "repair fraction p = failure_rate * mean_repair / varphi'(0) = {p} must lie in [0, 1): \
                 drift + jump input + repair input must stay below the service rate"
            )));
        }
        Ok(model)
    }

    pub fn net(&self) -> &NetInputModel {
        &self.net
    }

    pub fn failure_rate(&self) -> f64 {
        self.failure_rate
    }

    pub fn repair_law(&self) -> Option<&JumpDistribution> {
        self.repair_law.as_ref()
    }

    pub fn vacation(&self) -> &VacationMode {
        &self.vacation
    }

    pub fn initial_workload(&self) -> f64 {
        self.initial_workload
    }

    pub fn with_initial_workload(mut self, w0: f64) -> Self {
        self.initial_workload = w0;
        self
    }

    /// Fraction `p = lambda_r E xi / varphi'(0)` of the drained capacity that
    /// repair jumps consume.
    pub fn p(&self) -> f64 {
        match &self.repair_law {
            Some(law) if self.failure_rate > 0.0 => {
                let (d1, _, _) = self.net.varphi_derivatives_at_zero();
                self.failure_rate * law.mean() / d1
            }
            _ => 0.0,
        }
    }

    /// Mean repair jump, zero when breakdowns are disabled.
    pub fn repair_mean(&self) -> f64 {
        self.repair_law.as_ref().map_or(0.0, JumpDistribution::mean)
    }

    fn eta_zero_prob(&self) -> f64 {
        // Probability that a single vacation accrues no input at all:
        // positive only for pure-jump input, where it is lst_V(lambda_j).
        match &self.vacation {
            VacationMode::DirectEta(_) => 0.0,
            VacationMode::WorkDuringVacation(vlaw) => {
                if self.net.drift() > 0.0 {
                    0.0
                } else {
                    vlaw.lst(self.net.jump_rate())
                }
            }
        }
    }

    /// `E eta^k` for k in 1..=3, in closed form for both vacation modes.
    ///
    /// In work-during-vacation mode, `eta` is the input accumulated over one
    /// vacation conditioned on being positive, so its raw moments are the
    /// unconditional input moments divided by `1 - P(no input)`.
    pub fn eta_moment(&self, k: u32) -> f64 {
        match &self.vacation {
            VacationMode::DirectEta(law) => law.moment(k),
            VacationMode::WorkDuringVacation(vlaw) => {
                let rho = self.net.rho();
                let lj = self.net.jump_rate();
                let b = self.net.jump_law();
                let (ev1, ev2, ev3) = (vlaw.moment(1), vlaw.moment(2), vlaw.moment(3));
                let raw = match k {
                    1 => rho * ev1,
                    2 => rho * rho * ev2 + lj * b.moment(2) * ev1,
                    3 => {
                        rho.powi(3) * ev3
                            + 3.0 * rho * lj * b.moment(2) * ev2
                            + lj * b.moment(3) * ev1
                    }
                    _ => panic!("eta moments supported for k in 1..=3"),
                };
                raw / (1.0 - self.eta_zero_prob())
            }
        }
    }

    pub fn eta_mean(&self) -> f64 {
        self.eta_moment(1)
    }

    /// `E exp(-theta eta)`.
    pub fn eta_lst(&self, theta: f64) -> f64 {
        match &self.vacation {
            VacationMode::DirectEta(law) => law.lst(theta),
            VacationMode::WorkDuringVacation(vlaw) => {
                let p0 = self.eta_zero_prob();
                (vlaw.lst(-self.net.phi_at(theta)) - p0) / (1.0 - p0)
            }
        }
    }

    pub fn eta_lst_complex(&self, s: Complex64) -> Complex64 {
        match &self.vacation {
            VacationMode::DirectEta(law) => law.lst_complex(s),
            VacationMode::WorkDuringVacation(vlaw) => {
                let p0 = self.eta_zero_prob();
                (vlaw.lst_complex(-self.net.phi_complex(s)) - p0) / (1.0 - p0)
            }
        }
    }

    /// `E[eta exp(-s eta)]`, the negated derivative of [`eta_lst`](Self::eta_lst).
    pub fn eta_mean_exp_weighted(&self, s: f64) -> f64 {
        match &self.vacation {
            VacationMode::DirectEta(law) => law.mean_exp_weighted(s),
            VacationMode::WorkDuringVacation(vlaw) => {
                let p0 = self.eta_zero_prob();
                // -d/ds lst_V(-phi(s)) = E[V e^{-(-phi(s))V}] * (-phi'(s))
                let u = -self.net.phi_at(s);
                let minus_phi_prime =
                    self.net.drift() + self.net.jump_rate() * self.net.jump_law().mean_exp_weighted(s);
                vlaw.mean_exp_weighted(u) * minus_phi_prime / (1.0 - p0)
            }
        }
    }

    /// Draw from the stationary residual-life law of `eta`.
    ///
    /// Only available in direct mode, where the law of `eta` has a closed
    /// residual form; accumulated-input vacations are rejected.
    pub fn sample_eta_residual<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<f64> {
        match &self.vacation {
            VacationMode::DirectEta(law) => Ok(law.sample_residual(rng)),
            VacationMode::WorkDuringVacation(_) => Err(Error::Usage(
                "residual vacation jumps require the direct vacation mode".into(),
            )),
        }
    }

    /// Closed-form stationary mean workload under the i.i.d.-repair regime
    /// realized by this simulator (repair jumps independent of everything
    /// drawn so far). Used to scale default warmup and spacing.
    pub fn mean_workload_hint(&self) -> f64 {
        let (d1, d2, _) = self.net.varphi_derivatives_at_zero();
        let p = self.p();
        let reflected_mean = d2 / (2.0 * d1);
        let xi_residual = self
            .repair_law
            .as_ref()
            .filter(|_| self.failure_rate > 0.0)
            .map_or(0.0, |law| law.residual_moment(1));
        let eta_residual = self.eta_moment(2) / (2.0 * self.eta_moment(1));
        (reflected_mean + p * xi_residual + (1.0 - p) * eta_residual) / (1.0 - p)
    }

    /// Closed-form mean busy period matching [`mean_workload_hint`](Self::mean_workload_hint).
    pub fn busy_mean_hint(&self) -> f64 {
        let (d1, _, _) = self.net.varphi_derivatives_at_zero();
        self.mean_workload_hint() / ((1.0 - self.p()) * d1)
    }
}

/// Default warmup before stationary sampling: 50 mean busy periods.
pub fn default_warmup(model: &QueueModel) -> f64 {
    50.0 * model.busy_mean_hint()
}

/// Default spacing between stationary samples: 5 mean busy periods.
pub fn default_spacing(model: &QueueModel) -> f64 {
    5.0 * model.busy_mean_hint()
}

/// What happened at an event epoch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EventKind {
    InputJump,
    Breakdown,
    VacationTrigger,
    /// Reflected runs only: the workload reached zero and sticks there.
    ZeroHit,
}

impl EventKind {
    pub fn label(self) -> &'static str {
        match self {
            EventKind::InputJump => "input_jump",
            EventKind::Breakdown => "breakdown",
            EventKind::VacationTrigger => "vacation_trigger",
            EventKind::ZeroHit => "zero_hit",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub time: f64,
    pub kind: EventKind,
    pub size: f64,
    pub w_before: f64,
    pub w_after: f64,
}

/// One simulated trajectory with everything needed to evaluate the
/// exponential martingale statistic exactly: the event log, breakdown
/// pre/post pairs, vacation jump sizes, busy-cycle durations, event counts
/// and per-theta exponential integrals accumulated in closed form per linear
/// segment.
#[derive(Debug, Clone)]
pub struct PathResult {
    horizon: f64,
    initial_workload: f64,
    final_workload: f64,
    drain_rate: f64,
    theta_grid: Vec<f64>,
    /// varphi evaluated at each grid point, frozen so the martingale
    /// statistic uses exactly the exponent the path was generated under.
    varphi_grid: Vec<f64>,
    events: Vec<EventRecord>,
    /// cum_integrals[e][j] = integral of exp(-theta_j W_s) ds over [0, time of event e].
    cum_integrals: Vec<Vec<f64>>,
    total_integrals: Vec<f64>,
    breakdown_pairs: Vec<(f64, f64)>,
    vacation_sizes: Vec<f64>,
    busy_durations: Vec<f64>,
}

impl PathResult {
    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn initial_workload(&self) -> f64 {
        self.initial_workload
    }

    pub fn final_workload(&self) -> f64 {
        self.final_workload
    }

    pub fn events(&self) -> &[EventRecord] {
        &self.events
    }

    pub fn theta_grid(&self) -> &[f64] {
        &self.theta_grid
    }

    /// Breakdown `(W^-, W^+)` pairs in epoch order.
    pub fn breakdown_pairs(&self) -> &[(f64, f64)] {
        &self.breakdown_pairs
    }

    pub fn vacation_sizes(&self) -> &[f64] {
        &self.vacation_sizes
    }

    /// Durations of completed busy cycles (zero hit to zero hit).
    pub fn busy_durations(&self) -> &[f64] {
        &self.busy_durations
    }

    pub fn breakdown_count(&self) -> u64 {
        self.breakdown_pairs.len() as u64
    }

    pub fn vacation_count(&self) -> u64 {
        self.vacation_sizes.len() as u64
    }

    fn theta_index(&self, theta: f64) -> Result<usize> {
        self.theta_grid
            .iter()
            .position(|&t| t == theta || (t - theta).abs() <= 1e-14 * theta.abs().max(1.0))
            .ok_or_else(|| {
                Error::Usage(format!("theta = {theta} was not accumulated along this path"))
            })
    }

    /// Workload at time `t`, reconstructed exactly from the event log
    /// (post-jump value at event epochs).
    pub fn workload_at(&self, t: f64) -> Result<f64> {
        if !(0.0..=self.horizon).contains(&t) {
            return Err(Error::Usage(format!(
                "time {t} outside the simulated horizon {}",
                self.horizon
            )));
        }
        let idx = self.events.partition_point(|e| e.time <= t);
        let (t0, w0) = if idx == 0 {
            (0.0, self.initial_workload)
        } else {
            let e = &self.events[idx - 1];
            (e.time, e.w_after)
        };
        Ok((w0 - self.drain_rate * (t - t0)).max(0.0))
    }

    /// Exact `integral of exp(-theta W_s) ds` over the whole horizon.
    pub fn total_exp_integral(&self, theta: f64) -> Result<f64> {
        Ok(self.total_integrals[self.theta_index(theta)?])
    }

    /// Exact `integral of exp(-theta W_s) ds` over `[0, t]` for a
    /// pre-accumulated `theta`.
    pub fn exp_integral(&self, theta: f64, t: f64) -> Result<f64> {
        let j = self.theta_index(theta)?;
        if !(0.0..=self.horizon).contains(&t) {
            return Err(Error::Usage(format!(
                "time {t} outside the simulated horizon {}",
                self.horizon
            )));
        }
        let idx = self.events.partition_point(|e| e.time <= t);
        let (t0, w0, base) = if idx == 0 {
            (0.0, self.initial_workload, 0.0)
        } else {
            let e = &self.events[idx - 1];
            (e.time, e.w_after, self.cum_integrals[idx - 1][j])
        };
        let w1 = (w0 - self.drain_rate * (t - t0)).max(0.0);
        Ok(base + segment_exp_integral(theta, w0, w1, t - t0, self.drain_rate))
    }
}

/// Exponential integral over one linear segment: the workload falls from
/// `w0` to `w1` over `dt` at slope `-drain`, so for positive `theta` the
/// closed form is `(exp(-theta w1) - exp(-theta w0)) / (theta * drain)`.
fn segment_exp_integral(theta: f64, w0: f64, w1: f64, dt: f64, drain: f64) -> f64 {
    if dt <= 0.0 {
        return 0.0;
    }
    if theta == 0.0 {
        return dt;
    }
    if w0 == w1 {
        return dt * (-theta * w0).exp();
    }
    ((-theta * w1).exp() - (-theta * w0).exp()) / (theta * drain)
}

/// The exponential (Kella–Whitt style) martingale statistic
///
/// ```text
/// M_t = varphi(theta) * integral_0^t exp(-theta W_s) ds
///       + exp(-theta W_0) - exp(-theta W_t)
///       - sum_{breakdowns <= t} [exp(-theta W^-_k) - exp(-theta W^+_k)]
///       - sum_{vacations <= t} (1 - exp(-theta eta_k)),
/// ```
///
/// assembled exactly from the event log. Zero-mean across independent paths
/// for any stable model, which is what the verification suite checks.
pub fn kella_whitt_statistic(path: &PathResult, theta: f64, t: f64) -> Result<f64> {
    kella_whitt_statistic_scaled(path, theta, t, 1.0)
}

/// Same statistic with `varphi(theta)` multiplied by `varphi_scale`; anything
/// other than 1.0 breaks the martingale property and serves as a sensitivity
/// control for the zero-mean test.
pub fn kella_whitt_statistic_scaled(
    path: &PathResult,
    theta: f64,
    t: f64,
    varphi_scale: f64,
) -> Result<f64> {
    let integral = path.exp_integral(theta, t)?;
    let varphi = path.varphi_of_theta(theta) * varphi_scale;
    let w_t = path.workload_at(t)?;
    let mut m = varphi * integral + (-theta * path.initial_workload).exp() - (-theta * w_t).exp();
    for e in path.events.iter().take_while(|e| e.time <= t) {
        match e.kind {
            EventKind::Breakdown => {
                m -= (-theta * e.w_before).exp() - (-theta * e.w_after).exp();
            }
            EventKind::VacationTrigger => {
                m -= 1.0 - (-theta * e.size).exp();
            }
            _ => {}
        }
    }
    Ok(m)
}

impl PathResult {
    fn varphi_of_theta(&self, theta: f64) -> f64 {
        self.varphi_grid
            .iter()
            .zip(&self.theta_grid)
            .find(|(_, &t)| t == theta || (t - theta).abs() <= 1e-14 * theta.abs().max(1.0))
            .map(|(v, _)| *v)
            .expect("theta_index already validated")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ZeroPolicy {
    /// Trigger a vacation jump (full model).
    Vacation,
    /// Stick at zero until the next input jump (reflected process).
    Stick,
    /// Stop the run (busy periods, first passage).
    Absorb,
}

struct Engine<'a, R: Rng + ?Sized> {
    net: &'a NetInputModel,
    failure_rate: f64,
    repair_law: Option<&'a JumpDistribution>,
    vacation: Option<&'a VacationMode>,
    policy: ZeroPolicy,
    rng: &'a mut R,
    t: f64,
    w: f64,
    next_jump: f64,
    next_fail: f64,
}

/// One linear piece of a trajectory: workload `w0` at `t0` draining to `w1`
/// at `t1` (flat only when stuck at zero in reflected runs).
#[derive(Debug, Clone, Copy)]
struct Segment {
    t0: f64,
    w0: f64,
    t1: f64,
    w1: f64,
}

enum StepOutcome {
    Event { seg: Segment, record: EventRecord },
    AtTarget { seg: Segment },
    Absorbed { time: f64 },
}

impl<'a, R: Rng + ?Sized> Engine<'a, R> {
    fn full(model: &'a QueueModel, w0: f64, rng: &'a mut R) -> Self {
        Self::new(
            model.net(),
            model.failure_rate,
            model.repair_law.as_ref(),
            Some(&model.vacation),
            ZeroPolicy::Vacation,
            w0,
            rng,
        )
    }

    fn absorbing(model: &'a QueueModel, w0: f64, rng: &'a mut R) -> Self {
        Self::new(
            model.net(),
            model.failure_rate,
            model.repair_law.as_ref(),
            None,
            ZeroPolicy::Absorb,
            w0,
            rng,
        )
    }

    fn net_only(net: &'a NetInputModel, policy: ZeroPolicy, w0: f64, rng: &'a mut R) -> Self {
        Self::new(net, 0.0, None, None, policy, w0, rng)
    }

    fn new(
        net: &'a NetInputModel,
        failure_rate: f64,
        repair_law: Option<&'a JumpDistribution>,
        vacation: Option<&'a VacationMode>,
        policy: ZeroPolicy,
        w0: f64,
        rng: &'a mut R,
    ) -> Self {
        let mut eng = Self {
            net,
            failure_rate,
            repair_law,
            vacation,
            policy,
            rng,
            t: 0.0,
            w: w0,
            next_jump: f64::INFINITY,
            next_fail: f64::INFINITY,
        };
        eng.next_jump = eng.draw_clock(eng.net.jump_rate());
        eng.next_fail = eng.draw_clock(eng.failure_rate);
        eng
    }

    fn draw_clock(&mut self, rate: f64) -> f64 {
        if rate > 0.0 {
            self.t + Exp::new(rate).unwrap().sample(self.rng)
        } else {
            f64::INFINITY
        }
    }

    fn zero_hit_time(&self) -> f64 {
        match self.policy {
            ZeroPolicy::Stick if self.w == 0.0 => f64::INFINITY,
            _ => self.t + self.w / self.net.drain_rate(),
        }
    }

    /// Advance to the next event or to `target`, whichever comes first.
    /// Events at exactly `target` are processed before the target is reported.
    fn step(&mut self, target: f64) -> StepOutcome {
        let zero_t = self.zero_hit_time();
        // Tie order: zero hit, then breakdown, then input jump.
        let (event_t, which) = if zero_t <= self.next_fail && zero_t <= self.next_jump {
            (zero_t, 0u8)
        } else if self.next_fail <= self.next_jump {
            (self.next_fail, 1)
        } else {
            (self.next_jump, 2)
        };

        if event_t > target {
            let seg = self.advance(target);
            return StepOutcome::AtTarget { seg };
        }

        match which {
            0 => {
                let mut seg = self.advance(event_t);
                self.w = 0.0;
                seg.w1 = 0.0;
                match self.policy {
                    ZeroPolicy::Absorb => StepOutcome::Absorbed { time: event_t },
                    ZeroPolicy::Stick => StepOutcome::Event {
                        seg,
                        record: EventRecord {
                            time: event_t,
                            kind: EventKind::ZeroHit,
                            size: 0.0,
                            w_before: 0.0,
                            w_after: 0.0,
                        },
                    },
                    ZeroPolicy::Vacation => {
                        let eta = self.draw_eta();
                        self.w = eta;
                        StepOutcome::Event {
                            seg,
                            record: EventRecord {
                                time: event_t,
                                kind: EventKind::VacationTrigger,
                                size: eta,
                                w_before: 0.0,
                                w_after: eta,
                            },
                        }
                    }
                }
            }
            1 => {
                let seg = self.advance(event_t);
                let w_before = self.w;
                let xi = self.repair_law.expect("failure clock implies repair law").sample(self.rng);
                self.w += xi;
                self.next_fail = self.draw_clock(self.failure_rate);
                StepOutcome::Event {
                    seg,
                    record: EventRecord {
                        time: event_t,
                        kind: EventKind::Breakdown,
                        size: xi,
                        w_before,
                        w_after: self.w,
                    },
                }
            }
            _ => {
                let seg = self.advance(event_t);
                let w_before = self.w;
                let jump = self.net.jump_law().sample(self.rng);
                self.w += jump;
                self.next_jump = self.draw_clock(self.net.jump_rate());
                StepOutcome::Event {
                    seg,
                    record: EventRecord {
                        time: event_t,
                        kind: EventKind::InputJump,
                        size: jump,
                        w_before,
                        w_after: self.w,
                    },
                }
            }
        }
    }

    fn advance(&mut self, to: f64) -> Segment {
        let seg_start = (self.t, self.w);
        if to > self.t {
            if self.w > 0.0 {
                self.w = (self.w - self.net.drain_rate() * (to - self.t)).max(0.0);
            }
            self.t = to;
        }
        Segment { t0: seg_start.0, w0: seg_start.1, t1: self.t, w1: self.w }
    }

    fn draw_eta(&mut self) -> f64 {
        match self.vacation.expect("vacation policy implies a vacation mode") {
            VacationMode::DirectEta(law) => law.sample(self.rng),
            VacationMode::WorkDuringVacation(vlaw) => {
                // Vacations repeat until the accumulated input is positive.
                let mut acc = 0.0;
                loop {
                    let v = vlaw.sample(self.rng);
                    let mut amount = self.net.drift() * v;
                    let mean_jumps = self.net.jump_rate() * v;
                    if mean_jumps > 0.0 {
                        let n = Poisson::new(mean_jumps).unwrap().sample(self.rng) as u64;
                        for _ in 0..n {
                            amount += self.net.jump_law().sample(self.rng);
                        }
                    }
                    acc += amount;
                    if acc > 0.0 {
                        return acc;
                    }
                }
            }
        }
    }
}

/// Simulate one trajectory of the full model over `[0, horizon]`,
/// accumulating `integral exp(-theta W_s) ds` exactly for every `theta` in
/// `theta_grid`.
pub fn simulate_path<R: Rng + ?Sized>(
    model: &QueueModel,
    horizon: f64,
    theta_grid: &[f64],
    rng: &mut R,
) -> Result<PathResult> {
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(Error::Domain(format!("horizon must be positive, got {horizon}")));
    }
    let drain = model.net().drain_rate();
    let mut eng = Engine::full(model, model.initial_workload, rng);

    let mut events = Vec::new();
    let mut cum = vec![0.0_f64; theta_grid.len()];
    let mut cum_integrals = Vec::new();
    let mut breakdown_pairs = Vec::new();
    let mut vacation_sizes = Vec::new();
    let mut busy_durations = Vec::new();
    let mut cycle_start = (model.initial_workload > 0.0).then_some(0.0);

    loop {
        match eng.step(horizon) {
            StepOutcome::Event { seg, record } => {
                accumulate(&mut cum, theta_grid, &seg, drain);
                match record.kind {
                    EventKind::Breakdown => breakdown_pairs.push((record.w_before, record.w_after)),
                    EventKind::VacationTrigger => {
                        vacation_sizes.push(record.size);
                        if let Some(start) = cycle_start {
                            busy_durations.push(record.time - start);
                        }
                        cycle_start = Some(record.time);
                    }
                    _ => {}
                }
                cum_integrals.push(cum.clone());
                events.push(record);
            }
            StepOutcome::AtTarget { seg } => {
                accumulate(&mut cum, theta_grid, &seg, drain);
                let varphi_grid =
                    theta_grid.iter().map(|&th| model.net().varphi_at(th)).collect();
                return Ok(PathResult {
                    horizon,
                    initial_workload: model.initial_workload,
                    final_workload: eng.w,
                    drain_rate: drain,
                    theta_grid: theta_grid.to_vec(),
                    varphi_grid,
                    events,
                    cum_integrals,
                    total_integrals: cum,
                    breakdown_pairs,
                    vacation_sizes,
                    busy_durations,
                });
            }
            StepOutcome::Absorbed { .. } => unreachable!("vacation policy never absorbs"),
        }
    }
}

fn accumulate(cum: &mut [f64], theta_grid: &[f64], seg: &Segment, drain: f64) {
    for (acc, &theta) in cum.iter_mut().zip(theta_grid) {
        *acc += segment_exp_integral(theta, seg.w0, seg.w1, seg.t1 - seg.t0, drain);
    }
}

/// Stationary samples plus the lag-one autocorrelation at the chosen spacing,
/// which makes the decorrelation assumption auditable.
#[derive(Debug, Clone)]
pub struct StationaryRun {
    pub samples: Vec<f64>,
    pub lag1_autocorrelation: f64,
}

/// Sample the full model every `spacing` after `warmup`: `n` samples of
/// `W_{warmup + k * spacing}`, k = 1..=n.
pub fn stationary_samples<R: Rng + ?Sized>(
    model: &QueueModel,
    warmup: f64,
    n: usize,
    spacing: f64,
    rng: &mut R,
) -> Result<StationaryRun> {
    if !(spacing > 0.0) || !(warmup >= 0.0) {
        return Err(Error::Domain("warmup must be >= 0 and spacing > 0".into()));
    }
    let mut eng = Engine::full(model, model.initial_workload, rng);
    let mut samples = Vec::with_capacity(n);
    let mut next_t = warmup + spacing;
    while samples.len() < n {
        match eng.step(next_t) {
            StepOutcome::AtTarget { .. } => {
                samples.push(eng.w);
                next_t += spacing;
            }
            StepOutcome::Event { .. } => {}
            StepOutcome::Absorbed { .. } => unreachable!(),
        }
    }
    let lag1 = lag_autocorrelation(&samples, 1);
    Ok(StationaryRun { samples, lag1_autocorrelation: lag1 })
}

/// Autocorrelation of an equally spaced series at integer lag.
pub fn lag_autocorrelation(samples: &[f64], lag: usize) -> f64 {
    if samples.len() <= lag + 1 {
        return 0.0;
    }
    let n = samples.len();
    let mean = samples.iter().sum::<f64>() / n as f64;
    let var: f64 = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
    if var == 0.0 {
        return 0.0;
    }
    let cov: f64 = samples[..n - lag]
        .iter()
        .zip(&samples[lag..])
        .map(|(a, b)| (a - mean) * (b - mean))
        .sum::<f64>()
        / (n - lag) as f64;
    cov / var
}

/// Sample the reflected (interruption-free) process of the net input:
/// the same event-driven scheme, but at a zero hit the process sticks at
/// zero until the next input jump. Starts empty.
pub fn simulate_reflected<R: Rng + ?Sized>(
    net: &NetInputModel,
    warmup: f64,
    n: usize,
    spacing: f64,
    rng: &mut R,
) -> Result<Vec<f64>> {
    if !(spacing > 0.0) || !(warmup >= 0.0) {
        return Err(Error::Domain("warmup must be >= 0 and spacing > 0".into()));
    }
    let mut eng = Engine::net_only(net, ZeroPolicy::Stick, 0.0, rng);
    let mut samples = Vec::with_capacity(n);
    let mut next_t = warmup + spacing;
    while samples.len() < n {
        match eng.step(next_t) {
            StepOutcome::AtTarget { .. } => {
                samples.push(eng.w);
                next_t += spacing;
            }
            StepOutcome::Event { .. } => {}
            StepOutcome::Absorbed { .. } => unreachable!("stick policy never absorbs"),
        }
    }
    Ok(samples)
}

fn run_to_zero<R: Rng + ?Sized>(mut eng: Engine<'_, R>) -> Result<f64> {
    let mut events: u64 = 0;
    loop {
        match eng.step(f64::INFINITY) {
            StepOutcome::Absorbed { time, .. } => return Ok(time),
            StepOutcome::Event { .. } => {
                events += 1;
                if events > BUSY_EVENT_CAP {
                    return Err(Error::EventCapReached { cap: BUSY_EVENT_CAP, time: eng.t });
                }
            }
            StepOutcome::AtTarget { .. } => unreachable!("infinite target"),
        }
    }
}

/// First zero-hit time of the full process started from `init` workload.
/// Breakdowns stay active; the terminal zero hit does not trigger a vacation
/// (the vacation belongs to the next cycle).
pub fn simulate_busy_period<R: Rng + ?Sized>(
    model: &QueueModel,
    init: f64,
    rng: &mut R,
) -> Result<f64> {
    if !(init > 0.0) {
        return Err(Error::Domain(format!("busy period needs a positive start, got {init}")));
    }
    run_to_zero(Engine::absorbing(model, init, rng))
}

/// `n`-order busy period: start from the sum of `n` draws of `b_law`, run
/// with breakdowns only (no vacations), return the first zero-hit time.
pub fn simulate_n_order_busy<R: Rng + ?Sized>(
    model: &QueueModel,
    n: usize,
    b_law: &JumpDistribution,
    rng: &mut R,
) -> Result<f64> {
    if n == 0 {
        return Ok(0.0);
    }
    let init: f64 = (0..n).map(|_| b_law.sample(rng)).sum();
    run_to_zero(Engine::absorbing(model, init, rng))
}

/// First passage of the net input below `-xi_value` (no breakdowns, no
/// vacations). Spectrally positive paths creep downward, so the passage time
/// is an exact linear-segment computation.
pub fn simulate_first_passage<R: Rng + ?Sized>(
    net: &NetInputModel,
    xi_value: f64,
    rng: &mut R,
) -> Result<f64> {
    if !(xi_value > 0.0) {
        return Err(Error::Domain(format!("first passage needs a positive level, got {xi_value}")));
    }
    run_to_zero(Engine::net_only(net, ZeroPolicy::Absorb, xi_value, rng))
}

/// Workload at an independent exponential killing time: draw `T ~ Exp(gamma)`,
/// run the full model from workload `x`, return `W_T`.
pub fn killed_sample<R: Rng + ?Sized>(
    model: &QueueModel,
    x: f64,
    gamma: f64,
    rng: &mut R,
) -> Result<f64> {
    if !(gamma > 0.0) {
        return Err(Error::Domain(format!("killing rate must be positive, got {gamma}")));
    }
    if !(x >= 0.0) {
        return Err(Error::Domain(format!("initial workload must be >= 0, got {x}")));
    }
    let t_kill = Exp::new(gamma).unwrap().sample(rng);
    let mut eng = Engine::full(model, x, rng);
    loop {
        match eng.step(t_kill) {
            StepOutcome::AtTarget { .. } => return Ok(eng.w),
            StepOutcome::Event { .. } => {}
            StepOutcome::Absorbed { .. } => unreachable!(),
        }
    }
}
