//! Time integration of `u_t - M(‖∇u‖₂²)Δu = |u|^{q-1}u` with zero Dirichlet data.
//!
//! The default scheme is linearly implicit Euler: the diffusion is implicit
//! with the nonlocal coefficient lagged, the source is explicit, so every step
//! costs one solve with `I/dt + M(Aⁿ)(-Δ)`.

mod checks;

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::discretization::{grad_norm_sq, lp_power, solve_shifted, Field};
use crate::error::{KirchhoffError, Result};
use crate::functionals::ModelParams;

pub use checks::{
    decay_rates, dl2_identity_check, energy_identity_residual, fit_decay_exponent, verify_decay,
    DecayRates, DecayVerification, InequalityCheck, DECAY_SLACK,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scheme {
    SemiImplicit,
    FullyImplicit,
}

/// Step-size control and stopping rules.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct TimeStepConfig {
    pub dt: f64,
    pub t_end: f64,
    pub scheme: Scheme,
    /// Numerical blow-up is declared once `‖∇u‖₂` reaches this value.
    pub blowup_cap: f64,
    pub dt_min: f64,
    pub adaptive: bool,
    /// Record scalars (and fields, if stored) every this many accepted steps.
    pub snapshot_stride: usize,
    pub store_fields: bool,
}

impl TimeStepConfig {
    pub fn new(dt: f64, t_end: f64) -> Self {
        Self {
            dt,
            t_end,
            scheme: Scheme::SemiImplicit,
            blowup_cap: 1e6,
            dt_min: dt * 1e-8,
            adaptive: true,
            snapshot_stride: 1,
            store_fields: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let mut errs = Vec::new();
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            errs.push(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            errs.push(format!("t_end must be positive, got {}", self.t_end));
        }
        if !(self.blowup_cap > 0.0) {
            errs.push(format!(
                "blowup_cap must be positive, got {}",
                self.blowup_cap
            ));
        }
        if !(self.dt_min > 0.0 && self.dt_min <= self.dt) {
            errs.push(format!(
                "dt_min must satisfy 0 < dt_min <= dt, got dt_min = {}, dt = {}",
                self.dt_min, self.dt
            ));
        }
        if self.snapshot_stride == 0 {
            errs.push("snapshot_stride must be at least 1".into());
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(KirchhoffError::Config(errs))
        }
    }
}

/// Coefficients driving one step. Unlike [`ModelParams`] this admits `b = 0`
/// and switching the source off, which turns the scheme into plain implicit
/// Euler for the heat equation.
#[derive(Clone, Copy, Debug)]
pub struct StepModel {
    pub a: f64,
    pub b: f64,
    pub q: f64,
    pub with_source: bool,
}

impl From<&ModelParams> for StepModel {
    fn from(p: &ModelParams) -> Self {
        Self {
            a: p.a(),
            b: p.b(),
            q: p.q(),
            with_source: true,
        }
    }
}

impl StepModel {
    fn source_field(&self, u: &Field) -> Field {
        if self.with_source {
            let q = self.q;
            u.map(|v| v.abs().powf(q - 1.0) * v)
        } else {
            Field::zeros(*u.mesh())
        }
    }

    fn coefficient(&self, u: &Field) -> f64 {
        self.a + self.b * grad_norm_sq(u)
    }
}

const FIXED_POINT_TOL: f64 = 1e-10;
const FIXED_POINT_MAX_ITER: usize = 50;

/// Advance one step of size `dt`.
pub fn step(u: &Field, dt: f64, p: &ModelParams, scheme: Scheme) -> Result<Field> {
    step_with_model(u, dt, &StepModel::from(p), scheme)
}

pub fn step_with_model(u: &Field, dt: f64, model: &StepModel, scheme: Scheme) -> Result<Field> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(KirchhoffError::Domain(format!(
            "dt must be positive, got {dt}"
        )));
    }
    let inv_dt = 1.0 / dt;
    match scheme {
        Scheme::SemiImplicit => {
            let rhs = u.scaled(inv_dt).add_scaled(1.0, &model.source_field(u))?;
            solve_shifted(&rhs, inv_dt, model.coefficient(u))
        }
        Scheme::FullyImplicit => {
            let base = u.scaled(inv_dt);
            let mut w = u.clone();
            let mut a_prev = grad_norm_sq(&w);
            for _ in 0..FIXED_POINT_MAX_ITER {
                let rhs = base.add_scaled(1.0, &model.source_field(&w))?;
                let next = solve_shifted(&rhs, inv_dt, model.a + model.b * a_prev)?;
                let a_next = grad_norm_sq(&next);
                let change = next.sub(&w)?.max_abs();
                let a_ok =
                    (a_next - a_prev).abs() <= FIXED_POINT_TOL * a_next.max(f64::MIN_POSITIVE);
                let u_ok = change <= FIXED_POINT_TOL * next.max_abs().max(f64::MIN_POSITIVE);
                w = next;
                a_prev = a_next;
                if !w.is_finite() {
                    break;
                }
                if a_ok && u_ok {
                    return Ok(w);
                }
            }
            Err(KirchhoffError::Numerical(format!(
                "implicit fixed point did not converge in {FIXED_POINT_MAX_ITER} iterations at dt = {dt:e}"
            )))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "kind")]
pub enum Outcome {
    /// `‖∇u‖₂²` fell below `1e-14` times its initial value (or `u₀ = 0`).
    GlobalDecay {
        t: f64,
    },
    /// Numerical blow-up: the gradient cap was reached or the step size collapsed.
    BlowUp {
        t_star: f64,
    },
    ReachedTEnd,
}

impl Outcome {
    pub fn label(&self) -> &'static str {
        match self {
            Self::GlobalDecay { .. } => "GlobalDecay",
            Self::BlowUp { .. } => "BlowUp",
            Self::ReachedTEnd => "ReachedTEnd",
        }
    }
}

/// Scalar history of a run, one entry per snapshot.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub q: f64,
    pub times: Vec<f64>,
    pub l2_sq: Vec<f64>,
    pub h1_sq: Vec<f64>,
    /// `‖u‖_{q+1}`.
    pub lq1: Vec<f64>,
    pub energy: Vec<f64>,
    pub nehari: Vec<f64>,
    /// `H = J + ‖u‖₂²`.
    pub aux_h: Vec<f64>,
    /// Cumulative `Σ dt ‖(uⁿ⁺¹ - uⁿ)/dt‖₂²`.
    pub dissipation: Vec<f64>,
    /// `‖(uⁿ⁺¹ - uⁿ)/dt‖₂` of the step that produced the snapshot (0 at `t = 0`).
    pub ut_l2: Vec<f64>,
    pub fields: Vec<Field>,
    pub outcome: Outcome,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
    /// Largest `J(uⁿ⁺¹) - J(uⁿ)` over accepted steps.
    pub max_energy_increase: f64,
    pub note: Option<String>,
}

/// Relative allowance for per-step energy increase: `1e-8 * max(1, |J|)`.
pub const STEP_ENERGY_TOL: f64 = 1e-8;
/// Decay-to-zero threshold relative to the initial `‖∇u‖₂²`.
pub const DECAY_TO_ZERO: f64 = 1e-14;
const CLEAN_STEPS_BEFORE_GROWTH: usize = 20;

struct Recorder<'a> {
    traj: Trajectory,
    p: &'a ModelParams,
    store_fields: bool,
}

impl Recorder<'_> {
    fn record(&mut self, t: f64, u: &Field, dissipation: f64, ut: f64) {
        let p = self.p;
        let l2 = lp_power(u, 2.0);
        let a = grad_norm_sq(u);
        let b = lp_power(u, p.q() + 1.0);
        let j = 0.5 * p.a() * a + 0.25 * p.b() * a * a - b / (p.q() + 1.0);
        let tr = &mut self.traj;
        tr.times.push(t);
        tr.l2_sq.push(l2);
        tr.h1_sq.push(a);
        tr.lq1.push(b.powf(1.0 / (p.q() + 1.0)));
        tr.energy.push(j);
        tr.nehari.push(p.a() * a + p.b() * a * a - b);
        tr.aux_h.push(j + l2);
        tr.dissipation.push(dissipation);
        tr.ut_l2.push(ut);
        if self.store_fields {
            tr.fields.push(u.clone());
        }
    }
}

/// March from `u0` until `t_end`, numerical blow-up, or decay to zero.
pub fn simulate(u0: &Field, p: &ModelParams, cfg: &TimeStepConfig) -> Result<Trajectory> {
    cfg.validate()?;
    let model = StepModel::from(p);
    let mut rec = Recorder {
        traj: Trajectory {
            q: p.q(),
            times: Vec::new(),
            l2_sq: Vec::new(),
            h1_sq: Vec::new(),
            lq1: Vec::new(),
            energy: Vec::new(),
            nehari: Vec::new(),
            aux_h: Vec::new(),
            dissipation: Vec::new(),
            ut_l2: Vec::new(),
            fields: Vec::new(),
            outcome: Outcome::ReachedTEnd,
            accepted_steps: 0,
            rejected_steps: 0,
            max_energy_increase: f64::NEG_INFINITY,
            note: None,
        },
        p,
        store_fields: cfg.store_fields,
    };
    let mut u = u0.clone();
    let mut t = 0.0;
    let mut dissipation = 0.0;
    rec.record(t, &u, dissipation, 0.0);
    let a0 = grad_norm_sq(&u);
    if a0 == 0.0 {
        rec.traj.outcome = Outcome::GlobalDecay { t: 0.0 };
        rec.traj.max_energy_increase = 0.0;
        return Ok(rec.traj);
    }
    let mut energy = rec.traj.energy[0];
    let mut dt = cfg.dt;
    let mut clean = 0usize;
    let mut since_snapshot = 0usize;
    let mut last_ut = 0.0;
    let outcome = loop {
        if t >= cfg.t_end * (1.0 - 1e-14) {
            break Outcome::ReachedTEnd;
        }
        let h = dt.min(cfg.t_end - t);
        let attempt = step_with_model(&u, h, &model, cfg.scheme);
        let (next, next_energy) = match attempt {
            Ok(w) if w.is_finite() => {
                let e = crate::functionals::energy_j(&w, p);
                (Some(w), e)
            }
            Ok(_) => (None, f64::NAN),
            Err(KirchhoffError::Numerical(_)) if cfg.adaptive => (None, f64::NAN),
            Err(e) => return Err(e),
        };
        let tol = STEP_ENERGY_TOL * energy.abs().max(1.0);
        let accept = match &next {
            Some(_) => !cfg.adaptive || next_energy <= energy + tol,
            None => false,
        };
        if !accept {
            if next.is_none() && !cfg.adaptive {
                rec.traj.note = Some(format!("non-finite state at t = {t:e}"));
                break Outcome::BlowUp { t_star: t };
            }
            rec.traj.rejected_steps += 1;
            clean = 0;
            dt *= 0.5;
            if dt < cfg.dt_min {
                rec.traj.note = Some(format!(
                    "step size fell below dt_min = {:e} at t = {t:e}",
                    cfg.dt_min
                ));
                break Outcome::BlowUp { t_star: t };
            }
            continue;
        }
        let w = next.expect("accepted step has a state");
        let diff = w.sub(&u)?;
        let ut_sq = lp_power(&diff, 2.0) / (h * h);
        dissipation += h * ut_sq;
        last_ut = ut_sq.sqrt();
        rec.traj.max_energy_increase = rec.traj.max_energy_increase.max(next_energy - energy);
        u = w;
        energy = next_energy;
        t += h;
        rec.traj.accepted_steps += 1;
        since_snapshot += 1;
        clean += 1;
        if cfg.adaptive && clean >= CLEAN_STEPS_BEFORE_GROWTH && dt < cfg.dt {
            dt = (2.0 * dt).min(cfg.dt);
            clean = 0;
        }
        let a = grad_norm_sq(&u);
        if a.sqrt() >= cfg.blowup_cap {
            rec.record(t, &u, dissipation, last_ut);
            break Outcome::BlowUp { t_star: t };
        }
        if a < DECAY_TO_ZERO * a0 {
            rec.record(t, &u, dissipation, last_ut);
            break Outcome::GlobalDecay { t };
        }
        if since_snapshot >= cfg.snapshot_stride {
            rec.record(t, &u, dissipation, last_ut);
            since_snapshot = 0;
        }
    };
    if matches!(outcome, Outcome::ReachedTEnd) && since_snapshot > 0 {
        rec.record(t, &u, dissipation, last_ut);
    }
    if rec.traj.accepted_steps == 0 {
        rec.traj.max_energy_increase = 0.0;
    }
    rec.traj.outcome = outcome;
    Ok(rec.traj)
}

/// `{:.16e}`: 17 significant digits, round-trip exact for `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().unwrap_or(&0.0)
    }

    /// CSV with header `t,L2sq,H1sq,Lq1,J,I,H,D`, one row per snapshot.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "t,L2sq,H1sq,Lq1,J,I,H,D")?;
        for k in 0..self.len() {
            let row = [
                self.times[k],
                self.l2_sq[k],
                self.h1_sq[k],
                self.lq1[k],
                self.energy[k],
                self.nehari[k],
                self.aux_h[k],
                self.dissipation[k],
            ];
            let cells: Vec<String> = row.iter().map(|&x| fmt_f64(x)).collect();
            writeln!(w, "{}", cells.join(","))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::{first_eigenfunction, first_eigenvalue, Mesh};
    use std::f64::consts::PI;

    fn params() -> ModelParams {
        ModelParams::new(1.0, 1.0, 5.0, 1).unwrap()
    }

    #[test]
    fn zero_is_a_fixed_point() {
        let z = Field::zeros(Mesh::unit_interval(31).unwrap());
        for scheme in [Scheme::SemiImplicit, Scheme::FullyImplicit] {
            assert!(step(&z, 1e-3, &params(), scheme).unwrap().is_zero());
        }
        let tr = simulate(&z, &params(), &TimeStepConfig::new(1e-3, 1.0)).unwrap();
        assert_eq!(tr.outcome, Outcome::GlobalDecay { t: 0.0 });
        assert_eq!(tr.len(), 1);
        assert!(tr
            .energy
            .iter()
            .chain(&tr.l2_sq)
            .chain(&tr.dissipation)
            .all(|&v| v == 0.0));
    }

    #[test]
    fn heat_mode_follows_implicit_euler_recurrence() {
        let m = Mesh::unit_interval(63).unwrap();
        let e1 = first_eigenfunction(&m);
        let lam = first_eigenvalue(&m);
        let model = StepModel {
            a: 0.7,
            b: 0.0,
            q: 5.0,
            with_source: false,
        };
        let dt = 1e-3;
        let mut u = e1.clone();
        for n in 1..=50 {
            u = step_with_model(&u, dt, &model, Scheme::SemiImplicit).unwrap();
            let factor = (1.0 + dt * 0.7 * lam).powi(-n);
            let err = u.sub(&e1.scaled(factor)).unwrap().max_abs();
            assert!(err <= 1e-12 * e1.max_abs(), "step {n}: {err}");
        }
    }

    #[test]
    fn schemes_agree_for_small_steps() {
        let m = Mesh::unit_interval(63).unwrap();
        let u = Field::from_fn(m, |x, _| 0.5 * (PI * x).sin() + 0.1 * (3.0 * PI * x).sin());
        let semi = step(&u, 1e-5, &params(), Scheme::SemiImplicit).unwrap();
        let full = step(&u, 1e-5, &params(), Scheme::FullyImplicit).unwrap();
        assert!(semi.sub(&full).unwrap().max_abs() < 1e-5 * u.max_abs());
    }

    #[test]
    fn rejects_nonpositive_dt() {
        let z = Field::zeros(Mesh::unit_interval(7).unwrap());
        assert!(step(&z, 0.0, &params(), Scheme::SemiImplicit).is_err());
        let mut cfg = TimeStepConfig::new(-1.0, 1.0);
        assert!(cfg.validate().is_err());
        cfg = TimeStepConfig::new(1e-3, 1.0);
        cfg.dt_min = 1.0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn csv_header_and_rows() {
        let m = Mesh::unit_interval(15).unwrap();
        let u0 = Field::from_fn(m, |x, _| 1e-2 * (PI * x).sin());
        let tr = simulate(&u0, &params(), &TimeStepConfig::new(1e-2, 0.05)).unwrap();
        let mut buf = Vec::new();
        tr.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "t,L2sq,H1sq,Lq1,J,I,H,D");
        assert_eq!(lines.len(), tr.len() + 1);
        assert_eq!(lines[1].split(',').count(), 8);
    }
}
