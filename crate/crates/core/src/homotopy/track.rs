//! Natural-parameter continuation of zeros and periodic orbits.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::census::{
    refine_model, refine_zero, zero_record, Orbit, RefineError, RefineOpts, Region, Window, ZeroRec,
};
use crate::flow::Model;

/// Why a continuation step was rejected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Error)]
#[serde(rename_all = "snake_case")]
pub enum LossReason {
    #[error("corrector did not converge")]
    NoConvergence,
    #[error("orbit collapsed onto a zero")]
    Collapsed,
    #[error("orbit merged into one of half its period")]
    HalvedPeriod,
    #[error("corrector jumped to a different record")]
    Jump,
}

#[derive(Debug, Clone, Copy, PartialEq, Error, Serialize, Deserialize)]
#[error("lost track between t = {t_good} and t = {t_lost}: {reason}")]
pub struct LostTrack {
    pub t_good: f64,
    pub t_lost: f64,
    pub reason: LossReason,
}

/// A continued record: an embedded periodic orbit or a zero of the field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum State {
    Orbit(Orbit),
    Zero(ZeroRec),
}

impl State {
    pub fn point(&self) -> &[f64] {
        match self {
            State::Orbit(o) => &o.base_point,
            State::Zero(z) => &z.point,
        }
    }

    pub fn as_orbit(&self) -> Option<&Orbit> {
        match self {
            State::Orbit(o) => Some(o),
            State::Zero(_) => None,
        }
    }

    pub fn as_zero(&self) -> Option<&ZeroRec> {
        match self {
            State::Zero(z) => Some(z),
            State::Orbit(_) => None,
        }
    }
}

pub(crate) fn inf_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

/// Smallest signed distance of an orbit to the region boundary.
pub fn orbit_margin(orbit: &Orbit, region: &Region) -> f64 {
    orbit
        .samples
        .iter()
        .map(|p| region.margin(p))
        .fold(f64::INFINITY, f64::min)
}

/// Corrector shared by the sweep and by `continue_record`.
pub(crate) struct Continuer<'a> {
    pub model: &'a Model,
    pub refine: RefineOpts,
    /// Scale of admissible jumps between consecutive states.
    pub jump_scale: f64,
}

impl<'a> Continuer<'a> {
    pub fn new(model: &'a Model, window: &'a Window, base: RefineOpts) -> Self {
        let r = window.region.bounding_radius();
        let mut refine = base;
        refine.s_limit = 4.0 * window.s_max;
        refine.box_radius = 4.0 * r + 1.0;
        Continuer {
            model,
            refine,
            jump_scale: 0.05 * r,
        }
    }

    /// Corrects `prev` (known at some earlier parameter) at `t`, using
    /// `prev2` for a secant predictor when given.
    pub fn step(&self, prev2: Option<(f64, &State)>, prev: (f64, &State), t: f64) -> Result<State, LossReason> {
        let (t1, s1) = prev;
        let ratio = |t0: f64| if t1 != t0 { (t - t1) / (t1 - t0) } else { 0.0 };
        match s1 {
            State::Orbit(o) => {
                let (mut x, mut s) = (o.base_point.clone(), o.minimal_period);
                let mut dx = 0.0;
                let mut ds = 0.0;
                if let Some((t0, State::Orbit(p))) = prev2 {
                    let r = ratio(t0);
                    if (p.minimal_period - o.minimal_period).abs() < 0.2 * o.minimal_period {
                        for (xi, (a, b)) in x.iter_mut().zip(o.base_point.iter().zip(&p.base_point)) {
                            *xi = a + r * (a - b);
                        }
                        s = o.minimal_period + r * (o.minimal_period - p.minimal_period);
                        dx = inf_dist(&x, &o.base_point);
                        ds = (s - o.minimal_period).abs();
                    }
                }
                self.correct_orbit(o, &x, s, t, dx, ds).map(State::Orbit)
            }
            State::Zero(z) => {
                let mut x = z.point.clone();
                if let Some((t0, State::Zero(p))) = prev2 {
                    let r = ratio(t0);
                    for (xi, (a, b)) in x.iter_mut().zip(z.point.iter().zip(&p.point)) {
                        *xi = a + r * (a - b);
                    }
                }
                let dx = inf_dist(&x, &z.point);
                self.correct_zero(z, &x, t, dx).map(State::Zero)
            }
        }
    }

    fn correct_orbit(&self, prev: &Orbit, x: &[f64], s: f64, t: f64, dx: f64, ds: f64) -> Result<Orbit, LossReason> {
        let mut guess = x.to_vec();
        if let Model::Flow(f) = self.model {
            f.project(&mut guess);
        }
        let o = match refine_model(self.model, &guess, s, Some(t), &self.refine) {
            Ok(o) => o,
            Err(RefineError::CollapsedToZero { .. }) => return Err(LossReason::Collapsed),
            Err(_) => return Err(LossReason::NoConvergence),
        };
        if o.minimal_period < 0.75 * prev.minimal_period {
            let half = (2.0 * o.minimal_period - prev.minimal_period).abs() < 0.1 * prev.minimal_period;
            return Err(if half { LossReason::HalvedPeriod } else { LossReason::Jump });
        }
        if (o.minimal_period - s).abs() > 3.0 * ds + 0.05 * prev.minimal_period {
            return Err(LossReason::Jump);
        }
        let near = prev
            .samples
            .iter()
            .map(|q| inf_dist(q, &o.base_point))
            .fold(f64::INFINITY, f64::min);
        let chord = prev
            .samples
            .windows(2)
            .map(|w| inf_dist(&w[0], &w[1]))
            .fold(0.0, f64::max);
        if near > 3.0 * dx + chord + self.jump_scale {
            return Err(LossReason::Jump);
        }
        Ok(o)
    }

    fn correct_zero(&self, prev: &ZeroRec, x: &[f64], t: f64, dx: f64) -> Result<ZeroRec, LossReason> {
        let Model::Flow(field) = self.model else {
            return Err(LossReason::NoConvergence);
        };
        let p = refine_zero(field, x, t, self.refine.box_radius).ok_or(LossReason::NoConvergence)?;
        if inf_dist(&p, &prev.point) > 3.0 * dx + self.jump_scale {
            return Err(LossReason::Jump);
        }
        zero_record(field, &p, t).ok_or(LossReason::NoConvergence)
    }

    /// Continues `state` from `t_from` to `t_to` in steps of at most
    /// `max_step`, halving a rejected step down to `min_step`.
    pub fn continue_to(
        &self,
        state: &State,
        t_from: f64,
        t_to: f64,
        max_step: f64,
        min_step: f64,
    ) -> Result<State, LostTrack> {
        let dir = (t_to - t_from).signum();
        let mut prev2: Option<(f64, State)> = None;
        let mut cur = (t_from, state.clone());
        let mut h = max_step;
        while (t_to - cur.0) * dir > 0.0 {
            let t_next = if (t_to - cur.0).abs() <= h { t_to } else { cur.0 + dir * h };
            let p2 = prev2.as_ref().map(|(t, s)| (*t, s));
            match self.step(p2, (cur.0, &cur.1), t_next) {
                Ok(s) => {
                    prev2 = Some(std::mem::replace(&mut cur, (t_next, s)));
                    h = (2.0 * h).min(max_step);
                }
                Err(reason) => {
                    if h * 0.5 < min_step {
                        return Err(LostTrack {
                            t_good: cur.0,
                            t_lost: t_next,
                            reason,
                        });
                    }
                    h *= 0.5;
                }
            }
        }
        Ok(cur.1)
    }
}

/// Eigenvalue of `spectrum` in the upper half plane nearest to `target`.
pub(crate) fn nearest_pair(zero: &ZeroRec, target: Complex64) -> Option<Complex64> {
    zero.spectrum
        .upper_half_plane()
        .into_iter()
        .min_by(|a, b| (a - target).norm().partial_cmp(&(b - target).norm()).unwrap())
}

pub(crate) fn det_shift(o: &Orbit, c: f64) -> f64 {
    o.holonomy.shift(c).det()
}
