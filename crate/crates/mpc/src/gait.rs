//! Trot gait schedule and contact planning.
//!
//! The planar trot alternates front/back single stance: the two legs carry
//! phase offsets 0 and 0.5 and each is in stance while its wrapped phase sits
//! below the stance fraction.

use serde::{Deserialize, Serialize};

use locodistill_sim::Leg;

/// Periodic gait timing shared by the planner and the kinematic stage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaitSchedule {
    pub gait_period: f64,
    /// Fraction of the cycle each leg spends in stance.
    pub stance_fraction: f64,
    /// Phase offset per leg (front, back).
    pub phase_offset: [f64; 2],
    /// Swing apex height (m).
    pub swing_height: f64,
}

impl Default for GaitSchedule {
    fn default() -> Self {
        Self {
            gait_period: 0.3,
            stance_fraction: 0.5,
            phase_offset: [0.0, 0.5],
            swing_height: 0.05,
        }
    }
}

/// Wraps into [0, 1).
pub fn frac(x: f64) -> f64 {
    let f = x - x.floor();
    if f >= 1.0 {
        0.0
    } else {
        f
    }
}

impl GaitSchedule {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.gait_period > 0.0) {
            return Err(format!("gait_period must be positive, got {}", self.gait_period));
        }
        if !(self.stance_fraction > 0.0 && self.stance_fraction < 1.0) {
            return Err(format!(
                "stance_fraction must lie in (0,1), got {}",
                self.stance_fraction
            ));
        }
        for (i, offset) in self.phase_offset.iter().enumerate() {
            if !(*offset >= 0.0 && *offset < 1.0) {
                return Err(format!("phase_offset[{i}] must lie in [0,1), got {offset}"));
            }
        }
        if !(self.swing_height >= 0.0) {
            return Err(format!("swing_height must be non-negative, got {}", self.swing_height));
        }
        Ok(())
    }

    /// Wrapped leg phase at global gait phase `phase`.
    pub fn leg_phase(&self, phase: f64, leg: Leg) -> f64 {
        frac(phase - self.phase_offset[leg.index()])
    }

    /// True iff the leg is in stance at the given gait phase.
    pub fn in_stance(&self, phase: f64, leg: Leg) -> bool {
        self.leg_phase(phase, leg) < self.stance_fraction
    }

    /// Swing progress in [0, 1); 0 when the leg is in stance.
    pub fn swing_phase(&self, phase: f64, leg: Leg) -> f64 {
        let lp = self.leg_phase(phase, leg);
        if lp < self.stance_fraction {
            0.0
        } else {
            (lp - self.stance_fraction) / (1.0 - self.stance_fraction)
        }
    }

    /// Stance duration in seconds.
    pub fn stance_duration(&self) -> f64 {
        self.stance_fraction * self.gait_period
    }
}

/// Stance flags per node per leg over a lookahead horizon.
pub fn contact_plan(
    phase: f64,
    schedule: &GaitSchedule,
    horizon_nodes: usize,
    node_dt: f64,
) -> Vec<[bool; 2]> {
    (0..horizon_nodes)
        .map(|k| {
            let node_phase = frac(phase + k as f64 * node_dt / schedule.gait_period);
            [
                schedule.in_stance(node_phase, Leg::Front),
                schedule.in_stance(node_phase, Leg::Back),
            ]
        })
        .collect()
}
