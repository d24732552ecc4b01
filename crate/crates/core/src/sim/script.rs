use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{DisplayGeometry, ScreenPoint};

/// One step of scripted gaze behaviour.
///
/// A fixation on a target different from the current one moves the target
/// there; the simulated eye follows after its saccadic reaction time. A
/// blink keeps the target and gaze where they are.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScriptEvent {
    Fixation { target: ScreenPoint, duration_ms: f64 },
    Blink { duration_ms: f64 },
}

impl ScriptEvent {
    pub fn duration_ms(&self) -> f64 {
        match self {
            ScriptEvent::Fixation { duration_ms, .. } | ScriptEvent::Blink { duration_ms } => *duration_ms,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GazeScript {
    pub events: Vec<ScriptEvent>,
}

impl GazeScript {
    pub fn new(events: Vec<ScriptEvent>) -> Self {
        Self { events }
    }

    pub fn fixation(target: ScreenPoint, duration_ms: f64) -> Self {
        Self::new(vec![ScriptEvent::Fixation {
            target,
            duration_ms,
        }])
    }

    pub fn then_fixate(mut self, target: ScreenPoint, duration_ms: f64) -> Self {
        self.events.push(ScriptEvent::Fixation {
            target,
            duration_ms,
        });
        self
    }

    pub fn then_blink(mut self, duration_ms: f64) -> Self {
        self.events.push(ScriptEvent::Blink { duration_ms });
        self
    }

    pub fn duration_ms(&self) -> f64 {
        self.events.iter().map(ScriptEvent::duration_ms).sum()
    }

    pub fn first_target(&self) -> Option<ScreenPoint> {
        self.events.iter().find_map(|e| match e {
            ScriptEvent::Fixation { target, .. } => Some(*target),
            _ => None,
        })
    }

    pub fn validate(&self, geom: &DisplayGeometry) -> Result<()> {
        for e in &self.events {
            if !(e.duration_ms() >= 0.0) || !e.duration_ms().is_finite() {
                return Err(Error::arg("script durations must be finite and >= 0"));
            }
            if let ScriptEvent::Fixation { target, .. } = e {
                if !geom.contains(target) {
                    return Err(Error::arg(format!("fixation target {target:?} outside the display")));
                }
            }
        }
        Ok(())
    }

    /// Random fixations with blinks sprinkled in at `blink_rate_per_min`.
    /// Blinks fall inside fixations, never across a target change.
    #[allow(clippy::too_many_arguments)]
    pub fn random_fixations(
        rng: &mut impl Rng,
        geom: &DisplayGeometry,
        margin_px: f64,
        count: usize,
        duration_ms: (f64, f64),
        blink_rate_per_min: f64,
        blink_duration_ms: f64,
    ) -> Self {
        let mut events = Vec::new();
        for _ in 0..count {
            let target = random_point(rng, geom, margin_px);
            let total = if duration_ms.1 > duration_ms.0 {
                rng.random_range(duration_ms.0..duration_ms.1)
            } else {
                duration_ms.0
            };
            let p_blink = (blink_rate_per_min * total / 60_000.0).min(1.0);
            if blink_duration_ms > 0.0 && rng.random_bool(p_blink) && total > blink_duration_ms + 1200.0 {
                let before = rng.random_range(600.0..(total - blink_duration_ms - 600.0));
                events.push(ScriptEvent::Fixation {
                    target,
                    duration_ms: before,
                });
                events.push(ScriptEvent::Blink {
                    duration_ms: blink_duration_ms,
                });
                events.push(ScriptEvent::Fixation {
                    target,
                    duration_ms: total - before - blink_duration_ms,
                });
            } else {
                events.push(ScriptEvent::Fixation {
                    target,
                    duration_ms: total,
                });
            }
        }
        Self { events }
    }
}

/// Uniform point inside the display, `margin_px` from every edge.
pub fn random_point(rng: &mut impl Rng, geom: &DisplayGeometry, margin_px: f64) -> ScreenPoint {
    ScreenPoint::new(
        rng.random_range(margin_px..(geom.width - margin_px)),
        rng.random_range(margin_px..(geom.height - margin_px)),
    )
}
