use crate::error::{QpError, Result};

use super::flow::PhaseFlowField;

pub type PhasePoint = (f64, f64);

/// One classical RK4 step of `dz/dt = V(z)`; negative `dt` integrates backwards.
#[inline]
pub fn rk4_step(flow: &PhaseFlowField, z: PhasePoint, dt: f64) -> PhasePoint {
    let (dq, dp) = rk4_displacement(flow, z, dt);
    (z.0 + dq, z.1 + dp)
}

/// Displacement of one RK4 step; exactly zero where the flow vanishes.
#[inline]
pub(crate) fn rk4_displacement(flow: &PhaseFlowField, z: PhasePoint, dt: f64) -> (f64, f64) {
    let (q, p) = z;
    let k1 = flow.velocity(q, p);
    let k2 = flow.velocity(q + 0.5 * dt * k1.0, p + 0.5 * dt * k1.1);
    let k3 = flow.velocity(q + 0.5 * dt * k2.0, p + 0.5 * dt * k2.1);
    let k4 = flow.velocity(q + dt * k3.0, p + dt * k3.1);
    let dq = dt / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
    let dp = dt / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
    (dq, dp)
}

fn checked_step(flow: &PhaseFlowField, z: PhasePoint, dt: f64) -> Result<PhasePoint> {
    let (q, p) = z;
    let k1 = flow.velocity(q, p);
    let z2 = (q + 0.5 * dt * k1.0, p + 0.5 * dt * k1.1);
    let k2 = flow.velocity(z2.0, z2.1);
    let z3 = (q + 0.5 * dt * k2.0, p + 0.5 * dt * k2.1);
    let k3 = flow.velocity(z3.0, z3.1);
    let z4 = (q + dt * k3.0, p + dt * k3.1);
    for s in [z, z2, z3, z4] {
        if !flow.in_domain(s.0, s.1) {
            return Err(QpError::OutOfDomain { q: s.0, p: s.1 });
        }
    }
    let k4 = flow.velocity(z4.0, z4.1);
    Ok((
        q + dt / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0),
        p + dt / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1),
    ))
}

/// RK4 path from `z0` to `t_final`, including both endpoints. The last step is
/// shortened so the path ends exactly at `t_final`.
pub fn trace_characteristic(
    z0: PhasePoint,
    flow: &PhaseFlowField,
    t_final: f64,
    dt: f64,
) -> Result<Vec<PhasePoint>> {
    if !(dt > 0.0) || !(t_final >= 0.0) {
        return Err(QpError::InvalidParameter(format!(
            "need dt > 0 and t_final ≥ 0, got {dt}, {t_final}"
        )));
    }
    let steps = (t_final / dt - 1e-9).ceil().max(0.0) as usize;
    let mut path = Vec::with_capacity(steps + 1);
    path.push(z0);
    let mut z = z0;
    for k in 0..steps {
        let h = if k + 1 == steps {
            t_final - k as f64 * dt
        } else {
            dt
        };
        z = checked_step(flow, z, h)?;
        path.push(z);
    }
    Ok(path)
}

/// First return time of the orbit through `z0`: the time at which the path
/// crosses back through the line through `z0` normal to `V(z0)`, going forward.
/// Crossings are located by linear interpolation between RK4 steps.
pub fn orbit_period(
    z0: PhasePoint,
    flow: &PhaseFlowField,
    dt: f64,
    t_max: f64,
) -> Result<Option<f64>> {
    if !(dt > 0.0) {
        return Err(QpError::InvalidParameter(format!(
            "dt must be positive, got {dt}"
        )));
    }
    let v0 = flow.velocity(z0.0, z0.1);
    if v0 == (0.0, 0.0) {
        return Ok(None);
    }
    let side = |z: PhasePoint| (z.0 - z0.0) * v0.0 + (z.1 - z0.1) * v0.1;
    let mut z = z0;
    let mut t = 0.0;
    let mut prev = 0.0;
    let mut left = false;
    while t < t_max {
        let next = checked_step(flow, z, dt)?;
        let s = side(next);
        if s < 0.0 {
            left = true;
        } else if left && prev < 0.0 {
            return Ok(Some(t + dt * (-prev) / (s - prev)));
        }
        prev = s;
        z = next;
        t += dt;
    }
    Ok(None)
}
