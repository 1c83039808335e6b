use super::{VehicleParams, VehicleState, WrenchCommand};
use crate::error::{Error, Result};
use crate::{Quat, Vec3};

pub fn clamp_command(cmd: &WrenchCommand, params: &VehicleParams) -> WrenchCommand {
    let thrust = if cmd.thrust.is_nan() {
        0.0
    } else {
        cmd.thrust.clamp(0.0, params.max_thrust)
    };
    let mut torque = cmd.torque;
    for i in 0..3 {
        let lim = params.max_torque[i];
        torque[i] = if torque[i].is_nan() {
            0.0
        } else {
            torque[i].clamp(-lim, lim)
        };
    }
    WrenchCommand { thrust, torque }
}

/// One semi-implicit Euler step of the rigid-body dynamics.
///
/// Forces: thrust along body `z`, gravity along world `-z`, and linear drag
/// `drag * (wind - v)`. Wind exerts no torque. Returns the next state and
/// the world-frame acceleration applied during the step.
pub fn step_dynamics(
    state: &VehicleState,
    command: &WrenchCommand,
    wind: &Vec3,
    params: &VehicleParams,
    dt: f64,
) -> Result<(VehicleState, Vec3)> {
    if !(dt > 0.0 && dt <= 0.02) {
        return Err(Error::Parameter(format!("dt {dt} outside (0, 0.02]")));
    }
    if !state.is_finite()
        || !command.thrust.is_finite()
        || command.torque.iter().any(|c| !c.is_finite())
        || wind.iter().any(|c| !c.is_finite())
    {
        return Err(Error::State("non-finite dynamics input".into()));
    }
    let cmd = clamp_command(command, params);
    let q = state.pose.orientation;
    let v = state.twist.linear;
    let thrust_world = q.rotate(&Vec3::new(0.0, 0.0, cmd.thrust));
    let force = thrust_world + params.gravity_vec() * params.mass + (wind - v) * params.drag;
    let accel = force / params.mass;

    let inertia = params.inertia_vec();
    let w = state.twist.angular;
    let gyroscopic = w.cross(&inertia.component_mul(&w));
    let ang_accel = (cmd.torque - gyroscopic).component_div(&inertia);

    let mut next = *state;
    next.twist.linear = v + accel * dt;
    next.pose.position = state.pose.position + next.twist.linear * dt;
    next.twist.angular = w + ang_accel * dt;
    next.pose.orientation = q * Quat::from_rotation_vector(&(next.twist.angular * dt));
    next.pose.stamp = state.pose.stamp + dt;
    if !next.is_finite() {
        return Err(Error::State("dynamics produced non-finite state".into()));
    }
    Ok((next, accel))
}
