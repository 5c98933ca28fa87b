//! Quadrotor power model: thrust, pitch, induced velocity and the flying and
//! hovering power draw of a drone in steady flight.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::{lit, to_f64, Scalar};

/// Iteration cap of the induced-velocity solver.
pub const MAX_SOLVER_ITERATIONS: usize = 10_000;

/// Damping applied to each fixed-point update of the induced velocity.
pub const SOLVER_DAMPING: f64 = 0.5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PowerError {
    #[error("drone parameter `{0}` is out of range")]
    InvalidSpec(&'static str),
    #[error("environment parameter `{0}` must be positive")]
    InvalidEnvironment(&'static str),
    #[error("thrust must be positive, got {0}")]
    NonPositiveThrust(f64),
    #[error("induced velocity did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
}

/// Physical parameters of one drone type.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DroneSpec<S> {
    /// kg
    pub body_mass: S,
    /// kg
    pub battery_mass: S,
    /// m
    pub propeller_diameter: S,
    pub propeller_count: u32,
    /// m/s
    pub ground_speed: S,
    /// N
    pub drag_force: S,
    /// Overall power efficiency in `(0, 1]`.
    pub power_efficiency: S,
    /// J
    pub battery_capacity: S,
    /// Sensing values collected per second of hovering.
    pub sensing_frequency: S,
}

impl<S: Scalar> Default for DroneSpec<S> {
    /// A DJI Phantom 4 Pro class quadrotor; one sensing value per 60 s of hover.
    fn default() -> Self {
        Self {
            body_mass: lit(1.07),
            battery_mass: lit(0.31),
            propeller_diameter: lit(0.35),
            propeller_count: 4,
            ground_speed: lit(6.94),
            drag_force: lit(4.1134),
            power_efficiency: lit(0.8),
            battery_capacity: lit(275_000.0),
            sensing_frequency: lit(1.0 / 60.0),
        }
    }
}

impl<S: Scalar> DroneSpec<S> {
    pub fn total_mass(&self) -> S {
        self.body_mass + self.battery_mass
    }

    pub fn validate(&self) -> Result<(), PowerError> {
        let positive = [
            ("body_mass", self.body_mass),
            ("battery_mass", self.battery_mass),
            ("propeller_diameter", self.propeller_diameter),
            ("battery_capacity", self.battery_capacity),
            ("sensing_frequency", self.sensing_frequency),
        ];
        for (name, v) in positive {
            if !(v > S::zero()) || !v.is_finite() {
                return Err(PowerError::InvalidSpec(name));
            }
        }
        if !(self.ground_speed >= S::zero()) {
            return Err(PowerError::InvalidSpec("ground_speed"));
        }
        if !(self.drag_force >= S::zero()) {
            return Err(PowerError::InvalidSpec("drag_force"));
        }
        if self.propeller_count == 0 {
            return Err(PowerError::InvalidSpec("propeller_count"));
        }
        let eps = self.power_efficiency;
        if !(eps > S::zero() && eps <= S::one()) {
            return Err(PowerError::InvalidSpec("power_efficiency"));
        }
        Ok(())
    }

    /// Swept-disk factor `pi * d^2 * r * rho` shared by the induced-velocity
    /// and hover equations.
    fn disk_factor(&self, env: &Environment<S>) -> S {
        S::PI()
            * self.propeller_diameter
            * self.propeller_diameter
            * S::from_u32(self.propeller_count).expect("propeller count")
            * env.air_density
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Environment<S> {
    /// kg/m^3
    pub air_density: S,
    /// m/s^2
    pub gravity: S,
}

impl<S: Scalar> Default for Environment<S> {
    fn default() -> Self {
        Self {
            air_density: lit(1.225),
            gravity: lit(9.81),
        }
    }
}

impl<S: Scalar> Environment<S> {
    pub fn validate(&self) -> Result<(), PowerError> {
        if !(self.air_density > S::zero()) {
            return Err(PowerError::InvalidEnvironment("air_density"));
        }
        if !(self.gravity > S::zero()) {
            return Err(PowerError::InvalidEnvironment("gravity"));
        }
        Ok(())
    }
}

/// Flying and hovering power of a drone, with the flight operating point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerProfile<S> {
    /// W
    pub flying_power: S,
    /// W
    pub hover_power: S,
    /// rad
    pub pitch: S,
    /// m/s, at the flight operating point.
    pub induced_velocity: S,
}

impl<S: Scalar> PowerProfile<S> {
    pub fn new(spec: &DroneSpec<S>, env: &Environment<S>) -> Result<Self, PowerError> {
        spec.validate()?;
        env.validate()?;
        let thrust = total_thrust(spec, env, spec.drag_force);
        let pitch = pitch_from_drag(spec, env);
        let induced_velocity = induced_velocity(thrust, spec, env, pitch)?;
        Ok(Self {
            flying_power: forward_power(spec, thrust, pitch, induced_velocity),
            hover_power: hover_power(spec, env),
            pitch,
            induced_velocity,
        })
    }
}

/// Required thrust `(m_b + m_e) g + drag`.
pub fn total_thrust<S: Scalar>(spec: &DroneSpec<S>, env: &Environment<S>, drag: S) -> S {
    spec.total_mass() * env.gravity + drag
}

/// Pitch angle balancing the drag force in steady flight.
pub fn pitch_from_drag<S: Scalar>(spec: &DroneSpec<S>, env: &Environment<S>) -> S {
    spec.drag_force.atan2(spec.total_mass() * env.gravity)
}

fn induced_rhs<S: Scalar>(thrust: S, disk: S, speed: S, pitch: S, vi: S) -> S {
    let two = lit::<S>(2.0);
    let axial = speed * pitch.sin() + vi;
    let edgewise = speed * pitch.cos();
    two * thrust / (disk * (edgewise * edgewise + axial * axial).sqrt())
}

/// Residual `|rhs(v_i) - v_i|` of the induced-velocity equation.
pub fn induced_velocity_residual<S: Scalar>(
    vi: S,
    thrust: S,
    spec: &DroneSpec<S>,
    env: &Environment<S>,
    pitch: S,
) -> S {
    let disk = spec.disk_factor(env);
    (induced_rhs(thrust, disk, spec.ground_speed, pitch, vi) - vi).abs()
}

/// Solves the induced-velocity equation by damped fixed-point iteration,
/// starting from the closed-form hover solution.
pub fn induced_velocity<S: Scalar>(
    thrust: S,
    spec: &DroneSpec<S>,
    env: &Environment<S>,
    pitch: S,
) -> Result<S, PowerError> {
    if !(thrust > S::zero()) {
        return Err(PowerError::NonPositiveThrust(to_f64(thrust)));
    }
    let disk = spec.disk_factor(env);
    let speed = spec.ground_speed;
    let damping = lit::<S>(SOLVER_DAMPING);
    let tol = S::solver_tolerance();

    let mut vi = (lit::<S>(2.0) * thrust / disk).sqrt();
    let mut residual = S::infinity();
    for _ in 0..MAX_SOLVER_ITERATIONS {
        let next = induced_rhs(thrust, disk, speed, pitch, vi);
        residual = (next - vi).abs();
        if residual < tol {
            return Ok(vi);
        }
        vi = damping * vi + (S::one() - damping) * next;
    }
    Err(PowerError::NoConvergence {
        iterations: MAX_SOLVER_ITERATIONS,
        residual: to_f64(residual),
    })
}

fn forward_power<S: Scalar>(spec: &DroneSpec<S>, thrust: S, pitch: S, vi: S) -> S {
    (spec.ground_speed * pitch.sin() + vi) * thrust / spec.power_efficiency
}

/// Power draw in forward flight at the spec's ground speed and drag.
pub fn flying_power<S: Scalar>(spec: &DroneSpec<S>, env: &Environment<S>) -> Result<S, PowerError> {
    let thrust = total_thrust(spec, env, spec.drag_force);
    let pitch = pitch_from_drag(spec, env);
    let vi = induced_velocity(thrust, spec, env, pitch)?;
    Ok(forward_power(spec, thrust, pitch, vi))
}

/// Power draw while hovering, `T^1.5 / (eps * sqrt(pi d^2 r rho / 2))`.
pub fn hover_power<S: Scalar>(spec: &DroneSpec<S>, env: &Environment<S>) -> S {
    let thrust = spec.total_mass() * env.gravity;
    let half_disk = lit::<S>(0.5) * spec.disk_factor(env);
    thrust.powf(lit(1.5)) / (spec.power_efficiency * half_disk.sqrt())
}
