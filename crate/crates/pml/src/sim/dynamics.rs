use crate::steer::SteeringAction;
use crate::vehicle::{wrap_angle, VehicleState};

/// One kinematic bicycle step.
///
/// The action scales the road-wheel angle; the yaw rate is
/// `speed / wheelbase * tan(wheel_angle)` and the position advances
/// `speed * dt` along the already-updated heading, so a full step is a
/// rotation followed by a translation. Speed never changes.
pub fn step_dynamics(
    state: &VehicleState,
    action: SteeringAction,
    dt: f64,
    wheelbase: f64,
    max_wheel_angle: f64,
) -> VehicleState {
    debug_assert!(dt > 0.0 && wheelbase > 0.0);
    let wheel = action.value() * max_wheel_angle;
    let heading = wrap_angle(state.heading + state.speed / wheelbase * wheel.tan() * dt);
    let step = state.speed * dt;
    VehicleState {
        x: state.x + step * heading.cos(),
        y: state.y + step * heading.sin(),
        heading,
        speed: state.speed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn act(v: f64) -> SteeringAction {
        SteeringAction::new(v).unwrap()
    }

    fn start() -> VehicleState {
        VehicleState::new(0.0, 0.0, 0.0, 5.0).unwrap()
    }

    #[test]
    fn zero_action_drives_straight() {
        let s = step_dynamics(&start(), act(0.0), 0.1, 2.5, 0.5);
        assert_eq!(s.x, 0.5);
        assert_eq!(s.y, 0.0);
        assert_eq!(s.heading, 0.0);
        assert_eq!(s.speed, 5.0);
    }

    #[test]
    fn heading_accumulates_linearly_under_constant_action() {
        let (dt, wheelbase, max_wheel) = (0.1, 2.5, 0.5);
        let a = act(0.4);
        let mut s = start();
        let n = 25;
        for _ in 0..n {
            s = step_dynamics(&s, a, dt, wheelbase, max_wheel);
        }
        let per_step = s.speed / wheelbase * (a.value() * max_wheel).tan() * dt;
        assert!((s.heading - n as f64 * per_step).abs() < 1e-12);
    }

    #[test]
    fn trajectory_approximates_closed_form_circle() {
        // Constant wheel angle traces a circle of radius wheelbase/tan(wheel).
        let (dt, wheelbase, max_wheel) = (0.01, 2.5, 0.5);
        let a = act(0.5);
        let radius = wheelbase / (a.value() * max_wheel).tan();
        let mut s = start();
        let steps = 600; // 30 m of arc at 5 m/s
        for _ in 0..steps {
            s = step_dynamics(&s, a, dt, wheelbase, max_wheel);
        }
        let arc = s.speed * dt * steps as f64;
        let phi = arc / radius;
        // Circle center starts at (0, radius) in a frame where +y is right.
        let expect_x = radius * phi.sin();
        let expect_y = radius * (1.0 - phi.cos());
        let err = ((s.x - expect_x).powi(2) + (s.y - expect_y).powi(2)).sqrt();
        assert!(
            err < 0.01 * radius,
            "integrator strayed {err} m from the closed-form circle (radius {radius})"
        );
    }

    #[test]
    fn opposite_actions_mirror_exactly() {
        let mut left = VehicleState::new(3.0, 0.0, 0.0, 5.0).unwrap();
        let mut right = left;
        for _ in 0..50 {
            left = step_dynamics(&left, act(-0.7), 0.1, 2.5, 0.5);
            right = step_dynamics(&right, act(0.7), 0.1, 2.5, 0.5);
        }
        assert_eq!(left.x.to_bits(), right.x.to_bits());
        assert_eq!(left.y.to_bits(), (-right.y).to_bits());
        assert_eq!(left.heading.to_bits(), (-right.heading).to_bits());
    }

    #[test]
    fn displacement_norm_equals_speed_dt() {
        let mut s = VehicleState::new(1.0, -2.0, 0.9, 4.0).unwrap();
        for i in 0..20 {
            let next = step_dynamics(&s, act(((i % 5) as f64 - 2.0) / 2.0), 0.1, 2.5, 0.5);
            let d = ((next.x - s.x).powi(2) + (next.y - s.y).powi(2)).sqrt();
            assert!((d - 0.4).abs() < 1e-12);
            s = next;
        }
    }

    #[test]
    fn positive_action_turns_toward_positive_y() {
        let s = step_dynamics(&start(), act(1.0), 0.1, 2.5, 0.5);
        assert!(s.heading > 0.0);
        assert!(s.y > 0.0, "positive steering must curve rightward (+y)");
    }
}
