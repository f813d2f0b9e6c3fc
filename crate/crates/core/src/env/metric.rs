use super::geometry::{angle_diff, dist};
use super::{lidar, EnvSpec, Goal, State};

/// Final-distance components of one episode, named by [`EnvSpec::metric_names`].
#[derive(Debug, Clone, PartialEq)]
pub struct MetricRecord {
    pub components: Vec<f64>,
}

/// LiDAR positions are reported in units of half the map width.
const LIDAR_POSITION_UNIT: f64 = lidar::MAP_SIZE / 2.0;

pub fn eval_metric(spec: &EnvSpec, final_state: &State, goal: &Goal) -> MetricRecord {
    let components = match (*final_state, goal.state) {
        (State::Point(p), State::Point(g)) => vec![dist(p, g)],
        (State::Lidar(p), State::Lidar(g)) => vec![
            dist([p.x, p.y], [g.x, g.y]) / LIDAR_POSITION_UNIT,
            angle_diff(p.heading, g.heading),
        ],
        (State::Push { ee, puck }, State::Push { ee: ge, puck: gp }) => {
            vec![dist(puck, gp), dist(ee, ge)]
        }
        (State::Car { pos, vel }, State::Car { pos: gp, vel: gv }) => {
            vec![dist(pos, gp), dist(vel, gv)]
        }
        (s, g) => panic!("state {s:?} and goal {g:?} belong to different environments"),
    };
    debug_assert_eq!(components.len(), spec.metric_names().len());
    MetricRecord { components }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::{EnvKind, lidar::Pose};

    fn goal(state: State) -> Goal {
        Goal {
            values: Vec::new(),
            state,
        }
    }

    #[test]
    fn exact_goal_is_zero() {
        let spec = EnvSpec::new(EnvKind::ObjectPush);
        let s = State::Push {
            ee: [0.1, 0.2],
            puck: [-0.3, 0.0],
        };
        assert_eq!(eval_metric(&spec, &s, &goal(s)).components, vec![0.0, 0.0]);
    }

    #[test]
    fn three_four_five() {
        let spec = EnvSpec::new(EnvKind::PointMass);
        let m = eval_metric(&spec, &State::Point([0.3, 0.4]), &goal(State::Point([0.0, 0.0])));
        assert!((m.components[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn lidar_orientation_wraps() {
        let spec = EnvSpec::new(EnvKind::Lidar);
        let a = State::Lidar(Pose { x: 50.0, y: 50.0, heading: 0.0 });
        let b = State::Lidar(Pose {
            x: 50.0,
            y: 50.0,
            heading: 2.0 * std::f64::consts::PI - 0.1,
        });
        let m = eval_metric(&spec, &a, &goal(b));
        assert_eq!(m.components[0], 0.0);
        assert!((m.components[1] - 0.1).abs() < 1e-12);
    }

    #[test]
    fn car_velocity_component() {
        let spec = EnvSpec::new(EnvKind::CarPoint);
        let s = State::Car { pos: [0.0, 0.0], vel: [0.03, 0.04] };
        let g = State::Car { pos: [0.0, 0.0], vel: [0.0, 0.0] };
        let m = eval_metric(&spec, &s, &goal(g));
        assert!((m.components[1] - 0.05).abs() < 1e-12);
    }
}
