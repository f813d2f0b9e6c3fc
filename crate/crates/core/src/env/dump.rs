//! Plain-text trajectory dumps.
//!
//! ```text
//! spec,<kind>,<horizon>,<noise_std>
//! goal,<episode>,<g_1>,...,<g_d>
//! step,<episode>,<t>,<o_1>,...,<o_d>,<action>
//! ```
//!
//! Discrete actions are one integer; continuous actions are their four
//! components. Each episode's `goal` row precedes its `step` rows, and steps
//! run `t = 0, 1, ...` without gaps. Floats are written in shortest
//! round-trip form, so parse(write(x)) reproduces `x` exactly.

use std::fmt::Write as _;

use super::{Action, ActionSpace, EnvKind, EnvSpec};
use crate::error::{Error, Result};
use crate::replay::Trajectory;

pub fn write_dump(spec: &EnvSpec, episodes: &[Trajectory]) -> String {
    let mut out = String::new();
    writeln!(out, "spec,{},{},{}", spec.kind, spec.horizon, spec.noise_std).unwrap();
    for (e, traj) in episodes.iter().enumerate() {
        write!(out, "goal,{e}").unwrap();
        for v in traj.goal() {
            write!(out, ",{v}").unwrap();
        }
        out.push('\n');
        for (t, (obs, action)) in traj.observations().iter().zip(traj.actions()).enumerate() {
            write!(out, "step,{e},{t}").unwrap();
            for v in obs {
                write!(out, ",{v}").unwrap();
            }
            match action {
                Action::Discrete(a) => write!(out, ",{a}").unwrap(),
                Action::Continuous(u) => {
                    for v in u {
                        write!(out, ",{v}").unwrap();
                    }
                }
            }
            out.push('\n');
        }
    }
    out
}

fn num<T: std::str::FromStr>(field: &str, line: usize) -> Result<T> {
    field
        .trim()
        .parse()
        .map_err(|_| Error::parse(line, format!("bad number `{field}`")))
}

fn finite(field: &str, line: usize) -> Result<f64> {
    let v: f64 = num(field, line)?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::parse(line, format!("non-finite value `{field}`")))
    }
}

fn finish(done: &mut Vec<Trajectory>, p: Option<Partial>, line: usize) -> Result<()> {
    if let Some(p) = p {
        let traj = Trajectory::new(p.observations, p.actions, p.goal)
            .map_err(|e| Error::parse(line, e.to_string()))?;
        done.push(traj);
    }
    Ok(())
}

struct Partial {
    goal: Vec<f64>,
    observations: Vec<Vec<f64>>,
    actions: Vec<Action>,
}

pub fn parse_dump(text: &str) -> Result<(EnvSpec, Vec<Trajectory>)> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or_else(|| Error::parse(1, "empty dump"))?;
    let fields: Vec<&str> = header.split(',').collect();
    if fields.len() != 4 || fields[0] != "spec" {
        return Err(Error::parse(1, "expected `spec,<kind>,<horizon>,<noise_std>`"));
    }
    let kind: EnvKind = fields[1].parse().map_err(|e: Error| Error::parse(1, e.to_string()))?;
    let mut spec = EnvSpec::new(kind);
    spec.horizon = num(fields[2], 1)?;
    spec.noise_std = finite(fields[3], 1)?;
    if spec.horizon == 0 || spec.noise_std < 0.0 {
        return Err(Error::parse(1, "horizon must be positive and noise nonnegative"));
    }
    let dim = spec.obs_dim();
    let action_width = match spec.action_space() {
        ActionSpace::Discrete(_) => 1,
        ActionSpace::Continuous(n) => n,
    };

    let mut done = Vec::new();
    let mut current: Option<Partial> = None;

    for (idx, raw) in lines {
        let line = idx + 1;
        let fields: Vec<&str> = raw.split(',').collect();
        match fields[0] {
            "goal" => {
                if fields.len() != 2 + dim {
                    return Err(Error::parse(line, format!("goal row needs {} fields", 2 + dim)));
                }
                let episode: usize = num(fields[1], line)?;
                if episode != done.len() + usize::from(current.is_some()) {
                    return Err(Error::parse(line, "episodes must be numbered consecutively"));
                }
                finish(&mut done, current.take(), line)?;
                let goal = fields[2..].iter().map(|f| finite(f, line)).collect::<Result<_>>()?;
                current = Some(Partial {
                    goal,
                    observations: Vec::new(),
                    actions: Vec::new(),
                });
            }
            "step" => {
                if fields.len() != 3 + dim + action_width {
                    return Err(Error::parse(
                        line,
                        format!("step row needs {} fields", 3 + dim + action_width),
                    ));
                }
                let p = current
                    .as_mut()
                    .ok_or_else(|| Error::parse(line, "step before any goal row"))?;
                let episode: usize = num(fields[1], line)?;
                let t: usize = num(fields[2], line)?;
                if episode != done.len() || t != p.observations.len() {
                    return Err(Error::parse(line, "steps must follow their goal row in order"));
                }
                let obs = fields[3..3 + dim]
                    .iter()
                    .map(|f| finite(f, line))
                    .collect::<Result<_>>()?;
                let action = match spec.action_space() {
                    ActionSpace::Discrete(n) => {
                        let a: usize = num(fields[3 + dim], line)?;
                        if a >= n {
                            return Err(Error::parse(line, format!("action {a} out of range")));
                        }
                        Action::Discrete(a)
                    }
                    ActionSpace::Continuous(_) => Action::Continuous(
                        fields[3 + dim..]
                            .iter()
                            .map(|f| finite(f, line))
                            .collect::<Result<_>>()?,
                    ),
                };
                p.observations.push(obs);
                p.actions.push(action);
            }
            other => return Err(Error::parse(line, format!("unknown record `{other}`"))),
        }
    }
    let last_line = text.lines().count();
    finish(&mut done, current.take(), last_line)?;
    Ok((spec, done))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> (EnvSpec, Vec<Trajectory>) {
        let spec = EnvSpec::new(EnvKind::PointMass);
        let t1 = Trajectory::new(
            vec![vec![0.1, -0.2], vec![0.15, -0.2], vec![0.2, -0.2000001]],
            vec![Action::Discrete(4), Action::Discrete(4), Action::Discrete(0)],
            vec![0.9, 0.9],
        )
        .unwrap();
        let t2 = Trajectory::new(
            vec![vec![1.0 / 3.0, 0.0], vec![0.0, 0.0]],
            vec![Action::Discrete(1), Action::Discrete(2)],
            vec![-0.5, 0.5],
        )
        .unwrap();
        (spec, vec![t1, t2])
    }

    #[test]
    fn round_trip_exact() {
        let (spec, eps) = sample();
        let text = write_dump(&spec, &eps);
        let (spec2, eps2) = parse_dump(&text).unwrap();
        assert_eq!(spec2, spec);
        assert_eq!(eps2, eps);
    }

    #[test]
    fn continuous_round_trip() {
        let spec = EnvSpec::new(EnvKind::CarPoint);
        let t = Trajectory::new(
            vec![vec![0.0, 0.1, 0.02, 0.0], vec![0.02, 0.1, 0.02, 0.0]],
            vec![
                Action::Continuous(vec![1.0, 0.0, 0.25, 0.5]),
                Action::Continuous(vec![0.0, 0.0, 0.0, 0.0]),
            ],
            vec![0.5, 0.5, 0.0, 0.0],
        )
        .unwrap();
        let text = write_dump(&spec, std::slice::from_ref(&t));
        assert_eq!(parse_dump(&text).unwrap().1, vec![t]);
    }

    #[test]
    fn rejects_malformed() {
        assert!(parse_dump("").is_err());
        assert!(parse_dump("spec,nowhere,50,0.01").is_err());
        assert!(parse_dump("spec,point_mass,50,0.01\nstep,0,0,0,0,1").is_err());
        assert!(parse_dump("spec,point_mass,50,0.01\ngoal,0,0,0\nstep,0,1,0,0,1").is_err());
        assert!(parse_dump("spec,point_mass,50,0.01\ngoal,0,0,0\nstep,0,0,0,0,7").is_err());
        assert!(parse_dump("spec,point_mass,50,0.01\ngoal,0,0,NaN").is_err());
        // single-step episode has no transition
        assert!(parse_dump("spec,point_mass,50,0.01\ngoal,0,0,0\nstep,0,0,0,0,1").is_err());
    }
}
