//! Plain-text exports. Numbers are written with the shortest representation
//! that round-trips exactly, so output is byte-stable for identical inputs.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::linalg::Vec8;
use crate::sde::Trajectory;

pub const TRAJECTORY_HEADER: &str = "path_id,t,z1,z2,z3,z4,z5,z6,z7,z8";

/// One row per saved state, paths in the given order.
pub fn trajectories_csv(paths: &[Trajectory]) -> String {
    let mut out = String::with_capacity(64 + paths.len() * 200);
    out.push_str(TRAJECTORY_HEADER);
    out.push('\n');
    for p in paths {
        for (t, z) in p.times.iter().zip(&p.states) {
            let _ = write!(out, "{},{}", p.path_id, t);
            for x in z.as_vec().iter() {
                let _ = write!(out, ",{x}");
            }
            out.push('\n');
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRow {
    pub path_id: u64,
    pub t: f64,
    pub z: Vec8,
}

pub fn parse_trajectories_csv(text: &str) -> Result<Vec<TrajectoryRow>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == TRAJECTORY_HEADER => {}
        _ => {
            return Err(Error::Parse(format!(
                "line 1: expected header {TRAJECTORY_HEADER}"
            )))
        }
    }
    let mut rows = Vec::new();
    for (k, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let bad = |what: &str| Error::Parse(format!("line {}: {what}", k + 1));
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 10 {
            return Err(bad(&format!("expected 10 fields, found {}", fields.len())));
        }
        let path_id = fields[0].trim().parse().map_err(|_| bad("bad path_id"))?;
        let nums = fields[1..]
            .iter()
            .map(|f| {
                f.trim()
                    .parse::<f64>()
                    .map_err(|_| bad(&format!("bad number {f:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(TrajectoryRow {
            path_id,
            t: nums[0],
            z: Vec8::from_column_slice(&nums[1..]),
        });
    }
    Ok(rows)
}

/// Two-column series `name_x,name_y`.
pub fn series_csv(x_name: &str, y_name: &str, points: &[(f64, f64)]) -> String {
    let mut out = format!("{x_name},{y_name}\n");
    for (x, y) in points {
        let _ = writeln!(out, "{x},{y}");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sde::{simulate_ensemble, EnsembleSpec, SaveSchedule, Scheme};
    use crate::{SdeProblem, SpherePoint};

    #[test]
    fn trajectory_csv_round_trip() {
        let p = SdeProblem::brownian_motion(SpherePoint::basis(2));
        let spec = EnsembleSpec::new(3, 10, 0.01, 4, Scheme::Heun).saving(SaveSchedule::Every(5));
        let paths = simulate_ensemble(&p, &spec).unwrap();
        let csv = trajectories_csv(&paths);
        assert!(csv.starts_with("path_id,t,z1,z2,z3,z4,z5,z6,z7,z8\n"));
        let rows = parse_trajectories_csv(&csv).unwrap();
        assert_eq!(rows.len(), 9);
        for (r, (path, slot)) in rows
            .iter()
            .zip((0..3).flat_map(|i| (0..3).map(move |s| (i, s))))
        {
            assert_eq!(r.path_id, paths[path].path_id);
            assert_eq!(r.t, paths[path].times[slot]);
            assert_eq!(&r.z, paths[path].states[slot].as_vec());
        }
        assert_eq!(trajectories_csv(&paths), csv);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let text = format!("{TRAJECTORY_HEADER}\n0,0,1,0,0,0,0,0,0,0\n1,0,x,0,0,0,0,0,0,0\n");
        match parse_trajectories_csv(&text) {
            Err(Error::Parse(m)) => assert!(m.starts_with("line 3")),
            other => panic!("{other:?}"),
        }
        assert!(parse_trajectories_csv("a,b\n").is_err());
    }

    #[test]
    fn series_format() {
        assert_eq!(
            series_csv("t", "s", &[(0.0, 1.5), (0.5, 2.0)]),
            "t,s\n0,1.5\n0.5,2\n"
        );
    }
}
