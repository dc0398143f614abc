use nalgebra::Point2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scene::{wrap_angle, Pose2};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NavConfig {
    /// Forward speed (m/s).
    pub speed: f64,
    /// Turn rate limit (rad/s).
    pub turn_rate: f64,
    /// Heading error below which the base starts driving.
    pub align_tolerance: f64,
    /// Heading error above which driving stops for an in-place turn.
    pub realign_threshold: f64,
    pub reach_tolerance: f64,
    pub heading_gain: f64,
    /// Sim seconds without progress before giving up.
    pub stuck_after_s: f64,
}

impl Default for NavConfig {
    fn default() -> Self {
        Self {
            speed: 0.2,
            turn_rate: 1.0,
            align_tolerance: 0.1,
            realign_threshold: std::f64::consts::FRAC_PI_4,
            reach_tolerance: 0.05,
            heading_gain: 2.0,
            stuck_after_s: 5.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NavError {
    #[error("no waypoints")]
    NoWaypoints,
    #[error("no progress toward waypoint {waypoint}")]
    Stuck { waypoint: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NavStep {
    Moving(Pose2),
    Arrived(Pose2),
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Mode {
    Turning,
    Driving,
}

/// Turn-then-drive waypoint follower, stepped at a fixed tick.
#[derive(Debug, Clone, PartialEq)]
pub struct Navigator {
    waypoints: Vec<Point2<f64>>,
    next: usize,
    mode: Mode,
    best: f64,
    idle: f64,
    cfg: NavConfig,
}

impl Navigator {
    pub fn new(waypoints: Vec<Point2<f64>>, cfg: NavConfig) -> Result<Self, NavError> {
        if waypoints.is_empty() {
            return Err(NavError::NoWaypoints);
        }
        Ok(Self {
            waypoints,
            next: 0,
            mode: Mode::Turning,
            best: f64::INFINITY,
            idle: 0.0,
            cfg,
        })
    }

    /// Index of the waypoint being approached.
    pub fn current(&self) -> usize {
        self.next
    }

    pub fn step(&mut self, pose: Pose2, dt: f64) -> Result<NavStep, NavError> {
        let c = &self.cfg;
        let here = Point2::new(pose.x, pose.y);
        while self.next < self.waypoints.len() && (self.waypoints[self.next] - here).norm() < c.reach_tolerance {
            self.next += 1;
            self.best = f64::INFINITY;
            self.idle = 0.0;
        }
        if self.next == self.waypoints.len() {
            return Ok(NavStep::Arrived(pose));
        }
        let to = self.waypoints[self.next] - here;
        let dist = to.norm();
        if dist < self.best - 1e-4 {
            self.best = dist;
            self.idle = 0.0;
        } else {
            self.idle += dt;
            if self.idle > c.stuck_after_s {
                return Err(NavError::Stuck { waypoint: self.next });
            }
        }
        let err = wrap_angle(to.y.atan2(to.x) - pose.theta);
        match self.mode {
            Mode::Turning if err.abs() < c.align_tolerance => self.mode = Mode::Driving,
            Mode::Driving if err.abs() > c.realign_threshold => self.mode = Mode::Turning,
            _ => {}
        }
        let max_turn = c.turn_rate * dt;
        let mut next = pose;
        match self.mode {
            Mode::Turning => next.theta = wrap_angle(pose.theta + err.clamp(-max_turn, max_turn)),
            Mode::Driving => {
                let w = (c.heading_gain * err).clamp(-c.turn_rate, c.turn_rate);
                next.theta = wrap_angle(pose.theta + w * dt);
                let ds = (c.speed * dt).min(dist);
                next.x += ds * next.theta.cos();
                next.y += ds * next.theta.sin();
            }
        }
        Ok(NavStep::Moving(next))
    }
}

/// Base poses visited while following `waypoints` from `start`, one per tick.
pub fn follow_waypoints(start: Pose2, waypoints: &[Point2<f64>], cfg: &NavConfig, dt: f64) -> Result<Vec<Pose2>, NavError> {
    let mut nav = Navigator::new(waypoints.to_vec(), *cfg)?;
    let mut pose = start;
    let mut out = vec![start];
    loop {
        match nav.step(pose, dt)? {
            NavStep::Moving(p) => {
                pose = p;
                out.push(p);
            }
            NavStep::Arrived(_) => return Ok(out),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn dist(p: &Pose2, w: Point2<f64>) -> f64 {
        (Point2::new(p.x, p.y) - w).norm()
    }

    #[test]
    fn straight_ahead() {
        let w = Point2::new(1.0, 0.0);
        let t = follow_waypoints(Pose2::default(), &[w], &NavConfig::default(), 0.05).unwrap();
        for pair in t.windows(2) {
            assert!(dist(&pair[1], w) < dist(&pair[0], w));
        }
        assert!(dist(t.last().unwrap(), w) < 0.05);
    }

    #[test]
    fn behind_turns_first() {
        let w = Point2::new(-1.0, 0.0);
        let t = follow_waypoints(Pose2::default(), &[w], &NavConfig::default(), 0.05).unwrap();
        let first_move = t.iter().position(|p| p.x != 0.0 || p.y != 0.0).unwrap();
        let heading = t[first_move - 1].theta;
        assert!((wrap_angle(heading - PI)).abs() < 0.1 + 0.05);
        assert!(dist(t.last().unwrap(), w) < 0.05);
    }

    #[test]
    fn corner_visited_in_order() {
        let ws = [Point2::new(1.0, 0.0), Point2::new(1.0, 1.0)];
        let t = follow_waypoints(Pose2::default(), &ws, &NavConfig::default(), 0.05).unwrap();
        let first = t.iter().position(|p| dist(p, ws[0]) < 0.05).unwrap();
        let second = t.iter().position(|p| dist(p, ws[1]) < 0.05).unwrap();
        assert!(first < second);
    }

    #[test]
    fn empty_is_error() {
        assert_eq!(Navigator::new(vec![], NavConfig::default()).unwrap_err(), NavError::NoWaypoints);
    }
}
