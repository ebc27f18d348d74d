use std::collections::VecDeque;

/// Kinematic sample of one vehicle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Kinematics {
    pub position: f64,
    pub velocity: f64,
    pub acceleration: f64,
}

impl Kinematics {
    fn lerp(a: &Self, b: &Self, w: f64) -> Self {
        Self {
            position: a.position + w * (b.position - a.position),
            velocity: a.velocity + w * (b.velocity - a.velocity),
            acceleration: a.acceleration + w * (b.acceleration - a.acceleration),
        }
    }
}

pub type Snapshot = Vec<Kinematics>;

#[derive(Debug, Clone)]
struct Frame {
    state: Snapshot,
    /// State just before an instantaneous jump at this step, if any.
    before_jump: Option<Snapshot>,
}

impl Frame {
    fn new(state: Snapshot) -> Self {
        Self {
            state,
            before_jump: None,
        }
    }

    fn side(&self, left: bool) -> &Snapshot {
        match (&self.before_jump, left) {
            (Some(s), true) => s,
            _ => &self.state,
        }
    }
}

/// Which one-sided value to read at a step where the state jumps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// Value after the jump; start-of-step lookups.
    Right,
    /// Value before the jump; end-of-step lookups.
    Left,
}

/// Snapshots of the whole platoon on the step grid `t_k = k·dt`, keeping
/// only as many as the delayed lookups need.
#[derive(Debug, Clone)]
pub struct History {
    /// Step index of `frames[0]`.
    first: i64,
    frames: VecDeque<Frame>,
    depth: usize,
}

/// Fractional parts below this snap to the grid point.
const GRID_SNAP: f64 = 1e-9;

impl History {
    /// Primes the buffer with constant-speed motion for all `t ≤ 0`:
    /// `x(t) = x(0) + v(0)·t`, zero acceleration.
    pub fn primed(initial: &[Kinematics], dt: f64, max_delay: f64) -> Self {
        let depth = (2.0 * max_delay / dt).ceil() as usize + 2;
        let frames = (0..depth)
            .rev()
            .map(|back| {
                let t = -(back as f64) * dt;
                initial
                    .iter()
                    .map(|k| Kinematics {
                        position: k.position + k.velocity * t,
                        velocity: k.velocity,
                        acceleration: 0.0,
                    })
                    .collect()
            })
            .map(Frame::new)
            .collect();
        Self {
            first: -(depth as i64 - 1),
            frames,
            depth,
        }
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    /// Step index of the newest snapshot.
    pub fn latest_index(&self) -> i64 {
        self.first + self.frames.len() as i64 - 1
    }

    pub fn latest(&self) -> &Snapshot {
        &self.frames.back().expect("history is never empty").state
    }

    pub fn latest_mut(&mut self) -> &mut Snapshot {
        &mut self.frames.back_mut().expect("history is never empty").state
    }

    /// Replaces the newest snapshot after an instantaneous change, keeping
    /// the earlier state as its left-hand limit.
    pub fn jump_latest(&mut self, snapshot: Snapshot) {
        let frame = self.frames.back_mut().expect("history is never empty");
        let before = std::mem::replace(&mut frame.state, snapshot);
        frame.before_jump.get_or_insert(before);
    }

    pub fn push(&mut self, snapshot: Snapshot) {
        self.frames.push_back(Frame::new(snapshot));
        if self.frames.len() > self.depth {
            self.frames.pop_front();
            self.first += 1;
        }
    }

    fn frame<'a>(
        &'a self,
        index: i64,
        left: bool,
        provisional: Option<&'a Snapshot>,
    ) -> &'a Snapshot {
        let latest = self.latest_index();
        if index > latest {
            assert_eq!(index, latest + 1, "lookup beyond the provisional frame");
            provisional.expect("lookup ahead of history without a provisional frame")
        } else {
            let offset = (index - self.first).max(0) as usize;
            self.frames[offset].side(left)
        }
    }

    /// Linearly interpolated platoon state at fractional step index `at`.
    /// `provisional` stands in for the frame one step past the newest
    /// stored one. Between grid points the interpolation runs from the
    /// post-jump value of the earlier frame to the pre-jump value of the
    /// later one; exactly on a grid point `side` picks the limit.
    pub fn sample(&self, at: f64, side: Side, provisional: Option<&Snapshot>) -> Snapshot {
        let base = at.floor();
        let mut frac = at - base;
        let mut k0 = base as i64;
        if frac > 1.0 - GRID_SNAP {
            k0 += 1;
            frac = 0.0;
        } else if frac < GRID_SNAP {
            frac = 0.0;
        }
        if frac == 0.0 {
            return self.frame(k0, side == Side::Left, provisional).clone();
        }
        let lo = self.frame(k0, false, provisional);
        let hi = self.frame(k0 + 1, true, provisional);
        lo.iter()
            .zip(hi)
            .map(|(a, b)| Kinematics::lerp(a, b, frac))
            .collect()
    }
}
