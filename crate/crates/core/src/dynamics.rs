//! Standard map with a cavity-dependent kick strength and spontaneous-emission
//! recoils.

use std::f64::consts::TAU;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::angle::wrap_2pi;
use crate::cavity::{solve_cavity_field, SolverOptions};
use crate::error::{Error, Result};
use crate::params::NormalizedParams;
use crate::rng::{self, StreamRng};

/// Reduced position and momentum, both unbounded.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct State {
    pub x: f64,
    pub p: f64,
}

impl State {
    pub fn new(x: f64, p: f64) -> Self {
        State { x, p }
    }
}

/// How the per-kick fluorescence probability is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", content = "g", rename_all = "snake_case")]
pub enum SpontaneousEmission {
    Disabled,
    /// Fixed probability per kick, independent of position.
    Constant(f64),
    /// `g_a` from the self-consistent Rabi frequency at the atom.
    PositionDependent,
}

impl SpontaneousEmission {
    pub fn is_active(&self) -> bool {
        match *self {
            SpontaneousEmission::Disabled => false,
            SpontaneousEmission::Constant(g) => g > 0.0,
            SpontaneousEmission::PositionDependent => true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimOptions {
    pub emission: SpontaneousEmission,
    pub solver: SolverOptions,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions {
            emission: SpontaneousEmission::PositionDependent,
            solver: SolverOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KickRecord {
    pub n: usize,
    /// Position at which the kick is applied.
    pub x: f64,
    /// Momentum after the kick, recoil included.
    pub p: f64,
    pub kick_strength: f64,
    /// `S / I0` while the kick is on.
    pub transmission: f64,
    /// Realized recoil, one of `{-kbar, 0, +kbar}`.
    pub se_dp: f64,
    pub g_a: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryRecord {
    pub params: NormalizedParams,
    pub seed: u64,
    pub stream: u64,
    pub initial: State,
    pub kicks: Vec<KickRecord>,
}

impl TrajectoryRecord {
    pub fn transmissions(&self) -> Vec<f64> {
        self.kicks.iter().map(|k| k.transmission).collect()
    }

    /// `(X mod 2pi, P mod 2pi)` for each kick.
    pub fn phase_points(&self) -> Vec<(f64, f64)> {
        self.kicks.iter().map(|k| (wrap_2pi(k.x), wrap_2pi(k.p))).collect()
    }
}

/// Probability of one absorption / spontaneous-emission cycle during a pulse.
pub fn fluorescence_probability(omega2: f64, detuning: f64, gamma: f64, pulse: f64) -> Result<f64> {
    let half = 0.5 * omega2;
    let g = 0.5 * gamma * half / (detuning * detuning + half + 0.25 * gamma * gamma) * pulse;
    if !(g < 1.0) {
        return Err(Error::parameter(
            "g_a",
            format!("fluorescence probability {g} per pulse is not below 1"),
        ));
    }
    Ok(g)
}

/// With probability `g_a` the atom absorbs from one arm of the standing wave
/// and re-emits in a random direction; each photon carries `+-kbar/2`.
pub fn sample_spontaneous_recoil<R: Rng + ?Sized>(g_a: f64, kbar: f64, rng: &mut R) -> f64 {
    sample_fluorescence_cycle(g_a, kbar, rng).unwrap_or(0.0)
}

/// Same draws as [`sample_spontaneous_recoil`], but `None` when no cycle
/// happened, so cycles with cancelling recoils stay visible.
pub fn sample_fluorescence_cycle<R: Rng + ?Sized>(g_a: f64, kbar: f64, rng: &mut R) -> Option<f64> {
    let alpha: f64 = rng.gen();
    if alpha >= g_a {
        return None;
    }
    let half = 0.5 * kbar;
    let absorbed = if rng.gen::<bool>() { half } else { -half };
    let emitted = if rng.gen::<bool>() { half } else { -half };
    Some(absorbed + emitted)
}

/// Free flight followed by a kick evaluated at the new position.
pub fn kick_step<R: Rng + ?Sized>(
    s: State,
    np: &NormalizedParams,
    opts: &SimOptions,
    rng: &mut R,
) -> Result<(State, KickRecord)> {
    let x = s.x + s.p;
    let op = solve_cavity_field(x, np, &opts.solver)?;
    let g_a = match opts.emission {
        SpontaneousEmission::Disabled => 0.0,
        SpontaneousEmission::Constant(g) => {
            if !(0.0..1.0).contains(&g) {
                return Err(Error::parameter("g_override", format!("must lie in [0, 1), got {g}")));
            }
            g
        }
        SpontaneousEmission::PositionDependent => {
            fluorescence_probability(op.rabi_squared, np.detuning(), np.gamma, np.pulse_duration())?
        }
    };
    let se_dp = if opts.emission.is_active() {
        sample_spontaneous_recoil(g_a, np.kbar, rng)
    } else {
        0.0
    };
    let p = s.p - op.kick_strength * x.sin() + se_dp;
    let record = KickRecord {
        n: 0,
        x,
        p,
        kick_strength: op.kick_strength,
        transmission: op.transmission,
        se_dp,
        g_a,
    };
    Ok((State { x, p }, record))
}

pub fn simulate_trajectory(
    initial: State,
    n_kicks: usize,
    np: &NormalizedParams,
    opts: &SimOptions,
    seed: u64,
) -> Result<TrajectoryRecord> {
    simulate_stream(initial, n_kicks, np, opts, seed, 0)
}

fn simulate_stream(
    initial: State,
    n_kicks: usize,
    np: &NormalizedParams,
    opts: &SimOptions,
    seed: u64,
    stream: u64,
) -> Result<TrajectoryRecord> {
    if n_kicks == 0 {
        return Err(Error::Size("a trajectory needs at least one kick".into()));
    }
    if !(initial.x.is_finite() && initial.p.is_finite()) {
        return Err(Error::parameter("initial", "initial state must be finite"));
    }
    let mut rng: StreamRng = rng::stream(seed, stream);
    let mut state = initial;
    let mut kicks = Vec::with_capacity(n_kicks);
    for n in 0..n_kicks {
        let (next, mut record) = kick_step(state, np, opts, &mut rng).map_err(|e| e.at_kick(n))?;
        record.n = n;
        kicks.push(record);
        state = next;
    }
    Ok(TrajectoryRecord {
        params: *np,
        seed,
        stream,
        initial,
        kicks,
    })
}

/// Trajectory `i` draws from stream `i` of `seed`, so results do not depend
/// on evaluation order. Failures are reported per trajectory.
pub fn simulate_ensemble(
    initials: &[State],
    n_kicks: usize,
    np: &NormalizedParams,
    opts: &SimOptions,
    seed: u64,
) -> Vec<Result<TrajectoryRecord>> {
    initials
        .iter()
        .enumerate()
        .map(|(i, &s)| simulate_stream(s, n_kicks, np, opts, seed, i as u64))
        .collect()
}

/// `count` initial conditions at the cell centres of a near-square grid over
/// `[0, 2pi)^2`, filled row by row.
pub fn initial_grid(count: usize) -> Vec<State> {
    if count == 0 {
        return Vec::new();
    }
    let cols = (count as f64).sqrt().ceil() as usize;
    let rows = count.div_ceil(cols);
    (0..count)
        .map(|i| {
            let (c, r) = (i % cols, i / cols);
            State::new(
                (c as f64 + 0.5) * TAU / cols as f64,
                (r as f64 + 0.5) * TAU / rows as f64,
            )
        })
        .collect()
}
