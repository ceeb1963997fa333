use rayon::prelude::*;

use super::{run_session, ProtocolError, ProtocolParams};
use crate::bitstring::make_pair_with_agreement;
use crate::randomness::{derive_seed, LocalRng, SharedSeed};

/// Per-step statistics of the agreement count over independent trials.
/// Index 0 is the initial state.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryStats {
    pub trials: usize,
    pub mean: Vec<f64>,
    /// Unbiased sample variance; zero for a single trial.
    pub variance: Vec<f64>,
}

impl TrajectoryStats {
    pub fn from_trajectories(trajectories: &[Vec<usize>]) -> Self {
        let trials = trajectories.len();
        let len = trajectories.iter().map(Vec::len).max().unwrap_or(0);
        let mut mean = vec![0.0; len];
        let mut m2 = vec![0.0; len];
        for (t, traj) in trajectories.iter().enumerate() {
            let count = (t + 1) as f64;
            for i in 0..len {
                let v = traj[i.min(traj.len() - 1)] as f64;
                let delta = v - mean[i];
                mean[i] += delta / count;
                m2[i] += delta * (v - mean[i]);
            }
        }
        let variance = if trials > 1 {
            m2.into_iter().map(|s| s / (trials - 1) as f64).collect()
        } else {
            vec![0.0; len]
        };
        Self { trials, mean, variance }
    }

    /// Standard error of the mean at step `i`.
    pub fn std_error(&self, i: usize) -> f64 {
        (self.variance[i] / self.trials as f64).sqrt()
    }
}

/// Seeds for trial `index`: (shared seed, pair setup, party A, party B).
fn trial_seeds(base: u64, index: usize) -> [u64; 4] {
    let i = 4 * index as u64;
    [
        derive_seed(base, i),
        derive_seed(base, i + 1),
        derive_seed(base, i + 2),
        derive_seed(base, i + 3),
    ]
}

/// Agreement trajectories `[X(0), X(1), ...]` of independent sessions,
/// in trial order. Sessions stopped early are padded with their last
/// value.
pub fn run_trials(
    params: &ProtocolParams,
    x0_count: usize,
    trials: usize,
    base_seed: u64,
) -> Result<Vec<Vec<usize>>, ProtocolError> {
    params.validate()?;
    if x0_count > params.n {
        return Err(ProtocolError::Params(format!(
            "initial agreement {x0_count} exceeds n = {}",
            params.n
        )));
    }
    if trials == 0 {
        return Err(ProtocolError::Params("trials must be positive".into()));
    }
    (0..trials)
        .into_par_iter()
        .map(|index| {
            let [shared, pair, sa, sb] = trial_seeds(base_seed, index);
            let p = ProtocolParams {
                seed: SharedSeed::new(shared),
                ..params.clone()
            };
            let wrap = |e: ProtocolError| ProtocolError::Trial {
                index,
                source: Box::new(e),
            };
            let (a, b) = make_pair_with_agreement(p.n, x0_count, &mut LocalRng::seeded(pair))
                .map_err(|e| wrap(e.into()))?;
            let out = run_session(&p, a, b, &mut LocalRng::seeded(sa), &mut LocalRng::seeded(sb)).map_err(wrap)?;
            let mut traj = Vec::with_capacity(p.t_max as usize + 1);
            traj.push(x0_count);
            traj.extend(out.trace.iter().map(|r| r.agreement));
            traj.resize(p.t_max as usize + 1, *traj.last().expect("nonempty"));
            Ok(traj)
        })
        .collect()
}

/// Mean and variance of `X(i)` over `trials` independent sessions.
pub fn run_monte_carlo(
    params: &ProtocolParams,
    x0_count: usize,
    trials: usize,
    base_seed: u64,
) -> Result<TrajectoryStats, ProtocolError> {
    let trajectories = run_trials(params, x0_count, trials, base_seed)?;
    Ok(TrajectoryStats::from_trajectories(&trajectories))
}
