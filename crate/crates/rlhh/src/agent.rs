//! CG state featurization and the DDQN hyper-heuristic agent: an MLP
//! Q-function trained with experience replay and a periodically synchronized
//! target network.

use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::engine::CgConfig;
use crate::instance::{Instance, ProblemKind};
use crate::net::PricingNetwork;
use crate::rmp::RmpState;
use crate::{Error, Result};

pub const NUM_ACTIONS: usize = 5;
const FRACTIONAL_EPS: f64 = 1e-6;
const ENTROPY_BINS: usize = 10;

/// Fixed-length state vector: three solution ratios, five statistics for
/// each of {duals, edge costs, modified costs}, and one coefficient of
/// variation per resource. Length 20 for VRPTW, 21 for BDSP.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateFeatures(pub Vec<f64>);

pub fn feature_len(kind: ProblemKind) -> usize {
    match kind {
        ProblemKind::Vrptw => 3 + 3 * 5 + 2,
        ProblemKind::Bdsp => 3 + 3 * 5 + 3,
    }
}

fn stats_with_entropy(values: &[f64]) -> [f64; 5] {
    if values.is_empty() {
        return [0.0; 5];
    }
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / values.len() as f64;
    let entropy = if max > min {
        let mut counts = [0usize; ENTROPY_BINS];
        for &v in values {
            let bin = (((v - min) / (max - min)) * ENTROPY_BINS as f64) as usize;
            counts[bin.min(ENTROPY_BINS - 1)] += 1;
        }
        -counts
            .iter()
            .filter(|&&c| c > 0)
            .map(|&c| {
                let p = c as f64 / values.len() as f64;
                p * p.ln()
            })
            .sum::<f64>()
    } else {
        0.0
    };
    [min, max, mean, var.sqrt(), entropy]
}

fn coefficient_of_variation(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    if mean == 0.0 {
        return 0.0;
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / values.len() as f64;
    var.sqrt() / mean
}

pub fn featurize(
    rmp: &RmpState,
    net: &PricingNetwork,
    duals: &[f64],
    modified: &[f64],
    initial_objective: f64,
) -> StateFeatures {
    let mut f = Vec::with_capacity(feature_len(net.kind));
    f.push(if initial_objective != 0.0 {
        rmp.objective / initial_objective
    } else {
        1.0
    });
    let fractional: Vec<f64> = rmp
        .primal
        .iter()
        .copied()
        .filter(|&x| x > FRACTIONAL_EPS && x < 1.0 - FRACTIONAL_EPS)
        .collect();
    f.push(if fractional.is_empty() {
        0.0
    } else {
        fractional.iter().sum::<f64>() / fractional.len() as f64
    });
    f.push(if rmp.primal.is_empty() {
        0.0
    } else {
        fractional.len() as f64 / rmp.primal.len() as f64
    });
    let costs: Vec<f64> = net.edges.iter().map(|e| e.cost).collect();
    for group in [duals, &costs[..], modified] {
        f.extend(stats_with_entropy(group));
    }
    for r in 0..net.resources.len() {
        let cons: Vec<f64> = net.edges.iter().map(|e| e.consumption[r]).collect();
        f.push(coefficient_of_variation(&cons));
    }
    debug_assert_eq!(f.len(), feature_len(net.kind));
    StateFeatures(f)
}

/// Welford running mean/variance used to standardize features. Frozen at
/// training end and persisted with the model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunningNorm {
    pub mean: Vec<f64>,
    m2: Vec<f64>,
    count: f64,
    pub frozen: bool,
}

impl RunningNorm {
    pub fn new(len: usize) -> Self {
        RunningNorm {
            mean: vec![0.0; len],
            m2: vec![0.0; len],
            count: 0.0,
            frozen: false,
        }
    }

    pub fn update(&mut self, x: &[f64]) {
        if self.frozen {
            return;
        }
        self.count += 1.0;
        for i in 0..self.mean.len() {
            let delta = x[i] - self.mean[i];
            self.mean[i] += delta / self.count;
            self.m2[i] += delta * (x[i] - self.mean[i]);
        }
    }

    pub fn freeze(&mut self) {
        self.frozen = true;
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        if self.count < 2.0 {
            return x.to_vec();
        }
        x.iter()
            .enumerate()
            .map(|(i, &v)| {
                let var = self.m2[i] / self.count;
                (v - self.mean[i]) / (var + 1e-8).sqrt()
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Linear {
    /// Row-major weights, `w[out][in]`.
    pub w: Vec<Vec<f64>>,
    pub b: Vec<f64>,
}

/// Plain MLP with rectified-linear hidden layers and a linear output layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub layers: Vec<Linear>,
}

impl Mlp {
    pub fn new(dims: &[usize], rng: &mut impl Rng) -> Self {
        let layers = dims
            .windows(2)
            .map(|d| {
                let (fan_in, fan_out) = (d[0], d[1]);
                let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
                Linear {
                    w: (0..fan_out)
                        .map(|_| (0..fan_in).map(|_| rng.gen_range(-limit..limit)).collect())
                        .collect(),
                    b: vec![0.0; fan_out],
                }
            })
            .collect();
        Mlp { layers }
    }

    pub fn input_len(&self) -> usize {
        self.layers[0].w[0].len()
    }

    pub fn output_len(&self) -> usize {
        self.layers.last().unwrap().b.len()
    }

    /// Activations after every layer (input excluded); hidden layers are
    /// post-ReLU, the last entry is the linear output.
    fn forward_full(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let mut acts = Vec::with_capacity(self.layers.len());
        let mut current = x.to_vec();
        for (li, layer) in self.layers.iter().enumerate() {
            let last = li + 1 == self.layers.len();
            let mut out = layer.b.clone();
            for (o, row) in layer.w.iter().enumerate() {
                out[o] += row.iter().zip(&current).map(|(w, a)| w * a).sum::<f64>();
                if !last && out[o] < 0.0 {
                    out[o] = 0.0;
                }
            }
            current = out.clone();
            acts.push(out);
        }
        acts
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        self.forward_full(x).pop().unwrap()
    }

    /// Gradient of the squared error (y − Q(x)[action])² wrt every parameter.
    pub fn loss_gradients(&self, x: &[f64], action: usize, y: f64) -> MlpGrads {
        let acts = self.forward_full(x);
        let q = acts.last().unwrap()[action];
        let mut dout = vec![0.0; self.output_len()];
        dout[action] = 2.0 * (q - y);
        self.backward(x, &acts, &dout)
    }

    /// Gradient of a scalar loss wrt all parameters, given the upstream
    /// gradient on the output vector.
    fn backward(&self, x: &[f64], acts: &[Vec<f64>], dout: &[f64]) -> MlpGrads {
        let mut grads: Vec<Linear> = self
            .layers
            .iter()
            .map(|l| Linear {
                w: l.w.iter().map(|row| vec![0.0; row.len()]).collect(),
                b: vec![0.0; l.b.len()],
            })
            .collect();
        let mut delta = dout.to_vec();
        for li in (0..self.layers.len()).rev() {
            let input: &[f64] = if li == 0 { x } else { &acts[li - 1] };
            for o in 0..delta.len() {
                grads[li].b[o] += delta[o];
                for i in 0..input.len() {
                    grads[li].w[o][i] += delta[o] * input[i];
                }
            }
            if li > 0 {
                let mut prev = vec![0.0; input.len()];
                for o in 0..delta.len() {
                    for i in 0..input.len() {
                        prev[i] += delta[o] * self.layers[li].w[o][i];
                    }
                }
                // ReLU mask from the stored post-activation.
                for i in 0..prev.len() {
                    if acts[li - 1][i] <= 0.0 {
                        prev[i] = 0.0;
                    }
                }
                delta = prev;
            }
        }
        MlpGrads(grads)
    }
}

pub struct MlpGrads(Vec<Linear>);

impl MlpGrads {
    /// Per-layer gradients, same shapes as the network's layers.
    pub fn layers(&self) -> &[Linear] {
        &self.0
    }

    fn zeros_like(mlp: &Mlp) -> Self {
        MlpGrads(
            mlp.layers
                .iter()
                .map(|l| Linear {
                    w: l.w.iter().map(|row| vec![0.0; row.len()]).collect(),
                    b: vec![0.0; l.b.len()],
                })
                .collect(),
        )
    }

    fn add(&mut self, other: &MlpGrads) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            for (ra, rb) in a.w.iter_mut().zip(&b.w) {
                for (x, y) in ra.iter_mut().zip(rb) {
                    *x += y;
                }
            }
            for (x, y) in a.b.iter_mut().zip(&b.b) {
                *x += y;
            }
        }
    }

    fn scale(&mut self, factor: f64) {
        for l in &mut self.0 {
            for row in &mut l.w {
                for x in row.iter_mut() {
                    *x *= factor;
                }
            }
            for x in l.b.iter_mut() {
                *x *= factor;
            }
        }
    }
}

/// Adaptive-moment-estimation optimizer state, one slot per parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Adam {
    m: Vec<Linear>,
    v: Vec<Linear>,
    t: u64,
    pub lr: f64,
}

impl Adam {
    pub fn new(mlp: &Mlp, lr: f64) -> Self {
        let zeros = || {
            mlp.layers
                .iter()
                .map(|l| Linear {
                    w: l.w.iter().map(|row| vec![0.0; row.len()]).collect(),
                    b: vec![0.0; l.b.len()],
                })
                .collect::<Vec<_>>()
        };
        Adam { m: zeros(), v: zeros(), t: 0, lr }
    }

    pub fn step(&mut self, mlp: &mut Mlp, grads: &MlpGrads) {
        const B1: f64 = 0.9;
        const B2: f64 = 0.999;
        const EPS: f64 = 1e-8;
        self.t += 1;
        let bc1 = 1.0 - B1.powi(self.t as i32);
        let bc2 = 1.0 - B2.powi(self.t as i32);
        for (li, layer) in mlp.layers.iter_mut().enumerate() {
            for o in 0..layer.b.len() {
                for i in 0..layer.w[o].len() {
                    let g = grads.0[li].w[o][i];
                    let m = &mut self.m[li].w[o][i];
                    let v = &mut self.v[li].w[o][i];
                    *m = B1 * *m + (1.0 - B1) * g;
                    *v = B2 * *v + (1.0 - B2) * g * g;
                    layer.w[o][i] -= self.lr * (*m / bc1) / ((*v / bc2).sqrt() + EPS);
                }
                let g = grads.0[li].b[o];
                let m = &mut self.m[li].b[o];
                let v = &mut self.v[li].b[o];
                *m = B1 * *m + (1.0 - B1) * g;
                *v = B2 * *v + (1.0 - B2) * g * g;
                layer.b[o] -= self.lr * (*m / bc1) / ((*v / bc2).sqrt() + EPS);
            }
        }
    }
}

/// (s, a, r, s') record with a terminal flag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub state: Vec<f64>,
    pub action: usize,
    pub reward: f64,
    pub next_state: Vec<f64>,
    pub terminal: bool,
}

/// FIFO ring buffer of transitions.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    items: Vec<Transition>,
    write: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        ReplayBuffer {
            capacity,
            items: Vec::new(),
            write: 0,
        }
    }

    pub fn push(&mut self, t: Transition) {
        if self.items.len() < self.capacity {
            self.items.push(t);
        } else {
            self.items[self.write] = t;
        }
        self.write = (self.write + 1) % self.capacity;
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn get(&self, i: usize) -> &Transition {
        &self.items[i]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Hyperparameters {
    pub gamma: f64,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub buffer_capacity: usize,
    /// Target network synchronization period in gradient steps.
    pub target_sync: u64,
    pub hidden: Vec<usize>,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    /// Fraction of episodes over which epsilon decays linearly.
    pub epsilon_decay_fraction: f64,
    /// Plain-DQN target (max over the online network) instead of DDQN;
    /// ablation only.
    pub plain_dqn: bool,
}

impl Default for Hyperparameters {
    fn default() -> Self {
        Hyperparameters {
            gamma: 0.99,
            learning_rate: 1e-3,
            batch_size: 64,
            buffer_capacity: 100_000,
            target_sync: 200,
            hidden: vec![128, 128],
            epsilon_start: 1.0,
            epsilon_end: 0.05,
            epsilon_decay_fraction: 0.3,
            plain_dqn: false,
        }
    }
}

pub fn epsilon_at(episode: usize, total_episodes: usize, hyper: &Hyperparameters) -> f64 {
    let decay = (total_episodes as f64 * hyper.epsilon_decay_fraction).max(1.0);
    let frac = (episode as f64 / decay).min(1.0);
    hyper.epsilon_start + frac * (hyper.epsilon_end - hyper.epsilon_start)
}

/// Online + target MLP pair with the feature standardizer and problem tag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QNetwork {
    pub kind: ProblemKind,
    pub online: Mlp,
    pub target: Mlp,
    pub norm: RunningNorm,
    pub hyper: Hyperparameters,
    pub gradient_steps: u64,
}

impl QNetwork {
    pub fn new(kind: ProblemKind, hyper: Hyperparameters, seed: u64) -> Self {
        let input = feature_len(kind);
        let mut dims = vec![input];
        dims.extend_from_slice(&hyper.hidden);
        dims.push(NUM_ACTIONS);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let online = Mlp::new(&dims, &mut rng);
        let target = online.clone();
        QNetwork {
            kind,
            online,
            target,
            norm: RunningNorm::new(input),
            hyper,
            gradient_steps: 0,
        }
    }

    /// Action scores Q(s,·;θ); input is standardized internally.
    pub fn q_forward(&self, s: &StateFeatures) -> Result<Vec<f64>> {
        if s.0.len() != self.online.input_len() {
            return Err(Error::ModelMismatch(format!(
                "feature length {} != network input {}",
                s.0.len(),
                self.online.input_len()
            )));
        }
        Ok(self.online.forward(&self.norm.apply(&s.0)))
    }

    /// Greedy action: argmax of the scores, ties to the lowest index.
    pub fn greedy_action(&self, s: &StateFeatures) -> Result<usize> {
        Ok(argmax(&self.q_forward(s)?))
    }

    pub fn sync_target(&mut self) {
        self.target = self.online.clone();
    }
}

pub fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in scores.iter().enumerate() {
        if v > scores[best] {
            best = i;
        }
    }
    best
}

/// Per-sample TD targets: terminal samples get y = r, the rest get the
/// double-Q target — action from the online network, value from the target
/// network.
pub fn ddqn_target(batch: &[&Transition], netw: &QNetwork) -> Vec<f64> {
    batch
        .iter()
        .map(|t| {
            if t.terminal {
                t.reward
            } else {
                let next = netw.norm.apply(&t.next_state);
                let bootstrap = if netw.hyper.plain_dqn {
                    let q = netw.online.forward(&next);
                    q.iter().copied().fold(f64::NEG_INFINITY, f64::max)
                } else {
                    let online_q = netw.online.forward(&next);
                    let a = argmax(&online_q);
                    netw.target.forward(&next)[a]
                };
                t.reward + netw.hyper.gamma * bootstrap
            }
        })
        .collect()
}

/// One uniform mini-batch gradient step on the squared-error loss of the
/// taken actions. Returns the pre-step mean loss, or `None` when the buffer
/// is smaller than the batch size.
pub fn train_step(
    buffer: &ReplayBuffer,
    netw: &mut QNetwork,
    opt: &mut Adam,
    rng: &mut impl Rng,
) -> Option<f64> {
    let batch_size = netw.hyper.batch_size;
    if buffer.len() < batch_size {
        return None;
    }
    let batch: Vec<&Transition> = (0..batch_size)
        .map(|_| buffer.get(rng.gen_range(0..buffer.len())))
        .collect();
    let targets = ddqn_target(&batch, netw);
    let mut grads = MlpGrads::zeros_like(&netw.online);
    let mut loss = 0.0;
    for (t, &y) in batch.iter().zip(&targets) {
        let x = netw.norm.apply(&t.state);
        let acts = netw.online.forward_full(&x);
        let q = acts.last().unwrap()[t.action];
        loss += (y - q).powi(2);
        let mut dout = vec![0.0; NUM_ACTIONS];
        dout[t.action] = 2.0 * (q - y);
        grads.add(&netw.online.backward(&x, &acts, &dout));
    }
    grads.scale(1.0 / batch_size as f64);
    opt.step(&mut netw.online, &grads);
    netw.gradient_steps += 1;
    if netw.gradient_steps % netw.hyper.target_sync == 0 {
        netw.sync_target();
    }
    Some(loss / batch_size as f64)
}

/// Training episodes draw an instance uniformly and, when `n_range` is set,
/// truncate it to a uniformly drawn prefix length.
#[derive(Debug, Clone)]
pub struct TrainingSet {
    pub instances: Vec<Instance>,
    pub n_range: Option<(usize, usize)>,
}

impl TrainingSet {
    pub fn sample(&self, rng: &mut impl Rng) -> Result<Instance> {
        if self.instances.is_empty() {
            return Err(Error::InvalidArgument("empty training set".into()));
        }
        let base = &self.instances[rng.gen_range(0..self.instances.len())];
        match self.n_range {
            None => Ok(base.clone()),
            Some((lo, hi)) => {
                if lo == 0 || lo > hi {
                    return Err(Error::InvalidArgument(format!(
                        "bad truncation range [{lo}, {hi}]"
                    )));
                }
                let n = rng.gen_range(lo..=hi.min(base.len()));
                base.truncate(n)
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub episodes: usize,
    pub seed: u64,
    pub hyper: Hyperparameters,
    pub cg: CgConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeLog {
    pub episode: usize,
    pub instance: String,
    pub n: usize,
    pub epsilon: f64,
    pub iterations: usize,
    pub objective_fractional: f64,
    pub objective_integer: f64,
    pub gap: f64,
    /// Mean TD loss over this episode's gradient steps, if any ran.
    pub mean_loss: Option<f64>,
    pub cumulative_reward: f64,
}

/// ε-greedy behaviour policy that learns online: every observed transition
/// goes to the replay buffer, followed by one gradient step.
struct TrainingSelector<'a> {
    netw: &'a mut QNetwork,
    opt: &'a mut Adam,
    buffer: &'a mut ReplayBuffer,
    rng: &'a mut ChaCha8Rng,
    epsilon: f64,
    losses: Vec<f64>,
    reward_sum: f64,
    steps: usize,
}

impl crate::engine::ActionSelector for TrainingSelector<'_> {
    fn select(&mut self, state: &StateFeatures) -> Result<crate::engine::Choice> {
        self.netw.norm.update(&state.0);
        let a = if self.rng.gen::<f64>() < self.epsilon {
            self.rng.gen_range(0..NUM_ACTIONS)
        } else {
            self.netw.greedy_action(state)?
        };
        Ok(crate::engine::Choice::Heuristic(
            crate::heuristics::HeuristicKind::ALL[a],
        ))
    }

    fn observe(&mut self, t: &crate::engine::TransitionRecord) -> Result<()> {
        self.reward_sum += t.reward;
        self.steps += 1;
        self.buffer.push(Transition {
            state: t.state.0.clone(),
            action: t.action,
            reward: t.reward,
            next_state: t.next_state.0.clone(),
            terminal: t.terminal,
        });
        if let Some(loss) = train_step(self.buffer, self.netw, self.opt, self.rng) {
            self.losses.push(loss);
        }
        Ok(())
    }
}

/// Full training run: `episodes` CG episodes with linearly decaying ε,
/// one gradient step per CG iteration, and a frozen feature standardizer in
/// the returned network. `progress` is called after every episode.
pub fn train(
    set: &TrainingSet,
    cfg: &TrainConfig,
    mut progress: Option<&mut dyn FnMut(&EpisodeLog)>,
) -> Result<(QNetwork, Vec<EpisodeLog>)> {
    let kind = set
        .instances
        .first()
        .ok_or_else(|| Error::InvalidArgument("empty training set".into()))?
        .kind();
    if set.instances.iter().any(|i| i.kind() != kind) {
        return Err(Error::InvalidArgument("mixed problem kinds in training set".into()));
    }
    let mut netw = QNetwork::new(kind, cfg.hyper.clone(), cfg.seed);
    let mut opt = Adam::new(&netw.online, cfg.hyper.learning_rate);
    let mut buffer = ReplayBuffer::new(cfg.hyper.buffer_capacity);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0xA5A5_5A5A_C3C3_3C3C);
    let mut logs = Vec::with_capacity(cfg.episodes);

    for episode in 0..cfg.episodes {
        let epsilon = epsilon_at(episode, cfg.episodes, &cfg.hyper);
        let inst = set.sample(&mut rng)?;
        let mut episode_cfg = cfg.cg.clone();
        episode_cfg.seed = cfg
            .seed
            .wrapping_mul(0x0100_0000_01B3)
            .wrapping_add(episode as u64);
        let mut selector = TrainingSelector {
            netw: &mut netw,
            opt: &mut opt,
            buffer: &mut buffer,
            rng: &mut rng,
            epsilon,
            losses: Vec::new(),
            reward_sum: 0.0,
            steps: 0,
        };
        let out = crate::engine::run_cg(&inst, &episode_cfg, &mut selector)?;
        let mean_loss = if selector.losses.is_empty() {
            None
        } else {
            Some(selector.losses.iter().sum::<f64>() / selector.losses.len() as f64)
        };
        let log = EpisodeLog {
            episode,
            instance: inst.name().to_string(),
            n: inst.len(),
            epsilon,
            iterations: out.trace.terminal.iterations,
            objective_fractional: out.objective_fractional,
            objective_integer: out.objective_integer,
            gap: out.gap,
            mean_loss,
            cumulative_reward: selector.reward_sum,
        };
        if let Some(cb) = progress.as_deref_mut() {
            cb(&log);
        }
        logs.push(log);
    }
    netw.norm.freeze();
    Ok((netw, logs))
}

const MODEL_HEADER: &str = "RLHH-MODEL v1";

pub fn save_model(netw: &QNetwork, path: &Path) -> Result<()> {
    let body = serde_json::to_string(netw)
        .map_err(|e| Error::Schema(format!("model serialization: {e}")))?;
    let digest = hex_digest(&body);
    std::fs::write(path, format!("{MODEL_HEADER}\n{digest}\n{body}\n"))?;
    Ok(())
}

pub fn load_model(path: &Path, expected_kind: Option<ProblemKind>) -> Result<QNetwork> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines.next().unwrap_or("");
    if header != MODEL_HEADER {
        return Err(Error::Version(header.to_string()));
    }
    let digest = lines.next().unwrap_or("").to_string();
    let body = lines.next().unwrap_or("");
    if hex_digest(body) != digest {
        return Err(Error::Checksum(path.display().to_string()));
    }
    let netw: QNetwork = serde_json::from_str(body)
        .map_err(|e| Error::Schema(format!("model deserialization: {e}")))?;
    if let Some(kind) = expected_kind {
        if netw.kind != kind {
            return Err(Error::ModelMismatch(format!(
                "model trained for {}, run is {}",
                netw.kind, kind
            )));
        }
    }
    if netw.online.input_len() != feature_len(netw.kind) {
        return Err(Error::ModelMismatch("input layer/problem kind mismatch".into()));
    }
    Ok(netw)
}

fn hex_digest(s: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(s.as_bytes());
    hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}
