//! Column-generation driver: restricted master + pricing loop with one
//! network-reduction heuristic chosen per iteration, complete-network
//! fallback, and an integer solve at convergence.

use std::time::{Duration, Instant};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::agent::{featurize, QNetwork, StateFeatures, NUM_ACTIONS};
use crate::heuristics::{be1, be2, be3, bn, bp, HeuristicAction, HeuristicKind};
use crate::instance::{Instance, ProblemKind};
use crate::labeling::{solve_pricing, Column, PricingMode, PricingOpts, DEFAULT_LABEL_BUDGET};
use crate::net::{build_bdsp_network, build_vrptw_network, EdgeMask, PricingNetwork};
use crate::rmp::{init_pool, solve_irmp, solve_lp, ColumnPool, RmpState, OPT_TOL};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewardMode {
    /// r_T = 100^GAP with GAP = obj_int / obj_frac.
    Literal,
    /// r_T = 100^(obj_frac / obj_int); bounded by 100 and increasing as the
    /// integrality gap closes. Training default.
    Inverse,
}

/// Per-iteration reward: +1 when the reduced network produced a column and
/// the objective improved, 0 when it produced one without improvement, −1
/// when it produced nothing. Improvement without a column is a contract
/// violation.
pub fn step_reward(found: bool, improved: bool) -> Result<f64> {
    match (found, improved) {
        (true, true) => Ok(1.0),
        (true, false) => Ok(0.0),
        (false, false) => Ok(-1.0),
        (false, true) => Err(Error::InvalidArgument(
            "objective improved although pricing found no column".into(),
        )),
    }
}

pub fn gap(objective_integer: f64, objective_fractional: f64) -> f64 {
    objective_integer / objective_fractional
}

pub fn terminal_reward(
    mode: RewardMode,
    objective_integer: f64,
    objective_fractional: f64,
) -> Result<f64> {
    if objective_fractional <= 0.0 || objective_integer <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "non-positive objectives ({objective_integer}, {objective_fractional})"
        )));
    }
    let exponent = match mode {
        RewardMode::Literal => objective_integer / objective_fractional,
        RewardMode::Inverse => objective_fractional / objective_integer,
    };
    Ok(100f64.powf(exponent))
}

/// What the selector asked the pricing step to do.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Choice {
    Heuristic(HeuristicKind),
    /// Price the complete network directly; no transition is emitted.
    FullOnly,
}

/// One (s, a, r, s') experience handed back to a learning selector.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionRecord {
    pub state: StateFeatures,
    pub action: usize,
    pub reward: f64,
    pub next_state: StateFeatures,
    pub terminal: bool,
}

pub trait ActionSelector {
    fn select(&mut self, state: &StateFeatures) -> Result<Choice>;

    fn observe(&mut self, _t: &TransitionRecord) -> Result<()> {
        Ok(())
    }
}

/// Always the same heuristic (baseline runs).
pub struct FixedSelector(pub HeuristicKind);

impl ActionSelector for FixedSelector {
    fn select(&mut self, _state: &StateFeatures) -> Result<Choice> {
        Ok(Choice::Heuristic(self.0))
    }
}

/// Uniform choice among the five heuristics.
pub struct RandomSelector {
    rng: ChaCha8Rng,
}

impl RandomSelector {
    pub fn new(seed: u64) -> Self {
        RandomSelector {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }
}

impl ActionSelector for RandomSelector {
    fn select(&mut self, _state: &StateFeatures) -> Result<Choice> {
        let i = self.rng.gen_range(0..NUM_ACTIONS);
        Ok(Choice::Heuristic(HeuristicKind::ALL[i]))
    }
}

/// No reduction at all: price the complete network every iteration.
pub struct FullSelector;

impl ActionSelector for FullSelector {
    fn select(&mut self, _state: &StateFeatures) -> Result<Choice> {
        Ok(Choice::FullOnly)
    }
}

/// Greedy inference with a trained Q-network.
pub struct GreedySelector<'a> {
    pub network: &'a QNetwork,
}

impl ActionSelector for GreedySelector<'_> {
    fn select(&mut self, state: &StateFeatures) -> Result<Choice> {
        let a = self.network.greedy_action(state)?;
        Ok(Choice::Heuristic(HeuristicKind::ALL[a]))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CgConfig {
    pub time_limit: Duration,
    pub label_budget: usize,
    /// How many negative columns to add per pricing round.
    pub max_columns_per_iteration: usize,
    pub seed: u64,
    /// Record wall-clock timings in traces. Off by default so that traces
    /// are byte-identical across runs of the same seed and config.
    pub record_timing: bool,
    pub reward_mode: RewardMode,
    /// Minimum budget handed to the integer solve even when the CG loop
    /// used up the episode time limit.
    pub irmp_floor: Duration,
    pub use_dominance: bool,
}

impl Default for CgConfig {
    fn default() -> Self {
        CgConfig {
            time_limit: Duration::from_secs(600),
            label_budget: DEFAULT_LABEL_BUDGET,
            max_columns_per_iteration: 1,
            seed: 0,
            record_timing: false,
            reward_mode: RewardMode::Inverse,
            irmp_floor: Duration::from_secs(5),
            use_dominance: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    /// RMP objective before this iteration's pricing.
    pub objective: f64,
    /// Heuristic name or "full".
    pub action: String,
    /// Schedule parameter that succeeded, if a heuristic did.
    pub parameter: Option<f64>,
    /// Complete-network fallback was needed.
    pub fallback: bool,
    pub columns_added: usize,
    /// Best reduced cost among the added columns.
    pub best_delta: Option<f64>,
    pub reward: f64,
    /// Zero unless timing recording is on.
    pub pricing_millis: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TerminalRecord {
    pub objective_fractional: f64,
    pub objective_integer: f64,
    pub gap: f64,
    pub terminal_reward: f64,
    pub iterations: usize,
    /// The CG loop stopped on the time limit rather than convergence.
    pub time_limited: bool,
    /// The integer solve proved optimality over the final pool.
    pub irmp_optimal: bool,
    /// Zero unless timing recording is on.
    pub total_millis: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceHeader {
    pub instance: String,
    pub kind: ProblemKind,
    pub n: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeTrace {
    pub header: TraceHeader,
    pub iterations: Vec<IterationRecord>,
    pub terminal: TerminalRecord,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum TraceLine {
    Header(TraceHeader),
    Iteration(IterationRecord),
    Terminal(TerminalRecord),
}

impl EpisodeTrace {
    /// One JSON object per line: header, iterations in order, terminal.
    pub fn to_json_lines(&self) -> Result<String> {
        let mut out = String::new();
        let mut push = |line: &TraceLine| -> Result<()> {
            out.push_str(
                &serde_json::to_string(line)
                    .map_err(|e| Error::Schema(format!("trace serialization: {e}")))?,
            );
            out.push('\n');
            Ok(())
        };
        push(&TraceLine::Header(self.header.clone()))?;
        for it in &self.iterations {
            push(&TraceLine::Iteration(it.clone()))?;
        }
        push(&TraceLine::Terminal(self.terminal.clone()))?;
        Ok(out)
    }

    pub fn from_json_lines(text: &str) -> Result<EpisodeTrace> {
        let mut header = None;
        let mut iterations = Vec::new();
        let mut terminal = None;
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let parsed: TraceLine = serde_json::from_str(line)
                .map_err(|e| Error::Parse { line: i + 1, msg: e.to_string() })?;
            match parsed {
                TraceLine::Header(h) => header = Some(h),
                TraceLine::Iteration(it) => iterations.push(it),
                TraceLine::Terminal(t) => terminal = Some(t),
            }
        }
        Ok(EpisodeTrace {
            header: header.ok_or_else(|| Error::Schema("trace missing header line".into()))?,
            iterations,
            terminal: terminal.ok_or_else(|| Error::Schema("trace missing terminal line".into()))?,
        })
    }
}

#[derive(Debug, Clone)]
pub struct CgOutcome {
    pub trace: EpisodeTrace,
    pub objective_fractional: f64,
    pub objective_integer: f64,
    pub gap: f64,
    pub terminal_reward: f64,
    /// Columns selected by the integer solve.
    pub selected: Vec<Column>,
    pub pool_size: usize,
}

pub fn build_network(inst: &Instance) -> PricingNetwork {
    match inst {
        Instance::Vrptw(i) => build_vrptw_network(i),
        Instance::Bdsp(i) => build_bdsp_network(i),
    }
}

/// Reduce the network with one heuristic at one schedule parameter.
pub fn apply_heuristic(
    kind: HeuristicKind,
    net: &PricingNetwork,
    duals: &[f64],
    modified: &[f64],
    parameter: f64,
    rng: &mut impl Rng,
) -> Result<EdgeMask> {
    match kind {
        HeuristicKind::Be1 => be1(net, duals, parameter),
        HeuristicKind::Be2 => be2(net, modified, parameter),
        HeuristicKind::Be3 => be3(net, modified, parameter),
        HeuristicKind::Bn => bn(net, duals, parameter, rng),
        HeuristicKind::Bp => bp(net, modified, parameter.round() as usize),
    }
}

// Deterministic per-(iteration, attempt) RNG stream so that stochastic
// heuristics do not depend on how many random numbers other components drew.
fn attempt_rng(seed: u64, iteration: usize, attempt: usize) -> ChaCha8Rng {
    let mixed = seed
        .wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add((iteration as u64) << 16)
        .wrapping_add(attempt as u64 + 1);
    ChaCha8Rng::seed_from_u64(mixed)
}

pub fn run_cg(
    inst: &Instance,
    cfg: &CgConfig,
    selector: &mut dyn ActionSelector,
) -> Result<CgOutcome> {
    let net = build_network(inst);
    run_cg_network(&net, inst.name(), cfg, selector)
}

pub fn run_cg_network(
    net: &PricingNetwork,
    instance_name: &str,
    cfg: &CgConfig,
    selector: &mut dyn ActionSelector,
) -> Result<CgOutcome> {
    let start = Instant::now();
    let mut opts = PricingOpts::new(PricingMode::for_network(net));
    opts.label_budget = cfg.label_budget;
    opts.use_dominance = cfg.use_dominance;

    let mut pool = init_pool(net)?;
    let mut lp = solve_lp(&pool)?;
    let initial_objective = lp.objective;

    let mut cursors: Vec<HeuristicAction> = HeuristicKind::ALL
        .iter()
        .map(|&k| HeuristicAction::new(k))
        .collect();

    let mut records: Vec<IterationRecord> = Vec::new();
    // Transition waiting for its successor state: (state, action, reward).
    let mut pending: Option<(StateFeatures, usize, f64)> = None;
    let mut last_state: Option<StateFeatures> = None;
    let mut time_limited = false;

    let mut iteration = 0usize;
    loop {
        if start.elapsed() >= cfg.time_limit {
            time_limited = true;
            break;
        }
        let modified = net.modified_costs(&lp.duals)?;
        let state = featurize(&lp, net, &lp.duals, &modified, initial_objective);
        if let Some((s, a, r)) = pending.take() {
            selector.observe(&TransitionRecord {
                state: s,
                action: a,
                reward: r,
                next_state: state.clone(),
                terminal: false,
            })?;
        }
        last_state = Some(state.clone());

        let choice = selector.select(&state)?;
        let price_start = Instant::now();
        let mut fallback = false;
        let mut parameter = None;
        let (result, action_name, action_index) = match choice {
            Choice::FullOnly => {
                let res = solve_pricing(net.full_view(), &modified, &opts)?;
                (res, "full".to_string(), None)
            }
            Choice::Heuristic(kind) => {
                let cursor = &mut cursors[kind.index()];
                let mut found = None;
                let mut attempt = 0usize;
                while let Some(p) = cursor.current_parameter() {
                    let mut hrng = attempt_rng(cfg.seed, iteration, attempt);
                    let mask = apply_heuristic(kind, net, &lp.duals, &modified, p, &mut hrng)?;
                    let res = solve_pricing(net.masked_view(&mask)?, &modified, &opts)?;
                    if !res.columns.is_empty() {
                        found = Some((res, p));
                        break;
                    }
                    cursor.note_failure();
                    attempt += 1;
                }
                let res = match found {
                    Some((res, p)) => {
                        parameter = Some(p);
                        res
                    }
                    None => {
                        // Schedule exhausted: price the complete network.
                        fallback = true;
                        solve_pricing(net.full_view(), &modified, &opts)?
                    }
                };
                (res, kind.name().to_string(), Some(kind.index()))
            }
        };
        let pricing_millis = if cfg.record_timing {
            price_start.elapsed().as_secs_f64() * 1e3
        } else {
            0.0
        };

        if result.columns.is_empty() {
            // Nothing negative on the complete network: the LP master is
            // optimal. The selector still receives a terminal transition for
            // its last action.
            let reward = step_reward(false, false)?;
            records.push(IterationRecord {
                iteration,
                objective: lp.objective,
                action: action_name,
                parameter,
                fallback,
                columns_added: 0,
                best_delta: None,
                reward,
                pricing_millis,
            });
            if let Some(a) = action_index {
                pending = Some((state, a, reward));
            }
            break;
        }

        let mut added = 0usize;
        let mut best_delta = f64::INFINITY;
        for col in result
            .columns
            .iter()
            .take(cfg.max_columns_per_iteration.max(1))
        {
            best_delta = best_delta.min(col.reduced_cost);
            if pool.add_column(col.clone())? {
                added += 1;
            }
        }
        if added == 0 {
            // All candidates were duplicates; no progress is possible.
            break;
        }
        let previous = lp.objective;
        lp = solve_lp(&pool)?;
        let improved = previous - lp.objective > OPT_TOL;
        let reward = if fallback {
            -1.0
        } else {
            step_reward(true, improved)?
        };
        records.push(IterationRecord {
            iteration,
            objective: previous,
            action: action_name,
            parameter,
            fallback,
            columns_added: added,
            best_delta: Some(best_delta),
            reward,
            pricing_millis,
        });
        if let Some(a) = action_index {
            pending = Some((state, a, reward));
        }
        iteration += 1;
    }

    let remaining = cfg
        .time_limit
        .saturating_sub(start.elapsed())
        .max(cfg.irmp_floor);
    let irmp = solve_irmp(&pool, remaining)?;

    let objective_fractional = lp.objective;
    let objective_integer = irmp.objective;
    let g = gap(objective_integer, objective_fractional);
    let r_terminal = terminal_reward(cfg.reward_mode, objective_integer, objective_fractional)?;

    // The terminal reward is folded into the final transition's reward.
    if let Some((s, a, r)) = pending.take() {
        let next = last_state.unwrap_or_else(|| s.clone());
        selector.observe(&TransitionRecord {
            state: s,
            action: a,
            reward: r + r_terminal,
            next_state: next,
            terminal: true,
        })?;
    }

    let trace = EpisodeTrace {
        header: TraceHeader {
            instance: instance_name.to_string(),
            kind: net.kind,
            n: net.num_tasks,
            seed: cfg.seed,
        },
        iterations: records,
        terminal: TerminalRecord {
            objective_fractional,
            objective_integer,
            gap: g,
            terminal_reward: r_terminal,
            iterations: iteration,
            time_limited,
            irmp_optimal: irmp.optimal,
            total_millis: if cfg.record_timing {
                start.elapsed().as_secs_f64() * 1e3
            } else {
                0.0
            },
        },
    };
    let selected = irmp
        .selected
        .iter()
        .map(|&j| pool.columns[j].clone())
        .collect();
    Ok(CgOutcome {
        trace,
        objective_fractional,
        objective_integer,
        gap: g,
        terminal_reward: r_terminal,
        selected,
        pool_size: pool.len(),
    })
}

/// Reference LP value computed without column generation: enumerate every
/// feasible column and solve the full master. Exponential; small n only.
pub fn exhaustive_lp_objective(net: &PricingNetwork) -> Result<RmpState> {
    let mode = PricingMode::for_network(net);
    let costs: Vec<f64> = net.edges.iter().map(|e| e.cost).collect();
    let all = crate::labeling::enumerate_all_columns(net.full_view(), &costs, mode)?;
    let mut pool = ColumnPool::new(net.num_tasks);
    for col in all {
        pool.add_column(col)?;
    }
    if pool.is_empty() {
        return Err(Error::Infeasible("no feasible columns".into()));
    }
    solve_lp(&pool)
}
