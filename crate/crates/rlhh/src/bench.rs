//! Benchmark harness: run a set of selectors over instances, collect
//! per-run rows, and summarize RLHH against the best fixed baseline.

use serde::{Deserialize, Serialize};

use crate::agent::QNetwork;
use crate::engine::{
    run_cg, ActionSelector, CgConfig, CgOutcome, EpisodeTrace, FixedSelector, FullSelector,
    GreedySelector, RandomSelector,
};
use crate::heuristics::HeuristicKind;
use crate::instance::{Instance, ProblemKind};
use crate::{Error, Result};

/// Baseline selector names understood by [`make_selector`]; "rlhh" (with a
/// trained model) comes on top of these.
pub const BASELINE_SELECTORS: [&str; 7] = ["be1", "be2", "be3", "bn", "bp", "random", "full"];

pub fn make_selector<'a>(
    name: &str,
    seed: u64,
    model: Option<&'a QNetwork>,
) -> Result<Box<dyn ActionSelector + 'a>> {
    if let Some(kind) = HeuristicKind::from_name(name) {
        return Ok(Box::new(FixedSelector(kind)));
    }
    match name {
        "random" => Ok(Box::new(RandomSelector::new(seed))),
        "full" => Ok(Box::new(FullSelector)),
        "rlhh" => {
            let network = model.ok_or_else(|| {
                Error::InvalidArgument("selector 'rlhh' needs a trained model".into())
            })?;
            Ok(Box::new(GreedySelector { network }))
        }
        other => Err(Error::InvalidArgument(format!("unknown selector '{other}'"))),
    }
}

/// One (instance, selector, seed) run. A failed run keeps its identifying
/// fields, zeroes the numeric ones, and carries the error message.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRow {
    pub instance: String,
    pub kind: ProblemKind,
    pub n: usize,
    pub selector: String,
    pub seed: u64,
    pub objective_fractional: f64,
    pub objective_integer: f64,
    pub gap: f64,
    pub iterations: usize,
    /// Wall time of the whole episode; zero when timing recording is off.
    pub millis: f64,
    /// Empty on success.
    pub error: String,
}

pub const BENCHMARK_CSV_HEADER: &str = "instance,kind,n,selector,seed,objective_fractional,\
objective_integer,gap,iterations,millis,error";

fn kind_tag(kind: ProblemKind) -> &'static str {
    match kind {
        ProblemKind::Vrptw => "vrptw",
        ProblemKind::Bdsp => "bdsp",
    }
}

fn parse_kind(tag: &str) -> Result<ProblemKind> {
    match tag {
        "vrptw" => Ok(ProblemKind::Vrptw),
        "bdsp" => Ok(ProblemKind::Bdsp),
        other => Err(Error::Schema(format!("unknown problem kind '{other}'"))),
    }
}

fn check_field(name: &str) -> Result<()> {
    if name.contains(',') || name.contains('\n') || name.contains('"') {
        return Err(Error::Schema(format!("unquotable CSV field '{name}'")));
    }
    Ok(())
}

impl BenchmarkRow {
    pub fn from_outcome(inst: &Instance, selector: &str, seed: u64, out: &CgOutcome) -> Self {
        BenchmarkRow {
            instance: inst.name().to_string(),
            kind: inst.kind(),
            n: inst.len(),
            selector: selector.to_string(),
            seed,
            objective_fractional: out.objective_fractional,
            objective_integer: out.objective_integer,
            gap: out.gap,
            iterations: out.trace.terminal.iterations,
            millis: out.trace.terminal.total_millis,
            error: String::new(),
        }
    }

    pub fn failed(inst: &Instance, selector: &str, seed: u64, err: &Error) -> Self {
        BenchmarkRow {
            instance: inst.name().to_string(),
            kind: inst.kind(),
            n: inst.len(),
            selector: selector.to_string(),
            seed,
            objective_fractional: 0.0,
            objective_integer: 0.0,
            gap: 0.0,
            iterations: 0,
            millis: 0.0,
            error: err.to_string().replace([',', '\n'], ";"),
        }
    }

    pub fn is_ok(&self) -> bool {
        self.error.is_empty()
    }

    fn to_csv_line(&self) -> Result<String> {
        check_field(&self.instance)?;
        check_field(&self.selector)?;
        check_field(&self.error)?;
        Ok(format!(
            "{},{},{},{},{},{},{},{},{},{},{}",
            self.instance,
            kind_tag(self.kind),
            self.n,
            self.selector,
            self.seed,
            self.objective_fractional,
            self.objective_integer,
            self.gap,
            self.iterations,
            self.millis,
            self.error
        ))
    }

    fn from_csv_line(line: &str, lineno: usize) -> Result<Self> {
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 11 {
            return Err(Error::Parse {
                line: lineno,
                msg: format!("expected 11 fields, got {}", parts.len()),
            });
        }
        let field = |i: usize| -> &str { parts[i] };
        let num = |i: usize| -> Result<f64> {
            field(i).parse().map_err(|_| Error::Parse {
                line: lineno,
                msg: format!("bad number '{}'", field(i)),
            })
        };
        Ok(BenchmarkRow {
            instance: field(0).to_string(),
            kind: parse_kind(field(1))?,
            n: num(2)? as usize,
            selector: field(3).to_string(),
            seed: num(4)? as u64,
            objective_fractional: num(5)?,
            objective_integer: num(6)?,
            gap: num(7)?,
            iterations: num(8)? as usize,
            millis: num(9)?,
            error: field(10).to_string(),
        })
    }
}

pub fn write_benchmark_csv(rows: &[BenchmarkRow]) -> Result<String> {
    let mut out = String::from(BENCHMARK_CSV_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&row.to_csv_line()?);
        out.push('\n');
    }
    Ok(out)
}

pub fn read_benchmark_csv(text: &str) -> Result<Vec<BenchmarkRow>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header == BENCHMARK_CSV_HEADER => {}
        _ => return Err(Error::Schema("missing benchmark CSV header".into())),
    }
    lines
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| BenchmarkRow::from_csv_line(l, i + 1))
        .collect()
}

/// Objective improvement of RLHH over the best baseline, in percent.
pub fn gain_percent(best_baseline_objective: f64, rlhh_objective: f64) -> f64 {
    (best_baseline_objective - rlhh_objective) / best_baseline_objective * 100.0
}

/// Wall-time ratio best-baseline / RLHH; > 1 means RLHH is faster.
pub fn speedup(best_baseline_millis: f64, rlhh_millis: f64) -> f64 {
    if rlhh_millis <= 0.0 {
        f64::INFINITY
    } else {
        best_baseline_millis / rlhh_millis
    }
}

/// 1-based rank of `value` in `all` where smaller is better; ties share the
/// better rank.
pub fn rank(value: f64, all: &[f64]) -> usize {
    1 + all.iter().filter(|&&v| v < value).count()
}

/// Per-(kind, n) comparison of the RLHH selector's mean objective and mean
/// time against the best fixed baseline in the same group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub kind: ProblemKind,
    pub n: usize,
    pub best_baseline_selector: String,
    pub best_baseline_objective: f64,
    pub best_baseline_millis: f64,
    pub rlhh_objective: f64,
    pub rlhh_millis: f64,
    pub gain_percent: f64,
    pub speedup: f64,
    /// Rank of the RLHH mean objective among all selectors in the group.
    pub rlhh_rank: usize,
    pub num_selectors: usize,
}

pub const SUMMARY_CSV_HEADER: &str = "kind,n,best_baseline_selector,best_baseline_objective,\
best_baseline_millis,rlhh_objective,rlhh_millis,gain_percent,speedup,rlhh_rank,num_selectors";

pub fn write_summary_csv(rows: &[SummaryRow]) -> Result<String> {
    let mut out = String::from(SUMMARY_CSV_HEADER);
    out.push('\n');
    for r in rows {
        check_field(&r.best_baseline_selector)?;
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{}\n",
            kind_tag(r.kind),
            r.n,
            r.best_baseline_selector,
            r.best_baseline_objective,
            r.best_baseline_millis,
            r.rlhh_objective,
            r.rlhh_millis,
            r.gain_percent,
            r.speedup,
            r.rlhh_rank,
            r.num_selectors
        ));
    }
    Ok(out)
}

/// Group successful rows by (kind, n), average objective and time per
/// selector, and compare `rlhh_name` against the best of the other
/// selectors. Groups missing an RLHH row or a baseline row are skipped, as
/// are failed rows.
pub fn summarize(rows: &[BenchmarkRow], rlhh_name: &str) -> Vec<SummaryRow> {
    let ok: Vec<&BenchmarkRow> = rows.iter().filter(|r| r.is_ok()).collect();
    let mut groups: Vec<(ProblemKind, usize)> = Vec::new();
    for row in &ok {
        if !groups.contains(&(row.kind, row.n)) {
            groups.push((row.kind, row.n));
        }
    }
    let mut out = Vec::new();
    for (kind, n) in groups {
        let group: Vec<&&BenchmarkRow> = ok
            .iter()
            .filter(|r| r.kind == kind && r.n == n)
            .collect();
        let mut selectors: Vec<&str> = Vec::new();
        for row in &group {
            if !selectors.contains(&row.selector.as_str()) {
                selectors.push(&row.selector);
            }
        }
        // (selector, mean objective, mean millis)
        let means: Vec<(&str, f64, f64)> = selectors
            .iter()
            .map(|&s| {
                let runs: Vec<&&&BenchmarkRow> =
                    group.iter().filter(|r| r.selector == s).collect();
                let k = runs.len() as f64;
                let obj = runs.iter().map(|r| r.objective_integer).sum::<f64>() / k;
                let ms = runs.iter().map(|r| r.millis).sum::<f64>() / k;
                (s, obj, ms)
            })
            .collect();
        let rlhh = match means.iter().find(|(s, _, _)| *s == rlhh_name) {
            Some(m) => *m,
            None => continue,
        };
        let best = means
            .iter()
            .filter(|(s, _, _)| *s != rlhh_name)
            .min_by(|a, b| a.1.total_cmp(&b.1));
        let best = match best {
            Some(b) => *b,
            None => continue,
        };
        let objectives: Vec<f64> = means.iter().map(|m| m.1).collect();
        out.push(SummaryRow {
            kind,
            n,
            best_baseline_selector: best.0.to_string(),
            best_baseline_objective: best.1,
            best_baseline_millis: best.2,
            rlhh_objective: rlhh.1,
            rlhh_millis: rlhh.2,
            gain_percent: gain_percent(best.1, rlhh.1),
            speedup: speedup(best.2, rlhh.2),
            rlhh_rank: rank(rlhh.1, &objectives),
            num_selectors: means.len(),
        });
    }
    out
}

/// Run every named selector once on the instance. Per-run failures become
/// rows with an error column instead of aborting the sweep.
pub fn run_benchmark(
    inst: &Instance,
    cfg: &CgConfig,
    selectors: &[String],
    model: Option<&QNetwork>,
) -> Result<Vec<BenchmarkRow>> {
    let mut rows = Vec::with_capacity(selectors.len());
    for name in selectors {
        let run = make_selector(name, cfg.seed, model)
            .and_then(|mut selector| run_cg(inst, cfg, selector.as_mut()));
        rows.push(match run {
            Ok(out) => BenchmarkRow::from_outcome(inst, name, cfg.seed, &out),
            Err(e) => BenchmarkRow::failed(inst, name, cfg.seed, &e),
        });
    }
    Ok(rows)
}

pub const TRACE_SERIES_CSV_HEADER: &str = "series,iteration,millis,objective";

/// Aligned convergence series from several traces, one named series per
/// trace, for external plotting. The final point of each series is the
/// terminal fractional objective.
pub fn trace_series_csv(traces: &[(String, EpisodeTrace)]) -> Result<String> {
    let mut out = String::from(TRACE_SERIES_CSV_HEADER);
    out.push('\n');
    for (name, trace) in traces {
        check_field(name)?;
        let mut elapsed = 0.0;
        for it in &trace.iterations {
            elapsed += it.pricing_millis;
            out.push_str(&format!("{name},{},{elapsed},{}\n", it.iteration, it.objective));
        }
        out.push_str(&format!(
            "{name},{},{},{}\n",
            trace.terminal.iterations,
            trace.terminal.total_millis,
            trace.terminal.objective_fractional
        ));
    }
    Ok(out)
}

pub const TRACE_CSV_HEADER: &str =
    "iteration,objective,action,parameter,fallback,columns_added,best_delta,reward,pricing_millis";

/// Flat per-iteration view of a trace: the objective trajectory plus the
/// chosen action, for plotting convergence curves.
pub fn trace_csv(trace: &EpisodeTrace) -> Result<String> {
    let mut out = String::from(TRACE_CSV_HEADER);
    out.push('\n');
    for it in &trace.iterations {
        check_field(&it.action)?;
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            it.iteration,
            it.objective,
            it.action,
            it.parameter.map_or(String::new(), |p| p.to_string()),
            it.fallback,
            it.columns_added,
            it.best_delta.map_or(String::new(), |d| d.to_string()),
            it.reward,
            it.pricing_millis
        ));
    }
    out.push_str(&format!(
        "{},{},terminal,,false,0,,{},{}\n",
        trace.terminal.iterations,
        trace.terminal.objective_fractional,
        trace.terminal.terminal_reward,
        trace.terminal.total_millis
    ));
    Ok(out)
}
