//! Instance parsing, generation, truncation and the canonical on-disk format.
//!
//! VRPTW instances come from Solomon-format benchmark files; BDSP instances
//! are produced by a seeded random generator whose trip starting hours follow
//! a fixed peak-hour distribution. Both kinds serialize to a line-oriented
//! `FORMAT v1` text file.

use std::fmt::Write as _;
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const FORMAT_HEADER: &str = "FORMAT v1";

/// Per-hour probabilities (percent) for BDSP trip starting hours,
/// hours 0..24. Zero before 4 a.m. and after 9 p.m.
pub const START_HOUR_PERCENT: [u32; 24] = [
    0, 0, 0, 0, 3, 3, 5, 9, 10, 8, 5, 4, // a.m.
    3, 3, 4, 5, 9, 10, 8, 5, 3, 3, 0, 0, // p.m.
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ProblemKind {
    Vrptw,
    Bdsp,
}

impl std::fmt::Display for ProblemKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ProblemKind::Vrptw => write!(f, "VRPTW"),
            ProblemKind::Bdsp => write!(f, "BDSP"),
        }
    }
}

/// One node row of a Solomon file: depot or customer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CustomerNode {
    pub id: u32,
    pub x: f64,
    pub y: f64,
    pub demand: f64,
    /// Window open, w̲_i.
    pub ready: f64,
    /// Window close, w̄_i.
    pub due: f64,
    pub service: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VrptwInstance {
    pub name: String,
    pub depot: CustomerNode,
    pub customers: Vec<CustomerNode>,
    pub capacity: f64,
    pub vehicle_fixed_cost: f64,
}

/// A timetabled bus trip; times are minutes from midnight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trip {
    pub id: u32,
    pub start: f64,
    pub end: f64,
}

impl Trip {
    pub fn duration(&self) -> f64 {
        self.end - self.start
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BdspInstance {
    pub name: String,
    pub trips: Vec<Trip>,
    /// Minimum changeover time T between consecutive trips (minutes).
    pub min_changeover: f64,
    pub max_driving: f64,
    pub max_working: f64,
    pub max_continuous_driving: f64,
    /// Inter-trip gap at or above which continuous driving resets.
    pub break_threshold: f64,
    pub driver_fixed_cost: f64,
}

impl BdspInstance {
    pub fn default_limits(name: &str, trips: Vec<Trip>) -> Self {
        BdspInstance {
            name: name.to_string(),
            trips,
            min_changeover: 10.0,
            max_driving: 540.0,
            max_working: 720.0,
            max_continuous_driving: 240.0,
            break_threshold: 30.0,
            driver_fixed_cost: 500.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Instance {
    Vrptw(VrptwInstance),
    Bdsp(BdspInstance),
}

impl Instance {
    pub fn kind(&self) -> ProblemKind {
        match self {
            Instance::Vrptw(_) => ProblemKind::Vrptw,
            Instance::Bdsp(_) => ProblemKind::Bdsp,
        }
    }

    pub fn name(&self) -> &str {
        match self {
            Instance::Vrptw(i) => &i.name,
            Instance::Bdsp(i) => &i.name,
        }
    }

    /// Number of customers / trips.
    pub fn len(&self) -> usize {
        match self {
            Instance::Vrptw(i) => i.customers.len(),
            Instance::Bdsp(i) => i.trips.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn truncate(&self, n: usize) -> Result<Instance> {
        match self {
            Instance::Vrptw(i) => Ok(Instance::Vrptw(truncate_vrptw(i, n)?)),
            Instance::Bdsp(i) => Ok(Instance::Bdsp(truncate_bdsp(i, n)?)),
        }
    }
}

/// Reference to an instance within a benchmark run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceRef {
    pub kind: ProblemKind,
    pub name: String,
    pub n: usize,
    pub source: String,
}

fn validate_vrptw(inst: &VrptwInstance, line_of: impl Fn(u32) -> usize) -> Result<()> {
    if inst.depot.demand != 0.0 || inst.depot.service != 0.0 {
        return Err(Error::Parse {
            line: line_of(inst.depot.id),
            msg: "depot must have zero demand and zero service time".into(),
        });
    }
    let mut max_demand = 0.0f64;
    for c in &inst.customers {
        if c.ready > c.due {
            return Err(Error::Parse {
                line: line_of(c.id),
                msg: format!("customer {}: ready time {} > due date {}", c.id, c.ready, c.due),
            });
        }
        if c.demand < 0.0 || c.service < 0.0 {
            return Err(Error::Parse {
                line: line_of(c.id),
                msg: format!("customer {}: negative demand or service time", c.id),
            });
        }
        max_demand = max_demand.max(c.demand);
    }
    if inst.capacity < max_demand {
        return Err(Error::Parse {
            line: 0,
            msg: format!(
                "vehicle capacity {} below maximum customer demand {}",
                inst.capacity, max_demand
            ),
        });
    }
    Ok(())
}

fn validate_bdsp(inst: &BdspInstance) -> Result<()> {
    for t in &inst.trips {
        if t.end <= t.start {
            return Err(Error::Schema(format!(
                "trip {}: end time {} not after start time {}",
                t.id, t.end, t.start
            )));
        }
    }
    if inst.min_changeover < 0.0 {
        return Err(Error::Schema("negative min changeover".into()));
    }
    Ok(())
}

/// Parse a Solomon-format VRPTW instance.
///
/// Layout: a name line, a `VEHICLE` section whose first numeric line holds
/// vehicle number and capacity, then a `CUSTOMER` section with one row of
/// seven numbers per node. Node 0 is the depot.
pub fn parse_solomon(text: &str) -> Result<VrptwInstance> {
    let mut name = String::new();
    let mut capacity: Option<f64> = None;
    let mut nodes: Vec<(usize, CustomerNode)> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let numeric: Option<Vec<f64>> =
            fields.iter().map(|f| f.parse::<f64>().ok()).collect();
        match numeric {
            None => {
                // First non-numeric line is the instance name.
                if name.is_empty() && !line.contains("VEHICLE") && !line.contains("CUSTOMER") {
                    name = line.to_string();
                }
            }
            Some(vals) => match vals.len() {
                2 if capacity.is_none() => capacity = Some(vals[1]),
                7 => {
                    let node = CustomerNode {
                        id: vals[0] as u32,
                        x: vals[1],
                        y: vals[2],
                        demand: vals[3],
                        ready: vals[4],
                        due: vals[5],
                        service: vals[6],
                    };
                    nodes.push((line_no, node));
                }
                _ => {
                    return Err(Error::Parse {
                        line: line_no,
                        msg: format!("unexpected numeric row with {} fields", vals.len()),
                    })
                }
            },
        }
    }

    let capacity = capacity.ok_or(Error::Parse {
        line: 0,
        msg: "missing VEHICLE header with capacity".into(),
    })?;
    if nodes.is_empty() {
        return Err(Error::Parse {
            line: 0,
            msg: "no customer rows found".into(),
        });
    }
    let depot_line = nodes[0].0;
    let depot = nodes[0].1.clone();
    if depot.id != 0 {
        return Err(Error::Parse {
            line: depot_line,
            msg: "first node row must be depot with id 0".into(),
        });
    }
    let customers: Vec<CustomerNode> = nodes[1..].iter().map(|(_, n)| n.clone()).collect();
    let inst = VrptwInstance {
        name,
        depot,
        customers,
        capacity,
        vehicle_fixed_cost: 0.0,
    };
    let line_of = |id: u32| {
        nodes
            .iter()
            .find(|(_, n)| n.id == id)
            .map(|(l, _)| *l)
            .unwrap_or(0)
    };
    validate_vrptw(&inst, line_of)?;
    Ok(inst)
}

pub fn truncate_vrptw(inst: &VrptwInstance, n: usize) -> Result<VrptwInstance> {
    if n == 0 || n > inst.customers.len() {
        return Err(Error::InvalidArgument(format!(
            "truncate: n = {} out of range 1..={}",
            n,
            inst.customers.len()
        )));
    }
    let mut out = inst.clone();
    out.customers.truncate(n);
    Ok(out)
}

pub fn truncate_bdsp(inst: &BdspInstance, n: usize) -> Result<BdspInstance> {
    if n == 0 || n > inst.trips.len() {
        return Err(Error::InvalidArgument(format!(
            "truncate: n = {} out of range 1..={}",
            n,
            inst.trips.len()
        )));
    }
    let mut out = inst.clone();
    out.trips.truncate(n);
    Ok(out)
}

/// Generate a random BDSP instance with `n` trips.
///
/// Start hours follow [`START_HOUR_PERCENT`], start minutes are uniform on
/// 0–59 and durations are integers uniform on [60, 90]. Deterministic for a
/// fixed seed.
pub fn generate_bdsp(n: usize, seed: u64) -> Result<BdspInstance> {
    if n == 0 {
        return Err(Error::InvalidArgument("generate_bdsp: n must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut trips = Vec::with_capacity(n);
    for id in 1..=n as u32 {
        let hour = sample_start_hour(&mut rng);
        let minute = rng.gen_range(0..60u32);
        let duration = rng.gen_range(60..=90u32);
        let start = (hour * 60 + minute) as f64;
        trips.push(Trip {
            id,
            start,
            end: start + duration as f64,
        });
    }
    let inst = BdspInstance::default_limits(&format!("bdsp_{}_{}", n, seed), trips);
    validate_bdsp(&inst)?;
    Ok(inst)
}

fn sample_start_hour(rng: &mut impl Rng) -> u32 {
    let total: u32 = START_HOUR_PERCENT.iter().sum();
    let mut draw = rng.gen_range(0..total);
    for (hour, &p) in START_HOUR_PERCENT.iter().enumerate() {
        if draw < p {
            return hour as u32;
        }
        draw -= p;
    }
    unreachable!("probabilities sum to {}", total)
}

pub fn save_instance(inst: &Instance, path: &Path) -> Result<()> {
    std::fs::write(path, serialize_instance(inst))?;
    Ok(())
}

pub fn load_instance(path: &Path) -> Result<Instance> {
    let text = std::fs::read_to_string(path)?;
    deserialize_instance(&text)
}

pub fn serialize_instance(inst: &Instance) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{}", FORMAT_HEADER);
    match inst {
        Instance::Vrptw(i) => {
            let _ = writeln!(s, "KIND VRPTW");
            let _ = writeln!(s, "NAME {}", i.name);
            let _ = writeln!(s, "CAPACITY {}", i.capacity);
            let _ = writeln!(s, "VEHICLE_FIXED_COST {}", i.vehicle_fixed_cost);
            let d = &i.depot;
            let _ = writeln!(
                s,
                "DEPOT {} {} {} {} {} {} {}",
                d.id, d.x, d.y, d.demand, d.ready, d.due, d.service
            );
            let _ = writeln!(s, "CUSTOMERS {}", i.customers.len());
            for c in &i.customers {
                let _ = writeln!(
                    s,
                    "{} {} {} {} {} {} {}",
                    c.id, c.x, c.y, c.demand, c.ready, c.due, c.service
                );
            }
        }
        Instance::Bdsp(i) => {
            let _ = writeln!(s, "KIND BDSP");
            let _ = writeln!(s, "NAME {}", i.name);
            let _ = writeln!(s, "MIN_CHANGEOVER {}", i.min_changeover);
            let _ = writeln!(s, "MAX_DRIVING {}", i.max_driving);
            let _ = writeln!(s, "MAX_WORKING {}", i.max_working);
            let _ = writeln!(s, "MAX_CONTINUOUS_DRIVING {}", i.max_continuous_driving);
            let _ = writeln!(s, "BREAK_THRESHOLD {}", i.break_threshold);
            let _ = writeln!(s, "DRIVER_FIXED_COST {}", i.driver_fixed_cost);
            let _ = writeln!(s, "TRIPS {}", i.trips.len());
            for t in &i.trips {
                let _ = writeln!(s, "{} {} {}", t.id, t.start, t.end);
            }
        }
    }
    s.push_str("END\n");
    s
}

struct LineReader<'a> {
    lines: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> LineReader<'a> {
    fn next(&mut self) -> Result<(usize, &'a str)> {
        self.lines
            .next()
            .map(|(i, l)| (i + 1, l))
            .ok_or_else(|| Error::Schema("unexpected end of file".into()))
    }

    fn keyword(&mut self, key: &str) -> Result<(usize, String)> {
        let (no, line) = self.next()?;
        match line.strip_prefix(key) {
            Some(rest) => Ok((no, rest.trim().to_string())),
            None => Err(Error::Schema(format!(
                "line {}: expected `{}`, found `{}`",
                no, key, line
            ))),
        }
    }

    fn keyword_f64(&mut self, key: &str) -> Result<f64> {
        let (no, rest) = self.keyword(key)?;
        rest.parse::<f64>()
            .map_err(|_| Error::Schema(format!("line {}: bad number `{}`", no, rest)))
    }
}

fn parse_node_row(no: usize, line: &str) -> Result<CustomerNode> {
    let v: Vec<f64> = line
        .split_whitespace()
        .map(|f| f.parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::Schema(format!("line {}: bad node row `{}`", no, line)))?;
    if v.len() != 7 {
        return Err(Error::Schema(format!(
            "line {}: node row needs 7 fields, found {}",
            no,
            v.len()
        )));
    }
    Ok(CustomerNode {
        id: v[0] as u32,
        x: v[1],
        y: v[2],
        demand: v[3],
        ready: v[4],
        due: v[5],
        service: v[6],
    })
}

pub fn deserialize_instance(text: &str) -> Result<Instance> {
    let mut r = LineReader {
        lines: text.lines().enumerate(),
    };
    let (_, header) = r.next()?;
    if header.trim() != FORMAT_HEADER {
        return Err(Error::Version(header.trim().to_string()));
    }
    let (_, kind) = r.keyword("KIND")?;
    match kind.as_str() {
        "VRPTW" => {
            let (_, name) = r.keyword("NAME")?;
            let capacity = r.keyword_f64("CAPACITY")?;
            let vehicle_fixed_cost = r.keyword_f64("VEHICLE_FIXED_COST")?;
            let (no, depot_row) = r.keyword("DEPOT")?;
            let depot = parse_node_row(no, &depot_row)?;
            let count = r.keyword_f64("CUSTOMERS")? as usize;
            let mut customers = Vec::with_capacity(count);
            for _ in 0..count {
                let (no, line) = r.next()?;
                customers.push(parse_node_row(no, line)?);
            }
            expect_end(&mut r)?;
            let inst = VrptwInstance {
                name,
                depot,
                customers,
                capacity,
                vehicle_fixed_cost,
            };
            validate_vrptw(&inst, |_| 0)
                .map_err(|e| Error::Schema(e.to_string()))?;
            Ok(Instance::Vrptw(inst))
        }
        "BDSP" => {
            let (_, name) = r.keyword("NAME")?;
            let min_changeover = r.keyword_f64("MIN_CHANGEOVER")?;
            let max_driving = r.keyword_f64("MAX_DRIVING")?;
            let max_working = r.keyword_f64("MAX_WORKING")?;
            let max_continuous_driving = r.keyword_f64("MAX_CONTINUOUS_DRIVING")?;
            let break_threshold = r.keyword_f64("BREAK_THRESHOLD")?;
            let driver_fixed_cost = r.keyword_f64("DRIVER_FIXED_COST")?;
            let count = r.keyword_f64("TRIPS")? as usize;
            let mut trips = Vec::with_capacity(count);
            for _ in 0..count {
                let (no, line) = r.next()?;
                let v: Vec<f64> = line
                    .split_whitespace()
                    .map(|f| f.parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| Error::Schema(format!("line {}: bad trip row `{}`", no, line)))?;
                if v.len() != 3 {
                    return Err(Error::Schema(format!(
                        "line {}: trip row needs 3 fields, found {}",
                        no,
                        v.len()
                    )));
                }
                trips.push(Trip {
                    id: v[0] as u32,
                    start: v[1],
                    end: v[2],
                });
            }
            expect_end(&mut r)?;
            let inst = BdspInstance {
                name,
                trips,
                min_changeover,
                max_driving,
                max_working,
                max_continuous_driving,
                break_threshold,
                driver_fixed_cost,
            };
            validate_bdsp(&inst)?;
            Ok(Instance::Bdsp(inst))
        }
        other => Err(Error::Schema(format!("unknown instance kind `{}`", other))),
    }
}

fn expect_end(r: &mut LineReader<'_>) -> Result<()> {
    let (no, line) = r
        .next()
        .map_err(|_| Error::Schema("missing END trailer (file truncated?)".into()))?;
    if line.trim() == "END" {
        Ok(())
    } else {
        Err(Error::Schema(format!(
            "line {}: expected END trailer, found `{}`",
            no, line
        )))
    }
}
