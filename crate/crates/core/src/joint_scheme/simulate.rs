use super::delivery::{place_joint, run_delivery, Delivery};
use super::plan::SlotPlanner;
use super::refined::{refined_rate, refined_two_user};
use super::{check_config, phase_lengths, SchemeError, DEFAULT_MARGIN};
use crate::bounds::joint_lower_points;
use crate::model::{enumerate_worst_case_demands, DemandMode, DemandVector, Library, NetworkConfig};
use crate::report::TrialReport;
use crate::seed::derive_seed;
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulationSettings {
    pub t: usize,
    /// Rate as a fraction of the scheme's nominal rate.
    pub rate_fraction: f64,
    pub n: usize,
    pub trials: usize,
    /// Trial `i` serves demand vector `i mod count`.
    pub demand_mode: DemandMode,
    pub seed: u64,
    pub margin: f64,
    pub planner: SlotPlanner,
}

impl SimulationSettings {
    /// Defaults: one sampled demand vector per trial, 5% margin, equal-reliability slots.
    pub fn new(t: usize, rate_fraction: f64, n: usize, trials: usize, seed: u64) -> Self {
        Self {
            t,
            rate_fraction,
            n,
            trials,
            demand_mode: DemandMode::Sampled { count: trials.max(1), seed },
            seed,
            margin: DEFAULT_MARGIN,
            planner: SlotPlanner::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PhaseFailures {
    pub phase: String,
    /// Trials in which some participant of this phase failed to decode.
    pub trials: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationSummary {
    pub scheme: String,
    pub t: usize,
    pub rate: f64,
    pub rate_fraction: f64,
    pub n: usize,
    pub trials: usize,
    pub seed: u64,
    pub margin: f64,
    pub planner: SlotPlanner,
    /// Whether the subphases fit the block with the margin applied.
    pub feasible: bool,
    pub infeasibility: Option<String>,
    /// Largest cache over receivers and trials, in bits per channel use.
    pub memory: f64,
    /// Fraction of trials in which some receiver failed.
    pub error: f64,
    /// Largest per-demand-vector failure fraction.
    pub worst_case_error_estimate: f64,
    pub demand_vectors: usize,
    pub phase_failures: Vec<PhaseFailures>,
    /// SHA-256 over the per-trial digests in trial order.
    pub digest: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Simulation {
    pub summary: SimulationSummary,
    pub reports: Vec<TrialReport>,
}

pub(crate) struct TrialOutcome {
    pub delivery: Delivery,
    pub memory_bits: usize,
}

/// Runs `s.trials` independent trials of `trial` and aggregates them.
#[allow(clippy::too_many_arguments)]
pub(crate) fn run_trials<F>(
    c: &NetworkConfig,
    s: &SimulationSettings,
    scheme: &str,
    rate: f64,
    infeasibility: Option<String>,
    phase_names: &[&str],
    trial: F,
) -> Result<Simulation, SchemeError>
where
    F: Fn(&Library, &DemandVector, u64) -> Result<TrialOutcome, SchemeError> + Sync,
{
    let demands = enumerate_worst_case_demands(c, s.demand_mode)?;
    if demands.is_empty() {
        return Err(SchemeError::Library("no demand vectors to serve".into()));
    }
    let outcomes: Vec<(u64, usize, TrialOutcome)> = (0..s.trials as u64)
        .into_par_iter()
        .map(|i| {
            let seed = derive_seed(s.seed, &[i]);
            let lib = Library::random_symmetric(c.num_files, rate, s.n, derive_seed(seed, &[0]));
            let di = i as usize % demands.len();
            Ok((seed, di, trial(&lib, &demands[di], derive_seed(seed, &[1]))?))
        })
        .collect::<Result<_, SchemeError>>()?;

    let mut per_demand = vec![(0usize, 0usize); demands.len()];
    let mut phase_counts = vec![0usize; phase_names.len()];
    let mut hasher = Sha256::new();
    let mut memory_bits = 0;
    let mut reports = Vec::with_capacity(outcomes.len());
    for (i, (seed, di, o)) in outcomes.into_iter().enumerate() {
        let tr = &o.delivery.transcript;
        let failed: Vec<&str> = phase_names
            .iter()
            .enumerate()
            .filter(|&(p, _)| tr.subphase_failed(p as u8 + 1))
            .map(|(_, &name)| name)
            .collect();
        for (p, name) in phase_names.iter().enumerate() {
            phase_counts[p] += usize::from(failed.contains(name));
        }
        let ok = o.delivery.success.iter().all(|&x| x);
        per_demand[di].0 += 1;
        per_demand[di].1 += usize::from(!ok);
        hasher.update(tr.digest.as_bytes());
        memory_bits = memory_bits.max(o.memory_bits);
        reports.push(TrialReport {
            trial: i as u64,
            seed,
            scheme: scheme.to_string(),
            rate,
            n: s.n,
            success: o.delivery.success,
            slots_used: tr.subphases.iter().map(|p| p.slots).sum(),
            extra: serde_json::json!({
                "demand": demands[di].0,
                "memory_bits": o.memory_bits,
                "failed_phases": failed,
                "digest": tr.digest,
            }),
        });
    }
    let trials = reports.len();
    let failures: usize = per_demand.iter().map(|p| p.1).sum();
    let worst = per_demand.iter().filter(|p| p.0 > 0).map(|p| p.1 as f64 / p.0 as f64).fold(0.0, f64::max);
    let summary = SimulationSummary {
        scheme: scheme.to_string(),
        t: s.t,
        rate,
        rate_fraction: s.rate_fraction,
        n: s.n,
        trials,
        seed: s.seed,
        margin: s.margin,
        planner: s.planner,
        feasible: infeasibility.is_none(),
        infeasibility,
        memory: memory_bits as f64 / s.n.max(1) as f64,
        error: if trials == 0 { 0.0 } else { failures as f64 / trials as f64 },
        worst_case_error_estimate: worst,
        demand_vectors: demands.len(),
        phase_failures: phase_names
            .iter()
            .zip(phase_counts)
            .map(|(name, trials)| PhaseFailures { phase: name.to_string(), trials })
            .collect(),
        digest: hasher.finalize().iter().map(|b| format!("{b:02x}")).collect(),
    };
    Ok(Simulation { summary, reports })
}

/// Monte Carlo run of the joint scheme at `rate_fraction` of the rate of
/// its parameter `t`. Trials run even when the subphases do not fit; the
/// summary then records the violated constraint.
///
/// A zero memory in `config` means the caches may hold whatever the scheme
/// places; otherwise every cache is checked against it.
pub fn simulate(config: &NetworkConfig, s: &SimulationSettings) -> Result<Simulation, SchemeError> {
    let c = check_config(config, s.t)?;
    let rate = s.rate_fraction * joint_lower_points(&c)?[s.t].rate;
    let infeasibility = phase_lengths(&c, s.t, rate, s.margin).err().map(|e| e.to_string());
    let budget = (c.memory > 0.0).then_some(c.memory);
    run_trials(&c, s, "joint", rate, infeasibility, &["subphase1", "subphase2", "subphase3"], |lib, demand, seed| {
        let p = place_joint(&c, s.t, lib, s.n, budget)?;
        let delivery = run_delivery(&c, &p, lib, demand, s.n, seed, s.planner, s.margin)?;
        Ok(TrialOutcome { memory_bits: p.memory_bits(), delivery })
    })
}

/// Monte Carlo run of the refined two-receiver scheme at `rate_fraction`
/// of `F (1 - delta_s)`. `s.t`, `s.margin` and `s.planner` are unused.
pub fn simulate_refined(config: &NetworkConfig, s: &SimulationSettings) -> Result<Simulation, SchemeError> {
    let c = config.validate()?.config;
    let rate = refined_rate(&c, s.rate_fraction)?;
    let infeasibility = (s.rate_fraction >= 1.0).then(|| "rate is not below the strong receiver's capacity".to_string());
    run_trials(&c, s, "refined", rate, infeasibility, &["piggyback"], |lib, demand, seed| {
        let r = refined_two_user(&c, lib, demand, s.n, seed)?;
        Ok(TrialOutcome { memory_bits: r.cache_bits, delivery: r.delivery })
    })
}
