//! Coalition formation among UAVs choosing a mobile network operator.
//!
//! Each operator's UAVs form a coalition; a UAV's payoff is its success
//! probability 1 - P_out at its serving BS of that operator, with every other
//! member of the coalition as an interferer. The characteristic value of a
//! coalition is the sum of member payoffs. Players move one at a time when
//! the move strictly improves both their own payoff and the joint value of
//! the two coalitions involved.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::channel::{LinkStatistics, LinkTable};
use crate::config::ScenarioConfig;
use crate::error::{Error, Result};
use crate::geometry::Topology;
use crate::outage::outage_serving_residues;

/// Relative margin for the strict comparisons of the transfer rule.
pub const STRICTNESS: f64 = 1e-12;

/// `a > b` by more than [`STRICTNESS`] relative to the larger magnitude.
pub fn strictly_greater(a: f64, b: f64) -> bool {
    a - b > STRICTNESS * a.abs().max(b.abs())
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoalitionPartition {
    pub mno_count: usize,
    /// `assignment[uav_id]` is the operator of that UAV.
    pub assignment: Vec<usize>,
    /// `payoffs[uav_id]` within its current coalition.
    pub payoffs: Vec<f64>,
    pub transfer_count: usize,
    pub stable: bool,
}

impl CoalitionPartition {
    pub fn uav_count(&self) -> usize {
        self.assignment.len()
    }

    /// Members of coalition `mno` in ascending id.
    pub fn coalition(&self, mno: usize) -> Vec<usize> {
        self.assignment.iter().enumerate().filter(|&(_, &o)| o == mno).map(|(u, _)| u).collect()
    }

    pub fn sum_payoff(&self) -> f64 {
        self.payoffs.iter().sum()
    }

    /// Average outage 1 - payoff over all UAVs.
    pub fn mean_outage(&self) -> f64 {
        if self.payoffs.is_empty() {
            return 0.0;
        }
        self.payoffs.iter().map(|p| 1.0 - p).sum::<f64>() / self.payoffs.len() as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Transfer {
    pub uav_id: usize,
    pub from: usize,
    pub to: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct GameTrace {
    pub initial_sum: f64,
    /// Total payoff after each applied transfer.
    pub sum_payoff_history: Vec<f64>,
    pub transfers: Vec<Transfer>,
    pub passes: usize,
}

impl GameTrace {
    /// True when every transfer raised the total payoff.
    pub fn strictly_increasing(&self) -> bool {
        let mut previous = self.initial_sum;
        for &s in &self.sum_payoff_history {
            if !(s > previous) {
                return false;
            }
            previous = s;
        }
        true
    }

    /// Writes `index,uav_id,from,to,sum_payoff_after`, one row per transfer.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut writer = csv::Writer::from_writer(out);
        writer.write_record(["index", "uav_id", "from", "to", "sum_payoff_after"])?;
        for (i, (t, s)) in self.transfers.iter().zip(&self.sum_payoff_history).enumerate() {
            writer.write_record([i.to_string(), t.uav_id.to_string(), t.from.to_string(), t.to.to_string(), format!("{s:e}")])?;
        }
        writer.flush()?;
        Ok(())
    }
}

/// Payoffs after a candidate transfer of the two coalitions it touches.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferEvaluation {
    pub transfer: Transfer,
    /// (uav_id, payoff) for the source coalition without the mover.
    pub source_payoffs: Vec<(usize, f64)>,
    /// (uav_id, payoff) for the target coalition including the mover.
    pub target_payoffs: Vec<(usize, f64)>,
}

/// A topology with its precomputed link statistics.
#[derive(Debug, Clone)]
pub struct GameContext<'a> {
    pub topology: &'a Topology,
    pub config: &'a ScenarioConfig,
    pub links: LinkTable,
}

impl<'a> GameContext<'a> {
    pub fn new(topology: &'a Topology, config: &'a ScenarioConfig) -> Result<Self> {
        config.validate()?;
        if topology.mno_count != config.mno_count {
            return Err(Error::Topology(format!(
                "topology has {} MNOs, config {}",
                topology.mno_count, config.mno_count
            )));
        }
        let links = LinkTable::build(topology, config)?;
        Ok(Self { topology, config, links })
    }

    fn check_mno(&self, mno: usize) -> Result<()> {
        if mno >= self.topology.mno_count {
            return Err(Error::Topology(format!("unknown MNO {mno}")));
        }
        Ok(())
    }

    /// Statistics of the links of `uav` and of each of `others` towards the
    /// serving BS of `uav` in `mno`.
    fn link_set(&self, uav: usize, others: impl Iterator<Item = usize>, mno: usize) -> (LinkStatistics, Vec<LinkStatistics>) {
        let bs = self.topology.serving_bs(uav, mno);
        let serving = *self.links.get(uav, bs);
        let interferers = others.filter(|&t| t != uav).map(|t| *self.links.get(t, bs)).collect();
        (serving, interferers)
    }

    /// Payoff of `uav` in coalition `members` of operator `mno`. Members
    /// other than `uav` are interferers; `uav` itself need not be listed.
    pub fn payoff(&self, uav: usize, members: &[usize], mno: usize) -> Result<f64> {
        self.check_mno(mno)?;
        let (serving, interferers) = self.link_set(uav, members.iter().copied(), mno);
        Ok(1.0 - outage_serving_residues(&serving, &interferers, self.config.gamma_th)?.probability)
    }

    /// Sum of member payoffs; zero for an empty coalition.
    pub fn characteristic(&self, members: &[usize], mno: usize) -> Result<f64> {
        members.iter().map(|&u| self.payoff(u, members, mno)).sum()
    }

    pub fn partition_from(&self, assignment: Vec<usize>) -> Result<CoalitionPartition> {
        if assignment.len() != self.topology.uav_count() {
            return Err(Error::Topology(format!(
                "assignment covers {} UAVs, topology has {}",
                assignment.len(),
                self.topology.uav_count()
            )));
        }
        if let Some(&bad) = assignment.iter().find(|&&o| o >= self.topology.mno_count) {
            return Err(Error::Topology(format!("assignment references unknown MNO {bad}")));
        }
        let mut partition = CoalitionPartition {
            mno_count: self.topology.mno_count,
            payoffs: vec![0.0; assignment.len()],
            assignment,
            transfer_count: 0,
            stable: false,
        };
        for o in 0..partition.mno_count {
            let members = partition.coalition(o);
            for &u in &members {
                partition.payoffs[u] = self.payoff(u, &members, o)?;
            }
        }
        Ok(partition)
    }

    /// Every UAV picks an operator uniformly at random.
    pub fn random_assignment(&self, seed: u64) -> Result<CoalitionPartition> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let o = self.topology.mno_count;
        let assignment = (0..self.topology.uav_count()).map(|_| rng.random_range(0..o)).collect();
        self.partition_from(assignment)
    }

    /// Largest deviation of the cached payoffs from a fresh computation.
    pub fn cache_deviation(&self, partition: &CoalitionPartition) -> Result<f64> {
        let fresh = self.partition_from(partition.assignment.clone())?;
        Ok(fresh.payoffs.iter().zip(&partition.payoffs).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
    }

    /// Evaluates moving `uav` to coalition `to`. Returns the new payoffs when
    /// the move is admissible, `None` otherwise. The mover's own gain is
    /// checked first so most rejections cost a single outage evaluation.
    pub fn evaluate_transfer(&self, uav: usize, to: usize, partition: &CoalitionPartition) -> Result<Option<TransferEvaluation>> {
        self.check_mno(to)?;
        let from = partition.assignment[uav];
        if from == to {
            return Err(Error::Topology(format!("UAV {uav} already belongs to MNO {to}")));
        }
        let mut target = partition.coalition(to);
        let mover = self.payoff(uav, &target, to)?;
        if !strictly_greater(mover, partition.payoffs[uav]) {
            return Ok(None);
        }
        let source: Vec<usize> = partition.coalition(from).into_iter().filter(|&t| t != uav).collect();
        let old_value: f64 = source.iter().chain(&target).map(|&t| partition.payoffs[t]).sum::<f64>() + partition.payoffs[uav];

        let mut source_payoffs = Vec::with_capacity(source.len());
        for &t in &source {
            source_payoffs.push((t, self.payoff(t, &source, from)?));
        }
        let insert_at = target.partition_point(|&t| t < uav);
        target.insert(insert_at, uav);
        let mut target_payoffs = Vec::with_capacity(target.len());
        for &t in &target {
            let p = if t == uav { mover } else { self.payoff(t, &target, to)? };
            target_payoffs.push((t, p));
        }
        let new_value: f64 = source_payoffs.iter().chain(&target_payoffs).map(|&(_, p)| p).sum();
        if !strictly_greater(new_value, old_value) {
            return Ok(None);
        }
        Ok(Some(TransferEvaluation { transfer: Transfer { uav_id: uav, from, to }, source_payoffs, target_payoffs }))
    }

    pub fn transfer_admissible(&self, uav: usize, to: usize, partition: &CoalitionPartition) -> Result<bool> {
        Ok(self.evaluate_transfer(uav, to, partition)?.is_some())
    }

    fn apply(partition: &mut CoalitionPartition, evaluation: &TransferEvaluation) {
        partition.assignment[evaluation.transfer.uav_id] = evaluation.transfer.to;
        for &(t, p) in evaluation.source_payoffs.iter().chain(&evaluation.target_payoffs) {
            partition.payoffs[t] = p;
        }
        partition.transfer_count += 1;
    }

    /// Runs the transfer dynamics from `initial` until a full pass applies
    /// no transfer. Coalition pairs (i, j) are scanned in index order and
    /// members of i in ascending id, each admissible transfer being applied
    /// at once.
    pub fn run_from(&self, initial: CoalitionPartition) -> Result<(CoalitionPartition, GameTrace)> {
        let mut partition = initial;
        let mut trace = GameTrace { initial_sum: partition.sum_payoff(), ..GameTrace::default() };
        let o = partition.mno_count;
        loop {
            if trace.passes >= self.config.max_passes {
                return Err(Error::NonConvergence { passes: trace.passes });
            }
            trace.passes += 1;
            let mut applied = false;
            for i in 0..o {
                for j in (0..o).filter(|&j| j != i) {
                    for u in partition.coalition(i) {
                        if partition.assignment[u] != i {
                            continue;
                        }
                        if let Some(evaluation) = self.evaluate_transfer(u, j, &partition)? {
                            Self::apply(&mut partition, &evaluation);
                            trace.transfers.push(evaluation.transfer);
                            trace.sum_payoff_history.push(partition.sum_payoff());
                            applied = true;
                        }
                    }
                }
            }
            if !applied {
                break;
            }
        }
        partition.stable = true;
        Ok((partition, trace))
    }

    /// Random initial assignment from `seed`, then the transfer dynamics.
    pub fn run(&self, seed: u64) -> Result<(CoalitionPartition, GameTrace)> {
        self.run_from(self.random_assignment(seed)?)
    }

    /// Every admissible (uav, from, to) move of `partition`.
    pub fn admissible_transfers(&self, partition: &CoalitionPartition) -> Result<Vec<Transfer>> {
        let mut found = Vec::new();
        for u in 0..partition.uav_count() {
            for to in (0..partition.mno_count).filter(|&to| to != partition.assignment[u]) {
                if let Some(e) = self.evaluate_transfer(u, to, partition)? {
                    found.push(e.transfer);
                }
            }
        }
        Ok(found)
    }

    /// Exhaustive maximum of the total payoff over all operator assignments.
    /// Only feasible for a handful of UAVs.
    pub fn global_optimum(&self) -> Result<(Vec<usize>, f64)> {
        let u = self.topology.uav_count();
        let o = self.topology.mno_count;
        let total = o.checked_pow(u as u32).filter(|&t| t <= 1 << 20).ok_or_else(|| {
            Error::Domain(format!("{o}^{u} partitions are too many to enumerate"))
        })?;
        let mut best = (Vec::new(), f64::NEG_INFINITY);
        for code in 0..total {
            let mut rest = code;
            let assignment: Vec<usize> = (0..u)
                .map(|_| {
                    let digit = rest % o;
                    rest /= o;
                    digit
                })
                .collect();
            let value = self.partition_from(assignment.clone())?.sum_payoff();
            if value > best.1 {
                best = (assignment, value);
            }
        }
        Ok(best)
    }
}

/// Random baseline assignment for a topology.
pub fn random_assignment(topology: &Topology, config: &ScenarioConfig, seed: u64) -> Result<CoalitionPartition> {
    GameContext::new(topology, config)?.random_assignment(seed)
}

/// Coalition game from a random initial assignment drawn with `initial_seed`.
pub fn run_coalition_game(topology: &Topology, config: &ScenarioConfig, initial_seed: u64) -> Result<(CoalitionPartition, GameTrace)> {
    GameContext::new(topology, config)?.run(initial_seed)
}
