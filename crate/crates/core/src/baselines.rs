//! Association policies behind one interface, plus the centralized
//! reference solvers (exhaustive optimum and worst-connection swapping).

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::agent::{select_arm, AgentConfig, SampleKey, SampleStore, VehicleId};
use crate::context::{ArmId, Context};
use crate::env::{AssociationVector, RadioSnapshot};
use crate::error::{Error, Result};
use crate::kernel::KernelFn;
use crate::math;
use crate::sync::{should_sync, synchronize, BsStore, CommLedger, SyncConfig, SyncState};

/// What a policy sees in one period. Vehicles are indexed consistently
/// across `vehicles`, `candidates` and the snapshot.
#[derive(Debug, Clone, Copy)]
pub struct Observation<'a> {
    /// Period index, starting at 0.
    pub period: u32,
    /// Ids of the present vehicles.
    pub vehicles: &'a [VehicleId],
    /// Candidate contexts per vehicle (stations within range).
    pub candidates: &'a [Vec<Context>],
    /// Full channel state. Only centralized policies may read it.
    pub snapshot: &'a RadioSnapshot,
}

/// Communication performed by one vehicle after feedback.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct VehicleComm {
    /// A synchronization took place.
    pub synced: bool,
    /// Samples uploaded to the station.
    pub uploaded: usize,
    /// Samples downloaded after de-duplication.
    pub downloaded: usize,
    /// Pool items considered before subspace filtering.
    pub eligible: usize,
    /// Pool items inside the subspace.
    pub in_subspace: usize,
}

/// A user-association policy.
pub trait Policy {
    /// Short identifier.
    fn name(&self) -> &'static str;

    /// Chooses a station for every vehicle with a non-empty candidate set
    /// and `None` for the rest.
    fn decide(&mut self, obs: &Observation<'_>) -> Result<AssociationVector>;

    /// Receives the realized rate of every associated vehicle. Returns one
    /// entry per vehicle.
    fn feedback(
        &mut self,
        obs: &Observation<'_>,
        assoc: &AssociationVector,
        rewards: &[Option<f64>],
    ) -> Result<Vec<VehicleComm>> {
        let _ = (assoc, rewards);
        Ok(alloc::vec![VehicleComm::default(); obs.vehicles.len()])
    }

    /// Called when a vehicle leaves the map.
    fn depart(&mut self, vehicle: VehicleId) {
        let _ = vehicle;
    }
}

impl<P: Policy + ?Sized> Policy for Box<P> {
    fn name(&self) -> &'static str {
        (**self).name()
    }
    fn decide(&mut self, obs: &Observation<'_>) -> Result<AssociationVector> {
        (**self).decide(obs)
    }
    fn feedback(
        &mut self,
        obs: &Observation<'_>,
        assoc: &AssociationVector,
        rewards: &[Option<f64>],
    ) -> Result<Vec<VehicleComm>> {
        (**self).feedback(obs, assoc, rewards)
    }
    fn depart(&mut self, vehicle: VehicleId) {
        (**self).depart(vehicle)
    }
}

/// Checks the one-station-per-vehicle constraint: every vehicle with
/// candidates is associated to one of them, the rest are silent.
pub fn check_association(candidates: &[Vec<Context>], assoc: &AssociationVector) -> bool {
    assoc.len() == candidates.len()
        && candidates.iter().zip(&assoc.0).all(|(c, a)| match a {
            None => c.is_empty(),
            Some(a) => c.iter().any(|x| x.arm == *a),
        })
}

/// Distributed kernel UCB: one sample store per vehicle, event-triggered
/// synchronization through per-station pools. Generic over the kernel, so
/// the single-Gaussian variant is `DkUcbPolicy<GaussianKernel>`.
#[derive(Debug, Clone)]
pub struct DkUcbPolicy<K> {
    name: &'static str,
    kernel: K,
    agent: AgentConfig,
    sync: SyncConfig,
    agents: BTreeMap<VehicleId, SampleStore<K>>,
    bs: BsStore,
    state: SyncState,
    ledger: CommLedger,
}

impl<K: KernelFn + Clone> DkUcbPolicy<K> {
    /// New policy reported under `name`.
    pub fn new(
        name: &'static str,
        kernel: K,
        agent: AgentConfig,
        sync: SyncConfig,
    ) -> Result<Self> {
        agent.validate()?;
        sync.validate()?;
        Ok(DkUcbPolicy {
            name,
            kernel,
            agent,
            sync,
            agents: BTreeMap::new(),
            bs: BsStore::new(),
            state: SyncState::new(),
            ledger: CommLedger::new(),
        })
    }

    /// Store of a present vehicle.
    pub fn agent(&self, vehicle: VehicleId) -> Option<&SampleStore<K>> {
        self.agents.get(&vehicle)
    }

    /// Station-side pools.
    pub fn stations(&self) -> &BsStore {
        &self.bs
    }

    /// Per-period communication ledger.
    pub fn ledger(&self) -> &CommLedger {
        &self.ledger
    }

    fn store(&mut self, vehicle: VehicleId) -> &mut SampleStore<K> {
        let (kernel, agent) = (&self.kernel, self.agent);
        self.agents
            .entry(vehicle)
            .or_insert_with(|| SampleStore::new(kernel.clone(), agent))
    }
}

impl<K: KernelFn + Clone> Policy for DkUcbPolicy<K> {
    fn name(&self) -> &'static str {
        self.name
    }

    fn decide(&mut self, obs: &Observation<'_>) -> Result<AssociationVector> {
        let mut out = Vec::with_capacity(obs.vehicles.len());
        for (v, cands) in obs.vehicles.iter().zip(obs.candidates) {
            if cands.is_empty() {
                out.push(None);
                continue;
            }
            let (i, _) = select_arm(cands, self.store(*v))?;
            out.push(Some(cands[i].arm));
        }
        Ok(AssociationVector(out))
    }

    fn feedback(
        &mut self,
        obs: &Observation<'_>,
        assoc: &AssociationVector,
        rewards: &[Option<f64>],
    ) -> Result<Vec<VehicleComm>> {
        let mut comm = Vec::with_capacity(obs.vehicles.len());
        for (i, &v) in obs.vehicles.iter().enumerate() {
            let (Some(arm), Some(reward)) = (assoc.get(i), rewards[i]) else {
                comm.push(VehicleComm::default());
                continue;
            };
            let ctx = *obs.candidates[i]
                .iter()
                .find(|c| c.arm == arm)
                .ok_or(Error::EmptyCandidates)?;
            let key = SampleKey {
                vehicle: v,
                period: obs.period,
            };
            self.store(v).record(key, ctx, reward)?;
            let store = &self.agents[&v];
            if !should_sync(v, &ctx, store, &self.state, &self.sync)? {
                comm.push(VehicleComm::default());
                continue;
            }
            let store = self.agents.get_mut(&v).expect("store created above");
            let out = synchronize(
                v,
                &ctx,
                obs.period,
                store,
                &mut self.bs,
                &mut self.state,
                &mut self.ledger,
                self.sync.r_p,
            )?;
            comm.push(VehicleComm {
                synced: true,
                uploaded: out.uploaded,
                downloaded: out.downloaded,
                eligible: out.eligible,
                in_subspace: out.in_subspace,
            });
        }
        Ok(comm)
    }

    fn depart(&mut self, vehicle: VehicleId) {
        self.agents.remove(&vehicle);
        self.state.remove_vehicle(vehicle);
    }
}

/// Uniformly random candidate per vehicle.
#[derive(Debug, Clone)]
pub struct RandomPolicy {
    rng: ChaCha8Rng,
}

impl RandomPolicy {
    /// New policy drawing from `rng`.
    pub fn new(rng: ChaCha8Rng) -> Self {
        RandomPolicy { rng }
    }
}

impl Policy for RandomPolicy {
    fn name(&self) -> &'static str {
        "random"
    }

    fn decide(&mut self, obs: &Observation<'_>) -> Result<AssociationVector> {
        Ok(AssociationVector(
            obs.candidates
                .iter()
                .map(|c| (!c.is_empty()).then(|| c[self.rng.random_range(0..c.len())].arm))
                .collect(),
        ))
    }
}

/// Bounds and resolution of the hypercube partition.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct HypercubeConfig {
    /// Upper bound of the distance axis, meters.
    pub dist_max: f64,
    /// Upper bound of the Doppler axis, Hz.
    pub doppler_max: f64,
    /// Upper bound of the transmission-count axis.
    pub n_tx_max: f64,
    /// Cells per axis.
    pub cells: u16,
    /// Multiplier of the exploration bonus, in reward units.
    pub bonus_scale: f64,
}

impl HypercubeConfig {
    /// Range checks.
    pub fn validate(&self) -> Result<()> {
        for (field, v) in [
            ("hypercube.dist_max", self.dist_max),
            ("hypercube.doppler_max", self.doppler_max),
            ("hypercube.n_tx_max", self.n_tx_max),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::config(field, "must be finite and > 0"));
            }
        }
        if self.cells == 0 {
            return Err(Error::config("hypercube.cells", "must be >= 1"));
        }
        if !(self.bonus_scale.is_finite() && self.bonus_scale >= 0.0) {
            return Err(Error::config(
                "hypercube.bonus_scale",
                "must be finite and >= 0",
            ));
        }
        Ok(())
    }
}

/// Cell coordinates: arm plus one index per context axis.
pub type CellKey = (ArmId, [u16; 4]);

/// Visit count and running mean of one cell.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CellStats {
    /// Observations.
    pub count: u64,
    /// Mean reward.
    pub mean: f64,
}

/// Per-arm partition of the context space into equal axis-aligned cells.
#[derive(Debug, Clone, PartialEq)]
pub struct HypercubeTable {
    cfg: HypercubeConfig,
    cells: BTreeMap<CellKey, CellStats>,
    total: u64,
}

impl HypercubeTable {
    /// Empty table.
    pub fn new(cfg: HypercubeConfig) -> Self {
        HypercubeTable {
            cfg,
            cells: BTreeMap::new(),
            total: 0,
        }
    }

    fn bin(&self, v: f64, max: f64) -> u16 {
        let n = self.cfg.cells;
        let b = (v / max * n as f64) as i64;
        b.clamp(0, n as i64 - 1) as u16
    }

    /// Cell containing `x`. Values beyond the bounds fall in the edge cells.
    pub fn cell(&self, x: &Context) -> CellKey {
        (
            x.arm,
            [
                self.bin(x.theta, math::TAU),
                self.bin(x.dist, self.cfg.dist_max),
                self.bin(x.doppler, self.cfg.doppler_max),
                self.bin(x.n_tx as f64, self.cfg.n_tx_max),
            ],
        )
    }

    /// Stats of the cell containing `x`.
    pub fn stats(&self, x: &Context) -> CellStats {
        self.cells.get(&self.cell(x)).copied().unwrap_or_default()
    }

    /// Adds one observation.
    pub fn update(&mut self, x: &Context, reward: f64) {
        let key = self.cell(x);
        let s = self.cells.entry(key).or_default();
        s.count += 1;
        s.mean += (reward - s.mean) / s.count as f64;
        self.total += 1;
    }

    /// `mean + c √(2 ln t / n)`, infinite for unvisited cells.
    pub fn ucb(&self, x: &Context) -> f64 {
        let s = self.stats(x);
        if s.count == 0 {
            return f64::INFINITY;
        }
        let t = (self.total + 1) as f64;
        s.mean + self.cfg.bonus_scale * math::sqrt(2.0 * math::ln(t) / s.count as f64)
    }

    /// Total observations.
    pub fn total(&self) -> u64 {
        self.total
    }
}

/// Contextual UCB over a hypercube partition, one table shared by all
/// vehicles.
#[derive(Debug, Clone)]
pub struct HypercubePolicy {
    table: HypercubeTable,
}

impl HypercubePolicy {
    /// New policy.
    pub fn new(cfg: HypercubeConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(HypercubePolicy {
            table: HypercubeTable::new(cfg),
        })
    }

    /// The learned table.
    pub fn table(&self) -> &HypercubeTable {
        &self.table
    }
}

impl Policy for HypercubePolicy {
    fn name(&self) -> &'static str {
        "hypercube"
    }

    fn decide(&mut self, obs: &Observation<'_>) -> Result<AssociationVector> {
        Ok(AssociationVector(
            obs.candidates
                .iter()
                .map(|cands| {
                    let mut best: Option<(ArmId, f64)> = None;
                    for c in cands {
                        let u = self.table.ucb(c);
                        if best.is_none_or(|(a, b)| u > b || (u == b && c.arm < a)) {
                            best = Some((c.arm, u));
                        }
                    }
                    best.map(|(a, _)| a)
                })
                .collect(),
        ))
    }

    fn feedback(
        &mut self,
        obs: &Observation<'_>,
        assoc: &AssociationVector,
        rewards: &[Option<f64>],
    ) -> Result<Vec<VehicleComm>> {
        for (i, cands) in obs.candidates.iter().enumerate() {
            if let (Some(arm), Some(r)) = (assoc.get(i), rewards[i]) {
                if let Some(c) = cands.iter().find(|c| c.arm == arm) {
                    self.table.update(c, r);
                }
            }
        }
        Ok(alloc::vec![VehicleComm::default(); obs.vehicles.len()])
    }
}

/// Worst-connection swapping run every period on the full snapshot.
#[derive(Debug, Clone, Copy)]
pub struct WcsPolicy {
    /// Iteration cap.
    pub max_iters: usize,
}

impl Policy for WcsPolicy {
    fn name(&self) -> &'static str {
        "wcs"
    }

    fn decide(&mut self, obs: &Observation<'_>) -> Result<AssociationVector> {
        Ok(wcs(obs.snapshot, self.max_iters).0)
    }
}

/// Enumeration guard for [`brute_force_optimum`]: vehicles.
pub const BRUTE_FORCE_MAX_VEHICLES: usize = 6;
/// Enumeration guard for [`brute_force_optimum`]: stations.
pub const BRUTE_FORCE_MAX_STATIONS: usize = 4;

/// Exact maximizer of the total rate over every assignment of vehicles to
/// their candidate stations. Ties keep the first assignment in
/// lexicographic order.
pub fn brute_force_optimum(snap: &RadioSnapshot) -> Result<(AssociationVector, f64)> {
    let n = snap.vehicles();
    if n > BRUTE_FORCE_MAX_VEHICLES || snap.stations() > BRUTE_FORCE_MAX_STATIONS {
        return Err(Error::InstanceTooLarge {
            vehicles: n,
            stations: snap.stations(),
        });
    }
    let mut assoc = AssociationVector(
        (0..n)
            .map(|i| snap.candidates(i).first().copied())
            .collect(),
    );
    let mut digits = alloc::vec![0usize; n];
    let mut best = (assoc.clone(), snap.total_rate(&assoc));
    loop {
        // odometer increment over candidate indices
        let mut i = 0;
        loop {
            if i == n {
                return Ok(best);
            }
            let c = snap.candidates(i);
            if c.is_empty() {
                i += 1;
                continue;
            }
            digits[i] += 1;
            if digits[i] < c.len() {
                assoc.0[i] = Some(c[digits[i]]);
                break;
            }
            digits[i] = 0;
            assoc.0[i] = Some(c[0]);
            i += 1;
        }
        let total = snap.total_rate(&assoc);
        if total > best.1 {
            best = (assoc.clone(), total);
        }
    }
}

/// Worst-connection swapping.
///
/// Starts from each vehicle's best station when alone on the network. Each
/// iteration visits vehicles from the lowest current rate upward and applies
/// the total-rate maximizing move for the first one that has a strictly
/// improving move (see `best_move`). Stops at a fixed point or after
/// `max_iters` moves. Returns the association and the number of moves made.
pub fn wcs(snap: &RadioSnapshot, max_iters: usize) -> (AssociationVector, usize) {
    let n = snap.vehicles();
    let silent = AssociationVector::silent(n);
    let init = AssociationVector(
        (0..n)
            .map(|i| snap.best_arm_rate(i, &silent).map(|(j, _)| j))
            .collect(),
    );
    wcs_from(snap, init, max_iters)
}

/// The swapping phase of [`wcs`] from an arbitrary starting association.
pub fn wcs_from(
    snap: &RadioSnapshot,
    mut assoc: AssociationVector,
    max_iters: usize,
) -> (AssociationVector, usize) {
    let n = snap.vehicles();
    let mut total = snap.total_rate(&assoc);
    let mut moves = 0;
    while moves < max_iters {
        let mut order: Vec<(usize, f64)> = (0..n)
            .filter_map(|i| assoc.get(i).map(|j| (i, snap.rate(i, j, &assoc))))
            .collect();
        order.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        let mut improved = false;
        for (i, _) in order {
            if let Some(t) = best_move(snap, &mut assoc, i, total) {
                total = t;
                improved = true;
                break;
            }
        }
        if !improved {
            break;
        }
        moves += 1;
    }
    (assoc, moves)
}

fn relabeled(assoc: &AssociationVector, a: ArmId, b: ArmId) -> AssociationVector {
    AssociationVector(
        assoc
            .0
            .iter()
            .map(|x| match *x {
                Some(j) if j == a => Some(b),
                Some(j) if j == b => Some(a),
                other => other,
            })
            .collect(),
    )
}

/// Applies the best strictly improving move involving vehicle `i` and
/// returns the new total. Moves: reassign `i`; reassign `i` together with
/// one other vehicle; exchange every vehicle on `i`'s station with every
/// vehicle on another station. Every vehicle stays on one of its candidates.
fn best_move(
    snap: &RadioSnapshot,
    assoc: &mut AssociationVector,
    i: usize,
    total: f64,
) -> Option<f64> {
    let current = assoc.0[i]?;
    let mut best: Option<(AssociationVector, f64)> = None;
    let mut offer = |cand: &AssociationVector, t: f64| {
        if t > total && best.as_ref().is_none_or(|(_, b)| t > *b) {
            best = Some((cand.clone(), t));
        }
    };
    let mut trial = assoc.clone();
    for &ji in snap.candidates(i) {
        trial.0[i] = Some(ji);
        if ji != current {
            offer(&trial, snap.total_rate(&trial));
        }
        for k in 0..trial.len() {
            let Some(ck) = assoc.0[k] else { continue };
            if k == i {
                continue;
            }
            for &jk in snap.candidates(k) {
                if jk == ck {
                    continue;
                }
                trial.0[k] = Some(jk);
                offer(&trial, snap.total_rate(&trial));
            }
            trial.0[k] = Some(ck);
        }
    }
    for other in 0..snap.stations() as ArmId {
        if other == current {
            continue;
        }
        let swapped = relabeled(assoc, current, other);
        let feasible = swapped
            .0
            .iter()
            .enumerate()
            .all(|(k, a)| a.is_none_or(|j| snap.candidates(k).contains(&j)));
        if feasible {
            offer(&swapped, snap.total_rate(&swapped));
        }
    }
    let (next, t) = best?;
    *assoc = next;
    Some(t)
}

/// Uniformly random candidate per vehicle.
pub fn random_association(snap: &RadioSnapshot, rng: &mut ChaCha8Rng) -> AssociationVector {
    AssociationVector(
        (0..snap.vehicles())
            .map(|i| {
                let c = snap.candidates(i);
                (!c.is_empty()).then(|| c[rng.random_range(0..c.len())])
            })
            .collect(),
    )
}
