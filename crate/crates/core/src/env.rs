//! Discrete-time vehicular world: Poisson arrivals on road polylines, a
//! simplified mmWave channel, uplink interference and Shannon rates.
//!
//! Channel model per (vehicle, base station) link:
//!
//! ```text
//! |h|² = G · PL(d) · B · |g|²
//! PL(d) = (λ_f / (4π d₀))² · (d / d₀)^(−n)      n = n_LOS or n_NLOS
//! ```
//!
//! `B` is 1 when the segment vehicle–BS crosses no obstacle and the NLOS
//! penalty otherwise. `g` is Rician (LOS) or Rayleigh (NLOS) whose scattered
//! part follows a first-order autoregression with correlation
//! `ρ = exp(−c · f_D · Δt)`. Beamforming is collapsed into scalar gains: the
//! desired link gets the mainlobe gain `G`; an interferer is scaled by the
//! sidelobe factor once if its own beam points at another station and once
//! more if it falls outside the receive beam of the serving station.
//! Interference is a power sum.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};

use crate::agent::{context_for, VehicleId};
use crate::context::{angle_between, ArmId, Context};
use crate::error::{Error, Result};
use crate::geometry::{line_of_sight, Point, Polyline, Rect};
use crate::math;

/// Speed of light, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// A base station. Ids are indices into the station list.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BaseStation {
    /// Arm identifier.
    pub id: ArmId,
    /// Position, meters.
    pub pos: Point,
}

/// Stations, roads and obstacles.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MapGeometry {
    /// Base stations; `stations[j].id == j`.
    pub stations: Vec<BaseStation>,
    /// Roads, each driven in both directions.
    pub roads: Vec<Polyline>,
    /// Buildings.
    pub obstacles: Vec<Rect>,
}

impl MapGeometry {
    /// A 1 km square with a 2×2 Manhattan road grid (roads at 250 m and
    /// 750 m in each direction), four stations near the central block and
    /// six buildings.
    pub fn default_grid() -> Self {
        let p = Point::new;
        let road =
            |a: Point, b: Point| Polyline::new(alloc::vec![a, b]).expect("non-degenerate road");
        let stations = [
            p(500.0, 265.0),
            p(735.0, 500.0),
            p(500.0, 735.0),
            p(265.0, 500.0),
        ]
        .into_iter()
        .enumerate()
        .map(|(i, pos)| BaseStation {
            id: i as ArmId,
            pos,
        })
        .collect();
        let roads = alloc::vec![
            road(p(0.0, 250.0), p(1000.0, 250.0)),
            road(p(0.0, 750.0), p(1000.0, 750.0)),
            road(p(250.0, 0.0), p(250.0, 1000.0)),
            road(p(750.0, 0.0), p(750.0, 1000.0)),
        ];
        let obstacles = [
            (300.0, 300.0, 440.0, 440.0),
            (560.0, 560.0, 700.0, 700.0),
            (560.0, 300.0, 700.0, 440.0),
            (40.0, 560.0, 200.0, 700.0),
            (800.0, 40.0, 960.0, 200.0),
            (300.0, 800.0, 440.0, 960.0),
        ]
        .into_iter()
        .map(|(a, b, c, d)| Rect::new(p(a, b), p(c, d)))
        .collect();
        MapGeometry {
            stations,
            roads,
            obstacles,
        }
    }

    /// Checks ids and that there is something to drive on.
    pub fn validate(&self) -> Result<()> {
        if self.stations.is_empty() {
            return Err(Error::config(
                "map.stations",
                "at least one base station required",
            ));
        }
        if self
            .stations
            .iter()
            .enumerate()
            .any(|(i, s)| s.id as usize != i)
        {
            return Err(Error::config("map.stations", "ids must be 0..n in order"));
        }
        if self.roads.is_empty() {
            return Err(Error::config("map.roads", "at least one road required"));
        }
        Ok(())
    }

    /// Every road in both directions.
    pub fn routes(&self) -> Vec<Polyline> {
        self.roads
            .iter()
            .flat_map(|r| [r.clone(), r.reversed()])
            .collect()
    }
}

/// Radio parameters. All powers linear (W, W/Hz); gains linear.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ChannelConfig {
    /// Carrier wavelength `λ_f`, meters.
    pub wavelength: f64,
    /// Bandwidth `W`, Hz.
    pub bandwidth: f64,
    /// Vehicle transmit power `P_v`, W.
    pub tx_power: f64,
    /// Thermal noise density `N_o`, W/Hz.
    pub noise_density: f64,
    /// Reference distance `d₀`, meters.
    pub ref_distance: f64,
    /// Path-loss exponent with line of sight.
    pub exponent_los: f64,
    /// Path-loss exponent without line of sight.
    pub exponent_nlos: f64,
    /// Extra loss when blocked, linear (≤ 1).
    pub nlos_penalty: f64,
    /// Rician K-factor, linear.
    pub rician_k: f64,
    /// Combined transmit/receive mainlobe gain, linear.
    pub mainlobe_gain: f64,
    /// Sidelobe factor relative to the mainlobe, linear (≤ 1).
    pub sidelobe: f64,
    /// Half-width of the station's receive beam, radians.
    pub rx_half_beamwidth: f64,
    /// `c` in the fading correlation `exp(−c f_D Δt)`.
    pub doppler_corr: f64,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        ChannelConfig {
            wavelength: SPEED_OF_LIGHT / 28e9,
            bandwidth: 100e6,
            tx_power: 1.0,
            noise_density: math::db_to_linear(-174.0) * 1e-3,
            ref_distance: 1.0,
            exponent_los: 2.0,
            exponent_nlos: 3.3,
            nlos_penalty: math::db_to_linear(-20.0),
            rician_k: math::db_to_linear(10.0),
            mainlobe_gain: math::db_to_linear(30.0),
            sidelobe: math::db_to_linear(-20.0),
            rx_half_beamwidth: 10f64.to_radians(),
            doppler_corr: 1.0,
        }
    }
}

impl ChannelConfig {
    /// Range checks.
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("channel.wavelength", self.wavelength),
            ("channel.bandwidth", self.bandwidth),
            ("channel.tx_power", self.tx_power),
            ("channel.noise_density", self.noise_density),
            ("channel.ref_distance", self.ref_distance),
            ("channel.exponent_los", self.exponent_los),
            ("channel.exponent_nlos", self.exponent_nlos),
            ("channel.mainlobe_gain", self.mainlobe_gain),
        ];
        for (field, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::config(field, "must be finite and > 0"));
            }
        }
        for (field, v) in [
            ("channel.nlos_penalty", self.nlos_penalty),
            ("channel.sidelobe", self.sidelobe),
        ] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::config(field, "must lie in (0, 1]"));
            }
        }
        if !(self.rician_k.is_finite() && self.rician_k >= 0.0) {
            return Err(Error::config("channel.rician_k", "must be finite and >= 0"));
        }
        if !(self.doppler_corr.is_finite() && self.doppler_corr >= 0.0) {
            return Err(Error::config(
                "channel.doppler_corr",
                "must be finite and >= 0",
            ));
        }
        if !(self.rx_half_beamwidth >= 0.0 && self.rx_half_beamwidth <= math::PI) {
            return Err(Error::config(
                "channel.rx_half_beamwidth",
                "must lie in [0, π]",
            ));
        }
        Ok(())
    }

    /// Large-scale power gain `PL(d) · B` (no beam gain, no fading).
    pub fn large_scale_gain(&self, d: f64, los: bool) -> f64 {
        let d = d.max(self.ref_distance);
        let free = self.wavelength / (4.0 * math::PI * self.ref_distance);
        let n = if los {
            self.exponent_los
        } else {
            self.exponent_nlos
        };
        let pl = free * free * math::pow(d / self.ref_distance, -n);
        if los {
            pl
        } else {
            pl * self.nlos_penalty
        }
    }

    /// Thermal noise power `N_o W`.
    pub fn noise_power(&self) -> f64 {
        self.noise_density * self.bandwidth
    }

    /// `W log₂(1 + sinr)`.
    pub fn shannon_rate(&self, sinr: f64) -> f64 {
        self.bandwidth * math::log2(1.0 + sinr.max(0.0))
    }
}

/// Whole-world configuration.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct WorldConfig {
    /// Period length `Δt`, seconds.
    pub period_s: f64,
    /// Mean vehicle arrivals per period.
    pub arrival_rate: f64,
    /// Minimum speed, km/h.
    pub speed_min_kmh: f64,
    /// Maximum speed, km/h.
    pub speed_max_kmh: f64,
    /// Radio parameters.
    pub channel: ChannelConfig,
    /// Map.
    pub map: MapGeometry,
    /// Mobility-only periods simulated before period 0 so that traffic
    /// starts near its stationary level.
    pub warmup_periods: u32,
}

impl Default for WorldConfig {
    fn default() -> Self {
        WorldConfig {
            period_s: 1.0,
            arrival_rate: 0.3,
            speed_min_kmh: 20.0,
            speed_max_kmh: 80.0,
            channel: ChannelConfig::default(),
            map: MapGeometry::default_grid(),
            warmup_periods: 0,
        }
    }
}

impl WorldConfig {
    /// Range checks over every field.
    pub fn validate(&self) -> Result<()> {
        if !(self.period_s.is_finite() && self.period_s > 0.0) {
            return Err(Error::config("world.period_s", "must be finite and > 0"));
        }
        if !(self.arrival_rate.is_finite() && self.arrival_rate >= 0.0) {
            return Err(Error::config(
                "world.arrival_rate",
                "must be finite and >= 0",
            ));
        }
        if !(self.speed_min_kmh > 0.0
            && self.speed_min_kmh <= self.speed_max_kmh
            && self.speed_max_kmh.is_finite())
        {
            return Err(Error::config("world.speed_kmh", "need 0 < min <= max"));
        }
        self.channel.validate()?;
        self.map.validate()
    }
}

/// Complex small-scale fading with an AR(1) scattered component.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Fading {
    /// Real part of the unit-power scattered component.
    pub re: f64,
    /// Imaginary part.
    pub im: f64,
}

impl Fading {
    /// Stationary draw from CN(0, 1).
    pub fn draw(rng: &mut ChaCha8Rng) -> Self {
        let (re, im) = cn01(rng);
        Fading { re, im }
    }

    /// `s ← ρ s + sqrt(1 − ρ²) w`, `w ~ CN(0, 1)`.
    pub fn step(&mut self, rho: f64, rng: &mut ChaCha8Rng) {
        let (wr, wi) = cn01(rng);
        let innov = math::sqrt((1.0 - rho * rho).max(0.0));
        self.re = rho * self.re + innov * wr;
        self.im = rho * self.im + innov * wi;
    }

    /// `|g|²`: Rician with factor `k` under line of sight, Rayleigh otherwise.
    pub fn power(&self, los: bool, k: f64) -> f64 {
        if los {
            let spec = math::sqrt(k / (k + 1.0));
            let scat = math::sqrt(1.0 / (k + 1.0));
            let re = spec + scat * self.re;
            let im = scat * self.im;
            re * re + im * im
        } else {
            self.re * self.re + self.im * self.im
        }
    }
}

fn cn01(rng: &mut ChaCha8Rng) -> (f64, f64) {
    let s = core::f64::consts::FRAC_1_SQRT_2;
    let a: f64 = StandardNormal.sample(rng);
    let b: f64 = StandardNormal.sample(rng);
    (a * s, b * s)
}

/// Correlation between consecutive fading samples.
pub fn fading_correlation(c: f64, doppler: f64, period_s: f64) -> f64 {
    math::exp(-c * doppler * period_s)
}

/// State of one (vehicle, station) link in the current period.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkState {
    /// Line of sight.
    pub los: bool,
    /// `PL(d) · B`.
    pub large_scale: f64,
    /// Small-scale fading.
    pub fading: Fading,
    /// `|g|²` this period.
    pub fading_power: f64,
}

/// A vehicle on the map.
#[derive(Debug, Clone, PartialEq)]
pub struct VehicleState {
    /// Identifier, unique over the run.
    pub id: VehicleId,
    /// Index into the route list.
    pub route: usize,
    /// Arc length travelled along the route, meters.
    pub travelled: f64,
    /// Speed, m/s.
    pub speed: f64,
    /// Position, meters.
    pub pos: Point,
    /// Velocity, m/s.
    pub vel: Point,
    /// Concurrent transmissions seen at each station during the last period
    /// this vehicle used it.
    pub n_tx: BTreeMap<ArmId, u32>,
    /// One entry per station, `None` until the first channel update.
    pub links: Vec<Option<LinkState>>,
}

/// Assignment of the present vehicles (by index in the world's vehicle
/// list) to base stations. `None` means the vehicle has no station in range
/// and stays silent.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AssociationVector(pub Vec<Option<ArmId>>);

impl AssociationVector {
    /// All vehicles silent.
    pub fn silent(n: usize) -> Self {
        AssociationVector(alloc::vec![None; n])
    }

    /// Station of vehicle `i`.
    pub fn get(&self, i: usize) -> Option<ArmId> {
        self.0.get(i).copied().flatten()
    }

    /// Number of vehicles covered.
    pub fn len(&self) -> usize {
        self.0.len()
    }

    /// True when it covers no vehicle.
    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Vehicles served by each station.
    pub fn loads(&self, stations: usize) -> Vec<u32> {
        let mut loads = alloc::vec![0; stations];
        for a in self.0.iter().flatten() {
            loads[*a as usize] += 1;
        }
        loads
    }
}

/// Everything needed to evaluate rates for any association: positions,
/// per-link received powers before beam gains, and the beam model.
#[derive(Debug, Clone, PartialEq)]
pub struct RadioSnapshot {
    channel: ChannelConfig,
    stations: Vec<BaseStation>,
    positions: Vec<Point>,
    /// `rx[i * n_bs + j] = P_v · PL · B · |g|²` for vehicle `i`, station `j`.
    rx: Vec<f64>,
    /// Bearing of vehicle `i` from station `j`, same layout.
    bearing: Vec<f64>,
    /// Candidate stations of each vehicle.
    candidates: Vec<Vec<ArmId>>,
}

impl RadioSnapshot {
    /// Builds a snapshot from explicit positions and per-link received
    /// powers (`rx[i][j]`, W, before beam gains).
    pub fn new(
        channel: ChannelConfig,
        stations: Vec<BaseStation>,
        positions: Vec<Point>,
        rx: Vec<Vec<f64>>,
        r_max: f64,
    ) -> Self {
        let n_bs = stations.len();
        let mut flat = Vec::with_capacity(positions.len() * n_bs);
        let mut bearing = Vec::with_capacity(positions.len() * n_bs);
        let mut candidates = Vec::with_capacity(positions.len());
        for (i, p) in positions.iter().enumerate() {
            assert_eq!(rx[i].len(), n_bs);
            flat.extend_from_slice(&rx[i]);
            let mut cand = Vec::new();
            for bs in &stations {
                let rel = *p - bs.pos;
                bearing.push(math::atan2(rel.y, rel.x));
                if bs.pos.dist(*p) <= r_max {
                    cand.push(bs.id);
                }
            }
            candidates.push(cand);
        }
        RadioSnapshot {
            channel,
            stations,
            positions,
            rx: flat,
            bearing,
            candidates,
        }
    }

    /// Random snapshot: `positions` with fresh links drawn from `rng`.
    pub fn sample(
        channel: ChannelConfig,
        stations: Vec<BaseStation>,
        obstacles: &[Rect],
        positions: Vec<Point>,
        r_max: f64,
        rng: &mut ChaCha8Rng,
    ) -> Self {
        let rx = positions
            .iter()
            .map(|p| {
                stations
                    .iter()
                    .map(|bs| {
                        let los = line_of_sight(*p, bs.pos, obstacles);
                        let g = Fading::draw(rng).power(los, channel.rician_k);
                        channel.tx_power * channel.large_scale_gain(p.dist(bs.pos), los) * g
                    })
                    .collect()
            })
            .collect();
        RadioSnapshot::new(channel, stations, positions, rx, r_max)
    }

    /// Number of vehicles.
    pub fn vehicles(&self) -> usize {
        self.positions.len()
    }

    /// Number of stations.
    pub fn stations(&self) -> usize {
        self.stations.len()
    }

    /// Candidate stations of vehicle `i`.
    pub fn candidates(&self, i: usize) -> &[ArmId] {
        &self.candidates[i]
    }

    /// Radio parameters.
    pub fn channel(&self) -> &ChannelConfig {
        &self.channel
    }

    /// Received power of `i` at `j` before beam gains.
    pub fn received(&self, i: usize, j: ArmId) -> f64 {
        self.rx[i * self.stations.len() + j as usize]
    }

    /// Desired-signal power `P_v |h_ij|²` with the mainlobe gain.
    pub fn signal(&self, i: usize, j: ArmId) -> f64 {
        self.channel.mainlobe_gain * self.received(i, j)
    }

    fn in_rx_beam(&self, j: ArmId, i: usize, k: usize) -> bool {
        let n = self.stations.len();
        let a = self.bearing[i * n + j as usize];
        let b = self.bearing[k * n + j as usize];
        angle_between(a, b) <= self.channel.rx_half_beamwidth
    }

    /// Power of interferer `k` (transmitting toward `l`) at station `j`
    /// while `j` points its receive beam at `i`.
    pub fn interference_term(&self, j: ArmId, i: usize, k: usize, l: ArmId) -> f64 {
        let mut g = self.channel.mainlobe_gain;
        if l != j {
            g *= self.channel.sidelobe;
        }
        if !self.in_rx_beam(j, i, k) {
            g *= self.channel.sidelobe;
        }
        g * self.received(k, j)
    }

    /// Interference plus noise at station `j` while serving vehicle `i`,
    /// summing every other transmitting vehicle in `assoc`.
    pub fn interference(&self, j: ArmId, i: usize, assoc: &AssociationVector) -> f64 {
        let mut total = 0.0;
        for (k, l) in assoc.0.iter().enumerate() {
            if k == i {
                continue;
            }
            if let Some(l) = l {
                total += self.interference_term(j, i, k, *l);
            }
        }
        total + self.channel.noise_power()
    }

    /// Rate of vehicle `i` on station `j` given the other vehicles'
    /// associations in `assoc` (the entry for `i` itself is ignored).
    pub fn rate(&self, i: usize, j: ArmId, assoc: &AssociationVector) -> f64 {
        let sinr = self.signal(i, j) / self.interference(j, i, assoc);
        self.channel.shannon_rate(sinr)
    }

    /// Best candidate station for `i` holding the others fixed, and its rate.
    /// `None` when `i` has no candidate.
    pub fn best_arm_rate(&self, i: usize, assoc: &AssociationVector) -> Option<(ArmId, f64)> {
        let mut best: Option<(ArmId, f64)> = None;
        for &j in &self.candidates[i] {
            let r = self.rate(i, j, assoc);
            if best.is_none_or(|(_, b)| r > b) {
                best = Some((j, r));
            }
        }
        best
    }

    /// Sum of the rates of every associated vehicle.
    pub fn total_rate(&self, assoc: &AssociationVector) -> f64 {
        assoc
            .0
            .iter()
            .enumerate()
            .filter_map(|(i, a)| a.map(|j| self.rate(i, j, assoc)))
            .sum()
    }
}

/// The simulated world.
#[derive(Debug, Clone)]
pub struct World {
    cfg: WorldConfig,
    routes: Vec<Polyline>,
    vehicles: Vec<VehicleState>,
    next_id: VehicleId,
    mobility_rng: ChaCha8Rng,
    fading_rng: ChaCha8Rng,
    arrivals: Option<Poisson<f64>>,
    period: u32,
}

impl World {
    /// New empty world. `mobility_rng` and `fading_rng` should be independent
    /// streams so that policies never perturb the traces.
    pub fn new(cfg: WorldConfig, mobility_rng: ChaCha8Rng, fading_rng: ChaCha8Rng) -> Result<Self> {
        cfg.validate()?;
        let arrivals = if cfg.arrival_rate > 0.0 {
            Some(
                Poisson::new(cfg.arrival_rate)
                    .map_err(|_| Error::config("world.arrival_rate", "invalid Poisson mean"))?,
            )
        } else {
            None
        };
        let routes = cfg.map.routes();
        let mut world = World {
            cfg,
            routes,
            vehicles: Vec::new(),
            next_id: 0,
            mobility_rng,
            fading_rng,
            arrivals,
            period: 0,
        };
        for _ in 0..world.cfg.warmup_periods {
            world.step_mobility();
        }
        Ok(world)
    }

    /// Configuration.
    pub fn config(&self) -> &WorldConfig {
        &self.cfg
    }

    /// Vehicles currently on the map, in arrival order.
    pub fn vehicles(&self) -> &[VehicleState] {
        &self.vehicles
    }

    /// Stations.
    pub fn stations(&self) -> &[BaseStation] {
        &self.cfg.map.stations
    }

    /// Periods stepped so far (warm-up included).
    pub fn period(&self) -> u32 {
        self.period
    }

    /// Places a vehicle at the start of `route` with `speed` (m/s).
    /// Returns its id.
    pub fn spawn(&mut self, route: usize, speed: f64) -> VehicleId {
        let id = self.next_id;
        self.next_id += 1;
        let r = &self.routes[route];
        let heading = r.heading_at(0.0);
        self.vehicles.push(VehicleState {
            id,
            route,
            travelled: 0.0,
            speed,
            pos: r.point_at(0.0),
            vel: Point::new(heading.x * speed, heading.y * speed),
            n_tx: BTreeMap::new(),
            links: alloc::vec![None; self.cfg.map.stations.len()],
        });
        id
    }

    /// Advances every vehicle by `v Δt`, removes those past the end of their
    /// route, then adds `Poisson(λ)` arrivals at route starts. Returns the
    /// ids that left.
    pub fn step_mobility(&mut self) -> Vec<VehicleId> {
        let dt = self.cfg.period_s;
        let mut left = Vec::new();
        let routes = &self.routes;
        self.vehicles.retain_mut(|v| {
            v.travelled += v.speed * dt;
            let r = &routes[v.route];
            if v.travelled > r.length() {
                left.push(v.id);
                return false;
            }
            v.pos = r.point_at(v.travelled);
            let h = r.heading_at(v.travelled);
            v.vel = Point::new(h.x * v.speed, h.y * v.speed);
            true
        });
        let arrivals = match &self.arrivals {
            Some(p) => p.sample(&mut self.mobility_rng) as u64,
            None => 0,
        };
        for _ in 0..arrivals {
            let route = self.mobility_rng.random_range(0..self.routes.len());
            let kmh = if self.cfg.speed_max_kmh > self.cfg.speed_min_kmh {
                self.mobility_rng
                    .random_range(self.cfg.speed_min_kmh..=self.cfg.speed_max_kmh)
            } else {
                self.cfg.speed_min_kmh
            };
            self.spawn(route, kmh / 3.6);
        }
        self.period += 1;
        left
    }

    /// Recomputes line of sight and path loss and advances the fading of
    /// every (vehicle, station) link.
    pub fn update_links(&mut self) {
        let ch = self.cfg.channel;
        let dt = self.cfg.period_s;
        let obstacles = &self.cfg.map.obstacles;
        for v in &mut self.vehicles {
            for (j, bs) in self.cfg.map.stations.iter().enumerate() {
                let los = line_of_sight(v.pos, bs.pos, obstacles);
                let large_scale = ch.large_scale_gain(v.pos.dist(bs.pos), los);
                let fading = match v.links[j] {
                    None => Fading::draw(&mut self.fading_rng),
                    Some(prev) => {
                        let doppler = context_for(v.pos, v.vel, bs, ch.wavelength, 0).doppler;
                        let mut f = prev.fading;
                        f.step(
                            fading_correlation(ch.doppler_corr, doppler, dt),
                            &mut self.fading_rng,
                        );
                        f
                    }
                };
                v.links[j] = Some(LinkState {
                    los,
                    large_scale,
                    fading,
                    fading_power: fading.power(los, ch.rician_k),
                });
            }
        }
    }

    /// Context of vehicle `i` (index) toward station `a`.
    pub fn extract_context(&self, i: usize, a: ArmId) -> Context {
        let v = &self.vehicles[i];
        let bs = &self.cfg.map.stations[a as usize];
        context_for(
            v.pos,
            v.vel,
            bs,
            self.cfg.channel.wavelength,
            v.n_tx.get(&a).copied().unwrap_or(0),
        )
    }

    /// Candidate contexts of every vehicle (stations within `r_max`).
    pub fn candidate_contexts(&self, r_max: f64) -> Vec<Vec<Context>> {
        self.vehicles
            .iter()
            .map(|v| {
                crate::agent::candidate_set(
                    v.pos,
                    v.vel,
                    &self.cfg.map.stations,
                    r_max,
                    self.cfg.channel.wavelength,
                    &v.n_tx,
                )
            })
            .collect()
    }

    /// Frozen radio state of the current period.
    ///
    /// # Panics
    /// If [`World::update_links`] has not run since the last arrival.
    pub fn snapshot(&self, r_max: f64) -> RadioSnapshot {
        let ch = self.cfg.channel;
        let rx = self
            .vehicles
            .iter()
            .map(|v| {
                v.links
                    .iter()
                    .map(|l| {
                        let l = l.expect("links updated before snapshot");
                        ch.tx_power * l.large_scale * l.fading_power
                    })
                    .collect()
            })
            .collect();
        RadioSnapshot::new(
            ch,
            self.cfg.map.stations.clone(),
            self.vehicles.iter().map(|v| v.pos).collect(),
            rx,
            r_max,
        )
    }

    /// Stores this period's station loads as every served vehicle's
    /// remembered concurrent-transmission count.
    pub fn commit_loads(&mut self, assoc: &AssociationVector) {
        let loads = assoc.loads(self.cfg.map.stations.len());
        for (v, a) in self.vehicles.iter_mut().zip(&assoc.0) {
            if let Some(a) = a {
                v.n_tx.insert(*a, loads[*a as usize]);
            }
        }
    }
}
