//! Road geometry, vehicle mobility, task arrivals, and the per-slot
//! service-vehicle and resource-block assignments.
//!
//! Vehicle users and service vehicles (SVs) are two separate fleets driving
//! along a straight road segment on the y-axis. Positions wrap modulo the road
//! length so that density stays constant across slots.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ScenarioError {
    #[error("scenario needs at least one {0}")]
    Empty(&'static str),
    #[error("`{field}` must be {requirement}, got {value}")]
    Invalid {
        field: &'static str,
        requirement: &'static str,
        value: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Position {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Position {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn distance(&self, other: &Position) -> f64 {
        let (dx, dy, dz) = (self.x - other.x, self.y - other.y, self.z - other.z);
        (dx * dx + dy * dy + dz * dz).sqrt()
    }

    pub fn is_valid(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite() && self.z >= 0.0
    }
}

/// Link type of a vehicle user. Every vehicle owns one V2I link (to the RSU)
/// and one V2V link (to its service vehicle).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LinkKind {
    V2i,
    V2v,
}

impl LinkKind {
    pub const ALL: [LinkKind; 2] = [LinkKind::V2i, LinkKind::V2v];

    pub fn offset(self) -> usize {
        match self {
            LinkKind::V2i => 0,
            LinkKind::V2v => 1,
        }
    }
}

/// Flat link index in `(vehicle, link kind)` order.
pub fn link_index(vehicle: usize, kind: LinkKind) -> usize {
    2 * vehicle + kind.offset()
}

/// Inverse of [`link_index`].
pub fn link_of(index: usize) -> (usize, LinkKind) {
    let kind = if index.is_multiple_of(2) {
        LinkKind::V2i
    } else {
        LinkKind::V2v
    };
    (index / 2, kind)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    /// Vehicle users (K).
    pub num_vehicles: usize,
    /// Service vehicles (J).
    pub num_service_vehicles: usize,
    /// Orthogonal resource blocks (B).
    pub num_rbs: usize,
    /// Slot duration in seconds.
    pub slot_duration: f64,
    /// Vehicle speed in m/s.
    pub speed: f64,
    pub road_length: f64,
    pub lane_offsets: Vec<f64>,
    pub rsu_pos: Position,
    pub ris_pos: Position,
    /// Size of one task unit in bits (D_k).
    pub task_unit_bits: f64,
    /// Mean Poisson count of task units per vehicle per slot.
    pub arrival_mean: f64,
    /// Service threshold U_max. `None` resolves to `ceil(K / J)`.
    pub max_served: Option<usize>,
    pub seed: u64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            num_vehicles: 15,
            num_service_vehicles: 5,
            num_rbs: 10,
            slot_duration: 1.0,
            speed: 20.0,
            road_length: 300.0,
            lane_offsets: vec![0.0, 4.0],
            rsu_pos: Position::new(-10.0, 150.0, 25.0),
            ris_pos: Position::new(10.0, 175.0, 25.0),
            task_unit_bits: 4.0e5,
            arrival_mean: 1.0,
            max_served: None,
            seed: 0,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.num_vehicles == 0 {
            return Err(ScenarioError::Empty("vehicle"));
        }
        if self.num_service_vehicles == 0 {
            return Err(ScenarioError::Empty("service vehicle"));
        }
        if self.num_rbs == 0 {
            return Err(ScenarioError::Empty("resource block"));
        }
        if self.lane_offsets.is_empty() {
            return Err(ScenarioError::Empty("lane"));
        }
        if self.max_served == Some(0) {
            return Err(ScenarioError::Invalid {
                field: "max_served",
                requirement: "at least 1",
                value: 0.0,
            });
        }
        let positive = [
            ("road_length", self.road_length),
            ("slot_duration", self.slot_duration),
            ("speed", self.speed),
            ("task_unit_bits", self.task_unit_bits),
        ];
        for (field, value) in positive {
            if !(value > 0.0 && value.is_finite()) {
                return Err(ScenarioError::Invalid {
                    field,
                    requirement: "positive and finite",
                    value,
                });
            }
        }
        if !(self.arrival_mean >= 0.0 && self.arrival_mean.is_finite()) {
            return Err(ScenarioError::Invalid {
                field: "arrival_mean",
                requirement: "non-negative and finite",
                value: self.arrival_mean,
            });
        }
        for (field, pos) in [("rsu_pos", self.rsu_pos), ("ris_pos", self.ris_pos)] {
            if !pos.is_valid() {
                return Err(ScenarioError::Invalid {
                    field,
                    requirement: "finite with z >= 0",
                    value: pos.z,
                });
            }
        }
        Ok(())
    }

    /// Resolved service threshold U_max.
    pub fn service_capacity(&self) -> usize {
        self.max_served.unwrap_or_else(|| {
            self.num_vehicles.div_ceil(self.num_service_vehicles).max(1)
        })
    }

    pub fn num_links(&self) -> usize {
        2 * self.num_vehicles
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioState {
    pub vehicles: Vec<Position>,
    pub service_vehicles: Vec<Position>,
    pub rsu: Position,
    pub ris: Position,
    /// Task bits generated by each vehicle user this slot.
    pub task_bits: Vec<f64>,
    /// Serving SV of each vehicle user.
    pub sv_of: Vec<usize>,
    /// Resource block of each link, indexed by [`link_index`].
    pub rb_of: Vec<usize>,
    pub slot_index: u64,
    /// Set when every SV was saturated and round-robin overflow was applied.
    pub overflow: bool,
}

impl ScenarioState {
    /// Places vehicles uniformly on the road. Deterministic in `cfg.seed`.
    pub fn new(cfg: &ScenarioConfig) -> Result<Self, ScenarioError> {
        cfg.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let lanes = &cfg.lane_offsets;
        let mut place = |i: usize| {
            let y = rng.random_range(0.0..cfg.road_length);
            Position::new(lanes[i % lanes.len()], y, 0.0)
        };
        let vehicles: Vec<_> = (0..cfg.num_vehicles).map(&mut place).collect();
        let service_vehicles: Vec<_> = (0..cfg.num_service_vehicles).map(&mut place).collect();
        Ok(Self {
            vehicles,
            service_vehicles,
            rsu: cfg.rsu_pos,
            ris: cfg.ris_pos,
            task_bits: vec![0.0; cfg.num_vehicles],
            sv_of: vec![0; cfg.num_vehicles],
            rb_of: vec![0; cfg.num_links()],
            slot_index: 0,
            overflow: false,
        })
    }

    /// Moves every vehicle forward by `speed * slot_duration`, wrapping at the
    /// end of the road.
    pub fn advance(&mut self, cfg: &ScenarioConfig) {
        let step = cfg.speed * cfg.slot_duration;
        for p in self.vehicles.iter_mut().chain(self.service_vehicles.iter_mut()) {
            p.y = wrap(p.y + step, cfg.road_length);
        }
        self.slot_index += 1;
    }

    /// Draws a Poisson count of fixed-size task units for every vehicle user.
    pub fn draw_tasks<R: Rng + ?Sized>(&mut self, cfg: &ScenarioConfig, rng: &mut R) {
        let poisson = (cfg.arrival_mean > 0.0)
            .then(|| Poisson::new(cfg.arrival_mean).expect("validated rate"));
        for bits in self.task_bits.iter_mut() {
            let units = poisson.as_ref().map_or(0.0, |p| p.sample(rng));
            *bits = units * cfg.task_unit_bits;
        }
    }

    /// Nearest-SV assignment with the U_max service threshold.
    ///
    /// Overloaded SVs keep their closest requesters and shed the rest, in
    /// order of increasing distance, to the next-nearest SV with spare
    /// capacity. When no SV has capacity left, shed vehicles are spread
    /// round-robin and `overflow` is set.
    pub fn assign_service_vehicles(&mut self, cfg: &ScenarioConfig) {
        let capacity = cfg.service_capacity();
        let num_sv = self.service_vehicles.len();
        let prefs: Vec<Vec<usize>> = self
            .vehicles
            .iter()
            .map(|v| {
                let mut order: Vec<usize> = (0..num_sv).collect();
                order.sort_by(|&a, &b| {
                    let (da, db) = (
                        v.distance(&self.service_vehicles[a]),
                        v.distance(&self.service_vehicles[b]),
                    );
                    da.total_cmp(&db).then(a.cmp(&b))
                });
                order
            })
            .collect();

        let mut members: Vec<Vec<usize>> = vec![Vec::new(); num_sv];
        for (k, order) in prefs.iter().enumerate() {
            members[order[0]].push(k);
        }

        let mut shed = Vec::new();
        for (j, list) in members.iter_mut().enumerate() {
            if list.len() > capacity {
                let sv = self.service_vehicles[j];
                list.sort_by(|&a, &b| {
                    self.vehicles[a]
                        .distance(&sv)
                        .total_cmp(&self.vehicles[b].distance(&sv))
                        .then(a.cmp(&b))
                });
                for k in list.drain(capacity..) {
                    shed.push((self.vehicles[k].distance(&sv), k));
                }
            }
        }
        shed.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

        self.overflow = false;
        let mut spill = 0usize;
        for (_, k) in shed {
            match prefs[k].iter().find(|&&j| members[j].len() < capacity) {
                Some(&j) => members[j].push(k),
                None => {
                    self.overflow = true;
                    members[spill % num_sv].push(k);
                    spill += 1;
                }
            }
        }
        for (j, list) in members.iter().enumerate() {
            for &k in list {
                self.sv_of[k] = j;
            }
        }
    }

    /// Round-robin RB assignment over links in `(vehicle, link kind)` order.
    pub fn assign_resource_blocks(&mut self, cfg: &ScenarioConfig) {
        for (i, rb) in self.rb_of.iter_mut().enumerate() {
            *rb = i % cfg.num_rbs;
        }
    }

    /// Vehicle users currently assigned to each SV (U_j).
    pub fn sv_load(&self) -> Vec<usize> {
        let mut load = vec![0; self.service_vehicles.len()];
        for &j in &self.sv_of {
            load[j] += 1;
        }
        load
    }

    pub fn is_active(&self, vehicle: usize) -> bool {
        self.task_bits[vehicle] > 0.0
    }
}

fn wrap(y: f64, length: f64) -> f64 {
    let w = y.rem_euclid(length);
    // rem_euclid can round up to `length` for tiny negative inputs
    if w >= length {
        0.0
    } else {
        w
    }
}
