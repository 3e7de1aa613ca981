//! Places and the central reservation step.
//!
//! A place is `width` contiguous cores starting at a leader that is a
//! multiple of `width`, inside one cluster. Reservations are counted per core
//! rather than held exclusively: a place that overlaps an earlier one is
//! still handed out, and its TAO simply waits in the member cores' assembly
//! queues behind the earlier work. The counts feed the idle-slack estimate
//! used by load-based molding.

use alloc::vec::Vec;
use core::ops::Range;

use crate::machine::MachineModel;
use crate::ptt::leader_core;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Place {
    pub leader: usize,
    pub width: usize,
}

impl Place {
    pub fn member_cores(&self) -> Range<usize> {
        self.leader..self.leader + self.width
    }

    pub fn contains(&self, core: usize) -> bool {
        self.member_cores().contains(&core)
    }
}

#[derive(Clone, Debug)]
pub struct PlaceAllocator {
    reservations: Vec<u32>,
    clusters: Vec<Range<usize>>,
}

impl PlaceAllocator {
    pub fn new(model: &MachineModel) -> Self {
        Self {
            reservations: alloc::vec![0; model.n_cores()],
            clusters: model.clusters.iter().map(|c| c.cores()).collect(),
        }
    }

    fn cluster_range(&self, core: usize) -> Result<&Range<usize>> {
        self.clusters
            .iter()
            .find(|r| r.contains(&core))
            .ok_or(Error::UnknownCore(core))
    }

    /// Reserves the place of `width` cores that contains `target_core`.
    pub fn allocate_place(&mut self, width: usize, target_core: usize) -> Result<Place> {
        let cluster = self.cluster_range(target_core)?;
        let leader = leader_core(target_core, width)?;
        let place = Place { leader, width };
        if leader < cluster.start || place.member_cores().end > cluster.end {
            return Err(Error::PlaceOutOfCluster { leader, width });
        }
        for c in place.member_cores() {
            self.reservations[c] += 1;
        }
        Ok(place)
    }

    pub fn release(&mut self, place: &Place) {
        for c in place.member_cores() {
            debug_assert!(self.reservations[c] > 0, "release without reservation on core {c}");
            self.reservations[c] = self.reservations[c].saturating_sub(1);
        }
    }

    pub fn reservations(&self, core: usize) -> u32 {
        self.reservations[core]
    }

    /// Unreserved cores in the cluster of `core`.
    pub fn idle_in_cluster_of(&self, core: usize) -> usize {
        self.cluster_range(core)
            .map(|r| r.clone().filter(|&c| self.reservations[c] == 0).count())
            .unwrap_or(0)
    }
}
