//! Shared fixtures for the kernel benchmarks.

use std::sync::Arc;

use gluelab_core::diskmetric::{build_disk, DiskInstance, DiskParams};
use gluelab_core::SeedRecord;

/// Unit-area, unit-perimeter walk-mode disk with about `n` grid points.
pub fn fixture_disk(n: usize) -> Arc<DiskInstance> {
    Arc::new(build_disk(&DiskParams::fixed(1.0, 1.0, n, SeedRecord::new(42, 0))).expect("fixture disk"))
}
