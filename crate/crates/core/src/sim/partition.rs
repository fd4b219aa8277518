use std::ops::Range;

use serde::Serialize;

use crate::model::Variant;

use super::SimError;

/// Rows owned by one spatial PE group plus the halo rows it holds on each
/// side. Halos are clamped at the grid edges.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Partition {
    pub pe: usize,
    pub lo: usize,
    pub hi: usize,
    pub halo_lo: usize,
    pub halo_hi: usize,
}

impl Partition {
    pub fn owned(&self) -> Range<usize> {
        self.lo..self.hi
    }

    pub fn resident(&self) -> Range<usize> {
        self.lo - self.halo_lo..self.hi + self.halo_hi
    }

    pub fn owned_rows(&self) -> usize {
        self.hi - self.lo
    }
}

/// Splits `rows` into `k` contiguous blocks; the first `rows % k` blocks get
/// one extra row.
pub fn partition_rows(rows: usize, k: usize, halo_per_side: usize) -> Vec<Partition> {
    let base = rows / k;
    let extra = rows % k;
    let mut lo = 0;
    (0..k)
        .map(|pe| {
            let hi = lo + base + usize::from(pe < extra);
            let p = Partition { pe, lo, hi, halo_lo: halo_per_side.min(lo), halo_hi: halo_per_side.min(rows - hi) };
            lo = hi;
            p
        })
        .collect()
}

/// Halo rows per side a PE group loads before its first iteration.
pub fn preload_halo(variant: Variant, radius: usize, s: usize, iterations: usize) -> usize {
    match variant {
        Variant::Temporal => 0,
        Variant::SpatialR | Variant::HybridR => radius * iterations,
        Variant::SpatialS => radius,
        Variant::HybridS => radius * s.min(iterations),
    }
}

/// Rejects partitionings whose halo would consume a whole partition.
/// A single group has no neighbours and is always valid.
pub fn check_partition(variant: Variant, rows: usize, radius: usize, k: usize, s: usize, iterations: usize) -> Result<(), SimError> {
    if k == 0 || s == 0 {
        return Err(SimError::Unsupported("k and s must be at least 1".into()));
    }
    if k > rows {
        return Err(SimError::InvalidPartition { variant, k, s, rows_per_pe: 0, halo_rows: 0 });
    }
    if k == 1 || variant == Variant::Temporal {
        return Ok(());
    }
    let halo = 2 * radius;
    let halo_rows = match variant {
        Variant::SpatialR | Variant::HybridR => halo * iterations,
        Variant::SpatialS => halo,
        Variant::HybridS => halo * s,
        Variant::Temporal => 0,
    };
    let rows_per_pe = rows.div_ceil(k);
    if halo_rows >= rows_per_pe {
        return Err(SimError::InvalidPartition { variant, k, s, rows_per_pe, halo_rows });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partitions_tile_rows() {
        let parts = partition_rows(10, 3, 2);
        let owned: Vec<_> = parts.iter().map(|p| p.owned()).collect();
        assert_eq!(owned, vec![0..4, 4..7, 7..10]);
        assert_eq!(parts[0].resident(), 0..6);
        assert_eq!(parts[1].resident(), 2..9);
        assert_eq!(parts[2].resident(), 5..10);
    }

    #[test]
    fn validity() {
        assert!(check_partition(Variant::SpatialS, 16, 1, 2, 1, 8).is_ok());
        assert!(check_partition(Variant::SpatialR, 16, 1, 2, 1, 4).is_err());
        assert!(check_partition(Variant::SpatialR, 16, 1, 2, 1, 3).is_ok());
        assert!(check_partition(Variant::HybridS, 16, 1, 2, 4, 8).is_err());
        assert!(check_partition(Variant::HybridR, 16, 1, 1, 4, 64).is_ok());
    }
}
