use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use crate::dsl::{local_order, StageDef, StencilProgram};

/// Offsets into one base input array.
pub type OffsetSet = BTreeSet<Vec<i64>>;

/// Dependency footprint of a stage over the program's input arrays, with
/// locals substituted away (offsets of chained stages add).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Footprint {
    pub per_input: BTreeMap<String, OffsetSet>,
}

impl Footprint {
    fn insert(&mut self, input: &str, offset: Vec<i64>) {
        self.per_input.entry(input.to_string()).or_default().insert(offset);
    }

    pub fn offsets(&self) -> impl Iterator<Item = &Vec<i64>> {
        self.per_input.values().flatten()
    }

    pub fn reach(&self, dims: usize) -> Reach {
        Reach::of(self.offsets(), dims)
    }
}

/// How far a set of offsets extends below (`lo`) and above (`hi`) the centre
/// cell along each dimension. Both are non-negative.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Reach {
    pub lo: Vec<usize>,
    pub hi: Vec<usize>,
}

impl Reach {
    pub fn zero(dims: usize) -> Self {
        Reach { lo: vec![0; dims], hi: vec![0; dims] }
    }

    pub fn of<'a>(offsets: impl IntoIterator<Item = &'a Vec<i64>>, dims: usize) -> Self {
        let mut r = Reach::zero(dims);
        for off in offsets {
            for (d, &o) in off.iter().enumerate().take(dims) {
                if o < 0 {
                    r.lo[d] = r.lo[d].max(o.unsigned_abs() as usize);
                } else {
                    r.hi[d] = r.hi[d].max(o as usize);
                }
            }
        }
        r
    }

    /// Largest distance along the leading (row) dimension.
    pub fn radius(&self) -> usize {
        self.lo.first().copied().unwrap_or(0).max(self.hi.first().copied().unwrap_or(0))
    }

    /// True when every offset from `index` stays inside `extents`.
    pub fn contains(&self, index: &[usize], extents: &[usize]) -> bool {
        index
            .iter()
            .zip(extents)
            .enumerate()
            .all(|(d, (&i, &e))| i >= self.lo[d] && i + self.hi[d] < e)
    }
}

/// Composed footprints of every local and output stage, keyed by target.
pub fn stage_footprints(program: &StencilProgram) -> BTreeMap<String, Footprint> {
    let mut done: BTreeMap<String, Footprint> = BTreeMap::new();
    let order = local_order(program).unwrap_or_else(|_| (0..program.locals.len()).collect());
    for i in order {
        let stage = &program.locals[i];
        let fp = compose(program, stage, &done);
        done.insert(stage.target.clone(), fp);
    }
    for stage in &program.outputs {
        let fp = compose(program, stage, &done);
        done.insert(stage.target.clone(), fp);
    }
    done
}

fn compose(program: &StencilProgram, stage: &StageDef, done: &BTreeMap<String, Footprint>) -> Footprint {
    let mut fp = Footprint::default();
    stage.expr.visit_accesses(&mut |name, offset| {
        if program.input(name).is_some() {
            fp.insert(name, offset.to_vec());
        } else if let Some(inner) = done.get(name) {
            for (input, set) in &inner.per_input {
                for f in set {
                    let sum = offset.iter().zip(f).map(|(a, b)| a + b).collect();
                    fp.insert(input, sum);
                }
            }
        }
    });
    fp
}

/// Signed per-dimension box around the centre cell covering everything a
/// stage touches: its direct accesses, the hulls of locals it reads shifted
/// by each access, and the centre itself. Interior tests and row windows use
/// this rather than the composed footprint, which can cancel a local's
/// offset and hide an out-of-grid read.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Hull {
    pub min: Vec<i64>,
    pub max: Vec<i64>,
}

impl Hull {
    fn centre(dims: usize) -> Self {
        Hull { min: vec![0; dims], max: vec![0; dims] }
    }

    fn cover(&mut self, lo: &[i64], hi: &[i64]) {
        for d in 0..self.min.len() {
            self.min[d] = self.min[d].min(lo[d]);
            self.max[d] = self.max[d].max(hi[d]);
        }
    }

    pub fn reach(&self) -> Reach {
        Reach { lo: self.min.iter().map(|m| m.unsigned_abs() as usize).collect(), hi: self.max.iter().map(|&m| m as usize).collect() }
    }
}

/// Hull of every local and output stage, keyed by target.
pub fn stage_hulls(program: &StencilProgram) -> BTreeMap<String, Hull> {
    let dims = program.dims();
    let mut done: BTreeMap<String, Hull> = BTreeMap::new();
    let order = local_order(program).unwrap_or_else(|_| (0..program.locals.len()).collect());
    let stages: Vec<&StageDef> = order.iter().map(|&i| &program.locals[i]).chain(program.outputs.iter()).collect();
    for stage in stages {
        let mut hull = Hull::centre(dims);
        stage.expr.visit_accesses(&mut |name, offset| match done.get(name) {
            Some(inner) => {
                let lo: Vec<i64> = offset.iter().zip(&inner.min).map(|(o, m)| o + m).collect();
                let hi: Vec<i64> = offset.iter().zip(&inner.max).map(|(o, m)| o + m).collect();
                hull.cover(&lo, &hi);
            }
            None => hull.cover(offset, offset),
        });
        done.insert(stage.target.clone(), hull);
    }
    done
}

/// Offsets a single stage applies to each array it reads directly.
pub fn direct_offsets(stage: &StageDef) -> BTreeMap<String, OffsetSet> {
    let mut m: BTreeMap<String, OffsetSet> = BTreeMap::new();
    stage.expr.visit_accesses(&mut |name, offset| {
        m.entry(name.to_string()).or_default().insert(offset.to_vec());
    });
    m
}
