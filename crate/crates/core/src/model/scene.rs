use std::collections::BTreeMap;

use crate::error::Result;
use crate::model::{Primitive, PrimitiveKind};

/// Ordered primitive collection plus render metadata.
#[derive(Clone, Debug, PartialEq)]
pub struct Scene {
    pub primitives: Vec<Primitive>,
    pub background: [f64; 3],
    pub sh_order: usize,
}

impl Scene {
    pub fn new(sh_order: usize) -> Self {
        Scene {
            primitives: Vec::new(),
            background: [0.0; 3],
            sh_order,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.sh_order > 3 {
            return Err(crate::Error::ShOrder(self.sh_order));
        }
        for p in &self.primitives {
            p.validate(self.sh_order)?;
        }
        Ok(())
    }

    pub fn kind_counts(&self) -> BTreeMap<PrimitiveKind, usize> {
        let mut counts = BTreeMap::new();
        for p in &self.primitives {
            *counts.entry(p.kind()).or_insert(0) += 1;
        }
        counts
    }

    pub fn vertex_storage_bytes(&self) -> usize {
        self.primitives.iter().map(Primitive::vertex_storage_bytes).sum()
    }
}
