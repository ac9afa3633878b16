//! Behavior profiles: one conditional distribution per information set.
//!
//! Coordinates are laid out node by node, parent configuration by parent
//! configuration, value by value. Blocks whose distribution is fixed by the
//! game (Nature, pinned padding rows, single-action rows) are constants; the
//! remaining coordinates are the free variables every solver works with.

use crate::error::{Error, Result};
use crate::model::{GNet, InfoSet, NodeId, PlayerId};

/// Tolerance on block sums of a profile.
pub const BLOCK_SUM_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub enum BlockKind {
    /// Distribution fixed by the game.
    Fixed,
    /// Chosen by the owner over `available` values (two or more).
    Free { available: Vec<usize> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub info: InfoSet,
    pub owner: PlayerId,
    pub start: usize,
    pub len: usize,
    pub kind: BlockKind,
}

impl Block {
    pub fn is_free(&self) -> bool {
        matches!(self.kind, BlockKind::Free { .. })
    }

    pub fn available(&self) -> &[usize] {
        match &self.kind {
            BlockKind::Free { available } => available,
            BlockKind::Fixed => &[],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    pub values: Vec<f64>,
}

impl Profile {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct Layout {
    pub blocks: Vec<Block>,
    pub node_offsets: Vec<usize>,
    pub dim: usize,
    /// Fixed values; free blocks hold the uniform distribution over available values.
    template: Vec<f64>,
    /// Coordinate index of each free variable, in block order.
    pub free: Vec<usize>,
    coord_to_free: Vec<Option<usize>>,
    /// Indices into `blocks` of the free blocks.
    pub free_blocks: Vec<usize>,
    /// Block index of each coordinate.
    coord_block: Vec<usize>,
}

impl Layout {
    pub fn new(net: &GNet) -> Layout {
        let mut blocks = Vec::new();
        let mut node_offsets = Vec::with_capacity(net.nodes.len());
        let mut template = Vec::new();
        let mut offset = 0;
        for (k, node) in net.nodes.iter().enumerate() {
            let id = NodeId(k);
            node_offsets.push(offset);
            let dom = node.domain.len();
            let cpt = net.cpt(id);
            for config in 0..net.parent_configs(id) {
                let fixed_row = cpt.and_then(|c| c.rows.get(config)).and_then(|r| r.clone());
                let (kind, row) = match (node.player, fixed_row) {
                    (_, Some(row)) => (BlockKind::Fixed, row),
                    (PlayerId::Nature, None) => (BlockKind::Fixed, vec![1.0 / dom as f64; dom]),
                    (PlayerId::Agent(_), None) => {
                        let available = net.available_values(id);
                        let mut row = vec![0.0; dom];
                        for &v in &available {
                            row[v] = 1.0 / available.len() as f64;
                        }
                        if available.len() >= 2 {
                            (BlockKind::Free { available }, row)
                        } else {
                            (BlockKind::Fixed, row)
                        }
                    }
                };
                blocks.push(Block { info: InfoSet { node: id, config }, owner: node.player, start: offset, len: dom, kind });
                template.extend(row);
                offset += dom;
            }
        }
        let mut free = Vec::new();
        let mut free_blocks = Vec::new();
        let mut coord_block = vec![0; offset];
        for (b, block) in blocks.iter().enumerate() {
            coord_block[block.start..block.start + block.len].fill(b);
            if let BlockKind::Free { available } = &block.kind {
                free_blocks.push(b);
                free.extend(available.iter().map(|&v| block.start + v));
            }
        }
        let mut coord_to_free = vec![None; offset];
        for (i, &c) in free.iter().enumerate() {
            coord_to_free[c] = Some(i);
        }
        Layout { blocks, node_offsets, dim: offset, template, free, coord_to_free, free_blocks, coord_block }
    }

    pub fn coord(&self, net: &GNet, node: NodeId, config: usize, value: usize) -> usize {
        self.node_offsets[node.0] + config * net.domain_size(node) + value
    }

    /// Coordinate of `p(x_k | x_PP(k))` used by node `k` in state `x`.
    pub fn coord_in_state(&self, net: &GNet, node: NodeId, state: &[usize]) -> usize {
        self.coord(net, node, net.parent_config_of(node, state), state[node.0])
    }

    pub fn free_index(&self, coord: usize) -> Option<usize> {
        self.coord_to_free[coord]
    }

    pub fn block_of(&self, coord: usize) -> &Block {
        &self.blocks[self.coord_block[coord]]
    }

    pub fn block_index_of(&self, coord: usize) -> usize {
        self.coord_block[coord]
    }

    pub fn block_for(&self, info: InfoSet) -> Option<usize> {
        self.blocks.iter().position(|b| b.info == info)
    }

    /// The uniform profile `z` over available actions.
    pub fn uniform(&self) -> Profile {
        Profile { values: self.template.clone() }
    }

    pub fn fixed_value(&self, coord: usize) -> f64 {
        self.template[coord]
    }

    pub fn with_free(&self, free: &[f64]) -> Profile {
        let mut values = self.template.clone();
        for (&c, &v) in self.free.iter().zip(free) {
            values[c] = v;
        }
        Profile { values }
    }

    pub fn free_values(&self, p: &Profile) -> Vec<f64> {
        self.free.iter().map(|&c| p.values[c]).collect()
    }

    /// Range (into the free-variable vector) of a free block's variables.
    pub fn free_range(&self, block: usize) -> std::ops::Range<usize> {
        let b = &self.blocks[block];
        let first = self.free_index(b.start + b.available()[0]).expect("free block");
        first..first + b.available().len()
    }

    pub fn check(&self, p: &Profile) -> Result<()> {
        if p.values.len() != self.dim {
            return Err(Error::IncompleteProfile { expected: self.dim, found: p.values.len() });
        }
        for block in &self.blocks {
            let row = &p.values[block.start..block.start + block.len];
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > BLOCK_SUM_TOL || row.iter().any(|v| !v.is_finite() || *v < -BLOCK_SUM_TOL) {
                return Err(Error::IncompleteProfile { expected: self.dim, found: p.values.len() });
            }
        }
        Ok(())
    }

    /// Snap fixed blocks to the game's values, clamp free entries to
    /// `[0, 1]` and renormalize every free block.
    pub fn normalize(&self, p: &mut Profile) {
        for block in &self.blocks {
            let row = &mut p.values[block.start..block.start + block.len];
            match &block.kind {
                BlockKind::Fixed => row.copy_from_slice(&self.template[block.start..block.start + block.len]),
                BlockKind::Free { available } => {
                    let mut sum = 0.0;
                    for (v, x) in row.iter_mut().enumerate() {
                        if available.contains(&v) {
                            *x = x.clamp(0.0, 1.0);
                            sum += *x;
                        } else {
                            *x = 0.0;
                        }
                    }
                    if sum > 0.0 {
                        row.iter_mut().for_each(|x| *x /= sum);
                    } else {
                        for &v in available {
                            row[v] = 1.0 / available.len() as f64;
                        }
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::{beer_quiche, matching_pennies};

    #[test]
    fn beer_quiche_layout() {
        let net = beer_quiche(0.9);
        let layout = Layout::new(&net);
        assert_eq!(layout.blocks.len(), 5);
        assert_eq!(layout.free_blocks.len(), 4);
        assert_eq!(layout.free.len(), 8);
        let z = layout.uniform();
        assert_eq!(z.values[0], 0.9);
        assert!((z.values[1] - 0.1).abs() < 1e-15);
        layout.check(&z).unwrap();
    }

    #[test]
    fn normalize_snaps_and_renormalizes() {
        let net = matching_pennies();
        let layout = Layout::new(&net);
        let mut p = Profile { values: vec![-1e-9, 0.5, 0.2, 0.2] };
        layout.normalize(&mut p);
        assert_eq!(p.values, vec![0.0, 1.0, 0.5, 0.5]);
    }
}
